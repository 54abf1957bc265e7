//! Surface energy balance: co-albedo law, solar field, reaction term, and
//! the periodic external forcing.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::PhysicsError;
use crate::grid::Grid;

/// Parameters of the surface radiation balance.
///
/// The solar field is `Q(x, y) = q0 (1 + q1 cos(2 pi y))`; `q1 = 0` gives a
/// constant field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsParams {
    pub beta1: f64,
    pub beta2: f64,
    pub rho_ref: f64,
    pub q0: f64,
    pub q1: f64,
}

fn default_rho_ref() -> f64 {
    263.0
}

fn default_q0() -> f64 {
    1.0
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams {
            beta1: 0.3,
            beta2: 0.7,
            rho_ref: default_rho_ref(),
            q0: default_q0(),
            q1: 0.0,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.beta1 > 0.0 && self.beta1 < self.beta2 && self.beta2.is_finite()) {
            return Err(PhysicsError::CoAlbedo {
                beta1: self.beta1,
                beta2: self.beta2,
            });
        }
        // q0 = 0 is accepted so that the pure transport-diffusion system can
        // be run with the same machinery.
        if !(self.q0 >= 0.0 && self.q0.is_finite() && self.q1.abs() < 1.0) {
            return Err(PhysicsError::Solar {
                q0: self.q0,
                q1: self.q1,
            });
        }
        if !self.rho_ref.is_finite() {
            return Err(PhysicsError::CoAlbedo {
                beta1: self.beta1,
                beta2: self.beta2,
            });
        }
        Ok(())
    }

    pub fn solar(&self, y: f64) -> f64 {
        self.q0 * (1.0 + self.q1 * (2.0 * PI * y).cos())
    }

    pub fn solar_field(&self, grid: &Grid) -> Vec<f64> {
        (0..grid.n_h()).map(|m| self.solar(grid.y(m / grid.nx))).collect()
    }

    pub fn q_max(&self) -> f64 {
        self.q0 * (1.0 + self.q1.abs())
    }
}

/// Co-albedo `beta(rho)`, a smooth monotone switch between `beta1` (ice) and
/// `beta2` (ice free) centered at `rho_ref`.
#[inline]
pub fn coalbedo(rho: f64, params: &PhysicsParams) -> f64 {
    // Written as mean + half-width * tanh so that the midpoint is exact.
    let (b1, b2) = (params.beta1, params.beta2);
    0.5 * ((b1 + b2) + (b2 - b1) * (rho - params.rho_ref).tanh())
}

/// Absorbed part `Q beta(rho)` of the reaction on `G`.
pub fn absorbed(grid: &Grid, rho: &[f64], params: &PhysicsParams) -> Vec<f64> {
    rho.iter()
        .enumerate()
        .map(|(m, &r)| params.solar(grid.y(m / grid.nx)) * coalbedo(r, params))
        .collect()
}

/// Outgoing radiation `|rho|^3 rho`.
#[inline]
pub fn emitted(rho: f64) -> f64 {
    rho.abs().powi(3) * rho
}

/// `R(x, rho) = Q(x) beta(rho) - |rho|^3 rho`, pointwise.
pub fn reaction(grid: &Grid, rho: &[f64], params: &PhysicsParams) -> Vec<f64> {
    absorbed(grid, rho, params)
        .into_iter()
        .zip(rho)
        .map(|(a, &r)| a - emitted(r))
        .collect()
}

/// Component a forcing mode contributes to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    F1x,
    F1y,
    F2,
    F3,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    #[default]
    Cos,
    Sin,
}

impl Trig {
    #[inline]
    fn apply(self, arg: f64) -> f64 {
        match self {
            Trig::Cos => arg.cos(),
            Trig::Sin => arg.sin(),
        }
    }
}

/// One separable term
/// `amplitude * time(2 pi n t / T*) * space(2 pi (kx x + ky y)) * P(z)`,
/// where `P` is a polynomial in `z` given by its coefficients (ignored for
/// `f3`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub field: Target,
    pub amplitude: f64,
    #[serde(default)]
    pub harmonic: u32,
    #[serde(default)]
    pub time: Trig,
    #[serde(default)]
    pub kx: i64,
    #[serde(default)]
    pub ky: i64,
    #[serde(default)]
    pub space: Trig,
    #[serde(default = "default_profile")]
    pub profile: Vec<f64>,
}

fn default_profile() -> Vec<f64> {
    vec![1.0]
}

impl ForcingMode {
    pub fn new(field: Target, amplitude: f64) -> Self {
        ForcingMode {
            field,
            amplitude,
            harmonic: 0,
            time: Trig::Cos,
            kx: 0,
            ky: 0,
            space: Trig::Cos,
            profile: default_profile(),
        }
    }

    pub fn harmonic(mut self, n: u32, time: Trig) -> Self {
        self.harmonic = n;
        self.time = time;
        self
    }

    pub fn wave(mut self, kx: i64, ky: i64, space: Trig) -> Self {
        self.kx = kx;
        self.ky = ky;
        self.space = space;
        self
    }

    pub fn profile(mut self, coeffs: Vec<f64>) -> Self {
        self.profile = coeffs;
        self
    }

    fn is_constant(&self) -> bool {
        self.amplitude == 0.0 || (self.harmonic == 0 && self.time == Trig::Cos)
    }

    fn is_zero(&self) -> bool {
        self.amplitude == 0.0
            || (self.harmonic == 0 && self.time == Trig::Sin)
            || (self.kx == 0 && self.ky == 0 && self.space == Trig::Sin)
            || (self.field != Target::F3 && self.profile.iter().all(|c| *c == 0.0))
    }
}

/// Forcing fields at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ForcingFields {
    pub f1: [Vec<f64>; 2],
    pub f2: Vec<f64>,
    pub f3: Vec<f64>,
}

impl ForcingFields {
    pub fn zeros(grid: &Grid) -> Self {
        ForcingFields {
            f1: [vec![0.0; grid.n_3d()], vec![0.0; grid.n_3d()]],
            f2: vec![0.0; grid.n_3d()],
            f3: vec![0.0; grid.n_h()],
        }
    }

    /// `||f1||^2 + ||f2||^2 + ||f3||^2` with midpoint quadrature.
    pub fn norm_sq(&self, grid: &Grid) -> f64 {
        let sq = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>();
        grid.cell_volume() * (sq(&self.f1[0]) + sq(&self.f1[1]) + sq(&self.f2))
            + grid.cell_area() * sq(&self.f3)
    }
}

/// Anything that supplies `(f1, f2, f3)` as a function of time.
pub trait Source: Sync {
    fn eval(&self, grid: &Grid, t: f64) -> ForcingFields;

    /// True if `eval` does not depend on `t`.
    fn is_constant(&self) -> bool {
        false
    }
}

/// Wraps a closure as a [`Source`].
pub struct FnSource<F>(pub F);

impl<F> Source for FnSource<F>
where
    F: Fn(&Grid, f64) -> ForcingFields + Sync,
{
    fn eval(&self, grid: &Grid, t: f64) -> ForcingFields {
        (self.0)(grid, t)
    }
}

/// `T*`-periodic forcing given as a finite sum of separable modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    pub period: f64,
    #[serde(default)]
    pub modes: Vec<ForcingMode>,
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::zero(1.0)
    }
}

impl Forcing {
    pub fn zero(period: f64) -> Self {
        Forcing {
            period,
            modes: Vec::new(),
        }
    }

    pub fn with_mode(mut self, mode: ForcingMode) -> Self {
        self.modes.push(mode);
        self
    }

    /// Every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.modes.iter_mut().for_each(|m| m.amplitude *= factor);
        out
    }

    pub fn validate(&self) -> Result<(), PhysicsError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(PhysicsError::Period(self.period));
        }
        for (index, m) in self.modes.iter().enumerate() {
            let fail = |reason: &str| PhysicsError::Mode {
                index,
                reason: reason.to_string(),
            };
            if !m.amplitude.is_finite() {
                return Err(fail("amplitude must be finite"));
            }
            if m.profile.is_empty() || m.profile.iter().any(|c| !c.is_finite()) {
                return Err(fail("profile needs at least one finite coefficient"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(ForcingMode::is_zero)
    }

    /// Time factors of every mode at `t`. The phase is reduced modulo the
    /// period first so that `t` and `t + T*` give identical bits.
    fn time_factors(&self, t: f64) -> Vec<f64> {
        let phase = t.rem_euclid(self.period) / self.period;
        self.modes
            .iter()
            .map(|m| m.time.apply(2.0 * PI * m.harmonic as f64 * phase))
            .collect()
    }
}

/// Evaluates the configured mode sum at time `t`.
pub fn eval_forcing(forcing: &Forcing, grid: &Grid, t: f64) -> ForcingFields {
    let mut out = ForcingFields::zeros(grid);
    let nh = grid.n_h();
    for (mode, tf) in forcing.modes.iter().zip(forcing.time_factors(t)) {
        let a = mode.amplitude * tf;
        if a == 0.0 {
            continue;
        }
        let horiz: Vec<f64> = (0..nh)
            .map(|m| {
                let (x, y) = (grid.x(m % grid.nx), grid.y(m / grid.nx));
                a * mode.space.apply(2.0 * PI * (mode.kx as f64 * x + mode.ky as f64 * y))
            })
            .collect();
        let dst = match mode.field {
            Target::F3 => {
                out.f3.iter_mut().zip(&horiz).for_each(|(o, h)| *o += h);
                continue;
            }
            Target::F1x => &mut out.f1[0],
            Target::F1y => &mut out.f1[1],
            Target::F2 => &mut out.f2,
        };
        for (k, &z) in grid.z_levels.iter().enumerate() {
            let p = mode.profile.iter().rev().fold(0.0, |acc, c| acc * z + c);
            for m in 0..nh {
                dst[k * nh + m] += p * horiz[m];
            }
        }
    }
    out
}

impl Source for Forcing {
    fn eval(&self, grid: &Grid, t: f64) -> ForcingFields {
        eval_forcing(self, grid, t)
    }

    fn is_constant(&self) -> bool {
        self.modes.iter().all(ForcingMode::is_constant)
    }
}
