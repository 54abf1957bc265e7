//! Period map, periodic-orbit search, and steady states.
//!
//! The period map `S` integrates one forcing period from a fixed phase
//! `t0`. A periodic orbit is a fixed point of `S`, found by Picard
//! iteration or by Anderson acceleration of it. Non-convergence is
//! reported in the result, never hidden.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, EnergyTrace};
use crate::error::OrbitError;
use crate::fields::State;
use crate::grid::Grid;
use crate::physics::{PhysicsParams, Source};
use crate::stepper::Stepper;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Acceleration {
    #[default]
    Picard,
    Anderson,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallMode {
    #[default]
    Gronwall,
    Off,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitConfig {
    /// Forcing period `T*`; must be a whole number of steps.
    pub period: f64,
    /// Stop once `||S(X) - X||` is at most this (X0 norm).
    pub tol: f64,
    pub max_iters: usize,
    pub acceleration: Acceleration,
    /// Anderson history depth `m`.
    pub depth: usize,
    pub ball_radius: BallMode,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        OrbitConfig {
            period: 1.0,
            tol: 1e-8,
            max_iters: 200,
            acceleration: Acceleration::Picard,
            depth: 5,
            ball_radius: BallMode::Gronwall,
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<(), OrbitError> {
        let mut errs = Vec::new();
        if !(self.period > 0.0 && self.period.is_finite()) {
            errs.push(format!("period must be positive, got {}", self.period));
        }
        if !(self.tol > 0.0) {
            errs.push(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iters == 0 {
            errs.push("max_iters must be at least 1".to_string());
        }
        if self.acceleration == Acceleration::Anderson && self.depth == 0 {
            errs.push("anderson depth must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(OrbitError::Config(errs.join("; ")))
        }
    }
}

/// Number of steps in one period, or an error if `period / dt` is not an
/// integer to relative precision `1e-9`.
pub fn steps_per_period(grid: &Grid, period: f64) -> Result<usize, OrbitError> {
    let ratio = period / grid.dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n {
        return Err(OrbitError::NonIntegerPeriod { period, dt: grid.dt });
    }
    Ok(n as usize)
}

/// `S(X)`: the state one period after `x` (time stamp `x.t + period`),
/// with the trace of that period.
pub fn period_map(
    stepper: &mut Stepper,
    x: &State,
    source: &dyn Source,
    period: f64,
) -> Result<(State, EnergyTrace), OrbitError> {
    let n = steps_per_period(stepper.grid(), period)?;
    let t_end = x.t + n as f64 * stepper.grid().dt;
    Ok(stepper.run(x, source, t_end)?)
}

/// Gronwall ball tracking along the iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct BallMonitor {
    pub radius: f64,
    /// `||X_k||` for every iterate, starting with the initial guess.
    pub iterate_norms: Vec<f64>,
}

impl BallMonitor {
    /// Once an iterate lies inside the ball, every later one does too.
    pub fn stays_inside(&self) -> bool {
        match self.iterate_norms.iter().position(|n| *n <= self.radius) {
            Some(first) => self.iterate_norms[first..].iter().all(|n| *n <= self.radius),
            None => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OrbitResult {
    /// Last iterate `X`, with time stamp `t0`.
    pub state: State,
    pub converged: bool,
    /// `||S(X_k) - X_k||` per iteration.
    pub residual_history: Vec<f64>,
    /// Trace of the period started from `state`.
    pub energy_trace_final_period: EnergyTrace,
    pub ball: Option<BallMonitor>,
    /// Largest relative violation of the Gronwall envelope over all
    /// simulated periods (nonpositive when the envelope holds).
    pub gronwall_violation: f64,
}

impl OrbitResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }

    /// One `key: value` line per item, for reports.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "converged: {}\niterations: {}\nfinal_residual: {:e}\ngronwall_violation: {:e}\n",
            self.converged,
            self.residual_history.len(),
            self.final_residual(),
            self.gronwall_violation
        );
        if let Some(b) = &self.ball {
            s += &format!("ball_radius: {:e}\nball_invariant: {}\n", b.radius, b.stays_inside());
        }
        s
    }

    pub fn write_residual_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,residual")?;
        for (i, r) in self.residual_history.iter().enumerate() {
            writeln!(out, "{},{r:?}", i + 1)?;
        }
        Ok(())
    }
}

/// Smallest nonzero eigenvalue of `-L` over the three components: the
/// first horizontal Fourier mode, the first vertical Neumann mode, and the
/// horizontally uniform `(T, rho)` operator in its energy inner product.
pub fn poincare_constant(grid: &Grid) -> f64 {
    use std::f64::consts::PI;
    let horizontal = 4.0 * PI * PI;
    let dz = grid.dz;
    let neumann = 4.0 / (dz * dz) * (0.5 * PI * dz).sin().powi(2);
    let n = grid.nz + 1;
    let nz = grid.nz;
    let a = 1.0 / (dz * dz);
    // -L on the uniform mode, rows already weighted by the inner product.
    let mut m = DMatrix::<f64>::zeros(n, n);
    for k in 0..nz - 1 {
        m[(k, k + 1)] -= a * dz;
        m[(k, k)] += a * dz;
        if k > 0 {
            m[(k, k - 1)] -= a * dz;
            m[(k, k)] += a * dz;
        }
    }
    let top = nz - 1;
    m[(top, top - 1)] = -4.0 * a / 3.0 * dz;
    m[(top, top)] = 4.0 * a * dz;
    m[(top, nz)] = -8.0 * a / 3.0 * dz;
    m[(nz, nz - 2)] = 1.0 / (3.0 * dz);
    m[(nz, nz - 1)] = -3.0 / dz;
    m[(nz, nz)] = 8.0 / (3.0 * dz);
    let sym = (&m + m.transpose()) * 0.5;
    let w: Vec<f64> = (0..n).map(|k| if k < nz { dz.sqrt().recip() } else { 1.0 }).collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| sym[(i, j)] * w[i] * w[j]);
    let eig = scaled.symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |acc, e| acc.max(e.abs()));
    let coupled = eig
        .iter()
        .copied()
        .filter(|e| *e > 1e-9 * max)
        .fold(f64::INFINITY, f64::min);
    horizontal.min(neumann).min(coupled)
}

/// Radius `R` of the absorbing ball from `y' <= -lambda y + Phi`:
/// `R^2 = int_0^{T*} Phi / (1 - exp(-lambda T*))`, with the integral taken
/// by the trapezoid rule on the time grid.
pub fn gronwall_ball_radius(grid: &Grid, source: &dyn Source, params: &PhysicsParams, period: f64) -> f64 {
    if params.q0 == 0.0 {
        let zero = (0..=8).all(|i| source.eval(grid, period * i as f64 / 8.0).norm_sq(grid) == 0.0);
        if zero {
            return 0.0;
        }
    }
    let n = (period / grid.dt).round().max(1.0) as usize;
    let times: Vec<f64> = (0..=n).map(|i| period * i as f64 / n as f64).collect();
    let phi = diagnostics::phi_series(grid, source, params, &times);
    let h = period / n as f64;
    let integral: f64 = phi.windows(2).map(|w| 0.5 * h * (w[0] + w[1])).sum();
    let lambda = poincare_constant(grid);
    (integral / (1.0 - (-lambda * period).exp())).sqrt()
}

/// Solves `min |f - dF gamma|` for Anderson mixing.
fn least_squares(df: &[Vec<f64>], f: &[f64]) -> Option<DVector<f64>> {
    let n = f.len();
    let m = df.len();
    let a = DMatrix::from_fn(n, m, |i, j| df[j][i]);
    let b = DVector::from_column_slice(f);
    a.svd(true, true).solve(&b, 1e-12).ok()
}

/// Fixed point of the period map by Picard or Anderson iteration.
pub fn find_periodic(
    stepper: &mut Stepper,
    x0: &State,
    source: &dyn Source,
    config: &OrbitConfig,
) -> Result<OrbitResult, OrbitError> {
    config.validate()?;
    steps_per_period(stepper.grid(), config.period)?;
    let grid = stepper.grid().clone();
    let params = stepper.params().clone();
    let t0 = x0.t;
    let ball = match config.ball_radius {
        BallMode::Gronwall => Some(BallMonitor {
            radius: gronwall_ball_radius(&grid, source, &params, config.period),
            iterate_norms: Vec::new(),
        }),
        BallMode::Off => None,
    };
    let mut result = OrbitResult {
        state: x0.clone(),
        converged: false,
        residual_history: Vec::new(),
        energy_trace_final_period: EnergyTrace::default(),
        ball,
        gronwall_violation: f64::NEG_INFINITY,
    };

    let mut x = x0.clone();
    let mut dfs: Vec<Vec<f64>> = Vec::new();
    let mut dgs: Vec<Vec<f64>> = Vec::new();
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut best = f64::INFINITY;
    // Last plain Picard image, the fallback when an extrapolated iterate
    // cannot be integrated (e.g. it trips the reaction guard).
    let mut fallback: Option<State> = None;
    let mut iters = 0;
    while iters < config.max_iters {
        x.t = t0;
        let (mut sx, trace) = match period_map(stepper, &x, source, config.period) {
            Ok(r) => r,
            Err(OrbitError::Step(_)) if fallback.is_some() => {
                x = fallback.take().expect("checked");
                dfs.clear();
                dgs.clear();
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        iters += 1;
        if let Some(b) = result.ball.as_mut() {
            b.iterate_norms.push(x.norm_sq(&grid).sqrt());
        }
        sx.t = t0;
        let times: Vec<f64> = trace.records.iter().map(|r| r.t).collect();
        let phi = diagnostics::phi_series(&grid, source, &params, &times);
        let env = diagnostics::gronwall_envelope_check(&trace, &phi).expect("phi matches trace");
        result.gronwall_violation = result.gronwall_violation.max(env.max_relative);

        let r = sx.distance(&x, &grid);
        result.residual_history.push(r);
        result.energy_trace_final_period = trace;
        result.state = x.clone();
        if r <= config.tol {
            result.converged = true;
            break;
        }
        if !r.is_finite() {
            break;
        }
        x = match config.acceleration {
            Acceleration::Picard => sx,
            Acceleration::Anderson => {
                let xv = x.to_weighted_vec(&grid);
                let g = sx.to_weighted_vec(&grid);
                let f: Vec<f64> = g.iter().zip(&xv).map(|(a, b)| a - b).collect();
                // Restart the history if the residual jumps well above the best seen.
                if r > 10.0 * best {
                    dfs.clear();
                    dgs.clear();
                    prev = None;
                }
                best = best.min(r);
                if let Some((pf, pg)) = prev.take() {
                    dfs.push(f.iter().zip(&pf).map(|(a, b)| a - b).collect());
                    dgs.push(g.iter().zip(&pg).map(|(a, b)| a - b).collect());
                    if dfs.len() > config.depth {
                        dfs.remove(0);
                        dgs.remove(0);
                    }
                }
                let mut next = g.clone();
                if !dfs.is_empty() {
                    if let Some(gamma) = least_squares(&dfs, &f) {
                        for (j, dg) in dgs.iter().enumerate() {
                            for (n, d) in next.iter_mut().zip(dg) {
                                *n -= gamma[j] * d;
                            }
                        }
                    }
                }
                prev = Some((f, g));
                let mixed = State::from_weighted_vec(&grid, &next, t0);
                if mixed.is_finite() {
                    fallback = Some(sx);
                    mixed
                } else {
                    sx
                }
            }
        };
    }
    Ok(result)
}

/// Options for [`find_steady_state`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyConfig {
    /// Integration chunk `Delta` between convergence checks.
    pub chunk: f64,
    /// Stop once `||X(t + Delta) - X(t)|| / Delta` is at most this.
    pub tol: f64,
    pub max_time: f64,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        SteadyConfig {
            chunk: 0.5,
            tol: 1e-8,
            max_time: 200.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadyResult {
    pub state: State,
    pub converged: bool,
    /// `||X(t + Delta) - X(t)|| / Delta` per chunk.
    pub rate_history: Vec<f64>,
    /// X0 norm of the semi-discrete right-hand side at `state`.
    pub tendency_residual: f64,
}

/// Integrates with time-independent forcing until the state stops moving.
pub fn find_steady_state(
    stepper: &mut Stepper,
    x0: &State,
    source: &dyn Source,
    config: &SteadyConfig,
) -> Result<SteadyResult, OrbitError> {
    if !source.is_constant() {
        return Err(OrbitError::TimeDependentForcing);
    }
    if !(config.chunk > 0.0 && config.tol > 0.0 && config.max_time > 0.0) {
        return Err(OrbitError::Config("chunk, tol and max_time must be positive".into()));
    }
    let grid = stepper.grid().clone();
    let n = (config.chunk / grid.dt).round().max(1.0) as usize;
    let delta = n as f64 * grid.dt;
    let mut x = x0.clone();
    let mut rates = Vec::new();
    let mut converged = false;
    let mut elapsed = 0.0;
    while elapsed < config.max_time {
        let (next, _) = stepper.run(&x, source, x.t + delta)?;
        let rate = next.distance(&x, &grid) / delta;
        rates.push(rate);
        x = next;
        elapsed += delta;
        if rate <= config.tol {
            converged = true;
            break;
        }
    }
    let tendency_residual = stepper.tendency(&x, source).norm_sq(&grid).sqrt();
    Ok(SteadyResult {
        state: x,
        converged,
        rate_history: rates,
        tendency_residual,
    })
}
