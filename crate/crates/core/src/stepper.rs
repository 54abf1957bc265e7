//! IMEX time stepping of the coupled system.
//!
//! Diffusion, including the surface flux that couples the temperature column
//! to `rho`, is implicit; advection, the hydrostatic term, radiation and
//! forcing are explicit. The implicit part is diagonal in the horizontal
//! Fourier modes, so each step is one small banded solve per mode: a
//! tridiagonal system for each velocity component and a joint
//! `(T column, rho)` system with one extra subdiagonal from the surface
//! flux stencil.
//!
//! Writing `L` for the linear operator and `N` for the explicit tendency,
//!
//! * imex-euler: `(I - dt L) u1 = u0 + dt N(u0)`
//! * imex-cnab2: `(I - dt/2 L) u1 = (I + dt/2 L) u0 + dt (3/2 N(u0) - 1/2 N(u-1))`
//!
//! followed by the barotropic projection of `v`, which commutes with `L`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::banded::{Band, BandLu};
use crate::diagnostics::{EnergyRecord, EnergyTrace};
use crate::error::StepError;
use crate::fields::{self, State};
use crate::grid::Grid;
use crate::physics::{self, PhysicsParams, Source};

type C = Complex64;

/// Largest acceptable relative residual of a per-mode solve.
const SOLVE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "imex-euler")]
    ImexEuler,
    #[default]
    #[serde(rename = "imex-cnab2")]
    ImexCnab2,
}

impl Scheme {
    pub fn order(self) -> u32 {
        match self {
            Scheme::ImexEuler => 1,
            Scheme::ImexCnab2 => 2,
        }
    }
}

/// Time-stepping options. The step size itself lives on the [`Grid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub scheme: Scheme,
    /// Apply the 2/3 rule to every explicit tendency.
    pub dealias: bool,
    /// Abort once any of `||v||`, `||T||`, `||rho||` exceeds this.
    pub blowup_threshold: f64,
    /// Include the transport terms (test hook; the linear regime turns it off).
    pub advection: bool,
    /// Include `Q beta(rho) - |rho|^3 rho` (test hook, as above).
    pub reaction: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        StepperConfig {
            scheme: Scheme::ImexCnab2,
            dealias: true,
            blowup_threshold: 1e6,
            advection: true,
            reaction: true,
        }
    }
}

impl StepperConfig {
    pub fn euler() -> Self {
        StepperConfig {
            scheme: Scheme::ImexEuler,
            ..Self::default()
        }
    }

    /// Linear regime: no advection, no radiation.
    pub fn linear(self) -> Self {
        StepperConfig {
            advection: false,
            reaction: false,
            ..self
        }
    }
}

/// `grad_H theta` with `theta(z) = int_0^z T`.
pub fn hydrostatic_tendency(grid: &Grid, temp: &[f64]) -> [Vec<f64>; 2] {
    grid.gradient_h(&fields::vertical_integral(grid, temp))
}

/// `(||grad v||^2, ||grad T||^2, ||grad_H rho||^2)` of a state, with the
/// vertical differences and surface closure used by the implicit operator.
/// Their sum is the dissipation `-<L u, u>`.
pub fn gradient_energies(grid: &Grid, state: &State) -> (f64, f64, f64) {
    let lam: Vec<f64> = (0..grid.n_h()).map(|m| grid.laplacian_symbol(m)).collect();
    let u = Spec {
        v: [grid.forward(&state.v[0]), grid.forward(&state.v[1])],
        temp: grid.forward(&state.temp),
        rho: grid.forward(&state.rho),
    };
    spectral_gradient_energies(grid, &lam, &u)
}

#[inline]
fn spectral_flux(grid: &Grid, u: &Spec, m: usize) -> C {
    let (nh, nz) = (grid.n_h(), grid.nz);
    (8.0 * u.rho[m] - 9.0 * u.temp[(nz - 1) * nh + m] + u.temp[(nz - 2) * nh + m]) / (3.0 * grid.dz)
}

fn spectral_gradient_energies(grid: &Grid, lam: &[f64], u: &Spec) -> (f64, f64, f64) {
    let (nh, nz, dz) = (grid.n_h(), grid.nz, grid.dz);
    let column = |x: &[C]| -> f64 {
        let mut s = 0.0;
        for k in 0..nz {
            for m in 0..nh {
                s += dz * lam[m] * x[k * nh + m].norm_sqr();
                if k + 1 < nz {
                    s += (x[(k + 1) * nh + m] - x[k * nh + m]).norm_sqr() / dz;
                }
            }
        }
        s
    };
    let gv = column(&u.v[0]) + column(&u.v[1]);
    let mut gt = column(&u.temp);
    let mut gr = 0.0;
    for m in 0..nh {
        let a = u.rho[m] - u.temp[(nz - 1) * nh + m];
        gt += (spectral_flux(grid, u, m) * a.conj()).re;
        gr += lam[m] * u.rho[m].norm_sqr();
    }
    (gv, gt, gr)
}

/// State in horizontal spectral space, same level-major layout.
#[derive(Clone, Debug)]
struct Spec {
    v: [Vec<C>; 2],
    temp: Vec<C>,
    rho: Vec<C>,
}

impl Spec {
    fn zip_map(&self, other: &Spec, f: impl Fn(C, C) -> C) -> Spec {
        let z = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect();
        Spec {
            v: [z(&self.v[0], &other.v[0]), z(&self.v[1], &other.v[1])],
            temp: z(&self.temp, &other.temp),
            rho: z(&self.rho, &other.rho),
        }
    }
}

/// Explicit tendency split into the parts the energy bookkeeping needs:
/// work terms `a*`, the radiative sink `sr`, and transport `b*`.
#[derive(Clone, Debug)]
struct Pieces {
    av: [Vec<C>; 2],
    bv: [Vec<C>; 2],
    at: Vec<C>,
    bt: Vec<C>,
    ar: Vec<C>,
    sr: Vec<C>,
    br: Vec<C>,
}

impl Pieces {
    /// `3/2 self - 1/2 prev`
    fn extrapolate(&self, prev: &Pieces) -> Pieces {
        let e = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| 1.5 * x - 0.5 * y).collect();
        Pieces {
            av: [e(&self.av[0], &prev.av[0]), e(&self.av[1], &prev.av[1])],
            bv: [e(&self.bv[0], &prev.bv[0]), e(&self.bv[1], &prev.bv[1])],
            at: e(&self.at, &prev.at),
            bt: e(&self.bt, &prev.bt),
            ar: e(&self.ar, &prev.ar),
            sr: e(&self.sr, &prev.sr),
            br: e(&self.br, &prev.br),
        }
    }

    fn total(&self) -> Spec {
        let d = |a: &[C], b: &[C]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Spec {
            v: [d(&self.av[0], &self.bv[0]), d(&self.av[1], &self.bv[1])],
            temp: d(&self.at, &self.bt),
            rho: self
                .ar
                .iter()
                .zip(&self.sr)
                .zip(&self.br)
                .map(|((a, s), b)| a - s - b)
                .collect(),
        }
    }
}

/// Per-mode factorizations of `I - c L`.
struct Factors {
    c: f64,
    v: Vec<BandLu>,
    trho: Vec<BandLu>,
}

impl Factors {
    fn new(grid: &Grid, c: f64) -> Result<Self, StepError> {
        let (nz, dz) = (grid.nz, grid.dz);
        let a = c / (dz * dz);
        let mut v = Vec::with_capacity(grid.n_h());
        let mut trho = Vec::with_capacity(grid.n_h());
        let singular = StepError::Solver { residual: f64::INFINITY };
        for m in 0..grid.n_h() {
            let d0 = 1.0 + c * grid.laplacian_symbol(m);

            let mut bv = Band::zeros(nz, 1, 1);
            for k in 0..nz {
                let mut diag = d0;
                if k > 0 {
                    bv.set(k, k - 1, -a);
                    diag += a;
                }
                if k + 1 < nz {
                    bv.set(k, k + 1, -a);
                    diag += a;
                }
                bv.set(k, k, diag);
            }
            v.push(BandLu::new(bv).ok_or(singular.clone())?);

            let mut bt = Band::zeros(nz + 1, 2, 1);
            for k in 0..nz - 1 {
                bt.set(k, k + 1, -a);
                let mut diag = d0 + a;
                if k > 0 {
                    bt.set(k, k - 1, -a);
                    diag += a;
                }
                bt.set(k, k, diag);
            }
            let top = nz - 1;
            bt.set(top, top - 1, -4.0 * a / 3.0);
            bt.set(top, top, d0 + 4.0 * a);
            bt.set(top, nz, -8.0 * a / 3.0);
            bt.set(nz, nz - 2, c / (3.0 * dz));
            bt.set(nz, nz - 1, -3.0 * c / dz);
            bt.set(nz, nz, d0 + 8.0 * c / (3.0 * dz));
            // Weight the temperature rows by dz so the symmetric part is
            // positive definite; elimination without pivoting is then safe.
            for k in 0..nz {
                bt.scale_row(k, dz);
            }
            trho.push(BandLu::new(bt).ok_or(singular.clone())?);
        }
        Ok(Factors { c, v, trho })
    }
}

/// Advances a [`State`] one step at a time. Holds the cached
/// factorizations and, for imex-cnab2, the previous explicit tendency.
pub struct Stepper {
    grid: Grid,
    params: PhysicsParams,
    config: StepperConfig,
    lam: Vec<f64>,
    full: Factors,
    half: Option<Factors>,
    history: Option<Pieces>,
}

impl Stepper {
    pub fn new(grid: &Grid, params: &PhysicsParams, config: &StepperConfig) -> Result<Self, StepError> {
        let full = Factors::new(grid, grid.dt)?;
        let half = match config.scheme {
            Scheme::ImexCnab2 => Some(Factors::new(grid, 0.5 * grid.dt)?),
            Scheme::ImexEuler => None,
        };
        Ok(Stepper {
            grid: grid.clone(),
            params: params.clone(),
            config: config.clone(),
            lam: (0..grid.n_h()).map(|m| grid.laplacian_symbol(m)).collect(),
            full,
            half,
            history: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn config(&self) -> &StepperConfig {
        &self.config
    }

    /// Forgets the stored tendency; the next imex-cnab2 step starts with
    /// imex-euler.
    pub fn reset(&mut self) {
        self.history = None;
    }

    fn to_spec(&self, s: &State) -> Spec {
        let g = &self.grid;
        Spec {
            v: [g.forward(&s.v[0]), g.forward(&s.v[1])],
            temp: g.forward(&s.temp),
            rho: g.forward(&s.rho),
        }
    }

    fn spec_to_state(&self, u: &Spec, t: f64) -> State {
        let g = &self.grid;
        State {
            v: [g.inverse(&u.v[0]), g.inverse(&u.v[1])],
            temp: g.inverse(&u.temp),
            rho: g.inverse(&u.rho),
            t,
        }
    }

    fn pieces(&self, s: &State, source: &dyn Source) -> Pieces {
        let g = &self.grid;
        let f = source.eval(g, s.t);
        let [hx, hy] = hydrostatic_tendency(g, &s.temp);
        let add = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
        let av = [g.forward(&add(&f.f1[0], &hx)), g.forward(&add(&f.f1[1], &hy))];
        let at = g.forward(&f.f2);
        let zero3 = || vec![C::default(); g.n_3d()];
        let zero2 = || vec![C::default(); g.n_h()];
        let (ar, sr) = if self.config.reaction {
            let abs = physics::absorbed(g, &s.rho, &self.params);
            let emi: Vec<f64> = s.rho.iter().map(|r| physics::emitted(*r)).collect();
            (g.forward(&add(&f.f3, &abs)), g.forward(&emi))
        } else {
            (g.forward(&f.f3), zero2())
        };
        let (bv, bt, br) = if self.config.advection {
            let w = fields::compute_w(g, &s.v);
            let [ax, ay] = fields::advection_v(g, &s.v, &w);
            let at = fields::advection_t(g, &s.v, &w, &s.temp);
            let vbar = [fields::vertical_average(g, &s.v[0]), fields::vertical_average(g, &s.v[1])];
            let ar = fields::advection_rho(g, &vbar, &s.rho);
            ([g.forward(&ax), g.forward(&ay)], g.forward(&at), g.forward(&ar))
        } else {
            ([zero3(), zero3()], zero3(), zero2())
        };
        let mut p = Pieces { av, bv, at, bt, ar, sr, br };
        if self.config.dealias {
            let Pieces { av, bv, at, bt, ar, sr, br } = &mut p;
            let [av0, av1] = av;
            let [bv0, bv1] = bv;
            for x in [av0, av1, bv0, bv1, at, bt, ar, sr, br] {
                g.dealias(x);
            }
        }
        p
    }

    /// `L u` in spectral space.
    fn apply_l(&self, u: &Spec) -> Spec {
        let g = &self.grid;
        let (nh, nz, dz) = (g.n_h(), g.nz, g.dz);
        let inv = 1.0 / (dz * dz);
        let neumann = |x: &[C]| -> Vec<C> {
            let mut out = vec![C::default(); x.len()];
            for k in 0..nz {
                for m in 0..nh {
                    let c = x[k * nh + m];
                    let lo = if k == 0 { c } else { x[(k - 1) * nh + m] };
                    let hi = if k + 1 == nz { c } else { x[(k + 1) * nh + m] };
                    out[k * nh + m] = -self.lam[m] * c + (hi - 2.0 * c + lo) * inv;
                }
            }
            out
        };
        let v = [neumann(&u.v[0]), neumann(&u.v[1])];
        let mut temp = vec![C::default(); u.temp.len()];
        let mut rho = vec![C::default(); nh];
        for k in 0..nz {
            for m in 0..nh {
                let c = u.temp[k * nh + m];
                let lo = if k == 0 { c } else { u.temp[(k - 1) * nh + m] };
                let hi = if k + 1 == nz {
                    (8.0 * u.rho[m] - 6.0 * c + lo) / 3.0
                } else {
                    u.temp[(k + 1) * nh + m]
                };
                temp[k * nh + m] = -self.lam[m] * c + (hi - 2.0 * c + lo) * inv;
            }
        }
        for m in 0..nh {
            let flux = self.flux(u, m);
            rho[m] = -self.lam[m] * u.rho[m] - flux;
        }
        Spec { v, temp, rho }
    }

    #[inline]
    fn flux(&self, u: &Spec, m: usize) -> C {
        spectral_flux(&self.grid, u, m)
    }

    fn project(&self, v: &mut [Vec<C>; 2]) {
        let g = &self.grid;
        let (nh, nz) = (g.n_h(), g.nz);
        for m in 0..nh {
            let s = g.div_grad_symbol(m);
            if s == 0.0 {
                continue;
            }
            let mx: C = (0..nz).map(|k| v[0][k * nh + m]).sum::<C>() / nz as f64;
            let my: C = (0..nz).map(|k| v[1][k * nh + m]).sum::<C>() / nz as f64;
            let (gx, gy) = g.gradient_symbol(m);
            let q = -(gx * mx + gy * my) / s;
            for k in 0..nz {
                v[0][k * nh + m] -= gx * q;
                v[1][k * nh + m] -= gy * q;
            }
        }
    }

    fn solve(&self, rhs: &Spec, f: &Factors) -> Result<Spec, StepError> {
        let g = &self.grid;
        let (nh, nz, dz) = (g.n_h(), g.nz, g.dz);
        // per mode: (v_x column, v_y column, [T; rho] column, worst residual)
        type Column = (Vec<C>, Vec<C>, Vec<C>, f64);
        let cols: Vec<Column> = (0..nh)
            .into_par_iter()
            .with_min_len(32)
            .map(|m| {
                let mut scratch = vec![C::default(); 2 * (nz + 1)];
                let mut vx: Vec<C> = (0..nz).map(|k| rhs.v[0][k * nh + m]).collect();
                let mut vy: Vec<C> = (0..nz).map(|k| rhs.v[1][k * nh + m]).collect();
                let mut tr: Vec<C> = (0..nz)
                    .map(|k| rhs.temp[k * nh + m] * dz)
                    .chain(std::iter::once(rhs.rho[m]))
                    .collect();
                let r = f.v[m]
                    .solve(&mut vx, &mut scratch)
                    .max(f.v[m].solve(&mut vy, &mut scratch))
                    .max(f.trho[m].solve(&mut tr, &mut scratch));
                (vx, vy, tr, r)
            })
            .collect();
        let mut out = Spec {
            v: [vec![C::default(); g.n_3d()], vec![C::default(); g.n_3d()]],
            temp: vec![C::default(); g.n_3d()],
            rho: vec![C::default(); nh],
        };
        let mut worst = 0.0f64;
        for (m, (vx, vy, tr, r)) in cols.into_iter().enumerate() {
            worst = worst.max(r);
            for k in 0..nz {
                out.v[0][k * nh + m] = vx[k];
                out.v[1][k * nh + m] = vy[k];
                out.temp[k * nh + m] = tr[k];
            }
            out.rho[m] = tr[nz];
        }
        if !(worst <= SOLVE_TOL) {
            return Err(StepError::Solver { residual: worst });
        }
        Ok(out)
    }

    fn gradient_energies(&self, u: &Spec) -> (f64, f64, f64) {
        spectral_gradient_energies(&self.grid, &self.lam, u)
    }

    fn ip3(&self, a: &[C], b: &[C]) -> f64 {
        self.grid.dz * a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum::<f64>()
    }

    fn ip2(a: &[C], b: &[C]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x * y.conj()).re).sum()
    }

    fn norms(&self, t: f64, u: &Spec, rho: &[f64]) -> EnergyRecord {
        let (gv, gt, gr) = self.gradient_energies(u);
        EnergyRecord {
            t,
            v2: self.ip3(&u.v[0], &u.v[0]) + self.ip3(&u.v[1], &u.v[1]),
            temp2: self.ip3(&u.temp, &u.temp),
            rho2: Self::ip2(&u.rho, &u.rho),
            grad_v2: gv,
            grad_temp2: gt,
            grad_rho2: gr,
            rho5: self.grid.cell_area() * rho.iter().map(|r| r.abs().powi(5)).sum::<f64>(),
            ..EnergyRecord::default()
        }
    }

    /// Energy record of a state with all rates zero; used as the first row
    /// of a trace.
    pub fn initial_record(&self, state: &State) -> EnergyRecord {
        self.norms(state.t, &self.to_spec(state), &state.rho)
    }

    /// Advances `state` by one step of size `grid.dt`.
    pub fn step(&mut self, state: &State, source: &dyn Source) -> Result<(State, EnergyRecord), StepError> {
        if !state.matches(&self.grid) {
            return Err(StepError::Shape);
        }
        let dt = self.grid.dt;
        if self.config.reaction {
            let rmax = state.rho.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let guard = dt * 4.0 * rmax.powi(3);
            if !(guard < 1.0) {
                return Err(StepError::ReactionGuard { t: state.t, value: guard });
            }
        }
        let u0 = self.to_spec(state);
        let p = self.pieces(state, source);
        let cn = self.half.is_some() && self.history.is_some();
        let eff = match (&self.history, cn) {
            (Some(prev), true) => p.extrapolate(prev),
            _ => p.clone(),
        };
        let n = eff.total();
        let mut rhs = u0.zip_map(&n, |a, b| a + dt * b);
        if cn {
            let lu = self.apply_l(&u0);
            rhs = rhs.zip_map(&lu, |a, b| a + 0.5 * dt * b);
        }
        let factors = if cn { self.half.as_ref().unwrap_or(&self.full) } else { &self.full };
        debug_assert!(factors.c == if cn { 0.5 * dt } else { dt });
        let mut u1 = self.solve(&rhs, factors)?;
        self.project(&mut u1.v);
        if self.half.is_some() {
            self.history = Some(p);
        }

        let t1 = state.t + dt;
        let next = self.spec_to_state(&u1, t1);
        for (name, field) in [
            ("v_x", &next.v[0]),
            ("v_y", &next.v[1]),
            ("T", &next.temp),
            ("rho", &next.rho),
        ] {
            if field.iter().any(|x| !x.is_finite()) {
                return Err(StepError::NotFinite { t: t1, field: name });
            }
        }
        let mut rec = self.norms(t1, &u1, &next.rho);
        let thr = self.config.blowup_threshold;
        for (name, sq) in [("v", rec.v2), ("T", rec.temp2), ("rho", rec.rho2)] {
            if sq.sqrt() > thr {
                return Err(StepError::BlowUp {
                    t: t1,
                    field: name,
                    norm: sq.sqrt(),
                    threshold: thr,
                });
            }
        }

        let ue = if cn { u0.zip_map(&u1, |a, b| 0.5 * (a + b)) } else { u1 };
        let (gv, gt, gr) = self.gradient_energies(&ue);
        rec.dissipation = gv + gt + gr;
        rec.sink = Self::ip2(&eff.sr, &ue.rho);
        rec.work_v = self.ip3(&eff.av[0], &ue.v[0]) + self.ip3(&eff.av[1], &ue.v[1]);
        rec.work_temp = self.ip3(&eff.at, &ue.temp);
        rec.work_rho = Self::ip2(&eff.ar, &ue.rho);
        Ok((next, rec))
    }

    /// Right-hand side `L u + P N(u)` of the semi-discrete system at `state`,
    /// in physical space. Its X0 norm measures how far `state` is from
    /// steady.
    pub fn tendency(&self, state: &State, source: &dyn Source) -> State {
        let u = self.to_spec(state);
        let mut d = self.apply_l(&u).zip_map(&self.pieces(state, source).total(), |a, b| a + b);
        self.project(&mut d.v);
        self.spec_to_state(&d, state.t)
    }

    /// Integrates from `state0` to `t_end` (rounded to a whole number of
    /// steps), calling `observer` after every accepted step. Clears the
    /// scheme history first, so the result depends only on the inputs.
    pub fn simulate(
        &mut self,
        state0: &State,
        source: &dyn Source,
        t_end: f64,
        observer: &mut dyn FnMut(&State, &EnergyRecord),
    ) -> Result<(State, EnergyTrace), StepError> {
        if !state0.matches(&self.grid) {
            return Err(StepError::Shape);
        }
        let dt = self.grid.dt;
        let span = t_end - state0.t;
        if span < -1e-12 * (1.0 + t_end.abs()) {
            return Err(StepError::EndTime { t: state0.t, t_end });
        }
        let vmax = state0.v[0].iter().chain(&state0.v[1]).fold(0.0f64, |m, x| m.max(x.abs()));
        let div = fields::barotropic_divergence(&self.grid, &state0.v);
        let dmax = div.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if dmax > 1e-9 * (1.0 + self.grid.nx.max(self.grid.ny) as f64 * vmax) {
            return Err(StepError::Constraint(dmax));
        }
        self.reset();
        let steps = (span / dt).round().max(0.0) as usize;
        let t0 = state0.t;
        let mut trace = EnergyTrace::default();
        trace.push(self.initial_record(state0));
        let mut state = state0.clone();
        for j in 0..steps {
            let (mut next, mut rec) = self.step(&state, source)?;
            next.t = t0 + (j + 1) as f64 * dt;
            rec.t = next.t;
            observer(&next, &rec);
            trace.push(rec);
            state = next;
        }
        Ok((state, trace))
    }

    /// [`Stepper::simulate`] without an observer.
    pub fn run(&mut self, state0: &State, source: &dyn Source, t_end: f64) -> Result<(State, EnergyTrace), StepError> {
        self.simulate(state0, source, t_end, &mut |_, _| {})
    }
}
