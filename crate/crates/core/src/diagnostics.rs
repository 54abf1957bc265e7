//! Energy bookkeeping, the a-priori envelopes, and the weak-strong
//! uniqueness harness.
//!
//! Each [`EnergyRecord`] holds the squared norms at its time stamp plus the
//! rates the stepper actually used on the step ending there: dissipation,
//! radiative sink and the three work terms. The rates are evaluated at the
//! step's own quadrature point (the new state for the Euler scheme, the
//! midpoint for Crank-Nicolson), so summing `dt * rate` reproduces the
//! discrete time integrals the scheme realizes. With that quadrature the
//! energy identity closes up to the scheme's own defect.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{DiagnosticsError, StepError};
use crate::fields::State;
use crate::grid::Grid;
use crate::physics::{self, PhysicsParams, Source};
use crate::stepper::{gradient_energies, Stepper};

/// Column names of the energy CSV, in order.
pub const ENERGY_HEADER: [&str; 13] = [
    "t",
    "v2",
    "temp2",
    "rho2",
    "grad_v2",
    "grad_temp2",
    "grad_rho2",
    "rho5",
    "dissipation",
    "sink",
    "work_v",
    "work_temp",
    "work_rho",
];

/// One row of the energy trace.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyRecord {
    pub t: f64,
    /// `||v||^2`
    pub v2: f64,
    /// `||T||^2`
    pub temp2: f64,
    /// `||rho||^2`
    pub rho2: f64,
    /// `||grad v||^2`
    pub grad_v2: f64,
    /// `||grad T||^2`, including the surface closure term
    pub grad_temp2: f64,
    /// `||grad_H rho||^2`
    pub grad_rho2: f64,
    /// `||rho||_5^5`
    pub rho5: f64,
    /// Dissipation rate used on the step ending at `t` (zero on the first row).
    pub dissipation: f64,
    /// `int |rho|^3 rho * rho` rate used on the step.
    pub sink: f64,
    /// `(f1 + grad_H theta, v)`
    pub work_v: f64,
    /// `int f2 T`
    pub work_temp: f64,
    /// `int (f3 + Q beta(rho)) rho`
    pub work_rho: f64,
}

impl EnergyRecord {
    /// `||v||^2 + ||T||^2 + ||rho||^2`
    pub fn energy(&self) -> f64 {
        self.v2 + self.temp2 + self.rho2
    }

    pub fn work(&self) -> f64 {
        self.work_v + self.work_temp + self.work_rho
    }

    fn values(&self) -> [f64; 13] {
        [
            self.t,
            self.v2,
            self.temp2,
            self.rho2,
            self.grad_v2,
            self.grad_temp2,
            self.grad_rho2,
            self.rho5,
            self.dissipation,
            self.sink,
            self.work_v,
            self.work_temp,
            self.work_rho,
        ]
    }

    fn from_values(v: [f64; 13]) -> Self {
        EnergyRecord {
            t: v[0],
            v2: v[1],
            temp2: v[2],
            rho2: v[3],
            grad_v2: v[4],
            grad_temp2: v[5],
            grad_rho2: v[6],
            rho5: v[7],
            dissipation: v[8],
            sink: v[9],
            work_v: v[10],
            work_temp: v[11],
            work_rho: v[12],
        }
    }
}

/// Time series of [`EnergyRecord`]s, first row at the initial time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace {
    pub records: Vec<EnergyRecord>,
}

impl EnergyTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: EnergyRecord) {
        self.records.push(r);
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", ENERGY_HEADER.join(","))?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            for (i, v) in r.values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                // `{:?}` is the shortest representation that round-trips.
                let _ = write!(line, "{v:?}");
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, DiagnosticsError> {
        let mut lines = input.lines().enumerate();
        let io = |line: usize, e: std::io::Error| DiagnosticsError::Parse {
            line,
            reason: e.to_string(),
        };
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| io(1, e))?,
            None => {
                return Err(DiagnosticsError::Parse {
                    line: 1,
                    reason: "empty input".into(),
                })
            }
        };
        if header.trim() != ENERGY_HEADER.join(",") {
            return Err(DiagnosticsError::Parse {
                line: 1,
                reason: format!("unexpected header '{}'", header.trim()),
            });
        }
        let mut trace = EnergyTrace::default();
        for (i, line) in lines {
            let line = line.map_err(|e| io(i + 1, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut vals = [0.0; 13];
            let mut count = 0;
            for (slot, field) in line.split(',').enumerate() {
                if slot >= 13 {
                    count = slot + 1;
                    break;
                }
                vals[slot] = field.trim().parse().map_err(|_| DiagnosticsError::Parse {
                    line: i + 1,
                    reason: format!("bad number '{}'", field.trim()),
                })?;
                count = slot + 1;
            }
            if count != 13 {
                return Err(DiagnosticsError::Parse {
                    line: i + 1,
                    reason: format!("expected 13 columns, found {count}"),
                });
            }
            trace.push(EnergyRecord::from_values(vals));
        }
        Ok(trace)
    }

    fn index_of(&self, t: f64) -> Result<usize, DiagnosticsError> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.records
            .iter()
            .position(|r| (r.t - t).abs() <= tol)
            .ok_or(DiagnosticsError::TimeOutsideTrace(t))
    }

    /// Per-step defects `r_j`, `j >= 1`, whose partial sums give the
    /// residual over any subinterval.
    pub fn step_residuals(&self) -> Vec<f64> {
        self.records
            .windows(2)
            .map(|w| {
                let (a, b) = (&w[0], &w[1]);
                let dt = b.t - a.t;
                b.energy() - a.energy() + 2.0 * dt * (b.dissipation + b.sink - b.work())
            })
            .collect()
    }
}

/// Signed residual of the energy inequality over `[s, t]`:
///
/// `E(t) + 2 int_s^t (D + sink) - E(s) - 2 int_s^t work`,
///
/// where `E = ||v||^2 + ||T||^2 + ||rho||^2`. The inequality holds when the
/// residual is nonpositive up to the scheme's defect.
pub fn energy_inequality_residual(trace: &EnergyTrace, s: f64, t: f64) -> Result<f64, DiagnosticsError> {
    if s >= t {
        return Err(DiagnosticsError::EmptyInterval { s, t });
    }
    let (i, j) = (trace.index_of(s)?, trace.index_of(t)?);
    Ok(trace.step_residuals()[i..j].iter().sum())
}

/// Largest residual over all subintervals `[t_i, t_j]`, with its endpoints.
/// Returns `(0, t0, t0)` when every subinterval has a negative residual.
pub fn max_subinterval_residual(trace: &EnergyTrace) -> (f64, f64, f64) {
    let r = trace.step_residuals();
    let t0 = trace.records.first().map_or(0.0, |r| r.t);
    let (mut best, mut best_s, mut best_t) = (0.0, t0, t0);
    let (mut run, mut run_start) = (0.0, 0usize);
    for (j, &x) in r.iter().enumerate() {
        if run <= 0.0 {
            run = x;
            run_start = j;
        } else {
            run += x;
        }
        if run > best {
            best = run;
            best_s = trace.records[run_start].t;
            best_t = trace.records[j + 1].t;
        }
    }
    (best, best_s, best_t)
}

/// `C^2` bounding the absorbed-radiation work: with `a = Q_max beta2`,
/// `2 a |r| <= 2 |r|^5 + C^2` for all `r`, and the domain has unit area.
pub fn work_constant_sq(params: &PhysicsParams) -> f64 {
    let a = params.q_max() * params.beta2;
    8.0 * a / 5.0 * (a / 5.0).powf(0.25)
}

/// `Phi(t) = C^2 + ||f1||^2 + ||f2||^2 + ||f3||^2` at each of `times`.
pub fn phi_series(grid: &Grid, source: &dyn Source, params: &PhysicsParams, times: &[f64]) -> Vec<f64> {
    let c2 = work_constant_sq(params);
    times.iter().map(|&t| c2 + source.eval(grid, t).norm_sq(grid)).collect()
}

/// Outcome of [`gronwall_envelope_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeCheck {
    /// `max_{t > t0} y(t) - env(t)`
    pub max_violation: f64,
    /// `max_t (y(t) - env(t)) / env(t)`, zero where `env = 0`
    pub max_relative: f64,
}

/// Compares `y = 2||v||^2 + ||T||^2 + 2||rho||^2` against the envelope
/// `exp(t - t0) (y(t0) + int_{t0}^t Phi)` (trapezoid rule), with `phi`
/// sampled at the trace times.
pub fn gronwall_envelope_check(trace: &EnergyTrace, phi: &[f64]) -> Result<EnvelopeCheck, DiagnosticsError> {
    if phi.len() != trace.len() {
        return Err(DiagnosticsError::Mismatch(format!(
            "{} Phi samples for {} trace rows",
            phi.len(),
            trace.len()
        )));
    }
    let y = |r: &EnergyRecord| 2.0 * r.v2 + r.temp2 + 2.0 * r.rho2;
    let mut out = EnvelopeCheck {
        max_violation: f64::NEG_INFINITY,
        max_relative: f64::NEG_INFINITY,
    };
    let Some(first) = trace.records.first() else {
        return Ok(EnvelopeCheck {
            max_violation: 0.0,
            max_relative: 0.0,
        });
    };
    let (t0, y0) = (first.t, y(first));
    let mut integral = 0.0;
    for (i, r) in trace.records.iter().enumerate() {
        if i == 0 {
            continue;
        }
        integral += 0.5 * (r.t - trace.records[i - 1].t) * (phi[i] + phi[i - 1]);
        let env = (r.t - t0).exp() * (y0 + integral);
        let v = y(r) - env;
        out.max_violation = out.max_violation.max(v);
        out.max_relative = out.max_relative.max(if env > 0.0 { v / env } else { 0.0 });
    }
    if trace.len() == 1 {
        return Ok(EnvelopeCheck {
            max_violation: 0.0,
            max_relative: 0.0,
        });
    }
    Ok(out)
}

/// `|int R(rho1) rho2 + R(rho2) rho1|` and its bound
/// `C (||rho1||_5^5 + ||rho2||_5^5 + ||rho1||_1 + ||rho2||_1)` with
/// `C = max(1, Q_max beta2)`.
pub fn reaction_work_bound(grid: &Grid, rho1: &[f64], rho2: &[f64], params: &PhysicsParams) -> (f64, f64) {
    let r1 = physics::reaction(grid, rho1, params);
    let r2 = physics::reaction(grid, rho2, params);
    let da = grid.cell_area();
    let lhs = da * r1.iter().zip(rho2).zip(r2.iter().zip(rho1)).map(|((a, b), (c, d))| a * b + c * d).sum::<f64>();
    let p5 = |r: &[f64]| da * r.iter().map(|x| x.abs().powi(5)).sum::<f64>();
    let p1 = |r: &[f64]| da * r.iter().map(|x| x.abs()).sum::<f64>();
    let c = (params.q_max() * params.beta2).max(1.0);
    (lhs.abs(), c * (p5(rho1) + p5(rho2) + p1(rho1) + p1(rho2)))
}

/// One sample of the difference of two runs.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DifferenceRecord {
    pub t: f64,
    /// `||sigma_v||^2`
    pub sv2: f64,
    /// `||sigma_T||^2`
    pub st2: f64,
    /// `||sigma_rho||^2`
    pub sr2: f64,
    /// `||grad sigma_v||^2 + ||grad sigma_T||^2 + ||grad_H sigma_rho||^2`
    pub dissipation: f64,
    /// Gronwall weight `||T2||_{H1}^4 + ||rho2||_{H1}^4 + ||v2||_{H1}^4`
    pub g: f64,
}

impl DifferenceRecord {
    pub fn sigma2(&self) -> f64 {
        self.sv2 + self.st2 + self.sr2
    }
}

pub const DIFFERENCE_HEADER: [&str; 7] = ["t", "sigma_v2", "sigma_temp2", "sigma_rho2", "dissipation", "g", "sigma2"];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DifferenceTrace {
    pub records: Vec<DifferenceRecord>,
}

impl DifferenceTrace {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", DIFFERENCE_HEADER.join(","))?;
        for r in &self.records {
            writeln!(
                out,
                "{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
                r.t,
                r.sv2,
                r.st2,
                r.sr2,
                r.dissipation,
                r.g,
                r.sigma2()
            )?;
        }
        Ok(())
    }
}

/// Result of comparing two runs.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub samples: usize,
    pub t_start: f64,
    pub t_end: f64,
    /// Every sample of the two runs agrees bit for bit.
    pub bitwise_identical: bool,
    pub sigma2_initial: f64,
    pub sigma2_max: f64,
    /// `int g` over the whole horizon.
    pub g_integral: f64,
    /// Smallest `C` with `log sigma2(t) - log sigma2(t0) <= C int_{t0}^t g`
    /// at every sample; zero when `sigma` never grows.
    pub c_fit: f64,
}

impl Certificate {
    /// Envelope certified: either the runs coincide, or `c_fit` is finite.
    pub fn holds(&self) -> bool {
        if self.sigma2_initial == 0.0 {
            self.bitwise_identical || self.sigma2_max <= 1e-22
        } else {
            self.c_fit.is_finite()
        }
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "samples: {}", self.samples);
        let _ = writeln!(s, "t_start: {:?}", self.t_start);
        let _ = writeln!(s, "t_end: {:?}", self.t_end);
        let _ = writeln!(s, "bitwise_identical: {}", self.bitwise_identical);
        let _ = writeln!(s, "sigma2_initial: {:e}", self.sigma2_initial);
        let _ = writeln!(s, "sigma2_max: {:e}", self.sigma2_max);
        let _ = writeln!(s, "g_integral: {:e}", self.g_integral);
        let _ = writeln!(s, "c_fit: {:e}", self.c_fit);
        let _ = writeln!(s, "certified: {}", self.holds());
        s
    }
}

fn h1_sq(l2: f64, grad: f64) -> f64 {
    l2 + grad
}

/// Differences `sigma = run1 - run2` sampled at matching times, with the
/// weight `g` built from the H1 norms of `run2`, and a fitted Gronwall
/// constant.
pub fn weak_strong_contraction(
    grid: &Grid,
    run1: &[State],
    run2: &[State],
) -> Result<(DifferenceTrace, Certificate), DiagnosticsError> {
    if run1.len() != run2.len() || run1.is_empty() {
        return Err(DiagnosticsError::Mismatch(format!(
            "{} and {} samples",
            run1.len(),
            run2.len()
        )));
    }
    let mut trace = DifferenceTrace::default();
    let mut identical = true;
    for (a, b) in run1.iter().zip(run2) {
        if !a.matches(grid) || !b.matches(grid) {
            return Err(DiagnosticsError::Mismatch("state shape differs from grid".into()));
        }
        if (a.t - b.t).abs() > 1e-9 * (1.0 + a.t.abs()) {
            return Err(DiagnosticsError::Mismatch(format!("sample times {} and {}", a.t, b.t)));
        }
        identical &= a == b;
        let d = a.difference(b);
        let vol = grid.cell_volume();
        let sq = |x: &[f64]| x.iter().map(|y| y * y).sum::<f64>();
        let (dv, dt, dr) = gradient_energies(grid, &d);
        let (gv, gt, gr) = gradient_energies(grid, b);
        let (v2, t2, r2) = (
            vol * (sq(&b.v[0]) + sq(&b.v[1])),
            vol * sq(&b.temp),
            grid.cell_area() * sq(&b.rho),
        );
        trace.records.push(DifferenceRecord {
            t: a.t,
            sv2: vol * (sq(&d.v[0]) + sq(&d.v[1])),
            st2: vol * sq(&d.temp),
            sr2: grid.cell_area() * sq(&d.rho),
            dissipation: dv + dt + dr,
            g: h1_sq(t2, gt).powi(2) + h1_sq(r2, gr).powi(2) + h1_sq(v2, gv).powi(2),
        });
    }
    let recs = &trace.records;
    let s0 = recs[0].sigma2();
    let mut c_fit: f64 = 0.0;
    let mut integral = 0.0;
    for i in 1..recs.len() {
        integral += 0.5 * (recs[i].t - recs[i - 1].t) * (recs[i].g + recs[i - 1].g);
        if s0 > 0.0 {
            let growth = recs[i].sigma2().ln() - s0.ln();
            if growth > 0.0 {
                c_fit = c_fit.max(if integral > 0.0 { growth / integral } else { f64::INFINITY });
            }
        }
    }
    let cert = Certificate {
        samples: recs.len(),
        t_start: recs[0].t,
        t_end: recs[recs.len() - 1].t,
        bitwise_identical: identical,
        sigma2_initial: s0,
        sigma2_max: recs.iter().map(DifferenceRecord::sigma2).fold(0.0, f64::max),
        g_integral: integral,
        c_fit,
    };
    Ok((trace, cert))
}

/// Runs two initial states side by side (one thread each) and returns the
/// states sampled every `stride` steps, initial states included.
pub fn run_pair(
    stepper: (&mut Stepper, &mut Stepper),
    x1: &State,
    x2: &State,
    source: &dyn Source,
    t_end: f64,
    stride: usize,
) -> Result<(Vec<State>, Vec<State>), StepError> {
    let stride = stride.max(1);
    let sampled = |st: &mut Stepper, x: &State| -> Result<Vec<State>, StepError> {
        let mut out = vec![x.clone()];
        let mut n = 0usize;
        st.simulate(x, source, t_end, &mut |s, _| {
            n += 1;
            if n.is_multiple_of(stride) {
                out.push(s.clone());
            }
        })?;
        Ok(out)
    };
    let (s1, s2) = stepper;
    let (a, b) = std::thread::scope(|scope| {
        let h = scope.spawn(|| sampled(s1, x1));
        let b = sampled(s2, x2);
        (h.join().expect("weak-strong worker panicked"), b)
    });
    Ok((a?, b?))
}

/// Single-mode perturbations used by the uniqueness harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perturbation {
    /// `v_x += eps sin(2 pi y)`
    Velocity,
    /// `rho += eps cos(2 pi x)`
    Surface,
}

pub fn perturb(grid: &Grid, state: &State, kind: Perturbation, eps: f64) -> State {
    use std::f64::consts::PI;
    let mut out = state.clone();
    let nh = grid.n_h();
    match kind {
        Perturbation::Velocity => {
            for (idx, v) in out.v[0].iter_mut().enumerate() {
                *v += eps * (2.0 * PI * grid.y((idx % nh) / grid.nx)).sin();
            }
        }
        Perturbation::Surface => {
            for (m, r) in out.rho.iter_mut().enumerate() {
                *r += eps * (2.0 * PI * grid.x(m % grid.nx)).cos();
            }
        }
    }
    out
}
