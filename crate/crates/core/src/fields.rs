//! The prognostic state `(v, T, rho)` and the spatial operators acting on it.
//!
//! All operators are pure functions of their inputs. Vertical stencils act
//! column by column on cell-centered values; horizontal derivatives are
//! spectral. The vertical velocity lives on the `nz + 1` cell faces.
//!
//! The surface closure uses one ghost value above the top cell, chosen so that
//! the quadratic through the two top centers and the ghost takes the value
//! `rho` at `z = 1`. The resulting face flux is the one-sided second-order
//! derivative returned by [`surface_flux`], so the interior heat equation and
//! the surface equation exchange exactly the same flux.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::grid::Grid;

/// Prognostic variables at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    /// Horizontal velocity components, each on `(nz, ny, nx)`.
    pub v: [Vec<f64>; 2],
    /// Interior temperature on `(nz, ny, nx)`.
    pub temp: Vec<f64>,
    /// Surface temperature on `(ny, nx)`.
    pub rho: Vec<f64>,
    pub t: f64,
}

/// Diagnostic fields recovered from a state.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivedFields {
    /// Vertical velocity on the `nz + 1` faces.
    pub w: Vec<f64>,
    /// `theta(z) = int_0^z T`.
    pub theta: Vec<f64>,
    /// Surface pressure realized by the last barotropic projection.
    pub p_s: Vec<f64>,
}

impl State {
    pub fn zeros(grid: &Grid) -> Self {
        State {
            v: [vec![0.0; grid.n_3d()], vec![0.0; grid.n_3d()]],
            temp: vec![0.0; grid.n_3d()],
            rho: vec![0.0; grid.n_h()],
            t: 0.0,
        }
    }

    pub fn matches(&self, grid: &Grid) -> bool {
        self.v[0].len() == grid.n_3d()
            && self.v[1].len() == grid.n_3d()
            && self.temp.len() == grid.n_3d()
            && self.rho.len() == grid.n_h()
    }

    /// Number of scalar unknowns.
    pub fn len(&self) -> usize {
        self.v[0].len() * 3 + self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flattens `(v_x, v_y, T, rho)` into one vector scaled so that its
    /// Euclidean norm is the X0 norm.
    pub fn to_weighted_vec(&self, grid: &Grid) -> Vec<f64> {
        let sv = grid.cell_volume().sqrt();
        let sa = grid.cell_area().sqrt();
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.v[0].iter().map(|x| x * sv));
        out.extend(self.v[1].iter().map(|x| x * sv));
        out.extend(self.temp.iter().map(|x| x * sv));
        out.extend(self.rho.iter().map(|x| x * sa));
        out
    }

    /// Inverse of [`State::to_weighted_vec`].
    pub fn from_weighted_vec(grid: &Grid, data: &[f64], t: f64) -> Self {
        let n = grid.n_3d();
        let sv = 1.0 / grid.cell_volume().sqrt();
        let sa = 1.0 / grid.cell_area().sqrt();
        let part = |a: usize, b: usize, s: f64| data[a..b].iter().map(|x| x * s).collect();
        State {
            v: [part(0, n, sv), part(n, 2 * n, sv)],
            temp: part(2 * n, 3 * n, sv),
            rho: part(3 * n, 3 * n + grid.n_h(), sa),
            t,
        }
    }

    /// Squared X0 norm `||v||^2 + ||T||^2 + ||rho||^2`.
    pub fn norm_sq(&self, grid: &Grid) -> f64 {
        let vol = grid.cell_volume();
        let sq = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>();
        vol * (sq(&self.v[0]) + sq(&self.v[1]) + sq(&self.temp)) + grid.cell_area() * sq(&self.rho)
    }

    /// X0 distance between two states on the same grid.
    pub fn distance(&self, other: &State, grid: &Grid) -> f64 {
        let vol = grid.cell_volume();
        let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        (vol * (sq(&self.v[0], &other.v[0]) + sq(&self.v[1], &other.v[1]) + sq(&self.temp, &other.temp))
            + grid.cell_area() * sq(&self.rho, &other.rho))
        .sqrt()
    }

    /// `self - other`, keeping `self.t`.
    pub fn difference(&self, other: &State) -> State {
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        State {
            v: [sub(&self.v[0], &other.v[0]), sub(&self.v[1], &other.v[1])],
            temp: sub(&self.temp, &other.temp),
            rho: sub(&self.rho, &other.rho),
            t: self.t,
        }
    }

    /// Multiplies every component by `s`, in place.
    pub fn scale(&mut self, s: f64) {
        let [vx, vy] = &mut self.v;
        for x in vx.iter_mut().chain(vy).chain(&mut self.temp).chain(&mut self.rho) {
            *x *= s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.v[0]
            .iter()
            .chain(&self.v[1])
            .chain(&self.temp)
            .chain(&self.rho)
            .all(|x| x.is_finite())
    }

    /// Diagnostic fields of this state (`p_s` left at zero).
    pub fn derived(&self, grid: &Grid) -> DerivedFields {
        DerivedFields {
            w: compute_w(grid, &self.v),
            theta: vertical_integral(grid, &self.temp),
            p_s: vec![0.0; grid.n_h()],
        }
    }
}

/// Random smooth initial data: horizontal modes `1 <= |k| <= max_mode`
/// (mean free), vertical profiles `cos(p pi z)` for `p = 0, 1, 2`. The
/// velocity is projected, `rho` equals the surface value of the
/// temperature profile, and the whole state is scaled to X0 norm
/// `amplitude`.
pub fn smooth_random_state(grid: &Grid, seed: u64, amplitude: f64, max_mode: i64) -> State {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = State::zeros(grid);
    let nh = grid.n_h();
    for kx in -max_mode..=max_mode {
        for ky in -max_mode..=max_mode {
            if kx == 0 && ky == 0 {
                continue;
            }
            let coeffs: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let phase = rng.gen_range(0.0..2.0 * PI);
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let arg = 2.0 * PI * (kx as f64 * grid.x(i) + ky as f64 * grid.y(j)) + phase;
                    let h = arg.cos();
                    let m = j * grid.nx + i;
                    for (k, &z) in grid.z_levels.iter().enumerate() {
                        let prof = |c: &[f64]| {
                            c[0] + c[1] * (PI * z).cos() + c[2] * (2.0 * PI * z).cos()
                        };
                        state.v[0][k * nh + m] += h * prof(&coeffs[0..3]);
                        state.v[1][k * nh + m] += h * prof(&coeffs[3..6]);
                        state.temp[k * nh + m] += h * prof(&coeffs[6..9]);
                    }
                    state.rho[m] += h * (coeffs[6] - coeffs[7] + coeffs[8]);
                }
            }
        }
    }
    state.v = project_barotropic(grid, &state.v);
    let norm = state.norm_sq(grid).sqrt();
    if norm > 0.0 {
        let s = amplitude / norm;
        state.scale(s);
    }
    state
}

/// `theta(z_k) = int_0^{z_k} T`: full cells below by the midpoint rule plus
/// the lower half of cell `k`.
pub fn vertical_integral(grid: &Grid, temp: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let dz = grid.dz;
    let mut theta = vec![0.0; temp.len()];
    let mut below = vec![0.0; nh];
    for k in 0..grid.nz {
        let layer = &temp[k * nh..(k + 1) * nh];
        for m in 0..nh {
            theta[k * nh + m] = below[m] + 0.5 * dz * layer[m];
            below[m] += dz * layer[m];
        }
    }
    theta
}

/// Vertical mean `(1/nz) sum_k f(., z_k)` of a 3D field.
pub fn vertical_average(grid: &Grid, field: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let mut mean = vec![0.0; nh];
    for layer in field.chunks(nh) {
        for (acc, x) in mean.iter_mut().zip(layer) {
            *acc += x;
        }
    }
    let inv = 1.0 / grid.nz as f64;
    mean.iter_mut().for_each(|x| *x *= inv);
    mean
}

/// `div_H vbar` on `G`.
pub fn barotropic_divergence(grid: &Grid, v: &[Vec<f64>; 2]) -> Vec<f64> {
    grid.divergence_h(&vertical_average(grid, &v[0]), &vertical_average(grid, &v[1]))
}

/// Vertical velocity on faces from `w(z) = -int_0^z div_H v`.
///
/// Face `k` is the lower face of cell `k`; face `nz` is the surface, where
/// the value is `-div_H vbar`.
pub fn compute_w(grid: &Grid, v: &[Vec<f64>; 2]) -> Vec<f64> {
    let nh = grid.n_h();
    let div = grid.divergence_h(&v[0], &v[1]);
    let mut w = vec![0.0; nh * (grid.nz + 1)];
    for k in 0..grid.nz {
        for m in 0..nh {
            w[(k + 1) * nh + m] = w[k * nh + m] - grid.dz * div[k * nh + m];
        }
    }
    w
}

/// Removes a z-independent horizontal gradient so that `div_H vbar = 0`.
/// Returns the projected velocity and the potential `q` with zero mean.
pub fn project_barotropic_with_potential(grid: &Grid, v: &[Vec<f64>; 2]) -> ([Vec<f64>; 2], Vec<f64>) {
    let nh = grid.n_h();
    let div = grid.forward(&barotropic_divergence(grid, v));
    let q_hat: Vec<Complex64> = div
        .iter()
        .enumerate()
        .map(|(m, d)| {
            let s = grid.div_grad_symbol(m);
            if s > 0.0 {
                -d / s
            } else {
                Complex64::default()
            }
        })
        .collect();
    let q = grid.inverse(&q_hat);
    let [qx, qy] = grid.gradient_h(&q);
    let mut out = v.clone();
    for k in 0..grid.nz {
        for m in 0..nh {
            out[0][k * nh + m] -= qx[m];
            out[1][k * nh + m] -= qy[m];
        }
    }
    (out, q)
}

pub fn project_barotropic(grid: &Grid, v: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
    project_barotropic_with_potential(grid, v).0
}

/// Ghost value above the top cell: the quadratic through `T_{nz-2}`,
/// `T_{nz-1}` and the ghost equals `rho` at `z = 1`.
#[inline]
pub(crate) fn top_ghost(t_top: f64, t_below: f64, rho: f64) -> f64 {
    (8.0 * rho - 6.0 * t_top + t_below) / 3.0
}

/// One-sided second-order `(d_z T)` at `z = 1` from `rho` and the two top
/// cell centers.
pub fn surface_flux(grid: &Grid, temp: &[f64], rho: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let top = (grid.nz - 1) * nh;
    let below = (grid.nz - 2) * nh;
    (0..nh)
        .map(|m| (8.0 * rho[m] - 9.0 * temp[top + m] + temp[below + m]) / (3.0 * grid.dz))
        .collect()
}

/// Linear extrapolation of `T` to `z = 1` from the two top centers. Agrees
/// with `rho` to second order in `dz` for smooth solutions.
pub fn top_trace(grid: &Grid, temp: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let top = (grid.nz - 1) * nh;
    let below = (grid.nz - 2) * nh;
    (0..nh).map(|m| 1.5 * temp[top + m] - 0.5 * temp[below + m]).collect()
}

/// Second vertical difference with homogeneous Neumann at the bottom and the
/// surface ghost closure at the top.
pub(crate) fn vertical_second_difference_t(grid: &Grid, temp: &[f64], rho: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let nz = grid.nz;
    let inv = 1.0 / (grid.dz * grid.dz);
    let mut out = vec![0.0; temp.len()];
    for k in 0..nz {
        for m in 0..nh {
            let c = temp[k * nh + m];
            let lo = if k == 0 { c } else { temp[(k - 1) * nh + m] };
            let hi = if k + 1 == nz {
                top_ghost(c, temp[(k - 1) * nh + m], rho[m])
            } else {
                temp[(k + 1) * nh + m]
            };
            out[k * nh + m] = (hi - 2.0 * c + lo) * inv;
        }
    }
    out
}

/// Second vertical difference with homogeneous Neumann at both ends.
pub(crate) fn vertical_second_difference_neumann(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let nh = grid.n_h();
    let nz = grid.nz;
    let inv = 1.0 / (grid.dz * grid.dz);
    let mut out = vec![0.0; f.len()];
    for k in 0..nz {
        for m in 0..nh {
            let c = f[k * nh + m];
            let lo = if k == 0 { c } else { f[(k - 1) * nh + m] };
            let hi = if k + 1 == nz { c } else { f[(k + 1) * nh + m] };
            out[k * nh + m] = (hi - 2.0 * c + lo) * inv;
        }
    }
    out
}

/// Full Laplacian of `T` with `(d_z T) = 0` at the bottom and the trace
/// closure `T|_{z=1} = rho` at the surface.
pub fn laplacian_t(grid: &Grid, temp: &[f64], rho: &[f64]) -> Vec<f64> {
    let mut out = grid.laplacian_h(temp);
    for (o, v) in out.iter_mut().zip(vertical_second_difference_t(grid, temp, rho)) {
        *o += v;
    }
    out
}

/// Full Laplacian of one velocity component with `(d_z v) = 0` at both ends.
pub fn laplacian_v(grid: &Grid, f: &[f64]) -> Vec<f64> {
    let mut out = grid.laplacian_h(f);
    for (o, v) in out.iter_mut().zip(vertical_second_difference_neumann(grid, f)) {
        *o += v;
    }
    out
}

/// Skew-symmetric horizontal transport `1/2 [a . grad f + div(a f)]` on any
/// number of stacked levels.
fn skew_horizontal(grid: &Grid, a: [&[f64]; 2], f: &[f64]) -> Vec<f64> {
    let [fx, fy] = grid.gradient_h(f);
    let ax_f: Vec<f64> = a[0].iter().zip(f).map(|(x, y)| x * y).collect();
    let ay_f: Vec<f64> = a[1].iter().zip(f).map(|(x, y)| x * y).collect();
    let div = grid.divergence_h(&ax_f, &ay_f);
    (0..f.len())
        .map(|i| 0.5 * (a[0][i] * fx[i] + a[1][i] * fy[i] + div[i]))
        .collect()
}

/// Skew-symmetric vertical transport on the staggered grid. The bottom and
/// surface faces carry no flux.
fn skew_vertical(grid: &Grid, w: &[f64], f: &[f64], out: &mut [f64]) {
    let nh = grid.n_h();
    let nz = grid.nz;
    let c = 0.5 / grid.dz;
    for k in 0..nz {
        for m in 0..nh {
            let mut s = 0.0;
            if k + 1 < nz {
                s += w[(k + 1) * nh + m] * f[(k + 1) * nh + m];
            }
            if k > 0 {
                s -= w[k * nh + m] * f[(k - 1) * nh + m];
            }
            out[k * nh + m] += c * s;
        }
    }
}

/// `v . grad_H v + w d_z v` in skew-symmetric form.
pub fn advection_v(grid: &Grid, v: &[Vec<f64>; 2], w: &[f64]) -> [Vec<f64>; 2] {
    let a = [v[0].as_slice(), v[1].as_slice()];
    let mut out = [skew_horizontal(grid, a, &v[0]), skew_horizontal(grid, a, &v[1])];
    for (o, comp) in out.iter_mut().zip(v) {
        skew_vertical(grid, w, comp, o);
    }
    out
}

/// `u . grad T` in skew-symmetric form.
pub fn advection_t(grid: &Grid, v: &[Vec<f64>; 2], w: &[f64], temp: &[f64]) -> Vec<f64> {
    let mut out = skew_horizontal(grid, [&v[0], &v[1]], temp);
    skew_vertical(grid, w, temp, &mut out);
    out
}

/// `vbar . grad_H rho` in skew-symmetric form.
pub fn advection_rho(grid: &Grid, vbar: &[Vec<f64>; 2], rho: &[f64]) -> Vec<f64> {
    skew_horizontal(grid, [&vbar[0], &vbar[1]], rho)
}
