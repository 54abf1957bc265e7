//! Discrete domain `G x (0,1)` with `G = (0,1)^2`.
//!
//! Horizontal directions are periodic and handled by Fourier collocation on
//! the nodes `x_i = i/nx`, `y_j = j/ny`. The vertical direction uses `nz`
//! uniform cells with unknowns at the centers `z_k = (k + 1/2) dz`; the bottom
//! (`z = 0`) and the surface (`z = 1`) sit half a cell outside the first and
//! last centers.
//!
//! Storage is level-major: a 3D field is `nz` consecutive `ny x nx` slabs and
//! within a slab `x` varies fastest. Spectra use the same layout with the
//! horizontal mode index `m = jy * nx + ix` in place of the node index.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::GridError;

const TWO_PI: f64 = 2.0 * PI;

/// FFT plans and wavenumber tables for one horizontal resolution.
struct Spectral {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    /// First-derivative wavenumbers (Nyquist mapped to 0).
    kx_d: Vec<f64>,
    ky_d: Vec<f64>,
    /// Second-derivative wavenumbers (Nyquist kept as n/2).
    kx_l: Vec<f64>,
    ky_l: Vec<f64>,
    keep_x: Vec<bool>,
    keep_y: Vec<bool>,
}

fn signed_wavenumber(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

impl Spectral {
    fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let tables = |n: usize| {
            let mut d = Vec::with_capacity(n);
            let mut l = Vec::with_capacity(n);
            let mut keep = Vec::with_capacity(n);
            for i in 0..n {
                let k = signed_wavenumber(i, n);
                d.push(if 2 * i == n { 0.0 } else { k as f64 });
                l.push(k as f64);
                // 2/3 rule: keep |k| < n/3.
                keep.push(3 * k.unsigned_abs() < n as u64);
            }
            (d, l, keep)
        };
        let (kx_d, kx_l, keep_x) = tables(nx);
        let (ky_d, ky_l, keep_y) = tables(ny);
        Spectral {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
            kx_d,
            ky_d,
            kx_l,
            ky_l,
            keep_x,
            keep_y,
        }
    }
}

/// Immutable discretization of the unit box. Cheap to clone.
#[derive(Clone)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dt: f64,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub z_levels: Vec<f64>,
    spectral: Arc<Spectral>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("nz", &self.nz)
            .field("dt", &self.dt)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.nz == other.nz && self.dt == other.dt
    }
}

impl Grid {
    /// Builds a grid, rejecting odd or too small sample counts and `dt <= 0`.
    pub fn new(nx: usize, ny: usize, nz: usize, dt: f64) -> Result<Self, GridError> {
        for (axis, value) in [("nx", nx), ("ny", ny)] {
            if value < 4 || value % 2 != 0 {
                return Err(GridError::BadHorizontal { axis, value });
            }
        }
        if nz < 3 {
            return Err(GridError::BadVertical(nz));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GridError::BadTimeStep(dt));
        }
        let dz = 1.0 / nz as f64;
        Ok(Grid {
            nx,
            ny,
            nz,
            dt,
            dx: 1.0 / nx as f64,
            dy: 1.0 / ny as f64,
            dz,
            z_levels: (0..nz).map(|k| (k as f64 + 0.5) * dz).collect(),
            spectral: Arc::new(Spectral::new(nx, ny)),
        })
    }

    /// Same spatial grid with a different time step.
    pub fn with_dt(&self, dt: f64) -> Result<Self, GridError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(GridError::BadTimeStep(dt));
        }
        Ok(Grid { dt, ..self.clone() })
    }

    /// Number of horizontal nodes (and modes).
    pub fn n_h(&self) -> usize {
        self.nx * self.ny
    }

    /// Number of interior cells.
    pub fn n_3d(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.dy
    }

    /// Volume of one cell; quadrature weight for fields on `Omega`.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy * self.dz
    }

    /// Area of one horizontal cell; quadrature weight for fields on `G`.
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Signed integer wavenumbers `(kx, ky)` of mode `m`.
    pub fn wavenumbers(&self, m: usize) -> (f64, f64) {
        let s = &self.spectral;
        (s.kx_l[m % self.nx], s.ky_l[m / self.nx])
    }

    /// Symbol of the spectral gradient for mode `m`: `(i 2 pi kx, i 2 pi ky)`
    /// with Nyquist wavenumbers mapped to zero.
    pub fn gradient_symbol(&self, m: usize) -> (Complex64, Complex64) {
        let s = &self.spectral;
        (
            Complex64::new(0.0, TWO_PI * s.kx_d[m % self.nx]),
            Complex64::new(0.0, TWO_PI * s.ky_d[m / self.nx]),
        )
    }

    /// `|k|^2 (2 pi)^2` for the horizontal Laplacian, so `Delta_H -> -lap_symbol`.
    pub fn laplacian_symbol(&self, m: usize) -> f64 {
        let s = &self.spectral;
        let (kx, ky) = (s.kx_l[m % self.nx], s.ky_l[m / self.nx]);
        TWO_PI * TWO_PI * (kx * kx + ky * ky)
    }

    /// Symbol of `-div_H grad_H` (Nyquist-consistent with `gradient_symbol`).
    pub fn div_grad_symbol(&self, m: usize) -> f64 {
        let s = &self.spectral;
        let (kx, ky) = (s.kx_d[m % self.nx], s.ky_d[m / self.nx]);
        TWO_PI * TWO_PI * (kx * kx + ky * ky)
    }

    /// Whether mode `m` survives the 2/3-rule dealiasing mask.
    pub fn keeps_mode(&self, m: usize) -> bool {
        let s = &self.spectral;
        s.keep_x[m % self.nx] && s.keep_y[m / self.nx]
    }

    fn check_len(&self, len: usize) -> Result<usize, GridError> {
        let nh = self.n_h();
        if len == nh {
            Ok(1)
        } else if len == nh * self.nz {
            Ok(self.nz)
        } else {
            Err(GridError::DimensionMismatch {
                expected: format!("{} (2D) or {} (3D)", nh, nh * self.nz),
                got: len,
            })
        }
    }

    /// Forward horizontal transform, level by level, normalized so that a
    /// constant field `c` maps to `c` in mode `(0,0)`.
    pub fn fft_h(&self, field: &[f64]) -> Result<Vec<Complex64>, GridError> {
        self.check_len(field.len())?;
        Ok(self.forward(field))
    }

    /// Inverse of [`Grid::fft_h`]; returns the real part.
    pub fn ifft_h(&self, spectrum: &[Complex64]) -> Result<Vec<f64>, GridError> {
        self.check_len(spectrum.len())?;
        Ok(self.inverse(spectrum))
    }

    /// Unchecked forward transform of one or more stacked levels.
    pub(crate) fn forward(&self, field: &[f64]) -> Vec<Complex64> {
        let nh = self.n_h();
        let scale = 1.0 / nh as f64;
        let mut out: Vec<Complex64> = field
            .iter()
            .map(|&v| Complex64::new(v * scale, 0.0))
            .collect();
        let mut scratch = vec![Complex64::default(); nh];
        for level in out.chunks_mut(nh) {
            self.transform_level(level, &mut scratch, true);
        }
        out
    }

    /// Unchecked inverse transform of one or more stacked levels.
    pub(crate) fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let nh = self.n_h();
        let mut buf = spectrum.to_vec();
        let mut scratch = vec![Complex64::default(); nh];
        for level in buf.chunks_mut(nh) {
            self.transform_level(level, &mut scratch, false);
        }
        buf.into_iter().map(|c| c.re).collect()
    }

    fn transform_level(&self, level: &mut [Complex64], scratch: &mut [Complex64], forward: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let s = &self.spectral;
        let (fx, fy) = if forward {
            (&s.fwd_x, &s.fwd_y)
        } else {
            (&s.inv_x, &s.inv_y)
        };
        fx.process(level);
        for j in 0..ny {
            for i in 0..nx {
                scratch[i * ny + j] = level[j * nx + i];
            }
        }
        fy.process(scratch);
        for i in 0..nx {
            for j in 0..ny {
                level[j * nx + i] = scratch[i * ny + j];
            }
        }
    }

    /// Zeroes every mode outside the 2/3-rule band, in place.
    pub fn dealias(&self, spectrum: &mut [Complex64]) {
        let nh = self.n_h();
        for level in spectrum.chunks_mut(nh) {
            for (m, c) in level.iter_mut().enumerate() {
                if !self.keeps_mode(m) {
                    *c = Complex64::default();
                }
            }
        }
    }

    /// Horizontal gradient of a 2D or 3D field.
    pub fn gradient_h(&self, field: &[f64]) -> [Vec<f64>; 2] {
        let spec = self.forward(field);
        let nh = self.n_h();
        let mut gx = spec.clone();
        let mut gy = spec;
        for (idx, (cx, cy)) in gx.iter_mut().zip(gy.iter_mut()).enumerate() {
            let (sx, sy) = self.gradient_symbol(idx % nh);
            *cx *= sx;
            *cy *= sy;
        }
        [self.inverse(&gx), self.inverse(&gy)]
    }

    /// Horizontal divergence of a 2D or 3D vector field.
    pub fn divergence_h(&self, ax: &[f64], ay: &[f64]) -> Vec<f64> {
        let sx = self.forward(ax);
        let sy = self.forward(ay);
        let nh = self.n_h();
        let div: Vec<Complex64> = sx
            .iter()
            .zip(&sy)
            .enumerate()
            .map(|(idx, (a, b))| {
                let (gx, gy) = self.gradient_symbol(idx % nh);
                gx * a + gy * b
            })
            .collect();
        self.inverse(&div)
    }

    /// Horizontal Laplacian of a 2D or 3D field.
    pub fn laplacian_h(&self, field: &[f64]) -> Vec<f64> {
        let nh = self.n_h();
        let mut spec = self.forward(field);
        for (idx, c) in spec.iter_mut().enumerate() {
            *c *= -self.laplacian_symbol(idx % nh);
        }
        self.inverse(&spec)
    }
}
