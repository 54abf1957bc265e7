//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use pebm::fields::State;
use pebm::grid::Grid;
use pebm::physics::{FnSource, ForcingFields, PhysicsParams, Source};

/// Manufactured periodic solution with period 1:
///
/// ```text
/// v_x = A sin(2 pi y) cos(wt) + B cos(2 pi x) sin(wt) cos(pi z),  v_y = 0
/// rho = R0 + C cos(2 pi x) cos(2 pi y) cos(wt)
/// T   = rho + H sin(2 pi y) sin(wt) (1 + cos(pi z))
/// ```
///
/// It meets `T_z(0) = 0`, `T(1) = rho`, `v_z = 0` at both ends and
/// `div_H vbar = 0`, and `rho > 0`, so with `q0 = 0` the surface sink is the
/// polynomial `-rho^4`.
#[derive(Clone, Copy, Debug)]
pub struct Manufactured {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r0: f64,
    pub h: f64,
}

impl Default for Manufactured {
    fn default() -> Self {
        Manufactured {
            a: 0.5,
            b: 0.5,
            c: 0.3,
            r0: 1.0,
            h: 0.4,
        }
    }
}

const W: f64 = 2.0 * PI;

impl Manufactured {
    pub fn params() -> PhysicsParams {
        PhysicsParams {
            q0: 0.0,
            ..PhysicsParams::default()
        }
    }

    pub fn exact(&self, g: &Grid, t: f64) -> State {
        let mut s = State::zeros(g);
        s.t = t;
        let (c, sn) = ((W * t).cos(), (W * t).sin());
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                let m = j * g.nx + i;
                let rho = self.r0 + self.c * (2.0 * PI * x).cos() * (2.0 * PI * y).cos() * c;
                s.rho[m] = rho;
                for (k, z) in g.z_levels.iter().enumerate() {
                    let idx = k * g.n_h() + m;
                    s.v[0][idx] =
                        self.a * (2.0 * PI * y).sin() * c + self.b * (2.0 * PI * x).cos() * sn * (PI * z).cos();
                    s.temp[idx] = rho + self.h * (2.0 * PI * y).sin() * sn * (1.0 + (PI * z).cos());
                }
            }
        }
        s
    }

    /// Sources that make [`Manufactured::exact`] a solution.
    pub fn forcing(&self, g: &Grid, t: f64) -> ForcingFields {
        let Manufactured { a, b, c: cc, r0, h } = *self;
        let mut f = ForcingFields::zeros(g);
        let (c, sn) = ((W * t).cos(), (W * t).sin());
        let (dc, dsn) = (-W * sn, W * c);
        let k2 = 4.0 * PI * PI;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (x, y) = (g.x(i), g.y(j));
                let (cx, sx, cy, sy) = ((2.0 * PI * x).cos(), (2.0 * PI * x).sin(), (2.0 * PI * y).cos(), (2.0 * PI * y).sin());
                let m = j * g.nx + i;
                let rho = r0 + cc * cx * cy * c;
                let rho_t = cc * cx * cy * dc;
                let rho_x = -2.0 * PI * cc * sx * cy * c;
                let rho_y = -2.0 * PI * cc * cx * sy * c;
                let lap_rho = -2.0 * k2 * cc * cx * cy * c;
                let hh = h * sy * sn;
                let (hh_t, hh_y, lap_hh) = (h * sy * dsn, 2.0 * PI * h * cy * sn, -k2 * hh);
                let vbar = a * sy * c;
                f.f3[m] = rho_t + vbar * rho_x - lap_rho + rho.powi(4);
                for (k, &z) in g.z_levels.iter().enumerate() {
                    let idx = k * g.n_h() + m;
                    let (cz, sz) = ((PI * z).cos(), (PI * z).sin());
                    let vx = a * sy * c + b * cx * sn * cz;
                    let w = 2.0 * b * sx * sn * sz;
                    let vx_t = a * sy * dc + b * cx * dsn * cz;
                    let vx_x = -2.0 * PI * b * sx * sn * cz;
                    let vx_z = -PI * b * cx * sn * sz;
                    let lap_vx = -k2 * a * sy * c - (k2 + PI * PI) * b * cx * sn * cz;
                    let prof = z + sz / PI;
                    let theta_x = rho_x * z;
                    let theta_y = rho_y * z + hh_y * prof;
                    f.f1[0][idx] = vx_t + vx * vx_x + w * vx_z - lap_vx - theta_x;
                    f.f1[1][idx] = -theta_y;
                    let t_t = rho_t + hh_t * (1.0 + cz);
                    let t_x = rho_x;
                    let t_z = -PI * hh * sz;
                    let lap_t = lap_rho + lap_hh * (1.0 + cz) - PI * PI * hh * cz;
                    f.f2[idx] = t_t + vx * t_x + w * t_z - lap_t;
                }
            }
        }
        f
    }

    pub fn source(self) -> impl Source {
        FnSource(move |g: &Grid, t: f64| self.forcing(g, t))
    }
}

/// X0 norm of a difference.
pub fn error(g: &Grid, a: &State, b: &State) -> f64 {
    a.distance(b, g)
}
