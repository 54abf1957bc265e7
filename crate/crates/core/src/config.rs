//! Run configuration: a TOML file with one table per block.
//!
//! ```toml
//! [grid]
//! nx = 16
//! ny = 16
//! nz = 8
//! dt = 0.01
//!
//! [forcing]
//! period = 1.0
//! [[forcing.modes]]
//! field = "f2"
//! amplitude = 0.5
//! harmonic = 1
//! kx = 1
//! ```
//!
//! Every block may be omitted. `orbit.period` defaults to `forcing.period`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Perturbation;
use crate::error::ConfigError;
use crate::grid::Grid;
use crate::orbit::{steps_per_period, OrbitConfig, SteadyConfig};
use crate::physics::{Forcing, PhysicsParams};
use crate::stepper::StepperConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridBlock {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dt: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock {
            nx: 16,
            ny: 16,
            nz: 8,
            dt: 0.01,
        }
    }
}

/// Initial data and run lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunBlock {
    /// Final time for `simulate` and `check-energy`.
    pub t_end: f64,
    /// Seed for random initial data; `None` starts from rest.
    pub seed: Option<u64>,
    /// X0 norm of the random initial state.
    pub amplitude: f64,
    /// Highest Fourier mode in the random initial state.
    pub max_mode: usize,
    pub perturbation: Perturbation,
    pub epsilon: f64,
    /// Length of the paired run, in forcing periods.
    pub ws_periods: usize,
    /// Sample the paired runs every this many steps.
    pub ws_stride: usize,
}

impl Default for RunBlock {
    fn default() -> Self {
        RunBlock {
            t_end: 1.0,
            seed: None,
            amplitude: 0.1,
            max_mode: 2,
            perturbation: Perturbation::Surface,
            epsilon: 1e-6,
            ws_periods: 2,
            ws_stride: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputBlock {
    /// Write a snapshot every this many steps; 0 writes the final state only.
    pub snapshot_every: usize,
    /// Energy trace file name, relative to the output directory.
    pub trace: String,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            snapshot_every: 0,
            trace: "energy.csv".to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridBlock,
    pub physics: PhysicsParams,
    pub forcing: Forcing,
    pub stepper: StepperConfig,
    pub orbit: OrbitConfig,
    pub steady: SteadyConfig,
    pub run: RunBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    /// Parses and validates, reporting every problem at once.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let raw: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let has_orbit_period = raw
            .get("orbit")
            .and_then(|o| o.as_table())
            .is_some_and(|o| o.contains_key("period"));
        if !has_orbit_period {
            cfg.orbit.period = cfg.forcing.period;
        }
        let errs = cfg.problems();
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config always serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        std::fs::write(path, self.to_toml()).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    /// The grid; only fails on configs that were not validated.
    pub fn grid(&self) -> Result<Grid, ConfigError> {
        let g = &self.grid;
        Grid::new(g.nx, g.ny, g.nz, g.dt).map_err(|e| ConfigError::Invalid(vec![format!("grid: {e}")]))
    }

    /// Every violated invariant, as readable messages.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let grid = match self.grid() {
            Ok(g) => Some(g),
            Err(ConfigError::Invalid(e)) => {
                errs.extend(e);
                None
            }
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };
        if let Err(e) = self.physics.validate() {
            errs.push(format!("physics: {e}"));
        }
        if let Err(e) = self.forcing.validate() {
            errs.push(format!("forcing: {e}"));
        }
        if !(self.stepper.blowup_threshold > 0.0) {
            errs.push(format!(
                "stepper: blowup_threshold must be positive, got {}",
                self.stepper.blowup_threshold
            ));
        }
        if let Err(e) = self.orbit.validate() {
            errs.push(format!("orbit: {e}"));
        }
        if let Some(g) = &grid {
            if self.forcing.period > 0.0 {
                if let Err(e) = steps_per_period(g, self.forcing.period) {
                    errs.push(format!("forcing: {e}"));
                }
            }
            if self.orbit.period > 0.0 && self.orbit.period != self.forcing.period {
                if let Err(e) = steps_per_period(g, self.orbit.period) {
                    errs.push(format!("orbit: {e}"));
                }
            }
        }
        if self.forcing.period > 0.0 && self.orbit.period > 0.0 {
            let ratio = self.orbit.period / self.forcing.period;
            if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio {
                errs.push(format!(
                    "orbit: period {} is not a whole multiple of the forcing period {}",
                    self.orbit.period, self.forcing.period
                ));
            }
        }
        let s = &self.steady;
        if !(s.chunk > 0.0 && s.tol > 0.0 && s.max_time >= s.chunk) {
            errs.push("steady: need chunk > 0, tol > 0 and max_time >= chunk".to_string());
        }
        let r = &self.run;
        if !(r.t_end > 0.0 && r.t_end.is_finite()) {
            errs.push(format!("run: t_end must be positive, got {}", r.t_end));
        }
        if !(r.amplitude >= 0.0 && r.amplitude.is_finite()) {
            errs.push(format!("run: amplitude must be nonnegative, got {}", r.amplitude));
        }
        if r.max_mode == 0 {
            errs.push("run: max_mode must be at least 1".to_string());
        }
        if !r.epsilon.is_finite() {
            errs.push("run: epsilon must be finite".to_string());
        }
        if r.ws_periods == 0 || r.ws_stride == 0 {
            errs.push("run: ws_periods and ws_stride must be at least 1".to_string());
        }
        if self.output.trace.is_empty() {
            errs.push("output: trace file name is empty".to_string());
        }
        errs
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    RunConfig::from_toml(&text)
}
