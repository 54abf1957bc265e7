//! `pebm`: command-line driver.
//!
//! Exit codes: 0 success, 1 numerical failure (blow-up, guard violation,
//! non-convergence, failed check), 2 bad configuration or input files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pebm::config::{load_config, RunConfig};
use pebm::diagnostics::{self, Perturbation};
use pebm::error::{OrbitError, StepError};
use pebm::fields::{smooth_random_state, State};
use pebm::grid::Grid;
use pebm::orbit::{self, find_periodic, find_steady_state};
use pebm::snapshot::{load_snapshot, save_snapshot};
use pebm::stepper::Stepper;

#[derive(Parser)]
#[command(name = "pebm", version, about = "Primitive equations coupled to a surface energy balance model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Start from this snapshot instead of generated initial data.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Random initial data with this seed (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate from the initial state to `run.t_end`.
    Simulate(Common),
    /// Search for a fixed point of the period map.
    FindPeriodic(Common),
    /// Integrate constant forcing until the state stops changing.
    Steady(Common),
    /// Integrate and check the discrete energy inequality and Gronwall envelope.
    CheckEnergy {
        #[command(flatten)]
        common: Common,
        /// Allowed positive residual, relative to the largest energy on the trace.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Run a perturbed pair and fit the difference growth.
    WsUniqueness {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_perturbation)]
        perturbation: Option<Perturbation>,
        /// Perturbation size (overrides `run.epsilon`).
        #[arg(long)]
        epsilon: Option<f64>,
        /// Length of the paired run in forcing periods (overrides `run.ws_periods`).
        #[arg(long)]
        periods: Option<usize>,
    },
}

fn parse_perturbation(s: &str) -> Result<Perturbation, String> {
    match s {
        "velocity" => Ok(Perturbation::Velocity),
        "surface" => Ok(Perturbation::Surface),
        _ => Err(format!("unknown perturbation '{s}' (velocity or surface)")),
    }
}

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<StepError> for Failure {
    fn from(e: StepError) -> Self {
        Failure::Numerical(e.to_string())
    }
}

impl From<OrbitError> for Failure {
    fn from(e: OrbitError) -> Self {
        match e {
            OrbitError::Step(s) => Failure::Numerical(s.to_string()),
            other => Failure::Input(other.to_string()),
        }
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Numerical(format!("cannot write {}: {e}", path.display()))
}

struct Setup {
    cfg: RunConfig,
    grid: Grid,
    stepper: Stepper,
    x0: State,
    out: PathBuf,
    quiet: bool,
}

impl Setup {
    fn new(c: &Common) -> Result<Self, Failure> {
        let cfg = load_config(&c.config).map_err(|e| Failure::Input(e.to_string()))?;
        let grid = cfg.grid().map_err(|e| Failure::Input(e.to_string()))?;
        let stepper = Stepper::new(&grid, &cfg.physics, &cfg.stepper)?;
        let x0 = match (&c.resume, c.seed.or(cfg.run.seed)) {
            (Some(path), _) => load_snapshot(&grid, path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?,
            (None, Some(seed)) => smooth_random_state(&grid, seed, cfg.run.amplitude, cfg.run.max_mode as i64),
            (None, None) => State::zeros(&grid),
        };
        std::fs::create_dir_all(&c.out).map_err(io(&c.out))?;
        Ok(Setup {
            cfg,
            grid,
            stepper,
            x0,
            out: c.out.clone(),
            quiet: c.quiet,
        })
    }

    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        let p = self.path(name);
        File::create(&p).map(BufWriter::new).map_err(io(&p))
    }

    fn snapshot(&self, name: &str, s: &State) -> Result<(), Failure> {
        let p = self.path(name);
        save_snapshot(&self.grid, s, &p).map_err(|e| Failure::Numerical(format!("{}: {e}", p.display())))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), Failure> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(io(&p))
    }

    fn write_trace(&self, trace: &diagnostics::EnergyTrace) -> Result<(), Failure> {
        let name = self.cfg.output.trace.clone();
        trace.write_csv(self.create(&name)?).map_err(io(&self.path(&name)))
    }

    /// Integrates to `x0.t + run.t_end`, emitting snapshots on the
    /// configured cadence.
    fn integrate(&mut self) -> Result<(State, diagnostics::EnergyTrace), Failure> {
        let every = self.cfg.output.snapshot_every;
        let mut step = 0usize;
        let mut write_err = None;
        let (grid, out) = (self.grid.clone(), self.out.clone());
        let t_end = self.x0.t + self.cfg.run.t_end;
        let result = self.stepper.simulate(&self.x0, &self.cfg.forcing, t_end, &mut |s, _| {
            step += 1;
            if every > 0 && step.is_multiple_of(every) && write_err.is_none() {
                let p = out.join(format!("snapshot_{step:06}.bin"));
                if let Err(e) = save_snapshot(&grid, s, &p) {
                    write_err = Some(format!("{}: {e}", p.display()));
                }
            }
        });
        if let Some(e) = write_err {
            return Err(Failure::Numerical(e));
        }
        Ok(result?)
    }
}

fn simulate(c: &Common) -> Result<(), Failure> {
    let mut s = Setup::new(c)?;
    let (state, trace) = s.integrate()?;
    s.write_trace(&trace)?;
    s.snapshot("final.bin", &state)?;
    let last = trace.records.last().copied().unwrap_or_default();
    s.say(&format!(
        "t = {:.6}: |v|^2 = {:e}, |T|^2 = {:e}, |rho|^2 = {:e} ({} steps)",
        last.t,
        last.v2,
        last.temp2,
        last.rho2,
        trace.len().saturating_sub(1)
    ));
    Ok(())
}

fn periodic(c: &Common) -> Result<(), Failure> {
    let mut s = Setup::new(c)?;
    let res = find_periodic(&mut s.stepper, &s.x0, &s.cfg.forcing, &s.cfg.orbit)?;
    res.write_residual_csv(s.create("residuals.csv")?).map_err(io(&s.path("residuals.csv")))?;
    s.write_trace(&res.energy_trace_final_period)?;
    s.snapshot("orbit.bin", &res.state)?;
    let summary = res.summary();
    s.write_text("orbit.txt", &summary)?;
    s.say(summary.trim_end());
    if res.converged {
        Ok(())
    } else {
        Err(Failure::Numerical(format!(
            "no periodic orbit: residual {:e} after {} iterations (tol {:e})",
            res.final_residual(),
            res.residual_history.len(),
            s.cfg.orbit.tol
        )))
    }
}

fn steady(c: &Common) -> Result<(), Failure> {
    let mut s = Setup::new(c)?;
    let res = find_steady_state(&mut s.stepper, &s.x0, &s.cfg.forcing, &s.cfg.steady)?;
    s.snapshot("steady.bin", &res.state)?;
    let mut csv = String::from("chunk,rate\n");
    for (i, r) in res.rate_history.iter().enumerate() {
        csv += &format!("{},{r:?}\n", i + 1);
    }
    s.write_text("steady_rates.csv", &csv)?;
    let summary = format!(
        "converged: {}\nchunks: {}\nfinal_rate: {:e}\ntendency_residual: {:e}\n",
        res.converged,
        res.rate_history.len(),
        res.rate_history.last().copied().unwrap_or(f64::NAN),
        res.tendency_residual
    );
    s.write_text("steady.txt", &summary)?;
    s.say(summary.trim_end());
    if res.converged {
        Ok(())
    } else {
        Err(Failure::Numerical("steady state not reached within max_time".into()))
    }
}

fn check_energy(c: &Common, tol: f64) -> Result<(), Failure> {
    let mut s = Setup::new(c)?;
    let (_, trace) = s.integrate()?;
    s.write_trace(&trace)?;
    let mut csv = String::from("t,step_residual\n");
    for (r, rec) in trace.step_residuals().iter().zip(trace.records.iter().skip(1)) {
        csv += &format!("{:?},{r:?}\n", rec.t);
    }
    s.write_text("energy_residuals.csv", &csv)?;
    let (worst, t0, t1) = diagnostics::max_subinterval_residual(&trace);
    let times: Vec<f64> = trace.records.iter().map(|r| r.t).collect();
    let phi = diagnostics::phi_series(&s.grid, &s.cfg.forcing, &s.cfg.physics, &times);
    let env = diagnostics::gronwall_envelope_check(&trace, &phi).map_err(|e| Failure::Numerical(e.to_string()))?;
    let scale = trace.records.iter().map(|r| r.energy()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let ok = worst <= tol * scale && env.max_relative <= 1e-9;
    let report = format!(
        "max_residual: {worst:e}\nmax_residual_interval: [{t0:?}, {t1:?}]\nmax_energy: {scale:e}\n\
         envelope_max_relative: {:e}\nenergy_inequality: {}\n",
        env.max_relative,
        if ok { "holds" } else { "violated" }
    );
    s.write_text("energy_check.txt", &report)?;
    s.say(report.trim_end());
    if ok {
        Ok(())
    } else {
        Err(Failure::Numerical(format!("energy check failed (tolerance {tol:e} relative)")))
    }
}

fn ws(c: &Common, kind: Option<Perturbation>, eps: Option<f64>, periods: Option<usize>) -> Result<(), Failure> {
    let s = Setup::new(c)?;
    let kind = kind.unwrap_or(s.cfg.run.perturbation);
    let eps = eps.unwrap_or(s.cfg.run.epsilon);
    let periods = periods.unwrap_or(s.cfg.run.ws_periods);
    let steps = orbit::steps_per_period(&s.grid, s.cfg.forcing.period)? * periods;
    let t_end = s.x0.t + steps as f64 * s.grid.dt;
    let y0 = diagnostics::perturb(&s.grid, &s.x0, kind, eps);
    let mut a = Stepper::new(&s.grid, &s.cfg.physics, &s.cfg.stepper)?;
    let mut b = Stepper::new(&s.grid, &s.cfg.physics, &s.cfg.stepper)?;
    let (r1, r2) = diagnostics::run_pair((&mut a, &mut b), &y0, &s.x0, &s.cfg.forcing, t_end, s.cfg.run.ws_stride)?;
    let (trace, cert) =
        diagnostics::weak_strong_contraction(&s.grid, &r1, &r2).map_err(|e| Failure::Numerical(e.to_string()))?;
    trace.write_csv(s.create("difference.csv")?).map_err(io(&s.path("difference.csv")))?;
    let text = cert.to_text();
    s.write_text("certificate.txt", &text)?;
    s.say(text.trim_end());
    if cert.holds() {
        Ok(())
    } else {
        Err(Failure::Numerical("difference growth not bounded by a finite constant".into()))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("PEBM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Input(format!("PEBM_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Simulate(c) => simulate(c),
        Command::FindPeriodic(c) => periodic(c),
        Command::Steady(c) => steady(c),
        Command::CheckEnergy { common, tol } => check_energy(common, *tol),
        Command::WsUniqueness {
            common,
            perturbation,
            epsilon,
            periods,
        } => ws(common, *perturbation, *epsilon, *periods),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
