//! Convergence against a manufactured periodic solution.

mod common;

use common::Manufactured;
use pebm::grid::Grid;
use pebm::stepper::{Stepper, StepperConfig};

fn run(nx: usize, nz: usize, dt: f64, cfg: &StepperConfig) -> f64 {
    let g = Grid::new(nx, nx, nz, dt).unwrap();
    let mms = Manufactured::default();
    let mut st = Stepper::new(&g, &Manufactured::params(), cfg).unwrap();
    let (end, _) = st.run(&mms.exact(&g, 0.0), &mms.source(), 1.0).unwrap();
    common::error(&g, &end, &mms.exact(&g, 1.0))
}

fn order(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn final_state(nx: usize, nz: usize, dt: f64, cfg: &StepperConfig) -> pebm::fields::State {
    let g = Grid::new(nx, nx, nz, dt).unwrap();
    let mms = Manufactured::default();
    let mut st = Stepper::new(&g, &Manufactured::params(), cfg).unwrap();
    st.run(&mms.exact(&g, 0.0), &mms.source(), 1.0).unwrap().0
}

fn no_dealias() -> StepperConfig {
    StepperConfig { dealias: false, ..StepperConfig::default() }
}

#[test]
fn exact_data_satisfy_the_constraint() {
    let g = Grid::new(8, 8, 6, 0.01).unwrap();
    let s = Manufactured::default().exact(&g, 0.3);
    let div = pebm::fields::barotropic_divergence(&g, &s.v);
    assert!(div.iter().all(|d| d.abs() < 1e-13));
}

#[test]
fn horizontal_resolution_does_not_matter() {
    // every term of the manufactured solution is resolved on 8 x 8
    let e8 = run(8, 4, 0.01, &no_dealias());
    let e16 = run(16, 4, 0.01, &no_dealias());
    assert!((e8 - e16).abs() < 1e-9 * e8, "{e8} vs {e16}");
}

#[test]
fn vertical_order_is_two() {
    let e: Vec<f64> = [4, 8, 16].iter().map(|&nz| run(8, nz, 5e-4, &no_dealias())).collect();
    let p = order(&e);
    assert!(p.iter().all(|p| *p > 1.9), "{e:?} {p:?}");
}

#[test]
fn euler_time_order_is_one() {
    let cfg = StepperConfig::euler();
    let reference = final_state(8, 6, 1.0 / 1600.0, &StepperConfig { dealias: false, ..cfg.clone() });
    let g = Grid::new(8, 8, 6, 1.0).unwrap();
    let e: Vec<f64> = [0.01, 0.005, 0.0025]
        .iter()
        .map(|&dt| final_state(8, 6, dt, &StepperConfig { dealias: false, ..cfg.clone() }).distance(&reference, &g))
        .collect();
    let p = order(&e);
    assert!(p.iter().all(|p| *p > 0.9 && *p < 1.3), "{e:?} {p:?}");
}
