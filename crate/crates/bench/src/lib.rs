//! Shared setup for the benchmarks in `benches/`.

use pxp::basis::build_single_dw;
use pxp::mps::{MpsState, TrotterPlan, TruncationPolicy};
use pxp::DriveParams;

/// A centred single wall evolved for `t` at `dt = 0.05`, truncated to
/// `chi`. Long enough times saturate the bond dimension.
pub fn evolved_wall(sites: usize, chi: usize, t: f64) -> MpsState {
    let bond = 2 * (sites / 4);
    let mut mps = MpsState::from_config(&build_single_dw(sites, bond).expect("valid wall"));
    let policy = TruncationPolicy::new(chi, 1e-10).expect("valid policy");
    let plan = TrotterPlan::new(0.05).expect("valid step");
    let steps = (t / 0.05).round() as usize;
    plan.evolve(&mut mps, 0.0, steps, &DriveParams::bare(), &policy).expect("evolution succeeds");
    mps
}
