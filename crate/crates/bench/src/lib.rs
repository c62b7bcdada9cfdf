//! Shared fixtures for the benchmark harness.

use mhdpp_core::problems::{find_problem, Simulation};
use mhdpp_core::scheme::SolverConfig;
use mhdpp_core::{ConservedState, Eos, PrimitiveState};
use mhdpp_core::state::prim_to_cons;

/// A catalog problem discretized at `cells` with degree `k`.
pub fn simulation(name: &str, cells: &[usize], k: usize) -> Simulation {
    let spec = find_problem(name).expect("catalog problem");
    let cfg = SolverConfig::new(k, spec.eos());
    spec.setup(cells, cfg).expect("valid setup")
}

/// A pair of strongly magnetized states for flux kernels.
pub fn state_pair(eos: &Eos) -> (ConservedState, ConservedState) {
    (
        prim_to_cons(&PrimitiveState::new(2.0, [0.3, -0.1, 0.0], 1e3, [3.0, 50.0, 50.0]), eos),
        prim_to_cons(&PrimitiveState::new(1e-3, [0.0, 0.2, 0.1], 1.0, [3.0, 50.0, -50.0]), eos),
    )
}
