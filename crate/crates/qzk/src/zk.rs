//! Zero-knowledge checks: honest-verifier view comparison, the rewinding simulator against
//! dishonest verifiers, and simulators allowed to declare failure.

use crate::error::{QzkError, Result};
use crate::qip::{views, ProofSystem, ProverStrategy};
use crate::simulator::SimulatorEnsemble;
use crate::tol;

mod fail;
mod rewind;

pub use fail::{check_fail_form, fail_amplify, fail_wrap, FailForm};
pub use rewind::{rewind_run, rewind_run_wide, DishonestVerifier, RewindResult};

/// How strictly simulated and real views must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HvMode {
    /// Every distance must vanish to the reported tolerance.
    Perfect,
    /// Distances are reported; no threshold is imposed.
    Statistical,
}

/// Per-turn trace-norm distances between simulated and real views.
#[derive(Debug, Clone, PartialEq)]
pub struct HvReport {
    pub mode: HvMode,
    pub distances: Vec<f64>,
    pub passed: bool,
}

impl HvReport {
    pub fn max(&self) -> f64 {
        self.distances.iter().copied().fold(0.0, f64::max)
    }
}

/// `‖S(j) − view(j)‖₁` for every prover turn.
pub fn hv_check(ps: &ProofSystem, honest: &ProverStrategy, sim: &SimulatorEnsemble, mode: HvMode) -> Result<HvReport> {
    if sim.fail_flag {
        return Err(QzkError::Precondition("simulator carries a failure flag; its outputs are not views".into()));
    }
    let real = views(ps, honest)?;
    let simulated = sim.outputs(ps)?;
    let distances = real
        .iter()
        .zip(&simulated)
        .map(|(v, s)| v.state.trace_distance(s))
        .collect::<Result<Vec<_>>>()?;
    let passed = match mode {
        HvMode::Perfect => distances.iter().all(|&d| d <= tol::REPORTED),
        HvMode::Statistical => distances.iter().all(|d| d.is_finite()),
    };
    Ok(HvReport { mode, distances, passed })
}
