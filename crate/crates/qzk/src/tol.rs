//! Numerical tolerances and size caps shared by every module.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Structural checks: unitarity, hermiticity, normalization.
pub const STRUCTURAL: f64 = 1e-12;
/// Quantities derived through several products (partial traces, purifications).
pub const DERIVED: f64 = 1e-10;
/// Comparisons reported against claimed bounds.
pub const REPORTED: f64 = 1e-9;
/// Eigenvalues of PSD inputs in `[EIG_CLIP, 0)` are treated as zero.
pub const EIG_CLIP: f64 = -1e-10;

/// Default cap on state-vector simulations (qubits).
pub const DEFAULT_STATE_CAP: usize = 20;
/// Default cap on dense operators: compiled unitaries and materialized density matrices.
pub const DEFAULT_DENSE_CAP: usize = 10;

static STATE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_STATE_CAP);
static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);

/// Current state-vector cap.
pub fn state_cap() -> usize {
    STATE_CAP.load(Ordering::Relaxed)
}

/// Current dense-operator cap.
pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

/// Overrides both caps (used by the CLI `--state-cap` / `--dense-cap` flags).
pub fn set_caps(state: usize, dense: usize) {
    STATE_CAP.store(state, Ordering::Relaxed);
    DENSE_CAP.store(dense, Ordering::Relaxed);
}

pub(crate) fn check_state_cap(what: &str, qubits: usize) -> crate::Result<()> {
    let cap = state_cap();
    if qubits > cap {
        return Err(crate::QzkError::CapExceeded { what: what.to_string(), qubits, cap });
    }
    Ok(())
}

pub(crate) fn check_dense_cap(what: &str, qubits: usize) -> crate::Result<()> {
    let cap = dense_cap();
    if qubits > cap {
        return Err(crate::QzkError::CapExceeded { what: what.to_string(), qubits, cap });
    }
    Ok(())
}
