//! Cheating-prover search, the fidelity-chain bound with its constructive converse, and
//! Choi-matrix comparisons.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::kernel;
use crate::linalg;
use crate::qip::{ChoiMatrix, ProofSystem, ProverStrategy, Step};
use crate::qla::{c, fidelity, partial_trace, purify, trace_norm, uhlmann_align, CMatrix, CVector, DensityMatrix, PureState, RegisterLayout, C64};
use crate::tol;

/// Settings for [`optimize_prover`].
#[derive(Debug, Clone, PartialEq)]
pub struct AttackConfig {
    /// Width of the cheating prover's private register.
    pub prover_width: usize,
    pub restarts: usize,
    pub iters: usize,
    /// Stop a restart once one sweep improves acceptance by less than this.
    pub tol: f64,
    pub seed: u64,
    /// Extra starting point tried before the identity and Haar restarts.
    pub warm_start: Option<ProverStrategy>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self { prover_width: 1, restarts: 8, iters: 500, tol: 1e-10, seed: 0, warm_start: None }
    }
}

/// Best cheating strategy found by the ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackResult {
    /// Lower bound on the optimal acceptance probability.
    pub best_p: f64,
    pub strategy: ProverStrategy,
    /// Sweeps used by the winning restart.
    pub iterations: usize,
    pub converged: bool,
    /// Acceptance after each sweep of the winning restart, starting with the initial value.
    pub history: Vec<f64>,
    /// Whether every restart was nondecreasing sweep by sweep.
    pub monotone: bool,
}

struct Ascent<'a> {
    ps: &'a ProofSystem,
    n: usize,
    steps: Vec<Step>,
    adjoints: Vec<Circuit>,
    access: Vec<Vec<usize>>,
}

struct RestartOutcome {
    p: f64,
    unitaries: Vec<CMatrix>,
    history: Vec<f64>,
    converged: bool,
    monotone: bool,
}

impl<'a> Ascent<'a> {
    fn new(ps: &'a ProofSystem, width: usize) -> Result<Self> {
        ps.validate()?;
        let exec = ps.exec_layout(width)?;
        let n = exec.total();
        tol::check_state_cap("prover optimization", n)?;
        let access = (0..ps.prover_turns()).map(|j| ps.accessible_wires(j, width)).collect::<Result<Vec<_>>>()?;
        for a in &access {
            tol::check_dense_cap("prover unitary", a.len())?;
        }
        Ok(Self { ps, n, steps: ps.schedule(), adjoints: ps.verifier.iter().map(Circuit::adjoint).collect(), access })
    }

    fn apply_prover(&self, amps: &mut [C64], j: usize, u: &CMatrix) {
        let acc = &self.access[j];
        let rest = kernel::complement(self.n, acc);
        let m = kernel::reshape(amps, self.n, acc, &rest);
        let out = kernel::unreshape(&(u * m), self.n, acc, &rest);
        amps.copy_from_slice(&out);
    }

    fn apply_step(&self, amps: &mut [C64], step: Step, us: &[CMatrix], adjoint: bool) {
        match step {
            Step::Verifier(i) => {
                let circ = if adjoint { &self.adjoints[i] } else { &self.ps.verifier[i] };
                circ.apply_to(amps, self.n)
            }
            Step::Prover(j) => {
                if adjoint {
                    self.apply_prover(amps, j, &us[j].adjoint())
                } else {
                    self.apply_prover(amps, j, &us[j])
                }
            }
        }
    }

    fn acceptance(&self, us: &[CMatrix]) -> f64 {
        let mut amps = PureState::zero(self.n).amps;
        for &s in &self.steps {
            self.apply_step(amps.as_mut_slice(), s, us, false);
        }
        self.ps.accept.probability(amps.as_slice(), self.n)
    }

    /// One pass over the prover turns, replacing each unitary by its best response.
    fn sweep(&self, us: &mut [CMatrix]) {
        let mut state = PureState::zero(self.n).amps;
        for (idx, &step) in self.steps.iter().enumerate() {
            let Step::Prover(j) = step else {
                self.apply_step(state.as_mut_slice(), step, us, false);
                continue;
            };
            let alpha = state.clone();
            let mut v = alpha.clone();
            for &s in &self.steps[idx..] {
                self.apply_step(v.as_mut_slice(), s, us, false);
            }
            self.ps.accept.project(v.as_mut_slice(), self.n);
            let norm = v.norm();
            if norm > 1e-150 {
                v /= c(norm);
                for &s in self.steps[idx + 1..].iter().rev() {
                    self.apply_step(v.as_mut_slice(), s, us, true);
                }
                let acc = &self.access[j];
                let rest = kernel::complement(self.n, acc);
                let a = kernel::reshape(alpha.as_slice(), self.n, acc, &rest);
                let g = kernel::reshape(v.as_slice(), self.n, acc, &rest);
                us[j] = linalg::max_trace_unitary(&(a * g.adjoint()));
            }
            state = alpha;
            self.apply_prover(state.as_mut_slice(), j, &us[j]);
        }
    }

    fn climb(&self, mut us: Vec<CMatrix>, cfg: &AttackConfig) -> RestartOutcome {
        let mut p = self.acceptance(&us);
        let mut history = vec![p];
        let mut converged = false;
        let mut monotone = true;
        for _ in 0..cfg.iters {
            self.sweep(&mut us);
            let next = self.acceptance(&us);
            if next < p - 1e-12 {
                monotone = false;
            }
            history.push(next);
            let gain = next - p;
            p = p.max(next);
            if gain.abs() < cfg.tol {
                converged = true;
                break;
            }
        }
        RestartOutcome { p: p.clamp(0.0, 1.0), unitaries: us, history, converged, monotone }
    }

    fn strategy(&self, width: usize, us: &[CMatrix]) -> Result<ProverStrategy> {
        let exec = self.ps.exec_layout(width)?;
        let circuits = us
            .iter()
            .zip(&self.access)
            .map(|(u, acc)| {
                let mut circ = Circuit::new(exec.clone());
                circ.custom(u.clone(), acc.clone())?;
                Ok(circ)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProverStrategy { width, circuits })
    }

    /// Dense form of a prover circuit on its accessible wires.
    fn densify(&self, pr: &ProverStrategy) -> Result<Vec<CMatrix>> {
        pr.validate(self.ps)?;
        pr.circuits
            .iter()
            .zip(&self.access)
            .map(|(circ, acc)| {
                let mut map = vec![0usize; circ.layout.total()];
                for (k, &w) in acc.iter().enumerate() {
                    map[w] = k;
                }
                circ.relabel(RegisterLayout::new([("A", acc.len())])?, &map)?.compile()
            })
            .collect()
    }
}

/// Alternating best-response ascent over prover unitaries. Each restart starts from the
/// identity (restart 0) or Haar-random unitaries; an optional warm start is tried first.
pub fn optimize_prover(ps: &ProofSystem, cfg: &AttackConfig) -> Result<AttackResult> {
    let asc = Ascent::new(ps, cfg.prover_width)?;
    let mut starts: Vec<Vec<CMatrix>> = Vec::new();
    if let Some(w) = &cfg.warm_start {
        if w.width != cfg.prover_width {
            return Err(QzkError::Parameter("warm start has a different prover width".into()));
        }
        starts.push(asc.densify(w)?);
    }
    for r in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        starts.push(
            asc.access
                .iter()
                .map(|a| {
                    let d = 1usize << a.len();
                    if r == 0 {
                        CMatrix::identity(d, d)
                    } else {
                        linalg::haar_unitary(d, &mut rng)
                    }
                })
                .collect(),
        );
    }
    let outcomes: Vec<RestartOutcome> = std::thread::scope(|s| {
        let handles: Vec<_> = starts.into_iter().map(|us| s.spawn(|| asc.climb(us, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("ascent worker panicked")).collect()
    });
    let monotone = outcomes.iter().all(|o| o.monotone);
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.p > a.p { b } else { a })
        .expect("at least one restart");
    Ok(AttackResult {
        best_p: best.p,
        strategy: asc.strategy(cfg.prover_width, &best.unitaries)?,
        iterations: best.history.len() - 1,
        converged: best.converged,
        history: best.history,
        monotone,
    })
}

/// Verifier unitaries, an accepting projector and snapshot states on `V ⊗ M`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainInstance {
    pub v_qubits: usize,
    pub m_qubits: usize,
    /// `V_1 … V_k`.
    pub unitaries: Vec<CMatrix>,
    pub projector: CMatrix,
    /// `ρ_1 … ρ_k`, with `ρ_1 = |0…0⟩⟨0…0|`.
    pub snapshots: Vec<DensityMatrix>,
    pub eps: f64,
    pub delta: f64,
}

/// Both sides of the fidelity-chain inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainBound {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Whether `tr Π V_k ρ_k V_k† ≥ 1 − ε`.
    pub hypothesis: bool,
    pub final_acceptance: f64,
}

impl ChainInstance {
    fn k(&self) -> usize {
        self.unitaries.len()
    }

    fn layout(&self) -> Result<RegisterLayout> {
        RegisterLayout::new([("V", self.v_qubits), ("M", self.m_qubits)])
    }

    pub fn validate(&self) -> Result<()> {
        let d = 1usize << (self.v_qubits + self.m_qubits);
        if self.k() < 2 || self.snapshots.len() != self.k() {
            return Err(QzkError::Arity(format!("{} unitaries and {} snapshots", self.k(), self.snapshots.len())));
        }
        for u in &self.unitaries {
            if u.nrows() != d || !linalg::is_unitary(u) {
                return Err(QzkError::Dimension(format!("chain unitary must be a {d}x{d} unitary")));
            }
        }
        if self.projector.nrows() != d || self.projector.ncols() != d || self.snapshots.iter().any(|s| s.dim() != d) {
            return Err(QzkError::Dimension("chain operators differ in dimension".into()));
        }
        if !(0.0..=1.0).contains(&self.eps) || !(0.0..=1.0).contains(&self.delta) {
            return Err(QzkError::Parameter("ε and δ must lie in [0, 1]".into()));
        }
        Ok(())
    }

    fn evolve(&self, j: usize) -> DensityMatrix {
        let u = &self.unitaries[j];
        DensityMatrix::from_unchecked(u * self.snapshots[j].matrix() * u.adjoint())
    }

    /// `Σ_j F(tr_M V_jρ_jV_j†, tr_M ρ_{j+1})`, one term per link.
    pub fn link_fidelities(&self) -> Result<Vec<f64>> {
        let l = self.layout()?;
        (0..self.k() - 1)
            .map(|j| {
                let a = partial_trace(&self.evolve(j), &l, &["V"])?;
                let b = partial_trace(&self.snapshots[j + 1], &l, &["V"])?;
                fidelity(&a, &b)
            })
            .collect()
    }

    pub fn final_acceptance(&self) -> f64 {
        (&self.projector * self.evolve(self.k() - 1).matrix()).trace().re
    }
}

/// Evaluates the fidelity-chain inequality `Σ F_j ≤ (k−1) − (√(1−ε) − √(1−δ))² / (2(k−1))`.
pub fn fidelity_chain_bound(ci: &ChainInstance) -> Result<ChainBound> {
    ci.validate()?;
    let k1 = (ci.k() - 1) as f64;
    let lhs: f64 = ci.link_fidelities()?.iter().sum();
    let gap = (1.0 - ci.eps).sqrt() - (1.0 - ci.delta).sqrt();
    let rhs = k1 - gap * gap / (2.0 * k1);
    let final_acceptance = ci.final_acceptance();
    Ok(ChainBound { lhs, rhs, holds: lhs <= rhs + tol::REPORTED, hypothesis: final_acceptance >= 1.0 - ci.eps, final_acceptance })
}

/// Prover assembled from Uhlmann alignments between consecutive purified snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotProver {
    /// `P_1 … P_{k−1}` on `M ⊗ P`, with `P` as wide as `V ⊗ M`.
    pub unitaries: Vec<CMatrix>,
    pub achieved: f64,
    /// `√(tr Π V_kρ_kV_k†) − Σ_j √(2(1 − F_j))`, which `√achieved` must dominate.
    pub chain_floor: f64,
}

pub fn build_prover_from_snapshots(ci: &ChainInstance) -> Result<SnapshotProver> {
    ci.validate()?;
    let n = ci.v_qubits + ci.m_qubits;
    let total = 2 * n;
    tol::check_state_cap("snapshot purification", total)?;
    let aligned = RegisterLayout::new([("V", ci.v_qubits), ("MP", ci.m_qubits + n)])?;
    let lift = |u: &CMatrix| u.kronecker(&CMatrix::identity(1 << n, 1 << n));
    let mut purified = vec![PureState::zero(total)];
    for s in &ci.snapshots[1..] {
        purified.push(purify(s)?.0);
    }
    let mut unitaries = Vec::new();
    for j in 0..ci.k() - 1 {
        let moved = PureState { amps: lift(&ci.unitaries[j]) * &purified[j].amps };
        unitaries.push(uhlmann_align(&moved, &purified[j + 1], &aligned, "MP")?);
    }
    let mut phi: CVector = PureState::zero(total).amps;
    let mp = aligned.wires("MP")?;
    for j in 0..ci.k() - 1 {
        phi = lift(&ci.unitaries[j]) * phi;
        kernel::apply_matrix(phi.as_mut_slice(), total, &mp, &unitaries[j]);
    }
    phi = lift(&ci.unitaries[ci.k() - 1]) * phi;
    let achieved = phi.dotc(&(lift(&ci.projector) * &phi)).re.clamp(0.0, 1.0);
    let slack: f64 = ci.link_fidelities()?.iter().map(|f| (2.0 * (1.0 - f).max(0.0)).sqrt()).sum();
    Ok(SnapshotProver { unitaries, achieved, chain_floor: ci.final_acceptance().max(0.0).sqrt() - slack })
}

/// Random chain instance: an honest chain with a random prover, whose later snapshots are
/// blended with random states by a random amount; the projector covers the top eigenvectors
/// of the final state and `δ` is drawn above the resulting `ε`.
pub fn random_chain_instance<R: rand::Rng + ?Sized>(k: usize, v_qubits: usize, m_qubits: usize, rng: &mut R) -> Result<ChainInstance> {
    let n = v_qubits + m_qubits;
    let d = 1usize << n;
    let layout = RegisterLayout::new([("V", v_qubits), ("M", m_qubits), ("P", n)])?;
    let unitaries: Vec<CMatrix> = (0..k).map(|_| linalg::haar_unitary(d, rng)).collect();
    let mp = layout.wires_of(&["M", "P"])?;
    let mut psi = PureState::zero(2 * n).amps;
    let mut snapshots = vec![DensityMatrix::basis(n, 0)];
    let noise: f64 = if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.3f64).powi(2) };
    for u in unitaries.iter().take(k - 1) {
        psi = u.kronecker(&CMatrix::identity(d, d)) * psi;
        let pj = linalg::haar_unitary(1 << mp.len(), rng);
        kernel::apply_matrix(psi.as_mut_slice(), 2 * n, &mp, &pj);
        let honest = crate::qla::LowRankState::from_vector_wires(psi.as_slice(), 2 * n, &layout.wires_of(&["V", "M"])?).matrix();
        let sigma = linalg::random_density(d, 1 + rng.random_range(0..d), rng);
        snapshots.push(DensityMatrix::new(honest * c(1.0 - noise) + sigma * c(noise))?);
    }
    let last = &unitaries[k - 1] * snapshots[k - 1].matrix() * unitaries[k - 1].adjoint();
    let (_, vecs) = linalg::eigh(&last);
    let rank = 1 + rng.random_range(0..d / 2);
    let top = vecs.columns(d - rank, rank).into_owned();
    let projector = &top * top.adjoint();
    let acc = (&projector * &last).trace().re.clamp(0.0, 1.0);
    let eps = (1.0 - acc + 1e-12).clamp(0.0, 1.0);
    let delta = eps + (1.0 - eps) * rng.random_range(0.05..1.0f64);
    Ok(ChainInstance { v_qubits, m_qubits, unitaries, projector, snapshots, eps, delta })
}

/// Choi-matrix comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiComparison {
    pub equal: bool,
    pub trace_norm: f64,
    /// `‖J_a − J_b‖₁ / d_in`, a lower bound on the diamond distance.
    pub diamond_lower: f64,
}

pub fn choi_bounds(a: &ChoiMatrix, b: &ChoiMatrix) -> Result<ChoiComparison> {
    if a.in_dim != b.in_dim || a.out_dim != b.out_dim {
        return Err(QzkError::Dimension(format!(
            "Choi matrices {}→{} and {}→{}",
            a.in_dim, a.out_dim, b.in_dim, b.out_dim
        )));
    }
    let t = trace_norm(&(&a.matrix - &b.matrix))?;
    let equal = t <= 1e-8;
    Ok(ChoiComparison { equal, trace_norm: t, diamond_lower: if equal { 0.0 } else { t / a.in_dim as f64 } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qip::AcceptRule;

    fn vm() -> RegisterLayout {
        RegisterLayout::new([("V", 1), ("M", 1)]).unwrap()
    }

    #[test]
    fn always_accept_and_reject() {
        let l = vm();
        let mut set = Circuit::new(l.clone());
        set.x(0).unwrap();
        let ps = ProofSystem::normal_form(1, 1, 2, vec![Circuit::new(l.clone()), set], 0).unwrap();
        let cfg = AttackConfig { restarts: 2, ..Default::default() };
        let r = optimize_prover(&ps, &cfg).unwrap();
        assert!((r.best_p - 1.0).abs() < 1e-12);
        let ps = ProofSystem::normal_form(1, 1, 2, vec![Circuit::new(l.clone()), Circuit::new(l)], 0).unwrap();
        let r = optimize_prover(&ps, &cfg).unwrap();
        assert!(r.best_p.abs() < 1e-12);
    }

    #[test]
    fn prover_can_flip_a_message_bit() {
        // accept iff M = 1 after a CNOT into V: a prover setting M to 1 wins.
        let l = vm();
        let mut v2 = Circuit::new(l.clone());
        v2.cnot(1, 0).unwrap();
        let ps = ProofSystem::normal_form(1, 1, 2, vec![Circuit::new(l), v2], 0).unwrap();
        let r = optimize_prover(&ps, &AttackConfig { restarts: 3, ..Default::default() }).unwrap();
        assert!((r.best_p - 1.0).abs() < 1e-9);
        assert!(r.monotone);
        let (p, _) = crate::qip::run(&ps, &r.strategy).unwrap();
        assert!((p - r.best_p).abs() < 1e-9);
    }

    #[test]
    fn swap_test_optimum_is_half_plus_half_fidelity() {
        // Verifier holds |+⟩ in V; the prover returns a qubit in M; swap test against V.
        let l = RegisterLayout::new([("V", 1), ("M", 1), ("B", 1)]).unwrap();
        let mut v1 = Circuit::new(l.clone());
        v1.h(0).unwrap();
        let mut v2 = Circuit::new(l.clone());
        v2.h(2).unwrap().cswap(2, 0, 1).unwrap().h(2).unwrap().x(2).unwrap();
        let ps = ProofSystem {
            messages: 2,
            layout: l.clone(),
            turns: vec![crate::qip::Turn::exposing(&["M"])],
            verifier: vec![v1, v2],
            accept: AcceptRule::output(2),
        };
        let r = optimize_prover(&ps, &AttackConfig { restarts: 3, ..Default::default() }).unwrap();
        assert!((r.best_p - 1.0).abs() < 1e-9, "prover can return |+⟩ exactly");
    }

    #[test]
    fn chain_formula_and_perfect_chain() {
        let d = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let unitaries: Vec<CMatrix> = (0..2).map(|_| linalg::haar_unitary(d, &mut rng)).collect();
        let rho2 = DensityMatrix::new(&unitaries[0] * DensityMatrix::basis(2, 0).matrix() * unitaries[0].adjoint()).unwrap();
        let last = &unitaries[1] * rho2.matrix() * unitaries[1].adjoint();
        let ci = ChainInstance {
            v_qubits: 1,
            m_qubits: 1,
            projector: last.clone(),
            unitaries,
            snapshots: vec![DensityMatrix::basis(2, 0), rho2],
            eps: 0.0,
            delta: 1.0,
        };
        let b = fidelity_chain_bound(&ci).unwrap();
        assert!((b.rhs - 0.5).abs() < 1e-12);
        assert!((b.lhs - 1.0).abs() < 1e-9);
        let p = build_prover_from_snapshots(&ci).unwrap();
        assert!((p.achieved - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identity_vs_bit_flip_choi() {
        let omega = CMatrix::from_fn(4, 4, |r, col| c(if [0, 3].contains(&r) && [0, 3].contains(&col) { 1.0 } else { 0.0 }));
        let x = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let xi = x.kronecker(&CMatrix::identity(2, 2));
        let a = ChoiMatrix::new(omega.clone(), 2).unwrap();
        let b = ChoiMatrix::new(&xi * omega * xi.adjoint(), 2).unwrap();
        let cmp = choi_bounds(&a, &b).unwrap();
        assert!((cmp.diamond_lower - 2.0).abs() < 1e-12);
        assert!(choi_bounds(&a, &a).unwrap().equal);
    }
}
