//! Proof systems as alternating verifier/prover circuits: execution, views, induced channels.
//!
//! The verifier side is a [`RegisterLayout`]; the prover owns an extra register `P`. At prover
//! turn `j` the prover may act on the registers exposed at that turn, on every register handed
//! over to it at turns `≤ j`, and on `P`. Handed-over registers leave the verifier's view for
//! good. The usual `V`/`M` normal form exposes `M` at every turn and hands nothing over.

use std::collections::BTreeSet;

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::kernel;
use crate::linalg;
use crate::qla::{c, CMatrix, CVector, DensityMatrix, LowRankState, PureState, RegisterLayout, C64};
use crate::tol;

/// Registers made available to the prover at one of its turns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Turn {
    /// Registers the prover may act on during this turn and must return.
    pub exposed: Vec<String>,
    /// Registers given to the prover from this turn on.
    pub handed: Vec<String>,
}

impl Turn {
    pub fn exposing<S: AsRef<str>>(names: &[S]) -> Self {
        Self { exposed: names.iter().map(|s| s.as_ref().to_string()).collect(), handed: vec![] }
    }

    pub fn handing<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.handed.extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }
}

/// Acceptance as a disjunction of conjunctions of classical wire values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptRule {
    pub clauses: Vec<Vec<(usize, bool)>>,
}

impl AcceptRule {
    /// Accept iff `wire` reads 1.
    pub fn output(wire: usize) -> Self {
        Self { clauses: vec![vec![(wire, true)]] }
    }

    /// The wire of the first literal.
    pub fn output_wire(&self) -> usize {
        self.clauses[0][0].0
    }

    /// Single literal `wire = 1`, the plain output-qubit convention.
    pub fn is_single_output(&self) -> bool {
        self.clauses.len() == 1 && self.clauses[0].len() == 1 && self.clauses[0][0].1
    }

    pub fn wires(&self) -> BTreeSet<usize> {
        self.clauses.iter().flatten().map(|&(w, _)| w).collect()
    }

    /// Conjunction of two rules, expanded back into disjunctive form.
    pub fn and(&self, other: &AcceptRule) -> AcceptRule {
        let mut clauses = Vec::new();
        for a in &self.clauses {
            for b in &other.clauses {
                let mut cl = a.clone();
                cl.extend(b.iter().copied());
                clauses.push(cl);
            }
        }
        AcceptRule { clauses }
    }

    pub fn or(&self, other: &AcceptRule) -> AcceptRule {
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().cloned());
        AcceptRule { clauses }
    }

    /// Adds `literals` to every clause.
    pub fn with_literals(&self, literals: &[(usize, bool)]) -> AcceptRule {
        AcceptRule {
            clauses: self.clauses.iter().map(|cl| literals.iter().copied().chain(cl.iter().copied()).collect()).collect(),
        }
    }

    pub fn relabel(&self, map: &[usize]) -> AcceptRule {
        AcceptRule { clauses: self.clauses.iter().map(|cl| cl.iter().map(|&(w, v)| (map[w], v)).collect()).collect() }
    }

    /// Whether basis index `i` of an `n`-qubit register is accepted.
    pub fn accepts(&self, i: usize, masks: &[(usize, usize)]) -> bool {
        masks.iter().any(|&(m, want)| i & m == want)
    }

    pub fn masks(&self, n: usize) -> Vec<(usize, usize)> {
        self.clauses.iter().map(|cl| kernel::literal_mask(n, cl)).collect()
    }

    /// `‖Π_acc ψ‖²` for an `n`-qubit amplitude vector.
    pub fn probability(&self, amps: &[C64], n: usize) -> f64 {
        let masks = self.masks(n);
        amps.iter().enumerate().filter(|(i, _)| self.accepts(*i, &masks)).map(|(_, a)| a.norm_sqr()).sum()
    }

    /// Zeroes every rejected amplitude.
    pub fn project(&self, amps: &mut [C64], n: usize) {
        let masks = self.masks(n);
        for (i, a) in amps.iter_mut().enumerate() {
            if !self.accepts(i, &masks) {
                *a = c(0.0);
            }
        }
    }
}

/// One step of the alternating schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Verifier circuit, 0-based.
    Verifier(usize),
    /// Prover turn, 0-based.
    Prover(usize),
}

/// Verifier of an `m`-message protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofSystem {
    pub messages: usize,
    pub layout: RegisterLayout,
    pub turns: Vec<Turn>,
    pub verifier: Vec<Circuit>,
    pub accept: AcceptRule,
}

/// Number of verifier circuits `⌈(m+1)/2⌉`.
pub fn verifier_count(m: usize) -> usize {
    m.div_ceil(2) + usize::from(m % 2 == 0)
}

/// Number of prover turns `⌈m/2⌉`.
pub fn prover_count(m: usize) -> usize {
    m.div_ceil(2)
}

impl ProofSystem {
    /// Normal form: private register `V`, message register `M` exposed at every prover turn,
    /// accept iff `output_wire` reads 1.
    pub fn normal_form(v: usize, m_width: usize, messages: usize, verifier: Vec<Circuit>, output_wire: usize) -> Result<Self> {
        let layout = RegisterLayout::new([("V", v), ("M", m_width)])?;
        let verifier = verifier.into_iter().map(|c| c.extend_layout(&layout)).collect::<Result<Vec<_>>>()?;
        let ps = Self {
            messages,
            turns: vec![Turn::exposing(&["M"]); prover_count(messages)],
            layout,
            verifier,
            accept: AcceptRule::output(output_wire),
        };
        ps.validate()?;
        Ok(ps)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.messages;
        if m == 0 {
            return Err(QzkError::Arity("a protocol needs at least one message".into()));
        }
        if self.verifier.len() != verifier_count(m) {
            return Err(QzkError::Arity(format!(
                "{} verifier circuits for {m} messages (expected {})",
                self.verifier.len(),
                verifier_count(m)
            )));
        }
        if self.turns.len() != prover_count(m) {
            return Err(QzkError::Arity(format!(
                "{} prover turns for {m} messages (expected {})",
                self.turns.len(),
                prover_count(m)
            )));
        }
        let mut handed: BTreeSet<&str> = BTreeSet::new();
        for t in &self.turns {
            for r in t.exposed.iter().chain(&t.handed) {
                self.layout.width(r)?;
                if handed.contains(r.as_str()) {
                    return Err(QzkError::Schema(format!("register `{r}` listed after it was handed over")));
                }
            }
            handed.extend(t.handed.iter().map(|s| s.as_str()));
        }
        for (i, v) in self.verifier.iter().enumerate() {
            if v.layout != self.layout {
                return Err(QzkError::Dimension(format!("verifier circuit {} uses a different layout", i + 1)));
            }
            v.validate()?;
        }
        if self.accept.clauses.is_empty() || self.accept.clauses.iter().any(|c| c.is_empty()) {
            return Err(QzkError::Schema("accept rule needs non-empty clauses".into()));
        }
        crate::qla::check_wires(&self.accept.wires().into_iter().collect::<Vec<_>>(), self.layout.total())
            .or_else(|e| match e {
                QzkError::DuplicateWire(_) => Ok(()),
                e => Err(e),
            })?;
        Ok(())
    }

    pub fn prover_first(&self) -> bool {
        self.messages % 2 == 1
    }

    pub fn prover_turns(&self) -> usize {
        self.turns.len()
    }

    pub fn schedule(&self) -> Vec<Step> {
        let mut out = Vec::new();
        let np = self.turns.len();
        if self.prover_first() {
            for j in 0..np {
                out.push(Step::Prover(j));
                out.push(Step::Verifier(j));
            }
        } else {
            for j in 0..np {
                out.push(Step::Verifier(j));
                out.push(Step::Prover(j));
            }
            out.push(Step::Verifier(np));
        }
        out
    }

    /// Registers handed over at turns `0..=j` (0-based).
    pub fn handed_through(&self, j: usize) -> Vec<String> {
        self.turns[..=j].iter().flat_map(|t| t.handed.iter().cloned()).collect()
    }

    /// Registers the prover may touch at turn `j` (0-based), excluding `P`.
    pub fn accessible_registers(&self, j: usize) -> Vec<String> {
        let mut names: Vec<String> = self.turns[j].exposed.clone();
        for r in self.handed_through(j) {
            if !names.contains(&r) {
                names.push(r);
            }
        }
        self.layout.names().into_iter().filter(|n| names.contains(n)).collect()
    }

    /// Verifier-held registers after prover turn `j` (0-based), in layout order.
    pub fn view_registers(&self, j: usize) -> Vec<String> {
        let handed = self.handed_through(j);
        self.layout.names().into_iter().filter(|n| !handed.contains(n)).collect()
    }

    /// Verifier layout followed by the prover register.
    pub fn exec_layout(&self, prover_width: usize) -> Result<RegisterLayout> {
        let mut l = self.layout.clone();
        l.push("P", prover_width)?;
        Ok(l)
    }

    /// Wires the prover may act on at turn `j` in the execution layout.
    pub fn accessible_wires(&self, j: usize, prover_width: usize) -> Result<Vec<usize>> {
        let exec = self.exec_layout(prover_width)?;
        let mut wires = exec.wires_of(&self.accessible_registers(j))?;
        wires.extend(exec.wires("P")?);
        Ok(wires)
    }
}

/// Prover circuits over the execution layout (verifier layout + `P`).
#[derive(Debug, Clone, PartialEq)]
pub struct ProverStrategy {
    pub width: usize,
    pub circuits: Vec<Circuit>,
}

impl ProverStrategy {
    /// Checks turn count, layout and that each circuit stays within its accessible wires.
    pub fn validate(&self, ps: &ProofSystem) -> Result<()> {
        if self.circuits.len() != ps.prover_turns() {
            return Err(QzkError::Arity(format!(
                "{} prover circuits for {} prover turns",
                self.circuits.len(),
                ps.prover_turns()
            )));
        }
        let exec = ps.exec_layout(self.width)?;
        for (j, circ) in self.circuits.iter().enumerate() {
            if circ.layout != exec {
                return Err(QzkError::Dimension(format!("prover circuit {} uses a different layout", j + 1)));
            }
            circ.validate()?;
            let allowed = ps.accessible_wires(j, self.width)?;
            if let Some(w) = circ.wires_touched().into_iter().find(|w| !allowed.contains(w)) {
                let (reg, _) = exec.locate(w).unwrap_or(("?", 0));
                return Err(QzkError::Precondition(format!(
                    "prover circuit {} touches register `{reg}`, which is not accessible at that turn",
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Prover that does nothing.
    pub fn idle(ps: &ProofSystem, width: usize) -> Result<Self> {
        let exec = ps.exec_layout(width)?;
        Ok(Self { width, circuits: vec![Circuit::new(exec); ps.prover_turns()] })
    }
}

/// Verifier-held state right after a prover turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    /// 1-based prover-turn index.
    pub j: usize,
    pub registers: Vec<String>,
    pub state: LowRankState,
}

impl ViewState {
    pub fn density(&self) -> Result<DensityMatrix> {
        self.state.density()
    }
}

/// Runs the schedule on `amps` (an `n`-qubit vector whose leading wires follow the execution
/// layout), calling `after_prover(j, amps)` after every prover turn.
pub(crate) fn drive<F: FnMut(usize, &[C64])>(
    ps: &ProofSystem,
    pr: &ProverStrategy,
    amps: &mut [C64],
    n: usize,
    mut after_prover: F,
) {
    for step in ps.schedule() {
        match step {
            Step::Verifier(i) => ps.verifier[i].apply_to(amps, n),
            Step::Prover(j) => {
                pr.circuits[j].apply_to(amps, n);
                after_prover(j, amps);
            }
        }
    }
}

fn prepare(ps: &ProofSystem, pr: &ProverStrategy) -> Result<RegisterLayout> {
    ps.validate()?;
    pr.validate(ps)?;
    let exec = ps.exec_layout(pr.width)?;
    tol::check_state_cap("protocol execution", exec.total())?;
    Ok(exec)
}

/// Executes the protocol from `|0…0⟩` and returns the acceptance probability and final state.
pub fn run(ps: &ProofSystem, pr: &ProverStrategy) -> Result<(f64, PureState)> {
    let exec = prepare(ps, pr)?;
    let n = exec.total();
    let mut state = PureState::zero(n);
    drive(ps, pr, state.amps.as_mut_slice(), n, |_, _| {});
    let p = ps.accept.probability(state.amps.as_slice(), n);
    Ok((p.clamp(0.0, 1.0), state))
}

/// Verifier views after every prover turn.
pub fn views(ps: &ProofSystem, pr: &ProverStrategy) -> Result<Vec<ViewState>> {
    let exec = prepare(ps, pr)?;
    let n = exec.total();
    let mut state = PureState::zero(n);
    let mut out = Vec::new();
    let mut err = None;
    drive(ps, pr, state.amps.as_mut_slice(), n, |j, amps| {
        let regs = ps.view_registers(j);
        match exec.wires_of(&regs) {
            Ok(keep) => out.push(ViewState { j: j + 1, state: LowRankState::from_vector_wires(amps, n, &keep), registers: regs }),
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Choi matrix `J = (Φ ⊗ I)(Σ_ij |i⟩⟨j| ⊗ |i⟩⟨j|)`, output factor first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub in_dim: usize,
    pub out_dim: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    pub fn new(matrix: CMatrix, in_dim: usize) -> Result<Self> {
        let d = matrix.nrows();
        if d != matrix.ncols() || in_dim == 0 || d % in_dim != 0 {
            return Err(QzkError::Dimension(format!("{}x{} Choi matrix with input dim {in_dim}", d, matrix.ncols())));
        }
        Ok(Self { in_dim, out_dim: d / in_dim, matrix: linalg::hermitize(&matrix) })
    }

    /// `tr_out J`, which equals `I_in` for trace-preserving channels.
    pub fn output_trace(&self) -> CMatrix {
        let (di, dout) = (self.in_dim, self.out_dim);
        CMatrix::from_fn(di, di, |i, j| (0..dout).map(|o| self.matrix[(o * di + i, o * di + j)]).sum())
    }

    pub fn trace_preservation_defect(&self) -> f64 {
        let t = self.output_trace() - CMatrix::identity(self.in_dim, self.in_dim);
        t.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigvalsh(&self.matrix).first().copied().unwrap_or(0.0)
    }
}

/// Choi matrix of the channel from the verifier-private register `aux` (as input, in place of
/// `|0…0⟩`) to the `out` registers after a full execution.
pub fn induced_choi<S: AsRef<str>>(ps: &ProofSystem, pr: &ProverStrategy, aux: &str, out: &[S]) -> Result<ChoiMatrix> {
    let exec = prepare(ps, pr)?;
    let aux_w = ps.layout.width(aux)?;
    let mut full = exec.clone();
    full.push("REF", aux_w)?;
    let n = full.total();
    tol::check_state_cap("Choi execution", n)?;
    let out_qubits: usize = out.iter().map(|o| ps.layout.width(o.as_ref())).sum::<Result<usize>>()?;
    tol::check_dense_cap("Choi matrix", out_qubits + aux_w)?;
    let amps = choi_input(&full, aux, "REF")?;
    let mut amps = amps;
    drive(ps, pr, amps.as_mut_slice(), n, |_, _| {});
    choi_from_vector(amps.as_slice(), &full, out, "REF")
}

/// `Σ_i |i⟩_aux |i⟩_ref / √d` on `layout`.
pub(crate) fn choi_input(layout: &RegisterLayout, aux: &str, reference: &str) -> Result<CVector> {
    let n = layout.total();
    let aw = layout.wires(aux)?;
    let rw = layout.wires(reference)?;
    let ao = kernel::offsets(n, &aw);
    let ro = kernel::offsets(n, &rw);
    let d = ao.len();
    let mut amps = CVector::zeros(1 << n);
    for i in 0..d {
        amps[ao[i] | ro[i]] = c(1.0 / (d as f64).sqrt());
    }
    Ok(amps)
}

/// Choi matrix from a (possibly subnormalized) purified output: reduced state on
/// `out ++ [reference]`, scaled by the input dimension.
pub(crate) fn choi_from_vector<S: AsRef<str>>(amps: &[C64], layout: &RegisterLayout, out: &[S], reference: &str) -> Result<ChoiMatrix> {
    let n = layout.total();
    let mut keep = layout.wires_of(out)?;
    keep.extend(layout.wires(reference)?);
    let d_in = 1usize << layout.width(reference)?;
    let rho = LowRankState::from_vector_wires(amps, n, &keep).matrix();
    ChoiMatrix::new(rho * c(d_in as f64), d_in)
}

/// One round of classical coins: Hadamards on fresh `coins`, each copied into a message wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoinRound {
    pub coins: Vec<usize>,
    pub messages: Vec<usize>,
}

/// Coin structure of every intermediate verifier circuit, if each one is exactly the
/// canonical coin-flip template.
pub fn coin_structure(ps: &ProofSystem) -> Option<Vec<CoinRound>> {
    use crate::circuits::GateKind;
    let nv = ps.verifier.len();
    if nv < 2 {
        return Some(vec![]);
    }
    // Verifier circuit i is followed by prover turn `next`.
    let next_turn = |i: usize| if ps.prover_first() { i + 1 } else { i };
    let mut prover_ever: BTreeSet<usize> = BTreeSet::new();
    for j in 0..ps.prover_turns() {
        prover_ever.extend(ps.accessible_wires(j, 0).ok()?.into_iter().filter(|&w| w < ps.layout.total()));
    }
    let mut used: BTreeSet<usize> = BTreeSet::new();
    // Wires the prover could have written before verifier circuit i runs.
    let prover_before = |i: usize| -> Option<BTreeSet<usize>> {
        let last = if ps.prover_first() { i + 1 } else { i };
        let mut s = BTreeSet::new();
        for j in 0..last.min(ps.prover_turns()) {
            s.extend(ps.accessible_wires(j, 0).ok()?.into_iter().filter(|&w| w < ps.layout.total()));
        }
        Some(s)
    };
    let mut rounds = Vec::new();
    for i in 0..nv - 1 {
        let circ = &ps.verifier[i];
        let touched_before = prover_before(i)?;
        let mut coins: Vec<usize> = Vec::new();
        let mut messages: Vec<usize> = Vec::new();
        for g in &circ.gates {
            match (&g.kind, g.wires.as_slice()) {
                (GateKind::H, &[w]) if !coins.contains(&w) && !messages.contains(&w) => coins.push(w),
                (GateKind::Cnot, &[cw, t]) => {
                    let pos = coins.iter().position(|&x| x == cw)?;
                    if messages.len() != pos || coins.contains(&t) || messages.contains(&t) {
                        return None;
                    }
                    messages.push(t);
                }
                _ => return None,
            }
        }
        if coins.is_empty() || coins.len() != messages.len() {
            return None;
        }
        let j = next_turn(i);
        if j >= ps.prover_turns() {
            return None;
        }
        let next_access: BTreeSet<usize> =
            ps.accessible_wires(j, 0).ok()?.into_iter().filter(|&w| w < ps.layout.total()).collect();
        for (&cw, &mw) in coins.iter().zip(&messages) {
            let fresh = |w: usize| !used.contains(&w) && !touched_before.contains(&w);
            if !fresh(cw) || !fresh(mw) || prover_ever.contains(&cw) || !next_access.contains(&mw) {
                return None;
            }
        }
        used.extend(circ.wires_touched());
        rounds.push(CoinRound { coins, messages });
    }
    Some(rounds)
}

/// Whether every intermediate verifier circuit is the canonical coin-flip template.
pub fn is_public_coin(ps: &ProofSystem) -> bool {
    coin_structure(ps).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::MaxAbs;

    fn circ(l: &RegisterLayout) -> Circuit {
        Circuit::new(l.clone())
    }

    /// `V` and `M` one qubit each.
    fn vm() -> RegisterLayout {
        RegisterLayout::new([("V", 1), ("M", 1)]).unwrap()
    }

    #[test]
    fn counts_follow_parity() {
        assert_eq!((verifier_count(1), prover_count(1)), (1, 1));
        assert_eq!((verifier_count(2), prover_count(2)), (2, 1));
        assert_eq!((verifier_count(3), prover_count(3)), (2, 2));
        assert_eq!((verifier_count(4), prover_count(4)), (3, 2));
    }

    #[test]
    fn always_accept_and_always_reject() {
        let l = vm();
        let mut set = circ(&l);
        set.x(0).unwrap();
        let ps = ProofSystem::normal_form(1, 1, 2, vec![circ(&l), set], 0).unwrap();
        let pr = ProverStrategy::idle(&ps, 1).unwrap();
        assert!((run(&ps, &pr).unwrap().0 - 1.0).abs() < 1e-12);
        let ps = ProofSystem::normal_form(1, 1, 2, vec![circ(&l), circ(&l)], 0).unwrap();
        assert!(run(&ps, &pr).unwrap().0.abs() < 1e-12);
    }

    #[test]
    fn hadamard_twice_accepts_on_zero() {
        let l = vm();
        let mut h = circ(&l);
        h.h(1).unwrap();
        let mut ps = ProofSystem::normal_form(1, 1, 2, vec![h.clone(), h], 1).unwrap();
        ps.accept = AcceptRule { clauses: vec![vec![(1, false)]] };
        let pr = ProverStrategy::idle(&ps, 1).unwrap();
        assert!((run(&ps, &pr).unwrap().0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_sending_prover_view_is_mixed_on_m() {
        let l = vm();
        let ps = ProofSystem::normal_form(1, 1, 1, vec![circ(&l)], 0).unwrap();
        let exec = ps.exec_layout(1).unwrap();
        let mut p1 = Circuit::new(exec);
        p1.h(2).unwrap().cnot(2, 1).unwrap();
        let pr = ProverStrategy { width: 1, circuits: vec![p1] };
        let v = views(&ps, &pr).unwrap();
        assert_eq!(v.len(), 1);
        let rho = v[0].density().unwrap();
        let want = DensityMatrix::basis(1, 0).kron(&DensityMatrix::maximally_mixed(1));
        assert!((rho.matrix() - want.matrix()).max_abs() < 1e-12);
        assert!((v[0].state.trace() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn prover_cannot_touch_private_register() {
        let l = vm();
        let ps = ProofSystem::normal_form(1, 1, 1, vec![circ(&l)], 0).unwrap();
        let mut p1 = Circuit::new(ps.exec_layout(1).unwrap());
        p1.x(0).unwrap();
        let pr = ProverStrategy { width: 1, circuits: vec![p1] };
        assert!(matches!(run(&ps, &pr), Err(QzkError::Precondition(_))));
    }

    #[test]
    fn handed_registers_leave_the_view() {
        let l = RegisterLayout::new([("V", 1), ("M", 1), ("S", 1)]).unwrap();
        let mut v1 = circ(&l);
        v1.h(0).unwrap().cnot(0, 2).unwrap();
        let ps = ProofSystem {
            messages: 2,
            layout: l.clone(),
            turns: vec![Turn::exposing(&["M"]).handing(&["S"])],
            verifier: vec![v1, circ(&l)],
            accept: AcceptRule::output(0),
        };
        ps.validate().unwrap();
        assert_eq!(ps.view_registers(0), vec!["V".to_string(), "M".to_string()]);
        let pr = ProverStrategy::idle(&ps, 0).unwrap();
        let v = views(&ps, &pr).unwrap();
        let rho = v[0].density().unwrap();
        // the coin is decohered by the copy in S
        assert!(rho.matrix()[(0, 2)].norm() < 1e-12);
        assert!((rho.matrix()[(2, 2)].re - 0.5).abs() < 1e-12);
        assert!(is_public_coin(&ps));
    }

    #[test]
    fn public_coin_template_detection() {
        let l = RegisterLayout::new([("V", 1), ("M", 1), ("S", 1)]).unwrap();
        let mut v1 = circ(&l);
        v1.h(0).unwrap().cnot(0, 1).unwrap();
        let ps = ProofSystem::normal_form(2, 1, 2, vec![circ(&RegisterLayout::new([("V", 2), ("M", 1)]).unwrap()); 2], 0).unwrap();
        assert!(!is_public_coin(&ps), "idle first circuit flips no coin");
        // H on a private wire then CNOT of the message into private memory
        let l2 = RegisterLayout::new([("V", 2), ("M", 1)]).unwrap();
        let mut bad = circ(&l2);
        bad.h(0).unwrap().cnot(2, 1).unwrap();
        let ps = ProofSystem::normal_form(2, 1, 2, vec![bad, circ(&l2)], 0).unwrap();
        assert!(!is_public_coin(&ps));
        let mut good = circ(&l2);
        good.h(0).unwrap().cnot(0, 2).unwrap();
        let ps = ProofSystem::normal_form(2, 1, 2, vec![good, circ(&l2)], 0).unwrap();
        assert!(is_public_coin(&ps));
        let _ = v1;
    }

    #[test]
    fn choi_of_identity_and_constant_channels() {
        let l = RegisterLayout::new([("A", 1), ("O", 1)]).unwrap();
        let mut pass = circ(&l);
        pass.swap(0, 1).unwrap();
        let ps = ProofSystem {
            messages: 2,
            layout: l.clone(),
            turns: vec![Turn::default()],
            verifier: vec![circ(&l), pass],
            accept: AcceptRule::output(1),
        };
        let pr = ProverStrategy::idle(&ps, 0).unwrap();
        let j = induced_choi(&ps, &pr, "A", &["O"]).unwrap();
        let omega = CMatrix::from_fn(4, 4, |r, col| c(if [0, 3].contains(&r) && [0, 3].contains(&col) { 1.0 } else { 0.0 }));
        assert!((j.matrix.clone() - omega).max_abs() < 1e-12);
        let mut constant = circ(&l);
        constant.h(1).unwrap();
        let ps = ProofSystem { verifier: vec![circ(&l), constant], ..ps };
        let j = induced_choi(&ps, &pr, "A", &["O"]).unwrap();
        let plus = CMatrix::from_element(2, 2, c(0.5));
        assert!((j.matrix.clone() - plus.kronecker(&CMatrix::identity(2, 2))).max_abs() < 1e-12);
        assert!(j.trace_preservation_defect() < 1e-12);
    }
}
