//! Rewinding simulator for three-message public-coin protocols against a dishonest verifier.
//!
//! Register roles: `M` is the prover's first message, `S` the dishonest verifier's reply
//! (the coin message), `W` its workspace, `X` its auxiliary input, `N` the prover's second
//! message and `R` the simulated coin. `A` collects the simulator's ancilla together with
//! the verifier registers that are neither `M`, `N` nor the coin. `F` flags a wrong guess.

use rand::Rng;

use crate::circuits::Circuit;
use crate::error::{QzkError, Result};
use crate::linalg;
use crate::qip::{choi_from_vector, choi_input, coin_structure, ChoiMatrix, ProofSystem, ProverStrategy};
use crate::qla::{c, CVector, DensityMatrix, LowRankState, RegisterLayout};
use crate::simulator::{SimulatorEnsemble, SIM};
use crate::tol;

/// A verifier that replaces the coin flip by an arbitrary unitary `W₁` on `S, W, X, M` and
/// carries an auxiliary state on `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct DishonestVerifier {
    /// Circuit over the layout `[S, W, X, M]`.
    pub w1: Circuit,
    pub aux_state: DensityMatrix,
}

/// Shape of the public-coin protocol as seen by the rewinding simulator.
struct Roles {
    coin_wires: Vec<usize>,
    message_wires: Vec<usize>,
    m_wires: Vec<usize>,
    n_wires: Vec<usize>,
}

fn roles(ps: &ProofSystem) -> Result<Roles> {
    if ps.messages != 3 {
        return Err(QzkError::Precondition(format!("rewinding needs a 3-message protocol, got {}", ps.messages)));
    }
    let rounds = coin_structure(ps).ok_or_else(|| QzkError::Precondition("protocol is not public-coin".into()))?;
    let round = rounds.first().ok_or_else(|| QzkError::Precondition("protocol flips no coin".into()))?;
    if ps.turns.iter().any(|t| !t.handed.is_empty()) {
        return Err(QzkError::Unsupported("rewinding needs a protocol that hands no registers over".into()));
    }
    let m_wires = ps.layout.wires_of(&ps.turns[0].exposed)?;
    let n_wires: Vec<usize> = ps
        .layout
        .wires_of(&ps.turns[1].exposed)?
        .into_iter()
        .filter(|w| !round.messages.contains(w))
        .collect();
    if n_wires.iter().any(|w| m_wires.contains(w)) {
        return Err(QzkError::Precondition("prover messages overlap".into()));
    }
    Ok(Roles { coin_wires: round.coins.clone(), message_wires: round.messages.clone(), m_wires, n_wires })
}

impl DishonestVerifier {
    /// Layout `[S, W, X, M]` of `W₁` for a protocol with `c` coin bits.
    pub fn layout(ps: &ProofSystem, work: usize, aux: usize) -> Result<RegisterLayout> {
        let r = roles(ps)?;
        let m = r.m_wires.len();
        RegisterLayout::new([("S", r.coin_wires.len()), ("W", work), ("X", aux), ("M", m)])
    }

    /// Haar-random `W₁` and a random mixed auxiliary state.
    pub fn random<R: Rng + ?Sized>(ps: &ProofSystem, work: usize, aux: usize, rng: &mut R) -> Result<Self> {
        let layout = Self::layout(ps, work, aux)?;
        let n = layout.total();
        tol::check_dense_cap("dishonest verifier", n)?;
        let mut w1 = Circuit::new(layout);
        w1.custom(linalg::haar_unitary(1 << n, rng), (0..n).collect())?;
        let d = 1usize << aux;
        let aux_state = DensityMatrix::new(linalg::random_density(d, 1 + rng.random_range(0..d), rng))?;
        Ok(Self { w1, aux_state })
    }

    /// The honest coin flip: a fresh workspace coin copied into the reply.
    pub fn honest(ps: &ProofSystem, aux: usize) -> Result<Self> {
        let c_bits = roles(ps)?.coin_wires.len();
        let layout = Self::layout(ps, c_bits, aux)?;
        let mut w1 = Circuit::new(layout.clone());
        for i in 0..c_bits {
            let (s, w) = (layout.wire("S", i)?, layout.wire("W", i)?);
            w1.h(w)?.cnot(w, s)?;
        }
        Ok(Self { w1, aux_state: DensityMatrix::basis(aux, 0) })
    }

    pub fn with_aux(&self, aux_state: DensityMatrix) -> Result<Self> {
        if aux_state.dim() != 1 << self.w1.layout.width("X")? {
            return Err(QzkError::Dimension("auxiliary state does not fit X".into()));
        }
        Ok(Self { w1: self.w1.clone(), aux_state })
    }

    fn widths(&self) -> Result<(usize, usize, usize, usize)> {
        let l = &self.w1.layout;
        Ok((l.width("S")?, l.width("W")?, l.width("X")?, l.width("M")?))
    }
}

/// Outcome of the rewinding simulator against one dishonest verifier.
#[derive(Debug, Clone, PartialEq)]
pub struct RewindResult {
    pub coin_bits: usize,
    /// Probability that the first guess is right, for the verifier's auxiliary state.
    pub success_prob: f64,
    /// Success probability after one reflection step on a wrong guess.
    pub amplified_prob: f64,
    /// Channel from the auxiliary input to `W, X, M, N, R`, conditioned on success.
    pub output_choi: ChoiMatrix,
    /// The same channel from a real interaction with the honest prover.
    pub interaction_choi: ChoiMatrix,
}

const OUT: [&str; 5] = ["W", "X", "M", "N", "R"];

/// Sends the protocol's wires to role registers of `to`: first message to `M`, second to
/// `N`, coin to `coin_to` and message copies to `msg_to` (when given); every other wire,
/// followed by `extra` trailing wires, fills `rest` in order.
fn role_map(ps: &ProofSystem, r: &Roles, to: &RegisterLayout, coin_to: &str, msg_to: Option<&str>, rest: &str, extra: usize) -> Result<Vec<usize>> {
    let total = ps.layout.total();
    let mut map = vec![usize::MAX; total + extra];
    for (i, &w) in r.m_wires.iter().enumerate() {
        map[w] = to.wire("M", i)?;
    }
    for (i, &w) in r.n_wires.iter().enumerate() {
        map[w] = to.wire("N", i)?;
    }
    for (i, &w) in r.coin_wires.iter().enumerate() {
        map[w] = to.wire(coin_to, i)?;
    }
    if let Some(reg) = msg_to {
        for (i, &w) in r.message_wires.iter().enumerate() {
            if map[w] != usize::MAX {
                return Err(QzkError::Precondition("coin message doubles as a prover message".into()));
            }
            map[w] = to.wire(reg, i)?;
        }
    }
    let mut free = to.wires(rest)?.into_iter();
    for slot in map.iter_mut().filter(|s| **s == usize::MAX) {
        *slot = free.next().ok_or_else(|| QzkError::Dimension(format!("register {rest} too small")))?;
    }
    if free.next().is_some() {
        return Err(QzkError::Dimension(format!("register {rest} too large")));
    }
    Ok(map)
}

struct Rewinder {
    layout: RegisterLayout,
    forward: Circuit,
    reset: Vec<usize>,
    f: usize,
}

impl Rewinder {
    fn new(ps: &ProofSystem, sim: &SimulatorEnsemble, dv: &DishonestVerifier) -> Result<Self> {
        if sim.fail_flag {
            return Err(QzkError::Precondition("rewinding needs a simulator without a failure flag".into()));
        }
        sim.validate(ps)?;
        let r = roles(ps)?;
        let (cb, wb, xb, mb) = dv.widths()?;
        if cb != r.coin_wires.len() || mb != r.m_wires.len() {
            return Err(QzkError::Dimension("dishonest verifier does not match the protocol's coin and message".into()));
        }
        let q = sim.entries[1]
            .circuit()
            .ok_or_else(|| QzkError::Unsupported("rewinding needs a single-circuit simulator for the second view".into()))?;
        let nb = r.n_wires.len();
        let a = ps.layout.total() - mb - nb - cb + sim.ancilla;
        let layout = RegisterLayout::new([
            ("F", 1),
            ("S", cb),
            ("W", wb),
            ("X", xb),
            ("M", mb),
            ("N", nb),
            ("R", cb),
            ("A", a),
            ("REF", xb),
        ])?;
        tol::check_state_cap("rewinding simulator", layout.total())?;
        let sim_l = sim.layout(ps)?;
        let map = role_map(ps, &r, &layout, "R", None, "A", sim_l.width(SIM)?)?;
        let mut forward = Circuit::new(layout.clone());
        forward.append_mapped(q, &map)?;
        let dv_map = layout.wires_of(&["S", "W", "X", "M"])?;
        forward.append_mapped(&dv.w1, &dv_map)?;
        let f = layout.wire("F", 0)?;
        forward.append(&flag_mismatch(&layout, f)?)?;
        let reset = layout.wires_of(&["F", "S", "W", "M", "N", "R", "A"])?;
        Ok(Self { layout, forward, reset, f })
    }

    /// Runs the guess, splits on the flag and rewinds the wrong-guess branch once.
    fn run(&self, init: CVector) -> (CVector, CVector, f64, f64) {
        let n = self.layout.total();
        let mut psi = init;
        self.forward.apply_to(psi.as_mut_slice(), n);
        let fbit = 1usize << crate::kernel::bit_of_wire(n, self.f);
        let mut good = psi.clone();
        let mut bad = psi;
        for (i, (g, b)) in good.iter_mut().zip(bad.iter_mut()).enumerate() {
            if i & fbit == 0 {
                *b = c(0.0);
            } else {
                *g = c(0.0);
            }
        }
        let p0 = good.norm_squared();
        self.forward.adjoint().apply_to(bad.as_mut_slice(), n);
        let mask: usize = self.reset.iter().map(|&w| 1usize << crate::kernel::bit_of_wire(n, w)).sum();
        for (i, z) in bad.iter_mut().enumerate() {
            if i & mask == 0 {
                *z = -*z;
            }
        }
        self.forward.apply_to(bad.as_mut_slice(), n);
        for (i, z) in bad.iter_mut().enumerate() {
            if i & fbit != 0 {
                *z = c(0.0);
            }
        }
        let p1 = bad.norm_squared();
        (good, bad, p0, p0 + p1)
    }
}

/// Circuit setting `F` to 1 iff the guessed coin `R` differs from the reply `S`.
fn flag_mismatch(layout: &RegisterLayout, f: usize) -> Result<Circuit> {
    let s = layout.wires("S")?;
    let r = layout.wires("R")?;
    let mut circ = Circuit::new(layout.clone());
    if s.len() == 1 {
        circ.cnot(r[0], f)?.cnot(s[0], f)?;
        return Ok(circ);
    }
    for (&sw, &rw) in s.iter().zip(&r) {
        circ.cnot(sw, rw)?;
    }
    for &rw in &r {
        circ.x(rw)?;
    }
    circ.mcx(&r, f)?;
    for &rw in &r {
        circ.x(rw)?;
    }
    circ.x(f)?;
    for (&sw, &rw) in s.iter().zip(&r) {
        circ.cnot(sw, rw)?;
    }
    Ok(circ)
}

/// Places a purification of `rho` on the `x` and `reference` registers, all else zero.
fn purified_input(layout: &RegisterLayout, rho: &DensityMatrix, x: &str, reference: &str) -> Result<CVector> {
    let (psi, _) = crate::qla::purify(rho)?;
    let n = layout.total();
    let xo = crate::kernel::offsets(n, &layout.wires(x)?);
    let ro = crate::kernel::offsets(n, &layout.wires(reference)?);
    let d = xo.len();
    let mut amps = CVector::zeros(1 << n);
    for i in 0..d {
        for j in 0..d {
            amps[xo[i] | ro[j]] = psi.amps[i * d + j];
        }
    }
    Ok(amps)
}

fn simulated_choi(rw: &Rewinder) -> Result<(ChoiMatrix, f64)> {
    let (good, bad, _, post) = rw.run(choi_input(&rw.layout, "X", "REF")?);
    let n = rw.layout.total();
    let mut keep = rw.layout.wires_of(&OUT)?;
    keep.extend(rw.layout.wires("REF")?);
    let parts = [
        LowRankState::from_vector_wires(good.as_slice(), n, &keep),
        LowRankState::from_vector_wires(bad.as_slice(), n, &keep),
    ];
    let d_in = 1usize << rw.layout.width("X")?;
    let sum = LowRankState::sum(&parts)?;
    let scale = if post > 0.0 { d_in as f64 / post } else { 0.0 };
    Ok((ChoiMatrix::new(sum.matrix() * c(scale), d_in)?, post))
}

/// Channel from the dishonest verifier's auxiliary input to `W, X, M, N, R` when it interacts
/// with the honest prover. The prover copies the reply `S` before acting on it, and the
/// verifier keeps its own copy of the reply in `R`; `premeasure` additionally dephases `S` in
/// the verifier's workspace before the reply is sent.
pub fn interaction_choi(ps: &ProofSystem, honest: &ProverStrategy, dv: &DishonestVerifier, premeasure: bool) -> Result<ChoiMatrix> {
    let r = roles(ps)?;
    honest.validate(ps)?;
    let (cb, wb, xb, mb) = dv.widths()?;
    let nb = r.n_wires.len();
    let rest = ps.layout.total() - mb - nb - 2 * cb;
    let layout = RegisterLayout::new([
        ("S", cb),
        ("W", wb),
        ("X", xb),
        ("M", mb),
        ("N", nb),
        ("R", cb),
        ("D", rest),
        ("P", honest.width),
        ("PC", cb),
        ("E", if premeasure { cb } else { 0 }),
        ("REF", xb),
    ])?;
    tol::check_state_cap("interaction", layout.total())?;
    let exec = ps.exec_layout(honest.width)?;
    let p_w = exec.wires("P")?;
    let mut map = role_map(ps, &r, &layout, "R", Some("S"), "D", 0)?;
    for (i, _) in p_w.iter().enumerate() {
        map.push(layout.wire("P", i)?);
    }
    // The coin wires are the honest verifier's; the prover never touches them, so sending
    // them to R is harmless for the prover circuits mapped below.
    let n = layout.total();
    let mut amps = choi_input(&layout, "X", "REF")?;
    let mut circ = Circuit::new(layout.clone());
    circ.append_mapped(&honest.circuits[0], &map)?;
    circ.append_mapped(&dv.w1, &layout.wires_of(&["S", "W", "X", "M"])?)?;
    for i in 0..cb {
        let s = layout.wire("S", i)?;
        if premeasure {
            circ.cnot(s, layout.wire("E", i)?)?;
        }
        circ.cnot(s, layout.wire("R", i)?)?.cnot(s, layout.wire("PC", i)?)?;
    }
    circ.append_mapped(&honest.circuits[1], &map)?;
    circ.apply_to(amps.as_mut_slice(), n);
    choi_from_vector(amps.as_slice(), &layout, &OUT, "REF")
}

/// Rewinding with a coin of any width: one guess, one reflection step on a wrong guess.
pub fn rewind_run_wide(ps: &ProofSystem, honest: &ProverStrategy, sim: &SimulatorEnsemble, dv: &DishonestVerifier) -> Result<RewindResult> {
    let rw = Rewinder::new(ps, sim, dv)?;
    let (_, _, success_prob, amplified_prob) = rw.run(purified_input(&rw.layout, &dv.aux_state, "X", "REF")?);
    let (output_choi, _) = simulated_choi(&rw)?;
    let interaction_choi = interaction_choi(ps, honest, dv, false)?;
    Ok(RewindResult {
        coin_bits: dv.widths()?.0,
        success_prob: success_prob.clamp(0.0, 1.0),
        amplified_prob: amplified_prob.clamp(0.0, 1.0),
        output_choi,
        interaction_choi,
    })
}

/// Rewinding for a single coin bit.
pub fn rewind_run(ps: &ProofSystem, honest: &ProverStrategy, sim: &SimulatorEnsemble, dv: &DishonestVerifier) -> Result<RewindResult> {
    let bits = roles(ps)?.coin_wires.len();
    if bits != 1 {
        return Err(QzkError::Precondition(format!("coin has {bits} bits; use the wide variant")));
    }
    rewind_run_wide(ps, honest, sim, dv)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{m4_chain, unveil};
    use crate::qla::trace_norm;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn guess_succeeds_half_the_time_and_matches_interaction() {
        let f = unveil(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..3 {
            let dv = DishonestVerifier::random(&f.ps, 1, 1, &mut rng).unwrap();
            let r = rewind_run(&f.ps, &f.honest, &f.sim, &dv).unwrap();
            assert!((r.success_prob - 0.5).abs() < 1e-10);
            assert!(r.amplified_prob >= r.success_prob - 1e-12);
            let d = trace_norm(&(&r.output_choi.matrix - &r.interaction_choi.matrix)).unwrap();
            assert!(d < 1e-8, "{d}");
        }
    }

    #[test]
    fn honest_coin_reproduces_interaction() {
        let f = unveil(0.0).unwrap();
        let dv = DishonestVerifier::honest(&f.ps, 1).unwrap();
        let r = rewind_run(&f.ps, &f.honest, &f.sim, &dv).unwrap();
        assert!(r.output_choi.trace_preservation_defect() < 1e-9);
        let d = trace_norm(&(&r.output_choi.matrix - &r.interaction_choi.matrix)).unwrap();
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn rejects_non_three_message_protocols() {
        let f = m4_chain(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(DishonestVerifier::random(&f.ps, 1, 1, &mut rng), Err(QzkError::Precondition(_))));
    }

    #[test]
    fn aux_must_fit() {
        let f = unveil(0.0).unwrap();
        let dv = DishonestVerifier::honest(&f.ps, 1).unwrap();
        assert!(dv.with_aux(DensityMatrix::maximally_mixed(2)).is_err());
        assert!(dv.with_aux(DensityMatrix::maximally_mixed(1)).is_ok());
    }
}
