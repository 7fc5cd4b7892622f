//! Named gate set, circuits over register layouts, and index-controlled selection of
//! sub-circuits through ancilla swapping.

use std::collections::BTreeSet;

use crate::error::{QzkError, Result};
use crate::kernel;
use crate::linalg;
use crate::qla::{c, check_wires, CMatrix, PureState, RegisterLayout, C64};
use crate::tol;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Cnot,
    Toffoli,
    Cswap,
    CphaseI,
    /// `[[√ε, √(1−ε)], [√(1−ε), −√ε]]`.
    Ueps(f64),
    Custom(CMatrix),
}

impl GateKind {
    pub fn name(&self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Cnot => "CNOT",
            GateKind::Toffoli => "TOFFOLI",
            GateKind::Cswap => "CSWAP",
            GateKind::CphaseI => "CPHASE_I",
            GateKind::Ueps(_) => "UEPS",
            GateKind::Custom(_) => "CUSTOM",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::Ueps(_) => 1,
            GateKind::Cnot | GateKind::CphaseI => 2,
            GateKind::Toffoli | GateKind::Cswap => 3,
            GateKind::Custom(m) => m.nrows().trailing_zeros() as usize,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>) -> Self {
        Self { kind, wires }
    }

    /// Checks arity, parameters and (for CUSTOM) unitarity; `index` labels errors.
    pub fn validate(&self, index: usize) -> Result<()> {
        match &self.kind {
            GateKind::Ueps(e) if !(0.0..=1.0).contains(e) || !e.is_finite() => {
                return Err(QzkError::Parameter(format!("UEPS parameter {e} outside [0, 1]")));
            }
            GateKind::Custom(m) => {
                let d = m.nrows();
                if d != m.ncols() || !d.is_power_of_two() || d < 2 {
                    return Err(QzkError::Dimension(format!("gate {index}: CUSTOM matrix is {}x{}", d, m.ncols())));
                }
                if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(QzkError::Schema(format!("gate {index}: non-finite matrix entry")));
                }
                let deviation = linalg::unitarity_defect(m);
                if deviation > tol::STRUCTURAL * (d as f64).sqrt() {
                    return Err(QzkError::NotUnitary { index, deviation });
                }
            }
            _ => {}
        }
        if self.wires.len() != self.kind.arity() {
            return Err(QzkError::Arity(format!(
                "gate {index}: {} takes {} wires, got {}",
                self.kind.name(),
                self.kind.arity(),
                self.wires.len()
            )));
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Gate {
        let kind = match &self.kind {
            GateKind::CphaseI => GateKind::Custom(gate_matrix(self).expect("valid gate").adjoint()),
            GateKind::Custom(m) => GateKind::Custom(m.adjoint()),
            k => k.clone(),
        };
        Gate { kind, wires: self.wires.clone() }
    }

    fn apply(&self, amps: &mut [C64], n: usize) {
        let w = &self.wires;
        match &self.kind {
            GateKind::H => {
                let s = c(std::f64::consts::FRAC_1_SQRT_2);
                kernel::apply_1q(amps, n, w[0], [[s, s], [s, -s]]);
            }
            GateKind::X => kernel::apply_mcx(amps, n, &[], w[0]),
            GateKind::Cnot => kernel::apply_mcx(amps, n, &w[..1], w[1]),
            GateKind::Toffoli => kernel::apply_mcx(amps, n, &w[..2], w[2]),
            GateKind::Cswap => kernel::apply_cswap(amps, n, w[0], w[1], w[2]),
            GateKind::CphaseI => kernel::apply_phase_i(amps, n, w[0], w[1]),
            GateKind::Ueps(e) => {
                let (a, b) = (c(e.sqrt()), c((1.0 - e).sqrt()));
                kernel::apply_1q(amps, n, w[0], [[a, b], [b, -a]]);
            }
            GateKind::Custom(m) => kernel::apply_matrix(amps, n, w, m),
        }
    }
}

/// Exact unitary of a gate on its own wires (first wire = most significant).
pub fn gate_matrix(g: &Gate) -> Result<CMatrix> {
    if let GateKind::Ueps(e) = g.kind {
        if !(0.0..=1.0).contains(&e) {
            return Err(QzkError::Parameter(format!("UEPS parameter {e} outside [0, 1]")));
        }
    }
    if let GateKind::Custom(m) = &g.kind {
        return Ok(m.clone());
    }
    let k = g.kind.arity();
    let local: Vec<usize> = (0..k).collect();
    let probe = Gate { kind: g.kind.clone(), wires: local };
    let d = 1 << k;
    let mut m = CMatrix::zeros(d, d);
    for col in 0..d {
        let mut v = vec![c(0.0); d];
        v[col] = c(1.0);
        probe.apply(&mut v, k);
        for (row, z) in v.into_iter().enumerate() {
            m[(row, col)] = z;
        }
    }
    Ok(m)
}

/// Ordered gate list over a register layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub layout: RegisterLayout,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(layout: RegisterLayout) -> Self {
        Self { layout, gates: Vec::new() }
    }

    pub fn with_gates(layout: RegisterLayout, gates: Vec<Gate>) -> Result<Self> {
        let c = Self { layout, gates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.layout.total();
        for (i, g) in self.gates.iter().enumerate() {
            g.validate(i)?;
            check_wires(&g.wires, n)?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, kind: GateKind, wires: Vec<usize>) -> Result<&mut Self> {
        let g = Gate::new(kind, wires);
        g.validate(self.gates.len())?;
        check_wires(&g.wires, self.layout.total())?;
        self.gates.push(g);
        Ok(self)
    }

    pub fn h(&mut self, w: usize) -> Result<&mut Self> {
        self.push(GateKind::H, vec![w])
    }

    pub fn x(&mut self, w: usize) -> Result<&mut Self> {
        self.push(GateKind::X, vec![w])
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(GateKind::Cnot, vec![control, target])
    }

    pub fn toffoli(&mut self, c1: usize, c2: usize, target: usize) -> Result<&mut Self> {
        self.push(GateKind::Toffoli, vec![c1, c2, target])
    }

    pub fn cswap(&mut self, control: usize, a: usize, b: usize) -> Result<&mut Self> {
        self.push(GateKind::Cswap, vec![control, a, b])
    }

    pub fn ueps(&mut self, eps: f64, w: usize) -> Result<&mut Self> {
        self.push(GateKind::Ueps(eps), vec![w])
    }

    pub fn custom(&mut self, m: CMatrix, wires: Vec<usize>) -> Result<&mut Self> {
        self.push(GateKind::Custom(m), wires)
    }

    /// Exchanges two wires with three CNOTs.
    pub fn swap(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.cnot(a, b)?.cnot(b, a)?.cnot(a, b)
    }

    /// Exchanges two equally long wire lists.
    pub fn swap_all(&mut self, a: &[usize], b: &[usize]) -> Result<&mut Self> {
        if a.len() != b.len() {
            return Err(QzkError::Dimension(format!("swapping {} wires with {}", a.len(), b.len())));
        }
        for (&x, &y) in a.iter().zip(b) {
            self.swap(x, y)?;
        }
        Ok(self)
    }

    /// Controlled exchange of two equally long wire lists.
    pub fn cswap_all(&mut self, control: usize, a: &[usize], b: &[usize]) -> Result<&mut Self> {
        if a.len() != b.len() {
            return Err(QzkError::Dimension(format!("swapping {} wires with {}", a.len(), b.len())));
        }
        for (&x, &y) in a.iter().zip(b) {
            self.cswap(control, x, y)?;
        }
        Ok(self)
    }

    /// X on `target` controlled by every wire in `controls`; beyond two controls this is a
    /// CUSTOM permutation block.
    pub fn mcx(&mut self, controls: &[usize], target: usize) -> Result<&mut Self> {
        match controls.len() {
            0 => self.x(target),
            1 => self.cnot(controls[0], target),
            2 => self.toffoli(controls[0], controls[1], target),
            k => {
                let d = 1usize << (k + 1);
                let m = CMatrix::from_fn(d, d, |r, col| {
                    let image = if col >> 1 == (1 << k) - 1 { col ^ 1 } else { col };
                    c(if r == image { 1.0 } else { 0.0 })
                });
                let mut wires = controls.to_vec();
                wires.push(target);
                self.custom(m, wires)
            }
        }
    }

    /// Appends `other`, whose layout must be a prefix of this circuit's layout.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if !other.layout.is_prefix_of(&self.layout) {
            return Err(QzkError::Dimension("appended circuit's layout is not a prefix".into()));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(self)
    }

    /// Appends `other` after sending its wire `i` to `map[i]`.
    pub fn append_mapped(&mut self, other: &Circuit, map: &[usize]) -> Result<&mut Self> {
        if map.len() < other.layout.total() {
            return Err(QzkError::Dimension(format!(
                "wire map of length {} for a {}-qubit circuit",
                map.len(),
                other.layout.total()
            )));
        }
        for g in &other.gates {
            let wires = g.wires.iter().map(|&w| map[w]).collect();
            self.push(g.kind.clone(), wires)?;
        }
        Ok(self)
    }

    /// Same gates on a different (typically larger) layout with wires sent through `map`.
    pub fn relabel(&self, layout: RegisterLayout, map: &[usize]) -> Result<Circuit> {
        let mut out = Circuit::new(layout);
        out.append_mapped(self, map)?;
        Ok(out)
    }

    /// Same gates reinterpreted on a layout that extends this one.
    pub fn extend_layout(&self, layout: &RegisterLayout) -> Result<Circuit> {
        if !self.layout.is_prefix_of(layout) {
            return Err(QzkError::Dimension("target layout does not extend the circuit's layout".into()));
        }
        Ok(Circuit { layout: layout.clone(), gates: self.gates.clone() })
    }

    pub fn adjoint(&self) -> Circuit {
        Circuit { layout: self.layout.clone(), gates: self.gates.iter().rev().map(Gate::adjoint).collect() }
    }

    /// The circuit applied only where wire `control` reads `on`.
    pub fn controlled(&self, control: usize, on: bool) -> Result<Circuit> {
        check_wires(&[control], self.layout.total())?;
        if self.wires_touched().contains(&control) {
            return Err(QzkError::DuplicateWire(control));
        }
        let mut out = Circuit::new(self.layout.clone());
        if !on {
            out.x(control)?;
        }
        for g in &self.gates {
            let w = &g.wires;
            match &g.kind {
                GateKind::X => out.cnot(control, w[0])?,
                GateKind::Cnot => out.toffoli(control, w[0], w[1])?,
                GateKind::Toffoli => out.mcx(&[control, w[0], w[1]], w[2])?,
                _ => {
                    let u = gate_matrix(g)?;
                    let d = u.nrows();
                    let mut cu = CMatrix::identity(2 * d, 2 * d);
                    cu.view_mut((d, d), (d, d)).copy_from(&u);
                    let mut wires = vec![control];
                    wires.extend_from_slice(w);
                    out.custom(cu, wires)?
                }
            };
        }
        if !on {
            out.x(control)?;
        }
        Ok(out)
    }

    /// The circuit applied only where the `controls` wires hold `value` (first control most
    /// significant).
    pub fn controlled_on(&self, controls: &[usize], value: usize) -> Result<Circuit> {
        if controls.len() < usize::BITS as usize && value >> controls.len() != 0 {
            return Err(QzkError::Parameter(format!("value {value} does not fit {} control wires", controls.len())));
        }
        let mut out = self.clone();
        for (i, &w) in controls.iter().enumerate().rev() {
            let bit = (value >> (controls.len() - 1 - i)) & 1 == 1;
            out = out.controlled(w, bit)?;
        }
        Ok(out)
    }

    pub fn wires_touched(&self) -> BTreeSet<usize> {
        self.gates.iter().flat_map(|g| g.wires.iter().copied()).collect()
    }

    pub fn has_custom(&self) -> bool {
        self.gates.iter().any(|g| matches!(g.kind, GateKind::Custom(_)))
    }

    /// Applies the gates to an `n`-qubit amplitude vector (`n ≥` layout width).
    pub fn apply_to(&self, amps: &mut [C64], n: usize) {
        debug_assert!(n >= self.layout.total());
        for g in &self.gates {
            g.apply(amps, n);
        }
    }

    pub fn apply(&self, state: &PureState) -> Result<PureState> {
        let n = state.num_qubits();
        if n < self.layout.total() {
            return Err(QzkError::Dimension(format!("{}-qubit circuit on a {n}-qubit state", self.layout.total())));
        }
        tol::check_state_cap("state vector", n)?;
        let mut out = state.clone();
        self.apply_to(out.amps.as_mut_slice(), n);
        Ok(out)
    }

    /// Full unitary of the circuit on its layout.
    pub fn compile(&self) -> Result<CMatrix> {
        let n = self.layout.total();
        tol::check_dense_cap("compiled unitary", n)?;
        self.validate()?;
        let d = 1usize << n;
        let mut m = CMatrix::zeros(d, d);
        for col in 0..d {
            let mut v = vec![c(0.0); d];
            v[col] = c(1.0);
            self.apply_to(&mut v, n);
            for (row, z) in v.into_iter().enumerate() {
                m[(row, col)] = z;
            }
        }
        Ok(m)
    }
}

/// Circuit over `layout` that applies `variants[r]` (circuits over a register as wide as
/// `target`) to `target` when the `control` wires hold `r` (first control wire most significant).
///
/// With `2^l` ancilla registers this is a controlled swap of the target with ancilla `r`, every
/// variant applied to its own ancilla, and the controlled swap undone; the controlled swap is
/// realized by swapping into `ancillae[0]` and permuting the ancillae by `k ↦ k ⊕ r` with
/// singly-controlled swaps. With `2^l − 1` ancilla registers the last variant runs on the
/// target itself, which takes the role of ancilla `2^l − 1`; the garbage left on the ancillae
/// is then permuted relative to the full form.
pub fn swap_select_wires(
    layout: &RegisterLayout,
    variants: &[Circuit],
    control: &[usize],
    target: &[usize],
    ancillae: &[Vec<usize>],
) -> Result<Circuit> {
    let l = control.len();
    let count = 1usize << l;
    if variants.len() != count {
        return Err(QzkError::Arity(format!("{} variants for a {l}-qubit control", variants.len())));
    }
    let w = target.len();
    for v in variants {
        if v.layout.total() != w {
            return Err(QzkError::Dimension(format!("variant over {} qubits, target has {w}", v.layout.total())));
        }
    }
    if ancillae.iter().any(|a| a.len() != w) {
        return Err(QzkError::Dimension("ancilla width differs from target width".into()));
    }
    let in_place = match ancillae.len() {
        a if a == count => false,
        a if a + 1 == count => true,
        a => return Err(QzkError::Arity(format!("{a} ancillae for {count} variants"))),
    };
    let mut all: Vec<usize> = control.to_vec();
    all.extend_from_slice(target);
    ancillae.iter().for_each(|a| all.extend_from_slice(a));
    check_wires(&all, layout.total())?;

    let mut positions: Vec<&[usize]> = ancillae.iter().map(|a| a.as_slice()).collect();
    if in_place {
        positions.push(target);
    }
    // control bit of weight 2^i sits on wire control[l-1-i]
    let bit_wire = |i: usize| control[l - 1 - i];
    let mut routing = Circuit::new(layout.clone());
    for i in 0..l {
        let step = 1usize << i;
        if in_place {
            routing.x(bit_wire(i))?;
        }
        for k in 0..count {
            if k & step == 0 {
                routing.cswap_all(bit_wire(i), positions[k], positions[k | step])?;
            }
        }
        if in_place {
            routing.x(bit_wire(i))?;
        }
    }

    let mut out = Circuit::new(layout.clone());
    if !in_place {
        out.swap_all(target, ancillae[0].as_slice())?;
    }
    out.append(&routing)?;
    for (k, v) in variants.iter().enumerate() {
        out.append_mapped(v, positions[k])?;
    }
    out.append(&routing.adjoint())?;
    if !in_place {
        out.swap_all(target, ancillae[0].as_slice())?;
        // Undo the permutation of the garbage so ancilla k holds U_k|0⟩ and ancilla r holds |0⟩.
        out.append(&routing)?;
    }
    Ok(out)
}

/// Register-name form of [`swap_select_wires`].
pub fn swap_select(
    layout: &RegisterLayout,
    variants: &[Circuit],
    target: &str,
    control: &str,
    ancillae: &[&str],
) -> Result<Circuit> {
    let anc = ancillae.iter().map(|a| layout.wires(a)).collect::<Result<Vec<_>>>()?;
    swap_select_wires(layout, variants, &layout.wires(control)?, &layout.wires(target)?, &anc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qla::{partial_trace, DensityMatrix, MaxAbs};

    fn one() -> RegisterLayout {
        RegisterLayout::new([("T", 1)]).unwrap()
    }

    fn single(kind: GateKind) -> Circuit {
        let mut c = Circuit::new(one());
        c.push(kind, vec![0]).unwrap();
        c
    }

    #[test]
    fn ueps_endpoints_and_midpoint() {
        let m = |e| gate_matrix(&Gate::new(GateKind::Ueps(e), vec![0])).unwrap();
        let x = gate_matrix(&Gate::new(GateKind::X, vec![0])).unwrap();
        let h = gate_matrix(&Gate::new(GateKind::H, vec![0])).unwrap();
        let z = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        assert!((m(0.0) - x).max_abs() < 1e-12);
        assert!((m(1.0) - z).max_abs() < 1e-12);
        assert!((m(0.5) - h).max_abs() < 1e-12);
        assert!(gate_matrix(&Gate::new(GateKind::Ueps(1.5), vec![0])).is_err());
    }

    #[test]
    fn compile_examples() {
        let l = RegisterLayout::new([("A", 1), ("B", 1)]).unwrap();
        assert_eq!(Circuit::new(l.clone()).compile().unwrap(), CMatrix::identity(4, 4));
        let h = single(GateKind::H).compile().unwrap();
        assert!((h[(1, 1)] + c(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        let mut bell = Circuit::new(l);
        bell.h(0).unwrap().cnot(0, 1).unwrap();
        let u = bell.compile().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (i, want) in [s, 0.0, 0.0, s].into_iter().enumerate() {
            assert!((u[(i, 0)] - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn circuit_then_adjoint_is_identity() {
        let l = RegisterLayout::new([("A", 3)]).unwrap();
        let mut circ = Circuit::new(l);
        circ.h(0).unwrap().cswap(0, 1, 2).unwrap().push(GateKind::CphaseI, vec![1, 2]).unwrap();
        circ.ueps(0.3, 2).unwrap().toffoli(2, 1, 0).unwrap();
        let mut both = circ.clone();
        both.append(&circ.adjoint()).unwrap();
        assert!((both.compile().unwrap() - CMatrix::identity(8, 8)).max_abs() < 1e-10);
    }

    #[test]
    fn mcx_custom_block_matches_kernel() {
        let l = RegisterLayout::new([("A", 4)]).unwrap();
        let mut circ = Circuit::new(l);
        circ.mcx(&[0, 1, 2], 3).unwrap();
        let u = circ.compile().unwrap();
        assert_eq!(u[(0b1111, 0b1110)], c(1.0));
        assert_eq!(u[(0b0110, 0b0110)], c(1.0));
    }

    #[test]
    fn custom_validation_reports_index() {
        let mut circ = Circuit::new(one());
        circ.h(0).unwrap();
        circ.gates.push(Gate::new(GateKind::Custom(CMatrix::from_element(2, 2, c(1.0))), vec![0]));
        assert!(matches!(circ.validate(), Err(QzkError::NotUnitary { index: 1, .. })));
    }

    #[test]
    fn swap_select_examples() {
        let layout = RegisterLayout::new([("C", 1), ("T", 1), ("A0", 1), ("A1", 1)]).unwrap();
        let id = Circuit::new(one());
        let xs = single(GateKind::X);
        let c_ii = swap_select(&layout, &[id.clone(), id.clone()], "T", "C", &["A0", "A1"]).unwrap();
        for ctrl in 0..2 {
            for t in 0..2 {
                let s = PureState::basis(4, (ctrl << 3) | (t << 2));
                assert_eq!(c_ii.apply(&s).unwrap(), s);
            }
        }
        let c_xi = swap_select(&layout, &[xs, id], "T", "C", &["A0", "A1"]).unwrap();
        let out = c_xi.apply(&PureState::zero(4)).unwrap();
        let t = partial_trace(&out.density(), &layout, &["T"]).unwrap();
        assert!((t.matrix()[(1, 1)].re - 1.0).abs() < 1e-12);

        let hs = single(GateKind::H);
        let xs = single(GateKind::X);
        let c_hx = swap_select(&layout, &[hs.clone(), xs], "T", "C", &["A0", "A1"]).unwrap();
        let mut prep = Circuit::new(layout.clone());
        prep.h(0).unwrap();
        let out = c_hx.apply(&prep.apply(&PureState::zero(4)).unwrap()).unwrap();
        let got = partial_trace(&out.density(), &layout, &["C", "T"]).unwrap();
        let h0 = hs.apply(&PureState::zero(1)).unwrap().density();
        let want = DensityMatrix::basis(1, 0).kron(&h0).matrix() * c(0.5)
            + DensityMatrix::basis(1, 1).kron(&DensityMatrix::basis(1, 1)).matrix() * c(0.5);
        assert!((got.matrix() - want).max_abs() < 1e-12);
    }

    #[test]
    fn swap_select_rejects_bad_shapes() {
        let layout = RegisterLayout::new([("C", 1), ("T", 1), ("A0", 2)]).unwrap();
        let id = Circuit::new(one());
        assert!(matches!(
            swap_select(&layout, &[id.clone(), id.clone()], "T", "C", &["A0"]),
            Err(QzkError::Dimension(_))
        ));
        assert!(matches!(swap_select(&layout, &[id], "T", "C", &[]), Err(QzkError::Arity(_))));
    }

    #[test]
    fn value_control_selects_one_basis_value() {
        let l = RegisterLayout::new([("C", 2), ("T", 1)]).unwrap();
        let mut flip = Circuit::new(l.clone());
        flip.x(2).unwrap();
        let sel = flip.controlled_on(&[0, 1], 2).unwrap();
        for v in 0..4usize {
            let mut prep = Circuit::new(l.clone());
            if v & 2 != 0 {
                prep.x(0).unwrap();
            }
            if v & 1 != 0 {
                prep.x(1).unwrap();
            }
            prep.append(&sel).unwrap();
            let out = prep.apply(&PureState::zero(3)).unwrap();
            let want = (v << 1) | usize::from(v == 2);
            assert!((out.amps[want].norm() - 1.0).abs() < 1e-12);
        }
        assert!(flip.controlled_on(&[0], 2).is_err());
    }

    #[test]
    fn controlled_circuit_matches_block_form() {
        let layout = RegisterLayout::new([("C", 1), ("T", 3)]).unwrap();
        let mut inner = Circuit::new(layout.clone());
        inner.h(1).unwrap().cnot(1, 2).unwrap().toffoli(1, 2, 3).unwrap().cswap(3, 1, 2).unwrap().ueps(0.3, 3).unwrap().x(2).unwrap();
        let sub = RegisterLayout::new([("T", 3)]).unwrap();
        let u = inner.relabel(sub, &[0, 0, 1, 2]).unwrap().compile().unwrap();
        for on in [true, false] {
            let got = inner.controlled(0, on).unwrap().compile().unwrap();
            let (idle, active) = if on { (0, 8) } else { (8, 0) };
            let mut want = CMatrix::zeros(16, 16);
            want.view_mut((idle, idle), (8, 8)).copy_from(&CMatrix::identity(8, 8));
            want.view_mut((active, active), (8, 8)).copy_from(&u);
            assert!((got - want).max_abs() < 1e-12);
        }
        assert!(matches!(inner.controlled(1, true), Err(QzkError::DuplicateWire(1))));
    }
}
