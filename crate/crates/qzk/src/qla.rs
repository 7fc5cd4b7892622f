//! Dense complex linear algebra over named qubit registers.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

use crate::error::{QzkError, Result};
use crate::kernel;
use crate::linalg;
use crate::tol;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest entry modulus.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl MaxAbs for CMatrix {
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}

/// Ordered named registers. Wire `offset(r) + i` is qubit `i` of register `r`;
/// wire 0 is the most significant bit of every basis index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut out = Self::default();
        for (name, width) in regs {
            out.push(name, width)?;
        }
        Ok(out)
    }

    pub fn push(&mut self, name: impl Into<String>, width: usize) -> Result<()> {
        let name = name.into();
        if self.contains(&name) {
            return Err(QzkError::DuplicateRegister(name));
        }
        self.regs.push((name, width));
        Ok(())
    }

    /// `self` followed by the registers of `other`.
    pub fn concat(&self, other: &RegisterLayout) -> Result<Self> {
        let mut out = self.clone();
        for (n, w) in &other.regs {
            out.push(n.clone(), *w)?;
        }
        Ok(out)
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn names(&self) -> Vec<String> {
        self.regs.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn total(&self) -> usize {
        self.regs.iter().map(|(_, w)| w).sum()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.regs.iter().any(|(n, _)| n == name)
    }

    /// `base`, or `base` with the smallest numeric suffix that is not yet a register name.
    pub fn fresh_name(&self, base: &str) -> String {
        std::iter::once(base.to_string())
            .chain((1..).map(|i| format!("{base}{i}")))
            .find(|n| !self.contains(n))
            .expect("unbounded candidates")
    }

    pub fn offset(&self, name: &str) -> Result<usize> {
        let mut off = 0;
        for (n, w) in &self.regs {
            if n == name {
                return Ok(off);
            }
            off += w;
        }
        Err(QzkError::UnknownRegister(name.to_string()))
    }

    pub fn width(&self, name: &str) -> Result<usize> {
        self.regs
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, w)| *w)
            .ok_or_else(|| QzkError::UnknownRegister(name.to_string()))
    }

    pub fn wire(&self, name: &str, i: usize) -> Result<usize> {
        let w = self.width(name)?;
        if i >= w {
            return Err(QzkError::WireOutOfRange { wire: i, total: w });
        }
        Ok(self.offset(name)? + i)
    }

    pub fn wires(&self, name: &str) -> Result<Vec<usize>> {
        let off = self.offset(name)?;
        Ok((off..off + self.width(name)?).collect())
    }

    /// Wires of several registers, in the order given.
    pub fn wires_of<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for n in names {
            out.extend(self.wires(n.as_ref())?);
        }
        Ok(out)
    }

    /// Register name and local index of a global wire.
    pub fn locate(&self, wire: usize) -> Option<(&str, usize)> {
        let mut off = 0;
        for (n, w) in &self.regs {
            if wire < off + w {
                return Some((n.as_str(), wire - off));
            }
            off += w;
        }
        None
    }

    /// Whether `self` is a prefix of `other` (same names and widths).
    pub fn is_prefix_of(&self, other: &RegisterLayout) -> bool {
        self.regs.len() <= other.regs.len() && self.regs.iter().zip(&other.regs).all(|(a, b)| a == b)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub(crate) amps: CVector,
}

impl PureState {
    /// `|0…0⟩` on `n` qubits.
    pub fn zero(n: usize) -> Self {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Self {
        let mut amps = CVector::zeros(1 << n);
        amps[index] = c(1.0);
        Self { amps }
    }

    pub fn new(amps: CVector) -> Result<Self> {
        let d = amps.len();
        if d == 0 || !d.is_power_of_two() {
            return Err(QzkError::Dimension(format!("state length {d} is not a power of two")));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(QzkError::InvalidState("non-finite amplitude".into()));
        }
        let n = amps.norm();
        if (n - 1.0).abs() > tol::STRUCTURAL {
            return Err(QzkError::InvalidState(format!("norm {n} differs from 1")));
        }
        Ok(Self { amps })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix { mat: &self.amps * self.amps.adjoint() }
    }

    /// `|self⟩ ⊗ |other⟩`.
    pub fn kron(&self, other: &PureState) -> PureState {
        PureState { amps: self.amps.kronecker(&other.amps) }
    }
}

/// Hermitian, unit-trace, PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub(crate) mat: CMatrix,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix) -> Result<Self> {
        let d = mat.nrows();
        if d != mat.ncols() || d == 0 || !d.is_power_of_two() {
            return Err(QzkError::Dimension(format!("{}x{} is not a qubit density matrix", d, mat.ncols())));
        }
        if (&mat - mat.adjoint()).max_abs() > tol::STRUCTURAL {
            return Err(QzkError::InvalidState("not Hermitian".into()));
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol::STRUCTURAL || tr.im.abs() > tol::STRUCTURAL {
            return Err(QzkError::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = linalg::eigvalsh(&mat).first().copied().unwrap_or(0.0);
        if min < tol::EIG_CLIP {
            return Err(QzkError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { mat })
    }

    pub(crate) fn from_unchecked(mat: CMatrix) -> Self {
        Self { mat: linalg::hermitize(&mat) }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let d = 1 << n;
        Self { mat: CMatrix::identity(d, d) * c(1.0 / d as f64) }
    }

    pub fn basis(n: usize, index: usize) -> Self {
        PureState::basis(n, index).density()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn kron(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix { mat: self.mat.kronecker(&other.mat) }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub(crate) fn check_wires(wires: &[usize], total: usize) -> Result<()> {
    for (i, &w) in wires.iter().enumerate() {
        if w >= total {
            return Err(QzkError::WireOutOfRange { wire: w, total });
        }
        if wires[..i].contains(&w) {
            return Err(QzkError::DuplicateWire(w));
        }
    }
    Ok(())
}

/// Applies `u` to `wires` of a state laid out per `layout`.
pub fn apply_gate(state: &PureState, u: &CMatrix, wires: &[usize], layout: &RegisterLayout) -> Result<PureState> {
    let n = layout.total();
    if state.num_qubits() != n || state.dim() != 1 << n {
        return Err(QzkError::Dimension(format!("state has {} qubits, layout {}", state.num_qubits(), n)));
    }
    check_wires(wires, n)?;
    if u.nrows() != 1 << wires.len() || u.ncols() != u.nrows() {
        return Err(QzkError::Dimension(format!("{}x{} matrix on {} wires", u.nrows(), u.ncols(), wires.len())));
    }
    let defect = linalg::unitarity_defect(u);
    if defect > tol::STRUCTURAL * (u.nrows() as f64).sqrt().max(1.0) {
        return Err(QzkError::NotUnitary { index: 0, deviation: defect });
    }
    let mut out = state.clone();
    kernel::apply_matrix(out.amps.as_mut_slice(), n, wires, u);
    Ok(out)
}

/// Global wires of `keep` in layout order.
fn kept_wires<S: AsRef<str>>(layout: &RegisterLayout, keep: &[S]) -> Result<Vec<usize>> {
    for k in keep {
        layout.width(k.as_ref())?;
    }
    let mut wires = Vec::new();
    for (name, _) in layout.registers() {
        if keep.iter().any(|k| k.as_ref() == name) {
            wires.extend(layout.wires(name)?);
        }
    }
    Ok(wires)
}

/// Reduced state on the `keep` registers, in layout order.
pub fn partial_trace<S: AsRef<str>>(rho: &DensityMatrix, layout: &RegisterLayout, keep: &[S]) -> Result<DensityMatrix> {
    let n = layout.total();
    if rho.dim() != 1 << n {
        return Err(QzkError::Dimension(format!("density matrix of dim {} vs layout of {} qubits", rho.dim(), n)));
    }
    let kw = kept_wires(layout, keep)?;
    let rw = kernel::complement(n, &kw);
    let ko = kernel::offsets(n, &kw);
    let ro = kernel::offsets(n, &rw);
    let out = CMatrix::from_fn(ko.len(), ko.len(), |i, j| {
        ro.iter().map(|&r| rho.mat[(ko[i] | r, ko[j] | r)]).sum()
    });
    Ok(DensityMatrix::from_unchecked(out))
}

/// Reduced state of a pure state on the `keep` registers, in layout order.
pub fn reduce_pure<S: AsRef<str>>(psi: &PureState, layout: &RegisterLayout, keep: &[S]) -> Result<LowRankState> {
    let n = layout.total();
    if psi.num_qubits() != n {
        return Err(QzkError::Dimension(format!("state has {} qubits, layout {}", psi.num_qubits(), n)));
    }
    let kw = kept_wires(layout, keep)?;
    Ok(LowRankState::from_vector_wires(psi.amps.as_slice(), n, &kw))
}

/// Root fidelity `tr √(√ρ σ √ρ)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QzkError::Dimension(format!("{} vs {}", rho.dim(), sigma.dim())));
    }
    let a = linalg::psd_factor(&rho.mat);
    let b = linalg::psd_factor(&sigma.mat);
    Ok(linalg::nuclear_norm(&(a.adjoint() * b)).clamp(0.0, 1.0))
}

/// Sum of singular values of a square matrix.
pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(QzkError::Dimension(format!("{}x{} is not square", a.nrows(), a.ncols())));
    }
    let scale = a.max_abs().max(1.0);
    if (a - a.adjoint()).max_abs() <= tol::STRUCTURAL * scale {
        Ok(linalg::hermitian_abs_sum(a))
    } else {
        Ok(linalg::nuclear_norm(a))
    }
}

/// Purification `Σ √λ_i |e_i⟩|i⟩` on layout `[("S", n), ("REF", n)]`.
pub fn purify(rho: &DensityMatrix) -> Result<(PureState, RegisterLayout)> {
    let (vals, vecs) = linalg::eigh(&rho.mat);
    if let Some(&min) = vals.first() {
        if min < tol::EIG_CLIP {
            return Err(QzkError::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
    }
    let d = rho.dim();
    let n = rho.num_qubits();
    let mut amps = CVector::zeros(d * d);
    for (i, &lam) in vals.iter().enumerate() {
        let s = lam.max(0.0).sqrt();
        for r in 0..d {
            amps[r * d + i] = vecs[(r, i)] * s;
        }
    }
    let norm = amps.norm();
    amps /= c(norm);
    let layout = RegisterLayout::new([("S", n), ("REF", n)])?;
    Ok((PureState { amps }, layout))
}

/// Unitary on `aligned` maximizing `|⟨ψ|(I ⊗ U)|φ⟩|`, obtained from the polar decomposition of
/// the cross operator between the two states read as operators on the aligned register.
pub fn uhlmann_align(phi: &PureState, psi: &PureState, layout: &RegisterLayout, aligned: &str) -> Result<CMatrix> {
    let n = layout.total();
    if phi.num_qubits() != n || psi.num_qubits() != n {
        return Err(QzkError::Dimension("states do not match the layout".into()));
    }
    let kw = layout.wires(aligned)?;
    let hw = kernel::complement(n, &kw);
    let p = kernel::reshape(phi.amps.as_slice(), n, &hw, &kw);
    let q = kernel::reshape(psi.amps.as_slice(), n, &hw, &kw);
    // ⟨ψ|(I⊗U)|φ⟩ = tr(U X) with X = Φᵀ Ψ̄.
    let x = p.transpose() * q.conjugate();
    Ok(linalg::max_trace_unitary(&x))
}

/// `ρ = F F†` stored through a factor with at most `dim` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankState {
    factor: CMatrix,
}

impl LowRankState {
    pub fn from_factor(factor: CMatrix) -> Self {
        let mut s = Self { factor };
        s.compress();
        s
    }

    pub fn from_density(rho: &DensityMatrix) -> Self {
        Self { factor: linalg::psd_factor(&rho.mat) }
    }

    /// Reduced state on `keep` (global wires, in the order given) of an `n`-qubit vector.
    pub fn from_vector_wires(amps: &[C64], n: usize, keep: &[usize]) -> Self {
        let rest = kernel::complement(n, keep);
        Self::from_factor(kernel::reshape(amps, n, keep, &rest))
    }

    fn compress(&mut self) {
        let d = self.factor.nrows();
        if self.factor.ncols() > d {
            let rho = &self.factor * self.factor.adjoint();
            self.factor = linalg::psd_factor(&rho);
        }
    }

    pub fn factor(&self) -> &CMatrix {
        &self.factor
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn num_qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn trace(&self) -> f64 {
        self.factor.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn matrix(&self) -> CMatrix {
        &self.factor * self.factor.adjoint()
    }

    /// Dense density matrix, subject to the dense cap.
    pub fn density(&self) -> Result<DensityMatrix> {
        tol::check_dense_cap("density matrix", self.num_qubits())?;
        Ok(DensityMatrix::from_unchecked(self.matrix()))
    }

    pub fn scaled(&self, weight: f64) -> Self {
        Self { factor: &self.factor * c(weight.max(0.0).sqrt()) }
    }

    /// Convex combination (weights already folded into the parts).
    pub fn sum(parts: &[LowRankState]) -> Result<Self> {
        let d = parts.first().map(|p| p.dim()).unwrap_or(1);
        if parts.iter().any(|p| p.dim() != d) {
            return Err(QzkError::Dimension("mixture parts differ in dimension".into()));
        }
        let cols: usize = parts.iter().map(|p| p.factor.ncols()).sum();
        let mut f = CMatrix::zeros(d, cols);
        let mut at = 0;
        for p in parts {
            f.columns_mut(at, p.factor.ncols()).copy_from(&p.factor);
            at += p.factor.ncols();
        }
        Ok(Self::from_factor(f))
    }

    pub fn kron(&self, other: &LowRankState) -> Self {
        Self::from_factor(self.factor.kronecker(&other.factor))
    }

    /// `‖ρ − σ‖₁` from the factors `C = [F_ρ F_σ]` and `D = diag(I, −I)`.
    pub fn trace_distance(&self, other: &LowRankState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(QzkError::Dimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        let (ra, rb) = (self.factor.ncols(), other.factor.ncols());
        if ra + rb >= self.dim() {
            return trace_norm(&(self.matrix() - other.matrix()));
        }
        let mut cmat = CMatrix::zeros(self.dim(), ra + rb);
        cmat.columns_mut(0, ra).copy_from(&self.factor);
        cmat.columns_mut(ra, rb).copy_from(&other.factor);
        // ρ − σ = C D C† with C = QR, so its spectrum is that of R D R†.
        let r = cmat.qr().r();
        let dsign = CMatrix::from_diagonal(&CVector::from_fn(ra + rb, |i, _| c(if i < ra { 1.0 } else { -1.0 })));
        let m = &r * dsign * r.adjoint();
        Ok(linalg::hermitian_abs_sum(&m))
    }

    /// Root fidelity `‖F_ρ† F_σ‖₁`.
    pub fn fidelity(&self, other: &LowRankState) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(QzkError::Dimension(format!("{} vs {}", self.dim(), other.dim())));
        }
        Ok(linalg::nuclear_norm(&(self.factor.adjoint() * &other.factor)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, random_vector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h() -> CMatrix {
        let s = 1.0 / 2f64.sqrt();
        CMatrix::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)])
    }

    fn x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    fn two() -> RegisterLayout {
        RegisterLayout::new([("A", 1), ("B", 1)]).unwrap()
    }

    fn bell() -> PureState {
        let s = 1.0 / 2f64.sqrt();
        PureState::new(CVector::from_vec(vec![c(s), c(0.0), c(0.0), c(s)])).unwrap()
    }

    fn plus() -> DensityMatrix {
        let s = 1.0 / 2f64.sqrt();
        PureState::new(CVector::from_vec(vec![c(s), c(s)])).unwrap().density()
    }

    #[test]
    fn layout_offsets_and_duplicates() {
        let l = RegisterLayout::new([("V", 2), ("M", 1), ("P", 3)]).unwrap();
        assert_eq!(l.total(), 6);
        assert_eq!(l.wires("P").unwrap(), vec![3, 4, 5]);
        assert_eq!(l.locate(4), Some(("P", 1)));
        assert!(matches!(RegisterLayout::new([("V", 1), ("V", 1)]), Err(QzkError::DuplicateRegister(_))));
    }

    #[test]
    fn kron_identities_and_hadamards() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(kron(&i2, &i2), CMatrix::identity(4, 4));
        let p0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let k = kron(&x(), &p0);
        for (i, j, kk, l) in quads() {
            assert_eq!(k[(2 * i + kk, 2 * j + l)], x()[(i, j)] * p0[(kk, l)]);
        }
        let hh = kron(&h(), &h());
        let v = &hh * PureState::zero(2).amps;
        for a in v.iter() {
            assert!((a - c(0.5)).norm() < 1e-15);
        }
    }

    fn quads() -> Vec<(usize, usize, usize, usize)> {
        let mut out = vec![];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        out.push((i, j, k, l));
                    }
                }
            }
        }
        out
    }

    #[test]
    fn apply_gate_examples() {
        let l = two();
        let s = apply_gate(&PureState::zero(2), &x(), &[1], &l).unwrap();
        assert_eq!(s, PureState::basis(2, 0b01));
        let one = RegisterLayout::new([("A", 1)]).unwrap();
        let s = apply_gate(&PureState::zero(1), &h(), &[0], &one).unwrap();
        assert!((s.amps[1] - c(1.0 / 2f64.sqrt())).norm() < 1e-15);
        let cnot = CMatrix::from_fn(4, 4, |r, col| {
            let target = [0, 1, 3, 2][col];
            c(if r == target { 1.0 } else { 0.0 })
        });
        let s = apply_gate(&PureState::basis(2, 0b10), &cnot, &[0, 1], &l).unwrap();
        assert_eq!(s, PureState::basis(2, 0b11));
        assert!(matches!(apply_gate(&PureState::zero(2), &x(), &[0, 1], &l), Err(QzkError::Dimension(_))));
        assert!(matches!(apply_gate(&PureState::zero(2), &cnot, &[1, 1], &l), Err(QzkError::DuplicateWire(1))));
    }

    #[test]
    fn partial_trace_examples() {
        let l = RegisterLayout::new([("X", 1), ("Y", 1)]).unwrap();
        let r = partial_trace(&bell().density(), &l, &["X"]).unwrap();
        assert!((r.matrix() - DensityMatrix::maximally_mixed(1).matrix()).max_abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = DensityMatrix::new(random_density(2, 2, &mut rng)).unwrap();
        let b = DensityMatrix::new(random_density(4, 3, &mut rng)).unwrap();
        let l = RegisterLayout::new([("A", 1), ("B", 2)]).unwrap();
        let ab = a.kron(&b);
        assert!((partial_trace(&ab, &l, &["A"]).unwrap().matrix() - a.matrix()).max_abs() < 1e-14);
        assert!((partial_trace(&ab, &l, &["B"]).unwrap().matrix() - b.matrix()).max_abs() < 1e-14);
        assert!((partial_trace(&ab, &l, &["A", "B"]).unwrap().matrix() - ab.matrix()).max_abs() < 1e-15);
        assert!(matches!(partial_trace(&ab, &l, &["Q"]), Err(QzkError::UnknownRegister(_))));
    }

    #[test]
    fn fidelity_examples() {
        let z = DensityMatrix::basis(1, 0);
        let o = DensityMatrix::basis(1, 1);
        assert!((fidelity(&z, &z).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity(&z, &o).unwrap() < 1e-12);
        assert!((fidelity(&z, &plus()).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn trace_norm_examples() {
        let z = DensityMatrix::basis(1, 0);
        let o = DensityMatrix::basis(1, 1);
        assert!(trace_norm(&(z.matrix() - z.matrix())).unwrap() < 1e-15);
        assert!((trace_norm(&(z.matrix() - o.matrix())).unwrap() - 2.0).abs() < 1e-12);
        assert!((trace_norm(&(z.matrix() - plus().matrix())).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(trace_norm(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn purify_examples() {
        let cases = [
            DensityMatrix::basis(1, 0),
            DensityMatrix::maximally_mixed(1),
            DensityMatrix::new(CMatrix::from_row_slice(2, 2, &[c(0.9), c(0.0), c(0.0), c(0.1)])).unwrap(),
        ];
        for rho in cases {
            let (psi, layout) = purify(&rho).unwrap();
            let back = partial_trace(&psi.density(), &layout, &["S"]).unwrap();
            assert!((back.matrix() - rho.matrix()).max_abs() < 1e-10);
        }
    }

    #[test]
    fn fresh_names_avoid_existing_registers() {
        let l = RegisterLayout::new([("B", 1), ("B1", 1)]).unwrap();
        assert_eq!(l.fresh_name("X"), "X");
        assert_eq!(l.fresh_name("B"), "B2");
    }

    #[test]
    fn uhlmann_examples() {
        let l = two();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let phi = PureState::new(random_vector(4, &mut rng)).unwrap();
        let u = uhlmann_align(&phi, &phi, &l, "B").unwrap();
        let moved = apply_gate(&phi, &u, &[1], &l).unwrap();
        assert!((moved.amps - &phi.amps).norm() < 1e-10);
        let u = uhlmann_align(&PureState::basis(2, 0b00), &PureState::basis(2, 0b01), &l, "B").unwrap();
        let moved = apply_gate(&PureState::zero(2), &u, &[1], &l).unwrap();
        assert!((moved.amps - PureState::basis(2, 1).amps).norm() < 1e-10);
    }

    #[test]
    fn low_rank_distance_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let a = random_density(16, 2, &mut rng);
            let b = random_density(16, 3, &mut rng);
            let la = LowRankState::from_factor(linalg::psd_factor(&a));
            let lb = LowRankState::from_factor(linalg::psd_factor(&b));
            let dense = trace_norm(&(&a - &b)).unwrap();
            assert!((la.trace_distance(&lb).unwrap() - dense).abs() < 1e-10);
            let f = fidelity(&DensityMatrix::from_unchecked(a), &DensityMatrix::from_unchecked(b)).unwrap();
            assert!((la.fidelity(&lb).unwrap() - f).abs() < 1e-10);
        }
    }
}
