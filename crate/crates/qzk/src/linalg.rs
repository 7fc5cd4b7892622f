//! Hermitian eigendecomposition and the factorizations built on it.

use nalgebra::linalg::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qla::{CMatrix, CVector, C64};
use crate::tol;

/// `(A + A†) / 2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian matrix.
pub fn eigh(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(a));
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = CMatrix::from_fn(a.nrows(), idx.len(), |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `Σ |λ_i|` of a Hermitian matrix; singular values stand in when the eigen-solver does not
/// converge.
pub fn hermitian_abs_sum(a: &CMatrix) -> f64 {
    let vals = eigvalsh(a);
    if vals.iter().all(|v| v.is_finite()) {
        vals.iter().map(|v| v.abs()).sum()
    } else {
        nuclear_norm(a)
    }
}

/// Factor `F` with `F F† = A` for a PSD `A`, dropping numerically zero eigenvalues.
pub fn psd_factor(a: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(a);
    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > 1e-15 * scale).collect();
    CMatrix::from_fn(a.nrows(), keep.len(), |r, c| {
        vecs[(r, keep[c])] * vals[keep[c]].sqrt()
    })
}

/// Principal square root of a PSD matrix.
pub fn psd_sqrt(a: &CMatrix) -> CMatrix {
    let (vals, vecs) = eigh(a);
    let d = CMatrix::from_diagonal(&CVector::from_iterator(
        vals.len(),
        vals.iter().map(|&v| C64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    &vecs * d * vecs.adjoint()
}

/// Hermitian dilation `[[0, A], [A†, 0]]`, whose spectrum is `±σ_i` plus zeros. Working with
/// it instead of `A†A` keeps small singular values accurate to machine precision.
fn dilation(a: &CMatrix) -> CMatrix {
    let (m, n) = (a.nrows(), a.ncols());
    let mut h = CMatrix::zeros(m + n, m + n);
    h.view_mut((0, m), (m, n)).copy_from(a);
    h.view_mut((m, 0), (n, m)).copy_from(&a.adjoint());
    h
}

/// Singular values of `a`, descending.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let k = a.nrows().min(a.ncols());
    let mut vals = eigvalsh(&dilation(a));
    vals.reverse();
    vals.truncate(k);
    vals.into_iter().map(|v| v.max(0.0)).collect()
}

/// Thin SVD pieces `(σ, W, Z)` of a square matrix with `X = Σ σ_i w_i z_i†`, restricted to
/// singular values above `1e-13·σ_max`.
fn svd_support(x: &CMatrix) -> (Vec<f64>, Vec<CVector>, Vec<CVector>) {
    let m = x.nrows();
    let (vals, vecs) = eigh(&dilation(x));
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let mut sig = Vec::new();
    let mut ws: Vec<CVector> = Vec::new();
    let mut zs: Vec<CVector> = Vec::new();
    for i in (0..vals.len()).rev() {
        if vals[i] <= 1e-13 * top || vals[i] <= 0.0 || sig.len() == m.min(x.ncols()) {
            break;
        }
        let v = vecs.column(i);
        let mut w = v.rows(0, m).into_owned();
        let mut z = v.rows(m, x.ncols()).into_owned();
        for _ in 0..2 {
            for (pw, pz) in ws.iter().zip(&zs) {
                let a = pw.dotc(&w);
                w -= pw * a;
                let b = pz.dotc(&z);
                z -= pz * b;
            }
        }
        let (nw, nz) = (w.norm(), z.norm());
        if nw < 0.1 || nz < 0.1 {
            break;
        }
        sig.push(vals[i]);
        ws.push(w / C64::new(nw, 0.0));
        zs.push(z / C64::new(nz, 0.0));
    }
    (sig, ws, zs)
}

/// Sum of singular values.
pub fn nuclear_norm(a: &CMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// Orthonormalizes `vectors` in order and completes them to a unitary whose leading
/// columns span the same nested subspaces. Vectors that are numerically dependent
/// on their predecessors are skipped.
pub fn complete_basis(vectors: &[CVector], dim: usize) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::with_capacity(dim);
    let candidates = vectors
        .iter()
        .cloned()
        .chain((0..dim).map(|i| {
            let mut e = CVector::zeros(dim);
            e[i] = C64::new(1.0, 0.0);
            e
        }));
    for mut v in candidates {
        if cols.len() == dim {
            break;
        }
        for _ in 0..2 {
            for c in &cols {
                let proj = c.dotc(&v);
                v -= c * proj;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            cols.push(v / C64::new(n, 0.0));
        }
    }
    CMatrix::from_columns(&cols)
}

/// The unitary `U` maximizing `Re tr(U X)` for a square `X`: with `X = W Σ Z†`, `U = Z W†`,
/// i.e. the unitary polar factor of `X†`.
pub fn max_trace_unitary(x: &CMatrix) -> CMatrix {
    let d = x.nrows();
    let (_, ws, zs) = svd_support(x);
    let w = complete_basis(&ws, d);
    let z = complete_basis(&zs, d);
    z * w.adjoint()
}

/// Largest deviation of `U†U` from the identity.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((p[(r, c)] - C64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Whether `u` is unitary within the structural tolerance.
pub fn is_unitary(u: &CMatrix) -> bool {
    unitarity_defect(u) <= tol::STRUCTURAL * (u.nrows().max(1) as f64).sqrt().max(1.0)
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the phases of `R`'s diagonal
/// moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / 2f64.sqrt()
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for c in 0..d {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 { rc / rc.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..d {
            out[(row, c)] = q[(row, c)] * phase;
        }
    }
    out
}

/// Haar-random unit vector.
pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVector {
    let v = CVector::from_fn(d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Random density matrix of the given rank (partial trace of a Haar-random pure state).
pub fn random_density<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMatrix {
    let v = random_vector(d * rank, rng);
    let f = CMatrix::from_fn(d, rank, |r, c| v[r * rank + c]);
    f.clone() * f.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [1, 2, 4, 8] {
            assert!(unitarity_defect(&haar_unitary(d, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn max_trace_unitary_attains_nuclear_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for rank in 1..=4 {
            let f = CMatrix::from_fn(4, rank, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let g = CMatrix::from_fn(rank, 4, |_, _| {
                C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
            });
            let x = f * g;
            let u = max_trace_unitary(&x);
            assert!(unitarity_defect(&u) < 1e-10);
            let t = (u * &x).trace();
            assert!((t.re - nuclear_norm(&x)).abs() < 1e-9, "rank {rank}");
            assert!(t.im.abs() < 1e-9);
        }
    }

    #[test]
    fn complete_basis_keeps_leading_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_vector(4, &mut rng);
        let u = complete_basis(std::slice::from_ref(&a), 4);
        assert!(unitarity_defect(&u) < 1e-12);
        assert!((u.column(0) - &a).norm() < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(4, 2, &mut rng);
        let s = psd_sqrt(&rho);
        assert!((&s * &s - &rho).norm() < 1e-10);
        let f = psd_factor(&rho);
        assert_eq!(f.ncols(), 2);
        assert!((&f * f.adjoint() - &rho).norm() < 1e-10);
    }
}
