//! State-vector kernels. Every basis-index computation goes through
//! [`bit_of_wire`]: wire 0 is the most significant bit of the basis index.

use crate::qla::{CMatrix, C64};

/// Bit position, counted from the least significant end, of `wire` in an `n`-qubit index.
#[inline]
pub fn bit_of_wire(n: usize, wire: usize) -> usize {
    n - 1 - wire
}

/// Global index contribution of every local index over `wires` (`wires[0]` is the local MSB).
pub fn offsets(n: usize, wires: &[usize]) -> Vec<usize> {
    let k = wires.len();
    let mut out = vec![0usize; 1 << k];
    for (local, slot) in out.iter_mut().enumerate() {
        let mut g = 0;
        for (i, &w) in wires.iter().enumerate() {
            if (local >> (k - 1 - i)) & 1 == 1 {
                g |= 1 << bit_of_wire(n, w);
            }
        }
        *slot = g;
    }
    out
}

/// All basis indices whose bits on `wires` are zero, in increasing order.
pub fn bases(n: usize, wires: &[usize]) -> Vec<usize> {
    let mut bits: Vec<usize> = wires.iter().map(|&w| bit_of_wire(n, w)).collect();
    bits.sort_unstable();
    let count = 1usize << (n - wires.len());
    (0..count)
        .map(|c| {
            let mut base = c;
            for &b in &bits {
                let low = base & ((1 << b) - 1);
                base = ((base >> b) << (b + 1)) | low;
            }
            base
        })
        .collect()
}

/// Wires of an `n`-qubit register not listed in `wires`, ascending.
pub fn complement(n: usize, wires: &[usize]) -> Vec<usize> {
    (0..n).filter(|w| !wires.contains(w)).collect()
}

/// Applies a dense `2^k × 2^k` matrix to `wires`.
pub fn apply_matrix(amps: &mut [C64], n: usize, wires: &[usize], u: &CMatrix) {
    let offs = offsets(n, wires);
    let d = offs.len();
    let mut local = vec![C64::new(0.0, 0.0); d];
    for base in bases(n, wires) {
        for (l, &o) in offs.iter().enumerate() {
            local[l] = amps[base | o];
        }
        for (r, &o) in offs.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (c, v) in local.iter().enumerate() {
                acc += u[(r, c)] * v;
            }
            amps[base | o] = acc;
        }
    }
}

/// Applies a single-qubit matrix `[[a, b], [c, d]]`.
pub fn apply_1q(amps: &mut [C64], n: usize, wire: usize, m: [[C64; 2]; 2]) {
    let bit = 1usize << bit_of_wire(n, wire);
    for i in 0..amps.len() {
        if i & bit == 0 {
            let a0 = amps[i];
            let a1 = amps[i | bit];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Flips `target` wherever every control wire is 1.
pub fn apply_mcx(amps: &mut [C64], n: usize, controls: &[usize], target: usize) {
    let cmask: usize = controls.iter().map(|&w| 1usize << bit_of_wire(n, w)).sum();
    let t = 1usize << bit_of_wire(n, target);
    for i in 0..amps.len() {
        if i & cmask == cmask && i & t == 0 {
            amps.swap(i, i | t);
        }
    }
}

/// Swaps wires `a` and `b` wherever `control` is 1.
pub fn apply_cswap(amps: &mut [C64], n: usize, control: usize, a: usize, b: usize) {
    let c = 1usize << bit_of_wire(n, control);
    let ba = 1usize << bit_of_wire(n, a);
    let bb = 1usize << bit_of_wire(n, b);
    for i in 0..amps.len() {
        if i & c != 0 && i & ba != 0 && i & bb == 0 {
            amps.swap(i, (i & !ba) | bb);
        }
    }
}

/// Multiplies by `i` wherever both wires are 1.
pub fn apply_phase_i(amps: &mut [C64], n: usize, a: usize, b: usize) {
    let m = (1usize << bit_of_wire(n, a)) | (1usize << bit_of_wire(n, b));
    for (i, v) in amps.iter_mut().enumerate() {
        if i & m == m {
            *v *= C64::new(0.0, 1.0);
        }
    }
}

/// Matrix `M[r, c] = amps[row(r) | col(c)]`; `rows` and `cols` must partition the wires.
pub fn reshape(amps: &[C64], n: usize, rows: &[usize], cols: &[usize]) -> CMatrix {
    let ro = offsets(n, rows);
    let co = offsets(n, cols);
    CMatrix::from_fn(ro.len(), co.len(), |r, c| amps[ro[r] | co[c]])
}

/// Inverse of [`reshape`].
pub fn unreshape(m: &CMatrix, n: usize, rows: &[usize], cols: &[usize]) -> Vec<C64> {
    let ro = offsets(n, rows);
    let co = offsets(n, cols);
    let mut out = vec![C64::new(0.0, 0.0); 1 << n];
    for (r, &a) in ro.iter().enumerate() {
        for (c, &b) in co.iter().enumerate() {
            out[a | b] = m[(r, c)];
        }
    }
    out
}

/// `(mask, want)` such that a basis index `i` satisfies every literal iff `i & mask == want`.
pub fn literal_mask(n: usize, literals: &[(usize, bool)]) -> (usize, usize) {
    let mut mask = 0;
    let mut want = 0;
    for &(w, v) in literals {
        let b = 1usize << bit_of_wire(n, w);
        mask |= b;
        if v {
            want |= b;
        }
    }
    (mask, want)
}
