//! Brute-force operators the synthesized circuits are checked against.
//! Index conventions match the synthesizers: controls in the low bits,
//! targets above them.

use num_complex::Complex64;

use super::ControlMode;
use crate::circuit::Gate;
use crate::linalg::CMatrix;

fn permutation(dim: usize, f: impl Fn(usize) -> usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        m[(f(col), col)] = Complex64::new(1.0, 0.0);
    }
    m
}

/// `∧_k(X)` with the given polarities; target is qubit `k`.
pub fn mcx(polarities: &[bool]) -> CMatrix {
    let k = polarities.len();
    let pattern = polarities
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &p)| acc | (p as usize) << i);
    let low = (1usize << k) - 1;
    permutation(1 << (k + 1), |j| if j & low == pattern { j ^ 1 << k } else { j })
}

/// `g` on the qubits above `k` controls, firing per `mode`.
pub fn controlled(g: &Gate, k: usize, mode: ControlMode) -> CMatrix {
    let gm = g.matrix();
    let a = gm.nrows();
    let low = (1usize << k) - 1;
    let dim = a << k;
    let mut m = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let cv = col & low;
        let fire = match mode {
            ControlMode::And => cv == low,
            ControlMode::Or => cv != 0,
        };
        if fire {
            let t = col >> k;
            for r in 0..a {
                m[((r << k) | cv, col)] = gm[(r, t)];
            }
        } else {
            m[(col, col)] = Complex64::new(1.0, 0.0);
        }
    }
    m
}

pub fn inc_mod(modulus: usize, width: usize) -> CMatrix {
    permutation(1 << width, |j| if j < modulus { (j + 1) % modulus } else { j })
}

pub fn inc(n: usize) -> CMatrix {
    inc_mod(1 << n, n)
}

/// Increment of the counter above `k` controls, firing per `mode`.
pub fn controlled_inc(n: usize, k: usize, mode: ControlMode) -> CMatrix {
    let low = (1usize << k) - 1;
    let size = 1usize << n;
    permutation(1 << (k + n), |j| {
        let cv = j & low;
        let fire = match mode {
            ControlMode::And => cv == low,
            ControlMode::Or => cv != 0,
        };
        if fire {
            (((j >> k) + 1) % size) << k | cv
        } else {
            j
        }
    })
}

/// Target flips iff the control is in `|->`: `(H ⊗ I) CNOT (H ⊗ I)`.
pub fn w() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = CMatrix::from_row_slice(2, 2, &[s.into(), s.into(), s.into(), (-s).into()]);
    let id = CMatrix::identity(2, 2);
    // kronecker puts the second factor in the low bits
    let h0 = id.kronecker(&h);
    &h0 * Gate::Cx.matrix() * &h0
}

/// `q2 ^= q0 OR q1`.
pub fn or3() -> CMatrix {
    permutation(8, |j| if j & 3 != 0 { j ^ 4 } else { j })
}
