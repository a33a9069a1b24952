//! Reference `Q_x`: a postselection circuit whose conditioned output on
//! `|0>_R |k>_K` is proportional to `|Ψ_k>` on the flag qubit.
//!
//! Coin rounds turn the configuration amplitudes into the automaton's
//! distribution, the collapse sums it onto the flag as `(1-p, p)`, and a
//! `K`-controlled block encoding maps that to the stage-`k` coefficients.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use super::{PipelineError, RegisterLayout};
use crate::automaton::Automaton;
use crate::circuit::{Circuit, Control, Gate, PostTarget};
use crate::linalg::CMatrix;

/// `M_k`, sending `(1-p, p)` to `(1/2 + p, 2^(T-k) (1/2 - p))`.
pub fn combiner_matrix(steps: usize, k: usize) -> [[f64; 2]; 2] {
    let e = ((steps - k) as f64 - 1.0).exp2();
    [[0.5, 1.5], [e, -e]]
}

/// A 4x4 unitary whose block with the ancilla (the high local bit) in `|0>`
/// is `m / s`, where `s = max(1, ‖m‖₂)`. Built from the SVD `m = A Σ Bᵀ` as
/// `(A ⊕ A) [[Σ', √(1-Σ'²)], [√(1-Σ'²), -Σ']] (Bᵀ ⊕ Bᵀ)`.
pub fn block_encode_2x2(m: [[f64; 2]; 2]) -> Result<(CMatrix, f64), PipelineError> {
    let mat = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    if mat.iter().any(|v| !v.is_finite()) || mat.iter().all(|&v| v == 0.0) {
        return Err(PipelineError::ZeroMatrix);
    }
    let svd = mat.svd(true, true);
    let (a, bt) = (svd.u.expect("u"), svd.v_t.expect("v_t"));
    let s = svd.singular_values.max().max(1.0);
    let sigma = svd.singular_values / s;
    let comp = sigma.map(|x| (1.0 - x * x).max(0.0).sqrt());

    let mut core = DMatrix::<f64>::zeros(4, 4);
    let mut left = DMatrix::<f64>::zeros(4, 4);
    let mut right = DMatrix::<f64>::zeros(4, 4);
    for i in 0..2 {
        core[(i, i)] = sigma[i];
        core[(i, i + 2)] = comp[i];
        core[(i + 2, i)] = comp[i];
        core[(i + 2, i + 2)] = -sigma[i];
        for j in 0..2 {
            left[(i, j)] = a[(i, j)];
            left[(i + 2, j + 2)] = a[(i, j)];
            right[(i, j)] = bt[(i, j)];
            right[(i + 2, j + 2)] = bt[(i, j)];
        }
    }
    let u = left * core * right;
    Ok((u.map(|v| Complex64::new(v, 0.0)), s))
}

fn k_pattern(layout: &RegisterLayout, k: usize) -> Vec<Control> {
    layout
        .k()
        .qubits()
        .enumerate()
        .map(|(i, q)| Control {
            qubit: q,
            polarity: k >> i & 1 == 1,
        })
        .collect()
}

/// Build `Q_x` on registers `R` and `K`.
pub fn build_qx(aut: &Automaton, layout: &RegisterLayout) -> Result<Circuit, PipelineError> {
    aut.accept_probability()?;
    if layout.m != aut.m || layout.steps != aut.steps {
        return Err(PipelineError::LayoutTooSmall(format!(
            "layout is for m={}, T={} but the automaton has m={}, T={}",
            layout.m, layout.steps, aut.m, aut.steps
        )));
    }
    if (1usize << layout.k_width) <= aut.steps {
        return Err(PipelineError::LayoutTooSmall(format!(
            "K of {} qubits cannot index {} stages",
            layout.k_width,
            aut.steps + 1
        )));
    }
    let (r, kreg) = (layout.r(), layout.k());
    let coin = layout.coin();
    let config: Vec<usize> = (0..aut.m).collect();

    let mut b = Circuit::builder(layout.qx_width());
    b.register("R", r.start, r.len).register("K", kreg.start, kreg.len);
    b.provenance(format!(
        "qx m={} T={} p_a={}",
        aut.m,
        aut.steps,
        aut.accept_probability_unchecked()
    ));

    for &q in config.iter().filter(|&&q| aut.init >> q & 1 == 1) {
        b.x(q);
    }
    let perm0 = Gate::perm("pi0", aut.perm0.clone());
    let perm1 = Gate::perm("pi1", aut.perm1.clone());
    for _ in 0..aut.steps {
        // amplitude map (π0 + π1)/2 on the coin=0 branch
        b.h(coin);
        b.controlled(perm0.clone(), &config, &[Control::off(coin)]);
        b.controlled(perm1.clone(), &config, &[Control::on(coin)]);
        b.h(coin);
        b.postselect(coin, PostTarget::Zero);
    }
    for &q in &config[1..] {
        b.h(q);
        b.postselect(q, PostTarget::Zero);
    }
    for k in 0..=aut.steps {
        let (u, _) = block_encode_2x2(combiner_matrix(aut.steps, k))?;
        let gate = Gate::unitary(format!("comb_{k}"), u);
        b.controlled(gate, &[layout.flag(), coin], &k_pattern(layout, k));
    }
    b.postselect(coin, PostTarget::Zero);
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, unitarity_defect};

    fn top_left(u: &CMatrix) -> [[f64; 2]; 2] {
        [[u[(0, 0)].re, u[(0, 1)].re], [u[(1, 0)].re, u[(1, 1)].re]]
    }

    #[test]
    fn block_encoding_examples() {
        let (u, s) = block_encode_2x2([[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(s, 1.0);
        assert!(unitarity_defect(&u) < 1e-12);
        let block = CMatrix::from_fn(2, 2, |i, j| u[(i, j)]);
        assert!(max_abs_diff(&block, &CMatrix::identity(2, 2)) < 1e-12);

        let (u, s) = block_encode_2x2([[3.0, 0.0], [0.0, 3.0]]).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
        let tl = top_left(&u);
        assert!((tl[0][0] - 1.0).abs() < 1e-12 && tl[0][1].abs() < 1e-12);

        let m = [[1.0, -0.5], [0.0, 0.5]];
        let (u, s) = block_encode_2x2(m).unwrap();
        assert!(unitarity_defect(&u) < 1e-12);
        let tl = top_left(&u);
        for i in 0..2 {
            for j in 0..2 {
                assert!((tl[i][j] - m[i][j] / s).abs() < 1e-12);
            }
        }
        assert_eq!(block_encode_2x2([[0.0; 2]; 2]), Err(PipelineError::ZeroMatrix));
    }

    #[test]
    fn combiner_maps_distribution_to_psi() {
        for steps in 1..=5 {
            for k in 0..=steps {
                let m = combiner_matrix(steps, k);
                let p = 0.3;
                let out = [m[0][0] * (1.0 - p) + m[0][1] * p, m[1][0] * (1.0 - p) + m[1][1] * p];
                let e = ((steps - k) as f64).exp2();
                assert!((out[0] - (0.5 + p)).abs() < 1e-12);
                assert!((out[1] - e * (0.5 - p)).abs() < 1e-12);
            }
        }
    }
}
