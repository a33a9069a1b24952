//! Gate synthesis: multi-controlled gates, counter increments and the small
//! gadgets the accumulator circuits are assembled from.
//!
//! Every synthesizer builds the gadget with native multi-controlled ops and
//! then [`lower`]s it, so results are expressed in the elementary set. Data
//! qubits come first (`0..data_qubits`, controls before targets); ancillas
//! follow and start and end in `|0>`.
//!
//! Gate counts are linear in the control count and quadratic in the counter
//! width:
//!
//! | gadget | bound |
//! |---|---|
//! | `synth_mcx(k)` | `MCX_COST.0 * k + MCX_COST.1` |
//! | `synth_controlled_inc(n, k)` | `CINC_COST.0 * (k + n²) + CINC_COST.1` |

mod lower;
pub mod reference;

use crate::circuit::{Circuit, CircuitBuilder, Control, Gate};
use crate::linalg::CMatrix;
use crate::sim::{self, StateVector};

pub(crate) use lower::emit_toffoli;
pub use lower::{is_lowered, lower};

/// `(a, b)` with `count(synth_mcx(k)) <= a*k + b`.
pub const MCX_COST: (usize, usize) = (32, 1);
/// `(a, b)` with `count(synth_controlled_inc(n, k)) <= a*(k + n²) + b`.
pub const CINC_COST: (usize, usize) = (64, 0);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("gate `{0}` is not a supported target for control synthesis")]
    UnsupportedGate(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Fire when every control is `|1>` (`And`) or when not every control is
/// `|0>` (`Or`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    And,
    Or,
}

#[derive(Debug, Clone)]
pub struct SynthResult {
    pub circuit: Circuit,
    /// Data qubits are `0..data_qubits`.
    pub data_qubits: usize,
    pub ancillas: Vec<usize>,
    /// Ancillas return to `|0>` on every basis input.
    pub restores_ancillas: bool,
}

fn finish(native: Circuit, data_qubits: usize, mut ancillas: Vec<usize>) -> SynthResult {
    let before = native.num_qubits();
    let circuit = lower(&native);
    ancillas.extend(before..circuit.num_qubits());
    SynthResult {
        circuit,
        data_qubits,
        ancillas,
        restores_ancillas: true,
    }
}

fn check_target(g: &Gate) -> Result<(), SynthError> {
    match g {
        Gate::Perm(p) => Err(SynthError::UnsupportedGate(p.label.clone())),
        Gate::Unitary(u) if u.matrix.nrows() > 4 => Err(SynthError::UnsupportedGate(u.label.clone())),
        _ => Ok(()),
    }
}

/// Descending increment cascade on `counter` (bit 0 least significant):
/// bit `j` flips iff `controls` fire and every lower bit is set.
pub fn emit_inc(b: &mut CircuitBuilder, counter: &[usize], controls: &[Control]) {
    for j in (0..counter.len()).rev() {
        let mut cs = controls.to_vec();
        cs.extend(counter[..j].iter().map(|&q| Control::on(q)));
        b.mcx(&cs, counter[j]);
    }
}

/// `|j> -> |(j+1) mod modulus>` for `j < modulus`, identity above.
pub fn incmod_gate(modulus: usize, width: usize) -> Gate {
    let table = (0..1usize << width)
        .map(|j| match j {
            _ if j + 1 < modulus => j + 1,
            _ if j + 1 == modulus => 0,
            _ => j,
        })
        .collect();
    Gate::perm(format!("incmod_{modulus}"), table)
}

/// `∧_k(X)` on controls `0..k` (with the given polarities) and target `k`.
pub fn synth_mcx(k: usize, polarities: &[bool]) -> Result<SynthResult, SynthError> {
    if polarities.len() != k {
        return Err(SynthError::InvalidParameter(format!(
            "{} polarities for {k} controls",
            polarities.len()
        )));
    }
    let mut b = Circuit::builder(k + 1);
    b.provenance(format!("synth mcx k={k}"));
    let controls: Vec<Control> = polarities
        .iter()
        .enumerate()
        .map(|(q, &p)| Control { qubit: q, polarity: p })
        .collect();
    b.mcx(&controls, k);
    Ok(finish(b.build(), k + 1, vec![]))
}

/// `∧_k(g)`: controls `0..k`, `g` on the next `arity(g)` qubits. For
/// `k >= 2` the controls are folded onto a clean flag ancilla that then
/// controls `g`.
pub fn synth_controlled_gate(g: &Gate, k: usize) -> Result<SynthResult, SynthError> {
    check_target(g)?;
    if k == 0 {
        return Err(SynthError::InvalidParameter("k must be at least 1".into()));
    }
    let a = g.arity();
    let mut b = Circuit::builder(k + a);
    b.provenance(format!("synth controlled {} k={k}", g.kind()));
    let targets: Vec<usize> = (k..k + a).collect();
    let controls: Vec<Control> = (0..k).map(Control::on).collect();
    b.controlled(g.clone(), &targets, &controls);
    Ok(finish(b.build(), k + a, vec![]))
}

/// `∨_k(g)`: `g` fires unless every control is `|0>`.
pub fn synth_or_controlled_gate(g: &Gate, k: usize) -> Result<SynthResult, SynthError> {
    check_target(g)?;
    if k == 0 {
        return Err(SynthError::InvalidParameter("k must be at least 1".into()));
    }
    let a = g.arity();
    let data = k + a;
    let targets: Vec<usize> = (k..data).collect();
    if k == 1 {
        let mut b = Circuit::builder(data);
        b.provenance(format!("synth or-controlled {} k=1", g.kind()));
        b.controlled(g.clone(), &targets, &[Control::on(0)]);
        return Ok(finish(b.build(), data, vec![]));
    }
    let mut b = Circuit::builder(data + 1);
    b.provenance(format!("synth or-controlled {} k={k}", g.kind()));
    let flag = data;
    let zeros: Vec<Control> = (0..k).map(Control::off).collect();
    // flag = NOT(all zero) by de Morgan
    b.mcx(&zeros, flag).x(flag);
    b.controlled(g.clone(), &targets, &[Control::on(flag)]);
    b.x(flag).mcx(&zeros, flag);
    Ok(finish(b.build(), data, vec![flag]))
}

/// `INC_{2^n}` on qubits `0..n`.
pub fn synth_inc_pow2(n: usize) -> Result<SynthResult, SynthError> {
    if n == 0 {
        return Err(SynthError::InvalidParameter("counter width must be at least 1".into()));
    }
    let mut b = Circuit::builder(n);
    b.provenance(format!("synth inc n={n}"));
    let counter: Vec<usize> = (0..n).collect();
    emit_inc(&mut b, &counter, &[]);
    Ok(finish(b.build(), n, vec![]))
}

/// `∧_k(INC_{2^n})` or `∨_k(INC_{2^n})`: controls `0..k`, counter `k..k+n`.
/// The condition is computed once onto a flag so the cascade costs
/// `O(n²)` independently of `k`.
pub fn synth_controlled_inc(n: usize, k: usize, mode: ControlMode) -> Result<SynthResult, SynthError> {
    if n == 0 || k == 0 {
        return Err(SynthError::InvalidParameter("n and k must be at least 1".into()));
    }
    let data = k + n;
    let counter: Vec<usize> = (k..data).collect();
    let tag = match mode {
        ControlMode::And => "and",
        ControlMode::Or => "or",
    };
    if k == 1 {
        let mut b = Circuit::builder(data);
        b.provenance(format!("synth {tag}-controlled inc n={n} k=1"));
        emit_inc(&mut b, &counter, &[Control::on(0)]);
        return Ok(finish(b.build(), data, vec![]));
    }
    let flag = data;
    let mut b = Circuit::builder(data + 1);
    b.provenance(format!("synth {tag}-controlled inc n={n} k={k}"));
    let compute = |b: &mut CircuitBuilder| match mode {
        ControlMode::And => {
            b.mcx(&(0..k).map(Control::on).collect::<Vec<_>>(), flag);
        }
        ControlMode::Or => {
            b.mcx(&(0..k).map(Control::off).collect::<Vec<_>>(), flag);
            b.x(flag);
        }
    };
    compute(&mut b);
    emit_inc(&mut b, &counter, &[Control::on(flag)]);
    // the flag computation is self-inverse up to reordering
    match mode {
        ControlMode::And => compute(&mut b),
        ControlMode::Or => {
            b.x(flag);
            b.mcx(&(0..k).map(Control::off).collect::<Vec<_>>(), flag);
        }
    }
    Ok(finish(b.build(), data, vec![flag]))
}

/// `|j> -> |(j+1) mod modulus>` below the modulus, fixed above, as one
/// opaque permutation labelled `incmod_<modulus>`.
pub fn synth_inc_mod(modulus: usize, width: usize) -> Result<SynthResult, SynthError> {
    if modulus < 2 || width >= usize::BITS as usize || modulus > 1usize << width {
        return Err(SynthError::InvalidParameter(format!(
            "need 2 <= modulus <= 2^width, got modulus {modulus}, width {width}"
        )));
    }
    let mut b = Circuit::builder(width);
    b.provenance(format!("synth incmod M={modulus} width={width}"));
    let qubits: Vec<usize> = (0..width).collect();
    b.gate(incmod_gate(modulus, width), &qubits);
    Ok(finish(b.build(), width, vec![]))
}

/// Flip qubit 1 iff qubit 0 is in `|->`.
pub fn gadget_w_basis() -> SynthResult {
    let mut b = Circuit::builder(2);
    b.provenance("gadget w");
    b.h(0).cx(0, 1).h(0);
    finish(b.build(), 2, vec![])
}

/// `q2 := q0 OR q1` on basis states with `q2 = |0>`, leaving `q0, q1` intact.
pub fn gadget_or3() -> SynthResult {
    let mut b = Circuit::builder(3);
    b.provenance("gadget or3");
    b.x(0).x(1);
    emit_toffoli(&mut b, 0, 1, 2);
    b.x(2).x(0).x(1);
    finish(b.build(), 3, vec![])
}

/// Outcome of checking a synthesized circuit against its intended operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// Largest entrywise deviation on the data block.
    pub max_deviation: f64,
    /// Largest amplitude left on any ancilla-nonzero basis state.
    pub ancilla_leak: f64,
}

impl Verification {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation <= tol && self.ancilla_leak <= 1e-12
    }
}

/// The operator a synthesized circuit applies to its data qubits, from
/// every data basis input with ancillas clean, plus the ancilla leak.
pub fn effective_operator(result: &SynthResult) -> Result<(CMatrix, f64), sim::SimError> {
    let c = &result.circuit;
    let dim = 1usize << result.data_qubits;
    let mut m = CMatrix::zeros(dim, dim);
    let mut leak = 0.0f64;
    let program = sim::Program::new(c)?;
    for col in 0..dim {
        let report = program.run(StateVector::basis(c.num_qubits(), col))?;
        let state = report.final_state().expect("pure run");
        for (row, amp) in state.nonzero() {
            if row < dim {
                m[(row, col)] = amp;
            } else {
                leak = leak.max(amp.norm());
            }
        }
    }
    Ok((m, leak))
}

pub fn verify(result: &SynthResult, expected: &CMatrix) -> Result<Verification, sim::SimError> {
    let (m, ancilla_leak) = effective_operator(result)?;
    let max_deviation = if m.shape() == expected.shape() {
        crate::linalg::max_abs_diff(&m, expected)
    } else {
        f64::INFINITY
    };
    Ok(Verification {
        max_deviation,
        ancilla_leak,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::gate_stats;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn run_basis(r: &SynthResult, index: usize) -> StateVector {
        let report = sim::run(&r.circuit, StateVector::basis(r.circuit.num_qubits(), index)).unwrap();
        report.final_state().unwrap().clone()
    }

    fn basis_image(r: &SynthResult, index: usize) -> usize {
        let s = run_basis(r, index);
        let (i, a) = s.nonzero().max_by(|x, y| x.1.norm().total_cmp(&y.1.norm())).unwrap();
        assert!((a.norm() - 1.0).abs() < 1e-9);
        i
    }

    #[test]
    fn mcx_k0_is_x() {
        let r = synth_mcx(0, &[]).unwrap();
        assert_eq!(r.circuit.instructions().len(), 1);
        assert_eq!(basis_image(&r, 0), 1);
    }

    #[test]
    fn toffoli_truth_table() {
        let r = synth_mcx(2, &[true, true]).unwrap();
        for i in 0..8 {
            let expect = if i & 3 == 3 { i ^ 4 } else { i };
            assert_eq!(basis_image(&r, i), expect);
        }
    }

    #[test]
    fn w_gadget() {
        let r = gadget_w_basis();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let minus = StateVector::from_amplitudes(vec![c(s), c(-s), c(0.0), c(0.0)]).unwrap();
        let out = sim::run(&r.circuit, minus).unwrap();
        let st = out.final_state().unwrap();
        assert!((st.amplitude(2) - c(s)).norm() < 1e-12);
        assert!((st.amplitude(3) - c(-s)).norm() < 1e-12);
    }

    #[test]
    fn or3_truth_table() {
        let r = gadget_or3();
        assert_eq!(basis_image(&r, 0b000), 0b000);
        assert_eq!(basis_image(&r, 0b001), 0b101);
        assert_eq!(basis_image(&r, 0b010), 0b110);
        assert_eq!(basis_image(&r, 0b011), 0b111);
    }

    #[test]
    fn incmod_tail_is_fixed() {
        let r = synth_inc_mod(3, 2).unwrap();
        assert_eq!([0, 1, 2, 3].map(|i| basis_image(&r, i)), [1, 2, 0, 3]);
        assert!(synth_inc_mod(5, 2).is_err());
    }

    #[test]
    fn unsupported_gate() {
        let p = Gate::perm("p", vec![1, 0]);
        assert!(matches!(
            synth_controlled_gate(&p, 2),
            Err(SynthError::UnsupportedGate(_))
        ));
    }

    #[test]
    fn cost_bounds_hold() {
        for k in 0..=12 {
            let r = synth_mcx(k, &vec![true; k]).unwrap();
            assert!(
                gate_stats(&r.circuit).total_gates() <= MCX_COST.0 * k + MCX_COST.1,
                "k={k}"
            );
        }
        for n in 1..=8 {
            for k in 1..=8 {
                for mode in [ControlMode::And, ControlMode::Or] {
                    let r = synth_controlled_inc(n, k, mode).unwrap();
                    let g = gate_stats(&r.circuit).total_gates();
                    assert!(g <= CINC_COST.0 * (k + n * n) + CINC_COST.1, "n={n} k={k} g={g}");
                }
            }
        }
    }

    #[test]
    fn w_gadget_flips_on_minus() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = &gadget_w_basis().circuit;
        for (sign, flipped) in [(1.0, false), (-1.0, true)] {
            let amps = vec![
                Complex64::new(s, 0.0),
                Complex64::new(sign * s, 0.0),
                0.0.into(),
                0.0.into(),
            ];
            let out = crate::sim::run(c, StateVector::from_amplitudes(amps).unwrap()).unwrap();
            let state = out.final_state().unwrap();
            let base = if flipped { 2 } else { 0 };
            assert!((state.amplitude(base).re - s).abs() < 1e-12);
            assert!((state.amplitude(base + 1).re - sign * s).abs() < 1e-12);
        }
    }

    #[test]
    fn gadgets_match_reference() {
        assert!(verify(&gadget_w_basis(), &reference::w()).unwrap().passes(1e-12));
        assert!(verify(&gadget_or3(), &reference::or3()).unwrap().passes(1e-12));
        for g in [Gate::H, Gate::T, Gate::X] {
            for k in 1..=3 {
                let and = synth_controlled_gate(&g, k).unwrap();
                let v = verify(&and, &reference::controlled(&g, k, ControlMode::And)).unwrap();
                assert!(v.passes(1e-9), "and {} k={k}: {v:?}", g.kind());
                let or = synth_or_controlled_gate(&g, k).unwrap();
                let v = verify(&or, &reference::controlled(&g, k, ControlMode::Or)).unwrap();
                assert!(v.passes(1e-9), "or {} k={k}: {v:?}", g.kind());
            }
        }
    }

    proptest! {
        #[test]
        fn mcx_matches_reference(pols in proptest::collection::vec(any::<bool>(), 0..5)) {
            let k = pols.len();
            let r = synth_mcx(k, &pols).unwrap();
            let v = verify(&r, &reference::mcx(&pols)).unwrap();
            prop_assert!(v.passes(1e-9), "{v:?}");
        }

        #[test]
        fn controlled_inc_matches_reference(n in 1usize..4, k in 1usize..4, or in any::<bool>()) {
            let mode = if or { ControlMode::Or } else { ControlMode::And };
            let r = synth_controlled_inc(n, k, mode).unwrap();
            let v = verify(&r, &reference::controlled_inc(n, k, mode)).unwrap();
            prop_assert!(v.passes(1e-9), "{v:?}");
        }
    }
}
