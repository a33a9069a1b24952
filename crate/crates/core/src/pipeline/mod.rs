//! From automaton to decision circuit.
//!
//! The stages, each a plain [`Circuit`]:
//!
//! 1. [`build_qx`]: prepares `|Ψ_k>` on the flag qubit, conditioned on
//!    intermediate postselections.
//! 2. [`build_vx`]: the same circuit made unitary, each postselection
//!    replaced by a controlled increment of a failure counter `C`.
//! 3. [`build_accumulator`]: `U_+` / `U_-`, whose all-zero amplitude is
//!    `γ Π_k α_k²` / `γ Π_k β_k²`.
//! 4. [`build_final`]: a control qubit `W` chooses between `U_+^r` and
//!    `U_-^r`; postselecting the step counter `D` on zero and measuring `W`
//!    reveals which of `α` or `β` dominates, i.e. whether `p_a > 1/2`.
//!
//! [`wrap_dqc1`] then turns the final circuit into one that works with a
//! single clean qubit.

mod accumulator;
mod decide;
mod dqc1;
mod qx;
mod vx;

use crate::automaton::{Automaton, AutomatonError};
use crate::circuit::{CircuitError, Register};
use crate::oracle::OracleError;
use crate::sim::SimError;

pub use accumulator::{build_accumulator, Sign};
pub use decide::{
    build_all, build_final, decide, decide_with, measure_gammas, BuildArtifacts, DecideOptions, DecisionReport, Verdict,
};
pub use dqc1::{bell_mixed_prep, wrap_dqc1};
pub use qx::{block_encode_2x2, build_qx, combiner_matrix};
pub use vx::build_vx;

pub const MAX_REPETITIONS: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("acceptance probability is exactly 1/2")]
    HalfProbability,
    #[error("counter of {width} qubits cannot hold {postselects} postselections (need {needed})")]
    CounterTooSmall {
        width: usize,
        postselects: usize,
        needed: usize,
    },
    #[error("layout does not fit the automaton: {0}")]
    LayoutTooSmall(String),
    #[error("cannot block-encode the zero matrix")]
    ZeroMatrix,
    #[error("accumulators are built on different layouts")]
    LayoutMismatch,
    #[error("postselect or measure is not terminal: {0}")]
    NonTerminalMarkers(String),
    #[error("repetition count {0} outside 1..={MAX_REPETITIONS}")]
    BadRepetitions(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Automaton(AutomatonError),
}

impl From<AutomatonError> for PipelineError {
    fn from(e: AutomatonError) -> PipelineError {
        match e {
            AutomatonError::HalfProbability => PipelineError::HalfProbability,
            other => PipelineError::Automaton(other),
        }
    }
}

/// Smallest `n` with `2^n - 1 >= count`.
fn bits_to_count(count: usize) -> usize {
    (usize::BITS - count.leading_zeros()) as usize
}

/// Register widths. Qubits are laid out in this order:
///
/// | register | width | role |
/// |---|---|---|
/// | `R` | `m + 1` | flag (bit 0), config bits, coin / block-encoding ancilla |
/// | `K` | `⌈log2(T+1)⌉` | stage index `k` |
/// | `C` | `c_width` | failed-postselection counter |
/// | `D` | `d_width` | rejection counter of the accumulators |
/// | `S` | 3 | scratch for the increment conditions |
/// | `W` | 1 | branch selector of the final circuit |
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterLayout {
    pub m: usize,
    pub steps: usize,
    pub k_width: usize,
    pub c_width: usize,
    pub d_width: usize,
}

impl RegisterLayout {
    /// Widths for `aut` at `r` repetitions. `c_width` overrides the
    /// automatic counter width but must still exceed the postselect count.
    pub fn new(aut: &Automaton, r: usize, c_width: Option<usize>) -> Result<RegisterLayout, PipelineError> {
        if r == 0 || r > MAX_REPETITIONS {
            return Err(PipelineError::BadRepetitions(r));
        }
        let postselects = aut.steps + aut.m;
        // strict: 2^N - 1 > P
        let needed = bits_to_count(postselects + 1);
        let c_width = c_width.unwrap_or(needed);
        if c_width < needed {
            return Err(PipelineError::CounterTooSmall {
                width: c_width,
                postselects,
                needed,
            });
        }
        Ok(RegisterLayout {
            m: aut.m,
            steps: aut.steps,
            k_width: bits_to_count(aut.steps).max(1),
            c_width,
            // each loop pass increments D at most twice and it must never wrap
            d_width: bits_to_count(2 * (aut.steps + 1) * r),
        })
    }

    /// `ℓ`, the width of `R`.
    pub fn r_width(&self) -> usize {
        self.m + 1
    }

    pub fn flag(&self) -> usize {
        0
    }

    pub fn coin(&self) -> usize {
        self.m
    }

    pub fn r(&self) -> Register {
        Register::new("R", 0, self.r_width())
    }

    pub fn k(&self) -> Register {
        Register::new("K", self.r_width(), self.k_width)
    }

    pub fn c(&self) -> Register {
        Register::new("C", self.k().start + self.k_width, self.c_width)
    }

    pub fn d(&self) -> Register {
        Register::new("D", self.c().start + self.c_width, self.d_width)
    }

    pub fn s(&self) -> Register {
        Register::new("S", self.d().start + self.d_width, 3)
    }

    pub fn w(&self) -> usize {
        self.s().start + 3
    }

    pub fn qx_width(&self) -> usize {
        self.c().start
    }

    pub fn vx_width(&self) -> usize {
        self.d().start
    }

    pub fn accumulator_width(&self) -> usize {
        self.w()
    }

    pub fn final_width(&self) -> usize {
        self.w() + 1
    }

    /// Postselections in the reference `Q_x`: one per coin round, one per
    /// collapsed config bit, one for the combiner ancilla.
    pub fn postselect_count(&self) -> usize {
        self.steps + self.m
    }
}

/// Everything needed to build the pipeline for one automaton.
#[derive(Debug, Clone)]
pub struct PipelineParams {
    pub automaton: Automaton,
    pub r: usize,
    pub layout: RegisterLayout,
}

impl PipelineParams {
    pub fn new(automaton: Automaton, r: usize) -> Result<PipelineParams, PipelineError> {
        PipelineParams::with_counter_width(automaton, r, None)
    }

    pub fn with_counter_width(
        automaton: Automaton,
        r: usize,
        c_width: Option<usize>,
    ) -> Result<PipelineParams, PipelineError> {
        automaton.validate()?;
        let layout = RegisterLayout::new(&automaton, r, c_width)?;
        Ok(PipelineParams { automaton, r, layout })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::sim::StateVector;

    #[test]
    fn counter_widths() {
        assert_eq!(bits_to_count(0), 0);
        assert_eq!(bits_to_count(1), 1);
        assert_eq!(bits_to_count(3), 2);
        assert_eq!(bits_to_count(4), 3);
        let a38 = Automaton::new(2, 3, 0, vec![1, 2, 0, 3], vec![0, 1, 2, 3]).unwrap();
        let l = RegisterLayout::new(&a38, 1, None).unwrap();
        // 5 postselections need 2^3 - 1 = 7 > 5
        assert_eq!((l.k_width, l.c_width, l.d_width), (2, 3, 4));
        assert_eq!(l.final_width(), 16);
        assert!(matches!(
            RegisterLayout::new(&a38, 1, Some(2)),
            Err(PipelineError::CounterTooSmall { needed: 3, .. })
        ));
    }

    fn a38() -> Automaton {
        Automaton::new(2, 3, 0, vec![1, 2, 0, 3], vec![0, 1, 2, 3]).unwrap()
    }

    fn run_on_stage(c: &Circuit, layout: &RegisterLayout, k: usize) -> crate::sim::SimulationReport {
        crate::sim::run(c, StateVector::basis(c.num_qubits(), k << layout.k().start)).unwrap()
    }

    #[test]
    fn a38_qx_prepares_every_stage() {
        let params = PipelineParams::new(a38(), 1).unwrap();
        let art = build_all(&params).unwrap();
        assert_eq!(art.qx.postselect_count(), 5);
        for k in 0..=3 {
            let report = run_on_stage(&art.qx, &params.layout, k);
            let fit = crate::oracle::fit_stage(&report, &art.spectrum, k).unwrap();
            assert!(fit.residual < 1e-9, "k={k}: {fit:?}");
            let report = run_on_stage(&art.qx_desugared, &params.layout, k);
            assert!(crate::oracle::fit_stage(&report, &art.spectrum, k).unwrap().residual < 1e-9);
        }
    }

    #[test]
    fn a38_vx_keeps_the_postselected_branch_at_zero_count() {
        let params = PipelineParams::new(a38(), 1).unwrap();
        let art = build_all(&params).unwrap();
        let low = 1usize << params.layout.qx_width();
        for k in 0..=3 {
            let q = run_on_stage(&art.qx_desugared, &params.layout, k)
                .final_state()
                .unwrap()
                .clone();
            let v = run_on_stage(&art.vx, &params.layout, k).final_state().unwrap().clone();
            for i in 0..low {
                assert!((q.amplitude(i) - v.amplitude(i)).norm() < 1e-12);
            }
        }
        let gammas = measure_gammas(&art).unwrap();
        assert!(gammas.iter().all(|&g| g > 0.0 && g <= 1.0));
    }

    #[test]
    fn a38_accumulators_follow_the_product_law() {
        let params = PipelineParams::new(a38(), 1).unwrap();
        let art = build_all(&params).unwrap();
        let gamma: f64 = measure_gammas(&art).unwrap().iter().map(|g| g * g).product();
        let (alpha, beta) = (art.spectrum.alpha_product(), art.spectrum.beta_product());
        for (u, prod) in [(&art.uplus, alpha), (&art.uminus, beta)] {
            let out = crate::sim::run(u, StateVector::zero(u.num_qubits())).unwrap();
            let a = out.final_state().unwrap().amplitude(0);
            assert!(
                (a.re - gamma * prod).abs() < 1e-9 && a.im.abs() < 1e-9,
                "{a} vs {}",
                gamma * prod
            );
        }
    }

    #[test]
    fn a38_final_circuit_rejects() {
        let rep = decide(&a38(), 1).unwrap();
        assert_eq!((rep.verdict, rep.truth), (Verdict::Reject, Verdict::Reject));
        assert!(rep.p_post > 0.0);
        assert!(rep.w.0 > 625.0 / 706.0);
        assert!((rep.w.0 - rep.predicted.0).abs() < 1e-9);

        let flipped = decide(&a38().flag_complement(), 1).unwrap();
        assert_eq!(flipped.verdict, Verdict::Accept);
        assert!(flipped.w.1 > 625.0 / 706.0);
    }

    #[test]
    fn dqc1_wrapping_scales_only_p_post() {
        let pure = decide(&a38(), 1).unwrap();
        let mixed = decide_with(
            &a38(),
            DecideOptions {
                dqc1: true,
                ..DecideOptions::new(1)
            },
        )
        .unwrap();
        assert_eq!(mixed.verdict, pure.verdict);
        assert!((mixed.w.0 - pure.w.0).abs() < 1e-9);
        let m = pure.qubits as i32;
        assert!((mixed.p_post / pure.p_post - (-m as f64).exp2()).abs() < 1e-9);
    }

    #[test]
    fn wrap_rejects_gates_after_markers() {
        let mut b = Circuit::builder(2);
        b.measure(0, "o").x(1);
        assert!(matches!(
            wrap_dqc1(&b.build(), None, 0),
            Err(PipelineError::NonTerminalMarkers(_))
        ));
    }
}
