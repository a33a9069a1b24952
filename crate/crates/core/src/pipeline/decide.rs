use std::fmt;
use std::fmt::Write as _;

use super::{build_accumulator, build_qx, build_vx, wrap_dqc1, PipelineError, PipelineParams, RegisterLayout, Sign};
use crate::automaton::{Automaton, Dyadic};
use crate::circuit::{
    aggregate_postselections_onto, controlled_wrap, desugar_postselections, desugar_postselections_with, BasisRestore,
    Circuit, Control, PostTarget,
};
use crate::fmt_f64;
use crate::oracle::{measure_gamma, predicted_conditional_acceptance, Spectrum};
use crate::sim::{self, StateVector};

/// Label of the final measurement.
pub const W_LABEL: &str = "W";

/// `W = 0` selects `U_+^r`, `W = 1` selects `U_-^r`; postselecting `D = 0`
/// leaves `W` biased towards the branch whose amplitude product dominates.
pub fn build_final(
    uplus: &Circuit,
    uminus: &Circuit,
    layout: &RegisterLayout,
    r: usize,
) -> Result<Circuit, PipelineError> {
    let width = layout.accumulator_width();
    if uplus.num_qubits() != width || uminus.num_qubits() != width || uplus.registers() != uminus.registers() {
        return Err(PipelineError::LayoutMismatch);
    }
    let w = layout.w();
    let widen = |u: &Circuit| {
        let mut b = u.repeat(r).to_builder();
        b.add_qubits(1);
        b.register("W", w, 1);
        b.build()
    };
    let plus = controlled_wrap(&widen(uplus), &[Control::off(w)])?;
    let minus = controlled_wrap(&widen(uminus), &[Control::on(w)])?;

    let mut b = widen(&Circuit::builder(width).build()).to_builder();
    for reg in uplus.registers() {
        b.register(reg.name.clone(), reg.start, reg.len);
    }
    b.provenance(format!(
        "final r={r} of {}",
        uplus.provenance().trim_start_matches("U+ of ")
    ));
    b.h(w).append(&plus).append(&minus);
    for d in layout.d().qubits() {
        b.postselect(d, PostTarget::Zero);
    }
    let desugared = desugar_postselections(&b.build());
    // q1 is clean after every accumulator step
    let mut b = aggregate_postselections_onto(&desugared, layout.s().start)?.to_builder();
    b.measure(w, W_LABEL).terminal(true);
    Ok(b.build())
}

/// Every circuit of the pipeline for one automaton.
#[derive(Debug, Clone)]
pub struct BuildArtifacts {
    pub params: PipelineParams,
    pub p_a: Dyadic,
    pub spectrum: Spectrum,
    pub qx: Circuit,
    /// `Q_x` with every postselection rewritten onto `|1>`.
    pub qx_desugared: Circuit,
    pub vx: Circuit,
    pub uplus: Circuit,
    pub uminus: Circuit,
    pub final_circuit: Circuit,
}

pub fn build_all(params: &PipelineParams) -> Result<BuildArtifacts, PipelineError> {
    let aut = &params.automaton;
    let layout = &params.layout;
    let p_a = aut.accept_probability()?;
    let spectrum = Spectrum::new(&p_a, aut.steps)?;
    let qx = build_qx(aut, layout)?;
    // restore every rotated qubit so reused qubits see the original state
    let qx_desugared = desugar_postselections_with(&qx, BasisRestore::Always);
    let vx = build_vx(&qx_desugared, layout)?;
    let uplus = build_accumulator(&vx, layout, Sign::Plus)?;
    let uminus = build_accumulator(&vx, layout, Sign::Minus)?;
    let final_circuit = build_final(&uplus, &uminus, layout, params.r)?;
    Ok(BuildArtifacts {
        params: params.clone(),
        p_a,
        spectrum,
        qx,
        qx_desugared,
        vx,
        uplus,
        uminus,
        final_circuit,
    })
}

/// `γ_k` for every stage, from `V_x` runs on `|0>_R |0>_C |k>_K`.
pub fn measure_gammas(artifacts: &BuildArtifacts) -> Result<Vec<f64>, PipelineError> {
    let layout = &artifacts.params.layout;
    (0..=layout.steps)
        .map(|k| {
            let input = StateVector::basis(layout.vx_width(), k << layout.k().start);
            let report = sim::run(&artifacts.vx, input)?;
            Ok(measure_gamma(&report, &artifacts.spectrum, k)?)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Accept,
    Reject,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecideOptions {
    pub r: usize,
    /// Run the one-clean-qubit wrapping on a maximally mixed input.
    pub dqc1: bool,
    pub c_width: Option<usize>,
}

impl DecideOptions {
    pub fn new(r: usize) -> DecideOptions {
        DecideOptions {
            r,
            dqc1: false,
            c_width: None,
        }
    }
}

/// Simulated outcome of the final circuit next to the exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionReport {
    pub verdict: Verdict,
    pub truth: Verdict,
    pub p_a: Dyadic,
    pub r: usize,
    pub p_post: f64,
    /// `P[W = 0 | post]`, `P[W = 1 | post]`.
    pub w: (f64, f64),
    pub predicted: (f64, f64),
    /// Conditional probability of the outcome matching the truth.
    pub p_correct: f64,
    /// Completeness threshold `c = 1 - 2^-r`.
    pub bound: f64,
    /// Soundness threshold `d = 2^-r`.
    pub soundness: f64,
    pub qubits: usize,
    pub dqc1: bool,
}

impl DecisionReport {
    pub fn correct(&self) -> bool {
        self.verdict == self.truth
    }

    pub fn bound_satisfied(&self) -> bool {
        self.p_correct > self.bound
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "verdict {}", self.verdict).unwrap();
        writeln!(out, "p_a {}", self.p_a).unwrap();
        writeln!(out, "p_post {}", fmt_f64(self.p_post)).unwrap();
        writeln!(out, "p_correct {}", fmt_f64(self.p_correct)).unwrap();
        writeln!(out, "bound {}", fmt_f64(self.bound)).unwrap();
        writeln!(out, "truth {}", self.truth).unwrap();
        writeln!(out, "cond W {} {}", fmt_f64(self.w.0), fmt_f64(self.w.1)).unwrap();
        writeln!(
            out,
            "predicted W {} {}",
            fmt_f64(self.predicted.0),
            fmt_f64(self.predicted.1)
        )
        .unwrap();
        writeln!(out, "bound_ok {}", self.bound_satisfied()).unwrap();
        writeln!(out, "qubits {}", self.qubits).unwrap();
        out
    }
}

pub fn decide(aut: &Automaton, r: usize) -> Result<DecisionReport, PipelineError> {
    decide_with(aut, DecideOptions::new(r))
}

pub fn decide_with(aut: &Automaton, options: DecideOptions) -> Result<DecisionReport, PipelineError> {
    let params = PipelineParams::with_counter_width(aut.clone(), options.r, options.c_width)?;
    let artifacts = build_all(&params)?;
    let layout = &params.layout;
    let circuit = &artifacts.final_circuit;
    let report = if options.dqc1 {
        let wrapped = wrap_dqc1(circuit, Some(layout.s().start), layout.w())?;
        sim::run_dqc1_mixed(&wrapped, circuit.num_qubits())?
    } else {
        sim::run(circuit, StateVector::zero(circuit.num_qubits()))?
    };
    let w = report.outcome(W_LABEL).expect("final circuit measures W");
    let truth = if artifacts.p_a.cmp_value(&Dyadic::half()).is_gt() {
        Verdict::Accept
    } else {
        Verdict::Reject
    };
    let verdict = if w.p1 > w.p0 { Verdict::Accept } else { Verdict::Reject };
    let p_correct = match truth {
        Verdict::Accept => w.p1,
        Verdict::Reject => w.p0,
    };
    let soundness = (-(options.r as f64)).exp2();
    Ok(DecisionReport {
        verdict,
        truth,
        predicted: predicted_conditional_acceptance(&artifacts.p_a, aut.steps, options.r)?,
        p_a: artifacts.p_a,
        r: options.r,
        p_post: report.p_post(),
        w: (w.p0, w.p1),
        p_correct,
        bound: 1.0 - soundness,
        soundness,
        qubits: report.num_qubits(),
        dqc1: options.dqc1,
    })
}
