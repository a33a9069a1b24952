//! Closed-form expectations for the pipeline's intermediate states and final
//! statistics, used to cross-check simulation.
//!
//! For acceptance probability `p` and step count `T`, stage `k` targets the
//! unnormalized qubit state
//!
//! ```text
//! |Ψ_k> = (1/2 + p)|0> + 2^(T-k) (1/2 - p)|1>
//! ```
//!
//! with `α_k = <+|Ψ_k>` and `β_k = <-|Ψ_k>`. When `p < 1/2` every `α_k`
//! dominates `β_k` and when `p > 1/2` the reverse holds; the decision
//! circuit amplifies that gap.

use crate::automaton::Dyadic;
use crate::sim::SimulationReport;

/// Gap constant: some stage has `max² > (1 + DELTA) · min²`.
pub const DELTA: f64 = 16.0 / 9.0;
/// Relative residual allowed when checking proportionality to `|Ψ_k>`.
pub const PROPORTIONALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("acceptance probability is exactly 1/2")]
    HalfProbability,
    #[error("stage {k} outside 0..={steps}")]
    StageOutOfRange { k: usize, steps: usize },
    #[error("the C=0 branch has no amplitude")]
    DegenerateBranch,
    #[error("the C=0 branch is not proportional to Psi_k (relative residual {residual:e})")]
    NotProportional { residual: f64 },
    #[error("report has no register `{0}`")]
    MissingRegister(String),
    #[error("report is not from a pure-state run")]
    MixedReport,
}

/// `|Ψ_k>` for one stage.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiK {
    pub k: usize,
    pub coeff0_exact: Dyadic,
    pub coeff1_exact: Dyadic,
    pub coeff0: f64,
    pub coeff1: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl PsiK {
    pub fn norm(&self) -> f64 {
        self.coeff0.hypot(self.coeff1)
    }
}

pub fn psi_k(p_a: &Dyadic, steps: usize, k: usize) -> Result<PsiK, OracleError> {
    if p_a.is_half() {
        return Err(OracleError::HalfProbability);
    }
    if k > steps {
        return Err(OracleError::StageOutOfRange { k, steps });
    }
    let half = Dyadic::half();
    let coeff0_exact = half.add(p_a);
    let coeff1_exact = half.sub(p_a).scale_pow2((steps - k) as i64);
    let (coeff0, coeff1) = (coeff0_exact.to_f64(), coeff1_exact.to_f64());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Ok(PsiK {
        k,
        coeff0_exact,
        coeff1_exact,
        coeff0,
        coeff1,
        alpha: (coeff0 + coeff1) * s,
        beta: (coeff0 - coeff1) * s,
    })
}

/// Every stage of one `(p_a, T)` instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub p_a: Dyadic,
    pub steps: usize,
    pub stages: Vec<PsiK>,
}

impl Spectrum {
    pub fn new(p_a: &Dyadic, steps: usize) -> Result<Spectrum, OracleError> {
        let stages = (0..=steps).map(|k| psi_k(p_a, steps, k)).collect::<Result<_, _>>()?;
        Ok(Spectrum {
            p_a: p_a.clone(),
            steps,
            stages,
        })
    }

    pub fn stage(&self, k: usize) -> &PsiK {
        &self.stages[k]
    }

    /// `Π_k α_k²`, the `U_+` all-zero amplitude without the `γ` factor.
    pub fn alpha_product(&self) -> f64 {
        self.stages.iter().map(|s| s.alpha * s.alpha).product()
    }

    pub fn beta_product(&self) -> f64 {
        self.stages.iter().map(|s| s.beta * s.beta).product()
    }

    /// A stage whose dominant component beats the other by the gap factor.
    pub fn gap_witness(&self) -> Option<usize> {
        self.stages.iter().position(|s| {
            let (a, b) = (s.alpha.abs(), s.beta.abs());
            a.min(b).powi(2) * (1.0 + DELTA) < a.max(b).powi(2)
        })
    }
}

fn log_abs_sum(values: impl Iterator<Item = f64>) -> f64 {
    values.map(|v| v.abs().ln()).sum()
}

/// `(P[W=0], P[W=1])` given postselection success, for `r` repetitions:
/// `A / (A + B)` and `B / (A + B)` with `A = Π α_k^{4r}`, `B = Π β_k^{4r}`,
/// evaluated in log space.
pub fn predicted_conditional_acceptance(p_a: &Dyadic, steps: usize, r: usize) -> Result<(f64, f64), OracleError> {
    let spectrum = Spectrum::new(p_a, steps)?;
    let scale = 4.0 * r as f64;
    let la = scale * log_abs_sum(spectrum.stages.iter().map(|s| s.alpha));
    let lb = scale * log_abs_sum(spectrum.stages.iter().map(|s| s.beta));
    let w0 = match (la == f64::NEG_INFINITY, lb == f64::NEG_INFINITY) {
        (false, true) => 1.0,
        (true, false) => 0.0,
        (true, true) => f64::NAN,
        (false, false) => 1.0 / (1.0 + (lb - la).exp()),
    };
    let w1 = match (la == f64::NEG_INFINITY, lb == f64::NEG_INFINITY) {
        (false, false) => 1.0 / (1.0 + (la - lb).exp()),
        _ => 1.0 - w0,
    };
    Ok((w0, w1))
}

/// `γ_k`: norm of the `C = 0` part of a `V_x` run on `|0>_R |0>_C |k>_K`,
/// relative to `‖Ψ_k‖`, after checking that part is `∝ |Ψ_k>|0...>|k>`.
/// How well the `K = k` output of a report fits `|Ψ_k>` on the flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageFit {
    /// Norm of the good branch over `‖Ψ_k‖`.
    pub gamma: f64,
    /// Distance from the closest multiple of `|Ψ_k>`, relative to the good
    /// branch norm.
    pub residual: f64,
}

/// Fit the good branch (`C = 0`, or everything when there is no `C`) of a
/// pure report to `λ |Ψ_k>_flag |0..>|k>_K`.
pub fn fit_stage(report: &SimulationReport, spectrum: &Spectrum, k: usize) -> Result<StageFit, OracleError> {
    if k > spectrum.steps {
        return Err(OracleError::StageOutOfRange {
            k,
            steps: spectrum.steps,
        });
    }
    let reg = |name: &str| {
        report
            .register(name)
            .cloned()
            .ok_or_else(|| OracleError::MissingRegister(name.to_string()))
    };
    let (r, kreg) = (reg("R")?, reg("K")?);
    let c = report.register("C").cloned();
    let state = report.final_state().ok_or(OracleError::MixedReport)?;
    let e0 = k << kreg.start;
    let e1 = e0 | 1 << r.start;
    let (v0, v1) = (state.amplitude(e0), state.amplitude(e1));
    let mut good = 0.0;
    let mut stray = 0.0;
    for (i, a) in state.nonzero() {
        if c.as_ref().is_none_or(|c| c.value(i) == 0) {
            good += a.norm_sqr();
            if i != e0 && i != e1 {
                stray += a.norm_sqr();
            }
        }
    }
    if good < 1e-300 {
        return Err(OracleError::DegenerateBranch);
    }
    let psi = spectrum.stage(k);
    let lambda = (v0 * psi.coeff0 + v1 * psi.coeff1) / (psi.coeff0.powi(2) + psi.coeff1.powi(2));
    let off = (v0 - lambda * psi.coeff0).norm_sqr() + (v1 - lambda * psi.coeff1).norm_sqr() + stray;
    Ok(StageFit {
        gamma: good.sqrt() / psi.norm(),
        residual: (off / good).sqrt(),
    })
}

/// `γ_k`, after checking the good branch is proportional to `|Ψ_k>`.
pub fn measure_gamma(report: &SimulationReport, spectrum: &Spectrum, k: usize) -> Result<f64, OracleError> {
    let fit = fit_stage(report, spectrum, k)?;
    if fit.residual > PROPORTIONALITY_TOL {
        return Err(OracleError::NotProportional { residual: fit.residual });
    }
    Ok(fit.gamma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_values_at_the_extremes() {
        let one = psi_k(&Dyadic::new(1, 0), 1, 1).unwrap();
        assert_eq!((one.coeff0, one.coeff1), (1.5, -0.5));
        assert!((one.alpha - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((one.beta - 2f64.sqrt()).abs() < 1e-12);

        let zero = psi_k(&Dyadic::new(0, 2), 2, 2).unwrap();
        assert_eq!((zero.coeff0, zero.coeff1), (0.5, 0.5));
        assert_eq!(zero.beta, 0.0);
    }

    #[test]
    fn three_eighths_stage_zero() {
        let p = psi_k(&Dyadic::new(3, 3), 3, 0).unwrap();
        assert_eq!((p.coeff0, p.coeff1), (0.875, 1.0));
        assert!((p.alpha - 1.32583).abs() < 1e-5);
        assert!((p.beta + 0.08839).abs() < 1e-5);
    }

    #[test]
    fn half_is_refused() {
        assert_eq!(psi_k(&Dyadic::new(2, 2), 2, 0), Err(OracleError::HalfProbability));
    }

    #[test]
    fn zero_beta_gives_certainty() {
        let (w0, w1) = predicted_conditional_acceptance(&Dyadic::new(0, 2), 2, 1).unwrap();
        assert_eq!((w0, w1), (1.0, 0.0));
    }

    #[test]
    fn parseval_and_dominance() {
        for steps in 1..=6 {
            for a in 0..=(1u64 << steps) {
                if a == 1 << (steps - 1) {
                    continue;
                }
                let p = Dyadic::new(a, steps as u32);
                let spectrum = Spectrum::new(&p, steps).unwrap();
                for s in &spectrum.stages {
                    let n2 = s.coeff0.powi(2) + s.coeff1.powi(2);
                    assert!((s.alpha.powi(2) + s.beta.powi(2) - n2).abs() <= 1e-12 * n2.max(1.0));
                    if p.to_f64() < 0.5 {
                        assert!(s.alpha > s.beta.abs());
                    } else {
                        assert!(s.beta.abs() > s.alpha.abs());
                    }
                }
                assert!(spectrum.gap_witness().is_some(), "no gap for {p}");
            }
        }
    }

    #[test]
    fn favoured_branch_grows_with_r() {
        let p = Dyadic::new(3, 3);
        let probs: Vec<f64> = (1..=6)
            .map(|r| predicted_conditional_acceptance(&p, 3, r).unwrap().0)
            .collect();
        assert!(probs[0] > 625.0 / 706.0);
        assert!(probs.windows(2).all(|w| w[1] >= w[0]));
    }
}
