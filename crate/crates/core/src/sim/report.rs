use std::fmt::Write as _;

use crate::circuit::Register;
use crate::fmt_f64;

use super::StateVector;

/// Conditional distribution of one measured qubit, given postselection success.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub qubit: usize,
    pub p0: f64,
    pub p1: f64,
}

/// Statistics of a finished run: a weighted ensemble of surviving
/// unnormalized branches (one branch for a pure-state run).
#[derive(Debug, Clone)]
pub struct SimulationReport {
    num_qubits: usize,
    registers: Vec<Register>,
    measures: Vec<(String, usize)>,
    branches: Vec<(f64, StateVector)>,
    p_post: f64,
}

impl SimulationReport {
    pub(crate) fn new(
        num_qubits: usize,
        registers: Vec<Register>,
        measures: Vec<(String, usize)>,
        branches: Vec<(f64, StateVector)>,
    ) -> SimulationReport {
        let p_post = branches.iter().map(|(w, s)| w * s.norm_sqr()).sum();
        SimulationReport {
            num_qubits,
            registers,
            measures,
            branches,
            p_post,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    /// Probability that every postselection succeeded.
    pub fn p_post(&self) -> f64 {
        self.p_post
    }

    /// Final unnormalized state of a pure-state run.
    pub fn final_state(&self) -> Option<&StateVector> {
        match self.branches.as_slice() {
            [(_, s)] => Some(s),
            _ => None,
        }
    }

    /// Surviving branches with their ensemble weights.
    pub fn branches(&self) -> &[(f64, StateVector)] {
        &self.branches
    }

    /// Weighted unnormalized mass on basis states satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(usize) -> bool + Copy) -> f64 {
        self.branches.iter().map(|(w, s)| w * s.mass_where(pred)).sum()
    }

    /// Unnormalized mass with register `name` holding a nonzero value.
    pub fn register_nonzero_mass(&self, name: &str) -> Option<f64> {
        let reg = self.registers.iter().find(|r| r.name == name)?.clone();
        Some(self.mass_where(|i| reg.value(i) != 0))
    }

    pub fn outcome_of_qubit(&self, qubit: usize) -> Outcome {
        let bit = 1usize << qubit;
        let (p0, p1) = if self.p_post > 0.0 {
            (
                self.mass_where(|i| i & bit == 0) / self.p_post,
                self.mass_where(|i| i & bit != 0) / self.p_post,
            )
        } else {
            (f64::NAN, f64::NAN)
        };
        Outcome { qubit, p0, p1 }
    }

    pub fn outcome(&self, label: &str) -> Option<Outcome> {
        let (_, q) = self.measures.iter().find(|(l, _)| l == label)?;
        Some(self.outcome_of_qubit(*q))
    }

    /// Outcomes for each measure label in circuit order.
    pub fn outcomes(&self) -> Vec<(String, Outcome)> {
        self.measures
            .iter()
            .map(|(l, q)| (l.clone(), self.outcome_of_qubit(*q)))
            .collect()
    }

    /// Conditional distribution of the value spelled by `qubits`
    /// (bit `i` of the value is `qubits[i]`).
    pub fn distribution(&self, qubits: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; 1 << qubits.len()];
        for (w, s) in &self.branches {
            for (i, a) in s.nonzero() {
                let v = qubits
                    .iter()
                    .enumerate()
                    .fold(0, |acc, (k, &q)| acc | (i >> q & 1) << k);
                out[v] += w * a.norm_sqr();
            }
        }
        if self.p_post > 0.0 {
            out.iter_mut().for_each(|p| *p /= self.p_post);
        }
        out
    }

    /// `p_post`, one `cond` line per measure, one `mass` line per register.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "p_post {}", fmt_f64(self.p_post)).unwrap();
        for (label, o) in self.outcomes() {
            writeln!(out, "cond {label} {} {}", fmt_f64(o.p0), fmt_f64(o.p1)).unwrap();
        }
        for r in &self.registers {
            let m = self.mass_where(|i| r.value(i) != 0);
            writeln!(out, "mass {}!=0 {}", r.name, fmt_f64(m)).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use crate::circuit::{Circuit, PostTarget};
    use crate::sim::{run, StateVector};

    #[test]
    fn text_lines() {
        let mut b = Circuit::builder(2);
        b.register("A", 0, 1).register("B", 1, 1);
        b.h(0).cx(0, 1).measure(1, "out");
        let r = run(&b.build(), StateVector::zero(2)).unwrap();
        let text = r.to_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p_post 1");
        assert!(lines[1].starts_with("cond out 0.5"));
        assert!(lines[2].starts_with("mass A!=0 0.5"));
    }

    #[test]
    fn conditionals_sum_to_one() {
        let mut b = Circuit::builder(3);
        b.h(0)
            .h(1)
            .t(1)
            .h(1)
            .cx(1, 2)
            .postselect(0, PostTarget::Plus)
            .measure(2, "m");
        let r = run(&b.build(), StateVector::zero(3)).unwrap();
        let o = r.outcome("m").unwrap();
        assert!((o.p0 + o.p1 - 1.0).abs() < 1e-9);
        let d = r.distribution(&[1, 2]);
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
