use std::collections::BTreeMap;
use std::fmt;

use super::{Circuit, Gate, Instruction};

/// Exact instruction tallies.
///
/// Gate keys are the gate kind (`h`, `x`, `t`, `tdg`, `cx`, `u`, `perm`),
/// prefixed with `c<k>-` when the gate carries `k` controls.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateStats {
    pub gates: BTreeMap<String, usize>,
    pub postselects: usize,
    pub measures: usize,
    pub qubits: usize,
}

impl GateStats {
    pub fn count(&self, key: &str) -> usize {
        self.gates.get(key).copied().unwrap_or(0)
    }

    pub fn total_gates(&self) -> usize {
        self.gates.values().sum()
    }

    /// CNOTs, whether written as `cx` or as a singly controlled `x`.
    pub fn cnot_count(&self) -> usize {
        self.count("cx") + self.count("c1-x")
    }

    pub fn t_count(&self) -> usize {
        self.count("t") + self.count("tdg")
    }

    /// Largest number of controls on any single gate.
    pub fn max_controls(&self) -> usize {
        self.gates
            .keys()
            .filter_map(|k| k.strip_prefix('c')?.split_once('-')?.0.parse().ok())
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for GateStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.qubits)?;
        for (k, v) in &self.gates {
            writeln!(f, "gate {k} {v}")?;
        }
        writeln!(f, "cnot {}", self.cnot_count())?;
        writeln!(f, "tcount {}", self.t_count())?;
        writeln!(f, "postselects {}", self.postselects)?;
        write!(f, "measures {}", self.measures)
    }
}

pub fn gate_stats(circuit: &Circuit) -> GateStats {
    let mut stats = GateStats {
        qubits: circuit.num_qubits(),
        ..GateStats::default()
    };
    for instr in circuit.instructions() {
        match instr {
            Instruction::Apply(op) => {
                let kind = op.gate.kind();
                let key = match op.controls.len() {
                    0 => kind.to_string(),
                    k => format!("c{k}-{kind}"),
                };
                *stats.gates.entry(key).or_default() += 1;
                debug_assert!(!matches!(op.gate, Gate::Cx) || op.qubits.len() == 2);
            }
            Instruction::Postselect { .. } => stats.postselects += 1,
            Instruction::Measure { .. } => stats.measures += 1,
        }
    }
    stats
}
