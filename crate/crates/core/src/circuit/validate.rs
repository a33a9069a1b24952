use std::collections::HashMap;
use std::fmt;

use super::{Circuit, Gate, Instruction};

const UNITARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    QubitOutOfRange(usize),
    DuplicateQubit,
    ArityMismatch { expected: usize, found: usize },
    NonUnitaryOpaque(String),
    BadOpaqueShape(String),
    BadPermutation(String),
    ConflictingLabel(String),
    RegisterOutOfRange(String),
    RegisterOverlap(String, String),
    UncoveredQubit(usize),
    NonTerminalMarker,
}

/// A broken invariant, located at an instruction when it has one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub position: Option<usize>,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |f: &mut fmt::Formatter<'_>| match self.position {
            Some(p) => write!(f, " in instruction {p}"),
            None => Ok(()),
        };
        match &self.kind {
            ViolationKind::QubitOutOfRange(q) => write!(f, "qubit {q} out of range")?,
            ViolationKind::DuplicateQubit => write!(f, "duplicate qubit")?,
            ViolationKind::ArityMismatch { expected, found } => {
                write!(f, "gate expects {expected} qubits, got {found}")?
            }
            ViolationKind::NonUnitaryOpaque(label) => write!(f, "non-unitary opaque gate `{label}`")?,
            ViolationKind::BadOpaqueShape(label) => write!(f, "opaque gate `{label}` is not 2x2 or 4x4")?,
            ViolationKind::BadPermutation(label) => {
                write!(f, "permutation `{label}` is not a bijection on 2^w entries")?
            }
            ViolationKind::ConflictingLabel(label) => write!(f, "label `{label}` names two different gates")?,
            ViolationKind::RegisterOutOfRange(name) => write!(f, "register {name} out of range")?,
            ViolationKind::RegisterOverlap(a, b) => write!(f, "registers {a} and {b} overlap")?,
            ViolationKind::UncoveredQubit(q) => write!(f, "qubit {q} is in no register")?,
            ViolationKind::NonTerminalMarker => write!(f, "postselect or measure before the last gate")?,
        }
        at(f)
    }
}

/// Collect every invariant violation. An empty list means the circuit is valid.
pub fn validate(circuit: &Circuit) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = circuit.num_qubits();
    let mut push = |position: Option<usize>, kind| out.push(Violation { position, kind });

    let mut labels: HashMap<String, Gate> = HashMap::new();
    let last_gate = circuit
        .instructions()
        .iter()
        .rposition(|i| matches!(i, Instruction::Apply(_)));

    for (pos, instr) in circuit.instructions().iter().enumerate() {
        let at = Some(pos);
        let qubits = instr.qubits();
        for &q in &qubits {
            if q >= n {
                push(at, ViolationKind::QubitOutOfRange(q));
            }
        }
        let mut sorted = qubits.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            push(at, ViolationKind::DuplicateQubit);
        }
        match instr {
            Instruction::Apply(op) => {
                let expected = op.gate.arity();
                if op.qubits.len() != expected {
                    push(
                        at,
                        ViolationKind::ArityMismatch {
                            expected,
                            found: op.qubits.len(),
                        },
                    );
                }
                match &op.gate {
                    Gate::Unitary(u) => {
                        let dim = u.matrix.nrows();
                        if u.matrix.ncols() != dim || !(dim == 2 || dim == 4) {
                            push(at, ViolationKind::BadOpaqueShape(u.label.clone()));
                        } else if !op.gate.is_unitary(UNITARITY_TOL) {
                            push(at, ViolationKind::NonUnitaryOpaque(u.label.clone()));
                        }
                    }
                    Gate::Perm(p) if !p.is_bijection() => {
                        push(at, ViolationKind::BadPermutation(p.label.clone()));
                    }
                    _ => {}
                }
                if let Some(label) = op.gate.label() {
                    match labels.get(label) {
                        Some(previous) if previous != &op.gate => {
                            push(at, ViolationKind::ConflictingLabel(label.to_string()));
                        }
                        Some(_) => {}
                        None => {
                            labels.insert(label.to_string(), op.gate.clone());
                        }
                    }
                }
            }
            Instruction::Postselect { .. } | Instruction::Measure { .. } => {
                if circuit.is_terminal() && last_gate.is_some_and(|g| g > pos) {
                    push(at, ViolationKind::NonTerminalMarker);
                }
            }
        }
    }

    let regs = circuit.registers();
    for r in regs {
        if r.start + r.len > n || r.len == 0 {
            push(None, ViolationKind::RegisterOutOfRange(r.name.clone()));
        }
    }
    for (i, a) in regs.iter().enumerate() {
        for b in &regs[i + 1..] {
            if a.start < b.start + b.len && b.start < a.start + a.len {
                push(None, ViolationKind::RegisterOverlap(a.name.clone(), b.name.clone()));
            }
        }
    }
    if !regs.is_empty() {
        for q in 0..n {
            if !regs.iter().any(|r| r.contains(q)) {
                push(None, ViolationKind::UncoveredQubit(q));
            }
        }
    }
    out
}
