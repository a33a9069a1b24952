//! One-clean-qubit input: `|0><0|` on the clean qubit, maximally mixed elsewhere.

use rayon::prelude::*;

use crate::circuit::{Circuit, Instruction, Op, PostTarget};

use super::kernel::{self, Kernel};
use super::{check_circuit, measures, SimError, SimulationReport, StateVector, MAX_QUBITS, SETTLE_EVERY, ZERO_OVERLAP};

enum Step {
    Gate(Kernel),
    Post(usize, PostTarget),
}

/// Reorder so each postselect sits right after the last gate touching its
/// qubit. Projectors commute with every later gate on other qubits, so the
/// final state is unchanged, and branches that die are dropped early.
fn hoisted(circuit: &Circuit) -> Vec<&Instruction> {
    let instrs = circuit.instructions();
    let mut last_touch = vec![None::<usize>; circuit.num_qubits()];
    let mut keyed: Vec<((Option<usize>, usize), &Instruction)> = Vec::with_capacity(instrs.len());
    for (pos, instr) in instrs.iter().enumerate() {
        let key = match instr {
            Instruction::Apply(op) => {
                for q in op.support() {
                    last_touch[q] = Some(pos);
                }
                (Some(pos), 0)
            }
            Instruction::Postselect { qubit, .. } => (last_touch[*qubit], pos + 1),
            Instruction::Measure { .. } => (Some(pos), 0),
        };
        keyed.push((key, instr));
    }
    // None (no gate yet) sorts first
    keyed.sort_by_key(|(k, _)| *k);
    keyed.into_iter().map(|(_, i)| i).collect()
}

fn compile(circuit: &Circuit) -> Vec<Step> {
    let n = circuit.num_qubits();
    let mut steps = Vec::new();
    let mut pending = Vec::new();
    let flush = |pending: &mut Vec<&Op>, steps: &mut Vec<Step>| {
        steps.extend(
            kernel::compile(pending.drain(..), n, SETTLE_EVERY as usize)
                .into_iter()
                .map(Step::Gate),
        );
    };
    for instr in hoisted(circuit) {
        match instr {
            Instruction::Apply(op) => pending.push(op),
            Instruction::Postselect { qubit, target } => {
                flush(&mut pending, &mut steps);
                steps.push(Step::Post(*qubit, *target));
            }
            Instruction::Measure { .. } => {}
        }
    }
    flush(&mut pending, &mut steps);
    steps
}

fn run_branch(steps: &[Step], n: usize, index: usize) -> Option<StateVector> {
    let mut s = StateVector::basis(n, index);
    for step in steps {
        match step {
            Step::Gate(k) => s.apply_kernel(k),
            Step::Post(q, t) => {
                if s.postselect(*q, *t) < ZERO_OVERLAP {
                    return None;
                }
            }
        }
    }
    Some(s)
}

/// Run `circuit` on `|0><0|_clean ⊗ (I/2)^{⊗m}` by enumerating the `2^m`
/// basis inputs of the other qubits with weight `2^{-m}` each.
pub fn run_dqc1_mixed(circuit: &Circuit, clean: usize) -> Result<SimulationReport, SimError> {
    check_circuit(circuit)?;
    let n = circuit.num_qubits();
    if clean >= n {
        return Err(SimError::WidthMismatch {
            circuit: n,
            state: clean + 1,
        });
    }
    let m = n - 1;
    if m > MAX_QUBITS {
        return Err(SimError::TooWide {
            qubits: m,
            max: MAX_QUBITS,
        });
    }
    let steps = compile(circuit);
    let low = (1usize << clean) - 1;
    let weight = (-(m as f64)).exp2();
    let branches: Vec<(f64, StateVector)> = (0..1usize << m)
        .into_par_iter()
        .filter_map(|b| {
            let index = (b & low) | ((b & !low) << 1);
            run_branch(&steps, n, index).map(|s| (weight, s))
        })
        .collect();
    if branches.is_empty() {
        let position = circuit
            .instructions()
            .iter()
            .position(|i| matches!(i, Instruction::Postselect { .. }))
            .unwrap_or(0);
        return Err(SimError::ZeroOverlap { position });
    }
    Ok(SimulationReport::new(
        n,
        circuit.registers().to_vec(),
        measures(circuit),
        branches,
    ))
}
