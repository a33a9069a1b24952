//! Structural rewrites shared by the circuit builders.

use super::{Circuit, CircuitBuilder, CircuitError, Control, Gate, Instruction, PostTarget};

/// When [`desugar_postselections_with`] undoes the basis change after a
/// rewritten postselection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRestore {
    /// Leave the qubit in the rotated basis (the state differs from the
    /// original by the basis change on that qubit).
    Never,
    /// Restore only if a later instruction touches the qubit.
    WhenReused,
    /// Always restore, so the output state equals the original exactly.
    Always,
}

fn basis_change(target: PostTarget) -> &'static [Gate] {
    match target {
        PostTarget::One => &[],
        PostTarget::Zero => &[Gate::X],
        // H|+> = |0>, then X
        PostTarget::Plus => &[Gate::H, Gate::X],
        PostTarget::Minus => &[Gate::H],
    }
}

/// Rewrite every postselection onto target `|1>` with
/// [`BasisRestore::WhenReused`].
pub fn desugar_postselections(circuit: &Circuit) -> Circuit {
    desugar_postselections_with(circuit, BasisRestore::WhenReused)
}

pub fn desugar_postselections_with(circuit: &Circuit, restore: BasisRestore) -> Circuit {
    let instrs = circuit.instructions();
    let mut b = circuit.to_builder();
    b.circuit.instructions.clear();
    for (pos, instr) in instrs.iter().enumerate() {
        match instr {
            Instruction::Postselect { qubit, target } if *target != PostTarget::One => {
                let q = *qubit;
                let prefix = basis_change(*target);
                for g in prefix {
                    b.gate(g.clone(), &[q]);
                }
                b.postselect(q, PostTarget::One);
                let undo = match restore {
                    BasisRestore::Never => false,
                    BasisRestore::Always => true,
                    BasisRestore::WhenReused => instrs[pos + 1..].iter().any(|later| later.qubits().contains(&q)),
                };
                if undo {
                    for g in prefix.iter().rev() {
                        b.gate(g.inverse(), &[q]);
                    }
                }
            }
            other => {
                b.push(other.clone());
            }
        }
    }
    b.build()
}

fn grow(b: &mut CircuitBuilder, width: usize, name: &str) {
    let n = b.num_qubits();
    if width > n {
        let start = b.add_qubits(width - n);
        if !b.circuit.registers.is_empty() {
            b.register(name, start, width - n);
        }
    }
}

/// Replace the terminal `|1>` postselections by a single postselection on a
/// fresh ancilla that holds their AND.
pub fn aggregate_postselections(circuit: &Circuit) -> Result<Circuit, CircuitError> {
    let mut b = circuit.to_builder();
    let ancilla = b.num_qubits();
    grow(&mut b, ancilla + 1, "P");
    aggregate_postselections_onto(&b.build(), ancilla)
}

/// Same as [`aggregate_postselections`], reusing `ancilla`, which must be in
/// `|0>` after the last gate of `circuit`.
pub fn aggregate_postselections_onto(circuit: &Circuit, ancilla: usize) -> Result<Circuit, CircuitError> {
    let instrs = circuit.instructions();
    let mut posts = Vec::new();
    for (pos, instr) in instrs.iter().enumerate() {
        if let Instruction::Postselect { qubit, target } = instr {
            if *target != PostTarget::One {
                return Err(CircuitError::UndesugaredPostselect {
                    position: pos,
                    qubit: *qubit,
                    target: *target,
                });
            }
            let reused = instrs[pos + 1..].iter().any(|later| match later {
                Instruction::Apply(op) => op.support().any(|q| q == *qubit),
                _ => false,
            });
            if reused {
                return Err(CircuitError::NonTerminalPostselect {
                    position: pos,
                    qubit: *qubit,
                });
            }
            posts.push(*qubit);
        }
    }
    if posts.is_empty() {
        return Err(CircuitError::NothingToAggregate);
    }

    let last_gate = instrs.iter().rposition(|i| !i.is_marker());
    let mut b = circuit.to_builder();
    grow(&mut b, ancilla + 1, "P");
    b.circuit.instructions.clear();
    let controls: Vec<Control> = posts.iter().map(|&q| Control::on(q)).collect();
    let mut inserted = false;
    let insert = |b: &mut CircuitBuilder| {
        b.mcx(&controls, ancilla).postselect(ancilla, PostTarget::One);
    };
    if last_gate.is_none() {
        insert(&mut b);
        inserted = true;
    }
    for (pos, instr) in instrs.iter().enumerate() {
        if !matches!(instr, Instruction::Postselect { .. }) {
            b.push(instr.clone());
        }
        if !inserted && Some(pos) == last_gate {
            insert(&mut b);
            inserted = true;
        }
    }
    Ok(b.build())
}

fn check_wrappable(circuit: &Circuit, controls: &[Control]) -> Result<(), CircuitError> {
    if !circuit.is_unitary() {
        return Err(CircuitError::NonUnitaryInput);
    }
    for op in circuit.ops() {
        if let Some(c) = controls.iter().find(|c| op.support().any(|q| q == c.qubit)) {
            return Err(CircuitError::ControlOverlap { qubit: c.qubit });
        }
    }
    Ok(())
}

/// Make every gate conditional on `controls`.
///
/// One control is attached to each gate directly. Several controls are first
/// folded onto a fresh ancilla with a multi-controlled `X`, each gate is
/// controlled by that ancilla, and the fold is undone at the end.
pub fn controlled_wrap(circuit: &Circuit, controls: &[Control]) -> Result<Circuit, CircuitError> {
    if controls.is_empty() {
        return Ok(circuit.clone());
    }
    check_wrappable(circuit, controls)?;
    let width = controls
        .iter()
        .map(|c| c.qubit + 1)
        .fold(circuit.num_qubits(), usize::max);
    if controls.len() == 1 {
        let mut b = circuit.to_builder();
        grow(&mut b, width, "ctl");
        for instr in &mut b.circuit.instructions {
            if let Instruction::Apply(op) = instr {
                op.controls.push(controls[0]);
            }
        }
        return Ok(b.build());
    }
    let mut b = circuit.to_builder();
    grow(&mut b, width, "ctl");
    let ancilla = b.num_qubits();
    grow(&mut b, ancilla + 1, "wrap");
    controlled_wrap_with_ancilla(&b.build(), controls, ancilla)
}

/// [`controlled_wrap`] with a caller-supplied clean ancilla for the folded
/// control.
pub fn controlled_wrap_with_ancilla(
    circuit: &Circuit,
    controls: &[Control],
    ancilla: usize,
) -> Result<Circuit, CircuitError> {
    if controls.is_empty() {
        return Ok(circuit.clone());
    }
    let mut all = controls.to_vec();
    all.push(Control::on(ancilla));
    check_wrappable(circuit, &all)?;
    let width = all.iter().map(|c| c.qubit + 1).fold(circuit.num_qubits(), usize::max);
    let mut b = circuit.to_builder();
    grow(&mut b, width, "ctl");
    let body = std::mem::take(&mut b.circuit.instructions);
    b.mcx(controls, ancilla);
    for mut instr in body {
        if let Instruction::Apply(op) = &mut instr {
            op.controls.push(Control::on(ancilla));
        }
        b.push(instr);
    }
    b.mcx(controls, ancilla);
    Ok(b.build())
}
