use super::{PipelineError, RegisterLayout};
use crate::circuit::{Circuit, CircuitError, Instruction, PostTarget};
use crate::synth::emit_inc;

/// Unitarize a desugared `Q_x`: every `post q 1` becomes
/// `X q · ∧_q(INC) on C · X q`, so the counter `C` records failed
/// postselections and its zero component is exactly the postselected state.
pub fn build_vx(qx: &Circuit, layout: &RegisterLayout) -> Result<Circuit, PipelineError> {
    let mut posts = 0;
    for (position, instr) in qx.instructions().iter().enumerate() {
        match instr {
            Instruction::Postselect { qubit, target } if *target != PostTarget::One => {
                return Err(CircuitError::UndesugaredPostselect {
                    position,
                    qubit: *qubit,
                    target: *target,
                }
                .into());
            }
            Instruction::Postselect { .. } => posts += 1,
            Instruction::Measure { .. } => {
                return Err(PipelineError::NonTerminalMarkers("Q_x contains a measurement".into()));
            }
            Instruction::Apply(_) => {}
        }
    }
    // C never wraps back to zero only if 2^N - 1 > posts
    let capacity = (1usize << layout.c_width) - 1;
    if capacity <= posts {
        return Err(PipelineError::CounterTooSmall {
            width: layout.c_width,
            postselects: posts,
            needed: (usize::BITS - (posts + 1).leading_zeros()) as usize,
        });
    }
    if qx.num_qubits() != layout.qx_width() {
        return Err(PipelineError::LayoutMismatch);
    }

    let c = layout.c();
    let counter: Vec<usize> = c.qubits().collect();
    let mut b = Circuit::builder(layout.vx_width());
    for r in qx.registers() {
        b.register(r.name.clone(), r.start, r.len);
    }
    b.register("C", c.start, c.len);
    b.provenance(format!("vx of {}", qx.provenance()));
    for instr in qx.instructions() {
        match instr {
            Instruction::Postselect { qubit, .. } => {
                b.x(*qubit);
                emit_inc(&mut b, &counter, &[crate::circuit::Control::on(*qubit)]);
                b.x(*qubit);
            }
            other => {
                b.push(other.clone());
            }
        }
    }
    Ok(b.build())
}
