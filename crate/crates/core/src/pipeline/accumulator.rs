//! `U_+` and `U_-`: loop over every stage `k`, keeping only the part of
//! `V_x|0>|k>` that lies along `|+>` (resp. `|->`) with `C = 0`, and
//! pushing everything else into a nonzero value of the counter `D`.

use super::{PipelineError, RegisterLayout};
use crate::circuit::{controlled_wrap_with_ancilla, Circuit, CircuitBuilder, Control};
use crate::synth::{emit_inc, incmod_gate};

/// Which flag direction the accumulator keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// Keep `|+>`, giving amplitude `γ Π α_k²`.
    Plus,
    /// Keep `|->`, giving amplitude `γ Π β_k²`.
    Minus,
}

impl Sign {
    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

fn all_off(qubits: impl Iterator<Item = usize>) -> Vec<Control> {
    qubits.map(Control::off).collect()
}

/// `q2 ^= [flag is in the rejected direction]`: `|->` for `U_+`, `|+>` for
/// `U_-`.
fn w_gadget(b: &mut CircuitBuilder, flag: usize, q2: usize, sign: Sign) {
    match sign {
        Sign::Plus => {
            b.h(flag).cx(flag, q2).h(flag);
        }
        Sign::Minus => {
            b.h(flag).x(flag).cx(flag, q2).x(flag).h(flag);
        }
    }
}

/// `q3 ^= q1 OR q2`, leaving `q1` and `q2` as they were.
fn or3(b: &mut CircuitBuilder, q1: usize, q2: usize, q3: usize) {
    b.x(q1).x(q2);
    b.mcx(&[Control::on(q1), Control::on(q2)], q3);
    b.x(q3).x(q1).x(q2);
}

/// Build `U_+` or `U_-` from a `V_x` laid out per `layout`.
pub fn build_accumulator(vx: &Circuit, layout: &RegisterLayout, sign: Sign) -> Result<Circuit, PipelineError> {
    if vx.num_qubits() != layout.vx_width() {
        return Err(PipelineError::LayoutMismatch);
    }
    let width = layout.accumulator_width();
    let (r, k, c, d, s) = (layout.r(), layout.k(), layout.c(), layout.d(), layout.s());
    let (q1, q2, q3) = (s.start, s.start + 1, s.start + 2);
    let counter: Vec<usize> = d.qubits().collect();
    let k_qubits: Vec<usize> = k.qubits().collect();
    let stages = layout.steps + 1;

    let vx_wide = vx.remap(&(0..vx.num_qubits()).collect::<Vec<_>>(), width);
    let vx_dag = vx_wide.inverse()?;
    // Step 3 body: V_x† only where D = 0, folded onto q1
    let undo = controlled_wrap_with_ancilla(&vx_dag, &all_off(d.qubits()), q1)?;
    let incmod = incmod_gate(stages, layout.k_width);

    let mut b = Circuit::builder(width);
    for reg in [&r, &k, &c, &d, &s] {
        b.register(reg.name.clone(), reg.start, reg.len);
    }
    b.provenance(format!("U{} of {}", sign.symbol(), vx.provenance()));

    let c_nonzero = |b: &mut CircuitBuilder| {
        b.mcx(&all_off(c.qubits()), q1).x(q1);
    };
    let rc_nonzero = |b: &mut CircuitBuilder| {
        b.mcx(&all_off(r.qubits().chain(c.qubits())), q1).x(q1);
    };
    let rc_nonzero_undo = |b: &mut CircuitBuilder| {
        b.x(q1).mcx(&all_off(r.qubits().chain(c.qubits())), q1);
    };

    for _ in 0..stages {
        // 1
        b.append(&vx_wide);
        // 2: D += [C != 0 or flag in the rejected direction]
        c_nonzero(&mut b);
        w_gadget(&mut b, layout.flag(), q2, sign);
        or3(&mut b, q1, q2, q3);
        emit_inc(&mut b, &counter, &[Control::on(q3)]);
        // or3 and the gadget are self-inverse once reversed
        b.x(q2).x(q1).x(q3);
        b.mcx(&[Control::on(q1), Control::on(q2)], q3);
        b.x(q2).x(q1);
        w_gadget(&mut b, layout.flag(), q2, sign);
        b.x(q1).mcx(&all_off(c.qubits()), q1);
        // 3
        b.append(&undo);
        // 4: D += [(R, C) != 0]
        rc_nonzero(&mut b);
        emit_inc(&mut b, &counter, &[Control::on(q1)]);
        rc_nonzero_undo(&mut b);
        // 5
        b.gate(incmod.clone(), &k_qubits);
    }
    let back = incmod.inverse();
    for _ in 0..stages {
        b.gate(back.clone(), &k_qubits);
    }
    Ok(b.build())
}
