//! Expansion of multi-controlled gates into the elementary set: H, T, T†,
//! X, CNOT, singly controlled H/T/T†, and opaque gates with at most one
//! control. Toffolis become the standard 15-gate Clifford+T network and
//! wider controls use a clean-ancilla ladder.

use crate::circuit::{Circuit, CircuitBuilder, Control, Gate, Instruction, Op};

/// `controls → target` Toffoli as 2 H, 6 CNOT and 7 T/T† gates.
pub(crate) fn emit_toffoli(b: &mut CircuitBuilder, c0: usize, c1: usize, target: usize) {
    b.h(target)
        .cx(c1, target)
        .tdg(target)
        .cx(c0, target)
        .t(target)
        .cx(c1, target)
        .tdg(target)
        .cx(c0, target)
        .t(c1)
        .t(target)
        .h(target)
        .cx(c0, c1)
        .t(c0)
        .tdg(c1)
        .cx(c0, c1);
}

fn flip_off_controls(b: &mut CircuitBuilder, controls: &[Control]) {
    for c in controls.iter().filter(|c| !c.polarity) {
        b.x(c.qubit);
    }
}

/// Ladder ancillas [`emit_mcx`] needs for `k` controls.
pub(crate) fn ladder_width(k: usize) -> usize {
    k.saturating_sub(2)
}

/// `∧_k(X)` with per-control polarity. `ancillas` must hold at least
/// `k - 2` clean qubits; they are returned clean.
pub(crate) fn emit_mcx(b: &mut CircuitBuilder, controls: &[Control], target: usize, ancillas: &[usize]) {
    let k = controls.len();
    assert!(
        ancillas.len() >= ladder_width(k),
        "ladder needs {} ancillas",
        ladder_width(k)
    );
    if k == 0 {
        b.x(target);
        return;
    }
    flip_off_controls(b, controls);
    let c: Vec<usize> = controls.iter().map(|c| c.qubit).collect();
    match k {
        1 => {
            b.cx(c[0], target);
        }
        2 => emit_toffoli(b, c[0], c[1], target),
        _ => {
            let a = &ancillas[..k - 2];
            emit_toffoli(b, c[0], c[1], a[0]);
            for i in 2..k - 1 {
                emit_toffoli(b, c[i], a[i - 2], a[i - 1]);
            }
            emit_toffoli(b, c[k - 1], a[k - 3], target);
            for i in (2..k - 1).rev() {
                emit_toffoli(b, c[i], a[i - 2], a[i - 1]);
            }
            emit_toffoli(b, c[0], c[1], a[0]);
        }
    }
    flip_off_controls(b, controls);
}

/// Rewrite `Cx` as `X` with one more control so every op is (gate, targets, controls).
fn normalized(op: &Op) -> (Gate, Vec<usize>, Vec<Control>) {
    match op.gate {
        Gate::Cx => {
            let mut controls = op.controls.clone();
            controls.push(Control::on(op.qubits[0]));
            (Gate::X, vec![op.qubits[1]], controls)
        }
        _ => (op.gate.clone(), op.qubits.clone(), op.controls.clone()),
    }
}

/// Clean ancillas needed to lower one op.
fn ancilla_need(op: &Op) -> usize {
    let (gate, _, controls) = normalized(op);
    let k = controls.len();
    match gate {
        Gate::X => ladder_width(k),
        _ if k >= 2 => 1 + ladder_width(k),
        _ => 0,
    }
}

/// Append the lowering of `op`, using `pool` as clean ancillas.
pub(crate) fn emit_lowered(b: &mut CircuitBuilder, op: &Op, pool: &[usize]) {
    let (gate, targets, controls) = normalized(op);
    match (controls.len(), &gate) {
        (0, _) => {
            b.gate(gate, &targets);
        }
        (_, Gate::X) => emit_mcx(b, &controls, targets[0], pool),
        (1, _) => {
            flip_off_controls(b, &controls);
            b.controlled(gate, &targets, &[Control::on(controls[0].qubit)]);
            flip_off_controls(b, &controls);
        }
        _ => {
            let (flag, ladder) = pool.split_first().expect("flag ancilla");
            emit_mcx(b, &controls, *flag, ladder);
            b.controlled(gate, &targets, &[Control::on(*flag)]);
            emit_mcx(b, &controls, *flag, ladder);
        }
    }
}

/// Lower every op to the elementary set. Ancillas are appended above the
/// existing qubits (as register `anc` when the circuit declares registers)
/// and are returned clean after every op.
pub fn lower(circuit: &Circuit) -> Circuit {
    let need = circuit.ops().map(ancilla_need).max().unwrap_or(0);
    let mut b = Circuit::builder(circuit.num_qubits());
    b.provenance(circuit.provenance()).terminal(circuit.is_terminal());
    for r in circuit.registers() {
        b.register(r.name.clone(), r.start, r.len);
    }
    let start = b.add_qubits(need);
    if need > 0 && !circuit.registers().is_empty() {
        b.register("anc", start, need);
    }
    let pool: Vec<usize> = (start..start + need).collect();
    for instr in circuit.instructions() {
        match instr {
            Instruction::Apply(op) => emit_lowered(&mut b, op, &pool),
            other => {
                b.push(other.clone());
            }
        }
    }
    b.build()
}

/// True when every op is already elementary.
pub fn is_lowered(circuit: &Circuit) -> bool {
    circuit.ops().all(|op| {
        let (gate, _, controls) = normalized(op);
        match gate {
            Gate::X => controls.len() <= 1,
            _ => controls.len() <= 1 && controls.iter().all(|c| c.polarity),
        }
    })
}
