use super::PipelineError;
use crate::circuit::{Circuit, Control, Instruction, PostTarget};

/// Make `ux` work on `|0><0| ⊗ (I/2)^{⊗m}`: a fresh clean qubit (index `m`)
/// is flipped to `|1>` only if every dirty qubit is `|0>`, and postselecting
/// it on `|1>` keeps exactly the branch that started in `|0^m>`. Conditional
/// statistics match the pure run and `p_post` shrinks by exactly `2^-m`.
///
/// `ux` must be gates followed only by markers: a postselection on `p` (if
/// given) and a measurement of `o`.
pub fn wrap_dqc1(ux: &Circuit, p: Option<usize>, o: usize) -> Result<Circuit, PipelineError> {
    let m = ux.num_qubits();
    let instrs = ux.instructions();
    let first_marker = instrs.iter().position(Instruction::is_marker).unwrap_or(instrs.len());
    if instrs[first_marker..].iter().any(|i| !i.is_marker()) {
        return Err(PipelineError::NonTerminalMarkers("a gate follows a marker".into()));
    }
    let mut label = None;
    for i in &instrs[first_marker..] {
        match i {
            Instruction::Postselect { qubit, target } if Some(*qubit) == p && *target == PostTarget::One => {}
            Instruction::Measure { qubit, label: l } if *qubit == o => label = Some(l.clone()),
            other => {
                return Err(PipelineError::NonTerminalMarkers(format!(
                    "unexpected marker on qubit(s) {:?}",
                    other.qubits()
                )))
            }
        }
    }
    let clean = m;
    let mut out = Circuit::builder(m + 1);
    for r in ux.registers() {
        out.register(r.name.clone(), r.start, r.len);
    }
    if !ux.registers().is_empty() {
        out.register("clean", clean, 1);
    }
    out.provenance(format!("dqc1 of {}", ux.provenance())).terminal(true);
    let dirty: Vec<Control> = (0..m).map(Control::off).collect();
    out.mcx(&dirty, clean);
    for i in &instrs[..first_marker] {
        out.push(i.clone());
    }
    out.postselect(clean, PostTarget::One);
    if let Some(p) = p {
        out.postselect(p, PostTarget::One);
    }
    out.measure(o, label.unwrap_or_else(|| "out".into()));
    Ok(out.build())
}

/// `m` Bell pairs: qubit `i` entangled with `m + i`. The low half alone is
/// maximally mixed.
pub fn bell_mixed_prep(m: usize) -> Circuit {
    let mut b = Circuit::builder(2 * m);
    b.provenance(format!("bell pairs m={m}"));
    for i in 0..m {
        b.h(i).cx(i, m + i);
    }
    b.build()
}
