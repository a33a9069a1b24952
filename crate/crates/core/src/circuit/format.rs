//! Line-oriented circuit text format.
//!
//! ```text
//! #@ provenance <free text>      metadata (a comment to other readers)
//! #@ terminal                    unitary-then-terminal discipline flag
//! qubits N
//! reg NAME START LEN
//! matrix LABEL                   followed by 2 or 4 rows of `re,im` pairs
//! perm LABEL: j0 j1 ...          permutation shorthand, |j> -> |j_k>
//! h Q | x Q | t Q | tdg Q | cx C T | u LABEL Q [Q2 ...]
//! ctrl P Q : <gate line>         control on qubit Q with polarity P (nestable)
//! post Q {0|1|+|-}
//! measure Q LABEL
//! ```
//!
//! Definitions are emitted once, before the first instruction, in order of
//! first use. Numbers are written with the shortest representation that
//! parses back to the same `f64`, so `to_text(parse(s)) == s` for any `s`
//! produced by [`to_text`].

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use super::{Circuit, CircuitError, Control, Gate, Instruction, Op, Opaque, Permutation};
use crate::fmt_f64;
use crate::linalg::CMatrix;

pub fn to_text(circuit: &Circuit) -> String {
    let mut out = String::new();
    if !circuit.provenance().is_empty() {
        let one_line = circuit.provenance().replace('\n', " ");
        let _ = writeln!(out, "#@ provenance {one_line}");
    }
    if circuit.is_terminal() {
        out.push_str("#@ terminal\n");
    }
    let _ = writeln!(out, "qubits {}", circuit.num_qubits());
    for r in circuit.registers() {
        let _ = writeln!(out, "reg {} {} {}", r.name, r.start, r.len);
    }

    let mut emitted: Vec<&str> = Vec::new();
    for op in circuit.ops() {
        match &op.gate {
            Gate::Unitary(u) if !emitted.contains(&u.label.as_str()) => {
                emitted.push(&u.label);
                let _ = writeln!(out, "matrix {}", u.label);
                for r in 0..u.matrix.nrows() {
                    let row: Vec<String> = (0..u.matrix.ncols())
                        .map(|c| {
                            let z = u.matrix[(r, c)];
                            format!("{},{}", fmt_f64(z.re), fmt_f64(z.im))
                        })
                        .collect();
                    let _ = writeln!(out, "{}", row.join(" "));
                }
            }
            Gate::Perm(p) if !emitted.contains(&p.label.as_str()) => {
                emitted.push(&p.label);
                let table: Vec<String> = p.table.iter().map(|j| j.to_string()).collect();
                let _ = writeln!(out, "perm {}: {}", p.label, table.join(" "));
            }
            _ => {}
        }
    }

    for instr in circuit.instructions() {
        match instr {
            Instruction::Apply(op) => {
                for c in &op.controls {
                    let _ = write!(out, "ctrl {} {} : ", u8::from(c.polarity), c.qubit);
                }
                let qs: Vec<String> = op.qubits.iter().map(|q| q.to_string()).collect();
                match op.gate.label() {
                    Some(label) => {
                        let _ = writeln!(out, "u {} {}", label, qs.join(" "));
                    }
                    None => {
                        let _ = writeln!(out, "{} {}", op.gate.kind(), qs.join(" "));
                    }
                }
            }
            Instruction::Postselect { qubit, target } => {
                let _ = writeln!(out, "post {qubit} {target}");
            }
            Instruction::Measure { qubit, label } => {
                let _ = writeln!(out, "measure {qubit} {label}");
            }
        }
    }
    out
}

fn err(line: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_usize(tok: Option<&str>, line: usize, what: &str) -> Result<usize, CircuitError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| err(line, format!("bad {what} `{tok}`")))
}

fn parse_complex(tok: &str, line: usize) -> Result<Complex64, CircuitError> {
    let (re, im) = tok
        .split_once(',')
        .ok_or_else(|| err(line, format!("expected `re,im`, got `{tok}`")))?;
    let re: f64 = re.parse().map_err(|_| err(line, format!("bad number `{re}`")))?;
    let im: f64 = im.parse().map_err(|_| err(line, format!("bad number `{im}`")))?;
    Ok(Complex64::new(re, im))
}

/// Parse the text format. Parsing does not validate; run
/// [`super::validate`] on the result.
pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let mut builder: Option<super::CircuitBuilder> = None;
    let mut provenance = String::new();
    let mut terminal = false;
    let mut defs: HashMap<String, Gate> = HashMap::new();

    while let Some((ln, raw)) = lines.next() {
        let line = raw.trim();
        if let Some(meta) = line.strip_prefix("#@") {
            let meta = meta.trim();
            if let Some(p) = meta.strip_prefix("provenance") {
                provenance = p.trim().to_string();
            } else if meta == "terminal" {
                terminal = true;
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.next().unwrap_or_default();
        if head == "qubits" {
            if builder.is_some() {
                return Err(err(ln, "duplicate `qubits` line"));
            }
            builder = Some(Circuit::builder(parse_usize(toks.next(), ln, "qubit count")?));
            continue;
        }
        let b = builder.as_mut().ok_or_else(|| err(ln, "`qubits N` must come first"))?;
        match head {
            "reg" => {
                let name = toks.next().ok_or_else(|| err(ln, "missing register name"))?;
                let start = parse_usize(toks.next(), ln, "register start")?;
                let len = parse_usize(toks.next(), ln, "register length")?;
                b.register(name, start, len);
            }
            "matrix" => {
                let label = toks.next().ok_or_else(|| err(ln, "missing matrix label"))?.to_string();
                let mut rows: Vec<Vec<Complex64>> = Vec::new();
                loop {
                    let (rln, row) = lines.next().ok_or_else(|| err(ln, "matrix ended early"))?;
                    let row = row
                        .split_whitespace()
                        .map(|t| parse_complex(t, rln))
                        .collect::<Result<Vec<_>, _>>()?;
                    if !(row.len() == 2 || row.len() == 4) {
                        return Err(err(rln, "matrix rows hold 2 or 4 entries"));
                    }
                    if rows.first().is_some_and(|r| r.len() != row.len()) {
                        return Err(err(rln, "ragged matrix"));
                    }
                    let dim = row.len();
                    rows.push(row);
                    if rows.len() == dim {
                        break;
                    }
                }
                let dim = rows.len();
                let matrix = CMatrix::from_fn(dim, dim, |r, c| rows[r][c]);
                defs.insert(label.clone(), Gate::Unitary(Arc::new(Opaque { label, matrix })));
            }
            "perm" => {
                let rest = line["perm".len()..].trim();
                let (label, table) = rest
                    .split_once(':')
                    .ok_or_else(|| err(ln, "expected `perm LABEL: j0 j1 ...`"))?;
                let label = label.trim().to_string();
                let table = table
                    .split_whitespace()
                    .map(|t| t.parse::<usize>().map_err(|_| err(ln, format!("bad entry `{t}`"))))
                    .collect::<Result<Vec<_>, _>>()?;
                defs.insert(label.clone(), Gate::Perm(Arc::new(Permutation { label, table })));
            }
            "post" => {
                let qubit = parse_usize(toks.next(), ln, "qubit")?;
                let target = toks
                    .next()
                    .ok_or_else(|| err(ln, "missing target"))?
                    .parse()
                    .map_err(|e: String| err(ln, e))?;
                b.postselect(qubit, target);
            }
            "measure" => {
                let qubit = parse_usize(toks.next(), ln, "qubit")?;
                let label = toks.next().ok_or_else(|| err(ln, "missing label"))?;
                b.measure(qubit, label);
            }
            _ => {
                let op = parse_op(line, ln, &defs)?;
                b.op(op);
            }
        }
    }
    let mut b = builder.ok_or_else(|| err(0, "missing `qubits N` line"))?;
    b.provenance(provenance).terminal(terminal);
    Ok(b.build())
}

fn parse_op(line: &str, ln: usize, defs: &HashMap<String, Gate>) -> Result<Op, CircuitError> {
    let mut controls = Vec::new();
    let mut rest = line.trim();
    while let Some(tail) = rest.strip_prefix("ctrl ") {
        let (head, gate_line) = tail
            .split_once(':')
            .ok_or_else(|| err(ln, "expected `ctrl P Q : <gate>`"))?;
        let mut t = head.split_whitespace();
        let polarity = match t.next() {
            Some("0") => false,
            Some("1") => true,
            other => return Err(err(ln, format!("bad polarity {other:?}"))),
        };
        let qubit = parse_usize(t.next(), ln, "control qubit")?;
        controls.push(Control { qubit, polarity });
        rest = gate_line.trim();
    }
    let mut toks = rest.split_whitespace();
    let head = toks.next().ok_or_else(|| err(ln, "empty gate"))?;
    let gate = match head {
        "h" => Gate::H,
        "x" => Gate::X,
        "t" => Gate::T,
        "tdg" => Gate::Tdg,
        "cx" => Gate::Cx,
        "u" => {
            let label = toks.next().ok_or_else(|| err(ln, "missing gate label"))?;
            defs.get(label)
                .cloned()
                .ok_or_else(|| err(ln, format!("undefined gate `{label}`")))?
        }
        other => return Err(err(ln, format!("unknown instruction `{other}`"))),
    };
    let qubits = toks
        .map(|t| t.parse::<usize>().map_err(|_| err(ln, format!("bad qubit `{t}`"))))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Op { gate, qubits, controls })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Control, PostTarget};
    use crate::linalg;
    use proptest::prelude::*;

    fn sample() -> Circuit {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut b = Circuit::builder(4);
        b.register("A", 0, 2)
            .register("B", 2, 2)
            .provenance("sample circuit")
            .h(0)
            .cx(0, 1)
            .t(2)
            .tdg(3)
            .gate(Gate::unitary("hh", linalg::real(2, 2, &[s, s, s, -s])), &[1])
            .controlled(
                Gate::perm("inc", vec![1, 2, 3, 0]),
                &[2, 3],
                &[Control::off(0), Control::on(1)],
            )
            .postselect(0, PostTarget::Minus)
            .measure(1, "out");
        b.build()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let text = to_text(&sample());
        let parsed = parse(&text).unwrap();
        assert_eq!(parsed, sample());
        assert_eq!(to_text(&parsed), text);
    }

    #[test]
    fn parses_hand_written_text() {
        let text = "# a comment\nqubits 2\nh 0\nctrl 1 0 : x 1\npost 0 +\nmeasure 1 acc\n";
        let c = parse(text).unwrap();
        assert_eq!(c.num_qubits(), 2);
        assert_eq!(c.instructions().len(), 4);
    }

    #[test]
    fn reports_line_numbers() {
        let e = parse("qubits 1\nfoo 0\n").unwrap_err();
        assert_eq!(
            e,
            CircuitError::Parse {
                line: 2,
                message: "unknown instruction `foo`".into()
            }
        );
        assert!(parse("h 0\n").is_err());
        assert!(parse("qubits 1\nu nope 0\n").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_random_opaque(re in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let m = CMatrix::from_fn(2, 2, |r, c| Complex64::new(re[2 * r + c], re[4 + 2 * r + c]));
            let mut b = Circuit::builder(2);
            b.gate(Gate::unitary("m", m), &[1]).cx(1, 0);
            let c = b.build();
            let text = to_text(&c);
            let back = parse(&text).unwrap();
            prop_assert_eq!(to_text(&back), text);
            prop_assert_eq!(back, c);
        }
    }
}
