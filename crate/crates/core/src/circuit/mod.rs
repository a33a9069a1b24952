//! Circuit intermediate representation.
//!
//! A [`Circuit`] is an ordered list of [`Instruction`]s over `num_qubits`
//! qubits. Qubit `q` is bit `q` of a basis-state index, so qubit 0 is the least
//! significant bit of every counter register. Gates may carry any number of
//! controls, each with its own polarity; [`crate::synth::lower`] expands those
//! into the elementary gate set (at most one control per gate) when an audit
//! of the elementary gate count is needed.

mod format;
mod rewrite;
mod stats;
mod validate;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::linalg::{self, CMatrix};

pub use format::{parse, to_text};
pub use rewrite::{
    aggregate_postselections, aggregate_postselections_onto, controlled_wrap, controlled_wrap_with_ancilla,
    desugar_postselections, desugar_postselections_with, BasisRestore,
};
pub use stats::{gate_stats, GateStats};
pub use validate::{validate, Violation, ViolationKind};

/// Errors raised by circuit rewrites and the text format.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CircuitError {
    #[error("postselection on qubit {qubit} at instruction {position} is followed by a gate acting on it")]
    NonTerminalPostselect { position: usize, qubit: usize },
    #[error("postselection on qubit {qubit} at instruction {position} has target {target}; expected target 1")]
    UndesugaredPostselect {
        position: usize,
        qubit: usize,
        target: PostTarget,
    },
    #[error("circuit contains postselect or measure instructions")]
    NonUnitaryInput,
    #[error("circuit has no postselections to aggregate")]
    NothingToAggregate,
    #[error("control qubit {qubit} is also acted on by the wrapped circuit")]
    ControlOverlap { qubit: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One of the four postselection targets used by the constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PostTarget {
    Zero,
    One,
    Plus,
    Minus,
}

impl fmt::Display for PostTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PostTarget::Zero => "0",
            PostTarget::One => "1",
            PostTarget::Plus => "+",
            PostTarget::Minus => "-",
        })
    }
}

impl std::str::FromStr for PostTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(PostTarget::Zero),
            "1" => Ok(PostTarget::One),
            "+" => Ok(PostTarget::Plus),
            "-" => Ok(PostTarget::Minus),
            other => Err(format!("unknown postselection target `{other}`")),
        }
    }
}

/// An opaque one- or two-qubit unitary carried as an explicit matrix.
///
/// The matrix is indexed in the local convention: for a gate on qubits
/// `[q0, q1]` the local basis index is `b(q0) + 2 * b(q1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Opaque {
    pub label: String,
    pub matrix: CMatrix,
}

/// An opaque basis permutation on `log2(table.len())` qubits: `|j> -> |table[j]>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    pub label: String,
    pub table: Vec<usize>,
}

impl Permutation {
    pub fn width(&self) -> usize {
        self.table.len().trailing_zeros() as usize
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.table.len();
        if !n.is_power_of_two() {
            return false;
        }
        let mut seen = vec![false; n];
        for &j in &self.table {
            if j >= n || seen[j] {
                return false;
            }
            seen[j] = true;
        }
        true
    }

    pub fn inverse(&self) -> Permutation {
        let mut table = vec![0; self.table.len()];
        for (j, &image) in self.table.iter().enumerate() {
            if image < table.len() {
                table[image] = j;
            }
        }
        Permutation {
            label: dagger_label(&self.label),
            table,
        }
    }
}

fn dagger_label(label: &str) -> String {
    match label.strip_suffix("_dg") {
        Some(base) => base.to_string(),
        None => format!("{label}_dg"),
    }
}

/// Gate kinds. `H`, `X`, `T`, `Tdg` and `Cx` form the Clifford+T core;
/// [`Gate::Unitary`] and [`Gate::Perm`] are the opaque gates.
#[derive(Debug, Clone, PartialEq)]
pub enum Gate {
    H,
    X,
    T,
    Tdg,
    /// Acts on `[control, target]`.
    Cx,
    Unitary(Arc<Opaque>),
    Perm(Arc<Permutation>),
}

impl Gate {
    pub fn unitary(label: impl Into<String>, matrix: CMatrix) -> Gate {
        Gate::Unitary(Arc::new(Opaque {
            label: label.into(),
            matrix,
        }))
    }

    pub fn perm(label: impl Into<String>, table: Vec<usize>) -> Gate {
        Gate::Perm(Arc::new(Permutation {
            label: label.into(),
            table,
        }))
    }

    /// Number of qubits the gate acts on, controls excluded.
    pub fn arity(&self) -> usize {
        match self {
            Gate::H | Gate::X | Gate::T | Gate::Tdg => 1,
            Gate::Cx => 2,
            Gate::Unitary(u) => u.matrix.nrows().trailing_zeros() as usize,
            Gate::Perm(p) => p.width(),
        }
    }

    /// Short kind name used by the text format and by [`GateStats`].
    pub fn kind(&self) -> &'static str {
        match self {
            Gate::H => "h",
            Gate::X => "x",
            Gate::T => "t",
            Gate::Tdg => "tdg",
            Gate::Cx => "cx",
            Gate::Unitary(_) => "u",
            Gate::Perm(_) => "perm",
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            Gate::Unitary(u) => Some(&u.label),
            Gate::Perm(p) => Some(&p.label),
            _ => None,
        }
    }

    /// Dense matrix in the local index convention.
    pub fn matrix(&self) -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let re = |v: f64| Complex64::new(v, 0.0);
        match self {
            Gate::H => CMatrix::from_row_slice(2, 2, &[re(s), re(s), re(s), re(-s)]),
            Gate::X => CMatrix::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]),
            Gate::T => CMatrix::from_row_slice(
                2,
                2,
                &[
                    re(1.0),
                    re(0.0),
                    re(0.0),
                    Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4),
                ],
            ),
            Gate::Tdg => CMatrix::from_row_slice(
                2,
                2,
                &[
                    re(1.0),
                    re(0.0),
                    re(0.0),
                    Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_4),
                ],
            ),
            Gate::Cx => {
                // local index = control + 2 * target
                let mut m = CMatrix::zeros(4, 4);
                for (from, to) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
                    m[(to, from)] = re(1.0);
                }
                m
            }
            Gate::Unitary(u) => u.matrix.clone(),
            Gate::Perm(p) => {
                let n = p.table.len();
                let mut m = CMatrix::zeros(n, n);
                for (from, &to) in p.table.iter().enumerate() {
                    if to < n {
                        m[(to, from)] = re(1.0);
                    }
                }
                m
            }
        }
    }

    pub fn inverse(&self) -> Gate {
        match self {
            Gate::H | Gate::X | Gate::Cx => self.clone(),
            Gate::T => Gate::Tdg,
            Gate::Tdg => Gate::T,
            Gate::Unitary(u) => Gate::unitary(dagger_label(&u.label), u.matrix.adjoint()),
            Gate::Perm(p) => Gate::Perm(Arc::new(p.inverse())),
        }
    }

    /// True for gates whose unitarity is not structural (opaque matrices,
    /// permutation tables) and that therefore need checking.
    pub fn is_unitary(&self, tol: f64) -> bool {
        match self {
            Gate::Unitary(u) => {
                let n = u.matrix.nrows();
                u.matrix.ncols() == n && (n == 2 || n == 4) && linalg::unitarity_defect(&u.matrix) <= tol
            }
            Gate::Perm(p) => p.is_bijection(),
            _ => true,
        }
    }
}

/// A control qubit and the value it must hold for the gate to fire.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Control {
    pub qubit: usize,
    pub polarity: bool,
}

impl Control {
    pub fn on(qubit: usize) -> Control {
        Control { qubit, polarity: true }
    }

    pub fn off(qubit: usize) -> Control {
        Control { qubit, polarity: false }
    }
}

/// A gate application: `gate` on `qubits`, firing iff every control matches.
#[derive(Debug, Clone, PartialEq)]
pub struct Op {
    pub gate: Gate,
    pub qubits: Vec<usize>,
    pub controls: Vec<Control>,
}

impl Op {
    pub fn new(gate: Gate, qubits: Vec<usize>) -> Op {
        Op {
            gate,
            qubits,
            controls: Vec::new(),
        }
    }

    pub fn controlled(mut self, controls: impl IntoIterator<Item = Control>) -> Op {
        self.controls.extend(controls);
        self
    }

    /// Every qubit the op reads or writes.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.iter().copied().chain(self.controls.iter().map(|c| c.qubit))
    }

    pub fn inverse(&self) -> Op {
        Op {
            gate: self.gate.inverse(),
            qubits: self.qubits.clone(),
            controls: self.controls.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instruction {
    Apply(Op),
    Postselect {
        qubit: usize,
        target: PostTarget,
    },
    /// Deferred measurement in the computational basis; statistics are read
    /// off the final state.
    Measure {
        qubit: usize,
        label: String,
    },
}

impl Instruction {
    pub fn is_marker(&self) -> bool {
        !matches!(self, Instruction::Apply(_))
    }

    /// Qubits touched by this instruction (controls included).
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Instruction::Apply(op) => op.support().collect(),
            Instruction::Postselect { qubit, .. } | Instruction::Measure { qubit, .. } => vec![*qubit],
        }
    }
}

/// A named contiguous span of qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn new(name: impl Into<String>, start: usize, len: usize) -> Register {
        Register {
            name: name.into(),
            start,
            len,
        }
    }

    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    /// Little-endian value of this register in basis state `index`.
    pub fn value(&self, index: usize) -> usize {
        (index >> self.start) & ((1usize << self.len) - 1)
    }

    pub fn contains(&self, qubit: usize) -> bool {
        self.qubits().contains(&qubit)
    }
}

/// An immutable circuit. Build one with [`CircuitBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    registers: Vec<Register>,
    instructions: Vec<Instruction>,
    provenance: String,
    terminal: bool,
}

impl Circuit {
    pub fn builder(num_qubits: usize) -> CircuitBuilder {
        CircuitBuilder {
            circuit: Circuit {
                num_qubits,
                registers: Vec::new(),
                instructions: Vec::new(),
                provenance: String::new(),
                terminal: false,
            },
        }
    }

    /// Start a new builder seeded with a copy of this circuit.
    pub fn to_builder(&self) -> CircuitBuilder {
        CircuitBuilder { circuit: self.clone() }
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

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    /// Whether the circuit claims the unitary-then-terminal discipline:
    /// every postselect and measure comes after the last gate.
    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_unitary(&self) -> bool {
        self.instructions.iter().all(|i| !i.is_marker())
    }

    pub fn ops(&self) -> impl Iterator<Item = &Op> {
        self.instructions.iter().filter_map(|i| match i {
            Instruction::Apply(op) => Some(op),
            _ => None,
        })
    }

    pub fn postselect_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instruction::Postselect { .. }))
            .count()
    }

    /// The adjoint of a unitary circuit.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        if !self.is_unitary() {
            return Err(CircuitError::NonUnitaryInput);
        }
        let mut out = self.clone();
        out.instructions = self
            .instructions
            .iter()
            .rev()
            .map(|i| match i {
                Instruction::Apply(op) => Instruction::Apply(op.inverse()),
                _ => unreachable!(),
            })
            .collect();
        out.provenance = format!("inverse of {}", self.provenance);
        Ok(out)
    }

    /// Sequential repetition `self^times`.
    pub fn repeat(&self, times: usize) -> Circuit {
        let mut out = self.clone();
        out.instructions = std::iter::repeat_n(self.instructions.iter().cloned(), times)
            .flatten()
            .collect();
        out.provenance = format!("({})^{times}", self.provenance);
        out
    }

    /// Relabel qubit `q` as `mapping[q]` inside a circuit of `width` qubits.
    /// Registers are dropped because spans need not stay contiguous.
    pub fn remap(&self, mapping: &[usize], width: usize) -> Circuit {
        let map = |q: usize| mapping[q];
        let instructions = self
            .instructions
            .iter()
            .map(|i| match i {
                Instruction::Apply(op) => Instruction::Apply(Op {
                    gate: op.gate.clone(),
                    qubits: op.qubits.iter().map(|&q| map(q)).collect(),
                    controls: op
                        .controls
                        .iter()
                        .map(|c| Control {
                            qubit: map(c.qubit),
                            polarity: c.polarity,
                        })
                        .collect(),
                }),
                Instruction::Postselect { qubit, target } => Instruction::Postselect {
                    qubit: map(*qubit),
                    target: *target,
                },
                Instruction::Measure { qubit, label } => Instruction::Measure {
                    qubit: map(*qubit),
                    label: label.clone(),
                },
            })
            .collect();
        Circuit {
            num_qubits: width,
            registers: Vec::new(),
            instructions,
            provenance: self.provenance.clone(),
            terminal: self.terminal,
        }
    }
}

/// Mutable construction handle for [`Circuit`].
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    circuit: Circuit,
}

impl CircuitBuilder {
    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits
    }

    /// Grow the circuit by `count` fresh qubits and return the first new index.
    pub fn add_qubits(&mut self, count: usize) -> usize {
        let start = self.circuit.num_qubits;
        self.circuit.num_qubits += count;
        start
    }

    pub fn register(&mut self, name: impl Into<String>, start: usize, len: usize) -> &mut Self {
        self.circuit.registers.push(Register::new(name, start, len));
        self
    }

    pub fn provenance(&mut self, text: impl Into<String>) -> &mut Self {
        self.circuit.provenance = text.into();
        self
    }

    pub fn terminal(&mut self, flag: bool) -> &mut Self {
        self.circuit.terminal = flag;
        self
    }

    pub fn push(&mut self, instruction: Instruction) -> &mut Self {
        self.circuit.instructions.push(instruction);
        self
    }

    pub fn op(&mut self, op: Op) -> &mut Self {
        self.push(Instruction::Apply(op))
    }

    pub fn gate(&mut self, gate: Gate, qubits: &[usize]) -> &mut Self {
        self.op(Op::new(gate, qubits.to_vec()))
    }

    pub fn controlled(&mut self, gate: Gate, qubits: &[usize], controls: &[Control]) -> &mut Self {
        self.op(Op::new(gate, qubits.to_vec()).controlled(controls.iter().copied()))
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::H, &[q])
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::X, &[q])
    }

    pub fn t(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::T, &[q])
    }

    pub fn tdg(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::Tdg, &[q])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(Gate::Cx, &[control, target])
    }

    /// `X` on `target` controlled by every entry of `controls`.
    pub fn mcx(&mut self, controls: &[Control], target: usize) -> &mut Self {
        self.controlled(Gate::X, &[target], controls)
    }

    pub fn postselect(&mut self, qubit: usize, target: PostTarget) -> &mut Self {
        self.push(Instruction::Postselect { qubit, target })
    }

    pub fn measure(&mut self, qubit: usize, label: impl Into<String>) -> &mut Self {
        self.push(Instruction::Measure {
            qubit,
            label: label.into(),
        })
    }

    /// Append every instruction of `other`, which must share this index space.
    pub fn append(&mut self, other: &Circuit) -> &mut Self {
        self.circuit.instructions.extend(other.instructions.iter().cloned());
        self
    }

    pub fn build(self) -> Circuit {
        self.circuit
    }
}
