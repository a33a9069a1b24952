//! Dense statevector simulation with unnormalized postselection.
//!
//! Postselection projects without renormalizing, so the squared norm of the
//! final state is the probability that every postselection succeeded. A
//! state starts out as a single tracked basis vector and only materializes
//! into a dense amplitude vector when a gate creates superposition, which
//! keeps permutation-heavy prefixes and mixed-input enumeration cheap.

mod kernel;
mod mixed;
mod report;

use num_complex::Complex64;

use crate::circuit::{self, Circuit, Instruction, Op, PostTarget};
use crate::linalg::CMatrix;

use kernel::Kernel;
pub use mixed::run_dqc1_mixed;
pub use report::{Outcome, SimulationReport};

/// Widest dense state the simulator will allocate.
pub const MAX_QUBITS: usize = 24;
/// Widest circuit [`unitary_of`] will expand.
pub const MAX_UNITARY_QUBITS: usize = 10;
/// Postselection leaving less squared norm than this is treated as zero overlap.
pub const ZERO_OVERLAP: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("postselection at instruction {position} has zero overlap with the state")]
    ZeroOverlap { position: usize },
    #[error("{qubits} qubits exceeds the limit of {max}")]
    TooWide { qubits: usize, max: usize },
    #[error("circuit contains postselect or measure instructions")]
    NonUnitaryInput,
    #[error("circuit acts on {circuit} qubits but the state has {state}")]
    WidthMismatch { circuit: usize, state: usize },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Basis { index: usize, amp: Complex64 },
    Dense(Vec<Complex64>),
}

/// Gates between re-anchoring the amplitudes to the tracked norm.
const SETTLE_EVERY: u32 = 256;
/// Largest relative drift attributed to rounding rather than a broken gate.
const SETTLE_TOL: f64 = 1e-9;

/// Unnormalized `n`-qubit state with a running squared norm.
#[derive(Debug, Clone)]
pub struct StateVector {
    num_qubits: usize,
    repr: Repr,
    norm_sqr: f64,
    gates_since_settle: u32,
}

impl PartialEq for StateVector {
    fn eq(&self, other: &StateVector) -> bool {
        self.num_qubits == other.num_qubits && self.repr == other.repr && self.norm_sqr == other.norm_sqr
    }
}

impl StateVector {
    pub fn zero(num_qubits: usize) -> StateVector {
        StateVector::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> StateVector {
        assert!(num_qubits <= MAX_QUBITS, "{num_qubits} qubits exceeds {MAX_QUBITS}");
        assert!(index < 1usize << num_qubits, "basis index out of range");
        StateVector {
            num_qubits,
            repr: Repr::Basis {
                index,
                amp: Complex64::new(1.0, 0.0),
            },
            norm_sqr: 1.0,
            gates_since_settle: 0,
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector, SimError> {
        if !amps.len().is_power_of_two() {
            return Err(SimError::InvalidState(format!(
                "length {} is not a power of two",
                amps.len()
            )));
        }
        let num_qubits = amps.len().trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(SimError::TooWide {
                qubits: num_qubits,
                max: MAX_QUBITS,
            });
        }
        let norm_sqr = amps.iter().map(|a| a.norm_sqr()).sum();
        Ok(StateVector {
            num_qubits,
            repr: Repr::Dense(amps),
            norm_sqr,
            gates_since_settle: 0,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    /// Running squared norm: the product of all postselection success
    /// probabilities so far, times the initial squared norm.
    pub fn norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    /// Squared norm summed from the amplitudes.
    pub fn recompute_norm_sqr(&self) -> f64 {
        match &self.repr {
            Repr::Basis { amp, .. } => amp.norm_sqr(),
            Repr::Dense(v) => v.iter().map(|a| a.norm_sqr()).sum(),
        }
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        match &self.repr {
            Repr::Basis { index: i, amp } if *i == index => *amp,
            Repr::Basis { .. } => Complex64::new(0.0, 0.0),
            Repr::Dense(v) => v[index],
        }
    }

    pub fn to_vec(&self) -> Vec<Complex64> {
        match &self.repr {
            Repr::Basis { index, amp } => {
                let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
                v[*index] = *amp;
                v
            }
            Repr::Dense(v) => v.clone(),
        }
    }

    /// Nonzero amplitudes in index order.
    pub fn nonzero(&self) -> Box<dyn Iterator<Item = (usize, Complex64)> + '_> {
        match &self.repr {
            Repr::Basis { index, amp } => Box::new(std::iter::once((*index, *amp))),
            Repr::Dense(v) => Box::new(
                v.iter()
                    .copied()
                    .enumerate()
                    .filter(|(_, a)| a.re != 0.0 || a.im != 0.0),
            ),
        }
    }

    /// Squared amplitude mass on basis states satisfying `pred`.
    pub fn mass_where(&self, pred: impl Fn(usize) -> bool) -> f64 {
        match &self.repr {
            Repr::Basis { index, amp } => {
                if pred(*index) {
                    amp.norm_sqr()
                } else {
                    0.0
                }
            }
            Repr::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(i, _)| pred(*i))
                .map(|(_, a)| a.norm_sqr())
                .sum(),
        }
    }

    /// Euclidean distance between amplitude vectors.
    pub fn distance(&self, other: &StateVector) -> f64 {
        if self.num_qubits != other.num_qubits {
            return f64::INFINITY;
        }
        (0..self.dim())
            .map(|i| (self.amplitude(i) - other.amplitude(i)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Append `extra` qubits in `|0>` above the existing ones.
    pub fn extended(&self, extra: usize) -> StateVector {
        let num_qubits = self.num_qubits + extra;
        assert!(num_qubits <= MAX_QUBITS);
        let repr = match &self.repr {
            Repr::Basis { index, amp } => Repr::Basis {
                index: *index,
                amp: *amp,
            },
            Repr::Dense(v) => {
                let mut out = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
                out[..v.len()].copy_from_slice(v);
                Repr::Dense(out)
            }
        };
        StateVector {
            num_qubits,
            repr,
            norm_sqr: self.norm_sqr,
            gates_since_settle: self.gates_since_settle,
        }
    }

    fn materialize(&mut self) -> &mut Vec<Complex64> {
        if let Repr::Basis { index, amp } = self.repr {
            let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
            v[index] = amp;
            self.repr = Repr::Dense(v);
        }
        match &mut self.repr {
            Repr::Dense(v) => v,
            Repr::Basis { .. } => unreachable!(),
        }
    }

    /// Apply a gate. Unitary, so the running norm is unchanged.
    pub fn apply_op(&mut self, op: &Op) {
        let kernel = Kernel::new(op, self.num_qubits);
        self.apply_kernel(&kernel);
    }

    fn apply_kernel(&mut self, kernel: &Kernel) {
        self.gates_since_settle += kernel.gates;
        if self.gates_since_settle >= SETTLE_EVERY {
            self.settle();
        }
        if let Repr::Basis { index, amp } = &mut self.repr {
            if let Some((next, phase)) = kernel.on_basis(*index) {
                *index = next;
                *amp *= phase;
                return;
            }
        }
        let v = self.materialize();
        kernel.apply(v);
    }

    /// Gates are unitary, so the tracked norm is exact; rescale the
    /// amplitudes to it to cancel the systematic bias of constants like
    /// 1/sqrt(2) whose squares are not exactly representable. Drift larger
    /// than rounding could explain is left visible.
    fn settle(&mut self) {
        self.gates_since_settle = 0;
        let actual = self.recompute_norm_sqr();
        if actual == 0.0 || ((actual - self.norm_sqr) / self.norm_sqr).abs() > SETTLE_TOL {
            return;
        }
        let k = (self.norm_sqr / actual).sqrt();
        match &mut self.repr {
            Repr::Basis { amp, .. } => *amp *= k,
            Repr::Dense(v) => v.iter_mut().for_each(|a| *a *= k),
        }
    }

    /// Project qubit `q` onto `target` without renormalizing. Returns the
    /// new squared norm.
    pub fn postselect(&mut self, qubit: usize, target: PostTarget) -> f64 {
        let bit = 1usize << qubit;
        if let Repr::Basis { index, amp } = &mut self.repr {
            let keep = match target {
                PostTarget::One => Some(*index & bit != 0),
                PostTarget::Zero => Some(*index & bit == 0),
                _ => None,
            };
            if let Some(keep) = keep {
                if !keep {
                    *amp = Complex64::new(0.0, 0.0);
                }
                self.norm_sqr = amp.norm_sqr();
                return self.norm_sqr;
            }
        }
        let v = self.materialize();
        let zero = Complex64::new(0.0, 0.0);
        match target {
            PostTarget::One | PostTarget::Zero => {
                let drop_set = target == PostTarget::Zero;
                for (i, a) in v.iter_mut().enumerate() {
                    if (i & bit != 0) == drop_set {
                        *a = zero;
                    }
                }
            }
            PostTarget::Plus | PostTarget::Minus => {
                let sign = if target == PostTarget::Plus { 1.0 } else { -1.0 };
                for i in 0..v.len() {
                    if i & bit == 0 {
                        let (a0, a1) = (v[i], v[i | bit]);
                        // |phi><phi| with |phi> = (|0> + sign|1>)/sqrt2
                        let c = (a0 + a1 * sign) * 0.5;
                        v[i] = c;
                        v[i | bit] = c * sign;
                    }
                }
            }
        }
        self.norm_sqr = self.recompute_norm_sqr();
        self.gates_since_settle = 0;
        self.norm_sqr
    }

    /// Execute one instruction. Measurements are deferred and do nothing here.
    pub fn apply(&mut self, instr: &Instruction, position: usize) -> Result<(), SimError> {
        match instr {
            Instruction::Apply(op) => self.apply_op(op),
            Instruction::Postselect { qubit, target } => {
                if self.postselect(*qubit, *target) < ZERO_OVERLAP {
                    return Err(SimError::ZeroOverlap { position });
                }
            }
            Instruction::Measure { .. } => {}
        }
        Ok(())
    }
}

pub(crate) fn check_circuit(circuit: &Circuit) -> Result<(), SimError> {
    if circuit.num_qubits() > MAX_QUBITS {
        return Err(SimError::TooWide {
            qubits: circuit.num_qubits(),
            max: MAX_QUBITS,
        });
    }
    match circuit::validate(circuit).first() {
        Some(v) => Err(SimError::InvalidCircuit(v.to_string())),
        None => Ok(()),
    }
}

pub(crate) fn measures(circuit: &Circuit) -> Vec<(String, usize)> {
    circuit
        .instructions()
        .iter()
        .filter_map(|i| match i {
            Instruction::Measure { qubit, label } => Some((label.clone(), *qubit)),
            _ => None,
        })
        .collect()
}

/// A circuit compiled once for repeated runs on different inputs.
pub struct Program<'c> {
    circuit: &'c Circuit,
    steps: Vec<Step>,
}

enum Step {
    Gate(Kernel),
    Marker(usize),
}

impl<'c> Program<'c> {
    pub fn new(circuit: &'c Circuit) -> Result<Program<'c>, SimError> {
        check_circuit(circuit)?;
        Ok(Program::compile_unchecked(circuit))
    }

    fn compile_unchecked(circuit: &'c Circuit) -> Program<'c> {
        let n = circuit.num_qubits();
        let instrs = circuit.instructions();
        let mut steps = Vec::new();
        let mut pos = 0;
        while pos < instrs.len() {
            let run = instrs[pos..]
                .iter()
                .take_while(|i| matches!(i, Instruction::Apply(_)))
                .count();
            if run == 0 {
                steps.push(Step::Marker(pos));
                pos += 1;
                continue;
            }
            let ops = instrs[pos..pos + run].iter().filter_map(|i| match i {
                Instruction::Apply(op) => Some(op),
                _ => None,
            });
            steps.extend(
                kernel::compile(ops, n, SETTLE_EVERY as usize)
                    .into_iter()
                    .map(Step::Gate),
            );
            pos += run;
        }
        Program { circuit, steps }
    }

    pub fn run(&self, initial: StateVector) -> Result<SimulationReport, SimError> {
        let circuit = self.circuit;
        if initial.num_qubits() != circuit.num_qubits() {
            return Err(SimError::WidthMismatch {
                circuit: circuit.num_qubits(),
                state: initial.num_qubits(),
            });
        }
        let mut state = initial;
        for step in &self.steps {
            match step {
                Step::Gate(k) => state.apply_kernel(k),
                Step::Marker(pos) => state.apply(&circuit.instructions()[*pos], *pos)?,
            }
        }
        Ok(SimulationReport::new(
            circuit.num_qubits(),
            circuit.registers().to_vec(),
            measures(circuit),
            vec![(1.0, state)],
        ))
    }
}

/// Execute `circuit` on `initial` and report postselection and measurement
/// statistics.
pub fn run(circuit: &Circuit, initial: StateVector) -> Result<SimulationReport, SimError> {
    Program::new(circuit)?.run(initial)
}

/// Dense unitary of a marker-free circuit, assembled column by column.
pub fn unitary_of(circuit: &Circuit) -> Result<CMatrix, SimError> {
    let n = circuit.num_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(SimError::TooWide {
            qubits: n,
            max: MAX_UNITARY_QUBITS,
        });
    }
    if !circuit.is_unitary() {
        return Err(SimError::NonUnitaryInput);
    }
    check_circuit(circuit)?;
    let dim = 1usize << n;
    let program = Program::compile_unchecked(circuit);
    let mut out = CMatrix::zeros(dim, dim);
    for col in 0..dim {
        let report = program.run(StateVector::basis(n, col))?;
        for (row, amp) in report.final_state().expect("pure run").nonzero() {
            out[(row, col)] = amp;
        }
    }
    Ok(out)
}
