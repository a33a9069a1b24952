//! Precompiled gate action on a full register.

use num_complex::Complex64;

use crate::circuit::{Gate, Op};

#[derive(Debug, Clone)]
enum Action {
    /// Column `l` has a single nonzero `phase` in row `to`.
    Monomial(Vec<(usize, Complex64)>),
    /// Row-major `dim x dim`.
    Dense(Vec<Complex64>),
    /// Nonzero `(row, value)` entries of each column.
    Sparse(Vec<Vec<(usize, Complex64)>>),
}

#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    /// Global bit pattern for each local index.
    offsets: Vec<usize>,
    target_mask: usize,
    ctrl_mask: usize,
    ctrl_value: usize,
    /// Bits not touched by the op, within the register.
    free_mask: usize,
    targets: Vec<usize>,
    action: Action,
    /// Number of circuit gates this kernel stands for.
    pub(crate) gates: u32,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn action_of(gate: &Gate) -> Action {
    match gate {
        Gate::X => Action::Monomial(vec![(1, ONE), (0, ONE)]),
        Gate::Cx => Action::Monomial(vec![(0, ONE), (3, ONE), (2, ONE), (1, ONE)]),
        Gate::T | Gate::Tdg => {
            let sign = if matches!(gate, Gate::T) { 1.0 } else { -1.0 };
            let phase = Complex64::from_polar(1.0, sign * std::f64::consts::FRAC_PI_4);
            Action::Monomial(vec![(0, ONE), (1, phase)])
        }
        Gate::Perm(p) => Action::Monomial(p.table.iter().map(|&to| (to, ONE)).collect()),
        Gate::H | Gate::Unitary(_) => {
            let m = gate.matrix();
            let dim = m.nrows();
            let monomial: Option<Vec<(usize, Complex64)>> = (0..dim)
                .map(|col| {
                    let mut nz = (0..dim).filter(|&row| m[(row, col)] != ZERO);
                    match (nz.next(), nz.next()) {
                        (Some(row), None) => Some((row, m[(row, col)])),
                        _ => None,
                    }
                })
                .collect();
            match monomial {
                Some(cols) => Action::Monomial(cols),
                None => {
                    let mut rows = Vec::with_capacity(dim * dim);
                    for r in 0..dim {
                        for c in 0..dim {
                            rows.push(m[(r, c)]);
                        }
                    }
                    Action::Dense(rows)
                }
            }
        }
    }
}

impl Kernel {
    pub(crate) fn new(op: &Op, num_qubits: usize) -> Kernel {
        let targets = op.qubits.clone();
        let dim = 1usize << targets.len();
        let offsets = (0..dim)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| l >> i & 1 == 1)
                    .fold(0, |acc, (_, &q)| acc | 1 << q)
            })
            .collect();
        let target_mask = targets.iter().fold(0, |acc, &q| acc | 1 << q);
        let ctrl_mask = op.controls.iter().fold(0, |acc, c| acc | 1 << c.qubit);
        let ctrl_value = op
            .controls
            .iter()
            .filter(|c| c.polarity)
            .fold(0, |acc, c| acc | 1 << c.qubit);
        let all = if num_qubits == 0 {
            0
        } else {
            usize::MAX >> (usize::BITS as usize - num_qubits)
        };
        Kernel {
            offsets,
            target_mask,
            ctrl_mask,
            ctrl_value,
            free_mask: all & !(target_mask | ctrl_mask),
            targets,
            action: action_of(&op.gate),
            gates: 1,
        }
    }

    fn is_monomial(&self) -> bool {
        matches!(self.action, Action::Monomial(_))
    }

    /// Image of a sparse vector, duplicates merged and exact zeros dropped.
    fn apply_sparse(&self, input: &[(usize, Complex64)]) -> Vec<(usize, Complex64)> {
        let dim = self.offsets.len();
        let mut out = Vec::with_capacity(input.len());
        for &(i, a) in input {
            if i & self.ctrl_mask != self.ctrl_value {
                out.push((i, a));
                continue;
            }
            let l = self.local_index(i);
            let rest = i & !self.target_mask;
            match &self.action {
                Action::Monomial(cols) => {
                    let (to, phase) = cols[l];
                    out.push((rest | self.offsets[to], a * phase));
                }
                Action::Dense(m) => {
                    for r in 0..dim {
                        let x = m[r * dim + l];
                        if x != ZERO {
                            out.push((rest | self.offsets[r], a * x));
                        }
                    }
                }
                Action::Sparse(cols) => {
                    out.extend(cols[l].iter().map(|&(r, x)| (rest | self.offsets[r], a * x)));
                }
            }
        }
        out.sort_unstable_by_key(|e| e.0);
        out.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        out.retain(|e| e.1 != ZERO);
        out
    }

    /// One kernel for a run of gates: the controls every gate shares stay
    /// controls, everything else any gate touches becomes a local qubit.
    fn fused(group: &[Kernel], ctrl_mask: usize, ctrl_value: usize, num_qubits: usize) -> Kernel {
        let local_mask = group.iter().fold(0, |acc, k| acc | k.target_mask | k.ctrl_mask) & !ctrl_mask;
        let targets: Vec<usize> = (0..num_qubits).filter(|q| local_mask >> q & 1 == 1).collect();
        let dim = 1usize << targets.len();
        let offsets: Vec<usize> = (0..dim)
            .map(|l| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| l >> i & 1 == 1)
                    .fold(0, |acc, (_, &q)| acc | 1 << q)
            })
            .collect();
        let mut fused = Kernel {
            free_mask: group[0].free_mask | group[0].target_mask | group[0].ctrl_mask,
            offsets,
            target_mask: local_mask,
            ctrl_mask,
            ctrl_value,
            targets,
            action: Action::Monomial(Vec::new()),
            gates: group.iter().map(|k| k.gates).sum(),
        };
        fused.free_mask &= !(local_mask | ctrl_mask);
        let cols: Vec<Vec<(usize, Complex64)>> = (0..dim)
            .map(|l| {
                let start = vec![(fused.offsets[l] | ctrl_value, ONE)];
                group
                    .iter()
                    .fold(start, |v, k| k.apply_sparse(&v))
                    .into_iter()
                    .map(|(i, a)| (fused.local_index(i), a))
                    .collect()
            })
            .collect();
        fused.action = if cols.iter().all(|c| c.len() == 1) {
            Action::Monomial(cols.into_iter().map(|c| c[0]).collect())
        } else {
            Action::Sparse(cols)
        };
        fused
    }

    fn local_index(&self, index: usize) -> usize {
        self.targets
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &q)| acc | (index >> q & 1) << i)
    }

    /// Image of a basis vector if it is again a (scaled) basis vector.
    pub(crate) fn on_basis(&self, index: usize) -> Option<(usize, Complex64)> {
        if index & self.ctrl_mask != self.ctrl_value {
            return Some((index, ONE));
        }
        let l = self.local_index(index);
        let rest = index & !self.target_mask;
        match &self.action {
            Action::Monomial(cols) => {
                let (to, phase) = cols[l];
                Some((rest | self.offsets[to], phase))
            }
            Action::Dense(m) => {
                let dim = self.offsets.len();
                let mut nz = (0..dim).filter(|&r| m[r * dim + l] != ZERO);
                match (nz.next(), nz.next()) {
                    (Some(r), None) => Some((rest | self.offsets[r], m[r * dim + l])),
                    _ => None,
                }
            }
            Action::Sparse(cols) => match cols[l][..] {
                [(r, x)] => Some((rest | self.offsets[r], x)),
                _ => None,
            },
        }
    }

    /// Visit every base index (free bits varying, controls satisfied,
    /// targets zero) in increasing order.
    fn for_each_base(&self, mut f: impl FnMut(usize)) {
        let fixed = !self.free_mask;
        let mut j = 0usize;
        loop {
            f(j | self.ctrl_value);
            j = ((j | fixed).wrapping_add(1)) & self.free_mask;
            if j == 0 {
                break;
            }
        }
    }

    pub(crate) fn apply(&self, v: &mut [Complex64]) {
        let dim = self.offsets.len();
        match &self.action {
            Action::Dense(m) if dim == 2 => {
                let (a, b, c, d) = (m[0], m[1], m[2], m[3]);
                let t = self.offsets[1];
                self.for_each_base(|base| {
                    let (x0, x1) = (v[base], v[base | t]);
                    v[base] = a * x0 + b * x1;
                    v[base | t] = c * x0 + d * x1;
                });
            }
            Action::Dense(m) => {
                let mut buf = vec![ZERO; dim];
                self.for_each_base(|base| {
                    for (l, slot) in buf.iter_mut().enumerate() {
                        *slot = v[base | self.offsets[l]];
                    }
                    for r in 0..dim {
                        let row = &m[r * dim..(r + 1) * dim];
                        v[base | self.offsets[r]] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
                    }
                });
            }
            Action::Monomial(cols) => {
                let mut buf = vec![ZERO; dim];
                self.for_each_base(|base| {
                    for (l, slot) in buf.iter_mut().enumerate() {
                        *slot = v[base | self.offsets[l]];
                    }
                    for (l, &(to, phase)) in cols.iter().enumerate() {
                        v[base | self.offsets[to]] = buf[l] * phase;
                    }
                });
            }
            Action::Sparse(cols) => {
                let mut buf = vec![ZERO; dim];
                let mut out = vec![ZERO; dim];
                self.for_each_base(|base| {
                    for (l, slot) in buf.iter_mut().enumerate() {
                        *slot = v[base | self.offsets[l]];
                    }
                    out.fill(ZERO);
                    for (col, &x) in cols.iter().zip(&buf) {
                        if x != ZERO {
                            for &(r, a) in col {
                                out[r] += a * x;
                            }
                        }
                    }
                    for (l, &y) in out.iter().enumerate() {
                        v[base | self.offsets[l]] = y;
                    }
                });
            }
        }
    }
}

/// Local-register limits for fused kernels: wide for permutation-like runs,
/// narrow once a gate creates superpositions.
const FUSE_MONOMIAL: u32 = 10;
const FUSE_MIXED: u32 = 8;
/// At most this many qubits may be targeted by superposing gates in one
/// group, so fused columns hold at most `2^FUSE_SPREAD` entries.
const FUSE_SPREAD: u32 = 4;

/// Compile a run of gates into kernels, fusing neighbours whenever one
/// pass over the state is no more work than separate passes.
/// Groups stop at `max_gates` so callers can still settle the norm between
/// kernels.
pub(crate) fn compile<'a>(ops: impl IntoIterator<Item = &'a Op>, num_qubits: usize, max_gates: usize) -> Vec<Kernel> {
    let mut out = Vec::new();
    let mut group: Vec<Kernel> = Vec::new();
    // shared controls, union of touched qubits, separate-pass cost in units of 2^n
    let (mut cm, mut cv, mut touched, mut monomial, mut cost) = (0usize, 0usize, 0usize, true, 0f64);
    let mut spread = 0usize;
    let flush = |group: &mut Vec<Kernel>, cm: usize, cv: usize, out: &mut Vec<Kernel>| match group.len() {
        0 => {}
        1 => out.push(group.pop().unwrap()),
        _ => {
            out.push(Kernel::fused(group, cm, cv, num_qubits));
            group.clear();
        }
    };
    for op in ops {
        let k = Kernel::new(op, num_qubits);
        let own_cost = (-(k.ctrl_mask.count_ones() as f64)).exp2();
        let own_spread = if k.is_monomial() { 0 } else { k.target_mask };
        if !group.is_empty() {
            let ncm = cm & k.ctrl_mask & !(cv ^ k.ctrl_value);
            let ntouched = touched | k.target_mask | k.ctrl_mask;
            let mono = monomial && k.is_monomial();
            let width = (ntouched & !ncm).count_ones();
            let limit = if mono { FUSE_MONOMIAL } else { FUSE_MIXED };
            let nspread = spread | own_spread;
            if group.len() < max_gates
                && width <= limit
                && nspread.count_ones() <= FUSE_SPREAD
                && (-(ncm.count_ones() as f64)).exp2() <= cost + own_cost
            {
                cm = ncm;
                cv &= ncm;
                touched = ntouched;
                monomial = mono;
                cost += own_cost;
                spread = nspread;
                group.push(k);
                continue;
            }
            flush(&mut group, cm, cv, &mut out);
        }
        cm = k.ctrl_mask;
        cv = k.ctrl_value;
        touched = k.target_mask | k.ctrl_mask;
        monomial = k.is_monomial();
        cost = own_cost;
        spread = own_spread;
        group.push(k);
    }
    flush(&mut group, cm, cv, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Control;
    use crate::sim::StateVector;
    use proptest::prelude::*;

    const N: usize = 7;

    fn op_from(code: (u8, u8, u8, u8)) -> Op {
        let (g, t, c, pol) = code;
        let t = t as usize % N;
        let u = (t + 1 + c as usize % (N - 1)) % N;
        let (gate, qubits) = match g % 7 {
            0 => (Gate::H, vec![t]),
            1 => (Gate::X, vec![t]),
            2 => (Gate::T, vec![t]),
            3 => (Gate::Tdg, vec![t]),
            4 => (Gate::Cx, vec![t, u]),
            5 => (Gate::perm("p", vec![2, 0, 3, 1]), vec![t, u]),
            _ => {
                let (s, co) = (0.6f64, 0.8f64);
                let m = crate::linalg::real(2, 2, &[co, -s, s, co]);
                (Gate::unitary("rot", m), vec![t])
            }
        };
        let controls: Vec<Control> = (0..N)
            .filter(|q| !qubits.contains(q) && (c >> (q % 8)) & 1 == 1)
            .take(3)
            .map(|q| Control {
                qubit: q,
                polarity: pol >> (q % 8) & 1 == 1,
            })
            .collect();
        Op::new(gate, qubits).controlled(controls)
    }

    #[test]
    fn neighbours_fuse_but_cheap_gates_stay_alone() {
        let ops = [op_from((1, 0, 0, 0)), op_from((0, 1, 0, 0)), op_from((4, 2, 0, 0))];
        let ks = compile(&ops, N, 256);
        assert_eq!(ks.len(), 1);
        assert_eq!(ks[0].gates, 3);
        // two heavily controlled gates on different controls: fusing would
        // widen the pass, so they stay apart
        let a = Op::new(Gate::X, vec![0]).controlled([Control::on(1), Control::on(2), Control::on(3)]);
        let b = Op::new(Gate::X, vec![0]).controlled([Control::on(4), Control::on(5), Control::on(6)]);
        assert_eq!(compile(&[a, b], N, 256).len(), 2);
    }

    proptest! {
        #[test]
        fn fusion_matches_gate_by_gate(
            codes in proptest::collection::vec(any::<(u8, u8, u8, u8)>(), 1..60),
            start in 0usize..(1 << N),
            dense in any::<bool>(),
        ) {
            let ops: Vec<Op> = codes.into_iter().map(op_from).collect();
            let initial = if dense {
                let amps = (0..1 << N)
                    .map(|i| Complex64::new(((i * 7 + start) % 11) as f64 - 5.0, (i % 3) as f64))
                    .collect();
                StateVector::from_amplitudes(amps).unwrap()
            } else {
                StateVector::basis(N, start)
            };
            let mut slow = initial.clone();
            for op in &ops {
                slow.apply_kernel(&Kernel::new(op, N));
            }
            let mut fast = initial;
            for k in compile(&ops, N, 256) {
                fast.apply_kernel(&k);
            }
            prop_assert!(fast.distance(&slow) < 1e-12 * slow.norm_sqr().sqrt().max(1.0));
        }
    }
}
