#![allow(dead_code)]

use postforge::automaton::{Automaton, Dyadic};

pub struct Entry {
    pub steps: usize,
    pub a: u64,
    pub automaton: Automaton,
}

impl Entry {
    pub fn p_a(&self) -> Dyadic {
        Dyadic::new(self.a, self.steps as u32)
    }
}

pub fn battery() -> Vec<Entry> {
    include_str!("../data/battery.txt")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|line| {
            let (head, perm1) = line.split_once('|').expect("two permutations");
            let nums: Vec<usize> = head.split_whitespace().map(|t| t.parse().unwrap()).collect();
            let perm1: Vec<usize> = perm1.split_whitespace().map(|t| t.parse().unwrap()).collect();
            let (steps, a, m, init) = (nums[0], nums[1] as u64, nums[2], nums[3]);
            let automaton = Automaton::new(m, steps, init, nums[4..].to_vec(), perm1).unwrap();
            Entry { steps, a, automaton }
        })
        .collect()
}

/// The battery up to `max_steps` coin flips.
pub fn battery_upto(max_steps: usize) -> Vec<Entry> {
    battery().into_iter().filter(|e| e.steps <= max_steps).collect()
}

pub fn a38() -> Automaton {
    "m 2\nT 3\ninit 0\nperm0 1 2 0 3\nperm1 0 1 2 3\n".parse().unwrap()
}

// Brute-force and closed-form oracles, written independently of the library.
pub mod oracle {
    use num_complex::Complex64;
    use postforge::linalg::CMatrix;
    use postforge::sim::StateVector;

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    /// `Σ_c G_c ⊗ |c><c|` with `G_c = g` where `fire(c)` and identity
    /// elsewhere; the `k` control qubits are the low bits.
    pub fn projector_sum(g: &CMatrix, k: usize, fire: impl Fn(usize) -> bool) -> CMatrix {
        let id = CMatrix::identity(g.nrows(), g.ncols());
        let mut out = CMatrix::zeros(g.nrows() << k, g.ncols() << k);
        for c in 0..1usize << k {
            let mut proj = CMatrix::zeros(1 << k, 1 << k);
            proj[(c, c)] = one();
            let block = if fire(c) { g } else { &id };
            out += block.kronecker(&proj);
        }
        out
    }

    pub fn cyclic_shift(n: usize) -> CMatrix {
        let dim = 1usize << n;
        let mut m = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            m[((j + 1) % dim, j)] = one();
        }
        m
    }

    pub fn all_ones(k: usize) -> impl Fn(usize) -> bool {
        move |c| c == (1 << k) - 1
    }

    pub fn any_one(c: usize) -> bool {
        c != 0
    }

    /// Unnormalized `|Ψ_k>` coefficients for `p_a = a / 2^T`.
    pub fn psi(a: u64, steps: usize, k: usize) -> (f64, f64) {
        let p = a as f64 / (steps as f64).exp2();
        (0.5 + p, ((steps - k) as f64).exp2() * (0.5 - p))
    }

    /// `(Π α_k², Π β_k²)` over every stage.
    pub fn products(a: u64, steps: usize) -> (f64, f64) {
        (0..=steps).fold((1.0, 1.0), |(pa, pb), k| {
            let (c0, c1) = psi(a, steps, k);
            let (al, be) = ((c0 + c1) / 2f64.sqrt(), (c0 - c1) / 2f64.sqrt());
            (pa * al * al, pb * be * be)
        })
    }

    /// `(P[W=0], P[W=1])` from the amplitude ratio of the two branches.
    pub fn w_statistics(a: u64, steps: usize, r: usize) -> (f64, f64) {
        let (pa, pb) = products(a, steps);
        let (x, y) = (pa.powi(2 * r as i32), pb.powi(2 * r as i32));
        (x / (x + y), y / (x + y))
    }

    /// Relative distance of the good branch (indices whose `bad_mask` bits
    /// are clear) from the closest multiple of `c0|e0> + c1|e1>`, and the
    /// good branch norm.
    pub fn stage_residual(
        state: &StateVector,
        e0: usize,
        e1: usize,
        bad_mask: usize,
        coeffs: (f64, f64),
    ) -> (f64, f64) {
        let (c0, c1) = coeffs;
        let mut good = 0.0;
        let mut stray = 0.0;
        for (i, a) in state.nonzero() {
            if i & bad_mask == 0 {
                good += a.norm_sqr();
                if i != e0 && i != e1 {
                    stray += a.norm_sqr();
                }
            }
        }
        let (v0, v1) = (state.amplitude(e0), state.amplitude(e1));
        let lambda = (v0 * c0 + v1 * c1) / (c0 * c0 + c1 * c1);
        let off = (v0 - lambda * c0).norm_sqr() + (v1 - lambda * c1).norm_sqr() + stray;
        ((off / good).sqrt(), good.sqrt())
    }
}

/// Same acceptance probability, different machine: an idle extra
/// configuration bit that every transition leaves alone.
pub fn widen(aut: &Automaton) -> Automaton {
    let low = aut.num_configs() - 1;
    let lift = |p: &[usize]| (0..2 * aut.num_configs()).map(|x| p[x & low] | (x & !low)).collect();
    Automaton::new(aut.m + 1, aut.steps, aut.init, lift(&aut.perm0), lift(&aut.perm1)).unwrap()
}
