//! Reversible probabilistic automata with exact dyadic acceptance.
//!
//! Each step flips a fair coin and applies permutation `perm0` or `perm1` to
//! the configuration. Bit 0 of the configuration is the accept flag, so
//! after `T` steps the acceptance probability is `a / 2^T` for an integer
//! `a`.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

pub const MAX_WIDTH: usize = 10;
pub const MAX_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("acceptance probability is exactly 1/2")]
    HalfProbability,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Exact `numerator / 2^exponent`. Not reduced, so an acceptance probability
/// keeps its natural exponent `T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    numerator: BigInt,
    exponent: u32,
}

impl Dyadic {
    pub fn new(numerator: impl Into<BigInt>, exponent: u32) -> Dyadic {
        Dyadic {
            numerator: numerator.into(),
            exponent,
        }
    }

    pub fn zero() -> Dyadic {
        Dyadic::new(0, 0)
    }

    pub fn numerator(&self) -> &BigInt {
        &self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Rewrite over `2^exponent` (which must not be below the current one).
    pub fn with_exponent(&self, exponent: u32) -> Dyadic {
        assert!(exponent >= self.exponent);
        Dyadic::new(&self.numerator << (exponent - self.exponent), exponent)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let e = self.exponent.max(other.exponent);
        Dyadic::new(self.with_exponent(e).numerator + other.with_exponent(e).numerator, e)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic::new(-&self.numerator, self.exponent)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    /// Multiply by `2^shift` (shift may be negative).
    pub fn scale_pow2(&self, shift: i64) -> Dyadic {
        if shift >= 0 {
            let s = shift as u32;
            if s <= self.exponent {
                Dyadic::new(self.numerator.clone(), self.exponent - s)
            } else {
                Dyadic::new(&self.numerator << (s - self.exponent), 0)
            }
        } else {
            Dyadic::new(self.numerator.clone(), self.exponent + (-shift) as u32)
        }
    }

    pub fn half() -> Dyadic {
        Dyadic::new(1, 1)
    }

    pub fn is_half(&self) -> bool {
        self.cmp_value(&Dyadic::half()) == std::cmp::Ordering::Equal
    }

    pub fn cmp_value(&self, other: &Dyadic) -> std::cmp::Ordering {
        let e = self.exponent.max(other.exponent);
        self.with_exponent(e).numerator.cmp(&other.with_exponent(e).numerator)
    }

    /// Nearest double (exact whenever the value fits in 53 bits).
    pub fn to_f64(&self) -> f64 {
        let n = self.numerator.to_f64().unwrap_or(f64::NAN);
        n * (-(self.exponent as f64)).exp2()
    }
}

impl fmt::Display for Dyadic {
    /// `a/2^e` written with the denominator expanded, e.g. `3/8`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, BigUint::one() << self.exponent)
    }
}

/// A coin-driven reversible machine on `m`-bit configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    pub m: usize,
    pub steps: usize,
    pub init: usize,
    pub perm0: Vec<usize>,
    pub perm1: Vec<usize>,
}

fn is_permutation(table: &[usize]) -> bool {
    let mut seen = vec![false; table.len()];
    table
        .iter()
        .all(|&v| v < seen.len() && !std::mem::replace(&mut seen[v], true))
}

fn invert(table: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; table.len()];
    for (i, &v) in table.iter().enumerate() {
        inv[v] = i;
    }
    inv
}

impl Automaton {
    pub fn new(
        m: usize,
        steps: usize,
        init: usize,
        perm0: Vec<usize>,
        perm1: Vec<usize>,
    ) -> Result<Automaton, AutomatonError> {
        let a = Automaton {
            m,
            steps,
            init,
            perm0,
            perm1,
        };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<(), AutomatonError> {
        let bad = |msg: String| Err(AutomatonError::Invalid(msg));
        if self.m == 0 || self.m > MAX_WIDTH {
            return bad(format!("width {} outside 1..={MAX_WIDTH}", self.m));
        }
        if self.steps == 0 || self.steps > MAX_STEPS {
            return bad(format!("step count {} outside 1..={MAX_STEPS}", self.steps));
        }
        let size = 1usize << self.m;
        if self.init >= size {
            return bad(format!("initial configuration {} exceeds 2^{}", self.init, self.m));
        }
        for (name, p) in [("perm0", &self.perm0), ("perm1", &self.perm1)] {
            if p.len() != size || !is_permutation(p) {
                return bad(format!("{name} is not a permutation of 0..{size}"));
            }
        }
        Ok(())
    }

    pub fn num_configs(&self) -> usize {
        1 << self.m
    }

    /// Exact configuration distribution after `t` steps, over `2^t`.
    pub fn step_distribution(&self, t: usize) -> Vec<Dyadic> {
        self.path_counts(t)
            .into_iter()
            .map(|c| Dyadic::new(BigInt::from(c), t as u32))
            .collect()
    }

    /// Number of coin strings of length `t` reaching each configuration.
    fn path_counts(&self, t: usize) -> Vec<BigUint> {
        let mut counts = vec![BigUint::zero(); self.num_configs()];
        counts[self.init] = BigUint::one();
        for _ in 0..t {
            let mut next = vec![BigUint::zero(); counts.len()];
            for (c, n) in counts.iter().enumerate() {
                if !n.is_zero() {
                    next[self.perm0[c]] += n;
                    next[self.perm1[c]] += n;
                }
            }
            counts = next;
        }
        counts
    }

    /// Exact `p_a` with exponent `T`, whatever its value.
    pub fn accept_probability_unchecked(&self) -> Dyadic {
        let a: BigUint = self
            .path_counts(self.steps)
            .into_iter()
            .enumerate()
            .filter(|(c, _)| c & 1 == 1)
            .map(|(_, n)| n)
            .sum();
        Dyadic::new(BigInt::from(a), self.steps as u32)
    }

    /// Exact `p_a`; refuses the undecidable-by-construction value 1/2.
    pub fn accept_probability(&self) -> Result<Dyadic, AutomatonError> {
        let p = self.accept_probability_unchecked();
        if p.is_half() {
            Err(AutomatonError::HalfProbability)
        } else {
            Ok(p)
        }
    }

    /// Same machine with the accept flag inverted, so `p_a -> 1 - p_a`.
    pub fn flag_complement(&self) -> Automaton {
        let conj = |p: &[usize]| (0..p.len()).map(|x| p[x ^ 1] ^ 1).collect();
        Automaton {
            m: self.m,
            steps: self.steps,
            init: self.init ^ 1,
            perm0: conj(&self.perm0),
            perm1: conj(&self.perm1),
        }
    }

    /// Conjugate by a configuration relabeling `sigma` that preserves the
    /// accept flag. `p_a` is unchanged.
    pub fn relabel(&self, sigma: &[usize]) -> Result<Automaton, AutomatonError> {
        if sigma.len() != self.num_configs() || !is_permutation(sigma) {
            return Err(AutomatonError::Invalid("relabeling is not a permutation".into()));
        }
        if sigma.iter().enumerate().any(|(x, &y)| x & 1 != y & 1) {
            return Err(AutomatonError::Invalid("relabeling moves the accept flag".into()));
        }
        let inv = invert(sigma);
        let conj = |p: &[usize]| (0..p.len()).map(|x| sigma[p[inv[x]]]).collect();
        Automaton::new(
            self.m,
            self.steps,
            sigma[self.init],
            conj(&self.perm0),
            conj(&self.perm1),
        )
    }

    pub fn to_text(&self) -> String {
        let join = |p: &[usize]| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        format!(
            "m {}\nT {}\ninit {}\nperm0 {}\nperm1 {}\n",
            self.m,
            self.steps,
            self.init,
            join(&self.perm0),
            join(&self.perm1)
        )
    }
}

impl FromStr for Automaton {
    type Err = AutomatonError;

    fn from_str(text: &str) -> Result<Automaton, AutomatonError> {
        let (mut m, mut steps, mut init, mut perm0, mut perm1) = (None, None, None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| AutomatonError::Parse { line: i + 1, message };
            let mut words = line.split_whitespace();
            let key = words.next().unwrap_or("");
            let values: Vec<usize> = words
                .map(|w| {
                    w.parse()
                        .map_err(|_| err(format!("`{w}` is not a non-negative integer")))
                })
                .collect::<Result<_, _>>()?;
            let scalar = || match values.as_slice() {
                [v] => Ok(*v),
                _ => Err(err(format!("`{key}` takes exactly one value"))),
            };
            let slot_taken = |taken: bool| {
                if taken {
                    Err(err(format!("duplicate `{key}`")))
                } else {
                    Ok(())
                }
            };
            match key {
                "m" => {
                    slot_taken(m.is_some())?;
                    m = Some(scalar()?);
                }
                "T" => {
                    slot_taken(steps.is_some())?;
                    steps = Some(scalar()?);
                }
                "init" => {
                    slot_taken(init.is_some())?;
                    init = Some(scalar()?);
                }
                "perm0" => {
                    slot_taken(perm0.is_some())?;
                    perm0 = Some(values);
                }
                "perm1" => {
                    slot_taken(perm1.is_some())?;
                    perm1 = Some(values);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let missing = |k: &str| AutomatonError::Parse {
            line: text.lines().count(),
            message: format!("missing `{k}`"),
        };
        Automaton::new(
            m.ok_or_else(|| missing("m"))?,
            steps.ok_or_else(|| missing("T"))?,
            init.ok_or_else(|| missing("init"))?,
            perm0.ok_or_else(|| missing("perm0"))?,
            perm1.ok_or_else(|| missing("perm1"))?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a38() -> Automaton {
        Automaton::new(2, 3, 0, vec![1, 2, 0, 3], vec![0, 1, 2, 3]).unwrap()
    }

    #[test]
    fn a38_is_three_eighths() {
        let p = a38().accept_probability().unwrap();
        assert_eq!(p, Dyadic::new(3, 3));
        assert_eq!(p.to_string(), "3/8");
        assert_eq!(a38().flag_complement().accept_probability().unwrap(), Dyadic::new(5, 3));
    }

    #[test]
    fn a38_one_step() {
        let d = a38().step_distribution(1);
        assert_eq!(d[0], Dyadic::new(1, 1));
        assert_eq!(d[1], Dyadic::new(1, 1));
        assert_eq!(d[2], Dyadic::new(0, 1));
    }

    #[test]
    fn deterministic_accept() {
        let a = Automaton::new(1, 4, 1, vec![0, 1], vec![0, 1]).unwrap();
        assert_eq!(a.accept_probability().unwrap().to_f64(), 1.0);
        assert_eq!(a.step_distribution(0)[1], Dyadic::new(1, 0));
    }

    #[test]
    fn half_is_refused() {
        let a = Automaton::new(1, 1, 0, vec![1, 0], vec![0, 1]).unwrap();
        assert_eq!(a.accept_probability(), Err(AutomatonError::HalfProbability));
    }

    #[test]
    fn text_round_trip() {
        let a = a38();
        let back: Automaton = a.to_text().parse().unwrap();
        assert_eq!(back, a);
        assert!("m 2\nT 3\ninit 0\nperm0 0 0 1 2\nperm1 0 1 2 3\n"
            .parse::<Automaton>()
            .is_err());
        assert!(matches!(
            "m 2\nT x\n".parse::<Automaton>(),
            Err(AutomatonError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn dyadic_arithmetic() {
        let p = Dyadic::new(3, 3);
        assert_eq!(Dyadic::half().add(&p).to_f64(), 0.875);
        assert_eq!(Dyadic::half().sub(&p).scale_pow2(3).to_f64(), 1.0);
        assert_eq!(p.scale_pow2(-1), Dyadic::new(3, 4));
        assert!(Dyadic::new(4, 3).is_half());
    }

    fn arb_automaton() -> impl Strategy<Value = Automaton> {
        (1usize..4, 1usize..7).prop_flat_map(|(m, t)| {
            let size = 1usize << m;
            let perm = Just((0..size).collect::<Vec<_>>()).prop_shuffle();
            (Just(m), Just(t), 0..size, perm.clone(), perm)
                .prop_map(|(m, t, i, p0, p1)| Automaton::new(m, t, i, p0, p1).unwrap())
        })
    }

    proptest! {
        #[test]
        fn distribution_is_stochastic(a in arb_automaton()) {
            for t in 0..=a.steps {
                let d = a.step_distribution(t);
                let total = d.iter().fold(Dyadic::zero(), |acc, x| acc.add(x));
                prop_assert!(total.cmp_value(&Dyadic::new(1, 0)).is_eq());
            }
        }

        #[test]
        fn step_is_uniform_average(a in arb_automaton()) {
            for t in 1..=a.steps {
                let prev = a.step_distribution(t - 1);
                let cur = a.step_distribution(t);
                let mut expect = vec![Dyadic::zero(); prev.len()];
                for (c, p) in prev.iter().enumerate() {
                    let half = p.scale_pow2(-1);
                    expect[a.perm0[c]] = expect[a.perm0[c]].add(&half);
                    expect[a.perm1[c]] = expect[a.perm1[c]].add(&half);
                }
                for (x, y) in cur.iter().zip(&expect) {
                    prop_assert!(x.cmp_value(y).is_eq());
                }
            }
        }

        #[test]
        fn exponent_is_step_count(a in arb_automaton()) {
            prop_assert_eq!(a.accept_probability_unchecked().exponent(), a.steps as u32);
        }

        #[test]
        fn relabeling_preserves_acceptance(a in arb_automaton(), seed in any::<u64>()) {
            // flag-preserving relabeling: shuffle the upper bits only
            let upper = a.num_configs() / 2;
            let mut hi: Vec<usize> = (0..upper).collect();
            let mut s = seed;
            for i in (1..upper).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                hi.swap(i, (s >> 33) as usize % (i + 1));
            }
            let sigma: Vec<usize> = (0..a.num_configs()).map(|x| hi[x >> 1] << 1 | (x & 1)).collect();
            let b = a.relabel(&sigma).unwrap();
            prop_assert_eq!(a.accept_probability_unchecked(), b.accept_probability_unchecked());
        }

        #[test]
        fn complement_flips_probability(a in arb_automaton()) {
            let p = a.accept_probability_unchecked();
            let q = a.flag_complement().accept_probability_unchecked();
            prop_assert!(p.add(&q).cmp_value(&Dyadic::new(1, 0)).is_eq());
        }
    }
}
