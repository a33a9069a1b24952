pub mod automaton;
pub mod circuit;
pub mod cli;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod sim;
pub mod synth;

/// Shortest round-trip decimal, switching to scientific notation for tiny
/// magnitudes so that `1e-12` doesn't print as a run of zeros.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || v.abs() >= 1e-4 || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/automata.md")]
    mod automata {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/dqc1.md")]
    mod dqc1 {}
}
