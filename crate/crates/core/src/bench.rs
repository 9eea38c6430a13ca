//! Published reference constants for the standard benchmark corpus:
//! per-program upper bounds from the original tool and the sampled lower
//! bounds from its evaluation, used as comparison columns and acceptance
//! targets. Values are reference data, not recomputed.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Polynomial,
    Semialgebraic,
    Constrained,
    Conditional,
    Transcendental,
}

#[derive(Debug, Clone, Copy)]
pub struct BenchRef {
    pub id: &'static str,
    pub letter: &'static str,
    pub category: Category,
    /// published upper bound of the reference implementation (None where
    /// it ran out of memory)
    pub reference_bound: Option<f64>,
    /// published sampled lower bound
    pub lower_bound: f64,
    /// excluded from the default run (reference itself failed on it)
    pub excluded: bool,
}

pub const TABLE: &[BenchRef] = &[
    BenchRef { id: "rigidbody1", letter: "a", category: Category::Polynomial, reference_bound: Some(5.33e-13), lower_bound: 2.28e-13, excluded: false },
    BenchRef { id: "rigidbody2", letter: "b", category: Category::Polynomial, reference_bound: Some(6.48e-11), lower_bound: 2.19e-11, excluded: false },
    BenchRef { id: "kepler0", letter: "c", category: Category::Polynomial, reference_bound: Some(1.18e-13), lower_bound: 2.23e-14, excluded: false },
    BenchRef { id: "kepler1", letter: "d", category: Category::Polynomial, reference_bound: Some(4.47e-13), lower_bound: 7.58e-14, excluded: false },
    BenchRef { id: "kepler2", letter: "e", category: Category::Polynomial, reference_bound: Some(2.09e-12), lower_bound: 3.03e-13, excluded: false },
    BenchRef { id: "sineTaylor", letter: "f", category: Category::Polynomial, reference_bound: Some(6.03e-16), lower_bound: 2.85e-16, excluded: false },
    BenchRef { id: "sineOrder3", letter: "g", category: Category::Polynomial, reference_bound: Some(1.19e-15), lower_bound: 3.34e-16, excluded: false },
    BenchRef { id: "sqroot", letter: "h", category: Category::Polynomial, reference_bound: Some(1.29e-15), lower_bound: 4.45e-16, excluded: false },
    BenchRef { id: "himmilbeau", letter: "i", category: Category::Polynomial, reference_bound: Some(1.43e-12), lower_bound: 1.47e-13, excluded: false },
    BenchRef { id: "doppler1", letter: "j", category: Category::Semialgebraic, reference_bound: Some(7.65e-12), lower_bound: 7.11e-14, excluded: false },
    BenchRef { id: "doppler2", letter: "k", category: Category::Semialgebraic, reference_bound: Some(1.57e-11), lower_bound: 1.14e-13, excluded: false },
    BenchRef { id: "doppler3", letter: "l", category: Category::Semialgebraic, reference_bound: Some(8.55e-12), lower_bound: 4.27e-14, excluded: false },
    BenchRef { id: "verhulst", letter: "m", category: Category::Semialgebraic, reference_bound: Some(4.67e-16), lower_bound: 2.23e-16, excluded: false },
    BenchRef { id: "carbonGas", letter: "n", category: Category::Semialgebraic, reference_bound: Some(2.21e-8), lower_bound: 4.11e-9, excluded: false },
    BenchRef { id: "predPrey", letter: "o", category: Category::Semialgebraic, reference_bound: Some(2.52e-16), lower_bound: 1.47e-16, excluded: false },
    BenchRef { id: "turbine1", letter: "p", category: Category::Semialgebraic, reference_bound: Some(2.45e-11), lower_bound: 1.07e-14, excluded: false },
    BenchRef { id: "turbine2", letter: "q", category: Category::Semialgebraic, reference_bound: Some(2.08e-12), lower_bound: 1.43e-14, excluded: false },
    BenchRef { id: "turbine3", letter: "r", category: Category::Semialgebraic, reference_bound: Some(1.71e-11), lower_bound: 5.33e-15, excluded: false },
    BenchRef { id: "jet", letter: "s", category: Category::Semialgebraic, reference_bound: None, lower_bound: 5.46e-12, excluded: true },
    BenchRef { id: "floudas2_6", letter: "t", category: Category::Constrained, reference_bound: Some(5.15e-13), lower_bound: 4.56e-14, excluded: false },
    BenchRef { id: "floudas3_3", letter: "u", category: Category::Constrained, reference_bound: Some(5.81e-13), lower_bound: 1.48e-13, excluded: false },
    BenchRef { id: "floudas3_4", letter: "v", category: Category::Constrained, reference_bound: Some(2.78e-15), lower_bound: 3.80e-16, excluded: false },
    BenchRef { id: "floudas4_6", letter: "w", category: Category::Constrained, reference_bound: Some(1.82e-15), lower_bound: 2.35e-16, excluded: false },
    BenchRef { id: "floudas4_7", letter: "x", category: Category::Constrained, reference_bound: Some(1.06e-14), lower_bound: 7.31e-15, excluded: false },
    BenchRef { id: "cav10", letter: "y", category: Category::Conditional, reference_bound: Some(2.91), lower_bound: 2.90, excluded: false },
    BenchRef { id: "perin", letter: "z", category: Category::Conditional, reference_bound: Some(2.01), lower_bound: 2.00, excluded: false },
    BenchRef { id: "logexp", letter: "alpha", category: Category::Transcendental, reference_bound: Some(2.52e-15), lower_bound: 1.19e-15, excluded: false },
    BenchRef { id: "sphere", letter: "beta", category: Category::Transcendental, reference_bound: Some(1.53e-14), lower_bound: 5.05e-15, excluded: false },
    BenchRef { id: "hartman3", letter: "gamma", category: Category::Transcendental, reference_bound: Some(2.99e-13), lower_bound: 1.10e-15, excluded: false },
    BenchRef { id: "hartman6", letter: "delta", category: Category::Transcendental, reference_bound: Some(5.09e-13), lower_bound: 2.20e-15, excluded: false },
];

pub fn lookup(id: &str) -> Option<&'static BenchRef> {
    TABLE.iter().find(|r| r.id == id)
}
