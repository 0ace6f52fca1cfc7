//! Inputs shared by the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umwelt_core::CoverageMatrix;

/// Random coverage matrix with `n` agents and `m` findings at the given density.
pub fn random_matrix(n: usize, m: usize, density: f64, seed: u64) -> CoverageMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sets: Vec<Vec<usize>> = (0..n).map(|_| (0..m).filter(|_| rng.random_bool(density)).collect()).collect();
    let agents = (0..n).map(|i| format!("a{i}")).collect();
    let findings = (0..m).map(|j| format!("f{j}")).collect();
    CoverageMatrix::from_sets(agents, findings, &sets).expect("valid matrix")
}

/// A few paragraphs of model-style prose for the checkers.
pub fn sample_text(paragraphs: usize) -> String {
    const PARA: &str = "The second premise states that every member of the set shares the property. \
        If that holds, the conclusion follows, because the first premise has already placed the \
        subject inside the set. Nothing in the argument is ambiguous, and we have no reason to doubt \
        either premise. It's therefore valid; the answer resides in Option B.\n\n";
    PARA.repeat(paragraphs)
}
