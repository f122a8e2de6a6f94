//! Shared instance builders for the criterion benchmarks.

use blockqp::gen::{gen_mcf, random_mcf, McfObjective};
use blockqp::BlockAngularProblem;

/// Medium network instance: large enough that kernel costs dominate the
/// harness, small enough for quick benchmark runs.
pub fn medium_mcf_quad() -> BlockAngularProblem {
    let (graph, commodities) = random_mcf(200, 800, 5, 8).unwrap();
    gen_mcf(&graph, &commodities, &McfObjective::Quad(1.0)).unwrap()
}
