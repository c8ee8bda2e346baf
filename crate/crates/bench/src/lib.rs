//! Shared setup for the criterion benchmarks.

use hfide_core::{Discretization, GaussLegendre, ProblemFile};

/// A built-in problem and its discretization with the default quadrature.
pub fn builtin(name: &str) -> (ProblemFile, Discretization) {
    let pf = ProblemFile::builtin(name)
        .expect("known built-in")
        .expect("built-in parses");
    let d = Discretization::new(&pf.problem, &pf.cfg, &GaussLegendre::default())
        .expect("built-in discretizes");
    (pf, d)
}
