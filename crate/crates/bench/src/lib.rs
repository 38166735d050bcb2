//! Fixed workloads shared by the criterion benches in `benches/`.

use cdsolve_core::oracle::generate::{planted_instance, GeneratedInstance, InstanceParams};
use cdsolve_core::{FiniteAlgebra, RelStructure};

/// Directed `n`-cycle on a single binary relation `E`.
pub fn cycle(n: usize) -> RelStructure {
    let edges = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    RelStructure::from_parts(n, vec![("E", 2, edges)]).expect("well formed")
}

/// The disequality relation on `n` elements.
pub fn clique(n: usize) -> RelStructure {
    let edges = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| vec![i, j])).collect();
    RelStructure::from_parts(n, vec![("E", 2, edges)]).expect("well formed")
}

/// Two-element Pixley algebra: simple and ideal free.
pub fn pixley2() -> FiniteAlgebra {
    FiniteAlgebra::from_fns(2, |a| a[0], |a| if a[0] == a[1] { a[2] } else { a[0] }, |a| a[2]).expect("tables")
}

/// Satisfiable generated instances with larger bounds than the test suite.
pub fn planted_batch(count: u64) -> Vec<GeneratedInstance> {
    let params = InstanceParams { max_instance: 8, max_instance_tuples: 10, ..InstanceParams::default() };
    (0..count).map(|s| planted_instance(s, &params).expect("generation")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_well_formed() {
        assert_eq!(cycle(5).relation("E").unwrap().tuples().len(), 5);
        assert_eq!(clique(3).relation("E").unwrap().tuples().len(), 6);
        assert!(cdsolve_core::jonsson::verify_cd4(&pixley2()).ok);
        assert_eq!(planted_batch(3).len(), 3);
    }
}
