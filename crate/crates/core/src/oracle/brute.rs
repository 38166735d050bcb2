//! Exhaustive homomorphism search, the ground truth for the solver.

use crate::error::{Error, Result};
use crate::relstruct::RelStructure;

/// Default cap on `|B|^|A|`.
pub const DEFAULT_MAP_BUDGET: u128 = 1 << 32;

/// Lexicographically least homomorphism `A -> B` by backtracking, or `None`.
///
/// Refuses with a resource error when `|B|^|A|` exceeds `budget`.
pub fn brute_force_hom(a: &RelStructure, b: &RelStructure, budget: u128) -> Result<Option<Vec<usize>>> {
    a.check_same_vocabulary(b)?;
    let (na, nb) = (a.universe(), b.universe());
    let space = (nb as u128).checked_pow(na as u32).unwrap_or(u128::MAX);
    if space > budget {
        return Err(Error::Resource(format!("{nb}^{na} candidate maps exceed the budget of {budget}")));
    }
    // Each constraint is checked once its largest element is assigned.
    let mut due: Vec<Vec<(&str, &[usize])>> = vec![Vec::new(); na];
    for (name, rel) in a.relations() {
        for t in rel.tuples() {
            let last = *t.iter().max().expect("arity is at least 1");
            due[last].push((name.as_str(), t.as_slice()));
        }
    }
    let mut h = vec![0usize; na];
    let mut image = Vec::new();
    let mut x = 0;
    let mut fresh = true;
    // Iterative depth-first search; `fresh` means h[x] starts at 0.
    loop {
        if x == na {
            return Ok(Some(h));
        }
        if fresh {
            h[x] = 0;
        } else {
            h[x] += 1;
        }
        if h[x] >= nb {
            if x == 0 {
                return Ok(None);
            }
            x -= 1;
            fresh = false;
            continue;
        }
        let ok = due[x].iter().all(|(name, t)| {
            image.clear();
            image.extend(t.iter().map(|&e| h[e]));
            b.relation(name).expect("same vocabulary").contains(&image)
        });
        if ok {
            x += 1;
            fresh = true;
        } else {
            fresh = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relstruct::is_homomorphism;

    fn cycle(n: usize) -> RelStructure {
        let e = (0..n).flat_map(|i| [vec![i, (i + 1) % n], vec![(i + 1) % n, i]]).collect();
        RelStructure::from_parts(n, vec![("E", 2, e)]).unwrap()
    }

    fn k2() -> RelStructure {
        RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1], vec![1, 0]])]).unwrap()
    }

    #[test]
    fn odd_and_even_cycles() {
        assert_eq!(brute_force_hom(&cycle(3), &k2(), DEFAULT_MAP_BUDGET).unwrap(), None);
        assert_eq!(brute_force_hom(&cycle(4), &k2(), DEFAULT_MAP_BUDGET).unwrap(), Some(vec![0, 1, 0, 1]));
    }

    #[test]
    fn self_map_exists() {
        let c = cycle(5);
        let h = brute_force_hom(&c, &c, DEFAULT_MAP_BUDGET).unwrap().unwrap();
        assert!(is_homomorphism(&h, &c, &c).unwrap());
    }

    #[test]
    fn budget_and_empty_instance() {
        assert!(matches!(brute_force_hom(&cycle(4), &k2(), 15), Err(Error::Resource(_))));
        let a = RelStructure::from_parts(1, vec![("E", 2, vec![])]).unwrap();
        assert_eq!(brute_force_hom(&a, &k2(), 2).unwrap(), Some(vec![0]));
    }

    #[test]
    fn unary_constraints() {
        let b = RelStructure::from_parts(3, vec![("U", 1, vec![vec![2]])]).unwrap();
        let a = RelStructure::from_parts(2, vec![("U", 1, vec![vec![1]])]).unwrap();
        assert_eq!(brute_force_hom(&a, &b, 100).unwrap(), Some(vec![0, 2]));
        let none = RelStructure::from_parts(3, vec![("U", 1, vec![])]).unwrap();
        assert_eq!(brute_force_hom(&a, &none, 100).unwrap(), None);
    }
}
