//! Congruences of finite algebras.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, Op, OperationTable};
use crate::error::{input_err, invariant_err, Error, Result};

/// Default bound on the universe size for congruence lattice enumeration.
pub const DEFAULT_ENUMERATION_BOUND: usize = 8;

/// A partition of `0..n` in canonical form: block ids are assigned in order
/// of first occurrence, so equal partitions have equal vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Congruence {
    blocks: Vec<usize>,
}

impl Congruence {
    /// Canonicalizes an arbitrary labelling.
    pub fn from_labels<T: PartialEq>(labels: &[T]) -> Self {
        let mut firsts: Vec<&T> = Vec::new();
        let blocks = labels
            .iter()
            .map(|l| match firsts.iter().position(|f| *f == l) {
                Some(i) => i,
                None => {
                    firsts.push(l);
                    firsts.len() - 1
                }
            })
            .collect();
        Self { blocks }
    }

    pub fn identity(n: usize) -> Self {
        Self { blocks: (0..n).collect() }
    }

    pub fn full(n: usize) -> Self {
        Self { blocks: vec![0; n] }
    }

    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.iter().max().map_or(0, |m| m + 1)
    }

    pub fn block_of(&self, x: usize) -> usize {
        self.blocks[x]
    }

    pub fn block_ids(&self) -> &[usize] {
        &self.blocks
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.blocks[x] == self.blocks[y]
    }

    pub fn is_identity(&self) -> bool {
        self.num_blocks() == self.size()
    }

    pub fn is_full(&self) -> bool {
        self.num_blocks() <= 1
    }

    /// Members of each block, blocks in id order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (x, &b) in self.blocks.iter().enumerate() {
            out[b].push(x);
        }
        out
    }

    /// `self <= other` in the refinement order.
    pub fn refines(&self, other: &Congruence) -> bool {
        (0..self.size()).all(|x| (0..self.size()).all(|y| !self.related(x, y) || other.related(x, y)))
    }

    pub fn meet(&self, other: &Congruence) -> Congruence {
        let pairs: Vec<(usize, usize)> = self.blocks.iter().copied().zip(other.blocks.iter().copied()).collect();
        Congruence::from_labels(&pairs)
    }

    pub fn join(&self, other: &Congruence) -> Congruence {
        let mut uf = UnionFind::new(self.size());
        for x in 0..self.size() {
            for y in 0..x {
                if self.related(x, y) || other.related(x, y) {
                    uf.union(x, y);
                }
            }
        }
        uf.as_congruence()
    }

    /// A witness `(op, args, args')` with blockwise related arguments but
    /// unrelated images, if the partition is not compatible.
    pub fn compatibility_witness(&self, alg: &FiniteAlgebra) -> Option<(Op, [usize; 3], [usize; 3])> {
        let n = alg.size();
        // Single-position changes suffice: compatibility with every unary
        // translation implies compatibility by transitivity.
        for op in Op::ALL {
            for x in 0..n {
                for y in 0..n {
                    if x == y || !self.related(x, y) {
                        continue;
                    }
                    for c in 0..n {
                        for d in 0..n {
                            for pos in 0..3 {
                                let mut consts = [c, d].into_iter();
                                let mut a = [0; 3];
                                for (i, slot) in a.iter_mut().enumerate() {
                                    *slot = if i == pos { x } else { consts.next().unwrap() };
                                }
                                let mut b = a;
                                b[pos] = y;
                                let ua = alg.apply(op, a[0], a[1], a[2]);
                                let ub = alg.apply(op, b[0], b[1], b[2]);
                                if !self.related(ua, ub) {
                                    return Some((op, a, b));
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }

    pub fn is_compatible(&self, alg: &FiniteAlgebra) -> bool {
        self.size() == alg.size() && self.compatibility_witness(alg).is_none()
    }
}

#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn as_congruence(&mut self) -> Congruence {
        let roots: Vec<usize> = (0..self.parent.len()).map(|x| self.find(x)).collect();
        Congruence::from_labels(&roots)
    }
}

/// Least congruence identifying `a` and `b`.
///
/// Pair closure: every merged pair is pushed through every basic translation
/// `x -> f(.., x, ..)` with the other two arguments fixed to constants.
pub fn principal_congruence(alg: &FiniteAlgebra, a: usize, b: usize) -> Result<Congruence> {
    congruence_generated_by(alg, &[(a, b)])
}

pub fn congruence_generated_by(alg: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Result<Congruence> {
    let n = alg.size();
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= n || *b >= n) {
        return Err(input_err!("pair ({a},{b}) outside universe of size {n}"));
    }
    let mut uf = UnionFind::new(n);
    let mut work: Vec<(usize, usize)> = Vec::new();
    for &(a, b) in pairs {
        if uf.union(a, b) {
            work.push((a, b));
        }
    }
    while let Some((x, y)) = work.pop() {
        for op in Op::ALL {
            for c in 0..n {
                for d in 0..n {
                    let images = [
                        (alg.apply(op, x, c, d), alg.apply(op, y, c, d)),
                        (alg.apply(op, c, x, d), alg.apply(op, c, y, d)),
                        (alg.apply(op, c, d, x), alg.apply(op, c, d, y)),
                    ];
                    for (u, v) in images {
                        if uf.union(u, v) {
                            work.push((u, v));
                        }
                    }
                }
            }
        }
    }
    Ok(uf.as_congruence())
}

/// The whole congruence lattice, sorted by block vector.
///
/// Computed as `Δ` plus the join closure of all principal congruences.
pub fn all_congruences(alg: &FiniteAlgebra) -> Result<Vec<Congruence>> {
    all_congruences_bounded(alg, DEFAULT_ENUMERATION_BOUND)
}

pub fn all_congruences_bounded(alg: &FiniteAlgebra, bound: usize) -> Result<Vec<Congruence>> {
    let n = alg.size();
    if n > bound {
        return Err(Error::Resource(format!(
            "congruence enumeration limited to {bound} elements, algebra has {n}"
        )));
    }
    let mut found: BTreeSet<Congruence> = BTreeSet::new();
    found.insert(Congruence::identity(n));
    let mut principals = BTreeSet::new();
    for a in 0..n {
        for b in 0..a {
            principals.insert(principal_congruence(alg, a, b)?);
        }
    }
    let principals: Vec<Congruence> = principals.into_iter().collect();
    let mut frontier: Vec<Congruence> = principals.clone();
    found.extend(principals.iter().cloned());
    while let Some(c) = frontier.pop() {
        for p in &principals {
            let j = c.join(p);
            if found.insert(j.clone()) {
                frontier.push(j);
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// Maximal congruences strictly below `∇`, in lattice order.
///
/// A one-element algebra has none; see [`CoatomScan::degenerate`].
pub fn coatom_congruences(alg: &FiniteAlgebra) -> Result<CoatomScan> {
    let n = alg.size();
    if n <= 1 {
        return Ok(CoatomScan { coatoms: Vec::new(), degenerate: true });
    }
    let all = all_congruences(alg)?;
    Ok(CoatomScan { coatoms: coatoms_of(&all), degenerate: false })
}

pub(crate) fn coatoms_of(all: &[Congruence]) -> Vec<Congruence> {
    let proper: Vec<&Congruence> = all.iter().filter(|c| !c.is_full()).collect();
    proper
        .iter()
        .filter(|c| !proper.iter().any(|d| *d != **c && c.refines(d)))
        .map(|c| (*c).clone())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoatomScan {
    pub coatoms: Vec<Congruence>,
    /// Set for the one-element algebra, where `Δ = ∇` has nothing below it.
    pub degenerate: bool,
}

/// `alg / theta`, with block `i` as element `i`.
pub fn quotient_algebra(alg: &FiniteAlgebra, theta: &Congruence) -> Result<FiniteAlgebra> {
    if theta.size() != alg.size() {
        return Err(input_err!(
            "partition of {} elements for an algebra of size {}",
            theta.size(),
            alg.size()
        ));
    }
    if let Some((op, a, b)) = theta.compatibility_witness(alg) {
        return Err(invariant_err!(
            "partition is not a congruence: {} maps related {a:?} and {b:?} to unrelated elements",
            op.name()
        ));
    }
    let reps: Vec<usize> = theta.classes().iter().map(|c| c[0]).collect();
    let k = reps.len();
    let mk = |op: Op| {
        OperationTable::from_fn(3, k, |a| theta.block_of(alg.apply(op, reps[a[0]], reps[a[1]], reps[a[2]])))
    };
    FiniteAlgebra::new(mk(Op::P1)?, mk(Op::P2)?, mk(Op::P3)?)
}

/// Partition of the domain of `map` by equal image.
pub fn kernel(map: &[usize]) -> Congruence {
    Congruence::from_labels(map)
}

/// Kernel of a map that is supposed to be a homomorphism out of `alg`.
pub fn kernel_checked(alg: &FiniteAlgebra, map: &[usize]) -> Result<Congruence> {
    if map.len() != alg.size() {
        return Err(input_err!("map has {} entries for an algebra of size {}", map.len(), alg.size()));
    }
    let k = kernel(map);
    match k.compatibility_witness(alg) {
        None => Ok(k),
        Some((op, a, b)) => Err(invariant_err!(
            "kernel is not a congruence ({} at {a:?} vs {b:?}); the map is not a homomorphism",
            op.name()
        )),
    }
}

/// Both projections of a binary relation are onto.
pub fn is_subdirect_binary(rel: &[(usize, usize)], n1: usize, n2: usize) -> bool {
    let mut left = vec![false; n1];
    let mut right = vec![false; n2];
    for &(a, b) in rel {
        if a >= n1 || b >= n2 {
            return false;
        }
        left[a] = true;
        right[b] = true;
    }
    left.into_iter().all(|x| x) && right.into_iter().all(|x| x)
}

/// Every partition of `0..n` as a restricted growth string. Test oracle only.
pub fn all_partitions(n: usize) -> Vec<Congruence> {
    fn rec(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Congruence>) {
        if prefix.len() == n {
            out.push(Congruence { blocks: prefix.clone() });
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            prefix.push(b);
            rec(prefix, n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), n, &mut out);
    out
}
