//! (k-1,k)-strategies in relation view and the consistency fixpoint.
//!
//! For every sorted index set `I` of instance elements with `1 <= |I| <= k`
//! the strategy stores `H_I`, a set of template tuples indexed by `I`. Tuples
//! are encoded base `|B|` with the smallest element of `I` most significant,
//! matching [`Power`] codes, so `H_I` can be handed straight to the algebra.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::FiniteAlgebra;
use crate::error::{input_err, invariant_err, precondition_err, Error, Result};
use crate::power::{drop_coordinate, ElemSet, Power, MAX_POWER_CODES};
use crate::relstruct::{is_homomorphism, RelStructure};

/// `max(3, largest arity)`.
pub fn choose_k(a: &RelStructure) -> usize {
    a.max_arity().max(3)
}

/// `(I, J)` with `I = J` minus its element at position `pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cover {
    pub lower: usize,
    pub upper: usize,
    pub pos: usize,
}

/// All sorted index sets of size `1..=min(k, n)` over `0..n`, ordered by
/// size then lexicographically. Singleton `{i}` has index `i`.
#[derive(Debug, Clone)]
pub struct IndexSets {
    n: usize,
    k: usize,
    sets: Vec<Vec<usize>>,
    lookup: HashMap<Vec<usize>, usize>,
    covers: Vec<Cover>,
    covers_of: Vec<Vec<usize>>,
}

impl IndexSets {
    pub fn new(n: usize, k: usize) -> Self {
        let mut sets: Vec<Vec<usize>> = Vec::new();
        let mut layer: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for _ in 0..k.min(n) {
            let next = layer
                .iter()
                .flat_map(|s| {
                    let last = *s.last().expect("nonempty");
                    (last + 1..n).map(move |x| {
                        let mut t = s.clone();
                        t.push(x);
                        t
                    })
                })
                .collect();
            sets.append(&mut layer);
            layer = next;
        }
        let lookup: HashMap<Vec<usize>, usize> = sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut covers = Vec::new();
        let mut covers_of = vec![Vec::new(); sets.len()];
        for (upper, s) in sets.iter().enumerate() {
            if s.len() < 2 {
                continue;
            }
            for pos in 0..s.len() {
                let mut t = s.clone();
                t.remove(pos);
                let lower = lookup[&t];
                covers_of[lower].push(covers.len());
                covers_of[upper].push(covers.len());
                covers.push(Cover { lower, upper, pos });
            }
        }
        Self { n, k, sets, lookup, covers, covers_of }
    }

    pub fn universe(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn set(&self, idx: usize) -> &[usize] {
        &self.sets[idx]
    }

    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    /// Index of a sorted set.
    pub fn index_of(&self, set: &[usize]) -> Option<usize> {
        self.lookup.get(set).copied()
    }

    pub fn covers(&self) -> &[Cover] {
        &self.covers
    }

    /// Covers in which the set takes part, as lower or upper end.
    pub fn covers_of(&self, idx: usize) -> &[usize] {
        &self.covers_of[idx]
    }
}

/// Digits of a code of a `len`-tuple over `nb` elements.
pub fn decode_tuple(code: usize, len: usize, nb: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    let mut c = code;
    for slot in out.iter_mut().rev() {
        *slot = c % nb;
        c /= nb;
    }
    out
}

pub fn encode_tuple(t: &[usize], nb: usize) -> usize {
    t.iter().fold(0, |acc, &v| acc * nb + v)
}

/// A family `H_I` over all index sets, never with an empty member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Strategy {
    b_size: usize,
    index: Arc<IndexSets>,
    tables: Vec<ElemSet>,
}

impl PartialEq for IndexSets {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k
    }
}

impl Eq for IndexSets {}

/// Result of [`enforce`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Consistency {
    Consistent(Strategy),
    /// No winning strategy exists.
    Empty,
}

impl Consistency {
    pub fn strategy(&self) -> Option<&Strategy> {
        match self {
            Consistency::Consistent(s) => Some(s),
            Consistency::Empty => None,
        }
    }

    pub fn into_strategy(self) -> Option<Strategy> {
        match self {
            Consistency::Consistent(s) => Some(s),
            Consistency::Empty => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Consistency::Empty)
    }
}

impl Strategy {
    /// Assembles a strategy from explicit tables, one per index set.
    ///
    /// Fails if a table is empty or has the wrong capacity; coherence is not
    /// checked here (see [`check_winning`]).
    pub fn from_tables(b_size: usize, index: Arc<IndexSets>, tables: Vec<ElemSet>) -> Result<Self> {
        if tables.len() != index.len() {
            return Err(input_err!("{} tables for {} index sets", tables.len(), index.len()));
        }
        for (i, t) in tables.iter().enumerate() {
            let want = b_size.pow(index.set(i).len() as u32);
            if t.len() != want {
                return Err(input_err!("table for {:?} has capacity {}, expected {want}", index.set(i), t.len()));
            }
            if t.is_clear() {
                return Err(input_err!("table for {:?} is empty", index.set(i)));
            }
        }
        Ok(Self { b_size, index, tables })
    }

    pub fn k(&self) -> usize {
        self.index.k()
    }

    pub fn a_size(&self) -> usize {
        self.index.universe()
    }

    pub fn b_size(&self) -> usize {
        self.b_size
    }

    pub fn index(&self) -> &Arc<IndexSets> {
        &self.index
    }

    pub fn table(&self, idx: usize) -> &ElemSet {
        &self.tables[idx]
    }

    pub fn tables(&self) -> &[ElemSet] {
        &self.tables
    }

    /// `H_I` for a sorted index set.
    pub fn table_of(&self, set: &[usize]) -> Option<&ElemSet> {
        self.index.index_of(set).map(|i| &self.tables[i])
    }

    /// `H_{a}`.
    pub fn unary(&self, a: usize) -> &ElemSet {
        &self.tables[a]
    }

    /// Decoded tuples of `H_I`.
    pub fn tuples(&self, idx: usize) -> Vec<Vec<usize>> {
        let len = self.index.set(idx).len();
        self.tables[idx].ones().map(|c| decode_tuple(c, len, self.b_size)).collect()
    }

    /// `sum_i |H_i|`, the termination measure of the solver.
    pub fn potential(&self) -> usize {
        (0..self.a_size()).map(|a| self.tables[a].count_ones(..)).sum()
    }

    /// `|H_I|` for every index set, in index order.
    pub fn sizes(&self) -> Vec<(Vec<usize>, usize)> {
        self.index.sets().iter().zip(&self.tables).map(|(s, t)| (s.clone(), t.count_ones(..))).collect()
    }

    /// Power of `alg` matching the arity of `H_I`.
    pub fn power<'a>(&self, alg: &'a FiniteAlgebra, idx: usize) -> Power<'a> {
        Power::new(alg, self.index.set(idx).len()).expect("table sizes were checked at construction")
    }
}

/// A view of the strategy's tables for JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct StrategySummary {
    pub k: usize,
    pub potential: usize,
    pub sizes: Vec<SetSize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SetSize {
    pub set: Vec<usize>,
    pub size: usize,
}

impl Strategy {
    pub fn summary(&self) -> StrategySummary {
        StrategySummary {
            k: self.k(),
            potential: self.potential(),
            sizes: self.sizes().into_iter().map(|(set, size)| SetSize { set, size }).collect(),
        }
    }
}

/// Constraints of `a` that fall inside each index set, as position lists.
fn local_constraints<'a>(
    index: &IndexSets,
    a: &'a RelStructure,
) -> Vec<Vec<(&'a str, Vec<usize>)>> {
    let mut out = vec![Vec::new(); index.len()];
    for (idx, set) in index.sets().iter().enumerate() {
        for (name, rel) in a.relations() {
            for t in rel.tuples() {
                let pos: Option<Vec<usize>> = t.iter().map(|x| set.binary_search(x).ok()).collect();
                if let Some(pos) = pos {
                    out[idx].push((name.as_str(), pos));
                }
            }
        }
    }
    out
}

fn satisfies(tuple: &[usize], constraints: &[(&str, Vec<usize>)], b: &RelStructure, scratch: &mut Vec<usize>) -> bool {
    constraints.iter().all(|(name, pos)| {
        scratch.clear();
        scratch.extend(pos.iter().map(|&p| tuple[p]));
        b.relation(name).expect("same vocabulary").contains(scratch)
    })
}

/// All partial homomorphisms with domain size at most `k`.
///
/// Returns [`Consistency::Empty`] when some index set has none, which for
/// `|I| = 1` means a unary constraint cannot be met.
pub fn init_full(a: &RelStructure, b: &RelStructure, k: usize) -> Result<Consistency> {
    a.check_same_vocabulary(b)?;
    if k == 0 {
        return Err(input_err!("strategy level must be at least 1"));
    }
    let nb = b.universe();
    let top = k.min(a.universe());
    if nb.checked_pow(top as u32).is_none_or(|c| c > MAX_POWER_CODES) {
        return Err(Error::Resource(format!("{nb}^{top} tuples per index set is too many")));
    }
    let index = Arc::new(IndexSets::new(a.universe(), k));
    let constraints = local_constraints(&index, a);
    let mut tables = Vec::with_capacity(index.len());
    let mut scratch = Vec::new();
    for (idx, set) in index.sets().iter().enumerate() {
        let len = set.len();
        let total = nb.pow(len as u32);
        let mut t = ElemSet::with_capacity(total);
        for code in 0..total {
            let tuple = decode_tuple(code, len, nb);
            if satisfies(&tuple, &constraints[idx], b, &mut scratch) {
                t.insert(code);
            }
        }
        if t.is_clear() {
            return Ok(Consistency::Empty);
        }
        tables.push(t);
    }
    Ok(Consistency::Consistent(Strategy { b_size: nb, index, tables }))
}

/// Order in which [`enforce`] visits pending covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    /// First in, first out, starting from the covers in index order.
    Sequential,
    /// Random initial order and random picks, for order-independence checks.
    Shuffled(u64),
}

fn project(table: &ElemSet, len: usize, pos: usize, nb: usize) -> ElemSet {
    let mut out = ElemSet::with_capacity(nb.pow(len as u32 - 1));
    out.extend(table.ones().map(|c| drop_coordinate(c, len, pos, nb)));
    out
}

/// Greatest subfamily closed under restriction along covers and with the
/// forth property along covers, or [`Consistency::Empty`].
///
/// Along a cover `(I, J)` the two rules are `H_I <- H_I ∩ π_I(H_J)` and
/// `H_J <- H_J ∩ π_I^{-1}(H_I)`; covers suffice since both rules compose.
pub fn enforce(h: Strategy, schedule: Schedule) -> Consistency {
    let Strategy { b_size: nb, index, mut tables } = h;
    let covers = index.covers();
    let mut order: Vec<usize> = (0..covers.len()).collect();
    let mut rng = match schedule {
        Schedule::Sequential => None,
        Schedule::Shuffled(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    if let Some(rng) = rng.as_mut() {
        order.shuffle(rng);
    }
    let mut queued = vec![true; covers.len()];
    let mut queue: VecDeque<usize> = order.into();
    while !queue.is_empty() {
        let c = match rng.as_mut() {
            None => queue.pop_front().expect("nonempty"),
            Some(rng) => {
                let i = rng.gen_range(0..queue.len());
                queue.swap_remove_back(i).expect("index in range")
            }
        };
        queued[c] = false;
        let Cover { lower, upper, pos } = covers[c];
        let len = index.set(upper).len();
        let proj = project(&tables[upper], len, pos, nb);
        let before = tables[lower].count_ones(..);
        tables[lower].intersect_with(&proj);
        let lower_changed = tables[lower].count_ones(..) != before;
        let lower_set = &tables[lower];
        let doomed: Vec<usize> = tables[upper]
            .ones()
            .filter(|&t| !lower_set.contains(drop_coordinate(t, len, pos, nb)))
            .collect();
        for &t in &doomed {
            tables[upper].set(t, false);
        }
        if tables[lower].is_clear() || tables[upper].is_clear() {
            return Consistency::Empty;
        }
        let mut wake = |idx: usize, queue: &mut VecDeque<usize>| {
            for &d in index.covers_of(idx) {
                if !queued[d] {
                    queued[d] = true;
                    queue.push_back(d);
                }
            }
        };
        if lower_changed {
            wake(lower, &mut queue);
        }
        if !doomed.is_empty() {
            wake(upper, &mut queue);
        }
    }
    Consistency::Consistent(Strategy { b_size: nb, index, tables })
}

/// What a strategy is checked against.
#[derive(Debug, Clone, Copy)]
pub struct Instance<'a> {
    pub a: &'a RelStructure,
    pub b: &'a RelStructure,
    /// Every table must be a subuniverse of the matching power of this algebra.
    pub alg: &'a FiniteAlgebra,
}

/// Checks nonemptiness, restriction and forth coherence along every cover,
/// closure of each table under the algebra, and that every tuple is a
/// partial homomorphism. The error names the first violation.
pub fn check_winning(h: &Strategy, inst: &Instance) -> Result<()> {
    let index = h.index();
    let nb = h.b_size();
    if index.universe() != inst.a.universe() || nb != inst.b.universe() || inst.alg.size() != nb {
        return Err(input_err!("strategy shape does not match the instance"));
    }
    for (idx, t) in h.tables().iter().enumerate() {
        if t.is_clear() {
            return Err(invariant_err!("H{:?} is empty", index.set(idx)));
        }
    }
    for cover in index.covers() {
        let len = index.set(cover.upper).len();
        let proj = project(h.table(cover.upper), len, cover.pos, nb);
        let lower = h.table(cover.lower);
        if !proj.is_subset(lower) {
            return Err(invariant_err!(
                "restriction of H{:?} leaves H{:?}",
                index.set(cover.upper),
                index.set(cover.lower)
            ));
        }
        if !lower.is_subset(&proj) {
            return Err(invariant_err!(
                "a tuple of H{:?} has no extension in H{:?}",
                index.set(cover.lower),
                index.set(cover.upper)
            ));
        }
    }
    for idx in 0..index.len() {
        if let Some((op, args)) = h.power(inst.alg, idx).closure_witness(h.table(idx)) {
            return Err(invariant_err!("H{:?} is not closed under {} at {args:?}", index.set(idx), op.name()));
        }
    }
    let constraints = local_constraints(index, inst.a);
    let mut scratch = Vec::new();
    for (idx, set) in index.sets().iter().enumerate() {
        for code in h.table(idx).ones() {
            let t = decode_tuple(code, set.len(), nb);
            if !satisfies(&t, &constraints[idx], inst.b, &mut scratch) {
                return Err(invariant_err!("{t:?} on {set:?} is not a partial homomorphism"));
            }
        }
    }
    Ok(())
}

pub fn is_winning(h: &Strategy, inst: &Instance) -> bool {
    check_winning(h, inst).is_ok()
}

/// The [`Consistency`] form: `Empty` is never winning.
pub fn is_winning_result(c: &Consistency, inst: &Instance) -> bool {
    c.strategy().is_some_and(|h| is_winning(h, inst))
}

/// Elements `a` with `|H_a| = 1`.
pub fn singleton_coordinates(h: &Strategy) -> Vec<usize> {
    (0..h.a_size()).filter(|&a| h.unary(a).count_ones(..) == 1).collect()
}

/// Elements `a` with `|H_a| >= 2`.
pub fn active_coordinates(h: &Strategy) -> Vec<usize> {
    (0..h.a_size()).filter(|&a| h.unary(a).count_ones(..) >= 2).collect()
}

/// The map sending each `a` to the only element of `H_a`, checked to be a
/// homomorphism.
pub fn extract_solution(h: &Strategy, a: &RelStructure, b: &RelStructure) -> Result<Vec<usize>> {
    let mut s = Vec::with_capacity(h.a_size());
    for x in 0..h.a_size() {
        let t = h.unary(x);
        if t.count_ones(..) != 1 {
            return Err(precondition_err!("H_{x} has {} elements, expected one", t.count_ones(..)));
        }
        s.push(t.ones().next().expect("one element"));
    }
    if !is_homomorphism(&s, a, b)? {
        return Err(invariant_err!("singleton strategy {s:?} is not a homomorphism"));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::set_of;

    fn k2() -> RelStructure {
        RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1], vec![1, 0]])]).unwrap()
    }

    fn cycle(n: usize) -> RelStructure {
        let e = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        RelStructure::from_parts(n, vec![("E", 2, e)]).unwrap()
    }

    fn full(a: &RelStructure, b: &RelStructure) -> Strategy {
        init_full(a, b, choose_k(a)).unwrap().into_strategy().unwrap()
    }

    #[test]
    fn k_choice() {
        assert_eq!(choose_k(&k2()), 3);
        let five = RelStructure::from_parts(2, vec![("R", 5, vec![])]).unwrap();
        assert_eq!(choose_k(&five), 5);
        assert_eq!(choose_k(&RelStructure::from_parts(2, vec![]).unwrap()), 3);
    }

    #[test]
    fn index_sets_layout() {
        let ix = IndexSets::new(4, 3);
        assert_eq!(ix.len(), 4 + 6 + 4);
        assert_eq!(ix.set(2), &[2]);
        assert_eq!(ix.index_of(&[0, 2, 3]), Some(12));
        // each pair has two covers below, each triple three
        assert_eq!(ix.covers().len(), 6 * 2 + 4 * 3);
        let small = IndexSets::new(2, 3);
        assert_eq!(small.sets(), &[vec![0], vec![1], vec![0, 1]]);
    }

    #[test]
    fn single_edge_init() {
        let edge = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1]])]).unwrap();
        let h = full(&edge, &k2());
        assert_eq!(h.tuples(2), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(h.tuples(0), vec![vec![0], vec![1]]);
    }

    #[test]
    fn constraint_free_is_everything() {
        let a = RelStructure::from_parts(3, vec![("E", 2, vec![])]).unwrap();
        let h = full(&a, &k2());
        for (set, size) in h.sizes() {
            assert_eq!(size, 1 << set.len());
        }
    }

    #[test]
    fn triangle_is_empty() {
        // the whole triangle is one index set, so no 3-tuple survives
        assert_eq!(init_full(&cycle(3), &k2(), 3).unwrap(), Consistency::Empty);
        // a 5-cycle is only refuted by propagation
        let h = full(&cycle(5), &k2());
        assert_eq!(enforce(h, Schedule::Sequential), Consistency::Empty);
    }

    #[test]
    fn fixpoint_is_stable_and_schedule_free() {
        let a = cycle(4);
        let b = k2();
        let alg = FiniteAlgebra::majority(2);
        let h = enforce(full(&a, &b), Schedule::Sequential).into_strategy().unwrap();
        check_winning(&h, &Instance { a: &a, b: &b, alg: &alg }).unwrap();
        assert_eq!(enforce(h.clone(), Schedule::Sequential).into_strategy().unwrap(), h);
        for seed in 0..5 {
            assert_eq!(enforce(full(&a, &b), Schedule::Shuffled(seed)).into_strategy().unwrap(), h);
        }
    }

    #[test]
    fn directed_edge_collapses() {
        let edge = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1]])]).unwrap();
        let b = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1]])]).unwrap();
        let h = enforce(full(&edge, &b), Schedule::Sequential).into_strategy().unwrap();
        assert_eq!(singleton_coordinates(&h), vec![0, 1]);
        assert_eq!(extract_solution(&h, &edge, &b).unwrap(), vec![0, 1]);
    }

    #[test]
    fn extraction_needs_singletons() {
        let h = full(&cycle(4), &k2());
        assert!(matches!(extract_solution(&h, &cycle(4), &k2()), Err(Error::Precondition(_))));
        assert_eq!(active_coordinates(&h), vec![0, 1, 2, 3]);
    }

    #[test]
    fn broken_strategies_are_not_winning() {
        let a = cycle(4);
        let b = k2();
        let alg = FiniteAlgebra::majority(2);
        let inst = Instance { a: &a, b: &b, alg: &alg };
        let h = enforce(full(&a, &b), Schedule::Sequential).into_strategy().unwrap();
        // drop one value of H_0 while pairs still use it
        let mut tables = h.tables().to_vec();
        tables[0] = set_of(2, [0]);
        let broken = Strategy::from_tables(2, h.index().clone(), tables).unwrap();
        assert!(!is_winning(&broken, &inst));
        assert!(!is_winning_result(&Consistency::Empty, &inst));
        // a non-homomorphic pair sneaks into H_{0,1}
        let mut tables = h.tables().to_vec();
        let pair = h.index().index_of(&[0, 1]).unwrap();
        tables[pair].insert(0);
        let broken = Strategy::from_tables(2, h.index().clone(), tables).unwrap();
        assert!(!is_winning(&broken, &inst));
    }

    #[test]
    fn unary_conflict_is_empty_at_init() {
        let b = RelStructure::from_parts(2, vec![("U", 1, vec![])]).unwrap();
        let a = RelStructure::from_parts(1, vec![("U", 1, vec![vec![0]])]).unwrap();
        assert_eq!(init_full(&a, &b, 3).unwrap(), Consistency::Empty);
    }
}
