//! Strategy reductions and the solver loop.
//!
//! Starting from the greatest (k-1,k)-strategy, each round either shrinks
//! some `H_a` to a proper absorbing ideal ([`ideal_reduce`]) or, when every
//! non-singleton `H_a` is ideal free, fixes a matching congruence class on a
//! platoon of coordinates ([`simple_reduce`]). Both keep the family a winning
//! strategy and strictly lower `sum_a |H_a|`, so the loop ends with every
//! `H_a` a singleton, which is a solution.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{FiniteAlgebra, MAX_UNIVERSE};
use crate::congruence::{all_congruences_bounded, coatoms_of, quotient_algebra, Congruence};
use crate::error::{invariant_err, precondition_err, Error, Result};
use crate::ideals::{find_proper_ideal, is_ideal, minimal_ideal_members, Carrier, IdealSide};
use crate::jonsson::{certify, preprocess_terms};
use crate::power::{drop_coordinate, ElemSet};
use crate::relstruct::{is_homomorphism, validate_template, RelStructure};
use crate::strategy::{
    active_coordinates, check_winning, choose_k, enforce, extract_solution, init_full,
    Consistency, Instance, Schedule, Strategy,
};

fn unary_carrier<'a>(h: &Strategy, alg: &'a FiniteAlgebra, a: usize) -> Carrier<'a> {
    Carrier::new_unchecked(h.power(alg, a), h.unary(a).clone())
}

fn into_strategy(h: &Strategy, tables: Vec<ElemSet>, what: &str) -> Result<Strategy> {
    Strategy::from_tables(h.b_size(), h.index().clone(), tables)
        .map_err(|e| invariant_err!("{what} produced a malformed strategy: {}", e.message()))
}

/// Restricts the strategy so that `H'_a = x` for a proper `side`-ideal `x`
/// of `H_a`.
///
/// Sets containing `a` keep the tuples whose `a` value lies in `x`; smaller
/// sets without `a` keep the restrictions of those; sets of size `k` without
/// `a` keep the tuples all of whose proper restrictions survived.
pub fn ideal_reduce(h: &Strategy, inst: &Instance, a: usize, x: &ElemSet, side: IdealSide) -> Result<Strategy> {
    if a >= h.a_size() {
        return Err(precondition_err!("coordinate {a} outside the instance"));
    }
    let carrier = unary_carrier(h, inst.alg, a);
    if x.count_ones(..) >= carrier.len() || !is_ideal(&carrier, x, side)? {
        return Err(precondition_err!("not a proper {side:?}-ideal of H_{a}"));
    }
    let index = h.index();
    let nb = h.b_size();
    let k = h.k();
    let mut tables: Vec<ElemSet> = Vec::with_capacity(index.len());
    for (idx, set) in index.sets().iter().enumerate() {
        let len = set.len();
        let t = if let Ok(p) = set.binary_search(&a) {
            filter_at(h.table(idx), len, p, x, nb)
        } else if len < k {
            let mut up = set.to_vec();
            let p = up.binary_search(&a).unwrap_err();
            up.insert(p, a);
            let upper = index.index_of(&up).expect("sets below k extend");
            let kept = filter_at(h.table(upper), len + 1, p, x, nb);
            let mut out = ElemSet::with_capacity(nb.pow(len as u32));
            out.extend(kept.ones().map(|c| drop_coordinate(c, len + 1, p, nb)));
            out
        } else {
            // size k: every (k-1)-restriction must have survived stage one
            let lowers: Vec<usize> = (0..len)
                .map(|p| {
                    let mut low = set.to_vec();
                    low.remove(p);
                    index.index_of(&low).expect("subsets are indexed")
                })
                .collect();
            let mut out = h.table(idx).clone();
            for c in h.table(idx).ones() {
                if (0..len).any(|p| !tables[lowers[p]].contains(drop_coordinate(c, len, p, nb))) {
                    out.set(c, false);
                }
            }
            out
        };
        if t.is_clear() {
            return Err(invariant_err!("ideal reduction at {a} emptied H{set:?}"));
        }
        tables.push(t);
    }
    let out = into_strategy(h, tables, "ideal reduction")?;
    check_winning(&out, inst).map_err(|e| invariant_err!("ideal reduction at {a}: {}", e.message()))?;
    if out.unary(a) != x {
        return Err(invariant_err!("ideal reduction at {a} did not leave exactly the ideal"));
    }
    for idx in 0..index.len() {
        if !out.table(idx).is_subset(h.table(idx)) {
            return Err(invariant_err!("ideal reduction grew H{:?}", index.set(idx)));
        }
    }
    Ok(out)
}

fn filter_at(table: &ElemSet, len: usize, pos: usize, x: &ElemSet, nb: usize) -> ElemSet {
    let place = nb.pow((len - 1 - pos) as u32);
    let mut out = ElemSet::with_capacity(table.len());
    out.extend(table.ones().filter(|&c| x.contains((c / place) % nb)));
    out
}

/// Coordinates `M` with maximal congruences `ϑ_m` of `H_m` whose pairwise
/// quotients are linked by isomorphisms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Platoon {
    /// `M`, starting with the lowest active coordinate.
    pub members: Vec<usize>,
    /// Sorted elements of each `H_m`; congruences act on positions here.
    pub elements: Vec<Vec<usize>>,
    /// `ϑ_m` on positions of `elements`.
    pub congruences: Vec<Congruence>,
    /// `τ_{m0,m}` as a map from block ids of `ϑ_{m0}` to block ids of `ϑ_m`.
    pub links: Vec<Vec<usize>>,
}

impl Platoon {
    /// Block of template element `v` under `ϑ` of the `j`-th member.
    pub fn block(&self, j: usize, v: usize) -> Option<usize> {
        let pos = self.elements[j].binary_search(&v).ok()?;
        Some(self.congruences[j].block_of(pos))
    }

    pub fn position(&self, m: usize) -> Option<usize> {
        self.members.iter().position(|&x| x == m)
    }
}

/// `{(value at first, value at second)}` from the binary table on `{p, q}`.
fn pairs(h: &Strategy, p: usize, q: usize) -> Vec<(usize, usize)> {
    let (lo, hi) = (p.min(q), p.max(q));
    let idx = h.index().index_of(&[lo, hi]).expect("pairs are indexed when k >= 2");
    h.tuples(idx)
        .into_iter()
        .map(|t| if p < q { (t[0], t[1]) } else { (t[1], t[0]) })
        .collect()
}

fn elements(h: &Strategy, a: usize) -> Vec<usize> {
    h.unary(a).ones().collect()
}

/// First maximal congruence, in sorted order, of `H_m` as an algebra.
fn first_coatom(h: &Strategy, alg: &FiniteAlgebra, m: usize) -> Result<Congruence> {
    let sub = unary_carrier(h, alg, m).to_algebra()?;
    let all = all_congruences_bounded(&sub, MAX_UNIVERSE)?;
    coatoms_of(&all)
        .into_iter()
        .next()
        .ok_or_else(|| precondition_err!("H_{m} has fewer than two elements"))
}

/// If `{(x, blk_m(y))}` over `H_{n,m}` is a function on `H_n`, its values
/// listed along `elements(n)`.
fn graph_to_blocks(h: &Strategy, p: &Platoon, j: usize, n: usize) -> Option<Vec<usize>> {
    let m = p.members[j];
    let xs = elements(h, n);
    let mut phi = vec![usize::MAX; xs.len()];
    for (x, y) in pairs(h, n, m) {
        let i = xs.binary_search(&x).ok()?;
        let b = p.block(j, y)?;
        if phi[i] == usize::MAX {
            phi[i] = b;
        } else if phi[i] != b {
            return None;
        }
    }
    phi.iter().all(|&b| b != usize::MAX).then_some(phi)
}

/// Grows `M` greedily from the lowest active coordinate and verifies the
/// three platoon statements before returning.
///
/// Requires every active `H_a` to be ideal free with at least two elements.
pub fn find_platoon(h: &Strategy, inst: &Instance, active: &[usize]) -> Result<Platoon> {
    if h.k() < 2 {
        return Err(precondition_err!("platoons need a strategy of level at least 2"));
    }
    let &m0 = active.iter().min().ok_or_else(|| precondition_err!("no active coordinates"))?;
    for &a in active {
        if h.unary(a).count_ones(..) < 2 {
            return Err(precondition_err!("H_{a} is a singleton"));
        }
    }
    let theta0 = first_coatom(h, inst.alg, m0)?;
    let mut p = Platoon {
        members: vec![m0],
        elements: vec![elements(h, m0)],
        links: vec![(0..theta0.num_blocks()).collect()],
        congruences: vec![theta0],
    };
    let mut sorted: Vec<usize> = active.to_vec();
    sorted.sort_unstable();
    loop {
        let mut grew = false;
        for &n in &sorted {
            if p.position(n).is_some() {
                continue;
            }
            for j in 0..p.members.len() {
                let Some(phi) = graph_to_blocks(h, &p, j, n) else { continue };
                let theta_n = Congruence::from_labels(&phi);
                let blocks_m = p.congruences[j].num_blocks();
                if theta_n.num_blocks() != blocks_m {
                    continue;
                }
                // block of n -> block of m, then invert
                let mut to_m = vec![0; blocks_m];
                for (i, &b) in phi.iter().enumerate() {
                    to_m[theta_n.block_of(i)] = b;
                }
                let mut from_m = vec![0; blocks_m];
                for (bn, &bm) in to_m.iter().enumerate() {
                    from_m[bm] = bn;
                }
                let link = p.links[j].iter().map(|&bm| from_m[bm]).collect();
                p.members.push(n);
                p.elements.push(elements(h, n));
                p.congruences.push(theta_n);
                p.links.push(link);
                grew = true;
                break;
            }
        }
        if !grew {
            break;
        }
    }
    verify_platoon(h, inst, &p)?;
    Ok(p)
}

/// `τ_{m1,m2}` read off `H_{m1,m2}`, if the quotient is a bijective graph.
fn quotient_bijection(h: &Strategy, p: &Platoon, j1: usize, j2: usize) -> Option<Vec<usize>> {
    let nblocks = p.congruences[j1].num_blocks();
    if p.congruences[j2].num_blocks() != nblocks {
        return None;
    }
    let mut map = vec![usize::MAX; nblocks];
    let mut hit = vec![false; nblocks];
    for (x, y) in pairs(h, p.members[j1], p.members[j2]) {
        let (bx, by) = (p.block(j1, x)?, p.block(j2, y)?);
        if map[bx] == usize::MAX {
            if hit[by] {
                return None;
            }
            map[bx] = by;
            hit[by] = true;
        } else if map[bx] != by {
            return None;
        }
    }
    map.iter().all(|&b| b != usize::MAX).then_some(map)
}

/// Exhaustive check of the platoon statements: each `ϑ_m` is a maximal
/// congruence of `H_m`; (1) pairwise quotients are bijective graphs; (2)
/// for `n` outside `M` the quotient of `H_{n,m}` is the full product; (3)
/// the bijections compose, and agree with the stored links.
pub fn verify_platoon(h: &Strategy, inst: &Instance, p: &Platoon) -> Result<()> {
    let fail = |msg: String| Err(invariant_err!("platoon {:?}: {msg}", p.members));
    for (j, &m) in p.members.iter().enumerate() {
        if p.elements[j] != elements(h, m) {
            return fail(format!("element list of {m} is stale"));
        }
        let sub = unary_carrier(h, inst.alg, m).to_algebra()?;
        let theta = &p.congruences[j];
        if theta.size() != sub.size() || theta.is_full() || !theta.is_compatible(&sub) {
            return fail(format!("ϑ_{m} is not a proper congruence"));
        }
        let quotient = quotient_algebra(&sub, theta)?;
        if all_congruences_bounded(&quotient, MAX_UNIVERSE)?.len() != 2 {
            return fail(format!("ϑ_{m} is not maximal"));
        }
    }
    let size = p.members.len();
    let mut tau = vec![vec![None; size]; size];
    for j1 in 0..size {
        for j2 in 0..size {
            if j1 == j2 {
                tau[j1][j2] = Some((0..p.congruences[j1].num_blocks()).collect::<Vec<_>>());
                continue;
            }
            match quotient_bijection(h, p, j1, j2) {
                Some(t) => tau[j1][j2] = Some(t),
                None => {
                    return fail(format!(
                        "statement (1) fails for {} and {}",
                        p.members[j1], p.members[j2]
                    ))
                }
            }
        }
    }
    let tau: Vec<Vec<Vec<usize>>> =
        tau.into_iter().map(|row| row.into_iter().map(|t| t.expect("filled")).collect()).collect();
    for j1 in 0..size {
        for j2 in 0..size {
            for j3 in 0..size {
                let composed: Vec<usize> = tau[j1][j2].iter().map(|&b| tau[j2][j3][b]).collect();
                if composed != tau[j1][j3] {
                    return fail(format!(
                        "statement (3) fails for {}, {}, {}",
                        p.members[j1], p.members[j2], p.members[j3]
                    ));
                }
            }
        }
        if p.links[j1] != tau[0][j1] {
            return fail(format!("stored link to {} disagrees with H", p.members[j1]));
        }
    }
    for n in 0..h.a_size() {
        if p.position(n).is_some() {
            continue;
        }
        let xs = elements(h, n);
        for (j, &m) in p.members.iter().enumerate() {
            let nblocks = p.congruences[j].num_blocks();
            let mut seen = vec![false; xs.len() * nblocks];
            for (x, y) in pairs(h, n, m) {
                let i = xs.binary_search(&x).map_err(|_| invariant_err!("H_{{{n},{m}}} leaves H_{n}"))?;
                let b = p.block(j, y).ok_or_else(|| invariant_err!("H_{{{n},{m}}} leaves H_{m}"))?;
                seen[i * nblocks + b] = true;
            }
            if !seen.iter().all(|&s| s) {
                return fail(format!("statement (2) fails for {n} and {m}"));
            }
        }
    }
    Ok(())
}

/// Fixes matching classes `C_m` on the platoon and keeps, on every index
/// set, the subalgebra generated by the tuples that respect the classes and
/// generate a minimal r-ideal. Returns the new strategy and the classes.
pub fn simple_reduce(h: &Strategy, inst: &Instance, p: &Platoon) -> Result<(Strategy, Vec<ElemSet>)> {
    let nb = h.b_size();
    let class0 = p.congruences[0].block_of(0);
    let classes: Vec<ElemSet> = (0..p.members.len())
        .map(|j| {
            let want = p.links[j][class0];
            let mut c = ElemSet::with_capacity(nb);
            c.extend(
                p.elements[j].iter().enumerate().filter(|&(i, _)| p.congruences[j].block_of(i) == want).map(|(_, &v)| v),
            );
            c
        })
        .collect();
    let index = h.index();
    let tables: Vec<Result<ElemSet>> = (0..index.len())
        .into_par_iter()
        .map(|idx| {
            let set = index.set(idx);
            let power = h.power(inst.alg, idx);
            let carrier = Carrier::new_unchecked(power, h.table(idx).clone());
            let minimal = minimal_ideal_members(&carrier, IdealSide::R);
            let constrained: Vec<(usize, &ElemSet)> = set
                .iter()
                .enumerate()
                .filter_map(|(pos, &a)| p.position(a).map(|j| (pos, &classes[j])))
                .collect();
            let g: Vec<usize> = minimal
                .ones()
                .filter(|&c| constrained.iter().all(|&(pos, cls)| cls.contains(power.digit(c, pos))))
                .collect();
            if g.is_empty() {
                return Err(invariant_err!("simple reduction left no generators on {set:?}"));
            }
            Ok(power.sg_closure(g))
        })
        .collect();
    let tables = tables.into_iter().collect::<Result<Vec<_>>>()?;
    let out = into_strategy(h, tables, "simple reduction")?;
    check_winning(&out, inst).map_err(|e| invariant_err!("simple reduction: {}", e.message()))?;
    for (j, &m) in p.members.iter().enumerate() {
        if !out.unary(m).is_subset(&classes[j]) {
            return Err(invariant_err!("simple reduction left H_{m} outside its class"));
        }
    }
    for idx in 0..index.len() {
        if !out.table(idx).is_subset(h.table(idx)) {
            return Err(invariant_err!("simple reduction grew H{:?}", index.set(idx)));
        }
    }
    Ok((out, classes))
}

/// One entry of the solver log; `potential` is `sum_a |H_a|` afterwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum TraceStep {
    Enforce { potential: usize },
    /// The consistency fixpoint is empty.
    Refuted,
    IdealReduce { coordinate: usize, side: IdealSide, ideal_size: usize, potential: usize },
    SimpleReduce { platoon: Vec<usize>, class_sizes: Vec<usize>, potential: usize },
    Solved { assignment: Vec<usize> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SolveTrace {
    pub k: usize,
    pub steps: Vec<TraceStep>,
}

impl SolveTrace {
    /// Potentials after each enforce or reduction, in order.
    pub fn potentials(&self) -> Vec<usize> {
        self.steps
            .iter()
            .filter_map(|s| match s {
                TraceStep::Enforce { potential }
                | TraceStep::IdealReduce { potential, .. }
                | TraceStep::SimpleReduce { potential, .. } => Some(*potential),
                _ => None,
            })
            .collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.potentials().windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveOptions {
    /// Skip certifying the algebra and checking that it preserves the template.
    pub unchecked: bool,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// A verified homomorphism, or `None` when none exists.
    pub assignment: Option<Vec<usize>>,
    pub trace: SolveTrace,
}

/// A failed run with the log up to the failure.
#[derive(Debug, Clone)]
pub struct SolveError {
    pub error: Error,
    pub trace: SolveTrace,
}

impl fmt::Display for SolveError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for SolveError {}

/// What the solver hands to an observer at each stage.
#[derive(Debug)]
pub enum SolveEvent<'a> {
    /// The algebra whose terms the strategies are closed under.
    Started { algebra: &'a FiniteAlgebra, k: usize },
    Enforced { strategy: &'a Strategy },
    IdealReduced { before: &'a Strategy, after: &'a Strategy, coordinate: usize, ideal: &'a ElemSet, side: IdealSide },
    SimpleReduced { before: &'a Strategy, after: &'a Strategy, platoon: &'a Platoon, classes: &'a [ElemSet] },
}

pub fn solve(a: &RelStructure, b: &RelStructure, alg: &FiniteAlgebra, opts: SolveOptions) -> Result<SolveOutcome, SolveError> {
    solve_observed(a, b, alg, opts, &mut |_| {})
}

/// [`solve`] with a callback at every stage.
pub fn solve_observed(
    a: &RelStructure,
    b: &RelStructure,
    alg: &FiniteAlgebra,
    opts: SolveOptions,
    observer: &mut dyn FnMut(&SolveEvent),
) -> Result<SolveOutcome, SolveError> {
    let mut trace = SolveTrace { k: choose_k(a), steps: Vec::new() };
    match run(a, b, alg, opts, observer, &mut trace) {
        Ok(assignment) => Ok(SolveOutcome { assignment, trace }),
        Err(error) => Err(SolveError { error, trace }),
    }
}

fn run(
    a: &RelStructure,
    b: &RelStructure,
    alg: &FiniteAlgebra,
    opts: SolveOptions,
    observer: &mut dyn FnMut(&SolveEvent),
    trace: &mut SolveTrace,
) -> Result<Option<Vec<usize>>> {
    a.check_same_vocabulary(b)?;
    if alg.size() != b.universe() {
        return Err(Error::Input(format!(
            "algebra has {} elements, template has {}",
            alg.size(),
            b.universe()
        )));
    }
    if !opts.unchecked {
        certify(alg)?;
        validate_template(b, alg)?;
    }
    let pre = preprocess_terms(alg)?;
    let terms = &pre.algebra;
    let k = trace.k;
    observer(&SolveEvent::Started { algebra: terms, k });
    let inst = Instance { a, b, alg: terms };

    let mut h = match init_full(a, b, k)? {
        Consistency::Empty => {
            trace.steps.push(TraceStep::Refuted);
            return Ok(None);
        }
        Consistency::Consistent(h) => match enforce(h, Schedule::Sequential) {
            Consistency::Empty => {
                trace.steps.push(TraceStep::Refuted);
                return Ok(None);
            }
            Consistency::Consistent(h) => h,
        },
    };
    check_winning(&h, &inst).map_err(|e| invariant_err!("consistency fixpoint: {}", e.message()))?;
    trace.steps.push(TraceStep::Enforce { potential: h.potential() });
    observer(&SolveEvent::Enforced { strategy: &h });

    loop {
        let active = active_coordinates(&h);
        if active.is_empty() {
            let s = extract_solution(&h, a, b)?;
            if !is_homomorphism(&s, a, b)? {
                return Err(invariant_err!("extracted map is not a homomorphism"));
            }
            trace.steps.push(TraceStep::Solved { assignment: s.clone() });
            return Ok(Some(s));
        }
        let before = h.potential();
        let ideal = active.iter().find_map(|&c| find_proper_ideal(&unary_carrier(&h, terms, c)).map(|(x, side)| (c, x, side)));
        let next = if let Some((c, x, side)) = ideal {
            let next = ideal_reduce(&h, &inst, c, &x, side)?;
            trace.steps.push(TraceStep::IdealReduce {
                coordinate: c,
                side,
                ideal_size: x.count_ones(..),
                potential: next.potential(),
            });
            observer(&SolveEvent::IdealReduced { before: &h, after: &next, coordinate: c, ideal: &x, side });
            next
        } else {
            let platoon = find_platoon(&h, &inst, &active)?;
            let (next, classes) = simple_reduce(&h, &inst, &platoon)?;
            trace.steps.push(TraceStep::SimpleReduce {
                platoon: platoon.members.clone(),
                class_sizes: classes.iter().map(|c| c.count_ones(..)).collect(),
                potential: next.potential(),
            });
            observer(&SolveEvent::SimpleReduced { before: &h, after: &next, platoon: &platoon, classes: &classes });
            next
        };
        if next.potential() >= before {
            return Err(invariant_err!("potential did not drop: {before} -> {}", next.potential()));
        }
        h = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::brute::{brute_force_hom, DEFAULT_MAP_BUDGET};
    use crate::power::set_of;

    fn k2() -> RelStructure {
        RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1], vec![1, 0]])]).unwrap()
    }

    fn cycle(n: usize) -> RelStructure {
        let e = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
        RelStructure::from_parts(n, vec![("E", 2, e)]).unwrap()
    }

    fn pixley2() -> FiniteAlgebra {
        FiniteAlgebra::from_fns(2, |a| a[0], |a| if a[0] == a[1] { a[2] } else { a[0] }, |a| a[2]).unwrap()
    }

    fn enforced(a: &RelStructure, b: &RelStructure) -> Strategy {
        let h = init_full(a, b, choose_k(a)).unwrap().into_strategy().unwrap();
        enforce(h, Schedule::Sequential).into_strategy().unwrap()
    }

    #[test]
    fn even_cycle_is_colored() {
        let alg = FiniteAlgebra::majority(2);
        let out = solve(&cycle(4), &k2(), &alg, SolveOptions::default()).unwrap();
        let s = out.assignment.unwrap();
        assert!(is_homomorphism(&s, &cycle(4), &k2()).unwrap());
        assert!(out.trace.strictly_decreasing());
        assert_eq!(brute_force_hom(&cycle(4), &k2(), DEFAULT_MAP_BUDGET).unwrap().is_some(), true);
    }

    #[test]
    fn odd_cycles_are_refuted() {
        let alg = FiniteAlgebra::majority(2);
        for n in [3, 5, 7] {
            let out = solve(&cycle(n), &k2(), &alg, SolveOptions::default()).unwrap();
            assert_eq!(out.assignment, None);
            assert_eq!(out.trace.steps, vec![TraceStep::Refuted]);
        }
    }

    #[test]
    fn template_maps_to_itself() {
        let alg = FiniteAlgebra::majority(2);
        let out = solve(&k2(), &k2(), &alg, SolveOptions::default()).unwrap();
        assert!(out.assignment.is_some());
    }

    #[test]
    fn constraint_free_ideal_reduction() {
        let alg = FiniteAlgebra::majority(2);
        let a = RelStructure::from_parts(3, vec![("E", 2, vec![])]).unwrap();
        let h = enforced(&a, &k2());
        let inst = Instance { a: &a, b: &k2(), alg: &alg };
        let x = set_of(2, [0]);
        let out = ideal_reduce(&h, &inst, 1, &x, IdealSide::L).unwrap();
        assert_eq!(out.unary(1), &x);
        assert_eq!(out.unary(0).count_ones(..), 2);
        assert_eq!(out.unary(2).count_ones(..), 2);
        for idx in 0..h.index().len() {
            assert!(out.table(idx).is_subset(h.table(idx)));
        }
        let whole = set_of(2, [0, 1]);
        assert!(matches!(ideal_reduce(&h, &inst, 1, &whole, IdealSide::L), Err(Error::Precondition(_))));
    }

    #[test]
    fn isomorphic_pair_forms_a_platoon() {
        // Pixley is simple and ideal free; H_{0,1} is the graph of x -> 1-x.
        let alg = pixley2();
        let neq = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1], vec![1, 0]])]).unwrap();
        let a = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1]])]).unwrap();
        let h = enforced(&a, &neq);
        let inst = Instance { a: &a, b: &neq, alg: &alg };
        let p = find_platoon(&h, &inst, &[0, 1]).unwrap();
        assert_eq!(p.members, vec![0, 1]);
        assert!(p.congruences.iter().all(Congruence::is_identity));
        assert_eq!(p.links[1], vec![1, 0]);
        let (g, classes) = simple_reduce(&h, &inst, &p).unwrap();
        assert_eq!(classes[0], set_of(2, [0]));
        assert_eq!(g.unary(0), &set_of(2, [0]));
        assert_eq!(g.unary(1), &set_of(2, [1]));
    }

    #[test]
    fn full_product_platoon_is_a_singleton() {
        let alg = pixley2();
        let b = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]])]).unwrap();
        let a = RelStructure::from_parts(2, vec![("E", 2, vec![vec![0, 1]])]).unwrap();
        let h = enforced(&a, &b);
        let inst = Instance { a: &a, b: &b, alg: &alg };
        let p = find_platoon(&h, &inst, &[0, 1]).unwrap();
        assert_eq!(p.members, vec![0]);
        let (g, _) = simple_reduce(&h, &inst, &p).unwrap();
        assert!(g.potential() < h.potential());
    }

    #[test]
    fn pixley_instances_agree_with_brute_force() {
        let alg = pixley2();
        let neq = k2();
        for n in 2..=6 {
            let c = cycle(n);
            let out = solve(&c, &neq, &alg, SolveOptions::default()).unwrap();
            let brute = brute_force_hom(&c, &neq, DEFAULT_MAP_BUDGET).unwrap();
            assert_eq!(out.assignment.is_some(), brute.is_some(), "cycle {n}");
            assert!(out.trace.strictly_decreasing());
        }
    }

    #[test]
    fn non_cd4_algebra_is_rejected() {
        let p = crate::algebra::OperationTable::projection(3, 2, 0).unwrap();
        let proj = FiniteAlgebra::new(p.clone(), p.clone(), p).unwrap();
        let err = solve(&cycle(4), &k2(), &proj, SolveOptions::default()).unwrap_err();
        assert!(matches!(err.error, Error::Input(_)));
    }
}
