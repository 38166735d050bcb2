//! Absorbing ideals of subalgebras of finite powers.
//!
//! An l-ideal of `D` is a nonempty subuniverse `C` with `l(x,y) in C` whenever
//! `x in C` and `y in D`, where `l(x,y) = p2(y,x,x)`; r-ideals use
//! `r(x,y) = p2(x,x,y)`. Every ideal contains the ideal generated by each of
//! its elements, so scanning principal ideals decides ideal-freeness and finds
//! the minimal ideals.

use std::cell::OnceCell;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, Op, OperationTable};
use crate::error::{input_err, precondition_err, Result};
use crate::power::{ElemSet, Power};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IdealSide {
    L,
    R,
}

impl IdealSide {
    pub const BOTH: [IdealSide; 2] = [IdealSide::L, IdealSide::R];

    #[inline]
    pub fn apply(self, power: &Power, x: usize, y: usize) -> usize {
        match self {
            IdealSide::L => power.l(x, y),
            IdealSide::R => power.r(x, y),
        }
    }
}

/// A subuniverse of a finite power, with the power's operations.
#[derive(Debug, Clone)]
pub struct Carrier<'a> {
    power: Power<'a>,
    set: ElemSet,
    members: Vec<usize>,
    /// Operation tables on member positions, built on first use.
    local: OnceCell<Option<LocalOps>>,
}

/// Carriers up to this size get cached operation tables (3 * n^3 entries).
const LOCAL_TABLE_LIMIT: usize = 100;

/// The three operations and both binary terms of a carrier, on positions.
#[derive(Debug, Clone)]
struct LocalOps {
    n: usize,
    ops: [Vec<u16>; 3],
    side: [Vec<u16>; 2],
}

impl LocalOps {
    fn build(c: &Carrier) -> Option<Self> {
        let n = c.len();
        if n > LOCAL_TABLE_LIMIT {
            return None;
        }
        let m = &c.members;
        let pos = |v: usize| c.local_index(v).expect("carrier is closed") as u16;
        let mk = |op: Op| {
            let mut t = Vec::with_capacity(n * n * n);
            for &x in m {
                for &y in m {
                    for &z in m {
                        t.push(pos(c.power.apply(op, x, y, z)));
                    }
                }
            }
            t
        };
        let mk2 = |side: IdealSide| {
            let mut t = Vec::with_capacity(n * n);
            for &x in m {
                for &y in m {
                    t.push(pos(side.apply(&c.power, x, y)));
                }
            }
            t
        };
        Some(Self { n, ops: [mk(Op::P1), mk(Op::P2), mk(Op::P3)], side: [mk2(IdealSide::L), mk2(IdealSide::R)] })
    }

    /// Semi-naive closure on positions, mirroring [`Power::close`].
    fn close(&self, seed: impl IntoIterator<Item = usize>, side: IdealSide) -> Vec<usize> {
        let n = self.n;
        let mut seen = vec![false; n];
        let mut members: Vec<usize> = Vec::new();
        for s in seed {
            if !std::mem::replace(&mut seen[s], true) {
                members.push(s);
            }
        }
        let absorb = &self.side[side as usize];
        let mut i = 0;
        while i < members.len() {
            let e = members[i];
            for y in 0..n {
                let v = absorb[e * n + y] as usize;
                if !std::mem::replace(&mut seen[v], true) {
                    members.push(v);
                }
            }
            for a in 0..=i {
                for b in 0..=i {
                    let (u, w) = (members[a], members[b]);
                    for t in &self.ops {
                        let mut put = |v: u16| {
                            let v = v as usize;
                            if !std::mem::replace(&mut seen[v], true) {
                                members.push(v);
                            }
                        };
                        put(t[(e * n + u) * n + w]);
                        if a < i {
                            put(t[(u * n + e) * n + w]);
                            if b < i {
                                put(t[(u * n + w) * n + e]);
                            }
                        }
                    }
                }
            }
            i += 1;
        }
        members
    }
}

impl<'a> Carrier<'a> {
    /// Checks that `set` is a nonempty subuniverse.
    pub fn new(power: Power<'a>, set: ElemSet) -> Result<Self> {
        if set.is_clear() {
            return Err(input_err!("carrier must be nonempty"));
        }
        if let Some((op, args)) = power.closure_witness(&set) {
            return Err(input_err!("carrier is not a subuniverse: {} escapes at {args:?}", op.name()));
        }
        Ok(Self::new_unchecked(power, set))
    }

    /// Caller guarantees `set` is closed.
    pub fn new_unchecked(power: Power<'a>, set: ElemSet) -> Self {
        let members = set.ones().collect();
        Self { power, set, members, local: OnceCell::new() }
    }

    /// The whole algebra as a carrier.
    pub fn whole(alg: &'a FiniteAlgebra) -> Self {
        let power = Power::new(alg, 1).expect("first power always fits");
        let set = power.full_set();
        Self::new_unchecked(power, set)
    }

    pub fn power(&self) -> &Power<'a> {
        &self.power
    }

    pub fn set(&self) -> &ElemSet {
        &self.set
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.set.len() && self.set.contains(x)
    }

    pub fn local_index(&self, x: usize) -> Option<usize> {
        self.members.binary_search(&x).ok()
    }

    /// The carrier as a standalone algebra, member `i` becoming element `i`.
    pub fn to_algebra(&self) -> Result<FiniteAlgebra> {
        let m = &self.members;
        let mk = |op: Op| {
            OperationTable::from_fn(3, m.len(), |a| {
                let v = self.power.apply(op, m[a[0]], m[a[1]], m[a[2]]);
                self.local_index(v).expect("carrier is closed")
            })
        };
        FiniteAlgebra::new(mk(Op::P1)?, mk(Op::P2)?, mk(Op::P3)?)
    }

    pub fn empty(&self) -> ElemSet {
        self.power.empty_set()
    }
}

fn check_subset(d: &Carrier, c: &ElemSet) -> Result<()> {
    if c.is_clear() {
        return Err(input_err!("ideal candidate must be nonempty"));
    }
    if !c.is_subset(d.set()) {
        return Err(input_err!("candidate set is not contained in the carrier"));
    }
    Ok(())
}

/// True iff `c` is a subuniverse of `d` absorbing `side` from all of `d`.
pub fn is_ideal(d: &Carrier, c: &ElemSet, side: IdealSide) -> Result<bool> {
    check_subset(d, c)?;
    Ok(d.power().is_closed(c) && absorbs(d, c, side))
}

fn absorbs(d: &Carrier, c: &ElemSet, side: IdealSide) -> bool {
    c.ones().all(|x| d.members().iter().all(|&y| c.contains(side.apply(d.power(), x, y))))
}

/// Least `side`-ideal of `d` containing `seed`.
pub fn ideal_closure(d: &Carrier, seed: &ElemSet, side: IdealSide) -> Result<ElemSet> {
    check_subset(d, seed)?;
    Ok(closure(d, seed.ones(), side))
}

fn closure(d: &Carrier, seed: impl IntoIterator<Item = usize>, side: IdealSide) -> ElemSet {
    match d.local.get_or_init(|| LocalOps::build(d)) {
        Some(ops) => {
            let seed = seed.into_iter().map(|v| d.local_index(v).expect("seed inside the carrier"));
            let mut out = d.empty();
            out.extend(ops.close(seed, side).into_iter().map(|i| d.members[i]));
            out
        }
        None => d.power().close(seed, Some((d.members(), side))),
    }
}

fn principal(d: &Carrier, a: usize, side: IdealSide) -> ElemSet {
    closure(d, [a], side)
}

fn require_member(d: &Carrier, a: usize) -> Result<()> {
    if d.contains(a) {
        Ok(())
    } else {
        Err(input_err!("element {a} is not in the carrier"))
    }
}

/// True iff every element of the ideal generated by `a` generates it back.
pub fn generates_minimal_ideal(d: &Carrier, a: usize, side: IdealSide) -> Result<bool> {
    require_member(d, a)?;
    let ideal = principal(d, a, side);
    Ok(ideal.ones().all(|c| c == a || principal(d, c, side).contains(a)))
}

/// True iff the only l-ideal and the only r-ideal of `d` is `d` itself.
pub fn is_ideal_free(d: &Carrier) -> bool {
    IdealSide::BOTH
        .iter()
        .all(|&side| d.members().iter().all(|&a| principal(d, a, side).count_ones(..) == d.len()))
}

/// A proper ideal that is minimal under inclusion among proper principal
/// ideals, with its side; `None` when `d` is ideal free.
///
/// Candidates are scanned by generator (ascending), L before R. Among the
/// inclusion-minimal ones, the smallest by size then lexicographic element
/// list is returned.
pub fn find_proper_ideal(d: &Carrier) -> Option<(ElemSet, IdealSide)> {
    let mut candidates: Vec<(ElemSet, IdealSide)> = Vec::new();
    for &a in d.members() {
        for side in IdealSide::BOTH {
            let ideal = principal(d, a, side);
            if ideal.count_ones(..) < d.len() {
                candidates.push((ideal, side));
            }
        }
    }
    let minimal = |s: &ElemSet| {
        !candidates.iter().any(|(t, _)| t != s && t.is_subset(s))
    };
    candidates
        .iter()
        .filter(|(s, _)| minimal(s))
        .min_by_key(|(s, _)| (s.count_ones(..), s.ones().collect::<Vec<_>>()))
        .cloned()
}

/// For a subuniverse `x` that is not a `side`-ideal, a pair `(u, v)` with
/// `u in x`, `v in d \ x` and `side(u, v) = v`.
///
/// Exhaustive search; `None` means no such pair exists.
pub fn absorption_witness(d: &Carrier, x: &ElemSet, side: IdealSide) -> Result<Option<(usize, usize)>> {
    check_subset(d, x)?;
    if !d.power().is_closed(x) {
        return Err(precondition_err!("set is not a subuniverse"));
    }
    if absorbs(d, x, side) {
        return Err(precondition_err!("set is already a {side:?}-ideal"));
    }
    for u in x.ones() {
        for &v in d.members() {
            if !x.contains(v) && side.apply(d.power(), u, v) == v {
                return Ok(Some((u, v)));
            }
        }
    }
    Ok(None)
}

/// Union of all minimal `side`-ideals of `d`: exactly the elements that
/// generate a minimal ideal.
///
/// Descends from each element to a smaller principal ideal until none
/// exists; each principal ideal is computed at most once.
pub fn minimal_ideal_members(d: &Carrier, side: IdealSide) -> ElemSet {
    let mut memo: Vec<Option<ElemSet>> = vec![None; d.len()];
    let mut ideal_of = |c: usize| -> ElemSet {
        let i = d.local_index(c).expect("member of the carrier");
        memo[i].get_or_insert_with(|| principal(d, c, side)).clone()
    };
    let mut union = d.empty();
    for &t in d.members() {
        if union.contains(t) {
            continue;
        }
        let mut current = ideal_of(t);
        let mut generator = t;
        loop {
            if current.ones().any(|c| union.contains(c)) {
                // Contains a known minimal ideal, so it is not minimal itself
                // (otherwise `generator` would already be in `union`).
                break;
            }
            let smaller = current
                .ones()
                .filter(|&c| c != generator)
                .map(|c| (c, ideal_of(c)))
                .find(|(_, ideal)| !ideal.contains(generator));
            match smaller {
                Some((c, ideal)) => {
                    current = ideal;
                    generator = c;
                }
                None => {
                    union.union_with(&current);
                    break;
                }
            }
        }
    }
    union
}

/// Every `side`-ideal of `d`.
pub fn all_ideals(d: &Carrier, side: IdealSide) -> Vec<ElemSet> {
    all_closed_sets(d.members(), |seed| closure(d, seed.ones(), side))
}

/// Every nonempty closed set of a closure operator over `universe`, found by
/// adding one element at a time to sets already known to be closed.
pub fn all_closed_sets(universe: &[usize], close: impl Fn(&ElemSet) -> ElemSet) -> Vec<ElemSet> {
    let len = universe.iter().max().map_or(0, |m| m + 1);
    let mut seen: HashSet<ElemSet> = HashSet::new();
    let mut order = Vec::new();
    let mut stack = Vec::new();
    for &x in universe {
        let mut s = ElemSet::with_capacity(len);
        s.insert(x);
        stack.push(close(&s));
    }
    while let Some(s) = stack.pop() {
        if !seen.insert(s.clone()) {
            continue;
        }
        for &x in universe {
            if !s.contains(x) {
                let mut t = s.clone();
                t.grow(len);
                t.insert(x);
                let c = close(&t);
                if !seen.contains(&c) {
                    stack.push(c);
                }
            }
        }
        order.push(s);
    }
    order.sort_by_key(|s| (s.count_ones(..), s.ones().collect::<Vec<_>>()));
    order
}
