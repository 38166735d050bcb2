//! Finite powers of an algebra and subuniverse generation inside them.
//!
//! A tuple `(t_0, .., t_{m-1})` over an `n`-element algebra is encoded as the
//! integer `sum t_j * n^(m-1-j)`, so coordinate 0 is the most significant digit
//! and codes sort lexicographically. Sets of tuples are bitsets over codes.

use fixedbitset::FixedBitSet;

use crate::algebra::{FiniteAlgebra, Op};
use crate::error::{input_err, Result};
use crate::ideals::IdealSide;

/// Codes at or above this bound are refused; keeps bitsets desk sized.
pub const MAX_POWER_CODES: usize = 1 << 24;

pub type ElemSet = FixedBitSet;

/// The `arity`-th power of an algebra, with coordinatewise operations.
#[derive(Debug, Clone, Copy)]
pub struct Power<'a> {
    alg: &'a FiniteAlgebra,
    arity: usize,
    len: usize,
}

impl<'a> Power<'a> {
    pub fn new(alg: &'a FiniteAlgebra, arity: usize) -> Result<Self> {
        let len = alg
            .size()
            .checked_pow(arity as u32)
            .filter(|&l| l <= MAX_POWER_CODES)
            .ok_or_else(|| input_err!("power {arity} of a {}-element algebra is too large", alg.size()))?;
        Ok(Self { alg, arity, len })
    }

    pub fn algebra(&self) -> &'a FiniteAlgebra {
        self.alg
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of tuples in the power.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn empty_set(&self) -> ElemSet {
        FixedBitSet::with_capacity(self.len)
    }

    pub fn full_set(&self) -> ElemSet {
        let mut s = self.empty_set();
        s.insert_range(..);
        s
    }

    pub fn encode(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.arity);
        tuple.iter().fold(0, |acc, &t| acc * self.alg.size() + t)
    }

    pub fn encode_checked(&self, tuple: &[usize]) -> Result<usize> {
        if tuple.len() != self.arity {
            return Err(input_err!("tuple {tuple:?} does not have length {}", self.arity));
        }
        if let Some(&t) = tuple.iter().find(|&&t| t >= self.alg.size()) {
            return Err(input_err!("tuple entry {t} outside universe of size {}", self.alg.size()));
        }
        Ok(self.encode(tuple))
    }

    pub fn decode(&self, mut code: usize) -> Vec<usize> {
        let n = self.alg.size();
        let mut out = vec![0; self.arity];
        for slot in out.iter_mut().rev() {
            *slot = code % n;
            code /= n;
        }
        out
    }

    /// Coordinate `pos` of the tuple with this code.
    #[inline]
    pub fn digit(&self, code: usize, pos: usize) -> usize {
        let n = self.alg.size();
        (code / n.pow((self.arity - 1 - pos) as u32)) % n
    }

    /// Coordinatewise application of a basic operation.
    #[inline]
    pub fn apply(&self, op: Op, x: usize, y: usize, z: usize) -> usize {
        if self.arity == 1 {
            return self.alg.apply(op, x, y, z);
        }
        let n = self.alg.size();
        let (mut x, mut y, mut z) = (x, y, z);
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.arity {
            out += self.alg.apply(op, x % n, y % n, z % n) * place;
            x /= n;
            y /= n;
            z /= n;
            place *= n;
        }
        out
    }

    /// `l(x,y) = p2(y,x,x)` in the power.
    #[inline]
    pub fn l(&self, x: usize, y: usize) -> usize {
        self.apply(Op::P2, y, x, x)
    }

    /// `r(x,y) = p2(x,x,y)` in the power.
    #[inline]
    pub fn r(&self, x: usize, y: usize) -> usize {
        self.apply(Op::P2, x, x, y)
    }

    /// True when `set` is closed under the three coordinatewise operations.
    pub fn is_closed(&self, set: &ElemSet) -> bool {
        self.closure_witness(set).is_none()
    }

    /// An argument triple whose image escapes `set`, if any.
    pub fn closure_witness(&self, set: &ElemSet) -> Option<(Op, [usize; 3])> {
        let members: Vec<usize> = set.ones().collect();
        for &x in &members {
            for &y in &members {
                for &z in &members {
                    for op in Op::ALL {
                        if !set.contains(self.apply(op, x, y, z)) {
                            return Some((op, [x, y, z]));
                        }
                    }
                }
            }
        }
        None
    }

    /// Subuniverse generated by `seed` (the closure `Sg(seed)`).
    pub fn sg_closure(&self, seed: impl IntoIterator<Item = usize>) -> ElemSet {
        self.close(seed, None)
    }

    /// Least superset of `seed` closed under the operations and, when
    /// `absorb` is given, under `x -> side(x, y)` for every `y` in the domain.
    pub(crate) fn close(
        &self,
        seed: impl IntoIterator<Item = usize>,
        absorb: Option<(&[usize], IdealSide)>,
    ) -> ElemSet {
        let mut set = self.empty_set();
        let mut members = Vec::new();
        for s in seed {
            if !set.put(s) {
                members.push(s);
            }
        }
        let push = |v: usize, set: &mut ElemSet, members: &mut Vec<usize>| {
            if !set.put(v) {
                members.push(v);
            }
        };
        // Semi-naive: at step i, handle the triples whose largest index is i.
        let mut i = 0;
        while i < members.len() {
            let e = members[i];
            if let Some((domain, side)) = absorb {
                for &y in domain {
                    let v = match side {
                        IdealSide::L => self.l(e, y),
                        IdealSide::R => self.r(e, y),
                    };
                    push(v, &mut set, &mut members);
                }
            }
            for a in 0..=i {
                for b in 0..=i {
                    let (u, w) = (members[a], members[b]);
                    for op in Op::ALL {
                        push(self.apply(op, e, u, w), &mut set, &mut members);
                        if a < i {
                            push(self.apply(op, u, e, w), &mut set, &mut members);
                            if b < i {
                                push(self.apply(op, u, w, e), &mut set, &mut members);
                            }
                        }
                    }
                }
            }
            i += 1;
        }
        set
    }
}

/// Drops coordinate `pos` from a code of an `arity`-tuple over `n` elements.
#[inline]
pub fn drop_coordinate(code: usize, arity: usize, pos: usize, n: usize) -> usize {
    let low = n.pow((arity - 1 - pos) as u32);
    (code / (low * n)) * low + code % low
}

pub fn set_of(len: usize, items: impl IntoIterator<Item = usize>) -> ElemSet {
    let mut s = FixedBitSet::with_capacity(len);
    s.extend(items);
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encode_decode() {
        let alg = FiniteAlgebra::majority(3);
        let p = Power::new(&alg, 3).unwrap();
        assert_eq!(p.encode(&[1, 2, 0]), 15);
        assert_eq!(p.decode(15), vec![1, 2, 0]);
        assert_eq!(p.digit(15, 1), 2);
        let q = Power::new(&alg, 2).unwrap();
        assert_eq!(drop_coordinate(15, 3, 1, 3), q.encode(&[1, 0]));
    }

    #[test]
    fn singleton_is_closed() {
        let alg = FiniteAlgebra::majority(2);
        let p = Power::new(&alg, 1).unwrap();
        assert_eq!(p.sg_closure([0]).ones().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn two_coordinate_majority_closure() {
        // Every coordinatewise majority of three tuples from {(0,1),(1,0)}
        // returns one of them, so the set is already a subuniverse.
        let alg = FiniteAlgebra::majority(2);
        let p = Power::new(&alg, 2).unwrap();
        let seed = [p.encode(&[0, 1]), p.encode(&[1, 0])];
        let got: Vec<_> = p.sg_closure(seed).ones().collect();
        assert_eq!(got, vec![1, 2]);
    }

    #[test]
    fn full_power_is_closed() {
        let alg = FiniteAlgebra::majority(3);
        let p = Power::new(&alg, 2).unwrap();
        assert_eq!(p.sg_closure(0..p.len()), p.full_set());
    }

    /// Brute-force closure: apply every operation to every triple until stable.
    fn naive_closure(p: &Power, seed: &[usize]) -> ElemSet {
        let mut set = set_of(p.len(), seed.iter().copied());
        loop {
            let members: Vec<_> = set.ones().collect();
            let mut grew = false;
            for &x in &members {
                for &y in &members {
                    for &z in &members {
                        for op in Op::ALL {
                            grew |= !set.put(p.apply(op, x, y, z));
                        }
                    }
                }
            }
            if !grew {
                return set;
            }
        }
    }

    fn arb_algebra() -> impl Strategy<Value = FiniteAlgebra> {
        (2usize..=3, proptest::collection::vec(0usize..3, 81 * 3)).prop_map(|(n, raw)| {
            let mut it = raw.into_iter();
            let mut mk = || {
                let vals: Vec<usize> = (0..n * n * n).map(|_| it.next().unwrap() % n).collect();
                crate::algebra::OperationTable::from_fn(3, n, |a| {
                    if a[0] == a[1] && a[1] == a[2] {
                        a[0]
                    } else {
                        vals[(a[0] * n + a[1]) * n + a[2]]
                    }
                })
                .unwrap()
            };
            let (a, b, c) = (mk(), mk(), mk());
            FiniteAlgebra::new(a, b, c).unwrap()
        })
    }

    proptest! {
        #[test]
        fn semi_naive_matches_naive(alg in arb_algebra(), seed in proptest::collection::vec(0usize..9, 1..4)) {
            let p = Power::new(&alg, 2).unwrap();
            let seed: Vec<usize> = seed.into_iter().map(|s| s % p.len()).collect();
            prop_assert_eq!(p.sg_closure(seed.iter().copied()), naive_closure(&p, &seed));
        }
    }
}
