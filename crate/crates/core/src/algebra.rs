//! Finite idempotent algebras with three ternary basic operations.
//!
//! Elements of an `n`-element universe are the dense integers `0..n`.
//! Operation tables are flat and row-major in the argument tuple, so the
//! first argument is the most significant digit.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input_err, Error, Result};

/// Largest universe an operation table may have; entries are stored as `u8`.
pub const MAX_UNIVERSE: usize = 255;

/// A finitary operation on `{0..size}` stored as a flat value table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OperationTable {
    arity: usize,
    size: usize,
    strides: Vec<usize>,
    table: Vec<u8>,
}

impl OperationTable {
    pub fn new(arity: usize, size: usize, table: Vec<usize>) -> Result<Self> {
        if arity == 0 {
            return Err(input_err!("operation arity must be at least 1"));
        }
        if size == 0 || size > MAX_UNIVERSE {
            return Err(input_err!("universe size {size} outside 1..={MAX_UNIVERSE}"));
        }
        let expected = size
            .checked_pow(arity as u32)
            .ok_or_else(|| input_err!("table for arity {arity} over {size} elements is too large"))?;
        if table.len() != expected {
            return Err(input_err!(
                "table length {} does not match size^arity = {expected}",
                table.len()
            ));
        }
        if let Some((i, v)) = table.iter().enumerate().find(|(_, &v)| v >= size) {
            return Err(input_err!("table entry {i} has value {v} outside 0..{size}"));
        }
        let table = table.into_iter().map(|v| v as u8).collect();
        Ok(Self { arity, size, strides: strides(arity, size), table })
    }

    /// Tabulates `f` over every argument tuple.
    pub fn from_fn(arity: usize, size: usize, mut f: impl FnMut(&[usize]) -> usize) -> Result<Self> {
        let mut args = vec![0; arity];
        let total = size.pow(arity as u32);
        let mut table = Vec::with_capacity(total);
        for _ in 0..total {
            table.push(f(&args));
            for pos in (0..arity).rev() {
                args[pos] += 1;
                if args[pos] < size {
                    break;
                }
                args[pos] = 0;
            }
        }
        Self::new(arity, size, table)
    }

    pub fn projection(arity: usize, size: usize, index: usize) -> Result<Self> {
        if index >= arity {
            return Err(input_err!("projection index {index} out of range for arity {arity}"));
        }
        Self::from_fn(arity, size, |args| args[index])
    }

    /// Ternary majority: returns the repeated value when one exists, else the first argument.
    pub fn majority(size: usize) -> Self {
        Self::from_fn(3, size, |a| if a[1] == a[2] { a[1] } else { a[0] })
            .expect("majority table is well formed")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Raw table in row-major order.
    pub fn values(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.table.iter().map(|&v| v as usize)
    }

    pub fn eval(&self, args: &[usize]) -> Result<usize> {
        if args.len() != self.arity {
            return Err(input_err!("expected {} arguments, got {}", self.arity, args.len()));
        }
        if let Some(&a) = args.iter().find(|&&a| a >= self.size) {
            return Err(input_err!("argument {a} outside 0..{}", self.size));
        }
        Ok(self.get(args))
    }

    #[inline]
    pub fn get(&self, args: &[usize]) -> usize {
        let idx: usize = args.iter().zip(&self.strides).map(|(a, s)| a * s).sum();
        self.table[idx] as usize
    }

    #[inline]
    pub fn get2(&self, x: usize, y: usize) -> usize {
        debug_assert_eq!(self.arity, 2);
        self.table[x * self.size + y] as usize
    }

    #[inline]
    pub fn get3(&self, x: usize, y: usize, z: usize) -> usize {
        debug_assert_eq!(self.arity, 3);
        self.table[(x * self.size + y) * self.size + z] as usize
    }

    pub fn is_idempotent(&self) -> bool {
        (0..self.size).all(|x| self.get(&vec![x; self.arity]) == x)
    }
}

fn strides(arity: usize, size: usize) -> Vec<usize> {
    let mut s = vec![1; arity];
    for i in (0..arity.saturating_sub(1)).rev() {
        s[i] = s[i + 1] * size;
    }
    s
}

impl fmt::Debug for OperationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OperationTable")
            .field("arity", &self.arity)
            .field("size", &self.size)
            .field("table", &self.table)
            .finish()
    }
}

/// One of the three basic operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    P1,
    P2,
    P3,
}

impl Op {
    pub const ALL: [Op; 3] = [Op::P1, Op::P2, Op::P3];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::P1 => "p1",
            Op::P2 => "p2",
            Op::P3 => "p3",
        }
    }
}

/// A finite idempotent algebra in the CD(4) signature: three ternary operations.
///
/// Equality and hashing compare the tables only.
#[derive(Clone)]
pub struct FiniteAlgebra {
    size: usize,
    ops: [OperationTable; 3],
    verified: bool,
}

impl FiniteAlgebra {
    /// Builds an algebra, checking that all three tables are ternary,
    /// share one universe, and are idempotent.
    pub fn new(p1: OperationTable, p2: OperationTable, p3: OperationTable) -> Result<Self> {
        let size = p1.size();
        for (op, t) in Op::ALL.iter().zip([&p1, &p2, &p3]) {
            if t.arity() != 3 {
                return Err(input_err!("{} must be ternary, has arity {}", op.name(), t.arity()));
            }
            if t.size() != size {
                return Err(input_err!(
                    "{} is over {} elements but p1 is over {size}",
                    op.name(),
                    t.size()
                ));
            }
            if !t.is_idempotent() {
                return Err(input_err!("{} is not idempotent", op.name()));
            }
        }
        Ok(Self { size, ops: [p1, p2, p3], verified: false })
    }

    pub fn from_fns(
        size: usize,
        f1: impl FnMut(&[usize]) -> usize,
        f2: impl FnMut(&[usize]) -> usize,
        f3: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self> {
        Self::new(
            OperationTable::from_fn(3, size, f1)?,
            OperationTable::from_fn(3, size, f2)?,
            OperationTable::from_fn(3, size, f3)?,
        )
    }

    /// The algebra whose three operations are all the majority operation.
    pub fn majority(size: usize) -> Self {
        let m = OperationTable::majority(size);
        Self::new(m.clone(), m.clone(), m).expect("majority is idempotent")
    }

    pub fn trivial() -> Self {
        Self::majority(1)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn op(&self, op: Op) -> &OperationTable {
        &self.ops[op.index()]
    }

    pub fn ops(&self) -> &[OperationTable; 3] {
        &self.ops
    }

    #[inline]
    pub fn apply(&self, op: Op, x: usize, y: usize, z: usize) -> usize {
        self.ops[op.index()].get3(x, y, z)
    }

    /// `l(x,y) = p2(y,x,x)`
    #[inline]
    pub fn l(&self, x: usize, y: usize) -> usize {
        self.apply(Op::P2, y, x, x)
    }

    /// `r(x,y) = p2(x,x,y)`
    #[inline]
    pub fn r(&self, x: usize, y: usize) -> usize {
        self.apply(Op::P2, x, x, y)
    }

    /// True only for algebras produced by [`crate::jonsson::certify`].
    pub fn is_verified(&self) -> bool {
        self.verified
    }

    pub(crate) fn mark_verified(mut self) -> Self {
        self.verified = true;
        self
    }

    /// Restriction to a subuniverse given as a sorted element list; element
    /// `elems[i]` becomes `i`.
    pub fn subalgebra(&self, elems: &[usize]) -> Result<Self> {
        let mut local = vec![usize::MAX; self.size];
        for (i, &e) in elems.iter().enumerate() {
            if e >= self.size {
                return Err(input_err!("element {e} outside universe of size {}", self.size));
            }
            local[e] = i;
        }
        let mut tables = Vec::with_capacity(3);
        for op in Op::ALL {
            let mut bad = None;
            let t = OperationTable::from_fn(3, elems.len(), |a| {
                let v = local[self.apply(op, elems[a[0]], elems[a[1]], elems[a[2]])];
                if v == usize::MAX {
                    bad = Some(a.to_vec());
                    0
                } else {
                    v
                }
            })?;
            if let Some(a) = bad {
                return Err(input_err!("subset is not a subuniverse: {} escapes at {a:?}", op.name()));
            }
            tables.push(t);
        }
        let [p1, p2, p3]: [OperationTable; 3] = tables.try_into().expect("three tables");
        Self::new(p1, p2, p3)
    }

    /// Direct product; the pair `(x, y)` is encoded as `x * other.size() + y`.
    pub fn product(&self, other: &FiniteAlgebra) -> Result<Self> {
        let m = other.size;
        let size = self.size * m;
        if size > MAX_UNIVERSE {
            return Err(input_err!("product of sizes {} and {m} is too large", self.size));
        }
        let mk = |op: Op| {
            OperationTable::from_fn(3, size, |a| {
                let x = self.apply(op, a[0] / m, a[1] / m, a[2] / m);
                let y = other.apply(op, a[0] % m, a[1] % m, a[2] % m);
                x * m + y
            })
        };
        Self::new(mk(Op::P1)?, mk(Op::P2)?, mk(Op::P3)?)
    }

    /// Applies a bijective relabelling `perm` (old element -> new element).
    pub fn relabel(&self, perm: &[usize]) -> Self {
        let n = self.size;
        let mut inv = vec![0; n];
        for (old, &new) in perm.iter().enumerate() {
            inv[new] = old;
        }
        let mk = |op: Op| {
            OperationTable::from_fn(3, n, |a| perm[self.apply(op, inv[a[0]], inv[a[1]], inv[a[2]])])
                .expect("relabelled table is well formed")
        };
        Self { size: n, ops: [mk(Op::P1), mk(Op::P2), mk(Op::P3)], verified: self.verified }
    }

    pub fn to_file(&self) -> AlgebraFile {
        AlgebraFile {
            size: self.size,
            ops: OpsFile {
                p1: self.ops[0].values().collect(),
                p2: self.ops[1].values().collect(),
                p3: self.ops[2].values().collect(),
            },
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AlgebraFile =
            serde_json::from_str(text).map_err(|e| input_err!("malformed algebra JSON: {e}"))?;
        Self::try_from(file)
    }
}

impl PartialEq for FiniteAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size && self.ops == other.ops
    }
}

impl Eq for FiniteAlgebra {}

impl std::hash::Hash for FiniteAlgebra {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.size.hash(state);
        self.ops.hash(state);
    }
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteAlgebra")
            .field("size", &self.size)
            .field("p1", &self.ops[0].table)
            .field("p2", &self.ops[1].table)
            .field("p3", &self.ops[2].table)
            .finish()
    }
}

/// On-disk algebra: `{ "size": n, "ops": { "p1": [...], "p2": [...], "p3": [...] } }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraFile {
    pub size: usize,
    pub ops: OpsFile,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpsFile {
    pub p1: Vec<usize>,
    pub p2: Vec<usize>,
    pub p3: Vec<usize>,
}

impl TryFrom<AlgebraFile> for FiniteAlgebra {
    type Error = Error;

    fn try_from(file: AlgebraFile) -> Result<Self> {
        let OpsFile { p1, p2, p3 } = file.ops;
        let size = file.size;
        FiniteAlgebra::new(
            OperationTable::new(3, size, p1)?,
            OperationTable::new(3, size, p2)?,
            OperationTable::new(3, size, p3)?,
        )
    }
}

/// Term over the basic operations; leaves are variable indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermExpr {
    Var(usize),
    Apply(Op, Box<[TermExpr; 3]>),
}

impl TermExpr {
    pub fn var(i: usize) -> Self {
        TermExpr::Var(i)
    }

    pub fn apply(op: Op, a: TermExpr, b: TermExpr, c: TermExpr) -> Self {
        TermExpr::Apply(op, Box::new([a, b, c]))
    }

    /// Largest variable index plus one.
    pub fn arity(&self) -> usize {
        match self {
            TermExpr::Var(i) => i + 1,
            TermExpr::Apply(_, args) => args.iter().map(TermExpr::arity).max().unwrap_or(0),
        }
    }

    /// Replaces each variable `i` by `subst[i]`.
    pub fn substitute(&self, subst: &[TermExpr]) -> Result<TermExpr> {
        match self {
            TermExpr::Var(i) => subst
                .get(*i)
                .cloned()
                .ok_or_else(|| input_err!("variable {i} has no substitution")),
            TermExpr::Apply(op, args) => Ok(TermExpr::apply(
                *op,
                args[0].substitute(subst)?,
                args[1].substitute(subst)?,
                args[2].substitute(subst)?,
            )),
        }
    }
}

pub fn eval_op(op: &OperationTable, args: &[usize]) -> Result<usize> {
    op.eval(args)
}

pub fn eval_term(term: &TermExpr, alg: &FiniteAlgebra, args: &[usize]) -> Result<usize> {
    if let Some(&a) = args.iter().find(|&&a| a >= alg.size()) {
        return Err(input_err!("argument {a} outside 0..{}", alg.size()));
    }
    eval_unchecked(term, alg, args)
}

fn eval_unchecked(term: &TermExpr, alg: &FiniteAlgebra, args: &[usize]) -> Result<usize> {
    match term {
        TermExpr::Var(i) => args
            .get(*i)
            .copied()
            .ok_or_else(|| input_err!("term variable {i} but only {} arguments", args.len())),
        TermExpr::Apply(op, sub) => {
            let x = eval_unchecked(&sub[0], alg, args)?;
            let y = eval_unchecked(&sub[1], alg, args)?;
            let z = eval_unchecked(&sub[2], alg, args)?;
            Ok(alg.apply(*op, x, y, z))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_lookups() {
        let maj = OperationTable::majority(2);
        assert_eq!(eval_op(&maj, &[0, 1, 0]).unwrap(), 0);
        // all eight triples: the value occurring at least twice
        for code in 0..8usize {
            let a = [code >> 2 & 1, code >> 1 & 1, code & 1];
            let ones = a.iter().sum::<usize>();
            assert_eq!(maj.get(&a), usize::from(ones >= 2));
        }
        assert_eq!(eval_op(&maj, &[1, 1, 0]).unwrap(), 1);
    }

    #[test]
    fn idempotent_diagonal() {
        let alg = FiniteAlgebra::majority(4);
        for op in Op::ALL {
            for c in 0..4 {
                assert_eq!(eval_op(alg.op(op), &[c, c, c]).unwrap(), c);
            }
        }
    }

    #[test]
    fn eval_rejects_bad_arguments() {
        let maj = OperationTable::majority(2);
        assert!(matches!(eval_op(&maj, &[0, 2, 0]), Err(Error::Input(_))));
        assert!(matches!(eval_op(&maj, &[0, 1]), Err(Error::Input(_))));
    }

    #[test]
    fn table_validation() {
        assert!(OperationTable::new(3, 2, vec![0; 7]).is_err());
        assert!(OperationTable::new(3, 2, vec![2; 8]).is_err());
        let not_idem = OperationTable::from_fn(3, 2, |_| 0).unwrap();
        let maj = OperationTable::majority(2);
        assert!(FiniteAlgebra::new(not_idem, maj.clone(), maj).is_err());
    }

    #[test]
    fn term_evaluation() {
        let alg = FiniteAlgebra::majority(2);
        assert_eq!(eval_term(&TermExpr::var(2), &alg, &[0, 1, 1]).unwrap(), 1);
        // l(x,y) = p2(y,x,x) at (x,y) = (0,1)
        let l = TermExpr::apply(Op::P2, TermExpr::var(1), TermExpr::var(0), TermExpr::var(0));
        assert_eq!(eval_term(&l, &alg, &[0, 1]).unwrap(), 0);
        assert!(eval_term(&TermExpr::var(3), &alg, &[0, 1]).is_err());
    }

    #[test]
    fn first_jonsson_term_absorbs() {
        let alg = FiniteAlgebra::majority(3);
        let q = TermExpr::apply(Op::P1, TermExpr::var(0), TermExpr::var(1), TermExpr::var(2));
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(eval_term(&q, &alg, &[x, x, y]).unwrap(), x);
            }
        }
    }

    #[test]
    fn json_round_trip_and_validation() {
        let alg = FiniteAlgebra::majority(2);
        let text = serde_json::to_string(&alg.to_file()).unwrap();
        assert_eq!(FiniteAlgebra::from_json(&text).unwrap(), alg);
        let bad = r#"{"size":2,"ops":{"p1":[0,0,0,0,0,0,0,0],"p2":[0,0,0,0,0,0,0,1],"p3":[0,0,0,0,0,0,0,1]}}"#;
        assert!(matches!(FiniteAlgebra::from_json(bad), Err(Error::Input(_))));
    }

    #[test]
    fn product_and_subalgebra() {
        let m = FiniteAlgebra::majority(2);
        let p = m.product(&m).unwrap();
        assert_eq!(p.size(), 4);
        // (0,1),(1,0),(1,1) -> (1,1)
        assert_eq!(p.apply(Op::P1, 1, 2, 3), 3);
        let sub = p.subalgebra(&[0, 3]).unwrap();
        assert_eq!(sub, FiniteAlgebra::majority(2));
    }
}
