//! The CD(4) Jónsson chain `x = p0, p1, p2, p3, p4 = z` and the term
//! preprocessing that makes `l(x, -)` and `r(x, -)` retractions.
//!
//! Identities checked, for all `x, y`:
//!
//! ```text
//! p1(x,y,x) = p2(x,y,x) = p3(x,y,x) = x
//! p1(x,x,y) = x
//! p1(x,y,y) = p2(x,y,y)
//! p2(x,x,y) = p3(x,x,y)
//! p3(x,y,y) = y
//! ```

use std::collections::HashSet;

use num_bigint::BigUint;
use serde::Serialize;

use crate::algebra::{FiniteAlgebra, Op, OperationTable};
use crate::error::{invariant_err, precondition_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdentityFailure {
    pub identity: String,
    /// Values of `(x, y)` at which the identity fails.
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct JonssonReport {
    pub ok: bool,
    pub failures: Vec<IdentityFailure>,
}

impl JonssonReport {
    fn from_failures(failures: Vec<IdentityFailure>) -> Self {
        Self { ok: failures.is_empty(), failures }
    }

    fn summary(&self) -> String {
        match self.failures.first() {
            None => "all identities hold".into(),
            Some(f) => format!(
                "{} failure(s), first: {} at {:?}",
                self.failures.len(),
                f.identity,
                f.witness
            ),
        }
    }
}

type Check = (&'static str, fn(&FiniteAlgebra, usize, usize) -> bool);

const CD4_IDENTITIES: [Check; 8] = [
    ("p(x,x,x)=x", |a, x, _| Op::ALL.iter().all(|&op| a.apply(op, x, x, x) == x)),
    ("p1(x,y,x)=x", |a, x, y| a.apply(Op::P1, x, y, x) == x),
    ("p2(x,y,x)=x", |a, x, y| a.apply(Op::P2, x, y, x) == x),
    ("p3(x,y,x)=x", |a, x, y| a.apply(Op::P3, x, y, x) == x),
    ("p1(x,x,y)=x", |a, x, y| a.apply(Op::P1, x, x, y) == x),
    ("p1(x,y,y)=p2(x,y,y)", |a, x, y| a.apply(Op::P1, x, y, y) == a.apply(Op::P2, x, y, y)),
    ("p2(x,x,y)=p3(x,x,y)", |a, x, y| a.apply(Op::P2, x, x, y) == a.apply(Op::P3, x, x, y)),
    ("p3(x,y,y)=y", |a, x, y| a.apply(Op::P3, x, y, y) == y),
];

const LR_IDENTITIES: [Check; 2] = [
    ("l(x,l(x,y))=l(x,y)", |a, x, y| a.l(x, a.l(x, y)) == a.l(x, y)),
    ("r(x,r(x,y))=r(x,y)", |a, x, y| a.r(x, a.r(x, y)) == a.r(x, y)),
];

fn run_checks(alg: &FiniteAlgebra, checks: &[Check]) -> JonssonReport {
    let n = alg.size();
    let mut failures = Vec::new();
    for (name, holds) in checks {
        for x in 0..n {
            for y in 0..n {
                if !holds(alg, x, y) {
                    failures.push(IdentityFailure { identity: (*name).into(), witness: vec![x, y] });
                }
            }
        }
    }
    JonssonReport::from_failures(failures)
}

/// Exhaustive check of the CD(4) Jónsson identities.
pub fn verify_cd4(alg: &FiniteAlgebra) -> JonssonReport {
    run_checks(alg, &CD4_IDENTITIES)
}

/// Exhaustive check of `l(x,l(x,y)) = l(x,y)` and `r(x,r(x,y)) = r(x,y)`.
pub fn verify_lr_idempotence(alg: &FiniteAlgebra) -> JonssonReport {
    run_checks(alg, &LR_IDENTITIES)
}

/// Returns the algebra flagged as verified, or an input error naming the
/// first failing identity.
pub fn certify(alg: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    let report = verify_cd4(alg);
    if report.ok {
        Ok(alg.clone().mark_verified())
    } else {
        Err(Error::Input(format!("not a CD(4) algebra: {}", report.summary())))
    }
}

fn require_cd4(alg: &FiniteAlgebra) -> Result<()> {
    if alg.is_verified() {
        return Ok(());
    }
    let report = verify_cd4(alg);
    if report.ok {
        Ok(())
    } else {
        Err(precondition_err!("Jónsson identities fail: {}", report.summary()))
    }
}

/// `l(x,y) = p2(y,x,x)`, after confirming `p1(y,x,x) = l(x,y)`.
pub fn derived_l(alg: &FiniteAlgebra) -> Result<OperationTable> {
    require_cd4(alg)?;
    let n = alg.size();
    for x in 0..n {
        for y in 0..n {
            if alg.apply(Op::P1, y, x, x) != alg.l(x, y) {
                return Err(invariant_err!("p1(y,x,x) != p2(y,x,x) at x={x}, y={y}"));
            }
        }
    }
    OperationTable::from_fn(2, n, |a| alg.l(a[0], a[1]))
}

/// `r(x,y) = p2(x,x,y)`, after confirming `p3(x,x,y) = r(x,y)`.
pub fn derived_r(alg: &FiniteAlgebra) -> Result<OperationTable> {
    require_cd4(alg)?;
    let n = alg.size();
    for x in 0..n {
        for y in 0..n {
            if alg.apply(Op::P3, x, x, y) != alg.r(x, y) {
                return Err(invariant_err!("p3(x,x,y) != p2(x,x,y) at x={x}, y={y}"));
            }
        }
    }
    OperationTable::from_fn(2, n, |a| alg.r(a[0], a[1]))
}

/// Output of [`preprocess_terms`].
#[derive(Debug, Clone)]
pub struct PreprocessResult {
    /// Tables of the replacement terms, flagged as verified.
    pub algebra: FiniteAlgebra,
    /// Iteration count for the first term: the product of `l_exponents`.
    pub n1: BigUint,
    /// Iteration count for the third term: the product of `r_exponents`.
    pub n3: BigUint,
    /// For each `x`, the least `e >= 1` with `l_x^e` idempotent.
    pub l_exponents: Vec<usize>,
    /// For each `x`, the least `e >= 1` with `r_x^e` idempotent.
    pub r_exponents: Vec<usize>,
}

type Map = Vec<usize>;

fn compose(f: &Map, g: &Map) -> Map {
    // f after g
    g.iter().map(|&v| f[v]).collect()
}

fn identity_map(n: usize) -> Map {
    (0..n).collect()
}

/// Least `e >= 1` such that `f^e` is idempotent, i.e. `f^(2e) = f^e`.
pub fn idempotent_exponent(f: &Map) -> usize {
    let mut fe = f.clone();
    let mut e = 1;
    loop {
        if compose(&fe, &fe) == fe {
            return e;
        }
        fe = compose(f, &fe);
        e += 1;
    }
}

fn map_power(f: &Map, exp: &BigUint) -> Map {
    let mut result = identity_map(f.len());
    let mut base = f.clone();
    for bit in 0..exp.bits() {
        if exp.bit(bit) {
            result = compose(&base, &result);
        }
        base = compose(&base, &base);
    }
    result
}

/// For `op` with its "moving" argument at `slot` (0 for the first-term
/// iteration, 2 for the third), tabulates `t(x,y,z) = F^exp(moving)` where
/// `F` is `op` with the two other arguments frozen.
fn iterate_term(alg: &FiniteAlgebra, op: Op, slot: usize, exp: &BigUint) -> Vec<usize> {
    let n = alg.size();
    let mut table = vec![0; n * n * n];
    for u in 0..n {
        for v in 0..n {
            let f: Map = (0..n)
                .map(|w| if slot == 0 { alg.apply(op, w, u, v) } else { alg.apply(op, u, v, w) })
                .collect();
            let fe = map_power(&f, exp);
            for w in 0..n {
                let idx = if slot == 0 { (w * n + u) * n + v } else { (u * n + v) * n + w };
                table[idx] = fe[w];
            }
        }
    }
    table
}

/// Checks, for every `i` up to `limit`, that the `i`-th iterate `q^i` keeps
/// the absorption identities of the underlying term and that on the diagonal
/// it equals the `i`-th power of the derived binary map. Stops early once
/// the sequence of iterate tables repeats, since all later ones recur.
fn check_iterates(alg: &FiniteAlgebra, op: Op, slot: usize, limit: &BigUint) -> Result<()> {
    const MAX_STEPS: u64 = 1 << 20;
    let n = alg.size();
    let idx = |x: usize, y: usize, z: usize| (x * n + y) * n + z;
    let base = iterate_term(alg, op, slot, &BigUint::from(1u32));
    let derived: Vec<Map> = (0..n)
        .map(|x| (0..n).map(|y| if slot == 0 { alg.l(x, y) } else { alg.r(x, y) }).collect())
        .collect();
    let mut current = base.clone();
    let mut powers = derived.clone();
    let mut seen = HashSet::new();
    let mut i: u64 = 1;
    while BigUint::from(i) <= *limit {
        for x in 0..n {
            for y in 0..n {
                let ok = if slot == 0 {
                    current[idx(x, x, y)] == x
                        && current[idx(x, y, x)] == x
                        && current[idx(y, x, x)] == powers[x][y]
                } else {
                    current[idx(x, y, y)] == y
                        && current[idx(x, y, x)] == x
                        && current[idx(x, x, y)] == powers[x][y]
                };
                if !ok {
                    return Err(invariant_err!(
                        "iterate {i} of {} breaks its identities at x={x}, y={y}",
                        op.name()
                    ));
                }
            }
        }
        if !seen.insert(current.clone()) {
            return Ok(());
        }
        if i >= MAX_STEPS {
            return Err(Error::Resource(format!("iterates of {} did not cycle within {MAX_STEPS} steps", op.name())));
        }
        // q^(i+1) = q^i(q(x,y,z), y, z) for the first term, mirrored for the third.
        let mut next = vec![0; n * n * n];
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    next[idx(x, y, z)] = if slot == 0 {
                        current[idx(base[idx(x, y, z)], y, z)]
                    } else {
                        current[idx(x, y, base[idx(x, y, z)])]
                    };
                }
            }
        }
        current = next;
        for (x, p) in powers.iter_mut().enumerate() {
            *p = compose(&derived[x], p);
        }
        i += 1;
    }
    Ok(())
}

/// Replaces `p1, p2, p3` by terms `p1', p2', p3'` that still satisfy the
/// CD(4) chain and additionally make `l(x,-)` and `r(x,-)` retractions:
///
/// * `p1' = q1^n1` where `q1^0 = x`, `q1^(i+1) = q1^i(p1(x,y,z), y, z)`,
///   and `n1` is the product over `x` of the idempotent exponents of `l_x`;
/// * `p3' = q3^n3`, the mirror image iterating in the last argument;
/// * `p2' = p2(q1^(n1-1)(x,y,z), y, q3^(n3-1)(x,y,z))`.
pub fn preprocess_terms(alg: &FiniteAlgebra) -> Result<PreprocessResult> {
    require_cd4(alg)?;
    let n = alg.size();
    let l = derived_l(alg)?;
    let r = derived_r(alg)?;
    let l_exponents: Vec<usize> = (0..n)
        .map(|x| idempotent_exponent(&(0..n).map(|y| l.get2(x, y)).collect()))
        .collect();
    let r_exponents: Vec<usize> = (0..n)
        .map(|x| idempotent_exponent(&(0..n).map(|y| r.get2(x, y)).collect()))
        .collect();
    let n1: BigUint = l_exponents.iter().map(|&e| BigUint::from(e)).product();
    let n3: BigUint = r_exponents.iter().map(|&e| BigUint::from(e)).product();
    let one = BigUint::from(1u32);

    check_iterates(alg, Op::P1, 0, &n1)?;
    check_iterates(alg, Op::P3, 2, &n3)?;

    let q1 = iterate_term(alg, Op::P1, 0, &n1);
    let q1_prev = iterate_term(alg, Op::P1, 0, &(&n1 - &one));
    let q3 = iterate_term(alg, Op::P3, 2, &n3);
    let q3_prev = iterate_term(alg, Op::P3, 2, &(&n3 - &one));

    let idx = |a: &[usize]| (a[0] * n + a[1]) * n + a[2];
    let p1 = OperationTable::from_fn(3, n, |a| q1[idx(a)])?;
    let p3 = OperationTable::from_fn(3, n, |a| q3[idx(a)])?;
    let p2 = OperationTable::from_fn(3, n, |a| alg.apply(Op::P2, q1_prev[idx(a)], a[1], q3_prev[idx(a)]))?;
    let out = FiniteAlgebra::new(p1, p2, p3)
        .map_err(|e| invariant_err!("preprocessed terms are malformed: {e}"))?;

    let chain = verify_cd4(&out);
    if !chain.ok {
        return Err(invariant_err!("preprocessed terms break the Jónsson chain: {}", chain.summary()));
    }
    let lr = verify_lr_idempotence(&out);
    if !lr.ok {
        return Err(invariant_err!("preprocessed terms are not retractive: {}", lr.summary()));
    }
    Ok(PreprocessResult { algebra: out.mark_verified(), n1, n3, l_exponents, r_exponents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{eval_term, TermExpr};

    fn projections(n: usize, i: usize) -> FiniteAlgebra {
        let p = OperationTable::projection(3, n, i).unwrap();
        FiniteAlgebra::new(p.clone(), p.clone(), p).unwrap()
    }

    /// 2-element algebra with p1 = first projection, p3 = third projection
    /// and p2 the Pixley term; here l(x,y) = y and r(x,y) = y.
    pub(crate) fn pixley2() -> FiniteAlgebra {
        FiniteAlgebra::from_fns(2, |a| a[0], |a| if a[0] == a[1] { a[2] } else { a[0] }, |a| a[2]).unwrap()
    }

    #[test]
    fn majority_passes() {
        assert!(verify_cd4(&FiniteAlgebra::majority(2)).ok);
        assert!(verify_cd4(&FiniteAlgebra::trivial()).ok);
    }

    #[test]
    fn first_projection_fails_last_identity() {
        let report = verify_cd4(&projections(2, 0));
        assert!(!report.ok);
        assert_eq!(
            report.failures[0],
            IdentityFailure { identity: "p3(x,y,y)=y".into(), witness: vec![0, 1] }
        );
        assert!(report.failures.iter().all(|f| f.identity == "p3(x,y,y)=y"));
    }

    #[test]
    fn majority_l_and_r_are_first_projection() {
        let alg = FiniteAlgebra::majority(2);
        let first = OperationTable::projection(2, 2, 0).unwrap();
        assert_eq!(derived_l(&alg).unwrap(), first);
        assert_eq!(derived_r(&alg).unwrap(), first);
        assert!(derived_l(&projections(2, 0)).is_err());
    }

    #[test]
    fn majority_is_already_preprocessed() {
        let alg = FiniteAlgebra::majority(2);
        let res = preprocess_terms(&alg).unwrap();
        assert_eq!(res.l_exponents, vec![1, 1]);
        assert_eq!(res.n1, BigUint::from(1u32));
        assert_eq!(res.n3, BigUint::from(1u32));
        assert_eq!(res.algebra, alg);
        assert!(verify_lr_idempotence(&alg).ok);
        assert_eq!(preprocess_terms(&FiniteAlgebra::trivial()).unwrap().algebra, FiniteAlgebra::trivial());
    }

    #[test]
    fn pixley_is_retractive() {
        let alg = pixley2();
        assert!(verify_cd4(&alg).ok);
        assert!(verify_lr_idempotence(&alg).ok);
    }

    #[test]
    fn exponent_of_cycle() {
        // a 3-cycle: f^3 = id is the first idempotent power
        assert_eq!(idempotent_exponent(&vec![1, 2, 0]), 3);
        // 0 -> 1 -> 2 -> 2: f^2 is constant 2
        assert_eq!(idempotent_exponent(&vec![1, 2, 2]), 2);
        assert_eq!(map_power(&vec![1, 2, 0], &BigUint::from(4u32)), vec![1, 2, 0]);
    }

    /// `q1^i` built as an explicit term tree; an independent route to the
    /// iterated tables.
    fn q1_term(i: usize) -> TermExpr {
        let q = TermExpr::apply(Op::P1, TermExpr::var(0), TermExpr::var(1), TermExpr::var(2));
        let mut t = TermExpr::var(0);
        for _ in 0..i {
            t = t.substitute(&[q.clone(), TermExpr::var(1), TermExpr::var(2)]).unwrap();
        }
        t
    }

    /// A CD(4) algebra on {0,1,2} whose l_0 is not a retraction:
    /// l(0,1) = 2, l(0,2) = 1.
    fn swapping() -> FiniteAlgebra {
        // p1(x,y,y) = p2(x,y,y) = s(x,y); p2(x,x,y) = p3(x,x,y) = x;
        // s(1,0) = 2, s(2,0) = 1, otherwise s(x,y) = x.
        let s = |x: usize, y: usize| match (x, y) {
            (1, 0) => 2,
            (2, 0) => 1,
            _ => x,
        };
        FiniteAlgebra::from_fns(
            3,
            move |a| if a[1] == a[2] { s(a[0], a[1]) } else { a[0] },
            move |a| {
                if a[0] == a[2] || a[0] == a[1] {
                    a[0]
                } else if a[1] == a[2] {
                    s(a[0], a[1])
                } else {
                    a[0]
                }
            },
            |a| if a[1] == a[2] { a[2] } else if a[0] == a[1] { a[0] } else { a[0] },
        )
        .unwrap()
    }

    #[test]
    fn iterated_terms_match_term_trees() {
        let alg = swapping();
        assert!(verify_cd4(&alg).ok);
        assert!(!verify_lr_idempotence(&alg).ok);
        for i in 0..5u32 {
            let table = iterate_term(&alg, Op::P1, 0, &BigUint::from(i));
            let t = q1_term(i as usize);
            for code in 0..27 {
                let a = [code / 9, code / 3 % 3, code % 3];
                assert_eq!(table[code], eval_term(&t, &alg, &a).unwrap(), "i={i} args={a:?}");
            }
        }
    }

    #[test]
    fn preprocessing_repairs_and_is_stable() {
        let alg = swapping();
        let res = preprocess_terms(&alg).unwrap();
        assert_eq!(res.l_exponents, vec![2, 1, 1]);
        assert_eq!(res.n1, BigUint::from(2u32));
        assert!(verify_cd4(&res.algebra).ok);
        assert!(verify_lr_idempotence(&res.algebra).ok);
        let again = preprocess_terms(&res.algebra).unwrap();
        assert_eq!(again.algebra, res.algebra);
        assert_eq!(again.n1, BigUint::from(1u32));
    }

    #[test]
    fn preprocessing_requires_cd4() {
        assert!(matches!(preprocess_terms(&projections(2, 0)), Err(Error::Precondition(_))));
    }
}
