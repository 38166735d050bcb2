//! Enumeration and sampling of CD(4) algebras.
//!
//! The Jónsson identities only constrain entries with at most two distinct
//! arguments. Idempotence and the absorption rows fix most of those; what is
//! left is a pair of binary tables
//!
//! * `u(x,y) = p1(x,y,y) = p2(x,y,y)` and
//! * `v(x,y) = p2(x,x,y) = p3(x,x,y)`
//!
//! over ordered pairs `x != y`, plus the entries at pairwise distinct
//! arguments, which are unconstrained.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::Rng;

use crate::algebra::{FiniteAlgebra, Op, OperationTable};
use crate::error::{input_err, Result};
use crate::jonsson::verify_cd4;

/// Caps for [`enumerate_cd4_algebras`].
#[derive(Debug, Clone)]
pub struct EnumerationBudget {
    /// Stop after emitting this many algebras.
    pub max_algebras: usize,
    /// Number of draws in sampling mode (sizes above 3).
    pub samples: usize,
    pub seed: u64,
    pub deadline: Option<Instant>,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_algebras: usize::MAX, samples: 500, seed: 0, deadline: None }
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub algebras: Vec<FiniteAlgebra>,
    /// True when a cap cut the enumeration short.
    pub truncated: bool,
    /// False in sampling mode.
    pub exhaustive: bool,
}

/// How values off the forced entries are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleStyle {
    /// Every value is one of the arguments, so every subset is a subuniverse.
    Conservative,
    /// Any value in the universe.
    Arbitrary,
}

fn pair_slots(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                out.push((x, y));
            }
        }
    }
    out
}

/// Assembles the three tables from `u`, `v` (indexed like [`pair_slots`])
/// and a filler for pairwise distinct arguments.
fn assemble(
    n: usize,
    u: &[usize],
    v: &[usize],
    mut filler: impl FnMut(Op, usize, usize, usize) -> usize,
) -> FiniteAlgebra {
    let slot = |x: usize, y: usize| x * (n - 1) + if y > x { y - 1 } else { y };
    let mut mk = |op: Op| {
        OperationTable::from_fn(3, n, |a| {
            let (x, y, z) = (a[0], a[1], a[2]);
            if x == y && y == z {
                return x;
            }
            if x == z {
                return x;
            }
            if x == y {
                return match op {
                    Op::P1 => x,
                    Op::P2 | Op::P3 => v[slot(x, z)],
                };
            }
            if y == z {
                return match op {
                    Op::P1 | Op::P2 => u[slot(x, y)],
                    Op::P3 => y,
                };
            }
            filler(op, x, y, z)
        })
        .expect("assembled table is well formed")
    };
    let (p1, p2, p3) = (mk(Op::P1), mk(Op::P2), mk(Op::P3));
    let alg = FiniteAlgebra::new(p1, p2, p3).expect("assembled tables are idempotent");
    debug_assert!(verify_cd4(&alg).ok);
    alg
}

/// A CD(4) algebra on `n` elements whose free entries are read cyclically
/// from `choices` (reduced mod `n`). Total for every input with `n >= 1`.
pub fn algebra_from_choices(n: usize, choices: &[usize]) -> FiniteAlgebra {
    let m = pair_slots(n).len();
    let mut it = choices.iter().copied().chain(std::iter::repeat(0)).cycle();
    let mut draw = move || it.next().unwrap_or(0) % n;
    let u: Vec<usize> = (0..m).map(|_| draw()).collect();
    let v: Vec<usize> = (0..m).map(|_| draw()).collect();
    assemble(n, &u, &v, |_, _, _, _| draw())
}

/// A uniformly drawn CD(4) algebra of the given style.
pub fn random_cd4_algebra(n: usize, style: SampleStyle, rng: &mut impl Rng) -> Result<FiniteAlgebra> {
    if n == 0 || n > crate::algebra::MAX_UNIVERSE {
        return Err(input_err!("cannot sample an algebra on {n} elements"));
    }
    let pairs = pair_slots(n);
    let pick2 = |x: usize, y: usize, rng: &mut dyn rand::RngCore| match style {
        SampleStyle::Conservative => {
            if rng.gen_bool(0.5) {
                x
            } else {
                y
            }
        }
        SampleStyle::Arbitrary => rng.gen_range(0..n),
    };
    let u: Vec<usize> = pairs.iter().map(|&(x, y)| pick2(x, y, rng)).collect();
    let v: Vec<usize> = pairs.iter().map(|&(x, y)| pick2(x, y, rng)).collect();
    Ok(assemble(n, &u, &v, |_, x, y, z| match style {
        SampleStyle::Conservative => [x, y, z][rng.gen_range(0..3)],
        SampleStyle::Arbitrary => rng.gen_range(0..n),
    }))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).expect("pivot has a successor");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
}

/// Least relabelling of `alg` under the order of its concatenated tables.
pub fn canonical_form(alg: &FiniteAlgebra) -> FiniteAlgebra {
    permutations(alg.size())
        .iter()
        .map(|p| alg.relabel(p))
        .min_by_key(table_key)
        .expect("at least one permutation")
}

fn table_key(alg: &FiniteAlgebra) -> Vec<usize> {
    alg.ops().iter().flat_map(|t| t.values()).collect()
}

/// CD(4) algebras on `n` elements up to relabelling.
///
/// For `n <= 3` every pattern of the two-variable entries is enumerated;
/// entries at pairwise distinct arguments (only present for `n = 3`) are
/// filled by the first projection. Larger sizes are sampled, half of the
/// draws conservative, with `budget.samples` draws.
pub fn enumerate_cd4_algebras(n: usize, budget: &EnumerationBudget) -> Result<Enumeration> {
    if n == 0 {
        return Err(input_err!("universe must be nonempty"));
    }
    if n > 3 {
        return Ok(sample_cd4_algebras(n, budget));
    }
    let pairs = pair_slots(n);
    let slots = 2 * pairs.len();
    let perms = permutations(n);
    let slot = |x: usize, y: usize| x * (n - 1) + if y > x { y - 1 } else { y };
    let mut keys: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut key = vec![0usize; slots];
    let mut truncated = false;
    'outer: loop {
        let canon = perms
            .iter()
            .map(|p| {
                let mut k = vec![0; slots];
                for (i, &(x, y)) in pairs.iter().enumerate() {
                    let s = slot(p[x], p[y]);
                    k[s] = p[key[i]];
                    k[pairs.len() + s] = p[key[pairs.len() + i]];
                }
                k
            })
            .min()
            .expect("at least one permutation");
        keys.insert(canon);
        if keys.len().is_multiple_of(4096) && budget.deadline.is_some_and(|d| Instant::now() > d) {
            truncated = true;
            break;
        }
        for pos in (0..slots).rev() {
            key[pos] += 1;
            if key[pos] < n {
                continue 'outer;
            }
            key[pos] = 0;
        }
        break;
    }
    if keys.len() > budget.max_algebras {
        truncated = true;
    }
    let algebras = keys
        .into_iter()
        .take(budget.max_algebras)
        .map(|k| {
            let (u, v) = k.split_at(pairs.len());
            assemble(n, u, v, |_, x, _, _| x)
        })
        .collect();
    Ok(Enumeration { algebras, truncated, exhaustive: !truncated })
}

fn sample_cd4_algebras(n: usize, budget: &EnumerationBudget) -> Enumeration {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(budget.seed);
    let mut seen = BTreeSet::new();
    let mut algebras = Vec::new();
    let mut truncated = false;
    for i in 0..budget.samples {
        if algebras.len() >= budget.max_algebras || budget.deadline.is_some_and(|d| Instant::now() > d) {
            truncated = true;
            break;
        }
        let style = if i % 2 == 0 { SampleStyle::Conservative } else { SampleStyle::Arbitrary };
        let alg = random_cd4_algebra(n, style, &mut rng).expect("size checked by caller");
        if seen.insert(table_key(&canonical_form(&alg))) {
            algebras.push(alg);
        }
    }
    Enumeration { algebras, truncated, exhaustive: false }
}
