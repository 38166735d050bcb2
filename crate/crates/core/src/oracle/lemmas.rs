//! Empirical checks of the structural lemmas about subdirect products.
//!
//! The lemmas only use the Jónsson identities together with the absorption
//! identities of `l` and `r`, and these pass to products, subalgebras and
//! quotients. Any two preprocessed CD(4) algebras therefore live in a common
//! variety where the lemmas apply, so the suite pairs up algebras from a pool
//! of preprocessed, canonically labelled algebras and checks every
//! subuniverse `R` of `B1 x B2` that projects onto `B1`.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgebraFile, FiniteAlgebra};
use crate::congruence::all_congruences;
use crate::error::{input_err, Result};
use crate::ideals::{
    absorption_witness, all_ideals, is_ideal, is_ideal_free, minimal_ideal_members, Carrier, IdealSide,
};
use crate::jonsson::preprocess_terms;
use crate::oracle::enumerate::{canonical_form, enumerate_cd4_algebras, EnumerationBudget};
use crate::power::{set_of, ElemSet, Power};

pub const ANCHOR_PRODUCT: &str = "then R = B1 x D";
pub const ANCHOR_CONNECTED: &str = "G1 is connected";
pub const ANCHOR_FIXED: &str = "Then r(c,a) = c for all c in C";
pub const ANCHOR_SEES: &str = "sees the whole of B1";
pub const ANCHOR_MINIMAL: &str = "generates a minimal l-ideal in R";
pub const ANCHOR_FULL_FIBRE: &str = "S = B1 x pi2(S)";

/// Every lemma anchor, in report order.
pub const ANCHORS: [&str; 6] =
    [ANCHOR_PRODUCT, ANCHOR_CONNECTED, ANCHOR_FIXED, ANCHOR_SEES, ANCHOR_MINIMAL, ANCHOR_FULL_FIBRE];

/// Counterexamples kept per lemma; the count is always exact.
const KEPT_COUNTEREXAMPLES: usize = 16;

/// An element `b` of `B2` related to two distinct elements of `B1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TwoFanWitness {
    pub b: usize,
    pub a1: usize,
    pub a2: usize,
}

/// Least 2-fan element of `B2` (by `b`, then by the two partners), if any.
/// `R` is the graph of a homomorphism `B2 -> B1` exactly when this is `None`.
pub fn two_fan(rel: &[(usize, usize)], n2: usize) -> Option<TwoFanWitness> {
    let mut first: Vec<Option<usize>> = vec![None; n2];
    let mut best: Option<TwoFanWitness> = None;
    let mut sorted = rel.to_vec();
    sorted.sort_unstable_by_key(|&(a, b)| (b, a));
    for (a, b) in sorted {
        match first[b] {
            None => first[b] = Some(a),
            Some(a1) if a1 != a => {
                let w = TwoFanWitness { b, a1, a2: a };
                if best.is_none_or(|x| (w.b, w.a1, w.a2) < (x.b, x.a1, x.a2)) {
                    best = Some(w);
                }
            }
            Some(_) => {}
        }
    }
    best
}

/// Every subuniverse of `B1 x B2` projecting onto both carriers.
///
/// Relations are listed as pairs of original elements, each sorted, and the
/// list is ordered by size then lexicographically.
pub fn enumerate_subdirect(b1: &Carrier, b2: &Carrier) -> Result<Vec<Vec<(usize, usize)>>> {
    if b1.power().arity() != 1 || b2.power().arity() != 1 {
        return Err(input_err!("subdirect enumeration needs carriers inside base algebras"));
    }
    let (a1, a2) = (b1.to_algebra()?, b2.to_algebra()?);
    let prod = a1.product(&a2)?;
    let m = a2.size();
    let mut out: Vec<Vec<(usize, usize)>> = subuniverses_onto_first(&prod, a1.size(), m, None)
        .0
        .into_iter()
        .filter(|s| projection(s, m, false).count_ones(..) == m)
        .map(|s| s.ones().map(|c| (b1.members()[c / m], b2.members()[c % m])).collect())
        .collect();
    out.sort_by(|x, y| (x.len(), x).cmp(&(y.len(), y)));
    Ok(out)
}

/// Subuniverses of the product (pairs coded `x * m + y`) whose first
/// projection is onto. Gives up after `cap` of them, flagging truncation.
fn subuniverses_onto_first(prod: &FiniteAlgebra, n1: usize, m: usize, cap: Option<usize>) -> (Vec<ElemSet>, bool) {
    let p = Power::new(prod, 1).expect("product within limits");
    let len = n1 * m;
    let mut seen: HashSet<ElemSet> = HashSet::new();
    let mut stack: Vec<ElemSet> = (0..len).map(|c| p.sg_closure([c])).collect();
    let mut out = Vec::new();
    let mut truncated = false;
    while let Some(s) = stack.pop() {
        if !seen.insert(s.clone()) {
            continue;
        }
        if cap.is_some_and(|c| seen.len() > c) {
            truncated = true;
            break;
        }
        for c in 0..len {
            if !s.contains(c) {
                let next = p.sg_closure(s.ones().chain([c]));
                if !seen.contains(&next) {
                    stack.push(next);
                }
            }
        }
        if projection(&s, m, true).count_ones(..) == n1 {
            out.push(s);
        }
    }
    out.sort_by_key(|s| (s.count_ones(..), s.ones().collect::<Vec<_>>()));
    (out, truncated)
}

fn projection(s: &ElemSet, m: usize, first: bool) -> ElemSet {
    let n = s.len() / m;
    let cap = if first { n } else { m };
    set_of(cap, s.ones().map(|c| if first { c / m } else { c % m }))
}

/// Facts about one algebra that every pairing reuses.
struct Profile {
    alg: FiniteAlgebra,
    simple: bool,
    /// `free[s]`: no proper `s`-ideal.
    free: [bool; 2],
    /// `min_members[s]`: union of the minimal `s`-ideals.
    min_members: [ElemSet; 2],
    /// `min_ideals[s]`: the minimal `s`-ideals themselves.
    min_ideals: [Vec<ElemSet>; 2],
}

fn side_index(side: IdealSide) -> usize {
    match side {
        IdealSide::L => 0,
        IdealSide::R => 1,
    }
}

fn other(side: IdealSide) -> IdealSide {
    match side {
        IdealSide::L => IdealSide::R,
        IdealSide::R => IdealSide::L,
    }
}

/// Splits the union of the minimal ideals into the ideals themselves; each
/// minimal ideal is the principal ideal of any of its members.
fn split_minimal(d: &Carrier, members: &ElemSet, side: IdealSide) -> Result<Vec<ElemSet>> {
    let mut out: Vec<ElemSet> = Vec::new();
    for a in members.ones() {
        if out.iter().any(|s| s.contains(a)) {
            continue;
        }
        let mut seed = d.empty();
        seed.insert(a);
        out.push(crate::ideals::ideal_closure(d, &seed, side)?);
    }
    Ok(out)
}

impl Profile {
    fn new(alg: FiniteAlgebra) -> Result<Self> {
        let simple = alg.size() >= 2 && all_congruences(&alg)?.len() == 2;
        let whole = Carrier::whole(&alg);
        let mut free = [false; 2];
        let mut min_members = [whole.empty(), whole.empty()];
        let mut min_ideals = [Vec::new(), Vec::new()];
        for side in IdealSide::BOTH {
            let i = side_index(side);
            min_members[i] = minimal_ideal_members(&whole, side);
            min_ideals[i] = split_minimal(&whole, &min_members[i], side)?;
            free[i] = min_ideals[i].len() == 1 && min_ideals[i][0].count_ones(..) == alg.size();
        }
        debug_assert_eq!(free[0] && free[1], is_ideal_free(&whole));
        Ok(Self { alg, simple, free, min_members, min_ideals })
    }

    fn ideal_free(&self) -> bool {
        self.free[0] && self.free[1]
    }
}

/// One failed conclusion with everything needed to replay it.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub b1: AlgebraFile,
    pub b2: AlgebraFile,
    pub relation: Vec<(usize, usize)>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    /// Quote anchor identifying the lemma.
    pub lemma: String,
    /// Cases whose hypotheses held and whose conclusion was verified.
    pub checked: u64,
    /// Cases whose hypotheses failed.
    pub vacuous: u64,
    pub counterexample_count: u64,
    /// The first few counterexamples, in deterministic order.
    pub counterexamples: Vec<Counterexample>,
    /// Set when no case satisfied the hypotheses.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl LemmaReport {
    fn new(lemma: &str) -> Self {
        Self {
            lemma: lemma.to_string(),
            checked: 0,
            vacuous: 0,
            counterexample_count: 0,
            counterexamples: Vec::new(),
            note: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexample_count == 0
    }

    fn merge(&mut self, other: LemmaReport) {
        self.checked += other.checked;
        self.vacuous += other.vacuous;
        self.counterexample_count += other.counterexample_count;
        let room = KEPT_COUNTEREXAMPLES.saturating_sub(self.counterexamples.len());
        self.counterexamples.extend(other.counterexamples.into_iter().take(room));
    }
}

/// Limits for [`lemma_suite`]. Everything that bounds the run lives here.
#[derive(Debug, Clone)]
pub struct SuiteBudget {
    /// Cap on algebra pairs involving an algebra of size 3 or more. Pairs of
    /// smaller algebras are always checked exhaustively.
    pub max_pairs: usize,
    /// Cap on subuniverses examined per pair.
    pub max_relations: usize,
    /// Sampled algebras per size above 3.
    pub samples: usize,
    pub seed: u64,
    /// Wall-clock limit; pairs not started in time are skipped.
    pub time_limit: Option<Duration>,
}

impl Default for SuiteBudget {
    fn default() -> Self {
        Self {
            max_pairs: 50_000,
            max_relations: 4096,
            samples: 200,
            seed: 0,
            time_limit: Some(Duration::from_secs(480)),
        }
    }
}

/// Subuniverses `X` of a pool algebra that are not ideals yet admit no
/// absorption witness. Expected to stay empty.
#[derive(Debug, Clone, Serialize)]
pub struct WitnessAbsence {
    pub algebra: AlgebraFile,
    pub subuniverse: Vec<usize>,
    pub side: IdealSide,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub max_size: usize,
    /// Pool size per algebra size, starting at size 1.
    pub pool: Vec<usize>,
    pub pairs_planned: usize,
    pub pairs_checked: usize,
    pub relations: u64,
    /// True when a cap or the clock cut the run short.
    pub truncated: bool,
    pub reports: Vec<LemmaReport>,
    pub absorption_checks: u64,
    pub witness_absences: Vec<WitnessAbsence>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(LemmaReport::passed) && self.witness_absences.is_empty()
    }
}

/// Preprocessed algebras of each size up to `max_size`, deduplicated up to
/// relabelling and sorted by their tables.
fn algebra_pool(max_size: usize, budget: &SuiteBudget) -> Result<Vec<Vec<FiniteAlgebra>>> {
    let mut pool = Vec::new();
    for n in 1..=max_size {
        let enumeration = enumerate_cd4_algebras(
            n,
            &EnumerationBudget { samples: budget.samples, seed: budget.seed ^ n as u64, ..Default::default() },
        )?;
        let canon: Vec<FiniteAlgebra> = enumeration
            .algebras
            .par_iter()
            .map(|a| preprocess_terms(a).map(|p| canonical_form(&p.algebra)))
            .collect::<Result<_>>()?;
        let mut keyed: Vec<(Vec<usize>, FiniteAlgebra)> =
            canon.into_iter().map(|a| (table_key(&a), a)).collect();
        keyed.sort_by(|x, y| x.0.cmp(&y.0));
        keyed.dedup_by(|x, y| x.0 == y.0);
        pool.push(keyed.into_iter().map(|(_, a)| a).collect());
    }
    Ok(pool)
}

fn table_key(a: &FiniteAlgebra) -> Vec<usize> {
    a.ops().iter().flat_map(|t| t.values()).collect()
}

/// Algebra pairs to check, as (size, index) references into the pool.
///
/// Pairs among algebras of size at most 2 come first, all of them. Then a
/// seeded sample of pairs involving larger algebras, mixing four kinds:
/// an ideal-free simple `B1` with itself, such a `B1` with a random partner,
/// a random large `B1` with a random partner, and a small `B1` with a large
/// partner.
fn plan_pairs(profiles: &[Vec<Profile>], budget: &SuiteBudget) -> Vec<((usize, usize), (usize, usize))> {
    let all: Vec<(usize, usize)> =
        profiles.iter().enumerate().flat_map(|(s, v)| (0..v.len()).map(move |i| (s, i))).collect();
    let small: Vec<(usize, usize)> = all.iter().copied().filter(|&(s, _)| s < 2).collect();
    let mut plan: Vec<_> = small.iter().flat_map(|&x| small.iter().map(move |&y| (x, y))).collect();
    let large: Vec<(usize, usize)> = all.iter().copied().filter(|&(s, _)| s >= 2).collect();
    if large.is_empty() {
        return plan;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);
    let mut special: Vec<(usize, usize)> = large
        .iter()
        .copied()
        .filter(|&(s, i)| profiles[s][i].simple && profiles[s][i].ideal_free())
        .collect();
    special.shuffle(&mut rng);
    let mut seen = HashSet::new();
    let mut sampled = Vec::new();
    let mut attempts = 0;
    while sampled.len() < budget.max_pairs && attempts < budget.max_pairs * 8 {
        let kind = attempts % 4;
        attempts += 1;
        let pick = |v: &[(usize, usize)], rng: &mut ChaCha8Rng| v[rng.gen_range(0..v.len())];
        let pair = match kind {
            0 if !special.is_empty() => {
                let b1 = special[(attempts / 4) % special.len()];
                (b1, b1)
            }
            1 if !special.is_empty() => (special[(attempts / 4) % special.len()], pick(&all, &mut rng)),
            3 => (pick(&small, &mut rng), pick(&large, &mut rng)),
            _ => (pick(&large, &mut rng), pick(&all, &mut rng)),
        };
        if seen.insert(pair) {
            sampled.push(pair);
        }
    }
    plan.extend(sampled);
    plan
}

/// Checks the six structural lemmas on pairs of small algebras.
pub fn lemma_suite(max_size: usize, budget: &SuiteBudget) -> Result<SuiteReport> {
    if max_size == 0 || max_size > 4 {
        return Err(input_err!("lemma suite supports sizes 1 to 4, got {max_size}"));
    }
    let start = Instant::now();
    let pool = algebra_pool(max_size, budget)?;
    let profiles: Vec<Vec<Profile>> = pool
        .into_iter()
        .map(|v| v.into_par_iter().map(Profile::new).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let (absorption_checks, witness_absences) = absorption_scan(&profiles)?;

    let plan = plan_pairs(&profiles, budget);
    let outcomes: Vec<Option<PairOutcome>> = plan
        .par_iter()
        .map(|&((s1, i1), (s2, i2))| {
            if budget.time_limit.is_some_and(|t| start.elapsed() > t) {
                return Ok(None);
            }
            check_pair(&profiles[s1][i1], &profiles[s2][i2], budget.max_relations).map(Some)
        })
        .collect::<Result<_>>()?;

    let mut reports: Vec<LemmaReport> = ANCHORS.iter().map(|a| LemmaReport::new(a)).collect();
    let mut truncated = false;
    let mut pairs_checked = 0;
    let mut relations = 0;
    for outcome in outcomes {
        match outcome {
            None => truncated = true,
            Some(o) => {
                pairs_checked += 1;
                relations += o.relations;
                truncated |= o.truncated;
                for (acc, r) in reports.iter_mut().zip(o.reports) {
                    acc.merge(r);
                }
            }
        }
    }
    for r in &mut reports {
        if r.checked == 0 {
            r.note = Some("no case satisfied the hypotheses; the pass is vacuous".to_string());
        }
    }
    Ok(SuiteReport {
        max_size,
        pool: profiles.iter().map(Vec::len).collect(),
        pairs_planned: plan.len(),
        pairs_checked,
        relations,
        truncated,
        reports,
        absorption_checks,
        witness_absences,
    })
}

/// For every proper subuniverse of a pool algebra of size at most 3 that is
/// not an ideal, looks for the pair promised by the absorption observation.
fn absorption_scan(profiles: &[Vec<Profile>]) -> Result<(u64, Vec<WitnessAbsence>)> {
    let per: Vec<(u64, Vec<WitnessAbsence>)> = profiles
        .iter()
        .take(3)
        .flatten()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|prof| {
            let whole = Carrier::whole(&prof.alg);
            let p = whole.power();
            let subs = crate::ideals::all_closed_sets(whole.members(), |s| p.sg_closure(s.ones()));
            let mut checks = 0;
            let mut absent = Vec::new();
            for x in subs.iter().filter(|x| x.count_ones(..) < prof.alg.size()) {
                for side in IdealSide::BOTH {
                    if is_ideal(&whole, x, side)? {
                        continue;
                    }
                    checks += 1;
                    if absorption_witness(&whole, x, side)?.is_none() {
                        absent.push(WitnessAbsence {
                            algebra: prof.alg.to_file(),
                            subuniverse: x.ones().collect(),
                            side,
                        });
                    }
                }
            }
            Ok((checks, absent))
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().fold((0, Vec::new()), |(c, mut v), (c2, v2)| {
        v.extend(v2);
        (c + c2, v)
    }))
}

struct PairOutcome {
    relations: u64,
    truncated: bool,
    reports: Vec<LemmaReport>,
}

/// Shared state while checking one relation.
struct Case<'a> {
    b1: &'a Profile,
    b2: &'a Profile,
    rel: Vec<(usize, usize)>,
    reports: &'a mut [LemmaReport],
}

impl Case<'_> {
    fn record(&mut self, lemma: usize, hypothesis: bool, failure: Option<String>) {
        let r = &mut self.reports[lemma];
        if !hypothesis {
            r.vacuous += 1;
            return;
        }
        r.checked += 1;
        if let Some(detail) = failure {
            r.counterexample_count += 1;
            if r.counterexamples.len() < KEPT_COUNTEREXAMPLES {
                r.counterexamples.push(Counterexample {
                    b1: self.b1.alg.to_file(),
                    b2: self.b2.alg.to_file(),
                    relation: self.rel.clone(),
                    detail,
                });
            }
        }
    }
}

fn check_pair(b1: &Profile, b2: &Profile, max_relations: usize) -> Result<PairOutcome> {
    let (n1, m) = (b1.alg.size(), b2.alg.size());
    let prod = b1.alg.product(&b2.alg)?;
    let (subs, truncated) = subuniverses_onto_first(&prod, n1, m, Some(max_relations));
    let mut reports: Vec<LemmaReport> = ANCHORS.iter().map(|a| LemmaReport::new(a)).collect();
    let power = Power::new(&prod, 1)?;
    for s in &subs {
        let rel: Vec<(usize, usize)> = s.ones().map(|c| (c / m, c % m)).collect();
        let image = projection(s, m, false);
        let mut case = Case { b1, b2, rel, reports: &mut reports };
        check_full_product(&mut case, &image);
        if image.count_ones(..) == m {
            let carrier = Carrier::new_unchecked(power, s.clone());
            check_subdirect(&mut case, &carrier)?;
        }
    }
    Ok(PairOutcome { relations: subs.len() as u64, truncated, reports })
}

/// "then R = B1 x D": `B1` is `s`-ideal free, `D = pi2(R)` is a minimal
/// ideal of the opposite side in `B2`, and some `B1 x {d}` lies in `R`.
fn check_full_product(case: &mut Case, image: &ElemSet) {
    let n1 = case.b1.alg.size();
    let mut fibre_sizes = vec![0usize; case.b2.alg.size()];
    for &(_, b) in &case.rel {
        fibre_sizes[b] += 1;
    }
    let has_full_fibre = fibre_sizes.contains(&n1);
    for side in IdealSide::BOTH {
        let d_side = other(side);
        let hypothesis = case.b1.free[side_index(side)]
            && case.b2.min_ideals[side_index(d_side)].iter().any(|d| d == image)
            && has_full_fibre;
        let failure = (hypothesis && case.rel.len() != n1 * image.count_ones(..)).then(|| {
            format!("B1 is {side:?}-ideal free, pi2(R) is a minimal {d_side:?}-ideal and R has a full fibre, but R is not a product")
        });
        case.record(0, hypothesis, failure);
    }
}

fn check_subdirect(case: &mut Case, r: &Carrier) -> Result<()> {
    let n1 = case.b1.alg.size();
    let m = case.b2.alg.size();
    let fan = two_fan(&case.rel, m);
    let simple = case.b1.simple;

    // G1 is connected.
    {
        let hypothesis = simple && fan.is_some();
        let failure = (hypothesis && !g1_connected(&case.rel, n1, m)).then(|| {
            format!("B1 simple, 2-fan witness {:?}, yet G1 is disconnected", fan.unwrap())
        });
        case.record(1, hypothesis, failure);
    }

    // r(c,a) = c on pi1(S) for ideals S that are graphs.
    for side in IdealSide::BOTH {
        let mut hypothesis = false;
        let mut failure = None;
        if simple && fan.is_some() {
            for s in graph_ideals(r, &case.rel, m, side)? {
                hypothesis = true;
                let c_set: BTreeSet<usize> = s.iter().map(|&(c, _)| c).collect();
                let bad = c_set.iter().find_map(|&c| {
                    (0..n1).find(|&a| side_apply(&case.b1.alg, side, c, a) != c).map(|a| (c, a))
                });
                if let Some((c, a)) = bad {
                    failure.get_or_insert_with(|| {
                        format!("{side:?}-ideal S = {s:?} is a graph but {side:?}({c},{a}) != {c}")
                    });
                }
            }
        }
        case.record(2, hypothesis, failure);
    }

    let free = case.b1.ideal_free();

    // Some element of B2 sees the whole of B1.
    {
        let hypothesis = simple && free && fan.is_some();
        let mut fibre_sizes = vec![0usize; m];
        for &(_, b) in &case.rel {
            fibre_sizes[b] += 1;
        }
        let failure = (hypothesis && !fibre_sizes.contains(&n1))
            .then(|| format!("B1 simple and ideal free, 2-fan witness {:?}, but no b sees all of B1", fan.unwrap()));
        case.record(3, hypothesis, failure);
    }

    // Minimal ideals of R versus those of the factors, both directions.
    for side in IdealSide::BOTH {
        let mins = minimal_ideal_members(r, side);
        let (f1, f2) = (&case.b1.min_members[side_index(side)], &case.b2.min_members[side_index(side)]);
        let mut failure = None;
        for c in mins.ones() {
            let (a, b) = (c / m, c % m);
            if !f1.contains(a) || !f2.contains(b) {
                failure.get_or_insert_with(|| {
                    format!("({a},{b}) generates a minimal {side:?}-ideal of R but a factor coordinate does not")
                });
            }
        }
        let covered = |factor: &ElemSet, first: bool| {
            factor.ones().find(|&x| !mins.ones().any(|c| if first { c / m == x } else { c % m == x }))
        };
        if let Some(a) = covered(f1, true) {
            failure.get_or_insert_with(|| {
                format!("{a} generates a minimal {side:?}-ideal of B1 but no (a,b) does so in R")
            });
        }
        if let Some(b) = covered(f2, false) {
            failure.get_or_insert_with(|| {
                format!("{b} generates a minimal {side:?}-ideal of B2 but no (a,b) does so in R")
            });
        }
        case.record(4, true, failure);
    }

    // Minimal ideals of R are full in the first coordinate.
    {
        let hypothesis = simple && free && fan.is_some();
        let mut failure = None;
        if hypothesis {
            for side in IdealSide::BOTH {
                let mins = minimal_ideal_members(r, side);
                for s in split_minimal(r, &mins, side)? {
                    let image = projection(&s, m, false);
                    if s.count_ones(..) != n1 * image.count_ones(..) {
                        let pairs: Vec<_> = s.ones().map(|c| (c / m, c % m)).collect();
                        failure.get_or_insert_with(|| {
                            format!("minimal {side:?}-ideal {pairs:?} of R is not B1 x pi2(S)")
                        });
                    }
                }
            }
        }
        case.record(5, hypothesis, failure);
    }
    Ok(())
}

fn side_apply(alg: &FiniteAlgebra, side: IdealSide, x: usize, y: usize) -> usize {
    match side {
        IdealSide::L => alg.l(x, y),
        IdealSide::R => alg.r(x, y),
    }
}

/// Connectivity of `G1 = {(a,a') : (a,b), (a',b) in R for some b}`.
fn g1_connected(rel: &[(usize, usize)], n1: usize, m: usize) -> bool {
    let mut fibres: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, b) in rel {
        fibres[b].push(a);
    }
    let mut reached = vec![false; n1];
    let mut stack = vec![0];
    reached[0] = true;
    while let Some(a) = stack.pop() {
        for f in fibres.iter().filter(|f| f.contains(&a)) {
            for &a2 in f {
                if !reached[a2] {
                    reached[a2] = true;
                    stack.push(a2);
                }
            }
        }
    }
    reached.into_iter().all(|x| x)
}

/// `side`-ideals of `R` that are graphs of maps from a subset of `B2`.
/// Such an ideal has at most one pair per `b`, so candidates are enumerated
/// directly rather than by listing all ideals.
fn graph_ideals(r: &Carrier, rel: &[(usize, usize)], m: usize, side: IdealSide) -> Result<Vec<Vec<(usize, usize)>>> {
    let mut options: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(a, b) in rel {
        options[b].push(a);
    }
    let mut out = Vec::new();
    let mut choice = vec![0usize; m]; // 0 = b unused, i + 1 = options[b][i]
    loop {
        let mut pairs: Vec<(usize, usize)> =
            (0..m).filter(|&b| choice[b] > 0).map(|b| (options[b][choice[b] - 1], b)).collect();
        pairs.sort_unstable();
        if !pairs.is_empty() {
            let set = set_of(r.power().len(), pairs.iter().map(|&(a, b)| a * m + b));
            if is_ideal(r, &set, side)? {
                out.push(pairs);
            }
        }
        let mut pos = 0;
        loop {
            if pos == m {
                return Ok(out);
            }
            choice[pos] += 1;
            if choice[pos] <= options[pos].len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

/// Every ideal of `R` of one side, by brute force. Used by tests to cross
/// check the direct graph-ideal enumeration.
#[allow(dead_code)]
fn all_graph_ideals_slow(r: &Carrier, m: usize, side: IdealSide) -> Vec<Vec<(usize, usize)>> {
    all_ideals(r, side)
        .into_iter()
        .map(|s| s.ones().map(|c| (c / m, c % m)).collect::<Vec<_>>())
        .filter(|pairs| {
            let mut seen = HashSet::new();
            pairs.iter().all(|&(_, b)| seen.insert(b))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::congruence::is_subdirect_binary;

    fn pixley2() -> FiniteAlgebra {
        FiniteAlgebra::from_fns(2, |a| a[0], |a| if a[0] == a[1] { a[2] } else { a[0] }, |a| a[2]).unwrap()
    }

    #[test]
    fn full_product_and_diagonal_are_subdirect() {
        let alg = FiniteAlgebra::majority(3);
        let c = Carrier::whole(&alg);
        let rels = enumerate_subdirect(&c, &c).unwrap();
        let full: Vec<(usize, usize)> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect();
        assert!(rels.contains(&full));
        assert!(rels.contains(&vec![(0, 0), (1, 1), (2, 2)]));
        let p = alg.product(&alg).unwrap();
        let pw = Power::new(&p, 1).unwrap();
        for r in &rels {
            assert!(is_subdirect_binary(r, 3, 3));
            assert!(pw.is_closed(&set_of(9, r.iter().map(|&(a, b)| a * 3 + b))));
        }
    }

    #[test]
    fn subdirect_of_subcarriers_uses_original_labels() {
        let alg = FiniteAlgebra::majority(3);
        let p = Power::new(&alg, 1).unwrap();
        let c = Carrier::new(p, set_of(3, [1, 2])).unwrap();
        let rels = enumerate_subdirect(&c, &c).unwrap();
        assert!(rels.iter().all(|r| r.iter().all(|&(a, b)| a >= 1 && b >= 1)));
        assert!(rels.contains(&vec![(1, 1), (2, 2)]));
    }

    #[test]
    fn two_fan_detects_non_graphs() {
        assert_eq!(two_fan(&[(0, 0), (1, 1)], 2), None);
        assert_eq!(two_fan(&[(0, 0), (1, 0), (1, 1)], 2), Some(TwoFanWitness { b: 0, a1: 0, a2: 1 }));
    }

    #[test]
    fn g1_of_identity_graph_is_disconnected() {
        assert!(!g1_connected(&[(0, 0), (1, 1)], 2, 2));
        assert!(g1_connected(&[(0, 0), (1, 0), (1, 1)], 2, 2));
    }

    #[test]
    fn graph_ideal_enumeration_matches_brute_force() {
        let alg = pixley2();
        let prod = alg.product(&alg).unwrap();
        let (subs, _) = subuniverses_onto_first(&prod, 2, 2, None);
        let pw = Power::new(&prod, 1).unwrap();
        for s in subs {
            let rel: Vec<_> = s.ones().map(|c| (c / 2, c % 2)).collect();
            let r = Carrier::new_unchecked(pw, s);
            for side in IdealSide::BOTH {
                let mut fast = graph_ideals(&r, &rel, 2, side).unwrap();
                let mut slow = all_graph_ideals_slow(&r, 2, side);
                fast.sort();
                slow.sort();
                assert_eq!(fast, slow);
            }
        }
    }

    #[test]
    fn identity_graph_is_vacuous_for_connectivity() {
        let prof = Profile::new(FiniteAlgebra::majority(2)).unwrap();
        let mut reports: Vec<LemmaReport> = ANCHORS.iter().map(|a| LemmaReport::new(a)).collect();
        let prod = prof.alg.product(&prof.alg).unwrap();
        let pw = Power::new(&prod, 1).unwrap();
        let s = set_of(4, [0, 3]);
        let mut case = Case { b1: &prof, b2: &prof, rel: vec![(0, 0), (1, 1)], reports: &mut reports };
        check_subdirect(&mut case, &Carrier::new_unchecked(pw, s)).unwrap();
        assert_eq!(reports[1].vacuous, 1);
        assert_eq!(reports[1].checked, 0);
    }

    #[test]
    fn one_element_b1_is_vacuous_or_true() {
        let one = Profile::new(FiniteAlgebra::trivial()).unwrap();
        let two = Profile::new(FiniteAlgebra::majority(2)).unwrap();
        let out = check_pair(&one, &two, 1000).unwrap();
        assert!(out.reports.iter().all(LemmaReport::passed));
    }

    #[test]
    fn suite_at_size_two_has_no_counterexamples() {
        let report = lemma_suite(2, &SuiteBudget::default()).unwrap();
        assert_eq!(report.pool, vec![1, 10]);
        assert!(!report.truncated);
        for r in &report.reports {
            assert!(r.passed(), "{}: {:?}", r.lemma, r.counterexamples);
        }
        assert!(report.witness_absences.is_empty());
        // The ideal-free simple two-element algebra makes every lemma bite.
        assert!(report.reports.iter().all(|r| r.checked > 0), "{:?}", report.reports);
    }

    #[test]
    fn suite_rejects_unsupported_sizes() {
        assert!(lemma_suite(0, &SuiteBudget::default()).is_err());
        assert!(lemma_suite(5, &SuiteBudget::default()).is_err());
    }
}
