//! Finite relational structures, (partial) homomorphisms and polymorphisms.

use std::collections::BTreeMap;
use std::path::Path;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::algebra::{FiniteAlgebra, Op, OperationTable};
use crate::error::{input_err, Error, Result};
use crate::power::Power;

/// Relations whose full power exceeds this many tuples fall back to binary
/// search instead of a bitset index.
const MAX_INDEX_BITS: usize = 1 << 24;

/// Relation symbols with their arities, sorted by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Vocabulary(pub Vec<(String, usize)>);

#[derive(Debug, Clone)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<usize>>,
    index: Option<FixedBitSet>,
    universe: usize,
}

impl Relation {
    /// Sorts and deduplicates `tuples` after range checking them.
    pub fn new(universe: usize, arity: usize, mut tuples: Vec<Vec<usize>>) -> Result<Self> {
        if arity == 0 {
            return Err(input_err!("relation arity must be at least 1"));
        }
        for t in &tuples {
            if t.len() != arity {
                return Err(input_err!("tuple {t:?} does not have arity {arity}"));
            }
            if let Some(&v) = t.iter().find(|&&v| v >= universe) {
                return Err(input_err!("tuple entry {v} outside universe of size {universe}"));
            }
        }
        tuples.sort();
        tuples.dedup();
        let index = universe
            .checked_pow(arity as u32)
            .filter(|&len| len <= MAX_INDEX_BITS)
            .map(|len| {
                let mut bits = FixedBitSet::with_capacity(len);
                bits.extend(tuples.iter().map(|t| encode(universe, t)));
                bits
            });
        Ok(Self { arity, tuples, index, universe })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, t: &[usize]) -> bool {
        if t.len() != self.arity || t.iter().any(|&v| v >= self.universe) {
            return false;
        }
        match &self.index {
            Some(bits) => bits.contains(encode(self.universe, t)),
            None => self.tuples.binary_search_by(|x| x.as_slice().cmp(t)).is_ok(),
        }
    }
}

fn encode(universe: usize, t: &[usize]) -> usize {
    t.iter().fold(0, |acc, &v| acc * universe + v)
}

#[derive(Debug, Clone)]
pub struct RelStructure {
    universe: usize,
    relations: BTreeMap<String, Relation>,
}

impl RelStructure {
    pub fn new(universe: usize, relations: BTreeMap<String, Relation>) -> Result<Self> {
        if universe == 0 {
            return Err(input_err!("universe must be nonempty"));
        }
        for (name, rel) in &relations {
            if rel.universe != universe {
                return Err(input_err!("relation {name} built over a different universe"));
            }
        }
        Ok(Self { universe, relations })
    }

    /// Convenience constructor from `(name, arity, tuples)` triples.
    pub fn from_parts(universe: usize, parts: Vec<(&str, usize, Vec<Vec<usize>>)>) -> Result<Self> {
        let mut relations = BTreeMap::new();
        for (name, arity, tuples) in parts {
            if relations.insert(name.to_string(), Relation::new(universe, arity, tuples)?).is_some() {
                return Err(input_err!("duplicate relation name {name}"));
            }
        }
        Self::new(universe, relations)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn relations(&self) -> &BTreeMap<String, Relation> {
        &self.relations
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn vocabulary(&self) -> Vocabulary {
        Vocabulary(self.relations.iter().map(|(n, r)| (n.clone(), r.arity)).collect())
    }

    pub fn max_arity(&self) -> usize {
        self.relations.values().map(Relation::arity).max().unwrap_or(0)
    }

    /// Errors unless both structures have the same names with the same arities.
    pub fn check_same_vocabulary(&self, other: &RelStructure) -> Result<()> {
        let (a, b) = (self.vocabulary(), other.vocabulary());
        if a == b {
            Ok(())
        } else {
            Err(input_err!("vocabulary mismatch: {:?} vs {:?}", a.0, b.0))
        }
    }

    pub fn to_file(&self) -> StructureFile {
        StructureFile {
            universe: self.universe,
            relations: self
                .relations
                .iter()
                .map(|(n, r)| (n.clone(), RelationFile { arity: r.arity, tuples: r.tuples.clone() }))
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| input_err!("cannot read {}: {e}", path.display()))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: StructureFile =
            serde_json::from_str(text).map_err(|e| input_err!("malformed structure JSON: {e}"))?;
        Self::try_from(file)
    }
}

/// On-disk structure:
/// `{ "universe": n, "relations": { "E": { "arity": 2, "tuples": [[0,1]] } } }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub universe: usize,
    pub relations: BTreeMap<String, RelationFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationFile {
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl TryFrom<StructureFile> for RelStructure {
    type Error = Error;

    fn try_from(file: StructureFile) -> Result<Self> {
        let mut relations = BTreeMap::new();
        for (name, rel) in file.relations {
            relations.insert(name, Relation::new(file.universe, rel.arity, rel.tuples)?);
        }
        RelStructure::new(file.universe, relations)
    }
}

/// A partial map from instance elements to template elements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<Option<usize>>);

impl Assignment {
    pub fn empty(size: usize) -> Self {
        Self(vec![None; size])
    }

    pub fn total(values: &[usize]) -> Self {
        Self(values.iter().map(|&v| Some(v)).collect())
    }

    pub fn get(&self, a: usize) -> Option<usize> {
        self.0.get(a).copied().flatten()
    }

    pub fn domain(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter_map(|(i, v)| v.map(|_| i)).collect()
    }

    pub fn is_total(&self) -> bool {
        self.0.iter().all(Option::is_some)
    }

    /// `Some(values)` when total.
    pub fn as_total(&self) -> Option<Vec<usize>> {
        self.0.iter().copied().collect()
    }

    /// `self` is a restriction of `other`.
    pub fn is_restriction_of(&self, other: &Assignment) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| a.is_none() || a == b)
    }
}

fn check_assignment(f: &Assignment, a: &RelStructure, b: &RelStructure) -> Result<()> {
    a.check_same_vocabulary(b)?;
    if f.0.len() != a.universe() {
        return Err(input_err!("assignment covers {} elements, instance has {}", f.0.len(), a.universe()));
    }
    if let Some(v) = f.0.iter().flatten().find(|&&v| v >= b.universe()) {
        return Err(input_err!("assignment value {v} outside template universe {}", b.universe()));
    }
    Ok(())
}

/// Every tuple of `a` whose entries all lie in the domain of `f` maps into `b`.
pub fn is_partial_homomorphism(f: &Assignment, a: &RelStructure, b: &RelStructure) -> Result<bool> {
    check_assignment(f, a, b)?;
    let mut image = Vec::new();
    for (name, rel) in a.relations() {
        let target = &b.relations()[name];
        'tuples: for t in rel.tuples() {
            image.clear();
            for &x in t {
                match f.get(x) {
                    Some(v) => image.push(v),
                    None => continue 'tuples,
                }
            }
            if !target.contains(&image) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn is_homomorphism(h: &[usize], a: &RelStructure, b: &RelStructure) -> Result<bool> {
    if h.len() != a.universe() {
        return Err(input_err!("map is not total: {} of {} elements", h.len(), a.universe()));
    }
    is_partial_homomorphism(&Assignment::total(h), a, b)
}

/// A choice of `op.arity()` tuples from one relation whose coordinatewise
/// image leaves the relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PolymorphismWitness {
    pub relation: String,
    pub tuples: Vec<Vec<usize>>,
    pub image: Vec<usize>,
}

pub fn polymorphism_witness(op: &OperationTable, b: &RelStructure) -> Result<Option<PolymorphismWitness>> {
    if op.size() != b.universe() {
        return Err(input_err!("operation over {} elements, structure over {}", op.size(), b.universe()));
    }
    let k = op.arity();
    for (name, rel) in b.relations() {
        let ts = rel.tuples();
        if ts.is_empty() {
            continue;
        }
        let mut choice = vec![0usize; k];
        let mut args = vec![0usize; k];
        let mut image = vec![0usize; rel.arity()];
        loop {
            for (pos, slot) in image.iter_mut().enumerate() {
                for (j, &c) in choice.iter().enumerate() {
                    args[j] = ts[c][pos];
                }
                *slot = op.get(&args);
            }
            if !rel.contains(&image) {
                return Ok(Some(PolymorphismWitness {
                    relation: name.clone(),
                    tuples: choice.iter().map(|&c| ts[c].clone()).collect(),
                    image,
                }));
            }
            // odometer over choices
            let mut pos = k;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < ts.len() {
                    break;
                }
                choice[pos] = 0;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    Ok(None)
}

/// `op` preserves every relation of `b`.
pub fn is_polymorphism(op: &OperationTable, b: &RelStructure) -> Result<bool> {
    Ok(polymorphism_witness(op, b)?.is_none())
}

/// Least relation containing `tuples` that is preserved by all three
/// operations of `alg`: the subuniverse of the power it generates.
pub fn inv_close_relation(tuples: &[Vec<usize>], alg: &FiniteAlgebra) -> Result<Vec<Vec<usize>>> {
    let arity = match tuples.first() {
        None => return Err(input_err!("cannot close an empty relation")),
        Some(t) => t.len(),
    };
    if arity == 0 {
        return Err(input_err!("relation arity must be at least 1"));
    }
    let power = Power::new(alg, arity)?;
    let codes = tuples.iter().map(|t| power.encode_checked(t)).collect::<Result<Vec<_>>>()?;
    Ok(power.sg_closure(codes).ones().map(|c| power.decode(c)).collect())
}

/// Errors unless every relation of `b` is preserved by `p1`, `p2` and `p3`.
pub fn validate_template(b: &RelStructure, alg: &FiniteAlgebra) -> Result<()> {
    for op in Op::ALL {
        if let Some(w) = polymorphism_witness(alg.op(op), b)? {
            return Err(input_err!(
                "template relation {} is not preserved by {}: {:?} -> {:?}",
                w.relation,
                op.name(),
                w.tuples,
                w.image
            ));
        }
    }
    Ok(())
}
