//! Seeded random instances: a CD(4) algebra, a template whose relations are
//! closed under it, and an instance over the same vocabulary.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::FiniteAlgebra;
use crate::error::{input_err, Error, Result};
use crate::oracle::enumerate::{random_cd4_algebra, SampleStyle};
use crate::relstruct::{inv_close_relation, RelStructure};

/// Size bounds for [`random_instance`].
#[derive(Debug, Clone, Serialize)]
pub struct InstanceParams {
    pub max_instance: usize,
    pub max_template: usize,
    pub max_relations: usize,
    /// Arities are drawn from `1..=max_arity`.
    pub max_arity: usize,
    /// Tuples seeding each template relation before closure.
    pub max_seed_tuples: usize,
    /// Tuples per instance relation.
    pub max_instance_tuples: usize,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self {
            max_instance: 6,
            max_template: 4,
            max_relations: 2,
            max_arity: 3,
            max_seed_tuples: 3,
            max_instance_tuples: 6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub seed: u64,
    pub algebra: FiniteAlgebra,
    pub template: RelStructure,
    pub instance: RelStructure,
    /// A homomorphism built into the instance, when one was planted.
    pub planted: Option<Vec<usize>>,
}

fn check(params: &InstanceParams) -> Result<()> {
    if params.max_instance == 0 || params.max_arity == 0 {
        return Err(input_err!("instance parameters must be positive"));
    }
    if params.max_template < 2 {
        return Err(input_err!("templates need at least two elements"));
    }
    Ok(())
}

fn template(rng: &mut ChaCha8Rng, params: &InstanceParams) -> Result<(FiniteAlgebra, RelStructure)> {
    let nb = rng.gen_range(2..=params.max_template);
    let style = if rng.gen_bool(0.7) { SampleStyle::Conservative } else { SampleStyle::Arbitrary };
    let alg = random_cd4_algebra(nb, style, rng)?;
    let count = rng.gen_range(1..=params.max_relations.max(1));
    let mut parts = Vec::new();
    let names: Vec<String> = (0..count).map(|i| format!("R{i}")).collect();
    for name in &names {
        let arity = rng.gen_range(1..=params.max_arity);
        let seeds = rng.gen_range(1..=params.max_seed_tuples.max(1));
        let tuples: Vec<Vec<usize>> =
            (0..seeds).map(|_| (0..arity).map(|_| rng.gen_range(0..nb)).collect()).collect();
        parts.push((name.as_str(), arity, inv_close_relation(&tuples, &alg)?));
    }
    Ok((alg, RelStructure::from_parts(nb, parts)?))
}

/// Instance tuples drawn uniformly, or, with `plant`, only among tuples
/// that `plant` maps into the template.
fn instance(
    rng: &mut ChaCha8Rng,
    params: &InstanceParams,
    b: &RelStructure,
    na: usize,
    plant: Option<&[usize]>,
) -> Result<RelStructure> {
    let mut parts = Vec::new();
    for (name, rel) in b.relations() {
        let count = rng.gen_range(0..=params.max_instance_tuples);
        let mut tuples = Vec::new();
        for _ in 0..count {
            let t = match plant {
                None => (0..rel.arity()).map(|_| rng.gen_range(0..na)).collect(),
                Some(h) => {
                    // pick a template tuple, then preimages of its entries
                    let target = rel.tuples().choose(rng).expect("closed relations are nonempty");
                    let mut t = Vec::with_capacity(rel.arity());
                    for &v in target {
                        let pre: Vec<usize> = (0..na).filter(|&x| h[x] == v).collect();
                        match pre.choose(rng) {
                            Some(&x) => t.push(x),
                            None => break,
                        }
                    }
                    if t.len() < rel.arity() {
                        continue;
                    }
                    t
                }
            };
            tuples.push(t);
        }
        parts.push((name.as_str(), rel.arity(), tuples));
    }
    RelStructure::from_parts(na, parts)
}

/// Deterministic in `seed`: the same seed and parameters give the same
/// triple.
pub fn random_instance(seed: u64, params: &InstanceParams) -> Result<GeneratedInstance> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (algebra, template) = template(&mut rng, params)?;
    let na = rng.gen_range(1..=params.max_instance);
    let instance = instance(&mut rng, params, &template, na, None)?;
    Ok(GeneratedInstance { seed, algebra, template, instance, planted: None })
}

/// Like [`random_instance`] but every instance tuple is mapped into the
/// template by a random planted map, so the instance is satisfiable.
pub fn planted_instance(seed: u64, params: &InstanceParams) -> Result<GeneratedInstance> {
    check(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (algebra, template) = template(&mut rng, params)?;
    let na = rng.gen_range(1..=params.max_instance);
    let nb = template.universe();
    let h: Vec<usize> = (0..na).map(|_| rng.gen_range(0..nb)).collect();
    let instance = instance(&mut rng, params, &template, na, Some(&h))?;
    Ok(GeneratedInstance { seed, algebra, template, instance, planted: Some(h) })
}

impl GeneratedInstance {
    /// Writes `algebra.json`, `template.json` and `instance.json` (plus
    /// `planted.json` when present) into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
        };
        put("algebra.json", to_json(&self.algebra.to_file())?)?;
        put("template.json", to_json(&self.template.to_file())?)?;
        put("instance.json", to_json(&self.instance.to_file())?)?;
        if let Some(h) = &self.planted {
            put("planted.json", to_json(h)?)?;
        }
        Ok(())
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Input(format!("cannot serialize: {e}")))
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Input(format!("cannot write {}: {e}", path.display()))
}
