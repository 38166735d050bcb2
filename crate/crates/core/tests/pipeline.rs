use cdsolve_core::congruence::is_subdirect_binary;
use cdsolve_core::ideals::Carrier;
use cdsolve_core::oracle::brute::{brute_force_hom, DEFAULT_MAP_BUDGET};
use cdsolve_core::oracle::generate::{random_instance, InstanceParams};
use cdsolve_core::oracle::lemmas::enumerate_subdirect;
use cdsolve_core::relstruct::is_homomorphism;
use cdsolve_core::power::set_of;
use cdsolve_core::{solve, FiniteAlgebra, Power, RelStructure, SolveOptions};

const MAJORITY: &str = r#"{ "size": 2, "ops": { "p1": [0,0,0,1,0,1,1,1], "p2": [0,0,0,1,0,1,1,1], "p3": [0,0,0,1,0,1,1,1] } }"#;

#[test]
fn json_round_trip_and_solve() {
    let alg = FiniteAlgebra::from_json(MAJORITY).unwrap();
    let b = RelStructure::from_json(r#"{ "universe": 2, "relations": { "E": { "arity": 2, "tuples": [[0,1],[1,0]] } } }"#).unwrap();
    let a = RelStructure::from_json(r#"{ "universe": 4, "relations": { "E": { "arity": 2, "tuples": [[0,1],[1,2],[2,3],[3,0]] } } }"#).unwrap();
    let text = serde_json::to_string(&a.to_file()).unwrap();
    assert_eq!(RelStructure::from_json(&text).unwrap().to_file(), a.to_file());
    let out = solve(&a, &b, &alg, SolveOptions::default()).unwrap();
    let h = out.assignment.unwrap();
    assert!(is_homomorphism(&h, &a, &b).unwrap());
    assert!(out.trace.strictly_decreasing());
}

#[test]
fn solver_and_oracle_agree_on_generated_instances() {
    let params = InstanceParams::default();
    for seed in 1000..1040 {
        let g = random_instance(seed, &params).unwrap();
        let got = solve(&g.instance, &g.template, &g.algebra, SolveOptions::default()).unwrap();
        let want = brute_force_hom(&g.instance, &g.template, DEFAULT_MAP_BUDGET).unwrap();
        assert_eq!(got.assignment.is_some(), want.is_some(), "seed {seed}");
    }
}

#[test]
fn subdirect_enumeration_matches_subset_scan() {
    let alg = FiniteAlgebra::majority(3);
    let whole = Carrier::whole(&alg);
    let mut rels = enumerate_subdirect(&whole, &whole).unwrap();
    let square = alg.product(&alg).unwrap();
    let p = Power::new(&square, 1).unwrap();
    let mut expected: Vec<Vec<(usize, usize)>> = (1u32..512)
        .filter(|mask| p.is_closed(&set_of(9, (0..9).filter(|i| mask >> i & 1 == 1))))
        .map(|mask| (0..9).filter(|i| mask >> i & 1 == 1).map(|i| (i / 3, i % 3)).collect::<Vec<_>>())
        .filter(|rel| is_subdirect_binary(rel, 3, 3))
        .collect();
    rels.sort();
    expected.sort();
    assert_eq!(rels, expected);
    assert!(rels.contains(&vec![(0, 0), (1, 1), (2, 2)]));
}
