//! Frozen instances found by seeded search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resmorph::freesets::FreeSet;
use resmorph::io::read_state;
use resmorph::opalg::{random_state, DensityMatrix};
use resmorph::transitions::{proof_scalar, Instance, Rule};

fn fixture(name: &str) -> DensityMatrix {
    read_state(&std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)).unwrap()
}

/// ppt(2,3): pure ρ and rank-2 σ drawn from ChaCha8 seed 1, in that order.
fn theorem2_only_instance() -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let rho = random_state(6, 1, &mut rng);
    let sigma = random_state(6, 2, &mut rng);
    let free = FreeSet::ppt(2, 3).unwrap();
    Instance::new(rho, sigma, free.clone(), free, 0.0, 0.0).unwrap()
}

#[test]
fn theorem2_decides_where_theorem1_does_not() {
    let inst = theorem2_only_instance();
    assert!((inst.hyp().value - 0.3588).abs() < 1e-3, "Dh {}", inst.hyp().value);
    assert!((inst.gen_dmax_f() - 1.3042).abs() < 1e-3, "DmaxF on witnesses {}", inst.gen_dmax_f());
    assert!((inst.std_robustness().value - 0.3235).abs() < 1e-3, "DmaxF {}", inst.std_robustness().value);
    assert_eq!(inst.theorem1().decided_by, Rule::Inconclusive);
    let v = inst.theorem2();
    assert_eq!(v.decided_by, Rule::Thm2);
    let channel = inst.synthesize(&v).unwrap();
    assert!(inst.verify(&channel, v.eps_total, 50, 0).unwrap().pass());
}

#[test]
fn theorem1_decides_where_theorem2_does_not() {
    let free = FreeSet::incoherent(2);
    let inst = Instance::new(fixture("plus2.json"), fixture("coherent_qubit.json"), free.clone(), free, 0.0, 0.0).unwrap();
    assert_eq!(inst.std_robustness().value, f64::INFINITY);
    assert_eq!(inst.theorem2().decided_by, Rule::Inconclusive);
    let v = inst.theorem1();
    assert_eq!(v.decided_by, Rule::Thm1CaseIIIb);
    let channel = inst.synthesize(&v).unwrap();
    assert!(inst.verify(&channel, 0.0, 50, 0).unwrap().pass());
}

#[test]
fn proof_scalars_on_frozen_instances() {
    let inst = theorem2_only_instance();
    let v = inst.theorem2();
    let m = v.witnesses.m;
    for seed in 0..100 {
        let t = proof_scalar(&v, &inst.free_in.sample(seed)).unwrap();
        assert!(t >= 1.0 - 1e-9 && t <= m / (m - 1.0) + 1e-9, "t = {t}, M = {m}");
    }
    // |+⟩ with P* = |+⟩⟨+|: Tr[P*φ] = 1/2 on every incoherent φ, so t = 1.
    let free = FreeSet::incoherent(2);
    let inst = Instance::new(fixture("plus2.json"), fixture("coherent_qubit.json"), free.clone(), free, 0.0, 0.0).unwrap();
    let v = inst.theorem1();
    for phi in inst.free_in.vertices().unwrap() {
        assert!((proof_scalar(&v, &phi).unwrap() - 1.0).abs() < 1e-9);
    }
}
