//! Invariants checked on seeded random inputs.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resmorph::applications::{sepp_comparison, weak_converse_dilution, weak_converse_distillation, DilutionVariant};
use resmorph::divergences::{d_max, d_max_f, d_min, hypothesis_testing, umegaki};
use resmorph::freesets::{FreeSet, MEMBERSHIP_TOL};
use resmorph::monotones::{gen_log_robustness, hyp_monotone, log_robustness, min_monotone, relative_entropy_of_resource};
use resmorph::opalg::{
    apply_channel, eig_decompose, half_trace_distance, partial_transpose, random_hermitian, random_pure_state, random_state,
    ChannelChoi, DensityMatrix,
};
use resmorph::transitions::{ext_ge, Instance, Thm1Case};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn kind_set(kind: u8, dim: usize, r: &mut ChaCha8Rng) -> FreeSet {
    match kind % 4 {
        0 => FreeSet::full(dim),
        1 => FreeSet::singleton(random_state(dim, dim, r)),
        2 => FreeSet::incoherent(dim),
        _ => FreeSet::ppt(2, 2).unwrap(),
    }
}

fn dim_for(kind: u8, r: &mut ChaCha8Rng) -> usize {
    if kind % 4 == 3 {
        4
    } else {
        r.random_range(2..=4)
    }
}

fn ext_le(a: f64, b: f64, slack: f64) -> bool {
    ext_ge(b, a, slack)
}

/// A channel built by a decided checker, with its instance.
fn synthesized(seed: u64) -> Option<(Instance, ChannelChoi)> {
    let mut r = rng(seed);
    let d = r.random_range(2..=3);
    let free = FreeSet::incoherent(d);
    let rho = random_pure_state(d, &mut r);
    let sigma = random_state(d, d, &mut r).mix(&DensityMatrix::maximally_mixed(d), 0.5);
    let inst = Instance::new(rho, sigma, free.clone(), free, 0.0, 0.0).unwrap();
    let verdict = inst.auto();
    if !verdict.is_decided() {
        return None;
    }
    let channel = inst.synthesize(&verdict).unwrap();
    assert!(inst.verify(&channel, verdict.eps_total, 20, seed).unwrap().pass());
    Some((inst, channel))
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=6) {
        let a = random_hermitian(dim, &mut rng(seed));
        let rebuilt = eig_decompose(&a).rebuild(|x| x);
        let err = (rebuilt.matrix() - a.matrix()).norm();
        prop_assert!(err <= 1e-10 * a.frobenius_norm().max(1.0));
    }

    #[test]
    fn trace_distance_triangle_inequality(seed in any::<u64>(), dim in 2usize..=5) {
        let mut r = rng(seed);
        let [a, b, c] = [0, 1, 2].map(|_| { let k = r.random_range(1..=dim); random_state(dim, k, &mut r) });
        let (ab, bc, ac) = (
            half_trace_distance(&a, &b).unwrap(),
            half_trace_distance(&b, &c).unwrap(),
            half_trace_distance(&a, &c).unwrap(),
        );
        prop_assert!(ac <= ab + bc + 1e-10);
    }

    #[test]
    fn partial_transpose_is_an_involution(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let a = random_hermitian(da * db, &mut rng(seed));
        let twice = partial_transpose(&partial_transpose(&a, da, db).unwrap(), da, db).unwrap();
        prop_assert_eq!(twice.matrix(), a.matrix());
    }

    #[test]
    fn channels_act_linearly(seed in any::<u64>(), din in 1usize..=3, dout in 1usize..=3, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let channel = ChannelChoi::random(din, dout, &mut r);
        let (x, y) = (random_state(din, din, &mut r), random_state(din, 1, &mut r));
        let lhs = apply_channel(&channel, &x.mix(&y, t)).unwrap();
        let rhs = apply_channel(&channel, &x).unwrap().mix(&apply_channel(&channel, &y).unwrap(), t);
        prop_assert!((lhs.matrix() - rhs.matrix()).norm() <= 1e-10);
    }

    #[test]
    fn free_sets_are_convex(seed in any::<u64>(), kind in 0u8..4, t in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let (a, b) = (free.sample_with(&mut r), free.sample_with(&mut r));
        prop_assert!(free.contains(&a.mix(&b, t), MEMBERSHIP_TOL).unwrap());
    }

    #[test]
    fn incoherent_linear_maximum_is_max_diagonal(seed in any::<u64>(), dim in 1usize..=6) {
        let a = random_hermitian(dim, &mut rng(seed));
        let best = FreeSet::incoherent(dim).max_linear(&a).unwrap();
        let diag = a.diagonal().into_iter().fold(f64::MIN, f64::max);
        prop_assert_eq!(best.value, diag);
    }

    #[test]
    fn divergence_chain_for_full_rank_reference(seed in any::<u64>(), kind in 0u8..4) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let rank = r.random_range(1..=dim);
        let rho = random_state(dim, rank, &mut r);
        // Full rank free reference: mix a sample with an interior point.
        let sigma = free.sample_with(&mut r).mix(&free.interior_point(), 0.7);
        let chain = [
            d_min(&rho, &sigma).unwrap(),
            umegaki(&rho, &sigma).unwrap(),
            d_max(&rho, &sigma).unwrap(),
            d_max_f(&rho, &sigma, &free).unwrap().value,
        ];
        for w in chain.windows(2) {
            prop_assert!(ext_le(w[0], w[1], 1e-6), "{:?}", chain);
        }
    }

    #[test]
    fn hypothesis_testing_grows_with_eps(seed in any::<u64>(), dim in 2usize..=4, e1 in 0.0f64..0.9, de in 0.0f64..0.1) {
        let mut r = rng(seed);
        let rank = r.random_range(1..=dim);
        let rho = random_state(dim, rank, &mut r);
        let sigma = random_state(dim, dim, &mut r);
        let lo = hypothesis_testing(&rho, &sigma, e1).unwrap().value;
        let hi = hypothesis_testing(&rho, &sigma, e1 + de).unwrap().value;
        prop_assert!(lo >= -1e-12);
        prop_assert!(hi + 1e-9 >= lo);
    }

    #[test]
    fn weak_converse_never_contradicts_distillation_checkers(seed in any::<u64>(), fidelity in 0.0f64..=0.5) {
        // PPT isotropic inputs towards random pure targets.
        let mut r = rng(seed);
        let ppt = FreeSet::ppt(2, 2).unwrap();
        let rho = DensityMatrix::isotropic(2, fidelity).unwrap();
        let alpha = if r.random_bool(0.5) { DensityMatrix::max_entangled(2) } else { random_pure_state(4, &mut r) };
        let w = weak_converse_distillation(&rho, &ppt, &alpha, &ppt).unwrap();
        if w.impossible() {
            let inst = Instance::new(rho, alpha, ppt.clone(), ppt, 0.0, 0.0).unwrap();
            prop_assert!(!inst.auto().is_decided());
        }
    }

    #[test]
    fn sepp_distill_dilute_implies_direct(f_rho in 0.0f64..=1.0, f_sigma in 0.0f64..=1.0) {
        let ppt = FreeSet::ppt(2, 2).unwrap();
        let c = sepp_comparison(
            &DensityMatrix::isotropic(2, f_rho).unwrap(),
            &DensityMatrix::isotropic(2, f_sigma).unwrap(),
            &ppt,
        ).unwrap();
        prop_assert!(!c.distill_dilute_ok || c.direct_ok);
    }
}

proptest! {
    #![proptest_config(config(40))]

    #[test]
    fn linear_maximum_dominates_samples(seed in any::<u64>(), kind in 0u8..4) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let a = random_hermitian(dim, &mut r);
        let best = free.max_linear(&a).unwrap();
        for _ in 0..1000 {
            prop_assert!(free.sample_with(&mut r).inner(&a) <= best.value + 1e-6);
        }
    }

    #[test]
    fn data_processing_inequality(seed in any::<u64>(), din in 2usize..=3, dout in 2usize..=3, eps in 0.0f64..0.5) {
        let mut r = rng(seed);
        let channel = ChannelChoi::random(din, dout, &mut r);
        let rank = r.random_range(1..=din);
        let rho = random_state(din, rank, &mut r);
        let sigma = random_state(din, din, &mut r);
        let (er, es) = (apply_channel(&channel, &rho).unwrap(), apply_channel(&channel, &sigma).unwrap());
        prop_assert!(ext_le(umegaki(&er, &es).unwrap(), umegaki(&rho, &sigma).unwrap(), 1e-6));
        prop_assert!(ext_le(d_min(&er, &es).unwrap(), d_min(&rho, &sigma).unwrap(), 1e-6));
        prop_assert!(ext_le(d_max(&er, &es).unwrap(), d_max(&rho, &sigma).unwrap(), 1e-6));
        prop_assert!(ext_le(
            hypothesis_testing(&er, &es, eps).unwrap().value,
            hypothesis_testing(&rho, &sigma, eps).unwrap().value,
            1e-6
        ));
    }

    #[test]
    fn ray_divergence_contracts_under_verified_morphisms(seed in any::<u64>()) {
        let Some((inst, channel)) = synthesized(seed) else { return Ok(()) };
        let mut r = rng(seed ^ 0x5eed);
        let free = &inst.free_in;
        let x = random_state(free.dim(), free.dim(), &mut r);
        let omega = free.sample_with(&mut r).mix(&free.interior_point(), 0.5);
        let before = d_max_f(&x, &omega, free).unwrap().value;
        let (ex, eo) = (apply_channel(&channel, &x).unwrap(), apply_channel(&channel, &omega).unwrap());
        let after = d_max_f(&ex, &eo, &inst.free_out).unwrap().value;
        prop_assert!(ext_le(after, before, 1e-6), "{} > {}", after, before);
    }

    #[test]
    fn monotone_chain(seed in any::<u64>(), kind in 0u8..4) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let rank = r.random_range(1..=dim);
        let rho = random_state(dim, rank, &mut r);
        let chain = [
            min_monotone(&rho, &free).unwrap().value,
            relative_entropy_of_resource(&rho, &free).unwrap().value,
            gen_log_robustness(&rho, &free, 0.0).unwrap().value,
            log_robustness(&rho, &free, 0.0).unwrap().value,
        ];
        for w in chain.windows(2) {
            prop_assert!(ext_le(w[0], w[1], 1e-5), "{:?}", chain);
        }
    }

    #[test]
    fn monotones_vanish_on_free_states(seed in any::<u64>(), kind in 0u8..4) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let omega = free.sample_with(&mut r);
        prop_assert!(min_monotone(&omega, &free).unwrap().value <= 1e-6);
        // Smoothing leaves −log₂(1 − ε) even on free states.
        prop_assert!(hyp_monotone(&omega, &free, 0.1).unwrap().value <= -(0.9f64).log2() + 1e-6);
        prop_assert!(relative_entropy_of_resource(&omega, &free).unwrap().value <= 1e-6);
        prop_assert!(gen_log_robustness(&omega, &free, 0.0).unwrap().value <= 1e-6);
        prop_assert!(log_robustness(&omega, &free, 0.0).unwrap().value <= 1e-6);
    }

    #[test]
    fn monotones_do_not_increase_under_verified_morphisms(seed in any::<u64>()) {
        let Some((inst, channel)) = synthesized(seed) else { return Ok(()) };
        let mut r = rng(seed ^ 0xface);
        let free = &inst.free_in;
        let x = random_state(free.dim(), r.random_range(1..=free.dim()), &mut r);
        let y = apply_channel(&channel, &x).unwrap();
        let out = &inst.free_out;
        let pairs = [
            (min_monotone(&y, out).unwrap().value, min_monotone(&x, free).unwrap().value),
            (hyp_monotone(&y, out, 0.1).unwrap().value, hyp_monotone(&x, free, 0.1).unwrap().value),
            (relative_entropy_of_resource(&y, out).unwrap().value, relative_entropy_of_resource(&x, free).unwrap().value),
            (gen_log_robustness(&y, out, 0.0).unwrap().value, gen_log_robustness(&x, free, 0.0).unwrap().value),
            (log_robustness(&y, out, 0.0).unwrap().value, log_robustness(&x, free, 0.0).unwrap().value),
        ];
        for (after, before) in pairs {
            prop_assert!(ext_le(after, before, 1e-5), "{} > {}", after, before);
        }
    }

    #[test]
    fn resourceful_states_leave_their_witness(seed in any::<u64>(), kind in 1u8..4) {
        let mut r = rng(seed);
        let dim = dim_for(kind, &mut r);
        let free = kind_set(kind, dim, &mut r);
        let sigma = random_state(dim, r.random_range(1..=dim), &mut r);
        let rob = gen_log_robustness(&sigma, &free, 0.0).unwrap();
        if rob.value > 1e-6 {
            let ray = d_max_f(&rob.sigma_tilde, &rob.sigma_tilde_plus, &free).unwrap().value;
            prop_assert!(ray > 0.0);
        }
    }

    #[test]
    fn compact_condition_implies_theorem2(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = r.random_range(2..=3);
        let free = FreeSet::incoherent(d);
        let rho = random_pure_state(d, &mut r);
        let sigma = random_state(d, d, &mut r).mix(&DensityMatrix::maximally_mixed(d), r.random_range(0.0..0.6));
        let inst = Instance::new(rho, sigma, free.clone(), free, 0.0, 0.0).unwrap();
        if inst.cor_compact().is_decided() {
            prop_assert!(ext_le(inst.std_robustness().value, inst.gen_dmax_f(), 1e-6));
            let relaxed = Instance::new(inst.rho.clone(), inst.sigma.clone(), inst.free_in.clone(), inst.free_out.clone(), 0.0, 0.0)
                .unwrap()
                .with_slack(1e-6)
                .unwrap();
            prop_assert!(relaxed.theorem2().is_decided());
        }
    }

    #[test]
    fn weak_converse_never_contradicts_dilution_checkers(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (din, dout) = (r.random_range(2..=3), r.random_range(2..=4));
        let (f_in, f_out) = (FreeSet::incoherent(din), FreeSet::incoherent(dout));
        let alpha = DensityMatrix::max_coherent(din);
        let sigma = random_pure_state(dout, &mut r);
        for variant in [DilutionVariant::Generalized, DilutionVariant::Standard] {
            let w = weak_converse_dilution(&alpha, &f_in, &sigma, &f_out, variant).unwrap();
            if w.impossible() {
                let inst = Instance::new(alpha.clone(), sigma.clone(), f_in.clone(), f_out.clone(), 0.0, 0.0).unwrap();
                prop_assert!(!inst.auto().is_decided());
                prop_assert!(!inst.theorem1_case(Thm1Case::IIIb).is_decided());
            }
        }
    }
}
