//! Properties of the public API over seeded random instances.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use weightlab_core::algebra::FdAlgebra;
use weightlab_core::dynamics::{default_t_grid, gibbs_weight, kms_check, modular_group_of};
use weightlab_core::gns::gns_construct;
use weightlab_core::instance::{GenOptions, GroupSpec, Instance};
use weightlab_core::random::{random_density, random_element, random_hermitian};
use weightlab_core::suite::{find, run_check, Context, Tolerances};
use weightlab_core::report::Status;
use weightlab_core::weights::Weight;

fn blocks() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..=3, 1..=2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gns_invariants_hold(dims in blocks(), seed in any::<u64>(), faithful in any::<bool>()) {
        let alg = FdAlgebra::new(&dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = Weight::new(&alg, random_density(&alg, faithful, &mut rng)).unwrap();
        let gns = gns_construct(&phi).unwrap();
        let d = gns.invariant_deviations(&phi);
        prop_assert!(d.dims_ok());
        prop_assert!(d.max_deviation() <= 1e-10, "deviation {}", d.max_deviation());
    }

    #[test]
    fn gibbs_weights_satisfy_kms(dims in blocks(), seed in any::<u64>()) {
        let alg = FdAlgebra::new(&dims).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = gibbs_weight(&alg, &random_hermitian(&alg, &mut rng)).unwrap();
        let probes = vec![(random_element(&alg, &mut rng), random_element(&alg, &mut rng))];
        let r = kms_check(&phi, &modular_group_of(&phi).unwrap(), &default_t_grid(), &probes, 1e-7);
        prop_assert!(r.passed(), "deviation {}", r.max_deviation());
    }

    #[test]
    fn instances_round_trip(dims in blocks(), seed in any::<u64>(), faithful in any::<bool>(), random_group in any::<bool>()) {
        let group = if random_group { GroupSpec::Random } else { GroupSpec::None };
        let inst = Instance::generate(&GenOptions { blocks: dims, seed, faithful, partner: Some(vec![2]), group }).unwrap();
        let back = Instance::from_json(&inst.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), inst.to_json());
    }

    #[test]
    fn checks_are_reproducible(seed in any::<u64>()) {
        let inst = Instance::generate(&GenOptions { blocks: vec![2], seed, faithful: true, partner: None, group: GroupSpec::None }).unwrap();
        let ctx = Context::new("p".to_string(), inst).unwrap();
        let check = find("slice.cauchy_schwarz").unwrap();
        let a = run_check(check, &ctx, &Tolerances::default());
        let b = run_check(check, &ctx, &Tolerances::default());
        prop_assert_eq!(a.status, Status::Pass);
        prop_assert_eq!(a.max_deviation, b.max_deviation);
        prop_assert_eq!(a.seed, b.seed);
    }
}
