mod common;

use proptest::prelude::*;
use rand::Rng;
use timely_ck::coordination::{
    delta_violation, is_delta_coordinated, is_epsilon_coordinated, is_eventually_coordinated,
    is_perfectly_coordinated, verify_epsilon_coordination, verify_eventual_coordination,
    verify_perfect_coordination, verify_characterisation, EnsembleSpace,
};
use timely_ck::random;
use timely_ck::toy::u2;
use timely_ck::{AgentId, Delta, Error, EventTuple, TimingSpec, Universe};

use common::*;

const AB: [AgentId; 2] = [AgentId(0), AgentId(1)];
const GUARD: u128 = 1 << 14;

fn small_universe(rng: &mut rand_chacha::ChaCha8Rng) -> Universe {
    loop {
        let recall = rng.gen_bool(0.5);
        let u = universe(rng, 12, recall);
        if EnsembleSpace::new(&u, &agents(&u), GUARD).is_ok() {
            return u;
        }
    }
}

#[test]
fn enumeration_guard_is_enforced() {
    let u = u2();
    assert!(matches!(
        verify_characterisation(&u, &u.full(), &TimingSpec::constant(AB.to_vec(), Delta::Finite(0)).unwrap(), 100),
        Err(Error::SizeGuard { .. })
    ));
}

#[test]
fn empty_event_passes_everything() {
    let u = u2();
    let spec = TimingSpec::constant(AB.to_vec(), Delta::Finite(1)).unwrap();
    let report = verify_characterisation(&u, &u.empty(), &spec, 1 << 20).unwrap();
    assert!(report.passed());
    assert_eq!(report.ensembles, 1 << 13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn characterisation_on_u2(seed in any::<u64>()) {
        let u = u2();
        let mut rng = rng(seed);
        let psi = event(&mut rng, &u);
        let spec = random::spec(&mut rng, &u, 2, 0.2);
        let report = verify_characterisation(&u, &psi, &spec, 1 << 20).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn characterisation_on_random_universes(seed in any::<u64>()) {
        let mut rng = rng(seed);
        let u = small_universe(&mut rng);
        let psi = event(&mut rng, &u);
        let spec = spec(&mut rng, &u);
        let report = verify_characterisation(&u, &psi, &spec, GUARD).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn symmetric_characterisations(seed in any::<u64>(), eps in 0usize..4) {
        let mut rng = rng(seed);
        let u = small_universe(&mut rng);
        let psi = event(&mut rng, &u);
        let g = agents(&u);
        prop_assert!(verify_perfect_coordination(&u, &g, &psi, GUARD).unwrap().passed());
        prop_assert!(verify_eventual_coordination(&u, &g, &psi, GUARD).unwrap().passed());
        prop_assert!(verify_epsilon_coordination(&u, &g, &psi, eps, GUARD).unwrap().passed());
    }

    #[test]
    fn weakening_chain(seed in any::<u64>(), eps in 0usize..5) {
        let mut rng = rng(seed);
        let u = universe(&mut rng, 48, false);
        let g = agents(&u);
        let spec = spec(&mut rng, &u);
        let shared = event(&mut rng, &u);
        let tuples = [
            EventTuple::constant(&g, &shared),
            EventTuple::new(g.clone(), g.iter().map(|_| event(&mut rng, &u)).collect()).unwrap(),
        ];
        for t in &tuples {
            // the pointwise and within-based checks must agree
            delta_violation(t, &spec).unwrap();
            if is_perfectly_coordinated(t) {
                prop_assert!(is_epsilon_coordinated(t, eps));
            }
            if is_epsilon_coordinated(t, eps) {
                prop_assert!(is_eventually_coordinated(t));
            }
            if is_delta_coordinated(t, &spec).unwrap() {
                prop_assert!(is_eventually_coordinated(t));
            }
        }
        prop_assert!(is_perfectly_coordinated(&tuples[0]));
    }

    #[test]
    fn constant_bounds_match_epsilon_on_single_responses(seed in any::<u64>(), eps in 0usize..5) {
        let mut rng = rng(seed);
        let u = universe(&mut rng, 48, false);
        let g = agents(&u);
        let coords = g
            .iter()
            .map(|_| {
                let mut e = u.empty();
                for r in 0..u.num_runs() {
                    if rng.gen_bool(0.8) {
                        e.insert(r, rng.gen_range(0..=u.horizon()));
                    }
                }
                e
            })
            .collect();
        let t = EventTuple::new(g.clone(), coords).unwrap();
        let spec = TimingSpec::constant(g, Delta::Finite(eps as i64)).unwrap();
        prop_assert_eq!(is_delta_coordinated(&t, &spec).unwrap(), is_epsilon_coordinated(&t, eps));
    }
}
