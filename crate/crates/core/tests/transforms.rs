//! Public-API behaviour of stopping transforms and free-semigroup kernels.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use transwalk::group::GroupElement;
use transwalk::kernel::{green_free, martin_free, KernelTarget};
use transwalk::measure::Measure;
use transwalk::rational::{self, ratio};
use transwalk::stopping::{
    iterate_transform, mu_tau_t, random_table_rule, transform_bounded, transform_hitting,
    HittingRule, StoppingRule,
};

fn z(k: i64) -> GroupElement {
    GroupElement::lattice(&[k])
}

fn simple_walk() -> Measure {
    Measure::from_atoms([(z(1), ratio(1, 2)), (z(-1), ratio(1, 2))]).unwrap()
}

fn lazy_walk() -> Measure {
    Measure::from_atoms([
        (z(1), ratio(1, 3)),
        (z(0), ratio(1, 3)),
        (z(-1), ratio(1, 3)),
    ])
    .unwrap()
}

fn rule(seed: u64, bound: usize, deterministic: bool) -> StoppingRule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_table_rule(&[z(-1), z(0), z(1)], bound, deterministic, &mut rng)
}

fn word(s: &str) -> GroupElement {
    let letters: Vec<String> = s.chars().map(String::from).collect();
    let refs: Vec<&str> = letters.iter().map(String::as_str).collect();
    GroupElement::word(&refs)
}

#[test]
fn constant_rule_is_a_convolution_power() {
    let mu = lazy_walk();
    for k in 1..=4 {
        let t = transform_bounded(&mu, &StoppingRule::Constant(k)).unwrap();
        assert_eq!(t, mu.power(k).unwrap());
    }
}

#[test]
fn hitting_deficit_halves_per_level() {
    let mu = simple_walk();
    for depth in 1..=8 {
        let md = transform_hitting(&mu, &HittingRule::new([z(1)], depth)).unwrap();
        assert!(md.is_consistent());
        assert_eq!(md.missing_mass, rational::pow(&ratio(1, 2), depth as i64));
        // Stops at the first +1 increment after i steps of -1.
        assert_eq!(md.measure.len(), depth);
        for i in 0..depth as i64 {
            assert_eq!(
                md.measure.weight(&z(1 - i)),
                rational::pow(&ratio(1, 2), i + 1)
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounded_transform_conserves_mass(seed in any::<u64>(), bound in 1usize..4, det in any::<bool>()) {
        let t = transform_bounded(&lazy_walk(), &rule(seed, bound, det)).unwrap();
        prop_assert!(t.is_probability());
    }

    #[test]
    fn second_iterate_matches_self_composition(seed in any::<u64>(), bound in 1usize..3) {
        let tau = rule(seed, bound, false);
        let mu = lazy_walk();
        let twice = iterate_transform(&mu, &tau, 2).unwrap();
        let composed = transform_bounded(&mu, &StoppingRule::composed(tau.clone(), tau)).unwrap();
        prop_assert_eq!(twice, composed);
    }

    #[test]
    fn lazy_mixture_interpolates(seed in any::<u64>(), num in 1i64..=8) {
        let mu = lazy_walk();
        let t = ratio(num, 8);
        let mu_tau = transform_bounded(&mu, &rule(seed, 2, true)).unwrap();
        let mixed = mu_tau_t(&mu, &mu_tau, &t).unwrap();
        prop_assert!(mixed.is_probability());
        for g in [z(-2), z(-1), z(0), z(1), z(2)] {
            let want = &t * mu.weight(&g) + (rational::one() - &t) * mu_tau.weight(&g);
            prop_assert_eq!(mixed.weight(&g), want);
        }
    }

    #[test]
    fn martin_kernel_is_a_green_ratio(x in "[ab]{0,4}", tail in "[ab]{0,4}") {
        let mu = Measure::from_atoms([(word("a"), ratio(1, 3)), (word("b"), ratio(2, 3))]).unwrap();
        let (x, y) = (word(&x), word(&format!("{x}{tail}")));
        let e = word("");
        let k = martin_free(&mu, &x, &KernelTarget::Finite(y.as_word().unwrap().clone())).unwrap();
        let g_xy = green_free(&mu, &x, &y).unwrap();
        let g_ey = green_free(&mu, &e, &y).unwrap();
        let want = g_xy.rational().unwrap() / g_ey.rational().unwrap();
        prop_assert_eq!(k.rational().unwrap(), &want);
    }
}
