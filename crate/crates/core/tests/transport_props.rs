use coarse_ricci::measure::DiscreteMeasure;
use coarse_ricci::sampling::{self, random_euclidean_space, random_sparse_measure};
use coarse_ricci::transport::{
    brute_force_wasserstein, dual_potentials, lipschitz_constant, optimal_coupling, wasserstein,
    wasserstein_perturbation,
};
use proptest::prelude::*;
use rand::Rng;

fn instance(seed: u64, max_support: usize) -> (DiscreteMeasure, DiscreteMeasure, DiscreteMeasure) {
    let mut rng = sampling::rng(seed);
    let n = rng.random_range(2..=7);
    let space = random_euclidean_space(&mut rng, n, 2);
    let draw = |rng: &mut sampling::SeededRng| {
        let k = rng.random_range(1..=max_support.min(n));
        random_sparse_measure(rng, &space, k)
    };
    let a = draw(&mut rng);
    let b = draw(&mut rng);
    let c = draw(&mut rng);
    (a, b, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_vertex_enumeration(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0])) {
        let (mu, nu, _) = instance(seed, 4);
        let (plan, cost) = optimal_coupling(&mu, &nu, p).unwrap();
        let oracle = brute_force_wasserstein(&mu, &nu, p).unwrap().powf(p);
        prop_assert!((cost - oracle).abs() <= 1e-9, "{cost} vs {oracle}");
        prop_assert!(plan.marginal_error(&mu, &nu) <= 1e-12);
        prop_assert!((plan.cost(p) - cost).abs() <= 1e-12);
    }

    #[test]
    fn strong_duality(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 2.0, 2.5])) {
        let (mu, nu, _) = instance(seed, 7);
        let (_, cost) = optimal_coupling(&mu, &nu, p).unwrap();
        let dual = dual_potentials(&mu, &nu, p).unwrap();
        prop_assert!(dual.max_violation(mu.space()) <= 1e-9);
        prop_assert!((dual.value(&mu, &nu) - cost).abs() <= 1e-8);
        if p == 1.0 {
            let (phi, psi) = dual.unit_lipschitz().unwrap();
            prop_assert!(lipschitz_constant(mu.space(), &phi) <= 1.0 + 1e-9);
            let v: f64 = mu.weights().iter().zip(&phi).map(|(w, f)| w * f).sum::<f64>()
                + nu.weights().iter().zip(&psi).map(|(w, f)| w * f).sum::<f64>();
            prop_assert!((v - cost).abs() <= 1e-8);
        }
    }

    #[test]
    fn metric_axioms(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 2.0, 4.0])) {
        let (a, b, c) = instance(seed, 7);
        let ab = wasserstein(&a, &b, p).unwrap();
        prop_assert_eq!(ab, wasserstein(&b, &a, p).unwrap());
        prop_assert_eq!(wasserstein(&a, &a, p).unwrap(), 0.0);
        let ac = wasserstein(&a, &c, p).unwrap();
        let bc = wasserstein(&b, &c, p).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn monotone_in_exponent(seed in any::<u64>()) {
        let (a, b, _) = instance(seed, 7);
        let w: Vec<f64> = [1.0, 1.5, 2.0, 3.0].iter().map(|&p| wasserstein(&a, &b, p).unwrap()).collect();
        prop_assert!(w.windows(2).all(|x| x[0] <= x[1] + 1e-9), "{w:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn perturbation_solver_matches_general(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]), scale in 1e-4f64..0.2) {
        let mut rng = sampling::rng(seed);
        let n = rng.random_range(2..=7);
        let space = random_euclidean_space(&mut rng, n, 2);
        let nu = sampling::random_measure(&mut rng, &space);
        let other = sampling::random_measure(&mut rng, &space);
        // d = t (other - nu) keeps nu + d a probability measure
        let floor = nu.weights().iter().cloned().fold(f64::INFINITY, f64::min);
        let t = scale * floor;
        let d: Vec<f64> = other.weights().iter().zip(nu.weights()).map(|(a, b)| t * (a - b)).collect();
        let mu = DiscreteMeasure::normalized(space.clone(), nu.weights().iter().zip(&d).map(|(a, b)| a + b).collect()).unwrap();
        let fast = wasserstein_perturbation(&nu, &d, p).unwrap();
        prop_assert!(fast.is_some());
        let general = wasserstein(&mu, &nu, p).unwrap();
        let fast = fast.unwrap();
        prop_assert!((fast - general).abs() <= 1e-9 * general.max(1e-3), "{fast} vs {general}");
    }
}

#[test]
fn perturbation_solver_declines_thin_targets() {
    let mut rng = sampling::rng(8);
    let space = random_euclidean_space(&mut rng, 3, 2);
    let nu = DiscreteMeasure::new(space.clone(), vec![0.5, 0.5, 0.0]).unwrap();
    assert!(wasserstein_perturbation(&nu, &[0.1, 0.0, -0.1], 2.0).unwrap().is_none());
    assert_eq!(wasserstein_perturbation(&nu, &[0.0; 3], 2.0).unwrap(), Some(0.0));
}

#[test]
fn perturbation_resolves_below_rounding() {
    // two points: W_2(nu + d, nu) = sqrt(|d_0|) exactly
    let space = std::sync::Arc::new(coarse_ricci::space::validate_space(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap());
    let nu = DiscreteMeasure::uniform(space);
    let w = wasserstein_perturbation(&nu, &[1e-30, -1e-30], 2.0).unwrap().unwrap();
    assert!((w - 1e-15).abs() < 1e-27);
}

#[test]
fn dirac_distance_is_the_metric() {
    let mut rng = sampling::rng(3);
    let s = random_euclidean_space(&mut rng, 5, 3);
    for p in [1.0, 2.0, 7.0] {
        let w = wasserstein(&DiscreteMeasure::dirac(s.clone(), 1), &DiscreteMeasure::dirac(s.clone(), 4), p).unwrap();
        assert!((w - s.distance(1, 4)).abs() < 1e-12);
    }
}

#[test]
fn larger_problems_stay_feasible() {
    // no oracle at this size; check the certificate instead
    let mut rng = sampling::rng(11);
    for _ in 0..20 {
        let s = random_euclidean_space(&mut rng, 30, 2);
        let mu = sampling::random_measure(&mut rng, &s);
        let nu = sampling::random_measure(&mut rng, &s);
        let (plan, cost) = optimal_coupling(&mu, &nu, 2.0).unwrap();
        let dual = dual_potentials(&mu, &nu, 2.0).unwrap();
        assert!(plan.marginal_error(&mu, &nu) < 1e-12);
        assert!(dual.max_violation(&s) <= 1e-9);
        assert!((dual.value(&mu, &nu) - cost).abs() <= 1e-8);
    }
}
