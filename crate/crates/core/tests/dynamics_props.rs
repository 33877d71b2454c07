use coarse_ricci::curvature::curvature_report;
use coarse_ricci::dynamics::{convergence_trace, invariant_measure, lifted_rate_check, uniqueness_check};
use coarse_ricci::measure::DiscreteMeasure;
use coarse_ricci::sampling::{self, random_euclidean_space, random_measure, random_mixing_kernel};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn positive_curvature_gives_one_fixed_point(seed in any::<u64>()) {
        let mut rng = sampling::rng(seed);
        let n = rng.random_range(2..=6);
        let space = random_euclidean_space(&mut rng, n, 2);
        let kernel = random_mixing_kernel(&mut rng, &space, 0.4);
        let k = curvature_report(&kernel, 1.0).unwrap();
        prop_assume!(k.kappa_inf > 0.0);
        let report = uniqueness_check(&kernel, 1.0, 1e-10, 100_000, 5, seed).unwrap();
        prop_assert!(report.unique(), "{}", report.max_pairwise);
    }

    #[test]
    fn traces_stay_under_the_envelope(seed in any::<u64>(), p in prop::sample::select(vec![1.0, 2.0])) {
        let mut rng = sampling::rng(seed);
        let n = rng.random_range(2..=5);
        let space = random_euclidean_space(&mut rng, n, 2);
        let kernel = random_mixing_kernel(&mut rng, &space, 0.4);
        let k = curvature_report(&kernel, p).unwrap();
        prop_assume!(k.kappa_inf > 0.0);
        let nu = invariant_measure(&kernel, p, 1e-13, 100_000).unwrap();
        let mu0 = random_measure(&mut rng, &space);
        let trace = convergence_trace(&kernel, &mu0, &nu, p, k.kappa_inf, 20).unwrap();
        prop_assert!(trace.envelope_holds(), "{:?}", trace.first_violation());
        let lifted = lifted_rate_check(&kernel, &nu, p, k.kappa_inf, 20).unwrap();
        prop_assert!(lifted.envelope_holds(), "{:?}", lifted.first_violation());
        // ratio of a p-mean against the sup, both over nu
        let floor = nu.weights().iter().cloned().fold(f64::INFINITY, f64::min).powf(1.0 / p);
        for r in lifted.steps.iter().filter_map(|s| s.ratio) {
            prop_assert!(r <= 1.0 + 1e-9);
            prop_assert!(r >= floor - 1e-9, "{r} < {floor}");
        }
    }
}

#[test]
fn dirac_start_converges_geometrically() {
    let mut rng = sampling::rng(2);
    let space = random_euclidean_space(&mut rng, 5, 2);
    let kernel = random_mixing_kernel(&mut rng, &space, 0.5);
    let k = curvature_report(&kernel, 1.0).unwrap();
    assert!(k.kappa_inf > 0.0);
    let nu = invariant_measure(&kernel, 1.0, 1e-13, 100_000).unwrap();
    let trace = convergence_trace(&kernel, &DiscreteMeasure::dirac(space, 0), &nu, 1.0, k.kappa_inf, 30).unwrap();
    assert!(trace.envelope_holds());
    assert!(trace.steps.last().unwrap().value < 1e-3 * trace.steps[0].value.max(1e-12) + 1e-12);
}

