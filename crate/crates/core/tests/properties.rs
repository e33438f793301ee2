mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tvdens::builders::grenander;
use tvdens::density::{probability_of, region_above, renormalize, tv_distance};
use tvdens::sim::draw;
use tvdens::{Density, Sample};

use common::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn tv_is_a_metric_on_step_densities(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q, s): (Density, Density, Density) =
            (random_pc(&mut r, 6).into(), random_pc(&mut r, 6).into(), random_pc(&mut r, 6).into());
        let pq = tv_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert_eq!(pq, tv_distance(&q, &p).unwrap());
        prop_assert!(tv_distance(&p, &p).unwrap() < 1e-15);
        let via = tv_distance(&p, &s).unwrap() + tv_distance(&s, &q).unwrap();
        prop_assert!(pq <= via + 1e-12);
    }

    #[test]
    fn tv_matches_exact_step_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (random_pc(&mut r, 8), random_pc(&mut r, 8));
        let oracle = 0.5 * step_l1((p.breaks(), p.levels()), (q.breaks(), q.levels()));
        let tv = tv_distance(&p.into(), &q.into()).unwrap();
        prop_assert!((tv - oracle).abs() < 1e-12, "{} vs {}", tv, oracle);
    }

    #[test]
    fn tv_is_the_mass_gap_on_the_upper_region(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q): (Density, Density) = (random_shape_pl(&mut r, 2, 3, true).into(), random_pc(&mut r, 5).into());
        let region = region_above(&p, &q).unwrap();
        let gap = probability_of(&q, &region) - probability_of(&p, &region);
        prop_assert!((gap - tv_distance(&p, &q).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn tv_of_linear_pairs_matches_quadrature(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (p, q) = (random_shape_pl(&mut r, 2, 4, false), random_shape_pl(&mut r, 2, 4, true));
        let (lo, hi) = (p.support().0.min(q.support().0), p.support().1.max(q.support().1));
        let mut breaks = p.knots().to_vec();
        breaks.extend_from_slice(q.knots());
        let (pd, qd): (Density, Density) = (p.into(), q.into());
        let oracle = 0.5 * l1_on(&|x| pd.eval(x), &|x| qd.eval(x), lo, hi, &breaks);
        prop_assert!((tv_distance(&pd, &qd).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn renormalized_functions_have_unit_mass(seed in any::<u64>(), w in 0.01f64..10.0) {
        let mut r = rng(seed);
        let f = tvdens::density::scale(&random_shape_pl(&mut r, 2, 3, true).into(), w);
        prop_assert!((renormalize(&f).unwrap().total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_preserves_l1(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = random_decreasing(&mut r, 2.0, 0.25, 10);
        let g = random_decreasing(&mut r, 2.0, 0.25, 10);
        let lhs = polyline_l1(&f, &g);
        let rhs = polyline_l1(&f.inverse().unwrap(), &g.inverse().unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-9, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn sampler_is_seeded_and_stays_in_support(seed in any::<u64>(), n in 1usize..300) {
        let mut r = rng(seed);
        let p: Density = random_log_concave(&mut r, 4).into();
        let a = draw(&p, n, seed).unwrap();
        let b = draw(&p, n, seed).unwrap();
        prop_assert_eq!(a.values(), b.values());
        let (lo, hi) = p.support();
        prop_assert!(a.values().iter().all(|x| *x >= lo && *x <= hi));
    }

    #[test]
    fn grenander_matches_the_majorant(xs in prop::collection::vec(1i64..40, 1..40)) {
        let sample = Sample::new(xs.iter().map(|&v| v as f64).collect()).unwrap();
        let g = grenander(&sample, 0.0).unwrap();
        let (breaks, levels) = lcm_oracle(&xs);
        prop_assert_eq!(g.breaks(), breaks.as_slice());
        prop_assert_eq!(g.levels(), levels.as_slice());
        prop_assert!(g.levels().windows(2).all(|w| w[1] < w[0]));
    }
}
