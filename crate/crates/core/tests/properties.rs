use proptest::prelude::*;

use subreg::criteria::{
    hierarchy_checks, margin_verdict, EdgeState, Evaluation, InstanceHypotheses, QuantityKey,
    Verdict,
};
use subreg::dual_slopes::{coderivative, DualVectorSet, SubdiffVariant};
use subreg::mappings::{MapVariant, Phi, SetValuedMap, SmoothFn};
use subreg::oracle::{exhaustive_slope, primal_mismatches, random_sampled_instance, QuantityId};
use subreg::primal_slopes::{Family, StrictVariant};
use subreg::spaces::{rho_dist, ProductPoint, ProductSpace};
use subreg::{Hypotheses, Problem, Sampling};

fn poly_problem(c1: f64, c2: f64, c3: f64, q: f64) -> Problem {
    let map = SetValuedMap::new(
        ProductSpace::real_plane(),
        MapVariant::Smooth {
            params: SmoothFn::Polynomial {
                coeffs: vec![0.0, c1, c2, c3],
            },
        },
        ProductPoint::scalar(0.0, 0.0),
    )
    .unwrap();
    let s = Sampling {
        radius: 0.5,
        resolution: 61,
        ..Sampling::default()
    };
    Problem::new(
        map,
        Phi::Power { q },
        s,
        Hypotheses {
            convex: false,
            closed_graph: true,
        },
    )
    .unwrap()
}

fn point() -> impl Strategy<Value = ProductPoint> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| ProductPoint::scalar(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_metric_axioms(p in point(), q in point(), r in point(), rho in 0.01..4.0f64, k in 1.0..3.0f64) {
        let s = ProductSpace::real_plane();
        let d = |a: &ProductPoint, b: &ProductPoint, t: f64| rho_dist(&s, a, b, t).unwrap();
        prop_assert_eq!(d(&p, &q, rho), d(&q, &p, rho));
        prop_assert!(d(&p, &r, rho) <= d(&p, &q, rho) + d(&q, &r, rho) + 1e-12);
        prop_assert!(d(&p, &q, rho) <= d(&p, &q, k * rho));
    }

    #[test]
    fn margin_verdict_is_monotone(v in -2.0..4.0f64, w in 0.0..2.0f64, gamma in 0.01..3.0f64) {
        let rank = |x: Verdict| match x { Verdict::Fails => 0, Verdict::Inconclusive => 1, Verdict::Holds => 2 };
        prop_assert!(rank(margin_verdict(v, gamma)) <= rank(margin_verdict(v + w, gamma)));
    }

    #[test]
    fn coderivative_is_positively_homogeneous(x in -1.0..1.0f64, y in -3.0..3.0f64, t in 0.1..10.0f64) {
        let map = SetValuedMap::new(
            ProductSpace::real_plane(),
            MapVariant::Smooth { params: SmoothFn::OneMinusCos },
            ProductPoint::scalar(0.0, 0.0),
        ).unwrap();
        let p = ProductPoint::scalar(x, 1.0 - x.cos());
        let a = coderivative(&map, &p, &DualVectorSet::singleton(vec![y])).unwrap();
        let b = coderivative(&map, &p, &DualVectorSet::singleton(vec![t * y])).unwrap();
        prop_assert!((b.generators[0][0] - t * a.generators[0][0]).abs() <= 1e-12 * (1.0 + b.generators[0][0].abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn primal_estimators_equal_oracle(seed in any::<u64>(), index in 0u64..1000) {
        let p = random_sampled_instance(seed, index, 30);
        let bad = primal_mismatches(&p).unwrap();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn oracle_ignores_sample_order(seed in any::<u64>(), rot in 0usize..50) {
        let p = random_sampled_instance(seed, 0, 30);
        let MapVariant::Sampled { samples } = &p.map.variant else { unreachable!() };
        let mut shuffled = samples.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.swap(0, n - 1);
        let q = Problem {
            map: SetValuedMap::new(p.map.spaces, MapVariant::Sampled { samples: shuffled }, p.map.reference.clone()).unwrap(),
            ..p.clone()
        };
        let last = p.schedule().steps - 1;
        for id in [
            QuantityId::Modulus { step: last },
            QuantityId::Growth { step: last },
            QuantityId::Strict { family: Family::G, variant: StrictVariant::Uniform, step: last },
            QuantityId::Strict { family: Family::Phi, variant: StrictVariant::Plain, step: last },
        ] {
            prop_assert_eq!(exhaustive_slope(id, &p).unwrap(), exhaustive_slope(id, &q).unwrap());
        }
    }

    #[test]
    fn modulus_never_exceeds_uniform_slope(seed in any::<u64>(), index in 0u64..1000) {
        let p = random_sampled_instance(seed, index, 50);
        let ev = Evaluation::primal_only(&p).unwrap();
        let m = ev.get(QuantityKey::Modulus).unwrap().value;
        for fam in [Family::G, Family::Phi] {
            let u = ev.get(QuantityKey::Primal(fam, StrictVariant::Uniform)).unwrap().value;
            prop_assert!(m <= u + 1e-2 * u.max(1.0), "{} > {}", m, u);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Exact orderings that hold at every step, for any smooth map.
    #[test]
    fn slope_orderings_on_polynomials(c1 in -1.5..1.5f64, c2 in -2.0..2.0f64, c3 in -2.0..2.0f64, q in prop::sample::select(vec![0.5, 0.75, 1.0])) {
        let p = poly_problem(c1, c2, c3, q);
        let ev = Evaluation::new(&p).unwrap();
        let h = InstanceHypotheses::of(&ev, None);
        for c in hierarchy_checks(&ev, &h) {
            if c.id.contains("per step") || c.id.contains("per point") || c.id.starts_with("strict <= modified") {
                prop_assert!(c.status != EdgeState::Violated, "{:?}", c);
            }
        }
        let t = |v| ev.estimate(QuantityKey::Dual(Family::Phi, v)).unwrap().trajectory.iter().map(|s| s.value).collect::<Vec<_>>();
        for ((a, b), m) in t(SubdiffVariant::Approximate).iter().zip(t(SubdiffVariant::Plain)).zip(t(SubdiffVariant::Modified)) {
            prop_assert!(*a <= b && b <= m);
        }
    }
}
