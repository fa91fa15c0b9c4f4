use crowdship_core::geometry::{
    bundle_detour, corridor_tasks, detour_increment, distance, initial_detour, insertion_detour,
};
use crowdship_core::probability::{
    acceptance_probability, expected_savings, lambert_w0, lambert_w_of_exp, optimal_compensation, price_offer,
    reduced_cost, savings_bound,
};
use crowdship_core::{BehaviorCoefficients, Bundle, DepotSpec, DriverSpec, Instance, Point, PredictorVector, TaskSpec};
use proptest::prelude::*;

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Brute force `max_C P(C)(C̄ − C)` over `[0, C̄]`.
fn grid_max(b: &BehaviorCoefficients, x: &PredictorVector, cbar: f64, step: f64) -> f64 {
    let n = (cbar / step).ceil() as usize;
    (0..=n)
        .map(|i| (i as f64 * step).min(cbar))
        .map(|c| expected_savings(acceptance_probability(b, x, c), cbar, c))
        .fold(0.0, f64::max)
}

fn coefficients() -> impl Strategy<Value = BehaviorCoefficients> {
    (-6.0..-3.0f64, -3.0..-1.0f64, -4.0..-2.0f64, 1.0..3.0f64).prop_map(|(a, b1, b2, g)| BehaviorCoefficients::new(a, b1, b2, g))
}

fn predictors() -> impl Strategy<Value = (PredictorVector, f64)> {
    (0.0..5.0f64, 1..=7u32).prop_map(|(d, k)| (PredictorVector::new(d, k as f64), 4.95 * k as f64))
}

#[test]
fn w0_residuals_over_decades() {
    for k in -8..=8 {
        let x = 10f64.powi(k);
        let w = lambert_w0(x).unwrap();
        assert!(w >= 0.0);
        assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0), "x = {x}");
    }
    assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    let omega = bisect(|w| w * w.exp() - 1.0, 0.0, 1.0);
    assert!((lambert_w0(1.0).unwrap() - omega).abs() < 1e-12);
    assert!(lambert_w0(-1e-3).is_err());
}

#[test]
fn w_of_exp_reference_values() {
    assert!((lambert_w_of_exp(1.0) - 1.0).abs() < 1e-15);
    assert!((lambert_w_of_exp(0.0) - lambert_w0(1.0).unwrap()).abs() < 1e-15);
    let z = 1000.0;
    let w = lambert_w_of_exp(z);
    let oracle = bisect(|w| w + w.ln() - z, 1.0, z);
    assert!((w + w.ln() - z).abs() <= 1e-9);
    assert!((w - oracle).abs() <= 1e-9);
    assert!(lambert_w_of_exp(1e6).is_finite());
}

#[test]
fn class_one_half_probability() {
    let b = BehaviorCoefficients::class(1).unwrap();
    let x = PredictorVector::new(0.0, 1.0);
    assert!((acceptance_probability(&b, &x, 3.6) - 0.5).abs() < 1e-12);
    let p = acceptance_probability(&b, &x, 10.0);
    assert!((p - 1.0 / (1.0 + (-16.0f64).exp())).abs() < 1e-15);
    let c3 = BehaviorCoefficients::class(3).unwrap();
    assert!(acceptance_probability(&c3, &x, 4.0) < acceptance_probability(&b, &x, 4.0));
}

#[test]
fn expected_savings_arithmetic() {
    assert_eq!(expected_savings(0.0, 7.0, 3.0), 0.0);
    assert_eq!(expected_savings(1.0, 10.0, 4.0), 6.0);
    assert!((expected_savings(0.5, 4.95, 3.6) - 0.675).abs() < 1e-15);
}

#[test]
fn class_two_reduced_cost_against_grid() {
    let b = BehaviorCoefficients::class(2).unwrap();
    let x = PredictorVector::new(2.0, 3.0);
    let rc = reduced_cost(&b, &x, 14.85, 1.0, 0.5);
    assert!((rc - (grid_max(&b, &x, 14.85, 1e-4) - 1.5)).abs() < 1e-3);
}

#[test]
fn class_one_single_task_against_grid() {
    let b = BehaviorCoefficients::class(1).unwrap();
    let x = PredictorVector::new(1.0, 1.0);
    let best = price_offer(&b, &x, 4.95).map_or(0.0, |v| v.expected_savings);
    assert!((best - grid_max(&b, &x, 4.95, 1e-4)).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn w_of_exp_solves_its_equation(z in 1.0..1e6f64) {
        let w = lambert_w_of_exp(z);
        prop_assert!(w > 0.0);
        prop_assert!((w + w.ln() - z).abs() <= 1e-10 * z.max(1.0));
    }

    #[test]
    fn w_of_exp_increasing(z in -50.0..1e5f64, dz in 1e-6..10.0f64) {
        prop_assert!(lambert_w_of_exp(z + dz) > lambert_w_of_exp(z));
    }

    #[test]
    fn acceptance_monotone(b in coefficients(), (x, _) in predictors(), c1 in 0.0..40.0f64, dc in 1e-3..10.0f64, dd in 1e-3..3.0f64) {
        // outside this range the logistic is 0 or 1 to machine precision
        prop_assume!(b.utility(&x, c1 + dc).abs() < 30.0 && b.utility(&x, c1).abs() < 30.0);
        let p1 = acceptance_probability(&b, &x, c1);
        prop_assert!(p1 > 0.0 && p1 < 1.0);
        prop_assert!(acceptance_probability(&b, &x, c1 + dc) > p1);
        let farther = PredictorVector::new(x.detour + dd, x.bundle_size);
        prop_assert!(acceptance_probability(&b, &farther, c1) < p1);
        let bigger = PredictorVector::new(x.detour, x.bundle_size + 1.0);
        prop_assert!(acceptance_probability(&b, &bigger, c1) < p1);
    }

    #[test]
    fn first_order_condition(b in coefficients(), (x, cbar) in predictors()) {
        let c = optimal_compensation(&b, &x, cbar).unwrap();
        let g = b.compensation_coeff;
        let lhs = g * (cbar - c) - 1.0;
        let rhs = b.utility(&x, c).exp();
        prop_assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0));
    }

    #[test]
    fn compensation_increasing_in_outsource_total(b in coefficients(), (x, cbar) in predictors(), extra in 1e-3..10.0f64) {
        let c1 = optimal_compensation(&b, &x, cbar).unwrap();
        let c2 = optimal_compensation(&b, &x, cbar + extra).unwrap();
        prop_assert!(c2 > c1);
    }

    #[test]
    fn locally_optimal(b in coefficients(), (x, cbar) in predictors()) {
        let c = optimal_compensation(&b, &x, cbar).unwrap();
        let at = |c: f64| expected_savings(acceptance_probability(&b, &x, c), cbar, c);
        prop_assert!(at(c) >= at(c + 1e-3));
        prop_assert!(at(c) >= at(c - 1e-3));
    }

    #[test]
    fn closed_form_matches_direct(b in coefficients(), (x, cbar) in predictors(), pi in 0.0..20.0f64, mu in 0.0..5.0f64) {
        let c = optimal_compensation(&b, &x, cbar).unwrap();
        let direct = acceptance_probability(&b, &x, c) * (cbar - c) - pi - mu;
        prop_assert!((reduced_cost(&b, &x, cbar, pi, mu) - direct).abs() <= 1e-9);
    }

    #[test]
    fn grid_never_beats_closed_form(b in coefficients(), (x, cbar) in predictors()) {
        let bound = savings_bound(&b, &x, cbar);
        prop_assert!(grid_max(&b, &x, cbar, 1e-2) <= bound + 1e-12);
    }
}

fn point() -> impl Strategy<Value = Point> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn driver_at(s: Point, e: Point) -> DriverSpec {
    DriverSpec::new(0, s, e, 1e9, BehaviorCoefficients::class(1).unwrap())
}

fn scatter(tasks: &[Point], depot: Point, driver: DriverSpec) -> Instance {
    let specs = tasks.iter().enumerate().map(|(i, &p)| TaskSpec::new(i as u32, p, 1.0, 4.95)).collect();
    let depots = vec![DepotSpec::new(0, depot, 0..tasks.len() as u32)];
    Instance::new("scatter", None, specs, depots, vec![driver]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn increments_non_negative(a in point(), b in point(), c in point()) {
        prop_assert!(insertion_detour(a, b, c) >= 0.0);
        prop_assert!(detour_increment(a, b, &driver_at(a, c)) >= 0.0);
    }

    #[test]
    fn detour_telescopes(s in point(), e in point(), depot in point(), tasks in prop::collection::vec(point(), 1..8)) {
        let w = driver_at(s, e);
        let inst = scatter(&tasks, depot, w.clone());
        let bundle = Bundle::new(0, (0..tasks.len() as u32).collect());
        let mut sum = initial_detour(&w, &inst.depots()[0]);
        let mut last = depot;
        for &p in &tasks {
            sum += detour_increment(last, p, &w);
            last = p;
        }
        let direct = bundle_detour(&inst, &w, &bundle).unwrap();
        // increments are clamped at zero only when the triangle is degenerate
        prop_assert!((direct - sum).abs() <= 1e-12 * (1.0 + distance(s, e) + sum));
    }

    #[test]
    fn corridor_monotone_in_theta(s in point(), e in point(), tasks in prop::collection::vec(point(), 1..30), t1 in 1.0..180.0f64, t2 in 1.0..180.0f64) {
        prop_assume!(distance(s, e) > 1e-6);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let inst = scatter(&tasks, s, driver_at(s, e));
        let w = &inst.drivers()[0];
        let small = corridor_tasks(&inst, w, lo).unwrap();
        let large = corridor_tasks(&inst, w, hi).unwrap();
        prop_assert!(small.is_subset(&large));
        prop_assert_eq!(corridor_tasks(&inst, w, 180.0).unwrap().len(), tasks.len());
    }
}
