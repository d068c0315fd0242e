//! Property tests for the invariants that should survive arbitrary inputs.

use proptest::prelude::*;

use kaczmarz_lab::{
    classify_rate, problem_from_string, problem_to_string, project_hyperplane, Vector,
};

fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, len)
}

proptest! {
    // a hyperplane projection lands on the hyperplane and never moves away
    // from any point already on it (Fejer monotonicity)
    #[test]
    fn projection_is_exact_and_nonexpansive(
        x in finite_vec(5),
        row in finite_vec(5),
        rhs in -1e3..1e3f64,
    ) {
        let row_v = Vector::new(row).unwrap();
        prop_assume!(row_v.norm() > 1e-6);
        let x_v = Vector::new(x).unwrap();
        let p = project_hyperplane(&row_v, rhs, &x_v).unwrap();
        let residual = p.dot(&row_v) - rhs;
        prop_assert!(residual.abs() <= 1e-6 * row_v.norm() * (1.0 + p.norm()));
        // the projection is the closest hyperplane point: moving to any
        // other hyperplane point is at least as far from x
        let q = project_hyperplane(&row_v, rhs, &Vector::zeros(5).unwrap()).unwrap();
        prop_assert!(p.sub(&x_v).norm() <= q.sub(&x_v).norm() + 1e-9);
    }

    // the text format is a bijection on what it can produce
    #[test]
    fn kzp_round_trip_is_bitwise(seed in 0u64..500, m in 2usize..7, n in 2usize..5) {
        let rank = n.min(m);
        let noise = if m > rank { 0.3 } else { 0.0 };
        let p = kaczmarz_lab::generate(m, n, rank, noise, 8.0, seed).unwrap();
        let text = problem_to_string(&p);
        let back = problem_from_string(&text).unwrap();
        prop_assert_eq!(problem_to_string(&back), text);
    }

    // scaling an error sequence never changes its verdict
    #[test]
    fn classification_is_scale_invariant(
        mu in 0.3..0.9f64,
        scale in 1e-3..1e3f64,
    ) {
        let eps: Vec<f64> = (0..40).map(|k| mu.powi(k)).collect();
        let scaled: Vec<f64> = eps.iter().map(|e| e * scale).collect();
        let c1 = classify_rate(&eps, 5e-2).unwrap();
        let c2 = classify_rate(&scaled, 5e-2).unwrap();
        prop_assert_eq!(
            std::mem::discriminant(&c1.verdict),
            std::mem::discriminant(&c2.verdict)
        );
    }

    // truncating a problem file anywhere must fail cleanly, never panic
    #[test]
    fn truncated_kzp_never_panics(cut in 0usize..400) {
        let p = kaczmarz_lab::generate(3, 2, 2, 0.0, 5.0, 11).unwrap();
        let text = problem_to_string(&p);
        prop_assume!(cut < text.len());
        let _ = problem_from_string(&text[..cut]);
    }
}
