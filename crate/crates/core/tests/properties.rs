use apconform::expr::{BinOp, Func};
use apconform::fd;
use apconform::jet::JetMatrix;
use apconform::{Expr, Jet2};
use proptest::prelude::*;

const N: usize = 3;

fn jet() -> impl Strategy<Value = Jet2> {
    (
        -2.0..2.0f64,
        prop::collection::vec(-2.0..2.0f64, N),
        prop::collection::vec(-2.0..2.0f64, N * N),
    )
        .prop_map(|(v, g, h)| Jet2::from_parts(v, g, h))
}

fn close(a: &Jet2, b: &Jet2, tol: f64) -> bool {
    a.max_abs_diff(b) < tol
}

/// Smooth expressions over x1..x3 whose values stay moderate on [−1, 1]³.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..N).prop_map(Expr::Var),
        (0u32..3000).prop_map(|k| Expr::Num(f64::from(k) / 1000.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                BinOp::Add,
                Box::new(a),
                Box::new(b)
            )),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                BinOp::Sub,
                Box::new(a),
                Box::new(b)
            )),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                BinOp::Mul,
                Box::new(a),
                Box::new(b)
            )),
            // denominators bounded away from zero
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Binary(
                BinOp::Div,
                Box::new(a),
                Box::new(Expr::Binary(
                    BinOp::Add,
                    Box::new(Expr::Num(2.5)),
                    Box::new(Expr::call(Func::Sin, b)),
                )),
            )),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner
                .clone()
                .prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.clone().prop_map(Expr::negated),
            inner.prop_map(|a| Expr::Binary(BinOp::Pow, Box::new(a), Box::new(Expr::Num(2.0)))),
        ]
    })
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, N)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_axioms(a in jet(), b in jet(), c in jet()) {
        prop_assert!(close(&(&(&a + &b) + &c), &(&a + &(&b + &c)), 1e-12));
        prop_assert!(close(&(&a + &b), &(&b + &a), 1e-12));
        prop_assert!(close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
        prop_assert!(close(&(&a * &b), &(&b * &a), 1e-12));
        prop_assert!(close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
    }

    #[test]
    fn jets_match_finite_differences(e in smooth_expr(), p in point()) {
        let j = e.eval_jet(&p).unwrap();
        let est = fd::expr_derivatives(&e, &p, 1e-4).unwrap();
        prop_assert!(rel(j.value(), est.value) < 1e-12);
        for (x, y) in j.grad().iter().zip(&est.grad) {
            prop_assert!(rel(*x, *y) < 1e-4, "grad {} vs {} for {}", x, y, e);
        }
        for (x, y) in j.hess().iter().zip(&est.hess) {
            prop_assert!(rel(*x, *y) < 1e-4, "hess {} vs {} for {}", x, y, e);
        }
    }

    #[test]
    fn plain_and_jet_values_agree(e in smooth_expr(), p in point()) {
        let j = e.eval_jet(&p).unwrap();
        prop_assert!(rel(j.value(), e.eval_f64(&p)) < 1e-14);
    }

    #[test]
    fn inverse_times_matrix_is_identity(entries in prop::collection::vec(jet(), 9)) {
        // diagonally dominant in value so the inverse exists
        let entries: Vec<Jet2> = entries
            .into_iter()
            .enumerate()
            .map(|(k, j)| {
                if k % 4 == 0 {
                    &j + &Jet2::constant(8.0, N)
                } else {
                    j
                }
            })
            .collect();
        let m = JetMatrix::new(3, entries);
        let prod = m.inverse().unwrap().matmul(&m);
        let id = JetMatrix::identity(3, N);
        for (a, b) in prod.entries().iter().zip(id.entries()) {
            prop_assert!(a.max_abs_diff(b) < 1e-10);
        }
    }

    #[test]
    fn print_parse_round_trip(e in smooth_expr()) {
        let printed = e.to_string();
        let back = Expr::parse(&printed, N).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), printed);
    }
}
