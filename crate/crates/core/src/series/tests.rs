use super::*;
use crate::rational::int;
use proptest::prelude::*;

fn r(p: i64, q: i64) -> BigRational {
    BigRational::new(p.into(), q.into())
}

fn poly(cs: &[BigRational]) -> FunctionSpec {
    FunctionSpec::poly(cs)
}

fn ou(a: BigRational, sigma: BigRational, u0: BigRational, f: FunctionSpec) -> SdeProblem {
    SdeProblem::new(poly(&[int(0), -a]), poly(&[sigma]), f, Scalar::Exact(u0)).unwrap()
}

fn gbm(a: BigRational, sigma: BigRational, u0: BigRational, f: FunctionSpec) -> SdeProblem {
    SdeProblem::new(poly(&[int(0), a]), poly(&[int(0), sigma]), f, Scalar::Exact(u0)).unwrap()
}

fn exact(s: &TruncatedSeries) -> Vec<BigRational> {
    s.coeffs.iter().map(|c| c.as_exact().unwrap().clone()).collect()
}

/// Taylor coefficients of `c e^{λ t}`.
fn exp_taylor(c: &BigRational, lambda: &BigRational, order: usize) -> Vec<BigRational> {
    (0..=order).map(|k| c * num_traits::pow(lambda.clone(), k) / factorial_q(k)).collect()
}

#[test]
fn ou_mean_by_trees() {
    let (a, u0) = (r(3, 2), r(2, 5));
    let p = ou(a.clone(), r(1, 2), u0.clone(), FunctionSpec::poly_i64(&[0, 1]));
    assert_eq!(exact(&expand_by_trees(&p, 3).unwrap()), exp_taylor(&u0, &-a.clone(), 3));
    assert_eq!(exact(&expand_by_multiindices(&p, 3).unwrap()), exp_taylor(&u0, &-a.clone(), 3));
    assert_eq!(exact(&expand_by_operator(&p, 8).unwrap()), exp_taylor(&u0, &-a, 8));
}

#[test]
fn order_zero_is_f_at_u0() {
    let p = gbm(r(1, 3), r(2, 7), r(5, 4), FunctionSpec::poly_i64(&[1, 0, 3]));
    let f0 = int(1) + int(3) * r(25, 16);
    for m in [Method::Trees, Method::Multi, Method::Operator] {
        assert_eq!(exact(&expand(&p, 0, m).unwrap()), vec![f0.clone()], "{m}");
    }
}

#[test]
fn ou_second_moment() {
    let (a, s, u0) = (r(1, 2), r(3, 2), r(-1, 3));
    let p = ou(a.clone(), s.clone(), u0.clone(), FunctionSpec::poly_i64(&[0, 0, 1]));
    // u0² e^{-2at} + (σ²/2a)(1 - e^{-2at})
    let stat = &s * &s / (int(2) * &a);
    let mut want = exp_taylor(&(&u0 * &u0 - &stat), &(int(-2) * &a), 6);
    want[0] += &stat;
    assert_eq!(exact(&expand_by_operator(&p, 6).unwrap()), want);
    assert_eq!(exact(&expand_by_trees(&p, 4).unwrap()), want[..=4].to_vec());
}

#[test]
fn gbm_second_moment() {
    let (a, s, u0) = (r(1, 2), r(3, 10), r(7, 5));
    let p = gbm(a.clone(), s.clone(), u0.clone(), FunctionSpec::poly_i64(&[0, 0, 1]));
    let want = exp_taylor(&(&u0 * &u0), &(int(2) * &a + &s * &s), 4);
    assert_eq!(exact(&expand_by_multiindices(&p, 4).unwrap()), want);
    assert_eq!(exact(&expand_by_trees(&p, 4).unwrap()), want);
    assert_eq!(exact(&expand_by_operator(&p, 4).unwrap()), want);
}

#[test]
fn deterministic_case_matches_classical() {
    let p = SdeProblem::new(
        FunctionSpec::poly_i64(&[1, 2, -1]),
        FunctionSpec::poly_i64(&[0]),
        FunctionSpec::poly_i64(&[0, 1, 1]),
        Scalar::Exact(r(1, 3)),
    )
    .unwrap();
    let by_trees = expand_by_trees(&p, 4).unwrap();
    assert_eq!(by_trees, expand_by_operator(&p, 4).unwrap());
    assert_eq!(by_trees, expand_by_classical_trees(&p, 4).unwrap());
    let noisy = ou(int(1), int(1), int(1), FunctionSpec::poly_i64(&[0, 1]));
    assert_eq!(expand_by_classical_trees(&noisy, 2), Err(SeriesError::NotDeterministic));
}

#[test]
fn evaluate_examples() {
    let s = TruncatedSeries { order: 1, coeffs: vec![Scalar::Exact(int(1)), Scalar::Exact(int(-1))], mode: Mode::Exact };
    assert_eq!(evaluate_series(&s, &Scalar::Exact(int(0))), Scalar::Exact(int(1)));
    assert_eq!(evaluate_series(&s, &Scalar::Exact(r(1, 4))), Scalar::Exact(r(3, 4)));
    let zero = TruncatedSeries { order: 2, coeffs: vec![Scalar::Exact(int(0)); 3], mode: Mode::Exact };
    assert_eq!(evaluate_series(&zero, &Scalar::Float(0.7)), Scalar::Float(0.0));

    let p = ou(int(1), r(1, 2), int(1), FunctionSpec::poly_i64(&[0, 1]));
    let s = expand_by_operator(&p, 8).unwrap();
    let v = evaluate_series(&s, &Scalar::Exact(r(1, 10)));
    // alternating tail: 0 < S_8(t) - e^{-t} <= t^9/9!, plus rounding of the comparison
    let gap = v.to_f64() - (-0.1f64).exp();
    assert!(gap > 0.0 && gap <= 0.1f64.powi(9) / 362880.0 + 4.0 * f64::EPSILON, "{gap}");
}

#[test]
fn json_formats() {
    let text = r#"{"u0":"1","mode":"exact","alpha":{"kind":"poly","coeffs":["0","-1"]},"beta":{"kind":"poly","coeffs":["1/2"]},"f":{"kind":"poly","coeffs":["0","1"]}}"#;
    let p = SdeProblem::from_json(text).unwrap();
    assert_eq!(p, ou(int(1), r(1, 2), int(1), FunctionSpec::poly_i64(&[0, 1])));
    assert_eq!(SdeProblem::from_json(&p.to_json()).unwrap(), p);
    let s = expand_by_trees(&p, 3).unwrap();
    assert_eq!(s.to_json(), r#"{"order":3,"coeffs":{"0":"1","1":"-1","2":"1/2","3":"-1/6"},"mode":"exact"}"#);
    assert_eq!(TruncatedSeries::from_json(&s.to_json()).unwrap(), s);

    let bad = r#"{"u0":"1","mode":"exact","alpha":{"kind":"expscale","c":"1","lambda":"1"},"beta":{"kind":"poly","coeffs":["1"]},"f":{"kind":"poly","coeffs":["0","1"]}}"#;
    assert!(matches!(SdeProblem::from_json(bad), Err(SeriesError::Invalid(_))));
    assert!(SdeProblem::from_json(&bad.replace("exact", "float")).is_ok());
    assert!(matches!(SdeProblem::from_json("{}"), Err(SeriesError::Invalid(_))));
}

#[test]
fn float_mode_tracks_exact() {
    let e = gbm(r(1, 2), r(3, 10), int(1), FunctionSpec::poly_i64(&[0, 0, 1]));
    let f = SdeProblem { u0: Scalar::Float(1.0), mode: Mode::Float, ..e.clone() };
    for m in [Method::Trees, Method::Multi, Method::Operator] {
        let (se, sf) = (expand(&e, 4, m).unwrap(), expand(&f, 4, m).unwrap());
        assert_eq!(sf.mode, Mode::Float);
        for (x, y) in se.coeffs.iter().zip(&sf.coeffs) {
            assert!((x.to_f64() - y.to_f64()).abs() < 1e-12, "{m}");
        }
    }
}

#[test]
fn derivs_problems() {
    let p = SdeProblem::new(
        FunctionSpec::Derivs { values: vec![Number(int(1)), Number(int(2)), Number(int(0))] },
        FunctionSpec::poly_i64(&[1]),
        FunctionSpec::poly_i64(&[0, 0, 1]),
        Scalar::Exact(int(0)),
    )
    .unwrap();
    let t = expand_by_trees(&p, 1).unwrap();
    assert_eq!(t, expand_by_multiindices(&p, 1).unwrap());
    assert_eq!(t, expand_by_operator(&p, 1).unwrap());
    // two edges may put two pairs on one vertex, which needs a fourth derivative
    assert!(matches!(expand_by_trees(&p, 2), Err(SeriesError::Jet(JetError::DerivsTooShort { .. }))));
    assert!(matches!(expand_by_operator(&p, 2), Err(SeriesError::Jet(JetError::DerivsTooShort { .. }))));
}

#[test]
fn vertex_fertility_beyond_order() {
    // E(1 + t + W_t)^3; o(a,b#1,b#1) has two edges and a root of fertility three
    let p = SdeProblem::new(FunctionSpec::poly_i64(&[1]), FunctionSpec::poly_i64(&[1]), FunctionSpec::poly_i64(&[0, 0, 0, 1]), Scalar::Exact(int(1)))
        .unwrap();
    for order in 0..=4 {
        let want: Vec<Scalar> = [1, 6, 6, 1, 0][..=order].iter().map(|&c| Scalar::Exact(int(c))).collect();
        for method in [Method::Trees, Method::Multi, Method::Operator] {
            assert_eq!(expand(&p, order, method).unwrap().coeffs, want, "{method} at order {order}");
        }
    }
}

fn small_poly() -> impl Strategy<Value = FunctionSpec> {
    prop::collection::vec((-3i64..=3, 1i64..=3), 1..=4).prop_map(|cs| poly(&cs.iter().map(|&(p, q)| r(p, q)).collect::<Vec<_>>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn three_methods_agree(alpha in small_poly(), beta in small_poly(), f in small_poly(), u0 in (-3i64..=3, 1i64..=3), order in 0usize..=3) {
        let p = SdeProblem::new(alpha, beta, f, Scalar::Exact(r(u0.0, u0.1))).unwrap();
        let t = expand_by_trees(&p, order).unwrap();
        prop_assert_eq!(&t, &expand_by_multiindices(&p, order).unwrap());
        prop_assert_eq!(&t, &expand_by_operator(&p, order).unwrap());
    }
}
