use leafquant::algebra::{decompose_polynomial, poisson_bracket, BumpCover, PolynomialObservable};
use leafquant::linalg::{DenseMatrix, C64};
use leafquant::quantize::{hermiticity_defect, quantize_affine, quantize_polynomial, FiberGrid, Ordering};
use leafquant::scenario::{read_fqu, write_fqu};
use leafquant::{Dims, Expr, VariableBinding};
use proptest::prelude::*;

fn expr_tree() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        Just(Expr::var("x")),
        (-2.0..2.0f64).prop_map(Expr::constant),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.tanh()),
            inner.clone().prop_map(|a| a.powi(3)),
            inner.clone().prop_map(|a| a.div(&a.powi(2).add(&Expr::one()))),
            inner.prop_map(|a| a.mul(&Expr::constant(0.5)).exp()),
        ]
    })
}

// coefficient field on (s1, q1): c0 + c1 sin(q1 + s1) + c2 q1^2
fn field() -> impl Strategy<Value = Expr> {
    (-1.0..1.0f64, -1.0..1.0f64, -0.3..0.3f64).prop_map(|(c0, c1, c2)| {
        let q = Expr::var("q1");
        Expr::constant(c0)
            .add(&Expr::constant(c1).mul(&q.add(&Expr::var("s1")).sin()))
            .add(&Expr::constant(c2).mul(&q.powi(2)))
    })
}

fn affine() -> impl Strategy<Value = PolynomialObservable> {
    (field(), field()).prop_map(|(a, b)| PolynomialObservable::affine(&[a], b))
}

fn polynomial(max_degree: usize) -> impl Strategy<Value = PolynomialObservable> {
    prop::collection::vec(field(), 1..=max_degree + 1).prop_map(|coeffs| {
        coeffs
            .into_iter()
            .enumerate()
            .map(|(d, c)| PolynomialObservable::monomial(1, &vec![0; d], c).unwrap())
            .fold(PolynomialObservable::zero(1), |acc, m| acc.add(&m).unwrap())
    })
}

fn at(s: f64, q: f64) -> VariableBinding {
    Dims::new(1, 1).binding(0.0, &[s], &[q])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_central_difference(e in expr_tree(), x in -1.5..1.5f64) {
        let h = 1e-5;
        let f = |v: f64| e.eval(&VariableBinding::new().with("x", v));
        let (Ok(lo), Ok(mid), Ok(hi)) = (f(x - h), f(x), f(x + h)) else { return Ok(()) };
        prop_assume!(mid.abs() < 1e3 && lo.is_finite() && hi.is_finite());
        let exact = e.diff("x").eval(&VariableBinding::new().with("x", x)).unwrap();
        prop_assume!(exact.abs() < 1e3);
        let fd = (hi - lo) / (2.0 * h);
        prop_assert!((exact - fd).abs() <= 1e-4 * (1.0 + exact.abs()), "{exact} vs {fd} for {e}");
    }

    #[test]
    fn bracket_is_antisymmetric(f in affine(), g in affine(), s in -1.0..1.0f64, q in -2.0..2.0f64, p in -2.0..2.0f64) {
        let b = at(s, q);
        let fg = poisson_bracket(&f, &g).unwrap().eval(&b, &[p]).unwrap();
        let gf = poisson_bracket(&g, &f).unwrap().eval(&b, &[p]).unwrap();
        prop_assert!((fg + gf).abs() < 1e-12);
    }

    #[test]
    fn bracket_satisfies_jacobi(
        f in polynomial(2), g in polynomial(2), h in polynomial(2),
        s in -1.0..1.0f64, q in -2.0..2.0f64, p in -2.0..2.0f64,
    ) {
        let br = |a: &PolynomialObservable, b: &PolynomialObservable| poisson_bracket(a, b).unwrap();
        let b = at(s, q);
        let sum = [br(&f, &br(&g, &h)), br(&g, &br(&h, &f)), br(&h, &br(&f, &g))]
            .iter()
            .map(|x| x.eval(&b, &[p]).unwrap())
            .fold(0.0, |acc, v| acc + v);
        prop_assert!(sum.abs() < 1e-9, "Jacobi sum {sum}");
    }

    #[test]
    fn affine_quantization_is_hermitian(f in affine(), s in -1.0..1.0f64, points in prop::sample::select(vec![16usize, 33, 64])) {
        let grid = FiberGrid::new(1, points, 4.0).unwrap();
        let op = quantize_affine(&f, &grid, 0.0, &[s]).unwrap();
        prop_assert!(hermiticity_defect(&op) <= 1e-12);
    }

    #[test]
    fn symmetric_polynomial_quantization_is_hermitian(f in polynomial(3), charts in 1usize..=3) {
        let grid = FiberGrid::new(1, 48, 5.0).unwrap();
        let cover = BumpCover::uniform_1d(5.0, charts);
        let op = quantize_polynomial(&f, &cover, &grid, 0.0, &[0.3], Ordering::Symmetric).unwrap();
        prop_assert!(hermiticity_defect(&op) <= 1e-12);
    }

    #[test]
    fn decomposition_reconstructs(f in polynomial(4), charts in 1usize..=3, q in -4.9..4.9f64, p in -2.0..2.0f64) {
        let cover = BumpCover::uniform_1d(5.0, charts);
        let fac = decompose_polynomial(&f, &cover).unwrap();
        let b = at(0.2, q);
        let want = f.eval(&b, &[p]).unwrap();
        let got = fac.eval(&b, &[p]).unwrap();
        prop_assert!((want - got).abs() <= 1e-12 * want.abs().max(1.0), "{want} vs {got}");
    }

    #[test]
    fn fqu_round_trips(rows in 1usize..6, cols in 1usize..6, seed in prop::collection::vec(any::<f64>(), 72)) {
        let m = DenseMatrix::from_fn(rows, cols, |i, j| {
            let k = 2 * (i * cols + j);
            C64::new(seed[k], seed[k + 1])
        });
        let mut buf = Vec::new();
        write_fqu(&mut buf, &m).unwrap();
        let back = read_fqu(&mut buf.as_slice()).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
