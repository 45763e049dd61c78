use num::complex::Complex64 as C64;
use proptest::prelude::*;
use wkbscatter::novikov::{Coefficient, HbarPoly, NovikovMatrix, NovikovSeries};

fn c64() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

// Exponents on a quarter grid so that products collide and merge, plus a
// continuous part.
fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..20).prop_map(|k| k as f64 * 0.25), 0.0f64..5.0]
}

fn scalar_series(cutoff: Option<f64>) -> impl Strategy<Value = NovikovSeries> {
    prop::collection::vec((exponent(), c64()), 0..6).prop_map(move |ts| {
        NovikovSeries::from_terms(ts.into_iter().map(|(e, c)| (e, Coefficient::Scalar(c))).collect(), cutoff)
    })
}

fn hbar_series(cutoff: Option<f64>) -> impl Strategy<Value = NovikovSeries> {
    prop::collection::vec((exponent(), prop::collection::vec(c64(), 1..4)), 0..5).prop_map(move |ts| {
        NovikovSeries::from_terms(
            ts.into_iter().map(|(e, c)| (e, Coefficient::Hbar(HbarPoly::new(2, c)))).collect(),
            cutoff,
        )
    })
}

fn scale(a: &NovikovSeries) -> f64 {
    a.terms().iter().map(|(_, c)| c.eval(C64::new(1.0, 0.0)).norm()).fold(1.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn multiplication_is_associative(a in hbar_series(Some(6.0)), b in hbar_series(Some(6.0)), c in hbar_series(Some(6.0))) {
        let l = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let r = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert!(l.distance(&r) <= 1e-10 * scale(&a) * scale(&b) * scale(&c));
    }

    #[test]
    fn multiplication_is_commutative(a in hbar_series(None), b in hbar_series(None)) {
        let l = a.multiply(&b).unwrap();
        let r = b.multiply(&a).unwrap();
        prop_assert!(l.distance(&r) <= 1e-12 * scale(&a) * scale(&b));
    }

    #[test]
    fn distributive(a in scalar_series(Some(5.0)), b in scalar_series(Some(5.0)), c in scalar_series(Some(5.0))) {
        let l = a.multiply(&b.add(&c).unwrap()).unwrap();
        let r = a.multiply(&b).unwrap().add(&a.multiply(&c).unwrap()).unwrap();
        prop_assert!(l.distance(&r) <= 1e-10 * scale(&a) * (scale(&b) + scale(&c)));
    }

    #[test]
    fn valuation_laws(a in scalar_series(None), b in scalar_series(None)) {
        let s = a.add(&b).unwrap();
        prop_assert!(s.valuation() >= a.valuation().min(b.valuation()) - 1e-9);
        let p = a.multiply(&b).unwrap();
        if !a.is_zero() && !b.is_zero() {
            prop_assert!((p.valuation() - a.valuation() - b.valuation()).abs() <= 1e-8);
        } else {
            prop_assert!(p.is_zero());
        }
    }

    #[test]
    fn evaluation_is_a_ring_homomorphism(a in scalar_series(None), b in scalar_series(None), h in c64()) {
        let ea = a.evaluate_at(h);
        let eb = b.evaluate_at(h);
        let tol = 1e-12 * (1.0 + ea.norm()) * (1.0 + eb.norm()) * 36.0;
        prop_assert!((a.add(&b).unwrap().evaluate_at(h) - (ea + eb)).norm() <= tol);
        prop_assert!((a.multiply(&b).unwrap().evaluate_at(h) - ea * eb).norm() <= tol);
    }

    #[test]
    fn truncation_is_a_ring_homomorphism(a in hbar_series(None), b in hbar_series(None), w in 0.5f64..6.0) {
        let full = a.multiply(&b).unwrap().truncate(w);
        let cut = a.truncate(w).multiply(&b.truncate(w)).unwrap();
        prop_assert!(full.distance(&cut) <= 1e-12 * scale(&a) * scale(&b) * 30.0);
        prop_assert!(full.terms().iter().all(|(e, _)| *e < w));
        let sum = a.add(&b).unwrap().truncate(w);
        let sum_cut = a.truncate(w).add(&b.truncate(w)).unwrap();
        prop_assert!(sum.distance(&sum_cut) <= 1e-12 * (scale(&a) + scale(&b)));
    }

    #[test]
    fn matrix_products_associate(
        xs in prop::collection::vec((0usize..3, 0usize..3, scalar_series(Some(5.0))), 3..7)
    ) {
        let ms: Vec<NovikovMatrix> = xs
            .iter()
            .filter(|(i, j, _)| i != j)
            .map(|(i, j, x)| NovikovMatrix::elementary(3, *i, *j, x))
            .collect();
        prop_assume!(ms.len() >= 3);
        let l = ms[0].multiply(&ms[1]).unwrap().multiply(&ms[2]).unwrap();
        let r = ms[0].multiply(&ms[1].multiply(&ms[2]).unwrap()).unwrap();
        let bound: f64 = xs.iter().map(|(_, _, x)| 1.0 + scale(x)).product();
        prop_assert!(l.distance(&r) <= 1e-11 * bound);
    }

    #[test]
    fn specialization_respects_products(
        x in scalar_series(None), y in scalar_series(None), h in c64()
    ) {
        let a = NovikovMatrix::elementary(2, 0, 1, &x);
        let b = NovikovMatrix::elementary(2, 1, 0, &y);
        let ab = a.multiply(&b).unwrap().specialize(h);
        let prod = wkbscatter::novikov::complex_matmul(&a.specialize(h), &b.specialize(h));
        let scale = (1.0 + x.evaluate_at(h).norm()) * (1.0 + y.evaluate_at(h).norm());
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((ab[i][j] - prod[i][j]).norm() <= 1e-11 * scale * 36.0);
            }
        }
    }
}
