use std::collections::HashSet;

use num::complex::Complex64 as C64;
use proptest::prelude::*;
use wkbscatter::algfun::{airy, bnr, weber, SpectralData};
use wkbscatter::graph::{build_graph, check_tameness, window_radius};
use wkbscatter::tracer::{detect_collisions, requadrature, trace_initial, StokesCurve, TraceConfig, TOL_IM};

fn curves(s: &SpectralData, cap: f64) -> Vec<StokesCurve> {
    let w = window_radius(s);
    trace_initial(s, &TraceConfig::new(cap, w)).unwrap()
}

// phases away from the Stokes segments of z² − 1 (arg ℏ ∈ πℤ)
fn weber_phase() -> impl Strategy<Value = f64> {
    (0.15f64..std::f64::consts::PI - 0.15, any::<bool>()).prop_map(|(t, neg)| if neg { -t } else { t })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn traced_curves_pass_requadrature(theta in weber_phase(), which in 0usize..3) {
        let h = C64::from_polar(1.0, theta);
        let s = match which {
            0 => airy(h),
            1 => weber(h),
            _ => bnr(h),
        };
        for c in curves(&s, 5.0) {
            let (im, rel) = requadrature(&s, &c).unwrap();
            prop_assert!(im <= TOL_IM, "Im drift {im}");
            prop_assert!(rel <= 1e-7, "mass drift {rel}");
        }
    }

    #[test]
    fn airy_rays_rotate_with_hbar(theta in -3.0f64..3.0, m in 0.5f64..5.0) {
        let base = airy(C64::new(1.0, 0.0));
        let turned = airy(C64::from_polar(1.0, theta));
        let rot = C64::from_polar(1.0, 2.0 * theta / 3.0);
        let want: Vec<C64> = curves(&base, 6.0).iter().map(|c| rot * c.point_at_mass(&base, m).unwrap().z).collect();
        let got: Vec<C64> = curves(&turned, 6.0).iter().map(|c| c.point_at_mass(&turned, m).unwrap().z).collect();
        prop_assert_eq!(got.len(), 3);
        for g in &got {
            let d = want.iter().map(|w| (w - g).norm()).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 1e-6, "no rotated partner for {g}: {d}");
        }
    }

    #[test]
    fn half_edges_partition_into_boundaries(theta in weber_phase(), which in 0usize..3) {
        let h = C64::from_polar(1.0, theta);
        let s = match which {
            0 => airy(h),
            1 => weber(h),
            _ => bnr(h),
        };
        let w = window_radius(&s);
        let cs = trace_initial(&s, &TraceConfig::new(1e3, w)).unwrap();
        let cols = detect_collisions(&s, &cs, 1e-9);
        let g = build_graph(&s, &cs, &cols, w).unwrap();
        let mut seen = HashSet::new();
        let cycles = g.faces.iter().flat_map(|f| std::iter::once(&f.boundary).chain(f.holes.iter()));
        for cyc in cycles.chain(std::iter::once(&g.outer)) {
            for (k, &he) in cyc.iter().enumerate() {
                prop_assert!(seen.insert(he), "half-edge {he} used twice");
                let next = cyc[(k + 1) % cyc.len()];
                prop_assert_eq!(g.half_edge_target(he), g.half_edge_origin(next));
            }
        }
        prop_assert_eq!(seen.len(), 2 * g.edges.len());
    }

    #[test]
    fn tameness_survives_dropping_curves(theta in weber_phase(), mask in prop::collection::vec(any::<bool>(), 8)) {
        let s = bnr(C64::from_polar(1.0, theta));
        let cs = curves(&s, 1e3);
        let full = check_tameness(&s, &cs, &detect_collisions(&s, &cs, 1e-9));
        prop_assume!(full.tame);
        let sub: Vec<StokesCurve> = cs.iter().zip(mask.iter().cycle()).filter(|(_, k)| **k).map(|(c, _)| c.clone()).collect();
        let cols = detect_collisions(&s, &sub, 1e-9);
        prop_assert!(check_tameness(&s, &sub, &cols).tame);
    }
}
