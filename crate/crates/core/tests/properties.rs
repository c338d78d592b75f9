use std::sync::OnceLock;

use nalgebra::Complex;
use proptest::prelude::*;
use rank1_thermo::geometry::{
    integrate_geodesic, octagon, phase_distance, CurvatureSignal, SurfaceModel, UnitTangentState,
    WarpProfile,
};
use rank1_thermo::jacobi::{phi_u, unstable_riccati, RiccatiOptions, SignalHistory};
use rank1_thermo::lyapunov::{closed_orbit_exponent, SCHWARZ_SLACK};
use rank1_thermo::orbits::{build_lambda_ell, mixed_flat_band_library, OrbitLibrary};
use rank1_thermo::symbolic::{discrete_pressure, Sft, SuspensionModel};
use rank1_thermo::thermo::{
    biconjugate, legendre_conjugate, sample_pressure_curve, AlphaGrid, FnSource,
};

fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 64,
        ..ProptestConfig::default()
    }
}

fn sft_from_bits(bits: &[bool]) -> Sft {
    // the 3-cycle keeps every symbol alive
    let m = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| u8::from(bits[3 * i + j] || j == (i + 1) % 3))
                .collect()
        })
        .collect();
    Sft::new(m).expect("cycle keeps the shift valid")
}

fn mixed_library() -> &'static OrbitLibrary {
    static LIB: OnceLock<OrbitLibrary> = OnceLock::new();
    LIB.get_or_init(|| {
        let band = SurfaceModel::collar(
            WarpProfile::FlatBand {
                radius: 1.0,
                half_width: 0.5,
                a: 1.0,
            },
            3.0,
        )
        .unwrap();
        mixed_flat_band_library(&band, 1e-3).unwrap()
    })
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn phi_u_nonpositive(u in 0.0f64..50.0, k in -25.0f64..=0.0) {
        prop_assert!(phi_u(u, k) <= 0.0);
    }

    #[test]
    fn unstable_solution_bounded(period in 1.0f64..6.0, frac in 0.1f64..0.9, k in 0.5f64..2.0, off in 0.0f64..6.0) {
        let h = SignalHistory { signal: CurvatureSignal::plateau_cycle(period, frac, k), offset: off };
        // contraction is governed by the mean curvature frac * k
        let opts = RiccatiOptions { burn_in: Some(60.0 / (frac * k)), ..RiccatiOptions::default() };
        let tr = unstable_riccati(&h, (0.0, 10.0), 1e-2, &opts).unwrap();
        for (&u, p) in tr.u.iter().zip(tr.phi_u()) {
            prop_assert!(u >= -1e-12 && u <= k + 1e-9, "u = {u}");
            prop_assert!(p <= 0.0);
        }
    }

    #[test]
    fn schwarz_bound_on_closed_orbits(period in 1.0f64..6.0, frac in 0.1f64..1.0, k in 0.5f64..2.0) {
        let m = SurfaceModel::signal(CurvatureSignal::plateau_cycle(period, frac, k)).unwrap();
        let p = integrate_geodesic(&m, &UnitTangentState::on_signal(0.0), period, 1e-3).unwrap();
        let c = closed_orbit_exponent(&p).unwrap();
        prop_assert!(c.exponent >= 0.0);
        prop_assert!(c.exponent <= c.schwarz_bound + SCHWARZ_SLACK);
    }

    #[test]
    fn octagon_reduction_lands_in_domain(r in 0.0f64..0.97, arg in -3.2f64..3.2, angle in -3.2f64..3.2) {
        let m = SurfaceModel::octagon(1.0).unwrap();
        let z = Complex::from_polar(r, arg);
        let v = UnitTangentState::new([z.re, z.im], angle);
        let (w, word) = m.reduce(&v);
        prop_assert!(octagon::in_domain(Complex::new(w.position[0], w.position[1]), 1e-9));
        let (again, rest) = m.reduce(&w);
        prop_assert!(rest.is_empty());
        prop_assert_eq!(again, w);
        // phase_distance only searches words of length <= 2
        if word.len() <= 2 {
            prop_assert!(phase_distance(&m, &w, &v) < 1e-9, "word {:?}", word);
        }
    }

    #[test]
    fn pressure_monotone_under_subshifts(
        a in prop::collection::vec(any::<bool>(), 9),
        b in prop::collection::vec(any::<bool>(), 9),
        w in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let sub_bits: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x && *y).collect();
        let (big, small) = (sft_from_bits(&a), sft_from_bits(&sub_bits));
        prop_assert!(small.is_subshift_of(&big));
        let (pb, ps) = (discrete_pressure(&big, &w).unwrap(), discrete_pressure(&small, &w).unwrap());
        prop_assert!(ps <= pb + 1e-12, "{ps} > {pb}");
    }

    #[test]
    fn flow_pressure_convex_and_monotone(
        roof in prop::collection::vec(0.5f64..2.0, 3),
        pot in prop::collection::vec(-3.0f64..0.0, 3),
        bits in prop::collection::vec(any::<bool>(), 9),
    ) {
        let m = SuspensionModel::new(sft_from_bits(&bits), roof, pot).unwrap();
        let qs: Vec<f64> = (0..13).map(|i| -3.0 + 0.5 * i as f64).collect();
        let p: Vec<f64> = qs.iter().map(|&q| m.flow_pressure(q).unwrap()).collect();
        for w in p.windows(3) {
            prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
        // nonpositive potential: pressure nonincreasing in q
        for w in p.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn abramov_scaling(c in 0.25f64..4.0, roof in prop::collection::vec(0.5f64..2.0, 3), bits in prop::collection::vec(any::<bool>(), 9)) {
        let sft = sft_from_bits(&bits);
        let m = SuspensionModel::new(sft.clone(), roof.clone(), vec![0.0; 3]).unwrap();
        let scaled = SuspensionModel::new(sft, roof.iter().map(|r| r * c).collect(), vec![0.0; 3]).unwrap();
        let (h, hs) = (m.flow_pressure(0.0).unwrap(), scaled.flow_pressure(0.0).unwrap());
        prop_assert!((hs * c - h).abs() <= 1e-9 * (1.0 + h.abs()));
    }

    #[test]
    fn legendre_duality(
        lines in prop::collection::vec((-3.0f64..3.0, -1.0f64..1.0), 1..6),
    ) {
        let src = FnSource(|q: f64| lines.iter().map(|(s, b)| b + s * q).fold(f64::NEG_INFINITY, f64::max));
        let curve = sample_pressure_curve(&src, -5.0, 5.0, 0.05).unwrap();
        let spec = match legendre_conjugate(&curve, &AlphaGrid { lo: Some(-3.0), hi: Some(3.0), points: 601 }) {
            Ok(s) => s,
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let rows: Vec<_> = spec.rows.iter().filter(|r| !r.escaping).collect();
        prop_assume!(!rows.is_empty());
        for r in &rows {
            for (q, p) in curve.q.iter().zip(&curve.p) {
                prop_assert!(r.e - q * r.alpha <= p + 1e-9);
            }
        }
        for w in rows.windows(3) {
            prop_assert!(w[0].e - 2.0 * w[1].e + w[2].e <= 1e-9);
        }
        // sup over a finite alpha grid: below the curve, and within
        // alpha_step * (q range) of it
        let slack = spec.alpha_step * 10.0 + 1e-9;
        for (q, p) in curve.q.iter().zip(&curve.p) {
            let b = biconjugate(&spec, *q);
            prop_assert!(b <= p + 1e-9 && b >= p - slack, "q = {q}: {b} vs {p}");
        }
    }

    #[test]
    fn model_serde_round_trip(k in 0.1f64..5.0, r in 0.5f64..2.0, hw in 0.0f64..1.0, a in 0.1f64..2.0, period in 1.0f64..6.0, frac in 0.1f64..0.9) {
        let models = [
            SurfaceModel::constant_negative(k).unwrap(),
            SurfaceModel::octagon(k).unwrap(),
            SurfaceModel::collar(WarpProfile::FlatBand { radius: r, half_width: hw, a }, 3.0).unwrap(),
            SurfaceModel::collar(WarpProfile::Cosh { a }, 2.0).unwrap(),
            SurfaceModel::signal(CurvatureSignal::plateau_cycle(period, frac, k)).unwrap(),
        ];
        for m in models {
            let back: SurfaceModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn suspension_serde_round_trip(
        roof in prop::collection::vec(0.1f64..5.0, 3),
        pot in prop::collection::vec(-5.0f64..5.0, 3),
        bits in prop::collection::vec(any::<bool>(), 9),
    ) {
        let m = SuspensionModel::new(sft_from_bits(&bits), roof, pot).unwrap().with_label("x");
        let back: SuspensionModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn lambda_ell_nested(l1 in 1u32..200, l2 in 1u32..200) {
        let (lo, hi) = (l1.min(l2), l1.max(l2));
        let lib = mixed_library();
        let small = build_lambda_ell(lib, lo, None);
        let big = build_lambda_ell(lib, hi, None);
        let labels = big.labels();
        prop_assert!(small.labels().iter().all(|l| labels.contains(l)));
        prop_assert!(labels.iter().all(|l| !l.starts_with("band")));
    }
}
