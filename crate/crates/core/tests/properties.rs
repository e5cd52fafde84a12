use proptest::prelude::*;

use pyrokin::kinetics::{KineticEstimate, Method};
use pyrokin::report::vm_from_char;
use pyrokin::seqmodel::{Scaler, SequenceSample};
use pyrokin::tga::{blend_spec, curve_to_csv, load_curve, resample_uniform, SampleSpec, TgaCurve, TgaPoint};
use pyrokin::thermo::{delta_g, thermo_estimate};

fn spec_strategy() -> impl Strategy<Value = SampleSpec> {
    (any::<bool>(), 0.0..40.0f64, 0.0..40.0f64, 0.0..20.0f64).prop_map(|(ds, c, h, l)| {
        SampleSpec::new(if ds { "a" } else { "b" }, if ds { 1.0 } else { 0.0 }, c, h, l).unwrap()
    })
}

fn curve_strategy() -> impl Strategy<Value = TgaCurve> {
    (prop::collection::vec((0.01..3.0f64, 0.0..0.01f64), 10..80), 250.0..400.0f64, 1.0..30.0f64).prop_map(
        |(steps, t0, beta)| {
            let mut t = t0;
            let mut m = 1.0;
            let mut points = vec![TgaPoint { time_s: 0.0, temperature_k: t, mass_fraction: m }];
            for (dt, dm) in steps {
                t += dt;
                m *= 1.0 - dm;
                let time_s = (t - t0) * 60.0 / beta;
                points.push(TgaPoint { time_s, temperature_k: t, mass_fraction: m });
            }
            TgaCurve::new(SampleSpec::date_seeds(), beta, points).unwrap()
        },
    )
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

proptest! {
    #[test]
    fn blend_is_symmetric(a in spec_strategy(), b in spec_strategy(), f in 0.0..=1.0f64) {
        prop_assert_eq!(blend_spec(&a, &b, f).unwrap(), blend_spec(&b, &a, 1.0 - f).unwrap());
    }

    #[test]
    fn csv_round_trip(curve in curve_strategy()) {
        let back = load_curve(&curve_to_csv(&curve), curve.spec.clone(), curve.heating_rate).unwrap();
        prop_assert_eq!(back.points.len(), curve.points.len());
        for (p, q) in curve.points.iter().zip(&back.points) {
            prop_assert!(rel(p.time_s, q.time_s) < 1e-12 || (p.time_s - q.time_s).abs() < 1e-12);
            prop_assert!(rel(p.temperature_k, q.temperature_k) < 1e-12);
            prop_assert!(rel(p.mass_fraction, q.mass_fraction) < 1e-12);
        }
    }

    #[test]
    fn resample_is_idempotent(curve in curve_strategy(), k in 10usize..40) {
        let dt = curve.temperature_span() / k as f64 / 1.3;
        let once = resample_uniform(&curve, dt).unwrap();
        let twice = resample_uniform(&once, once.uniform_step().unwrap()).unwrap();
        prop_assert_eq!(once.points.len(), twice.points.len());
        for (p, q) in once.points.iter().zip(&twice.points) {
            prop_assert!((p.temperature_k - q.temperature_k).abs() < 1e-9);
            prop_assert!((p.mass_fraction - q.mass_fraction).abs() < 1e-12);
        }
    }

    #[test]
    fn thermodynamic_identity(ea in 5e4..5e5f64, ln_a in (1e-3f64).ln()..(1e60f64).ln(), tm in 300.0..1200.0f64) {
        let e = KineticEstimate { method: Method::Kas, alpha: 0.3, ea, ln_a, r_squared: 1.0, slope: 0.0, intercept: 0.0 };
        let t = thermo_estimate(&e, tm).unwrap();
        prop_assert!((t.delta_g - t.delta_h + tm * t.delta_s).abs() <= 1e-9 * t.delta_g.abs().max(t.delta_h.abs()));
        prop_assert!(t.delta_h < ea);
    }

    #[test]
    fn gibbs_decreases_with_a(ea in 5e4..5e5f64, tm in 300.0..1200.0f64, a in 1.0..1e20f64) {
        prop_assert!(delta_g(ea, tm, a * 2.0).unwrap() < delta_g(ea, tm, a).unwrap());
    }

    #[test]
    fn volatile_plus_char_is_100(eta in 0.0..=100.0f64) {
        prop_assert!((vm_from_char(eta).unwrap() + eta - 100.0).abs() < 1e-12);
    }

    #[test]
    fn scaler_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3..1e3f64, 3), 2..20), probe in prop::collection::vec(-2e3..2e3f64, 3)) {
        let samples: Vec<SequenceSample> = rows
            .iter()
            .map(|r| SequenceSample { curve_id: "p".into(), window: vec![r.clone()], target: r[0], temperature_c: 0.0 })
            .collect();
        let sc = Scaler::fit(&samples).unwrap();
        for (j, &x) in probe.iter().enumerate() {
            let back = sc.unscale_feature(j, sc.scale_feature(j, x));
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
        for s in &samples {
            for v in sc.scale_window(&s.window) {
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
