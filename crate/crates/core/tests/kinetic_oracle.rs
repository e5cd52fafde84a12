use pyrokin::kinetics::{run_analysis, AnalysisConfig, Method};
use pyrokin::preprocess::{compute_alpha, temperature_at_alpha, ConversionBounds};
use pyrokin::synthkin::{make_fixture_suite, simulate, simulate_grid, simulate_trajectory, single_step_model, FIXTURE_BETAS};
use pyrokin::thermo::thermo_profile;
use pyrokin::tga::{resample_uniform, TgaCurve};

const TRUE_EA: f64 = 180_000.0;

fn single_step_curves() -> Vec<TgaCurve> {
    let mut m = single_step_model();
    m.components[0].fraction = 0.8;
    m.residue = 0.2;
    simulate_grid(&m, &FIXTURE_BETAS, 0.5).unwrap()
}

#[test]
fn single_step_ea_recovered_by_every_method() {
    let table = run_analysis(&single_step_curves(), &AnalysisConfig::default()).unwrap();
    assert!(table.excluded.is_empty(), "{:?}", table.excluded);
    assert_eq!(table.rows.len(), 7);
    for (method, tol) in [(Method::Friedman, 0.01), (Method::Kas, 0.02), (Method::Fwo, 0.05)] {
        for e in table.column(method) {
            let rel = (e.ea - TRUE_EA).abs() / TRUE_EA;
            assert!(rel < tol, "{method} α={} Ea={:.1} kJ/mol", e.alpha, e.ea_kj_mol());
            assert!(e.r_squared >= 0.999, "{method} α={} R²={}", e.alpha, e.r_squared);
        }
        let avg = table.average_ea(method).unwrap();
        assert!((avg - TRUE_EA).abs() / TRUE_EA < tol);
    }
}

#[test]
fn friedman_pre_exponential_is_close_to_truth() {
    let table = run_analysis(&single_step_curves(), &AnalysisConfig::default()).unwrap();
    for e in table.column(Method::Friedman) {
        // ln A error of 0.25 is about a 30 % error in A
        assert!((e.ln_a - 1e13f64.ln()).abs() < 0.25, "α={} A={:e}", e.alpha, e.a_per_s());
    }
}

#[test]
fn blend_fixture_analysis_runs_and_stays_physical() {
    let suite = make_fixture_suite(2).unwrap();
    let blend = suite.iter().find(|f| f.name == "Blend1").unwrap();
    let table = run_analysis(&blend.curves, &AnalysisConfig::default()).unwrap();
    assert!(!table.rows.is_empty());
    for e in table.estimates() {
        assert!(e.ea > 0.0 && e.ln_a.is_finite());
        assert!((0.0..=1.0).contains(&e.r_squared));
    }
    let profile = thermo_profile(&table, 560.0).unwrap();
    for t in profile {
        let lhs = t.delta_g - t.delta_h + t.t_m * t.delta_s;
        assert!(lhs.abs() <= 1e-9 * t.delta_g.abs().max(1.0));
    }
}

#[test]
fn conversion_matches_integrated_alpha() {
    let mut m = single_step_model();
    m.components[0].fraction = 0.75;
    m.residue = 0.25;
    let tr = simulate_trajectory(&m, 10.0, 0.5).unwrap();
    let curve = simulate(&m, 10.0, 0.5).unwrap();
    let ac = compute_alpha(&curve, ConversionBounds { m0: 1.0, mf: 0.25 }, 9).unwrap();
    let worst = ac.alpha.iter().zip(&tr.component_alpha[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");

    // T(α = 0.5) from a direct scan of the oracle trajectory
    let oracle = &tr.component_alpha[0];
    let k = oracle.iter().position(|&a| a >= 0.5).unwrap();
    let w = (0.5 - oracle[k - 1]) / (oracle[k] - oracle[k - 1]);
    let t_oracle = tr.temperature_k[k - 1] + w * (tr.temperature_k[k] - tr.temperature_k[k - 1]);
    assert!((temperature_at_alpha(&ac, 0.5).unwrap() - t_oracle).abs() < 1.0);
}

#[test]
fn resampled_fine_run_matches_direct_integration() {
    let mut m = single_step_model();
    m.components[0].fraction = 0.7;
    m.residue = 0.3;
    let fine = simulate(&m, 10.0, 0.1).unwrap();
    let direct = simulate(&m, 10.0, 0.5).unwrap();
    let resampled = resample_uniform(&fine, 0.5).unwrap();
    assert_eq!(resampled.points.len(), direct.points.len());
    let worst = resampled
        .points
        .iter()
        .zip(&direct.points)
        .map(|(a, b)| {
            assert!((a.temperature_k - b.temperature_k).abs() < 1e-9);
            (a.mass_fraction - b.mass_fraction).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst}");
}

#[test]
fn temperature_at_fixed_alpha_rises_with_heating_rate() {
    let suite = make_fixture_suite(4).unwrap();
    for fixture in &suite {
        let cfg = AnalysisConfig::default();
        let curves = pyrokin::kinetics::prepare_alpha_curves(&fixture.curves, &cfg).unwrap();
        for alpha in cfg.alpha_grid {
            let temps: Vec<f64> = curves.iter().map(|c| temperature_at_alpha(c, alpha).unwrap()).collect();
            assert!(temps.windows(2).all(|w| w[1] > w[0]), "{} α={alpha}: {temps:?}", fixture.name);
        }
    }
}
