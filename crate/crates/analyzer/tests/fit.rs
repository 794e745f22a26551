mod common;

use common::{synthetic, theta_star};
use proptest::prelude::*;
use tplan_analyzer::{
    fit_mle, log_likelihood, mu_ev, AnalyzerError, Dataset, FitConfig, PourbaixParams,
    SIGMA_FLOOR,
};

const THETA_STAR_SEED: u64 = 7;

fn theta_star_dataset() -> Dataset<f64> {
    synthetic(&theta_star(), 30, 3.0, 12.0, THETA_STAR_SEED)
}

// ---------------------------------------------------------------------------
// independent oracle: dense grid over (pKa1, pKa2) with k, E_inf and sigma
// profiled in closed form
// ---------------------------------------------------------------------------

/// mu = E_inf + k * basis(pH), so the likelihood is a linear model in
/// (E_inf, k) once the breakpoints are fixed.
fn basis(pka1: f64, pka2: f64, ph: f64) -> f64 {
    if ph > pka2 {
        0.0
    } else if ph >= pka1 {
        -(pka2 - ph)
    } else {
        -(pka2 - pka1) - 2.0 * (pka1 - ph)
    }
}

struct GridBest {
    pka1: f64,
    pka2: f64,
    k: f64,
    e_inf: f64,
    ll: f64,
}

/// Exhaustive 0.01-step search over the breakpoints; for each pair the
/// optimal k is least-squares, E_inf the residual mean, sigma the rms.
fn profile_grid(d: &Dataset<f64>) -> GridBest {
    let n = d.points.len() as f64;
    let mean_ev = d.points.iter().map(|p| p.1).sum::<f64>() / n;
    let dev_ev: Vec<f64> = d.points.iter().map(|p| p.1 - mean_ev).collect();
    let see: f64 = dev_ev.iter().map(|e| e * e).sum();

    let mut best: Option<GridBest> = None;
    for i1 in 0..=350 {
        let pka1 = 6.0 + 0.01 * i1 as f64;
        for i2 in 0..=300 {
            let pka2 = 9.0 + 0.01 * i2 as f64;
            if pka1 > pka2 {
                continue;
            }
            let h: Vec<f64> = d.points.iter().map(|p| basis(pka1, pka2, p.0)).collect();
            let mean_h = h.iter().sum::<f64>() / n;
            let mut seh = 0.0;
            let mut shh = 0.0;
            for (i, hi) in h.iter().enumerate() {
                let dh = hi - mean_h;
                seh += dev_ev[i] * dh;
                shh += dh * dh;
            }
            let k = if shh > 1e-12 { seh / shh } else { 0.0 };
            let ss = see - 2.0 * k * seh + k * k * shh;
            let sigma = (ss / n).sqrt().max(SIGMA_FLOOR);
            let ll = -n * (sigma.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln())
                - ss / (2.0 * sigma * sigma);
            if best.as_ref().is_none_or(|b| ll > b.ll) {
                best = Some(GridBest { pka1, pka2, k, e_inf: mean_ev - k * mean_h, ll });
            }
        }
    }
    best.expect("non-empty grid")
}

#[test]
fn mle_matches_a_dense_profile_grid_on_synthetic_data() {
    let d = theta_star_dataset();
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();
    let grid = profile_grid(&d);

    // the continuum optimum must be at least as good as any grid cell
    assert!(
        fit.log_likelihood >= grid.ll - 1e-6,
        "fit ll {} below grid ll {}",
        fit.log_likelihood,
        grid.ll
    );
    // and in the same place
    assert!((fit.params.pka1 - grid.pka1).abs() <= 0.05, "pka1 {} vs grid {}", fit.params.pka1, grid.pka1);
    assert!((fit.params.pka2 - grid.pka2).abs() <= 0.05, "pka2 {} vs grid {}", fit.params.pka2, grid.pka2);
    assert!((fit.params.k - grid.k).abs() <= 0.5, "k {} vs grid {}", fit.params.k, grid.k);
    assert!((fit.params.e_inf - grid.e_inf).abs() <= 2.0);

    // recovery windows around the generator
    assert!((fit.params.pka1 - 7.68).abs() <= 0.3, "pka1 {}", fit.params.pka1);
    assert!((fit.params.pka2 - 10.92).abs() <= 0.5, "pka2 {}", fit.params.pka2);
    // the acid-region slope is 2k
    assert!((2.0 * fit.params.k - (-61.4)).abs() <= 2.0, "2k {}", 2.0 * fit.params.k);
    assert!((fit.params.e_inf - (-450.0)).abs() <= 15.0, "e_inf {}", fit.params.e_inf);
    assert!(fit.params.sigma_ev > 1.8 && fit.params.sigma_ev < 4.2, "sigma {}", fit.params.sigma_ev);
    assert!(fit.diagnostics.is_empty(), "unexpected diagnostics {:?}", fit.diagnostics);
}

#[test]
fn noiseless_data_recovers_the_generator_exactly() {
    let mut theta = theta_star();
    theta.sigma_ev = 0.0;
    let d = synthetic(&theta, 30, 3.0, 12.0, 1);
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();

    assert!((fit.params.pka1 - 7.68).abs() <= 0.05, "pka1 {}", fit.params.pka1);
    assert!((fit.params.pka2 - 10.92).abs() <= 0.05, "pka2 {}", fit.params.pka2);
    assert!((fit.params.k - (-30.7)).abs() <= 0.05, "k {}", fit.params.k);
    assert!((fit.params.e_inf - (-450.0)).abs() <= 0.05, "e_inf {}", fit.params.e_inf);
    assert_eq!(fit.params.sigma_ev, SIGMA_FLOOR, "sigma should sit at the floor");
    assert!(
        fit.diagnostics.iter().any(|m| m.contains("sigma at floor")),
        "diagnostics {:?}",
        fit.diagnostics
    );
}

#[test]
fn plateau_only_data_flags_unidentifiable_pkas() {
    // every point above pKa2 = 10.92: the model is flat there
    let theta = PourbaixParams::new(7.68, 10.92, -30.7, -450.0, 0.0);
    let d = synthetic(&theta, 12, 11.5, 12.5, 2);
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();
    assert!(
        fit.diagnostics.iter().any(|m| m.contains("pKa unidentifiable")),
        "diagnostics {:?}",
        fit.diagnostics
    );
    assert!((fit.params.e_inf - (-450.0)).abs() <= 1e-3, "e_inf {}", fit.params.e_inf);
}

#[test]
fn too_few_distinct_ph_values_is_rejected() {
    let cfg = FitConfig::default();
    let empty = Dataset::<f64>::new(vec![]).unwrap();
    assert_eq!(fit_mle(&empty, None, &cfg).unwrap_err(), AnalyzerError::TooFewPoints);

    let single = Dataset::new(vec![(5.0, -400.0)]).unwrap();
    assert_eq!(fit_mle(&single, None, &cfg).unwrap_err(), AnalyzerError::TooFewPoints);

    let repeated = Dataset::new(vec![(5.0, -400.0), (5.0, -410.0), (5.0, -395.0)]).unwrap();
    assert_eq!(fit_mle(&repeated, None, &cfg).unwrap_err(), AnalyzerError::TooFewPoints);
}

#[test]
fn two_distinct_points_are_interpolated() {
    let d = Dataset::new(vec![(4.0, -500.0), (9.0, -430.0)]).unwrap();
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();
    assert_eq!(fit.params.sigma_ev, SIGMA_FLOOR);
    for &(ph, ev) in &d.points {
        assert!((mu_ev(&fit.params, ph) - ev).abs() <= 1e-3);
    }
}

#[test]
fn the_optimum_is_stationary() {
    let d = theta_star_dataset();
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();
    let ll_hat = fit.log_likelihood;

    let arr = fit.params.to_array();
    for i in 0..5 {
        for eps in [1e-3, 1e-2] {
            for sign in [-1.0, 1.0] {
                let mut p = arr;
                p[i] += sign * eps;
                let q = PourbaixParams::from_array(p);
                if !q.is_valid() {
                    continue; // e.g. sigma pushed under the floor
                }
                let ll = log_likelihood(&q, &d).unwrap();
                assert!(
                    ll <= ll_hat + 1e-6,
                    "perturbing coordinate {} by {} raised ll from {} to {}",
                    i,
                    sign * eps,
                    ll_hat,
                    ll
                );
            }
        }
    }
}

#[test]
fn shifting_every_potential_shifts_e_inf() {
    let d = theta_star_dataset();
    let c = 137.5;
    let shifted =
        Dataset::new(d.points.iter().map(|&(ph, ev)| (ph, ev + c)).collect()).unwrap();

    let cfg = FitConfig::default();
    let a = fit_mle(&d, None, &cfg).unwrap();
    let b = fit_mle(&shifted, None, &cfg).unwrap();

    assert!((b.params.e_inf - a.params.e_inf - c).abs() <= 0.05);
    assert!((b.params.pka1 - a.params.pka1).abs() <= 0.05);
    assert!((b.params.pka2 - a.params.pka2).abs() <= 0.05);
    assert!((b.params.k - a.params.k).abs() <= 0.05);
    assert!((b.params.sigma_ev - a.params.sigma_ev).abs() <= 0.05);
}

#[test]
fn fitting_is_deterministic() {
    let d = theta_star_dataset();
    let cfg = FitConfig::default();
    let a = fit_mle(&d, None, &cfg).unwrap();
    let b = fit_mle(&d, None, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn a_caller_start_is_used_when_restarts_are_disabled() {
    let d = theta_star_dataset();
    let cfg = FitConfig { restarts: 0, ..FitConfig::default() };
    let init = PourbaixParams::new(7.7, 10.9, -31.0, -451.0, 3.0);
    let fit = fit_mle(&d, Some(init), &cfg).unwrap();
    assert!((fit.params.pka1 - 7.68).abs() <= 0.3);
    // and with no init at all, a data-driven start still exists
    let fallback = fit_mle(&d, None, &cfg).unwrap();
    assert!(fallback.log_likelihood.is_finite());
}

#[test]
fn coincident_low_ph_points_still_fit() {
    // the three lowest pH values coincide, so the slope seed falls back
    let theta = theta_star();
    let at3 = mu_ev(&theta, 3.0);
    let mut pts = vec![(3.0, at3 - 2.0), (3.0, at3 + 2.0), (3.0, at3)];
    for i in 0..10 {
        let ph = 5.0 + 0.7 * i as f64;
        pts.push((ph, mu_ev(&theta, ph)));
    }
    let d = Dataset::new(pts).unwrap();
    let fit = fit_mle(&d, None, &FitConfig::default()).unwrap();
    assert!(fit.log_likelihood.is_finite());
    assert!(fit.params.k < 0.0);
}

// ---------------------------------------------------------------------------
// invariants
// ---------------------------------------------------------------------------

proptest! {
    #[test]
    fn mu_is_continuous_at_the_breakpoints(
        pka1 in 2.0..12.0f64,
        gap in 0.0..4.0f64,
        k in -100.0..-0.1f64,
        e_inf in -700.0..0.0f64,
    ) {
        let p = PourbaixParams::new(pka1, pka1 + gap, k, e_inf, 1.0);
        let d = 1e-12;
        for bp in [p.pka1, p.pka2] {
            let below = mu_ev(&p, bp - d);
            let above = mu_ev(&p, bp + d);
            let scale = 1.0 + below.abs().max(above.abs());
            prop_assert!(
                (below - above).abs() <= 1e-9 * scale,
                "jump {} at breakpoint {}", (below - above).abs(), bp
            );
        }
    }

    #[test]
    fn acid_region_slope_is_twice_the_buffer_slope(
        pka1 in 3.0..11.0f64,
        gap in 1.0..3.0f64,
        k in -100.0..-0.1f64,
        e_inf in -700.0..0.0f64,
    ) {
        let p = PourbaixParams::new(pka1, pka1 + gap, k, e_inf, 1.0);
        let h = 1e-5;
        let fd = |ph: f64| (mu_ev(&p, ph + h) - mu_ev(&p, ph - h)) / (2.0 * h);
        let acid = fd(pka1 - 0.5);
        let buffer = fd(pka1 + gap / 2.0);
        prop_assert!(
            (acid - 2.0 * buffer).abs() <= 1e-6 * buffer.abs().max(1.0),
            "acid slope {} vs buffer slope {}", acid, buffer
        );
    }

    #[test]
    fn log_likelihood_is_translation_equivariant(
        pka1 in 2.0..12.0f64,
        gap in 0.0..4.0f64,
        k in -100.0..-0.1f64,
        e_inf in -700.0..0.0f64,
        sigma in 0.5..50.0f64,
        c in -300.0..300.0f64,
        pts in prop::collection::vec((0.0..14.0f64, -700.0..100.0f64), 1..20),
    ) {
        let p = PourbaixParams::new(pka1, pka1 + gap, k, e_inf, sigma);
        let mut q = p;
        q.e_inf += c;
        let d = Dataset::new(pts.clone()).unwrap();
        let shifted = Dataset::new(pts.iter().map(|&(ph, ev)| (ph, ev + c)).collect()).unwrap();
        let a = log_likelihood(&p, &d).unwrap();
        let b = log_likelihood(&q, &shifted).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()), "{} vs {}", a, b);
    }
}
