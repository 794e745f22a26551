//! Maximum-likelihood fitting: multi-start Nelder–Mead over (pKa1, pKa2, k,
//! E_inf) with σ profiled out analytically — for fixed line parameters the
//! Gaussian σ̂ is just the rms residual, floored. Soft penalties steer the
//! simplex back when the pKa order inverts.

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::AnalyzerError;
use crate::model::{c, log_likelihood, mu_ev, sigma_floor, Dataset, PourbaixParams};

#[derive(Debug, Clone)]
pub struct FitConfig {
    /// Data-driven simplex starts (the caller's `init` adds one more).
    pub restarts: usize,
    pub max_iters: usize,
    /// Convergence threshold on the simplex's objective spread.
    pub tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { restarts: 8, max_iters: 4000, tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult<S> {
    pub params: PourbaixParams<S>,
    pub log_likelihood: S,
    pub diagnostics: Vec<String>,
}

/// Line parameters with the pKa pair ordered; σ comes from profiling.
fn line_params<S: Float + FromPrimitive>(x: &[S; 4]) -> PourbaixParams<S> {
    let (lo, hi) = if x[0] <= x[1] { (x[0], x[1]) } else { (x[1], x[0]) };
    PourbaixParams { pka1: lo, pka2: hi, k: x[2], e_inf: x[3], sigma_ev: sigma_floor() }
}

/// The conditional maximizer of σ for fixed line parameters: the rms
/// residual, never below the floor.
fn profile_sigma<S: Float + FromPrimitive>(d: &Dataset<S>, p: &PourbaixParams<S>) -> S {
    let n = c::<S>(d.points.len() as f64);
    let ss = d
        .points
        .iter()
        .fold(S::zero(), |acc, &(ph, ev)| {
            let r = ev - mu_ev(p, ph);
            acc + r * r
        });
    (ss / n).sqrt().max(sigma_floor())
}

/// Penalized negative profiled log-likelihood; finite everywhere.
fn objective<S: Float + FromPrimitive>(d: &Dataset<S>, x: &[S; 4]) -> S {
    let mut p = line_params(x);
    p.sigma_ev = profile_sigma(d, &p);
    let mut penalty = S::zero();
    if x[0] > x[1] {
        let gap = x[0] - x[1];
        penalty = penalty + c::<S>(1e3) * gap * gap;
    }
    let ll = log_likelihood(&p, d).expect("profiled sigma is above the floor");
    penalty - ll
}

/// One Nelder–Mead descent (standard α=1, γ=2, ρ=½, σ=½ coefficients).
fn nelder_mead<S, F>(f: &F, x0: [S; 4], scale: [S; 4], cfg: &FitConfig) -> ([S; 4], S)
where
    S: Float + FromPrimitive,
    F: Fn(&[S; 4]) -> S,
{
    let n = 4usize;
    let mut simplex: Vec<([S; 4], S)> = Vec::with_capacity(n + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..n {
        let mut v = x0;
        v[i] = v[i] + scale[i];
        simplex.push((v, f(&v)));
    }

    let half = c::<S>(0.5);
    let two = c::<S>(2.0);
    for _ in 0..cfg.max_iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
        let spread = simplex[n].1 - simplex[0].1;
        if spread < c(cfg.tol) {
            break;
        }

        // centroid of all but the worst
        let mut centroid = [S::zero(); 4];
        for (v, _) in &simplex[..n] {
            for i in 0..n {
                centroid[i] = centroid[i] + v[i];
            }
        }
        let inv = S::one() / c::<S>(n as f64);
        for ci in &mut centroid {
            *ci = *ci * inv;
        }

        let worst = simplex[n];
        let mut reflected = [S::zero(); 4];
        for i in 0..n {
            reflected[i] = centroid[i] + (centroid[i] - worst.0[i]);
        }
        let fr = f(&reflected);

        if fr < simplex[0].1 {
            // try expanding past the reflection
            let mut expanded = [S::zero(); 4];
            for i in 0..n {
                expanded[i] = centroid[i] + two * (centroid[i] - worst.0[i]);
            }
            let fe = f(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            // contract toward the centroid
            let toward = if fr < worst.1 { reflected } else { worst.0 };
            let mut contracted = [S::zero(); 4];
            for i in 0..n {
                contracted[i] = centroid[i] + half * (toward[i] - centroid[i]);
            }
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // shrink everything toward the best vertex
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    for i in 0..n {
                        entry.0[i] = best[i] + half * (entry.0[i] - best[i]);
                    }
                    entry.1 = f(&entry.0);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite objective"));
    simplex[0]
}

/// Data-driven simplex starts: the plateau level from the highest-pH
/// potentials, the acid-region slope from a least-squares line through the
/// lowest-pH points (that slope is 2k), and pKa pairs spread over the
/// observed pH range.
fn initial_guesses<S: Float + FromPrimitive>(d: &Dataset<S>, n: usize) -> Vec<[S; 4]> {
    let mut by_ph: Vec<(S, S)> = d.points.clone();
    by_ph.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite pH"));
    let m = by_ph.len();
    let tail = &by_ph[m.saturating_sub(3)..];
    let e_inf0 = tail.iter().fold(S::zero(), |acc, p| acc + p.1) / c(tail.len() as f64);

    let head = &by_ph[..3.min(m)];
    let hn = c::<S>(head.len() as f64);
    let mx = head.iter().fold(S::zero(), |a, p| a + p.0) / hn;
    let my = head.iter().fold(S::zero(), |a, p| a + p.1) / hn;
    let sxx = head.iter().fold(S::zero(), |a, p| a + (p.0 - mx) * (p.0 - mx));
    let sxy = head.iter().fold(S::zero(), |a, p| a + (p.0 - mx) * (p.1 - my));
    let slope = if sxx > S::zero() { sxy / sxx } else { c(-60.0) };
    let k0 = (slope / c(2.0)).min(c(-0.5));

    let ph_lo = by_ph[0].0;
    let width = by_ph[m - 1].0 - ph_lo;
    let quantile = |q: f64| ph_lo + width * c(q);

    let pka_pairs = [
        (0.35, 0.75),
        (0.25, 0.60),
        (0.50, 0.85),
        (0.20, 0.90),
        (0.40, 0.60),
        (0.55, 0.95),
        (0.30, 0.45),
        (0.65, 0.80),
    ];

    (0..n)
        .map(|i| {
            let (q1, q2) = pka_pairs[i % pka_pairs.len()];
            [quantile(q1), quantile(q2), k0, e_inf0]
        })
        .collect()
}

/// Maximize the likelihood by simplex descent from several data-driven
/// starting points (plus `init` when given), keeping the best optimum. The
/// returned σ is the profiled rms residual, floored.
pub fn fit_mle<S: Float + FromPrimitive>(
    d: &Dataset<S>,
    init: Option<PourbaixParams<S>>,
    cfg: &FitConfig,
) -> Result<FitResult<S>, AnalyzerError> {
    if d.distinct_ph() < 2 {
        return Err(AnalyzerError::TooFewPoints);
    }

    let f = |x: &[S; 4]| objective(d, x);
    // always descend from at least one point
    let need = if init.is_some() { cfg.restarts } else { cfg.restarts.max(1) };
    let mut starts = initial_guesses(d, need);
    if let Some(p) = init {
        starts.insert(0, [p.pka1, p.pka2, p.k, p.e_inf]);
    }

    let mut best: Option<([S; 4], S)> = None;
    for &x0 in &starts {
        let scale = [c(0.5), c(0.5), c(4.0), c(25.0)];
        let (x, fx) = nelder_mead(&f, x0, scale, cfg);
        // polish: restart a tighter simplex at the found optimum
        let fine = [c(0.05), c(0.05), c(0.4), c(2.0)];
        let polished = nelder_mead(&f, x, fine, cfg);
        let (x, fx) = if polished.1 < fx { polished } else { (x, fx) };
        if best.map_or(true, |(_, b)| fx < b) {
            best = Some((x, fx));
        }
    }
    let (x, _) = best.expect("at least one start");
    let mut params = line_params(&x);
    params.sigma_ev = profile_sigma(d, &params);
    let ll = log_likelihood(&params, d)?;

    let mut diagnostics = Vec::new();
    let all_plateau = d.points.iter().all(|&(ph, _)| ph > params.pka2);
    if all_plateau || params.k.abs() < c(1e-3) {
        diagnostics.push("pKa unidentifiable: the fitted model is flat over the data".to_owned());
    }
    if params.sigma_ev <= sigma_floor::<S>() {
        diagnostics.push("sigma at floor: the model interpolates the data".to_owned());
    }

    Ok(FitResult { params, log_likelihood: ll, diagnostics })
}
