//! Posterior estimation by importance sampling from a uniform prior box:
//! weights are likelihoods normalized in log space, marginals are weighted
//! histograms over the prior ranges, and model-line bands are weighted
//! quantiles of μ(pH | θ) across the sample cloud.

use num_traits::{Float, FromPrimitive};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AnalyzerError;
use crate::model::{c, log_likelihood, mu_ev, sigma_floor, Dataset, ParamName, PourbaixParams};

/// Uniform-prior box; the pKa pair additionally satisfies pka1 ≤ pka2 by
/// rejection, so the joint prior is uniform on the ordered wedge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorRanges<S> {
    pub pka1: [S; 2],
    pub pka2: [S; 2],
    pub k: [S; 2],
    pub e_inf: [S; 2],
    pub sigma_ev: [S; 2],
}

impl<S: Float + FromPrimitive> PriorRanges<S> {
    /// Ranges anchored to the data: the potential plateau must lie within
    /// 200 mV of the observed extremes; everything else is the generic
    /// aqueous-chemistry window.
    pub fn data_informed(d: &Dataset<S>) -> Self {
        let (lo, hi) = d
            .points
            .iter()
            .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &(_, ev)| {
                (lo.min(ev), hi.max(ev))
            });
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (c(-500.0), c(0.0)) };
        let pad = c::<S>(200.0);
        PriorRanges {
            pka1: [c(2.0), c(12.0)],
            pka2: [c(2.0), c(12.0)],
            k: [c(-100.0), c(0.0)],
            e_inf: [lo - pad, hi + pad],
            sigma_ev: [c(0.0), c(50.0)],
        }
    }

    /// Fixed wide box for use without data.
    pub fn uninformative() -> Self {
        PriorRanges {
            pka1: [c(2.0), c(12.0)],
            pka2: [c(2.0), c(12.0)],
            k: [c(-100.0), c(0.0)],
            e_inf: [c(-1000.0), c(200.0)],
            sigma_ev: [c(0.0), c(50.0)],
        }
    }

    pub fn get(&self, name: ParamName) -> [S; 2] {
        match name {
            ParamName::Pka1 => self.pka1,
            ParamName::Pka2 => self.pka2,
            ParamName::K => self.k,
            ParamName::EInf => self.e_inf,
            ParamName::SigmaEv => self.sigma_ev,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyzerError> {
        for name in ParamName::ALL {
            let [lo, hi] = self.get(name);
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(AnalyzerError::InvalidRange(name.as_str()));
            }
        }
        Ok(())
    }
}

/// Draws from the prior with likelihood-proportional normalized weights.
#[derive(Debug, Clone)]
pub struct WeightedSamples<S> {
    pub samples: Vec<(PourbaixParams<S>, S)>,
    pub seed: u64,
    pub n: usize,
    pub prior: PriorRanges<S>,
}

/// Samples per deterministic RNG stream; fixed so the draw sequence is
/// independent of how many chunks run concurrently.
const CHUNK: usize = 4096;

fn draw_params<S: Float + FromPrimitive>(
    rng: &mut ChaCha8Rng,
    prior: &PriorRanges<S>,
) -> PourbaixParams<S> {
    let uniform = |rng: &mut ChaCha8Rng, [lo, hi]: [S; 2]| -> S {
        lo + (hi - lo) * c::<S>(rng.random::<f64>())
    };
    let (pka1, pka2) = loop {
        let a = uniform(rng, prior.pka1);
        let b = uniform(rng, prior.pka2);
        if a <= b {
            break (a, b);
        }
    };
    let floor = sigma_floor::<S>();
    let sigma = loop {
        let s = uniform(rng, prior.sigma_ev);
        if s >= floor {
            break s;
        }
    };
    PourbaixParams {
        pka1,
        pka2,
        k: uniform(rng, prior.k),
        e_inf: uniform(rng, prior.e_inf),
        sigma_ev: sigma,
    }
}

/// Draw N parameter vectors from the prior and weight each by its
/// likelihood, normalized with log-sum-exp. The empty dataset degenerates to
/// equal weights (the prior itself).
pub fn sample_posterior<S: Float + FromPrimitive>(
    d: &Dataset<S>,
    prior: &PriorRanges<S>,
    n: usize,
    seed: u64,
) -> Result<WeightedSamples<S>, AnalyzerError> {
    if n == 0 {
        return Err(AnalyzerError::ZeroSamples);
    }
    prior.validate()?;

    let mut samples: Vec<(PourbaixParams<S>, S)> = Vec::with_capacity(n);
    let mut log_w: Vec<S> = Vec::with_capacity(n);
    for chunk_idx in 0..n.div_ceil(CHUNK) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chunk_idx as u64 + 1);
        let count = CHUNK.min(n - chunk_idx * CHUNK);
        for _ in 0..count {
            let p = draw_params(&mut rng, prior);
            log_w.push(log_likelihood(&p, d)?);
            samples.push((p, S::zero()));
        }
    }

    // log-sum-exp normalization
    let max = log_w
        .iter()
        .fold(S::neg_infinity(), |a, &b| a.max(b));
    let log_sum = max
        + log_w
            .iter()
            .fold(S::zero(), |a, &b| a + (b - max).exp())
            .ln();
    for (s, &lw) in samples.iter_mut().zip(&log_w) {
        s.1 = (lw - log_sum).exp();
    }
    Ok(WeightedSamples { samples, seed, n, prior: *prior })
}

/// Weighted histogram of one parameter over its prior range. Mass outside
/// the range (impossible for prior draws) clamps into the boundary bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram<S> {
    pub param: String,
    /// bins + 1 edges, equally spaced over the prior range.
    pub edges: Vec<S>,
    /// Normalized masses, one per bin.
    pub masses: Vec<S>,
}

pub fn marginal_histogram<S: Float + FromPrimitive>(
    ws: &WeightedSamples<S>,
    param: ParamName,
    bins: usize,
) -> Result<Histogram<S>, AnalyzerError> {
    if bins < 2 {
        return Err(AnalyzerError::TooFewBins);
    }
    if ws.samples.is_empty() {
        return Err(AnalyzerError::EmptySamples);
    }
    let [lo, hi] = ws.prior.get(param);
    let width = (hi - lo) / c(bins as f64);
    let edges: Vec<S> = (0..=bins).map(|i| lo + width * c(i as f64)).collect();
    let mut masses = vec![S::zero(); bins];
    for (p, w) in &ws.samples {
        let v = p.get(param);
        let idx = ((v - lo) / width).floor().to_usize().unwrap_or(0).min(bins - 1);
        masses[idx] = masses[idx] + *w;
    }
    Ok(Histogram { param: param.as_str().to_owned(), edges, masses })
}

/// Per-pH weighted mean and [5%, 95%] band of the model line over the
/// posterior cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLineBand<S> {
    pub ph: Vec<S>,
    pub mean: Vec<S>,
    pub lo: Vec<S>,
    pub hi: Vec<S>,
}

pub fn model_line_band<S: Float + FromPrimitive>(
    ws: &WeightedSamples<S>,
    ph_grid: &[S],
) -> Result<ModelLineBand<S>, AnalyzerError> {
    if ph_grid.is_empty() {
        return Err(AnalyzerError::EmptyGrid);
    }
    if ws.samples.is_empty() {
        return Err(AnalyzerError::EmptySamples);
    }
    let mut out = ModelLineBand {
        ph: ph_grid.to_vec(),
        mean: Vec::with_capacity(ph_grid.len()),
        lo: Vec::with_capacity(ph_grid.len()),
        hi: Vec::with_capacity(ph_grid.len()),
    };
    let q_lo = c::<S>(0.05);
    let q_hi = c::<S>(0.95);
    for &ph in ph_grid {
        let mut values: Vec<(S, S)> = ws
            .samples
            .iter()
            .map(|(p, w)| (mu_ev(p, ph), *w))
            .collect();
        values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite model value"));
        let mean = values.iter().fold(S::zero(), |a, &(v, w)| a + v * w);
        let quantile = |q: S| -> S {
            let mut acc = S::zero();
            for &(v, w) in &values {
                acc = acc + w;
                if acc >= q {
                    return v;
                }
            }
            values.last().expect("non-empty samples").0
        };
        out.mean.push(mean);
        out.lo.push(quantile(q_lo));
        out.hi.push(quantile(q_hi));
    }
    Ok(out)
}

/// The sample with the largest weight: with a uniform prior this is the
/// maximum-likelihood draw, the Monte-Carlo stand-in for the joint mode.
pub fn joint_mode<S: Float + FromPrimitive>(
    ws: &WeightedSamples<S>,
) -> Result<PourbaixParams<S>, AnalyzerError> {
    ws.samples
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite weight"))
        .map(|(p, _)| *p)
        .ok_or(AnalyzerError::EmptySamples)
}
