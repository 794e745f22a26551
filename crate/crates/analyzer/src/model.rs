//! The piecewise Pourbaix potential model and its Gaussian likelihood.
//!
//! A species with two deprotonation events has three linear E-vs-pH regions:
//! below `pka1` the potential falls at twice the slope of the middle region
//! (two electrons per proton vs one), and above `pka2` it plateaus at
//! `e_inf`.

use std::fmt;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::AnalyzerError;

/// Lower bound on the noise scale; keeps interpolating fits from driving the
/// likelihood to +∞ as σ → 0.
pub const SIGMA_FLOOR: f64 = 1e-6;

pub(crate) fn c<S: Float + FromPrimitive>(x: f64) -> S {
    S::from_f64(x).expect("f64 constant converts to the scalar type")
}

pub fn sigma_floor<S: Float + FromPrimitive>() -> S {
    c(SIGMA_FLOOR)
}

/// θ = (pKa1, pKa2, k, E_inf, σ). `k` is the middle-region slope in mV per
/// pH unit; the acid region's slope is `2k` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PourbaixParams<S> {
    pub pka1: S,
    pub pka2: S,
    pub k: S,
    pub e_inf: S,
    pub sigma_ev: S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ParamName {
    Pka1,
    Pka2,
    K,
    EInf,
    SigmaEv,
}

impl ParamName {
    pub const ALL: [ParamName; 5] = [
        ParamName::Pka1,
        ParamName::Pka2,
        ParamName::K,
        ParamName::EInf,
        ParamName::SigmaEv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ParamName::Pka1 => "pka1",
            ParamName::Pka2 => "pka2",
            ParamName::K => "k",
            ParamName::EInf => "e_inf",
            ParamName::SigmaEv => "sigma_ev",
        }
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ParamName {
    type Err = AnalyzerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pka1" => Ok(ParamName::Pka1),
            "pka2" => Ok(ParamName::Pka2),
            "k" => Ok(ParamName::K),
            "e_inf" => Ok(ParamName::EInf),
            "sigma_ev" => Ok(ParamName::SigmaEv),
            other => Err(AnalyzerError::UnknownParam(other.to_owned())),
        }
    }
}

impl<S: Float + FromPrimitive> PourbaixParams<S> {
    pub fn new(pka1: S, pka2: S, k: S, e_inf: S, sigma_ev: S) -> Self {
        PourbaixParams { pka1, pka2, k, e_inf, sigma_ev }
    }

    pub fn to_array(&self) -> [S; 5] {
        [self.pka1, self.pka2, self.k, self.e_inf, self.sigma_ev]
    }

    pub fn from_array(x: [S; 5]) -> Self {
        PourbaixParams { pka1: x[0], pka2: x[1], k: x[2], e_inf: x[3], sigma_ev: x[4] }
    }

    pub fn get(&self, name: ParamName) -> S {
        match name {
            ParamName::Pka1 => self.pka1,
            ParamName::Pka2 => self.pka2,
            ParamName::K => self.k,
            ParamName::EInf => self.e_inf,
            ParamName::SigmaEv => self.sigma_ev,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
            && self.pka1 <= self.pka2
            && self.sigma_ev >= sigma_floor()
    }
}

/// Observed (pH, potential mV) pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset<S> {
    pub points: Vec<(S, S)>,
}

impl<S: Float + FromPrimitive> Dataset<S> {
    pub fn new(points: Vec<(S, S)>) -> Result<Self, AnalyzerError> {
        if points.iter().any(|(ph, ev)| !ph.is_finite() || !ev.is_finite()) {
            return Err(AnalyzerError::NonFinite);
        }
        Ok(Dataset { points })
    }

    /// Parse `pH,eV` CSV (header required).
    pub fn from_csv(text: &str) -> Result<Self, AnalyzerError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader.headers().map_err(|e| AnalyzerError::Csv(e.to_string()))?;
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| AnalyzerError::Csv(format!("missing column '{name}'")))
        };
        let ph_col = find("pH")?;
        let ev_col = find("eV")?;
        let mut points = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| AnalyzerError::Csv(e.to_string()))?;
            let cell = |col: usize| -> Result<f64, AnalyzerError> {
                record
                    .get(col)
                    .ok_or_else(|| AnalyzerError::Csv(format!("row {}: short record", i + 2)))?
                    .parse::<f64>()
                    .map_err(|e| AnalyzerError::Csv(format!("row {}: {e}", i + 2)))
            };
            points.push((c(cell(ph_col)?), c(cell(ev_col)?)));
        }
        Dataset::new(points)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Number of distinct pH values (exact comparison; duplicates are real
    /// repeat measurements).
    pub fn distinct_ph(&self) -> usize {
        let mut phs: Vec<S> = self.points.iter().map(|p| p.0).collect();
        phs.sort_by(|a, b| a.partial_cmp(b).expect("finite pH"));
        phs.dedup_by(|a, b| a == b);
        phs.len()
    }
}

/// The three-region model line at one pH.
pub fn mu_ev<S: Float>(p: &PourbaixParams<S>, ph: S) -> S {
    if ph > p.pka2 {
        p.e_inf
    } else if ph >= p.pka1 {
        p.e_inf - p.k * (p.pka2 - ph)
    } else {
        let two_k = p.k + p.k;
        p.e_inf - p.k * (p.pka2 - p.pka1) - two_k * (p.pka1 - ph)
    }
}

/// Gaussian log-likelihood Σᵢ [−log(σ√2π) − ½((eVᵢ − μ(pHᵢ))/σ)²].
pub fn log_likelihood<S: Float + FromPrimitive>(
    p: &PourbaixParams<S>,
    d: &Dataset<S>,
) -> Result<S, AnalyzerError> {
    if p.sigma_ev < sigma_floor() {
        return Err(AnalyzerError::SigmaBelowFloor);
    }
    let half = c::<S>(0.5);
    let ln_norm = p.sigma_ev.ln() + c::<S>(0.5 * (2.0 * std::f64::consts::PI).ln());
    let mut total = S::zero();
    for &(ph, ev) in &d.points {
        let z = (ev - mu_ev(p, ph)) / p.sigma_ev;
        total = total - ln_norm - half * z * z;
    }
    Ok(total)
}
