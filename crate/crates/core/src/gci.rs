//! Grid Convergence Index: observed order, fine-grid GCI and local fields.

use crate::quadrature::pairwise_sum;
use crate::tensor::OrthotropicModel;
use serde::Serialize;

pub const MAX_ITERATIONS: usize = 200;
pub const ORDER_TOLERANCE: f64 = 1e-10;
/// Fine values below this magnitude have no relative error.
pub const ZERO_FINE: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GciError {
    #[error("observed order did not converge ({reason})")]
    NoConvergence { reason: &'static str },
    #[error("fine-grid value is zero; use an absolute reference")]
    ZeroFineValue,
    #[error("no point yields a usable observed order")]
    AllPointsDegenerate,
    #[error("invalid grid triple: {0}")]
    BadTriple(&'static str),
}

/// s = +1 when ε32·ε21 > 0, −1 when < 0; `None` when either vanishes.
pub fn sign_s(eps32: f64, eps21: f64) -> Option<f64> {
    let p = eps32 * eps21;
    if p > 0.0 {
        Some(1.0)
    } else if p < 0.0 {
        Some(-1.0)
    } else {
        None
    }
}

/// Solves P = |ln|ε32/ε21| + ln((r21^P − s)/(r32^P − s))| / ln r21 by
/// fixed-point iteration, halving the update when successive steps
/// change direction.
pub fn observed_order(eps32: f64, eps21: f64, r21: f64, r32: f64) -> Result<f64, GciError> {
    let s = sign_s(eps32, eps21).ok_or(GciError::NoConvergence { reason: "zero difference" })?;
    if !(r21 > 1.0 && r32 > 1.0) {
        return Err(GciError::BadTriple("refinement ratios must exceed 1"));
    }
    let ln_r21 = r21.ln();
    let ratio = (eps32 / eps21).abs().ln();
    let g = |p: f64| -> Option<f64> {
        let num = r21.powf(p) - s;
        let den = r32.powf(p) - s;
        if num <= 0.0 || den <= 0.0 {
            return None;
        }
        Some((ratio + (num / den).ln()).abs() / ln_r21)
    };
    let mut p = ratio.abs() / ln_r21;
    let mut last_delta = 0.0;
    let mut damping = 1.0;
    for _ in 0..MAX_ITERATIONS {
        let Some(target) = g(p) else { break };
        let delta = target - p;
        if delta.abs() < ORDER_TOLERANCE {
            if !target.is_finite() || target <= 0.0 {
                return Err(GciError::NoConvergence { reason: "non-positive order" });
            }
            return Ok(target);
        }
        if delta * last_delta < 0.0 {
            damping *= 0.5;
        }
        last_delta = delta;
        p += damping * delta;
        if !p.is_finite() || p > 1e3 {
            break;
        }
    }
    // The fixed-point map has slope ln r32/ln r21 − 1 for large P, so it
    // diverges when r32 is much larger than r21. Solve the same equation
    // by bisection instead.
    bracketed_order(ratio, s, r21, r32)
}

/// Root of P·ln r21 − ln|ε32/ε21| − ln((r21^P − s)/(r32^P − s)) on (0, 64].
fn bracketed_order(ratio: f64, s: f64, r21: f64, r32: f64) -> Result<f64, GciError> {
    let f = |p: f64| -> f64 {
        let num = r21.powf(p) - s;
        let den = r32.powf(p) - s;
        p * r21.ln() - ratio - (num / den).ln()
    };
    let grid: Vec<f64> = (0..=80).map(|k| 1e-3 * 2f64.powf(k as f64 * 16.0 / 80.0)).collect();
    let bracket = grid.windows(2).find(|w| {
        let (a, b) = (f(w[0]), f(w[1]));
        a.is_finite() && b.is_finite() && a * b <= 0.0
    });
    let Some(w) = bracket else {
        return Err(GciError::NoConvergence { reason: "no order in (0, 64]" });
    };
    let (mut lo, mut hi) = (w[0], w[1]);
    let flo = f(lo);
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < ORDER_TOLERANCE * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Relative fine-grid error e_a = |(φ1 − φ2)/φ1|.
pub fn relative_error(phi1: f64, phi2: f64) -> Result<f64, GciError> {
    if phi1.abs() < ZERO_FINE {
        return Err(GciError::ZeroFineValue);
    }
    Ok(((phi1 - phi2) / phi1).abs())
}

/// GCI = 1.25·e_a/(r21^P − 1), as a fraction of |φ1|.
pub fn gci_fine(phi1: f64, phi2: f64, r21: f64, p: f64) -> Result<f64, GciError> {
    let ea = relative_error(phi1, phi2)?;
    if ea == 0.0 {
        return Ok(0.0);
    }
    Ok(1.25 * ea / (r21.powf(p) - 1.0))
}

/// μ2 = GCI/M∞·100 for an absolute GCI on a second moment (m²).
pub fn mu2_percent(gci_abs: f64, model: &OrthotropicModel) -> f64 {
    gci_abs / model.m_inf() * 100.0
}

/// Fine/medium/coarse values co-located on the coarse points.
#[derive(Debug, Clone)]
pub struct GridTriple {
    pub fine: Vec<f64>,
    pub medium: Vec<f64>,
    pub coarse: Vec<f64>,
    /// Δ1 < Δ2 < Δ3.
    pub spacings: [f64; 3],
    /// M∞ when the observable is a second moment (enables μ2).
    pub second_moment_scale: Option<f64>,
}

impl GridTriple {
    pub fn new(fine: Vec<f64>, medium: Vec<f64>, coarse: Vec<f64>, spacings: [f64; 3]) -> Result<Self, GciError> {
        if fine.len() != medium.len() || fine.len() != coarse.len() || fine.is_empty() {
            return Err(GciError::BadTriple("fields must be non-empty and co-located"));
        }
        if !(spacings[0] > 0.0 && spacings[0] < spacings[1] && spacings[1] < spacings[2]) {
            return Err(GciError::BadTriple("spacings must satisfy 0 < Δ1 < Δ2 < Δ3"));
        }
        Ok(Self { fine, medium, coarse, spacings, second_moment_scale: None })
    }

    pub fn with_second_moment(mut self, model: &OrthotropicModel) -> Self {
        self.second_moment_scale = Some(model.m_inf());
        self
    }

    pub fn r21(&self) -> f64 {
        self.spacings[1] / self.spacings[0]
    }

    pub fn r32(&self) -> f64 {
        self.spacings[2] / self.spacings[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GciPoint {
    pub index: usize,
    pub eps21: f64,
    pub eps32: f64,
    /// +1, −1, or 0 when a difference vanishes.
    pub s: i8,
    pub p_local: Option<f64>,
    /// Fine-grid GCI as a fraction of |φ1|.
    pub gci: Option<f64>,
    /// Absolute GCI, in the observable's units.
    #[serde(skip)]
    pub gci_abs: f64,
    pub mu2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GciSummary {
    pub gci_max: f64,
    pub mu2_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GciReport {
    pub r21: f64,
    pub r32: f64,
    pub p_global: f64,
    pub excluded_fraction: f64,
    pub points: Vec<GciPoint>,
    pub summary: GciSummary,
}

impl GciReport {
    pub fn oscillatory_count(&self) -> usize {
        self.points.iter().filter(|p| p.s < 0).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}

/// Local GCI with the arithmetic mean of the converged local orders.
///
/// Points with a vanishing difference, oscillatory convergence (s = −1), a
/// failed order solve or (for the relative GCI) a zero fine value are
/// excluded from the average and counted in `excluded_fraction`; their GCI
/// still uses the global order.
pub fn local_gci_field(triple: &GridTriple) -> Result<GciReport, GciError> {
    let (r21, r32) = (triple.r21(), triple.r32());
    let n = triple.fine.len();
    let mut points = Vec::with_capacity(n);
    let mut accepted = Vec::new();
    let mut oscillatory = Vec::new();
    for i in 0..n {
        let (f1, f2, f3) = (triple.fine[i], triple.medium[i], triple.coarse[i]);
        let eps21 = f2 - f1;
        let eps32 = f3 - f2;
        let s = sign_s(eps32, eps21);
        let p_local = s.and_then(|_| observed_order(eps32, eps21, r21, r32).ok());
        if let (Some(p), Some(sv)) = (p_local, s) {
            if sv > 0.0 {
                accepted.push(p);
            } else {
                oscillatory.push(p);
            }
        }
        points.push(GciPoint {
            index: i,
            eps21,
            eps32,
            s: s.map_or(0, |v| v as i8),
            p_local,
            gci: None,
            gci_abs: 0.0,
            mu2: None,
        });
    }
    if accepted.is_empty() {
        // only oscillatory points converged: their orders are all there is
        accepted = oscillatory;
    }
    if accepted.is_empty() {
        if triple.fine == triple.medium {
            // identical fine and medium solutions carry no uncertainty
            return Ok(zero_report(triple, points));
        }
        return Err(GciError::AllPointsDegenerate);
    }
    let p_global = pairwise_sum(&accepted) / accepted.len() as f64;
    let denom = r21.powf(p_global) - 1.0;
    let mut excluded = 0;
    for pt in &mut points {
        let f1 = triple.fine[pt.index];
        pt.gci_abs = 1.25 * pt.eps21.abs() / denom;
        pt.gci = gci_fine(f1, f1 + pt.eps21, r21, p_global).ok();
        pt.mu2 = triple.second_moment_scale.map(|m| pt.gci_abs / m * 100.0);
        if pt.p_local.is_none() || pt.s < 0 || pt.gci.is_none() {
            excluded += 1;
        }
    }
    let gci_max = points.iter().filter_map(|p| p.gci).fold(0.0, f64::max);
    let mu2_max = triple
        .second_moment_scale
        .map(|_| points.iter().filter_map(|p| p.mu2).fold(0.0, f64::max));
    Ok(GciReport {
        r21,
        r32,
        p_global,
        excluded_fraction: excluded as f64 / n as f64,
        points,
        summary: GciSummary { gci_max, mu2_max },
    })
}

fn zero_report(triple: &GridTriple, mut points: Vec<GciPoint>) -> GciReport {
    for pt in &mut points {
        pt.gci = Some(0.0);
        pt.mu2 = triple.second_moment_scale.map(|_| 0.0);
    }
    GciReport {
        r21: triple.r21(),
        r32: triple.r32(),
        p_global: f64::NAN,
        excluded_fraction: 1.0,
        points,
        summary: GciSummary { gci_max: 0.0, mu2_max: triple.second_moment_scale.map(|_| 0.0) },
    }
}
