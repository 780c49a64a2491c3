//! Zeroth, first and centred second spatial moments, exact and numerical.

use crate::field::Field3;
use crate::quadrature::{newton_cotes_weights, pairwise_sum, CompensatedSum, NodeRule};
use crate::series::{alt, axis_rate, mode_rate, Coefficients, InitialCondition, SeriesSolution};
use crate::tensor::{diffusive_time_scales, OrthotropicModel};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Below this fraction of T*_x the initial-condition integrals replace the
/// moment series.
pub const INITIAL_SWITCH: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MomentError {
    #[error("moment quadrature needs at least three nodes per axis, got {0:?}")]
    GridTooCoarse([usize; 3]),
    #[error("invalid time {0:e}")]
    InvalidTime(f64),
}

/// Moments at one instant: mass (µg), mass-normalised first moments (m) and
/// centred second moments (m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub t: f64,
    pub m0: f64,
    /// (m_x, m_y, m_z).
    pub first: [f64; 3],
    /// (M_xx, M_yy, M_zz).
    pub second: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedMoments {
    pub t_star: f64,
    /// m_i / L.
    pub first: [f64; 3],
    /// M_ii / M∞.
    pub second: [f64; 3],
}

/// Moments of a sampled field, with the off-diagonal centred moments
/// (M_xy, M_xz, M_yz) and the rule that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericMoments {
    pub moments: MomentSet,
    pub off_diagonal: [f64; 3],
    pub rule: NodeRule,
}

/// ∫_0^L (x − L/2) cos(kπx/L) dx.
fn centred_first(k: usize, l: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        let kf = k as f64;
        l * l * (alt(k) - 1.0) / (kf * kf * PI * PI)
    }
}

/// ∫_0^L (x − L/2)² cos(kπx/L) dx.
fn centred_second(k: usize, l: f64) -> f64 {
    if k == 0 {
        l.powi(3) / 12.0
    } else {
        let kf = k as f64;
        l.powi(3) * (1.0 + alt(k)) / (kf * kf * PI * PI)
    }
}

/// Exact moments of the truncated series at time `t` (s).
///
/// Uses the same truncation as the field. For t below
/// `INITIAL_SWITCH`·T*_x the initial mass distribution is integrated in closed
/// form where one exists.
pub fn moments_analytic(sol: &SeriesSolution, t: f64) -> Result<MomentSet, MomentError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(MomentError::InvalidTime(t));
    }
    let model = &sol.model;
    let tx = diffusive_time_scales(model).tx;
    if t < INITIAL_SWITCH * tx {
        if let Some((first, second)) = sol.ic.moments(model) {
            return Ok(MomentSet { t, m0: 1.0, first, second });
        }
    }
    if let InitialCondition::Plane { kappa_y, kappa_z } = sol.ic {
        return Ok(plane_moments(model, kappa_y, kappa_z, sol.n_terms(), t));
    }
    Ok(series_moments(sol, t))
}

/// Moment integrals of each mode, valid for any coefficient set.
pub fn series_moments(sol: &SeriesSolution, t: f64) -> MomentSet {
    let model = &sol.model;
    let l = model.l;
    let c = 0.5 * l;
    match &sol.coeffs {
        Coefficients::Separable(co) => {
            let mut mass = [0.0; 3];
            let mut first = [0.0; 3];
            let mut second = [0.0; 3];
            for a in 0..3 {
                let coef = co.axis(a);
                let mut s1 = CompensatedSum::new();
                let mut s2 = CompensatedSum::new();
                for (k, &b) in coef.iter().enumerate() {
                    if b == 0.0 {
                        continue;
                    }
                    let e = (-axis_rate(a, k, model) * t).exp();
                    s1.add(b * e * centred_first(k, l));
                    s2.add(b * e * centred_second(k, l));
                }
                let i0 = l * coef[0];
                let shift = s1.value() / i0;
                mass[a] = i0;
                first[a] = c + shift;
                second[a] = s2.value() / i0 - shift * shift;
            }
            MomentSet { t, m0: mass[0] * mass[1] * mass[2], first, second }
        }
        Coefficients::General(g) => {
            let mut m0 = CompensatedSum::new();
            let mut s1 = [CompensatedSum::new(); 3];
            let mut s2 = [CompensatedSum::new(); 3];
            let l2 = l * l;
            for (&[i, j, k], &v) in &g.entries {
                let idx = [i, j, k];
                let nonzero = idx.iter().filter(|&&q| q > 0).count();
                if nonzero > 1 {
                    continue;
                }
                let e = (-mode_rate(i, j, k, model) * t).exp();
                if nonzero == 0 {
                    m0.add(v * e * l.powi(3));
                }
                for a in 0..3 {
                    let others_zero = (0..3).filter(|&b| b != a).all(|b| idx[b] == 0);
                    if others_zero {
                        s1[a].add(v * e * l2 * centred_first(idx[a], l));
                        s2[a].add(v * e * l2 * centred_second(idx[a], l));
                    }
                }
            }
            let m0 = m0.value();
            let mut first = [0.0; 3];
            let mut second = [0.0; 3];
            for a in 0..3 {
                let shift = s1[a].value() / m0;
                first[a] = c + shift;
                second[a] = s2[a].value() / m0 - shift * shift;
            }
            MomentSet { t, m0, first, second }
        }
    }
}

/// Closed-form plane-case moments:
/// m_i = (L/2)[1 + (w_i/K) Σ e_k 8((−1)^k − 1)²/(k⁴π⁴)] and
/// M_ii = L²/3 − L m_i + m_i² + (w_i/K) L² Σ e_k 8((−1)^k − 1)(−1)^k/(k⁴π⁴)
///        − (w_i/K) L m_i Σ e_k 8((−1)^k − 1)²/(k⁴π⁴),
/// with w = (1, κ_y, κ_z), K = 1 + κ_y + κ_z and every sum over the axis' own index.
pub fn plane_moments(model: &OrthotropicModel, kappa_y: f64, kappa_z: f64, n: usize, t: f64) -> MomentSet {
    let l = model.l;
    let k_sum = 1.0 + kappa_y + kappa_z;
    let w = [1.0, kappa_y, kappa_z];
    let mut first = [0.0; 3];
    let mut second = [0.0; 3];
    for a in 0..3 {
        let mut sq = CompensatedSum::new();
        let mut signed = CompensatedSum::new();
        for k in (1..=n).step_by(2) {
            let kf = k as f64;
            let e = (-axis_rate(a, k, model) * t).exp();
            let p4 = kf.powi(4) * PI.powi(4);
            let d = alt(k) - 1.0;
            sq.add(e * 8.0 * d * d / p4);
            signed.add(e * 8.0 * d * alt(k) / p4);
        }
        let f = w[a] / k_sum;
        let m = 0.5 * l * (1.0 + f * sq.value());
        first[a] = m;
        // (m − L/2)² − L²/4 + L²/3 = L²/3 − L m + m²
        let dm = m - 0.5 * l;
        second[a] = l * l / 12.0 + dm * dm + f * l * l * signed.value() - f * l * m * sq.value();
    }
    MomentSet { t, m0: 1.0, first, second }
}

pub fn normalize(ms: &MomentSet, model: &OrthotropicModel) -> NormalizedMoments {
    let tx = diffusive_time_scales(model).tx;
    let m_inf = model.m_inf();
    NormalizedMoments {
        t_star: ms.t / tx,
        first: ms.first.map(|v| v / model.l),
        second: ms.second.map(|v| v / m_inf),
    }
}

/// Quadrature moments of a node field: Simpson along axes with an odd node
/// count, trapezoid otherwise. Second moments are centred on the computed
/// first moments.
pub fn moments_numeric(field: &Field3) -> Result<NumericMoments, MomentError> {
    if field.dims.iter().any(|&n| n < 3) {
        return Err(MomentError::GridTooCoarse(field.dims));
    }
    let lengths = field.lengths();
    let mut rules = Vec::new();
    let weights: [Vec<f64>; 3] = [0, 1, 2].map(|a| {
        let (w, r) = newton_cotes_weights(field.dims[a], field.spacing[a]);
        rules.push(r);
        w
    });
    let coords: [Vec<f64>; 3] = [0, 1, 2].map(|a| {
        (0..field.dims[a]).map(|i| field.coord(a, i) - 0.5 * lengths[a]).collect()
    });
    let rule = if rules.iter().all(|r| *r == NodeRule::Simpson) {
        NodeRule::Simpson
    } else {
        NodeRule::Trapezoid
    };
    Ok(weighted_moments(&field.data, field.dims, &coords, &weights, lengths, field.time, rule))
}

/// Midpoint-rule moments of cell averages on a uniform box grid.
pub fn moments_cells(values: &[f64], cells: [usize; 3], lengths: [f64; 3], t: f64) -> NumericMoments {
    let h = [0, 1, 2].map(|a| lengths[a] / cells[a] as f64);
    let coords: [Vec<f64>; 3] =
        [0, 1, 2].map(|a| (0..cells[a]).map(|i| (i as f64 + 0.5) * h[a] - 0.5 * lengths[a]).collect());
    let weights: [Vec<f64>; 3] = [0, 1, 2].map(|a| vec![h[a]; cells[a]]);
    weighted_moments(values, cells, &coords, &weights, lengths, t, NodeRule::Midpoint)
}

fn weighted_moments(
    data: &[f64],
    dims: [usize; 3],
    rel: &[Vec<f64>; 3],
    w: &[Vec<f64>; 3],
    lengths: [f64; 3],
    t: f64,
    rule: NodeRule,
) -> NumericMoments {
    let (nx, ny) = (dims[0], dims[1]);
    // per-slab: [s0, sx, sy, sz, sxx, syy, szz, sxy, sxz, syz]
    let slabs: Vec<[f64; 10]> = data
        .par_chunks(nx * ny)
        .enumerate()
        .map(|(k, slab)| {
            let (z, wz) = (rel[2][k], w[2][k]);
            let mut s = [0.0; 10];
            for j in 0..ny {
                let row = &slab[j * nx..(j + 1) * nx];
                let (mut r0, mut r1, mut r2) = (0.0, 0.0, 0.0);
                for i in 0..nx {
                    let v = w[0][i] * row[i];
                    let x = rel[0][i];
                    r0 += v;
                    r1 += v * x;
                    r2 += v * x * x;
                }
                let (y, wy) = (rel[1][j], w[1][j]);
                s[0] += wy * r0;
                s[1] += wy * r1;
                s[2] += wy * y * r0;
                s[4] += wy * r2;
                s[5] += wy * y * y * r0;
                s[7] += wy * y * r1;
            }
            [
                wz * s[0],
                wz * s[1],
                wz * s[2],
                wz * z * s[0],
                wz * s[4],
                wz * s[5],
                wz * z * z * s[0],
                wz * s[7],
                wz * z * s[1],
                wz * z * s[2],
            ]
        })
        .collect();
    let total: [f64; 10] = std::array::from_fn(|q| {
        let col: Vec<f64> = slabs.iter().map(|s| s[q]).collect();
        pairwise_sum(&col)
    });
    let m0 = total[0];
    let shift = [total[1] / m0, total[2] / m0, total[3] / m0];
    let first = [0, 1, 2].map(|a| 0.5 * lengths[a] + shift[a]);
    let second = [0, 1, 2].map(|a| total[4 + a] / m0 - shift[a] * shift[a]);
    let off_diagonal = [
        total[7] / m0 - shift[0] * shift[1],
        total[8] / m0 - shift[0] * shift[2],
        total[9] / m0 - shift[1] * shift[2],
    ];
    NumericMoments { moments: MomentSet { t, m0, first, second }, off_diagonal, rule }
}
