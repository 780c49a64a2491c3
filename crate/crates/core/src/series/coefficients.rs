//! Fourier coefficients of the triple-cosine expansion.

use super::initial::{axis_d, InitialCondition};
use super::SeriesError;
use crate::quadrature::composite_rule;
use crate::special::{erf, erf_re_damped};
use crate::tensor::OrthotropicModel;
use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

/// Per-axis coefficients of a product initial condition (1/m each).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableCoefficients {
    pub b: Vec<f64>,
    pub h: Vec<f64>,
    pub s: Vec<f64>,
}

impl SeparableCoefficients {
    pub fn n_terms(&self) -> usize {
        self.b.len() - 1
    }

    pub fn axis(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.b,
            1 => &self.h,
            _ => &self.s,
        }
    }

    /// Equivalent full coefficient B̄_lmn = B_l H_m S_n (1/m³).
    pub fn product(&self, l: usize, m: usize, n: usize) -> f64 {
        self.b[l] * self.h[m] * self.s[n]
    }
}

/// Sparse B̄_lmn (1/m³), iterated in ascending (l, m, n) order.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralCoefficients {
    pub n_terms: usize,
    pub entries: BTreeMap<[usize; 3], f64>,
}

impl GeneralCoefficients {
    pub fn get(&self, l: usize, m: usize, n: usize) -> f64 {
        self.entries.get(&[l, m, n]).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Coefficients {
    Separable(SeparableCoefficients),
    General(GeneralCoefficients),
}

impl Coefficients {
    pub fn n_terms(&self) -> usize {
        match self {
            Self::Separable(c) => c.n_terms(),
            Self::General(c) => c.n_terms,
        }
    }

    pub fn get(&self, l: usize, m: usize, n: usize) -> f64 {
        match self {
            Self::Separable(c) => c.product(l, m, n),
            Self::General(c) => c.get(l, m, n),
        }
    }
}

/// Decay rate of mode (l, m, n): (l² + m²/d²_yy + n²/d²_zz)·π²·D_xx/L² (1/s).
pub fn mode_rate(l: usize, m: usize, n: usize, model: &OrthotropicModel) -> f64 {
    let (l, m, n) = (l as f64, m as f64, n as f64);
    (l * l + m * m / model.dyy2 + n * n / model.dzz2) * PI * PI * model.dxx / (model.l * model.l)
}

/// Rate of the single-axis mode k along `axis`.
pub fn axis_rate(axis: usize, k: usize, model: &OrthotropicModel) -> f64 {
    match axis {
        0 => mode_rate(k, 0, 0, model),
        1 => mode_rate(0, k, 0, model),
        _ => mode_rate(0, 0, k, model),
    }
}

/// cos(kπ/2) without rounding: 0, ±1.
pub(crate) fn cos_half_pi(k: usize) -> f64 {
    match k % 4 {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

/// (−1)^k.
pub(crate) fn alt(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn separable_from(model: &OrthotropicModel, n: usize, f: impl Fn(usize, usize) -> f64) -> SeparableCoefficients {
    let axis = |a: usize| {
        (0..=n)
            .map(|k| if k == 0 { 1.0 / model.l } else { f(a, k) })
            .collect::<Vec<_>>()
    };
    SeparableCoefficients { b: axis(0), h: axis(1), s: axis(2) }
}

/// B_l = (2/L)·cos(lπ/2), identical on every axis.
pub fn coefficients_delta(model: &OrthotropicModel, n: usize) -> SeparableCoefficients {
    separable_from(model, n, |_, k| 2.0 / model.l * cos_half_pi(k))
}

/// B_l = 4·cos(lπ/2)·sin(πal/(2L))/(πal).
pub fn coefficients_step(model: &OrthotropicModel, a: f64, n: usize) -> Result<SeparableCoefficients, SeriesError> {
    InitialCondition::Step { a }.validate(model)?;
    Ok(separable_from(model, n, |_, k| {
        let kf = k as f64;
        let c = cos_half_pi(k);
        if c == 0.0 {
            0.0
        } else {
            4.0 * c * (PI * a * kf / (2.0 * model.l)).sin() / (PI * a * kf)
        }
    }))
}

/// B_l = (2/L)·Re erf(x₀ + i y_l)·exp(−y_l²)/erf(x₀)·cos(lπ/2) with
/// x₀ = d L/(2√2 σ_x) and y_l = π l σ_x/(√2 L d), d = 1, d_yy, d_zz.
pub fn coefficients_gaussian(model: &OrthotropicModel, sigma_x: f64, n: usize) -> Result<SeparableCoefficients, SeriesError> {
    InitialCondition::TruncatedGaussian { sigma_x }.validate(model)?;
    let l = model.l;
    Ok(separable_from(model, n, |axis, k| {
        let c = cos_half_pi(k);
        if c == 0.0 {
            return 0.0;
        }
        let d = axis_d(model, axis);
        let x0 = d * l / (2.0 * SQRT_2 * sigma_x);
        let y = PI * k as f64 * sigma_x / (SQRT_2 * l * d);
        2.0 / l * erf_re_damped(x0, y) / erf(x0) * c
    }))
}

/// Only (l,0,0), (0,m,0), (0,0,n) entries are nonzero:
/// B̄_l00 = 4((−1)^l − 1)/(K l² π² L³), weighted by 1, κ_y, κ_z; B̄_000 = 1/L³.
pub fn coefficients_plane(
    model: &OrthotropicModel,
    kappa_y: f64,
    kappa_z: f64,
    n: usize,
) -> Result<GeneralCoefficients, SeriesError> {
    InitialCondition::Plane { kappa_y, kappa_z }.validate(model)?;
    let l3 = model.l.powi(3);
    let k = 1.0 + kappa_y + kappa_z;
    let weights = [1.0, kappa_y, kappa_z];
    let mut entries = BTreeMap::new();
    entries.insert([0, 0, 0], 1.0 / l3);
    for j in 1..=n {
        let jf = j as f64;
        let base = 4.0 * (alt(j) - 1.0) / (jf * jf * PI * PI) / l3 / k;
        for (axis, w) in weights.iter().enumerate() {
            let mut idx = [0; 3];
            idx[axis] = j;
            entries.insert(idx, w * base);
        }
    }
    Ok(GeneralCoefficients { n_terms: n, entries })
}

/// Closed-form coefficients for a built-in initial condition; custom
/// samplers go through quadrature.
pub fn coefficients_closed_form(
    ic: &InitialCondition,
    model: &OrthotropicModel,
    n: usize,
) -> Result<Coefficients, SeriesError> {
    match *ic {
        InitialCondition::Delta => Ok(Coefficients::Separable(coefficients_delta(model, n))),
        InitialCondition::Step { a } => Ok(Coefficients::Separable(coefficients_step(model, a, n)?)),
        InitialCondition::TruncatedGaussian { sigma_x } => {
            Ok(Coefficients::Separable(coefficients_gaussian(model, sigma_x, n)?))
        }
        InitialCondition::Plane { kappa_y, kappa_z } => {
            Ok(Coefficients::General(coefficients_plane(model, kappa_y, kappa_z, n)?))
        }
        _ => {
            let q = coefficients_quadrature(ic, model, n, &QuadratureOptions::default())?;
            Ok(q.into_coefficients(ic.is_separable()))
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Stop refining once every coefficient changes by less than this, relative.
    pub rel_change: f64,
    /// Failure threshold on the final error estimate, relative.
    pub fail_rel: f64,
    /// Absolute floor, in units of 1/L³ (1/L per axis for separable sweeps).
    pub abs_floor: f64,
    pub max_level: u32,
    /// σ/L of the Gaussian standing in for the delta.
    pub delta_surrogate: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_change: 1e-10, fail_rel: 1e-8, abs_floor: 1e-12, max_level: 10, delta_surrogate: 1e-4 }
    }
}

/// Quadrature estimates of B̄_lmn with per-entry error estimates.
#[derive(Debug, Clone)]
pub struct QuadratureCoefficients {
    pub n_terms: usize,
    /// Dense `(n+1)³` array indexed `l + (n+1)(m + (n+1) n)`.
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Per-axis factors when the sweep was separable.
    pub separable: Option<SeparableCoefficients>,
    pub level: u32,
}

impl QuadratureCoefficients {
    fn idx(&self, l: usize, m: usize, n: usize) -> usize {
        let s = self.n_terms + 1;
        l + s * (m + s * n)
    }

    pub fn value(&self, l: usize, m: usize, n: usize) -> f64 {
        self.values[self.idx(l, m, n)]
    }

    pub fn error(&self, l: usize, m: usize, n: usize) -> f64 {
        self.errors[self.idx(l, m, n)]
    }

    pub fn into_coefficients(self, prefer_separable: bool) -> Coefficients {
        if let (true, Some(s)) = (prefer_separable, self.separable.clone()) {
            return Coefficients::Separable(s);
        }
        let s = self.n_terms + 1;
        let mut entries = BTreeMap::new();
        for n in 0..s {
            for m in 0..s {
                for l in 0..s {
                    let v = self.value(l, m, n);
                    if v != 0.0 {
                        entries.insert([l, m, n], v);
                    }
                }
            }
        }
        Coefficients::General(GeneralCoefficients { n_terms: self.n_terms, entries })
    }
}

/// B̄_lmn = (2^{N₀}/L³)·∭ Φ cos(lπx/L) cos(mπy/L) cos(nπz/L) by composite
/// 16-point Gauss–Legendre, refined by uniform panel bisection.
///
/// Product densities are integrated one axis at a time; the delta is
/// replaced by a narrow truncated Gaussian.
pub fn coefficients_quadrature(
    ic: &InitialCondition,
    model: &OrthotropicModel,
    n: usize,
    opts: &QuadratureOptions,
) -> Result<QuadratureCoefficients, SeriesError> {
    ic.validate(model)?;
    let surrogate;
    let ic = if matches!(ic, InitialCondition::Delta) {
        surrogate = InitialCondition::TruncatedGaussian { sigma_x: opts.delta_surrogate * model.l };
        &surrogate
    } else {
        ic
    };
    if ic.is_separable() {
        separable_quadrature(ic, model, n, opts)
    } else {
        general_quadrature(ic, model, n, opts)
    }
}

fn cos_weight(k: usize) -> f64 {
    if k == 0 {
        1.0
    } else {
        2.0
    }
}

fn separable_quadrature(
    ic: &InitialCondition,
    model: &OrthotropicModel,
    n: usize,
    opts: &QuadratureOptions,
) -> Result<QuadratureCoefficients, SeriesError> {
    let l = model.l;
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut axis_err: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut max_level = 0;
    for axis in 0..3 {
        let bps = ic.breakpoints(model, axis);
        let sweep = |level: u32| -> Vec<f64> {
            let (x, w) = composite_rule(0.0, l, &bps, level);
            let phi: Vec<f64> = x.iter().map(|&x| ic.profile_value(model, axis, x).unwrap()).collect();
            (0..=n)
                .map(|k| {
                    let kf = k as f64;
                    let s: f64 = x
                        .iter()
                        .zip(&w)
                        .zip(&phi)
                        .map(|((&x, &w), &p)| w * p * (kf * PI * (x / l)).cos())
                        .sum();
                    cos_weight(k) / l * s
                })
                .collect()
        };
        let (vals, errs, level) = refine(sweep, opts, 1.0 / l, opts.max_level);
        max_level = max_level.max(level);
        let floor = opts.abs_floor / l;
        if let Some(k) = (0..=n).find(|&k| errs[k] > (opts.fail_rel * vals[k].abs()).max(floor)) {
            let mut index = [0; 3];
            index[axis] = k;
            return Err(SeriesError::QuadratureNotConverged { index, estimate: errs[k] });
        }
        axes.push(vals);
        axis_err.push(errs);
    }
    let s = n + 1;
    let mut values = vec![0.0; s * s * s];
    let mut errors = vec![0.0; s * s * s];
    for k in 0..s {
        for j in 0..s {
            for i in 0..s {
                let idx = i + s * (j + s * k);
                let (a, b, c) = (axes[0][i], axes[1][j], axes[2][k]);
                values[idx] = a * b * c;
                errors[idx] = axis_err[0][i] * (b * c).abs()
                    + axis_err[1][j] * (a * c).abs()
                    + axis_err[2][k] * (a * b).abs();
            }
        }
    }
    let [b, h, s_] = [0, 1, 2].map(|a| axes[a].clone());
    Ok(QuadratureCoefficients {
        n_terms: n,
        values,
        errors,
        separable: Some(SeparableCoefficients { b, h, s: s_ }),
        level: max_level,
    })
}

fn general_quadrature(
    ic: &InitialCondition,
    model: &OrthotropicModel,
    n: usize,
    opts: &QuadratureOptions,
) -> Result<QuadratureCoefficients, SeriesError> {
    let l = model.l;
    let bps: [Vec<f64>; 3] = [0, 1, 2].map(|a| ic.breakpoints(model, a));
    let s = n + 1;
    let sweep = |level: u32| -> Vec<f64> {
        let rules: Vec<(Vec<f64>, Vec<f64>)> =
            (0..3).map(|a| composite_rule(0.0, l, &bps[a], level)).collect();
        let [my, mz] = [1, 2].map(|a| rules[a].0.len());
        // weighted cosine tables: t[a][k][i] = w_i cos(kπx_i/L)
        let tables: Vec<Vec<Vec<f64>>> = rules
            .iter()
            .map(|(x, w)| {
                (0..s)
                    .map(|k| x.iter().zip(w).map(|(&x, &w)| w * (k as f64 * PI * (x / l)).cos()).collect())
                    .collect()
            })
            .collect();
        let mut a1 = vec![0.0; s * my * mz];
        for kz in 0..mz {
            for jy in 0..my {
                let row: Vec<f64> = rules[0]
                    .0
                    .iter()
                    .map(|&x| ic.density(model, [x, rules[1].0[jy], rules[2].0[kz]]).unwrap())
                    .collect();
                for li in 0..s {
                    let t = &tables[0][li];
                    a1[li + s * (jy + my * kz)] = row.iter().zip(t).map(|(p, c)| p * c).sum();
                }
            }
        }
        let mut a2 = vec![0.0; s * s * mz];
        for kz in 0..mz {
            for m in 0..s {
                for li in 0..s {
                    a2[li + s * (m + s * kz)] =
                        (0..my).map(|jy| a1[li + s * (jy + my * kz)] * tables[1][m][jy]).sum();
                }
            }
        }
        let mut out = vec![0.0; s * s * s];
        for nn in 0..s {
            for m in 0..s {
                for li in 0..s {
                    let v: f64 = (0..mz).map(|kz| a2[li + s * (m + s * kz)] * tables[2][nn][kz]).sum();
                    out[li + s * (m + s * nn)] = cos_weight(li) * cos_weight(m) * cos_weight(nn) / l.powi(3) * v;
                }
            }
        }
        out
    };
    let (values, errors, level) = refine(sweep, opts, 1.0 / l.powi(3), opts.max_level.min(5));
    let floor = opts.abs_floor / l.powi(3);
    if let Some(i) = (0..values.len()).find(|&i| errors[i] > (opts.fail_rel * values[i].abs()).max(floor)) {
        let index = [i % s, (i / s) % s, i / (s * s)];
        return Err(SeriesError::QuadratureNotConverged { index, estimate: errors[i] });
    }
    Ok(QuadratureCoefficients { n_terms: n, values, errors, separable: None, level })
}

/// Doubles the panel count until successive estimates agree.
fn refine(
    sweep: impl Fn(u32) -> Vec<f64>,
    opts: &QuadratureOptions,
    unit: f64,
    max_level: u32,
) -> (Vec<f64>, Vec<f64>, u32) {
    let floor = opts.abs_floor * unit;
    let mut prev = sweep(0);
    for level in 1..=max_level {
        let cur = sweep(level);
        let errs: Vec<f64> = cur.iter().zip(&prev).map(|(a, b)| (a - b).abs()).collect();
        let done = cur
            .iter()
            .zip(&errs)
            .all(|(v, e)| *e <= (opts.rel_change * v.abs()).max(floor));
        if done || level == max_level {
            return (cur, errs, level);
        }
        prev = cur;
    }
    let n = prev.len();
    (prev, vec![f64::INFINITY; n], 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> OrthotropicModel {
        OrthotropicModel::reference()
    }

    #[test]
    fn mode_rates() {
        let m = model();
        assert_eq!(mode_rate(0, 0, 0, &m), 0.0);
        let r = mode_rate(1, 0, 0, &m);
        assert!((r - PI * PI * 1e-9 / 1e-4).abs() < 1e-18);
        assert!((r - 9.8696e-5).abs() < 1e-9);
        assert!((mode_rate(0, 1, 0, &m) - r / m.dyy2).abs() < 1e-20);
    }

    #[test]
    fn delta_closed_form() {
        let m = model();
        let c = coefficients_delta(&m, 4);
        assert_eq!(c.b[0], 1.0 / m.l);
        assert_eq!(c.b[1], 0.0);
        assert_eq!(c.b[2], -2.0 / m.l);
        assert_eq!(c.s[4], 2.0 / m.l);
    }

    #[test]
    fn step_closed_form() {
        let m = model();
        let c = coefficients_step(&m, 0.5 * m.l, 6).unwrap();
        assert!((c.b[2] + 4.0 / (PI * m.l)).abs() < 1e-12 / m.l);
        assert_eq!(c.b[3], 0.0);
        let full = coefficients_step(&m, m.l, 6).unwrap();
        assert!(full.b[1..].iter().all(|v| v.abs() < 1e-13 / m.l));
        assert!(coefficients_step(&m, 0.0, 3).is_err());
    }

    #[test]
    fn plane_closed_form() {
        let m = model();
        let c = coefficients_plane(&m, 20.0, 40.0, 5).unwrap();
        let l3 = m.l.powi(3);
        assert!((c.get(1, 0, 0) * l3 - (1.0 / 61.0) * (-8.0 / (PI * PI))).abs() < 1e-15);
        assert_eq!(c.get(2, 0, 0), 0.0);
        assert_eq!(c.get(1, 1, 0), 0.0);
        assert_eq!(c.get(0, 0, 0), 1.0 / l3);
    }

    #[test]
    fn gaussian_odd_modes_vanish() {
        let m = model();
        let c = coefficients_gaussian(&m, 0.1 * m.l, 5).unwrap();
        assert_eq!(c.b[1], 0.0);
        assert_eq!(c.h[3], 0.0);
        assert_eq!(c.s[0], 1.0 / m.l);
    }

    #[test]
    fn uniform_density_projects_on_constant_mode() {
        let m = model();
        let l3 = m.l.powi(3);
        let ic = InitialCondition::CustomGeneral(super::super::initial::GeneralSampler {
            density: std::sync::Arc::new(move |_, _, _| 1.0 / l3),
            breakpoints: [vec![], vec![], vec![]],
        });
        let q = coefficients_quadrature(&ic, &m, 4, &QuadratureOptions::default()).unwrap();
        assert!((q.value(0, 0, 0) * l3 - 1.0).abs() < 1e-13);
        for i in 1..q.values.len() {
            assert!(q.values[i].abs() * l3 < 1e-13);
        }
    }
}
