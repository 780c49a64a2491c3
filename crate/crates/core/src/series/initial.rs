//! Initial conditions, their exact integrals and closed-form moments.

use super::SeriesError;
use crate::quadrature::gauss_legendre;
use crate::special::erf;
use crate::tensor::OrthotropicModel;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Density = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Product density Φx(x)·Φy(y)·Φz(z) supplied by the caller.
#[derive(Clone)]
pub struct SeparableSampler {
    pub profiles: [Profile; 3],
    /// Interior points where a profile is not smooth (used as panel edges).
    pub breakpoints: [Vec<f64>; 3],
}

/// Arbitrary bounded density supplied by the caller.
#[derive(Clone)]
pub struct GeneralSampler {
    pub density: Density,
    pub breakpoints: [Vec<f64>; 3],
}

/// Initial concentration Φ (µg/m³). Built-in variants carry unit mass.
#[derive(Clone)]
pub enum InitialCondition {
    /// Unit point mass at the cube centre.
    Delta,
    /// Centred cube of side `a` with height 1/a³.
    Step { a: f64 },
    /// Centred Gaussian with widths σ_x, σ_x/d_yy, σ_x/d_zz, truncated to the
    /// cube and renormalised.
    TruncatedGaussian { sigma_x: f64 },
    /// 2(x + κ_y y + κ_z z) / (L⁴ (1 + κ_y + κ_z)).
    Plane { kappa_y: f64, kappa_z: f64 },
    CustomSeparable(SeparableSampler),
    CustomGeneral(GeneralSampler),
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Delta => write!(f, "Delta"),
            Self::Step { a } => write!(f, "Step {{ a: {a:e} }}"),
            Self::TruncatedGaussian { sigma_x } => {
                write!(f, "TruncatedGaussian {{ sigma_x: {sigma_x:e} }}")
            }
            Self::Plane { kappa_y, kappa_z } => {
                write!(f, "Plane {{ kappa_y: {kappa_y}, kappa_z: {kappa_z} }}")
            }
            Self::CustomSeparable(_) => write!(f, "CustomSeparable(..)"),
            Self::CustomGeneral(_) => write!(f, "CustomGeneral(..)"),
        }
    }
}

/// Per-axis standard deviation scale: 1, d_yy, d_zz.
pub(crate) fn axis_d(model: &OrthotropicModel, axis: usize) -> f64 {
    match axis {
        0 => 1.0,
        1 => model.dyy2.sqrt(),
        _ => model.dzz2.sqrt(),
    }
}

impl InitialCondition {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Delta => "delta",
            Self::Step { .. } => "step",
            Self::TruncatedGaussian { .. } => "gaussian",
            Self::Plane { .. } => "plane",
            Self::CustomSeparable(_) => "custom-separable",
            Self::CustomGeneral(_) => "custom-general",
        }
    }

    pub fn is_separable(&self) -> bool {
        !matches!(self, Self::Plane { .. } | Self::CustomGeneral(_))
    }

    /// Symmetric about the cube centre in every axis (Cases 1–3).
    pub fn is_centrally_symmetric(&self) -> bool {
        matches!(self, Self::Delta | Self::Step { .. } | Self::TruncatedGaussian { .. })
    }

    pub fn validate(&self, model: &OrthotropicModel) -> Result<(), SeriesError> {
        match *self {
            Self::Step { a } => {
                if !(a > 0.0 && a <= model.l) {
                    return Err(SeriesError::BadExtent { name: "a", value: a, max: model.l });
                }
            }
            Self::TruncatedGaussian { sigma_x } => {
                if !(sigma_x > 0.0 && sigma_x.is_finite()) {
                    return Err(SeriesError::InvalidParameter { name: "sigma_x", value: sigma_x });
                }
            }
            Self::Plane { kappa_y, kappa_z } => {
                for (name, value) in [("kappa_y", kappa_y), ("kappa_z", kappa_z)] {
                    if !(value >= 0.0 && value.is_finite()) {
                        return Err(SeriesError::InvalidParameter { name, value });
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Point value of Φ; `None` for the delta.
    pub fn density(&self, model: &OrthotropicModel, p: [f64; 3]) -> Option<f64> {
        match self {
            Self::Delta => None,
            Self::Plane { kappa_y, kappa_z } => {
                let l = model.l;
                let k = 1.0 + kappa_y + kappa_z;
                Some(2.0 / (l.powi(4) * k) * (p[0] + kappa_y * p[1] + kappa_z * p[2]))
            }
            Self::CustomGeneral(s) => Some((s.density)(p[0], p[1], p[2])),
            _ => {
                let mut v = 1.0;
                for (axis, &x) in p.iter().enumerate() {
                    v *= self.profile_value(model, axis, x)?;
                }
                Some(v)
            }
        }
    }

    /// One-dimensional factor Φ_axis of a separable density.
    pub fn profile_value(&self, model: &OrthotropicModel, axis: usize, x: f64) -> Option<f64> {
        let c = 0.5 * model.l;
        match self {
            Self::Step { a } => Some(if (x - c).abs() <= 0.5 * a { 1.0 / a } else { 0.0 }),
            Self::TruncatedGaussian { sigma_x } => {
                let s = sigma_x / axis_d(model, axis);
                let norm = (2.0 * PI).sqrt() * s * erf(model.l / (2.0 * SQRT_2 * s));
                Some((-(x - c).powi(2) / (2.0 * s * s)).exp() / norm)
            }
            Self::CustomSeparable(s) => Some((s.profiles[axis])(x)),
            _ => None,
        }
    }

    /// Interior panel edges for quadrature along `axis`.
    pub fn breakpoints(&self, model: &OrthotropicModel, axis: usize) -> Vec<f64> {
        let c = 0.5 * model.l;
        match self {
            Self::Step { a } => vec![c - 0.5 * a, c + 0.5 * a],
            Self::TruncatedGaussian { sigma_x } => {
                let s = sigma_x / axis_d(model, axis);
                let mut v = vec![c];
                for k in [0.5, 1.0, 2.0, 4.0, 8.0, 16.0] {
                    v.push(c - k * s);
                    v.push(c + k * s);
                }
                v.retain(|&p| p > 0.0 && p < model.l);
                v
            }
            Self::CustomSeparable(s) => s.breakpoints[axis].clone(),
            Self::CustomGeneral(s) => s.breakpoints[axis].clone(),
            _ => Vec::new(),
        }
    }

    /// ∫_lo^hi Φ_axis for a separable density.
    fn profile_integral(&self, model: &OrthotropicModel, axis: usize, lo: f64, hi: f64) -> f64 {
        let c = 0.5 * model.l;
        match self {
            Self::Delta => {
                let tol = 1e-12 * model.l;
                if (c - lo).abs() <= tol || (c - hi).abs() <= tol {
                    0.5
                } else if lo < c && c < hi {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Step { a } => {
                let overlap = hi.min(c + 0.5 * a) - lo.max(c - 0.5 * a);
                overlap.max(0.0) / a
            }
            Self::TruncatedGaussian { sigma_x } => {
                let s = sigma_x / axis_d(model, axis);
                let k = SQRT_2 * s;
                (erf((hi - c) / k) - erf((lo - c) / k)) / (2.0 * erf(model.l / (2.0 * k)))
            }
            Self::CustomSeparable(s) => gauss_integral_1d(&*s.profiles[axis], lo, hi, 8),
            _ => unreachable!("not separable"),
        }
    }

    /// Mass inside the box `[lo, hi]` (a subset of the cube).
    pub fn box_integral(&self, model: &OrthotropicModel, lo: [f64; 3], hi: [f64; 3]) -> f64 {
        let vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
        match self {
            Self::Plane { .. } => {
                let mid = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
                vol * self.density(model, mid).unwrap()
            }
            Self::CustomGeneral(s) => {
                let (gx, gw) = gauss_legendre(4);
                let mut acc = 0.0;
                let half = [0, 1, 2].map(|a| 0.5 * (hi[a] - lo[a]));
                let mid = [0, 1, 2].map(|a| 0.5 * (lo[a] + hi[a]));
                for (xk, wk) in gx.iter().zip(&gw) {
                    for (xj, wj) in gx.iter().zip(&gw) {
                        for (xi, wi) in gx.iter().zip(&gw) {
                            acc += wi * wj * wk
                                * (s.density)(
                                    mid[0] + half[0] * xi,
                                    mid[1] + half[1] * xj,
                                    mid[2] + half[2] * xk,
                                );
                        }
                    }
                }
                acc * half[0] * half[1] * half[2]
            }
            _ => (0..3).map(|a| self.profile_integral(model, a, lo[a], hi[a])).product(),
        }
    }

    /// Exact (first moments, centred second moments) of the initial mass
    /// distribution, where a closed form exists.
    pub fn moments(&self, model: &OrthotropicModel) -> Option<([f64; 3], [f64; 3])> {
        let l = model.l;
        let c = 0.5 * l;
        match *self {
            Self::Delta => Some(([c; 3], [0.0; 3])),
            Self::Step { a } => Some(([c; 3], [a * a / 12.0; 3])),
            Self::TruncatedGaussian { sigma_x } => {
                let var = [0, 1, 2].map(|axis| {
                    let s = sigma_x / axis_d(model, axis);
                    let u = c / s;
                    let tail = 2.0 * u * (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
                    s * s * (1.0 - tail / erf(u / SQRT_2))
                });
                Some(([c; 3], var))
            }
            Self::Plane { kappa_y, kappa_z } => {
                let k = 1.0 + kappa_y + kappa_z;
                let w = [1.0, kappa_y, kappa_z];
                let mut first = [0.0; 3];
                let mut second = [0.0; 3];
                for axis in 0..3 {
                    let rest = k - w[axis];
                    let m1 = 2.0 * l / k * (w[axis] / 3.0 + rest / 4.0);
                    let m2 = 2.0 * l * l / k * (w[axis] / 4.0 + rest / 6.0);
                    first[axis] = m1;
                    // about the centre first, to avoid cancellation
                    let dc = m1 - c;
                    let about_centre = m2 - l * m1 + c * c;
                    second[axis] = about_centre - dc * dc;
                }
                Some((first, second))
            }
            _ => None,
        }
    }
}

fn gauss_integral_1d(f: &(dyn Fn(f64) -> f64 + Send + Sync), lo: f64, hi: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    half * x.iter().zip(&w).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> OrthotropicModel {
        OrthotropicModel::reference()
    }

    fn builtins() -> Vec<InitialCondition> {
        let l = model().l;
        vec![
            InitialCondition::Delta,
            InitialCondition::Step { a: 0.5 * l },
            InitialCondition::TruncatedGaussian { sigma_x: 0.1 * l },
            InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 },
        ]
    }

    #[test]
    fn whole_cube_integral_is_unit_mass() {
        let m = model();
        for ic in builtins() {
            let mass = ic.box_integral(&m, [0.0; 3], [m.l; 3]);
            assert!((mass - 1.0).abs() < 1e-14, "{ic:?}: {mass}");
        }
    }

    #[test]
    fn delta_splits_between_cells_sharing_the_centre() {
        let m = model();
        let c = 0.5 * m.l;
        let v = InitialCondition::Delta.box_integral(&m, [0.0; 3], [c; 3]);
        assert_eq!(v, 0.125);
    }

    #[test]
    fn step_validation() {
        let m = model();
        assert!(InitialCondition::Step { a: 0.0 }.validate(&m).is_err());
        assert!(InitialCondition::Step { a: 1.01 * m.l }.validate(&m).is_err());
        assert!(InitialCondition::Step { a: m.l }.validate(&m).is_ok());
        assert!(InitialCondition::Plane { kappa_y: -1.0, kappa_z: 0.0 }.validate(&m).is_err());
    }

    #[test]
    fn plane_initial_first_moment() {
        let m = model();
        let (first, second) = InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 }
            .moments(&m)
            .unwrap();
        assert!((first[0] / m.l - 92.0 / 183.0).abs() < 1e-15);
        // direct integration by quadrature of x Φ and (x - m)² Φ
        let ic = InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 };
        for axis in 0..3 {
            let (x, w) = gauss_legendre(6);
            let mut m1 = 0.0;
            let mut m2 = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                for (xj, wj) in x.iter().zip(&w) {
                    for (xk, wk) in x.iter().zip(&w) {
                        let p = [0.5 * m.l * (1.0 + xi), 0.5 * m.l * (1.0 + xj), 0.5 * m.l * (1.0 + xk)];
                        let wt = wi * wj * wk * (0.5 * m.l).powi(3) * ic.density(&m, p).unwrap();
                        m1 += wt * p[axis];
                        m2 += wt * (p[axis] - first[axis]).powi(2);
                    }
                }
            }
            assert!((m1 - first[axis]).abs() < 1e-15);
            assert!((m2 - second[axis]).abs() < 1e-18);
        }
    }

    #[test]
    fn truncated_gaussian_variance_matches_quadrature() {
        let m = model();
        let ic = InitialCondition::TruncatedGaussian { sigma_x: 0.3 * m.l };
        let (_, var) = ic.moments(&m).unwrap();
        for axis in 0..3 {
            let f = |x: f64| (x - 0.5 * m.l).powi(2) * ic.profile_value(&m, axis, x).unwrap();
            let v = crate::quadrature::integrate_adaptive(&f, 0.0, m.l, 1e-20);
            assert!((v - var[axis]).abs() < 1e-12 * var[axis], "{axis}");
        }
    }
}
