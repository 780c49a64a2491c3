//! Truncated triple-cosine series solutions and the free-space point source.

mod coefficients;
mod initial;

pub use coefficients::{
    axis_rate, coefficients_closed_form, coefficients_delta, coefficients_gaussian, coefficients_plane,
    coefficients_quadrature, coefficients_step, mode_rate, Coefficients, GeneralCoefficients,
    QuadratureCoefficients, QuadratureOptions, SeparableCoefficients,
};
pub(crate) use coefficients::alt;
pub use initial::{Density, GeneralSampler, InitialCondition, Profile, SeparableSampler};

use crate::field::Field3;
use crate::quadrature::CompensatedSum;
use crate::tensor::OrthotropicModel;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("{name} = {value:e} must lie in (0, {max:e}]")]
    BadExtent { name: &'static str, value: f64, max: f64 },
    #[error("invalid {name} = {value:e}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("the delta series does not converge pointwise at t = 0")]
    DeltaAtZeroTime,
    #[error("time must be positive, got {0:e}")]
    NonPositiveTime(f64),
    #[error("point {0:?} lies outside the cube")]
    OutOfDomain([f64; 3]),
    #[error("grid needs at least two nodes per axis, got {0:?}")]
    BadDims([usize; 3]),
    #[error("coefficient {index:?} did not converge (error estimate {estimate:e})")]
    QuadratureNotConverged { index: [usize; 3], estimate: f64 },
}

/// A truncated series solution, immutable once built.
#[derive(Debug, Clone)]
pub struct SeriesSolution {
    pub model: OrthotropicModel,
    pub ic: InitialCondition,
    pub coeffs: Coefficients,
}

/// Per-evaluation decay factors, shared by pointwise and grid evaluation.
enum Decay {
    Separable([Vec<f64>; 3]),
    General(Vec<f64>),
}

impl SeriesSolution {
    /// Closed-form coefficients up to mode `n_terms` per axis.
    pub fn new(model: OrthotropicModel, ic: InitialCondition, n_terms: usize) -> Result<Self, SeriesError> {
        ic.validate(&model)?;
        let coeffs = coefficients_closed_form(&ic, &model, n_terms)?;
        Ok(Self { model, ic, coeffs })
    }

    pub fn with_coefficients(model: OrthotropicModel, ic: InitialCondition, coeffs: Coefficients) -> Self {
        Self { model, ic, coeffs }
    }

    pub fn n_terms(&self) -> usize {
        self.coeffs.n_terms()
    }

    fn check_time(&self, t: f64) -> Result<(), SeriesError> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(SeriesError::InvalidParameter { name: "t", value: t });
        }
        if t == 0.0 && matches!(self.ic, InitialCondition::Delta) {
            return Err(SeriesError::DeltaAtZeroTime);
        }
        Ok(())
    }

    fn decay(&self, t: f64) -> Decay {
        match &self.coeffs {
            Coefficients::Separable(c) => Decay::Separable([0, 1, 2].map(|a| {
                (0..=c.n_terms()).map(|k| (-axis_rate(a, k, &self.model) * t).exp()).collect()
            })),
            Coefficients::General(g) => Decay::General(
                g.entries.keys().map(|&[l, m, n]| (-mode_rate(l, m, n, &self.model) * t).exp()).collect(),
            ),
        }
    }

    fn cos_row(&self, x: f64) -> Vec<f64> {
        let u = x / self.model.l;
        (0..=self.n_terms()).map(|k| (k as f64 * PI * u).cos()).collect()
    }

    /// Bracketed 1-D partial sum Σ_k B_k e_k cos(kπx/L).
    fn bracket(coef: &[f64], decay: &[f64], cos: &[f64]) -> f64 {
        let mut s = CompensatedSum::new();
        for k in 0..coef.len() {
            if coef[k] != 0.0 {
                s.add(coef[k] * decay[k] * cos[k]);
            }
        }
        s.value()
    }

    fn general_sum(g: &GeneralCoefficients, decay: &[f64], cos: [&[f64]; 3]) -> f64 {
        let mut s = CompensatedSum::new();
        for ((&[l, m, n], &v), &e) in g.entries.iter().zip(decay) {
            s.add(v * e * cos[0][l] * cos[1][m] * cos[2][n]);
        }
        s.value()
    }

    fn check_point(&self, p: [f64; 3]) -> Result<(), SeriesError> {
        let tol = 1e-12 * self.model.l;
        if p.iter().all(|&v| v >= -tol && v <= self.model.l + tol) {
            Ok(())
        } else {
            Err(SeriesError::OutOfDomain(p))
        }
    }

    /// Concentration (µg/m³) at (x, y, z) and time t (s).
    pub fn evaluate(&self, x: f64, y: f64, z: f64, t: f64) -> Result<f64, SeriesError> {
        self.check_time(t)?;
        self.check_point([x, y, z])?;
        let decay = self.decay(t);
        let rows = [self.cos_row(x), self.cos_row(y), self.cos_row(z)];
        Ok(match (&self.coeffs, &decay) {
            (Coefficients::Separable(c), Decay::Separable(e)) => {
                let bx = Self::bracket(&c.b, &e[0], &rows[0]);
                let by = Self::bracket(&c.h, &e[1], &rows[1]);
                let bz = Self::bracket(&c.s, &e[2], &rows[2]);
                bx * by * bz
            }
            (Coefficients::General(g), Decay::General(e)) => {
                Self::general_sum(g, e, [&rows[0], &rows[1], &rows[2]])
            }
            _ => unreachable!(),
        })
    }

    /// Node samples on a uniform grid spanning the cube; bit-identical to
    /// calling [`evaluate`](Self::evaluate) at each node.
    pub fn evaluate_grid(&self, dims: [usize; 3], t: f64) -> Result<Field3, SeriesError> {
        if dims.iter().any(|&n| n < 2) {
            return Err(SeriesError::BadDims(dims));
        }
        self.check_time(t)?;
        let l = self.model.l;
        let mut field = Field3::zeros(dims, [l; 3], t);
        let coords: [Vec<f64>; 3] = [0, 1, 2].map(|a| (0..dims[a]).map(|i| field.coord(a, i)).collect());
        let rows: [Vec<Vec<f64>>; 3] =
            [0, 1, 2].map(|a| coords[a].iter().map(|&x| self.cos_row(x)).collect());
        let decay = self.decay(t);
        let plane = dims[0] * dims[1];
        match (&self.coeffs, &decay) {
            (Coefficients::Separable(c), Decay::Separable(e)) => {
                let br: [Vec<f64>; 3] = [0, 1, 2].map(|a| {
                    rows[a].iter().map(|r| Self::bracket(c.axis(a), &e[a], r)).collect()
                });
                field.data.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
                    for j in 0..dims[1] {
                        for i in 0..dims[0] {
                            slab[i + dims[0] * j] = br[0][i] * br[1][j] * br[2][k];
                        }
                    }
                });
            }
            (Coefficients::General(g), Decay::General(e)) => {
                field.data.par_chunks_mut(plane).enumerate().for_each(|(k, slab)| {
                    for j in 0..dims[1] {
                        for i in 0..dims[0] {
                            slab[i + dims[0] * j] =
                                Self::general_sum(g, e, [&rows[0][i], &rows[1][j], &rows[2][k]]);
                        }
                    }
                });
            }
            _ => unreachable!(),
        }
        Ok(field)
    }
}

/// Instantaneous unit point source in unbounded space, coordinates relative
/// to the source: product of three 1-D Gaussians with variances 2D_ii t.
pub fn free_space_point_source(model: &OrthotropicModel, x: f64, y: f64, z: f64, t: f64) -> Result<f64, SeriesError> {
    if !(t > 0.0) {
        return Err(SeriesError::NonPositiveTime(t));
    }
    let dt = model.dxx * t;
    let pre = 1.0 / (2.0 * (PI * dt).sqrt());
    let (dy, dz) = (model.dyy2.sqrt(), model.dzz2.sqrt());
    let gx = pre * (-x * x / (4.0 * dt)).exp();
    let gy = dy * pre * (-y * y * model.dyy2 / (4.0 * dt)).exp();
    let gz = dz * pre * (-z * z * model.dzz2 / (4.0 * dt)).exp();
    Ok(gx * gy * gz)
}
