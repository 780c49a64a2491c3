//! Diffusivity tensors: positivity checks, principal axes, reduction to the
//! orthotropic cube model, the parallelepiped-to-cube map, and diffusive
//! time scales.
//!
//! All diffusivities are in m²/s and lengths in metres.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor is not positive semidefinite (first failing minor: {0})")]
    NotPsd(String),
    #[error("eigenvalue {index} is {value:e}; the series solver needs strictly positive diffusivities")]
    ZeroEigenvalue { index: usize, value: f64 },
    #[error("invalid model parameter {name} = {value:e} (must be > 0)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("axis assignment {0:?} is not a permutation of 0, 1, 2")]
    BadAssignment([usize; 3]),
}

/// Symmetric 3×3 tensor stored by its six independent entries, laid out as
///
/// ```text
/// a d e
/// d b f
/// e f c
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricTensor3 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl SymmetricTensor3 {
    pub fn new(a: f64, b: f64, c: f64, d: f64, e: f64, f: f64) -> Self {
        Self { a, b, c, d, e, f }
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self::new(a, b, c, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::diagonal(1.0, 1.0, 1.0)
    }

    /// Builds `axes · diag(values) · axesᵀ`, symmetrised.
    pub fn from_principal(values: [f64; 3], axes: &[[f64; 3]; 3]) -> Self {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..3).map(|k| axes[i][k] * values[k] * axes[j][k]).sum();
            }
        }
        Self::new(
            m[0][0],
            m[1][1],
            m[2][2],
            0.5 * (m[0][1] + m[1][0]),
            0.5 * (m[0][2] + m[2][0]),
            0.5 * (m[1][2] + m[2][1]),
        )
    }

    pub fn to_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.a, self.d, self.e],
            [self.d, self.b, self.f],
            [self.e, self.f, self.c],
        ]
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        [self.a, self.b, self.c, self.d, self.e, self.f]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn determinant(&self) -> f64 {
        let Self { a, b, c, d, e, f } = *self;
        a * (b * c - f * f) - d * (d * c - e * f) + e * (d * f - b * e)
    }
}

/// Labels of the principal minors, in the order they are checked.
pub const MINOR_LABELS: [&str; 7] = ["a", "b", "c", "ab−d²", "bc−f²", "ac−e²", "det"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdVerdict {
    pub is_psd: bool,
    pub failing_minor: Option<&'static str>,
    /// Values of the minors in `MINOR_LABELS` order (mixed powers of m²/s).
    pub minors: [f64; 7],
    /// Every minor is exactly zero: no transport at all.
    pub trivial: bool,
    pub tolerance: f64,
}

/// Sylvester's criterion for semidefiniteness over all seven principal minors.
///
/// The tolerance is `1e-12 · max|entry|`, applied to every minor.
pub fn validate_psd(t: &SymmetricTensor3) -> PsdVerdict {
    let SymmetricTensor3 { a, b, c, d, e, f } = *t;
    let minors = [
        a,
        b,
        c,
        a * b - d * d,
        b * c - f * f,
        a * c - e * e,
        t.determinant(),
    ];
    let tolerance = 1e-12 * t.max_abs();
    let failing_minor = minors
        .iter()
        .position(|&m| m < -tolerance)
        .map(|i| MINOR_LABELS[i]);
    PsdVerdict {
        is_psd: failing_minor.is_none(),
        failing_minor,
        minors,
        trivial: minors.iter().all(|&m| m == 0.0),
        tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrincipalDecomposition {
    /// Descending, nonnegative.
    pub eigenvalues: [f64; 3],
    /// Rotation matrix whose columns are the unit eigenvectors.
    pub axes: [[f64; 3]; 3],
    /// Two or more eigenvalues coincide; the basis of that eigenspace is one
    /// deterministic choice among infinitely many.
    pub degenerate: bool,
}

impl PrincipalDecomposition {
    pub fn axis(&self, k: usize) -> [f64; 3] {
        [self.axes[0][k], self.axes[1][k], self.axes[2][k]]
    }

    pub fn reconstruct(&self) -> SymmetricTensor3 {
        SymmetricTensor3::from_principal(self.eigenvalues, &self.axes)
    }
}

/// Eigen-decomposition of a positive semidefinite tensor.
pub fn principal_decomposition(
    t: &SymmetricTensor3,
) -> Result<PrincipalDecomposition, TensorError> {
    let verdict = validate_psd(t);
    if let Some(label) = verdict.failing_minor {
        return Err(TensorError::NotPsd(label.to_string()));
    }
    let scale = t.max_abs();
    if scale == 0.0 {
        return Ok(PrincipalDecomposition {
            eigenvalues: [0.0; 3],
            axes: IDENTITY,
            degenerate: true,
        });
    }
    let m = t.to_matrix().map(|row| row.map(|v| v / scale));
    let (mut values, mut vectors, degenerate) = symmetric_eigen(&m);

    // descending order, then force a proper rotation
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    values = order.map(|i| values[i]);
    vectors = order.map(|i| vectors[i]);
    if dot(&cross(&vectors[0], &vectors[1]), &vectors[2]) < 0.0 {
        vectors[2] = vectors[2].map(|v| -v);
    }

    let eigenvalues = values.map(|v| (v * scale).max(0.0));
    let mut axes = [[0.0; 3]; 3];
    for (k, v) in vectors.iter().enumerate() {
        for i in 0..3 {
            axes[i][k] = v[i];
        }
    }
    Ok(PrincipalDecomposition {
        eigenvalues,
        axes,
        degenerate,
    })
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
const DEGENERACY_GAP: f64 = 1e-10;

fn dot(u: &[f64; 3], v: &[f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

fn cross(u: &[f64; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = dot(&v, &v).sqrt();
    v.map(|x| x / n)
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

/// Roots of the characteristic cubic via the trigonometric form, each
/// polished with one Newton step on `det(m − λI)`.
fn characteristic_roots(m: &[[f64; 3]; 3]) -> [f64; 3] {
    let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
    let q = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
    if p1 == 0.0 {
        return [m[0][0], m[1][1], m[2][2]];
    }
    let p2 = (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = *m;
    for (i, row) in b.iter_mut().enumerate() {
        for v in row.iter_mut() {
            *v /= p;
        }
        row[i] -= q / p;
    }
    let det_b = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det_b / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let two_pi_3 = 2.0 * std::f64::consts::PI / 3.0;
    let roots = [
        q + 2.0 * p * phi.cos(),
        q + 2.0 * p * (phi + two_pi_3).cos(),
        q + 2.0 * p * (phi + 2.0 * two_pi_3).cos(),
    ];

    let c2 = -(m[0][0] + m[1][1] + m[2][2]);
    let c1 = m[0][0] * m[1][1] + m[1][1] * m[2][2] + m[0][0] * m[2][2]
        - m[0][1].powi(2)
        - m[0][2].powi(2)
        - m[1][2].powi(2);
    let c0 = -(m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[1][2])
        - m[0][1] * (m[0][1] * m[2][2] - m[1][2] * m[0][2])
        + m[0][2] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]));
    roots.map(|x| {
        let f = ((x + c2) * x + c1) * x + c0;
        let df = (3.0 * x + 2.0 * c2) * x + c1;
        // skip the step at (near-)double roots where df vanishes
        if df.abs() > 1e-8 {
            x - f / df
        } else {
            x
        }
    })
}

/// Eigenpairs of a symmetric matrix of order-one entries.
///
/// The most isolated root gets its eigenvector from the best-conditioned
/// row cross product; the remaining pair is resolved as a 2×2 problem in
/// the orthogonal complement, which keeps the basis orthonormal when the
/// other two roots are close or equal.
fn symmetric_eigen(m: &[[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3], bool) {
    let mut roots = characteristic_roots(m);
    roots.sort_by(|a, b| b.total_cmp(a));
    // entries are normalised to max |m_ij| = 1, so gaps are absolute
    let degenerate =
        roots[0] - roots[1] <= DEGENERACY_GAP || roots[1] - roots[2] <= DEGENERACY_GAP;

    if roots[0] - roots[2] <= DEGENERACY_GAP {
        // isotropic: any orthonormal basis
        let mean = (m[0][0] + m[1][1] + m[2][2]) / 3.0;
        return ([mean; 3], IDENTITY, true);
    }

    let isolated = if roots[0] - roots[1] >= roots[1] - roots[2] {
        roots[0]
    } else {
        roots[2]
    };

    let shifted = [
        [m[0][0] - isolated, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - isolated, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - isolated],
    ];
    let candidates = [
        cross(&shifted[0], &shifted[1]),
        cross(&shifted[0], &shifted[2]),
        cross(&shifted[1], &shifted[2]),
    ];
    let best = candidates
        .iter()
        .max_by(|u, v| dot(u, u).total_cmp(&dot(v, v)))
        .copied()
        .unwrap_or([1.0, 0.0, 0.0]);
    let v0 = normalized(best);

    let (u, w) = complement_basis(&v0);
    let mu = mat_vec(m, &u);
    let mw = mat_vec(m, &w);
    let (a11, a12, a22) = (dot(&u, &mu), dot(&u, &mw), dot(&w, &mw));
    let (cos, sin) = if a12 == 0.0 {
        (1.0, 0.0)
    } else {
        let theta = 0.5 * (2.0 * a12).atan2(a11 - a22);
        (theta.cos(), theta.sin())
    };
    let v1 = normalized([
        cos * u[0] + sin * w[0],
        cos * u[1] + sin * w[1],
        cos * u[2] + sin * w[2],
    ]);
    let v2 = normalized(cross(&v0, &v1));

    let rayleigh = |v: &[f64; 3]| dot(v, &mat_vec(m, v));
    let values = [rayleigh(&v0), rayleigh(&v1), rayleigh(&v2)];
    (values, [v0, v1, v2], degenerate)
}

/// Gram–Schmidt of the fixed seed basis e₁, e₂, e₃ against `v`.
fn complement_basis(v: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let mut basis = Vec::with_capacity(2);
    for seed in IDENTITY {
        let mut s = seed;
        for b in std::iter::once(v).chain(basis.iter()) {
            let proj = dot(&s, b);
            for i in 0..3 {
                s[i] -= proj * b[i];
            }
        }
        if dot(&s, &s) > 0.1 {
            basis.push(normalized(s));
        }
        if basis.len() == 2 {
            break;
        }
    }
    (basis[0], basis[1])
}

/// Orthotropic diffusion in a cube of side `l`, in the aligned principal axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrthotropicModel {
    /// Cube side, m.
    pub l: f64,
    /// Diffusivity along x, m²/s.
    pub dxx: f64,
    /// d²_yy = D_xx / D_yy.
    pub dyy2: f64,
    /// d²_zz = D_xx / D_zz.
    pub dzz2: f64,
}

impl OrthotropicModel {
    pub fn new(l: f64, dxx: f64, dyy2: f64, dzz2: f64) -> Result<Self, TensorError> {
        let model = Self { l, dxx, dyy2, dzz2 };
        model.validate()?;
        Ok(model)
    }

    /// L = 0.01 m, D_xx = 1e-9 m²/s, d²_yy = 2, d²_zz = 4.
    pub fn reference() -> Self {
        Self {
            l: 0.01,
            dxx: 1e-9,
            dyy2: 2.0,
            dzz2: 4.0,
        }
    }

    pub fn from_diffusivities(l: f64, dxx: f64, dyy: f64, dzz: f64) -> Result<Self, TensorError> {
        for (name, value) in [("Dyy", dyy), ("Dzz", dzz)] {
            if !(value > 0.0) {
                return Err(TensorError::InvalidParameter { name, value });
            }
        }
        Self::new(l, dxx, dxx / dyy, dxx / dzz)
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        for (name, value) in [
            ("L", self.l),
            ("Dxx", self.dxx),
            ("dyy2", self.dyy2),
            ("dzz2", self.dzz2),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(TensorError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn dyy(&self) -> f64 {
        self.dxx / self.dyy2
    }

    pub fn dzz(&self) -> f64 {
        self.dxx / self.dzz2
    }

    /// (D_xx, D_yy, D_zz).
    pub fn diffusivities(&self) -> [f64; 3] {
        [self.dxx, self.dyy(), self.dzz()]
    }

    /// Steady concentration for unit mass, c∞ = 1/L³.
    pub fn c_inf(&self) -> f64 {
        1.0 / self.l.powi(3)
    }

    /// Steady centred second moment, M∞ = L²/12.
    pub fn m_inf(&self) -> f64 {
        self.l * self.l / 12.0
    }
}

/// Builds the cube model from principal diffusivities.
///
/// `assignment[k]` is the index into `p.eigenvalues` placed on axis k
/// (x, y, z). `None` keeps the descending order, so the largest diffusivity
/// lies along x and d²_yy, d²_zz ≥ 1.
pub fn orthotropic_from_principal(
    p: &PrincipalDecomposition,
    l: f64,
    assignment: Option<[usize; 3]>,
) -> Result<OrthotropicModel, TensorError> {
    let order = assignment.unwrap_or([0, 1, 2]);
    let mut seen = [false; 3];
    for &i in &order {
        if i > 2 || seen[i] {
            return Err(TensorError::BadAssignment(order));
        }
        seen[i] = true;
    }
    for (index, &value) in p.eigenvalues.iter().enumerate() {
        if !(value > 0.0) {
            return Err(TensorError::ZeroEigenvalue { index, value });
        }
    }
    let [dx, dy, dz] = order.map(|i| p.eigenvalues[i]);
    OrthotropicModel::new(l, dx, dx / dy, dx / dz)
}

/// Rectangular box with sides (L, L_ȳ, L_z̄) and diagonal diffusivities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelepipedSpec {
    pub lx: f64,
    pub ly: f64,
    pub lz: f64,
    /// (D_x̄x̄, D_ȳȳ, D_z̄z̄), m²/s.
    pub d: [f64; 3],
}

impl ParallelepipedSpec {
    pub fn validate(&self) -> Result<(), TensorError> {
        let named = [
            ("Lx", self.lx),
            ("Ly", self.ly),
            ("Lz", self.lz),
            ("Dxx", self.d[0]),
            ("Dyy", self.d[1]),
            ("Dzz", self.d[2]),
        ];
        for (name, value) in named {
            if !(value > 0.0 && value.is_finite()) {
                return Err(TensorError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }
}

/// Coordinate scaling between a parallelepiped (x̄, ȳ, z̄) and the cube
/// (x, y, z): x = x̄, y = ȳ·L/L_ȳ, z = z̄·L/L_z̄.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoordinateMap {
    pub l: f64,
    pub ly: f64,
    pub lz: f64,
}

impl CoordinateMap {
    pub fn to_cube(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0], p[1] * self.l / self.ly, p[2] * self.l / self.lz]
    }

    pub fn to_parallelepiped(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0], p[1] * self.ly / self.l, p[2] * self.lz / self.l]
    }

    pub fn is_identity(&self) -> bool {
        self.ly == self.l && self.lz == self.l
    }

    /// Cube-side initial condition Φ(x, y, z) = Φ̄(x, (L_ȳ/L)·y, (L_z̄/L)·z).
    pub fn cube_initial_condition<F>(&self, phi_bar: F) -> impl Fn(f64, f64, f64) -> f64
    where
        F: Fn(f64, f64, f64) -> f64,
    {
        let map = *self;
        move |x, y, z| {
            let [xb, yb, zb] = map.to_parallelepiped([x, y, z]);
            phi_bar(xb, yb, zb)
        }
    }
}

/// Equivalent cube problem for a box: D_yy = D_ȳȳ·L²/L_ȳ², D_zz = D_z̄z̄·L²/L_z̄².
pub fn cube_equivalent(
    p: &ParallelepipedSpec,
) -> Result<(OrthotropicModel, CoordinateMap), TensorError> {
    p.validate()?;
    let l = p.lx;
    let dxx = p.d[0];
    let dyy = p.d[1] * (l / p.ly).powi(2);
    let dzz = p.d[2] * (l / p.lz).powi(2);
    let model = OrthotropicModel::from_diffusivities(l, dxx, dyy, dzz)?;
    Ok((
        model,
        CoordinateMap {
            l,
            ly: p.ly,
            lz: p.lz,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeScales {
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
}

impl TimeScales {
    /// t* = t / T*_x.
    pub fn t_star(&self, t: f64) -> f64 {
        t / self.tx
    }

    pub fn seconds(&self, t_star: f64) -> f64 {
        t_star * self.tx
    }
}

/// T*_x = (L/2)²/D_xx, T*_y = T*_x·d²_yy, T*_z = T*_x·d²_zz.
pub fn diffusive_time_scales(m: &OrthotropicModel) -> TimeScales {
    let tx = (0.5 * m.l).powi(2) / m.dxx;
    TimeScales {
        tx,
        ty: tx * m.dyy2,
        tz: tx * m.dzz2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        let (sg, cg) = gamma.sin_cos();
        let rz = [[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]];
        let ry = [[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]];
        let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
            let mut c = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
                }
            }
            c
        };
        mul(mul(rz, ry), rx)
    }

    fn orthonormality_error(axes: &[[f64; 3]; 3]) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let g: f64 = (0..3).map(|k| axes[k][i] * axes[k][j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - expect).abs());
            }
        }
        worst
    }

    #[test]
    fn identity_is_psd() {
        let v = validate_psd(&SymmetricTensor3::identity());
        assert!(v.is_psd);
        assert!(v.minors.iter().all(|&m| m >= 0.0));
        assert!(!v.trivial);
    }

    #[test]
    fn negative_diagonal_fails_on_c() {
        let v = validate_psd(&SymmetricTensor3::diagonal(1.0, 2.0, -1.0));
        assert!(!v.is_psd);
        assert_eq!(v.failing_minor, Some("c"));
    }

    #[test]
    fn large_coupling_fails_on_ab_minor() {
        let v = validate_psd(&SymmetricTensor3::new(1.0, 1.0, 0.0, 2.0, 0.0, 0.0));
        assert!(!v.is_psd);
        assert_eq!(v.failing_minor, Some("ab−d²"));
        assert_eq!(v.minors[3], -3.0);
    }

    #[test]
    fn zero_tensor_is_flagged_trivial() {
        let v = validate_psd(&SymmetricTensor3::diagonal(0.0, 0.0, 0.0));
        assert!(v.is_psd);
        assert!(v.trivial);
    }

    #[test]
    fn diagonal_decomposition_is_identity_up_to_sign() {
        let p = principal_decomposition(&SymmetricTensor3::diagonal(4.0, 2.0, 1.0)).unwrap();
        assert_eq!(p.eigenvalues, [4.0, 2.0, 1.0]);
        for k in 0..3 {
            assert!((p.axes[k][k].abs() - 1.0).abs() < 1e-15);
        }
        assert!(!p.degenerate);
    }

    #[test]
    fn monoclinic_block_has_45_degree_axes() {
        // a=2, b=2, d=1, c=3: x–y block eigenvalues a±d.
        let t = SymmetricTensor3::new(2.0, 2.0, 3.0, 1.0, 0.0, 0.0);
        let p = principal_decomposition(&t).unwrap();
        for (got, want) in p.eigenvalues.iter().zip([3.0, 3.0, 1.0]) {
            assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        }
        assert!(p.degenerate);
        let v = p.axis(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0].abs() - s).abs() < 1e-14 && (v[1].abs() - s).abs() < 1e-14);
        assert!(v[0] * v[1] < 0.0 && v[2].abs() < 1e-14);
        // columns 0 and 1 span the λ = 3 eigenspace
        let m = t.to_matrix();
        for k in 0..2 {
            let v = p.axis(k);
            let mv = mat_vec(&m, &v);
            for i in 0..3 {
                assert!((mv[i] - 3.0 * v[i]).abs() < 1e-14);
            }
        }
        assert!(orthonormality_error(&p.axes) < 1e-12);
    }

    #[test]
    fn rotated_tensor_round_trips() {
        let r = rotation(0.3, -1.1, 2.2);
        let t = SymmetricTensor3::from_principal([3.0, 2.0, 1.0], &r);
        let p = principal_decomposition(&t).unwrap();
        for (got, want) in p.eigenvalues.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-10 * want);
        }
        assert!(orthonormality_error(&p.axes) < 1e-12);
        let back = p.reconstruct();
        let scale = t.max_abs();
        for (x, y) in [
            (back.a, t.a),
            (back.b, t.b),
            (back.c, t.c),
            (back.d, t.d),
            (back.e, t.e),
            (back.f, t.f),
        ] {
            assert!((x - y).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn decomposition_rejects_indefinite() {
        let err = principal_decomposition(&SymmetricTensor3::diagonal(1.0, -1.0, 1.0));
        assert_eq!(err, Err(TensorError::NotPsd("b".into())));
    }

    #[test]
    fn reference_eigenvalues_give_reference_ratios() {
        let p = principal_decomposition(&SymmetricTensor3::diagonal(1e-9, 0.5e-9, 0.25e-9)).unwrap();
        let m = orthotropic_from_principal(&p, 0.01, None).unwrap();
        assert_eq!(m.dxx, 1e-9);
        assert_eq!(m.dyy2, 2.0);
        assert_eq!(m.dzz2, 4.0);
    }

    #[test]
    fn isotropic_eigenvalues_give_unit_ratios() {
        let k = 3.7e-10;
        let p = principal_decomposition(&SymmetricTensor3::diagonal(k, k, k)).unwrap();
        let m = orthotropic_from_principal(&p, 1.0, None).unwrap();
        assert_eq!((m.dyy2, m.dzz2), (1.0, 1.0));
        assert!(p.degenerate);
    }

    #[test]
    fn singular_tensor_is_rejected_for_the_cube_model() {
        let p = principal_decomposition(&SymmetricTensor3::diagonal(1.0, 1.0, 0.0)).unwrap();
        assert!(matches!(
            orthotropic_from_principal(&p, 1.0, None),
            Err(TensorError::ZeroEigenvalue { index: 2, .. })
        ));
    }

    #[test]
    fn caller_can_override_axis_assignment() {
        let p = principal_decomposition(&SymmetricTensor3::diagonal(4.0, 2.0, 1.0)).unwrap();
        let m = orthotropic_from_principal(&p, 1.0, Some([2, 1, 0])).unwrap();
        assert_eq!((m.dxx, m.dyy2, m.dzz2), (1.0, 0.5, 0.25));
        assert!(orthotropic_from_principal(&p, 1.0, Some([0, 0, 1])).is_err());
    }

    #[test]
    fn doubled_y_side_quarters_dyy() {
        let d = 2e-9;
        let (m, map) = cube_equivalent(&ParallelepipedSpec {
            lx: 1.0,
            ly: 2.0,
            lz: 1.0,
            d: [d, d, d],
        })
        .unwrap();
        assert!((m.dyy() - d / 4.0).abs() < 1e-24);
        assert_eq!(m.dzz(), d);
        assert_eq!(map.to_cube([0.5, 2.0, 1.0]), [0.5, 1.0, 1.0]);
    }

    #[test]
    fn cube_maps_to_itself() {
        let (m, map) = cube_equivalent(&ParallelepipedSpec {
            lx: 0.01,
            ly: 0.01,
            lz: 0.01,
            d: [1e-9, 0.5e-9, 0.25e-9],
        })
        .unwrap();
        assert_eq!(m, OrthotropicModel::reference());
        assert!(map.is_identity());
        let p = [0.001, 0.002, 0.003];
        assert_eq!(map.to_cube(p), p);
        assert_eq!(map.to_parallelepiped(p), p);
    }

    #[test]
    fn shrunken_sides_amplify_diffusivities() {
        let d = 1e-9;
        let l = 0.01;
        let (m, map) = cube_equivalent(&ParallelepipedSpec {
            lx: l,
            ly: l / 2.0,
            lz: l / 4.0,
            d: [d, d, d],
        })
        .unwrap();
        assert!((m.dyy() / (4.0 * d) - 1.0).abs() < 1e-14);
        assert!((m.dzz() / (16.0 * d) - 1.0).abs() < 1e-14);
        // the remapped initial condition samples the box at the preimage
        let phi = map.cube_initial_condition(|x, y, z| x + 10.0 * y + 100.0 * z);
        let v = phi(l, l, l);
        assert!((v - (l + 10.0 * l / 2.0 + 100.0 * l / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn reference_time_scales() {
        let ts = diffusive_time_scales(&OrthotropicModel::reference());
        assert!((ts.tx / 25000.0 - 1.0).abs() < 1e-12);
        assert!((ts.ty / 50000.0 - 1.0).abs() < 1e-12);
        assert!((ts.tz / 100000.0 - 1.0).abs() < 1e-12);
        assert!((ts.t_star(ts.tx) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn time_scales_scale_quadratically_with_side() {
        let m = OrthotropicModel::new(0.3, 2e-9, 1.0, 1.0).unwrap();
        let a = diffusive_time_scales(&m);
        assert_eq!(a.tx, a.ty);
        assert_eq!(a.ty, a.tz);
        let b = diffusive_time_scales(&OrthotropicModel { l: 0.6, ..m });
        assert!((b.tx / a.tx - 4.0).abs() < 1e-14);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(1000))]

            #[test]
            fn psd_verdict_matches_eigenvalue_sign(
                a in -1.0..1.0f64, b in -1.0..1.0f64, c in -1.0..1.0f64,
                d in -1.0..1.0f64, e in -1.0..1.0f64, f in -1.0..1.0f64,
            ) {
                let t = SymmetricTensor3::new(a, b, c, d, e, f);
                let roots = {
                    let mut r = characteristic_roots(&t.to_matrix());
                    r.sort_by(|x, y| x.total_cmp(y));
                    r
                };
                let max_abs = roots.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let eig_psd = roots[0] >= -1e-10 * max_abs;
                prop_assert_eq!(validate_psd(&t).is_psd, eig_psd);
            }

            #[test]
            fn random_rotations_round_trip(
                alpha in -3.2..3.2f64, beta in -3.2..3.2f64, gamma in -3.2..3.2f64,
                l1 in 0.01..10.0f64, l2 in 0.01..10.0f64, l3 in 0.01..10.0f64,
            ) {
                let r = rotation(alpha, beta, gamma);
                let t = SymmetricTensor3::from_principal([l1, l2, l3], &r);
                let p = principal_decomposition(&t).unwrap();
                prop_assert!(orthonormality_error(&p.axes) < 1e-12);
                let back = p.reconstruct();
                let scale = t.max_abs();
                for (x, y) in [(back.a, t.a), (back.b, t.b), (back.c, t.c),
                               (back.d, t.d), (back.e, t.e), (back.f, t.f)] {
                    prop_assert!((x - y).abs() < 1e-10 * scale, "{} vs {}", x, y);
                }
            }

            #[test]
            fn time_scale_ratios_are_exact(
                l in 1e-3..1.0f64, dxx in 1e-12..1e-6f64, dyy2 in 0.1..10.0f64, dzz2 in 0.1..10.0f64,
            ) {
                let ts = diffusive_time_scales(&OrthotropicModel { l, dxx, dyy2, dzz2 });
                prop_assert!((ts.ty / ts.tx - dyy2).abs() <= 4.0 * f64::EPSILON * dyy2);
                prop_assert!((ts.tz / ts.tx - dzz2).abs() <= 4.0 * f64::EPSILON * dzz2);
            }
        }
    }
}
