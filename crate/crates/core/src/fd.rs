//! Explicit finite-difference reference solver on a cell-centred box grid.
//!
//! Forward Euler in time with the 7-point Laplacian; no-flux walls through
//! mirror ghost cells, so every face flux at the wall is exactly zero.

use crate::field::Field3;
use crate::moments::{moments_cells, NumericMoments};
use crate::quadrature::pairwise_sum;
use crate::series::InitialCondition;
use crate::tensor::{CoordinateMap, OrthotropicModel, ParallelepipedSpec};
use rayon::prelude::*;

pub const DEFAULT_SAFETY: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FdError {
    #[error("grid needs at least 4 cells per axis, got {0:?}")]
    BadGrid([usize; 3]),
    #[error("time step {dt:e} s exceeds the stability bound {limit:e} s")]
    UnstableTimestep { dt: f64, limit: f64 },
    #[error("invalid {name} = {value:e}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("sample times must be ascending and within [t, t_end]")]
    BadSampleTimes,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdConfig {
    /// Box sides (m).
    pub lengths: [f64; 3],
    pub cells: [usize; 3],
    /// Diagonal diffusivities (m²/s).
    pub diffusivities: [f64; 3],
    /// Fixed time step (s); `None` picks `safety` × the stability bound.
    pub dt: Option<f64>,
    pub safety: f64,
}

impl FdConfig {
    /// `n` cells per axis on the cube.
    pub fn cube(model: &OrthotropicModel, n: usize) -> Self {
        Self {
            lengths: [model.l; 3],
            cells: [n; 3],
            diffusivities: model.diffusivities(),
            dt: None,
            safety: DEFAULT_SAFETY,
        }
    }

    pub fn parallelepiped(p: &ParallelepipedSpec, cells: [usize; 3]) -> Self {
        Self { lengths: [p.lx, p.ly, p.lz], cells, diffusivities: p.d, dt: None, safety: DEFAULT_SAFETY }
    }

    pub fn validate(&self) -> Result<(), FdError> {
        if self.cells.iter().any(|&n| n < 4) {
            return Err(FdError::BadGrid(self.cells));
        }
        for (name, v) in [
            ("Lx", self.lengths[0]),
            ("Ly", self.lengths[1]),
            ("Lz", self.lengths[2]),
            ("Dxx", self.diffusivities[0]),
            ("Dyy", self.diffusivities[1]),
            ("Dzz", self.diffusivities[2]),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FdError::InvalidParameter { name, value: v });
            }
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(FdError::InvalidParameter { name: "safety", value: self.safety });
        }
        Ok(())
    }

    pub fn spacing(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.lengths[a] / self.cells[a] as f64)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.iter().product()
    }

    /// 0.5 / Σ D_i/Δ_i².
    pub fn stability_limit(&self) -> f64 {
        let h = self.spacing();
        0.5 / (0..3).map(|a| self.diffusivities[a] / (h[a] * h[a])).sum::<f64>()
    }

    /// The step used by [`step`] and [`run`].
    pub fn time_step(&self) -> Result<f64, FdError> {
        let bound = self.safety * self.stability_limit();
        match self.dt {
            None => Ok(bound),
            Some(dt) if dt > 0.0 && dt <= bound => Ok(dt),
            Some(dt) => Err(FdError::UnstableTimestep { dt, limit: bound }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdState {
    /// Cell averages (µg/m³), x-fastest.
    pub values: Vec<f64>,
    /// Seconds.
    pub time: f64,
    pub steps: u64,
    pub initial_mass: f64,
    /// Largest relative mass drift seen at any audit.
    pub max_mass_drift: f64,
    scratch: Vec<f64>,
}

impl FdState {
    pub fn from_values(cfg: &FdConfig, values: Vec<f64>) -> Result<Self, FdError> {
        cfg.validate()?;
        assert_eq!(values.len(), cfg.n_cells());
        let mut s = Self {
            scratch: vec![0.0; values.len()],
            values,
            time: 0.0,
            steps: 0,
            initial_mass: 0.0,
            max_mass_drift: 0.0,
        };
        s.initial_mass = s.mass(cfg);
        Ok(s)
    }

    /// Σ c·ΔxΔyΔz (µg).
    pub fn mass(&self, cfg: &FdConfig) -> f64 {
        let plane = cfg.cells[0] * cfg.cells[1];
        let slabs: Vec<f64> = self.values.par_chunks(plane).map(pairwise_sum).collect();
        pairwise_sum(&slabs) * cfg.cell_volume()
    }

    /// Records the current mass drift and returns the mass.
    pub fn audit(&mut self, cfg: &FdConfig) -> f64 {
        let m = self.mass(cfg);
        let drift = ((m - self.initial_mass) / self.initial_mass).abs();
        self.max_mass_drift = self.max_mass_drift.max(drift);
        m
    }

    pub fn moments(&self, cfg: &FdConfig) -> NumericMoments {
        moments_cells(&self.values, cfg.cells, cfg.lengths, self.time)
    }

    /// Node field with `cells + 1` nodes per axis, each node the mean of its
    /// adjacent cells (trilinear interpolation with mirrored ghosts).
    pub fn node_field(&self, cfg: &FdConfig) -> Field3 {
        node_field(&self.values, cfg, self.time)
    }
}

fn node_field(values: &[f64], cfg: &FdConfig, time: f64) -> Field3 {
    let [nx, ny, nz] = cfg.cells;
    let dims = [nx + 1, ny + 1, nz + 1];
    let mut f = Field3::zeros(dims, cfg.lengths, time);
    let adj = |i: usize, n: usize| [i.saturating_sub(1), i.min(n - 1)];
    let plane = dims[0] * dims[1];
    f.data.par_chunks_mut(plane).enumerate().for_each(|(k, out)| {
        let ks = adj(k, nz);
        for j in 0..dims[1] {
            let js = adj(j, ny);
            for i in 0..dims[0] {
                let is = adj(i, nx);
                let mut acc = 0.0;
                for &kk in &ks {
                    for &jj in &js {
                        for &ii in &is {
                            acc += values[ii + nx * (jj + ny * kk)];
                        }
                    }
                }
                out[i + dims[0] * j] = 0.125 * acc;
            }
        }
    });
    f
}

/// Cell averages of a cube initial condition; for the delta the unit mass is
/// shared by the cells touching the centre.
pub fn init(cfg: &FdConfig, ic: &InitialCondition, model: &OrthotropicModel) -> Result<FdState, FdError> {
    let map = CoordinateMap { l: model.l, ly: model.l, lz: model.l };
    init_mapped(cfg, ic, model, &map)
}

/// Cell averages of c̄(x̄) = Φ(map(x̄)) on a box, where Φ is a cube initial
/// condition for `model`.
pub fn init_mapped(
    cfg: &FdConfig,
    ic: &InitialCondition,
    model: &OrthotropicModel,
    map: &CoordinateMap,
) -> Result<FdState, FdError> {
    cfg.validate()?;
    let [nx, ny, _] = cfg.cells;
    let h = cfg.spacing();
    let mut values = vec![0.0; cfg.n_cells()];
    values.par_chunks_mut(nx * ny).enumerate().for_each(|(k, slab)| {
        for j in 0..ny {
            for i in 0..nx {
                let lo_bar = [i as f64 * h[0], j as f64 * h[1], k as f64 * h[2]];
                let hi_bar = [lo_bar[0] + h[0], lo_bar[1] + h[1], lo_bar[2] + h[2]];
                let lo = map.to_cube(lo_bar);
                let hi = map.to_cube(hi_bar);
                let vol = (hi[0] - lo[0]) * (hi[1] - lo[1]) * (hi[2] - lo[2]);
                slab[i + nx * j] = ic.box_integral(model, lo, hi) / vol;
            }
        }
    });
    FdState::from_values(cfg, values)
}

fn step_into(src: &[f64], dst: &mut [f64], cells: [usize; 3], coef: [f64; 3]) {
    let [nx, ny, nz] = cells;
    let plane = nx * ny;
    let [cx, cy, cz] = coef;
    dst.par_chunks_mut(plane).enumerate().for_each(|(k, out)| {
        let km = k.saturating_sub(1);
        let kp = (k + 1).min(nz - 1);
        let cur = &src[k * plane..(k + 1) * plane];
        let below = &src[km * plane..(km + 1) * plane];
        let above = &src[kp * plane..(kp + 1) * plane];
        for j in 0..ny {
            let jm = j.saturating_sub(1);
            let jp = (j + 1).min(ny - 1);
            let row = &cur[j * nx..(j + 1) * nx];
            let south = &cur[jm * nx..(jm + 1) * nx];
            let north = &cur[jp * nx..(jp + 1) * nx];
            let down = &below[j * nx..(j + 1) * nx];
            let up = &above[j * nx..(j + 1) * nx];
            let o = &mut out[j * nx..(j + 1) * nx];
            let cell = |i: usize, west: f64, east: f64| {
                let v = row[i];
                v + cx * (west + east - 2.0 * v)
                    + cy * (south[i] + north[i] - 2.0 * v)
                    + cz * (down[i] + up[i] - 2.0 * v)
            };
            o[0] = cell(0, row[0], row[1]);
            for i in 1..nx - 1 {
                o[i] = cell(i, row[i - 1], row[i + 1]);
            }
            o[nx - 1] = cell(nx - 1, row[nx - 2], row[nx - 1]);
        }
    });
}

/// One explicit step of size `cfg.time_step()`.
pub fn step(state: &mut FdState, cfg: &FdConfig) -> Result<(), FdError> {
    let dt = cfg.time_step()?;
    let h = cfg.spacing();
    let coef = [0, 1, 2].map(|a| dt * cfg.diffusivities[a] / (h[a] * h[a]));
    step_into(&state.values, &mut state.scratch, cfg.cells, coef);
    std::mem::swap(&mut state.values, &mut state.scratch);
    state.steps += 1;
    state.time = state.steps as f64 * dt;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FdSample {
    pub time: f64,
    pub mass: f64,
    pub moments: NumericMoments,
    pub field: Option<Field3>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep node-interpolated fields at every sample.
    pub keep_fields: bool,
}

/// Advances to `t_end`, recording moments (and optionally node fields) at
/// each sample time by linear interpolation between the bracketing steps.
pub fn run(
    state: &mut FdState,
    cfg: &FdConfig,
    t_end: f64,
    sample_times: &[f64],
    opts: RunOptions,
) -> Result<Vec<FdSample>, FdError> {
    let dt = cfg.time_step()?;
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| t < state.time || t > t_end)
    {
        return Err(FdError::BadSampleTimes);
    }
    let mut out = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    let mut prev = state.values.clone();
    let record = |values: &[f64], t: f64, out: &mut Vec<FdSample>| {
        let mass = pairwise_sum(values) * cfg.cell_volume();
        let moments = moments_cells(values, cfg.cells, cfg.lengths, t);
        let field = opts.keep_fields.then(|| node_field(values, cfg, t));
        out.push(FdSample { time: t, mass, moments, field });
    };
    while next < sample_times.len() && sample_times[next] <= state.time {
        record(&state.values, sample_times[next], &mut out);
        next += 1;
    }
    while state.time < t_end {
        let t0 = state.time;
        prev.copy_from_slice(&state.values);
        step(state, cfg)?;
        while next < sample_times.len() && sample_times[next] <= state.time {
            let ts = sample_times[next];
            let theta = ((ts - t0) / dt).clamp(0.0, 1.0);
            let blend: Vec<f64> =
                prev.iter().zip(&state.values).map(|(a, b)| (1.0 - theta) * a + theta * b).collect();
            record(&blend, ts, &mut out);
            next += 1;
        }
        if next == sample_times.len() && state.time >= t_end {
            break;
        }
    }
    state.audit(cfg);
    for s in &out {
        let drift = ((s.mass - state.initial_mass) / state.initial_mass).abs();
        state.max_mass_drift = state.max_mass_drift.max(drift);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::diffusive_time_scales;
    use std::f64::consts::PI;

    fn model() -> OrthotropicModel {
        OrthotropicModel::reference()
    }

    #[test]
    fn bad_grid_and_unstable_step() {
        let m = model();
        let cfg = FdConfig::cube(&m, 3);
        assert_eq!(init(&cfg, &InitialCondition::Delta, &m).unwrap_err(), FdError::BadGrid([3; 3]));
        let mut cfg = FdConfig::cube(&m, 8);
        cfg.dt = Some(cfg.stability_limit());
        assert!(matches!(cfg.time_step(), Err(FdError::UnstableTimestep { .. })));
    }

    #[test]
    fn uniform_state_is_stationary() {
        let m = model();
        let cfg = FdConfig::cube(&m, 6);
        let mut s = FdState::from_values(&cfg, vec![m.c_inf(); 216]).unwrap();
        step(&mut s, &cfg).unwrap();
        assert!(s.values.iter().all(|&v| v == m.c_inf()));
    }

    #[test]
    fn step_ic_block_is_exact() {
        let m = model();
        let cfg = FdConfig::cube(&m, 8);
        let a = 0.5 * m.l;
        let s = init(&cfg, &InitialCondition::Step { a }, &m).unwrap();
        let inner = 1.0 / a.powi(3);
        for k in 0..8 {
            for j in 0..8 {
                for i in 0..8 {
                    let inside = [i, j, k].iter().all(|&q| (2..6).contains(&q));
                    let v = s.values[i + 8 * (j + 8 * k)];
                    if inside {
                        assert!((v / inner - 1.0).abs() < 1e-14);
                    } else {
                        assert!(v.abs() / inner < 1e-14);
                    }
                }
            }
        }
        assert!((s.initial_mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn plane_and_delta_have_unit_mass() {
        let m = model();
        for n in [7, 8] {
            let cfg = FdConfig::cube(&m, n);
            for ic in [InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 }, InitialCondition::Delta] {
                let s = init(&cfg, &ic, &m).unwrap();
                assert!((s.initial_mass - 1.0).abs() < 1e-14, "{ic:?} {n}");
            }
        }
    }

    #[test]
    fn impulse_spreads_to_seven_cells() {
        let m = model();
        let cfg = FdConfig::cube(&m, 5);
        let mut s = init(&cfg, &InitialCondition::Delta, &m).unwrap();
        step(&mut s, &cfg).unwrap();
        let nonzero = s.values.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 7);
        assert!((s.mass(&cfg) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cosine_mode_decays_at_analytic_rate() {
        let m = OrthotropicModel::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let rate = PI * PI;
        let mut errs = Vec::new();
        for n in [16, 32] {
            let cfg = FdConfig::cube(&m, n);
            let h = 1.0 / n as f64;
            let vals: Vec<f64> = (0..n * n * n).map(|q| (PI * ((q % n) as f64 + 0.5) * h).cos()).collect();
            let amp0 = vals[0];
            let mut s = FdState::from_values(&cfg, vals).unwrap();
            let t_end = 0.05;
            run(&mut s, &cfg, t_end, &[], RunOptions::default()).unwrap();
            let observed = -(s.values[0] / amp0).ln() / s.time;
            errs.push((observed - rate).abs() / rate);
        }
        assert!(errs[0] < 5e-3);
        let order = (errs[0] / errs[1]).log2();
        assert!((order - 2.0).abs() < 0.2, "{order}");
    }

    #[test]
    fn mirror_symmetry_is_preserved() {
        let m = model();
        let cfg = FdConfig::cube(&m, 9);
        let mut s = init(&cfg, &InitialCondition::TruncatedGaussian { sigma_x: 0.1 * m.l }, &m).unwrap();
        for _ in 0..50 {
            step(&mut s, &cfg).unwrap();
        }
        for k in 0..9 {
            for j in 0..9 {
                for i in 0..9 {
                    let a = s.values[i + 9 * (j + 9 * k)];
                    let b = s.values[(8 - i) + 9 * (j + 9 * k)];
                    assert!((a - b).abs() <= 1e-12 * a.abs());
                }
            }
        }
    }

    #[test]
    fn run_samples_and_conserves_mass() {
        let m = model();
        let tx = diffusive_time_scales(&m).tx;
        let cfg = FdConfig::cube(&m, 8);
        let mut s = init(&cfg, &InitialCondition::Step { a: 0.5 * m.l }, &m).unwrap();
        let times = [0.0, 0.1 * tx, 0.25 * tx];
        let out = run(&mut s, &cfg, 0.25 * tx, &times, RunOptions { keep_fields: true }).unwrap();
        assert_eq!(out.len(), 3);
        for (o, &t) in out.iter().zip(&times) {
            assert_eq!(o.time, t);
            assert!((o.mass - 1.0).abs() < 1e-12);
            assert_eq!(o.field.as_ref().unwrap().dims, [9, 9, 9]);
        }
        assert!(s.max_mass_drift < 1e-12);
        assert!(run(&mut s, &cfg, 0.0, &[1.0], RunOptions::default()).is_err());
    }

    #[test]
    fn maximum_principle() {
        let m = model();
        let cfg = FdConfig::cube(&m, 8);
        let mut s = init(&cfg, &InitialCondition::Step { a: 0.5 * m.l }, &m).unwrap();
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        for _ in 0..200 {
            step(&mut s, &cfg).unwrap();
            let mn = s.values.iter().cloned().fold(f64::INFINITY, f64::min);
            let mx = s.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(mn >= lo - 1e-9 && mx <= hi + 1e-9);
            lo = mn;
            hi = mx;
        }
    }
}
