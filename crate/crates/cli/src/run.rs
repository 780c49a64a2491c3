//! The solve / fd / gci / transform pipelines.

use crate::config::{Format, Resolved};
use crate::report::Artifacts;
use crate::CliError;
use orthocube::fd::{self, FdConfig, RunOptions};
use orthocube::gci::{local_gci_field, GciReport, GridTriple};
use orthocube::io::{fmt17, moments_row, write_coefficients_csv, write_moments_csv, write_vtk, MOMENTS_HEADER};
use orthocube::moments::{moments_analytic, MomentSet};
use orthocube::tensor::{diffusive_time_scales, ParallelepipedSpec};
use orthocube::SeriesSolution;
use serde::Serialize;
use std::path::Path;

pub const FD_HEADER_EXTRA: &str = "cells_per_l,mass_drift";

/// Analytic moments at every output time.
pub struct SeriesRun {
    pub solution: SeriesSolution,
    pub moments: Vec<MomentSet>,
}

pub fn series(r: &Resolved) -> Result<SeriesRun, CliError> {
    let solution = SeriesSolution::new(r.model, r.ic.clone(), r.n_terms())?;
    let moments = r.times.iter().map(|&t| moments_analytic(&solution, t)).collect::<Result<Vec<_>, _>>()?;
    Ok(SeriesRun { solution, moments })
}

/// Series moments CSV, coefficient table and requested VTK fields.
pub fn solve(r: &Resolved, art: &mut Artifacts) -> Result<SeriesRun, CliError> {
    let run = series(r)?;
    let case = r.case().name();
    if r.wants(Format::Csv) {
        let mut buf = Vec::new();
        write_moments_csv(&mut buf, &run.moments, &r.model)?;
        art.write(&format!("moments_{case}.csv"), &buf)?;
        let mut buf = Vec::new();
        write_coefficients_csv(&mut buf, &run.solution.coeffs)?;
        art.write(&format!("coefficients_{case}.csv"), &buf)?;
    }
    if r.wants(Format::Vtk) {
        let n = r.config.times.field_nodes;
        let tx = r.tx();
        for (k, &t) in r.field_times.iter().enumerate() {
            let field = run.solution.evaluate_grid([n; 3], t)?;
            let mut buf = Vec::new();
            write_vtk(&mut buf, &field, &format!("{case} concentration t_star={}", fmt17(t / tx)))?;
            art.write(&format!("field_{case}_{k:03}.vtk"), &buf)?;
        }
    }
    Ok(run)
}

/// FD moments on one grid, expressed in cube coordinates.
#[derive(Debug, Clone)]
pub struct FdRun {
    pub cells_per_l: usize,
    pub rows: Vec<MomentSet>,
    pub mass_drift: Vec<f64>,
}

fn fd_setup(r: &Resolved, n: usize) -> Result<(FdConfig, fd::FdState), CliError> {
    let m = &r.fd_model;
    let (mut cfg, state) = match r.box_spec {
        None => {
            let mut cfg = FdConfig::cube(m, n);
            cfg.safety = r.config.fd.safety;
            let st = fd::init(&cfg, &r.ic, &r.model)?;
            (cfg, st)
        }
        Some(b) => {
            // physical box diffusivities that map to the (possibly overridden) cube model
            let d = m.diffusivities();
            let spec = ParallelepipedSpec {
                lx: b.lx,
                ly: b.ly,
                lz: b.lz,
                d: [d[0], d[1] * (b.ly / m.l).powi(2), d[2] * (b.lz / m.l).powi(2)],
            };
            let cells = [n, (n as f64 * b.ly / m.l).round() as usize, (n as f64 * b.lz / m.l).round() as usize];
            let mut cfg = FdConfig::parallelepiped(&spec, cells);
            cfg.safety = r.config.fd.safety;
            let st = fd::init_mapped(&cfg, &r.ic, &r.model, &r.map)?;
            (cfg, st)
        }
    };
    cfg.dt = None;
    Ok((cfg, state))
}

pub fn fd_run(r: &Resolved, n: usize, times: &[f64]) -> Result<FdRun, CliError> {
    let (cfg, mut state) = fd_setup(r, n)?;
    let t_end = times.last().copied().unwrap_or(0.0);
    let samples = fd::run(&mut state, &cfg, t_end, times, RunOptions::default())?;
    let sy = r.model.l / r.map.ly;
    let sz = r.model.l / r.map.lz;
    let mut rows = Vec::with_capacity(samples.len());
    let mut mass_drift = Vec::with_capacity(samples.len());
    for s in &samples {
        let mut ms = s.moments.moments;
        ms.first[1] *= sy;
        ms.first[2] *= sz;
        ms.second[1] *= sy * sy;
        ms.second[2] *= sz * sz;
        rows.push(ms);
        mass_drift.push(((s.mass - state.initial_mass) / state.initial_mass).abs());
    }
    Ok(FdRun { cells_per_l: n, rows, mass_drift })
}

pub fn fd_file_name(case: &str, n: usize) -> String {
    format!("fd_moments_{case}_n{n}.csv")
}

/// Runs every configured grid, finest first.
pub fn fd_all(r: &Resolved, art: &mut Artifacts) -> Result<Vec<FdRun>, CliError> {
    let times = r.fd_times();
    if times.is_empty() {
        return Err(CliError::Config {
            path: "fd.min_t_star".into(),
            message: "no output time lies inside the FD window".into(),
        });
    }
    let mut runs = Vec::new();
    for n in r.grids_fine_first() {
        let run = fd_run(r, n, &times)?;
        if r.wants(Format::Csv) {
            art.write(&fd_file_name(r.case().name(), n), fd_csv(&run, r).as_bytes())?;
        }
        runs.push(run);
    }
    Ok(runs)
}

pub fn fd_csv(run: &FdRun, r: &Resolved) -> String {
    let mut s = format!("{MOMENTS_HEADER},{FD_HEADER_EXTRA}\n");
    for (ms, drift) in run.rows.iter().zip(&run.mass_drift) {
        s += &format!("{},{},{}\n", moments_row(ms, &r.model), run.cells_per_l, fmt17(*drift));
    }
    s
}

/// Parses a file written by [`fd_csv`] back into dimensional moments.
pub fn read_fd_csv(path: &Path, r: &Resolved) -> Result<FdRun, CliError> {
    let bad = |message: String| CliError::Input { path: path.display().to_string(), message };
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    if header != format!("{MOMENTS_HEADER},{FD_HEADER_EXTRA}") {
        return Err(bad("not an FD moments table".into()));
    }
    let (l, m_inf) = (r.model.l, r.model.m_inf());
    let mut run = FdRun { cells_per_l: 0, rows: Vec::new(), mass_drift: Vec::new() };
    for (k, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(format!("row {}: {e}", k + 1)))?;
        if v.len() != 11 {
            return Err(bad(format!("row {} has {} columns", k + 1, v.len())));
        }
        let n = v[9] as usize;
        if k > 0 && n != run.cells_per_l {
            return Err(bad("mixed grid sizes".into()));
        }
        run.cells_per_l = n;
        run.rows.push(MomentSet {
            t: v[0],
            m0: v[2],
            first: [v[3] * l, v[4] * l, v[5] * l],
            second: [v[6] * m_inf, v[7] * m_inf, v[8] * m_inf],
        });
        run.mass_drift.push(v[10]);
    }
    if run.rows.is_empty() {
        return Err(bad("no rows".into()));
    }
    Ok(run)
}

/// One moment component tracked over time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    First(usize),
    Second(usize),
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Observable::First(a) => ["mx", "my", "mz"][a],
            Observable::Second(a) => ["Mxx", "Myy", "Mzz"][a],
        }
    }

    pub fn of(self, ms: &MomentSet) -> f64 {
        match self {
            Observable::First(a) => ms.first[a],
            Observable::Second(a) => ms.second[a],
        }
    }

    /// Divisor to the starred (dimensionless) value.
    pub fn scale(self, r: &Resolved) -> f64 {
        match self {
            Observable::First(_) => r.model.l,
            Observable::Second(_) => r.model.m_inf(),
        }
    }
}

/// Second moments always; first moments only when the IC is off-centre.
pub fn observables(r: &Resolved) -> Vec<Observable> {
    let mut v: Vec<Observable> = (0..3).map(Observable::Second).collect();
    if !r.ic.is_centrally_symmetric() {
        v.extend((0..3).map(Observable::First));
    }
    v
}

#[derive(Debug, Clone)]
pub struct ObservableGci {
    pub observable: Observable,
    pub times: Vec<f64>,
    pub fine: Vec<f64>,
    pub analytic: Vec<f64>,
    pub report: GciReport,
}

#[derive(Serialize)]
struct GciFile<'a> {
    case: &'a str,
    observable: &'a str,
    cells_per_l: [usize; 3],
    t_star: Vec<f64>,
    /// Absolute GCI in units of the starred observable.
    gci_abs_star: Vec<f64>,
    report: &'a GciReport,
}

/// GCI per observable from three runs (finest first) plus the overlay table.
pub fn gci(r: &Resolved, runs: &[FdRun], art: &mut Artifacts) -> Result<Vec<ObservableGci>, CliError> {
    let mut runs: Vec<&FdRun> = runs.iter().collect();
    runs.sort_by(|a, b| b.cells_per_l.cmp(&a.cells_per_l));
    if runs.len() != 3 || runs[0].cells_per_l == runs[1].cells_per_l || runs[1].cells_per_l == runs[2].cells_per_l {
        return Err(CliError::Config {
            path: "fd.grids".into(),
            message: "GCI needs exactly three distinct grids".into(),
        });
    }
    let [f, m, c] = [runs[0], runs[1], runs[2]];
    let times: Vec<f64> = f.rows.iter().map(|x| x.t).collect();
    for other in [m, c] {
        let same = other.rows.len() == times.len()
            && other.rows.iter().zip(&times).all(|(x, &t)| (x.t - t).abs() <= 1e-9 * t.max(1.0));
        if !same {
            return Err(CliError::Input {
                path: format!("n{}", other.cells_per_l),
                message: "sample times differ between grids".into(),
            });
        }
    }
    let h = [f, m, c].map(|x| r.model.l / x.cells_per_l as f64);
    let sol = SeriesSolution::new(r.model, r.ic.clone(), r.n_terms())?;
    let analytic_sets = times.iter().map(|&t| moments_analytic(&sol, t)).collect::<Result<Vec<_>, _>>()?;
    let tx = diffusive_time_scales(&r.model).tx;
    let case = r.case().name();

    let mut out = Vec::new();
    for obs in observables(r) {
        let series_of = |run: &FdRun| run.rows.iter().map(|x| obs.of(x)).collect::<Vec<f64>>();
        let mut triple = GridTriple::new(series_of(f), series_of(m), series_of(c), h)?;
        if matches!(obs, Observable::Second(_)) {
            triple = triple.with_second_moment(&r.model);
        }
        let report = local_gci_field(&triple)?;
        let analytic: Vec<f64> = analytic_sets.iter().map(|x| obs.of(x)).collect();
        if r.wants(Format::Json) {
            let scale = obs.scale(r);
            let file = GciFile {
                case,
                observable: obs.name(),
                cells_per_l: [f, m, c].map(|x| x.cells_per_l),
                t_star: times.iter().map(|t| t / tx).collect(),
                gci_abs_star: report.points.iter().map(|p| p.gci_abs / scale).collect(),
                report: &report,
            };
            let text = serde_json::to_string_pretty(&file).expect("gci serialises") + "\n";
            art.write(&format!("gci_{case}_{}.json", obs.name()), text.as_bytes())?;
        }
        out.push(ObservableGci { observable: obs, times: times.clone(), fine: triple.fine, analytic, report });
    }

    if r.wants(Format::Csv) {
        let mut s = String::from("t_star,observable,analytic,fd_fine,gci_abs,mu2,within_band\n");
        for g in &out {
            let scale = g.observable.scale(r);
            for (i, p) in g.report.points.iter().enumerate() {
                let mu2 = p.mu2.map_or_else(String::new, fmt17);
                s += &format!(
                    "{},{},{},{},{},{},{}\n",
                    fmt17(g.times[i] / tx),
                    g.observable.name(),
                    fmt17(g.analytic[i] / scale),
                    fmt17(g.fine[i] / scale),
                    fmt17(p.gci_abs / scale),
                    mu2,
                    within_band(g, i)
                );
            }
        }
        art.write(&format!("overlay_{case}.csv"), s.as_bytes())?;
    }
    Ok(out)
}

/// |fine − analytic| ≤ GCI_abs at sample `i`.
pub fn within_band(g: &ObservableGci, i: usize) -> bool {
    (g.fine[i] - g.analytic[i]).abs() <= g.report.points[i].gci_abs
}

#[derive(Debug, Serialize)]
pub struct TransformReport {
    pub parallelepiped: Option<ParallelepipedSpec>,
    /// Cube side L (the box x side when a box is given).
    pub l: f64,
    pub dxx: f64,
    pub dyy: f64,
    pub dzz: f64,
    pub dyy2: f64,
    pub dzz2: f64,
    /// y = ȳ·L/L_ȳ, z = z̄·L/L_z̄.
    pub y_scale: f64,
    pub z_scale: f64,
    pub tx_star: f64,
    pub ty_star: f64,
    pub tz_star: f64,
}

pub fn transform(r: &Resolved, art: &mut Artifacts) -> Result<String, CliError> {
    let m = &r.model;
    let ts = diffusive_time_scales(m);
    let rep = TransformReport {
        parallelepiped: r.box_spec,
        l: m.l,
        dxx: m.dxx,
        dyy: m.dyy(),
        dzz: m.dzz(),
        dyy2: m.dyy2,
        dzz2: m.dzz2,
        y_scale: m.l / r.map.ly,
        z_scale: m.l / r.map.lz,
        tx_star: ts.tx,
        ty_star: ts.ty,
        tz_star: ts.tz,
    };
    let text = serde_json::to_string_pretty(&rep).expect("transform serialises") + "\n";
    art.write("transform.json", text.as_bytes())?;
    Ok(text)
}
