//! TOML run configuration. Every block is optional; omitted values fall back
//! to the reference parameter set (L = 0.01 m, Dxx = 1e-9 m²/s, d²yy = 2,
//! d²zz = 4, a = 0.5 L, σx = 0.1 L, κy = 20, κz = 40, N = 20).

use crate::CliError;
use orthocube::tensor::{
    cube_equivalent, orthotropic_from_principal, principal_decomposition, CoordinateMap, ParallelepipedSpec,
};
use orthocube::{InitialCondition, OrthotropicModel, SymmetricTensor3};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelBlock,
    pub ic: IcBlock,
    pub series: SeriesBlock,
    pub fd: FdBlock,
    pub times: TimesBlock,
    pub outputs: OutputsBlock,
}

/// Either (l, dxx, dyy2, dzz2), a full tensor with `l`, or a parallelepiped.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dxx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyy2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dzz2: Option<f64>,
    /// [Dxx, Dyy, Dzz, Dxy, Dxz, Dyz] in m²/s.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[f64; 6]>,
    /// Eigenvalue index (descending order) placed on x, y, z.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<[usize; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallelepiped: Option<ParallelepipedSpec>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    #[default]
    Delta,
    Step,
    Gaussian,
    Plane,
}

impl Case {
    pub fn name(self) -> &'static str {
        match self {
            Case::Delta => "delta",
            Case::Step => "step",
            Case::Gaussian => "gaussian",
            Case::Plane => "plane",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        match s {
            "delta" => Some(Case::Delta),
            "step" => Some(Case::Step),
            "gaussian" => Some(Case::Gaussian),
            "plane" => Some(Case::Plane),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IcBlock {
    pub case: Case,
    /// Step width (m); default 0.5 L.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    /// Gaussian σ along x (m); default 0.1 L.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeriesBlock {
    pub n_terms: usize,
}

impl Default for SeriesBlock {
    fn default() -> Self {
        Self { n_terms: 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdBlock {
    /// Cells per reference length L, any order.
    pub grids: Vec<usize>,
    pub safety: f64,
    /// FD samples are the output times with t* in [min_t_star, max_t_star].
    pub min_t_star: f64,
    pub max_t_star: f64,
    /// Diffusivity overrides for the FD runs only (cube model terms).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dxx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyy2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dzz2: Option<f64>,
}

impl Default for FdBlock {
    fn default() -> Self {
        Self {
            grids: vec![20, 40, 80],
            safety: orthocube::fd::DEFAULT_SAFETY,
            min_t_star: 0.05,
            max_t_star: 1.0,
            dxx: None,
            dyy2: None,
            dzz2: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    TStar,
    Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimesBlock {
    pub unit: TimeUnit,
    /// Moment output times.
    pub values: Vec<f64>,
    /// Times at which fields are written (VTK).
    pub fields: Vec<f64>,
    /// Nodes per axis of written fields.
    pub field_nodes: usize,
}

impl Default for TimesBlock {
    fn default() -> Self {
        Self {
            unit: TimeUnit::TStar,
            values: vec![0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0],
            fields: Vec::new(),
            field_nodes: 41,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Vtk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputsBlock {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Vtk] }
    }
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub case: Option<Case>,
    pub n_terms: Option<usize>,
    pub grids: Option<Vec<usize>>,
}

/// A validated configuration with every physical quantity built.
#[derive(Debug, Clone)]
pub struct Resolved {
    /// The configuration with defaults filled in; echoing it reproduces the run.
    pub config: RunConfig,
    /// Cube model used by the series.
    pub model: OrthotropicModel,
    /// Box the FD solver runs on when the problem is posed on a parallelepiped.
    pub box_spec: Option<ParallelepipedSpec>,
    pub map: CoordinateMap,
    pub ic: InitialCondition,
    /// Output times (s), ascending.
    pub times: Vec<f64>,
    pub field_times: Vec<f64>,
    /// Cube model the FD runs use (differs only under overrides).
    pub fd_model: OrthotropicModel,
}

fn bad(path: &str, message: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), message: message.into() }
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| bad("<file>", format!("cannot read {}: {e}", p.display())))?;
            parse(&text)
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, CliError> {
    toml::from_str(text).map_err(|e| {
        let path = e.span().map_or_else(|| "<root>".to_string(), |s| key_path(text, s.start, s.end));
        bad(&path, e.message().to_string())
    })
}

/// Dotted key path of the span: enclosing table header plus the key on its line.
fn key_path(text: &str, start: usize, end: usize) -> String {
    let before = &text[..start.min(text.len())];
    let table = before
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = &text[line_start..text[line_start..].find('\n').map_or(text.len(), |i| line_start + i)];
    let key = line.split('=').next().map(str::trim).filter(|k| !k.is_empty() && !k.starts_with('['));
    let spanned = text.get(start..end).map(str::trim).unwrap_or("");
    match (table, key) {
        (Some(t), Some(k)) => format!("{t}.{k}"),
        (None, Some(k)) => k.to_string(),
        (Some(t), None) if !spanned.is_empty() => format!("{t} ({spanned})"),
        (Some(t), None) => t,
        (None, None) => "<root>".to_string(),
    }
}

fn positive(path: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(d) = &o.out {
            self.outputs.dir = d.clone();
        }
        if let Some(c) = o.case {
            self.ic.case = c;
        }
        if let Some(n) = o.n_terms {
            self.series.n_terms = n;
        }
        if let Some(g) = &o.grids {
            self.fd.grids = g.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mb = &self.model;
        let (model, box_spec, map) = if let Some(p) = mb.parallelepiped {
            if mb.tensor.is_some() || mb.dxx.is_some() || mb.dyy2.is_some() || mb.dzz2.is_some() {
                return Err(bad("model", "parallelepiped excludes tensor and dxx/dyy2/dzz2"));
            }
            if let Some(l) = mb.l {
                if l != p.lx {
                    return Err(bad("model.l", "must equal parallelepiped.lx (the reference length)"));
                }
            }
            let (m, map) = cube_equivalent(&p).map_err(|e| bad("model.parallelepiped", e.to_string()))?;
            (m, Some(p), map)
        } else if let Some(t) = mb.tensor {
            if mb.dxx.is_some() || mb.dyy2.is_some() || mb.dzz2.is_some() {
                return Err(bad("model", "tensor excludes dxx/dyy2/dzz2"));
            }
            let l = positive("model.l", mb.l.unwrap_or(0.01))?;
            let st = SymmetricTensor3::new(t[0], t[1], t[2], t[3], t[4], t[5]);
            let pd = principal_decomposition(&st).map_err(|e| bad("model.tensor", e.to_string()))?;
            let m = orthotropic_from_principal(&pd, l, mb.assignment)
                .map_err(|e| bad("model.assignment", e.to_string()))?;
            (m, None, CoordinateMap { l, ly: l, lz: l })
        } else {
            if mb.assignment.is_some() {
                return Err(bad("model.assignment", "only meaningful with a tensor"));
            }
            let l = positive("model.l", mb.l.unwrap_or(0.01))?;
            let dxx = positive("model.dxx", mb.dxx.unwrap_or(1e-9))?;
            let dyy2 = positive("model.dyy2", mb.dyy2.unwrap_or(2.0))?;
            let dzz2 = positive("model.dzz2", mb.dzz2.unwrap_or(4.0))?;
            let m = OrthotropicModel::new(l, dxx, dyy2, dzz2).map_err(|e| bad("model", e.to_string()))?;
            (m, None, CoordinateMap { l, ly: l, lz: l })
        };
        let l = model.l;

        let mut config = self.clone();
        let icb = &mut config.ic;
        let ic = match icb.case {
            Case::Delta => InitialCondition::Delta,
            Case::Step => {
                let a = *icb.a.get_or_insert(0.5 * l);
                InitialCondition::Step { a }
            }
            Case::Gaussian => {
                let sigma_x = *icb.sigma_x.get_or_insert(0.1 * l);
                InitialCondition::TruncatedGaussian { sigma_x }
            }
            Case::Plane => {
                let kappa_y = *icb.kappa_y.get_or_insert(20.0);
                let kappa_z = *icb.kappa_z.get_or_insert(40.0);
                InitialCondition::Plane { kappa_y, kappa_z }
            }
        };
        ic.validate(&model).map_err(|e| bad("ic", e.to_string()))?;

        if config.series.n_terms == 0 {
            return Err(bad("series.n_terms", "must be at least 1"));
        }
        let fd = &config.fd;
        if fd.grids.iter().any(|&n| n < 4) {
            return Err(bad("fd.grids", "every grid needs at least 4 cells per L"));
        }
        if !(fd.safety > 0.0 && fd.safety <= 1.0) {
            return Err(bad("fd.safety", "must lie in (0, 1]"));
        }
        positive("fd.max_t_star", fd.max_t_star)?;
        if !(fd.min_t_star >= 0.0 && fd.min_t_star <= fd.max_t_star) {
            return Err(bad("fd.min_t_star", "must lie in [0, fd.max_t_star]"));
        }
        if let Some(b) = box_spec {
            for n in &fd.grids {
                for (name, len) in [("ly", b.ly), ("lz", b.lz)] {
                    let cells = *n as f64 * len / l;
                    if (cells - cells.round()).abs() > 1e-9 {
                        return Err(bad("fd.grids", format!("{n} cells per L do not tile {name} = {len}")));
                    }
                }
            }
        }
        let fd_model = OrthotropicModel::new(
            l,
            positive("fd.dxx", fd.dxx.unwrap_or(model.dxx))?,
            positive("fd.dyy2", fd.dyy2.unwrap_or(model.dyy2))?,
            positive("fd.dzz2", fd.dzz2.unwrap_or(model.dzz2))?,
        )
        .map_err(|e| bad("fd", e.to_string()))?;

        let tb = &config.times;
        let tx = orthocube::tensor::diffusive_time_scales(&model).tx;
        let to_seconds = |v: f64| match tb.unit {
            TimeUnit::TStar => v * tx,
            TimeUnit::Seconds => v,
        };
        let check_times = |path: &str, vs: &[f64]| -> Result<Vec<f64>, CliError> {
            if vs.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(bad(path, "times must be finite and nonnegative"));
            }
            let mut out: Vec<f64> = vs.iter().map(|&v| to_seconds(v)).collect();
            out.sort_by(f64::total_cmp);
            out.dedup();
            Ok(out)
        };
        let times = check_times("times.values", &tb.values)?;
        if times.is_empty() {
            return Err(bad("times.values", "at least one time is required"));
        }
        let field_times = check_times("times.fields", &tb.fields)?;
        if tb.field_nodes < 2 {
            return Err(bad("times.field_nodes", "at least 2 nodes per axis"));
        }
        if matches!(ic, InitialCondition::Delta) && field_times.first() == Some(&0.0) {
            return Err(bad("times.fields", "the delta field is not defined at t = 0"));
        }
        if config.outputs.formats.is_empty() {
            return Err(bad("outputs.formats", "at least one format is required"));
        }
        Ok(Resolved { config, model, box_spec, map, ic, times, field_times, fd_model })
    }
}

impl Resolved {
    pub fn case(&self) -> Case {
        self.config.ic.case
    }

    pub fn n_terms(&self) -> usize {
        self.config.series.n_terms
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.outputs.dir
    }

    pub fn wants(&self, f: Format) -> bool {
        self.config.outputs.formats.contains(&f)
    }

    pub fn tx(&self) -> f64 {
        orthocube::tensor::diffusive_time_scales(&self.model).tx
    }

    /// Output times inside the FD window.
    pub fn fd_times(&self) -> Vec<f64> {
        let tx = self.tx();
        let (lo, hi) = (self.config.fd.min_t_star * tx, self.config.fd.max_t_star * tx);
        self.times.iter().copied().filter(|&t| t >= lo * (1.0 - 1e-12) && t <= hi * (1.0 + 1e-12)).collect()
    }

    /// FD grids, finest first.
    pub fn grids_fine_first(&self) -> Vec<usize> {
        let mut g = self.config.fd.grids.clone();
        g.sort_unstable_by(|a, b| b.cmp(a));
        g.dedup();
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_set() {
        let r = RunConfig::default().resolve().unwrap();
        assert_eq!(r.model, OrthotropicModel::reference());
        assert_eq!(r.n_terms(), 20);
        assert_eq!(r.times.first(), Some(&0.0));
        assert_eq!(*r.times.last().unwrap(), 10.0 * 25000.0);
    }

    #[test]
    fn case_defaults_scale_with_length() {
        let mut c = parse("[model]\nl = 0.02\n[ic]\ncase = \"step\"").unwrap();
        let r = c.resolve().unwrap();
        assert!(matches!(r.ic, InitialCondition::Step { a } if a == 0.01));
        c.ic.case = Case::Gaussian;
        let r = c.resolve().unwrap();
        assert!(matches!(r.ic, InitialCondition::TruncatedGaussian { sigma_x } if (sigma_x - 0.002).abs() < 1e-15));
    }

    #[test]
    fn unknown_keys_fail_closed() {
        let e = parse("[model]\nlength = 1.0").unwrap_err();
        assert!(e.to_string().contains("model.length"), "{e}");
        let e = parse("[fd]\nsafety = \"big\"").unwrap_err();
        assert!(e.to_string().contains("fd.safety"), "{e}");
        assert!(parse("[nonsense]").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let c = parse("[ic]\ncase = \"plane\"\n[times]\nvalues = [0.0, 1.0]").unwrap();
        let r = c.resolve().unwrap();
        let echo = r.config.to_toml();
        let again = parse(&echo).unwrap();
        assert_eq!(again, r.config);
        let r2 = again.resolve().unwrap();
        assert_eq!(format!("{:?}", r2.ic), format!("{:?}", r.ic));
        assert_eq!(r2.times, r.times);
    }

    #[test]
    fn seconds_unit() {
        let c = parse("[times]\nunit = \"seconds\"\nvalues = [2500.0]").unwrap();
        assert_eq!(c.resolve().unwrap().times, vec![2500.0]);
    }

    #[test]
    fn parallelepiped_model() {
        let c = parse("[model.parallelepiped]\nlx = 0.01\nly = 0.02\nlz = 0.01\nd = [1e-9, 1e-9, 1e-9]").unwrap();
        let r = c.resolve().unwrap();
        assert!((r.model.dyy2 - 4.0).abs() < 1e-12);
        assert!(r.box_spec.is_some());
        let bad_grid = parse("[model.parallelepiped]\nlx = 0.01\nly = 0.015\nlz = 0.01\nd = [1e-9, 1e-9, 1e-9]\n[fd]\ngrids = [5]")
            .unwrap();
        assert!(bad_grid.resolve().is_err());
    }

    #[test]
    fn tensor_model() {
        let c = parse("[model]\nl = 0.01\ntensor = [0.25e-9, 1e-9, 0.5e-9, 0.0, 0.0, 0.0]").unwrap();
        let r = c.resolve().unwrap();
        assert!((r.model.dxx - 1e-9).abs() < 1e-21);
        assert!((r.model.dyy2 - 2.0).abs() < 1e-9);
        assert!((r.model.dzz2 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_values_name_their_field() {
        let e = parse("[model]\ndxx = -1.0").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("model.dxx"), "{e}");
        let e = parse("[ic]\ncase = \"step\"\na = 1.0").unwrap().resolve().unwrap_err();
        assert!(e.to_string().contains("ic"), "{e}");
    }
}
