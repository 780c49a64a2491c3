//! Built-in consistency suite run by `orthocube verify`.

use crate::config::{Case, Resolved};
use crate::report::{Artifacts, Check};
use crate::run::{self, Observable};
use crate::CliError;
use orthocube::gci::observed_order;
use orthocube::moments::{moments_analytic, moments_numeric};
use orthocube::quadrature::{gauss_legendre, integrate_adaptive, newton_cotes_weights};
use orthocube::series::{coefficients_closed_form, coefficients_delta, coefficients_gaussian, coefficients_quadrature};
use orthocube::series::{axis_rate, QuadratureOptions};
use orthocube::{Field3, InitialCondition, SeriesSolution};

const GRID: usize = 129;
const COEFF_REL: f64 = 1e-8;
const COEFF_FLOOR: f64 = 1e-12;
const MASS_TOL: f64 = 1e-6;
/// Negative lobes of a truncated series are only checked from this t* on.
const NEGATIVE_FROM_T_STAR: f64 = 0.05;
const NUMERIC_REL: f64 = 1e-4;
const MU2_MAX: f64 = 10.0;
const DRIFT_MAX: f64 = 1e-12;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs every check, writing the usual solve/fd/gci artifacts on the way.
pub fn verify(r: &Resolved, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let series = run::solve(r, art)?;
    checks.extend(coefficient_checks(r)?);
    checks.extend(field_checks(r, &series.solution)?);
    checks.extend(endpoint_checks(r, &series.solution)?);
    if r.grids_fine_first().len() >= 3 && !r.fd_times().is_empty() {
        checks.extend(fd_checks(r, art)?);
    }
    checks.push(manufactured_order_check(r));
    Ok(checks)
}

/// Closed-form coefficients against quadrature of the IC, modes ≤ min(N, 10).
fn coefficient_checks(r: &Resolved) -> Result<Vec<Check>, CliError> {
    let m = &r.model;
    let n = r.n_terms().min(10);
    let opts = QuadratureOptions::default();
    let floor = COEFF_FLOOR / m.l.powi(3);
    let worst_over = |a: &dyn Fn(usize, usize, usize) -> f64, b: &dyn Fn(usize, usize, usize) -> f64, tol: f64| {
        let mut worst = 0.0f64;
        let mut at = [0; 3];
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    let (x, y) = (a(i, j, k), b(i, j, k));
                    let e = (x - y).abs() / (tol * y.abs()).max(floor);
                    if e > worst {
                        worst = e;
                        at = [i, j, k];
                    }
                }
            }
        }
        (worst * tol, at)
    };
    let mut out = Vec::new();
    if matches!(r.ic, InitialCondition::Delta) {
        // quadrature runs on a narrow Gaussian; compare it with that Gaussian's
        // closed form, then the Gaussian with the delta in the σ → 0 limit
        let sigma = opts.delta_surrogate * m.l;
        let q = coefficients_quadrature(&r.ic, m, n, &opts)?;
        let g = coefficients_gaussian(m, sigma, n)?;
        let (w, at) = worst_over(&|i, j, k| q.value(i, j, k), &|i, j, k| g.product(i, j, k), COEFF_REL);
        out.push(Check::at_most(
            "coefficients_quadrature",
            w,
            COEFF_REL,
            format!("Gaussian surrogate σ = {:e}·L, worst mode {at:?}", opts.delta_surrogate),
        ));
        let narrow = coefficients_gaussian(m, 1e-6 * m.l, n)?;
        let d = coefficients_delta(m, n);
        let (w, at) = worst_over(&|i, j, k| narrow.product(i, j, k), &|i, j, k| d.product(i, j, k), 1e-6);
        out.push(Check::at_most("coefficients_delta_limit", w, 1e-6, format!("σ = 1e-6·L, worst mode {at:?}")));
    } else {
        let q = coefficients_quadrature(&r.ic, m, n, &opts)?;
        let c = coefficients_closed_form(&r.ic, m, n)?;
        let (w, at) = worst_over(&|i, j, k| q.value(i, j, k), &|i, j, k| c.get(i, j, k), COEFF_REL);
        out.push(Check::at_most("coefficients_quadrature", w, COEFF_REL, format!("worst mode {at:?}")));
    }
    Ok(out)
}

fn weights(f: &Field3) -> [Vec<f64>; 3] {
    [0, 1, 2].map(|a| newton_cotes_weights(f.dims[a], f.spacing[a]).0)
}

fn negative_mass(f: &Field3) -> f64 {
    let w = weights(f);
    let [nx, ny, nz] = f.dims;
    let mut s = 0.0;
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let v = f.get(i, j, k);
                if v < 0.0 {
                    s -= w[0][i] * w[1][j] * w[2][k] * v;
                }
            }
        }
    }
    s
}

/// Mass (total and negative part) and quadrature moments on 129³ nodes.
fn field_checks(r: &Resolved, sol: &SeriesSolution) -> Result<Vec<Check>, CliError> {
    let tx = r.tx();
    let mut t_stars: Vec<f64> = vec![0.0, 0.01, 0.25, 1.0, 10.0];
    t_stars.extend(r.times.iter().map(|t| t / tx));
    t_stars.sort_by(f64::total_cmp);
    t_stars.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    let delta = matches!(r.ic, InitialCondition::Delta);

    let (mut mass_worst, mut mass_at) = (0.0f64, f64::NAN);
    let (mut neg_worst, mut neg_at) = (0.0f64, f64::NAN);
    let (mut mom_worst, mut mom_at) = (0.0f64, f64::NAN);
    for &ts in &t_stars {
        if delta && ts == 0.0 {
            continue;
        }
        let t = ts * tx;
        let field = sol.evaluate_grid([GRID; 3], t)?;
        let num = moments_numeric(&field)?;
        let e = (num.moments.m0 - 1.0).abs();
        if !(e <= mass_worst) {
            (mass_worst, mass_at) = (e, ts);
        }
        if ts >= NEGATIVE_FROM_T_STAR {
            let neg = negative_mass(&field);
            if !(neg <= neg_worst) {
                (neg_worst, neg_at) = (neg, ts);
            }
        }
        if (0.01..=10.0).contains(&ts) && r.times.iter().any(|&x| (x / tx - ts).abs() <= 1e-12 * ts.max(1.0)) {
            let exact = moments_analytic(sol, t)?;
            for a in 0..3 {
                let e = rel(num.moments.second[a], exact.second[a]);
                if !(e <= mom_worst) {
                    (mom_worst, mom_at) = (e, ts);
                }
            }
        }
    }

    let diagnosis = |at: f64| {
        let n = r.n_terms();
        let slowest = (0..3).map(|a| axis_rate(a, n + 1, &r.model)).fold(f64::INFINITY, f64::min);
        format!(
            "worst at t* = {at}; truncation: N = {n}, first dropped mode decays only to exp(-λt) = {:.3e} there; increase series.n_terms",
            (-slowest * at * tx).exp()
        )
    };
    let mut out = Vec::new();
    let mut c = Check::at_most("mass_total", mass_worst, MASS_TOL, format!("Simpson {GRID}³, worst at t* = {mass_at}"));
    if !c.pass {
        c.detail = diagnosis(mass_at);
    }
    out.push(c);
    let mut c = Check::at_most(
        "mass_negative_part",
        neg_worst,
        MASS_TOL,
        if neg_at.is_nan() {
            format!("no negative lobes for t* ≥ {NEGATIVE_FROM_T_STAR}")
        } else {
            format!("mass in negative lobes for t* ≥ {NEGATIVE_FROM_T_STAR}, worst at t* = {neg_at}")
        },
    );
    if !c.pass {
        c.detail = diagnosis(neg_at);
    }
    out.push(c);
    if mom_at.is_finite() {
        out.push(Check::at_most(
            "moments_numeric",
            mom_worst,
            NUMERIC_REL,
            format!("Mii analytic vs Simpson {GRID}³, worst at t* = {mom_at}"),
        ));
    }
    Ok(out)
}

/// Per-axis integrals of x^p·profile over [0, L], split at the breakpoints.
fn profile_integral(r: &Resolved, axis: usize, f: &dyn Fn(f64) -> f64) -> f64 {
    let l = r.model.l;
    let mut edges = vec![0.0];
    edges.extend(r.ic.breakpoints(&r.model, axis).into_iter().filter(|&b| b > 0.0 && b < l));
    edges.push(l);
    edges.windows(2).map(|w| integrate_adaptive(&f, w[0], w[1], 1e-14 * l)).sum()
}

/// IC moments from independent quadrature: per axis for product ICs, a
/// tensor Gauss rule (exact for linear densities) otherwise.
fn ic_moment_oracle(r: &Resolved) -> ([f64; 3], [f64; 3]) {
    let m = &r.model;
    let l = m.l;
    match r.ic {
        InitialCondition::Delta => ([0.5 * l; 3], [0.0; 3]),
        InitialCondition::Plane { .. } => {
            let (x, w) = gauss_legendre(6);
            let node = |i: usize| 0.5 * l * (1.0 + x[i]);
            let mut s = [0.0; 7];
            for i in 0..6 {
                for j in 0..6 {
                    for k in 0..6 {
                        let p = [node(i), node(j), node(k)];
                        let wt = w[i] * w[j] * w[k] * (0.5 * l).powi(3) * r.ic.density(m, p).unwrap();
                        s[0] += wt;
                        for a in 0..3 {
                            s[1 + a] += wt * p[a];
                            s[4 + a] += wt * p[a] * p[a];
                        }
                    }
                }
            }
            let first = [0, 1, 2].map(|a| s[1 + a] / s[0]);
            let second = [0, 1, 2].map(|a| s[4 + a] / s[0] - first[a] * first[a]);
            (first, second)
        }
        _ => {
            let mut first = [0.0; 3];
            let mut second = [0.0; 3];
            for a in 0..3 {
                let p = |x: f64| r.ic.profile_value(m, a, x).unwrap();
                let m0 = profile_integral(r, a, &p);
                let m1 = profile_integral(r, a, &|x| x * p(x)) / m0;
                let m2 = profile_integral(r, a, &|x| (x - m1).powi(2) * p(x)) / m0;
                first[a] = m1;
                second[a] = m2;
            }
            (first, second)
        }
    }
}

fn endpoint_checks(r: &Resolved, sol: &SeriesSolution) -> Result<Vec<Check>, CliError> {
    let l = r.model.l;
    let (first, second) = ic_moment_oracle(r);
    let at0 = moments_analytic(sol, 0.0)?;
    let e1 = (0..3).map(|a| (at0.first[a] - first[a]).abs() / l).fold(0.0, f64::max);
    let e2 = (0..3).map(|a| (at0.second[a] - second[a]).abs() / (l * l)).fold(0.0, f64::max);
    let steady = moments_analytic(sol, 10.0 * r.tx())?;
    let es = (0..3).map(|a| rel(steady.second[a], r.model.m_inf())).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("initial_first_moments", e1, 1e-12, "|m_i(0) − quadrature oracle| / L"),
        Check::at_most("initial_second_moments", e2, 1e-10, "|M_ii(0) − quadrature oracle| / L²"),
        Check::at_most("steady_second_moments", es, 1e-6, "M_ii(10·Tx*) against L²/12, relative"),
    ])
}

/// FD mass drift, μ2, order of the Gaussian Mxx and the analytic-in-band test.
fn fd_checks(r: &Resolved, art: &mut Artifacts) -> Result<Vec<Check>, CliError> {
    let grids = r.grids_fine_first();
    let runs = run::fd_all(r, art)?;
    let triple: Vec<run::FdRun> = runs.into_iter().take(3).collect();
    let drift = triple.iter().flat_map(|x| x.mass_drift.iter().copied()).fold(0.0, f64::max);
    let gcis = run::gci(r, &triple, art)?;
    let tx = r.tx();

    let mut out = vec![Check::at_most("fd_mass_drift", drift, DRIFT_MAX, "relative, all samples on all grids")];
    let mu2 = gcis.iter().filter_map(|g| g.report.summary.mu2_max).fold(0.0, f64::max);
    out.push(Check::at_most(
        "fd_mu2_max",
        mu2,
        MU2_MAX,
        format!("percent, grids {:?}", &grids[..3]),
    ));

    if r.case() == Case::Gaussian {
        if let Some(g) = gcis.iter().find(|g| g.observable == Observable::Second(0)) {
            if let Some(i) = g.times.iter().position(|&t| (t / tx - 0.25).abs() < 1e-9) {
                let p = g.report.points[i].p_local.unwrap_or(f64::NAN);
                out.push(Check::at_most("fd_order_mxx", (p - 2.0).abs(), 0.3, format!("P = {p} at t* = 0.25")));
            }
        }
    }

    let mut worst = 0.0f64;
    let mut detail = String::from("all samples inside");
    for g in gcis.iter().filter(|g| matches!(g.observable, Observable::Second(_))) {
        for i in 0..g.times.len() {
            let gap = (g.fine[i] - g.analytic[i]).abs();
            let band = g.report.points[i].gci_abs;
            let ratio = if band > 0.0 { gap / band } else if gap == 0.0 { 0.0 } else { f64::INFINITY };
            if !(ratio <= worst) {
                worst = ratio;
                detail = format!(
                    "{} at t* = {}: |FD − analytic| = {gap:.3e} m², GCI band {band:.3e} m²",
                    g.observable.name(),
                    g.times[i] / tx
                );
            }
        }
    }
    out.push(Check::at_most("fd_analytic_within_gci", worst, 1.0, detail));
    Ok(out)
}

/// Recovers known orders from manufactured three-grid data at the
/// configured refinement ratios.
fn manufactured_order_check(r: &Resolved) -> Check {
    let g = r.grids_fine_first();
    let (r21, r32) = if g.len() >= 3 {
        (g[0] as f64 / g[1] as f64, g[1] as f64 / g[2] as f64)
    } else {
        (2.0, 2.0)
    };
    let h1 = 0.05;
    let h = [h1, h1 * r21, h1 * r21 * r32];
    let mut worst = 0.0f64;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let phi = h.map(|h| 1.0 + 0.5 * h.powf(p));
        let got = observed_order(phi[2] - phi[1], phi[1] - phi[0], r21, r32).unwrap_or(f64::NAN);
        let e = (got - p).abs();
        if !(e <= worst) {
            worst = e;
        }
    }
    Check::at_most("manufactured_order", worst, 1e-6, format!("p ∈ {{1, 1.5, 2, 3}}, r21 = {r21}, r32 = {r32}"))
}
