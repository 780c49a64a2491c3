//! Worked examples checked against independent computations.

use orthocube::gci::{gci_fine, local_gci_field, mu2_percent, observed_order, GridTriple};
use orthocube::moments::{moments_analytic, moments_numeric};
use orthocube::quadrature::integrate_adaptive;
use orthocube::series::{
    coefficients_gaussian, coefficients_plane, coefficients_quadrature, coefficients_step, free_space_point_source,
    mode_rate, QuadratureOptions,
};
use orthocube::tensor::{cube_equivalent, diffusive_time_scales, ParallelepipedSpec};
use orthocube::{InitialCondition, OrthotropicModel, SeriesSolution};
use std::f64::consts::PI;

fn model() -> OrthotropicModel {
    OrthotropicModel::reference()
}

#[test]
fn first_mode_rate() {
    let m = model();
    let r = mode_rate(1, 0, 0, &m);
    assert!((r - PI * PI * 1e-9 / 1e-4).abs() < 1e-18);
    // a = L is already the steady state
    let ic = InitialCondition::Step { a: m.l };
    let sol = SeriesSolution::new(m, ic, 4).unwrap();
    assert_eq!(sol.evaluate(0.3 * m.l, 0.1 * m.l, 0.9 * m.l, 100.0).unwrap(), 1.0 / m.l.powi(3));
}

#[test]
fn step_second_coefficient() {
    let m = model();
    let c = coefficients_step(&m, 0.5 * m.l, 4).unwrap();
    assert!((c.b[2] + 4.0 / (PI * m.l)).abs() < 1e-12 / m.l);
    // quadrature of (2/L)·(1/a)·cos(2πx/L) over the block
    let a = 0.5 * m.l;
    let q = 2.0 / m.l / a
        * integrate_adaptive(&|x: f64| (2.0 * PI * x / m.l).cos(), 0.5 * (m.l - a), 0.5 * (m.l + a), 1e-14);
    assert!((c.b[2] - q).abs() < 1e-8 * q.abs());
    let full = coefficients_step(&m, m.l, 6).unwrap();
    assert!(full.b[1..].iter().all(|v| v.abs() < 1e-12 / m.l));
}

#[test]
fn plane_first_coefficient() {
    let m = model();
    let c = coefficients_plane(&m, 20.0, 40.0, 3).unwrap();
    let want = (1.0 / 61.0) * (-8.0 / (PI * PI)) / m.l.powi(3);
    assert!((c.get(1, 0, 0) - want).abs() < 1e-12 * want.abs());
    let q = coefficients_quadrature(&InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 }, &m, 3, &QuadratureOptions::default())
        .unwrap();
    assert!((q.value(1, 0, 0) - want).abs() < 1e-8 * want.abs());
}

#[test]
fn gaussian_second_coefficient_against_quadrature() {
    let m = model();
    let sigma = 0.1 * m.l;
    let c = coefficients_gaussian(&m, sigma, 4).unwrap();
    // (2/L)∫ g cos / ∫ g with g the unnormalised Gaussian centred at L/2
    let g = |x: f64| (-(x - 0.5 * m.l).powi(2) / (2.0 * sigma * sigma)).exp();
    let num = integrate_adaptive(&|x: f64| g(x) * (2.0 * PI * x / m.l).cos(), 0.0, m.l, 1e-16);
    let den = integrate_adaptive(&g, 0.0, m.l, 1e-16);
    let q = 2.0 / m.l * num / den;
    assert!((c.b[2] - q).abs() < 1e-8 * q.abs(), "{} vs {q}", c.b[2]);
}

#[test]
fn box_mapping_example() {
    let l = 0.01;
    let d = 1e-9;
    let spec = ParallelepipedSpec { lx: l, ly: 0.5 * l, lz: 0.25 * l, d: [d; 3] };
    let (cube, map) = cube_equivalent(&spec).unwrap();
    let [dx, dy, dz] = cube.diffusivities();
    assert_eq!(dx, d);
    assert!((dy - 4.0 * d).abs() < 1e-24);
    assert!((dz - 16.0 * d).abs() < 1e-24);
    let p = [0.3 * l, 0.2 * l, 0.1 * l];
    let back = map.to_parallelepiped(map.to_cube(p));
    assert!(p.iter().zip(&back).all(|(a, b)| (a - b).abs() < 1e-18));
}

#[test]
fn time_scales_scale_with_length_squared() {
    let m = model();
    let big = OrthotropicModel::new(2.0 * m.l, m.dxx, m.dyy2, m.dzz2).unwrap();
    let (a, b) = (diffusive_time_scales(&m), diffusive_time_scales(&big));
    assert!((b.tx / a.tx - 4.0).abs() < 1e-14);
    assert!((b.tz / a.tz - 4.0).abs() < 1e-14);
    let iso = OrthotropicModel::new(m.l, m.dxx, 1.0, 1.0).unwrap();
    let t = diffusive_time_scales(&iso);
    assert!(t.tx == t.ty && t.ty == t.tz);
}

#[test]
fn steady_concentration_at_centre() {
    let m = model();
    let tx = diffusive_time_scales(&m).tx;
    for ic in [
        InitialCondition::Delta,
        InitialCondition::Step { a: 0.5 * m.l },
        InitialCondition::TruncatedGaussian { sigma_x: 0.1 * m.l },
        InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 },
    ] {
        let sol = SeriesSolution::new(m, ic, 20).unwrap();
        let c = sol.evaluate(0.5 * m.l, 0.5 * m.l, 0.5 * m.l, 10.0 * tx).unwrap();
        assert!((c / 1e6 - 1.0).abs() < 1e-6);
    }
}

#[test]
fn free_space_second_moments_are_two_d_t() {
    // variances of the free-space kernel by quadrature of each 1-D factor
    let m = model();
    let t = 50.0;
    let d = m.diffusivities();
    for (axis, &dk) in d.iter().enumerate() {
        let f = |s: f64| {
            let p = match axis {
                0 => [s, 0.0, 0.0],
                1 => [0.0, s, 0.0],
                _ => [0.0, 0.0, s],
            };
            free_space_point_source(&m, p[0], p[1], p[2], t).unwrap()
        };
        let w = 0.5 * m.l;
        let mass = integrate_adaptive(&f, -w, w, 1e-6);
        let var = integrate_adaptive(&|s: f64| s * s * f(s), -w, w, 1e-14) / mass;
        assert!((var / (2.0 * dk * t) - 1.0).abs() < 1e-8, "axis {axis}");
    }
}

#[test]
fn gaussian_moments_on_coarser_grid() {
    let m = model();
    let t = 0.25 * diffusive_time_scales(&m).tx;
    let sol = SeriesSolution::new(m, InitialCondition::TruncatedGaussian { sigma_x: 0.1 * m.l }, 20).unwrap();
    let exact = moments_analytic(&sol, t).unwrap();
    let num = moments_numeric(&sol.evaluate_grid([81; 3], t).unwrap()).unwrap();
    for k in 0..3 {
        assert!((num.moments.second[k] / exact.second[k] - 1.0).abs() < 1e-5);
        assert!(num.off_diagonal[k].abs() < 1e-12 * m.l * m.l);
    }
}

#[test]
fn moment_histories_approach_steady_state() {
    let m = model();
    let tx = diffusive_time_scales(&m).tx;
    let times: Vec<f64> = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0].iter().map(|t| t * tx).collect();
    for ic in [InitialCondition::Delta, InitialCondition::TruncatedGaussian { sigma_x: 0.1 * m.l }] {
        let sol = SeriesSolution::new(m, ic, 20).unwrap();
        let hist: Vec<[f64; 3]> = times.iter().map(|&t| moments_analytic(&sol, t).unwrap().second).collect();
        for w in hist.windows(2) {
            for k in 0..3 {
                assert!(w[1][k] >= w[0][k]);
            }
        }
        // x relaxes fastest
        for h in &hist {
            assert!(h[0] >= h[1] && h[1] >= h[2]);
        }
    }
    let plane = SeriesSolution::new(m, InitialCondition::Plane { kappa_y: 20.0, kappa_z: 40.0 }, 20).unwrap();
    let firsts: Vec<[f64; 3]> = times.iter().map(|&t| moments_analytic(&plane, t).unwrap().first).collect();
    for w in firsts.windows(2) {
        for k in 0..3 {
            assert!((w[1][k] - 0.5 * m.l).abs() <= (w[0][k] - 0.5 * m.l).abs());
        }
    }
}

#[test]
fn order_examples() {
    assert!((observed_order(4.0, 1.0, 2.0, 2.0).unwrap() - 2.0).abs() < 1e-12);
    assert!((observed_order(8.0, 1.0, 2.0, 2.0).unwrap() - 3.0).abs() < 1e-12);
    let h = [0.01, 0.02, 0.04f64];
    let phi = h.map(|h| 1.5 + 0.3 * h.powf(2.37));
    let p = observed_order(phi[2] - phi[1], phi[1] - phi[0], 2.0, 2.0).unwrap();
    assert!((p - 2.37).abs() < 1e-8);
}

#[test]
fn gci_examples() {
    let g = gci_fine(1.0, 0.99, 2.0, 2.0).unwrap();
    assert!((g - 1.25 * 0.01 / 3.0).abs() < 1e-12);
    assert!((g - 0.0041667).abs() < 1e-7);
    assert_eq!(gci_fine(2.0, 2.0, 2.0, 2.0).unwrap(), 0.0);
    assert!(gci_fine(1.0, 0.99, 2.0, 200.0).unwrap() < 1e-60);
    let m = model();
    assert!((mu2_percent(8.33e-7, &m) - 10.0).abs() < 0.01);
    assert_eq!(mu2_percent(0.0, &m), 0.0);
}

#[test]
fn manufactured_field_has_uniform_order() {
    let n = 50;
    let h = [0.01, 0.02, 0.04f64];
    let make = |hh: f64| -> Vec<f64> {
        (0..n).map(|i| 1.0 + i as f64 * 0.1 + (1.0 + 0.02 * i as f64) * hh * hh).collect()
    };
    let t = GridTriple::new(make(h[0]), make(h[1]), make(h[2]), h).unwrap();
    let r = local_gci_field(&t).unwrap();
    assert!((r.p_global - 2.0).abs() < 1e-6);
    assert_eq!(r.excluded_fraction, 0.0);
    let same = GridTriple::new(make(h[0]), make(h[0]), make(h[2]), h).unwrap();
    let z = local_gci_field(&same).unwrap();
    assert!(z.points.iter().all(|p| p.gci == Some(0.0)));
}
