//! Gauss–Legendre rules, composite panel layouts and summation helpers.

use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// Shared 16-point rule.
pub fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point rule on `[a, b]` whose panel edges include every
/// breakpoint, each base panel split into `2^level` equal pieces.
pub fn composite_rule(a: f64, b: f64, breakpoints: &[f64], level: u32) -> (Vec<f64>, Vec<f64>) {
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let (gx, gw) = gl16();
    let pieces = 1usize << level;
    let mut nodes = Vec::with_capacity((edges.len() - 1) * pieces * 16);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for pair in edges.windows(2) {
        let h = (pair[1] - pair[0]) / pieces as f64;
        for p in 0..pieces {
            let lo = pair[0] + p as f64 * h;
            let half = 0.5 * h;
            let mid = lo + half;
            for (x, w) in gx.iter().zip(gw) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
    }
    (nodes, weights)
}

/// Adaptive 16-point Gauss–Legendre with panel bisection until the
/// two-halves estimate agrees with the whole-panel one to `abs_tol`.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        let (gx, gw) = gl16();
        let half = 0.5 * (b - a);
        let mid = a + half;
        half * gx.iter().zip(gw).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = panel(f, a, m);
        let right = panel(f, m, b);
        let split = left + right;
        let floor = 4.0 * f64::EPSILON * (left.abs() + right.abs());
        if (split - whole).abs() <= tol.max(floor) || depth >= 30 {
            split
        } else {
            recurse(f, a, m, left, 0.5 * tol, depth + 1)
                + recurse(f, m, b, right, 0.5 * tol, depth + 1)
        }
    }
    if a == b {
        return 0.0;
    }
    recurse(f, a, b, panel(f, a, b), abs_tol, 0)
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Deterministic pairwise (tree) sum.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().sum(),
        n => {
            let (l, r) = values.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Composite Newton–Cotes weights on `n` equally spaced nodes: Simpson when
/// the interval count is even, trapezoid otherwise.
pub fn newton_cotes_weights(n: usize, h: f64) -> (Vec<f64>, NodeRule) {
    assert!(n >= 2);
    if n >= 3 && (n - 1) % 2 == 0 {
        let mut w: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 1 { 4.0 } else { 2.0 })
            .collect();
        w[0] = 1.0;
        w[n - 1] = 1.0;
        (w.into_iter().map(|v| v * h / 3.0).collect(), NodeRule::Simpson)
    } else {
        let mut w = vec![h; n];
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
        (w, NodeRule::Trapezoid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeRule {
    Simpson,
    Trapezoid,
    /// Cell-centred midpoint sums.
    Midpoint,
}
