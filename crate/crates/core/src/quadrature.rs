//! Adaptive Gauss–Legendre quadrature.
//!
//! Used only as an independent check on [`crate::special`]; it shares no
//! code with the series evaluator.

use std::sync::OnceLock;

const ORDER: usize = 20;
const MAX_DEPTH: u32 = 40;

/// Nodes and weights on [-1, 1], computed once by Newton iteration on P_n.
fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        out
    })
}

/// P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * rule().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let left = fixed(f, a, m);
    let right = fixed(f, m, b);
    let both = left + right;
    if depth >= MAX_DEPTH || (both - whole).abs() <= tol {
        return both;
    }
    adapt(f, a, m, left, 0.5 * tol, depth + 1) + adapt(f, m, b, right, 0.5 * tol, depth + 1)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let whole = fixed(&f, a, b);
    adapt(&f, a, b, whole, tol, 0)
}

/// `2 ∫₀¹ u / (1 + z u^η) du`, which equals `₂F₁(1, 2/η; 1 + 2/η; −z)`.
///
/// This is the capture-probability integral written in units of the disk
/// radius. The integrand peaks near `u = z^{-1/η}`, so the interval is split
/// there to let the adaptive rule resolve both sides.
pub fn capture_integral(eta: f64, z: f64) -> f64 {
    let f = |u: f64| u / (1.0 + z * u.powf(eta));
    let knee = if z > 1.0 { z.powf(-1.0 / eta) } else { 1.0 };
    // the value is at least of order knee^2
    let tol = 1e-13 * knee * knee;
    let mut total = 0.0;
    let mut a = 0.0;
    for edge in [knee * 0.5, knee, knee * 4.0, 1.0] {
        let edge = edge.min(1.0);
        if edge > a {
            total += integrate(f, a, edge, tol);
            a = edge;
        }
    }
    2.0 * total
}
