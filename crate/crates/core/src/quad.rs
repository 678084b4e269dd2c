//! Quadrature kernels: Gauss–Legendre rules and the adaptive periodic
//! trapezoidal rule.

use std::f64::consts::{PI, TAU};

/// Gauss–Legendre nodes and weights on `[-1, 1]` (Newton iteration on the
/// three-term recurrence).
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
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
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p, d)
}

/// `∫_a^b f` with an `n`-point Gauss–Legendre rule.
pub(crate) fn gl_integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    rule.0.iter().zip(&rule.1).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half
}

#[allow(dead_code)]
pub(crate) struct PeriodicMean {
    pub value: f64,
    pub nodes: usize,
    /// `|T_N − T_{N/2}|` at the last refinement.
    pub last_difference: f64,
}

// Fixed phase so node sets nest under doubling but do not sit on θ = 0.
const PHASE: f64 = std::f64::consts::FRAC_1_PI;

/// Mean of a `2π`-periodic function by the trapezoidal rule, doubling the
/// node count from `n0` until successive estimates differ by less than
/// `tol·max(1, |T|)` or `cap` nodes are reached.
pub(crate) fn periodic_mean(f: impl Fn(f64) -> f64, n0: usize, tol: f64, cap: usize) -> PeriodicMean {
    let mut n = n0.max(2);
    let step = TAU / n as f64;
    let mut sum: f64 = (0..n).map(|j| f(PHASE + j as f64 * step)).sum();
    let mut value = sum / n as f64;
    let mut last_difference = f64::INFINITY;
    while n < cap {
        let step = TAU / (2 * n) as f64;
        let odd: f64 = (0..n).map(|j| f(PHASE + (2 * j + 1) as f64 * step)).sum();
        sum += odd;
        n *= 2;
        let next = sum / n as f64;
        last_difference = (next - value).abs();
        let converged = last_difference < tol * next.abs().max(1.0) || !next.is_finite();
        value = next;
        if converged {
            break;
        }
    }
    PeriodicMean { value, nodes: n, last_difference }
}
