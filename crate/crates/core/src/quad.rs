//! Adaptive Simpson quadrature, used by the layer-cake and indicator checks.

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64, whole: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let left = simpson(f, a, c);
    let right = simpson(f, c, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        left + right + delta / 15.0
    } else {
        adapt(f, a, c, 0.5 * eps, left, depth - 1) + adapt(f, c, b, 0.5 * eps, right, depth - 1)
    }
}

/// Adaptive Simpson integral of `f` over `[a, b]` with absolute tolerance `eps`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    adapt(&f, a, b, eps, simpson(&f, a, b), 48)
}

/// Integrates across a strictly increasing breakpoint list, restarting the
/// adaptive subdivision on each piece so kinks at the breakpoints cost nothing.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, breakpoints: &[f64], eps: f64) -> f64 {
    let n = breakpoints.len().saturating_sub(1).max(1);
    breakpoints
        .windows(2)
        .map(|w| adaptive_simpson(&f, w[0], w[1], eps / n as f64))
        .sum()
}
