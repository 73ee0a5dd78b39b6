//! Exact pointwise evaluation of the centered Hardy-Littlewood maximal
//! operator on piecewise-linear functions, the uncentered variant, the
//! indicator fast path, and operator iteration with certified truncation.
//!
//! The centered evaluator is exact, not a grid search: with
//! `F` the antiderivative, the average `A(r) = (F(x+r) - F(x-r)) / (2r)` is a
//! ratio (quadratic in `r`) / (2r) on each radius cell delimited by the radii
//! at which `x +- r` crosses a knot of `f`. Stationary points solve
//! `r Q'(r) - Q(r) = 0`, which collapses to `gamma r^2 = alpha`; the supremum
//! is the max of `A` over cell endpoints, admissible stationary roots, and the
//! `r -> 0+` limit. Radius cells are scanned in increasing order and abandoned
//! as soon as the bound `A(r) <= ||f||_1 / (2r)` cannot beat the running best,
//! which keeps one application of the operator near-linear in practice.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::pwl::{Exponent, PiecewiseLinear, Segment};

/// Policy for representing `Mf` as a new piecewise-linear function.
///
/// The represented domain after one application is `[-X, X]` where `X` is the
/// smallest tail-grid point at which the closed-form bound
/// `Mf(x) <= ||f||_1 / (2(|x| - R))` certifies that the discarded L^p mass is
/// at most `tail_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximalConfig {
    /// Extra grid points inserted per existing knot interval when resampling.
    pub refine_factor: u32,
    /// Geometric spacing ratio for grid points beyond the support.
    pub tail_grid_ratio: f64,
    /// Admissible discarded L^p mass (to the power p) per application of M.
    pub tail_tol: f64,
}

impl Default for MaximalConfig {
    fn default() -> Self {
        MaximalConfig {
            refine_factor: 4,
            tail_grid_ratio: 1.05,
            tail_tol: 1e-9,
        }
    }
}

impl MaximalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.refine_factor < 1 {
            return Err(Error::InvalidParameter("refine_factor must be >= 1".into()));
        }
        if !(self.tail_grid_ratio > 1.0) || !self.tail_grid_ratio.is_finite() {
            return Err(Error::InvalidParameter(
                "tail_grid_ratio must be a finite number > 1".into(),
            ));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::InvalidParameter("tail_tol must be > 0".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: MaximalConfig =
            serde_json::from_str(s).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Hard cap on geometric tail points per side; beyond this the configured
/// ratio cannot reach the truncation target in a sane representation.
const TAIL_POINT_CAP: usize = 4_000_000;

// Regions for a moving point t relative to the knot list k[0..K]:
// region 0 is t < k[0], region i in 1..K is k[i-1] <= t < k[i], region K is
// t >= k[K-1].

fn antideriv_in_region(f: &PiecewiseLinear, region: usize, t: f64) -> f64 {
    let kn = f.knots();
    if region == 0 {
        return 0.0;
    }
    if region >= kn.len() {
        return f.mass();
    }
    // The exact point lies inside the region; rounding of x +- r at extreme
    // magnitudes can push it out, which would extrapolate the segment.
    let t = t.clamp(kn[region - 1], kn[region]);
    let base = f.f_at_knot(region - 1);
    match f.cell_segment(region - 1) {
        Some(s) => {
            let k = kn[region - 1];
            base + 0.5 * (t - k) * (s.value_at(k) + s.value_at(t))
        }
        None => base,
    }
}

fn params_in_region(f: &PiecewiseLinear, region: usize) -> (f64, f64) {
    if region == 0 || region >= f.knots().len() {
        return (0.0, 0.0);
    }
    match f.cell_segment(region - 1) {
        Some(s) => {
            let v = s.slope();
            (s.ya - v * s.a, v)
        }
        None => (0.0, 0.0),
    }
}

/// Supremum of the centered average over strictly positive radii, pruned
/// against `floor`. For any local candidate `L >= floor`,
/// `max(L, pos_scan(f, x, floor))` equals `max(L, sup_{r>0} A(x, r))`:
/// skipped cells are dominated by the mass bound, which never exceeded either.
fn pos_scan(f: &PiecewiseLinear, x: f64, floor: f64) -> f64 {
    let kn = f.knots();
    let nk = kn.len();
    let m = f.mass();
    let mut best = floor.max(0.0);
    if m <= 0.0 {
        return best;
    }
    let sup = f.sup();
    let mut reg_p = kn.partition_point(|&k| k <= x);
    let mut reg_m = kn.partition_point(|&k| k < x);
    let mut r_lo = 0.0f64;
    let mut n_lo = 0.0f64;
    loop {
        if best >= sup {
            break;
        }
        let rp = if reg_p >= nk {
            f64::INFINITY
        } else {
            kn[reg_p] - x
        };
        let rm = if reg_m == 0 {
            f64::INFINITY
        } else {
            x - kn[reg_m - 1]
        };
        let r_hi = rp.min(rm);
        if !r_hi.is_finite() {
            break;
        }
        if r_lo > 0.0 && m <= 2.0 * r_lo * best {
            break;
        }
        let (up, vp) = params_in_region(f, reg_p);
        let (um, vm) = params_in_region(f, reg_m);
        let beta = up + um + (vp + vm) * x;
        let gamma = 0.5 * (vp - vm);
        let alpha = n_lo - (beta + gamma * r_lo) * r_lo;
        if gamma != 0.0 {
            let s = alpha / gamma;
            if s.is_finite() && s > 0.0 {
                let rs = s.sqrt();
                if rs > r_lo && rs < r_hi {
                    // Evaluate through the exact antiderivative, not the
                    // fitted quadratic: a cancellation-shifted location then
                    // only loses a true candidate value, never invents one.
                    let n_rs = antideriv_in_region(f, reg_p, x + rs)
                        - antideriv_in_region(f, reg_m, x - rs);
                    let cand = n_rs / (2.0 * rs);
                    if cand > best {
                        best = cand;
                    }
                }
            }
        }
        if rp <= rm {
            reg_p += 1;
        }
        if rm <= rp {
            reg_m -= 1;
        }
        let n_hi =
            antideriv_in_region(f, reg_p, x + r_hi) - antideriv_in_region(f, reg_m, x - r_hi);
        let cand = n_hi / (2.0 * r_hi);
        if cand > best {
            best = cand;
        }
        n_lo = n_hi;
        r_lo = r_hi;
    }
    best
}

/// Exact centered maximal function `Mf(x) = sup_{r>0} (2r)^{-1} int_{x-r}^{x+r} f`.
///
/// The `r -> 0+` limit of the average is the mean of the one-sided limits of
/// `f` at `x`, so `Mf(x) >= f(x)` holds wherever `f` is continuous at `x`.
pub fn centered_max_at(f: &PiecewiseLinear, x: f64) -> f64 {
    let fl = f.eval_left_limit(x);
    let fr = f.eval_right_limit(x);
    let p = pos_scan(f, x, fl.min(fr));
    p.max(0.5 * (fl + fr))
}

/// One-sided limits `(Mf(x-), Mf(x+))`.
///
/// `Mf` can jump only where `f` does, and the jump is confined to the
/// vanishing-radius candidate: `Mf(x+-) = max(f(x+-), sup_{r>0} A(x, r))`.
/// The resampling step records these limits so jumps of `Mf` survive
/// the piecewise-linear representation exactly.
pub fn centered_max_limits(f: &PiecewiseLinear, x: f64) -> (f64, f64) {
    let fl = f.eval_left_limit(x);
    let fr = f.eval_right_limit(x);
    let p = pos_scan(f, x, fl.min(fr));
    let at = p.max(0.5 * (fl + fr));
    (at.max(fl), at.max(fr))
}

/// Exact `M 1_E(x)` for an interval set: the overlap `|E cap [x-r, x+r]|` is
/// piecewise linear in `r` with breakpoints at `|x - e|` over endpoints `e`,
/// and the average is monotone on each piece, so breakpoints plus the
/// `r -> 0+` density are the only candidates. Returns 0 for an empty set.
pub fn indicator_max_at(set: &IntervalSet, x: f64) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let ivs = set.intervals();
    let total = set.measure();
    let mut best = 0.0f64;
    for &(lo, hi) in ivs {
        if x > lo && x < hi {
            return 1.0;
        }
        if x == lo || x == hi {
            best = 0.5;
        }
    }
    let mut radii: Vec<f64> = ivs
        .iter()
        .flat_map(|&(lo, hi)| [(lo - x).abs(), (hi - x).abs()])
        .filter(|&r| r > 0.0)
        .collect();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    for r in radii {
        if total <= 2.0 * r * best {
            break;
        }
        let overlap: f64 = ivs
            .iter()
            .map(|&(lo, hi)| (hi.min(x + r) - lo.max(x - r)).max(0.0))
            .sum();
        let cand = overlap / (2.0 * r);
        if cand > best {
            best = cand;
        }
    }
    best
}

/// Sweep the right endpoint `b >= x` for a fixed left endpoint `a < x`,
/// maximizing `(F(b) - F(a)) / (b - a)` exactly per knot cell.
fn sweep_right(f: &PiecewiseLinear, x: f64, a: f64, fa: f64) -> f64 {
    let kn = f.knots();
    let nk = kn.len();
    let m = f.mass();
    let mut best = if x > a {
        (f.antideriv(x) - fa) / (x - a)
    } else {
        0.0
    };
    let mut reg = kn.partition_point(|&k| k <= x);
    let mut t_lo = x;
    loop {
        if t_lo > a && (m - fa) <= (t_lo - a) * best {
            break;
        }
        let t_hi = if reg >= nk { f64::INFINITY } else { kn[reg] };
        let (u, v) = params_in_region(f, reg);
        if v != 0.0 && t_hi.is_finite() {
            // Stationary b solves f(b)(b - a) = F(b) - F(a).
            let f_lo = f.antideriv(t_lo);
            let q2 = 0.5 * v;
            let q1 = -v * a;
            let q0 = u * (t_lo - a) + 0.5 * v * t_lo * t_lo - f_lo + fa;
            let disc = q1 * q1 - 4.0 * q2 * q0;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                for b in [(-q1 + sq) / (2.0 * q2), (-q1 - sq) / (2.0 * q2)] {
                    if b > t_lo && b < t_hi && b > a {
                        let cand = (f.antideriv(b) - fa) / (b - a);
                        if cand > best {
                            best = cand;
                        }
                    }
                }
            }
        }
        if !t_hi.is_finite() {
            break;
        }
        if t_hi > a {
            let cand = (f.antideriv(t_hi) - fa) / (t_hi - a);
            if cand > best {
                best = cand;
            }
        }
        t_lo = t_hi;
        reg += 1;
    }
    best
}

/// Uncentered maximal function `M_u f(x)` with the default endpoint
/// refinement. A lower bound converging to the supremum as the refinement
/// grows, and always at least `centered_max_at(f, x)`.
pub fn uncentered_max_at(f: &PiecewiseLinear, x: f64) -> f64 {
    uncentered_max_at_refined(f, x, 8)
}

/// Uncentered maximal function with `refine` extra candidate endpoints per
/// knot interval. Candidates: every grid point as a left endpoint with the
/// right endpoint solved exactly per cell, the mirrored sweep, vanishing
/// intervals at `x`, and the centered value.
pub fn uncentered_max_at_refined(f: &PiecewiseLinear, x: f64, refine: u32) -> f64 {
    let mut best = f
        .eval_left_limit(x)
        .max(f.eval_right_limit(x))
        .max(centered_max_at(f, x));
    let mut grid: Vec<f64> = Vec::new();
    let kn = f.knots();
    for w in kn.windows(2) {
        grid.push(w[0]);
        let step = (w[1] - w[0]) / (refine + 1) as f64;
        for j in 1..=refine {
            let t = w[0] + step * j as f64;
            if t > w[0] && t < w[1] {
                grid.push(t);
            }
        }
    }
    grid.push(*kn.last().unwrap());

    for &a in &grid {
        if a < x {
            let cand = sweep_right(f, x, a, f.antideriv(a));
            if cand > best {
                best = cand;
            }
        }
    }
    let refl = f.reflect();
    for &b in &grid {
        if b > x {
            let cand = sweep_right(&refl, -x, -b, refl.antideriv(-b));
            if cand > best {
                best = cand;
            }
        }
    }
    best
}

/// One application of `M` with domain truncation.
///
/// Returns `(g, err_p)` where `g` represents `Mf` on the resampling grid
/// (knots of `f`, `refine_factor` extra points per knot interval, and a
/// geometric tail ladder out to the truncation window) and `err_p` bounds the
/// discarded L^p mass via `Mf(x) <= ||f||_1 / (2(|x| - R))`:
/// `err_p = 2 ||f||_1^p / (2^p (p-1) (X-R)^{p-1}) <= tail_tol`.
///
/// Grid values are the one-sided limits of `Mf`, so the resampled function
/// reproduces the jumps of `Mf` at the jump points of `f` instead of sagging
/// through the pointwise value there.
pub fn apply_m(
    f: &PiecewiseLinear,
    p: Exponent,
    cfg: &MaximalConfig,
) -> Result<(PiecewiseLinear, f64)> {
    cfg.validate()?;
    if f.mass() <= 0.0 {
        return Err(Error::EmptyInput("apply_m"));
    }
    let (lo, hi) = f.support();
    let width = hi - lo;
    let r_out = lo.abs().max(hi.abs());
    let m = f.mass();
    let pe = p.get();
    let tail_reach =
        (2.0 * m.powf(pe) / (2f64.powf(pe) * (pe - 1.0) * cfg.tail_tol)).powf(1.0 / (pe - 1.0));
    let x_target = r_out + tail_reach;
    if !x_target.is_finite() {
        return Err(Error::NumericBudget(format!(
            "truncation window overflows f64 at p = {pe}; raise tail_tol"
        )));
    }

    let ratio = cfg.tail_grid_ratio;
    let d0 = (ratio - 1.0) * width;
    let mut grid: Vec<f64> = Vec::new();

    let mut left_tail: Vec<f64> = Vec::new();
    let mut d = d0;
    loop {
        let t = lo - d;
        left_tail.push(t);
        if t <= -x_target {
            break;
        }
        if left_tail.len() > TAIL_POINT_CAP {
            return Err(Error::NumericBudget(format!(
                "tail grid exceeds {TAIL_POINT_CAP} points at ratio {ratio}"
            )));
        }
        d *= ratio;
    }
    left_tail.reverse();
    grid.extend_from_slice(&left_tail);

    let kn = f.knots();
    for w in kn.windows(2) {
        grid.push(w[0]);
        let step = (w[1] - w[0]) / (cfg.refine_factor + 1) as f64;
        for j in 1..=cfg.refine_factor {
            let t = w[0] + step * j as f64;
            if t > w[0] && t < w[1] {
                grid.push(t);
            }
        }
    }
    grid.push(*kn.last().unwrap());

    let mut d = d0;
    loop {
        let t = hi + d;
        grid.push(t);
        if t >= x_target {
            break;
        }
        if grid.len() > 2 * TAIL_POINT_CAP {
            return Err(Error::NumericBudget(format!(
                "tail grid exceeds {TAIL_POINT_CAP} points at ratio {ratio}"
            )));
        }
        d *= ratio;
    }

    debug_assert!(grid.windows(2).all(|w| w[0] < w[1]));

    let vals: Vec<(f64, f64)> = grid
        .par_iter()
        .map(|&x| centered_max_limits(f, x))
        .collect();
    let segs: Vec<Segment> = grid
        .windows(2)
        .enumerate()
        .map(|(i, w)| Segment::new(w[0], w[1], vals[i].1, vals[i + 1].0))
        .collect();
    let g = PiecewiseLinear::from_segments(segs)?;

    let x_ach = grid[0].abs().min(grid.last().unwrap().abs());
    let err_p = 2.0 * m.powf(pe) / (2f64.powf(pe) * (pe - 1.0) * (x_ach - r_out).powf(pe - 1.0));
    debug_assert!(err_p <= cfg.tail_tol * (1.0 + 1e-12));
    Ok((g, err_p))
}

/// Applies `apply_m` k times, returning every iterate `[f, Mf, ..., M^k f]`
/// and the per-step truncation bounds.
pub fn iterate_collect(
    f: &PiecewiseLinear,
    k: usize,
    p: Exponent,
    cfg: &MaximalConfig,
) -> Result<(Vec<PiecewiseLinear>, Vec<f64>)> {
    let mut iterates = Vec::with_capacity(k + 1);
    let mut errs = Vec::with_capacity(k);
    iterates.push(f.clone());
    for _ in 0..k {
        let (g, e) = apply_m(iterates.last().unwrap(), p, cfg)?;
        iterates.push(g);
        errs.push(e);
    }
    Ok((iterates, errs))
}

/// Per-iterate norms, k-th roots, ratios, the asymptotic growth bracket, and
/// the accumulated truncation bound for `||M^k f||_p`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub p: f64,
    /// `||M^k f||_p` for k = 0..=K.
    pub norms: Vec<f64>,
    /// `||M^k f||_p^{1/k}` for k = 1..=K.
    pub roots: Vec<f64>,
    /// `||M^{k+1} f||_p / ||M^k f||_p` for k = 0..K-1.
    pub ratios: Vec<f64>,
    /// `(9/8)^{1/p}`.
    pub lower_bracket: f64,
    /// `a_p`, the fixed-point eigenvalue of `M` on `|x|^{-1/p}`.
    pub upper_bracket: f64,
    /// `(sum_k err_k^{1/p})^p`: the per-step discarded L^p masses combined
    /// with the triangle inequality, reported on the p-th power scale.
    pub truncation_error_bound_p: f64,
    /// Per-step discarded L^p mass bounds.
    pub step_err_p: Vec<f64>,
}

impl GrowthReport {
    /// Whether the k-th root estimate (k = 1..=K) lies inside the asymptotic
    /// bracket. Finite-k excursions are reported, never failed.
    pub fn root_in_bracket(&self, k: usize) -> bool {
        let r = self.roots[k - 1];
        r >= self.lower_bracket && r <= self.upper_bracket
    }

    /// CSV rows `k, norm, root, ratio, err_bound` (running truncation bound).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,norm,root,ratio,err_bound\n");
        let pe = self.p;
        let mut acc = 0.0f64;
        for (k, &n) in self.norms.iter().enumerate() {
            let root = if k >= 1 {
                self.roots[k - 1].to_string()
            } else {
                String::new()
            };
            let ratio = if k < self.ratios.len() {
                self.ratios[k].to_string()
            } else {
                String::new()
            };
            if k >= 1 {
                acc += self.step_err_p[k - 1].powf(1.0 / pe);
            }
            let bound = acc.powf(pe);
            out.push_str(&format!("{k},{n},{root},{ratio},{bound}\n"));
        }
        out
    }
}

/// Iterates `M` k times, recording norms, roots, ratios, the growth bracket
/// `[(9/8)^{1/p}, a_p]`, and the accumulated truncation bound.
pub fn iterate_m(
    f: &PiecewiseLinear,
    k: usize,
    p: Exponent,
    cfg: &MaximalConfig,
) -> Result<GrowthReport> {
    if k < 1 {
        return Err(Error::InvalidParameter("iterate_m requires k >= 1".into()));
    }
    let (iterates, errs) = iterate_collect(f, k, p, cfg)?;
    let norms: Vec<f64> = iterates.iter().map(|g| g.lp_norm(p)).collect();
    let roots: Vec<f64> = (1..=k).map(|j| norms[j].powf(1.0 / j as f64)).collect();
    let ratios: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
    let pe = p.get();
    let acc_norm: f64 = errs.iter().map(|e| e.powf(1.0 / pe)).sum();
    let upper = crate::asymptotics::solve_ap(p, 1e-10)?.a_p;
    Ok(GrowthReport {
        p: pe,
        norms,
        roots,
        ratios,
        lower_bracket: (9.0f64 / 8.0).powf(1.0 / pe),
        upper_bracket: upper,
        truncation_error_bound_p: acc_norm.powf(pe),
        step_err_p: errs,
    })
}
