//! Executable verifiers: the modified sunrise lemma with its envelope
//! function and inclusions, the small-p norm bound, the indicator bound with
//! its exact tail integrals, and the unimodal pipeline (dyadic minorant,
//! square-root profile iteration, stability gap).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;
use crate::maximal::{apply_m, centered_max_at, indicator_max_at, iterate_collect, MaximalConfig};
use crate::pwl::{Exponent, PiecewiseLinear, Segment};
use crate::quad::{adaptive_simpson, integrate_piecewise};

/// One verified inequality: both sides, the slack, and whether it passed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the check passes iff `slack >= -tolerance`.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: String,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        lhs: f64,
        rhs: f64,
        tolerance: f64,
        details: impl Into<String>,
    ) -> Self {
        let slack = lhs - rhs;
        CheckReport {
            name: name.into(),
            lhs,
            rhs,
            slack,
            tolerance,
            pass: slack >= -tolerance,
            details: details.into(),
        }
    }

    /// Report for a zero-violations check: `lhs = -violations`, `rhs = 0`.
    pub fn from_violations(
        name: impl Into<String>,
        violations: usize,
        checked: usize,
        details: impl Into<String>,
    ) -> Self {
        let d: String = details.into();
        CheckReport::new(
            name,
            -(violations as f64),
            0.0,
            0.5,
            format!("{violations} violations over {checked} points. {d}"),
        )
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}\n",
            self.name, self.lhs, self.rhs, self.slack, self.pass
        )
    }

    pub fn csv_header() -> &'static str {
        "name,lhs,rhs,slack,pass\n"
    }
}

/// Uniform grid of `n` points over `[lo, hi]`, inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi > lo);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

// ---------------------------------------------------------------------------
// Envelope function and the sunrise lemma
// ---------------------------------------------------------------------------

/// The envelope `phi(x) = sup_{y<x} int_y^x f - 2 lambda (x - y)`, realized as
/// `G(x) - inf_{y<=x} G(y)` for `G(t) = F(t) - 2 lambda t` (equal by
/// continuity). `G` is piecewise quadratic, so the running infimum is a
/// single left-to-right scan with per-cell vertex candidates.
pub struct PhiEnvelope<'a> {
    f: &'a PiecewiseLinear,
    lambda: f64,
    /// min of G over `(-inf, k_i]` for each knot.
    runmin: Vec<f64>,
}

impl<'a> PhiEnvelope<'a> {
    pub fn new(f: &'a PiecewiseLinear, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "envelope threshold must be positive, got {lambda}"
            )));
        }
        if !f.is_continuous() {
            return Err(Error::DiscontinuousFunction("phi envelope"));
        }
        let kn = f.knots();
        let g = |t: f64| f.antideriv(t) - 2.0 * lambda * t;
        let mut runmin = Vec::with_capacity(kn.len());
        runmin.push(g(kn[0]));
        for c in 0..kn.len() - 1 {
            let mut m = runmin[c].min(g(kn[c + 1]));
            if let Some(v) = Self::vertex_min(f, lambda, c, kn[c + 1]) {
                m = m.min(v);
            }
            runmin.push(m);
        }
        Ok(PhiEnvelope { f, lambda, runmin })
    }

    /// Interior minimum candidate of G on `[k_c, upto]`: the vertex where
    /// `f = 2 lambda` on an upward-sloping piece.
    fn vertex_min(f: &PiecewiseLinear, lambda: f64, cell: usize, upto: f64) -> Option<f64> {
        let s = f.cell_segment(cell)?;
        let v = s.slope();
        if v <= 0.0 {
            return None;
        }
        let t0 = s.a + (2.0 * lambda - s.ya) / v;
        let klo = f.knots()[cell];
        if t0 > klo && t0 < upto {
            Some(f.antideriv(t0) - 2.0 * lambda * t0)
        } else {
            None
        }
    }

    pub fn phi(&self, x: f64) -> f64 {
        let kn = self.f.knots();
        let g = |t: f64| self.f.antideriv(t) - 2.0 * self.lambda * t;
        if x <= kn[0] {
            return 0.0;
        }
        let j = kn.partition_point(|&k| k <= x);
        let (base, cell_start) = if j >= kn.len() {
            (self.runmin[kn.len() - 1], None)
        } else {
            (self.runmin[j - 1], Some(j - 1))
        };
        let mut inf = base.min(g(x));
        if let Some(c) = cell_start {
            if let Some(v) = Self::vertex_min(self.f, self.lambda, c, x) {
                inf = inf.min(v);
            }
        }
        (g(x) - inf).max(0.0)
    }
}

/// `phi(x)` as a single call; continuous `f` only.
pub fn phi_at(f: &PiecewiseLinear, lambda: f64, x: f64) -> Result<f64> {
    Ok(PhiEnvelope::new(f, lambda)?.phi(x))
}

/// Verifies the inclusions `{f > 2 lambda} subset {phi > 0}` and
/// `{f >= lambda} cup {phi > 0} subset {Mf >= lambda}` at every sample point.
///
/// Near the boundary `f = 2 lambda` the envelope is quadratically small
/// (`phi >= (f(x) - 2 lambda)^2 / (2 L)` for slope bound `L`), so the first
/// inclusion is only asserted where that lower bound clears the noise floor
/// `tol`; the second only takes the `phi` trigger above its own floor.
pub fn inclusion_check(
    f: &PiecewiseLinear,
    lambda: f64,
    grid: &[f64],
    tol: f64,
) -> Result<CheckReport> {
    let env = PhiEnvelope::new(f, lambda)?;
    let l_max = f
        .segments()
        .iter()
        .map(|s| s.slope().abs())
        .fold(1e-12, f64::max);
    let (lo, hi) = f.support();
    let phi_floor = 1e-12 * (1.0 + f.mass() + 2.0 * lambda * (hi - lo + 2.0));
    let violations: usize = grid
        .par_iter()
        .map(|&x| {
            let fx = f.eval(x);
            let phi = env.phi(x);
            let mut bad = 0usize;
            let margin = fx - 2.0 * lambda;
            if margin > 0.0 && margin * margin / (2.0 * l_max) > tol && phi <= 0.0 {
                bad += 1;
            }
            if (phi > phi_floor || fx >= lambda) && centered_max_at(f, x) < lambda - tol {
                bad += 1;
            }
            bad
        })
        .sum();
    Ok(CheckReport::from_violations(
        "inclusion",
        violations,
        grid.len(),
        format!("lambda = {lambda}, tol = {tol}"),
    ))
}

/// Measure of `{x : Mf(x) >= lambda}` by root-bracketing the exactly
/// evaluable map `x -> Mf(x) - lambda`, bisected to 1e-10 on each bracketing
/// cell. A component missed by the grid only lowers the result, so sunrise
/// passes are conservative.
pub fn m_superlevel_measure(
    f: &PiecewiseLinear,
    lambda: f64,
    cfg: &MaximalConfig,
) -> Result<f64> {
    if !f.is_continuous() {
        return Err(Error::DiscontinuousFunction("m_superlevel_measure"));
    }
    let (lo, hi) = f.support();
    let r_out = lo.abs().max(hi.abs());
    // Mf(x) <= m / (2(|x| - r_out)) < lambda strictly beyond the window.
    let w = r_out + f.mass() / (2.0 * lambda) + 1e-9 * (1.0 + r_out);
    let mut grid: Vec<f64> = Vec::new();
    grid.push(-w);
    grid.extend(uniform_grid(-w, lo, 128));
    let kn = f.knots();
    let refine = cfg.refine_factor.max(8);
    for win in kn.windows(2) {
        grid.push(win[0]);
        let step = (win[1] - win[0]) / (refine + 1) as f64;
        for j in 1..=refine {
            grid.push(win[0] + step * j as f64);
        }
    }
    grid.push(*kn.last().unwrap());
    grid.extend(uniform_grid(hi, w, 128));
    if let Ok(set) = f.superlevel_set(lambda) {
        for &(a, b) in set.intervals() {
            grid.push(a);
            grid.push(b);
            grid.push(0.5 * (a + b));
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();

    let h: Vec<f64> = grid
        .par_iter()
        .map(|&x| centered_max_at(f, x) - lambda)
        .collect();

    let bisect = |mut a: f64, mut b: f64| -> f64 {
        // Invariant: sign change between a and b.
        let mut fa = centered_max_at(f, a) - lambda;
        for _ in 0..80 {
            if b - a <= 1e-10 {
                break;
            }
            let m = 0.5 * (a + b);
            let fm = centered_max_at(f, m) - lambda;
            if (fa >= 0.0) == (fm >= 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    };

    let mut measure = 0.0f64;
    let mut left: Option<f64> = if h[0] >= 0.0 { Some(grid[0]) } else { None };
    for i in 0..grid.len() - 1 {
        let inside_l = h[i] >= 0.0;
        let inside_r = h[i + 1] >= 0.0;
        if !inside_l && inside_r {
            left = Some(bisect(grid[i], grid[i + 1]));
        } else if inside_l && !inside_r {
            let right = bisect(grid[i], grid[i + 1]);
            if let Some(l) = left.take() {
                measure += right - l;
            }
        }
    }
    if let Some(l) = left {
        measure += grid.last().unwrap() - l;
    }
    Ok(measure)
}

/// The modified sunrise lemma:
/// `|{Mf >= lambda}| >= (1 / 2 lambda) int_{f >= lambda} f`.
pub fn sunrise_check(
    f: &PiecewiseLinear,
    lambda: f64,
    cfg: &MaximalConfig,
    tol_rel: f64,
) -> Result<CheckReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sunrise threshold must be positive, got {lambda}"
        )));
    }
    let rhs = f.superlevel_integral(lambda)? / (2.0 * lambda);
    let lhs = m_superlevel_measure(f, lambda, cfg)?;
    Ok(CheckReport::new(
        "sunrise",
        lhs,
        rhs,
        tol_rel * rhs,
        format!("lambda = {lambda}"),
    ))
}

// ---------------------------------------------------------------------------
// Small-p norm bound
// ---------------------------------------------------------------------------

/// `(p / (2(p-1)))^{1/p}`, the norm-bound constant for 1 < p < 2.
pub fn theorem1_constant(p: Exponent) -> f64 {
    let pe = p.get();
    (pe / (2.0 * (pe - 1.0))).powf(1.0 / pe)
}

/// Verifies `||Mf||_p >= (p/(2(p-1)))^{1/p} ||f||_p` for `1 < p < 2`.
/// lhs is the norm of the truncated representation minus the truncation
/// bound: a lower bound of `||Mf||_p` up to interpolation.
pub fn theorem1_check(
    f: &PiecewiseLinear,
    p: Exponent,
    cfg: &MaximalConfig,
    tol_rel: f64,
) -> Result<CheckReport> {
    let pe = p.get();
    if pe >= 2.0 {
        return Err(Error::InvalidParameter(format!(
            "theorem1_check requires 1 < p < 2, got {pe}"
        )));
    }
    let (g, err_p) = apply_m(f, p, cfg)?;
    let lhs = g.lp_norm(p) - err_p.powf(1.0 / pe);
    let rhs = theorem1_constant(p) * f.lp_norm(p);
    Ok(CheckReport::new(
        "theorem1",
        lhs,
        rhs,
        tol_rel * rhs,
        format!("constant = {}", theorem1_constant(p)),
    ))
}

// ---------------------------------------------------------------------------
// Indicator functions
// ---------------------------------------------------------------------------

/// For `x` beyond the hull of `E`, `M 1_E(x) = max_j S_j / (2(x - a_j))`
/// where `S_j` sums the lengths of intervals `j..`. Returns the threshold
/// beyond which the full-mass candidate `j = 0` dominates, so the tail of
/// `(M 1_E)^p` integrates in closed form from there.
fn right_tail_threshold(ivs: &[(f64, f64)]) -> f64 {
    let n = ivs.len();
    let total: f64 = ivs.iter().map(|(a, b)| b - a).sum();
    let mut thr = ivs[n - 1].1;
    let mut suffix = 0.0;
    for j in (1..n).rev() {
        suffix += ivs[j].1 - ivs[j].0;
        // |E|/(x - a_0) >= suffix/(x - a_j)  for x >= this knee.
        let knee = (total * ivs[j].0 - suffix * ivs[0].0) / (total - suffix);
        if knee > thr {
            thr = knee;
        }
    }
    thr
}

fn reflected(set: &IntervalSet) -> IntervalSet {
    IntervalSet::new(
        set.intervals()
            .iter()
            .rev()
            .map(|&(lo, hi)| (-hi, -lo))
            .collect(),
    )
    .expect("reflection preserves validity")
}

/// `int (M 1_E)^p` over the real line: adaptive quadrature between the
/// structural breakpoints of `M 1_E` plus the exact closed-form tails beyond
/// the dominance thresholds.
pub fn indicator_lp_mass(set: &IntervalSet, p: Exponent) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyInput("indicator_lp_mass"));
    }
    let pe = p.get();
    let ivs = set.intervals();
    let total = set.measure();
    let a0 = ivs[0].0;
    let bn = ivs[ivs.len() - 1].1;

    let t_right = right_tail_threshold(ivs) + 1e-12 * (1.0 + bn.abs());
    let refl = reflected(set);
    let t_left = -(right_tail_threshold(refl.intervals()) + 1e-12 * (1.0 + a0.abs()));

    // Tails: int_T^inf (|E| / (2(x - a_0)))^p dx, and mirrored.
    let tail_r = total.powf(pe) / (2f64.powf(pe) * (pe - 1.0) * (t_right - a0).powf(pe - 1.0));
    let tail_l = total.powf(pe) / (2f64.powf(pe) * (pe - 1.0) * (bn - t_left).powf(pe - 1.0));

    let mut brk: Vec<f64> = vec![t_left];
    for &(a, b) in ivs {
        brk.push(a);
        brk.push(b);
    }
    for w in ivs.windows(2) {
        brk.push(0.5 * (w[0].1 + w[1].0));
    }
    brk.push(t_right);
    brk.sort_by(|a, b| a.partial_cmp(b).unwrap());
    brk.dedup();

    let interior = integrate_piecewise(
        |x| indicator_max_at(set, x).powf(pe),
        &brk,
        1e-11 * total.max(1.0),
    );
    Ok(interior + tail_r + tail_l)
}

/// Lower bound for `|{M 1_E >= 1/4}|`: exact closed-form extents beyond the
/// hull, the set itself, plus root-bracketed portions of each gap.
pub fn indicator_quarter_superlevel_measure(set: &IntervalSet) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyInput("indicator_quarter_superlevel_measure"));
    }
    let ivs = set.intervals();
    let n = ivs.len();
    let bn = ivs[n - 1].1;
    let a0 = ivs[0].0;

    // Right of the hull M = max_j S_j/(2(x - a_j)), so {M >= 1/4} there is
    // exactly (b_n, max_j (a_j + 2 S_j)].
    let mut suffix = 0.0;
    let mut x_r = bn;
    for j in (0..n).rev() {
        suffix += ivs[j].1 - ivs[j].0;
        x_r = x_r.max(ivs[j].0 + 2.0 * suffix);
    }
    let mut prefix = 0.0;
    let mut x_l = a0;
    for iv in ivs {
        prefix += iv.1 - iv.0;
        x_l = x_l.min(iv.1 - 2.0 * prefix);
    }

    let mut measure = set.measure() + (x_r - bn) + (a0 - x_l);

    // Gap portions, bracketed on a grid seeded with the per-candidate
    // quarter-level thresholds.
    let target = |x: f64| indicator_max_at(set, x) - 0.25;
    for j in 0..n.saturating_sub(1) {
        let (gl, gr) = (ivs[j].1, ivs[j + 1].0);
        let eps = 1e-9 * (gr - gl);
        let mut grid: Vec<f64> = uniform_grid(gl + eps, gr - eps, 64);
        let mut run = 0.0;
        for i in (0..=j).rev() {
            run += ivs[i].1 - ivs[i].0;
            let t = ivs[i].0 + 2.0 * run;
            if t > gl && t < gr {
                grid.push(t);
            }
        }
        let mut run = 0.0;
        for i in j + 1..n {
            run += ivs[i].1 - ivs[i].0;
            let t = ivs[i].1 - 2.0 * run;
            if t > gl && t < gr {
                grid.push(t);
            }
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();

        let h: Vec<f64> = grid.iter().map(|&x| target(x)).collect();
        let bisect = |mut a: f64, mut b: f64| -> f64 {
            let mut fa = target(a);
            for _ in 0..80 {
                if b - a <= 1e-10 {
                    break;
                }
                let m = 0.5 * (a + b);
                let fm = target(m);
                if (fa >= 0.0) == (fm >= 0.0) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            0.5 * (a + b)
        };
        let mut left: Option<f64> = if h[0] >= 0.0 { Some(gl) } else { None };
        for i in 0..grid.len() - 1 {
            match (h[i] >= 0.0, h[i + 1] >= 0.0) {
                (false, true) => left = Some(bisect(grid[i], grid[i + 1])),
                (true, false) => {
                    if let Some(l) = left.take() {
                        measure += bisect(grid[i], grid[i + 1]) - l;
                    }
                }
                _ => {}
            }
        }
        if let Some(l) = left {
            measure += gr - l;
        }
    }
    Ok(measure)
}

/// Verifies `||M 1_E||_p^p >= (1 + 4^{-p}) |E|` and the proof's intermediate
/// quantity `|{M 1_E >= 1/4}| >= 2 |E|`.
pub fn indicator_check(set: &IntervalSet, p: Exponent, tol_rel: f64) -> Result<CheckReport> {
    if set.is_empty() {
        return Err(Error::EmptyInput("indicator_check"));
    }
    let lhs = indicator_lp_mass(set, p)?;
    let e_measure = set.measure();
    let rhs = (1.0 + 4f64.powf(-p.get())) * e_measure;
    let quarter = indicator_quarter_superlevel_measure(set)?;
    let quarter_ok = quarter >= 2.0 * e_measure - 1e-9 * e_measure;
    let mut rep = CheckReport::new(
        "indicator",
        lhs,
        rhs,
        tol_rel * rhs,
        format!(
            "|E| = {e_measure}; |{{M1_E >= 1/4}}| = {quarter} vs 2|E| = {}",
            2.0 * e_measure
        ),
    );
    rep.pass = rep.pass && quarter_ok;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Unimodal pipeline
// ---------------------------------------------------------------------------

/// A unimodal function with its dominant half-line restriction and the dyadic
/// step minorant `psi(x) = f_tilde(a(x))`, `a(x) = min{2^k > x}`.
#[derive(Debug, Clone)]
pub struct UnimodalWitness {
    pub f: PiecewiseLinear,
    pub mode: f64,
    pub f_tilde: PiecewiseLinear,
    pub psi: PiecewiseLinear,
}

/// Walks segment endpoint values (with zeros inserted across gaps) and
/// verifies rise-then-fall, returning the x at the maximum.
fn detect_mode(f: &PiecewiseLinear) -> Result<f64> {
    let mut stream: Vec<(f64, f64)> = Vec::new();
    let mut prev_b: Option<f64> = None;
    for s in f.segments() {
        if let Some(pb) = prev_b {
            if s.a > pb {
                stream.push((pb, 0.0));
                stream.push((s.a, 0.0));
            }
        }
        stream.push((s.a, s.ya));
        stream.push((s.b, s.yb));
        prev_b = Some(s.b);
    }
    let peak = stream
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    for w in stream[..=peak].windows(2) {
        if w[1].1 < w[0].1 {
            return Err(Error::InvalidFunction(format!(
                "not unimodal: decreasing before the mode near x = {}",
                w[1].0
            )));
        }
    }
    for w in stream[peak..].windows(2) {
        if w[1].1 > w[0].1 {
            return Err(Error::InvalidFunction(format!(
                "not unimodal: increasing after the mode near x = {}",
                w[1].0
            )));
        }
    }
    Ok(stream[peak].0)
}

/// Restriction of `f` to `[0, inf)`: segments clipped at 0.
fn restrict_nonneg(f: &PiecewiseLinear) -> Option<PiecewiseLinear> {
    let mut segs: Vec<Segment> = Vec::new();
    for s in f.segments() {
        if s.b <= 0.0 {
            continue;
        }
        let a = s.a.max(0.0);
        segs.push(Segment::new(a, s.b, s.value_at(a), s.yb));
    }
    PiecewiseLinear::from_segments(segs).ok()
}

fn is_nonincreasing(f: &PiecewiseLinear) -> bool {
    let mut prev = f64::INFINITY;
    let mut prev_b: Option<f64> = None;
    for s in f.segments() {
        if let Some(pb) = prev_b {
            if s.a > pb && (prev < 0.0 || s.ya > 0.0) && prev > 0.0 {
                return false; // positive after a gap means a rise from zero
            }
            if s.a > pb {
                prev = 0.0;
            }
        }
        if s.ya > prev || s.yb > s.ya {
            return false;
        }
        prev = s.yb;
        prev_b = Some(s.b);
    }
    true
}

/// Dyadic range `(k_lo, k_hi)` used by `build_psi` and `psi_norm_check`:
/// cells `(2^k, 2^{k+1}]` for `k_lo <= k <= k_hi`, everything below `2^{k_lo}`
/// merged into a constant stub.
fn psi_k_range(f_tilde: &PiecewiseLinear) -> (i32, i32) {
    let (_, hi) = f_tilde.support();
    let k_hi = hi.log2().floor() as i32;
    (k_hi - 64, k_hi)
}

/// Builds the dyadic step minorant of a nonincreasing `f_tilde` supported in
/// `[0, inf)`: constant `f_tilde(2^{k+1})` on `(2^k, 2^{k+1}]`.
///
/// The staircase has infinitely many cells towards 0; cells below `2^{k_lo}`
/// (64 dyadic levels under the support radius, beyond f64 resolution of the
/// norms) are merged into one stub of value `f_tilde(2^{k_lo})`, which keeps
/// the result a pointwise minorant by monotonicity.
pub fn build_psi(f_tilde: &PiecewiseLinear) -> Result<PiecewiseLinear> {
    let (lo, hi) = f_tilde.support();
    if lo < 0.0 {
        return Err(Error::InvalidFunction(
            "psi requires support in the nonnegative half-line".into(),
        ));
    }
    if !is_nonincreasing(f_tilde) {
        return Err(Error::InvalidFunction(
            "psi requires a nonincreasing restriction".into(),
        ));
    }
    if f_tilde.sup() == 0.0 {
        return PiecewiseLinear::from_segments(vec![Segment::new(lo.min(0.0), hi.max(1.0), 0.0, 0.0)]);
    }
    let (k_lo, k_hi) = psi_k_range(f_tilde);
    let mut segs: Vec<Segment> = Vec::new();
    let stub_v = f_tilde.eval(exp2i(k_lo));
    if stub_v > 0.0 {
        segs.push(Segment::new(0.0, exp2i(k_lo), stub_v, stub_v));
    }
    for k in k_lo..=k_hi {
        let v = f_tilde.eval(exp2i(k + 1));
        if v > 0.0 {
            segs.push(Segment::new(exp2i(k), exp2i(k + 1), v, v));
        }
    }
    if segs.is_empty() {
        return PiecewiseLinear::from_segments(vec![Segment::new(0.0, hi.max(1.0), 0.0, 0.0)]);
    }
    PiecewiseLinear::from_segments(segs)
}

fn exp2i(k: i32) -> f64 {
    (k as f64).exp2()
}

impl UnimodalWitness {
    /// Splits a unimodal `f` at its mode, keeps the half-line with the larger
    /// L^p mass (reflecting the left half), and attaches the dyadic minorant.
    pub fn new(f: PiecewiseLinear, p: Exponent) -> Result<Self> {
        let mode = detect_mode(&f)?;
        let shifted = f.translate(-mode)?;
        let right = restrict_nonneg(&shifted);
        let left = restrict_nonneg(&shifted.reflect());
        let f_tilde = match (right, left) {
            (Some(r), Some(l)) => {
                if r.lp_norm_p(p) >= l.lp_norm_p(p) {
                    r
                } else {
                    l
                }
            }
            (Some(r), None) => r,
            (None, Some(l)) => l,
            (None, None) => return Err(Error::EmptyInput("unimodal witness")),
        };
        let psi = build_psi(&f_tilde)?;
        Ok(UnimodalWitness {
            f,
            mode,
            f_tilde,
            psi,
        })
    }
}

/// Checks `2 ||psi||_p^p >= ||f_tilde||_p^p` and the reindexing identity
/// `2 sum_k 2^k f(2^{k+1})^p = sum_s 2^s f(2^s)^p` over the dyadic range.
pub fn psi_norm_check(w: &UnimodalWitness, p: Exponent) -> CheckReport {
    let pe = p.get();
    let lhs = 2.0 * w.psi.lp_norm_p(p);
    let rhs = w.f_tilde.lp_norm_p(p);
    let (k_lo, k_hi) = psi_k_range(&w.f_tilde);
    let mut s1 = 0.0;
    for k in k_lo..=k_hi {
        s1 += 2.0 * (exp2i(k) * w.f_tilde.eval(exp2i(k + 1)).powf(pe));
    }
    let mut s2 = 0.0;
    for s in k_lo + 1..=k_hi + 1 {
        s2 += exp2i(s) * w.f_tilde.eval(exp2i(s)).powf(pe);
    }
    let id_err = (s1 - s2).abs() / s2.abs().max(1e-300);
    let id_ok = id_err <= 1e-12;
    let mut rep = CheckReport::new(
        "psi-norm",
        lhs,
        rhs,
        1e-12 * rhs.max(1.0),
        format!("reindexing identity relative error = {id_err}"),
    );
    rep.pass = rep.pass && id_ok;
    rep
}

// ---------------------------------------------------------------------------
// The square-root profile g-bar
// ---------------------------------------------------------------------------

/// `(1 - sqrt(x)) 1_(0,1]`.
pub fn gbar(x: f64) -> f64 {
    if x > 0.0 && x <= 1.0 {
        1.0 - x.sqrt()
    } else {
        0.0
    }
}

/// Maximum gap of the certified minorant built by `gbar_minorant`.
pub const GBAR_MINORANT_GAP: f64 = 1e-6;

/// A piecewise-linear certified minorant of the convex profile: chords lie
/// above `gbar`, so each chord is lowered by its exact maximal chord gap
/// `(sqrt(b) - sqrt(a))^2 / (4 (sqrt(a) + sqrt(b)))`, clamped at zero. The
/// knot spacing keeps every per-cell gap at most `max_gap`, hence
/// `minorant <= gbar <= minorant + max_gap` on `(0, 1]`.
pub fn gbar_minorant(max_gap: f64) -> PiecewiseLinear {
    assert!(max_gap > 0.0 && max_gap < 0.1);
    let g = max_gap;
    let mut us: Vec<f64> = vec![0.0];
    let mut u = 0.0f64;
    while u < 1.0 {
        u = u + 2.0 * g + 2.0 * (2.0 * g * u + g * g).sqrt();
        us.push(u.min(1.0));
    }
    let mut segs: Vec<Segment> = Vec::new();
    for w in us.windows(2) {
        let (ua, ub) = (w[0], w[1]);
        let (a, b) = (ua * ua, ub * ub);
        let gap = (ub - ua) * (ub - ua) / (4.0 * (ua + ub));
        debug_assert!(gap <= g * (1.0 + 1e-9));
        let ya = (1.0 - ua) - gap;
        let yb = (1.0 - ub) - gap;
        if ya <= 0.0 {
            continue;
        }
        if yb >= 0.0 {
            segs.push(Segment::new(a, b, ya, yb));
        } else {
            // Split at the zero crossing so the clamped piece stays a minorant.
            let t = a + (b - a) * (ya / (ya - yb));
            if t > a {
                segs.push(Segment::new(a, t, ya, 0.0));
            }
        }
    }
    PiecewiseLinear::from_segments(segs).expect("minorant is a valid function")
}

/// Verifies `M^n gbar(x) >= gbar((8/9)^n x)` on a grid in `(0, (9/8)^n]`.
/// For `n = 1` the closed-form one-step identity target
/// `1 - (2/3) sqrt(2x)` is used directly and the evaluation is pointwise
/// exact on the certified minorant, so the tolerance is
/// `GBAR_MINORANT_GAP + 1e-6`. Deeper steps resample between applications;
/// their tolerance adds a documented 2e-6 interpolation allowance per step.
pub fn gbar_iterate_check(
    n: u32,
    grid_points: usize,
    cfg: &MaximalConfig,
) -> Result<CheckReport> {
    if n < 1 || n > 8 {
        return Err(Error::NumericBudget(format!(
            "gbar iteration depth must be in 1..=8, got {n}"
        )));
    }
    if grid_points < 2 {
        return Err(Error::InvalidParameter("need at least 2 grid points".into()));
    }
    let minorant = gbar_minorant(GBAR_MINORANT_GAP);
    let p2 = Exponent::new(2.0).unwrap();
    let mut cur = minorant;
    for _ in 0..n - 1 {
        cur = apply_m(&cur, p2, cfg)?.0;
    }
    let tol = GBAR_MINORANT_GAP + 1e-6 + (n - 1) as f64 * 2e-6;
    let scale = (9.0f64 / 8.0).powi(n as i32);
    let shrink = (8.0f64 / 9.0).powi(n as i32);
    let xs: Vec<f64> = (1..=grid_points)
        .map(|i| scale * i as f64 / grid_points as f64)
        .collect();
    let deficits: Vec<f64> = xs
        .par_iter()
        .map(|&x| {
            let target = if n == 1 {
                1.0 - (2.0 / 3.0) * (2.0 * x).sqrt()
            } else {
                gbar(shrink * x)
            };
            target - centered_max_at(&cur, x)
        })
        .collect();
    let worst = deficits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let violations = deficits.iter().filter(|&&d| d > tol).count();
    let mut rep = CheckReport::from_violations(
        "gbar-iterate",
        violations,
        xs.len(),
        format!("n = {n}, worst deficit = {worst}, tol = {tol}"),
    );
    rep.tolerance = tol;
    Ok(rep)
}

// ---------------------------------------------------------------------------
// Unimodal growth and the stability gap
// ---------------------------------------------------------------------------

/// `C_p = int_{1/2}^1 gbar^p`, by adaptive quadrature (the closed form via
/// the substitution u = sqrt(x) lives in the test oracle).
pub fn c_p(p: Exponent) -> f64 {
    let pe = p.get();
    adaptive_simpson(|x| (1.0 - x.sqrt()).powf(pe), 0.5, 1.0, 1e-14)
}

/// The smallest n with `(1/2) C_p (9/8)^n >= 2^{p+1}`, i.e. the iteration
/// depth at which the dyadic chain forces `||M^n f||_p >= 2 ||f||_p`.
/// A reconstruction from the chain, not a stated constant.
pub fn implied_n(p: Exponent) -> u32 {
    let pe = p.get();
    let cp = c_p(p);
    (((pe + 2.0) * 2f64.ln() - cp.ln()) / (9.0f64 / 8.0).ln()).ceil() as u32
}

/// Checks `||M^n psi||_p^p >= C_p (9/8)^n ||psi||_p^p` by iteration, and
/// reports whether `||M^n f||_p >= 2 ||f||_p` at this depth together with the
/// implied n(p).
pub fn unimodal_growth_check(
    w: &UnimodalWitness,
    p: Exponent,
    n: u32,
    cfg: &MaximalConfig,
) -> Result<CheckReport> {
    if n < 1 || n > 8 {
        return Err(Error::NumericBudget(format!(
            "unimodal iteration depth must be in 1..=8, got {n}"
        )));
    }
    let pe = p.get();
    let psi_norm_p = w.psi.lp_norm_p(p);
    if psi_norm_p <= 0.0 {
        return Ok(CheckReport::new(
            "unimodal-growth",
            0.0,
            0.0,
            0.0,
            "zero witness; vacuous",
        ));
    }
    let (iters, errs) = iterate_collect(&w.psi, n as usize, p, cfg)?;
    let trunc: f64 = errs.iter().map(|e| e.powf(1.0 / pe)).sum();
    let lhs = (iters[n as usize].lp_norm(p) - trunc).max(0.0).powf(pe);
    let cp = c_p(p);
    let rhs = cp * (9.0f64 / 8.0).powi(n as i32) * psi_norm_p;

    let (f_iters, _) = iterate_collect(&w.f, n as usize, p, cfg)?;
    let f_growth = f_iters[n as usize].lp_norm(p) / w.f.lp_norm(p);
    Ok(CheckReport::new(
        "unimodal-growth",
        lhs,
        rhs,
        1e-6 * rhs,
        format!(
            "C_p = {cp}; ||M^n f||_p / ||f||_p = {f_growth} (doubling {}); implied n(p) = {}",
            if f_growth >= 2.0 { "reached" } else { "not reached" },
            implied_n(p)
        ),
    ))
}

/// Integral of the p-th power of the linear ramp from `ya` to `yb` over a
/// cell of the given width (both values nonnegative).
fn ramp_pow_integral(width: f64, ya: f64, yb: f64, p: f64) -> f64 {
    let dy = yb - ya;
    if dy.abs() <= 1e-14 * ya.abs().max(yb.abs()).max(1.0) {
        let mid = 0.5 * (ya + yb);
        width * mid.powf(p)
    } else {
        (yb.powf(p + 1.0) - ya.powf(p + 1.0)) * width / (dy * (p + 1.0))
    }
}

/// Verifies `||Mf||_p^p >= ||f||_p^p + ||Mf - f||_p^p` (valid because
/// `Mf >= f` pointwise makes `(Mf)^p >= f^p + (Mf - f)^p` for p >= 1) and
/// reports the empirical gap `eps~ = ||Mf - f||_p / ||f||_p`.
pub fn stability_gap_check(
    f: &PiecewiseLinear,
    p: Exponent,
    cfg: &MaximalConfig,
) -> Result<CheckReport> {
    let (g, _err) = apply_m(f, p, cfg)?;
    let pe = p.get();
    let mut union: Vec<f64> = f.knots().iter().chain(g.knots().iter()).cloned().collect();
    union.sort_by(|a, b| a.partial_cmp(b).unwrap());
    union.dedup();
    let mut d_p = 0.0f64;
    for w in union.windows(2) {
        let da = (g.eval_right_limit(w[0]) - f.eval_right_limit(w[0])).max(0.0);
        let db = (g.eval_left_limit(w[1]) - f.eval_left_limit(w[1])).max(0.0);
        d_p += ramp_pow_integral(w[1] - w[0], da, db, pe);
    }
    let lhs = g.lp_norm_p(p);
    let rhs = f.lp_norm_p(p) + d_p;
    let eps_tilde = d_p.powf(1.0 / pe) / f.lp_norm(p);
    Ok(CheckReport::new(
        "stability-gap",
        lhs,
        rhs,
        1e-8 * lhs.max(1e-300),
        format!("empirical eps~ = {eps_tilde}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pwl::{tent, unit_indicator};

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn phi_tent_values() {
        // f <= 2 lambda forces phi <= 0 and the y -> x limit gives 0.
        assert_eq!(phi_at(&tent(), 0.5, 1.0).unwrap(), 0.0);
        // lambda = 1/4: maximize y(1-y)/2 at y = 1/2.
        let v = phi_at(&tent(), 0.25, 1.0).unwrap();
        assert!((v - 0.125).abs() < 1e-14, "phi = {v}");
        // Large lambda: phi = 0 everywhere.
        for x in [-1.0, 0.3, 1.0, 1.7, 3.0] {
            assert_eq!(phi_at(&tent(), 10.0, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn phi_rejects_jumps() {
        assert!(matches!(
            phi_at(&unit_indicator(), 0.5, 0.5),
            Err(Error::DiscontinuousFunction(_))
        ));
    }

    #[test]
    fn inclusion_tent() {
        let grid = uniform_grid(-2.0, 4.0, 2000);
        let rep = inclusion_check(&tent(), 0.25, &grid, 1e-10).unwrap();
        assert!(rep.pass, "{}", rep.details);
        // Vacuous at large lambda.
        let rep = inclusion_check(&tent(), 10.0, &grid, 1e-10).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn sunrise_tent() {
        let cfg = MaximalConfig::default();
        let rep = sunrise_check(&tent(), 0.5, &cfg, 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep);
        assert!((rep.rhs - 0.75).abs() < 1e-12);
        assert!(rep.lhs >= 1.0 - 1e-9, "lhs = {}", rep.lhs);
        // lambda above the peak: rhs = 0, trivial pass.
        let rep = sunrise_check(&tent(), 2.0, &cfg, 1e-6).unwrap();
        assert!(rep.pass && rep.rhs == 0.0);
    }

    #[test]
    fn theorem1_constant_values() {
        assert!((theorem1_constant(e(1.5)) - 1.5f64.powf(2.0 / 3.0)).abs() < 1e-15);
        assert!((theorem1_constant(e(1.999999)) - 1.0).abs() < 1e-5);
        assert!(theorem1_check(&tent(), e(2.5), &MaximalConfig::default(), 1e-6).is_err());
    }

    #[test]
    fn theorem1_smoothed_indicator() {
        // Trapezoid smoothing of 1_[0,1].
        let f = PiecewiseLinear::from_segments(vec![
            Segment::new(-0.05, 0.05, 0.0, 1.0),
            Segment::new(0.05, 0.95, 1.0, 1.0),
            Segment::new(0.95, 1.05, 1.0, 0.0),
        ])
        .unwrap();
        let rep = theorem1_check(&f, e(1.5), &MaximalConfig::default(), 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn indicator_unit_interval_closed_form() {
        let set = IntervalSet::new(vec![(0.0, 1.0)]).unwrap();
        for pe in [2.0, 3.0, 5.0] {
            let lhs = indicator_lp_mass(&set, e(pe)).unwrap();
            let exact = 1.0 + 2f64.powf(1.0 - pe) / (pe - 1.0);
            assert!(
                (lhs - exact).abs() / exact < 1e-6,
                "p = {pe}: {lhs} vs {exact}"
            );
        }
        let q = indicator_quarter_superlevel_measure(&set).unwrap();
        assert!((q - 3.0).abs() < 1e-8, "quarter measure = {q}");
        let rep = indicator_check(&set, e(2.0), 1e-6).unwrap();
        assert!(rep.pass);
        assert!((rep.lhs - 1.5).abs() < 1e-5);
        assert!((rep.rhs - 1.0625).abs() < 1e-12);
    }

    #[test]
    fn indicator_two_far_intervals() {
        let set = IntervalSet::new(vec![(0.0, 1.0), (50.0, 51.0)]).unwrap();
        let rep = indicator_check(&set, e(3.0), 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep);
        assert!(rep.slack > 0.0);
    }

    #[test]
    fn psi_of_unit_indicator_tail() {
        // f~ = 1_(0,1]: every cell (2^k, 2^{k+1}] with 2^{k+1} <= 1 gets the
        // value f~(2^{k+1}) = 1, including (1/2, 1] where f~(1) = 1, so psi
        // is the indicator itself and 2 ||psi||_p^p >= ||f~||_p^p reads 2 >= 1.
        let f = unit_indicator();
        let psi = build_psi(&f).unwrap();
        assert!((psi.eval(0.4) - 1.0).abs() < 1e-15);
        assert!((psi.eval(0.75) - 1.0).abs() < 1e-15);
        assert_eq!(psi.eval(1.5), 0.0);
        let p = e(2.0);
        assert!(2.0 * psi.lp_norm_p(p) >= f.lp_norm_p(p));
        assert!((psi.lp_norm_p(p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn psi_is_minorant_of_decreasing_ramp() {
        let f =
            PiecewiseLinear::from_segments(vec![Segment::new(0.0, 3.0, 2.0, 0.0)]).unwrap();
        let psi = build_psi(&f).unwrap();
        for i in 1..=10_000 {
            let x = 3.0 * i as f64 / 10_000.0;
            assert!(psi.eval(x) <= f.eval(x) + 1e-15, "x = {x}");
        }
    }

    #[test]
    fn psi_rejects_increasing_input() {
        let f =
            PiecewiseLinear::from_segments(vec![Segment::new(0.0, 1.0, 0.0, 1.0)]).unwrap();
        assert!(build_psi(&f).is_err());
    }

    #[test]
    fn witness_splits_at_mode() {
        let w = UnimodalWitness::new(tent(), e(2.0)).unwrap();
        assert_eq!(w.mode, 1.0);
        let (lo, _) = w.f_tilde.support();
        assert_eq!(lo, 0.0);
        let rep = psi_norm_check(&w, e(2.0));
        assert!(rep.pass, "{:?}", rep);
    }

    #[test]
    fn gbar_minorant_certified() {
        let m = gbar_minorant(GBAR_MINORANT_GAP);
        for i in 1..=20_000 {
            let x = i as f64 / 20_000.0;
            let v = m.eval(x);
            let g = gbar(x);
            assert!(v <= g + 1e-15, "x = {x}: minorant above gbar");
            assert!(g - v <= GBAR_MINORANT_GAP * (1.0 + 1e-9), "x = {x}: gap too large");
        }
    }

    #[test]
    fn gbar_one_step_identity() {
        let cfg = MaximalConfig::default();
        let rep = gbar_iterate_check(1, 250, &cfg).unwrap();
        assert!(rep.pass, "{}", rep.details);
        // Spot values: M gbar(1/2) >= 1/3, M gbar(9/8) >= 0.
        let m = gbar_minorant(GBAR_MINORANT_GAP);
        assert!(centered_max_at(&m, 0.5) >= 1.0 / 3.0 - 2e-6);
        assert!(centered_max_at(&m, 9.0 / 8.0) >= 0.0);
        // The paper's one-step value at x = 1: M gbar(1) >= gbar(8/9).
        assert!(centered_max_at(&m, 1.0) >= (1.0 - (8.0f64 / 9.0).sqrt()) - 2e-6);
    }

    #[test]
    fn c_p_and_implied_n() {
        // Closed form: 2 (tau^{p+1}/(p+1) - tau^{p+2}/(p+2)), tau = 1 - 1/sqrt(2).
        let tau = 1.0 - 1.0 / 2f64.sqrt();
        let c2_exact = 2.0 * (tau.powi(3) / 3.0 - tau.powi(4) / 4.0);
        let c2 = c_p(e(2.0));
        assert!((c2 - c2_exact).abs() < 1e-12, "C_2 = {c2} vs {c2_exact}");
        assert!((c2 - 0.0130712).abs() < 1e-6);
        let n = implied_n(e(2.0));
        assert_eq!(n, 61);
    }

    #[test]
    fn stability_gap_tent() {
        let rep = stability_gap_check(&tent(), e(2.0), &MaximalConfig::default()).unwrap();
        assert!(rep.pass, "{:?}", rep);
        assert!(rep.details.contains("eps~"));
        let eps: f64 = rep
            .details
            .split('=')
            .nth(1)
            .unwrap()
            .trim()
            .parse()
            .unwrap();
        assert!(eps > 0.0);
    }
}
