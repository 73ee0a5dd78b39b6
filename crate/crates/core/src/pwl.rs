//! The piecewise-linear function algebra: representation, evaluation,
//! antiderivatives, closed-form L^p norms, and level-set machinery.
//!
//! Every function here is nonnegative with bounded support, linear on each
//! segment and zero outside all segments. Jumps are allowed at shared segment
//! endpoints; `eval` resolves them by taking the value from the right segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::IntervalSet;

/// L^p exponent restricted to p > 1 (all results assume 1 < p < infinity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Exponent(f64);

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_finite() && p > 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::InvalidExponent(p))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Exponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Exponent::new(p)
    }
}

impl From<Exponent> for f64 {
    fn from(p: Exponent) -> f64 {
        p.0
    }
}

/// One linear piece: the interpolant from `(a, ya)` to `(b, yb)` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub ya: f64,
    pub yb: f64,
}

impl Segment {
    pub fn new(a: f64, b: f64, ya: f64, yb: f64) -> Self {
        Segment { a, b, ya, yb }
    }

    pub fn value_at(&self, x: f64) -> f64 {
        if self.ya == self.yb {
            return self.ya;
        }
        self.ya + (self.yb - self.ya) * ((x - self.a) / (self.b - self.a))
    }

    pub fn slope(&self) -> f64 {
        (self.yb - self.ya) / (self.b - self.a)
    }

    /// Trapezoid mass of the piece.
    pub fn mass(&self) -> f64 {
        0.5 * (self.b - self.a) * (self.ya + self.yb)
    }
}

/// Relative slope threshold below which the L^p closed form switches to the
/// constant-segment formula to avoid cancellation.
const FLAT_SLOPE_EPS: f64 = 1e-14;

#[derive(Serialize, Deserialize)]
struct PwlRepr {
    segments: Vec<[f64; 4]>,
}

/// A compactly supported, nonnegative, possibly discontinuous piecewise-linear
/// function. Immutable after construction; all operations are pure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PwlRepr", into = "PwlRepr")]
pub struct PiecewiseLinear {
    segs: Vec<Segment>,
    // Cached geometry: sorted distinct segment endpoints, the segment (if any)
    // covering each knot cell, the antiderivative at each knot, total mass and
    // sup. The maximal-operator scan leans on these.
    knots: Vec<f64>,
    cell_seg: Vec<Option<u32>>,
    f_knot: Vec<f64>,
    mass: f64,
    sup: f64,
}

impl From<PiecewiseLinear> for PwlRepr {
    fn from(f: PiecewiseLinear) -> Self {
        PwlRepr {
            segments: f.segs.iter().map(|s| [s.a, s.b, s.ya, s.yb]).collect(),
        }
    }
}

impl TryFrom<PwlRepr> for PiecewiseLinear {
    type Error = Error;
    fn try_from(repr: PwlRepr) -> Result<Self> {
        PiecewiseLinear::from_segments(
            repr.segments
                .iter()
                .map(|&[a, b, ya, yb]| Segment::new(a, b, ya, yb))
                .collect(),
        )
    }
}

impl PiecewiseLinear {
    /// Validates and builds a function from segments sorted by left endpoint.
    ///
    /// Rules: every segment has `a < b` and nonnegative values; consecutive
    /// segments satisfy `prev.b <= next.a` (abutting allowed, overlap not);
    /// at least one segment, so the support is a nonempty bounded set.
    pub fn from_segments(segs: Vec<Segment>) -> Result<Self> {
        if segs.is_empty() {
            return Err(Error::InvalidFunction("no segments".into()));
        }
        for s in &segs {
            if !(s.a.is_finite() && s.b.is_finite() && s.ya.is_finite() && s.yb.is_finite()) {
                return Err(Error::InvalidFunction(format!("non-finite segment {s:?}")));
            }
            if s.a >= s.b {
                return Err(Error::InvalidFunction(format!(
                    "segment ({}, {}) has a >= b",
                    s.a, s.b
                )));
            }
            if s.ya < 0.0 || s.yb < 0.0 {
                return Err(Error::InvalidFunction(format!(
                    "negative value on segment {s:?}"
                )));
            }
        }
        for w in segs.windows(2) {
            if w[1].a < w[0].b {
                return Err(Error::InvalidFunction(format!(
                    "segments overlap or are unsorted near x = {}",
                    w[1].a
                )));
            }
        }

        let mut knots: Vec<f64> = Vec::with_capacity(segs.len() + 1);
        for s in &segs {
            if knots.last() != Some(&s.a) {
                knots.push(s.a);
            }
            knots.push(s.b);
        }

        let mut cell_seg: Vec<Option<u32>> = vec![None; knots.len() - 1];
        for (i, s) in segs.iter().enumerate() {
            // Binary search is exact: s.a is a knot.
            let c = knots.binary_search_by(|k| k.partial_cmp(&s.a).unwrap()).unwrap();
            cell_seg[c] = Some(i as u32);
        }

        let mut f_knot = Vec::with_capacity(knots.len());
        let mut acc = 0.0;
        f_knot.push(0.0);
        for (c, &seg_idx) in cell_seg.iter().enumerate() {
            if let Some(i) = seg_idx {
                debug_assert_eq!(segs[i as usize].b, knots[c + 1]);
                acc += segs[i as usize].mass();
            }
            f_knot.push(acc);
        }

        let sup = segs.iter().map(|s| s.ya.max(s.yb)).fold(0.0, f64::max);
        Ok(PiecewiseLinear {
            segs,
            knots,
            cell_seg,
            f_knot,
            mass: acc,
            sup,
        })
    }

    /// The indicator function of a nonempty interval set, encoded with one
    /// constant segment per interval.
    pub fn indicator(set: &IntervalSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::EmptyInput("indicator"));
        }
        Self::from_segments(
            set.intervals()
                .iter()
                .map(|&(lo, hi)| Segment::new(lo, hi, 1.0, 1.0))
                .collect(),
        )
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segs
    }

    /// Sorted distinct segment endpoints.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Support hull `(first a, last b)`.
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Total mass, i.e. the L^1 norm.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Supremum of the function.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub(crate) fn cell_segment(&self, cell: usize) -> Option<&Segment> {
        self.cell_seg[cell].map(|i| &self.segs[i as usize])
    }

    pub(crate) fn f_at_knot(&self, i: usize) -> f64 {
        self.f_knot[i]
    }

    /// Pointwise value. At a shared endpoint with a jump the value comes from
    /// the right segment; outside all segments the value is zero.
    pub fn eval(&self, x: f64) -> f64 {
        let j = self.segs.partition_point(|s| s.a <= x);
        if j == 0 {
            return 0.0;
        }
        let s = &self.segs[j - 1];
        if x <= s.b {
            s.value_at(x)
        } else {
            0.0
        }
    }

    /// Right limit `f(x+)`.
    pub fn eval_right_limit(&self, x: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k <= x);
        if j == 0 || j >= self.knots.len() {
            return 0.0;
        }
        match self.cell_segment(j - 1) {
            Some(s) => s.value_at(x),
            None => 0.0,
        }
    }

    /// Left limit `f(x-)`.
    pub fn eval_left_limit(&self, x: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k < x);
        if j == 0 || j >= self.knots.len() {
            return 0.0;
        }
        match self.cell_segment(j - 1) {
            Some(s) => s.value_at(x),
            None => 0.0,
        }
    }

    /// True when the function has no jumps: zero at the support edges, equal
    /// one-sided values at interior junctions, zero on both sides of gaps.
    pub fn is_continuous(&self) -> bool {
        let first = &self.segs[0];
        let last = &self.segs[self.segs.len() - 1];
        if first.ya != 0.0 || last.yb != 0.0 {
            return false;
        }
        for w in self.segs.windows(2) {
            if w[0].b == w[1].a {
                if w[0].yb != w[1].ya {
                    return false;
                }
            } else if w[0].yb != 0.0 || w[1].ya != 0.0 {
                return false;
            }
        }
        true
    }

    /// Antiderivative `F(x) = integral of f over (-inf, x]`, exact per
    /// segment by the trapezoid closed form. Continuous, nondecreasing, and
    /// constant outside the support.
    pub fn antideriv(&self, x: f64) -> f64 {
        let j = self.knots.partition_point(|&k| k <= x);
        if j == 0 {
            return 0.0;
        }
        if j >= self.knots.len() {
            return self.mass;
        }
        let base = self.f_knot[j - 1];
        match self.cell_segment(j - 1) {
            Some(s) => base + 0.5 * (x - self.knots[j - 1]) * (s.value_at(self.knots[j - 1]) + s.value_at(x)),
            None => base,
        }
    }

    /// `||f||_p^p`, exact per segment.
    ///
    /// For the linear piece `u + v t` on `[a, b]` the contribution is
    /// `((u+vb)^{p+1} - (u+va)^{p+1}) / (v (p+1))`, falling back to the
    /// constant formula `(b-a) u^p` when the slope is negligible.
    pub fn lp_norm_p(&self, p: Exponent) -> f64 {
        let p = p.get();
        let mut total = 0.0;
        for s in &self.segs {
            let dy = s.yb - s.ya;
            if dy.abs() <= FLAT_SLOPE_EPS * s.ya.abs().max(s.yb.abs()).max(1.0) {
                let mid = 0.5 * (s.ya + s.yb);
                total += (s.b - s.a) * mid.powf(p);
            } else {
                total += (s.yb.powf(p + 1.0) - s.ya.powf(p + 1.0)) * (s.b - s.a) / (dy * (p + 1.0));
            }
        }
        total
    }

    /// `||f||_p`.
    pub fn lp_norm(&self, p: Exponent) -> f64 {
        self.lp_norm_p(p).powf(1.0 / p.get())
    }

    /// The closed superlevel set `{f >= lambda}` for `lambda > 0`, with
    /// crossing points solved exactly per segment. Plateaus at exactly
    /// `lambda` are included; degenerate touch points (measure zero) are not.
    pub fn superlevel_set(&self, lambda: f64) -> Result<IntervalSet> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "superlevel threshold must be positive, got {lambda}"
            )));
        }
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for s in &self.segs {
            let above_a = s.ya >= lambda;
            let above_b = s.yb >= lambda;
            let piece = match (above_a, above_b) {
                (true, true) => Some((s.a, s.b)),
                (false, false) => None,
                (true, false) => {
                    let t = s.a + (lambda - s.ya) / (s.yb - s.ya) * (s.b - s.a);
                    Some((s.a, t))
                }
                (false, true) => {
                    let t = s.a + (lambda - s.ya) / (s.yb - s.ya) * (s.b - s.a);
                    Some((t, s.b))
                }
            };
            if let Some((lo, hi)) = piece {
                if let Some(prev) = raw.last_mut() {
                    if lo <= prev.1 {
                        prev.1 = prev.1.max(hi);
                        continue;
                    }
                }
                raw.push((lo, hi));
            }
        }
        raw.retain(|&(lo, hi)| hi > lo);
        IntervalSet::new(raw)
    }

    /// `integral of f over {f >= lambda}` (without the `1/(2 lambda)` factor).
    pub fn superlevel_integral(&self, lambda: f64) -> Result<f64> {
        let set = self.superlevel_set(lambda)?;
        Ok(set
            .intervals()
            .iter()
            .map(|&(lo, hi)| self.antideriv(hi) - self.antideriv(lo))
            .sum())
    }

    /// Continuous piecewise-linear interpolant through `(grid[i], values_at(grid[i]))`,
    /// zero outside `[grid[0], grid[last]]`. The grid must be strictly
    /// increasing with at least two points; the evaluator must be nonnegative.
    pub fn resample<F: Fn(f64) -> f64>(values_at: F, grid: &[f64]) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NonMonotoneGrid);
        }
        let vals: Vec<f64> = grid.iter().map(|&x| values_at(x)).collect();
        if let Some(v) = vals.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidFunction(format!(
                "evaluator returned a negative or non-finite value {v}"
            )));
        }
        let segs = grid
            .windows(2)
            .zip(vals.windows(2))
            .map(|(x, y)| Segment::new(x[0], x[1], y[0], y[1]))
            .collect();
        Self::from_segments(segs)
    }

    /// `c * f` for `c >= 0` (rejects c that would produce negative values).
    pub fn scale(&self, c: f64) -> Result<Self> {
        Self::from_segments(
            self.segs
                .iter()
                .map(|s| Segment::new(s.a, s.b, c * s.ya, c * s.yb))
                .collect(),
        )
    }

    /// `x -> f(x - dx)`.
    pub fn translate(&self, dx: f64) -> Result<Self> {
        Self::from_segments(
            self.segs
                .iter()
                .map(|s| Segment::new(s.a + dx, s.b + dx, s.ya, s.yb))
                .collect(),
        )
    }

    /// `x -> f(c x)` for `c > 0`.
    pub fn dilate(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "dilation factor must be positive, got {c}"
            )));
        }
        Self::from_segments(
            self.segs
                .iter()
                .map(|s| Segment::new(s.a / c, s.b / c, s.ya, s.yb))
                .collect(),
        )
    }

    /// `x -> f(-x)`.
    pub fn reflect(&self) -> Self {
        let segs = self
            .segs
            .iter()
            .rev()
            .map(|s| Segment::new(-s.b, -s.a, s.yb, s.ya))
            .collect();
        Self::from_segments(segs).expect("reflection preserves validity")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidFunction(e.to_string()))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("function serializes")
    }
}

/// The unit tent on `[0, 2]`: rises to 1 at x = 1, back to 0.
pub fn tent() -> PiecewiseLinear {
    PiecewiseLinear::from_segments(vec![
        Segment::new(0.0, 1.0, 0.0, 1.0),
        Segment::new(1.0, 2.0, 1.0, 0.0),
    ])
    .unwrap()
}

/// The indicator of `[0, 1]` as a single constant segment.
pub fn unit_indicator() -> PiecewiseLinear {
    PiecewiseLinear::from_segments(vec![Segment::new(0.0, 1.0, 1.0, 1.0)]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: f64) -> Exponent {
        Exponent::new(v).unwrap()
    }

    #[test]
    fn exponent_rejects_out_of_range() {
        assert!(Exponent::new(1.0).is_err());
        assert!(Exponent::new(0.5).is_err());
        assert!(Exponent::new(f64::NAN).is_err());
        assert!(Exponent::new(1.0000001).is_ok());
    }

    #[test]
    fn eval_basics() {
        assert_eq!(unit_indicator().eval(0.5), 1.0);
        assert_eq!(tent().eval(0.5), 0.5);
        let f = tent();
        let (_, hi) = f.support();
        assert_eq!(f.eval(hi + 1.0), 0.0);
    }

    #[test]
    fn eval_jump_takes_right_segment() {
        // Jump at x = 1: left piece ends at 2, right piece starts at 0.5.
        let f = PiecewiseLinear::from_segments(vec![
            Segment::new(0.0, 1.0, 2.0, 2.0),
            Segment::new(1.0, 2.0, 0.5, 0.5),
        ])
        .unwrap();
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.eval_left_limit(1.0), 2.0);
        assert_eq!(f.eval_right_limit(1.0), 0.5);
        assert!(!f.is_continuous());
    }

    #[test]
    fn antideriv_closed_forms() {
        assert_eq!(unit_indicator().antideriv(0.5), 0.5);
        assert_eq!(tent().antideriv(2.0), 1.0);
        assert_eq!(tent().antideriv(0.5), 0.125);
        assert_eq!(tent().antideriv(-1.0), 0.0);
        assert_eq!(tent().antideriv(5.0), 1.0);
    }

    #[test]
    fn lp_norm_closed_forms() {
        assert!((unit_indicator().lp_norm_p(p(2.0)) - 1.0).abs() < 1e-15);
        assert!((tent().lp_norm_p(p(2.0)) - 2.0 / 3.0).abs() < 1e-15);
        // Homogeneity at p = 3: ||2 f||_3^3 = 8 ||f||_3^3.
        let f = tent();
        let g = f.scale(2.0).unwrap();
        let ratio = g.lp_norm_p(p(3.0)) / f.lp_norm_p(p(3.0));
        assert!((ratio - 8.0).abs() < 1e-12);
    }

    #[test]
    fn superlevel_of_tent() {
        let s = tent().superlevel_set(0.5).unwrap();
        assert_eq!(s.intervals(), &[(0.5, 1.5)]);
        assert!(tent().superlevel_set(2.0).unwrap().is_empty());
        let s = unit_indicator().superlevel_set(1.0).unwrap();
        assert_eq!(s.intervals(), &[(0.0, 1.0)]);
    }

    #[test]
    fn superlevel_integral_of_tent() {
        assert!((tent().superlevel_integral(0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(tent().superlevel_integral(2.0).unwrap(), 0.0);
        assert!((unit_indicator().superlevel_integral(0.5).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn superlevel_merges_across_knots() {
        // Continuous function above lambda across an interior knot: one interval.
        let f = tent();
        let s = f.superlevel_set(0.25).unwrap();
        assert_eq!(s.intervals().len(), 1);
        assert!((s.measure() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn resample_basics() {
        let ind = unit_indicator();
        let g = PiecewiseLinear::resample(|x| ind.eval(x), &[-1.0, 0.0, 1.0, 2.0]).unwrap();
        assert_eq!(g.eval(0.0), 1.0);
        assert_eq!(g.eval(-0.5), 0.5);
        let c = PiecewiseLinear::resample(|_| 1.0, &[0.0, 1.0]).unwrap();
        assert_eq!(c.segments(), &[Segment::new(0.0, 1.0, 1.0, 1.0)]);
        assert!(PiecewiseLinear::resample(|_| 1.0, &[0.0, 0.0]).is_err());
        assert!(PiecewiseLinear::resample(|_| 1.0, &[1.0]).is_err());
        assert!(PiecewiseLinear::resample(|_| -1.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn construction_rejections() {
        assert!(PiecewiseLinear::from_segments(vec![]).is_err());
        assert!(PiecewiseLinear::from_segments(vec![Segment::new(1.0, 0.0, 1.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::from_segments(vec![Segment::new(0.0, 1.0, -0.1, 1.0)]).is_err());
        assert!(PiecewiseLinear::from_segments(vec![
            Segment::new(0.0, 2.0, 1.0, 1.0),
            Segment::new(1.0, 3.0, 1.0, 1.0),
        ])
        .is_err());
    }

    #[test]
    fn json_rejects_overlap() {
        assert!(PiecewiseLinear::from_json_str(
            r#"{"segments": [[0.0, 2.0, 1.0, 1.0], [1.0, 3.0, 1.0, 1.0]]}"#
        )
        .is_err());
        let f =
            PiecewiseLinear::from_json_str(r#"{"segments": [[0.0, 1.0, 1.0, 1.0]]}"#).unwrap();
        assert_eq!(f.mass(), 1.0);
    }

    #[test]
    fn continuity_detection() {
        assert!(tent().is_continuous());
        assert!(!unit_indicator().is_continuous());
        // Gap with zero values on both sides stays continuous.
        let f = PiecewiseLinear::from_segments(vec![
            Segment::new(0.0, 1.0, 0.0, 0.0),
            Segment::new(2.0, 3.0, 0.0, 0.0),
        ])
        .unwrap();
        assert!(f.is_continuous());
    }
}
