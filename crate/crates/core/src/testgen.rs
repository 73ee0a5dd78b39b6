//! Deterministic generators for test functions and interval sets.
//!
//! Everything is seeded through ChaCha8 and uses raw 53-bit uniforms, so the
//! same seed reproduces the same inputs on any platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::interval::IntervalSet;
use crate::pwl::{PiecewiseLinear, Segment};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unif(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + u * (hi - lo)
}

pub fn unif_usize(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    lo + (rng.next_u64() as usize) % (hi - lo + 1)
}

/// Random continuous, compactly supported, nonnegative piecewise-linear
/// function: 3..=9 pieces, values up to 2, occasional plateaus and interior
/// zeros, zero at both support edges.
pub fn random_continuous(rng: &mut ChaCha8Rng) -> PiecewiseLinear {
    let n = unif_usize(rng, 3, 9);
    let mut x = unif(rng, -3.0, 0.0);
    let mut vals = vec![0.0f64];
    for i in 1..n {
        let roll = unif(rng, 0.0, 1.0);
        let v = if roll < 0.15 {
            vals[i - 1] // plateau
        } else if roll < 0.25 && i > 1 {
            0.0
        } else {
            unif(rng, 0.05, 2.0)
        };
        vals.push(v);
    }
    vals.push(0.0);
    if vals.iter().all(|&v| v == 0.0) {
        vals[n / 2] = 1.0;
    }
    let mut segs = Vec::with_capacity(n);
    for i in 0..n {
        let w = unif(rng, 0.15, 1.0);
        segs.push(Segment::new(x, x + w, vals[i], vals[i + 1]));
        x += w;
    }
    PiecewiseLinear::from_segments(segs).unwrap()
}

/// Random piecewise-linear function with jumps and gaps allowed.
pub fn random_pwl(rng: &mut ChaCha8Rng) -> PiecewiseLinear {
    let n = unif_usize(rng, 2, 8);
    let mut x = unif(rng, -3.0, 0.0);
    let mut segs = Vec::with_capacity(n);
    for _ in 0..n {
        if unif(rng, 0.0, 1.0) < 0.25 {
            x += unif(rng, 0.05, 0.8); // gap
        }
        let w = unif(rng, 0.15, 1.0);
        let ya = unif(rng, 0.0, 2.0);
        let yb = unif(rng, 0.0, 2.0);
        segs.push(Segment::new(x, x + w, ya, yb));
        x += w;
    }
    if segs.iter().all(|s| s.ya == 0.0 && s.yb == 0.0) {
        segs[0].ya = 1.0;
    }
    PiecewiseLinear::from_segments(segs).unwrap()
}

/// Random interval set with up to `max_n` disjoint intervals.
pub fn random_interval_set(rng: &mut ChaCha8Rng, max_n: usize) -> IntervalSet {
    let n = unif_usize(rng, 1, max_n);
    let mut ivs = Vec::with_capacity(n);
    let mut x = unif(rng, -4.0, -2.0);
    for _ in 0..n {
        x += unif(rng, 0.1, 2.0);
        let len = unif(rng, 0.2, 1.5);
        ivs.push((x, x + len));
        x += len;
    }
    IntervalSet::new(ivs).unwrap()
}

/// Random continuous unimodal function: strictly rising to a peak, then
/// falling back to zero.
pub fn random_unimodal(rng: &mut ChaCha8Rng) -> PiecewiseLinear {
    let peak = unif(rng, 0.5, 2.0);
    let n_up = unif_usize(rng, 1, 3);
    let n_down = unif_usize(rng, 1, 3);
    let mut up: Vec<f64> = (0..n_up - 1).map(|_| unif(rng, 0.0, peak)).collect();
    up.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut down: Vec<f64> = (0..n_down - 1).map(|_| unif(rng, 0.0, peak)).collect();
    down.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut vals = vec![0.0];
    vals.extend(up);
    vals.push(peak);
    vals.extend(down);
    vals.push(0.0);

    let mut x = unif(rng, -2.0, 0.5);
    let mut segs = Vec::with_capacity(vals.len() - 1);
    for w in vals.windows(2) {
        let dx = unif(rng, 0.2, 1.0);
        segs.push(Segment::new(x, x + dx, w[0], w[1]));
        x += dx;
    }
    PiecewiseLinear::from_segments(segs).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_continuous(&mut rng(42));
        let b = random_continuous(&mut rng(42));
        assert_eq!(a.segments(), b.segments());
    }

    #[test]
    fn continuous_generator_is_continuous() {
        let mut r = rng(7);
        for _ in 0..50 {
            let f = random_continuous(&mut r);
            assert!(f.is_continuous());
            assert!(f.mass() > 0.0);
        }
    }

    #[test]
    fn unimodal_generator_shape() {
        let mut r = rng(11);
        for _ in 0..50 {
            let f = random_unimodal(&mut r);
            assert!(f.is_continuous());
            assert!(f.sup() > 0.0);
        }
    }
}
