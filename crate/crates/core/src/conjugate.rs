//! One-sided Legendre conjugate solver shared by every rate computation.
//!
//! Given a nondecreasing slope function `g'` on `(−∞, 0]` and a target
//! level strictly between its limit at `−∞` and its value at `0`, find
//! `λ < 0` with `g'(λ) = target`. The bracket is grown by doubling
//! (`−1, −2, −4, …`) until `g'(λ) < target`, then bisected.

/// Stop once `|g'(λ) − target|` is at most this.
pub const SLOPE_TOLERANCE: f64 = 1e-12;
/// Bisection step cap.
pub const MAX_BISECTIONS: usize = 200;

/// Smallest slope we will try before giving up on the bracket.
const MIN_LAMBDA: f64 = -1e300;

pub fn solve_slope(mut slope: impl FnMut(f64) -> f64, target: f64) -> f64 {
    let mut hi = 0.0_f64;
    let mut lo = -1.0_f64;
    loop {
        let d = slope(lo);
        if (d - target).abs() <= SLOPE_TOLERANCE {
            return lo;
        }
        if d < target || lo <= MIN_LAMBDA {
            break;
        }
        hi = lo;
        lo *= 2.0;
    }
    let mut best = (lo, f64::INFINITY);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let d = slope(mid);
        let err = (d - target).abs();
        if err < best.1 {
            best = (mid, err);
        }
        if err <= SLOPE_TOLERANCE {
            return mid;
        }
        if d < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    best.0
}
