//! Scalar solvers shared across the equilibrium and welfare code:
//! derivative bisection for concave 1-D problems, root bisection, and
//! golden-section search.

/// Root of a nonincreasing function `g` on `[0, hi]`, as used for concave
/// first-order conditions: returns `0` when `g(0) <= 0`, `hi` when
/// `g(hi) >= 0`, otherwise bisects. The bracket is shrunk to width `tol`
/// and then refined to a relative width of `1e-9`; tiny roots of sharply
/// curved marginals (power effort maps near exponent one) need the
/// relative part for their first-order ratios to be meaningful. `g` may
/// return `+inf` on the left end.
pub(crate) fn decreasing_root(g: impl Fn(f64) -> f64, hi: f64, tol: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    if g(hi) >= 0.0 {
        return hi;
    }
    let mut lo = 0.0;
    let mut hi = hi;
    for _ in 0..320 {
        let width = hi - lo;
        let abs_done = width <= tol.max(f64::EPSILON * hi);
        if abs_done && (lo == 0.0 || width <= 1e-9 * lo) {
            break;
        }
        if lo > 0.0 && width <= f64::EPSILON * lo {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection on a bracket with a sign change; `f(lo)` and `f(hi)` must have
/// opposite signs (checked by the caller).
pub(crate) fn bisect_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    let mut lo = lo;
    let mut hi = hi;
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    let rising = f_lo < 0.0;
    for _ in 0..200 {
        if hi - lo <= tol.max(f64::EPSILON * hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == rising {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let _ = f_lo;
    0.5 * (lo + hi)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Golden-section maximum of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (x, negfx) = golden_min(|t| -f(t), lo, hi, tol);
    (x, -negfx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decreasing_root_interior() {
        // g(q) = 1/sqrt(q) − 2 crosses at q = 1/4.
        let root = decreasing_root(|q| if q == 0.0 { f64::INFINITY } else { q.sqrt().recip() - 2.0 }, 10.0, 1e-13);
        assert!((root - 0.25).abs() < 1e-10);
    }

    #[test]
    fn decreasing_root_corners() {
        assert_eq!(decreasing_root(|_| -1.0, 5.0, 1e-12), 0.0);
        assert_eq!(decreasing_root(|_| 1.0, 5.0, 1e-12), 5.0);
    }

    #[test]
    fn bisect_root_finds_cos_zero() {
        let r = bisect_root(|x| x.cos(), 0.0, 2.0, 1e-13);
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn golden_finds_parabola_extrema() {
        let (x, fx) = golden_min(|t| (t - 1.3) * (t - 1.3), -4.0, 4.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-7);
        assert!(fx < 1e-12);
        let (x, fx) = golden_max(|t| -(t - 0.7) * (t - 0.7) + 2.0, -4.0, 4.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-7);
        assert!((fx - 2.0).abs() < 1e-12);
    }
}

