//! Bracketed scalar root finding.
//!
//! Every solver in this crate works with functions that are monotone on a
//! known bracket, so both routines require a sign change and never leave it.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// Relative width of the final bracket.
    pub rel: f64,
    /// Absolute width of the final bracket.
    pub abs: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64, max_iter: usize) -> Self {
        Self { rel, abs, max_iter }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 0.0, 200)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: usize,
}

fn not_bracketed(context: &str, lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Error {
    Error::RootNotConverged {
        context: format!("{context} (no sign change)"),
        lo,
        hi,
        f_lo,
        f_hi,
        iterations: 0,
    }
}

/// Plain bisection on `[lo, hi]`.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: Tolerance, context: &str) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(Root {
            x: lo,
            iterations: 0,
        });
    }
    if f_hi == 0.0 {
        return Ok(Root {
            x: hi,
            iterations: 0,
        });
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(not_bracketed(context, lo, hi, f_lo, f_hi));
    }
    for it in 1..=tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Ok(Root {
                x: mid,
                iterations: it,
            });
        }
        let f_mid = f(mid);
        if f_mid.is_nan() {
            return Err(Error::RootNotConverged {
                context: format!("{context} (NaN at {mid})"),
                lo,
                hi,
                f_lo,
                f_hi,
                iterations: it,
            });
        }
        if f_mid == 0.0 {
            return Ok(Root {
                x: mid,
                iterations: it,
            });
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
        let width = (hi - lo).abs();
        if width <= tol.abs || width <= tol.rel * lo.abs().max(hi.abs()) {
            return Ok(Root {
                x: 0.5 * (lo + hi),
                iterations: it,
            });
        }
    }
    Err(Error::RootNotConverged {
        context: context.to_string(),
        lo,
        hi,
        f_lo,
        f_hi,
        iterations: tol.max_iter,
    })
}

/// Brent's method: inverse quadratic / secant steps with a bisection fallback,
/// so the bracket shrinks at least as fast as bisection in the worst case.
///
/// Terminates when the bracket is narrower than the tolerance or when
/// `|f| <= f_abs`.
pub fn brent<F>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
    f_abs: f64,
    context: &str,
) -> Result<Root>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(Root {
            x: a,
            iterations: 0,
        });
    }
    if fb == 0.0 {
        return Ok(Root {
            x: b,
            iterations: 0,
        });
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(not_bracketed(context, lo, hi, fa, fb));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for it in 1..=tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs.max(tol.rel * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= f_abs {
            return Ok(Root {
                x: b,
                iterations: it,
            });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::RootNotConverged {
                context: format!("{context} (NaN at {b})"),
                lo: a.min(c),
                hi: a.max(c),
                f_lo: fa,
                f_hi: fc,
                iterations: it,
            });
        }
    }
    Err(Error::RootNotConverged {
        context: context.to_string(),
        lo: b.min(c),
        hi: b.max(c),
        f_lo: fb,
        f_hi: fc,
        iterations: tol.max_iter,
    })
}

/// Grows `hi` geometrically from `start` until `f(hi) < 0`.
pub fn expand_upper<F>(
    mut f: F,
    start: f64,
    factor: f64,
    max_steps: usize,
    context: &str,
) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut hi = start;
    for _ in 0..max_steps {
        if f(hi) < 0.0 {
            return Ok(hi);
        }
        hi *= factor;
    }
    Err(Error::BracketFailure {
        context: context.to_string(),
        reason: format!("function still nonnegative at {hi}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(
            |x| 2.0 - x * x,
            0.0,
            2.0,
            Tolerance::new(1e-14, 0.0, 200),
            "sqrt",
        )
        .unwrap();
        assert_relative_eq!(r.x, 2f64.sqrt(), max_relative = 1e-13);
    }

    #[test]
    fn brent_matches_bisect() {
        let f = |x: f64| (-x).exp() - x;
        let tol = Tolerance::new(1e-14, 0.0, 200);
        let a = bisect(f, 0.0, 1.0, tol, "a").unwrap();
        let b = brent(f, 0.0, 1.0, tol, 0.0, "b").unwrap();
        assert_relative_eq!(a.x, b.x, max_relative = 1e-12);
        assert!(b.iterations < a.iterations);
    }

    #[test]
    fn brent_handles_root_near_bracket_end() {
        let f = |x: f64| 1e-300 - x;
        let r = brent(f, 0.0, 1.0, Tolerance::default(), 0.0, "tiny").unwrap();
        assert!(r.x >= 0.0 && r.x < 1e-10);
    }

    #[test]
    fn requires_sign_change() {
        assert!(bisect(|x| x + 1.0, 0.0, 1.0, Tolerance::default(), "x").is_err());
        assert!(brent(|x| x + 1.0, 0.0, 1.0, Tolerance::default(), 0.0, "x").is_err());
    }

    #[test]
    fn expansion() {
        let hi = expand_upper(|x| 10.0 - x, 1.0, 2.0, 10, "lin").unwrap();
        assert_eq!(hi, 16.0);
        assert!(expand_upper(|_| 1.0, 1.0, 2.0, 5, "const").is_err());
    }
}
