//! Scalar root finding and one-dimensional extrema.

use crate::error::{Error, Result};

/// Bisection on a bracketing interval. `f(a)` and `f(b)` must have
/// opposite signs (zero endpoints count as roots).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol_x: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{a:.6e}, {b:.6e}]"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() <= tol_x {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    Ok(0.5 * (a + b))
}

/// Newton iteration safeguarded by a bracket: steps leaving the bracket
/// fall back to bisection. `f` returns (value, derivative).
pub fn newton_bisect<F: FnMut(f64) -> (f64, f64)>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol_x: f64,
) -> Result<f64> {
    let (mut fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::BracketFailure(format!(
            "no sign change on [{a:.6e}, {b:.6e}]"
        )));
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..100 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fa * fx < 0.0 {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        if (b - a).abs() <= tol_x {
            return Ok(0.5 * (a + b));
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Ok(x)
}

/// Golden-section minimization of a unimodal function on [a, b].
/// Returns (argmin, min).
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol_x: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol_x {
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

/// Golden-section maximization.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol_x: f64) -> (f64, f64) {
    let (x, neg) = golden_min(|t| -f(t), a, b, tol_x);
    (x, -neg)
}
