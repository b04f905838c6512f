//! Scalar special functions: principal logarithm ratios, the incomplete beta
//! function (series + recursion at half-integer parameters, with an
//! independent general-parameter quadrature oracle), factorials, and the
//! Kronecker symbol.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Principal Log((w − α⁻)/(w − α⁺)). As a function of w its branch cut is the
/// real segment between the two roots; off the real axis the ratio is never a
/// negative real, on the open segment it always is.
pub fn log_ratio(w: Complex64, alpha_minus: f64, alpha_plus: f64) -> Result<Complex64> {
    let num = w - alpha_minus;
    let den = w - alpha_plus;
    if den.norm() == 0.0 || num.norm() == 0.0 {
        return Err(Error::Domain("log ratio evaluated at a root".into()));
    }
    let r = num / den;
    if r.im == 0.0 && r.re < 0.0 {
        return Err(Error::BranchCut { z_re: w.re, z_im: w.im });
    }
    Ok(r.ln())
}

/// Log with the cut approached from above: negative reals get argument +π.
/// Used when a transformation formula pins which side of the cut a
/// degenerate (real) ratio belongs to.
pub fn log_upper(z: Complex64) -> Complex64 {
    if z.im == 0.0 && z.re < 0.0 {
        Complex64::new(z.re.abs().ln(), std::f64::consts::PI)
    } else {
        z.ln()
    }
}

/// n! as f64 (exact through n = 22).
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, j| acc * j as f64)
}

/// Incomplete beta β(x; n + ½, ½) = ∫₀ˣ t^{n−½} (1 − t)^{−½} dt, x ∈ [0, 1].
///
/// Two stable branches:
/// * x < ½ — hypergeometric power series around 0 (all terms positive);
/// * x ≥ ½ — the parameter recursion B_{m+1} = ((m+½)B_m − x^{m+½}√(1−x))/(m+1)
///   ascending from B₀ = 2 asin √x (subtrahend stays below (m+½)B_m, so no
///   cancellation blowup on this side).
pub fn beta_inc_half(x: f64, n: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta argument {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        return Ok(beta_series(x, n));
    }
    let mut b = 2.0 * x.sqrt().asin();
    let s = (1.0 - x).sqrt();
    let mut xp = x.sqrt(); // x^{m+½}
    for m in 0..n {
        let mf = m as f64;
        b = ((mf + 0.5) * b - xp * s) / (mf + 1.0);
        xp *= x;
    }
    Ok(b)
}

/// Σ_{j≥0} ((½)_j / j!) x^{n+½+j} / (n + ½ + j); converges geometrically for x < 1.
fn beta_series(x: f64, n: u32) -> f64 {
    let nf = n as f64;
    let mut coeff = x.powf(nf + 0.5);
    let mut sum = coeff / (nf + 0.5);
    for j in 0..400 {
        let jf = j as f64;
        coeff *= x * (jf + 0.5) / (jf + 1.0);
        let term = coeff / (nf + 1.5 + jf);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

/// Quadrature oracle for the incomplete beta β(x; p, q) = ∫₀ˣ t^{p−1}(1−t)^{q−1} dt.
///
/// Independent of the recursion engine: adaptive Simpson after power
/// substitutions that regularise the endpoints for every p, q > 0. On
/// [0, min(x,½)] set t = σ^k, turning t^{p−1} dt into k σ^{kp−1} dσ; on
/// (½, x] set t = 1 − s^k, turning (1−t)^{q−1} dt into k s^{kq−1} ds (the
/// square-root substitution t = 1 − s² when q = ½). The integer k is chosen
/// so the endpoint exponent is a small integer or at least 3, leaving an
/// integrand Simpson converges on at full order. Reports non-convergence
/// when refinement stalls before the error estimate reaches `tol`.
pub fn beta_inc_oracle(x: f64, p: f64, q: f64, tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("beta argument {x} outside [0, 1]")));
    }
    if !(p > 0.0) || !(q > 0.0) {
        return Err(Error::Domain(format!("beta parameters p={p}, q={q} must be positive")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let k1 = endpoint_power(p);
    let f1 = |s: f64| s.powf(k1 * p - 1.0) * (1.0 - s.powf(k1)).powf(q - 1.0);
    let (v1, e1, ok1) =
        adaptive_simpson(&f1, 0.0, x.min(0.5).powf(1.0 / k1), 0.5 * tol / k1, 40, &mut 400_000);
    let mut value = k1 * v1;
    let mut est = k1 * e1;
    let mut converged = ok1;
    if x > 0.5 {
        let k2 = endpoint_power(q);
        let f2 = |s: f64| s.powf(k2 * q - 1.0) * (1.0 - s.powf(k2)).powf(p - 1.0);
        let (v2, e2, ok2) = adaptive_simpson(
            &f2,
            (1.0 - x).powf(1.0 / k2),
            0.5f64.powf(1.0 / k2),
            0.5 * tol / k2,
            40,
            &mut 400_000,
        );
        value += k2 * v2;
        est += k2 * e2;
        converged &= ok2;
    }
    if !converged || est > tol {
        return Err(Error::NonConvergent { achieved: est.max(tol), target: tol });
    }
    Ok(value)
}

/// Smallest integer k ≥ 1 for which the substituted endpoint exponent
/// k·e − 1 is a small non-negative integer (a monomial factor, smooth to all
/// orders), falling back to the first k pushing the exponent past 3.
fn endpoint_power(e: f64) -> f64 {
    for k in 1..=8u32 {
        let ex = f64::from(k) * e - 1.0;
        if ex >= -1e-12 && (ex - ex.round()).abs() < 1e-12 && ex.round() <= 12.0 {
            return f64::from(k);
        }
    }
    (4.0 / e).ceil()
}

/// Adaptive Simpson with Richardson acceptance; returns (value, error
/// estimate, converged). `budget` caps the total number of interval splits so
/// an unreachable tolerance terminates instead of bisecting exponentially.
pub(crate) fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    budget: &mut u64,
) -> (f64, f64, bool) {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
        budget: &mut u64,
    ) -> (f64, f64, bool) {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return (left + right + delta / 15.0, delta.abs() / 15.0, true);
        }
        if depth == 0 || *budget == 0 {
            return (left + right + delta / 15.0, delta.abs(), false);
        }
        *budget -= 1;
        let (v1, e1, k1) = recurse(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1, budget);
        let (v2, e2, k2) = recurse(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1, budget);
        (v1 + v2, e1 + e2, k1 && k2)
    }
    if a == b {
        return (0.0, 0.0, true);
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, depth, budget)
}

/// Kronecker symbol (a | n), the fully extended Jacobi symbol.
pub fn kronecker_symbol(a: i64, n: i64) -> i64 {
    if n == 0 {
        return if a.abs() == 1 { 1 } else { 0 };
    }
    let mut a = a;
    let mut n = n;
    let mut result = 1i64;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut twos = 0;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            result = -result;
        }
    }
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n.rem_euclid(8), 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.rem_euclid(4) == 3 && n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = a.rem_euclid(n);
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// ε_d for odd d: 1 when d ≡ 1 (mod 4), i when d ≡ 3 (mod 4).
pub fn eps_d(d: i64) -> Complex64 {
    match d.rem_euclid(4) {
        1 => Complex64::new(1.0, 0.0),
        3 => Complex64::new(0.0, 1.0),
        _ => panic!("eps_d needs odd d, got {d}"),
    }
}
