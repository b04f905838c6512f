//! Numerical differential operators on the upper half-plane: Wirtinger
//! derivatives, the weight-κ ξ operator and hyperbolic Laplacian, raising
//! operators, contour (Cauchy) derivatives for holomorphic integrands, and
//! the Bol-type identities that connect power-of-D derivatives to raised
//! weights.

use crate::error::{Error, Result};
use crate::qforms::{self, component_signature_in, signature_hash, Params, QForm};
use crate::series::cpow;
use crate::special::{factorial, log_ratio};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Stencil and contour settings for the operators in this module.
#[derive(Debug, Clone)]
pub struct DiffSpec {
    /// Central-difference half-step.
    pub step: f64,
    /// Derivative order (contour formulas).
    pub order: usize,
    /// Contour radius for Cauchy derivatives; must stay inside H.
    pub contour_radius: f64,
    /// When set, refuse stencils that straddle the exceptional set E_D of
    /// these parameters (the target function jumps there, so one-sided
    /// differences would be garbage).
    pub guard: Option<Params>,
}

impl Default for DiffSpec {
    fn default() -> Self {
        DiffSpec { step: 1e-4, order: 1, contour_radius: 0.25, guard: None }
    }
}

impl DiffSpec {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_guard(mut self, params: Params) -> Self {
        self.guard = Some(params);
        self
    }
}

fn guard_stencil(spec: &DiffSpec, points: &[Complex64]) -> Result<()> {
    let Some(params) = &spec.guard else { return Ok(()) };
    let strip_center = points[0].re.round();
    let mut hash = None;
    for &p in points {
        let sig = component_signature_in(params, p, strip_center, 1.0, 0.05)?;
        let h = signature_hash(&sig);
        match hash {
            None => hash = Some(h),
            Some(h0) if h0 != h => {
                return Err(Error::Domain(format!(
                    "difference stencil at {p} straddles the exceptional set"
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Central-difference Wirtinger pair (∂_τ f, ∂_τ̄ f).
pub fn wirtinger<F>(f: &F, tau: Complex64, spec: &DiffSpec) -> Result<(Complex64, Complex64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = spec.step;
    let (e1, ei) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    guard_stencil(spec, &[tau, tau + e1, tau - e1, tau + ei, tau - ei])?;
    let fu = (f(tau + e1)? - f(tau - e1)?) / (2.0 * h);
    let fv = (f(tau + ei)? - f(tau - ei)?) / (2.0 * h);
    let i = Complex64::new(0.0, 1.0);
    Ok((0.5 * (fu - i * fv), 0.5 * (fu + i * fv)))
}

/// ξ_κ f = 2i v^κ conj(∂_τ̄ f): sends weight κ to weight 2−κ and kills
/// holomorphic functions.
pub fn xi_apply<F>(f: &F, kappa: f64, tau: Complex64, spec: &DiffSpec) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let (_, dbar) = wirtinger(f, tau, spec)?;
    Ok(2.0 * Complex64::new(0.0, 1.0) * tau.im.powf(kappa) * dbar.conj())
}

/// Weight-κ hyperbolic Laplacian Δ_κ = −v²(∂_u² + ∂_v²) + iκv(∂_u + i∂_v)
/// on a 5-point stencil. Equals −ξ_{2−κ}∘ξ_κ.
pub fn laplacian_residual<F>(f: &F, kappa: f64, tau: Complex64, spec: &DiffSpec) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let h = spec.step;
    let (e1, ei) = (Complex64::new(h, 0.0), Complex64::new(0.0, h));
    guard_stencil(spec, &[tau, tau + e1, tau - e1, tau + ei, tau - ei])?;
    let fc = f(tau)?;
    let (fr, fl) = (f(tau + e1)?, f(tau - e1)?);
    let (ft, fb) = (f(tau + ei)?, f(tau - ei)?);
    let h2 = h * h;
    let fuu = (fr - 2.0 * fc + fl) / h2;
    let fvv = (ft - 2.0 * fc + fb) / h2;
    let fu = (fr - fl) / (2.0 * h);
    let fv = (ft - fb) / (2.0 * h);
    let v = tau.im;
    let i = Complex64::new(0.0, 1.0);
    Ok(-v * v * (fuu + fvv) + i * kappa * v * (fu + i * fv))
}

/// Maass raising operator R_κ = 2i∂_τ + κ/v.
pub fn raising_apply<F>(f: &F, kappa: f64, tau: Complex64, spec: &DiffSpec) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let (d, _) = wirtinger(f, tau, spec)?;
    Ok(2.0 * Complex64::new(0.0, 1.0) * d + kappa / tau.im * f(tau)?)
}

/// Order-m derivative of a holomorphic function by the Cauchy integral on a
/// circle of the given radius, discretized with 64(m+1) trapezoid nodes.
/// The circle must stay inside the upper half-plane.
pub fn cauchy_deriv<F>(f: &F, tau: Complex64, order: usize, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    qforms::require_upper(tau)?;
    if !(radius > 0.0) || radius >= tau.im {
        return Err(Error::InvalidParams(format!(
            "contour radius {radius} must lie in (0, Im τ = {})",
            tau.im
        )));
    }
    let n = 64 * (order + 1);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let th = 2.0 * PI * j as f64 / n as f64;
        let e = Complex64::from_polar(1.0, th);
        let fm = f(tau + radius * e)?;
        acc += fm * Complex64::from_polar(1.0, -(order as f64) * th);
    }
    Ok(acc * factorial(order as u32) / (n as f64 * radius.powi(order as i32)))
}

/// 𝔻 = (1/2πi) ∂_τ, iterated via the contour derivative.
pub fn d_operator_pow<F>(f: &F, tau: Complex64, power: usize, radius: f64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let d = cauchy_deriv(f, tau, power, radius)?;
    Ok(d * cpow(Complex64::new(0.0, -1.0) / (2.0 * PI), power as u32))
}

/// Relative residual of the per-term Bol evaluation: for a single form Q with
/// root pair α^∓ and n ≥ 1,
///   𝔻^{2n−1}[ Log((τ−α⁻)/(τ−α⁺)) Q(τ,1)^{n−1} ]
///     = i (2π)^{1−2n} ((n−1)!)² D^{n−½} / Q(τ,1)^n .
/// The left side is a (2n−1)-st contour derivative of a function holomorphic
/// on all of H (the root segment lies on ℝ).
pub fn bol_term_check(params: &Params, q: &QForm, n: u32, tau: Complex64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParams("per-term derivative order needs n ≥ 1".into()));
    }
    if q.disc() != params.d {
        return Err(Error::InvalidParams(format!(
            "form {q:?} has discriminant {}, parameters say {}",
            q.disc(),
            params.d
        )));
    }
    qforms::require_upper(tau)?;
    let (am, ap) = q.roots();
    let g = move |z: Complex64| -> Result<Complex64> {
        Ok(log_ratio(z, am, ap)? * cpow(q.value(z), n - 1))
    };
    let radius = (0.5 * tau.im).min(2.0);
    let lhs = d_operator_pow(&g, tau, 2 * n as usize - 1, radius)?;
    let c = factorial(n - 1);
    let rhs = Complex64::new(0.0, 1.0) * (2.0 * PI).powi(1 - 2 * n as i32) * c * c
        * (params.d as f64).powf(n as f64 - 0.5)
        / cpow(q.value(tau), n);
    Ok((lhs - rhs).norm() / rhs.norm())
}

/// Relative residual of the weight-raising form of Bol's identity
///   (−4π)^{ℓ−1} 𝔻^{ℓ−1} = R_{2−ℓ}^{ℓ−1}  (R_κ^m = R_{κ+2(m−1)} ∘ ⋯ ∘ R_κ),
/// applied to a holomorphic f. Nested one-sided stencils lose a digit per
/// level, so only ℓ ≤ 3 (two raising levels) is supported; steps are
/// 1e−3 outer, 1e−5 inner.
pub fn bol_identity_residual<F>(f: &F, ell: usize, tau: Complex64) -> Result<f64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    if !(2..=3).contains(&ell) {
        return Err(Error::InvalidParams(
            "weight-raising residual is supported for ℓ ∈ {2, 3} only".into(),
        ));
    }
    let m = ell - 1;
    let radius = (0.5 * tau.im).min(2.0);
    let lhs = d_operator_pow(f, tau, m, radius)? * (-4.0 * PI).powi(m as i32);
    let kappa0 = 2.0 - ell as f64;
    let rhs = if m == 1 {
        raising_apply(f, kappa0, tau, &DiffSpec::default().with_step(1e-5))?
    } else {
        let inner = |z: Complex64| raising_apply(f, kappa0, z, &DiffSpec::default().with_step(1e-5));
        raising_apply(&inner, kappa0 + 2.0, tau, &DiffSpec::default().with_step(1e-3))?
    };
    let scale = lhs.norm().max(rhs.norm());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((lhs - rhs).norm() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_tau(z: Complex64) -> Result<Complex64> {
        Ok((2.0 * PI * Complex64::new(0.0, 1.0) * z).exp())
    }

    #[test]
    fn wirtinger_on_holomorphic_and_antiholomorphic() {
        let tau = Complex64::new(0.3, 1.4);
        let spec = DiffSpec::default();
        let (d, dbar) = wirtinger(&exp_tau, tau, &spec).unwrap();
        let want = 2.0 * PI * Complex64::new(0.0, 1.0) * exp_tau(tau).unwrap();
        assert!((d - want).norm() < 1e-7);
        assert!(dbar.norm() < 1e-9, "holomorphic function has ∂_τ̄ = 0");

        let g = |z: Complex64| -> Result<Complex64> { Ok(z.conj() * z.conj()) };
        let (d2, dbar2) = wirtinger(&g, tau, &spec).unwrap();
        assert!(d2.norm() < 1e-9);
        assert!((dbar2 - 2.0 * tau.conj()).norm() < 1e-8);
    }

    #[test]
    fn xi_on_power_of_v_is_constant() {
        // ξ_κ v^{1−κ} = 1 − κ
        let tau = Complex64::new(-0.2, 0.9);
        for &kappa in &[-4.0, -1.0, 0.5, 2.0] {
            let f = move |z: Complex64| -> Result<Complex64> {
                Ok(Complex64::new(z.im.powf(1.0 - kappa), 0.0))
            };
            let x = xi_apply(&f, kappa, tau, &DiffSpec::default()).unwrap();
            assert!(
                (x - Complex64::new(1.0 - kappa, 0.0)).norm() < 1e-6,
                "kappa={kappa}: got {x}"
            );
        }
    }

    #[test]
    fn laplacian_eigenvalue_on_power_of_v() {
        // Δ_κ v^s = −s(s − 1 + κ) v^s
        let (s, kappa) = (0.3, -4.0);
        let tau = Complex64::new(0.1, 1.3);
        let f = move |z: Complex64| -> Result<Complex64> { Ok(Complex64::new(z.im.powf(s), 0.0)) };
        let got = laplacian_residual(&f, kappa, tau, &DiffSpec::default().with_step(2e-3)).unwrap();
        let want = -s * (s - 1.0 + kappa) * tau.im.powf(s);
        assert!((got - Complex64::new(want, 0.0)).norm() < 1e-5, "got {got}, want {want}");
    }

    #[test]
    fn contour_derivatives_match_closed_forms() {
        let tau = Complex64::new(0.25, 1.1);
        let two_pi_i = 2.0 * PI * Complex64::new(0.0, 1.0);
        for order in 1..=5 {
            let d = cauchy_deriv(&exp_tau, tau, order, 0.5).unwrap();
            let want = cpow(two_pi_i, order as u32) * exp_tau(tau).unwrap();
            assert!(
                (d - want).norm() / want.norm() < 1e-12,
                "order {order}: rel err {}",
                (d - want).norm() / want.norm()
            );
        }
        // 𝔻 e^{2πiτ} = e^{2πiτ}
        let d = d_operator_pow(&exp_tau, tau, 3, 0.5).unwrap();
        assert!((d - exp_tau(tau).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn contour_radius_must_stay_in_upper_half_plane() {
        let tau = Complex64::new(0.0, 0.4);
        assert!(cauchy_deriv(&exp_tau, tau, 1, 0.5).is_err());
        assert!(cauchy_deriv(&exp_tau, tau, 1, 0.3).is_ok());
    }

    #[test]
    fn guard_refuses_stencils_straddling_walls() {
        let params = Params::new(5, 2).unwrap();
        let f = |_z: Complex64| -> Result<Complex64> { Ok(Complex64::new(0.0, 0.0)) };
        // v = 1 at u = 0 lies on the geodesic of [1, 0, −1]
        let spec = DiffSpec::default().with_step(1e-2).with_guard(params);
        let err = wirtinger(&f, Complex64::new(0.0, 1.005), &spec);
        assert!(matches!(err, Err(Error::Domain(_))), "stencil crosses the wall: {err:?}");
        assert!(wirtinger(&f, Complex64::new(0.0, 1.2), &spec).is_ok());
    }

    #[test]
    fn raising_operator_on_exponential() {
        // R_κ e^{2πiτ} = (−4π + κ/v) e^{2πiτ}
        let tau = Complex64::new(0.1, 0.9);
        let kappa = -1.0;
        let r = raising_apply(&exp_tau, kappa, tau, &DiffSpec::default()).unwrap();
        let want = (Complex64::new(-4.0 * PI + kappa / tau.im, 0.0)) * exp_tau(tau).unwrap();
        assert!((r - want).norm() / want.norm() < 1e-7);
    }

    #[test]
    fn bol_identity_on_exponential() {
        let tau = Complex64::new(0.2, 1.5);
        for ell in 2..=3 {
            let r = bol_identity_residual(&exp_tau, ell, tau).unwrap();
            assert!(r < 1e-6, "ℓ={ell}: residual {r:.3e}");
        }
        assert!(bol_identity_residual(&exp_tau, 4, tau).is_err());
    }

    #[test]
    fn bol_per_term_low_order() {
        let params = Params::new(5, 2).unwrap();
        let q = QForm::new(1, 1, -1);
        let tau = Complex64::new(0.3, 2.0);
        let r = bol_term_check(&params, &q, 1, tau).unwrap();
        assert!(r < 1e-10, "n=1 residual {r:.3e}");
        let wrong_disc = QForm::new(1, 0, -2); // discriminant 8
        assert!(bol_term_check(&params, &wrong_disc, 1, tau).is_err());
    }
}
