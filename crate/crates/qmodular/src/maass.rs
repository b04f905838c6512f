//! The negative-weight layer: the locally harmonic completion Ψ of weight
//! −2k, holomorphic and non-holomorphic Eichler integrals of the local cusp
//! form Λ, the constant term c∞, and the splitting residual that ties all
//! four together.

use crate::error::{Error, Result};
use crate::qforms::{self, crossing_heights, distance_to_exceptional, enumerate_forms, forms_vanishing_at, Params, QForm};
use crate::series::{cpow, eval_lambda_local, lambda_over, Kahan, SeriesValue, TruncationPolicy};
use crate::special::{beta_inc_half, factorial};
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

/// Vertical integration path from a base point to the truncation height,
/// split at every geodesic crossing (the integrand jumps there) and at the
/// apex ceiling √D/2.
#[derive(Debug, Clone)]
pub struct QuadraturePath {
    pub base_u: f64,
    pub base_v: f64,
    pub v_max: f64,
    /// Disjoint increasing intervals covering [base_v, v_max].
    pub segments: Vec<(f64, f64)>,
    pub node_budget: usize,
}

impl QuadraturePath {
    /// Path from τ straight up, truncated where a weight-(2k+2) cusp form has
    /// decayed by 10⁻¹² relative to the apex ceiling.
    pub fn vertical(params: &Params, tau: Complex64, node_budget: usize) -> Result<Self> {
        qforms::require_upper(tau)?;
        let v = tau.im;
        let v_max = params.max_apex().max(v) + 12.0 / (2.0 * PI) * 10f64.ln();
        let mut cuts: Vec<f64> = crossing_heights(params, tau.re, v * (1.0 + 1e-12) + 1e-300, v_max)?
            .into_iter()
            .map(|(h, _)| h)
            .collect();
        let apex = params.max_apex();
        if apex > v && apex < v_max && cuts.iter().all(|&c| (c - apex).abs() > 1e-12) {
            cuts.push(apex);
        }
        cuts.sort_by(f64::total_cmp);
        let mut segments = Vec::with_capacity(cuts.len() + 1);
        let mut lo = v;
        for c in cuts {
            segments.push((lo, c));
            lo = c;
        }
        segments.push((lo, v_max));
        Ok(QuadraturePath { base_u: tau.re, base_v: v, v_max, segments, node_budget })
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton on the recurrence;
/// cheap enough to recompute per call).
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..60 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        xs[i] = x;
        ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for m in 2..=n {
        let mf = m as f64;
        let p2 = ((2.0 * mf - 1.0) * x * p1 - (mf - 1.0) * p0) / mf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Ψ(τ) = ½ Σ_Q Q(τ,1)^k β(Dv²/|Q(τ,1)|²; k+½, ½): a locally harmonic
/// completion of weight −2k. The sum diverges on E_D, so evaluation within
/// 1e−6 of a geodesic is refused.
///
/// The |a|-truncation is driven by the absolute target: far shells contribute
/// like the tail of the constant-term series, so the bound is raised to
/// (4·pref/((k−½)·tol))^{1/(k−½)} when the policy's own bound is smaller.
pub fn eval_psi_maass(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    let dist = distance_to_exceptional(params, tau, 1e-3);
    if dist < 1e-6 {
        return Err(Error::OnExceptionalSet { distance: dist });
    }
    let bound = policy.bound_a.max(shell_bound_est(params, policy.target_tol).min(32_000));
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, bound, &window);
    let dv2 = params.d as f64 * tau.im * tau.im;
    let k = params.k;

    let mut acc = Kahan::default();
    let mut half_snapshot = Kahan::default();
    let mut snapped = false;
    let half = i64::from(bound / 2);
    for q in &forms {
        if !snapped && q.a.abs() > half {
            half_snapshot = acc;
            snapped = true;
        }
        let qv = q.value(tau);
        let x = (dv2 / qv.norm_sqr()).min(1.0);
        acc.add(0.5 * cpow(qv, k) * beta_inc_half(x, k)?);
    }
    if !snapped {
        half_snapshot = acc;
    }
    let doubling = (acc.value() - half_snapshot.value()).norm();
    Ok(SeriesValue {
        value: acc.value(),
        est_error: doubling + policy.tail_model(params, tau.im, &window) + shell_tail_est(params, bound),
        terms_used: forms.len(),
    })
}

/// The form list eval_psi_maass would use anywhere within `margin` of
/// `center` (window widened accordingly). Differentiation stencils must pin
/// one list across all their evaluations: otherwise forms enter and leave
/// the truncation edge between nearby points, and those jumps — far below
/// the value's own accuracy — dominate a second difference after the 1/h²
/// amplification.
pub fn psi_shell_forms(
    params: &Params,
    center: Complex64,
    margin: f64,
    policy: &TruncationPolicy,
) -> Result<Vec<QForm>> {
    qforms::require_upper(center)?;
    let bound = policy.bound_a.max(shell_bound_est(params, policy.target_tol).min(32_000));
    let base = policy.window_for(params, center.re, center.im + margin);
    let window =
        qforms::EnumWindow::new(base.u_center, base.u_halfwidth + margin, base.v_max + margin);
    Ok(enumerate_forms(params, bound, &window))
}

/// Ψ over an explicit form list: a plain fixed-truncation sum with no
/// refusal guard and no error model — the caller owns both (see
/// psi_shell_forms).
pub fn eval_psi_maass_over(params: &Params, forms: &[QForm], tau: Complex64) -> Result<Complex64> {
    let dv2 = params.d as f64 * tau.im * tau.im;
    let k = params.k;
    let mut acc = Kahan::default();
    for q in forms {
        let qv = q.value(tau);
        let x = (dv2 / qv.norm_sqr()).min(1.0);
        acc.add(0.5 * cpow(qv, k) * beta_inc_half(x, k)?);
    }
    Ok(acc.value())
}

/// Prefactor π D^{k+½} / (4^k (2k+1)) shared by the constant-term series and
/// the far-shell estimate of Ψ.
fn shell_prefactor(params: &Params) -> f64 {
    PI * (params.d as f64).powf(params.k as f64 + 0.5)
        / (4f64.powi(params.k as i32) * (2.0 * params.k as f64 + 1.0))
}

/// Crude far-shell tail bound: Σ_{a>A} r(a)/a^{k+1} with r(a) ≤ 4√a.
fn shell_tail(params: &Params, bound: u32) -> f64 {
    let km = params.k as f64 - 0.5;
    4.0 * shell_prefactor(params) * (bound as f64).powf(-km) / km
}

/// Smallest A with shell_tail(A) below tol.
fn shell_bound(params: &Params, tol: f64) -> u32 {
    let km = params.k as f64 - 0.5;
    (4.0 * shell_prefactor(params) / (km * tol)).powf(1.0 / km).ceil() as u32
}

/// Average residue density used for *estimates*: r(a) averages to an O(1)
/// constant over a (a special-value density), so 1.5 is a safe working
/// figure; the doubling check backstops it empirically.
const SHELL_R_AVG: f64 = 1.5;

/// Far-shell tail estimate with the average density (not a bound).
fn shell_tail_est(params: &Params, bound: u32) -> f64 {
    let k = params.k as f64;
    SHELL_R_AVG * shell_prefactor(params) * (bound as f64).powf(-k) / k
}

/// Smallest A with shell_tail_est(A) below tol.
fn shell_bound_est(params: &Params, tol: f64) -> u32 {
    let k = params.k as f64;
    (SHELL_R_AVG * shell_prefactor(params) / (k * tol)).powf(1.0 / k).ceil() as u32
}

#[derive(Debug, Clone, Copy)]
enum EichlerKind {
    Holomorphic,
    NonHolomorphic,
}

/// E_Λ(τ) = (2π)^{2k+1}/(2k)! · ∫_v^∞ Λ(u+it) (t−v)^{2k} dt, the holomorphic
/// Eichler integral of Λ along the vertical path (the prefactor is
/// −(2πi)^{2k+1}/(2k)! with the path direction folded in).
pub fn eichler_hol(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    eichler_integral(params, tau, policy, 32, EichlerKind::Holomorphic)
}

/// Λ*(τ) = −2^{−(2k+1)} ∫_v^∞ conj(Λ(u+it)) (t+v)^{2k} dt, the
/// non-holomorphic Eichler integral, normalized so that ξ_{−2k}Λ* = +Λ.
/// (The textbook reduction of (2i)^{−2k−1}∫_{−τ̄}^{i∞} conj(Λ(−w̄))(w+τ)^{2k}dw
/// to this axis gives the opposite sign, which makes ξ land on −Λ and the
/// splitting identity fail; the sign here is fixed by the ξ requirement.)
pub fn eichler_nonhol(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    eichler_integral(params, tau, policy, 32, EichlerKind::NonHolomorphic)
}

/// Same integrals under an explicit node budget (refinement oracle).
pub fn eichler_hol_budget(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
    budget: usize,
) -> Result<SeriesValue> {
    eichler_integral(params, tau, policy, budget, EichlerKind::Holomorphic)
}

pub fn eichler_nonhol_budget(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
    budget: usize,
) -> Result<SeriesValue> {
    eichler_integral(params, tau, policy, budget, EichlerKind::NonHolomorphic)
}

fn eichler_integral(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
    budget: usize,
    kind: EichlerKind,
) -> Result<SeriesValue> {
    let path = QuadraturePath::vertical(params, tau, budget)?;
    let (u, v) = (path.base_u, path.base_v);
    let k2 = 2 * params.k;
    let kernel = |t: f64| match kind {
        EichlerKind::Holomorphic => (t - v).powi(k2 as i32),
        EichlerKind::NonHolomorphic => (t + v).powi(k2 as i32),
    };

    let mut full = Complex64::new(0.0, 0.0);
    let mut coarse = Complex64::new(0.0, 0.0);
    let mut terms = 0usize;
    let mut top_forms: Vec<QForm> = Vec::new();
    for &(lo, hi) in &path.segments {
        let window = policy.window_for(params, u, hi);
        let forms = enumerate_forms(params, policy.bound_a, &window);
        terms += forms.len();
        let seg = |n: usize| {
            let (xs, ws) = gauss_legendre(n);
            let (mid, rad) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mut s = Complex64::new(0.0, 0.0);
            for (x, w) in xs.iter().zip(&ws) {
                let t = mid + rad * x;
                let lam = lambda_over(params, &forms, Complex64::new(u, t));
                let lam = match kind {
                    EichlerKind::Holomorphic => lam,
                    EichlerKind::NonHolomorphic => lam.conj(),
                };
                s += *w * lam * kernel(t);
            }
            s * rad
        };
        full += seg(budget);
        coarse += seg(budget / 2);
        top_forms = forms;
    }
    // one-term exponential tail estimate above v_max (Λ decays like e^{−2πt})
    let lam_top = lambda_over(params, &top_forms, Complex64::new(u, path.v_max));
    let tail = lam_top.norm() * kernel(path.v_max) / (2.0 * PI);

    let scale = match kind {
        EichlerKind::Holomorphic => {
            Complex64::new((2.0 * PI).powi(k2 as i32 + 1) / factorial(k2), 0.0)
        }
        EichlerKind::NonHolomorphic => Complex64::new(-0.5f64.powi(k2 as i32 + 1), 0.0),
    };
    Ok(SeriesValue {
        value: scale * full,
        est_error: scale.norm() * ((full - coarse).norm() + tail),
        terms_used: terms,
    })
}

/// Direct summation of the constant term
/// c∞ = π D^{k+½}/(4^k(2k+1)) · Σ_{a≥1} r(a) a^{−(k+1)},
/// r(a) = #{b mod 4a : b² ≡ D mod 4a}, with a crude r(a) ≤ 4√a tail bound.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CInfinity {
    pub value: f64,
    pub tail_bound: f64,
    pub bound_a: u32,
}

pub fn c_infinity(params: &Params, tol: f64) -> Result<CInfinity> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance {tol} must be positive")));
    }
    let bound = shell_bound(params, tol).max(16);
    let pref = shell_prefactor(params);
    let mut sum = 0.0;
    for a in 1..=i64::from(bound) {
        let r = qforms::b_residues(params.d, a).len() as f64;
        if r > 0.0 {
            sum += r / (a as f64).powi(params.k as i32 + 1);
        }
    }
    Ok(CInfinity { value: pref * sum, tail_bound: shell_tail(params, bound), bound_a: bound })
}

/// All five quantities of the splitting identity
/// Ψ = c∞ − D^{k+½}(2k)!/(4π)^{2k+1} · E_Λ + D^{k+½} · Λ*
/// and the residual of the assembled right-hand side.
#[derive(Debug, Clone, Copy)]
pub struct SplitReport {
    pub psi_value: Complex64,
    pub c_inf: f64,
    pub eichler_hol: Complex64,
    pub eichler_nonhol: Complex64,
    pub residual: f64,
}

impl Serialize for SplitReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SplitReport", 5)?;
        st.serialize_field("psi_value", &[self.psi_value.re, self.psi_value.im])?;
        st.serialize_field("c_inf", &self.c_inf)?;
        st.serialize_field("eichler_hol", &[self.eichler_hol.re, self.eichler_hol.im])?;
        st.serialize_field("eichler_nonhol", &[self.eichler_nonhol.re, self.eichler_nonhol.im])?;
        st.serialize_field("residual", &self.residual)?;
        st.end()
    }
}

pub fn split_constants(params: &Params) -> (f64, f64) {
    let k2 = 2 * params.k;
    let dk = (params.d as f64).powf(params.k as f64 + 0.5);
    (dk * factorial(k2) / (4.0 * PI).powi(k2 as i32 + 1), dk)
}

pub fn split_residual(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SplitReport> {
    let ci = c_infinity(params, policy.target_tol.max(1e-6))?;
    split_residual_with_cinf(params, tau, policy, ci.value)
}

pub fn split_residual_with_cinf(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
    c_inf: f64,
) -> Result<SplitReport> {
    let lambda_policy = policy.with_bound(policy.bound_a.max(192));
    let psi = eval_psi_maass(params, tau, policy)?;
    let eh = eichler_hol(params, tau, &lambda_policy)?;
    let en = eichler_nonhol(params, tau, &lambda_policy)?;
    let (c1, c2) = split_constants(params);
    let rhs = c_inf - c1 * eh.value + c2 * en.value;
    Ok(SplitReport {
        psi_value: psi.value,
        c_inf,
        eichler_hol: eh.value,
        eichler_nonhol: en.value,
        residual: (psi.value - rhs).norm(),
    })
}

/// Prop-style jump of Λ across E_D at p: 2 Σ_{Q_p = 0} sgn(Q)/Q(p,1)^{k+1}.
pub fn lambda_jump_prediction(params: &Params, p: Complex64) -> Result<Complex64> {
    let forms = forms_vanishing_at(params, p, 1e-9)?;
    let n = params.exponent();
    let mut s = Complex64::new(0.0, 0.0);
    for q in &forms {
        s += q.sign() as f64 / cpow(q.value(p), n);
    }
    Ok(2.0 * s)
}

/// Jump of ∂_τ̄Ψ across E_D at p:
/// i D^{k+½} v^{2k} Σ_{Q_p = 0} sgn(Q)/Q(p̄,1)^{k+1}.
pub fn psi_dbar_jump_prediction(params: &Params, p: Complex64) -> Result<Complex64> {
    let forms = forms_vanishing_at(params, p, 1e-9)?;
    let n = params.exponent();
    let mut s = Complex64::new(0.0, 0.0);
    for q in &forms {
        s += q.sign() as f64 / cpow(q.value(p.conj()), n);
    }
    let dk = (params.d as f64).powf(params.k as f64 + 0.5);
    Ok(Complex64::new(0.0, 1.0) * dk * p.im.powi(2 * params.k as i32) * s)
}

/// Λ evaluated with the same near-wall conventions as the library entry
/// point; re-exported here because every object in this module consumes it.
pub fn eval_lambda(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    eval_lambda_local(params, tau, policy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d5() -> Params {
        Params::new(5, 2).unwrap()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (xs, ws) = gauss_legendre(8);
        // degree ≤ 15 exact: ∫_{-1}^{1} x^14 dx = 2/15
        let s: f64 = xs.iter().zip(&ws).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let s: f64 = ws.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn path_splits_at_crossing() {
        let p = d5();
        let path = QuadraturePath::vertical(&p, Complex64::new(0.0, 0.8), 32).unwrap();
        assert!(
            path.segments.iter().any(|&(lo, _)| (lo - 1.0).abs() < 1e-9),
            "expected a segment boundary at v=1, got {:?}",
            path.segments
        );
        // apex ceiling is also a boundary
        assert!(path.segments.iter().any(|&(lo, _)| (lo - p.max_apex()).abs() < 1e-9));
        // contiguous cover
        for w in path.segments.windows(2) {
            assert!((w[0].1 - w[1].0).abs() < 1e-12);
        }
        assert!((path.segments[0].0 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn c_infinity_frozen_value() {
        let p = d5();
        let ci = c_infinity(&p, 1e-3).unwrap();
        assert!(
            (ci.value - 4.434550288449671).abs() < 1e-3,
            "c_inf = {} (bound {})",
            ci.value,
            ci.bound_a
        );
        assert!(ci.tail_bound <= 1e-3);
    }

    #[test]
    fn split_constants_product_identity() {
        // c1 · (2π)^{2k+1}/(2k)! = D^{k+1/2}/2^{2k+1} = c2/2^{2k+1}
        let p = d5();
        let (c1, c2) = split_constants(&p);
        let ce = (2.0 * PI).powi(5) / factorial(4);
        assert!((c1 * ce - c2 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn psi_refuses_exceptional_points() {
        let p = d5();
        let policy = TruncationPolicy::with_tol(1e-3);
        assert!(matches!(
            eval_psi_maass(&p, Complex64::new(0.0, 1.0), &policy),
            Err(Error::OnExceptionalSet { .. })
        ));
        assert!(eval_psi_maass(&p, Complex64::new(0.0, 1.05), &policy).is_ok());
    }

    #[test]
    fn jump_predictions_exact_values() {
        let p = d5();
        let apex = Complex64::new(-0.5, 5f64.sqrt() / 2.0);
        let j = lambda_jump_prediction(&p, apex).unwrap();
        assert!((j - Complex64::new(-32.0 / 125.0, 0.0)).norm() < 1e-12);
        let j_i = lambda_jump_prediction(&p, Complex64::new(0.0, 1.0)).unwrap();
        assert!((j_i - Complex64::new(-16.0 / 125.0, 0.0)).norm() < 1e-12);
        let dj = psi_dbar_jump_prediction(&p, apex).unwrap();
        let want = Complex64::new(0.0, -(5f64).powf(1.5));
        assert!((dj - want).norm() < 1e-9, "got {dj}, want {want}");
    }
}
