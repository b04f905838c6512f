//! Truncated lattice sums over forms of one discriminant: the cusp-like
//! series f, the log-weighted series ψ, the one-sided series φ, the
//! two-variable series ρ and λ, their bimodular combination Ω, the
//! two-upper-variable variant ω, and the sign-weighted local cusp form Λ.
//!
//! Every evaluator sums over a deterministic window (ordered by (|a|, a, b)),
//! reports a doubling-based error estimate plus a heuristic b-tail model, and
//! never reorders floating-point accumulation.

use crate::error::Result;
use crate::qforms::{
    self, distance_to_exceptional, enumerate_forms, EnumWindow, Params, QForm,
};
use crate::special::log_upper;
use num_complex::Complex64;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;

/// z^n by binary exponentiation (exact operation count, no exp/log).
pub(crate) fn cpow(z: Complex64, n: u32) -> Complex64 {
    let mut base = z;
    let mut n = n;
    let mut acc = Complex64::new(1.0, 0.0);
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// Compensated (Kahan) accumulator for complex sums with heavy cancellation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: Complex64,
    comp: Complex64,
}

impl Kahan {
    pub fn add(&mut self, x: Complex64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> Complex64 {
        self.sum
    }
}

/// How much of the infinite form set a series evaluation uses, and what it
/// promises about the discarded tail.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TruncationPolicy {
    /// Leading-coefficient bound A; the sum runs over 0 < |a| ≤ A.
    pub bound_a: u32,
    /// Estimate the error as |S(A) − S(A/2)| (one pass, snapshotted).
    pub doubling_check: bool,
    /// Accuracy goal; drives the default b-window width.
    pub target_tol: f64,
    /// Optional override of the u-window half-width.
    pub u_halfwidth: Option<f64>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { bound_a: 64, doubling_check: true, target_tol: 1e-8, u_halfwidth: None }
    }
}

impl TruncationPolicy {
    pub fn with_tol(tol: f64) -> Self {
        TruncationPolicy { target_tol: tol, ..Default::default() }
    }

    pub fn with_bound(mut self, bound_a: u32) -> Self {
        self.bound_a = bound_a;
        self
    }

    pub fn with_u_halfwidth(mut self, hw: f64) -> Self {
        self.u_halfwidth = Some(hw);
        self
    }

    /// b-window half-width in root units: terms from forms whose roots sit
    /// β away from u (in units of v) decay like β^{−(2k+1)}, so β_max is
    /// sized to push the modeled tail below target_tol.
    fn beta_max(&self, params: &Params) -> f64 {
        (0.8 / self.target_tol).powf(1.0 / (2.0 * params.k as f64 + 1.0))
    }

    pub(crate) fn window_for(&self, params: &Params, u_center: f64, v: f64) -> EnumWindow {
        let hw = self
            .u_halfwidth
            .unwrap_or_else(|| (1.3 * v.abs() * self.beta_max(params)).max(1.0));
        EnumWindow::new(u_center, hw, v.abs().max(0.1))
    }

    /// Heuristic bound on the discarded b-tail; equals target_tol at the
    /// default window, scales like (width)^{−(2k+1)} under overrides.
    pub(crate) fn tail_model(&self, params: &Params, v: f64, window: &EnumWindow) -> f64 {
        let beta_eff = window.u_halfwidth / (1.3 * v.abs().max(0.1));
        0.8 * beta_eff.powf(-(2.0 * params.k as f64 + 1.0))
    }
}

/// A truncated series value with its error bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub est_error: f64,
    pub terms_used: usize,
}

impl Serialize for SeriesValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SeriesValue", 3)?;
        st.serialize_field("value", &[self.value.re, self.value.im])?;
        st.serialize_field("est_error", &self.est_error)?;
        st.serialize_field("terms_used", &self.terms_used)?;
        st.end()
    }
}

/// One compensated pass over the window in enumeration order, with a
/// snapshot at |a| ≤ A/2 so the doubling estimate costs nothing extra.
/// `term` returns None for forms the series skips (e.g. a < 0 for φ).
fn sum_over(
    params: &Params,
    policy: &TruncationPolicy,
    u_center: f64,
    v_scale: f64,
    term: impl Fn(&QForm) -> Option<Complex64>,
) -> SeriesValue {
    let window = policy.window_for(params, u_center, v_scale);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let half = i64::from(policy.bound_a / 2);
    let mut acc = Kahan::default();
    let mut half_snapshot = Kahan::default();
    let mut snapped = false;
    let mut used = 0usize;
    for q in &forms {
        if !snapped && q.a.abs() > half {
            half_snapshot = acc;
            snapped = true;
        }
        if let Some(t) = term(q) {
            acc.add(t);
            used += 1;
        }
    }
    if !snapped {
        half_snapshot = acc;
    }
    let doubling = if policy.doubling_check {
        (acc.value() - half_snapshot.value()).norm()
    } else {
        0.0
    };
    SeriesValue {
        value: acc.value(),
        est_error: doubling + policy.tail_model(params, v_scale, &window),
        terms_used: used,
    }
}

/// f_{κ}(τ) = Σ_Q Q(τ,1)^{−κ}; a cusp form of weight 2κ for even κ, and
/// identically zero for odd κ (the window is closed under Q ↦ −Q).
pub fn eval_f(params: &Params, kappa: u32, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        Some(1.0 / cpow(q.value(tau), kappa))
    }))
}

/// ψ(τ) = Σ_Q Log((τ−α⁻)/(τ−α⁺)) / Q(τ,1)^{k+1}: holomorphic on H, vanishes
/// at i∞, periodic, with an explicit inversion defect (see `psi_s_defect`).
pub fn eval_psi(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    let n = params.exponent();
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        let (am, ap) = q.roots();
        Some(log_upper((tau - am) / (tau - ap)) / cpow(q.value(tau), n))
    }))
}

/// φ(τ) = Σ_{a>0} Q(τ,1)^{−(k+1)}, the one-sided (rational period) series.
pub fn eval_phi(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    let n = params.exponent();
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        (q.a > 0).then(|| 1.0 / cpow(q.value(tau), n))
    }))
}

/// ρ(τ, w) = Σ_Q Log((w−α⁻)/(w−α⁺)) / Q(τ,1)^{k+1} with w in the lower
/// half-plane.
pub fn eval_rho(
    params: &Params,
    tau: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    qforms::require_lower(w)?;
    let n = params.exponent();
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        let (am, ap) = q.roots();
        Some(log_upper((w - am) / (w - ap)) / cpow(q.value(tau), n))
    }))
}

/// λ(τ, w) = 2i Σ_Q arctan(Q_w/√D) / Q(τ,1)^{k+1}; equals the wrap-free log
/// form Σ Log((1 + iQ_w/√D)/(1 − iQ_w/√D)) / Q^{k+1} identically.
pub fn eval_lambda_pair(
    params: &Params,
    tau: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    qforms::require_lower(w)?;
    let n = params.exponent();
    let sq = params.sqrt_d();
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        let qw = q.q_tau(w).ok()?;
        Some(Complex64::new(0.0, 2.0 * (qw / sq).atan()) / cpow(q.value(tau), n))
    }))
}

/// Ω(τ, w) = ψ(τ) − ρ(τ,w) + 2πiφ(τ) + λ(τ,w), fused: one window, one pass,
/// all four numerators per form, compensated accumulation. The fused pass is
/// what makes Ω(τ, τ̄) cancel to roundoff rather than to truncation level.
pub fn eval_bigomega(
    params: &Params,
    tau: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    qforms::require_lower(w)?;
    let n = params.exponent();
    let sq = params.sqrt_d();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        let (am, ap) = q.roots();
        let qw = q.q_tau(w).ok()?;
        let numer = log_upper((tau - am) / (tau - ap)) - log_upper((w - am) / (w - ap))
            + if q.a > 0 { two_pi_i } else { Complex64::new(0.0, 0.0) }
            + Complex64::new(0.0, 2.0 * (qw / sq).atan());
        Some(numer / cpow(q.value(tau), n))
    }))
}

/// ω(τ, z) = ψ(τ) − Σ_Q Log((z−α⁻)/(z−α⁺)) / Q(τ,1)^{k+1}, both arguments in
/// the upper half-plane; fused like Ω.
pub fn eval_omega(
    params: &Params,
    tau: Complex64,
    z: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    qforms::require_upper(z)?;
    let n = params.exponent();
    Ok(sum_over(params, policy, tau.re, tau.im, |q| {
        let (am, ap) = q.roots();
        let numer = log_upper((tau - am) / (tau - ap)) - log_upper((z - am) / (z - ap));
        Some(numer / cpow(q.value(tau), n))
    }))
}

/// Λ(τ) = Σ_Q sgn(Q_τ) / Q(τ,1)^{k+1}: locally constant sign weights make
/// this a cusp form on each connected component of H \ E_D, with jumps
/// across the geodesics. Within 1e−6 of E_D the two-sided average
/// ½[Λ(τ+iε) + Λ(τ−iε)] is returned via ε-extrapolation.
pub fn eval_lambda_local(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
) -> Result<SeriesValue> {
    qforms::require_upper(tau)?;
    if distance_to_exceptional(params, tau, 1e-3) < 1e-6 {
        let eps = eps_ladder();
        let mut avgs = Vec::with_capacity(eps.len());
        for &e in &eps {
            let up = lambda_raw(params, tau + Complex64::new(0.0, e), policy);
            let dn = lambda_raw(params, tau - Complex64::new(0.0, e), policy);
            avgs.push(0.5 * (up.value + dn.value));
        }
        let limit = extrapolate_to_zero(&eps[eps.len() - 4..], &avgs[avgs.len() - 4..]);
        let base = lambda_raw(params, tau, policy);
        return Ok(SeriesValue {
            value: limit,
            est_error: base.est_error + (limit - avgs[avgs.len() - 1]).norm(),
            terms_used: base.terms_used,
        });
    }
    Ok(lambda_raw(params, tau, policy))
}

fn lambda_raw(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> SeriesValue {
    let n = params.exponent();
    sum_over(params, policy, tau.re, tau.im, |q| {
        let qt = q.q_tau(tau).ok()?;
        Some(qt.signum() / cpow(q.value(tau), n))
    })
}

/// Λ over an explicit form list (used by quadrature paths, which reuse one
/// enumeration across many nodes). Plain summation in list order.
pub(crate) fn lambda_over(params: &Params, forms: &[QForm], tau: Complex64) -> Complex64 {
    let n = params.exponent();
    let mut acc = Kahan::default();
    for q in forms {
        let qt = (q.a as f64 * tau.norm_sqr() + q.b as f64 * tau.re + q.c as f64) / tau.im;
        acc.add(qt.signum() / cpow(q.value(tau), n));
    }
    acc.value()
}

/// The ε-ladder every extrapolated limit in this crate uses:
/// ε_j = 2^{−j}·10⁻², j = 0..8.
pub fn eps_ladder() -> Vec<f64> {
    (0..9).map(|j| 1e-2 * 0.5f64.powi(j)).collect()
}

/// Neville polynomial extrapolation of (x_i, y_i) to x = 0.
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut t: Vec<Complex64> = ys.to_vec();
    let n = t.len();
    for m in 1..n {
        for i in 0..n - m {
            let (xi, xim) = (xs[i], xs[i + m]);
            t[i] = (t[i + 1] * xi - t[i] * xim) / (xi - xim);
        }
    }
    t[0]
}

/// Matched-window inversion defect of ψ:
/// |τ^{−2k−2}ψ(−1/τ) − ψ(τ) − Σ log|α⁺/α⁻|/Q^{k+1} + 2πi Σ_{a<0<c} Q^{−(k+1)}|,
/// with ψ(−1/τ) summed over the S-image of the same window so the identity
/// is exact per form. This exercises the Log branch bookkeeping: the image
/// evaluation knows nothing about the correction terms.
pub fn psi_s_defect(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<f64> {
    qforms::require_upper(tau)?;
    let n = params.exponent();
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let s_inv = qforms::GLMatrix::s().inverse();
    let m_tau = -1.0 / tau;
    let weight = cpow(tau, 2 * n).finv();

    let mut lhs = Kahan::default();
    let mut rhs = Kahan::default();
    for q in &forms {
        let denom = cpow(q.value(tau), n);
        // transformed side, per-form matched via Q ↦ Q∘S⁻¹ = [c,−b,a]
        let qi = q.act(&s_inv);
        let (im, ip) = qi.roots();
        lhs.add(weight * log_upper((m_tau - im) / (m_tau - ip)) / cpow(qi.value(m_tau), n));
        // direct side
        let (am, ap) = q.roots();
        lhs.add(-log_upper((tau - am) / (tau - ap)) / denom);
        // explicit defect
        let sq = params.sqrt_d();
        let ratio = ((-q.b as f64 + sq) / (-q.b as f64 - sq)).abs().ln();
        let mut corr = Complex64::new(ratio, 0.0);
        if q.a < 0 && q.c > 0 {
            corr -= Complex64::new(0.0, 2.0 * PI);
        }
        rhs.add(corr / denom);
    }
    Ok((lhs.value() - rhs.value()).norm())
}

/// Matched-window inversion defect of φ:
/// |τ^{−2k−2}φ(−1/τ) − φ(τ) − 2 Σ_{a<0<c} Q(τ,1)^{−(k+1)}|.
pub fn phi_s_defect(params: &Params, tau: Complex64, policy: &TruncationPolicy) -> Result<f64> {
    qforms::require_upper(tau)?;
    let n = params.exponent();
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let mut acc = Kahan::default();
    for q in &forms {
        // image side picks c > 0 (a>0 after Q ↦ [c,−b,a]); direct side a > 0
        let mut coeff = 0.0;
        if q.c > 0 {
            coeff += 1.0;
        }
        if q.a > 0 {
            coeff -= 1.0;
        }
        if q.a < 0 && q.c > 0 {
            coeff -= 2.0;
        }
        if coeff != 0.0 {
            acc.add(coeff / cpow(q.value(tau), n));
        }
    }
    Ok(acc.value().norm())
}

/// Matched-window inversion defect of ρ (note the sign of the 2πi term is
/// opposite to ψ's):
/// |τ^{−2k−2}ρ(−1/τ,−1/w) − ρ(τ,w) − Σ log|α⁺/α⁻|/Q^{k+1} − 2πi Σ_{a<0<c} Q^{−(k+1)}|.
pub fn rho_s_defect(
    params: &Params,
    tau: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    qforms::require_upper(tau)?;
    qforms::require_lower(w)?;
    let n = params.exponent();
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let s_inv = qforms::GLMatrix::s().inverse();
    let m_tau = -1.0 / tau;
    let m_w = -1.0 / w;
    let weight = cpow(tau, 2 * n).finv();

    let mut acc = Kahan::default();
    for q in &forms {
        let denom = cpow(q.value(tau), n);
        let qi = q.act(&s_inv);
        let (im, ip) = qi.roots();
        acc.add(weight * log_upper((m_w - im) / (m_w - ip)) / cpow(qi.value(m_tau), n));
        let (am, ap) = q.roots();
        acc.add(-log_upper((w - am) / (w - ap)) / denom);
        let sq = params.sqrt_d();
        let ratio = ((-q.b as f64 + sq) / (-q.b as f64 - sq)).abs().ln();
        let mut corr = Complex64::new(ratio, 0.0);
        if q.a < 0 && q.c > 0 {
            corr += Complex64::new(0.0, 2.0 * PI);
        }
        acc.add(-corr / denom);
    }
    Ok(acc.value().norm())
}

/// Sum-level consistency of the closed τ̄-evaluation: over one symmetric
/// window, ψ(τ) − ρ(τ,τ̄) + 2πiφ(τ) must equal
/// Σ Log((Q_τ/√D − i)/(Q_τ/√D + i))/Q^{k+1} + πi Σ sgn(Q_τ)/Q^{k+1}.
/// (Per form the two sides differ by πi/Q^{k+1}, which cancels in ±Q pairs.)
pub fn closed_boundary_defect(
    params: &Params,
    tau: Complex64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    qforms::require_upper(tau)?;
    let n = params.exponent();
    let sq = params.sqrt_d();
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let pi_i = Complex64::new(0.0, PI);
    let i = Complex64::new(0.0, 1.0);
    let w = tau.conj();

    let mut acc = Kahan::default();
    for q in &forms {
        let denom = cpow(q.value(tau), n);
        let (am, ap) = q.roots();
        let mut lhs = log_upper((tau - am) / (tau - ap)) - log_upper((w - am) / (w - ap));
        if q.a > 0 {
            lhs += two_pi_i;
        }
        let x = q.q_tau(tau)? / sq;
        let rhs = log_upper((x - i) / (x + i)) + pi_i * x.signum();
        acc.add((lhs - rhs) / denom);
    }
    Ok(acc.value().norm())
}

/// Matched-window inversion defect of the full completion:
/// |τ^{−2k−2} Ω(−1/τ, −1/w) − Ω(τ, w)| with the transformed side summed over
/// the S-image of the window. The branch defects of the four ingredients
/// cancel against each other here with no explicit correction term — that
/// cancellation is exactly the bimodularity of Ω.
pub fn omega_s_defect(
    params: &Params,
    tau: Complex64,
    w: Complex64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    qforms::require_upper(tau)?;
    qforms::require_lower(w)?;
    let n = params.exponent();
    let sq = params.sqrt_d();
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let window = policy.window_for(params, tau.re, tau.im);
    let forms = enumerate_forms(params, policy.bound_a, &window);
    let s_inv = qforms::GLMatrix::s().inverse();
    let (m_tau, m_w) = (-1.0 / tau, -1.0 / w);
    let weight = cpow(tau, 2 * n).finv();

    let mut acc = Kahan::default();
    for q in &forms {
        let denom = cpow(q.value(tau), n);
        let qi = q.act(&s_inv);
        let (im, ip) = qi.roots();
        let qw_i = qi.q_tau(m_w)?;
        let mut image = log_upper((m_tau - im) / (m_tau - ip)) - log_upper((m_w - im) / (m_w - ip))
            + Complex64::new(0.0, 2.0 * (qw_i / sq).atan());
        if qi.a > 0 {
            image += two_pi_i;
        }
        acc.add(weight * image / cpow(qi.value(m_tau), n));

        let (am, ap) = q.roots();
        let qw = q.q_tau(w)?;
        let mut direct = log_upper((tau - am) / (tau - ap)) - log_upper((w - am) / (w - ap))
            + Complex64::new(0.0, 2.0 * (qw / sq).atan());
        if q.a > 0 {
            direct += two_pi_i;
        }
        acc.add(-direct / denom);
    }
    Ok(acc.value().norm())
}
