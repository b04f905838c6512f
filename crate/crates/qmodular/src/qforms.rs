//! Exact integer layer: binary quadratic forms of fixed discriminant, the
//! SL2(Z) action, root/geodesic geometry, and bookkeeping for the exceptional
//! set E_D (the union of all Heegner geodesics) and its connected components.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;

/// Global parameters: discriminant D and (even) weight parameter k.
///
/// All series in this crate use the exponent k+1 ≥ 3, which guarantees
/// absolute convergence of every lattice sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Params {
    pub d: i64,
    pub k: u32,
}

impl Params {
    pub fn new(d: i64, k: u32) -> Result<Self> {
        if d <= 0 {
            return Err(Error::InvalidParams(format!("discriminant {d} must be positive")));
        }
        if !matches!(d % 4, 0 | 1) {
            return Err(Error::InvalidParams(format!("{d} is not a discriminant (D mod 4 must be 0 or 1)")));
        }
        if is_square(d) {
            return Err(Error::InvalidParams(format!("discriminant {d} must not be a perfect square")));
        }
        if k == 0 || k % 2 != 0 {
            return Err(Error::InvalidParams(format!("weight parameter k={k} must be even and positive")));
        }
        Ok(Params { d, k })
    }

    /// Series exponent k+1.
    pub fn exponent(&self) -> u32 {
        self.k + 1
    }

    pub fn sqrt_d(&self) -> f64 {
        (self.d as f64).sqrt()
    }

    /// Height of the tallest geodesic apex, √D/2 (attained by |a| = 1).
    pub fn max_apex(&self) -> f64 {
        self.sqrt_d() / 2.0
    }
}

fn is_square(n: i64) -> bool {
    if n < 0 {
        return false;
    }
    let r = (n as f64).sqrt().round() as i64;
    (r - 1..=r + 1).any(|s| s >= 0 && s * s == n)
}

/// Which half-plane a point was validated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HalfPlane {
    Upper,
    Lower,
}

/// A point off the real axis, tagged with its half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Point {
    pub u: f64,
    pub v: f64,
}

impl Point {
    pub fn upper(u: f64, v: f64) -> Result<Self> {
        if !(v > 0.0) {
            return Err(Error::Domain(format!("expected Im > 0, got {v}")));
        }
        Ok(Point { u, v })
    }

    pub fn lower(u: f64, v: f64) -> Result<Self> {
        if !(v < 0.0) {
            return Err(Error::Domain(format!("expected Im < 0, got {v}")));
        }
        Ok(Point { u, v })
    }

    pub fn from_complex(z: Complex64) -> Self {
        Point { u: z.re, v: z.im }
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.u, self.v)
    }

    pub fn half_plane(&self) -> HalfPlane {
        if self.v > 0.0 {
            HalfPlane::Upper
        } else {
            HalfPlane::Lower
        }
    }
}

pub(crate) fn require_upper(z: Complex64) -> Result<()> {
    if z.im > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("expected a point in the upper half-plane, got Im = {}", z.im)))
    }
}

pub(crate) fn require_lower(z: Complex64) -> Result<()> {
    if z.im < 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("expected a point in the lower half-plane, got Im = {}", z.im)))
    }
}

/// Integral binary quadratic form [a, b, c] ↦ ax² + bxy + cy².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        QForm { a, b, c }
    }

    pub fn disc(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// sgn(Q) := sgn(a). Positive discriminant forces a ≠ 0 here.
    pub fn sign(&self) -> i64 {
        self.a.signum()
    }

    pub fn neg(&self) -> Self {
        QForm::new(-self.a, -self.b, -self.c)
    }

    /// Coefficient reflection [a, b, c] ↦ [a, −b, c] (conjugates the roots).
    pub fn flip_b(&self) -> Self {
        QForm::new(self.a, -self.b, self.c)
    }

    /// Q(τ, 1) = aτ² + bτ + c.
    pub fn value(&self, z: Complex64) -> Complex64 {
        (Complex64::new(self.a as f64, 0.0) * z + self.b as f64) * z + self.c as f64
    }

    /// Q'(τ, 1) = 2aτ + b.
    pub fn value_deriv(&self, z: Complex64) -> Complex64 {
        2.0 * self.a as f64 * z + self.b as f64
    }

    /// Q_w = (a|w|² + b·Re w + c) / Im w; vanishes exactly on the geodesic.
    /// Satisfies Q_{w̄} = −Q_w.
    pub fn q_tau(&self, w: Complex64) -> Result<f64> {
        if w.im == 0.0 {
            return Err(Error::Domain("Q_w undefined on the real axis".into()));
        }
        Ok((self.a as f64 * w.norm_sqr() + self.b as f64 * w.re + self.c as f64) / w.im)
    }

    /// Real roots (α⁻, α⁺) with α^± = (−b ± √D)/(2a); α⁺ < α⁻ when a < 0.
    pub fn roots(&self) -> (f64, f64) {
        let sq = (self.disc() as f64).sqrt();
        let two_a = 2.0 * self.a as f64;
        ((-self.b as f64 - sq) / two_a, (-self.b as f64 + sq) / two_a)
    }

    /// Right action (Q∘γ)(x, y) = Q(ax + by, cx + dy), computed exactly.
    /// Preserves the discriminant and satisfies
    /// (Q∘γ)(τ,1) = j(γ,τ)² Q(γτ, 1).
    pub fn act(&self, g: &GLMatrix) -> QForm {
        let (p, q, r, s) = (g.a, g.b, g.c, g.d);
        let a = self.a * p * p + self.b * p * r + self.c * r * r;
        let b = 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s;
        let c = self.a * q * q + self.b * q * s + self.c * s * s;
        QForm::new(a, b, c)
    }

    pub fn geodesic(&self) -> Geodesic {
        Geodesic::of(self)
    }

    /// Apex height √D/(2|a|) of the geodesic semicircle.
    pub fn apex_height(&self) -> f64 {
        (self.disc() as f64).sqrt() / (2.0 * self.a.abs() as f64)
    }
}

/// Heegner geodesic of a form: the semicircle {Q_τ = 0} with real center
/// −b/2a and radius √D/(2|a|), oriented counterclockwise iff sgn(Q) > 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Geodesic {
    pub form: QForm,
    pub center: f64,
    pub radius: f64,
    pub ccw: bool,
}

impl Geodesic {
    pub fn of(q: &QForm) -> Self {
        Geodesic {
            form: *q,
            center: -q.b as f64 / (2.0 * q.a as f64),
            radius: q.apex_height(),
            ccw: q.sign() > 0,
        }
    }

    /// Euclidean distance from z to the (full) circle carrying the arc.
    /// For z in the upper half-plane this equals the distance to the arc.
    pub fn distance(&self, z: Complex64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    /// Height of the arc over abscissa u, if the arc spans it.
    pub fn height_at(&self, u: f64) -> Option<f64> {
        let h2 = self.radius * self.radius - (u - self.center) * (u - self.center);
        if h2 > 0.0 {
            Some(h2.sqrt())
        } else {
            None
        }
    }
}

/// Integer 2×2 matrix of determinant 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GLMatrix {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl GLMatrix {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let m = GLMatrix { a, b, c, d };
        if m.det() != 1 {
            return Err(Error::BadMatrix(format!("determinant {} != 1", m.det())));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        GLMatrix { a: 1, b: 0, c: 0, d: 1 }
    }

    /// T = [[1, 1], [0, 1]], the unit translation.
    pub fn t() -> Self {
        GLMatrix { a: 1, b: 1, c: 0, d: 1 }
    }

    /// S = [[0, −1], [1, 0]], the inversion τ ↦ −1/τ.
    pub fn s() -> Self {
        GLMatrix { a: 0, b: -1, c: 1, d: 0 }
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    /// Inverse (exact; determinant is 1).
    pub fn inverse(&self) -> Self {
        GLMatrix { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn mul(&self, other: &GLMatrix) -> Self {
        GLMatrix {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Möbius action γτ = (aτ + b)/(cτ + d).
    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a as f64 * z + self.b as f64) / (self.c as f64 * z + self.d as f64)
    }

    /// Automorphy factor j(γ, τ) = cτ + d.
    pub fn j(&self, z: Complex64) -> Complex64 {
        self.c as f64 * z + self.d as f64
    }

    pub fn in_gamma0(&self, level: i64) -> bool {
        self.det() == 1 && self.c.rem_euclid(level) == 0
    }
}

/// Enumeration window: which part of the (infinite) form set is relevant for
/// evaluations over a u-strip below a height cap.
///
/// The per-a window |b + 2a·u_center| ≤ 2|a|·u_halfwidth + √(D + 4a²·v_max²)
/// contains every form whose geodesic meets the strip below v_max, plus the
/// shells that control series tails (|Q(τ,1)| ≥ |a|v² outside it).
#[derive(Debug, Clone, Copy)]
pub struct EnumWindow {
    pub u_center: f64,
    pub u_halfwidth: f64,
    pub v_max: f64,
}

impl EnumWindow {
    pub fn new(u_center: f64, u_halfwidth: f64, v_max: f64) -> Self {
        EnumWindow { u_center, u_halfwidth, v_max }
    }

    /// Default strip of halfwidth 1 around a center, capped at the apex ceiling.
    pub fn strip(params: &Params, u_center: f64) -> Self {
        EnumWindow { u_center, u_halfwidth: 1.0, v_max: params.max_apex() }
    }

    /// Half-width of the admissible b-range for a given leading coefficient.
    pub fn b_halfwidth(&self, params: &Params, a: i64) -> f64 {
        let aa = a.abs() as f64;
        2.0 * aa * self.u_halfwidth
            + (params.d as f64 + 4.0 * aa * aa * self.v_max * self.v_max).sqrt()
    }
}

/// All forms [a, b, c] of discriminant D with 0 < |a| ≤ bound_a whose b lies
/// in the window, ordered by (|a|, a, b) ascending. c = (b² − D)/(4a) exactly.
///
/// Per a, the congruence b² ≡ D (mod 4a) is solved once for its residues in
/// [0, 4a) and b then steps by 4a, so the cost is O(Σ a) + O(#forms).
pub fn enumerate_forms(params: &Params, bound_a: u32, window: &EnumWindow) -> Vec<QForm> {
    let mut out = Vec::new();
    for abs_a in 1..=i64::from(bound_a) {
        let roots = b_residues(params.d, abs_a);
        for &a in &[abs_a, -abs_a] {
            let center = -2.0 * a as f64 * window.u_center;
            let hw = window.b_halfwidth(params, a);
            let (lo, hi) = ((center - hw).floor() as i64, (center + hw).ceil() as i64);
            let modulus = 4 * abs_a;
            let mut bs: Vec<i64> = Vec::new();
            for &b0 in &roots {
                // smallest b ≡ b0 (mod 4|a|) with b ≥ lo
                let mut b = b0 + modulus * ((lo - b0).div_euclid(modulus));
                if b < lo {
                    b += modulus;
                }
                while b <= hi {
                    bs.push(b);
                    b += modulus;
                }
            }
            bs.sort_unstable();
            bs.dedup();
            for b in bs {
                let c = (b * b - params.d) / (4 * a);
                debug_assert_eq!(b * b - 4 * a * c, params.d);
                out.push(QForm::new(a, b, c));
            }
        }
    }
    out.sort_unstable_by_key(|q| (q.a.abs(), q.a, q.b));
    out
}

/// Residues b₀ ∈ [0, 4a) with b₀² ≡ D (mod 4a), for a ≥ 1.
pub(crate) fn b_residues(d: i64, a: i64) -> Vec<i64> {
    let m = 4 * a;
    let parity = d.rem_euclid(2);
    let mut roots = Vec::new();
    let mut b = parity;
    while b < m {
        if (b * b - d).rem_euclid(m) == 0 {
            roots.push(b);
        }
        b += 2; // b² ≡ D (mod 4) forces b ≡ D (mod 2)
    }
    roots
}

/// All heights v ∈ (v_lo, v_hi) at which some geodesic crosses the vertical
/// line Re = u, sorted ascending, with coincident heights grouped.
/// Complete: only |a| ≤ √D/(2·v_lo) can reach above v_lo.
pub fn crossing_heights(
    params: &Params,
    u: f64,
    v_lo: f64,
    v_hi: f64,
) -> Result<Vec<(f64, Vec<QForm>)>> {
    if !(v_lo > 0.0) || !(v_hi > v_lo) {
        return Err(Error::Domain(format!("need 0 < v_lo < v_hi, got ({v_lo}, {v_hi})")));
    }
    let v_hi = v_hi.min(params.max_apex() + 1.0);
    let a_max = (params.sqrt_d() / (2.0 * v_lo)).floor() as i64;
    let mut hits: Vec<(f64, QForm)> = Vec::new();
    for a in 1..=a_max {
        // geodesic of [a, b, ·] spans u iff (b + 2au)² < D
        let s = params.sqrt_d();
        let lo = (-2.0 * a as f64 * u - s).floor() as i64;
        let hi = (-2.0 * a as f64 * u + s).ceil() as i64;
        for b in lo..=hi {
            if (b * b - params.d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let c = (b * b - params.d) / (4 * a);
            let q = QForm::new(a, b, c);
            if let Some(h) = q.geodesic().height_at(u) {
                if h > v_lo && h < v_hi {
                    hits.push((h, q));
                    hits.push((h, q.neg()));
                }
            }
        }
    }
    hits.sort_by(|x, y| x.0.total_cmp(&y.0).then_with(|| (x.1.a, x.1.b).cmp(&(y.1.a, y.1.b))));
    let mut grouped: Vec<(f64, Vec<QForm>)> = Vec::new();
    for (h, q) in hits {
        match grouped.last_mut() {
            Some((h0, qs)) if (h - *h0).abs() < 1e-12 * (1.0 + h.abs()) => qs.push(q),
            _ => grouped.push((h, vec![q])),
        }
    }
    Ok(grouped)
}

/// All forms with |Q_p| < tol; complete via the |a| ≤ √D/(2v) bound
/// (a geodesic through height v needs apex ≥ v). Empty when p is off E_D.
pub fn forms_vanishing_at(params: &Params, p: Complex64, tol: f64) -> Result<Vec<QForm>> {
    require_upper(p)?;
    let v = p.im;
    let a_max = ((params.sqrt_d() / (2.0 * v)) * 1.000001).floor() as i64;
    let mut out = Vec::new();
    for a in 1..=a_max {
        let s = params.sqrt_d() + 2.0 * a as f64 * v * tol;
        let lo = (-2.0 * a as f64 * p.re - s).floor() as i64;
        let hi = (-2.0 * a as f64 * p.re + s).ceil() as i64;
        for b in lo..=hi {
            if (b * b - params.d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let c = (b * b - params.d) / (4 * a);
            let q = QForm::new(a, b, c);
            if q.q_tau(p)?.abs() < tol {
                out.push(q);
                out.push(q.neg());
            }
        }
    }
    out.sort_unstable_by_key(|q| (q.a.abs(), q.a, q.b));
    Ok(out)
}

/// Euclidean distance from p to the exceptional set E_D, capped at `cap`
/// (returns `cap` when no geodesic comes closer). Exact for the circles
/// considered; only geodesics that could come within `cap` are scanned.
pub fn distance_to_exceptional(params: &Params, p: Complex64, cap: f64) -> f64 {
    let v = p.im.abs();
    let cap = cap.min(0.95 * v);
    if cap <= 0.0 {
        return 0.0;
    }
    // |p − c₀| ≥ v, so a circle within cap needs r ≥ v − cap.
    let a_max = (params.sqrt_d() / (2.0 * (v - cap))).floor() as i64;
    let mut best = cap;
    for a in 1..=a_max {
        let r = params.sqrt_d() / (2.0 * a as f64);
        let reach = r + best;
        let span2 = reach * reach - v * v;
        if span2 < 0.0 {
            continue;
        }
        let span = span2.sqrt();
        let lo = (2.0 * a as f64 * (-p.re - span)).floor() as i64;
        let hi = (2.0 * a as f64 * (-p.re + span)).ceil() as i64;
        for b in lo..=hi {
            if (b * b - params.d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let center = -b as f64 / (2.0 * a as f64);
            let dist = ((p - center).norm() - r).abs();
            if dist < best {
                best = dist;
            }
        }
    }
    best
}

/// True iff p lies in the unbounded connected component of H \ E_D, i.e.
/// outside every geodesic disk. Equivalently, the vertical ray from p to i∞
/// crosses no geodesic (the circles have real centers, so |p + it − c₀| is
/// increasing in t).
pub fn in_unbounded_component(params: &Params, p: Complex64) -> bool {
    let v = p.im;
    if v >= params.max_apex() {
        return true;
    }
    let a_max = (params.sqrt_d() / (2.0 * v)).floor() as i64;
    for a in 1..=a_max {
        let r = params.sqrt_d() / (2.0 * a as f64);
        let span2 = r * r - v * v;
        if span2 < 0.0 {
            continue;
        }
        let span = span2.sqrt();
        let lo = (2.0 * a as f64 * (-p.re - span)).floor() as i64;
        let hi = (2.0 * a as f64 * (-p.re + span)).ceil() as i64;
        for b in lo..=hi {
            if (b * b - params.d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let center = -b as f64 / (2.0 * a as f64);
            if (p - center).norm() < r {
                return false;
            }
        }
    }
    true
}

/// One entry of a component signature: the a > 0 representative of a
/// geodesic arc over the local strip, and the side of it the point is on.
pub type SignatureEntry = (QForm, i8);

/// Sign pattern of the point against every geodesic arc over the local
/// strip (|u − round(u)| ≤ 1 by default, apex floor 0.05). Two points of the
/// same strip get equal signatures iff they are connected in H \ E_D within
/// the window.
pub fn component_signature(params: &Params, p: Complex64) -> Result<Vec<SignatureEntry>> {
    component_signature_in(params, p, p.re.round(), 1.0, 0.05)
}

pub fn component_signature_in(
    params: &Params,
    p: Complex64,
    strip_center: f64,
    strip_halfwidth: f64,
    apex_floor: f64,
) -> Result<Vec<SignatureEntry>> {
    require_upper(p)?;
    let a_max = (params.sqrt_d() / (2.0 * apex_floor)).floor() as i64;
    let mut sig = Vec::new();
    for a in 1..=a_max {
        let r = params.sqrt_d() / (2.0 * a as f64);
        // arc meets the strip iff |center - strip_center| < halfwidth + r
        let reach = strip_halfwidth + r;
        let lo = (2.0 * a as f64 * (-strip_center - reach)).ceil() as i64;
        let hi = (2.0 * a as f64 * (-strip_center + reach)).floor() as i64;
        for b in lo..=hi {
            if (b * b - params.d).rem_euclid(4 * a) != 0 {
                continue;
            }
            let c = (b * b - params.d) / (4 * a);
            let q = QForm::new(a, b, c);
            let qt = q.q_tau(p)?;
            if qt.abs() < 1e-12 {
                return Err(Error::OnExceptionalSet { distance: 0.0 });
            }
            sig.push((q, qt.signum() as i8));
        }
    }
    sig.sort_unstable_by_key(|(q, _)| (q.a, q.b));
    Ok(sig)
}

/// Stable 64-bit FNV-1a hash of a signature, for component coloring.
pub fn signature_hash(sig: &[SignatureEntry]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: i64| {
        for byte in x.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for (q, s) in sig {
        eat(q.a);
        eat(q.b);
        eat(q.c);
        eat(i64::from(*s));
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d5() -> Params {
        Params::new(5, 2).unwrap()
    }

    /// Brute-force oracle: all forms with |a|,|b|,|c| ≤ bound and disc = d.
    fn brute_forms(d: i64, bound: i64) -> Vec<QForm> {
        let mut v = Vec::new();
        for a in -bound..=bound {
            for b in -bound..=bound {
                for c in -bound..=bound {
                    if a != 0 && b * b - 4 * a * c == d {
                        v.push(QForm::new(a, b, c));
                    }
                }
            }
        }
        v.sort_unstable_by_key(|q| (q.a.abs(), q.a, q.b));
        v
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(5, 2).is_ok());
        assert!(Params::new(8, 4).is_ok());
        assert!(Params::new(4, 2).is_err()); // square
        assert!(Params::new(7, 2).is_err()); // 3 mod 4
        assert!(Params::new(-3, 2).is_err());
        assert!(Params::new(5, 3).is_err()); // odd k
        assert!(Params::new(5, 0).is_err());
    }

    #[test]
    fn enumeration_matches_brute_force_d5() {
        let p = d5();
        // window sized so the b-range is exactly |b| ≤ 3
        let w = EnumWindow::new(0.0, 0.5, 0.7);
        let got: Vec<_> = enumerate_forms(&p, 1, &w).into_iter().filter(|q| q.b.abs() <= 3).collect();
        let want = brute_forms(5, 3).into_iter().filter(|q| q.a.abs() <= 1).collect::<Vec<_>>();
        assert_eq!(got, want);
        assert_eq!(got.len(), 8);
        assert!(got.contains(&QForm::new(1, 1, -1)));
    }

    #[test]
    fn enumeration_matches_brute_force_d8() {
        let p = Params::new(8, 2).unwrap();
        let w = EnumWindow::new(0.0, 0.5, 0.7);
        let got: Vec<_> = enumerate_forms(&p, 1, &w).into_iter().filter(|q| q.b.abs() <= 2).collect();
        for q in [
            QForm::new(1, 0, -2),
            QForm::new(-1, 0, 2),
            QForm::new(1, 2, -1),
            QForm::new(-1, 2, 1),
            QForm::new(1, -2, -1),
            QForm::new(-1, -2, 1),
        ] {
            assert!(got.contains(&q), "missing {q:?}");
        }
    }

    #[test]
    fn enumeration_closed_under_symmetries() {
        let p = d5();
        let w = EnumWindow::new(0.0, 1.0, p.max_apex());
        let forms = enumerate_forms(&p, 6, &w);
        for q in &forms {
            assert_eq!(q.disc(), 5);
            assert!(forms.contains(&q.neg()), "not closed under negation: {q:?}");
            assert!(forms.contains(&q.flip_b()), "not closed under b-flip: {q:?}");
            assert!(q.apex_height() <= p.max_apex() + 1e-12);
        }
    }

    #[test]
    fn action_examples() {
        let q = QForm::new(1, 1, -1);
        assert_eq!(q.act(&GLMatrix::t()), QForm::new(1, 3, 1));
        assert_eq!(q.act(&GLMatrix::identity()), q);
        // [a,b,c] ∘ S⁻¹ = [c, −b, a]
        assert_eq!(q.act(&GLMatrix::s().inverse()), QForm::new(-1, -1, 1));
        assert_eq!(q.act(&GLMatrix::s().inverse()).disc(), q.disc());
    }

    #[test]
    fn roots_and_values() {
        let q = QForm::new(1, 1, -1);
        let (am, ap) = q.roots();
        assert!((am + 1.618_033_988_749_895).abs() < 1e-12);
        assert!((ap - 0.618_033_988_749_895).abs() < 1e-12);
        let qn = QForm::new(-1, -1, 1);
        let (bm, bp) = qn.roots();
        assert!((bm - 0.618_033_988_749_895).abs() < 1e-12);
        assert!((bp + 1.618_033_988_749_895).abs() < 1e-12);

        let i = Complex64::new(0.0, 1.0);
        assert!((q.value(i) - Complex64::new(-2.0, 1.0)).norm() < 1e-15);
        assert!((qn.value(i) - Complex64::new(2.0, -1.0)).norm() < 1e-15);
        let p = Complex64::new(-0.5, 5f64.sqrt() / 2.0);
        assert!((q.value(p) - Complex64::new(-2.5, 0.0)).norm() < 1e-12);

        assert!(q.q_tau(i).unwrap().abs() < 1e-15);
        assert!((q.q_tau(Complex64::new(0.0, 2.0)).unwrap() - 1.5).abs() < 1e-15);
        // Q_{w̄} = −Q_w
        let w = Complex64::new(0.3, 1.7);
        assert!((q.q_tau(w.conj()).unwrap() + q.q_tau(w).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn root_re_expansion_reproduces_coefficients() {
        for q in brute_forms(5, 4) {
            let (am, ap) = q.roots();
            // a(x−α⁺)(x−α⁻) = ax² + bx + c
            let a = q.a as f64;
            assert!((a * (-(ap + am)) - q.b as f64).abs() < 1e-9 * (1.0 + q.b.abs() as f64));
            assert!((a * (ap * am) - q.c as f64).abs() < 1e-9 * (1.0 + q.c.abs() as f64));
        }
    }

    #[test]
    fn crossing_heights_d5() {
        let p = d5();
        let hits = crossing_heights(&p, 0.0, 0.5, 2.0).unwrap();
        assert_eq!(hits.len(), 1);
        let (h, forms) = &hits[0];
        assert!((h - 1.0).abs() < 1e-12);
        assert_eq!(forms.len(), 4); // [±1, ±1, ∓1]
        for q in forms {
            assert_eq!(q.a.abs(), 1);
            assert_eq!(q.b.abs(), 1);
        }

        assert!(crossing_heights(&p, 0.0, 1.2, f64::INFINITY).unwrap().is_empty());

        let hits = crossing_heights(&p, 0.25, 0.5, 1.0).unwrap();
        let want = 11f64.sqrt() / 4.0;
        assert!(
            hits.iter().any(|(h, qs)| (h - want).abs() < 1e-12
                && qs.contains(&QForm::new(1, 1, -1))),
            "expected a crossing at √11/4 from [1,1,−1], got {hits:?}"
        );
    }

    #[test]
    fn vanishing_forms_examples() {
        let p = d5();
        let i = Complex64::new(0.0, 1.0);
        let at_i = forms_vanishing_at(&p, i, 1e-9).unwrap();
        assert_eq!(at_i.len(), 4);
        for q in &at_i {
            assert_eq!(q.a.abs(), 1);
            assert_eq!(q.b.abs(), 1);
            assert_eq!(q.c, -q.a);
        }

        let apex = Complex64::new(-0.5, 5f64.sqrt() / 2.0);
        let at_apex = forms_vanishing_at(&p, apex, 1e-9).unwrap();
        assert_eq!(at_apex.len(), 2);
        assert!(at_apex.contains(&QForm::new(1, 1, -1)));
        assert!(at_apex.contains(&QForm::new(-1, -1, 1)));

        assert!(forms_vanishing_at(&p, Complex64::new(0.0, 2.0), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn component_signatures() {
        let p = d5();
        let two_i = Complex64::new(0.0, 2.0);
        let sig = component_signature(&p, two_i).unwrap();
        // unbounded component: every sign equals sgn(a) = +1 of the a>0 representative
        assert!(sig.iter().all(|(_, s)| *s == 1));

        let lo = component_signature(&p, Complex64::new(0.0, 0.9)).unwrap();
        let hi = component_signature(&p, Complex64::new(0.0, 1.1)).unwrap();
        assert_eq!(lo.len(), hi.len());
        let diffs: Vec<_> = lo
            .iter()
            .zip(&hi)
            .filter(|((q1, s1), (q2, s2))| {
                assert_eq!(q1, q2);
                s1 != s2
            })
            .map(|((q, _), _)| *q)
            .collect();
        // exactly the two a>0 arcs crossing v=1 at u=0 ([1,±1,∓1])
        assert_eq!(diffs.len(), 2);
        for q in diffs {
            assert_eq!(q.a, 1);
            assert_eq!(q.b.abs(), 1);
        }

        let sig2 = component_signature(&p, Complex64::new(1e-6, 2.0)).unwrap();
        assert_eq!(signature_hash(&sig), signature_hash(&sig2));
        assert_eq!(sig, sig2);
    }

    #[test]
    fn unbounded_component_test_points() {
        let p = d5();
        assert!(in_unbounded_component(&p, Complex64::new(0.1, 2.2)));
        assert!(in_unbounded_component(&p, Complex64::new(0.3, 1.5)));
        assert!(in_unbounded_component(&p, Complex64::new(0.05, 1.15)));
        assert!(!in_unbounded_component(&p, Complex64::new(0.0, 0.7)));
        assert!(!in_unbounded_component(&p, Complex64::new(0.0, 0.9)));
        assert!(!in_unbounded_component(&p, Complex64::new(0.05, 1.0)));
    }

    #[test]
    fn exceptional_distance() {
        let p = d5();
        // on the geodesic of [1,1,−1] at u=0: v=1
        let d = distance_to_exceptional(&p, Complex64::new(0.0, 1.0), 0.5);
        assert!(d < 1e-12, "distance {d}");
        let d = distance_to_exceptional(&p, Complex64::new(0.0, 1.01), 0.5);
        assert!(d > 1e-3 && d < 0.02, "distance {d}");
        let d = distance_to_exceptional(&p, Complex64::new(0.0, 3.0), 0.5);
        assert!((d - 0.5).abs() < 1e-15, "cap expected, got {d}");
    }

    #[test]
    fn b_residue_counts_for_c_infinity() {
        // D=5: b² ≡ 5 (mod 4) has the two roots {1, 3} in [0,4)
        assert_eq!(b_residues(5, 1), vec![1, 3]);
        // D=5: b² ≡ 5 (mod 8) has none (squares mod 8 are {0,1,4})
        assert!(b_residues(5, 2).is_empty());
    }
}
