//! The energy functional J, its L²-gradient, the Gagliardo–Nirenberg
//! constant via the soliton profile, the mass-threshold conditions, the
//! Pohozaev residual, Lagrange multipliers, and the negative-energy trial
//! constructions.
//!
//! The sharp constant of |u|_{2#} ≤ C |u|₂^{1-δ} |∇u|₂^δ (δ = 2/2#) is tied
//! to the unique positive radial solution w of
//!
//! ```text
//!     -Δw + (2/N) w = w^{2# - 1}
//! ```
//!
//! through |w|₂^{4/N} = 2# / (2 C^{2#}), with equality in the inequality at
//! u = w. The profile is obtained by bisection shooting on w(0).

use crate::error::{Error, Result};
use crate::grid::{Domain, DomainKind, Field};
use crate::nonlin::{Eta, EtaSide, Nonlinearity};
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Prescribed L² norms a = (a₁, …, a_M); masses are a_j².
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MassSpec<T> {
    a: Vec<T>,
}

impl<T: Scalar> MassSpec<T> {
    /// All components strictly positive.
    pub fn new(a: Vec<T>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidMass { j: 0, value: f64::NAN });
        }
        for (j, &v) in a.iter().enumerate() {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidMass { j, value: v.as_f64() });
            }
        }
        Ok(MassSpec { a })
    }

    /// Zero components allowed (trial construction only); at least one must
    /// be positive.
    pub fn with_zeros(a: Vec<T>) -> Result<Self> {
        for (j, &v) in a.iter().enumerate() {
            if !(v >= T::zero()) || !v.is_finite() {
                return Err(Error::InvalidMass { j, value: v.as_f64() });
            }
        }
        if a.iter().all(|v| *v == T::zero()) {
            return Err(Error::InvalidMass { j: 0, value: 0.0 });
        }
        Ok(MassSpec { a })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.a
    }

    pub fn get(&self, j: usize) -> T {
        self.a[j]
    }

    /// Euclidean length |a|.
    pub fn norm(&self) -> T {
        self.a.iter().map(|v| *v * *v).sum::<T>().sqrt()
    }

    /// Smallest positive component.
    pub fn min_positive(&self) -> T {
        self.a
            .iter()
            .copied()
            .filter(|v| *v > T::zero())
            .fold(T::infinity(), T::min)
    }

    /// Number of positive components.
    pub fn active(&self) -> usize {
        self.a.iter().filter(|v| **v > T::zero()).count()
    }

    /// Componentwise Pythagorean combination √(a² + b²).
    pub fn pythagorean(&self, other: &Self) -> Self {
        MassSpec {
            a: self
                .a
                .iter()
                .zip(&other.a)
                .map(|(&x, &y)| (x * x + y * y).sqrt())
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Soliton shooting and the Gagliardo–Nirenberg constant
// ---------------------------------------------------------------------------

/// Soliton profile and the derived sharp constant for one dimension N.
#[derive(Debug, Clone)]
pub struct GnData<T> {
    n_dim: usize,
    two_sharp: T,
    /// Uniform ODE step of the stored profile.
    h_ode: T,
    /// w sampled at r_k = k·h_ode.
    profile: Vec<T>,
    /// w' at the same samples (cubic Hermite evaluation keeps the grid
    /// Laplacian of a transplant below quadrature noise).
    deriv: Vec<T>,
    /// λ = 2/N of the defining equation, for the asymptotic tail.
    lambda: T,
    w0: T,
    mass_w: T,
    c_gn: T,
}

/// The JSON shape `{N, two_sharp, w0, mass_w, C}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnSummary<T> {
    #[serde(rename = "N")]
    pub n_dim: usize,
    pub two_sharp: T,
    pub w0: T,
    pub mass_w: T,
    #[serde(rename = "C")]
    pub c: T,
}

/// Options for the shooting solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonOptions {
    /// ODE integration step (midpoint scheme, second order).
    pub ode_step: f64,
    /// Bisection tolerance on w(0), relative to the bracket scale.
    pub shooting_tol: f64,
    /// Upper bracket search limit as a multiple of the turning value.
    pub bracket_factor: f64,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        SolitonOptions {
            ode_step: 1e-4,
            shooting_tol: 1e-13,
            bracket_factor: 64.0,
        }
    }
}

#[derive(PartialEq)]
enum Shot {
    Undershoot, // w turns back upward: w(0) too small
    Overshoot,  // w crosses zero: w(0) too large
    Grazed,     // neither event before r_end: effectively converged
}

impl<T: Scalar> GnData<T> {
    /// Shooting solve of `-Δw + (2/N) w = w^{2#-1}` for the positive radial
    /// profile, plus |w|₂² and C_{N,2#}.
    pub fn solve(n_dim: usize, opts: &SolitonOptions) -> Result<Self> {
        if n_dim < 1 {
            return Err(Error::InvalidDomain("need N >= 1".into()));
        }
        let two_sharp = lit::<T>(2.0) + lit::<T>(4.0) / lit::<T>(n_dim as f64);
        let lambda = lit::<T>(2.0) / lit::<T>(n_dim as f64);
        let h = lit::<T>(opts.ode_step);
        // radius beyond which any non-converged trajectory has produced an event
        let r_end = lit::<T>(40.0) / lambda.sqrt();
        // w'' changes sign at g(w) = λw - w^{2#-1} = 0
        let turn = lambda.powf(T::one() / (two_sharp - lit(2.0)));

        let shoot = |beta: T, record: Option<&mut (Vec<T>, Vec<T>)>| -> Shot {
            let g = |w: T| lambda * w - w.abs().powf(two_sharp - lit(2.0)) * w;
            let nm1 = lit::<T>((n_dim - 1) as f64);
            let n_t = lit::<T>(n_dim as f64);
            let mut w = beta;
            let mut v = T::zero();
            let mut r = T::zero();
            let tiny = beta * lit(1e-14);
            let mut rec = record;
            if let Some(ref mut out) = rec {
                out.0.push(w);
                out.1.push(v);
            }
            while r < r_end {
                // midpoint step; the friction term (N-1)/r·v takes its limit
                // value at the origin, where v'(0) = g(w)/N
                let f = |r: T, w: T, v: T| -> (T, T) {
                    if r == T::zero() {
                        (v, g(w) / n_t)
                    } else {
                        (v, g(w) - nm1 / r * v)
                    }
                };
                let (k1w, k1v) = f(r, w, v);
                let half = lit::<T>(0.5);
                let (k2w, k2v) = f(r + half * h, w + half * h * k1w, v + half * h * k1v);
                w = w + h * k2w;
                v = v + h * k2v;
                r = r + h;
                if let Some(ref mut out) = rec {
                    out.0.push(w);
                    out.1.push(v);
                }
                if w < T::zero() {
                    return Shot::Overshoot;
                }
                if v > tiny || w > beta * lit(1.5) {
                    return Shot::Undershoot;
                }
                if w < tiny {
                    return Shot::Grazed;
                }
            }
            Shot::Grazed
        };

        // bracket: just above the turning value every trajectory regrows
        let lo0 = turn * lit(1.000001);
        if shoot(lo0, None) == Shot::Overshoot {
            return Err(Error::BracketNotFound {
                lo: lo0.as_f64(),
                hi: lo0.as_f64(),
            });
        }
        let mut lo = lo0;
        let mut hi = lo * lit(2.0);
        let hi_max = turn * lit(opts.bracket_factor);
        loop {
            match shoot(hi, None) {
                Shot::Overshoot => break,
                _ => {
                    hi = hi * lit(2.0);
                    if hi > hi_max {
                        return Err(Error::BracketNotFound {
                            lo: lo.as_f64(),
                            hi: hi.as_f64(),
                        });
                    }
                }
            }
        }
        let tol = lit::<T>(opts.shooting_tol);
        for _ in 0..200 {
            if hi - lo <= tol * hi {
                break;
            }
            let mid = (lo + hi) * lit(0.5);
            match shoot(mid, None) {
                Shot::Overshoot => hi = mid,
                Shot::Undershoot => lo = mid,
                Shot::Grazed => {
                    lo = mid;
                    hi = mid;
                    break;
                }
            }
        }
        let beta = (lo + hi) * lit(0.5);
        let mut rec = (Vec::new(), Vec::new());
        shoot(beta, Some(&mut rec));
        let (mut profile, mut deriv) = rec;
        // trim the last samples polluted by the shooting event (regrowth or
        // zero crossing); beyond the trimmed range the asymptotic tail
        // w ~ r^{-(N-1)/2} e^{-√λ r} takes over in w_at
        while profile.len() > 2 {
            let k = profile.len() - 1;
            if deriv[k] >= T::zero() || profile[k] <= T::zero() {
                profile.pop();
                deriv.pop();
            } else {
                break;
            }
        }

        // |w|₂² = σ ∫ w² r^{N-1} dr by composite Simpson on the uniform grid
        let sigma = crate::grid::unit_sphere_area::<T>(n_dim);
        let integrand: Vec<T> = profile
            .iter()
            .enumerate()
            .map(|(k, &w)| {
                let r = lit::<T>(k as f64) * h;
                w * w * r.powi(n_dim as i32 - 1)
            })
            .collect();
        let mass_w = sigma * simpson(&integrand, h);
        let c_gn = (two_sharp
            / (lit::<T>(2.0) * mass_w.powf(lit::<T>(2.0) / lit::<T>(n_dim as f64))))
        .powf(T::one() / two_sharp);

        Ok(GnData {
            n_dim,
            two_sharp,
            h_ode: h,
            profile,
            deriv,
            lambda,
            w0: beta,
            mass_w,
            c_gn,
        })
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn two_sharp(&self) -> T {
        self.two_sharp
    }

    /// w(0).
    pub fn w0(&self) -> T {
        self.w0
    }

    /// |w|₂².
    pub fn mass_w(&self) -> T {
        self.mass_w
    }

    /// The sharp constant C_{N,2#}.
    pub fn c_gn(&self) -> T {
        self.c_gn
    }

    /// δ_p = N(1/2 − 1/p) at p = 2#, which equals 2/2#.
    pub fn delta(&self) -> T {
        lit::<T>(2.0) / self.two_sharp
    }

    /// Profile value w(r): cubic Hermite interpolation inside the stored
    /// range, the asymptotic decay r^{-(N-1)/2} e^{-√λ r} beyond it.
    pub fn w_at(&self, r: T) -> T {
        let r = r.abs();
        let pos = r / self.h_ode;
        let k = pos.floor().as_f64() as usize;
        if k + 1 >= self.profile.len() {
            let k_end = self.profile.len() - 1;
            let r_end = lit::<T>(k_end as f64) * self.h_ode;
            let w_end = self.profile[k_end];
            let rate = self.lambda.sqrt();
            let geom = if self.n_dim > 1 {
                (r_end / r).powf(lit::<T>((self.n_dim - 1) as f64) / lit(2.0))
            } else {
                T::one()
            };
            return w_end * geom * (-(rate * (r - r_end))).exp();
        }
        let s = pos - lit::<T>(k as f64);
        let h = self.h_ode;
        let (v0, v1) = (self.profile[k], self.profile[k + 1]);
        let (d0, d1) = (self.deriv[k], self.deriv[k + 1]);
        let one = T::one();
        let two = lit::<T>(2.0);
        let three = lit::<T>(3.0);
        let h00 = (one + two * s) * (one - s) * (one - s);
        let h10 = s * (one - s) * (one - s);
        let h01 = s * s * (three - two * s);
        let h11 = s * s * (s - one);
        h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1
    }

    /// Transplant `amp · w(scale · r)` onto a radial grid, active components
    /// only.
    pub fn field_on(
        &self,
        domain: &Arc<Domain<T>>,
        m: usize,
        active: &[bool],
        scale: T,
        amp: T,
    ) -> Field<T> {
        Field::from_radial_fn(domain.clone(), m, |j, r| {
            if active[j] {
                amp * self.w_at(scale * r)
            } else {
                T::zero()
            }
        })
    }

    pub fn summary(&self) -> GnSummary<T> {
        GnSummary {
            n_dim: self.n_dim,
            two_sharp: self.two_sharp,
            w0: self.w0,
            mass_w: self.mass_w,
            c: self.c_gn,
        }
    }
}

/// Composite Simpson on a uniform grid (trapezoid correction on the last
/// interval when the interval count is odd).
fn simpson<T: Scalar>(f: &[T], h: T) -> T {
    let n = f.len();
    if n < 2 {
        return T::zero();
    }
    let mut acc = T::zero();
    let mut i = 0;
    while i + 2 < n {
        acc += h / lit(3.0) * (f[i] + lit::<T>(4.0) * f[i + 1] + f[i + 2]);
        i += 2;
    }
    if i + 1 < n {
        acc += h * lit::<T>(0.5) * (f[i] + f[i + 1]);
    }
    acc
}

// ---------------------------------------------------------------------------
// Energy and its gradient
// ---------------------------------------------------------------------------

fn check_compat<T: Scalar>(f: &Nonlinearity<T>, u: &Field<T>) -> Result<()> {
    if f.m() != u.m() {
        return Err(Error::Config(format!(
            "nonlinearity has M = {} but field has M = {}",
            f.m(),
            u.m()
        )));
    }
    if f.n_dim() != u.domain().n_dim() {
        return Err(Error::Config(format!(
            "nonlinearity has N = {} but domain has N = {}",
            f.n_dim(),
            u.domain().n_dim()
        )));
    }
    Ok(())
}

/// J(u) = ∫ ½|∇u|² − F(u) dx on the field's domain.
pub fn energy<T: Scalar>(f: &Nonlinearity<T>, u: &Field<T>) -> Result<T> {
    check_compat(f, u)?;
    let kinetic = u.total_grad_norm_sq() * lit::<T>(0.5);
    Ok(kinetic - integrate_f(f, u)?)
}

/// ∫ F(u) dx.
pub fn integrate_f<T: Scalar>(f: &Nonlinearity<T>, u: &Field<T>) -> Result<T> {
    let n = u.domain().node_count();
    let m = u.m();
    let mut point = vec![T::zero(); m];
    let mut vals = vec![T::zero(); n];
    for i in 0..n {
        for (j, p) in point.iter_mut().enumerate() {
            *p = u.components()[j][i];
        }
        vals[i] = f.value(&point);
    }
    u.domain().integrate(&vals)
}

/// Unconstrained L²-gradient of J: component j is −Δu_j − ∂_jF(u).
pub fn energy_gradient<T: Scalar>(f: &Nonlinearity<T>, u: &Field<T>) -> Result<Field<T>> {
    check_compat(f, u)?;
    let n = u.domain().node_count();
    let m = u.m();
    let mut comps: Vec<Vec<T>> = Vec::with_capacity(m);
    for j in 0..m {
        let lap = u.laplacian(j)?;
        comps.push(lap.into_iter().map(|v| -v).collect());
    }
    let mut point = vec![T::zero(); m];
    let mut grad = vec![T::zero(); m];
    for i in 0..n {
        for (j, p) in point.iter_mut().enumerate() {
            *p = u.components()[j][i];
        }
        f.grad_into(&point, &mut grad);
        for (j, comp) in comps.iter_mut().enumerate() {
            comp[i] -= grad[j];
        }
    }
    Ok(Field::from_parts(u.domain().clone(), comps))
}

/// Lagrange multipliers extracted by pairing the Euler–Lagrange equation
/// with each component: λ_j = (∫ ∂_jF(u) u_j − |∇u_j|₂²) / |u_j|₂².
/// Also returns the normalized PDE residual, so λ is never trusted far from
/// a critical point.
pub fn multipliers<T: Scalar>(f: &Nonlinearity<T>, u: &Field<T>) -> Result<(Vec<T>, T)> {
    check_compat(f, u)?;
    let n = u.domain().node_count();
    let m = u.m();
    let masses = u.masses();
    for (j, &mj) in masses.iter().enumerate() {
        if !(mj > T::zero()) {
            return Err(Error::ComponentOutOfRange { j, m });
        }
    }
    let mut point = vec![T::zero(); m];
    let mut grad = vec![T::zero(); m];
    let mut grads_f: Vec<Vec<T>> = vec![vec![T::zero(); n]; m];
    for i in 0..n {
        for (j, p) in point.iter_mut().enumerate() {
            *p = u.components()[j][i];
        }
        f.grad_into(&point, &mut grad);
        for (j, gf) in grads_f.iter_mut().enumerate() {
            gf[i] = grad[j];
        }
    }
    let mut lambda = vec![T::zero(); m];
    for j in 0..m {
        let prod: Vec<T> = (0..n)
            .map(|i| grads_f[j][i] * u.components()[j][i])
            .collect();
        let pairing = u.domain().integrate(&prod)?;
        lambda[j] = (pairing - u.grad_norm_sq(j)?) / masses[j];
    }

    // residual ‖-Δu_j + λ_j u_j − ∂_jF(u)‖₂ over the H¹ scale
    let mut res_sq = T::zero();
    let mut scale_sq = T::zero();
    for j in 0..m {
        let lap = u.laplacian(j)?;
        let res: Vec<T> = (0..n)
            .map(|i| {
                let r = -lap[i] + lambda[j] * u.components()[j][i] - grads_f[j][i];
                r * r
            })
            .collect();
        res_sq += u.domain().integrate(&res)?;
        scale_sq += u.grad_norm_sq(j)? + masses[j];
    }
    let residual = res_sq.sqrt() / T::one().max(scale_sq.sqrt());
    Ok((lambda, residual))
}

/// Normalized Pohozaev residual
/// `[(N−2) Σ|∇u_j|₂² + N Σ λ_j|u_j|₂² − 2N ∫F(u)] / (N max(1, Σ|∇u_j|₂²))`;
/// at λ = 0 the numerator is the plain dilation identity.
pub fn pohozaev_residual<T: Scalar>(
    f: &Nonlinearity<T>,
    u: &Field<T>,
    lambda: &[T],
) -> Result<T> {
    check_compat(f, u)?;
    let n_dim = lit::<T>(u.domain().n_dim() as f64);
    let gradsq = u.total_grad_norm_sq();
    let mut mass_term = T::zero();
    for (j, &l) in lambda.iter().enumerate() {
        mass_term += l * u.mass(j)?;
    }
    let f_int = integrate_f(f, u)?;
    let two = lit::<T>(2.0);
    let numer = (n_dim - two) * gradsq + n_dim * mass_term - two * n_dim * f_int;
    Ok(numer / (n_dim * T::one().max(gradsq)))
}

/// Gagliardo–Nirenberg ratio |u|_{2#} / (C |u|₂^{1−δ} |∇u|₂^δ) for a
/// single-component field; ≤ 1 + grid tolerance for every u, = 1 at u = w.
pub fn gn_check<T: Scalar>(gn: &GnData<T>, u: &Field<T>) -> Result<T> {
    if u.m() != 1 {
        return Err(Error::ComponentOutOfRange { j: 1, m: u.m() });
    }
    let mass = u.mass(0)?;
    if !(mass > T::zero()) {
        return Err(Error::ZeroField);
    }
    let q = gn.two_sharp;
    let delta = gn.delta();
    let lp = u.lp_norm(q)?;
    let l2 = mass.sqrt();
    let grad = u.grad_norm_sq(0)?.sqrt();
    Ok(lp / (gn.c_gn * l2.powf(T::one() - delta) * grad.powf(delta)))
}

// ---------------------------------------------------------------------------
// Mass thresholds and the coercivity bound
// ---------------------------------------------------------------------------

/// Outcome of the two mass-threshold conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// `2 η∞ C^{2#} |a|^{4/N} < 1` (the coercivity condition).
    pub etas_ok: bool,
    /// `2 η₀ C^{2#} M^{2/N} min_j a_j^{4/N} > 1` (the negativity condition).
    pub etal_ok: bool,
    pub lhs_etas: f64,
    pub lhs_etal: f64,
    pub eta0: f64,
    pub eta_inf: f64,
    /// Whether an η value came from the sampling estimator rather than the
    /// catalogue.
    pub estimated: bool,
}

fn eta_or_estimate<T: Scalar>(
    f: &Nonlinearity<T>,
    side: EtaSide,
    allow_estimate: bool,
) -> Result<(Eta<T>, bool)> {
    let analytic = match side {
        EtaSide::Zero => f.eta0(),
        EtaSide::Infinity => f.eta_inf(),
    };
    match analytic {
        Ok(e) => Ok((e, false)),
        Err(err) => {
            if !allow_estimate {
                return Err(err);
            }
            let est = f.eta_estimate(side, &f.default_radii(side))?;
            Ok((Eta::Finite(est.value), true))
        }
    }
}

/// Evaluate the two mass-threshold conditions, with η∞ = 0 (resp. η₀ = ∞)
/// short-circuiting the corresponding condition.
pub fn check_thresholds<T: Scalar>(
    f: &Nonlinearity<T>,
    a: &MassSpec<T>,
    gn: &GnData<T>,
    allow_estimate: bool,
) -> Result<ThresholdReport> {
    if a.len() != f.m() {
        return Err(Error::Config(format!(
            "mass tuple has {} components but M = {}",
            a.len(),
            f.m()
        )));
    }
    let (eta0, est0) = eta_or_estimate(f, EtaSide::Zero, allow_estimate)?;
    let (eta_inf, est_inf) = eta_or_estimate(f, EtaSide::Infinity, allow_estimate)?;
    let q = gn.two_sharp;
    let c_pow = gn.c_gn.powf(q);
    let two = lit::<T>(2.0);
    let four_over_n = lit::<T>(4.0 / gn.n_dim as f64);
    let m_pow = lit::<T>(f.m() as f64).powf(two / lit::<T>(gn.n_dim() as f64));

    let (etas_ok, lhs_etas) = match eta_inf {
        Eta::Infinity => (false, f64::INFINITY),
        Eta::NegInfinity => (true, f64::NEG_INFINITY),
        Eta::Finite(v) => {
            let lhs = two * v * c_pow * a.norm().powf(four_over_n);
            (lhs < T::one(), lhs.as_f64())
        }
    };
    let (etal_ok, lhs_etal) = match eta0 {
        Eta::Infinity => (true, f64::INFINITY),
        Eta::NegInfinity => (false, f64::NEG_INFINITY),
        Eta::Finite(v) => {
            let lhs = two * v * c_pow * m_pow * a.min_positive().powf(four_over_n);
            (lhs > T::one(), lhs.as_f64())
        }
    };
    Ok(ThresholdReport {
        etas_ok,
        etal_ok,
        lhs_etas,
        lhs_etal,
        eta0: eta0.as_f64(),
        eta_inf: eta_inf.as_f64(),
        estimated: est0 || est_inf,
    })
}

/// Constants of the sampled coercivity bound
/// `J(u) ≥ (½ − (ε+η∞) a^{4/N} C^{2#}) |∇u|₂² − c_ε a²` on 𝒟(a):
/// ε is half the margin of the coercivity threshold, and c_ε is fitted by
/// sampling `F(u) ≤ c_ε|u|² + (ε+η∞)|u|^{2#}` over moduli decades.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoercivityBound<T> {
    pub epsilon: T,
    pub c_eps: T,
    /// ½ − (ε+η∞) a^{4/N} C^{2#}, strictly positive under the threshold.
    pub kinetic_coeff: T,
    pub eta_inf: T,
}

pub fn coercivity_bound<T: Scalar>(
    f: &Nonlinearity<T>,
    a: &MassSpec<T>,
    gn: &GnData<T>,
    allow_estimate: bool,
) -> Result<CoercivityBound<T>> {
    let (eta_inf, _) = eta_or_estimate(f, EtaSide::Infinity, allow_estimate)?;
    let eta_inf = match eta_inf {
        Eta::Finite(v) => v.max(T::zero()),
        Eta::NegInfinity => T::zero(),
        Eta::Infinity => {
            return Err(Error::ThresholdViolated {
                which: "coercivity",
                lhs: f64::INFINITY,
            })
        }
    };
    let q = gn.two_sharp;
    let half = lit::<T>(0.5);
    let a_pow = a.norm().powf(lit::<T>(4.0 / gn.n_dim as f64));
    let c_pow = gn.c_gn.powf(q);
    let margin = half - eta_inf * a_pow * c_pow;
    if !(margin > T::zero()) {
        return Err(Error::ThresholdViolated {
            which: "coercivity",
            lhs: (lit::<T>(2.0) * eta_inf * a_pow * c_pow).as_f64(),
        });
    }
    let epsilon = margin / (lit::<T>(2.0) * a_pow * c_pow);
    // fit c_ε by sampling the pointwise bound over moduli decades
    let mut c_eps = T::zero();
    let dirs: Vec<Vec<T>> = match f.m() {
        1 => vec![vec![T::one()]],
        m => {
            let mut d: Vec<Vec<T>> = (0..m)
                .map(|j| {
                    let mut v = vec![T::zero(); m];
                    v[j] = T::one();
                    v
                })
                .collect();
            d.push(vec![lit::<T>(1.0 / (m as f64)).sqrt(); m]);
            d
        }
    };
    for k in -40..=16 {
        let r = lit::<T>(10f64.powf(k as f64 * 0.25));
        for dir in &dirs {
            let u: Vec<T> = dir.iter().map(|&d| r * d).collect();
            let excess = f.value(&u) - (epsilon + eta_inf) * r.powf(q);
            if excess > T::zero() {
                c_eps = c_eps.max(excess / (r * r));
            }
        }
    }
    Ok(CoercivityBound {
        epsilon,
        c_eps,
        kinetic_coeff: half - (epsilon + eta_inf) * a_pow * c_pow,
        eta_inf,
    })
}

// ---------------------------------------------------------------------------
// Negative-energy trial construction
// ---------------------------------------------------------------------------

/// A trial field with J(u) < 0 together with the dilation parameters that
/// produced it.
#[derive(Debug, Clone)]
pub struct TrialField<T> {
    pub field: Field<T>,
    /// Spatial concentration w(t·) of the soliton seed.
    pub t: T,
    /// Mass-preserving dilation applied on top of the seed.
    pub s: T,
    pub energy: T,
}

/// Construct u ∈ 𝒟(a) with J(u) < 0 from the soliton seed
/// `W_j = w(t·)/√M*` (active components only), scanning the admissible
/// t-interval and mass-preserving dilations s ⋆ u.
///
/// Errors with [`Error::TrialIntervalEmpty`] when the interval vanishes (mass
/// below the admissible range) and [`Error::TrialScanFailed`] when no sample
/// turns the energy negative.
pub fn trial_negative<T: Scalar>(
    f: &Nonlinearity<T>,
    a: &MassSpec<T>,
    gn: &GnData<T>,
    domain: &Arc<Domain<T>>,
) -> Result<TrialField<T>> {
    if a.len() != f.m() {
        return Err(Error::Config(format!(
            "mass tuple has {} components but M = {}",
            a.len(),
            f.m()
        )));
    }
    if domain.kind() != DomainKind::RadialN {
        return Err(Error::DomainKind {
            expected: "RadialN",
            got: domain.kind().name(),
        });
    }
    let (eta0, _) = eta_or_estimate(f, EtaSide::Zero, true)?;
    let q = gn.two_sharp;
    let n_t = lit::<T>(gn.n_dim as f64);
    let m_star = a.active();
    let m_star_t = lit::<T>(m_star as f64);
    let active: Vec<bool> = a.values().iter().map(|v| *v > T::zero()).collect();

    // mass fit: |W_j(t·)|₂² = |w|₂²/(M* tᴺ) ≤ a_j² for the smallest a_j
    let a_min = a.min_positive();
    let t_lo = (gn.mass_w / (m_star_t * a_min * a_min)).powf(T::one() / n_t);
    let t_hi = match eta0 {
        Eta::Infinity => T::infinity(),
        Eta::Finite(v) if v > T::zero() => (q * v).sqrt(),
        _ => {
            return Err(Error::TrialIntervalEmpty {
                lower: t_lo.as_f64(),
                upper: 0.0,
            })
        }
    };
    if t_lo >= t_hi {
        return Err(Error::TrialIntervalEmpty {
            lower: t_lo.as_f64(),
            upper: t_hi.as_f64(),
        });
    }

    let amp0 = T::one() / m_star_t.sqrt();
    let t_samples: Vec<T> = if t_hi.is_finite() {
        (0..8)
            .map(|k| t_lo + (t_hi - t_lo) * lit::<T>(k as f64 / 8.0))
            .collect()
    } else {
        [1.0, 1.5, 2.0, 3.0, 5.0]
            .iter()
            .map(|&c| t_lo * lit(c))
            .collect()
    };
    let mut tried = 0usize;
    for &t in &t_samples {
        // s ⋆ u built directly from the profile: s^{N/2} w(t s x) / √M*
        for k in 0..=28 {
            let s = lit::<T>(2f64.powf(-(k as f64) / 2.0));
            let amp = amp0 * s.powf(n_t / lit(2.0));
            let u = gn.field_on(domain, f.m(), &active, t * s, amp);
            tried += 1;
            let j = energy(f, &u)?;
            if j < -lit::<T>(1e-12) {
                return Ok(TrialField {
                    field: u,
                    t,
                    s,
                    energy: j,
                });
            }
        }
    }
    Err(Error::TrialScanFailed { tried })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlin::{NonlinearTerm, StructuralForm};
    use approx::assert_relative_eq;
    use std::sync::OnceLock;

    fn gn1() -> &'static GnData<f64> {
        static GN: OnceLock<GnData<f64>> = OnceLock::new();
        GN.get_or_init(|| GnData::solve(1, &SolitonOptions::default()).unwrap())
    }

    fn cubic() -> Nonlinearity<f64> {
        Nonlinearity::single_power(1, 1.0, 4.0).unwrap()
    }

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    /// A sech(Bx) with A² = 2B² solving -u'' + B²u = u³.
    fn sech_soliton(domain: &Arc<Domain<f64>>, b: f64) -> Field<f64> {
        let a = (2.0 * b * b).sqrt();
        Field::from_radial_fn(domain.clone(), 1, |_, r| a * sech(b * r))
    }

    #[test]
    fn soliton_n1_analytic() {
        let gn = gn1();
        // w(x) = 6^{1/4} sech^{1/2}(2√2 x)
        assert!((gn.w0() - 6f64.powf(0.25)).abs() < 1e-5, "w0 = {}", gn.w0());
        let mass_exact = std::f64::consts::PI * 3f64.sqrt() / 2.0;
        assert!(
            (gn.mass_w() - mass_exact).abs() < 1e-5,
            "mass = {}",
            gn.mass_w()
        );
        let c6 = gn.c_gn().powi(6);
        let c6_exact = 4.0 / std::f64::consts::PI.powi(2);
        assert!((c6 - c6_exact).abs() < 1e-5, "C⁶ = {c6}");
    }

    #[test]
    fn soliton_shooting_second_order() {
        let exact = 6f64.powf(0.25);
        let err_at = |h: f64| {
            let gn = GnData::<f64>::solve(
                1,
                &SolitonOptions {
                    ode_step: h,
                    ..Default::default()
                },
            )
            .unwrap();
            (gn.w0() - exact).abs()
        };
        let e1 = err_at(4e-3);
        let e2 = err_at(2e-3);
        let ratio = e1 / e2;
        assert!(
            ratio > 2.8 && ratio < 5.5,
            "halving the ODE step should quarter the w(0) error, got x{ratio}"
        );
    }

    #[test]
    fn kwong_profile_satisfies_its_ode_on_grid() {
        let gn = gn1();
        let d = Domain::<f64>::radial(1, 16.0, 4096).unwrap();
        let w = gn.field_on(&d, 1, &[true], 1.0, 1.0);
        let lap = w.laplacian(0).unwrap();
        let vals = w.component(0).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..4096 {
            let r = d.axis_nodes()[i];
            if r > 10.0 {
                break;
            }
            let res = -lap[i] + 2.0 * vals[i] - vals[i].abs().powi(5);
            worst = worst.max(res.abs());
        }
        let h2 = d.h() * d.h();
        assert!(worst < 2e3 * h2, "worst residual {worst} vs h² = {h2}");
    }

    #[test]
    fn gn_ratio_one_at_soliton_and_scale_invariant() {
        let gn = gn1();
        let d = Domain::<f64>::radial(1, 16.0, 4096).unwrap();
        let w = gn.field_on(&d, 1, &[true], 1.0, 1.0);
        let ratio = gn_check(gn, &w).unwrap();
        assert!((ratio - 1.0).abs() < 1e-4, "ratio at w: {ratio}");
        for s in [0.7, 1.4] {
            let ws = w.dilate(s).unwrap();
            let rs = gn_check(gn, &ws).unwrap();
            assert!((rs - ratio).abs() < 1e-4, "scale invariance at s={s}: {rs}");
        }
    }

    #[test]
    fn gn_ratio_below_one_for_gaussian() {
        let gn = gn1();
        let d = Domain::<f64>::radial(1, 16.0, 2048).unwrap();
        let g = Field::from_radial_fn(d, 1, |_, r| (-r * r).exp());
        let ratio = gn_check(gn, &g).unwrap();
        assert!(ratio < 1.0, "Gaussian ratio {ratio}");
    }

    #[test]
    fn gn_check_rejects_zero_field() {
        let gn = gn1();
        let d = Domain::<f64>::radial(1, 16.0, 256).unwrap();
        let z = Field::zeros(d, 1);
        assert!(gn_check(gn, &z).is_err());
    }

    #[test]
    fn energy_of_zero_field_is_zero() {
        let d = Domain::<f64>::radial(1, 16.0, 256).unwrap();
        let z = Field::zeros(d, 1);
        assert_eq!(energy(&cubic(), &z).unwrap(), 0.0);
    }

    #[test]
    fn energy_of_cubic_soliton() {
        // J = -(2/3)B³ at mass 4B; B = 1/4 → J = -1/96
        let d = Domain::<f64>::radial(1, 80.0, 8192).unwrap();
        let u = sech_soliton(&d, 0.25);
        let j = energy(&cubic(), &u).unwrap();
        assert!((j + 1.0 / 96.0).abs() < 1e-5, "J = {j}");
    }

    #[test]
    fn energy_dilation_curve() {
        // J(s⋆u) = s²∫½|∇u|² − s^{-N}∫F(s^{N/2}u) along the dilation curve
        let d = Domain::<f64>::radial(1, 60.0, 8192).unwrap();
        let f = cubic();
        let u = Field::from_radial_fn(d.clone(), 1, |_, r| 0.8 * (-0.1 * r * r).exp());
        let kin = 0.5 * u.total_grad_norm_sq();
        for &s in &[0.5, 0.8, 1.2, 2.0] {
            let us = u.dilate(s).unwrap();
            let lhs = energy(&f, &us).unwrap();
            // right side evaluated directly on the amplified profile
            let amp = Field::from_radial_fn(d.clone(), 1, |_, r| {
                s.powf(0.5) * 0.8 * (-0.1 * r * r).exp()
            });
            let rhs = s * s * kin - integrate_f(&f, &amp).unwrap() / s;
            assert!(
                ((lhs - rhs) / rhs.abs().max(1e-6)).abs() < 1e-3,
                "s = {s}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gradient_vanishes_at_soliton_with_multiplier() {
        let d = Domain::<f64>::radial(1, 80.0, 8192).unwrap();
        let u = sech_soliton(&d, 0.25);
        let g = energy_gradient(&cubic(), &u).unwrap();
        let lambda = 0.0625; // B²
        let n = d.node_count();
        let el: Vec<f64> = (0..n)
            .map(|i| g.component(0).unwrap()[i] + lambda * u.component(0).unwrap()[i])
            .collect();
        let sq: Vec<f64> = el.iter().map(|v| v * v).collect();
        let res = d.integrate(&sq).unwrap().sqrt();
        assert!(res < 1e-4, "EL residual {res}");
    }

    #[test]
    fn gradient_of_zero_field() {
        let d = Domain::<f64>::radial(1, 16.0, 128).unwrap();
        let z = Field::zeros(d, 1);
        let g = energy_gradient(&cubic(), &z).unwrap();
        assert!(g.component(0).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_directional_derivative() {
        let d = Domain::<f64>::radial(1, 30.0, 2048).unwrap();
        let f = cubic();
        let u = Field::from_radial_fn(d.clone(), 1, |_, r| 0.7 * (-0.2 * r * r).exp());
        let v = Field::from_radial_fn(d.clone(), 1, |_, r| {
            0.3 * (-0.15 * (r - 2.0) * (r - 2.0)).exp()
        });
        let g = energy_gradient(&f, &u).unwrap();
        let pairing = g.inner(&v).unwrap();
        let eps = 1e-5;
        let shift = |sign: f64| {
            Field::from_parts(
                d.clone(),
                vec![u
                    .component(0)
                    .unwrap()
                    .iter()
                    .zip(v.component(0).unwrap())
                    .map(|(&a, &b)| a + sign * eps * b)
                    .collect()],
            )
        };
        let fd = (energy(&f, &shift(1.0)).unwrap() - energy(&f, &shift(-1.0)).unwrap())
            / (2.0 * eps);
        assert_relative_eq!(pairing, fd, max_relative = 1e-5);
    }

    #[test]
    fn multipliers_cubic_soliton() {
        let d = Domain::<f64>::radial(1, 80.0, 8192).unwrap();
        let u = sech_soliton(&d, 0.25); // mass 1
        let (lambda, res) = multipliers(&cubic(), &u).unwrap();
        assert!((lambda[0] - 1.0 / 16.0).abs() < 1e-4, "λ = {}", lambda[0]);
        assert!(res < 1e-3, "residual {res}");
    }

    #[test]
    fn multipliers_report_noncritical_points() {
        let d = Domain::<f64>::radial(1, 80.0, 4096).unwrap();
        let u = sech_soliton(&d, 0.25).dilate(1.5).unwrap();
        let (_, res) = multipliers(&cubic(), &u).unwrap();
        assert!(res > 1e-2, "dilated soliton is not a critical point: {res}");
    }

    #[test]
    fn multipliers_kwong() {
        let gn = gn1();
        let d = Domain::<f64>::radial(1, 20.0, 8192).unwrap();
        let w = gn.field_on(&d, 1, &[true], 1.0, 1.0);
        // F = |u|^{2#}/2# pairs with the defining equation at λ = 2/N
        let f = Nonlinearity::new(
            1,
            1,
            StructuralForm::Single,
            vec![NonlinearTerm::Power {
                comp: 0,
                nu: 1.0,
                p: 6.0,
            }],
        )
        .unwrap();
        let (lambda, res) = multipliers(&f, &w).unwrap();
        assert!((lambda[0] - 2.0).abs() < 1e-3, "λ = {}", lambda[0]);
        assert!(res < 1e-3);
    }

    #[test]
    fn pohozaev_examples() {
        // cubic sech soliton at λ = B²
        let d = Domain::<f64>::radial(1, 80.0, 8192).unwrap();
        let u = sech_soliton(&d, 0.25);
        let r = pohozaev_residual(&cubic(), &u, &[0.0625]).unwrap();
        assert!(r.abs() < 1e-5, "cubic residual {r}");

        // zero field, arbitrary λ
        let z = Field::zeros(d.clone(), 1);
        assert_eq!(pohozaev_residual(&cubic(), &z, &[3.0]).unwrap(), 0.0);

        // Kwong soliton with F = |u|^{2#}/2#, λ = 2/N
        let gn = gn1();
        let w = gn.field_on(&d, 1, &[true], 1.0, 1.0);
        let f6 = Nonlinearity::new(
            1,
            1,
            StructuralForm::Single,
            vec![NonlinearTerm::Power {
                comp: 0,
                nu: 1.0,
                p: 6.0,
            }],
        )
        .unwrap();
        let rk = pohozaev_residual(&f6, &w, &[2.0]).unwrap();
        assert!(rk.abs() < 5e-3, "Kwong residual {rk}");
    }

    #[test]
    fn thresholds_min_integral_flip_at_soliton_norm() {
        // 2(1/6)C⁶ a⁴ > 1 ⟺ a > (3π²/4)^{1/4} = |w|₂ ≈ 1.64945
        let gn = gn1();
        let f = Nonlinearity::<f64>::min_integral(1, 4.0).unwrap();
        let a_crit = gn.mass_w().sqrt();
        assert!((a_crit - 1.64945).abs() < 1e-4);
        let below =
            check_thresholds(&f, &MassSpec::new(vec![a_crit * 0.99]).unwrap(), gn, false).unwrap();
        assert!(!below.etal_ok);
        assert!(below.etas_ok); // η∞ = 0 short-circuits
        assert_eq!(below.lhs_etas, 0.0);
        let above =
            check_thresholds(&f, &MassSpec::new(vec![a_crit * 1.01]).unwrap(), gn, false).unwrap();
        assert!(above.etal_ok);
    }

    #[test]
    fn thresholds_infinite_eta0_always_ok() {
        let gn = gn1();
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power {
                    comp: 0,
                    nu: 1.0,
                    p: 4.0,
                },
                NonlinearTerm::Power {
                    comp: 1,
                    nu: 1.0,
                    p: 4.0,
                },
            ],
        )
        .unwrap();
        let rep =
            check_thresholds(&f, &MassSpec::new(vec![0.01, 0.01]).unwrap(), gn, false).unwrap();
        assert!(rep.etal_ok);
        assert_eq!(rep.lhs_etal, f64::INFINITY);
    }

    #[test]
    fn trial_negative_min_integral() {
        let gn = gn1();
        let f = Nonlinearity::<f64>::min_integral(1, 4.0).unwrap();
        let d = Domain::<f64>::radial(1, 48.0, 4096).unwrap();
        // a = 2 > |w|₂: the t-interval is nonempty and the scan succeeds
        let trial = trial_negative(&f, &MassSpec::new(vec![2.0]).unwrap(), gn, &d).unwrap();
        assert!(trial.energy < 0.0);
        assert!(trial.field.mass(0).unwrap() <= 4.0 + 1e-6);
        // a = 1 < |w|₂: empty interval
        match trial_negative(&f, &MassSpec::new(vec![1.0]).unwrap(), gn, &d) {
            Err(Error::TrialIntervalEmpty { lower, upper }) => {
                assert!(lower > upper);
            }
            other => panic!("expected empty interval, got {other:?}"),
        }
    }

    #[test]
    fn trial_negative_subcritical_any_mass() {
        let gn = gn1();
        let f = cubic(); // η₀ = ∞: the s-scan succeeds for any a > 0
        let d = Domain::<f64>::radial(1, 48.0, 4096).unwrap();
        for a in [0.7, 1.0, 2.5] {
            let trial = trial_negative(&f, &MassSpec::new(vec![a]).unwrap(), gn, &d).unwrap();
            assert!(trial.energy < 0.0, "a = {a}");
        }
    }

    #[test]
    fn trial_negative_zero_component() {
        let gn = gn1();
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power {
                    comp: 0,
                    nu: 1.0,
                    p: 4.0,
                },
                NonlinearTerm::Power {
                    comp: 1,
                    nu: 1.0,
                    p: 4.0,
                },
            ],
        )
        .unwrap();
        let d = Domain::<f64>::radial(1, 48.0, 4096).unwrap();
        let a = MassSpec::with_zeros(vec![1.0, 0.0]).unwrap();
        let trial = trial_negative(&f, &a, gn, &d).unwrap();
        assert!(trial.energy < 0.0);
        assert_eq!(trial.field.mass(1).unwrap(), 0.0);
    }

    #[test]
    fn coercivity_bound_on_sampled_fields() {
        use rand::{Rng, SeedableRng};
        let gn = gn1();
        let f = Nonlinearity::<f64>::min_integral(1, 4.0).unwrap();
        let a = MassSpec::new(vec![2.0]).unwrap();
        let bound = coercivity_bound(&f, &a, gn, false).unwrap();
        assert!(bound.kinetic_coeff > 0.0);
        let d = Domain::<f64>::radial(1, 30.0, 1024).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let amp: f64 = rng.gen_range(0.1..2.0);
            let width: f64 = rng.gen_range(0.3..2.0);
            let center: f64 = rng.gen_range(0.0..8.0);
            let u = Field::from_radial_fn(d.clone(), 1, |_, r| {
                amp * (-(r - center) * (r - center) / (2.0 * width * width)).exp()
            });
            // scale into 𝒟(a)
            let m = u.mass(0).unwrap().sqrt();
            let u = if m > 2.0 {
                Field::from_parts(
                    d.clone(),
                    vec![u
                        .component(0)
                        .unwrap()
                        .iter()
                        .map(|v| v * 2.0 / m)
                        .collect()],
                )
            } else {
                u
            };
            let j = energy(&f, &u).unwrap();
            let rhs = bound.kinetic_coeff * u.total_grad_norm_sq() - bound.c_eps * 4.0;
            assert!(
                j >= rhs - 1e-9,
                "coercivity bound violated: J = {j}, bound = {rhs}"
            );
        }
    }

    #[test]
    fn mass_spec_validation() {
        assert!(MassSpec::new(vec![1.0, 0.0]).is_err());
        assert!(MassSpec::new(vec![-1.0]).is_err());
        assert!(MassSpec::<f64>::with_zeros(vec![0.0, 0.0]).is_err());
        assert!(MassSpec::with_zeros(vec![1.0, 0.0]).is_ok());
        let a = MassSpec::new(vec![3.0, 4.0]).unwrap();
        assert_eq!(a.norm(), 5.0);
        assert_eq!(a.min_positive(), 3.0);
    }
}
