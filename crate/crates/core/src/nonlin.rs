//! Symbolic nonlinearities F with evaluators, the catalogued example
//! families, and the hypothesis / growth-limit checkers.
//!
//! A [`Nonlinearity`] is a sum of [`NonlinearTerm`]s, each an even function
//! of the component moduli. The two growth limits
//!
//! ```text
//!     η₀ = liminf_{u→0}  F(u)/|u|^{2#},    η∞ = limsup_{|u|→∞} F(u)/|u|^{2#},
//! ```
//!
//! with `2# = 2 + 4/N`, drive the mass-threshold conditions. The catalogue
//! returns them analytically where a closed form is known and reports
//! "unavailable" otherwise, in which case [`Nonlinearity::eta_estimate`]
//! samples the ratio over direction grids on spheres |u| = R.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};

const ORDER_EPS: f64 = 1e-9;

/// One additive term of F. All variants are even in each argument.
#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearTerm<T> {
    /// `(ν/p) |u_j|^p`
    Power { comp: usize, nu: T, p: T },
    /// `α ∏_j |u_j|^{r_j}` with `r_j = 0` skipping a component
    PowerProduct { alpha: T, exponents: Vec<T> },
    /// `∫₀^{|u_j|} min{t^{2#}, t^p} dt`
    MinIntegral { comp: usize, p: T },
    /// The piecewise profile with finite positive limits at 0 and ∞:
    /// `t^{2#}/2#` for t ≤ 1, `t − 1 + 1/2#` for 1 < t < 2,
    /// `t^{2#}/(2^{2#-1} 2#) + 1 − 1/2#` for t ≥ 2.
    PiecewiseCritical { comp: usize },
    /// The compactly supported cusp profile equal to `−t²/ln t` near 0,
    /// which outgrows every power `t^p`, p > 2, at the origin.
    LogCusp { comp: usize },
    /// Sampled even C¹ profile with derivative, cubic-Hermite interpolated,
    /// constant beyond the last sample.
    Tabulated {
        comp: usize,
        ts: Vec<T>,
        vals: Vec<T>,
        derivs: Vec<T>,
    },
}

/// Declared structural form of F.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StructuralForm {
    /// M = 1, no structural constraint beyond the per-term ones.
    Single,
    /// `Σ_j F_j(u_j) + Σ_ℓ ∏_j F̃_{ℓ,j}(u_j)` with every product spanning
    /// all M components (coupling vanishes when any u_j = 0).
    FormA,
    /// `Σ_j F_j(u_j) + Σ_{i<j} F̃_{i,j}(u_i) F̃_{j,i}(u_j)` with pairwise
    /// couplings positive off 0.
    FormB,
    #[default]
    Generic,
}

/// Extended-real value of a growth limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Eta<T> {
    Finite(T),
    Infinity,
    NegInfinity,
}

impl<T: Scalar> Eta<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Eta::Finite(v) => Some(v),
            _ => None,
        }
    }
    pub fn is_infinite(self) -> bool {
        matches!(self, Eta::Infinity)
    }
    pub fn as_f64(self) -> f64 {
        match self {
            Eta::Finite(v) => v.as_f64(),
            Eta::Infinity => f64::INFINITY,
            Eta::NegInfinity => f64::NEG_INFINITY,
        }
    }
}

/// A sum of nonlinear terms together with M, N, and the declared form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "NonlinearitySpec<T>",
    into = "NonlinearitySpec<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Nonlinearity<T> {
    m: usize,
    n_dim: usize,
    two_sharp: T,
    form: StructuralForm,
    terms: Vec<NonlinearTerm<T>>,
}

impl<T: Scalar> Nonlinearity<T> {
    pub fn new(
        m: usize,
        n_dim: usize,
        form: StructuralForm,
        terms: Vec<NonlinearTerm<T>>,
    ) -> Result<Self> {
        if m < 1 || n_dim < 1 {
            return Err(Error::InvalidNonlinearity(format!(
                "need M >= 1 and N >= 1, got M = {m}, N = {n_dim}"
            )));
        }
        let two_sharp = lit::<T>(2.0) + lit::<T>(4.0) / lit::<T>(n_dim as f64);
        let nl = Nonlinearity {
            m,
            n_dim,
            two_sharp,
            form,
            terms,
        };
        nl.validate()?;
        Ok(nl)
    }

    fn validate(&self) -> Result<()> {
        let two = lit::<T>(2.0);
        let sobolev_sup: Option<T> = if self.n_dim >= 3 {
            Some(two * lit::<T>(self.n_dim as f64) / lit::<T>((self.n_dim - 2) as f64))
        } else {
            None
        };
        for term in &self.terms {
            match term {
                NonlinearTerm::Power { comp, p, .. } => {
                    self.check_comp(*comp)?;
                    if !(*p > two) || sobolev_sup.map_or(false, |s| *p >= s) {
                        return Err(Error::InvalidNonlinearity(format!(
                            "power exponent p = {p} outside (2, 2*)"
                        )));
                    }
                }
                NonlinearTerm::PowerProduct { alpha, exponents } => {
                    if exponents.len() != self.m {
                        return Err(Error::InvalidNonlinearity(format!(
                            "product exponent list has length {} but M = {}",
                            exponents.len(),
                            self.m
                        )));
                    }
                    if !(*alpha >= T::zero()) {
                        return Err(Error::InvalidNonlinearity(format!(
                            "product coefficient must be nonnegative, got {alpha}"
                        )));
                    }
                    let active: Vec<T> = exponents
                        .iter()
                        .copied()
                        .filter(|r| *r != T::zero())
                        .collect();
                    if active.is_empty() {
                        return Err(Error::InvalidNonlinearity(
                            "product term with no active component".into(),
                        ));
                    }
                    let total: T = active.iter().copied().sum();
                    // critical products must involve fewer than 2# components
                    if (total - self.two_sharp).abs() <= lit(ORDER_EPS)
                        && lit::<T>(active.len() as f64) >= self.two_sharp
                    {
                        return Err(Error::InvalidNonlinearity(format!(
                            "critical product with Σ r_j = 2# requires fewer than 2# = {} active components, got {}",
                            self.two_sharp,
                            active.len()
                        )));
                    }
                    if let Some(r) = active.iter().find(|r| !(**r > T::one())) {
                        return Err(Error::InvalidNonlinearity(format!(
                            "product exponents must exceed 1, got {r}"
                        )));
                    }
                }
                NonlinearTerm::MinIntegral { comp, p } => {
                    self.check_comp(*comp)?;
                    if !(*p > two && *p < self.two_sharp) {
                        return Err(Error::InvalidNonlinearity(format!(
                            "min-integral exponent p = {p} outside (2, 2#)"
                        )));
                    }
                }
                NonlinearTerm::PiecewiseCritical { comp } | NonlinearTerm::LogCusp { comp } => {
                    self.check_comp(*comp)?;
                }
                NonlinearTerm::Tabulated {
                    comp,
                    ts,
                    vals,
                    derivs,
                } => {
                    self.check_comp(*comp)?;
                    if ts.len() < 2 || ts.len() != vals.len() || ts.len() != derivs.len() {
                        return Err(Error::InvalidNonlinearity(
                            "tabulated profile needs matching ts/vals/derivs with >= 2 samples"
                                .into(),
                        ));
                    }
                    if ts[0] != T::zero() || vals[0] != T::zero() {
                        return Err(Error::InvalidNonlinearity(
                            "tabulated profile must start at F(0) = 0".into(),
                        ));
                    }
                    if ts.windows(2).any(|w| !(w[1] > w[0])) {
                        return Err(Error::InvalidNonlinearity(
                            "tabulated sample points must increase".into(),
                        ));
                    }
                }
            }
        }
        match self.form {
            StructuralForm::Single => {
                if self.m != 1 {
                    return Err(Error::FormViolation(format!(
                        "form \"single\" requires M = 1, got {}",
                        self.m
                    )));
                }
            }
            StructuralForm::FormA | StructuralForm::FormB => {
                for term in &self.terms {
                    match term {
                        NonlinearTerm::PowerProduct { exponents, .. } => {
                            let active = exponents.iter().filter(|r| **r != T::zero()).count();
                            if self.form == StructuralForm::FormA && active != self.m {
                                return Err(Error::FormViolation(
                                    "form (a) products must span all M components".into(),
                                ));
                            }
                            if self.form == StructuralForm::FormB && active != 2 {
                                return Err(Error::FormViolation(
                                    "form (b) couplings are pairwise: exactly 2 active components"
                                        .into(),
                                ));
                            }
                        }
                        _ => {
                            if !term_profile_nondecreasing(term) {
                                return Err(Error::FormViolation(
                                    "form (a)/(b) requires even nonnegative nondecreasing profiles"
                                        .into(),
                                ));
                            }
                            if let NonlinearTerm::Power { nu, .. } = term {
                                if *nu < T::zero() {
                                    return Err(Error::FormViolation(
                                        "form (a)/(b) power terms need ν >= 0".into(),
                                    ));
                                }
                            }
                        }
                    }
                }
            }
            StructuralForm::Generic => {}
        }
        Ok(())
    }

    fn check_comp(&self, comp: usize) -> Result<()> {
        if comp >= self.m {
            Err(Error::ComponentOutOfRange {
                j: comp,
                m: self.m,
            })
        } else {
            Ok(())
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    /// The L²-critical exponent 2# = 2 + 4/N.
    pub fn two_sharp(&self) -> T {
        self.two_sharp
    }

    pub fn form(&self) -> StructuralForm {
        self.form
    }

    pub fn terms(&self) -> &[NonlinearTerm<T>] {
        &self.terms
    }

    /// True when every axis profile is even, nonnegative, and nondecreasing
    /// and every coupling is a nonnegative product — the hypotheses under
    /// which Schwarz symmetrization cannot increase the energy.
    pub fn monotone_compatible(&self) -> bool {
        self.terms.iter().all(|t| match t {
            NonlinearTerm::PowerProduct { .. } => true, // α >= 0 enforced at build
            NonlinearTerm::Power { nu, .. } => *nu >= T::zero(),
            other => term_profile_nondecreasing(other),
        })
    }

    /// Pointwise F(u). Total function; `u` must have M entries.
    pub fn value(&self, u: &[T]) -> T {
        debug_assert_eq!(u.len(), self.m);
        let mut acc = T::zero();
        for term in &self.terms {
            acc += self.term_value(term, u);
        }
        acc
    }

    /// Pointwise gradient ∇F(u).
    pub fn grad(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.m];
        self.grad_into(u, &mut out);
        out
    }

    pub fn grad_into(&self, u: &[T], out: &mut [T]) {
        debug_assert_eq!(u.len(), self.m);
        for v in out.iter_mut() {
            *v = T::zero();
        }
        for term in &self.terms {
            self.term_grad_accum(term, u, out);
        }
    }

    fn term_value(&self, term: &NonlinearTerm<T>, u: &[T]) -> T {
        match term {
            NonlinearTerm::Power { comp, nu, p } => {
                let x = u[*comp].abs();
                *nu / *p * x.powf(*p)
            }
            NonlinearTerm::PowerProduct { alpha, exponents } => {
                if *alpha == T::zero() {
                    return T::zero();
                }
                let mut prod = *alpha;
                for (x, r) in u.iter().zip(exponents) {
                    if *r != T::zero() {
                        prod = prod * x.abs().powf(*r);
                    }
                }
                prod
            }
            NonlinearTerm::MinIntegral { comp, p } => {
                let x = u[*comp].abs();
                let q = self.two_sharp;
                let one = T::one();
                if x <= one {
                    x.powf(q + one) / (q + one)
                } else {
                    one / (q + one) + (x.powf(*p + one) - one) / (*p + one)
                }
            }
            NonlinearTerm::PiecewiseCritical { comp } => {
                piecewise_critical_value(u[*comp].abs(), self.two_sharp)
            }
            NonlinearTerm::LogCusp { comp } => log_cusp_value(u[*comp].abs()),
            NonlinearTerm::Tabulated { comp, ts, vals, derivs } => {
                hermite_eval(ts, vals, derivs, u[*comp].abs()).0
            }
        }
    }

    fn term_grad_accum(&self, term: &NonlinearTerm<T>, u: &[T], out: &mut [T]) {
        match term {
            NonlinearTerm::Power { comp, nu, p } => {
                let x = u[*comp];
                out[*comp] += *nu * x.abs().powf(*p - T::one()) * sign(x);
            }
            NonlinearTerm::PowerProduct { alpha, exponents } => {
                if *alpha == T::zero() {
                    return;
                }
                // ∂_k = α r_k |u_k|^{r_k-1} sgn(u_k) ∏_{j≠k} |u_j|^{r_j};
                // with r_k > 1 the derivative vanishes wherever any active
                // component vanishes.
                let zero_count = u
                    .iter()
                    .zip(exponents)
                    .filter(|(x, r)| **r != T::zero() && **x == T::zero())
                    .count();
                if zero_count > 0 {
                    return;
                }
                let mut prod = *alpha;
                for (x, r) in u.iter().zip(exponents) {
                    if *r != T::zero() {
                        prod = prod * x.abs().powf(*r);
                    }
                }
                for (k, r) in exponents.iter().enumerate() {
                    if *r != T::zero() {
                        out[k] += prod * *r / u[k].abs() * sign(u[k]);
                    }
                }
            }
            NonlinearTerm::MinIntegral { comp, p } => {
                let x = u[*comp];
                let ax = x.abs();
                let d = ax.powf(self.two_sharp).min(ax.powf(*p));
                out[*comp] += d * sign(x);
            }
            NonlinearTerm::PiecewiseCritical { comp } => {
                let x = u[*comp];
                out[*comp] += piecewise_critical_deriv(x.abs(), self.two_sharp) * sign(x);
            }
            NonlinearTerm::LogCusp { comp } => {
                let x = u[*comp];
                out[*comp] += log_cusp_deriv(x.abs()) * sign(x);
            }
            NonlinearTerm::Tabulated { comp, ts, vals, derivs } => {
                let x = u[*comp];
                out[*comp] += hermite_eval(ts, vals, derivs, x.abs()).1 * sign(x);
            }
        }
    }

    /// Gauge-invariant phase rate g_j = ∂_jF(|Φ|)/|Φ_j| used by the
    /// time-evolution splitting, with the 0/0 limit resolved to the
    /// profile's derivative limit at 0.
    pub fn phase_rate_into(&self, moduli: &[T], out: &mut [T]) {
        let floor = T::epsilon() * T::epsilon();
        let mut grad = vec![T::zero(); self.m];
        self.grad_into(moduli, &mut grad);
        for j in 0..self.m {
            out[j] = if moduli[j] > floor {
                grad[j] / moduli[j]
            } else {
                T::zero()
            };
        }
    }

    /// Derivative of the additive axis profile on component `j`:
    /// `f_j(t) = d/dt Σ_{axis terms on j} F_term(t)` for t ≥ 0.
    pub fn axis_derivative(&self, j: usize, t: T) -> T {
        let mut point = vec![T::zero(); self.m];
        point[j] = t;
        let mut out = vec![T::zero(); self.m];
        for term in &self.terms {
            if !matches!(term, NonlinearTerm::PowerProduct { .. }) {
                self.term_grad_accum(term, &point, &mut out);
            }
        }
        out[j]
    }
}

fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn piecewise_critical_value<T: Scalar>(t: T, q: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    if t <= one {
        t.powf(q) / q
    } else if t < two {
        t - one + one / q
    } else {
        t.powf(q) / (two.powf(q - one) * q) + one - one / q
    }
}

fn piecewise_critical_deriv<T: Scalar>(t: T, q: T) -> T {
    let one = T::one();
    let two = lit::<T>(2.0);
    if t <= one {
        t.powf(q - one)
    } else if t < two {
        one
    } else {
        t.powf(q - one) / two.powf(q - one)
    }
}

/// Constants of the cusp profile: b = 1/ln 2, c = b(b+2)/4 + 1.
fn log_cusp_constants<T: Scalar>() -> (T, T) {
    let b = T::one() / lit::<T>(2.0).ln();
    let c = b * (b + lit(2.0)) / lit(4.0) + T::one();
    (b, c)
}

fn log_cusp_value<T: Scalar>(t: T) -> T {
    let (b, c) = log_cusp_constants::<T>();
    let half = lit::<T>(0.5);
    let one = T::one();
    let two = lit::<T>(2.0);
    let four = lit::<T>(4.0);
    if t <= T::zero() {
        T::zero()
    } else if t < half {
        -(t * t) / t.ln()
    } else if t <= one {
        b / two * ((b + two) * t - half - b / two)
    } else if t <= c {
        -(t * t) + two * c * t - one - b / four * (b + one)
    } else if t <= two * c {
        log_cusp_value(two * c - t)
    } else {
        T::zero()
    }
}

fn log_cusp_deriv<T: Scalar>(t: T) -> T {
    let (b, c) = log_cusp_constants::<T>();
    let half = lit::<T>(0.5);
    let one = T::one();
    let two = lit::<T>(2.0);
    if t <= T::zero() {
        T::zero()
    } else if t < half {
        let l = t.ln();
        -two * t / l + t / (l * l)
    } else if t <= one {
        b / two * (b + two)
    } else if t <= c {
        -two * t + two * c
    } else if t <= two * c {
        -log_cusp_deriv(two * c - t)
    } else {
        T::zero()
    }
}

/// Cubic Hermite evaluation of (value, derivative); constant beyond the
/// sampled range.
fn hermite_eval<T: Scalar>(ts: &[T], vals: &[T], derivs: &[T], x: T) -> (T, T) {
    let n = ts.len();
    if x >= ts[n - 1] {
        return (vals[n - 1], T::zero());
    }
    if x <= ts[0] {
        return (vals[0], derivs[0]);
    }
    let mut lo = 0usize;
    let mut hi = n - 1;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if ts[mid] <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h = ts[hi] - ts[lo];
    let s = (x - ts[lo]) / h;
    let one = T::one();
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let six = lit::<T>(6.0);
    let (v0, v1, d0, d1) = (vals[lo], vals[hi], derivs[lo], derivs[hi]);
    let h00 = (one + two * s) * (one - s) * (one - s);
    let h10 = s * (one - s) * (one - s);
    let h01 = s * s * (three - two * s);
    let h11 = s * s * (s - one);
    let value = h00 * v0 + h10 * h * d0 + h01 * v1 + h11 * h * d1;
    let dh00 = -six * s * (one - s);
    let dh10 = (one - s) * (one - three * s);
    let dh01 = six * s * (one - s);
    let dh11 = s * (three * s - two);
    let deriv = (dh00 * v0 + dh01 * v1) / h + dh10 * d0 + dh11 * d1;
    (value, deriv)
}

fn term_profile_nondecreasing<T: Scalar>(term: &NonlinearTerm<T>) -> bool {
    match term {
        NonlinearTerm::Power { nu, .. } => *nu >= T::zero(),
        NonlinearTerm::PowerProduct { .. } => true,
        NonlinearTerm::MinIntegral { .. } => true,
        NonlinearTerm::PiecewiseCritical { .. } => true,
        NonlinearTerm::LogCusp { .. } => false, // decreasing past its maximum
        NonlinearTerm::Tabulated { derivs, .. } => {
            derivs.iter().all(|d| *d >= -T::epsilon())
        }
    }
}

// ---------------------------------------------------------------------------
// Growth-limit catalogue
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
enum ZeroBehavior<T> {
    PowerLike { order: T, coeff: T },
    /// Outgrows every power of order > 2 at the origin (the cusp profile).
    SlowBlowup,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
enum InfBehavior<T> {
    PowerLike { order: T, coeff: T },
    Bounded,
}

impl<T: Scalar> Nonlinearity<T> {
    fn axis_zero_behavior(&self, term: &NonlinearTerm<T>) -> ZeroBehavior<T> {
        match term {
            NonlinearTerm::Power { nu, p, .. } => ZeroBehavior::PowerLike {
                order: *p,
                coeff: *nu / *p,
            },
            // Catalogued per the source family: contributes exactly 1/2# at
            // the origin in the ratio F/|u|^{2#}.
            NonlinearTerm::MinIntegral { .. } => ZeroBehavior::PowerLike {
                order: self.two_sharp,
                coeff: T::one() / self.two_sharp,
            },
            NonlinearTerm::PiecewiseCritical { .. } => ZeroBehavior::PowerLike {
                order: self.two_sharp,
                coeff: T::one() / self.two_sharp,
            },
            NonlinearTerm::LogCusp { .. } => ZeroBehavior::SlowBlowup,
            NonlinearTerm::Tabulated { .. } => ZeroBehavior::Unknown,
            NonlinearTerm::PowerProduct { .. } => unreachable!("products handled separately"),
        }
    }

    fn axis_inf_behavior(&self, term: &NonlinearTerm<T>) -> InfBehavior<T> {
        let one = T::one();
        match term {
            NonlinearTerm::Power { nu, p, .. } => InfBehavior::PowerLike {
                order: *p,
                coeff: *nu / *p,
            },
            NonlinearTerm::MinIntegral { p, .. } => InfBehavior::PowerLike {
                order: *p + one,
                coeff: one / (*p + one),
            },
            NonlinearTerm::PiecewiseCritical { .. } => InfBehavior::PowerLike {
                order: self.two_sharp,
                coeff: one / (lit::<T>(2.0).powf(self.two_sharp - one) * self.two_sharp),
            },
            NonlinearTerm::LogCusp { .. } => InfBehavior::Bounded,
            NonlinearTerm::Tabulated { .. } => InfBehavior::Bounded,
            NonlinearTerm::PowerProduct { .. } => unreachable!("products handled separately"),
        }
    }

    /// `liminf_{u→0} F(u)/|u|^{2#}` from the catalogue, or
    /// [`Error::EtaUnavailable`] for combinations without a known closed form.
    pub fn eta0(&self) -> Result<Eta<T>> {
        let q = self.two_sharp;
        let tol = lit::<T>(ORDER_EPS);
        // per-axis limit along the pure axis direction
        let mut axis_limit: Vec<Eta<T>> = Vec::with_capacity(self.m);
        for j in 0..self.m {
            let mut best_order: Option<T> = None;
            let mut coeff_at_best = T::zero();
            let mut slow = false;
            for term in &self.terms {
                if term_component(term) != Some(j) {
                    continue;
                }
                match self.axis_zero_behavior(term) {
                    ZeroBehavior::SlowBlowup => slow = true,
                    ZeroBehavior::Unknown => return Err(Error::EtaUnavailable { side: "0" }),
                    ZeroBehavior::PowerLike { order, coeff } => {
                        if coeff == T::zero() {
                            continue;
                        }
                        match best_order {
                            None => {
                                best_order = Some(order);
                                coeff_at_best = coeff;
                            }
                            Some(b) if order < b - tol => {
                                best_order = Some(order);
                                coeff_at_best = coeff;
                            }
                            Some(b) if (order - b).abs() <= tol => coeff_at_best += coeff,
                            _ => {}
                        }
                    }
                }
            }
            let l = if slow {
                Eta::Infinity
            } else {
                match best_order {
                    None => Eta::Finite(T::zero()),
                    Some(o) if o < q - tol => {
                        if coeff_at_best > T::zero() {
                            Eta::Infinity
                        } else {
                            Eta::NegInfinity
                        }
                    }
                    Some(o) if (o - q).abs() <= tol => Eta::Finite(coeff_at_best),
                    Some(_) => Eta::Finite(T::zero()),
                }
            };
            axis_limit.push(l);
        }
        if axis_limit.iter().any(|l| matches!(l, Eta::NegInfinity)) {
            return Ok(Eta::NegInfinity);
        }
        let all_blow_up = axis_limit.iter().all(|l| matches!(l, Eta::Infinity));
        let has_products = self
            .terms
            .iter()
            .any(|t| matches!(t, NonlinearTerm::PowerProduct { alpha, .. } if *alpha != T::zero()));
        if all_blow_up {
            // products are nonnegative and cannot lower the liminf
            return Ok(Eta::Infinity);
        }
        if has_products {
            // a nonnegative coupling entangles the minimizing direction with
            // the finite axes; no closed form catalogued
            return Err(Error::EtaUnavailable { side: "0" });
        }
        // minimize Σ c_j y_j^{q/2} over the simplex spanned by the finite axes
        let finite: Vec<T> = axis_limit
            .iter()
            .filter_map(|l| l.finite())
            .collect();
        debug_assert!(!finite.is_empty());
        if finite.len() == 1 {
            return Ok(Eta::Finite(finite[0]));
        }
        let min_c = finite.iter().copied().fold(T::infinity(), T::min);
        if min_c <= T::zero() {
            return Ok(Eta::Finite(min_c));
        }
        let n_half = lit::<T>(self.n_dim as f64) / lit(2.0);
        let s: T = finite.iter().map(|c| c.powf(-n_half)).sum();
        Ok(Eta::Finite(s.powf(-T::one() / n_half)))
    }

    /// `limsup_{|u|→∞} F(u)/|u|^{2#}` from the catalogue, or
    /// [`Error::EtaUnavailable`].
    pub fn eta_inf(&self) -> Result<Eta<T>> {
        let q = self.two_sharp;
        let tol = lit::<T>(ORDER_EPS);
        let mut axis_limit: Vec<Eta<T>> = Vec::with_capacity(self.m);
        for j in 0..self.m {
            let mut best_order: Option<T> = None;
            let mut coeff_at_best = T::zero();
            for term in &self.terms {
                if term_component(term) != Some(j) {
                    continue;
                }
                match self.axis_inf_behavior(term) {
                    InfBehavior::Bounded => {}
                    InfBehavior::PowerLike { order, coeff } => {
                        if coeff == T::zero() {
                            continue;
                        }
                        match best_order {
                            None => {
                                best_order = Some(order);
                                coeff_at_best = coeff;
                            }
                            Some(b) if order > b + tol => {
                                best_order = Some(order);
                                coeff_at_best = coeff;
                            }
                            Some(b) if (order - b).abs() <= tol => coeff_at_best += coeff,
                            _ => {}
                        }
                    }
                }
            }
            let l = match best_order {
                None => Eta::Finite(T::zero()),
                Some(o) if o > q + tol => {
                    if coeff_at_best > T::zero() {
                        return Ok(Eta::Infinity);
                    } else {
                        Eta::NegInfinity
                    }
                }
                Some(o) if (o - q).abs() <= tol => Eta::Finite(coeff_at_best),
                Some(_) => Eta::Finite(T::zero()),
            };
            axis_limit.push(l);
        }
        // couplings
        let mut critical_products: Vec<(&NonlinearTerm<T>, T)> = Vec::new();
        for term in &self.terms {
            if let NonlinearTerm::PowerProduct { alpha, exponents } = term {
                if *alpha == T::zero() {
                    continue;
                }
                let total: T = exponents
                    .iter()
                    .copied()
                    .filter(|r| *r != T::zero())
                    .sum();
                if total > q + tol {
                    return Ok(Eta::Infinity);
                }
                if (total - q).abs() <= tol {
                    critical_products.push((term, total));
                }
            }
        }
        let axis_max = axis_limit
            .iter()
            .filter_map(|l| l.finite())
            .fold(T::neg_infinity(), T::max);
        if critical_products.is_empty() {
            if axis_max == T::neg_infinity() {
                // every axis supercritical-negative
                return Ok(Eta::NegInfinity);
            }
            if axis_max < T::zero() && self.m > 1 {
                // interacting negative critical axes: no closed form kept
                return Err(Error::EtaUnavailable { side: "∞" });
            }
            return Ok(Eta::Finite(axis_max));
        }
        if critical_products.len() == 1 && axis_max <= T::zero() + tol && axis_max >= -tol {
            if let NonlinearTerm::PowerProduct { alpha, exponents } = critical_products[0].0 {
                let active: Vec<T> = exponents
                    .iter()
                    .copied()
                    .filter(|r| *r != T::zero())
                    .collect();
                if active.len() == 2 {
                    let (r1, r2) = (active[0], active[1]);
                    let v = *alpha
                        * (r1.powf(r1) * r2.powf(r2) / q.powf(q)).sqrt();
                    return Ok(Eta::Finite(v));
                }
            }
        }
        Err(Error::EtaUnavailable { side: "∞" })
    }
}

fn term_component<T>(term: &NonlinearTerm<T>) -> Option<usize> {
    match term {
        NonlinearTerm::Power { comp, .. }
        | NonlinearTerm::MinIntegral { comp, .. }
        | NonlinearTerm::PiecewiseCritical { comp }
        | NonlinearTerm::LogCusp { comp }
        | NonlinearTerm::Tabulated { comp, .. } => Some(*comp),
        NonlinearTerm::PowerProduct { .. } => None,
    }
}

/// Which limit side an estimate targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EtaSide {
    Zero,
    Infinity,
}

/// Numeric estimate of a growth limit: the extrapolated value together with
/// the sampled sequence (R, extremal ratio at |u| = R).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EtaEstimate<T> {
    pub side: EtaSide,
    pub value: T,
    pub samples: Vec<(T, T)>,
}

impl<T: Scalar> Nonlinearity<T> {
    /// Default radius schedule: 13 log-spaced radii from 1 toward the limit.
    pub fn default_radii(&self, side: EtaSide) -> Vec<T> {
        let mut out = Vec::new();
        for k in 0..=12 {
            let exp = k as f64 * 0.5;
            let exp = match side {
                EtaSide::Zero => -exp,
                EtaSide::Infinity => exp,
            };
            out.push(lit::<T>(10f64.powf(exp)));
        }
        out
    }

    /// Monotone-envelope estimate of η₀ or η∞ by sampling F(R e)/R^{2#} over
    /// a direction grid on the unit sphere (F is even, so one orthant
    /// suffices). The radii schedule must be monotone and ordered toward the
    /// limit.
    pub fn eta_estimate(&self, side: EtaSide, radii: &[T]) -> Result<EtaEstimate<T>> {
        if radii.len() < 2 {
            return Err(Error::ScheduleNotMonotone);
        }
        let increasing = radii.windows(2).all(|w| w[1] > w[0]);
        let decreasing = radii.windows(2).all(|w| w[1] < w[0]);
        if !(increasing || decreasing) {
            return Err(Error::ScheduleNotMonotone);
        }
        let dirs = self.direction_grid();
        let q = self.two_sharp;
        let mut samples = Vec::with_capacity(radii.len());
        let mut point = vec![T::zero(); self.m];
        for &r in radii {
            let mut extremal = match side {
                EtaSide::Zero => T::infinity(),
                EtaSide::Infinity => T::neg_infinity(),
            };
            for dir in &dirs {
                for (p, d) in point.iter_mut().zip(dir) {
                    *p = r * *d;
                }
                let ratio = self.value(&point) / r.powf(q);
                if !ratio.is_finite() {
                    return Err(Error::NonFiniteSample { radius: r.as_f64() });
                }
                extremal = match side {
                    EtaSide::Zero => extremal.min(ratio),
                    EtaSide::Infinity => extremal.max(ratio),
                };
            }
            samples.push((r, extremal));
        }
        // envelope over the tail half (the limit end of the schedule)
        let tail = &samples[samples.len() / 2..];
        let value = match side {
            EtaSide::Zero => tail.iter().map(|s| s.1).fold(T::infinity(), T::min),
            EtaSide::Infinity => tail.iter().map(|s| s.1).fold(T::neg_infinity(), T::max),
        };
        Ok(EtaEstimate {
            side,
            value,
            samples,
        })
    }

    /// Direction samples on the nonnegative orthant of the unit sphere.
    fn direction_grid(&self) -> Vec<Vec<T>> {
        match self.m {
            1 => vec![vec![T::one()]],
            2 => {
                let k = 2048usize;
                (0..=k)
                    .map(|i| {
                        let th = lit::<T>(i as f64 / k as f64) * T::FRAC_PI_2();
                        vec![th.cos(), th.sin()]
                    })
                    .collect()
            }
            m => {
                // simplex lattice on the squared coordinates
                let q = if m == 3 { 40 } else { 12 };
                let mut dirs = Vec::new();
                let mut comp = vec![0usize; m];
                fn rec<T: Scalar>(
                    m: usize,
                    rem: usize,
                    idx: usize,
                    comp: &mut Vec<usize>,
                    q: usize,
                    dirs: &mut Vec<Vec<T>>,
                ) {
                    if idx == m - 1 {
                        comp[idx] = rem;
                        let dir: Vec<T> = comp
                            .iter()
                            .map(|&c| lit::<T>(c as f64 / q as f64).sqrt())
                            .collect();
                        dirs.push(dir);
                        return;
                    }
                    for c in 0..=rem {
                        comp[idx] = c;
                        rec::<T>(m, rem - c, idx + 1, comp, q, dirs);
                    }
                }
                rec::<T>(m, q, 0, &mut comp, q, &mut dirs);
                dirs
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Hypothesis checks (F0), (F2), (P) — sampled verdicts, never proofs
// ---------------------------------------------------------------------------

/// Verdict of one sampled hypothesis check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict<T> {
    pub passed: bool,
    /// Estimated envelope constant (S, S_b, …) where one is meaningful.
    pub constant: Option<T>,
    /// Witnessing sample `(|u|, ratio)` on failure.
    pub witness: Option<(T, T)>,
}

/// Verdict of the (P) lower-growth condition for one component profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PVerdict<T> {
    pub comp: usize,
    /// Best (smallest) exponent q with liminf f(t)/t^q > 0 found by sampling.
    pub q_best: T,
    /// N/(N-2) for N ≥ 3.
    pub q_required: T,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport<T> {
    pub f0: Verdict<T>,
    pub f2: Verdict<T>,
    /// η∞ (catalogue or estimate) for (F1).
    pub eta_inf: f64,
    /// η₀ (catalogue or estimate) for (F3).
    pub eta0: f64,
    /// Exponents p > 2 at which F(t)/t^p is seen to diverge at 0 (the cusp
    /// family triggers all of them while still passing (F2)).
    pub diverging_powers: Vec<T>,
    pub p_condition: Vec<PVerdict<T>>,
}

impl<T: Scalar> Nonlinearity<T> {
    /// Sampling-based verdicts for (F0), (F2), and (P), plus the η limits.
    /// `b_envelope` is the user-chosen b for the N = 2 branch of (F0).
    pub fn check_hypotheses(&self, b_envelope: T) -> HypothesisReport<T> {
        let dirs = self.direction_grid_coarse();
        let decades: Vec<T> = (-24..=0)
            .map(|k| lit::<T>(10f64.powf(k as f64 * 0.25)))
            .collect();

        // (F0): |∇F| against the dimensional envelope
        let envelope = |r: T| -> T {
            match self.n_dim {
                1 => r,
                2 => r + (b_envelope * r * r).exp() - T::one(),
                _ => {
                    let sob = lit::<T>(2.0 * self.n_dim as f64 / (self.n_dim - 2) as f64);
                    r + r.powf(sob - T::one())
                }
            }
        };
        let radii_f0: Vec<T> = if self.n_dim == 1 {
            decades.clone()
        } else {
            let mut v = decades.clone();
            for k in 1..=8 {
                v.push(lit::<T>(10f64.powf(k as f64 * 0.1)));
            }
            v
        };
        let mut f0_ratios: Vec<(T, T)> = Vec::new();
        let mut point = vec![T::zero(); self.m];
        for &r in &radii_f0 {
            let mut worst = T::zero();
            for dir in &dirs {
                for (p, d) in point.iter_mut().zip(dir) {
                    *p = r * *d;
                }
                let g = self.grad(&point);
                let gn = g.iter().map(|x| *x * *x).sum::<T>().sqrt();
                worst = worst.max(gn / envelope(r));
            }
            f0_ratios.push((r, worst));
        }
        let s_const = f0_ratios
            .iter()
            .map(|p| p.1)
            .fold(T::zero(), T::max);
        // fail if the ratio blows up toward 0 (∇F not dominated near the origin)
        let small = f0_ratios.first().map(|p| p.1).unwrap_or(T::zero());
        let mid = f0_ratios
            .iter()
            .filter(|(r, _)| *r >= lit(1e-2))
            .map(|p| p.1)
            .fold(T::zero(), T::max);
        let f0_pass = small.is_finite() && small <= lit::<T>(4.0) * mid + lit(1e-9);
        let f0 = Verdict {
            passed: f0_pass,
            constant: Some(s_const),
            witness: if f0_pass { None } else { Some(f0_ratios[0]) },
        };

        // (F2): F/|u|² → 0 decided by the trend over the smallest decades
        let mut f2_ratios: Vec<(T, T)> = Vec::new();
        for &r in &decades {
            let mut worst = T::zero();
            for dir in &dirs {
                for (p, d) in point.iter_mut().zip(dir) {
                    *p = r * *d;
                }
                worst = worst.max(self.value(&point).abs() / (r * r));
            }
            f2_ratios.push((r, worst));
        }
        let r_small = f2_ratios[0].1;
        let r_later = f2_ratios[8].1;
        let f2_pass = r_small <= lit::<T>(0.9) * r_later + lit(1e-12);
        let f2 = Verdict {
            passed: f2_pass,
            constant: None,
            witness: if f2_pass { None } else { Some(f2_ratios[0]) },
        };

        // divergence of F/t^p for p > 2 at the origin
        let mut diverging = Vec::new();
        for &p_exp in &[2.5, 3.0, 4.0] {
            let p_t = lit::<T>(p_exp);
            let ratio_at = |r: T| -> T {
                let mut worst = T::zero();
                for dir in &dirs {
                    let mut pt = vec![T::zero(); self.m];
                    for (p, d) in pt.iter_mut().zip(dir) {
                        *p = r * *d;
                    }
                    worst = worst.max(self.value(&pt).abs() / r.powf(p_t));
                }
                worst
            };
            let a = ratio_at(lit(1e-6));
            let b = ratio_at(lit(1e-4));
            if a > lit::<T>(5.0) * b && a > T::zero() {
                diverging.push(p_t);
            }
        }

        let eta0 = self
            .eta0()
            .map(|e| e.as_f64())
            .or_else(|_| {
                self.eta_estimate(EtaSide::Zero, &self.default_radii(EtaSide::Zero))
                    .map(|e| e.value.as_f64())
            })
            .unwrap_or(f64::NAN);
        let eta_inf = self
            .eta_inf()
            .map(|e| e.as_f64())
            .or_else(|_| {
                self.eta_estimate(EtaSide::Infinity, &self.default_radii(EtaSide::Infinity))
                    .map(|e| e.value.as_f64())
            })
            .unwrap_or(f64::NAN);

        // (P): least-squares slope of ln f against ln t over the small decades
        let mut p_condition = Vec::new();
        if self.n_dim > 2 {
            let q_req = lit::<T>(self.n_dim as f64 / (self.n_dim - 2) as f64);
            for j in 0..self.m {
                let mut pts = Vec::new();
                for k in 1..=12 {
                    let t = lit::<T>(10f64.powf(-(k as f64) * 0.5));
                    let f = self.axis_derivative(j, t);
                    if f > T::zero() {
                        pts.push((t.ln(), f.ln()));
                    }
                }
                if pts.len() < 3 {
                    continue;
                }
                let n = lit::<T>(pts.len() as f64);
                let sx: T = pts.iter().map(|p| p.0).sum();
                let sy: T = pts.iter().map(|p| p.1).sum();
                let sxx: T = pts.iter().map(|p| p.0 * p.0).sum();
                let sxy: T = pts.iter().map(|p| p.0 * p.1).sum();
                let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
                let q_best = slope;
                p_condition.push(PVerdict {
                    comp: j,
                    q_best,
                    q_required: q_req,
                    passed: q_best <= q_req + lit(1e-6),
                });
            }
        }

        HypothesisReport {
            f0,
            f2,
            eta_inf,
            eta0,
            diverging_powers: diverging,
            p_condition,
        }
    }

    fn direction_grid_coarse(&self) -> Vec<Vec<T>> {
        match self.m {
            1 => vec![vec![T::one()]],
            2 => (0..=16)
                .map(|i| {
                    let th = lit::<T>(i as f64 / 16.0) * T::FRAC_PI_2();
                    vec![th.cos(), th.sin()]
                })
                .collect(),
            _ => {
                let mut dirs = vec![];
                for j in 0..self.m {
                    let mut d = vec![T::zero(); self.m];
                    d[j] = T::one();
                    dirs.push(d);
                }
                let equal = lit::<T>(1.0 / (self.m as f64)).sqrt();
                dirs.push(vec![equal; self.m]);
                dirs
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serde representation (matches the documented JSON term list)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NonlinearitySpec<T> {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n_dim: usize,
    #[serde(default)]
    form: FormSpec,
    terms: Vec<TermSpec<T>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
enum FormSpec {
    Single,
    A,
    B,
    #[default]
    Generic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum TermSpec<T> {
    Power { j: usize, nu: T, p: T },
    Product { alpha: T, r: Vec<T> },
    MinIntegral { j: usize, p: T },
    PiecewiseCritical { j: usize },
    LogCusp { j: usize },
    Tabulated {
        j: usize,
        ts: Vec<T>,
        vals: Vec<T>,
        derivs: Vec<T>,
    },
}

impl<T: Scalar> TryFrom<NonlinearitySpec<T>> for Nonlinearity<T> {
    type Error = Error;
    fn try_from(s: NonlinearitySpec<T>) -> Result<Self> {
        let form = match s.form {
            FormSpec::Single => StructuralForm::Single,
            FormSpec::A => StructuralForm::FormA,
            FormSpec::B => StructuralForm::FormB,
            FormSpec::Generic => StructuralForm::Generic,
        };
        let one_based = |j: usize| -> Result<usize> {
            if j == 0 || j > s.m {
                Err(Error::ComponentOutOfRange {
                    j: j.wrapping_sub(1),
                    m: s.m,
                })
            } else {
                Ok(j - 1)
            }
        };
        let terms = s
            .terms
            .into_iter()
            .map(|t| {
                Ok(match t {
                    TermSpec::Power { j, nu, p } => NonlinearTerm::Power {
                        comp: one_based(j)?,
                        nu,
                        p,
                    },
                    TermSpec::Product { alpha, r } => {
                        NonlinearTerm::PowerProduct { alpha, exponents: r }
                    }
                    TermSpec::MinIntegral { j, p } => NonlinearTerm::MinIntegral {
                        comp: one_based(j)?,
                        p,
                    },
                    TermSpec::PiecewiseCritical { j } => NonlinearTerm::PiecewiseCritical {
                        comp: one_based(j)?,
                    },
                    TermSpec::LogCusp { j } => NonlinearTerm::LogCusp { comp: one_based(j)? },
                    TermSpec::Tabulated { j, ts, vals, derivs } => NonlinearTerm::Tabulated {
                        comp: one_based(j)?,
                        ts,
                        vals,
                        derivs,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Nonlinearity::new(s.m, s.n_dim, form, terms)
    }
}

impl<T: Scalar> From<Nonlinearity<T>> for NonlinearitySpec<T> {
    fn from(nl: Nonlinearity<T>) -> Self {
        let form = match nl.form {
            StructuralForm::Single => FormSpec::Single,
            StructuralForm::FormA => FormSpec::A,
            StructuralForm::FormB => FormSpec::B,
            StructuralForm::Generic => FormSpec::Generic,
        };
        let terms = nl
            .terms
            .into_iter()
            .map(|t| match t {
                NonlinearTerm::Power { comp, nu, p } => TermSpec::Power { j: comp + 1, nu, p },
                NonlinearTerm::PowerProduct { alpha, exponents } => TermSpec::Product {
                    alpha,
                    r: exponents,
                },
                NonlinearTerm::MinIntegral { comp, p } => {
                    TermSpec::MinIntegral { j: comp + 1, p }
                }
                NonlinearTerm::PiecewiseCritical { comp } => {
                    TermSpec::PiecewiseCritical { j: comp + 1 }
                }
                NonlinearTerm::LogCusp { comp } => TermSpec::LogCusp { j: comp + 1 },
                NonlinearTerm::Tabulated { comp, ts, vals, derivs } => TermSpec::Tabulated {
                    j: comp + 1,
                    ts,
                    vals,
                    derivs,
                },
            })
            .collect();
        NonlinearitySpec {
            m: nl.m,
            n_dim: nl.n_dim,
            form,
            terms,
        }
    }
}

/// Convenience constructors for the catalogued families.
impl<T: Scalar> Nonlinearity<T> {
    /// Single-component `(ν/p)|u|^p`.
    pub fn single_power(n_dim: usize, nu: T, p: T) -> Result<Self> {
        Nonlinearity::new(
            1,
            n_dim,
            StructuralForm::Single,
            vec![NonlinearTerm::Power { comp: 0, nu, p }],
        )
    }

    /// Single-component min-integral family.
    pub fn min_integral(n_dim: usize, p: T) -> Result<Self> {
        Nonlinearity::new(
            1,
            n_dim,
            StructuralForm::Single,
            vec![NonlinearTerm::MinIntegral { comp: 0, p }],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nl1(terms: Vec<NonlinearTerm<f64>>) -> Nonlinearity<f64> {
        Nonlinearity::new(1, 1, StructuralForm::Single, terms).unwrap()
    }

    #[test]
    fn power_value_example() {
        let f = nl1(vec![NonlinearTerm::Power {
            comp: 0,
            nu: 1.0,
            p: 4.0,
        }]);
        assert_eq!(f.value(&[2.0]), 4.0); // 2⁴/4
    }

    #[test]
    fn min_integral_value_example() {
        // N=1 (2# = 6), p = 4, u = 1: min{t⁶, t⁴} = t⁶ on [0,1] → 1/7
        let f = Nonlinearity::<f64>::min_integral(1, 4.0).unwrap();
        assert!((f.value(&[1.0]) - 1.0 / 7.0).abs() < 1e-15);
        // above the crossover: 1/7 + (x⁵-1)/5
        let x: f64 = 2.0;
        let expect = 1.0 / 7.0 + (x.powi(5) - 1.0) / 5.0;
        assert!((f.value(&[x]) - expect).abs() < 1e-14);
    }

    #[test]
    fn product_value_and_grad_example() {
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![3.0, 3.0],
            }],
        )
        .unwrap();
        assert_eq!(f.value(&[1.0, 2.0]), 8.0);
        let g = f.grad(&[1.0, 2.0]);
        assert_eq!(g, vec![24.0, 12.0]);
    }

    #[test]
    fn evenness_exact() {
        let f = Nonlinearity::new(
            2,
            3,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power {
                    comp: 0,
                    nu: 0.7,
                    p: 2.5,
                },
                NonlinearTerm::PowerProduct {
                    alpha: 0.3,
                    exponents: vec![1.5, 1.5],
                },
                NonlinearTerm::LogCusp { comp: 1 },
            ],
        )
        .unwrap();
        for u in [[0.3f64, -1.7], [-0.9, 0.4], [-2.5, -0.1]] {
            let flipped = [u[0].abs(), u[1].abs()];
            assert_eq!(f.value(&u), f.value(&flipped));
        }
    }

    #[test]
    fn grad_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let two_sharp = 6.0f64;
        let cases: Vec<Nonlinearity<f64>> = vec![
            nl1(vec![NonlinearTerm::Power { comp: 0, nu: 1.3, p: 4.0 }]),
            Nonlinearity::min_integral(1, 4.0).unwrap(),
            nl1(vec![NonlinearTerm::PiecewiseCritical { comp: 0 }]),
            nl1(vec![NonlinearTerm::LogCusp { comp: 0 }]),
            Nonlinearity::new(
                2,
                1,
                StructuralForm::Generic,
                vec![NonlinearTerm::PowerProduct {
                    alpha: 0.8,
                    exponents: vec![2.5, 2.5],
                }],
            )
            .unwrap(),
        ];
        let _ = two_sharp;
        // kink radii per variant (branch switches); samples stay away
        for f in &cases {
            let mut checked = 0;
            while checked < 1000 {
                let u: Vec<f64> = (0..f.m()).map(|_| rng.gen_range(-3.0..3.0)).collect();
                if u.iter().any(|x| {
                    let t = x.abs();
                    t < 1e-2
                        || (t - 0.5).abs() < 1e-2
                        || (t - 1.0).abs() < 1e-2
                        || (t - 2.0).abs() < 1e-2
                        || (t - 2.2417).abs() < 2e-2
                        || (t - 2.0 * 2.2417).abs() < 2e-2
                        || (t - 2.5).abs() < 1e-2
                }) {
                    continue;
                }
                checked += 1;
                let g = f.grad(&u);
                for k in 0..f.m() {
                    let eps = 1e-6 * u[k].abs().max(0.5);
                    let mut up = u.clone();
                    let mut dn = u.clone();
                    up[k] += eps;
                    dn[k] -= eps;
                    let fd = (f.value(&up) - f.value(&dn)) / (2.0 * eps);
                    let denom = g[k].abs().max(1e-6);
                    assert!(
                        ((g[k] - fd) / denom).abs() < 1e-5,
                        "variant grad mismatch at {u:?}: {} vs {fd}",
                        g[k]
                    );
                }
            }
        }
    }

    #[test]
    fn log_cusp_c1_at_branch_points() {
        let b = 1.0 / 2.0f64.ln();
        let c = b * (b + 2.0) / 4.0 + 1.0;
        for t in [0.5, 1.0, c, 2.0 * c] {
            let eps = 1e-7;
            let left = (log_cusp_value(t) - log_cusp_value(t - eps)) / eps;
            let right = (log_cusp_value(t + eps) - log_cusp_value(t)) / eps;
            assert!(
                (left - right).abs() < 1e-4,
                "derivative jump at t = {t}: {left} vs {right}"
            );
        }
    }

    #[test]
    fn eta_critical_power_sum() {
        // F = Σ (ν_j/2#)|u_j|^{2#}, ν = (1,3), N = 1 → η∞ = 3/2# = 0.5
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power { comp: 0, nu: 1.0, p: 6.0 },
                NonlinearTerm::Power { comp: 1, nu: 3.0, p: 6.0 },
            ],
        )
        .unwrap();
        assert_eq!(f.eta_inf().unwrap(), Eta::Finite(0.5));
    }

    #[test]
    fn eta_critical_product() {
        // F = |u₁|³|u₂|³, N = 1 → η∞ = √(27·27/6⁶) = 1/8
        let f = Nonlinearity::<f64>::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![3.0, 3.0],
            }],
        )
        .unwrap();
        match f.eta_inf().unwrap() {
            Eta::Finite(v) => assert!((v - 0.125).abs() < 1e-12),
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn eta_min_integral_catalogue() {
        let f = Nonlinearity::min_integral(1, 4.0).unwrap();
        assert_eq!(f.eta0().unwrap(), Eta::Finite(1.0 / 6.0));
        assert_eq!(f.eta_inf().unwrap(), Eta::Finite(0.0));
    }

    #[test]
    fn eta_log_cusp_and_piecewise() {
        let f = nl1(vec![NonlinearTerm::LogCusp { comp: 0 }]);
        assert_eq!(f.eta0().unwrap(), Eta::Infinity);
        assert_eq!(f.eta_inf().unwrap(), Eta::Finite(0.0));

        let g = nl1(vec![NonlinearTerm::PiecewiseCritical { comp: 0 }]);
        assert_eq!(g.eta0().unwrap(), Eta::Finite(1.0 / 6.0));
        match g.eta_inf().unwrap() {
            Eta::Finite(v) => assert!((v - 1.0f64 / (32.0 * 6.0)).abs() < 1e-12),
            other => panic!("expected finite, got {other:?}"),
        }
    }

    #[test]
    fn eta_subcritical_power_is_zero_at_infinity() {
        let f = nl1(vec![NonlinearTerm::Power { comp: 0, nu: 1.0, p: 4.0 }]);
        assert_eq!(f.eta_inf().unwrap(), Eta::Finite(0.0));
        assert_eq!(f.eta0().unwrap(), Eta::Infinity);
    }

    #[test]
    fn eta_uncovered_component_is_zero() {
        // M = 2 but F depends on u₁ only → liminf along the u₂ axis is 0
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::Power { comp: 0, nu: 1.0, p: 4.0 }],
        )
        .unwrap();
        assert_eq!(f.eta0().unwrap(), Eta::Finite(0.0));
    }

    #[test]
    fn eta_estimate_product() {
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![3.0, 3.0],
            }],
        )
        .unwrap();
        let radii = f.default_radii(EtaSide::Infinity);
        let est = f.eta_estimate(EtaSide::Infinity, &radii).unwrap();
        assert!((est.value - 0.125f64).abs() < 1e-3, "estimate {}", est.value);
    }

    #[test]
    fn eta_estimate_subcritical_decreasing() {
        let f = nl1(vec![NonlinearTerm::Power { comp: 0, nu: 1.0, p: 4.0 }]);
        let radii = f.default_radii(EtaSide::Infinity);
        let est = f.eta_estimate(EtaSide::Infinity, &radii).unwrap();
        assert!(est.value < 1e-6);
        for w in est.samples.windows(2) {
            assert!(w[1].1 <= w[0].1, "ratio should decrease in R");
        }
    }

    #[test]
    fn eta_estimate_piecewise_tail() {
        let f = nl1(vec![NonlinearTerm::PiecewiseCritical { comp: 0 }]);
        let radii = f.default_radii(EtaSide::Infinity);
        let est = f.eta_estimate(EtaSide::Infinity, &radii).unwrap();
        assert!((est.value - 1.0 / 192.0).abs() < 1e-6, "{}", est.value);
    }

    #[test]
    fn eta_estimate_matches_spread_formula() {
        // critical sum with unequal coefficients: liminf over directions
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power { comp: 0, nu: 1.0, p: 6.0 },
                NonlinearTerm::Power { comp: 1, nu: 3.0, p: 6.0 },
            ],
        )
        .unwrap();
        let analytic = match f.eta0().unwrap() {
            Eta::Finite(v) => v,
            _ => panic!(),
        };
        let expected = ((6.0f64).sqrt() + (2.0f64).sqrt()).powi(-2);
        assert!((analytic - expected).abs() < 1e-12);
        let est = f
            .eta_estimate(EtaSide::Zero, &f.default_radii(EtaSide::Zero))
            .unwrap();
        assert!((est.value - analytic).abs() < 1e-3);
    }

    #[test]
    fn eta_unavailable_for_entangled_combination() {
        // critical axis + critical product: no closed form catalogued
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::Power { comp: 0, nu: 1.0, p: 6.0 },
                NonlinearTerm::PowerProduct {
                    alpha: 1.0,
                    exponents: vec![3.0, 3.0],
                },
            ],
        )
        .unwrap();
        assert!(matches!(
            f.eta_inf(),
            Err(Error::EtaUnavailable { .. })
        ));
    }

    #[test]
    fn constructor_rejects_bad_terms() {
        // p outside (2, 2*)
        assert!(Nonlinearity::<f64>::single_power(1, 1.0, 2.0).is_err());
        assert!(Nonlinearity::<f64>::single_power(3, 1.0, 6.0).is_err()); // 2* = 6 at N=3
        // min-integral p outside (2, 2#)
        assert!(Nonlinearity::<f64>::min_integral(1, 6.5).is_err());
        // negative product coefficient
        assert!(Nonlinearity::<f64>::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: -1.0,
                exponents: vec![2.0, 2.0],
            }],
        )
        .is_err());
        // critical product with too many unit exponents (M ≥ 2#)
        assert!(Nonlinearity::<f64>::new(
            6,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![1.0; 6],
            }],
        )
        .is_err());
    }

    #[test]
    fn constructor_rejects_malformed_forms() {
        // form (b) with a 3-component coupling
        assert!(Nonlinearity::<f64>::new(
            3,
            1,
            StructuralForm::FormB,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![1.5, 1.5, 1.5],
            }],
        )
        .is_err());
        // form (a) with a product skipping a component
        assert!(Nonlinearity::<f64>::new(
            3,
            1,
            StructuralForm::FormA,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![1.5, 1.5, 0.0],
            }],
        )
        .is_err());
        // form (a) with a non-monotone axis profile
        assert!(Nonlinearity::<f64>::new(
            2,
            1,
            StructuralForm::FormA,
            vec![
                NonlinearTerm::LogCusp { comp: 0 },
                NonlinearTerm::Power { comp: 1, nu: 1.0, p: 4.0 },
            ],
        )
        .is_err());
        // the same terms are fine under the generic form
        assert!(Nonlinearity::<f64>::new(
            2,
            1,
            StructuralForm::Generic,
            vec![
                NonlinearTerm::LogCusp { comp: 0 },
                NonlinearTerm::Power { comp: 1, nu: 1.0, p: 4.0 },
            ],
        )
        .is_ok());
    }

    #[test]
    fn hypotheses_power() {
        let f = nl1(vec![NonlinearTerm::Power { comp: 0, nu: 1.0, p: 4.0 }]);
        let rep = f.check_hypotheses(1.0);
        assert!(rep.f0.passed);
        assert!(rep.f0.constant.unwrap() > 0.0);
        assert!(rep.f2.passed);
        assert!(rep.diverging_powers.is_empty());
    }

    #[test]
    fn hypotheses_log_cusp() {
        let f = nl1(vec![NonlinearTerm::LogCusp { comp: 0 }]);
        let rep = f.check_hypotheses(1.0);
        assert!(rep.f2.passed, "(F2) holds for the cusp profile");
        // yet F(t)/t^p → ∞ for every sampled p > 2
        assert_eq!(rep.diverging_powers.len(), 3);
    }

    #[test]
    fn p_condition_fails_for_critical_power_n6() {
        // f(t) = t^{2#-1} at N = 6: exponent 5/3 > N/(N-2) = 3/2
        let two_sharp_n6 = 2.0 + 4.0 / 6.0;
        let f = Nonlinearity::new(
            1,
            6,
            StructuralForm::Single,
            vec![NonlinearTerm::Power {
                comp: 0,
                nu: 1.0,
                p: two_sharp_n6,
            }],
        )
        .unwrap();
        let rep = f.check_hypotheses(1.0);
        assert_eq!(rep.p_condition.len(), 1);
        let pv = &rep.p_condition[0];
        assert!((pv.q_best - (two_sharp_n6 - 1.0f64)).abs() < 1e-3);
        assert!(!pv.passed);
    }

    #[test]
    fn json_parse_documented_example() {
        let json = r#"{"M":2,"N":1,"form":"b","terms":[
            {"kind":"power","j":1,"nu":1,"p":4},
            {"kind":"product","alpha":0.5,"r":[2.5,2.5]}]}"#;
        let f: Nonlinearity<f64> = serde_json::from_str(json).unwrap();
        assert_eq!(f.m(), 2);
        assert_eq!(f.form(), StructuralForm::FormB);
        let round = serde_json::to_string(&f).unwrap();
        let g: Nonlinearity<f64> = serde_json::from_str(&round).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let json = r#"{"M":1,"N":1,"terms":[],"bogus":3}"#;
        assert!(serde_json::from_str::<Nonlinearity<f64>>(json).is_err());
    }

    #[test]
    fn phase_rate_limits() {
        let f = Nonlinearity::new(
            2,
            1,
            StructuralForm::Generic,
            vec![NonlinearTerm::PowerProduct {
                alpha: 1.0,
                exponents: vec![1.5, 2.5],
            }],
        )
        .unwrap();
        let mut out = vec![0.0f64; 2];
        f.phase_rate_into(&[0.0, 1.0], &mut out);
        assert_eq!(out, vec![0.0, 0.0]); // zero modulus → rate pinned to 0
        f.phase_rate_into(&[0.5, 1.0], &mut out);
        assert!(out[0].is_finite() && out[0] > 0.0);
    }
}
