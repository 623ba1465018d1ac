//! Discretized domains, quadrature, differential operators, and dilation.
//!
//! Three domain kinds are supported:
//!
//! * [`DomainKind::RadialN`] — the radial reduction of a ball of radius
//!   `r_max` in ℝᴺ with homogeneous Dirichlet condition at `r_max`. Nodes are
//!   cell-centred, `r_i = (i + ½)h`, so every quadrature weight
//!   `σ_{N-1} r_i^{N-1} h` is strictly positive.
//! * [`DomainKind::BiRadial`] — functions of `(|x₁|, |x₂|)` on
//!   ℝ² × ℝ² = ℝ⁴ (the block-radial class with K = 2), discretized on the
//!   tensor grid with weight `(2π)² r₁ r₂ h²`.
//! * [`DomainKind::PeriodicBox1D`] — a periodic interval of length `L`,
//!   used by the time-evolution module only.
//!
//! The radial Laplacian is assembled in flux (divergence) form
//! `Δu = r^{1-N} (r^{N-1} u')'` with zero flux through `r = 0` (even
//! extension) and a Dirichlet ghost at `r_max`. With [`Field::grad_norm_sq`]
//! defined as the matching edge sum, `⟨-Δu, u⟩ = |∇u|₂²` holds to machine
//! precision, which makes the discrete energy gradient exact.

use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Domain kind tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    RadialN,
    BiRadial,
    PeriodicBox1D,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::RadialN => "RadialN",
            DomainKind::BiRadial => "BiRadial",
            DomainKind::PeriodicBox1D => "PeriodicBox1D",
        }
    }
}

/// Serializable description of a domain; the full [`Domain`] (with
/// precomputed nodes and weights) is rebuilt from this on deserialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec<T> {
    pub kind: DomainKind,
    #[serde(rename = "N")]
    pub n_dim: usize,
    /// Truncation radius for radial kinds, box length for the periodic box.
    pub r_max: T,
    pub n_points: usize,
}

/// A discretized domain carrying nodes, quadrature weights, and the edge
/// factors used by the flux-form Laplacian.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(
    try_from = "DomainSpec<T>",
    into = "DomainSpec<T>",
    bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>")
)]
pub struct Domain<T> {
    kind: DomainKind,
    n_dim: usize,
    extent: T,
    n_points: usize,
    h: T,
    /// Radial (or axis) node coordinates. Length `n_points`.
    axis_nodes: Vec<T>,
    /// 1-D quadrature weights along one axis. For `RadialN` and the box these
    /// are the full node weights; for `BiRadial` the node weight is the
    /// product of the two axis weights.
    axis_weights: Vec<T>,
    /// `e_i^{ax-1}` at the `n_points + 1` cell edges, where `ax` is the
    /// per-axis dimension (N for RadialN, K = 2 per block for BiRadial).
    edge_factors: Vec<T>,
}

impl<T: Scalar> PartialEq for Domain<T> {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
            && self.n_dim == other.n_dim
            && self.extent == other.extent
            && self.n_points == other.n_points
    }
}

/// Pairwise (cascade) summation: rounding error O(ε log n) instead of the
/// O(ε n) of a running fold, which keeps mass bookkeeping stable enough for
/// exactly idempotent ball projections.
pub(crate) fn pairwise_sum<T: Scalar>(xs: &[T]) -> T {
    if xs.len() <= 32 {
        let mut acc = T::zero();
        for &x in xs {
            acc += x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Surface area of the unit sphere S^{N-1}: σ = 2 π^{N/2} / Γ(N/2).
pub fn unit_sphere_area<T: Scalar>(n_dim: usize) -> T {
    // Γ(N/2) by the recursion from Γ(1/2) = √π and Γ(1) = 1.
    let mut x = lit::<T>(0.5) * lit::<T>(n_dim as f64);
    let mut gamma = if n_dim % 2 == 0 {
        T::one()
    } else {
        T::PI().sqrt()
    };
    let base = if n_dim % 2 == 0 { T::one() } else { lit(0.5) };
    while x > base + lit(1e-9) {
        x = x - T::one();
        gamma = gamma * x;
    }
    lit::<T>(2.0) * T::PI().powf(lit::<T>(n_dim as f64) / lit(2.0)) / gamma
}

impl<T: Scalar> Domain<T> {
    /// Radial reduction of a ball in ℝᴺ, truncated at `r_max`.
    pub fn radial(n_dim: usize, r_max: T, n_points: usize) -> Result<Arc<Self>> {
        if n_dim < 1 {
            return Err(Error::InvalidDomain("RadialN needs N >= 1".into()));
        }
        Self::build(DomainKind::RadialN, n_dim, r_max, n_points)
    }

    /// Block-radial domain for ℝ² × ℝ² (N = 4, K = 2).
    pub fn bi_radial(r_max: T, n_points: usize) -> Result<Arc<Self>> {
        Self::build(DomainKind::BiRadial, 4, r_max, n_points)
    }

    /// Periodic interval of length `length` centred at the origin.
    pub fn periodic_box(length: T, n_points: usize) -> Result<Arc<Self>> {
        Self::build(DomainKind::PeriodicBox1D, 1, length, n_points)
    }

    fn build(kind: DomainKind, n_dim: usize, extent: T, n_points: usize) -> Result<Arc<Self>> {
        if !(extent > T::zero()) || !extent.is_finite() {
            return Err(Error::InvalidDomain(format!(
                "extent must be positive and finite, got {extent}"
            )));
        }
        if n_points < 4 {
            return Err(Error::InvalidDomain(format!(
                "need at least 4 grid points, got {n_points}"
            )));
        }
        let n_f = lit::<T>(n_points as f64);
        let h = extent / n_f;
        let half = lit::<T>(0.5);
        let (axis_nodes, axis_weights, edge_factors) = match kind {
            DomainKind::RadialN => {
                let sigma = unit_sphere_area::<T>(n_dim);
                let nodes: Vec<T> = (0..n_points)
                    .map(|i| (lit::<T>(i as f64) + half) * h)
                    .collect();
                let weights: Vec<T> = nodes
                    .iter()
                    .map(|&r| sigma * r.powi(n_dim as i32 - 1) * h)
                    .collect();
                let edges: Vec<T> = (0..=n_points)
                    .map(|i| (lit::<T>(i as f64) * h).powi(n_dim as i32 - 1))
                    .collect();
                (nodes, weights, edges)
            }
            DomainKind::BiRadial => {
                // Per-axis measure 2π r dr (each block is radial in ℝ²).
                let two_pi = lit::<T>(2.0) * T::PI();
                let nodes: Vec<T> = (0..n_points)
                    .map(|i| (lit::<T>(i as f64) + half) * h)
                    .collect();
                let weights: Vec<T> = nodes.iter().map(|&r| two_pi * r * h).collect();
                let edges: Vec<T> = (0..=n_points).map(|i| lit::<T>(i as f64) * h).collect();
                (nodes, weights, edges)
            }
            DomainKind::PeriodicBox1D => {
                let nodes: Vec<T> = (0..n_points)
                    .map(|i| -extent * half + lit::<T>(i as f64) * h)
                    .collect();
                let weights = vec![h; n_points];
                let edges = vec![T::one(); n_points + 1];
                (nodes, weights, edges)
            }
        };
        Ok(Arc::new(Domain {
            kind,
            n_dim,
            extent,
            n_points,
            h,
            axis_nodes,
            axis_weights,
            edge_factors,
        }))
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Ambient spatial dimension N.
    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    /// Truncation radius (or box length).
    pub fn extent(&self) -> T {
        self.extent
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Grid spacing `extent / n_points`.
    pub fn h(&self) -> T {
        self.h
    }

    /// Number of grid nodes (n for 1-D kinds, n² for BiRadial).
    pub fn node_count(&self) -> usize {
        match self.kind {
            DomainKind::BiRadial => self.n_points * self.n_points,
            _ => self.n_points,
        }
    }

    pub fn axis_nodes(&self) -> &[T] {
        &self.axis_nodes
    }

    pub fn axis_weights(&self) -> &[T] {
        &self.axis_weights
    }

    /// Quadrature weight of node `idx`.
    pub fn weight(&self, idx: usize) -> T {
        match self.kind {
            DomainKind::BiRadial => {
                let n = self.n_points;
                self.axis_weights[idx / n] * self.axis_weights[idx % n]
            }
            _ => self.axis_weights[idx],
        }
    }

    /// Sum of all quadrature weights.
    pub fn total_measure(&self) -> T {
        match self.kind {
            DomainKind::BiRadial => {
                let s: T = self.axis_weights.iter().copied().sum();
                s * s
            }
            _ => self.axis_weights.iter().copied().sum(),
        }
    }

    /// σ_{N-1} for the ambient dimension.
    pub fn sphere_area(&self) -> T {
        unit_sphere_area(self.n_dim)
    }

    /// ∫ f dx over the truncated domain by the node quadrature.
    pub fn integrate(&self, values: &[T]) -> Result<T> {
        if values.len() != self.node_count() {
            return Err(Error::GridMismatch {
                expected: self.node_count(),
                got: values.len(),
            });
        }
        Ok(match self.kind {
            DomainKind::BiRadial => {
                let n = self.n_points;
                let rows: Vec<T> = (0..n)
                    .map(|i| {
                        let prods: Vec<T> = (0..n)
                            .map(|j| self.axis_weights[j] * values[i * n + j])
                            .collect();
                        self.axis_weights[i] * pairwise_sum(&prods)
                    })
                    .collect();
                pairwise_sum(&rows)
            }
            _ => {
                let prods: Vec<T> = values
                    .iter()
                    .zip(&self.axis_weights)
                    .map(|(&v, &w)| v * w)
                    .collect();
                pairwise_sum(&prods)
            }
        })
    }

    /// Flux-form Laplacian of a single component.
    ///
    /// Errors on the periodic box, whose evolution is handled spectrally.
    pub fn laplacian(&self, values: &[T]) -> Result<Vec<T>> {
        if values.len() != self.node_count() {
            return Err(Error::GridMismatch {
                expected: self.node_count(),
                got: values.len(),
            });
        }
        let h2 = self.h * self.h;
        match self.kind {
            DomainKind::RadialN => {
                let n = self.n_points;
                let mut out = vec![T::zero(); n];
                let e = &self.edge_factors;
                let r = &self.axis_nodes;
                let pw = self.n_dim as i32 - 1;
                for i in 0..n {
                    let left = if i == 0 {
                        T::zero()
                    } else {
                        e[i] * (values[i] - values[i - 1])
                    };
                    let right = if i + 1 == n {
                        // Dirichlet ghost u_n = -u_{n-1}
                        e[n] * (-values[n - 1] - values[n - 1])
                    } else {
                        e[i + 1] * (values[i + 1] - values[i])
                    };
                    out[i] = (right - left) / (r[i].powi(pw) * h2);
                }
                Ok(out)
            }
            DomainKind::BiRadial => {
                let n = self.n_points;
                let mut out = vec![T::zero(); n * n];
                let e = &self.edge_factors;
                let r = &self.axis_nodes;
                for i in 0..n {
                    for j in 0..n {
                        let u = |a: usize, b: usize| values[a * n + b];
                        let mut acc;
                        // direction 1 (index i)
                        {
                            let left = if i == 0 {
                                T::zero()
                            } else {
                                e[i] * (u(i, j) - u(i - 1, j))
                            };
                            let right = if i + 1 == n {
                                e[n] * (-u(n - 1, j) - u(n - 1, j))
                            } else {
                                e[i + 1] * (u(i + 1, j) - u(i, j))
                            };
                            acc = (right - left) / (r[i] * h2);
                        }
                        // direction 2 (index j)
                        {
                            let left = if j == 0 {
                                T::zero()
                            } else {
                                e[j] * (u(i, j) - u(i, j - 1))
                            };
                            let right = if j + 1 == n {
                                e[n] * (-u(i, n - 1) - u(i, n - 1))
                            } else {
                                e[j + 1] * (u(i, j + 1) - u(i, j))
                            };
                            acc += (right - left) / (r[j] * h2);
                        }
                        out[i * n + j] = acc;
                    }
                }
                Ok(out)
            }
            DomainKind::PeriodicBox1D => Err(Error::DomainKind {
                expected: "RadialN or BiRadial",
                got: "PeriodicBox1D",
            }),
        }
    }

    /// Dirichlet energy ∫|∇u|² dx of a single component, as the edge sum
    /// adjoint to [`Domain::laplacian`]: `⟨-Δu, u⟩ = grad_norm_sq(u)` exactly.
    pub fn grad_norm_sq(&self, values: &[T]) -> Result<T> {
        if values.len() != self.node_count() {
            return Err(Error::GridMismatch {
                expected: self.node_count(),
                got: values.len(),
            });
        }
        let two = lit::<T>(2.0);
        match self.kind {
            DomainKind::RadialN => {
                let n = self.n_points;
                let e = &self.edge_factors;
                let sigma = self.sphere_area();
                let mut acc = T::zero();
                for i in 1..n {
                    let d = values[i] - values[i - 1];
                    acc += e[i] * d * d;
                }
                acc += two * e[n] * values[n - 1] * values[n - 1];
                Ok(sigma / self.h * acc)
            }
            DomainKind::BiRadial => {
                let n = self.n_points;
                let e = &self.edge_factors;
                let two_pi = two * T::PI();
                let mut total = T::zero();
                // direction 1: columns weighted by the axis-2 node weight
                for j in 0..n {
                    let mut acc = T::zero();
                    for i in 1..n {
                        let d = values[i * n + j] - values[(i - 1) * n + j];
                        acc += e[i] * d * d;
                    }
                    let last = values[(n - 1) * n + j];
                    acc += two * e[n] * last * last;
                    total += self.axis_weights[j] * acc;
                }
                // direction 2: rows weighted by the axis-1 node weight
                for i in 0..n {
                    let mut acc = T::zero();
                    for j in 1..n {
                        let d = values[i * n + j] - values[i * n + j - 1];
                        acc += e[j] * d * d;
                    }
                    let last = values[i * n + n - 1];
                    acc += two * e[n] * last * last;
                    total += self.axis_weights[i] * acc;
                }
                Ok(two_pi / self.h * total)
            }
            DomainKind::PeriodicBox1D => {
                let n = self.n_points;
                let mut acc = T::zero();
                for i in 0..n {
                    let d = values[(i + 1) % n] - values[i];
                    acc += d * d;
                }
                Ok(acc / self.h)
            }
        }
    }

    /// Piecewise-linear evaluation of a radial profile at radius `r`:
    /// constant below the first node (u'(0) = 0), linear down to 0 at
    /// `r_max`, and 0 beyond.
    pub fn interp_radial(&self, values: &[T], r: T) -> T {
        debug_assert!(matches!(self.kind, DomainKind::RadialN | DomainKind::BiRadial));
        let n = self.n_points;
        let r = r.abs();
        if r >= self.extent {
            return T::zero();
        }
        let half = lit::<T>(0.5);
        let pos = r / self.h - half;
        if pos <= T::zero() {
            return values[0];
        }
        let k = pos.floor().as_f64() as usize;
        let frac = pos - lit::<T>(k as f64);
        if k + 1 < n {
            values[k] + frac * (values[k + 1] - values[k])
        } else {
            // between the last node and the Dirichlet boundary value 0
            let t = (r - self.axis_nodes[n - 1]) / (self.extent - self.axis_nodes[n - 1]);
            values[n - 1] * (T::one() - t)
        }
    }
}

impl<T: Scalar> TryFrom<DomainSpec<T>> for Domain<T> {
    type Error = Error;
    fn try_from(s: DomainSpec<T>) -> Result<Self> {
        let arc = match s.kind {
            DomainKind::RadialN => Domain::radial(s.n_dim, s.r_max, s.n_points)?,
            DomainKind::BiRadial => {
                if s.n_dim != 4 {
                    return Err(Error::InvalidDomain("BiRadial requires N = 4".into()));
                }
                Domain::bi_radial(s.r_max, s.n_points)?
            }
            DomainKind::PeriodicBox1D => Domain::periodic_box(s.r_max, s.n_points)?,
        };
        Ok(Arc::try_unwrap(arc).unwrap_or_else(|a| (*a).clone()))
    }
}

impl<T: Scalar> From<Domain<T>> for DomainSpec<T> {
    fn from(d: Domain<T>) -> Self {
        DomainSpec {
            kind: d.kind,
            n_dim: d.n_dim,
            r_max: d.extent,
            n_points: d.n_points,
        }
    }
}

/// An M-component real grid function over a shared domain.
#[derive(Debug, Clone)]
pub struct Field<T> {
    domain: Arc<Domain<T>>,
    components: Vec<Vec<T>>,
}

impl<T: Scalar> Field<T> {
    /// Validating constructor: all components on the domain, finite values only.
    pub fn new(domain: Arc<Domain<T>>, components: Vec<Vec<T>>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidNonlinearity("field needs M >= 1 components".into()));
        }
        for c in &components {
            if c.len() != domain.node_count() {
                return Err(Error::GridMismatch {
                    expected: domain.node_count(),
                    got: c.len(),
                });
            }
            if let Some(bad) = c.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidDomain(format!(
                    "non-finite field value {bad}"
                )));
            }
        }
        Ok(Field { domain, components })
    }

    /// Constructor without the finiteness scan, for solver-internal use.
    pub(crate) fn from_parts(domain: Arc<Domain<T>>, components: Vec<Vec<T>>) -> Self {
        Field { domain, components }
    }

    pub fn zeros(domain: Arc<Domain<T>>, m: usize) -> Self {
        let n = domain.node_count();
        Field {
            domain,
            components: vec![vec![T::zero(); n]; m],
        }
    }

    /// Build from closures of the node coordinates: radial kinds get `f(r)`
    /// (BiRadial gets `f(r1, r2)`), the box gets `f(x)`.
    pub fn from_radial_fn(domain: Arc<Domain<T>>, m: usize, f: impl Fn(usize, T) -> T) -> Self {
        let nodes = domain.axis_nodes().to_vec();
        let components = (0..m)
            .map(|j| nodes.iter().map(|&r| f(j, r)).collect())
            .collect();
        Field { domain, components }
    }

    pub fn domain(&self) -> &Arc<Domain<T>> {
        &self.domain
    }

    /// Component count M.
    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> Result<&[T]> {
        self.components
            .get(j)
            .map(|c| c.as_slice())
            .ok_or(Error::ComponentOutOfRange {
                j,
                m: self.components.len(),
            })
    }

    pub fn components(&self) -> &[Vec<T>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<T>] {
        &mut self.components
    }

    pub fn into_components(self) -> Vec<Vec<T>> {
        self.components
    }

    /// Mass ∫ u_j² dx of component `j`.
    pub fn mass(&self, j: usize) -> Result<T> {
        let c = self.component(j)?;
        let sq: Vec<T> = c.iter().map(|&v| v * v).collect();
        self.domain.integrate(&sq)
    }

    /// All component masses.
    pub fn masses(&self) -> Vec<T> {
        (0..self.m()).map(|j| self.mass(j).unwrap()).collect()
    }

    /// ∫ |∇u_j|² dx of component `j`.
    pub fn grad_norm_sq(&self, j: usize) -> Result<T> {
        self.domain.grad_norm_sq(self.component(j)?)
    }

    /// Sum of ∫ |∇u_j|² over components.
    pub fn total_grad_norm_sq(&self) -> T {
        (0..self.m())
            .map(|j| self.grad_norm_sq(j).unwrap())
            .sum()
    }

    /// L^p norm of the pointwise Euclidean modulus |u|.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if p < T::one() {
            return Err(Error::InvalidExponentP(p.as_f64()));
        }
        let n = self.domain.node_count();
        let mut integrand = vec![T::zero(); n];
        for i in 0..n {
            let mut sq = T::zero();
            for c in &self.components {
                sq += c[i] * c[i];
            }
            integrand[i] = sq.sqrt().powf(p);
        }
        Ok(self.domain.integrate(&integrand)?.powf(T::one() / p))
    }

    /// Discrete Laplacian of component `j`.
    pub fn laplacian(&self, j: usize) -> Result<Vec<T>> {
        self.domain.laplacian(self.component(j)?)
    }

    /// Mass-preserving dilation `s ⋆ u = s^{N/2} u(s ·)` by monotone
    /// (piecewise-linear) interpolation; values beyond `r_max / s` are 0.
    pub fn dilate(&self, s: T) -> Result<Self> {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::NonPositiveScale(s.as_f64()));
        }
        let amp = s.powf(lit::<T>(self.domain.n_dim as f64) / lit(2.0));
        self.rescale_radial(s, amp)
    }

    /// `amp · u(s ·)` — shared implementation of dilation and the plain
    /// spatial rescaling used by the energy-map scaling checks.
    pub fn rescale_radial(&self, s: T, amp: T) -> Result<Self> {
        match self.domain.kind() {
            DomainKind::RadialN => {
                let nodes = self.domain.axis_nodes().to_vec();
                let components = self
                    .components
                    .iter()
                    .map(|c| {
                        nodes
                            .iter()
                            .map(|&r| amp * self.domain.interp_radial(c, s * r))
                            .collect()
                    })
                    .collect();
                Ok(Field {
                    domain: self.domain.clone(),
                    components,
                })
            }
            DomainKind::BiRadial => {
                let n = self.domain.n_points();
                let nodes = self.domain.axis_nodes().to_vec();
                let components = self
                    .components
                    .iter()
                    .map(|c| {
                        let mut out = vec![T::zero(); n * n];
                        for i in 0..n {
                            for j in 0..n {
                                out[i * n + j] =
                                    amp * bilinear(&self.domain, c, s * nodes[i], s * nodes[j]);
                            }
                        }
                        out
                    })
                    .collect();
                Ok(Field {
                    domain: self.domain.clone(),
                    components,
                })
            }
            DomainKind::PeriodicBox1D => Err(Error::DomainKind {
                expected: "RadialN or BiRadial",
                got: "PeriodicBox1D",
            }),
        }
    }

    /// Largest |u_j| on the outermost grid cell relative to the overall
    /// maximum — the truncation-radius diagnostic.
    pub fn boundary_fraction(&self) -> T {
        let n = self.domain.n_points();
        let mut max_all = T::zero();
        let mut max_edge = T::zero();
        for c in &self.components {
            match self.domain.kind() {
                DomainKind::BiRadial => {
                    for i in 0..n {
                        for j in 0..n {
                            let v = c[i * n + j].abs();
                            max_all = max_all.max(v);
                            if i == n - 1 || j == n - 1 {
                                max_edge = max_edge.max(v);
                            }
                        }
                    }
                }
                _ => {
                    for (i, &v) in c.iter().enumerate() {
                        max_all = max_all.max(v.abs());
                        if i == n - 1 {
                            max_edge = max_edge.max(v.abs());
                        }
                    }
                }
            }
        }
        if max_all > T::zero() {
            max_edge / max_all
        } else {
            T::zero()
        }
    }

    /// Weighted inner product ⟨u, v⟩ = Σ_j ∫ u_j v_j dx.
    pub fn inner(&self, other: &Self) -> Result<T> {
        if self.domain.as_ref() != other.domain.as_ref() || self.m() != other.m() {
            return Err(Error::DomainMismatch);
        }
        let n = self.domain.node_count();
        let mut acc = T::zero();
        for (a, b) in self.components.iter().zip(&other.components) {
            let prod: Vec<T> = (0..n).map(|i| a[i] * b[i]).collect();
            acc += self.domain.integrate(&prod)?;
        }
        Ok(acc)
    }

    /// √⟨u−v, u−v⟩ in the weighted L² norm.
    pub fn l2_distance(&self, other: &Self) -> Result<T> {
        if self.domain.as_ref() != other.domain.as_ref() || self.m() != other.m() {
            return Err(Error::DomainMismatch);
        }
        let n = self.domain.node_count();
        let mut acc = T::zero();
        for (a, b) in self.components.iter().zip(&other.components) {
            let diff: Vec<T> = (0..n).map(|i| (a[i] - b[i]) * (a[i] - b[i])).collect();
            acc += self.domain.integrate(&diff)?;
        }
        Ok(acc.sqrt())
    }
}

/// Bilinear interpolation on the BiRadial tensor grid with even reflection at
/// the axes and linear decay to 0 at the Dirichlet boundary. Interpolates
/// along axis 2 for the two bracketing rows, then along axis 1.
fn bilinear<T: Scalar>(domain: &Domain<T>, values: &[T], r1: T, r2: T) -> T {
    let n = domain.n_points();
    let eval_row = |row: &[T], r: T| -> T {
        let r = r.abs();
        if r >= domain.extent() {
            return T::zero();
        }
        let half = lit::<T>(0.5);
        let pos = r / domain.h() - half;
        if pos <= T::zero() {
            return row[0];
        }
        let k = pos.floor().as_f64() as usize;
        let frac = pos - lit::<T>(k as f64);
        if k + 1 < n {
            row[k] + frac * (row[k + 1] - row[k])
        } else {
            let nodes = domain.axis_nodes();
            let t = (r - nodes[n - 1]) / (domain.extent() - nodes[n - 1]);
            row[n - 1] * (T::one() - t)
        }
    };
    let r1 = r1.abs();
    if r1 >= domain.extent() {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    let pos = r1 / domain.h() - half;
    let row_at = |i: usize| &values[i * n..(i + 1) * n];
    if pos <= T::zero() {
        return eval_row(row_at(0), r2);
    }
    let k = pos.floor().as_f64() as usize;
    let frac = pos - lit::<T>(k as f64);
    if k + 1 < n {
        let a = eval_row(row_at(k), r2);
        let b = eval_row(row_at(k + 1), r2);
        a + frac * (b - a)
    } else {
        let nodes = domain.axis_nodes();
        let t = (r1 - nodes[n - 1]) / (domain.extent() - nodes[n - 1]);
        eval_row(row_at(n - 1), r2) * (T::one() - t)
    }
}
