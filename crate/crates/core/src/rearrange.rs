//! Schwarz symmetrization and the two-function radial merge on measured
//! grids.
//!
//! Both operations run through the same machinery: collect the `(value,
//! cell-measure)` pairs of a grid function, sort them by value (descending,
//! stable in the original cell order), and re-bin the resulting decreasing
//! step profile onto the radial target grid by *exact averaging* over each
//! target cell's measure bin. Sorting is exact, so every layer-cake
//! quantity is preserved to machine precision before binning; averaging
//! makes re-binning a projection, so an already nonincreasing radial
//! profile is reproduced exactly and the rearrangement is idempotent.
//!
//! The merge `{u, v}*` is the radial profile whose superlevel sets carry
//! measure `|{|u|>t}| + |{|v|>t}|`; it is computed by merging the two
//! sorted cell lists, which is literally adding the distribution functions.

use crate::error::{Error, Result};
use crate::grid::{Domain, DomainKind, Field};
use crate::scalar::{lit, Scalar};
use std::sync::Arc;

/// Distribution-function view of a grid function: the sorted cells of
/// `|u|` with their measures.
#[derive(Debug, Clone)]
pub struct LayerCake<T> {
    /// (value, cell measure), values nonincreasing.
    cells: Vec<(T, T)>,
    /// Cumulative measure after each cell.
    cums: Vec<T>,
}

impl<T: Scalar> LayerCake<T> {
    /// Build from one scalar component on its domain.
    pub fn from_scalar(domain: &Domain<T>, values: &[T]) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::GridMismatch {
                expected: domain.node_count(),
                got: values.len(),
            });
        }
        let mut cells: Vec<(T, T)> = values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v.abs(), domain.weight(i)))
            .collect();
        // stable sort: ties keep the original cell (radius) order
        cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut cums = Vec::with_capacity(cells.len());
        let mut acc = T::zero();
        for c in &cells {
            acc += c.1;
            cums.push(acc);
        }
        Ok(LayerCake { cells, cums })
    }

    /// Merge two cakes: the distribution functions add.
    pub fn merge(&self, other: &Self) -> Self {
        let mut cells = Vec::with_capacity(self.cells.len() + other.cells.len());
        let (mut i, mut j) = (0, 0);
        while i < self.cells.len() && j < other.cells.len() {
            if self.cells[i].0 >= other.cells[j].0 {
                cells.push(self.cells[i]);
                i += 1;
            } else {
                cells.push(other.cells[j]);
                j += 1;
            }
        }
        cells.extend_from_slice(&self.cells[i..]);
        cells.extend_from_slice(&other.cells[j..]);
        let mut cums = Vec::with_capacity(cells.len());
        let mut acc = T::zero();
        for c in &cells {
            acc += c.1;
            cums.push(acc);
        }
        LayerCake { cells, cums }
    }

    /// Total measure carried by the cake.
    pub fn total_measure(&self) -> T {
        self.cums.last().copied().unwrap_or_else(T::zero)
    }

    /// μ(t) = measure of { |u| > t }.
    pub fn mu_of(&self, t: T) -> T {
        // first index with value <= t
        let mut lo = 0usize;
        let mut hi = self.cells.len();
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cells[mid].0 > t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            T::zero()
        } else {
            self.cums[lo - 1]
        }
    }

    /// The `(value, cumulative measure)` pairs with strictly decreasing
    /// values (tied cells collapsed).
    pub fn pairs(&self) -> Vec<(T, T)> {
        let mut out: Vec<(T, T)> = Vec::new();
        for (k, &(v, _)) in self.cells.iter().enumerate() {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = self.cums[k],
                _ => out.push((v, self.cums[k])),
            }
        }
        out
    }

    /// Average the decreasing step profile over consecutive measure bins of
    /// widths `bins`; measure beyond the cake's total counts as value 0.
    pub fn rebin(&self, bins: &[T]) -> Vec<T> {
        let mut out = Vec::with_capacity(bins.len());
        let mut k = 0usize; // current source cell
        let mut used = T::zero(); // measure of cell k already consumed
        for &w in bins {
            let mut remaining = w;
            let mut acc = T::zero();
            while remaining > T::zero() && k < self.cells.len() {
                let (v, cw) = self.cells[k];
                let avail = cw - used;
                let take = avail.min(remaining);
                acc += v * take;
                used += take;
                remaining -= take;
                if used >= cw {
                    k += 1;
                    used = T::zero();
                }
            }
            out.push(acc / w);
        }
        out
    }
}

/// The radial domain a rearrangement lands on: the domain itself for
/// `RadialN`, the volume-matched ball of ℝ⁴ for `BiRadial`.
pub fn schwarz_target<T: Scalar>(domain: &Arc<Domain<T>>) -> Result<Arc<Domain<T>>> {
    match domain.kind() {
        DomainKind::RadialN => Ok(domain.clone()),
        DomainKind::BiRadial => {
            // |B_R| in ℝ⁴ = π²R⁴/2 matches the polydisc measure π² r_max⁴
            let r = lit::<T>(2.0).powf(lit(0.25)) * domain.extent();
            Domain::radial(4, r, domain.n_points())
        }
        DomainKind::PeriodicBox1D => Err(Error::DomainKind {
            expected: "RadialN or BiRadial",
            got: "PeriodicBox1D",
        }),
    }
}

fn target_bins<T: Scalar>(target: &Domain<T>) -> Vec<T> {
    (0..target.node_count()).map(|i| target.weight(i)).collect()
}

/// Componentwise symmetric-decreasing rearrangement u* = (u₁*, …, u_M*).
pub fn schwarz<T: Scalar>(u: &Field<T>) -> Result<Field<T>> {
    let target = schwarz_target(u.domain())?;
    let bins = target_bins(&target);
    let comps = u
        .components()
        .iter()
        .map(|c| {
            let cake = LayerCake::from_scalar(u.domain(), c)?;
            Ok(cake.rebin(&bins))
        })
        .collect::<Result<Vec<_>>>()?;
    Field::new(target, comps)
}

/// The radial merge {u, v}* of two single-component fields on domains with
/// the same ambient dimension; the result lives on `u`'s rearrangement
/// target (values whose cumulative measure exceeds the target are dropped).
pub fn merge_star<T: Scalar>(u: &Field<T>, v: &Field<T>) -> Result<Field<T>> {
    if u.m() != 1 || v.m() != 1 {
        return Err(Error::ComponentOutOfRange {
            j: 1,
            m: u.m().max(v.m()),
        });
    }
    if u.domain().n_dim() != v.domain().n_dim() {
        return Err(Error::DomainMismatch);
    }
    let target = schwarz_target(u.domain())?;
    let bins = target_bins(&target);
    let cu = LayerCake::from_scalar(u.domain(), u.component(0)?)?;
    let cv = LayerCake::from_scalar(v.domain(), v.component(0)?)?;
    let merged = cu.merge(&cv);
    Field::new(target, vec![merged.rebin(&bins)])
}

/// A nonnegative nondecreasing profile on [0, ∞), the factor class of the
/// product-rearrangement inequality.
#[derive(Debug, Clone)]
pub enum MonotoneProfile<T> {
    /// t ↦ c·t^r with c > 0, r > 0.
    Power { c: T, r: T },
    /// Monotone piecewise-linear through (ts, vals), constant beyond the
    /// last sample. Plateaus allowed.
    PiecewiseLinear { ts: Vec<T>, vals: Vec<T> },
}

impl<T: Scalar> MonotoneProfile<T> {
    /// Verify monotonicity (and positivity of the parameters).
    pub fn validate(&self) -> Result<()> {
        match self {
            MonotoneProfile::Power { c, r } => {
                if !(*c > T::zero()) || !(*r > T::zero()) {
                    return Err(Error::NotMonotone {
                        t0: 0.0,
                        v0: c.as_f64(),
                        t1: r.as_f64(),
                        v1: 0.0,
                    });
                }
            }
            MonotoneProfile::PiecewiseLinear { ts, vals } => {
                if ts.len() != vals.len() || ts.len() < 2 {
                    return Err(Error::InvalidNonlinearity(
                        "piecewise profile needs matching ts/vals with >= 2 samples".into(),
                    ));
                }
                for w in 0..ts.len() - 1 {
                    if !(ts[w + 1] > ts[w]) || vals[w + 1] < vals[w] {
                        return Err(Error::NotMonotone {
                            t0: ts[w].as_f64(),
                            v0: vals[w].as_f64(),
                            t1: ts[w + 1].as_f64(),
                            v1: vals[w + 1].as_f64(),
                        });
                    }
                }
                if vals.iter().any(|v| *v < T::zero()) {
                    return Err(Error::InvalidNonlinearity(
                        "profile must be nonnegative".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, t: T) -> T {
        let t = t.abs();
        match self {
            MonotoneProfile::Power { c, r } => *c * t.powf(*r),
            MonotoneProfile::PiecewiseLinear { ts, vals } => {
                let n = ts.len();
                if t <= ts[0] {
                    return vals[0];
                }
                if t >= ts[n - 1] {
                    return vals[n - 1];
                }
                let mut lo = 0;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if ts[mid] <= t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let s = (t - ts[lo]) / (ts[hi] - ts[lo]);
                vals[lo] + s * (vals[hi] - vals[lo])
            }
        }
    }
}

/// ∫ ∏_j F̃_j(u_j*) − ∫ ∏_j F̃_j(|u_j|) for nondecreasing nonnegative
/// factors; nonnegative up to re-binning tolerance.
pub fn product_rearrangement_gap<T: Scalar>(
    profiles: &[MonotoneProfile<T>],
    u: &Field<T>,
) -> Result<T> {
    if profiles.len() != u.m() {
        return Err(Error::Config(format!(
            "{} profiles for {} components",
            profiles.len(),
            u.m()
        )));
    }
    for p in profiles {
        p.validate()?;
    }
    let star = schwarz(u)?;
    let eval_integral = |f: &Field<T>| -> Result<T> {
        let n = f.domain().node_count();
        let mut vals = vec![T::zero(); n];
        for (i, slot) in vals.iter_mut().enumerate() {
            let mut prod = T::one();
            for (j, p) in profiles.iter().enumerate() {
                prod = prod * p.eval(f.components()[j][i]);
            }
            *slot = prod;
        }
        f.domain().integrate(&vals)
    };
    Ok(eval_integral(&star)? - eval_integral(u)?)
}

/// ∫ ∏_j {u_j, v_j}* − (∫ ∏_j u_j + ∫ ∏_j v_j) for nonnegative
/// M̄-component fields; nonnegative up to re-binning tolerance.
pub fn merge_product_check<T: Scalar>(u: &Field<T>, v: &Field<T>) -> Result<T> {
    if u.m() != v.m() {
        return Err(Error::DomainMismatch);
    }
    for f in [u, v] {
        for c in f.components() {
            if c.iter().any(|x| *x < T::zero()) {
                return Err(Error::InvalidNonlinearity(
                    "merge product check needs nonnegative fields".into(),
                ));
            }
        }
    }
    let product_integral = |f: &Field<T>| -> Result<T> {
        let n = f.domain().node_count();
        let mut vals = vec![T::zero(); n];
        for (i, slot) in vals.iter_mut().enumerate() {
            let mut prod = T::one();
            for c in f.components() {
                prod = prod * c[i];
            }
            *slot = prod;
        }
        f.domain().integrate(&vals)
    };
    let lhs = product_integral(u)? + product_integral(v)?;

    let target = schwarz_target(u.domain())?;
    let bins = target_bins(&target);
    let mut merged_comps = Vec::with_capacity(u.m());
    for j in 0..u.m() {
        let cu = LayerCake::from_scalar(u.domain(), u.component(j)?)?;
        let cv = LayerCake::from_scalar(v.domain(), v.component(j)?)?;
        merged_comps.push(cu.merge(&cv).rebin(&bins));
    }
    let merged = Field::new(target, merged_comps)?;
    let rhs = product_integral(&merged)?;
    Ok(rhs - lhs)
}

/// Right-continuous generalized inverse `F⁻¹(y) = inf{ s > 0 : F(s) > y }`
/// of a nondecreasing profile, evaluated by bisection on [0, t_max];
/// `∞` encodes an empty strict superlevel set.
#[derive(Debug, Clone)]
pub struct GeneralizedInverse<T> {
    profile: MonotoneProfile<T>,
    t_max: T,
    tol: T,
}

pub fn generalized_inverse<T: Scalar>(
    profile: MonotoneProfile<T>,
    t_max: T,
) -> Result<GeneralizedInverse<T>> {
    profile.validate()?;
    Ok(GeneralizedInverse {
        profile,
        t_max,
        tol: lit::<T>(1e-12) * t_max,
    })
}

impl<T: Scalar> GeneralizedInverse<T> {
    pub fn eval(&self, y: T) -> T {
        if !(self.profile.eval(self.t_max) > y) {
            // both {F(v) > y} and {v > ∞} are empty
            return T::infinity();
        }
        let mut lo = T::zero();
        let mut hi = self.t_max;
        // invariant: F(hi) > y; F(lo) <= y unless already at 0
        if self.profile.eval(lo) > y {
            return T::zero();
        }
        while hi - lo > self.tol {
            let mid = (lo + hi) * lit(0.5);
            if self.profile.eval(mid) > y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Sampled check of the level-set identity {F(v) > t} = {v > F⁻¹(t)},
    /// skipping samples within tolerance of the inverse itself.
    pub fn levelset_identity_holds(&self, v_samples: &[T], t: T) -> bool {
        let inv = self.eval(t);
        v_samples
            .iter()
            .filter(|&&v| (v - inv).abs() > lit(1e-6))
            .all(|&v| (self.profile.eval(v) > t) == (v > inv))
    }
}
