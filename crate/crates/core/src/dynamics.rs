//! Split-step time evolution of the coupled system on a periodic box and
//! the orbital-stability experiment.
//!
//! One Strang step is
//!
//! ```text
//!     Φ_j ← e^{-i(dt/2) g_j(|Φ|)} Φ_j,     g_j = ∂_jF(|Φ|)/|Φ_j|,
//!     Φ̂_j ← e^{+i k² dt} Φ̂_j,
//!     Φ_j ← e^{-i(dt/2) g_j(|Φ|)} Φ_j,
//! ```
//!
//! the sign of the Fourier multiplier fixed by the convention
//! `i ∂_t Φ_j − ΔΦ_j = ∂_jF(Φ)` with `F(Φ) = F(|Φ₁|, …, |Φ_M|)`. Both
//! substeps preserve |Φ_j| pointwise or are unitary, so the masses are
//! conserved to rounding; the energy is conserved to O(dt²).

use crate::error::{Error, Result};
use crate::grid::{Domain, DomainKind, Field};
use crate::nonlin::Nonlinearity;
use crate::scalar::{lit, Scalar};
use num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};
use std::sync::Arc;

/// Complex M-component state on the periodic box at time `t`.
#[derive(Debug, Clone)]
pub struct WaveState<T> {
    domain: Arc<Domain<T>>,
    components: Vec<Vec<Complex<T>>>,
    pub t: T,
}

impl<T: Scalar> WaveState<T> {
    pub fn new(domain: Arc<Domain<T>>, components: Vec<Vec<Complex<T>>>) -> Result<Self> {
        if domain.kind() != DomainKind::PeriodicBox1D {
            return Err(Error::DomainKind {
                expected: "PeriodicBox1D",
                got: domain.kind().name(),
            });
        }
        for c in &components {
            if c.len() != domain.n_points() {
                return Err(Error::GridMismatch {
                    expected: domain.n_points(),
                    got: c.len(),
                });
            }
        }
        Ok(WaveState {
            domain,
            components,
            t: T::zero(),
        })
    }

    /// Lift a real profile (sampled on this box) to a complex state.
    pub fn from_real(domain: Arc<Domain<T>>, real: &[Vec<T>]) -> Result<Self> {
        let components = real
            .iter()
            .map(|c| c.iter().map(|&v| Complex::new(v, T::zero())).collect())
            .collect();
        WaveState::new(domain, components)
    }

    pub fn domain(&self) -> &Arc<Domain<T>> {
        &self.domain
    }

    pub fn m(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<Complex<T>>] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [Vec<Complex<T>>] {
        &mut self.components
    }

    /// ∫ |Φ_j|² dx.
    pub fn mass(&self, j: usize) -> T {
        let h = self.domain.h();
        self.components[j].iter().map(|c| c.norm_sqr()).sum::<T>() * h
    }

    pub fn masses(&self) -> Vec<T> {
        (0..self.m()).map(|j| self.mass(j)).collect()
    }

    /// Pointwise moduli |Φ_j(x)|.
    pub fn moduli(&self) -> Vec<Vec<T>> {
        self.components
            .iter()
            .map(|c| c.iter().map(|z| z.norm()).collect())
            .collect()
    }

    /// Multiply every component by a constant phase.
    pub fn rotate(&mut self, theta: T) {
        let ph = Complex::from_polar(T::one(), theta);
        for c in &mut self.components {
            for z in c.iter_mut() {
                *z = *z * ph;
            }
        }
    }
}

/// Split-step propagator with cached FFT plans and the linear multiplier.
pub struct Stepper<T: FftNum> {
    f: Nonlinearity<T>,
    domain: Arc<Domain<T>>,
    dt: T,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
    linear_phase: Vec<Complex<T>>,
}

impl<T: Scalar + FftNum> Stepper<T> {
    pub fn new(f: &Nonlinearity<T>, domain: &Arc<Domain<T>>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::NonPositiveTimeStep(dt.as_f64()));
        }
        if domain.kind() != DomainKind::PeriodicBox1D {
            return Err(Error::DomainKind {
                expected: "PeriodicBox1D",
                got: domain.kind().name(),
            });
        }
        let n = domain.n_points();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let linear_phase = wavenumbers(domain)
            .into_iter()
            .map(|k| Complex::from_polar(T::one(), k * k * dt))
            .collect();
        Ok(Stepper {
            f: f.clone(),
            domain: domain.clone(),
            dt,
            fft,
            ifft,
            linear_phase,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    /// One Strang step in place.
    pub fn step(&self, state: &mut WaveState<T>) {
        let half_dt = self.dt * lit::<T>(0.5);
        self.nonlinear_phase(state, half_dt);
        self.linear_full(state);
        self.nonlinear_phase(state, half_dt);
        state.t = state.t + self.dt;
    }

    /// Φ_j ← e^{-i·τ·g_j(|Φ|)} Φ_j with g_j = ∂_jF(|Φ|)/|Φ_j|; the phase
    /// rate takes its limit value (zero for the catalogued profiles) where
    /// the modulus vanishes.
    fn nonlinear_phase(&self, state: &mut WaveState<T>, tau: T) {
        let n = self.domain.n_points();
        let m = state.m();
        let mut moduli = vec![T::zero(); m];
        let mut rates = vec![T::zero(); m];
        for i in 0..n {
            for (j, md) in moduli.iter_mut().enumerate() {
                *md = state.components[j][i].norm();
            }
            self.f.phase_rate_into(&moduli, &mut rates);
            for j in 0..m {
                if rates[j] != T::zero() {
                    let ph = Complex::from_polar(T::one(), -tau * rates[j]);
                    state.components[j][i] = state.components[j][i] * ph;
                }
            }
        }
    }

    /// Φ̂ ← e^{i k² dt} Φ̂ through the cached plans.
    fn linear_full(&self, state: &mut WaveState<T>) {
        let n = self.domain.n_points();
        let scale = T::one() / lit::<T>(n as f64);
        for c in state.components_mut() {
            self.fft.process(c);
            for (z, ph) in c.iter_mut().zip(&self.linear_phase) {
                *z = *z * *ph;
            }
            self.ifft.process(c);
            for z in c.iter_mut() {
                *z = *z * scale;
            }
        }
    }
}

/// One Strang step as a pure function (plans are rebuilt; loops should use
/// [`Stepper`]).
pub fn step<T: Scalar + FftNum>(
    f: &Nonlinearity<T>,
    state: &WaveState<T>,
    dt: T,
) -> Result<WaveState<T>> {
    let stepper = Stepper::new(f, state.domain(), dt)?;
    let mut next = state.clone();
    stepper.step(&mut next);
    Ok(next)
}

/// Angular wavenumbers 2π m̃ / L in FFT ordering.
fn wavenumbers<T: Scalar>(domain: &Domain<T>) -> Vec<T> {
    let n = domain.n_points();
    let l = domain.extent();
    let two_pi = lit::<T>(2.0) * T::PI();
    (0..n)
        .map(|m| {
            let m_signed = if m <= n / 2 {
                m as f64
            } else {
                m as f64 - n as f64
            };
            two_pi * lit::<T>(m_signed) / l
        })
        .collect()
}

/// Total energy on the box: spectral kinetic part plus the quadrature of
/// −F(|Φ|).
pub fn box_energy<T: Scalar + FftNum>(f: &Nonlinearity<T>, state: &WaveState<T>) -> T {
    let domain = state.domain();
    let n = domain.n_points();
    let h = domain.h();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ks = wavenumbers(domain.as_ref());
    let mut kinetic = T::zero();
    for c in state.components() {
        let mut hat = c.clone();
        fft.process(&mut hat);
        // Parseval for the unnormalized transform: Σ_x |∇Φ|² = Σ_k k²|Φ̂_k|²/n
        let mut acc = T::zero();
        for (z, k) in hat.iter().zip(&ks) {
            acc += *k * *k * z.norm_sqr();
        }
        kinetic += acc * h / lit::<T>(n as f64);
    }
    let m = state.m();
    let mut point = vec![T::zero(); m];
    let mut potential = T::zero();
    for i in 0..n {
        for (j, p) in point.iter_mut().enumerate() {
            *p = state.components()[j][i].norm();
        }
        potential += f.value(&point);
    }
    kinetic * lit::<T>(0.5) - potential * h
}

/// Squared H¹ norm Σ_j ∫ |Φ_j|² + |∇Φ_j|² via the spectral derivative.
pub fn h1_norm_sq<T: Scalar + FftNum>(state: &WaveState<T>) -> T {
    let domain = state.domain();
    let n = domain.n_points();
    let h = domain.h();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ks = wavenumbers(domain.as_ref());
    let mut total = T::zero();
    for c in state.components() {
        let mut hat = c.clone();
        fft.process(&mut hat);
        let mut acc = T::zero();
        for (z, k) in hat.iter().zip(&ks) {
            acc += (T::one() + *k * *k) * z.norm_sqr();
        }
        total += acc * h / lit::<T>(n as f64);
    }
    total
}

/// Minimum H¹ distance from `state` to the sampled ground-state set, over
/// grid translations (argmax of the modulus cross-correlation) and
/// independent per-component global phases.
pub fn orbital_distance<T: Scalar + FftNum>(
    state: &WaveState<T>,
    samples: &[Field<T>],
) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::EmptyOrbitSet);
    }
    let domain = state.domain();
    let n = domain.n_points();
    let h = domain.h();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let ks = wavenumbers(domain.as_ref());

    let mut best = T::infinity();
    for u in samples {
        if u.domain().as_ref() != domain.as_ref() || u.m() != state.m() {
            return Err(Error::DomainMismatch);
        }
        // cross-correlate summed moduli to find the best integer shift
        let mut corr = vec![Complex::new(T::zero(), T::zero()); n];
        {
            let mut a = vec![Complex::new(T::zero(), T::zero()); n];
            let mut b = vec![Complex::new(T::zero(), T::zero()); n];
            for j in 0..state.m() {
                for i in 0..n {
                    a[i] = a[i] + Complex::new(state.components()[j][i].norm(), T::zero());
                    b[i] = b[i] + Complex::new(u.components()[j][i].abs(), T::zero());
                }
            }
            fft.process(&mut a);
            fft.process(&mut b);
            for i in 0..n {
                corr[i] = a[i] * b[i].conj();
            }
            ifft.process(&mut corr);
        }
        let mut shift = 0usize;
        let mut best_corr = T::neg_infinity();
        for (i, z) in corr.iter().enumerate() {
            if z.re > best_corr {
                best_corr = z.re;
                shift = i;
            }
        }
        // per-component optimal global phase at this shift, then the H¹
        // distance via the spectral derivative
        let mut dist_sq = T::zero();
        for j in 0..state.m() {
            let phi = &state.components()[j];
            let uj = u.components()[j].as_slice();
            let mut inner = Complex::new(T::zero(), T::zero());
            for (i, z) in phi.iter().enumerate() {
                let ui = uj[(i + n - shift) % n];
                inner = inner + *z * Complex::new(ui, T::zero());
            }
            let theta = if inner.norm() > T::zero() {
                inner.arg()
            } else {
                T::zero()
            };
            let ph = Complex::from_polar(T::one(), theta);
            let mut diff = vec![Complex::new(T::zero(), T::zero()); n];
            for (i, slot) in diff.iter_mut().enumerate() {
                let ui = uj[(i + n - shift) % n];
                *slot = phi[i] - ph * Complex::new(ui, T::zero());
            }
            fft.process(&mut diff);
            let mut acc = T::zero();
            for (z, k) in diff.iter().zip(&ks) {
                acc += (T::one() + *k * *k) * z.norm_sqr();
            }
            dist_sq += acc * h / lit::<T>(n as f64);
        }
        best = best.min(dist_sq.sqrt());
    }
    Ok(best)
}

/// Observables sampled along a trajectory.
#[derive(Debug, Clone)]
pub struct ObservableRow<T> {
    pub t: T,
    pub masses: Vec<T>,
    pub energy: T,
    pub orbital_distance: Option<T>,
}

/// Maximum relative drifts over a trajectory.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ConservationReport<T> {
    pub mass_drift: Vec<T>,
    pub energy_drift: T,
}

pub fn conservation_report<T: Scalar>(rows: &[ObservableRow<T>]) -> ConservationReport<T> {
    if rows.is_empty() {
        return ConservationReport {
            mass_drift: vec![],
            energy_drift: T::zero(),
        };
    }
    let m = rows[0].masses.len();
    let mut mass_drift = vec![T::zero(); m];
    for (j, drift) in mass_drift.iter_mut().enumerate() {
        let m0 = rows[0].masses[j];
        let scale = m0.abs().max(lit(1e-30));
        for row in rows {
            *drift = drift.max((row.masses[j] - m0).abs() / scale);
        }
    }
    let e0 = rows[0].energy;
    let scale = e0.abs().max(lit(1e-12));
    let mut energy_drift = T::zero();
    for row in rows {
        energy_drift = energy_drift.max((row.energy - e0).abs() / scale);
    }
    ConservationReport {
        mass_drift,
        energy_drift,
    }
}

/// Sample a radial field onto the periodic box: u_box(x) = u(|x|).
pub fn transplant_radial<T: Scalar>(
    radial: &Field<T>,
    box_domain: &Arc<Domain<T>>,
) -> Result<Vec<Vec<T>>> {
    if box_domain.kind() != DomainKind::PeriodicBox1D {
        return Err(Error::DomainKind {
            expected: "PeriodicBox1D",
            got: box_domain.kind().name(),
        });
    }
    if radial.domain().kind() != DomainKind::RadialN {
        return Err(Error::DomainKind {
            expected: "RadialN",
            got: radial.domain().kind().name(),
        });
    }
    let xs = box_domain.axis_nodes().to_vec();
    Ok(radial
        .components()
        .iter()
        .map(|c| {
            xs.iter()
                .map(|&x| radial.domain().interp_radial(c, x))
                .collect()
        })
        .collect())
}

/// Polish a transplanted profile into the box-discrete standing-wave
/// profile: fixed-mass gradient descent on the box energy with the spectral
/// Laplacian. Returns the refined profile with its multipliers.
pub fn polish_on_box<T: Scalar + FftNum>(
    f: &Nonlinearity<T>,
    box_domain: &Arc<Domain<T>>,
    profile: Vec<Vec<T>>,
    masses: &[T],
    iters: usize,
) -> Result<(Vec<Vec<T>>, Vec<T>)> {
    let n = box_domain.n_points();
    let h = box_domain.h();
    let m = profile.len();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let ks = wavenumbers(box_domain.as_ref());
    let mut u = profile;

    let rescale = |u: &mut Vec<Vec<T>>| {
        for (j, c) in u.iter_mut().enumerate() {
            let mass: T = c.iter().map(|&v| v * v).sum::<T>() * h;
            if mass > T::zero() {
                let factor = (masses[j] / mass).sqrt();
                for v in c.iter_mut() {
                    *v = *v * factor;
                }
            }
        }
    };
    rescale(&mut u);

    let spectral_lap = |c: &[T]| -> Vec<T> {
        let mut hat: Vec<Complex<T>> = c.iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft.process(&mut hat);
        for (z, k) in hat.iter_mut().zip(&ks) {
            *z = *z * Complex::new(-*k * *k, T::zero());
        }
        ifft.process(&mut hat);
        let scale = T::one() / lit::<T>(n as f64);
        hat.into_iter().map(|z| z.re * scale).collect()
    };
    // H¹ smoothing (1 + k²)⁻¹, which keeps an O(1) step stable at every
    // wavenumber
    let smooth = |c: &[T]| -> Vec<T> {
        let mut hat: Vec<Complex<T>> = c.iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft.process(&mut hat);
        for (z, k) in hat.iter_mut().zip(&ks) {
            *z = *z / Complex::new(T::one() + *k * *k, T::zero());
        }
        ifft.process(&mut hat);
        let scale = T::one() / lit::<T>(n as f64);
        hat.into_iter().map(|z| z.re * scale).collect()
    };

    let mut lambda = vec![T::zero(); m];
    let tau = lit::<T>(0.3);
    for _ in 0..iters {
        // gradient −Δu − ∇F(u), H¹-preconditioned, mass direction removed
        let mut point = vec![T::zero(); m];
        let mut gradf = vec![T::zero(); m];
        let mut grads: Vec<Vec<T>> = Vec::with_capacity(m);
        for c in u.iter() {
            grads.push(spectral_lap(c).into_iter().map(|v| -v).collect());
        }
        for i in 0..n {
            for (j, p) in point.iter_mut().enumerate() {
                *p = u[j][i];
            }
            f.grad_into(&point, &mut gradf);
            for (j, g) in grads.iter_mut().enumerate() {
                g[i] -= gradf[j];
            }
        }
        for j in 0..m {
            // multiplier first; tangentialize, smooth, tangentialize again
            // (the sandwich keeps the sphere-critical points as the only
            // fixed points of the smoothed descent)
            let inner: T = grads[j].iter().zip(&u[j]).map(|(&g, &v)| g * v).sum::<T>() * h;
            let mass: T = u[j].iter().map(|&v| v * v).sum::<T>() * h;
            lambda[j] = -inner / mass;
            for (g, &v) in grads[j].iter_mut().zip(&u[j]) {
                *g = *g + lambda[j] * v;
            }
            let smoothed = smooth(&grads[j]);
            let s_inner: T = smoothed.iter().zip(&u[j]).map(|(&g, &v)| g * v).sum::<T>() * h;
            let coef = s_inner / mass;
            for ((g, &sv), &v) in grads[j].iter_mut().zip(&smoothed).zip(&u[j]) {
                *g = sv - coef * v;
            }
        }
        for (c, g) in u.iter_mut().zip(&grads) {
            for (v, &gv) in c.iter_mut().zip(g) {
                *v = *v - tau * gv;
            }
        }
        rescale(&mut u);
    }
    Ok((u, lambda))
}
