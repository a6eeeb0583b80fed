//! Pure-state propagation and the closed-form solutions used as oracles.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::hamiltonian::OperatorMatrix;
use crate::linalg::{max_abs, GeneralEigen, HermitianEigen};
use crate::model::AtomLevel;
use crate::ode::{self, Tolerances};
use crate::state_space::{BasisState, StateSpace};
use crate::{CMatrix, CVector, Error, Result, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Sampled amplitudes, one row per time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub basis: Arc<StateSpace>,
    pub times: Vec<f64>,
    pub amplitudes: CMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> CVector {
        self.amplitudes.row(k).transpose()
    }

    pub fn amplitude(&self, k: usize, state: &BasisState) -> Option<C64> {
        Some(self.amplitudes[(k, self.basis.index_of(state)?)])
    }

    pub fn population(&self, k: usize, state: &BasisState) -> Option<f64> {
        self.amplitude(k, state).map(|c| c.norm_sqr())
    }

    /// `|c|²`, one row per time.
    pub fn populations(&self) -> nalgebra::DMatrix<f64> {
        self.amplitudes.map(|c| c.norm_sqr())
    }

    /// `|ψ(t)|²` per time.
    pub fn norms_sq(&self) -> Vec<f64> {
        self.amplitudes
            .row_iter()
            .map(|r| r.iter().map(|c| c.norm_sqr()).sum())
            .collect()
    }

    pub fn final_state(&self) -> Option<CVector> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }
}

/// How to propagate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagator {
    /// Eigendecomposition; falls back to integration for ill-conditioned
    /// non-Hermitian matrices.
    Spectral,
    /// Adaptive Dormand–Prince integration.
    Adaptive(Tolerances),
}

/// Eigenvector condition number above which non-Hermitian propagation
/// switches to the integrator.
pub const CONDITION_LIMIT: f64 = 1e8;

/// `n` evenly spaced times on `[0, t_end]`.
pub fn linspace(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![t_end],
        _ => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
    }
}

fn check_state(h: &OperatorMatrix, psi0: &CVector) -> Result<()> {
    if psi0.len() != h.dim() {
        return Err(Error::LengthMismatch {
            expected: h.dim(),
            found: psi0.len(),
        });
    }
    Ok(())
}

fn hermitian_tol(h: &OperatorMatrix) -> f64 {
    1e-12 * max_abs(&h.matrix).max(1.0)
}

fn trajectory(h: &OperatorMatrix, times: &[f64], rows: impl Iterator<Item = CVector>) -> Trajectory {
    let mut amplitudes = CMatrix::zeros(times.len(), h.dim());
    for (k, psi) in rows.enumerate() {
        amplitudes.row_mut(k).copy_from(&psi.transpose());
    }
    Trajectory {
        basis: h.basis.clone(),
        times: times.to_vec(),
        amplitudes,
    }
}

/// `ψ(t) = V e^{-iΛt} V^† ψ0` for Hermitian `h`; non-Hermitian input is
/// handed to [`evolve_conditional`]. Times may be negative.
pub fn evolve_hermitian(h: &OperatorMatrix, psi0: &CVector, times: &[f64]) -> Result<Trajectory> {
    check_state(h, psi0)?;
    if !h.is_hermitian(hermitian_tol(h)) {
        return evolve_conditional(h, psi0, times);
    }
    let eig = HermitianEigen::new(&h.matrix);
    let c0 = eig.vectors.adjoint() * psi0;
    Ok(trajectory(
        h,
        times,
        times.iter().map(|&t| {
            let phased = CVector::from_iterator(
                c0.len(),
                c0.iter().zip(&eig.values).map(|(c, &l)| c * C64::new(0.0, -l * t).exp()),
            );
            &eig.vectors * phased
        }),
    ))
}

/// Propagation under a non-Hermitian (conditional) Hamiltonian through its
/// eigendecomposition, or by adaptive integration when the eigenvectors are
/// ill-conditioned.
pub fn evolve_conditional(h: &OperatorMatrix, psi0: &CVector, times: &[f64]) -> Result<Trajectory> {
    check_state(h, psi0)?;
    match GeneralEigen::new(&h.matrix) {
        Ok(eig) if eig.condition <= CONDITION_LIMIT => {
            let c0 = &eig.inverse * psi0;
            Ok(trajectory(
                h,
                times,
                times.iter().map(|&t| {
                    let phased = CVector::from_iterator(
                        c0.len(),
                        c0.iter().zip(&eig.values).map(|(c, l)| c * (-I * l * t).exp()),
                    );
                    &eig.vectors * phased
                }),
            ))
        }
        _ => {
            log::debug!("eigenvectors ill-conditioned; integrating instead");
            evolve_adaptive(h, psi0, times, Tolerances::default())
        }
    }
}

/// Adaptive Runge–Kutta integration of `i dψ/dt = H ψ` from `t = 0`.
pub fn evolve_adaptive(h: &OperatorMatrix, psi0: &CVector, times: &[f64], tol: Tolerances) -> Result<Trajectory> {
    check_state(h, psi0)?;
    let n = h.dim();
    let entries: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let v = h.matrix[(i, j)];
            (v != C64::new(0.0, 0.0)).then_some((i, j, -I * v))
        })
        .collect();
    let rows = ode::integrate(
        |_, y, dy| {
            dy.fill(C64::new(0.0, 0.0));
            for &(i, j, v) in &entries {
                dy[i] += v * y[j];
            }
        },
        psi0.as_slice(),
        0.0,
        times,
        tol,
    )?;
    Ok(trajectory(h, times, rows.into_iter().map(CVector::from_vec)))
}

pub fn evolve(h: &OperatorMatrix, psi0: &CVector, times: &[f64], propagator: Propagator) -> Result<Trajectory> {
    match propagator {
        Propagator::Spectral => evolve_hermitian(h, psi0, times),
        Propagator::Adaptive(tol) => evolve_adaptive(h, psi0, times, tol),
    }
}

/// Unit vector on `state`.
pub fn basis_vector(basis: &StateSpace, state: &BasisState) -> Result<CVector> {
    let i = basis
        .index_of(state)
        .ok_or_else(|| Error::BasisMismatch(format!("{state} is not in the basis")))?;
    let mut v = CVector::zeros(basis.len());
    v[i] = C64::new(1.0, 0.0);
    Ok(v)
}

/// Two-level amplitudes `(c_10, c_01)` under `[[0, g], [g, Δ]] - iκ`, starting
/// in the first state.
pub fn analytic_two_level(g_eff: f64, delta_eff: f64, kappa: f64, t: f64) -> [C64; 2] {
    let gt = libm::sqrt(g_eff * g_eff + delta_eff * delta_eff / 4.0);
    let envelope = C64::new(-kappa * t, -delta_eff * t / 2.0).exp();
    let (s, c) = (libm::sin(gt * t), libm::cos(gt * t));
    let (ratio_d, ratio_g) = if gt > 0.0 {
        (delta_eff / (2.0 * gt) * s, g_eff / gt * s)
    } else {
        (0.0, g_eff * t)
    };
    [envelope * C64::new(c, ratio_d), envelope * C64::new(0.0, -ratio_g)]
}

/// Which damped three-level system: the photon numbers of the outer
/// (retained, atom in `a`) and middle states fix the decay prefactors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeLevelKind {
    /// `|a 1010>, |b 0010>, |a 0101>`.
    Iswap,
    /// `|a 10,01,10>, |d 00,10,10>, |a 10,10,01>`.
    Fredkin,
}

impl ThreeLevelKind {
    /// Photon numbers of the outer and middle states.
    pub fn photons(self) -> (u32, u32) {
        match self {
            ThreeLevelKind::Iswap => (2, 1),
            ThreeLevelKind::Fredkin => (3, 2),
        }
    }

    /// Amplitude decay rates `(k_outer, k_middle)`; the middle level decays
    /// spontaneously at `Γ`.
    pub fn decay_rates(self, kappa: f64, gamma: f64) -> (f64, f64) {
        let (po, pm) = self.photons();
        (kappa / 2.0 * f64::from(po), kappa / 2.0 * f64::from(pm) + gamma)
    }
}

/// Amplitudes `(c_1, c_Φ, c_2)` of the resonant three-level system
/// `[[0, g1, 0], [g1, 0, g2], [0, g2, 0]]` with no-jump damping, starting in
/// state 1. `c_2` carries the global phase `e^{iηt}`.
pub fn analytic_three_level(
    g1: f64,
    g2: f64,
    eta: f64,
    gamma: f64,
    kappa: f64,
    kind: ThreeLevelKind,
    t: f64,
) -> Result<[C64; 3]> {
    let gbar = libm::sqrt(g1 * g1 + g2 * g2);
    let (ko, km) = kind.decay_rates(kappa, gamma);
    let eps = (ko - km) / 2.0;
    if libm::fabs(eps) > gbar {
        return Err(Error::Overdamped {
            gbar,
            excess: libm::fabs(eps),
        });
    }
    if gbar == 0.0 {
        return Ok([
            C64::new(libm::exp(-ko * t), 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ]);
    }
    let lambda = libm::sqrt(gbar * gbar - eps * eps);
    // sin(λt)/λ with its λ → 0 limit.
    let sinc = if lambda * t.abs() > 1e-8 {
        libm::sin(lambda * t) / lambda
    } else {
        t
    };
    let grow = libm::exp(eps * t);
    let bright = grow * (libm::cos(lambda * t) - eps * sinc);
    let outer = libm::exp(-ko * t);
    let g2sum = gbar * gbar;
    let c1 = outer * (g2 * g2 + g1 * g1 * bright) / g2sum;
    let cm = C64::new(0.0, -g1 * outer * grow * sinc);
    let c2 = C64::new(0.0, eta * t).exp() * (g1 * g2 / g2sum * outer * (bright - 1.0));
    Ok([C64::new(c1, 0.0), cm, c2])
}

/// Spin-J coupling schedule `g0 √(n (N - n))`, `n = 1..N-1`.
pub fn spin_j_couplings(n_levels: usize, g0: f64) -> Result<Vec<f64>> {
    if n_levels < 2 {
        return Err(Error::InvalidInput(format!("spin-J chain needs N >= 2, got {n_levels}")));
    }
    Ok((1..n_levels)
        .map(|n| g0 * libm::sqrt((n * (n_levels - n)) as f64))
        .collect())
}

/// Tridiagonal chain Hamiltonian with zero diagonal and the given couplings,
/// over states labelled `|a n>`.
pub fn chain_matrix(couplings: &[f64]) -> OperatorMatrix {
    let n = couplings.len() + 1;
    let states = (0..n).map(|k| BasisState::new('a', &[k as u8])).collect();
    let basis = Arc::new(StateSpace::from_states(states).expect("distinct states"));
    let mut h = CMatrix::zeros(n, n);
    for (k, &g) in couplings.iter().enumerate() {
        h[(k, k + 1)] = C64::new(g, 0.0);
        h[(k + 1, k)] = C64::new(g, 0.0);
    }
    OperatorMatrix { basis, matrix: h }
}

/// Period-fraction time for complete transfer across a spin-J chain:
/// `π / (2 g0)` for any `N`.
pub fn spin_j_transfer_time(g0: f64) -> f64 {
    PI / (2.0 * g0)
}

/// Closed-form amplitudes of the two-mode Raman Hamiltonian for an initial
/// `(c_a |a> + c_b |b>) |n, m>`. Returns each nonzero component.
pub fn lambda_general_amplitudes(n: u8, m: u8, c_a: C64, c_b: C64, g: f64, t: f64) -> Vec<(BasisState, C64)> {
    let mut out = Vec::new();
    let ra = libm::sqrt(f64::from(n + 1) * f64::from(m));
    let rb = libm::sqrt(f64::from(m + 1) * f64::from(n));
    out.push((BasisState::new('a', &[n, m]), c_a * libm::cos(g * t * ra)));
    if m > 0 {
        out.push((BasisState::new('b', &[n + 1, m - 1]), c_a * C64::new(0.0, -libm::sin(g * t * ra))));
    }
    out.push((BasisState::new('b', &[n, m]), c_b * libm::cos(g * t * rb)));
    if n > 0 {
        out.push((BasisState::new('a', &[n - 1, m + 1]), c_b * C64::new(0.0, -libm::sin(g * t * rb))));
    }
    out
}

/// Oscillation frequency of `|n, m, atom>` under the Raman Hamiltonian.
pub fn lambda_frequency(n: u8, m: u8, atom: AtomLevel, g: f64) -> f64 {
    let (p, q) = if atom.is_ground() { (n + 1, m) } else { (m + 1, n) };
    g * libm::sqrt(f64::from(p) * f64::from(q))
}

/// Least-squares slope of the unwrapped phase of `amplitudes` against
/// `times`, skipping samples with negligible weight.
pub fn fit_phase_rate(times: &[f64], amplitudes: &[C64]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut last: Option<f64> = None;
    for (&t, &c) in times.iter().zip(amplitudes) {
        if c.norm() < 1e-6 {
            continue;
        }
        let mut phi = libm::atan2(c.im, c.re);
        if let Some(prev) = last {
            while phi - prev > PI {
                phi -= 2.0 * PI;
            }
            while phi - prev < -PI {
                phi += 2.0 * PI;
            }
        }
        last = Some(phi);
        pts.push((t, phi));
    }
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (st, sp) = pts.iter().fold((0.0, 0.0), |(a, b), (t, p)| (a + t, b + p));
    let (mt, mp) = (st / n, sp / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, p)| (a + (t - mt) * (p - mp), b + (t - mt) * (t - mt)));
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
