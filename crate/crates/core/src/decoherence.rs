//! Cavity loss and spontaneous emission: collapse operators, the no-jump
//! conditional Hamiltonian, Lindblad evolution and damped three-level
//! eigenvalues.
//!
//! Rates follow the no-jump Hamiltonian `H - i(κ/2) Σ n_j - i Γ Σ |e><e|`:
//! photon loss from mode `j` has Lindblad rate `κ_j` and spontaneous emission
//! from level `e` has Lindblad rate `2 Γ_e`.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::dynamics::ThreeLevelKind;
use crate::hamiltonian::OperatorMatrix;
use crate::linalg::{max_abs, max_hermitian_deviation, HermitianEigen};
use crate::model::{AtomLevel, LinkageModel};
use crate::ode::{self, Tolerances};
use crate::state_space::{BasisState, DecayChannel, StateSpace};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Validity condition of the conditional Hamiltonian.
pub const NO_JUMP_CONDITION: &str = "valid under the condition that no photon is detected";

/// Decay rates in units of `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSpec {
    /// Photon decay rate per mode.
    pub kappa: Vec<f64>,
    /// Spontaneous emission rate per decaying level.
    pub gamma: Vec<(AtomLevel, f64)>,
}

impl DecoherenceSpec {
    pub fn none(n_modes: usize) -> Self {
        Self {
            kappa: alloc::vec![0.0; n_modes],
            gamma: Vec::new(),
        }
    }

    /// Uniform `κ` on every mode and `Γ` on the model's decaying levels.
    pub fn uniform(model: &LinkageModel, kappa: f64, gamma: f64) -> Self {
        Self {
            kappa: alloc::vec![kappa; model.n_modes],
            gamma: model.decaying_levels.iter().map(|&l| (l, gamma)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = self
            .kappa
            .iter()
            .chain(self.gamma.iter().map(|(_, g)| g))
            .find(|r| !(r.is_finite() && **r >= 0.0));
        match bad {
            Some(r) => Err(Error::InvalidInput(format!("decay rate {r} must be finite and non-negative"))),
            None => Ok(()),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.kappa.iter().all(|&k| k == 0.0) && self.gamma.iter().all(|&(_, g)| g == 0.0)
    }

    fn gamma_of(&self, level: AtomLevel) -> f64 {
        self.gamma
            .iter()
            .filter(|(l, _)| *l == level && !level.is_ground())
            .map(|(_, g)| g)
            .sum()
    }

    /// Amplitude decay rate of `state` in the no-jump evolution.
    pub fn amplitude_decay(&self, state: &BasisState) -> f64 {
        let photons: f64 = state
            .occupations
            .iter()
            .zip(&self.kappa)
            .map(|(&n, k)| f64::from(n) * k / 2.0)
            .sum();
        photons + self.gamma_of(state.atom)
    }

    /// Channels with nonzero rate, paired with their Lindblad rates.
    pub fn channels(&self) -> Vec<(DecayChannel, f64)> {
        let modes = self
            .kappa
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0.0)
            .map(|(j, &k)| (DecayChannel::Mode(j), k));
        let levels = self
            .gamma
            .iter()
            .filter(|(l, g)| *g > 0.0 && !l.is_ground())
            .map(|&(l, g)| (DecayChannel::Lowering(l), 2.0 * g));
        modes.chain(levels).collect()
    }
}

/// A jump operator over a basis: `entries` holds `(to, from, value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseOperator {
    pub channel: DecayChannel,
    /// Lindblad rate.
    pub rate: f64,
    pub entries: Vec<(usize, usize, f64)>,
    dim: usize,
}

impl CollapseOperator {
    pub fn dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for &(to, from, v) in &self.entries {
            m[(to, from)] = C64::new(v, 0.0);
        }
        m
    }
}

/// One operator per channel of nonzero rate.
pub fn collapse_operators(spec: &DecoherenceSpec, basis: &StateSpace) -> Result<Vec<CollapseOperator>> {
    spec.validate()?;
    if !spec.kappa.is_empty() && spec.kappa.len() != basis.n_modes() {
        return Err(Error::LengthMismatch {
            expected: basis.n_modes(),
            found: spec.kappa.len(),
        });
    }
    spec.channels()
        .into_iter()
        .map(|(channel, rate)| {
            let mut entries = Vec::new();
            for (from, s) in basis.iter().enumerate() {
                if let Some((t, v)) = channel.apply(s) {
                    let to = basis
                        .index_of(&t)
                        .ok_or_else(|| Error::NotDecayClosed(format!("{s} decays to {t}, which is missing")))?;
                    entries.push((to, from, v));
                }
            }
            Ok(CollapseOperator {
                channel,
                rate,
                entries,
                dim: basis.len(),
            })
        })
        .collect()
}

/// `H - i(κ/2) Σ n_j - i Γ Σ |e><e|`.
pub fn conditional_hamiltonian(h: &OperatorMatrix, spec: &DecoherenceSpec) -> Result<OperatorMatrix> {
    spec.validate()?;
    let mut out = h.clone();
    for (i, s) in h.basis.iter().enumerate() {
        out.matrix[(i, i)] -= C64::new(0.0, spec.amplitude_decay(s));
    }
    Ok(out)
}

/// Density operator over a (decay-closed) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub basis: Arc<StateSpace>,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn pure(basis: Arc<StateSpace>, psi: &CVector) -> Result<Self> {
        if psi.len() != basis.len() {
            return Err(Error::LengthMismatch {
                expected: basis.len(),
                found: psi.len(),
            });
        }
        Ok(Self {
            basis,
            matrix: psi * psi.adjoint(),
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn population(&self, state: &BasisState) -> Option<f64> {
        let i = self.basis.index_of(state)?;
        Some(self.matrix[(i, i)].re)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        max_hermitian_deviation(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mut m = self.matrix.clone();
        crate::linalg::symmetrize(&mut m);
        HermitianEigen::new(&m).values.first().copied().unwrap_or(0.0)
    }
}

/// Density matrices sampled at `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrajectory {
    pub basis: Arc<StateSpace>,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl DensityTrajectory {
    pub fn traces(&self) -> Vec<f64> {
        self.states.iter().map(DensityMatrix::trace).collect()
    }

    /// Diagonal of `ρ`, one row per time.
    pub fn populations(&self) -> nalgebra::DMatrix<f64> {
        let n = self.basis.len();
        nalgebra::DMatrix::from_fn(self.states.len(), n, |k, i| self.states[k].matrix[(i, i)].re)
    }
}

/// Integrates `dρ/dt = -i[H, ρ] + Σ r (L ρ L† - {L†L, ρ}/2)` from `t = 0`.
pub fn evolve_master(
    h: &OperatorMatrix,
    rho0: &DensityMatrix,
    spec: &DecoherenceSpec,
    times: &[f64],
    tol: Tolerances,
) -> Result<DensityTrajectory> {
    let n = h.dim();
    if rho0.basis.len() != n || rho0.basis.states() != h.basis.states() {
        return Err(Error::BasisMismatch("density matrix and Hamiltonian bases differ".into()));
    }
    let tr = rho0.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("initial trace is {tr}, not 1")));
    }
    if rho0.hermitian_deviation() > 1e-12 * max_abs(&rho0.matrix).max(1.0) {
        return Err(Error::InvalidInput("initial density matrix is not Hermitian".into()));
    }
    let ops = collapse_operators(spec, &h.basis)?;

    // -i H_nh with H_nh = H - (i/2) Σ r L†L; L†L is diagonal for every channel.
    let mut hnh = h.matrix.clone();
    for op in &ops {
        for &(_, from, v) in &op.entries {
            hnh[(from, from)] -= C64::new(0.0, 0.5 * op.rate * v * v);
        }
    }
    let minus_i = C64::new(0.0, -1.0);
    let sparse: Vec<(usize, usize, C64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| hnh[(i, j)] != C64::new(0.0, 0.0))
        .map(|(i, j)| (i, j, minus_i * hnh[(i, j)]))
        .collect();
    // ρ H_nh† = (H_nh ρ)† for Hermitian ρ, but the integrator sees
    // non-Hermitian stage values, so both products are formed explicitly.
    let jumps: Vec<Vec<(usize, usize, f64)>> = ops
        .iter()
        .map(|op| op.entries.iter().map(|&(t, f, v)| (t, f, v * libm::sqrt(op.rate))).collect())
        .collect();

    let rows = ode::integrate(
        |_, y, dy| {
            dy.fill(C64::new(0.0, 0.0));
            // Column-major: ρ[a][b] = y[a + b n].
            for &(i, j, v) in &sparse {
                // (-i H_nh ρ)[i][b] += v ρ[j][b]
                for b in 0..n {
                    dy[i + b * n] += v * y[j + b * n];
                }
                // (ρ (-i H_nh)†)[a][j] += ρ[a][i] conj(v)
                let vc = v.conj();
                for a in 0..n {
                    dy[a + j * n] += y[a + i * n] * vc;
                }
            }
            for op in &jumps {
                for &(ta, fa, va) in op {
                    for &(tb, fb, vb) in op {
                        dy[ta + tb * n] += y[fa + fb * n] * (va * vb);
                    }
                }
            }
        },
        rho0.matrix.as_slice(),
        0.0,
        times,
        tol,
    )?;
    let states = rows
        .into_iter()
        .map(|v| DensityMatrix {
            basis: h.basis.clone(),
            matrix: CMatrix::from_vec(n, n, v),
        })
        .collect();
    Ok(DensityTrajectory {
        basis: h.basis.clone(),
        times: times.to_vec(),
        states,
    })
}

/// Exponents `λ` (amplitudes `∝ e^{λt}`) of the damped resonant three-level
/// system: `λ1 = -k_outer`, `λ2,3 = -(k_outer + k_middle)/2 ± iλ`.
pub fn damped_eigenvalues(kind: ThreeLevelKind, gbar: f64, kappa: f64, gamma: f64) -> Result<[C64; 3]> {
    let (ko, km) = kind.decay_rates(kappa, gamma);
    let eps = (ko - km) / 2.0;
    if libm::fabs(eps) > gbar {
        return Err(Error::Overdamped {
            gbar,
            excess: libm::fabs(eps),
        });
    }
    let lambda = libm::sqrt(gbar * gbar - eps * eps);
    let mean = -(ko + km) / 2.0;
    Ok([
        C64::new(-ko, 0.0),
        C64::new(mean, lambda),
        C64::new(mean, -lambda),
    ])
}

/// The damped three-level conditional Hamiltonian of `kind`.
pub fn damped_three_level_matrix(kind: ThreeLevelKind, g1: f64, g2: f64, kappa: f64, gamma: f64) -> CMatrix {
    let (ko, km) = kind.decay_rates(kappa, gamma);
    let z = C64::new(0.0, 0.0);
    CMatrix::from_row_slice(
        3,
        3,
        &[
            C64::new(0.0, -ko),
            C64::new(g1, 0.0),
            z,
            C64::new(g1, 0.0),
            C64::new(0.0, -km),
            C64::new(g2, 0.0),
            z,
            C64::new(g2, 0.0),
            C64::new(0.0, -ko),
        ],
    )
}
