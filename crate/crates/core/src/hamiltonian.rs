//! Interaction-picture Hamiltonians over explicit bases.

use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::max_hermitian_deviation;
use crate::model::{builtin, Field, LinkageModel};
use crate::state_space::{components, enumerate_reachable, BasisState, StateSpace};
use crate::{CMatrix, Error, Result, C64};

/// Dense complex matrix labelled by a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: Arc<StateSpace>,
    pub matrix: CMatrix,
}

impl OperatorMatrix {
    pub fn new(basis: Arc<StateSpace>, matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != basis.len() || matrix.ncols() != basis.len() {
            return Err(Error::BasisMismatch(format!(
                "{}x{} matrix over {} states",
                matrix.nrows(),
                matrix.ncols(),
                basis.len()
            )));
        }
        Ok(Self { basis, matrix })
    }

    pub fn zeros(basis: Arc<StateSpace>) -> Self {
        let n = basis.len();
        Self {
            basis,
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        max_hermitian_deviation(&self.matrix)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// Matrix element `<row|H|col>`.
    pub fn element(&self, row: &BasisState, col: &BasisState) -> Option<C64> {
        Some(self.matrix[(self.basis.index_of(row)?, self.basis.index_of(col)?)])
    }

    /// The same operator in a permuted basis.
    pub fn reordered(&self, order: &[BasisState]) -> Result<Self> {
        if order.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: order.len(),
            });
        }
        let idx = order
            .iter()
            .map(|s| {
                self.basis
                    .index_of(s)
                    .ok_or_else(|| Error::BasisMismatch(format!("{s} is not in the basis")))
            })
            .collect::<Result<Vec<_>>>()?;
        let basis = Arc::new(StateSpace::from_states(order.to_vec())?);
        let n = idx.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| self.matrix[(idx[i], idx[j])]);
        Ok(Self { basis, matrix })
    }

    /// Restriction to the listed basis indices, in the given order.
    pub fn restricted(&self, indices: &[usize]) -> Result<Self> {
        let states = indices.iter().map(|&i| self.basis[i].clone()).collect();
        let basis = Arc::new(StateSpace::from_states(states)?);
        let n = indices.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| self.matrix[(indices[i], indices[j])]);
        Ok(Self { basis, matrix })
    }

    /// Adds `c` to every diagonal entry.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..out.dim() {
            out.matrix[(i, i)] += C64::new(c, 0.0);
        }
        out
    }
}

/// Cumulative detunings of a chain whose steps alternate absorption and
/// emission: `Δ_k = Δ_{k-1} ± (ω_transition,k - ω_mode,k)`, starting with `+`.
pub fn detunings_from_frequencies(atomic_transitions: &[f64], mode_frequencies: &[f64]) -> Result<Vec<f64>> {
    if atomic_transitions.len() != mode_frequencies.len() {
        return Err(Error::LengthMismatch {
            expected: atomic_transitions.len(),
            found: mode_frequencies.len(),
        });
    }
    let mut acc = 0.0;
    Ok(atomic_transitions
        .iter()
        .zip(mode_frequencies)
        .enumerate()
        .map(|(k, (t, w))| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (t - w);
            acc
        })
        .collect())
}

/// Net drive quanta of each state relative to the first state of its
/// component: absorbing a drive quantum lowers the count by one.
fn drive_quanta(model: &LinkageModel, basis: &StateSpace) -> Vec<Vec<i64>> {
    let n_drives = model.n_drives();
    let mut q: Vec<Option<Vec<i64>>> = vec![None; basis.len()];
    for comp in components(model, basis) {
        let root = comp[0];
        q[root] = Some(vec![0; n_drives]);
        let mut queue = vec![root];
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            let qi = q[i].clone().expect("visited");
            for c in &model.couplings {
                for term in [c.clone(), c.reversed()] {
                    let Some((t, _)) = term.apply(&basis[i]) else { continue };
                    let Some(j) = basis.index_of(&t) else { continue };
                    if q[j].is_some() {
                        continue;
                    }
                    let mut qj = qi.clone();
                    if let Field::Drive(k) = term.field {
                        qj[k] -= term.direction.sign() as i64;
                    }
                    q[j] = Some(qj);
                    queue.push(j);
                }
            }
        }
    }
    q.into_iter().map(|v| v.unwrap_or_else(|| vec![0; n_drives])).collect()
}

/// Diagonal energies of `basis` in the model's rotating frame, with the first
/// basis state at zero.
pub fn frame_energies(model: &LinkageModel, basis: &StateSpace) -> Result<Vec<f64>> {
    let frame = model.frame()?;
    let quanta = drive_quanta(model, basis);
    let raw: Vec<f64> = basis
        .iter()
        .zip(&quanta)
        .map(|(s, q)| {
            let level = frame.levels.get(&s.atom).copied().unwrap_or(0.0);
            let photons: f64 = s.occupations.iter().zip(&frame.modes).map(|(&n, w)| f64::from(n) * w).sum();
            let drives: f64 = q.iter().zip(&frame.drives).map(|(&k, w)| k as f64 * w).sum();
            level + photons + drives
        })
        .collect();
    let zero = raw.first().copied().unwrap_or(0.0);
    Ok(raw.into_iter().map(|e| e - zero).collect())
}

/// Hermitian chain Hamiltonian over `basis`: frame energies on the diagonal
/// (first basis state at zero) and `g √n` couplings off the diagonal.
pub fn build_chain_hamiltonian(model: &LinkageModel, basis: &Arc<StateSpace>) -> Result<OperatorMatrix> {
    model.validate()?;
    if basis.n_modes() != model.n_modes && !basis.is_empty() {
        return Err(Error::BasisMismatch(format!(
            "basis has {} modes, model has {}",
            basis.n_modes(),
            model.n_modes
        )));
    }
    if let Some(s) = basis.iter().find(|s| !model.levels.contains(&s.atom)) {
        return Err(Error::BasisMismatch(format!("{s} uses a level the model lacks")));
    }
    let n = basis.len();
    let mut h = CMatrix::zeros(n, n);
    for (i, e) in frame_energies(model, basis)?.into_iter().enumerate() {
        h[(i, i)] = C64::new(e, 0.0);
    }
    for (i, s) in basis.iter().enumerate() {
        for c in &model.couplings {
            let Some((t, f)) = c.apply(s) else { continue };
            let j = basis
                .index_of(&t)
                .ok_or_else(|| Error::BasisMismatch(format!("basis is not closed: {s} couples to {t}")))?;
            let v = C64::new(c.strength * f, 0.0);
            h[(j, i)] += v;
            h[(i, j)] += v;
        }
    }
    OperatorMatrix::new(basis.clone(), h)
}

/// Enumerates the seed component of `model` and builds its Hamiltonian.
pub fn build_seed_hamiltonian(model: &LinkageModel, close_under_decay: bool) -> Result<OperatorMatrix> {
    let basis = Arc::new(enumerate_reachable(model, &model.seed, close_under_decay)?);
    build_chain_hamiltonian(model, &basis)
}

/// The NOT-gate Hamiltonian over `{|c 10>, |a 10>, |b 00>, |c 01>, |a 01>}`.
pub fn build_lambda_hamiltonian(
    g_ab: f64,
    g_bc: f64,
    omega: f64,
    delta1: f64,
    delta2: f64,
    delta3: f64,
) -> Result<OperatorMatrix> {
    for (name, v) in [("g_ab", g_ab), ("g_bc", g_bc), ("omega", omega)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::InvalidInput(format!("{name} = {v} must be finite and non-negative")));
        }
    }
    let model = builtin::not_gate(g_ab, g_bc, omega / 2.0, [delta1, delta2, delta3])?;
    let h = build_seed_hamiltonian(&model, false)?;
    let order = [
        BasisState::new('c', &[1, 0]),
        BasisState::new('a', &[1, 0]),
        BasisState::new('b', &[0, 0]),
        BasisState::new('c', &[0, 1]),
        BasisState::new('a', &[0, 1]),
    ];
    h.reordered(&order)
}

/// Effective Raman coupling `g = g_ac g_bc / Δ` of the two-mode Λ system.
pub fn build_two_mode_effective(g_ac: f64, g_bc: f64, delta: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ResonantDenominator("two-photon detuning is zero"));
    }
    Ok(g_ac * g_bc / delta)
}

/// The effective two-mode Raman Hamiltonian `g (a2† a1 σ⁻ + h.c.)`, coupling
/// `|n, m, a>` to `|n+1, m-1, b>` with strength `g √((n+1) m)`. The basis holds
/// every `|n, m, a|b>` with `n, m <= cutoff`.
pub fn build_raman_hamiltonian(g: f64, cutoff: u8) -> Result<OperatorMatrix> {
    let mut states = Vec::new();
    for atom in ['a', 'b'] {
        for n in 0..=cutoff {
            for m in 0..=cutoff {
                states.push(BasisState::new(atom, &[n, m]));
            }
        }
    }
    let basis = Arc::new(StateSpace::from_states(states)?);
    let mut h = CMatrix::zeros(basis.len(), basis.len());
    for (i, s) in basis.iter().enumerate() {
        let (n, m) = (s.occupations[0], s.occupations[1]);
        if s.atom.label() != 'a' || m == 0 || n == cutoff {
            continue;
        }
        let j = basis
            .index_of(&BasisState::new('b', &[n + 1, m - 1]))
            .expect("target within cutoff");
        let v = C64::new(g * libm::sqrt(f64::from(n + 1) * f64::from(m)), 0.0);
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    OperatorMatrix::new(basis, h)
}
