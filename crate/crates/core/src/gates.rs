//! Gate-level evaluation: logical encodings, truth tables, fidelities,
//! measurement conditioning and the single-qubit and phase-gate family.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::decoherence::{conditional_hamiltonian, evolve_master, DecoherenceSpec, DensityMatrix};
use crate::dynamics::{basis_vector, evolve, Propagator};
use crate::elimination::{effective_system, eliminate_at, Partition};
use crate::hamiltonian::{build_chain_hamiltonian, build_raman_hamiltonian, OperatorMatrix};
use crate::linalg::HermitianEigen;
use crate::model::{AtomLevel, LinkageModel};
use crate::ode::Tolerances;
use crate::state_space::{enumerate_reachable, BasisState, StateSpace};
use crate::{CMatrix, CVector, Error, Result, C64};

/// Modes carrying one dual-rail qubit: a photon in `one` is logical 1, a
/// photon in `zero` logical 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitModes {
    pub one: usize,
    pub zero: usize,
}

/// Map between logical bitstrings and physical basis states. Logical index
/// `i` reads qubit 1 as its most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalEncoding {
    pub n_modes: usize,
    pub qubits: Vec<QubitModes>,
    pub atom: AtomLevel,
}

impl LogicalEncoding {
    pub fn new(n_modes: usize, qubits: Vec<QubitModes>) -> Result<Self> {
        let mut used = alloc::vec![false; n_modes];
        for q in &qubits {
            for m in [q.one, q.zero] {
                if m >= n_modes || used[m] {
                    return Err(Error::InvalidInput(format!("mode {m} is out of range or shared between qubits")));
                }
                used[m] = true;
            }
        }
        if qubits.is_empty() {
            return Err(Error::InvalidInput("an encoding needs at least one qubit".into()));
        }
        Ok(Self {
            n_modes,
            qubits,
            atom: AtomLevel::GROUND,
        })
    }

    /// `10 ↦ |a 1010>`, `01 ↦ |a 0101>`, `00 ↦ |a 0110>`, `11 ↦ |a 1001>`.
    pub fn iswap() -> Self {
        Self::new(4, alloc::vec![QubitModes { one: 0, zero: 1 }, QubitModes { one: 3, zero: 2 }]).expect("valid")
    }

    /// Control on `(ω1, ω1')`, targets on `(ω2, ω3)` and `(ω5, ω6)`:
    /// `101 ↦ |a 10,01,10>`, `110 ↦ |a 10,10,01>`.
    pub fn fredkin() -> Self {
        Self::new(
            6,
            alloc::vec![
                QubitModes { one: 0, zero: 1 },
                QubitModes { one: 2, zero: 3 },
                QubitModes { one: 4, zero: 5 },
            ],
        )
        .expect("valid")
    }

    /// `1 ↦ |a 10>`, `0 ↦ |a 01>`.
    pub fn single() -> Self {
        Self::new(2, alloc::vec![QubitModes { one: 0, zero: 1 }]).expect("valid")
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    /// Number of logical basis states.
    pub fn len(&self) -> usize {
        1 << self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, index: usize) -> String {
        let n = self.n_qubits();
        (0..n).map(|q| if index >> (n - 1 - q) & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn physical(&self, index: usize) -> BasisState {
        let n = self.n_qubits();
        let mut occ = alloc::vec![0u8; self.n_modes];
        for (q, modes) in self.qubits.iter().enumerate() {
            let bit = index >> (n - 1 - q) & 1 == 1;
            occ[if bit { modes.one } else { modes.zero }] = 1;
        }
        BasisState {
            atom: self.atom,
            occupations: occ,
        }
    }

    /// Logical index of a physical state, if it is one.
    pub fn decode(&self, state: &BasisState) -> Option<usize> {
        (0..self.len()).find(|&i| self.physical(i) == *state)
    }

    pub fn validate_for(&self, model: &LinkageModel) -> Result<()> {
        if self.n_modes != model.n_modes {
            return Err(Error::InvalidInput(format!(
                "encoding uses {} modes, model {} has {}",
                self.n_modes, model.name, model.n_modes
            )));
        }
        Ok(())
    }
}

/// Ideal gate as a map from each logical input to one logical output with a
/// phase factor.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetGate {
    Identity,
    /// `00 → 00`, `01 → i 10`, `10 → i 01`, `11 → 11`.
    Iswap,
    /// Controlled swap of qubits 2 and 3 on qubit 1.
    Fredkin,
    /// `R_x(π) = -i σ_x`.
    Not,
    Permutation(Vec<(usize, C64)>),
}

impl TargetGate {
    /// Output index and phase for logical input `input` of an `n`-qubit gate.
    pub fn image(&self, input: usize, n_qubits: usize) -> Result<(usize, C64)> {
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        let need = |k: usize| {
            if n_qubits == k {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!("gate acts on {k} qubits, encoding has {n_qubits}")))
            }
        };
        match self {
            TargetGate::Identity => Ok((input, one)),
            TargetGate::Iswap => {
                need(2)?;
                Ok(match input {
                    1 => (2, i),
                    2 => (1, i),
                    x => (x, one),
                })
            }
            TargetGate::Fredkin => {
                need(3)?;
                Ok(match input {
                    0b101 => (0b110, one),
                    0b110 => (0b101, one),
                    x => (x, one),
                })
            }
            TargetGate::Not => {
                need(1)?;
                Ok((input ^ 1, -i))
            }
            TargetGate::Permutation(map) => map
                .get(input)
                .copied()
                .ok_or_else(|| Error::InvalidInput(format!("permutation has no image for input {input}"))),
        }
    }

    /// Dense unitary over the logical basis.
    pub fn unitary(&self, n_qubits: usize) -> Result<CMatrix> {
        let n = 1 << n_qubits;
        let mut u = CMatrix::zeros(n, n);
        for k in 0..n {
            let (out, phase) = self.image(k, n_qubits)?;
            u[(out, k)] = phase;
        }
        Ok(u)
    }
}

/// How each logical input is propagated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    /// Every state reachable from the input, no-jump dynamics.
    Full,
    /// The reachable component reduced to its logical (and pattern-retained)
    /// states, no-jump dynamics.
    Effective,
    /// Lindblad evolution over the decay-closed component.
    Master,
}

/// Per-input outcome at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct InputOutcome {
    /// Population of each logical output.
    pub probabilities: Vec<f64>,
    /// `<target|ψ>`; `None` for density-matrix engines.
    pub target_amplitude: Option<C64>,
    pub fidelity: f64,
    pub conditional_fidelity: f64,
    /// Weight left with the atom in its encoding level.
    pub success_probability: f64,
}

/// Truth table and fidelities of a gate run.
#[derive(Debug, Clone, PartialEq)]
pub struct GateResult {
    pub labels: Vec<String>,
    /// Rows are inputs, columns outputs.
    pub truth_table: DMatrix<f64>,
    pub fidelities: Vec<f64>,
    pub conditional_fidelities: Vec<f64>,
    pub success_probabilities: Vec<f64>,
    /// Phase of `<target|ψ>` relative to the ideal output phase.
    pub phases: Vec<Option<f64>>,
    pub t_int: f64,
    pub engine: Engine,
}

impl GateResult {
    pub fn from_outcomes(encoding: &LogicalEncoding, target: &TargetGate, t_int: f64, engine: Engine, rows: Vec<InputOutcome>) -> Result<Self> {
        let n = encoding.len();
        if rows.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        let truth_table = DMatrix::from_fn(n, n, |i, j| rows[i].probabilities[j]);
        let mut phases = Vec::with_capacity(n);
        for (k, r) in rows.iter().enumerate() {
            let (_, ideal) = target.image(k, encoding.n_qubits())?;
            phases.push(r.target_amplitude.filter(|a| a.norm() > 0.0).map(|a| (a * ideal.conj()).arg()));
        }
        Ok(Self {
            labels: (0..n).map(|k| encoding.label(k)).collect(),
            truth_table,
            fidelities: rows.iter().map(|r| r.fidelity).collect(),
            conditional_fidelities: rows.iter().map(|r| r.conditional_fidelity).collect(),
            success_probabilities: rows.iter().map(|r| r.success_probability).collect(),
            phases,
            t_int,
            engine,
        })
    }

    /// Mean fidelity over inputs.
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelities.iter().sum::<f64>() / self.fidelities.len().max(1) as f64
    }

    /// Output with the largest probability for each input.
    pub fn dominant(&self) -> Vec<(usize, f64)> {
        (0..self.truth_table.nrows())
            .map(|i| {
                self.truth_table
                    .row(i)
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
            })
            .collect()
    }
}

/// Zeroes every amplitude with the atom outside `level` and renormalises.
/// Returns the projected state and its weight before renormalisation.
pub fn condition_on_atom(psi: &CVector, basis: &StateSpace, level: AtomLevel) -> Result<(CVector, f64)> {
    if psi.len() != basis.len() {
        return Err(Error::LengthMismatch {
            expected: basis.len(),
            found: psi.len(),
        });
    }
    let mut out = psi.clone();
    for (i, s) in basis.iter().enumerate() {
        if s.atom != level {
            out[i] = C64::new(0.0, 0.0);
        }
    }
    let w = out.norm_squared();
    if !(w > 0.0) {
        return Err(Error::ZeroProjection(level.label()));
    }
    out /= C64::new(libm::sqrt(w), 0.0);
    Ok((out, w))
}

/// Propagation problem for one logical input.
#[derive(Debug, Clone)]
pub struct InputSystem {
    pub input: usize,
    h: OperatorMatrix,
    psi0: CVector,
    /// Basis position of each logical output present in the basis.
    outputs: Vec<Option<usize>>,
    target: (usize, C64),
    atom: AtomLevel,
    spec: DecoherenceSpec,
    engine: Engine,
    tol: Tolerances,
}

impl InputSystem {
    pub fn new(
        model: &LinkageModel,
        encoding: &LogicalEncoding,
        target: &TargetGate,
        spec: &DecoherenceSpec,
        engine: Engine,
        input: usize,
    ) -> Result<Self> {
        encoding.validate_for(model)?;
        spec.validate()?;
        let start = encoding.physical(input);
        let basis = Arc::new(enumerate_reachable(model, &start, engine == Engine::Master)?);
        let mut h = build_chain_hamiltonian(model, &basis)?;
        if engine == Engine::Effective {
            let mut keep: Vec<BasisState> = basis
                .iter()
                .filter(|s| encoding.decode(s).is_some())
                .cloned()
                .collect();
            if basis.contains(&model.seed) {
                for s in model.retained_states()? {
                    if basis.contains(&s) && !keep.contains(&s) {
                        keep.push(s);
                    }
                }
            }
            let part = Partition::retaining(&basis, &keep)?;
            let reference = basis.index_of(&model.seed).unwrap_or(part.p[0]);
            let e_ref = h.matrix[(reference, reference)].re;
            h = eliminate_at(&h, &part, e_ref)?.h_eff;
        }
        if engine != Engine::Master {
            h = conditional_hamiltonian(&h, spec)?;
        }
        let psi0 = basis_vector(&h.basis, &start)?;
        let outputs = (0..encoding.len())
            .map(|k| h.basis.index_of(&encoding.physical(k)))
            .collect();
        Ok(Self {
            input,
            psi0,
            outputs,
            target: target.image(input, encoding.n_qubits())?,
            atom: encoding.atom,
            spec: spec.clone(),
            engine,
            tol: Tolerances::with_rtol(1e-10),
            h,
        })
    }

    pub fn hamiltonian(&self) -> &OperatorMatrix {
        &self.h
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    /// Outcomes at each of `times`.
    pub fn outcomes(&self, times: &[f64]) -> Result<Vec<InputOutcome>> {
        match self.engine {
            Engine::Master => {
                let rho0 = DensityMatrix::pure(self.h.basis.clone(), &self.psi0)?;
                let traj = evolve_master(&self.h, &rho0, &self.spec, times, self.tol)?;
                Ok(traj.states.iter().map(|rho| self.outcome_of_density(rho)).collect())
            }
            _ => {
                let traj = evolve(&self.h, &self.psi0, times, Propagator::Spectral)?;
                Ok((0..traj.len()).map(|k| self.outcome_of_state(&traj.state(k))).collect())
            }
        }
    }

    pub fn outcome(&self, t: f64) -> Result<InputOutcome> {
        Ok(self.outcomes(&[t])?.remove(0))
    }

    fn outcome_of_state(&self, psi: &CVector) -> InputOutcome {
        let probabilities: Vec<f64> = self
            .outputs
            .iter()
            .map(|o| o.map_or(0.0, |i| psi[i].norm_sqr()))
            .collect();
        let amp = self.outputs[self.target.0].map_or(C64::new(0.0, 0.0), |i| psi[i]);
        let weight: f64 = self
            .h
            .basis
            .iter()
            .zip(psi.iter())
            .filter(|(s, _)| s.atom == self.atom)
            .map(|(_, c)| c.norm_sqr())
            .sum();
        let fidelity = amp.norm_sqr();
        InputOutcome {
            probabilities,
            target_amplitude: Some(amp),
            fidelity,
            conditional_fidelity: if weight > 0.0 { fidelity / weight } else { 0.0 },
            success_probability: weight,
        }
    }

    fn outcome_of_density(&self, rho: &DensityMatrix) -> InputOutcome {
        let m = &rho.matrix;
        let probabilities: Vec<f64> = self.outputs.iter().map(|o| o.map_or(0.0, |i| m[(i, i)].re)).collect();
        let weight: f64 = self
            .h
            .basis
            .iter()
            .enumerate()
            .filter(|(_, s)| s.atom == self.atom)
            .map(|(i, _)| m[(i, i)].re)
            .sum();
        let fidelity = probabilities[self.target.0];
        InputOutcome {
            probabilities,
            target_amplitude: None,
            fidelity,
            conditional_fidelity: if weight > 0.0 { fidelity / weight } else { 0.0 },
            success_probability: weight,
        }
    }
}

/// Closed-form interaction time of the seed component: `π / (2|g_eff|)` for a
/// two-level reduction and `π / ḡ` for a three-level one.
pub fn closed_form_time(model: &LinkageModel) -> Result<f64> {
    let eff = effective_system(model)?;
    match eff.basis.len() {
        2 => Ok(PI / (2.0 * libm::fabs(eff.g(1)))),
        3 => Ok(PI / libm::sqrt(eff.g(1) * eff.g(1) + eff.g(2) * eff.g(2))),
        n => Err(Error::InvalidModel(format!(
            "no closed-form interaction time for a {n}-state reduction"
        ))),
    }
}

const REFINE_WINDOW: f64 = 0.05;

/// Interaction time for `engine`. Effective engines use the closed form; the
/// others maximise the seed's coherent transfer within ±5 % of it.
pub fn interaction_time(model: &LinkageModel, engine: Engine) -> Result<f64> {
    let t0 = closed_form_time(model)?;
    if engine == Engine::Effective {
        return Ok(t0);
    }
    let target = model.retained_states()?.pop().ok_or_else(|| Error::InvalidModel("empty pattern".into()))?;
    let h = crate::hamiltonian::build_seed_hamiltonian(model, false)?;
    let eig = HermitianEigen::new(&h.matrix);
    let i0 = h.basis.index_of(&model.seed).expect("seed in its component");
    let it = h.basis.index_of(&target).expect("retained state in seed component");
    // <target| e^{-iHt} |seed> = Σ_k V[t,k] conj(V[s,k]) e^{-iλ_k t}
    let weights: Vec<(f64, C64)> = eig
        .values
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, eig.vectors[(it, k)] * eig.vectors[(i0, k)].conj()))
        .collect();
    let transfer = |t: f64| {
        weights
            .iter()
            .map(|&(l, w)| w * C64::new(0.0, -l * t).exp())
            .sum::<C64>()
            .norm_sqr()
    };
    let (lo, hi) = (t0 * (1.0 - REFINE_WINDOW), t0 * (1.0 + REFINE_WINDOW));
    let n = 400;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|k| lo + k as f64 * step)
        .map(|t| (t, transfer(t)))
        .fold((t0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(golden_max(&transfer, (best.0 - step).max(lo), (best.0 + step).min(hi)))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (libm::sqrt(5.0) - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= 1e-12 * b.abs().max(1.0) {
            break;
        }
        if fc > fd {
            (b, d, fd) = (d, c, fc);
            c = b - r * (b - a);
            fc = f(c);
        } else {
            (a, c, fc) = (c, d, fd);
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Rejects no-jump engines when decay events must be counted.
pub fn check_engine(engine: Engine, spec: &DecoherenceSpec, count_jumps: bool) -> Result<()> {
    if count_jumps && !spec.is_zero() && engine != Engine::Master {
        return Err(Error::EngineMismatch("counting decay events needs the master engine"));
    }
    Ok(())
}

/// Propagates every logical input to `t_int` and assembles the gate table.
pub fn run_gate(
    model: &LinkageModel,
    encoding: &LogicalEncoding,
    target: &TargetGate,
    spec: &DecoherenceSpec,
    t_int: f64,
    engine: Engine,
) -> Result<GateResult> {
    if !(t_int >= 0.0 && t_int.is_finite()) {
        return Err(Error::InvalidInput(format!("interaction time {t_int} must be finite and non-negative")));
    }
    let rows = (0..encoding.len())
        .map(|k| InputSystem::new(model, encoding, target, spec, engine, k)?.outcome(t_int))
        .collect::<Result<Vec<_>>>()?;
    GateResult::from_outcomes(encoding, target, t_int, engine, rows)
}

/// Largest fidelity of `input` over `samples` evenly spaced times in
/// `(0, t_max]`, refined by golden section. Returns `(t, outcome)`.
pub fn peak_fidelity(system: &InputSystem, t_max: f64, samples: usize) -> Result<(f64, InputOutcome)> {
    if !(t_max > 0.0) || samples < 2 {
        return Err(Error::InvalidInput("peak search needs t_max > 0 and at least two samples".into()));
    }
    let times: Vec<f64> = (1..=samples).map(|k| t_max * k as f64 / samples as f64).collect();
    let outs = system.outcomes(&times)?;
    let (kbest, _) = outs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (k, o)| if o.fidelity > a.1 { (k, o.fidelity) } else { a });
    let step = t_max / samples as f64;
    let (a, b) = ((times[kbest] - step).max(0.0), (times[kbest] + step).min(t_max));
    let f = |t: f64| system.outcome(t).map_or(f64::NEG_INFINITY, |o| o.fidelity);
    let t = golden_max(&f, a, b);
    let o = system.outcome(t)?;
    if o.fidelity >= outs[kbest].fidelity {
        Ok((t, o))
    } else {
        Ok((times[kbest], outs[kbest].clone()))
    }
}

/// `R_x = cos(g t / 2) I - i sin(g t / 2) σ_x`.
pub fn rx_rotation(g_eff: f64, t: f64) -> CMatrix {
    let (s, c) = (libm::sin(g_eff * t / 2.0), libm::cos(g_eff * t / 2.0));
    CMatrix::from_row_slice(2, 2, &[C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0)])
}

/// One row of the three-photon CZ table.
#[derive(Debug, Clone, PartialEq)]
pub struct CzRow {
    pub input: BasisState,
    /// `<input| U |input>`.
    pub amplitude: C64,
    /// Phase relative to `|0,0,a>`.
    pub phase: f64,
    pub expected_sign: f64,
}

impl CzRow {
    /// Distance of the phase from the expected sign, in radians.
    pub fn phase_error(&self) -> f64 {
        let want = if self.expected_sign < 0.0 { PI } else { 0.0 };
        let mut d = (self.phase - want) % (2.0 * PI);
        if d > PI {
            d -= 2.0 * PI;
        } else if d < -PI {
            d += 2.0 * PI;
        }
        libm::fabs(d)
    }
}

/// Inputs of the three-photon phase gate and their ideal signs.
pub fn cz_inputs() -> [(BasisState, f64); 8] {
    let s = |a: char, n: u8, m: u8| BasisState::new(a, &[n, m]);
    [
        (s('a', 0, 0), 1.0),
        (s('a', 0, 3), -1.0),
        (s('a', 3, 0), 1.0),
        (s('a', 3, 3), 1.0),
        (s('b', 0, 0), 1.0),
        (s('b', 0, 3), 1.0),
        (s('b', 3, 0), -1.0),
        (s('b', 3, 3), 1.0),
    ]
}

/// Propagates the eight phase-gate inputs under the Raman Hamiltonian
/// (Fock cutoff 4) for time `t`; the gate closes at `g t √3 = π`.
pub fn cz_three_photon(g_eff: f64, t: f64) -> Result<Vec<CzRow>> {
    let h = build_raman_hamiltonian(g_eff, 4)?;
    let eig = HermitianEigen::new(&h.matrix);
    let u = eig.propagator(t);
    let mut rows: Vec<CzRow> = cz_inputs()
        .into_iter()
        .map(|(s, sign)| {
            let i = h.basis.index_of(&s).expect("within cutoff");
            CzRow {
                input: s,
                amplitude: u[(i, i)],
                phase: 0.0,
                expected_sign: sign,
            }
        })
        .collect();
    let reference = rows[0].amplitude;
    for r in &mut rows {
        r.phase = (r.amplitude * reference.conj()).arg();
    }
    Ok(rows)
}

/// Time closing the phase gate: `π / (g √3)`.
pub fn cz_time(g_eff: f64) -> f64 {
    PI / (g_eff * libm::sqrt(3.0))
}

/// Phase `Φ(n) = (Δ L / 2v)(√(1 + 4 n g² / Δ²) - 1)` picked up by `n` photons
/// crossing a dispersively coupled atom with transit time `L / v`.
pub fn dispersive_phase(n: u32, g: f64, delta: f64, transit_time: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ResonantDenominator("dispersive phase needs Δ ≠ 0"));
    }
    let x = 4.0 * f64::from(n) * g * g / (delta * delta);
    // √(1+x) - 1 without cancellation.
    Ok(delta * transit_time / 2.0 * x / (libm::sqrt(1.0 + x) + 1.0))
}

/// Leading-order dispersive shift `g² t / Δ`.
pub fn dispersive_shift(g: f64, delta: f64, t: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ResonantDenominator("dispersive shift needs Δ ≠ 0"));
    }
    Ok(g * g * t / delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_hermitian, fit_phase_rate, linspace};
    use crate::elimination::{spin_j_match, tune_resonances};
    use crate::model::builtin;

    fn iswap10001(d: f64) -> LinkageModel {
        tune_resonances(&builtin::iswap("10001", [1.0; 4], [d, d, d, 0.0]).unwrap()).unwrap()
    }

    #[test]
    fn encodings_match_tables() {
        let e = LogicalEncoding::iswap();
        let want = ["a 0110", "a 0101", "a 1010", "a 1001"];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(e.physical(k), w.parse().unwrap());
            assert_eq!(e.decode(&w.parse().unwrap()), Some(k));
        }
        assert_eq!(e.label(1), "01");
        let f = LogicalEncoding::fredkin();
        assert_eq!(f.physical(0b101), "a 10,01,10".parse().unwrap());
        assert_eq!(f.physical(0b110), "a 10,10,01".parse().unwrap());
        assert!(LogicalEncoding::new(2, alloc::vec![QubitModes { one: 0, zero: 0 }]).is_err());
    }

    #[test]
    fn target_unitaries_are_unitary() {
        for (g, n) in [(TargetGate::Iswap, 2), (TargetGate::Fredkin, 3), (TargetGate::Not, 1)] {
            let u = g.unitary(n).unwrap();
            let d = &u.adjoint() * &u - CMatrix::identity(1 << n, 1 << n);
            assert!(crate::linalg::max_abs(&d) < 1e-15);
        }
        assert!(TargetGate::Iswap.unitary(3).is_err());
    }

    #[test]
    fn conditioning_renormalises_the_ground_sector() {
        let basis = StateSpace::from_states(alloc::vec![
            "a 10".parse().unwrap(),
            "b 00".parse().unwrap(),
            "a 01".parse().unwrap(),
        ])
        .unwrap();
        let psi = CVector::from_vec(alloc::vec![C64::new(0.6, 0.0), C64::new(0.0, 0.6), C64::new(0.0, 0.52915)]);
        let (p, w) = condition_on_atom(&psi, &basis, AtomLevel('a')).unwrap();
        let norm = libm::sqrt(0.36 + 0.52915 * 0.52915);
        assert!((w - norm * norm).abs() < 1e-12);
        assert!((p[0] - C64::new(0.6 / norm, 0.0)).norm() < 1e-12);
        assert_eq!(p[1], C64::new(0.0, 0.0));
        let all_a = CVector::from_vec(alloc::vec![C64::new(0.8, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        let (q, w) = condition_on_atom(&all_a, &basis, AtomLevel('a')).unwrap();
        assert!((w - 0.64).abs() < 1e-15 && (q[0].re - 1.0).abs() < 1e-15);
        assert!(matches!(
            condition_on_atom(&psi, &basis, AtomLevel('c')),
            Err(Error::ZeroProjection('c'))
        ));
    }

    #[test]
    fn iswap_truth_table() {
        let m = iswap10001(10.0);
        let t = interaction_time(&m, Engine::Full).unwrap();
        let r = run_gate(&m, &LogicalEncoding::iswap(), &TargetGate::Iswap, &DecoherenceSpec::none(4), t, Engine::Full).unwrap();
        // |a 1001> leaks into two detuned neighbours, by up to ~4 (2g/Δ)².
        let floor = [0.99, 0.99, 0.99, 0.92];
        for k in 0..4 {
            assert!(r.fidelities[k] >= floor[k], "input {k}: {}", r.fidelities[k]);
            assert!(r.conditional_fidelities[k] >= r.fidelities[k]);
            assert!(r.truth_table.row(k).sum() <= 1.0 + 1e-12);
        }
        let e = run_gate(&m, &LogicalEncoding::iswap(), &TargetGate::Iswap, &DecoherenceSpec::none(4), t, Engine::Effective).unwrap();
        for k in 0..4 {
            assert!((e.truth_table.row(k).sum() - 1.0).abs() < 1e-6);
        }
        assert_eq!(r.fidelities[0], 1.0);
        assert!(r.phases.iter().all(Option::is_some));
    }

    #[test]
    fn zero_time_is_identity() {
        let m = iswap10001(10.0);
        for engine in [Engine::Full, Engine::Effective, Engine::Master] {
            let r = run_gate(&m, &LogicalEncoding::iswap(), &TargetGate::Identity, &DecoherenceSpec::none(4), 0.0, engine).unwrap();
            assert!((r.truth_table.clone() - DMatrix::identity(4, 4)).abs().max() < 1e-12, "{engine:?}");
        }
    }

    #[test]
    fn double_iswap_flips_sign_in_effective_model() {
        let m = iswap10001(10.0);
        let t = interaction_time(&m, Engine::Effective).unwrap();
        for k in [1, 2] {
            let sys = InputSystem::new(&m, &LogicalEncoding::iswap(), &TargetGate::Identity, &DecoherenceSpec::none(4), Engine::Effective, k)
                .unwrap();
            let o = sys.outcome(2.0 * t).unwrap();
            let a = o.target_amplitude.unwrap();
            // Up to the blocked-frame phase, the amplitude is -1.
            assert!((a.norm() - 1.0).abs() < 1e-6, "{a}");
        }
    }

    #[test]
    fn refined_time_stays_in_window() {
        let m = iswap10001(10.0);
        let t0 = closed_form_time(&m).unwrap();
        let t = interaction_time(&m, Engine::Full).unwrap();
        assert!((t / t0 - 1.0).abs() <= REFINE_WINDOW);
        assert!((t0 - 490.0 * PI).abs() < 1.0);
    }

    #[test]
    fn spin_j_matched_three_level_swap() {
        let m = builtin::iswap("11001", [1.0; 4], [0.0, 10.0, 10.0, 0.0]).unwrap();
        let m = spin_j_match(&m).unwrap();
        let t = interaction_time(&m, Engine::Effective).unwrap();
        let sys = InputSystem::new(&m, &LogicalEncoding::iswap(), &TargetGate::Iswap, &DecoherenceSpec::none(4), Engine::Effective, 2).unwrap();
        assert!(sys.outcome(t).unwrap().fidelity > 1.0 - 1e-9);
    }

    #[test]
    fn master_agrees_with_conditional_on_success_branch() {
        let m = iswap10001(10.0);
        let spec = DecoherenceSpec::uniform(&m, 0.001, 0.0);
        let t = 400.0;
        let full = InputSystem::new(&m, &LogicalEncoding::iswap(), &TargetGate::Iswap, &spec, Engine::Full, 2).unwrap();
        let master = InputSystem::new(&m, &LogicalEncoding::iswap(), &TargetGate::Iswap, &spec, Engine::Master, 2).unwrap();
        let (a, b) = (full.outcome(t).unwrap(), master.outcome(t).unwrap());
        // A photon loss leaves the chain, so logical populations coincide.
        for k in 0..4 {
            assert!((a.probabilities[k] - b.probabilities[k]).abs() < 1e-7, "{k}");
        }
    }

    #[test]
    fn jump_counting_needs_master() {
        let spec = DecoherenceSpec::none(4);
        assert!(check_engine(Engine::Full, &spec, true).is_ok());
        let lossy = DecoherenceSpec { kappa: alloc::vec![0.1; 4], gamma: Vec::new() };
        assert!(matches!(check_engine(Engine::Effective, &lossy, true), Err(Error::EngineMismatch(_))));
        assert!(check_engine(Engine::Master, &lossy, true).is_ok());
        assert!(check_engine(Engine::Full, &lossy, false).is_ok());
    }

    #[test]
    fn rotation_limits() {
        assert_eq!(rx_rotation(0.3, 0.0), CMatrix::identity(2, 2));
        let u = rx_rotation(1.0, PI);
        let want = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, -1.0), C64::new(0.0, 0.0)]);
        assert!(crate::linalg::max_abs(&(u - want)) < 1e-15);
    }

    #[test]
    fn not_gate_full_model() {
        let m = builtin::not_gate(1.0, 1.0, 1.0, [20.0, 20.0, 0.0]).unwrap();
        let m = tune_resonances(&m).unwrap();
        let t = interaction_time(&m, Engine::Full).unwrap();
        let sys = InputSystem::new(&m, &LogicalEncoding::single(), &TargetGate::Not, &DecoherenceSpec::none(2), Engine::Full, 1).unwrap();
        let (_, o) = peak_fidelity(&sys, 1.1 * t, 200).unwrap();
        assert!(o.fidelity >= 0.99, "{}", o.fidelity);
        assert!(sys.outcome(t).unwrap().fidelity >= 0.99);
    }

    #[test]
    fn cz_sign_pattern() {
        let g = 0.7;
        let rows = cz_three_photon(g, cz_time(g)).unwrap();
        for r in &rows {
            assert!(r.phase_error() < 1e-9, "{}: {}", r.input, r.phase);
            assert!((r.amplitude.norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dispersive_phase_limits() {
        assert_eq!(dispersive_phase(0, 1.0, 10.0, 5.0).unwrap(), 0.0);
        let (g, d, t) = (0.01, 10.0, 100.0);
        let exact = dispersive_phase(1, g, d, t).unwrap();
        assert!((exact - dispersive_shift(g, d, t).unwrap()).abs() < 1e-9);
        assert!(dispersive_phase(1, g, 0.0, t).is_err());
    }

    #[test]
    fn dispersive_phase_matches_dressed_propagation() {
        let (g, d, t) = (1.0, 10.0, 50.0);
        let h = CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(g, 0.0), C64::new(g, 0.0), C64::new(d, 0.0)]);
        let basis = Arc::new(StateSpace::from_states(alloc::vec!["a 1".parse().unwrap(), "b 0".parse().unwrap()]).unwrap());
        let op = OperatorMatrix::new(basis, h.clone()).unwrap();
        let eig = HermitianEigen::new(&h);
        let dressed: CVector = eig.vectors.column(0).into_owned();
        let times = linspace(t, 201);
        let tr = evolve_hermitian(&op, &dressed, &times).unwrap();
        let amps: Vec<C64> = (0..tr.len()).map(|k| dressed.dotc(&tr.state(k))).collect();
        let phi = fit_phase_rate(&times, &amps) * t;
        assert!((phi - dispersive_phase(1, g, d, t).unwrap()).abs() < 1e-3);
    }
}
