//! Adiabatic elimination `H_eff = W0 - B A^-1 B^dag`, closed-form effective
//! parameters of the named models, and resonance tuning.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::hamiltonian::{build_seed_hamiltonian, OperatorMatrix};
use crate::linalg::{eigenvalue_magnitude_range, max_abs, max_hermitian_deviation, symmetrize};
use crate::model::LinkageModel;
use crate::state_space::{BasisState, StateSpace};
use crate::{CMatrix, Error, Result, C64};

/// Retained (`p`) and eliminated (`q`) basis indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

impl Partition {
    pub fn new(p: Vec<usize>, q: Vec<usize>, dim: usize) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidInput("retained set is empty".into()));
        }
        let mut seen = alloc::vec![false; dim];
        for &i in p.iter().chain(&q) {
            if i >= dim {
                return Err(Error::InvalidInput(format!("index {i} out of range for {dim} states")));
            }
            if core::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidInput(format!("index {i} appears twice")));
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidInput(format!("index {i} is in neither P nor Q")));
        }
        Ok(Self { p, q })
    }

    /// `P` = `retained` in the given order, `Q` = everything else in basis
    /// order.
    pub fn retaining(basis: &StateSpace, retained: &[BasisState]) -> Result<Self> {
        let p = retained
            .iter()
            .map(|s| {
                basis
                    .index_of(s)
                    .ok_or_else(|| Error::BasisMismatch(format!("retained state {s} is not in the basis")))
            })
            .collect::<Result<Vec<_>>>()?;
        let q = (0..basis.len()).filter(|i| !p.contains(i)).collect();
        Self::new(p, q, basis.len())
    }

    /// `P` = the chain states marked `1` in the model's resonance pattern.
    pub fn from_pattern(model: &LinkageModel, basis: &StateSpace) -> Result<Self> {
        Self::retaining(basis, &model.retained_states()?)
    }
}

/// Reduced Hamiltonian over the retained states.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSystem {
    pub basis: Vec<BasisState>,
    pub h_eff: OperatorMatrix,
    /// `("g_eff^(k)", h_eff[k-1][k])` for consecutive retained states.
    pub g_eff: Vec<(String, f64)>,
    /// `("Delta_eff^(k)", h_eff[k][k] - h_eff[0][0])`.
    pub delta_eff: Vec<(String, f64)>,
    /// Global phase rate; zero unless fitted.
    pub eta: f64,
    /// `min |eig A| / max |eig W0|`; the elimination is trustworthy when large.
    pub validity_ratio: f64,
    /// `max |H_eff - H_eff^dag|` before symmetrisation.
    pub asymmetry: f64,
}

impl EffectiveSystem {
    /// Effective coupling between retained states `k-1` and `k` (1-based).
    pub fn g(&self, k: usize) -> f64 {
        self.g_eff[k - 1].1
    }

    /// Effective detuning of retained state `k` (1-based) from state 0.
    pub fn delta(&self, k: usize) -> f64 {
        self.delta_eff[k - 1].1
    }
}

const VALIDITY_FACTOR: f64 = 5.0;

/// Eliminates the `Q` block of `h`, measuring its energies from the first
/// retained state.
pub fn eliminate(h: &OperatorMatrix, partition: &Partition) -> Result<EffectiveSystem> {
    let e_ref = partition.p.first().map_or(0.0, |&i| h.matrix[(i, i)].re);
    eliminate_at(h, partition, e_ref)
}

/// `H_eff = W0 - B (A - E)^-1 B^†` at reference energy `E`.
pub fn eliminate_at(h: &OperatorMatrix, partition: &Partition, e_ref: f64) -> Result<EffectiveSystem> {
    Partition::new(partition.p.clone(), partition.q.clone(), h.dim())?;
    let m = &h.matrix;
    let (np, nq) = (partition.p.len(), partition.q.len());
    let w0 = CMatrix::from_fn(np, np, |i, j| m[(partition.p[i], partition.p[j])]);
    let b = CMatrix::from_fn(np, nq, |i, j| m[(partition.p[i], partition.q[j])]);
    let bt = CMatrix::from_fn(nq, np, |i, j| m[(partition.q[i], partition.p[j])]);
    let a = CMatrix::from_fn(nq, nq, |i, j| {
        let v = m[(partition.q[i], partition.q[j])];
        if i == j {
            v - e_ref
        } else {
            v
        }
    });
    let hermitian = max_hermitian_deviation(m) <= 1e-12 * max_abs(m).max(1.0);

    let mut heff = if nq == 0 {
        w0.clone()
    } else {
        let x = solve_block(&a, &bt).map_err(|null| Error::SingularBlock {
            state: h.basis[partition.q[null]].to_string(),
        })?;
        &w0 - &b * x
    };
    let asymmetry = if hermitian { max_hermitian_deviation(&heff) } else { 0.0 };
    if hermitian {
        symmetrize(&mut heff);
    }

    let (a_lo, _) = eigenvalue_magnitude_range(&a)?;
    let shifted_w0 = &w0 - CMatrix::identity(np, np) * C64::new(e_ref, 0.0);
    let (_, w_hi) = eigenvalue_magnitude_range(&shifted_w0)?;
    let validity_ratio = if w_hi > 0.0 { a_lo / w_hi } else { f64::INFINITY };
    if nq > 0 && validity_ratio < VALIDITY_FACTOR {
        log::warn!(
            "adiabatic elimination may be inaccurate: min |eig A| = {a_lo:.4e} < {VALIDITY_FACTOR} x max |eig W0| = {w_hi:.4e}"
        );
    }

    let basis: Vec<BasisState> = partition.p.iter().map(|&i| h.basis[i].clone()).collect();
    let space = Arc::new(StateSpace::from_states(basis.clone())?);
    let h_eff = OperatorMatrix::new(space, heff)?;
    let (g_eff, delta_eff) = named_parameters(&h_eff.matrix);
    Ok(EffectiveSystem {
        basis,
        h_eff,
        g_eff,
        delta_eff,
        eta: 0.0,
        validity_ratio,
        asymmetry,
    })
}

fn named_parameters(h: &CMatrix) -> (Vec<(String, f64)>, Vec<(String, f64)>) {
    let n = h.nrows();
    let g = (1..n).map(|k| (format!("g_eff^({k})"), h[(k - 1, k)].re)).collect();
    let d = (1..n)
        .map(|k| (format!("Delta_eff^({k})"), h[(k, k)].re - h[(0, 0)].re))
        .collect();
    (g, d)
}

/// Solves `A X = rhs`. On a numerically singular `A` returns the index of the
/// largest component of its null vector.
fn solve_block(a: &CMatrix, rhs: &CMatrix) -> core::result::Result<CMatrix, usize> {
    let svd = a.clone().svd(false, true);
    let s_max = svd.singular_values.max();
    let (k_min, s_min) = svd.singular_values.argmin();
    if !(s_min > s_max * 1e-13) {
        let v_t = svd.v_t.expect("requested");
        let null = v_t.row(k_min);
        let (imax, _) = null
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, z)| if z.norm() > best.1 { (i, z.norm()) } else { best });
        return Err(imax);
    }
    a.clone().lu().solve(rhs).ok_or(0)
}

/// Builds the seed Hamiltonian of `model` and eliminates the states marked
/// `0` in its pattern (and every off-chain state).
pub fn effective_system(model: &LinkageModel) -> Result<EffectiveSystem> {
    let h = build_seed_hamiltonian(model, false)?;
    let part = Partition::from_pattern(model, &h.basis)?;
    eliminate(&h, &part)
}

/// An effective parameter in exact and leading-order form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Param {
    pub exact: f64,
    pub approx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub g_eff: Param,
    pub delta_eff: Param,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelParams {
    pub g1: Param,
    pub g2: Param,
    pub delta1: Param,
    pub delta2: Param,
}

fn expect_pattern(model: &LinkageModel, pattern: &str) -> Result<()> {
    if model.pattern.to_string() != pattern {
        return Err(Error::InvalidModel(format!(
            "expected pattern {pattern}, model has {}",
            model.pattern
        )));
    }
    Ok(())
}

fn nonzero(x: f64, what: &'static str) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        Err(Error::ResonantDenominator(what))
    } else {
        Ok(x)
    }
}

/// Pattern `10001`: the two-level iSWAP parameters.
pub fn iswap_two_level_params(model: &LinkageModel) -> Result<TwoLevelParams> {
    expect_pattern(model, "10001")?;
    let [g1, g2, g3, g4] = [0, 1, 2, 3].map(|k| model.coupling(k));
    let [d1, d2, d3, d4] = [0, 1, 2, 3].map(|k| model.detunings[k]);
    nonzero(d1 * d2 * d3, "Δ1 Δ2 Δ3 vanishes")?;
    let den = nonzero(d1 * d2 * d3 - d3 * g2 * g2 - d1 * g3 * g3, "Δ1Δ2Δ3 - Δ3 g2² - Δ1 g3² vanishes")?;
    Ok(TwoLevelParams {
        g_eff: Param {
            exact: -g1 * g2 * g3 * g4 / den,
            approx: -g1 * g2 * g3 * g4 / (d1 * d2 * d3),
        },
        delta_eff: Param {
            exact: d4 + (g1 * g1 * (d2 * d3 - g3 * g3) - g4 * g4 * (d1 * d2 - g2 * g2)) / den,
            approx: d4 + g1 * g1 / d1 - g4 * g4 / d3,
        },
    })
}

/// Pattern `11001`: the three-level iSWAP parameters.
pub fn iswap_three_level_params(model: &LinkageModel) -> Result<ThreeLevelParams> {
    expect_pattern(model, "11001")?;
    let [g1, g2, g3, g4] = [0, 1, 2, 3].map(|k| model.coupling(k));
    let [d1, d2, d3, d4] = [0, 1, 2, 3].map(|k| model.detunings[k]);
    nonzero(d2 * d3, "Δ2 Δ3 vanishes")?;
    let den = nonzero(d2 * d3 - g3 * g3, "Δ2Δ3 - g3² vanishes")?;
    Ok(ThreeLevelParams {
        g1: Param { exact: g1, approx: g1 },
        g2: Param {
            exact: g2 * g3 * g4 / den,
            approx: g2 * g3 * g4 / (d2 * d3),
        },
        delta1: Param {
            exact: d1 - g2 * g2 * d3 / den,
            approx: d1 - g2 * g2 / d2,
        },
        delta2: Param {
            exact: d4 - g4 * g4 * d2 / den,
            approx: d4 - g4 * g4 / d3,
        },
    })
}

/// Pattern `1001001`: the three-level Fredkin parameters. Exact values come
/// from eliminating the full nine-state component, over-shot states included.
pub fn fredkin_three_level_params(model: &LinkageModel) -> Result<ThreeLevelParams> {
    expect_pattern(model, "1001001")?;
    let g: Vec<f64> = (0..6).map(|k| model.coupling(k)).collect();
    let d = &model.detunings;
    for (k, name) in [(0, "Δ1 vanishes"), (1, "Δ2 vanishes"), (3, "Δ4 vanishes"), (4, "Δ5 vanishes")] {
        nonzero(d[k], name)?;
    }
    let eff = effective_system(model)?;
    Ok(ThreeLevelParams {
        g1: Param {
            exact: eff.g(1),
            approx: g[0] * g[1] * g[2] / (d[0] * d[1]),
        },
        g2: Param {
            exact: eff.g(2),
            approx: g[3] * g[4] * g[5] / (d[3] * d[4]),
        },
        delta1: Param {
            exact: eff.delta(1),
            approx: d[2] + g[0] * g[0] / d[0] - g[2] * g[2] / d[1] - g[3] * g[3] / d[3],
        },
        delta2: Param {
            exact: eff.delta(2),
            approx: d[5] - g[5] * g[5] / d[4],
        },
    })
}

/// NOT-gate parameters. The effective detuning is reported exactly and in
/// both leading-order forms printed for this model, `Δ3 + g_ab²/Δ2` and
/// `Δ3 + g_ab²/Δ1`; the exact value tends to the latter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NotGateParams {
    pub g_eff: Param,
    pub delta_eff_exact: f64,
    pub delta_eff_over_delta2: f64,
    pub delta_eff_over_delta1: f64,
}

pub fn not_gate_params(g_ab: f64, g_bc: f64, omega: f64, d1: f64, d2: f64, d3: f64) -> Result<NotGateParams> {
    let den = nonzero(d1 * d2 - g_bc * g_bc, "Δ1Δ2 - g_bc² vanishes")?;
    nonzero(d1 * d2, "Δ1 Δ2 vanishes")?;
    let half = omega / 2.0;
    let outer = nonzero(d2 - d3, "Δ2 - Δ3 vanishes")?;
    Ok(NotGateParams {
        g_eff: Param {
            exact: half * g_ab * g_bc / den,
            approx: omega * g_ab * g_bc / (2.0 * d1 * d2),
        },
        delta_eff_exact: d3 - half * half * d1 / den + half * half / outer + g_ab * g_ab * d2 / den,
        delta_eff_over_delta2: d3 + g_ab * g_ab / d2,
        delta_eff_over_delta1: d3 + g_ab * g_ab / d1,
    })
}

/// Index of chain state `detuning + 1` among the retained states.
fn retained_position(model: &LinkageModel, detuning: usize) -> Result<usize> {
    if detuning >= model.detunings.len() {
        return Err(Error::InvalidInput(format!(
            "detuning {} does not exist; the model has {}",
            detuning + 1,
            model.detunings.len()
        )));
    }
    model
        .pattern
        .retained()
        .position(|i| i == detuning + 1)
        .filter(|&p| p > 0)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "chain state {} detuned by Δ{} is not retained by pattern {}",
                detuning + 1,
                detuning + 1,
                model.pattern
            ))
        })
}

fn exact_delta_eff(model: &LinkageModel, pos: usize) -> Result<f64> {
    Ok(effective_system(model)?.delta(pos))
}

/// Value of detuning `detuning` (0-based) that zeroes the exact effective
/// detuning of the chain state it controls.
pub fn solve_resonance(model: &LinkageModel, detuning: usize) -> Result<f64> {
    let pos = retained_position(model, detuning)?;
    let mut m = model.clone();
    let mut x0 = model.detunings[detuning];
    let mut f0 = exact_delta_eff(&m, pos)?;
    let scale = model.detunings.iter().fold(1.0_f64, |a, d| a.max(libm::fabs(*d)));
    let mut x1 = x0 - f0;
    if x1 == x0 {
        x1 = x0 + 1e-3 * scale;
    }
    for _ in 0..50 {
        m.detunings[detuning] = x1;
        let f1 = exact_delta_eff(&m, pos)?;
        if libm::fabs(f1) <= 1e-15 * scale {
            return Ok(x1);
        }
        let slope = (f1 - f0) / (x1 - x0);
        if !(libm::fabs(slope) > 1e-12) {
            return Err(Error::NoDependence(detuning + 1));
        }
        let x2 = x1 - f1 / slope;
        if libm::fabs(x2 - x1) <= 1e-15 * scale {
            return Ok(x2);
        }
        (x0, f0, x1) = (x1, f1, x2);
    }
    Err(Error::Integration(format!("resonance solve for Δ{} did not converge", detuning + 1)))
}

/// Detunings each pattern tunes to resonance: the last chain step, and for
/// every other retained chain state the detuning that reaches it.
pub fn free_detunings(model: &LinkageModel) -> Vec<usize> {
    model.pattern.retained().filter(|&i| i > 0).map(|i| i - 1).collect()
}

/// Tunes every free detuning (see [`free_detunings`]) so that all exact
/// effective detunings vanish.
pub fn tune_resonances(model: &LinkageModel) -> Result<LinkageModel> {
    let mut m = model.clone();
    let free = free_detunings(model);
    for _ in 0..20 {
        let mut change = 0.0_f64;
        for &k in &free {
            let v = solve_resonance(&m, k)?;
            change = change.max(libm::fabs(v - m.detunings[k]));
            m.detunings[k] = v;
        }
        if change <= 1e-14 {
            break;
        }
    }
    Ok(m)
}

/// Rescales the first coupling of a `11…` pattern to the exact second
/// effective coupling (equal couplings give complete transfer), re-tuning the
/// resonances each round.
pub fn spin_j_match(model: &LinkageModel) -> Result<LinkageModel> {
    if !model.pattern.bits().starts_with(&[true, true]) || model.pattern.retained().count() != 3 {
        return Err(Error::InvalidModel(format!(
            "spin-J matching needs a three-level pattern starting with 11, got {}",
            model.pattern
        )));
    }
    let mut m = tune_resonances(model)?;
    for _ in 0..50 {
        let g2 = libm::fabs(effective_system(&m)?.g(2));
        let change = libm::fabs(g2 - m.coupling(0));
        m.set_coupling(0, g2);
        m = tune_resonances(&m)?;
        if change <= 1e-15 * g2.max(1e-300) {
            break;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        libm::fabs(a - b) <= tol
    }

    #[test]
    fn iswap_two_level_exact_coupling() {
        let m = builtin::iswap("10001", [1.0; 4], [10.0, 10.0, 10.0, 0.0]).unwrap();
        let eff = effective_system(&m).unwrap();
        assert_eq!(eff.basis.len(), 2);
        assert!(close(eff.g(1), -1.0 / 980.0, 1e-15));
        assert!(close(eff.delta(1), 0.0, 1e-15));
        let p = iswap_two_level_params(&m).unwrap();
        assert!(close(p.g_eff.exact, eff.g(1), 1e-16));
        assert!(close(p.g_eff.approx, -1e-3, 1e-16));
        assert!(eff.asymmetry < 1e-12);
    }

    #[test]
    fn iswap_two_level_asymmetric_couplings() {
        let m = builtin::iswap("10001", [2.0, 1.0, 1.0, 1.0], [10.0, 10.0, 10.0, 0.0]).unwrap();
        let p = iswap_two_level_params(&m).unwrap();
        assert!(close(p.g_eff.approx, -2e-3, 1e-16));
        assert!(close(p.delta_eff.approx, 0.4 - 0.1, 1e-15));
        let eff = effective_system(&m).unwrap();
        assert!(close(p.delta_eff.exact, eff.delta(1), 1e-13));
    }

    #[test]
    fn iswap_three_level_exact_coupling() {
        let m = builtin::iswap("11001", [1.0; 4], [0.0, 20.0, 20.0, 0.0]).unwrap();
        let eff = effective_system(&m).unwrap();
        assert!(close(eff.g(2), 1.0 / 399.0, 1e-15));
        assert!(close(eff.g(1), 1.0, 1e-15));
        let p = iswap_three_level_params(&m).unwrap();
        assert!(close(p.g2.approx, 1.0 / 400.0, 1e-16));
        assert!(close(p.delta1.exact, eff.delta(1), 1e-13));
        assert!(close(p.delta2.exact, eff.delta(2), 1e-13));
    }

    #[test]
    fn empty_q_is_identity() {
        let m = builtin::iswap("10001", [0.3, 0.5, 0.7, 0.9], [1.0, 2.0, 3.0, 4.0]).unwrap();
        let h = build_seed_hamiltonian(&m, false).unwrap();
        let eff = eliminate(&h, &Partition::new((0..5).collect(), alloc::vec![], 5).unwrap()).unwrap();
        assert_eq!(eff.h_eff.matrix, h.matrix);
    }

    #[test]
    fn singular_block_names_state() {
        let m = builtin::iswap("10001", [1.0, 0.0, 1.0, 1.0], [0.0, 5.0, 5.0, 0.0]).unwrap();
        match effective_system(&m) {
            Err(Error::SingularBlock { state }) => assert_eq!(state, "|b 0010⟩"),
            other => panic!("expected singular block, got {other:?}"),
        }
    }

    #[test]
    fn resonance_11001() {
        let m = builtin::iswap("11001", [1.0; 4], [0.0, 20.0, 20.0, 0.0]).unwrap();
        let tuned = tune_resonances(&m).unwrap();
        let want = 20.0 / (400.0 - 1.0);
        assert!(close(tuned.detunings[0], want, 1e-13));
        assert!(close(tuned.detunings[3], want, 1e-13));
        assert!(close(want, 0.050125, 1e-6));
    }

    #[test]
    fn resonance_10001_symmetric() {
        let m = builtin::iswap("10001", [1.0; 4], [10.0, 10.0, 10.0, 0.3]).unwrap();
        assert!(close(solve_resonance(&m, 3).unwrap(), 0.0, 1e-14));
        assert!(matches!(solve_resonance(&m, 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn fredkin_resonances_and_couplings() {
        let m = builtin::fredkin([1.0; 6], [20.0, 20.0, 0.0, 20.0, 20.0, 0.0]).unwrap();
        let tuned = tune_resonances(&m).unwrap();
        assert!(close(tuned.detunings[2], 0.05, 2e-4), "{}", tuned.detunings[2]);
        assert!(close(tuned.detunings[5], 0.05, 2e-4), "{}", tuned.detunings[5]);
        let p = fredkin_three_level_params(&tuned).unwrap();
        assert!(close(p.g1.approx, 1.0 / 400.0, 1e-16));
        assert!(close(p.g1.exact, 1.0 / 399.0, 1e-12));
        assert!(close(p.delta1.exact, 0.0, 1e-12));
        assert!(close(p.delta2.exact, 0.0, 1e-12));
    }

    #[test]
    fn not_gate_parameters_match_elimination() {
        let (gab, gbc, om, d1, d2, d3) = (1.0, 1.0, 2.0, 10.0, 10.0, 0.0);
        let p = not_gate_params(gab, gbc, om, d1, d2, d3).unwrap();
        assert!(close(p.g_eff.exact, 1.0 / 99.0, 1e-15));
        assert!(close(p.g_eff.approx, 1.0 / 100.0, 1e-15));
        let h = crate::hamiltonian::build_lambda_hamiltonian(gab, gbc, om, d1, 12.0, 0.7).unwrap();
        let part = Partition::new(alloc::vec![1, 4], alloc::vec![0, 2, 3], 5).unwrap();
        let eff = eliminate(&h, &part).unwrap();
        let p = not_gate_params(gab, gbc, om, d1, 12.0, 0.7).unwrap();
        assert!(close(eff.g(1), p.g_eff.exact, 1e-14));
        assert!(close(eff.delta(1), p.delta_eff_exact, 1e-13));
    }

    #[test]
    fn spin_j_match_equalises_couplings() {
        let m = builtin::iswap("11001", [1.0; 4], [0.0, 10.0, 10.0, 0.0]).unwrap();
        let matched = spin_j_match(&m).unwrap();
        let eff = effective_system(&matched).unwrap();
        assert!(close(eff.g(1), libm::fabs(eff.g(2)), 1e-14));
        assert!(close(eff.delta(1), 0.0, 1e-13));
        assert!(close(eff.delta(2), 0.0, 1e-13));
    }
}
