//! Declarative linkage models: atomic levels, field modes, couplings and the
//! resonance pattern of the chain they form.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::state_space::BasisState;
use crate::{Error, Result};

/// Atomic level, identified by a single lowercase label. `a` is the ground
/// (ancilla) level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomLevel(pub char);

impl AtomLevel {
    pub const GROUND: AtomLevel = AtomLevel('a');

    pub fn label(self) -> char {
        self.0
    }

    pub fn is_ground(self) -> bool {
        self == Self::GROUND
    }
}

impl fmt::Display for AtomLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// What carries the quantum exchanged in a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Field {
    /// Quantised cavity mode with the given index.
    Mode(usize),
    /// Classical drive with the given index. Carries no Fock factor.
    Drive(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Absorb,
    Emit,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Absorb => Direction::Emit,
            Direction::Emit => Direction::Absorb,
        }
    }

    /// +1 for absorption, -1 for emission.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Absorb => 1.0,
            Direction::Emit => -1.0,
        }
    }
}

/// One term `g |to><from| (field)` of the interaction, plus its Hermitian
/// conjugate.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub from: AtomLevel,
    pub to: AtomLevel,
    pub field: Field,
    pub direction: Direction,
    pub strength: f64,
}

impl Coupling {
    pub fn mode(from: char, to: char, mode: usize, direction: Direction, strength: f64) -> Self {
        Self {
            from: AtomLevel(from),
            to: AtomLevel(to),
            field: Field::Mode(mode),
            direction,
            strength,
        }
    }

    pub fn drive(from: char, to: char, drive: usize, strength: f64) -> Self {
        Self {
            from: AtomLevel(from),
            to: AtomLevel(to),
            field: Field::Drive(drive),
            direction: Direction::Absorb,
            strength,
        }
    }

    /// The Hermitian-conjugate term.
    pub fn reversed(&self) -> Self {
        Self {
            from: self.to,
            to: self.from,
            field: self.field,
            direction: self.direction.flipped(),
            strength: self.strength,
        }
    }

    /// Applies the term to `state`. Returns the image and the Fock factor
    /// (`sqrt(n)` for absorption, `sqrt(n+1)` for emission, 1 for drives).
    /// The image may exceed any Fock cutoff; callers check.
    pub fn apply(&self, state: &BasisState) -> Option<(BasisState, f64)> {
        if state.atom != self.from {
            return None;
        }
        let mut next = state.clone();
        next.atom = self.to;
        let factor = match self.field {
            Field::Drive(_) => 1.0,
            Field::Mode(j) => {
                let n = *state.occupations.get(j)?;
                match self.direction {
                    Direction::Absorb => {
                        if n == 0 {
                            return None;
                        }
                        next.occupations[j] = n - 1;
                        libm::sqrt(f64::from(n))
                    }
                    Direction::Emit => {
                        next.occupations[j] = n.checked_add(1)?;
                        libm::sqrt(f64::from(n) + 1.0)
                    }
                }
            }
        };
        Some((next, factor))
    }
}

/// Binary string marking which chain states are retained (`1`) and which are
/// eliminated (`0`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResonancePattern(Vec<bool>);

impl ResonancePattern {
    pub fn parse(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .enumerate()
            .map(|(position, c)| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                found => Err(Error::InvalidPattern {
                    pattern: s.to_string(),
                    position,
                    found,
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::InvalidModel("empty resonance pattern".into()));
        }
        Ok(Self(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn retained(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }
}

impl fmt::Display for ResonancePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Frame energies: level energies, mode and drive frequencies in the
/// rotating frame in which chain step `k` is detuned by `Δ_k - Δ_{k-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub levels: BTreeMap<AtomLevel, f64>,
    pub modes: Vec<f64>,
    pub drives: Vec<f64>,
}

/// A multilevel atom coupled to several field modes in a single chain.
///
/// Coupling `k` is chain step `k`: applied to chain state `k` (in either
/// orientation) it yields chain state `k + 1`, detuned by `detunings[k]`
/// from the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkageModel {
    pub name: String,
    pub levels: Vec<AtomLevel>,
    pub n_modes: usize,
    pub couplings: Vec<Coupling>,
    pub detunings: Vec<f64>,
    pub pattern: ResonancePattern,
    pub seed: BasisState,
    pub fock_cutoff: u8,
    /// Levels subject to spontaneous emission by default.
    pub decaying_levels: Vec<AtomLevel>,
}

pub const DEFAULT_FOCK_CUTOFF: u8 = 2;

impl LinkageModel {
    pub fn validate(&self) -> Result<()> {
        let mut seen = Vec::with_capacity(self.levels.len());
        for level in &self.levels {
            if seen.contains(level) {
                return Err(Error::InvalidModel(format!("duplicate level {level}")));
            }
            seen.push(*level);
        }
        if !self.levels.contains(&AtomLevel::GROUND) {
            return Err(Error::InvalidModel("level a is missing".into()));
        }
        for (k, c) in self.couplings.iter().enumerate() {
            for level in [c.from, c.to] {
                if !self.levels.contains(&level) {
                    return Err(Error::InvalidModel(format!(
                        "coupling {k} references unknown level {level}"
                    )));
                }
            }
            if c.from == c.to {
                return Err(Error::InvalidModel(format!("coupling {k} is diagonal")));
            }
            if let Field::Mode(j) = c.field {
                if j >= self.n_modes {
                    return Err(Error::InvalidModel(format!(
                        "coupling {k} references mode {j} of {}",
                        self.n_modes
                    )));
                }
            }
            if !(c.strength.is_finite() && c.strength >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "coupling {k} has strength {}",
                    c.strength
                )));
            }
        }
        if self.detunings.len() != self.couplings.len() {
            return Err(Error::LengthMismatch {
                expected: self.couplings.len(),
                found: self.detunings.len(),
            });
        }
        if let Some(d) = self.detunings.iter().find(|d| !d.is_finite()) {
            return Err(Error::InvalidModel(format!("detuning {d} is not finite")));
        }
        if self.pattern.len() != self.couplings.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "pattern {} has {} states but the chain has {}",
                self.pattern,
                self.pattern.len(),
                self.couplings.len() + 1
            )));
        }
        if self.seed.occupations.len() != self.n_modes {
            return Err(Error::LengthMismatch {
                expected: self.n_modes,
                found: self.seed.occupations.len(),
            });
        }
        if !self.levels.contains(&self.seed.atom) {
            return Err(Error::InvalidModel(format!(
                "seed level {} is not a model level",
                self.seed.atom
            )));
        }
        self.chain_steps()?;
        Ok(())
    }

    pub fn n_drives(&self) -> usize {
        self.couplings
            .iter()
            .filter_map(|c| match c.field {
                Field::Drive(k) => Some(k + 1),
                Field::Mode(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Chain states paired with the coupling orientation used to reach the
    /// next one.
    fn chain_steps(&self) -> Result<(Vec<BasisState>, Vec<Coupling>)> {
        let mut states = vec![self.seed.clone()];
        let mut oriented = Vec::with_capacity(self.couplings.len());
        for (k, c) in self.couplings.iter().enumerate() {
            let current = states.last().expect("chain is nonempty");
            let (next, used) = if let Some((next, _)) = c.apply(current) {
                (next, c.clone())
            } else {
                let r = c.reversed();
                match r.apply(current) {
                    Some((next, _)) => (next, r),
                    None => {
                        return Err(Error::InvalidModel(format!(
                            "coupling {k} does not act on chain state {current}"
                        )))
                    }
                }
            };
            states.push(next);
            oriented.push(used);
        }
        Ok((states, oriented))
    }

    /// The chain states in order, starting from the seed.
    pub fn chain_states(&self) -> Result<Vec<BasisState>> {
        Ok(self.chain_steps()?.0)
    }

    /// Chain states marked `1` in the resonance pattern.
    pub fn retained_states(&self) -> Result<Vec<BasisState>> {
        let chain = self.chain_states()?;
        Ok(self.pattern.retained().map(|i| chain[i].clone()).collect())
    }

    /// Solves for level energies and field frequencies so that every chain
    /// step carries its prescribed detuning. Unconstrained frequencies are 0.
    pub fn frame(&self) -> Result<Frame> {
        let (states, oriented) = self.chain_steps()?;
        let mut levels: BTreeMap<AtomLevel, Option<f64>> =
            self.levels.iter().map(|&l| (l, None)).collect();
        levels.insert(AtomLevel::GROUND, Some(0.0));
        let mut modes: Vec<Option<f64>> = vec![None; self.n_modes];
        let mut drives: Vec<Option<f64>> = vec![None; self.n_drives()];
        let mut prev = 0.0;
        for (k, c) in oriented.iter().enumerate() {
            let delta = self.detunings[k] - prev;
            prev = self.detunings[k];
            let s = c.direction.sign();
            let cur = levels[&states[k].atom];
            let next = levels[&c.to];
            let omega = match c.field {
                Field::Mode(j) => &mut modes[j],
                Field::Drive(j) => &mut drives[j],
            };
            // E_next - E_cur - s * omega = delta
            match (cur, next, *omega) {
                (Some(ec), None, None) => {
                    *omega = Some(0.0);
                    levels.insert(c.to, Some(ec + delta));
                }
                (Some(ec), None, Some(w)) => {
                    levels.insert(c.to, Some(ec + delta + s * w));
                }
                (Some(ec), Some(en), None) => {
                    *omega = Some((en - ec - delta) * s);
                }
                (Some(ec), Some(en), Some(w)) => {
                    let mismatch = en - ec - s * w - delta;
                    if libm::fabs(mismatch) > 1e-12 * (1.0 + libm::fabs(delta)) {
                        return Err(Error::InvalidModel(format!(
                            "chain step {k} cannot carry detuning {}: frame is overdetermined",
                            self.detunings[k]
                        )));
                    }
                }
                (None, ..) => {
                    return Err(Error::InvalidModel(format!(
                        "chain step {k} starts from a level of unknown energy"
                    )))
                }
            }
        }
        Ok(Frame {
            levels: levels
                .into_iter()
                .map(|(l, e)| (l, e.unwrap_or(0.0)))
                .collect(),
            modes: modes.into_iter().map(|w| w.unwrap_or(0.0)).collect(),
            drives: drives.into_iter().map(|w| w.unwrap_or(0.0)).collect(),
        })
    }

    /// Strength of chain coupling `k`.
    pub fn coupling(&self, k: usize) -> f64 {
        self.couplings[k].strength
    }

    pub fn set_coupling(&mut self, k: usize, g: f64) {
        self.couplings[k].strength = g;
    }
}

/// Built-in gate models.
pub mod builtin {
    use super::*;

    fn levels(labels: &str) -> Vec<AtomLevel> {
        labels.chars().map(AtomLevel).collect()
    }

    /// Four-level atom threading four modes: `a -(1)-> b -(2)-> c -(3)-> d
    /// -(4)-> a`, seeded in `|a 1010>`. `pattern` is `10001` or `11001`.
    pub fn iswap(pattern: &str, g: [f64; 4], detunings: [f64; 4]) -> Result<LinkageModel> {
        use Direction::*;
        let m = LinkageModel {
            name: format!("iswap-{pattern}"),
            levels: levels("abcd"),
            n_modes: 4,
            couplings: vec![
                Coupling::mode('a', 'b', 0, Absorb, g[0]),
                Coupling::mode('b', 'c', 1, Emit, g[1]),
                Coupling::mode('c', 'd', 2, Absorb, g[2]),
                Coupling::mode('d', 'a', 3, Emit, g[3]),
            ],
            detunings: detunings.to_vec(),
            pattern: ResonancePattern::parse(pattern)?,
            seed: BasisState::new('a', &[1, 0, 1, 0]),
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
            decaying_levels: levels("bd"),
        };
        m.validate()?;
        Ok(m)
    }

    /// Six-level atom for the Fredkin gate. Modes are
    /// `[ω1, ω1' (partner of ω1, uncoupled), ω2, ω3, ω5, ω6]`; mode ω1 is
    /// absorbed on `a→b` and re-emitted on `d→e`. Seeded in `|a 10,01,10>`.
    pub fn fredkin(g: [f64; 6], detunings: [f64; 6]) -> Result<LinkageModel> {
        use Direction::*;
        let m = LinkageModel {
            name: "fredkin-1001001".into(),
            levels: levels("abcdef"),
            n_modes: 6,
            couplings: vec![
                Coupling::mode('a', 'b', 0, Absorb, g[0]),
                Coupling::mode('b', 'c', 2, Emit, g[1]),
                Coupling::mode('c', 'd', 3, Absorb, g[2]),
                Coupling::mode('d', 'e', 0, Emit, g[3]),
                Coupling::mode('e', 'f', 4, Absorb, g[4]),
                Coupling::mode('f', 'a', 5, Emit, g[5]),
            ],
            detunings: detunings.to_vec(),
            pattern: ResonancePattern::parse("1001001")?,
            seed: BasisState::new('a', &[1, 0, 0, 1, 1, 0]),
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
            decaying_levels: levels("bcdef"),
        };
        m.validate()?;
        Ok(m)
    }

    /// Three-level Λ atom on a dual-rail qubit with a classical drive of
    /// Rabi strength `half_omega = Ω/2` on `c ↔ a`. Seeded in `|a 10>`.
    pub fn not_gate(
        g_ab: f64,
        g_bc: f64,
        half_omega: f64,
        detunings: [f64; 3],
    ) -> Result<LinkageModel> {
        use Direction::*;
        let m = LinkageModel {
            name: "not-gate".into(),
            levels: levels("abc"),
            n_modes: 2,
            couplings: vec![
                Coupling::mode('a', 'b', 0, Absorb, g_ab),
                Coupling::mode('b', 'c', 1, Emit, g_bc),
                Coupling::drive('c', 'a', 0, half_omega),
            ],
            detunings: detunings.to_vec(),
            pattern: ResonancePattern::parse("1001")?,
            seed: BasisState::new('a', &[1, 0]),
            fock_cutoff: DEFAULT_FOCK_CUTOFF,
            decaying_levels: levels("bc"),
        };
        m.validate()?;
        Ok(m)
    }

    /// Two-mode Λ system: `a` absorbs from mode 2 into `c`, which emits
    /// into mode 1 and ends in `b`. `Δ` detunes `c`; the Raman transition
    /// is resonant. Seeded in `|a n m>`.
    pub fn two_mode_lambda(g_ac: f64, g_bc: f64, delta: f64, n: u8, m: u8) -> Result<LinkageModel> {
        use Direction::*;
        let cutoff = DEFAULT_FOCK_CUTOFF.max(n.saturating_add(m));
        let model = LinkageModel {
            name: "two-mode-lambda".into(),
            levels: levels("abc"),
            n_modes: 2,
            couplings: vec![
                Coupling::mode('a', 'c', 1, Absorb, g_ac),
                Coupling::mode('c', 'b', 0, Emit, g_bc),
            ],
            detunings: vec![delta, 0.0],
            pattern: ResonancePattern::parse("101")?,
            seed: BasisState::new('a', &[n, m]),
            fock_cutoff: cutoff,
            decaying_levels: levels("bc"),
        };
        model.validate()?;
        Ok(model)
    }
}
