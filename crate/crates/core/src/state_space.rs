//! Atom ⊗ field basis states and the reachable state spaces of a model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::model::{AtomLevel, LinkageModel};
use crate::{Error, Result};

/// Atomic level plus one photon number per mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState {
    pub atom: AtomLevel,
    pub occupations: Vec<u8>,
}

impl BasisState {
    pub fn new(atom: char, occupations: &[u8]) -> Self {
        Self {
            atom: AtomLevel(atom),
            occupations: occupations.to_vec(),
        }
    }

    pub fn photons(&self) -> u32 {
        self.occupations.iter().map(|&n| u32::from(n)).sum()
    }

    pub fn max_occupation(&self) -> u8 {
        self.occupations.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{} ", self.atom)?;
        for n in &self.occupations {
            write!(f, "{n}")?;
        }
        f.write_str("⟩")
    }
}

/// Parses `a 1010`, `a 10,01,10` or `|a 1010⟩`: a level label followed by one
/// digit per mode. Commas, spaces and ket delimiters are ignored.
impl FromStr for BasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let body = s.trim().trim_start_matches('|').trim_end_matches(['⟩', '>']);
        let mut chars = body.chars().filter(|c| !c.is_whitespace() && *c != ',');
        let atom = chars
            .next()
            .filter(|c| c.is_ascii_lowercase())
            .ok_or_else(|| Error::InvalidInput(format!("state {s:?} has no level label")))?;
        let occupations = chars
            .map(|c| {
                c.to_digit(10)
                    .map(|d| d as u8)
                    .ok_or_else(|| Error::InvalidInput(format!("state {s:?}: bad occupation {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            atom: AtomLevel(atom),
            occupations,
        })
    }
}

/// An elementary decay process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DecayChannel {
    /// Photon loss from mode `j`.
    Mode(usize),
    /// Spontaneous emission from the given level to the ground level.
    Lowering(AtomLevel),
}

impl DecayChannel {
    pub fn apply(&self, state: &BasisState) -> Option<(BasisState, f64)> {
        match *self {
            DecayChannel::Mode(j) => {
                let n = *state.occupations.get(j)?;
                if n == 0 {
                    return None;
                }
                let mut next = state.clone();
                next.occupations[j] = n - 1;
                Some((next, libm::sqrt(f64::from(n))))
            }
            DecayChannel::Lowering(level) => {
                if state.atom != level || level.is_ground() {
                    return None;
                }
                let mut next = state.clone();
                next.atom = AtomLevel::GROUND;
                Some((next, 1.0))
            }
        }
    }
}

/// Ordered, duplicate-free list of basis states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    states: Vec<BasisState>,
    index: BTreeMap<BasisState, usize>,
    n_modes: usize,
}

impl StateSpace {
    pub fn from_states(states: Vec<BasisState>) -> Result<Self> {
        let n_modes = states.first().map_or(0, |s| s.occupations.len());
        let mut index = BTreeMap::new();
        for (i, s) in states.iter().enumerate() {
            if s.occupations.len() != n_modes {
                return Err(Error::LengthMismatch {
                    expected: n_modes,
                    found: s.occupations.len(),
                });
            }
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate basis state {s}")));
            }
        }
        Ok(Self {
            states,
            index,
            n_modes,
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn states(&self) -> &[BasisState] {
        &self.states
    }

    pub fn iter(&self) -> core::slice::Iter<'_, BasisState> {
        self.states.iter()
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        self.index.get(state).copied()
    }

    pub fn contains(&self, state: &BasisState) -> bool {
        self.index.contains_key(state)
    }

    /// True when every decay image of every state is in the space.
    pub fn is_decay_closed(&self, channels: &[DecayChannel]) -> bool {
        self.states.iter().all(|s| {
            channels
                .iter()
                .filter_map(|c| c.apply(s))
                .all(|(t, _)| self.contains(&t))
        })
    }
}

impl core::ops::Index<usize> for StateSpace {
    type Output = BasisState;

    fn index(&self, i: usize) -> &BasisState {
        &self.states[i]
    }
}

impl<'a> IntoIterator for &'a StateSpace {
    type Item = &'a BasisState;
    type IntoIter = core::slice::Iter<'a, BasisState>;

    fn into_iter(self) -> Self::IntoIter {
        self.states.iter()
    }
}

/// Every mode-loss channel and a lowering channel for each non-ground level.
pub fn all_decay_channels(model: &LinkageModel) -> Vec<DecayChannel> {
    (0..model.n_modes)
        .map(DecayChannel::Mode)
        .chain(
            model
                .levels
                .iter()
                .filter(|l| !l.is_ground())
                .map(|&l| DecayChannel::Lowering(l)),
        )
        .collect()
}

fn check_cutoff(state: &BasisState, cutoff: u8) -> Result<()> {
    if state.max_occupation() > cutoff {
        return Err(Error::CutoffExceeded {
            state: state.to_string(),
            cutoff,
        });
    }
    Ok(())
}

/// States one coupling term away from `state`, in both orientations.
fn hamiltonian_neighbours<'a>(
    model: &'a LinkageModel,
    state: &'a BasisState,
) -> impl Iterator<Item = BasisState> + 'a {
    model.couplings.iter().flat_map(move |c| {
        c.apply(state)
            .into_iter()
            .chain(c.reversed().apply(state))
            .map(|(t, _)| t)
    })
}

/// Layered breadth-first closure. Each new layer is sorted, so the order only
/// depends on the starting states.
fn close(
    model: &LinkageModel,
    start: Vec<BasisState>,
    known: &mut BTreeSet<BasisState>,
) -> Result<Vec<BasisState>> {
    let mut out = Vec::new();
    let mut layer = start;
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for s in &layer {
            for t in hamiltonian_neighbours(model, s) {
                if !known.contains(&t) && !next.contains(&t) {
                    check_cutoff(&t, model.fock_cutoff)?;
                    next.insert(t);
                }
            }
        }
        out.extend(layer);
        known.extend(next.iter().cloned());
        layer = next.into_iter().collect();
    }
    Ok(out)
}

/// The connected component of `seed` under the model couplings. With
/// `close_under_decay`, also every state reachable by photon loss or atomic
/// lowering, together with their own components.
pub fn enumerate_reachable(model: &LinkageModel, seed: &BasisState, close_under_decay: bool) -> Result<StateSpace> {
    if seed.occupations.len() != model.n_modes {
        return Err(Error::LengthMismatch {
            expected: model.n_modes,
            found: seed.occupations.len(),
        });
    }
    check_cutoff(seed, model.fock_cutoff)?;
    let mut known = BTreeSet::new();
    known.insert(seed.clone());
    let mut states = close(model, alloc::vec![seed.clone()], &mut known)?;

    if close_under_decay {
        let channels = all_decay_channels(model);
        let mut frontier = states.clone();
        while !frontier.is_empty() {
            let images: BTreeSet<BasisState> = frontier
                .iter()
                .flat_map(|s| channels.iter().filter_map(|c| c.apply(s)).map(|(t, _)| t))
                .filter(|t| !known.contains(t))
                .collect();
            let images: Vec<BasisState> = images.into_iter().collect();
            known.extend(images.iter().cloned());
            frontier = close(model, images, &mut known)?;
            states.extend(frontier.iter().cloned());
        }
    }
    StateSpace::from_states(states)
}

/// Splits `space` into connected components under the model couplings, each
/// listed by index in basis order.
pub fn components(model: &LinkageModel, space: &StateSpace) -> Vec<Vec<usize>> {
    let mut label = alloc::vec![usize::MAX; space.len()];
    let mut out = Vec::new();
    for start in 0..space.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        label[start] = id;
        let mut members = alloc::vec![start];
        let mut head = 0;
        while head < members.len() {
            let i = members[head];
            head += 1;
            for t in hamiltonian_neighbours(model, &space[i]) {
                if let Some(j) = space.index_of(&t) {
                    if label[j] == usize::MAX {
                        label[j] = id;
                        members.push(j);
                    }
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::builtin;
    use alloc::string::String;

    fn iswap() -> LinkageModel {
        builtin::iswap("10001", [1.0; 4], [10.0, 10.0, 10.0, 0.0]).unwrap()
    }

    fn names(space: &StateSpace) -> Vec<String> {
        space.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let s: BasisState = "a 10,01,10".parse().unwrap();
        assert_eq!(s, BasisState::new('a', &[1, 0, 0, 1, 1, 0]));
        assert_eq!(s.to_string().parse::<BasisState>().unwrap(), s);
        assert!("1010".parse::<BasisState>().is_err());
        assert!("a 1x10".parse::<BasisState>().is_err());
    }

    #[test]
    fn iswap_seed_component() {
        let m = iswap();
        let space = enumerate_reachable(&m, &"a 1010".parse().unwrap(), false).unwrap();
        assert_eq!(names(&space), ["|a 1010⟩", "|b 0010⟩", "|c 0110⟩", "|d 0100⟩", "|a 0101⟩"]);
    }

    #[test]
    fn blocked_state_is_isolated() {
        let m = iswap();
        let space = enumerate_reachable(&m, &"a 0110".parse().unwrap(), false).unwrap();
        assert_eq!(names(&space), ["|a 0110⟩"]);
    }

    #[test]
    fn a1001_component() {
        let m = iswap();
        let space = enumerate_reachable(&m, &"a 1001".parse().unwrap(), false).unwrap();
        let got: BTreeSet<String> = names(&space).into_iter().collect();
        let want: BTreeSet<String> = ["|c 0101⟩", "|b 0001⟩", "|a 1001⟩", "|d 1000⟩", "|c 1010⟩"]
            .iter()
            .map(|s| String::from(*s))
            .collect();
        assert_eq!(got, want);
        assert_eq!(space[0].to_string(), "|a 1001⟩");
    }

    #[test]
    fn fredkin_component_has_over_shot_states() {
        let m = builtin::fredkin([1.0; 6], [20.0; 6]).unwrap();
        let space = enumerate_reachable(&m, &m.seed, false).unwrap();
        assert_eq!(space.len(), 9);
        assert!(space.contains(&BasisState::new('b', &[0, 0, 1, 0, 0, 1])));
        assert!(space.contains(&BasisState::new('c', &[0, 0, 2, 0, 0, 1])));
    }

    #[test]
    fn decay_closure_adds_vacuum() {
        let m = iswap();
        let space = enumerate_reachable(&m, &m.seed, true).unwrap();
        assert!(space.contains(&BasisState::new('a', &[0, 0, 0, 0])));
        assert!(space.is_decay_closed(&all_decay_channels(&m)));
        assert_eq!(&space.states()[..5], enumerate_reachable(&m, &m.seed, false).unwrap().states());
    }

    #[test]
    fn cutoff_overflow_names_state() {
        let mut m = builtin::fredkin([1.0; 6], [20.0; 6]).unwrap();
        m.fock_cutoff = 1;
        match enumerate_reachable(&m, &m.seed, false) {
            Err(Error::CutoffExceeded { state, cutoff }) => {
                assert_eq!(cutoff, 1);
                assert!(state.contains('2'), "{state}");
            }
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
