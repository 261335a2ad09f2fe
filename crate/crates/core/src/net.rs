//! The labeled net model.
//!
//! A [`PetriNet`] is a set of positions (with markings), transitions (with
//! speed, delay and a delay counter) and arcs. Every arc is the image of one
//! [`StructuralUnit`]: a `C`, `B` or `A` unit is a position-to-transition arc
//! (normal, inhibitor, associative), an `I` unit is a transition-to-position
//! arc. Arcs are keyed by `(position, transition, unit kind)`, so adding the
//! same unit twice merges into one arc with doubled multiplicity.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("invalid identifier `{0}`: expected a letter followed by letters, digits or `_`")]
    InvalidIdentifier(String),
    #[error("NamespaceClash: `{0}` is used both as a position and as a transition")]
    NamespaceClash(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("{what} must be at least 1")]
    InvalidParameter { what: &'static str },
    #[error("fusion target `{target}` is missing from fragment {fragment}")]
    FusionTargetMissing { target: String, fragment: usize },
    #[error("{kind} fusion: the operands share no {kind} to fuse on")]
    NoFusionTarget { kind: &'static str },
    #[error("MarkingConflict: position `{0}` is marked in more than one fused fragment")]
    MarkingConflict(String),
    #[error("ParameterConflict: transition `{0}` has different speed or delay in the fused fragments")]
    ParameterConflict(String),
    #[error("{op} needs at least 2 operands, got {got}")]
    ArityError { op: &'static str, got: usize },
    #[error("whole fusion requires identical unit literals")]
    WholeFusionMismatch,
    #[error("unit {0} is not present in the net")]
    UnitNotPresent(String),
    #[error("position `{0}` would be left without incident arcs")]
    OrphanNode(String),
}

/// Checks the identifier grammar shared by positions and transitions.
pub fn is_valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

macro_rules! node_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self, NetError> {
                let s = s.into();
                if is_valid_identifier(&s) {
                    Ok(Self(s))
                } else {
                    Err(NetError::InvalidIdentifier(s))
                }
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl FromStr for $name {
            type Err = NetError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::new(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(&self.0)
            }
        }
    };
}

node_id!(
    /// Name of a position (a place holding tokens).
    PositionId
);
node_id!(
    /// Name of a transition.
    TransitionId
);

/// Reference to either kind of node.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeId {
    Position(PositionId),
    Transition(TransitionId),
}

impl NodeId {
    pub fn as_str(&self) -> &str {
        match self {
            NodeId::Position(p) => p.as_str(),
            NodeId::Transition(t) => t.as_str(),
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The four unit kinds. The declaration order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum UnitKind {
    /// position → transition, normal arc
    C,
    /// transition → position, normal arc
    I,
    /// position → transition, inhibitor arc
    B,
    /// position → transition, associative (read) arc
    A,
}

impl UnitKind {
    pub const ALL: [UnitKind; 4] = [UnitKind::C, UnitKind::I, UnitKind::B, UnitKind::A];

    pub fn letter(self) -> char {
        match self {
            UnitKind::C => 'C',
            UnitKind::I => 'I',
            UnitKind::B => 'B',
            UnitKind::A => 'A',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'C' => Some(UnitKind::C),
            'I' => Some(UnitKind::I),
            'B' => Some(UnitKind::B),
            'A' => Some(UnitKind::A),
            _ => None,
        }
    }

    pub fn direction(self) -> Direction {
        match self {
            UnitKind::I => Direction::TransitionToPosition,
            _ => Direction::PositionToTransition,
        }
    }

    pub fn arc_kind(self) -> ArcKind {
        match self {
            UnitKind::C | UnitKind::I => ArcKind::Normal,
            UnitKind::B => ArcKind::Inhibitor,
            UnitKind::A => ArcKind::Associative,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    PositionToTransition,
    TransitionToPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    Normal,
    Inhibitor,
    Associative,
}

/// One triad: a position, a transition and the arc between them.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructuralUnit {
    pub position: PositionId,
    pub transition: TransitionId,
    pub kind: UnitKind,
    pub multiplicity: u32,
    /// Explicit threshold `k`; `None` means "same as the multiplicity".
    pub threshold: Option<u32>,
}

impl StructuralUnit {
    /// Builds a unit with multiplicity 1 and the default threshold. The two
    /// names are given in arc order: `I` units take the transition first.
    pub fn new(kind: UnitKind, from: &str, to: &str) -> Result<Self, NetError> {
        let (position, transition) = match kind {
            UnitKind::I => (to, from),
            _ => (from, to),
        };
        Ok(Self {
            position: PositionId::new(position)?,
            transition: TransitionId::new(transition)?,
            kind,
            multiplicity: 1,
            threshold: None,
        })
    }

    pub fn with_multiplicity(mut self, multiplicity: u32) -> Self {
        self.multiplicity = multiplicity;
        self
    }

    pub fn with_threshold(mut self, threshold: u32) -> Self {
        self.threshold = Some(threshold);
        self
    }

    pub fn effective_threshold(&self) -> u32 {
        self.threshold.unwrap_or(self.multiplicity)
    }

    /// Name of the node the arc leaves.
    pub fn pre(&self) -> &str {
        match self.kind {
            UnitKind::I => self.transition.as_str(),
            _ => self.position.as_str(),
        }
    }

    /// Name of the node the arc enters.
    pub fn post(&self) -> &str {
        match self.kind {
            UnitKind::I => self.position.as_str(),
            _ => self.transition.as_str(),
        }
    }

    /// Same kind and endpoints, ignoring multiplicity and threshold.
    pub fn same_arc(&self, other: &StructuralUnit) -> bool {
        self.key() == other.key()
    }

    pub(crate) fn key(&self) -> ArcKey {
        ArcKey {
            position: self.position.clone(),
            transition: self.transition.clone(),
            kind: self.kind,
        }
    }

    fn validate(&self) -> Result<(), NetError> {
        if self.multiplicity == 0 {
            return Err(NetError::InvalidParameter { what: "multiplicity" });
        }
        if self.threshold == Some(0) {
            return Err(NetError::InvalidParameter { what: "threshold" });
        }
        if self.position.as_str() == self.transition.as_str() {
            return Err(NetError::NamespaceClash(self.position.to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for StructuralUnit {
    /// Canonical DSL form, e.g. `C[a,b]^2 k=3` or `I[b,c]`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{},{}]", self.kind.letter(), self.pre(), self.post())?;
        if self.multiplicity != 1 {
            write!(f, "^{}", self.multiplicity)?;
        }
        if let Some(k) = self.threshold {
            write!(f, " k={k}")?;
        }
        Ok(())
    }
}

impl Serialize for StructuralUnit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct ArcKey {
    pub(crate) position: PositionId,
    pub(crate) transition: TransitionId,
    pub(crate) kind: UnitKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ArcWeight {
    pub(crate) multiplicity: u32,
    pub(crate) threshold: Option<u32>,
}

/// Borrowed view of one arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arc<'a> {
    pub position: &'a PositionId,
    pub transition: &'a TransitionId,
    pub kind: UnitKind,
    pub multiplicity: u32,
    pub explicit_threshold: Option<u32>,
}

impl Arc<'_> {
    pub fn direction(&self) -> Direction {
        self.kind.direction()
    }

    pub fn arc_kind(&self) -> ArcKind {
        self.kind.arc_kind()
    }

    pub fn threshold(&self) -> u32 {
        self.explicit_threshold.unwrap_or(self.multiplicity)
    }

    pub fn to_unit(&self) -> StructuralUnit {
        StructuralUnit {
            position: self.position.clone(),
            transition: self.transition.clone(),
            kind: self.kind,
            multiplicity: self.multiplicity,
            threshold: self.explicit_threshold,
        }
    }
}

/// Functional parameters of a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    speed: u32,
    delay: u32,
    delay_counter: u32,
}

impl Default for Transition {
    fn default() -> Self {
        Self {
            speed: 1,
            delay: 0,
            delay_counter: 0,
        }
    }
}

impl Transition {
    /// Maximum number of firings per step.
    pub fn speed(&self) -> u32 {
        self.speed
    }

    /// Steps of sustained enabledness required before the first firing.
    pub fn delay(&self) -> u32 {
        self.delay
    }

    pub fn delay_counter(&self) -> u32 {
        self.delay_counter
    }

    pub fn has_default_parameters(&self) -> bool {
        self.speed == 1 && self.delay == 0
    }

    pub(crate) fn set_delay_counter(&mut self, counter: u32) {
        self.delay_counter = counter.min(self.delay);
    }
}

/// How an entry or end node of the net is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    /// A position with no producer feeding it.
    ResourceEntry,
    /// A transition with no normal input.
    ProcessEntry,
    /// A position nothing reads from.
    AccumulativeEnd,
    /// A transition with no output.
    StockEnd,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PetriNet {
    positions: BTreeMap<PositionId, u64>,
    transitions: BTreeMap<TransitionId, Transition>,
    arcs: BTreeMap<ArcKey, ArcWeight>,
}

impl PetriNet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The degenerate one-position net with no arcs.
    pub fn isolated_position(id: PositionId, marking: u64) -> Self {
        let mut net = Self::new();
        net.positions.insert(id, marking);
        net
    }

    pub fn from_units<'a>(units: impl IntoIterator<Item = &'a StructuralUnit>) -> Result<Self, NetError> {
        let mut net = Self::new();
        for u in units {
            net.add_unit(u)?;
        }
        Ok(net)
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty() && self.transitions.is_empty()
    }

    pub fn position_count(&self) -> usize {
        self.positions.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn has_position(&self, id: &str) -> bool {
        self.positions.contains_key(id)
    }

    pub fn has_transition(&self, id: &str) -> bool {
        self.transitions.contains_key(id)
    }

    pub fn has_node(&self, id: &str) -> bool {
        self.has_position(id) || self.has_transition(id)
    }

    pub fn marking(&self, id: &str) -> Option<u64> {
        self.positions.get(id).copied()
    }

    pub fn transition(&self, id: &str) -> Option<&Transition> {
        self.transitions.get(id)
    }

    pub fn positions(&self) -> impl Iterator<Item = (&PositionId, u64)> + '_ {
        self.positions.iter().map(|(id, m)| (id, *m))
    }

    pub fn transitions(&self) -> impl Iterator<Item = (&TransitionId, &Transition)> + '_ {
        self.transitions.iter()
    }

    /// Arcs in canonical order: position id, then transition id, then kind.
    pub fn arcs(&self) -> impl Iterator<Item = Arc<'_>> + '_ {
        self.arcs.iter().map(|(k, w)| Arc {
            position: &k.position,
            transition: &k.transition,
            kind: k.kind,
            multiplicity: w.multiplicity,
            explicit_threshold: w.threshold,
        })
    }

    /// One unit per arc, in canonical order.
    pub fn units(&self) -> Vec<StructuralUnit> {
        self.arcs().map(|a| a.to_unit()).collect()
    }

    /// Arcs touching the given transition.
    pub fn arcs_of_transition<'a>(&'a self, t: &'a str) -> impl Iterator<Item = Arc<'a>> + 'a {
        self.arcs().filter(move |a| a.transition.as_str() == t)
    }

    /// Arcs touching the given position.
    pub fn arcs_of_position<'a>(&'a self, p: &'a str) -> impl Iterator<Item = Arc<'a>> + 'a {
        self.arcs().filter(move |a| a.position.as_str() == p)
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        if let Some((p, _)) = self.positions.get_key_value(id) {
            Some(NodeId::Position(p.clone()))
        } else {
            self.transitions
                .get_key_value(id)
                .map(|(t, _)| NodeId::Transition(t.clone()))
        }
    }

    /// Adds one structural unit. New names create nodes, existing names are
    /// reused (fusion by matching indices), and an already present arc of
    /// the same kind between the same endpoints has its multiplicity raised.
    pub fn add_unit(&mut self, u: &StructuralUnit) -> Result<(), NetError> {
        u.validate()?;
        if self.transitions.contains_key(u.position.as_str()) {
            return Err(NetError::NamespaceClash(u.position.to_string()));
        }
        if self.positions.contains_key(u.transition.as_str()) {
            return Err(NetError::NamespaceClash(u.transition.to_string()));
        }
        self.positions.entry(u.position.clone()).or_insert(0);
        self.transitions.entry(u.transition.clone()).or_default();
        self.arcs
            .entry(u.key())
            .and_modify(|w| {
                w.multiplicity += u.multiplicity;
                // max keeps the merge independent of insertion order
                w.threshold = match (w.threshold, u.threshold) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    (a, b) => a.or(b),
                };
            })
            .or_insert(ArcWeight {
                multiplicity: u.multiplicity,
                threshold: u.threshold,
            });
        Ok(())
    }

    /// Lowers the matching arc's multiplicity by the unit's multiplicity and
    /// drops the arc at zero. Nodes are left in place; see [`Self::prune_orphans`].
    pub fn remove_unit(&mut self, u: &StructuralUnit) -> Result<(), NetError> {
        let key = u.key();
        let Some(w) = self.arcs.get_mut(&key) else {
            return Err(NetError::UnitNotPresent(u.to_string()));
        };
        if w.multiplicity < u.multiplicity {
            return Err(NetError::UnitNotPresent(u.to_string()));
        }
        w.multiplicity -= u.multiplicity;
        if w.multiplicity == 0 {
            self.arcs.remove(&key);
        }
        Ok(())
    }

    /// Removes every node without incident arcs, returning the removed
    /// positions with the tokens they held.
    pub fn prune_orphans(&mut self) -> Vec<(PositionId, u64)> {
        let mut used_p = BTreeSet::new();
        let mut used_t = BTreeSet::new();
        for k in self.arcs.keys() {
            used_p.insert(k.position.clone());
            used_t.insert(k.transition.clone());
        }
        self.transitions.retain(|t, _| used_t.contains(t));
        let mut removed = Vec::new();
        self.positions.retain(|p, m| {
            let keep = used_p.contains(p);
            if !keep {
                removed.push((p.clone(), *m));
            }
            keep
        });
        removed
    }

    /// Adds a position with no tokens if it is not there yet.
    pub(crate) fn insert_position(&mut self, id: &PositionId) -> Result<(), NetError> {
        if self.transitions.contains_key(id.as_str()) {
            return Err(NetError::NamespaceClash(id.to_string()));
        }
        self.positions.entry(id.clone()).or_insert(0);
        Ok(())
    }

    pub fn set_marking(&mut self, id: &str, marking: u64) -> Result<(), NetError> {
        match self.positions.get_mut(id) {
            Some(m) => {
                *m = marking;
                Ok(())
            }
            None => Err(NetError::UnknownNode(id.to_string())),
        }
    }

    pub fn add_tokens(&mut self, id: &str, amount: u64) -> Result<(), NetError> {
        let m = self
            .positions
            .get_mut(id)
            .ok_or_else(|| NetError::UnknownNode(id.to_string()))?;
        *m += amount;
        Ok(())
    }

    /// Withdraws tokens; returns `false` and leaves the marking untouched
    /// when the position holds fewer than `amount`.
    pub fn take_tokens(&mut self, id: &str, amount: u64) -> Result<bool, NetError> {
        let m = self
            .positions
            .get_mut(id)
            .ok_or_else(|| NetError::UnknownNode(id.to_string()))?;
        if *m < amount {
            return Ok(false);
        }
        *m -= amount;
        Ok(true)
    }

    pub fn set_speed(&mut self, id: &str, speed: u32) -> Result<(), NetError> {
        if speed == 0 {
            return Err(NetError::InvalidParameter { what: "speed" });
        }
        self.transition_mut(id)?.speed = speed;
        Ok(())
    }

    pub fn set_delay(&mut self, id: &str, delay: u32) -> Result<(), NetError> {
        let t = self.transition_mut(id)?;
        t.delay = delay;
        t.delay_counter = t.delay_counter.min(delay);
        Ok(())
    }

    /// Markings in position order, for bulk updates.
    pub(crate) fn markings_mut(&mut self) -> impl Iterator<Item = &mut u64> + '_ {
        self.positions.values_mut()
    }

    /// Transition parameters in id order, for bulk updates.
    pub(crate) fn transitions_mut(&mut self) -> impl Iterator<Item = &mut Transition> + '_ {
        self.transitions.values_mut()
    }

    pub(crate) fn transition_mut(&mut self, id: &str) -> Result<&mut Transition, NetError> {
        self.transitions
            .get_mut(id)
            .ok_or_else(|| NetError::UnknownNode(id.to_string()))
    }

    pub(crate) fn set_transition_params(&mut self, id: &str, params: Transition) -> Result<(), NetError> {
        *self.transition_mut(id)? = params;
        Ok(())
    }

    /// Sum of all markings.
    pub fn total_tokens(&self) -> u64 {
        self.positions.values().sum()
    }

    /// Exact equality of names, markings, speeds, delays and arcs. Delay
    /// counters are runtime state and are not compared.
    pub fn labeled_equal(&self, other: &PetriNet) -> bool {
        self.positions == other.positions
            && self.arcs == other.arcs
            && self.transitions.len() == other.transitions.len()
            && self
                .transitions
                .iter()
                .zip(&other.transitions)
                .all(|((ia, a), (ib, b))| ia == ib && a.speed == b.speed && a.delay == b.delay)
    }

    /// Entry and end nodes. Positions are listed before transitions; a node
    /// can carry both an entry and an end classification.
    pub fn classify_endpoints(&self) -> Vec<(NodeId, Endpoint)> {
        let mut fed_positions = BTreeSet::new();
        let mut read_positions = BTreeSet::new();
        let mut consuming = BTreeSet::new();
        let mut producing = BTreeSet::new();
        for a in self.arcs() {
            match a.kind {
                UnitKind::I => {
                    fed_positions.insert(a.position);
                    producing.insert(a.transition);
                }
                UnitKind::C => {
                    read_positions.insert(a.position);
                    consuming.insert(a.transition);
                }
                UnitKind::B | UnitKind::A => {
                    read_positions.insert(a.position);
                }
            }
        }
        let mut out = Vec::new();
        for p in self.positions.keys() {
            if !fed_positions.contains(p) {
                out.push((NodeId::Position(p.clone()), Endpoint::ResourceEntry));
            }
            if !read_positions.contains(p) {
                out.push((NodeId::Position(p.clone()), Endpoint::AccumulativeEnd));
            }
        }
        for t in self.transitions.keys() {
            if !consuming.contains(t) {
                out.push((NodeId::Transition(t.clone()), Endpoint::ProcessEntry));
            }
            if !producing.contains(t) {
                out.push((NodeId::Transition(t.clone()), Endpoint::StockEnd));
            }
        }
        out
    }

    /// Full scan of the structural invariants.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut used_p = BTreeSet::new();
        let mut used_t = BTreeSet::new();
        for (k, w) in &self.arcs {
            if !self.positions.contains_key(&k.position) {
                return Err(format!("arc references missing position `{}`", k.position));
            }
            if !self.transitions.contains_key(&k.transition) {
                return Err(format!("arc references missing transition `{}`", k.transition));
            }
            if w.multiplicity == 0 || w.threshold == Some(0) {
                return Err(format!("arc {}-{} has a zero weight", k.position, k.transition));
            }
            used_p.insert(&k.position);
            used_t.insert(&k.transition);
        }
        for p in self.positions.keys() {
            if self.transitions.contains_key(p.as_str()) {
                return Err(format!("`{p}` is both a position and a transition"));
            }
        }
        let degenerate = self.arcs.is_empty() && self.transitions.is_empty() && self.positions.len() <= 1;
        if !degenerate {
            if let Some(p) = self.positions.keys().find(|p| !used_p.contains(p)) {
                return Err(format!("orphan position `{p}`"));
            }
            if let Some(t) = self.transitions.keys().find(|t| !used_t.contains(t)) {
                return Err(format!("orphan transition `{t}`"));
            }
        }
        for (id, t) in &self.transitions {
            if t.speed == 0 || t.delay_counter > t.delay {
                return Err(format!("transition `{id}` has invalid parameters"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(kind: UnitKind, from: &str, to: &str) -> StructuralUnit {
        StructuralUnit::new(kind, from, to).unwrap()
    }

    #[test]
    fn empty_net() {
        let net = PetriNet::new();
        assert_eq!((net.position_count(), net.transition_count(), net.arc_count()), (0, 0, 0));
        assert_eq!(net.total_tokens(), 0);
        assert!(net.labeled_equal(&PetriNet::new()));
    }

    #[test]
    fn c_then_i_forms_a_chain() {
        let mut net = PetriNet::new();
        net.add_unit(&unit(UnitKind::C, "a", "b")).unwrap();
        net.add_unit(&unit(UnitKind::I, "b", "c")).unwrap();
        assert_eq!(net.position_count(), 2);
        assert_eq!(net.transition_count(), 1);
        assert_eq!(net.arc_count(), 2);
        let dirs: Vec<_> = net.arcs().map(|a| (a.position.as_str(), a.direction())).collect();
        assert_eq!(
            dirs,
            vec![
                ("a", Direction::PositionToTransition),
                ("c", Direction::TransitionToPosition)
            ]
        );
    }

    #[test]
    fn duplicate_unit_merges_into_double_arc() {
        let mut net = PetriNet::new();
        let c = unit(UnitKind::C, "a", "b");
        net.add_unit(&c).unwrap();
        net.add_unit(&c).unwrap();
        assert_eq!(net.arc_count(), 1);
        assert_eq!(net.arcs().next().unwrap().multiplicity, 2);
        assert_eq!(net.arcs().next().unwrap().threshold(), 2);
    }

    #[test]
    fn three_separate_units() {
        let net = PetriNet::from_units(&[
            unit(UnitKind::C, "a", "b"),
            unit(UnitKind::C, "c", "d"),
            unit(UnitKind::C, "e", "f"),
        ])
        .unwrap();
        assert_eq!((net.position_count(), net.transition_count(), net.arc_count()), (3, 3, 3));
    }

    #[test]
    fn namespace_clash() {
        let mut net = PetriNet::new();
        assert_eq!(
            net.add_unit(&unit(UnitKind::C, "a", "a")),
            Err(NetError::NamespaceClash("a".into()))
        );
        net.add_unit(&unit(UnitKind::C, "a", "b")).unwrap();
        assert_eq!(
            net.add_unit(&unit(UnitKind::C, "b", "x")),
            Err(NetError::NamespaceClash("b".into()))
        );
        assert!(net.check_invariants().is_ok());
    }

    #[test]
    fn identifiers() {
        assert!(is_valid_identifier("a1_b"));
        assert!(!is_valid_identifier("_a"));
        assert!(!is_valid_identifier("1a"));
        assert!(!is_valid_identifier(""));
        assert!(PositionId::new("p-1").is_err());
    }

    #[test]
    fn multiplicity_changes_equality() {
        let c = unit(UnitKind::C, "a", "b");
        let one = PetriNet::from_units([&c]).unwrap();
        let two = PetriNet::from_units([&c.clone().with_multiplicity(2)]).unwrap();
        assert!(one.labeled_equal(&one));
        assert!(!one.labeled_equal(&two));
    }

    #[test]
    fn total_tokens_sums_markings() {
        let mut net = PetriNet::from_units(&[unit(UnitKind::C, "a", "b"), unit(UnitKind::I, "b", "c")]).unwrap();
        net.set_marking("a", 5).unwrap();
        net.set_marking("c", 2).unwrap();
        assert_eq!(net.total_tokens(), 7);
    }

    #[test]
    fn endpoints_of_chains() {
        let net = PetriNet::from_units(&[unit(UnitKind::C, "a", "b"), unit(UnitKind::I, "b", "c")]).unwrap();
        let cls = net.classify_endpoints();
        assert_eq!(
            cls,
            vec![
                (NodeId::Position(PositionId::new("a").unwrap()), Endpoint::ResourceEntry),
                (NodeId::Position(PositionId::new("c").unwrap()), Endpoint::AccumulativeEnd),
            ]
        );

        let net = PetriNet::from_units(&[unit(UnitKind::I, "b", "c"), unit(UnitKind::C, "c", "d")]).unwrap();
        let cls = net.classify_endpoints();
        assert_eq!(
            cls,
            vec![
                (NodeId::Transition(TransitionId::new("b").unwrap()), Endpoint::ProcessEntry),
                (NodeId::Transition(TransitionId::new("d").unwrap()), Endpoint::StockEnd),
            ]
        );
    }

    #[test]
    fn procreating_a_t_unit_at_the_entry_flips_its_semantics() {
        let mut net = PetriNet::from_units(&[unit(UnitKind::C, "a", "b"), unit(UnitKind::I, "b", "c")]).unwrap();
        net.add_unit(&unit(UnitKind::I, "x", "a")).unwrap();
        let cls = net.classify_endpoints();
        assert!(!cls.iter().any(|(n, _)| n.as_str() == "a"));
        assert!(cls.contains(&(NodeId::Transition(TransitionId::new("x").unwrap()), Endpoint::ProcessEntry)));
    }

    #[test]
    fn gate_arcs_do_not_make_a_consumer() {
        let net = PetriNet::from_units(&[unit(UnitKind::B, "i", "b"), unit(UnitKind::I, "b", "c")]).unwrap();
        let cls = net.classify_endpoints();
        assert!(cls.contains(&(NodeId::Transition(TransitionId::new("b").unwrap()), Endpoint::ProcessEntry)));
        assert!(cls.contains(&(NodeId::Position(PositionId::new("i").unwrap()), Endpoint::ResourceEntry)));
        // the inhibitor counts as a reader of i
        assert!(!cls.contains(&(NodeId::Position(PositionId::new("i").unwrap()), Endpoint::AccumulativeEnd)));
    }

    #[test]
    fn remove_and_prune() {
        let c = unit(UnitKind::C, "a", "b");
        let mut net = PetriNet::from_units(&[c.clone().with_multiplicity(2), unit(UnitKind::I, "b", "e")]).unwrap();
        net.set_marking("e", 3).unwrap();
        net.remove_unit(&c).unwrap();
        assert_eq!(net.arcs().next().unwrap().multiplicity, 1);
        net.remove_unit(&unit(UnitKind::I, "b", "e")).unwrap();
        let gone = net.prune_orphans();
        assert_eq!(gone, vec![(PositionId::new("e").unwrap(), 3)]);
        assert!(net.check_invariants().is_ok());
        assert!(net.remove_unit(&unit(UnitKind::I, "b", "e")).is_err());
    }

    #[test]
    fn threshold_merge_is_order_independent() {
        let a = unit(UnitKind::C, "a", "b").with_threshold(3);
        let b = unit(UnitKind::C, "a", "b").with_threshold(5);
        let c = unit(UnitKind::C, "a", "b");
        let x = PetriNet::from_units([&a, &b, &c]).unwrap();
        let y = PetriNet::from_units([&c, &b, &a]).unwrap();
        assert!(x.labeled_equal(&y));
        assert_eq!(x.arcs().next().unwrap().threshold(), 5);
    }
}
