//! Creative states and structural rewriting.
//!
//! A [`CreativeRule`] pairs a [`Condition`] on the current marking with a
//! structural [`Action`]: spawning a complex of units or removing one. The
//! complex is placed purely by its node names, so no attachment address is
//! needed. Resource accounting is explicit:
//!
//! * spawn: `cost` is withdrawn from existing positions, `init` seeds
//!   positions the complex creates (`Σinit ≤ Σcost`);
//! * remove: tokens of positions left without arcs are destroyed (free),
//!   destroyed after an extra `cost` withdrawal, or moved by a `release`
//!   policy to surviving positions.
//!
//! Every rule is applied to a copy of the net and committed only when it
//! succeeds; a failed rule is skipped and reported as a [`RuleWarning`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::net::{NetError, PetriNet, PositionId, StructuralUnit, TransitionId, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Comparator {
    pub fn holds(self, lhs: u128, rhs: u128) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Eq => "==",
            Comparator::Ge => ">=",
            Comparator::Gt => ">",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Quantity {
    /// `m(p)`: tokens in a position.
    Marking(PositionId),
    /// `v(t)`: speed of a transition.
    Speed(TransitionId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub coefficient: u64,
    pub quantity: Quantity,
}

/// Weighted sum of markings and speeds compared against a constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condition {
    pub terms: Vec<Term>,
    pub comparator: Comparator,
    pub threshold: u64,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            if t.coefficient != 1 {
                write!(f, "{}*", t.coefficient)?;
            }
            match &t.quantity {
                Quantity::Marking(p) => write!(f, "m({p})")?,
                Quantity::Speed(t) => write!(f, "v({t})")?,
            }
        }
        write!(f, " {} {}", self.comparator.symbol(), self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    Spawn(Vec<StructuralUnit>),
    Remove(Vec<StructuralUnit>),
}

impl Action {
    pub fn units(&self) -> &[StructuralUnit] {
        match self {
            Action::Spawn(u) | Action::Remove(u) => u,
        }
    }
}

/// Where the tokens of positions deleted by a removal go.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReleasePolicy {
    /// Everything to one position.
    All(PositionId),
    /// Split by integer weights; floors, remainder to the first target.
    Ratio(Vec<(PositionId, u64)>),
    /// The unique normal-arc input of the removed units' transitions.
    NearestPredecessor,
    /// The unique normal-arc output of the removed units' transitions.
    NearestSuccessor,
}

/// Rule definition errors, reported when a rule is constructed.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("a rule's complex needs at least one unit")]
    EmptyComplex,
    #[error("condition needs at least one term")]
    EmptyCondition,
    #[error("coefficients must be positive")]
    ZeroCoefficient,
    #[error("init exceeds cost: {init} tokens placed but only {cost} withdrawn")]
    InitExceedsCost { init: u64, cost: u64 },
    #[error("init target `{0}` is not a position of the spawned complex")]
    InitTargetNotInComplex(String),
    #[error("`release` only applies to remove rules")]
    ReleaseOnSpawn,
    #[error("`init` only applies to spawn rules")]
    InitOnRemove,
    #[error("a remove rule takes either `cost` or `release`, not both")]
    CostAndRelease,
    #[error("`{0}` is listed twice")]
    DuplicateTarget(String),
    #[error("release weights must be positive")]
    ZeroWeight,
    #[error(transparent)]
    Structure(#[from] NetError),
}

/// Why an otherwise triggered rule could not be applied.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleSkip {
    #[error("condition references missing node `{0}`")]
    MissingNode(String),
    #[error("position `{position}` holds {available} tokens, {needed} needed")]
    InsufficientTokens {
        position: String,
        needed: u64,
        available: u64,
    },
    #[error("init target `{0}` already exists in the net")]
    InitTargetExists(String),
    #[error("release target `{0}` does not survive the removal")]
    ReleaseTargetMissing(String),
    #[error("nearest neighbour is ambiguous: {0} candidates")]
    AmbiguousNeighbour(usize),
    #[error(transparent)]
    Structure(#[from] NetError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreativeRule {
    condition: Condition,
    action: Action,
    cost: Vec<(PositionId, u64)>,
    init: Vec<(PositionId, u64)>,
    release: Option<ReleasePolicy>,
}

impl CreativeRule {
    pub fn new(
        condition: Condition,
        action: Action,
        cost: Vec<(PositionId, u64)>,
        init: Vec<(PositionId, u64)>,
        release: Option<ReleasePolicy>,
    ) -> Result<Self, RuleError> {
        if condition.terms.is_empty() {
            return Err(RuleError::EmptyCondition);
        }
        if condition.terms.iter().any(|t| t.coefficient == 0) {
            return Err(RuleError::ZeroCoefficient);
        }
        if action.units().is_empty() {
            return Err(RuleError::EmptyComplex);
        }
        // the complex must be a well-formed net on its own
        PetriNet::from_units(action.units())?;
        no_duplicates(&cost)?;
        no_duplicates(&init)?;
        match &action {
            Action::Spawn(units) => {
                if release.is_some() {
                    return Err(RuleError::ReleaseOnSpawn);
                }
                let (c, i) = (sum(&cost), sum(&init));
                if i > c {
                    return Err(RuleError::InitExceedsCost { init: i, cost: c });
                }
                for (p, _) in &init {
                    if !units.iter().any(|u| &u.position == p) {
                        return Err(RuleError::InitTargetNotInComplex(p.to_string()));
                    }
                }
            }
            Action::Remove(_) => {
                if !init.is_empty() {
                    return Err(RuleError::InitOnRemove);
                }
                if !cost.is_empty() && release.is_some() {
                    return Err(RuleError::CostAndRelease);
                }
                if let Some(ReleasePolicy::Ratio(targets)) = &release {
                    no_duplicates(targets)?;
                    if targets.is_empty() || targets.iter().any(|(_, w)| *w == 0) {
                        return Err(RuleError::ZeroWeight);
                    }
                }
            }
        }
        Ok(Self {
            condition,
            action,
            cost,
            init,
            release,
        })
    }

    /// A resource-free spawn.
    pub fn spawn(condition: Condition, units: Vec<StructuralUnit>) -> Result<Self, RuleError> {
        Self::new(condition, Action::Spawn(units), Vec::new(), Vec::new(), None)
    }

    /// A removal that simply destroys the tokens of deleted positions.
    pub fn remove(condition: Condition, units: Vec<StructuralUnit>) -> Result<Self, RuleError> {
        Self::new(condition, Action::Remove(units), Vec::new(), Vec::new(), None)
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn cost(&self) -> &[(PositionId, u64)] {
        &self.cost
    }

    pub fn init(&self) -> &[(PositionId, u64)] {
        &self.init
    }

    pub fn release(&self) -> Option<&ReleasePolicy> {
        self.release.as_ref()
    }

    pub fn is_resource_free(&self) -> bool {
        self.cost.is_empty() && self.init.is_empty() && self.release.is_none()
    }
}

fn sum(alloc: &[(PositionId, u64)]) -> u64 {
    alloc.iter().map(|(_, n)| n).sum()
}

fn no_duplicates(alloc: &[(PositionId, u64)]) -> Result<(), RuleError> {
    let mut seen = BTreeSet::new();
    for (p, _) in alloc {
        if !seen.insert(p) {
            return Err(RuleError::DuplicateTarget(p.to_string()));
        }
    }
    Ok(())
}

pub fn eval_condition(c: &Condition, net: &PetriNet) -> Result<bool, RuleSkip> {
    let mut total: u128 = 0;
    for t in &c.terms {
        let value = match &t.quantity {
            Quantity::Marking(p) => net
                .marking(p.as_str())
                .ok_or_else(|| RuleSkip::MissingNode(p.to_string()))?,
            Quantity::Speed(tr) => net
                .transition(tr.as_str())
                .ok_or_else(|| RuleSkip::MissingNode(tr.to_string()))?
                .speed() as u64,
        };
        total += t.coefficient as u128 * value as u128;
    }
    Ok(c.comparator.holds(total, c.threshold as u128))
}

fn withdraw(net: &mut PetriNet, alloc: &[(PositionId, u64)]) -> Result<(), RuleSkip> {
    for (p, amount) in alloc {
        let available = net
            .marking(p.as_str())
            .ok_or_else(|| RuleSkip::Structure(NetError::UnknownNode(p.to_string())))?;
        if !net.take_tokens(p.as_str(), *amount)? {
            return Err(RuleSkip::InsufficientTokens {
                position: p.to_string(),
                needed: *amount,
                available,
            });
        }
    }
    Ok(())
}

/// Procreation: withdraws the cost, adds the complex, seeds the new positions.
pub fn apply_spawn(net: &PetriNet, rule: &CreativeRule) -> Result<PetriNet, RuleSkip> {
    let Action::Spawn(units) = &rule.action else {
        return Ok(net.clone());
    };
    let mut next = net.clone();
    withdraw(&mut next, &rule.cost)?;
    for (p, _) in &rule.init {
        if net.has_position(p.as_str()) {
            return Err(RuleSkip::InitTargetExists(p.to_string()));
        }
    }
    for u in units {
        next.add_unit(u)?;
    }
    for (p, amount) in &rule.init {
        next.add_tokens(p.as_str(), *amount)?;
    }
    Ok(next)
}

/// Deletion: lowers the complex's arcs, drops nodes left without arcs and
/// settles the tokens of the dropped positions per the rule's option.
pub fn apply_remove(net: &PetriNet, rule: &CreativeRule) -> Result<PetriNet, RuleSkip> {
    let Action::Remove(units) = &rule.action else {
        return Ok(net.clone());
    };
    let mut next = net.clone();
    for u in units {
        next.remove_unit(u)?;
    }
    let dropped = next.prune_orphans();
    let pool: u64 = dropped.iter().map(|(_, m)| m).sum();

    if !rule.cost.is_empty() {
        withdraw(&mut next, &rule.cost)?;
    }
    match &rule.release {
        None => {}
        Some(ReleasePolicy::All(target)) => deposit(&mut next, target, pool)?,
        Some(ReleasePolicy::Ratio(targets)) => {
            for (p, _) in targets {
                if !next.has_position(p.as_str()) {
                    return Err(RuleSkip::ReleaseTargetMissing(p.to_string()));
                }
            }
            for (p, share) in split_by_ratio(pool, targets).into_iter().zip(targets).map(|(s, (p, _))| (p, s)) {
                next.add_tokens(p.as_str(), share)?;
            }
        }
        Some(policy @ (ReleasePolicy::NearestPredecessor | ReleasePolicy::NearestSuccessor)) => {
            let successor = matches!(policy, ReleasePolicy::NearestSuccessor);
            let target = nearest_neighbour(net, &next, units, successor)?;
            deposit(&mut next, &target, pool)?;
        }
    }
    Ok(next)
}

fn deposit(net: &mut PetriNet, target: &PositionId, amount: u64) -> Result<(), RuleSkip> {
    if !net.has_position(target.as_str()) {
        return Err(RuleSkip::ReleaseTargetMissing(target.to_string()));
    }
    net.add_tokens(target.as_str(), amount)?;
    Ok(())
}

/// Integer split of `pool` by weights: floor each share, remainder to the
/// first target.
pub fn split_by_ratio(pool: u64, targets: &[(PositionId, u64)]) -> Vec<u64> {
    let total: u128 = targets.iter().map(|(_, w)| *w as u128).sum();
    if total == 0 {
        return vec![0; targets.len()];
    }
    let mut shares: Vec<u64> = targets
        .iter()
        .map(|(_, w)| (pool as u128 * *w as u128 / total) as u64)
        .collect();
    let given: u64 = shares.iter().sum();
    if let Some(first) = shares.first_mut() {
        *first += pool - given;
    }
    shares
}

// Candidates are found in the net before removal, through the transitions
// of the removed units, and must still exist afterwards.
fn nearest_neighbour(
    before: &PetriNet,
    after: &PetriNet,
    units: &[StructuralUnit],
    successor: bool,
) -> Result<PositionId, RuleSkip> {
    let wanted = if successor { UnitKind::I } else { UnitKind::C };
    let transitions: BTreeSet<&str> = units.iter().map(|u| u.transition.as_str()).collect();
    let candidates: BTreeSet<&PositionId> = before
        .arcs()
        .filter(|a| a.kind == wanted && transitions.contains(a.transition.as_str()))
        .map(|a| a.position)
        .filter(|p| after.has_position(p.as_str()))
        .collect();
    if candidates.len() != 1 {
        return Err(RuleSkip::AmbiguousNeighbour(candidates.len()));
    }
    Ok(candidates.into_iter().next().unwrap().clone())
}

/// Applies whichever action the rule carries.
pub fn apply_rule(net: &PetriNet, rule: &CreativeRule) -> Result<PetriNet, RuleSkip> {
    match rule.action {
        Action::Spawn(_) => apply_spawn(net, rule),
        Action::Remove(_) => apply_remove(net, rule),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleWarning {
    pub rule: usize,
    pub message: String,
}

/// What one creative phase did.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PhaseOutcome {
    /// Indices of the rules that fired and were applied.
    pub triggered: Vec<usize>,
    pub spawned: Vec<StructuralUnit>,
    pub removed: Vec<StructuralUnit>,
    /// Names of every node the rewrites touched; excluded from firing in
    /// the same greedy step.
    pub frozen: BTreeSet<String>,
    pub warnings: Vec<RuleWarning>,
}

impl PhaseOutcome {
    pub fn changed(&self) -> bool {
        !self.triggered.is_empty()
    }
}

/// Evaluates the rules in declaration order. Each rule sees the net as
/// left by the rules before it.
pub fn creative_phase(net: &mut PetriNet, rules: &[CreativeRule]) -> PhaseOutcome {
    let mut out = PhaseOutcome::default();
    for (i, rule) in rules.iter().enumerate() {
        let applied = eval_condition(&rule.condition, net).and_then(|fire| {
            if fire {
                apply_rule(net, rule).map(Some)
            } else {
                Ok(None)
            }
        });
        match applied {
            Ok(None) => {}
            Ok(Some(next)) => {
                *net = next;
                out.triggered.push(i);
                let units = rule.action.units();
                for u in units {
                    out.frozen.insert(u.position.to_string());
                    out.frozen.insert(u.transition.to_string());
                }
                match rule.action {
                    Action::Spawn(_) => out.spawned.extend_from_slice(units),
                    Action::Remove(_) => out.removed.extend_from_slice(units),
                }
            }
            Err(e) => out.warnings.push(RuleWarning {
                rule: i,
                message: e.to_string(),
            }),
        }
    }
    out
}
