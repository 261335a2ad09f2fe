//! Seeded generators, a brute-force firing oracle and the property checks
//! shared by the test suites and `cpn selftest`.
//!
//! Every check returns `Err(description)` on the first violation so callers
//! can collect counterexamples instead of panicking.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{build, compose_units, defuse};
use crate::creative::{
    apply_rule, creative_phase, eval_condition, Action, Comparator, Condition, CreativeRule, Quantity, ReleasePolicy,
    Term,
};
use crate::dynamics::step_fire;
use crate::net::{PetriNet, PositionId, StructuralUnit, TransitionId, UnitKind};
use crate::textio::{parse_net, render_canonical};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Size limits for [`random_net`].
#[derive(Debug, Clone, Copy)]
pub struct NetShape {
    pub positions: usize,
    pub transitions: usize,
    pub max_units: usize,
    pub max_multiplicity: u32,
    pub max_marking: u64,
    /// Allow explicit thresholds, speeds above 1 and delays.
    pub parameters: bool,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            positions: 6,
            transitions: 6,
            max_units: 10,
            max_multiplicity: 2,
            max_marking: 9,
            parameters: true,
        }
    }
}

fn pos(i: usize) -> String {
    format!("p{i}")
}

fn tr(i: usize) -> String {
    format!("t{i}")
}

fn random_unit(rng: &mut impl Rng, positions: usize, transitions: usize, shape: &NetShape) -> StructuralUnit {
    let kind = *UnitKind::ALL.choose(rng).unwrap();
    let p = pos(rng.gen_range(0..positions));
    let t = tr(rng.gen_range(0..transitions));
    let (from, to) = match kind {
        UnitKind::I => (t, p),
        _ => (p, t),
    };
    let mut u = StructuralUnit::new(kind, &from, &to)
        .expect("generated names are identifiers")
        .with_multiplicity(rng.gen_range(1..=shape.max_multiplicity));
    if shape.parameters && kind != UnitKind::I && rng.gen_bool(0.25) {
        u = u.with_threshold(rng.gen_range(1..=4));
    }
    u
}

/// A random non-empty net within `shape`. Node names are `p0..` and `t0..`,
/// so no two nodes can clash.
pub fn random_net(rng: &mut impl Rng, shape: &NetShape) -> PetriNet {
    let mut net = PetriNet::new();
    let count = rng.gen_range(1..=shape.max_units);
    for _ in 0..count {
        let u = random_unit(rng, shape.positions, shape.transitions, shape);
        // keep multiplicities within bounds by never merging
        if net.arcs().any(|a| a.to_unit().same_arc(&u)) {
            continue;
        }
        net.add_unit(&u).expect("fresh arc between distinct namespaces");
    }
    let ps: Vec<String> = net.positions().map(|(p, _)| p.to_string()).collect();
    for p in ps {
        net.set_marking(&p, rng.gen_range(0..=shape.max_marking)).unwrap();
    }
    if shape.parameters {
        let ts: Vec<String> = net.transitions().map(|(t, _)| t.to_string()).collect();
        for t in ts {
            if rng.gen_bool(0.2) {
                net.set_speed(&t, rng.gen_range(2..=3)).unwrap();
            }
            if rng.gen_bool(0.2) {
                net.set_delay(&t, rng.gen_range(1..=2)).unwrap();
            }
        }
    }
    net
}

/// Flavour of a random creative scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioClass {
    /// No cost, init or release; removals only touch unmarked positions.
    ResourceFree,
    /// Spawns with cost and init, removals with cost.
    Intensive,
    /// Removals with release policies, plus spawns paying cost.
    Release,
}

impl ScenarioClass {
    pub const ALL: [ScenarioClass; 3] = [ScenarioClass::ResourceFree, ScenarioClass::Intensive, ScenarioClass::Release];
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub class: ScenarioClass,
    pub net: PetriNet,
    pub rules: Vec<CreativeRule>,
}

// Half the conditions are made to hold on `net` so that phases do work.
fn random_condition(rng: &mut impl Rng, positions: usize, net: &PetriNet) -> Condition {
    let terms: Vec<Term> = (0..rng.gen_range(1..=2))
        .map(|_| Term {
            coefficient: rng.gen_range(1..=2),
            quantity: Quantity::Marking(PositionId::new(pos(rng.gen_range(0..positions))).unwrap()),
        })
        .collect();
    let comparator = *[Comparator::Lt, Comparator::Le, Comparator::Eq, Comparator::Ge, Comparator::Gt]
        .choose(rng)
        .unwrap();
    let value: u64 = terms
        .iter()
        .map(|t| match &t.quantity {
            Quantity::Marking(p) => t.coefficient * net.marking(p.as_str()).unwrap_or(0),
            Quantity::Speed(_) => unreachable!(),
        })
        .sum();
    let threshold = if rng.gen_bool(0.5) {
        match comparator {
            Comparator::Lt => value + rng.gen_range(1..=3),
            Comparator::Le => value + rng.gen_range(0..=3),
            Comparator::Eq => value,
            Comparator::Ge => rng.gen_range(0..=value),
            Comparator::Gt if value > 0 => rng.gen_range(0..value),
            Comparator::Gt => 0,
        }
    } else {
        rng.gen_range(0..=12)
    };
    Condition {
        terms,
        comparator,
        threshold,
    }
}

fn random_complex(rng: &mut impl Rng, shape: &NetShape) -> Vec<StructuralUnit> {
    // two spare names on each side so spawns can introduce new nodes
    loop {
        let n = rng.gen_range(1..=3);
        let units: Vec<StructuralUnit> = (0..n)
            .map(|_| random_unit(rng, shape.positions + 2, shape.transitions + 2, shape))
            .collect();
        if PetriNet::from_units(&units).is_ok() {
            return units;
        }
    }
}

fn random_alloc(rng: &mut impl Rng, candidates: &[PositionId], max_total: u64) -> Vec<(PositionId, u64)> {
    let mut pool: Vec<&PositionId> = candidates.iter().collect();
    pool.shuffle(rng);
    let mut left = max_total;
    let mut out = Vec::new();
    for p in pool.into_iter().take(rng.gen_range(1..=2)) {
        if left == 0 {
            break;
        }
        let n = rng.gen_range(1..=left.min(3));
        left -= n;
        out.push((p.clone(), n));
    }
    out
}

fn existing_units(net: &PetriNet, rng: &mut impl Rng) -> Vec<StructuralUnit> {
    let mut units = net.units();
    units.shuffle(rng);
    units.truncate(rng.gen_range(1..=2));
    for u in &mut units {
        // removing part of a multiplicity exercises the decrement rule
        if u.multiplicity > 1 && rng.gen_bool(0.5) {
            u.multiplicity = 1;
        }
        u.threshold = None;
    }
    units
}

fn unmarked_removal(net: &PetriNet, rng: &mut impl Rng) -> Option<Vec<StructuralUnit>> {
    let mut units: Vec<StructuralUnit> = net
        .units()
        .into_iter()
        .filter(|u| net.marking(u.position.as_str()) == Some(0))
        .collect();
    if units.is_empty() {
        return None;
    }
    units.shuffle(rng);
    units.truncate(1);
    units[0].threshold = None;
    Some(units)
}

/// A random net with one to three rules of the given class.
pub fn random_scenario(rng: &mut impl Rng, class: ScenarioClass) -> Scenario {
    let shape = NetShape::default();
    let net = random_net(rng, &shape);
    let all_positions: Vec<PositionId> = net.positions().map(|(p, _)| p.clone()).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(1..=3) {
        let cond = random_condition(rng, shape.positions, &net);
        let rule = match class {
            ScenarioClass::ResourceFree => match rng.gen_bool(0.5).then(|| unmarked_removal(&net, rng)).flatten() {
                Some(units) => CreativeRule::remove(cond, units),
                None => CreativeRule::spawn(cond, random_complex(rng, &shape)),
            },
            ScenarioClass::Intensive => match rng.gen_bool(0.4).then(|| unmarked_removal(&net, rng)).flatten() {
                Some(units) => {
                    let cost = random_alloc(rng, &all_positions, 4);
                    CreativeRule::new(cond, Action::Remove(units), cost, Vec::new(), None)
                }
                None => {
                    let units = random_complex(rng, &shape);
                    let cost = random_alloc(rng, &all_positions, 5);
                    let fresh: Vec<PositionId> = units
                        .iter()
                        .map(|u| u.position.clone())
                        .filter(|p| !net.has_position(p.as_str()))
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    let budget: u64 = cost.iter().map(|(_, n)| n).sum();
                    let init = if fresh.is_empty() || budget == 0 {
                        Vec::new()
                    } else {
                        random_alloc(rng, &fresh, budget)
                    };
                    CreativeRule::new(cond, Action::Spawn(units), cost, init, None)
                }
            },
            ScenarioClass::Release => {
                if rng.gen_bool(0.3) {
                    let units = random_complex(rng, &shape);
                    let cost = random_alloc(rng, &all_positions, 3);
                    CreativeRule::new(cond, Action::Spawn(units), cost, Vec::new(), None)
                } else {
                    let units = existing_units(&net, rng);
                    let policy = match rng.gen_range(0..4) {
                        0 => ReleasePolicy::All(all_positions.choose(rng).unwrap().clone()),
                        1 => ReleasePolicy::Ratio(
                            random_alloc(rng, &all_positions, 6)
                                .into_iter()
                                .map(|(p, w)| (p, w.max(1)))
                                .collect(),
                        ),
                        2 => ReleasePolicy::NearestPredecessor,
                        _ => ReleasePolicy::NearestSuccessor,
                    };
                    CreativeRule::new(cond, Action::Remove(units), Vec::new(), Vec::new(), Some(policy))
                }
            }
        };
        rules.push(rule.expect("generator builds valid rules"));
    }
    Scenario { class, net, rules }
}

/// Parsing the canonical rendering gives back the same net and rules.
pub fn check_render_roundtrip(net: &PetriNet, rules: &[CreativeRule]) -> Result<(), String> {
    let text = render_canonical(net, rules);
    let parsed = parse_net(&text).map_err(|d| format!("rendering does not parse: {d:?}\n{text}"))?;
    if &parsed.net != net {
        return Err(format!("net changed through render/parse:\n{text}"));
    }
    if parsed.rules != rules {
        return Err(format!("rules changed through render/parse:\n{text}"));
    }
    if render_canonical(&parsed.net, &parsed.rules) != text {
        return Err(format!("rendering is not a fixed point:\n{text}"));
    }
    Ok(())
}

/// Full and partial defusion followed by recomposition restore the net,
/// and rebuilding the composition formula of the units restores its
/// structure.
pub fn check_defuse_roundtrip(net: &PetriNet) -> Result<(), String> {
    let full = defuse(net, None).map_err(|e| e.to_string())?;
    let back = full.recompose().map_err(|e| format!("recompose after full defusion: {e}"))?;
    if &back != net {
        return Err("full defusion does not recompose to the original".into());
    }
    let units: Vec<StructuralUnit> = full.units().cloned().collect();
    if !units.is_empty() {
        let built = build(&compose_units(&units)).map_err(|e| format!("build: {e}"))?;
        if built.units() != net.units() {
            return Err("formula of the defused units builds a different structure".into());
        }
    }
    let nodes: Vec<String> = net
        .positions()
        .map(|(p, _)| p.to_string())
        .chain(net.transitions().map(|(t, _)| t.to_string()))
        .collect();
    for at in nodes {
        let part = defuse(net, Some(&at)).map_err(|e| e.to_string())?;
        if part.units().any(|u| u.pre() != at) {
            return Err(format!("partial defusion at `{at}` split a unit not leaving `{at}`"));
        }
        let back = part.recompose().map_err(|e| format!("recompose at `{at}`: {e}"))?;
        if &back != net {
            return Err(format!("partial defusion at `{at}` does not recompose"));
        }
    }
    Ok(())
}

fn sum(alloc: &[(PositionId, u64)]) -> u64 {
    alloc.iter().map(|(_, n)| n).sum()
}

/// Runs one creative phase and checks its token accounting for the class,
/// rule by rule and in total, plus structural soundness afterwards.
/// `Ok(true)` means at least one rule was applied.
pub fn check_conservation(s: &Scenario) -> Result<bool, String> {
    let mut stepped = s.net.clone();
    let mut expected_total = s.net.total_tokens() as i128;
    for (i, rule) in s.rules.iter().enumerate() {
        if !eval_condition(rule.condition(), &stepped).unwrap_or(false) {
            continue;
        }
        let Ok(next) = apply_rule(&stepped, rule) else { continue };
        let before = stepped.total_tokens() as i128;
        let after = next.total_tokens() as i128;
        let destroyed: u64 = match rule.action() {
            Action::Remove(_) => stepped
                .positions()
                .filter(|(p, _)| !next.has_position(p.as_str()))
                .map(|(_, m)| m)
                .sum(),
            Action::Spawn(_) => 0,
        };
        let want = match (rule.action(), rule.release()) {
            (Action::Spawn(_), _) => before - sum(rule.cost()) as i128 + sum(rule.init()) as i128,
            (Action::Remove(_), Some(_)) => before,
            (Action::Remove(_), None) => before - sum(rule.cost()) as i128 - destroyed as i128,
        };
        if after != want {
            return Err(format!("rule {i}: total went {before} -> {after}, expected {want}"));
        }
        if s.class != ScenarioClass::Release && destroyed != 0 {
            return Err(format!("rule {i}: destroyed {destroyed} tokens in a {:?} scenario", s.class));
        }
        if rule.release().is_some() && after > before {
            return Err(format!("rule {i}: release created tokens"));
        }
        expected_total = want - before + expected_total;
        stepped = next;
    }

    let mut net = s.net.clone();
    let outcome = creative_phase(&mut net, &s.rules);
    if net != stepped {
        return Err("creative phase disagrees with applying the rules one by one".into());
    }
    let total = net.total_tokens() as i128;
    let start = s.net.total_tokens() as i128;
    let applied = || outcome.triggered.iter().map(|&i| &s.rules[i]);
    let formula = match s.class {
        ScenarioClass::ResourceFree => start,
        ScenarioClass::Intensive => {
            start - applied().map(|r| sum(r.cost()) as i128).sum::<i128>()
                + applied().map(|r| sum(r.init()) as i128).sum::<i128>()
        }
        ScenarioClass::Release => {
            start
                - applied()
                    .filter(|r| matches!(r.action(), Action::Spawn(_)))
                    .map(|r| sum(r.cost()) as i128)
                    .sum::<i128>()
        }
    };
    if total != formula || total != expected_total {
        return Err(format!("{:?}: total {start} -> {total}, expected {formula}", s.class));
    }
    net.check_invariants()?;
    Ok(!outcome.triggered.is_empty())
}

/// Result of one brute-force firing step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleStep {
    pub fired: BTreeSet<String>,
    pub marking: BTreeMap<String, u64>,
}

const MAX_ORACLE_POSITIONS: usize = 16;

struct OracleArc {
    position: usize,
    kind: UnitKind,
    weight: u64,
    threshold: u64,
}

/// Reference semantics for one step of a net with unit speeds and no
/// delays, computed by enumerating every subset of transitions.
///
/// A set is feasible when its members, taken in ascending id order, are
/// each enabled on what the earlier members left; production lands after
/// the whole set has fired. Among the feasible sets that no further
/// transition can join, the one preferring lower ids is chosen.
pub struct FiringOracle {
    positions: Vec<String>,
    transitions: Vec<(String, Vec<OracleArc>)>,
}

impl FiringOracle {
    /// Compiles the structure of `net`; markings are supplied per query.
    pub fn new(net: &PetriNet) -> Self {
        let positions: Vec<String> = net.positions().map(|(p, _)| p.to_string()).collect();
        let index: BTreeMap<&str, usize> = positions.iter().enumerate().map(|(i, p)| (p.as_str(), i)).collect();
        let transitions: Vec<(String, Vec<OracleArc>)> = net
            .transitions()
            .map(|(t, params)| {
                assert!(params.speed() == 1 && params.delay() == 0, "oracle needs v=1, d=0");
                let arcs = net
                    .arcs_of_transition(t.as_str())
                    .map(|a| OracleArc {
                        position: index[a.position.as_str()],
                        kind: a.kind,
                        weight: a.multiplicity as u64,
                        threshold: a.explicit_threshold.unwrap_or(a.multiplicity) as u64,
                    })
                    .collect();
                (t.to_string(), arcs)
            })
            .collect();
        assert!(transitions.len() < 16, "oracle enumerates 2^n subsets");
        assert!(positions.len() <= MAX_ORACLE_POSITIONS, "oracle supports up to {MAX_ORACLE_POSITIONS} positions");
        Self { positions, transitions }
    }

    fn enabled(arcs: &[OracleArc], m: &[u64]) -> bool {
        arcs.iter().all(|a| {
            let have = m[a.position];
            match a.kind {
                UnitKind::C => have >= a.weight && have >= a.threshold,
                UnitKind::A => have >= a.threshold,
                UnitKind::B => have < a.threshold,
                UnitKind::I => true,
            }
        })
    }

    // marking after firing `set`, or None if infeasible
    fn play(&self, start: &[u64], set: u32) -> Option<[u64; MAX_ORACLE_POSITIONS]> {
        let mut m = [0u64; MAX_ORACLE_POSITIONS];
        m[..start.len()].copy_from_slice(start);
        let mut produced = [0u64; MAX_ORACLE_POSITIONS];
        for (i, (_, arcs)) in self.transitions.iter().enumerate() {
            if set & (1 << i) == 0 {
                continue;
            }
            if !Self::enabled(arcs, &m) {
                return None;
            }
            for a in arcs {
                match a.kind {
                    UnitKind::C => m[a.position] -= a.weight,
                    UnitKind::I => produced[a.position] += a.weight,
                    _ => {}
                }
            }
        }
        for (a, b) in m.iter_mut().zip(produced) {
            *a += b;
        }
        Some(m)
    }

    /// Bit set of the chosen transitions (bit i is the i-th lowest id) and
    /// the resulting marking, both in id order.
    pub fn step(&self, marking: &[u64]) -> (u32, Vec<u64>) {
        let n = self.transitions.len();
        let all = 1u32 << n;
        let mut feasible = vec![false; all as usize];
        for s in 0..all {
            feasible[s as usize] = self.play(marking, s).is_some();
        }
        let maximal = |s: u32| (0..n).all(|i| s & (1 << i) != 0 || !feasible[(s | (1 << i)) as usize]);
        // preferring low ids means comparing the bit strings reversed
        let best = (0..all)
            .filter(|&s| feasible[s as usize] && maximal(s))
            .max_by_key(|&s| s.reverse_bits())
            .expect("the empty set is feasible, so some maximal set exists");
        let m = self.play(marking, best).unwrap();
        (best, m[..marking.len()].to_vec())
    }

    pub fn transition_names(&self) -> impl Iterator<Item = &str> {
        self.transitions.iter().map(|(t, _)| t.as_str())
    }
}

pub fn oracle_step(net: &PetriNet) -> OracleStep {
    let oracle = FiringOracle::new(net);
    let start: Vec<u64> = net.positions().map(|(_, m)| m).collect();
    let (set, marking) = oracle.step(&start);
    OracleStep {
        fired: oracle
            .transition_names()
            .enumerate()
            .filter(|(i, _)| set & (1 << i) != 0)
            .map(|(_, t)| t.to_string())
            .collect(),
        marking: oracle.positions.iter().cloned().zip(marking).collect(),
    }
}

/// One engine step without rules agrees with [`oracle_step`].
pub fn check_firing(net: &PetriNet) -> Result<(), String> {
    let expected = oracle_step(net);
    let mut engine = net.clone();
    let fired = step_fire(&mut engine, &BTreeSet::new());
    if fired.values().any(|&n| n != 1) {
        return Err(format!("a unit-speed transition fired more than once: {fired:?}"));
    }
    let got_fired: BTreeSet<String> = fired.keys().map(|t| t.to_string()).collect();
    let got_marking: BTreeMap<String, u64> = engine.positions().map(|(p, m)| (p.to_string(), m)).collect();
    if got_fired != expected.fired || got_marking != expected.marking {
        return Err(format!(
            "engine fired {got_fired:?} -> {got_marking:?}, oracle fired {:?} -> {:?}",
            expected.fired, expected.marking
        ));
    }
    Ok(())
}

/// Checks the engine against the oracle on `net` under every marking with
/// entries in `0..=max`, calling `record` once per marking with whether
/// anything fired.
pub fn check_firing_all_markings(net: &PetriNet, max: u64, mut record: impl FnMut(Result<bool, String>)) {
    let oracle = FiringOracle::new(net);
    let names: Vec<String> = net.positions().map(|(p, _)| p.to_string()).collect();
    let transitions: Vec<&str> = oracle.transition_names().collect();
    let mut work = net.clone();
    for_each_digits(names.len(), max, |digits| {
        for (p, &m) in names.iter().zip(digits) {
            work.set_marking(p, m).unwrap();
        }
        let (set, want) = oracle.step(digits);
        let fired = step_fire(&mut work, &BTreeSet::new());
        let got: Vec<u64> = work.positions().map(|(_, m)| m).collect();
        let same_set = fired.len() == set.count_ones() as usize
            && fired.iter().all(|(t, &n)| {
                n == 1 && transitions.iter().position(|x| *x == t.as_str()).is_some_and(|i| set & (1 << i) != 0)
            });
        record(if same_set && got == want {
            Ok(set != 0)
        } else {
            Err(format!(
                "marking {digits:?} on {}: engine fired {fired:?} -> {got:?}, oracle chose {set:#b} -> {want:?}",
                crate::textio::render_net(net)
            ))
        });
    });
}

fn for_each_digits(len: usize, max: u64, mut f: impl FnMut(&[u64])) {
    let mut digits = vec![0u64; len];
    loop {
        f(&digits);
        let mut i = 0;
        loop {
            if i == digits.len() {
                return;
            }
            digits[i] += 1;
            if digits[i] <= max {
                break;
            }
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Ways a position and a transition can be connected in the enumeration.
const PAIR_KINDS: [&[UnitKind]; 6] = [
    &[],
    &[UnitKind::C],
    &[UnitKind::I],
    &[UnitKind::B],
    &[UnitKind::A],
    &[UnitKind::C, UnitKind::I],
];

fn structure(positions: usize, choice: &[usize]) -> Option<PetriNet> {
    let mut net = PetriNet::new();
    for (slot, &k) in choice.iter().enumerate() {
        let p = PositionId::new(pos(slot % positions)).unwrap();
        let t = TransitionId::new(tr(slot / positions)).unwrap();
        for &kind in PAIR_KINDS[k] {
            net.add_unit(&StructuralUnit {
                position: p.clone(),
                transition: t.clone(),
                kind,
                multiplicity: 1,
                threshold: None,
            })
            .unwrap();
        }
    }
    (!net.is_empty()).then_some(net)
}

/// Calls `f` with the net under every marking whose entries are `0..=max`.
pub fn for_each_marking(net: &PetriNet, max: u64, mut f: impl FnMut(&PetriNet)) {
    let ps: Vec<String> = net.positions().map(|(p, _)| p.to_string()).collect();
    let mut current = net.clone();
    for_each_digits(ps.len(), max, |digits| {
        for (p, &m) in ps.iter().zip(digits) {
            current.set_marking(p, m).unwrap();
        }
        f(&current);
    });
}

/// Every structure on three transitions and two positions built from
/// [`PAIR_KINDS`], up to renaming the two positions (which cannot change
/// any firing decision, since only transition ids set the order).
pub fn exhaustive_structures() -> impl Iterator<Item = PetriNet> {
    let slots = 6;
    let total = PAIR_KINDS.len().pow(slots as u32);
    (0..total).filter_map(move |mut code| {
        let choice: Vec<usize> = (0..slots)
            .map(|_| {
                let d = code % PAIR_KINDS.len();
                code /= PAIR_KINDS.len();
                d
            })
            .collect();
        let swapped: Vec<usize> = choice.chunks(2).flat_map(|c| [c[1], c[0]]).collect();
        if swapped < choice {
            return None;
        }
        structure(2, &choice)
    })
}

/// Random structures on three transitions and four positions, with
/// multiplicities up to 2 and occasional explicit thresholds.
pub fn sampled_structures(rng: &mut impl Rng, count: usize) -> Vec<PetriNet> {
    let shape = NetShape {
        positions: 4,
        transitions: 3,
        max_units: 9,
        max_multiplicity: 2,
        max_marking: 5,
        parameters: false,
    };
    (0..count)
        .map(|_| {
            let mut net = random_net(rng, &shape);
            let units: Vec<StructuralUnit> = net.units();
            for u in units {
                if u.kind != UnitKind::I && rng.gen_bool(0.2) {
                    net.remove_unit(&u).unwrap();
                    net.add_unit(&u.clone().with_threshold(rng.gen_range(1..=4))).unwrap();
                }
            }
            net
        })
        .collect()
}

/// Outcome of one property suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    /// Cases that did more than pass vacuously: nets with rules, phases
    /// that applied a rule, steps that fired something.
    pub exercised: usize,
    /// Total number of failing cases; only the first few are kept below.
    pub failed: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            exercised: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, r: Result<bool, String>) {
        self.cases += 1;
        match r {
            Ok(exercised) => self.exercised += exercised as usize,
            Err(e) => {
                self.failed += 1;
                if self.failures.len() < 10 {
                    self.failures.push(e);
                }
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn roundtrip_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("round-trip");
    let mut rng = rng(seed);
    for _ in 0..cases {
        let net = random_net(&mut rng, &NetShape::default());
        let rules = if rng.gen_bool(0.5) {
            let class = *ScenarioClass::ALL.choose(&mut rng).unwrap();
            random_scenario(&mut rng, class).rules
        } else {
            Vec::new()
        };
        let has_rules = !rules.is_empty();
        rep.record(
            check_render_roundtrip(&net, &rules)
                .and_then(|_| check_defuse_roundtrip(&net))
                .map(|_| has_rules),
        );
    }
    rep
}

pub fn conservation_suite(cases: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("conservation");
    let mut rng = rng(seed);
    for i in 0..cases {
        let class = ScenarioClass::ALL[i % 3];
        rep.record(check_conservation(&random_scenario(&mut rng, class)));
    }
    rep
}

/// Exhaustive 3x2 structures under all markings up to 5, plus `sampled`
/// random 3x4 structures under all markings up to 5.
pub fn firing_suite(sampled: usize, seed: u64) -> SuiteReport {
    let mut rep = SuiteReport::new("firing oracle");
    for net in exhaustive_structures() {
        check_firing_all_markings(&net, 5, |r| rep.record(r));
    }
    let mut rng = rng(seed);
    for net in sampled_structures(&mut rng, sampled) {
        check_firing_all_markings(&net, 5, |r| rep.record(r));
    }
    rep
}

/// All randomized suites, as run by `cpn selftest`.
pub fn run_selftest(cases: usize, seed: u64) -> Vec<SuiteReport> {
    vec![
        roundtrip_suite(cases, seed),
        conservation_suite(cases, seed.wrapping_add(1)),
        firing_suite(cases / 10, seed.wrapping_add(2)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let a = random_net(&mut rng(7), &NetShape::default());
        let b = random_net(&mut rng(7), &NetShape::default());
        assert_eq!(a, b);
        let s1 = random_scenario(&mut rng(3), ScenarioClass::Release);
        let s2 = random_scenario(&mut rng(3), ScenarioClass::Release);
        assert_eq!(s1.rules, s2.rules);
    }

    #[test]
    fn random_nets_respect_shape() {
        let mut r = rng(1);
        for _ in 0..200 {
            let n = random_net(&mut r, &NetShape::default());
            assert!(n.position_count() <= 6 && n.transition_count() <= 6);
            assert!(n.arcs().all(|a| a.multiplicity <= 2));
            assert!(n.positions().all(|(_, m)| m <= 9));
            n.check_invariants().unwrap();
        }
    }

    #[test]
    fn oracle_prefers_lower_ids_in_conflict() {
        let f = parse_net("net { C[a,t1] C[a,t2] I[t1,b] I[t2,c] m(a)=1 }").unwrap();
        let o = oracle_step(&f.net);
        assert_eq!(o.fired, BTreeSet::from(["t1".to_string()]));
        assert_eq!(o.marking["b"], 1);
        assert_eq!(o.marking["c"], 0);
    }

    #[test]
    fn oracle_defers_production() {
        let f = parse_net("net { I[t1,a] C[a,t2] I[t2,b] }").unwrap();
        let o = oracle_step(&f.net);
        assert_eq!(o.fired, BTreeSet::from(["t1".to_string()]));
        assert_eq!(o.marking["a"], 1);
    }

    #[test]
    fn oracle_sees_consumption_through_inhibitors() {
        // t1 drains a below the inhibitor threshold of t2
        let f = parse_net("net { C[a,t1] B[a,t2] I[t2,b] m(a)=1 }").unwrap();
        let o = oracle_step(&f.net);
        assert_eq!(o.fired.len(), 2);
    }

    #[test]
    fn enumeration_size() {
        // 6^6 choices, minus the empty one, folded by the position swap:
        // (46656 + 216 symmetric) / 2 - 1
        assert_eq!(exhaustive_structures().count(), 23435);
        let mut seen = 0;
        for_each_marking(&parse_net("net { C[a,t] I[t,b] }").unwrap().net, 2, |_| seen += 1);
        assert_eq!(seen, 9);
    }
}
