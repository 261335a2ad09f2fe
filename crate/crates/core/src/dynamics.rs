//! Discrete-step firing and the simulation loop.
//!
//! One step visits transitions in ascending id order. Each transition that
//! is enabled on the tokens still available fires as often as its inputs
//! and speed allow; consumed tokens leave immediately, produced tokens are
//! deposited when the step ends. Lower ids therefore win conflicts, and a
//! token moves at most one arc per step.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::creative::{creative_phase, CreativeRule, RuleWarning};
use crate::net::{NetError, PetriNet, StructuralUnit, TransitionId, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepMode {
    /// Rewrite, then fire every transition the rewrite did not touch.
    Greedy,
    /// A step with rewrites only rewrites; firing resumes on the next step.
    #[default]
    Sequential,
}

impl FromStr for StepMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(StepMode::Greedy),
            "sequential" => Ok(StepMode::Sequential),
            other => Err(format!("unknown mode `{other}` (expected greedy or sequential)")),
        }
    }
}

impl fmt::Display for StepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StepMode::Greedy => "greedy",
            StepMode::Sequential => "sequential",
        })
    }
}

/// How many times `t` could fire right now, capped by its speed.
///
/// Zero if a normal input holds fewer than `max(w, k)` tokens, an
/// associative input fewer than `k`, or an inhibitor input at least `k`.
pub fn enabled_count(net: &PetriNet, t: &str) -> Result<u64, NetError> {
    let tr = net.transition(t).ok_or_else(|| NetError::UnknownNode(t.to_string()))?;
    let mut count = tr.speed() as u64;
    for a in net.arcs_of_transition(t) {
        let m = net.marking(a.position.as_str()).unwrap_or(0);
        let k = a.threshold() as u64;
        match a.kind {
            UnitKind::C => {
                let w = a.multiplicity as u64;
                if m < w.max(k) {
                    return Ok(0);
                }
                count = count.min(m / w);
            }
            UnitKind::A if m < k => return Ok(0),
            UnitKind::B if m >= k => return Ok(0),
            _ => {}
        }
    }
    Ok(count)
}

/// Fires one step over every transition not touching `frozen`, updating
/// delay counters. Returns the firing count of each transition that fired.
pub fn step_fire(net: &mut PetriNet, frozen: &BTreeSet<String>) -> BTreeMap<TransitionId, u64> {
    // Work on dense indices; positions and transitions are in id order, and
    // arcs are sorted by position first, so position indices come for free.
    let tnames: Vec<&str> = net.transitions().map(|(t, _)| t.as_str()).collect();
    let mut marking: Vec<(u64, u64)> = net.positions().map(|(_, m)| (m, 0)).collect();
    let mut slots = vec![Slot::default(); tnames.len()];
    let mut arcs: Vec<(usize, FiringArc)> = Vec::with_capacity(net.arc_count());
    let mut positions = net.positions().map(|(p, _)| p).enumerate().peekable();
    for a in net.arcs() {
        while positions.peek().is_some_and(|(_, p)| *p != a.position) {
            positions.next();
        }
        let (p, _) = *positions.peek().expect("arc endpoint exists");
        let t = tnames.binary_search(&a.transition.as_str()).expect("arc endpoint exists");
        arcs.push((
            t,
            FiringArc {
                position: p,
                kind: a.kind,
                weight: a.multiplicity as u64,
                threshold: a.threshold() as u64,
            },
        ));
        if !frozen.is_empty() && (frozen.contains(a.position.as_str()) || frozen.contains(a.transition.as_str())) {
            slots[t].blocked = true;
        }
    }
    drop(positions);
    arcs.sort_by_key(|(t, _)| *t);
    for (i, (t, _)) in arcs.iter().enumerate() {
        if slots[*t].hi == 0 {
            slots[*t].lo = i;
        }
        slots[*t].hi = i + 1;
    }

    for (tr, slot) in net.transitions_mut().zip(slots.iter_mut()) {
        if slot.blocked {
            continue;
        }
        let arcs = &arcs[slot.lo..slot.hi];
        let n = firing_capacity(tr.speed() as u64, arcs.iter().map(|(_, a)| a), &marking);
        if n == 0 {
            tr.set_delay_counter(0);
            continue;
        }
        if tr.delay_counter() < tr.delay() {
            let c = tr.delay_counter() + 1;
            tr.set_delay_counter(c);
            continue;
        }
        for (_, a) in arcs {
            let w = a.weight * n;
            let (now, produced) = &mut marking[a.position];
            match a.kind {
                UnitKind::C => *now = now.checked_sub(w).expect("firing never drives a marking negative"),
                UnitKind::I => *produced += w,
                UnitKind::A | UnitKind::B => {}
            }
        }
        slot.count = n;
    }
    for (m, (now, produced)) in net.markings_mut().zip(marking) {
        *m = now + produced;
    }
    net.transitions()
        .zip(slots)
        .filter(|(_, s)| s.count > 0)
        .map(|((t, _), s)| (t.clone(), s.count))
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct Slot {
    lo: usize,
    hi: usize,
    blocked: bool,
    count: u64,
}

#[derive(Debug, Clone, Copy)]
struct FiringArc {
    position: usize,
    kind: UnitKind,
    weight: u64,
    threshold: u64,
}

// Same rule as `enabled_count`, on dense markings.
fn firing_capacity<'a>(speed: u64, arcs: impl Iterator<Item = &'a FiringArc>, marking: &[(u64, u64)]) -> u64 {
    let mut count = speed;
    for a in arcs {
        let m = marking[a.position].0;
        match a.kind {
            UnitKind::C => {
                if m < a.weight.max(a.threshold) {
                    return 0;
                }
                count = count.min(m / a.weight);
            }
            UnitKind::A if m < a.threshold => return 0,
            UnitKind::B if m >= a.threshold => return 0,
            _ => {}
        }
    }
    count
}

/// Record of one simulation step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEvent {
    pub step: usize,
    pub fired: BTreeMap<TransitionId, u64>,
    pub rules: Vec<usize>,
    pub spawned: Vec<StructuralUnit>,
    pub removed: Vec<StructuralUnit>,
    pub marking: BTreeMap<String, u64>,
    /// Delay counters of transitions with a nonzero delay.
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub counters: BTreeMap<String, u32>,
    #[serde(skip)]
    pub warnings: Vec<RuleWarning>,
    /// Nothing fired, no rule applied and no counter moved.
    #[serde(skip)]
    pub quiescent: bool,
}

#[derive(Serialize)]
struct WarningLine<'a> {
    warning: &'a str,
    rule: usize,
}

#[derive(Serialize)]
struct HaltLine {
    halt: &'static str,
    step: usize,
}

impl TraceEvent {
    /// The event as JSON lines: one line per warning, then the step line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for w in &self.warnings {
            let line = WarningLine {
                warning: &w.message,
                rule: w.rule,
            };
            out.push_str(&serde_json::to_string(&line).expect("plain data serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(self).expect("plain data serializes"));
        out.push('\n');
        if self.quiescent {
            let halt = HaltLine {
                halt: "quiescent",
                step: self.step,
            };
            out.push_str(&serde_json::to_string(&halt).expect("plain data serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    /// Step at which the run stopped early, if it did.
    pub fn halted_at(&self) -> Option<usize> {
        self.events.last().filter(|e| e.quiescent).map(|e| e.step)
    }

    pub fn to_json_lines(&self) -> String {
        self.events.iter().map(TraceEvent::to_json_lines).collect()
    }
}

/// Step-by-step driver owning the net.
#[derive(Debug, Clone)]
pub struct Simulator {
    net: PetriNet,
    rules: Vec<CreativeRule>,
    mode: StepMode,
    step: usize,
    halted: bool,
}

impl Simulator {
    pub fn new(net: PetriNet, rules: Vec<CreativeRule>, mode: StepMode) -> Self {
        Self {
            net,
            rules,
            mode,
            step: 0,
            halted: false,
        }
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn into_net(self) -> PetriNet {
        self.net
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn is_halted(&self) -> bool {
        self.halted
    }

    /// Runs one step; `None` once the net has gone quiescent.
    pub fn step(&mut self) -> Option<TraceEvent> {
        if self.halted {
            return None;
        }
        self.step += 1;
        let counters_before = counters(&self.net);
        let phase = creative_phase(&mut self.net, &self.rules);
        let fired = match (phase.changed(), self.mode) {
            (true, StepMode::Sequential) => BTreeMap::new(),
            (true, StepMode::Greedy) => step_fire(&mut self.net, &phase.frozen),
            (false, _) => step_fire(&mut self.net, &BTreeSet::new()),
        };
        let counters_after = counters(&self.net);
        let quiescent = fired.is_empty() && !phase.changed() && counters_before == counters_after;
        self.halted = quiescent;
        Some(TraceEvent {
            step: self.step,
            fired,
            rules: phase.triggered,
            spawned: phase.spawned,
            removed: phase.removed,
            marking: self.net.positions().map(|(p, m)| (p.to_string(), m)).collect(),
            counters: counters_after,
            warnings: phase.warnings,
            quiescent,
        })
    }
}

fn counters(net: &PetriNet) -> BTreeMap<String, u32> {
    net.transitions()
        .filter(|(_, t)| t.delay() > 0)
        .map(|(id, t)| (id.to_string(), t.delay_counter()))
        .collect()
}

/// Runs up to `steps` steps, stopping early at quiescence.
pub fn run(net: PetriNet, rules: Vec<CreativeRule>, steps: usize, mode: StepMode) -> (PetriNet, Trace) {
    let mut sim = Simulator::new(net, rules, mode);
    let mut trace = Trace::default();
    for _ in 0..steps {
        match sim.step() {
            Some(ev) => trace.events.push(ev),
            None => break,
        }
    }
    (sim.into_net(), trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::UnitKind::*;

    fn u(kind: UnitKind, from: &str, to: &str) -> StructuralUnit {
        StructuralUnit::new(kind, from, to).unwrap()
    }

    fn net(units: &[StructuralUnit], marking: &[(&str, u64)]) -> PetriNet {
        let mut n = PetriNet::from_units(units).unwrap();
        for (p, m) in marking {
            n.set_marking(p, *m).unwrap();
        }
        n
    }

    #[test]
    fn enabled_counts() {
        let n = net(&[u(C, "a", "b")], &[("a", 5)]);
        assert_eq!(enabled_count(&n, "b"), Ok(1));

        let mut n = net(&[u(C, "a", "b").with_multiplicity(2)], &[("a", 5)]);
        n.set_speed("b", 3).unwrap();
        assert_eq!(enabled_count(&n, "b"), Ok(2));

        let n = net(&[u(C, "a", "b"), u(B, "i", "b")], &[("a", 5), ("i", 1)]);
        assert_eq!(enabled_count(&n, "b"), Ok(0));
        let n = net(&[u(C, "a", "b"), u(B, "i", "b")], &[("a", 5)]);
        assert_eq!(enabled_count(&n, "b"), Ok(1));

        let n = net(&[u(C, "a", "b"), u(A, "l", "b").with_threshold(2)], &[("a", 5), ("l", 1)]);
        assert_eq!(enabled_count(&n, "b"), Ok(0));

        let n = net(&[u(C, "a", "b").with_threshold(3)], &[("a", 2)]);
        assert_eq!(enabled_count(&n, "b"), Ok(0));

        assert_eq!(enabled_count(&n, "q"), Err(NetError::UnknownNode("q".into())));
    }

    #[test]
    fn source_transition_fires_at_speed() {
        let mut n = net(&[u(I, "t", "p")], &[]);
        n.set_speed("t", 3).unwrap();
        assert_eq!(enabled_count(&n, "t"), Ok(3));
        step_fire(&mut n, &BTreeSet::new());
        assert_eq!(n.marking("p"), Some(3));
    }

    #[test]
    fn single_token_move() {
        let mut n = net(&[u(C, "a", "b"), u(I, "b", "c")], &[("a", 5)]);
        let fired = step_fire(&mut n, &BTreeSet::new());
        assert_eq!(fired.get("b"), Some(&1));
        assert_eq!((n.marking("a"), n.marking("c")), (Some(4), Some(1)));
    }

    #[test]
    fn lower_id_wins_conflict() {
        let mut n = net(&[u(C, "a", "b"), u(C, "a", "b2"), u(I, "b", "x"), u(I, "b2", "y")], &[("a", 1)]);
        let fired = step_fire(&mut n, &BTreeSet::new());
        assert_eq!(fired.len(), 1);
        assert_eq!(fired.get("b"), Some(&1));
        assert_eq!(n.marking("x"), Some(1));
    }

    #[test]
    fn delay_defers_first_firing() {
        let mut n = net(&[u(C, "a", "b"), u(I, "b", "c")], &[("a", 5)]);
        n.set_delay("b", 2).unwrap();
        let mut first = None;
        for step in 1..=5 {
            if !step_fire(&mut n, &BTreeSet::new()).is_empty() {
                first.get_or_insert(step);
            }
        }
        assert_eq!(first, Some(3));
        assert_eq!(n.marking("c"), Some(3));
    }

    #[test]
    fn delay_counter_resets_when_disabled() {
        let mut n = net(&[u(C, "a", "b"), u(I, "b", "c"), u(B, "i", "b")], &[("a", 5)]);
        n.set_delay("b", 1).unwrap();
        step_fire(&mut n, &BTreeSet::new());
        assert_eq!(n.transition("b").unwrap().delay_counter(), 1);
        n.set_marking("i", 1).unwrap();
        step_fire(&mut n, &BTreeSet::new());
        assert_eq!(n.transition("b").unwrap().delay_counter(), 0);
    }

    #[test]
    fn produced_tokens_wait_for_next_step() {
        let mut n = net(&[u(C, "a", "b"), u(I, "b", "c"), u(C, "c", "d"), u(I, "d", "e")], &[("a", 1)]);
        step_fire(&mut n, &BTreeSet::new());
        assert_eq!((n.marking("c"), n.marking("e")), (Some(1), Some(0)));
    }

    #[test]
    fn frozen_transitions_do_not_fire() {
        let mut n = net(&[u(C, "a", "b"), u(I, "b", "c")], &[("a", 5)]);
        let frozen: BTreeSet<String> = ["c".to_string()].into();
        assert!(step_fire(&mut n, &frozen).is_empty());
        assert_eq!(n.marking("a"), Some(5));
    }

    #[test]
    fn zero_steps() {
        let n = net(&[u(C, "a", "b")], &[("a", 5)]);
        let (out, trace) = run(n.clone(), vec![], 0, StepMode::Sequential);
        assert!(out.labeled_equal(&n));
        assert!(trace.events.is_empty());
    }

    #[test]
    fn quiescence_stops_the_run() {
        let n = net(&[u(C, "a", "b"), u(I, "b", "c")], &[("a", 2)]);
        let (out, trace) = run(n, vec![], 10, StepMode::Sequential);
        assert_eq!(trace.events.len(), 3);
        assert_eq!(trace.halted_at(), Some(3));
        assert_eq!(out.marking("c"), Some(2));
        assert!(trace.to_json_lines().ends_with("{\"halt\":\"quiescent\",\"step\":3}\n"));
    }

    #[test]
    fn trace_line_format() {
        let n = net(&[u(C, "a", "b"), u(I, "b", "c")], &[("a", 5)]);
        let (_, trace) = run(n, vec![], 1, StepMode::Sequential);
        assert_eq!(
            trace.to_json_lines(),
            "{\"step\":1,\"fired\":{\"b\":1},\"rules\":[],\"spawned\":[],\"removed\":[],\"marking\":{\"a\":4,\"c\":1}}\n"
        );
    }
}
