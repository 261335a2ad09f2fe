use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::creative::{Action, CreativeRule, ReleasePolicy};
use crate::net::{PetriNet, PositionId, StructuralUnit};

/// Canonical text form: units in canonical order, each followed by the
/// annotations of the nodes it introduces, then the rules block if any.
/// Parsing the output gives back an equal net and equal rules.
pub fn render_canonical(net: &PetriNet, rules: &[CreativeRule]) -> String {
    let mut out = render_net(net);
    out.push('\n');
    if !rules.is_empty() {
        out.push_str("rules {\n");
        for r in rules {
            out.push_str("  ");
            out.push_str(&render_rule(r));
            out.push('\n');
        }
        out.push_str("}\n");
    }
    out
}

/// The `net { ... }` block on a single line.
pub fn render_net(net: &PetriNet) -> String {
    let mut items = Vec::new();
    let mut introduced = BTreeSet::new();
    for u in net.units() {
        let mut item = u.to_string();
        if introduced.insert(u.position.to_string()) {
            let m = net.marking(u.position.as_str()).unwrap_or(0);
            if m != 0 {
                write!(item, " m({})={m}", u.position).unwrap();
            }
        }
        if introduced.insert(u.transition.to_string()) {
            let t = net.transition(u.transition.as_str()).expect("arc endpoint exists");
            if t.speed() != 1 {
                write!(item, " v({})={}", u.transition, t.speed()).unwrap();
            }
            if t.delay() != 0 {
                write!(item, " d({})={}", u.transition, t.delay()).unwrap();
            }
        }
        items.push(item);
    }
    if net.arc_count() == 0 {
        for (p, m) in net.positions() {
            items.push(format!("m({p})={m}"));
        }
    }
    if items.is_empty() {
        "net { }".to_string()
    } else {
        format!("net {{ {} }}", items.join("  "))
    }
}

fn alloc(list: &[(PositionId, u64)]) -> String {
    list.iter().map(|(p, n)| format!("{p}:{n}")).collect::<Vec<_>>().join(", ")
}

fn units(list: &[StructuralUnit]) -> String {
    list.iter().map(|u| u.to_string()).collect::<Vec<_>>().join("  ")
}

pub fn render_rule(rule: &CreativeRule) -> String {
    let mut s = format!("when {} ", rule.condition());
    match rule.action() {
        Action::Spawn(u) => write!(s, "spawn {{ {} }}", units(u)).unwrap(),
        Action::Remove(u) => write!(s, "remove {{ {} }}", units(u)).unwrap(),
    }
    if !rule.cost().is_empty() {
        write!(s, " cost {{ {} }}", alloc(rule.cost())).unwrap();
    }
    if !rule.init().is_empty() {
        write!(s, " init {{ {} }}", alloc(rule.init())).unwrap();
    }
    match rule.release() {
        None => {}
        Some(ReleasePolicy::All(p)) => write!(s, " release {{ {p}:all }}").unwrap(),
        Some(ReleasePolicy::Ratio(t)) => write!(s, " release {{ {} }}", alloc(t)).unwrap(),
        Some(ReleasePolicy::NearestPredecessor) => s.push_str(" release { nearest_predecessor }"),
        Some(ReleasePolicy::NearestSuccessor) => s.push_str(" release { nearest_successor }"),
    }
    s
}

/// Display-only formula in bracket notation: a unit reads `aCb` (pre-index,
/// kind, post-index); a shared index is factored out of a bracket, with `.`
/// standing for the elided slot, as in `(aC., iB.)bIc` or `aCb(.Ic, .Ie)`.
/// Parts that do not hang together are joined with ` ∘ `.
pub fn render_pretty(net: &PetriNet) -> String {
    if net.arc_count() == 0 {
        return net.positions().map(|(p, _)| p.to_string()).collect::<Vec<_>>().join(" ∘ ");
    }
    let mut pr = Pretty::new(net);
    let mut parts = Vec::new();
    while let Some(root) = pr.pick_root() {
        let up = pr.up(&root);
        let down = pr.down(&root);
        parts.push(format!("{up}{down}"));
    }
    parts.join(" ∘ ")
}

struct Pretty {
    units: Vec<StructuralUnit>,
    used: Vec<bool>,
    incoming: BTreeMap<String, Vec<usize>>,
    outgoing: BTreeMap<String, Vec<usize>>,
}

impl Pretty {
    fn new(net: &PetriNet) -> Self {
        let units = net.units();
        let mut incoming: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut outgoing: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, u) in units.iter().enumerate() {
            incoming.entry(u.post().to_string()).or_default().push(i);
            outgoing.entry(u.pre().to_string()).or_default().push(i);
        }
        Self {
            used: vec![false; units.len()],
            units,
            incoming,
            outgoing,
        }
    }

    fn free(&self, map: &BTreeMap<String, Vec<usize>>, node: &str) -> Vec<usize> {
        map.get(node)
            .map(|v| v.iter().copied().filter(|&i| !self.used[i]).collect())
            .unwrap_or_default()
    }

    // Prefer a merge point, then a source, then anything left.
    fn pick_root(&self) -> Option<String> {
        let mut nodes: BTreeSet<&str> = BTreeSet::new();
        for (i, u) in self.units.iter().enumerate() {
            if !self.used[i] {
                nodes.insert(u.pre());
                nodes.insert(u.post());
            }
        }
        let fan_in = |n: &&str| self.free(&self.incoming, n).len();
        if let Some(best) = nodes.iter().filter(|n| fan_in(n) > 1).max_by_key(|n| (fan_in(n), std::cmp::Reverse(**n))) {
            return Some(best.to_string());
        }
        nodes
            .iter()
            .find(|n| fan_in(n) == 0)
            .or_else(|| nodes.iter().next())
            .map(|n| n.to_string())
    }

    fn glyph(u: &StructuralUnit) -> String {
        let mut g = u.kind.letter().to_string();
        if u.multiplicity != 1 {
            write!(g, "^{}", u.multiplicity).unwrap();
        }
        if let Some(k) = u.threshold {
            write!(g, "{{k={k}}}").unwrap();
        }
        g
    }

    /// Everything flowing into `node`, ending with the node's own index.
    fn up(&mut self, node: &str) -> String {
        let ins = self.free(&self.incoming, node);
        for &i in &ins {
            self.used[i] = true;
        }
        match ins.as_slice() {
            [] => node.to_string(),
            [i] => {
                let u = self.units[*i].clone();
                format!("{}{}{node}", self.up(u.pre()), Self::glyph(&u))
            }
            many => {
                let parts: Vec<String> = many
                    .iter()
                    .map(|&i| {
                        let u = self.units[i].clone();
                        format!("{}{}.", self.up(u.pre()), Self::glyph(&u))
                    })
                    .collect();
                format!("({}){node}", parts.join(", "))
            }
        }
    }

    /// Everything flowing out of `node`, after its index.
    fn down(&mut self, node: &str) -> String {
        let outs = self.free(&self.outgoing, node);
        for &i in &outs {
            self.used[i] = true;
        }
        match outs.as_slice() {
            [] => String::new(),
            [i] => {
                let u = self.units[*i].clone();
                format!("{}{}{}", Self::glyph(&u), u.post(), self.down(u.post()))
            }
            many => {
                let parts: Vec<String> = many
                    .iter()
                    .map(|&i| {
                        let u = self.units[i].clone();
                        format!(".{}{}{}", Self::glyph(&u), u.post(), self.down(u.post()))
                    })
                    .collect();
                format!("({})", parts.join(", "))
            }
        }
    }
}
