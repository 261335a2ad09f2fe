use std::fmt::Write;

use crate::net::{PetriNet, UnitKind};

/// Graphviz export. Positions are circles labeled `id:marking`, transitions
/// boxes; inhibitor arcs end in a hollow dot, associative arcs are dashed.
/// Output depends only on the net, byte for byte.
pub fn export_dot(net: &PetriNet) -> String {
    let mut out = String::from("digraph cpn {\n  rankdir=LR;\n");
    for (p, m) in net.positions() {
        writeln!(out, "  \"{p}\" [shape=circle, label=\"{p}:{m}\"];").unwrap();
    }
    for (t, params) in net.transitions() {
        let mut label = t.to_string();
        if params.speed() != 1 {
            write!(label, "\\nv={}", params.speed()).unwrap();
        }
        if params.delay() != 0 {
            write!(label, "\\nd={}", params.delay()).unwrap();
        }
        writeln!(out, "  \"{t}\" [shape=box, label=\"{label}\"];").unwrap();
    }
    for a in net.arcs() {
        let (from, to) = match a.kind {
            UnitKind::I => (a.transition.as_str(), a.position.as_str()),
            _ => (a.position.as_str(), a.transition.as_str()),
        };
        let mut attrs = Vec::new();
        let mut label = Vec::new();
        if a.multiplicity > 1 {
            label.push(a.multiplicity.to_string());
        }
        if let Some(k) = a.explicit_threshold {
            label.push(format!("k={k}"));
        }
        if !label.is_empty() {
            attrs.push(format!("label=\"{}\"", label.join(" ")));
        }
        match a.kind {
            UnitKind::B => attrs.push("arrowhead=odot".into()),
            UnitKind::A => attrs.push("style=dashed".into()),
            _ => {}
        }
        if attrs.is_empty() {
            writeln!(out, "  \"{from}\" -> \"{to}\";").unwrap();
        } else {
            writeln!(out, "  \"{from}\" -> \"{to}\" [{}];", attrs.join(", ")).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
