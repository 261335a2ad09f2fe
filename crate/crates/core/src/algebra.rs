//! Fusion and defusion of structural units.
//!
//! All fusion reduces to one mechanism: nodes with the same name are the
//! same node. [`compose`] folds fragments together on that basis; [`pf`]
//! and [`tf`] are the same fold plus a check that the named fusion target
//! really is shared by every operand; [`wf`] multiplies a unit's arc.

use std::collections::BTreeSet;

use crate::net::{NetError, NodeId, PetriNet, StructuralUnit};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionKind {
    /// p-fusion: operands are joined on a shared position.
    Position,
    /// t-fusion: operands are joined on a shared transition.
    Transition,
    /// whole-fusion: identical units folded into one arc of higher multiplicity.
    Whole,
}

/// Expression tree of the net algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum NetFormula {
    Unit(StructuralUnit),
    Fuse {
        kind: FusionKind,
        operands: Vec<NetFormula>,
    },
    /// Juxtaposition of fragments; equal names are identified.
    Compose(Vec<NetFormula>),
}

impl NetFormula {
    pub fn unit(u: StructuralUnit) -> Self {
        NetFormula::Unit(u)
    }

    pub fn pf(operands: Vec<NetFormula>) -> Self {
        NetFormula::Fuse {
            kind: FusionKind::Position,
            operands,
        }
    }

    pub fn tf(operands: Vec<NetFormula>) -> Self {
        NetFormula::Fuse {
            kind: FusionKind::Transition,
            operands,
        }
    }

    pub fn wf(operands: Vec<NetFormula>) -> Self {
        NetFormula::Fuse {
            kind: FusionKind::Whole,
            operands,
        }
    }
}

/// Union of fragments. Shared names fuse, identical arcs add up. At most one
/// fragment may mark a shared position, and at most one distinct
/// non-default parameter set may be given for a shared transition.
pub fn compose<'a>(fragments: impl IntoIterator<Item = &'a PetriNet>) -> Result<PetriNet, NetError> {
    let mut out = PetriNet::new();
    let mut marked = BTreeSet::new();
    for frag in fragments {
        for a in frag.arcs() {
            out.add_unit(&a.to_unit())?;
        }
        for (p, m) in frag.positions() {
            // only a degenerate arc-less fragment gets here with a new name
            out.insert_position(p)?;
            if m > 0 {
                if !marked.insert(p.clone()) {
                    return Err(NetError::MarkingConflict(p.to_string()));
                }
                out.set_marking(p.as_str(), m)?;
            }
        }
        for (t, params) in frag.transitions() {
            if params.has_default_parameters() {
                continue;
            }
            let current = *out.transition(t.as_str()).expect("transition added with its arcs");
            if !current.has_default_parameters()
                && (current.speed(), current.delay()) != (params.speed(), params.delay())
            {
                return Err(NetError::ParameterConflict(t.to_string()));
            }
            out.set_transition_params(t.as_str(), *params)?;
        }
    }
    if out.arc_count() > 0 || out.position_count() > 1 {
        let used: BTreeSet<&str> = out.arcs().map(|a| a.position.as_str()).collect();
        if let Some((p, _)) = out.positions().find(|(p, _)| !used.contains(p.as_str())) {
            return Err(NetError::OrphanNode(p.to_string()));
        }
    }
    Ok(out)
}

fn check_arity(op: &'static str, got: usize) -> Result<(), NetError> {
    if got < 2 {
        Err(NetError::ArityError { op, got })
    } else {
        Ok(())
    }
}

/// p-fusion: joins fragments on the position `at`, which each must contain.
pub fn pf(fragments: &[PetriNet], at: &str) -> Result<PetriNet, NetError> {
    check_arity("p-fusion", fragments.len())?;
    for (i, f) in fragments.iter().enumerate() {
        if !f.has_position(at) {
            return Err(NetError::FusionTargetMissing {
                target: at.to_string(),
                fragment: i,
            });
        }
    }
    compose(fragments)
}

/// t-fusion: joins fragments on the transition `at`, which each must contain.
pub fn tf(fragments: &[PetriNet], at: &str) -> Result<PetriNet, NetError> {
    check_arity("t-fusion", fragments.len())?;
    for (i, f) in fragments.iter().enumerate() {
        if !f.has_transition(at) {
            return Err(NetError::FusionTargetMissing {
                target: at.to_string(),
                fragment: i,
            });
        }
    }
    compose(fragments)
}

/// n-fold self-fusion of a unit: same endpoints, n times the multiplicity.
pub fn wf(unit: &StructuralUnit, n: u32) -> Result<PetriNet, NetError> {
    check_arity("whole-fusion", n as usize)?;
    let fused = unit.clone().with_multiplicity(unit.multiplicity * n);
    PetriNet::from_units([&fused])
}

/// Evaluates a formula bottom-up.
///
/// A p- or t-fusion node fuses on the names its operands have in common;
/// at least one shared node of the right kind must exist. Every shared name
/// fuses, as with [`compose`].
pub fn build(formula: &NetFormula) -> Result<PetriNet, NetError> {
    match formula {
        NetFormula::Unit(u) => PetriNet::from_units([u]),
        NetFormula::Compose(ops) => {
            let nets = ops.iter().map(build).collect::<Result<Vec<_>, _>>()?;
            compose(&nets)
        }
        NetFormula::Fuse {
            kind: FusionKind::Whole,
            operands,
        } => {
            check_arity("whole-fusion", operands.len())?;
            let first = match &operands[0] {
                NetFormula::Unit(u) => u,
                _ => return Err(NetError::WholeFusionMismatch),
            };
            if operands.iter().any(|o| o != &operands[0]) {
                return Err(NetError::WholeFusionMismatch);
            }
            wf(first, operands.len() as u32)
        }
        NetFormula::Fuse { kind, operands } => {
            let nets = operands.iter().map(build).collect::<Result<Vec<_>, _>>()?;
            check_arity(fusion_name(*kind), nets.len())?;
            let shared = shared_nodes(&nets, *kind);
            let Some(at) = shared.first() else {
                return Err(NetError::NoFusionTarget {
                    kind: if *kind == FusionKind::Position { "position" } else { "transition" },
                });
            };
            match kind {
                FusionKind::Position => pf(&nets, at),
                _ => tf(&nets, at),
            }
        }
    }
}

fn fusion_name(kind: FusionKind) -> &'static str {
    match kind {
        FusionKind::Position => "p-fusion",
        FusionKind::Transition => "t-fusion",
        FusionKind::Whole => "whole-fusion",
    }
}

fn shared_nodes(nets: &[PetriNet], kind: FusionKind) -> Vec<String> {
    let names = |n: &PetriNet| -> BTreeSet<String> {
        if kind == FusionKind::Position {
            n.positions().map(|(p, _)| p.to_string()).collect()
        } else {
            n.transitions().map(|(t, _)| t.to_string()).collect()
        }
    };
    let mut iter = nets.iter();
    let mut common = iter.next().map(names).unwrap_or_default();
    for n in iter {
        let other = names(n);
        common.retain(|x| other.contains(x));
    }
    common.into_iter().collect()
}

/// Result of decomposing a net.
///
/// `residual` is what stays fused (partial mode only); `pieces` are the
/// split-off units, each paired with a one-unit fragment. Markings and
/// transition parameters travel with the residual when it holds the node,
/// otherwise with the first piece that mentions it, so [`Defusion::recompose`]
/// restores the original net exactly.
#[derive(Debug, Clone)]
pub struct Defusion {
    pub residual: Option<PetriNet>,
    pub pieces: Vec<(StructuralUnit, PetriNet)>,
}

impl Defusion {
    pub fn units(&self) -> impl Iterator<Item = &StructuralUnit> {
        self.pieces.iter().map(|(u, _)| u)
    }

    /// Residual first, then one fragment per split unit.
    pub fn fragments(&self) -> impl Iterator<Item = &PetriNet> {
        self.residual.iter().chain(self.pieces.iter().map(|(_, n)| n))
    }

    pub fn recompose(&self) -> Result<PetriNet, NetError> {
        compose(self.fragments())
    }
}

/// Decomposes a net into structural units.
///
/// Without `at`, every arc becomes its own unit, in canonical order. With
/// `at`, only the units leaving `at` (those whose pre-index is `at`) are
/// split off and everything else stays together as the residual. The
/// marking is never changed and nothing fires.
pub fn defuse(net: &PetriNet, at: Option<&str>) -> Result<Defusion, NetError> {
    if let Some(at) = at {
        if net.node(at).is_none() {
            return Err(NetError::UnknownNode(at.to_string()));
        }
    }
    if net.arc_count() == 0 {
        return Ok(Defusion {
            residual: (!net.is_empty()).then(|| net.clone()),
            pieces: Vec::new(),
        });
    }

    let (split, kept): (Vec<StructuralUnit>, Vec<StructuralUnit>) = net
        .units()
        .into_iter()
        .partition(|u| at.is_none_or(|at| u.pre() == at));

    let mut placed = BTreeSet::new();
    let residual = if kept.is_empty() {
        None
    } else {
        let mut r = PetriNet::from_units(&kept)?;
        copy_parameters(net, &mut r, &mut placed)?;
        Some(r)
    };
    let mut pieces = Vec::with_capacity(split.len());
    for u in split {
        let mut piece = PetriNet::from_units([&u])?;
        copy_parameters(net, &mut piece, &mut placed)?;
        pieces.push((u, piece));
    }
    Ok(Defusion { residual, pieces })
}

fn copy_parameters(src: &PetriNet, dst: &mut PetriNet, placed: &mut BTreeSet<NodeId>) -> Result<(), NetError> {
    let positions: Vec<_> = dst.positions().map(|(p, _)| p.clone()).collect();
    for p in positions {
        if placed.insert(NodeId::Position(p.clone())) {
            dst.set_marking(p.as_str(), src.marking(p.as_str()).unwrap_or(0))?;
        }
    }
    let transitions: Vec<_> = dst.transitions().map(|(t, _)| t.clone()).collect();
    for t in transitions {
        if placed.insert(NodeId::Transition(t.clone())) {
            if let Some(params) = src.transition(t.as_str()) {
                dst.set_transition_params(t.as_str(), *params)?;
            }
        }
    }
    Ok(())
}

/// Builds the composition of single-unit literals, the usual way of writing
/// a whole net as a formula.
pub fn compose_units(units: &[StructuralUnit]) -> NetFormula {
    NetFormula::Compose(units.iter().cloned().map(NetFormula::Unit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{Direction, UnitKind, UnitKind::*};

    fn u(kind: UnitKind, from: &str, to: &str) -> StructuralUnit {
        StructuralUnit::new(kind, from, to).unwrap()
    }

    fn single(kind: UnitKind, from: &str, to: &str) -> PetriNet {
        PetriNet::from_units([&u(kind, from, to)]).unwrap()
    }

    #[test]
    fn pf_of_two_p_units_shares_the_position() {
        let net = pf(&[single(C, "b", "x"), single(C, "b", "y")], "b").unwrap();
        assert_eq!(net.position_count(), 1);
        assert_eq!(net.transition_count(), 2);
        assert!(net.arcs().all(|a| a.position.as_str() == "b" && a.direction() == Direction::PositionToTransition));
    }

    #[test]
    fn pf_of_two_t_units_joins_outputs() {
        let net = pf(&[single(I, "x", "b"), single(I, "y", "b")], "b").unwrap();
        assert_eq!(net.position_count(), 1);
        assert!(net.arcs().all(|a| a.direction() == Direction::TransitionToPosition));
    }

    #[test]
    fn tf_of_c_and_i_is_a_chain() {
        let net = tf(&[single(C, "a", "b"), single(I, "b", "c")], "b").unwrap();
        assert_eq!((net.position_count(), net.transition_count(), net.arc_count()), (2, 1, 2));
    }

    #[test]
    fn fusion_target_must_be_present() {
        let err = pf(&[single(C, "b", "x"), single(C, "c", "y")], "b").unwrap_err();
        assert_eq!(
            err,
            NetError::FusionTargetMissing {
                target: "b".into(),
                fragment: 1
            }
        );
        assert!(matches!(tf(&[single(C, "a", "b")], "b"), Err(NetError::ArityError { .. })));
    }

    #[test]
    fn marking_conflict_on_fusion() {
        let mut x = single(C, "b", "x");
        let mut y = single(C, "b", "y");
        x.set_marking("b", 2).unwrap();
        assert!(pf(&[x.clone(), y.clone()], "b").is_ok());
        y.set_marking("b", 2).unwrap();
        assert_eq!(pf(&[x, y], "b").unwrap_err(), NetError::MarkingConflict("b".into()));
    }

    #[test]
    fn parameter_conflict_on_fusion() {
        let mut x = single(C, "a", "b");
        let mut y = single(I, "b", "c");
        x.set_speed("b", 2).unwrap();
        assert_eq!(tf(&[x.clone(), y.clone()], "b").unwrap().transition("b").unwrap().speed(), 2);
        y.set_speed("b", 2).unwrap();
        assert!(tf(&[x.clone(), y.clone()], "b").is_ok());
        y.set_speed("b", 3).unwrap();
        assert_eq!(tf(&[x, y], "b").unwrap_err(), NetError::ParameterConflict("b".into()));
    }

    #[test]
    fn whole_fusion() {
        let net = wf(&u(C, "a", "b"), 2).unwrap();
        assert_eq!(net.arcs().next().unwrap().multiplicity, 2);
        let net = wf(&u(C, "a", "b").with_multiplicity(2), 2).unwrap();
        assert_eq!(net.arcs().next().unwrap().multiplicity, 4);
        assert!(matches!(wf(&u(C, "a", "b"), 1), Err(NetError::ArityError { .. })));
    }

    #[test]
    fn whole_fusion_matches_repeated_addition() {
        let i = u(I, "b", "c");
        let by_wf = wf(&i, 3).unwrap();
        let by_add = PetriNet::from_units([&i, &i, &i]).unwrap();
        assert!(by_wf.labeled_equal(&by_add));
    }

    #[test]
    fn cici_chain() {
        let formula = NetFormula::tf(vec![
            NetFormula::pf(vec![
                NetFormula::tf(vec![NetFormula::unit(u(C, "a", "b")), NetFormula::unit(u(I, "b", "c"))]),
                NetFormula::unit(u(C, "c", "d")),
            ]),
            NetFormula::unit(u(I, "d", "e")),
        ]);
        let net = build(&formula).unwrap();
        assert_eq!((net.position_count(), net.transition_count(), net.arc_count()), (3, 2, 4));
        let expected = PetriNet::from_units(&[u(C, "a", "b"), u(I, "b", "c"), u(C, "c", "d"), u(I, "d", "e")]).unwrap();
        assert!(net.labeled_equal(&expected));
    }

    #[test]
    fn fuse_without_shared_node_fails() {
        let f = NetFormula::pf(vec![NetFormula::unit(u(C, "a", "b")), NetFormula::unit(u(C, "c", "d"))]);
        assert!(matches!(build(&f), Err(NetError::NoFusionTarget { .. })));
        let w = NetFormula::wf(vec![NetFormula::unit(u(C, "a", "b")), NetFormula::unit(u(C, "a", "c"))]);
        assert_eq!(build(&w).unwrap_err(), NetError::WholeFusionMismatch);
    }

    #[test]
    fn gated_composition() {
        let net = build(&compose_units(&[u(C, "a", "b"), u(B, "i", "b"), u(I, "b", "c")])).unwrap();
        assert_eq!(net.transition_count(), 1);
        let kinds: Vec<_> = net.arcs_of_transition("b").map(|a| (a.position.to_string(), a.kind)).collect();
        assert_eq!(kinds, vec![("a".into(), C), ("c".into(), I), ("i".into(), B)]);
    }

    #[test]
    fn full_and_partial_defusion() {
        let net = PetriNet::from_units(&[u(I, "a", "b"), u(C, "b", "c"), u(I, "c", "e")]).unwrap();
        let full = defuse(&net, None).unwrap();
        assert!(full.residual.is_none());
        let units: Vec<String> = full.units().map(|u| u.to_string()).collect();
        // canonical order is by position id: b (I[a,b], C[b,c]) then e
        assert_eq!(units, vec!["I[a,b]", "C[b,c]", "I[c,e]"]);

        let part = defuse(&net, Some("c")).unwrap();
        let residual = part.residual.as_ref().unwrap();
        assert!(residual.labeled_equal(&PetriNet::from_units(&[u(I, "a", "b"), u(C, "b", "c")]).unwrap()));
        let units: Vec<String> = part.units().map(|u| u.to_string()).collect();
        assert_eq!(units, vec!["I[c,e]"]);

        assert_eq!(defuse(&net, Some("zz")).unwrap_err(), NetError::UnknownNode("zz".into()));
    }

    #[test]
    fn defusion_keeps_markings_and_recomposes() {
        let mut net = PetriNet::from_units(&[u(C, "a", "b").with_multiplicity(2), u(I, "b", "c")]).unwrap();
        net.set_marking("a", 5).unwrap();
        net.set_marking("c", 2).unwrap();
        net.set_delay("b", 2).unwrap();
        let d = defuse(&net, None).unwrap();
        assert_eq!(d.fragments().map(|f| f.total_tokens()).sum::<u64>(), 7);
        assert!(d.recompose().unwrap().labeled_equal(&net));
        for at in ["a", "b", "c"] {
            assert!(defuse(&net, Some(at)).unwrap().recompose().unwrap().labeled_equal(&net));
        }
    }

    #[test]
    fn isolated_position_survives_defusion() {
        let net = PetriNet::isolated_position("a".parse().unwrap(), 4);
        let d = defuse(&net, None).unwrap();
        assert!(d.recompose().unwrap().labeled_equal(&net));
    }
}
