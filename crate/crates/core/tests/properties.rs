use std::collections::BTreeSet;

use creative_petri::testkit::{self, NetShape};
use creative_petri::{
    compose, defuse, parse_net, pf, render_canonical, run, step_fire, tf, wf, PetriNet, StepMode, StructuralUnit,
    UnitKind,
};
use proptest::prelude::*;

fn unit_strategy() -> impl Strategy<Value = StructuralUnit> {
    (0..4usize, 0..4usize, 0..3usize, 1..4u32).prop_map(|(k, p, t, w)| {
        let kind = UnitKind::ALL[k];
        let (p, t) = (format!("p{p}"), format!("t{t}"));
        let u = match kind {
            UnitKind::I => StructuralUnit::new(kind, &t, &p),
            _ => StructuralUnit::new(kind, &p, &t),
        };
        u.unwrap().with_multiplicity(w)
    })
}

fn net_strategy() -> impl Strategy<Value = PetriNet> {
    any::<u64>().prop_map(|seed| testkit::random_net(&mut testkit::rng(seed), &NetShape::default()))
}

proptest! {
    #[test]
    fn unit_order_does_not_matter(units in prop::collection::vec(unit_strategy(), 1..8), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let a = PetriNet::from_units(&units).unwrap();
        let mut shuffled = units.clone();
        shuffled.shuffle(&mut testkit::rng(seed));
        let b = PetriNet::from_units(&shuffled).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn whole_fusion_matches_repeated_units(u in unit_strategy(), n in 2..6u32) {
        let repeated = PetriNet::from_units(std::iter::repeat(&u).take(n as usize)).unwrap();
        prop_assert_eq!(wf(&u, n).unwrap(), repeated);
    }

    #[test]
    fn fusion_is_commutative(a in unit_strategy(), b in unit_strategy()) {
        let (x, y) = (PetriNet::from_units([&a]).unwrap(), PetriNet::from_units([&b]).unwrap());
        let forward = compose([&x, &y]).unwrap();
        prop_assert_eq!(&forward, &compose([&y, &x]).unwrap());
        if a.position == b.position {
            prop_assert_eq!(&pf(&[x.clone(), y.clone()], a.position.as_str()).unwrap(), &forward);
        }
        if a.transition == b.transition {
            prop_assert_eq!(&tf(&[y, x], a.transition.as_str()).unwrap(), &forward);
        }
    }

    #[test]
    fn render_parse_round_trip(net in net_strategy()) {
        let text = render_canonical(&net, &[]);
        prop_assert_eq!(parse_net(&text).unwrap().net, net);
    }

    #[test]
    fn defusion_round_trip(net in net_strategy()) {
        prop_assert_eq!(testkit::check_defuse_roundtrip(&net), Ok(()));
        let full = defuse(&net, None).unwrap();
        prop_assert_eq!(full.units().count(), net.arc_count());
    }

    #[test]
    fn balanced_firing_conserves_tokens(net in net_strategy()) {
        // drop inhibitor/associative gates; keep transitions whose normal
        // input and output weights balance
        let balanced: Vec<StructuralUnit> = net.units().into_iter().filter(|u| {
            let t = u.transition.as_str();
            let weight = |k| net.arcs_of_transition(t).filter(|a| a.kind == k).map(|a| a.multiplicity).sum::<u32>();
            weight(UnitKind::C) == weight(UnitKind::I)
        }).collect();
        prop_assume!(!balanced.is_empty());
        let mut n = PetriNet::from_units(&balanced).unwrap();
        for (p, m) in net.positions() {
            if n.has_position(p.as_str()) {
                n.set_marking(p.as_str(), m).unwrap();
            }
        }
        let before = n.total_tokens();
        for _ in 0..5 {
            step_fire(&mut n, &BTreeSet::new());
            prop_assert_eq!(n.total_tokens(), before);
        }
    }

    #[test]
    fn runs_are_deterministic_and_sound(seed in any::<u64>()) {
        let class = testkit::ScenarioClass::ALL[(seed % 3) as usize];
        let s = testkit::random_scenario(&mut testkit::rng(seed), class);
        for mode in [StepMode::Greedy, StepMode::Sequential] {
            let (a, ta) = run(s.net.clone(), s.rules.clone(), 8, mode);
            let (b, tb) = run(s.net.clone(), s.rules.clone(), 8, mode);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(ta.to_json_lines(), tb.to_json_lines());
            prop_assert_eq!(a.check_invariants(), Ok(()));
        }
    }

    #[test]
    fn speed_caps_firings(m in 0..20u64, v in 1..5u32, w in 1..3u32) {
        let mut n = parse_net(&format!("net {{ C[a,b]^{w} m(a)={m}  I[b,c] v(b)={v} }}")).unwrap().net;
        let fired = step_fire(&mut n, &BTreeSet::new());
        let expect = (m / w as u64).min(v as u64);
        prop_assert_eq!(fired.get("b").copied().unwrap_or(0), expect);
        prop_assert_eq!(n.marking("c"), Some(expect));
    }

    #[test]
    fn delay_holds_back_first_firing(d in 0..4u32) {
        let mut n = parse_net(&format!("net {{ C[a,b] m(a)=9  I[b,c] d(b)={d} }}")).unwrap().net;
        for step in 0..=d {
            let fired = step_fire(&mut n, &BTreeSet::new());
            prop_assert_eq!(fired.is_empty(), step < d);
        }
    }
}
