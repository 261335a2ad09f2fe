//! Petri nets assembled from four-kind structural units, with an algebra
//! for fusing and splitting them, a text notation, and a discrete simulator
//! whose nets may rewrite themselves while running.
//!
//! ```
//! use creative_petri::{parse_net, run, StepMode};
//!
//! let file = parse_net("net { C[a,b] m(a)=5  I[b,c] }").unwrap();
//! let (net, trace) = run(file.net, file.rules, 10, StepMode::Sequential);
//! assert_eq!(net.marking("c"), Some(5));
//! assert_eq!(trace.halted_at(), Some(6));
//! ```

pub mod algebra;
pub mod creative;
pub mod dynamics;
pub mod net;
#[cfg(feature = "testkit")]
pub mod testkit;
pub mod textio;

pub use algebra::{build, compose, defuse, pf, tf, wf, Defusion, FusionKind, NetFormula};
pub use creative::{
    creative_phase, Action, Comparator, Condition, CreativeRule, Quantity, ReleasePolicy, RuleError, RuleSkip, Term,
};
pub use dynamics::{enabled_count, run, step_fire, Simulator, StepMode, Trace, TraceEvent};
pub use net::{NetError, PetriNet, PositionId, StructuralUnit, Transition, TransitionId, UnitKind};
pub use textio::{export_dot, parse_net, render_canonical, render_pretty, CpnFile, ParseDiagnostic};

// Run the guide's code samples as doctests.
#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $file:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        };
    }
    chapter!(introduction, "introduction.md");
    chapter!(units, "units.md");
    chapter!(fusion, "fusion.md");
    chapter!(defusion, "defusion.md");
    chapter!(notation, "notation.md");
    chapter!(creative, "creative.md");
    chapter!(simulation, "simulation.md");
    chapter!(cli, "cli.md");

    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
