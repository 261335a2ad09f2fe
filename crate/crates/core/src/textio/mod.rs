//! The `.cpn` notation.
//!
//! ```text
//! net {
//!   C[a,b] m(a)=5      # C, B, A: [position,transition]
//!   I[b,c] m(c)=2      # I:       [transition,position]
//! }
//! rules {
//!   when m(a) >= 5 spawn { I[b,e] } cost { a:2 } init { e:1 }
//! }
//! ```
//!
//! Units may carry `^n` (multiplicity) and `k=n` (threshold). Annotations
//! `m(p)=n`, `v(t)=n` and `d(t)=n` set marking, speed and delay. Units are
//! folded together by name, so a name used twice is one node.

mod dot;
mod lexer;
mod parser;
mod render;

use std::fmt;
use std::str::FromStr;

pub use dot::export_dot;
pub use render::{render_canonical, render_net, render_pretty, render_rule};

use crate::creative::CreativeRule;
use crate::net::{PetriNet, StructuralUnit};

/// Location in the source text. Offsets are bytes; line and column are
/// 1-based, columns counted in characters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SourceSpan {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub column: usize,
}

impl SourceSpan {
    pub(crate) fn to(self, other: SourceSpan) -> SourceSpan {
        SourceSpan {
            end: other.end.max(self.start),
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl ParseDiagnostic {
    pub fn error(message: impl Into<String>, span: SourceSpan) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
            span,
        }
    }

    pub fn warning(message: impl Into<String>, span: SourceSpan) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
            span,
        }
    }

    /// Multi-line report with the offending source line and a caret marker.
    pub fn render(&self, path: &str, src: &str, color: bool) -> String {
        let (label, code) = match self.severity {
            Severity::Error => ("error", "\x1b[1;31m"),
            Severity::Warning => ("warning", "\x1b[1;33m"),
        };
        let label = if color { format!("{code}{label}\x1b[0m") } else { label.to_string() };
        let mut out = format!(
            "{label}: {}\n --> {path}:{}:{}\n",
            self.message, self.span.line, self.span.column
        );
        if let Some(line) = src.lines().nth(self.span.line.saturating_sub(1)) {
            let width = src[self.span.start.min(src.len())..self.span.end.min(src.len())]
                .chars()
                .take_while(|&c| c != '\n')
                .count()
                .max(1);
            let gutter = self.span.line.to_string();
            out.push_str(&format!("{} |\n{gutter} | {line}\n{} | ", " ".repeat(gutter.len()), " ".repeat(gutter.len())));
            out.push_str(&" ".repeat(self.span.column.saturating_sub(1)));
            out.push_str(&"^".repeat(width));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} at {}:{}: {}", self.span.line, self.span.column, self.message)
    }
}

/// A parsed `.cpn` file.
#[derive(Debug, Clone)]
pub struct CpnFile {
    pub net: PetriNet,
    pub rules: Vec<CreativeRule>,
    /// Non-fatal findings, such as conditions naming nodes nothing defines.
    pub warnings: Vec<ParseDiagnostic>,
}

/// Parses a whole `.cpn` document. On failure every diagnostic is an error
/// with a span inside `src`.
pub fn parse_net(src: &str) -> Result<CpnFile, Vec<ParseDiagnostic>> {
    parser::parse(src)
}

impl FromStr for StructuralUnit {
    type Err = ParseDiagnostic;

    /// Parses a single unit literal such as `C[a,b]^2 k=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parser::parse_unit(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::UnitKind;

    fn parse_ok(s: &str) -> CpnFile {
        match parse_net(s) {
            Ok(f) => f,
            Err(d) => panic!("{s}: {d:?}"),
        }
    }

    #[test]
    fn marked_chain() {
        let f = parse_ok("net { C[a,b] m(a)=5  I[b,c] m(c)=2 }");
        assert_eq!(f.net.arc_count(), 2);
        assert_eq!(f.net.marking("a"), Some(5));
        assert_eq!(f.net.marking("c"), Some(2));
        assert_eq!(f.net.total_tokens(), 7);
    }

    #[test]
    fn inhibitor_gated_chain() {
        let f = parse_ok("net { C[a,b]  B[i,b]  I[b,c] }");
        let kinds: Vec<_> = f.net.arcs_of_transition("b").map(|a| a.kind).collect();
        assert_eq!(kinds, vec![UnitKind::C, UnitKind::I, UnitKind::B]);
    }

    #[test]
    fn self_clash_is_reported_with_span() {
        let src = "net {\n  C[a,a]\n}";
        let d = parse_net(src).unwrap_err();
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("NamespaceClash"));
        assert_eq!((d[0].span.line, d[0].span.column), (2, 3));
        assert_eq!(&src[d[0].span.start..d[0].span.end], "C[a,a]");
    }

    #[test]
    fn cross_unit_clash() {
        let d = parse_net("net { C[a,b] C[b,c] }").unwrap_err();
        assert!(d[0].message.contains("NamespaceClash"));
        assert_eq!(d[0].span.column, 14);
    }

    #[test]
    fn syntax_errors_point_into_input() {
        for src in [
            "",
            "net",
            "net { C[a,b }",
            "net { C[a,b]^0 }",
            "net { X[a,b] }",
            "net { m(a)=1 m(b)=2 }",
            "net { C[a,b] m(q)=1 }",
            "net { C[a,b] v(b)=0 }",
            "net { C[a,b] } rules { when m(a) spawn { } }",
            "net { C[a,b] } rules { when m(a) >= 1 spawn { I[b,e] } cost { a:1 } init { e:2 } }",
            "net { C[a,b] } rules { when m(a) >= 1 spawn { I[b,e] } release { a:all } }",
            "net { C[a,b] } rules { when m(a) >= 1 remove { C[a,b] } release { a:all, b:1 } }",
            "net { C[a,b] } extra",
            "net { C[a,b] m(a)=1 m(a)=2 }",
        ] {
            let diags = parse_net(src).expect_err(src);
            assert!(!diags.is_empty());
            for d in diags {
                assert_eq!(d.severity, Severity::Error);
                assert!(d.span.start <= d.span.end && d.span.end <= src.len(), "{src}: {d}");
            }
        }
    }

    #[test]
    fn rules_parse_and_render_back() {
        let src = "net { C[a,b] m(a)=5  I[b,c] m(c)=2 }
rules {
  when m(a) >= 5 spawn { I[b,e] } cost { a:2 } init { e:1 }
  when 2*m(a) + m(c) < 7 remove { I[b,c] } release { a:2, b2:1 }
  when v(b) == 1 remove { I[b,c] } release { nearest_predecessor }
  when m(a) > 0 remove { C[a,b]^2 k=3 } cost { c:1 }
}
";
        let f = parse_ok(src);
        assert_eq!(f.rules.len(), 4);
        assert_eq!(render_canonical(&f.net, &f.rules), src);
    }

    #[test]
    fn clauses_in_any_order() {
        let a = parse_ok("net { C[a,b] m(a)=5 } rules { when m(a) >= 5 spawn { I[b,e] } init { e:1 } cost { a:2 } }");
        let b = parse_ok("net { C[a,b] m(a)=5 } rules { when m(a) >= 5 spawn { I[b,e] } cost { a:2 } init { e:1 } }");
        assert_eq!(a.rules, b.rules);
    }

    #[test]
    fn comments_and_annotations() {
        let f = parse_ok("# header\nnet {\n  m(a)=3 # before the unit\n  C[a,b]^2 k=3 v(b)=2 d(b)=1\n}\n");
        let arc = f.net.arcs().next().unwrap();
        assert_eq!((arc.multiplicity, arc.threshold()), (2, 3));
        let t = f.net.transition("b").unwrap();
        assert_eq!((t.speed(), t.delay()), (2, 1));
        assert_eq!(f.net.marking("a"), Some(3));
    }

    #[test]
    fn lone_position() {
        let f = parse_ok("net { m(a)=4 }");
        assert_eq!(f.net.position_count(), 1);
        assert_eq!(render_canonical(&f.net, &[]), "net { m(a)=4 }\n");
    }

    #[test]
    fn unknown_condition_node_warns() {
        let f = parse_ok("net { C[a,b] } rules { when m(zz) >= 1 spawn { I[b,c] } }");
        assert_eq!(f.warnings.len(), 1);
        assert_eq!(f.warnings[0].severity, Severity::Warning);
    }

    #[test]
    fn canonical_form() {
        let f = parse_ok("net { I[b,c] m(c)=2 C[a,b] m(a)=5 }");
        assert_eq!(render_canonical(&f.net, &[]), "net { C[a,b] m(a)=5  I[b,c] m(c)=2 }\n");
        assert_eq!(render_canonical(&PetriNet::new(), &[]), "net { }\n");
    }

    #[test]
    fn unit_literals() {
        let u: StructuralUnit = "I[b,c]^3".parse().unwrap();
        assert_eq!((u.kind, u.transition.as_str(), u.position.as_str(), u.multiplicity), (UnitKind::I, "b", "c", 3));
        assert!("C[a,b] junk".parse::<StructuralUnit>().is_err());
    }

    #[test]
    fn pretty_forms() {
        let chain = parse_ok("net { C[a,b] I[b,c] C[c,d] I[d,e] }").net;
        assert_eq!(render_pretty(&chain), "aCbIcCdIe");
        let fan_out = parse_ok("net { C[a,b] I[b,c] I[b,e] }").net;
        assert_eq!(render_pretty(&fan_out), "aCb(.Ic, .Ie)");
        let single = parse_ok("net { C[a,b] }").net;
        assert_eq!(render_pretty(&single), "aCb");
        let gated = parse_ok("net { C[a,b] B[i,b] I[b,c] }").net;
        assert_eq!(render_pretty(&gated), "(aC., iB.)bIc");
        let assoc = parse_ok("net { I[a,b] C[b,c] A[l,c] I[c,e] }").net;
        assert_eq!(render_pretty(&assoc), "(aIbC., lA.)cIe");
        let disjoint = parse_ok("net { C[a,b] C[c,d] }").net;
        assert_eq!(render_pretty(&disjoint), "aCb ∘ cCd");
    }

    #[test]
    fn dot_export() {
        let net = parse_ok("net { C[a,b]^2 m(a)=5  B[i,b]  A[l,b]  I[b,c] v(b)=2 }").net;
        let dot = export_dot(&net);
        assert!(dot.starts_with("digraph cpn {"));
        assert!(dot.contains("\"a\" [shape=circle, label=\"a:5\"];"));
        assert!(dot.contains("\"b\" [shape=box, label=\"b\\nv=2\"];"));
        assert!(dot.contains("\"a\" -> \"b\" [label=\"2\"];"));
        assert!(dot.contains("\"i\" -> \"b\" [arrowhead=odot];"));
        assert!(dot.contains("\"l\" -> \"b\" [style=dashed];"));
        assert!(dot.contains("\"b\" -> \"c\";"));
        assert_eq!(dot, export_dot(&net.clone()));
    }

    #[test]
    fn diagnostic_rendering() {
        let src = "net {\n  C[a,a]\n}";
        let d = &parse_net(src).unwrap_err()[0];
        let text = d.render("x.cpn", src, false);
        assert!(text.contains(" --> x.cpn:2:3"));
        assert!(text.contains("  ^^^^^^"));
        assert!(!text.contains('\x1b'));
        assert!(d.render("x.cpn", src, true).contains('\x1b'));
    }
}
