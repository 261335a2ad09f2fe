use std::collections::BTreeSet;

use super::lexer::{tokenize, Tok, Token};
use super::{CpnFile, ParseDiagnostic, SourceSpan};
use crate::creative::{Action, Comparator, Condition, CreativeRule, Quantity, ReleasePolicy, Term};
use crate::net::{PetriNet, PositionId, StructuralUnit, TransitionId, UnitKind};

type PResult<T> = Result<T, ParseDiagnostic>;

struct Anno {
    key: char,
    node: String,
    value: u64,
    span: SourceSpan,
}

struct RawRule {
    condition: Condition,
    action: Action,
    cost: Vec<(PositionId, u64)>,
    init: Vec<(PositionId, u64)>,
    release: Option<ReleasePolicy>,
    span: SourceSpan,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &str) -> ParseDiagnostic {
        ParseDiagnostic::error(
            format!("expected {expected}, found {}", self.peek().describe()),
            self.span(),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn keyword(&mut self, word: &str) -> PResult<SourceSpan> {
        if self.is_ident(word) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    fn ident(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn int(&mut self) -> PResult<(u64, SourceSpan)> {
        match *self.peek() {
            Tok::Int(n) => Ok((n, self.bump().span)),
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn small_int(&mut self, what: &str, min: u64) -> PResult<u32> {
        let (n, span) = self.int()?;
        if n < min || n > u32::MAX as u64 {
            return Err(ParseDiagnostic::error(
                format!("{what} must be between {min} and {}", u32::MAX),
                span,
            ));
        }
        Ok(n as u32)
    }

    fn at_unit(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s.len() == 1 && UnitKind::from_letter(s.chars().next().unwrap()).is_some())
            && *self.peek_at(1) == Tok::LBracket
    }

    fn unit(&mut self) -> PResult<(StructuralUnit, SourceSpan)> {
        let (kind_name, start) = self.ident()?;
        let kind = kind_name
            .chars()
            .next()
            .and_then(UnitKind::from_letter)
            .filter(|_| kind_name.len() == 1)
            .ok_or_else(|| ParseDiagnostic::error(format!("unknown unit kind `{kind_name}`"), start))?;
        self.expect(Tok::LBracket)?;
        let (from, _) = self.ident()?;
        self.expect(Tok::Comma)?;
        let (to, _) = self.ident()?;
        self.expect(Tok::RBracket)?;
        let mut unit = StructuralUnit::new(kind, &from, &to)
            .map_err(|e| ParseDiagnostic::error(e.to_string(), start.to(self.prev_span())))?;
        if *self.peek() == Tok::Caret {
            self.bump();
            unit.multiplicity = self.small_int("multiplicity", 1)?;
        }
        if self.is_ident("k") && *self.peek_at(1) == Tok::Assign {
            self.bump();
            self.bump();
            unit.threshold = Some(self.small_int("threshold", 1)?);
        }
        Ok((unit, start.to(self.prev_span())))
    }

    fn units_block(&mut self) -> PResult<Vec<(StructuralUnit, SourceSpan)>> {
        self.expect(Tok::LBrace)?;
        let mut units = Vec::new();
        while *self.peek() != Tok::RBrace {
            if !self.at_unit() {
                return Err(self.unexpected("a unit such as `C[a,b]` or `}`"));
            }
            units.push(self.unit()?);
        }
        self.bump();
        Ok(units)
    }

    fn anno(&mut self) -> PResult<Anno> {
        let (key, start) = self.ident()?;
        self.expect(Tok::LParen)?;
        let (node, _) = self.ident()?;
        self.expect(Tok::RParen)?;
        self.expect(Tok::Assign)?;
        let (value, _) = self.int()?;
        Ok(Anno {
            key: key.chars().next().unwrap(),
            node,
            value,
            span: start.to(self.prev_span()),
        })
    }

    fn at_anno(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == "m" || s == "v" || s == "d") && *self.peek_at(1) == Tok::LParen
    }

    fn net_block(&mut self) -> PResult<(Vec<(StructuralUnit, SourceSpan)>, Vec<Anno>)> {
        self.keyword("net")?;
        self.expect(Tok::LBrace)?;
        let mut units = Vec::new();
        let mut annos = Vec::new();
        loop {
            if *self.peek() == Tok::RBrace {
                self.bump();
                break;
            } else if self.at_unit() {
                units.push(self.unit()?);
            } else if self.at_anno() {
                annos.push(self.anno()?);
            } else {
                return Err(self.unexpected("a unit, an `m(..)`/`v(..)`/`d(..)` annotation or `}`"));
            }
        }
        Ok((units, annos))
    }

    fn term(&mut self) -> PResult<Term> {
        let mut coefficient = 1;
        if let Tok::Int(n) = *self.peek() {
            let span = self.bump().span;
            if n == 0 {
                return Err(ParseDiagnostic::error("coefficients must be positive", span));
            }
            coefficient = n;
            self.expect(Tok::Star)?;
        }
        let (key, key_span) = self.ident()?;
        self.expect(Tok::LParen)?;
        let (node, node_span) = self.ident()?;
        self.expect(Tok::RParen)?;
        let bad_id = |e: crate::net::NetError| ParseDiagnostic::error(e.to_string(), node_span);
        let quantity = match key.as_str() {
            "m" => Quantity::Marking(PositionId::new(node).map_err(bad_id)?),
            "v" => Quantity::Speed(TransitionId::new(node).map_err(bad_id)?),
            _ => {
                return Err(ParseDiagnostic::error(
                    format!("expected `m(..)` or `v(..)`, found `{key}`"),
                    key_span,
                ))
            }
        };
        Ok(Term { coefficient, quantity })
    }

    fn condition(&mut self) -> PResult<Condition> {
        let mut terms = vec![self.term()?];
        while *self.peek() == Tok::Plus {
            self.bump();
            terms.push(self.term()?);
        }
        let comparator = match self.peek() {
            Tok::Lt => Comparator::Lt,
            Tok::Le => Comparator::Le,
            Tok::EqEq => Comparator::Eq,
            Tok::Ge => Comparator::Ge,
            Tok::Gt => Comparator::Gt,
            _ => return Err(self.unexpected("a comparison (`<`, `<=`, `==`, `>=`, `>`)")),
        };
        self.bump();
        let (threshold, _) = self.int()?;
        Ok(Condition {
            terms,
            comparator,
            threshold,
        })
    }

    fn position(&mut self) -> PResult<PositionId> {
        let (name, span) = self.ident()?;
        PositionId::new(name).map_err(|e| ParseDiagnostic::error(e.to_string(), span))
    }

    fn alloc_list(&mut self) -> PResult<Vec<(PositionId, u64)>> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        loop {
            let p = self.position()?;
            self.expect(Tok::Colon)?;
            let (n, _) = self.int()?;
            out.push((p, n));
            if *self.peek() == Tok::Comma {
                self.bump();
            } else {
                break;
            }
        }
        self.expect(Tok::RBrace)?;
        Ok(out)
    }

    fn release_spec(&mut self) -> PResult<ReleasePolicy> {
        self.expect(Tok::LBrace)?;
        let policy = if self.is_ident("nearest_predecessor") && *self.peek_at(1) == Tok::RBrace {
            self.bump();
            ReleasePolicy::NearestPredecessor
        } else if self.is_ident("nearest_successor") && *self.peek_at(1) == Tok::RBrace {
            self.bump();
            ReleasePolicy::NearestSuccessor
        } else {
            let first = self.position()?;
            self.expect(Tok::Colon)?;
            if self.is_ident("all") {
                self.bump();
                if *self.peek() == Tok::Comma {
                    return Err(ParseDiagnostic::error(
                        "`all` sends every released token to one position; it cannot be combined with other targets",
                        self.span(),
                    ));
                }
                ReleasePolicy::All(first)
            } else {
                let (w, _) = self.int()?;
                let mut targets = vec![(first, w)];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    let p = self.position()?;
                    self.expect(Tok::Colon)?;
                    let (w, _) = self.int()?;
                    targets.push((p, w));
                }
                ReleasePolicy::Ratio(targets)
            }
        };
        self.expect(Tok::RBrace)?;
        Ok(policy)
    }

    fn rule(&mut self) -> PResult<RawRule> {
        let start = self.keyword("when")?;
        let condition = self.condition()?;
        let action = if self.is_ident("spawn") {
            self.bump();
            Action::Spawn(self.units_block()?.into_iter().map(|(u, _)| u).collect())
        } else if self.is_ident("remove") {
            self.bump();
            Action::Remove(self.units_block()?.into_iter().map(|(u, _)| u).collect())
        } else {
            return Err(self.unexpected("`spawn` or `remove`"));
        };
        let (mut cost, mut init, mut release) = (None, None, None);
        loop {
            let clause = match self.peek() {
                Tok::Ident(s) if *self.peek_at(1) == Tok::LBrace && matches!(s.as_str(), "cost" | "init" | "release") => {
                    s.clone()
                }
                _ => break,
            };
            let span = self.bump().span;
            let dup = match clause.as_str() {
                "cost" => cost.replace(self.alloc_list()?).is_some(),
                "init" => init.replace(self.alloc_list()?).is_some(),
                _ => release.replace(self.release_spec()?).is_some(),
            };
            if dup {
                return Err(ParseDiagnostic::error(format!("duplicate `{clause}` clause"), span));
            }
        }
        Ok(RawRule {
            condition,
            action,
            cost: cost.unwrap_or_default(),
            init: init.unwrap_or_default(),
            release,
            span: start.to(self.prev_span()),
        })
    }

    fn rules_block(&mut self) -> PResult<Vec<RawRule>> {
        self.keyword("rules")?;
        self.expect(Tok::LBrace)?;
        let mut rules = Vec::new();
        while *self.peek() != Tok::RBrace {
            if !self.is_ident("when") {
                return Err(self.unexpected("`when` or `}`"));
            }
            rules.push(self.rule()?);
        }
        self.bump();
        Ok(rules)
    }
}

pub(super) fn parse_unit(src: &str) -> Result<StructuralUnit, ParseDiagnostic> {
    let mut p = Parser {
        toks: tokenize(src)?,
        pos: 0,
    };
    if !p.at_unit() {
        return Err(p.unexpected("a unit such as `C[a,b]`"));
    }
    let (u, _) = p.unit()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(u)
}

pub(super) fn parse(src: &str) -> Result<CpnFile, Vec<ParseDiagnostic>> {
    let toks = tokenize(src).map_err(|d| vec![d])?;
    let mut p = Parser { toks, pos: 0 };
    let (units, annos) = p.net_block().map_err(|d| vec![d])?;
    let raw_rules = if *p.peek() == Tok::Eof {
        Vec::new()
    } else {
        p.rules_block().map_err(|d| vec![d])?
    };
    if *p.peek() != Tok::Eof {
        return Err(vec![p.unexpected("end of input")]);
    }

    let mut diags = Vec::new();
    let net = build_net(&units, &annos, &mut diags);
    let mut rules = Vec::with_capacity(raw_rules.len());
    for r in raw_rules {
        match CreativeRule::new(r.condition, r.action, r.cost, r.init, r.release) {
            Ok(rule) => rules.push((rule, r.span)),
            Err(e) => diags.push(ParseDiagnostic::error(e.to_string(), r.span)),
        }
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let warnings = unresolved_references(&net, &rules);
    Ok(CpnFile {
        net,
        rules: rules.into_iter().map(|(r, _)| r).collect(),
        warnings,
    })
}

fn build_net(units: &[(StructuralUnit, SourceSpan)], annos: &[Anno], diags: &mut Vec<ParseDiagnostic>) -> PetriNet {
    let mut net = PetriNet::new();
    for (u, span) in units {
        if let Err(e) = net.add_unit(u) {
            diags.push(ParseDiagnostic::error(e.to_string(), *span));
        }
    }
    if units.is_empty() {
        // a lone marked position is the only net without arcs
        let marks: Vec<&Anno> = annos.iter().filter(|a| a.key == 'm').collect();
        if let [only] = marks.as_slice() {
            if let Ok(id) = PositionId::new(only.node.clone()) {
                net = PetriNet::isolated_position(id, 0);
            }
        }
    }
    let mut seen = BTreeSet::new();
    for a in annos {
        if !seen.insert((a.key, a.node.clone())) {
            diags.push(ParseDiagnostic::error(
                format!("`{}({})` is given more than once", a.key, a.node),
                a.span,
            ));
            continue;
        }
        let res = match a.key {
            'm' if net.has_position(&a.node) => net.set_marking(&a.node, a.value),
            'v' | 'd' if net.has_transition(&a.node) => {
                match u32::try_from(a.value) {
                    Ok(v) if a.key == 'v' => net.set_speed(&a.node, v),
                    Ok(d) => net.set_delay(&a.node, d),
                    Err(_) => {
                        diags.push(ParseDiagnostic::error(format!("value {} is too large", a.value), a.span));
                        continue;
                    }
                }
            }
            'm' => {
                diags.push(ParseDiagnostic::error(
                    format!("`m({})`: no position named `{}` in the net", a.node, a.node),
                    a.span,
                ));
                continue;
            }
            _ => {
                diags.push(ParseDiagnostic::error(
                    format!("`{}({})`: no transition named `{}` in the net", a.key, a.node, a.node),
                    a.span,
                ));
                continue;
            }
        };
        if let Err(e) = res {
            diags.push(ParseDiagnostic::error(e.to_string(), a.span));
        }
    }
    net
}

// Names in conditions that neither the net nor any spawned complex can
// provide are almost certainly typos.
fn unresolved_references(net: &PetriNet, rules: &[(CreativeRule, SourceSpan)]) -> Vec<ParseDiagnostic> {
    let mut known: BTreeSet<&str> = net.positions().map(|(p, _)| p.as_str()).collect();
    known.extend(net.transitions().map(|(t, _)| t.as_str()));
    for (r, _) in rules {
        if let Action::Spawn(units) = r.action() {
            for u in units {
                known.insert(u.position.as_str());
                known.insert(u.transition.as_str());
            }
        }
    }
    let mut out = Vec::new();
    for (i, (r, span)) in rules.iter().enumerate() {
        for t in &r.condition().terms {
            let name = match &t.quantity {
                Quantity::Marking(p) => p.as_str(),
                Quantity::Speed(t) => t.as_str(),
            };
            if !known.contains(name) {
                out.push(ParseDiagnostic::warning(
                    format!("rule {i} refers to `{name}`, which no net or spawned complex defines"),
                    *span,
                ));
            }
        }
    }
    out
}
