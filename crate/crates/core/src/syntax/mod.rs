//! Schemata, rules and programs of the substitution calculi.

mod parse;
mod print;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::parse_program;
pub use print::print_schema;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("variant violation: {0}")]
    VariantViolation(String),
    #[error("head `{0}` declared twice")]
    DuplicateHead(String),
    #[error("`{0}` is not a head of the program")]
    UnknownHead(String),
    #[error("head `{0}` is missing its {1} clause")]
    MissingClause(String, &'static str),
    #[error("terminal clause of `{0}` mentions a head predicate")]
    TerminalHasVar(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
}

/// A modal schema. Derived connectives are encoded with `Not` and `And`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Schema {
    Top,
    Prop(String),
    Var(String),
    Not(Box<Schema>),
    And(Box<Schema>, Box<Schema>),
    Dia(Box<Schema>),
    DiaI(usize, Box<Schema>),
}

pub fn top() -> Schema {
    Schema::Top
}

pub fn bot() -> Schema {
    not(Schema::Top)
}

pub fn prop(name: impl Into<String>) -> Schema {
    Schema::Prop(name.into())
}

pub fn var(name: impl Into<String>) -> Schema {
    Schema::Var(name.into())
}

pub fn not(a: Schema) -> Schema {
    Schema::Not(Box::new(a))
}

pub fn and(a: Schema, b: Schema) -> Schema {
    Schema::And(Box::new(a), Box::new(b))
}

pub fn or(a: Schema, b: Schema) -> Schema {
    not(and(not(a), not(b)))
}

pub fn implies(a: Schema, b: Schema) -> Schema {
    not(and(a, not(b)))
}

pub fn iff(a: Schema, b: Schema) -> Schema {
    and(implies(a.clone(), b.clone()), implies(b, a))
}

pub fn dia(a: Schema) -> Schema {
    Schema::Dia(Box::new(a))
}

pub fn dia_i(i: usize, a: Schema) -> Schema {
    assert!(i >= 1, "diamond index starts at 1");
    Schema::DiaI(i, Box::new(a))
}

/// Left-nested conjunction; empty gives `T`.
pub fn and_all(items: impl IntoIterator<Item = Schema>) -> Schema {
    items.into_iter().reduce(and).unwrap_or(Schema::Top)
}

/// Left-nested disjunction; empty gives `F`.
pub fn or_all(items: impl IntoIterator<Item = Schema>) -> Schema {
    items.into_iter().reduce(or).unwrap_or_else(bot)
}

impl Schema {
    /// Number of symbol occurrences.
    pub fn size(&self) -> usize {
        match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => 1,
            Schema::Not(a) | Schema::Dia(a) | Schema::DiaI(_, a) => 1 + a.size(),
            Schema::And(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn modal_depth(&self) -> usize {
        match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => 0,
            Schema::Not(a) => a.modal_depth(),
            Schema::Dia(a) | Schema::DiaI(_, a) => 1 + a.modal_depth(),
            Schema::And(a, b) => a.modal_depth().max(b.modal_depth()),
        }
    }

    pub fn max_diamond_index(&self) -> usize {
        match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => 0,
            Schema::Not(a) | Schema::Dia(a) => a.max_diamond_index(),
            Schema::DiaI(i, a) => (*i).max(a.max_diamond_index()),
            Schema::And(a, b) => a.max_diamond_index().max(b.max_diamond_index()),
        }
    }

    pub fn has_var(&self) -> bool {
        self.any(&|s| matches!(s, Schema::Var(_)))
    }

    pub fn has_diamond(&self) -> bool {
        self.any(&|s| matches!(s, Schema::Dia(_) | Schema::DiaI(..)))
    }

    pub fn has_plain_diamond(&self) -> bool {
        self.any(&|s| matches!(s, Schema::Dia(_)))
    }

    pub fn has_indexed_diamond(&self) -> bool {
        self.any(&|s| matches!(s, Schema::DiaI(..)))
    }

    /// True if `pred` holds at some subschema.
    pub fn any(&self, pred: &dyn Fn(&Schema) -> bool) -> bool {
        if pred(self) {
            return true;
        }
        match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => false,
            Schema::Not(a) | Schema::Dia(a) | Schema::DiaI(_, a) => a.any(pred),
            Schema::And(a, b) => a.any(pred) || b.any(pred),
        }
    }

    /// Visits every subschema, children before parents.
    pub fn for_each(&self, f: &mut dyn FnMut(&Schema)) {
        match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => {}
            Schema::Not(a) | Schema::Dia(a) | Schema::DiaI(_, a) => a.for_each(f),
            Schema::And(a, b) => {
                a.for_each(f);
                b.for_each(f);
            }
        }
        f(self);
    }

    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each(&mut |s| {
            if let Schema::Prop(p) = s {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.for_each(&mut |s| {
            if let Schema::Var(v) = s {
                out.insert(v.clone());
            }
        });
        out
    }

    /// Rebuilds bottom-up; `f` may replace any rebuilt node.
    pub fn rewrite(&self, f: &mut dyn FnMut(Schema) -> Schema) -> Schema {
        let rebuilt = match self {
            Schema::Top | Schema::Prop(_) | Schema::Var(_) => self.clone(),
            Schema::Not(a) => not(a.rewrite(f)),
            Schema::Dia(a) => dia(a.rewrite(f)),
            Schema::DiaI(i, a) => Schema::DiaI(*i, Box::new(a.rewrite(f))),
            Schema::And(a, b) => {
                let a = a.rewrite(f);
                and(a, b.rewrite(f))
            }
        };
        f(rebuilt)
    }

    /// Replaces every `Var(x)` by `sub(x)`.
    pub fn substitute(&self, sub: &dyn Fn(&str) -> Schema) -> Schema {
        match self {
            Schema::Var(x) => sub(x),
            Schema::Top | Schema::Prop(_) => self.clone(),
            Schema::Not(a) => not(a.substitute(sub)),
            Schema::Dia(a) => dia(a.substitute(sub)),
            Schema::DiaI(i, a) => Schema::DiaI(*i, Box::new(a.substitute(sub))),
            Schema::And(a, b) => and(a.substitute(sub), b.substitute(sub)),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_schema(self))
    }
}

/// An iteration clause: a plain body or a conditional chain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Rule {
    Plain(Schema),
    Cond { conds: Vec<Schema>, conss: Vec<Schema>, backup: Schema },
}

impl Rule {
    /// A conditional rule; zero conditions collapse to a plain body.
    pub fn cond(conds: Vec<Schema>, conss: Vec<Schema>, backup: Schema) -> Rule {
        assert_eq!(conds.len(), conss.len(), "one consequence per condition");
        if conds.is_empty() {
            Rule::Plain(backup)
        } else {
            Rule::Cond { conds, conss, backup }
        }
    }

    /// Every schema in the rule: conditions, consequences, then the backup.
    pub fn parts(&self) -> Vec<&Schema> {
        match self {
            Rule::Plain(b) => vec![b],
            Rule::Cond { conds, conss, backup } => conds.iter().chain(conss.iter()).chain(std::iter::once(backup)).collect(),
        }
    }

    /// The bodies that can be selected: consequences then backup.
    pub fn branches(&self) -> Vec<&Schema> {
        match self {
            Rule::Plain(b) => vec![b],
            Rule::Cond { conss, backup, .. } => conss.iter().chain(std::iter::once(backup)).collect(),
        }
    }

    pub fn conditions(&self) -> &[Schema] {
        match self {
            Rule::Plain(_) => &[],
            Rule::Cond { conds, .. } => conds,
        }
    }

    pub fn is_conditional(&self) -> bool {
        matches!(self, Rule::Cond { .. })
    }

    pub fn size(&self) -> usize {
        self.parts().iter().map(|s| s.size()).sum()
    }

    pub fn modal_depth(&self) -> usize {
        self.parts().iter().map(|s| s.modal_depth()).max().unwrap_or(0)
    }

    pub fn map(&self, f: &mut dyn FnMut(&Schema) -> Schema) -> Rule {
        match self {
            Rule::Plain(b) => Rule::Plain(f(b)),
            Rule::Cond { conds, conss, backup } => Rule::Cond {
                conds: conds.iter().map(&mut *f).collect(),
                conss: conss.iter().map(&mut *f).collect(),
                backup: f(backup),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Msc,
    Mmsc,
    Cmsc,
    Mpmsc,
}

impl Variant {
    pub fn keyword(self) -> &'static str {
        match self {
            Variant::Msc => "msc",
            Variant::Mmsc => "mmsc",
            Variant::Cmsc => "cmsc",
            Variant::Mpmsc => "mpmsc",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Variant> {
        Some(match s {
            "msc" => Variant::Msc,
            "mmsc" => Variant::Mmsc,
            "cmsc" => Variant::Cmsc,
            "mpmsc" => Variant::Mpmsc,
            _ => return None,
        })
    }

    pub fn allows_conditionals(self) -> bool {
        matches!(self, Variant::Cmsc | Variant::Mpmsc)
    }

    pub fn indexed(self) -> bool {
        matches!(self, Variant::Mmsc | Variant::Mpmsc)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

pub const RESERVED: &[&str] = &["T", "F", "attention", "print", "order", "msc", "mmsc", "cmsc", "mpmsc"];

/// A validated program. Head `i` owns `terminals[i]` and `rules[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    variant: Variant,
    heads: Vec<String>,
    terminals: Vec<Schema>,
    rules: Vec<Rule>,
    attention: Vec<usize>,
    print: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub size: usize,
    pub md: usize,
    pub mdt: usize,
    pub mdi: usize,
    pub max_diamond_index: usize,
    pub head_count: usize,
}

impl Program {
    pub fn new(
        variant: Variant,
        heads: Vec<String>,
        terminals: Vec<Schema>,
        rules: Vec<Rule>,
        attention: &[String],
        print: &[String],
    ) -> Result<Program, SyntaxError> {
        assert_eq!(heads.len(), terminals.len());
        assert_eq!(heads.len(), rules.len());
        let mut seen = HashSet::new();
        for h in &heads {
            if RESERVED.contains(&h.as_str()) {
                return Err(SyntaxError::Reserved(h.clone()));
            }
            if !seen.insert(h.as_str()) {
                return Err(SyntaxError::DuplicateHead(h.clone()));
            }
        }
        let index = |name: &String| heads.iter().position(|h| h == name).ok_or_else(|| SyntaxError::UnknownHead(name.clone()));
        let mut att = attention.iter().map(index).collect::<Result<Vec<_>, _>>()?;
        let mut pr = print.iter().map(index).collect::<Result<Vec<_>, _>>()?;
        att.sort_unstable();
        att.dedup();
        pr.sort_unstable();
        pr.dedup();
        let p = Program { variant, heads, terminals, rules, attention: att, print: pr };
        p.check()?;
        Ok(p)
    }

    fn check(&self) -> Result<(), SyntaxError> {
        for (h, t) in self.heads.iter().zip(&self.terminals) {
            if t.has_var() {
                return Err(SyntaxError::TerminalHasVar(h.clone()));
            }
        }
        for r in &self.rules {
            for s in r.parts() {
                for v in s.vars() {
                    if !self.heads.contains(&v) {
                        return Err(SyntaxError::UnknownHead(v));
                    }
                }
            }
        }
        let v = self.variant;
        let all: Vec<(&String, Vec<&Schema>)> = self
            .heads
            .iter()
            .zip(self.terminals.iter().zip(&self.rules))
            .map(|(h, (t, r))| (h, std::iter::once(t).chain(r.parts()).collect()))
            .collect();
        for (h, parts) in &all {
            for s in parts {
                if v.indexed() && s.has_plain_diamond() {
                    return Err(SyntaxError::VariantViolation(format!("`{h}` uses <> in a {v} program")));
                }
                if !v.indexed() && s.has_indexed_diamond() {
                    return Err(SyntaxError::VariantViolation(format!("`{h}` uses an indexed diamond in a {v} program")));
                }
            }
        }
        for (h, r) in self.heads.iter().zip(&self.rules) {
            if r.is_conditional() && !v.allows_conditionals() {
                return Err(SyntaxError::VariantViolation(format!("`{h}` has a conditional rule in a {v} program")));
            }
        }
        if v == Variant::Mpmsc {
            for (h, (t, r)) in self.heads.iter().zip(self.terminals.iter().zip(&self.rules)) {
                if t.modal_depth() > 0 {
                    return Err(SyntaxError::VariantViolation(format!("terminal clause of `{h}` has positive modal depth")));
                }
                if r.conditions().iter().any(|c| c.modal_depth() > 0) {
                    return Err(SyntaxError::VariantViolation(format!("a condition of `{h}` has positive modal depth")));
                }
                if r.branches().iter().any(|b| b.modal_depth() > 1) {
                    return Err(SyntaxError::VariantViolation(format!("a body of `{h}` has modal depth above 1")));
                }
            }
        }
        Ok(())
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn heads(&self) -> &[String] {
        &self.heads
    }

    pub fn head_count(&self) -> usize {
        self.heads.len()
    }

    pub fn head_index(&self, name: &str) -> Option<usize> {
        self.heads.iter().position(|h| h == name)
    }

    pub fn terminals(&self) -> &[Schema] {
        &self.terminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn terminal(&self, i: usize) -> &Schema {
        &self.terminals[i]
    }

    pub fn rule(&self, i: usize) -> &Rule {
        &self.rules[i]
    }

    /// Attention head indices, ascending.
    pub fn attention(&self) -> &[usize] {
        &self.attention
    }

    /// Print head indices, ascending.
    pub fn print(&self) -> &[usize] {
        &self.print
    }

    pub fn attention_names(&self) -> Vec<String> {
        self.attention.iter().map(|&i| self.heads[i].clone()).collect()
    }

    pub fn print_names(&self) -> Vec<String> {
        self.print.iter().map(|&i| self.heads[i].clone()).collect()
    }

    /// Propositions occurring anywhere in the program.
    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for t in &self.terminals {
            out.extend(t.props());
        }
        for r in &self.rules {
            for s in r.parts() {
                out.extend(s.props());
            }
        }
        out
    }

    pub fn metrics(&self) -> Metrics {
        let size = self.terminals.iter().map(Schema::size).sum::<usize>() + self.rules.iter().map(Rule::size).sum::<usize>();
        let mdt = self.terminals.iter().map(Schema::modal_depth).max().unwrap_or(0);
        let mdi = self.rules.iter().map(Rule::modal_depth).max().unwrap_or(0);
        let max_diamond_index = self
            .terminals
            .iter()
            .chain(self.rules.iter().flat_map(|r| r.parts()))
            .map(Schema::max_diamond_index)
            .max()
            .unwrap_or(0);
        Metrics { size, md: mdt.max(mdi), mdt, mdi, max_diamond_index, head_count: self.heads.len() }
    }

    /// All subschemata of all clauses plus every head as a variable.
    pub fn subschemata(&self) -> BTreeSet<Schema> {
        let mut out = BTreeSet::new();
        let mut add = |s: &Schema| {
            s.for_each(&mut |x| {
                out.insert(x.clone());
            })
        };
        for t in &self.terminals {
            add(t);
        }
        for r in &self.rules {
            for s in r.parts() {
                add(s);
            }
        }
        for h in &self.heads {
            out.insert(var(h.clone()));
        }
        out
    }

    pub fn to_builder(&self) -> ProgramBuilder {
        ProgramBuilder {
            variant: self.variant,
            heads: self.heads.clone(),
            terminals: self.terminals.clone(),
            rules: self.rules.clone(),
            attention: self.attention_names(),
            print: self.print_names(),
        }
    }

    pub fn to_text(&self) -> String {
        print::print_program(self)
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Mutable program assembly used by the translations and generators.
#[derive(Debug, Clone)]
pub struct ProgramBuilder {
    pub variant: Variant,
    pub heads: Vec<String>,
    pub terminals: Vec<Schema>,
    pub rules: Vec<Rule>,
    pub attention: Vec<String>,
    pub print: Vec<String>,
}

impl ProgramBuilder {
    pub fn new(variant: Variant) -> Self {
        ProgramBuilder { variant, heads: vec![], terminals: vec![], rules: vec![], attention: vec![], print: vec![] }
    }

    /// Adds a head and returns it as a variable.
    pub fn head(&mut self, name: impl Into<String>, terminal: Schema, rule: Rule) -> Schema {
        let name = name.into();
        debug_assert!(!self.heads.contains(&name), "duplicate head {name}");
        self.heads.push(name.clone());
        self.terminals.push(terminal);
        self.rules.push(rule);
        var(name)
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.heads.iter().position(|h| h == name)
    }

    pub fn set_rule(&mut self, name: &str, rule: Rule) {
        let i = self.index(name).expect("unknown head");
        self.rules[i] = rule;
    }

    pub fn set_terminal(&mut self, name: &str, t: Schema) {
        let i = self.index(name).expect("unknown head");
        self.terminals[i] = t;
    }

    /// A name starting with `base` not used by any head or in `avoid`.
    pub fn fresh(&self, base: &str, avoid: &BTreeSet<String>) -> String {
        let base = sanitize(base);
        if !self.heads.contains(&base) && !avoid.contains(&base) && !RESERVED.contains(&base.as_str()) {
            return base;
        }
        (1..)
            .map(|i| format!("{base}_{i}"))
            .find(|c| !self.heads.contains(c) && !avoid.contains(c))
            .expect("unbounded counter")
    }

    pub fn build(self) -> Result<Program, SyntaxError> {
        Program::new(self.variant, self.heads, self.terminals, self.rules, &self.attention, &self.print)
    }
}

/// Turns arbitrary text into an identifier-safe fragment.
pub fn sanitize(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        match c {
            'a'..='z' | 'A'..='Z' | '0'..='9' | '_' => out.push(c),
            '<' => out.push('D'),
            '!' => out.push('n'),
            '&' => out.push('a'),
            '|' => out.push('o'),
            _ => {}
        }
    }
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, 'X');
    }
    out
}

/// Canonical identifier fragment for a schema, used for fresh head names.
pub fn schema_tag(s: &Schema) -> String {
    let mut t = sanitize(&print_schema(s));
    if t.len() > 24 {
        t.truncate(24);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_metrics() {
        let p = parse_program("msc { X(0) := T; X := X; }").unwrap();
        let m = p.metrics();
        assert_eq!(m.size, 2);
        assert_eq!(m.md, 0);
    }

    #[test]
    fn example_program_depths() {
        let p = parse_program("msc { X(0) := p; X := <><>(<><>X & <>X); }").unwrap();
        let m = p.metrics();
        assert_eq!((m.mdt, m.mdi, m.md), (0, 4, 4));
    }

    #[test]
    fn subschemata_sets() {
        let p = parse_program("msc { X(0) := p; X := <>X; }").unwrap();
        let expected: BTreeSet<Schema> = [dia(var("X")), var("X"), prop("p")].into_iter().collect();
        assert_eq!(p.subschemata(), expected);

        let p = parse_program("msc { X(0) := p; X := <><>(<><>X & <>X); }").unwrap();
        let x = var("X");
        let inner = and(dia(dia(x.clone())), dia(x.clone()));
        let expected: BTreeSet<Schema> = [
            dia(dia(inner.clone())),
            dia(inner.clone()),
            inner,
            dia(dia(x.clone())),
            dia(x.clone()),
            x,
            prop("p"),
        ]
        .into_iter()
        .collect();
        assert_eq!(p.subschemata(), expected);

        let p = parse_program("msc { X(0) := p; X := <>X & <>X; }").unwrap();
        assert_eq!(p.subschemata().iter().filter(|s| **s == dia(var("X"))).count(), 1);
        assert_eq!(p.subschemata().len(), 4);
    }

    #[test]
    fn variant_rules_enforced() {
        assert!(matches!(
            parse_program("mpmsc { X(0) := <1>p; X := X; }"),
            Err(SyntaxError::VariantViolation(_))
        ));
        assert!(matches!(parse_program("msc { X(0) := p; X := <1>X; }"), Err(SyntaxError::VariantViolation(_))));
        assert!(matches!(parse_program("msc { X(0) := p; X :=[p] X; F; }"), Err(SyntaxError::VariantViolation(_))));
        assert!(matches!(parse_program("mpmsc { X(0) := p; X := <1><1>X; }"), Err(SyntaxError::VariantViolation(_))));
        assert!(matches!(parse_program("mpmsc { X(0) := p; X :=[<1>X] X; F; }"), Err(SyntaxError::VariantViolation(_))));
        assert!(parse_program("mpmsc { X(0) := p; X :=[p & X] <2>X; <1>!X; }").is_ok());
    }

    #[test]
    fn builder_fresh_names() {
        let mut b = ProgramBuilder::new(Variant::Msc);
        b.head("X", top(), Rule::Plain(var("X")));
        assert_eq!(b.fresh("X", &BTreeSet::new()), "X_1");
        assert_eq!(b.fresh("<>X", &BTreeSet::new()), "DX");
        assert_eq!(b.fresh("T", &BTreeSet::new()), "T_1");
    }
}
