//! Cole-Vishkin style coloring: generators for the staged MPMSC programs and a
//! direct implementation of the algorithm used as an oracle.
//!
//! Forests are labelled `1..=delta`. In forest `d` the parent of a node is its
//! `d`-th neighbour with a higher identifier, neighbours taken in ascending
//! identifier order.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::compile::{add_clock, prepend_condition};
use crate::eval::{run, EvalError, Trace};
use crate::model::{bit_len, graph_to_kripke, Graph, ModelError};
use crate::syntax::{
    and, and_all, bot, dia_i, iff, not, or, or_all, prop, top, var, Program, ProgramBuilder, Rule, Schema, Variant,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CvError {
    #[error("the coloring programs need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("delta must be at least 1")]
    ZeroDelta,
    #[error("delta {delta} is above the cap {cap}")]
    DeltaAboveCap { delta: usize, cap: usize },
    #[error("graph has {got} nodes but the program was generated for {expected}")]
    NodeCountMismatch { expected: usize, got: usize },
    #[error("graph has maximum degree {degree}, above delta {delta}")]
    DegreeAboveDelta { degree: usize, delta: usize },
    #[error("node {0} produced no output")]
    MissingOutput(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

pub const DEFAULT_DELTA_CAP: usize = 4;

/// `log*` as the iterated binary logarithm: the number of times `log2` must
/// be applied to `x` before the value drops to at most 1.
pub fn log_star(x: u64) -> usize {
    let mut v = x as f64;
    let mut t = 0;
    while v > 1.0 {
        v = v.log2();
        t += 1;
    }
    t
}

/// Parameters of a generated coloring program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CvParams {
    pub n: usize,
    pub delta: usize,
    /// Emit the rules exactly as printed, without the timing repairs.
    pub printed_rules: bool,
}

impl CvParams {
    pub fn new(n: usize, delta: usize) -> Result<CvParams, CvError> {
        CvParams::with_cap(n, delta, DEFAULT_DELTA_CAP)
    }

    pub fn with_cap(n: usize, delta: usize, cap: usize) -> Result<CvParams, CvError> {
        if n < 2 {
            return Err(CvError::TooFewNodes(n));
        }
        if delta == 0 {
            return Err(CvError::ZeroDelta);
        }
        if delta > cap {
            return Err(CvError::DeltaAboveCap { delta, cap });
        }
        Ok(CvParams { n, delta, printed_rules: false })
    }

    pub fn printed(mut self) -> CvParams {
        self.printed_rules = true;
        self
    }

    /// Identifier bits.
    pub fn ell(&self) -> usize {
        bit_len(self.n as u64)
    }

    /// Color registers hold at least three bits so that 7-colorings fit.
    pub fn width(&self) -> usize {
        self.ell().max(3)
    }

    pub fn clock_len(&self) -> usize {
        bit_len(self.ell() as u64)
    }

    pub fn log_star(&self) -> usize {
        log_star(self.n as u64)
    }

    pub fn hours(&self) -> usize {
        self.log_star() + 3
    }

    pub fn loops(&self) -> usize {
        3usize.pow(self.delta as u32) - self.delta
    }

    /// Bits of the final colors `1..=delta+1`.
    pub fn final_bits(&self) -> usize {
        bit_len(self.delta as u64 + 1)
    }

    pub fn expected_rounds(&self, stage: Stage) -> usize {
        match stage {
            Stage::Seven => self.log_star() + 4,
            Stage::Three => self.log_star() + 12,
            Stage::Final => self.log_star() + 3usize.pow(self.delta as u32) - self.delta + 11,
        }
    }

    /// Palette size of a stage.
    pub fn palette(&self, stage: Stage) -> usize {
        let d = self.delta as u32;
        match stage {
            Stage::Seven => 7usize.pow(d),
            Stage::Three => 3usize.pow(d),
            Stage::Final => self.delta + 1,
        }
    }

    /// Color heads a stage would have before dropping the digit
    /// combinations that contain a 0, which never occur.
    pub fn unpruned_palette(&self, stage: Stage) -> usize {
        let d = self.delta as u32;
        match stage {
            Stage::Seven => 8usize.pow(d),
            Stage::Three => 4usize.pow(d),
            Stage::Final => self.delta + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stage {
    /// `7^delta` colors after the identifier-reduction phase.
    Seven,
    /// `3^delta` colors after shift-down.
    Three,
    /// `delta + 1` colors after basic color reduction.
    Final,
}

impl Stage {
    pub fn parse(s: &str) -> Option<Stage> {
        match s {
            "7" => Some(Stage::Seven),
            "3" => Some(Stage::Three),
            "final" => Some(Stage::Final),
            _ => None,
        }
    }
}

fn v(name: impl Into<String>) -> Schema {
    var(name.into())
}

/// Digits of `x` in base `base`, least significant first.
fn digits(mut x: usize, base: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|_| {
            let d = x % base;
            x /= base;
            d
        })
        .collect()
}

/// `value` written over `bits` (bit 1 first) as a conjunction of literals.
fn encodes(bits: &[Schema], value: usize) -> Schema {
    and_all(bits.iter().enumerate().map(|(i, b)| if value >> i & 1 == 1 { b.clone() } else { not(b.clone()) }))
}

struct Gen {
    p: CvParams,
    b: ProgramBuilder,
    /// Heads frozen while a flag holds, applied outermost last.
    halts: Vec<(Schema, Vec<String>)>,
}

impl Gen {
    fn new(p: CvParams) -> Gen {
        Gen { p, b: ProgramBuilder::new(Variant::Mpmsc), halts: vec![] }
    }

    fn head(&mut self, name: impl Into<String>, terminal: Schema, rule: Rule) -> String {
        let name = name.into();
        self.b.head(name.clone(), terminal, rule);
        name
    }

    fn end1(&self) -> Schema {
        v(format!("T{}", self.p.ell() + 2))
    }

    fn high(d: usize) -> Schema {
        if d == 0 {
            top()
        } else {
            v(format!("HIGH{d}"))
        }
    }

    /// `phi` at the parent in forest `d`.
    fn parent(&self, d: usize, phi: Schema) -> Schema {
        or_all((d..=self.p.delta).map(|i| and_all([Gen::high(i - d), v(format!("LOW{}", i - d + 1)), dia_i(i, phi.clone())])))
    }

    fn identifiers(&mut self) {
        let (ell, delta) = (self.p.ell(), self.p.delta);
        let t = |i: usize| v(format!("T{i}"));
        let mut halted = vec![];
        for i in 1..=ell + 2 {
            let body = if i == 1 { top() } else { t(i - 1) };
            halted.push(self.head(format!("T{i}"), bot(), Rule::Plain(body)));
        }
        let prev = |i: usize| if i == 1 { ell } else { i - 1 };
        for i in 1..=ell {
            let me = v(format!("I{i}"));
            let rule = Rule::cond(vec![t(ell + 1), t(1)], vec![me.clone(), v(format!("I{}", prev(i)))], me);
            halted.push(self.head(format!("I{i}"), prop(format!("p{i}")), rule));
        }
        for d in 1..=delta {
            for i in 1..=ell {
                let me = v(format!("I{d}_{i}"));
                let rule = Rule::cond(
                    vec![t(ell + 1), t(1)],
                    vec![me.clone(), v(format!("I{d}_{}", prev(i)))],
                    dia_i(d, v(format!("I{i}"))),
                );
                halted.push(self.head(format!("I{d}_{i}"), bot(), rule));
            }
        }
        for d in 1..=delta {
            // Replaced by the full rule once the color registers exist.
            halted.push(self.head(format!("DIF{d}"), bot(), Rule::Plain(bot())));
        }
        for d in 1..=delta {
            for (name, other, bit) in [("HIGH", "LOW", v("I1")), ("LOW", "HIGH", not(v("I1")))] {
                let rule = Rule::cond(vec![v(format!("{name}{d}")), v(format!("{other}{d}")), v(format!("DIF{d}"))], vec![top(), bot(), bit], bot());
                halted.push(self.head(format!("{name}{d}"), bot(), rule));
            }
        }
        self.halts.push((v("END2"), halted));
    }

    fn reduction(&mut self) {
        let (ell, delta, w, k, hours) = (self.p.ell(), self.p.delta, self.p.width(), self.p.clock_len(), self.p.hours());
        let end1 = self.end1();
        let mut halted = vec![];

        let mut avoid: BTreeSet<String> = (1..=ell).map(|i| format!("p{i}")).collect();
        let clock = add_clock(&mut self.b, k, 0, "", &mut avoid);
        self.b.set_terminal(&clock.changing, top());
        for h in clock.heads() {
            let i = self.b.index(&h).expect("clock head");
            self.b.rules[i] = prepend_condition(&self.b.rules[i], not(end1.clone()), v(h.clone()));
            halted.push(h);
        }
        let midnight = and(and_all((1..=k).map(|i| not(clock.m(i)))), clock.changing());
        let tick = not(clock.changing());
        let cr = v("CR");
        halted.push(self.head("CR", bot(), Rule::cond(vec![end1.clone()], vec![midnight.clone()], bot())));

        let next = |i: usize| if i == w { 1 } else { i + 1 };
        for d in 1..=delta {
            for i in 1..=w {
                let me = v(format!("B{d}_{i}"));
                let rule = Rule::cond(vec![cr.clone(), tick.clone()], vec![v(format!("N{d}_{i}")), v(format!("B{d}_{}", next(i)))], me);
                halted.push(self.head(format!("B{d}_{i}"), bot(), rule));
            }
        }
        let mut parents = vec![];
        for d in 1..=delta {
            for i in 1..=w {
                let me = v(format!("P{d}_{i}"));
                let rule = Rule::cond(
                    vec![cr.clone(), tick.clone()],
                    vec![self.parent(d, v(format!("N{d}_{i}"))), v(format!("P{d}_{}", next(i)))],
                    me,
                );
                parents.push(self.head(format!("P{d}_{i}"), bot(), rule));
            }
        }
        for d in 1..=delta {
            let dif = v(format!("DIF{d}"));
            let t = |i: usize| v(format!("T{i}"));
            let rule = Rule::cond(
                vec![cr.clone(), end1.clone(), t(1)],
                vec![bot(), not(iff(v(format!("B{d}_1")), v(format!("P{d}_1")))), not(iff(v(format!("I{ell}")), v(format!("I{d}_{ell}"))))],
                bot(),
            );
            self.b.set_rule(&format!("DIF{d}"), rule);
            let get = v(format!("GET{d}"));
            halted.push(self.head(format!("GET{d}"), bot(), Rule::cond(vec![cr.clone(), get.clone()], vec![bot(), top()], dif)));
        }
        for d in 1..=delta {
            for i in 1..=w {
                let me = v(format!("N{d}_{i}"));
                let new = if i == 1 {
                    v(format!("B{d}_1"))
                } else if i - 1 <= k {
                    clock.m(i - 1)
                } else {
                    bot()
                };
                let id = if i <= ell { prop(format!("p{i}")) } else { bot() };
                let rule = Rule::cond(vec![v(format!("GET{d}")), v(format!("DIF{d}"))], vec![me, new], id);
                halted.push(self.head(format!("N{d}_{i}"), bot(), rule));
            }
        }
        for j in 1..=hours {
            let me = v(format!("H{j}"));
            let cond = if j == 1 { or(me, cr.clone()) } else { or(me, and(v(format!("H{}", j - 1)), cr.clone())) };
            halted.push(self.head(format!("H{j}"), bot(), Rule::cond(vec![cond], vec![top()], bot())));
        }
        halted.push(self.head("STOP", bot(), Rule::Plain(and(v(format!("H{hours}")), midnight))));
        let end2 = if self.p.printed_rules { Rule::Plain(v("STOP")) } else { Rule::cond(vec![v("STOP")], vec![top()], v("END2")) };
        self.head("END2", bot(), end2);

        self.halts.push((v("END2"), halted));
        self.halts.push((or(v("STOP"), v("END2")), parents));
    }

    fn seven_outputs(&mut self) -> Vec<String> {
        let delta = self.p.delta;
        let mut out = vec![];
        for idx in 0..8usize.pow(delta as u32) {
            let ds = digits(idx, 8, delta);
            if ds.contains(&0) {
                continue;
            }
            let body = and_all(ds.iter().enumerate().map(|(d, &c)| {
                let bits: Vec<Schema> = (1..=3).map(|i| v(format!("B{}_{i}", d + 1))).collect();
                encodes(&bits, c)
            }));
            out.push(self.head(format!("CLR{idx}"), bot(), Rule::cond(vec![v("END2")], vec![body], bot())));
        }
        out
    }

    fn shift_down(&mut self) {
        let delta = self.p.delta;
        let mut halted = vec![];
        let z = |i: usize| v(format!("Z{i}"));
        halted.push(self.head("Z1", bot(), Rule::cond(vec![or(z(1), z(2)), v("END2")], vec![bot(), top()], bot())));
        halted.push(self.head("Z2", bot(), Rule::cond(vec![z(1)], vec![top()], bot())));
        halted.push(self.head("Z3", bot(), Rule::cond(vec![z(2)], vec![top()], bot())));
        for j in 1..=4 {
            let me = v(format!("Tp{j}"));
            let cond = if j == 1 { or(me, z(3)) } else { or(me, and(v(format!("Tp{}", j - 1)), z(3))) };
            halted.push(self.head(format!("Tp{j}"), bot(), Rule::cond(vec![cond], vec![top()], bot())));
        }
        let c = |d: usize, i: usize| v(format!("C{d}_{i}"));
        let cc = |d: usize, i: usize| v(format!("Cc{d}_{i}"));
        let cp = |d: usize, i: usize| v(format!("Cp{d}_{i}"));
        for d in 1..=delta {
            for i in 1..=7 {
                halted.push(self.head(format!("Cc{d}_{i}"), bot(), Rule::cond(vec![z(1)], vec![c(d, i)], cc(d, i))));
            }
        }
        for d in 1..=delta {
            for i in 1..=7 {
                let rule = Rule::cond(vec![z(2)], vec![self.parent(d, c(d, i))], cp(d, i));
                halted.push(self.head(format!("Cp{d}_{i}"), bot(), rule));
            }
        }
        let mut roots = vec![];
        for d in 1..=delta {
            let me = v(format!("R{d}"));
            let rule = Rule::cond(vec![me.clone(), v("CR")], vec![top(), not(self.parent(d, top()))], bot());
            roots.push(self.head(format!("R{d}"), bot(), rule));
        }
        halted.extend(roots.iter().cloned());
        for d in 1..=delta {
            let taken = |i: usize| or(cc(d, i), cp(d, i));
            let greatest =
                and(z(3), or_all((3..=7).map(|i| and(c(d, i), not(or_all((i + 1..=7).map(&taken)))))));
            let l1 = not(taken(1));
            let l2 = and(not(l1.clone()), not(taken(2)));
            let l3 = and(not(l1.clone()), not(l2.clone()));
            let bits: Vec<Schema> = (1..=3).map(|i| v(format!("B{d}_{i}"))).collect();
            let settle = or(z(3), z(2));
            let me = |i: usize| c(d, i);
            for i in 1..=7 {
                let lowest = match i {
                    1 => l1.clone(),
                    2 => l2.clone(),
                    3 => l3.clone(),
                    _ => bot(),
                };
                let rule = match i {
                    1 | 2 => {
                        let root_step = if i == 1 { not(me(1)) } else { me(1) };
                        Rule::cond(
                            vec![greatest.clone(), settle.clone(), and(v(format!("R{d}")), z(1)), z(1), v("END2")],
                            vec![lowest, me(i), root_step, self.parent(d, me(i)), encodes(&bits, i)],
                            bot(),
                        )
                    }
                    _ => Rule::cond(
                        vec![greatest.clone(), settle.clone(), z(1), v("END2")],
                        vec![lowest, me(i), self.parent(d, me(i)), encodes(&bits, i)],
                        bot(),
                    ),
                };
                halted.push(self.head(format!("C{d}_{i}"), bot(), rule));
            }
        }
        self.halts.push((v("Tp4"), halted));
        if !self.p.printed_rules {
            // Without this a non-root keeps broadcasting at the final register load.
            self.halts.push((or(v("STOP"), v("END2")), roots));
        }
    }

    fn three_outputs(&mut self) -> Vec<String> {
        let delta = self.p.delta;
        let mut out = vec![];
        for idx in 0..4usize.pow(delta as u32) {
            let ds = digits(idx, 4, delta);
            if ds.contains(&0) {
                continue;
            }
            let body = and_all(ds.iter().enumerate().flat_map(|(d, &col)| {
                (1..=3).map(move |i| if i == col { v(format!("C{}_{i}", d + 1)) } else { not(v(format!("C{}_{i}", d + 1))) })
            }));
            out.push(self.head(format!("CLR{idx}"), bot(), Rule::cond(vec![v("Tp4")], vec![body], bot())));
        }
        out
    }

    fn color_reduction(&mut self) -> Vec<String> {
        let delta = self.p.delta;
        let width = 2 * delta;
        let bits = self.p.final_bits();
        let loops = self.p.loops();
        let end3 = v("Tp4");
        let (crp, cc) = (v("CRp"), v("CC"));
        let ta = |j: usize| v(format!("Ta{j}"));
        let tb = |j: usize| v(format!("Tb{j}"));
        let b = |x: usize| v(format!("B{x}"));
        let nb = |d: usize, x: usize| v(format!("Bp{d}_{x}"));
        let avail = |c: usize| v(format!("L{c}"));
        let mut halted = vec![];
        let prev = |x: usize| if x == 1 { width } else { x - 1 };

        for x in 1..=width {
            let (f, g) = (x.div_ceil(2), x + 2 - 2 * x.div_ceil(2));
            let new = if x <= bits { or_all((1..=delta + 1).filter(|c| c >> (x - 1) & 1 == 1).map(avail)) } else { bot() };
            let rule = Rule::cond(
                vec![v("G"), tb(1), ta(1), end3.clone()],
                vec![new, b(x), b(prev(x)), or(v(format!("C{f}_{g}")), v(format!("C{f}_3")))],
                bot(),
            );
            halted.push(self.head(format!("B{x}"), bot(), rule));
        }
        for j in 1..=width {
            let rule = if j == 1 {
                Rule::cond(vec![crp.clone(), ta(1)], vec![top(), top()], bot())
            } else {
                Rule::cond(vec![crp.clone(), ta(j - 1)], vec![bot(), top()], bot())
            };
            halted.push(self.head(format!("Ta{j}"), bot(), rule));
        }
        for j in 1..=delta + 1 {
            let before = if j == 1 { ta(width) } else { tb(j - 1) };
            halted.push(self.head(format!("Tb{j}"), bot(), Rule::cond(vec![crp.clone(), before], vec![bot(), top()], bot())));
        }
        for j in 1..=loops {
            let me = v(format!("LP{j}"));
            let rule = if j == 1 {
                Rule::cond(vec![me, crp.clone()], vec![top(), top()], bot())
            } else {
                Rule::cond(vec![me, cc.clone()], vec![top(), v(format!("LP{}", j - 1))], bot())
            };
            halted.push(self.head(format!("LP{j}"), bot(), rule));
        }
        halted.push(self.head("CC", bot(), Rule::cond(vec![or(crp.clone(), cc.clone()), tb(delta + 1)], vec![bot(), top()], bot())));
        let rule = Rule::cond(vec![cc.clone(), or(crp.clone(), ta(1)), end3], vec![top(), bot(), top()], bot());
        halted.push(self.head("CRp", bot(), rule));
        for d in 1..=delta {
            for x in 1..=width {
                let rule = Rule::cond(vec![crp.clone(), tb(1), ta(1)], vec![dia_i(d, b(x)), nb(d, x), nb(d, prev(x))], bot());
                halted.push(self.head(format!("Bp{d}_{x}"), bot(), rule));
            }
        }
        for d in 1..=delta {
            let rule = Rule::cond(vec![crp.clone(), ta(1)], vec![bot(), not(iff(b(width), nb(d, width)))], bot());
            halted.push(self.head(format!("DIFp{d}"), bot(), rule));
        }
        for d in 1..=delta {
            for (name, other, bit) in [("HIGHp", "LOWp", b(1)), ("LOWp", "HIGHp", not(b(1)))] {
                let rule = Rule::cond(
                    vec![crp.clone(), v(format!("{name}{d}")), v(format!("{other}{d}")), v(format!("DIFp{d}"))],
                    vec![bot(), top(), bot(), bit],
                    bot(),
                );
                halted.push(self.head(format!("{name}{d}"), bot(), rule));
            }
        }
        let all_higher = and_all((1..=delta).map(|d| v(format!("HIGHp{d}"))));
        // As printed the flag fires again one round after CR', before the
        // timers and comparison results are cleared, and cancels a rotation.
        let quiet = if self.p.printed_rules { cc.clone() } else { or(cc.clone(), crp.clone()) };
        halted.push(self.head("G", bot(), Rule::cond(vec![quiet, tb(delta + 1)], vec![bot(), all_higher], bot())));
        for c in 1..=delta + 1 {
            let free = and_all((1..=delta).map(|d| {
                let nbits: Vec<Schema> = (1..=bits).map(|x| nb(d, x)).collect();
                not(encodes(&nbits, c))
            }));
            let body = and(free, and_all((1..c).map(|j| not(avail(j)))));
            halted.push(self.head(format!("L{c}"), bot(), Rule::cond(vec![tb(c)], vec![body], bot())));
        }
        self.halts.push((v(format!("LP{loops}")), halted));

        let own: Vec<Schema> = (1..=bits).map(b).collect();
        (1..=delta + 1)
            .map(|c| self.head(format!("CLR{c}"), bot(), Rule::cond(vec![v(format!("LP{loops}"))], vec![encodes(&own, c)], bot())))
            .collect()
    }

    fn finish(mut self, outputs: Vec<String>) -> Program {
        for (flag, heads) in std::mem::take(&mut self.halts) {
            for h in heads {
                let i = self.b.index(&h).expect("halted head exists");
                self.b.rules[i] = prepend_condition(&self.b.rules[i], flag.clone(), v(h));
            }
        }
        self.b.attention = outputs.clone();
        self.b.print = outputs;
        self.b.build().expect("generated coloring program is valid")
    }
}

/// The program for one stage of the coloring pipeline.
pub fn generate_cv(params: &CvParams, stage: Stage) -> Program {
    let mut g = Gen::new(*params);
    g.identifiers();
    g.reduction();
    let outputs = match stage {
        Stage::Seven => g.seven_outputs(),
        Stage::Three => {
            g.shift_down();
            g.three_outputs()
        }
        Stage::Final => {
            g.shift_down();
            g.color_reduction()
        }
    };
    g.finish(outputs)
}

pub fn generate_cv7(params: &CvParams) -> Program {
    generate_cv(params, Stage::Seven)
}

pub fn generate_cv_full(params: &CvParams) -> Program {
    generate_cv(params, Stage::Final)
}

/// Outputs of a coloring run, indexed by node handle (`id - 1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColoringResult {
    pub colors: Vec<Option<Vec<bool>>>,
}

impl ColoringResult {
    pub fn from_trace(trace: &Trace) -> ColoringResult {
        ColoringResult { colors: (0..trace.node_count()).map(|w| trace.output(w)).collect() }
    }

    /// A one-hot output for each color `1..=k`.
    pub fn from_colors(colors: &[usize], k: usize) -> ColoringResult {
        ColoringResult { colors: colors.iter().map(|&c| Some((1..=k).map(|i| i == c).collect())).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColoringVerdict {
    /// Every output has exactly one set bit.
    pub one_hot: bool,
    /// Every set bit sits among the first `k` positions.
    pub within_palette: bool,
    pub proper: bool,
    /// Nodes whose output is not of the form `0^a 1 0^b`.
    pub malformed: Vec<usize>,
    /// Edges, as node handles, joining equal outputs.
    pub conflicts: Vec<(usize, usize)>,
    /// Positions of the set bit that occur.
    pub palette_used: BTreeSet<usize>,
}

impl ColoringVerdict {
    pub fn ok(&self) -> bool {
        self.one_hot && self.within_palette && self.proper
    }
}

/// Checks that `result` defines a proper `k`-coloring of `graph`.
pub fn check_coloring(result: &ColoringResult, graph: &Graph, k: usize) -> Result<ColoringVerdict, CvError> {
    let mut colors = vec![];
    for (w, c) in result.colors.iter().enumerate() {
        colors.push(c.as_ref().ok_or(CvError::MissingOutput(w))?);
    }
    let mut malformed = vec![];
    let mut within_palette = true;
    let mut palette_used = BTreeSet::new();
    for (w, c) in colors.iter().enumerate() {
        let ones: Vec<usize> = c.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect();
        if ones.len() != 1 {
            malformed.push(w);
            continue;
        }
        palette_used.insert(ones[0]);
        if ones[0] >= k {
            within_palette = false;
        }
    }
    let conflicts: Vec<(usize, usize)> =
        graph.edges.iter().map(|&(u, v)| (u - 1, v - 1)).filter(|&(u, v)| colors[u] == colors[v]).collect();
    Ok(ColoringVerdict { one_hot: malformed.is_empty(), within_palette, proper: conflicts.is_empty(), malformed, conflicts, palette_used })
}

/// A generated program run on a graph.
#[derive(Debug, Clone)]
pub struct CvRun {
    pub result: ColoringResult,
    pub comm_rounds: usize,
    /// Latest round at which a node first raised an output.
    pub finish_round: Option<usize>,
    pub trace: Trace,
}

/// Rounds after which every node of a `stage` program has answered.
pub fn round_budget(params: &CvParams, stage: Stage) -> usize {
    let hour = 3 * (1usize << params.clock_len()) - 1;
    let mut r = params.ell() + 3 + (params.hours() + 1) * hour + 3;
    if stage != Stage::Seven {
        r += 14;
    }
    if stage == Stage::Final {
        r += params.loops() * (3 * params.delta + 3) + 4;
    }
    r + 4
}

pub fn run_cv(program: &Program, params: &CvParams, stage: Stage, graph: &Graph) -> Result<CvRun, CvError> {
    if graph.n != params.n {
        return Err(CvError::NodeCountMismatch { expected: params.n, got: graph.n });
    }
    if graph.max_degree() > params.delta {
        return Err(CvError::DegreeAboveDelta { degree: graph.max_degree(), delta: params.delta });
    }
    let model = graph_to_kripke(graph)?;
    let trace = run(program, &model, round_budget(params, stage))?;
    let result = ColoringResult::from_trace(&trace);
    let finish_round = (0..trace.node_count()).map(|w| trace.acceptance_round(w)).collect::<Option<Vec<_>>>().and_then(|v| v.into_iter().max());
    Ok(CvRun { result, comm_rounds: trace.comm_rounds().len(), finish_round, trace })
}

/// `neighbour i is higher` relations read from a trace once the identifier
/// comparison has settled; `[node][i - 1]` over existing neighbours.
pub fn program_orientation(trace: &Trace, params: &CvParams, graph: &Graph) -> Vec<Vec<bool>> {
    let r = params.ell() + 2;
    (0..graph.n)
        .map(|w| {
            (1..=graph.neighbors(w + 1).len()).map(|i| trace.bit(r, w, &format!("LOW{i}")).unwrap_or(false)).collect()
        })
        .collect()
}

/// One identifier-reduction step: the 1-based position of the lowest bit in
/// which `own` differs from `parent`, doubled, plus that bit of `own`.
pub fn cv_step(own: usize, parent: usize) -> usize {
    let diff = own ^ parent;
    assert!(diff != 0, "adjacent colors must differ");
    let pos = diff.trailing_zeros() as usize;
    2 * (pos + 1) + (own >> pos & 1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleRounds {
    pub identifiers: usize,
    pub shift_down: usize,
    pub reduction: usize,
}

impl OracleRounds {
    pub fn total(&self) -> usize {
        self.identifiers + self.shift_down + self.reduction
    }
}

/// The coloring algorithm executed directly on a graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleRun {
    /// `[node][i - 1]`: neighbour `i` in ascending id order has a higher id.
    pub higher: Vec<Vec<bool>>,
    /// `[forest - 1][node]`.
    pub parents: Vec<Vec<Option<usize>>>,
    /// Colors after identifier reduction, `[node][forest - 1]`.
    pub seven: Vec<Vec<usize>>,
    /// Colors after shift-down.
    pub three: Vec<Vec<usize>>,
    /// Final colors in `1..=delta+1`.
    pub colors: Vec<usize>,
    pub rounds: OracleRounds,
}

pub fn direct_cv_oracle(graph: &Graph, delta: usize) -> Result<OracleRun, CvError> {
    graph.check()?;
    if graph.max_degree() > delta {
        return Err(CvError::DegreeAboveDelta { degree: graph.max_degree(), delta });
    }
    let n = graph.n;
    let hours = log_star(n as u64) + 3;
    let nbrs: Vec<Vec<usize>> = (1..=n).map(|id| graph.neighbors(id).into_iter().map(|u| u - 1).collect()).collect();
    let higher: Vec<Vec<bool>> = (0..n).map(|w| nbrs[w].iter().map(|&u| u > w).collect()).collect();
    let parents: Vec<Vec<Option<usize>>> = (1..=delta)
        .map(|d| (0..n).map(|w| nbrs[w].iter().copied().filter(|&u| u > w).nth(d - 1)).collect())
        .collect();

    let mut seven = vec![vec![0; delta]; n];
    for d in 0..delta {
        let mut c: Vec<usize> = (1..=n).collect();
        for _ in 0..hours {
            c = (0..n).map(|w| cv_step(c[w], parents[d][w].map_or(0, |u| c[u]))).collect();
        }
        for w in 0..n {
            seven[w][d] = c[w];
        }
    }

    let mut three = vec![vec![0; delta]; n];
    for d in 0..delta {
        let mut c: Vec<usize> = (0..n).map(|w| seven[w][d]).collect();
        for _ in 0..4 {
            let old = c.clone();
            let inherited: Vec<usize> =
                (0..n).map(|w| match parents[d][w] { Some(u) => old[u], None => if old[w] == 1 { 2 } else { 1 } }).collect();
            // A node compares with the color it handed to its children and
            // with its parent's new color.
            c = (0..n)
                .map(|w| {
                    let above = parents[d][w].map_or(0, |u| inherited[u]);
                    let me = inherited[w];
                    if me >= 3 && me > old[w] && me > above {
                        (1..=3).find(|&x| x != old[w] && x != above).expect("three colors")
                    } else {
                        me
                    }
                })
                .collect();
        }
        for w in 0..n {
            three[w][d] = c[w];
        }
    }

    let mut val: Vec<usize> = (0..n).map(|w| three[w].iter().rev().fold(0, |acc, &x| acc * 4 + x)).collect();
    let mut loops = 0;
    while val.iter().any(|&x| x > delta + 1) {
        let old = val.clone();
        for w in 0..n {
            if nbrs[w].iter().all(|&u| old[w] > old[u]) {
                val[w] = (1..=delta + 1).find(|c| nbrs[w].iter().all(|&u| old[u] != *c)).expect("a free color");
            }
        }
        loops += 1;
    }
    let rounds = OracleRounds { identifiers: 1 + hours, shift_down: 8, reduction: loops };
    Ok(OracleRun { higher, parents, seven, three, colors: val, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewrite_matches_the_prose_on_three_bit_pairs() {
        for own in 0..8usize {
            for parent in 0..8usize {
                if own == parent {
                    continue;
                }
                let i = (0..3).find(|&i| (own >> i & 1) != (parent >> i & 1)).unwrap();
                assert_eq!(cv_step(own, parent), 2 * (i + 1) + (own >> i & 1));
            }
        }
        assert_eq!(cv_step(0b010, 0b110), 2 * 3);
    }

    #[test]
    fn log_star_values() {
        assert_eq!([2, 3, 4, 16, 17, 65536, 65537].map(log_star), [1, 2, 2, 3, 4, 4, 5]);
    }

    #[test]
    fn single_edge_oracle() {
        let g = Graph::path(2);
        let o = direct_cv_oracle(&g, 1).unwrap();
        assert_eq!(o.parents[0], vec![Some(1), None]);
        assert_ne!(o.colors[0], o.colors[1]);
        assert!(o.colors.iter().all(|&c| (1..=2).contains(&c)));
    }

    fn cv_ok(g: &Graph, delta: usize, stage: Stage) -> CvRun {
        let p = CvParams::new(g.n, delta).unwrap();
        let prog = generate_cv(&p, stage);
        let run = run_cv(&prog, &p, stage, g).unwrap();
        let v = check_coloring(&run.result, g, p.palette(stage)).unwrap();
        assert!(v.ok(), "{stage:?} n={} {:?} {v:?}", g.n, g.edges);
        assert_eq!(run.comm_rounds, p.expected_rounds(stage), "{stage:?} n={}", g.n);
        run
    }

    #[test]
    fn seven_stage_on_small_graphs() {
        cv_ok(&Graph::path(2), 1, Stage::Seven);
        cv_ok(&Graph::path(5), 2, Stage::Seven);
        cv_ok(&Graph::cycle(6), 2, Stage::Seven);
    }

    #[test]
    fn final_stage_on_a_cycle() {
        cv_ok(&Graph::cycle(6), 2, Stage::Final);
    }

    #[test]
    fn check_coloring_shapes() {
        let g = Graph::new(2, vec![]).unwrap();
        let r = ColoringResult::from_colors(&[1, 1], 2);
        assert!(check_coloring(&r, &g, 2).unwrap().ok());
        let g = Graph::path(2);
        assert!(!check_coloring(&r, &g, 2).unwrap().proper);
    }
}
