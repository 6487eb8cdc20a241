//! Minute/second-hand clocks and the indexed-diamond scanner built on them.

use std::collections::BTreeSet;

use super::add_fresh;
use crate::syntax::{and, and_all, bot, dia, iff, not, or_all, prop, top, var, Program, ProgramBuilder, Rule, Schema, Variant};

/// Head names of one clock; index 0 holds hand bit 1 (the rightmost).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clock {
    pub minute: Vec<String>,
    pub second: Vec<String>,
    pub changing: String,
}

impl Clock {
    /// Minute bit `i`, 1-based.
    pub fn m(&self, i: usize) -> Schema {
        var(self.minute[i - 1].clone())
    }

    pub fn s(&self, i: usize) -> Schema {
        var(self.second[i - 1].clone())
    }

    pub fn changing(&self) -> Schema {
        var(self.changing.clone())
    }

    pub fn len(&self) -> usize {
        self.minute.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minute.is_empty()
    }

    /// Every head, minute hand first.
    pub fn heads(&self) -> Vec<String> {
        self.minute.iter().chain(&self.second).chain(std::iter::once(&self.changing)).cloned().collect()
    }
}

/// Adds an `ell`-bit clock. `offset` 1 and 2 start the clock in the state the
/// basic clock reaches after one and two rounds.
pub fn add_clock(b: &mut ProgramBuilder, ell: usize, offset: usize, tag: &str, avoid: &mut BTreeSet<String>) -> Clock {
    assert!(ell >= 1 && offset <= 2);
    let reserve = |base: String, avoid: &mut BTreeSet<String>| {
        let n = b.fresh(&base, avoid);
        avoid.insert(n.clone());
        n
    };
    let minute: Vec<String> = (1..=ell).map(|i| reserve(format!("M{tag}{i}"), avoid)).collect();
    let second: Vec<String> = (1..=ell).map(|i| reserve(format!("S{tag}{i}"), avoid)).collect();
    let changing = reserve(format!("S{tag}changing"), avoid);
    let clock = Clock { minute, second, changing };
    let m = |i: usize| clock.m(i);
    let s = |i: usize| clock.s(i);
    let sc = clock.changing();

    for i in 1..=ell {
        let rule = if i == 1 {
            Rule::cond(vec![sc.clone()], vec![m(1)], not(m(1)))
        } else {
            let change = or_all([
                and(s(i), not(m(i))),
                and_all([s(i - 1), not(s(i)), not(m(i))]),
                and_all([not(s(i - 1)), not(s(i)), m(i)]),
            ]);
            Rule::cond(vec![sc.clone()], vec![m(i)], change)
        };
        let t = if i == 1 && offset >= 1 { top() } else { bot() };
        b.head(clock.minute[i - 1].clone(), t, rule);
    }
    for i in 1..=ell {
        let body = if i == 1 { m(1) } else { and(s(i - 1), m(i)) };
        let t = if i == 1 && offset == 2 { top() } else { bot() };
        b.head(clock.second[i - 1].clone(), t, Rule::cond(vec![sc.clone()], vec![body], bot()));
    }
    let differs = or_all(
        std::iter::once(not(iff(s(1), m(1)))).chain((2..=ell).map(|i| not(iff(s(i), and(s(i - 1), m(i)))))),
    );
    let t = if offset >= 1 { top() } else { bot() };
    b.head(clock.changing.clone(), t, Rule::cond(vec![sc.clone()], vec![differs], top()));
    clock
}

/// A standalone conditional program holding one clock.
pub fn build_clock(ell: usize, offset: usize) -> (Program, Clock) {
    let mut b = ProgramBuilder::new(Variant::Cmsc);
    let tag = ["", "f", "ff"][offset];
    let clock = add_clock(&mut b, ell, offset, tag, &mut BTreeSet::new());
    (b.build().expect("clock program is valid"), clock)
}

/// Heads that scan neighbour identifiers with three clocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiamondSimulator {
    pub basic: Clock,
    pub forward: Clock,
    pub double: Clock,
    pub reset: String,
    pub not_same: String,
    pub id: String,
    /// `found[i - 1]` is the flag for neighbour `i`.
    pub found: Vec<String>,
}

impl DiamondSimulator {
    pub fn add(b: &mut ProgramBuilder, id_bits: &[String], max_index: usize, avoid: &mut BTreeSet<String>) -> DiamondSimulator {
        let ell = id_bits.len();
        let basic = add_clock(b, ell, 0, "", avoid);
        let forward = add_clock(b, ell, 1, "f", avoid);
        let double = add_clock(b, ell, 2, "ff", avoid);
        let reset_body = and(and_all((1..=ell).map(|i| not(double.m(i)))), and_all((1..=ell).map(|i| forward.m(i))));
        let reset = add_fresh(b, "Xreset", avoid, bot(), Rule::Plain(reset_body));
        let not_same_body = or_all((1..=ell).map(|i| not(iff(basic.m(i), forward.m(i)))));
        let not_same = add_fresh(b, "Xnotsame", avoid, top(), Rule::Plain(not_same_body));
        let id_terminal = and_all(id_bits.iter().map(|p| not(prop(p.clone()))));
        let id_body = and_all((1..=ell).map(|i| iff(forward.m(i), prop(id_bits[i - 1].clone()))));
        let id = add_fresh(b, "XID", avoid, id_terminal, Rule::Plain(id_body));
        let mut found: Vec<String> = vec![];
        for i in 1..=max_index {
            let name = b.fresh(&format!("N{i}"), avoid);
            avoid.insert(name.clone());
            let me = var(name.clone());
            let mut second = vec![not(me.clone())];
            if i > 1 {
                second.push(var(found[i - 2].clone()));
            }
            second.push(var(not_same.clone()));
            let rule = Rule::cond(vec![var(reset.clone()), and_all(second)], vec![bot(), dia(var(id.clone()))], me);
            b.head(name.clone(), bot(), rule);
            found.push(name);
        }
        DiamondSimulator { basic, forward, double, reset, not_same, id, found }
    }

    /// `!N_i & N_{i-1} & <>(phi & X_ID)`, with `N_0` dropped.
    pub fn diamond(&self, i: usize, phi: Schema) -> Schema {
        let mut parts = vec![not(self.n(i))];
        if i > 1 {
            parts.push(self.n(i - 1));
        }
        parts.push(dia(and(phi, var(self.id.clone()))));
        and_all(parts)
    }

    pub fn n(&self, i: usize) -> Schema {
        var(self.found[i - 1].clone())
    }

    pub fn reset(&self) -> Schema {
        var(self.reset.clone())
    }

    pub fn not_same(&self) -> Schema {
        var(self.not_same.clone())
    }

    /// Round of the first reset flag for `ell` identifier bits.
    pub fn first_reset(ell: usize) -> usize {
        3 * ((1usize << ell) - 1)
    }

    /// Rounds between consecutive reset flags.
    pub fn cycle(ell: usize) -> usize {
        3 * (1usize << ell) - 1
    }
}

/// A standalone conditional program with the scanner for `max_index` neighbours.
pub fn build_diamond_simulator(id_bits: &[String], max_index: usize) -> (Program, DiamondSimulator) {
    let mut b = ProgramBuilder::new(Variant::Cmsc);
    let mut avoid: BTreeSet<String> = id_bits.iter().cloned().collect();
    let sim = DiamondSimulator::add(&mut b, id_bits, max_index, &mut avoid);
    (b.build().expect("scanner program is valid"), sim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::run;
    use crate::model::{KripkeModel, PropositionSet};

    fn hand(bits: &[bool], names: &[String], p: &Program) -> String {
        names.iter().rev().map(|n| if bits[p.head_index(n).unwrap()] { '1' } else { '0' }).collect()
    }

    #[test]
    fn forward_clocks_run_ahead() {
        let m = KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).unwrap();
        let (p0, c0) = build_clock(3, 0);
        let t0 = run(&p0, &m, 60).unwrap();
        for offset in 1..=2 {
            let (p, c) = build_clock(3, offset);
            let t = run(&p, &m, 50).unwrap();
            for r in 0..=50 {
                assert_eq!(hand(t.state(r, 0), &c.heads(), &p), hand(t0.state(r + offset, 0), &c0.heads(), &p0));
            }
        }
    }

    #[test]
    fn minute_hand_period() {
        let m = KripkeModel::new(PropositionSet::default(), 1, &[], &[vec![]]).unwrap();
        for ell in 1..=4 {
            let (p, c) = build_clock(ell, 0);
            let cyc = DiamondSimulator::cycle(ell);
            let t = run(&p, &m, 3 * cyc).unwrap();
            for r in 1..=cyc {
                assert_eq!(t.state(r, 0), t.state(r + cyc, 0), "ell {ell} round {r}");
            }
            let _ = c;
        }
    }
}
