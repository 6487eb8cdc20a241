use super::{Program, Rule, Schema};

/// Prints a schema in DSL syntax, re-sugaring `F`, `|`, `->` and `<->`.
pub fn print_schema(s: &Schema) -> String {
    let mut out = String::new();
    write(s, &mut out, true);
    out
}

fn as_implication(s: &Schema) -> Option<(&Schema, &Schema)> {
    if let Schema::Not(inner) = s {
        if let Schema::And(a, b) = inner.as_ref() {
            if let Schema::Not(b) = b.as_ref() {
                return Some((a, b));
            }
        }
    }
    None
}

fn write(s: &Schema, out: &mut String, top: bool) {
    let open = |out: &mut String| {
        if !top {
            out.push('(')
        }
    };
    let close = |out: &mut String| {
        if !top {
            out.push(')')
        }
    };
    match s {
        Schema::Top => out.push('T'),
        Schema::Prop(p) | Schema::Var(p) => out.push_str(p),
        Schema::Not(inner) => {
            if **inner == Schema::Top {
                out.push('F');
                return;
            }
            if let Some((a, b)) = as_implication(s) {
                open(out);
                if let Schema::Not(a) = a {
                    write(a, out, false);
                    out.push_str(" | ");
                } else {
                    write(a, out, false);
                    out.push_str(" -> ");
                }
                write(b, out, false);
                close(out);
                return;
            }
            out.push('!');
            write(inner, out, false);
        }
        Schema::And(a, b) => {
            if let (Some((x1, y1)), Some((y2, x2))) = (as_implication(a), as_implication(b)) {
                if x1 == x2 && y1 == y2 && !matches!(x1, Schema::Not(_)) && !matches!(y2, Schema::Not(_)) {
                    open(out);
                    write(x1, out, false);
                    out.push_str(" <-> ");
                    write(y1, out, false);
                    close(out);
                    return;
                }
            }
            open(out);
            write(a, out, false);
            out.push_str(" & ");
            write(b, out, false);
            close(out);
        }
        Schema::Dia(a) => {
            out.push_str("<>");
            write(a, out, false);
        }
        Schema::DiaI(i, a) => {
            out.push_str(&format!("<{i}>"));
            write(a, out, false);
        }
    }
}

fn names(p: &Program, idx: &[usize]) -> String {
    idx.iter().map(|&i| p.heads()[i].as_str()).collect::<Vec<_>>().join(", ")
}

pub(super) fn print_program(p: &Program) -> String {
    let mut out = format!("{} {{\n", p.variant());
    for (i, h) in p.heads().iter().enumerate() {
        out.push_str(&format!("  {h}(0) := {};\n", print_schema(p.terminal(i))));
        match p.rule(i) {
            Rule::Plain(b) => out.push_str(&format!("  {h} := {};\n", print_schema(b))),
            Rule::Cond { conds, conss, backup } => {
                let cs = conds.iter().map(print_schema).collect::<Vec<_>>().join(", ");
                out.push_str(&format!("  {h} :=[{cs}]"));
                for c in conss {
                    out.push_str(&format!(" {};", print_schema(c)));
                }
                out.push_str(&format!(" {};\n", print_schema(backup)));
            }
        }
    }
    if !p.attention().is_empty() {
        out.push_str(&format!("  attention {};\n", names(p, p.attention())));
    }
    if !p.print().is_empty() {
        out.push_str(&format!("  print {};\n", names(p, p.print())));
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    #[test]
    fn resugared_forms_round_trip() {
        let samples = [
            bot(),
            or(prop("a"), prop("b")),
            or(bot(), prop("b")),
            or(top(), not(prop("b"))),
            implies(prop("a"), prop("b")),
            iff(prop("a"), prop("b")),
            iff(not(prop("a")), prop("b")),
            and(not(and(prop("a"), not(prop("b")))), not(and(prop("c"), not(prop("a"))))),
            dia_i(3, not(not(top()))),
            dia(or(var("X"), prop("p"))),
        ];
        for s in samples {
            let kw = if s.has_indexed_diamond() { "mmsc" } else { "msc" };
            let text = format!("{kw} {{ X(0) := T; X := {}; }}", print_schema(&s));
            let p = parse_program(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert_eq!(p.rule(0), &Rule::Plain(s.clone()), "{text}");
        }
    }
}
