use super::{and, bot, dia, iff, implies, not, or, var, Program, Rule, Schema, SyntaxError, Variant};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Num(usize),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    Dia,
    DiaI(usize),
    Not,
    And,
    Or,
    Implies,
    Iff,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> SyntaxError {
    SyntaxError::Parse { line, col, msg: msg.into() }
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, SyntaxError> {
        let mut out = vec![];
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '#' || (c == '/' && self.src[self.chars.peek().unwrap().0..].starts_with("//")) {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            } else if c.is_ascii_digit() {
                let mut s = String::new();
                while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                    s.push(c);
                    self.bump();
                }
                Tok::Num(s.parse().map_err(|_| err(line, col, "number too large"))?)
            } else {
                self.bump();
                match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ';' => Tok::Semi,
                    ',' => Tok::Comma,
                    '!' => Tok::Not,
                    '&' => Tok::And,
                    '|' => Tok::Or,
                    ':' => {
                        if self.bump() != Some('=') {
                            return Err(err(line, col, "expected `:=`"));
                        }
                        Tok::Assign
                    }
                    '-' => {
                        if self.bump() != Some('>') {
                            return Err(err(line, col, "expected `->`"));
                        }
                        Tok::Implies
                    }
                    '<' => match self.peek() {
                        Some('>') => {
                            self.bump();
                            Tok::Dia
                        }
                        Some('-') => {
                            self.bump();
                            if self.bump() != Some('>') {
                                return Err(err(line, col, "expected `<->`"));
                            }
                            Tok::Iff
                        }
                        Some(d) if d.is_ascii_digit() => {
                            let mut s = String::new();
                            while let Some(c) = self.peek().filter(char::is_ascii_digit) {
                                s.push(c);
                                self.bump();
                            }
                            if self.bump() != Some('>') {
                                return Err(err(line, col, "expected `>` closing an indexed diamond"));
                            }
                            let i: usize = s.parse().map_err(|_| err(line, col, "index too large"))?;
                            if i == 0 {
                                return Err(err(line, col, "diamond indices start at 1"));
                            }
                            Tok::DiaI(i)
                        }
                        _ => return Err(err(line, col, "expected `<>`, `<i>` or `<->`")),
                    },
                    other => return Err(err(line, col, format!("unexpected character `{other}`"))),
                }
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }


    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        let (l, c) = self.here();
        Err(err(l, c, msg))
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), SyntaxError> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            self.fail(format!("expected {what}"))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.fail("expected an identifier"),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        let mut out = vec![];
        if matches!(self.peek(), Some(Tok::Semi) | Some(Tok::RBrace)) {
            return Ok(out);
        }
        out.push(self.ident()?);
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            out.push(self.ident()?);
        }
        Ok(out)
    }

    // formula := imp ('<->' imp)*
    fn formula(&mut self) -> Result<Schema, SyntaxError> {
        let mut lhs = self.implication()?;
        while self.peek() == Some(&Tok::Iff) {
            self.pos += 1;
            let rhs = self.implication()?;
            lhs = iff(lhs, rhs);
        }
        Ok(lhs)
    }

    // imp := disj ('->' imp)?   (right associative)
    fn implication(&mut self) -> Result<Schema, SyntaxError> {
        let lhs = self.disjunction()?;
        if self.peek() == Some(&Tok::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Schema, SyntaxError> {
        let mut lhs = self.conjunction()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Schema, SyntaxError> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Schema, SyntaxError> {
        match self.next() {
            Some(Tok::Not) => Ok(not(self.unary()?)),
            Some(Tok::Dia) => Ok(dia(self.unary()?)),
            Some(Tok::DiaI(i)) => Ok(Schema::DiaI(i, Box::new(self.unary()?))),
            Some(Tok::LParen) => {
                let f = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Some(Tok::Ident(s)) if s == "T" => Ok(Schema::Top),
            Some(Tok::Ident(s)) if s == "F" => Ok(bot()),
            Some(Tok::Ident(s)) => Ok(Schema::Prop(s)),
            _ => {
                self.pos -= 1;
                self.fail("expected a formula")
            }
        }
    }
}

/// Turns identifiers naming heads into variables.
fn resolve(s: &Schema, heads: &[String]) -> Schema {
    s.rewrite(&mut |x| match x {
        Schema::Prop(p) if heads.contains(&p) => var(p),
        other => other,
    })
}

/// Parses the program DSL.
///
/// ```text
/// cmsc {
///   X(0) := p;
///   X :=[q, !q] <>X; X; F;
///   attention X; print X;
/// }
/// ```
pub fn parse_program(text: &str) -> Result<Program, SyntaxError> {
    let lexer = Lexer { chars: text.char_indices().peekable(), src: text, line: 1, col: 1 };
    let toks = lexer.tokens()?;
    let lines = text.lines().count().max(1);
    let mut p = Parser { toks, pos: 0, end: (lines, text.lines().last().map(|l| l.len() + 1).unwrap_or(1)) };

    let kw = p.ident()?;
    let variant = Variant::from_keyword(&kw).map_or_else(|| p.fail("expected msc, mmsc, cmsc or mpmsc"), Ok)?;
    p.expect(Tok::LBrace, "`{`")?;

    let mut order: Vec<String> = vec![];
    let mut terminals: Vec<(String, Schema, (usize, usize))> = vec![];
    let mut rules: Vec<(String, Rule, (usize, usize))> = vec![];
    let mut attention = vec![];
    let mut print = vec![];
    let mut explicit_order: Option<Vec<String>> = None;

    loop {
        match p.peek() {
            Some(Tok::RBrace) => {
                p.pos += 1;
                break;
            }
            None => return p.fail("unexpected end of input, expected `}`"),
            Some(Tok::Semi) => {
                p.pos += 1;
                continue;
            }
            _ => {}
        }
        let at = p.here();
        let name = p.ident()?;
        match (name.as_str(), p.peek()) {
            ("attention", Some(Tok::Ident(_) | Tok::Semi | Tok::RBrace)) => attention.extend(p.ident_list()?),
            ("print", Some(Tok::Ident(_) | Tok::Semi | Tok::RBrace)) => print.extend(p.ident_list()?),
            ("order", Some(Tok::Ident(_) | Tok::Semi | Tok::RBrace)) => explicit_order = Some(p.ident_list()?),
            (_, Some(Tok::LParen)) => {
                p.pos += 1;
                if p.next() != Some(Tok::Num(0)) {
                    p.pos -= 1;
                    return p.fail("expected `0` in a terminal clause head");
                }
                p.expect(Tok::RParen, "`)`")?;
                p.expect(Tok::Assign, "`:=`")?;
                let body = p.formula()?;
                if terminals.iter().any(|(h, _, _)| *h == name) {
                    return Err(err(at.0, at.1, format!("second terminal clause for `{name}`")));
                }
                if !order.contains(&name) {
                    order.push(name.clone());
                }
                terminals.push((name, body, at));
            }
            (_, Some(Tok::Assign)) => {
                p.pos += 1;
                let rule = if p.peek() == Some(&Tok::LBracket) {
                    p.pos += 1;
                    let mut conds = vec![p.formula()?];
                    while p.peek() == Some(&Tok::Comma) {
                        p.pos += 1;
                        conds.push(p.formula()?);
                    }
                    p.expect(Tok::RBracket, "`]`")?;
                    let mut conss = vec![];
                    for _ in 0..conds.len() {
                        conss.push(p.formula()?);
                        p.expect(Tok::Semi, "`;` between consequences")?;
                    }
                    let backup = p.formula()?;
                    Rule::cond(conds, conss, backup)
                } else {
                    Rule::Plain(p.formula()?)
                };
                if rules.iter().any(|(h, _, _)| *h == name) {
                    return Err(err(at.0, at.1, format!("second iteration clause for `{name}`")));
                }
                if !order.contains(&name) {
                    order.push(name.clone());
                }
                rules.push((name, rule, at));
            }
            _ => return p.fail("expected `(0) :=`, `:=`, or a declaration"),
        }
        match p.peek() {
            Some(Tok::Semi) => p.pos += 1,
            Some(Tok::RBrace) => {}
            _ => return p.fail("expected `;`"),
        }
    }
    if p.peek().is_some() {
        return p.fail("trailing input after `}`");
    }

    let heads = match explicit_order {
        Some(o) => {
            for h in &order {
                if !o.contains(h) {
                    return Err(SyntaxError::UnknownHead(format!("{h} (missing from order)")));
                }
            }
            for h in &o {
                if !order.contains(h) {
                    return Err(SyntaxError::UnknownHead(h.clone()));
                }
            }
            o
        }
        None => order,
    };
    let mut ts = vec![];
    let mut rs = vec![];
    for h in &heads {
        let t = terminals.iter().find(|(n, _, _)| n == h).ok_or_else(|| SyntaxError::MissingClause(h.clone(), "terminal"))?;
        let r = rules.iter().find(|(n, _, _)| n == h).ok_or_else(|| SyntaxError::MissingClause(h.clone(), "iteration"))?;
        let term = resolve(&t.1, &heads);
        if term.has_var() {
            return Err(SyntaxError::TerminalHasVar(h.clone()));
        }
        ts.push(term);
        rs.push(r.1.map(&mut |s| resolve(s, &heads)));
    }
    Program::new(variant, heads, ts, rs, &attention, &print)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{prop, top};

    #[test]
    fn one_head_program() {
        let p = parse_program("msc { X(0) := p; X := <>X; attention X; print X }").unwrap();
        assert_eq!(p.heads(), ["X"]);
        assert_eq!(p.terminal(0), &prop("p"));
        assert_eq!(p.rule(0), &Rule::Plain(dia(var("X"))));
        assert_eq!(p.attention(), [0]);
        assert_eq!(p.print(), [0]);
    }

    #[test]
    fn conditional_and_order() {
        let p = parse_program("cmsc { order Y, X; X(0) := T; X :=[p, q] Y; !X; F; Y(0) := F; Y := X | Y; }").unwrap();
        assert_eq!(p.heads(), ["Y", "X"]);
        assert_eq!(
            p.rule(1),
            &Rule::Cond { conds: vec![prop("p"), prop("q")], conss: vec![var("Y"), not(var("X"))], backup: bot() }
        );
        assert_eq!(p.terminal(1), &top());
    }

    #[test]
    fn errors_carry_positions() {
        match parse_program("msc {\n X(0) := p &;\n}") {
            Err(SyntaxError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_program("msc { X(0) := p; }"), Err(SyntaxError::MissingClause(_, "iteration"))));
        assert!(matches!(parse_program("msc { X(0) := X; X := X; }"), Err(SyntaxError::TerminalHasVar(_))));
        assert!(matches!(parse_program("msc { X(0) := p; X := X; attention Y }"), Err(SyntaxError::UnknownHead(_))));
    }

    #[test]
    fn sugar_desugars() {
        let p = parse_program("msc { X(0) := p -> q <-> r; X := X; }").unwrap();
        assert_eq!(p.terminal(0), &iff(implies(prop("p"), prop("q")), prop("r")));
    }
}
