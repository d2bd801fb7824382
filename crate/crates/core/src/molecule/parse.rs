use std::collections::BTreeSet;

use super::{validate, AtomKind, EdgeMarks, Endpoint, Molecule, MoleculeError, RMark};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Punct(char),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

impl Token {
    fn text(&self) -> String {
        match &self.tok {
            Tok::Ident(s) => s.clone(),
            Tok::Int(i) => i.to_string(),
            Tok::Punct(c) => c.to_string(),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, MoleculeError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(s), line: lineno + 1, col });
            } else if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v = s.parse::<i64>().map_err(|_| MoleculeError::Syntax {
                    line: lineno + 1,
                    col,
                    token: s.clone(),
                    message: "integer out of range".into(),
                })?;
                out.push(Token { tok: Tok::Int(v), line: lineno + 1, col });
            } else if ";.[],=()+-/".contains(c) {
                out.push(Token { tok: Tok::Punct(c), line: lineno + 1, col });
                i += 1;
            } else {
                return Err(MoleculeError::Syntax {
                    line: lineno + 1,
                    col,
                    token: c.to_string(),
                    message: "unexpected character".into(),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn error(&self, message: &str) -> MoleculeError {
        match self.toks.get(self.pos) {
            Some(t) => MoleculeError::Syntax {
                line: t.line,
                col: t.col,
                token: t.text(),
                message: message.into(),
            },
            None => MoleculeError::Syntax {
                line: self.end.0,
                col: self.end.1,
                token: "<eof>".into(),
                message: message.into(),
            },
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    fn punct(&mut self, c: char) -> Result<(), MoleculeError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("expected `{c}`"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, MoleculeError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), MoleculeError> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("expected `{kw}`"))),
        }
    }

    fn uint(&mut self, what: &str) -> Result<i64, MoleculeError> {
        match self.peek() {
            Some(Tok::Int(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.error(&format!("expected {what}"))),
        }
    }

    fn signed(&mut self, what: &str) -> Result<i64, MoleculeError> {
        let sign = match self.peek() {
            Some(Tok::Punct('-')) => {
                self.pos += 1;
                -1
            }
            Some(Tok::Punct('+')) => {
                self.pos += 1;
                1
            }
            _ => 1,
        };
        Ok(sign * self.uint(what)?)
    }

    fn small(&mut self, what: &str) -> Result<u32, MoleculeError> {
        let at = self.pos;
        let v = self.uint(what)?;
        u32::try_from(v).map_err(|_| {
            self.pos = at;
            self.error(&format!("{what} out of range"))
        })
    }

    fn atom_kind(&mut self) -> Result<AtomKind, MoleculeError> {
        let at = self.pos;
        let name = self.ident("atom kind")?;
        if name == "saddle" {
            self.punct('(')?;
            let g = self.small("genus")?;
            self.punct(',')?;
            let v = self.small("valence")?;
            self.punct(',')?;
            let s = self.small("star count")?;
            self.punct(')')?;
            return Ok(AtomKind::saddle(g, v, s));
        }
        AtomKind::builtin(&name).ok_or_else(|| {
            self.pos = at;
            self.error("unknown atom kind (expected A, B, C2, Astar or saddle(g,v,s))")
        })
    }

    fn endpoint(&mut self) -> Result<Endpoint, MoleculeError> {
        let atom = self.ident("atom id")?;
        self.punct('.')?;
        let slot = self.small("slot")?;
        Ok(Endpoint { atom, slot })
    }

    fn rmark(&mut self) -> Result<RMark, MoleculeError> {
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "inf" {
                self.pos += 1;
                return Ok(RMark::Infinite);
            }
        }
        let p = self.uint("r numerator")?;
        if let Some(Tok::Punct('/')) = self.peek() {
            self.pos += 1;
            let q = self.uint("r denominator")?;
            // kept unreduced so that validation can report it
            return Ok(RMark::Finite { p, q });
        }
        Ok(RMark::Finite { p, q: 1 })
    }

    fn assignment(&mut self, key: &str) -> Result<(), MoleculeError> {
        self.keyword(key)?;
        self.punct('=')
    }

    fn statement(&mut self, m: &mut Molecule) -> Result<(), MoleculeError> {
        let at = self.pos;
        let kw = self.ident("statement keyword")?;
        match kw.as_str() {
            "atom" => {
                let id = self.ident("atom id")?;
                let kind = self.atom_kind()?;
                if m.atoms.contains_key(&id) {
                    self.pos = at + 1;
                    return Err(self.error("duplicate atom id"));
                }
                m.atoms.insert(id, kind);
            }
            "edge" => {
                let from = self.endpoint()?;
                let to = self.endpoint()?;
                self.assignment("r")?;
                let r = self.rmark()?;
                self.assignment("eps")?;
                let eps = self.signed("eps")?;
                let eps = i8::try_from(eps).unwrap_or(i8::MAX);
                m.edges.push(super::Edge::new(from, to, EdgeMarks { r, eps }));
            }
            "family" => {
                self.punct('[')?;
                let mut atoms = BTreeSet::new();
                loop {
                    atoms.insert(self.ident("atom id")?);
                    match self.next() {
                        Some(Tok::Punct(',')) => continue,
                        Some(Tok::Punct(']')) => break,
                        _ => {
                            self.pos -= 1;
                            return Err(self.error("expected `,` or `]`"));
                        }
                    }
                }
                self.assignment("n")?;
                let n = self.signed("n")?;
                m.families.push(super::FamilyMark { atoms, n });
            }
            "meta" => {
                let key = self.ident("meta key")?;
                self.punct('=')?;
                let value = match self.next() {
                    Some(Tok::Ident(s)) => s,
                    Some(Tok::Int(i)) => i.to_string(),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected meta value"));
                    }
                };
                m.meta.insert(key, value);
            }
            _ => {
                self.pos = at;
                return Err(self.error("expected `atom`, `edge`, `family` or `meta`"));
            }
        }
        self.punct(';')
    }
}

/// Parses the molecule text format and validates the result.
///
/// ```text
/// atom a1 A; atom a2 A;
/// edge a1.1 a2.1 r=0 eps=+1;
/// family [b1,b2] n=-1;
/// ```
pub fn parse_molecule(text: &str) -> Result<Molecule, MoleculeError> {
    let m = parse_unchecked(text)?;
    let diags = validate(&m);
    if !diags.is_empty() {
        return Err(MoleculeError::Validation(diags));
    }
    Ok(m)
}

/// Parses without validating.
pub fn parse_unchecked(text: &str) -> Result<Molecule, MoleculeError> {
    let toks = lex(text)?;
    let end = (text.lines().count().max(1), text.lines().last().map_or(1, |l| l.len() + 1));
    let mut p = Parser { toks, pos: 0, end };
    let mut m = Molecule::new();
    while p.pos < p.toks.len() {
        p.statement(&mut m)?;
    }
    m.canonicalize();
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molecule::DiagnosticKind;

    #[test]
    fn parses_a_a() {
        let m = parse_molecule("atom a1 A; atom a2 A; edge a1.1 a2.1 r=0 eps=+1;").unwrap();
        let mut expected = Molecule::new();
        expected.add_atom("a1", AtomKind::A).add_atom("a2", AtomKind::A);
        expected.add_edge(("a1", 1), ("a2", 1), EdgeMarks::zero());
        assert_eq!(m, expected);
    }

    #[test]
    fn parses_all_statement_kinds() {
        let text = "# comment\nmeta id=25;\natom b B; atom c C2; atom s saddle(1,2,0); atom t Astar;\n\
                    edge b.1 c.1 r=inf eps=-1; family [b, c] n=-3;";
        let m = parse_unchecked(text).unwrap();
        assert_eq!(m.meta["id"], "25");
        assert_eq!(m.atoms["s"], AtomKind::saddle(1, 2, 0));
        assert_eq!(m.edges[0].marks, EdgeMarks::infinite(-1));
        assert_eq!(m.families[0].n, -3);
    }

    #[test]
    fn a_with_two_edges_is_rejected() {
        let err = parse_molecule(
            "atom a A; atom b A; atom c A; edge a.1 b.1 r=0 eps=+1; edge a.1 c.1 r=0 eps=+1;",
        )
        .unwrap_err();
        match err {
            MoleculeError::Validation(d) => {
                assert!(d.iter().any(|d| d.kind == DiagnosticKind::SlotUsage));
            }
            e => panic!("unexpected {e:?}"),
        }
        let err = parse_molecule("atom a A; atom b A; edge a.2 b.1 r=0 eps=+1;").unwrap_err();
        assert!(matches!(err, MoleculeError::Validation(_)));
    }

    #[test]
    fn syntax_errors_report_position() {
        let err = parse_molecule("atom a1 A;\natom a2 Q;").unwrap_err();
        assert_eq!(
            err,
            MoleculeError::Syntax {
                line: 2,
                col: 9,
                token: "Q".into(),
                message: "unknown atom kind (expected A, B, C2, Astar or saddle(g,v,s))".into()
            }
        );
        assert!(matches!(parse_molecule("atom a1 A"), Err(MoleculeError::Syntax { .. })));
        assert!(matches!(
            parse_molecule("atom a A; atom b A; edge a.1 b.1 r=0 eps=*1;"),
            Err(MoleculeError::Syntax { .. })
        ));
    }

    #[test]
    fn serialize_is_byte_stable() {
        let text = "atom z A; atom a A; edge z.1 a.1 r=1/2 eps=-1;";
        let m = parse_molecule(text).unwrap();
        let s = m.serialize();
        assert_eq!(s, "atom a A;\natom z A;\nedge z.1 a.1 r=1/2 eps=-1;\n");
        assert_eq!(parse_molecule(&s).unwrap().serialize(), s);
    }
}
