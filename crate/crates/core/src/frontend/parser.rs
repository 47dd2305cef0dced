//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' '-'? INT)?
//! atom   := INT ('/' INT)?
//!         | 'd' '(' expr ';' IDENT ')'
//!         | 'E' '(' expr ')'              -- operator context only
//!         | IDENT '*'? ('[' index (',' index)* ']')?
//!         | '(' expr ')'
//! index  := IDENT | '-'? INT
//! ```

use num_bigint::BigInt;

use super::lexer::{Spanned, Tok};
use crate::error::{ParseError, ParseErrorKind, SourcePos};
use crate::graded::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum IndexTok {
    Letter(String, SourcePos),
    Value(i64, SourcePos),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(Rational),
    Sym { name: String, star: bool, indices: Vec<IndexTok>, pos: SourcePos },
    Deriv { inner: Box<Node>, var: String, pos: SourcePos },
    Marker { inner: Box<Node>, pos: SourcePos },
    Neg(Box<Node>),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Pow { base: Box<Node>, exp: i32, pos: SourcePos },
}

pub struct Parser<'a> {
    toks: &'a [Spanned],
    at: usize,
    markers: bool,
}

impl<'a> Parser<'a> {
    /// `markers` enables the `E(...)` form used by operator specifications.
    pub fn new(toks: &'a [Spanned], markers: bool) -> Self {
        Parser { toks, at: 0, markers }
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.at + k).min(self.toks.len() - 1)].tok
    }

    pub fn pos(&self) -> SourcePos {
        self.toks[self.at].pos.clone()
    }

    pub fn bump(&mut self) -> Spanned {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    pub fn error(&self, expected: &[&str]) -> ParseError {
        ParseError::new(
            self.pos(),
            ParseErrorKind::Syntax {
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: self.peek().describe(),
            },
        )
    }

    pub fn expect(&mut self, tok: Tok, label: &str) -> Result<Spanned, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            Err(self.error(&[label]))
        }
    }

    pub fn ident(&mut self) -> Result<(String, SourcePos), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    pub fn at_end(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    /// Parses a complete expression and requires the input to end there.
    pub fn parse_all(&mut self) -> Result<Node, ParseError> {
        let e = self.expr()?;
        if !self.at_end() {
            return Err(self.error(&["`+`", "`-`", "`*`", "end of input"]));
        }
        Ok(e)
    }

    pub fn expr(&mut self) -> Result<Node, ParseError> {
        let mut parts = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    parts.push(self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    parts.push(Node::Neg(Box::new(self.term()?)));
                }
                _ => break,
            }
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Node::Sum(parts) })
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut factors = vec![self.unary()?];
        while *self.peek() == Tok::Star {
            self.bump();
            factors.push(self.unary()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Node::Product(factors) })
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let pos = self.pos();
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                n
            }
            _ => return Err(self.error(&["integer exponent"])),
        };
        let exp: i32 = i32::try_from(&n).map_err(|_| {
            ParseError::new(pos.clone(), ParseErrorKind::Semantic("exponent too large".into()))
        })?;
        Ok(Node::Pow { base: Box::new(base), exp: if negative { -exp } else { exp }, pos })
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let d = match self.peek().clone() {
                        Tok::Int(d) if d != BigInt::from(0) => d,
                        _ => return Err(self.error(&["nonzero denominator"])),
                    };
                    self.bump();
                    Ok(Node::Num(Rational::new(n, d)))
                } else {
                    Ok(Node::Num(Rational::from_integer(n)))
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) if name == "d" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                // errors about the derivative point at its variable
                let (var, pos) = self.ident()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Node::Deriv { inner: Box::new(inner), var, pos })
            }
            Tok::Ident(name) if self.markers && name == "E" && *self.peek_at(1) == Tok::LParen => {
                let pos = self.pos();
                self.bump();
                self.bump();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Node::Marker { inner: Box::new(inner), pos })
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                self.bump();
                let star = if *self.peek() == Tok::AntiStar {
                    self.bump();
                    true
                } else {
                    false
                };
                let indices = if *self.peek() == Tok::LBracket { self.index_list()? } else { Vec::new() };
                Ok(Node::Sym { name, star, indices, pos })
            }
            _ => Err(self.error(&["number", "identifier", "`(`", "`-`", "`d(`"])),
        }
    }

    pub fn index_list(&mut self) -> Result<Vec<IndexTok>, ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let mut out = vec![self.index()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.index()?);
        }
        self.expect(Tok::RBracket, "`]`")?;
        Ok(out)
    }

    fn index(&mut self) -> Result<IndexTok, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(IndexTok::Letter(s, pos))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(IndexTok::Value(to_i64(&n, &pos)?, pos))
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Int(n) => {
                        self.bump();
                        Ok(IndexTok::Value(-to_i64(&n, &pos)?, pos))
                    }
                    _ => Err(self.error(&["integer"])),
                }
            }
            _ => Err(self.error(&["index letter", "integer"])),
        }
    }

    /// Signed rational literal such as `-1/2` or `3`.
    pub fn signed_rational(&mut self) -> Result<Rational, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let n = match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                n
            }
            _ => return Err(self.error(&["number"])),
        };
        let mut q = Rational::from_integer(n);
        if *self.peek() == Tok::Slash {
            self.bump();
            match self.peek().clone() {
                Tok::Int(d) if d != BigInt::from(0) => {
                    self.bump();
                    q /= Rational::from_integer(d);
                }
                _ => return Err(self.error(&["nonzero denominator"])),
            }
        }
        Ok(if negative { -q } else { q })
    }
}

pub fn to_i64(n: &BigInt, pos: &SourcePos) -> Result<i64, ParseError> {
    i64::try_from(n)
        .map_err(|_| ParseError::new(pos.clone(), ParseErrorKind::Semantic("integer too large".into())))
}

#[cfg(test)]
mod tests {
    use super::super::lexer::tokenize;
    use super::*;

    fn parse(s: &str) -> Result<Node, ParseError> {
        let toks = tokenize(s, 1, 1)?;
        Parser::new(&toks, true).parse_all()
    }

    #[test]
    fn precedence() {
        let n = parse("-1/4 * F[mu,nu]^2 + d(u;t)").unwrap();
        let Node::Sum(parts) = n else { panic!("expected sum") };
        assert_eq!(parts.len(), 2);
        let Node::Product(factors) = &parts[0] else { panic!("expected product") };
        assert!(matches!(factors[0], Node::Neg(_)));
        assert!(matches!(parts[1], Node::Deriv { .. }));
    }

    #[test]
    fn unclosed_derivative_reports_position() {
        let err = parse("d(u;t").unwrap_err();
        assert_eq!(err.pos, SourcePos { line: 1, column: 6 });
        match err.kind {
            ParseErrorKind::Syntax { expected, .. } => assert_eq!(expected, vec!["`)`".to_string()]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn markers_only_when_enabled() {
        let toks = tokenize("E(u)", 1, 1).unwrap();
        assert!(Parser::new(&toks, false).parse_all().is_err());
        assert!(matches!(Parser::new(&toks, true).parse_all().unwrap(), Node::Marker { .. }));
    }
}
