//! Recursive-descent parser for coefficient expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' '-'? integer)?
//! base   := number | ident | '(' expr ')' | func '(' expr (';' expr (',' expr)*)? ')'
//! ```
//!
//! Functions: `sin cos exp tanh sqrt` (one argument), `bump(x; c, r)`,
//! `root(x; n)` for a positive integer `n`, and `gate(u; body)`. The
//! identifier `pi` is a built-in constant unless it is declared as a variable.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{Expr, Func};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownVariable { offset, .. }
            | ParseError::UnknownFunction { offset, .. } => *offset,
        }
    }
}

/// Parse `source`, accepting only identifiers listed in `allowed_vars`.
pub fn parse_expr(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    parse_expr_with(source, allowed_vars, &BTreeMap::new())
}

/// Like [`parse_expr`], with named constants substituted at parse time.
pub fn parse_expr_with(
    source: &str,
    allowed_vars: &[&str],
    constants: &BTreeMap<String, f64>,
) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        vars: allowed_vars,
        constants,
    };
    let e = parser.expr()?;
    match parser.peek() {
        Tok::End => Ok(e),
        other => Err(parser.syntax(format!("unexpected {}", other.describe()))),
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Semi,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::End => "end of input".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Comma => "`,`".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b';' => Tok::Semi,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{text}`"),
                })?;
                out.push((Tok::Num(value), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_owned()), start));
                continue;
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    constants: &'a BTreeMap<String, f64>,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].0
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].0.clone();
        if t != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn syntax(&self, message: String) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.syntax(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs.add(&self.term()?);
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs.sub(&self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs.mul(&self.unary()?);
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs.div(&self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() <= i32::MAX as f64 => {
                let n = v as i32;
                Ok(base.powi(if negative { -n } else { n }))
            }
            other => Err(ParseError::Syntax {
                offset: at,
                message: format!("expected integer exponent, found {}", other.describe()),
            }),
        }
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.call(name, at)
                } else {
                    self.identifier(name, at)
                }
            }
            other => Err(ParseError::Syntax {
                offset: at,
                message: format!("expected operand, found {}", other.describe()),
            }),
        }
    }

    fn identifier(&self, name: String, at: usize) -> Result<Expr, ParseError> {
        if self.vars.contains(&name.as_str()) {
            Ok(Expr::var(&name))
        } else if let Some(v) = self.constants.get(&name) {
            Ok(Expr::constant(*v))
        } else if name == "pi" {
            Ok(Expr::constant(std::f64::consts::PI))
        } else {
            Err(ParseError::UnknownVariable { name, offset: at })
        }
    }

    fn call(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen)?;
        let first = self.expr()?;
        let mut extra = Vec::new();
        if *self.peek() == Tok::Semi {
            self.bump();
            extra.push(self.expr()?);
            while *self.peek() == Tok::Comma {
                self.bump();
                extra.push(self.expr()?);
            }
        }
        let close = self.offset();
        self.expect(Tok::RParen)?;
        let arity = |want: usize| -> Result<(), ParseError> {
            if extra.len() == want {
                Ok(())
            } else {
                Err(ParseError::Syntax {
                    offset: close,
                    message: format!(
                        "`{name}` takes {} argument(s), got {}",
                        want + 1,
                        extra.len() + 1
                    ),
                })
            }
        };
        if let Some(func) = Func::from_name(&name) {
            arity(0)?;
            return Ok(Expr::apply(func, &first));
        }
        match name.as_str() {
            "bump" => {
                arity(2)?;
                Ok(Expr::bump(&first, &extra[0], &extra[1]))
            }
            "gate" => {
                arity(1)?;
                Ok(Expr::gate(&first, &extra[0]))
            }
            "root" => {
                arity(1)?;
                match extra[0].as_const() {
                    Some(n) if n >= 1.0 && n.fract() == 0.0 && n <= u32::MAX as f64 => {
                        Ok(first.root(n as u32))
                    }
                    _ => Err(ParseError::Syntax {
                        offset: close,
                        message: "root degree must be a positive integer constant".into(),
                    }),
                }
            }
            _ => Err(ParseError::UnknownFunction { name, offset: at }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::VariableBinding;
    use super::*;

    #[test]
    fn grammar_exercise() {
        let e = parse_expr("q1^2 + s1*q1", &["q1", "s1"]).unwrap();
        let vars: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(vars, ["q1", "s1"]);
        let b = VariableBinding::new().with("q1", 2.0).with("s1", 3.0);
        assert_eq!(e.eval(&b).unwrap(), 10.0);
    }

    #[test]
    fn malformed_input_reports_offset() {
        let err = parse_expr("q1 +", &["q1"]).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn unknown_variable_is_named() {
        let err = parse_expr("sin(w)", &["q1"]).unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownVariable {
                name: "w".into(),
                offset: 4
            }
        );
    }

    #[test]
    fn precedence_and_unary_minus() {
        let b = VariableBinding::new().with("q1", 3.0);
        let e = parse_expr("-q1^2", &["q1"]).unwrap();
        assert_eq!(e.eval(&b).unwrap(), -9.0);
        let e = parse_expr("2 - 3 - 4", &[]).unwrap();
        assert_eq!(e.as_const(), Some(-5.0));
        let e = parse_expr("8 / 4 / 2", &[]).unwrap();
        assert_eq!(e.as_const(), Some(1.0));
        let e = parse_expr("q1^-2", &["q1"]).unwrap();
        assert!((e.eval(&b).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let e = parse_expr("1.5e-3 * 2", &[]).unwrap();
        assert_eq!(e.as_const(), Some(3e-3));
    }

    #[test]
    fn function_arities() {
        assert!(parse_expr("bump(q1; 0, 1)", &["q1"]).is_ok());
        assert!(matches!(
            parse_expr("bump(q1; 0)", &["q1"]),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("sin(q1; 2)", &["q1"]),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("root(q1; 1.5)", &["q1"]),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("log(q1)", &["q1"]),
            Err(ParseError::UnknownFunction { .. })
        ));
    }

    #[test]
    fn constants() {
        let mut consts = BTreeMap::new();
        consts.insert("omega".to_string(), 2.0);
        let e = parse_expr_with("omega * pi", &[], &consts).unwrap();
        assert!((e.as_const().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "(", "q1 q1", "q1 ^ q1", "3 $ 4", "sin q1", "q1)", "1..2"] {
            assert!(parse_expr(bad, &["q1"]).is_err(), "{bad}");
        }
    }
}
