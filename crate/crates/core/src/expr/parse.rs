//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | 'x' | 'i' | 'pi' | 'e'
//!         | ('exp'|'log'|'ln') '(' expr ')' | '(' expr ')' | '-' base
//! ```
//!
//! The parser builds the tree exactly as written; no folding happens here.

use num_complex::Complex64;
use thiserror::Error;

use super::Expr;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(u64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer {
            src: text.as_bytes(),
            pos: 0,
        };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let Some(&b) = lx.src.get(lx.pos) else {
                out.push((Tok::End, start));
                return Ok(out);
            };
            let tok = match b {
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'^' => Tok::Caret,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'0'..=b'9' | b'.' => {
                    out.push((lx.number()?, start));
                    continue;
                }
                b if b.is_ascii_alphabetic() || b == b'_' => {
                    while lx
                        .src
                        .get(lx.pos)
                        .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
                    {
                        lx.pos += 1;
                    }
                    let name = String::from_utf8_lossy(&lx.src[start..lx.pos]).into_owned();
                    out.push((Tok::Ident(name), start));
                    continue;
                }
                _ => {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("unexpected character `{}`", b as char),
                    })
                }
            };
            lx.pos += 1;
            out.push((tok, start));
        }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let int_digits = self.digits();
        let mut is_int = true;
        if self.src.get(self.pos) == Some(&b'.') {
            is_int = false;
            self.pos += 1;
            let frac = self.digits();
            if int_digits + frac == 0 {
                return Err(ParseError::Syntax {
                    offset: start,
                    message: "malformed number".into(),
                });
            }
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                // Not an exponent; leave `e` for the identifier lexer.
                self.pos = save;
            } else {
                is_int = false;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if is_int {
            if let Ok(v) = text.parse::<u64>() {
                return Ok(Tok::Int(v));
            }
        }
        text.parse::<f64>()
            .map(Tok::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
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
        let Tok::Int(n) = self.bump() else {
            return Err(ParseError::Syntax {
                offset: at,
                message: "expected integer exponent".into(),
            });
        };
        let n = i32::try_from(n)
            .ok()
            .map(|n| if negative { -n } else { n })
            .ok_or_else(|| ParseError::Syntax {
                offset: at,
                message: "exponent out of range".into(),
            })?;
        if n == 0 {
            return Err(ParseError::Syntax {
                offset: at,
                message: "exponent must be nonzero".into(),
            });
        }
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::real(v)),
            Tok::Int(v) => Ok(Expr::real(v as f64)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.base()?))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var),
                "i" => Ok(Expr::Const(Complex64::new(0.0, 1.0))),
                "pi" => Ok(Expr::real(std::f64::consts::PI)),
                "e" => Ok(Expr::real(std::f64::consts::E)),
                "exp" | "log" | "ln" => {
                    self.expect(Tok::LParen, "`(` after function name")?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "`)`")?;
                    Ok(if name == "exp" {
                        Expr::Exp(arg)
                    } else {
                        Expr::Log(arg)
                    })
                }
                _ => Err(ParseError::UnknownIdentifier { offset: at, name }),
            },
            Tok::End => Err(ParseError::Syntax {
                offset: at,
                message: "unexpected end of input".into(),
            }),
            other => Err(ParseError::Syntax {
                offset: at,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }
}

/// Parses an expression in the variable `x`.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("trailing input");
    }
    Ok(e)
}
