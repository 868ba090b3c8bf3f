//! Hand-written lexer and recursive-descent parser.
//!
//! Grammar (loosest to tightest):
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?            // right-associative
//! atom   := number | coordinate | function '(' expr ')' | '(' expr ')'
//! ```
//! Placing `unary` on the right of `^` makes `x^-2` legal while `-x^2` still
//! parses as `-(x^2)`.

use super::{BinOp, Expr, Func, ParseError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
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
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Returns the next token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::End, start));
        }
        let c = self.src[self.pos];
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = simple {
            self.pos += 1;
            return Ok((tok, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.lex_number(start);
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len()
                && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
            {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos])
                .expect("identifier bytes are ASCII")
                .to_string();
            return Ok((Tok::Ident(name), start));
        }
        Err(ParseError::Syntax {
            offset: start,
            message: format!("unexpected character `{}`", c as char),
        })
    }

    fn lex_number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
        }
        // Optional exponent part: e or E, optional sign, digits.
        if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
            let mark = self.pos;
            self.pos += 1;
            if self.pos < self.src.len()
                && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                // Not an exponent after all (e.g. `2e` or `2*exp(x)` typo-free case
                // cannot reach here, but `2e+` can): rewind and let the text lex on.
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("number bytes are ASCII");
        text.parse::<f64>()
            .map(|v| (Tok::Number(v), start))
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: format!("malformed number `{text}`"),
            })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    coords: &'a [&'a str],
    tok: Tok,
    offset: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, coords: &'a [&'a str]) -> Result<Self, ParseError> {
        let mut lexer = Lexer::new(src);
        let (tok, offset) = lexer.next()?;
        Ok(Parser {
            lexer,
            coords,
            tok,
            offset,
        })
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        let (tok, offset) = self.lexer.next()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn syntax<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            offset: self.offset,
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.tok == Tok::Minus {
            self.advance()?;
            return Ok(Expr::negation(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.tok == Tok::Caret {
            self.advance()?;
            let exponent = self.unary()?;
            return Ok(Expr::binary(BinOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.tok.clone() {
            Tok::Number(v) => {
                self.advance()?;
                Ok(Expr::Literal(v))
            }
            Tok::LParen => {
                self.advance()?;
                let inner = self.expr()?;
                if self.tok != Tok::RParen {
                    return self.syntax("expected `)`");
                }
                self.advance()?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                let offset = self.offset;
                self.advance()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return self.syntax(format!("expected `(` after function `{name}`"));
                    }
                    self.advance()?;
                    let arg = self.expr()?;
                    if self.tok != Tok::RParen {
                        return self.syntax("expected `)`");
                    }
                    self.advance()?;
                    return Ok(Expr::apply(func, arg));
                }
                match self.coords.iter().position(|c| *c == name) {
                    Some(index) => Ok(Expr::var(index, name)),
                    None => Err(ParseError::UnknownIdentifier { name, offset }),
                }
            }
            Tok::End => self.syntax("unexpected end of input"),
            _ => self.syntax("expected a value"),
        }
    }
}

fn check_coordinates(coords: &[&str]) -> Result<(), ParseError> {
    for (i, name) in coords.iter().enumerate() {
        let mut chars = name.chars();
        let head_ok = chars
            .next()
            .map(|c| c.is_ascii_alphabetic() || c == '_')
            .unwrap_or(false);
        if !head_ok || !chars.all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ParseError::BadCoordinate {
                name: name.to_string(),
                reason: "not a valid identifier".into(),
            });
        }
        if Func::from_name(name).is_some() {
            return Err(ParseError::BadCoordinate {
                name: name.to_string(),
                reason: "shadows a built-in function".into(),
            });
        }
        if coords[..i].contains(name) {
            return Err(ParseError::BadCoordinate {
                name: name.to_string(),
                reason: "duplicate coordinate".into(),
            });
        }
    }
    Ok(())
}

/// Parses `src` over the given coordinate names. Variable indices in the
/// resulting tree are positions in `coords`.
pub fn parse(src: &str, coords: &[&str]) -> Result<Expr, ParseError> {
    check_coordinates(coords)?;
    let mut parser = Parser::new(src, coords)?;
    let expr = parser.expr()?;
    if parser.tok != Tok::End {
        return parser.syntax("trailing input");
    }
    Ok(expr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scientific_literals() {
        assert_eq!(parse("1e3", &[]).unwrap(), Expr::Literal(1000.0));
        assert_eq!(parse("2.5E-2", &[]).unwrap(), Expr::Literal(0.025));
        assert_eq!(parse(".5", &[]).unwrap(), Expr::Literal(0.5));
    }

    #[test]
    fn underscored_identifiers() {
        let e = parse("x_1 + _t", &["x_1", "_t"]).unwrap();
        assert_eq!(e.eval(&[1.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn whitespace_is_free() {
        let a = parse("  x+ y *2 ", &["x", "y"]).unwrap();
        let b = parse("x + y*2", &["x", "y"]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn error_offsets_point_at_tokens() {
        match parse("x ** y", &["x", "y"]) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 3),
            other => panic!("{other:?}"),
        }
        match parse("sin(q)", &["x"]) {
            Err(ParseError::UnknownIdentifier { name, offset }) => {
                assert_eq!(name, "q");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
    }
}
