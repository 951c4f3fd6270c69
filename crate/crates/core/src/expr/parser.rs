use super::{BinOp, Expr, Func, Params};
use crate::error::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Int(i64),
    Ident(String),
    Sym(char),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    /// Returns the token and its starting byte offset.
    fn next(&mut self) -> Result<(Tok, usize), (ParseErrorKind, usize)> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == '.' {
            let bytes = rest.as_bytes();
            let mut i = 0;
            let mut integral = true;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                integral = false;
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    integral = false;
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &rest[..i];
            self.pos += i;
            if integral {
                if let Ok(k) = text.parse::<i64>() {
                    return Ok((Tok::Int(k), start));
                }
            }
            return text
                .parse::<f64>()
                .map(|v| (Tok::Num(v), start))
                .map_err(|_| (ParseErrorKind::Syntax(format!("malformed number `{text}`")), start));
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            self.pos += len;
            return Ok((Tok::Ident(rest[..len].to_string()), start));
        }
        if "+-*/^()".contains(c) {
            self.pos += 1;
            return Ok((Tok::Sym(c), start));
        }
        Err((ParseErrorKind::Syntax(format!("unexpected character `{c}`")), start))
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    at: usize,
    coords: &'a [String],
    params: &'a Params,
}

type PResult<T> = Result<T, (ParseErrorKind, usize)>;

impl<'a> Parser<'a> {
    fn bump(&mut self) -> PResult<()> {
        let (tok, at) = self.lexer.next()?;
        self.tok = tok;
        self.at = at;
        Ok(())
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err((ParseErrorKind::Syntax(msg.into()), self.at))
    }

    fn describe(&self) -> String {
        match &self.tok {
            Tok::Num(v) => format!("number {v}"),
            Tok::Int(k) => format!("number {k}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of input".into(),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok {
                Tok::Sym('*') => BinOp::Mul,
                Tok::Sym('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.tok == Tok::Sym('-') {
            self.bump()?;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<Expr> {
        let mut base = self.atom()?;
        while self.tok == Tok::Sym('^') {
            self.bump()?;
            let negative = if self.tok == Tok::Sym('-') {
                self.bump()?;
                true
            } else {
                false
            };
            let k = match self.tok {
                Tok::Int(k) => k,
                _ => return self.syntax(format!("expected integer exponent, found {}", self.describe())),
            };
            let k = if negative { -k } else { k };
            let Ok(k) = i32::try_from(k) else {
                return self.syntax("exponent out of range");
            };
            self.bump()?;
            base = Expr::Pow(Box::new(base), k);
        }
        Ok(base)
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.tok.clone() {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Expr::Num(v))
            }
            Tok::Int(k) => {
                self.bump()?;
                Ok(Expr::Num(k as f64))
            }
            Tok::Sym('(') => {
                self.bump()?;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                let at = self.at;
                self.bump()?;
                if self.tok == Tok::Sym('(') {
                    let Some(func) = Func::from_name(&name) else {
                        return Err((ParseErrorKind::UnknownIdentifier(name), at));
                    };
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                if let Some(index) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr::Var { index, name });
                }
                if let Some(&value) = self.params.get(&name) {
                    return Ok(Expr::Param { name, value });
                }
                Err((ParseErrorKind::UnknownIdentifier(name), at))
            }
            _ => self.syntax(format!("expected expression, found {}", self.describe())),
        }
    }

    fn expect_close(&mut self) -> PResult<()> {
        if self.tok != Tok::Sym(')') {
            return self.syntax(format!("expected `)`, found {}", self.describe()));
        }
        self.bump()
    }
}

fn locate(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

/// Parse `text` resolving identifiers against `coords`, then `params`.
pub fn parse_with(text: &str, coords: &[String], params: &Params) -> Result<Expr, ParseError> {
    let run = || -> PResult<Expr> {
        let mut p = Parser {
            lexer: Lexer { src: text, pos: 0 },
            tok: Tok::End,
            at: 0,
            coords,
            params,
        };
        p.bump()?;
        let e = p.expr()?;
        if p.tok != Tok::End {
            return p.syntax(format!("unexpected {}", p.describe()));
        }
        Ok(e)
    };
    run().map_err(|(kind, offset)| {
        let (line, column) = locate(text, offset);
        ParseError {
            kind,
            offset,
            line,
            column,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coords() -> Vec<String> {
        vec!["x1".into(), "x2".into()]
    }

    fn err(text: &str) -> ParseError {
        parse_with(text, &coords(), &Params::new()).unwrap_err()
    }

    #[test]
    fn unknown_identifier() {
        let e = err("sin(q)");
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("q".into()));
        assert_eq!((e.offset, e.line, e.column), (4, 1, 5));
        let e = err("tan(x1)");
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("tan".into()));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = err("x1 + * x2");
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(e.offset, 5);
        let e = err("x1 +\n  (x2");
        assert_eq!((e.line, e.column), (2, 6));
        let e = err("x1^1.5");
        assert_eq!(e.offset, 3);
        let e = err("x1 x2");
        assert_eq!(e.offset, 3);
        assert!(err("x1 # 2").to_string().contains("column 4"));
    }

    #[test]
    fn truncated_inputs_are_rejected() {
        for text in [
            "", "x1 +", "sin(x1", "(x1*", "x1^", "x1^-", "-", "cos", "2*(x1-x2", "exp(",
        ] {
            assert!(parse_with(text, &coords(), &Params::new()).is_err(), "{text:?}");
        }
    }

    #[test]
    fn numbers() {
        let p = |t: &str| {
            parse_with(t, &coords(), &Params::new())
                .unwrap()
                .eval(&[0.0, 0.0])
                .unwrap()
        };
        assert_eq!(p("1.5e2"), 150.0);
        assert_eq!(p(".5"), 0.5);
        assert_eq!(p("3."), 3.0);
        assert_eq!(p("2E-1"), 0.2);
    }
}
