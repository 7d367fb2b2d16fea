use super::{BinOp, ExprError, Expression, Func, Var};

#[derive(Debug, Clone, PartialEq)]
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
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ExprError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b',' => Tok::Comma,
            b'0'..=b'9' | b'.' => {
                i = scan_number(bytes, i)?;
                let lit = &text[start..i];
                let value = lit
                    .parse::<f64>()
                    .map_err(|_| syntax(start, format!("invalid number `{}`", lit)))?;
                out.push(Token {
                    tok: Tok::Num(value),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(syntax(i, format!("unexpected character `{}`", ch)));
            }
        };
        out.push(Token { tok, offset: start });
        i += 1;
    }
    Ok(out)
}

/// Decimal literal with optional fraction and exponent. Returns the end offset.
fn scan_number(bytes: &[u8], start: usize) -> Result<usize, ExprError> {
    let mut i = start;
    let digits = |i: &mut usize| {
        let from = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - from
    };
    let mut mantissa = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        mantissa += digits(&mut i);
    }
    if mantissa == 0 {
        return Err(syntax(start, "malformed number"));
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let exp_at = i;
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if digits(&mut i) == 0 {
            return Err(syntax(exp_at, "malformed exponent"));
        }
    }
    Ok(i)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ExprError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(syntax(self.offset(), format!("expected {}", what))),
        }
    }

    fn expr(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expression, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expression::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Expression, ExprError> {
        let base = self.unary()?;
        if let Some(Tok::Caret) = self.peek() {
            self.pos += 1;
            // right-associative
            let exponent = self.factor()?;
            return Ok(Expression::Binary(
                BinOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expression, ExprError> {
        if let Some(Tok::Minus) = self.peek() {
            self.pos += 1;
            return Ok(Expression::Neg(Box::new(self.primary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expression, ExprError> {
        let at = self.offset();
        let Some(token) = self.bump() else {
            return Err(syntax(at, "unexpected end of input"));
        };
        match token.tok {
            Tok::Num(x) => Ok(Expression::Number(x)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            Tok::Ident(name) => self.identifier(name, token.offset),
            other => Err(syntax(at, format!("unexpected token {:?}", other))),
        }
    }

    fn identifier(&mut self, name: String, at: usize) -> Result<Expression, ExprError> {
        let is_call = matches!(self.peek(), Some(Tok::LParen));
        if let Some(func) = Func::from_name(&name) {
            if !is_call {
                return Err(syntax(
                    at,
                    format!("function `{}` requires arguments", name),
                ));
            }
            self.pos += 1;
            let mut args = vec![self.expr()?];
            while let Some(Tok::Comma) = self.peek() {
                self.pos += 1;
                args.push(self.expr()?);
            }
            self.expect(Tok::RParen, "`)`")?;
            if args.len() != func.arity() {
                return Err(syntax(
                    at,
                    format!(
                        "`{}` takes {} argument(s), got {}",
                        name,
                        func.arity(),
                        args.len()
                    ),
                ));
            }
            return Ok(Expression::Call(func, args));
        }
        let atom = if name == "pi" {
            Expression::Pi
        } else if let Some(v) = Var::from_name(&name) {
            Expression::Var(v)
        } else {
            return Err(ExprError::UnknownIdentifier { name, offset: at });
        };
        if is_call {
            return Err(syntax(
                self.offset(),
                format!("`{}` is not a function", name),
            ));
        }
        Ok(atom)
    }
}

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expression, ExprError> {
    let tokens = tokenize(text)?;
    if tokens.is_empty() {
        return Err(syntax(text.len(), "empty expression"));
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return Err(syntax(p.offset(), "unexpected trailing input"));
    }
    Ok(e)
}
