//! Recursive-descent parser for the expression mini-language.

use thiserror::Error;

use super::Expr;

/// Parse failure with the byte offset where it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("power exponent at offset {offset} must be a finite constant")]
    NonConstantExponent { offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        offset,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let offset = i;
        let kind = match c {
            '+' => {
                i += 1;
                TokenKind::Plus
            }
            '-' => {
                i += 1;
                TokenKind::Minus
            }
            '*' => {
                i += 1;
                TokenKind::Star
            }
            '/' => {
                i += 1;
                TokenKind::Slash
            }
            '^' => {
                i += 1;
                TokenKind::Caret
            }
            '(' => {
                i += 1;
                TokenKind::LParen
            }
            ')' => {
                i += 1;
                TokenKind::RParen
            }
            _ if c.is_ascii_digit() || c == '.' => {
                let mut j = i;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                // Exponent marker only when something number-like follows,
                // so `2exp(t)` still splits into `2` and `exp`.
                if j < bytes.len() && (bytes[j] == b'e' || bytes[j] == b'E') {
                    let mut k = j + 1;
                    if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                        k += 1;
                    }
                    if k < bytes.len() && bytes[k].is_ascii_digit() {
                        j = k;
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                    }
                }
                let literal = &text[i..j];
                let value: f64 = literal
                    .parse()
                    .map_err(|_| syntax(offset, format!("invalid number `{literal}`")))?;
                if !value.is_finite() {
                    return Err(syntax(offset, format!("number `{literal}` overflows")));
                }
                i = j;
                TokenKind::Number(value)
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len()
                    && ((bytes[j] as char).is_ascii_alphanumeric() || bytes[j] == b'_')
                {
                    j += 1;
                }
                let name = text[i..j].to_string();
                i = j;
                TokenKind::Ident(name)
            }
            _ => return Err(syntax(offset, format!("unexpected character `{c}`"))),
        };
        tokens.push(Token { kind, offset });
    }
    Ok(tokens)
}

pub(super) fn parse(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expression()?;
    if let Some(tok) = parser.peek() {
        return Err(syntax(tok.offset, "unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn expression(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(tok) = self.peek() {
            let op = tok.kind.clone();
            match op {
                TokenKind::Plus => {
                    self.advance();
                    lhs = lhs + self.term()?;
                }
                TokenKind::Minus => {
                    self.advance();
                    lhs = lhs - self.term()?;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(tok) = self.peek() {
            let op = tok.kind.clone();
            match op {
                TokenKind::Star => {
                    self.advance();
                    lhs = lhs * self.factor()?;
                }
                TokenKind::Slash => {
                    self.advance();
                    lhs = lhs / self.factor()?;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Minus)) {
            self.advance();
            return Ok(-self.factor()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if matches!(self.peek().map(|t| &t.kind), Some(TokenKind::Caret)) {
            self.advance();
            let exponent_offset = self.here();
            // Recursing through `factor` makes `^` right-associative and
            // allows a signed exponent.
            let exponent = self.factor()?;
            let value = exponent
                .constant_value()
                .ok_or(ParseError::NonConstantExponent {
                    offset: exponent_offset,
                })?;
            return Ok(base.pow(value));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.here();
        let Some(tok) = self.advance() else {
            return Err(syntax(offset, "expected an operand"));
        };
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Constant(v)),
            TokenKind::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::Time),
                "sin" | "cos" | "exp" | "ln" | "sqrt" => {
                    self.expect_lparen()?;
                    let arg = self.expression()?;
                    self.expect_rparen()?;
                    Ok(match name.as_str() {
                        "sin" => arg.sin(),
                        "cos" => arg.cos(),
                        "exp" => arg.exp(),
                        "ln" => arg.ln(),
                        _ => arg.sqrt(),
                    })
                }
                _ => Err(ParseError::UnknownIdentifier { name, offset }),
            },
            TokenKind::LParen => {
                let inner = self.expression()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            _ => Err(syntax(offset, "expected an operand")),
        }
    }

    fn expect_lparen(&mut self) -> Result<(), ParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::LParen) => {
                self.advance();
                Ok(())
            }
            _ => Err(syntax(self.here(), "expected `(`")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::RParen) => {
                self.advance();
                Ok(())
            }
            _ => Err(syntax(self.here(), "expected `)`")),
        }
    }
}
