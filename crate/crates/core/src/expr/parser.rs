//! Pratt parser over the token stream.

use super::lexer::{tokenize, Token, TokenKind};
use super::{BinOp, Expr, Func, ParseError};

const OPERAND: &[&str] = &["number", "identifier", "`(`", "`-`"];
const AFTER_OPERAND: &[&str] = &["`+`", "`-`", "`*`", "`/`", "`^`", "end of input"];

const UNARY_BP: u8 = 5;
const MAX_DEPTH: usize = 200;
const MAX_TOKENS: usize = 4096;

/// `(left, right)` binding power; right-associative when right < left.
fn infix_bp(kind: &TokenKind) -> Option<(BinOp, u8, u8)> {
    Some(match kind {
        TokenKind::Plus => (BinOp::Add, 1, 2),
        TokenKind::Minus => (BinOp::Sub, 1, 2),
        TokenKind::Star => (BinOp::Mul, 3, 4),
        TokenKind::Slash => (BinOp::Div, 3, 4),
        TokenKind::Caret => (BinOp::Pow, 8, 7),
        _ => return None,
    })
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(text)?;
    if tokens.len() > MAX_TOKENS {
        return Err(ParseError::too_long(tokens[MAX_TOKENS].offset));
    }
    let mut parser = Parser {
        tokens,
        pos: 0,
        depth: 0,
    };
    let expr = parser.expr(0)?;
    let tok = parser.peek();
    if tok.kind != TokenKind::End {
        return Err(ParseError::unexpected(tok.offset, &tok.kind.describe(), AFTER_OPERAND));
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expect(&mut self, kind: TokenKind, expected: &[&'static str]) -> Result<Token, ParseError> {
        let tok = self.peek().clone();
        if tok.kind == kind {
            Ok(self.advance())
        } else {
            Err(ParseError::unexpected(tok.offset, &tok.kind.describe(), expected))
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ParseError::too_deep(self.peek().offset));
        }
        let result = self.expr_inner(min_bp);
        self.depth -= 1;
        result
    }

    fn expr_inner(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        while let Some((op, l_bp, r_bp)) = infix_bp(&self.peek().kind) {
            if l_bp < min_bp {
                break;
            }
            self.advance();
            let rhs = self.expr(r_bp)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let tok = self.advance();
        match tok.kind {
            TokenKind::Number(v) => Ok(Expr::Num(v)),
            TokenKind::Minus => {
                let inner = self.expr(UNARY_BP)?;
                Ok(Expr::Neg(Box::new(inner)))
            }
            TokenKind::LParen => {
                let inner = self.expr(0)?;
                self.expect(TokenKind::RParen, &["`)`", "operator"])?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if self.peek().kind == TokenKind::LParen {
                    let func = Func::from_name(&name).ok_or_else(|| ParseError::unknown_function(tok.offset, &name))?;
                    self.advance();
                    let args = self.arguments()?;
                    let (min, max) = func.arity();
                    if args.len() < min || max.is_some_and(|m| args.len() > m) {
                        return Err(ParseError::arity(tok.offset, func, args.len()));
                    }
                    Ok(Expr::Call(func, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            other => Err(ParseError::unexpected(tok.offset, &other.describe(), OPERAND)),
        }
    }

    fn arguments(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if self.peek().kind == TokenKind::RParen {
            self.advance();
            return Ok(args);
        }
        loop {
            args.push(self.expr(0)?);
            let tok = self.advance();
            match tok.kind {
                TokenKind::Comma => continue,
                TokenKind::RParen => return Ok(args),
                other => {
                    return Err(ParseError::unexpected(
                        tok.offset,
                        &other.describe(),
                        &["`,`", "`)`", "operator"],
                    ))
                }
            }
        }
    }
}
