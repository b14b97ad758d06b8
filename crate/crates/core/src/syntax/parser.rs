//! Recursive-descent parser producing the surface AST.

use super::ast::*;
use super::kernel::{BinOp, Bound, UnOp};
use super::lexer::{tokenize, Tok};
use super::Span;
use crate::types::TypeExpr;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub fn new(span: Span, message: impl Into<String>) -> ParseError {
        ParseError { span, message: message.into() }
    }
}

/// Parse a complete program. Where `main` sits is checked by the type checker.
pub fn parse(src: &str) -> Result<SurfaceProgram, ParseError> {
    Parser::new(src)?.program()
}

/// Parse a library of declarations with no `main`.
pub fn parse_library(src: &str) -> Result<SurfaceProgram, ParseError> {
    let prog = Parser::new(src)?.program()?;
    if let Some(m) = prog.functions().find(|f| f.name == "main") {
        return Err(ParseError::new(m.span, "library sources cannot declare `main`"));
    }
    Ok(prog)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Parser, ParseError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::new(self.span(), format!("expected {expected}, found {}", self.peek().describe())))
    }

    fn expect(&mut self, t: Tok) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(&t.describe())
        }
    }

    /// Closing `>` of a type argument; splits a `>>` token.
    fn expect_close_angle(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Gt => {
                self.bump();
                Ok(())
            }
            Tok::Shr => {
                let sp = self.span();
                self.toks[self.pos] = (Tok::Gt, Span::new(sp.line, sp.col + 1));
                Ok(())
            }
            Tok::Ge => {
                let sp = self.span();
                self.toks[self.pos] = (Tok::Assign, Span::new(sp.line, sp.col + 1));
                Ok(())
            }
            _ => self.error("`>`"),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("identifier"),
        }
    }

    fn program(&mut self) -> Result<SurfaceProgram, ParseError> {
        let mut items = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Type => items.push(Item::Type(self.type_decl()?)),
                Tok::Fun => items.push(Item::Fun(self.fun_decl()?)),
                _ => return self.error("`fun` or `type`"),
            }
        }
        Ok(SurfaceProgram { items })
    }

    fn type_decl(&mut self) -> Result<STypeDecl, ParseError> {
        let span = self.span();
        self.expect(Tok::Type)?;
        let name = self.ident()?;
        self.expect(Tok::Assign)?;
        let ty = self.ty()?;
        self.expect(Tok::Semi)?;
        Ok(STypeDecl { name, ty, span })
    }

    fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::UInt => {
                self.bump();
                Ok(TypeExpr::UInt)
            }
            Tok::Bool => {
                self.bump();
                Ok(TypeExpr::Bool)
            }
            Tok::Ptr => {
                self.bump();
                self.expect(Tok::Lt)?;
                let inner = self.ty()?;
                self.expect_close_angle()?;
                Ok(TypeExpr::ptr(inner))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(TypeExpr::Unit);
                }
                let a = self.ty()?;
                self.expect(Tok::Comma)?;
                let b = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(TypeExpr::pair(a, b))
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(TypeExpr::Var(name))
            }
            _ => self.error("a type"),
        }
    }

    fn fun_decl(&mut self) -> Result<SFun, ParseError> {
        let span = self.span();
        self.expect(Tok::Fun)?;
        let name = self.ident()?;
        let bound = if self.eat(&Tok::LBracket) {
            let b = self.ident()?;
            self.expect(Tok::RBracket)?;
            Some(b)
        } else {
            None
        };
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if !self.eat(&Tok::RParen) {
            loop {
                let p = self.ident()?;
                self.expect(Tok::Colon)?;
                let t = self.ty()?;
                params.push((p, t));
                if self.eat(&Tok::RParen) {
                    break;
                }
                self.expect(Tok::Comma)?;
            }
        }
        let ret = if self.eat(&Tok::RArrow) { Some(self.ty()?) } else { None };
        let body_span = self.span();
        let body = self.block()?;
        match body.last() {
            Some(SStmt::Return(..)) => {}
            _ => return Err(ParseError::new(body_span, format!("function `{name}` must end with a `return` statement"))),
        }
        for s in &body[..body.len() - 1] {
            if let Some(sp) = find_return(s) {
                return Err(ParseError::new(sp, "`return` is only allowed as the final statement of a function"));
            }
        }
        Ok(SFun { name, bound, params, ret, body, span })
    }

    fn block(&mut self) -> Result<Vec<SStmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if *self.peek() == Tok::Eof {
                return self.error("`}`");
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    /// Body after `else` or `do`: a block, an `if` or a `with`.
    fn tail_body(&mut self) -> Result<Vec<SStmt>, ParseError> {
        match self.peek() {
            Tok::LBrace => self.block(),
            Tok::If => Ok(vec![self.if_stmt()?]),
            Tok::With => Ok(vec![self.with_stmt()?]),
            _ => self.error("`{`, `if` or `with`"),
        }
    }

    fn if_stmt(&mut self) -> Result<SStmt, ParseError> {
        let span = self.span();
        self.expect(Tok::If)?;
        let cond = self.expr()?;
        let then = self.block()?;
        let els = if self.eat(&Tok::Else) { Some(self.tail_body()?) } else { None };
        Ok(SStmt::If { cond, then, els, span })
    }

    fn with_stmt(&mut self) -> Result<SStmt, ParseError> {
        let span = self.span();
        self.expect(Tok::With)?;
        let with = self.block()?;
        self.expect(Tok::Do)?;
        let body = self.tail_body()?;
        Ok(SStmt::With { with, body, span })
    }

    fn stmt(&mut self) -> Result<SStmt, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Skip => {
                self.bump();
                self.expect(Tok::Semi)?;
                Ok(SStmt::Skip(span))
            }
            Tok::Let => {
                self.bump();
                let pat = self.pattern()?;
                let dir = match self.peek() {
                    Tok::LArrow => Dir::Assign,
                    Tok::RArrow => Dir::UnAssign,
                    _ => return self.error("`<-` or `->`"),
                };
                self.bump();
                let expr = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(SStmt::Let { pat, dir, expr, span })
            }
            Tok::Star => {
                self.bump();
                let a = self.ident()?;
                self.expect(Tok::SwapArrow)?;
                let b = self.ident()?;
                self.expect(Tok::Semi)?;
                Ok(SStmt::MemSwap(a, b, span))
            }
            Tok::Ident(a) => {
                self.bump();
                self.expect(Tok::SwapArrow)?;
                let b = self.ident()?;
                self.expect(Tok::Semi)?;
                Ok(SStmt::Swap(a, b, span))
            }
            Tok::If => self.if_stmt(),
            Tok::With => self.with_stmt(),
            Tok::Return => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::Semi)?;
                Ok(SStmt::Return(e, span))
            }
            _ => self.error("a statement"),
        }
    }

    fn pattern(&mut self) -> Result<Pattern, ParseError> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(Pattern::Var(x))
            }
            Tok::Num(n) => {
                self.bump();
                Ok(Pattern::Num(n))
            }
            Tok::True => {
                self.bump();
                Ok(Pattern::Bool(true))
            }
            Tok::False => {
                self.bump();
                Ok(Pattern::Bool(false))
            }
            Tok::Null => {
                self.bump();
                Ok(Pattern::Null)
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Pattern::Unit);
                }
                let a = self.pattern()?;
                self.expect(Tok::Comma)?;
                let b = self.pattern()?;
                self.expect(Tok::RParen)?;
                Ok(Pattern::Pair(Box::new(a), Box::new(b)))
            }
            _ => self.error("a pattern"),
        }
    }

    fn expr(&mut self) -> Result<SExpr, ParseError> {
        self.binary(0)
    }

    fn binary(&mut self, level: usize) -> Result<SExpr, ParseError> {
        const LEVELS: usize = 9;
        if level == LEVELS {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        loop {
            let op = match (level, self.peek()) {
                (0, Tok::PipePipe) => BinOp::Or,
                (1, Tok::AmpAmp) => BinOp::And,
                (2, Tok::EqEq) => BinOp::Eq,
                (2, Tok::BangEq) => BinOp::Ne,
                (2, Tok::Lt) => BinOp::Lt,
                (2, Tok::Le) => BinOp::Le,
                (2, Tok::Gt) => BinOp::Gt,
                (2, Tok::Ge) => BinOp::Ge,
                (3, Tok::Pipe) => BinOp::BitOr,
                (4, Tok::Caret) => BinOp::BitXor,
                (5, Tok::Amp) => BinOp::BitAnd,
                (6, Tok::Shl) => BinOp::Shl,
                (6, Tok::Shr) => BinOp::Shr,
                (7, Tok::Plus) => BinOp::Add,
                (7, Tok::Minus) => BinOp::Sub,
                (8, Tok::Star) => BinOp::Mul,
                _ => return Ok(lhs),
            };
            let span = self.span();
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = SExpr { kind: SExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span };
            if level == 2 {
                if matches!(self.peek(), Tok::EqEq | Tok::BangEq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
                    return Err(ParseError::new(self.span(), "comparison operators cannot be chained"));
                }
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Not => UnOp::Not,
            Tok::Test => UnOp::Test,
            _ => return self.postfix(),
        };
        self.bump();
        let inner = self.unary()?;
        Ok(SExpr { kind: SExprKind::Unary(op, Box::new(inner)), span })
    }

    fn postfix(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.primary()?;
        while *self.peek() == Tok::Dot {
            let span = self.span();
            self.bump();
            let idx = match self.peek() {
                Tok::Num(1) => 1,
                Tok::Num(2) => 2,
                _ => return self.error("projection `.1` or `.2`"),
            };
            self.bump();
            e = SExpr { kind: SExprKind::Proj(idx, Box::new(e)), span };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                SExprKind::Num(n)
            }
            Tok::True => {
                self.bump();
                SExprKind::Bool(true)
            }
            Tok::False => {
                self.bump();
                SExprKind::Bool(false)
            }
            Tok::Null => {
                self.bump();
                SExprKind::Null
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    SExprKind::Unit
                } else {
                    let a = self.expr()?;
                    if self.eat(&Tok::RParen) {
                        return Ok(a);
                    }
                    self.expect(Tok::Comma)?;
                    let b = self.expr()?;
                    self.expect(Tok::RParen)?;
                    SExprKind::Pair(Box::new(a), Box::new(b))
                }
            }
            Tok::Alloc => {
                self.bump();
                self.expect(Tok::Lt)?;
                let t = self.ty()?;
                self.expect_close_angle()?;
                SExprKind::Alloc(t)
            }
            Tok::Default => {
                self.bump();
                self.expect(Tok::Lt)?;
                let t = if self.eat(&Tok::Underscore) { None } else { Some(self.ty()?) };
                self.expect_close_angle()?;
                SExprKind::Default(t)
            }
            Tok::Ident(name) => {
                self.bump();
                match self.peek() {
                    Tok::LBracket | Tok::LParen => {
                        let bound = if self.eat(&Tok::LBracket) {
                            let b = self.bound()?;
                            self.expect(Tok::RBracket)?;
                            Some(b)
                        } else {
                            None
                        };
                        self.expect(Tok::LParen)?;
                        let mut args = Vec::new();
                        if !self.eat(&Tok::RParen) {
                            loop {
                                args.push(self.expr()?);
                                if self.eat(&Tok::RParen) {
                                    break;
                                }
                                self.expect(Tok::Comma)?;
                            }
                        }
                        SExprKind::Call { func: name, bound, args }
                    }
                    _ => SExprKind::Var(name),
                }
            }
            _ => return self.error("an expression"),
        };
        Ok(SExpr { kind, span })
    }

    fn bound(&mut self) -> Result<Bound, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Bound::Lit(n))
            }
            Tok::Ident(b) => {
                self.bump();
                if self.eat(&Tok::Minus) {
                    let sp = self.span();
                    match self.bump() {
                        Tok::Num(0) => Err(ParseError::new(sp, "bound decrement must be at least 1")),
                        Tok::Num(n) => Ok(Bound::Minus(b, n)),
                        _ => Err(ParseError::new(sp, "expected a number after `-` in a bound")),
                    }
                } else {
                    Ok(Bound::Var(b))
                }
            }
            _ => self.error("a recursion bound"),
        }
    }
}

fn find_return(s: &SStmt) -> Option<Span> {
    match s {
        SStmt::Return(_, sp) => Some(*sp),
        SStmt::If { then, els, .. } => then
            .iter()
            .chain(els.iter().flatten())
            .find_map(find_return),
        SStmt::With { with, body, .. } => with.iter().chain(body).find_map(find_return),
        _ => None,
    }
}
