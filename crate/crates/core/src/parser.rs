//! Parser for the ML-like program input language.
//!
//! A program is four top-level bindings (cstr/uncert optional):
//!
//! ```text
//! let box_name    x1 ... xn = [(a1, b1); ...; (an, bn)];;
//! let obj_name    x1 ... xn = [(<expr>, <eps>)];;
//! let cstr_name   x1 ... xn = [<poly>; ...];;
//! let uncert_name x1 ... xn = [u1; ...; un];;
//! ```
//!
//! Expressions use `+ - * / **`, `sqrt`, the transcendental dictionary,
//! `let v = e in e` and `if (p >= 0) then e else e`. Decimal and
//! scientific literals parse to exact rationals; `**k` expands to
//! repeated multiplication.

use crate::expr::{Expr, TranscKind};
use crate::interval::Interval;
use crate::program::ProgramSpec;
use crate::rational::{parse_decimal, Rat};
use num::traits::Zero;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at line {line}, col {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("box length {box_len} does not match {nvars} declared variables")]
    ArityMismatch { box_len: usize, nvars: usize },
    #[error("missing `{0}` section")]
    MissingSection(&'static str),
    #[error("bindings name mismatch: `{0}` vs `{1}`")]
    NameMismatch(String, String),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Let,
    In,
    If,
    Then,
    Else,
    Ident(String),
    Num(Rat),
    Plus,
    Minus,
    Star,
    StarStar,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    SemiSemi,
    Eq,
    Ge,
    Gt,
    Le,
    Lt,
}

#[derive(Debug, Clone)]
struct Sp {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Sp>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0usize;
    let err = |line: usize, col: usize, msg: &str| ParseError::Syntax {
        line,
        col,
        msg: msg.to_string(),
    };
    while i < bytes.len() {
        let c = bytes[i];
        let (l0, c0) = (line, col);
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '(' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '*' {
                    // (* nested comments *)
                    let mut depth = 1;
                    i += 2;
                    col += 2;
                    while i < bytes.len() && depth > 0 {
                        if bytes[i] == '(' && i + 1 < bytes.len() && bytes[i + 1] == '*' {
                            depth += 1;
                            i += 2;
                            col += 2;
                        } else if bytes[i] == '*' && i + 1 < bytes.len() && bytes[i + 1] == ')' {
                            depth -= 1;
                            i += 2;
                            col += 2;
                        } else {
                            if bytes[i] == '\n' {
                                line += 1;
                                col = 1;
                            } else {
                                col += 1;
                            }
                            i += 1;
                        }
                    }
                } else {
                    out.push(Sp { tok: Tok::LParen, line: l0, col: c0 });
                    i += 1;
                    col += 1;
                }
            }
            ')' => {
                out.push(Sp { tok: Tok::RParen, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            '[' => {
                out.push(Sp { tok: Tok::LBracket, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            ']' => {
                out.push(Sp { tok: Tok::RBracket, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            ',' => {
                out.push(Sp { tok: Tok::Comma, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            ';' => {
                if i + 1 < bytes.len() && bytes[i + 1] == ';' {
                    out.push(Sp { tok: Tok::SemiSemi, line: l0, col: c0 });
                    i += 2;
                    col += 2;
                } else {
                    out.push(Sp { tok: Tok::Semi, line: l0, col: c0 });
                    i += 1;
                    col += 1;
                }
            }
            '+' => {
                out.push(Sp { tok: Tok::Plus, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            '-' => {
                out.push(Sp { tok: Tok::Minus, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            '*' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '*' {
                    out.push(Sp { tok: Tok::StarStar, line: l0, col: c0 });
                    i += 2;
                    col += 2;
                } else {
                    out.push(Sp { tok: Tok::Star, line: l0, col: c0 });
                    i += 1;
                    col += 1;
                }
            }
            '/' => {
                out.push(Sp { tok: Tok::Slash, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            '=' => {
                out.push(Sp { tok: Tok::Eq, line: l0, col: c0 });
                i += 1;
                col += 1;
            }
            '>' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    out.push(Sp { tok: Tok::Ge, line: l0, col: c0 });
                    i += 2;
                    col += 2;
                } else {
                    out.push(Sp { tok: Tok::Gt, line: l0, col: c0 });
                    i += 1;
                    col += 1;
                }
            }
            '<' => {
                if i + 1 < bytes.len() && bytes[i + 1] == '=' {
                    out.push(Sp { tok: Tok::Le, line: l0, col: c0 });
                    i += 2;
                    col += 2;
                } else {
                    out.push(Sp { tok: Tok::Lt, line: l0, col: c0 });
                    i += 1;
                    col += 1;
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == '.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == 'e' || bytes[i] == 'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == '+' || bytes[j] == '-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = bytes[start..i].iter().collect();
                let n = parse_decimal(&text)
                    .ok_or_else(|| err(l0, c0, &format!("malformed number `{text}`")))?;
                out.push(Sp { tok: Tok::Num(n), line: l0, col: c0 });
                col += i - start;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                let word: String = bytes[start..i].iter().collect();
                let tok = match word.as_str() {
                    "let" => Tok::Let,
                    "in" => Tok::In,
                    "if" => Tok::If,
                    "then" => Tok::Then,
                    "else" => Tok::Else,
                    _ => Tok::Ident(word),
                };
                out.push(Sp { tok, line: l0, col: c0 });
                col += i - start;
            }
            other => return Err(err(l0, c0, &format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Sp>,
    pos: usize,
    vars: HashMap<String, usize>,
    locals: Vec<(String, usize)>,
    next_local: usize,
    local_names: Vec<String>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((0, 0))
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, t: &Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn number(&mut self) -> Result<Rat, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(n)
            }
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.number()?)
            }
            _ => Err(self.err("expected number")),
        }
    }

    fn lookup(&self, name: &str) -> Option<usize> {
        if let Some((_, idx)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            return Some(*idx);
        }
        self.vars.get(name).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Let) {
            self.bump();
            let name = self.ident()?;
            self.expect(&Tok::Eq, "`=`")?;
            let binding = self.expr()?;
            self.expect(&Tok::In, "`in`")?;
            let idx = self.next_local;
            self.next_local += 1;
            self.local_names.push(name.clone());
            self.locals.push((name, idx));
            let body = self.expr()?;
            self.locals.pop();
            return Ok(Expr::Let(idx, Box::new(binding), Box::new(body)));
        }
        if self.peek() == Some(&Tok::If) {
            self.bump();
            self.expect(&Tok::LParen, "`(` after if")?;
            let cond = self.condition()?;
            self.expect(&Tok::RParen, "`)` after condition")?;
            self.expect(&Tok::Then, "`then`")?;
            let t = self.expr()?;
            self.expect(&Tok::Else, "`else`")?;
            let e = self.expr()?;
            return Ok(Expr::IfThenElse(Box::new(cond), Box::new(t), Box::new(e)));
        }
        self.additive()
    }

    /// Comparison normalized to "lhs ≥ 0": `a >= b` / `a > b` become a − b,
    /// `a <= b` / `a < b` become b − a.
    fn condition(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let op = self.bump().ok_or_else(|| self.err("expected comparison"))?;
        let rhs = self.additive()?;
        let diff = match op {
            Tok::Ge | Tok::Gt => Expr::sub(lhs, rhs),
            Tok::Le | Tok::Lt => Expr::sub(rhs, lhs),
            _ => return Err(self.err("expected `>=`, `>`, `<=` or `<`")),
        };
        Ok(diff.simplify())
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.multiplicative()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    acc = Expr::add(acc, self.multiplicative()?);
                }
                Some(Tok::Minus) => {
                    self.bump();
                    acc = Expr::sub(acc, self.multiplicative()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    acc = Expr::mul(acc, self.unary()?);
                }
                Some(Tok::Slash) => {
                    self.bump();
                    acc = Expr::div(acc, self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Tok::Minus) {
            self.bump();
            return Ok(Expr::neg(self.unary()?));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::StarStar) {
            self.bump();
            let expn = self.number()?;
            if !expn.is_integer() || expn < Rat::zero() {
                return Err(self.err("`**` exponent must be a nonnegative integer"));
            }
            let k = num::traits::ToPrimitive::to_u32(&expn.to_integer())
                .ok_or_else(|| self.err("exponent too large"))?;
            if k == 0 {
                return Ok(Expr::Const(num::traits::One::one()));
            }
            // expand to repeated multiplication: one AST node per operation
            let mut acc = base.clone();
            for _ in 1..k {
                acc = Expr::mul(acc, base.clone());
            }
            return Ok(acc);
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Some(Tok::LParen) => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Let) | Some(Tok::If) => self.expr(),
            Some(Tok::Ident(name)) => {
                self.bump();
                let transc = match name.as_str() {
                    "sqrt" => Some(None),
                    "exp" => Some(Some(TranscKind::Exp)),
                    "log" => Some(Some(TranscKind::Log)),
                    "sin" => Some(Some(TranscKind::Sin)),
                    "cos" => Some(Some(TranscKind::Cos)),
                    "tan" => Some(Some(TranscKind::Tan)),
                    "asin" | "arcsin" => Some(Some(TranscKind::Asin)),
                    "acos" | "arccos" => Some(Some(TranscKind::Acos)),
                    "atan" | "arctan" => Some(Some(TranscKind::Atan)),
                    _ => None,
                };
                if let Some(kind) = transc {
                    self.expect(&Tok::LParen, "`(` after function name")?;
                    let arg = self.expr()?;
                    self.expect(&Tok::RParen, "`)`")?;
                    return Ok(match kind {
                        None => Expr::Sqrt(Box::new(arg)),
                        Some(k) => Expr::Transc(k, Box::new(arg)),
                    });
                }
                match self.lookup(&name) {
                    Some(idx) => Ok(Expr::Var(idx)),
                    None => Err(ParseError::UnknownVariable(name)),
                }
            }
            _ => Err(self.err("expected expression")),
        }
    }
}

#[derive(Debug, Default)]
struct Sections {
    name: Option<String>,
    nvars: usize,
    var_names: Vec<String>,
    boxes: Option<Vec<(Rat, Rat)>>,
    objective: Option<(Expr, Rat)>,
    constraints: Vec<Expr>,
    uncertainties: Option<Vec<Rat>>,
    local_names: Vec<String>,
    next_local: usize,
}

/// Parse a complete program source into a [`ProgramSpec`].
pub fn parse_program(src: &str) -> Result<ProgramSpec, ParseError> {
    let toks = lex(src)?;
    let mut sec = Sections::default();
    let mut p = Parser {
        toks,
        pos: 0,
        vars: HashMap::new(),
        locals: Vec::new(),
        next_local: 0,
        local_names: Vec::new(),
    };
    while p.peek().is_some() {
        p.expect(&Tok::Let, "`let`")?;
        let header = p.ident()?;
        let (kind, name) = header
            .split_once('_')
            .ok_or_else(|| p.err("binding must look like `box_<name>`"))?;
        let kind = kind.to_string();
        let name = name.to_string();
        match &sec.name {
            None => sec.name = Some(name.clone()),
            Some(prev) if *prev != name => {
                return Err(ParseError::NameMismatch(prev.clone(), name));
            }
            _ => {}
        }
        let mut names = Vec::new();
        while let Some(Tok::Ident(_)) = p.peek() {
            names.push(p.ident()?);
        }
        p.expect(&Tok::Eq, "`=`")?;
        if sec.var_names.is_empty() {
            sec.var_names = names.clone();
            sec.nvars = names.len();
            p.vars = names
                .iter()
                .enumerate()
                .map(|(i, n)| (n.clone(), i))
                .collect();
            p.next_local = sec.nvars;
        } else if !names.is_empty() && names != sec.var_names {
            return Err(p.err("variable lists differ between bindings"));
        }
        p.expect(&Tok::LBracket, "`[`")?;
        match kind.as_str() {
            "box" => {
                let mut boxes = Vec::new();
                loop {
                    p.expect(&Tok::LParen, "`(`")?;
                    let a = p.number()?;
                    p.expect(&Tok::Comma, "`,`")?;
                    let b = p.number()?;
                    p.expect(&Tok::RParen, "`)`")?;
                    boxes.push((a, b));
                    if p.peek() == Some(&Tok::Semi) {
                        p.bump();
                    } else {
                        break;
                    }
                }
                sec.boxes = Some(boxes);
            }
            "obj" => {
                p.expect(&Tok::LParen, "`(`")?;
                let e = p.expr()?;
                p.expect(&Tok::Comma, "`,` before target bound")?;
                let eps = p.number()?;
                p.expect(&Tok::RParen, "`)`")?;
                sec.objective = Some((e, eps));
            }
            "cstr" => loop {
                let e = p.expr()?;
                sec.constraints.push(e);
                if p.peek() == Some(&Tok::Semi) {
                    p.bump();
                } else {
                    break;
                }
            },
            "uncert" => {
                let mut us = Vec::new();
                loop {
                    us.push(p.number()?);
                    if p.peek() == Some(&Tok::Semi) {
                        p.bump();
                    } else {
                        break;
                    }
                }
                sec.uncertainties = Some(us);
            }
            other => return Err(p.err(format!("unknown binding kind `{other}_`"))),
        }
        p.expect(&Tok::RBracket, "`]`")?;
        p.expect(&Tok::SemiSemi, "`;;`")?;
    }
    sec.local_names = p.local_names.clone();
    sec.next_local = p.next_local;
    assemble(sec)
}

fn assemble(sec: Sections) -> Result<ProgramSpec, ParseError> {
    let name = sec.name.unwrap_or_else(|| "anonymous".to_string());
    let boxes = sec.boxes.ok_or(ParseError::MissingSection("box"))?;
    let (objective, target) = sec.objective.ok_or(ParseError::MissingSection("obj"))?;
    if boxes.len() != sec.nvars {
        return Err(ParseError::ArityMismatch { box_len: boxes.len(), nvars: sec.nvars });
    }
    let uncertainties = sec
        .uncertainties
        .unwrap_or_else(|| vec![Rat::zero(); sec.nvars]);
    if uncertainties.len() != sec.nvars {
        return Err(ParseError::ArityMismatch { box_len: uncertainties.len(), nvars: sec.nvars });
    }
    Ok(ProgramSpec {
        name,
        nvars: sec.nvars,
        var_names: sec.var_names,
        local_names: sec.local_names,
        total_indices: sec.next_local,
        domain: boxes
            .into_iter()
            .map(|(a, b)| Interval { lo: a, hi: b })
            .collect(),
        constraints: sec.constraints,
        objective,
        target_bound: target,
        uncertainties,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    #[test]
    fn identity_program() {
        let spec = parse_program("let box_p x = [(0,1)];; let obj_p x = [(x, 0)];;").unwrap();
        assert_eq!(spec.nvars, 1);
        assert_eq!(spec.objective, Expr::Var(0));
        assert!(spec.target_bound.is_zero());
        assert!(spec.constraints.is_empty());
        assert_eq!(spec.uncertainties, vec![Rat::zero()]);
    }

    #[test]
    fn kepler0_parses() {
        let src = "\
let box_kepler0 x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_kepler0 x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
        let spec = parse_program(src).unwrap();
        assert_eq!(spec.nvars, 6);
        assert_eq!(spec.constraints.len(), 0);
        for iv in &spec.domain {
            assert_eq!(iv.lo, rat_int(4));
            assert_eq!(iv.hi, rat(636, 100));
        }
        let p = spec.objective.to_poly(6).unwrap();
        assert_eq!(p.total_degree(), 2);
        // hand substitution at (4,4,4,4,4,4)
        assert_eq!(p.evaluate(&vec![rat_int(4); 6]), rat_int(32));
    }

    #[test]
    fn floudas3_4_constraints() {
        let src = "\
let box_floudas3_4 x1 x2 x3 = [(0, 2); (0, 2); (0, 3)];;
let cstr_floudas3_4 x1 x2 x3 = [4 - x1 - x2 - x3; 6 - 3 * x2 - x3; -0.75+2*x1-2*x3+4*x1*x1-4*x1*x2+4*x1*x3+2*x2*x2-2*x2*x3+2*x3*x3];;
let obj_floudas3_4 x1 x2 x3 = [(-2 * x1 + x2 - x3, 0)];;";
        let spec = parse_program(src).unwrap();
        assert_eq!(spec.constraints.len(), 3);
        let g3 = spec.constraints[2].to_poly(3).unwrap();
        assert_eq!(g3.constant_term(), rat(-3, 4));
        assert_eq!(g3.total_degree(), 2);
    }

    #[test]
    fn conditional_and_let() {
        let src = "\
let box_c x = [(0, 10)];;
let obj_c x = [(if (x*x - x > 0) then x*0.1 else x*x+2, 0)];;";
        let spec = parse_program(src).unwrap();
        match &spec.objective {
            Expr::IfThenElse(c, _, _) => {
                let p = c.to_poly(1).unwrap();
                assert_eq!(p.total_degree(), 2);
            }
            other => panic!("expected conditional, got {other:?}"),
        }

        let src2 = "\
let box_d u v T = [(-100, 100); (20, 20e3); (-30, 50)];;
let obj_d u v T = [(let t1 = 331.4 + 0.6 * T in -t1*v/((t1 + u)*(t1 + u)), 0)];;";
        let spec2 = parse_program(src2).unwrap();
        assert_eq!(spec2.nvars, 3);
        match &spec2.objective {
            Expr::Let(idx, _, _) => assert_eq!(*idx, 3),
            other => panic!("expected let, got {other:?}"),
        }
    }

    #[test]
    fn exponent_sugar_expands_to_muls() {
        let src = "let box_e x = [(0, 1)];; let obj_e x = [((x - 3)**2, 0)];;";
        let spec = parse_program(src).unwrap();
        match &spec.objective {
            Expr::Mul(a, b) => assert_eq!(a, b),
            other => panic!("expected mul, got {other:?}"),
        }
    }

    #[test]
    fn errors_are_reported() {
        assert!(matches!(
            parse_program("let box_p x = [(0,1)];; let obj_p x = [(y, 0)];;"),
            Err(ParseError::UnknownVariable(_))
        ));
        assert!(matches!(
            parse_program("let box_p x y = [(0,1)];; let obj_p x y = [(x, 0)];;"),
            Err(ParseError::ArityMismatch { .. })
        ));
        assert!(matches!(
            parse_program("let box_p x = [(0 1)];;"),
            Err(ParseError::Syntax { .. })
        ));
    }

    #[test]
    fn roundtrip_through_pretty_printer() {
        let src = "\
let box_rt x1 x2 = [(-5, 5); (-5, 5)];;
let obj_rt x1 x2 = [((x1*x1 + x2 - 11)*(x1*x1 + x2 - 11) + (x1 + x2*x2 - 7)*(x1 + x2*x2 - 7), 0)];;";
        let spec = parse_program(src).unwrap();
        let printed = spec.render_source();
        let spec2 = parse_program(&printed).unwrap();
        assert_eq!(spec.objective, spec2.objective);
        assert_eq!(spec.domain, spec2.domain);
        assert_eq!(spec.constraints, spec2.constraints);
    }
}
