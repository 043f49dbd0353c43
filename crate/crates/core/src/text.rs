//! The polynomial text grammar shared by the library and the CLI runner.
//!
//! Accepted input: identifiers, integer literals, `+ - * / ^ ( )` and the
//! series helpers `invp(p, bound)`, `factorial(n)` and
//! `sum(i, lo, hi, body)`. `*` is optional between a literal or closing
//! parenthesis and the next factor; named variables must be separated by `*`.
//!
//! Printing is deterministic: terms descend in the ring order; fraction
//! coefficients come out as `(num)/(den)` with parenthesized polynomials.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GndError, Result};
use crate::localized::LocalizedPoly;
use crate::poly::{Coeff, Poly};
use crate::ring::{Monomial, RingContext, VarKind};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

fn fmt_rat(c: &Coeff) -> String {
    if c.denom().is_one() {
        format!("{}", c.numer())
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn fmt_monomial(ring: &RingContext, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        if e == 0 {
            continue;
        }
        if e == 1 {
            parts.push(ring.var_name(i).to_string());
        } else {
            parts.push(format!("{}^{}", ring.var_name(i), e));
        }
    }
    parts.join("*")
}

/// Plain form: a stream of signed terms, `2*Y1+Y2`, `x1^3-x2^2`.
pub fn print_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    let ring = p.ring();
    let mut out = String::new();
    for (k, (m, c)) in p.terms().iter().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        if k == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push(if neg { '-' } else { '+' });
        }
        let mono = fmt_monomial(ring, m);
        if mono.is_empty() {
            out.push_str(&fmt_rat(&abs));
        } else if abs.is_one() {
            out.push_str(&mono);
        } else {
            out.push_str(&fmt_rat(&abs));
            out.push('*');
            out.push_str(&mono);
        }
    }
    out
}

/// Split a term's monomial into its (Y,T)-part and its (param,x)-part.
fn split_mono(ring: &RingContext, m: &Monomial) -> (Monomial, Monomial) {
    let yt = ring.mask_of(&[VarKind::Y, VarKind::T]);
    let mut group = vec![0u32; m.0.len()];
    let mut coeff = vec![0u32; m.0.len()];
    for (i, &e) in m.0.iter().enumerate() {
        if yt[i] {
            group[i] = e;
        } else {
            coeff[i] = e;
        }
    }
    (Monomial(group), Monomial(coeff))
}

/// Fraction form used for h, Q and g: terms grouped by their (Y,T)-monomial,
/// each group printed as `(num)/(den)*mono` after cancelling content.
pub fn print_fraction(f: &LocalizedPoly) -> String {
    let ring = f.ring().clone();
    if f.num.is_zero() {
        return "0".into();
    }
    // Collect groups in descending (Y,T)-monomial order.
    let mut groups: Vec<(Monomial, Vec<(Monomial, Coeff)>)> = Vec::new();
    for (m, c) in f.num.terms() {
        let (g, rest) = split_mono(&ring, m);
        match groups.iter_mut().find(|(gm, _)| *gm == g) {
            Some((_, terms)) => terms.push((rest, c.clone())),
            None => groups.push((g, vec![(rest, c.clone())])),
        }
    }
    let order = ring.order().clone();
    groups.sort_by(|a, b| order.cmp(&b.0, &a.0));
    let mut pieces = Vec::new();
    for (g, terms) in groups {
        let num = Poly::from_terms(&ring, terms);
        let mut frac = LocalizedPoly {
            num,
            den: f.den.clone(),
        };
        frac.reduce();
        // Normalize: integer-primitive positive denominator, and move any
        // rational content of the numerator into a constant denominator
        // factor, 720-style.
        let dc = frac.den.content();
        let mut num = frac.num.scale(&(Coeff::one() / dc.clone()));
        let mut den = frac.den.scale(&(Coeff::one() / dc));
        let mut lcm = num_bigint::BigInt::one();
        for (_, c) in num.terms() {
            lcm = num_integer::Integer::lcm(&lcm, c.denom());
        }
        if !lcm.is_one() {
            let s = Coeff::from_integer(lcm);
            num = num.scale(&s);
            den = den.scale(&s);
        }
        let mono = if g.is_one() {
            String::new()
        } else {
            fmt_monomial(&ring, &g)
        };
        let piece = if den.is_one() {
            match num.constant_value() {
                Some(c) => {
                    if mono.is_empty() {
                        fmt_rat(&c)
                    } else if c.is_one() {
                        mono
                    } else if (-c.clone()).is_one() {
                        format!("-{mono}")
                    } else {
                        format!("{}*{mono}", fmt_rat(&c))
                    }
                }
                None => {
                    if mono.is_empty() {
                        format!("({})", print_poly(&num))
                    } else {
                        format!("({})*{mono}", print_poly(&num))
                    }
                }
            }
        } else {
            let den_str = match den.constant_value() {
                Some(c) => fmt_rat(&c),
                None => format!("({})", print_poly(&den)),
            };
            let num_str = match num.constant_value() {
                Some(c) => fmt_rat(&c),
                None => format!("({})", print_poly(&num)),
            };
            if mono.is_empty() {
                format!("{num_str}/{den_str}")
            } else {
                format!("{num_str}/{den_str}*{mono}")
            }
        };
        pieces.push(piece);
    }
    let mut out = String::new();
    for (k, p) in pieces.iter().enumerate() {
        if k > 0 && !p.starts_with('-') {
            out.push('+');
        }
        out.push_str(p);
    }
    out
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Int(BigInt),
    Var(String),
    Call(String, Vec<Expr>),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
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

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Lexer {
            src,
            pos: 0,
            line,
            col: 1,
        }
    }

    fn err(&self, msg: &str) -> GndError {
        GndError::Parse {
            line: self.line,
            col: self.col,
            msg: msg.to_string(),
        }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize)>> {
        let bytes = self.src.as_bytes();
        let mut out = Vec::new();
        while self.pos < bytes.len() {
            let c = bytes[self.pos] as char;
            let col = self.col;
            match c {
                ' ' | '\t' | '\r' | '\n' => {
                    self.pos += 1;
                    self.col += 1;
                }
                '+' => {
                    out.push((Tok::Plus, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '-' => {
                    out.push((Tok::Minus, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '*' => {
                    out.push((Tok::Star, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '/' => {
                    out.push((Tok::Slash, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '^' => {
                    out.push((Tok::Caret, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '(' => {
                    out.push((Tok::LParen, col));
                    self.pos += 1;
                    self.col += 1;
                }
                ')' => {
                    out.push((Tok::RParen, col));
                    self.pos += 1;
                    self.col += 1;
                }
                ',' => {
                    out.push((Tok::Comma, col));
                    self.pos += 1;
                    self.col += 1;
                }
                '0'..='9' => {
                    let start = self.pos;
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                        self.col += 1;
                    }
                    let n: BigInt = self.src[start..self.pos].parse().unwrap();
                    out.push((Tok::Int(n), col));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = self.pos;
                    while self.pos < bytes.len()
                        && (bytes[self.pos].is_ascii_alphanumeric()
                            || bytes[self.pos] == b'_'
                            || bytes[self.pos] == b'@')
                    {
                        self.pos += 1;
                        self.col += 1;
                    }
                    out.push((Tok::Ident(self.src[start..self.pos].to_string()), col));
                }
                _ => return Err(self.err(&format!("unexpected character `{c}`"))),
            }
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn err(&self, msg: &str) -> GndError {
        let col = self
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or_else(|| self.toks.last().map(|(_, c)| c + 1).unwrap_or(1));
        GndError::Parse {
            line: self.line,
            col,
            msg: msg.to_string(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected {t:?}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = if self.peek() == Some(&Tok::Minus) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            if self.peek() == Some(&Tok::Plus) {
                self.bump();
            }
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.power()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.bump();
                    let rhs = self.power()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                Some(Tok::Slash) => {
                    self.bump();
                    let rhs = self.power()?;
                    lhs = Expr::Div(Box::new(lhs), Box::new(rhs));
                }
                // Juxtaposition: `2a1`, `3(x+1)`, `(x+1)(x-1)`.
                Some(Tok::Int(_)) | Some(Tok::Ident(_)) | Some(Tok::LParen) => {
                    let rhs = self.power()?;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.bump();
            let exp = self.atom()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some(Tok::Int(n)) => Ok(Expr::Int(n)),
            Some(Tok::Ident(name)) => {
                if self.peek() == Some(&Tok::LParen) {
                    self.bump();
                    let mut args = Vec::new();
                    if self.peek() != Some(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.peek() == Some(&Tok::Comma) {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::Call(name, args))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Some(Tok::Minus) => Ok(Expr::Neg(Box::new(self.atom()?))),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => Err(self.err("expected a value")),
        }
    }
}

pub fn parse_expr(src: &str, line: usize) -> Result<Expr> {
    let toks = Lexer::new(src, line).tokens()?;
    if toks.is_empty() {
        return Err(GndError::Parse {
            line,
            col: 1,
            msg: "empty expression".into(),
        });
    }
    let mut p = Parser {
        toks,
        pos: 0,
        line,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(p.err("trailing input"));
    }
    Ok(e)
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluate an expression in a ring. `bindings` maps loop variables of `sum`
/// to integers; they shadow ring variables.
pub fn eval_expr(
    e: &Expr,
    ring: &Arc<RingContext>,
    bindings: &HashMap<String, BigInt>,
    line: usize,
) -> Result<LocalizedPoly> {
    let perr = |msg: String| GndError::Parse { line, col: 1, msg };
    match e {
        Expr::Int(n) => Ok(LocalizedPoly::from_poly(Poly::constant(
            ring,
            Coeff::from_integer(n.clone()),
        ))),
        Expr::Var(name) => {
            if let Some(v) = bindings.get(name) {
                return Ok(LocalizedPoly::from_poly(Poly::constant(
                    ring,
                    Coeff::from_integer(v.clone()),
                )));
            }
            Ok(LocalizedPoly::from_poly(Poly::var_named(ring, name)?))
        }
        Expr::Neg(x) => Ok(eval_expr(x, ring, bindings, line)?.neg()),
        Expr::Add(a, b) => eval_expr(a, ring, bindings, line)?.add(&eval_expr(b, ring, bindings, line)?),
        Expr::Sub(a, b) => eval_expr(a, ring, bindings, line)?.sub(&eval_expr(b, ring, bindings, line)?),
        Expr::Mul(a, b) => eval_expr(a, ring, bindings, line)?.mul(&eval_expr(b, ring, bindings, line)?),
        Expr::Div(a, b) => {
            let num = eval_expr(a, ring, bindings, line)?;
            let den = eval_expr(b, ring, bindings, line)?;
            if den.is_zero() {
                return Err(GndError::DivisionByZero);
            }
            num.div(&den)
        }
        Expr::Pow(a, b) => {
            let base = eval_expr(a, ring, bindings, line)?;
            let exp = eval_int(b, bindings).map_err(|_| perr("exponent must be an integer".into()))?;
            let exp = exp
                .to_u32()
                .ok_or_else(|| perr("exponent must be a small nonnegative integer".into()))?;
            base.pow(exp)
        }
        Expr::Call(name, args) => match name.as_str() {
            "factorial" => {
                if args.len() != 1 {
                    return Err(perr("factorial takes one argument".into()));
                }
                let n = eval_int(&args[0], bindings).map_err(|_| perr("factorial of a non-integer".into()))?;
                let n = n.to_u64().ok_or_else(|| perr("factorial argument too large".into()))?;
                let mut acc = BigInt::one();
                for k in 2..=n {
                    acc *= BigInt::from(k);
                }
                Ok(LocalizedPoly::from_poly(Poly::constant(
                    ring,
                    Coeff::from_integer(acc),
                )))
            }
            "sum" => {
                if args.len() != 4 {
                    return Err(perr("sum takes (i, lo, hi, body)".into()));
                }
                let var = match &args[0] {
                    Expr::Var(v) => v.clone(),
                    _ => return Err(perr("sum loop variable must be an identifier".into())),
                };
                let lo = eval_int(&args[1], bindings).map_err(|_| perr("sum bound".into()))?;
                let hi = eval_int(&args[2], bindings).map_err(|_| perr("sum bound".into()))?;
                let (lo, hi) = (
                    lo.to_i64().ok_or_else(|| perr("sum bound".into()))?,
                    hi.to_i64().ok_or_else(|| perr("sum bound".into()))?,
                );
                let mut acc = LocalizedPoly::zero(ring);
                let mut inner = bindings.clone();
                for k in lo..=hi {
                    inner.insert(var.clone(), BigInt::from(k));
                    acc = acc.add(&eval_expr(&args[3], ring, &inner, line)?)?;
                }
                Ok(acc)
            }
            "invp" => {
                if args.len() != 2 {
                    return Err(perr("invp takes (poly, bound)".into()));
                }
                let p = eval_expr(&args[0], ring, bindings, line)?;
                if !p.is_polynomial() {
                    return Err(perr("invp expects a polynomial argument".into()));
                }
                let bound = eval_int(&args[1], bindings).map_err(|_| perr("invp bound".into()))?;
                let bound = bound.to_u32().ok_or_else(|| perr("invp bound".into()))?;
                Ok(LocalizedPoly::from_poly(invp(&p.num, bound)?))
            }
            _ => Err(perr(format!("unknown function `{name}`"))),
        },
    }
}

fn eval_int(e: &Expr, bindings: &HashMap<String, BigInt>) -> Result<BigInt> {
    match e {
        Expr::Int(n) => Ok(n.clone()),
        Expr::Var(v) => bindings
            .get(v)
            .cloned()
            .ok_or_else(|| GndError::Other(format!("`{v}` is not an integer binding"))),
        Expr::Neg(x) => Ok(-eval_int(x, bindings)?),
        Expr::Add(a, b) => Ok(eval_int(a, bindings)? + eval_int(b, bindings)?),
        Expr::Sub(a, b) => Ok(eval_int(a, bindings)? - eval_int(b, bindings)?),
        Expr::Mul(a, b) => Ok(eval_int(a, bindings)? * eval_int(b, bindings)?),
        _ => Err(GndError::Other("not an integer expression".into())),
    }
}

/// Truncated inverse: `p * invp(p, bound) ≡ 1` modulo x-degree `bound`+1.
/// The constant term of `p` (in the x-variables) must be a nonzero rational.
pub fn invp(p: &Poly, bound: u32) -> Result<Poly> {
    let ring = p.ring().clone();
    let xmask = ring.mask_of(&[VarKind::X]);
    let p0 = p.set_zero_where(&xmask);
    let c0 = p0
        .constant_value()
        .ok_or_else(|| GndError::Other("invp: constant term must be rational".into()))?;
    if c0.is_zero() {
        return Err(GndError::Other(
            "invp: polynomial has no unit constant term".into(),
        ));
    }
    let inv_c0 = Coeff::one() / c0;
    let p_plus = p.sub(&p0).map_err(|_| GndError::RingMismatch)?;
    let mut q = Poly::constant(&ring, inv_c0.clone());
    for _ in 0..=bound {
        // q <- (1 - p_plus * q) / c0, truncated.
        let t = Poly::one(&ring)
            .sub(&p_plus.mul(&q)?)?
            .scale(&inv_c0)
            .truncate_degree_where(&xmask, bound);
        if t == q {
            break;
        }
        q = t;
    }
    Ok(q)
}

/// Parse and evaluate in one step, without loop-variable bindings.
pub fn parse_poly(src: &str, ring: &Arc<RingContext>) -> Result<LocalizedPoly> {
    let e = parse_expr(src, 1)?;
    eval_expr(&e, ring, &HashMap::new(), 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;

    fn ctx() -> Arc<RingContext> {
        RingContext::new(
            &["a1", "a2", "a3"],
            &["x1", "x2"],
            &["Y1", "Y2"],
            &["T1", "T2"],
            &[],
            TermOrder::Degrevlex,
        )
    }

    #[test]
    fn print_simple() {
        let c = ctx();
        let p = parse_poly("Y1+2*Y2", &c).unwrap();
        assert_eq!(print_poly(&p.num), "Y1+2*Y2");
        let q = parse_poly("x1^3-x2^2", &c).unwrap();
        assert_eq!(print_poly(&q.num), "x1^3-x2^2");
        assert_eq!(print_poly(&Poly::zero(&c)), "0");
    }

    #[test]
    fn parse_juxtaposition_and_powers() {
        let c = ctx();
        let a = parse_poly("2a1*a3", &c).unwrap();
        let b = parse_poly("2*a1*a3", &c).unwrap();
        assert_eq!(a, b);
        let p = parse_poly("(x1+x2)(x1-x2)", &c).unwrap();
        let q = parse_poly("x1^2-x2^2", &c).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_errors_carry_location() {
        let c = ctx();
        let e = parse_poly("Y1 + $", &c);
        match e {
            Err(GndError::Parse { col, .. }) => assert!(col >= 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        let e = parse_poly("Y9", &c);
        assert!(matches!(e, Err(GndError::UnknownVariable(_))));
    }

    #[test]
    fn fraction_printing_matches_transcript_style() {
        let c = ctx();
        // (-x2^3)/(2*a1*a3+a1)*T1
        let num = parse_poly("-x2^3*T1", &c).unwrap().num;
        let den = parse_poly("2*a1*a3+a1", &c).unwrap().num;
        let f = LocalizedPoly::new(num, den).unwrap();
        assert_eq!(print_fraction(&f), "(-x2^3)/(2*a1*a3+a1)*T1");
    }

    #[test]
    fn grouped_print_constant_denominator() {
        let c = ctx();
        let num = parse_poly("-a1*x1^2-2*a1*x1-2*a1", &c).unwrap().num;
        let den = Poly::from_int(&c, 2);
        let f = LocalizedPoly::new(num, den).unwrap();
        assert_eq!(print_fraction(&f), "(-a1*x1^2-2*a1*x1-2*a1)/2");
    }

    #[test]
    fn roundtrip_plain() {
        let c = ctx();
        for src in [
            "Y1+2*Y2",
            "x1^3-x2^2",
            "a3^2+a3+1",
            "-a1*x1^6-6*a1*x1^5-30*a1*x1^4",
            "2*a1*a3*a2+a1*a2-1",
        ] {
            let p = parse_poly(src, &c).unwrap();
            let printed = print_poly(&p.num);
            let q = parse_poly(&printed, &c).unwrap();
            assert_eq!(p, q, "{src} -> {printed}");
        }
    }

    #[test]
    fn invp_geometric_series() {
        let c = ctx();
        let p = parse_poly("1+a1*x2", &c).unwrap().num;
        let inv = invp(&p, 3).unwrap();
        let expect = parse_poly("1-a1*x2+a1^2*x2^2-a1^3*x2^3", &c).unwrap().num;
        assert_eq!(inv, expect);
        assert_eq!(invp(&Poly::one(&c), 7).unwrap(), Poly::one(&c));
    }

    #[test]
    fn invp_certifies_inverse() {
        let c = ctx();
        let p = parse_poly("1+a2*x2^2", &c).unwrap().num;
        let inv = invp(&p, 12).unwrap();
        let prod = p.mul(&inv).unwrap();
        let xmask = c.mask_of(&[VarKind::X]);
        let trunc = prod.truncate_degree_where(&xmask, 12);
        assert!(trunc.is_one());
    }

    #[test]
    fn sum_and_factorial_build_series() {
        let c = ctx();
        let p = parse_poly("sum(i, 0, 3, a1*x1^i/factorial(i))", &c).unwrap();
        let q = parse_poly("a1+a1*x1+a1*x1^2/2+a1*x1^3/6", &c).unwrap();
        assert_eq!(p.num, q.num);
    }
}
