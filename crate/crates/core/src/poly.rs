//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms are kept sorted descending under the ring's term order, so leading
//! terms are cheap and printing is deterministic.

use std::cmp::Ordering;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{GndError, Result};
use crate::ring::{Monomial, RingContext, VarKind};

pub type Coeff = BigRational;

#[derive(Clone)]
pub struct Poly {
    ring: Arc<RingContext>,
    /// Sorted descending under `ring.order()`; no zero coefficients.
    terms: Vec<(Monomial, Coeff)>,
}

impl std::fmt::Debug for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        for (m, c) in &self.terms {
            let mut s = format!("{c}");
            for (i, &e) in m.0.iter().enumerate() {
                if e == 1 {
                    s.push_str(&format!("*{}", self.ring.var_name(i)));
                } else if e > 1 {
                    s.push_str(&format!("*{}^{}", self.ring.var_name(i), e));
                }
            }
            parts.push(s);
        }
        write!(f, "{}", parts.join(" + "))
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.ring == other.ring && self.terms == other.terms
    }
}

impl Poly {
    pub fn zero(ring: &Arc<RingContext>) -> Poly {
        Poly {
            ring: ring.clone(),
            terms: Vec::new(),
        }
    }

    pub fn one(ring: &Arc<RingContext>) -> Poly {
        Poly::constant(ring, Coeff::one())
    }

    pub fn constant(ring: &Arc<RingContext>, c: Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero(ring);
        }
        Poly {
            ring: ring.clone(),
            terms: vec![(Monomial::one(ring.num_vars()), c)],
        }
    }

    pub fn from_int(ring: &Arc<RingContext>, n: i64) -> Poly {
        Poly::constant(ring, Coeff::from_integer(BigInt::from(n)))
    }

    pub fn var(ring: &Arc<RingContext>, idx: usize) -> Poly {
        Poly {
            ring: ring.clone(),
            terms: vec![(Monomial::var(ring.num_vars(), idx), Coeff::one())],
        }
    }

    pub fn var_named(ring: &Arc<RingContext>, name: &str) -> Result<Poly> {
        Ok(Poly::var(ring, ring.var_index(name)?))
    }

    pub fn monomial(ring: &Arc<RingContext>, m: Monomial, c: Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero(ring);
        }
        Poly {
            ring: ring.clone(),
            terms: vec![(m, c)],
        }
    }

    /// Build from unsorted term list, combining duplicates.
    pub fn from_terms(ring: &Arc<RingContext>, mut terms: Vec<(Monomial, Coeff)>) -> Poly {
        let order = ring.order().clone();
        terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        let mut out: Vec<(Monomial, Coeff)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 += c;
                    if last.1.is_zero() {
                        out.pop();
                    }
                    continue;
                }
            }
            if !c.is_zero() {
                out.push((m, c));
            }
        }
        Poly { ring: ring.clone(), terms: out }
    }

    pub fn ring(&self) -> &Arc<RingContext> {
        &self.ring
    }

    pub fn terms(&self) -> &[(Monomial, Coeff)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    /// The rational constant value, if this polynomial is constant.
    pub fn constant_value(&self) -> Option<Coeff> {
        if self.is_zero() {
            return Some(Coeff::zero());
        }
        if self.is_constant() {
            return Some(self.terms[0].1.clone());
        }
        None
    }

    pub fn leading(&self) -> Option<&(Monomial, Coeff)> {
        self.terms.first()
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.first().map(|(m, _)| m)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    pub fn degree_where(&self, mask: &[bool]) -> u32 {
        self.terms
            .iter()
            .map(|(m, _)| m.degree_where(mask))
            .max()
            .unwrap_or(0)
    }

    /// Minimal degree over masked variables (the m-adic order when masking x).
    pub fn min_degree_where(&self, mask: &[bool]) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.degree_where(mask)).min()
    }

    pub fn uses_var(&self, idx: usize) -> bool {
        self.terms.iter().any(|(m, _)| m.0[idx] > 0)
    }

    pub fn uses_kind(&self, kind: VarKind) -> bool {
        let mask = self.ring.mask_of(&[kind]);
        self.terms.iter().any(|(m, _)| !m.supported_on(
            &mask.iter().map(|&b| !b).collect::<Vec<_>>(),
        ))
    }

    pub fn supported_on(&self, mask: &[bool]) -> bool {
        self.terms.iter().all(|(m, _)| m.supported_on(mask))
    }

    pub fn neg(&self) -> Poly {
        Poly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Result<Poly> {
        self.check_ring(other)?;
        let order = self.ring.order().clone();
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match order.cmp(&self.terms[i].0, &other.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Ok(Poly { ring: self.ring.clone(), terms: out })
    }

    pub fn sub(&self, other: &Poly) -> Result<Poly> {
        self.add(&other.neg())
    }

    pub fn mul_term(&self, m: &Monomial, c: &Coeff) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.ring);
        }
        Poly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(tm, tc)| (tm.mul(m), tc * c))
                .collect(),
        }
    }

    pub fn scale(&self, c: &Coeff) -> Poly {
        self.mul_term(&Monomial::one(self.ring.num_vars()), c)
    }

    pub fn mul(&self, other: &Poly) -> Result<Poly> {
        self.check_ring(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Poly::zero(&self.ring));
        }
        // Accumulate into a vector and combine; fine at the scales we run.
        let mut acc: Vec<(Monomial, Coeff)> =
            Vec::with_capacity(self.terms.len() * other.terms.len());
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                acc.push((m1.mul(m2), c1 * c2));
            }
        }
        Ok(Poly::from_terms(&self.ring, acc))
    }

    pub fn pow(&self, k: u32) -> Result<Poly> {
        let mut out = Poly::one(&self.ring);
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Exact polynomial division: returns `w` with `w * q == self`.
    pub fn exact_div(&self, q: &Poly) -> Result<Poly> {
        self.exact_div_budgeted(q, usize::MAX)
    }

    /// Exact division giving up after `max_steps` quotient terms; used by
    /// speculative cancellations where a failed division must stay cheap.
    pub fn exact_div_budgeted(&self, q: &Poly, max_steps: usize) -> Result<Poly> {
        self.check_ring(q)?;
        if q.is_zero() {
            return Err(GndError::DivisionByZero);
        }
        let order = self.ring.order().clone();
        let (qlm, qlc) = q.leading().unwrap();
        let mut rem = self.clone();
        let mut quot: Vec<(Monomial, Coeff)> = Vec::new();
        while let Some((rlm, rlc)) = rem.leading().cloned() {
            if quot.len() >= max_steps {
                return Err(GndError::NotDivisible);
            }
            let m = rlm
                .checked_div(qlm)
                .ok_or(GndError::NotDivisible)?;
            let c = rlc / qlc;
            rem = rem.sub(&q.mul_term(&m, &c))?;
            // Each step strictly lowers the leading monomial.
            if let Some(nl) = rem.leading_monomial() {
                debug_assert!(order.cmp(nl, &rlm) == Ordering::Less);
            }
            quot.push((m, c));
        }
        Ok(Poly::from_terms(&self.ring, quot))
    }

    /// Formal partial derivative with respect to variable `v`.
    pub fn derivative(&self, v: usize) -> Result<Poly> {
        if v >= self.ring.num_vars() {
            return Err(GndError::UnknownVariable(format!("#{v}")));
        }
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            let e = m.0[v];
            if e == 0 {
                continue;
            }
            let mut m2 = m.clone();
            m2.0[v] = e - 1;
            terms.push((m2, c * Coeff::from_integer(BigInt::from(e))));
        }
        Ok(Poly::from_terms(&self.ring, terms))
    }

    /// Substitute `x_i -> 0` for every variable satisfying the mask.
    pub fn set_zero_where(&self, mask: &[bool]) -> Poly {
        let terms: Vec<(Monomial, Coeff)> = self
            .terms
            .iter()
            .filter(|(m, _)| m.supported_on(&mask.iter().map(|&b| !b).collect::<Vec<_>>()))
            .cloned()
            .collect();
        Poly { ring: self.ring.clone(), terms }
    }

    /// Drop every term whose degree over the masked variables exceeds `bound`.
    pub fn truncate_degree_where(&self, mask: &[bool], bound: u32) -> Poly {
        let terms: Vec<(Monomial, Coeff)> = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree_where(mask) <= bound)
            .cloned()
            .collect();
        Poly { ring: self.ring.clone(), terms }
    }

    /// Move this polynomial into another context, matching variables by name.
    /// Only variables that actually occur need to exist in the target.
    pub fn lift(&self, target: &Arc<RingContext>) -> Result<Poly> {
        if &self.ring == target {
            return Ok(self.clone());
        }
        let map: Vec<Option<usize>> = self
            .ring
            .names()
            .iter()
            .map(|n| target.var_index(n).ok())
            .collect();
        let mut terms = Vec::with_capacity(self.terms.len());
        for (m, c) in &self.terms {
            let mut e = vec![0u32; target.num_vars()];
            for (i, &exp) in m.0.iter().enumerate() {
                if exp == 0 {
                    continue;
                }
                match map[i] {
                    Some(t) => e[t] += exp,
                    None => {
                        return Err(GndError::UnknownVariable(
                            self.ring.var_name(i).to_string(),
                        ))
                    }
                }
            }
            terms.push((Monomial(e), c.clone()));
        }
        Ok(Poly::from_terms(target, terms))
    }

    /// Greatest common rational content together with the sign of the leading
    /// coefficient: `self == content * primitive_part` where the primitive
    /// part has coprime integer coefficients and positive leading one.
    pub fn content(&self) -> Coeff {
        if self.is_zero() {
            return Coeff::one();
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num_integer::Integer::gcd(&num_gcd, c.numer());
            den_lcm = num_integer::Integer::lcm(&den_lcm, c.denom());
        }
        let mut content = Coeff::new(num_gcd, den_lcm);
        if self.terms[0].1.is_negative() {
            content = -content;
        }
        content
    }

    pub fn primitive_part(&self) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let c = self.content();
        self.scale(&(Coeff::one() / c))
    }

    /// Monic form: leading coefficient one.
    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some((_, lc)) => self.scale(&(Coeff::one() / lc)),
        }
    }

    /// Divide out the largest monomial dividing every term.
    pub fn monomial_content(&self) -> Monomial {
        let mut it = self.terms.iter();
        let mut acc = match it.next() {
            None => return Monomial::one(self.ring.num_vars()),
            Some((m, _)) => m.clone(),
        };
        for (m, _) in it {
            acc = Monomial(acc.0.iter().zip(&m.0).map(|(a, b)| *a.min(b)).collect());
        }
        acc
    }

    fn check_ring(&self, other: &Poly) -> Result<()> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(GndError::RingMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;

    fn ctx() -> Arc<RingContext> {
        RingContext::new(&[], &[], &["Y1", "Y2"], &[], &[], TermOrder::Degrevlex)
    }

    fn y(c: &Arc<RingContext>, i: usize) -> Poly {
        Poly::var(c, i)
    }

    #[test]
    fn difference_of_squares() {
        let c = ctx();
        let (y1, y2) = (y(&c, 0), y(&c, 1));
        let p = y1.add(&y2).unwrap().mul(&y1.sub(&y2).unwrap()).unwrap();
        let expect = y1.pow(2).unwrap().sub(&y2.pow(2).unwrap()).unwrap();
        assert_eq!(p, expect);
    }

    #[test]
    fn cyclotomic_factor_of_cube_difference() {
        // (Y1^2+Y1*Y2+Y2^2)*(Y1-Y2) = Y1^3-Y2^3
        let c = ctx();
        let (y1, y2) = (y(&c, 0), y(&c, 1));
        let q = y1
            .pow(2)
            .unwrap()
            .add(&y1.mul(&y2).unwrap())
            .unwrap()
            .add(&y2.pow(2).unwrap())
            .unwrap();
        let p = q.mul(&y1.sub(&y2).unwrap()).unwrap();
        let expect = y1.pow(3).unwrap().sub(&y2.pow(3).unwrap()).unwrap();
        assert_eq!(p, expect);
        // And exact division recovers the factor.
        assert_eq!(expect.exact_div(&y1.sub(&y2).unwrap()).unwrap(), q);
    }

    #[test]
    fn additive_inverse() {
        let c = ctx();
        let p = y(&c, 0).pow(3).unwrap().add(&Poly::from_int(&c, 7)).unwrap();
        assert!(p.add(&p.neg()).unwrap().is_zero());
    }

    #[test]
    fn exact_div_rejects_nondivisible() {
        // (Y1^3 - Y2^2) / (Y1 - Y2) leaves a remainder.
        let c = ctx();
        let p = y(&c, 0).pow(3).unwrap().sub(&y(&c, 1).pow(2).unwrap()).unwrap();
        let q = y(&c, 0).sub(&y(&c, 1)).unwrap();
        assert_eq!(p.exact_div(&q), Err(GndError::NotDivisible));
    }

    #[test]
    fn derivative_examples() {
        let c = ctx();
        let (y1, y2) = (y(&c, 0), y(&c, 1));
        // d(Y1^2+Y1*Y2+Y2^2)/dY2 = Y1 + 2*Y2
        let f = y1
            .pow(2)
            .unwrap()
            .add(&y1.mul(&y2).unwrap())
            .unwrap()
            .add(&y2.pow(2).unwrap())
            .unwrap();
        let d = f.derivative(1).unwrap();
        let expect = y1.add(&y2.scale(&Coeff::from_integer(2.into()))).unwrap();
        assert_eq!(d, expect);
        // d(Y1^3 - Y2^3)/dY2 = -3*Y2^2
        let g = y1.pow(3).unwrap().sub(&y2.pow(3).unwrap()).unwrap();
        assert_eq!(
            g.derivative(1).unwrap(),
            y2.pow(2).unwrap().scale(&Coeff::from_integer((-3).into()))
        );
        // constants die
        assert!(Poly::from_int(&c, 5).derivative(0).unwrap().is_zero());
    }

    #[test]
    fn content_and_primitive() {
        let c = ctx();
        let p = y(&c, 0)
            .scale(&Coeff::new(4.into(), 6.into()))
            .add(&Poly::constant(&c, Coeff::new(2.into(), 3.into())))
            .unwrap();
        let prim = p.primitive_part();
        assert_eq!(prim, y(&c, 0).add(&Poly::one(&c)).unwrap());
    }
}
