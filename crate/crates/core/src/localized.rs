//! Fractions over the local ring: numerator any polynomial, denominator a
//! local unit in the x- and parameter-variables (nonzero constant term after
//! killing the x-block, tested modulo aid).

use std::sync::Arc;

use num_traits::One;

use crate::error::{GndError, Result};
use crate::ideal::normal_form;
use crate::poly::{Coeff, Poly};
use crate::ring::{Monomial, RingContext, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedPoly {
    pub num: Poly,
    pub den: Poly,
}

impl LocalizedPoly {
    pub fn from_poly(num: Poly) -> LocalizedPoly {
        let den = Poly::one(num.ring());
        LocalizedPoly { num, den }
    }

    pub fn new(num: Poly, den: Poly) -> Result<LocalizedPoly> {
        let allowed = num.ring().mask_of(&[VarKind::Param, VarKind::X]);
        if !den.supported_on(&allowed) {
            return Err(GndError::NonUnitDenominator);
        }
        let mut f = LocalizedPoly { num, den };
        f.reduce();
        f.check_unit()?;
        Ok(f)
    }

    pub fn zero(ring: &Arc<RingContext>) -> LocalizedPoly {
        LocalizedPoly::from_poly(Poly::zero(ring))
    }

    pub fn one(ring: &Arc<RingContext>) -> LocalizedPoly {
        LocalizedPoly::from_poly(Poly::one(ring))
    }

    pub fn ring(&self) -> &Arc<RingContext> {
        self.num.ring()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    /// The local-unit invariant: substituting every x-variable by zero leaves
    /// a parameter element that is nonzero mod aid.
    pub fn check_unit(&self) -> Result<()> {
        let ring = self.ring();
        let xmask = ring.mask_of(&[VarKind::X]);
        let at_zero = self.den.set_zero_where(&xmask);
        let rels = ring.param_rels().to_vec();
        if normal_form(&at_zero, &rels)?.is_zero() {
            return Err(GndError::NonUnitDenominator);
        }
        Ok(())
    }

    /// Cancel common monomial and rational content. Not a full gcd.
    pub fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = Poly::one(self.ring());
            return;
        }
        let mn = self.num.monomial_content();
        let md = self.den.monomial_content();
        let common = Monomial(
            mn.0.iter()
                .zip(&md.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        );
        if !common.is_one() {
            self.num = strip(&self.num, &common);
            self.den = strip(&self.den, &common);
        }
        // Try exact cancellation of the whole denominator.
        if !self.den.is_constant() {
            if let Ok(q) = self.num.exact_div(&self.den) {
                self.num = q;
                self.den = Poly::one(self.ring());
            }
        }
        let c = self.den.content();
        if !c.is_one() {
            let inv = Coeff::one() / c;
            self.num = self.num.scale(&inv);
            self.den = self.den.scale(&inv);
        }
    }

    pub fn add(&self, other: &LocalizedPoly) -> Result<LocalizedPoly> {
        if self.den == other.den {
            return LocalizedPoly::new(self.num.add(&other.num)?, self.den.clone());
        }
        let num = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        LocalizedPoly::new(num, self.den.mul(&other.den)?)
    }

    pub fn sub(&self, other: &LocalizedPoly) -> Result<LocalizedPoly> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LocalizedPoly {
        LocalizedPoly {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &LocalizedPoly) -> Result<LocalizedPoly> {
        LocalizedPoly::new(self.num.mul(&other.num)?, self.den.mul(&other.den)?)
    }

    pub fn mul_poly(&self, p: &Poly) -> Result<LocalizedPoly> {
        LocalizedPoly::new(self.num.mul(p)?, self.den.clone())
    }

    pub fn scale(&self, c: &Coeff) -> LocalizedPoly {
        LocalizedPoly {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, k: u32) -> Result<LocalizedPoly> {
        let mut out = LocalizedPoly::one(self.ring());
        for _ in 0..k {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Division by another fraction whose numerator is a local unit.
    pub fn div(&self, other: &LocalizedPoly) -> Result<LocalizedPoly> {
        LocalizedPoly::new(self.num.mul(&other.den)?, self.den.mul(&other.num)?)
    }

    pub fn lift(&self, target: &Arc<RingContext>) -> Result<LocalizedPoly> {
        Ok(LocalizedPoly {
            num: self.num.lift(target)?,
            den: self.den.lift(target)?,
        })
    }

    /// Semantic equality modulo a relation basis: cross-multiplied difference
    /// has zero normal form. Valid because denominators are units.
    pub fn eq_mod(&self, other: &LocalizedPoly, rels: &[Poly]) -> Result<bool> {
        let cross = self
            .num
            .mul(&other.den)?
            .sub(&other.num.mul(&self.den)?)?;
        Ok(normal_form(&cross, rels)?.is_zero())
    }

    /// Reduce the numerator to normal form modulo the relations, then cancel
    /// content again. The denominator keeps its multiplicative (product)
    /// form so factor bookkeeping stays possible.
    pub fn normalized(&self, rels: &[Poly]) -> Result<LocalizedPoly> {
        let num = normal_form(&self.num, rels)?;
        LocalizedPoly::new(num, self.den.clone())
    }

    /// Cancel common factors drawn from a pool of candidate divisors (for
    /// example the image denominators). Speculative divisions are budgeted so
    /// failures stay cheap; a missed cancellation only costs size.
    pub fn cancel_factors(&mut self, pool: &[Poly]) {
        if self.num.is_zero() || self.den.is_one() {
            return;
        }
        let budget = 4 * self.num.terms().len() + 64;
        loop {
            let mut progress = false;
            for f in pool {
                if f.is_constant() || f.is_zero() {
                    continue;
                }
                loop {
                    let Ok(d2) = self.den.exact_div_budgeted(f, budget) else {
                        break;
                    };
                    let Ok(n2) = self.num.exact_div_budgeted(f, budget) else {
                        break;
                    };
                    self.num = n2;
                    self.den = d2;
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        self.reduce();
    }
}

fn strip(p: &Poly, m: &Monomial) -> Poly {
    let terms = p
        .terms()
        .iter()
        .map(|(tm, tc)| (tm.checked_div(m).unwrap(), tc.clone()))
        .collect();
    Poly::from_terms(p.ring(), terms)
}

/// Simultaneous substitution of ring variables by fractions. Variables with
/// no assignment are left alone; the result denominator is a product of
/// assignment denominators, hence a unit.
pub fn substitute(p: &Poly, assign: &[Option<LocalizedPoly>]) -> Result<LocalizedPoly> {
    let ring = p.ring().clone();
    // Cache powers of each assigned value.
    let mut powers: Vec<Vec<LocalizedPoly>> = assign
        .iter()
        .map(|a| match a {
            Some(v) => vec![LocalizedPoly::one(v.ring())],
            None => vec![],
        })
        .collect();
    let mut acc = LocalizedPoly::zero(&ring);
    for (m, c) in p.terms() {
        let mut term = LocalizedPoly::from_poly(Poly::constant(&ring, c.clone()));
        for (i, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            match &assign[i] {
                None => {
                    term = term.mul_poly(&Poly::monomial(
                        &ring,
                        Monomial::var(ring.num_vars(), i).pow(e),
                        Coeff::one(),
                    ))?;
                }
                Some(v) => {
                    while powers[i].len() <= e as usize {
                        let next = powers[i].last().unwrap().mul(v)?;
                        powers[i].push(next);
                    }
                    term = term.mul(&powers[i][e as usize])?;
                }
            }
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;

    fn ctx() -> Arc<RingContext> {
        let ring = RingContext::new(
            &["a1", "a3"],
            &["x1", "x2"],
            &["Y1", "Y2"],
            &[],
            &[],
            TermOrder::Degrevlex,
        );
        let a3 = Poly::var_named(&ring, "a3").unwrap();
        let aid = a3.pow(2).unwrap().add(&a3).unwrap().add(&Poly::one(&ring)).unwrap();
        ring.set_param_rels(vec![aid]);
        ring
    }

    #[test]
    fn unit_check_rejects_pure_x_denominator() {
        let c = ctx();
        let x2 = Poly::var_named(&c, "x2").unwrap();
        assert!(LocalizedPoly::new(Poly::one(&c), x2).is_err());
    }

    #[test]
    fn unit_check_accepts_one_plus_x() {
        let c = ctx();
        let x2 = Poly::var_named(&c, "x2").unwrap();
        let den = Poly::one(&c).add(&x2).unwrap();
        assert!(LocalizedPoly::new(Poly::one(&c), den).is_ok());
    }

    #[test]
    fn identity_substitution() {
        let c = ctx();
        let y1 = Poly::var_named(&c, "Y1").unwrap();
        let y2 = Poly::var_named(&c, "Y2").unwrap();
        let p = y1.pow(2).unwrap().add(&y2).unwrap();
        let assign: Vec<Option<LocalizedPoly>> = (0..c.num_vars())
            .map(|i| Some(LocalizedPoly::from_poly(Poly::var(&c, i))))
            .collect();
        let s = substitute(&p, &assign).unwrap();
        assert_eq!(s.num, p);
        assert!(s.den.is_one());
    }

    #[test]
    fn kernel_generator_dies_under_the_map() {
        // Y1 -> a1 x2, Y2 -> a1 a3 x2 kills Y1^2 + Y1 Y2 + Y2^2 mod aid.
        let c = ctx();
        let (a1, a3) = (
            Poly::var_named(&c, "a1").unwrap(),
            Poly::var_named(&c, "a3").unwrap(),
        );
        let x2 = Poly::var_named(&c, "x2").unwrap();
        let y1 = Poly::var_named(&c, "Y1").unwrap();
        let y2 = Poly::var_named(&c, "Y2").unwrap();
        let f = y1
            .pow(2)
            .unwrap()
            .add(&y1.mul(&y2).unwrap())
            .unwrap()
            .add(&y2.pow(2).unwrap())
            .unwrap();
        let mut assign: Vec<Option<LocalizedPoly>> = vec![None; c.num_vars()];
        assign[c.var_index("Y1").unwrap()] =
            Some(LocalizedPoly::from_poly(a1.mul(&x2).unwrap()));
        assign[c.var_index("Y2").unwrap()] = Some(LocalizedPoly::from_poly(
            a1.mul(&a3).unwrap().mul(&x2).unwrap(),
        ));
        let v = substitute(&f, &assign).unwrap();
        let rels = c.param_rels().to_vec();
        let nf = normal_form(&v.num, &rels).unwrap();
        assert!(nf.is_zero());
    }

    #[test]
    fn fraction_cancellation() {
        let c = ctx();
        let x2 = Poly::var_named(&c, "x2").unwrap();
        let den = Poly::one(&c).add(&x2).unwrap();
        // (x2^2 * (1+x2)) / (x2 * (1+x2)) cancels down to x2 / 1.
        let num = x2.pow(2).unwrap().mul(&den).unwrap();
        let d = x2.mul(&den).unwrap();
        let f = LocalizedPoly::new(num.clone(), d).unwrap();
        assert_eq!(f.num, x2);
        assert!(f.den.is_one());
        // A genuinely non-unit denominator is still rejected.
        assert!(LocalizedPoly::new(den.clone(), x2.clone()).is_err());
        let f = LocalizedPoly::new(num, den.clone()).unwrap();
        assert_eq!(f.num, x2.pow(2).unwrap());
        assert!(f.den.is_one());
    }
}
