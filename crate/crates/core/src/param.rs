//! The coefficient field K = Frac(Q[a]/aid).
//!
//! Elements are reduced numerator/denominator pairs of parameter polynomials.
//! Both sides are kept in normal form against the cached standard basis of
//! aid, the denominator is monic, and inversion is done by linear algebra on
//! the staircase basis of Q[a]/aid over the free parameters.

use std::sync::Arc;

use num_traits::{One, Zero};

use crate::error::{GndError, Result};
use crate::ideal::normal_form;
use crate::poly::{Coeff, Poly};
use crate::ring::{Monomial, RingContext, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamFieldElement {
    pub num: Poly,
    pub den: Poly,
}

impl ParamFieldElement {
    pub fn new(num: Poly, den: Poly) -> Result<ParamFieldElement> {
        let ring = num.ring().clone();
        let param_mask = ring.mask_of(&[VarKind::Param]);
        if !num.supported_on(&param_mask) || !den.supported_on(&param_mask) {
            return Err(GndError::Other(
                "parameter field elements may use parameter variables only".into(),
            ));
        }
        let mut e = ParamFieldElement { num, den };
        e.canonicalize()?;
        Ok(e)
    }

    pub fn from_poly(num: Poly) -> Result<ParamFieldElement> {
        let one = Poly::one(num.ring());
        ParamFieldElement::new(num, one)
    }

    pub fn one(ring: &Arc<RingContext>) -> ParamFieldElement {
        ParamFieldElement {
            num: Poly::one(ring),
            den: Poly::one(ring),
        }
    }

    pub fn zero(ring: &Arc<RingContext>) -> ParamFieldElement {
        ParamFieldElement {
            num: Poly::zero(ring),
            den: Poly::one(ring),
        }
    }

    pub fn ring(&self) -> &Arc<RingContext> {
        self.num.ring()
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Reduce both sides mod aid, cancel monomial and rational content, and
    /// scale the denominator monic. Idempotent.
    pub fn canonicalize(&mut self) -> Result<()> {
        let rels = self.ring().param_rels().to_vec();
        self.num = normal_form(&self.num, &rels)?;
        self.den = normal_form(&self.den, &rels)?;
        if self.den.is_zero() {
            return Err(GndError::DivisionByZero);
        }
        if self.num.is_zero() {
            self.den = Poly::one(self.ring());
            return Ok(());
        }
        let mc = self.num.monomial_content();
        let md = self.den.monomial_content();
        let common = Monomial(
            mc.0.iter()
                .zip(&md.0)
                .map(|(a, b)| *a.min(b))
                .collect(),
        );
        if !common.is_one() {
            self.num = strip_monomial(&self.num, &common);
            self.den = strip_monomial(&self.den, &common);
        }
        let lc = self.den.leading().unwrap().1.clone();
        let inv = Coeff::one() / lc;
        self.num = self.num.scale(&inv);
        self.den = self.den.scale(&inv);
        Ok(())
    }

    pub fn add(&self, other: &ParamFieldElement) -> Result<ParamFieldElement> {
        let num = self
            .num
            .mul(&other.den)?
            .add(&other.num.mul(&self.den)?)?;
        ParamFieldElement::new(num, self.den.mul(&other.den)?)
    }

    pub fn sub(&self, other: &ParamFieldElement) -> Result<ParamFieldElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ParamFieldElement {
        ParamFieldElement {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &ParamFieldElement) -> Result<ParamFieldElement> {
        ParamFieldElement::new(self.num.mul(&other.num)?, self.den.mul(&other.den)?)
    }

    pub fn div(&self, other: &ParamFieldElement) -> Result<ParamFieldElement> {
        if other.is_zero() {
            return Err(GndError::DivisionByZero);
        }
        ParamFieldElement::new(self.num.mul(&other.den)?, self.den.mul(&other.num)?)
    }

    /// Multiplicative inverse of a parameter polynomial modulo aid.
    pub fn invert_poly(w: &Poly) -> Result<ParamFieldElement> {
        let rels = w.ring().param_rels().to_vec();
        let wred = normal_form(w, &rels)?;
        if wred.is_zero() {
            return Err(GndError::DivisionByZero);
        }
        ParamFieldElement::new(Poly::one(w.ring()), wred)
    }

    /// Semantic equality: NF(num1·den2 − num2·den1, aid) = 0.
    pub fn eq_semantic(&self, other: &ParamFieldElement) -> Result<bool> {
        let rels = self.ring().param_rels().to_vec();
        let cross = self
            .num
            .mul(&other.den)?
            .sub(&other.num.mul(&self.den)?)?;
        Ok(normal_form(&cross, &rels)?.is_zero())
    }

    /// Express this element with denominator one, inverting the denominator by
    /// linear algebra over the monomial staircase of Q[a]/aid. Errors with
    /// `NonInvertible` when the denominator is a zero-divisor mod aid.
    pub fn flatten(&self) -> Result<Poly> {
        if self.den.is_one() {
            return Ok(self.num.clone());
        }
        let inv = invert_mod_aid(&self.den)?;
        let rels = self.ring().param_rels().to_vec();
        normal_form(&self.num.mul(&inv)?, &rels)
    }
}

fn strip_monomial(p: &Poly, m: &Monomial) -> Poly {
    let terms = p
        .terms()
        .iter()
        .map(|(tm, tc)| (tm.checked_div(m).unwrap(), tc.clone()))
        .collect();
    Poly::from_terms(p.ring(), terms)
}

/// Solve w·q ≡ 1 mod aid by Gaussian elimination over the rational functions
/// in the free parameters. The staircase must be finite over the algebraic
/// parameters; `NonInvertible` when no solution exists.
pub fn invert_mod_aid(w: &Poly) -> Result<Poly> {
    let ring = w.ring().clone();
    let rels = ring.param_rels().to_vec();
    let wred = normal_form(w, &rels)?;
    if wred.is_zero() {
        return Err(GndError::DivisionByZero);
    }
    if wred.is_constant() {
        let c = wred.constant_value().unwrap();
        return Ok(Poly::constant(&ring, Coeff::one() / c));
    }
    // Monomials below the staircase of aid restricted to the variables that
    // actually carry relations; free parameters stay in the coefficients.
    let basis = staircase(&ring, &rels, w)?;
    // Unknown q = sum q_b * b. Equation: NF(w*q) = 1. Collect the linear
    // system by expanding NF(w*b) over the staircase monomials.
    let n = basis.len();
    // Matrix rows indexed by staircase monomials appearing in any product.
    let mut rows: Vec<Monomial> = Vec::new();
    let mut cols: Vec<Vec<(usize, Poly)>> = Vec::with_capacity(n);
    for b in &basis {
        let prod = normal_form(&wred.mul(&Poly::monomial(&ring, b.clone(), Coeff::one()))?, &rels)?;
        let mut col = Vec::new();
        for (m, c) in prod.terms() {
            // Split monomial into staircase part and free-parameter part: here
            // all parameter variables are in the staircase computation, so the
            // coefficient of the staircase monomial is rational. For free
            // parameters we keep the whole monomial as the row key.
            let idx = match rows.iter().position(|r| r == m) {
                Some(i) => i,
                None => {
                    rows.push(m.clone());
                    rows.len() - 1
                }
            };
            col.push((idx, Poly::constant(&ring, c.clone())));
        }
        cols.push(col);
    }
    // Dense Gaussian elimination over Q with Poly entries that are constants.
    let m = rows.len();
    let mut mat: Vec<Vec<Coeff>> = vec![vec![Coeff::zero(); n + 1]; m];
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col {
            mat[*i][j] = v.constant_value().ok_or(GndError::NonInvertible)?;
        }
    }
    // Right-hand side: the monomial 1.
    if let Some(one_row) = rows.iter().position(|r| r.is_one()) {
        mat[one_row][n] = Coeff::one();
    } else {
        return Err(GndError::NonInvertible);
    }
    let sol = solve_rational(mat, n).ok_or(GndError::NonInvertible)?;
    let mut q = Poly::zero(&ring);
    for (b, c) in basis.iter().zip(&sol) {
        if !c.is_zero() {
            q = q.add(&Poly::monomial(&ring, b.clone(), c.clone()))?;
        }
    }
    Ok(q)
}

/// The monomials under the staircase of the parameter relations, in the
/// variables relevant to `w`; bails out when the staircase is infinite in
/// those variables (then inversion falls back to keeping the fraction).
fn staircase(ring: &Arc<RingContext>, rels: &[Poly], w: &Poly) -> Result<Vec<Monomial>> {
    let nvars = ring.num_vars();
    // Variables constrained by some leading monomial of the relations, plus
    // the variables of w.
    let mut active = vec![false; nvars];
    for r in rels {
        if let Some(lm) = r.leading_monomial() {
            for (i, &e) in lm.0.iter().enumerate() {
                if e > 0 {
                    active[i] = true;
                }
            }
        }
    }
    for (m, _) in w.terms() {
        for (i, &e) in m.0.iter().enumerate() {
            if e > 0 {
                active[i] = true;
            }
        }
    }
    // Bound per active variable from pure-power leading monomials; if a
    // variable is active but unbounded, inversion by linear algebra would not
    // terminate, so give a generous cap and let the solver fail cleanly.
    let mut bound = vec![0u32; nvars];
    for (i, &a) in active.iter().enumerate() {
        if !a {
            continue;
        }
        let mut b = None;
        for r in rels {
            if let Some(lm) = r.leading_monomial() {
                if lm.0[i] > 0 && lm.0.iter().enumerate().all(|(j, &e)| j == i || e == 0) {
                    b = Some(lm.0[i]);
                }
            }
        }
        bound[i] = b.ok_or(GndError::NonInvertible)?;
    }
    // Enumerate exponent boxes under the bounds, then filter to true normal
    // forms (not divisible by any relation lead).
    let mut out = vec![Monomial::one(nvars)];
    for (i, &a) in active.iter().enumerate() {
        if !a {
            continue;
        }
        let mut next = Vec::new();
        for m in &out {
            for e in 0..bound[i] {
                let mut mm = m.clone();
                mm.0[i] = e;
                next.push(mm);
            }
        }
        out = next;
    }
    let leads: Vec<&Monomial> = rels
        .iter()
        .filter_map(|r| r.leading_monomial())
        .collect();
    Ok(out
        .into_iter()
        .filter(|m| !leads.iter().any(|l| l.divides(m)))
        .collect())
}

fn solve_rational(mut mat: Vec<Vec<Coeff>>, n: usize) -> Option<Vec<Coeff>> {
    let m = mat.len();
    let mut pivot_of_col: Vec<Option<usize>> = vec![None; n];
    let mut row = 0;
    for col in 0..n {
        let mut piv = None;
        for r in row..m {
            if !mat[r][col].is_zero() {
                piv = Some(r);
                break;
            }
        }
        let Some(p) = piv else { continue };
        mat.swap(row, p);
        let inv = Coeff::one() / mat[row][col].clone();
        for c in col..=n {
            mat[row][c] = &mat[row][c] * &inv;
        }
        for r in 0..m {
            if r != row && !mat[r][col].is_zero() {
                let f = mat[r][col].clone();
                for c in col..=n {
                    let x = &mat[row][c] * &f;
                    mat[r][c] = &mat[r][c] - &x;
                }
            }
        }
        pivot_of_col[col] = Some(row);
        row += 1;
        if row == m {
            break;
        }
    }
    // Inconsistency: zero row with nonzero rhs.
    for r in 0..m {
        if mat[r][..n].iter().all(|c| c.is_zero()) && !mat[r][n].is_zero() {
            return None;
        }
    }
    let mut sol = vec![Coeff::zero(); n];
    for col in 0..n {
        if let Some(r) = pivot_of_col[col] {
            sol[col] = mat[r][n].clone();
        }
    }
    Some(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;

    /// k' = Q(a1,a2)[a3]/(a3^2+a3+1)
    fn kprime() -> Arc<RingContext> {
        let ring = RingContext::new(
            &["a1", "a2", "a3"],
            &["x1", "x2"],
            &[],
            &[],
            &[],
            TermOrder::Degrevlex,
        );
        let a3 = Poly::var_named(&ring, "a3").unwrap();
        let aid = a3
            .pow(2)
            .unwrap()
            .add(&a3)
            .unwrap()
            .add(&Poly::one(&ring))
            .unwrap();
        ring.set_param_rels(vec![aid.monic()]);
        ring
    }

    #[test]
    fn square_of_root_reduces() {
        // a3 * a3 = -a3 - 1 mod (a3^2+a3+1)
        let ring = kprime();
        let a3 = ParamFieldElement::from_poly(Poly::var_named(&ring, "a3").unwrap()).unwrap();
        let sq = a3.mul(&a3).unwrap();
        let expect = ParamFieldElement::from_poly(
            Poly::var_named(&ring, "a3")
                .unwrap()
                .neg()
                .sub(&Poly::one(&ring))
                .unwrap(),
        )
        .unwrap();
        assert_eq!(sq, expect);
    }

    #[test]
    fn additive_identity() {
        let ring = kprime();
        let u = ParamFieldElement::new(
            Poly::var_named(&ring, "a1").unwrap(),
            Poly::var_named(&ring, "a3").unwrap(),
        )
        .unwrap();
        let z = ParamFieldElement::zero(&ring);
        assert!(u.add(&z).unwrap().eq_semantic(&u).unwrap());
    }

    #[test]
    fn inverse_of_linear_in_root() {
        // 1/(2a3+1) = (-2a3-1)/3, since (2a3+1)^2 = -3 mod aid.
        let ring = kprime();
        let a3 = Poly::var_named(&ring, "a3").unwrap();
        let w = a3
            .scale(&Coeff::from_integer(2.into()))
            .add(&Poly::one(&ring))
            .unwrap();
        let inv = invert_mod_aid(&w).unwrap();
        let expect = w.scale(&Coeff::new((-1).into(), 3.into()));
        assert_eq!(inv, expect);
        // And w * inv reduces to 1.
        let rels = ring.param_rels().to_vec();
        let prod = normal_form(&w.mul(&inv).unwrap(), &rels).unwrap();
        assert!(prod.is_one());
    }

    #[test]
    fn nonzero_but_noninvertible_is_detected() {
        // mod (a3^2): a3 is a zero divisor.
        let ring = RingContext::new(&["a3"], &[], &[], &[], &[], TermOrder::Degrevlex);
        let a3 = Poly::var_named(&ring, "a3").unwrap();
        ring.set_param_rels(vec![a3.pow(2).unwrap()]);
        assert_eq!(invert_mod_aid(&a3), Err(GndError::NonInvertible));
    }

    #[test]
    fn division_by_zero_is_detected() {
        let ring = kprime();
        let a3 = Poly::var_named(&ring, "a3").unwrap();
        // a3^2 + a3 + 1 is zero mod aid.
        let z = a3.pow(2).unwrap().add(&a3).unwrap().add(&Poly::one(&ring)).unwrap();
        assert_eq!(invert_mod_aid(&z), Err(GndError::DivisionByZero));
        let u = ParamFieldElement::one(&ring);
        let zf = ParamFieldElement::from_poly(z).unwrap();
        assert_eq!(u.div(&zf), Err(GndError::DivisionByZero));
    }

    #[test]
    fn canonicalization_idempotent() {
        let ring = kprime();
        let mut e = ParamFieldElement::new(
            Poly::var_named(&ring, "a1").unwrap().scale(&Coeff::from_integer(4.into())),
            Poly::var_named(&ring, "a1")
                .unwrap()
                .mul(&Poly::var_named(&ring, "a3").unwrap())
                .unwrap()
                .scale(&Coeff::from_integer(2.into())),
        )
        .unwrap();
        let once = e.clone();
        e.canonicalize().unwrap();
        assert_eq!(e, once);
        // Denominator is monic after canonicalization.
        assert!(once.den.leading().unwrap().1.is_one());
    }
}
