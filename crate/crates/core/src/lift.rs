//! Greenberg-type strong approximation on truncations: lift an approximate
//! solution modulo m^{2e+c} to a solution modulo any requested finite order,
//! keeping the residue fixed modulo m^c.
//!
//! Everything runs in the truncated ring A/m^{K+1} with A = Q[x]/xid; here
//! A' is the completion of A, so D = A and s = 1 throughout.

use std::sync::Arc;

use num_traits::One;

use crate::error::{GndError, Result};
use crate::ideal::{buchberger, normal_form};
use crate::localized::{substitute, LocalizedPoly};
use crate::matrix::{adjugate, bordered, col_subsets_desc, det, jacobian_in};
use crate::poly::{Coeff, Poly};
use crate::ring::{Monomial, RingContext, VarKind};

/// The ambient truncated ring: polynomials modulo (xid + m^{cap+1}).
#[derive(Debug, Clone)]
pub struct TruncRing {
    pub ring: Arc<RingContext>,
    pub xid_gb: Vec<Poly>,
    pub cap: u32,
    xmask: Vec<bool>,
}

impl TruncRing {
    pub fn new(ring: &Arc<RingContext>, xid: &[Poly], cap: u32) -> Result<TruncRing> {
        let xid_gb = buchberger(ring, xid.to_vec(), None)?;
        Ok(TruncRing {
            ring: ring.clone(),
            xid_gb,
            cap,
            xmask: ring.mask_of(&[VarKind::X]),
        })
    }

    pub fn nf(&self, p: &Poly) -> Result<Poly> {
        Ok(normal_form(p, &self.xid_gb)?.truncate_degree_where(&self.xmask, self.cap))
    }

    /// m-adic order: the minimal x-degree of the normal form; None when the
    /// element vanishes in the truncation.
    pub fn ord(&self, p: &Poly) -> Result<Option<u32>> {
        let nf = self.nf(p)?;
        Ok(nf.min_degree_where(&self.xmask))
    }

    /// Monomial basis of the truncation, sorted ascending.
    pub fn basis(&self) -> Vec<Monomial> {
        let xvars: Vec<usize> = (0..self.ring.num_vars())
            .filter(|&i| self.xmask[i])
            .collect();
        let leads: Vec<&Monomial> = self
            .xid_gb
            .iter()
            .filter_map(|r| r.leading_monomial())
            .collect();
        let mut out = vec![Monomial::one(self.ring.num_vars())];
        let mut frontier = out.clone();
        loop {
            let mut next: Vec<Monomial> = Vec::new();
            for m in &frontier {
                for &v in &xvars {
                    let mut mm = m.clone();
                    mm.0[v] += 1;
                    if mm.degree_where(&self.xmask) > self.cap {
                        continue;
                    }
                    if leads.iter().any(|l| l.divides(&mm)) {
                        continue;
                    }
                    if !out.contains(&mm) && !next.contains(&mm) {
                        next.push(mm);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out.sort_by(|a, b| self.ring.order().cmp(a, b));
        out
    }

    /// Solve q·den ≡ num in the truncation by linear algebra over Q.
    pub fn divide(&self, num: &Poly, den: &Poly) -> Result<Poly> {
        let num = self.nf(num)?;
        if num.is_zero() {
            return Ok(Poly::zero(&self.ring));
        }
        if let Ok(q) = num.exact_div(den) {
            return self.nf(&q);
        }
        let basis = self.basis();
        let n = basis.len();
        let mut rows: Vec<Monomial> = Vec::new();
        let mut cols: Vec<Vec<(usize, Coeff)>> = Vec::new();
        for b in &basis {
            let prod =
                self.nf(&den.mul(&Poly::monomial(&self.ring, b.clone(), Coeff::one()))?)?;
            let mut col = Vec::new();
            for (m, c) in prod.terms() {
                let idx = match rows.iter().position(|r| r == m) {
                    Some(i) => i,
                    None => {
                        rows.push(m.clone());
                        rows.len() - 1
                    }
                };
                col.push((idx, c.clone()));
            }
            cols.push(col);
        }
        let mut rhs: Vec<(usize, Coeff)> = Vec::new();
        for (mono, c) in num.terms() {
            let idx = match rows.iter().position(|r| r == mono) {
                Some(i) => i,
                None => {
                    rows.push(mono.clone());
                    rows.len() - 1
                }
            };
            rhs.push((idx, c.clone()));
        }
        let m = rows.len();
        let mut mat = vec![vec![Coeff::from_integer(0.into()); n + 1]; m];
        for (j, col) in cols.iter().enumerate() {
            for (i, c) in col {
                mat[*i][j] = c.clone();
            }
        }
        for (i, c) in rhs {
            mat[i][n] = c;
        }
        let sol = gauss_q(mat, n).ok_or(GndError::NotDivisible)?;
        let mut q = Poly::zero(&self.ring);
        for (b, c) in basis.iter().zip(&sol) {
            if !num_traits::Zero::is_zero(c) {
                q = q.add(&Poly::monomial(&self.ring, b.clone(), c.clone()))?;
            }
        }
        Ok(q)
    }
}

fn gauss_q(mut mat: Vec<Vec<Coeff>>, n: usize) -> Option<Vec<Coeff>> {
    use num_traits::Zero;
    let m = mat.len();
    let mut pivot_of_col = vec![None; n];
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
    for r in 0..m {
        if mat[r][..n].iter().all(|c| c.is_zero()) && !mat[r][n].is_zero() {
            return None;
        }
    }
    let mut sol = vec![Coeff::from_integer(0.into()); n];
    for col in 0..n {
        if let Some(r) = pivot_of_col[col] {
            sol[col] = mat[r][n].clone();
        }
    }
    Some(sol)
}

/// A lifting problem over A' = Â: the system f, an approximate solution,
/// and the orders e, c, target.
#[derive(Debug, Clone)]
pub struct LiftProblem {
    pub ring: Arc<RingContext>,
    pub xid: Vec<Poly>,
    pub f: Vec<Poly>,
    pub y_approx: Vec<Poly>,
    pub e: usize,
    pub c: usize,
    pub target_order: usize,
}

#[derive(Debug, Clone)]
pub struct LiftResult {
    pub y_lift: Vec<Poly>,
    pub achieved_order: usize,
    pub t_values: Vec<Poly>,
    pub iterations: usize,
    /// Residual orders of g across the iterations (strictly increasing).
    pub residual_orders: Vec<u32>,
}

struct LiftSetup {
    trunc: TruncRing,
    d: Poly,
    gy: Vec<Vec<Poly>>,
    y0: Vec<Poly>,
}

impl LiftProblem {
    pub fn y_vars(&self) -> Vec<usize> {
        self.ring.indices_of(VarKind::Y)
    }

    fn assignment(&self, values: &[Poly]) -> Vec<Option<LocalizedPoly>> {
        let mut assign: Vec<Option<LocalizedPoly>> = vec![None; self.ring.num_vars()];
        for (k, &y) in self.y_vars().iter().enumerate() {
            assign[y] = Some(LocalizedPoly::from_poly(values[k].clone()));
        }
        assign
    }

    fn eval(&self, p: &Poly, values: &[Poly], trunc: &TruncRing) -> Result<Poly> {
        let v = substitute(p, &self.assignment(values))?;
        if !v.den.is_one() {
            return Err(GndError::NonUnitDenominator);
        }
        trunc.nf(&v.num)
    }

    /// Pick the minor M (descending column convention, N = 1), evaluate
    /// d = (MN)(y_approx), and build G(y_approx) with G·H = P·Id.
    fn setup(&self, cap: u32) -> Result<LiftSetup> {
        let trunc = TruncRing::new(&self.ring, &self.xid, cap)?;
        let y_vars = self.y_vars();
        let r = self.f.len();
        if r > y_vars.len() {
            return Err(GndError::DimensionMismatch(
                "more equations than unknowns".into(),
            ));
        }
        let jac = jacobian_in(&self.ring, &self.f, &y_vars)?;
        let rows: Vec<usize> = (0..r).collect();
        let mut chosen = None;
        for cols in col_subsets_desc(y_vars.len(), r) {
            let m_poly = det(&jac.submatrix(&rows, &cols))?;
            if m_poly.is_zero() {
                continue;
            }
            let value = self.eval(&m_poly, &self.y_approx, &trunc)?;
            if !value.is_zero() {
                chosen = Some((cols, m_poly));
                break;
            }
        }
        let (cols, m_poly) = chosen.ok_or(GndError::NoCandidate)?;
        let h = bordered(&jac, &cols, None)?;
        let det_h = det(&h)?;
        let n_eff = if det_h == m_poly {
            Poly::one(&self.ring)
        } else if det_h == m_poly.neg() {
            Poly::one(&self.ring).neg()
        } else {
            return Err(GndError::Other("bordered determinant is not ±M".into()));
        };
        let g = adjugate(&h)?.scale_poly(&n_eff)?;
        let y0: Vec<Poly> = self
            .y_approx
            .iter()
            .map(|p| trunc.nf(p))
            .collect::<Result<_>>()?;
        let mut gy = Vec::with_capacity(g.rows);
        for i in 0..g.rows {
            let mut row = Vec::with_capacity(g.cols);
            for j in 0..g.cols {
                row.push(self.eval(g.at(i, j), &y0, &trunc)?);
            }
            gy.push(row);
        }
        let d = self.eval(&m_poly, &y0, &trunc)?;
        Ok(LiftSetup { trunc, d, gy, y0 })
    }
}

/// The Artin function of the one-dimensional Cohen-Macaulay case: input
/// precision 2e+c guarantees a lift agreeing modulo m^c.
pub fn artin_function_bound(e: usize, c: usize) -> usize {
    2 * e + c
}

/// Does (v(MN)) contain m^e modulo m^{2e+c}? Tests every monomial of degree
/// e for membership in (d) + m^{2e+c}.
pub fn check_hypothesis(pb: &LiftProblem) -> Result<(bool, String)> {
    let cap = (2 * pb.e + pb.c) as u32;
    let setup = pb.setup(cap.max(1))?;
    if pb.e == 0 {
        // d must be a unit.
        let xmask = pb.ring.mask_of(&[VarKind::X]);
        let unit = !setup.d.set_zero_where(&xmask).is_zero();
        return Ok((
            unit,
            if unit {
                String::new()
            } else {
                "d is not a unit".into()
            },
        ));
    }
    // Work modulo m^{2e+c}: monomials of degree e must lie in (d) + m^{2e+c}.
    let small = TruncRing::new(&pb.ring, &pb.xid, cap.saturating_sub(1))?;
    let xmask = pb.ring.mask_of(&[VarKind::X]);
    for mono in small.basis() {
        if mono.degree_where(&xmask) != pb.e as u32 {
            continue;
        }
        let target = Poly::monomial(&pb.ring, mono.clone(), Coeff::one());
        if small.divide(&target, &setup.d).is_err() {
            let mut name = String::new();
            for (i, &e) in mono.0.iter().enumerate() {
                if e > 0 {
                    name.push_str(&format!("{}^{} ", pb.ring.var_name(i), e));
                }
            }
            return Ok((false, format!("monomial {} not covered", name.trim())));
        }
    }
    Ok((true, String::new()))
}

/// Smallest e for which the hypothesis holds, up to the given bound.
pub fn find_min_e(pb: &LiftProblem, bound: usize) -> Result<Option<usize>> {
    for e in 0..=bound {
        let mut trial = pb.clone();
        trial.e = e;
        if check_hypothesis(&trial)?.0 {
            return Ok(Some(e));
        }
    }
    Ok(None)
}

/// Newton lifting with the s = 1 branch of the main construction. Each round
/// takes the contraction step T = -(b + Q(0)) = -b on the first r components
/// (the rest stay zero), moves to y' + d·G(y')·T, and re-bases: d, G and b
/// are re-evaluated at the new point. Re-basing is what makes the residual
/// order double (minus ord d^2) instead of growing linearly.
pub fn newton_lift(pb: &LiftProblem) -> Result<LiftResult> {
    let cap = pb.target_order as u32;
    let setup = pb.setup(cap)?;
    let trunc = &setup.trunc;
    let y_vars = pb.y_vars();
    let n = y_vars.len();
    let r = pb.f.len();

    // The working minor stays fixed; values are re-evaluated per round.
    let jac = jacobian_in(&pb.ring, &pb.f, &y_vars)?;
    let rows: Vec<usize> = (0..r).collect();
    let mut minor_cols = None;
    for cols in col_subsets_desc(y_vars.len(), r) {
        let m_poly = det(&jac.submatrix(&rows, &cols))?;
        if m_poly.is_zero() {
            continue;
        }
        if !pb.eval(&m_poly, &setup.y0, trunc)?.is_zero() {
            minor_cols = Some((cols, m_poly));
            break;
        }
    }
    let (cols, m_poly) = minor_cols.ok_or(GndError::NoCandidate)?;
    let h = bordered(&jac, &cols, None)?;
    let det_h = det(&h)?;
    let n_eff = if det_h == m_poly {
        Poly::one(&pb.ring)
    } else if det_h == m_poly.neg() {
        Poly::one(&pb.ring).neg()
    } else {
        return Err(GndError::Other("bordered determinant is not ±M".into()));
    };
    let g_mat = adjugate(&h)?.scale_poly(&n_eff)?;

    // b = f(y')/d^2 must lie in m^c at the start.
    let d0_sq = trunc.nf(&setup.d.mul(&setup.d)?)?;
    for fi in &pb.f {
        let val = pb.eval(fi, &setup.y0, trunc)?;
        let b = trunc
            .divide(&val, &d0_sq)
            .map_err(|_| GndError::NotDivisible)?;
        if let Some(o) = trunc.ord(&b)? {
            if (o as usize) < pb.c {
                return Err(GndError::NotDivisible);
            }
        }
    }

    let mut y = setup.y0.clone();
    let mut orders: Vec<u32> = Vec::new();
    let mut last_order: Option<u32> = None;
    let mut iterations = 0usize;
    let mut t_last: Vec<Poly> = vec![Poly::zero(&pb.ring); n];
    loop {
        let d_k = pb.eval(&m_poly, &y, trunc)?;
        let d_sq = trunc.nf(&d_k.mul(&d_k)?)?;
        // Residual g(0) = b at the current base point.
        let mut b = Vec::with_capacity(r);
        for fi in &pb.f {
            let val = pb.eval(fi, &y, trunc)?;
            b.push(trunc.divide(&val, &d_sq)?);
        }
        let ord = b
            .iter()
            .map(|bi| trunc.ord(bi))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .min();
        match ord {
            None => break, // residual vanished within the truncation
            Some(o) => {
                if let Some(prev) = last_order {
                    if o <= prev {
                        return Err(GndError::NoContraction);
                    }
                }
                orders.push(o);
                last_order = Some(o);
                if o > cap {
                    break;
                }
            }
        }
        // One contraction step in this frame: t = -b on components 1..r.
        let mut t = vec![Poly::zero(&pb.ring); n];
        for i in 0..r {
            t[i] = b[i].neg();
        }
        let mut y_next = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = y[i].clone();
            for (j, tj) in t.iter().enumerate() {
                if tj.is_zero() {
                    continue;
                }
                let gij = pb.eval(g_mat.at(i, j), &y, trunc)?;
                acc = acc.add(&d_k.mul(&gij)?.mul(tj)?)?;
            }
            y_next.push(trunc.nf(&acc)?);
        }
        y = y_next;
        t_last = t;
        iterations += 1;
        if iterations > 4 * (cap as usize + 2) {
            return Err(GndError::NoContraction);
        }
    }

    let y_lift = y;
    // Residue check: y_lift ≡ y_approx mod m^c.
    for (yl, ya) in y_lift.iter().zip(&setup.y0) {
        let diff = yl.sub(ya)?;
        if let Some(o) = trunc.ord(&diff)? {
            if (o as usize) < pb.c {
                return Err(GndError::Other(
                    "lift does not preserve the residue modulo m^c".into(),
                ));
            }
        }
    }
    // Achieved order: minimal order of I(y_lift), capped at target + 1.
    let mut achieved = pb.target_order + 1;
    for fi in &pb.f {
        let val = pb.eval(fi, &y_lift, trunc)?;
        if let Some(o) = trunc.ord(&val)? {
            achieved = achieved.min(o as usize);
        }
    }
    if achieved < pb.target_order {
        return Err(GndError::NoContraction);
    }
    Ok(LiftResult {
        y_lift,
        achieved_order: achieved,
        t_values: t_last,
        iterations,
        residual_orders: orders,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;
    use crate::text::parse_poly;

    fn pb_ring() -> Arc<RingContext> {
        RingContext::new(&[], &["x"], &["Y"], &[], &[], TermOrder::Degrevlex)
    }

    /// f = Y^2 - (1+x) over Q[x] truncated at x^8; y' = 1 + x/2.
    fn sqrt_problem() -> LiftProblem {
        let ring = pb_ring();
        let f = parse_poly("Y^2 - 1 - x", &ring).unwrap().num;
        let y0 = parse_poly("1 + x/2", &ring).unwrap().num;
        LiftProblem {
            ring,
            xid: vec![],
            f: vec![f],
            y_approx: vec![y0],
            e: 0,
            c: 2,
            target_order: 8,
        }
    }

    /// Binomial series of sqrt(1+x) through x^k.
    fn sqrt_series(ring: &Arc<RingContext>, k: u32) -> Poly {
        let mut out = Poly::zero(ring);
        let mut coef = Coeff::one();
        let x = ring.var_index("x").unwrap();
        for j in 0..=k {
            if j > 0 {
                // C(1/2, j) = C(1/2, j-1) * (1/2 - (j-1)) / j
                let num =
                    Coeff::new(1.into(), 2.into()) - Coeff::from_integer((j as i64 - 1).into());
                coef = coef * num / Coeff::from_integer((j as i64).into());
            }
            let mono = Monomial::var(ring.num_vars(), x).pow(j);
            out = out.add(&Poly::monomial(ring, mono, coef.clone())).unwrap();
        }
        out
    }

    #[test]
    fn artin_bound_examples() {
        assert_eq!(artin_function_bound(0, 5), 5);
        assert_eq!(artin_function_bound(3, 2), 8);
    }

    #[test]
    fn hypothesis_unit_jacobian() {
        let pb = sqrt_problem();
        let (ok, _) = check_hypothesis(&pb).unwrap();
        assert!(ok);
    }

    #[test]
    fn hypothesis_fails_for_too_large_e() {
        // f = Y^2 - 1 - x^2: d = 2·y0 is a unit, fine for e = 0; but a system
        // with d = x^2 cannot cover degree-1 monomials.
        let ring = pb_ring();
        let f = parse_poly("x^2*Y^2/2 - x^2", &ring).unwrap().num;
        let pb = LiftProblem {
            ring: ring.clone(),
            xid: vec![],
            f: vec![f],
            y_approx: vec![parse_poly("1", &ring).unwrap().num],
            e: 1,
            c: 1,
            target_order: 6,
        };
        let (ok, detail) = check_hypothesis(&pb).unwrap();
        assert!(!ok, "expected failure; detail: {detail}");
        assert!(detail.contains("x"));
    }

    #[test]
    fn sqrt_lift_matches_binomial_series() {
        let pb = sqrt_problem();
        let res = newton_lift(&pb).unwrap();
        let expect = sqrt_series(&pb.ring, 8);
        assert_eq!(res.y_lift[0], expect);
        // Residue preserved modulo x^2.
        let trunc = TruncRing::new(&pb.ring, &pb.xid, 8).unwrap();
        let diff = res.y_lift[0].sub(&pb.y_approx[0]).unwrap();
        assert!(trunc.ord(&diff).unwrap().unwrap() >= 2);
        // Strictly increasing residual orders with quadratic-style gains.
        for w in res.residual_orders.windows(2) {
            assert!(w[1] > w[0]);
            assert!(w[1] >= 2 * w[0]);
        }
    }

    #[test]
    fn exact_input_is_a_fixed_point() {
        let ring = pb_ring();
        let f = parse_poly("Y^2 - 1 - x", &ring).unwrap().num;
        let exact = sqrt_series(&ring, 8);
        let pb = LiftProblem {
            ring: ring.clone(),
            xid: vec![],
            f: vec![f],
            y_approx: vec![exact.clone()],
            e: 0,
            c: 2,
            target_order: 8,
        };
        let res = newton_lift(&pb).unwrap();
        assert_eq!(res.y_lift[0], exact);
        assert_eq!(res.iterations, 0);
    }
}
