//! Matrices of polynomials: Jacobians, minors, determinants, adjugates and
//! the bordered matrix H used by the pipeline.

use std::sync::Arc;

use crate::error::{GndError, Result};
use crate::poly::Poly;
use crate::ring::RingContext;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<Poly>,
    ring: Arc<RingContext>,
}

impl PolyMatrix {
    pub fn new(ring: &Arc<RingContext>, rows: usize, cols: usize, entries: Vec<Poly>) -> Result<PolyMatrix> {
        if entries.len() != rows * cols {
            return Err(GndError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(PolyMatrix {
            rows,
            cols,
            entries,
            ring: ring.clone(),
        })
    }

    pub fn zero(ring: &Arc<RingContext>, rows: usize, cols: usize) -> PolyMatrix {
        PolyMatrix {
            rows,
            cols,
            entries: vec![Poly::zero(ring); rows * cols],
            ring: ring.clone(),
        }
    }

    pub fn identity(ring: &Arc<RingContext>, n: usize) -> PolyMatrix {
        let mut m = PolyMatrix::zero(ring, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Poly::one(ring);
        }
        m
    }

    pub fn ring(&self) -> &Arc<RingContext> {
        &self.ring
    }

    pub fn at(&self, r: usize, c: usize) -> &Poly {
        &self.entries[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Poly {
        &mut self.entries[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Poly] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul(&self, other: &PolyMatrix) -> Result<PolyMatrix> {
        if self.cols != other.rows {
            return Err(GndError::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = PolyMatrix::zero(&self.ring, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = Poly::zero(&self.ring);
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(other.at(k, j))?)?;
                }
                *out.at_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    pub fn scale_poly(&self, p: &Poly) -> Result<PolyMatrix> {
        let entries: Result<Vec<Poly>> = self.entries.iter().map(|e| e.mul(p)).collect();
        PolyMatrix::new(&self.ring, self.rows, self.cols, entries?)
    }

    pub fn map<F: FnMut(&Poly) -> Result<Poly>>(&self, mut f: F) -> Result<PolyMatrix> {
        let entries: Result<Vec<Poly>> = self.entries.iter().map(|e| f(e)).collect();
        PolyMatrix::new(&self.ring, self.rows, self.cols, entries?)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> PolyMatrix {
        let mut entries = Vec::with_capacity(rows.len() * cols.len());
        for &r in rows {
            for &c in cols {
                entries.push(self.at(r, c).clone());
            }
        }
        PolyMatrix {
            rows: rows.len(),
            cols: cols.len(),
            entries,
            ring: self.ring.clone(),
        }
    }
}

/// Jacobian matrix: entry (i, j) = ∂f_i/∂vars_j.
pub fn jacobian(f: &[Poly], vars: &[usize]) -> Result<PolyMatrix> {
    let ring = match f.first() {
        Some(p) => p.ring().clone(),
        None => {
            return Err(GndError::DimensionMismatch("empty system".into()));
        }
    };
    let mut entries = Vec::with_capacity(f.len() * vars.len());
    for p in f {
        for &v in vars {
            entries.push(p.derivative(v)?);
        }
    }
    PolyMatrix::new(&ring, f.len(), vars.len(), entries)
}

/// Jacobian that tolerates an empty system by taking the ring explicitly.
pub fn jacobian_in(ring: &Arc<RingContext>, f: &[Poly], vars: &[usize]) -> Result<PolyMatrix> {
    if f.is_empty() {
        return Ok(PolyMatrix::zero(ring, 0, vars.len()));
    }
    jacobian(f, vars)
}

/// Determinant by cofactor expansion; fine through 4x4.
fn det_cofactor(m: &PolyMatrix) -> Result<Poly> {
    let n = m.rows;
    if n == 0 {
        return Ok(Poly::one(&m.ring));
    }
    if n == 1 {
        return Ok(m.at(0, 0).clone());
    }
    let mut acc = Poly::zero(&m.ring);
    let rest: Vec<usize> = (1..n).collect();
    for j in 0..n {
        if m.at(0, j).is_zero() {
            continue;
        }
        let cols: Vec<usize> = (0..n).filter(|&c| c != j).collect();
        let minor = det_cofactor(&m.submatrix(&rest, &cols))?;
        let term = m.at(0, j).mul(&minor)?;
        acc = if j % 2 == 0 { acc.add(&term)? } else { acc.sub(&term)? };
    }
    Ok(acc)
}

/// Fraction-free Bareiss elimination; divisions are exact over the
/// polynomial ring.
fn det_bareiss(m: &PolyMatrix) -> Result<Poly> {
    let n = m.rows;
    let ring = m.ring.clone();
    let mut a: Vec<Vec<Poly>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut sign = false;
    let mut prev = Poly::one(&ring);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            let swap = (k + 1..n).find(|&r| !a[r][k].is_zero());
            match swap {
                Some(r) => {
                    a.swap(k, r);
                    sign = !sign;
                }
                None => return Ok(Poly::zero(&ring)),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = a[k][k].mul(&a[i][j])?.sub(&a[i][k].mul(&a[k][j])?)?;
                a[i][j] = num.exact_div(&prev)?;
            }
            a[i][k] = Poly::zero(&ring);
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if sign { d.neg() } else { d })
}

/// Determinant; Bareiss for larger sizes, cofactor fallback through 4x4.
pub fn det(m: &PolyMatrix) -> Result<Poly> {
    if m.rows != m.cols {
        return Err(GndError::DimensionMismatch(format!(
            "determinant of {}x{}",
            m.rows, m.cols
        )));
    }
    if m.rows <= 4 {
        det_cofactor(m)
    } else {
        det_bareiss(m)
    }
}

/// Adjugate: transpose cofactor matrix, adj(M)·M = det(M)·Id.
pub fn adjugate(m: &PolyMatrix) -> Result<PolyMatrix> {
    if m.rows != m.cols {
        return Err(GndError::DimensionMismatch(format!(
            "adjugate of {}x{}",
            m.rows, m.cols
        )));
    }
    let n = m.rows;
    if n == 0 {
        return Ok(PolyMatrix::zero(&m.ring, 0, 0));
    }
    if n == 1 {
        return Ok(PolyMatrix::identity(&m.ring, 1));
    }
    let mut out = PolyMatrix::zero(&m.ring, n, n);
    for i in 0..n {
        for j in 0..n {
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let minor = det(&m.submatrix(&rows, &cols))?;
            let c = if (i + j) % 2 == 0 { minor } else { minor.neg() };
            *out.at_mut(i, j) = c;
        }
    }
    Ok(out)
}

/// Column subsets of size `r` enumerated so the subset using the last columns
/// comes first (the convention the pipeline uses to pick minors).
pub fn col_subsets_desc(ncols: usize, r: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, ncols, r, &mut Vec::new(), &mut subsets);
    subsets.sort_by(|a, b| {
        let ar: Vec<usize> = a.iter().rev().cloned().collect();
        let br: Vec<usize> = b.iter().rev().cloned().collect();
        br.cmp(&ar)
    });
    subsets
}

/// All r×r minors with index provenance: (row set, column set, determinant).
/// Rows ascend, column sets follow the descending convention.
pub fn minors(m: &PolyMatrix, r: usize) -> Result<Vec<(Vec<usize>, Vec<usize>, Poly)>> {
    if r > m.rows.min(m.cols) {
        return Err(GndError::DimensionMismatch(format!(
            "{r}x{r} minors of {}x{}",
            m.rows, m.cols
        )));
    }
    let mut row_sets: Vec<Vec<usize>> = Vec::new();
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for c in start..n {
            cur.push(c);
            rec(c + 1, n, r, cur, out);
            cur.pop();
        }
    }
    rec(0, m.rows, r, &mut Vec::new(), &mut row_sets);
    let col_sets = col_subsets_desc(m.cols, r);
    let mut out = Vec::new();
    for rs in &row_sets {
        for cs in &col_sets {
            let d = det(&m.submatrix(rs, cs))?;
            out.push((rs.clone(), cs.clone(), d));
        }
    }
    Ok(out)
}

/// The bordered matrix H for a system f with chosen minor columns.
///
/// Layout, matching the printed transcripts: the Jacobian rows of the
/// ordinary f-polynomials on top, one unit row for every non-minor column in
/// descending column order, and the row of the adjoined Z-polynomial (when
/// present) at the bottom. det(H) = ±M where M is the chosen minor.
pub fn bordered(
    jac: &PolyMatrix,
    minor_cols: &[usize],
    z_row: Option<usize>,
) -> Result<PolyMatrix> {
    let n = jac.cols;
    let r = jac.rows;
    if r > n || minor_cols.len() != r {
        return Err(GndError::DimensionMismatch(format!(
            "border of a {r}x{n} Jacobian with {} minor columns",
            minor_cols.len()
        )));
    }
    let ring = jac.ring().clone();
    let mut h = PolyMatrix::zero(&ring, n, n);
    let mut row = 0;
    for i in 0..r {
        if Some(i) == z_row {
            continue;
        }
        for j in 0..n {
            *h.at_mut(row, j) = jac.at(i, j).clone();
        }
        row += 1;
    }
    let mut border: Vec<usize> = (0..n).filter(|c| !minor_cols.contains(c)).collect();
    border.sort_by(|a, b| b.cmp(a));
    for c in border {
        *h.at_mut(row, c) = Poly::one(&ring);
        row += 1;
    }
    if let Some(z) = z_row {
        for j in 0..n {
            *h.at_mut(row, j) = jac.at(z, j).clone();
        }
        row += 1;
    }
    debug_assert_eq!(row, n);
    Ok(h)
}

/// Row positions of each Jacobian row inside the bordered matrix.
pub fn bordered_positions(r: usize, n: usize, z_row: Option<usize>) -> Vec<usize> {
    let mut pos = Vec::with_capacity(r);
    let mut top = 0;
    for i in 0..r {
        if Some(i) == z_row {
            pos.push(n - 1);
        } else {
            pos.push(top);
            top += 1;
        }
    }
    pos
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Coeff;
    use crate::ring::TermOrder;

    fn ctx() -> Arc<RingContext> {
        RingContext::new(
            &[],
            &["x2"],
            &["Y1", "Y2", "Y3", "Y4"],
            &[],
            &[],
            TermOrder::Degrevlex,
        )
    }

    fn v(c: &Arc<RingContext>, n: &str) -> Poly {
        Poly::var_named(c, n).unwrap()
    }

    #[test]
    fn jacobian_of_the_quadric() {
        // f = Y1^2+Y1*Y2+Y2^2 over (Y1,Y2,Y3): [2Y1+Y2, Y1+2Y2, 0]
        let c = ctx();
        let (y1, y2) = (v(&c, "Y1"), v(&c, "Y2"));
        let f = y1
            .pow(2)
            .unwrap()
            .add(&y1.mul(&y2).unwrap())
            .unwrap()
            .add(&y2.pow(2).unwrap())
            .unwrap();
        let vars = [
            c.var_index("Y1").unwrap(),
            c.var_index("Y2").unwrap(),
            c.var_index("Y3").unwrap(),
        ];
        let j = jacobian(&[f], &vars).unwrap();
        assert_eq!(
            *j.at(0, 0),
            y1.scale(&Coeff::from_integer(2.into())).add(&y2).unwrap()
        );
        assert_eq!(
            *j.at(0, 1),
            y1.add(&y2.scale(&Coeff::from_integer(2.into()))).unwrap()
        );
        assert!(j.at(0, 2).is_zero());
    }

    #[test]
    fn adjugate_identity() {
        let c = ctx();
        let id = PolyMatrix::identity(&c, 3);
        assert_eq!(adjugate(&id).unwrap(), id);
    }

    #[test]
    fn adjugate_times_matrix_is_det() {
        let c = ctx();
        // A small integer matrix.
        let vals = [
            [2i64, 0, 1],
            [1, 3, -2],
            [0, 5, 4],
        ];
        let entries: Vec<Poly> = vals
            .iter()
            .flat_map(|row| row.iter().map(|&x| Poly::from_int(&c, x)))
            .collect();
        let m = PolyMatrix::new(&c, 3, 3, entries).unwrap();
        let adj = adjugate(&m).unwrap();
        let d = det(&m).unwrap();
        let prod = adj.mul(&m).unwrap();
        let expect = PolyMatrix::identity(&c, 3).scale_poly(&d).unwrap();
        assert_eq!(prod, expect);
        let prod2 = m.mul(&adj).unwrap();
        assert_eq!(prod2, expect);
    }

    #[test]
    fn bareiss_matches_cofactor() {
        let c = ctx();
        let (y1, y2) = (v(&c, "Y1"), v(&c, "Y2"));
        let x2 = v(&c, "x2");
        let mut entries = Vec::new();
        let polys = [&y1, &y2, &x2];
        for i in 0..5 {
            for j in 0..5 {
                let p = polys[(i * 3 + j) % 3]
                    .clone()
                    .add(&Poly::from_int(&c, ((i + 2 * j) % 5) as i64))
                    .unwrap();
                entries.push(p);
            }
        }
        let m = PolyMatrix::new(&c, 5, 5, entries).unwrap();
        assert_eq!(det_bareiss(&m).unwrap(), det_cofactor(&m).unwrap());
    }

    #[test]
    fn det_examples() {
        let c = ctx();
        assert!(det(&PolyMatrix::identity(&c, 3)).unwrap().is_one());
        let p = v(&c, "Y1").add(&Poly::one(&c)).unwrap();
        let m = PolyMatrix::new(&c, 1, 1, vec![p.clone()]).unwrap();
        assert_eq!(det(&m).unwrap(), p);
    }

    #[test]
    fn one_by_one_minors() {
        let c = ctx();
        let entries = vec![
            v(&c, "Y1"),
            v(&c, "Y2"),
            v(&c, "Y3"),
            v(&c, "Y4"),
        ];
        let m = PolyMatrix::new(&c, 2, 2, entries).unwrap();
        let ms = minors(&m, 1).unwrap();
        assert_eq!(ms.len(), 4);
        // Descending column convention: col 1 before col 0.
        assert_eq!(ms[0].1, vec![1]);
        assert_eq!(ms[0].2, v(&c, "Y2"));
    }

    #[test]
    fn col_subset_order_prefers_last_columns() {
        let s = col_subsets_desc(4, 2);
        assert_eq!(s[0], vec![2, 3]);
        assert_eq!(s[1], vec![1, 3]);
        assert_eq!(s.last().unwrap(), &vec![0, 1]);
    }

    #[test]
    fn bordered_square_when_r_equals_n() {
        let c = ctx();
        let vars = [c.var_index("Y1").unwrap()];
        let f = v(&c, "Y1").pow(2).unwrap();
        let j = jacobian(&[f], &vars).unwrap();
        let h = bordered(&j, &[0], None).unwrap();
        assert_eq!(h, j);
    }
}
