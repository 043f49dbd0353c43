//! Standard (Groebner) bases and the ideal operations the pipeline needs:
//! normal form, membership, elimination, intersection, colon ideals and
//! kernels of ring maps.
//!
//! The engine runs Buchberger with normal pair selection, the product
//! criterion and the chain criterion. Bases are auto-reduced, made monic and
//! listed ascending by leading monomial, so output is deterministic.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_traits::One;

use crate::error::{GndError, Result};
use crate::poly::{Coeff, Poly};
use crate::ring::{Monomial, RingContext, TermOrder, VarKind};

/// A finitely generated ideal with a lazily cached standard basis per order.
#[derive(Debug)]
pub struct Ideal {
    pub gens: Vec<Poly>,
    ring: Arc<RingContext>,
    cache: Mutex<Vec<(TermOrder, Arc<Vec<Poly>>)>>,
}

impl Clone for Ideal {
    fn clone(&self) -> Self {
        Ideal {
            gens: self.gens.clone(),
            ring: self.ring.clone(),
            cache: Mutex::new(self.cache.lock().unwrap().clone()),
        }
    }
}

impl Ideal {
    pub fn new(ring: &Arc<RingContext>, gens: Vec<Poly>) -> Ideal {
        let gens = gens.into_iter().filter(|g| !g.is_zero()).collect();
        Ideal {
            gens,
            ring: ring.clone(),
            cache: Mutex::new(Vec::new()),
        }
    }

    pub fn ring(&self) -> &Arc<RingContext> {
        &self.ring
    }

    pub fn is_trivial(&self) -> bool {
        self.gens.is_empty()
    }

    /// Standard basis under the ring's own order, cached.
    pub fn std(&self) -> Result<Arc<Vec<Poly>>> {
        self.std_with(self.ring.order().clone(), None)
    }

    pub fn std_with(&self, order: TermOrder, budget: Option<usize>) -> Result<Arc<Vec<Poly>>> {
        {
            let cache = self.cache.lock().unwrap();
            if let Some((_, gb)) = cache.iter().find(|(o, _)| *o == order) {
                return Ok(gb.clone());
            }
        }
        let ctx = if *self.ring.order() == order {
            self.ring.clone()
        } else {
            self.ring.with_order(order.clone())
        };
        let lifted: Result<Vec<Poly>> = self.gens.iter().map(|g| g.lift(&ctx)).collect();
        let gb = buchberger(&ctx, lifted?, budget)?;
        let back: Result<Vec<Poly>> = gb.iter().map(|g| g.lift(&self.ring)).collect();
        let gb = Arc::new(back?);
        self.cache.lock().unwrap().push((order, gb.clone()));
        Ok(gb)
    }

    pub fn contains(&self, p: &Poly) -> Result<bool> {
        let gb = self.std()?;
        Ok(normal_form(p, &gb)?.is_zero())
    }

    /// Ideal equality by mutual membership of generators.
    pub fn equals(&self, other: &Ideal) -> Result<bool> {
        for g in &other.gens {
            if !self.contains(&g.lift(&self.ring)?)? {
                return Ok(false);
            }
        }
        let ring = other.ring().clone();
        for g in &self.gens {
            if !other.contains(&g.lift(&ring)?)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Full reduction: the normal form of `p` against `basis`. No term of the
/// result is divisible by any leading monomial of the basis.
///
/// Reduction is linear, so each monomial is reduced independently with a
/// memo table; this keeps large polynomials (tens of thousands of terms)
/// tractable.
pub fn normal_form(p: &Poly, basis: &[Poly]) -> Result<Poly> {
    let ring = p.ring().clone();
    let nonzero: Vec<&Poly> = basis.iter().filter(|g| !g.is_zero()).collect();
    if nonzero.is_empty() || p.is_zero() {
        return Ok(p.clone());
    }
    let mut memo: HashMap<Monomial, Poly> = HashMap::new();
    let mut acc: Vec<(Monomial, Coeff)> = Vec::with_capacity(p.terms().len());
    for (m, c) in p.terms() {
        let nf = nf_monomial(&ring, m, &nonzero, &mut memo)?;
        for (nm, nc) in nf.terms() {
            acc.push((nm.clone(), nc * c));
        }
    }
    Ok(Poly::from_terms(&ring, acc))
}

fn nf_monomial(
    ring: &Arc<RingContext>,
    m: &Monomial,
    basis: &[&Poly],
    memo: &mut HashMap<Monomial, Poly>,
) -> Result<Poly> {
    if let Some(v) = memo.get(m) {
        return Ok(v.clone());
    }
    for g in basis {
        let (lm, lc) = g.leading().unwrap();
        if let Some(u) = m.checked_div(lm) {
            // m = u·LT(g): replace by -u·tail(g)/lc and reduce recursively.
            let mut acc: Vec<(Monomial, Coeff)> = Vec::new();
            for (tm, tc) in g.terms().iter().skip(1) {
                let piece = nf_monomial(ring, &tm.mul(&u), basis, memo)?;
                let scale = -(tc / lc);
                for (nm, nc) in piece.terms() {
                    acc.push((nm.clone(), nc * &scale));
                }
            }
            let out = Poly::from_terms(ring, acc);
            memo.insert(m.clone(), out.clone());
            return Ok(out);
        }
    }
    let out = Poly::monomial(ring, m.clone(), Coeff::one());
    memo.insert(m.clone(), out.clone());
    Ok(out)
}

fn spoly(f: &Poly, g: &Poly) -> Result<Poly> {
    let (fm, fc) = f.leading().unwrap();
    let (gm, gc) = g.leading().unwrap();
    let l = fm.lcm(gm);
    let a = f.mul_term(&l.checked_div(fm).unwrap(), &(Coeff::one() / fc));
    let b = g.mul_term(&l.checked_div(gm).unwrap(), &(Coeff::one() / gc));
    a.sub(&b)
}

#[derive(Clone)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Monomial,
}

/// Buchberger with product and chain criteria; deterministic normal selection.
pub fn buchberger(
    ring: &Arc<RingContext>,
    gens: Vec<Poly>,
    budget: Option<usize>,
) -> Result<Vec<Poly>> {
    let order = ring.order().clone();
    let mut basis: Vec<Poly> = Vec::new();
    for g in gens {
        if g.is_zero() {
            continue;
        }
        let r = normal_form(&g, &basis)?;
        if !r.is_zero() {
            basis.push(r.monic());
        }
    }
    let mut pairs: Vec<Pair> = Vec::new();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            push_pair(&mut pairs, &basis, i, j);
        }
    }
    let mut reductions = 0usize;
    while !pairs.is_empty() {
        // Normal selection: smallest lcm first, ties by index for determinism.
        let mut best = 0;
        for k in 1..pairs.len() {
            let c = order
                .cmp(&pairs[k].lcm, &pairs[best].lcm)
                .then(pairs[k].i.cmp(&pairs[best].i))
                .then(pairs[k].j.cmp(&pairs[best].j));
            if c == Ordering::Less {
                best = k;
            }
        }
        let pair = pairs.swap_remove(best);
        let (lm_i, _) = basis[pair.i].leading().unwrap();
        let (lm_j, _) = basis[pair.j].leading().unwrap();
        // Product criterion.
        if lm_i.coprime(lm_j) {
            continue;
        }
        // Chain criterion: some third element divides the lcm and both of its
        // pairs with i and j are no longer pending.
        let mut skip = false;
        for (k, b) in basis.iter().enumerate() {
            if k == pair.i || k == pair.j {
                continue;
            }
            let lk = b.leading_monomial().unwrap();
            if lk.divides(&pair.lcm)
                && !pairs
                    .iter()
                    .any(|p| is_pair(p, pair.i, k) || is_pair(p, pair.j, k))
            {
                skip = true;
                break;
            }
        }
        if skip {
            continue;
        }
        if let Some(max) = budget {
            if reductions >= max {
                return Err(GndError::BudgetExceeded(reductions));
            }
        }
        reductions += 1;
        let s = spoly(&basis[pair.i], &basis[pair.j])?;
        let r = normal_form(&s, &basis)?;
        if r.is_zero() {
            continue;
        }
        let new_idx = basis.len();
        basis.push(r.monic());
        for k in 0..new_idx {
            push_pair(&mut pairs, &basis, k, new_idx);
        }
    }
    auto_reduce(ring, basis)
}

fn is_pair(p: &Pair, a: usize, b: usize) -> bool {
    (p.i == a && p.j == b) || (p.i == b && p.j == a)
}

fn push_pair(pairs: &mut Vec<Pair>, basis: &[Poly], i: usize, j: usize) {
    let lm_i = basis[i].leading_monomial().unwrap();
    let lm_j = basis[j].leading_monomial().unwrap();
    pairs.push(Pair {
        i,
        j,
        lcm: lm_i.lcm(lm_j),
    });
}

/// Inter-reduce a basis: every element in normal form against the others,
/// monic, sorted ascending by leading monomial.
pub fn auto_reduce(ring: &Arc<RingContext>, mut basis: Vec<Poly>) -> Result<Vec<Poly>> {
    let order = ring.order().clone();
    // Drop elements whose lead is divisible by an earlier (smaller) lead.
    basis.sort_by(|a, b| order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    let mut kept: Vec<Poly> = Vec::new();
    for b in &basis {
        let lm = b.leading_monomial().unwrap();
        if !kept
            .iter()
            .any(|k| k.leading_monomial().unwrap().divides(lm))
        {
            kept.push(b.clone());
        }
    }
    // Fully reduce tails until stable.
    for _ in 0..64 {
        let mut changed = false;
        for i in 0..kept.len() {
            let others: Vec<Poly> = kept
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, p)| p.clone())
                .collect();
            let r = normal_form(&kept[i], &others)?.monic();
            if r != kept[i] {
                kept[i] = r;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut out: Vec<Poly> = kept.into_iter().filter(|p| !p.is_zero()).collect();
    out.sort_by(|a, b| order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    Ok(out)
}

/// Certificate used by tests: every S-polynomial of `basis` reduces to zero.
pub fn buchberger_certificate(basis: &[Poly]) -> Result<bool> {
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let s = spoly(&basis[i], &basis[j])?;
            if !normal_form(&s, basis)?.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Membership `p in I`.
pub fn ideal_membership(p: &Poly, ideal: &Ideal) -> Result<bool> {
    ideal.contains(p)
}

/// Generators of `I` intersected with the subring omitting `drop` variables.
pub fn eliminate(ideal: &Ideal, drop: &[usize]) -> Result<Ideal> {
    let ring = ideal.ring().clone();
    let mut mask = vec![false; ring.num_vars()];
    for &d in drop {
        mask[d] = true;
    }
    let gb = ideal.std_with(TermOrder::block(mask.clone()), None)?;
    let keep: Vec<bool> = mask.iter().map(|&b| !b).collect();
    let gens: Vec<Poly> = gb
        .iter()
        .filter(|g| g.supported_on(&keep))
        .cloned()
        .collect();
    Ok(Ideal::new(&ring, gens))
}

/// `I ∩ J` by the t-trick: eliminate `t` from `t·I + (1−t)·J`.
pub fn ideal_intersect(a: &Ideal, b: &Ideal) -> Result<Ideal> {
    let ring = a.ring().clone();
    if a.gens.is_empty() {
        return Ok(Ideal::new(&ring, vec![]));
    }
    if b.gens.is_empty() {
        return Ok(Ideal::new(&ring, vec![]));
    }
    // I ∩ (1) = I.
    if b.gens.iter().any(|g| g.is_constant() && !g.is_zero()) {
        return Ok(a.clone());
    }
    if a.gens.iter().any(|g| g.is_constant() && !g.is_zero()) {
        return Ok(b.clone());
    }
    let ext = ring.extend(&[(VarKind::Aux, fresh_aux_name(&ring))]);
    let t = Poly::var(&ext, ext.num_vars() - 1);
    let one_minus_t = Poly::one(&ext).sub(&t)?;
    let mut gens = Vec::new();
    for g in &a.gens {
        gens.push(t.mul(&g.lift(&ext)?)?);
    }
    for g in &b.gens {
        gens.push(one_minus_t.mul(&g.lift(&ext)?)?);
    }
    let ext_ideal = Ideal::new(&ext, gens);
    let elim = eliminate(&ext_ideal, &[ext.num_vars() - 1])?;
    let gens: Result<Vec<Poly>> = elim.gens.iter().map(|g| g.lift(&ring)).collect();
    Ok(Ideal::new(&ring, gens?))
}

/// The colon ideal `(I : J) = { p : p·J ⊆ I }`, computed per generator of J
/// as `(I ∩ (g)) / g` and intersected.
pub fn ideal_quotient(i: &Ideal, j: &Ideal) -> Result<Ideal> {
    let ring = i.ring().clone();
    let mut acc: Option<Ideal> = None;
    for g in &j.gens {
        if g.is_zero() {
            continue;
        }
        let meet = ideal_intersect(i, &Ideal::new(&ring, vec![g.clone()]))?;
        let quots: Result<Vec<Poly>> = meet.gens.iter().map(|p| p.exact_div(g)).collect();
        let part = Ideal::new(&ring, quots?);
        acc = Some(match acc {
            None => part,
            Some(prev) => ideal_intersect(&prev, &part)?,
        });
    }
    match acc {
        // J = (0): everything multiplies it into I.
        None => Ok(Ideal::new(&ring, vec![Poly::one(&ring)])),
        Some(ideal) => {
            let gb = ideal.std()?;
            Ok(Ideal::new(&ring, gb.as_ref().clone()))
        }
    }
}

/// A ring map `Y_i -> image_i` of A-algebras, A = k[x]/xid, into a target
/// presented by `target_relations` (aid and xid). Images must be polynomial
/// (cleared denominators) for kernel computation.
#[derive(Debug, Clone)]
pub struct RingMap {
    pub source_vars: Vec<usize>,
    pub images: Vec<Poly>,
    pub target_relations: Vec<Poly>,
}

/// Kernel of the map `A[Y] -> target/target_relations` as an ideal of A[Y]:
/// the parameter variables are eliminated from the graph ideal, and the
/// result is reduced modulo the x-relations before reporting.
pub fn ring_map_kernel(map: &RingMap) -> Result<Ideal> {
    if map.source_vars.len() != map.images.len() {
        return Err(GndError::DimensionMismatch(
            "one image per source variable".into(),
        ));
    }
    let ring = match map.images.first() {
        Some(p) => p.ring().clone(),
        None => {
            return Err(GndError::DimensionMismatch("empty map".into()));
        }
    };
    let mut gens = Vec::new();
    for (&v, img) in map.source_vars.iter().zip(&map.images) {
        gens.push(Poly::var(&ring, v).sub(img)?);
    }
    for rel in &map.target_relations {
        gens.push(rel.clone());
    }
    // Eliminate the coefficient parameters; the x-block stays, it is part of
    // the source ring A[Y].
    let drop: Vec<usize> = (0..ring.num_vars())
        .filter(|&i| {
            ring.kinds()[i] == VarKind::Param && gens.iter().any(|g| g.uses_var(i))
        })
        .collect();
    let graph = Ideal::new(&ring, gens);
    let elim = eliminate(&graph, &drop)?;
    // Present generators modulo the x-relations; xid itself contributes
    // nothing to the kernel of an A-algebra map.
    let xid: Vec<Poly> = map
        .target_relations
        .iter()
        .filter(|r| {
            let pm = r.ring().mask_of(&[VarKind::Param]);
            !r.is_zero() && r.terms().iter().all(|(m, _)| m.supported_on(
                &pm.iter().map(|&b| !b).collect::<Vec<_>>(),
            ))
        })
        .cloned()
        .collect();
    let xid_gb = buchberger(&ring, xid, None)?;
    let mut out = Vec::new();
    for g in elim.gens.iter() {
        let red = normal_form(g, &xid_gb)?;
        if !red.is_zero() {
            out.push(red.monic());
        }
    }
    let out = auto_reduce(&ring, out)?;
    Ok(Ideal::new(&ring, out))
}

/// Saturation membership: `p ∈ (I : u^∞)`, via the Rabinowitsch trick
/// `p ∈ I + (1 - t·u)` in a ring with one extra variable.
pub fn saturation_membership(p: &Poly, ideal: &Ideal, unit: &Poly) -> Result<bool> {
    let ring = ideal.ring().clone();
    let ext = ring.extend(&[(VarKind::Aux, fresh_aux_name(&ring))]);
    let t = Poly::var(&ext, ext.num_vars() - 1);
    let lifted: Result<Vec<Poly>> = ideal.gens.iter().map(|g| g.lift(&ext)).collect();
    let mut gens = lifted?;
    gens.push(Poly::one(&ext).sub(&t.mul(&unit.lift(&ext)?)?)?);
    let ext_ideal = Ideal::new(&ext, gens);
    ext_ideal.contains(&p.lift(&ext)?)
}

fn fresh_aux_name(ring: &RingContext) -> String {
    let mut k = 0;
    loop {
        let name = format!("t@{k}");
        if ring.var_index(&name).is_err() {
            return name;
        }
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::TermOrder;

    fn pring() -> Arc<RingContext> {
        RingContext::new(
            &["a1", "a3", "a"],
            &["x1", "x2"],
            &["Y1", "Y2", "Y3"],
            &[],
            &[],
            TermOrder::Degrevlex,
        )
    }

    fn v(c: &Arc<RingContext>, n: &str) -> Poly {
        Poly::var_named(c, n).unwrap()
    }

    #[test]
    fn nf_single_step() {
        // NF(a3^2, {a3^2+a3+1}) = -a3-1
        let c = pring();
        let a3 = v(&c, "a3");
        let aid = a3
            .pow(2)
            .unwrap()
            .add(&a3)
            .unwrap()
            .add(&Poly::one(&c))
            .unwrap();
        let nf = normal_form(&a3.pow(2).unwrap(), &[aid]).unwrap();
        assert_eq!(nf, a3.neg().sub(&Poly::one(&c)).unwrap());
    }

    #[test]
    fn nf_idempotent() {
        let c = pring();
        let a3 = v(&c, "a3");
        let x2 = v(&c, "x2");
        let g = vec![a3.pow(2).unwrap().add(&a3).unwrap().add(&Poly::one(&c)).unwrap()];
        let p = a3.pow(5).unwrap().mul(&x2).unwrap().add(&a3).unwrap();
        let n1 = normal_form(&p, &g).unwrap();
        let n2 = normal_form(&n1, &g).unwrap();
        assert_eq!(n1, n2);
    }

    #[test]
    fn std_of_inversion_relation_contains_the_printed_element() {
        // std(2a1a3a + a1a - 1, a3^2+a3+1) contains 3a1a + 2a3 + 1.
        let c = pring();
        let (a1, a3, a) = (v(&c, "a1"), v(&c, "a3"), v(&c, "a"));
        let rel = a1
            .mul(&a3)
            .unwrap()
            .mul(&a)
            .unwrap()
            .scale(&Coeff::from_integer(2.into()))
            .add(&a1.mul(&a).unwrap())
            .unwrap()
            .sub(&Poly::one(&c))
            .unwrap();
        let aid = a3.pow(2).unwrap().add(&a3).unwrap().add(&Poly::one(&c)).unwrap();
        let ideal = Ideal::new(&c, vec![rel, aid.clone()]);
        let gb = ideal.std().unwrap();
        // 3a1a + 2a3 + 1, monic: a1a + (2/3)a3 + 1/3
        let target = a1
            .mul(&a)
            .unwrap()
            .scale(&Coeff::from_integer(3.into()))
            .add(&a3.scale(&Coeff::from_integer(2.into())))
            .unwrap()
            .add(&Poly::one(&c))
            .unwrap();
        assert!(normal_form(&target, &gb).unwrap().is_zero());
        assert!(gb.iter().any(|g| g == &target.monic()));
        assert!(buchberger_certificate(&gb).unwrap());
    }

    #[test]
    fn std_of_zero_is_empty() {
        let c = pring();
        let ideal = Ideal::new(&c, vec![Poly::zero(&c)]);
        assert!(ideal.std().unwrap().is_empty());
    }

    #[test]
    fn elimination_finds_the_cusp() {
        // eliminate t from (x - t^2, y - t^3) -> (y^2 - x^3)
        let c = RingContext::new(&[], &["x", "y"], &["t"], &[], &[], TermOrder::Degrevlex);
        let (x, yv, t) = (v(&c, "x"), v(&c, "y"), v(&c, "t"));
        let ideal = Ideal::new(
            &c,
            vec![
                x.sub(&t.pow(2).unwrap()).unwrap(),
                yv.sub(&t.pow(3).unwrap()).unwrap(),
            ],
        );
        let elim = eliminate(&ideal, &[c.var_index("t").unwrap()]).unwrap();
        let cusp = yv.pow(2).unwrap().sub(&x.pow(3).unwrap()).unwrap();
        let expect = Ideal::new(&c, vec![cusp]);
        assert!(elim.equals(&expect).unwrap());
    }

    #[test]
    fn elimination_surfaces_inconsistency() {
        // (t*u - 1, u) contains 1, so eliminating t still yields (1).
        let c = RingContext::new(&[], &["u"], &["t"], &[], &[], TermOrder::Degrevlex);
        let (u, t) = (v(&c, "u"), v(&c, "t"));
        let ideal = Ideal::new(&c, vec![t.mul(&u).unwrap().sub(&Poly::one(&c)).unwrap(), u]);
        let elim = eliminate(&ideal, &[c.var_index("t").unwrap()]).unwrap();
        assert!(elim.contains(&Poly::one(&c)).unwrap());
    }

    #[test]
    fn intersect_examples() {
        let c = pring();
        let (x1, x2) = (v(&c, "x1"), v(&c, "x2"));
        // (x1) ∩ (x2) = (x1 x2)
        let a = Ideal::new(&c, vec![x1.clone()]);
        let b = Ideal::new(&c, vec![x2.clone()]);
        let meet = ideal_intersect(&a, &b).unwrap();
        assert!(meet.equals(&Ideal::new(&c, vec![x1.mul(&x2).unwrap()])).unwrap());
        // I ∩ (1) = I
        let one = Ideal::new(&c, vec![Poly::one(&c)]);
        let meet = ideal_intersect(&a, &one).unwrap();
        assert!(meet.equals(&a).unwrap());
    }

    #[test]
    fn quotient_examples() {
        let c = pring();
        let x1 = v(&c, "x1");
        // ((x1^2) : (x1)) = (x1)
        let i = Ideal::new(&c, vec![x1.pow(2).unwrap()]);
        let j = Ideal::new(&c, vec![x1.clone()]);
        let q = ideal_quotient(&i, &j).unwrap();
        assert!(q.equals(&Ideal::new(&c, vec![x1.clone()])).unwrap());
        // ((f) : (f)) = (1)
        let f = x1.pow(2).unwrap().add(&v(&c, "x2")).unwrap();
        let i = Ideal::new(&c, vec![f.clone()]);
        let q = ideal_quotient(&i, &i).unwrap();
        assert!(q.contains(&Poly::one(&c)).unwrap());
    }

    #[test]
    fn membership_trivial() {
        let c = pring();
        let x2 = v(&c, "x2");
        let i = Ideal::new(&c, vec![x2.pow(6).unwrap()]);
        assert!(i.contains(&x2.pow(6).unwrap()).unwrap());
        assert!(!i.contains(&x2.pow(5).unwrap()).unwrap());
    }

    #[test]
    fn kernel_identity_map_is_zero() {
        let c = pring();
        let ys = [c.var_index("Y1").unwrap(), c.var_index("Y2").unwrap()];
        // Identity on k[Y1,Y2]: images are the variables themselves.
        let map = RingMap {
            source_vars: ys.to_vec(),
            images: vec![Poly::var(&c, ys[0]), Poly::var(&c, ys[1])],
            target_relations: vec![],
        };
        let k = ring_map_kernel(&map).unwrap();
        assert!(k.gens.is_empty());
    }
}
