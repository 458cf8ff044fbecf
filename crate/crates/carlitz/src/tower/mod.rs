//! The torsion tower K_n = K(ω_n), realized as O_n = O[x]/(ψ_n(x)).
//!
//! ψ_n is Eisenstein, so ω_n is a uniformizer, v(ω_n) = 1/e_n, and elements
//! of valuation ≥ 0 have integral coordinates on the basis 1, ω, …, ω^(e−1).
//! An element is stored as ω^(−pole)·Σ vec[i]·ω^i; the pole exponent keeps
//! ω-division lossless. Coordinate valuations live at distinct residues
//! mod 1, so the valuation of an element is read off exactly — no
//! cancellation between basis digits is possible.

mod galois;

pub use galois::{relative_trace_bound, trace_floor, GaloisElem, TorsionValue};

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{internal, invalid, Error, Result};
use crate::padic::{PadicCtx, PadicScalar, ZeroCheck};
use crate::phi::CarlitzMap;
use crate::rat::RatVal;
use crate::skew::SkewPoly;
use crate::xpoly::XPoly;

/// One floor of the tower. Level 0 is the base field K itself.
pub struct TowerLevel {
    ctx: Arc<PadicCtx>,
    n: usize,
    e_n: usize,
    psi: Arc<XPoly>,
    /// ω^(e+j) = Σ_i red_rows[j][i]·ω^i (exact scalars, grown on demand).
    red_rows: RwLock<Vec<Vec<PadicScalar>>>,
    /// Inverse of the unit S with π·S(ω) = −ω^e (coordinates, lazy).
    s_inv: OnceLock<Vec<PadicScalar>>,
    galois_cache: RwLock<HashMap<Vec<u16>, Arc<galois::GaloisMatrix>>>,
}

impl TowerLevel {
    fn build(carlitz: &CarlitzMap, n: usize) -> Result<Arc<TowerLevel>> {
        let ctx = carlitz.ctx().clone();
        if n == 0 {
            return Ok(Arc::new(TowerLevel {
                ctx: ctx.clone(),
                n: 0,
                e_n: 1,
                psi: Arc::new(XPoly::x(ctx)),
                red_rows: RwLock::new(vec![]),
                s_inv: OnceLock::new(),
                galois_cache: RwLock::new(HashMap::new()),
            }));
        }
        let psi = carlitz.psi(n)?;
        let e_n = psi.degree().expect("psi nonzero");
        let mut red_rows = Vec::new();
        if e_n > 1 {
            // row for ω^e; higher rows are derived on demand
            let row0: Vec<PadicScalar> = (0..e_n).map(|i| psi.coeff(i).neg()).collect();
            red_rows.push(row0);
        }
        Ok(Arc::new(TowerLevel {
            ctx,
            n,
            e_n,
            psi,
            red_rows: RwLock::new(red_rows),
            s_inv: OnceLock::new(),
            galois_cache: RwLock::new(HashMap::new()),
        }))
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        &self.ctx
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Ramification degree e_n = q_π^(n−1)(q_π−1); 1 at level 0.
    pub fn degree(&self) -> usize {
        self.e_n
    }

    pub fn psi(&self) -> &XPoly {
        &self.psi
    }

    /// v(ω_n) = 1/e_n.
    pub fn omega_valuation(&self) -> RatVal {
        RatVal::new(1, self.e_n as i64)
    }

    /// ω^(e+j) on the basis, extending the table as needed.
    fn red_row(&self, j: usize) -> Vec<PadicScalar> {
        {
            let rows = self.red_rows.read().unwrap();
            if let Some(r) = rows.get(j) {
                return r.clone();
            }
        }
        let mut rows = self.red_rows.write().unwrap();
        let e = self.e_n;
        while rows.len() <= j {
            let prev = rows.last().unwrap();
            let carry = prev[e - 1].clone();
            let row0 = &rows[0];
            let mut row = Vec::with_capacity(e);
            row.push(carry.mul(&row0[0]));
            for i in 1..e {
                row.push(prev[i - 1].add(&carry.mul(&row0[i])));
            }
            rows.push(row);
        }
        rows[j].clone()
    }

    /// Reduce a coefficient vector of arbitrary length mod ψ_n.
    fn reduce_vec(&self, mut v: Vec<PadicScalar>) -> Vec<PadicScalar> {
        let e = self.e_n;
        if e == 1 {
            // ω is the scalar −ψ₀: fold higher powers down
            let omega = self.psi.coeff(0).neg();
            let mut acc = PadicScalar::zero(self.ctx.clone());
            for c in v.into_iter().rev() {
                acc = acc.mul(&omega).add(&c);
            }
            return vec![acc];
        }
        while v.len() > e {
            let top_idx = v.len() - 1;
            let j = top_idx - e;
            let carry = v.pop().unwrap();
            if carry.is_exact_zero() {
                continue;
            }
            let row = self.red_row(j);
            for i in 0..e {
                if row[i].is_exact_zero() {
                    continue;
                }
                v[i] = v[i].add(&carry.mul(&row[i]));
            }
        }
        v.resize(e, PadicScalar::zero(self.ctx.clone()));
        v
    }

    /// S^(−1) where π·S(ω) = −ω^e; S is a unit because ψ is Eisenstein.
    fn s_inv(self: &Arc<Self>) -> &Vec<PadicScalar> {
        self.s_inv.get_or_init(|| {
            let e = self.e_n;
            let s: Vec<PadicScalar> = (0..e).map(|i| self.psi.coeff(i).mul_pi_pow(-1)).collect();
            let u = TowerElem { level: self.clone(), pole: 0, vec: s };
            let inv = u.invert_unit().expect("Eisenstein tail is a unit");
            inv.vec
        })
    }
}

impl std::fmt::Debug for TowerLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TowerLevel(n={}, e={})", self.n, self.e_n)
    }
}

/// The tower registry: builds levels on demand and caches the cross-level
/// embedding data. Shareable and internally synchronized.
pub struct Tower {
    carlitz: Arc<CarlitzMap>,
    levels: RwLock<Vec<Arc<TowerLevel>>>,
    embed_cache: RwLock<HashMap<(usize, usize), Arc<Vec<TowerElem>>>>,
}

impl Tower {
    pub fn new(carlitz: Arc<CarlitzMap>) -> Arc<Tower> {
        Arc::new(Tower {
            carlitz,
            levels: RwLock::new(vec![]),
            embed_cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        self.carlitz.ctx()
    }

    pub fn carlitz(&self) -> &Arc<CarlitzMap> {
        &self.carlitz
    }

    pub fn level(&self, n: usize) -> Result<Arc<TowerLevel>> {
        {
            let levels = self.levels.read().unwrap();
            if let Some(l) = levels.get(n) {
                return Ok(l.clone());
            }
        }
        let mut levels = self.levels.write().unwrap();
        while levels.len() <= n {
            let next = TowerLevel::build(&self.carlitz, levels.len())?;
            levels.push(next);
        }
        Ok(levels[n].clone())
    }

    /// ω_n as an element of level n (n ≥ 1).
    pub fn omega(&self, n: usize) -> Result<TowerElem> {
        if n == 0 {
            return invalid("omega is defined for levels n >= 1");
        }
        let level = self.level(n)?;
        Ok(TowerElem::omega(&level))
    }

    /// Coordinates of ω_m^i at level n, for i < e_m (cached).
    pub(crate) fn embed_basis(&self, m: usize, n: usize) -> Result<Arc<Vec<TowerElem>>> {
        if let Some(hit) = self.embed_cache.read().unwrap().get(&(m, n)) {
            return Ok(hit.clone());
        }
        let lev_m = self.level(m)?;
        let lev_n = self.level(n)?;
        let omega_m_at_n: TowerElem = if m == 0 {
            TowerElem::zero(&lev_n)
        } else {
            let phi = self.carlitz.phi_of_poly(&pi_power(self.ctx(), n - m));
            apply_skew(&phi, &TowerElem::omega(&lev_n))
        };
        let mut basis = Vec::with_capacity(lev_m.degree());
        let mut cur = TowerElem::one(&lev_n);
        for _ in 0..lev_m.degree() {
            basis.push(cur.clone());
            cur = cur.mul(&omega_m_at_n);
        }
        let arc = Arc::new(basis);
        self.embed_cache.write().unwrap().insert((m, n), arc.clone());
        Ok(arc)
    }

    /// Inclusion K_m ⊆ K_n via ω_m = Φ_{π^(n−m)}(ω_n); valuations are
    /// preserved.
    pub fn embed(&self, a: &TowerElem, n: usize) -> Result<TowerElem> {
        let m = a.level.n;
        if n < m {
            return invalid(format!("cannot embed level {m} into lower level {n}"));
        }
        if n == m {
            return Ok(a.clone());
        }
        let basis = self.embed_basis(m, n)?;
        let lev_n = self.level(n)?;
        let mut out = TowerElem::zero(&lev_n);
        for (i, c) in a.vec.iter().enumerate() {
            if c.is_exact_zero() {
                continue;
            }
            out = out.add(&basis[i].scale(c));
        }
        if a.pole > 0 {
            let omega_m_at_n = &basis.get(1).cloned().unwrap_or_else(|| {
                // e_m == 1: ω_m embeds as a scalar; recompute directly
                let phi = self.carlitz.phi_of_poly(&pi_power(self.ctx(), n - m));
                apply_skew(&phi, &TowerElem::omega(&lev_n))
            });
            let inv = omega_m_at_n.inv()?;
            out = out.mul(&inv.pow(a.pole as u64));
        }
        Ok(out)
    }

    /// Valuation of the different of K_n/K: v(ψ_n′(ω_n)), asserted equal to
    /// the closed form n·f − 1/(q_π−1).
    pub fn different_valuation(&self, n: usize) -> Result<RatVal> {
        if n == 0 {
            return Ok(RatVal::zero());
        }
        let level = self.level(n)?;
        let deriv = level.psi.derivative();
        let omega = TowerElem::omega(&level);
        let val = eval_xpoly(&deriv, &omega).valuation()?;
        let val = match val {
            TVal::Finite(v) => v,
            TVal::Infinite => return internal("psi' vanishes at omega"),
        };
        let q_p = self.ctx().prime().residue_card() as i64;
        let f = self.ctx().prime().f() as i64;
        let closed = RatVal::int(n as i64 * f).sub(&RatVal::new(1, q_p - 1));
        if val != closed {
            return internal(format!("different valuation {val} != closed form {closed}"));
        }
        Ok(val)
    }
}

pub(crate) fn pi_power(ctx: &Arc<PadicCtx>, k: usize) -> crate::poly::APoly {
    let mut out = crate::poly::APoly::one(ctx.field().clone());
    for _ in 0..k {
        out = out.mul(ctx.prime().pi());
    }
    out
}

/// Apply an additive operator Σ c_i·τ^i to a tower element.
pub fn apply_skew(f: &SkewPoly, x: &TowerElem) -> TowerElem {
    let mut out = TowerElem::zero(&x.level);
    let mut frob = x.clone();
    for (i, c) in f.coeffs().iter().enumerate() {
        if i > 0 {
            frob = frob.frobenius();
        }
        if c.is_exact_zero() {
            continue;
        }
        out = out.add(&frob.scale(c));
    }
    out
}

/// Evaluate a dense x-polynomial at a tower element (Horner).
pub fn eval_xpoly(p: &XPoly, x: &TowerElem) -> TowerElem {
    let mut acc = TowerElem::zero(&x.level);
    for c in p.coeffs().iter().rev() {
        acc = acc.mul(x).add(&TowerElem::from_scalar(&x.level, c.clone()));
    }
    acc
}

/// Valuation of a tower element.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TVal {
    Finite(RatVal),
    Infinite,
}

/// Element of K_n in the form ω^(−pole)·Σ vec[i]·ω^i.
#[derive(Clone)]
pub struct TowerElem {
    level: Arc<TowerLevel>,
    pole: usize,
    vec: Vec<PadicScalar>,
}

impl TowerElem {
    pub fn zero(level: &Arc<TowerLevel>) -> TowerElem {
        TowerElem {
            level: level.clone(),
            pole: 0,
            vec: vec![PadicScalar::zero(level.ctx.clone()); level.e_n],
        }
    }

    pub fn one(level: &Arc<TowerLevel>) -> TowerElem {
        let mut v = vec![PadicScalar::zero(level.ctx.clone()); level.e_n];
        v[0] = PadicScalar::one(level.ctx.clone());
        TowerElem { level: level.clone(), pole: 0, vec: v }
    }

    pub fn omega(level: &Arc<TowerLevel>) -> TowerElem {
        assert!(level.n >= 1, "omega exists at levels >= 1");
        if level.e_n == 1 {
            // ψ has degree 1: ω = −ψ₀ lies in the base field
            return TowerElem::from_scalar(level, level.psi.coeff(0).neg());
        }
        let mut v = vec![PadicScalar::zero(level.ctx.clone()); level.e_n];
        v[1] = PadicScalar::one(level.ctx.clone());
        TowerElem { level: level.clone(), pole: 0, vec: v }
    }

    pub fn from_scalar(level: &Arc<TowerLevel>, s: PadicScalar) -> TowerElem {
        let mut v = vec![PadicScalar::zero(level.ctx.clone()); level.e_n];
        v[0] = s;
        TowerElem { level: level.clone(), pole: 0, vec: v }
    }

    pub fn from_coords(level: &Arc<TowerLevel>, pole: usize, mut vec: Vec<PadicScalar>) -> Result<TowerElem> {
        if vec.len() > level.e_n {
            return invalid(format!("coordinate vector longer than e_n = {}", level.e_n));
        }
        vec.resize(level.e_n, PadicScalar::zero(level.ctx.clone()));
        Ok(TowerElem { level: level.clone(), pole, vec }.normalized())
    }

    pub fn level(&self) -> &Arc<TowerLevel> {
        &self.level
    }

    pub fn level_n(&self) -> usize {
        self.level.n
    }

    pub fn pole(&self) -> usize {
        self.pole
    }

    pub fn coords(&self) -> &[PadicScalar] {
        &self.vec
    }

    fn ctx(&self) -> &Arc<PadicCtx> {
        &self.level.ctx
    }

    /// Scalar value of a level whose degree is 1 (level 0, or the q_π = 2
    /// tame level where K_1 = K).
    pub fn as_scalar(&self) -> Result<PadicScalar> {
        if self.level.e_n != 1 {
            return invalid("as_scalar on a level of degree > 1");
        }
        if self.pole == 0 {
            return Ok(self.vec[0].clone());
        }
        let omega = self.level.psi.coeff(0).neg();
        Ok(self.vec[0].mul(&omega.inv()?.pow(self.pole as u64)))
    }

    fn same_level(&self, other: &TowerElem) -> bool {
        Arc::ptr_eq(&self.level, &other.level)
            || (self.level.n == other.level.n && self.level.e_n == other.level.e_n)
    }

    pub fn add(&self, other: &TowerElem) -> TowerElem {
        assert!(self.same_level(other), "mixed tower levels; embed first");
        let (a, b) = (self, other);
        let pole = a.pole.max(b.pole);
        let av = a.raise_pole(pole);
        let bv = b.raise_pole(pole);
        let vec = av.iter().zip(&bv).map(|(x, y)| x.add(y)).collect();
        TowerElem { level: self.level.clone(), pole, vec }.normalized()
    }

    pub fn neg(&self) -> TowerElem {
        TowerElem {
            level: self.level.clone(),
            pole: self.pole,
            vec: self.vec.iter().map(|c| c.neg()).collect(),
        }
    }

    pub fn sub(&self, other: &TowerElem) -> TowerElem {
        self.add(&other.neg())
    }

    /// Coordinates re-expressed at a larger pole exponent.
    fn raise_pole(&self, pole: usize) -> Vec<PadicScalar> {
        if pole == self.pole {
            return self.vec.clone();
        }
        let shift = pole - self.pole;
        let mut v = vec![PadicScalar::zero(self.ctx().clone()); shift];
        v.extend(self.vec.iter().cloned());
        self.level.reduce_vec(v)
    }

    pub fn mul(&self, other: &TowerElem) -> TowerElem {
        assert!(self.same_level(other), "mixed tower levels; embed first");
        let e = self.level.e_n;
        if e == 1 {
            return TowerElem {
                level: self.level.clone(),
                pole: self.pole + other.pole,
                vec: vec![self.vec[0].mul(&other.vec[0])],
            }
            .normalized();
        }
        let mut conv = vec![PadicScalar::zero(self.ctx().clone()); 2 * e - 1];
        for (i, a) in self.vec.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.vec.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                conv[i + j] = conv[i + j].add(&a.mul(b));
            }
        }
        let vec = self.level.reduce_vec(conv);
        TowerElem { level: self.level.clone(), pole: self.pole + other.pole, vec }.normalized()
    }

    pub fn scale(&self, s: &PadicScalar) -> TowerElem {
        TowerElem {
            level: self.level.clone(),
            pole: self.pole,
            vec: self.vec.iter().map(|c| c.mul(s)).collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> TowerElem {
        self.scale(&PadicScalar::from_int(self.ctx().clone(), n))
    }

    /// Lossless multiplication by π^k on every coordinate.
    pub fn mul_pi_pow(&self, k: i64) -> TowerElem {
        TowerElem {
            level: self.level.clone(),
            pole: self.pole,
            vec: self.vec.iter().map(|c| c.mul_pi_pow(k)).collect(),
        }
    }

    /// Multiplication by ω^(−k) (lossless, raises the pole).
    pub fn mul_omega_inv_pow(&self, k: usize) -> TowerElem {
        TowerElem { level: self.level.clone(), pole: self.pole + k, vec: self.vec.clone() }
            .normalized()
    }

    /// Multiplication by ω^k.
    pub fn mul_omega_pow(&self, k: usize) -> TowerElem {
        if k <= self.pole {
            return TowerElem {
                level: self.level.clone(),
                pole: self.pole - k,
                vec: self.vec.clone(),
            };
        }
        let shift = k - self.pole;
        let mut v = vec![PadicScalar::zero(self.ctx().clone()); shift];
        v.extend(self.vec.iter().cloned());
        TowerElem { level: self.level.clone(), pole: 0, vec: self.level.reduce_vec(v) }
    }

    /// Strip provable ω factors out of the pole representation.
    fn normalized(self) -> TowerElem {
        if self.pole == 0 {
            return self;
        }
        let mut cur = self;
        while cur.pole > 0 {
            if matches!(cur.vec[0].zero_check(1), ZeroCheck::Zero) {
                cur = cur.div_omega_integral();
                cur.pole -= 1;
            } else {
                break;
            }
        }
        cur
    }

    /// Divide the vec part by ω, assuming vec[0] ≡ 0 mod π:
    /// P/ω = (P − a₀)/ω − (a₀/π)·ω^(e−1)·S^(−1).
    fn div_omega_integral(&self) -> TowerElem {
        let e = self.level.e_n;
        let ctx = self.ctx().clone();
        if e == 1 {
            // ω is a scalar; divide directly
            let omega = self.level.psi.coeff(0).neg();
            let inv = omega.inv().expect("omega unit times pi");
            return TowerElem {
                level: self.level.clone(),
                pole: self.pole,
                vec: vec![self.vec[0].mul(&inv)],
            };
        }
        let a0 = self.vec[0].clone();
        let mut shifted: Vec<PadicScalar> = self.vec[1..].to_vec();
        shifted.push(PadicScalar::zero(ctx.clone()));
        let mut out = shifted;
        if !a0.is_exact_zero() {
            let b = a0.mul_pi_pow(-1).neg();
            let s_inv = self.level.s_inv();
            // b·ω^(e−1)·S^(−1): shift S^(−1) up by e−1 and reduce
            let mut v = vec![PadicScalar::zero(ctx.clone()); e - 1];
            v.extend(s_inv.iter().map(|c| c.mul(&b)));
            let corr = self.level.reduce_vec(v);
            for i in 0..e {
                out[i] = out[i].add(&corr[i]);
            }
        }
        TowerElem { level: self.level.clone(), pole: self.pole, vec: out }
    }

    /// Frobenius x ↦ x^q.
    pub fn frobenius(&self) -> TowerElem {
        let e = self.level.e_n;
        let q = self.ctx().field().q() as usize;
        if e == 1 {
            return TowerElem {
                level: self.level.clone(),
                pole: self.pole * q,
                vec: vec![self.vec[0].frobenius(1)],
            }
            .normalized();
        }
        let mut v = vec![PadicScalar::zero(self.ctx().clone()); (e - 1) * q + 1];
        for (i, c) in self.vec.iter().enumerate() {
            if !c.is_exact_zero() {
                v[i * q] = c.frobenius(1);
            }
        }
        TowerElem {
            level: self.level.clone(),
            pole: self.pole * q,
            vec: self.level.reduce_vec(v),
        }
        .normalized()
    }

    pub fn pow(&self, mut exp: u64) -> TowerElem {
        let mut acc = TowerElem::one(&self.level);
        let mut base = self.clone();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            exp >>= 1;
        }
        acc
    }

    /// Exact valuation from the digit expansion; coordinate contributions
    /// have distinct residues mod 1, so the minimum is achieved once.
    pub fn valuation(&self) -> Result<TVal> {
        let e = self.level.e_n as i64;
        let mut best: Option<RatVal> = None;
        let mut floor: Option<RatVal> = None;
        for (i, c) in self.vec.iter().enumerate() {
            match c.valuation() {
                Ok(crate::padic::Valuation::Infinite) => {}
                Ok(crate::padic::Valuation::Finite(v)) => {
                    let contrib = RatVal::new(v * e + i as i64 - self.pole as i64, e);
                    best = Some(match best {
                        None => contrib,
                        Some(b) => b.min(contrib),
                    });
                }
                Err(Error::AmbiguousValuation { floor: fl }) => {
                    let contrib = RatVal::new(fl * e + i as i64 - self.pole as i64, e);
                    floor = Some(match floor {
                        None => contrib,
                        Some(b) => b.min(contrib),
                    });
                }
                Err(e) => return Err(e),
            }
        }
        match (best, floor) {
            (None, None) => Ok(TVal::Infinite),
            (Some(b), None) => Ok(TVal::Finite(b)),
            (Some(b), Some(fl)) => {
                if b < fl {
                    Ok(TVal::Finite(b))
                } else {
                    Err(Error::Precision(format!(
                        "valuation >= {fl} cannot be separated from a digit only known to {fl}"
                    )))
                }
            }
            (None, Some(fl)) => Err(Error::Precision(format!(
                "element is zero within precision (valuation >= {fl})"
            ))),
        }
    }

    /// Lower bound on the valuation from everything tracked (None = the
    /// element is exactly zero).
    pub fn val_lower_bound(&self) -> Option<RatVal> {
        let e = self.level.e_n as i64;
        let mut best: Option<RatVal> = None;
        for (i, c) in self.vec.iter().enumerate() {
            if let Some(v) = c.val_lower_bound() {
                let contrib = RatVal::new(v * e + i as i64 - self.pole as i64, e);
                best = Some(match best {
                    None => contrib,
                    Some(b) => b.min(contrib),
                });
            }
        }
        best
    }

    /// Minimum absolute precision over the coordinates, as a valuation
    /// threshold (None = every coordinate is exact).
    pub fn abs_floor(&self) -> Option<RatVal> {
        let e = self.level.e_n as i64;
        let mut best: Option<RatVal> = None;
        for (i, c) in self.vec.iter().enumerate() {
            if let Some(a) = c.abs_prec() {
                let contrib = RatVal::new(a * e + i as i64 - self.pole as i64, e);
                best = Some(match best {
                    None => contrib,
                    Some(b) => b.min(contrib),
                });
            }
        }
        best
    }

    pub fn is_exact_zero(&self) -> bool {
        self.vec.iter().all(|c| c.is_exact_zero())
    }

    /// Is the element provably ≡ 0 to its own tracked precision? Exact
    /// nonzero elements answer false; exact zero answers true.
    pub fn is_zero_within_tracked(&self) -> bool {
        self.val_lower_bound().is_none()
            || match (self.val_lower_bound(), self.abs_floor()) {
                (Some(v), Some(fl)) => v >= fl,
                (Some(_), None) => false,
                _ => true,
            }
    }

    /// Equality to the common tracked precision. Exact operands must agree
    /// exactly.
    pub fn eq_within(&self, other: &TowerElem) -> bool {
        let diff = self.sub(other);
        diff.is_zero_within_tracked()
    }

    /// Equality of values mod ω^k (i.e. valuation of the difference ≥ k/e).
    pub fn eq_mod_omega(&self, other: &TowerElem, k: i64) -> Result<bool> {
        let diff = self.sub(other);
        let thr = RatVal::new(k, self.level.e_n as i64);
        if let Some(fl) = diff.abs_floor() {
            if fl < thr {
                return Err(Error::Precision(format!(
                    "comparison mod omega^{k} needs precision {thr}, have {fl}"
                )));
            }
        }
        Ok(diff.val_lower_bound().map_or(true, |v| v >= thr))
    }

    /// Multiplicative inverse via unit extraction and Newton iteration.
    pub fn inv(&self) -> Result<TowerElem> {
        let e = self.level.e_n as i64;
        let val = match self.valuation() {
            Ok(TVal::Finite(v)) => v,
            Ok(TVal::Infinite) => return invalid("inversion of exact zero"),
            Err(e) => return Err(e),
        };
        // integer m with vec-part = ω^m · unit
        let m = val
            .mul_int(e)
            .add(&RatVal::int(self.pole as i64));
        debug_assert!(m.is_integer());
        let m = m.num();
        let unit = self.shift_to_unit(m)?;
        let z = unit.invert_unit()?;
        // self = ω^(m − pole)·unit, so self^(−1) = ω^(pole − m)·z
        let shift = self.pole as i64 - m;
        Ok(if shift >= 0 {
            z.mul_omega_pow(shift as usize)
        } else {
            z.mul_omega_inv_pow((-shift) as usize)
        })
    }

    /// Divide the vec part by ω^m, producing a valuation-0 element.
    fn shift_to_unit(&self, m: i64) -> Result<TowerElem> {
        let e = self.level.e_n as i64;
        let mut cur = TowerElem { level: self.level.clone(), pole: 0, vec: self.vec.clone() };
        let mut m = m;
        if m < 0 {
            cur = cur.mul_omega_pow((-m) as usize);
            return Ok(cur);
        }
        // peel off whole powers of ω^e = −π·S
        let c = m.div_euclid(e);
        if c > 0 {
            let s_inv = self.level.s_inv().clone();
            let s_inv_elem =
                TowerElem { level: self.level.clone(), pole: 0, vec: s_inv }.pow(c as u64);
            cur = cur.mul(&s_inv_elem).mul_pi_pow(-c);
            if c % 2 == 1 {
                cur = cur.neg();
            }
            m -= c * e;
        }
        for _ in 0..m {
            // valuation is still positive, so the constant digit is divisible
            match cur.vec[0].zero_check(1) {
                ZeroCheck::Zero => {}
                ZeroCheck::NonZero => {
                    return internal("unit extraction hit a non-divisible digit");
                }
                ZeroCheck::Indeterminate => {
                    return Err(Error::Precision(
                        "unit extraction cannot certify divisibility by omega".into(),
                    ));
                }
            }
            cur = cur.div_omega_integral();
        }
        Ok(cur)
    }

    /// Newton inverse of a valuation-0 element (integral coordinates, unit
    /// constant digit).
    fn invert_unit(&self) -> Result<TowerElem> {
        debug_assert_eq!(self.pole, 0);
        let target: i64 = self
            .vec
            .iter()
            .filter_map(|c| c.abs_prec())
            .min()
            .unwrap_or(self.ctx().default_prec() as i64);
        let z0 = self.vec[0].inv().map_err(|e| match e {
            Error::Invalid(_) | Error::Precision(_) => Error::Precision(
                "inversion of a tower element indistinguishable from a non-unit".into(),
            ),
            other => other,
        })?;
        let mut z = TowerElem::from_scalar(&self.level, z0);
        let one = TowerElem::one(&self.level);
        let e = self.level.e_n as i64;
        let mut gained = RatVal::new(1, e);
        let goal = RatVal::int(target);
        loop {
            let two_minus = one.add(&one.sub(&self.mul(&z)));
            z = z.mul(&two_minus);
            gained = gained.mul_int(2);
            if gained >= goal {
                break;
            }
        }
        // the iterate is only correct mod π^target: mark it so
        z = z.truncate_abs(target);
        let resid = one.sub(&self.mul(&z));
        if let Some(v) = resid.val_lower_bound() {
            if v < goal.min(resid.abs_floor().unwrap_or(goal)) {
                return internal("Newton inversion failed to converge");
            }
        }
        Ok(z)
    }

    /// Forget digits beyond absolute precision π^k on every coordinate.
    pub fn truncate_abs(&self, k: i64) -> TowerElem {
        TowerElem {
            level: self.level.clone(),
            pole: self.pole,
            vec: self.vec.iter().map(|c| c.truncate_abs(k)).collect(),
        }
    }

    pub fn fmt_short(&self) -> String {
        let parts: Vec<String> = self
            .vec
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(i, c)| format!("({})w^{}", c.fmt_padic(), i))
            .collect();
        let body = if parts.is_empty() { "0".into() } else { parts.join(" + ") };
        if self.pole > 0 {
            format!("w^-{}*[{}] (level {})", self.pole, body, self.level.n)
        } else {
            format!("{} (level {})", body, self.level.n)
        }
    }
}

impl std::fmt::Debug for TowerElem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.fmt_short())
    }
}

#[cfg(test)]
mod tests;
