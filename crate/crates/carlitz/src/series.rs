//! Truncated Laurent series x^j·Σ s_i·x^i and Weierstrass division by a
//! distinguished polynomial.
//!
//! A series carries an x-window: `Tail::Zero` means the written
//! coefficients are the whole series (a Laurent polynomial), while
//! `Tail::Unknown(M)` means nothing is known from x^M on (relative to the
//! unit part). Division and shifts convert tail ignorance into π-precision
//! loss on the retained coefficients; every operation records that loss on
//! the coefficients themselves through the scalar ledger.

use crate::error::{invalid, Error, Result};
use crate::padic::{PadicScalar, ZeroCheck};
use crate::rat::RatVal;
use crate::tower::TowerElem;
use crate::xpoly::XPoly;

/// Knowledge about coefficients beyond the stored window.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Tail {
    /// The series is exactly the stored polynomial.
    Zero,
    /// Coefficients at unit-part indices ≥ M are unknown.
    Unknown(usize),
}

impl Tail {
    pub fn window(&self, len: usize) -> usize {
        match self {
            Tail::Zero => len,
            Tail::Unknown(m) => (*m).min(usize::MAX),
        }
    }

    fn meet(self, other: Tail) -> Tail {
        match (self, other) {
            (Tail::Zero, Tail::Zero) => Tail::Zero,
            (Tail::Zero, Tail::Unknown(m)) | (Tail::Unknown(m), Tail::Zero) => Tail::Unknown(m),
            (Tail::Unknown(a), Tail::Unknown(b)) => Tail::Unknown(a.min(b)),
        }
    }
}

/// Ring of coefficients a series can live over: O itself or a tower algebra.
pub trait Coeff: Clone + std::fmt::Debug {
    fn zero_like(&self) -> Self;
    fn add_c(&self, other: &Self) -> Self;
    fn sub_c(&self, other: &Self) -> Self;
    fn mul_c(&self, other: &Self) -> Self;
    fn neg_c(&self) -> Self;
    fn is_exact_zero_c(&self) -> bool;
    fn scale_scalar(&self, s: &PadicScalar) -> Self;
    fn small_int(&self, n: i64) -> Self;
    /// Forget digits beyond valuation `k` (integer π-digits).
    fn truncate_abs_c(&self, k: i64) -> Self;
}

impl Coeff for PadicScalar {
    fn zero_like(&self) -> Self {
        PadicScalar::zero(self.ctx().clone())
    }
    fn add_c(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn sub_c(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn mul_c(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn neg_c(&self) -> Self {
        self.neg()
    }
    fn is_exact_zero_c(&self) -> bool {
        self.is_exact_zero()
    }
    fn scale_scalar(&self, s: &PadicScalar) -> Self {
        self.mul(s)
    }
    fn small_int(&self, n: i64) -> Self {
        PadicScalar::from_int(self.ctx().clone(), n)
    }
    fn truncate_abs_c(&self, k: i64) -> Self {
        self.truncate_abs(k)
    }
}

impl Coeff for TowerElem {
    fn zero_like(&self) -> Self {
        TowerElem::zero(self.level())
    }
    fn add_c(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn sub_c(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn mul_c(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn neg_c(&self) -> Self {
        self.neg()
    }
    fn is_exact_zero_c(&self) -> bool {
        self.is_exact_zero()
    }
    fn scale_scalar(&self, s: &PadicScalar) -> Self {
        self.scale(s)
    }
    fn small_int(&self, n: i64) -> Self {
        TowerElem::one(self.level()).scale_int(n)
    }
    fn truncate_abs_c(&self, k: i64) -> Self {
        self.truncate_abs(k)
    }
}

#[derive(Clone)]
pub struct Series<C: Coeff> {
    xpow: i64,
    coeffs: Vec<C>,
    tail: Tail,
    zero: C,
}

pub type TruncLaurent = Series<PadicScalar>;

impl<C: Coeff> Series<C> {
    pub fn from_coeffs(zero: C, xpow: i64, coeffs: Vec<C>, tail: Tail) -> Series<C> {
        let mut s = Series { xpow, coeffs, tail, zero };
        s.trim();
        s
    }

    pub fn poly(zero: C, coeffs: Vec<C>) -> Series<C> {
        Series::from_coeffs(zero, 0, coeffs, Tail::Zero)
    }

    pub fn zero_series(zero: C) -> Series<C> {
        Series { xpow: 0, coeffs: vec![], tail: Tail::Zero, zero }
    }

    fn trim(&mut self) {
        if let Tail::Unknown(m) = self.tail {
            self.coeffs.truncate(m);
        }
        // canonical: drop exact-zero leading coefficients into xpow
        let lead = self.coeffs.iter().take_while(|c| c.is_exact_zero_c()).count();
        if lead > 0 && lead < self.coeffs.len() {
            self.coeffs.drain(..lead);
            self.xpow += lead as i64;
            if let Tail::Unknown(m) = self.tail {
                self.tail = Tail::Unknown(m - lead);
            }
        } else if lead == self.coeffs.len() && self.tail == Tail::Zero {
            self.coeffs.clear();
            self.xpow = 0;
        }
        while self.tail == Tail::Zero && self.coeffs.last().map_or(false, |c| c.is_exact_zero_c()) {
            self.coeffs.pop();
        }
    }

    pub fn xpow(&self) -> i64 {
        self.xpow
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> C {
        self.coeffs.get(i).cloned().unwrap_or_else(|| self.zero.zero_like())
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn zero_coeff(&self) -> &C {
        &self.zero
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.tail == Tail::Zero
    }

    /// Window of known unit-part coefficients (everything, for an exact
    /// Laurent polynomial).
    pub fn window(&self) -> usize {
        match self.tail {
            Tail::Zero => usize::MAX,
            Tail::Unknown(m) => m,
        }
    }

    pub fn mul_xpow(&self, j: i64) -> Series<C> {
        let mut out = self.clone();
        out.xpow += j;
        out
    }

    pub fn neg(&self) -> Series<C> {
        Series {
            xpow: self.xpow,
            coeffs: self.coeffs.iter().map(|c| c.neg_c()).collect(),
            tail: self.tail,
            zero: self.zero.clone(),
        }
    }

    pub fn scale(&self, s: &PadicScalar) -> Series<C> {
        Series {
            xpow: self.xpow,
            coeffs: self.coeffs.iter().map(|c| c.scale_scalar(s)).collect(),
            tail: self.tail,
            zero: self.zero.clone(),
        }
    }

    pub fn scale_coeff(&self, s: &C) -> Series<C> {
        Series {
            xpow: self.xpow,
            coeffs: self.coeffs.iter().map(|c| c.mul_c(s)).collect(),
            tail: self.tail,
            zero: self.zero.clone(),
        }
    }

    pub fn add(&self, other: &Series<C>) -> Series<C> {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let xpow = self.xpow.min(other.xpow);
        let off_a = (self.xpow - xpow) as usize;
        let off_b = (other.xpow - xpow) as usize;
        // absolute known-window in x-degrees above xpow
        let win_a = match self.tail {
            Tail::Zero => usize::MAX,
            Tail::Unknown(m) => m + off_a,
        };
        let win_b = match other.tail {
            Tail::Zero => usize::MAX,
            Tail::Unknown(m) => m + off_b,
        };
        let win = win_a.min(win_b);
        let len = (self.coeffs.len() + off_a).max(other.coeffs.len() + off_b).min(win);
        let mut coeffs = vec![self.zero.zero_like(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            if i + off_a < len {
                coeffs[i + off_a] = coeffs[i + off_a].add_c(c);
            }
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            if i + off_b < len {
                coeffs[i + off_b] = coeffs[i + off_b].add_c(c);
            }
        }
        let tail = if win == usize::MAX { Tail::Zero } else { Tail::Unknown(win) };
        Series::from_coeffs(self.zero.zero_like(), xpow, coeffs, tail)
    }

    pub fn sub(&self, other: &Series<C>) -> Series<C> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Series<C>) -> Series<C> {
        if self.is_zero() || other.is_zero() {
            return Series::zero_series(self.zero.zero_like());
        }
        let win = self.window().min(other.window());
        let len = match (self.tail, other.tail) {
            (Tail::Zero, Tail::Zero) => self.coeffs.len() + other.coeffs.len() - 1,
            _ => win.min(self.coeffs.len() + other.coeffs.len() - 1),
        };
        let mut coeffs = vec![self.zero.zero_like(); len];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i >= len {
                break;
            }
            if a.is_exact_zero_c() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j >= len {
                    break;
                }
                if b.is_exact_zero_c() {
                    continue;
                }
                coeffs[i + j] = coeffs[i + j].add_c(&a.mul_c(b));
            }
        }
        let tail = match (self.tail, other.tail) {
            (Tail::Zero, Tail::Zero) => Tail::Zero,
            _ => Tail::Unknown(win),
        };
        Series::from_coeffs(self.zero.zero_like(), self.xpow + other.xpow, coeffs, tail)
    }

    /// Truncate the unit-part window to m.
    pub fn truncate_window(&self, m: usize) -> Series<C> {
        let mut out = self.clone();
        out.tail = out.tail.meet(Tail::Unknown(m));
        out.trim();
        out
    }

    /// d/dx, a Laurent-series derivation.
    pub fn derivative(&self) -> Series<C> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.xpow + i as i64;
            coeffs.push(c.mul_c(&self.zero.small_int(k)));
        }
        let tail = match self.tail {
            Tail::Zero => Tail::Zero,
            Tail::Unknown(m) => Tail::Unknown(m),
        };
        Series::from_coeffs(self.zero.zero_like(), self.xpow - 1, coeffs, tail)
    }

    /// Multiplicative inverse of a unit series, to window `out_window`.
    /// The constant unit-part coefficient must be invertible.
    pub fn invert(&self, out_window: usize) -> Result<Series<C>>
    where
        C: CoeffInv,
    {
        if self.coeffs.is_empty() {
            return invalid("inversion of the zero series");
        }
        if self.window() < out_window {
            return Err(Error::Precision(format!(
                "inversion to window {out_window} from window {}",
                self.window()
            )));
        }
        let s0_inv = self.coeffs[0].inv_c()?;
        let mut out: Vec<C> = Vec::with_capacity(out_window);
        out.push(s0_inv.clone());
        for n in 1..out_window {
            let mut acc = self.zero.zero_like();
            for k in 1..=n.min(self.coeffs.len() - 1) {
                let c = &self.coeffs[k];
                if c.is_exact_zero_c() {
                    continue;
                }
                acc = acc.add_c(&c.mul_c(&out[n - k]));
            }
            out.push(acc.neg_c().mul_c(&s0_inv));
        }
        Ok(Series::from_coeffs(
            self.zero.zero_like(),
            -self.xpow,
            out,
            Tail::Unknown(out_window),
        ))
    }
}

/// Coefficients that support inversion (needed for series inversion).
pub trait CoeffInv: Coeff {
    fn inv_c(&self) -> Result<Self>;
}

impl CoeffInv for PadicScalar {
    fn inv_c(&self) -> Result<Self> {
        self.inv()
    }
}

impl CoeffInv for TowerElem {
    fn inv_c(&self) -> Result<Self> {
        self.inv()
    }
}

/// C(n, k) mod p by Lucas' theorem.
pub fn binom_mod_p(mut n: u64, mut k: u64, p: u64) -> u64 {
    let mut out = 1u64;
    while k > 0 || n > 0 {
        let (nd, kd) = (n % p, k % p);
        if kd > nd {
            return 0;
        }
        // C(nd, kd) mod p by the multiplicative formula
        let mut c = 1u64;
        for i in 0..kd {
            c = c * ((nd - i) % p) % p;
            // divide by (i+1) mod p
            c = c * mod_inv(i + 1, p) % p;
        }
        out = out * c % p;
        n /= p;
        k /= p;
    }
    out
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // Fermat, p prime
    let mut result = 1u64;
    let mut base = a % p;
    let mut exp = p - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    result
}

/// Taylor shift g(x+u) of the unit part of an integral series, coefficients
/// landing in u's ring. Tail ignorance becomes π-loss scaled by v(u).
pub fn taylor_shift(g: &TruncLaurent, u: &TowerElem) -> Result<Series<TowerElem>> {
    if g.xpow() < 0 {
        return invalid("taylor shift needs an integral series");
    }
    let zero = TowerElem::zero(u.level());
    let p = u.level().ctx().field().p() as u64;
    let n_coeff = g.coeffs().len() + g.xpow() as usize;
    // dense coefficient list including the x^j prefix
    let mut dense: Vec<PadicScalar> = Vec::with_capacity(n_coeff);
    for _ in 0..g.xpow() {
        dense.push(g.zero_coeff().zero_like());
    }
    dense.extend(g.coeffs().iter().cloned());
    let window = match g.tail() {
        Tail::Zero => usize::MAX,
        Tail::Unknown(m) => m + g.xpow() as usize,
    };
    let v_u = match u.valuation() {
        Ok(crate::tower::TVal::Finite(v)) => Some(v),
        Ok(crate::tower::TVal::Infinite) => None,
        Err(e) => return Err(e),
    };
    if v_u.is_none() {
        // u = 0: the shift is g itself, lifted coefficientwise
        let coeffs = dense.iter().map(|c| TowerElem::from_scalar(u.level(), c.clone())).collect();
        let tail = if window == usize::MAX { Tail::Zero } else { Tail::Unknown(window) };
        return Ok(Series::from_coeffs(zero, 0, coeffs, tail));
    }
    let v_u = v_u.unwrap();
    if v_u <= RatVal::zero() {
        return invalid("taylor shift requires v(u) > 0");
    }
    // powers of u
    let mut upow = Vec::with_capacity(dense.len());
    upow.push(TowerElem::one(u.level()));
    for _ in 1..dense.len().max(1) {
        upow.push(upow.last().unwrap().mul(u));
    }
    let mut out = Vec::with_capacity(dense.len());
    for j in 0..dense.len() {
        let mut acc = zero.zero_like();
        for i in j..dense.len() {
            if dense[i].is_exact_zero() {
                continue;
            }
            let b = binom_mod_p(i as u64, j as u64, p);
            if b == 0 {
                continue;
            }
            let term = upow[i - j].scale(&dense[i]).scale_int(b as i64);
            acc = acc.add(&term);
        }
        if window != usize::MAX {
            // tail terms i ≥ window contribute u^(i−j): valuation ≥ (window−j)·v(u)
            let bound = v_u.mul_int((window - j) as i64);
            acc = acc.truncate_abs(bound.floor());
        }
        out.push(acc);
    }
    let tail = if window == usize::MAX { Tail::Zero } else { Tail::Unknown(window) };
    Ok(Series::from_coeffs(zero, 0, out, tail))
}

/// Weierstrass division of an integral series by a distinguished monic
/// polynomial P (P ≡ x^D mod π): G = Q·P + R with deg R < D. The unknown
/// tail of G pollutes Q at degree s only above π^⌈(M−D−s)/D⌉ and R above
/// π^⌈(M−D+1)/D⌉; both are recorded on the output coefficients.
pub fn weierstrass_divide(
    g: &TruncLaurent,
    p: &XPoly,
) -> Result<(TruncLaurent, Vec<PadicScalar>)> {
    if g.xpow() < 0 {
        return invalid("weierstrass division needs an integral series");
    }
    if !p.is_monic() {
        return invalid("divisor must be monic");
    }
    let d = p.degree().ok_or_else(|| Error::Invalid("zero divisor".into()))?;
    if d == 0 {
        return invalid("divisor must have positive degree");
    }
    for i in 0..d {
        let c = p.coeff(i);
        if !c.is_exact_zero() && !matches!(c.zero_check(1), ZeroCheck::Zero) {
            return invalid("divisor is not distinguished (lower coefficients not ≡ 0 mod π)");
        }
    }
    let zero = g.zero_coeff().zero_like();
    let mut dense: Vec<PadicScalar> = Vec::new();
    for _ in 0..g.xpow() {
        dense.push(zero.clone());
    }
    dense.extend(g.coeffs().iter().cloned());
    let window = match g.tail() {
        Tail::Zero => usize::MAX,
        Tail::Unknown(m) => m + g.xpow() as usize,
    };
    if dense.len() < d && window == usize::MAX {
        // degree reasons: Q = 0, R = G
        let mut r = dense;
        r.resize(d, zero.clone());
        return Ok((Series::zero_series(zero), r));
    }
    if window != usize::MAX && window < d {
        return Err(Error::Precision(format!(
            "division window {window} is below the divisor degree {d}"
        )));
    }
    // ordinary long division from the top (P monic, sparse)
    let mut rem = dense;
    if rem.len() < d {
        rem.resize(d, zero.clone());
    }
    let qlen = rem.len() - d;
    let mut quo = vec![zero.clone(); qlen];
    let support: Vec<(usize, PadicScalar)> = (0..d)
        .filter(|&i| !p.coeff(i).is_exact_zero())
        .map(|i| (i, p.coeff(i)))
        .collect();
    for k in (0..qlen).rev() {
        let c = rem[k + d].clone();
        if c.is_exact_zero() {
            continue;
        }
        quo[k] = c.clone();
        rem[k + d] = zero.clone();
        for (i, pc) in &support {
            rem[k + *i] = rem[k + *i].sub(&c.mul(pc));
        }
    }
    rem.truncate(d);
    if window == usize::MAX {
        let q = Series::from_coeffs(zero, 0, quo, Tail::Zero);
        return Ok((q, rem));
    }
    // apply the tail-pollution ledger
    let m = window;
    let r_floor = ((m as i64 - d as i64) / d as i64) + 1; // ⌈(M−D+1)/D⌉ for M ≥ D
    let rem = rem.into_iter().map(|c| c.truncate_abs(r_floor)).collect();
    let q_window = m - d;
    let mut quo_t = Vec::with_capacity(quo.len().min(q_window.max(1)));
    for (s, c) in quo.into_iter().enumerate() {
        if s >= q_window {
            break;
        }
        let digits = ((m - d - s) as i64 + d as i64 - 1) / d as i64; // ⌈(M−D−s)/D⌉
        quo_t.push(c.truncate_abs(digits));
    }
    let q = Series::from_coeffs(zero, 0, quo_t, Tail::Unknown(q_window));
    Ok((q, rem))
}

impl TruncLaurent {
    /// Evaluate at a tower element of positive valuation. Returns the value
    /// and the certified absolute precision (None when nothing was lost).
    pub fn eval_at(&self, a: &TowerElem, min_abs: i64) -> Result<(TowerElem, Option<i64>)> {
        let va = match a.valuation()? {
            crate::tower::TVal::Finite(v) => v,
            crate::tower::TVal::Infinite => {
                if self.xpow < 0 {
                    return invalid("evaluation of a pole at zero");
                }
                let v = if self.xpow == 0 { self.coeff(0) } else { self.zero.zero_like() };
                return Ok((TowerElem::from_scalar(a.level(), v), None));
            }
        };
        if va <= RatVal::zero() {
            return invalid("series evaluation requires v(a) > 0");
        }
        let mut acc = TowerElem::zero(a.level());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(a);
            if !c.is_exact_zero() {
                acc = acc.add(&TowerElem::from_scalar(a.level(), c.clone()));
            }
        }
        if self.xpow != 0 {
            let factor = if self.xpow > 0 {
                a.pow(self.xpow as u64)
            } else {
                a.inv()?.pow((-self.xpow) as u64)
            };
            acc = acc.mul(&factor);
        }
        match self.tail {
            Tail::Zero => Ok((acc, None)),
            Tail::Unknown(m) => {
                // tail terms have valuation ≥ (xpow + M)·v(a)
                let bound = va.mul_int(self.xpow + m as i64).floor();
                if bound < min_abs {
                    return Err(Error::Precision(format!(
                        "window {m} certifies only pi^{bound} at v(a) = {va}, need pi^{min_abs}"
                    )));
                }
                Ok((acc.truncate_abs(bound), Some(bound)))
            }
        }
    }

    /// Substitute a sparse integral polynomial for x (used to verify the
    /// operator identities h∘Φ_η = …).
    pub fn compose_xpoly(&self, p: &XPoly) -> Result<TruncLaurent> {
        if self.xpow < 0 {
            return invalid("composition of a pole");
        }
        let zero = self.zero.zero_like();
        let p_series = Series::from_coeffs(zero.clone(), 0, p.coeffs().to_vec(), Tail::Zero);
        let mut acc = Series::zero_series(zero.clone());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(&p_series);
            acc = acc.add(&Series::poly(zero.clone(), vec![c.clone()]));
        }
        // x^j prefix
        for _ in 0..self.xpow {
            acc = acc.mul(&p_series);
        }
        // the tail of self contributes from x-order (window)·ord_x(P) on;
        // ord_x(P) ≥ 1 for distinguished P
        if let Tail::Unknown(m) = self.tail {
            acc = acc.truncate_window(m + self.xpow as usize);
        }
        Ok(acc)
    }

    pub fn fmt_short(&self) -> String {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_exact_zero())
            .take(8)
            .map(|(i, c)| format!("({})x^{}", c.fmt_padic(), self.xpow + i as i64))
            .collect();
        let tail = match self.tail {
            Tail::Zero => "".to_string(),
            Tail::Unknown(m) => format!(" + O(x^{})", self.xpow + m as i64),
        };
        format!("{}{}", if terms.is_empty() { "0".into() } else { terms.join(" + ") }, tail)
    }
}

impl<C: Coeff> std::fmt::Debug for Series<C> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x^{}·(len {} coeffs, {:?})", self.xpow, self.coeffs.len(), self.tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::padic::PadicCtx;
    use crate::phi::CarlitzMap;
    use crate::poly::APoly;
    use std::sync::Arc;

    fn ctx(q: u64, prec: u32) -> Arc<PadicCtx> {
        let f = FieldSpec::new(q, 1, None).unwrap();
        let pi = APoly::var(f.clone());
        PadicCtx::new(f, pi, prec).unwrap()
    }

    fn sc(c: &Arc<PadicCtx>, s: &str) -> PadicScalar {
        PadicScalar::from_apoly(c.clone(), &APoly::parse(c.field(), s, "T").unwrap())
    }

    fn poly(c: &Arc<PadicCtx>, coeffs: &[&str]) -> TruncLaurent {
        Series::poly(PadicScalar::zero(c.clone()), coeffs.iter().map(|s| sc(c, s)).collect())
    }

    #[test]
    fn mul_and_window() {
        let c = ctx(3, 12);
        let a = poly(&c, &["1", "1"]); // 1 + x
        let b = poly(&c, &["1", "2"]); // 1 + 2x
        let prod = a.mul(&b);
        assert_eq!(prod.tail(), Tail::Zero);
        assert!(prod.coeff(0).eq_mod(&sc(&c, "1"), 8).unwrap());
        assert!(prod.coeff(1).is_exact_zero()); // 1+2 = 0 mod 3
        assert!(prod.coeff(2).eq_mod(&sc(&c, "2"), 8).unwrap());

        let at = a.truncate_window(5);
        let bt = b.truncate_window(4);
        assert_eq!(at.mul(&bt).window(), 4);
    }

    #[test]
    fn inversion_roundtrip() {
        let c = ctx(3, 12);
        let a = poly(&c, &["1", "T", "2"]);
        let inv = a.invert(10).unwrap();
        let prod = a.mul(&inv);
        assert!(prod.coeff(0).eq_mod(&sc(&c, "1"), 10).unwrap());
        for i in 1..prod.window() {
            assert!(!matches!(prod.coeff(i).zero_check(10), ZeroCheck::NonZero));
        }
    }

    #[test]
    fn weierstrass_examples() {
        let c = ctx(3, 12);
        let carlitz = CarlitzMap::new(c.clone());
        let phi_t = carlitz.torsion_poly(1); // Tx + x^3
        // x^3 = 1·(Tx + x^3) − Tx
        let g = poly(&c, &["0", "0", "0", "1"]);
        let (q, r) = weierstrass_divide(&g, &phi_t).unwrap();
        assert_eq!(q.tail(), Tail::Zero);
        assert!(q.coeff(0).eq_mod(&sc(&c, "1"), 10).unwrap());
        assert!(r[0].is_exact_zero());
        assert!(r[1].eq_mod(&sc(&c, "2*T"), 10).unwrap()); // −T = 2T
        // G = P: (1, 0)
        let gp = Series::poly(PadicScalar::zero(c.clone()), phi_t.coeffs().to_vec());
        let (q, r) = weierstrass_divide(&gp, &phi_t).unwrap();
        assert!(q.coeff(0).eq_mod(&sc(&c, "1"), 10).unwrap());
        assert!(r.iter().all(|x| x.is_exact_zero()));
        // G = 1: (0, 1) by degree reasons
        let one = poly(&c, &["1"]);
        let (q, r) = weierstrass_divide(&one, &phi_t).unwrap();
        assert!(q.is_zero());
        assert!(r[0].eq_mod(&sc(&c, "1"), 10).unwrap());
    }

    #[test]
    fn weierstrass_window_precision() {
        let c = ctx(3, 12);
        let carlitz = CarlitzMap::new(c.clone());
        let phi_t = carlitz.torsion_poly(1);
        // the same series with and without a truncated window: the
        // truncated division must agree within its own certificate
        let full = poly(&c, &["T", "1", "2", "1", "0", "2", "1", "T", "2", "1", "1", "1"]);
        let cut = full.truncate_window(9);
        let (qf, rf) = weierstrass_divide(&full, &phi_t).unwrap();
        let (qc, rc) = weierstrass_divide(&cut, &phi_t).unwrap();
        assert_eq!(qc.window(), 6);
        for i in 0..qc.window() {
            let digits = qc.coeff(i).abs_prec();
            if let Some(k) = digits {
                assert!(qf.coeff(i).eq_mod(&qc.coeff(i), k as u32).unwrap());
            }
        }
        for (a, b) in rf.iter().zip(&rc) {
            if let Some(k) = b.abs_prec() {
                assert!(a.eq_mod(b, k as u32).unwrap());
            }
        }
        // division by parts: G = Q·P + R exactly for the exact input
        let qp = qf.mul(&Series::poly(PadicScalar::zero(c.clone()), phi_t.coeffs().to_vec()));
        let back = qp.add(&Series::poly(PadicScalar::zero(c.clone()), rf.clone()));
        let diff = back.sub(&full);
        assert!(diff.is_zero());
    }

    #[test]
    fn binomials_mod_p() {
        assert_eq!(binom_mod_p(4, 2, 3), 0); // 6 ≡ 0
        assert_eq!(binom_mod_p(9, 3, 3), 0);
        assert_eq!(binom_mod_p(10, 1, 3), 1); // 10 ≡ 1
        assert_eq!(binom_mod_p(5, 2, 2), 0); // 10 even
        assert_eq!(binom_mod_p(3, 1, 3), 0);
        assert_eq!(binom_mod_p(4, 4, 5), 1);
        // Pascal oracle for small cases
        for p in [2u64, 3, 5] {
            let mut row = vec![1u64];
            for n in 1..=12 {
                let mut next = vec![1u64];
                for k in 1..n {
                    next.push((row[k - 1] + row[k]) % p);
                }
                next.push(1);
                row = next.iter().map(|&v| v % p).collect();
                for (k, &v) in row.iter().enumerate() {
                    assert_eq!(binom_mod_p(n as u64, k as u64, p), v % p);
                }
            }
        }
    }

    #[test]
    fn derivative_and_dlog_shapes() {
        let c = ctx(3, 12);
        let a = poly(&c, &["1", "T", "0", "2"]); // 1 + Tx + 2x^3
        let d = a.derivative();
        assert_eq!(d.xpow(), 0); // constant drops, xpow −1 + leading zero trim
        assert!(d.coeff(0).eq_mod(&sc(&c, "T"), 8).unwrap());
        // (x^(−2))' = −2x^(−3) = x^(−3)
        let m = poly(&c, &["1"]).mul_xpow(-2);
        let dm = m.derivative();
        assert_eq!(dm.xpow(), -3);
        assert!(dm.coeff(0).eq_mod(&sc(&c, "1"), 8).unwrap());
    }
}
