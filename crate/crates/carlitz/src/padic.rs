//! π-adic arithmetic: the completion O = A_π with explicit precision.
//!
//! A scalar is exactly zero, zero-within-precision, or π^val·u with u a unit
//! modulo π. Precision is relative (digits of u that are trusted); `Exact`
//! means u is a genuine element of A and every digit is trusted.
//!
//! Output precision ledger (A = val + rel is the absolute precision, ∞ for
//! exact operands):
//!
//! | operation        | output                                              |
//! |------------------|-----------------------------------------------------|
//! | add / sub        | known mod π^min(A₁,A₂); val recomputed from residue |
//! | mul              | val₁+val₂, rel = min(rel₁, rel₂)                    |
//! | neg              | unchanged                                           |
//! | inv              | −val, rel preserved (Exact ↦ ctx default unless the |
//! |                  | unit is a constant, which inverts exactly)          |
//! | div_by_pi_power  | val shifted, lossless                               |
//! | frobenius (q^k)  | val·q^k, rel amplified to min(rel·q^k, max(rel, N)) |
//!
//! Exact values whose unit part outgrows a degree cap are demoted to the
//! context default precision; demotion only ever forgets digits beyond the
//! cap, never fabricates them.

use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{invalid, Error, Result};
use crate::field::FieldSpec;
use crate::poly::APoly;
use crate::rat::RatVal;

/// The fixed prime π of A with its derived constants. The tower period f is
/// 1 because the class group of 𝔽_q[T] is trivial, and η = π is the monic
/// generator of (π)^f.
#[derive(Clone)]
pub struct PrimeSpec {
    pi: APoly,
    d: usize,
    q_p: u64,
    f: u32,
    eta: APoly,
}

impl PrimeSpec {
    pub fn new(pi: APoly) -> Result<PrimeSpec> {
        let d = match pi.degree() {
            Some(d) if d >= 1 => d,
            _ => return invalid("pi must be non-constant"),
        };
        if !pi.is_monic() {
            return invalid("pi must be monic");
        }
        if !pi.is_irreducible()? {
            return invalid(format!("pi = {pi} is reducible"));
        }
        let q = pi.field().q() as u64;
        let q_p = q
            .checked_pow(d as u32)
            .ok_or_else(|| Error::Invalid("residue field of pi too large".into()))?;
        Ok(PrimeSpec { eta: pi.clone(), pi, d, q_p, f: 1 })
    }

    pub fn pi(&self) -> &APoly {
        &self.pi
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    /// Cardinality q_π = q^d of the residue field A/π.
    pub fn residue_card(&self) -> u64 {
        self.q_p
    }

    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn eta(&self) -> &APoly {
        &self.eta
    }
}

/// Shared context: field, prime, default working precision.
pub struct PadicCtx {
    field: Arc<FieldSpec>,
    prime: PrimeSpec,
    default_prec: u32,
    pi_is_var: bool,
    exact_degree_cap: usize,
    pi_pows: RwLock<Vec<APoly>>,
}

impl PadicCtx {
    pub fn new(field: Arc<FieldSpec>, pi: APoly, default_prec: u32) -> Result<Arc<PadicCtx>> {
        if !Arc::ptr_eq(&field, pi.field()) && *field != **pi.field() {
            return invalid("pi is not defined over the given field");
        }
        if default_prec == 0 {
            return invalid("working precision must be >= 1");
        }
        let prime = PrimeSpec::new(pi.clone())?;
        let pi_is_var = pi.coeffs() == [0, 1];
        let d = prime.degree();
        let exact_degree_cap = (4 * default_prec as usize + 64) * d;
        Ok(Arc::new(PadicCtx {
            field,
            prime,
            default_prec,
            pi_is_var,
            exact_degree_cap,
            pi_pows: RwLock::new(vec![]),
        }))
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn prime(&self) -> &PrimeSpec {
        &self.prime
    }

    pub fn default_prec(&self) -> u32 {
        self.default_prec
    }

    fn pi_pow(&self, k: usize) -> APoly {
        {
            let pows = self.pi_pows.read().unwrap();
            if let Some(p) = pows.get(k) {
                return p.clone();
            }
        }
        let mut pows = self.pi_pows.write().unwrap();
        if pows.is_empty() {
            pows.push(APoly::one(self.field.clone()));
        }
        while pows.len() <= k {
            let next = pows.last().unwrap().mul(self.prime.pi());
            pows.push(next);
        }
        pows[k].clone()
    }

    /// a^(q^k) reduced mod π^digits without materializing the full q^k-fold
    /// coefficient spread.
    fn frobenius_reduced(&self, a: &APoly, k: u32, digits: usize) -> APoly {
        let q = self.field.q() as u64;
        if self.pi_is_var {
            let stride = q.pow(k);
            let mut out = vec![0; digits.min((a.coeffs().len() as u64 * stride) as usize)];
            for (i, &c) in a.coeffs().iter().enumerate() {
                let idx = i as u64 * stride;
                if idx >= digits as u64 {
                    break;
                }
                out[idx as usize] = c;
            }
            return APoly::new(self.field.clone(), out);
        }
        let modulus = self.pi_pow(digits);
        let t = APoly::var(self.field.clone());
        let mut y = t.rem(&modulus).expect("pi power nonzero");
        for _ in 0..k {
            y = y.powmod(q, &modulus).expect("pi power nonzero");
        }
        let mut acc = APoly::zero(self.field.clone());
        for &c in a.coeffs().iter().rev() {
            acc = acc.mul(&y).add(&APoly::constant(self.field.clone(), c));
            acc = acc.rem(&modulus).expect("pi power nonzero");
        }
        acc
    }

    /// Canonical residue mod π^k (a polynomial of degree < k·d).
    pub fn reduce(&self, a: &APoly, k: usize) -> APoly {
        if k == 0 {
            return APoly::zero(self.field.clone());
        }
        if self.pi_is_var {
            let end = k.min(a.coeffs().len());
            return APoly::new(self.field.clone(), a.coeffs()[..end].to_vec());
        }
        if a.degree().map_or(true, |deg| deg < k * self.prime.d) {
            return a.clone();
        }
        a.rem(&self.pi_pow(k)).expect("pi power nonzero")
    }

    fn same(&self, other: &PadicCtx) -> bool {
        std::ptr::eq(self, other)
            || (*self.field == *other.field && self.prime.pi() == other.prime.pi())
    }
}

impl fmt::Debug for PadicCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PadicCtx(q={}, pi={}, N={})", self.field.q(), self.prime.pi(), self.default_prec)
    }
}

/// Relative precision of the unit part.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Prec {
    Exact,
    Rel(u32),
}

impl Prec {
    fn min_with(self, other: Prec) -> Prec {
        match (self, other) {
            (Prec::Exact, p) | (p, Prec::Exact) => p,
            (Prec::Rel(a), Prec::Rel(b)) => Prec::Rel(a.min(b)),
        }
    }
}

#[derive(Clone)]
enum Repr {
    /// The exact element 0.
    Zero,
    /// ≡ 0 mod π^abs; nothing known beyond.
    NearZero { abs: i64 },
    /// π^val · unit with π ∤ unit.
    Unit { val: i64, unit: APoly, prec: Prec },
}

/// Element of A_π (or its fraction field F_π when val < 0).
#[derive(Clone)]
pub struct PadicScalar {
    ctx: Arc<PadicCtx>,
    repr: Repr,
}

/// Outcome of a zero test at a requested depth.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ZeroCheck {
    /// Provably ≡ 0 mod π^k (exactly zero, or tracked that deep).
    Zero,
    /// Provably nonzero: the valuation is known and < k.
    NonZero,
    /// Not decidable at the tracked precision.
    Indeterminate,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl PadicScalar {
    pub fn zero(ctx: Arc<PadicCtx>) -> PadicScalar {
        PadicScalar { ctx, repr: Repr::Zero }
    }

    pub fn one(ctx: Arc<PadicCtx>) -> PadicScalar {
        let unit = APoly::one(ctx.field.clone());
        PadicScalar { ctx, repr: Repr::Unit { val: 0, unit, prec: Prec::Exact } }
    }

    /// Exact embedding of a ∈ A.
    pub fn from_apoly(ctx: Arc<PadicCtx>, a: &APoly) -> PadicScalar {
        if a.is_zero() {
            return PadicScalar::zero(ctx);
        }
        let (mult, unit) = a.pi_multiplicity(ctx.prime.pi()).expect("nonzero");
        PadicScalar { ctx, repr: Repr::Unit { val: mult as i64, unit, prec: Prec::Exact } }
    }

    pub fn from_int(ctx: Arc<PadicCtx>, n: i64) -> PadicScalar {
        let c = ctx.field.from_int(n);
        PadicScalar::from_apoly(ctx.clone(), &APoly::constant(ctx.field.clone(), c))
    }

    /// π^k as an exact scalar (k may be negative).
    pub fn pi_pow(ctx: Arc<PadicCtx>, k: i64) -> PadicScalar {
        let unit = APoly::one(ctx.field.clone());
        PadicScalar { ctx, repr: Repr::Unit { val: k, unit, prec: Prec::Exact } }
    }

    /// A value ≡ 0 mod π^abs with no further information.
    pub fn near_zero(ctx: Arc<PadicCtx>, abs: i64) -> PadicScalar {
        PadicScalar { ctx, repr: Repr::NearZero { abs } }
    }

    /// Truncate to absolute precision at most `k` (forgetting digits).
    /// Exact zero stays exact zero.
    pub fn truncate_abs(&self, k: i64) -> PadicScalar {
        match &self.repr {
            Repr::Zero => self.clone(),
            Repr::NearZero { abs } => PadicScalar::near_zero(self.ctx.clone(), (*abs).min(k)),
            Repr::Unit { val, unit, prec } => {
                if *val >= k {
                    return PadicScalar::near_zero(self.ctx.clone(), k);
                }
                let new_rel = (k - val) as u32;
                let rel_now = match prec {
                    Prec::Exact => new_rel,
                    Prec::Rel(r) => (*r).min(new_rel),
                };
                let reduced = self.ctx.reduce(unit, rel_now as usize);
                PadicScalar {
                    ctx: self.ctx.clone(),
                    repr: Repr::Unit { val: *val, unit: reduced, prec: Prec::Rel(rel_now) },
                }
            }
        }
    }

    /// Truncate to relative precision at most `rel` (forgetting digits).
    pub fn truncate_rel(&self, rel: u32) -> PadicScalar {
        match &self.repr {
            Repr::Zero | Repr::NearZero { .. } => self.clone(),
            Repr::Unit { val, unit, prec } => {
                let new_rel = match prec {
                    Prec::Exact => rel,
                    Prec::Rel(r) => (*r).min(rel),
                };
                if new_rel == 0 {
                    return PadicScalar::near_zero(self.ctx.clone(), *val);
                }
                let reduced = self.ctx.reduce(unit, new_rel as usize);
                if reduced.is_zero() {
                    // unit was ≡ 0 mod π^rel: cannot happen for a true unit
                    unreachable!("unit part divisible by pi");
                }
                PadicScalar {
                    ctx: self.ctx.clone(),
                    repr: Repr::Unit { val: *val, unit: reduced, prec: Prec::Rel(new_rel) },
                }
            }
        }
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        &self.ctx
    }

    pub fn is_exact_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Zero | Repr::Unit { prec: Prec::Exact, .. })
    }

    /// Absolute precision: the value is trusted mod π^(this); None = exact.
    pub fn abs_prec(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::NearZero { abs } => Some(*abs),
            Repr::Unit { prec: Prec::Exact, .. } => None,
            Repr::Unit { val, prec: Prec::Rel(r), .. } => Some(val + *r as i64),
        }
    }

    pub fn rel_prec(&self) -> Prec {
        match &self.repr {
            Repr::Zero | Repr::NearZero { .. } => Prec::Exact,
            Repr::Unit { prec, .. } => *prec,
        }
    }

    pub fn valuation(&self) -> Result<Valuation> {
        match &self.repr {
            Repr::Zero => Ok(Valuation::Infinite),
            Repr::NearZero { abs } => Err(Error::AmbiguousValuation { floor: *abs }),
            Repr::Unit { val, .. } => Ok(Valuation::Finite(*val)),
        }
    }

    /// Valuation as a rational (for mixing with tower valuations).
    pub fn valuation_rat(&self) -> Result<Option<RatVal>> {
        match self.valuation()? {
            Valuation::Infinite => Ok(None),
            Valuation::Finite(v) => Ok(Some(RatVal::int(v))),
        }
    }

    /// Known lower bound on the valuation (∞ encoded as None).
    pub fn val_lower_bound(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::NearZero { abs } => Some(*abs),
            Repr::Unit { val, .. } => Some(*val),
        }
    }

    pub fn zero_check(&self, k: i64) -> ZeroCheck {
        match &self.repr {
            Repr::Zero => ZeroCheck::Zero,
            Repr::NearZero { abs } => {
                if *abs >= k {
                    ZeroCheck::Zero
                } else {
                    ZeroCheck::Indeterminate
                }
            }
            Repr::Unit { val, .. } => {
                if *val >= k {
                    ZeroCheck::Zero
                } else {
                    ZeroCheck::NonZero
                }
            }
        }
    }

    /// Canonical residue of π^(−shift)·value mod π^(k−shift). Errors if the
    /// value is not known that deep or has a pole below the shift.
    fn residue_shifted(&self, k: i64, shift: i64) -> Result<APoly> {
        let width = k - shift;
        if width <= 0 {
            return Ok(APoly::zero(self.ctx.field.clone()));
        }
        if let Some(a) = self.abs_prec() {
            if a < k {
                return Err(Error::Precision(format!(
                    "residue requested mod pi^{k} but value only known mod pi^{a}"
                )));
            }
        }
        match &self.repr {
            Repr::Zero | Repr::NearZero { .. } => Ok(APoly::zero(self.ctx.field.clone())),
            Repr::Unit { val, unit, .. } => {
                let off = val - shift;
                if off < 0 {
                    return Err(Error::Precision(format!(
                        "value has a pole of order {} below the requested shift",
                        -off
                    )));
                }
                if off >= width {
                    return Ok(APoly::zero(self.ctx.field.clone()));
                }
                let r = self.ctx.reduce(unit, (width - off) as usize);
                Ok(r.mul(&self.ctx.pi_pow(off as usize)))
            }
        }
    }

    /// Canonical residue mod π^k for integral values.
    pub fn residue(&self, k: u32) -> Result<APoly> {
        self.residue_shifted(k as i64, 0)
    }

    fn classify(ctx: &Arc<PadicCtx>, r: APoly, shift: i64, abs: i64, exact: bool) -> PadicScalar {
        if r.is_zero() {
            if exact {
                return PadicScalar::zero(ctx.clone());
            }
            return PadicScalar::near_zero(ctx.clone(), abs);
        }
        let (mult, unit) = r.pi_multiplicity(ctx.prime.pi()).expect("nonzero");
        let val = shift + mult as i64;
        if exact {
            return PadicScalar { ctx: ctx.clone(), repr: Repr::Unit { val, unit, prec: Prec::Exact } }
                .cap_exact();
        }
        let rel = abs - val;
        if rel <= 0 {
            return PadicScalar::near_zero(ctx.clone(), abs);
        }
        let unit = ctx.reduce(&unit, rel as usize);
        PadicScalar { ctx: ctx.clone(), repr: Repr::Unit { val, unit, prec: Prec::Rel(rel as u32) } }
    }

    /// Demote oversized exact units to the default working precision.
    fn cap_exact(self) -> PadicScalar {
        if let Repr::Unit { val, unit, prec: Prec::Exact } = &self.repr {
            if unit.degree().unwrap_or(0) > self.ctx.exact_degree_cap {
                let rel = self.ctx.default_prec;
                let reduced = self.ctx.reduce(unit, rel as usize);
                return PadicScalar {
                    ctx: self.ctx.clone(),
                    repr: Repr::Unit { val: *val, unit: reduced, prec: Prec::Rel(rel) },
                };
            }
        }
        self
    }

    pub fn add(&self, other: &PadicScalar) -> PadicScalar {
        assert!(self.ctx.same(&other.ctx), "mixed padic contexts");
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) => return other.clone(),
            (_, Repr::Zero) => return self.clone(),
            _ => {}
        }
        let abs = match (self.abs_prec(), other.abs_prec()) {
            (None, None) => {
                // exact path
                let (va, ua) = self.val_unit();
                let (vb, ub) = other.val_unit();
                let shift = va.min(vb);
                let pa = ua.mul(&self.ctx.pi_pow((va - shift) as usize));
                let pb = ub.mul(&self.ctx.pi_pow((vb - shift) as usize));
                let sum = pa.add(&pb);
                return PadicScalar::classify(&self.ctx, sum, shift, 0, true);
            }
            (a, b) => a.into_iter().chain(b).min().unwrap(),
        };
        let shift = [self.val_lower_bound(), other.val_lower_bound()]
            .into_iter()
            .flatten()
            .min()
            .unwrap_or(0)
            .min(0)
            .min(abs);
        let ra = self.residue_shifted(abs, shift).expect("abs prec respected");
        let rb = other.residue_shifted(abs, shift).expect("abs prec respected");
        let width = (abs - shift) as usize;
        let sum = self.ctx.reduce(&ra.add(&rb), width);
        PadicScalar::classify(&self.ctx, sum, shift, abs, false)
    }

    fn val_unit(&self) -> (i64, &APoly) {
        match &self.repr {
            Repr::Unit { val, unit, .. } => (*val, unit),
            _ => panic!("val_unit on zero"),
        }
    }

    pub fn neg(&self) -> PadicScalar {
        let repr = match &self.repr {
            Repr::Zero => Repr::Zero,
            Repr::NearZero { abs } => Repr::NearZero { abs: *abs },
            Repr::Unit { val, unit, prec } => {
                Repr::Unit { val: *val, unit: unit.neg(), prec: *prec }
            }
        };
        PadicScalar { ctx: self.ctx.clone(), repr }
    }

    pub fn sub(&self, other: &PadicScalar) -> PadicScalar {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PadicScalar) -> PadicScalar {
        assert!(self.ctx.same(&other.ctx), "mixed padic contexts");
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => PadicScalar::zero(self.ctx.clone()),
            (Repr::NearZero { abs: a }, Repr::NearZero { abs: b }) => {
                PadicScalar::near_zero(self.ctx.clone(), a + b)
            }
            (Repr::NearZero { abs }, Repr::Unit { val, .. })
            | (Repr::Unit { val, .. }, Repr::NearZero { abs }) => {
                PadicScalar::near_zero(self.ctx.clone(), abs + val)
            }
            (
                Repr::Unit { val: va, unit: ua, prec: pa },
                Repr::Unit { val: vb, unit: ub, prec: pb },
            ) => {
                let val = va + vb;
                let prec = pa.min_with(*pb);
                let unit = match prec {
                    Prec::Exact => ua.mul(ub),
                    Prec::Rel(r) => self.ctx.reduce(&ua.mul(ub), r as usize),
                };
                PadicScalar { ctx: self.ctx.clone(), repr: Repr::Unit { val, unit, prec } }
                    .cap_exact()
            }
        }
    }

    pub fn mul_int(&self, n: i64) -> PadicScalar {
        self.mul(&PadicScalar::from_int(self.ctx.clone(), n))
    }

    /// Multiplicative inverse. Exhausted precision on a near-zero is an
    /// error distinct from division by exact zero.
    pub fn inv(&self) -> Result<PadicScalar> {
        match &self.repr {
            Repr::Zero => invalid("division by exact zero"),
            Repr::NearZero { abs } => Err(Error::Precision(format!(
                "inversion of a value indistinguishable from zero mod pi^{abs}"
            ))),
            Repr::Unit { val, unit, prec } => {
                if let Prec::Exact = prec {
                    if unit.degree() == Some(0) {
                        // constants invert exactly
                        let c = self.ctx.field.inv(unit.coeff(0))?;
                        let u = APoly::constant(self.ctx.field.clone(), c);
                        return Ok(PadicScalar {
                            ctx: self.ctx.clone(),
                            repr: Repr::Unit { val: -val, unit: u, prec: Prec::Exact },
                        });
                    }
                }
                let target = match prec {
                    Prec::Exact => self.ctx.default_prec,
                    Prec::Rel(r) => *r,
                };
                let inv_unit = self.invert_unit(unit, target)?;
                Ok(PadicScalar {
                    ctx: self.ctx.clone(),
                    repr: Repr::Unit { val: -val, unit: inv_unit, prec: Prec::Rel(target) },
                })
            }
        }
    }

    /// Hensel-lift the inverse of a unit mod π up to π^target.
    fn invert_unit(&self, unit: &APoly, target: u32) -> Result<APoly> {
        let ctx = &self.ctx;
        let pi = ctx.prime.pi();
        let u0 = unit.rem(pi)?;
        // extended Euclid over F_q[T]: s·u0 + t·π = 1
        let (g, s) = egcd_mod(&u0, pi)?;
        if g.degree() != Some(0) {
            return Err(Error::Internal("unit not invertible mod pi".into()));
        }
        let ginv = ctx.field.inv(g.coeff(0))?;
        let mut z = ctx.reduce(&s.scale(ginv), 1);
        let mut k = 1u32;
        let two = APoly::constant(ctx.field.clone(), ctx.field.from_int(2));
        while k < target {
            k = (2 * k).min(target);
            let uz = ctx.reduce(&unit.mul(&z), k as usize);
            let corr = two.sub(&uz);
            z = ctx.reduce(&z.mul(&corr), k as usize);
        }
        Ok(z)
    }

    pub fn div(&self, other: &PadicScalar) -> Result<PadicScalar> {
        Ok(self.mul(&other.inv()?))
    }

    /// Lossless multiplication by π^k (k may be negative).
    pub fn mul_pi_pow(&self, k: i64) -> PadicScalar {
        let repr = match &self.repr {
            Repr::Zero => Repr::Zero,
            Repr::NearZero { abs } => Repr::NearZero { abs: abs + k },
            Repr::Unit { val, unit, prec } => {
                Repr::Unit { val: val + k, unit: unit.clone(), prec: *prec }
            }
        };
        PadicScalar { ctx: self.ctx.clone(), repr }
    }

    /// Frobenius x ↦ x^(q^k); amplifies relative precision (capped). Exact
    /// units whose spread would outgrow the degree cap are computed at the
    /// capped precision instead.
    pub fn frobenius(&self, k: u32) -> PadicScalar {
        if k == 0 {
            return self.clone();
        }
        let q = self.ctx.field.q() as u64;
        let qk: i64 = match q.checked_pow(k).and_then(|v| i64::try_from(v).ok()) {
            Some(v) => v,
            None => panic!("frobenius exponent q^{k} out of range"),
        };
        let repr = match &self.repr {
            Repr::Zero => Repr::Zero,
            Repr::NearZero { abs } => Repr::NearZero { abs: abs.saturating_mul(qk) },
            Repr::Unit { val, unit, prec } => {
                let spread = unit.degree().unwrap_or(0) as u64 * qk as u64;
                match prec {
                    Prec::Exact if spread <= self.ctx.exact_degree_cap as u64 => {
                        Repr::Unit { val: val * qk, unit: unit.frobenius(k), prec: Prec::Exact }
                    }
                    _ => {
                        let r = match prec {
                            Prec::Exact => self.ctx.default_prec,
                            Prec::Rel(r) => *r,
                        };
                        let cap = r.max(self.ctx.default_prec);
                        let amp = (r as u64).saturating_mul(qk as u64).min(cap as u64) as u32;
                        let reduced = self.ctx.frobenius_reduced(unit, k, amp as usize);
                        Repr::Unit { val: val * qk, unit: reduced, prec: Prec::Rel(amp) }
                    }
                }
            }
        };
        PadicScalar { ctx: self.ctx.clone(), repr }
    }

    pub fn pow(&self, mut exp: u64) -> PadicScalar {
        let mut acc = PadicScalar::one(self.ctx.clone());
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

    /// Equality of residues mod π^k; errors if either side is too shallow.
    pub fn eq_mod(&self, other: &PadicScalar, k: u32) -> Result<bool> {
        let shift = [self.val_lower_bound(), other.val_lower_bound()]
            .into_iter()
            .flatten()
            .min()
            .unwrap_or(0)
            .min(0);
        let ra = self.residue_shifted(k as i64, shift)?;
        let rb = other.residue_shifted(k as i64, shift)?;
        Ok(ra == rb)
    }

    /// The digit in A/π at depth `idx` (value must be integral there).
    pub fn digit(&self, idx: i64) -> Result<APoly> {
        let r = self.residue_shifted(idx + 1, idx)?;
        Ok(r)
    }

    pub fn fmt_padic(&self) -> String {
        match &self.repr {
            Repr::Zero => "0".into(),
            Repr::NearZero { abs } => format!("O(pi^{abs})"),
            Repr::Unit { val, unit, prec } => {
                let p = match prec {
                    Prec::Exact => " (exact)".to_string(),
                    Prec::Rel(r) => format!(" + O(pi^{})", val + *r as i64),
                };
                if *val == 0 {
                    format!("{unit}{p}")
                } else {
                    format!("pi^{val}*({unit}){p}")
                }
            }
        }
    }
}

/// Extended gcd over 𝔽_q[T] returning (g, s) with s·a ≡ g mod b.
fn egcd_mod(a: &APoly, b: &APoly) -> Result<(APoly, APoly)> {
    let field = a.field().clone();
    let (mut r0, mut r1) = (a.clone(), b.clone());
    let (mut s0, mut s1) = (APoly::one(field.clone()), APoly::zero(field));
    while !r1.is_zero() {
        let (q, r) = r0.divmod(&r1)?;
        let s = s0.sub(&q.mul(&s1));
        r0 = r1;
        r1 = r;
        s0 = s1;
        s1 = s;
    }
    Ok((r0, s0))
}

impl fmt::Debug for PadicScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.fmt_padic())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx_t3(n: u32) -> Arc<PadicCtx> {
        let f = FieldSpec::new(3, 1, None).unwrap();
        let pi = APoly::var(f.clone());
        PadicCtx::new(f, pi, n).unwrap()
    }

    fn parse(ctx: &Arc<PadicCtx>, s: &str) -> PadicScalar {
        PadicScalar::from_apoly(ctx.clone(), &APoly::parse(ctx.field(), s, "T").unwrap())
    }

    #[test]
    fn geometric_series_inverse() {
        // inv(1−T^2) at N=6 is 1+T^2+T^4 mod T^6; verify by multiplying back
        let ctx = ctx_t3(6);
        let a = parse(&ctx, "1+2*T^2"); // 1 − T^2 over F_3
        let inv = a.inv().unwrap();
        assert_eq!(inv.residue(6).unwrap(), APoly::parse(ctx.field(), "1+T^2+T^4", "T").unwrap());
        let prod = a.mul(&inv);
        assert!(prod.eq_mod(&PadicScalar::one(ctx.clone()), 6).unwrap());
    }

    #[test]
    fn exact_cancellation() {
        let ctx = ctx_t3(8);
        let a = parse(&ctx, "T^2+2*T+1");
        let s = a.add(&a.neg());
        assert!(s.is_exact_zero());
        assert_eq!(s.valuation().unwrap(), Valuation::Infinite);
    }

    #[test]
    fn valuation_rules() {
        let ctx = ctx_t3(8);
        let u = parse(&ctx, "1+T");
        let w = parse(&ctx, "2+T^2");
        let a = u.mul_pi_pow(1);
        let b = w.mul_pi_pow(2);
        let prod = a.mul(&b);
        assert_eq!(prod.valuation().unwrap(), Valuation::Finite(3));
        // additivity and ultrametric bound
        let sum = a.add(&b);
        assert_eq!(sum.valuation().unwrap(), Valuation::Finite(1));
    }

    #[test]
    fn near_zero_is_flagged() {
        let ctx = ctx_t3(4);
        let a = parse(&ctx, "1+T").truncate_rel(4);
        let b = parse(&ctx, "1+T").neg().truncate_rel(4);
        let s = a.add(&b); // zero mod T^4 but not exactly zero as far as tracked
        match s.valuation() {
            Err(Error::AmbiguousValuation { floor }) => assert_eq!(floor, 4),
            other => panic!("expected ambiguous valuation, got {other:?}"),
        }
        assert!(matches!(s.zero_check(4), ZeroCheck::Zero));
        assert!(matches!(s.zero_check(5), ZeroCheck::Indeterminate));
        // inversion reports precision exhaustion, not division by zero
        assert!(matches!(s.inv(), Err(Error::Precision(_))));
    }

    #[test]
    fn mul_precision_is_min_relative() {
        let ctx = ctx_t3(10);
        let u = parse(&ctx, "1+T").truncate_rel(5).mul_pi_pow(1);
        let w = parse(&ctx, "2+T").truncate_rel(8).mul_pi_pow(2);
        let prod = u.mul(&w);
        assert_eq!(prod.valuation().unwrap(), Valuation::Finite(3));
        assert_eq!(prod.abs_prec(), Some(3 + 5));
    }

    #[test]
    fn division_by_pi_is_lossless() {
        let ctx = ctx_t3(6);
        let a = parse(&ctx, "T^2+T^3").truncate_rel(4);
        let b = a.mul_pi_pow(-2);
        assert_eq!(b.valuation().unwrap(), Valuation::Finite(0));
        assert_eq!(b.abs_prec(), Some(4));
    }

    #[test]
    fn frobenius_matches_pow() {
        let ctx = ctx_t3(12);
        let a = parse(&ctx, "1+2*T+T^3");
        let via_pow = a.pow(3);
        let via_frob = a.frobenius(1);
        assert!(via_pow.eq_mod(&via_frob, 10).unwrap());
    }

    #[test]
    fn general_pi_reduction() {
        // π = T^2+1 over F_3 (irreducible), d = 2
        let f = FieldSpec::new(3, 1, None).unwrap();
        let pi = APoly::parse(&f, "T^2+1", "T").unwrap();
        let ctx = PadicCtx::new(f.clone(), pi, 4).unwrap();
        assert_eq!(ctx.prime().residue_card(), 9);
        let a = PadicScalar::from_apoly(ctx.clone(), &APoly::parse(&f, "T^2+1", "T").unwrap());
        assert_eq!(a.valuation().unwrap(), Valuation::Finite(1));
        let b = a.inv().unwrap();
        assert!(a.mul(&b).eq_mod(&PadicScalar::one(ctx.clone()), 4).unwrap());
    }
}
