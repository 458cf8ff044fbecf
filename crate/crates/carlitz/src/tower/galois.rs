//! Galois action on the tower, orbit traces and norms, and recognition of
//! torsion points in canonical form.
//!
//! Gal(K_n/K) ≅ (A/π^n)^* with c acting through ω_n ↦ Φ_c(ω_n). The action
//! is O-linear, so each σ_c is cached as an e_n×e_n matrix over O.

use std::sync::{Arc, OnceLock};

use crate::error::{internal, invalid, Error, Result};
use crate::padic::{PadicCtx, PadicScalar, ZeroCheck};
use crate::poly::APoly;
use crate::rat::RatVal;

use super::{apply_skew, pi_power, TVal, Tower, TowerElem, TowerLevel};

pub(super) struct GaloisMatrix {
    /// cols[j] = coordinates of Φ_c(ω)^j.
    cols: Vec<Vec<PadicScalar>>,
    t_inv: OnceLock<TowerElem>,
}

/// σ_c for c ∈ (A/π^n)^*, acting by ω_n ↦ Φ_c(ω_n).
#[derive(Clone, Debug)]
pub struct GaloisElem {
    level: usize,
    c: APoly,
}

impl GaloisElem {
    pub fn new(tower: &Tower, level: usize, c: &APoly) -> Result<GaloisElem> {
        if level == 0 {
            return invalid("Galois elements live at levels >= 1");
        }
        let ctx = tower.ctx();
        let c = reduce_mod_pi_pow(ctx, c, level);
        if c.rem(ctx.prime().pi())?.is_zero() {
            return invalid(format!("residue {c} is not invertible mod pi"));
        }
        Ok(GaloisElem { level, c })
    }

    pub fn identity(tower: &Tower, level: usize) -> Result<GaloisElem> {
        GaloisElem::new(tower, level, &APoly::one(tower.ctx().field().clone()))
    }

    pub fn residue(&self) -> &APoly {
        &self.c
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Group law: multiplication of residues mod π^n.
    pub fn compose(&self, tower: &Tower, other: &GaloisElem) -> Result<GaloisElem> {
        if self.level != other.level {
            return invalid("composing Galois elements of different levels");
        }
        GaloisElem::new(tower, self.level, &self.c.mul(&other.c))
    }

    pub fn apply(&self, tower: &Tower, a: &TowerElem) -> Result<TowerElem> {
        if a.level_n() != self.level {
            return invalid("Galois element level does not match the argument");
        }
        tower.galois_apply(&self.c, a)
    }
}

pub(crate) fn reduce_mod_pi_pow(ctx: &Arc<PadicCtx>, c: &APoly, k: usize) -> APoly {
    ctx.reduce(c, k)
}

impl Tower {
    /// σ_c applied through the cached matrix of the O-linear action.
    pub fn galois_apply(&self, c: &APoly, a: &TowerElem) -> Result<TowerElem> {
        let level = a.level().clone();
        let mat = self.galois_matrix(&level, c)?;
        let e = level.degree();
        let mut out = vec![PadicScalar::zero(level.ctx().clone()); e];
        for (j, x) in a.coords().iter().enumerate() {
            if x.is_exact_zero() {
                continue;
            }
            for i in 0..e {
                if mat.cols[j][i].is_exact_zero() {
                    continue;
                }
                out[i] = out[i].add(&mat.cols[j][i].mul(x));
            }
        }
        let mut res = TowerElem { level: level.clone(), pole: 0, vec: out };
        if a.pole() > 0 {
            let t_inv = mat
                .t_inv
                .get_or_init(|| {
                    let t = TowerElem { level: level.clone(), pole: 0, vec: mat.cols[1].clone() };
                    t.inv().expect("sigma(omega) is a uniformizer")
                })
                .clone();
            res = res.mul(&t_inv.pow(a.pole() as u64));
        }
        Ok(res)
    }

    fn galois_matrix(&self, level: &Arc<TowerLevel>, c: &APoly) -> Result<Arc<GaloisMatrix>> {
        let key = reduce_mod_pi_pow(self.ctx(), c, level.n()).coeffs().to_vec();
        {
            let cache = level.galois_cache.read().unwrap();
            if let Some(hit) = cache.get(&key) {
                return Ok(hit.clone());
            }
        }
        let cred = APoly::new(self.ctx().field().clone(), key.clone());
        if cred.rem(self.ctx().prime().pi())?.is_zero() {
            return invalid(format!("residue {cred} is not invertible mod pi"));
        }
        let phi_c = self.carlitz().phi_of_poly(&cred);
        let omega = TowerElem::omega(level);
        let t = apply_skew(&phi_c, &omega);
        let e = level.degree();
        let mut cols = Vec::with_capacity(e);
        let mut cur = TowerElem::one(level);
        for _ in 0..e {
            cols.push(cur.coords().to_vec());
            cur = cur.mul(&t);
        }
        let mat = Arc::new(GaloisMatrix { cols, t_inv: OnceLock::new() });
        level.galois_cache.write().unwrap().insert(key, mat.clone());
        Ok(mat)
    }

    /// Coset representatives of ker((A/π^n)^* → (A/π^m)^*): the classes
    /// c ≡ 1 mod π^m (every unit when m = 0). Deterministic digit order.
    pub fn relative_galois_orbit(&self, n: usize, m: usize) -> Vec<APoly> {
        let ctx = self.ctx();
        let field = ctx.field().clone();
        let d = ctx.prime().degree();
        let q = field.q() as u64;
        if m == 0 {
            let mut out = Vec::new();
            for coeffs in enumerate_vectors(q, n * d) {
                let c = APoly::new(field.clone(), coeffs);
                if c.is_zero() {
                    continue;
                }
                if !c.rem(ctx.prime().pi()).unwrap().is_zero() {
                    out.push(reduce_mod_pi_pow(ctx, &c, n));
                }
            }
            return out;
        }
        let mut out = Vec::new();
        let one = APoly::one(field.clone());
        let pi_m = pi_power(ctx, m);
        for coeffs in enumerate_vectors(q, (n - m) * d) {
            let h = APoly::new(field.clone(), coeffs);
            let c = one.add(&pi_m.mul(&h));
            out.push(reduce_mod_pi_pow(ctx, &c, n));
        }
        out
    }

    /// Tr_m^n: Galois-orbit sum over c ≡ 1 mod π^m, re-expressed at level m.
    pub fn trace_to(&self, a: &TowerElem, m: usize) -> Result<TowerElem> {
        let n = a.level_n();
        if m >= n {
            return invalid(format!("trace_to requires m < n, got {m} >= {n}"));
        }
        let mut acc = TowerElem::zero(a.level());
        for c in self.relative_galois_orbit(n, m) {
            acc = acc.add(&self.galois_apply(&c, a)?);
        }
        self.project_to_level(&acc, m)
    }

    /// N_m^n: Galois-orbit product over c ≡ 1 mod π^m, re-expressed at
    /// level m.
    pub fn norm_to(&self, a: &TowerElem, m: usize) -> Result<TowerElem> {
        let n = a.level_n();
        if m >= n {
            return invalid(format!("norm_to requires m < n, got {m} >= {n}"));
        }
        let mut acc = TowerElem::one(a.level());
        for c in self.relative_galois_orbit(n, m) {
            acc = acc.mul(&self.galois_apply(&c, a)?);
        }
        self.project_to_level(&acc, m)
    }

    /// Verify that `a` lies in the image of K_m and rewrite it on the
    /// ω_m-basis, by π-digit lifting against the embedded basis (the basis
    /// reduces to distinct monomials mod π). A residue that cannot be
    /// matched is a hard error.
    pub fn project_to_level(&self, a: &TowerElem, m: usize) -> Result<TowerElem> {
        let n = a.level_n();
        if m == n {
            return Ok(a.clone());
        }
        if m > n {
            return invalid("project_to_level goes downward");
        }
        if a.pole() > 0 {
            return Err(Error::Precision(
                "projection of an element with an unresolved pole".into(),
            ));
        }
        let lev_m = self.level(m)?;
        let basis = self.embed_basis(m, n)?;
        let e_m = lev_m.degree();
        let stride = (self.ctx().prime().residue_card() as usize).pow((n - m) as u32);
        let depth: i64 = a
            .coords()
            .iter()
            .filter_map(|c| c.abs_prec())
            .min()
            .unwrap_or(self.ctx().default_prec() as i64);
        if depth <= 0 {
            return Err(Error::Precision("no digits available for projection".into()));
        }
        let field = self.ctx().field().clone();
        let mut digits: Vec<APoly> = vec![APoly::zero(field.clone()); e_m];
        let mut rho = a.clone();
        let mut pi_k = APoly::one(field.clone());
        let mut exact = false;
        for k in 0..depth {
            if rho.is_exact_zero() {
                exact = true;
                break;
            }
            for i in 0..e_m {
                let digit = rho.coords()[i * stride].digit(k)?;
                if digit.is_zero() {
                    continue;
                }
                digits[i] = digits[i].add(&digit.mul(&pi_k));
                let coeff = PadicScalar::from_apoly(self.ctx().clone(), &digit).mul_pi_pow(k);
                rho = rho.sub(&basis[i].scale(&coeff));
            }
            for (idx, coord) in rho.coords().iter().enumerate() {
                match coord.zero_check(k + 1) {
                    ZeroCheck::Zero => {}
                    ZeroCheck::NonZero => {
                        return internal(format!(
                            "level-{m} membership fails at coordinate {idx}, digit {k}"
                        ));
                    }
                    ZeroCheck::Indeterminate => {
                        return Err(Error::Precision(format!(
                            "projection ran out of digits at depth {k}"
                        )));
                    }
                }
            }
            pi_k = pi_k.mul(self.ctx().prime().pi());
        }
        if rho.is_exact_zero() {
            exact = true;
        }
        let coords: Vec<PadicScalar> = digits
            .into_iter()
            .map(|p| {
                let s = PadicScalar::from_apoly(self.ctx().clone(), &p);
                if exact {
                    s
                } else {
                    s.truncate_abs(depth)
                }
            })
            .collect();
        TowerElem::from_coords(&lev_m, 0, coords)
    }

    /// Invert c ↦ Φ_c(ω_n) digit by digit: the top residue is read by
    /// pushing through Φ_{π^(n−1−j)} and matching against Φ_γ(ω_1).
    pub fn recognize_torsion(&self, a: &TowerElem) -> Result<TorsionValue> {
        let n = a.level_n();
        if n == 0 {
            if a.is_zero_within_tracked() {
                return Ok(TorsionValue::zero(self.ctx().clone()));
            }
            return invalid("nonzero base-field element is not torsion");
        }
        let kill = self.carlitz().phi_of_poly(&pi_power(self.ctx(), n));
        if !apply_skew(&kill, a).is_zero_within_tracked() {
            return invalid("input is not pi^n-torsion within precision");
        }
        let field = self.ctx().field().clone();
        let omega1 = {
            let phi = self.carlitz().phi_of_poly(&pi_power(self.ctx(), n - 1));
            apply_skew(&phi, &self.omega(n)?)
        };
        let candidates: Vec<(APoly, TowerElem)> = {
            let mut v = Vec::new();
            let q = field.q() as u64;
            let d = self.ctx().prime().degree();
            for coeffs in enumerate_vectors(q, d) {
                let gamma = APoly::new(field.clone(), coeffs);
                let val = apply_skew(&self.carlitz().phi_of_poly(&gamma), &omega1);
                v.push((gamma, val));
            }
            v
        };
        let mut cur = a.clone();
        let mut c_acc = APoly::zero(field.clone());
        let mut pi_j = APoly::one(field.clone());
        let omega_n = self.omega(n)?;
        for j in 0..n {
            let push = self.carlitz().phi_of_poly(&pi_power(self.ctx(), n - 1 - j));
            let probe = apply_skew(&push, &cur);
            let mut matched = None;
            for (gamma, val) in &candidates {
                if probe.eq_within(val) {
                    matched = Some(gamma.clone());
                    break;
                }
            }
            let gamma = matched.ok_or_else(|| {
                Error::Invalid(format!("no torsion digit matches at depth {j}"))
            })?;
            if !gamma.is_zero() {
                let corr = self.carlitz().phi_of_poly(&gamma.mul(&pi_j));
                cur = cur.sub(&apply_skew(&corr, &omega_n));
                c_acc = c_acc.add(&gamma.mul(&pi_j));
            }
            pi_j = pi_j.mul(self.ctx().prime().pi());
        }
        if !cur.is_zero_within_tracked() {
            return invalid("torsion digits leave a nonzero remainder");
        }
        Ok(TorsionValue::new(self.ctx().clone(), n, &c_acc))
    }
}

fn enumerate_vectors(q: u64, len: usize) -> impl Iterator<Item = Vec<u16>> {
    let total = q.pow(len as u32);
    (0..total).map(move |mut code| {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push((code % q) as u16);
            code /= q;
        }
        v
    })
}

/// An element of Φ[π^∞] in canonical form: Φ_c(ω_level) with c a unit
/// residue mod π^level (or the zero value at level 0).
#[derive(Clone)]
pub struct TorsionValue {
    ctx: Arc<PadicCtx>,
    level: usize,
    c: APoly,
}

impl TorsionValue {
    /// Canonicalize: strip π factors out of c, lowering the level, so that
    /// Φ_{π·c′}(ω_ν) = Φ_{c′}(ω_{ν−1}) is applied until c is a unit.
    pub fn new(ctx: Arc<PadicCtx>, level: usize, c: &APoly) -> TorsionValue {
        let mut level = level;
        let mut c = ctx.reduce(c, level);
        while level > 0 {
            if c.is_zero() {
                return TorsionValue { ctx, level: 0, c };
            }
            let (q, r) = c.divmod(ctx.prime().pi()).expect("pi nonzero");
            if r.is_zero() {
                level -= 1;
                c = ctx.reduce(&q, level);
            } else {
                break;
            }
        }
        if level == 0 {
            c = APoly::zero(ctx.field().clone());
        }
        TorsionValue { ctx, level, c }
    }

    pub fn zero(ctx: Arc<PadicCtx>) -> TorsionValue {
        let c = APoly::zero(ctx.field().clone());
        TorsionValue { ctx, level: 0, c }
    }

    pub fn is_zero(&self) -> bool {
        self.level == 0
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn residue(&self) -> &APoly {
        &self.c
    }

    /// Φ-module addition: align at the larger level and add residues.
    pub fn add(&self, other: &TorsionValue) -> TorsionValue {
        let level = self.level.max(other.level);
        let lift = |t: &TorsionValue| -> APoly {
            if t.level == 0 {
                return APoly::zero(t.ctx.field().clone());
            }
            t.c.mul(&pi_power(&t.ctx, level - t.level))
        };
        let sum = lift(self).add(&lift(other));
        TorsionValue::new(self.ctx.clone(), level, &sum)
    }

    /// Action of a ∈ A: Φ_a applied to the value.
    pub fn act(&self, a: &APoly) -> TorsionValue {
        TorsionValue::new(self.ctx.clone(), self.level, &self.c.mul(a))
    }

    pub fn act_int(&self, k: i64) -> TorsionValue {
        let c = APoly::constant(self.ctx.field().clone(), self.ctx.field().from_int(k));
        self.act(&c)
    }

    pub fn neg(&self) -> TorsionValue {
        TorsionValue { ctx: self.ctx.clone(), level: self.level, c: self.c.neg() }
    }

    /// Materialize Φ_c(ω_level) as a tower element.
    pub fn materialize(&self, tower: &Tower) -> Result<TowerElem> {
        if self.level == 0 {
            return Ok(TowerElem::zero(&tower.level(1)?));
        }
        let omega = tower.omega(self.level)?;
        let phi = tower.carlitz().phi_of_poly(&self.c);
        Ok(apply_skew(&phi, &omega))
    }
}

impl PartialEq for TorsionValue {
    fn eq(&self, other: &Self) -> bool {
        self.level == other.level && self.c == other.c
    }
}

impl Eq for TorsionValue {}

impl std::fmt::Debug for TorsionValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_zero() {
            write!(f, "0")
        } else {
            write!(f, "Phi_[{}](omega_{})", self.c, self.level)
        }
    }
}

/// Trace lower bound from the different: v(Tr_n(x)) ≥ ⌊v(x) + nf − 1/(q_π−1)⌋.
pub fn trace_floor(ctx: &Arc<PadicCtx>, n: usize, vx: RatVal) -> i64 {
    let q_p = ctx.prime().residue_card() as i64;
    let f = ctx.prime().f() as i64;
    vx.add(&RatVal::int(n as i64 * f)).sub(&RatVal::new(1, q_p - 1)).floor()
}

/// Relative trace bound: v(Tr_m^n(x)) > v(x) + (n−m)f − v(ω_m).
pub fn relative_trace_bound(ctx: &Arc<PadicCtx>, n: usize, m: usize, vx: RatVal, v_omega_m: RatVal) -> RatVal {
    let f = ctx.prime().f() as i64;
    vx.add(&RatVal::int((n - m) as i64 * f)).sub(&v_omega_m)
}


impl TowerElem {
    /// Valuation that must be finite, as a convenience for bound checks.
    pub fn valuation_finite(&self) -> Result<RatVal> {
        match self.valuation()? {
            TVal::Finite(v) => Ok(v),
            TVal::Infinite => invalid("expected a nonzero element"),
        }
    }
}
