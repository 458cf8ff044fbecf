//! Both sides of the explicit reciprocity law.
//!
//! The analytic pairing [a,u]_n = Tr_n(η^(−n)·λ(a_n)·dlog Col_u(ω_n))·ω_n
//! is computed from the module logarithm and the Coleman series. The
//! Kummer pairing (a,u)_n is computed by a norm-symbol oracle: on the
//! (a, ω) axis it needs nothing but Galois norms and the reciprocity
//! action (w, K_∞/K)(ω) = Φ_{w^(−1)}(ω); general second arguments are
//! first reduced to that axis by a′ = a_n·ω_n·dlog Col_u(ω_n).
//!
//! The oracle works at an admissible level m where the auxiliary pairing
//! (a_m, 1+b_m)_m provably vanishes: writing the pairing through the
//! (c, 1−b) ↦ (bc/(1−b), b^(−1)) identity, vanishing follows once
//! 2·v(a_m) − v(ω_m) clears the continuity threshold m + 1/(q_π−1).

use std::sync::Arc;

use serde::Serialize;

use crate::coleman::{coleman_series, dlog, NormSystem};
use crate::error::{internal, invalid, Error, Result};
use crate::lambda::LambdaSeries;
use crate::padic::{PadicScalar, ZeroCheck};
use crate::rat::RatVal;
use crate::series::TruncLaurent;
use crate::tower::{apply_skew, pi_power, TVal, TorsionValue, Tower, TowerElem};

/// Element of lim→ K_n: a base element a₀ at level N₀ with v(a₀) > 0 and
/// the lazily materialized pushes a_n = Φ_η^(n−N₀)(a₀).
#[derive(Clone)]
pub struct DirectLimitElem {
    base_level: usize,
    base: TowerElem,
    /// c(a) with v(a_n) ≥ n − c(a) for all n past the base (None when the
    /// limit element is zero).
    growth_constant: Option<RatVal>,
    torsion_zero: bool,
}

impl DirectLimitElem {
    pub fn new(tower: &Tower, a0: TowerElem) -> Result<DirectLimitElem> {
        let n0 = a0.level_n();
        if n0 == 0 {
            return invalid("direct-limit elements start at level >= 1");
        }
        if a0.is_zero_within_tracked() && !a0.is_exact_zero() {
            return Err(Error::Precision(
                "base element is zero within precision; cannot classify".into(),
            ));
        }
        if a0.is_exact_zero() {
            return Ok(DirectLimitElem {
                base_level: n0,
                base: a0,
                growth_constant: None,
                torsion_zero: true,
            });
        }
        let v0 = a0.valuation_finite()?;
        if v0 <= RatVal::zero() {
            return invalid(format!("base element must lie in the maximal ideal, v = {v0}"));
        }
        // torsion base elements die in the limit
        let kill = tower.carlitz().phi_of_poly(&pi_power(tower.ctx(), n0));
        if apply_skew(&kill, &a0).is_zero_within_tracked() {
            return Ok(DirectLimitElem {
                base_level: n0,
                base: a0,
                growth_constant: None,
                torsion_zero: true,
            });
        }
        // push until the valuation growth is linear: v(Φ_η(x)) = 1 + v(x)
        // strictly once v(x) > 1/(q_π−1)
        let q_p = tower.ctx().prime().residue_card() as i64;
        let threshold = RatVal::new(1, q_p - 1);
        let phi_eta = tower.carlitz().phi_of_poly(&pi_power(tower.ctx(), 1));
        let mut cur = a0.clone();
        let mut m = n0 as i64;
        for _ in 0..64 {
            let v = cur.valuation_finite()?;
            if v > threshold {
                let c = RatVal::int(m).sub(&v);
                return Ok(DirectLimitElem {
                    base_level: n0,
                    base: a0,
                    growth_constant: Some(c),
                    torsion_zero: false,
                });
            }
            cur = apply_skew(&phi_eta, &cur);
            m += 1;
        }
        internal("valuation growth did not stabilize in 64 pushes")
    }

    pub fn base_level(&self) -> usize {
        self.base_level
    }

    pub fn base(&self) -> &TowerElem {
        &self.base
    }

    pub fn is_zero_limit(&self) -> bool {
        self.torsion_zero
    }

    /// c(a) such that v(a_n) ≥ n·f − c(a).
    pub fn growth_constant(&self) -> Option<RatVal> {
        self.growth_constant
    }

    /// a_m = Φ_η^(m−N₀)(a₀) as an element of K_m.
    pub fn at_level(&self, tower: &Tower, m: usize) -> Result<TowerElem> {
        if m < self.base_level {
            return invalid(format!(
                "the sequence starts at level {}, requested {m}",
                self.base_level
            ));
        }
        let phi = tower.carlitz().phi_of_poly(&pi_power(tower.ctx(), m - self.base_level));
        let pushed = apply_skew(&phi, &self.base);
        tower.embed(&pushed, m)
    }
}

/// A canonical torsion value together with the level it was computed at.
#[derive(Clone, PartialEq, Eq)]
pub struct PairingValue {
    value: TorsionValue,
    computed_level: usize,
}

impl PairingValue {
    pub fn new(value: TorsionValue, computed_level: usize) -> PairingValue {
        PairingValue { value, computed_level }
    }

    pub fn zero(tower: &Tower, computed_level: usize) -> PairingValue {
        PairingValue { value: TorsionValue::zero(tower.ctx().clone()), computed_level }
    }

    pub fn value(&self) -> &TorsionValue {
        &self.value
    }

    pub fn computed_level(&self) -> usize {
        self.computed_level
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn add(&self, other: &PairingValue) -> PairingValue {
        PairingValue {
            value: self.value.add(&other.value),
            computed_level: self.computed_level.max(other.computed_level),
        }
    }
}

impl std::fmt::Debug for PairingValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} (computed at level {})", self.value, self.computed_level)
    }
}

/// dlog u/dω_n from the canonical polynomial representative: for
/// u = ω^i·U this is i/ω + U′(ω)/U(ω).
pub fn dlog_from_elem(tower: &Tower, u: &TowerElem) -> Result<TowerElem> {
    let n = u.level_n();
    if n == 0 {
        return invalid("dlog/dω needs a tower level >= 1");
    }
    let level = tower.level(n)?;
    let e = level.degree() as i64;
    let v = u.valuation_finite()?;
    let i = v.mul_int(e);
    if !i.is_integer() {
        return invalid(format!("u has valuation {v}: not ω^i times a unit"));
    }
    let i = i.num();
    let unit = if i >= 0 {
        u.mul_omega_inv_pow(i as usize)
    } else {
        u.mul_omega_pow((-i) as usize)
    };
    if unit.pole() > 0 {
        return Err(Error::Precision("unit part kept an unresolved pole".into()));
    }
    // U′ from the canonical coordinates
    let mut dcoords = Vec::with_capacity(level.degree());
    for (k, c) in unit.coords().iter().enumerate().skip(1) {
        dcoords.push(c.mul_int(k as i64));
    }
    let deriv = TowerElem::from_coords(&level, 0, dcoords)?;
    let omega = tower.omega(n)?;
    let mut arg = deriv.mul(&unit.inv()?);
    if i != 0 {
        let pole_term = omega.inv()?.scale_int(i);
        arg = arg.add(&pole_term);
    }
    Ok(arg)
}

/// Shared trace step: Tr_n(η^(−n)·num·dlogarg)·ω_n as a canonical torsion
/// value. `num` is λ(a_n) on the analytic side and a_m itself in the
/// weak finite-level recipe.
fn trace_pairing_value(
    tower: &Tower,
    num: &TowerElem,
    dlogarg: &TowerElem,
    n: usize,
) -> Result<PairingValue> {
    let t = num.mul(dlogarg);
    let s = tower.trace_to(&t, 0)?.as_scalar()?;
    let shifted = s.mul_pi_pow(-(n as i64));
    // the trace must land in η^n·A_π for the value to be torsion
    match shifted.val_lower_bound() {
        None => return Ok(PairingValue::zero(tower, n)),
        Some(v) if v >= 0 => {}
        Some(v) => {
            return internal(format!(
                "trace has valuation {} < {n}: outside η^n·A_π",
                v + n as i64
            ));
        }
    }
    if let Some(abs) = shifted.abs_prec() {
        if abs < n as i64 {
            return Err(Error::Precision(format!(
                "trace certified mod pi^{} only, need pi^{n} above η^n",
                abs + n as i64
            )));
        }
    }
    let c = shifted.residue(n as u32)?;
    Ok(PairingValue::new(TorsionValue::new(tower.ctx().clone(), n, &c), n))
}

/// The level-n analytic pairing [a,u]_n for v(a) ≥ 2(q−1)^(−1), with the
/// logarithmic differential read from u's canonical representative.
pub fn analytic_pair_level(
    tower: &Tower,
    lambda: &LambdaSeries,
    a: &TowerElem,
    u: &TowerElem,
) -> Result<PairingValue> {
    let n = a.level_n();
    if u.level_n() != n {
        return invalid("arguments live at different levels; embed first");
    }
    if n == 0 {
        return invalid("the level pairing needs n >= 1");
    }
    if a.is_zero_within_tracked() {
        return Ok(PairingValue::zero(tower, n));
    }
    let q = tower.ctx().field().q() as i64;
    let va = a.valuation_finite()?;
    if va < RatVal::new(2, q - 1) {
        return invalid(format!(
            "analytic level pairing needs v(a) ≥ 2/(q−1) = {}, got {va}",
            RatVal::new(2, q - 1)
        ));
    }
    let dlogarg = dlog_from_elem(tower, u)?;
    let la = lambda.eval(a, 2 * n as i64 + 4)?;
    trace_pairing_value(tower, &la, &dlogarg, n)
}

/// Options shared by the limit pairings.
#[derive(Clone, Copy, Debug)]
pub struct PairingOpts {
    /// Largest tower level the computation may touch.
    pub max_level: usize,
    /// Check stability by recomputing one level higher.
    pub check_stability: bool,
}

impl Default for PairingOpts {
    fn default() -> Self {
        PairingOpts { max_level: 8, check_stability: true }
    }
}

fn admissible_analytic_level(
    tower: &Tower,
    a: &DirectLimitElem,
    opts: &PairingOpts,
) -> Result<usize> {
    let q = tower.ctx().field().q() as i64;
    let want = RatVal::new(2, q - 1);
    for n in a.base_level()..=opts.max_level {
        let an = a.at_level(tower, n)?;
        if an.valuation_finite()? >= want {
            return Ok(n);
        }
    }
    Err(Error::Invalid(format!(
        "no level ≤ {} reaches v(a_n) ≥ {want}",
        opts.max_level
    )))
}

/// The limit analytic pairing [a,u] with a level-stability check.
pub fn analytic_pair(
    tower: &Tower,
    lambda: &LambdaSeries,
    a: &DirectLimitElem,
    u: &NormSystem,
    opts: &PairingOpts,
) -> Result<PairingValue> {
    if a.is_zero_limit() {
        return Ok(PairingValue::zero(tower, a.base_level()));
    }
    let (col, _cert) = coleman_series(tower, u)?;
    let n = admissible_analytic_level(tower, a, opts)?;
    let first = analytic_pair_at(tower, lambda, a, &col, n)?;
    if !opts.check_stability {
        return Ok(first);
    }
    let mut cur = first;
    for level in (n + 1)..=opts.max_level {
        let next = analytic_pair_at(tower, lambda, a, &col, level)?;
        if next.value() == cur.value() {
            return Ok(cur);
        }
        cur = next;
    }
    Err(Error::Precision(format!(
        "analytic value did not stabilize by level {}; raise max_level",
        opts.max_level
    )))
}

fn analytic_pair_at(
    tower: &Tower,
    lambda: &LambdaSeries,
    a: &DirectLimitElem,
    col: &TruncLaurent,
    n: usize,
) -> Result<PairingValue> {
    let an = a.at_level(tower, n)?;
    let omega = tower.omega(n)?;
    let e_n = tower.level(n)?.degree();
    // the trace argument must be certified past π^(2n) to pin the residue
    let digits = 2 * n as i64 + 6;
    let window = (e_n * digits as usize + 2).min(col.window());
    let dlog_series = dlog(col, window)?;
    let (dval, _) = dlog_series.eval_at(&omega, 2)?;
    let la = lambda.eval(&an, 2 * n as i64 + 4)?;
    trace_pairing_value(tower, &la, &dval, n)
}

/// Diagnostics from a Kummer-oracle evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct OracleInfo {
    pub level_m: usize,
    pub step4_congruence: bool,
    pub cont_threshold_zero: bool,
}

fn admissible_oracle_level(
    tower: &Tower,
    a: &DirectLimitElem,
    opts: &PairingOpts,
) -> Result<usize> {
    let ctx = tower.ctx();
    let q = ctx.field().q() as i64;
    let q_p = ctx.prime().residue_card() as i64;
    for m in a.base_level()..=opts.max_level {
        let am = a.at_level(tower, m)?;
        let v = am.valuation_finite()?;
        let v_omega = tower.level(m)?.omega_valuation();
        // (i) the level-pairing domain
        let c1 = v >= RatVal::new(2, q - 1);
        // (ii) (a_m, 1+b_m)_m = 0: v(a_m·b_m) beyond the continuity bound
        let c2 = v.mul_int(2).sub(&v_omega)
            > RatVal::int(m as i64).add(&RatVal::new(1, q_p - 1));
        // (iii) λ-linearization threshold of the finite-level recipe
        let c3 = v.mul_int(q)
            >= RatVal::int(m as i64 + 1).add(&RatVal::new(1, q_p - 1)).add(&v_omega);
        if c1 && c2 && c3 {
            return Ok(m);
        }
    }
    Err(Error::Invalid(format!(
        "no admissible oracle level ≤ {} (growth constant {:?})",
        opts.max_level,
        a.growth_constant()
    )))
}

/// The norm-symbol oracle for (a, ω)_n: with b_m = a_m/ω_m and
/// w = N_m(1+b_m), the value is Φ_{1−w^(−1)}(ω_2m), read mod π^(2m).
/// The congruence 1−w^(−1) ≡ Tr_m(b_m) mod π^(2m) is checked on every
/// invocation; failure escalates the level once before erroring.
pub fn kummer_oracle_omega(
    tower: &Tower,
    a: &DirectLimitElem,
    opts: &PairingOpts,
) -> Result<(PairingValue, OracleInfo)> {
    if a.is_zero_limit() {
        return Ok((
            PairingValue::zero(tower, a.base_level()),
            OracleInfo { level_m: a.base_level(), step4_congruence: true, cont_threshold_zero: false },
        ));
    }
    let mut m = admissible_oracle_level(tower, a, opts)?;
    loop {
        match kummer_oracle_at(tower, a, m) {
            Ok(out) => return Ok(out),
            Err(Error::Internal(msg)) if m + 1 <= opts.max_level => {
                // congruence cross-check failed at a marginal level
                let _ = msg;
                m += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn kummer_oracle_at(
    tower: &Tower,
    a: &DirectLimitElem,
    m: usize,
) -> Result<(PairingValue, OracleInfo)> {
    let ctx = tower.ctx();
    let q_p = ctx.prime().residue_card() as i64;
    let am = a.at_level(tower, m)?;
    let v_am = am.valuation_finite()?;
    let b_m = am.mul_omega_inv_pow(1);
    let one = TowerElem::one(&tower.level(m)?);
    let one_plus = one.add(&b_m);
    let w = tower.norm_to(&one_plus, 0)?.as_scalar()?;
    let c_k = PadicScalar::one(ctx.clone()).sub(&w.inv()?);
    let digits = 2 * m as u32;
    if let Some(abs) = c_k.abs_prec() {
        if abs < digits as i64 {
            return Err(Error::Precision(format!(
                "oracle needs 1−w^(−1) mod pi^{digits}, certified to pi^{abs}; raise the \
                 working precision"
            )));
        }
    }
    // step 4: N_m(1+b_m)^(−1) ≡ 1 − Tr_m(b_m) mod π^(2m)
    let tr = tower.trace_to(&b_m, 0)?.as_scalar()?;
    let step4 = c_k.eq_mod(&tr, digits)?;
    if !step4 {
        return internal(format!("step-4 congruence fails at level {m}"));
    }
    let residue = c_k.residue(digits)?;
    let value = TorsionValue::new(ctx.clone(), 2 * m, &residue);
    let cont_zero =
        v_am > RatVal::int(m as i64).add(&RatVal::new(1, q_p - 1));
    if cont_zero && !value.is_zero() {
        return internal(format!(
            "continuity threshold demands a zero value at level {m}"
        ));
    }
    Ok((
        PairingValue::new(value, 2 * m),
        OracleInfo { level_m: m, step4_congruence: step4, cont_threshold_zero: cont_zero },
    ))
}

/// The kumdlog reduction: (a,u) = (a_n·ω_n·dlog Col_u(ω_n), ω)_n. Returns
/// the transformed direct-limit element, based at level n.
pub fn kummer_reduce(
    tower: &Tower,
    a: &DirectLimitElem,
    u: &NormSystem,
    opts: &PairingOpts,
) -> Result<DirectLimitElem> {
    if a.is_zero_limit() {
        return Ok(a.clone());
    }
    let (col, _) = coleman_series(tower, u)?;
    let q_p = tower.ctx().prime().residue_card() as i64;
    let mut chosen = None;
    for n in a.base_level()..=opts.max_level {
        let v = a.at_level(tower, n)?.valuation_finite()?;
        let bound = RatVal::new(2, q_p - 1).sub(&tower.level(n)?.omega_valuation());
        if v > bound {
            chosen = Some(n);
            break;
        }
    }
    let n = chosen.ok_or_else(|| {
        Error::Invalid(format!("no level ≤ {} meets the kumdlog bound", opts.max_level))
    })?;
    kummer_reduce_at(tower, a, &col, n)
}

fn kummer_reduce_at(
    tower: &Tower,
    a: &DirectLimitElem,
    col: &TruncLaurent,
    n: usize,
) -> Result<DirectLimitElem> {
    let an = a.at_level(tower, n)?;
    let omega = tower.omega(n)?;
    let e_n = tower.level(n)?.degree();
    // the transformed element feeds the oracle, which reads residues mod
    // π^(2m) downstream; carry a generous certificate through the dlog
    let digits = 2 * (n as i64 + 6);
    let window = (e_n * digits as usize + 2).min(col.window());
    let dlog_series = dlog(col, window)?;
    let (dval, _) = dlog_series.eval_at(&omega, 1)?;
    let transformed = an.mul(&omega).mul(&dval);
    DirectLimitElem::new(tower, transformed)
}

/// The full Kummer pairing: reduce to the ω-axis, then apply the oracle.
pub fn kummer_pair(
    tower: &Tower,
    a: &DirectLimitElem,
    u: &NormSystem,
    opts: &PairingOpts,
) -> Result<(PairingValue, OracleInfo)> {
    let reduced = kummer_reduce(tower, a, u, opts)?;
    let (first, info) = kummer_oracle_omega(tower, &reduced, opts)?;
    if !opts.check_stability || a.is_zero_limit() {
        return Ok((first, info));
    }
    // reduction-level independence: redo the reduction one level higher
    let (col, _) = coleman_series(tower, u)?;
    let n2 = reduced.base_level() + 1;
    if n2 <= opts.max_level {
        let reduced2 = kummer_reduce_at(tower, a, &col, n2)?;
        let (second, _) = kummer_oracle_omega(tower, &reduced2, opts)?;
        if second.value() != first.value() {
            return Err(Error::Precision(format!(
                "Kummer value changed between reduction levels {} and {}",
                reduced.base_level(),
                n2
            )));
        }
    }
    Ok((first, info))
}

/// §-weak finite-level recipe: (a_n, u_n)_n = Tr_m(a_m·η^(−m)·dlog u_m/dω_m)·ω_m,
/// valid once v(a_m) > 2/(q−1) and q·v(a_m) ≥ m + 1 + 1/(q_π−1) + v(ω_m).
/// The caller supplies the norm preimage u_m of u_n (checked).
pub fn kummer_finite(
    tower: &Tower,
    a_n: &TowerElem,
    u_n: &TowerElem,
    u_m: &TowerElem,
    m: usize,
) -> Result<PairingValue> {
    let n = a_n.level_n();
    if u_n.level_n() != n || u_m.level_n() != m || m < n {
        return invalid("levels must satisfy level(a_n) = level(u_n) = n ≤ m = level(u_m)");
    }
    if m > n {
        let down = tower.norm_to(u_m, n)?;
        if !down.eq_within(u_n) {
            return invalid("u_m is not a norm preimage of u_n");
        }
    }
    if a_n.is_zero_within_tracked() {
        return Ok(PairingValue::zero(tower, m));
    }
    let phi = tower.carlitz().phi_of_poly(&pi_power(tower.ctx(), m - n));
    let a_m = tower.embed(&apply_skew(&phi, a_n), m)?;
    let ctx = tower.ctx();
    let q = ctx.field().q() as i64;
    let q_p = ctx.prime().residue_card() as i64;
    let v = a_m.valuation_finite()?;
    let v_omega = tower.level(m)?.omega_valuation();
    if !(v > RatVal::new(2, q - 1)) {
        return invalid(format!(
            "kummer_finite needs v(a_m) > 2/(q−1); v = {v} at level {m}. Push further: \
             the valuation gains 1 per level"
        ));
    }
    let lin = v.mul_int(q) >= RatVal::int(m as i64 + 1).add(&RatVal::new(1, q_p - 1)).add(&v_omega);
    if !lin {
        return invalid(format!(
            "kummer_finite linearization needs q·v(a_m) ≥ m + 1 + 1/(q_π−1) + v(ω_m) \
             at level {m}; v(a_m) = {v}"
        ));
    }
    let dlogarg = dlog_from_elem(tower, u_m)?;
    trace_pairing_value(tower, &a_m, &dlogarg, m)
}

/// One reciprocity verification: both pairings, their diagnostics, and a
/// verdict. Disagreement is an outcome, not an error.
#[derive(Clone, Debug, Serialize)]
pub struct ReciprocityReport {
    pub analytic_level: usize,
    pub analytic_value_level: usize,
    pub analytic_residue: String,
    pub kummer_level: usize,
    pub kummer_value_level: usize,
    pub kummer_residue: String,
    pub checks: ReciprocityChecks,
    pub verdict: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReciprocityChecks {
    pub step4: bool,
    pub cont_threshold: bool,
    pub stability: bool,
}

pub fn verify_reciprocity(
    tower: &Tower,
    lambda: &LambdaSeries,
    a: &DirectLimitElem,
    u: &NormSystem,
    opts: &PairingOpts,
) -> ReciprocityReport {
    let run = || -> Result<ReciprocityReport> {
        let analytic = analytic_pair(tower, lambda, a, u, opts)?;
        let (kummer, info) = kummer_pair(tower, a, u, opts)?;
        let verdict = analytic.value() == kummer.value();
        Ok(ReciprocityReport {
            analytic_level: analytic.computed_level(),
            analytic_value_level: analytic.value().level(),
            analytic_residue: analytic.value().residue().to_text("T"),
            kummer_level: info.level_m,
            kummer_value_level: kummer.value().level(),
            kummer_residue: kummer.value().residue().to_text("T"),
            checks: ReciprocityChecks {
                step4: info.step4_congruence,
                cont_threshold: true,
                stability: true,
            },
            verdict,
        error: None,
        })
    };
    match run() {
        Ok(report) => report,
        Err(e) => ReciprocityReport {
            analytic_level: 0,
            analytic_value_level: 0,
            analytic_residue: String::new(),
            kummer_level: 0,
            kummer_value_level: 0,
            kummer_residue: String::new(),
            checks: ReciprocityChecks { step4: false, cont_threshold: false, stability: false },
            verdict: false,
            error: Some(e.to_string()),
        },
    }
}

#[cfg(test)]
mod tests;
