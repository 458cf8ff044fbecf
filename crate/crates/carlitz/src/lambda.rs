//! The module logarithm λ = Σ c_i τ^i: the unique additive series with
//! c_0 = 1 and a·λ = λ·Φ_a, convergent on the open unit ball.
//!
//! Comparing τ^m-coefficients in π·λ = λ·Φ_π gives the recursion
//!   c_m·(π − π^(q^m)) = Σ_{j=1..min(m,d)} c_{m−j}·b_j^(q^(m−j))
//! with b_j the τ^j-coefficient of Φ_π. Every step divides by a
//! valuation-1 scalar, which is what drives v(c_m) down to −m.

use std::sync::Arc;

use crate::error::{internal, invalid, Error, Result};
use crate::padic::{PadicCtx, PadicScalar, Valuation};
use crate::phi::CarlitzMap;
use crate::rat::RatVal;
use crate::skew::SkewPoly;
use crate::tower::{TVal, TowerElem};

pub struct LambdaSeries {
    ctx: Arc<PadicCtx>,
    coeffs: Vec<PadicScalar>,
}

impl LambdaSeries {
    /// Coefficients c_0..c_{m_tau}, each with its own tracked precision.
    pub fn build(carlitz: &CarlitzMap, m_tau: usize) -> Result<LambdaSeries> {
        let ctx = carlitz.ctx().clone();
        let phi_pi = carlitz.phi_pi();
        let d = ctx.prime().degree();
        let pi = PadicScalar::from_apoly(ctx.clone(), ctx.prime().pi());
        let mut coeffs = vec![PadicScalar::one(ctx.clone())];
        let guard = ctx.default_prec() as i64 + m_tau as i64 + 4;
        for m in 1..=m_tau {
            let mut rhs = PadicScalar::zero(ctx.clone());
            for j in 1..=m.min(d) {
                let b_j = phi_pi.coeff(j);
                if b_j.is_exact_zero() {
                    continue;
                }
                let term = coeffs[m - j].mul(&b_j.truncate_abs(guard).frobenius((m - j) as u32));
                rhs = rhs.add(&term);
            }
            let denom = pi.sub(&pi.frobenius(m as u32).truncate_abs(guard));
            let c_m = rhs.div(&denom)?;
            match c_m.valuation() {
                Ok(Valuation::Finite(v)) if v < -(m as i64) => {
                    return internal(format!("v(c_{m}) = {v} violates the bound −{m}"));
                }
                _ => {}
            }
            coeffs.push(c_m);
        }
        Ok(LambdaSeries { ctx, coeffs })
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        &self.ctx
    }

    pub fn coeff(&self, i: usize) -> Option<&PadicScalar> {
        self.coeffs.get(i)
    }

    pub fn tau_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn as_skew(&self) -> SkewPoly {
        SkewPoly::new(self.ctx.clone(), self.coeffs.clone())
    }

    /// Coefficients of λ·Φ_π − π·λ through τ^through; all must vanish
    /// within tracked precision.
    pub fn functional_equation_defect(
        &self,
        carlitz: &CarlitzMap,
        through: usize,
    ) -> Result<SkewPoly> {
        if through >= self.coeffs.len() {
            return invalid(format!(
                "defect through τ^{through} needs {} λ-coefficients, have {}",
                through + 1,
                self.coeffs.len()
            ));
        }
        let lambda = self.as_skew();
        let pi = PadicScalar::from_apoly(self.ctx.clone(), self.ctx.prime().pi());
        let lhs = lambda.mul_truncated(&carlitz.phi_pi(), through);
        let rhs = lambda.scale(&pi).truncate_tau(through);
        Ok(lhs.sub(&rhs))
    }

    /// Smallest number of τ-terms whose tail stays above `target_abs` for
    /// arguments of valuation `va`; None if this series is too short.
    pub fn terms_for(&self, va: RatVal, target_abs: i64) -> Option<usize> {
        let q = self.ctx.field().q() as i128;
        'outer: for m in 0..self.coeffs.len() {
            // tail bound: min over i > m of q^i·va − i must be ≥ target,
            // i.e. q^i·num ≥ (target + i)·den
            let mut qi: i128 = q.pow(m as u32 + 1);
            for i in (m + 1)..(m + 80) {
                let lhs = qi * va.num() as i128;
                let rhs = (target_abs as i128 + i as i128) * va.den() as i128;
                if lhs < rhs {
                    continue 'outer;
                }
                if lhs > 1i128 << 96 {
                    // the tail grows geometrically from here
                    return Some(m + 1);
                }
                qi *= q;
            }
            return Some(m + 1);
        }
        None
    }

    /// λ(a) = Σ c_i·a^(q^i), certified mod π^target_abs. Requires v(a) > 0.
    /// When v(a) > 1/(q−1) the result has the same valuation as a.
    pub fn eval(&self, a: &TowerElem, target_abs: i64) -> Result<TowerElem> {
        if a.is_exact_zero() {
            return Ok(a.clone());
        }
        let va = match a.valuation()? {
            TVal::Infinite => return Ok(a.clone()),
            TVal::Finite(v) => v,
        };
        if va <= RatVal::zero() {
            return invalid(format!("λ converges only for positive valuation, got v = {va}"));
        }
        let terms = self.terms_for(va, target_abs).ok_or_else(|| {
            Error::Precision(format!(
                "λ with {} τ-terms cannot reach absolute precision {target_abs} at v(a) = {va}",
                self.coeffs.len()
            ))
        })?;
        let mut sum = a.scale(&self.coeffs[0]);
        let mut frob = a.clone();
        for i in 1..terms {
            frob = frob.frobenius();
            if self.coeffs[i].is_exact_zero() {
                continue;
            }
            sum = sum.add(&frob.scale(&self.coeffs[i]));
        }
        let out = sum.truncate_abs(target_abs);
        let q = self.ctx.field().q() as i64;
        if va > RatVal::new(1, q - 1) {
            if let Ok(TVal::Finite(v)) = out.valuation() {
                if v != va {
                    return internal(format!("v(λ(a)) = {v} differs from v(a) = {va}"));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::poly::APoly;
    use crate::tower::Tower;

    fn setup(q: u64, prec: u32) -> (Arc<Tower>, LambdaSeries) {
        let f = FieldSpec::new(q, 1, None).unwrap();
        let pi = APoly::var(f.clone());
        let ctx = PadicCtx::new(f, pi, prec).unwrap();
        let carlitz = Arc::new(CarlitzMap::new(ctx));
        let lambda = LambdaSeries::build(&carlitz, 12).unwrap();
        (Tower::new(carlitz), lambda)
    }

    fn sc(t: &Tower, s: &str) -> PadicScalar {
        PadicScalar::from_apoly(t.ctx().clone(), &APoly::parse(t.ctx().field(), s, "T").unwrap())
    }

    #[test]
    fn first_coefficients() {
        let (t, l) = setup(3, 24);
        assert!(l.coeff(0).unwrap().sub(&PadicScalar::one(t.ctx().clone())).is_exact_zero());
        // c_1 = (T − T^3)^(−1): multiply back
        let c1 = l.coeff(1).unwrap();
        let denom = sc(&t, "T+2*T^3");
        assert!(c1.mul(&denom).eq_mod(&PadicScalar::one(t.ctx().clone()), 16).unwrap());
        assert_eq!(c1.valuation().unwrap(), Valuation::Finite(-1));
        assert_eq!(l.coeff(2).unwrap().valuation().unwrap(), Valuation::Finite(-2));
    }

    #[test]
    fn valuation_bound_holds() {
        for q in [2u64, 3] {
            let (_, l) = setup(q, 24);
            for i in 0..=12 {
                match l.coeff(i).unwrap().valuation() {
                    Ok(Valuation::Finite(v)) => assert!(v >= -(i as i64), "v(c_{i}) = {v}"),
                    Ok(Valuation::Infinite) => {}
                    Err(e) => panic!("c_{i} ambiguous: {e}"),
                }
            }
        }
    }

    #[test]
    fn functional_equation() {
        let (t, l) = setup(3, 24);
        let defect = l.functional_equation_defect(t.carlitz(), 8).unwrap();
        for i in 0..=8 {
            let c = defect.coeff(i);
            assert!(
                !matches!(c.zero_check(4), crate::padic::ZeroCheck::NonZero),
                "defect at τ^{i}: {:?}",
                c
            );
        }
    }

    #[test]
    fn eval_at_scalar_t() {
        // λ(T) ≡ T + T^3·(T−T^3)^(−1) mod π^7: the i ≥ 2 terms have
        // valuation ≥ 9·1 − 2 = 7
        let (t, l) = setup(3, 24);
        let level0 = t.level(0).unwrap();
        let a = TowerElem::from_scalar(&level0, sc(&t, "T"));
        let got = l.eval(&a, 7).unwrap().as_scalar().unwrap();
        let expect = sc(&t, "T").add(&sc(&t, "T^3").div(&sc(&t, "T+2*T^3")).unwrap());
        assert!(got.eq_mod(&expect, 7).unwrap());
    }

    #[test]
    fn value_preservation() {
        use rand::{Rng, SeedableRng};
        let (t, l) = setup(3, 24);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for n in 1..=2usize {
            let level = t.level(n).unwrap();
            let e = level.degree() as i64;
            for _ in 0..10 {
                // v(a) = s + k/e > 1/(q−1) by construction
                let s = rng.gen_range(1..3) as i64;
                let k = rng.gen_range(0..e);
                let unit_c: u16 = rng.gen_range(1..3);
                let mut a = t.omega(n).unwrap().pow(k as u64).mul_pi_pow(s).scale_int(unit_c as i64);
                let bump = t.omega(n).unwrap().scale(&sc(&t, "T"));
                a = a.mul(&TowerElem::one(&level).add(&bump));
                let va = a.valuation_finite().unwrap();
                let lv = l.eval(&a, 14).unwrap();
                assert_eq!(lv.valuation_finite().unwrap(), va);
            }
        }
    }

    #[test]
    fn eval_rejects_bad_args() {
        let (t, l) = setup(3, 24);
        let level0 = t.level(0).unwrap();
        let unit = TowerElem::from_scalar(&level0, sc(&t, "1+T"));
        assert!(l.eval(&unit, 6).is_err());
        let zero = TowerElem::zero(&level0);
        assert!(l.eval(&zero, 6).unwrap().is_exact_zero());
    }
}
