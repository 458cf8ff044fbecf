//! The Carlitz module Φ: the ring homomorphism A → O{τ} determined by
//! Φ_T = T + τ, its torsion polynomials Φ_{π^n}(x) and their Eisenstein
//! factors ψ_n(x) = Φ_{π^n}(x)/Φ_{π^(n−1)}(x).

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{invalid, Result};
use crate::padic::{PadicCtx, PadicScalar, Prec};
use crate::poly::APoly;
use crate::skew::SkewPoly;
use crate::xpoly::XPoly;

pub struct CarlitzMap {
    ctx: Arc<PadicCtx>,
    phi_t: SkewPoly,
    cache: RwLock<HashMap<Vec<u16>, Arc<SkewPoly>>>,
    psi_cache: RwLock<HashMap<usize, Arc<XPoly>>>,
}

impl CarlitzMap {
    pub fn new(ctx: Arc<PadicCtx>) -> CarlitzMap {
        let t = PadicScalar::from_apoly(ctx.clone(), &APoly::var(ctx.field().clone()));
        let phi_t = SkewPoly::new(ctx.clone(), vec![t, PadicScalar::one(ctx.clone())]);
        CarlitzMap {
            ctx,
            phi_t,
            cache: RwLock::new(HashMap::new()),
            psi_cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        &self.ctx
    }

    pub fn phi_t(&self) -> &SkewPoly {
        &self.phi_t
    }

    /// Φ_a for a ∈ A, exact, by Horner in T: Φ_{c + T·b} = c + Φ_T·Φ_b.
    pub fn phi_of_poly(&self, a: &APoly) -> Arc<SkewPoly> {
        let key = a.coeffs().to_vec();
        {
            let cache = self.cache.read().unwrap();
            if let Some(hit) = cache.get(&key) {
                return hit.clone();
            }
        }
        let mut acc = SkewPoly::zero(self.ctx.clone());
        for &c in a.coeffs().iter().rev() {
            acc = self.phi_t.mul(&acc);
            if c != 0 {
                let cs = PadicScalar::from_apoly(
                    self.ctx.clone(),
                    &APoly::constant(self.ctx.field().clone(), c),
                );
                acc = acc.add(&SkewPoly::constant(cs));
            }
        }
        let out = Arc::new(acc);
        self.cache.write().unwrap().insert(key, out.clone());
        out
    }

    /// Φ_π (exact).
    pub fn phi_pi(&self) -> Arc<SkewPoly> {
        self.phi_of_poly(&self.ctx.prime().pi().clone())
    }

    /// Φ_a for a π-adic a, truncated at τ^m_tau and correct mod π^n_target
    /// on every retained coefficient. Requires a known mod π^(n_target+m_tau):
    /// Φ_π ≡ τ^d mod π, so perturbing a by π^(n_target+m_tau) moves the
    /// τ-degrees ≤ m_tau only above π^n_target.
    pub fn phi_of_scalar(
        &self,
        a: &PadicScalar,
        m_tau: usize,
        n_target: u32,
    ) -> Result<SkewPoly> {
        let need = n_target as i64 + m_tau as i64;
        if let Some(abs) = a.abs_prec() {
            if abs < need {
                return Err(crate::error::Error::Precision(format!(
                    "phi_of needs the argument mod pi^{need}, have pi^{abs}"
                )));
            }
        }
        match a.val_lower_bound() {
            None => return Ok(SkewPoly::zero(self.ctx.clone())),
            Some(v) if v < 0 => return invalid("phi_of requires an integral argument"),
            _ => {}
        }
        let d = self.ctx.prime().degree();
        let lift_digits = (n_target as usize + m_tau * d) as u32;
        let lift = a.residue(lift_digits)?;
        let mut acc = SkewPoly::zero(self.ctx.clone());
        let keep = (n_target as usize + m_tau) as u32;
        for &c in lift.coeffs().iter().rev() {
            acc = self.phi_t.mul_truncated(&acc, m_tau);
            if c != 0 {
                let cs = PadicScalar::from_apoly(
                    self.ctx.clone(),
                    &APoly::constant(self.ctx.field().clone(), c),
                );
                acc = acc.add(&SkewPoly::constant(cs));
            }
            // keep coefficient growth bounded; digits beyond the contract
            // carry no guarantee anyway
            acc = SkewPoly::new(
                self.ctx.clone(),
                acc.coeffs().iter().map(|s| s.truncate_rel_floor(keep)).collect(),
            );
        }
        Ok(acc)
    }

    /// Φ_{π^n}(x): monic additive of degree q_π^n, exact over A.
    pub fn torsion_poly(&self, n: usize) -> XPoly {
        let mut pi_n = APoly::one(self.ctx.field().clone());
        for _ in 0..n {
            pi_n = pi_n.mul(self.ctx.prime().pi());
        }
        skew_to_xpoly(&self.phi_of_poly(&pi_n), self.ctx.field().q() as usize)
    }

    /// ψ_n = Φ_{π^n}(x)/Φ_{π^(n−1)}(x) by exact division (Φ_{π^0}(x) = x);
    /// Eisenstein of degree q_π^(n−1)(q_π−1).
    pub fn psi(&self, n: usize) -> Result<Arc<XPoly>> {
        if n == 0 {
            return invalid("psi is defined for n >= 1");
        }
        {
            let cache = self.psi_cache.read().unwrap();
            if let Some(hit) = cache.get(&n) {
                return Ok(hit.clone());
            }
        }
        let num = self.torsion_poly(n);
        let den = if n == 1 { XPoly::x(self.ctx.clone()) } else { self.torsion_poly(n - 1) };
        let psi = num.div_exact(&den)?;
        let q_p = self.ctx.prime().residue_card();
        let expect = q_p.pow(n as u32 - 1) * (q_p - 1);
        if psi.degree() != Some(expect as usize) {
            return crate::error::internal(format!(
                "psi_{n} has degree {:?}, want {expect}",
                psi.degree()
            ));
        }
        psi.check_eisenstein()?;
        let out = Arc::new(psi);
        self.psi_cache.write().unwrap().insert(n, out.clone());
        Ok(out)
    }
}

/// Read a skew polynomial as the additive polynomial Σ c_i·x^(q^i).
pub fn skew_to_xpoly(f: &SkewPoly, q: usize) -> XPoly {
    let ctx = f.ctx().clone();
    let deg = match f.tau_deg() {
        None => return XPoly::zero(ctx),
        Some(d) => d,
    };
    let mut coeffs = vec![PadicScalar::zero(ctx.clone()); q.pow(deg as u32) + 1];
    for (i, c) in f.coeffs().iter().enumerate() {
        coeffs[q.pow(i as u32)] = c.clone();
    }
    XPoly::new(ctx, coeffs)
}

impl PadicScalar {
    /// Truncation that leaves exact values alone (used to bound coefficient
    /// growth where the contract already caps useful digits).
    pub(crate) fn truncate_rel_floor(&self, rel: u32) -> PadicScalar {
        match self.rel_prec() {
            Prec::Exact => {
                // exact coefficients of Φ stay exact; they are small by
                // construction (the lift has bounded degree)
                self.clone()
            }
            Prec::Rel(_) => self.truncate_rel(rel),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSpec;
    use crate::padic::Valuation;

    fn setup(q: u64, prec: u32) -> (Arc<PadicCtx>, CarlitzMap) {
        let f = FieldSpec::new(q, 1, None).unwrap();
        let pi = APoly::var(f.clone());
        let ctx = PadicCtx::new(f, pi, prec).unwrap();
        let map = CarlitzMap::new(ctx.clone());
        (ctx, map)
    }

    fn sc(ctx: &Arc<PadicCtx>, s: &str) -> PadicScalar {
        PadicScalar::from_apoly(ctx.clone(), &APoly::parse(ctx.field(), s, "T").unwrap())
    }

    fn ap(ctx: &Arc<PadicCtx>, s: &str) -> APoly {
        APoly::parse(ctx.field(), s, "T").unwrap()
    }

    #[test]
    fn generator_and_one() {
        let (ctx, map) = setup(3, 16);
        let phi_t = map.phi_of_poly(&ap(&ctx, "T"));
        assert_eq!(phi_t.tau_deg(), Some(1));
        assert!(phi_t.coeff(0).eq_mod(&sc(&ctx, "T"), 10).unwrap());
        let one = map.phi_of_poly(&ap(&ctx, "1"));
        assert_eq!(one.tau_deg(), Some(0));
        assert!(one.coeff(0).eq_mod(&sc(&ctx, "1"), 10).unwrap());
    }

    #[test]
    fn phi_t_squared() {
        let (ctx, map) = setup(3, 16);
        let phi = map.phi_of_poly(&ap(&ctx, "T^2"));
        assert!(phi.coeff(0).eq_mod(&sc(&ctx, "T^2"), 10).unwrap());
        assert!(phi.coeff(1).eq_mod(&sc(&ctx, "T+T^3"), 10).unwrap());
        assert!(phi.coeff(2).eq_mod(&sc(&ctx, "1"), 10).unwrap());
    }

    #[test]
    fn ring_homomorphism_randomized() {
        use rand::{Rng, SeedableRng};
        let (ctx, map) = setup(3, 12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let da = rng.gen_range(0..4);
            let db = rng.gen_range(0..4);
            let a = APoly::new(ctx.field().clone(), (0..=da).map(|_| rng.gen_range(0..3)).collect());
            let b = APoly::new(ctx.field().clone(), (0..=db).map(|_| rng.gen_range(0..3)).collect());
            let sum = map.phi_of_poly(&a.add(&b));
            let sum2 = map.phi_of_poly(&a).add(&map.phi_of_poly(&b));
            let prod = map.phi_of_poly(&a.mul(&b));
            let prod2 = map.phi_of_poly(&a).mul(&map.phi_of_poly(&b));
            for i in 0..=sum.tau_deg().unwrap_or(0) {
                assert!(sum.coeff(i).sub(&sum2.coeff(i)).is_exact_zero());
            }
            for i in 0..=prod.tau_deg().unwrap_or(0) {
                assert!(prod.coeff(i).sub(&prod2.coeff(i)).is_exact_zero());
            }
            // constant coefficient of Φ_a is a; τ-degree is deg a for a ≠ 0
            let pa = map.phi_of_poly(&a);
            assert!(pa
                .coeff(0)
                .sub(&PadicScalar::from_apoly(ctx.clone(), &a))
                .is_exact_zero());
            assert_eq!(pa.tau_deg(), a.degree());
        }
    }

    #[test]
    fn good_reduction() {
        // Φ_π ≡ τ^d mod π: non-leading coefficients have valuation ≥ 1
        let (_, map) = setup(3, 16);
        let phi_pi = map.phi_pi();
        let d = phi_pi.tau_deg().unwrap();
        for i in 0..d {
            match phi_pi.coeff(i).valuation().unwrap() {
                Valuation::Finite(v) => assert!(v >= 1),
                Valuation::Infinite => {}
            }
        }
        let lead = phi_pi.coeff(d);
        assert!(lead.sub(&PadicScalar::one(map.ctx().clone())).is_exact_zero());
    }

    #[test]
    fn torsion_polys() {
        let (ctx, map) = setup(3, 16);
        // n=1: Tx + x^3
        let t1 = map.torsion_poly(1);
        assert_eq!(t1.degree(), Some(3));
        assert!(t1.coeff(1).eq_mod(&sc(&ctx, "T"), 10).unwrap());
        assert!(t1.coeff(3).eq_mod(&sc(&ctx, "1"), 10).unwrap());
        // n=2: T^2 x + (T+T^3) x^3 + x^9
        let t2 = map.torsion_poly(2);
        assert_eq!(t2.degree(), Some(9));
        assert!(t2.coeff(1).eq_mod(&sc(&ctx, "T^2"), 10).unwrap());
        assert!(t2.coeff(3).eq_mod(&sc(&ctx, "T+T^3"), 10).unwrap());

        let (ctx2, map2) = setup(2, 16);
        let u1 = map2.torsion_poly(1);
        assert_eq!(u1.degree(), Some(2));
        assert!(u1.coeff(1).eq_mod(&sc(&ctx2, "T"), 10).unwrap());
    }

    #[test]
    fn psi_factors() {
        let (ctx, map) = setup(3, 16);
        // ψ1 = x^2 + T
        let p1 = map.psi(1).unwrap();
        assert_eq!(p1.degree(), Some(2));
        assert!(p1.coeff(0).eq_mod(&sc(&ctx, "T"), 10).unwrap());
        assert!(p1.coeff(1).is_exact_zero());
        // ψ2 = ψ1 ∘ Φ_T = (Tx+x^3)^2 + T, via the compositional identity
        let p2 = map.psi(2).unwrap();
        let phi_t_x = skew_to_xpoly(&map.phi_of_poly(&ap(&ctx, "T")), 3);
        let composed = compose_xpoly(&*p1, &phi_t_x);
        assert_eq!(p2.degree(), composed.degree());
        for i in 0..=p2.degree().unwrap() {
            assert!(p2.coeff(i).sub(&composed.coeff(i)).is_exact_zero());
        }
        for n in 1..=3 {
            map.psi(n).unwrap().check_eisenstein().unwrap();
        }
        // q = 2: ψ1 = x + T, the degenerate tame level
        let (ctx2, map2) = setup(2, 16);
        let q1 = map2.psi(1).unwrap();
        assert_eq!(q1.degree(), Some(1));
        assert!(q1.coeff(0).eq_mod(&sc(&ctx2, "T"), 10).unwrap());
    }

    #[test]
    fn psi_compositional_cross_check_q2() {
        let (_, map) = setup(2, 16);
        let p2 = map.psi(2).unwrap();
        let p1 = map.psi(1).unwrap();
        let phi_t_x = skew_to_xpoly(&map.phi_t().clone(), 2);
        let composed = compose_xpoly(&*p1, &phi_t_x);
        for i in 0..=p2.degree().unwrap() {
            assert!(p2.coeff(i).sub(&composed.coeff(i)).is_exact_zero());
        }
    }

    #[test]
    fn additivity_of_torsion_poly() {
        // Φ_{π^n}(x+y) = Φ_{π^n}(x) + Φ_{π^n}(y) holds because only q-power
        // monomials appear; check the support directly.
        let (_, map) = setup(3, 16);
        for n in 1..=2 {
            let t = map.torsion_poly(n);
            for (i, c) in t.coeffs().iter().enumerate() {
                if !c.is_exact_zero() {
                    assert!(i > 0 && (i as u64).is_power_of_two() || is_q_power(i as u64, 3));
                }
            }
        }
    }

    fn is_q_power(mut n: u64, q: u64) -> bool {
        if n == 0 {
            return false;
        }
        while n % q == 0 {
            n /= q;
        }
        n == 1
    }

    #[test]
    fn phi_of_scalar_matches_exact() {
        let (ctx, map) = setup(3, 24);
        let a = sc(&ctx, "T^2+2*T+1");
        let via_scalar = map.phi_of_scalar(&a, 2, 12).unwrap();
        let via_poly = map.phi_of_poly(&ap(&ctx, "T^2+2*T+1"));
        for i in 0..=2 {
            assert!(via_scalar.coeff(i).eq_mod(&via_poly.coeff(i), 12).unwrap());
        }
        // insufficient precision is an error
        let shallow = a.truncate_rel(3).mul_pi_pow(0);
        assert!(map.phi_of_scalar(&shallow.truncate_abs(3), 4, 12).is_err());
    }

    pub(super) fn compose_xpoly(outer: &XPoly, inner: &XPoly) -> XPoly {
        let ctx = outer.ctx().clone();
        let mut acc = XPoly::zero(ctx.clone());
        for c in outer.coeffs().iter().rev() {
            acc = acc.mul(inner);
            acc = acc.add(&XPoly::new(ctx.clone(), vec![c.clone()]));
        }
        acc
    }
}
