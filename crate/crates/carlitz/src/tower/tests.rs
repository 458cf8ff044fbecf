use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::FieldSpec;
use crate::padic::{PadicCtx, PadicScalar};
use crate::phi::CarlitzMap;
use crate::poly::APoly;
use crate::rat::RatVal;

use super::galois::{trace_floor, GaloisElem, TorsionValue};
use super::{apply_skew, eval_xpoly, pi_power, TVal, Tower, TowerElem};

fn tower(q: u64, prec: u32) -> Arc<Tower> {
    let f = FieldSpec::new(q, 1, None).unwrap();
    let pi = APoly::var(f.clone());
    let ctx = PadicCtx::new(f, pi, prec).unwrap();
    Tower::new(Arc::new(CarlitzMap::new(ctx)))
}

fn sc(t: &Tower, s: &str) -> PadicScalar {
    PadicScalar::from_apoly(t.ctx().clone(), &APoly::parse(t.ctx().field(), s, "T").unwrap())
}

fn ap(t: &Tower, s: &str) -> APoly {
    APoly::parse(t.ctx().field(), s, "T").unwrap()
}

/// Random integral element with exact coordinates of small degree.
fn random_elem(t: &Tower, n: usize, rng: &mut ChaCha8Rng) -> TowerElem {
    let level = t.level(n).unwrap();
    let q = t.ctx().field().q();
    let coords: Vec<PadicScalar> = (0..level.degree())
        .map(|_| {
            let deg = rng.gen_range(0..4);
            let coeffs: Vec<u16> = (0..=deg).map(|_| rng.gen_range(0..q) as u16).collect();
            PadicScalar::from_apoly(t.ctx().clone(), &APoly::new(t.ctx().field().clone(), coeffs))
        })
        .collect();
    TowerElem::from_coords(&level, 0, coords).unwrap()
}

#[test]
fn omega_square_is_minus_t() {
    let t = tower(3, 16);
    let w = t.omega(1).unwrap();
    let sq = w.mul(&w);
    let expect = TowerElem::from_scalar(&t.level(1).unwrap(), sc(&t, "2*T"));
    assert!(sq.eq_within(&expect));
}

#[test]
fn psi_vanishes_at_omega() {
    for q in [2u64, 3] {
        let t = tower(q, 16);
        for n in 1..=3 {
            let level = t.level(n).unwrap();
            let w = t.omega(n).unwrap();
            assert!(eval_xpoly(level.psi(), &w).is_exact_zero());
            // Φ_{π^n}(ω_n) = 0 ≠ Φ_{π^(n−1)}(ω_n)
            let kill = t.carlitz().phi_of_poly(&pi_power(t.ctx(), n));
            assert!(apply_skew(&kill, &w).is_exact_zero());
            let sub = t.carlitz().phi_of_poly(&pi_power(t.ctx(), n - 1));
            let prev = apply_skew(&sub, &w);
            assert!(!prev.is_exact_zero());
            // v(Φ_{π^(n−1)}(ω_n)) = 1/(q_π−1)
            let qp = t.ctx().prime().residue_card() as i64;
            assert_eq!(prev.valuation_finite().unwrap(), RatVal::new(1, qp - 1));
        }
    }
}

#[test]
fn inverse_roundtrip_and_pole_form() {
    let t = tower(3, 16);
    let w = t.omega(1).unwrap();
    let winv = w.inv().unwrap();
    let one = TowerElem::one(&t.level(1).unwrap());
    assert!(w.mul(&winv).eq_within(&one));
    // ω^(−1) = −T^(−1)·ω
    let alt = w.scale(&sc(&t, "T").inv().unwrap().neg());
    assert!(winv.eq_within(&alt));

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 1..=2 {
        for _ in 0..8 {
            let a = random_elem(&t, n, &mut rng);
            if a.is_exact_zero() {
                continue;
            }
            let ainv = match a.inv() {
                Ok(v) => v,
                Err(_) => continue,
            };
            let one = TowerElem::one(&t.level(n).unwrap());
            let prod = a.mul(&ainv);
            assert!(
                prod.eq_within(&one),
                "a*inv(a) != 1 for {:?}: {:?}",
                a,
                prod
            );
        }
    }
}

#[test]
fn valuations() {
    let t = tower(3, 16);
    let w1 = t.omega(1).unwrap();
    assert_eq!(w1.valuation_finite().unwrap(), RatVal::new(1, 2));
    let w2 = t.omega(2).unwrap();
    assert_eq!(w2.valuation_finite().unwrap(), RatVal::new(1, 6));
    let tw = w1.scale(&sc(&t, "T"));
    assert_eq!(tw.valuation_finite().unwrap(), RatVal::new(3, 2));
}

#[test]
fn embedding() {
    let t = tower(3, 16);
    let w1 = t.omega(1).unwrap();
    let emb = t.embed(&w1, 2).unwrap();
    // Φ_T(ω_2) = T·ω_2 + ω_2^3
    let w2 = t.omega(2).unwrap();
    let expect = w2.scale(&sc(&t, "T")).add(&w2.pow(3));
    assert!(emb.eq_within(&expect));
    assert_eq!(emb.valuation_finite().unwrap(), RatVal::new(1, 2));
    // scalars embed unchanged
    let s = TowerElem::from_scalar(&t.level(1).unwrap(), sc(&t, "1+T"));
    let se = t.embed(&s, 3).unwrap();
    assert_eq!(se.valuation_finite().unwrap(), RatVal::zero());
    assert!(se.coords()[1..].iter().all(|c| c.is_exact_zero()));
}

#[test]
fn galois_action() {
    let t = tower(3, 16);
    let w1 = t.omega(1).unwrap();
    let sigma2 = GaloisElem::new(&t, 1, &ap(&t, "2")).unwrap();
    let img = sigma2.apply(&t, &w1).unwrap();
    assert!(img.eq_within(&w1.scale_int(2)));
    // identity
    let id = GaloisElem::identity(&t, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_elem(&t, 2, &mut rng);
    assert!(id.apply(&t, &a).unwrap().eq_within(&a));
    // character property σ_c ∘ σ_c' = σ_cc'
    for _ in 0..6 {
        let a = random_elem(&t, 2, &mut rng);
        let c1 = ap(&t, "1+T");
        let c2 = ap(&t, "2+2*T");
        let s1 = GaloisElem::new(&t, 2, &c1).unwrap();
        let s2 = GaloisElem::new(&t, 2, &c2).unwrap();
        let lhs = s1.apply(&t, &s2.apply(&t, &a).unwrap()).unwrap();
        let rhs = s1.compose(&t, &s2).unwrap().apply(&t, &a).unwrap();
        assert!(lhs.eq_within(&rhs));
    }
    // field automorphism: multiplicative on a random pair
    let a = random_elem(&t, 2, &mut rng);
    let b = random_elem(&t, 2, &mut rng);
    let s = GaloisElem::new(&t, 2, &ap(&t, "1+2*T")).unwrap();
    let lhs = s.apply(&t, &a.mul(&b)).unwrap();
    let rhs = s.apply(&t, &a).unwrap().mul(&s.apply(&t, &b).unwrap());
    assert!(lhs.eq_within(&rhs));
}

#[test]
fn norm_compatibility_of_omega() {
    for q in [2u64, 3] {
        let t = tower(q, 16);
        for n in 1..=2 {
            let w_up = t.omega(n + 1).unwrap();
            let nm = t.norm_to(&w_up, n).unwrap();
            let w = t.omega(n).unwrap();
            assert!(nm.eq_within(&w), "q={q}, N_{n}^{}(omega) != omega", n + 1);
        }
    }
}

#[test]
fn norm_and_trace_to_base_examples() {
    let t = tower(3, 16);
    let w1 = t.omega(1).unwrap();
    // N(ω_1) = ω_1 · 2ω_1 = 2ω_1^2 = T
    let n = t.norm_to(&w1, 0).unwrap();
    assert!(n.as_scalar().unwrap().eq_mod(&sc(&t, "T"), 12).unwrap());
    // Tr(ω_1) = (1+2)·ω_1 = 0
    let tr = t.trace_to(&w1, 0).unwrap();
    assert!(tr.is_exact_zero());
}

#[test]
fn trace_transitivity_and_invariance() {
    let t = tower(3, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..4 {
        let a = random_elem(&t, 3, &mut rng);
        let direct = t.trace_to(&a, 1).unwrap();
        let step = t.trace_to(&t.trace_to(&a, 2).unwrap(), 1).unwrap();
        assert!(direct.eq_within(&step));
        let ndirect = t.norm_to(&a, 1).unwrap();
        let nstep = t.norm_to(&t.norm_to(&a, 2).unwrap(), 1).unwrap();
        assert!(ndirect.eq_within(&nstep));
        // trace output is fixed by every σ_c with c ≡ 1 mod π^m
        let emb = t.embed(&direct, 3).unwrap();
        for c in t.relative_galois_orbit(3, 1) {
            let moved = t.galois_apply(&c, &emb).unwrap();
            assert!(moved.eq_within(&emb));
        }
    }
}

#[test]
fn trace_valuation_bounds() {
    let t = tower(3, 16);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in 1..=3usize {
        for _ in 0..10 {
            let a = random_elem(&t, n, &mut rng);
            if a.is_exact_zero() {
                continue;
            }
            let va = a.valuation_finite().unwrap();
            let bound = trace_floor(t.ctx(), n, va);
            let tr = t.trace_to(&a, 0).unwrap();
            match tr.valuation().unwrap() {
                TVal::Infinite => {}
                TVal::Finite(v) => {
                    assert!(v >= RatVal::int(bound), "v(Tr)={v} < floor {bound}");
                }
            }
            if n >= 2 {
                let m = n - 1;
                let rel = t.trace_to(&a, m).unwrap();
                let v_omega_m = t.level(m).unwrap().omega_valuation();
                let rhs = super::galois::relative_trace_bound(t.ctx(), n, m, va, v_omega_m);
                match rel.valuation().unwrap() {
                    TVal::Infinite => {}
                    TVal::Finite(v) => assert!(v > rhs, "v(Tr rel)={v} <= {rhs}"),
                }
            }
        }
    }
}

#[test]
fn different_valuations() {
    let t3 = tower(3, 16);
    assert_eq!(t3.different_valuation(1).unwrap(), RatVal::new(1, 2));
    assert_eq!(t3.different_valuation(2).unwrap(), RatVal::new(3, 2));
    assert_eq!(t3.different_valuation(3).unwrap(), RatVal::new(5, 2));
    let t2 = tower(2, 16);
    assert_eq!(t2.different_valuation(2).unwrap(), RatVal::int(1));
}

#[test]
fn q2_degenerate_level_one() {
    let t = tower(2, 16);
    let l1 = t.level(1).unwrap();
    assert_eq!(l1.degree(), 1); // K_1 = K
    let w1 = t.omega(1).unwrap();
    assert!(w1.as_scalar().unwrap().eq_mod(&sc(&t, "T"), 12).unwrap());
    assert_eq!(w1.valuation_finite().unwrap(), RatVal::int(1));
    // N_1^2(ω_2) = ω_1 = T
    let w2 = t.omega(2).unwrap();
    let nm = t.norm_to(&w2, 1).unwrap();
    assert!(nm.eq_within(&w1));
}

#[test]
fn torsion_recognition() {
    let t = tower(3, 16);
    for n in 1..=2 {
        let w = t.omega(n).unwrap();
        let tv = t.recognize_torsion(&w).unwrap();
        assert_eq!(tv.level(), n);
        assert!(tv.residue().is_one());
    }
    let w1 = t.omega(1).unwrap();
    let two = t.recognize_torsion(&w1.scale_int(2)).unwrap();
    assert_eq!(two.level(), 1);
    assert_eq!(two.residue(), &ap(&t, "2"));
    let zero = t.recognize_torsion(&TowerElem::zero(&t.level(2).unwrap())).unwrap();
    assert!(zero.is_zero());
    // a general torsion point at level 2: Φ_{1+2T}(ω_2)
    let c = ap(&t, "1+2*T");
    let val = apply_skew(&t.carlitz().phi_of_poly(&c), &t.omega(2).unwrap());
    let rec = t.recognize_torsion(&val).unwrap();
    assert_eq!(rec.level(), 2);
    assert_eq!(rec.residue(), &c);
    // canonical minimal level: Φ_T(ω_2) = ω_1 recognized at level 1
    let v = apply_skew(&t.carlitz().phi_of_poly(&ap(&t, "T")), &t.omega(2).unwrap());
    let rec = t.recognize_torsion(&v).unwrap();
    assert_eq!(rec.level(), 1);
    assert!(rec.residue().is_one());
    // non-torsion input is rejected
    let junk = TowerElem::from_scalar(&t.level(1).unwrap(), sc(&t, "1+T"));
    assert!(t.recognize_torsion(&junk).is_err());
}

#[test]
fn torsion_value_algebra() {
    let t = tower(3, 16);
    let ctx = t.ctx().clone();
    let one = TorsionValue::new(ctx.clone(), 2, &ap(&t, "1"));
    let tee = TorsionValue::new(ctx.clone(), 2, &ap(&t, "T"));
    assert_eq!(tee.level(), 1); // Φ_T(ω_2) = ω_1
    assert!(tee.residue().is_one());
    let sum = one.add(&one).add(&one);
    assert!(sum.is_zero()); // 3 = 0 in characteristic 3
    // addition matches the module action on materialized points
    let a = TorsionValue::new(ctx.clone(), 2, &ap(&t, "1+T"));
    let b = TorsionValue::new(ctx.clone(), 2, &ap(&t, "2"));
    let lhs = t.embed(&a.add(&b).materialize(&t).unwrap(), 2).unwrap();
    let rhs = a.materialize(&t).unwrap().add(&b.materialize(&t).unwrap());
    assert!(lhs.eq_within(&rhs));
}

#[test]
fn mixed_pole_arithmetic() {
    let t = tower(3, 16);
    let w = t.omega(2).unwrap();
    let winv = w.inv().unwrap();
    let a = winv.mul(&winv); // ω^(−2)
    let b = w.pow(3); // ω^3
    let prod = a.mul(&b); // ω
    assert!(prod.eq_within(&w));
    let s = a.add(&b);
    assert_eq!(s.valuation_finite().unwrap(), RatVal::new(-2, 6));
}
