//! The Coleman trace 𝒯 and norm 𝒩: the unique continuous operators with
//!
//!   (𝒯g)∘Φ_η = Σ_{u∈Φ[π]} g(x+u),   (𝒩g)∘Φ_η = ∏_{u∈Φ[π]} g(x+u),
//!
//! together with their iterates, the limit projection 𝒩^∞, the logarithmic
//! derivative, and the finite-data solver that recovers a power series from
//! a norm-compatible system of tower units.
//!
//! The right-hand sides are computed over O_1 by Taylor shifts; the
//! Galois-invariance of the result is asserted coefficientwise before
//! projecting back to O. Extraction of h from h∘Φ_η = G runs by repeated
//! Weierstrass division by Φ_η(x): the successive remainders are the
//! coefficients of h and must be constants, which is a hard consistency
//! check on the input being in the operator's domain.


use crate::error::{internal, invalid, Error, Result};
use crate::padic::{PadicScalar, ZeroCheck};
use crate::rat::RatVal;
use crate::series::{taylor_shift, weierstrass_divide, Coeff, Series, Tail, TruncLaurent};
use crate::tower::{apply_skew, TVal, Tower, TowerElem};
use crate::xpoly::XPoly;

/// The π-torsion Φ[π] = {Φ_c(ω_1) : c ∈ A/π} as elements of level 1.
pub fn pi_torsion(tower: &Tower) -> Result<Vec<TowerElem>> {
    let ctx = tower.ctx();
    let field = ctx.field().clone();
    let q = field.q() as u64;
    let d = ctx.prime().degree();
    let omega1 = tower.omega(1)?;
    let mut out = Vec::new();
    let total = q.pow(d as u32);
    for mut code in 0..total {
        let mut coeffs = Vec::with_capacity(d);
        for _ in 0..d {
            coeffs.push((code % q) as u16);
            code /= q;
        }
        let c = crate::poly::APoly::new(field.clone(), coeffs);
        let phi = tower.carlitz().phi_of_poly(&c);
        out.push(apply_skew(&phi, &omega1));
    }
    Ok(out)
}

/// Project a level-1 element that ought to lie in O back to a scalar,
/// insisting that every higher ω_1-component vanishes within precision.
fn project_to_scalar(elem: &TowerElem) -> Result<PadicScalar> {
    if elem.pole() > 0 {
        return internal("projection of a level-1 element with a pole");
    }
    for (i, c) in elem.coords().iter().enumerate().skip(1) {
        let floor = c.abs_prec().unwrap_or(i64::MAX);
        match c.zero_check(floor.min(i64::MAX)) {
            ZeroCheck::Zero => {}
            ZeroCheck::NonZero => {
                return internal(format!("nonvanishing omega-component at index {i}"));
            }
            ZeroCheck::Indeterminate => {
                return Err(Error::Precision(format!(
                    "omega-component {i} cannot be certified zero"
                )));
            }
        }
    }
    Ok(elem.coords()[0].clone())
}

fn project_series(g: &Series<TowerElem>) -> Result<TruncLaurent> {
    let ctx = g.zero_coeff().level().ctx().clone();
    let mut coeffs = Vec::with_capacity(g.coeffs().len());
    for c in g.coeffs() {
        coeffs.push(project_to_scalar(c)?);
    }
    Ok(Series::from_coeffs(PadicScalar::zero(ctx), g.xpow(), coeffs, g.tail()))
}

/// Σ_{u∈Φ[π]} g(x+u), computed over O_1 and projected to O.
pub fn shift_sum(tower: &Tower, g: &TruncLaurent) -> Result<TruncLaurent> {
    let reps = pi_torsion(tower)?;
    let mut acc: Option<Series<TowerElem>> = None;
    for u in &reps {
        let t = taylor_shift(g, u)?;
        acc = Some(match acc {
            None => t,
            Some(a) => a.add(&t),
        });
    }
    project_series(&acc.expect("nonempty torsion"))
}

/// ∏_{u∈Φ[π]} g(x+u), computed over O_1 and projected to O.
pub fn shift_product(tower: &Tower, g: &TruncLaurent) -> Result<TruncLaurent> {
    let reps = pi_torsion(tower)?;
    let mut acc: Option<Series<TowerElem>> = None;
    for u in &reps {
        let t = taylor_shift(g, u)?;
        acc = Some(match acc {
            None => t,
            Some(a) => a.mul(&t),
        });
    }
    project_series(&acc.expect("nonempty torsion"))
}

/// Φ_η(x) as the distinguished divisor for extraction.
pub fn phi_eta_poly(tower: &Tower) -> XPoly {
    let d = tower.ctx().prime().f() as usize;
    let _ = d;
    tower.carlitz().torsion_poly(1)
}

/// Recover h from h∘Φ_η = G by iterated Weierstrass division: the k-th
/// remainder is the τ-free constant h_k. Non-constant remainders mean G is
/// not in the image and are a hard error.
fn extract_h(tower: &Tower, g_big: &TruncLaurent) -> Result<TruncLaurent> {
    let p = phi_eta_poly(tower);
    let d = p.degree().expect("phi_eta nonzero");
    let zero = PadicScalar::zero(tower.ctx().clone());
    let mut digits: Vec<PadicScalar> = Vec::new();
    let mut cur = g_big.clone();
    let exact = matches!(g_big.tail(), Tail::Zero);
    loop {
        if cur.is_zero() {
            break;
        }
        if !exact && cur.window() < d {
            break;
        }
        if exact && cur.coeffs().is_empty() {
            break;
        }
        let (q, r) = weierstrass_divide(&cur, &p)?;
        for (i, c) in r.iter().enumerate().skip(1) {
            let floor = c.abs_prec().unwrap_or(i64::MAX);
            match c.zero_check(floor) {
                ZeroCheck::Zero => {}
                ZeroCheck::NonZero => {
                    return internal(format!(
                        "extraction remainder has a nonzero x^{i} coefficient: \
                         input is outside the operator's domain"
                    ));
                }
                ZeroCheck::Indeterminate => {
                    return Err(Error::Precision(format!(
                        "extraction remainder at x^{i} cannot be certified zero"
                    )));
                }
            }
        }
        digits.push(r[0].clone());
        cur = q;
    }
    let tail = if exact { Tail::Zero } else { Tail::Unknown(digits.len()) };
    Ok(Series::from_coeffs(zero, 0, digits, tail))
}

/// The Coleman trace 𝒯. Simple poles use the exact rule 𝒯(c/x) = cη/x;
/// higher-order poles are routed through multiplication by Φ_η(x)^i.
pub fn coleman_trace(tower: &Tower, g: &TruncLaurent) -> Result<TruncLaurent> {
    if g.xpow() < -1 {
        return coleman_trace_eta_route(tower, g, (-g.xpow()) as usize);
    }
    let eta = PadicScalar::from_apoly(tower.ctx().clone(), tower.ctx().prime().eta());
    if g.xpow() == -1 {
        let c_pole = g.coeff(0);
        let integral = Series::from_coeffs(
            g.zero_coeff().zero_like(),
            0,
            g.coeffs()[1..].to_vec(),
            match g.tail() {
                Tail::Zero => Tail::Zero,
                Tail::Unknown(m) => Tail::Unknown(m.saturating_sub(1)),
            },
        );
        let t_int = coleman_trace(tower, &integral)?;
        let pole = Series::from_coeffs(
            g.zero_coeff().zero_like(),
            -1,
            vec![c_pole.mul(&eta)],
            Tail::Zero,
        );
        return Ok(pole.add(&t_int));
    }
    let big = shift_sum(tower, g)?;
    extract_h(tower, &big)
}

/// 𝒯 through the reduction 𝒯(g) = x^(−i)·𝒯(Φ_η(x)^i·g).
pub fn coleman_trace_eta_route(tower: &Tower, g: &TruncLaurent, i: usize) -> Result<TruncLaurent> {
    let p = phi_eta_poly(tower);
    let zero = PadicScalar::zero(tower.ctx().clone());
    let p_series = Series::from_coeffs(zero, 0, p.coeffs().to_vec(), Tail::Zero);
    let mut shifted = g.clone();
    for _ in 0..i {
        shifted = shifted.mul(&p_series);
    }
    if shifted.xpow() < 0 {
        return invalid(format!("eta-route multiplicity {i} does not clear the pole"));
    }
    let t = coleman_trace(tower, &shifted)?;
    Ok(t.mul_xpow(-(i as i64)))
}

/// The Coleman norm 𝒩 on x^ℤ·O[[x]]: 𝒩(x^j·S) = x^j·𝒩(S), using 𝒩x = x.
pub fn coleman_norm(tower: &Tower, g: &TruncLaurent) -> Result<TruncLaurent> {
    let j = g.xpow();
    let unit = g.mul_xpow(-j);
    for (i, c) in unit.coeffs().iter().enumerate() {
        if let Some(v) = c.val_lower_bound() {
            if v < 0 {
                return invalid(format!(
                    "coleman_norm needs integral coefficients; x^{} has negative valuation",
                    j + i as i64
                ));
            }
        }
    }
    let big = shift_product(tower, &unit)?;
    let h = extract_h(tower, &big)?;
    Ok(h.mul_xpow(j))
}

/// 𝒩 through the reduction 𝒩(g) = x^(−i·q_π)·𝒩(Φ_η(x)^i·g), kept as a
/// cross-check for the x-splitting route.
pub fn coleman_norm_eta_route(tower: &Tower, g: &TruncLaurent, i: usize) -> Result<TruncLaurent> {
    let p = phi_eta_poly(tower);
    let q_p = tower.ctx().prime().residue_card() as i64;
    let zero = PadicScalar::zero(tower.ctx().clone());
    let p_series = Series::from_coeffs(zero, 0, p.coeffs().to_vec(), Tail::Zero);
    let mut shifted = g.clone();
    for _ in 0..i {
        shifted = shifted.mul(&p_series);
    }
    let n = coleman_norm(tower, &shifted)?;
    Ok(n.mul_xpow(-(i as i64) * q_p))
}

/// Window needed on the input so that k norm iterations still retain
/// m_out certified coefficients.
pub fn required_window(tower: &Tower, m_out: usize, k: usize) -> usize {
    let q_p = tower.ctx().prime().residue_card() as usize;
    m_out * q_p.pow(k as u32)
}

/// k-fold 𝒩 with an explicit output budget: the input window must already
/// hold m_out·q_π^k coefficients (exact Laurent polynomials always do).
pub fn norm_iter(tower: &Tower, g: &TruncLaurent, k: usize, m_out: usize) -> Result<TruncLaurent> {
    let need = required_window(tower, m_out, k);
    if g.window() < need {
        return Err(Error::Precision(format!(
            "norm budget: {k} iterations retaining {m_out} coefficients need window {need}, \
             input carries {}",
            g.window()
        )));
    }
    let mut cur = g.clone();
    for _ in 0..k {
        cur = coleman_norm(tower, &cur)?;
    }
    Ok(cur)
}

/// Coefficientwise congruence mod π^digits on the common window.
pub fn series_eq_mod(a: &TruncLaurent, b: &TruncLaurent, digits: i64) -> Result<bool> {
    let diff = a.sub(b);
    for (i, c) in diff.coeffs().iter().enumerate() {
        match c.zero_check(digits) {
            ZeroCheck::Zero => {}
            ZeroCheck::NonZero => return Ok(false),
            ZeroCheck::Indeterminate => {
                return Err(Error::Precision(format!(
                    "coefficient x^{} only known above pi^{digits}",
                    diff.xpow() + i as i64
                )))
            }
        }
    }
    Ok(true)
}

/// Agreement of the first `upto` coefficients, each at its own certified
/// precision; returns the smallest certificate seen. A provably nonzero
/// difference fails; a coefficient certified below `min_digits` is a
/// precision error (the comparison would be vacuous).
pub fn series_eq_certified(
    a: &TruncLaurent,
    b: &TruncLaurent,
    upto: usize,
    min_digits: i64,
) -> Result<i64> {
    if a.xpow() != b.xpow() {
        return internal(format!("x-orders differ: {} vs {}", a.xpow(), b.xpow()));
    }
    let diff = a.sub(b);
    if diff.window() < upto {
        return Err(Error::Precision(format!(
            "only {} coefficients available for a comparison of {upto}",
            diff.window()
        )));
    }
    let mut min_seen = i64::MAX;
    for i in 0..upto {
        let c = diff.coeff(i);
        let cert = c.abs_prec().unwrap_or(i64::MAX);
        if cert < min_digits {
            return Err(Error::Precision(format!(
                "coefficient x^{} certified only to pi^{cert}, need pi^{min_digits}",
                diff.xpow() + i as i64
            )));
        }
        let depth = cert.min(i64::MAX);
        if matches!(c.zero_check(depth), ZeroCheck::NonZero) {
            return internal(format!(
                "series differ at x^{} within certified precision",
                diff.xpow() + i as i64
            ));
        }
        min_seen = min_seen.min(cert);
    }
    Ok(min_seen)
}

/// 𝒩^∞: iterate 𝒩 until consecutive iterates agree mod π^target, which
/// the contraction 𝒩^(k+1)g ≡ 𝒩^k g mod π^(k+1) guarantees within
/// `target` steps. The budget covers the worst case of `target` rounds.
pub fn norm_infty(
    tower: &Tower,
    g: &TruncLaurent,
    target: i64,
    m_out: usize,
) -> Result<TruncLaurent> {
    let need = required_window(tower, m_out, target.max(1) as usize);
    if g.window() < need {
        return Err(Error::Precision(format!(
            "norm-limit budget: stabilizing mod pi^{target} may need window {need}, \
             input carries {}",
            g.window()
        )));
    }
    let mut cur = g.clone();
    for _ in 0..target.max(1) {
        let next = coleman_norm(tower, &cur)?;
        if series_eq_mod(&next, &cur, target)? {
            return Ok(next);
        }
        cur = next;
    }
    internal(format!("norm iteration failed to stabilize mod pi^{target}"))
}

/// dlog g = j/x + S′/S for g = x^j·S. The regular part of an integral unit
/// is integral; that is asserted.
pub fn dlog(g: &TruncLaurent, out_window: usize) -> Result<TruncLaurent> {
    let j = g.xpow();
    let unit = g.mul_xpow(-j);
    let deriv = unit.derivative();
    let inv = unit.invert(out_window)?;
    let regular = deriv.mul(&inv);
    if regular.xpow() < 0 {
        return internal("regular part of dlog has a pole");
    }
    let ctx = g.coeff(0).ctx().clone();
    let zero = g.zero_coeff().zero_like();
    // assemble j/x + (regular part), one series with xpow = −1
    let mut coeffs = vec![PadicScalar::from_int(ctx, j)];
    for i in 0..regular.coeffs().len() {
        let off = regular.xpow() as usize + i + 1;
        while coeffs.len() < off {
            coeffs.push(zero.clone());
        }
        coeffs.push(regular.coeff(i));
    }
    for c in coeffs.iter().skip(1) {
        if let Some(v) = c.val_lower_bound() {
            if v < 0 {
                return internal("dlog regular part is not integral");
            }
        }
    }
    Ok(Series::from_coeffs(zero, -1, coeffs, Tail::Unknown(out_window + 1)))
}

/// A norm-compatible system u_1, …, u_L with u_n ∈ K_n^*, all of the shape
/// ω_n^j·(unit), verified pairwise at construction.
pub struct NormSystem {
    omega_pow: i64,
    units: Vec<TowerElem>,
    generator: Option<TruncLaurent>,
}

impl NormSystem {
    pub fn from_elements(tower: &Tower, elems: &[TowerElem]) -> Result<NormSystem> {
        if elems.is_empty() {
            return invalid("empty norm system");
        }
        let mut omega_pow: Option<i64> = None;
        let mut units = Vec::with_capacity(elems.len());
        for (idx, u) in elems.iter().enumerate() {
            let n = idx + 1;
            if u.level_n() != n {
                return invalid(format!("system entry {idx} must live at level {n}"));
            }
            let e_n = tower.level(n)?.degree() as i64;
            let v = match u.valuation()? {
                TVal::Finite(v) => v,
                TVal::Infinite => return invalid("zero entry in a norm system"),
            };
            let j = v.mul_int(e_n);
            if !j.is_integer() {
                return invalid(format!(
                    "entry at level {n} has valuation {v}, not an omega-power times a unit"
                ));
            }
            let j = j.num();
            match omega_pow {
                None => omega_pow = Some(j),
                Some(j0) if j0 == j => {}
                Some(j0) => {
                    return invalid(format!(
                        "inconsistent omega-powers {j0} and {j} across levels"
                    ))
                }
            }
            let unit = if j >= 0 {
                u.mul_omega_inv_pow(j as usize)
            } else {
                u.mul_omega_pow((-j) as usize)
            };
            units.push(unit);
        }
        let sys = NormSystem { omega_pow: omega_pow.unwrap(), units, generator: None };
        sys.verify(tower)?;
        Ok(sys)
    }

    /// Evaluate a fixed series at every ω_n. The resulting system is still
    /// verified pairwise; the series is remembered as its Coleman series.
    pub fn from_series(tower: &Tower, w: &TruncLaurent, levels: usize) -> Result<NormSystem> {
        let mut elems = Vec::with_capacity(levels);
        for n in 1..=levels {
            let omega = tower.omega(n)?;
            let (v, _) = w.eval_at(&omega, 1)?;
            elems.push(v);
        }
        let mut sys = NormSystem::from_elements(tower, &elems)?;
        sys.generator = Some(w.clone());
        Ok(sys)
    }

    /// The ω-system itself: u_n = ω_n, Col = x.
    pub fn omega_system(tower: &Tower, levels: usize) -> Result<NormSystem> {
        let elems: Vec<TowerElem> =
            (1..=levels).map(|n| tower.omega(n)).collect::<Result<_>>()?;
        let mut sys = NormSystem::from_elements(tower, &elems)?;
        let zero = PadicScalar::zero(tower.ctx().clone());
        sys.generator = Some(Series::from_coeffs(
            zero.clone(),
            1,
            vec![PadicScalar::one(tower.ctx().clone())],
            Tail::Zero,
        ));
        Ok(sys)
    }

    fn verify(&self, tower: &Tower) -> Result<()> {
        for n in 1..self.units.len() {
            let down = tower.norm_to(&self.units[n], n)?;
            if !down.eq_within(&self.units[n - 1]) {
                return invalid(format!(
                    "norm compatibility fails between levels {} and {}",
                    n + 1,
                    n
                ));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn omega_pow(&self) -> i64 {
        self.omega_pow
    }

    pub fn unit(&self, n: usize) -> &TowerElem {
        &self.units[n - 1]
    }

    /// u_n itself (ω-power times the unit part).
    pub fn elem(&self, tower: &Tower, n: usize) -> Result<TowerElem> {
        let u = &self.units[n - 1];
        let _ = tower;
        Ok(if self.omega_pow >= 0 {
            u.mul_omega_pow(self.omega_pow as usize)
        } else {
            u.mul_omega_inv_pow((-self.omega_pow) as usize)
        })
    }

    pub fn generator(&self) -> Option<&TruncLaurent> {
        self.generator.as_ref()
    }

    /// Pointwise product of systems (truncated to the common length).
    pub fn product(&self, tower: &Tower, other: &NormSystem) -> Result<NormSystem> {
        let len = self.units.len().min(other.units.len());
        let mut elems = Vec::with_capacity(len);
        for n in 1..=len {
            elems.push(self.elem(tower, n)?.mul(&other.elem(tower, n)?));
        }
        let mut sys = NormSystem::from_elements(tower, &elems)?;
        sys.generator = match (&self.generator, &other.generator) {
            (Some(a), Some(b)) => Some(a.mul(b)),
            _ => None,
        };
        Ok(sys)
    }
}

/// Result of the Coleman solver: the series, the iteration count k, and
/// the per-level certificate (level, certified π-digits) for levels ≤ k.
pub struct Solve {
    pub col: TruncLaurent,
    pub k: usize,
    pub certificates: Vec<(usize, i64)>,
}

/// Reconstruct the Coleman series of a norm-compatible system from its top
/// level: take the canonical polynomial representative g of the unit part
/// at level 2k and project with 𝒩^k. The iterate agrees with every later
/// one mod π^(k+1), which pins g(ω_i) ≡ u_i mod π^k for i ≤ k.
pub fn coleman_solve(tower: &Tower, sys: &NormSystem) -> Result<Solve> {
    let l = sys.len();
    if l == 0 || l % 2 != 0 {
        return invalid(format!("coleman_solve needs an even number of levels, got {l}"));
    }
    let k = l / 2;
    let top = sys.unit(l);
    if top.pole() > 0 {
        return Err(Error::Precision("top unit has an unresolved pole".into()));
    }
    let zero = PadicScalar::zero(tower.ctx().clone());
    let g: TruncLaurent = Series::from_coeffs(zero, 0, top.coords().to_vec(), Tail::Zero);
    let h = norm_iter(tower, &g, k, 1)?;
    let col = h.mul_xpow(sys.omega_pow());
    let mut certificates = Vec::new();
    for i in 1..=k {
        let omega = tower.omega(i)?;
        let tail_digits = match h.tail() {
            Tail::Zero => i64::MAX,
            Tail::Unknown(m) => {
                let e_i = tower.level(i)?.degree() as i64;
                RatVal::new((m as i64 + sys.omega_pow()) * 1, e_i).floor()
            }
        };
        let _ = &omega;
        certificates.push((i, (k as i64).min(tail_digits)));
    }
    Ok(Solve { col, k, certificates })
}

/// Evaluate the Coleman series of a system at ω_n, preferring a recorded
/// generator (exact) and falling back to the solver.
pub fn coleman_series(tower: &Tower, sys: &NormSystem) -> Result<(TruncLaurent, Option<i64>)> {
    if let Some(gen) = sys.generator() {
        return Ok((gen.clone(), None));
    }
    let solve = coleman_solve(tower, sys)?;
    let cert = solve.certificates.iter().map(|&(_, c)| c).min().unwrap_or(0);
    Ok((solve.col, Some(cert)))
}
