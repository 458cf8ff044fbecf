//! Dense polynomials in x over π-adic scalars: torsion polynomials Φ_a(x),
//! their Eisenstein factors ψ_n, and the distinguished divisors used by the
//! Coleman operator extraction.

use std::fmt;
use std::sync::Arc;

use crate::error::{internal, Result};
use crate::padic::{PadicCtx, PadicScalar, Valuation};

#[derive(Clone)]
pub struct XPoly {
    ctx: Arc<PadicCtx>,
    coeffs: Vec<PadicScalar>,
}

impl XPoly {
    pub fn new(ctx: Arc<PadicCtx>, mut coeffs: Vec<PadicScalar>) -> XPoly {
        while coeffs.last().map_or(false, |c| c.is_exact_zero()) {
            coeffs.pop();
        }
        XPoly { ctx, coeffs }
    }

    pub fn zero(ctx: Arc<PadicCtx>) -> XPoly {
        XPoly { ctx, coeffs: vec![] }
    }

    pub fn x(ctx: Arc<PadicCtx>) -> XPoly {
        let coeffs = vec![PadicScalar::zero(ctx.clone()), PadicScalar::one(ctx.clone())];
        XPoly { ctx, coeffs }
    }

    pub fn ctx(&self) -> &Arc<PadicCtx> {
        &self.ctx
    }

    pub fn coeffs(&self) -> &[PadicScalar] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PadicScalar {
        self.coeffs.get(i).cloned().unwrap_or_else(|| PadicScalar::zero(self.ctx.clone()))
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().map_or(false, |c| {
            c.sub(&PadicScalar::one(self.ctx.clone())).is_exact_zero()
        })
    }

    pub fn add(&self, other: &XPoly) -> XPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        XPoly::new(self.ctx.clone(), out)
    }

    pub fn sub(&self, other: &XPoly) -> XPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).sub(&other.coeff(i)));
        }
        XPoly::new(self.ctx.clone(), out)
    }

    pub fn mul(&self, other: &XPoly) -> XPoly {
        if self.is_zero() || other.is_zero() {
            return XPoly::zero(self.ctx.clone());
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![PadicScalar::zero(self.ctx.clone()); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_exact_zero() {
                    continue;
                }
                out[i + j] = out[i + j].add(&a.mul(b));
            }
        }
        XPoly::new(self.ctx.clone(), out)
    }

    /// Exact division by a monic divisor; the remainder must vanish exactly
    /// (used for ψ_n = Φ_{π^n}/Φ_{π^(n−1)} where divisibility is a theorem).
    pub fn div_exact(&self, divisor: &XPoly) -> Result<XPoly> {
        if !divisor.is_monic() {
            return internal("div_exact requires a monic divisor");
        }
        let dd = divisor.degree().expect("monic divisor nonzero");
        let mut rem: Vec<PadicScalar> = self.coeffs.clone();
        if rem.len() <= dd {
            return internal("div_exact on lower-degree dividend");
        }
        let mut quo = vec![PadicScalar::zero(self.ctx.clone()); rem.len() - dd];
        for k in (0..quo.len()).rev() {
            let c = rem[k + dd].clone();
            if c.is_exact_zero() {
                continue;
            }
            quo[k] = c.clone();
            for i in 0..=dd {
                let t = c.mul(&divisor.coeff(i));
                rem[k + i] = rem[k + i].sub(&t);
            }
        }
        for (i, r) in rem.iter().take(dd).enumerate() {
            if !r.is_exact_zero() {
                return internal(format!("nonzero remainder at x^{i} in exact division"));
            }
        }
        Ok(XPoly::new(self.ctx.clone(), quo))
    }

    /// Formal derivative d/dx.
    pub fn derivative(&self) -> XPoly {
        let mut out = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate().skip(1) {
            out.push(c.mul_int(i as i64));
        }
        XPoly::new(self.ctx.clone(), out)
    }

    pub fn eval_scalar(&self, x: &PadicScalar) -> PadicScalar {
        let mut acc = PadicScalar::zero(self.ctx.clone());
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(x).add(c);
        }
        acc
    }

    /// Eisenstein at π: monic, inner coefficients of valuation ≥ 1,
    /// constant term of valuation exactly 1.
    pub fn check_eisenstein(&self) -> Result<()> {
        if !self.is_monic() {
            return internal("not monic");
        }
        let deg = self.degree().unwrap_or(0);
        for (i, c) in self.coeffs.iter().take(deg).enumerate() {
            match c.valuation()? {
                Valuation::Infinite if i == 0 => {
                    return internal("constant term is zero");
                }
                Valuation::Infinite => {}
                Valuation::Finite(v) => {
                    if i == 0 && v != 1 {
                        return internal(format!("constant term has valuation {v}, want 1"));
                    }
                    if v < 1 {
                        return internal(format!("coefficient of x^{i} has valuation {v} < 1"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(i, c)| {
                let cs = c.fmt_padic();
                let coeff = if cs == "1" && i > 0 { String::new() } else { format!("({cs})") };
                match i {
                    0 => format!("({cs})"),
                    1 => format!("{coeff}x"),
                    _ => format!("{coeff}x^{i}"),
                }
            })
            .collect();
        parts.join(" + ")
    }
}

impl fmt::Debug for XPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}
