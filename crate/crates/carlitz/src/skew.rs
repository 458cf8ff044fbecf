//! The skew polynomial ring O{τ}: τ·c = c^q·τ, multiplication is
//! composition of the underlying additive polynomials.

use std::fmt;
use std::sync::Arc;

use crate::padic::{PadicCtx, PadicScalar};

#[derive(Clone)]
pub struct SkewPoly {
    ctx: Arc<PadicCtx>,
    /// Coefficient of τ^i at index i. Trailing exact zeros are trimmed.
    coeffs: Vec<PadicScalar>,
}

impl SkewPoly {
    pub fn new(ctx: Arc<PadicCtx>, mut coeffs: Vec<PadicScalar>) -> SkewPoly {
        while coeffs.last().map_or(false, |c| c.is_exact_zero()) {
            coeffs.pop();
        }
        SkewPoly { ctx, coeffs }
    }

    pub fn zero(ctx: Arc<PadicCtx>) -> SkewPoly {
        SkewPoly { ctx, coeffs: vec![] }
    }

    pub fn one(ctx: Arc<PadicCtx>) -> SkewPoly {
        let one = PadicScalar::one(ctx.clone());
        SkewPoly { ctx, coeffs: vec![one] }
    }

    pub fn constant(c: PadicScalar) -> SkewPoly {
        SkewPoly::new(c.ctx().clone(), vec![c])
    }

    /// τ^k.
    pub fn tau_pow(ctx: Arc<PadicCtx>, k: usize) -> SkewPoly {
        let mut coeffs = vec![PadicScalar::zero(ctx.clone()); k];
        coeffs.push(PadicScalar::one(ctx.clone()));
        SkewPoly { ctx, coeffs }
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

    pub fn tau_deg(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &SkewPoly) -> SkewPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).add(&other.coeff(i)));
        }
        SkewPoly::new(self.ctx.clone(), out)
    }

    pub fn sub(&self, other: &SkewPoly) -> SkewPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(self.coeff(i).sub(&other.coeff(i)));
        }
        SkewPoly::new(self.ctx.clone(), out)
    }

    /// Twisted product: (Σ a_i τ^i)(Σ b_j τ^j) = Σ a_i·b_j^(q^i)·τ^(i+j).
    pub fn mul(&self, other: &SkewPoly) -> SkewPoly {
        self.mul_truncated(other, usize::MAX)
    }

    /// Twisted product dropping τ-degrees above `max_tau`.
    pub fn mul_truncated(&self, other: &SkewPoly, max_tau: usize) -> SkewPoly {
        if self.is_zero() || other.is_zero() {
            return SkewPoly::zero(self.ctx.clone());
        }
        let deg = (self.coeffs.len() + other.coeffs.len() - 2).min(max_tau);
        let mut out = vec![PadicScalar::zero(self.ctx.clone()); deg + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > deg {
                break;
            }
            if a.is_exact_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > deg {
                    break;
                }
                if b.is_exact_zero() {
                    continue;
                }
                let term = a.mul(&b.frobenius(i as u32));
                out[i + j] = out[i + j].add(&term);
            }
        }
        SkewPoly::new(self.ctx.clone(), out)
    }

    /// Left multiplication by a scalar a (i.e. a·f, no twist).
    pub fn scale(&self, a: &PadicScalar) -> SkewPoly {
        let out = self.coeffs.iter().map(|c| a.mul(c)).collect();
        SkewPoly::new(self.ctx.clone(), out)
    }

    pub fn truncate_tau(&self, max_tau: usize) -> SkewPoly {
        let end = self.coeffs.len().min(max_tau + 1);
        SkewPoly::new(self.ctx.clone(), self.coeffs[..end].to_vec())
    }
}

impl fmt::Debug for SkewPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_exact_zero())
            .map(|(i, c)| match i {
                0 => format!("({})", c.fmt_padic()),
                1 => format!("({})τ", c.fmt_padic()),
                _ => format!("({})τ^{}", c.fmt_padic(), i),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}
