//! The base ring A = 𝔽_q[T]: exact dense polynomial arithmetic.
//!
//! Degree convention: deg(0) = −∞, encoded as `None`. Coefficients are
//! stored low-to-high with no trailing zeros.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::field::{FieldSpec, FqElem};

#[derive(Clone)]
pub struct APoly {
    field: Arc<FieldSpec>,
    coeffs: Vec<FqElem>,
}

impl PartialEq for APoly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for APoly {}

impl fmt::Debug for APoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text("T"))
    }
}

impl APoly {
    pub fn new(field: Arc<FieldSpec>, mut coeffs: Vec<FqElem>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        APoly { field, coeffs }
    }

    pub fn zero(field: Arc<FieldSpec>) -> Self {
        APoly { field, coeffs: vec![] }
    }

    pub fn one(field: Arc<FieldSpec>) -> Self {
        APoly { field, coeffs: vec![1] }
    }

    pub fn constant(field: Arc<FieldSpec>, c: FqElem) -> Self {
        APoly::new(field, vec![c])
    }

    /// The variable T.
    pub fn var(field: Arc<FieldSpec>) -> Self {
        APoly { field, coeffs: vec![0, 1] }
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn coeffs(&self) -> &[FqElem] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FqElem {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    /// None encodes deg(0) = −∞.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> FqElem {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    pub fn add(&self, other: &APoly) -> APoly {
        let f = &self.field;
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(f.add(self.coeff(i), other.coeff(i)));
        }
        APoly::new(self.field.clone(), out)
    }

    pub fn neg(&self) -> APoly {
        let f = &self.field;
        let out = self.coeffs.iter().map(|&c| f.neg(c)).collect();
        APoly { field: self.field.clone(), coeffs: out }
    }

    pub fn sub(&self, other: &APoly) -> APoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &APoly) -> APoly {
        if self.is_zero() || other.is_zero() {
            return APoly::zero(self.field.clone());
        }
        let f = &self.field;
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut out = vec![0 as FqElem; n];
        if f.is_prime_field() {
            // delayed reduction: accumulate into u64, reduce once per output
            let p = f.p() as u64;
            let mut acc = vec![0u64; n];
            for (i, &a) in self.coeffs.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (j, &b) in other.coeffs.iter().enumerate() {
                    acc[i + j] += a as u64 * b as u64;
                }
            }
            for (o, a) in out.iter_mut().zip(acc) {
                *o = (a % p) as FqElem;
            }
        } else {
            for (i, &a) in self.coeffs.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                for (j, &b) in other.coeffs.iter().enumerate() {
                    out[i + j] = f.add(out[i + j], f.mul(a, b));
                }
            }
        }
        APoly::new(self.field.clone(), out)
    }

    pub fn scale(&self, c: FqElem) -> APoly {
        if c == 0 {
            return APoly::zero(self.field.clone());
        }
        let f = &self.field;
        let out = self.coeffs.iter().map(|&a| f.mul(a, c)).collect();
        APoly::new(self.field.clone(), out)
    }

    /// Multiply by T^k.
    pub fn shift_up(&self, k: usize) -> APoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut out = vec![0; k];
        out.extend_from_slice(&self.coeffs);
        APoly { field: self.field.clone(), coeffs: out }
    }

    /// Quotient and remainder with deg r < deg b.
    pub fn divmod(&self, b: &APoly) -> Result<(APoly, APoly)> {
        if b.is_zero() {
            return invalid("division by the zero polynomial");
        }
        let f = &self.field;
        let db = b.coeffs.len() - 1;
        if self.coeffs.len() <= db {
            return Ok((APoly::zero(self.field.clone()), self.clone()));
        }
        let lead_inv = f.inv(b.leading())?;
        let mut rem = self.coeffs.clone();
        let mut quo = vec![0 as FqElem; rem.len() - db];
        for k in (0..quo.len()).rev() {
            let top = rem[k + db];
            if top == 0 {
                continue;
            }
            let c = f.mul(top, lead_inv);
            quo[k] = c;
            for i in 0..=db {
                rem[k + i] = f.sub(rem[k + i], f.mul(c, b.coeffs[i]));
            }
        }
        Ok((APoly::new(self.field.clone(), quo), APoly::new(self.field.clone(), rem)))
    }

    pub fn rem(&self, b: &APoly) -> Result<APoly> {
        Ok(self.divmod(b)?.1)
    }

    /// Monic gcd.
    pub fn gcd(&self, other: &APoly) -> Result<APoly> {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b)?;
            a = b;
            b = r;
        }
        if a.is_zero() {
            return Ok(a);
        }
        let inv = self.field.inv(a.leading())?;
        Ok(a.scale(inv))
    }

    pub fn powmod(&self, mut exp: u64, modulus: &APoly) -> Result<APoly> {
        let mut acc = APoly::one(self.field.clone()).rem(modulus)?;
        let mut base = self.rem(modulus)?;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base).rem(modulus)?;
            }
            base = base.mul(&base).rem(modulus)?;
            exp >>= 1;
        }
        Ok(acc)
    }

    /// q-power Frobenius: (Σ a_i T^i)^(q^k) = Σ a_i T^(i·q^k), since the
    /// coefficients lie in 𝔽_q. Exact and linear-time.
    pub fn frobenius(&self, k: u32) -> APoly {
        if self.is_zero() || k == 0 {
            return self.clone();
        }
        let stride = (self.field.q() as u64).pow(k) as usize;
        let mut out = vec![0 as FqElem; (self.coeffs.len() - 1) * stride + 1];
        for (i, &c) in self.coeffs.iter().enumerate() {
            out[i * stride] = c;
        }
        APoly { field: self.field.clone(), coeffs: out }
    }

    /// Formal derivative d/dT.
    pub fn derivative(&self) -> APoly {
        let f = &self.field;
        let mut out = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().skip(1) {
            let m = f.from_int(i as i64);
            out.push(f.mul(c, m));
        }
        APoly::new(self.field.clone(), out)
    }

    pub fn eval(&self, x: FqElem) -> FqElem {
        let f = &self.field;
        let mut acc: FqElem = 0;
        for &c in self.coeffs.iter().rev() {
            acc = f.add(f.mul(acc, x), c);
        }
        acc
    }

    /// Deterministic irreducibility test (Rabin): f irreducible over 𝔽_q of
    /// degree n iff T^(q^n) ≡ T mod f and gcd(T^(q^(n/l)) − T, f) = 1 for
    /// every prime l | n.
    pub fn is_irreducible(&self) -> Result<bool> {
        let n = match self.degree() {
            None => return invalid("irreducibility of the zero polynomial"),
            Some(0) => return Ok(false),
            Some(n) => n,
        };
        if n == 1 {
            return Ok(true);
        }
        let q = self.field.q() as u64;
        let t = APoly::var(self.field.clone());
        let frob = |k: usize| -> Result<APoly> {
            let mut cur = t.rem(self)?;
            for _ in 0..k {
                cur = cur.powmod(q, self)?;
            }
            Ok(cur)
        };
        let xn = frob(n)?;
        if xn.sub(&t.rem(self)?) != APoly::zero(self.field.clone()) {
            return Ok(false);
        }
        let mut rem = n;
        let mut divs = vec![];
        let mut l = 2;
        while l * l <= rem {
            if rem % l == 0 {
                divs.push(l);
                while rem % l == 0 {
                    rem /= l;
                }
            }
            l += 1;
        }
        if rem > 1 {
            divs.push(rem);
        }
        for l in divs {
            let d = frob(n / l)?.sub(&t.rem(self)?);
            if d.is_zero() {
                return Ok(false);
            }
            if self.gcd(&d)?.degree() != Some(0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Exact multiplicity of `pi` dividing self (0 for units; error on zero).
    pub fn pi_multiplicity(&self, pi: &APoly) -> Result<(usize, APoly)> {
        if self.is_zero() {
            return invalid("pi-multiplicity of zero");
        }
        let mut mult = 0;
        let mut cur = self.clone();
        loop {
            let (q, r) = cur.divmod(pi)?;
            if !r.is_zero() {
                return Ok((mult, cur));
            }
            mult += 1;
            cur = q;
        }
    }

    // ---- text format ----
    // Grammar: sums of `c*V^k`, `c`, `V^k`, `V`, with c either a prime-field
    // integer or an 𝔽_q coefficient list "[c0,...]".

    pub fn to_text(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let f = &self.field;
        let mut parts = Vec::new();
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            let cs = f.fmt_elem(c);
            let part = match i {
                0 => cs,
                1 if c == 1 => var.to_string(),
                1 => format!("{cs}*{var}"),
                _ if c == 1 => format!("{var}^{i}"),
                _ => format!("{cs}*{var}^{i}"),
            };
            parts.push(part);
        }
        parts.join("+")
    }

    pub fn parse(field: &Arc<FieldSpec>, text: &str, var: &str) -> Result<APoly> {
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        if cleaned.starts_with('[') && cleaned.ends_with(']') && !cleaned.contains(var) {
            // coefficient list "[1,1,0,2]" low-to-high, prime-field entries
            let inner = &cleaned[1..cleaned.len() - 1];
            let mut coeffs = Vec::new();
            if !inner.is_empty() {
                for item in inner.split(',') {
                    let v: i64 = item
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad coefficient '{item}'")))?;
                    coeffs.push(field.from_int(v));
                }
            }
            return Ok(APoly::new(field.clone(), coeffs));
        }
        // split into terms on '+' and '-' (keeping sign)
        let mut coeffs: Vec<FqElem> = Vec::new();
        let mut term = String::new();
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut neg = false;
        let mut depth = 0i32;
        for ch in cleaned.chars() {
            match ch {
                '[' => {
                    depth += 1;
                    term.push(ch);
                }
                ']' => {
                    depth -= 1;
                    term.push(ch);
                }
                '+' | '-' if depth == 0 && !term.is_empty() => {
                    terms.push((neg, std::mem::take(&mut term)));
                    neg = ch == '-';
                }
                '+' | '-' if depth == 0 => {
                    neg = ch == '-';
                }
                _ => term.push(ch),
            }
        }
        if !term.is_empty() {
            terms.push((neg, term));
        }
        for (neg, t) in terms {
            let (coeff_txt, pow) = if let Some(idx) = t.find(var) {
                let ctail = &t[idx + var.len()..];
                let pow = if let Some(stripped) = ctail.strip_prefix('^') {
                    stripped
                        .parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad exponent in '{t}'")))?
                } else if ctail.is_empty() {
                    1
                } else {
                    return Err(Error::Parse(format!("unexpected '{ctail}' in term '{t}'")));
                };
                let chead = t[..idx].trim_end_matches('*');
                (chead.to_string(), pow)
            } else {
                (t.clone(), 0)
            };
            let c: FqElem = if coeff_txt.is_empty() {
                1
            } else if coeff_txt.starts_with('[') {
                let inner = coeff_txt
                    .strip_prefix('[')
                    .and_then(|s| s.strip_suffix(']'))
                    .ok_or_else(|| Error::Parse(format!("bad element '{coeff_txt}'")))?;
                let list: Vec<u16> = inner
                    .split(',')
                    .map(|s| s.parse::<u16>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Parse(format!("bad element '{coeff_txt}'")))?;
                field.from_coeff_list(&list)?
            } else {
                let v: i64 = coeff_txt
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient '{coeff_txt}'")))?;
                field.from_int(v)
            };
            let c = if neg { field.neg(c) } else { c };
            if coeffs.len() <= pow {
                coeffs.resize(pow + 1, 0);
            }
            coeffs[pow] = field.add(coeffs[pow], c);
        }
        Ok(APoly::new(field.clone(), coeffs))
    }
}

impl fmt::Display for APoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text("T"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Arc<FieldSpec> {
        FieldSpec::new(3, 1, None).unwrap()
    }

    fn p(field: &Arc<FieldSpec>, s: &str) -> APoly {
        APoly::parse(field, s, "T").unwrap()
    }

    #[test]
    fn mul_example_f3() {
        let f = f3();
        // (T+1)(T+2) = T^2 + 3T + 2 = T^2 + 2 over F_3
        assert_eq!(p(&f, "T+1").mul(&p(&f, "T+2")), p(&f, "T^2+2"));
    }

    #[test]
    fn divmod_example_f3() {
        let f = f3();
        // T^3 = (T+2)(T^2+T) + T over F_3
        let (q, r) = p(&f, "T^3").divmod(&p(&f, "T^2+T")).unwrap();
        assert_eq!(q, p(&f, "T+2"));
        assert_eq!(r, p(&f, "T"));
    }

    #[test]
    fn gcd_example() {
        let f = f3();
        assert_eq!(p(&f, "T^2+T").gcd(&p(&f, "T")).unwrap(), p(&f, "T"));
    }

    #[test]
    fn irreducibility_examples() {
        let f = f3();
        assert!(p(&f, "T").is_irreducible().unwrap());
        // T^2+1 has no root in F_3 (1, 2, 2) and is quadratic, hence irreducible.
        // Brute-force oracle: try all monic linear factors.
        let t2p1 = p(&f, "T^2+1");
        let mut has_factor = false;
        for a in 0..3u16 {
            let lin = APoly::new(f.clone(), vec![a, 1]);
            if t2p1.rem(&lin).unwrap().is_zero() {
                has_factor = true;
            }
        }
        assert!(!has_factor);
        assert!(t2p1.is_irreducible().unwrap());

        let f2 = FieldSpec::new(2, 1, None).unwrap();
        assert!(!p(&f2, "T^2+T").is_irreducible().unwrap()); // T(T+1)
    }

    #[test]
    fn brute_force_irreducibility_cross_check() {
        // Exhaustive factor search agrees with the Rabin test for all monic
        // polynomials of degree <= 4 over F_2 and degree <= 3 over F_3.
        for (pr, maxdeg) in [(2u64, 4usize), (3, 3)] {
            let f = FieldSpec::new(pr, 1, None).unwrap();
            let q = f.q() as u64;
            for deg in 1..=maxdeg {
                for code in 0..q.pow(deg as u32) {
                    let mut coeffs = Vec::with_capacity(deg + 1);
                    let mut v = code;
                    for _ in 0..deg {
                        coeffs.push((v % q) as FqElem);
                        v /= q;
                    }
                    coeffs.push(1);
                    let poly = APoly::new(f.clone(), coeffs);
                    // oracle: any monic divisor of degree in 1..deg?
                    let mut reducible = false;
                    'outer: for ddeg in 1..deg {
                        for dcode in 0..q.pow(ddeg as u32) {
                            let mut dc = Vec::with_capacity(ddeg + 1);
                            let mut w = dcode;
                            for _ in 0..ddeg {
                                dc.push((w % q) as FqElem);
                                w /= q;
                            }
                            dc.push(1);
                            let d = APoly::new(f.clone(), dc);
                            if poly.rem(&d).unwrap().is_zero() {
                                reducible = true;
                                break 'outer;
                            }
                        }
                    }
                    assert_eq!(poly.is_irreducible().unwrap(), !reducible, "poly {poly}");
                }
            }
        }
    }

    #[test]
    fn frobenius_spreads() {
        let f = f3();
        let a = p(&f, "T^2+2*T+1");
        assert_eq!(a.frobenius(1), p(&f, "T^6+2*T^3+1"));
        // cross-check against powmod-free direct cube
        assert_eq!(a.mul(&a).mul(&a), a.frobenius(1));
    }

    #[test]
    fn parse_roundtrip() {
        let f = f3();
        for s in ["2*T^3+T+1", "T^2+2", "0", "1", "T"] {
            let a = p(&f, s);
            assert_eq!(p(&f, &a.to_text("T")), a);
        }
        assert_eq!(p(&f, "[1,1,0,2]"), p(&f, "2*T^3+T+1"));
    }

    #[test]
    fn divmod_property_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = f3();
        for _ in 0..200 {
            let da = rng.gen_range(0..8);
            let db = rng.gen_range(0..5);
            let a = APoly::new(f.clone(), (0..=da).map(|_| rng.gen_range(0..3)).collect());
            let b = APoly::new(f.clone(), (0..=db).map(|_| rng.gen_range(0..3)).collect());
            if b.is_zero() {
                continue;
            }
            let (q, r) = a.divmod(&b).unwrap();
            assert_eq!(q.mul(&b).add(&r), a);
            assert!(r.degree().map_or(true, |dr| dr < b.degree().unwrap()));
        }
    }
}
