//! The field of constants 𝔽_q, q = p^e.
//!
//! Elements are packed as base-p digits into a `u16`: the value Σ c_i·p^i
//! encodes the residue Σ c_i·s^i modulo the defining polynomial in s.
//! Prime fields (e = 1) use direct mod-p arithmetic; extension fields go
//! through log/exp tables built once at construction.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Packed element of 𝔽_q. The zero element is `0`.
pub type FqElem = u16;

/// Largest supported field size. Tables are O(q), so this keeps
/// construction instant; the engine targets desk-scale instances.
pub const MAX_Q: u64 = 1 << 16;

/// A concrete 𝔽_q with its defining modulus and arithmetic tables.
pub struct FieldSpec {
    p: u16,
    e: u32,
    q: u32,
    /// Monic irreducible of degree e over 𝔽_p, coefficients low-to-high.
    modulus: Vec<u16>,
    /// log[x] for x in 1..q (index x−1); empty when e == 1.
    log: Vec<u32>,
    /// exp[i] = g^i for i in 0..2(q−1); empty when e == 1.
    exp: Vec<u16>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec(p={}, e={}, q={})", self.p, self.e, self.q)
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.e == other.e && self.modulus == other.modulus
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

// ---- polynomial helpers over the prime field 𝔽_p ----
// Used to validate/choose the modulus and to bootstrap the tables.

fn pp_trim(a: &mut Vec<u16>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn pp_rem(a: &[u16], b: &[u16], p: u16) -> Vec<u16> {
    let mut r: Vec<u16> = a.to_vec();
    pp_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = pp_inv_mod(b[db], p);
    while r.len() > db {
        let k = r.len() - 1 - db;
        let c = ((r[r.len() - 1] as u32 * lead_inv as u32) % p as u32) as u16;
        for i in 0..=db {
            let sub = (c as u32 * b[i] as u32) % p as u32;
            let idx = k + i;
            r[idx] = ((r[idx] as u32 + p as u32 * p as u32 - sub) % p as u32) as u16;
        }
        pp_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn pp_mulmod(a: &[u16], b: &[u16], m: &[u16], p: u16) -> Vec<u16> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut prod = vec![0u16; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u32 + ai as u32 * bj as u32) % p as u32) as u16;
        }
    }
    pp_rem(&prod, m, p)
}

fn pp_inv_mod(a: u16, p: u16) -> u16 {
    // Fermat; p is prime and a != 0.
    let mut result = 1u32;
    let mut base = a as u32 % p as u32;
    let mut exp = p as u32 - 2;
    while exp > 0 {
        if exp & 1 == 1 {
            result = result * base % p as u32;
        }
        base = base * base % p as u32;
        exp >>= 1;
    }
    result as u16
}

/// x^(p^k) mod m over 𝔽_p, iterated Frobenius of the residue class of x.
fn pp_frob_of_x(k: u32, m: &[u16], p: u16) -> Vec<u16> {
    let mut cur = vec![0u16, 1]; // x
    for _ in 0..k {
        // raise to p-th power by square-and-multiply
        let mut acc = vec![1u16];
        let mut base = cur.clone();
        let mut exp = p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = pp_mulmod(&acc, &base, m, p);
            }
            base = pp_mulmod(&base, &base, m, p);
            exp >>= 1;
        }
        cur = acc;
    }
    cur
}

fn pp_gcd(a: &[u16], b: &[u16], p: u16) -> Vec<u16> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    pp_trim(&mut a);
    pp_trim(&mut b);
    while !b.is_empty() {
        let r = pp_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// Rabin irreducibility test for a monic polynomial over 𝔽_p.
fn pp_is_irreducible(f: &[u16], p: u16) -> bool {
    let n = f.len() - 1;
    if n == 0 {
        return false;
    }
    if n == 1 {
        return true;
    }
    // x^(p^n) ≡ x mod f
    let xn = pp_frob_of_x(n as u32, f, p);
    let mut diff = xn.clone();
    // subtract x
    if diff.len() < 2 {
        diff.resize(2, 0);
    }
    diff[1] = ((diff[1] as u32 + p as u32 - 1) % p as u32) as u16;
    pp_trim(&mut diff);
    if !diff.is_empty() {
        return false;
    }
    // gcd(x^(p^(n/l)) − x, f) = 1 for each prime l | n
    let mut rem = n;
    let mut l = 2;
    let mut prime_divs = vec![];
    while l * l <= rem {
        if rem % l == 0 {
            prime_divs.push(l);
            while rem % l == 0 {
                rem /= l;
            }
        }
        l += 1;
    }
    if rem > 1 {
        prime_divs.push(rem);
    }
    for l in prime_divs {
        let mut d = pp_frob_of_x((n / l) as u32, f, p);
        if d.len() < 2 {
            d.resize(2, 0);
        }
        d[1] = ((d[1] as u32 + p as u32 - 1) % p as u32) as u16;
        pp_trim(&mut d);
        if d.is_empty() {
            return false; // x^(p^(n/l)) == x: f has a small-degree factor
        }
        let g = pp_gcd(f, &d, p);
        if g.len() != 1 {
            return false;
        }
    }
    true
}

impl FieldSpec {
    /// Build 𝔽_q, q = p^e. When `modulus` is omitted the lexicographically
    /// smallest monic irreducible of degree e is chosen, comparing
    /// coefficient vectors low-to-high as base-p digits.
    pub fn new(p: u64, e: u32, modulus: Option<Vec<u16>>) -> Result<Arc<FieldSpec>> {
        if !is_prime(p) {
            return invalid(format!("p = {p} is not prime"));
        }
        if e == 0 {
            return invalid("extension degree e must be >= 1");
        }
        let q = (p as u64).checked_pow(e).filter(|&q| q <= MAX_Q);
        let q = match q {
            Some(q) => q as u32,
            None => return invalid(format!("q = {p}^{e} exceeds the supported maximum {MAX_Q}")),
        };
        let p = p as u16;
        let modulus = match modulus {
            Some(mut m) => {
                pp_trim(&mut m);
                if m.len() != e as usize + 1 {
                    return invalid(format!("modulus must have degree {e}"));
                }
                if m.iter().any(|&c| c >= p) {
                    return invalid("modulus coefficients must be reduced mod p");
                }
                if m[e as usize] != 1 {
                    return invalid("modulus must be monic");
                }
                if !pp_is_irreducible(&m, p) {
                    return invalid("modulus is reducible");
                }
                m
            }
            None => Self::default_modulus(p, e)?,
        };
        let mut spec = FieldSpec { p, e, q, modulus, log: vec![], exp: vec![] };
        if e > 1 {
            spec.build_tables()?;
        }
        Ok(Arc::new(spec))
    }

    /// Smallest monic irreducible of degree e in the low-to-high digit order.
    fn default_modulus(p: u16, e: u32) -> Result<Vec<u16>> {
        if e == 1 {
            return Ok(vec![0, 1]); // s itself
        }
        let pe = (p as u64).pow(e);
        for low in 0..pe {
            let mut f = Vec::with_capacity(e as usize + 1);
            let mut v = low;
            for _ in 0..e {
                f.push((v % p as u64) as u16);
                v /= p as u64;
            }
            f.push(1);
            if pp_is_irreducible(&f, p) {
                return Ok(f);
            }
        }
        Err(Error::Internal(format!("no irreducible of degree {e} over F_{p}")))
    }

    fn build_tables(&mut self) -> Result<()> {
        let q = self.q as usize;
        // find a generator of 𝔽_q^*
        let order = (q - 1) as u64;
        let mut prime_divs = vec![];
        let mut rem = order;
        let mut l = 2u64;
        while l * l <= rem {
            if rem % l == 0 {
                prime_divs.push(l);
                while rem % l == 0 {
                    rem /= l;
                }
            }
            l += 1;
        }
        if rem > 1 {
            prime_divs.push(rem);
        }
        let gen = (2..self.q)
            .find(|&g| {
                prime_divs.iter().all(|&l| {
                    self.pow_slow(g as FqElem, order / l) != 1
                })
            })
            .ok_or_else(|| Error::Internal("no generator found".into()))?;
        let mut exp = vec![0u16; 2 * (q - 1)];
        let mut log = vec![0u32; q];
        let mut cur: FqElem = 1;
        for i in 0..q - 1 {
            exp[i] = cur;
            exp[i + q - 1] = cur;
            log[cur as usize] = i as u32;
            cur = self.mul_slow(cur, gen as FqElem);
        }
        if cur != 1 {
            return Err(Error::Internal("generator order mismatch".into()));
        }
        self.exp = exp;
        self.log = log;
        Ok(())
    }

    fn unpack(&self, a: FqElem) -> Vec<u16> {
        let mut v = a;
        let mut out = Vec::with_capacity(self.e as usize);
        for _ in 0..self.e {
            out.push(v % self.p);
            v /= self.p;
        }
        out
    }

    fn pack(&self, coeffs: &[u16]) -> FqElem {
        let mut acc: u32 = 0;
        for &c in coeffs.iter().rev() {
            acc = acc * self.p as u32 + c as u32;
        }
        acc as FqElem
    }

    fn mul_slow(&self, a: FqElem, b: FqElem) -> FqElem {
        let pa = self.unpack(a);
        let pb = self.unpack(b);
        let r = pp_mulmod(&pa, &pb, &self.modulus, self.p);
        let mut full = r;
        full.resize(self.e as usize, 0);
        self.pack(&full)
    }

    fn pow_slow(&self, a: FqElem, mut exp: u64) -> FqElem {
        let mut acc: FqElem = 1;
        let mut base = a;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul_slow(acc, base);
            }
            base = self.mul_slow(base, base);
            exp >>= 1;
        }
        acc
    }

    pub fn p(&self) -> u16 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn modulus(&self) -> &[u16] {
        &self.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.e == 1
    }

    #[inline]
    pub fn add(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.e == 1 {
            return ((a as u32 + b as u32) % self.p as u32) as FqElem;
        }
        let (pa, pb) = (self.unpack(a), self.unpack(b));
        let sum: Vec<u16> = pa
            .iter()
            .zip(&pb)
            .map(|(&x, &y)| ((x as u32 + y as u32) % self.p as u32) as u16)
            .collect();
        self.pack(&sum)
    }

    #[inline]
    pub fn neg(&self, a: FqElem) -> FqElem {
        if self.e == 1 {
            return if a == 0 { 0 } else { self.p - a };
        }
        let pa = self.unpack(a);
        let neg: Vec<u16> = pa.iter().map(|&x| if x == 0 { 0 } else { self.p - x }).collect();
        self.pack(&neg)
    }

    #[inline]
    pub fn sub(&self, a: FqElem, b: FqElem) -> FqElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FqElem, b: FqElem) -> FqElem {
        if self.e == 1 {
            return ((a as u32 * b as u32) % self.p as u32) as FqElem;
        }
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: FqElem) -> Result<FqElem> {
        if a == 0 {
            return invalid("division by zero in F_q");
        }
        if self.e == 1 {
            return Ok(pp_inv_mod(a, self.p));
        }
        let l = self.log[a as usize] as usize;
        Ok(self.exp[(self.q as usize - 1 - l) % (self.q as usize - 1)])
    }

    pub fn pow(&self, a: FqElem, exp: u64) -> FqElem {
        if self.e == 1 {
            let mut acc = 1u32;
            let mut base = a as u32 % self.p as u32;
            let mut e = exp;
            while e > 0 {
                if e & 1 == 1 {
                    acc = acc * base % self.p as u32;
                }
                base = base * base % self.p as u32;
                e >>= 1;
            }
            return acc as FqElem;
        }
        if a == 0 {
            return if exp == 0 { 1 } else { 0 };
        }
        let l = self.log[a as usize] as u64;
        let ord = self.q as u64 - 1;
        self.exp[((l % ord) * (exp % ord) % ord) as usize]
    }

    /// Element from an integer, reduced into the prime field (the image of ℤ).
    pub fn from_int(&self, n: i64) -> FqElem {
        let r = n.rem_euclid(self.p as i64) as FqElem;
        r
    }

    /// Coefficient list [c0, ..., c_{e-1}] of an element over the prime field.
    pub fn coeff_list(&self, a: FqElem) -> Vec<u16> {
        self.unpack(a)
    }

    pub fn from_coeff_list(&self, coeffs: &[u16]) -> Result<FqElem> {
        if coeffs.len() > self.e as usize {
            return invalid(format!("F_q element needs at most {} coefficients", self.e));
        }
        if coeffs.iter().any(|&c| c >= self.p) {
            return invalid("F_q coefficients must be reduced mod p");
        }
        let mut full = coeffs.to_vec();
        full.resize(self.e as usize, 0);
        Ok(self.pack(&full))
    }

    /// All q elements in packed order.
    pub fn elements(&self) -> impl Iterator<Item = FqElem> + '_ {
        0..self.q as FqElem
    }

    pub fn fmt_elem(&self, a: FqElem) -> String {
        if self.e == 1 {
            format!("{a}")
        } else {
            let cs = self.unpack(a);
            let parts: Vec<String> = cs.iter().map(|c| c.to_string()).collect();
            format!("[{}]", parts.join(","))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_f3() {
        let f = FieldSpec::new(3, 1, None).unwrap();
        assert_eq!(f.q(), 3);
        assert_eq!(f.modulus(), &[0, 1]); // s
        assert_eq!(f.add(2, 2), 1);
        assert_eq!(f.mul(2, 2), 1);
        assert_eq!(f.inv(2).unwrap(), 2);
    }

    #[test]
    fn f4_with_given_modulus() {
        // s^2 + s + 1 is the unique irreducible quadratic over F_2
        let f = FieldSpec::new(2, 2, Some(vec![1, 1, 1])).unwrap();
        assert_eq!(f.q(), 4);
        // s * s = s + 1 -> packed: s = 2, s+1 = 3
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.mul(2, 3), 1); // s(s+1) = s^2+s = 1
    }

    #[test]
    fn f8_default_modulus_is_lex_smallest() {
        // Independent oracle: enumerate monic cubics over F_2 low-to-high and
        // take the first irreducible; compare against the constructor.
        let p = 2u16;
        let mut expected = None;
        for low in 0..8u64 {
            let f = vec![(low & 1) as u16, ((low >> 1) & 1) as u16, ((low >> 2) & 1) as u16, 1];
            if pp_is_irreducible(&f, p) {
                expected = Some(f);
                break;
            }
        }
        assert_eq!(expected.as_deref(), Some(&[1, 1, 0, 1][..])); // s^3 + s + 1
        let f8 = FieldSpec::new(2, 3, None).unwrap();
        assert_eq!(f8.modulus(), expected.unwrap().as_slice());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(FieldSpec::new(4, 1, None).is_err()); // 4 not prime
        assert!(FieldSpec::new(2, 2, Some(vec![0, 0, 1])).is_err()); // s^2 reducible
        assert!(FieldSpec::new(2, 0, None).is_err());
    }

    #[test]
    fn field_axioms_sampled() {
        for (p, e) in [(2u64, 2u32), (3, 2), (2, 3), (5, 1)] {
            let f = FieldSpec::new(p, e, None).unwrap();
            let els: Vec<FqElem> = f.elements().collect();
            for &a in &els {
                for &b in &els {
                    assert_eq!(f.mul(a, b), f.mul(b, a));
                    assert_eq!(f.add(a, b), f.add(b, a));
                    for &c in &els {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                        assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                    }
                    if b != 0 {
                        let binv = f.inv(b).unwrap();
                        assert_eq!(f.mul(b, binv), 1);
                    }
                }
            }
        }
    }
}
