//! Exact rational numbers for tower valuations, which live in (1/e_n)ℤ.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A reduced fraction with positive denominator. Arithmetic is exact;
/// magnitudes stay tiny (valuations at desk scale), so i64 never overflows
/// through the i128 intermediate products.
#[derive(Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatVal {
    num: i64,
    den: i64,
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl RatVal {
    pub fn new(num: i64, den: i64) -> RatVal {
        assert!(den != 0, "zero denominator");
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        RatVal { num: sign * num / g, den: sign * den / g }
    }

    pub fn int(n: i64) -> RatVal {
        RatVal { num: n, den: 1 }
    }

    pub fn zero() -> RatVal {
        RatVal::int(0)
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn add(&self, other: &RatVal) -> RatVal {
        let n = (self.num as i128 * other.den as i128 + other.num as i128 * self.den as i128)
            .try_into()
            .expect("rational overflow");
        let d = (self.den as i128 * other.den as i128).try_into().expect("rational overflow");
        RatVal::new(n, d)
    }

    pub fn sub(&self, other: &RatVal) -> RatVal {
        self.add(&RatVal { num: -other.num, den: other.den })
    }

    pub fn mul_int(&self, k: i64) -> RatVal {
        RatVal::new(self.num.checked_mul(k).expect("rational overflow"), self.den)
    }

    pub fn div_int(&self, k: i64) -> RatVal {
        RatVal::new(self.num, self.den.checked_mul(k).expect("rational overflow"))
    }

    pub fn floor(&self) -> i64 {
        self.num.div_euclid(self.den)
    }

    pub fn min(self, other: RatVal) -> RatVal {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl PartialOrd for RatVal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RatVal {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl fmt::Debug for RatVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for RatVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basics() {
        assert_eq!(RatVal::new(2, 4), RatVal::new(1, 2));
        assert_eq!(RatVal::new(1, -2), RatVal::new(-1, 2));
        assert_eq!(RatVal::new(1, 2).add(&RatVal::new(1, 3)), RatVal::new(5, 6));
        assert!(RatVal::new(1, 3) < RatVal::new(1, 2));
        assert_eq!(RatVal::new(-3, 2).floor(), -2);
        assert_eq!(RatVal::new(3, 2).floor(), 1);
        assert_eq!(RatVal::new(1, 2).min(RatVal::int(0)), RatVal::zero());
        assert_eq!(format!("{}", RatVal::new(3, 6)), "1/2");
    }
}
