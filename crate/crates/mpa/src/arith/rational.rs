use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision rational number, kept reduced with positive
/// denominator. Serialized as a decimal-free string: `"3"`, `"-7/2"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Self {
        assert!(!denom.is_zero(), "zero denominator");
        Rational(BigRational::new(numer, denom))
    }

    pub fn integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Multiplicative inverse. Panics on zero; callers guard the zero case.
    pub fn recip(&self) -> Self {
        assert!(!self.is_zero(), "inverse of zero rational");
        Rational(self.0.recip())
    }

    pub fn pow(&self, exp: i64) -> Self {
        if exp == 0 {
            return Rational::one();
        }
        let base = if exp < 0 { self.recip() } else { self.clone() };
        let mut acc = Rational::one();
        for _ in 0..exp.unsigned_abs() {
            acc *= base.clone();
        }
        acc
    }

    /// Fractional part in `[0, 1)`.
    pub fn frac(&self) -> Self {
        Rational(&self.0 - self.0.floor())
    }

    /// Upper bound on the bit size of numerator and denominator; used only
    /// for audit logging of entry growth.
    pub fn bit_size(&self) -> u64 {
        self.0.numer().bits().max(self.0.denom().bits())
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Rational {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let numer = BigInt::from_str(n).map_err(|e| format!("bad numerator {n:?}: {e}"))?;
        let denom = BigInt::from_str(d).map_err(|e| format!("bad denominator {d:?}: {e}"))?;
        if denom.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((self.0).$method(rhs.0))
            }
        }

        impl $trait for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(self.0 / rhs.0)
    }
}

impl Div for &Rational {
    type Output = Rational;
    fn div(self, rhs: &Rational) -> Rational {
        assert!(!rhs.is_zero(), "division by zero rational");
        Rational(&self.0 / &rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        self.0 -= rhs.0;
    }
}

impl MulAssign for Rational {
    fn mul_assign(&mut self, rhs: Rational) {
        self.0 *= rhs.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_display() {
        assert_eq!(Rational::new(6, 4).to_string(), "3/2");
        assert_eq!(Rational::new(-6, 4).to_string(), "-3/2");
        assert_eq!(Rational::new(6, -4).to_string(), "-3/2");
        assert_eq!(Rational::new(8, 4).to_string(), "2");
        assert_eq!(Rational::new(0, -7), Rational::zero());
    }

    #[test]
    fn parse_round_trip() {
        for s in ["0", "5", "-5", "3/2", "-22/7"] {
            let r: Rational = s.parse().unwrap();
            assert_eq!(r.to_string(), s);
        }
        assert_eq!("4/6".parse::<Rational>().unwrap().to_string(), "2/3");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
    }

    #[test]
    fn arithmetic() {
        let a = Rational::new(3, 2);
        let b = Rational::new(1, 6);
        assert_eq!(&a + &b, Rational::new(5, 3));
        assert_eq!(&a - &b, Rational::new(4, 3));
        assert_eq!(&a * &b, Rational::new(1, 4));
        assert_eq!(&a / &b, Rational::integer(9));
        assert_eq!(a.pow(-2), Rational::new(4, 9));
        assert_eq!(Rational::new(-2, 3).pow(3), Rational::new(-8, 27));
    }

    #[test]
    fn frac_into_unit_interval() {
        assert_eq!(Rational::new(7, 4).frac(), Rational::new(3, 4));
        assert_eq!(Rational::new(-1, 4).frac(), Rational::new(3, 4));
        assert_eq!(Rational::integer(-2).frac(), Rational::zero());
    }

    #[test]
    fn ordering() {
        let mut v = vec![
            Rational::new(1, 2),
            Rational::integer(-1),
            Rational::new(1, 3),
        ];
        v.sort();
        assert_eq!(
            v,
            vec![
                Rational::integer(-1),
                Rational::new(1, 3),
                Rational::new(1, 2)
            ]
        );
    }
}
