use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num::bigint::BigInt;
use num::{One, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize};

use super::{Rational, UnitScalar};
use crate::{Error, Result};

/// Euler totient; the degree of `Q(zeta_n)` over `Q`.
pub fn euler_phi(n: u32) -> usize {
    assert!(n >= 1, "conductor must be >= 1");
    let mut phi = n as u64;
    let mut m = n as u64;
    let mut p = 2u64;
    while p * p <= m {
        if m.is_multiple_of(p) {
            phi -= phi / p;
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        phi -= phi / m;
    }
    phi as usize
}

/// `n`-th cyclotomic polynomial with integer coefficients, little-endian.
/// Computed by exact division of `x^n - 1` by the cyclotomic polynomials of
/// the proper divisors of `n`; no factorization and no floating point.
pub fn cyclotomic_polynomial(n: u32) -> Vec<BigInt> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<BigInt>>>>> = OnceLock::new();
    fn compute(n: u32) -> Arc<Vec<BigInt>> {
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(hit) = cache.lock().unwrap().get(&n) {
            return hit.clone();
        }
        // x^n - 1
        let mut f = vec![BigInt::zero(); n as usize + 1];
        f[0] = BigInt::from(-1);
        f[n as usize] = BigInt::one();
        for d in 1..n {
            if n.is_multiple_of(d) {
                f = int_poly_div_exact(&f, &compute(d));
            }
        }
        let out = Arc::new(f);
        cache.lock().unwrap().insert(n, out.clone());
        out
    }
    assert!(n >= 1, "conductor must be >= 1");
    compute(n).as_ref().clone()
}

/// Exact division of integer polynomials; the divisor must be monic and
/// divide evenly. Little-endian coefficients.
fn int_poly_div_exact(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    assert!(den.last().map(|c| c.is_one()).unwrap_or(false), "divisor not monic");
    let dn = den.len() - 1;
    assert!(num.len() > dn);
    let mut rem: Vec<BigInt> = num.to_vec();
    let mut quot = vec![BigInt::zero(); num.len() - dn];
    for i in (0..quot.len()).rev() {
        let c = rem[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        quot[i] = c.clone();
        for (j, d) in den.iter().enumerate() {
            let t = d * &c;
            rem[i + j] -= t;
        }
    }
    assert!(rem.iter().all(|c| c.is_zero()), "division not exact");
    quot
}

/// Modulus cache: the cyclotomic polynomial of each conductor as rational
/// coefficients, shared across all scalars of that conductor.
fn modulus(n: u32) -> Arc<Vec<Rational>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Rational>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().unwrap().get(&n) {
        return hit.clone();
    }
    let poly: Vec<Rational> = cyclotomic_polynomial(n)
        .into_iter()
        .map(|c| Rational::from_big(c, BigInt::one()))
        .collect();
    let out = Arc::new(poly);
    cache.lock().unwrap().insert(n, out.clone());
    out
}

// Little-endian polynomial helpers over the rationals.

fn poly_trim(p: &mut Vec<Rational>) {
    while p.last().map(|c| c.is_zero()).unwrap_or(false) {
        p.pop();
    }
}

fn poly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    poly_trim(&mut out);
    out
}

/// Remainder of `a` modulo a monic `m`.
fn poly_rem(a: &[Rational], m: &[Rational]) -> Vec<Rational> {
    let dm = m.len() - 1;
    let mut rem: Vec<Rational> = a.to_vec();
    poly_trim(&mut rem);
    while rem.len() > dm {
        let lead = rem.last().unwrap().clone();
        let shift = rem.len() - 1 - dm;
        for (j, c) in m.iter().enumerate() {
            let t = &lead * c;
            rem[shift + j] -= t;
        }
        poly_trim(&mut rem);
    }
    rem
}

fn poly_divmod(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem: Vec<Rational> = a.to_vec();
    poly_trim(&mut rem);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    assert!(!b.is_empty(), "division by zero polynomial");
    let db = b.len() - 1;
    let lead_inv = b.last().unwrap().recip();
    if rem.len() <= db {
        return (Vec::new(), rem);
    }
    let mut quot = vec![Rational::zero(); rem.len() - db];
    while rem.len() > db {
        let c = rem.last().unwrap() * &lead_inv;
        let shift = rem.len() - 1 - db;
        quot[shift] = c.clone();
        for (j, d) in b.iter().enumerate() {
            let t = &c * d;
            rem[shift + j] -= t;
        }
        poly_trim(&mut rem);
    }
    poly_trim(&mut quot);
    (quot, rem)
}

/// Extended Euclid over `Q[x]`: returns `(g, s)` with `s*a + t*b = g` for
/// some `t`, where `g` is a greatest common divisor (not normalized).
fn poly_ext_gcd(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut r0: Vec<Rational> = a.to_vec();
    let mut r1: Vec<Rational> = b.to_vec();
    poly_trim(&mut r0);
    poly_trim(&mut r1);
    let mut s0 = vec![Rational::one()];
    let mut s1: Vec<Rational> = Vec::new();
    while !r1.is_empty() {
        let (q, r) = poly_divmod(&r0, &r1);
        let qs = poly_mul(&q, &s1);
        let mut s = s0.clone();
        s.resize(s.len().max(qs.len()), Rational::zero());
        for (i, c) in qs.iter().enumerate() {
            s[i] -= c.clone();
        }
        poly_trim(&mut s);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    (r0, s0)
}

/// Element of the cyclotomic field `Q(zeta_N)`, stored as the coefficient
/// vector of a polynomial in `zeta_N` of degree below `phi(N)` (always
/// reduced against the `N`-th cyclotomic polynomial, so equality is
/// coefficientwise).
#[derive(Clone, PartialEq, Eq)]
pub struct CycScalar {
    conductor: u32,
    coeffs: Vec<Rational>,
}

impl CycScalar {
    fn from_poly(conductor: u32, poly: &[Rational]) -> Self {
        let m = modulus(conductor);
        let mut coeffs = poly_rem(poly, &m);
        coeffs.resize(euler_phi(conductor), Rational::zero());
        CycScalar { conductor, coeffs }
    }

    pub fn zero(conductor: u32) -> Self {
        CycScalar {
            conductor,
            coeffs: vec![Rational::zero(); euler_phi(conductor)],
        }
    }

    pub fn one(conductor: u32) -> Self {
        Self::from_rational(conductor, Rational::one())
    }

    pub fn from_rational(conductor: u32, r: Rational) -> Self {
        Self::from_poly(conductor, &[r])
    }

    /// The generator `zeta_N` itself.
    pub fn zeta(conductor: u32) -> Self {
        Self::from_poly(conductor, &[Rational::zero(), Rational::one()])
    }

    /// Embeds `mag * e^(2*pi*i*a/b)` as `mag * zeta_N^(N*a/b)`.
    /// Fails unless `b` divides `N`.
    pub fn embed(u: &UnitScalar, conductor: u32) -> Result<Self> {
        let b = u.phase_denominator();
        if u64::from(conductor) % b != 0 {
            return Err(Error::IncompatibleConductor {
                denominator: b,
                conductor,
            });
        }
        let num = u.phase().numer().to_u64().expect("phase in [0,1)");
        let exp = (u64::from(conductor) / b) * num;
        let mut poly = vec![Rational::zero(); exp as usize + 1];
        poly[exp as usize] = u.mag().clone();
        Ok(Self::from_poly(conductor, &poly))
    }

    /// Re-expresses this element in `Q(zeta_target)` via `zeta_n = zeta_target^(target/n)`.
    /// Fails unless the current conductor divides `target`.
    pub fn lift(&self, target: u32) -> Result<Self> {
        if !target.is_multiple_of(self.conductor) {
            return Err(Error::IncompatibleConductor {
                denominator: u64::from(self.conductor),
                conductor: target,
            });
        }
        let step = (target / self.conductor) as usize;
        let mut poly = vec![Rational::zero(); (self.coeffs.len() - 1) * step + 1];
        for (j, c) in self.coeffs.iter().enumerate() {
            poly[j * step] = c.clone();
        }
        Ok(Self::from_poly(target, &poly))
    }

    pub fn conductor(&self) -> u32 {
        self.conductor
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// The rational value, if this element lies in `Q`.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(|c| c.is_zero()) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn check_same_field(&self, rhs: &CycScalar) {
        assert_eq!(
            self.conductor, rhs.conductor,
            "scalars from different cyclotomic fields"
        );
    }

    pub fn add(&self, rhs: &CycScalar) -> CycScalar {
        self.check_same_field(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        CycScalar {
            conductor: self.conductor,
            coeffs,
        }
    }

    pub fn sub(&self, rhs: &CycScalar) -> CycScalar {
        self.check_same_field(rhs);
        let coeffs = self
            .coeffs
            .iter()
            .zip(&rhs.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        CycScalar {
            conductor: self.conductor,
            coeffs,
        }
    }

    pub fn neg(&self) -> CycScalar {
        CycScalar {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, rhs: &CycScalar) -> CycScalar {
        self.check_same_field(rhs);
        Self::from_poly(self.conductor, &poly_mul(&self.coeffs, &rhs.coeffs))
    }

    pub fn mul_rational(&self, r: &Rational) -> CycScalar {
        CycScalar {
            conductor: self.conductor,
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// Multiplicative inverse via extended Euclid against the cyclotomic
    /// polynomial, which is irreducible over `Q`. Panics on zero; callers
    /// guard the zero case (it surfaces as `SingularMatrix` or `QIsOne`).
    pub fn inverse(&self) -> CycScalar {
        assert!(!self.is_zero(), "inverse of zero cyclotomic scalar");
        let m = modulus(self.conductor);
        let (g, s) = poly_ext_gcd(&self.coeffs, &m);
        assert_eq!(g.len(), 1, "gcd with irreducible modulus must be constant");
        let scale = g[0].recip();
        let inv: Vec<Rational> = s.iter().map(|c| c * &scale).collect();
        Self::from_poly(self.conductor, &inv)
    }

    pub fn pow(&self, exp: i64) -> CycScalar {
        if exp == 0 {
            return CycScalar::one(self.conductor);
        }
        let base = if exp < 0 { self.inverse() } else { self.clone() };
        let mut acc = CycScalar::one(self.conductor);
        let mut sq = base;
        let mut e = exp.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        acc
    }

    /// Largest numerator/denominator bit size across coefficients; used for
    /// audit logging of entry growth.
    pub fn bit_size(&self) -> u64 {
        self.coeffs.iter().map(|c| c.bit_size()).max().unwrap_or(0)
    }
}

impl fmt::Display for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*z")?,
                _ => write!(f, "{c}*z^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for CycScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CycScalar({}; {})", self.conductor, self)
    }
}

impl Serialize for CycScalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("CycScalar", 2)?;
        st.serialize_field("conductor", &self.conductor)?;
        st.serialize_field("coeffs", &self.coeffs)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for CycScalar {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            conductor: u32,
            coeffs: Vec<Rational>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.conductor < 1 {
            return Err(serde::de::Error::custom("conductor must be >= 1"));
        }
        let want = euler_phi(raw.conductor);
        if raw.coeffs.len() != want {
            return Err(serde::de::Error::custom(format!(
                "conductor {} needs exactly {} coefficients, got {}",
                raw.conductor,
                want,
                raw.coeffs.len()
            )));
        }
        Ok(CycScalar {
            conductor: raw.conductor,
            coeffs: raw.coeffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&c| BigInt::from(c)).collect()
    }

    #[test]
    fn totient_values() {
        let expect = [
            (1, 1),
            (2, 1),
            (3, 2),
            (4, 2),
            (5, 4),
            (6, 2),
            (8, 4),
            (12, 4),
            (36, 12),
            (60, 16),
        ];
        for (n, phi) in expect {
            assert_eq!(euler_phi(n), phi, "phi({n})");
        }
    }

    #[test]
    fn cyclotomic_polynomials_small() {
        assert_eq!(cyclotomic_polynomial(1), big(&[-1, 1]));
        assert_eq!(cyclotomic_polynomial(2), big(&[1, 1]));
        assert_eq!(cyclotomic_polynomial(3), big(&[1, 1, 1]));
        assert_eq!(cyclotomic_polynomial(4), big(&[1, 0, 1]));
        assert_eq!(cyclotomic_polynomial(5), big(&[1, 1, 1, 1, 1]));
        assert_eq!(cyclotomic_polynomial(6), big(&[1, -1, 1]));
        // Hand value: x^4 - x^2 + 1.
        assert_eq!(cyclotomic_polynomial(12), big(&[1, 0, -1, 0, 1]));
    }

    #[test]
    fn cyclotomic_product_recovers_x_n_minus_one() {
        // prod_{d | n} Phi_d = x^n - 1, checked by direct multiplication.
        for n in [6u32, 8, 12, 30] {
            let mut prod = vec![Rational::one()];
            for d in 1..=n {
                if n % d == 0 {
                    let phi_d: Vec<Rational> = cyclotomic_polynomial(d)
                        .into_iter()
                        .map(|c| Rational::from_big(c, BigInt::one()))
                        .collect();
                    prod = poly_mul(&prod, &phi_d);
                }
            }
            let mut want = vec![Rational::zero(); n as usize + 1];
            want[0] = Rational::integer(-1);
            want[n as usize] = Rational::one();
            assert_eq!(prod, want, "n = {n}");
        }
    }

    #[test]
    fn zeta_powers_cycle() {
        for n in [1u32, 2, 3, 4, 6, 12] {
            let z = CycScalar::zeta(n);
            assert!(z.pow(n as i64).is_one(), "zeta_{n}^{n} = 1");
            for e in 1..n {
                // zeta_n^e = 1 only when n | e.
                assert!(!z.pow(e as i64).is_one(), "zeta_{n}^{e} != 1");
            }
        }
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = CycScalar::zeta(4);
        assert_eq!(i.mul(&i), CycScalar::from_rational(4, Rational::integer(-1)));
    }

    #[test]
    fn embed_respects_multiplication() {
        let n = 12;
        let pairs = [
            ((1, 1, 1, 4), (3, 2, 1, 6)),
            ((2, 1, 5, 6), (1, 3, 1, 2)),
            ((7, 3, 2, 3), (1, 1, 3, 4)),
        ];
        for ((m1n, m1d, p1n, p1d), (m2n, m2d, p2n, p2d)) in pairs {
            let a = UnitScalar::new(Rational::new(m1n, m1d), Rational::new(p1n, p1d)).unwrap();
            let b = UnitScalar::new(Rational::new(m2n, m2d), Rational::new(p2n, p2d)).unwrap();
            let ea = CycScalar::embed(&a, n).unwrap();
            let eb = CycScalar::embed(&b, n).unwrap();
            let eab = CycScalar::embed(&a.mul(&b), n).unwrap();
            assert_eq!(ea.mul(&eb), eab);
        }
    }

    #[test]
    fn embed_rejects_incompatible_conductor() {
        let fifth = UnitScalar::root_of_unity(Rational::new(1, 5));
        match CycScalar::embed(&fifth, 12) {
            Err(crate::Error::IncompatibleConductor {
                denominator: 5,
                conductor: 12,
            }) => {}
            other => panic!("expected IncompatibleConductor, got {other:?}"),
        }
    }

    #[test]
    fn lift_commutes_with_embedding() {
        // Lifting from Q(zeta_4) to Q(zeta_12) agrees with embedding straight
        // into Q(zeta_12), and respects products.
        let units = [
            UnitScalar::new(Rational::new(1, 1), Rational::new(1, 4)).unwrap(),
            UnitScalar::new(Rational::new(3, 2), Rational::new(1, 2)).unwrap(),
            UnitScalar::new(Rational::new(2, 7), Rational::new(3, 4)).unwrap(),
        ];
        for u in &units {
            let small = CycScalar::embed(u, 4).unwrap();
            assert_eq!(small.lift(12).unwrap(), CycScalar::embed(u, 12).unwrap());
        }
        let a = CycScalar::embed(&units[0], 4).unwrap();
        let b = CycScalar::embed(&units[1], 4).unwrap();
        assert_eq!(
            a.mul(&b).lift(12).unwrap(),
            a.lift(12).unwrap().mul(&b.lift(12).unwrap())
        );
        assert_eq!(
            CycScalar::from_rational(1, Rational::new(-5, 3)).lift(8).unwrap(),
            CycScalar::from_rational(8, Rational::new(-5, 3))
        );
        match CycScalar::zeta(4).lift(6) {
            Err(crate::Error::IncompatibleConductor {
                denominator: 4,
                conductor: 6,
            }) => {}
            other => panic!("expected IncompatibleConductor, got {other:?}"),
        }
    }

    #[test]
    fn field_inverse() {
        // Random-ish elements of Q(zeta_12); checks a * a^-1 = 1.
        let z = CycScalar::zeta(12);
        let samples = [
            CycScalar::one(12).add(&z),
            z.pow(2).sub(&CycScalar::from_rational(12, Rational::new(3, 7))),
            z.pow(3).add(&z.mul_rational(&Rational::new(-5, 2))),
            CycScalar::from_rational(12, Rational::new(22, 7)),
        ];
        for a in samples {
            assert!(a.mul(&a.inverse()).is_one(), "a = {a}");
        }
    }

    #[test]
    fn embedding_at_scalar_conductor_one() {
        // Q(zeta_1) = Q: a plain rational lane.
        let r = UnitScalar::positive(Rational::new(3, 2));
        let e = CycScalar::embed(&r, 1).unwrap();
        assert_eq!(e.as_rational(), Some(&Rational::new(3, 2)));
        assert_eq!(e.coeffs().len(), 1);
    }

    #[test]
    fn serde_round_trip_and_validation() {
        let z = CycScalar::zeta(12);
        let a = z.pow(3).mul_rational(&Rational::new(5, 3)).add(&CycScalar::one(12));
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(
            json,
            r#"{"conductor":12,"coeffs":["1","0","0","5/3"]}"#
        );
        let back: CycScalar = serde_json::from_str(&json).unwrap();
        assert_eq!(back, a);
        // Wrong coefficient count is rejected.
        assert!(serde_json::from_str::<CycScalar>(r#"{"conductor":12,"coeffs":["1"]}"#).is_err());
    }
}
