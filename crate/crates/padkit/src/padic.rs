//! Exact arithmetic in `Q_p` at finite precision, the standard additive
//! character psi of conductor `Z_p`, and multiplicative characters
//! `eta |.|^a`.
//!
//! Values are stored as `p^v * u` with the unit part `u` known modulo `p^m`;
//! `m` is the number of significant digits of that value. Operations never
//! fabricate digits: when cancellation eats all known digits they return
//! an insufficient-precision error instead.

use crate::err::{Error, Result};
use crate::{C64, Q};
use num_rational::Ratio;
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Mutex, OnceLock};

// ---------------------------------------------------------------------------
// modular helpers
// ---------------------------------------------------------------------------

pub fn is_odd_prime(p: u64) -> bool {
    if p < 3 || p % 2 == 0 {
        return false;
    }
    let mut d = 3;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

pub fn pow_mod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc: u128 = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Inverse of `a` modulo `m` (requires gcd(a, m) = 1).
pub fn inv_mod(a: u128, m: u128) -> u128 {
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "inv_mod of non-unit");
    t.rem_euclid(m as i128) as u128
}

/// p^k as u128, guarded.
pub fn p_pow(p: u64, k: u32) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(p as u128).expect("p^k overflow");
    }
    acc
}

/// Euler phi of p^k.
pub fn phi_pk(p: u64, k: u32) -> u64 {
    if k == 0 {
        1
    } else {
        (p_pow(p, k - 1) as u64) * (p - 1)
    }
}

/// Legendre symbol of a unit mod p (p odd prime): +1 residue, -1 non-residue.
pub fn legendre(u: u64, p: u64) -> i32 {
    let e = pow_mod(u as u128 % p as u128, ((p - 1) / 2) as u128, p as u128);
    if e == 1 {
        1
    } else {
        -1
    }
}

/// Smallest primitive root mod p that stays primitive mod p^2 (hence mod all
/// p^k). Cached per prime.
pub fn primitive_root(p: u64) -> u64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, u64>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&g) = cache.lock().unwrap().get(&p) {
        return g;
    }
    let order = p - 1;
    let mut factors = vec![];
    let mut n = order;
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            factors.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        factors.push(n);
    }
    let mut g = 2;
    loop {
        let primitive_mod_p = factors
            .iter()
            .all(|&q| pow_mod(g as u128, ((p - 1) / q) as u128, p as u128) != 1);
        if primitive_mod_p {
            // g is primitive mod p^2 iff g^(p-1) != 1 mod p^2
            let p2 = (p as u128) * (p as u128);
            if pow_mod(g as u128, (p - 1) as u128, p2) != 1 {
                break;
            }
        }
        g += 1;
    }
    cache.lock().unwrap().insert(p, g);
    g
}

/// Discrete-log table for (Z/p^k)^x with respect to `primitive_root(p)`.
/// `table[u] = i` with `g^i = u`, indexed by residues `u < p^k` (non-units 0).
fn dlog_table(p: u64, k: u32) -> std::sync::Arc<Vec<u64>> {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32), std::sync::Arc<Vec<u64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().unwrap().get(&(p, k)) {
        return t.clone();
    }
    let pk = p_pow(p, k);
    assert!(pk <= 1 << 28, "dlog table too large: p^{k}");
    let g = primitive_root(p) as u128;
    let phi = phi_pk(p, k);
    let mut table = vec![0u64; pk as usize];
    let mut acc: u128 = 1;
    for i in 0..phi {
        table[acc as usize] = i;
        acc = acc * g % pk;
    }
    let arc = std::sync::Arc::new(table);
    cache.lock().unwrap().insert((p, k), arc.clone());
    arc
}

/// Discrete log of unit `u` mod p^k.
pub fn dlog(p: u64, k: u32, u: u128) -> u64 {
    debug_assert!(k >= 1);
    let pk = p_pow(p, k);
    dlog_table(p, k)[(u % pk) as usize]
}

/// e^(2 pi i j / n) from a cached table.
pub fn root_of_unity(n: u64, j: i64) -> C64 {
    static CACHE: OnceLock<Mutex<HashMap<u64, std::sync::Arc<Vec<C64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let table = {
        let mut guard = cache.lock().unwrap();
        guard
            .entry(n)
            .or_insert_with(|| {
                std::sync::Arc::new(
                    (0..n)
                        .map(|i| {
                            let ang = TAU * (i as f64) / (n as f64);
                            C64::new(ang.cos(), ang.sin())
                        })
                        .collect(),
                )
            })
            .clone()
    };
    table[(j.rem_euclid(n as i64)) as usize]
}

// ---------------------------------------------------------------------------
// exact roots of unity
// ---------------------------------------------------------------------------

/// Exact root of unity e^(2 pi i num/den), kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExactRoot {
    num: i64,
    den: u32,
}

impl ExactRoot {
    pub fn new(num: i64, den: u32) -> Self {
        assert!(den > 0);
        let num = num.rem_euclid(den as i64);
        let g = num_integer::gcd(num as u64, den as u64).max(1) as i64;
        ExactRoot {
            num: num / g,
            den: (den as i64 / g) as u32,
        }
    }
    pub fn one() -> Self {
        ExactRoot { num: 0, den: 1 }
    }
    pub fn minus_one() -> Self {
        ExactRoot { num: 1, den: 2 }
    }
    pub fn is_one(&self) -> bool {
        self.num == 0
    }
    pub fn mul(&self, other: &ExactRoot) -> ExactRoot {
        let den = num_integer::lcm(self.den as i64, other.den as i64);
        let num = self.num * (den / self.den as i64) + other.num * (den / other.den as i64);
        ExactRoot::new(num, den as u32)
    }
    pub fn pow(&self, k: i64) -> ExactRoot {
        ExactRoot::new(self.num.wrapping_mul(k.rem_euclid(self.den as i64)), self.den)
    }
    pub fn inv(&self) -> ExactRoot {
        ExactRoot::new(-self.num, self.den)
    }
    /// One k-th root (primitive branch); all k roots are `self.kth_root(k).mul(e(j/k))`.
    pub fn kth_root(&self, k: u32) -> ExactRoot {
        ExactRoot::new(self.num, self.den * k)
    }
    pub fn value(&self) -> C64 {
        root_of_unity(self.den as u64, self.num)
    }
    pub fn order(&self) -> u32 {
        self.den
    }
}

// ---------------------------------------------------------------------------
// PAdicScalar
// ---------------------------------------------------------------------------

/// Element of Q_p at finite precision: `p^v * u` with `u` known mod `p^m`
/// (`m >= 1` significant digits), or exact zero (infinite valuation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdicScalar {
    p: u64,
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    Zero,
    Unit { v: i64, u: u128, m: u32 },
}

/// Valuation value: finite or the distinguished infinite marker for zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Val {
    Finite(i64),
    Infinite,
}

impl PAdicScalar {
    pub fn zero(p: u64) -> Self {
        PAdicScalar { p, repr: Repr::Zero }
    }

    /// Build `p^v * u` with `u` an integer prime to p, at precision `m`.
    pub fn from_unit(p: u64, v: i64, u: u128, m: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        if m == 0 {
            return Err(Error::InsufficientPrecision("precision m must be >= 1".into()));
        }
        let pm = p_pow(p, m);
        let u = u % pm;
        if u == 0 || u % p as u128 == 0 {
            return Err(Error::Invalid(format!("unit part {u} not invertible mod {p}^{m}")));
        }
        Ok(PAdicScalar { p, repr: Repr::Unit { v, u, m } })
    }

    /// Embed an integer at precision m.
    pub fn from_int(p: u64, n: i128, m: u32) -> Result<Self> {
        if n == 0 {
            return Ok(Self::zero(p));
        }
        let mut v = 0i64;
        let mut n = n;
        while n % p as i128 == 0 {
            n /= p as i128;
            v += 1;
        }
        let pm = p_pow(p, m) as i128;
        let u = n.rem_euclid(pm) as u128;
        Self::from_unit(p, v, u, m)
    }

    /// Embed an exact rational at precision m.
    pub fn from_ratio(p: u64, r: Ratio<i128>, m: u32) -> Result<Self> {
        if *r.numer() == 0 {
            return Ok(Self::zero(p));
        }
        let (mut num, mut den) = (*r.numer(), *r.denom());
        let mut v = 0i64;
        while num % p as i128 == 0 {
            num /= p as i128;
            v += 1;
        }
        while den % p as i128 == 0 {
            den /= p as i128;
            v -= 1;
        }
        let pm = p_pow(p, m) as i128;
        let u = (num.rem_euclid(pm) as u128) * inv_mod(den.rem_euclid(pm) as u128, pm as u128)
            % pm as u128;
        Self::from_unit(p, v, u, m)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// Valuation; the infinite marker iff the value is zero.
    pub fn valuation(&self) -> Val {
        match self.repr {
            Repr::Zero => Val::Infinite,
            Repr::Unit { v, .. } => Val::Finite(v),
        }
    }

    /// Unit part mod p^m.
    pub fn unit(&self) -> Option<u128> {
        match self.repr {
            Repr::Zero => None,
            Repr::Unit { u, .. } => Some(u),
        }
    }

    pub fn precision(&self) -> Option<u32> {
        match self.repr {
            Repr::Zero => None,
            Repr::Unit { m, .. } => Some(m),
        }
    }

    /// |x|_p = p^(-v), 0 for x = 0, as an exact rational.
    pub fn abs(&self) -> Ratio<i128> {
        match self.repr {
            Repr::Zero => Ratio::new(0, 1),
            Repr::Unit { v, .. } => {
                if v >= 0 {
                    Ratio::new(1, p_pow(self.p, v as u32) as i128)
                } else {
                    Ratio::new(p_pow(self.p, (-v) as u32) as i128, 1)
                }
            }
        }
    }

    pub fn mul(&self, other: &PAdicScalar) -> Result<PAdicScalar> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => Ok(PAdicScalar::zero(self.p)),
            (Repr::Unit { v: v1, u: u1, m: m1 }, Repr::Unit { v: v2, u: u2, m: m2 }) => {
                let m = (*m1).min(*m2);
                let pm = p_pow(self.p, m);
                Ok(PAdicScalar {
                    p: self.p,
                    repr: Repr::Unit { v: v1 + v2, u: (u1 % pm) * (u2 % pm) % pm, m },
                })
            }
        }
    }

    pub fn inv(&self) -> Result<PAdicScalar> {
        match self.repr {
            Repr::Zero => Err(Error::ZeroArgument),
            Repr::Unit { v, u, m } => {
                let pm = p_pow(self.p, m);
                Ok(PAdicScalar { p: self.p, repr: Repr::Unit { v: -v, u: inv_mod(u, pm), m } })
            }
        }
    }

    pub fn neg(&self) -> PAdicScalar {
        match self.repr {
            Repr::Zero => self.clone(),
            Repr::Unit { v, u, m } => {
                let pm = p_pow(self.p, m);
                PAdicScalar { p: self.p, repr: Repr::Unit { v, u: (pm - u % pm) % pm, m } }
            }
        }
    }

    /// Addition with precision tracking. Cancellation of k digits lowers the
    /// surviving precision by k; if nothing survives this is an error.
    pub fn add(&self, other: &PAdicScalar) -> Result<PAdicScalar> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        let (v1, u1, m1, v2, u2, m2) = match (&self.repr, &other.repr) {
            (Repr::Zero, _) => return Ok(other.clone()),
            (_, Repr::Zero) => return Ok(self.clone()),
            (Repr::Unit { v: v1, u: u1, m: m1 }, Repr::Unit { v: v2, u: u2, m: m2 }) => {
                (*v1, *u1, *m1, *v2, *u2, *m2)
            }
        };
        let (v1, u1, m1, v2, u2, m2) = if v1 <= v2 {
            (v1, u1, m1, v2, u2, m2)
        } else {
            (v2, u2, m2, v1, u1, m1)
        };
        let delta = (v2 - v1) as u32;
        // joint precision of the sum at scale p^v1
        let m = m1.min(m2 + delta);
        if delta >= m {
            // the second term is below the known digits of the first
            let pm = p_pow(self.p, m);
            return Ok(PAdicScalar { p: self.p, repr: Repr::Unit { v: v1, u: u1 % pm, m } });
        }
        let pm = p_pow(self.p, m);
        let sum = (u1 % pm + (u2 % pm) * p_pow(self.p, delta) % pm) % pm;
        if sum == 0 {
            return Err(Error::InsufficientPrecision(format!(
                "cancellation below p^{m} at p={}",
                self.p
            )));
        }
        let mut w = sum;
        let mut k = 0u32;
        while w % self.p as u128 == 0 {
            w /= self.p as u128;
            k += 1;
        }
        if k >= m {
            return Err(Error::InsufficientPrecision("full cancellation".into()));
        }
        Ok(PAdicScalar { p: self.p, repr: Repr::Unit { v: v1 + k as i64, u: w % p_pow(self.p, m - k), m: m - k } })
    }

    /// Fractional part: the rational in [0,1) with denominator p^(-v) such
    /// that x - frac(x) lies in Z_p.
    pub fn frac_part(&self) -> Result<Ratio<i128>> {
        match self.repr {
            Repr::Zero => Ok(Ratio::new(0, 1)),
            Repr::Unit { v, u, m } => {
                if v >= 0 {
                    return Ok(Ratio::new(0, 1));
                }
                let k = (-v) as u32;
                if m < k {
                    return Err(Error::InsufficientPrecision(format!(
                        "need {k} digits below the point, have {m}"
                    )));
                }
                let pk = p_pow(self.p, k);
                Ok(Ratio::new((u % pk) as i128, pk as i128))
            }
        }
    }
}

/// Convenience: valuation as spec'd operation.
pub fn valuation(x: &PAdicScalar) -> Val {
    x.valuation()
}

/// Convenience: arithmetic absolute value.
pub fn abs(x: &PAdicScalar) -> Ratio<i128> {
    x.abs()
}

// ---------------------------------------------------------------------------
// additive character
// ---------------------------------------------------------------------------

/// The standard additive character of conductor Z_p: psi(x) = e^(2 pi i sigma {x}).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdditiveCharacter {
    pub p: u64,
    pub sign: i32, // +1 or -1
}

impl AdditiveCharacter {
    pub fn new(p: u64, sign: i32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        assert!(sign == 1 || sign == -1);
        Ok(AdditiveCharacter { p, sign })
    }

    pub fn inverse(&self) -> AdditiveCharacter {
        AdditiveCharacter { p: self.p, sign: -self.sign }
    }

    pub fn eval(&self, x: &PAdicScalar) -> Result<C64> {
        let f = x.frac_part()?;
        Ok(psi_of_ratio(self.sign, f))
    }
}

/// e^(2 pi i sigma r) for an exact rational r with p-power denominator.
pub fn psi_of_ratio(sign: i32, r: Ratio<i128>) -> C64 {
    let den = *r.denom();
    let num = (*r.numer() * sign as i128).rem_euclid(den);
    debug_assert!(den > 0 && den < (1i128 << 63));
    root_of_unity(den as u64, num as i64)
}

/// psi(sigma * a / p^k) for integer a: the workhorse of all shell sums.
pub fn psi_pk(p: u64, k: u32, sign: i32, a: i64) -> C64 {
    let pk = p_pow(p, k) as i64;
    root_of_unity(pk as u64, a * sign as i64)
}

// ---------------------------------------------------------------------------
// unit characters
// ---------------------------------------------------------------------------

/// Character of (Z/p^m)^x presented by its index against the fixed generator
/// `primitive_root(p)`: eval(g^i) = e^(2 pi i * index * i / phi(p^m)).
/// `modulus_exp = 0` is the trivial character.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct UnitCharacter {
    pub p: u64,
    pub modulus_exp: u32,
    pub index: u64,
}

impl UnitCharacter {
    pub fn trivial(p: u64) -> Self {
        UnitCharacter { p, modulus_exp: 0, index: 0 }
    }

    /// The Legendre character (the unique quadratic one on units).
    pub fn legendre(p: u64) -> Self {
        UnitCharacter { p, modulus_exp: 1, index: (p - 1) / 2 }
    }

    pub fn new(p: u64, modulus_exp: u32, index: u64) -> Self {
        let idx = if modulus_exp == 0 { 0 } else { index % phi_pk(p, modulus_exp) };
        UnitCharacter { p, modulus_exp, index: idx }
    }

    pub fn is_trivial(&self) -> bool {
        self.index == 0
    }

    /// Minimal conductor exponent: trivial on 1 + p^c Z_p, not on 1 + p^(c-1).
    pub fn conductor(&self) -> u32 {
        if self.index == 0 {
            return 0;
        }
        // chi = chi_index at modulus p^m; chi descends to modulus p^(m-1)
        // iff it is trivial on the order-p subgroup generated by g^(phi/p),
        // i.e. iff p | index (for m >= 2).
        let mut m = self.modulus_exp;
        let mut idx = self.index;
        while m >= 2 {
            let phi = phi_pk(self.p, m);
            if idx % self.p as u64 != 0 {
                return m;
            }
            // descend: chi on (Z/p^(m-1))^x has index idx * phi(p^(m-1)) / phi(p^m) = idx / p
            idx /= self.p as u64;
            let _ = phi;
            m -= 1;
        }
        if idx % (self.p - 1) == 0 {
            0
        } else {
            1
        }
    }

    /// Exact value at a unit residue u (given mod p^modulus_exp).
    pub fn eval_exact(&self, u: u128) -> ExactRoot {
        if self.modulus_exp == 0 {
            return ExactRoot::one();
        }
        let phi = phi_pk(self.p, self.modulus_exp);
        let i = dlog(self.p, self.modulus_exp, u);
        ExactRoot::new((self.index % phi).wrapping_mul(i % phi) as i64 % phi as i64, phi as u32)
    }

    pub fn eval(&self, u: u128) -> C64 {
        self.eval_exact(u).value()
    }

    pub fn inverse(&self) -> UnitCharacter {
        if self.modulus_exp == 0 {
            return *self;
        }
        let phi = phi_pk(self.p, self.modulus_exp);
        UnitCharacter { p: self.p, modulus_exp: self.modulus_exp, index: (phi - self.index % phi) % phi }
    }

    /// chi^k (k may be negative).
    pub fn pow(&self, k: i64) -> UnitCharacter {
        if self.modulus_exp == 0 {
            return *self;
        }
        let phi = phi_pk(self.p, self.modulus_exp) as i64;
        let idx = (self.index as i64 * (k % phi)).rem_euclid(phi);
        UnitCharacter { p: self.p, modulus_exp: self.modulus_exp, index: idx as u64 }
    }

    /// Same character viewed at a larger modulus.
    pub fn at_modulus(&self, m: u32) -> UnitCharacter {
        assert!(m >= self.conductor());
        if self.modulus_exp == m {
            return *self;
        }
        if self.modulus_exp == 0 {
            return UnitCharacter { p: self.p, modulus_exp: m, index: 0 };
        }
        // index scales with phi
        let phi_old = phi_pk(self.p, self.modulus_exp);
        let phi_new = phi_pk(self.p, m);
        if m > self.modulus_exp {
            UnitCharacter { p: self.p, modulus_exp: m, index: self.index * (phi_new / phi_old) }
        } else {
            UnitCharacter { p: self.p, modulus_exp: m, index: self.index / (phi_old / phi_new) }
        }
    }
}

// ---------------------------------------------------------------------------
// multiplicative characters
// ---------------------------------------------------------------------------

/// Character of Q_p^x: x -> unit_char(u(x)) * zeta_p^{v(x)} * |x|^a.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MultiplicativeCharacter {
    pub unit: UnitCharacter,
    /// Value at the uniformizer p (a root of unity).
    pub zeta_p: ExactRoot,
    /// Real twist exponent: contributes |x|^a = p^(-a v(x)).
    pub exponent: Q,
}

impl MultiplicativeCharacter {
    pub fn new(unit: UnitCharacter, zeta_p: ExactRoot, exponent: Q) -> Self {
        MultiplicativeCharacter { unit, zeta_p, exponent }
    }

    pub fn trivial(p: u64) -> Self {
        MultiplicativeCharacter {
            unit: UnitCharacter::trivial(p),
            zeta_p: ExactRoot::one(),
            exponent: Q::new(0, 1),
        }
    }

    pub fn eval(&self, x: &PAdicScalar) -> Result<C64> {
        let p = self.unit.p;
        if x.prime() != p {
            return Err(Error::PrimeMismatch(x.prime(), p));
        }
        let (v, u) = match (x.valuation(), x.unit()) {
            (Val::Finite(v), Some(u)) => (v, u),
            _ => return Err(Error::ZeroArgument),
        };
        if self.unit.modulus_exp > 0 {
            let need = self.unit.modulus_exp;
            if x.precision().unwrap_or(0) < need {
                return Err(Error::InsufficientPrecision(format!(
                    "character needs unit mod p^{need}"
                )));
            }
        }
        let unit_val = self.unit.eval(u % p_pow(p, self.unit.modulus_exp.max(1)));
        let zeta = self.zeta_p.pow(v).value();
        let a = self.exponent;
        let abs_pow = (p as f64).powf(-(a.numer() * v) as f64 / *a.denom() as f64);
        Ok(unit_val * zeta * abs_pow)
    }
}

/// The four quadratic characters of Q_p^x (p odd), each with exponent 0:
/// trivial; unramified quadratic ((-1)^v); the two ramified ones
/// (Legendre on units, value +/-1 at p).
pub fn quadratic_characters(p: u64) -> Result<[MultiplicativeCharacter; 4]> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    let zero = Q::new(0, 1);
    Ok([
        MultiplicativeCharacter::new(UnitCharacter::trivial(p), ExactRoot::one(), zero),
        MultiplicativeCharacter::new(UnitCharacter::trivial(p), ExactRoot::minus_one(), zero),
        MultiplicativeCharacter::new(UnitCharacter::legendre(p), ExactRoot::one(), zero),
        MultiplicativeCharacter::new(UnitCharacter::legendre(p), ExactRoot::minus_one(), zero),
    ])
}

/// Evaluate a multiplicative character (spec operation name).
pub fn eval_char(chi: &MultiplicativeCharacter, x: &PAdicScalar) -> Result<C64> {
    chi.eval(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn valuation_examples() {
        let p = 5;
        assert_eq!(PAdicScalar::zero(p).valuation(), Val::Infinite);
        let x = PAdicScalar::from_unit(p, 1, 1, 6).unwrap();
        assert_eq!(x.valuation(), Val::Finite(1));
        // 3/5 at p = 5 has valuation -1
        let y = PAdicScalar::from_ratio(p, Ratio::new(3, 5), 6).unwrap();
        assert_eq!(y.valuation(), Val::Finite(-1));
    }

    #[test]
    fn abs_examples() {
        assert_eq!(PAdicScalar::zero(3).abs(), Ratio::new(0, 1));
        let x = PAdicScalar::from_int(3, 9, 6).unwrap();
        assert_eq!(x.abs(), Ratio::new(1, 9));
        let y = PAdicScalar::from_ratio(5, Ratio::new(1, 5), 6).unwrap();
        assert_eq!(y.abs(), Ratio::new(5, 1));
    }

    #[test]
    fn frac_part_examples() {
        let p = 3;
        let x = PAdicScalar::from_int(p, 7, 6).unwrap();
        assert_eq!(x.frac_part().unwrap(), Ratio::new(0, 1));
        let y = PAdicScalar::from_ratio(p, Ratio::new(1, 3), 6).unwrap();
        assert_eq!(y.frac_part().unwrap(), Ratio::new(1, 3));
        // (p+1)/p^2 at p = 3 -> 4/9
        let z = PAdicScalar::from_ratio(p, Ratio::new(4, 9), 6).unwrap();
        assert_eq!(z.frac_part().unwrap(), Ratio::new(4, 9));
    }

    #[test]
    fn frac_part_insufficient_precision() {
        let p = 3;
        let y = PAdicScalar::from_unit(p, -4, 5, 3).unwrap();
        assert!(matches!(y.frac_part(), Err(Error::InsufficientPrecision(_))));
    }

    #[test]
    fn psi_examples() {
        let p = 5;
        let psi = AdditiveCharacter::new(p, 1).unwrap();
        let zero = PAdicScalar::zero(p);
        assert!(close(psi.eval(&zero).unwrap(), C64::new(1.0, 0.0), 1e-12));
        // x = 1/p -> primitive p-th root
        let x = PAdicScalar::from_ratio(p, Ratio::new(1, 5), 6).unwrap();
        let want = root_of_unity(5, 1);
        assert!(close(psi.eval(&x).unwrap(), want, 1e-12));
        // full character sum over p^-1 Z_p / Z_p vanishes
        let mut s = C64::new(0.0, 0.0);
        for a in 0..p {
            s += psi_pk(p, 1, 1, a as i64);
        }
        assert!(s.norm() < 1e-12);
    }

    #[test]
    fn psi_shell_sums_vanish() {
        // sum over representatives of a shell v = -k, k >= 2
        for p in [3u64, 5, 7] {
            for k in 2..=3u32 {
                let pk = p_pow(p, k) as i64;
                let mut s = C64::new(0.0, 0.0);
                for a in 0..pk {
                    if a % p as i64 != 0 {
                        s += psi_pk(p, k, 1, a);
                    }
                }
                assert!(s.norm() < 1e-9, "shell sum p={p} k={k}");
            }
        }
    }

    #[test]
    fn psi_additive() {
        let p = 7;
        let mut rng = CounterRng::new(11);
        for _ in 0..200 {
            let v1 = rng.range_i64(-3, 2);
            let v2 = rng.range_i64(-3, 2);
            let u1 = 1 + 2 * rng.below(3);
            let u2 = 1 + 2 * rng.below(3);
            let x = PAdicScalar::from_unit(p, v1, u1 as u128, 10).unwrap();
            let y = PAdicScalar::from_unit(p, v2, u2 as u128, 10).unwrap();
            let psi = AdditiveCharacter::new(p, 1).unwrap();
            if let Ok(s) = x.add(&y) {
                let lhs = psi.eval(&s).unwrap();
                let rhs = psi.eval(&x).unwrap() * psi.eval(&y).unwrap();
                assert!(close(lhs, rhs, 1e-9));
            }
        }
    }

    #[test]
    fn quadratic_characters_basics() {
        let p = 5;
        let chars = quadratic_characters(p).unwrap();
        // trivial on anything
        let x = PAdicScalar::from_unit(p, 2, 3, 6).unwrap();
        assert!(close(chars[0].eval(&x).unwrap(), C64::new(1.0, 0.0), 1e-12));
        // unramified quadratic at p^3 is -1
        let y = PAdicScalar::from_unit(p, 3, 1, 6).unwrap();
        assert!(close(chars[1].eval(&y).unwrap(), C64::new(-1.0, 0.0), 1e-12));
        // ramified at the non-residue 2 mod 5 is -1
        let u = PAdicScalar::from_unit(p, 0, 2, 6).unwrap();
        assert!(close(chars[2].eval(&u).unwrap(), C64::new(-1.0, 0.0), 1e-12));
        assert_eq!(legendre(2, 5), -1);
        // squares are trivial pointwise
        let mut rng = CounterRng::new(3);
        for chi in &chars {
            for _ in 0..50 {
                let v = rng.range_i64(-2, 2);
                let u = 1 + rng.below(4);
                let x = PAdicScalar::from_unit(p, v, u as u128, 6).unwrap();
                let x2 = x.mul(&x).unwrap();
                let val = chi.eval(&x2).unwrap();
                assert!(close(val, C64::new(1.0, 0.0), 1e-9));
            }
        }
    }

    #[test]
    fn eval_char_examples() {
        let p = 3;
        // |.|^(1/2) at x = p^2 -> 1/3
        let chi = MultiplicativeCharacter::new(
            UnitCharacter::trivial(p),
            ExactRoot::one(),
            Q::new(1, 2),
        );
        let x = PAdicScalar::from_int(p, 9, 6).unwrap();
        assert!(close(chi.eval(&x).unwrap(), C64::new(1.0 / 3.0, 0.0), 1e-12));
    }

    #[test]
    fn multiplicativity_random() {
        let mut rng = CounterRng::new(99);
        for p in [3u64, 5, 7] {
            let chars = quadratic_characters(p).unwrap();
            for trial in 0..100 {
                let chi = &chars[(trial % 4) as usize];
                let v1 = rng.range_i64(-4, 4);
                let v2 = rng.range_i64(-4, 4);
                let mut u1 = rng.below(p_pow(p, 3) as u64) as u128;
                let mut u2 = rng.below(p_pow(p, 3) as u64) as u128;
                if u1 % p as u128 == 0 {
                    u1 += 1;
                }
                if u2 % p as u128 == 0 {
                    u2 += 1;
                }
                let x = PAdicScalar::from_unit(p, v1, u1, 8).unwrap();
                let y = PAdicScalar::from_unit(p, v2, u2, 8).unwrap();
                let xy = x.mul(&y).unwrap();
                let lhs = chi.eval(&xy).unwrap();
                let rhs = chi.eval(&x).unwrap() * chi.eval(&y).unwrap();
                assert!(close(lhs, rhs, 1e-12));
            }
        }
    }

    #[test]
    fn unit_character_conductor() {
        let p = 5;
        assert_eq!(UnitCharacter::trivial(p).conductor(), 0);
        assert_eq!(UnitCharacter::legendre(p).conductor(), 1);
        // a character of full level 2
        let chi = UnitCharacter::new(p, 2, 1);
        assert_eq!(chi.conductor(), 2);
        // index divisible by p descends
        let chi2 = UnitCharacter::new(p, 2, 5);
        assert_eq!(chi2.conductor(), 1);
    }

    #[test]
    fn dlog_consistency() {
        let p = 7;
        let g = primitive_root(p);
        for k in 1..=3u32 {
            let pk = p_pow(p, k);
            let mut acc: u128 = 1;
            for i in 0..phi_pk(p, k) {
                assert_eq!(dlog(p, k, acc), i);
                acc = acc * g as u128 % pk;
            }
        }
    }
}
