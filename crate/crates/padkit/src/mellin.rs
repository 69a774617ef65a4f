//! The spectral engine: Mellin transforms of measures as rational functions
//! in `t = p^{-s}` per unit character, Tate gamma factors defined
//! operationally as kernel symbols, and the scattering product `mu_X`.
//!
//! The Mellin entry of a measure `f` at the unit character `eta` is
//! `sum_k t^k * int_{v(x)=k} eta^{-1}(u(x)) f(dx)`, i.e. the transform at
//! `chi = eta |.|^s` with `t = p^{-s}`. Step parts give Laurent polynomials,
//! germ tails give geometric series with poles at `t0 = zeta * p^a`; a pole
//! tag records whether the series expands toward 0 or toward infinity.

use crate::err::{Error, Result};
use crate::exec;
use crate::measure::{
    Anchor, AsymptoticMeasure, Ball, Coordinate, GermTerm, Kind, PScalar, QuadEta, SteppedMeasure,
};
use crate::padic::{p_pow, phi_pk, psi_pk, ExactRoot, UnitCharacter};
use crate::{C64, Q};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

// ---------------------------------------------------------------------------
// Laurent polynomials
// ---------------------------------------------------------------------------

pub type Laurent = BTreeMap<i64, C64>;

fn laurent_add(a: &Laurent, b: &Laurent) -> Laurent {
    let mut out = a.clone();
    for (&k, &v) in b {
        *out.entry(k).or_insert(C64::new(0.0, 0.0)) += v;
    }
    trim(&mut out);
    out
}

fn laurent_mul(a: &Laurent, b: &Laurent) -> Laurent {
    let mut out = Laurent::new();
    for (&i, &x) in a {
        for (&j, &y) in b {
            *out.entry(i + j).or_insert(C64::new(0.0, 0.0)) += x * y;
        }
    }
    trim(&mut out);
    out
}

fn laurent_scale(a: &Laurent, s: C64) -> Laurent {
    a.iter().map(|(&k, &v)| (k, v * s)).collect()
}

fn laurent_eval(a: &Laurent, t: C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (&k, &v) in a {
        acc += v * t.powi(k as i32);
    }
    acc
}

fn laurent_scale_norm(a: &Laurent) -> f64 {
    a.values().map(|v| v.norm()).fold(0.0, f64::max)
}

fn trim(a: &mut Laurent) {
    let scale = laurent_scale_norm(a).max(1e-300);
    a.retain(|_, v| v.norm() > 1e-13 * scale);
}

/// Divide P by (1 - t/t0); P must vanish at t0 (checked to tolerance).
fn laurent_divide_root(pnum: &Laurent, t0: C64) -> Result<Laurent> {
    if pnum.is_empty() {
        return Ok(Laurent::new());
    }
    // (1 - t/t0) Q = P with Q = sum q_k t^k: p_k = q_k - q_{k-1}/t0
    let lo = *pnum.keys().next().unwrap();
    let hi = *pnum.keys().last().unwrap();
    let mut out = Laurent::new();
    let mut carry = C64::new(0.0, 0.0); // q_{k-1}
    for k in lo..=hi {
        let pk = pnum.get(&k).copied().unwrap_or(C64::new(0.0, 0.0));
        let qk = pk + carry / t0;
        out.insert(k, qk);
        carry = qk;
    }
    let rem = carry / t0;
    let scale = laurent_scale_norm(pnum).max(1e-300);
    if rem.norm() > 1e-8 * scale {
        return Err(Error::NonRationalEntry(format!(
            "division by (1 - t/t0) leaves remainder {:.3e}",
            rem.norm() / scale
        )));
    }
    trim(&mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// poles and rational functions
// ---------------------------------------------------------------------------

/// Which side of the regularity annulus a pole sits on: `Zero` poles encode
/// germ tails at 0 (series in positive powers of t), `Inf` poles encode
/// tails at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoleSide {
    Zero,
    Inf,
}

/// Exact pole location `t0 = zeta * p^a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PoleTag {
    pub a: Q,
    pub zeta: ExactRoot,
    pub side: PoleSide,
}

impl PoleTag {
    pub fn location(&self, p: u64) -> C64 {
        let pf = p as f64;
        self.zeta.value() * pf.powf(*self.a.numer() as f64 / *self.a.denom() as f64)
    }
}

/// Rational function `num(t) / prod (1 - t/t0)^mult` with `num` a Laurent
/// polynomial and exactly tagged pole locations.
#[derive(Clone, Debug, Default)]
pub struct RatFn {
    pub num: Laurent,
    pub den: Vec<(PoleTag, u8)>,
}

impl RatFn {
    pub fn zero() -> Self {
        RatFn { num: Laurent::new(), den: vec![] }
    }
    pub fn constant(c: C64) -> Self {
        let mut num = Laurent::new();
        if c.norm() > 0.0 {
            num.insert(0, c);
        }
        RatFn { num, den: vec![] }
    }
    pub fn monomial(k: i64, c: C64) -> Self {
        let mut num = Laurent::new();
        if c.norm() > 0.0 {
            num.insert(k, c);
        }
        RatFn { num, den: vec![] }
    }
    pub fn is_zero(&self) -> bool {
        self.num.is_empty()
    }

    fn den_poly(p: u64, den: &[(PoleTag, u8)]) -> Laurent {
        let mut acc = Laurent::new();
        acc.insert(0, C64::new(1.0, 0.0));
        for (tag, mult) in den {
            let t0 = tag.location(p);
            for _ in 0..*mult {
                let mut factor = Laurent::new();
                factor.insert(0, C64::new(1.0, 0.0));
                factor.insert(1, -C64::new(1.0, 0.0) / t0);
                acc = laurent_mul(&acc, &factor);
            }
        }
        acc
    }

    pub fn eval(&self, p: u64, t: C64) -> C64 {
        let d = laurent_eval(&Self::den_poly(p, &self.den), t);
        laurent_eval(&self.num, t) / d
    }

    pub fn add(&self, p: u64, other: &RatFn) -> RatFn {
        // common denominator: union with max multiplicities
        let mut den: Vec<(PoleTag, u8)> = self.den.clone();
        for (tag, mult) in &other.den {
            if let Some(entry) = den.iter_mut().find(|(t, _)| t == tag) {
                entry.1 = entry.1.max(*mult);
            } else {
                den.push((*tag, *mult));
            }
        }
        let extra_self: Vec<(PoleTag, u8)> = den
            .iter()
            .map(|(tag, mult)| {
                let have = self.den.iter().find(|(t, _)| t == tag).map(|(_, m)| *m).unwrap_or(0);
                (*tag, mult - have)
            })
            .filter(|(_, m)| *m > 0)
            .collect();
        let extra_other: Vec<(PoleTag, u8)> = den
            .iter()
            .map(|(tag, mult)| {
                let have = other.den.iter().find(|(t, _)| t == tag).map(|(_, m)| *m).unwrap_or(0);
                (*tag, mult - have)
            })
            .filter(|(_, m)| *m > 0)
            .collect();
        let num = laurent_add(
            &laurent_mul(&self.num, &Self::den_poly(p, &extra_self)),
            &laurent_mul(&other.num, &Self::den_poly(p, &extra_other)),
        );
        RatFn { num, den }.reduced(p)
    }

    pub fn mul(&self, p: u64, other: &RatFn) -> RatFn {
        if self.is_zero() || other.is_zero() {
            return RatFn::zero();
        }
        let mut den = self.den.clone();
        for (tag, mult) in &other.den {
            if let Some(entry) = den.iter_mut().find(|(t, _)| t == tag) {
                entry.1 += mult;
            } else {
                den.push((*tag, *mult));
            }
        }
        RatFn { num: laurent_mul(&self.num, &other.num), den }.reduced(p)
    }

    pub fn scale(&self, s: C64) -> RatFn {
        RatFn { num: laurent_scale(&self.num, s), den: self.den.clone() }
    }

    /// Cancel denominator factors that divide the numerator.
    pub fn reduced(&self, p: u64) -> RatFn {
        let mut num = self.num.clone();
        let mut den: Vec<(PoleTag, u8)> = vec![];
        if num.is_empty() {
            return RatFn::zero();
        }
        for (tag, mult) in &self.den {
            let t0 = tag.location(p);
            let mut left = *mult;
            while left > 0 {
                let scale = laurent_scale_norm(&num).max(1e-300);
                if laurent_eval(&num, t0).norm() > 1e-10 * scale * t0.norm().max(1.0) {
                    break;
                }
                match laurent_divide_root(&num, t0) {
                    Ok(q) => {
                        num = q;
                        left -= 1;
                    }
                    Err(_) => break,
                }
            }
            if left > 0 {
                den.push((*tag, left));
            }
        }
        RatFn { num, den }
    }

    /// Substitute t -> p^s * t^k (k != 0). Implements composition with a
    /// degree-k cocharacter plus an |.|^s twist on symbols.
    pub fn subst(&self, p: u64, s: Q, k: i64) -> RatFn {
        assert!(k != 0);
        let pf = p as f64;
        let sf = *s.numer() as f64 / *s.denom() as f64;
        let mut num = Laurent::new();
        for (&j, &c) in &self.num {
            *num.entry(k * j).or_insert(C64::new(0.0, 0.0)) += c * pf.powf(sf * j as f64);
        }
        let mut den: Vec<(PoleTag, u8)> = vec![];
        let mut extra_num = RatFn { num, den: vec![] };
        for (tag, mult) in &self.den {
            // factor (1 - p^s t^k / t0), t0 = zeta p^a; w = p^(s-a) zeta^{-1}
            let w_a = s - tag.a;
            let w_zeta = tag.zeta.inv();
            if k > 0 {
                // roots t = (1/w)^{1/k} omega^i -> tags a' = (a-s)/k
                let diff = tag.a - s;
                let a_new = Q::new(*diff.numer(), *diff.denom() * k);
                let base = tag.zeta.kth_root(k as u32);
                for i in 0..k {
                    let zeta_new = base.mul(&ExactRoot::new(i, k as u32));
                    let side = side_of(a_new, tag.side);
                    for _ in 0..*mult {
                        push_den(&mut den, PoleTag { a: a_new, zeta: zeta_new, side });
                    }
                }
            } else {
                let kp = (-k) as u32;
                // (1 - w t^{-kp}) = -w t^{-kp} * prod_i (1 - t/rho_i), with
                // rho_i = w^{1/kp} omega^i; the constant is fixed by t -> 0.
                let w_val = C64::new(pf.powf(*w_a.numer() as f64 / *w_a.denom() as f64), 0.0)
                    * w_zeta.value();
                let a_new = Q::new(*w_a.numer(), *w_a.denom() * kp as i64);
                let base = w_zeta.kth_root(kp);
                for _ in 0..*mult {
                    extra_num = extra_num.mul(
                        p,
                        &RatFn::monomial(kp as i64, C64::new(-1.0, 0.0) / w_val),
                    );
                }
                for i in 0..kp {
                    let zeta_new = base.mul(&ExactRoot::new(i as i64, kp));
                    let side = side_of(a_new, tag.side);
                    for _ in 0..*mult {
                        push_den(&mut den, PoleTag { a: a_new, zeta: zeta_new, side });
                    }
                }
            }
        }
        RatFn { num: extra_num.num, den }.reduced(p)
    }

    /// Expanded (num, den) coefficient vectors with nonnegative powers,
    /// denominator monic-normalized at degree 0.
    pub fn to_poly_pair(&self, p: u64) -> (Vec<C64>, Vec<C64>) {
        let den = Self::den_poly(p, &self.den);
        let lo = self.num.keys().next().copied().unwrap_or(0).min(0);
        let shift = -lo;
        let mut num_shifted: Vec<C64> = vec![];
        let hi = self.num.keys().last().copied().unwrap_or(0);
        for k in lo..=hi {
            num_shifted.push(self.num.get(&k).copied().unwrap_or(C64::new(0.0, 0.0)));
        }
        if num_shifted.is_empty() {
            num_shifted.push(C64::new(0.0, 0.0));
        }
        let mut den_shifted: Vec<C64> = vec![C64::new(0.0, 0.0); shift as usize];
        let dhi = den.keys().last().copied().unwrap_or(0);
        for k in 0..=dhi {
            den_shifted.push(den.get(&k).copied().unwrap_or(C64::new(0.0, 0.0)));
        }
        (num_shifted, den_shifted)
    }

    /// Partial fractions: Laurent remainder plus `(tag, order, coef)` terms
    /// meaning `coef / (1 - t/t0)^order`.
    pub fn partial_fractions(&self, p: u64) -> Result<(Laurent, Vec<(PoleTag, u8, C64)>)> {
        let mut num = self.num.clone();
        let mut remaining: Vec<(PoleTag, u8)> = self.den.clone();
        let mut terms = vec![];
        while let Some((tag, mult)) = remaining.pop() {
            let t0 = tag.location(p);
            let others: Vec<(PoleTag, u8)> = remaining.clone();
            let mut m = mult;
            while m > 0 {
                // f = num / ((1-t/t0)^m * D(t)); c = num(t0)/D(t0)
                let d_poly = Self::den_poly(p, &others);
                let d_at = laurent_eval(&d_poly, t0);
                if d_at.norm() < 1e-12 {
                    return Err(Error::PoleOnContour(format!(
                        "coincident poles at |t0| = {}",
                        t0.norm()
                    )));
                }
                let c = laurent_eval(&num, t0) / d_at;
                terms.push((tag, m, c));
                // num <- (num - c * D) / (1 - t/t0)
                let num_minus = laurent_add(&num, &laurent_scale(&d_poly, -c));
                num = laurent_divide_root(&num_minus, t0)?;
                m -= 1;
            }
        }
        Ok((num, terms))
    }
}

fn push_den(den: &mut Vec<(PoleTag, u8)>, tag: PoleTag) {
    if let Some(entry) = den.iter_mut().find(|(t, _)| *t == tag) {
        entry.1 += 1;
    } else {
        den.push((tag, 1));
    }
}

/// Default side rule: outside the unit circle means a tail at zero, inside
/// means a tail at infinity; on the circle keep the source side.
fn side_of(a: Q, source: PoleSide) -> PoleSide {
    use std::cmp::Ordering;
    match a.cmp(&Q::new(0, 1)) {
        Ordering::Greater => PoleSide::Zero,
        Ordering::Less => PoleSide::Inf,
        Ordering::Equal => source,
    }
}

// ---------------------------------------------------------------------------
// Mellin symbols
// ---------------------------------------------------------------------------

/// Rational Mellin data per unit character of (Z/p^m)^x. Entry `j` belongs
/// to the character `chi_j` with `chi_j(g) = e(2 pi i j / phi(p^m))` against
/// the fixed primitive root `g`.
#[derive(Clone, Debug)]
pub struct MellinSymbol {
    pub p: u64,
    pub m: u32,
    pub entries: Vec<RatFn>,
}

impl MellinSymbol {
    pub fn zero(p: u64, m: u32) -> Self {
        MellinSymbol { p, m, entries: vec![RatFn::zero(); phi_pk(p, m) as usize] }
    }

    pub fn character(&self, j: u64) -> UnitCharacter {
        UnitCharacter::new(self.p, self.m, j)
    }

    /// Index of a character given at any modulus <= m.
    pub fn index_of(&self, chi: &UnitCharacter) -> u64 {
        chi.at_modulus(self.m).index
    }

    /// Componentwise product (spec: symbol_mul).
    pub fn mul(&self, other: &MellinSymbol) -> Result<MellinSymbol> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        if self.m != other.m {
            return Err(Error::LevelExceedsBound { level: self.m.max(other.m), bound: self.m.min(other.m) });
        }
        let entries = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a.mul(self.p, b))
            .collect();
        Ok(MellinSymbol { p: self.p, m: self.m, entries })
    }

    /// Multiply each entry by the tate gamma factor for its character, with
    /// kernel shift `a` and psi-sign `sigma`.
    pub fn mul_gamma(&self, a: Q, sigma: i32) -> MellinSymbol {
        let entries = self
            .entries
            .iter()
            .enumerate()
            .map(|(j, e)| {
                if e.is_zero() {
                    RatFn::zero()
                } else {
                    let chi = self.character(j as u64);
                    e.mul(self.p, &tate_gamma(&chi, a, sigma))
                }
            })
            .collect();
        MellinSymbol { p: self.p, m: self.m, entries }
    }

    /// Symbol of the measure |x|^r f: substitute t -> p^r t in every entry.
    pub fn twist_abs(&self, r: Q) -> MellinSymbol {
        let entries = self.entries.iter().map(|e| {
            if e.is_zero() {
                RatFn::zero()
            } else {
                e.subst(self.p, r, 1)
            }
        }).collect();
        MellinSymbol { p: self.p, m: self.m, entries }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut entries = vec![];
        for (j, e) in self.entries.iter().enumerate() {
            if e.is_zero() {
                continue;
            }
            let (num, den) = e.to_poly_pair(self.p);
            let chi = self.character(j as u64);
            entries.push(serde_json::json!({
                "eta": { "modulus_exp": self.m, "index": j as u64, "conductor": chi.conductor() },
                "num": num.iter().map(|c| vec![c.re, c.im]).collect::<Vec<_>>(),
                "den": den.iter().map(|c| vec![c.re, c.im]).collect::<Vec<_>>(),
            }));
        }
        serde_json::json!({ "p": self.p, "m": self.m, "entries": entries })
    }
}

// ---------------------------------------------------------------------------
// mellin / inverse_mellin
// ---------------------------------------------------------------------------

/// Mellin transform of an asymptotic measure with conductor bound m.
pub fn mellin(f: &AsymptoticMeasure, m: u32) -> Result<MellinSymbol> {
    let p = f.p;
    let mut sym = MellinSymbol::zero(p, m);
    let phi = phi_pk(p, m);
    // step part
    for piece in &f.step.pieces {
        let v = piece.ball.shell(p).ok_or_else(|| {
            Error::KindMismatch("step piece containing 0 has no Mellin shell decomposition".into())
        })?;
        let level = (piece.ball.k - v) as u32; // multiplicative level >= 1
        if level > m {
            return Err(Error::LevelExceedsBound { level, bound: m });
        }
        let pf = p as f64;
        let d_mulx = match piece.kind {
            Kind::Dmulx => piece.density,
            Kind::Dx => piece.density * (1.0 - 1.0 / pf) * pf.powi(-v as i32),
        };
        let u0 = unit_of_center(p, &piece.ball.center, m);
        let coset_vol = 1.0 / phi_pk(p, level) as f64;
        for j in 0..phi {
            let chi = sym.character(j);
            if chi.conductor() > level {
                continue;
            }
            let val = chi.inverse().eval(u0);
            let c = d_mulx * val * coset_vol;
            if c.norm() > 0.0 {
                let entry = &mut sym.entries[j as usize];
                *entry.num.entry(v).or_insert(C64::new(0.0, 0.0)) += c;
            }
        }
    }
    // drop cross-character cancellation dust from the step assembly
    let global = sym
        .entries
        .iter()
        .map(|e| laurent_scale_norm(&e.num))
        .fold(0.0, f64::max);
    if global > 0.0 {
        for e in sym.entries.iter_mut() {
            e.num.retain(|_, v| v.norm() > 1e-12 * global);
        }
    }
    for g in &f.germs {
        let j = match germ_char_index(p, m, g.eta) {
            Some(j) => j,
            None => return Err(Error::NonRationalEntry("germ character outside bound".into())),
        };
        let contribution = germ_ratfn(p, g)?;
        sym.entries[j as usize] = sym.entries[j as usize].add(p, &contribution);
    }
    Ok(sym)
}

fn unit_of_center(p: u64, c: &PScalar, m: u32) -> u128 {
    // unit part of the (nonzero) center mod p^m
    let mut num = c.numer();
    let mut e = c.denom_exp() as i64;
    while num % p as i128 == 0 {
        num /= p as i128;
        e -= 1;
    }
    let _ = e;
    (num.rem_euclid(p_pow(p, m) as i128)) as u128
}

fn germ_char_index(p: u64, m: u32, eta: QuadEta) -> Option<u64> {
    let chi = if eta.ramified() { UnitCharacter::legendre(p) } else { UnitCharacter::trivial(p) };
    if chi.conductor() > m {
        return None;
    }
    Some(chi.at_modulus(m).index)
}

/// Rational-function form of one germ tail's Mellin entry.
fn germ_ratfn(p: u64, g: &GermTerm) -> Result<RatFn> {
    let pf = p as f64;
    let a = *g.a.numer() as f64 / *g.a.denom() as f64;
    let zeta_sign = g.eta.zeta(); // +/- 1
    let zeta_exact = if zeta_sign > 0.0 { ExactRoot::one() } else { ExactRoot::minus_one() };
    match g.anchor {
        Anchor::Zero => {
            let tag = PoleTag { a: g.a, zeta: zeta_exact.inv(), side: PoleSide::Zero };
            // w = zeta p^{-a} t; sum_{k>=K} (-k)^e w^k
            let wk = |k: i64| -> C64 {
                C64::new(zeta_sign, 0.0).powi(k as i32) * pf.powf(-a * k as f64)
            };
            let k0 = g.cutoff;
            if g.e == 0 {
                // coeff w^K / (1-w)
                let mut num = Laurent::new();
                num.insert(k0, g.coeff * wk(k0));
                Ok(RatFn { num, den: vec![(tag, 1)] })
            } else {
                // -coeff w^K (K - (K-1) w) / (1-w)^2
                let mut num = Laurent::new();
                num.insert(k0, -g.coeff * wk(k0) * k0 as f64);
                *num.entry(k0 + 1).or_insert(C64::new(0.0, 0.0)) +=
                    g.coeff * wk(k0 + 1) * (k0 - 1) as f64;
                trim(&mut num);
                Ok(RatFn { num, den: vec![(tag, 2)] })
            }
        }
        Anchor::Infinity => {
            // W = zeta^{-1} p^{a} / t; sum_{j>=K} j^e W^j; pole at t0 = zeta^{-1} p^a
            let tag = PoleTag { a: g.a, zeta: zeta_exact.inv(), side: PoleSide::Inf };
            let t0 = tag.location(p);
            let wj = |j: i64| -> C64 { t0.powi(j as i32) };
            let k0 = g.cutoff;
            // 1/(1-W) = -zeta p^{-a} t / (1 - t/t0)
            let inv1 = RatFn {
                num: { let mut n = Laurent::new(); n.insert(1, -C64::new(1.0, 0.0) / t0); n },
                den: vec![(tag, 1)],
            };
            if g.e == 0 {
                // coeff W^K / (1-W)
                Ok(inv1.mul(p, &RatFn::monomial(-k0, g.coeff * wj(k0))))
            } else {
                // coeff W^K [ K/(1-W) + W/(1-W)^2 ];
                // W/(1-W)^2 = (t/t0) / (1-t/t0)^2
                let w_inv2 = RatFn {
                    num: { let mut n = Laurent::new(); n.insert(1, C64::new(1.0, 0.0) / t0); n },
                    den: vec![(tag, 2)],
                };
                let part = inv1.scale(C64::new(k0 as f64, 0.0)).add(p, &w_inv2);
                Ok(part.mul(p, &RatFn::monomial(-k0, g.coeff * wj(k0))))
            }
        }
        Anchor::At(_) => Err(Error::NonRationalEntry(
            "shift germs to the origin before taking Mellin transforms".into(),
        )),
    }
}

/// Inverse Mellin transform: Laurent parts become step shells at level m,
/// poles become germ terms with canonical cutoffs just past the step window.
pub fn inverse_mellin(sym: &MellinSymbol, coord: Coordinate) -> Result<AsymptoticMeasure> {
    let p = sym.p;
    let m = sym.m.max(1);
    let phi = phi_pk(p, m) as usize;
    let mut decomposed = Vec::with_capacity(phi);
    let mut k_lo = i64::MAX;
    let mut k_hi = i64::MIN;
    for entry in &sym.entries {
        let (laurent, poles) = entry.partial_fractions(p)?;
        if let (Some(&lo), Some(&hi)) = (laurent.keys().next(), laurent.keys().last()) {
            k_lo = k_lo.min(lo);
            k_hi = k_hi.max(hi);
        }
        decomposed.push((laurent, poles));
    }
    if k_lo > k_hi {
        k_lo = 0;
        k_hi = -1; // empty step window
    }
    let cut_zero = k_hi + 1;
    let cut_inf = 1 - k_lo;
    let mut germs: Vec<GermTerm> = vec![];
    // shell coefficient table: coefs[shell][j]
    let mut shell_coefs: BTreeMap<i64, Vec<C64>> = BTreeMap::new();
    for (j, (laurent, poles)) in decomposed.iter().enumerate() {
        for (&k, &c) in laurent {
            shell_coefs.entry(k).or_insert_with(|| vec![C64::new(0.0, 0.0); phi])[j] += c;
        }
        for &(tag, order, coef) in poles {
            if coef.norm() == 0.0 {
                continue;
            }
            // representability as a quadratic germ
            let chi = sym.character(j as u64);
            let eta = quad_eta_of(p, m, &chi, &tag)?;
            let t0 = tag.location(p);
            match tag.side {
                PoleSide::Zero => {
                    // series sum_{k>=0} b_k t^k, b_k = coef * t0^{-k} * (k+1 if order 2)
                    for k in 0..cut_zero.max(0) {
                        let w = t0.powi(-k as i32);
                        let b = if order == 1 {
                            coef * w
                        } else {
                            coef * w * (k + 1) as f64
                        };
                        shell_coefs
                            .entry(k)
                            .or_insert_with(|| vec![C64::new(0.0, 0.0); phi])[j] += b;
                        k_lo = k_lo.min(k);
                    }
                    let k0 = cut_zero.max(0);
                    if order == 1 {
                        germs.push(GermTerm { anchor: Anchor::Zero, a: tag.a, eta, e: 0, coeff: coef, cutoff: k0 });
                    } else {
                        // (k+1) = 1 - (-k): e=0 coeff + e=1 coeff (-coef)
                        germs.push(GermTerm { anchor: Anchor::Zero, a: tag.a, eta, e: 0, coeff: coef, cutoff: k0 });
                        germs.push(GermTerm { anchor: Anchor::Zero, a: tag.a, eta, e: 1, coeff: -coef, cutoff: k0 });
                    }
                }
                PoleSide::Inf => {
                    // order 1: -sum_{j>=1} t0^{j} t^{-j}; order 2: sum_{j>=2} (j-1) t0^j t^{-j}
                    for k in (k_lo.min(-1)..=-1).rev() {
                        let jj = -k;
                        let b = if order == 1 {
                            -coef * t0.powi(jj as i32)
                        } else {
                            coef * (jj - 1) as f64 * t0.powi(jj as i32)
                        };
                        if k >= k_lo {
                            shell_coefs
                                .entry(k)
                                .or_insert_with(|| vec![C64::new(0.0, 0.0); phi])[j] += b;
                        }
                    }
                    let k0 = cut_inf.max(1);
                    // density at shell k (k <= -k0): matches germ coeff * p^{-ak} zeta'^k (-k)^e
                    if order == 1 {
                        germs.push(GermTerm { anchor: Anchor::Infinity, a: tag.a, eta, e: 0, coeff: -coef, cutoff: k0 });
                    } else {
                        // (j-1) with j = -k: e=1 coeff +coef, e=0 coeff -coef
                        germs.push(GermTerm { anchor: Anchor::Infinity, a: tag.a, eta, e: 0, coeff: -coef, cutoff: k0 });
                        germs.push(GermTerm { anchor: Anchor::Infinity, a: tag.a, eta, e: 1, coeff: coef, cutoff: k0 });
                    }
                }
            }
        }
    }
    // resynthesize shells: h_k(g^i) = sum_j coefs[j] omega^{ij}
    let mut step = SteppedMeasure::zero(p);
    let g = crate::padic::primitive_root(p);
    let pm = p_pow(p, m);
    // unit representatives in generator order
    let mut units: Vec<u128> = Vec::with_capacity(phi);
    {
        let mut acc: u128 = 1;
        for _ in 0..phi {
            units.push(acc);
            acc = acc * g as u128 % pm;
        }
    }
    for (&k, coefs) in &shell_coefs {
        if coefs.iter().all(|c| c.norm() < 1e-300) {
            continue;
        }
        let dens = exec::map_cells(phi, |i| {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &c) in coefs.iter().enumerate() {
                if c.norm() > 0.0 {
                    acc += c * crate::padic::root_of_unity(phi as u64, (i as i64) * (j as i64));
                }
            }
            acc
        });
        let scale = dens.iter().map(|d| d.norm()).fold(0.0, f64::max);
        for (i, &d) in dens.iter().enumerate() {
            if d.norm() <= 1e-12 * scale.max(1e-300) {
                continue;
            }
            let center = PScalar::shell_point(p, k, units[i]);
            step.push(Ball::new(p, center, k + m as i64), d, Kind::Dmulx);
        }
    }
    germs.retain(|g| g.coeff.norm() > 1e-300);
    let out = AsymptoticMeasure { p, coord, step, germs };
    Ok(out)
}

fn quad_eta_of(p: u64, m: u32, chi: &UnitCharacter, tag: &PoleTag) -> Result<QuadEta> {
    let zeta_inv = tag.zeta.inv();
    let plus = zeta_inv.is_one();
    let minus = zeta_inv == ExactRoot::minus_one();
    if !plus && !minus {
        return Err(Error::NonRationalEntry(format!(
            "pole direction of order {} is not quadratic",
            tag.zeta.order()
        )));
    }
    let trivial = chi.is_trivial();
    let legendre = *chi == UnitCharacter::legendre(p).at_modulus(m);
    if trivial && plus {
        Ok(QuadEta::Triv)
    } else if trivial && minus {
        Ok(QuadEta::Ur)
    } else if legendre && plus {
        Ok(QuadEta::Ram1)
    } else if legendre && minus {
        Ok(QuadEta::Ram2)
    } else {
        Err(Error::NonRationalEntry(
            "pole attached to a non-quadratic unit character".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// Tate gamma factors
// ---------------------------------------------------------------------------

/// Shell integral I_k(eta) = int_{v(x)=k} psi_sigma(x) eta^{-1}(u(x)) dx,
/// computed by direct enumeration of residue classes (k < 0).
pub fn kernel_shell_integral(p: u64, chi: &UnitCharacter, sigma: i32, k: i64) -> C64 {
    if k >= 0 {
        // psi = 1 on the shell; orthogonality of eta
        return if chi.is_trivial() {
            C64::new((p as f64).powi(-k as i32) * (1.0 - 1.0 / p as f64), 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
    }
    let depth = (-k) as u32;
    let level = depth.max(chi.conductor().max(1));
    let pl = p_pow(p, level);
    let chi_m = chi.at_modulus(level.max(1));
    // volume per residue class u mod p^level inside the shell
    let vol = (p as f64).powi(-k as i32) * (1.0 - 1.0 / p as f64) / phi_pk(p, level) as f64;
    let mut acc = C64::new(0.0, 0.0);
    let mut u: u128 = 1;
    while u < pl {
        if u % p as u128 != 0 {
            // x = p^k u: psi(x) = e(sigma * u / p^depth)
            let ps = psi_pk(p, depth, sigma, (u % p_pow(p, depth)) as i64);
            acc += ps * chi_m.inverse().eval(u) * vol;
        }
        u += 1;
    }
    acc
}

/// Tate gamma factor, defined operationally as the Mellin symbol of the
/// kernel |x|^a psi_sigma(x) dx at the unit character `chi`: the multiplier
/// acting on the chi-component under multiplicative convolution.
///
/// For trivial chi this is (1 - p^a/t)/(1 - t/p^{a+1}); for ramified chi of
/// conductor c it is the monomial p^{ac} g(chi, psi_sigma) t^{-c} with
/// g the Gauss sum of modulus p^{c/2}. Cached per (p, chi, a, sigma).
pub fn tate_gamma(chi: &UnitCharacter, a: Q, sigma: i32) -> RatFn {
    static CACHE: OnceLock<Mutex<HashMap<(u64, u32, u64, Q, i32), RatFn>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let cond = chi.conductor();
    let chi_min = if cond == 0 { UnitCharacter::trivial(chi.p) } else { chi.at_modulus(cond) };
    let key = (chi.p, cond, chi_min.index, a, sigma);
    if let Some(f) = cache.lock().unwrap().get(&key) {
        return f.clone();
    }
    let p = chi.p;
    let pf = p as f64;
    let af = *a.numer() as f64 / *a.denom() as f64;
    let f = if cond == 0 {
        // shells k >= 0: geometric series (1-1/p)/(1 - t/p^{a+1});
        // shell k = -1 contributes -p^a t^{-1}; deeper shells vanish.
        let tag = PoleTag { a: a + Q::new(1, 1), zeta: ExactRoot::one(), side: PoleSide::Zero };
        let mut num = Laurent::new();
        num.insert(-1, C64::new(-pf.powf(af), 0.0));
        num.insert(0, C64::new(1.0, 0.0));
        RatFn { num, den: vec![(tag, 1)] }
    } else {
        let gauss = kernel_shell_integral(p, &chi_min, sigma, -(cond as i64));
        RatFn::monomial(-(cond as i64), gauss * pf.powf(af * cond as f64))
    };
    cache.lock().unwrap().insert(key, f.clone());
    f
}

/// Radius of the circle on which |tate_gamma(chi, a, sigma)| = 1: the
/// kernel's critical circle |t| = p^{a + 1/2}. The spec's "unit circle"
/// statement is in the normalized variable t / p^{a+1/2}.
pub fn gamma_unitary_radius(p: u64, a: Q) -> f64 {
    (p as f64).powf(*a.numer() as f64 / *a.denom() as f64 + 0.5)
}

// ---------------------------------------------------------------------------
// mu_X scattering products
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootTypeTG {
    T,
    G,
}

/// Parameters of the scattering product: the s-values of the row.
#[derive(Clone, Copy, Debug)]
pub struct MuXParams {
    pub root_type: RootTypeTG,
    pub s1: Q,
    pub s2: Q,
    pub s0: Q,
}

/// One abelian gamma factor gamma(chi, lambda-check, s, psi_sigma) as a
/// transformation on symbol entries: at the component (eta, t) it evaluates
/// the kernel gamma of eta^k at p^s t^k. Degree conventions: type T uses
/// gamma-check/2 -> degree 1 and -gamma-check -> degree -2 in the xi
/// coordinate; type G uses gamma-check -> degree 1 and -gamma-check -> -1.
pub fn gamma_factor_entry(p: u64, m: u32, j: u64, degree: i64, s: Q, sigma: i32) -> RatFn {
    let chi = UnitCharacter::new(p, m, j);
    let chi_k = chi.pow(degree);
    let base = tate_gamma(&chi_k, Q::new(0, 1), sigma);
    base.subst(p, s, degree)
}

/// The scattering factor mu_X as a Mellin symbol.
pub fn mu_x(params: &MuXParams, p: u64, m: u32) -> MellinSymbol {
    let phi = phi_pk(p, m);
    let factors: Vec<(i64, Q, i32)> = match params.root_type {
        RootTypeTG::T => vec![
            (1, Q::new(1, 1) - params.s1, -1),
            (1, Q::new(1, 1) - params.s2, 1),
            (-2, Q::new(0, 1), 1),
        ],
        RootTypeTG::G => vec![
            (1, Q::new(1, 1) - params.s0, -1),
            (-1, Q::new(0, 1), 1),
        ],
    };
    let entries = (0..phi)
        .map(|j| {
            let mut acc = RatFn::constant(C64::new(1.0, 0.0));
            for &(deg, s, sigma) in &factors {
                acc = acc.mul(p, &gamma_factor_entry(p, m, j, deg, s, sigma));
            }
            acc
        })
        .collect();
    MellinSymbol { p, m, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{unit_group_dmulx, Region};

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn mellin_unit_group() {
        let p = 5;
        let f = unit_group_dmulx(p, Coordinate::xi());
        let sym = mellin(&f, 2).unwrap();
        // trivial entry is the constant 1, all others vanish
        for (j, e) in sym.entries.iter().enumerate() {
            if j == 0 {
                assert_eq!(e.den.len(), 0);
                assert!((laurent_eval(&e.num, c(0.3)) - c(1.0)).norm() < 1e-12);
            } else {
                assert!(e.is_zero(), "entry {j} should vanish");
            }
        }
    }

    #[test]
    fn mellin_shell_indicator() {
        let p = 3;
        // indicator of the shell v = 1 w.r.t. d^x: entry t at trivial character
        let mut step = SteppedMeasure::zero(p);
        for u in 1..p {
            step.push(
                Ball::new(p, PScalar::shell_point(p, 1, u as u128), 2),
                c(1.0),
                Kind::Dmulx,
            );
        }
        let f = AsymptoticMeasure::from_step(step, Coordinate::xi());
        let sym = mellin(&f, 2).unwrap();
        let t = C64::new(0.4, 0.1);
        assert!((sym.entries[0].eval(p, t) - t).norm() < 1e-12);
        for j in 1..sym.entries.len() {
            assert!(sym.entries[j].is_zero());
        }
    }

    #[test]
    fn mellin_germ_geometric() {
        let p = 3;
        // germ |x|^a d^x on v >= K: entry (p^{-a} t)^K / (1 - p^{-a} t)
        let a = Q::new(1, 1);
        let f = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step: SteppedMeasure::zero(p),
            germs: vec![GermTerm {
                anchor: Anchor::Zero,
                a,
                eta: QuadEta::Triv,
                e: 0,
                coeff: c(1.0),
                cutoff: 2,
            }],
        };
        let sym = mellin(&f, 1).unwrap();
        let t = C64::new(0.7, 0.2);
        let w = t / 3.0;
        let expect = w * w / (c(1.0) - w);
        assert!((sym.entries[0].eval(p, t) - expect).norm() < 1e-10);
    }

    #[test]
    fn roundtrip_step_measure() {
        let p = 3;
        let mut rng = crate::rng::CounterRng::new(21);
        let mut step = SteppedMeasure::zero(p);
        for _ in 0..6 {
            let v = rng.range_i64(-2, 2);
            let u = 1 + rng.below(p_pow(p, 2) as u64 - 1);
            if u % p as u64 == 0 {
                continue;
            }
            step.push(
                Ball::new(p, PScalar::shell_point(p, v, u as u128), v + 2),
                rng.complex(),
                Kind::Dmulx,
            );
        }
        let f = AsymptoticMeasure::from_step(step.canonicalize().unwrap(), Coordinate::xi());
        let sym = mellin(&f, 2).unwrap();
        let back = inverse_mellin(&sym, Coordinate::xi()).unwrap();
        assert!(back.germs.is_empty());
        for v in -2..=2 {
            for u in 1..p_pow(p, 2) {
                if u % p as u128 == 0 {
                    continue;
                }
                let lhs = f.density_dmulx_cell(v, u, 2).unwrap();
                let rhs = back.density_dmulx_cell(v, u, 2).unwrap();
                assert!((lhs - rhs).norm() < 1e-10, "cell v={v} u={u}");
            }
        }
    }

    #[test]
    fn roundtrip_with_germs() {
        let p = 5;
        let f = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step: SteppedMeasure::zero(p),
            germs: vec![
                GermTerm {
                    anchor: Anchor::Zero,
                    a: Q::new(1, 2),
                    eta: QuadEta::Ram1,
                    e: 0,
                    coeff: C64::new(1.0, -0.5),
                    cutoff: 1,
                },
                GermTerm {
                    anchor: Anchor::Infinity,
                    a: Q::new(-1, 1),
                    eta: QuadEta::Ur,
                    e: 1,
                    coeff: C64::new(0.3, 0.1),
                    cutoff: 2,
                },
            ],
        };
        let sym = mellin(&f, 1).unwrap();
        let back = inverse_mellin(&sym, Coordinate::xi()).unwrap();
        for v in -6..=6i64 {
            for u in 1..p {
                let lhs = f.density_dmulx_cell(v, u as u128, 1).unwrap();
                let rhs = back.density_dmulx_cell(v, u as u128, 1).unwrap();
                assert!((lhs - rhs).norm() < 1e-10, "cell v={v} u={u}");
            }
        }
        // and the total masses over a window agree
        let w = Region::All;
        let lhs = f.integrate(w).unwrap();
        let rhs = back.integrate(w).unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn gamma_trivial_closed_form() {
        let p = 5;
        let chi = UnitCharacter::trivial(p);
        for a in [Q::new(0, 1), Q::new(1, 2), Q::new(-1, 2), Q::new(1, 1)] {
            let g = tate_gamma(&chi, a, 1);
            let pf = p as f64;
            let af = *a.numer() as f64 / *a.denom() as f64;
            for t in [C64::new(0.3, 0.4), C64::new(-1.2, 0.1), C64::new(2.0, -0.7)] {
                let expect = (t - c(pf.powf(af)))
                    / (t * (c(1.0) - t * pf.powf(-af - 1.0)));
                assert!((g.eval(p, t) - expect).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn gamma_ramified_gauss() {
        // ramified quadratic: monomial of modulus p^{a + 1/2} at |t| = 1
        for p in [5u64, 13] {
            let chi = UnitCharacter::legendre(p);
            let g = tate_gamma(&chi, Q::new(0, 1), 1);
            let val = g.eval(p, c(1.0));
            assert!((val.norm() - (p as f64).sqrt()).abs() < 1e-9);
            // constant equals Gauss sum / p^{1/2} up to the monomial
            let mut gauss = C64::new(0.0, 0.0);
            for u in 1..p {
                gauss += psi_pk(p, 1, 1, u as i64)
                    * c(crate::padic::legendre(u, p) as f64);
            }
            let normalized = val / (p as f64).sqrt();
            let expect = gauss / (p as f64).sqrt();
            assert!((normalized - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn gamma_shell_integrals_vanish_below_conductor() {
        let p = 3;
        for chi in [UnitCharacter::trivial(p), UnitCharacter::legendre(p)] {
            let cutoff = chi.conductor().max(1) as i64;
            for k in (cutoff + 1)..=(cutoff + 3) {
                let i = kernel_shell_integral(p, &chi, 1, -k);
                assert!(i.norm() < 1e-10, "I_{} should vanish", -k);
            }
        }
    }

    #[test]
    fn gamma_duality() {
        // gamma(eta, a, sigma)(t) * gamma(eta^{-1}, -a, -sigma)(p/t) = 1
        for p in [3u64, 5, 7] {
            for chi in [UnitCharacter::trivial(p), UnitCharacter::legendre(p)] {
                for a in [Q::new(0, 1), Q::new(1, 2), Q::new(-1, 2)] {
                    for sigma in [1, -1] {
                        let g1 = tate_gamma(&chi, a, sigma);
                        let g2 = tate_gamma(&chi.inverse(), -a, -sigma);
                        for k in 0..8 {
                            let ang = std::f64::consts::TAU * (k as f64 + 0.3) / 8.0;
                            let t = C64::new(ang.cos(), ang.sin()) * 1.7;
                            let lhs = g1.eval(p, t) * g2.eval(p, c(p as f64) / t);
                            assert!(
                                (lhs - c(1.0)).norm() < 1e-9,
                                "duality p={p} cond={} a={a} sigma={sigma}: {lhs}",
                                chi.conductor()
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn gamma_unitary_on_critical_circle() {
        for p in [3u64, 5, 7] {
            for chi in [UnitCharacter::trivial(p), UnitCharacter::legendre(p)] {
                for a in [Q::new(0, 1), Q::new(1, 2)] {
                    let g = tate_gamma(&chi, a, 1);
                    let r = gamma_unitary_radius(p, a);
                    for k in 0..50 {
                        let ang = std::f64::consts::TAU * (k as f64 + 0.17) / 50.0;
                        let t = C64::new(ang.cos(), ang.sin()) * r;
                        assert!(
                            (g.eval(p, t).norm() - 1.0).abs() < 1e-9,
                            "p={p} cond={} a={a}",
                            chi.conductor()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn symbol_mul_identity_and_zero() {
        let p = 3;
        let f = unit_group_dmulx(p, Coordinate::xi());
        let s = mellin(&f, 1).unwrap();
        let id = {
            let mut sym = MellinSymbol::zero(p, 1);
            for e in sym.entries.iter_mut() {
                *e = RatFn::constant(c(1.0));
            }
            sym
        };
        let prod = s.mul(&id).unwrap();
        let t = C64::new(0.2, 0.9);
        for (a, b) in prod.entries.iter().zip(s.entries.iter()) {
            let av = if a.is_zero() { C64::new(0.0, 0.0) } else { a.eval(p, t) };
            let bv = if b.is_zero() { C64::new(0.0, 0.0) } else { b.eval(p, t) };
            assert!((av - bv).norm() < 1e-12);
        }
        let zero = MellinSymbol::zero(p, 1);
        let z = s.mul(&zero).unwrap();
        assert!(z.entries.iter().all(|e| e.is_zero()));
        // (entry t) * (entry t) = entry t^2
        let mono = {
            let mut sym = MellinSymbol::zero(p, 1);
            sym.entries[0] = RatFn::monomial(1, c(1.0));
            sym
        };
        let sq = mono.mul(&mono).unwrap();
        assert!((sq.entries[0].eval(p, t) - t * t).norm() < 1e-12);
    }

    #[test]
    fn mu_x_d2_degenerates_to_two_factor_product() {
        // row D2 has s0 = 1, so 1 - s0 = 0: the symbol must equal the product
        // gamma(chi, gamma-check, 0, psi^{-1}) gamma(chi, -gamma-check, 0, psi).
        let p = 5;
        let m = 1;
        let params = MuXParams { root_type: RootTypeTG::G, s1: Q::new(0, 1), s2: Q::new(0, 1), s0: Q::new(1, 1) };
        let sym = mu_x(&params, p, m);
        for j in 0..phi_pk(p, m) {
            let direct = gamma_factor_entry(p, m, j, 1, Q::new(0, 1), -1)
                .mul(p, &gamma_factor_entry(p, m, j, -1, Q::new(0, 1), 1));
            for k in 0..6 {
                let ang = std::f64::consts::TAU * (k as f64 + 0.1) / 6.0;
                let t = C64::new(ang.cos(), ang.sin()) * 1.3;
                let a = sym.entries[j as usize].eval(p, t);
                let b = direct.eval(p, t);
                assert!((a - b).norm() < 1e-9, "j={j}");
            }
        }
    }

    #[test]
    fn mu_x_s1_s2_swap_with_psi_flip_invariant() {
        let p = 3;
        let m = 1;
        let s1 = Q::new(3, 2);
        let s2 = Q::new(1, 2);
        let a = mu_x(&MuXParams { root_type: RootTypeTG::T, s1, s2, s0: Q::new(0, 1) }, p, m);
        // swapped s-parameters together with psi <-> psi^{-1}
        let phi = phi_pk(p, m);
        let swapped: Vec<RatFn> = (0..phi)
            .map(|j| {
                gamma_factor_entry(p, m, j, 1, Q::new(1, 1) - s2, -1)
                    .mul(p, &gamma_factor_entry(p, m, j, 1, Q::new(1, 1) - s1, 1))
                    .mul(p, &gamma_factor_entry(p, m, j, -2, Q::new(0, 1), -1))
            })
            .collect();
        for j in 0..phi as usize {
            for k in 0..6 {
                let ang = std::f64::consts::TAU * (k as f64 + 0.05) / 6.0;
                let t = C64::new(ang.cos(), ang.sin()) * 0.8;
                let x = a.entries[j].eval(p, t);
                let y = swapped[j].eval(p, t);
                assert!((x - y).norm() < 1e-9, "entry {j}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn mu_x_factors_unitary_on_their_critical_circles() {
        // row A1: s1 = s2 = 1/2. Each gamma factor of the product has
        // modulus 1 on its own critical circle; this is the honest form of
        // the "unitarity for unitary characters" sample check.
        let p = 5;
        let m = 1;
        let s = Q::new(1, 2);
        for j in 0..phi_pk(p, m) {
            for (deg, shift, sigma) in [(1i64, Q::new(1, 1) - s, -1), (1, Q::new(1, 1) - s, 1), (-2, Q::new(0, 1), 1)] {
                let f = gamma_factor_entry(p, m, j, deg, shift, sigma);
                // entry is Gamma_sigma(eta^deg, p^shift t^deg): unitary when
                // |p^shift t^deg| = p^{1/2}
                let rf = (p as f64).powf(
                    (0.5 - *shift.numer() as f64 / *shift.denom() as f64) / deg as f64,
                );
                for k in 0..20 {
                    let ang = std::f64::consts::TAU * (k as f64 + 0.21) / 20.0;
                    let t = C64::new(ang.cos(), ang.sin()) * rf;
                    assert!(
                        (f.eval(p, t).norm() - 1.0).abs() < 1e-9,
                        "j={j} deg={deg} shift={shift}"
                    );
                }
            }
        }
    }

    #[test]
    fn partial_fractions_reconstructs() {
        let p = 3;
        let tag1 = PoleTag { a: Q::new(1, 1), zeta: ExactRoot::one(), side: PoleSide::Zero };
        let tag2 = PoleTag { a: Q::new(-1, 2), zeta: ExactRoot::minus_one(), side: PoleSide::Inf };
        let mut num = Laurent::new();
        num.insert(-1, C64::new(0.7, 0.1));
        num.insert(2, C64::new(-0.4, 0.9));
        let f = RatFn { num, den: vec![(tag1, 2), (tag2, 1)] };
        let (laurent, terms) = f.partial_fractions(p).unwrap();
        for tv in [C64::new(0.4, 0.3), C64::new(-1.1, 0.8), C64::new(2.4, -0.2)] {
            let mut acc = laurent_eval(&laurent, tv);
            for &(tag, order, coef) in &terms {
                let t0 = tag.location(p);
                acc += coef / (c(1.0) - tv / t0).powi(order as i32);
            }
            assert!((acc - f.eval(p, tv)).norm() < 1e-9);
        }
    }
}
