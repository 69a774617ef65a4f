//! Kuznetsov-side test vectors (orbital integrals of the basic function,
//! Kloosterman sums, Kloosterman germs) and brute-force X-side orbital
//! integrals for the two basic rows.
//!
//! Normalizations: Haar on the group gives the integral points volume 1;
//! the modular character delta(a) is included exactly; the X-side measures
//! give the integral-point stabilizer volume 1. Overall constants are
//! surfaced in the provenance record and fitted once in the smoke test.

use crate::err::{Error, Result};
use crate::exec;
use crate::measure::{AsymptoticMeasure, Ball, Coordinate, Kind, PScalar, SteppedMeasure};
use crate::padic::{inv_mod, is_odd_prime, p_pow, phi_pk, psi_pk};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Group {
    Pgl2,
    Sl2,
}

/// Classical Kloosterman sum S(a, b; p^k) = sum over units x mod p^k of
/// e((a x + b x^{-1}) / p^k).
pub fn kloosterman_sum(a: i64, b: i64, p: u64, k: u32) -> C64 {
    assert!(k >= 1);
    let pk = p_pow(p, k);
    let mut acc = C64::new(0.0, 0.0);
    for x in 1..pk {
        if x % p as u128 == 0 {
            continue;
        }
        let xinv = inv_mod(x, pk);
        let phase =
            (a as i128 * x as i128 + b as i128 * xinv as i128).rem_euclid(pk as i128) as i64;
        acc += psi_pk(p, k, 1, phase);
    }
    acc
}

/// A Kuznetsov test vector: the coordinate measure plus a record of the
/// producing data and normalization choices.
#[derive(Clone, Debug)]
pub struct KuznetsovVector {
    pub group: Group,
    pub p: u64,
    pub measure: AsymptoticMeasure,
    pub provenance: String,
}

/// Orbital integrals of the basic function (indicator of the integral
/// points) for the Kuznetsov formula, assembled into a coordinate measure.
///
/// The Bruhat integrality constraints pin the two unipotent parameters to
/// units X, Y mod p^r with X Y w = 1, so each shell is a Kloosterman-type
/// unit sum, evaluated by direct enumeration. Densities are relative to
/// d^x of the torus coordinate; the modular factor is included exactly.
pub fn kuznetsov_basic(
    group: Group,
    p: u64,
    psi_sign: i32,
    window: std::ops::RangeInclusive<i64>,
) -> Result<KuznetsovVector> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    let depth_limit = 12;
    if *window.end() > depth_limit {
        return Err(Error::WindowTooDeep(format!(
            "window reaches v = {}, beyond the enumeration bound {depth_limit}",
            window.end()
        )));
    }
    let pf = p as f64;
    let mut step = SteppedMeasure::zero(p);
    match group {
        Group::Pgl2 => {
            // support on even shells v(xi) = 2r >= 0; at depth r the value on
            // the unit coset w mod p^r is p^{-2r} sum_X e(-sigma(X + X^{-1}w^{-1})/p^r)
            for n in window {
                if n < 0 || n % 2 != 0 {
                    continue;
                }
                let r = (n / 2) as u32;
                if r == 0 {
                    for u in 1..p {
                        step.push(
                            Ball::new(p, PScalar::shell_point(p, 0, u as u128), 1),
                            C64::new(1.0, 0.0),
                            Kind::Dmulx,
                        );
                    }
                    continue;
                }
                let pr = p_pow(p, r);
                let delta = pf.powi(-2 * r as i32);
                let units: Vec<u128> = (1..pr).filter(|u| u % p as u128 != 0).collect();
                let vals = exec::map_cells(units.len(), |i| {
                    let w = units[i];
                    let winv = inv_mod(w, pr);
                    let mut s = C64::new(0.0, 0.0);
                    for &x in &units {
                        let xinv = inv_mod(x, pr);
                        let phase = ((x as i128 + (xinv as i128 * winv as i128) % pr as i128)
                            % pr as i128) as i64;
                        s += psi_pk(p, r, -psi_sign, phase);
                    }
                    s * delta
                });
                for (i, &w) in units.iter().enumerate() {
                    if vals[i].norm() > 1e-300 {
                        step.push(
                            Ball::new(p, PScalar::shell_point(p, n, w), n + r as i64),
                            vals[i],
                            Kind::Dmulx,
                        );
                    }
                }
            }
        }
        Group::Sl2 => {
            // support on all shells v(zeta) = k >= 0; value on the coset w:
            // p^{-2k} sum_X e(-sigma(X + X^{-1} w^{-2})/p^k)
            for k in window {
                if k < 0 {
                    continue;
                }
                let kk = k as u32;
                if kk == 0 {
                    for u in 1..p {
                        step.push(
                            Ball::new(p, PScalar::shell_point(p, 0, u as u128), 1),
                            C64::new(1.0, 0.0),
                            Kind::Dmulx,
                        );
                    }
                    continue;
                }
                let pk = p_pow(p, kk);
                let delta = pf.powi(-2 * kk as i32);
                let units: Vec<u128> = (1..pk).filter(|u| u % p as u128 != 0).collect();
                let vals = exec::map_cells(units.len(), |i| {
                    let w = units[i];
                    let w2inv = inv_mod(w * w % pk, pk);
                    let mut s = C64::new(0.0, 0.0);
                    for &x in &units {
                        let xinv = inv_mod(x, pk);
                        let phase = ((x as i128 + (xinv as i128 * w2inv as i128) % pk as i128)
                            % pk as i128) as i64;
                        s += psi_pk(p, kk, -psi_sign, phase);
                    }
                    s * delta
                });
                for (i, &w) in units.iter().enumerate() {
                    if vals[i].norm() > 1e-300 {
                        step.push(
                            Ball::new(p, PScalar::shell_point(p, k, w), k + kk as i64),
                            vals[i],
                            Kind::Dmulx,
                        );
                    }
                }
            }
        }
    }
    let coord = match group {
        Group::Pgl2 => Coordinate::xi(),
        Group::Sl2 => Coordinate::zeta(),
    };
    let provenance = format!(
        "basic function = indicator of the integral points; Haar with K-volume 1; \
         psi-sign {psi_sign} on the unipotent pair; modular factor delta(a) = |coord|^2 \
         included; torus measure d^x with vol(Z_p^x) = 1"
    );
    Ok(KuznetsovVector {
        group,
        p,
        measure: AsymptoticMeasure { p, coord, step, germs: vec![] },
        provenance,
    })
}

/// The Kloosterman germ integral at a point of the coordinate line.
///
/// PGL2: int over |u|^2 = |xi| of psi^{-1}(u/xi + u^{-1}) du.
/// SL2: int over u in (branch) + pZ_p of psi^{-1}((u + u^{-1})/zeta) du,
/// with branch in {+1, -1}.
pub fn kloosterman_germ(
    group: Group,
    p: u64,
    psi_sign: i32,
    shell: i64,
    unit: u128,
    branch: i32,
) -> Result<C64> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    let pf = p as f64;
    match group {
        Group::Pgl2 => {
            if shell < 0 || shell % 2 != 0 {
                return Err(Error::ZeroArgument);
            }
            let r = (shell / 2) as u32;
            if r == 0 {
                // u/xi + u^{-1} is integral on the unit circle: integrand 1
                return Ok(C64::new(1.0 - 1.0 / pf, 0.0));
            }
            let pr = p_pow(p, r);
            let w = unit % pr;
            let winv = inv_mod(w, pr);
            let mut acc = C64::new(0.0, 0.0);
            for x in 1..pr {
                if x % p as u128 == 0 {
                    continue;
                }
                let xinv = inv_mod(x, pr);
                let phase =
                    ((x as i128 * winv as i128 % pr as i128 + xinv as i128) % pr as i128) as i64;
                acc += psi_pk(p, r, -psi_sign, phase);
            }
            Ok(acc * pf.powi(-2 * r as i32))
        }
        Group::Sl2 => {
            if shell < 0 {
                return Err(Error::ZeroArgument);
            }
            let k = shell as u32;
            let level = k + 2;
            let pl = p_pow(p, level);
            let pk = p_pow(p, k.max(1));
            let w = unit % pk;
            let winv = inv_mod(w, pk);
            let eps: i128 = if branch >= 0 { 1 } else { -1 };
            let mut acc = C64::new(0.0, 0.0);
            // u = eps(1 + p t), t mod p^level
            for t in 0..pl {
                let u_val = (eps * (1 + p as i128 * t as i128)).rem_euclid(pl as i128);
                let u_red = u_val as u128 % pl;
                let uinv = inv_mod(u_red, pl);
                let s = (u_red + uinv) % pl; // u + u^{-1} mod p^level
                if k == 0 {
                    acc += C64::new(1.0, 0.0);
                } else {
                    let phase = ((s as i128 % pk as i128) * winv as i128 % pk as i128) as i64;
                    acc += psi_pk(p, kk_cast(k), -psi_sign, phase);
                }
            }
            // du volume per residue class: vol(1 + pZ_p) = 1/p split into
            // p^level classes of t
            Ok(acc * pf.powi(-(level as i32) - 1))
        }
    }
}

fn kk_cast(k: u32) -> u32 {
    k
}

// ---------------------------------------------------------------------------
// X-side basic orbital integrals
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XRow {
    A1,
    D2,
}

/// Count pairs (b, c) mod p^M with b c = beta, organized by valuation
/// classes of b. `vbeta` is the (capped) valuation of beta.
fn count_bc(p: u64, m: u32, vbeta: u32) -> u128 {
    let pm = p_pow(p, m);
    if vbeta >= m {
        let mut acc: u128 = pm; // the b = 0 column
        for i in 0..m {
            acc += phi_pk(p, m - i) as u128 * p_pow(p, i);
        }
        acc
    } else {
        (vbeta as u128 + 1) * (pm - pm / p as u128)
    }
}

/// X-side orbital integrals of the basic vector for the two basic rows,
/// as a measure on the invariant coordinate c.
///
/// A1: torus-period integrals over fibers of tr(PQ) for rank-one integral
/// projectors; the fiber count reduces to pairs bc = c(1-c) organized by
/// valuation classes. D2: conjugation integrals of the integral-lattice
/// indicator over trace fibers of the unimodular 2x2 lattice.
pub fn xside_basic(row: XRow, p: u64, window_depth: i64) -> Result<AsymptoticMeasure> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    if window_depth < 0 || window_depth > 8 {
        return Err(Error::DepthExceeded(format!("window depth {window_depth}")));
    }
    let pf = p as f64;
    let level = window_depth + 1;
    let pl = p_pow(p, level as u32);
    match row {
        XRow::A1 => {
            let mut step = SteppedMeasure::zero(p);
            for c0 in 0..pl {
                if c0 == 0 || c0 == 1 {
                    // deep cells at the singular points: germ region
                    continue;
                }
                let c_scalar = PScalar::int(c0 as i128);
                let one_minus = PScalar::int(1 - c0 as i128);
                let v1 = c_scalar.valuation(p).unwrap().min(level);
                let v2 = one_minus.valuation(p).unwrap().min(level);
                if v1 >= level || v2 >= level {
                    continue;
                }
                let vb = (v1 + v2) as u32;
                let m_enum = (2 * level) as u32;
                let count = count_bc(p, m_enum, vb);
                // fiber mass per unit c-volume
                let h = count as f64 / p_pow(p, m_enum) as f64;
                step.push(Ball::new(p, c_scalar, level), C64::new(h, 0.0), Kind::Dx);
            }
            let out = AsymptoticMeasure {
                p,
                coord: Coordinate::c(vec![PScalar::int(0), PScalar::int(1)]),
                step,
                germs: vec![],
            };
            out.canonicalize()
        }
        XRow::D2 => {
            let m_enum = (2 * level) as u32;
            let pm = p_pow(p, m_enum);
            let cells: Vec<u128> = (0..pl).collect();
            let densities = exec::map_cells(cells.len(), |i| {
                let tau = cells[i] as i128;
                let mut acc: f64 = 0.0;
                for a in 0..pm {
                    let beta = (a as i128 * (tau - a as i128) - 1).rem_euclid(pm as i128);
                    let mut vb = 0u32;
                    if beta == 0 {
                        vb = m_enum;
                    } else {
                        let mut b = beta;
                        while vb < m_enum && b % p as i128 == 0 {
                            b /= p as i128;
                            vb += 1;
                        }
                    }
                    acc += count_bc(p, m_enum, vb) as f64;
                }
                C64::new(acc / pf.powi(2 * m_enum as i32), 0.0)
            });
            let mut step = SteppedMeasure::zero(p);
            let two = PScalar::int(2);
            let minus_two = PScalar::int(-2);
            for (i, &c0) in cells.iter().enumerate() {
                let c_scalar = PScalar::int(c0 as i128);
                if c_scalar.sub(p, &two).valuation(p).unwrap_or(i64::MAX) >= level
                    || c_scalar.sub(p, &minus_two).valuation(p).unwrap_or(i64::MAX) >= level
                {
                    continue;
                }
                if densities[i].norm() > 1e-300 {
                    step.push(Ball::new(p, c_scalar, level), densities[i], Kind::Dx);
                }
            }
            let out = AsymptoticMeasure {
                p,
                coord: Coordinate::c(vec![minus_two, two]),
                step,
                germs: vec![],
            };
            out.canonicalize()
        }
    }
}
