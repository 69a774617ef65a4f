//! Kernel convolutions (|.|^s psi(.) d.) and the rank-one transfer operator,
//! with a slow direct-summation oracle and a fast Mellin-symbol path.
//!
//! Type T (coordinate xi): T f = |xi|^{s1-1/2} K_{1/2-s1} * K_{1/2-s2} * f;
//! type G (coordinate zeta): T f = |zeta|^{s0-1} K_{1-s0} * f, where K_s is
//! multiplicative convolution by |x|^s psi(x) dx. Outputs are relabeled to
//! the invariant coordinate c with singular points {0, 1} (type T) or
//! {-2, 2} (type G); the identification is the identity on scalars.

use crate::err::{Error, Result};
use crate::measure::{
    Anchor, AsymptoticMeasure, Ball, CoordName, Coordinate, Kind, PScalar, SteppedMeasure,
};
use crate::mellin::{inverse_mellin, mellin, tate_gamma, MellinSymbol, RootTypeTG};
use crate::padic::{inv_mod, is_odd_prime, p_pow, phi_pk, psi_pk, UnitCharacter};
use crate::{C64, Q};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Oracle,
    Symbol,
}

/// Row parameters of the transfer operator.
#[derive(Clone, Copy, Debug)]
pub struct TransferParams {
    pub root_type: RootTypeTG,
    pub s1: Q,
    pub s2: Q,
    pub s0: Q,
    pub psi_sign: i32,
    pub p: u64,
}

impl TransferParams {
    pub fn type_t(p: u64, s1: Q, s2: Q, psi_sign: i32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        if !(s1 >= s2 && s2 > Q::new(0, 1)) {
            return Err(Error::ParamsInconsistent(format!(
                "type T needs s1 >= s2 > 0, got s1={s1}, s2={s2}"
            )));
        }
        Ok(TransferParams { root_type: RootTypeTG::T, s1, s2, s0: Q::new(0, 1), psi_sign, p })
    }
    pub fn type_g(p: u64, s0: Q, psi_sign: i32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        if s0 < Q::new(1, 1) {
            return Err(Error::ParamsInconsistent(format!("type G needs s0 >= 1, got {s0}")));
        }
        Ok(TransferParams { root_type: RootTypeTG::G, s1: Q::new(0, 1), s2: Q::new(0, 1), s0, psi_sign, p })
    }

    /// Build the parameters of a derived table row.
    pub fn from_row(row: &crate::roots::SphericalRow, p: u64, psi_sign: i32) -> Result<Self> {
        let derived = crate::roots::derive_row(row)?;
        let d = derived
            .derived
            .ok_or_else(|| Error::UnderivedRow(row.label.clone()))?;
        match row.root_type {
            crate::roots::RootType::T => {
                TransferParams::type_t(p, d.s1.unwrap(), d.s2.unwrap(), psi_sign)
            }
            crate::roots::RootType::G => TransferParams::type_g(p, d.s0.unwrap(), psi_sign),
        }
    }

    fn expected_coord(&self) -> CoordName {
        match self.root_type {
            RootTypeTG::T => CoordName::Xi,
            RootTypeTG::G => CoordName::Zeta,
        }
    }

    fn output_coordinate(&self) -> Coordinate {
        match self.root_type {
            RootTypeTG::T => Coordinate::c(vec![PScalar::int(0), PScalar::int(1)]),
            RootTypeTG::G => Coordinate::c(vec![PScalar::int(-2), PScalar::int(2)]),
        }
    }
}

// ---------------------------------------------------------------------------
// kernel convolution
// ---------------------------------------------------------------------------

fn step_conductor(f: &AsymptoticMeasure) -> u32 {
    let mut m = 1u32;
    for piece in &f.step.pieces {
        if let Some(v) = piece.ball.shell(f.p) {
            m = m.max((piece.ball.k - v) as u32);
        }
    }
    m
}

/// Multiplicative convolution with the kernel |x|^s psi_sigma(x) dx.
///
/// Symbol mode: mellin -> multiply by the gamma symbol -> inverse mellin;
/// germ tails ride through the rational calculus (analytic continuation).
/// Oracle mode: direct shell summation, valid for germ-free inputs; the
/// output is the exact restriction to the requested window of shells.
pub fn kernel_convolve(
    f: &AsymptoticMeasure,
    s: Q,
    sigma: i32,
    mode: Mode,
    window: std::ops::RangeInclusive<i64>,
) -> Result<AsymptoticMeasure> {
    match mode {
        Mode::Symbol => {
            let m = step_conductor(f);
            let sym = mellin(f, m)?;
            let out = sym.mul_gamma(s, sigma);
            inverse_mellin(&out, f.coord.clone())
        }
        Mode::Oracle => {
            if !f.is_schwartz() {
                return Err(Error::NonconvergentTail(
                    "oracle mode requires a germ-free input; symbol mode regularizes tails".into(),
                ));
            }
            oracle_convolve(f, s, sigma, window)
        }
    }
}

/// Densities of a step measure as a (shell, unit-class) table.
fn density_table(f: &AsymptoticMeasure, m: u32) -> Result<(HashMap<(i64, u128), C64>, i64, i64)> {
    let p = f.p;
    let pm = p_pow(p, m);
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for piece in &f.step.pieces {
        let v = piece.ball.shell(p).ok_or_else(|| {
            Error::KindMismatch("oracle input must not charge a ball containing 0".into())
        })?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let mut table = HashMap::new();
    if lo > hi {
        return Ok((table, 0, -1));
    }
    for n in lo..=hi {
        for u in 1..pm {
            if u % p as u128 == 0 {
                continue;
            }
            let d = f.density_dmulx_cell(n, u, m)?;
            if d.norm() > 0.0 {
                table.insert((n, u), d);
            }
        }
    }
    Ok((table, lo, hi))
}

fn oracle_convolve(
    f: &AsymptoticMeasure,
    s: Q,
    sigma: i32,
    window: std::ops::RangeInclusive<i64>,
) -> Result<AsymptoticMeasure> {
    let p = f.p;
    let pf = p as f64;
    let sf = *s.numer() as f64 / *s.denom() as f64;
    let m = step_conductor(f);
    let (table, lo, hi) = density_table(f, m)?;
    let mut step = SteppedMeasure::zero(p);
    if lo > hi {
        return Ok(AsymptoticMeasure::zero(p, f.coord.clone()));
    }
    let pm = p_pow(p, m);
    // shell termination assertion: the psi-shell integral against any
    // level-m class vanishes identically for v(x) <= -(m+1)
    for j in (m as i64 + 2)..=(m as i64 + 4) {
        let l = j as u32;
        let pl = p_pow(p, l);
        let mut worst: f64 = 0.0;
        for w in 1..pm {
            if w % p as u128 == 0 {
                continue;
            }
            let mut acc = C64::new(0.0, 0.0);
            let mut x = w;
            while x < pl {
                if x % p as u128 != 0 {
                    acc += psi_pk(p, l, sigma, (x % pl) as i64);
                }
                x += pm;
            }
            worst = worst.max(acc.norm());
        }
        if worst > 1e-9 {
            return Err(Error::NonconvergentTail(format!(
                "shell -{j} failed the termination identity: {worst:.2e}"
            )));
        }
    }
    for n in window {
        for u in 1..pm {
            if u % p as u128 == 0 {
                continue;
            }
            let mut val = C64::new(0.0, 0.0);
            // x-shells j with the argument in support: n - j in [lo, hi]
            for j in (n - hi)..=(n - lo) {
                let l = ((-j).max(m as i64).max(1)) as u32;
                let pl = p_pow(p, l);
                let weight = pf.powf(-sf * j as f64);
                let volume = pf.powi(-j as i32) * (1.0 - 1.0 / pf) / phi_pk(p, l) as f64;
                let mut shell_acc = C64::new(0.0, 0.0);
                for ux in 1..pl {
                    if ux % p as u128 == 0 {
                        continue;
                    }
                    let arg_u = u % pm * inv_mod(ux % pm, pm) % pm;
                    if let Some(&dens) = table.get(&(n - j, arg_u)) {
                        let phase = if j >= 0 { 0 } else { (ux % p_pow(p, (-j) as u32)) as i64 };
                        let ps = if j >= 0 {
                            C64::new(1.0, 0.0)
                        } else {
                            psi_pk(p, (-j) as u32, sigma, phase)
                        };
                        shell_acc += ps * dens;
                    }
                }
                val += shell_acc * weight * volume;
            }
            if val.norm() > 1e-300 {
                step.push(
                    Ball::new(p, PScalar::shell_point(p, n, u), n + m as i64),
                    val,
                    Kind::Dmulx,
                );
            }
        }
    }
    Ok(AsymptoticMeasure { p, coord: f.coord.clone(), step, germs: vec![] })
}

/// Multiply a measure by |x|^r (exact on shell pieces and germ exponents).
pub fn twist_abs(f: &AsymptoticMeasure, r: Q) -> Result<AsymptoticMeasure> {
    let p = f.p;
    let pf = p as f64;
    let rf = *r.numer() as f64 / *r.denom() as f64;
    let mut out = f.clone();
    for piece in &mut out.step.pieces {
        let v = piece.ball.shell(p).ok_or_else(|| {
            Error::KindMismatch("cannot twist a flat piece containing 0 by |x|^r".into())
        })?;
        piece.density *= pf.powf(-rf * v as f64);
    }
    for g in &mut out.germs {
        match g.anchor {
            Anchor::Zero | Anchor::Infinity => g.a = g.a + r,
            Anchor::At(_) => {
                return Err(Error::Invalid("twist before shifting germs away from 0".into()))
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// the transfer operator
// ---------------------------------------------------------------------------

/// Apply the transfer operator to a Kuznetsov test measure. The window
/// bounds the shells of the output step part (oracle mode computes exactly
/// on it; symbol mode is exact everywhere and ignores it except for germ
/// cutoff placement).
pub fn transfer(
    f: &AsymptoticMeasure,
    params: &TransferParams,
    mode: Mode,
    window: std::ops::RangeInclusive<i64>,
) -> Result<AsymptoticMeasure> {
    if f.p != params.p {
        return Err(Error::PrimeMismatch(f.p, params.p));
    }
    if f.coord.name != params.expected_coord() {
        return Err(Error::ParamsInconsistent(format!(
            "input coordinate {:?} does not match the row type {:?}",
            f.coord.name, params.root_type
        )));
    }
    let out = match params.root_type {
        RootTypeTG::T => {
            let k1 = Q::new(1, 2) - params.s1;
            let k2 = Q::new(1, 2) - params.s2;
            let conv = match mode {
                Mode::Symbol => {
                    let first = kernel_convolve(f, k2, params.psi_sign, mode, window.clone())?;
                    kernel_convolve(&first, k1, params.psi_sign, mode, window.clone())?
                }
                Mode::Oracle => {
                    let m = step_conductor(f);
                    let inner =
                        *window.start() - (m as i64 + 2)..=*window.end() + (m as i64 + 2);
                    let first = kernel_convolve(f, k2, params.psi_sign, mode, inner)?;
                    kernel_convolve(&first, k1, params.psi_sign, mode, window.clone())?
                }
            };
            twist_abs(&conv, params.s1 - Q::new(1, 2))?
        }
        RootTypeTG::G => {
            let conv = kernel_convolve(
                f,
                Q::new(1, 1) - params.s0,
                params.psi_sign,
                mode,
                window.clone(),
            )?;
            twist_abs(&conv, params.s0 - Q::new(1, 1))?
        }
    };
    let mut relabeled = out;
    relabeled.coord = params.output_coordinate();
    Ok(relabeled)
}

/// Membership test for the enlarged Kuznetsov space: tails at infinity must
/// carry exactly the allowed exponents (with the log variant only in the
/// equal-parameter type-T case), and no other singular terms may appear.
pub fn enlarged_space_check(f: &AsymptoticMeasure, params: &TransferParams) -> (bool, String) {
    let mut notes = vec![];
    let mut ok = true;
    for g in &f.germs {
        match g.anchor {
            Anchor::Infinity => {
                let allowed: Vec<(Q, u8)> = match params.root_type {
                    RootTypeTG::T => {
                        let a1 = Q::new(1, 2) - params.s1;
                        let a2 = Q::new(1, 2) - params.s2;
                        if params.s1 == params.s2 {
                            vec![(a1, 0), (a1, 1)]
                        } else {
                            vec![(a1, 0), (a2, 0)]
                        }
                    }
                    RootTypeTG::G => vec![(Q::new(1, 1) - params.s0, 0)],
                };
                if !allowed.contains(&(g.a, g.e)) {
                    ok = false;
                    notes.push(format!(
                        "tail exponent |.|^{} log^{} at infinity is not in the allowed set",
                        g.a, g.e
                    ));
                }
            }
            Anchor::Zero | Anchor::At(_) => {
                ok = false;
                notes.push("singular germ term away from infinity".into());
            }
        }
    }
    if ok {
        notes.push("all tails admissible".into());
    }
    (ok, notes.join("; "))
}

/// The transfer operator's Mellin-side multiplier (handy for diagnostics):
/// the product of the kernel gamma symbols and the |.|-twist substitution.
pub fn transfer_symbol(params: &TransferParams, m: u32) -> MellinSymbol {
    let p = params.p;
    let phi = phi_pk(p, m);
    let entries = (0..phi)
        .map(|j| {
            let chi = UnitCharacter::new(p, m, j);
            match params.root_type {
                RootTypeTG::T => {
                    let g1 = tate_gamma(&chi, Q::new(1, 2) - params.s1, params.psi_sign);
                    let g2 = tate_gamma(&chi, Q::new(1, 2) - params.s2, params.psi_sign);
                    g1.mul(p, &g2).subst(p, params.s1 - Q::new(1, 2), 1)
                }
                RootTypeTG::G => tate_gamma(&chi, Q::new(1, 1) - params.s0, params.psi_sign)
                    .subst(p, params.s0 - Q::new(1, 1), 1),
            }
        })
        .collect();
    MellinSymbol { p, m, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{unit_group_dmulx, GermTerm, QuadEta};
    use crate::rng::CounterRng;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn random_step(p: u64, rng: &mut CounterRng, level: u32) -> AsymptoticMeasure {
        let mut step = SteppedMeasure::zero(p);
        let pm = p_pow(p, level);
        for _ in 0..4 {
            let n = rng.range_i64(-2, 2);
            let mut u = 1 + rng.below(pm as u64 - 1) as u128;
            if u % p as u128 == 0 {
                u = 1;
            }
            step.push(
                Ball::new(p, PScalar::shell_point(p, n, u), n + level as i64),
                rng.complex(),
                Kind::Dmulx,
            );
        }
        AsymptoticMeasure::from_step(step.canonicalize().unwrap(), Coordinate::xi())
    }

    fn compare_on_window(
        a: &AsymptoticMeasure,
        b: &AsymptoticMeasure,
        m: u32,
        window: std::ops::RangeInclusive<i64>,
    ) -> f64 {
        let p = a.p;
        let pm = p_pow(p, m);
        let mut worst: f64 = 0.0;
        for n in window {
            for u in 1..pm {
                if u % p as u128 == 0 {
                    continue;
                }
                let x = a.density_dmulx_cell(n, u, m).unwrap();
                let y = b.density_dmulx_cell(n, u, m).unwrap();
                worst = worst.max((x - y).norm());
            }
        }
        worst
    }

    #[test]
    fn kernel_zero_input() {
        let p = 3;
        let z = AsymptoticMeasure::zero(p, Coordinate::xi());
        let out = kernel_convolve(&z, Q::new(1, 2), 1, Mode::Symbol, -4..=4).unwrap();
        assert!(out.step.pieces.is_empty() && out.germs.is_empty());
    }

    #[test]
    fn oracle_vs_symbol_unit_group() {
        // f = 1_{Z_p^x} d^x, s = 1/2, p = 3: agreement on |v| <= 4
        let p = 3;
        let f = unit_group_dmulx(p, Coordinate::xi());
        let sym = kernel_convolve(&f, Q::new(1, 2), 1, Mode::Symbol, -4..=4).unwrap();
        let ora = kernel_convolve(&f, Q::new(1, 2), 1, Mode::Oracle, -4..=4).unwrap();
        let dev = compare_on_window(&sym, &ora, 1, -4..=4);
        assert!(dev < 1e-9, "dev {dev}");
    }

    #[test]
    fn oracle_vs_symbol_random() {
        for p in [3u64, 5] {
            let mut rng = CounterRng::new(1000 + p);
            for trial in 0..5 {
                let f = random_step(p, &mut rng, 2);
                let s = [Q::new(0, 1), Q::new(1, 2), Q::new(-1, 2), Q::new(1, 1)]
                    [trial % 4];
                let sigma = if trial % 2 == 0 { 1 } else { -1 };
                let sym = kernel_convolve(&f, s, sigma, Mode::Symbol, -4..=4).unwrap();
                let ora = kernel_convolve(&f, s, sigma, Mode::Oracle, -4..=4).unwrap();
                let dev = compare_on_window(&sym, &ora, 2, -4..=4);
                assert!(dev < 1e-9, "p={p} trial={trial}: dev {dev}");
            }
        }
    }

    #[test]
    fn kernel_gauss_scale_at_depth_one() {
        // f = 1_{1+pZ_p} d^x, s = 0: the ramified Mellin components of the
        // output at v(y) = -1 are Gauss sums of modulus p^{1/2}/phi(p)
        let p = 5;
        let mut step = SteppedMeasure::zero(p);
        step.push(Ball::new(p, PScalar::int(1), 1), c(1.0), Kind::Dmulx);
        let f = AsymptoticMeasure::from_step(step, Coordinate::xi());
        let out = kernel_convolve(&f, Q::new(0, 1), 1, Mode::Oracle, -2..=2).unwrap();
        // pointwise modulus: the output is psi(y) times the coset volume
        let d = out.density_dmulx_cell(-1, 1, 1).unwrap();
        assert!(d.norm() > 1e-12);
        let sym = mellin(&out, 1).unwrap();
        let leg = UnitCharacter::legendre(p);
        let idx = sym.index_of(&leg) as usize;
        let coef = sym.entries[idx].num.get(&-1).copied().unwrap_or(c(0.0));
        let expect = (p as f64).sqrt() / phi_pk(p, 1) as f64;
        assert!(
            (coef.norm() - expect).abs() < 1e-9,
            "ramified coefficient modulus {} vs {}",
            coef.norm(),
            expect
        );
    }

    #[test]
    fn transfer_linearity() {
        let p = 3;
        let params = TransferParams::type_t(p, Q::new(1, 2), Q::new(1, 2), 1).unwrap();
        let mut rng = CounterRng::new(77);
        let f = random_step(p, &mut rng, 2);
        let g = random_step(p, &mut rng, 2);
        let two_f_plus_g = f.scale(c(2.0)).add(&g).unwrap();
        let lhs = transfer(&two_f_plus_g, &params, Mode::Symbol, -4..=4).unwrap();
        let tf = transfer(&f, &params, Mode::Symbol, -4..=4).unwrap();
        let tg = transfer(&g, &params, Mode::Symbol, -4..=4).unwrap();
        let rhs = tf.scale(c(2.0)).add(&tg).unwrap();
        let dev = compare_on_window(&lhs, &rhs, 2, -5..=5);
        assert!(dev < 1e-10, "dev {dev}");
    }

    #[test]
    fn transfer_kernels_commute() {
        // swapping the two type-T kernels changes nothing (commutative
        // convolution algebra); checked in oracle mode where the order of
        // operations is physical
        let p = 3;
        let mut rng = CounterRng::new(5150);
        let f = random_step(p, &mut rng, 1);
        let k1 = Q::new(1, 2) - Q::new(3, 2);
        let k2 = Q::new(1, 2) - Q::new(1, 2);
        let inner = -8..=8;
        let a1 = kernel_convolve(&f, k2, 1, Mode::Oracle, inner.clone()).unwrap();
        let ab = kernel_convolve(&a1, k1, 1, Mode::Oracle, -4..=4).unwrap();
        let b1 = kernel_convolve(&f, k1, 1, Mode::Oracle, inner).unwrap();
        let ba = kernel_convolve(&b1, k2, 1, Mode::Oracle, -4..=4).unwrap();
        let dev = compare_on_window(&ab, &ba, 1, -4..=4);
        assert!(dev < 1e-10, "dev {dev}");
    }

    #[test]
    fn transfer_symbol_equals_composed_gammas() {
        // the symbol path and the explicit symbol product agree on a step f
        let p = 3;
        let params = TransferParams::type_g(p, Q::new(2, 1), 1).unwrap();
        let f = unit_group_dmulx(p, Coordinate::zeta());
        let direct = transfer(&f, &params, Mode::Symbol, -4..=4).unwrap();
        let sym_f = mellin(&f, 1).unwrap();
        let op = transfer_symbol(&params, 1);
        let composed = sym_f.mul(&op).unwrap();
        let back = inverse_mellin(&composed, params.output_coordinate()).unwrap();
        let dev = compare_on_window(&direct, &back, 1, -6..=6);
        assert!(dev < 1e-10, "dev {dev}");
    }

    #[test]
    fn enlarged_space_membership() {
        let p = 3;
        let params = TransferParams::type_t(p, Q::new(3, 2), Q::new(1, 2), 1).unwrap();
        // Schwartz element: fine
        let f = unit_group_dmulx(p, Coordinate::xi());
        assert!(enlarged_space_check(&f, &params).0);
        // allowed tail |xi|^{1/2 - s1}
        let mut g = f.clone();
        g.germs.push(GermTerm {
            anchor: Anchor::Infinity,
            a: Q::new(1, 2) - Q::new(3, 2),
            eta: QuadEta::Triv,
            e: 0,
            coeff: c(1.0),
            cutoff: 1,
        });
        assert!(enlarged_space_check(&g, &params).0);
        // disallowed exponent
        let mut h = f.clone();
        h.germs.push(GermTerm {
            anchor: Anchor::Infinity,
            a: Q::new(-5, 1),
            eta: QuadEta::Triv,
            e: 0,
            coeff: c(1.0),
            cutoff: 1,
        });
        assert!(!enlarged_space_check(&h, &params).0);
        // log tail requires s1 = s2
        let eq = TransferParams::type_t(p, Q::new(1, 2), Q::new(1, 2), 1).unwrap();
        let mut l = f.clone();
        l.germs.push(GermTerm {
            anchor: Anchor::Infinity,
            a: Q::new(0, 1),
            eta: QuadEta::Triv,
            e: 1,
            coeff: c(1.0),
            cutoff: 1,
        });
        assert!(enlarged_space_check(&l, &eq).0);
        assert!(!enlarged_space_check(&l, &params).0);
    }

    #[test]
    fn transfer_with_enlarged_tails_symbol_mode() {
        // a type-T input with its allowed tails goes through the symbol
        // path and lands in the c-coordinate with germs only at 0/infinity
        let p = 3;
        let params = TransferParams::type_t(p, Q::new(1, 2), Q::new(1, 2), 1).unwrap();
        let mut f = unit_group_dmulx(p, Coordinate::xi());
        f.germs.push(GermTerm {
            anchor: Anchor::Infinity,
            a: Q::new(0, 1),
            eta: QuadEta::Triv,
            e: 0,
            coeff: c(0.5),
            cutoff: 2,
        });
        let out = transfer(&f, &params, Mode::Symbol, -4..=4).unwrap();
        assert_eq!(out.coord.name, CoordName::C);
        assert_eq!(out.coord.singular_points.len(), 2);
        // mass on a window is finite and the measure is nonzero
        assert!(!out.step.pieces.is_empty());
    }

    #[test]
    fn oracle_rejects_germs() {
        let p = 3;
        let mut f = unit_group_dmulx(p, Coordinate::xi());
        f.germs.push(GermTerm {
            anchor: Anchor::Infinity,
            a: Q::new(0, 1),
            eta: QuadEta::Triv,
            e: 0,
            coeff: c(1.0),
            cutoff: 1,
        });
        assert!(matches!(
            kernel_convolve(&f, Q::new(0, 1), 1, Mode::Oracle, -2..=2),
            Err(Error::NonconvergentTail(_))
        ));
    }

    #[test]
    fn coordinate_guard() {
        let p = 3;
        let params = TransferParams::type_g(p, Q::new(1, 1), 1).unwrap();
        let f = unit_group_dmulx(p, Coordinate::xi());
        assert!(matches!(
            transfer(&f, &params, Mode::Symbol, -2..=2),
            Err(Error::ParamsInconsistent(_))
        ));
    }
}
