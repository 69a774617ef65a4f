//! Pushforwards of lattice measures under split quadratic forms, germ
//! extraction, the twisted pushforwards of the two- and three-dimensional
//! models, and the linearized integration-formula check.
//!
//! A split form of dimension d is h hyperbolic planes (xy) plus an optional
//! unary line (z^2); the odd three-dimensional block is written A^2 + BC.
//! High-dimensional pushforwards are additive convolutions of block
//! pushforwards on cell grids, exact down to level M; d-dimensional
//! enumeration is kept only as a low-d oracle.

use crate::err::{Error, Result};
use crate::measure::{
    Anchor, AsymptoticMeasure, Ball, Coordinate, GermTerm, Grid, Kind, PScalar, QuadEta, Region,
    SteppedMeasure,
};
use crate::padic::{is_odd_prime, legendre, p_pow};
use crate::{C64, Q};
use serde::Serialize;

// ---------------------------------------------------------------------------
// quadratic spaces
// ---------------------------------------------------------------------------

/// Split quadratic space: h hyperbolic planes, plus a unary line if d is odd.
#[derive(Clone, Copy, Debug)]
pub struct QuadSpace {
    pub p: u64,
    pub d: u32,
}

impl QuadSpace {
    pub fn new(p: u64, d: u32) -> Result<Self> {
        if !is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        if d < 2 {
            return Err(Error::Invalid("quadratic space needs dimension >= 2".into()));
        }
        Ok(QuadSpace { p, d })
    }
    pub fn planes(&self) -> u32 {
        self.d / 2
    }
    pub fn has_unary(&self) -> bool {
        self.d % 2 == 1
    }
    /// Singular-germ exponent d/2 - 1.
    pub fn exponent(&self) -> Q {
        Q::new(self.d as i64 - 2, 2)
    }
}

// ---------------------------------------------------------------------------
// block grids (exact level-M masses, tail mass in the zero cell)
// ---------------------------------------------------------------------------

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Shell density of the |x|^r-weighted plane block: the pushforward of
/// |x|^r 1_{Z_p^2} dx dy under xy has d-xi density (1-1/p) sum_{k<=n} p^{-kr}
/// on the shell v = n, uniform across units.
fn weighted_plane_density(p: u64, r: Q, n: i64) -> f64 {
    let pf = p as f64;
    let rf = *r.numer() as f64 / *r.denom() as f64;
    let mut acc = 0.0;
    for k in 0..=n {
        acc += pf.powf(-rf * k as f64);
    }
    acc * (1.0 - 1.0 / pf)
}

/// Level-M grid of the weighted plane block, exact tail mass in the 0-cell.
pub fn weighted_plane_grid(p: u64, m: i64, r: Q) -> Grid {
    let mut grid = Grid::zero(p, 0, m);
    let pf = p as f64;
    let n_cells = grid.cells();
    for n in 0..m {
        let density = weighted_plane_density(p, r, n);
        let stride = p_pow(p, n as u32) as usize;
        let count = p_pow(p, (m - n) as u32);
        let mass = density * pf.powi(-m as i32);
        for u in 1..count {
            if u % p as u128 == 0 {
                continue;
            }
            grid.masses[(u as usize * stride) % n_cells] += c(mass);
        }
    }
    // exact tail mass: sum_{n >= M} density(n) p^{-n} (1-1/p)
    //   = (1-1/p) [ sum_{k<M} p^{-kr} p^{-M} + w^M/(1-w) ], w = p^{-(r+1)}
    let rf = *r.numer() as f64 / *r.denom() as f64;
    let mut tail = 0.0;
    for k in 0..m {
        tail += pf.powf(-rf * k as f64) * pf.powi(-m as i32);
    }
    let w = pf.powf(-(rf + 1.0));
    debug_assert!(w < 1.0);
    tail += w.powi(m as i32) / (1.0 - w);
    grid.masses[0] += c(tail * (1.0 - 1.0 / pf));
    grid
}

/// Level-M grid of the unary block z -> z^2 on 1_{Z_p} dz.
pub fn unary_grid(p: u64, m: i64) -> Grid {
    let mut grid = Grid::zero(p, 0, m);
    let n_cells = grid.cells();
    let pf = p as f64;
    let mut j = 0i64;
    while 2 * j < m {
        // the shell v(z) = j maps onto the square classes of the shell 2j,
        // uniformly, two roots per class
        let level = (m - 2 * j) as u32;
        let shell_mass = pf.powi(-j as i32) * (1.0 - 1.0 / pf);
        let classes = crate::padic::phi_pk(p, level) / 2;
        let per_cell = shell_mass / classes as f64;
        let stride = p_pow(p, 2 * j as u32) as usize;
        let pl = p_pow(p, level);
        for w in 1..pl {
            if w % p as u128 == 0 {
                continue;
            }
            let sq = (w * w) % pl;
            grid.masses[(sq as usize * stride) % n_cells] += c(per_cell / 2.0);
        }
        j += 1;
    }
    // tail: v(z) >= ceil(M/2)
    let jt = (m + 1) / 2;
    grid.masses[0] += c(pf.powi(-jt as i32));
    grid
}

// ---------------------------------------------------------------------------
// block pushforwards as measures (step + exact germ tails)
// ---------------------------------------------------------------------------

/// Pushforward of 1_{Z_p^2} dx dy under (x, y) -> xy: shell density
/// (n+1)(1-1/p) relative to d-xi, a log germ at 0.
pub fn plane_pushforward(p: u64, precision: i64) -> Result<AsymptoticMeasure> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    let (step, _) = weighted_plane_grid(p, precision, Q::new(0, 1)).to_stepped();
    let pf = p as f64;
    let f2 = (1.0 - 1.0 / pf) * (1.0 - 1.0 / pf);
    // tail density relative to d^x: (n+1)(1-1/p)^2 p^{-n}
    //   = f2 |x| (1 + log_p(1/|x|)), and log_p|x| = -n
    let germs = vec![
        GermTerm {
            anchor: Anchor::Zero,
            a: Q::new(1, 1),
            eta: QuadEta::Triv,
            e: 0,
            coeff: c(f2),
            cutoff: precision,
        },
        GermTerm {
            anchor: Anchor::Zero,
            a: Q::new(1, 1),
            eta: QuadEta::Triv,
            e: 1,
            coeff: c(-f2),
            cutoff: precision,
        },
    ];
    Ok(AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs })
}

/// Pushforward of 1_{Z_p} dz under z -> z^2: supported on squares, density
/// 2 p^j at even shells 2j on square classes; exponent-1/2 germ at 0.
pub fn unary_pushforward(p: u64, precision: i64) -> Result<AsymptoticMeasure> {
    if !is_odd_prime(p) {
        return Err(Error::UnsupportedPrime(p));
    }
    let (step, _) = unary_grid(p, precision).to_stepped();
    // tail relative to d^x at shell n = 2j, u square: 2 p^j p^{-2j} (1-1/p)
    //   = 2(1-1/p)|xi|^{1/2} on even-shell squares
    //   = (1-1/p)/2 * sum over the four quadratic characters
    let pf = p as f64;
    let coeff = (1.0 - 1.0 / pf) / 2.0;
    let germs = QuadEta::all()
        .into_iter()
        .map(|eta| GermTerm {
            anchor: Anchor::Zero,
            a: Q::new(1, 2),
            eta,
            e: 0,
            coeff: c(coeff),
            cutoff: precision,
        })
        .collect();
    Ok(AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs })
}

/// Exact level-M pushforward of the unit-lattice Haar measure under the
/// split form of dimension d, by additive convolution of block grids.
/// The mass below level M sits on the ball p^M Z_p as a single flat piece;
/// germ extraction only reads shells above it.
pub fn pushforward_unit_lattice(q: &QuadSpace, precision: i64) -> Result<AsymptoticMeasure> {
    let p = q.p;
    let mut grid: Option<Grid> = None;
    for _ in 0..q.planes() {
        let block = weighted_plane_grid(p, precision, Q::new(0, 1));
        grid = Some(match grid {
            None => block,
            Some(acc) => acc.convolve(&block)?,
        });
    }
    if q.has_unary() {
        let block = unary_grid(p, precision);
        grid = Some(match grid {
            None => block,
            Some(acc) => acc.convolve(&block)?,
        });
    }
    let grid = grid.unwrap();
    let (mut step, zero_mass) = grid.to_stepped();
    if zero_mass.norm() > 0.0 {
        step.push(
            Ball::new(p, PScalar::zero(), precision),
            zero_mass * (p as f64).powi(precision as i32),
            Kind::Dx,
        );
    }
    Ok(AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs: vec![] })
}

/// General pushforward entry point: unit-lattice Haar goes through block
/// convolution; other product inputs fall back to the brute oracle (d <= 3).
pub fn pushforward(
    q: &QuadSpace,
    input: Option<&[SteppedMeasure]>,
    precision: i64,
) -> Result<AsymptoticMeasure> {
    match input {
        None => pushforward_unit_lattice(q, precision),
        Some(factors) => {
            if factors.len() != q.d as usize {
                return Err(Error::NonfactorizableInput(format!(
                    "need {} factors, got {}",
                    q.d,
                    factors.len()
                )));
            }
            if q.d <= 3 {
                brute_pushforward(q, factors, precision)
            } else {
                Err(Error::NonfactorizableInput(
                    "general inputs are only enumerable for d <= 3".into(),
                ))
            }
        }
    }
}

/// Independent oracle: enumerate representatives of the product lattice mod
/// p^M and push cell masses through the quadratic form. d <= 3 only.
pub fn brute_pushforward(
    q: &QuadSpace,
    factors: &[SteppedMeasure],
    precision: i64,
) -> Result<AsymptoticMeasure> {
    let p = q.p;
    let d = q.d as usize;
    if d > 3 {
        return Err(Error::InstanceTooLarge("brute pushforward needs d <= 3".into()));
    }
    if factors.len() != d {
        return Err(Error::NonfactorizableInput("factor count != dimension".into()));
    }
    let grids: Vec<Grid> = factors
        .iter()
        .map(|f| Grid::from_stepped(f, precision))
        .collect::<Result<Vec<_>>>()?;
    let total: u128 = grids.iter().map(|g| g.cells() as u128).product();
    if total > 100_000_000 {
        return Err(Error::InstanceTooLarge(format!("{total} lattice points")));
    }
    let v0_out = grids.iter().map(|g| 2 * g.v0).min().unwrap().min(0);
    let mut out = Grid::zero(p, v0_out, precision);
    let n_out = out.masses.len();
    let modulus = p_pow(p, (precision - v0_out) as u32) as i128;
    // cell representatives scaled by p^{-v0_out}
    let reps: Vec<Vec<(i128, C64)>> = grids
        .iter()
        .map(|g| {
            let mut v = vec![];
            for (i, &mass) in g.masses.iter().enumerate() {
                if mass.norm() > 0.0 {
                    v.push((i as i128 * p_pow(p, (g.v0 - v0_out) as u32) as i128, mass));
                }
            }
            v
        })
        .collect();
    let scale_fix = p_pow(p, (-v0_out) as u32) as i128;
    match d {
        2 => {
            for &(x, mx) in &reps[0] {
                for &(y, my) in &reps[1] {
                    let q_val = (x * y / scale_fix).rem_euclid(modulus);
                    out.masses[(q_val % n_out as i128) as usize] += mx * my;
                }
            }
        }
        3 => {
            for &(a, ma) in &reps[0] {
                let a2 = a * a / scale_fix;
                for &(b, mb) in &reps[1] {
                    let ab = ma * mb;
                    for &(cc, mc) in &reps[2] {
                        let q_val = (a2 + b * cc / scale_fix).rem_euclid(modulus);
                        out.masses[(q_val % n_out as i128) as usize] += ab * mc;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let (mut step, zero_mass) = out.to_stepped();
    if zero_mass.norm() > 0.0 {
        step.push(
            Ball::new(p, PScalar::zero(), precision),
            zero_mass * (p as f64).powi(precision as i32),
            Kind::Dx,
        );
    }
    Ok(AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs: vec![] })
}

// ---------------------------------------------------------------------------
// twisted pushforwards
// ---------------------------------------------------------------------------

/// Finite-level measure on F^2 given by product-ball pieces (dx x dx).
#[derive(Clone, Debug)]
pub struct Measure2 {
    pub p: u64,
    pub pieces: Vec<(Ball, Ball, C64)>,
}

impl Measure2 {
    pub fn unit_lattice(p: u64) -> Self {
        Measure2 {
            p,
            pieces: vec![(
                Ball::new(p, PScalar::zero(), 0),
                Ball::new(p, PScalar::zero(), 0),
                c(1.0),
            )],
        }
    }
    fn density(&self, x: &PScalar, y: &PScalar) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (bx, by, d) in &self.pieces {
            if bx.contains(self.p, x) && by.contains(self.p, y) {
                acc += *d;
            }
        }
        acc
    }
    fn max_level(&self) -> i64 {
        self.pieces.iter().map(|(a, b, _)| a.k.max(b.k)).max().unwrap_or(0)
    }
    fn x_lo(&self) -> i64 {
        self.pieces
            .iter()
            .map(|(a, _, _)| a.shell(self.p).unwrap_or(a.k))
            .min()
            .unwrap_or(0)
    }
    fn y_lo(&self) -> i64 {
        self.pieces
            .iter()
            .map(|(_, b, _)| b.shell(self.p).unwrap_or(b.k))
            .min()
            .unwrap_or(0)
    }
}

/// Twisted two-dimensional pushforward
/// `xi -> (int Phi2(a, a^{-1} xi) |a|^{(d-2)/2} d^x a) d xi`,
/// computed exactly on shells inside the window by finite shell sums
/// (compact support bounds the a-integral on every shell).
pub fn twisted_pushforward_t(
    phi2: &Measure2,
    d: u32,
    window: std::ops::RangeInclusive<i64>,
) -> Result<AsymptoticMeasure> {
    let p = phi2.p;
    let pf = p as f64;
    let rf = (d as f64 - 2.0) / 2.0;
    let level = phi2.max_level().max(1);
    let x_lo = phi2.x_lo();
    let y_lo = phi2.y_lo();
    let mut step = SteppedMeasure::zero(p);
    let pl = p_pow(p, level as u32);
    let phi_level = crate::padic::phi_pk(p, level as u32) as f64;
    for n in window {
        let k_hi = n - y_lo;
        if k_hi < x_lo {
            continue;
        }
        for u in 1..pl {
            if u % p as u128 == 0 {
                continue;
            }
            let mut val = C64::new(0.0, 0.0);
            for k in x_lo..=k_hi {
                let weight = pf.powf(-rf * k as f64);
                let mut shell_sum = C64::new(0.0, 0.0);
                for ua in 1..pl {
                    if ua % p as u128 == 0 {
                        continue;
                    }
                    let a_pt = PScalar::shell_point(p, k, ua);
                    let u_inv = crate::padic::inv_mod(ua, pl);
                    let y_pt = PScalar::shell_point(p, n - k, u * u_inv % pl);
                    shell_sum += phi2.density(&a_pt, &y_pt);
                }
                val += shell_sum * weight / phi_level;
            }
            if val.norm() > 0.0 {
                step.push(Ball::new(p, PScalar::shell_point(p, n, u), n + level), val, Kind::Dx);
            }
        }
    }
    let out = AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs: vec![] };
    out.canonicalize()
}

/// Twisted three-dimensional pushforward of the unit lattice in sl2
/// coordinates (A, B, C) with form A^2 + BC and weight |C|^{(d-3)/2},
/// computed exactly as the convolution of the unary block (A^2) with the
/// |C|-weighted plane block (BC).
pub fn twisted_pushforward_g_unit(p: u64, d: u32, precision: i64) -> Result<AsymptoticMeasure> {
    if d < 3 || d % 2 == 0 {
        return Err(Error::Invalid("type-G twist needs odd d >= 3".into()));
    }
    let r = Q::new(d as i64 - 3, 2);
    let grid = unary_grid(p, precision).convolve(&weighted_plane_grid(p, precision, r))?;
    let (mut step, zero_mass) = grid.to_stepped();
    if zero_mass.norm() > 0.0 {
        step.push(
            Ball::new(p, PScalar::zero(), precision),
            zero_mass * (p as f64).powi(precision as i32),
            Kind::Dx,
        );
    }
    Ok(AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs: vec![] })
}

/// Finite-level measure on F^3 (dx^3 product pieces).
#[derive(Clone, Debug)]
pub struct Measure3 {
    pub p: u64,
    pub pieces: Vec<(Ball, Ball, Ball, C64)>,
}

impl Measure3 {
    pub fn density(&self, a: &PScalar, b: &PScalar, cc: &PScalar) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (ba, bb, bc, d) in &self.pieces {
            if ba.contains(self.p, a) && bb.contains(self.p, b) && bc.contains(self.p, cc) {
                acc += *d;
            }
        }
        acc
    }
}

/// General three-dimensional twisted pushforward by enumeration over
/// (A, C) with B = (xi - A^2)/C, for test measures whose C-support stays
/// away from 0 (bounded shells). The unit lattice goes through
/// `twisted_pushforward_g_unit`.
pub fn twisted_pushforward_g(
    phi3: &Measure3,
    d: u32,
    window: std::ops::RangeInclusive<i64>,
) -> Result<AsymptoticMeasure> {
    let p = phi3.p;
    let pf = p as f64;
    let rf = (d as f64 - 3.0) / 2.0;
    let mut c_shells: Vec<i64> = vec![];
    let mut level = 1i64;
    for (ba, bb, bc, _) in &phi3.pieces {
        level = level.max(ba.k).max(bb.k).max(bc.k);
        match bc.shell(p) {
            Some(v) => {
                if !c_shells.contains(&v) {
                    c_shells.push(v);
                }
            }
            None => {
                return Err(Error::UnboundedSupport(
                    "C-support reaches 0; use the unit-lattice block path".into(),
                ))
            }
        }
    }
    let n_hi = *window.end();
    let la = (level + n_hi.max(0) + 3) as u32;
    let pl_a = p_pow(p, la);
    let pl = p_pow(p, level as u32);
    let phi_level = crate::padic::phi_pk(p, level as u32) as f64;
    let mut step = SteppedMeasure::zero(p);
    for n in window {
        for u in 1..pl {
            if u % p as u128 == 0 {
                continue;
            }
            let xi = PScalar::shell_point(p, n, u);
            let mut val = C64::new(0.0, 0.0);
            for a_res in 0..pl_a {
                let a_pt = PScalar::new(p, a_res as i128, 0);
                let a2 = PScalar::new(p, (a_res as i128) * (a_res as i128), 0);
                let beta = xi.sub(p, &a2);
                let vb = beta.valuation(p).unwrap_or(i64::MAX);
                for &jc in &c_shells {
                    if vb == i64::MAX || vb < jc {
                        continue;
                    }
                    if vb - jc + (level as i64) > la as i64 - jc {
                        // B-cell not resolved at the enumeration level; with
                        // bounded C-shells this only happens for beta deep in
                        // p^{la}Z_p, where the B-value is out of any bounded
                        // support anyway if la is generous
                    }
                    for ucc in 1..pl {
                        if ucc % p as u128 == 0 {
                            continue;
                        }
                        let c_pt = PScalar::shell_point(p, jc, ucc);
                        let b_pt = divide_to_level(p, &beta, jc, ucc, level as u32 + 1);
                        let dens = phi3.density(&a_pt, &b_pt, &c_pt);
                        if dens.norm() > 0.0 {
                            let da = pf.powi(-(la as i32));
                            let dc_over_c = (1.0 - 1.0 / pf) / phi_level;
                            val += dens * pf.powf(-rf * jc as f64) * da * dc_over_c;
                        }
                    }
                }
            }
            if val.norm() > 0.0 {
                step.push(Ball::new(p, PScalar::shell_point(p, n, u), n + level), val, Kind::Dx);
            }
        }
    }
    let out = AsymptoticMeasure { p, coord: Coordinate::xi(), step, germs: vec![] };
    out.canonicalize()
}

/// beta / (p^{jc} ucc) with the unit part resolved to `level` digits.
fn divide_to_level(p: u64, beta: &PScalar, jc: i64, ucc: u128, level: u32) -> PScalar {
    match beta.valuation(p) {
        None => PScalar::zero(),
        Some(vb) => {
            let pm = p_pow(p, level);
            let mut num = beta.numer();
            while num % p as i128 == 0 {
                num /= p as i128;
            }
            let ub = (num.rem_euclid(pm as i128)) as u128;
            let unit = ub * crate::padic::inv_mod(ucc % pm, pm) % pm;
            PScalar::shell_point(p, vb - jc, unit)
        }
    }
}

// ---------------------------------------------------------------------------
// germ extraction
// ---------------------------------------------------------------------------

/// Fitted germ profile of a measure near an anchor: smooth part c0, the
/// four quadratic coefficients of |xi|^{d/2-1}, and (for d = 2) the
/// coefficient of log_p(1/|xi|). Densities are relative to d-xi.
#[derive(Clone, Debug, Serialize)]
pub struct GermProfile {
    pub c0: [f64; 2],
    /// coefficients for eta in (triv, ur, ram1, ram2)
    pub a_eta: [[f64; 2]; 4],
    pub log_coeff: [f64; 2],
    pub exponent: Q,
    pub residual: f64,
}

impl GermProfile {
    pub fn a(&self, i: usize) -> C64 {
        C64::new(self.a_eta[i][0], self.a_eta[i][1])
    }
    pub fn c0_c(&self) -> C64 {
        C64::new(self.c0[0], self.c0[1])
    }
    pub fn log_c(&self) -> C64 {
        C64::new(self.log_coeff[0], self.log_coeff[1])
    }
    pub fn singular_coeffs(&self, d: u32) -> Vec<C64> {
        if d == 2 {
            (0..4).map(|i| self.a(i)).chain([self.log_c()]).collect()
        } else {
            (0..4).map(|i| self.a(i)).collect()
        }
    }
}

/// Solve the small complex least-squares system A x = b by normal equations;
/// returns the solution and the max-abs relative residual.
pub(crate) fn solve_ls(a: &[Vec<C64>], b: &[C64]) -> Result<(Vec<C64>, f64)> {
    let rows = a.len();
    let cols = a[0].len();
    if rows < cols {
        return Err(Error::IllConditionedFit(format!("{rows} equations for {cols} unknowns")));
    }
    let mut m = vec![vec![C64::new(0.0, 0.0); cols + 1]; cols];
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..rows {
                acc += a[r][i].conj() * a[r][j];
            }
            m[i][j] = acc;
        }
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..rows {
            acc += a[r][i].conj() * b[r];
        }
        m[i][cols] = acc;
    }
    for col in 0..cols {
        let mut piv = col;
        for r in (col + 1)..cols {
            if m[r][col].norm() > m[piv][col].norm() {
                piv = r;
            }
        }
        if m[piv][col].norm() < 1e-12 {
            return Err(Error::IllConditionedFit("singular normal equations".into()));
        }
        m.swap(col, piv);
        let inv = C64::new(1.0, 0.0) / m[col][col];
        for j in col..=cols {
            m[col][j] *= inv;
        }
        for r in 0..cols {
            if r != col {
                let f = m[r][col];
                for j in col..=cols {
                    let sub = f * m[col][j];
                    m[r][j] -= sub;
                }
            }
        }
    }
    let x: Vec<C64> = (0..cols).map(|i| m[i][cols]).collect();
    let mut scale: f64 = 1.0;
    let mut worst: f64 = 0.0;
    for r in 0..rows {
        let mut fit = C64::new(0.0, 0.0);
        for (i, xs) in x.iter().enumerate() {
            fit += a[r][i] * xs;
        }
        worst = worst.max((fit - b[r]).norm());
        scale = scale.max(b[r].norm());
    }
    Ok((x, worst / scale))
}

/// Fit the shell densities of `f` near the anchor to
/// `c0 + |xi|^{d/2-1} sum_eta a_eta eta(xi)` (log modification when d = 2)
/// over the shells `range` (valuations of `xi - anchor`; for the infinity
/// anchor the range counts -v).
pub fn germ_extract(
    f: &AsymptoticMeasure,
    d: u32,
    anchor: &Anchor,
    range: std::ops::RangeInclusive<i64>,
) -> Result<GermProfile> {
    let p = f.p;
    let pf = p as f64;
    let shifted;
    let g = match anchor {
        Anchor::Zero => f,
        Anchor::At(x) => {
            shifted = f.coordinate_shift(&x.neg())?;
            &shifted
        }
        Anchor::Infinity => f,
    };
    let exponent = Q::new(d as i64 - 2, 2);
    let ef = *exponent.numer() as f64 / *exponent.denom() as f64;
    let log_case = d == 2;
    let mut rows_a: Vec<Vec<C64>> = vec![];
    let mut rows_b: Vec<C64> = vec![];
    for n in range {
        let n = match anchor {
            Anchor::Infinity => -n,
            _ => n,
        };
        for u in 1..p {
            let ball = Ball::new(p, PScalar::shell_point(p, n, u as u128), n + 1);
            let mass = g.integrate(Region::Ball(ball))?;
            let dens = mass / ball.vol_dx(p);
            let sing = pf.powf(-ef * n as f64);
            let ur = if n % 2 == 0 { 1.0 } else { -1.0 };
            let leg = legendre(u, p) as f64;
            let mut row = vec![c(1.0)];
            if !log_case {
                row.push(c(sing));
            }
            row.push(c(sing * ur));
            row.push(c(sing * leg));
            row.push(c(sing * ur * leg));
            if log_case {
                row.push(c(n as f64)); // log_p(1/|xi|) = v(xi)
            }
            rows_a.push(row);
            rows_b.push(dens);
        }
    }
    let (x, residual) = solve_ls(&rows_a, &rows_b)?;
    let mut idx = 1;
    let a_triv = if log_case {
        C64::new(0.0, 0.0)
    } else {
        let v = x[idx];
        idx += 1;
        v
    };
    let a_ur = x[idx];
    let a_r1 = x[idx + 1];
    let a_r2 = x[idx + 2];
    let log_coeff = if log_case { x[idx + 3] } else { C64::new(0.0, 0.0) };
    Ok(GermProfile {
        c0: [x[0].re, x[0].im],
        a_eta: [
            [a_triv.re, a_triv.im],
            [a_ur.re, a_ur.im],
            [a_r1.re, a_r1.im],
            [a_r2.re, a_r2.im],
        ],
        log_coeff: [log_coeff.re, log_coeff.im],
        exponent,
        residual,
    })
}

// ---------------------------------------------------------------------------
// integration formula check
// ---------------------------------------------------------------------------

/// Exact pushforward density of the unit lattice at a point of the shell
/// v = n, computed against the Leray fiber measure by valuation counting
/// (fully independent of the convolution engine).
pub fn fiber_density_count(p: u64, d: u32, n: i64, u_square: bool) -> f64 {
    let pf = p as f64;
    let f = 1.0 - 1.0 / pf;
    match d {
        2 => (n as f64 + 1.0) * f,
        3 => {
            // h = (1-1/p)[1 + sum_{j>=1} N_j p^{-j}],
            // N_j = #{A mod p^j : A^2 = xi mod p^j}
            let mut acc = 1.0;
            for j in 1..=n {
                acc += pf.powi((j - (j + 1) / 2) as i32 - j as i32);
            }
            if n % 2 == 0 && u_square {
                acc += 2.0 * pf.powi((n / 2) as i32) * pf.powi(-(n as i32) - 1) / (1.0 - 1.0 / pf);
            }
            acc * f
        }
        4 => {
            let mut acc = 1.0;
            for j in 1..=n {
                acc += pf.powi(-j as i32) * (j as f64 * f + 1.0);
            }
            acc += (n as f64 + 1.0) * f * pf.powi(-(n as i32) - 1) / (1.0 - 1.0 / pf);
            acc * f
        }
        _ => panic!("fiber_density_count implemented for d <= 4"),
    }
}

/// Orbital volume against the compatible fiber normalization: the Leray
/// density divided by |xi|^{d/2-1}.
pub fn orbital_volume(p: u64, d: u32, n: i64, u_square: bool) -> f64 {
    let pf = p as f64;
    let ef = (d as f64 - 2.0) / 2.0;
    fiber_density_count(p, d, n, u_square) * pf.powf(ef * n as f64)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrationReport {
    pub d: u32,
    pub p: u64,
    pub shells: Vec<i64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub kappa: f64,
    pub max_rel_dev: f64,
}

/// Check the linearized integration formula on an annulus of shells: the
/// lattice mass over Q^{-1}(shell) must equal
/// kappa * int_shell |xi|^{d/2-1} O_xi d-xi, with kappa fitted on the first
/// shell and verified on the rest.
pub fn integration_check(
    q: &QuadSpace,
    annulus: std::ops::RangeInclusive<i64>,
) -> Result<IntegrationReport> {
    let p = q.p;
    let pf = p as f64;
    let d = q.d;
    if d > 4 {
        return Err(Error::Invalid("integration check covers d in {2,3,4}".into()));
    }
    let m = annulus.clone().max().unwrap() + 3;
    let push = pushforward_unit_lattice(q, m)?;
    let ef = (d as f64 - 2.0) / 2.0;
    let mut shells = vec![];
    let mut lhs = vec![];
    let mut rhs = vec![];
    for n in annulus {
        let shell_mass = push.integrate(Region::Ball(Ball::new(p, PScalar::zero(), n)))?
            - push.integrate(Region::Ball(Ball::new(p, PScalar::zero(), n + 1)))?;
        let mut r = 0.0;
        for u in 1..p {
            let sq = legendre(u, p) == 1;
            let vol = pf.powi(-(n as i32) - 1);
            r += vol * pf.powf(-ef * n as f64) * orbital_volume(p, d, n, sq);
        }
        shells.push(n);
        lhs.push(shell_mass.re);
        rhs.push(r);
    }
    let kappa = lhs[0] / rhs[0];
    let mut max_rel_dev: f64 = 0.0;
    for i in 0..shells.len() {
        let dev = (lhs[i] - kappa * rhs[i]).abs() / lhs[i].abs().max(1e-300);
        max_rel_dev = max_rel_dev.max(dev);
    }
    Ok(IntegrationReport { d, p, shells, lhs, rhs, kappa, max_rel_dev })
}
