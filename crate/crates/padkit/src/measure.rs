//! Finite, exactly representable measures on Q_p: locally constant (step)
//! parts supported on disjoint balls, plus singular germ tails
//! `c |x|^a eta(x) (log_p|x|)^e d^x` anchored at 0 or infinity.
//!
//! Step densities are recorded against either the additive Haar measure `dx`
//! (vol(Z_p) = 1, self-dual) or the multiplicative Haar `d^x` normalized so
//! vol(Z_p^x) = 1, i.e. d^x = (1-1/p)^(-1) dx/|x|.

use crate::err::{Error, Result};
use crate::exec;
use crate::padic::{legendre, p_pow};
use crate::{C64, Q};
use serde::{Deserialize, Serialize};

// ---------------------------------------------------------------------------
// exact scalars of the coordinate line: Z[1/p]
// ---------------------------------------------------------------------------

/// Exact element of Z[1/p]: `num / p^e`, with `e` minimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PScalar {
    num: i128,
    e: u32,
}

impl PScalar {
    pub fn new(p: u64, num: i128, e: u32) -> Self {
        let mut num = num;
        let mut e = e;
        if num == 0 {
            return PScalar { num: 0, e: 0 };
        }
        while e > 0 && num % p as i128 == 0 {
            num /= p as i128;
            e -= 1;
        }
        PScalar { num, e }
    }
    pub fn int(n: i128) -> Self {
        PScalar { num: n, e: 0 }
    }
    pub fn zero() -> Self {
        PScalar { num: 0, e: 0 }
    }
    pub fn is_zero(&self) -> bool {
        self.num == 0
    }
    pub fn numer(&self) -> i128 {
        self.num
    }
    pub fn denom_exp(&self) -> u32 {
        self.e
    }
    /// p-adic valuation; None for zero.
    pub fn valuation(&self, p: u64) -> Option<i64> {
        if self.num == 0 {
            return None;
        }
        let mut v: i64 = -(self.e as i64);
        let mut n = self.num;
        while n % p as i128 == 0 {
            n /= p as i128;
            v += 1;
        }
        Some(v)
    }
    pub fn add(&self, p: u64, other: &PScalar) -> PScalar {
        let e = self.e.max(other.e);
        let num = self.num * p_pow(p, e - self.e) as i128 + other.num * p_pow(p, e - other.e) as i128;
        PScalar::new(p, num, e)
    }
    pub fn sub(&self, p: u64, other: &PScalar) -> PScalar {
        self.add(p, &other.neg())
    }
    pub fn neg(&self) -> PScalar {
        PScalar { num: -self.num, e: self.e }
    }
    /// Canonical representative of `self mod p^k Z_p` in [0, p^k).
    pub fn reduce_mod(&self, p: u64, k: i64) -> PScalar {
        let shift = k + self.e as i64;
        if shift <= 0 {
            return PScalar::zero();
        }
        let modulus = p_pow(p, shift as u32) as i128;
        PScalar::new(p, self.num.rem_euclid(modulus), self.e)
    }
    /// The integer `self / p^{v0}` when that is a p-integer.
    pub fn scaled_int(&self, p: u64, v0: i64) -> Option<i128> {
        let v = self.valuation(p).unwrap_or(i64::MAX);
        if self.num == 0 {
            return Some(0);
        }
        if v < v0 {
            return None;
        }
        // num / p^e / p^{v0} = num / p^{e + v0}
        let shift = self.e as i64 + v0;
        if shift <= 0 {
            Some(self.num * p_pow(p, (-shift) as u32) as i128)
        } else {
            Some(self.num / p_pow(p, shift as u32) as i128)
        }
    }
    /// The exact scalar `c * p^k` (k may be negative).
    pub fn p_power_multiple(p: u64, c: i128, k: i64) -> PScalar {
        if k >= 0 {
            PScalar::new(p, c * p_pow(p, k as u32) as i128, 0)
        } else {
            PScalar::new(p, c, (-k) as u32)
        }
    }

    /// The point p^n * u of the shell v = n.
    pub fn shell_point(p: u64, n: i64, u: u128) -> PScalar {
        Self::p_power_multiple(p, u as i128, n)
    }

    /// Render as "num" or "num/p^e".
    pub fn to_string_exact(&self, p: u64) -> String {
        if self.e == 0 {
            format!("{}", self.num)
        } else {
            format!("{}/{}", self.num, p_pow(p, self.e))
        }
    }
    pub fn parse(p: u64, s: &str) -> Result<PScalar> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num: i128 = a.trim().parse().map_err(|_| Error::Invalid(format!("bad scalar {s}")))?;
            let den: i128 = b.trim().parse().map_err(|_| Error::Invalid(format!("bad scalar {s}")))?;
            let mut e = 0u32;
            let mut d = den;
            while d % p as i128 == 0 {
                d /= p as i128;
                e += 1;
            }
            if d != 1 && d != -1 {
                return Err(Error::Invalid(format!("denominator of {s} is not a power of {p}")));
            }
            Ok(PScalar::new(p, num * d.signum(), e))
        } else {
            let num: i128 = s.parse().map_err(|_| Error::Invalid(format!("bad scalar {s}")))?;
            Ok(PScalar::int(num))
        }
    }
}

// ---------------------------------------------------------------------------
// balls and step pieces
// ---------------------------------------------------------------------------

/// The ball `center + p^k Z_p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ball {
    pub center: PScalar,
    pub k: i64,
}

impl Ball {
    pub fn new(p: u64, center: PScalar, k: i64) -> Self {
        Ball { center: center.reduce_mod(p, k), k }
    }
    pub fn contains_zero(&self, p: u64) -> bool {
        match self.center.valuation(p) {
            None => true,
            Some(v) => v >= self.k,
        }
    }
    /// Valuation of every point of the ball, if constant (i.e. 0 not inside).
    pub fn shell(&self, p: u64) -> Option<i64> {
        match self.center.valuation(p) {
            Some(v) if v < self.k => Some(v),
            _ => None,
        }
    }
    pub fn contains(&self, p: u64, x: &PScalar) -> bool {
        x.sub(p, &self.center).valuation(p).unwrap_or(i64::MAX) >= self.k
    }
    /// Nesting test: self subset-of other.
    pub fn subset_of(&self, p: u64, other: &Ball) -> bool {
        self.k >= other.k && other.contains(p, &self.center)
    }
    pub fn disjoint(&self, p: u64, other: &Ball) -> bool {
        !self.subset_of(p, other) && !other.subset_of(p, self)
    }
    /// Volume under dx (vol(Z_p) = 1): p^{-k}.
    pub fn vol_dx(&self, p: u64) -> f64 {
        (p as f64).powi(-(self.k as i32))
    }
    /// Volume under d^x (vol(Z_p^x) = 1); error if the ball contains 0.
    pub fn vol_dmulx(&self, p: u64) -> Result<f64> {
        match self.shell(p) {
            Some(v) => {
                let pf = p as f64;
                Ok(pf.powi((v - self.k) as i32) / (1.0 - 1.0 / pf))
            }
            None => Err(Error::KindMismatch("multiplicative volume of a ball containing 0".into())),
        }
    }
    /// The p children at radius exponent k+1.
    pub fn children(&self, p: u64) -> Vec<Ball> {
        (0..p)
            .map(|j| {
                let offset = PScalar::p_power_multiple(p, j as i128, self.k);
                Ball::new(p, self.center.add(p, &offset), self.k + 1)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "dx")]
    Dx,
    #[serde(rename = "dmulx")]
    Dmulx,
}

#[derive(Clone, Debug)]
pub struct Piece {
    pub ball: Ball,
    pub density: C64,
    pub kind: Kind,
}

/// Finite ball-indicator measure.
#[derive(Clone, Debug)]
pub struct SteppedMeasure {
    pub p: u64,
    pub pieces: Vec<Piece>,
}

impl SteppedMeasure {
    pub fn zero(p: u64) -> Self {
        SteppedMeasure { p, pieces: vec![] }
    }

    pub fn push(&mut self, ball: Ball, density: C64, kind: Kind) {
        self.pieces.push(Piece { ball: Ball::new(self.p, ball.center, ball.k), density, kind });
    }

    /// Total mass.
    pub fn mass(&self) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for piece in &self.pieces {
            let v = match piece.kind {
                Kind::Dx => piece.ball.vol_dx(self.p),
                Kind::Dmulx => piece.ball.vol_dmulx(self.p)?,
            };
            acc += piece.density * v;
        }
        Ok(acc)
    }

    /// Convert a piece's density to dx at its own ball (exact when |x| is
    /// constant on the ball, which holds for every valid dmulx piece).
    fn piece_dx_density(&self, piece: &Piece) -> Result<C64> {
        match piece.kind {
            Kind::Dx => Ok(piece.density),
            Kind::Dmulx => {
                let v = piece.ball.shell(self.p).ok_or_else(|| {
                    Error::KindMismatch("dmulx piece containing 0".into())
                })?;
                let pf = self.p as f64;
                // D d^x = D (1-1/p)^{-1} p^{v} dx  on shell v
                Ok(piece.density / (1.0 - 1.0 / pf) * pf.powi(v as i32))
            }
        }
    }

    /// Disjoint balls, merged siblings, overlaps resolved (all overlapping
    /// regions converted to dx densities).
    pub fn canonicalize(&self) -> Result<SteppedMeasure> {
        let p = self.p;
        // worklist of (ball, dx-density)
        let mut work: Vec<(Ball, C64, Kind)> = Vec::new();
        for piece in &self.pieces {
            if piece.density.norm() == 0.0 {
                continue;
            }
            work.push((piece.ball, piece.density, piece.kind));
        }
        let mut done: Vec<(Ball, C64, Kind)> = Vec::new();
        'outer: while let Some((ball, dens, kind)) = work.pop() {
            for i in 0..done.len() {
                let (eb, ed, ek) = done[i];
                if ball == eb {
                    // combine on the same ball, converting to dx if kinds differ
                    if ek == kind {
                        done[i].1 = ed + dens;
                    } else {
                        let d1 = self.piece_dx_density(&Piece { ball: eb, density: ed, kind: ek })?;
                        let d2 = self.piece_dx_density(&Piece { ball, density: dens, kind })?;
                        done[i] = (eb, d1 + d2, Kind::Dx);
                    }
                    continue 'outer;
                }
                if ball.subset_of(p, &eb) {
                    // split the existing larger ball one level and retry
                    let (eb, ed, ek) = done.swap_remove(i);
                    for child in eb.children(p) {
                        done.push((child, ed, ek));
                    }
                    work.push((ball, dens, kind));
                    continue 'outer;
                }
                if eb.subset_of(p, &ball) {
                    for child in ball.children(p) {
                        work.push((child, dens, kind));
                    }
                    continue 'outer;
                }
            }
            done.push((ball, dens, kind));
        }
        // merge complete sibling families with equal density and kind
        loop {
            let mut merged = false;
            let mut out: Vec<(Ball, C64, Kind)> = Vec::new();
            let mut used = vec![false; done.len()];
            for i in 0..done.len() {
                if used[i] {
                    continue;
                }
                let (b, d, k) = done[i];
                let parent = Ball::new(p, b.center, b.k - 1);
                // collect siblings
                let mut sibs = vec![i];
                for (j, item) in done.iter().enumerate().skip(i + 1) {
                    if !used[j]
                        && item.0.k == b.k
                        && item.2 == k
                        && (item.1 - d).norm() < 1e-14 * (1.0 + d.norm())
                        && item.0.subset_of(p, &parent)
                    {
                        sibs.push(j);
                    }
                }
                // a dmulx parent must not contain zero
                let parent_ok = k == Kind::Dx || !parent.contains_zero(p);
                if sibs.len() == p as usize && parent_ok {
                    for &j in &sibs {
                        used[j] = true;
                    }
                    out.push((parent, d, k));
                    merged = true;
                } else {
                    used[i] = true;
                    out.push((b, d, k));
                }
            }
            done = out;
            if !merged {
                break;
            }
        }
        done.sort_by(|a, b| {
            (a.0.k, a.0.center.num, a.0.center.e).cmp(&(b.0.k, b.0.center.num, b.0.center.e))
        });
        Ok(SteppedMeasure {
            p,
            pieces: done
                .into_iter()
                .filter(|(_, d, _)| d.norm() > 0.0)
                .map(|(ball, density, kind)| Piece { ball, density, kind })
                .collect(),
        })
    }

    /// dx-density at a point (constant on small balls around it).
    pub fn density_dx_at(&self, x: &PScalar) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for piece in &self.pieces {
            if piece.ball.contains(self.p, x) {
                acc += self.piece_dx_density(piece)?;
            }
        }
        Ok(acc)
    }

    /// Support bounds as (min shell, max piece radius exponent), None if empty.
    pub fn support_bounds(&self) -> Option<(i64, i64)> {
        let mut lo = i64::MAX;
        let mut level = i64::MIN;
        for piece in &self.pieces {
            let v = piece.ball.shell(self.p).unwrap_or(piece.ball.k);
            lo = lo.min(v);
            level = level.max(piece.ball.k);
        }
        if self.pieces.is_empty() {
            None
        } else {
            Some((lo, level))
        }
    }
}

// ---------------------------------------------------------------------------
// germ terms
// ---------------------------------------------------------------------------

/// The four quadratic characters as germ labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QuadEta {
    #[serde(rename = "triv")]
    Triv,
    #[serde(rename = "ur")]
    Ur,
    #[serde(rename = "ram1")]
    Ram1,
    #[serde(rename = "ram2")]
    Ram2,
}

impl QuadEta {
    pub fn all() -> [QuadEta; 4] {
        [QuadEta::Triv, QuadEta::Ur, QuadEta::Ram1, QuadEta::Ram2]
    }
    /// Is the unit-part the Legendre character?
    pub fn ramified(&self) -> bool {
        matches!(self, QuadEta::Ram1 | QuadEta::Ram2)
    }
    /// Value at the uniformizer p.
    pub fn zeta(&self) -> f64 {
        match self {
            QuadEta::Triv | QuadEta::Ram1 => 1.0,
            QuadEta::Ur | QuadEta::Ram2 => -1.0,
        }
    }
    /// Evaluate at x = p^v u.
    pub fn eval(&self, p: u64, v: i64, u: u128) -> f64 {
        let unit = if self.ramified() { legendre((u % p as u128) as u64, p) as f64 } else { 1.0 };
        let z = if self.zeta() < 0.0 && v % 2 != 0 { -1.0 } else { 1.0 };
        unit * z
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Anchor {
    Zero,
    Infinity,
    At(PScalar),
}

/// Singular tail `coeff * |x|^a eta(x) (log_p |x|)^e d^x`, supported on
/// v(x) >= cutoff (anchor 0) or v(x) <= -cutoff (anchor infinity).
#[derive(Clone, Copy, Debug)]
pub struct GermTerm {
    pub anchor: Anchor,
    pub a: Q,
    pub eta: QuadEta,
    pub e: u8,
    pub coeff: C64,
    pub cutoff: i64,
}

impl GermTerm {
    /// Density relative to d^x on the shell v = n, unit class u (mod p).
    /// Only valid for Zero/Infinity anchors.
    pub fn density_dmulx(&self, p: u64, n: i64, u: u128) -> C64 {
        let in_support = match self.anchor {
            Anchor::Zero => n >= self.cutoff,
            Anchor::Infinity => n <= -self.cutoff,
            Anchor::At(_) => false,
        };
        if !in_support {
            return C64::new(0.0, 0.0);
        }
        let pf = p as f64;
        let a = *self.a.numer() as f64 / *self.a.denom() as f64;
        let mag = pf.powf(-a * n as f64);
        let log_factor = if self.e == 1 { -(n as f64) } else { 1.0 };
        self.coeff * mag * log_factor * self.eta.eval(p, n, u)
    }
}

// ---------------------------------------------------------------------------
// coordinates and the asymptotic measure
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordName {
    #[serde(rename = "xi")]
    Xi,
    #[serde(rename = "zeta")]
    Zeta,
    #[serde(rename = "c")]
    C,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub name: CoordName,
    pub singular_points: Vec<PScalar>,
}

impl Coordinate {
    pub fn xi() -> Self {
        Coordinate { name: CoordName::Xi, singular_points: vec![] }
    }
    pub fn zeta() -> Self {
        Coordinate { name: CoordName::Zeta, singular_points: vec![] }
    }
    pub fn c(points: Vec<PScalar>) -> Self {
        Coordinate { name: CoordName::C, singular_points: points }
    }
}

/// Step part plus germ tails.
#[derive(Clone, Debug)]
pub struct AsymptoticMeasure {
    pub p: u64,
    pub coord: Coordinate,
    pub step: SteppedMeasure,
    pub germs: Vec<GermTerm>,
}

/// Integration region: everything, one ball, or a ball complement.
#[derive(Clone, Copy, Debug)]
pub enum Region {
    All,
    Ball(Ball),
    Complement(Ball),
}

impl AsymptoticMeasure {
    pub fn zero(p: u64, coord: Coordinate) -> Self {
        AsymptoticMeasure { p, coord, step: SteppedMeasure::zero(p), germs: vec![] }
    }

    pub fn from_step(step: SteppedMeasure, coord: Coordinate) -> Self {
        AsymptoticMeasure { p: step.p, coord, step, germs: vec![] }
    }

    pub fn is_schwartz(&self) -> bool {
        self.germs.is_empty()
    }

    /// Pointwise linear combination; requires same prime and coordinate.
    pub fn add(&self, other: &AsymptoticMeasure) -> Result<AsymptoticMeasure> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        if self.coord.name != other.coord.name {
            return Err(Error::CoordinateMismatch(format!(
                "{:?} vs {:?}",
                self.coord.name, other.coord.name
            )));
        }
        let mut step = self.step.clone();
        step.pieces.extend(other.step.pieces.iter().cloned());
        let mut germs = self.germs.clone();
        for g in &other.germs {
            if let Some(existing) = germs.iter_mut().find(|h| {
                h.anchor == g.anchor && h.a == g.a && h.eta == g.eta && h.e == g.e && h.cutoff == g.cutoff
            }) {
                existing.coeff += g.coeff;
            } else {
                germs.push(*g);
            }
        }
        germs.retain(|g| g.coeff.norm() > 0.0);
        Ok(AsymptoticMeasure { p: self.p, coord: self.coord.clone(), step: step.canonicalize()?, germs })
    }

    pub fn scale(&self, lambda: C64) -> AsymptoticMeasure {
        let mut out = self.clone();
        if lambda.norm() == 0.0 {
            return AsymptoticMeasure::zero(self.p, self.coord.clone());
        }
        for piece in &mut out.step.pieces {
            piece.density *= lambda;
        }
        for g in &mut out.germs {
            g.coeff *= lambda;
        }
        out
    }

    /// Restore disjointness of balls and of step/germ supports.
    pub fn canonicalize(&self) -> Result<AsymptoticMeasure> {
        let mut step = self.step.canonicalize()?;
        let mut germs: Vec<GermTerm> = Vec::new();
        for g in &self.germs {
            let mut g = *g;
            // advance germ cutoffs past any step support overlap, folding the
            // overlapped shells into the step part
            if let Some((lo, level)) = step.support_bounds() {
                match g.anchor {
                    Anchor::Zero => {
                        let max_shell = level - 1; // step cells live on shells < level
                        while g.cutoff <= max_shell && g.cutoff >= lo {
                            let n = g.cutoff;
                            fold_germ_shell_into_step(&mut step, &g, n)?;
                            g.cutoff += 1;
                        }
                    }
                    Anchor::Infinity => {
                        while -g.cutoff >= lo {
                            let n = -g.cutoff;
                            fold_germ_shell_into_step(&mut step, &g, n)?;
                            g.cutoff += 1;
                        }
                    }
                    Anchor::At(_) => {}
                }
            }
            if g.coeff.norm() > 0.0 {
                germs.push(g);
            }
        }
        Ok(AsymptoticMeasure { p: self.p, coord: self.coord.clone(), step: step.canonicalize()?, germs })
    }

    /// Exact integral over a region.
    pub fn integrate(&self, region: Region) -> Result<C64> {
        let p = self.p;
        let mut acc = C64::new(0.0, 0.0);
        for piece in &self.step.pieces {
            let vol_full = match piece.kind {
                Kind::Dx => piece.ball.vol_dx(p),
                Kind::Dmulx => piece.ball.vol_dmulx(p)?,
            };
            let vol = match region {
                Region::All => vol_full,
                Region::Ball(b) => {
                    if piece.ball.subset_of(p, &b) {
                        vol_full
                    } else if b.subset_of(p, &piece.ball) {
                        match piece.kind {
                            Kind::Dx => b.vol_dx(p),
                            Kind::Dmulx => {
                                // |x| constant on the piece, so on b too
                                let v = piece.ball.shell(p).unwrap();
                                let pf = p as f64;
                                pf.powi((v - b.k) as i32) / (1.0 - 1.0 / pf)
                            }
                        }
                    } else {
                        0.0
                    }
                }
                Region::Complement(b) => {
                    if piece.ball.disjoint(p, &b) {
                        vol_full
                    } else if piece.ball.subset_of(p, &b) {
                        0.0
                    } else {
                        let inner = match piece.kind {
                            Kind::Dx => b.vol_dx(p),
                            Kind::Dmulx => {
                                let v = piece.ball.shell(p).unwrap();
                                let pf = p as f64;
                                pf.powi((v - b.k) as i32) / (1.0 - 1.0 / pf)
                            }
                        };
                        vol_full - inner
                    }
                }
            };
            acc += piece.density * vol;
        }
        for g in &self.germs {
            acc += integrate_germ(p, g, region)?;
        }
        Ok(acc)
    }

    /// Translate the measure by +c0: anchors and singular points move to x + c0.
    pub fn coordinate_shift(&self, c0: &PScalar) -> Result<AsymptoticMeasure> {
        let p = self.p;
        let mut step = SteppedMeasure::zero(p);
        for piece in &self.step.pieces {
            let new_center = piece.ball.center.add(p, c0);
            let new_ball = Ball::new(p, new_center, piece.ball.k);
            // a dmulx piece that now straddles 0 loses its constant-|x| shape
            let kind = piece.kind;
            let density = if kind == Kind::Dmulx && new_ball.shell(p).is_none() {
                return Err(Error::KindMismatch(
                    "shift moves a multiplicative piece onto 0; convert to dx first".into(),
                ));
            } else {
                piece.density
            };
            step.push(new_ball, density, kind);
        }
        let mut germs = Vec::new();
        let mut anchors: Vec<PScalar> = Vec::new();
        for g in &self.germs {
            let mut g = *g;
            g.anchor = match g.anchor {
                Anchor::Infinity => Anchor::Infinity,
                Anchor::Zero => {
                    if c0.is_zero() {
                        Anchor::Zero
                    } else {
                        Anchor::At(*c0)
                    }
                }
                Anchor::At(x) => {
                    let moved = x.add(p, c0);
                    if moved.is_zero() {
                        Anchor::Zero
                    } else {
                        Anchor::At(moved)
                    }
                }
            };
            if matches!(g.anchor, Anchor::At(_) | Anchor::Zero) {
                let pt = if let Anchor::At(x) = g.anchor { x } else { PScalar::zero() };
                if anchors.iter().any(|q| {
                    q.sub(p, &pt).valuation(p).unwrap_or(i64::MAX) >= g.cutoff && *q != pt
                }) {
                    return Err(Error::AnchorCollision(format!(
                        "germ anchors closer than their cutoffs after shift by {}",
                        c0.to_string_exact(p)
                    )));
                }
                anchors.push(pt);
            }
            germs.push(g);
        }
        let singular = self
            .coord
            .singular_points
            .iter()
            .map(|s| s.add(p, c0))
            .collect();
        Ok(AsymptoticMeasure {
            p,
            coord: Coordinate { name: self.coord.name, singular_points: singular },
            step,
            germs,
        })
    }

    /// Density relative to d^x on the cell p^n (u + p^l Z_p), u a unit mod p^l.
    /// The cell must be at least as fine as every step piece it meets.
    pub fn density_dmulx_cell(&self, n: i64, u: u128, l: u32) -> Result<C64> {
        let p = self.p;
        let pf = p as f64;
        let x = PScalar::shell_point(p, n, u % p_pow(p, l));
        let mut acc = C64::new(0.0, 0.0);
        for piece in &self.step.pieces {
            if piece.ball.contains(p, &x) {
                if piece.ball.k > n + l as i64 {
                    return Err(Error::Invalid(format!(
                        "cell at level {l} coarser than piece level {}",
                        piece.ball.k - n
                    )));
                }
                let d_dx = self.step.piece_dx_density(piece)?;
                // dx = (1-1/p) |x| d^x on the shell v = n
                acc += d_dx * (1.0 - 1.0 / pf) * pf.powi(-n as i32);
            }
        }
        for g in &self.germs {
            acc += g.density_dmulx(p, n, u);
        }
        Ok(acc)
    }
}

fn fold_germ_shell_into_step(step: &mut SteppedMeasure, g: &GermTerm, n: i64) -> Result<()> {
    let p = step.p;
    // one piece per unit class mod p on the shell
    for u in 1..p {
        let density = g.density_dmulx(p, n, u as u128);
        if density.norm() == 0.0 {
            continue;
        }
        let center = PScalar::shell_point(p, n, u as u128);
        step.push(Ball::new(p, center, n + 1), density, Kind::Dmulx);
    }
    Ok(())
}

/// Closed-form sum_{n >= start} w^n and sum_{n >= start} n w^n for |w| < 1.
fn geom0(w: C64, start: i64) -> C64 {
    w.powi(start as i32) / (C64::new(1.0, 0.0) - w)
}
fn geom1(w: C64, start: i64) -> C64 {
    let one = C64::new(1.0, 0.0);
    w.powi(start as i32) * (C64::new(start as f64, 0.0) / (one - w) + w / ((one - w) * (one - w)))
}

fn integrate_germ(p: u64, g: &GermTerm, region: Region) -> Result<C64> {
    if g.coeff.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    // full shell integral of eta vanishes unless the unit part is trivial
    let pf = p as f64;
    let a = *g.a.numer() as f64 / *g.a.denom() as f64;
    let (start, towards_zero) = match g.anchor {
        Anchor::Zero => (g.cutoff, true),
        Anchor::Infinity => (g.cutoff, false),
        Anchor::At(_) => {
            return Err(Error::Invalid(
                "integrate a germ at a shifted anchor by shifting coordinates first".into(),
            ))
        }
    };
    // intersect with the region
    let shell_range_start = match region {
        Region::All => start,
        Region::Ball(b) => {
            if b.contains_zero(p) {
                if towards_zero {
                    start.max(b.k)
                } else {
                    // ball around 0 meets the infinity tail only below b.k:
                    // shells n <= -cutoff and n >= b.k
                    if -start >= b.k {
                        return partial_inf_tail(p, g, b.k);
                    }
                    return Ok(C64::new(0.0, 0.0));
                }
            } else {
                // single-shell ball: direct evaluation
                let v = b.shell(p).unwrap();
                let in_supp = if towards_zero { v >= start } else { v <= -start };
                if !in_supp {
                    return Ok(C64::new(0.0, 0.0));
                }
                let u = unit_class_of(p, &b.center);
                let density = g.density_dmulx(p, v, u);
                let vol = b.vol_dmulx(p)?;
                // eta averages to its coset value at conductor <= 1 when k-v >= 1
                return Ok(density * vol);
            }
        }
        Region::Complement(b) => {
            let full = integrate_germ(p, g, Region::All)?;
            let inner = integrate_germ(p, g, Region::Ball(b))?;
            return Ok(full - inner);
        }
    };
    if !g.eta.ramified() {
        let zeta = g.eta.zeta();
        if towards_zero {
            let w = C64::new(zeta * pf.powf(-a), 0.0);
            if w.norm() >= 1.0 {
                return Err(Error::DivergentIntegral(format!(
                    "germ exponent a = {} at 0 does not converge",
                    g.a
                )));
            }
            let s = if g.e == 0 { geom0(w, shell_range_start) } else { -geom1(w, shell_range_start) };
            return Ok(g.coeff * s);
        } else {
            // n <= -cutoff: substitute n = -j
            let w = C64::new(zeta * pf.powf(a), 0.0);
            if w.norm() >= 1.0 {
                return Err(Error::DivergentIntegral(format!(
                    "germ exponent a = {} at infinity does not converge",
                    g.a
                )));
            }
            let s = if g.e == 0 { geom0(w, start) } else { geom1(w, start) };
            return Ok(g.coeff * s);
        }
    }
    // ramified unit part: full shells integrate to zero
    Ok(C64::new(0.0, 0.0))
}

fn partial_inf_tail(p: u64, g: &GermTerm, from_k: i64) -> Result<C64> {
    // integral of an infinity germ over shells n in [-inf, ..] cap [.., -cutoff] from p^k Z_p
    if g.eta.ramified() {
        return Ok(C64::new(0.0, 0.0));
    }
    let pf = p as f64;
    let a = *g.a.numer() as f64 / *g.a.denom() as f64;
    let zeta = g.eta.zeta();
    let lo = from_k.max(i64::MIN);
    // shells n >= lo and n <= -cutoff: finite only if -cutoff >= lo
    if -g.cutoff < lo {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut acc = C64::new(0.0, 0.0);
    for n in lo..=-g.cutoff {
        let sgn = if zeta < 0.0 && n % 2 != 0 { -1.0 } else { 1.0 };
        let term = pf.powf(-a * n as f64) * sgn * if g.e == 1 { -(n as f64) } else { 1.0 };
        acc += g.coeff * term;
    }
    Ok(acc)
}

fn unit_class_of(p: u64, c: &PScalar) -> u128 {
    // unit part of the center mod p
    let v = c.valuation(p).unwrap_or(0);
    let mut n = c.num;
    let mut e = c.e as i64;
    // normalize to integer * p^j
    while n % p as i128 == 0 {
        n /= p as i128;
        e -= 1;
    }
    let _ = v;
    let _ = e;
    (n.rem_euclid(p as i128)) as u128
}

// ---------------------------------------------------------------------------
// cell grids and additive convolution
// ---------------------------------------------------------------------------

/// Level-L masses of a compactly supported measure on p^{v0} Z_p.
/// `masses[i]` is the mass of the cell `p^{v0} i + p^L Z_p`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub p: u64,
    pub v0: i64,
    pub level: i64,
    pub masses: Vec<C64>,
}

impl Grid {
    pub fn cells(&self) -> usize {
        p_pow(self.p, (self.level - self.v0) as u32) as usize
    }

    pub fn zero(p: u64, v0: i64, level: i64) -> Self {
        let n = p_pow(p, (level - v0) as u32) as usize;
        Grid { p, v0, level, masses: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn from_stepped(m: &SteppedMeasure, level: i64) -> Result<Grid> {
        let p = m.p;
        let mut v0 = 0i64;
        for piece in &m.pieces {
            if piece.ball.k > level {
                return Err(Error::InsufficientPrecision(format!(
                    "piece level {} exceeds grid level {level}",
                    piece.ball.k
                )));
            }
            let v = piece.ball.shell(p).unwrap_or(piece.ball.k);
            v0 = v0.min(v);
        }
        let n = p_pow(p, (level - v0) as u32);
        if n > 1 << 26 {
            return Err(Error::InstanceTooLarge(format!("grid would need {n} cells")));
        }
        let mut grid = Grid::zero(p, v0, level);
        for piece in &m.pieces {
            let d_dx = m.piece_dx_density(piece)?;
            let mass_per_cell = d_dx * (p as f64).powi(-level as i32);
            let base = piece
                .ball
                .center
                .scaled_int(p, v0)
                .ok_or_else(|| Error::Invalid("piece below grid window".into()))?
                .rem_euclid(n as i128) as usize;
            let stride = p_pow(p, (piece.ball.k - v0) as u32) as usize;
            let count = p_pow(p, (level - piece.ball.k) as u32) as usize;
            for j in 0..count {
                let idx = (base + j * stride) % n as usize;
                grid.masses[idx] += mass_per_cell;
            }
        }
        Ok(grid)
    }

    /// Exact additive convolution of cell masses (cyclic in the cell index).
    pub fn convolve(&self, other: &Grid) -> Result<Grid> {
        if self.p != other.p {
            return Err(Error::PrimeMismatch(self.p, other.p));
        }
        let p = self.p;
        let v0 = self.v0.min(other.v0);
        let level = self.level.max(other.level);
        let a = self.regrid(v0, level)?;
        let b = other.regrid(v0, level)?;
        let n = a.masses.len();
        let bm = &b.masses;
        let am = &a.masses;
        // skip empty cells of the sparser factor
        let nz: Vec<usize> = (0..n).filter(|&i| am[i].norm() > 0.0).collect();
        let masses = exec::map_cells(n, |k| {
            let mut acc = C64::new(0.0, 0.0);
            for &i in &nz {
                let j = (k + n - i) % n;
                acc += am[i] * bm[j];
            }
            acc
        });
        Ok(Grid { p, v0, level, masses })
    }

    pub fn regrid(&self, v0: i64, level: i64) -> Result<Grid> {
        if v0 == self.v0 && level == self.level {
            return Ok(self.clone());
        }
        if v0 > self.v0 || level < self.level {
            return Err(Error::Invalid("regrid must refine".into()));
        }
        let p = self.p;
        let mut out = Grid::zero(p, v0, level);
        let n_out = out.masses.len();
        let split = p_pow(p, (level - self.level) as u32) as usize;
        let scale = p_pow(p, (self.v0 - v0) as u32) as usize;
        let stride_out = p_pow(p, (self.level - v0) as u32) as usize;
        for (i, &mass) in self.masses.iter().enumerate() {
            if mass.norm() == 0.0 {
                continue;
            }
            let base = (i * scale) % n_out;
            let per = mass / split as f64;
            for j in 0..split {
                out.masses[(base + j * stride_out) % n_out] += per;
            }
        }
        Ok(out)
    }

    /// Back to a step measure; the mass of the zero cell `p^L Z_p` is
    /// returned separately since its interior profile is not determined.
    pub fn to_stepped(&self) -> (SteppedMeasure, C64) {
        let p = self.p;
        let mut m = SteppedMeasure::zero(p);
        let mut zero_mass = C64::new(0.0, 0.0);
        let scale = (p as f64).powi(self.level as i32);
        for (i, &mass) in self.masses.iter().enumerate() {
            if mass.norm() == 0.0 {
                continue;
            }
            if i == 0 {
                zero_mass = mass;
                continue;
            }
            let center = PScalar::p_power_multiple(p, i as i128, self.v0);
            m.push(Ball::new(p, center, self.level), mass * scale, Kind::Dx);
        }
        (m, zero_mass)
    }
}

/// Additive convolution of two compactly supported step measures, exact.
pub fn additive_convolve(f: &SteppedMeasure, g: &SteppedMeasure) -> Result<SteppedMeasure> {
    if f.p != g.p {
        return Err(Error::PrimeMismatch(f.p, g.p));
    }
    for piece in f.pieces.iter().chain(g.pieces.iter()) {
        if piece.kind != Kind::Dx {
            return Err(Error::KindMismatch(
                "additive convolution requires additive-Haar pieces".into(),
            ));
        }
    }
    if f.pieces.is_empty() || g.pieces.is_empty() {
        return Ok(SteppedMeasure::zero(f.p));
    }
    let level = f
        .pieces
        .iter()
        .chain(g.pieces.iter())
        .map(|piece| piece.ball.k)
        .max()
        .unwrap();
    let fa = Grid::from_stepped(f, level)?;
    let gb = Grid::from_stepped(g, level)?;
    let out = fa.convolve(&gb)?;
    let (mut m, zero_mass) = out.to_stepped();
    if zero_mass.norm() > 0.0 {
        // inputs are exactly level-L constant, so the output is too
        m.push(
            Ball::new(f.p, PScalar::zero(), level),
            zero_mass * (f.p as f64).powi(level as i32),
            Kind::Dx,
        );
    }
    m.canonicalize()
}

// ---------------------------------------------------------------------------
// JSON interchange
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct PieceJson {
    center: String,
    k: i64,
    density: [f64; 2],
    kind: Kind,
}

#[derive(Serialize, Deserialize)]
struct GermJson {
    anchor: String,
    a: String,
    eta: QuadEta,
    e: u8,
    coeff: [f64; 2],
    #[serde(rename = "K")]
    cutoff: i64,
}

#[derive(Serialize, Deserialize)]
struct MeasureJson {
    p: u64,
    coordinate: CoordName,
    singular_points: Vec<String>,
    step: Vec<PieceJson>,
    germs: Vec<GermJson>,
}

impl AsymptoticMeasure {
    pub fn to_json(&self) -> serde_json::Value {
        let p = self.p;
        let m = MeasureJson {
            p,
            coordinate: self.coord.name,
            singular_points: self
                .coord
                .singular_points
                .iter()
                .map(|s| s.to_string_exact(p))
                .collect(),
            step: self
                .step
                .pieces
                .iter()
                .map(|piece| PieceJson {
                    center: piece.ball.center.to_string_exact(p),
                    k: piece.ball.k,
                    density: [piece.density.re, piece.density.im],
                    kind: piece.kind,
                })
                .collect(),
            germs: self
                .germs
                .iter()
                .map(|g| GermJson {
                    anchor: match g.anchor {
                        Anchor::Zero => "0".into(),
                        Anchor::Infinity => "inf".into(),
                        Anchor::At(x) => x.to_string_exact(p),
                    },
                    a: format!("{}/{}", g.a.numer(), g.a.denom()),
                    eta: g.eta,
                    e: g.e,
                    coeff: [g.coeff.re, g.coeff.im],
                    cutoff: g.cutoff,
                })
                .collect(),
        };
        serde_json::to_value(m).expect("measure serialization")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<AsymptoticMeasure> {
        let m: MeasureJson = serde_json::from_value(v.clone())?;
        let p = m.p;
        if !crate::padic::is_odd_prime(p) {
            return Err(Error::UnsupportedPrime(p));
        }
        let mut step = SteppedMeasure::zero(p);
        for piece in &m.step {
            step.push(
                Ball::new(p, PScalar::parse(p, &piece.center)?, piece.k),
                C64::new(piece.density[0], piece.density[1]),
                piece.kind,
            );
        }
        let mut germs = Vec::new();
        for g in &m.germs {
            let anchor = match g.anchor.as_str() {
                "0" => Anchor::Zero,
                "inf" => Anchor::Infinity,
                s => Anchor::At(PScalar::parse(p, s)?),
            };
            let (num, den) = g
                .a
                .split_once('/')
                .ok_or_else(|| Error::Invalid(format!("bad exponent {}", g.a)))?;
            germs.push(GermTerm {
                anchor,
                a: Q::new(
                    num.trim().parse().map_err(|_| Error::Invalid("bad exponent".into()))?,
                    den.trim().parse().map_err(|_| Error::Invalid("bad exponent".into()))?,
                ),
                eta: g.eta,
                e: g.e,
                coeff: C64::new(g.coeff[0], g.coeff[1]),
                cutoff: g.cutoff,
            });
        }
        let singular = m
            .singular_points
            .iter()
            .map(|s| PScalar::parse(p, s))
            .collect::<Result<Vec<_>>>()?;
        Ok(AsymptoticMeasure {
            p,
            coord: Coordinate { name: m.coordinate, singular_points: singular },
            step,
            germs,
        })
    }
}

// ---------------------------------------------------------------------------

/// 1_{Z_p} dx as an asymptotic measure (handy in tests).
pub fn unit_ball_dx(p: u64, coord: Coordinate) -> AsymptoticMeasure {
    let mut step = SteppedMeasure::zero(p);
    step.push(Ball::new(p, PScalar::zero(), 0), C64::new(1.0, 0.0), Kind::Dx);
    AsymptoticMeasure::from_step(step, coord)
}

/// 1_{Z_p^x} d^x as an asymptotic measure.
pub fn unit_group_dmulx(p: u64, coord: Coordinate) -> AsymptoticMeasure {
    let mut step = SteppedMeasure::zero(p);
    for u in 1..p {
        step.push(
            Ball::new(p, PScalar::int(u as i128), 1),
            C64::new(1.0, 0.0),
            Kind::Dmulx,
        );
    }
    AsymptoticMeasure::from_step(step, coord)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn integrate_examples() {
        let p = 3;
        let f = unit_ball_dx(p, Coordinate::xi());
        assert!((f.integrate(Region::All).unwrap() - c(1.0)).norm() < 1e-12);
        // 1_{pZ_p} dx -> 1/p
        let mut step = SteppedMeasure::zero(p);
        step.push(Ball::new(p, PScalar::zero(), 1), c(1.0), Kind::Dx);
        let g = AsymptoticMeasure::from_step(step, Coordinate::xi());
        assert!((g.integrate(Region::All).unwrap() - c(1.0 / 3.0)).norm() < 1e-12);
        // germ |x| d^x on v >= 1 -> 1/(p-1)
        let germ = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step: SteppedMeasure::zero(p),
            germs: vec![GermTerm {
                anchor: Anchor::Zero,
                a: Q::new(1, 1),
                eta: QuadEta::Triv,
                e: 0,
                coeff: c(1.0),
                cutoff: 1,
            }],
        };
        assert!((germ.integrate(Region::All).unwrap() - c(0.5)).norm() < 1e-12);
    }

    #[test]
    fn divergent_germ_rejected() {
        let p = 3;
        let germ = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step: SteppedMeasure::zero(p),
            germs: vec![GermTerm {
                anchor: Anchor::Zero,
                a: Q::new(0, 1),
                eta: QuadEta::Triv,
                e: 0,
                coeff: c(1.0),
                cutoff: 0,
            }],
        };
        assert!(matches!(
            germ.integrate(Region::All),
            Err(Error::DivergentIntegral(_))
        ));
    }

    #[test]
    fn canonicalize_overlap() {
        let p = 3;
        // Z_p with density 1 overlapping pZ_p with density 1
        let mut step = SteppedMeasure::zero(p);
        step.push(Ball::new(p, PScalar::zero(), 0), c(1.0), Kind::Dx);
        step.push(Ball::new(p, PScalar::zero(), 1), c(1.0), Kind::Dx);
        let canon = step.canonicalize().unwrap();
        // mass must be preserved: 1 + 1/3
        let m = AsymptoticMeasure::from_step(canon.clone(), Coordinate::xi());
        assert!((m.integrate(Region::All).unwrap() - c(1.0 + 1.0 / 3.0)).norm() < 1e-12);
        // density at a point of pZ_p is 2, at a unit it is 1
        assert!((canon.density_dx_at(&PScalar::int(3)).unwrap() - c(2.0)).norm() < 1e-12);
        assert!((canon.density_dx_at(&PScalar::int(1)).unwrap() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn canonicalize_idempotent() {
        let p = 5;
        let mut step = SteppedMeasure::zero(p);
        step.push(Ball::new(p, PScalar::int(2), 1), c(1.5), Kind::Dx);
        step.push(Ball::new(p, PScalar::zero(), 0), c(0.25), Kind::Dx);
        step.push(Ball::new(p, PScalar::int(7), 2), c(-0.5), Kind::Dx);
        let once = step.canonicalize().unwrap();
        let twice = once.canonicalize().unwrap();
        assert_eq!(once.pieces.len(), twice.pieces.len());
        for (a, b) in once.pieces.iter().zip(twice.pieces.iter()) {
            assert_eq!(a.ball, b.ball);
            assert!((a.density - b.density).norm() < 1e-14);
        }
    }

    #[test]
    fn convolve_unit_balls() {
        let p = 5;
        // 1_{Z_p} * 1_{Z_p} = 1_{Z_p}
        let f = unit_ball_dx(p, Coordinate::xi()).step;
        let out = additive_convolve(&f, &f).unwrap();
        let m = AsymptoticMeasure::from_step(out.clone(), Coordinate::xi());
        assert!((m.integrate(Region::All).unwrap() - c(1.0)).norm() < 1e-12);
        assert!((out.density_dx_at(&PScalar::int(2)).unwrap() - c(1.0)).norm() < 1e-12);
        assert!((out.density_dx_at(&PScalar::int(5)).unwrap() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn convolve_probability_in_zp() {
        let p = 5;
        let f = unit_ball_dx(p, Coordinate::xi()).step;
        // p * 1_{pZ_p} dx is a probability measure
        let mut g = SteppedMeasure::zero(p);
        g.push(Ball::new(p, PScalar::zero(), 1), c(5.0), Kind::Dx);
        let out = additive_convolve(&f, &g).unwrap();
        // result is 1_{Z_p} dx again
        for x in [0i128, 1, 3, 5, 24] {
            assert!((out.density_dx_at(&PScalar::int(x)).unwrap() - c(1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn convolve_cosets() {
        let p = 3;
        // 1_{1+pZ_p} * 1_{1+pZ_p} = (1/p) 1_{2+pZ_p}
        let mut f = SteppedMeasure::zero(p);
        f.push(Ball::new(p, PScalar::int(1), 1), c(1.0), Kind::Dx);
        let out = additive_convolve(&f, &f).unwrap();
        assert!((out.density_dx_at(&PScalar::int(2)).unwrap() - c(1.0 / 3.0)).norm() < 1e-12);
        assert!(out.density_dx_at(&PScalar::int(0)).unwrap().norm() < 1e-12);
        assert!(out.density_dx_at(&PScalar::int(1)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn convolve_commutative_associative() {
        let p = 3;
        let mut rng = crate::rng::CounterRng::new(5);
        for _ in 0..20 {
            let mut ms = vec![];
            for _ in 0..3 {
                let mut m = SteppedMeasure::zero(p);
                for _ in 0..3 {
                    let k = rng.range_i64(0, 2);
                    let cpt = rng.range_i64(0, 8);
                    m.push(Ball::new(p, PScalar::int(cpt as i128), k), rng.complex(), Kind::Dx);
                }
                ms.push(m.canonicalize().unwrap());
            }
            let ab = additive_convolve(&ms[0], &ms[1]).unwrap();
            let ba = additive_convolve(&ms[1], &ms[0]).unwrap();
            let abc = additive_convolve(&ab, &ms[2]).unwrap();
            let bca = additive_convolve(&additive_convolve(&ms[1], &ms[2]).unwrap(), &ms[0]).unwrap();
            for x in [0i128, 1, 2, 3, 7, 9] {
                let pt = PScalar::int(x);
                assert!(
                    (ab.density_dx_at(&pt).unwrap() - ba.density_dx_at(&pt).unwrap()).norm() < 1e-12
                );
                assert!(
                    (abc.density_dx_at(&pt).unwrap() - bca.density_dx_at(&pt).unwrap()).norm()
                        < 1e-12
                );
            }
            // mass is multiplicative
            let lhs = ab.mass().unwrap();
            let rhs = ms[0].mass().unwrap() * ms[1].mass().unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn shift_examples() {
        let p = 3;
        let f = unit_ball_dx(p, Coordinate::xi());
        let g = f.coordinate_shift(&PScalar::int(1)).unwrap();
        // 1 + Z_p = Z_p
        assert!((g.step.density_dx_at(&PScalar::int(0)).unwrap() - c(1.0)).norm() < 1e-12);
        // shifting a germ at 0 by c0 anchors it at c0
        let germ = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step: SteppedMeasure::zero(p),
            germs: vec![GermTerm {
                anchor: Anchor::Zero,
                a: Q::new(1, 1),
                eta: QuadEta::Triv,
                e: 0,
                coeff: c(1.0),
                cutoff: 0,
            }],
        };
        let shifted = germ.coordinate_shift(&PScalar::int(9)).unwrap();
        assert!(matches!(shifted.germs[0].anchor, Anchor::At(x) if x == PScalar::int(9)));
        let back = shifted.coordinate_shift(&PScalar::int(-9)).unwrap();
        assert!(matches!(back.germs[0].anchor, Anchor::Zero));
    }

    #[test]
    fn add_and_scale() {
        let p = 3;
        let f = unit_ball_dx(p, Coordinate::xi());
        let sum = f.add(&f).unwrap();
        assert!((sum.integrate(Region::All).unwrap() - c(2.0)).norm() < 1e-12);
        let z = f.scale(C64::new(0.0, 0.0));
        assert!(z.step.pieces.is_empty() && z.germs.is_empty());
        let zeta_coord = AsymptoticMeasure::zero(p, Coordinate::zeta());
        assert!(matches!(f.add(&zeta_coord), Err(Error::CoordinateMismatch(_))));
    }

    #[test]
    fn integrate_linear() {
        let p = 5;
        let mut rng = crate::rng::CounterRng::new(17);
        for _ in 0..10 {
            let mut m1 = SteppedMeasure::zero(p);
            let mut m2 = SteppedMeasure::zero(p);
            for _ in 0..4 {
                m1.push(
                    Ball::new(p, PScalar::int(rng.range_i64(0, 24) as i128), rng.range_i64(0, 2)),
                    rng.complex(),
                    Kind::Dx,
                );
                m2.push(
                    Ball::new(p, PScalar::int(rng.range_i64(0, 24) as i128), rng.range_i64(0, 2)),
                    rng.complex(),
                    Kind::Dx,
                );
            }
            let f = AsymptoticMeasure::from_step(m1, Coordinate::xi());
            let g = AsymptoticMeasure::from_step(m2, Coordinate::xi());
            let both = f.add(&g).unwrap();
            let lhs = both.integrate(Region::All).unwrap();
            let rhs = f.integrate(Region::All).unwrap() + g.integrate(Region::All).unwrap();
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn json_roundtrip() {
        let p = 3;
        let mut step = SteppedMeasure::zero(p);
        step.push(Ball::new(p, PScalar::new(p, 4, 2), 1), C64::new(0.5, -0.25), Kind::Dmulx);
        let m = AsymptoticMeasure {
            p,
            coord: Coordinate::c(vec![PScalar::int(0), PScalar::int(1)]),
            step,
            germs: vec![GermTerm {
                anchor: Anchor::Infinity,
                a: Q::new(-1, 2),
                eta: QuadEta::Ram2,
                e: 1,
                coeff: C64::new(1.0, 2.0),
                cutoff: 3,
            }],
        };
        let v = m.to_json();
        let back = AsymptoticMeasure::from_json(&v).unwrap();
        assert_eq!(back.p, p);
        assert_eq!(back.step.pieces.len(), 1);
        assert_eq!(back.germs.len(), 1);
        assert_eq!(back.germs[0].cutoff, 3);
        assert_eq!(back.coord.singular_points.len(), 2);
        assert_eq!(v, back.to_json());
    }

    #[test]
    fn germ_step_disjointness_restored() {
        let p = 3;
        let mut step = SteppedMeasure::zero(p);
        // step support on shells 0..2 (level 3 pieces)
        step.push(Ball::new(p, PScalar::int(1), 3), c(1.0), Kind::Dx);
        let m = AsymptoticMeasure {
            p,
            coord: Coordinate::xi(),
            step,
            germs: vec![GermTerm {
                anchor: Anchor::Zero,
                a: Q::new(1, 1),
                eta: QuadEta::Triv,
                e: 0,
                coeff: c(1.0),
                cutoff: 1,
            }],
        };
        let total_before = m.integrate(Region::All).unwrap();
        let canon = m.canonicalize().unwrap();
        assert!(canon.germs[0].cutoff >= 3);
        let total_after = canon.integrate(Region::All).unwrap();
        assert!((total_before - total_after).norm() < 1e-12);
    }
}
