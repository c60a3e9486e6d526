//! Blaschke factors and finite Blaschke products.
//!
//! `M_a(q) = (1 - q conj(a))^{-*} * (a - q) conj(a) / |a|` with `M_0(q) = q`,
//! and the spherical factor `M^s_a = M_a * M_{conj(a)}`, a real rational function
//! vanishing on the sphere of `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::Quaternion;
use crate::series::{real_reciprocal, RegularSeries};
use crate::zeros::ZeroSequence;

/// Target size of the truncated tail of a product.
pub const TAIL_TOL: f64 = 1e-12;
/// Largest degree picked automatically.
pub const MAX_DEFAULT_TRUNCATION: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BlaschkeFactor {
    Point {
        a: Quaternion,
    },
    /// `M_a * M_{conj(a)}`, vanishing on the whole sphere of `a`.
    Spherical {
        a: Quaternion,
    },
}

impl BlaschkeFactor {
    pub fn center(&self) -> Quaternion {
        match *self {
            BlaschkeFactor::Point { a } | BlaschkeFactor::Spherical { a } => a,
        }
    }

    /// Number of point factors it stands for.
    pub fn weight(&self) -> usize {
        match self {
            BlaschkeFactor::Point { .. } => 1,
            BlaschkeFactor::Spherical { .. } => 2,
        }
    }

    pub fn series(&self, truncation: usize) -> Result<RegularSeries> {
        match *self {
            BlaschkeFactor::Point { a } => blaschke_factor(a, truncation),
            BlaschkeFactor::Spherical { a } => spherical_factor(a, truncation),
        }
    }
}

/// An ordered `*`-product of factors with its truncated series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlaschkeProduct {
    pub factors: Vec<BlaschkeFactor>,
    pub series: RegularSeries,
    pub truncation: usize,
}

impl BlaschkeProduct {
    /// The empty product, `1`.
    pub fn identity() -> Self {
        BlaschkeProduct { factors: Vec::new(), series: RegularSeries::one(), truncation: 0 }
    }

    /// Multiplies the factors left to right.
    pub fn from_factors(factors: Vec<BlaschkeFactor>, truncation: usize) -> Result<Self> {
        let mut series = RegularSeries::one();
        for f in &factors {
            series = series.star_mul(&f.series(truncation)?);
        }
        Ok(BlaschkeProduct { factors, series, truncation })
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Zeros in the listing convention, read off the factor centers.
    pub fn centers(&self) -> ZeroSequence {
        let mut out = Vec::new();
        for f in &self.factors {
            match *f {
                BlaschkeFactor::Point { a } => out.push(a),
                BlaschkeFactor::Spherical { a } => {
                    out.push(a);
                    out.push(a.conj());
                }
            }
        }
        ZeroSequence(out)
    }

    pub fn eval(&self, q: Quaternion) -> Quaternion {
        self.series.eval(q)
    }
}

fn check_center(a: Quaternion) -> Result<()> {
    let m = a.norm();
    if !(m < 1.0) {
        return Err(Error::CenterOnBoundary { modulus: m });
    }
    Ok(())
}

/// Smallest `N` for which the tail of a product of `k` factors with centers
/// of modulus at most `rho`, bounded by `C(N + k, k - 1) rho^{N+1} / (1 - rho)`,
/// drops below `TAIL_TOL`; capped at `MAX_DEFAULT_TRUNCATION`.
pub fn default_truncation(centers: &[Quaternion]) -> usize {
    let k = centers.len().max(1);
    let rho = centers.iter().map(|a| a.norm()).fold(0.0, f64::max);
    if rho == 0.0 {
        return centers.len().max(1);
    }
    if rho >= 1.0 {
        return MAX_DEFAULT_TRUNCATION;
    }
    let mut n = k;
    while n < MAX_DEFAULT_TRUNCATION {
        let binom: f64 = (1..k).map(|j| (n + 1 + j) as f64 / j as f64).product();
        if binom * rho.powi(n as i32 + 1) / (1.0 - rho) < TAIL_TOL {
            return n;
        }
        n += 1;
    }
    MAX_DEFAULT_TRUNCATION
}

/// Truncated series of `M_a`.
pub fn blaschke_factor(a: Quaternion, truncation: usize) -> Result<RegularSeries> {
    check_center(a)?;
    if a.norm() == 0.0 {
        return Ok(RegularSeries::monomial(1, Quaternion::ONE));
    }
    let n = truncation.max(1);
    let denom = RegularSeries::new(vec![Quaternion::ONE, -a.conj()]);
    let inv = denom.star_inverse(n)?;
    let numer = RegularSeries::new(vec![a, -Quaternion::ONE]).mul_right(a.conj().scale(1.0 / a.norm()));
    Ok(inv.star_mul(&numer).truncate_to(n).with_truncated(true))
}

/// Truncated series of `M^s_a = (q^2 - 2 Re(a) q + |a|^2) / (1 - 2 Re(a) q + |a|^2 q^2)`.
pub fn spherical_factor(a: Quaternion, truncation: usize) -> Result<RegularSeries> {
    check_center(a)?;
    let (t, r2) = (2.0 * a.w, a.norm_sqr());
    if r2 == 0.0 {
        return Ok(RegularSeries::monomial(2, Quaternion::ONE));
    }
    let n = truncation.max(2);
    let inv = real_reciprocal(&[1.0, -t, r2], n);
    let mut c = vec![0.0; n + 1];
    for (k, &d) in inv.iter().enumerate() {
        for (j, &p) in [r2, -t, 1.0].iter().enumerate() {
            if k + j <= n {
                c[k + j] += p * d;
            }
        }
    }
    Ok(RegularSeries::from_real(&c).with_truncated(true))
}

/// `*`-product of the factors `M_{a_n}`, left to right; adjacent conjugate
/// pairs are merged into spherical factors.
pub fn finite_blaschke(zeros: &ZeroSequence, truncation: usize) -> Result<BlaschkeProduct> {
    let pts = zeros.points();
    let mut factors = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let a = pts[i];
        check_center(a)?;
        if i + 1 < pts.len() && is_conjugate_pair(a, pts[i + 1]) {
            factors.push(BlaschkeFactor::Spherical { a });
            i += 2;
        } else {
            factors.push(BlaschkeFactor::Point { a });
            i += 1;
        }
    }
    BlaschkeProduct::from_factors(factors, truncation)
}

const SAME_POINT_TOL: f64 = 1e-12;

fn is_conjugate_pair(a: Quaternion, b: Quaternion) -> bool {
    a.imag_norm() > SAME_POINT_TOL && a.conj().dist(b) <= SAME_POINT_TOL
}

fn same_sphere(a: Quaternion, b: Quaternion) -> bool {
    (a.w - b.w).abs() <= SAME_POINT_TOL && (a.imag_norm() - b.imag_norm()).abs() <= SAME_POINT_TOL
}

/// Groups of a target sequence: runs of a repeated point, or runs of generator/conjugate pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Group {
    Isolated { start: usize, a: Quaternion, mult: usize },
    Spherical { start: usize, a: Quaternion, pairs: usize },
}

fn group_targets(pts: &[Quaternion]) -> Result<Vec<Group>> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        let a = pts[i];
        check_center(a)?;
        if i + 1 < pts.len() && is_conjugate_pair(a, pts[i + 1]) {
            let mut pairs = 1;
            while i + 2 * pairs + 1 < pts.len()
                && pts[i + 2 * pairs].dist(a) <= SAME_POINT_TOL
                && is_conjugate_pair(a, pts[i + 2 * pairs + 1])
            {
                pairs += 1;
            }
            groups.push(Group::Spherical { start: i, a, pairs });
            i += 2 * pairs;
        } else {
            let mut mult = 1;
            while i + mult < pts.len() && pts[i + mult].dist(a) <= SAME_POINT_TOL {
                mult += 1;
            }
            groups.push(Group::Isolated { start: i, a, mult });
            i += mult;
        }
    }
    for g in &groups {
        if let Group::Isolated { start, a, .. } = *g {
            if a.imag_norm() > SAME_POINT_TOL
                && groups.iter().any(|h| matches!(*h, Group::Spherical { a: b, .. } if same_sphere(a, b)))
            {
                return Err(Error::MixedSphere { index: start });
            }
        }
    }
    Ok(groups)
}

/// A Blaschke product whose zeros are exactly the targets, in order.
///
/// Each new center is `b_n = P(a_n)^{-1} a_n P(a_n)` where `P` is the product
/// built so far, so the product keeps vanishing at `a_n` after the earlier
/// factors have moved its zeros. Runs of one repeated point become powers of
/// one factor, generator/conjugate pairs become spherical factors, and real
/// and spherical targets are kept as they are.
pub fn prescribed_zero_blaschke(targets: &ZeroSequence, truncation: usize) -> Result<BlaschkeProduct> {
    let groups = group_targets(targets.points())?;
    let scale_tol = 1e-12;
    let mut partial = RegularSeries::one();
    let mut factors = Vec::new();
    for g in groups {
        let (factor, count) = match g {
            Group::Spherical { a, pairs, .. } => (BlaschkeFactor::Spherical { a }, pairs),
            Group::Isolated { start, a, mult } => {
                let b = if a.imag_norm() <= SAME_POINT_TOL || factors.is_empty() {
                    a
                } else {
                    let p = partial.eval(a);
                    if p.norm() < scale_tol {
                        return Err(Error::CoincidentZeros { index: start, residual: p.norm() });
                    }
                    a.conjugated_by(p)?
                };
                (BlaschkeFactor::Point { a: b }, mult)
            }
        };
        let s = factor.series(truncation)?;
        for _ in 0..count {
            partial = partial.star_mul(&s);
            factors.push(factor);
        }
    }
    Ok(BlaschkeProduct { factors, series: partial, truncation })
}
