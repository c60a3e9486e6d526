//! Zero sets of regular series: isolated points and spheres `x + yS`.
//!
//! Candidates come from the roots of the symmetrization `f^s`, whose real
//! coefficients make its restriction to a slice an ordinary complex series.
//! Each conjugate root pair `x ± yi` of multiplicity `M` marks a sphere. The
//! sphere's spherical part is peeled off by real quadratic deflation while
//! `f` keeps vanishing on the whole sphere; the remaining `M - 2m` is the
//! multiplicity of the one isolated zero left on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quat::{ImaginaryUnit, Quaternion};
use crate::roots::real_poly_roots_in_disk;
use crate::series::RegularSeries;
use crate::slice::sphere_affine;

/// `|b| + |c|` below this times the coefficient scale marks a spherical zero.
pub const SPHERICAL_TOL: f64 = 1e-8;
/// Admissible `|J^2 + 1|` for `J = -b c^{-1}`.
pub const UNIT_RESIDUAL_TOL: f64 = 1e-6;
/// Admissible `|f|` at a reported zero, relative to the coefficient scale.
pub const RESIDUAL_TOL: f64 = 1e-6;
/// Slack on the radius of the closed unit ball.
pub const BALL_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ZeroRecord {
    Isolated {
        point: Quaternion,
        #[serde(rename = "mult")]
        multiplicity: usize,
    },
    /// The sphere `x + yS`, `y > 0`; the multiplicity is the even number `2m`.
    Spherical {
        x: f64,
        y: f64,
        #[serde(rename = "mult")]
        multiplicity: usize,
    },
}

impl ZeroRecord {
    pub fn multiplicity(&self) -> usize {
        match *self {
            ZeroRecord::Isolated { multiplicity, .. } | ZeroRecord::Spherical { multiplicity, .. } => multiplicity,
        }
    }

    /// `(x, y)` of the sphere containing the zero, with `y >= 0`.
    pub fn sphere(&self) -> (f64, f64) {
        match *self {
            ZeroRecord::Isolated { point, .. } => (point.w, point.imag_norm()),
            ZeroRecord::Spherical { x, y, .. } => (x, y),
        }
    }

    /// Distance between two records of the same kind, `inf` otherwise.
    pub fn distance(&self, other: &ZeroRecord) -> f64 {
        match (*self, *other) {
            (ZeroRecord::Isolated { point: a, .. }, ZeroRecord::Isolated { point: b, .. }) => a.dist(b),
            (ZeroRecord::Spherical { x, y, .. }, ZeroRecord::Spherical { x: u, y: v, .. }) => (x - u).hypot(y - v),
            _ => f64::INFINITY,
        }
    }
}

/// A root cluster of `f^s` that could not be classified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Unclassified {
    pub x: f64,
    pub y: f64,
    /// Multiplicity of `x + yi` as a root of `f^s`.
    pub root_multiplicity: usize,
    /// Relative `|b| + |c|` on the sphere after deflation.
    pub affine_residual: f64,
    /// `|J^2 + 1|` for the candidate `J = -b c^{-1}`, or the relative `|f(x)|` at a real candidate.
    pub unit_residual: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ZeroReport {
    pub zeros: Vec<ZeroRecord>,
    pub unclassified: Vec<Unclassified>,
}

impl ZeroReport {
    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty() && self.unclassified.is_empty()
    }

    /// Fails with `Unclassifiable` when some candidate was left unclassified.
    pub fn into_classified(self) -> Result<Vec<ZeroRecord>> {
        if self.unclassified.is_empty() {
            Ok(self.zeros)
        } else {
            let worst = self.unclassified.iter().map(|u| u.affine_residual.min(u.unit_residual)).fold(0.0, f64::max);
            Err(Error::Unclassifiable { count: self.unclassified.len(), worst })
        }
    }

    /// Listing convention: isolated zeros repeated, spheres as generator/conjugate pairs.
    pub fn sequence(&self) -> ZeroSequence {
        ZeroSequence::from_records(&self.zeros)
    }
}

/// Zeros in the closed unit ball.
pub fn find_zeros(f: &RegularSeries) -> Result<ZeroReport> {
    find_zeros_within(f, 1.0 + BALL_SLACK)
}

/// Zeros with `|q| <= radius`.
pub fn find_zeros_within(f: &RegularSeries, radius: f64) -> Result<ZeroReport> {
    let scale = f.max_coeff();
    if !(scale > 0.0) {
        return Err(Error::IdenticallyZero);
    }
    // the truncated head is treated as a polynomial, so f^s keeps its full degree
    let s: Vec<f64> = f.clone().with_truncated(false).symmetrization().coeffs().iter().map(|c| c.w).collect();
    let mut report = ZeroReport::default();
    for root in real_poly_roots_in_disk(&s, radius)? {
        let (x, y) = (root.center.re, root.center.im);
        if y < 0.0 {
            continue;
        }
        if y == 0.0 {
            classify_real(f, x, root.multiplicity, scale, &mut report);
        } else {
            classify_sphere(f, x, y, root.multiplicity, &mut report);
        }
    }
    report.zeros.sort_by(|a, b| a.sphere().partial_cmp(&b.sphere()).unwrap_or(std::cmp::Ordering::Equal));
    Ok(report)
}

fn classify_real(f: &RegularSeries, x: f64, root_mult: usize, scale: f64, report: &mut ZeroReport) {
    let residual = f.eval(Quaternion::real(x)).norm() / scale;
    if residual <= RESIDUAL_TOL {
        report.zeros.push(ZeroRecord::Isolated { point: Quaternion::real(x), multiplicity: root_mult.div_ceil(2) });
    } else {
        report.unclassified.push(Unclassified {
            x,
            y: 0.0,
            root_multiplicity: root_mult,
            affine_residual: f64::NAN,
            unit_residual: residual,
        });
    }
}

fn classify_sphere(f: &RegularSeries, x: f64, y: f64, root_mult: usize, report: &mut ZeroReport) {
    let t = x * x + y * y;
    let mut g = f.clone();
    let mut m = 0;
    let mut affine_residual;
    loop {
        let scale = g.max_coeff();
        let a = sphere_affine(&g, x, y);
        affine_residual = (a.b.norm() + a.c.norm()) / scale;
        if affine_residual >= SPHERICAL_TOL || 2 * (m + 1) > root_mult {
            break;
        }
        g = g.deflate_quadratic(2.0 * x, t).0;
        m += 1;
    }
    if m > 0 {
        report.zeros.push(ZeroRecord::Spherical { x, y, multiplicity: 2 * m });
    }
    let n = root_mult - 2 * m;
    if n == 0 {
        return;
    }
    let a = sphere_affine(&g, x, y);
    let scale = g.max_coeff();
    let unit = a.c.inverse().ok().map(|ci| -(a.b * ci));
    let unit_residual = unit.map_or(f64::INFINITY, |j| (j * j + Quaternion::ONE).norm());
    let accepted = unit
        .filter(|_| unit_residual < UNIT_RESIDUAL_TOL)
        .and_then(|j| ImaginaryUnit::from_direction(j.imag()).ok())
        .map(|u| u.point(x, y))
        .filter(|p| f.eval(*p).norm() <= RESIDUAL_TOL * f.max_coeff().max(scale));
    match accepted {
        Some(point) => report.zeros.push(ZeroRecord::Isolated { point, multiplicity: n }),
        None => report.unclassified.push(Unclassified { x, y, root_multiplicity: n, affine_residual, unit_residual }),
    }
}

/// Ordered zeros in the listing convention.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZeroSequence(pub Vec<Quaternion>);

impl ZeroSequence {
    pub fn new(points: Vec<Quaternion>) -> Self {
        ZeroSequence(points)
    }

    pub fn points(&self) -> &[Quaternion] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Isolated zeros repeated by multiplicity; a sphere of multiplicity `2m`
    /// as `m` pairs `a, conj(a)` with generator `a = x + y i`.
    pub fn from_records(records: &[ZeroRecord]) -> Self {
        let mut out = Vec::new();
        for r in records {
            match *r {
                ZeroRecord::Isolated { point, multiplicity } => out.extend(std::iter::repeat_n(point, multiplicity)),
                ZeroRecord::Spherical { x, y, multiplicity } => {
                    let a = Quaternion::new(x, y, 0.0, 0.0);
                    for _ in 0..multiplicity / 2 {
                        out.push(a);
                        out.push(a.conj());
                    }
                }
            }
        }
        ZeroSequence(out)
    }
}

/// `sum (1 - |a_n|)`.
pub fn blaschke_condition(zeros: &ZeroSequence) -> f64 {
    zeros.0.iter().map(|a| 1.0 - a.norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::sample_unit_sphere;
    use crate::series::tests::{random_ball_point, random_series};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    fn check_invariants(f: &RegularSeries, report: &ZeroReport) {
        let scale = f.max_coeff();
        for z in &report.zeros {
            match *z {
                ZeroRecord::Isolated { point, .. } => {
                    assert!(point.norm() <= 1.0 + BALL_SLACK);
                    assert!(f.eval(point).norm() < 1e-8 * scale);
                }
                ZeroRecord::Spherical { x, y, multiplicity } => {
                    assert!(y > 0.0 && multiplicity % 2 == 0);
                    for u in sample_unit_sphere(8) {
                        assert!(f.eval(u.point(x, y)).norm() < 1e-8 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn sphere_of_q2_plus_1() {
        let f = RegularSeries::from_real(&[1.0, 0.0, 1.0]);
        let r = find_zeros(&f).unwrap();
        assert_eq!(r.zeros, vec![ZeroRecord::Spherical { x: 0.0, y: 1.0, multiplicity: 2 }]);
        assert!(r.unclassified.is_empty());
        check_invariants(&f, &r);
    }

    #[test]
    fn single_isolated_zero() {
        let f = RegularSeries::linear(Quaternion::I);
        let r = find_zeros(&f).unwrap();
        assert_eq!(r.zeros.len(), 1);
        match r.zeros[0] {
            ZeroRecord::Isolated { point, multiplicity } => {
                assert_eq!(multiplicity, 1);
                assert!(point.dist(Quaternion::I) < 1e-12);
            }
            _ => panic!("expected an isolated zero"),
        }
    }

    #[test]
    fn product_of_two_linear_factors_on_one_sphere() {
        // (q - i)*(q - j) vanishes on S only at i, where its isolated multiplicity is 2
        let f = RegularSeries::linear(Quaternion::I).star_mul(&RegularSeries::linear(Quaternion::J));
        let r = find_zeros(&f).unwrap();
        assert_eq!(r.zeros.len(), 1);
        let ZeroRecord::Isolated { point, multiplicity } = r.zeros[0] else { panic!() };
        assert_eq!(multiplicity, 2);
        assert!(point.dist(Quaternion::I) < 1e-10);
        // dense sampling of |f| on S agrees on the location of the minimum
        let best = sample_unit_sphere(20000)
            .into_iter()
            .min_by(|a, b| f.eval(a.quat()).norm().total_cmp(&f.eval(b.quat()).norm()))
            .unwrap();
        assert!(best.quat().dist(point) < 0.05);
    }

    #[test]
    fn sphere_and_isolated_zero_on_the_same_sphere() {
        // (q^2 + 1/4)^2 * (q - j/2) * (q - 0.3)^2
        let sphere = RegularSeries::from_real(&[0.0625, 0.0, 0.5, 0.0, 1.0]);
        let f = sphere
            .star_mul(&RegularSeries::linear(q(0.0, 0.0, 0.5, 0.0)))
            .star_mul(&RegularSeries::from_real(&[0.09, -0.6, 1.0]));
        let r = find_zeros(&f).unwrap();
        assert!(r.unclassified.is_empty(), "{:?}", r.unclassified);
        assert_eq!(r.zeros.len(), 3, "{:?}", r.zeros);
        assert!(r.zeros.iter().any(|z| matches!(*z, ZeroRecord::Spherical { x, y, multiplicity: 4 } if x.abs() < 1e-9 && (y - 0.5).abs() < 1e-9)));
        assert!(r.zeros.iter().any(|z| matches!(*z, ZeroRecord::Isolated { point, multiplicity: 1 } if point.dist(q(0.0, 0.0, 0.5, 0.0)) < 1e-9)));
        assert!(r.zeros.iter().any(|z| matches!(*z, ZeroRecord::Isolated { point, multiplicity: 2 } if point.dist(Quaternion::real(0.3)) < 1e-9)));
        check_invariants(&f, &r);
    }

    #[test]
    fn zeros_outside_the_ball_are_ignored() {
        let f = RegularSeries::linear(q(0.0, 1.5, 0.0, 0.0)).star_mul(&RegularSeries::linear(Quaternion::real(-2.0)));
        assert!(find_zeros(&f).unwrap().is_empty());
        assert_eq!(find_zeros_within(&f, 2.5).unwrap().zeros.len(), 2);
    }

    #[test]
    fn zero_at_origin() {
        let f = RegularSeries::monomial(2, Quaternion::ONE).add(&RegularSeries::monomial(3, Quaternion::K.scale(0.5)));
        let r = find_zeros(&f).unwrap();
        assert_eq!(r.zeros, vec![ZeroRecord::Isolated { point: Quaternion::ZERO, multiplicity: 2 }]);
    }

    #[test]
    fn identically_zero_is_an_error() {
        assert!(matches!(find_zeros(&RegularSeries::from_real(&[0.0, 0.0])), Err(Error::IdenticallyZero)));
    }

    #[test]
    fn zeros_of_a_product_contain_the_zeros_of_the_left_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_ball_point(&mut rng, 0.8);
            let f = RegularSeries::linear(a);
            let g = random_series(&mut rng, 3);
            let h = f.star_mul(&g);
            assert!(h.eval(a).norm() < 1e-12 * h.max_coeff());
            let r = find_zeros_within(&h, 1e3).unwrap();
            let found = r.zeros.iter().any(|z| match *z {
                ZeroRecord::Isolated { point, .. } => point.dist(a) < 1e-7,
                ZeroRecord::Spherical { x, y, .. } => (x - a.w).hypot(y - a.imag_norm()) < 1e-7,
            });
            assert!(found, "{a:?} not among {:?}", r.zeros);
        }
    }

    #[test]
    fn blaschke_condition_sums() {
        assert_eq!(blaschke_condition(&ZeroSequence::default()), 0.0);
        assert_eq!(blaschke_condition(&ZeroSequence::new(vec![Quaternion::ZERO])), 1.0);
        let seq: Vec<Quaternion> = (0..=10).map(|n| Quaternion::I.scale(1.0 - 0.5f64.powi(n))).collect();
        assert!((blaschke_condition(&ZeroSequence::new(seq)) - (2.0 - 0.5f64.powi(10))).abs() < 1e-15);
    }

    #[test]
    fn listing_convention() {
        let recs = [
            ZeroRecord::Spherical { x: 0.1, y: 0.2, multiplicity: 4 },
            ZeroRecord::Isolated { point: Quaternion::J.scale(0.5), multiplicity: 2 },
        ];
        let s = ZeroSequence::from_records(&recs);
        let a = q(0.1, 0.2, 0.0, 0.0);
        assert_eq!(s.0, vec![a, a.conj(), a, a.conj(), Quaternion::J.scale(0.5), Quaternion::J.scale(0.5)]);
    }
}
