//! Slicewise tools: splitting a series into two holomorphic components on a
//! slice, the affine structure of a regular function on each sphere `x + y S`,
//! and the conjugation map `T_f`.

use crate::error::{Error, Result};
use crate::quat::{sample_unit_sphere, ImaginaryUnit, Quaternion, UNIT_TOL};
use crate::series::RegularSeries;

/// Below this `|f^s(q)|` the conjugation map is considered undefined.
pub const CONJUGATION_TOL: f64 = 1e-12;

const SLICE_TOL: f64 = 1e-10;

/// `a_n = F_n + G_n J` with `F_n, G_n` in `L_I`.
#[derive(Clone, Debug, PartialEq)]
pub struct SliceSplitting {
    pub i: ImaginaryUnit,
    pub j: ImaginaryUnit,
    pub f_coeffs: Vec<Quaternion>,
    pub g_coeffs: Vec<Quaternion>,
}

impl SliceSplitting {
    /// `F(z)` for `z` in `L_I`.
    pub fn eval_f(&self, z: Quaternion) -> Quaternion {
        horner(&self.f_coeffs, z)
    }

    pub fn eval_g(&self, z: Quaternion) -> Quaternion {
        horner(&self.g_coeffs, z)
    }

    pub fn f_series(&self) -> RegularSeries {
        RegularSeries::new(self.f_coeffs.clone())
    }

    pub fn g_series(&self) -> RegularSeries {
        RegularSeries::new(self.g_coeffs.clone())
    }
}

fn horner(c: &[Quaternion], z: Quaternion) -> Quaternion {
    c.iter().rev().fold(Quaternion::ZERO, |acc, a| *a + z * acc)
}

fn check_orthogonal(i: ImaginaryUnit, j: ImaginaryUnit) -> Result<()> {
    let d = i.dot(j);
    if d.abs() > UNIT_TOL {
        return Err(Error::NonOrthogonal(d));
    }
    Ok(())
}

/// Coefficientwise splitting of `f` along the orthonormal frame `1, I, J, IJ`.
pub fn split(f: &RegularSeries, i: ImaginaryUnit, j: ImaginaryUnit) -> Result<SliceSplitting> {
    check_orthogonal(i, j)?;
    let (iq, jq) = (i.quat(), j.quat());
    let ij = iq * jq;
    let mut f_coeffs = Vec::with_capacity(f.coeffs().len());
    let mut g_coeffs = Vec::with_capacity(f.coeffs().len());
    for a in f.coeffs() {
        let v = a.imag();
        f_coeffs.push(i.point(a.w, v.dot(iq)));
        g_coeffs.push(i.point(v.dot(jq), v.dot(ij)));
    }
    Ok(SliceSplitting { i, j, f_coeffs, g_coeffs })
}

/// Rebuilds the series `sum q^n (F_n + G_n J)`.
pub fn extend(
    f_coeffs: &[Quaternion],
    g_coeffs: &[Quaternion],
    i: ImaginaryUnit,
    j: ImaginaryUnit,
) -> Result<RegularSeries> {
    check_orthogonal(i, j)?;
    let n = f_coeffs.len().max(g_coeffs.len());
    let zero = Quaternion::ZERO;
    let mut coeffs = Vec::with_capacity(n);
    for k in 0..n {
        let fk = f_coeffs.get(k).copied().unwrap_or(zero);
        let gk = g_coeffs.get(k).copied().unwrap_or(zero);
        let worst = slice_distance(fk, i).max(slice_distance(gk, i));
        if worst > SLICE_TOL {
            return Err(Error::NotSlicePreserving(worst));
        }
        coeffs.push(fk + gk * j.quat());
    }
    Ok(RegularSeries::new(coeffs))
}

/// Distance of `a` from `L_I`, relative to `1 + |a|`.
pub fn slice_distance(a: Quaternion, unit: ImaginaryUnit) -> f64 {
    let v = a.imag();
    let u = unit.quat();
    (v - u.scale(v.dot(u))).norm() / (1.0 + a.norm())
}

/// `f(x + yJ) = (1 - JI)/2 f(x + yI) + (1 + JI)/2 f(x - yI)`.
pub fn representation_eval(f: &RegularSeries, x: f64, y: f64, i: ImaginaryUnit, j: ImaginaryUnit) -> Quaternion {
    let plus = f.eval(i.point(x, y));
    let minus = f.eval(i.point(x, -y));
    let ji = j.quat() * i.quat();
    (Quaternion::ONE - ji) * plus * 0.5 + (Quaternion::ONE + ji) * minus * 0.5
}

/// `f(x + yJ) = b + J c` for every `J` in `S`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereAffineForm {
    pub x: f64,
    pub y: f64,
    pub b: Quaternion,
    pub c: Quaternion,
}

/// Extremes of `|b + J c|` over `J` in `S`, with the units where they occur.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereExtremes {
    pub max: f64,
    pub min: f64,
    pub argmax: ImaginaryUnit,
    pub argmin: ImaginaryUnit,
}

impl SphereAffineForm {
    pub fn eval(&self, unit: ImaginaryUnit) -> Quaternion {
        self.b + unit.quat() * self.c
    }

    /// `|b|^2 + |c|^2`, the mean of `|f|^2` over the sphere.
    pub fn mean_square(&self) -> f64 {
        self.b.norm_sqr() + self.c.norm_sqr()
    }

    /// `v = 2 Im(b conj(c))`, so that `|b + Jc|^2 = |b|^2 + |c|^2 + <J, v>`.
    pub fn tilt(&self) -> [f64; 3] {
        let w = self.b * self.c.conj();
        [2.0 * w.x, 2.0 * w.y, 2.0 * w.z]
    }

    /// Closed form: a linear functional of `J` ranges over `[-|v|, |v|]` on `S`.
    pub fn extremes(&self) -> SphereExtremes {
        let a = self.mean_square();
        let v = self.tilt();
        let m = crate::quat::vnorm(v);
        let argmax = if m > 0.0 { ImaginaryUnit::from_vector(v).unwrap_or(ImaginaryUnit::I) } else { ImaginaryUnit::I };
        SphereExtremes { max: (a + m).max(0.0).sqrt(), min: (a - m).max(0.0).sqrt(), argmax, argmin: argmax.opposite() }
    }

    /// Extremes found by evaluation alone: the best of `n` sampled units,
    /// polished by a pattern search on the sphere.
    pub fn extremes_sampled(&self, n: usize) -> (f64, f64) {
        let units = sample_unit_sphere(n);
        let modulus = |u: ImaginaryUnit| self.eval(u).norm();
        let best_hi = units.iter().copied().max_by(|a, b| modulus(*a).total_cmp(&modulus(*b))).unwrap();
        let best_lo = units.iter().copied().min_by(|a, b| modulus(*a).total_cmp(&modulus(*b))).unwrap();
        let hi = pattern_search(best_hi, modulus);
        let lo = -pattern_search(best_lo, |u| -modulus(u));
        (hi, lo)
    }
}

/// Maximizes `g` over `S` from `start` by compass search in the tangent plane.
fn pattern_search(start: ImaginaryUnit, g: impl Fn(ImaginaryUnit) -> f64) -> f64 {
    let mut u = start;
    let mut best = g(u);
    let mut step = 0.05;
    while step > 1e-10 {
        let e1 = u.orthogonal();
        let e2 = ImaginaryUnit::from_vector(crate::quat::cross(u.vector(), e1.vector())).unwrap();
        let mut moved = false;
        for (d, s) in [(e1, 1.0), (e1, -1.0), (e2, 1.0), (e2, -1.0)] {
            let v = u.quat() + d.quat().scale(s * step);
            let cand = ImaginaryUnit::from_direction(v).unwrap();
            let val = g(cand);
            if val > best {
                best = val;
                u = cand;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    best
}

/// `b` and `c` computed from the values at `x + yI` and `x - yI`.
pub fn sphere_affine_with(f: &RegularSeries, x: f64, y: f64, unit: ImaginaryUnit) -> SphereAffineForm {
    let plus = f.eval(unit.point(x, y));
    let minus = f.eval(unit.point(x, -y));
    SphereAffineForm { x, y, b: (plus + minus) * 0.5, c: unit.quat() * (minus - plus) * 0.5 }
}

pub fn sphere_affine(f: &RegularSeries, x: f64, y: f64) -> SphereAffineForm {
    sphere_affine_with(f, x, y, ImaginaryUnit::I)
}

/// Largest and smallest `|f|` on the sphere `x + y S`.
pub fn sphere_max_min_modulus(f: &RegularSeries, x: f64, y: f64) -> (f64, f64) {
    let e = sphere_affine(f, x, y).extremes();
    (e.max, e.min)
}

/// `T_f(q) = f^c(q)^{-1} q f^c(q)`.
pub fn conjugation_map(f: &RegularSeries, q: Quaternion) -> Result<Quaternion> {
    let s = f.symmetrization().eval(q).norm();
    if s < CONJUGATION_TOL {
        return Err(Error::SingularConjugation(s));
    }
    let fc = f.regular_conjugate().eval(q);
    q.conjugated_by(fc).map_err(|_| Error::SingularConjugation(s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::{sample_unit_sphere_seeded, slice_decompose};
    use crate::series::tests::{random_ball_point, random_series};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const I: Quaternion = Quaternion::I;
    const J: Quaternion = Quaternion::J;
    const K: Quaternion = Quaternion::K;

    #[test]
    fn split_examples() {
        let (ui, uj) = (ImaginaryUnit::I, ImaginaryUnit::J);
        let s = split(&RegularSeries::linear(I), ui, uj).unwrap();
        assert_eq!(s.f_coeffs, vec![-I, Quaternion::ONE]);
        assert!(s.g_coeffs.iter().all(|g| g.norm() == 0.0));

        let s = split(&RegularSeries::new(vec![Quaternion::ZERO, J]), ui, uj).unwrap();
        assert!(s.f_coeffs.iter().all(|g| g.norm() == 0.0));
        assert_eq!(s.g_coeffs[1], Quaternion::ONE);

        let s = split(&RegularSeries::new(vec![Quaternion::ZERO, I + K]), ui, uj).unwrap();
        assert_eq!(s.f_coeffs[1], I);
        assert_eq!(s.g_coeffs[1], I);

        assert_eq!(split(&RegularSeries::one(), ui, ui), Err(Error::NonOrthogonal(1.0)));
    }

    #[test]
    fn extend_examples() {
        let (ui, uj) = (ImaginaryUnit::I, ImaginaryUnit::J);
        let f = extend(&[Quaternion::ZERO, Quaternion::ZERO, Quaternion::ONE], &[], ui, uj).unwrap();
        assert_eq!(f, RegularSeries::monomial(2, Quaternion::ONE));
        let f = extend(&[Quaternion::ZERO], &[Quaternion::ONE], ui, uj).unwrap();
        assert_eq!(f, RegularSeries::constant(J));
        assert!(matches!(extend(&[J], &[], ui, uj), Err(Error::NotSlicePreserving(_))));
    }

    #[test]
    fn split_identity_on_the_slice() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ui = ImaginaryUnit::from_vector([0.2, 0.9, -0.4]).unwrap();
        let uj = ui.orthogonal();
        for _ in 0..20 {
            let f = random_series(&mut rng, 6);
            let s = split(&f, ui, uj).unwrap();
            let back = extend(&s.f_coeffs, &s.g_coeffs, ui, uj).unwrap();
            assert!(back.max_coeff_diff(&f) < 1e-13);
            for _ in 0..10 {
                let z = ui.point(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
                let lhs = f.eval(z);
                let rhs = s.eval_f(z) + s.eval_g(z) * uj.quat();
                assert!((lhs - rhs).norm() < 1e-12);
                // |f_I|^2 = |F|^2 + |G|^2 on the slice
                let m = s.eval_f(z).norm_sqr() + s.eval_g(z).norm_sqr();
                assert!((lhs.norm_sqr() - m).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn representation_examples() {
        let sq = RegularSeries::monomial(2, Quaternion::ONE);
        let (x, y) = (0.3, 0.4);
        let uj = ImaginaryUnit::from_vector([1.0, 2.0, 2.0]).unwrap();
        let v = representation_eval(&sq, x, y, ImaginaryUnit::I, uj);
        let expect = Quaternion::real(x * x - y * y) + uj.quat() * (2.0 * x * y);
        assert!((v - expect).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let f = random_series(&mut rng, 5);
        let v = representation_eval(&f, 0.4, 0.0, ImaginaryUnit::K, uj);
        assert!((v - f.eval(Quaternion::real(0.4))).norm() < 1e-15);
        let v = representation_eval(&f, 0.1, 0.5, uj, uj);
        assert!((v - f.eval(uj.point(0.1, 0.5))).norm() < 1e-15);
    }

    #[test]
    fn representation_matches_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let units = sample_unit_sphere_seeded(40, 13);
        for k in 0..1000 {
            let f = random_series(&mut rng, 6);
            let p = random_ball_point(&mut rng, 1.0);
            let s = slice_decompose(p);
            let i = units[k % 40];
            let j = units[(7 * k + 3) % 40];
            let v = representation_eval(&f, s.x, s.y, i, j);
            assert!((v - f.eval(j.point(s.x, s.y))).norm() < 1e-10);
        }
    }

    #[test]
    fn sphere_affine_examples() {
        let a = sphere_affine(&RegularSeries::monomial(2, Quaternion::ONE), 0.0, 1.0);
        assert_eq!((a.b, a.c), (Quaternion::real(-1.0), Quaternion::ZERO));
        let a = sphere_affine(&RegularSeries::monomial(1, Quaternion::ONE), 0.25, 0.5);
        assert_eq!((a.b, a.c), (Quaternion::real(0.25), Quaternion::real(0.5)));
        let a = sphere_affine(&RegularSeries::linear(I), 0.0, 1.0);
        assert_eq!((a.b, a.c), (-I, Quaternion::ONE));
    }

    #[test]
    fn sphere_affine_is_independent_of_the_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for u in sample_unit_sphere_seeded(30, 14) {
            let f = random_series(&mut rng, 7);
            let (x, y) = (rng.gen_range(-0.6..0.6), rng.gen_range(0.0..0.7));
            let a = sphere_affine(&f, x, y);
            let b = sphere_affine_with(&f, x, y, u);
            assert!((a.b - b.b).norm() < 1e-10 && (a.c - b.c).norm() < 1e-10);
            for w in sample_unit_sphere_seeded(10, 99) {
                assert!((a.eval(w) - f.eval(w.point(x, y))).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn closed_form_extremes_match_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..20 {
            let f = random_series(&mut rng, 5);
            let (x, y) = (rng.gen_range(-0.6..0.6), rng.gen_range(0.05..0.7));
            let a = sphere_affine(&f, x, y);
            let e = a.extremes();
            let (hi, lo) = a.extremes_sampled(10_000);
            assert!(e.max >= hi - 1e-12 && e.min <= lo + 1e-12);
            assert!(e.max - hi < 1e-8 && lo - e.min < 1e-8, "{} {} {} {}", e.max, hi, e.min, lo);
            assert!((a.eval(e.argmax).norm() - e.max).abs() < 1e-12);
            assert!((a.eval(e.argmin).norm() - e.min).abs() < 1e-12);
        }
    }

    #[test]
    fn extremes_examples() {
        let (hi, lo) = sphere_max_min_modulus(&RegularSeries::monomial(2, Quaternion::ONE), 0.0, 1.0);
        assert!((hi - 1.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);

        // one-slice-preserving: the extremes sit on the slice itself
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let f = RegularSeries::new(
                (0..5).map(|_| ImaginaryUnit::I.point(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            );
            let (x, y) = (rng.gen_range(-0.6..0.6), rng.gen_range(0.0..0.7));
            let (hi, lo) = sphere_max_min_modulus(&f, x, y);
            let a = f.eval(ImaginaryUnit::I.point(x, y)).norm();
            let b = f.eval(ImaginaryUnit::I.point(x, -y)).norm();
            assert!((hi - a.max(b)).abs() < 1e-12);
            assert!((lo - a.min(b)).abs() < 1e-12);
        }
    }

    #[test]
    fn conjugate_has_the_same_sphere_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let f = random_series(&mut rng, 6);
            let (x, y) = (rng.gen_range(-0.6..0.6), rng.gen_range(0.0..0.7));
            let (h1, l1) = sphere_max_min_modulus(&f, x, y);
            let (h2, l2) = sphere_max_min_modulus(&f.regular_conjugate(), x, y);
            assert!((h1 - h2).abs() < 1e-8 && (l1 - l2).abs() < 1e-8);
        }
    }

    #[test]
    fn zeros_on_a_preserved_slice_spread_to_the_sphere() {
        // f has L_i coefficients and vanishes at x + yJ with J != +-i
        let (x, y) = (0.2, 0.5);
        let g = RegularSeries::new(vec![ImaginaryUnit::I.point(0.3, 0.7), ImaginaryUnit::I.point(-1.0, 0.2)]);
        let f = RegularSeries::from_real(&[x * x + y * y, -2.0 * x, 1.0]).star_mul(&g);
        let uj = ImaginaryUnit::from_vector([0.0, 0.6, 0.8]).unwrap();
        assert!(f.eval(uj.point(x, y)).norm() < 1e-12);
        for k in sample_unit_sphere_seeded(50, 4) {
            assert!(f.eval(k.point(x, y)).norm() < 1e-9);
        }
    }

    #[test]
    fn conjugation_map_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let real = RegularSeries::from_real(&[0.5, -1.0, 0.3]);
        for _ in 0..1000 {
            let f = random_series(&mut rng, 4);
            let p = random_ball_point(&mut rng, 1.0);
            let Ok(t) = conjugation_map(&f, p) else { continue };
            assert!((t.norm() - p.norm()).abs() < 1e-12);
            assert!((t.w - p.w).abs() < 1e-12);
            let back = conjugation_map(&f.regular_conjugate(), t).unwrap();
            assert!((back - p).norm() < 1e-9, "{back:?} {p:?}");
            if let Ok(id) = conjugation_map(&real, p) {
                assert!((id - p).norm() < 1e-14);
            }
            // T_f fixes real points
            let x = Quaternion::real(p.w);
            if let Ok(tx) = conjugation_map(&f, x) {
                assert!((tx - x).norm() < 1e-14);
            }
        }
        let f = RegularSeries::linear(I);
        assert!(matches!(conjugation_map(&f, J), Err(Error::SingularConjugation(_))));
    }
}
