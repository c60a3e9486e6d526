//! Power series `f(q) = sum q^n a_n` with right quaternion coefficients and the
//! regular (*-) product calculus on them.
//!
//! A series is either *exact* (it is the whole function, a polynomial) or
//! *truncated* (it is the head of an infinite series, such as a `*`-inverse or a
//! Blaschke factor). The distinction drives error estimates and the divergence
//! heuristics of the norm routines.

use crate::error::{Error, Result};
use crate::quat::{ImaginaryUnit, Quaternion, UNIT_TOL};

/// Radius above which evaluation reports that the truncation error is not controlled.
pub const DEFAULT_WARN_RADIUS: f64 = 0.999;

/// Coefficients of `|a_0|^2` below this make a series non-invertible.
pub const INVERSE_TOL: f64 = 1e-12;

const SPAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RegularSeries {
    coeffs: Vec<Quaternion>,
    truncated: bool,
}

/// Value of a series at a point together with an estimate of the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub value: Quaternion,
    pub truncation_error: f64,
    /// `|q|` exceeded the warning radius.
    pub beyond_radius: bool,
}

/// Which slices `L_I = R + R I` the series maps into themselves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicePreservationInfo {
    pub preserves_all_slices: bool,
    pub preserved_slice: Option<ImaginaryUnit>,
}

impl SlicePreservationInfo {
    pub fn preserves(&self, unit: ImaginaryUnit) -> bool {
        self.preserves_all_slices || self.preserved_slice.is_some_and(|u| (u.dot(unit).abs() - 1.0).abs() < 1e-9)
    }
}

impl RegularSeries {
    /// An exact polynomial. An empty coefficient list is the zero function.
    pub fn new(coeffs: Vec<Quaternion>) -> Self {
        let coeffs = if coeffs.is_empty() { vec![Quaternion::ZERO] } else { coeffs };
        RegularSeries { coeffs, truncated: false }
    }

    /// The first `coeffs.len()` terms of an infinite series.
    pub fn truncated(coeffs: Vec<Quaternion>) -> Self {
        let mut s = Self::new(coeffs);
        s.truncated = true;
        s
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Quaternion::real(c)).collect())
    }

    pub fn constant(c: Quaternion) -> Self {
        Self::new(vec![c])
    }

    pub fn one() -> Self {
        Self::constant(Quaternion::ONE)
    }

    /// `q^n c`.
    pub fn monomial(n: usize, c: Quaternion) -> Self {
        let mut coeffs = vec![Quaternion::ZERO; n + 1];
        coeffs[n] = c;
        Self::new(coeffs)
    }

    /// `q - r`.
    pub fn linear(r: Quaternion) -> Self {
        Self::new(vec![-r, Quaternion::ONE])
    }

    pub fn coeffs(&self) -> &[Quaternion] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Quaternion> {
        self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn with_truncated(mut self, flag: bool) -> Self {
        self.truncated = flag;
        self
    }

    pub fn coeff(&self, n: usize) -> Quaternion {
        self.coeffs.get(n).copied().unwrap_or(Quaternion::ZERO)
    }

    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.coeffs.iter().all(|c| c.norm() <= tol)
    }

    /// Drops trailing coefficients of modulus at most `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        let mut c = self.coeffs.clone();
        while c.len() > 1 && c.last().is_some_and(|a| a.norm() <= tol) {
            c.pop();
        }
        RegularSeries { coeffs: c, truncated: self.truncated }
    }

    /// Keeps the terms of degree `<= n`. The result is marked truncated only if
    /// something nonzero was dropped or the input already was.
    pub fn truncate_to(&self, n: usize) -> Self {
        if n >= self.degree() {
            return self.clone();
        }
        let dropped = self.coeffs[n + 1..].iter().any(|c| *c != Quaternion::ZERO);
        RegularSeries { coeffs: self.coeffs[..=n].to_vec(), truncated: self.truncated || dropped }
    }

    /// `f(q) = sum q^n a_n` by Horner's scheme, powers of `q` on the left.
    pub fn eval(&self, q: Quaternion) -> Quaternion {
        let mut acc = *self.coeffs.last().unwrap();
        for a in self.coeffs.iter().rev().skip(1) {
            acc = *a + q * acc;
        }
        acc
    }

    /// `sum a_n q^n`, powers of `q` on the right.
    pub fn eval_right(&self, q: Quaternion) -> Quaternion {
        let mut acc = *self.coeffs.last().unwrap();
        for a in self.coeffs.iter().rev().skip(1) {
            acc = *a + acc * q;
        }
        acc
    }

    pub fn eval_checked(&self, q: Quaternion, warn_radius: f64) -> Evaluation {
        let r = q.norm();
        Evaluation { value: self.eval(q), truncation_error: self.truncation_error(r), beyond_radius: r > warn_radius }
    }

    /// Estimated modulus of the omitted tail at radius `r`.
    ///
    /// Zero for exact series. Inside the ball this is `|a_N| r^N / (1 - r)`. On
    /// and beyond the boundary the decay rate of the last coefficients is used
    /// instead; the estimate is infinite when they do not decay.
    pub fn truncation_error(&self, r: f64) -> f64 {
        if !self.truncated {
            return 0.0;
        }
        let n = self.degree();
        let last = self.coeffs[n].norm();
        let inside = if r < 1.0 { last * r.powi(n as i32) / (1.0 - r) } else { f64::INFINITY };
        let observed = match self.tail_decay() {
            Some(rho) if rho * r < 1.0 => last * r.powi(n as i32) * (rho * r) / (1.0 - rho * r),
            _ => f64::INFINITY,
        };
        inside.min(observed)
    }

    /// Geometric decay rate of the last few coefficients.
    pub fn tail_decay(&self) -> Option<f64> {
        let n = self.degree();
        if n < 2 {
            return None;
        }
        let m = n.min(8);
        let scale = self.max_coeff().max(f64::MIN_POSITIVE);
        let floor = 1e-300_f64.max(scale * 1e-18);
        // the largest of the last few terms, to avoid being fooled by one small coefficient
        let top = self.coeffs[n + 1 - m / 2..=n].iter().map(|c| c.norm()).fold(0.0, f64::max);
        let bottom = self.coeffs[n - m..n - m / 2].iter().map(|c| c.norm()).fold(0.0, f64::max);
        if top <= floor {
            return Some(0.0);
        }
        let span = (m - m / 2) as f64;
        Some(((top + floor) / (bottom + floor)).powf(1.0 / span))
    }

    pub fn add(&self, other: &RegularSeries) -> RegularSeries {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &RegularSeries) -> RegularSeries {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &RegularSeries, op: impl Fn(Quaternion, Quaternion) -> Quaternion) -> RegularSeries {
        let mut n = self.degree().max(other.degree());
        let truncated = self.truncated || other.truncated;
        if self.truncated {
            n = n.min(self.degree());
        }
        if other.truncated {
            n = n.min(other.degree());
        }
        let coeffs = (0..=n).map(|k| op(self.coeff(k), other.coeff(k))).collect();
        RegularSeries { coeffs, truncated }
    }

    /// `f(q) c`: every coefficient multiplied on the right.
    pub fn mul_right(&self, c: Quaternion) -> RegularSeries {
        RegularSeries { coeffs: self.coeffs.iter().map(|a| *a * c).collect(), truncated: self.truncated }
    }

    /// `c * f`, the regular product with a constant on the left.
    pub fn mul_left(&self, c: Quaternion) -> RegularSeries {
        RegularSeries { coeffs: self.coeffs.iter().map(|a| c * *a).collect(), truncated: self.truncated }
    }

    pub fn scale(&self, s: f64) -> RegularSeries {
        self.mul_right(Quaternion::real(s))
    }

    /// The regular product: `c_n = sum_k a_k b_{n-k}`.
    ///
    /// A truncated factor limits the result to the smallest truncation degree
    /// among truncated factors, beyond which the coefficients are unknown.
    pub fn star_mul(&self, other: &RegularSeries) -> RegularSeries {
        let full = self.degree() + other.degree();
        let mut n = full;
        if self.truncated {
            n = n.min(self.degree());
        }
        if other.truncated {
            n = n.min(other.degree());
        }
        let a = &self.coeffs;
        let b = &other.coeffs;
        let coeffs = (0..=n)
            .map(|k| {
                let lo = k.saturating_sub(b.len() - 1);
                let hi = k.min(a.len() - 1);
                let mut s = Quaternion::ZERO;
                for i in lo..=hi {
                    s += a[i] * b[k - i];
                }
                s
            })
            .collect();
        RegularSeries { coeffs, truncated: self.truncated || other.truncated }
    }

    /// Product of several series, left to right.
    pub fn star_product<'a>(factors: impl IntoIterator<Item = &'a RegularSeries>) -> RegularSeries {
        factors.into_iter().fold(RegularSeries::one(), |acc, f| acc.star_mul(f))
    }

    /// `f^c`: conjugated coefficients.
    pub fn regular_conjugate(&self) -> RegularSeries {
        RegularSeries { coeffs: self.coeffs.iter().map(|a| a.conj()).collect(), truncated: self.truncated }
    }

    /// `f^s = f * f^c = f^c * f`, a series with real coefficients.
    ///
    /// Both products are formed and averaged; the discarded imaginary parts and
    /// the gap between the two orders are available from [`Self::symmetrization_defect`].
    pub fn symmetrization(&self) -> RegularSeries {
        let fc = self.regular_conjugate();
        let a = self.star_mul(&fc);
        let b = fc.star_mul(self);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| Quaternion::real(0.5 * (x.w + y.w))).collect();
        RegularSeries { coeffs, truncated: self.truncated }
    }

    /// Largest imaginary part in `f * f^c` or `f^c * f`, or difference between them.
    pub fn symmetrization_defect(&self) -> f64 {
        let fc = self.regular_conjugate();
        let a = self.star_mul(&fc);
        let b = fc.star_mul(self);
        a.coeffs
            .iter()
            .zip(&b.coeffs)
            .map(|(x, y)| x.imag_norm().max(y.imag_norm()).max((*x - *y).norm()))
            .fold(0.0, f64::max)
    }

    /// `f^{-*} = (f^s)^{-1} f^c` through degree `out_degree`.
    ///
    /// For a truncated input the output degree is capped by the input's.
    pub fn star_inverse(&self, out_degree: usize) -> Result<RegularSeries> {
        let a0 = self.coeffs[0].norm_sqr();
        if a0 < INVERSE_TOL {
            return Err(Error::SingularAtOrigin(a0));
        }
        let mut n = out_degree;
        if self.truncated {
            n = n.min(self.degree());
        }
        let s: Vec<f64> = self.symmetrization().coeffs.iter().map(|c| c.w).collect();
        let d = real_reciprocal(&s, n);
        let fc = self.regular_conjugate();
        let coeffs = (0..=n)
            .map(|k| {
                let mut acc = Quaternion::ZERO;
                for i in 0..=k.min(fc.degree()) {
                    acc += fc.coeffs[i] * d[k - i];
                }
                acc
            })
            .collect();
        let exact = self.degree() == 0 && !self.truncated;
        Ok(RegularSeries { coeffs, truncated: !exact })
    }

    /// Detects real coefficients, or a single slice containing all coefficients.
    pub fn slice_preservation(&self) -> SlicePreservationInfo {
        let tol = |a: &Quaternion| SPAN_TOL * (1.0 + a.norm());
        if self.coeffs.iter().all(|a| a.imag_norm() < tol(a)) {
            return SlicePreservationInfo { preserves_all_slices: true, preserved_slice: None };
        }
        let lead = self.coeffs.iter().copied().max_by(|a, b| a.imag_norm().total_cmp(&b.imag_norm())).unwrap();
        let mut u = lead.imag().scale(1.0 / lead.imag_norm());
        let first = u.vector().into_iter().find(|c| c.abs() > UNIT_TOL).unwrap_or(1.0);
        if first < 0.0 {
            u = -u;
        }
        let inside = self.coeffs.iter().all(|a| {
            let v = a.imag();
            let residual = v - u.scale(v.dot(u));
            residual.norm() < tol(a)
        });
        let preserved_slice = if inside { ImaginaryUnit::from_direction(u).ok() } else { None };
        SlicePreservationInfo { preserves_all_slices: false, preserved_slice }
    }

    /// Divides on the left by `q - r`: returns `g` and `f(r)` with `f = (q - r) * g + f(r)`.
    pub fn deflate_left(&self, r: Quaternion) -> (RegularSeries, Quaternion) {
        let n = self.degree();
        if n == 0 {
            return (RegularSeries { coeffs: vec![Quaternion::ZERO], truncated: self.truncated }, self.coeffs[0]);
        }
        let mut g = vec![Quaternion::ZERO; n];
        g[n - 1] = self.coeffs[n];
        for k in (1..n).rev() {
            g[k - 1] = self.coeffs[k] + r * g[k];
        }
        let rem = self.coeffs[0] + r * g[0];
        (RegularSeries { coeffs: g, truncated: self.truncated }, rem)
    }

    /// Divides on the right by `q - r`: `f = g * (q - r) + rem`.
    pub fn deflate_right(&self, r: Quaternion) -> (RegularSeries, Quaternion) {
        let n = self.degree();
        if n == 0 {
            return (RegularSeries { coeffs: vec![Quaternion::ZERO], truncated: self.truncated }, self.coeffs[0]);
        }
        let mut g = vec![Quaternion::ZERO; n];
        g[n - 1] = self.coeffs[n];
        for k in (1..n).rev() {
            g[k - 1] = self.coeffs[k] + g[k] * r;
        }
        let rem = self.coeffs[0] + g[0] * r;
        (RegularSeries { coeffs: g, truncated: self.truncated }, rem)
    }

    /// Divides by the real quadratic `q^2 - s q + t`: `f = (q^2 - s q + t) g + (r_0 + q r_1)`.
    pub fn deflate_quadratic(&self, s: f64, t: f64) -> (RegularSeries, Quaternion, Quaternion) {
        let n = self.degree();
        if n < 2 {
            return (
                RegularSeries { coeffs: vec![Quaternion::ZERO], truncated: self.truncated },
                self.coeffs[0],
                self.coeff(1),
            );
        }
        let mut g = vec![Quaternion::ZERO; n - 1];
        for k in (0..n - 1).rev() {
            let g1 = if k + 1 < n - 1 { g[k + 1] } else { Quaternion::ZERO };
            let g2 = if k + 2 < n - 1 { g[k + 2] } else { Quaternion::ZERO };
            g[k] = self.coeffs[k + 2] + g1.scale(s) - g2.scale(t);
        }
        let g0 = g[0];
        let g1 = if n - 1 > 1 { g[1] } else { Quaternion::ZERO };
        let r1 = self.coeffs[1] + g0.scale(s) - g1.scale(t);
        let r0 = self.coeffs[0] - g0.scale(t);
        (RegularSeries { coeffs: g, truncated: self.truncated }, r0, r1)
    }

    /// Product with a real polynomial (which commutes with everything).
    pub fn mul_real_poly(&self, p: &[f64]) -> RegularSeries {
        let r = RegularSeries::from_real(p);
        self.star_mul(&r)
    }

    /// Largest coefficient gap, over the degrees both series define.
    pub fn max_coeff_diff(&self, other: &RegularSeries) -> f64 {
        let mut n = self.degree().max(other.degree());
        if self.truncated {
            n = n.min(self.degree());
        }
        if other.truncated {
            n = n.min(other.degree());
        }
        (0..=n).map(|k| (self.coeff(k) - other.coeff(k)).norm()).fold(0.0, f64::max)
    }

    /// True when every coefficient lies in `L_unit` within `tol (1 + |a_n|)`.
    pub fn in_slice(&self, unit: ImaginaryUnit, tol: f64) -> bool {
        self.slice_residual(unit) <= tol
    }

    /// Largest relative distance of a coefficient from `L_unit`.
    pub fn slice_residual(&self, unit: ImaginaryUnit) -> f64 {
        let u = unit.quat();
        self.coeffs
            .iter()
            .map(|a| {
                let v = a.imag();
                (v - u.scale(v.dot(u))).norm() / (1.0 + a.norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Coefficients `d_0..d_n` of `1 / s(q)` for a real series with `s_0 != 0`.
pub fn real_reciprocal(s: &[f64], n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n + 1];
    d[0] = 1.0 / s[0];
    for k in 1..=n {
        let mut acc = 0.0;
        for i in 1..=k.min(s.len() - 1) {
            acc += s[i] * d[k - i];
        }
        d[k] = -acc * d[0];
    }
    d
}

/// Binomial-like product of real polynomials.
pub fn real_poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}
