//! Factorizations: zero extraction `f = h * g` with `g` a Blaschke product, and
//! the outer/inner split `f = E * S * B` of functions preserving one slice.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::blaschke::{blaschke_factor, default_truncation, BlaschkeFactor, BlaschkeProduct};
use crate::error::{Error, Result};
use crate::hardy::{circle_angles, hardy_norm, Exponent, QuadratureSpec};
use crate::quat::{exp_on_slice, ImaginaryUnit, Quaternion};
use crate::series::RegularSeries;
use crate::slice::sphere_affine;
use crate::zeros::{find_zeros, find_zeros_within, ZeroRecord, ZeroSequence, UNIT_RESIDUAL_TOL};

/// Zeros with `| |a| - 1 | <= BOUNDARY_BAND` count as boundary zeros.
pub const BOUNDARY_BAND: f64 = 1e-6;
/// Coefficients may leave `L_I` by this much (relative) and still count as slice preserving.
pub const SLICE_TOL: f64 = 1e-10;
/// Boundary values below this fraction of the largest are clamped before taking logs.
pub const LOG_FLOOR: f64 = 1e-13;
const MAX_OUTER_NODES: usize = 1 << 20;

/// `f = h * g` with `h` free of zeros inside the ball.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroExtraction {
    pub h: RegularSeries,
    pub g: BlaschkeProduct,
    /// `max |(h * g)_n - f_n| / max |f_n|`.
    pub residual: f64,
    /// Zeros on the unit sphere, left inside `h`.
    pub boundary_zeros: Vec<ZeroRecord>,
}

fn on_boundary(r: &ZeroRecord) -> bool {
    let (x, y) = r.sphere();
    x.hypot(y) >= 1.0 - BOUNDARY_BAND
}

/// Splits off every zero inside the ball.
///
/// Spheres and real zeros are divided out as real rational functions. Each
/// remaining isolated zero `p` is removed one at a time: with
/// `gamma = h(conj p)^{-1} conj(p) h(conj p)`, the product `h * M_gamma`
/// vanishes on the whole sphere of `p`, so `h * M_gamma = M^s_p h'` and
/// `h = h' * M_gamma^c`. Repeating on `h'` also handles isolated multiplicities.
/// `truncation` defaults to the degree needed by the zeros found.
pub fn extract_zeros(f: &RegularSeries, truncation: Option<usize>) -> Result<ZeroExtraction> {
    let zeros = find_zeros(f)?.into_classified()?;
    let (boundary, interior): (Vec<ZeroRecord>, Vec<ZeroRecord>) = zeros.into_iter().partition(on_boundary);
    let seq = ZeroSequence::from_records(&interior);
    let n = truncation.unwrap_or_else(|| default_truncation(seq.points()).max(f.degree()));

    let mut alpha = Vec::new();
    let mut h = f.clone();
    let mut isolated = Vec::new();
    for rec in &interior {
        match *rec {
            ZeroRecord::Spherical { x, y, multiplicity } => {
                let t = x * x + y * y;
                for _ in 0..multiplicity / 2 {
                    h = h.deflate_quadratic(2.0 * x, t).0.mul_real_poly(&[1.0, -2.0 * x, t]);
                    alpha.push(BlaschkeFactor::Spherical { a: Quaternion::new(x, y, 0.0, 0.0) });
                }
            }
            ZeroRecord::Isolated { point, multiplicity } if point.imag_norm() == 0.0 => {
                let x = point.w;
                for _ in 0..multiplicity {
                    let g = h.deflate_left(point).0;
                    // M_x = sign(x) (x - q) / (1 - x q), and M_0 = q
                    h = if x == 0.0 { g } else { g.mul_real_poly(&[-x.signum(), x.signum() * x]) };
                    alpha.push(BlaschkeFactor::Point { a: point });
                }
            }
            ZeroRecord::Isolated { point, multiplicity } => isolated.push((point, multiplicity)),
        }
    }

    let mut gammas = Vec::new();
    let mut b_beta = RegularSeries::one();
    for (point, mult) in isolated {
        let (x, y) = (point.w, point.imag_norm());
        let t = x * x + y * y;
        let mut p = point;
        for k in 0..mult {
            if k > 0 {
                p = locate_isolated(&h, x, y)?;
            }
            let hv = h.eval(p.conj());
            if hv.norm() < 1e-12 * h.max_coeff() {
                return Err(Error::SingularConjugation(hv.norm()));
            }
            let gamma = p.conj().conjugated_by(hv)?;
            let m = blaschke_factor(gamma, n)?;
            let prod = h.star_mul(&m).truncate_to(n);
            h = prod
                .deflate_quadratic(2.0 * x, t)
                .0
                .mul_real_poly(&[1.0, -2.0 * x, t])
                .truncate_to(n)
                .with_truncated(true);
            b_beta = b_beta.star_mul(&m).truncate_to(n);
            gammas.push(gamma);
        }
    }

    let mut factors = alpha;
    factors.extend(gammas.iter().rev().map(|g| BlaschkeFactor::Point { a: g.conj() }));
    let alpha_product = BlaschkeProduct::from_factors(factors[..factors.len() - gammas.len()].to_vec(), n)?;
    let series = if gammas.is_empty() {
        alpha_product.series
    } else {
        alpha_product.series.star_mul(&b_beta.regular_conjugate()).truncate_to(n)
    };
    let g = if factors.is_empty() {
        BlaschkeProduct::identity()
    } else {
        BlaschkeProduct { factors, series, truncation: n }
    };
    let residual = h.star_mul(&g.series).max_coeff_diff(f) / f.max_coeff();
    Ok(ZeroExtraction { h, g, residual, boundary_zeros: boundary })
}

/// The one isolated zero of `h` on the sphere `x + yS`, from `b + Jc = 0`.
fn locate_isolated(h: &RegularSeries, x: f64, y: f64) -> Result<Quaternion> {
    let a = sphere_affine(h, x, y);
    let j = -(a.b * a.c.inverse()?);
    let res = (j * j + Quaternion::ONE).norm();
    if res >= UNIT_RESIDUAL_TOL {
        return Err(Error::Unclassifiable { count: 1, worst: res });
    }
    Ok(ImaginaryUnit::from_direction(j.imag())?.point(x, y))
}

/// Coefficients `a_n = u_n + v_n I` of a series preserving `L_I`, as complex numbers `u_n + i v_n`.
pub fn slice_coefficients(f: &RegularSeries, unit: ImaginaryUnit) -> Result<Vec<Complex64>> {
    let res = f.slice_residual(unit);
    if res > SLICE_TOL {
        return Err(Error::NotSlicePreserving(res));
    }
    let u = unit.quat();
    Ok(f.coeffs().iter().map(|a| Complex64::new(a.w, a.imag().dot(u))).collect())
}

/// Inverse of `slice_coefficients`.
pub fn from_slice_coefficients(c: &[Complex64], unit: ImaginaryUnit, truncated: bool) -> RegularSeries {
    let u = unit.quat();
    let coeffs = c.iter().map(|z| Quaternion::real(z.re) + u.scale(z.im)).collect();
    RegularSeries::new(coeffs).with_truncated(truncated)
}

/// Pieces of the outer factor on a slice: `F = G P`, where `P` collects the
/// boundary zeros, and `E = u E_G P` with `E_G` the outer function of `G` and
/// `|u| = 1` chosen so that `E(0) > 0`.
struct OuterParts {
    g: Vec<Complex64>,
    e_g: Vec<Complex64>,
    e: Vec<Complex64>,
    unit: Complex64,
    truncated: bool,
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            c[i + j] += x * y;
        }
    }
    c
}

/// Complex points of `B_I` where `F_I` vanishes on the unit circle, with multiplicity.
fn boundary_roots(f: &RegularSeries, unit: ImaginaryUnit) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    let report = find_zeros_within(f, 1.0 + BOUNDARY_BAND)?;
    for rec in report.zeros.iter().filter(|r| on_boundary(r)) {
        match *rec {
            ZeroRecord::Spherical { x, y, multiplicity } => {
                for _ in 0..multiplicity / 2 {
                    out.push(Complex64::new(x, y));
                    out.push(Complex64::new(x, -y));
                }
            }
            ZeroRecord::Isolated { point, multiplicity } => {
                let z = Complex64::new(point.w, point.imag().dot(unit.quat()));
                out.extend(std::iter::repeat_n(z, multiplicity));
            }
        }
    }
    Ok(out)
}

fn outer_parts(f: &RegularSeries, unit: ImaginaryUnit, spec: &QuadratureSpec) -> Result<OuterParts> {
    let c = slice_coefficients(f, unit)?;
    if f.is_zero(0.0) {
        return Err(Error::IdenticallyZero);
    }
    let roots = boundary_roots(f, unit)?;
    let mut g = c;
    for z in &roots {
        // top-down division by (w - z), stable for |z| = 1
        let n = g.len() - 1;
        let mut q = vec![Complex64::new(0.0, 0.0); n.max(1)];
        let mut acc = Complex64::new(0.0, 0.0);
        for k in (1..=n).rev() {
            acc = g[k] + acc * z;
            q[k - 1] = acc;
        }
        g = q;
    }
    let e_g = herglotz_exp(&g, spec)?;
    let mut p = vec![Complex64::new(1.0, 0.0)];
    for z in &roots {
        p = poly_mul(&p, &[-z, Complex64::new(1.0, 0.0)]);
    }
    let raw = poly_mul(&e_g, &p);
    let unit_c = raw[0].conj() / raw[0].norm();
    let e = raw.iter().map(|z| z * unit_c).collect();
    let truncated = f.is_truncated() || e_g.len() > 1 && e_g.len() >= g.len().max(1) * 4;
    Ok(OuterParts { g, e_g, e, unit: unit_c, truncated })
}

/// `exp` of the Herglotz integral of `log |G|` on the unit circle, as Taylor coefficients.
///
/// `log |G|` is sampled by FFT at `M` roots of unity, with `M` doubled until its
/// Fourier coefficients above `M/4` are negligible. Its analytic completion
/// `H = u_0 + 2 sum u_k z^k` is exponentiated pointwise on the circle, and the
/// coefficients are read back by FFT.
fn herglotz_exp(g: &[Complex64], spec: &QuadratureSpec) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut m = spec.circle_nodes.max(4 * g.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    loop {
        let inv = planner.plan_fft_inverse(m);
        let fwd = planner.plan_fft_forward(m);
        let mut vals = vec![zero; m];
        for (k, c) in g.iter().enumerate() {
            vals[k % m] += c;
        }
        inv.process(&mut vals);
        let peak = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let floor = LOG_FLOOR * peak;
        let mut u: Vec<Complex64> = vals.iter().map(|v| Complex64::new(v.norm().max(floor).ln(), 0.0)).collect();
        if u.iter().any(|x| !x.re.is_finite()) {
            return Err(Error::Quadrature("log|F| is not finite on the circle".into()));
        }
        fwd.process(&mut u);
        let scale = 1.0 / m as f64;
        let tail = u[m / 4..=m / 2].iter().map(|x| x.norm() * scale).fold(0.0, f64::max);
        if tail > 1e-15 && m < MAX_OUTER_NODES {
            m *= 2;
            continue;
        }
        let mut h = vec![zero; m];
        h[0] = Complex64::new(u[0].re * scale, 0.0);
        for k in 1..m / 2 {
            h[k] = u[k] * (2.0 * scale);
        }
        inv.process(&mut h);
        let mut e: Vec<Complex64> = h.iter().map(|z| z.exp()).collect();
        fwd.process(&mut e);
        let mut coeffs: Vec<Complex64> = e[..m / 2].iter().map(|z| z * scale).collect();
        let big = coeffs.iter().map(|z| z.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs.last().is_some_and(|z| z.norm() <= 1e-15 * big) {
            coeffs.pop();
        }
        return Ok(coeffs);
    }
}

/// The outer factor `E` of a function preserving `L_I`, normalized by `E(0) > 0`.
///
/// Zeros on the unit circle of the slice are divided out first and multiplied
/// back afterwards (they are outer), so the quadrature only sees a smooth `log |G|`.
pub fn outer_factor_on_slice(f: &RegularSeries, unit: ImaginaryUnit, spec: &QuadratureSpec) -> Result<RegularSeries> {
    spec.validate()?;
    let parts = outer_parts(f, unit, spec)?;
    Ok(from_slice_coefficients(&parts.e, unit, parts.truncated))
}

/// One numerical check with its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Certificate {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Certificate { name: name.into(), value, tolerance, passed: value <= tolerance }
    }
}

/// `f = E * Inner`, `Inner = S * B`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterInnerSplit {
    pub outer: RegularSeries,
    pub inner: RegularSeries,
    pub singular: RegularSeries,
    pub blaschke: BlaschkeProduct,
    pub certificates: Vec<Certificate>,
}

impl OuterInnerSplit {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn certificate(&self, name: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|c| c.name == name)
    }
}

fn complex_divide(num: &[Complex64], den: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    let inv0 = Complex64::new(1.0, 0.0) / den[0];
    for k in 0..=n {
        let mut acc = num.get(k).copied().unwrap_or_default();
        for j in 1..=k.min(den.len() - 1) {
            acc -= den[j] * out[k - j];
        }
        out[k] = acc * inv0;
    }
    out
}

/// Points of the open ball, uniform in volume, from a fixed seed.
fn interior_samples(count: usize, seed: u64) -> Vec<Quaternion> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let p = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if p.norm() < 1.0 {
            out.push(p);
        }
    }
    out
}

/// Three slices: `I`, a unit orthogonal to it, and a diagonal one.
fn check_units(unit: ImaginaryUnit) -> [ImaginaryUnit; 3] {
    let o = unit.orthogonal();
    let d = ImaginaryUnit::from_direction(unit.quat() + o.quat()).unwrap_or(o);
    [unit, o, d]
}

pub const INNER_INTERIOR_TOL: f64 = 1e-6;
pub const INNER_BOUNDARY_TOL: f64 = 1e-5;
pub const OUTER_DOMINATION_TOL: f64 = 1e-8;
pub const BOUNDARY_MODULUS_TOL: f64 = 1e-5;
pub const NORM_TOL: f64 = 1e-5;
pub const RECONSTRUCTION_TOL: f64 = 1e-6;
const INTERIOR_SAMPLES: usize = 1000;
const BOUNDARY_NODES: usize = 512;

/// `f = E * S * B` for `f` preserving `L_I`, with certificates.
///
/// `Inner = E^{-*} * f` is formed on the slice as `G / (u E_G)`, which cancels
/// the boundary zeros exactly; `S` and `B` then come from `extract_zeros(Inner)`.
pub fn outer_inner_split(
    f: &RegularSeries,
    unit: ImaginaryUnit,
    truncation: Option<usize>,
    spec: &QuadratureSpec,
) -> Result<OuterInnerSplit> {
    spec.validate()?;
    let parts = outer_parts(f, unit, spec)?;
    let outer = from_slice_coefficients(&parts.e, unit, parts.truncated);
    let n = match truncation {
        Some(n) => n,
        None => {
            let interior: Vec<ZeroRecord> = find_zeros(f)?.zeros.into_iter().filter(|r| !on_boundary(r)).collect();
            default_truncation(ZeroSequence::from_records(&interior).points()).max(f.degree()).max(parts.e_g.len())
        }
    };
    let quotient = complex_divide(&parts.g, &parts.e_g, n);
    let inner_c: Vec<Complex64> = quotient.iter().map(|z| z * parts.unit.conj()).collect();
    let inner = from_slice_coefficients(&inner_c, unit, true);
    let ext = extract_zeros(&inner, Some(n))?;
    let singular = ext.h;
    let blaschke = ext.g;

    let scale = f.max_coeff();
    let mut certs = Vec::new();
    let rebuilt = outer.star_mul(&singular).star_mul(&blaschke.series);
    certs.push(Certificate::at_most("reconstruction", rebuilt.max_coeff_diff(f) / scale, RECONSTRUCTION_TOL));
    let inner_rebuilt = singular.star_mul(&blaschke.series);
    certs.push(Certificate::at_most("inner_reconstruction", inner_rebuilt.max_coeff_diff(&inner), RECONSTRUCTION_TOL));

    let samples = interior_samples(INTERIOR_SAMPLES, spec.seed);
    let inner_max = samples.iter().map(|p| inner.eval(*p).norm()).fold(0.0, f64::max);
    certs.push(Certificate::at_most("inner_interior_excess", (inner_max - 1.0).max(0.0), INNER_INTERIOR_TOL));
    let domination =
        samples.iter().map(|p| f.eval(*p).norm() - outer.eval(*p).norm()).fold(f64::NEG_INFINITY, f64::max);
    certs.push(Certificate::at_most("outer_domination_deficit", domination.max(0.0), OUTER_DOMINATION_TOL));

    let thetas = circle_angles(BOUNDARY_NODES);
    let f_peak =
        thetas.iter().flat_map(|t| check_units(unit).map(|u| f.eval(exp_on_slice(u, *t)).norm())).fold(1.0, f64::max);
    let mut modulus_gap: f64 = 0.0;
    let mut inner_gap: f64 = 0.0;
    for u in check_units(unit) {
        for t in &thetas {
            let q = exp_on_slice(u, *t);
            modulus_gap = modulus_gap.max((outer.eval(q).norm() - f.eval(q).norm()).abs() / f_peak);
            let m = inner.eval(q).norm();
            if f.eval(q).norm() > 1e-6 * f_peak {
                inner_gap = inner_gap.max((m - 1.0).abs());
            }
        }
    }
    certs.push(Certificate::at_most("boundary_modulus_gap", modulus_gap, BOUNDARY_MODULUS_TOL));
    certs.push(Certificate::at_most("inner_boundary_gap", inner_gap, INNER_BOUNDARY_TOL));

    let two = Exponent::Finite(2.0);
    let nf = hardy_norm(f, two, spec).value;
    let ne = hardy_norm(&outer, two, spec).value;
    certs.push(Certificate::at_most("norm_gap", (ne - nf).abs() / nf, NORM_TOL));
    let s_zeros = find_zeros_within(&singular, 1.0 - BOUNDARY_BAND)
        .map(|r| r.zeros.len() + r.unclassified.len())
        .unwrap_or(usize::MAX);
    certs.push(Certificate::at_most("singular_zeros", s_zeros as f64, 0.0));
    let e_zeros = find_zeros_within(&outer, 1.0 - BOUNDARY_BAND)
        .map(|r| r.zeros.len() + r.unclassified.len())
        .unwrap_or(usize::MAX);
    certs.push(Certificate::at_most("outer_zeros", e_zeros as f64, 0.0));

    Ok(OuterInnerSplit { outer, inner, singular, blaschke, certificates: certs })
}

/// Evidence for `f` being outer: no zeros in the ball and `f^{-*}` in `H^q`, `1/p + 1/q = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OuterCertificate {
    pub passed: bool,
    pub p: Exponent,
    pub q: Exponent,
    pub zeros_in_ball: usize,
    pub inverse_norm: Option<f64>,
    pub inverse_divergent: bool,
    pub inverse_degree: usize,
    pub detail: String,
}

/// Checks `f` against the sufficient condition for being outer.
pub fn outer_certificate(f: &RegularSeries, p: Exponent, spec: &QuadratureSpec) -> Result<OuterCertificate> {
    if p.value() < 1.0 {
        return Err(Error::InvalidInput(format!("exponent {p} is below 1")));
    }
    let q = p.conjugate()?;
    let degree = (8 * (f.degree() + 1)).max(256);
    let zeros = find_zeros_within(f, 1.0 - BOUNDARY_BAND)?;
    let zeros_in_ball = zeros.zeros.len() + zeros.unclassified.len();
    let mut cert = OuterCertificate {
        passed: false,
        p,
        q,
        zeros_in_ball,
        inverse_norm: None,
        inverse_divergent: false,
        inverse_degree: degree,
        detail: String::new(),
    };
    let inv = match f.star_inverse(degree) {
        Ok(inv) => inv,
        Err(e) => {
            cert.detail = format!("no regular reciprocal: {e}");
            return Ok(cert);
        }
    };
    let est = hardy_norm(&inv, q, spec);
    cert.inverse_divergent = est.divergent || !est.value.is_finite();
    cert.inverse_norm = Some(est.value);
    cert.passed = zeros_in_ball == 0 && !cert.inverse_divergent;
    cert.detail = match (zeros_in_ball, cert.inverse_divergent) {
        (0, false) => "nonvanishing with a reciprocal of finite norm".into(),
        (0, true) => "reciprocal norm diverges".into(),
        (k, _) => format!("{k} zero(s) inside the ball"),
    };
    Ok(cert)
}
