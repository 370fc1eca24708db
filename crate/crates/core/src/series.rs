//! Truncated series for distributions, in the variable `w = 1/z`.
//!
//! A law with moments `m_k` has Cauchy transform `G = w·M(w)` where
//! `M(w) = Σ m_k w^k`. Its K-transform `K = z − 1/G` is stored as
//! `K(w) = Σ c_k w^k`, so that `M = 1/(1 − w·K)`. A K-series of order `M`
//! (coefficients `c_0..c_M`) therefore pins down the moments through `M + 1`.
//!
//! The matricial continued fraction `K_{ij} = b_{ij}/(z − Σ_p K_{pi})` is
//! handled both as formal series ([`cf_matrix_kseries`]) and numerically at
//! complex points ([`cf_evaluate`]), which feeds Stieltjes inversion.

use num::complex::Complex64;

use crate::numeric::Scalar;
use crate::trace::SquareMatrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeriesError {
    #[error("moment series must start with m_0 = 1")]
    MomentZeroNotOne,
    #[error("series must have at least one coefficient")]
    Empty,
    #[error("requested order {requested} exceeds the exact range {available}")]
    OrderTooHigh { requested: usize, available: usize },
    #[error("continued fraction hit a pole at depth {depth}")]
    Pole { depth: usize },
    #[error("continued fraction coefficients must be nonnegative")]
    NegativeEntry,
    #[error("target ({0}, {1}) is out of range")]
    BadTarget(usize, usize),
    #[error("eps must be positive")]
    NonPositiveEps,
}

/// Moments `m_0..m_M` with `m_0 = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> MomentSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self, SeriesError> {
        match coeffs.first() {
            None => Err(SeriesError::Empty),
            Some(m0) if !m0.approx_eq(&T::one()) => Err(SeriesError::MomentZeroNotOne),
            Some(_) => Ok(Self { coeffs }),
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn moment(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> MomentSeries<U> {
        MomentSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }
}

/// `K(z) = c_0 + c_1/z + … + c_M/z^M`.
///
/// `c_0` is the mean. It vanishes for every centred law but is kept so that
/// moment sequences with odd terms survive a round trip.
#[derive(Clone, Debug, PartialEq)]
pub struct KSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Scalar> KSeries<T> {
    /// Coefficients indexed by the power of `1/z`, starting at `c_0`.
    pub fn new(coeffs: Vec<T>) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        Ok(Self { coeffs })
    }

    /// Centred series from `c_1..c_M`.
    pub fn from_tail(tail: Vec<T>) -> Self {
        let mut coeffs = vec![T::zero()];
        coeffs.extend(tail);
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self {
            coeffs: vec![T::zero(); order + 1],
        }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of `z^{-k}`.
    pub fn coeff(&self, k: usize) -> &T {
        &self.coeffs[k]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self {
            coeffs: self.coeffs[..=order.min(self.order())].to_vec(),
        }
    }

    pub fn scale(&self, t: &T) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.clone() * t.clone()).collect(),
        }
    }

    /// Sum truncated to the common order.
    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        Self {
            coeffs: (0..n)
                .map(|k| self.coeffs[k].clone() + other.coeffs[k].clone())
                .collect(),
        }
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.coeffs.len() == other.coeffs.len() && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.approx_eq(b))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> KSeries<U> {
        KSeries {
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Evaluates the truncated Laurent polynomial at `z`.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let w = z.inv();
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c.to_f64())
    }
}

/// Truncated power series helpers over coefficient vectors.
pub(crate) mod poly {
    use crate::numeric::Scalar;

    pub fn coeff<T: Scalar>(a: &[T], k: usize) -> T {
        a.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn mul<T: Scalar>(a: &[T], b: &[T], len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); len];
        for (i, x) in a.iter().enumerate().take(len) {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.iter().enumerate().take(len - i) {
                out[i + j] = out[i + j].clone() + x.clone() * y.clone();
            }
        }
        out
    }

    /// `1/a`; requires a nonzero constant term.
    pub fn inv<T: Scalar>(a: &[T], len: usize) -> Vec<T> {
        let a0 = a[0].clone();
        let mut out: Vec<T> = Vec::with_capacity(len);
        for k in 0..len {
            let mut acc = if k == 0 { T::one() } else { T::zero() };
            for j in 1..=k {
                acc = acc - coeff(a, j) * out[k - j].clone();
            }
            out.push(acc / a0.clone());
        }
        out
    }

    /// `Σ a_k u^k` by Horner's rule; `u` must have zero constant term.
    pub fn compose<T: Scalar>(a: &[T], u: &[T], len: usize) -> Vec<T> {
        let mut out = vec![T::zero(); len];
        for c in a.iter().rev() {
            out = mul(&out, u, len);
            if len > 0 {
                out[0] = out[0].clone() + c.clone();
            }
        }
        out
    }

    /// Multiplies by `w`, keeping `len` coefficients.
    pub fn shift<T: Scalar>(a: &[T], len: usize) -> Vec<T> {
        (0..len)
            .map(|k| if k == 0 { T::zero() } else { coeff(a, k - 1) })
            .collect()
    }
}

/// `M(w) = 1/(1 − w·K(w))` through `order`, which may not exceed `K.order() + 1`.
pub fn k_to_moments<T: Scalar>(k: &KSeries<T>, order: usize) -> Result<MomentSeries<T>, SeriesError> {
    if order > k.order() + 1 {
        return Err(SeriesError::OrderTooHigh {
            requested: order,
            available: k.order() + 1,
        });
    }
    let len = order + 1;
    let wk = poly::shift(k.coeffs(), len);
    let denom: Vec<T> = (0..len)
        .map(|i| if i == 0 { T::one() } else { -wk[i].clone() })
        .collect();
    Ok(MomentSeries {
        coeffs: poly::inv(&denom, len),
    })
}

/// `K(w) = (1 − 1/M(w))/w`, of order `M − 1` (at least 0).
pub fn moments_to_k<T: Scalar>(m: &MomentSeries<T>) -> KSeries<T> {
    let len = m.coeffs.len() + 1;
    let recip = poly::inv(m.coeffs(), len);
    let order = m.order().max(1) - 1;
    KSeries {
        coeffs: (0..=order).map(|k| -poly::coeff(&recip, k + 1)).collect(),
    }
}

/// Cauchy transform coefficients: `G = Σ_k m_k z^{-k-1}`.
pub fn g_coeffs<T: Scalar>(m: &MomentSeries<T>) -> Vec<T> {
    poly::shift(m.coeffs(), m.coeffs.len() + 1)
}

/// Target entry `K_{ij}` of the matricial continued fraction built on `b`.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFractionSpec<T> {
    pub b: SquareMatrix<T>,
    pub depth: usize,
    pub target: (usize, usize),
}

impl<T: Scalar> ContinuedFractionSpec<T> {
    pub fn new(b: SquareMatrix<T>, depth: usize, target: (usize, usize)) -> Result<Self, SeriesError> {
        let n = b.dim();
        if target.0 >= n || target.1 >= n {
            return Err(SeriesError::BadTarget(target.0, target.1));
        }
        if b.rows().iter().flatten().any(|x| *x < T::zero()) {
            return Err(SeriesError::NegativeEntry);
        }
        Ok(Self { b, depth, target })
    }
}

/// Depth at which the coefficients through `order` are stable.
pub fn stable_depth(order: usize) -> usize {
    order.div_ceil(2)
}

/// All `K_{ij}` at a fixed depth, as series of order `order`.
///
/// Writes `K_{ij} = b_{ij}·H_i` with `H_i = w/(1 − w Σ_p b_{pi} H_p)` and `H = w`
/// at depth 0.
pub fn cf_matrix_kseries_at_depth<T: Scalar>(b: &SquareMatrix<T>, depth: usize, order: usize) -> Vec<Vec<KSeries<T>>> {
    let r = b.dim();
    let len = order + 1;
    let w: Vec<T> = (0..len).map(|k| if k == 1 { T::one() } else { T::zero() }).collect();
    let mut h = vec![w.clone(); r];
    for _ in 0..depth {
        h = (0..r)
            .map(|i| {
                let mut s = vec![T::zero(); len];
                for (p, hp) in h.iter().enumerate() {
                    let bpi = b.get(p, i);
                    if bpi.is_zero() {
                        continue;
                    }
                    for k in 0..len {
                        s[k] = s[k].clone() + bpi.clone() * hp[k].clone();
                    }
                }
                let ws = poly::shift(&s, len);
                let denom: Vec<T> = (0..len)
                    .map(|k| if k == 0 { T::one() } else { -ws[k].clone() })
                    .collect();
                poly::mul(&w, &poly::inv(&denom, len), len)
            })
            .collect();
    }
    (0..r)
        .map(|i| {
            (0..r)
                .map(|j| KSeries {
                    coeffs: h[i].iter().map(|x| b.get(i, j).clone() * x.clone()).collect(),
                })
                .collect()
        })
        .collect()
}

/// All `K_{ij}` exactly through `order`.
pub fn cf_matrix_kseries<T: Scalar>(b: &SquareMatrix<T>, order: usize) -> Vec<Vec<KSeries<T>>> {
    cf_matrix_kseries_at_depth(b, stable_depth(order) + 1, order)
}

/// The limit series `K_{ij}` through `order`; the requested depth is raised to the stable depth if needed.
pub fn cf_to_kseries<T: Scalar>(spec: &ContinuedFractionSpec<T>, order: usize) -> KSeries<T> {
    let depth = spec.depth.max(stable_depth(order) + 1);
    let (i, j) = spec.target;
    cf_matrix_kseries_at_depth(&spec.b, depth, order)[i][j].clone()
}

/// One step `H_i ← 1/(z − Σ_p b_{pi} H_p)` applied `depth` times from `H = 1/z`.
fn cf_h_values(b: &[Vec<f64>], z: Complex64, depth: usize) -> Result<Vec<Complex64>, SeriesError> {
    let r = b.len();
    let mut h = vec![z.inv(); r];
    for d in 1..=depth {
        h = cf_step(b, z, &h, d)?;
    }
    Ok(h)
}

fn cf_step(b: &[Vec<f64>], z: Complex64, h: &[Complex64], depth: usize) -> Result<Vec<Complex64>, SeriesError> {
    let r = b.len();
    (0..r)
        .map(|i| {
            let s: Complex64 = (0..r).map(|p| h[p] * b[p][i]).sum();
            let denom = z - s;
            if denom.norm() == 0.0 {
                Err(SeriesError::Pole { depth })
            } else {
                Ok(denom.inv())
            }
        })
        .collect()
}

/// Numeric `K^{(depth)}_{ij}(z)`.
pub fn cf_evaluate<T: Scalar>(spec: &ContinuedFractionSpec<T>, z: Complex64) -> Result<Complex64, SeriesError> {
    if z.norm() == 0.0 {
        return Err(SeriesError::Pole { depth: 0 });
    }
    let b = to_f64_rows(&spec.b);
    let h = cf_h_values(&b, z, spec.depth)?;
    let (i, j) = spec.target;
    Ok(h[i] * b[i][j])
}

/// Depth control for numeric evaluation: a fixed depth, or iteration until
/// successive values agree to `tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Depth {
    Fixed(usize),
    Adaptive { min: usize, max: usize, tol: f64 },
}

impl Depth {
    /// Default for density plots at truncation `order`.
    pub fn adaptive_for(order: usize) -> Self {
        Depth::Adaptive {
            min: 40.max(stable_depth(order)),
            max: 2_000_000,
            tol: 1e-13,
        }
    }
}

/// All `K_{ij}(z)` at a numeric point, plus the depth actually used.
pub fn cf_evaluate_matrix(
    b: &[Vec<f64>],
    z: Complex64,
    depth: Depth,
) -> Result<(Vec<Vec<Complex64>>, usize), SeriesError> {
    if z.norm() == 0.0 {
        return Err(SeriesError::Pole { depth: 0 });
    }
    let (h, used) = match depth {
        Depth::Fixed(d) => (cf_h_values(b, z, d)?, d),
        Depth::Adaptive { min, max, tol } => {
            let mut h = cf_h_values(b, z, min)?;
            let mut used = min;
            while used < max {
                let next = cf_step(b, z, &h, used + 1)?;
                used += 1;
                let diff = next.iter().zip(&h).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max);
                let scale = next.iter().map(|a| a.norm()).fold(1.0, f64::max);
                h = next;
                if diff <= tol * scale {
                    break;
                }
            }
            (h, used)
        }
    };
    let r = b.len();
    Ok(((0..r).map(|i| (0..r).map(|j| h[i] * b[i][j]).collect()).collect(), used))
}

pub(crate) fn to_f64_rows<T: Scalar>(m: &SquareMatrix<T>) -> Vec<Vec<f64>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(|x| x.to_f64()).collect())
        .collect()
}

/// Source of a Cauchy transform for [`density_grid`].
#[derive(Clone, Debug)]
pub enum DensitySource<'a, T> {
    /// `G = 1/(z − K(z))` with the truncated Laurent polynomial.
    Series(&'a KSeries<T>),
    /// `G = 1/(z − K_{ij}(z))` from the continued fraction.
    ContinuedFraction(&'a ContinuedFractionSpec<T>),
}

/// One density evaluation per grid point, together with the deepest depth used.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityGrid {
    pub points: Vec<(f64, f64)>,
    pub depth_used: usize,
}

/// `−Im G(x + iε)/π` over `xs`. A continued fraction is evaluated at its own fixed depth.
pub fn density_grid<T: Scalar>(
    source: &DensitySource<'_, T>,
    xs: &[f64],
    eps: f64,
) -> Result<DensityGrid, SeriesError> {
    match source {
        DensitySource::Series(k) => density_from_cauchy(xs, eps, |z| Ok(((z - k.eval(z)).inv(), 0))),
        DensitySource::ContinuedFraction(spec) => {
            let b = to_f64_rows(&spec.b);
            let (i, j) = spec.target;
            density_from_cauchy(xs, eps, |z| {
                let (k, used) = cf_evaluate_matrix(&b, z, Depth::Fixed(spec.depth))?;
                Ok(((z - k[i][j]).inv(), used))
            })
        }
    }
}

/// Stieltjes inversion of an arbitrary Cauchy transform returning `(G(z), depth)`.
pub fn density_from_cauchy(
    xs: &[f64],
    eps: f64,
    g: impl Fn(Complex64) -> Result<(Complex64, usize), SeriesError>,
) -> Result<DensityGrid, SeriesError> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(SeriesError::NonPositiveEps);
    }
    let mut points = Vec::with_capacity(xs.len());
    let mut depth_used = 0;
    for &x in xs {
        let (gz, used) = g(Complex64::new(x, eps))?;
        depth_used = depth_used.max(used);
        points.push((x, -gz.im / std::f64::consts::PI));
    }
    Ok(DensityGrid { points, depth_used })
}

/// Evenly spaced grid with `steps` points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps)
            .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
            .collect(),
    }
}

/// Trapezoid rule over a grid.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum()
}
