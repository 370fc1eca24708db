//! Block models and their limit laws.
//!
//! A [`BlockModel`] is a variance matrix `U` together with block proportions
//! `D`. Its moments are reachable by several independent routes:
//!
//! * partition sums of `b(π)` and `b₀(π)` for `B = DU`,
//! * the matricial continued fraction on `B`,
//! * walks on the weighted tree (2×2 only),
//! * closed forms built from named laws and convolutions (2×2 only).
//!
//! [`cross_check`] runs all applicable routes and tabulates how far apart they are.

use std::fmt;

use num::complex::Complex64;

use crate::convolve::{as_kseries, orthogonal_conv, sfree_conv, t_transform, ConvolveError, NamedLaw};
use crate::ncpart::enumerate_nc2;
use crate::numeric::Scalar;
use crate::series::{
    cf_evaluate_matrix, cf_matrix_kseries, density_from_cauchy, k_to_moments, poly, to_f64_rows, DensityGrid, Depth,
    KSeries, MomentSeries, SeriesError,
};
use crate::trace::{b0_of, b_of, DiagonalMatrix, SquareMatrix, TraceError};
use crate::tree::{walk_moments, MatricialWeighting};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LimitError {
    #[error("U is {u}x{u} but D has {d} entries")]
    Dimension { u: usize, d: usize },
    #[error("diagonal variance u[{0}][{0}] must be positive (use a relaxed model to allow zero)")]
    DiagonalNotPositive(usize),
    #[error("variance u[{0}][{1}] must be nonnegative")]
    NegativeVariance(usize, usize),
    #[error("dimension d[{0}] must be positive")]
    NonPositiveDimension(usize),
    #[error("dimension matrix must satisfy Tr(D) = 1, but the entries sum to {0}")]
    TraceNotOne(String),
    #[error("size {n} leaves block {block} empty")]
    EmptyBlock { n: usize, block: usize },
    #[error("combinatorial routes need u[j][j] > 0; this model is relaxed")]
    RelaxedModel,
    #[error("zero pattern {0} is not covered by the table or its 1<->2 relabelling")]
    UnsupportedPattern(String),
    #[error("parameters must be nonnegative")]
    NegativeParameter,
    #[error("order must be at least {0}")]
    OrderTooSmall(usize),
    #[error("fixed-point equation fails at coefficient {0}")]
    FixedPoint(usize),
    #[error("block index {0} out of range")]
    BadIndex(usize),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Convolve(#[from] ConvolveError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}

/// Variance matrix `U` with block proportions `d_1..d_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockModel<T> {
    u: SquareMatrix<T>,
    d: Vec<T>,
    relaxed: bool,
}

impl<T: Scalar> BlockModel<T> {
    pub fn new(u: SquareMatrix<T>, d: Vec<T>) -> Result<Self, LimitError> {
        Self::build(u, d, false)
    }

    /// Allows zero diagonal variances.
    pub fn relaxed(u: SquareMatrix<T>, d: Vec<T>) -> Result<Self, LimitError> {
        Self::build(u, d, true)
    }

    fn build(u: SquareMatrix<T>, d: Vec<T>, relaxed: bool) -> Result<Self, LimitError> {
        let r = u.dim();
        if d.len() != r {
            return Err(LimitError::Dimension { u: r, d: d.len() });
        }
        for i in 0..r {
            for j in 0..r {
                let x = u.get(i, j);
                if *x < T::zero() {
                    return Err(LimitError::NegativeVariance(i, j));
                }
                if i == j && !relaxed && x.is_zero() {
                    return Err(LimitError::DiagonalNotPositive(i));
                }
            }
        }
        if let Some(j) = d.iter().position(|x| *x <= T::zero()) {
            return Err(LimitError::NonPositiveDimension(j));
        }
        let sum = d.iter().fold(T::zero(), |acc, x| acc + x.clone());
        if !sum.approx_eq(&T::one()) {
            return Err(LimitError::TraceNotOne(sum.to_string()));
        }
        Ok(Self { u, d, relaxed })
    }

    /// One block with variance `u`.
    pub fn scalar(u: T) -> Self {
        Self::new(SquareMatrix::from_rows(vec![vec![u]]).expect("1x1"), vec![T::one()]).expect("valid")
    }

    pub fn r(&self) -> usize {
        self.u.dim()
    }

    pub fn u(&self) -> &SquareMatrix<T> {
        &self.u
    }

    pub fn d(&self) -> &[T] {
        &self.d
    }

    pub fn d_matrix(&self) -> DiagonalMatrix<T> {
        DiagonalMatrix::new(self.d.clone())
    }

    pub fn is_relaxed(&self) -> bool {
        self.relaxed
    }

    /// `B = DU`.
    pub fn b(&self) -> SquareMatrix<T> {
        self.u.left_diag_mul(&self.d_matrix())
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> BlockModel<U> {
        BlockModel {
            u: self.u.map(&f),
            d: self.d.iter().map(&f).collect(),
            relaxed: self.relaxed,
        }
    }

    fn require_strict(&self) -> Result<(), LimitError> {
        if self.relaxed {
            Err(LimitError::RelaxedModel)
        } else {
            Ok(())
        }
    }
}

/// `n_k = ⌊(d_1+…+d_k) n⌋ − ⌊(d_1+…+d_{k−1}) n⌋`.
pub fn interval_sizes<T: Scalar>(model: &BlockModel<T>, n: usize) -> Result<Vec<usize>, LimitError> {
    let r = model.r();
    let mut bounds = vec![0i64];
    let mut partial = T::zero();
    for k in 0..r {
        partial = partial + model.d[k].clone();
        let bound = if k + 1 == r {
            n as i64
        } else {
            (partial.clone() * T::from_i64(n as i64)).floor_i64()
        };
        bounds.push(bound);
    }
    let sizes: Vec<usize> = bounds.windows(2).map(|w| (w[1] - w[0]).max(0) as usize).collect();
    if let Some(block) = sizes.iter().position(|&s| s == 0) {
        return Err(LimitError::EmptyBlock { n, block });
    }
    Ok(sizes)
}

/// Block index of each of the `n` coordinates.
pub fn block_labels<T: Scalar>(model: &BlockModel<T>, n: usize) -> Result<Vec<usize>, LimitError> {
    let sizes = interval_sizes(model, n)?;
    Ok(sizes
        .iter()
        .enumerate()
        .flat_map(|(k, &s)| std::iter::repeat_n(k, s))
        .collect())
}

/// `V(n)`: entry `(p, q)` is `u_{κ(p),κ(q)}/n`.
pub fn blockify<T: Scalar>(model: &BlockModel<T>, n: usize) -> Result<SquareMatrix<T>, LimitError> {
    let labels = block_labels(model, n)?;
    let nn = T::from_i64(n as i64);
    Ok(SquareMatrix::from_fn(n, |p, q| {
        model.u.get(labels[p], labels[q]).clone() / nn.clone()
    }))
}

/// `Σ_{π ∈ NC²_m} Tr(B(π) D)` for `m = 0..=order`.
pub fn tracial_moments_from_b<T: Scalar>(
    b: &SquareMatrix<T>,
    d: &DiagonalMatrix<T>,
    order: usize,
) -> Result<MomentSeries<T>, LimitError> {
    let mut out = Vec::with_capacity(order + 1);
    for m in 0..=order {
        let mut acc = T::zero();
        if m % 2 == 0 {
            for p in enumerate_nc2(m / 2) {
                acc = acc + b_of(&p, b, d)?;
            }
        }
        out.push(acc);
    }
    Ok(MomentSeries::new(out)?)
}

/// `Σ_{π ∈ NC²_m} b₀(π)` for `m = 0..=order`.
pub fn standard_moments_from_b<T: Scalar>(b: &SquareMatrix<T>, order: usize) -> MomentSeries<T> {
    let coeffs = (0..=order)
        .map(|m| {
            if m % 2 == 1 {
                return T::zero();
            }
            enumerate_nc2(m / 2).iter().fold(T::zero(), |acc, p| acc + b0_of(p, b))
        })
        .collect();
    MomentSeries::new(coeffs).expect("m_0 = 1")
}

pub fn tracial_moments_combinatorial<T: Scalar>(
    model: &BlockModel<T>,
    order: usize,
) -> Result<MomentSeries<T>, LimitError> {
    model.require_strict()?;
    tracial_moments_from_b(&model.b(), &model.d_matrix(), order)
}

pub fn standard_moments_combinatorial<T: Scalar>(
    model: &BlockModel<T>,
    order: usize,
) -> Result<MomentSeries<T>, LimitError> {
    model.require_strict()?;
    Ok(standard_moments_from_b(&model.b(), order))
}

/// The laws `μ_{ij}`, `μ_j`, `μ`, `μ₀` of a model.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitFamily<T> {
    pub kij: Vec<Vec<KSeries<T>>>,
    pub muj: Vec<KSeries<T>>,
    pub mu: MomentSeries<T>,
    pub mu0: MomentSeries<T>,
    pub mu0_k: KSeries<T>,
}

impl<T: Scalar> LimitFamily<T> {
    pub fn order(&self) -> usize {
        self.mu.order()
    }

    pub fn muj_moments(&self, j: usize) -> MomentSeries<T> {
        k_to_moments(&self.muj[j], self.order()).expect("order within range")
    }
}

pub fn limit_family<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<LimitFamily<T>, LimitError> {
    limit_family_from_b(&model.b(), model.d(), order)
}

/// Laws from `B` and proportions `d`; all K-series have order `order`.
pub fn limit_family_from_b<T: Scalar>(
    b: &SquareMatrix<T>,
    d: &[T],
    order: usize,
) -> Result<LimitFamily<T>, LimitError> {
    if order == 0 {
        return Err(LimitError::OrderTooSmall(1));
    }
    let r = b.dim();
    if d.len() != r {
        return Err(LimitError::Dimension { u: r, d: d.len() });
    }
    let kij = cf_matrix_kseries(b, order);
    let muj: Vec<KSeries<T>> = (0..r)
        .map(|j| (1..r).fold(kij[0][j].clone(), |acc, i| acc.add(&kij[i][j])))
        .collect();
    check_fixed_point(b, &muj)?;
    let mut mu = vec![T::zero(); order + 1];
    for (j, k) in muj.iter().enumerate() {
        let m = k_to_moments(k, order)?;
        for (acc, x) in mu.iter_mut().zip(m.coeffs()) {
            *acc = acc.clone() + d[j].clone() * x.clone();
        }
    }
    let mu0_k = (1..r).fold(kij[0][0].clone(), |acc, j| acc.add(&kij[j][j]));
    let mu0 = k_to_moments(&mu0_k, order)?;
    Ok(LimitFamily {
        kij,
        muj,
        mu: MomentSeries::new(mu)?,
        mu0,
        mu0_k,
    })
}

/// `K_j = Σ_i b_{ij} G_{μ_i}` for every `j`, the diagonal form of `K = τ((z − K)^{-1} B)`.
fn check_fixed_point<T: Scalar>(b: &SquareMatrix<T>, muj: &[KSeries<T>]) -> Result<(), LimitError> {
    let rhs = fixed_point_rhs(b, muj)?;
    for (k, r) in muj.iter().zip(&rhs) {
        if let Some(c) = (0..=k.order()).find(|&c| !k.coeff(c).approx_eq(r.coeff(c))) {
            return Err(LimitError::FixedPoint(c));
        }
    }
    Ok(())
}

/// Right-hand side `τ((z − K)^{-1} B)` as K-series, given the diagonal `K_1..K_r`.
pub fn fixed_point_rhs<T: Scalar>(b: &SquareMatrix<T>, diag_k: &[KSeries<T>]) -> Result<Vec<KSeries<T>>, LimitError> {
    let r = b.dim();
    let order = diag_k.iter().map(|k| k.order()).min().unwrap_or(0);
    let len = order + 1;
    let g: Vec<Vec<T>> = diag_k
        .iter()
        .map(|k| Ok(poly::shift(k_to_moments(k, order)?.coeffs(), len)))
        .collect::<Result<_, LimitError>>()?;
    Ok((0..r)
        .map(|j| {
            let coeffs = (0..len)
                .map(|c| (0..r).fold(T::zero(), |acc, i| acc + b.get(i, j).clone() * g[i][c].clone()))
                .collect();
            KSeries::new(coeffs).expect("nonempty")
        })
        .collect())
}

/// Which formula produced a 2×2 closed form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim2Case {
    /// All four entries positive.
    AllPositive,
    /// One of the eight zero patterns, possibly after swapping the labels 1 and 2.
    Row { row: u8, swapped: bool },
}

impl fmt::Display for Dim2Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dim2Case::AllPositive => write!(f, "all-positive"),
            Dim2Case::Row { row, swapped: false } => write!(f, "row {row}"),
            Dim2Case::Row { row, swapped: true } => write!(f, "row {row} (relabelled)"),
        }
    }
}

/// Closed-form `μ_{ij}` for a 2×2 matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Dim2Laws<T> {
    pub case: Dim2Case,
    pub kij: [[KSeries<T>; 2]; 2],
}

const ROW_PATTERNS: [[bool; 4]; 8] = [
    [true, true, true, false],
    [false, true, true, false],
    [true, false, true, true],
    [false, true, false, true],
    [false, false, true, true],
    [true, false, false, true],
    [true, false, false, false],
    [false, true, false, false],
];

/// `μ_{ij}` from the squared entries `b11 = α²`, `b12 = β²`, `b21 = γ²`, `b22 = δ²`.
pub fn dim2_closed_forms<T: Scalar>(
    b11: &T,
    b12: &T,
    b21: &T,
    b22: &T,
    order: usize,
) -> Result<Dim2Laws<T>, LimitError> {
    let params = [b11, b12, b21, b22];
    if params.iter().any(|p| **p < T::zero()) {
        return Err(LimitError::NegativeParameter);
    }
    if order == 0 {
        return Err(LimitError::OrderTooSmall(1));
    }
    let pattern = params.map(|p| !p.is_zero());
    if pattern.iter().all(|&x| x) {
        return Ok(Dim2Laws {
            case: Dim2Case::AllPositive,
            kij: all_positive(b11, b12, b21, b22, order)?,
        });
    }
    if let Some(row) = ROW_PATTERNS.iter().position(|p| *p == pattern) {
        let kij = table_row(row + 1, b11, b12, b21, b22, order)?;
        return Ok(Dim2Laws {
            case: Dim2Case::Row {
                row: row as u8 + 1,
                swapped: false,
            },
            kij,
        });
    }
    let swapped = [pattern[3], pattern[2], pattern[1], pattern[0]];
    if let Some(row) = ROW_PATTERNS.iter().position(|p| *p == swapped) {
        let [[a, b], [c, d]] = table_row(row + 1, b22, b21, b12, b11, order)?;
        return Ok(Dim2Laws {
            case: Dim2Case::Row {
                row: row as u8 + 1,
                swapped: true,
            },
            kij: [[d, c], [b, a]],
        });
    }
    let show = |x: bool| if x { "+" } else { "0" };
    Err(LimitError::UnsupportedPattern(format!(
        "({},{},{},{})",
        show(pattern[0]),
        show(pattern[1]),
        show(pattern[2]),
        show(pattern[3])
    )))
}

struct Laws<'a, T> {
    order: usize,
    b11: &'a T,
    b12: &'a T,
    b21: &'a T,
    b22: &'a T,
}

impl<T: Scalar> Laws<'_, T> {
    fn law(&self, law: NamedLaw<T>) -> Result<KSeries<T>, LimitError> {
        Ok(as_kseries(&law, self.order)?)
    }
    fn dirac(&self) -> KSeries<T> {
        KSeries::zero(self.order)
    }
    fn sigma_alpha(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::Semicircle {
            alpha_sq: self.b11.clone(),
        })
    }
    fn sigma_delta(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::Semicircle {
            alpha_sq: self.b22.clone(),
        })
    }
    fn sigma_alpha_beta(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::CompressedSemicircle {
            alpha_sq: self.b11.clone(),
            beta_sq: self.b12.clone(),
        })
    }
    fn sigma_delta_gamma(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::CompressedSemicircle {
            alpha_sq: self.b22.clone(),
            beta_sq: self.b21.clone(),
        })
    }
    fn kappa_beta(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::Bernoulli {
            gamma_sq: self.b12.clone(),
        })
    }
    fn kappa_gamma(&self) -> Result<KSeries<T>, LimitError> {
        self.law(NamedLaw::Bernoulli {
            gamma_sq: self.b21.clone(),
        })
    }
    fn sfree(&self, a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
        sfree_conv(a, b, self.order)
    }
    fn compress(&self, a: &KSeries<T>, t: T) -> Result<KSeries<T>, LimitError> {
        Ok(t_transform(a, &t)?)
    }
}

fn all_positive<T: Scalar>(
    b11: &T,
    b12: &T,
    b21: &T,
    b22: &T,
    order: usize,
) -> Result<[[KSeries<T>; 2]; 2], LimitError> {
    let l = Laws {
        order,
        b11,
        b12,
        b21,
        b22,
    };
    let t = b12.clone() / b11.clone();
    let s = b21.clone() / b22.clone();
    let (ab, dg) = (l.sigma_alpha_beta()?, l.sigma_delta_gamma()?);
    let m11 = l.compress(&l.sfree(&ab, &dg), T::one() / t.clone())?;
    let m22 = l.compress(&l.sfree(&dg, &ab), T::one() / s.clone())?;
    let m12 = l.compress(&m11, t)?;
    let m21 = l.compress(&m22, s)?;
    Ok([[m11, m12], [m21, m22]])
}

fn table_row<T: Scalar>(
    row: usize,
    b11: &T,
    b12: &T,
    b21: &T,
    b22: &T,
    order: usize,
) -> Result<[[KSeries<T>; 2]; 2], LimitError> {
    let l = Laws {
        order,
        b11,
        b12,
        b21,
        b22,
    };
    let z = l.dirac();
    Ok(match row {
        1 => {
            let (ab, kg) = (l.sigma_alpha_beta()?, l.kappa_gamma()?);
            let m12 = l.sfree(&ab, &kg);
            let m11 = l.compress(&m12, b11.clone() / b12.clone())?;
            [[m11, m12], [l.sfree(&kg, &ab), z]]
        }
        2 => {
            let (kb, kg) = (l.kappa_beta()?, l.kappa_gamma()?);
            [[z.clone(), l.sfree(&kb, &kg)], [l.sfree(&kg, &kb), z]]
        }
        3 => {
            let dg = l.sigma_delta_gamma()?;
            [[orthogonal_conv(&l.sigma_alpha()?, &dg), z], [dg, l.sigma_delta()?]]
        }
        4 => [
            [z.clone(), l.kappa_beta()?],
            [z, orthogonal_conv(&l.sigma_delta()?, &l.kappa_beta()?)],
        ],
        5 => [[z.clone(), z], [l.sigma_delta_gamma()?, l.sigma_delta()?]],
        6 => [[l.sigma_alpha()?, z.clone()], [z, l.sigma_delta()?]],
        7 => [[l.sigma_alpha()?, z.clone()], [z.clone(), z]],
        8 => [[z.clone(), l.kappa_beta()?], [z.clone(), z]],
        _ => unreachable!("eight rows"),
    })
}

/// A route to the moments of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Combinatorial,
    ContinuedFraction,
    Fock,
    Walks,
    ClosedForm,
}

impl Route {
    pub const ALL: [Route; 5] = [
        Route::Combinatorial,
        Route::ContinuedFraction,
        Route::Fock,
        Route::Walks,
        Route::ClosedForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Route::Combinatorial => "combinatorial",
            Route::ContinuedFraction => "continued_fraction",
            Route::Fock => "fock",
            Route::Walks => "walks",
            Route::ClosedForm => "closed_form",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Moments of `μ`, `μ₀` and (when available) every `μ_j` from one route.
#[derive(Clone, Debug, PartialEq)]
pub struct RouteMoments<T> {
    pub route: Route,
    pub mu: MomentSeries<T>,
    pub mu0: MomentSeries<T>,
    pub muj: Option<Vec<MomentSeries<T>>>,
}

/// Largest coefficient gap between two routes for one law.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrepancy<T> {
    pub a: Route,
    pub b: Route,
    pub law: String,
    pub max_abs: T,
    pub max_rel: f64,
}

impl<T: Scalar> Discrepancy<T> {
    /// Exact agreement in the rational profile; `tol` relative otherwise.
    pub fn within(&self, tol: f64) -> bool {
        if T::is_exact() {
            self.max_abs.is_zero()
        } else {
            self.max_rel <= tol
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheckReport<T> {
    pub order: usize,
    pub routes: Vec<RouteMoments<T>>,
    pub skipped: Vec<(Route, String)>,
    pub discrepancies: Vec<Discrepancy<T>>,
}

impl<T: Scalar> CrossCheckReport<T> {
    pub fn all_within(&self, tol: f64) -> bool {
        self.discrepancies.iter().all(|d| d.within(tol))
    }

    pub fn route(&self, route: Route) -> Option<&RouteMoments<T>> {
        self.routes.iter().find(|r| r.route == route)
    }
}

pub fn discrepancy<T: Scalar>(a: &MomentSeries<T>, b: &MomentSeries<T>) -> (T, f64) {
    let mut max_abs = T::zero();
    let mut max_rel = 0.0f64;
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        let diff = (x.clone() - y.clone()).abs_val();
        let scale = x.to_f64().abs().max(y.to_f64().abs()).max(1.0);
        max_rel = max_rel.max(diff.to_f64() / scale);
        if diff > max_abs {
            max_abs = diff;
        }
    }
    if a.order() != b.order() {
        max_rel = f64::INFINITY;
    }
    (max_abs, max_rel)
}

fn mix<T: Scalar>(d: &[T], muj: &[MomentSeries<T>]) -> MomentSeries<T> {
    let order = muj[0].order();
    let coeffs = (0..=order)
        .map(|k| {
            d.iter()
                .zip(muj)
                .fold(T::zero(), |acc, (dj, m)| acc + dj.clone() * m.moment(k).clone())
        })
        .collect();
    MomentSeries::new(coeffs).expect("m_0 = 1")
}

/// Moments by the tree-walk route (any `r`; root edges per law as in [`MatricialWeighting`]).
pub fn walk_route<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<RouteMoments<T>, LimitError> {
    let b = model.b();
    let to_series = |w: MatricialWeighting<T>| MomentSeries::new(walk_moments(&w, order)).expect("m_0 = 1");
    let mu0 = to_series(MatricialWeighting::diagonal(b.clone()).map_err(|_| LimitError::NegativeParameter)?);
    let muj: Vec<MomentSeries<T>> = (0..model.r())
        .map(|j| {
            MatricialWeighting::column(b.clone(), j)
                .map(to_series)
                .map_err(|_| LimitError::NegativeParameter)
        })
        .collect::<Result<_, _>>()?;
    Ok(RouteMoments {
        route: Route::Walks,
        mu: mix(model.d(), &muj),
        mu0,
        muj: Some(muj),
    })
}

/// Moments from the 2×2 closed forms.
pub fn closed_form_route<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<RouteMoments<T>, LimitError> {
    if model.r() != 2 {
        return Err(LimitError::Dimension { u: model.r(), d: 2 });
    }
    let b = model.b();
    let laws = dim2_closed_forms(b.get(0, 0), b.get(0, 1), b.get(1, 0), b.get(1, 1), order)?;
    let [[k11, k12], [k21, k22]] = &laws.kij;
    let muj = vec![k_to_moments(&k11.add(k21), order)?, k_to_moments(&k12.add(k22), order)?];
    let mu0 = k_to_moments(&k11.add(k22), order)?;
    Ok(RouteMoments {
        route: Route::ClosedForm,
        mu: mix(model.d(), &muj),
        mu0,
        muj: Some(muj),
    })
}

pub fn continued_fraction_route<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<RouteMoments<T>, LimitError> {
    let fam = limit_family(model, order.max(1))?;
    let muj = (0..model.r()).map(|j| fam.muj_moments(j).truncate(order)).collect();
    Ok(RouteMoments {
        route: Route::ContinuedFraction,
        mu: fam.mu.truncate(order),
        mu0: fam.mu0.truncate(order),
        muj: Some(muj),
    })
}

pub fn combinatorial_route<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<RouteMoments<T>, LimitError> {
    Ok(RouteMoments {
        route: Route::Combinatorial,
        mu: tracial_moments_combinatorial(model, order)?,
        mu0: standard_moments_combinatorial(model, order)?,
        muj: None,
    })
}

/// Compares every applicable route pairwise on `μ`, `μ₀` and the `μ_j`.
pub fn cross_check<T: Scalar>(model: &BlockModel<T>, order: usize) -> Result<CrossCheckReport<T>, LimitError> {
    if order < 2 {
        return Err(LimitError::OrderTooSmall(2));
    }
    let mut routes = Vec::new();
    let mut skipped = Vec::new();
    match combinatorial_route(model, order) {
        Ok(r) => routes.push(r),
        Err(e @ LimitError::RelaxedModel) => skipped.push((Route::Combinatorial, e.to_string())),
        Err(e) => return Err(e),
    }
    routes.push(continued_fraction_route(model, order)?);
    if model.r() == 2 {
        routes.push(walk_route(model, order)?);
        routes.push(closed_form_route(model, order)?);
    } else {
        skipped.push((Route::Walks, "needs r = 2".into()));
        skipped.push((Route::ClosedForm, "needs r = 2".into()));
    }
    Ok(CrossCheckReport {
        order,
        discrepancies: pairwise(&routes),
        routes,
        skipped,
    })
}

pub fn pairwise<T: Scalar>(routes: &[RouteMoments<T>]) -> Vec<Discrepancy<T>> {
    let mut out = Vec::new();
    for (x, a) in routes.iter().enumerate() {
        for b in &routes[x + 1..] {
            let mut push = |law: String, p: &MomentSeries<T>, q: &MomentSeries<T>| {
                let (max_abs, max_rel) = discrepancy(p, q);
                out.push(Discrepancy {
                    a: a.route,
                    b: b.route,
                    law,
                    max_abs,
                    max_rel,
                });
            };
            push("mu".into(), &a.mu, &b.mu);
            push("mu0".into(), &a.mu0, &b.mu0);
            if let (Some(ma), Some(mb)) = (&a.muj, &b.muj) {
                for (j, (p, q)) in ma.iter().zip(mb).enumerate() {
                    push(format!("mu_{}", j + 1), p, q);
                }
            }
        }
    }
    out
}

/// Which law of a model to plot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LawSelector {
    Mu,
    Mu0,
    /// 0-based column.
    MuJ(usize),
    /// 0-based entry.
    MuIJ(usize, usize),
}

impl LawSelector {
    /// `mu`, `mu0`, `mu_j` or `mu_ij` with 1-based indices (`mu_2`, `mu_1_2`).
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mu" => return Some(LawSelector::Mu),
            "mu0" => return Some(LawSelector::Mu0),
            _ => {}
        }
        let idx: Vec<usize> = s
            .strip_prefix("mu_")?
            .split('_')
            .map(|x| x.parse().ok())
            .collect::<Option<_>>()?;
        match idx.as_slice() {
            [j] if *j >= 1 => Some(LawSelector::MuJ(j - 1)),
            [i, j] if *i >= 1 && *j >= 1 => Some(LawSelector::MuIJ(i - 1, j - 1)),
            _ => None,
        }
    }
}

impl fmt::Display for LawSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawSelector::Mu => write!(f, "mu"),
            LawSelector::Mu0 => write!(f, "mu0"),
            LawSelector::MuJ(j) => write!(f, "mu_{}", j + 1),
            LawSelector::MuIJ(i, j) => write!(f, "mu_{}_{}", i + 1, j + 1),
        }
    }
}

/// Density of a model's law on a grid by Stieltjes inversion of the continued fraction.
pub fn law_density<T: Scalar>(
    model: &BlockModel<T>,
    law: LawSelector,
    xs: &[f64],
    eps: f64,
    depth: Depth,
) -> Result<DensityGrid, LimitError> {
    let r = model.r();
    let check = |i: usize| if i < r { Ok(()) } else { Err(LimitError::BadIndex(i)) };
    match law {
        LawSelector::MuJ(j) => check(j)?,
        LawSelector::MuIJ(i, j) => {
            check(i)?;
            check(j)?
        }
        _ => {}
    }
    let b = to_f64_rows(&model.b());
    let d: Vec<f64> = model.d().iter().map(|x| x.to_f64()).collect();
    let grid = density_from_cauchy(xs, eps, |z: Complex64| {
        let (k, used) = cf_evaluate_matrix(&b, z, depth)?;
        let column = |j: usize| (0..r).map(|i| k[i][j]).sum::<Complex64>();
        let g = match law {
            LawSelector::Mu => (0..r).map(|j| d[j] * (z - column(j)).inv()).sum(),
            LawSelector::Mu0 => (z - (0..r).map(|j| k[j][j]).sum::<Complex64>()).inv(),
            LawSelector::MuJ(j) => (z - column(j)).inv(),
            LawSelector::MuIJ(i, j) => (z - k[i][j]).inv(),
        };
        Ok((g, used))
    })?;
    Ok(grid)
}
