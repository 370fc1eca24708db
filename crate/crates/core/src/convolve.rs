//! Convolutions of laws given by truncated K-series.
//!
//! | operation | rule |
//! |-----------|------|
//! | boolean `μ ⊎ ν` | `K_μ + K_ν` |
//! | orthogonal `μ ⊢ ν` | `K_μ ∘ F_ν` |
//! | monotone `μ ▷ ν` | `K_{μ⊢ν} + K_ν`, or `F_μ ∘ F_ν` |
//! | compression `T_t μ` | `t·K_μ` |
//! | s-free `μ ⊞ˢ ν` | limit of `μ ⊢ (ν ⊢ (μ ⊢ …))` |
//! | free `μ ⊞ ν` | `(μ ⊞ˢ ν) ⊎ (ν ⊞ˢ μ)` |
//!
//! Named laws carry squared parameters (`α²`, `γ²`) so that every
//! coefficient stays rational.

use crate::numeric::Scalar;
use crate::series::{k_to_moments, moments_to_k, poly, KSeries};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConvolveError {
    #[error("law parameters must be nonnegative")]
    NegativeParameter,
    #[error("compressed semicircle needs a positive alpha")]
    ZeroAlpha,
    #[error("compression factor must be nonnegative")]
    NegativeCompression,
    #[error("order must be at least 1")]
    ZeroOrder,
}

/// Named laws, parametrized by squares: `Semicircle { alpha_sq }` is `σ_α`.
#[derive(Clone, Debug, PartialEq)]
pub enum NamedLaw<T> {
    Dirac0,
    Bernoulli {
        gamma_sq: T,
    },
    Semicircle {
        alpha_sq: T,
    },
    /// `σ_{α,β} = T_t σ_α` with `t = β²/α²`.
    CompressedSemicircle {
        alpha_sq: T,
        beta_sq: T,
    },
}

impl<T: Scalar> NamedLaw<T> {
    pub fn validate(&self) -> Result<(), ConvolveError> {
        let params: Vec<&T> = match self {
            NamedLaw::Dirac0 => vec![],
            NamedLaw::Bernoulli { gamma_sq } => vec![gamma_sq],
            NamedLaw::Semicircle { alpha_sq } => vec![alpha_sq],
            NamedLaw::CompressedSemicircle { alpha_sq, beta_sq } => vec![alpha_sq, beta_sq],
        };
        if params.iter().any(|p| **p < T::zero()) {
            return Err(ConvolveError::NegativeParameter);
        }
        if let NamedLaw::CompressedSemicircle { alpha_sq, .. } = self {
            if alpha_sq.is_zero() {
                return Err(ConvolveError::ZeroAlpha);
            }
        }
        Ok(())
    }
}

pub fn as_kseries<T: Scalar>(law: &NamedLaw<T>, order: usize) -> Result<KSeries<T>, ConvolveError> {
    if order == 0 {
        return Err(ConvolveError::ZeroOrder);
    }
    law.validate()?;
    Ok(match law {
        NamedLaw::Dirac0 => KSeries::zero(order),
        NamedLaw::Bernoulli { gamma_sq } => bernoulli_k(gamma_sq, order),
        NamedLaw::Semicircle { alpha_sq } => semicircle_k(alpha_sq, order),
        NamedLaw::CompressedSemicircle { alpha_sq, beta_sq } => {
            semicircle_k(alpha_sq, order).scale(&(beta_sq.clone() / alpha_sq.clone()))
        }
    })
}

fn bernoulli_k<T: Scalar>(gamma_sq: &T, order: usize) -> KSeries<T> {
    let mut c = vec![T::zero(); order + 1];
    c[1] = gamma_sq.clone();
    KSeries::new(c).expect("nonempty")
}

// K = α² w / (1 − w K); each pass fixes at least one more coefficient.
fn semicircle_k<T: Scalar>(alpha_sq: &T, order: usize) -> KSeries<T> {
    let len = order + 1;
    let mut k = vec![T::zero(); len];
    for _ in 0..len {
        let wk = poly::shift(&k, len);
        let denom: Vec<T> = (0..len)
            .map(|i| if i == 0 { T::one() } else { -wk[i].clone() })
            .collect();
        let inv = poly::inv(&denom, len);
        k = poly::shift(&inv, len)
            .into_iter()
            .map(|x| x * alpha_sq.clone())
            .collect();
    }
    KSeries::new(k).expect("nonempty")
}

fn common_order<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> usize {
    a.order().min(b.order())
}

pub fn boolean_conv<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
    a.add(b)
}

/// `K_a(F_b(z))`: substitutes `1/F_b = G_b = w·M_b(w)` for `w` in `K_a`.
pub fn orthogonal_conv<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
    let order = common_order(a, b);
    let len = order + 1;
    let mb = k_to_moments(b, order).expect("order within range");
    let u = poly::shift(mb.coeffs(), len);
    KSeries::new(poly::compose(&a.coeffs()[..len], &u, len)).expect("nonempty")
}

pub fn monotone_conv<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
    boolean_conv(&orthogonal_conv(a, b), &b.truncate(common_order(a, b)))
}

/// `F_a ∘ F_b` computed through Cauchy transforms: `G = G_a(G_b)` as series.
pub fn monotone_conv_by_composition<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
    let order = common_order(a, b);
    let len = order + 3;
    let ma = k_to_moments(a, order + 1).expect("order within range");
    let mb = k_to_moments(b, order + 1).expect("order within range");
    let u = poly::shift(mb.coeffs(), len);
    let g = poly::mul(&u, &poly::compose(ma.coeffs(), &u, len), len);
    let moments = crate::series::MomentSeries::new(g[1..len].to_vec()).expect("m_0 = 1");
    moments_to_k(&moments)
}

pub fn t_transform<T: Scalar>(a: &KSeries<T>, t: &T) -> Result<KSeries<T>, ConvolveError> {
    if *t < T::zero() {
        return Err(ConvolveError::NegativeCompression);
    }
    Ok(a.scale(t))
}

/// Iteration count after which `sfree_conv` is exact through `order`.
pub fn sfree_iterations(order: usize) -> usize {
    order.div_ceil(2) + 1
}

/// `a ⊢_m b`, with `a ⊢_0 b = a` and `a ⊢_m b = a ⊢ (b ⊢_{m−1} a)`.
pub fn sfree_iterate<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>, m: usize) -> KSeries<T> {
    let order = common_order(a, b);
    let (a, b) = (a.truncate(order), b.truncate(order));
    let (mut x, mut y) = (a.clone(), b.clone());
    for _ in 0..m {
        (x, y) = (orthogonal_conv(&a, &y), orthogonal_conv(&b, &x));
    }
    x
}

/// `a ⊞ˢ b` through `order` (capped at the inputs' common order).
pub fn sfree_conv<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>, order: usize) -> KSeries<T> {
    let order = order.min(common_order(a, b));
    let (a, b) = (a.truncate(order), b.truncate(order));
    let mut m = sfree_iterations(order);
    let mut current = sfree_iterate(&a, &b, m);
    loop {
        let next = sfree_iterate(&a, &b, m + 1);
        if next.approx_eq(&current) || m > 4 * order + 8 {
            return next;
        }
        current = next;
        m += 1;
    }
}

pub fn free_conv<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> KSeries<T> {
    let order = common_order(a, b);
    boolean_conv(&sfree_conv(a, b, order), &sfree_conv(b, a, order))
}

/// `b ⊞ a == b ▷ (a ⊞ˢ b)` under the profile's equality.
pub fn subordination_check<T: Scalar>(a: &KSeries<T>, b: &KSeries<T>) -> bool {
    let order = common_order(a, b);
    free_conv(b, a).approx_eq(&monotone_conv(b, &sfree_conv(a, b, order)))
}

/// `a_1 ⊞ a_2 ⊞ … ⊞ a_r`.
pub fn free_chain<T: Scalar>(laws: &[KSeries<T>]) -> Option<KSeries<T>> {
    let (first, rest) = laws.split_first()?;
    Some(rest.iter().fold(first.clone(), |acc, k| free_conv(&acc, k)))
}

/// `a_1 ▷ (a_2 ▷ (… ▷ a_r))`.
pub fn monotone_chain<T: Scalar>(laws: &[KSeries<T>]) -> Option<KSeries<T>> {
    let (last, rest) = laws.split_last()?;
    Some(rest.iter().rev().fold(last.clone(), |acc, k| monotone_conv(k, &acc)))
}
