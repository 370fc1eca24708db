//! Python bindings. Exact values cross the boundary as `fractions.Fraction`.

use mfree::convolve::{
    as_kseries, boolean_conv, free_conv, monotone_conv, orthogonal_conv, sfree_conv, t_transform, NamedLaw,
};
use mfree::fock::{extrapolate_limit, pseudomatrix_moments_collapsed, Flavor, PseudomatrixSpec, StateKind};
use mfree::limit::{
    cross_check, law_density, limit_family, standard_moments_combinatorial, tracial_moments_combinatorial, LawSelector,
};
use mfree::ncpart::{catalan as catalan_number, enumerate_nc2};
use mfree::numeric::{parse_scalar, Rational};
use mfree::series::{k_to_moments, moments_to_k, Depth, KSeries, MomentSeries};
use mfree::trace::SquareMatrix;
use mfree::tree::{walk_moments as tree_walk_moments, MatricialWeighting};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

type Q = Rational;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_q(obj: &Bound<'_, PyAny>) -> PyResult<Q> {
    let text = obj.str()?.to_string();
    parse_scalar(&text).ok_or_else(|| PyValueError::new_err(format!("not a rational number: {text}")))
}

fn to_fraction<'py>(py: Python<'py>, v: &Q) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((v.to_string(),))
}

fn fractions<'py>(py: Python<'py>, vs: &[Q]) -> PyResult<Vec<Bound<'py, PyAny>>> {
    vs.iter().map(|v| to_fraction(py, v)).collect()
}

fn to_matrix(rows: &[Vec<Bound<'_, PyAny>>]) -> PyResult<SquareMatrix<Q>> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(to_q).collect())
        .collect::<PyResult<Vec<Vec<Q>>>>()?;
    SquareMatrix::from_rows(rows).map_err(value_error)
}

fn parse_flavor(s: &str) -> PyResult<Flavor> {
    match s {
        "standard" => Ok(Flavor::Standard),
        "strong" => Ok(Flavor::Strong),
        _ => Err(PyValueError::new_err(format!("unknown flavor `{s}`"))),
    }
}

fn parse_state(s: &str) -> PyResult<StateKind> {
    match s {
        "trace" => Ok(StateKind::Trace),
        "vacuum" => Ok(StateKind::Vacuum),
        _ => s
            .strip_prefix("block_")
            .and_then(|c| c.parse::<usize>().ok())
            .filter(|&c| c >= 1)
            .map(|c| StateKind::Block(c - 1))
            .ok_or_else(|| PyValueError::new_err(format!("unknown state `{s}`; use trace, vacuum or block_<c>"))),
    }
}

/// Number of non-crossing pair partitions of `2k` points.
#[pyfunction]
fn catalan(k: usize) -> u128 {
    catalan_number(k)
}

/// Every non-crossing pair partition of `{1, …, 2k}` as a list of pairs.
#[pyfunction]
fn nc_pair_partitions(k: usize) -> Vec<Vec<(usize, usize)>> {
    enumerate_nc2(k).iter().map(|p| p.pairs().to_vec()).collect()
}

/// Closed-walk sums of a matricially weighted tree for every length up to `max_len`.
#[pyfunction]
fn walk_moments<'py>(
    py: Python<'py>,
    b: Vec<Vec<Bound<'py, PyAny>>>,
    roots: Vec<(usize, usize)>,
    max_len: usize,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    let w = MatricialWeighting::new(to_matrix(&b)?, roots).map_err(value_error)?;
    fractions(py, &tree_walk_moments(&w, max_len))
}

/// A block model: variance profile `u` and block proportions `d`.
#[pyclass(name = "BlockModel", frozen)]
struct PyBlockModel {
    inner: mfree::limit::BlockModel<Q>,
}

#[pymethods]
impl PyBlockModel {
    #[new]
    #[pyo3(signature = (u, d, relaxed = false))]
    fn new(u: Vec<Vec<Bound<'_, PyAny>>>, d: Vec<Bound<'_, PyAny>>, relaxed: bool) -> PyResult<Self> {
        let u = to_matrix(&u)?;
        let d = d.iter().map(to_q).collect::<PyResult<Vec<Q>>>()?;
        let inner = if relaxed {
            mfree::limit::BlockModel::relaxed(u, d)
        } else {
            mfree::limit::BlockModel::new(u, d)
        };
        Ok(Self {
            inner: inner.map_err(value_error)?,
        })
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r()
    }

    /// `b_ij = u_ij d_i`.
    fn b<'py>(&self, py: Python<'py>) -> PyResult<Vec<Vec<Bound<'py, PyAny>>>> {
        self.inner.b().rows().iter().map(|r| fractions(py, r)).collect()
    }

    fn tracial_moments<'py>(&self, py: Python<'py>, order: usize) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let m = tracial_moments_combinatorial(&self.inner, order).map_err(value_error)?;
        fractions(py, m.coeffs())
    }

    fn standard_moments<'py>(&self, py: Python<'py>, order: usize) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let m = standard_moments_combinatorial(&self.inner, order).map_err(value_error)?;
        fractions(py, m.coeffs())
    }

    /// Moments of `mu`, `mu0` and every `mu_j` from the continued fraction.
    fn limit_family<'py>(&self, py: Python<'py>, order: usize) -> PyResult<Bound<'py, PyDict>> {
        let fam = limit_family(&self.inner, order).map_err(value_error)?;
        let out = PyDict::new(py);
        out.set_item("mu", fractions(py, fam.mu.coeffs())?)?;
        out.set_item("mu0", fractions(py, fam.mu0.coeffs())?)?;
        let muj = (0..self.inner.r())
            .map(|j| fractions(py, fam.muj_moments(j).coeffs()))
            .collect::<PyResult<Vec<_>>>()?;
        out.set_item("mu_j", muj)?;
        Ok(out)
    }

    /// Runs every applicable route; `passed` is true iff all pairs agree exactly.
    fn cross_check<'py>(&self, py: Python<'py>, order: usize) -> PyResult<Bound<'py, PyDict>> {
        let report = cross_check(&self.inner, order).map_err(value_error)?;
        let out = PyDict::new(py);
        let routes: Vec<&str> = report.routes.iter().map(|r| r.route.name()).collect();
        out.set_item("routes", routes)?;
        let skipped: Vec<(&str, String)> = report.skipped.iter().map(|(r, why)| (r.name(), why.clone())).collect();
        out.set_item("skipped", skipped)?;
        out.set_item("passed", report.all_within(0.0))?;
        Ok(out)
    }

    /// Exact moments `0..=max_m` of the `n × n` Fock model.
    #[pyo3(signature = (n, max_m, state = "trace", flavor = "standard"))]
    fn fock_moments<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        max_m: usize,
        state: &str,
        flavor: &str,
    ) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let spec = PseudomatrixSpec::new(n, self.inner.clone(), parse_flavor(flavor)?).map_err(value_error)?;
        let m = pseudomatrix_moments_collapsed(&spec, max_m, parse_state(state)?).map_err(value_error)?;
        fractions(py, &m)
    }

    /// The `n → ∞` limit of a Fock moment, extrapolated from exact finite sizes.
    #[pyo3(signature = (m, state = "trace", flavor = "standard"))]
    fn fock_limit<'py>(&self, py: Python<'py>, m: usize, state: &str, flavor: &str) -> PyResult<Bound<'py, PyAny>> {
        let v = extrapolate_limit(&self.inner, parse_flavor(flavor)?, m, parse_state(state)?).map_err(value_error)?;
        to_fraction(py, &v)
    }

    /// Density of `law` (`mu`, `mu0`, `mu_j`, `mu_i_j`) at each point of `xs`.
    #[pyo3(signature = (law, xs, eps = 1e-3))]
    fn density(&self, law: &str, xs: Vec<f64>, eps: f64) -> PyResult<Vec<f64>> {
        let sel = LawSelector::parse(law).ok_or_else(|| PyValueError::new_err(format!("unknown law `{law}`")))?;
        let grid = law_density(&self.inner, sel, &xs, eps, Depth::adaptive_for(8)).map_err(value_error)?;
        Ok(grid.points.into_iter().map(|(_, y)| y).collect())
    }
}

/// A law held through its truncated K-series.
#[pyclass(name = "Law", frozen)]
struct PyLaw {
    k: KSeries<Q>,
}

impl PyLaw {
    fn named(law: NamedLaw<Q>, order: usize) -> PyResult<Self> {
        Ok(Self {
            k: as_kseries(&law, order).map_err(value_error)?,
        })
    }

    fn order(&self, other: &PyLaw) -> usize {
        self.k.order().min(other.k.order())
    }

    fn pair(&self, other: &PyLaw) -> (KSeries<Q>, KSeries<Q>) {
        let o = self.order(other);
        (self.k.truncate(o), other.k.truncate(o))
    }
}

#[pymethods]
impl PyLaw {
    #[staticmethod]
    fn dirac0(order: usize) -> PyResult<Self> {
        Self::named(NamedLaw::Dirac0, order)
    }

    #[staticmethod]
    fn semicircle(alpha_sq: Bound<'_, PyAny>, order: usize) -> PyResult<Self> {
        Self::named(
            NamedLaw::Semicircle {
                alpha_sq: to_q(&alpha_sq)?,
            },
            order,
        )
    }

    #[staticmethod]
    fn bernoulli(gamma_sq: Bound<'_, PyAny>, order: usize) -> PyResult<Self> {
        Self::named(
            NamedLaw::Bernoulli {
                gamma_sq: to_q(&gamma_sq)?,
            },
            order,
        )
    }

    #[staticmethod]
    fn compressed_semicircle(alpha_sq: Bound<'_, PyAny>, beta_sq: Bound<'_, PyAny>, order: usize) -> PyResult<Self> {
        Self::named(
            NamedLaw::CompressedSemicircle {
                alpha_sq: to_q(&alpha_sq)?,
                beta_sq: to_q(&beta_sq)?,
            },
            order,
        )
    }

    /// From moments `m_0 = 1, m_1, …`.
    #[staticmethod]
    fn from_moments(moments: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let m = moments.iter().map(to_q).collect::<PyResult<Vec<Q>>>()?;
        Ok(Self {
            k: moments_to_k(&MomentSeries::new(m).map_err(value_error)?),
        })
    }

    /// Moments through the order the K-series pins down.
    fn moments<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        let m = k_to_moments(&self.k, self.k.order() + 1).map_err(value_error)?;
        fractions(py, m.coeffs())
    }

    fn boolean(&self, other: &PyLaw) -> Self {
        let (a, b) = self.pair(other);
        Self {
            k: boolean_conv(&a, &b),
        }
    }

    fn orthogonal(&self, other: &PyLaw) -> Self {
        let (a, b) = self.pair(other);
        Self {
            k: orthogonal_conv(&a, &b),
        }
    }

    fn monotone(&self, other: &PyLaw) -> Self {
        let (a, b) = self.pair(other);
        Self {
            k: monotone_conv(&a, &b),
        }
    }

    fn sfree(&self, other: &PyLaw) -> Self {
        let (a, b) = self.pair(other);
        let o = a.order();
        Self {
            k: sfree_conv(&a, &b, o),
        }
    }

    fn free(&self, other: &PyLaw) -> Self {
        let (a, b) = self.pair(other);
        Self { k: free_conv(&a, &b) }
    }

    fn compress(&self, t: Bound<'_, PyAny>) -> PyResult<Self> {
        Ok(Self {
            k: t_transform(&self.k, &to_q(&t)?).map_err(value_error)?,
        })
    }
}

#[pymodule]
fn mfree_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(catalan, m)?)?;
    m.add_function(wrap_pyfunction!(nc_pair_partitions, m)?)?;
    m.add_function(wrap_pyfunction!(walk_moments, m)?)?;
    m.add_class::<PyBlockModel>()?;
    m.add_class::<PyLaw>()?;
    Ok(())
}
