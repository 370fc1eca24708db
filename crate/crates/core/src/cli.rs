//! Command-line front end: TOML configs in, CSV tables and a JSON summary out.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::convolve::{as_kseries, boolean_conv, NamedLaw};
use crate::fock::{convergence_table, decay_exponent, fock_route, Flavor, FockError, StateKind};
use crate::limit::{
    closed_form_route, combinatorial_route, continued_fraction_route, law_density, limit_family, pairwise, walk_route,
    BlockModel, LawSelector, LimitError, Route, RouteMoments,
};
use crate::numeric::{format_scalar, parse_scalar, Rational, Scalar};
use crate::series::{k_to_moments, linspace, Depth, MomentSeries, SeriesError};
use crate::trace::SquareMatrix;
use crate::tree::{catalan_path_sum, walk_moments, MatricialWeighting};

/// Cross-check tolerance of the floating profile.
pub const F64_CROSSCHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Rational,
    F64,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rational" => Some(Profile::Rational),
            "f64" | "float64" => Some(Profile::F64),
            _ => None,
        }
    }

    pub fn tolerance(self) -> f64 {
        match self {
            Profile::Rational => 0.0,
            Profile::F64 => F64_CROSSCHECK_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FlavorArg {
    Standard,
    Strong,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Standard => Flavor::Standard,
            FlavorArg::Strong => Flavor::Strong,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn config_err(field: &str, message: impl ToString) -> CliError {
    CliError::Config {
        field: field.to_string(),
        message: message.to_string(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// A number in a config file: integer, float, or a string such as `"3/7"`.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum NumLit {
    Int(i64),
    Float(f64),
    Text(String),
}

impl NumLit {
    fn text(&self) -> String {
        match self {
            NumLit::Int(v) => v.to_string(),
            NumLit::Float(v) => format!("{v:?}"),
            NumLit::Text(s) => s.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModel {
    pub u: Option<Vec<Vec<NumLit>>>,
    pub d: Option<Vec<NumLit>>,
    #[serde(default)]
    pub relaxed: bool,
    /// Another TOML file holding `u`, `d` and `relaxed`, relative to this config.
    pub file: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    pub format: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDensity {
    pub law: Option<String>,
    pub grid: Option<String>,
    pub eps: Option<f64>,
    pub depth: Option<usize>,
}

/// The config file as written.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: RawModel,
    pub max_order: Option<usize>,
    pub routes: Option<Vec<String>>,
    pub fock_sizes: Option<Vec<usize>>,
    pub fock_flavor: Option<String>,
    pub profile: Option<String>,
    pub output: Option<RawOutput>,
    pub density: Option<RawDensity>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| config_err("<document>", e.message()))
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }
}

/// Density settings after defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityConfig {
    pub law: LawSelector,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub eps: f64,
    pub depth: Option<usize>,
}

/// A validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig<T> {
    pub model: BlockModel<T>,
    pub max_order: usize,
    pub routes: Vec<Route>,
    pub fock_sizes: Vec<usize>,
    pub flavor: Flavor,
    pub profile: Profile,
    pub out_dir: PathBuf,
    pub density: Option<DensityConfig>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, Args)]
pub struct Overrides {
    /// Config file (TOML).
    #[arg(long)]
    pub model: PathBuf,
    /// Highest moment order.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub fock_sizes: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub flavor: Option<FlavorArg>,
    /// Law to plot: mu, mu0, mu_j or mu_i_j (1-based).
    #[arg(long)]
    pub law: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Fixed continued-fraction depth; adaptive when absent.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Density grid as lo:hi:steps.
    #[arg(long)]
    pub grid: Option<String>,
}

fn parse_num<T: Scalar>(field: &str, lit: &NumLit) -> Result<T, CliError> {
    parse_scalar(&lit.text()).ok_or_else(|| config_err(field, format!("cannot read `{}` as a number", lit.text())))
}

pub fn parse_grid(s: &str) -> Result<(f64, f64, usize), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || config_err("density.grid", format!("expected lo:hi:steps, got `{s}`"));
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let (lo, hi): (f64, f64) = (
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    );
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) || steps < 2 {
        return Err(config_err("density.grid", "need lo < hi and at least 2 steps"));
    }
    Ok((lo, hi, steps))
}

fn resolve_model<T: Scalar>(raw: &RawModel, base: &Path) -> Result<BlockModel<T>, CliError> {
    if let Some(file) = &raw.file {
        if raw.u.is_some() || raw.d.is_some() {
            return Err(config_err(
                "model.file",
                "give either a file or inline u and d, not both",
            ));
        }
        let path = base.join(file);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let inner: RawModel = toml::from_str(&text).map_err(|e| config_err("model.file", e.message()))?;
        if inner.file.is_some() {
            return Err(config_err("model.file", "model files cannot chain"));
        }
        return resolve_model(&inner, base);
    }
    let rows = raw.u.as_ref().ok_or_else(|| config_err("model.u", "missing"))?;
    let d = raw.d.as_ref().ok_or_else(|| config_err("model.d", "missing"))?;
    let rows: Vec<Vec<T>> = rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| parse_num(&format!("model.u[{i}][{j}]"), x))
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let d: Vec<T> = d
        .iter()
        .enumerate()
        .map(|(j, x)| parse_num(&format!("model.d[{j}]"), x))
        .collect::<Result<_, _>>()?;
    let u = SquareMatrix::from_rows(rows).map_err(|e| config_err("model.u", e))?;
    let built = if raw.relaxed {
        BlockModel::relaxed(u, d)
    } else {
        BlockModel::new(u, d)
    };
    built.map_err(|e| {
        let field = match e {
            LimitError::TraceNotOne(_) | LimitError::NonPositiveDimension(_) | LimitError::Dimension { .. } => {
                "model.d"
            }
            _ => "model.u",
        };
        config_err(field, e)
    })
}

fn default_routes<T: Scalar>(model: &BlockModel<T>, fock: bool) -> Vec<Route> {
    let mut routes = Vec::new();
    if !model.is_relaxed() {
        routes.push(Route::Combinatorial);
    }
    routes.push(Route::ContinuedFraction);
    if fock {
        routes.push(Route::Fock);
    }
    if model.r() == 2 {
        routes.push(Route::Walks);
        routes.push(Route::ClosedForm);
    }
    routes
}

impl<T: Scalar> RunConfig<T> {
    /// Applies overrides and validates every field.
    pub fn resolve(raw: &RawConfig, base: &Path, ov: &Overrides) -> Result<Self, CliError> {
        let model: BlockModel<T> = resolve_model(&raw.model, base)?;
        let max_order = ov.order.or(raw.max_order).unwrap_or(8);
        if max_order < 2 {
            return Err(config_err("max_order", "must be at least 2"));
        }
        let profile = match (ov.profile, &raw.profile) {
            (Some(p), _) => p,
            (None, Some(s)) => {
                Profile::parse(s).ok_or_else(|| config_err("profile", format!("unknown profile `{s}`")))?
            }
            (None, None) => Profile::Rational,
        };
        let fock_sizes = ov
            .fock_sizes
            .clone()
            .or_else(|| raw.fock_sizes.clone())
            .unwrap_or_default();
        let routes = match &raw.routes {
            None => default_routes(&model, !fock_sizes.is_empty()),
            Some(names) => names
                .iter()
                .map(|s| Route::parse(s).ok_or_else(|| config_err("routes", format!("unknown route `{s}`"))))
                .collect::<Result<Vec<_>, _>>()?,
        };
        if routes.is_empty() {
            return Err(config_err("routes", "at least one route is required"));
        }
        for route in &routes {
            match route {
                Route::Walks | Route::ClosedForm if model.r() != 2 => {
                    return Err(config_err(
                        "routes",
                        format!("route `{route}` requires r = 2, model has r = {}", model.r()),
                    ))
                }
                Route::Fock if fock_sizes.is_empty() => {
                    return Err(config_err(
                        "fock_sizes",
                        "route `fock` requires a non-empty list of sizes",
                    ))
                }
                Route::Combinatorial if model.is_relaxed() => {
                    return Err(config_err("routes", "route `combinatorial` requires u[j][j] > 0"))
                }
                _ => {}
            }
        }
        for &n in &fock_sizes {
            crate::limit::interval_sizes(&model, n).map_err(|e| config_err("fock_sizes", e))?;
        }
        let flavor = match (ov.flavor, raw.fock_flavor.as_deref()) {
            (Some(f), _) => f.into(),
            (None, None | Some("standard")) => Flavor::Standard,
            (None, Some("strong")) => Flavor::Strong,
            (None, Some(other)) => return Err(config_err("fock_flavor", format!("unknown flavor `{other}`"))),
        };
        let output = raw.output.clone().unwrap_or_default();
        if let Some(fmt) = &output.format {
            if fmt != "csv" {
                return Err(config_err("output.format", "only csv is supported"));
            }
        }
        let out_dir = ov
            .out
            .clone()
            .or_else(|| output.dir.map(|d| base.join(d)))
            .unwrap_or_else(|| PathBuf::from("out"));
        let density = resolve_density(raw.density.as_ref(), ov, model.r())?;
        Ok(Self {
            model,
            max_order,
            routes,
            fock_sizes,
            flavor,
            profile,
            out_dir,
            density,
        })
    }
}

fn resolve_density(raw: Option<&RawDensity>, ov: &Overrides, r: usize) -> Result<Option<DensityConfig>, CliError> {
    let any_flag = ov.law.is_some() || ov.grid.is_some() || ov.eps.is_some() || ov.depth.is_some();
    if raw.is_none() && !any_flag {
        return Ok(None);
    }
    let raw = raw.cloned().unwrap_or_default();
    let law_text = ov.law.clone().or(raw.law).unwrap_or_else(|| "mu".into());
    let law =
        LawSelector::parse(&law_text).ok_or_else(|| config_err("density.law", format!("unknown law `{law_text}`")))?;
    let in_range = match law {
        LawSelector::MuJ(j) => j < r,
        LawSelector::MuIJ(i, j) => i < r && j < r,
        _ => true,
    };
    if !in_range {
        return Err(config_err(
            "density.law",
            format!("`{law_text}` is out of range for r = {r}"),
        ));
    }
    let (lo, hi, steps) = parse_grid(&ov.grid.clone().or(raw.grid).unwrap_or_else(|| "-3:3:601".into()))?;
    let eps = ov.eps.or(raw.eps).unwrap_or(1e-3);
    if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
        return Err(config_err("density.eps", "must be positive"));
    }
    let depth = ov.depth.or(raw.depth);
    if depth == Some(0) {
        return Err(config_err("density.depth", "must be positive"));
    }
    Ok(Some(DensityConfig {
        law,
        lo,
        hi,
        steps,
        eps,
        depth,
    }))
}

/// SHA-256 of a canonical rendering of the model.
pub fn model_hash<T: Scalar>(model: &BlockModel<T>) -> String {
    let rows: Vec<String> = model
        .u()
        .rows()
        .iter()
        .map(|r| r.iter().map(format_scalar).collect::<Vec<_>>().join(","))
        .collect();
    let d: Vec<String> = model.d().iter().map(format_scalar).collect();
    let canonical = format!("u={};d={};relaxed={}", rows.join(";"), d.join(","), model.is_relaxed());
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// One route evaluated, or the reason it could not be.
pub fn evaluate_route<T: Scalar>(cfg: &RunConfig<T>, route: Route) -> Result<RouteMoments<T>, CliError> {
    let (model, order) = (&cfg.model, cfg.max_order);
    Ok(match route {
        Route::Combinatorial => combinatorial_route(model, order)?,
        Route::ContinuedFraction => continued_fraction_route(model, order)?,
        Route::Walks => walk_route(model, order)?,
        Route::ClosedForm => closed_form_route(model, order)?,
        Route::Fock => fock_route(model, cfg.flavor, order)?,
    })
}

/// Every requested route, evaluated concurrently and returned in request order.
pub fn evaluate_routes<T: Scalar>(cfg: &RunConfig<T>) -> Result<Vec<RouteMoments<T>>, CliError> {
    std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .routes
            .iter()
            .map(|&route| s.spawn(move || evaluate_route(cfg, route)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("route worker panicked"))
            .collect()
    })
}

/// A single emitted moment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentRow {
    pub route: String,
    pub law: String,
    pub order: usize,
    pub value: String,
}

fn series_rows<T: Scalar>(route: Route, law: &str, s: &MomentSeries<T>, out: &mut Vec<MomentRow>) {
    for (order, v) in s.coeffs().iter().enumerate() {
        out.push(MomentRow {
            route: route.name().into(),
            law: law.into(),
            order,
            value: format_scalar(v),
        });
    }
}

/// Long-format moment table; the continued fraction also contributes every `μ_ij`.
pub fn moment_rows<T: Scalar>(cfg: &RunConfig<T>, routes: &[RouteMoments<T>]) -> Result<Vec<MomentRow>, CliError> {
    let mut out = Vec::new();
    for rm in routes {
        series_rows(rm.route, "mu", &rm.mu, &mut out);
        series_rows(rm.route, "mu0", &rm.mu0, &mut out);
        if let Some(muj) = &rm.muj {
            for (j, s) in muj.iter().enumerate() {
                series_rows(rm.route, &LawSelector::MuJ(j).to_string(), s, &mut out);
            }
        }
        if rm.route == Route::ContinuedFraction {
            let fam = limit_family(&cfg.model, cfg.max_order)?;
            for (i, row) in fam.kij.iter().enumerate() {
                for (j, k) in row.iter().enumerate() {
                    let s = k_to_moments(k, cfg.max_order)?;
                    series_rows(rm.route, &LawSelector::MuIJ(i, j).to_string(), &s, &mut out);
                }
            }
        }
    }
    Ok(out)
}

fn write_csv<S: Serialize>(path: &Path, header_comments: &[String], rows: &[S]) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    for line in header_comments {
        writeln!(file, "# {line}").map_err(io_err(path))?;
    }
    let mut w = csv::Writer::from_writer(file);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Named laws a moment sequence matches exactly (or within tolerance in the float profile).
pub fn identify<T: Scalar>(s: &MomentSeries<T>) -> Vec<String> {
    let order = s.order();
    let mut out = Vec::new();
    let m2 = if order >= 2 { s.moment(2).clone() } else { return out };
    let matches = |k: Option<crate::series::KSeries<T>>| {
        k.and_then(|k| k_to_moments(&k, order).ok())
            .is_some_and(|m| m.coeffs().iter().zip(s.coeffs()).all(|(a, b)| a.approx_eq(b)))
    };
    let law = |l: NamedLaw<T>| as_kseries(&l, order).ok();
    if matches(law(NamedLaw::Dirac0)) {
        out.push("dirac0".into());
        return out;
    }
    if matches(law(NamedLaw::Semicircle { alpha_sq: m2.clone() })) {
        out.push(format!("semicircle(alpha_sq={})", format_scalar(&m2)));
    }
    if matches(law(NamedLaw::Bernoulli { gamma_sq: m2.clone() })) {
        out.push(format!("bernoulli(gamma_sq={})", format_scalar(&m2)));
    }
    let half = m2.clone() / T::from_i64(2);
    let sq = law(NamedLaw::Semicircle { alpha_sq: half.clone() }).map(|k| boolean_conv(&k, &k));
    if matches(sq) {
        out.push(format!("boolean_square_semicircle(alpha_sq={})", format_scalar(&half)));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscrepancyRow {
    pub a: String,
    pub b: String,
    pub law: String,
    pub max_abs: String,
    pub max_rel: Option<f64>,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub profile: Profile,
    pub order: usize,
    pub tolerance: f64,
    pub model_sha256: String,
    pub routes: Vec<String>,
    pub discrepancies: Vec<DiscrepancyRow>,
    pub identifications: BTreeMap<String, Vec<String>>,
    pub pass: bool,
}

pub fn summarize<T: Scalar>(cfg: &RunConfig<T>, routes: &[RouteMoments<T>]) -> Summary {
    let tol = cfg.profile.tolerance();
    let discrepancies: Vec<DiscrepancyRow> = pairwise(routes)
        .into_iter()
        .map(|d| DiscrepancyRow {
            a: d.a.name().into(),
            b: d.b.name().into(),
            within: d.within(tol),
            max_abs: format_scalar(&d.max_abs),
            max_rel: d.max_rel.is_finite().then_some(d.max_rel),
            law: d.law,
        })
        .collect();
    let mut identifications = BTreeMap::new();
    if let Some(first) = routes.first() {
        identifications.insert("mu".into(), identify(&first.mu));
        identifications.insert("mu0".into(), identify(&first.mu0));
        if let Some(muj) = &first.muj {
            for (j, s) in muj.iter().enumerate() {
                identifications.insert(LawSelector::MuJ(j).to_string(), identify(s));
            }
        }
    }
    Summary {
        profile: cfg.profile,
        order: cfg.max_order,
        tolerance: tol,
        model_sha256: model_hash(&cfg.model),
        routes: routes.iter().map(|r| r.route.name().to_string()).collect(),
        pass: discrepancies.iter().all(|d| d.within),
        discrepancies,
        identifications,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceCsvRow {
    pub flavor: String,
    pub state: String,
    pub n: usize,
    pub order: usize,
    pub moment: String,
    pub limit: String,
    pub error: String,
}

/// Fitted decay of `|moment(n) − limit|` for one state and order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceFit {
    pub state: String,
    pub order: usize,
    pub exact_at_every_n: bool,
    pub monotone: bool,
    pub exponent: Option<f64>,
}

pub fn fock_convergence<T: Scalar>(
    cfg: &RunConfig<T>,
) -> Result<(Vec<ConvergenceCsvRow>, Vec<ConvergenceFit>), CliError> {
    if cfg.fock_sizes.is_empty() {
        return Err(config_err("fock_sizes", "fock-converge needs at least one size"));
    }
    let orders: Vec<usize> = (2..=cfg.max_order).step_by(2).collect();
    let flavor = match cfg.flavor {
        Flavor::Standard => "standard",
        Flavor::Strong => "strong",
    };
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (state, name) in [(StateKind::Trace, "trace"), (StateKind::Vacuum, "vacuum")] {
        let table = convergence_table(&cfg.model, cfg.flavor, &cfg.fock_sizes, &orders, state)?;
        for r in &table {
            rows.push(ConvergenceCsvRow {
                flavor: flavor.into(),
                state: name.into(),
                n: r.n,
                order: r.order,
                moment: format_scalar(&r.moment),
                limit: format_scalar(&r.limit),
                error: format_scalar(&r.error),
            });
        }
        for &m in &orders {
            let errs: Vec<(usize, f64)> = table
                .iter()
                .filter(|r| r.order == m)
                .map(|r| (r.n, r.error.to_f64()))
                .collect();
            let exact = table.iter().filter(|r| r.order == m).all(|r| r.error.is_zero());
            let monotone = errs.windows(2).all(|w| w[1].1 < w[0].1);
            let exponent = (!exact && errs.len() >= 2 && errs.iter().all(|e| e.1 > 0.0)).then(|| decay_exponent(&errs));
            fits.push(ConvergenceFit {
                state: name.into(),
                order: m,
                exact_at_every_n: exact,
                monotone,
                exponent,
            });
        }
    }
    Ok((rows, fits))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkRow {
    pub law: String,
    pub length: usize,
    pub walk_sum: String,
    pub path_sum: String,
}

/// Tree-walk sums next to the brute-force labelled Dyck path sums, for `μ₀` and each `μ_j`.
pub fn walk_table<T: Scalar>(cfg: &RunConfig<T>) -> Result<Vec<WalkRow>, CliError> {
    if cfg.model.r() != 2 {
        return Err(config_err(
            "model.u",
            format!("walks require r = 2, model has r = {}", cfg.model.r()),
        ));
    }
    let b = cfg.model.b();
    let bad = |_| config_err("model.u", "negative weight");
    let mut weightings = vec![("mu0".to_string(), MatricialWeighting::diagonal(b.clone()).map_err(bad)?)];
    for j in 0..2 {
        weightings.push((
            LawSelector::MuJ(j).to_string(),
            MatricialWeighting::column(b.clone(), j).map_err(bad)?,
        ));
    }
    let mut rows = Vec::new();
    for (law, w) in &weightings {
        let sums = walk_moments(w, cfg.max_order);
        for (length, s) in sums.iter().enumerate() {
            let path = if length % 2 == 0 {
                catalan_path_sum(w, length / 2)
            } else {
                T::zero()
            };
            rows.push(WalkRow {
                law: law.clone(),
                length,
                walk_sum: format_scalar(s),
                path_sum: format_scalar(&path),
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
struct DensityRow {
    x: f64,
    density: f64,
}

/// Writes the density CSV and returns its path.
pub fn write_density<T: Scalar>(cfg: &RunConfig<T>) -> Result<PathBuf, CliError> {
    let dc = cfg
        .density
        .clone()
        .ok_or_else(|| config_err("density", "no density settings"))?;
    let xs = linspace(dc.lo, dc.hi, dc.steps);
    let depth = dc
        .depth
        .map(Depth::Fixed)
        .unwrap_or_else(|| Depth::adaptive_for(cfg.max_order));
    let grid = law_density(&cfg.model, dc.law, &xs, dc.eps, depth)?;
    let header = vec![
        format!("law={}", dc.law),
        format!("eps={}", dc.eps),
        format!("depth={}", grid.depth_used),
        format!("model_sha256={}", model_hash(&cfg.model)),
    ];
    let rows: Vec<DensityRow> = grid
        .points
        .iter()
        .map(|&(x, density)| DensityRow { x, density })
        .collect();
    let path = cfg.out_dir.join(format!("density_{}.csv", dc.law));
    write_csv(&path, &header, &rows)?;
    Ok(path)
}

fn prepare_out(cfg_out: &Path) -> Result<(), CliError> {
    fs::create_dir_all(cfg_out).map_err(io_err(cfg_out))
}

/// What a run produced and whether its cross-checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub pass: bool,
}

/// Moment tables, discrepancy summary, Fock convergence table (when the Fock route is
/// requested) and density grid (when configured).
pub fn run<T: Scalar>(cfg: &RunConfig<T>) -> Result<RunOutcome, CliError> {
    prepare_out(&cfg.out_dir)?;
    let routes = evaluate_routes(cfg)?;
    let mut files = Vec::new();
    let moments = cfg.out_dir.join("moments.csv");
    write_csv(&moments, &[], &moment_rows(cfg, &routes)?)?;
    files.push(moments);
    let summary = summarize(cfg, &routes);
    let json = cfg.out_dir.join("discrepancies.json");
    fs::write(&json, serde_json::to_string_pretty(&summary)? + "\n").map_err(io_err(&json))?;
    files.push(json);
    if cfg.routes.contains(&Route::Fock) {
        files.push(write_convergence(cfg)?);
    }
    if cfg.density.is_some() {
        files.push(write_density(cfg)?);
    }
    Ok(RunOutcome {
        files,
        pass: summary.pass,
    })
}

fn write_convergence<T: Scalar>(cfg: &RunConfig<T>) -> Result<PathBuf, CliError> {
    let (rows, fits) = fock_convergence(cfg)?;
    let path = cfg.out_dir.join("fock_convergence.csv");
    write_csv(&path, &[], &rows)?;
    let fit_path = cfg.out_dir.join("fock_convergence_fit.json");
    fs::write(&fit_path, serde_json::to_string_pretty(&fits)? + "\n").map_err(io_err(&fit_path))?;
    Ok(path)
}

#[derive(Debug, Parser)]
#[command(
    name = "mfree",
    version,
    about = "Moments, limit laws and Fock simulations of matricially free arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Moment tables for every requested route.
    Moments(Overrides),
    /// Full run with pairwise route comparison; exits 1 on any discrepancy above tolerance.
    Crosscheck(Overrides),
    /// Exact finite-n Fock moments against their limits.
    FockConverge(Overrides),
    /// Tree-walk sums and labelled Dyck path sums.
    Walks(Overrides),
    /// Density of one law on a grid.
    Density(Overrides),
}

fn execute<T: Scalar>(command: &Command, raw: &RawConfig, base: &Path, ov: &Overrides) -> Result<i32, CliError> {
    let cfg = RunConfig::<T>::resolve(raw, base, ov)?;
    let print = |files: &[PathBuf]| {
        for f in files {
            println!("{}", f.display());
        }
    };
    match command {
        Command::Moments(_) => {
            prepare_out(&cfg.out_dir)?;
            let routes = evaluate_routes(&cfg)?;
            let path = cfg.out_dir.join("moments.csv");
            write_csv(&path, &[], &moment_rows(&cfg, &routes)?)?;
            print(&[path]);
            Ok(0)
        }
        Command::Crosscheck(_) => {
            let outcome = run(&cfg)?;
            print(&outcome.files);
            if !outcome.pass {
                eprintln!("cross-check exceeded tolerance {}", cfg.profile.tolerance());
            }
            Ok(if outcome.pass { 0 } else { 1 })
        }
        Command::FockConverge(_) => {
            prepare_out(&cfg.out_dir)?;
            let path = write_convergence(&cfg)?;
            print(&[path, cfg.out_dir.join("fock_convergence_fit.json")]);
            Ok(0)
        }
        Command::Walks(_) => {
            prepare_out(&cfg.out_dir)?;
            let path = cfg.out_dir.join("walks.csv");
            write_csv(&path, &[], &walk_table(&cfg)?)?;
            print(&[path]);
            Ok(0)
        }
        Command::Density(_) => {
            prepare_out(&cfg.out_dir)?;
            let mut cfg = cfg;
            if cfg.density.is_none() {
                cfg.density = resolve_density(Some(&RawDensity::default()), ov, cfg.model.r())?;
            }
            print(&[write_density(&cfg)?]);
            Ok(0)
        }
    }
}

/// Entry point shared by the binary and the tests. Returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let ov = match &cli.command {
        Command::Moments(o)
        | Command::Crosscheck(o)
        | Command::FockConverge(o)
        | Command::Walks(o)
        | Command::Density(o) => o,
    };
    let result = RawConfig::load(&ov.model).and_then(|(raw, base)| {
        let profile = match (ov.profile, raw.profile.as_deref()) {
            (Some(p), _) => p,
            (None, Some(s)) => {
                Profile::parse(s).ok_or_else(|| config_err("profile", format!("unknown profile `{s}`")))?
            }
            (None, None) => Profile::Rational,
        };
        match profile {
            Profile::Rational => execute::<Rational>(&cli.command, &raw, &base, ov),
            Profile::F64 => execute::<f64>(&cli.command, &raw, &base, ov),
        }
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
