//! Exact finite-`n` simulation on the discrete matricially free Fock space.
//!
//! Basis vectors are words of index pairs (letters). A word is read left to
//! right from its most recent letter: creation prepends, annihilation strips
//! the first letter. Indices are 0-based.
//!
//! Admissible words (standard flavor):
//! * consecutive letters are equal, or chain as `(i, j)(j, k)` with the two letters different;
//! * the last letter is diagonal.
//!
//! The strong flavor also requires every letter before the final run to be
//! off-diagonal, so diagonal letters occur only at the end.
//!
//! The unit `1_{ij}` projects onto the words on which creation by `(i, j)`
//! is allowed: words starting with `(i, j)`, words starting with `(j, k)` for
//! `(j, k) ≠ (i, j)`, and `Ω` when `i = j`. In the strong flavor a word is
//! admissible for `(i, j)` only if prepending `(i, j)` keeps it strong, which
//! makes `ℓ*_{ij} ℓ_{ij} = 1_{ij}` exact on both spaces.
//!
//! Moments of `S(n) = Σ √v_{ij} (ℓ_{ij} + ℓ*_{ij})` are computed with weight
//! `v_{ij}` on creation and 1 on annihilation. Expectations in basis vectors
//! pair every creation with an annihilation of the same letter, so this gives
//! the same numbers while staying rational.

use std::collections::BTreeMap;

use crate::limit::{
    block_labels, cross_check, interval_sizes, pairwise, standard_moments_combinatorial, tracial_moments_combinatorial,
    BlockModel, CrossCheckReport, LimitError, Route, RouteMoments,
};
use crate::numeric::Scalar;
use crate::series::{poly, MomentSeries};

pub type Letter = (usize, usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Standard,
    Strong,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FockError {
    #[error("word of length {len} exceeds truncation {max}")]
    Overflow { len: usize, max: usize },
    #[error("index {index} out of range for n = {n}")]
    BadIndex { index: usize, n: usize },
    #[error("word is not admissible for this flavor")]
    InadmissibleWord,
    #[error("the block-collapsed engine handles square arrays only")]
    ShapeUnsupported,
    #[error("need at least {0} sizes for extrapolation")]
    TooFewSizes(usize),
    #[error(transparent)]
    Limit(#[from] LimitError),
}

/// Whether `letters` is a basis word of the given flavor.
pub fn is_admissible_word(letters: &[Letter], flavor: Flavor) -> bool {
    let Some(&(p, q)) = letters.last() else {
        return true;
    };
    if p != q {
        return false;
    }
    letters.windows(2).all(|w| {
        let ((a, b), (c, d)) = (w[0], w[1]);
        if w[0] == w[1] {
            return true;
        }
        let chains = b == c;
        match flavor {
            Flavor::Standard => chains,
            Flavor::Strong => chains && a != b && (c != d || w[1..].iter().all(|x| *x == (c, d))),
        }
    })
}

/// Whether `word` lies in the range of `1_{ij}`.
pub fn admissible_for(flavor: Flavor, (i, j): Letter, word: &[Letter]) -> bool {
    match word.first() {
        None => i == j,
        Some(&top) if top == (i, j) => true,
        Some(&(p, _)) if p == j => flavor == Flavor::Standard || i != j,
        Some(_) => false,
    }
}

/// A basis word together with its flavor.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FockWord {
    letters: Vec<Letter>,
}

impl FockWord {
    pub fn vacuum() -> Self {
        Self { letters: vec![] }
    }

    pub fn new(letters: Vec<Letter>, flavor: Flavor) -> Result<Self, FockError> {
        if !is_admissible_word(&letters, flavor) {
            return Err(FockError::InadmissibleWord);
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
}

/// Finite linear combination of basis words, with an explicit length cap.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState<T> {
    n: usize,
    flavor: Flavor,
    max_len: usize,
    amps: BTreeMap<Vec<Letter>, T>,
}

impl<T: Scalar> FockState<T> {
    pub fn zero(n: usize, flavor: Flavor, max_len: usize) -> Self {
        Self {
            n,
            flavor,
            max_len,
            amps: BTreeMap::new(),
        }
    }

    pub fn vacuum(n: usize, flavor: Flavor, max_len: usize) -> Self {
        Self::basis(n, flavor, max_len, &FockWord::vacuum()).expect("vacuum fits")
    }

    pub fn basis(n: usize, flavor: Flavor, max_len: usize, word: &FockWord) -> Result<Self, FockError> {
        let mut s = Self::zero(n, flavor, max_len);
        s.check_word(word.letters())?;
        s.amps.insert(word.letters.clone(), T::one());
        Ok(s)
    }

    fn check_word(&self, letters: &[Letter]) -> Result<(), FockError> {
        if letters.len() > self.max_len {
            return Err(FockError::Overflow {
                len: letters.len(),
                max: self.max_len,
            });
        }
        if let Some(&index) = letters.iter().flat_map(|(a, b)| [a, b]).find(|&&x| x >= self.n) {
            return Err(FockError::BadIndex { index, n: self.n });
        }
        if !is_admissible_word(letters, self.flavor) {
            return Err(FockError::InadmissibleWord);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn amplitude(&self, word: &[Letter]) -> T {
        self.amps.get(word).cloned().unwrap_or_else(T::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<Letter>, &T)> {
        self.amps.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.amps.values().all(|a| a.is_zero())
    }

    /// Adds `c·word` in place.
    pub fn add_term(&mut self, word: Vec<Letter>, c: T) {
        if c.is_zero() {
            return;
        }
        let entry = self.amps.entry(word).or_insert_with(T::zero);
        *entry = entry.clone() + c;
        self.amps.retain(|_, a| !a.is_zero());
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, a) in &other.amps {
            out.add_term(w.clone(), a.clone());
        }
        out
    }

    pub fn scale(&self, c: &T) -> Self {
        let mut out = Self::zero(self.n, self.flavor, self.max_len);
        for (w, a) in &self.amps {
            out.add_term(w.clone(), a.clone() * c.clone());
        }
        out
    }

    /// Real inner product in the word basis.
    pub fn inner(&self, other: &Self) -> T {
        self.amps
            .iter()
            .filter_map(|(w, a)| other.amps.get(w).map(|b| a.clone() * b.clone()))
            .fold(T::zero(), |acc, x| acc + x)
    }

    fn empty_like(&self) -> Self {
        Self::zero(self.n, self.flavor, self.max_len)
    }

    fn check_letter(&self, (i, j): Letter) -> Result<(), FockError> {
        for index in [i, j] {
            if index >= self.n {
                return Err(FockError::BadIndex { index, n: self.n });
            }
        }
        Ok(())
    }
}

/// `ℓ_{ij}`: prepends `(i, j)` to admissible words and drops the rest.
pub fn create<T: Scalar>(i: usize, j: usize, state: &FockState<T>) -> Result<FockState<T>, FockError> {
    state.check_letter((i, j))?;
    let mut out = state.empty_like();
    for (w, a) in &state.amps {
        if admissible_for(state.flavor, (i, j), w) {
            if w.len() + 1 > state.max_len {
                return Err(FockError::Overflow {
                    len: w.len() + 1,
                    max: state.max_len,
                });
            }
            let mut nw = Vec::with_capacity(w.len() + 1);
            nw.push((i, j));
            nw.extend_from_slice(w);
            out.add_term(nw, a.clone());
        }
    }
    Ok(out)
}

/// `ℓ*_{ij}`: strips a leading `(i, j)` when the remainder is admissible for `(i, j)`.
pub fn annihilate<T: Scalar>(i: usize, j: usize, state: &FockState<T>) -> Result<FockState<T>, FockError> {
    state.check_letter((i, j))?;
    let mut out = state.empty_like();
    for (w, a) in &state.amps {
        if w.first() == Some(&(i, j)) && admissible_for(state.flavor, (i, j), &w[1..]) {
            out.add_term(w[1..].to_vec(), a.clone());
        }
    }
    Ok(out)
}

/// `1_{ij}`: keeps exactly the words admissible for `(i, j)`.
pub fn unit_project<T: Scalar>(i: usize, j: usize, state: &FockState<T>) -> Result<FockState<T>, FockError> {
    state.check_letter((i, j))?;
    let mut out = state.empty_like();
    for (w, a) in &state.amps {
        if admissible_for(state.flavor, (i, j), w) {
            out.add_term(w.clone(), a.clone());
        }
    }
    Ok(out)
}

/// Every admissible word with at most `max_len` letters over `n` indices.
pub fn enumerate_words(n: usize, flavor: Flavor, max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![vec![]];
    let mut frontier: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for i in 0..n {
                for j in 0..n {
                    if admissible_for(flavor, (i, j), w) {
                        let mut nw = vec![(i, j)];
                        nw.extend_from_slice(w);
                        next.push(nw);
                    }
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out.sort();
    out
}

/// Square arrays, or the lower triangle `i ≥ j` with the rest set to zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Square,
    LowerTriangular,
}

/// `S(n)` built from a block model.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudomatrixSpec<T> {
    pub n: usize,
    pub model: BlockModel<T>,
    pub flavor: Flavor,
    pub shape: Shape,
    /// Longest word the direct engine may create.
    pub max_len: usize,
}

impl<T: Scalar> PseudomatrixSpec<T> {
    pub fn new(n: usize, model: BlockModel<T>, flavor: Flavor) -> Result<Self, FockError> {
        interval_sizes(&model, n)?;
        Ok(Self {
            n,
            model,
            flavor,
            shape: Shape::Square,
            max_len: 64,
        })
    }

    pub fn with_shape(mut self, shape: Shape) -> Self {
        self.shape = shape;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    fn variances(&self) -> Result<Vec<Vec<T>>, FockError> {
        let labels = block_labels(&self.model, self.n)?;
        let nn = T::from_i64(self.n as i64);
        Ok((0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        if self.shape == Shape::LowerTriangular && i < j {
                            T::zero()
                        } else {
                            self.model.u().get(labels[i], labels[j]).clone() / nn.clone()
                        }
                    })
                    .collect()
            })
            .collect())
    }
}

/// Which expectation to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateKind {
    /// `φ`, the vacuum state.
    Vacuum,
    /// `ψ_j`, the state of the basis vector `(j, j)`.
    Condition(usize),
    /// `ψ_q` for the first coordinate `q` of block `c`.
    Block(usize),
    /// `ψ = (1/n) Σ_j ψ_j`.
    Trace,
}

fn starting_words<T: Scalar>(
    state: StateKind,
    model: Option<&BlockModel<T>>,
    n: usize,
) -> Result<Vec<Vec<Letter>>, FockError> {
    match state {
        StateKind::Block(c) => {
            let model = model.ok_or(FockError::BadIndex { index: c, n })?;
            let labels = block_labels(model, n)?;
            let q = labels
                .iter()
                .position(|&x| x == c)
                .ok_or(FockError::BadIndex { index: c, n: model.r() })?;
            Ok(vec![vec![(q, q)]])
        }
        StateKind::Vacuum => Ok(vec![vec![]]),
        StateKind::Condition(j) if j < n => Ok(vec![vec![(j, j)]]),
        StateKind::Condition(j) => Err(FockError::BadIndex { index: j, n }),
        StateKind::Trace => Ok((0..n).map(|j| vec![(j, j)]).collect()),
    }
}

/// Letters that may be prepended to `word`.
fn creatable(flavor: Flavor, n: usize, word: &[Letter]) -> Vec<Letter> {
    match word.first() {
        None => (0..n).map(|p| (p, p)).collect(),
        Some(&(p, q)) => {
            let mut out = vec![(p, q)];
            for i in 0..n {
                if (i, p) == (p, q) || (flavor == Flavor::Strong && i == p) {
                    continue;
                }
                out.push((i, p));
            }
            out
        }
    }
}

/// `⟨S(n)^m Ξ, Ξ⟩` by direct evolution of sparse states.
pub fn pseudomatrix_moment<T: Scalar>(spec: &PseudomatrixSpec<T>, m: usize, state: StateKind) -> Result<T, FockError> {
    let v = spec.variances()?;
    let starts = starting_words(state, Some(&spec.model), spec.n)?;
    let mut total = T::zero();
    for start in &starts {
        let mut amps: BTreeMap<Vec<Letter>, T> = BTreeMap::new();
        amps.insert(start.clone(), T::one());
        for step in 1..=m {
            let remaining = m - step;
            let mut next: BTreeMap<Vec<Letter>, T> = BTreeMap::new();
            let mut push = |w: Vec<Letter>, a: T| {
                if w.len().abs_diff(start.len()) <= remaining {
                    let e = next.entry(w).or_insert_with(T::zero);
                    *e = e.clone() + a;
                }
            };
            for (w, a) in &amps {
                if !w.is_empty() {
                    push(w[1..].to_vec(), a.clone());
                }
                for y in creatable(spec.flavor, spec.n, w) {
                    let vy = &v[y.0][y.1];
                    if vy.is_zero() {
                        continue;
                    }
                    if w.len() + 1 > spec.max_len {
                        return Err(FockError::Overflow {
                            len: w.len() + 1,
                            max: spec.max_len,
                        });
                    }
                    let mut nw = Vec::with_capacity(w.len() + 1);
                    nw.push(y);
                    nw.extend_from_slice(w);
                    push(nw, a.clone() * vy.clone());
                }
            }
            next.retain(|_, a| !a.is_zero());
            amps = next;
        }
        total = total + amps.get(start).cloned().unwrap_or_else(T::zero);
    }
    Ok(total / T::from_i64(starts.len() as i64))
}

/// Letter classes for the collapsed engine: index `c` is the diagonal class of
/// block `c`; `r + a·r + b` is the off-diagonal class `(a, b)`.
struct Classes {
    r: usize,
}

impl Classes {
    fn diag(&self, c: usize) -> usize {
        c
    }
    fn off(&self, a: usize, b: usize) -> usize {
        self.r + a * self.r + b
    }
    fn count(&self) -> usize {
        self.r + self.r * self.r
    }
    fn blocks(&self, x: usize) -> (usize, usize) {
        if x < self.r {
            (x, x)
        } else {
            ((x - self.r) / self.r, (x - self.r) % self.r)
        }
    }
}

/// Moments `0..=max_m` of `S(n)` for a square array, by excursion generating
/// functions over letter classes. Exact for every `n`.
pub fn pseudomatrix_moments_collapsed<T: Scalar>(
    spec: &PseudomatrixSpec<T>,
    max_m: usize,
    state: StateKind,
) -> Result<Vec<T>, FockError> {
    if spec.shape != Shape::Square {
        return Err(FockError::ShapeUnsupported);
    }
    let sizes = interval_sizes(&spec.model, spec.n)?;
    let r = spec.model.r();
    let cls = Classes { r };
    let nn = T::from_i64(spec.n as i64);
    let u = spec.model.u();
    let weight = |x: usize| {
        let (a, b) = cls.blocks(x);
        u.get(a, b).clone() / nn.clone()
    };
    let size = |c: usize| T::from_i64(sizes[c] as i64);

    // transitions[x]: (class, count·v) for letters creatable above a top letter of class x.
    let mut transitions: Vec<Vec<(usize, T)>> = vec![Vec::new(); cls.count()];
    for (x, list) in transitions.iter_mut().enumerate() {
        let (a, b) = cls.blocks(x);
        let is_diag = x < r;
        list.push((x, weight(x)));
        if !is_diag && spec.flavor == Flavor::Standard {
            list.push((cls.diag(a), weight(cls.diag(a))));
        }
        for c in 0..r {
            let count = if c == a { size(c) - T::one() } else { size(c) };
            let y = cls.off(c, a);
            list.push((y, count * weight(y)));
        }
        let _ = b;
    }
    let omega: Vec<(usize, T)> = (0..r).map(|c| (cls.diag(c), size(c) * weight(cls.diag(c)))).collect();

    let half = max_m / 2;
    let len = half + 1;
    let excursion = |list: &[(usize, T)], p: &[Vec<T>]| {
        let mut s = vec![T::zero(); len];
        for (y, w) in list {
            for k in 0..len {
                s[k] = s[k].clone() + w.clone() * p[*y][k].clone();
            }
        }
        let shifted = poly::shift(&s, len);
        let denom: Vec<T> = (0..len)
            .map(|k| if k == 0 { T::one() } else { -shifted[k].clone() })
            .collect();
        poly::inv(&denom, len)
    };
    let mut p: Vec<Vec<T>> = vec![vec![T::one(); 1]; cls.count()];
    for x in p.iter_mut() {
        x.resize(len, T::zero());
    }
    for _ in 0..len {
        p = transitions.iter().map(|list| excursion(list, &p)).collect();
    }
    let p_omega = excursion(&omega, &p);

    let from_diag = |c: usize| {
        // P_x + s v_x P_x P_Ω P_x: either never reach Ω, or split at the first and last visit.
        let x = cls.diag(c);
        let px = &p[x];
        let dip = poly::shift(
            &poly::mul(&poly::mul(&poly::mul(px, &p_omega, len), px, len), &[weight(x)], len),
            len,
        );
        px.iter().zip(dip).map(|(a, b)| a.clone() + b).collect::<Vec<T>>()
    };
    let series = match state {
        StateKind::Vacuum => p_omega.clone(),
        StateKind::Condition(j) => {
            let labels = block_labels(&spec.model, spec.n)?;
            let c = *labels.get(j).ok_or(FockError::BadIndex { index: j, n: spec.n })?;
            from_diag(c)
        }
        StateKind::Block(c) if c < r => from_diag(c),
        StateKind::Block(c) => return Err(FockError::BadIndex { index: c, n: r }),
        StateKind::Trace => {
            let mut acc = vec![T::zero(); len];
            for c in 0..r {
                let w = size(c) / nn.clone();
                for (a, x) in acc.iter_mut().zip(from_diag(c)) {
                    *a = a.clone() + w.clone() * x;
                }
            }
            acc
        }
    };
    Ok((0..=max_m)
        .map(|m| if m % 2 == 0 { series[m / 2].clone() } else { T::zero() })
        .collect())
}

/// Least common multiple of the denominators of `d`, so that every multiple of it splits exactly.
pub fn exact_size_step<T: Scalar>(model: &BlockModel<T>) -> Option<usize> {
    let mut step = 1usize;
    'search: while step <= 1_000_000 {
        let n = T::from_i64(step as i64);
        for d in model.d() {
            let x = d.clone() * n.clone();
            if !x.approx_eq(&T::from_i64(x.floor_i64())) {
                step += 1;
                continue 'search;
            }
        }
        return Some(step);
    }
    None
}

/// `lim_n` of the moment of order `m`, by exact polynomial extrapolation in `1/n`.
///
/// When every block size is exactly `d_c·n`, the moment is a polynomial in
/// `1/n` of degree at most `m/2`; `m/2 + 2` sample sizes determine it with one
/// spare point, and its value at `1/n = 0` is the limit.
pub fn extrapolate_limit<T: Scalar>(
    model: &BlockModel<T>,
    flavor: Flavor,
    m: usize,
    state: StateKind,
) -> Result<T, FockError> {
    let step = exact_size_step(model).ok_or(FockError::TooFewSizes(m / 2 + 2))?;
    let base = step * model.r().div_ceil(step).max(1);
    let points = m / 2 + 2;
    let sizes: Vec<usize> = (1..=points).map(|k| base * k).collect();
    let mut samples = Vec::with_capacity(points);
    for &n in &sizes {
        let spec = PseudomatrixSpec::new(n, model.clone(), flavor)?;
        samples.push((
            T::one() / T::from_i64(n as i64),
            pseudomatrix_moments_collapsed(&spec, m, state)?[m].clone(),
        ));
    }
    Ok(lagrange_at_zero(&samples))
}

/// Value at 0 of the interpolating polynomial through `(x_i, y_i)`.
pub fn lagrange_at_zero<T: Scalar>(points: &[(T, T)]) -> T {
    let mut total = T::zero();
    for (i, (xi, yi)) in points.iter().enumerate() {
        let mut term = yi.clone();
        for (k, (xk, _)) in points.iter().enumerate() {
            if k != i {
                term = term * (T::zero() - xk.clone()) / (xi.clone() - xk.clone());
            }
        }
        total = total + term;
    }
    total
}

/// Limit moments of `μ` (trace), `μ₀` (vacuum) and each `μ_j` by extrapolating the Fock moments.
pub fn fock_route<T: Scalar>(
    model: &BlockModel<T>,
    flavor: Flavor,
    order: usize,
) -> Result<RouteMoments<T>, FockError> {
    let series = |state: StateKind| -> Result<MomentSeries<T>, FockError> {
        let coeffs = (0..=order)
            .map(|m| {
                if m % 2 == 1 {
                    Ok(T::zero())
                } else {
                    extrapolate_limit(model, flavor, m, state)
                }
            })
            .collect::<Result<Vec<T>, FockError>>()?;
        Ok(MomentSeries::new(coeffs).expect("m_0 = 1"))
    };
    let muj = (0..model.r())
        .map(|c| series(StateKind::Block(c)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RouteMoments {
        route: Route::Fock,
        mu: series(StateKind::Trace)?,
        mu0: series(StateKind::Vacuum)?,
        muj: Some(muj),
    })
}

/// [`cross_check`] with the Fock route added.
pub fn cross_check_with_fock<T: Scalar>(
    model: &BlockModel<T>,
    flavor: Flavor,
    order: usize,
) -> Result<CrossCheckReport<T>, FockError> {
    let mut report = cross_check(model, order)?;
    report.routes.push(fock_route(model, flavor, order)?);
    report.discrepancies = pairwise(&report.routes);
    Ok(report)
}

/// One row of a convergence sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub n: usize,
    pub order: usize,
    pub moment: T,
    pub limit: T,
    pub error: T,
}

/// Moments at each size against the combinatorial limit (`Trace` and `Vacuum` states).
pub fn convergence_table<T: Scalar>(
    model: &BlockModel<T>,
    flavor: Flavor,
    sizes: &[usize],
    orders: &[usize],
    state: StateKind,
) -> Result<Vec<ConvergenceRow<T>>, FockError> {
    let max_m = orders.iter().copied().max().unwrap_or(0);
    let limits = match state {
        StateKind::Vacuum => standard_moments_combinatorial(model, max_m)?,
        _ => tracial_moments_combinatorial(model, max_m)?,
    };
    let mut rows = Vec::new();
    for &n in sizes {
        let spec = PseudomatrixSpec::new(n, model.clone(), flavor)?;
        let moments = pseudomatrix_moments_collapsed(&spec, max_m, state)?;
        for &m in orders {
            let limit = limits.moment(m).clone();
            let error = (moments[m].clone() - limit.clone()).abs_val();
            rows.push(ConvergenceRow {
                n,
                order: m,
                moment: moments[m].clone(),
                limit,
                error,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log error` against `log n`, negated.
pub fn decay_exponent(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}

/// `c_create·ℓ + c_annihilate·ℓ* + c_unit·1` for one letter.
#[derive(Clone, Debug, PartialEq)]
pub struct OpExpr<T> {
    pub create: T,
    pub annihilate: T,
    pub unit: T,
}

impl<T: Scalar> OpExpr<T> {
    /// `ℓ + ℓ* + c·1`: mean `c` and variance 1 in the state where the letter is admissible.
    pub fn shifted_gaussian(c: T) -> Self {
        Self {
            create: T::one(),
            annihilate: T::one(),
            unit: c,
        }
    }

    pub fn apply(&self, letter: Letter, state: &FockState<T>) -> Result<FockState<T>, FockError> {
        let (i, j) = letter;
        let mut out = state.empty_like();
        if !self.create.is_zero() {
            out = out.add(&create(i, j, state)?.scale(&self.create));
        }
        if !self.annihilate.is_zero() {
            out = out.add(&annihilate(i, j, state)?.scale(&self.annihilate));
        }
        if !self.unit.is_zero() {
            out = out.add(&unit_project(i, j, state)?.scale(&self.unit));
        }
        Ok(out)
    }
}

/// `⟨x_1 ⋯ x_k Ξ, Ξ⟩` with the rightmost factor applied first.
pub fn mixed_moment<T: Scalar>(
    n: usize,
    flavor: Flavor,
    factors: &[(OpExpr<T>, Letter)],
    state: StateKind,
    max_len: usize,
) -> Result<T, FockError> {
    let starts = starting_words::<T>(state, None, n)?;
    let mut total = T::zero();
    for start in &starts {
        let xi = FockState::basis(n, flavor, max_len, &FockWord::new(start.clone(), flavor)?)?;
        let mut s = xi.clone();
        for (op, letter) in factors.iter().rev() {
            s = op.apply(*letter, &s)?;
        }
        total = total + s.inner(&xi);
    }
    Ok(total / T::from_i64(starts.len() as i64))
}

/// Outcome of one operator identity on the spanning set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationCheck {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl RelationCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationsReport {
    pub n: usize,
    pub flavor: Flavor,
    pub max_len: usize,
    pub checks: Vec<RelationCheck>,
}

impl RelationsReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }
}

/// Operator identities checked on every basis word short enough to take two creations.
///
/// In the strong flavor `1_{jj} ℓ_{jk} = ℓ_{jk}` with `k ≠ j` is left out: the
/// word `(j,k)…` cannot take a further `(j,j)` without leaving the strong space.
pub fn relations_check(n: usize, flavor: Flavor, max_len: usize) -> Result<RelationsReport, FockError> {
    type Op = fn(usize, usize, &FockState<Rat>) -> Result<FockState<Rat>, FockError>;
    type Rat = crate::numeric::Rational;
    let words = enumerate_words(n, flavor, max_len.saturating_sub(2));
    let letters: Vec<Letter> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let basis = |w: &Vec<Letter>| -> FockState<Rat> {
        FockState::basis(n, flavor, max_len, &FockWord { letters: w.clone() }).expect("enumerated word")
    };
    let mut one = RelationCheck {
        name: "l*_ij l_ij = 1_ij".into(),
        cases: 0,
        failures: vec![],
    };
    let mut vanish: Vec<RelationCheck> = ["l*_ij l_kl = 0", "l_ij l_kl = 0", "1_ij l_kl = 0"]
        .iter()
        .map(|s| RelationCheck {
            name: s.to_string(),
            cases: 0,
            failures: vec![],
        })
        .collect();
    let mut absorb = RelationCheck {
        name: "1_ij l_jk = l_jk".into(),
        cases: 0,
        failures: vec![],
    };
    let ops: [Op; 3] = [annihilate, create, unit_project];
    for w in &words {
        let x = basis(w);
        for &(i, j) in &letters {
            one.cases += 1;
            let lhs = annihilate(i, j, &create(i, j, &x)?)?;
            if lhs != unit_project(i, j, &x)? {
                one.failures.push(format!("({i},{j}) on {w:?}"));
            }
            for &(k, l) in &letters {
                let created = create(k, l, &x)?;
                if (i, j) != (k, l) && j != k {
                    for (check, op) in vanish.iter_mut().zip(ops) {
                        check.cases += 1;
                        if !op(i, j, &created)?.is_zero() {
                            check.failures.push(format!("({i},{j}),({k},{l}) on {w:?}"));
                        }
                    }
                }
                if k == j {
                    if flavor == Flavor::Strong && i == j && l != j {
                        continue;
                    }
                    absorb.cases += 1;
                    if unit_project(i, j, &created)? != created {
                        absorb.failures.push(format!("({i},{j}),({j},{l}) on {w:?}"));
                    }
                }
            }
        }
    }
    let mut checks = vec![one];
    checks.extend(vanish);
    checks.push(absorb);
    Ok(RelationsReport {
        n,
        flavor,
        max_len,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpart::catalan;
    use crate::numeric::Rational;
    use crate::trace::SquareMatrix;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    fn model2() -> BlockModel<Rational> {
        let u = SquareMatrix::from_rows(vec![vec![q(3, 2), q(2, 5)], vec![q(7, 3), q(1, 4)]]).unwrap();
        BlockModel::new(u, vec![q(1, 4), q(3, 4)]).unwrap()
    }

    #[test]
    fn word_admissibility() {
        use Flavor::*;
        assert!(is_admissible_word(&[], Standard));
        assert!(is_admissible_word(&[(0, 0)], Strong));
        assert!(!is_admissible_word(&[(0, 1)], Standard));
        assert!(is_admissible_word(&[(0, 1), (0, 1), (1, 1)], Strong));
        assert!(is_admissible_word(&[(1, 1), (1, 0), (0, 0)], Standard));
        assert!(!is_admissible_word(&[(1, 1), (1, 0), (0, 0)], Strong));
        assert!(is_admissible_word(&[(0, 1), (1, 0), (0, 0)], Strong));
        assert!(!is_admissible_word(&[(0, 1), (0, 0)], Standard));
        assert!(is_admissible_word(&[(1, 1), (1, 1)], Strong));
        // Words of the strong space over two indices with three letters.
        let three: Vec<_> = enumerate_words(2, Strong, 3)
            .into_iter()
            .filter(|w| w.len() == 3)
            .collect();
        assert_eq!(three.len(), 8);
    }

    #[test]
    fn creation_from_vacuum() {
        let omega = FockState::<Rational>::vacuum(2, Flavor::Standard, 4);
        let s = create(0, 0, &omega).unwrap();
        assert_eq!(s.amplitude(&[(0, 0)]), q(1, 1));
        assert!(create(0, 1, &omega).unwrap().is_zero());
        assert_eq!(unit_project(1, 1, &omega).unwrap(), omega);
        assert!(unit_project(0, 1, &omega).unwrap().is_zero());
        assert!(matches!(create(2, 0, &omega), Err(FockError::BadIndex { .. })));
    }

    #[test]
    fn overflow_is_reported() {
        let mut s = FockState::<Rational>::vacuum(1, Flavor::Standard, 2);
        s = create(0, 0, &s).unwrap();
        s = create(0, 0, &s).unwrap();
        assert_eq!(create(0, 0, &s), Err(FockError::Overflow { len: 3, max: 2 }));
    }

    #[test]
    fn annihilation_inverts_creation() {
        for flavor in [Flavor::Standard, Flavor::Strong] {
            for w in enumerate_words(2, flavor, 3) {
                let x = FockState::<Rational>::basis(2, flavor, 5, &FockWord::new(w.clone(), flavor).unwrap()).unwrap();
                for i in 0..2 {
                    for j in 0..2 {
                        let c = create(i, j, &x).unwrap();
                        if !c.is_zero() {
                            assert_eq!(annihilate(i, j, &c).unwrap(), x);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn relations_hold() {
        for flavor in [Flavor::Standard, Flavor::Strong] {
            let report = relations_check(2, flavor, 6).unwrap();
            for c in &report.checks {
                assert!(
                    c.passed(),
                    "{flavor:?} {}: {:?}",
                    c.name,
                    &c.failures[..c.failures.len().min(3)]
                );
                assert!(c.cases > 0);
            }
        }
        // The strong flavor really does break 1_jj l_jk = l_jk.
        let omega = FockState::<Rational>::vacuum(2, Flavor::Strong, 4);
        let w = create(0, 1, &create(1, 1, &omega).unwrap()).unwrap();
        assert!(unit_project(0, 0, &w).unwrap().is_zero());
    }

    #[test]
    fn single_block_vacuum_is_catalan() {
        let v = q(3, 1);
        let model = BlockModel::scalar(v.clone());
        let spec = PseudomatrixSpec::new(1, model, Flavor::Standard).unwrap();
        for k in 0..=4usize {
            let m = pseudomatrix_moment(&spec, 2 * k, StateKind::Vacuum).unwrap();
            assert_eq!(m, q(catalan(k) as i64, 1) * v.pow_u32(k as u32));
            assert_eq!(
                pseudomatrix_moment(&spec, 2 * k + 1, StateKind::Trace).unwrap(),
                q(0, 1)
            );
        }
    }

    #[test]
    fn engines_agree() {
        let model = model2();
        for flavor in [Flavor::Standard, Flavor::Strong] {
            for n in [4, 5, 7] {
                let spec = PseudomatrixSpec::new(n, model.clone(), flavor).unwrap();
                let states = [
                    StateKind::Vacuum,
                    StateKind::Trace,
                    StateKind::Condition(0),
                    StateKind::Condition(n - 1),
                ];
                for state in states {
                    let collapsed = pseudomatrix_moments_collapsed(&spec, 6, state).unwrap();
                    for (m, expected) in collapsed.iter().enumerate() {
                        assert_eq!(
                            &pseudomatrix_moment(&spec, m, state).unwrap(),
                            expected,
                            "{flavor:?} n={n} {state:?} m={m}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn second_moment_by_hand() {
        // ψ(S²) = Σ_c d_c (Σ_a d_a u_ac) + (Σ_c d_c u_cc)/n with exact block sizes.
        let model = model2();
        let u = model.u().clone();
        let d = model.d().to_vec();
        for n in [4, 8] {
            let spec = PseudomatrixSpec::new(n, model.clone(), Flavor::Standard).unwrap();
            let got = pseudomatrix_moment(&spec, 2, StateKind::Trace).unwrap();
            let mut expected = q(0, 1);
            for c in 0..2 {
                for a in 0..2 {
                    expected += d[c].clone() * d[a].clone() * u.get(a, c).clone();
                }
                expected += d[c].clone() * u.get(c, c).clone() / q(n as i64, 1);
            }
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn extrapolation_recovers_limits() {
        let model = model2();
        let tr = tracial_moments_combinatorial(&model, 6).unwrap();
        let st = standard_moments_combinatorial(&model, 6).unwrap();
        for flavor in [Flavor::Standard, Flavor::Strong] {
            for m in [2, 4, 6] {
                assert_eq!(
                    &extrapolate_limit(&model, flavor, m, StateKind::Trace).unwrap(),
                    tr.moment(m),
                    "{flavor:?} {m}"
                );
                assert_eq!(
                    &extrapolate_limit(&model, flavor, m, StateKind::Vacuum).unwrap(),
                    st.moment(m),
                    "{flavor:?} {m}"
                );
            }
        }
    }

    #[test]
    fn triangular_shape_uses_direct_engine() {
        let spec = PseudomatrixSpec::new(4, model2(), Flavor::Standard)
            .unwrap()
            .with_shape(Shape::LowerTriangular);
        assert_eq!(
            pseudomatrix_moments_collapsed(&spec, 4, StateKind::Vacuum),
            Err(FockError::ShapeUnsupported)
        );
        let m2 = pseudomatrix_moment(&spec, 2, StateKind::Vacuum).unwrap();
        assert_eq!(
            m2,
            pseudomatrix_moment(
                &PseudomatrixSpec::new(4, model2(), Flavor::Standard).unwrap(),
                2,
                StateKind::Vacuum
            )
            .unwrap()
        );
    }

    #[test]
    fn example_mixed_moments() {
        let (ca, cb, ca2, cb2) = (q(2, 1), q(-1, 3), q(5, 2), q(3, 7));
        let a = (OpExpr::shifted_gaussian(ca.clone()), (0, 0));
        let b = (OpExpr::shifted_gaussian(cb.clone()), (1, 1));
        let a2 = (OpExpr::shifted_gaussian(ca2.clone()), (0, 1));
        let b2 = (OpExpr::shifted_gaussian(cb2.clone()), (1, 0));
        let phi = |f: &[(OpExpr<Rational>, Letter)], s| mixed_moment(2, Flavor::Strong, f, s, 6).unwrap();
        let var = q(1, 1);
        assert_eq!(phi(std::slice::from_ref(&a), StateKind::Vacuum), ca);
        assert_eq!(
            phi(&[a.clone(), a.clone()], StateKind::Vacuum),
            var.clone() + ca.clone() * ca.clone()
        );
        assert_eq!(phi(std::slice::from_ref(&b2), StateKind::Condition(0)), cb2);
        assert_eq!(phi(std::slice::from_ref(&a2), StateKind::Condition(1)), ca2);
        let abab = phi(&[a.clone(), b.clone(), a.clone(), b.clone()], StateKind::Vacuum);
        assert_eq!(abab, ca.clone() * ca.clone() * cb.clone() * cb.clone());
        let ab2ab = phi(&[a.clone(), b2.clone(), a.clone(), b.clone()], StateKind::Vacuum);
        assert_eq!(ab2ab, cb.clone() * cb2.clone() * var.clone());
        let aba2b = phi(&[a.clone(), b.clone(), a2.clone(), b.clone()], StateKind::Vacuum);
        assert_eq!(aba2b, ca.clone() * ca2.clone() * var);
    }

    #[test]
    fn decay_exponent_of_power_law() {
        let pts: Vec<(usize, f64)> = [4usize, 8, 16, 32].iter().map(|&n| (n, 3.0 / n as f64)).collect();
        assert!((decay_exponent(&pts) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lagrange_recovers_polynomial() {
        let f = |x: Rational| q(7, 1) - q(2, 1) * x.clone() + q(5, 3) * x.clone() * x;
        let pts: Vec<_> = [1, 2, 3].iter().map(|&k| (q(1, k), f(q(1, k)))).collect();
        assert_eq!(lagrange_at_zero(&pts), q(7, 1));
    }
}
