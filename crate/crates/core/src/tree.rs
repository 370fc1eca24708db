//! Root-to-root walks on a rooted tree with a matricial edge weighting.
//!
//! Every edge carries a label `(i, j)` and the weight `b_{ij}` (the square of
//! the tree weight `a_{ij}`, since each edge of a closed walk is crossed
//! twice). The children of an edge labelled `(i, j)` are labelled `(k, i)`
//! for `k = 1..r`, so the subtree below an edge depends only on its row index.
//! The root edges are given explicitly.

use crate::numeric::Scalar;
use crate::trace::SquareMatrix;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("root edge ({0}, {1}) is out of range")]
    BadRootEdge(usize, usize),
    #[error("the weighting needs at least one root edge")]
    NoRootEdges,
    #[error("edge weights must be nonnegative")]
    NegativeWeight,
}

/// Squared edge weights plus the labels of the root edges.
#[derive(Clone, Debug, PartialEq)]
pub struct MatricialWeighting<T> {
    b: SquareMatrix<T>,
    roots: Vec<(usize, usize)>,
}

impl<T: Scalar> MatricialWeighting<T> {
    pub fn new(b: SquareMatrix<T>, roots: Vec<(usize, usize)>) -> Result<Self, TreeError> {
        if roots.is_empty() {
            return Err(TreeError::NoRootEdges);
        }
        if let Some(&(i, j)) = roots.iter().find(|(i, j)| *i >= b.dim() || *j >= b.dim()) {
            return Err(TreeError::BadRootEdge(i, j));
        }
        if b.rows().iter().flatten().any(|x| *x < T::zero()) {
            return Err(TreeError::NegativeWeight);
        }
        Ok(Self { b, roots })
    }

    /// Root edges on the diagonal, `(j, j)` for every `j`: the walks of `μ₀`.
    pub fn diagonal(b: SquareMatrix<T>) -> Result<Self, TreeError> {
        let r = b.dim();
        Self::new(b, (0..r).map(|j| (j, j)).collect())
    }

    /// Root edges down column `j` (0-based), `(i, j)` for every `i`: the walks of `μ_j`.
    ///
    /// For a 2×2 matrix `[[α, β], [γ, δ]]` column 0 gives `{α, γ}` and column 1 gives `{β, δ}`.
    pub fn column(b: SquareMatrix<T>, j: usize) -> Result<Self, TreeError> {
        let r = b.dim();
        Self::new(b, (0..r).map(|i| (i, j)).collect())
    }

    pub fn weights(&self) -> &SquareMatrix<T> {
        &self.b
    }

    pub fn roots(&self) -> &[(usize, usize)] {
        &self.roots
    }

    pub fn arity(&self) -> usize {
        self.b.dim()
    }
}

/// Sum of walk weights for every length `0..=max_len`; odd lengths are 0.
pub fn walk_moments<T: Scalar>(w: &MatricialWeighting<T>, max_len: usize) -> Vec<T> {
    let r = w.arity();
    let half = max_len / 2;
    // below[l][i]: closed walks of length 2l hanging off a vertex whose parent edge has row i.
    let mut below: Vec<Vec<T>> = vec![vec![T::one(); r]];
    for l in 1..=half {
        let row = (0..r)
            .map(|i| {
                let mut total = T::zero();
                for k in 0..r {
                    let bki = w.b.get(k, i);
                    if bki.is_zero() {
                        continue;
                    }
                    for first in 0..l {
                        total = total + bki.clone() * below[first][k].clone() * below[l - 1 - first][i].clone();
                    }
                }
                total
            })
            .collect();
        below.push(row);
    }
    let mut root: Vec<T> = vec![T::one()];
    for l in 1..=half {
        let mut total = T::zero();
        for &(i, j) in &w.roots {
            let bij = w.b.get(i, j);
            for first in 0..l {
                total = total + bij.clone() * below[first][i].clone() * root[l - 1 - first].clone();
            }
        }
        root.push(total);
    }
    (0..=max_len)
        .map(|len| if len % 2 == 0 { root[len / 2].clone() } else { T::zero() })
        .collect()
}

/// Weighted sum over root-to-root walks of the given length.
pub fn walk_moment<T: Scalar>(w: &MatricialWeighting<T>, length: usize) -> T {
    walk_moments(w, length)[length].clone()
}

/// A Dyck path with a label on each up-step and the product of their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct CatalanPath<T> {
    pub steps: Vec<i8>,
    pub labels: Vec<(usize, usize)>,
    pub weight: T,
}

/// All labelled Dyck paths of semilength `n`, i.e. the walks read as depth profiles.
///
/// An up-step at depth 0 takes a root label; any other up-step takes a label
/// `(k, i)` where `(i, _)` labels the up-step it sits on.
pub fn catalan_paths<T: Scalar>(w: &MatricialWeighting<T>, n: usize) -> Vec<CatalanPath<T>> {
    let mut out = Vec::new();
    for steps in dyck_paths(n) {
        label_paths(w, &steps, 0, &mut Vec::new(), &mut Vec::new(), T::one(), &mut out);
    }
    out
}

/// Total weight of [`catalan_paths`].
pub fn catalan_path_sum<T: Scalar>(w: &MatricialWeighting<T>, n: usize) -> T {
    catalan_paths(w, n).into_iter().fold(T::zero(), |acc, p| acc + p.weight)
}

fn dyck_paths(n: usize) -> Vec<Vec<i8>> {
    fn go(n: usize, ups: usize, downs: usize, cur: &mut Vec<i8>, out: &mut Vec<Vec<i8>>) {
        if ups == n && downs == n {
            out.push(cur.clone());
            return;
        }
        if ups < n {
            cur.push(1);
            go(n, ups + 1, downs, cur, out);
            cur.pop();
        }
        if downs < ups {
            cur.push(-1);
            go(n, ups, downs + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(n, 0, 0, &mut Vec::new(), &mut out);
    out
}

fn label_paths<T: Scalar>(
    w: &MatricialWeighting<T>,
    steps: &[i8],
    pos: usize,
    stack: &mut Vec<(usize, usize)>,
    labels: &mut Vec<(usize, usize)>,
    weight: T,
    out: &mut Vec<CatalanPath<T>>,
) {
    if pos == steps.len() {
        out.push(CatalanPath {
            steps: steps.to_vec(),
            labels: labels.clone(),
            weight,
        });
        return;
    }
    if steps[pos] < 0 {
        let top = stack.pop().expect("balanced path");
        label_paths(w, steps, pos + 1, stack, labels, weight, out);
        stack.push(top);
        return;
    }
    let choices: Vec<(usize, usize)> = match stack.last() {
        None => w.roots.clone(),
        Some(&(i, _)) => (0..w.arity()).map(|k| (k, i)).collect(),
    };
    for label in choices {
        let bw = w.b.get(label.0, label.1).clone();
        stack.push(label);
        labels.push(label);
        label_paths(w, steps, pos + 1, stack, labels, weight.clone() * bw, out);
        labels.pop();
        stack.pop();
    }
}
