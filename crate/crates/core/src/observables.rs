//! Finite-outcome observables (POVMs) and classical post-processing.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::operators::{bloch_operator, frobenius_distance, Operator, DEFAULT_TOL};
use crate::random::{self, numbered_labels};

/// Eigenvalues at or below this are treated as outside an effect's support.
pub const SUPPORT_THRESHOLD: f64 = 1e-9;

/// A finite-outcome observable: one positive effect per outcome label, summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    dim: usize,
    labels: Vec<String>,
    effects: Vec<Operator>,
}

impl Observable {
    /// Validates positivity and normalization at [`DEFAULT_TOL`].
    pub fn new(dim: usize, labels: Vec<String>, effects: Vec<Operator>) -> Result<Self> {
        Self::with_tol(dim, labels, effects, DEFAULT_TOL)
    }

    pub fn with_tol(dim: usize, labels: Vec<String>, effects: Vec<Operator>, tol: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("observable dimension must be positive".into()));
        }
        if effects.is_empty() {
            return Err(Error::Argument("an observable needs at least one outcome".into()));
        }
        if labels.len() != effects.len() {
            return Err(Error::Alignment(format!(
                "{} labels for {} effects",
                labels.len(),
                effects.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Alignment(format!("duplicate outcome label `{l}`")));
            }
        }
        for (label, e) in labels.iter().zip(&effects) {
            if !e.is_square() || e.dim_in() != dim {
                return Err(Error::Shape(format!(
                    "effect `{label}` is {}x{}, expected {dim}x{dim}",
                    e.dim_out(),
                    e.dim_in()
                )));
            }
            if !e.is_hermitian(tol) {
                return Err(Error::Positivity(format!("effect `{label}` is not Hermitian")));
            }
            let lambda_min = e.eigh().values[0];
            if lambda_min < -tol {
                return Err(Error::Positivity(format!(
                    "effect `{label}` has eigenvalue {lambda_min}"
                )));
            }
        }
        let total: Operator = effects.iter().cloned().sum();
        let residual = frobenius_distance(&total, &Operator::identity(dim))?;
        if residual > tol * (dim as f64).sqrt() {
            return Err(Error::Normalization(format!(
                "effects sum to the identity only within {residual:.3e}"
            )));
        }
        Ok(Observable { dim, labels, effects })
    }

    /// Outcomes labelled `1..=n`.
    pub fn numbered(dim: usize, effects: Vec<Operator>) -> Result<Self> {
        Self::new(dim, numbered_labels(effects.len()), effects)
    }

    /// The single-outcome observable `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Observable {
            dim,
            labels: vec!["1".into()],
            effects: vec![Operator::identity(dim)],
        }
    }

    /// Construction from effects already known to be valid.
    pub(crate) fn from_parts_unchecked(dim: usize, labels: Vec<String>, effects: Vec<Operator>) -> Self {
        Observable { dim, labels, effects }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn effects(&self) -> &[Operator] {
        &self.effects
    }

    pub fn effect(&self, label: &str) -> Option<&Operator> {
        self.labels.iter().position(|l| l == label).map(|i| &self.effects[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Operator)> {
        self.labels.iter().map(String::as_str).zip(&self.effects)
    }

    /// Number of outcomes with a nonzero effect.
    pub fn nonzero_outcomes(&self) -> usize {
        self.effects
            .iter()
            .filter(|e| e.norm() > SUPPORT_THRESHOLD)
            .count()
    }

    /// Outcome probabilities `tr[E(x) ρ]`.
    pub fn probabilities(&self, rho: &Operator) -> Vec<f64> {
        self.effects.iter().map(|e| e.trace_product(rho).re).collect()
    }

    /// `max_x ‖E(x)² − E(x)‖_F`.
    pub fn sharpness_residual(&self) -> f64 {
        self.effects
            .iter()
            .map(Operator::projection_residual)
            .fold(0.0, f64::max)
    }

    /// True iff every effect is a projection.
    pub fn is_sharp(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| e.is_projection(tol))
    }

    /// `max_{x,y} ‖E(x)E(y) − δ_xy E(x)‖_F`, the residual of the product criterion.
    pub fn product_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for (x, ex) in self.effects.iter().enumerate() {
            for (y, ey) in self.effects.iter().enumerate() {
                let prod = ex * ey;
                let r = if x == y { (&prod - ex).norm() } else { prod.norm() };
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Sharpness decided by `E(x)E(y) = δ_xy E(x)` instead of idempotence.
    pub fn satisfies_product_criterion(&self, tol: f64) -> bool {
        self.effects.iter().enumerate().all(|(x, ex)| {
            self.effects.iter().enumerate().all(|(y, ey)| {
                let prod = ex * ey;
                let scale = ex.norm().max(ey.norm());
                let r = if x == y { (&prod - ex).norm() } else { prod.norm() };
                r <= tol * scale
            })
        })
    }

    /// Extremality in the convex set of observables with these outcomes.
    ///
    /// `E` is extreme iff the only Hermitian family `{D_x}` with
    /// `supp D_x ⊆ supp E(x)` and `Σ_x D_x = 0` is zero. Writing
    /// `D_x = V_x H_x V_x*` with `V_x` an orthonormal basis of the support,
    /// this is injectivity of the real-linear map `(H_x) ↦ Σ V_x H_x V_x*`.
    pub fn is_extreme(&self, tol: f64) -> bool {
        let d = self.dim;
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for e in &self.effects {
            let basis = e.support_basis(SUPPORT_THRESHOLD);
            let v = crate::operators::from_columns(&basis);
            for h in hermitian_basis(basis.len()) {
                columns.push((&(&v * &h) * &v.adjoint()).realify());
            }
        }
        if columns.is_empty() {
            return true;
        }
        // the Hermitian d×d matrices form a d²-dimensional real space
        if columns.len() > d * d {
            return false;
        }
        let rows = 2 * d * d;
        let m = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
        numerical_rank(&m, tol) == columns.len()
    }

    /// Effect-wise convex combination `λE + (1 − λ)F`.
    pub fn mix(lambda: f64, e: &Observable, f: &Observable) -> Result<Observable> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Argument(format!("mixing weight {lambda} outside [0, 1]")));
        }
        e.check_aligned(f)?;
        let effects = e
            .effects
            .iter()
            .zip(&f.effects)
            .map(|(a, b)| &a.scale_real(lambda) + &b.scale_real(1.0 - lambda))
            .collect();
        Ok(Observable::from_parts_unchecked(e.dim, e.labels.clone(), effects))
    }

    /// Convex combination of several aligned observables.
    pub fn mixture(weights: &[f64], observables: &[Observable]) -> Result<Observable> {
        let first = observables
            .first()
            .ok_or_else(|| Error::Argument("empty mixture".into()))?;
        if weights.len() != observables.len() {
            return Err(Error::Argument("one weight per observable required".into()));
        }
        let mut effects = vec![Operator::zeros(first.dim, first.dim); first.len()];
        for (w, o) in weights.iter().zip(observables) {
            first.check_aligned(o)?;
            for (acc, e) in effects.iter_mut().zip(&o.effects) {
                *acc = &*acc + &e.scale_real(*w);
            }
        }
        Observable::new(first.dim, first.labels.clone(), effects)
    }

    /// Post-processing by a Markov kernel: `E'(y) = Σ_x k(x, y) E(x)`.
    pub fn post_process(&self, k: &StochasticKernel) -> Result<Observable> {
        if k.rows() != self.len() {
            return Err(Error::Shape(format!(
                "kernel has {} rows but the observable has {} outcomes",
                k.rows(),
                self.len()
            )));
        }
        let effects = (0..k.cols())
            .map(|y| {
                let mut acc = Operator::zeros(self.dim, self.dim);
                for (x, e) in self.effects.iter().enumerate() {
                    let w = k.weight(x, y);
                    if w != 0.0 {
                        acc = &acc + &e.scale_real(w);
                    }
                }
                acc
            })
            .collect();
        Ok(Observable::from_parts_unchecked(self.dim, k.labels.clone(), effects))
    }

    /// Largest effect distance `max_x ‖E(x) − F(x)‖_F`; labels must match exactly.
    pub fn distance(&self, other: &Observable) -> Result<f64> {
        self.check_aligned(other)?;
        self.positional_distance(other)
    }

    /// Effect distance matching outcomes by position, ignoring labels.
    pub fn positional_distance(&self, other: &Observable) -> Result<f64> {
        if self.dim != other.dim || self.len() != other.len() {
            return Err(Error::Shape(format!(
                "cannot compare a {}-outcome observable on C^{} with a {}-outcome observable on C^{}",
                self.len(),
                self.dim,
                other.len(),
                other.dim
            )));
        }
        self.effects
            .iter()
            .zip(&other.effects)
            .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(frobenius_distance(a, b)?)))
    }

    pub fn approx_eq(&self, other: &Observable, tol: f64) -> bool {
        self.distance(other).is_ok_and(|d| d <= tol)
    }

    /// Same effects under new labels.
    pub fn relabeled(&self, labels: Vec<String>) -> Result<Observable> {
        if labels.len() != self.len() {
            return Err(Error::Alignment(format!(
                "{} labels for {} effects",
                labels.len(),
                self.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Alignment(format!("duplicate outcome label `{l}`")));
            }
        }
        Ok(Observable {
            dim: self.dim,
            labels,
            effects: self.effects.clone(),
        })
    }

    /// Appends zero effects until there are `n` outcomes; new labels continue the numbering.
    pub fn padded(&self, n: usize) -> Observable {
        let mut out = self.clone();
        let mut next = self.len() + 1;
        while out.effects.len() < n {
            let mut label = next.to_string();
            while out.labels.contains(&label) {
                next += 1;
                label = next.to_string();
            }
            out.labels.push(label);
            out.effects.push(Operator::zeros(self.dim, self.dim));
            next += 1;
        }
        out
    }

    /// Conjugates every effect: `E(x) ↦ U* E(x) U`.
    pub fn conjugated(&self, u: &Operator) -> Result<Observable> {
        if !u.is_square() || u.dim_in() != self.dim {
            return Err(Error::Shape("conjugating operator has the wrong dimension".into()));
        }
        let ud = u.adjoint();
        let effects = self.effects.iter().map(|e| &(&ud * e) * u).collect();
        Ok(Observable::from_parts_unchecked(self.dim, self.labels.clone(), effects))
    }

    fn check_aligned(&self, other: &Observable) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!(
                "observables act on C^{} and C^{}",
                self.dim, other.dim
            )));
        }
        if self.labels != other.labels {
            return Err(Error::Alignment(format!(
                "{:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        Ok(())
    }
}

/// Basis of the real vector space of `r × r` Hermitian matrices.
fn hermitian_basis(r: usize) -> Vec<Operator> {
    use crate::operators::C64;
    let mut out = Vec::with_capacity(r * r);
    for a in 0..r {
        for b in a..r {
            if a == b {
                out.push(Operator::from_fn(r, r, |i, j| {
                    if i == a && j == a { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                }));
            } else {
                out.push(Operator::from_fn(r, r, |i, j| {
                    if (i, j) == (a, b) || (i, j) == (b, a) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
                }));
                out.push(Operator::from_fn(r, r, |i, j| {
                    if (i, j) == (a, b) {
                        C64::new(0.0, 1.0)
                    } else if (i, j) == (b, a) {
                        C64::new(0.0, -1.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }));
            }
        }
    }
    out
}

/// Count of singular values above `tol · σ_max`.
pub(crate) fn numerical_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * max).count()
}

/// A finite Markov kernel `k(x, y)`: row `x` is a probability distribution over targets `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticKernel {
    weights: DMatrix<f64>,
    labels: Vec<String>,
}

impl StochasticKernel {
    /// Rows are source outcomes; `labels` name the target outcomes.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = labels.len();
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Shape("kernel must have at least one row and column".into()));
        }
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::Shape(format!("every kernel row needs {n_cols} weights")));
        }
        for (x, row) in rows.iter().enumerate() {
            if row.iter().any(|w| !(-DEFAULT_TOL..=1.0 + DEFAULT_TOL).contains(w)) {
                return Err(Error::Argument(format!("kernel row {x} has a weight outside [0, 1]")));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > DEFAULT_TOL {
                return Err(Error::Normalization(format!("kernel row {x} sums to {total}")));
            }
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::Alignment(format!("duplicate kernel label `{l}`")));
            }
        }
        Ok(StochasticKernel {
            weights: DMatrix::from_fn(n_rows, n_cols, |i, j| rows[i][j]),
            labels,
        })
    }

    pub fn identity(labels: Vec<String>) -> Self {
        let n = labels.len();
        StochasticKernel {
            weights: DMatrix::identity(n, n),
            labels,
        }
    }

    /// Deterministic relabelling: source outcome `x` goes to target `map[x]`.
    pub fn deterministic(map: &[usize], labels: Vec<String>) -> Result<Self> {
        let rows = map
            .iter()
            .map(|&y| {
                if y >= labels.len() {
                    return Err(Error::Argument(format!("target index {y} out of range")));
                }
                let mut row = vec![0.0; labels.len()];
                row[y] = 1.0;
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows, labels)
    }

    pub fn rows(&self) -> usize {
        self.weights.nrows()
    }

    pub fn cols(&self) -> usize {
        self.weights.ncols()
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[(x, y)]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weight_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self.weights[(i, j)]).collect())
            .collect()
    }

    /// Kernel of applying `self` and then `next`: the matrix product `self · next`.
    pub fn then(&self, next: &StochasticKernel) -> Result<StochasticKernel> {
        if self.cols() != next.rows() {
            return Err(Error::Shape(format!(
                "cannot chain a kernel with {} targets into one with {} sources",
                self.cols(),
                next.rows()
            )));
        }
        Ok(StochasticKernel {
            weights: &self.weights * &next.weights,
            labels: next.labels.clone(),
        })
    }
}

/// Two-outcome sharp qubit observable `½(I ± n·σ)` with outcomes `+`, `-`.
pub fn spin_observable(n: [f64; 3]) -> Result<Observable> {
    let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (norm - 1.0).abs() > DEFAULT_TOL {
        return Err(Error::Normalization(format!("spin direction has norm {norm}")));
    }
    let id = Operator::identity(2);
    let ns = bloch_operator(n);
    Ok(Observable::from_parts_unchecked(
        2,
        vec!["+".into(), "-".into()],
        vec![(&id + &ns).scale_real(0.5), (&id - &ns).scale_real(0.5)],
    ))
}

/// Spin observable along coordinate axis `i ∈ {1, 2, 3}`.
pub fn axis_spin(i: usize) -> Observable {
    let mut n = [0.0; 3];
    n[i - 1] = 1.0;
    spin_observable(n).expect("coordinate axis is a unit vector")
}

/// Sharp observable with `n_outcomes` outcomes built from a column partition of a
/// Haar-random unitary. Deterministic per seed.
pub fn random_sharp_observable(dim: usize, n_outcomes: usize, seed: u64) -> Result<Observable> {
    let mut rng = random::rng(seed);
    random_sharp_observable_with(dim, n_outcomes, &mut rng)
}

pub fn random_sharp_observable_with(
    dim: usize,
    n_outcomes: usize,
    rng: &mut impl Rng,
) -> Result<Observable> {
    if n_outcomes == 0 || dim == 0 {
        return Err(Error::Argument("dimension and outcome count must be positive".into()));
    }
    if n_outcomes > dim {
        return Err(Error::Infeasible(format!(
            "a sharp observable on C^{dim} has at most {dim} nonzero outcomes, {n_outcomes} requested"
        )));
    }
    let u = random::haar_unitary(dim, rng);
    let mut assignment: Vec<usize> = (0..n_outcomes).collect();
    assignment.extend((n_outcomes..dim).map(|_| rng.random_range(0..n_outcomes)));
    let mut effects = vec![Operator::zeros(dim, dim); n_outcomes];
    for (col, &x) in assignment.iter().enumerate() {
        let v = crate::operators::StateVector::from_dvector_unchecked(u.matrix().column(col).into_owned());
        effects[x] = &effects[x] + &v.projector();
    }
    Ok(Observable::from_parts_unchecked(dim, numbered_labels(n_outcomes), effects))
}

/// Outcome of comparing `E` against a candidate Naimark dilation `(A, W)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaimarkCheck {
    pub holds: bool,
    /// `max_x ‖E(x) − W*A(x)W‖_F`.
    pub dilation_residual: f64,
    /// `max_x ‖[A(x), WW*]‖_F`; vanishes iff `E` is sharp.
    pub commutant_residual: f64,
}

/// Checks `E(x) = W* A(x) W` for all outcomes.
pub fn naimark_check(e: &Observable, a: &Observable, w: &Operator, tol: f64) -> Result<NaimarkCheck> {
    if w.dim_in() != e.dim() || w.dim_out() != a.dim() {
        return Err(Error::Shape(format!(
            "W is {}x{}, expected {}x{}",
            w.dim_out(),
            w.dim_in(),
            a.dim(),
            e.dim()
        )));
    }
    if !w.is_isometry(tol.max(DEFAULT_TOL)) {
        return Err(Error::Isometry("W*W differs from the identity".into()));
    }
    if e.labels() != a.labels() {
        return Err(Error::Alignment(format!("{:?} vs {:?}", e.labels(), a.labels())));
    }
    if !a.is_sharp(DEFAULT_TOL) {
        return Err(Error::Sharpness("the dilating observable must be sharp".into()));
    }
    let wd = w.adjoint();
    let range = w * &wd;
    let mut dilation_residual = 0.0f64;
    let mut commutant_residual = 0.0f64;
    for (ex, ax) in e.effects().iter().zip(a.effects()) {
        let compressed = &(&wd * ax) * w;
        dilation_residual = dilation_residual.max(frobenius_distance(ex, &compressed)?);
        commutant_residual = commutant_residual.max(ax.commutator(&range).norm());
    }
    Ok(NaimarkCheck {
        holds: dilation_residual <= tol,
        dilation_residual,
        commutant_residual,
    })
}
