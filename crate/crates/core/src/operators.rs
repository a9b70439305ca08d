//! Dense complex operator algebra on finite-dimensional Hilbert spaces.
//!
//! Composite spaces are always ordered system first, apparatus second
//! (`H ⊗ K`), so `I_H ⊗ Z(x)` is `tensor(&identity(dh), &z)`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default relative tolerance for operator predicates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest dimension a tensor product may produce.
pub const DIMENSION_CAP: usize = 4096;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// A linear map `C^dim_in → C^dim_out` stored as a dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Operator({}x{})", self.dim_out(), self.dim_in())?;
        if self.dim_out() * self.dim_in() <= 64 {
            write!(f, "{}", self.0)?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn zeros(dim_out: usize, dim_in: usize) -> Self {
        Operator(DMatrix::zeros(dim_out, dim_in))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    /// Builds an operator from row-major entries.
    pub fn from_row_major(dim_out: usize, dim_in: usize, entries: Vec<C64>) -> Result<Self> {
        if dim_out == 0 || dim_in == 0 {
            return Err(Error::Shape("operator dimensions must be positive".into()));
        }
        if entries.len() != dim_out * dim_in {
            return Err(Error::Shape(format!(
                "expected {} entries for a {dim_out}x{dim_in} operator, got {}",
                dim_out * dim_in,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Argument("operator entries must be finite".into()));
        }
        Ok(Operator(DMatrix::from_row_slice(dim_out, dim_in, &entries)))
    }

    /// Builds an operator from nested rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim_out = rows.len();
        let dim_in = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim_in) {
            return Err(Error::Shape("ragged matrix rows".into()));
        }
        Self::from_row_major(dim_out, dim_in, rows.concat())
    }

    /// Real-valued convenience constructor, row-major.
    pub fn from_real(dim_out: usize, dim_in: usize, entries: &[f64]) -> Result<Self> {
        Self::from_row_major(
            dim_out,
            dim_in,
            entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        )
    }

    pub fn from_fn(dim_out: usize, dim_in: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Operator(DMatrix::from_fn(dim_out, dim_in, f))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let d = entries.len();
        Self::from_fn(d, d, |i, j| if i == j { C64::new(entries[i], 0.0) } else { ZERO })
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        Operator(m)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn dim_out(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim_in(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.dim_out() == self.dim_in()
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim_out())
            .map(|i| (0..self.dim_in()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }

    pub fn adjoint(&self) -> Self {
        Operator(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, c: C64) -> Self {
        Operator(&self.0 * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    /// `self * other` with a shape check.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        if self.dim_in() != other.dim_out() {
            return Err(Error::Shape(format!(
                "cannot compose {}x{} with {}x{}",
                self.dim_out(),
                self.dim_in(),
                other.dim_out(),
                other.dim_in()
            )));
        }
        Ok(self * other)
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &StateVector) -> DVector<C64> {
        &self.0 * &v.0
    }

    /// `|ket⟩⟨bra|`.
    pub fn outer(ket: &StateVector, bra: &StateVector) -> Self {
        Operator(&ket.0 * bra.0.adjoint())
    }

    /// Rank-one projector `P[v] = |v⟩⟨v|`.
    pub fn projector(v: &StateVector) -> Self {
        Self::outer(v, v)
    }

    /// `tr(self · other)`.
    pub fn trace_product(&self, other: &Operator) -> C64 {
        (&self.0 * &other.0).trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && (&self.0 - self.0.adjoint()).norm() <= tol * self.norm()
    }

    pub fn is_positive(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        let lambda_min = self.eigh().values.first().copied().unwrap_or(0.0);
        lambda_min >= -tol * self.norm().max(1.0)
    }

    pub fn is_projection(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.projection_residual() <= tol * self.norm()
    }

    /// `‖A² − A‖_F`.
    pub fn projection_residual(&self) -> f64 {
        (&self.0 * &self.0 - &self.0).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let d = self.dim_in();
        let id = DMatrix::<C64>::identity(d, d);
        let scale = tol * (d as f64).sqrt();
        (self.0.adjoint() * &self.0 - &id).norm() <= scale
            && (&self.0 * self.0.adjoint() - &id).norm() <= scale
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        let d = self.dim_in();
        let id = DMatrix::<C64>::identity(d, d);
        self.dim_out() >= d && (self.0.adjoint() * &self.0 - id).norm() <= tol * (d as f64).sqrt()
    }

    /// Spectral decomposition of the Hermitian part, eigenvalues ascending.
    pub fn eigh(&self) -> HermitianEigen {
        let h = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = order
            .iter()
            .map(|&i| StateVector(eig.eigenvectors.column(i).into_owned()))
            .collect();
        HermitianEigen { values, vectors }
    }

    /// Orthonormal eigenvectors with eigenvalue above `threshold`.
    pub fn support_basis(&self, threshold: f64) -> Vec<StateVector> {
        let eig = self.eigh();
        eig.values
            .into_iter()
            .zip(eig.vectors)
            .filter(|(v, _)| *v > threshold)
            .map(|(_, vec)| vec)
            .collect()
    }

    /// Row-stacked real and imaginary parts, used to assemble real linear systems.
    pub(crate) fn realify(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.0.len());
        for z in self.0.iter() {
            out.push(z.re);
            out.push(z.im);
        }
        out
    }
}

/// Eigenpairs of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

impl std::iter::Sum for Operator {
    fn sum<It: Iterator<Item = Operator>>(mut iter: It) -> Operator {
        let first = iter.next().expect("sum of an empty operator sequence");
        iter.fold(first, |acc, x| Operator(acc.0 + x.0))
    }
}

/// A unit vector in `C^dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// Accepts amplitudes whose Euclidean norm is 1 within [`DEFAULT_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Shape("state vector must have positive dimension".into()));
        }
        let v = DVector::from_vec(amplitudes);
        let n = v.norm();
        if !n.is_finite() || (n - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::Normalization(format!("state vector has norm {n}")));
        }
        Ok(StateVector(v))
    }

    /// Rescales nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let n = v.norm();
        if v.is_empty() || !n.is_finite() || n < 1e-300 {
            return Err(Error::Normalization("cannot normalize a zero vector".into()));
        }
        Ok(StateVector(v / C64::new(n, 0.0)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Computational basis vector `e_index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index {index} out of range for dimension {dim}");
        let mut v = DVector::zeros(dim);
        v[index] = ONE;
        StateVector(v)
    }

    pub(crate) fn from_dvector_unchecked(v: DVector<C64>) -> Self {
        StateVector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.0.as_slice()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    pub fn overlap(&self, other: &StateVector) -> f64 {
        self.inner(other).norm()
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.kronecker(&other.0))
    }

    /// Column operator `|v⟩: C → C^dim`.
    pub fn ket(&self) -> Operator {
        Operator(DMatrix::from_column_slice(self.dim(), 1, self.0.as_slice()))
    }

    pub fn projector(&self) -> Operator {
        Operator::projector(self)
    }
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator(Operator);

impl DensityOperator {
    pub fn new(op: Operator, tol: f64) -> Result<Self> {
        if !op.is_square() {
            return Err(Error::Shape("density operator must be square".into()));
        }
        if !op.is_hermitian(tol) {
            return Err(Error::Argument("density operator must be Hermitian".into()));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > tol.max(1e-12) * (op.dim_in() as f64) || tr.im.abs() > tol {
            return Err(Error::Normalization(format!("density operator has trace {tr}")));
        }
        let lambda_min = op.eigh().values[0];
        if lambda_min < -tol {
            return Err(Error::Positivity(format!(
                "density operator has eigenvalue {lambda_min}"
            )));
        }
        Ok(DensityOperator(op))
    }

    pub fn pure(v: &StateVector) -> Self {
        DensityOperator(v.projector())
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator(Operator::identity(dim).scale_real(1.0 / dim as f64))
    }

    /// Convex combination `Σ wᵢ P[vᵢ]`; weights must be a probability vector.
    pub fn mixture(components: &[(f64, StateVector)]) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Argument("empty mixture".into()))?;
        let dim = first.1.dim();
        let mut total = 0.0;
        let mut acc = Operator::zeros(dim, dim);
        for (w, v) in components {
            if v.dim() != dim {
                return Err(Error::Shape("mixture components differ in dimension".into()));
            }
            if *w < 0.0 {
                return Err(Error::Positivity(format!("negative mixture weight {w}")));
            }
            total += w;
            acc = &acc + &v.projector().scale_real(*w);
        }
        if (total - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::Normalization(format!("mixture weights sum to {total}")));
        }
        Ok(DensityOperator(acc))
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim_in()
    }

    /// Eigenpairs with eigenvalue above `threshold`, largest first.
    pub fn spectral(&self, threshold: f64) -> Vec<(f64, StateVector)> {
        let eig = self.0.eigh();
        let mut out: Vec<_> = eig
            .values
            .into_iter()
            .zip(eig.vectors)
            .filter(|(v, _)| *v > threshold)
            .collect();
        out.reverse();
        out
    }

    pub fn rank(&self, threshold: f64) -> usize {
        self.spectral(threshold).len()
    }

    pub fn purity(&self) -> f64 {
        self.0.trace_product(&self.0).re
    }
}

/// Which tensor factor of `H ⊗ K` to trace out.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    H,
    K,
}

fn check_cap(requested: usize) -> Result<()> {
    if requested > DIMENSION_CAP {
        Err(Error::DimensionCap {
            requested,
            cap: DIMENSION_CAP,
        })
    } else {
        Ok(())
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let rows = a.dim_out().saturating_mul(b.dim_out());
    let cols = a.dim_in().saturating_mul(b.dim_in());
    check_cap(rows.max(cols))?;
    Ok(Operator(a.0.kronecker(&b.0)))
}

/// Tensor product of a sequence of operators, left to right.
pub fn tensor_all(ops: &[Operator]) -> Result<Operator> {
    let (first, rest) = ops
        .split_first()
        .ok_or_else(|| Error::Argument("empty tensor product".into()))?;
    rest.iter().try_fold(first.clone(), |acc, op| tensor(&acc, op))
}

/// Partial trace of an operator on `H ⊗ K` over the chosen factor.
pub fn partial_trace(t: &Operator, dim_h: usize, dim_k: usize, traced: Factor) -> Result<Operator> {
    let n = dim_h * dim_k;
    if !t.is_square() || t.dim_in() != n || n == 0 {
        return Err(Error::Shape(format!(
            "partial trace expects a square operator of dimension {dim_h}x{dim_k}, got {}x{}",
            t.dim_out(),
            t.dim_in()
        )));
    }
    let m = &t.0;
    Ok(match traced {
        Factor::K => Operator::from_fn(dim_h, dim_h, |i, j| {
            (0..dim_k).map(|a| m[(i * dim_k + a, j * dim_k + a)]).sum()
        }),
        Factor::H => Operator::from_fn(dim_k, dim_k, |a, b| {
            (0..dim_h).map(|i| m[(i * dim_k + a, i * dim_k + b)]).sum()
        }),
    })
}

/// The isometry `W_φ: H → H ⊗ K`, `ψ ↦ ψ ⊗ φ`.
pub fn embed_program_isometry(phi: &StateVector, dim_h: usize) -> Operator {
    let dk = phi.dim();
    let mut w = DMatrix::zeros(dim_h * dk, dim_h);
    for i in 0..dim_h {
        for a in 0..dk {
            w[(i * dk + a, i)] = phi.0[a];
        }
    }
    Operator(w)
}

/// All operator predicates at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Predicates {
    pub is_hermitian: bool,
    pub is_positive: bool,
    pub is_projection: bool,
    pub is_unitary: bool,
    pub is_isometry: bool,
}

pub fn operator_predicates(a: &Operator, tol: f64) -> Predicates {
    Predicates {
        is_hermitian: a.is_hermitian(tol),
        is_positive: a.is_positive(tol),
        is_projection: a.is_projection(tol),
        is_unitary: a.is_unitary(tol),
        is_isometry: a.is_isometry(tol),
    }
}

pub fn frobenius_distance(a: &Operator, b: &Operator) -> Result<f64> {
    if a.dim_out() != b.dim_out() || a.dim_in() != b.dim_in() {
        return Err(Error::Shape(format!(
            "cannot compare {}x{} with {}x{}",
            a.dim_out(),
            a.dim_in(),
            b.dim_out(),
            b.dim_in()
        )));
    }
    Ok((&a.0 - &b.0).norm())
}

/// Places `op`, acting on the listed factors of a multipartite space, into the
/// full space `⊗ dims`, acting as the identity on the remaining factors.
///
/// `targets` gives the factor indices in the order `op`'s own tensor structure uses.
pub fn lift(op: &Operator, dims: &[usize], targets: &[usize]) -> Result<Operator> {
    let sub: usize = targets.iter().map(|&t| dims.get(t).copied().unwrap_or(0)).product();
    if !op.is_square() || op.dim_in() != sub || sub == 0 {
        return Err(Error::Shape(format!(
            "operator of size {}x{} does not act on factors {targets:?} of {dims:?}",
            op.dim_out(),
            op.dim_in()
        )));
    }
    for (i, t) in targets.iter().enumerate() {
        if targets[..i].contains(t) {
            return Err(Error::Argument(format!("factor {t} listed twice")));
        }
    }
    let total: usize = dims.iter().product();
    check_cap(total)?;

    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    let rest: Vec<usize> = (0..dims.len()).filter(|f| !targets.contains(f)).collect();
    let offsets = |factors: &[usize]| -> Vec<usize> {
        let count: usize = factors.iter().map(|&f| dims[f]).product();
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &f in factors.iter().rev() {
                    off += (idx % dims[f]) * strides[f];
                    idx /= dims[f];
                }
                off
            })
            .collect()
    };
    let target_off = offsets(targets);
    let rest_off = offsets(&rest);

    let mut big = DMatrix::zeros(total, total);
    for &r in &rest_off {
        for (ti, &oi) in target_off.iter().enumerate() {
            for (tj, &oj) in target_off.iter().enumerate() {
                let z = op.0[(ti, tj)];
                if z != ZERO {
                    big[(oi + r, oj + r)] = z;
                }
            }
        }
    }
    Ok(Operator(big))
}

/// Pauli operators `σ₀ = I, σ₁, σ₂, σ₃`.
pub fn pauli(index: usize) -> Operator {
    let m = match index {
        0 => [ONE, ZERO, ZERO, ONE],
        1 => [ZERO, ONE, ONE, ZERO],
        2 => [ZERO, -I, I, ZERO],
        3 => [ONE, ZERO, ZERO, -ONE],
        _ => panic!("Pauli index {index} out of range"),
    };
    Operator(DMatrix::from_row_slice(2, 2, &m))
}

/// `n · σ` for a real 3-vector `n`.
pub fn bloch_operator(n: [f64; 3]) -> Operator {
    (1..=3).map(|i| pauli(i).scale_real(n[i - 1])).sum()
}

pub fn hadamard() -> Operator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Operator::from_real(2, 2, &[s, s, s, -s]).expect("static shape")
}

/// Swap unitary on `C^d ⊗ C^d`.
pub fn swap(dim: usize) -> Operator {
    let n = dim * dim;
    Operator::from_fn(n, n, |r, c| {
        let (i, j) = (c / dim, c % dim);
        if r == j * dim + i {
            ONE
        } else {
            ZERO
        }
    })
}

/// Column operator whose columns are the given vectors.
pub fn from_columns(columns: &[StateVector]) -> Operator {
    let dim = columns.first().map_or(0, StateVector::dim);
    Operator::from_fn(dim, columns.len(), |i, j| columns[j].0[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_tensor_identity() {
        let t = tensor(&Operator::identity(2), &Operator::identity(2)).unwrap();
        assert_eq!(t, Operator::identity(4));
    }

    #[test]
    fn sigma_x_tensor_identity_blocks() {
        let t = tensor(&pauli(1), &Operator::identity(2)).unwrap();
        let expected = Operator::from_real(
            4,
            4,
            &[
                0., 0., 1., 0., //
                0., 0., 0., 1., //
                1., 0., 0., 0., //
                0., 1., 0., 0.,
            ],
        )
        .unwrap();
        assert_eq!(t, expected);
    }

    #[test]
    fn pauli_coupling_assembles_to_unitary() {
        let mut g = Operator::zeros(8, 8);
        for j in 0..4 {
            for k in 0..4 {
                let block = (&(&pauli(j) * &pauli(k)) * &pauli(j)).scale_real(0.5);
                let unit = Operator::outer(&StateVector::basis(4, j), &StateVector::basis(4, k));
                g = &g + &tensor(&block, &unit).unwrap();
            }
        }
        let residual = frobenius_distance(&(&g.adjoint() * &g), &Operator::identity(8)).unwrap();
        assert!(residual < 1e-14, "G*G - I = {residual}");
    }

    #[test]
    fn tensor_respects_dimension_cap() {
        let big = Operator::identity(65);
        let err = tensor(&big, &big).unwrap_err();
        assert_eq!(
            err,
            Error::DimensionCap {
                requested: 65 * 65,
                cap: DIMENSION_CAP
            }
        );
    }

    #[test]
    fn partial_trace_of_product_state() {
        let rho = Operator::from_rows(&[vec![c(0.7), C64::new(0.1, 0.2)], vec![C64::new(0.1, -0.2), c(0.3)]])
            .unwrap();
        let xi = Operator::diagonal(&[0.2, 0.5, 0.3]);
        let t = tensor(&rho, &xi).unwrap();
        let on_h = partial_trace(&t, 2, 3, Factor::K).unwrap();
        let on_k = partial_trace(&t, 2, 3, Factor::H).unwrap();
        assert!(frobenius_distance(&on_h, &rho).unwrap() < 1e-15);
        assert!(frobenius_distance(&on_k, &xi).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = StateVector::from_real(&[s, 0., 0., s]).unwrap();
        let reduced = partial_trace(&phi.projector(), 2, 2, Factor::K).unwrap();
        let half = Operator::identity(2).scale_real(0.5);
        assert!(frobenius_distance(&reduced, &half).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let err = partial_trace(&Operator::identity(5), 2, 3, Factor::K).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn program_isometry_for_first_basis_vector() {
        let w = embed_program_isometry(&StateVector::basis(2, 0), 2);
        let expected = Operator::from_real(4, 2, &[1., 0., 0., 0., 0., 1., 0., 0.]).unwrap();
        assert_eq!(w, expected);
    }

    #[test]
    fn program_isometry_identities() {
        let phi = StateVector::normalized(vec![C64::new(0.3, 0.4), C64::new(-0.2, 0.1), c(0.8)]).unwrap();
        let w = embed_program_isometry(&phi, 2);
        assert!(frobenius_distance(&(&w.adjoint() * &w), &Operator::identity(2)).unwrap() < 1e-15);
        let expected = tensor(&Operator::identity(2), &phi.projector()).unwrap();
        assert!(frobenius_distance(&(&w * &w.adjoint()), &expected).unwrap() < 1e-15);
        // identity compresses to the identity
        let big = tensor(&Operator::identity(2), &Operator::identity(3)).unwrap();
        let compressed = &(&w.adjoint() * &big) * &w;
        assert!(frobenius_distance(&compressed, &Operator::identity(2)).unwrap() < 1e-15);
    }

    #[test]
    fn predicates_on_identity() {
        let p = operator_predicates(&Operator::identity(3), DEFAULT_TOL);
        assert!(p.is_hermitian && p.is_positive && p.is_projection && p.is_unitary && p.is_isometry);
    }

    #[test]
    fn predicates_on_sigma_x() {
        let p = operator_predicates(&pauli(1), DEFAULT_TOL);
        assert!(p.is_hermitian && p.is_unitary);
        assert!(!p.is_positive && !p.is_projection);
    }

    #[test]
    fn predicates_on_fuzzy_effect() {
        let a = (&Operator::identity(2) + &pauli(3).scale_real(1.0 / 3f64.sqrt())).scale_real(0.5);
        let p = operator_predicates(&a, DEFAULT_TOL);
        assert!(p.is_hermitian && p.is_positive);
        assert!(!p.is_projection && !p.is_unitary);
    }

    #[test]
    fn non_square_predicates() {
        let w = embed_program_isometry(&StateVector::basis(3, 1), 2);
        let p = operator_predicates(&w, DEFAULT_TOL);
        assert!(p.is_isometry);
        assert!(!p.is_hermitian && !p.is_positive && !p.is_projection && !p.is_unitary);
    }

    #[test]
    fn frobenius_distances() {
        assert_eq!(frobenius_distance(&pauli(2), &pauli(2)).unwrap(), 0.0);
        let d = frobenius_distance(&Operator::identity(5), &Operator::zeros(5, 5)).unwrap();
        assert!((d - 5f64.sqrt()).abs() < 1e-15);
        let d = frobenius_distance(&pauli(1), &pauli(2)).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
        assert!(frobenius_distance(&pauli(1), &Operator::identity(3)).is_err());
    }

    #[test]
    fn lift_matches_tensor_on_leading_factors() {
        let a = pauli(2);
        let lifted = lift(&a, &[2, 3], &[0]).unwrap();
        let direct = tensor(&a, &Operator::identity(3)).unwrap();
        assert_eq!(lifted, direct);
        let lifted = lift(&a, &[3, 2], &[1]).unwrap();
        let direct = tensor(&Operator::identity(3), &a).unwrap();
        assert_eq!(lifted, direct);
    }

    #[test]
    fn lift_reorders_factors() {
        // acting with SWAP-conjugated A ⊗ B on factors (2, 0) of a 3-party space
        let a = pauli(1);
        let b = hadamard();
        let ab = tensor(&a, &b).unwrap();
        let lifted = lift(&ab, &[2, 2, 2], &[2, 0]).unwrap();
        let direct = tensor_all(&[b, Operator::identity(2), a]).unwrap();
        assert!(frobenius_distance(&lifted, &direct).unwrap() < 1e-15);
    }

    #[test]
    fn swap_exchanges_factors() {
        let u = StateVector::normalized(vec![c(1.0), C64::new(0.0, 2.0)]).unwrap();
        let v = StateVector::normalized(vec![c(3.0), c(-1.0)]).unwrap();
        let swapped = swap(2).apply(&u.tensor(&v));
        let expected = v.tensor(&u);
        assert!((swapped - expected.vector()).norm() < 1e-15);
    }

    #[test]
    fn state_vector_validation() {
        assert!(StateVector::from_real(&[1.0, 1.0]).is_err());
        assert!(StateVector::normalized(vec![ZERO, ZERO]).is_err());
    }

    #[test]
    fn density_validation() {
        assert!(DensityOperator::new(Operator::diagonal(&[0.5, 0.5]), DEFAULT_TOL).is_ok());
        assert!(matches!(
            DensityOperator::new(Operator::diagonal(&[1.5, -0.5]), DEFAULT_TOL),
            Err(Error::Positivity(_))
        ));
        assert!(matches!(
            DensityOperator::new(Operator::diagonal(&[0.5, 0.6]), DEFAULT_TOL),
            Err(Error::Normalization(_))
        ));
    }
}
