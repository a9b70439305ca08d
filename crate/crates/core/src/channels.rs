//! Quantum channels in Kraus form.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{
    embed_program_isometry, frobenius_distance, partial_trace, tensor, Factor, Operator,
    StateVector, C64, DEFAULT_TOL,
};

/// Choi eigenvalues at or below this are dropped when canonicalizing Kraus operators.
const CHOI_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Picture {
    /// `ρ ↦ Σ K ρ K*`
    Schrodinger,
    /// `B ↦ Σ K* B K`
    Heisenberg,
}

/// A completely positive trace-preserving map on `L(C^dim)`.
#[derive(Clone, Debug)]
pub struct Channel {
    dim: usize,
    kraus: Vec<Operator>,
}

impl Channel {
    pub fn new(kraus: Vec<Operator>) -> Result<Self> {
        Self::with_tol(kraus, DEFAULT_TOL)
    }

    pub fn with_tol(kraus: Vec<Operator>, tol: f64) -> Result<Self> {
        let dim = kraus
            .first()
            .ok_or_else(|| Error::Argument("a channel needs at least one Kraus operator".into()))?
            .dim_in();
        if kraus.iter().any(|k| !k.is_square() || k.dim_in() != dim) {
            return Err(Error::Shape(format!("Kraus operators must all be {dim}x{dim}")));
        }
        let total: Operator = kraus.iter().map(|k| &k.adjoint() * k).sum();
        let residual = frobenius_distance(&total, &Operator::identity(dim))?;
        if residual > tol * (dim as f64).sqrt() {
            return Err(Error::Normalization(format!(
                "Σ K*K differs from the identity by {residual:.3e}"
            )));
        }
        Ok(Channel { dim, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Channel {
            dim,
            kraus: vec![Operator::identity(dim)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[Operator] {
        &self.kraus
    }

    /// The single Kraus operator, when there is exactly one and it is unitary.
    pub fn as_unitary(&self, tol: f64) -> Option<&Operator> {
        match self.kraus.as_slice() {
            [u] if u.is_unitary(tol) => Some(u),
            _ => None,
        }
    }

    pub fn apply(&self, x: &Operator, picture: Picture) -> Result<Operator> {
        if !x.is_square() || x.dim_in() != self.dim {
            return Err(Error::Shape(format!(
                "channel on C^{} applied to a {}x{} operator",
                self.dim,
                x.dim_out(),
                x.dim_in()
            )));
        }
        Ok(match picture {
            Picture::Schrodinger => self.kraus.iter().map(|k| &(k * x) * &k.adjoint()).sum(),
            Picture::Heisenberg => self.kraus.iter().map(|k| &(&k.adjoint() * x) * k).sum(),
        })
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.dim != self.dim {
            return Err(Error::Shape("composed channels differ in dimension".into()));
        }
        let kraus = next
            .kraus
            .iter()
            .flat_map(|n| self.kraus.iter().map(move |k| n * k))
            .collect();
        Ok(Channel { dim: self.dim, kraus }.canonical())
    }

    /// Convex combination `Σ wᵢ ℰᵢ`.
    pub fn mixture(weights: &[f64], channels: &[Channel]) -> Result<Channel> {
        if weights.len() != channels.len() || channels.is_empty() {
            return Err(Error::Argument("one weight per channel required".into()));
        }
        if weights.iter().any(|&w| w < 0.0) || (weights.iter().sum::<f64>() - 1.0).abs() > DEFAULT_TOL {
            return Err(Error::Argument("mixture weights must form a probability vector".into()));
        }
        let dim = channels[0].dim;
        let mut kraus = Vec::new();
        for (w, c) in weights.iter().zip(channels) {
            if c.dim != dim {
                return Err(Error::Shape("mixed channels differ in dimension".into()));
            }
            if *w > 0.0 {
                kraus.extend(c.kraus.iter().map(|k| k.scale_real(w.sqrt())));
            }
        }
        Channel::new(kraus)
    }

    /// Choi matrix `J = Σ_ij |i⟩⟨j| ⊗ ℰ(|i⟩⟨j|)`.
    pub fn choi(&self) -> Operator {
        let d = self.dim;
        let mut j = DMatrix::<C64>::zeros(d * d, d * d);
        for k in &self.kraus {
            let km = k.matrix();
            for i in 0..d {
                for a in 0..d {
                    let left = km[(a, i)];
                    if left == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for jj in 0..d {
                        for b in 0..d {
                            j[(i * d + a, jj * d + b)] += left * km[(b, jj)].conj();
                        }
                    }
                }
            }
        }
        Operator::from_matrix(j)
    }

    /// Linearly independent Kraus operators read off the Choi eigendecomposition.
    pub fn canonical(&self) -> Channel {
        let d = self.dim;
        let eig = self.choi().eigh();
        let mut kraus: Vec<Operator> = eig
            .values
            .iter()
            .zip(&eig.vectors)
            .rev()
            .filter(|(v, _)| **v > CHOI_THRESHOLD)
            .map(|(v, vec)| {
                let s = v.sqrt();
                Operator::from_fn(d, d, |a, i| vec.amplitudes()[i * d + a] * s)
            })
            .collect();
        if kraus.is_empty() {
            kraus = self.kraus.clone();
        }
        Channel { dim: d, kraus }
    }

    /// Checks that `ℰ*(P)` is a projection for every projector onto a vector of
    /// the family `{e_i, (e_i + e_j)/√2, (e_i + i e_j)/√2}`, which spans `L(H)`.
    pub fn is_multiplicative(&self, tol: f64) -> bool {
        spanning_projectors(self.dim).iter().all(|p| {
            self.apply(p, Picture::Heisenberg)
                .is_ok_and(|q| q.is_projection(tol))
        })
    }

    /// `max_P ‖ℰ*(P)² − ℰ*(P)‖_F` over the spanning projector family.
    pub fn projection_preservation_residual(&self) -> f64 {
        spanning_projectors(self.dim)
            .iter()
            .map(|p| {
                self.apply(p, Picture::Heisenberg)
                    .map(|q| q.projection_residual())
                    .unwrap_or(f64::INFINITY)
            })
            .fold(0.0, f64::max)
    }

    /// `‖ℰ*(BC) − ℰ*(B)ℰ*(C)‖_F`.
    pub fn multiplicativity_defect(&self, b: &Operator, c: &Operator) -> Result<f64> {
        let lhs = self.apply(&(b * c), Picture::Heisenberg)?;
        let rhs = &self.apply(b, Picture::Heisenberg)? * &self.apply(c, Picture::Heisenberg)?;
        frobenius_distance(&lhs, &rhs)
    }

    /// Choi's criterion: extreme iff `{K_i* K_j}` is linearly independent for a
    /// linearly independent Kraus family.
    pub fn is_extreme_channel(&self, tol: f64) -> bool {
        let canonical = self.canonical();
        let r = canonical.kraus.len();
        let d = self.dim;
        if r * r > d * d {
            return false;
        }
        let products: Vec<Operator> = canonical
            .kraus
            .iter()
            .flat_map(|ki| canonical.kraus.iter().map(move |kj| &ki.adjoint() * kj))
            .collect();
        let m = DMatrix::from_fn(d * d, products.len(), |row, col| {
            products[col].matrix()[(row / d, row % d)]
        });
        let sv = m.singular_values();
        let max = sv.iter().copied().fold(0.0, f64::max);
        max > 0.0 && sv.iter().filter(|&&s| s > tol * max).count() == products.len()
    }

    /// Stinespring isometry `W ψ = Σ_a K_a ψ ⊗ e_a` built from the canonical Kraus family.
    pub fn stinespring(&self) -> StinespringDilation {
        let canonical = self.canonical();
        let n = canonical.kraus.len();
        let d = self.dim;
        let w = Operator::from_fn(d * n, d, |row, col| {
            canonical.kraus[row % n].get(row / n, col)
        });
        StinespringDilation { dim_k: n, w }
    }

    /// `max ‖[E_ab ⊗ I_K, WW*]‖_F` over matrix units for the channel's own dilation.
    pub fn dilation_commutant_residual(&self) -> f64 {
        let dil = self.stinespring();
        let range = &dil.w * &dil.w.adjoint();
        let id_k = Operator::identity(dil.dim_k);
        let d = self.dim;
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                let unit = Operator::outer(&StateVector::basis(d, a), &StateVector::basis(d, b));
                let lifted = tensor(&unit, &id_k).expect("dimensions already validated");
                worst = worst.max(lifted.commutator(&range).norm());
            }
        }
        worst
    }
}

/// Rank-one projectors spanning `L(C^d)`.
fn spanning_projectors(d: usize) -> Vec<Operator> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        out.push(StateVector::basis(d, i).projector());
        for j in (i + 1)..d {
            for phase in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut amps = vec![C64::new(0.0, 0.0); d];
                amps[i] = C64::new(s, 0.0);
                amps[j] = phase * s;
                out.push(StateVector::new(amps).expect("unit vector").projector());
            }
        }
    }
    out
}

/// `ρ ↦ U ρ U*`.
pub fn unitary_channel(u: &Operator) -> Result<Channel> {
    if !u.is_unitary(DEFAULT_TOL) {
        return Err(Error::Unitarity("unitary channel needs a unitary operator".into()));
    }
    Ok(Channel {
        dim: u.dim_in(),
        kraus: vec![u.clone()],
    })
}

/// The channel sending every state to `P[φ]`, Kraus operators `|φ⟩⟨e_i|`.
pub fn complete_contraction(phi: &StateVector) -> Channel {
    let d = phi.dim();
    let kraus = (0..d)
        .map(|i| Operator::outer(phi, &StateVector::basis(d, i)))
        .collect();
    Channel { dim: d, kraus }
}

/// Frobenius distance between Choi matrices.
pub fn channel_distance(a: &Channel, b: &Channel) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::Shape(format!(
            "channels act on C^{} and C^{}",
            a.dim, b.dim
        )));
    }
    frobenius_distance(&a.choi(), &b.choi())
}

/// An isometry `W: H → H ⊗ K` with `ℰ(T) = tr_K(W T W*)`.
#[derive(Clone, Debug)]
pub struct StinespringDilation {
    pub dim_k: usize,
    pub w: Operator,
}

impl StinespringDilation {
    pub fn new(dim_k: usize, w: Operator) -> Result<Self> {
        let d = w.dim_in();
        if w.dim_out() != d * dim_k {
            return Err(Error::Shape(format!(
                "dilation is {}x{}, expected {}x{d}",
                w.dim_out(),
                d,
                d * dim_k
            )));
        }
        if !w.is_isometry(DEFAULT_TOL) {
            return Err(Error::Isometry("W*W differs from the identity".into()));
        }
        Ok(StinespringDilation { dim_k, w })
    }

    /// The dilation `ψ ↦ ψ ⊗ φ` of the identity channel.
    pub fn trivial(phi: &StateVector, dim_h: usize) -> Self {
        StinespringDilation {
            dim_k: phi.dim(),
            w: embed_program_isometry(phi, dim_h),
        }
    }

    pub fn dim_h(&self) -> usize {
        self.w.dim_in()
    }

    pub fn apply(&self, t: &Operator) -> Result<Operator> {
        let inner = self.w.compose(t)?.compose(&self.w.adjoint())?;
        partial_trace(&inner, self.dim_h(), self.dim_k, Factor::K)
    }

    pub fn apply_dual(&self, b: &Operator) -> Result<Operator> {
        let lifted = tensor(b, &Operator::identity(self.dim_k))?;
        self.w.adjoint().compose(&lifted)?.compose(&self.w)
    }

    pub fn to_channel(&self) -> Channel {
        let (d, n) = (self.dim_h(), self.dim_k);
        let kraus = (0..n)
            .map(|a| Operator::from_fn(d, d, |i, j| self.w.get(i * n + a, j)))
            .collect();
        Channel { dim: d, kraus }
    }
}
