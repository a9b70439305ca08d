//! Programmable multimeters `⟨K, Z, V⟩` and the devices they induce.
//!
//! A multimeter fixes the apparatus space `K`, the pointer observable `Z` on
//! `K` and the interaction channel `V` on `H ⊗ K`. Supplying a probe state `ξ`
//! (and optionally a post-processing kernel) gives a measurement model, which
//! induces an observable
//!
//! ```text
//! E(x) = tr_K[ V*(I ⊗ Z(x)) (I ⊗ ξ) ]
//! ```
//!
//! and a channel `ℰ(ρ) = tr_K[ V(ρ ⊗ ξ) ]` on the system.

mod constructions;

pub use constructions::{
    builtin_multimeter, concatenate_with_measurement, dimension_bounds,
    minimal_dilation_multimeter, pauli_merge_kernel, pauli_multimeter, pauli_probe,
    push_button_channels,
    push_button_multimeter, push_button_observables, shared_pointer_multimeter,
    spin_pair_multimeter, swap_multimeter, BuiltinParams, ProgrammedMultimeter, BUILTINS,
};

use crate::channels::{Channel, Picture, StinespringDilation};
use crate::error::{Error, Result};
use crate::observables::{Observable, StochasticKernel};
use crate::operators::{
    embed_program_isometry, lift, partial_trace, tensor, DensityOperator, Factor, Operator,
    StateVector, DEFAULT_TOL,
};

/// Probe eigenvalues at or below this are dropped from spectral decompositions.
const PROBE_THRESHOLD: f64 = 1e-12;

/// A measurement setup with the probe state left open.
#[derive(Clone, Debug)]
pub struct Multimeter {
    dim_h: usize,
    dim_k: usize,
    pointer: Observable,
    interaction: Channel,
    coupling: Option<Operator>,
}

impl Multimeter {
    pub fn new(dim_h: usize, pointer: Observable, interaction: Channel) -> Result<Self> {
        let dim_k = pointer.dim();
        if interaction.dim() != dim_h * dim_k {
            return Err(Error::Shape(format!(
                "interaction acts on C^{} but H ⊗ K has dimension {}·{}",
                interaction.dim(),
                dim_h,
                dim_k
            )));
        }
        let coupling = if pointer.is_sharp(DEFAULT_TOL) {
            interaction.as_unitary(DEFAULT_TOL).cloned()
        } else {
            None
        };
        Ok(Multimeter {
            dim_h,
            dim_k,
            pointer,
            interaction,
            coupling,
        })
    }

    /// A normal multimeter: sharp pointer and unitary coupling `G`.
    pub fn normal(dim_h: usize, pointer: Observable, g: Operator) -> Result<Self> {
        if !pointer.is_sharp(DEFAULT_TOL) {
            return Err(Error::Sharpness("a normal multimeter needs a sharp pointer".into()));
        }
        if !g.is_unitary(DEFAULT_TOL) {
            return Err(Error::Unitarity("coupling G is not unitary".into()));
        }
        if g.dim_in() != dim_h * pointer.dim() {
            return Err(Error::Shape(format!(
                "coupling acts on C^{} but H ⊗ K has dimension {}·{}",
                g.dim_in(),
                dim_h,
                pointer.dim()
            )));
        }
        Ok(Multimeter {
            dim_h,
            dim_k: pointer.dim(),
            pointer,
            interaction: Channel::new(vec![g.clone()])?,
            coupling: Some(g),
        })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn pointer(&self) -> &Observable {
        &self.pointer
    }

    pub fn interaction(&self) -> &Channel {
        &self.interaction
    }

    pub fn is_normal(&self) -> bool {
        self.coupling.is_some()
    }

    /// The unitary coupling `G` of a normal multimeter.
    pub fn coupling(&self) -> Option<&Operator> {
        self.coupling.as_ref()
    }

    /// Measurement model with a pure probe and no post-processing.
    pub fn program(&self, probe: &StateVector) -> Result<MeasurementModel> {
        MeasurementModel::new(self.clone(), Probe::Pure(probe.clone()), None)
    }

    /// Enlarges the apparatus by an idle factor: `K ↦ K ⊗ C^extra`.
    pub fn with_idle_ancilla(&self, extra: usize) -> Result<Multimeter> {
        let id = Operator::identity(extra);
        let kraus = self
            .interaction
            .kraus()
            .iter()
            .map(|k| tensor(k, &id))
            .collect::<Result<Vec<_>>>()?;
        let effects = self
            .pointer
            .effects()
            .iter()
            .map(|e| tensor(e, &id))
            .collect::<Result<Vec<_>>>()?;
        let pointer = Observable::new(self.dim_k * extra, self.pointer.labels().to_vec(), effects)?;
        Multimeter::new(self.dim_h, pointer, Channel::new(kraus)?)
    }
}

/// Probe state of the apparatus.
#[derive(Clone, Debug, PartialEq)]
pub enum Probe {
    Pure(StateVector),
    Mixed(DensityOperator),
}

impl Probe {
    pub fn dim(&self) -> usize {
        match self {
            Probe::Pure(v) => v.dim(),
            Probe::Mixed(rho) => rho.dim(),
        }
    }

    pub fn density(&self) -> Operator {
        match self {
            Probe::Pure(v) => v.projector(),
            Probe::Mixed(rho) => rho.operator().clone(),
        }
    }

    /// Spectral decomposition `Σ λ_a P[ψ_a]`, largest weight first.
    pub fn components(&self) -> Vec<(f64, StateVector)> {
        match self {
            Probe::Pure(v) => vec![(1.0, v.clone())],
            Probe::Mixed(rho) => rho.spectral(PROBE_THRESHOLD),
        }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            Probe::Pure(_) => true,
            Probe::Mixed(rho) => rho.rank(1e-9) <= 1,
        }
    }

    pub fn tensor(&self, other: &Probe) -> Result<Probe> {
        Ok(match (self, other) {
            (Probe::Pure(a), Probe::Pure(b)) => Probe::Pure(a.tensor(b)),
            _ => Probe::Mixed(DensityOperator::new(
                tensor(&self.density(), &other.density())?,
                DEFAULT_TOL,
            )?),
        })
    }
}

impl From<StateVector> for Probe {
    fn from(v: StateVector) -> Self {
        Probe::Pure(v)
    }
}

impl From<DensityOperator> for Probe {
    fn from(rho: DensityOperator) -> Self {
        Probe::Mixed(rho)
    }
}

/// A multimeter together with a probe state and an optional post-processing kernel.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    meter: Multimeter,
    probe: Probe,
    kernel: Option<StochasticKernel>,
}

impl MeasurementModel {
    pub fn new(meter: Multimeter, probe: Probe, kernel: Option<StochasticKernel>) -> Result<Self> {
        if probe.dim() != meter.dim_k {
            return Err(Error::Model(format!(
                "probe lives in C^{} but the apparatus is C^{}",
                probe.dim(),
                meter.dim_k
            )));
        }
        if let Some(k) = &kernel {
            if k.rows() != meter.pointer.len() {
                return Err(Error::Model(format!(
                    "kernel has {} rows but the pointer has {} outcomes",
                    k.rows(),
                    meter.pointer.len()
                )));
            }
        }
        Ok(MeasurementModel { meter, probe, kernel })
    }

    pub fn meter(&self) -> &Multimeter {
        &self.meter
    }

    pub fn probe(&self) -> &Probe {
        &self.probe
    }

    pub fn kernel(&self) -> Option<&StochasticKernel> {
        self.kernel.as_ref()
    }

    pub fn with_kernel(mut self, kernel: StochasticKernel) -> Result<Self> {
        if kernel.rows() != self.meter.pointer.len() {
            return Err(Error::Model("kernel does not match the pointer outcomes".into()));
        }
        self.kernel = Some(kernel);
        Ok(self)
    }

    /// Pointer after post-processing, `Z'(y) = Σ_x k(x, y) Z(x)`.
    pub fn effective_pointer(&self) -> Result<Observable> {
        match &self.kernel {
            Some(k) => self.meter.pointer.post_process(k),
            None => Ok(self.meter.pointer.clone()),
        }
    }

    /// Same model with the kernel folded into the pointer.
    pub fn smeared(&self) -> Result<MeasurementModel> {
        let meter = Multimeter::new(
            self.meter.dim_h,
            self.effective_pointer()?,
            self.meter.interaction.clone(),
        )?;
        MeasurementModel::new(meter, self.probe.clone(), None)
    }

    /// Measured observable via the Heisenberg action of the interaction.
    pub fn induced_observable(&self) -> Result<Observable> {
        let (dh, dk) = (self.meter.dim_h, self.meter.dim_k);
        let pointer = self.effective_pointer()?;
        let id_h = Operator::identity(dh);
        let probe = tensor(&id_h, &self.probe.density())?;
        let effects = pointer
            .effects()
            .iter()
            .map(|z| {
                let evolved = self
                    .meter
                    .interaction
                    .apply(&tensor(&id_h, z)?, Picture::Heisenberg)?;
                partial_trace(&(&evolved * &probe), dh, dk, Factor::K)
            })
            .collect::<Result<Vec<_>>>()?;
        Observable::new(dh, pointer.labels().to_vec(), hermitize(effects))
            .map_err(|e| Error::Model(format!("induced effects are invalid: {e}")))
    }

    /// Measured observable by the closed-form compression `W_φ* G*(I ⊗ Z(x))G W_φ`
    /// available for normal multimeters with pure probes.
    pub fn induced_observable_normal(&self) -> Result<Observable> {
        let (g, phi) = self.normal_parts()?;
        let dh = self.meter.dim_h;
        let gw = g * &embed_program_isometry(phi, dh);
        let gw_adj = gw.adjoint();
        let pointer = self.effective_pointer()?;
        let id_h = Operator::identity(dh);
        let effects = pointer
            .effects()
            .iter()
            .map(|z| Ok(&(&gw_adj * &tensor(&id_h, z)?) * &gw))
            .collect::<Result<Vec<_>>>()?;
        Observable::new(dh, pointer.labels().to_vec(), hermitize(effects))
            .map_err(|e| Error::Model(format!("induced effects are invalid: {e}")))
    }

    /// Induced channel `ρ ↦ tr_K[V(ρ ⊗ ξ)]` in canonical Kraus form.
    ///
    /// For `V = Σ K_i · K_i*` and `ξ = Σ λ_a P[ψ_a]`, the Kraus operators are
    /// `√λ_a (I ⊗ ⟨b|) K_i (I ⊗ |ψ_a⟩)` over apparatus basis vectors `b`.
    pub fn induced_channel(&self) -> Result<Channel> {
        let (dh, dk) = (self.meter.dim_h, self.meter.dim_k);
        let id_h = Operator::identity(dh);
        let mut kraus = Vec::new();
        for (weight, psi) in self.probe.components() {
            let inject = tensor(&id_h, &psi.ket())?;
            for k in self.meter.interaction.kraus() {
                let injected = k * &inject;
                for b in 0..dk {
                    let read = tensor(&id_h, &StateVector::basis(dk, b).ket().adjoint())?;
                    kraus.push((&read * &injected).scale_real(weight.sqrt()));
                }
            }
        }
        Ok(Channel::with_tol(kraus, 1e-8)?.canonical())
    }

    /// Induced channel from the Stinespring isometry `G W_φ` of a normal model.
    pub fn induced_channel_normal(&self) -> Result<Channel> {
        let (g, phi) = self.normal_parts()?;
        let w = g * &embed_program_isometry(phi, self.meter.dim_h);
        Ok(StinespringDilation::new(self.meter.dim_k, w)?.to_channel())
    }

    /// `tr[(I ⊗ Z(x)) V(ρ ⊗ ξ)]` for every pointer outcome, evaluated in the
    /// Schrödinger picture.
    pub fn pointer_statistics(&self, rho: &Operator) -> Result<Vec<f64>> {
        let dh = self.meter.dim_h;
        let joint = tensor(rho, &self.probe.density())?;
        let evolved = self.meter.interaction.apply(&joint, Picture::Schrodinger)?;
        let id_h = Operator::identity(dh);
        self.effective_pointer()?
            .effects()
            .iter()
            .map(|z| Ok(tensor(&id_h, z)?.trace_product(&evolved).re))
            .collect()
    }

    /// Rejects the claim that this model measures `claimed` when the claim is
    /// inconsistent: a sharp observable with `N` nonzero outcomes needs
    /// `dim K ≥ N`, and the induced observable must match the claim within `tol`.
    pub fn validate_claim(&self, claimed: &Observable, tol: f64) -> Result<()> {
        if claimed.dim() != self.meter.dim_h {
            return Err(Error::Shape("claimed observable acts on a different system".into()));
        }
        if claimed.is_sharp(DEFAULT_TOL) && claimed.nonzero_outcomes() > self.meter.dim_k {
            return Err(Error::Model(format!(
                "a sharp observable with {} outcomes needs dim K ≥ {}, but dim K = {}",
                claimed.nonzero_outcomes(),
                claimed.nonzero_outcomes(),
                self.meter.dim_k
            )));
        }
        let induced = self.induced_observable()?;
        let d = induced.positional_distance(claimed)?;
        if d > tol {
            return Err(Error::Model(format!(
                "model induces an observable at distance {d:.3e} from the claim"
            )));
        }
        Ok(())
    }

    fn normal_parts(&self) -> Result<(&Operator, &StateVector)> {
        let g = self
            .meter
            .coupling()
            .ok_or_else(|| Error::Model("closed-form induction needs a normal multimeter".into()))?;
        match &self.probe {
            Probe::Pure(phi) => Ok((g, phi)),
            Probe::Mixed(_) => Err(Error::Model("closed-form induction needs a pure probe".into())),
        }
    }
}

/// Removes the anti-Hermitian rounding residue from computed effects.
fn hermitize(effects: Vec<Operator>) -> Vec<Operator> {
    effects
        .into_iter()
        .map(|e| (&e + &e.adjoint()).scale_real(0.5))
        .collect()
}

/// Lifts a channel on the listed factors of `⊗ dims` to the full space.
pub(crate) fn lift_channel(c: &Channel, dims: &[usize], targets: &[usize]) -> Result<Vec<Operator>> {
    c.kraus().iter().map(|k| lift(k, dims, targets)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{channel_distance, unitary_channel};
    use crate::observables::axis_spin;
    use crate::operators::{frobenius_distance, pauli};
    use crate::random;

    #[test]
    fn identity_interaction_factorizes() {
        let z = axis_spin(1);
        let meter = Multimeter::new(3, z.clone(), Channel::identity(6)).unwrap();
        let xi = random::random_density(2, 2, &mut random::rng(3));
        let model = MeasurementModel::new(meter, Probe::Mixed(xi.clone()), None).unwrap();
        let e = model.induced_observable().unwrap();
        for (ex, zx) in e.effects().iter().zip(z.effects()) {
            let p = zx.trace_product(xi.operator()).re;
            let expected = Operator::identity(3).scale_real(p);
            assert!(frobenius_distance(ex, &expected).unwrap() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let err = Multimeter::new(2, axis_spin(1), Channel::identity(6)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        let meter = Multimeter::new(3, axis_spin(1), Channel::identity(6)).unwrap();
        let err = meter.program(&StateVector::basis(3, 0)).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn local_unitary_coupling_programs_a_unitary_channel() {
        let u = random::haar_unitary(2, &mut random::rng(7));
        let g = tensor(&u, &Operator::identity(1)).unwrap();
        let meter = Multimeter::normal(2, Observable::trivial(1), g).unwrap();
        let model = meter.program(&StateVector::basis(1, 0)).unwrap();
        let c = model.induced_channel().unwrap();
        assert!(channel_distance(&c, &unitary_channel(&u).unwrap()).unwrap() < 1e-12);
    }

    #[test]
    fn normal_and_general_paths_agree() {
        let mut rng = random::rng(17);
        let g = random::haar_unitary(6, &mut rng);
        let meter = Multimeter::normal(2, crate::observables::random_sharp_observable(3, 2, 4).unwrap(), g).unwrap();
        let phi = random::random_state(3, &mut rng);
        let model = meter.program(&phi).unwrap();
        let a = model.induced_observable().unwrap();
        let b = model.induced_observable_normal().unwrap();
        assert!(a.distance(&b).unwrap() < 1e-12);
        let ca = model.induced_channel().unwrap();
        let cb = model.induced_channel_normal().unwrap();
        assert!(channel_distance(&ca, &cb).unwrap() < 1e-12);
    }

    #[test]
    fn kernel_row_mismatch_is_a_model_error() {
        let meter = Multimeter::new(2, axis_spin(3), Channel::identity(4)).unwrap();
        let k = StochasticKernel::identity(vec!["a".into(), "b".into(), "c".into()]);
        let err = MeasurementModel::new(meter, Probe::Pure(StateVector::basis(2, 0)), Some(k)).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }

    #[test]
    fn sigma_x_coupling_is_normal() {
        let g = tensor(&pauli(1), &Operator::identity(2)).unwrap();
        let meter = Multimeter::normal(2, axis_spin(3), g).unwrap();
        assert!(meter.is_normal());
        let fuzzy = Observable::mix(0.5, &axis_spin(1), &axis_spin(3)).unwrap();
        let meter = Multimeter::new(2, fuzzy, meter.interaction().clone()).unwrap();
        assert!(!meter.is_normal());
    }
}
