//! Explicit multimeter constructions and apparatus-size bounds.

use crate::channels::Channel;
use crate::error::{Error, Result};
use crate::observables::{Observable, StochasticKernel};
use crate::operators::{
    lift, pauli, swap, tensor, Operator, StateVector, C64, DEFAULT_TOL, DIMENSION_CAP,
};
use crate::random::numbered_labels;

use super::{lift_channel, MeasurementModel, Multimeter};

/// A multimeter with the program states of the devices it was built for.
#[derive(Clone, Debug)]
pub struct ProgrammedMultimeter {
    pub meter: Multimeter,
    pub probes: Vec<StateVector>,
    /// For push-button observable meters: deterministic relabellings reading
    /// device `i`'s own pointer coordinate from the joint pointer outcome.
    pub readouts: Vec<StochasticKernel>,
}

impl ProgrammedMultimeter {
    fn new(meter: Multimeter, probes: Vec<StateVector>) -> Self {
        ProgrammedMultimeter {
            meter,
            probes,
            readouts: Vec::new(),
        }
    }
}

/// Transposition unitary on `C^n` exchanging `e_0` and `e_j` (identity for `j = 0`).
fn transposition(n: usize, j: usize) -> Operator {
    Operator::from_fn(n, n, |r, c| {
        let image = if c == j {
            0
        } else if c == 0 {
            j
        } else {
            c
        };
        if r == image {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn basis_pointer(dim: usize, labels: Vec<String>) -> Result<Observable> {
    let effects = (0..dim).map(|k| StateVector::basis(dim, k).projector()).collect();
    Observable::new(dim, labels, effects)
}

fn check_total_dim(dim_h: usize, dim_k: usize) -> Result<()> {
    let total = dim_h.saturating_mul(dim_k);
    if total > DIMENSION_CAP {
        return Err(Error::DimensionCap {
            requested: total,
            cap: DIMENSION_CAP,
        });
    }
    Ok(())
}

/// Normal multimeter with `dim K = N` that measures the sharp observable `a`
/// when programmed with `e_0`.
///
/// Coupling `G = Σ_j A(j) ⊗ T_j` with `T_j` the transposition `e_0 ↔ e_j`
/// (self-inverse), pointer `Z(k) = P[e_k]` labelled like `a`.
pub fn minimal_dilation_multimeter(a: &Observable) -> Result<(Multimeter, StateVector)> {
    if !a.is_sharp(DEFAULT_TOL) {
        return Err(Error::Sharpness(
            "minimal dilation requires a sharp observable".into(),
        ));
    }
    let n = a.len();
    check_total_dim(a.dim(), n)?;
    let g: Operator = a
        .effects()
        .iter()
        .enumerate()
        .map(|(j, e)| tensor(e, &transposition(n, j).adjoint()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    let pointer = basis_pointer(n, a.labels().to_vec())?;
    let meter = Multimeter::normal(a.dim(), pointer, g)?;
    Ok((meter, StateVector::basis(n, 0)))
}

/// `G = Σ_i U_i ⊗ P[e_i]` on `H ⊗ C^n`; program `e_i` implements `U_i`.
pub fn push_button_channels(channels: &[Channel]) -> Result<ProgrammedMultimeter> {
    let first = channels
        .first()
        .ok_or_else(|| Error::Argument("push-button needs at least one device".into()))?;
    let dim_h = first.dim();
    let n = channels.len();
    check_total_dim(dim_h, n)?;
    let mut g = Operator::zeros(dim_h * n, dim_h * n);
    for (i, c) in channels.iter().enumerate() {
        if c.dim() != dim_h {
            return Err(Error::Shape("push-button channels act on different systems".into()));
        }
        let u = c
            .as_unitary(DEFAULT_TOL)
            .ok_or_else(|| Error::Unitarity(format!("channel {} is not unitary", i + 1)))?;
        g = &g + &tensor(u, &StateVector::basis(n, i).projector())?;
    }
    let pointer = basis_pointer(n, numbered_labels(n))?;
    let meter = Multimeter::normal(dim_h, pointer, g)?;
    let probes = (0..n).map(|i| StateVector::basis(n, i)).collect();
    Ok(ProgrammedMultimeter::new(meter, probes))
}

/// Bundles normal devices `⟨K_i, Z_i, G_i, φ_i⟩` into one multimeter on
/// `K = K_1 ⊗ … ⊗ K_n ⊗ C^n` with `G = Σ_i G_i ⊗ |i⟩⟨i|` (acting on `H ⊗ K_i`),
/// pointer `(⊗ Z_j) ⊗ I` and program states `Φ_i = (⊗ φ_j) ⊗ e_i`.
///
/// Joint pointer outcomes are labelled by comma-joined device labels.
pub fn push_button_multimeter(devices: &[(Multimeter, StateVector)]) -> Result<ProgrammedMultimeter> {
    let first = devices
        .first()
        .ok_or_else(|| Error::Argument("push-button needs at least one device".into()))?;
    let dim_h = first.0.dim_h();
    let n = devices.len();
    for (i, (m, phi)) in devices.iter().enumerate() {
        if m.dim_h() != dim_h {
            return Err(Error::Shape("push-button devices act on different systems".into()));
        }
        if !m.is_normal() {
            return Err(Error::Model(format!("device {} is not a normal multimeter", i + 1)));
        }
        if phi.dim() != m.dim_k() {
            return Err(Error::Model(format!("device {} has a mismatched probe", i + 1)));
        }
    }
    let apparatus: usize = devices
        .iter()
        .try_fold(n, |acc: usize, (m, _)| acc.checked_mul(m.dim_k()))
        .unwrap_or(usize::MAX);
    check_total_dim(dim_h, apparatus)?;

    let mut dims = vec![dim_h];
    dims.extend(devices.iter().map(|(m, _)| m.dim_k()));
    dims.push(n);
    let total = dim_h * apparatus;
    let mut g = Operator::zeros(total, total);
    for (i, (m, _)) in devices.iter().enumerate() {
        let gi = m.coupling().expect("checked normal above");
        let block = tensor(gi, &StateVector::basis(n, i).projector())?;
        g = &g + &lift(&block, &dims, &[0, i + 1, n + 1])?;
    }

    // joint pointer over outcome tuples, last device fastest
    let mut labels: Vec<Vec<usize>> = vec![vec![]];
    for (m, _) in devices {
        labels = labels
            .into_iter()
            .flat_map(|prefix| {
                (0..m.pointer().len()).map(move |x| {
                    let mut t = prefix.clone();
                    t.push(x);
                    t
                })
            })
            .collect();
    }
    let mut effects = Vec::with_capacity(labels.len());
    let mut names = Vec::with_capacity(labels.len());
    for tuple in &labels {
        let mut eff = Operator::identity(1);
        let mut name = Vec::with_capacity(n);
        for ((m, _), &x) in devices.iter().zip(tuple) {
            eff = tensor(&eff, &m.pointer().effects()[x])?;
            name.push(m.pointer().labels()[x].clone());
        }
        effects.push(tensor(&eff, &Operator::identity(n))?);
        names.push(name.join(","));
    }
    let pointer = Observable::new(apparatus, names, effects)?;
    let meter = Multimeter::normal(dim_h, pointer, g)?;

    let selector_free = devices
        .iter()
        .skip(1)
        .fold(first.1.clone(), |acc, (_, phi)| acc.tensor(phi));
    let probes = (0..n)
        .map(|i| selector_free.tensor(&StateVector::basis(n, i)))
        .collect();
    let readouts = devices
        .iter()
        .enumerate()
        .map(|(i, (m, _))| {
            let map: Vec<usize> = labels.iter().map(|t| t[i]).collect();
            StochasticKernel::deterministic(&map, m.pointer().labels().to_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProgrammedMultimeter {
        meter,
        probes,
        readouts,
    })
}

/// Push-button multimeter over minimal dilations of sharp observables.
pub fn push_button_observables(observables: &[Observable]) -> Result<ProgrammedMultimeter> {
    let devices = observables
        .iter()
        .map(minimal_dilation_multimeter)
        .collect::<Result<Vec<_>>>()?;
    push_button_multimeter(&devices)
}

/// Normal multimeter with `dim K = n · max N_i` realizing every sharp `A_l`.
///
/// `K = C^d ⊗ C^n`, coupling `G = Σ_j Σ_l A_l(j) ⊗ T_j ⊗ P[e_l]` over
/// zero-padded observables, pointer `Z(k) = P[e_k] ⊗ I` labelled `1..=d`, and
/// program states `e_0 ⊗ e_l`.
pub fn shared_pointer_multimeter(observables: &[Observable]) -> Result<ProgrammedMultimeter> {
    let first = observables
        .first()
        .ok_or_else(|| Error::Argument("shared pointer needs at least one observable".into()))?;
    let dim_h = first.dim();
    for (l, a) in observables.iter().enumerate() {
        if a.dim() != dim_h {
            return Err(Error::Shape(format!(
                "observable {} acts on C^{}, expected C^{dim_h}",
                l + 1,
                a.dim()
            )));
        }
        if !a.is_sharp(DEFAULT_TOL) {
            return Err(Error::Sharpness(format!("observable {} is not sharp", l + 1)));
        }
    }
    let n = observables.len();
    let d = observables.iter().map(Observable::len).max().unwrap_or(1);
    check_total_dim(dim_h, d * n)?;
    let mut g = Operator::zeros(dim_h * d * n, dim_h * d * n);
    for (l, a) in observables.iter().enumerate() {
        let selector = StateVector::basis(n, l).projector();
        for (j, e) in a.padded(d).effects().iter().enumerate() {
            let term = tensor(&tensor(e, &transposition(d, j).adjoint())?, &selector)?;
            g = &g + &term;
        }
    }
    let id_n = Operator::identity(n);
    let effects = (0..d)
        .map(|k| tensor(&StateVector::basis(d, k).projector(), &id_n))
        .collect::<Result<Vec<_>>>()?;
    let pointer = Observable::new(d * n, numbered_labels(d), effects)?;
    let meter = Multimeter::normal(dim_h, pointer, g)?;
    let probes = (0..n)
        .map(|l| StateVector::basis(d, 0).tensor(&StateVector::basis(n, l)))
        .collect();
    Ok(ProgrammedMultimeter::new(meter, probes))
}

/// Composite multimeter that first applies the channel programmed into
/// `channel_meter` and then runs the measurement `a_model` on the system.
///
/// The apparatus is `K ⊗ K₀`, the pointer `I_K ⊗ Z₀'` (with `Z₀'` the
/// post-processed pointer of `a_model`), and program states `φ ⊗ η` where `η`
/// is `a_model`'s probe.
pub fn concatenate_with_measurement(channel_meter: &Multimeter, a_model: &MeasurementModel) -> Result<Multimeter> {
    let inner = a_model.meter();
    if inner.dim_h() != channel_meter.dim_h() {
        return Err(Error::Shape(format!(
            "channel acts on C^{} but the measurement on C^{}",
            channel_meter.dim_h(),
            inner.dim_h()
        )));
    }
    let (dh, dk, dk0) = (channel_meter.dim_h(), channel_meter.dim_k(), inner.dim_k());
    check_total_dim(dh, dk * dk0)?;
    let dims = [dh, dk, dk0];
    let first = lift_channel(channel_meter.interaction(), &dims, &[0, 1])?;
    let second = lift_channel(inner.interaction(), &dims, &[0, 2])?;
    let kraus = second
        .iter()
        .flat_map(|b| first.iter().map(move |a| b * a))
        .collect();
    let id_k = Operator::identity(dk);
    let pointer0 = a_model.effective_pointer()?;
    let effects = pointer0
        .effects()
        .iter()
        .map(|z| tensor(&id_k, z))
        .collect::<Result<Vec<_>>>()?;
    let pointer = Observable::new(dk * dk0, pointer0.labels().to_vec(), effects)?;
    Multimeter::new(dh, pointer, Channel::new(kraus)?)
}

/// The four-dimensional Pauli multimeter on a qubit:
/// `G = Σ_{j,k} ½ σ_j σ_k σ_j ⊗ |j⟩⟨k|`, pointer `Z(j) = P[e_j]` labelled `0..3`,
/// program states `(e_0 + e_i)/√2` for `i = 1, 2, 3`.
pub fn pauli_multimeter() -> Result<ProgrammedMultimeter> {
    let mut g = Operator::zeros(8, 8);
    for j in 0..4 {
        for k in 0..4 {
            let block = (&(&pauli(j) * &pauli(k)) * &pauli(j)).scale_real(0.5);
            let unit = Operator::outer(&StateVector::basis(4, j), &StateVector::basis(4, k));
            g = &g + &tensor(&block, &unit)?;
        }
    }
    let pointer = basis_pointer(4, (0..4).map(|j| j.to_string()).collect())?;
    let meter = Multimeter::normal(2, pointer, g)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let probes = (1..=3)
        .map(|i| {
            let mut amps = [0.0; 4];
            amps[0] = s;
            amps[i] = s;
            StateVector::from_real(&amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProgrammedMultimeter::new(meter, probes))
}

/// Pauli-multimeter program state `α e_0 + Σ a_i e_i` with `α² + |a|² = 1`.
pub fn pauli_probe(alpha: f64, a: [f64; 3]) -> Result<StateVector> {
    StateVector::from_real(&[alpha, a[0], a[1], a[2]])
}

/// Merges Pauli-pointer outcomes `{0, i}` into `+` and the other two into `-`.
pub fn pauli_merge_kernel(i: usize) -> Result<StochasticKernel> {
    if !(1..=3).contains(&i) {
        return Err(Error::Argument(format!("spin axis {i} outside 1..=3")));
    }
    let map: Vec<usize> = (0..4).map(|j| usize::from(!(j == 0 || j == i))).collect();
    StochasticKernel::deterministic(&map, vec!["+".into(), "-".into()])
}

/// `G_SWAP` on `C^d ⊗ C^d` with a computational-basis pointer; program `φ`
/// implements the complete contraction onto `P[φ]`.
pub fn swap_multimeter(dim: usize) -> Result<ProgrammedMultimeter> {
    if dim == 0 {
        return Err(Error::Argument("swap dimension must be positive".into()));
    }
    check_total_dim(dim, dim)?;
    let pointer = basis_pointer(dim, numbered_labels(dim))?;
    let meter = Multimeter::normal(dim, pointer, swap(dim))?;
    let probes = (0..dim).map(|i| StateVector::basis(dim, i)).collect();
    Ok(ProgrammedMultimeter::new(meter, probes))
}

/// Eigenvector of a rank-one projection with its first nonzero entry real positive.
fn rank_one_vector(p: &Operator) -> Result<StateVector> {
    let eig = p.eigh();
    let top = eig.values.len() - 1;
    let rank = eig.values.iter().filter(|&&v| v > 0.5).count();
    if rank != 1 {
        return Err(Error::Argument(format!("effect has rank {rank}, expected 1")));
    }
    let v = &eig.vectors[top];
    let lead = v
        .amplitudes()
        .iter()
        .find(|z| z.norm() > 1e-12)
        .copied()
        .expect("eigenvector is nonzero");
    let phase = lead.conj() / lead.norm();
    StateVector::normalized(v.amplitudes().iter().map(|z| z * phase).collect())
}

/// Two-dimensional multimeter programming two sharp qubit observables `A₁`, `A₂`
/// (rank-one effects, matching labels) with orthonormal `e_0`, `e_1`:
/// `G = G_SWAP (I ⊗ P[e_0] + R ⊗ P[e_1])` with `A₂ = R* A₁ R` and pointer `A₁`.
pub fn spin_pair_multimeter(a1: &Observable, a2: &Observable) -> Result<ProgrammedMultimeter> {
    for a in [a1, a2] {
        if a.dim() != 2 || a.len() != 2 {
            return Err(Error::Shape("spin pair needs two-outcome qubit observables".into()));
        }
        if !a.is_sharp(DEFAULT_TOL) {
            return Err(Error::Sharpness("spin pair needs sharp observables".into()));
        }
    }
    if a1.labels() != a2.labels() {
        return Err(Error::Alignment(format!("{:?} vs {:?}", a1.labels(), a2.labels())));
    }
    // R = Σ_x |a1_x⟩⟨a2_x|
    let mut r = Operator::zeros(2, 2);
    for (e1, e2) in a1.effects().iter().zip(a2.effects()) {
        let v1 = rank_one_vector(e1)?;
        let v2 = rank_one_vector(e2)?;
        r = &r + &Operator::outer(&v1, &v2);
    }
    let p0 = StateVector::basis(2, 0).projector();
    let p1 = StateVector::basis(2, 1).projector();
    let control = &tensor(&Operator::identity(2), &p0)? + &tensor(&r, &p1)?;
    let g = &swap(2) * &control;
    let meter = Multimeter::normal(2, a1.clone(), g)?;
    Ok(ProgrammedMultimeter::new(
        meter,
        vec![StateVector::basis(2, 0), StateVector::basis(2, 1)],
    ))
}

/// Parameters for [`builtin_multimeter`].
#[derive(Clone, Copy, Debug)]
pub enum BuiltinParams<'a> {
    None,
    Dim(usize),
    Pair(&'a Observable, &'a Observable),
}

/// Named constructions with a one-line description.
pub const BUILTINS: &[(&str, &str)] = &[
    ("pauli", "qubit multimeter on C^4 programming E_i(j) = (I + s_j s_i s_j)/4"),
    ("swap", "swap coupling on C^d ⊗ C^d; program phi gives the contraction onto P[phi]"),
    ("spin_pair", "two-dimensional multimeter for a pair of sharp qubit observables"),
];

pub fn builtin_multimeter(name: &str, params: BuiltinParams<'_>) -> Result<ProgrammedMultimeter> {
    match (name, params) {
        ("pauli", BuiltinParams::None) => pauli_multimeter(),
        ("swap", BuiltinParams::Dim(d)) => swap_multimeter(d),
        ("swap", BuiltinParams::None) => swap_multimeter(2),
        ("spin_pair", BuiltinParams::Pair(a1, a2)) => spin_pair_multimeter(a1, a2),
        ("pauli" | "swap" | "spin_pair", p) => Err(Error::Argument(format!(
            "builtin `{name}` does not accept {p:?}"
        ))),
        _ => Err(Error::Lookup(name.to_string())),
    }
}

/// Apparatus-size bounds for programming `n` sharp observables with the given
/// outcome counts: `(max{n, N_1, …, N_n}, n · Π N_i)`.
pub fn dimension_bounds(outcome_counts: &[usize]) -> Result<(usize, usize)> {
    if outcome_counts.is_empty() {
        return Err(Error::Argument("at least one outcome count required".into()));
    }
    if outcome_counts.contains(&0) {
        return Err(Error::Argument("outcome counts must be positive".into()));
    }
    let n = outcome_counts.len();
    let lower = outcome_counts.iter().copied().max().unwrap_or(1).max(n);
    let upper = outcome_counts
        .iter()
        .try_fold(n, |acc, &x| acc.checked_mul(x))
        .ok_or_else(|| Error::Argument("upper bound overflows".into()))?;
    Ok((lower, upper))
}
