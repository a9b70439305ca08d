//! Executable checks of the programming results, with a randomized
//! counterexample search against the orthogonality no-go statements.
//!
//! Each check returns a [`VerificationReport`]. The statements being checked are
//! conditionals, so a check whose hypotheses do not hold reports
//! [`Verdict::NotApplicable`] rather than failing.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channels::{channel_distance, Channel};
use crate::error::{Error, Result};
use crate::multimeter::{minimal_dilation_multimeter, MeasurementModel, Multimeter, Probe};
use crate::observables::{random_sharp_observable_with, Observable};
use crate::operators::{tensor, DensityOperator, Operator, StateVector, C64};
use crate::random::{haar_unitary, random_density, random_state, rng, SeededRng};

/// Largest sharpness (or projection-preservation) residual still counted as sharp.
pub const SHARP_RESIDUAL: f64 = 1e-6;
/// Smallest device distance counted as "distinct".
pub const DISTINCT_THRESHOLD: f64 = 1e-3;
/// Smallest probe overlap counted as "non-orthogonal" by the search.
pub const OVERLAP_THRESHOLD: f64 = 1e-3;
/// Relative singular-value cutoff for the extremality rank tests.
pub const EXTREME_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotApplicable => "not_applicable",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub verdict: Verdict,
    #[serde(with = "residual_map")]
    pub residuals: BTreeMap<String, f64>,
    pub details: String,
}

impl VerificationReport {
    pub fn new(check_name: impl Into<String>, verdict: Verdict, details: impl Into<String>) -> Self {
        VerificationReport {
            check_name: check_name.into(),
            verdict,
            residuals: BTreeMap::new(),
            details: details.into(),
        }
    }

    /// Records a residual; negative or NaN inputs are stored as their absolute value / infinity.
    pub fn with_residual(mut self, name: &str, value: f64) -> Self {
        let v = if value.is_nan() { f64::INFINITY } else { value.abs() };
        self.residuals.insert(name.to_string(), v);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }

    fn invalid(check_name: &str, err: &Error) -> Self {
        VerificationReport::new(check_name, Verdict::NotApplicable, format!("invalid input: {err}"))
    }
}

/// Residual maps with non-finite values written as the strings `"inf"`, `"-inf"`, `"nan"`.
mod residual_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Value {
        Finite(f64),
        Special(String),
    }

    pub fn serialize<S: Serializer>(map: &BTreeMap<String, f64>, s: S) -> Result<S::Ok, S::Error> {
        let encoded: BTreeMap<&String, Value> = map
            .iter()
            .map(|(k, &v)| {
                let value = if v.is_finite() {
                    Value::Finite(v)
                } else if v.is_nan() {
                    Value::Special("nan".into())
                } else if v > 0.0 {
                    Value::Special("inf".into())
                } else {
                    Value::Special("-inf".into())
                };
                (k, value)
            })
            .collect();
        encoded.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, f64>, D::Error> {
        let encoded = BTreeMap::<String, Value>::deserialize(d)?;
        encoded
            .into_iter()
            .map(|(k, v)| {
                let x = match v {
                    Value::Finite(x) => x,
                    Value::Special(tag) => match tag.as_str() {
                        "inf" => f64::INFINITY,
                        "-inf" => f64::NEG_INFINITY,
                        "nan" => f64::NAN,
                        other => return Err(serde::de::Error::custom(format!("bad residual `{other}`"))),
                    },
                };
                Ok((k, x))
            })
            .collect()
    }
}

/// A programmed device: either a measured observable or an implemented channel.
#[derive(Clone, Debug)]
pub enum Device {
    Observable(Observable),
    Channel(Channel),
}

impl Device {
    /// Flat coordinates: effects in outcome order, or the Choi matrix.
    fn coordinates(&self) -> Vec<C64> {
        match self {
            Device::Observable(o) => o
                .effects()
                .iter()
                .flat_map(|e| e.matrix().iter().copied().collect::<Vec<_>>())
                .collect(),
            Device::Channel(c) => c.choi().matrix().iter().copied().collect(),
        }
    }

    fn is_sharp_like(&self) -> bool {
        match self {
            Device::Observable(o) => o.sharpness_residual() <= SHARP_RESIDUAL,
            Device::Channel(c) => c.projection_preservation_residual() <= SHARP_RESIDUAL,
        }
    }
}

fn induce(model: &MeasurementModel, like: &Device) -> Result<Device> {
    Ok(match like {
        Device::Observable(_) => Device::Observable(model.induced_observable()?),
        Device::Channel(_) => Device::Channel(model.induced_channel()?),
    })
}

fn coordinate_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn combine(weights: &[f64], devices: &[Vec<C64>]) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); devices[0].len()];
    for (w, d) in weights.iter().zip(devices) {
        for (o, x) in out.iter_mut().zip(d) {
            *o += x * *w;
        }
    }
    out
}

/// Least-squares weights expressing `target` in the real span of `devices`,
/// or `None` when the devices are not linearly independent.
fn fit_weights(target: &[C64], devices: &[Vec<C64>]) -> Option<Vec<f64>> {
    let n = devices.len();
    let inner = |a: &[C64], b: &[C64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum() };
    let gram = DMatrix::from_fn(n, n, |i, j| inner(&devices[i], &devices[j]));
    let rhs = DVector::from_fn(n, |i, _| inner(&devices[i], target));
    let sv = gram.clone().singular_values();
    let max = sv.max();
    if max <= 0.0 || sv.min() <= 1e-10 * max {
        return None;
    }
    gram.lu().solve(&rhs).map(|w| w.iter().copied().collect())
}

fn orthogonality_verdict(
    name: &str,
    applies: bool,
    why_not: &str,
    overlap: f64,
    tol: f64,
) -> (Verdict, String) {
    if !applies {
        return (Verdict::NotApplicable, why_not.to_string());
    }
    if overlap <= tol {
        (Verdict::Pass, format!("{name}: distinct devices programmed by orthogonal states"))
    } else {
        (
            Verdict::Fail,
            format!("{name}: |<phi1,phi2>| = {overlap:e} > tol = {tol:e} for distinct devices"),
        )
    }
}

/// Orthogonality of programs for sharp observables: if `φ₁`, `φ₂` program distinct
/// sharp observables (or, on a normal multimeter, a sharp and an extreme one),
/// then `⟨φ₁, φ₂⟩ = 0`.
pub fn check_sharp_program_orthogonality(
    m: &Multimeter,
    phi1: &StateVector,
    phi2: &StateVector,
    tol: f64,
) -> VerificationReport {
    const NAME: &str = "sharp_program_orthogonality";
    let induced = (|| -> Result<(Observable, Observable)> {
        Ok((
            m.program(phi1)?.induced_observable()?,
            m.program(phi2)?.induced_observable()?,
        ))
    })();
    let (e1, e2) = match induced {
        Ok(pair) => pair,
        Err(err) => return VerificationReport::invalid(NAME, &err),
    };
    let (r1, r2) = (e1.sharpness_residual(), e2.sharpness_residual());
    let distance = e1.positional_distance(&e2).unwrap_or(f64::INFINITY);
    let overlap = phi1.overlap(phi2);
    let (s1, s2) = (r1 <= SHARP_RESIDUAL, r2 <= SHARP_RESIDUAL);
    let sharp_pair = s1 && s2;
    let mixed_pair = m.is_normal()
        && ((s1 && e2.is_extreme(EXTREME_TOL)) || (s2 && e1.is_extreme(EXTREME_TOL)));
    let distinct = distance > DISTINCT_THRESHOLD;
    let why_not = if !distinct {
        "induced observables are equal".to_string()
    } else if !(s1 || s2) {
        "neither induced observable is sharp".to_string()
    } else {
        "one induced observable is sharp but the other is not sharp (or not extreme on a normal multimeter)".to_string()
    };
    let (verdict, details) =
        orthogonality_verdict(NAME, distinct && (sharp_pair || mixed_pair), &why_not, overlap, tol);
    VerificationReport::new(NAME, verdict, details)
        .with_residual("sharpness_residual_1", r1)
        .with_residual("sharpness_residual_2", r2)
        .with_residual("overlap", overlap)
        .with_residual("distance", distance)
}

/// The sharp-orthogonality check on two measurement models of one multimeter.
///
/// Models with the same kernel share the smeared pointer and are checked as a
/// multimeter; differing kernels leave no common pointer, so the check does not apply.
pub fn check_model_orthogonality(a: &MeasurementModel, b: &MeasurementModel, tol: f64) -> VerificationReport {
    const NAME: &str = "sharp_program_orthogonality";
    let same_kernel = match (a.kernel(), b.kernel()) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y,
        _ => false,
    };
    if !same_kernel {
        return VerificationReport::new(
            NAME,
            Verdict::NotApplicable,
            "models use different post-processing kernels, so they share no pointer",
        );
    }
    let (Probe::Pure(phi1), Probe::Pure(phi2)) = (a.probe(), b.probe()) else {
        return VerificationReport::new(NAME, Verdict::NotApplicable, "probes are not pure");
    };
    match a.smeared() {
        Ok(smeared) => check_sharp_program_orthogonality(smeared.meter(), phi1, phi2, tol),
        Err(err) => VerificationReport::invalid(NAME, &err),
    }
}

/// Orthogonality of programs for unitary channels: distinct unitary channels (or,
/// on a normal multimeter, a unitary and an extreme channel) need orthogonal programs.
pub fn check_channel_program_orthogonality(
    m: &Multimeter,
    phi1: &StateVector,
    phi2: &StateVector,
    tol: f64,
) -> VerificationReport {
    const NAME: &str = "channel_program_orthogonality";
    let induced = (|| -> Result<(Channel, Channel)> {
        Ok((
            m.program(phi1)?.induced_channel()?,
            m.program(phi2)?.induced_channel()?,
        ))
    })();
    let (c1, c2) = match induced {
        Ok(pair) => pair,
        Err(err) => return VerificationReport::invalid(NAME, &err),
    };
    let (r1, r2) = (
        c1.projection_preservation_residual(),
        c2.projection_preservation_residual(),
    );
    let distance = channel_distance(&c1, &c2).unwrap_or(f64::INFINITY);
    let overlap = phi1.overlap(phi2);
    let (u1, u2) = (r1 <= SHARP_RESIDUAL, r2 <= SHARP_RESIDUAL);
    let unitary_pair = u1 && u2;
    let mixed_pair = m.is_normal()
        && ((u1 && c2.is_extreme_channel(EXTREME_TOL)) || (u2 && c1.is_extreme_channel(EXTREME_TOL)));
    let distinct = distance > DISTINCT_THRESHOLD;
    let why_not = if !distinct {
        "induced channels are equal".to_string()
    } else if !(u1 || u2) {
        "neither induced channel is unitary".to_string()
    } else {
        "one induced channel is unitary but the other is not unitary (or not extreme on a normal multimeter)".to_string()
    };
    let (verdict, details) =
        orthogonality_verdict(NAME, distinct && (unitary_pair || mixed_pair), &why_not, overlap, tol);
    VerificationReport::new(NAME, verdict, details)
        .with_residual("multiplicativity_residual_1", r1)
        .with_residual("multiplicativity_residual_2", r2)
        .with_residual("overlap", overlap)
        .with_residual("distance", distance)
}

/// Convex-hull check for a normal multimeter with an orthonormal basis of
/// programs `φ_i` for sharp observables (or unitary channels) `D_i`:
/// every pure probe `ψ` induces `Σ |⟨φ_i, ψ⟩|² D_i`, and a mixed probe `ξ`
/// induces `Σ ⟨φ_i|ξ|φ_i⟩ D_i`.
///
/// Runs `trials` random pure probes and `trials` random mixed probes.
pub fn check_convex_hull(
    m: &Multimeter,
    programmed: &[(StateVector, Device)],
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<VerificationReport> {
    const NAME: &str = "convex_hull";
    let dk = m.dim_k();
    if programmed.len() != dk {
        return Err(Error::Hypothesis(format!(
            "{} programs for an apparatus of dimension {dk}",
            programmed.len()
        )));
    }
    if !m.is_normal() {
        return Err(Error::Hypothesis("multimeter is not normal".into()));
    }
    for (i, (phi, _)) in programmed.iter().enumerate() {
        for (psi, _) in &programmed[..i] {
            if phi.overlap(psi) > 1e-9 {
                return Err(Error::Hypothesis("programs are not orthonormal".into()));
            }
        }
    }
    let mut devices = Vec::with_capacity(dk);
    for (i, (phi, device)) in programmed.iter().enumerate() {
        if !device.is_sharp_like() {
            return Err(Error::Hypothesis(format!("device {} is not sharp or unitary", i + 1)));
        }
        let induced = induce(&m.program(phi)?, device)?;
        let coords = device.coordinates();
        let gap = coordinate_distance(&induced.coordinates(), &coords);
        if gap > tol.max(1e-9) {
            return Err(Error::Hypothesis(format!(
                "program {} induces a device at distance {gap:e} from the one given",
                i + 1
            )));
        }
        devices.push(coords);
    }

    let mut r = rng(seed);
    let mut device_residual = 0.0f64;
    let mut weight_error = 0.0f64;
    let mut identifiable = true;
    let mut record = |probe: Probe, weights: Vec<f64>| -> Result<()> {
        let model = MeasurementModel::new(m.clone(), probe, None)?;
        let induced = induce(&model, &programmed[0].1)?.coordinates();
        device_residual = device_residual.max(coordinate_distance(&induced, &combine(&weights, &devices)));
        match fit_weights(&induced, &devices) {
            Some(fitted) => {
                for (f, w) in fitted.iter().zip(&weights) {
                    weight_error = weight_error.max((f - w).abs());
                }
            }
            None => identifiable = false,
        }
        Ok(())
    };
    for t in 0..trials {
        let psi = if t == 0 {
            programmed[0].0.clone()
        } else {
            random_state(dk, &mut r)
        };
        let weights = programmed.iter().map(|(phi, _)| phi.overlap(&psi).powi(2)).collect();
        record(Probe::Pure(psi), weights)?;

        let rank = r.random_range(2..=dk.max(2));
        let xi = random_density(dk, rank, &mut r);
        let weights = programmed
            .iter()
            .map(|(phi, _)| xi.operator().trace_product(&phi.projector()).re)
            .collect();
        record(Probe::Mixed(xi), weights)?;
    }
    let verdict = if device_residual <= tol && weight_error <= tol {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let details = match verdict {
        Verdict::Pass => format!("{} probes induce the predicted mixtures", 2 * trials),
        _ => format!(
            "device residual {device_residual:e} or weight error {weight_error:e} exceeds tol = {tol:e}"
        ),
    };
    let details = if identifiable {
        details
    } else {
        format!("{details}; devices are linearly dependent, weights not identifiable")
    };
    Ok(VerificationReport::new(NAME, verdict, details)
        .with_residual("device_residual", device_residual)
        .with_residual("weight_error", weight_error))
}

/// Purification check: when a mixed probe induces an extreme device, every
/// eigenvector of the probe induces that same device.
pub fn check_purification(m: &Multimeter, mixed_probe: &DensityOperator, tol: f64) -> VerificationReport {
    const NAME: &str = "purification";
    let components = mixed_probe.spectral(1e-12);
    if components.len() < 2 {
        return VerificationReport::new(NAME, Verdict::NotApplicable, "probe is pure");
    }
    let outcome = (|| -> Result<VerificationReport> {
        let model = MeasurementModel::new(m.clone(), Probe::Mixed(mixed_probe.clone()), None)?;
        let e = model.induced_observable()?;
        let c = model.induced_channel()?;
        let (obs_extreme, ch_extreme) = (e.is_extreme(EXTREME_TOL), c.is_extreme_channel(EXTREME_TOL));
        let mut obs_spread = 0.0f64;
        let mut ch_spread = 0.0f64;
        for (_, psi) in &components {
            let part = m.program(psi)?;
            obs_spread = obs_spread.max(part.induced_observable()?.positional_distance(&e)?);
            ch_spread = ch_spread.max(channel_distance(&part.induced_channel()?, &c)?);
        }
        let weights: Vec<String> = components.iter().map(|(w, _)| format!("{w:.6}")).collect();
        let mut report = if !(obs_extreme || ch_extreme) {
            VerificationReport::new(
                NAME,
                Verdict::NotApplicable,
                format!(
                    "induced devices are not extreme; they are the mixture with weights [{}] of the component devices",
                    weights.join(", ")
                ),
            )
        } else {
            let mut worst = 0.0f64;
            let mut which = Vec::new();
            if obs_extreme {
                worst = worst.max(obs_spread);
                which.push("observable");
            }
            if ch_extreme {
                worst = worst.max(ch_spread);
                which.push("channel");
            }
            if worst <= tol {
                VerificationReport::new(
                    NAME,
                    Verdict::Pass,
                    format!("extreme {} induced identically by every probe eigenvector", which.join(" and ")),
                )
            } else {
                VerificationReport::new(
                    NAME,
                    Verdict::Fail,
                    format!(
                        "extreme {} differs across probe eigenvectors: {worst:e} > tol = {tol:e}",
                        which.join(" and ")
                    ),
                )
            }
        };
        report = report
            .with_residual("observable_component_spread", obs_spread)
            .with_residual("channel_component_spread", ch_spread);
        Ok(report)
    })();
    outcome.unwrap_or_else(|err| VerificationReport::invalid(NAME, &err))
}

/// What the counterexample search counts as a violation of the orthogonality
/// statement: both induced observables within `sharp_residual` of sharp,
/// probe overlap at least `overlap`, device distance at least `distance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchThresholds {
    pub sharp_residual: f64,
    pub overlap: f64,
    pub distance: f64,
}

impl Default for SearchThresholds {
    fn default() -> Self {
        SearchThresholds {
            sharp_residual: SHARP_RESIDUAL,
            overlap: OVERLAP_THRESHOLD,
            distance: DISTINCT_THRESHOLD,
        }
    }
}

const PENALTY: f64 = 10.0;
const REFINE_CANDIDATES: usize = 4;
const REFINE_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, Default)]
struct Sample {
    sharpness: f64,
    overlap: f64,
    distance: f64,
}

impl Sample {
    fn violates(&self, th: &SearchThresholds) -> bool {
        self.sharpness <= th.sharp_residual && self.overlap >= th.overlap && self.distance >= th.distance
    }

    fn score(&self, th: &SearchThresholds) -> f64 {
        self.sharpness
            + PENALTY * (th.overlap - self.overlap).max(0.0)
            + PENALTY * (th.distance - self.distance).max(0.0)
    }
}

fn evaluate(meter: &Multimeter, phi1: &StateVector, phi2: &StateVector) -> Result<Sample> {
    let e1 = meter.program(phi1)?.induced_observable_normal()?;
    let e2 = meter.program(phi2)?.induced_observable_normal()?;
    Ok(Sample {
        sharpness: e1.sharpness_residual().max(e2.sharpness_residual()),
        overlap: phi1.overlap(phi2),
        distance: e1.positional_distance(&e2)?,
    })
}

fn basis_pointer(dk: usize) -> Result<Observable> {
    let effects = (0..dk).map(|k| StateVector::basis(dk, k).projector()).collect();
    Observable::numbered(dk, effects)
}

/// `cos θ e_b + sin θ e^{iχ} e_a`.
fn tilted(dk: usize, a: usize, b: usize, r: &mut SeededRng) -> StateVector {
    let theta: f64 = r.random_range(0.0..std::f64::consts::FRAC_PI_2);
    let chi: f64 = r.random_range(0.0..std::f64::consts::TAU);
    let mut amps = vec![C64::new(0.0, 0.0); dk];
    amps[b] += C64::new(theta.cos(), 0.0);
    amps[a] += C64::from_polar(theta.sin(), chi);
    StateVector::normalized(amps).expect("nonzero")
}

/// One random trial: a normal multimeter and a probe pair.
fn sample_trial(dh: usize, dk: usize, pointer: &Observable, r: &mut SeededRng) -> Result<(Multimeter, StateVector, StateVector)> {
    let pick = |r: &mut SeededRng| -> (usize, usize) {
        let a = r.random_range(0..dk);
        let b = if dk > 1 { (a + r.random_range(1..dk)) % dk } else { a };
        (a, b)
    };
    match r.random_range(0..3u8) {
        // Haar coupling, Haar probes
        0 => {
            let g = haar_unitary(dh * dk, r);
            let meter = Multimeter::normal(dh, pointer.clone(), g)?;
            Ok((meter, random_state(dk, r), random_state(dk, r)))
        }
        // controlled unitary Σ U_i ⊗ P[e_i] with a basis probe and a tilted one
        1 => {
            let mut g = Operator::zeros(dh * dk, dh * dk);
            for i in 0..dk {
                g = &g + &tensor(&haar_unitary(dh, r), &StateVector::basis(dk, i).projector())?;
            }
            let meter = Multimeter::normal(dh, pointer.clone(), g)?;
            let (a, b) = pick(r);
            Ok((meter, StateVector::basis(dk, a), tilted(dk, a, b, r)))
        }
        // minimal dilation of a random sharp observable, probes near e_0
        _ => {
            let n = dk.min(dh);
            let a = random_sharp_observable_with(dh, n, r)?.padded(dk);
            let (dil, _) = minimal_dilation_multimeter(&a)?;
            let g = dil.coupling().expect("minimal dilation is normal").clone();
            let meter = Multimeter::normal(dh, pointer.clone(), g)?;
            let (a, b) = pick(r);
            Ok((meter, StateVector::basis(dk, a), tilted(dk, a, b, r)))
        }
    }
}

/// Coordinate-wise complex perturbation of the probe pair with geometric step decay.
fn refine(
    meter: &Multimeter,
    mut phi1: StateVector,
    mut phi2: StateVector,
    th: &SearchThresholds,
) -> (Sample, StateVector, StateVector) {
    let mut best = evaluate(meter, &phi1, &phi2).unwrap_or(Sample {
        sharpness: f64::INFINITY,
        ..Sample::default()
    });
    let dk = phi1.dim();
    let mut step = 0.1;
    let directions = [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)];
    for _ in 0..REFINE_STEPS {
        let mut improved = false;
        for which in 0..2 {
            for k in 0..dk {
                for dir in directions {
                    let base = if which == 0 { &phi1 } else { &phi2 };
                    let mut amps = base.amplitudes().to_vec();
                    amps[k] += dir * step;
                    let Ok(candidate) = StateVector::normalized(amps) else {
                        continue;
                    };
                    let trial = if which == 0 {
                        evaluate(meter, &candidate, &phi2)
                    } else {
                        evaluate(meter, &phi1, &candidate)
                    };
                    if let Ok(s) = trial {
                        if s.score(th) < best.score(th) {
                            best = s;
                            improved = true;
                            if which == 0 {
                                phi1 = candidate;
                            } else {
                                phi2 = candidate;
                            }
                        }
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
            if step < 1e-12 {
                break;
            }
        }
    }
    (best, phi1, phi2)
}

/// Randomized search for a normal multimeter on `C^dim_h ⊗ C^dim_k` (pointer:
/// computational basis) with two non-orthogonal programs for distinct sharp
/// observables. Passes iff no sample meets all three thresholds.
pub fn counterexample_search(
    dim_h: usize,
    dim_k: usize,
    trials: usize,
    seed: u64,
    thresholds: SearchThresholds,
) -> VerificationReport {
    const NAME: &str = "counterexample_search";
    if dim_h == 0 || dim_k == 0 || dim_h > 6 || dim_k > 6 {
        return VerificationReport::new(NAME, Verdict::NotApplicable, "dimensions must lie in 1..=6");
    }
    let pointer = match basis_pointer(dim_k) {
        Ok(p) => p,
        Err(err) => return VerificationReport::invalid(NAME, &err),
    };
    let th = thresholds;
    let mut r = rng(seed);
    let mut violations = 0usize;
    let mut first_violation: Option<Sample> = None;
    let mut floor = f64::INFINITY;
    let mut candidates: Vec<(f64, Multimeter, StateVector, StateVector)> = Vec::new();
    let mut note = |s: &Sample, violations: &mut usize, first: &mut Option<Sample>| {
        if s.overlap >= th.overlap && s.distance >= th.distance {
            floor = floor.min(s.sharpness);
        }
        if s.violates(&th) {
            *violations += 1;
            first.get_or_insert(*s);
        }
    };
    for _ in 0..trials {
        let Ok((meter, phi1, phi2)) = sample_trial(dim_h, dim_k, &pointer, &mut r) else {
            continue;
        };
        let Ok(s) = evaluate(&meter, &phi1, &phi2) else {
            continue;
        };
        note(&s, &mut violations, &mut first_violation);
        let score = s.score(&th);
        if candidates.len() < REFINE_CANDIDATES || score < candidates.last().map_or(f64::INFINITY, |c| c.0) {
            candidates.push((score, meter, phi1, phi2));
            candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
            candidates.truncate(REFINE_CANDIDATES);
        }
    }
    let mut best_score = f64::INFINITY;
    for (score, meter, phi1, phi2) in &candidates {
        best_score = best_score.min(*score);
        let (s, _, _) = refine(meter, phi1.clone(), phi2.clone(), &th);
        note(&s, &mut violations, &mut first_violation);
        best_score = best_score.min(s.score(&th));
    }
    let verdict = if violations == 0 { Verdict::Pass } else { Verdict::Fail };
    let details = match first_violation {
        None => format!(
            "no violation in {trials} trials on C^{dim_h} ⊗ C^{dim_k} (sharpness ≤ {:e}, overlap ≥ {:e}, distance ≥ {:e})",
            th.sharp_residual, th.overlap, th.distance
        ),
        Some(s) => format!(
            "violation: sharpness residual {:e} ≤ {:e}, overlap {:e} ≥ {:e}, distance {:e} ≥ {:e}",
            s.sharpness, th.sharp_residual, s.overlap, th.overlap, s.distance, th.distance
        ),
    };
    let mut report = VerificationReport::new(NAME, verdict, details)
        .with_residual("best_score", best_score)
        .with_residual("violations", violations as f64)
        .with_residual("trials", trials as f64);
    if floor.is_finite() {
        report = report.with_residual("sharpness_floor", floor);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::unitary_channel;
    use crate::multimeter::{pauli_multimeter, push_button_channels, spin_pair_multimeter, swap_multimeter};
    use crate::observables::axis_spin;
    use crate::operators::{hadamard, pauli};

    #[test]
    fn spin_pair_orthogonality_passes() {
        let sp = spin_pair_multimeter(&axis_spin(1), &axis_spin(3)).unwrap();
        let r = check_sharp_program_orthogonality(&sp.meter, &sp.probes[0], &sp.probes[1], 1e-10);
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);
        assert_eq!(r.residuals["overlap"], 0.0);
    }

    #[test]
    fn equal_probes_not_applicable() {
        let sp = spin_pair_multimeter(&axis_spin(1), &axis_spin(3)).unwrap();
        let r = check_sharp_program_orthogonality(&sp.meter, &sp.probes[0], &sp.probes[0], 1e-10);
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(r.details.contains("equal"));
    }

    #[test]
    fn pauli_without_kernels_not_applicable() {
        let pm = pauli_multimeter().unwrap();
        let r = check_sharp_program_orthogonality(&pm.meter, &pm.probes[0], &pm.probes[1], 1e-10);
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(r.details.contains("neither"));
    }

    #[test]
    fn pauli_models_with_different_kernels_not_applicable() {
        use crate::multimeter::pauli_merge_kernel;
        let pm = pauli_multimeter().unwrap();
        let m1 = pm.meter.program(&pm.probes[0]).unwrap().with_kernel(pauli_merge_kernel(1).unwrap()).unwrap();
        let m2 = pm.meter.program(&pm.probes[1]).unwrap().with_kernel(pauli_merge_kernel(2).unwrap()).unwrap();
        assert_eq!(check_model_orthogonality(&m1, &m2, 1e-10).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn push_button_channels_orthogonal() {
        let pb = push_button_channels(&[Channel::identity(2), unitary_channel(&pauli(1)).unwrap()]).unwrap();
        let r = check_channel_program_orthogonality(&pb.meter, &pb.probes[0], &pb.probes[1], 1e-10);
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);
    }

    #[test]
    fn swap_contractions_not_applicable() {
        let sw = swap_multimeter(2).unwrap();
        let phi = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let r = check_channel_program_orthogonality(&sw.meter, &phi, &psi, 1e-10);
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(r.details.contains("neither"));
    }

    #[test]
    fn product_coupling_channels_equal() {
        let g = tensor(&hadamard(), &Operator::identity(2)).unwrap();
        let meter = Multimeter::normal(2, basis_pointer(2).unwrap(), g).unwrap();
        let phi = StateVector::from_real(&[1.0, 0.0]).unwrap();
        let psi = StateVector::from_real(&[0.6, 0.8]).unwrap();
        let r = check_channel_program_orthogonality(&meter, &phi, &psi, 1e-10);
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(r.details.contains("equal"));
    }

    #[test]
    fn convex_hull_for_push_button_and_spin_pair() {
        let chans = [Channel::identity(2), unitary_channel(&pauli(1)).unwrap()];
        let pb = push_button_channels(&chans).unwrap();
        let programmed: Vec<_> = pb.probes.iter().cloned().zip(chans.iter().cloned().map(Device::Channel)).collect();
        let r = check_convex_hull(&pb.meter, &programmed, 5, 1, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);

        let sp = spin_pair_multimeter(&axis_spin(1), &axis_spin(3)).unwrap();
        let programmed = vec![
            (sp.probes[0].clone(), Device::Observable(axis_spin(1))),
            (sp.probes[1].clone(), Device::Observable(axis_spin(3))),
        ];
        let r = check_convex_hull(&sp.meter, &programmed, 5, 2, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);
    }

    #[test]
    fn convex_hull_needs_full_basis() {
        let chans = [Channel::identity(2), unitary_channel(&pauli(1)).unwrap()];
        let pb = push_button_channels(&chans).unwrap();
        let programmed = vec![(pb.probes[0].clone(), Device::Channel(chans[0].clone()))];
        assert!(matches!(check_convex_hull(&pb.meter, &programmed, 1, 1, 1e-10), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn purification_of_unitary_coupling() {
        let g = tensor(&hadamard(), &Operator::identity(3)).unwrap();
        let meter = Multimeter::normal(2, basis_pointer(3).unwrap(), g).unwrap();
        let xi = random_density(3, 2, &mut rng(4));
        let r = check_purification(&meter, &xi, 1e-10);
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);
        let pure = DensityOperator::pure(&StateVector::basis(3, 0));
        assert_eq!(check_purification(&meter, &pure, 1e-10).verdict, Verdict::NotApplicable);
    }

    #[test]
    fn search_passes_and_sanity_inversion_fails() {
        let r = counterexample_search(2, 2, 300, 7, SearchThresholds::default());
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.details);
        let loose = SearchThresholds {
            overlap: 0.0,
            ..SearchThresholds::default()
        };
        let r = counterexample_search(2, 2, 300, 7, loose);
        assert_eq!(r.verdict, Verdict::Fail, "{}", r.details);
    }

    #[test]
    fn search_is_deterministic() {
        let a = counterexample_search(2, 3, 100, 11, SearchThresholds::default());
        let b = counterexample_search(2, 3, 100, 11, SearchThresholds::default());
        assert_eq!(a, b);
    }

    #[test]
    fn verdict_serializes_snake_case() {
        let r = VerificationReport::new("x", Verdict::NotApplicable, "").with_residual("overlap", -0.5);
        assert_eq!(r.residuals["overlap"], 0.5);
        assert_eq!(Verdict::NotApplicable.to_string(), "not_applicable");
    }
}
