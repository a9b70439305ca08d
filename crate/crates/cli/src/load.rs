//! Builds scenario objects in file order and resolves every run into an
//! executable plan, so reference and dimension errors surface before any run.

use std::collections::HashMap;

use progmeter::channels::unitary_channel;
use progmeter::multimeter::{
    builtin_multimeter, concatenate_with_measurement, minimal_dilation_multimeter, push_button_channels,
    push_button_observables, shared_pointer_multimeter, BuiltinParams, ProgrammedMultimeter,
};
use progmeter::observables::{random_sharp_observable_with, spin_observable};
use progmeter::random::{haar_unitary, random_density, random_state, rng, SeededRng};
use progmeter::verify::{Device, SearchThresholds};
use progmeter::{
    Channel, DensityOperator, MeasurementModel, Multimeter, Observable, Operator, Probe, StateVector,
    StochasticKernel, C64, DEFAULT_TOL,
};

use crate::error::ScenarioError;
use crate::scenario::{CheckKind, Matrix, MatrixRef, Number, ObjectDef, ProbeRef, RunDef, Scenario};

const DEFAULT_TRIALS: usize = 10;
const DEFAULT_SEARCH_TRIALS: usize = 1000;

/// Command-line overrides applied on top of the scenario.
#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Clone, Debug)]
pub enum Object {
    Observable(Observable),
    Kernel(StochasticKernel),
    State(StateVector),
    Density(DensityOperator),
    Unitary(Operator),
    Channel(Channel),
    Meter(ProgrammedMultimeter),
}

impl Object {
    fn kind(&self) -> &'static str {
        match self {
            Object::Observable(_) => "an observable",
            Object::Kernel(_) => "a kernel",
            Object::State(_) => "a state",
            Object::Density(_) => "a density operator",
            Object::Unitary(_) => "a unitary",
            Object::Channel(_) => "a channel",
            Object::Meter(_) => "a multimeter",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Expectation {
    Observable(String, Observable),
    Channel(String, Channel),
}

/// A resolved run.
#[derive(Clone, Debug)]
pub enum Plan {
    Program {
        name: String,
        model: MeasurementModel,
        expect: Vec<Expectation>,
        tol: f64,
    },
    Orthogonality {
        name: String,
        check: CheckKind,
        meter: Multimeter,
        probes: [StateVector; 2],
        tol: f64,
    },
    ConvexHull {
        name: String,
        meter: Multimeter,
        programmed: Vec<(StateVector, Device)>,
        trials: usize,
        seed: u64,
        tol: f64,
    },
    Purification {
        name: String,
        meter: Multimeter,
        probe: Probe,
        tol: f64,
    },
    Search {
        name: String,
        dim_h: usize,
        dim_k: usize,
        trials: usize,
        seed: u64,
        thresholds: SearchThresholds,
    },
    Bounds {
        name: String,
        counts: Vec<usize>,
        expect: Option<(usize, usize)>,
    },
}

fn validation(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

fn dimension(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Dimension(msg.into())
}

fn number(n: &Number) -> C64 {
    match *n {
        Number::Real(x) => C64::new(x, 0.0),
        Number::Complex([re, im]) => C64::new(re, im),
    }
}

fn matrix(what: &str, m: &Matrix) -> Result<Operator, ScenarioError> {
    let rows: Vec<Vec<C64>> = m.iter().map(|row| row.iter().map(number).collect()).collect();
    Operator::from_rows(&rows).map_err(|e| ScenarioError::from_core(what, e))
}

struct Registry {
    objects: HashMap<String, Object>,
    rng: Option<SeededRng>,
}

impl Registry {
    fn get(&self, name: &str) -> Result<&Object, ScenarioError> {
        self.objects.get(name).ok_or_else(|| {
            ScenarioError::Reference(format!("`{name}` is not defined (objects may only refer to earlier ones)"))
        })
    }

    fn wrong(name: &str, found: &Object, wanted: &str) -> ScenarioError {
        validation(format!("`{name}` is {}, expected {wanted}", found.kind()))
    }

    fn observable(&self, name: &str) -> Result<&Observable, ScenarioError> {
        match self.get(name)? {
            Object::Observable(o) => Ok(o),
            other => Err(Self::wrong(name, other, "an observable")),
        }
    }

    fn kernel(&self, name: &str) -> Result<&StochasticKernel, ScenarioError> {
        match self.get(name)? {
            Object::Kernel(k) => Ok(k),
            other => Err(Self::wrong(name, other, "a kernel")),
        }
    }

    fn state(&self, name: &str) -> Result<&StateVector, ScenarioError> {
        match self.get(name)? {
            Object::State(v) => Ok(v),
            other => Err(Self::wrong(name, other, "a state")),
        }
    }

    fn unitary(&self, r: &MatrixRef, what: &str) -> Result<Operator, ScenarioError> {
        match r {
            MatrixRef::Inline(m) => matrix(what, m),
            MatrixRef::Name(name) => match self.get(name)? {
                Object::Unitary(u) => Ok(u.clone()),
                other => Err(Self::wrong(name, other, "a unitary")),
            },
        }
    }

    /// Channels, with unitaries promoted to unitary channels.
    fn channel(&self, name: &str) -> Result<Channel, ScenarioError> {
        match self.get(name)? {
            Object::Channel(c) => Ok(c.clone()),
            Object::Unitary(u) => unitary_channel(u).map_err(|e| ScenarioError::from_core(name, e)),
            other => Err(Self::wrong(name, other, "a channel")),
        }
    }

    fn meter(&self, name: &str) -> Result<&ProgrammedMultimeter, ScenarioError> {
        match self.get(name)? {
            Object::Meter(m) => Ok(m),
            other => Err(Self::wrong(name, other, "a multimeter")),
        }
    }

    fn device(&self, name: &str) -> Result<Device, ScenarioError> {
        match self.get(name)? {
            Object::Observable(o) => Ok(Device::Observable(o.clone())),
            Object::Channel(_) | Object::Unitary(_) => Ok(Device::Channel(self.channel(name)?)),
            other => Err(Self::wrong(name, other, "an observable or channel")),
        }
    }

    fn probe(&self, meter: &ProgrammedMultimeter, r: &ProbeRef, meter_name: &str) -> Result<Probe, ScenarioError> {
        let probe = match r {
            ProbeRef::Index(i) => {
                let v = i.checked_sub(1).and_then(|k| meter.probes.get(k)).ok_or_else(|| {
                    ScenarioError::Reference(format!(
                        "`{meter_name}` has {} program states, no state {i}",
                        meter.probes.len()
                    ))
                })?;
                Probe::Pure(v.clone())
            }
            ProbeRef::Name(name) => match self.get(name)? {
                Object::State(v) => Probe::Pure(v.clone()),
                Object::Density(rho) => Probe::Mixed(rho.clone()),
                other => return Err(Self::wrong(name, other, "a state or density operator")),
            },
        };
        if probe.dim() != meter.meter.dim_k() {
            return Err(dimension(format!(
                "probe has dimension {} but `{meter_name}` has dim K = {}",
                probe.dim(),
                meter.meter.dim_k()
            )));
        }
        Ok(probe)
    }

    fn pure_probe(&self, meter: &ProgrammedMultimeter, r: &ProbeRef, meter_name: &str) -> Result<StateVector, ScenarioError> {
        match self.probe(meter, r, meter_name)? {
            Probe::Pure(v) => Ok(v),
            Probe::Mixed(_) => Err(validation("this check needs pure program states")),
        }
    }

    fn rng(&mut self, name: &str) -> Result<&mut SeededRng, ScenarioError> {
        self.rng
            .as_mut()
            .ok_or_else(|| validation(format!("`{name}` is random but the scenario has no seed")))
    }

    fn build(&mut self, name: &str, spec: &ObjectDef) -> Result<Object, ScenarioError> {
        let core = |e| ScenarioError::from_core(name, e);
        Ok(match spec {
            ObjectDef::Observable { effects, random_sharp } => match (effects, random_sharp) {
                (Some(effects), None) => {
                    let mut labels = Vec::new();
                    let mut ops = Vec::new();
                    for (label, m) in effects {
                        labels.push(label.clone());
                        ops.push(matrix(name, m)?);
                    }
                    let dim = ops.first().map_or(0, Operator::dim_out);
                    if ops.iter().any(|e| e.dim_out() != dim || e.dim_in() != dim) {
                        return Err(dimension(format!("`{name}`: effects have different shapes")));
                    }
                    Object::Observable(Observable::new(dim, labels, ops).map_err(core)?)
                }
                (None, Some(r)) => {
                    let g = self.rng(name)?;
                    Object::Observable(random_sharp_observable_with(r.dim, r.outcomes, g).map_err(core)?)
                }
                _ => return Err(validation(format!("`{name}`: give exactly one of `effects`, `random_sharp`"))),
            },
            ObjectDef::Spin { direction } => Object::Observable(spin_observable(*direction).map_err(core)?),
            ObjectDef::Kernel { labels, rows } => {
                Object::Kernel(StochasticKernel::new(rows.clone(), labels.clone()).map_err(core)?)
            }
            ObjectDef::State { amplitudes, random } => match (amplitudes, random) {
                (Some(a), None) => Object::State(StateVector::new(a.iter().map(number).collect()).map_err(core)?),
                (None, Some(d)) => Object::State(random_state(*d, self.rng(name)?)),
                _ => return Err(validation(format!("`{name}`: give exactly one of `amplitudes`, `random`"))),
            },
            ObjectDef::Density { matrix: m, random } => match (m, random) {
                (Some(m), None) => Object::Density(DensityOperator::new(matrix(name, m)?, DEFAULT_TOL).map_err(core)?),
                (None, Some(r)) => Object::Density(random_density(r.dim, r.rank, self.rng(name)?)),
                _ => return Err(validation(format!("`{name}`: give exactly one of `matrix`, `random`"))),
            },
            ObjectDef::Unitary { matrix: m, random } => match (m, random) {
                (Some(m), None) => {
                    let u = matrix(name, m)?;
                    if !u.is_unitary(DEFAULT_TOL) {
                        return Err(validation(format!("`{name}` is not unitary")));
                    }
                    Object::Unitary(u)
                }
                (None, Some(d)) => Object::Unitary(haar_unitary(*d, self.rng(name)?)),
                _ => return Err(validation(format!("`{name}`: give exactly one of `matrix`, `random`"))),
            },
            ObjectDef::Channel { kraus, unitary } => match (kraus, unitary) {
                (Some(ks), None) => {
                    let ops = ks.iter().map(|k| matrix(name, k)).collect::<Result<Vec<_>, _>>()?;
                    Object::Channel(Channel::new(ops).map_err(core)?)
                }
                (None, Some(u)) => Object::Channel(unitary_channel(&self.unitary(u, name)?).map_err(core)?),
                _ => return Err(validation(format!("`{name}`: give exactly one of `kraus`, `unitary`"))),
            },
            ObjectDef::Multimeter { dim_h, pointer, coupling, interaction, probes } => {
                let pointer = self.observable(pointer)?.clone();
                let meter = match (coupling, interaction) {
                    (Some(g), None) => Multimeter::normal(*dim_h, pointer, self.unitary(g, name)?).map_err(core)?,
                    (None, Some(c)) => Multimeter::new(*dim_h, pointer, self.channel(c)?).map_err(core)?,
                    _ => return Err(validation(format!("`{name}`: give exactly one of `coupling`, `interaction`"))),
                };
                let probes = probes
                    .iter()
                    .map(|p| {
                        let v = self.state(p)?.clone();
                        if v.dim() != meter.dim_k() {
                            return Err(dimension(format!("`{p}` has dimension {}, dim K = {}", v.dim(), meter.dim_k())));
                        }
                        Ok(v)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Object::Meter(ProgrammedMultimeter { meter, probes, readouts: Vec::new() })
            }
            ObjectDef::MinimalDilation { observable } => {
                let (meter, phi) = minimal_dilation_multimeter(self.observable(observable)?).map_err(core)?;
                Object::Meter(ProgrammedMultimeter { meter, probes: vec![phi], readouts: Vec::new() })
            }
            ObjectDef::PushButtonChannels { channels } => {
                let cs = channels.iter().map(|c| self.channel(c)).collect::<Result<Vec<_>, _>>()?;
                Object::Meter(push_button_channels(&cs).map_err(core)?)
            }
            ObjectDef::PushButtonObservables { observables } => {
                let os = self.observables(observables)?;
                Object::Meter(push_button_observables(&os).map_err(core)?)
            }
            ObjectDef::SharedPointer { observables } => {
                let os = self.observables(observables)?;
                Object::Meter(shared_pointer_multimeter(&os).map_err(core)?)
            }
            ObjectDef::Builtin { name: builtin, dim, observables } => {
                let os = self.observables(observables)?;
                let params = match (dim, os.as_slice()) {
                    (None, []) => BuiltinParams::None,
                    (Some(d), []) => BuiltinParams::Dim(*d),
                    (None, [a, b]) => BuiltinParams::Pair(a, b),
                    _ => return Err(validation(format!("`{name}`: unsupported parameters for builtin `{builtin}`"))),
                };
                Object::Meter(builtin_multimeter(builtin, params).map_err(core)?)
            }
            ObjectDef::Concatenation { channel_meter, measurement, probe, kernel } => {
                let outer = self.meter(channel_meter)?;
                let inner = self.meter(measurement)?;
                let eta = self.pure_probe(inner, probe, measurement)?;
                let kernel = kernel.as_ref().map(|k| self.kernel(k).cloned()).transpose()?;
                let model = MeasurementModel::new(inner.meter.clone(), Probe::Pure(eta.clone()), kernel).map_err(core)?;
                let meter = concatenate_with_measurement(&outer.meter, &model).map_err(core)?;
                let probes = outer.probes.iter().map(|phi| phi.tensor(&eta)).collect();
                Object::Meter(ProgrammedMultimeter { meter, probes, readouts: Vec::new() })
            }
        })
    }

    fn observables(&self, names: &[String]) -> Result<Vec<Observable>, ScenarioError> {
        names.iter().map(|n| self.observable(n).cloned()).collect()
    }
}

/// Builds all objects and resolves all runs.
pub fn load(scenario: &Scenario, options: LoadOptions) -> Result<Vec<Plan>, ScenarioError> {
    let seed = options.seed.or(scenario.seed);
    let base_tol = options.tol.or(scenario.tolerances.default).unwrap_or(DEFAULT_TOL);
    for tol in [options.tol, scenario.tolerances.default].into_iter().flatten() {
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(validation(format!("tolerance {tol} must be finite and nonnegative")));
        }
    }
    let mut registry = Registry {
        objects: HashMap::new(),
        rng: seed.map(rng),
    };
    for (name, spec) in &scenario.objects {
        let object = registry.build(name, spec)?;
        registry.objects.insert(name.clone(), object);
    }
    scenario
        .runs
        .iter()
        .enumerate()
        .map(|(index, run)| {
            if run.uses_randomness() && seed.is_none() {
                return Err(validation(format!("run {} is random but the scenario has no seed", index + 1)));
            }
            let run_seed = seed.unwrap_or(0).wrapping_add(index as u64);
            resolve(&registry, run, index, run_seed, options.tol, base_tol)
        })
        .collect()
}

fn resolve(
    reg: &Registry,
    run: &RunDef,
    index: usize,
    seed: u64,
    tol_override: Option<f64>,
    base_tol: f64,
) -> Result<Plan, ScenarioError> {
    let pick_tol = |own: &Option<f64>| tol_override.or(*own).unwrap_or(base_tol);
    let label = |name: &Option<String>, fallback: &str| name.clone().unwrap_or_else(|| format!("{fallback}#{}", index + 1));
    match run {
        RunDef::Program { name, multimeter, probe, kernel, readout, expect_observable, expect_channel, tol } => {
            let meter = reg.meter(multimeter)?;
            let probe = reg.probe(meter, probe, multimeter)?;
            let kernel = match (kernel, readout) {
                (Some(k), None) => Some(reg.kernel(k)?.clone()),
                (None, Some(i)) => Some(
                    i.checked_sub(1)
                        .and_then(|k| meter.readouts.get(k))
                        .cloned()
                        .ok_or_else(|| ScenarioError::Reference(format!("`{multimeter}` has no readout {i}")))?,
                ),
                (None, None) => None,
                _ => return Err(validation("give at most one of `kernel`, `readout`")),
            };
            if let Some(k) = &kernel {
                if k.rows() != meter.meter.pointer().len() {
                    return Err(dimension(format!(
                        "kernel has {} rows but the pointer of `{multimeter}` has {} outcomes",
                        k.rows(),
                        meter.meter.pointer().len()
                    )));
                }
            }
            let model = MeasurementModel::new(meter.meter.clone(), probe, kernel)
                .map_err(|e| ScenarioError::from_core(multimeter, e))?;
            let dim_h = meter.meter.dim_h();
            let mut expect = Vec::new();
            if let Some(o) = expect_observable {
                let obs = reg.observable(o)?;
                if obs.dim() != dim_h {
                    return Err(dimension(format!("`{o}` acts on C^{}, `{multimeter}` on C^{dim_h}", obs.dim())));
                }
                expect.push(Expectation::Observable(o.clone(), obs.clone()));
            }
            if let Some(c) = expect_channel {
                let ch = reg.channel(c)?;
                if ch.dim() != dim_h {
                    return Err(dimension(format!("`{c}` acts on C^{}, `{multimeter}` on C^{dim_h}", ch.dim())));
                }
                expect.push(Expectation::Channel(c.clone(), ch));
            }
            Ok(Plan::Program { name: label(name, "program"), model, expect, tol: pick_tol(tol) })
        }
        RunDef::Verify { name, check, multimeter, probes, devices, probe, trials, dim_h, dim_k, thresholds, tol } => {
            let name = label(name, check.as_str());
            let tol = pick_tol(tol);
            let need_meter = || {
                let m = multimeter
                    .as_ref()
                    .ok_or_else(|| validation(format!("{} needs a `multimeter`", check.as_str())))?;
                Ok::<_, ScenarioError>((m.as_str(), reg.meter(m)?))
            };
            match check {
                CheckKind::SharpOrthogonality | CheckKind::ChannelOrthogonality => {
                    let (mname, meter) = need_meter()?;
                    let refs = if probes.is_empty() {
                        vec![ProbeRef::Index(1), ProbeRef::Index(2)]
                    } else {
                        probes.clone()
                    };
                    let [a, b] = refs.as_slice() else {
                        return Err(validation("orthogonality checks take exactly two probes"));
                    };
                    let probes = [reg.pure_probe(meter, a, mname)?, reg.pure_probe(meter, b, mname)?];
                    Ok(Plan::Orthogonality { name, check: *check, meter: meter.meter.clone(), probes, tol })
                }
                CheckKind::ConvexHull => {
                    let (mname, meter) = need_meter()?;
                    let states = if probes.is_empty() {
                        meter.probes.clone()
                    } else {
                        probes.iter().map(|p| reg.pure_probe(meter, p, mname)).collect::<Result<_, _>>()?
                    };
                    if states.len() != devices.len() {
                        return Err(validation(format!(
                            "convex_hull pairs {} program states with {} devices",
                            states.len(),
                            devices.len()
                        )));
                    }
                    let programmed = states
                        .into_iter()
                        .zip(devices)
                        .map(|(v, d)| Ok((v, reg.device(d)?)))
                        .collect::<Result<Vec<_>, ScenarioError>>()?;
                    Ok(Plan::ConvexHull {
                        name,
                        meter: meter.meter.clone(),
                        programmed,
                        trials: trials.unwrap_or(DEFAULT_TRIALS),
                        seed,
                        tol,
                    })
                }
                CheckKind::Purification => {
                    let (mname, meter) = need_meter()?;
                    let p = probe.as_ref().ok_or_else(|| validation("purification needs a `probe`"))?;
                    let probe = reg.probe(meter, p, mname)?;
                    Ok(Plan::Purification { name, meter: meter.meter.clone(), probe, tol })
                }
                CheckKind::CounterexampleSearch => {
                    let (Some(h), Some(k)) = (dim_h, dim_k) else {
                        return Err(validation("counterexample_search needs `dim_h` and `dim_k`"));
                    };
                    if !(1..=6).contains(h) || !(1..=6).contains(k) {
                        return Err(dimension("counterexample_search dimensions must lie in 1..=6"));
                    }
                    let defaults = SearchThresholds::default();
                    let th = thresholds.clone().unwrap_or(crate::scenario::Thresholds {
                        sharp_residual: None,
                        overlap: None,
                        distance: None,
                    });
                    Ok(Plan::Search {
                        name,
                        dim_h: *h,
                        dim_k: *k,
                        trials: trials.unwrap_or(DEFAULT_SEARCH_TRIALS),
                        seed,
                        thresholds: SearchThresholds {
                            sharp_residual: th.sharp_residual.unwrap_or(defaults.sharp_residual),
                            overlap: th.overlap.unwrap_or(defaults.overlap),
                            distance: th.distance.unwrap_or(defaults.distance),
                        },
                    })
                }
            }
        }
        RunDef::Bounds { name, observables, outcome_counts, expect } => {
            let counts = if observables.is_empty() {
                outcome_counts.clone()
            } else if outcome_counts.is_empty() {
                observables
                    .iter()
                    .map(|o| {
                        let obs = reg.observable(o)?;
                        if !obs.is_sharp(DEFAULT_TOL) {
                            return Err(validation(format!("`{o}` is not sharp")));
                        }
                        Ok(obs.nonzero_outcomes())
                    })
                    .collect::<Result<Vec<_>, _>>()?
            } else {
                return Err(validation("give either `observables` or `outcome_counts`"));
            };
            if counts.is_empty() || counts.contains(&0) {
                return Err(validation("bounds need at least one positive outcome count"));
            }
            Ok(Plan::Bounds { name: label(name, "bounds"), counts, expect: expect.map(|[a, b]| (a, b)) })
        }
    }
}
