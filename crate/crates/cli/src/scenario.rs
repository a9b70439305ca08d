//! Scenario file schema.
//!
//! A scenario is a JSON document with named `objects`, an ordered list of
//! `runs`, an optional `seed` and optional `tolerances`. Complex numbers are
//! written as `[re, im]` (a bare number is real), matrices as row-major nested
//! arrays, and observable effects as an object keyed by outcome label.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub objects: IndexMap<String, ObjectDef>,
    #[serde(default)]
    pub runs: Vec<RunDef>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Pass tolerance for runs that do not set their own.
    #[serde(default)]
    pub default: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Real(f64),
    Complex([f64; 2]),
}

pub type Matrix = Vec<Vec<Number>>;

/// An inline matrix or the name of an object holding one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixRef {
    Name(String),
    Inline(Matrix),
}

/// A program state: 1-based index into the multimeter's own program states,
/// or the name of a `state`/`density` object.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSharp {
    pub dim: usize,
    pub outcomes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDensity {
    pub dim: usize,
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectDef {
    Observable {
        #[serde(default)]
        effects: Option<IndexMap<String, Matrix>>,
        #[serde(default)]
        random_sharp: Option<RandomSharp>,
    },
    Spin {
        direction: [f64; 3],
    },
    Kernel {
        labels: Vec<String>,
        rows: Vec<Vec<f64>>,
    },
    State {
        #[serde(default)]
        amplitudes: Option<Vec<Number>>,
        #[serde(default)]
        random: Option<usize>,
    },
    Density {
        #[serde(default)]
        matrix: Option<Matrix>,
        #[serde(default)]
        random: Option<RandomDensity>,
    },
    Unitary {
        #[serde(default)]
        matrix: Option<Matrix>,
        #[serde(default)]
        random: Option<usize>,
    },
    Channel {
        #[serde(default)]
        kraus: Option<Vec<Matrix>>,
        #[serde(default)]
        unitary: Option<MatrixRef>,
    },
    Multimeter {
        dim_h: usize,
        pointer: String,
        #[serde(default)]
        coupling: Option<MatrixRef>,
        #[serde(default)]
        interaction: Option<String>,
        #[serde(default)]
        probes: Vec<String>,
    },
    MinimalDilation {
        observable: String,
    },
    PushButtonChannels {
        channels: Vec<String>,
    },
    PushButtonObservables {
        observables: Vec<String>,
    },
    SharedPointer {
        observables: Vec<String>,
    },
    Builtin {
        name: String,
        #[serde(default)]
        dim: Option<usize>,
        #[serde(default)]
        observables: Vec<String>,
    },
    Concatenation {
        channel_meter: String,
        measurement: String,
        probe: ProbeRef,
        #[serde(default)]
        kernel: Option<String>,
    },
}

impl ObjectDef {
    /// Whether building the object draws random numbers.
    pub fn uses_randomness(&self) -> bool {
        match self {
            ObjectDef::Observable { random_sharp, .. } => random_sharp.is_some(),
            ObjectDef::State { random, .. } | ObjectDef::Unitary { random, .. } => random.is_some(),
            ObjectDef::Density { random, .. } => random.is_some(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    #[serde(default)]
    pub sharp_residual: Option<f64>,
    #[serde(default)]
    pub overlap: Option<f64>,
    #[serde(default)]
    pub distance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunDef {
    /// Program a multimeter and report (or check) the induced device.
    Program {
        #[serde(default)]
        name: Option<String>,
        multimeter: String,
        probe: ProbeRef,
        #[serde(default)]
        kernel: Option<String>,
        /// 1-based index of a push-button readout kernel.
        #[serde(default)]
        readout: Option<usize>,
        #[serde(default)]
        expect_observable: Option<String>,
        #[serde(default)]
        expect_channel: Option<String>,
        #[serde(default)]
        tol: Option<f64>,
    },
    Verify {
        #[serde(default)]
        name: Option<String>,
        check: CheckKind,
        #[serde(default)]
        multimeter: Option<String>,
        #[serde(default)]
        probes: Vec<ProbeRef>,
        #[serde(default)]
        devices: Vec<String>,
        #[serde(default)]
        probe: Option<ProbeRef>,
        #[serde(default)]
        trials: Option<usize>,
        #[serde(default)]
        dim_h: Option<usize>,
        #[serde(default)]
        dim_k: Option<usize>,
        #[serde(default)]
        thresholds: Option<Thresholds>,
        #[serde(default)]
        tol: Option<f64>,
    },
    /// Apparatus-size bounds for sharp observables.
    Bounds {
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        observables: Vec<String>,
        #[serde(default)]
        outcome_counts: Vec<usize>,
        #[serde(default)]
        expect: Option<[usize; 2]>,
    },
}

impl RunDef {
    pub fn uses_randomness(&self) -> bool {
        matches!(
            self,
            RunDef::Verify {
                check: CheckKind::ConvexHull | CheckKind::CounterexampleSearch,
                ..
            }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    SharpOrthogonality,
    ChannelOrthogonality,
    ConvexHull,
    Purification,
    CounterexampleSearch,
}

impl CheckKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckKind::SharpOrthogonality => "sharp_orthogonality",
            CheckKind::ChannelOrthogonality => "channel_orthogonality",
            CheckKind::ConvexHull => "convex_hull",
            CheckKind::Purification => "purification",
            CheckKind::CounterexampleSearch => "counterexample_search",
        }
    }
}
