use rayon::prelude::*;

use progmeter::channels::channel_distance;
use progmeter::multimeter::dimension_bounds;
use progmeter::verify::{
    check_channel_program_orthogonality, check_convex_hull, check_purification, check_sharp_program_orthogonality,
    counterexample_search,
};
use progmeter::{Probe, Verdict, VerificationReport};

use crate::load::{Expectation, Plan};
use crate::scenario::CheckKind;

/// Runs every plan (in parallel) and returns the reports in plan order.
pub fn execute(plans: &[Plan]) -> Vec<VerificationReport> {
    plans.par_iter().map(execute_one).collect()
}

fn renamed(mut report: VerificationReport, name: &str) -> VerificationReport {
    report.check_name = name.to_string();
    report
}

pub fn execute_one(plan: &Plan) -> VerificationReport {
    match plan {
        Plan::Program { name, model, expect, tol } => program(name, model, expect, *tol),
        Plan::Orthogonality { name, check, meter, probes, tol } => {
            let [p, q] = probes;
            let report = match check {
                CheckKind::ChannelOrthogonality => check_channel_program_orthogonality(meter, p, q, *tol),
                _ => check_sharp_program_orthogonality(meter, p, q, *tol),
            };
            renamed(report, name)
        }
        Plan::ConvexHull { name, meter, programmed, trials, seed, tol } => {
            match check_convex_hull(meter, programmed, *trials, *seed, *tol) {
                Ok(report) => renamed(report, name),
                Err(err) => VerificationReport::new(name.as_str(), Verdict::NotApplicable, err.to_string()),
            }
        }
        Plan::Purification { name, meter, probe, tol } => match probe {
            Probe::Mixed(rho) => renamed(check_purification(meter, rho, *tol), name),
            Probe::Pure(_) => VerificationReport::new(name.as_str(), Verdict::NotApplicable, "probe is pure"),
        },
        Plan::Search { name, dim_h, dim_k, trials, seed, thresholds } => {
            renamed(counterexample_search(*dim_h, *dim_k, *trials, *seed, *thresholds), name)
        }
        Plan::Bounds { name, counts, expect } => bounds(name, counts, *expect),
    }
}

fn program(name: &str, model: &progmeter::MeasurementModel, expect: &[Expectation], tol: f64) -> VerificationReport {
    let observable = match model.induced_observable() {
        Ok(o) => o,
        Err(err) => return VerificationReport::new(name, Verdict::NotApplicable, format!("invalid input: {err}")),
    };
    let mut report = VerificationReport::new(name, Verdict::Pass, "")
        .with_residual("sharpness_residual", observable.sharpness_residual());
    let mut notes = Vec::new();
    let mut failed = false;
    for e in expect {
        match e {
            Expectation::Observable(label, target) => {
                let distance = observable.positional_distance(target).unwrap_or(f64::INFINITY);
                report = report.with_residual("distance", distance);
                match model.validate_claim(target, tol) {
                    Ok(()) => notes.push(format!("measures `{label}` (distance {distance:.3e} ≤ tol {tol:e})")),
                    Err(err) => {
                        failed = true;
                        notes.push(format!("does not measure `{label}`: {err}"));
                    }
                }
            }
            Expectation::Channel(label, target) => {
                let distance = model
                    .induced_channel()
                    .and_then(|c| channel_distance(&c, target))
                    .unwrap_or(f64::INFINITY);
                report = report.with_residual("channel_distance", distance);
                if distance <= tol {
                    notes.push(format!("implements `{label}` (Choi distance {distance:.3e} ≤ tol {tol:e})"));
                } else {
                    failed = true;
                    notes.push(format!("does not implement `{label}`: Choi distance {distance:.3e} > tol {tol:e}"));
                }
            }
        }
    }
    if notes.is_empty() {
        notes.push(format!(
            "induced observable on C^{} with outcomes [{}]",
            observable.dim(),
            observable.labels().join(", ")
        ));
    }
    if failed {
        report.verdict = Verdict::Fail;
    }
    report.details = notes.join("; ");
    report
}

fn bounds(name: &str, counts: &[usize], expect: Option<(usize, usize)>) -> VerificationReport {
    let (lower, upper) = match dimension_bounds(counts) {
        Ok(b) => b,
        Err(err) => return VerificationReport::new(name, Verdict::NotApplicable, format!("invalid input: {err}")),
    };
    let (verdict, details) = match expect {
        None => (Verdict::Pass, format!("{lower} ≤ min dim K ≤ {upper}")),
        Some(e) if e == (lower, upper) => (Verdict::Pass, format!("{lower} ≤ min dim K ≤ {upper} as expected")),
        Some((a, b)) => (Verdict::Fail, format!("bounds ({lower}, {upper}) differ from expected ({a}, {b})")),
    };
    VerificationReport::new(name, verdict, details)
        .with_residual("lower_bound", lower as f64)
        .with_residual("upper_bound", upper as f64)
}
