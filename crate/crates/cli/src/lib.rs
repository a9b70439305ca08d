//! Scenario runner: loads a JSON scenario, builds the named constructions,
//! executes its runs and renders the reports.

pub mod error;
pub mod load;
pub mod report;
pub mod run;
pub mod scenario;

pub use error::ScenarioError;
pub use load::LoadOptions;
pub use report::{emit_report, parse_structured, Format};
pub use scenario::Scenario;

use progmeter::VerificationReport;

/// Loads and executes a scenario given as text.
pub fn run_scenario(text: &str, options: LoadOptions) -> Result<Vec<VerificationReport>, ScenarioError> {
    let scenario = Scenario::parse(text)?;
    let plans = load::load(&scenario, options)?;
    Ok(run::execute(&plans))
}

/// Process exit status for a completed run: 1 if any check failed, else 0.
pub fn exit_status(reports: &[VerificationReport]) -> u8 {
    u8::from(reports.iter().any(VerificationReport::failed))
}
