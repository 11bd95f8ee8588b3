//! Campaign orchestration: configuration files, the scenario registry, the
//! cycle loop and the exporters.

pub mod config_file;
pub mod export;
pub mod scenario;
pub mod simulation;

pub use config_file::{load_config, parse_config, ParseError};
pub use export::{load_report, render_report, write_kde_csv, write_report_json, write_trace_csv};
pub use scenario::Scenario;
pub use simulation::{
    run_campaign, run_simulation, CampaignOutput, OutputPaths, RunManifest, Transport,
};
