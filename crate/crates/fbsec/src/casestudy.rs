//! The packaged substation application.

use fbsec_core::crypto::DhGroup;
use fbsec_core::grid::{grid_bindings, ProtectionConfig, ProtectionFunction, Scenario};
use fbsec_core::model::Application;
use fbsec_core::runtime::services::standard_bindings;
use fbsec_core::runtime::Bindings;

use crate::fbs::parse_application;

pub const CASE_STUDY_FILE: &str = "casestudy.fbs";
pub const CASE_STUDY: &str = include_str!("../casestudy/casestudy.fbs");

pub fn build_case_study() -> Application {
    parse_application(CASE_STUDY_FILE, CASE_STUDY).expect("packaged case study parses")
}

/// Standard services plus the protection algorithms and stub sources.
pub fn bindings(group: DhGroup, scenario: Scenario) -> Bindings {
    standard_bindings(group).merge(grid_bindings(scenario))
}

/// Protection function computed by `instance`, if any.
pub fn protection_of(app: &Application, instance: &str) -> Option<ProtectionConfig> {
    let ty = app.root.find_instance(instance)?;
    ProtectionFunction::from_type_name(&ty.type_name).map(ProtectionConfig::default_for)
}
