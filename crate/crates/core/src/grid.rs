//! Protection functions for the substation case study, plus the stub
//! current source that feeds them.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use core::fmt;

use crate::model::{DataKind, Ecc, FbInterface, FbType, InternalVar, Value};
use crate::runtime::{AlgError, Bindings, Service, ServiceCtx, ServiceTrigger, Snapshot};

pub const CURRENT_STUB: &str = "CurrentStub";
pub const OVERCURRENT: &str = "Overcurrent";
pub const DIFFERENTIAL: &str = "Differential";
pub const EARTH_FAULT: &str = "EarthFault";
pub const TRIP_LATCH: &str = "TripLatch";

pub const STUB_BINDING: &str = "CURRENT_STUB";

pub mod alg {
    pub const OVERCURRENT: &str = "overcurrent";
    pub const DIFFERENTIAL: &str = "differential";
    pub const EARTH_FAULT: &str = "earth_fault";
    pub const LATCH: &str = "trip_latch";
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProtectionFunction {
    Overcurrent,
    Differential,
    EarthFault,
}

impl ProtectionFunction {
    pub const ALL: [ProtectionFunction; 3] = [
        ProtectionFunction::Differential,
        ProtectionFunction::EarthFault,
        ProtectionFunction::Overcurrent,
    ];

    pub fn type_name(self) -> &'static str {
        match self {
            ProtectionFunction::Overcurrent => OVERCURRENT,
            ProtectionFunction::Differential => DIFFERENTIAL,
            ProtectionFunction::EarthFault => EARTH_FAULT,
        }
    }

    pub fn from_type_name(name: &str) -> Option<ProtectionFunction> {
        Self::ALL.into_iter().find(|f| f.type_name() == name)
    }
}

impl fmt::Display for ProtectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtectionFunction::Overcurrent => "overcurrent",
            ProtectionFunction::Differential => "differential",
            ProtectionFunction::EarthFault => "earth-fault",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtectionConfig {
    pub function: ProtectionFunction,
    /// Amperes; trips strictly above.
    pub threshold: f64,
    pub deadline_ms: u64,
}

impl ProtectionConfig {
    pub fn new(function: ProtectionFunction, threshold: f64, deadline_ms: u64) -> Option<Self> {
        (threshold > 0.0 && deadline_ms > 0).then_some(ProtectionConfig {
            function,
            threshold,
            deadline_ms,
        })
    }

    pub fn default_for(function: ProtectionFunction) -> Self {
        match function {
            ProtectionFunction::Overcurrent => ProtectionConfig {
                function,
                threshold: 100.0,
                deadline_ms: 600,
            },
            ProtectionFunction::Differential => ProtectionConfig {
                function,
                threshold: 1.0,
                deadline_ms: 5,
            },
            ProtectionFunction::EarthFault => ProtectionConfig {
                function,
                threshold: 1.0,
                deadline_ms: 5,
            },
        }
    }

    pub fn meets_deadline(&self, latency_ms: u64) -> bool {
        latency_ms <= self.deadline_ms
    }
}

pub fn overcurrent_trip(current: f64, threshold: f64) -> bool {
    current > threshold
}

pub fn differential_trip(i1: f64, i2: f64, threshold: f64) -> bool {
    (i1 - i2).abs() > threshold
}

/// Residual (zero-sequence) current above the threshold.
pub fn earth_fault_trip(residual: f64, threshold: f64) -> bool {
    residual > threshold
}

fn relay(name: &str, inputs: &[&str], algorithm: &str) -> FbType {
    let mut with = inputs.to_vec();
    with.push("THRESHOLD");
    let mut iface = FbInterface::new().event_in("REQ", &with).event_out("CNF", &["TRIP"]);
    for i in inputs {
        iface = iface.data_in(i, DataKind::Lreal);
    }
    iface = iface
        .data_in("THRESHOLD", DataKind::Lreal)
        .data_out("TRIP", DataKind::Bool);
    FbType::basic(
        name,
        iface,
        vec![],
        Ecc::new("IDLE")
            .state("IDLE", &[])
            .state("EVAL", &[(Some(algorithm), Some("CNF"))])
            .on("IDLE", "REQ", None, "EVAL")
            .always("EVAL", None, "IDLE"),
    )
}

pub fn overcurrent() -> FbType {
    relay(OVERCURRENT, &["I"], alg::OVERCURRENT)
}

pub fn differential() -> FbType {
    relay(DIFFERENTIAL, &["I1", "I2"], alg::DIFFERENTIAL)
}

pub fn earth_fault() -> FbType {
    relay(EARTH_FAULT, &["I"], alg::EARTH_FAULT)
}

/// Breaker-side receiver for one trip signal: `OPEN` follows the last
/// received value, `TRIPS` counts trip commands.
pub fn trip_latch() -> FbType {
    FbType::basic(
        TRIP_LATCH,
        FbInterface::new()
            .event_in("REQ", &["TRIP"])
            .event_out("CNF", &["OPEN"])
            .data_in("TRIP", DataKind::Bool)
            .data_out("OPEN", DataKind::Bool),
        vec![
            InternalVar::new("TRIPS", DataKind::Uint),
            InternalVar::new("RECEIVED", DataKind::Uint),
        ],
        Ecc::new("IDLE")
            .state("IDLE", &[])
            .state("LATCH", &[(Some(alg::LATCH), Some("CNF"))])
            .on("IDLE", "REQ", None, "LATCH")
            .always("LATCH", None, "IDLE"),
    )
}

/// Stub measurement: each `REQ` reads the next sample from the scenario.
pub fn current_stub() -> FbType {
    FbType::service(
        CURRENT_STUB,
        FbInterface::new()
            .event_in("REQ", &[])
            .event_out("CNF", &["I"])
            .data_out("I", DataKind::Lreal),
        STUB_BINDING,
    )
}

pub fn grid_types() -> alloc::vec::Vec<FbType> {
    vec![
        current_stub(),
        overcurrent(),
        differential(),
        earth_fault(),
        trip_latch(),
    ]
}

/// Current in amperes for `(stub instance path, sample index)`.
pub type Scenario = Arc<dyn Fn(&str, u64) -> f64 + Send + Sync>;

struct Stub {
    scenario: Scenario,
    next: u64,
}

impl Service for Stub {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError> {
        if let ServiceTrigger::Event("REQ") = trigger {
            let i = (self.scenario)(ctx.instance(), self.next);
            self.next += 1;
            snap.set("I", Value::Lreal(i))?;
            ctx.emit("CNF");
        }
        Ok(())
    }
}

fn trip(s: &mut Snapshot, f: impl Fn(&Snapshot, f64) -> Result<bool, AlgError>) -> Result<(), AlgError> {
    let threshold = s.real("THRESHOLD")?;
    let t = f(s, threshold)?;
    s.set("TRIP", Value::Bool(t))
}

/// Algorithms for the relay types plus the stub service.
pub fn grid_bindings(scenario: Scenario) -> Bindings {
    Bindings::new()
        .service(STUB_BINDING, move |_| {
            Ok(Box::new(Stub {
                scenario: scenario.clone(),
                next: 0,
            }))
        })
        .algorithm(alg::OVERCURRENT, |s| {
            trip(s, |s, t| Ok(overcurrent_trip(s.real("I")?, t)))
        })
        .algorithm(alg::EARTH_FAULT, |s| {
            trip(s, |s, t| Ok(earth_fault_trip(s.real("I")?, t)))
        })
        .algorithm(alg::DIFFERENTIAL, |s| {
            trip(s, |s, t| Ok(differential_trip(s.real("I1")?, s.real("I2")?, t)))
        })
        .algorithm(alg::LATCH, |s| {
            let t = s.bool("TRIP")?;
            s.set("OPEN", Value::Bool(t))?;
            let n = s.uint("RECEIVED")?;
            s.set("RECEIVED", Value::Uint(n + 1))?;
            if t {
                let n = s.uint("TRIPS")?;
                s.set("TRIPS", Value::Uint(n + 1))?;
            }
            Ok(())
        })
}

/// Scenario that always reads `value`.
pub fn constant(value: f64) -> Scenario {
    Arc::new(move |_, _| value)
}

pub fn label(function: ProtectionFunction) -> String {
    alloc::format!("{function}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overcurrent_is_strict() {
        assert!(overcurrent_trip(150.0, 100.0));
        assert!(!overcurrent_trip(100.0, 100.0));
        assert!(!overcurrent_trip(0.0, 100.0));
    }

    #[test]
    fn differential_is_symmetric() {
        assert!(differential_trip(10.0, 8.5, 1.0));
        assert!(!differential_trip(10.0, 10.0, 1.0));
        assert!(differential_trip(8.5, 10.0, 1.0));
        assert!(!differential_trip(10.0, 9.0, 1.0));
    }

    #[test]
    fn configs_reject_non_positive_values() {
        assert!(ProtectionConfig::new(ProtectionFunction::Overcurrent, 0.0, 600).is_none());
        assert!(ProtectionConfig::new(ProtectionFunction::Overcurrent, 100.0, 0).is_none());
        let d = ProtectionConfig::default_for(ProtectionFunction::Differential);
        assert!(d.meets_deadline(5) && !d.meets_deadline(6));
        assert_eq!(
            ProtectionConfig::default_for(ProtectionFunction::Overcurrent).deadline_ms,
            600
        );
    }
}
