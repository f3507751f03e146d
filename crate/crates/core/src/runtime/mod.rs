//! Event-driven execution of per-device FB networks.
//!
//! Each device runs a single FIFO event queue. External stimuli (injected
//! events, received frames, timer expiries) wait in a separate inbox and
//! are admitted one at a time, only when the queue has drained, so every
//! stimulus runs to completion before the next one is observed.

pub mod clock;
pub mod device;
pub mod flatten;
pub mod library;
pub mod services;
pub mod sim;
pub mod snapshot;

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;

use crate::model::FbType;
use crate::transport::Delivery;

pub use clock::{Clock, ClockMode, VirtualClock};
pub use device::{DeviceRuntime, Fault, ServiceCtx, TraceEntry};
pub use sim::Simulation;
pub use snapshot::{AlgError, Snapshot};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuntimeError {
    #[error("unknown FB type `{0}`")]
    UnknownType(String),
    #[error("no service binding `{binding}` registered for SIFB type `{fb_type}`")]
    MissingBinding { fb_type: String, binding: String },
    #[error("no algorithm `{algorithm}` registered (used by `{fb_type}`)")]
    MissingAlgorithm { fb_type: String, algorithm: String },
    #[error("service for `{instance}` failed to start: {message}")]
    ServiceInit { instance: String, message: String },
    #[error("parameter on `{instance}`: {message}")]
    Param { instance: String, message: String },
    #[error("unknown port `{0}`")]
    UnknownPort(String),
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
    #[error("{0}")]
    Flatten(String),
    #[error("device `{device}` still busy after {steps} steps; the network may contain an event loop")]
    NonTermination { device: String, steps: usize },
}

/// What woke a service up.
#[derive(Clone, Copy, Debug)]
pub enum ServiceTrigger<'a> {
    Event(&'a str),
    Timer(u64),
    Frame(&'a Delivery),
}

/// Behaviour behind a service-interface FB.
pub trait Service {
    fn handle(
        &mut self,
        trigger: ServiceTrigger<'_>,
        snap: &mut Snapshot,
        ctx: &mut ServiceCtx<'_>,
    ) -> Result<(), AlgError>;
}

pub struct ServiceSpec<'a> {
    pub instance: &'a str,
    pub fb_type: &'a FbType,
}

pub type AlgorithmFn = Arc<dyn Fn(&mut Snapshot) -> Result<(), AlgError> + Send + Sync>;
pub type ServiceFactory = Arc<dyn Fn(&ServiceSpec<'_>) -> Result<Box<dyn Service>, AlgError> + Send + Sync>;

/// Host functions available to a runtime: algorithms for basic FBs and
/// service factories for SIFBs, both by name.
#[derive(Clone, Default)]
pub struct Bindings {
    pub algorithms: BTreeMap<String, AlgorithmFn>,
    pub services: BTreeMap<String, ServiceFactory>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn algorithm(
        mut self,
        name: &str,
        f: impl Fn(&mut Snapshot) -> Result<(), AlgError> + Send + Sync + 'static,
    ) -> Self {
        self.algorithms.insert(name.into(), Arc::new(f));
        self
    }

    pub fn service(
        mut self,
        name: &str,
        f: impl Fn(&ServiceSpec<'_>) -> Result<Box<dyn Service>, AlgError> + Send + Sync + 'static,
    ) -> Self {
        self.services.insert(name.into(), Arc::new(f));
        self
    }

    /// Adds every entry of `other`, replacing same-named ones.
    pub fn merge(mut self, other: Bindings) -> Self {
        self.algorithms.extend(other.algorithms);
        self.services.extend(other.services);
        self
    }
}

/// One matched pair of timestamps for a secure link.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatencySample {
    pub link: u32,
    pub seq: u32,
    pub epoch: u8,
    /// Milliseconds, recorded before encryption.
    pub t1: u64,
    /// Milliseconds, recorded after decryption.
    pub t2: u64,
}

impl LatencySample {
    pub fn latency_ms(&self) -> u64 {
        self.t2.saturating_sub(self.t1)
    }
}
