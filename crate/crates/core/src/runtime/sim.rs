//! Deterministic multi-device simulation on a virtual clock and a loopback
//! fabric.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::crypto::SeededEntropy;
use crate::model::{FbNetwork, FbType, Value};
use crate::transport::{LatencyModel, LoopbackFabric};

use super::clock::{Clock, VirtualClock};
use super::device::DeviceRuntime;
use super::{Bindings, LatencySample, RuntimeError};

/// Steps a single device may take at one instant before it is reported as
/// non-terminating.
pub const SETTLE_BUDGET: usize = 1_000_000;

/// A set of devices sharing one virtual clock and one loopback fabric.
///
/// Runs are reproducible: the same networks, latency model and seed give
/// the same traces, frames and samples.
pub struct Simulation {
    clock: VirtualClock,
    fabric: LoopbackFabric,
    seed: u64,
    devices: Vec<DeviceRuntime>,
}

impl Simulation {
    pub fn new(model: LatencyModel, seed: u64) -> Self {
        Simulation {
            clock: VirtualClock::new(),
            fabric: LoopbackFabric::new(model, seed),
            seed,
            devices: Vec::new(),
        }
    }

    pub fn clock(&self) -> &VirtualClock {
        &self.clock
    }

    pub fn fabric(&self) -> &LoopbackFabric {
        &self.fabric
    }

    pub fn now_us(&self) -> u64 {
        self.clock.now_us()
    }

    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    /// Adds a device. Its entropy is seeded from the simulation seed and
    /// the device's position.
    pub fn add_device(
        &mut self,
        name: &str,
        network: &FbNetwork,
        types: &[FbType],
        bindings: &Bindings,
    ) -> Result<usize, RuntimeError> {
        if self.devices.iter().any(|d| d.name() == name) {
            return Err(RuntimeError::Flatten(format!("device `{name}` added twice")));
        }
        let index = self.devices.len();
        let entropy = SeededEntropy::from_seed(
            self.seed
                .wrapping_mul(0x9E37_79B9_7F4A_7C15)
                .wrapping_add(index as u64 + 1),
        );
        let dev = DeviceRuntime::new(
            name,
            network,
            types,
            bindings,
            Box::new(self.clock.clone()),
            Box::new(self.fabric.port(name)),
            Box::new(entropy),
        )?;
        self.devices.push(dev);
        Ok(index)
    }

    pub fn devices(&self) -> &[DeviceRuntime] {
        &self.devices
    }

    pub fn device(&self, name: &str) -> Option<&DeviceRuntime> {
        self.devices.iter().find(|d| d.name() == name)
    }

    pub fn device_mut(&mut self, name: &str) -> Result<&mut DeviceRuntime, RuntimeError> {
        self.devices
            .iter_mut()
            .find(|d| d.name() == name)
            .ok_or_else(|| RuntimeError::UnknownDevice(name.into()))
    }

    pub fn inject(&mut self, device: &str, instance: &str, event: &str) -> Result<(), RuntimeError> {
        self.device_mut(device)?.inject(instance, event)
    }

    pub fn write_input(&mut self, device: &str, instance: &str, port: &str, value: Value) -> Result<(), RuntimeError> {
        self.device_mut(device)?.write_input(instance, port, value)
    }

    pub fn cold_start_all(&mut self) {
        for d in &mut self.devices {
            d.cold_start();
        }
    }

    /// Runs every device until none has work at the current instant.
    pub fn settle(&mut self) -> Result<(), RuntimeError> {
        loop {
            let mut progressed = false;
            for d in &mut self.devices {
                progressed |= d.run_until_idle(SETTLE_BUDGET)? > 0;
            }
            if !progressed {
                return Ok(());
            }
        }
    }

    fn next_wakeup(&self) -> Option<u64> {
        self.devices.iter().filter_map(|d| d.next_wakeup()).min()
    }

    /// Advances virtual time to `end_us`, running every timer and delivery
    /// due on the way.
    pub fn run_until(&mut self, end_us: u64) -> Result<(), RuntimeError> {
        self.settle()?;
        while let Some(t) = self.next_wakeup().filter(|t| *t <= end_us) {
            self.clock.advance_to(t);
            self.settle()?;
        }
        self.clock.advance_to(end_us);
        self.settle()
    }

    pub fn run_for_ms(&mut self, ms: u64) -> Result<(), RuntimeError> {
        let end = self.now_us() + ms * 1000;
        self.run_until(end)
    }

    /// Drains latency samples from every device, tagged with the device name.
    pub fn take_samples(&mut self) -> Vec<(String, LatencySample)> {
        let mut out = Vec::new();
        for d in &mut self.devices {
            let name = String::from(d.name());
            out.extend(d.take_samples().into_iter().map(|s| (name.clone(), s)));
        }
        out
    }
}
