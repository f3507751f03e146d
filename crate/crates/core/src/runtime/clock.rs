use alloc::sync::Arc;
use core::sync::atomic::{AtomicU64, Ordering};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClockMode {
    Virtual,
    Real,
}

/// Time source for a device. Readings never decrease within a run.
pub trait Clock {
    fn now_us(&self) -> u64;
    fn mode(&self) -> ClockMode;

    fn now_ms(&self) -> u64 {
        self.now_us() / 1000
    }
}

/// Simulated time shared by every device of a simulation; clones observe
/// the same instant.
#[derive(Clone, Debug, Default)]
pub struct VirtualClock(Arc<AtomicU64>);

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    /// Moves time forward; earlier instants are ignored.
    pub fn advance_to(&self, us: u64) {
        self.0.fetch_max(us, Ordering::SeqCst);
    }

    pub fn advance_by(&self, us: u64) {
        self.0.fetch_add(us, Ordering::SeqCst);
    }
}

impl Clock for VirtualClock {
    fn now_us(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }

    fn mode(&self) -> ClockMode {
        ClockMode::Virtual
    }
}
