//! Time sources. The core never reads a system clock itself; callers inject
//! one (the std companion crate provides a wall clock).

/// Monotonic seconds since some fixed origin.
pub trait Clock: Sync {
    fn elapsed_seconds(&self) -> f64;
}

/// A clock that never advances. Time limits are never hit.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoClock;

impl Clock for NoClock {
    fn elapsed_seconds(&self) -> f64 {
        0.0
    }
}

/// Something that can run out while a search is in progress.
pub trait Budget: Sync {
    fn exhausted(&self) -> bool;
}

/// Never exhausted.
#[derive(Debug, Default, Clone, Copy)]
pub struct Unlimited;

impl Budget for Unlimited {
    fn exhausted(&self) -> bool {
        false
    }
}

/// A time limit measured on an injected clock.
#[derive(Clone, Copy)]
pub struct Deadline<'a> {
    clock: &'a dyn Clock,
    start: f64,
    limit: f64,
}

impl<'a> Deadline<'a> {
    /// Starts counting now. A non-finite or negative `limit_seconds` means
    /// "no limit" for infinity and "already expired" for anything `<= 0`.
    pub fn new(clock: &'a dyn Clock, limit_seconds: f64) -> Self {
        Deadline { clock, start: clock.elapsed_seconds(), limit: limit_seconds }
    }

    pub fn elapsed(&self) -> f64 {
        self.clock.elapsed_seconds() - self.start
    }

    pub fn remaining(&self) -> f64 {
        self.limit - self.elapsed()
    }

    pub fn expired(&self) -> bool {
        self.limit <= 0.0 || self.elapsed() >= self.limit
    }

    pub fn clock(&self) -> &'a dyn Clock {
        self.clock
    }
}

impl Budget for Deadline<'_> {
    fn exhausted(&self) -> bool {
        self.expired()
    }
}

impl core::fmt::Debug for Deadline<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Deadline").field("start", &self.start).field("limit", &self.limit).finish()
    }
}
