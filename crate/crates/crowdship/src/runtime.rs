//! Wall-clock time and multi-threaded pricing.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use crowdship_core::clock::Budget;
use crowdship_core::orchestrator::PricingExecutor;
use crowdship_core::pricing::{price_driver, DualPrices, PricingConfig, PricingOutcome};
use crowdship_core::{Clock, Instance};

/// Seconds since construction.
#[derive(Clone, Copy, Debug)]
pub struct WallClock {
    start: Instant,
}

impl WallClock {
    pub fn new() -> Self {
        WallClock { start: Instant::now() }
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn elapsed_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

/// Prices drivers on a fixed number of scoped threads. Drivers are handed
/// out one at a time, so a slow driver does not hold up a whole chunk.
/// Results are returned in driver order, which keeps runs deterministic
/// whatever the thread count.
#[derive(Clone, Copy, Debug)]
pub struct ThreadedExecutor {
    workers: usize,
}

impl ThreadedExecutor {
    pub fn new(workers: usize) -> Self {
        ThreadedExecutor { workers: workers.max(1) }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl PricingExecutor for ThreadedExecutor {
    fn price_all(
        &self,
        instance: &Instance,
        duals: &DualPrices,
        configs: &[PricingConfig],
        budget: &dyn Budget,
    ) -> Vec<PricingOutcome> {
        let n = configs.len();
        if self.workers == 1 || n <= 1 {
            return configs.iter().enumerate().map(|(w, c)| price_driver(instance, w, duals, c, budget)).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<PricingOutcome>>> = (0..n).map(|_| Mutex::new(None)).collect();
        thread::scope(|scope| {
            for _ in 0..self.workers.min(n) {
                scope.spawn(|| loop {
                    let w = next.fetch_add(1, Ordering::Relaxed);
                    if w >= n {
                        break;
                    }
                    let out = price_driver(instance, w, duals, &configs[w], budget);
                    *slots[w].lock().expect("pricing worker panicked") = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("pricing worker panicked").expect("every driver is priced"))
            .collect()
    }
}
