use std::time::Instant;

/// How a search measures its time budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Clock {
    /// Real elapsed time.
    Wall,
    /// Time derived from the number of move evaluations, so runs are reproducible
    /// regardless of machine load.
    Virtual { evals_per_second: f64 },
}

impl Clock {
    /// Evaluation rate of the virtual clock, roughly one second of single-core work
    /// on a typical machine.
    pub const DEFAULT_EVALS_PER_SECOND: f64 = 3.0e7;

    pub fn virtual_default() -> Self {
        Clock::Virtual {
            evals_per_second: Self::DEFAULT_EVALS_PER_SECOND,
        }
    }
}

/// Time allowance of one search, checked between sweeps.
#[derive(Debug, Clone)]
pub struct Budget {
    limit_s: f64,
    clock: Clock,
    started: Instant,
    evaluations: u64,
}

impl Budget {
    pub fn new(limit_s: f64, clock: Clock) -> Self {
        Self {
            limit_s,
            clock,
            started: Instant::now(),
            evaluations: 0,
        }
    }

    pub fn charge(&mut self, evaluations: u64) {
        self.evaluations += evaluations;
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn elapsed(&self) -> f64 {
        match self.clock {
            Clock::Wall => self.started.elapsed().as_secs_f64(),
            Clock::Virtual { evals_per_second } => self.evaluations as f64 / evals_per_second,
        }
    }

    pub fn expired(&self) -> bool {
        self.elapsed() >= self.limit_s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_clock_counts_work() {
        let mut b = Budget::new(1.0, Clock::Virtual { evals_per_second: 100.0 });
        assert!(!b.expired());
        b.charge(99);
        assert!(!b.expired());
        b.charge(1);
        assert!(b.expired());
        assert_eq!(b.elapsed(), 1.0);
    }

    #[test]
    fn zero_budget_is_expired_at_once() {
        assert!(Budget::new(0.0, Clock::Wall).expired());
    }
}
