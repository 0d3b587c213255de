use serde::{Deserialize, Serialize};

/// Multiply-add counts for the expensive kernels.
///
/// Counts are accumulated by the kernels themselves from the loop extents they
/// actually execute, so they track the real work rather than a model of it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounts {
    /// Forming `S * A`.
    pub sketch: u64,
    /// Building and factoring the sketched Hessian.
    pub factor: u64,
    /// Triangular solves against a cached factor.
    pub solve: u64,
    /// Products with the data matrix (gradients, CG matvecs).
    pub matvec: u64,
}

impl OpCounts {
    pub fn total(&self) -> u64 {
        self.sketch + self.factor + self.solve + self.matvec
    }

    pub fn merge(&mut self, other: &OpCounts) {
        self.sketch += other.sketch;
        self.factor += other.factor;
        self.solve += other.solve;
        self.matvec += other.matvec;
    }
}
