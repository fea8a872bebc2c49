//! Machine integer width shared by the interpreter and the solver.

use core::fmt;

/// Signed two's-complement width in bits, `2..=32`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntWidth(u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("integer width must be between 2 and 32 bits, got {0}")]
pub struct BadWidth(pub u32);

impl IntWidth {
    pub const W4: IntWidth = IntWidth(4);
    pub const W8: IntWidth = IntWidth(8);
    pub const W32: IntWidth = IntWidth(32);

    pub fn new(bits: u32) -> Result<Self, BadWidth> {
        if (2..=32).contains(&bits) {
            Ok(IntWidth(bits as u8))
        } else {
            Err(BadWidth(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0 as u32
    }

    pub fn min_int(self) -> i64 {
        -(1i64 << (self.0 - 1))
    }

    pub fn max_int(self) -> i64 {
        (1i64 << (self.0 - 1)) - 1
    }

    pub fn contains(self, v: i64) -> bool {
        v >= self.min_int() && v <= self.max_int()
    }

    /// Number of representable values.
    pub fn cardinality(self) -> u64 {
        1u64 << self.0
    }

    /// Default loop unfolding budget: `2 * MAX_INT + 4`.
    pub fn default_unfold_budget(self) -> u64 {
        2 * self.max_int() as u64 + 4
    }

    /// All representable values in ascending order.
    pub fn values(self) -> impl Iterator<Item = i64> {
        self.min_int()..=self.max_int()
    }
}

impl Default for IntWidth {
    fn default() -> Self {
        IntWidth::W8
    }
}

impl fmt::Display for IntWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
