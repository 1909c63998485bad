//! Cost ceilings for the exact engines.
//!
//! Exact computations enumerate types, type-class members, messages, or whole
//! reproduction spaces. Each path checks the relevant cap up front and
//! returns `Error::CapExceeded` instead of attempting an infeasible run.

/// Default and configurable bounds on exact enumeration work.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineCaps {
    /// Largest block length for which full type enumeration is allowed.
    pub type_enum_n: usize,
    /// Largest type class that may be materialized (permutation tables).
    pub class_size: u64,
    /// Largest message space the exact adversary engine will enumerate.
    pub messages: u64,
    /// Largest `messages * |Z|^n` product the brute-force oracle will scan.
    pub oracle_scan: u64,
    /// Largest support a posterior table may enumerate (atypical strings).
    pub posterior_support: u64,
}

impl Default for EngineCaps {
    fn default() -> Self {
        Self {
            type_enum_n: 24,
            class_size: 1 << 24,
            messages: 1 << 22,
            oracle_scan: 1 << 22,
            posterior_support: 1 << 20,
        }
    }
}
