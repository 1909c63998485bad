//! Experiment harness around the `keybins` library: JSON-configured sweeps,
//! minimum-key search, SVG plots, and the built-in verification suites.

pub mod check;
pub mod config;
pub mod plot;
pub mod sweep;
