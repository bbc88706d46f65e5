//! Time-of-flight depth sensing in three architectures.
//!
//! This crate models and compares three ways of recovering scene depth from
//! an amplitude-modulated light source:
//!
//! 1. **Phase correlation** ([`phase_tof`]): the conventional architecture.
//!    The sensor cross-correlates the received signal against a delayed
//!    reference and recovers a depth-dependent phase shift from four
//!    quarter-period samples.
//! 2. **Swept modulation frequency** ([`freq_domain`]): depth is encoded in
//!    the *frequency* of the signal observed while sweeping the modulation
//!    frequency at zero phase shift. A return at path length `z` produces a
//!    tone at delay `z / c` in the dual domain, so depth recovery becomes
//!    single-tone frequency estimation and multipath separates into distinct
//!    spectral peaks.
//! 3. **Integrating (slow) camera** ([`slow_tof`]): the same frequency sweep
//!    captured by an ordinary camera that integrates over an exposure time,
//!    which adds a `1/f` amplitude envelope and a second tone offset by the
//!    exposure time.
//!
//! [`signal_model`] holds the forward models, [`scene_sim`] runs per-pixel
//! scene simulations and Monte Carlo noise experiments, [`pgm`] reads and
//! writes 16-bit depth maps, and [`cli`] backs the `fdtof` command-line tool.
//!
//! All public entry points are pure functions of their inputs (randomness is
//! always supplied through an explicit seed), so everything here is safe to
//! call concurrently.

pub mod cli;
pub mod error;
pub mod freq_domain;
pub mod pgm;
pub mod phase_tof;
pub mod scene_sim;
pub mod signal_model;
pub mod slow_tof;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
