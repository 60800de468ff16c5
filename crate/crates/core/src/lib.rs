//! Analysis of intertrade durations on a double-session trading day.
//!
//! The pipeline this crate implements starts from a raw trade tape, extracts
//! intertrade durations that never span a session break, rescales each stock's
//! durations by its sample standard deviation so different stocks become
//! comparable, and then calibrates the rescaled distributions against two
//! competing parametric families (Weibull and q-exponential) by maximum
//! likelihood and by least squares on the log density. A Mittag-Leffler
//! survival function is available as the reference shape interpolating between
//! a stretched exponential at short waits and a power law at long waits.
//! Conditional statistics (quintile-conditioned densities and conditional
//! means of the next duration) probe memory between successive trades, and
//! seeded synthetic generators provide known-answer inputs for every stage.
//!
//! All randomness is explicit: every generator takes a 64-bit seed and the
//! same seed reproduces the same bits on every platform.

pub mod conditional;
pub mod densities;
pub mod fitters;
pub mod models;
pub(crate) mod special;
pub mod synth;
pub mod tape;
