//! Physics of two evanescently coupled optical ring resonators, one with
//! saturable gain and one passive, driven through a waveguide port on either
//! side.
//!
//! The crate covers the classical steady state (a cubic in the active-ring
//! intensity), the two-mode eigenfrequency spectrum and its exceptional
//! points, transmission spectra in both drive directions, time-domain
//! integration of the coupled amplitude equations, and a truncated-Fock
//! master-equation backend for the same system.
//!
//! All rates (loss, gain, coupling, detuning, drive amplitude) are plain
//! angular rates in s^-1: a value quoted as "1 MHz" enters as `1e6`. True
//! optical frequencies appear only when converting an input power to a drive
//! amplitude.

pub mod constants;
pub mod cubic;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod ode;
pub mod quantum;
pub mod spectral;
pub mod steady;
pub mod transmission;

pub use error::{Error, Result};
pub use num_complex::Complex64;
