//! Modeling toolkit for a kinetic-inductance parametric amplifier (KIPA)
//! operated simultaneously as an ESR micro-resonator and first-stage
//! amplifier.
//!
//! The crate covers the full design-and-analysis chain:
//!
//! * [`spin`]: the 20-level bismuth donor electron-nuclear spin system,
//!   its exact diagonalization, ESR transitions and field gradients.
//! * [`cpw`]: coplanar-waveguide line parameters with geometric and
//!   kinetic inductance, DC current tuning of the resonance.
//! * [`network`]: ABCD-matrix cascades and S-parameters of the
//!   stepped-impedance filter that confines the resonator mode.
//! * [`kipa`]: the degenerate three-wave-mixing amplifier itself:
//!   Hamiltonian parameters, reflection gain, quadrature transforms,
//!   added noise and pump-power scaling.
//! * [`noise`]: signal and noise propagation through the
//!   KIPA -> attenuator -> HEMT measurement chain.
//! * [`budget`]: the spin-sensitivity budget: effective donor volumes,
//!   coupling distributions, bandwidth overlaps and the minimum
//!   detectable number of spins.
//! * [`fit`]: damped least-squares fitting of the model curves.
//! * [`echo`]: quadrature echo traces and amplitude-SNR extraction.
//!
//! Conventions: angular frequencies (rad/s) everywhere in the API unless a
//! name carries an explicit `_hz` suffix; vacuum noise is 1/4 photon per
//! quadrature.

pub mod budget;
pub mod consts;
pub mod cpw;
pub mod echo;
mod error;
pub mod fit;
pub mod kipa;
pub mod linalg;
pub mod network;
pub mod noise;
pub mod spin;

pub use error::{Error, Result};
