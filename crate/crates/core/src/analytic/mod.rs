//! Closed-form arrival amplitude for a free packet and a point detector.
//!
//! With the sensitive state ⟨x|u⟩ = δ(x - a) the Laplace-domain amplitude
//! factorises as √κ ψ̃₀(a, z) G̃(z), G̃(z) = z^{1/2}/(z^{1/2} + ε). Back in the
//! time domain this gives
//!
//! ```text
//! φ(t) = √κ (ψ₀(a, t) + ∫₀ᵗ ḟ(s) ψ₀(a, t - s) ds),   f(t) = e^{ε²t} erfc(ε√t)
//! ```
//!
//! and the arrival density p(t) = |φ(t)|².

mod amplitude;
mod detector;
mod distribution;
mod laplace;
mod packet;

pub use amplitude::{arrival_amplitude, arrival_density, AmplitudeSolver, AMPLITUDE_TOL};
pub use detector::{DetectorSpec, KernelParams};
pub use distribution::{cumulative_and_efficiency, ArrivalDistribution, DEFAULT_HORIZON};
pub use laplace::{amplitude_via_laplace, talbot_inverse, TALBOT_NODES};
pub use packet::{free_packet_amplitude, wigner_density, wigner_integral, GaussianPacket};
