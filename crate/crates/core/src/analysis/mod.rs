//! Stability and memory analysis: Jacobians, Lyapunov exponents, closed-form memory curves.

pub mod jacobian;
pub mod lyapunov;
pub mod memory;

pub use jacobian::{family_jacobian, jacobian_spherical, jacobian_spherical_printed, jacobian_spherical_scaled, JacobianForm};
pub use lyapunov::{lyapunov_report, lyapunov_spectrum_qr, max_lle_paper, LleOptions, LyapunovReport};
pub use memory::{
    estimate_delta, input_ordering_gap, input_ordering_gap_limit, memory_curve, memory_loss, tanh_memory_chain, theoretical_memory,
    DeltaEstimate, MemoryCurve, MemoryParams,
};
