//! Master-equation route: the Lindblad equation
//! `d rho/dt = -i[H, rho] + sum_mu 2 L rho L^+ - {L^+ L, rho}` on the full
//! `2^N` Hilbert space.
//!
//! Every operator in the model (XY or long-range exchange, the kick, the
//! boundary jumps in pairs) commutes with the total parity `prod_m Z_m` up
//! to sandwiching, so the Liouvillian never mixes Pauli strings with an even
//! number of X/Y factors with odd ones. The unique asymptotic state carries
//! the identity component and therefore lives entirely in the even block;
//! the dense solvers work there (dimension `4^N / 2`).

mod matfree;
mod operators;
mod sector;
mod steady;

pub use matfree::LiouvillianOp;
pub use operators::{
    build_hamiltonian_full, couplings, hamiltonian_terms, jump_operators, jump_terms, lindblad_apply, lindblad_apply_with,
    local_correlators, local_residual, majorana_correlations_full, CouplingMatrices, DensityMatrix, LocalCorrelators, LocalPairs,
    RangeSpec, HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL,
};
pub use sector::{generator, kick_superoperator, one_period_map, EvenSector, Superoperator};
pub use steady::{
    floquet_steady_full, floquet_steady_full_with, steady_state_static, steady_state_static_with, FloquetEngine,
    FullSolverOptions, SolvePath, SteadyState,
};

/// Largest chain for which a dense `2^N x 2^N` Hamiltonian is built.
pub const MAX_HAMILTONIAN_SITES: usize = 12;
/// Largest chain handled by the dense superoperator path.
pub const MAX_DENSE_SITES: usize = 6;
/// Largest chain accepted by the steady-state solvers at all.
pub const MAX_FULL_SITES: usize = 10;
