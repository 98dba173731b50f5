//! Eigensystems, dispersion sheets, Hessians and band contacts.

pub mod degeneracy;
pub mod dispersion;
pub mod eigen;
pub mod hessian;
pub mod surface;

pub use degeneracy::{find_degeneracies, ContactClass, Degeneracy, DegeneracyReport};
pub use dispersion::{
    grover2d_dispersion, grover2d_eigenvectors_near_origin, grover2d_group_velocity, grover2d_hessian,
    grover2d_cone_series, grover2d_omega, grover3d_dispersion, grover3d_group_velocity, grover3d_omegas, model_for, DispersionModel,
    Grover2d, Grover3d, NumericDispersion,
};
pub use eigen::{circular_distance, eigensystem_at, phase_of, wrap_phase, EigenSystem};
pub use hessian::{check_regular, hessian_at, HessianEstimate};
pub use surface::{compute_slice, compute_surface, velocity_field, DispersionSurface};
