//! Coined quantum walks on N-dimensional lattices: exact evolution, dispersion
//! analysis, continuum envelopes and conical-point dynamics.

pub mod coin;
pub mod diabolo;
pub mod continuum;
pub mod error;
pub mod evolve;
pub mod fft;
pub mod io;
pub mod lattice;
pub mod optimize;
pub mod packet;
pub mod registry;
pub mod spectral;

pub use coin::{coin_index, dft_coin, grover_coin, momentum_coin, CoinKind, CoinMatrix, Direction, KPoint, MomentumCoin};
pub use error::{QwError, Result};
pub use evolve::{branch_weights, evolve_spectral, project_onto_branches, Evolver, SpectralPropagator};
pub use lattice::{
    evolve_position, moments, moments_where, probability_field, step_position, translate, Grid, LatticeField,
    MomentSummary, ProbabilityField,
};
pub use registry::{dispersion_model, BackendRegistry, CoinRegistry};
pub use packet::{build_packet, build_sinc_packet, CoinSelector, EnvelopeKind, WavePacketSpec};
pub use continuum::{
    compare_exact_continuum, continuum_coefficients, evolve_envelope, gaussian_closed_form, ContinuumCoefficients,
    Envelope, ErrorReport,
};
pub use diabolo::{
    azimuthal_symmetry, diabolo_coin_state, p0_p1, poggendorff_asymptotic, ring_features, RadialProfile,
    RadialSpectrum, RingFeatures,
};
