//! Stiffness modeling of parallelogram linkages with virtual joints.
//!
//! A parallelogram linkage is modeled as two serial chains: passive pivot,
//! rigid bar of length L, a 6-coordinate virtual spring carrying the bar's
//! elasticity, a second passive pivot, and half of the platform link (the
//! chains attach at z = ±d/2). The library computes
//!
//! - nonlinear static equilibrium for a prescribed platform pose, via a
//!   Newton iteration on the constrained stationarity conditions
//!   ([`solve_parallelogram`]),
//! - force-deflection sweeps with buckling detection
//!   ([`force_deflection_sweep`]),
//! - the linearized 6x6 Cartesian stiffness, numerically from the loaded
//!   model ([`total_stiffness`]) or in closed form for the unloaded case
//!   ([`analytic_unloaded_stiffness`]),
//! - the rank-5 structure of that matrix and its reduction to five orthogonal
//!   one-dimensional springs ([`pseudo_rigid_reduction`]).
//!
//! Units are millimeters, newtons, and radians throughout; wrenches are
//! N / N·mm, poses are mm / rad. The passive pivots make the platform's
//! vertical arc a zero-stiffness direction, so the stiffness matrix is
//! singular by construction and the usual inverse-compliance shortcuts do
//! not apply.
//!
//! ```
//! use paraflex::{orthoglide_fixture, passive_path_target, solve_parallelogram};
//!
//! let model = orthoglide_fixture().to_model().unwrap();
//! // Traveling along the passive arc costs (almost) no force...
//! let free = solve_parallelogram(&model, &passive_path_target(&model, 0.5), None).unwrap();
//! assert!(free.total_wrench.amax() < 1e-6);
//! // ...while an axial offset of 1 um is held by 44 N (22 N per bar).
//! let mut stretched = model.unloaded_pose();
//! stretched[0] += 1e-3;
//! let held = solve_parallelogram(&model, &stretched, None).unwrap();
//! assert!((held.total_wrench[0] - 44.0).abs() < 1e-6);
//! ```

pub mod config;
pub mod equilibrium;
pub mod error;
pub mod linkage;
pub mod spatial;
pub mod stiffness;

pub use nalgebra;

pub use config::{derived_width, load_config, orthoglide_fixture, parse_config, ModelConfig, UNITS};
pub use equilibrium::{
    force_deflection_sweep, solve_chain_equilibrium, solve_parallelogram, ChainEquilibrium,
    EquilibriumResult, SweepRecord, DEFAULT_MAX_ITER, DEFAULT_TOL, SINGULAR_CONDITION,
    WORKSPACE_AXIAL_FACTOR,
};
pub use error::{Error, Result};
pub use linkage::{
    chain_hessians, chain_jacobians, chain_pose, chain_transform, hessian_asymmetry,
    passive_path_target, ChainHessians, ChainJacobians, ChainState, ParallelogramModel,
    ELASTIC_ROTATION_LIMIT, ELASTIC_TRANSLATION_FACTOR,
};
pub use spatial::{
    compose, elem_transform, pose_from_transform, transform_from_pose, ElemKind, Pose, Transform4,
    ORIENTATION_GUARD,
};
pub use stiffness::{
    analytic_unloaded_stiffness, bar_frame_stiffness, buckling_indicator, chain_indicator,
    chain_stiffness, pseudo_rigid_reduction, range_restricted_min_eig, rank_analysis,
    spring_margin, stiffness_system_condition, total_stiffness, unloaded_stiffness,
    CartesianStiffness, PseudoRigidModel, RankReport, RANK_THRESHOLD,
};
