//! Experience-guided sampling for a fixed-base planar kinematic chain among
//! circular obstacles.
//!
//! The workspace is split into pairs of nearby circles. For each pair a
//! Gaussian-mixture sampler is built offline from solved local planning
//! queries and kept in an [`ExperienceDatabase`]. At query time the
//! samplers of every pair are retrieved, rotated onto the query, combined
//! into one mixture, and mixed with uniform sampling inside RRT, BiRRT or
//! PRM.
//!
//! ```
//! use glsampler::{plan, ChainSpec, Configuration, GlSampler, PlannerConfig, PlannerKind, World};
//! use nalgebra::Point2;
//!
//! let chain = ChainSpec::new(Point2::origin(), vec![1.0; 4]).unwrap();
//! let world = World::new(chain.clone(), vec![]);
//! let sampler = GlSampler::uniform(chain.joint_limits.clone(), 7);
//! let result = plan(
//!     &world,
//!     &Configuration::zeros(4),
//!     &Configuration::new(vec![0.2; 4]),
//!     &sampler,
//!     &PlannerConfig::new(PlannerKind::Birrt),
//! )
//! .unwrap();
//! assert!(result.path.is_some());
//! ```

pub mod error;
pub mod experience;
pub mod geometry;
pub mod planners;
pub mod sampling;
pub mod workspace;

pub use error::{Error, Result};
pub use experience::{
    build_entry, generate_local_experience, merge_cliques, shortcut, transform_sampler,
    DatabaseEntry, ExperienceConfig, ExperienceDatabase, Provenance, Retrieved,
};
pub use geometry::{
    config_valid, first_violation, forward_kinematics, motion_valid, segment_circle_collides,
    wrap_angle, ChainPose, ChainSpec, Circle, Configuration, JointLimit, Violation,
};
pub use planners::{extract_path, plan, Outcome, Path, PlanResult, PlannerConfig, PlannerKind};
pub use sampling::{
    density, sample_gl, sample_gmm, sample_uniform, seeded_rng, synthesize, ConfigSampler,
    CovarianceSpec, GlSampler, GmmSampler, SamplerRng, SynthesizedSampler,
};
pub use workspace::{
    canonicalize, decompose, similarity, CanonicalPrimitive, Descriptor, LocalPrimitive, World,
};
