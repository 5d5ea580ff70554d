//! Empirical checks of the stability estimate and of the auxiliary
//! estimates it rests on.

pub mod kelvin;
pub mod lipschitz;
pub mod reciprocity;
pub mod sampler;
pub mod spheres;

pub use kelvin::{kelvin_decay_fit, kelvin_eval, kelvin_gradient_norm, kelvin_pde_residual, KelvinDecay};
pub use lipschitz::{lipschitz_probe, noise_linearity_probe, LipschitzConfig, NoiseRecord, PairSample, StabilityReport};
pub use reciprocity::{green_reciprocity_check, reciprocity_on_pairs, ReciprocityReport};
pub use sampler::{sample_rng, AdmissibleSampler, MAX_ATTEMPTS};
pub use spheres::{three_spheres_check, three_spheres_fit, SpheresConfig, SpheresFit, ThreeSpheresRecord};
