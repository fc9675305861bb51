//! Reference samplers the topological sweep is compared against:
//! uniform replay, prioritized replay, backward episode replay, and
//! corrective-feedback reweighting.

pub mod discor;
pub mod ebu;
pub mod per;
pub mod sum_tree;
pub mod uer;

pub use discor::DiscorModel;
pub use ebu::EpisodeBuffer;
pub use per::PerSampler;
pub use sum_tree::SumTree;
pub use uer::uer_sample;
