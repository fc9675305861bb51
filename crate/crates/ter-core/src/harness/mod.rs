//! Experiment harness: evaluation protocol, metric records and CSV
//! emission, online/offline training loops, and multi-seed aggregation.

pub mod eval;
pub mod record;
pub mod train;

pub use eval::evaluate;
pub use record::{aggregate, emit, emit_aggregate, parse_csv, AggregateRow, RunRecord};
pub use train::{collect_random_episodes, train, Trainer};
