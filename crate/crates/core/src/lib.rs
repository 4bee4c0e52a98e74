//! Situation-aware allocation of perception resources.
//!
//! A multi-layer attention map marks which cells around the ego vehicle need
//! perception and how much. It is reduced to a polar requirement, and a
//! configuration forest over the module catalog yields the cheapest module
//! set meeting it. The crate is `no_std` (needs `alloc`); file formats and the
//! command line live in the `awarekit` crate.

#![no_std]

extern crate alloc;

pub mod attention;
pub mod geometry;
pub mod optimizer;
pub mod pipeline;
pub mod registry;
pub mod situation;
pub mod world;

pub use attention::{build_mlam, to_polar, AttentionGrid, AttentionParams, GridSpec, PolarRequirementMap};
pub use geometry::Point2;
pub use optimizer::{AggregationMode, ConfigForest, Configuration, DynamicConstraints, Infeasible, RuleSet};
pub use pipeline::{run_scenario, CycleResult, RunMetrics, RunMode, SimConfig, Simulator};
pub use registry::{ModuleDescriptor, ModuleId, Registry};
pub use situation::{detect_situation, ActivationTable, Situation};
pub use world::{EgoState, Frame, MapModel, Scenario, ZoneTag};
