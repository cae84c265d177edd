//! Persistent-monitoring grid world with occlusion-aware visibility.
//!
//! The crate is `no_std` (it needs `alloc`) and carries everything that does
//! not touch the filesystem: the world model and penalty recurrence, the
//! square field-of-view, per-agent observation rendering, the three baseline
//! planners, a small reverse-mode autodiff with the graph-attention
//! actor-critic and its PPO trainer, and the trajectory analysis tools.
//!
//! File formats, configuration, checkpoints and the CLI live in the `vpm`
//! crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod episode;
mod error;
pub mod grid;
pub mod nn;
pub mod observation;
pub mod penalty;
pub mod planners;
pub mod policy;
pub mod visibility;
pub mod world;

pub use error::{Error, Result};
pub use grid::{Action, Cell, GridMap, ParsedMap};
pub use penalty::PenaltyField;
pub use visibility::VisibilityMask;
pub use world::{AgentState, WorldConfig, WorldState};
