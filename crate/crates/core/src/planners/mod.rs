//! Non-learned baselines: greedy centralized search, a cyclic tour through
//! guard points, and uniform random actions.

mod gcs;
mod guard;
mod path;
mod random;
mod tsp;
mod tspc;

pub use gcs::{gcs_select_candidates, gcs_step, Assignment, GcsPolicy, DEFAULT_D_MIN};
pub use guard::guard_points;
pub use path::{distance_field, shortest_path, UNREACHABLE};
pub use random::{random_policy, RandomPolicy};
pub use tsp::{nearest_neighbor_order, tour_length, tsp_tour, two_opt, DistanceMatrix, Tour};
pub use tspc::TspcPolicy;
