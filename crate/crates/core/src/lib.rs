//! Temporal PDDLStream planning core.
//!
//! The pipeline: parse a PDDL domain/problem (plus optional `.stream`
//! declarations), transform instantaneous actions into durative start/end
//! pairs on a quantized time grid, evaluate clock and cost streams eagerly,
//! ground with delete-relaxation pruning, and search with weighted A* for a
//! plan minimizing Σ (start time + duration). Schedules and Gantt renderings
//! are extracted from finished plans.

pub mod error;
pub mod model;
pub mod pddl;
pub mod planner;
pub mod schedule;
pub mod search;
pub mod streams;
pub mod temporal;
