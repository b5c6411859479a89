//! Diagrams shipped with the crate.

use crate::model::{deserialize, Diagram};

/// The physical-activity example: poster strategy, self-efficacy mechanism,
/// stair-climbing barrier and outcomes, plus one moderator and one
/// precondition.
pub const PHYSICAL_ACTIVITY_JSON: &str = include_str!("../fixtures/physical_activity.cpd.json");

pub fn physical_activity() -> Diagram {
    deserialize(PHYSICAL_ACTIVITY_JSON).expect("bundled fixture is valid")
}
