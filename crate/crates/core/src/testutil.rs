use crate::map::{parse_map, WorldState};

pub const DEMO_ATL: &str = include_str!("../../../fixtures/atl/demo.atl");
pub const DEMO_MAP: &str = include_str!("../../../fixtures/maps/cargo.xml");
pub const HOUSEHOLD_ATL: &str = include_str!("../../../fixtures/atl/household.atl");
pub const HOUSEHOLD_MAP: &str = include_str!("../../../fixtures/maps/household.xml");

pub fn demo_world() -> WorldState {
    WorldState::from_map(&parse_map(DEMO_MAP).unwrap()).unwrap()
}

pub fn household_world() -> WorldState {
    WorldState::from_map(&parse_map(HOUSEHOLD_MAP).unwrap()).unwrap()
}
