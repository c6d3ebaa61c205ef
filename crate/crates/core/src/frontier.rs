//! Mission-lifetime frontier bookkeeping. Frontiers are remembered across
//! planning cycles so consumed regions are never re-targeted and unreached
//! frontiers survive for hand-off.

use serde::{Deserialize, Serialize};

use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontierStatus {
    Open,
    Consumed,
    Shared,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub id: u32,
    pub position: Point3,
    pub gain: f64,
    pub status: FrontierStatus,
}

/// Registry of every frontier observed during a mission.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FrontierRegistry {
    entries: Vec<FrontierEntry>,
    next_id: u32,
}

impl FrontierRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn entries(&self) -> &[FrontierEntry] {
        &self.entries
    }

    pub fn open_frontiers(&self) -> impl Iterator<Item = &FrontierEntry> {
        self.entries.iter().filter(|e| e.status == FrontierStatus::Open)
    }

    pub fn open_count(&self) -> usize {
        self.open_frontiers().count()
    }

    /// Registers a frontier unless another entry (any status) already lies
    /// within `rho`. An existing open entry within `rho` has its gain
    /// refreshed to the larger value. Returns the entry id covering the
    /// position.
    pub fn observe(&mut self, position: Point3, gain: f64, rho: f64) -> u32 {
        for e in &mut self.entries {
            if e.position.dist(&position) <= rho {
                if e.status == FrontierStatus::Open && gain > e.gain {
                    e.gain = gain;
                }
                return e.id;
            }
        }
        let id = self.next_id;
        self.next_id += 1;
        self.entries.push(FrontierEntry { id, position, gain, status: FrontierStatus::Open });
        id
    }

    /// True when any non-consumed entry lies within `rho` of `position`
    /// (used to keep candidate targets away from spent regions).
    pub fn is_consumed_near(&self, position: &Point3, rho: f64) -> bool {
        self.entries
            .iter()
            .any(|e| e.status == FrontierStatus::Consumed && e.position.dist(position) <= rho)
    }

    /// Consumes open frontiers within `rho` of the robot's traveled trail.
    pub fn consume_by_trail(&mut self, trail: &[Point3], rho: f64) -> usize {
        let mut n = 0;
        for e in &mut self.entries {
            if e.status != FrontierStatus::Open {
                continue;
            }
            if trail.iter().any(|p| p.dist(&e.position) <= rho) {
                e.status = FrontierStatus::Consumed;
                n += 1;
            }
        }
        n
    }

    /// Re-evaluates open frontiers with a caller-supplied gain function and
    /// consumes those at or below `phi_min`.
    pub fn consume_by_gain(&mut self, phi_min: f64, mut gain_of: impl FnMut(&Point3) -> f64) -> usize {
        let mut n = 0;
        for e in &mut self.entries {
            if e.status != FrontierStatus::Open {
                continue;
            }
            let phi = gain_of(&e.position);
            e.gain = phi;
            if phi <= phi_min {
                e.status = FrontierStatus::Consumed;
                n += 1;
            }
        }
        n
    }

    /// Marks the given entries as handed off to the partner agent.
    pub fn mark_shared(&mut self, ids: &[u32]) {
        for e in &mut self.entries {
            if ids.contains(&e.id) && e.status == FrontierStatus::Open {
                e.status = FrontierStatus::Shared;
            }
        }
    }
}
