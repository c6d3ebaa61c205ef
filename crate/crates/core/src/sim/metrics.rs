//! Mission bookkeeping: per-cycle records, deployment events, and their
//! CSV / JSON-lines serializations. All timestamps are logical cycle
//! indices so outputs are byte-identical across runs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    /// "ground" or "aerial".
    pub agent: String,
    /// Voxels (free or occupied) known to this agent's map after the cycle.
    pub explored_voxels: u64,
    /// Open frontiers in this agent's registry after the cycle.
    pub open_frontiers: usize,
    /// Decision taken: drive / deploy / fallback / complete / failed.
    pub decision: String,
    pub path_terminal: Option<u32>,
    /// Path confidence of the chosen path, when one exists.
    pub path_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeploymentEvent {
    pub cycle: usize,
    /// Unified-graph node id of the hand-off target.
    pub target_frontier: u32,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MissionMetrics {
    pub cycles: Vec<CycleRecord>,
    pub deployments: Vec<DeploymentEvent>,
    /// Both agents ran out of frontiers (as opposed to hitting the cap).
    pub completed: bool,
    pub cycle_cap_hit: bool,
    /// Ground-map accesses observed from the aerial agent; must stay 0.
    pub cross_map_reads: u64,
    pub final_ground_free: u64,
    pub final_aerial_free: u64,
}

impl MissionMetrics {
    /// Explored counts never decrease for either agent.
    pub fn validate(&self) -> Result<()> {
        for agent in ["ground", "aerial"] {
            let mut last = 0u64;
            for rec in self.cycles.iter().filter(|r| r.agent == agent) {
                if rec.explored_voxels < last {
                    return Err(Error::Contract(format!(
                        "{agent} explored count regressed at cycle {}",
                        rec.cycle
                    )));
                }
                last = rec.explored_voxels;
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "cycle,agent,explored_voxels,open_frontiers,decision,path_terminal,path_confidence"
        )?;
        for r in &self.cycles {
            let terminal = r.path_terminal.map_or(String::new(), |t| t.to_string());
            let conf = r.path_confidence.map_or(String::new(), |c| format!("{c:.6}"));
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.cycle, r.agent, r.explored_voxels, r.open_frontiers, r.decision, terminal, conf
            )?;
        }
        Ok(())
    }

    /// JSON-lines decision log: one cycle record per line, then deployment
    /// events and the summary line.
    pub fn write_decision_log<W: Write>(&self, w: &mut W) -> Result<()> {
        for r in &self.cycles {
            writeln!(w, "{}", serde_json::to_string(r)?)?;
        }
        for d in &self.deployments {
            writeln!(w, "{}", serde_json::to_string(d)?)?;
        }
        let summary = serde_json::json!({
            "completed": self.completed,
            "cycle_cap_hit": self.cycle_cap_hit,
            "deployments": self.deployments.len(),
            "cross_map_reads": self.cross_map_reads,
            "final_ground_free": self.final_ground_free,
            "final_aerial_free": self.final_aerial_free,
        });
        writeln!(w, "{summary}")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(cycle: usize, agent: &str, free: u64) -> CycleRecord {
        CycleRecord {
            cycle,
            agent: agent.into(),
            explored_voxels: free,
            open_frontiers: 1,
            decision: "drive".into(),
            path_terminal: Some(3),
            path_confidence: Some(0.7),
        }
    }

    #[test]
    fn monotonicity_enforced_per_agent() {
        let mut m = MissionMetrics::default();
        m.cycles.push(record(0, "ground", 10));
        m.cycles.push(record(1, "ground", 20));
        m.cycles.push(record(2, "aerial", 5));
        m.validate().unwrap();
        m.cycles.push(record(3, "ground", 15));
        assert!(m.validate().is_err());
    }

    #[test]
    fn csv_and_log_are_stable() {
        let mut m = MissionMetrics::default();
        m.cycles.push(record(0, "ground", 10));
        m.deployments.push(DeploymentEvent { cycle: 0, target_frontier: 3 });
        m.completed = true;
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        m.write_csv(&mut csv_a).unwrap();
        m.write_csv(&mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        assert!(String::from_utf8(csv_a).unwrap().contains("0,ground,10,1,drive,3,0.700000"));
        let mut log = Vec::new();
        m.write_decision_log(&mut log).unwrap();
        let text = String::from_utf8(log).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().last().unwrap().contains("\"deployments\":1"));
    }
}
