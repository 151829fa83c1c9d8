use crate::scene_graph::EdgePolicy;
use crate::sim::{SceneParams, SUCCESS_DISTANCE_M};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prompting {
    /// Four-stage chain of thought per subgraph.
    #[default]
    Cot,
    /// The subgraph flattened to one text prompt.
    FlatText,
}

impl std::str::FromStr for Prompting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cot" => Ok(Prompting::Cot),
            "flat-text" => Ok(Prompting::FlatText),
            other => Err(format!("unknown prompting {other:?} (cot, flat-text)")),
        }
    }
}

/// Switches for the ablation studies. The default is the full system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablations {
    pub reperception: bool,
    /// Without the scene graph the agent picks the nearest frontier and
    /// breaks ties at random; re-perception is off too, since it scores
    /// candidates from the graph.
    pub scene_graph: bool,
    pub rooms: bool,
    pub groups: bool,
    pub edges: EdgePolicy,
    pub prompting: Prompting,
}

impl Default for Ablations {
    fn default() -> Self {
        Self { reperception: true, scene_graph: true, rooms: true, groups: true, edges: EdgePolicy::All, prompting: Prompting::Cot }
    }
}

impl Ablations {
    pub fn uses_reperception(&self) -> bool {
        self.reperception && self.scene_graph
    }
}

/// Everything that determines an episode apart from the scene and the
/// providers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub ablations: Ablations,
    pub success_distance: f64,
    /// Seed for the agent's own random choices.
    pub seed: u64,
    /// Replan the exploration path after this many steps.
    pub replan_every: u32,
    pub clearance_m: f64,
    pub clearance_weight: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            ablations: Ablations::default(),
            success_distance: SUCCESS_DISTANCE_M,
            seed: 0,
            replan_every: 10,
            clearance_m: 0.3,
            clearance_weight: 4.0,
        }
    }
}

/// A suite: one scene per seed, all generated with `params`, all run with
/// `agent`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub name: String,
    pub seeds: Vec<u64>,
    pub params: SceneParams,
    /// Vary the room count with the seed over 2..=6 instead of using
    /// `params.room_count`.
    pub vary_rooms: bool,
    pub agent: AgentConfig,
    pub provider: String,
}

impl SuiteConfig {
    pub fn params_for(&self, seed: u64) -> SceneParams {
        let mut p = self.params.clone();
        if self.vary_rooms {
            p.room_count = 2 + (seed % 5) as usize;
        }
        p
    }

    /// Hex sha256 of the canonical JSON of the configuration.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_tracks_config() {
        let a = SuiteConfig {
            name: "s".into(),
            seeds: vec![1, 2],
            params: SceneParams::default(),
            vary_rooms: true,
            agent: AgentConfig::default(),
            provider: "oracle".into(),
        };
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.agent.ablations.reperception = false;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn no_scene_graph_disables_reperception() {
        let a = Ablations { scene_graph: false, ..Ablations::default() };
        assert!(!a.uses_reperception());
    }

    #[test]
    fn parse_prompting() {
        assert_eq!("flat-text".parse::<Prompting>(), Ok(Prompting::FlatText));
        assert!("x".parse::<Prompting>().is_err());
    }
}
