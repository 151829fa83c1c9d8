use super::{NodeId, RangeClass, SceneGraph};
use crate::geometry::Vec2;
use crate::prompts::SubgraphText;
use serde::{Deserialize, Serialize};

/// An object node with its parents and directly related objects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub central: NodeId,
    pub neighbors: Vec<NodeId>,
    pub groups: Vec<NodeId>,
    pub room: Option<NodeId>,
    /// Relation edges incident to the central node, as ordered pairs.
    pub edges: Vec<(NodeId, NodeId)>,
}

impl Subgraph {
    /// Node and edge labels as they appear in prompts: the central object
    /// first, then related objects, groups and the room.
    pub fn text(&self, graph: &SceneGraph) -> SubgraphText {
        let cat = |id: NodeId| graph.object(id).map(|o| o.category.clone()).unwrap_or_default();
        let mut nodes = vec![cat(self.central)];
        nodes.extend(self.neighbors.iter().map(|n| cat(*n)));
        nodes.extend(self.groups.iter().filter_map(|g| graph.group(*g)).map(|g| g.label.clone()));
        nodes.extend(self.room.and_then(|r| graph.room(r)).map(|r| r.room_type.clone()));
        let edges = self
            .edges
            .iter()
            .filter_map(|(a, b)| graph.relation(*a, *b))
            .map(|e| format!("{} {} {}", cat(e.a), e.relation, cat(e.b)))
            .collect();
        SubgraphText { nodes, edges }
    }

    pub fn center(&self, graph: &SceneGraph) -> Option<Vec2> {
        graph.object(self.central).map(|o| o.centroid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub id: NodeId,
    pub category: String,
    pub confidence: f64,
    pub centroid: [f64; 2],
    pub footprint_cells: usize,
    pub first_seen: u32,
    pub last_seen: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupEntry {
    pub id: NodeId,
    pub label: String,
    pub members: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoomEntry {
    pub id: NodeId,
    pub room_type: String,
    pub region_cells: usize,
    pub walls: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationEntry {
    pub a: NodeId,
    pub b: NodeId,
    pub relation: String,
    pub range: RangeClass,
    pub verified: bool,
    pub flagged: bool,
}

/// Serializable view of a graph at one revision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub revision: u64,
    pub objects: Vec<ObjectEntry>,
    pub groups: Vec<GroupEntry>,
    pub rooms: Vec<RoomEntry>,
    pub relations: Vec<RelationEntry>,
    /// `[parent, child]` pairs.
    pub affiliations: Vec<[NodeId; 2]>,
}

fn round(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

impl GraphSnapshot {
    pub fn of(graph: &SceneGraph) -> Self {
        Self {
            revision: graph.revision(),
            objects: graph
                .objects()
                .map(|o| ObjectEntry {
                    id: o.id,
                    category: o.category.clone(),
                    confidence: round(o.confidence),
                    centroid: [round(o.centroid.x), round(o.centroid.y)],
                    footprint_cells: o.footprint.len(),
                    first_seen: o.first_seen,
                    last_seen: o.last_seen,
                })
                .collect(),
            groups: graph
                .groups()
                .map(|g| GroupEntry { id: g.id, label: g.label.clone(), members: g.members.iter().copied().collect() })
                .collect(),
            rooms: graph
                .rooms()
                .map(|r| RoomEntry {
                    id: r.id,
                    room_type: r.room_type.clone(),
                    region_cells: r.region.len(),
                    walls: r.wall_segments.len(),
                })
                .collect(),
            relations: graph
                .relation_edges()
                .map(|e| RelationEntry {
                    a: e.a,
                    b: e.b,
                    relation: e.relation.clone(),
                    range: e.range_class,
                    verified: e.verified,
                    flagged: e.flagged,
                })
                .collect(),
            affiliations: graph.affiliation_edges().map(|e| [e.parent, e.child]).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }
}
