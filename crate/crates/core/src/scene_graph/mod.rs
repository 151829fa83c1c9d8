//! Online hierarchical scene graph: objects, groups of related objects, and
//! rooms, with relation edges between objects and affiliation edges from
//! rooms to the nodes they contain.

mod edges;
mod lexicon;
mod subgraph;

pub use edges::{
    classify_edge_range, edge_pairs, normalize_relation, propose_edges_batched, propose_edges_naive, prune_long_edge, prune_short_edge,
    update_edges, CandidateEdge, CovisibilityLog, EdgePolicy, EdgeUpdate, PruneDecision, VlmBackend, VlmError,
    VlmQuery, PARALLEL_TOLERANCE_DEG, RELATION_VOCABULARY,
};
pub use lexicon::{RelatedCategoryLexicon, DEFAULT_PAIRS};
pub use subgraph::{GraphSnapshot, Subgraph};

use crate::geometry::{Segment, Vec2};
use crate::mapping::Cell;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

pub type NodeId = u32;

/// Detections closer than this to an existing node of the same category are
/// merged into it.
pub const MERGE_RADIUS_M: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("detection {index} has an empty footprint")]
    EmptyFootprint { index: usize },
    #[error("detection {index} has confidence {confidence} outside [0, 1]")]
    Confidence { index: usize, confidence: f64 },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("relation edge endpoints must be two distinct object nodes ({0}, {1})")]
    BadEdge(NodeId, NodeId),
}

/// One detected instance handed to the graph.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub category: String,
    pub confidence: f64,
    pub centroid: Vec2,
    pub footprint: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectNode {
    pub id: NodeId,
    pub category: String,
    pub confidence: f64,
    /// Mean of the merged detection centroids.
    pub centroid: Vec2,
    pub footprint: BTreeSet<Cell>,
    pub first_seen: u32,
    pub last_seen: u32,
    pub observations: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupNode {
    pub id: NodeId,
    pub members: BTreeSet<NodeId>,
    pub label: String,
}

/// A room as reported by perception. `key` identifies the same physical room
/// across observations.
#[derive(Clone, Debug, PartialEq)]
pub struct RoomObservation {
    pub key: u32,
    pub room_type: String,
    pub region: Arc<BTreeSet<Cell>>,
    pub walls: Vec<Segment>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoomNode {
    pub id: NodeId,
    pub key: u32,
    pub room_type: String,
    pub region: Arc<BTreeSet<Cell>>,
    pub wall_segments: Vec<Segment>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeClass {
    Short,
    Long,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub relation: String,
    pub range_class: RangeClass,
    pub verified: bool,
    /// Kept without verification because the checker was unavailable.
    pub flagged: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffiliationEdge {
    pub parent: NodeId,
    pub child: NodeId,
}

/// Ids returned by [`SceneGraph::register_detections`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Registered {
    /// Node of every detection, in detection order.
    pub ids: Vec<NodeId>,
    /// Nodes created by this call, ascending.
    pub created: Vec<NodeId>,
}

#[derive(Clone, Debug, Default)]
pub struct SceneGraph {
    objects: BTreeMap<NodeId, ObjectNode>,
    groups: BTreeMap<NodeId, GroupNode>,
    rooms: BTreeMap<NodeId, RoomNode>,
    room_keys: BTreeMap<u32, NodeId>,
    relations: BTreeMap<(NodeId, NodeId), RelationEdge>,
    /// child -> room
    affiliations: BTreeMap<NodeId, NodeId>,
    revision: u64,
    next_id: NodeId,
}

fn pair_key(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

impl SceneGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    fn bump(&mut self) {
        self.revision += 1;
    }

    fn fresh_id(&mut self) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn objects(&self) -> impl Iterator<Item = &ObjectNode> {
        self.objects.values()
    }

    pub fn object(&self, id: NodeId) -> Option<&ObjectNode> {
        self.objects.get(&id)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }

    pub fn groups(&self) -> impl Iterator<Item = &GroupNode> {
        self.groups.values()
    }

    pub fn group(&self, id: NodeId) -> Option<&GroupNode> {
        self.groups.get(&id)
    }

    pub fn rooms(&self) -> impl Iterator<Item = &RoomNode> {
        self.rooms.values()
    }

    pub fn room(&self, id: NodeId) -> Option<&RoomNode> {
        self.rooms.get(&id)
    }

    pub fn relation_edges(&self) -> impl Iterator<Item = &RelationEdge> {
        self.relations.values()
    }

    pub fn relation(&self, a: NodeId, b: NodeId) -> Option<&RelationEdge> {
        self.relations.get(&pair_key(a, b))
    }

    pub fn affiliation_edges(&self) -> impl Iterator<Item = AffiliationEdge> + '_ {
        self.affiliations.iter().map(|(c, p)| AffiliationEdge { parent: *p, child: *c })
    }

    pub fn room_of(&self, child: NodeId) -> Option<NodeId> {
        self.affiliations.get(&child).copied()
    }

    /// Groups that contain `object`.
    pub fn groups_of(&self, object: NodeId) -> impl Iterator<Item = &GroupNode> {
        self.groups.values().filter(move |g| g.members.contains(&object))
    }

    /// Objects linked to `id` by a relation edge.
    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        self.relations
            .keys()
            .filter_map(|(a, b)| if *a == id { Some(*b) } else if *b == id { Some(*a) } else { None })
            .collect()
    }

    /// Merges each detection into a matching node or creates a new one.
    ///
    /// A detection matches the nearest node of the same category whose
    /// centroid lies within [`MERGE_RADIUS_M`]. The whole batch is rejected
    /// before any change if a detection is malformed.
    pub fn register_detections(&mut self, detections: &[Detection], step: u32) -> Result<Registered, GraphError> {
        for (index, d) in detections.iter().enumerate() {
            if d.footprint.is_empty() {
                return Err(GraphError::EmptyFootprint { index });
            }
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(GraphError::Confidence { index, confidence: d.confidence });
            }
        }
        let mut out = Registered::default();
        for d in detections {
            let matched = self
                .objects
                .values()
                .filter(|o| o.category.eq_ignore_ascii_case(&d.category))
                .map(|o| (o.centroid.dist(d.centroid), o.id))
                .filter(|(dist, _)| *dist <= MERGE_RADIUS_M)
                .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)))
                .map(|(_, id)| id);
            let id = match matched {
                Some(id) => {
                    let o = self.objects.get_mut(&id).expect("matched node exists");
                    let n = o.observations as f64;
                    o.centroid = (o.centroid * n + d.centroid) * (1.0 / (n + 1.0));
                    o.observations += 1;
                    o.confidence = o.confidence.max(d.confidence);
                    o.footprint.extend(d.footprint.iter().copied());
                    o.last_seen = step;
                    id
                }
                None => {
                    let id = self.fresh_id();
                    self.objects.insert(
                        id,
                        ObjectNode {
                            id,
                            category: d.category.clone(),
                            confidence: d.confidence,
                            centroid: d.centroid,
                            footprint: d.footprint.iter().copied().collect(),
                            first_seen: step,
                            last_seen: step,
                            observations: 1,
                        },
                    );
                    out.created.push(id);
                    id
                }
            };
            out.ids.push(id);
        }
        if !detections.is_empty() {
            self.bump();
        }
        Ok(out)
    }

    /// Adds a room node the first time its key is seen.
    pub fn register_room(&mut self, obs: &RoomObservation) -> NodeId {
        if let Some(id) = self.room_keys.get(&obs.key) {
            return *id;
        }
        let id = self.fresh_id();
        self.rooms.insert(
            id,
            RoomNode {
                id,
                key: obs.key,
                room_type: obs.room_type.clone(),
                region: Arc::clone(&obs.region),
                wall_segments: obs.walls.clone(),
            },
        );
        self.room_keys.insert(obs.key, id);
        self.bump();
        id
    }

    /// Inserts a relation edge. An existing edge on the same pair is kept.
    pub fn insert_relation(&mut self, edge: RelationEdge) -> Result<bool, GraphError> {
        if edge.a == edge.b || !self.objects.contains_key(&edge.a) || !self.objects.contains_key(&edge.b) {
            return Err(GraphError::BadEdge(edge.a, edge.b));
        }
        let k = pair_key(edge.a, edge.b);
        if self.relations.contains_key(&k) {
            return Ok(false);
        }
        self.relations.insert(k, edge);
        self.bump();
        Ok(true)
    }

    pub fn remove_relation(&mut self, a: NodeId, b: NodeId) -> Option<RelationEdge> {
        let e = self.relations.remove(&pair_key(a, b));
        if e.is_some() {
            self.bump();
        }
        e
    }

    /// Groups objects joined by relation edges between related categories,
    /// transitively, until nothing changes. Returns the ids of new groups.
    ///
    /// Existing groups absorb new members; when a new edge joins two groups
    /// they merge into the one with the smaller id.
    pub fn form_groups(&mut self, lexicon: &RelatedCategoryLexicon) -> Vec<NodeId> {
        let ids: Vec<NodeId> = self.objects.keys().copied().collect();
        let index: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
        let mut parent: Vec<usize> = (0..ids.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut linked = vec![false; ids.len()];
        for e in self.relations.values() {
            let (ca, cb) = (&self.objects[&e.a].category, &self.objects[&e.b].category);
            if lexicon.related(ca, cb) {
                let (ia, ib) = (index[&e.a], index[&e.b]);
                linked[ia] = true;
                linked[ib] = true;
                let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        let mut components: BTreeMap<usize, BTreeSet<NodeId>> = BTreeMap::new();
        for i in 0..ids.len() {
            if linked[i] {
                let r = find(&mut parent, i);
                components.entry(r).or_default().insert(ids[i]);
            }
        }
        let mut created = Vec::new();
        for members in components.into_values().filter(|m| m.len() >= 2) {
            let owners: Vec<NodeId> =
                self.groups.values().filter(|g| !g.members.is_disjoint(&members)).map(|g| g.id).collect();
            let label = self.group_label(&members);
            match owners.split_first() {
                None => {
                    let id = self.fresh_id();
                    self.groups.insert(id, GroupNode { id, members, label });
                    created.push(id);
                    self.bump();
                }
                Some((keep, absorbed)) => {
                    for g in absorbed {
                        self.groups.remove(g);
                        self.affiliations.remove(g);
                    }
                    let g = self.groups.get_mut(keep).expect("owner exists");
                    if g.members != members || !absorbed.is_empty() {
                        g.members = members;
                        g.label = label;
                        self.bump();
                    }
                }
            }
        }
        created
    }

    fn group_label(&self, members: &BTreeSet<NodeId>) -> String {
        let mut cats: Vec<&str> = Vec::new();
        for m in members {
            let c = self.objects[m].category.as_str();
            if !cats.contains(&c) {
                cats.push(c);
            }
        }
        cats.join(" and ")
    }

    /// Links objects to the room whose region contains their whole footprint,
    /// and groups to the room shared by all their members. Objects straddling
    /// rooms get no parent. Returns the edges added by this call.
    pub fn assign_room_affiliations(&mut self) -> Vec<AffiliationEdge> {
        let mut added = Vec::new();
        if self.rooms.is_empty() {
            return added;
        }
        let pending: Vec<NodeId> =
            self.objects.keys().filter(|id| !self.affiliations.contains_key(id)).copied().collect();
        for id in pending {
            let fp = &self.objects[&id].footprint;
            let containing: Vec<NodeId> =
                self.rooms.values().filter(|r| fp.iter().all(|c| r.region.contains(c))).map(|r| r.id).collect();
            match containing.as_slice() {
                [room] => {
                    self.affiliations.insert(id, *room);
                    added.push(AffiliationEdge { parent: *room, child: id });
                }
                [] => {
                    let touched = self.rooms.values().filter(|r| fp.iter().any(|c| r.region.contains(c))).count();
                    if touched > 1 {
                        log::debug!("object {id} straddles {touched} rooms; no affiliation");
                    }
                }
                _ => log::debug!("object {id} lies in overlapping rooms; no affiliation"),
            }
        }
        let groups: Vec<(NodeId, BTreeSet<NodeId>)> = self.groups.values().map(|g| (g.id, g.members.clone())).collect();
        for (gid, members) in groups {
            let rooms: BTreeSet<Option<NodeId>> = members.iter().map(|m| self.affiliations.get(m).copied()).collect();
            let shared = match rooms.iter().collect::<Vec<_>>().as_slice() {
                [Some(r)] => Some(*r),
                _ => None,
            };
            let current = self.affiliations.get(&gid).copied();
            if current != shared {
                match shared {
                    Some(r) => {
                        self.affiliations.insert(gid, r);
                        added.push(AffiliationEdge { parent: r, child: gid });
                    }
                    None => {
                        self.affiliations.remove(&gid);
                    }
                }
            }
        }
        if !added.is_empty() {
            self.bump();
        }
        added
    }

    /// One subgraph per object node, in id order.
    pub fn decompose_subgraphs(&self) -> Vec<Subgraph> {
        self.objects.keys().map(|id| self.subgraph_of(*id).expect("object exists")).collect()
    }

    pub fn subgraph_of(&self, central: NodeId) -> Option<Subgraph> {
        self.objects.get(&central)?;
        let neighbors = self.neighbors(central);
        let edges = neighbors.iter().map(|n| pair_key(central, *n)).collect();
        Some(Subgraph {
            central,
            neighbors,
            groups: self.groups_of(central).map(|g| g.id).collect(),
            room: self.room_of(central),
            edges,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn det(category: &str, x: f64, y: f64) -> Detection {
        let c = Cell::new((x / 0.05) as i32, (y / 0.05) as i32);
        Detection { category: category.into(), confidence: 0.9, centroid: Vec2::new(x, y), footprint: vec![c] }
    }

    fn edge(a: NodeId, b: NodeId) -> RelationEdge {
        RelationEdge { a, b, relation: "next to".into(), range_class: RangeClass::Short, verified: true, flagged: false }
    }

    fn room(key: u32, x0: i32, x1: i32) -> RoomObservation {
        let region = (x0..x1).flat_map(|x| (0..100).map(move |y| Cell::new(x, y))).collect();
        RoomObservation { key, room_type: "bedroom".into(), region: Arc::new(region), walls: Vec::new() }
    }

    #[test]
    fn first_detection_creates_a_node() {
        let mut g = SceneGraph::new();
        let r = g.register_detections(&[det("chair", 1.0, 1.0)], 0).unwrap();
        assert_eq!(r.ids.len(), 1);
        assert_eq!(r.created, r.ids);
        assert_eq!(g.object_count(), 1);
    }

    #[test]
    fn nearby_same_category_merges() {
        let mut g = SceneGraph::new();
        g.register_detections(&[det("chair", 1.0, 1.0)], 0).unwrap();
        let r = g.register_detections(&[det("chair", 1.2, 1.0)], 3).unwrap();
        assert!(r.created.is_empty());
        let o = g.object(r.ids[0]).unwrap();
        assert_eq!(g.object_count(), 1);
        assert_eq!(o.footprint.len(), 2);
        assert_eq!(o.last_seen, 3);
        assert!((o.centroid.x - 1.1).abs() < 1e-12);
    }

    #[test]
    fn category_mismatch_blocks_merge() {
        let mut g = SceneGraph::new();
        let r = g.register_detections(&[det("chair", 1.0, 1.0), det("table", 1.0, 1.0)], 0).unwrap();
        assert_ne!(r.ids[0], r.ids[1]);
    }

    #[test]
    fn empty_footprint_rejects_the_batch() {
        let mut g = SceneGraph::new();
        let mut bad = det("chair", 1.0, 1.0);
        bad.footprint.clear();
        assert_eq!(
            g.register_detections(&[det("sofa", 2.0, 2.0), bad], 0),
            Err(GraphError::EmptyFootprint { index: 1 })
        );
        assert_eq!(g.object_count(), 0);
        assert_eq!(g.revision(), 0);
    }

    #[test]
    fn related_edge_forms_a_group_and_unrelated_does_not_extend_it() {
        let lex = RelatedCategoryLexicon::default();
        let mut g = SceneGraph::new();
        let ids = g
            .register_detections(&[det("table", 1.0, 1.0), det("chair", 2.0, 1.0), det("chair", 3.0, 1.0)], 0)
            .unwrap()
            .ids;
        g.insert_relation(edge(ids[0], ids[1])).unwrap();
        let created = g.form_groups(&lex);
        assert_eq!(created.len(), 1);
        let members: Vec<NodeId> = g.group(created[0]).unwrap().members.iter().copied().collect();
        assert_eq!(members, vec![ids[0], ids[1]]);
        assert_eq!(g.group(created[0]).unwrap().label, "table and chair");

        g.insert_relation(edge(ids[1], ids[2])).unwrap();
        let rev = g.revision();
        assert!(g.form_groups(&lex).is_empty());
        assert_eq!(g.group(created[0]).unwrap().members.len(), 2);
        assert_eq!(g.revision(), rev);
    }

    #[test]
    fn groups_grow_transitively_and_merge() {
        let lex = RelatedCategoryLexicon::default();
        let mut g = SceneGraph::new();
        let ids = g
            .register_detections(
                &[det("table", 1.0, 1.0), det("chair", 2.0, 1.0), det("sofa", 3.0, 1.0), det("table", 4.0, 1.0)],
                0,
            )
            .unwrap()
            .ids;
        g.insert_relation(edge(ids[0], ids[1])).unwrap();
        g.insert_relation(edge(ids[2], ids[3])).unwrap();
        assert_eq!(g.form_groups(&lex).len(), 2);
        g.insert_relation(edge(ids[0], ids[2])).unwrap();
        assert!(g.form_groups(&lex).is_empty());
        assert_eq!(g.groups().count(), 1);
        assert_eq!(g.groups().next().unwrap().members.len(), 4);
        assert!(g.form_groups(&lex).is_empty());
    }

    #[test]
    fn no_edges_no_groups() {
        let mut g = SceneGraph::new();
        g.register_detections(&[det("table", 1.0, 1.0), det("chair", 1.3, 1.0)], 0).unwrap();
        assert!(g.form_groups(&RelatedCategoryLexicon::default()).is_empty());
    }

    #[test]
    fn affiliation_by_containment() {
        let mut g = SceneGraph::new();
        assert!(g.assign_room_affiliations().is_empty());
        let ids = g.register_detections(&[det("chair", 1.0, 1.0), det("table", 3.0, 1.0)], 0).unwrap().ids;
        let bedroom = g.register_room(&room(7, 0, 50));
        let kitchen = g.register_room(&room(8, 50, 100));
        assert_eq!(g.register_room(&room(7, 0, 50)), bedroom);
        let added = g.assign_room_affiliations();
        assert_eq!(added, vec![
            AffiliationEdge { parent: bedroom, child: ids[0] },
            AffiliationEdge { parent: kitchen, child: ids[1] }
        ]);
        g.insert_relation(edge(ids[0], ids[1])).unwrap();
        let gid = g.form_groups(&RelatedCategoryLexicon::default())[0];
        assert!(g.assign_room_affiliations().is_empty());
        assert_eq!(g.room_of(gid), None);
    }

    #[test]
    fn straddling_object_gets_no_room() {
        let mut g = SceneGraph::new();
        let mut d = det("sofa", 2.45, 1.0);
        d.footprint = vec![Cell::new(49, 20), Cell::new(50, 20)];
        g.register_detections(&[d], 0).unwrap();
        g.register_room(&room(1, 0, 50));
        g.register_room(&room(2, 50, 100));
        assert!(g.assign_room_affiliations().is_empty());
    }

    #[test]
    fn one_subgraph_per_object() {
        let mut g = SceneGraph::new();
        let ids = g
            .register_detections(
                &[det("chair", 1.0, 1.0), det("table", 1.5, 1.0), det("a", 4.0, 1.0), det("b", 5.0, 1.0), det("c", 6.0, 1.0)],
                0,
            )
            .unwrap()
            .ids;
        let bedroom = g.register_room(&room(1, 0, 100));
        g.assign_room_affiliations();
        g.insert_relation(edge(ids[0], ids[1])).unwrap();
        let subs = g.decompose_subgraphs();
        assert_eq!(subs.len(), 5);
        assert_eq!(subs[0].central, ids[0]);
        assert_eq!(subs[0].neighbors, vec![ids[1]]);
        assert_eq!(subs[0].room, Some(bedroom));
        assert!(subs[2].neighbors.is_empty());
    }

    #[test]
    fn bad_edges_are_rejected() {
        let mut g = SceneGraph::new();
        let ids = g.register_detections(&[det("chair", 1.0, 1.0)], 0).unwrap().ids;
        assert!(g.insert_relation(edge(ids[0], ids[0])).is_err());
        assert!(g.insert_relation(edge(ids[0], 99)).is_err());
    }
}
