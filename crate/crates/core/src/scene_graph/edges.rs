use super::{GraphError, NodeId, RangeClass, RelationEdge, SceneGraph};
use crate::geometry::{line_angle_between, Segment, Vec2};
use crate::llm::{parse_structured, query_structured, LlmBackend, LlmError, QueryFailure, ResponseShape, Structured, Transcript};
use crate::mapping::OccupancyGrid;
use crate::prompts::{edge_prompt, PromptKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Relation labels accepted from the model; anything else becomes "near".
pub const RELATION_VOCABULARY: [&str; 8] =
    ["next to", "above", "opposite to", "below", "inside", "behind", "in front of", "near"];

/// Largest angle between a long edge and the nearest wall for the edge to
/// count as parallel to it.
pub const PARALLEL_TOLERANCE_DEG: f64 = 15.0;

const EDGE_RETRIES: u32 = 2;

pub fn normalize_relation(label: &str) -> String {
    let l = label.trim().to_lowercase();
    RELATION_VOCABULARY.iter().find(|v| **v == l).unwrap_or(&"near").to_string()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateEdge {
    pub a: NodeId,
    pub b: NodeId,
    pub relation: String,
}

/// Pairs submitted for one update: every new node against every previous
/// node, then each unordered pair of new nodes. Self pairs never appear, so
/// the count is `m*n + m*(m-1)/2`.
pub fn edge_pairs(new_ids: &[NodeId], previous: &[NodeId]) -> Vec<(NodeId, NodeId)> {
    let mut out = Vec::with_capacity(new_ids.len() * (previous.len() + new_ids.len()));
    for a in new_ids {
        for b in previous {
            out.push((*a, *b));
        }
    }
    for (i, a) in new_ids.iter().enumerate() {
        for b in &new_ids[i + 1..] {
            out.push((*a, *b));
        }
    }
    out
}

/// Asks for the relations of all pairs involving `new_ids` in one prompt and
/// maps the reply back onto the pairs by position.
///
/// A reply whose length does not match is retried; after the last retry the
/// pairs without a matching entry are dropped.
pub fn propose_edges_batched(
    graph: &SceneGraph,
    new_ids: &[NodeId],
    llm: &dyn LlmBackend,
    step: u32,
    transcript: &mut Transcript,
) -> Result<Vec<CandidateEdge>, LlmError> {
    if new_ids.is_empty() {
        return Ok(Vec::new());
    }
    let fresh: BTreeSet<NodeId> = new_ids.iter().copied().collect();
    let previous: Vec<NodeId> = graph.objects().map(|o| o.id).filter(|id| !fresh.contains(id)).collect();
    let pairs = edge_pairs(new_ids, &previous);
    if pairs.is_empty() {
        return Ok(Vec::new());
    }
    let cat = |id: NodeId| graph.object(id).map(|o| o.category.as_str()).unwrap_or("object");
    let labels: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (cat(*a), cat(*b))).collect();
    let prompt = edge_prompt(&labels);
    let expected = pairs.len();
    let reply = query_structured(
        llm,
        PromptKind::EdgeConnecting,
        &prompt,
        &[],
        ResponseShape::Relations,
        EDGE_RETRIES,
        step,
        transcript,
        |v| match v {
            Structured::Relations(r) if r.len() == expected => Ok(()),
            Structured::Relations(r) => Err(format!("{} relations for {expected} pairs", r.len())),
            _ => Err("not a relation array".into()),
        },
    );
    let relations = match reply {
        Ok(Structured::Relations(r)) => r,
        Ok(_) => unreachable!("validated shape"),
        Err(QueryFailure::Provider(e)) => return Err(e),
        Err(QueryFailure::Malformed(why)) => {
            let last = transcript.records.last().map(|r| r.response.as_str()).unwrap_or("");
            let partial = match parse_structured(last, ResponseShape::Relations) {
                Ok(Structured::Relations(r)) => r,
                _ => Vec::new(),
            };
            log::warn!("edge proposal at step {step}: {why}; keeping {} of {expected} pairs", partial.len().min(expected));
            partial
        }
    };
    Ok(pairs.iter().zip(relations).map(|((a, b), r)| CandidateEdge { a: *a, b: *b, relation: normalize_relation(&r) }).collect())
}

/// Baseline for [`propose_edges_batched`]: the same pairs, one prompt each.
/// Pairs whose reply stays malformed after the retries are dropped.
pub fn propose_edges_naive(
    graph: &SceneGraph,
    new_ids: &[NodeId],
    llm: &dyn LlmBackend,
    step: u32,
    transcript: &mut Transcript,
) -> Result<Vec<CandidateEdge>, LlmError> {
    let fresh: BTreeSet<NodeId> = new_ids.iter().copied().collect();
    let previous: Vec<NodeId> = graph.objects().map(|o| o.id).filter(|id| !fresh.contains(id)).collect();
    let cat = |id: NodeId| graph.object(id).map(|o| o.category.as_str()).unwrap_or("object");
    let mut out = Vec::new();
    for (a, b) in edge_pairs(new_ids, &previous) {
        let prompt = edge_prompt(&[(cat(a), cat(b))]);
        let reply = query_structured(
            llm,
            PromptKind::EdgeConnecting,
            &prompt,
            &[],
            ResponseShape::Relations,
            EDGE_RETRIES,
            step,
            transcript,
            |v| match v {
                Structured::Relations(r) if r.len() == 1 => Ok(()),
                _ => Err("expected one relation".into()),
            },
        );
        match reply {
            Ok(Structured::Relations(r)) => out.push(CandidateEdge { a, b, relation: normalize_relation(&r[0]) }),
            Ok(_) => unreachable!("validated shape"),
            Err(QueryFailure::Provider(e)) => return Err(e),
            Err(QueryFailure::Malformed(why)) => log::warn!("edge {a}-{b} at step {step}: {why}"),
        }
    }
    Ok(out)
}

/// Which object pairs have appeared together in one frame, and when first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovisibilityLog {
    first_together: BTreeMap<(NodeId, NodeId), u32>,
}

impl CovisibilityLog {
    pub fn record_frame(&mut self, step: u32, visible: &[NodeId]) {
        let ids: BTreeSet<NodeId> = visible.iter().copied().collect();
        let ids: Vec<NodeId> = ids.into_iter().collect();
        for (i, a) in ids.iter().enumerate() {
            for b in &ids[i + 1..] {
                self.first_together.entry((*a, *b)).or_insert(step);
            }
        }
    }

    /// First frame in which both objects were visible.
    pub fn first_frame(&self, a: NodeId, b: NodeId) -> Option<u32> {
        self.first_together.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn len(&self) -> usize {
        self.first_together.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_together.is_empty()
    }
}

/// Short when some frame contained both endpoints, long otherwise.
pub fn classify_edge_range(
    graph: &SceneGraph,
    a: NodeId,
    b: NodeId,
    log: &CovisibilityLog,
) -> Result<RangeClass, GraphError> {
    for id in [a, b] {
        if graph.object(id).is_none() {
            return Err(GraphError::UnknownNode(id));
        }
    }
    Ok(if log.first_frame(a, b).is_some() { RangeClass::Short } else { RangeClass::Long })
}

/// Question put to the vision-language checker about one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlmQuery {
    pub frame: u32,
    pub subject: String,
    pub subject_position: Vec2,
    pub object: String,
    pub object_position: Vec2,
    pub relation: String,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VlmError {
    #[error("vision-language backend unavailable: {0}")]
    Unavailable(String),
}

pub trait VlmBackend: Send + Sync {
    /// Whether the frame shows `subject relation object`.
    fn affirm(&self, query: &VlmQuery) -> Result<bool, VlmError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PruneDecision {
    Keep,
    /// Checker unavailable; the edge stays but is marked unverified.
    KeepUnverified,
    Drop,
}

/// Verifies a short edge against the first frame that shows both ends.
pub fn prune_short_edge(
    graph: &SceneGraph,
    edge: &CandidateEdge,
    log: &CovisibilityLog,
    vlm: &dyn VlmBackend,
) -> Result<PruneDecision, GraphError> {
    let (a, b) = (
        graph.object(edge.a).ok_or(GraphError::UnknownNode(edge.a))?,
        graph.object(edge.b).ok_or(GraphError::UnknownNode(edge.b))?,
    );
    let Some(frame) = log.first_frame(edge.a, edge.b) else {
        return Ok(PruneDecision::Drop);
    };
    let q = VlmQuery {
        frame,
        subject: a.category.clone(),
        subject_position: a.centroid,
        object: b.category.clone(),
        object_position: b.centroid,
        relation: edge.relation.clone(),
    };
    Ok(match vlm.affirm(&q) {
        Ok(true) => PruneDecision::Keep,
        Ok(false) => PruneDecision::Drop,
        Err(e) => {
            log::warn!("keeping {} {} {} unverified: {e}", q.subject, q.relation, q.object);
            PruneDecision::KeepUnverified
        }
    })
}

/// A long edge survives when both ends share a room, the straight line
/// between them crosses no occupied cell, and that line runs within
/// [`PARALLEL_TOLERANCE_DEG`] of the room wall nearest to it.
pub fn prune_long_edge(graph: &SceneGraph, grid: &OccupancyGrid, a: NodeId, b: NodeId) -> Result<bool, GraphError> {
    let oa = graph.object(a).ok_or(GraphError::UnknownNode(a))?;
    let ob = graph.object(b).ok_or(GraphError::UnknownNode(b))?;
    let (Some(ra), Some(rb)) = (graph.room_of(a), graph.room_of(b)) else {
        return Ok(false);
    };
    if ra != rb {
        return Ok(false);
    }
    if !grid.segment_clear(oa.centroid, ob.centroid) {
        return Ok(false);
    }
    let line = Segment::new(oa.centroid, ob.centroid);
    let mid = line.midpoint();
    let room = graph.room(ra).ok_or(GraphError::UnknownNode(ra))?;
    let nearest = room
        .wall_segments
        .iter()
        .min_by(|x, y| x.distance_to_point(mid).total_cmp(&y.distance_to_point(mid)));
    Ok(nearest.is_some_and(|w| line_angle_between(line.orientation_deg(), w.orientation_deg()) <= PARALLEL_TOLERANCE_DEG))
}

/// Which relation edges survive into the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePolicy {
    None,
    Short,
    Long,
    #[default]
    All,
}

impl std::str::FromStr for EdgePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(EdgePolicy::None),
            "short" => Ok(EdgePolicy::Short),
            "long" => Ok(EdgePolicy::Long),
            "all" => Ok(EdgePolicy::All),
            other => Err(format!("unknown edge policy {other:?} (none, short, long, all)")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeUpdate {
    pub proposed: usize,
    pub kept: Vec<(NodeId, NodeId)>,
    pub dropped: usize,
}

/// Proposal, range classification and pruning for one step's new nodes.
#[allow(clippy::too_many_arguments)]
pub fn update_edges(
    graph: &mut SceneGraph,
    new_ids: &[NodeId],
    policy: EdgePolicy,
    llm: &dyn LlmBackend,
    vlm: &dyn VlmBackend,
    grid: &OccupancyGrid,
    log: &CovisibilityLog,
    step: u32,
    transcript: &mut Transcript,
) -> Result<EdgeUpdate, LlmError> {
    let mut out = EdgeUpdate::default();
    if policy == EdgePolicy::None {
        return Ok(out);
    }
    let candidates = propose_edges_batched(graph, new_ids, llm, step, transcript)?;
    out.proposed = candidates.len();
    for c in candidates {
        let range = classify_edge_range(graph, c.a, c.b, log).expect("candidates reference live nodes");
        let allowed = matches!((policy, range), (EdgePolicy::All, _) | (EdgePolicy::Short, RangeClass::Short) | (EdgePolicy::Long, RangeClass::Long));
        let decision = if !allowed {
            PruneDecision::Drop
        } else if range == RangeClass::Short {
            prune_short_edge(graph, &c, log, vlm).expect("live nodes")
        } else if prune_long_edge(graph, grid, c.a, c.b).expect("live nodes") {
            PruneDecision::Keep
        } else {
            PruneDecision::Drop
        };
        if decision == PruneDecision::Drop {
            out.dropped += 1;
            continue;
        }
        let edge = RelationEdge {
            a: c.a,
            b: c.b,
            relation: c.relation,
            range_class: range,
            verified: decision == PruneDecision::Keep,
            flagged: decision == PruneDecision::KeepUnverified,
        };
        if graph.insert_relation(edge).expect("live nodes") {
            out.kept.push((c.a, c.b));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedLlm;
    use crate::mapping::{Cell, CellState};
    use crate::scene_graph::{Detection, RoomObservation};
    use std::sync::Arc;

    fn det(category: &str, x: f64, y: f64) -> Detection {
        let c = Cell::new((x / 0.05).floor() as i32, (y / 0.05).floor() as i32);
        Detection { category: category.into(), confidence: 0.9, centroid: Vec2::new(x, y), footprint: vec![c] }
    }

    struct FixedVlm(Result<bool, VlmError>);

    impl VlmBackend for FixedVlm {
        fn affirm(&self, _: &VlmQuery) -> Result<bool, VlmError> {
            self.0.clone()
        }
    }

    #[test]
    fn pair_enumeration_matches_count_formula() {
        assert_eq!(edge_pairs(&[1, 2], &[0]), vec![(1, 0), (2, 0), (1, 2)]);
        for m in 0..6u32 {
            for n in 0..6u32 {
                let new: Vec<NodeId> = (100..100 + m).collect();
                let old: Vec<NodeId> = (0..n).collect();
                let p = edge_pairs(&new, &old).len() as u32;
                assert_eq!(p, m * n + m * m.saturating_sub(1) / 2);
                assert!(p <= m * (m + n));
            }
        }
    }

    #[test]
    fn one_prompt_for_the_batch() {
        let mut g = SceneGraph::new();
        g.register_detections(&[det("TV", 1.0, 1.0)], 0).unwrap();
        let new = g.register_detections(&[det("sofa", 3.0, 1.0), det("plant", 5.0, 1.0)], 1).unwrap().created;
        let llm = ScriptedLlm::from_pairs([(
            r#"Now you predict these pairs of objects: \[\{"object1": "sofa", "object2": "TV"\}, \{"object1": "plant", "object2": "TV"\}, \{"object1": "sofa", "object2": "plant"\}\]$"#,
            r#"[{"relationships": "opposite to"}, {"relationships": "near"}, {"relationships": "glued to"}]"#,
        )])
        .unwrap();
        let mut t = Transcript::default();
        let edges = propose_edges_batched(&g, &new, &llm, 1, &mut t).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(edges.len(), 3);
        assert_eq!(edges[0].relation, "opposite to");
        assert_eq!(edges[2].relation, "near");
    }

    #[test]
    fn naive_asks_once_per_pair_and_agrees_with_the_batch() {
        let mut g = SceneGraph::new();
        g.register_detections(&[det("TV", 1.0, 1.0)], 0).unwrap();
        let new = g.register_detections(&[det("sofa", 3.0, 1.0), det("plant", 5.0, 1.0)], 1).unwrap().created;
        let llm = crate::llm::PriorOracleLlm::new();
        let (mut tn, mut tb) = (Transcript::default(), Transcript::default());
        let naive = propose_edges_naive(&g, &new, &llm, 1, &mut tn).unwrap();
        let batched = propose_edges_batched(&g, &new, &llm, 1, &mut tb).unwrap();
        assert_eq!(tn.len(), 3);
        assert_eq!(naive, batched);
    }

    #[test]
    fn nothing_new_means_no_prompt() {
        let g = SceneGraph::new();
        let llm = ScriptedLlm::from_pairs(Vec::<(String, String)>::new()).unwrap();
        let mut t = Transcript::default();
        assert!(propose_edges_batched(&g, &[], &llm, 0, &mut t).unwrap().is_empty());
        assert!(t.is_empty());
    }

    #[test]
    fn short_reply_is_retried_then_truncated() {
        let mut g = SceneGraph::new();
        let new = g.register_detections(&[det("a", 1.0, 1.0), det("b", 2.0, 1.0), det("c", 3.0, 1.0)], 0).unwrap().created;
        let one = r#"[{"relationships": "next to"}]"#;
        let llm = ScriptedLlm::from_pairs([("", one), ("", one), ("", one)]).unwrap();
        let mut t = Transcript::default();
        let edges = propose_edges_batched(&g, &new, &llm, 0, &mut t).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(edges.len(), 1);
    }

    #[test]
    fn range_classification_uses_history() {
        let mut g = SceneGraph::new();
        let ids = g.register_detections(&[det("a", 1.0, 1.0), det("b", 2.0, 1.0), det("c", 3.0, 1.0)], 0).unwrap().ids;
        let mut log = CovisibilityLog::default();
        log.record_frame(0, &[ids[0], ids[1]]);
        assert_eq!(classify_edge_range(&g, ids[0], ids[1], &log), Ok(RangeClass::Short));
        assert_eq!(classify_edge_range(&g, ids[1], ids[0], &log), Ok(RangeClass::Short));
        assert_eq!(classify_edge_range(&g, ids[0], ids[2], &log), Ok(RangeClass::Long));
        assert_eq!(classify_edge_range(&g, ids[0], 42, &log), Err(GraphError::UnknownNode(42)));
    }

    #[test]
    fn short_pruning_follows_the_checker() {
        let mut g = SceneGraph::new();
        let ids = g.register_detections(&[det("monitor", 1.0, 1.0), det("desk", 1.0, 1.2)], 0).unwrap().ids;
        let mut log = CovisibilityLog::default();
        log.record_frame(0, &ids);
        let e = CandidateEdge { a: ids[0], b: ids[1], relation: "above".into() };
        assert_eq!(prune_short_edge(&g, &e, &log, &FixedVlm(Ok(true))), Ok(PruneDecision::Keep));
        assert_eq!(prune_short_edge(&g, &e, &log, &FixedVlm(Ok(false))), Ok(PruneDecision::Drop));
        let down = FixedVlm(Err(VlmError::Unavailable("offline".into())));
        assert_eq!(prune_short_edge(&g, &e, &log, &down), Ok(PruneDecision::KeepUnverified));
    }

    fn long_edge_world() -> (SceneGraph, OccupancyGrid, Vec<NodeId>) {
        // room spans x in [0, 5), y in [0, 4); wall column at x = 2.5 from y = 2 up
        let mut grid = OccupancyGrid::new(100, 80, 0.05, Vec2::default());
        for c in grid.full_bounds().cells().collect::<Vec<_>>() {
            let wall = c.x == 50 && c.y >= 40;
            grid.set(c, if wall { CellState::Occupied } else { CellState::Free });
        }
        let mut g = SceneGraph::new();
        let ids = g
            .register_detections(
                &[det("sofa", 0.5, 1.0), det("tv", 4.5, 1.0), det("plant", 0.5, 3.0), det("lamp", 4.5, 3.0), det("chair", 2.0, 2.5)],
                0,
            )
            .unwrap()
            .ids;
        let region = (0..100).flat_map(|x| (0..80).map(move |y| Cell::new(x, y))).collect();
        let walls = vec![
            Segment::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)),
            Segment::new(Vec2::new(0.0, 4.0), Vec2::new(5.0, 4.0)),
            Segment::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 4.0)),
            Segment::new(Vec2::new(5.0, 0.0), Vec2::new(5.0, 4.0)),
        ];
        g.register_room(&RoomObservation { key: 0, room_type: "living room".into(), region: Arc::new(region), walls });
        g.assign_room_affiliations();
        (g, grid, ids)
    }

    #[test]
    fn long_edge_kept_when_clear_and_parallel() {
        let (g, grid, ids) = long_edge_world();
        assert_eq!(prune_long_edge(&g, &grid, ids[0], ids[1]), Ok(true));
    }

    #[test]
    fn long_edge_dropped_through_wall_or_askew() {
        let (g, grid, ids) = long_edge_world();
        assert_eq!(prune_long_edge(&g, &grid, ids[2], ids[3]), Ok(false));
        assert_eq!(prune_long_edge(&g, &grid, ids[0], ids[4]), Ok(false));
    }

    #[test]
    fn long_edge_needs_a_shared_room() {
        let mut g = SceneGraph::new();
        let ids = g.register_detections(&[det("sofa", 0.5, 1.0), det("tv", 4.5, 1.0)], 0).unwrap().ids;
        let grid = OccupancyGrid::new(100, 80, 0.05, Vec2::default());
        assert_eq!(prune_long_edge(&g, &grid, ids[0], ids[1]), Ok(false));
        let mk = |key: u32, x0: i32, x1: i32| RoomObservation {
            key,
            room_type: "room".into(),
            region: Arc::new((x0..x1).flat_map(|x| (0..80).map(move |y| Cell::new(x, y))).collect()),
            walls: vec![Segment::new(Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0))],
        };
        g.register_room(&mk(0, 0, 50));
        g.register_room(&mk(1, 50, 100));
        g.assign_room_affiliations();
        assert_eq!(prune_long_edge(&g, &grid, ids[0], ids[1]), Ok(false));
    }

    #[test]
    fn pruning_never_touches_nodes_or_affiliations() {
        let (mut g, grid, ids) = long_edge_world();
        let aff: Vec<_> = g.affiliation_edges().collect();
        let llm = ScriptedLlm::from_pairs([("", "[]")]).unwrap().cycling();
        let mut t = Transcript::default();
        let log = CovisibilityLog::default();
        let fresh: Vec<NodeId> = ids[3..].to_vec();
        update_edges(&mut g, &fresh, EdgePolicy::All, &llm, &FixedVlm(Ok(false)), &grid, &log, 1, &mut t).unwrap();
        assert_eq!(g.object_count(), 5);
        assert_eq!(g.affiliation_edges().collect::<Vec<_>>(), aff);
    }
}
