use super::config::{AgentConfig, Prompting};
use super::metrics::{compute_soft_spl, compute_spl, EndCause, EpisodeResult};
use crate::geometry::Vec2;
use crate::llm::{LlmBackend, LlmError, Transcript};
use crate::mapping::{extract_frontiers, integrate_depth, CellState, OccupancyGrid, Pose};
use crate::planner::{next_action, plan_path_with, Action, Approach, ApproachStep, Path, PlanOptions, STEP_LENGTH_M};
use crate::reasoning::{
    content_key, cot_predict_distance, credibility_step, explain_decision, flat_predict_distance, reperception_verdict,
    score_frontiers, select_frontier, subgraph_probability, CredibilityState, FrontierScore, FrontierTarget,
    ScoreCache, SubgraphScore, Verdict, N_MAX,
};
use crate::scene_graph::{
    update_edges, CovisibilityLog, GraphSnapshot, NodeId, RelatedCategoryLexicon, SceneGraph, VlmBackend,
};
use crate::sim::{Observation, Scene, World, GRID_CELLS, GRID_RESOLUTION, MAX_STEPS};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Turns in the opening look-around (a full circle).
const OPENING_SPIN: u32 = 12;
/// Frontiers whose centroid lies this close to a visited or unreachable
/// target are skipped.
const FRONTIER_EXCLUSION_M: f64 = 0.5;
/// The exploration target counts as reached within this distance.
const ARRIVAL_RADIUS_M: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Spin,
    Explore,
    Verify,
    Final,
}

/// One line of the per-step trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub step: u32,
    pub x: f64,
    pub y: f64,
    pub heading: i32,
    pub action: Action,
    pub phase: Phase,
    pub collided: bool,
    pub detections: usize,
    pub objects: usize,
    pub unknown_cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<NodeId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub credibility: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    trace.iter().map(|r| serde_json::to_string(r).expect("trace serializes") + "\n").collect()
}

pub fn trace_from_jsonl(text: &str) -> Result<Vec<TraceRecord>, serde_json::Error> {
    text.lines().filter(|l| !l.trim().is_empty()).map(serde_json::from_str).collect()
}

pub struct EpisodeOutput {
    pub result: EpisodeResult,
    pub trace: Vec<TraceRecord>,
    pub transcript: Transcript,
    pub map: OccupancyGrid,
    pub graph: GraphSnapshot,
}

struct ExplorePlan {
    target: Vec2,
    path: Path,
    age: u32,
}

struct Verification {
    candidate: NodeId,
    approach: Approach,
    credibility: Option<CredibilityState>,
}

/// What happened while deciding, for the trace.
#[derive(Default)]
struct Notes {
    credibility: Option<f64>,
    verdict: Option<Verdict>,
    explanation: Option<String>,
    exhausted: bool,
}

struct Agent<'a> {
    cfg: &'a AgentConfig,
    goal: String,
    llm: &'a dyn LlmBackend,
    vlm: &'a dyn VlmBackend,
    opts: PlanOptions,
    map: OccupancyGrid,
    graph: SceneGraph,
    covis: CovisibilityLog,
    lexicon: RelatedCategoryLexicon,
    cache: ScoreCache,
    transcript: Transcript,
    rng: ChaCha8Rng,
    blacklist: BTreeSet<NodeId>,
    excluded_targets: Vec<Vec2>,
    spin_left: u32,
    plan: Option<ExplorePlan>,
    verify: Option<Verification>,
    /// Candidate confidences in the current frame.
    frame_confidence: BTreeMap<NodeId, f64>,
    explanations: Vec<String>,
    rejected: usize,
}

impl<'a> Agent<'a> {
    fn new(cfg: &'a AgentConfig, goal: &str, llm: &'a dyn LlmBackend, vlm: &'a dyn VlmBackend) -> Self {
        Self {
            cfg,
            goal: goal.to_string(),
            llm,
            vlm,
            opts: PlanOptions::with_clearance(cfg.clearance_m, cfg.clearance_weight),
            map: OccupancyGrid::new(GRID_CELLS, GRID_CELLS, GRID_RESOLUTION, Vec2::default()),
            graph: SceneGraph::new(),
            covis: CovisibilityLog::default(),
            lexicon: RelatedCategoryLexicon::default(),
            cache: ScoreCache::default(),
            transcript: Transcript::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            blacklist: BTreeSet::new(),
            excluded_targets: Vec::new(),
            spin_left: OPENING_SPIN,
            plan: None,
            verify: None,
            frame_confidence: BTreeMap::new(),
            explanations: Vec::new(),
            rejected: 0,
        }
    }

    fn phase(&self) -> Phase {
        match &self.verify {
            _ if self.spin_left > 0 => Phase::Spin,
            Some(v) if v.credibility.is_some() => Phase::Verify,
            Some(_) => Phase::Final,
            None => Phase::Explore,
        }
    }

    /// Folds one frame into the map and the scene graph.
    fn perceive(&mut self, obs: &Observation) -> Result<(), LlmError> {
        let pose = obs.pose;
        integrate_depth(&mut self.map, &pose, &obs.depth).expect("pose inside the map");
        if obs.collided {
            for d in [0.3, 0.35] {
                if let Some(c) = self.map.cell_at(pose.position + pose.direction() * d) {
                    self.map.set(c, CellState::Occupied);
                }
            }
            self.plan = None;
            if let Some(v) = &mut self.verify {
                v.approach.invalidate();
            }
        }
        let dets: Vec<_> = obs.detections.iter().map(|d| d.detection.clone()).collect();
        let reg = self.graph.register_detections(&dets, obs.step).expect("simulator detections are well formed");
        self.covis.record_frame(obs.step, &reg.ids);
        self.frame_confidence.clear();
        for (id, d) in reg.ids.iter().zip(&dets) {
            let c = self.frame_confidence.entry(*id).or_insert(0.0);
            *c = c.max(d.confidence);
        }
        let ab = self.cfg.ablations;
        if !ab.scene_graph {
            return Ok(());
        }
        if ab.rooms {
            for r in &obs.rooms {
                self.graph.register_room(r);
            }
            self.graph.assign_room_affiliations();
        }
        update_edges(
            &mut self.graph,
            &reg.created,
            ab.edges,
            self.llm,
            self.vlm,
            &self.map,
            &self.covis,
            obs.step,
            &mut self.transcript,
        )?;
        if ab.groups {
            self.graph.form_groups(&self.lexicon);
            if ab.rooms {
                self.graph.assign_room_affiliations();
            }
        }
        Ok(())
    }

    /// Distance predictions for every subgraph that may inform the search:
    /// those centred on goal-category objects or rejected candidates are
    /// left out, so a candidate never vouches for itself.
    fn subgraph_scores(&mut self, step: u32) -> Result<(Vec<SubgraphScore>, BTreeMap<NodeId, String>), LlmError> {
        let flat = self.cfg.ablations.prompting == Prompting::FlatText;
        let central: Vec<NodeId> = self
            .graph
            .objects()
            .filter(|o| !o.category.eq_ignore_ascii_case(&self.goal) && !self.blacklist.contains(&o.id))
            .map(|o| o.id)
            .collect();
        let mut scores = Vec::with_capacity(central.len());
        let mut reasons = BTreeMap::new();
        for id in central {
            let sg = self.graph.subgraph_of(id).expect("live object");
            let text = sg.text(&self.graph);
            let key = content_key(&text, &self.goal, flat);
            let (distance, reason, fallback) = match self.cache.get(&key) {
                Some(c) => (c.distance, c.reason.clone(), c.fallback),
                None => {
                    let out = if flat {
                        flat_predict_distance(&text, &self.goal, self.llm, step)?
                    } else {
                        cot_predict_distance(&text, &self.goal, self.llm, step)?
                    };
                    self.cache.insert(key, &out);
                    self.transcript.extend(out.transcript.clone());
                    (out.distance, out.reason, out.fallback)
                }
            };
            let p_sub = subgraph_probability(distance).unwrap_or(0.0);
            reasons.insert(id, reason.clone());
            scores.push(SubgraphScore {
                subgraph: id,
                predicted_distance: distance,
                p_sub,
                center: sg.center(&self.graph).expect("live object"),
                reason,
                fallback,
                graph_revision: self.graph.revision(),
            });
        }
        Ok((scores, reasons))
    }

    /// Drops subgraphs that hold another goal-category object: they speak
    /// for that object, not for `candidate`.
    fn context_for(&self, candidate: NodeId, scores: Vec<SubgraphScore>) -> Vec<SubgraphScore> {
        let other_goal = |id: &NodeId| {
            *id != candidate && self.graph.object(*id).is_some_and(|o| o.category.eq_ignore_ascii_case(&self.goal))
        };
        scores
            .into_iter()
            .filter(|s| self.graph.subgraph_of(s.subgraph).is_some_and(|sg| !sg.neighbors.iter().any(other_goal)))
            .collect()
    }

    fn reject_candidate(&mut self, id: NodeId) {
        self.blacklist.insert(id);
        self.rejected += 1;
        self.verify = None;
        self.plan = None;
    }

    /// Nearest goal-category object not yet rejected.
    fn next_candidate(&self, pose: &Pose) -> Option<(NodeId, Vec2)> {
        self.graph
            .objects()
            .filter(|o| o.category.eq_ignore_ascii_case(&self.goal) && !self.blacklist.contains(&o.id))
            .map(|o| (o.id, o.centroid))
            .min_by(|a, b| a.1.dist(pose.position).total_cmp(&b.1.dist(pose.position)).then(a.0.cmp(&b.0)))
    }

    /// Drives the current verification. `None` hands control back to
    /// exploration.
    fn verify_step(&mut self, pose: &Pose, step: u32, notes: &mut Notes) -> Result<Option<Action>, LlmError> {
        for _ in 0..4 {
            let Some(v) = &mut self.verify else {
                return Ok(None);
            };
            let candidate = v.candidate;
            match v.approach.next(&self.map, pose) {
                ApproachStep::Travel(a) | ApproachStep::Rotate(a) => return Ok(Some(a)),
                ApproachStep::Observe => {
                    let c_k = self.frame_confidence.get(&candidate).copied().unwrap_or(0.0);
                    let at = self.graph.object(candidate).map(|o| o.centroid).unwrap_or(v.approach.target());
                    let (scores, _) = self.subgraph_scores(step)?;
                    let scores = self.context_for(candidate, scores);
                    let v = self.verify.as_mut().expect("still verifying");
                    let cred = v.credibility.as_mut().expect("observing implies a credibility test");
                    credibility_step(cred, c_k, &scores, at).expect("confidence in range, observations below the limit");
                    let verdict = reperception_verdict(cred);
                    notes.credibility = Some(cred.cumulative);
                    notes.verdict = Some(verdict);
                    match verdict {
                        Verdict::Accept => {
                            v.approach.accept();
                            v.credibility = None;
                        }
                        Verdict::Reject => {
                            self.reject_candidate(candidate);
                            return Ok(None);
                        }
                        Verdict::Continue => {}
                    }
                }
                ApproachStep::Exhausted | ApproachStep::Unreachable => {
                    self.reject_candidate(candidate);
                    return Ok(None);
                }
            }
        }
        Ok(Some(Action::TurnLeft))
    }

    fn excluded(&self, p: Vec2) -> bool {
        self.excluded_targets.iter().any(|q| q.dist(p) < FRONTIER_EXCLUSION_M)
    }

    /// Picks a frontier and plans to it; `false` when none is reachable.
    fn choose_frontier(&mut self, pose: &Pose, step: u32, notes: &mut Notes) -> Result<bool, LlmError> {
        let frontiers: Vec<_> = extract_frontiers(&self.map).into_iter().filter(|f| !self.excluded(f.centroid)).collect();
        if frontiers.is_empty() {
            return Ok(false);
        }
        let targets: Vec<FrontierTarget> = frontiers.iter().map(|f| FrontierTarget { id: f.id, centroid: f.centroid }).collect();
        let dist = |id: usize| frontiers.iter().find(|f| f.id == id).map(|f| f.centroid.dist(pose.position)).unwrap_or(f64::MAX);
        let (mut ranked, reasons): (Vec<FrontierScore>, _) = if self.cfg.ablations.scene_graph {
            let (scores, reasons) = self.subgraph_scores(step)?;
            (score_frontiers(&targets, &scores), Some(reasons))
        } else {
            (targets.iter().map(|t| FrontierScore { frontier: t.id, score: 0.0, terms: Vec::new() }).collect(), None)
        };
        while !ranked.is_empty() {
            let choice = if reasons.is_some() {
                select_frontier(&ranked, dist)
            } else {
                let nearest = ranked.iter().map(|s| dist(s.frontier)).fold(f64::INFINITY, f64::min);
                let tied: Vec<usize> =
                    ranked.iter().filter(|s| dist(s.frontier) <= nearest * (1.0 + 1e-9)).map(|s| s.frontier).collect();
                tied.choose(&mut self.rng).copied()
            };
            let Some(id) = choice else { break };
            let f = frontiers.iter().find(|f| f.id == id).expect("ranked frontier exists");
            let goal = self.map.center(f.anchor(&self.map));
            match plan_path_with(&self.map, pose.position, goal, &self.opts) {
                Ok(path) => {
                    if let Some(reasons) = &reasons {
                        let sel = ranked.iter().find(|s| s.frontier == id).expect("selected from ranked");
                        if !sel.terms.is_empty() {
                            let e = explain_decision(sel, reasons, &self.goal, self.llm, step, &mut self.transcript);
                            notes.explanation = Some(e.text.clone());
                            self.explanations.push(e.text);
                        }
                    }
                    self.plan = Some(ExplorePlan { target: f.centroid, path, age: 0 });
                    return Ok(true);
                }
                Err(_) => {
                    self.excluded_targets.push(f.centroid);
                    ranked.retain(|s| s.frontier != id);
                }
            }
        }
        Ok(false)
    }

    fn explore_step(&mut self, pose: &Pose, step: u32, notes: &mut Notes) -> Result<Action, LlmError> {
        for _ in 0..3 {
            if self.plan.as_ref().is_none_or(|p| p.age >= self.cfg.replan_every) {
                self.plan = None;
                if !self.choose_frontier(pose, step, notes)? {
                    notes.exhausted = true;
                    return Ok(Action::Stop);
                }
            }
            let plan = self.plan.as_mut().expect("planned");
            match next_action(pose, &plan.path.waypoints, Some(ARRIVAL_RADIUS_M)) {
                Action::Stop => {
                    self.excluded_targets.push(plan.target);
                    self.plan = None;
                }
                a => {
                    plan.age += 1;
                    return Ok(a);
                }
            }
        }
        Ok(Action::TurnLeft)
    }

    fn decide(&mut self, obs: &Observation) -> Result<(Action, Notes), LlmError> {
        let mut notes = Notes::default();
        let pose = obs.pose;
        if self.spin_left > 0 {
            self.spin_left -= 1;
            return Ok((Action::TurnLeft, notes));
        }
        for _ in 0..3 {
            if self.verify.is_none() {
                if let Some((id, at)) = self.next_candidate(&pose) {
                    let mut approach = Approach::new(at, N_MAX, self.opts);
                    let credibility = if self.cfg.ablations.uses_reperception() {
                        Some(CredibilityState::new(id))
                    } else {
                        approach.accept();
                        None
                    };
                    self.verify = Some(Verification { candidate: id, approach, credibility });
                    self.plan = None;
                }
            }
            if self.verify.is_some() {
                if let Some(a) = self.verify_step(&pose, obs.step, &mut notes)? {
                    return Ok((a, notes));
                }
                continue;
            }
            let a = self.explore_step(&pose, obs.step, &mut notes)?;
            return Ok((a, notes));
        }
        let a = self.explore_step(&pose, obs.step, &mut notes)?;
        Ok((a, notes))
    }
}

/// Runs one episode of `scene` to completion.
///
/// Provider failures end the episode early with cause
/// [`EndCause::ProviderFailure`] and a diagnostic.
pub fn run_episode(scene: &Scene, cfg: &AgentConfig, llm: &dyn LlmBackend, vlm: &dyn VlmBackend) -> EpisodeOutput {
    let mut world = World::new(scene.clone());
    let start = scene.start.position;
    let d_init = world.distance_to_goal(start).unwrap_or(f64::INFINITY);
    let optimal = (d_init - cfg.success_distance).max(0.0);
    let mut agent = Agent::new(cfg, &scene.goal_category, llm, vlm);
    let mut obs = world.observe(false);
    let mut trace = Vec::new();
    let mut path_length = 0.0;
    let mut cause = None;
    let mut diagnostic = None;
    while world.state().terminated.is_none() {
        let decided = agent.perceive(&obs).and_then(|_| {
            let phase = agent.phase();
            agent.decide(&obs).map(|(a, n)| (phase, a, n))
        });
        let (phase, action, notes) = match decided {
            Ok(d) => d,
            Err(e) => {
                cause = Some(EndCause::ProviderFailure);
                diagnostic = Some(format!("step {}: {e}", obs.step));
                break;
            }
        };
        if notes.exhausted {
            cause = Some(EndCause::ExplorationExhausted);
        }
        trace.push(TraceRecord {
            step: obs.step,
            x: obs.pose.position.x,
            y: obs.pose.position.y,
            heading: obs.pose.heading_deg,
            action,
            phase,
            collided: obs.collided,
            detections: obs.detections.len(),
            objects: agent.graph.object_count(),
            unknown_cells: agent.map.unknown_count(),
            target: agent.plan.as_ref().map(|p| [p.target.x, p.target.y]),
            candidate: agent.verify.as_ref().map(|v| v.candidate),
            credibility: notes.credibility,
            verdict: notes.verdict,
            explanation: notes.explanation,
        });
        obs = world.step(action).expect("episode still running");
        if action == Action::MoveForward && !obs.collided {
            path_length += STEP_LENGTH_M;
        }
    }
    let state = world.state();
    let cause = cause.unwrap_or(match state.terminated {
        Some(crate::sim::Termination::Stopped) => EndCause::Stopped,
        _ => EndCause::BudgetExhausted,
    });
    let d_final = world.distance_to_goal(state.pose.position).unwrap_or(d_init);
    let success = world.check_success(cfg.success_distance);
    let near_decoy = scene.decoys.iter().any(|d| {
        scene.object(d.object).is_some_and(|o| o.position.dist(state.pose.position) <= cfg.success_distance)
    });
    let result = EpisodeResult {
        scene_seed: scene.seed,
        goal: scene.goal_category.clone(),
        success,
        path_length,
        optimal_length: optimal,
        spl: compute_spl(success, path_length, optimal),
        soft_spl: compute_soft_spl(d_init, d_final, path_length, optimal),
        steps: state.steps.min(MAX_STEPS),
        cause,
        diagnostic,
        explanations: agent.explanations.clone(),
        llm_calls: agent.transcript.len(),
        rejected_candidates: agent.rejected,
        stopped_at_false_positive: !success && cause == EndCause::Stopped && near_decoy,
        transcript_file: None,
    };
    EpisodeOutput {
        result,
        trace,
        graph: GraphSnapshot::of(&agent.graph),
        map: agent.map,
        transcript: agent.transcript,
    }
}
