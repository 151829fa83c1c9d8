use super::episode::TraceRecord;
use crate::geometry::Vec2;
use crate::mapping::{Bounds, CellState};
use crate::sim::Scene;

/// Grey level of the agent's path in [`render_trace`].
pub const TRACE_SHADE: u8 = 96;
const OBJECT_SHADE: u8 = 200;
const GOAL_SHADE: u8 = 48;
const PAD_CELLS: i32 = 10;

/// Binary PGM of the scene's floor plan with the trajectory drawn over it:
/// free space white, walls black, objects light grey, goal instances dark
/// grey and the path in [`TRACE_SHADE`]. The image is cropped to the rooms.
pub fn render_trace(scene: &Scene, trace: &[TraceRecord]) -> Vec<u8> {
    let grid = scene.truth_grid();
    let mut window: Option<Bounds> = None;
    for room in &scene.rooms {
        for v in &room.polygon {
            if let Some(c) = grid.cell_at(*v) {
                window = Some(match window {
                    Some(mut b) => {
                        b.include(c);
                        b
                    }
                    None => Bounds::of_cell(c),
                });
            }
        }
    }
    let window = grid.clip(window.unwrap_or_else(|| grid.full_bounds()).expand(PAD_CELLS));
    let (w, h) = (window.width(), window.height());
    let mut px = vec![0u8; w * h];
    let mut put = |c: crate::mapping::Cell, shade: u8| {
        if window.contains(c) {
            let (x, y) = ((c.x - window.min.x) as usize, (window.max.y - c.y) as usize);
            px[y * w + x] = shade;
        }
    };
    for c in window.cells() {
        put(c, if grid.get(c) == Some(CellState::Free) { 255 } else { 0 });
    }
    let goals = scene.goal_ids();
    for o in &scene.objects {
        let shade = if goals.contains(&o.id) { GOAL_SHADE } else { OBJECT_SHADE };
        for c in scene.footprint(o) {
            put(c, shade);
        }
    }
    let step = grid.resolution() / 2.0;
    for pair in trace.windows(2) {
        let (a, b) = (Vec2::new(pair[0].x, pair[0].y), Vec2::new(pair[1].x, pair[1].y));
        let n = (a.dist(b) / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            let p = a + (b - a) * (i as f64 / n as f64);
            if let Some(c) = grid.cell_at(p) {
                put(c, TRACE_SHADE);
            }
        }
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&px);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::Action;
    use crate::sim::{generate_scene, SceneParams};

    fn rec(x: f64, y: f64) -> TraceRecord {
        TraceRecord {
            step: 0,
            x,
            y,
            heading: 0,
            action: Action::MoveForward,
            phase: super::super::Phase::Explore,
            collided: false,
            detections: 0,
            objects: 0,
            unknown_cells: 0,
            target: None,
            candidate: None,
            credibility: None,
            verdict: None,
            explanation: None,
        }
    }

    #[test]
    fn path_pixels_appear() {
        let scene = generate_scene(3, &SceneParams::default()).unwrap();
        let p = scene.start.position;
        let img = render_trace(&scene, &[rec(p.x, p.y), rec(p.x + 0.5, p.y)]);
        assert!(img.starts_with(b"P5\n"));
        let header_end = img.iter().enumerate().filter(|(_, b)| **b == b'\n').nth(2).unwrap().0 + 1;
        let dims: Vec<usize> =
            std::str::from_utf8(&img[3..header_end]).unwrap().split_whitespace().take(2).map(|s| s.parse().unwrap()).collect();
        assert_eq!(img.len() - header_end, dims[0] * dims[1]);
        assert!(img[header_end..].contains(&TRACE_SHADE));
        assert!(img[header_end..].contains(&GOAL_SHADE));
    }
}
