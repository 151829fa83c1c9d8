use scenenav_demo::{episode_json, scene_json};

#[test]
fn scene_then_episode_round_trip_through_json() {
    let scene = scene_json(4, 2, 0.0).unwrap();
    let v: serde_json::Value = serde_json::from_str(&episode_json(&scene, true, true).unwrap()).unwrap();
    assert_eq!(v["result"]["success"], true);
    let trace = v["trace"].as_array().unwrap();
    assert_eq!(trace.len() as u64, v["result"]["steps"].as_u64().unwrap());
    let rows = v["map"].as_array().unwrap();
    let width = rows[0].as_str().unwrap().len();
    assert!(rows.iter().all(|r| r.as_str().unwrap().len() == width));
    assert!(rows.iter().any(|r| r.as_str().unwrap().contains('#')));
}

#[test]
fn bad_input_is_an_error_not_a_panic() {
    assert!(scene_json(1, 9, 0.0).is_err());
    assert!(episode_json("{}", true, true).is_err());
}
