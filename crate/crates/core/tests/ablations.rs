use scenenav::harness::{run_suite, Ablations, AgentConfig, Prompting, SuiteConfig};
use scenenav::llm::PriorOracleLlm;
use scenenav::scene_graph::EdgePolicy;
use scenenav::sim::SceneParams;

fn success_rate(ablations: Ablations, fp: f64) -> f64 {
    let suite = SuiteConfig {
        name: "ablation".into(),
        seeds: (0..20).collect(),
        params: SceneParams { false_positive_rate: fp, ..SceneParams::default() },
        vary_rooms: true,
        agent: AgentConfig { ablations, ..AgentConfig::default() },
        provider: "oracle".into(),
    };
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(8);
    let run = run_suite(&suite, &PriorOracleLlm::new(), threads).unwrap();
    assert!(run.report.is_consistent());
    run.report.aggregate.success_rate.unwrap()
}

#[test]
fn scene_graph_and_reperception_lattice_is_monotone() {
    for fp in [0.0, 0.5] {
        let full = success_rate(Ablations::default(), fp);
        let no_rp = success_rate(Ablations { reperception: false, ..Ablations::default() }, fp);
        let neither = success_rate(Ablations { reperception: false, scene_graph: false, ..Ablations::default() }, fp);
        assert!(full >= no_rp && no_rp >= neither, "fp {fp}: {full} / {no_rp} / {neither}");
    }
}

#[test]
fn every_ablation_switch_runs_to_completion() {
    let variants = [
        Ablations { rooms: false, ..Ablations::default() },
        Ablations { groups: false, ..Ablations::default() },
        Ablations { edges: EdgePolicy::None, ..Ablations::default() },
        Ablations { edges: EdgePolicy::Short, ..Ablations::default() },
        Ablations { edges: EdgePolicy::Long, ..Ablations::default() },
        Ablations { prompting: Prompting::FlatText, ..Ablations::default() },
    ];
    for a in variants {
        let sr = success_rate(a, 0.0);
        assert!(sr >= 0.8, "{a:?}: SR {sr}");
    }
}
