use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scenenav::harness::{
    render_trace, run_episode, run_suite, trace_from_jsonl, trace_to_jsonl, write_atomic, write_suite, Ablations,
    AgentConfig, Prompting, SuiteConfig,
};
use scenenav::llm::{
    exact_coefficient, published_coefficient, verify_complexity_bound, CostModel, LlmBackend, PriorOracleLlm,
    ScriptedLlm, PUBLISHED_BOUND_CONSTANT,
};
use scenenav::scene_graph::EdgePolicy;
use scenenav::sim::{generate_scene, GroundTruthVlm, Scene, SceneParams};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(name = "scenenav", version, about = "Zero-shot object-goal navigation on synthetic indoor scenes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace, transcript, map and graph.
    Run(RunArgs),
    /// Run a suite of generated scenes and write a report.
    Bench(BenchArgs),
    /// Generate a scene and write it as JSON.
    GenScene(GenArgs),
    /// Check the batched-prompt cost bound over the standard sweep.
    VerifyBound(BoundArgs),
    /// Draw a trace over its scene as a PGM image.
    RenderTrace(RenderArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Provider {
    /// Replay the responses in --script.
    Scripted,
    /// Chat-completion endpoint from SCENENAV_LLM_BASE_URL, SCENENAV_LLM_API_KEY, SCENENAV_LLM_MODEL.
    Http,
    /// Answer from the simulator's category priors.
    Oracle,
}

#[derive(Args)]
struct ProviderArgs {
    #[arg(long, value_enum, default_value = "oracle")]
    provider: Provider,
    /// Script file for --provider scripted: a JSON array of {pattern, response}.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Restart the script from the top when it runs out.
    #[arg(long)]
    cycle_script: bool,
}

#[derive(Args)]
struct AblationArgs {
    #[arg(long)]
    no_reperception: bool,
    #[arg(long)]
    no_scene_graph: bool,
    #[arg(long)]
    no_rooms: bool,
    #[arg(long)]
    no_groups: bool,
    #[arg(long, default_value = "all", value_parser = ["none", "short", "long", "all"])]
    edges: String,
    #[arg(long, default_value = "cot", value_parser = ["cot", "flat-text"])]
    prompting: String,
}

#[derive(Args)]
struct SceneArgs {
    /// Rooms per scene, 2 to 6.
    #[arg(long, default_value_t = 4)]
    rooms: usize,
    /// Chance that each non-goal room holds an object that looks like the goal from afar.
    #[arg(long, default_value_t = 0.0)]
    fp_rate: f64,
    #[arg(long, default_value_t = 0.8)]
    relation_density: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Scene JSON; generated from --seed when absent.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    scene_args: SceneArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[command(flatten)]
    ablations: AblationArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// First scene seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    count: u64,
    /// Use --rooms for every scene instead of cycling through 2..=6.
    #[arg(long)]
    fixed_rooms: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "bench")]
    name: String,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    scene_args: SceneArgs,
    #[command(flatten)]
    provider: ProviderArgs,
    #[command(flatten)]
    ablations: AblationArgs,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    scene_args: SceneArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long, default_value_t = 2.0)]
    r: f64,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
    #[arg(long, default_value_t = 1000.0)]
    l_pro: f64,
    #[arg(long, default_value_t = PUBLISHED_BOUND_CONSTANT)]
    constant: f64,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

impl SceneArgs {
    fn params(&self) -> SceneParams {
        SceneParams {
            room_count: self.rooms,
            false_positive_rate: self.fp_rate,
            relation_density: self.relation_density,
            ..SceneParams::default()
        }
    }
}

impl AblationArgs {
    fn to_ablations(&self) -> Result<Ablations> {
        Ok(Ablations {
            reperception: !self.no_reperception,
            scene_graph: !self.no_scene_graph,
            rooms: !self.no_rooms,
            groups: !self.no_groups,
            edges: self.edges.parse::<EdgePolicy>().map_err(anyhow::Error::msg)?,
            prompting: self.prompting.parse::<Prompting>().map_err(anyhow::Error::msg)?,
        })
    }
}

impl ProviderArgs {
    fn name(&self) -> &'static str {
        match self.provider {
            Provider::Scripted => "scripted",
            Provider::Http => "http",
            Provider::Oracle => "oracle",
        }
    }

    fn build(&self) -> Result<Box<dyn LlmBackend>> {
        Ok(match self.provider {
            Provider::Oracle => Box::new(PriorOracleLlm::new()),
            Provider::Scripted => {
                let path = self.script.as_ref().context("--provider scripted needs --script")?;
                let s = ScriptedLlm::from_file(path)?;
                Box::new(if self.cycle_script { s.cycling() } else { s })
            }
            Provider::Http => http_provider()?,
        })
    }
}

#[cfg(feature = "http")]
fn http_provider() -> Result<Box<dyn LlmBackend>> {
    use scenenav::llm::{HttpConfig, HttpLlm};
    Ok(Box::new(HttpLlm::new(HttpConfig::from_env()?)))
}

#[cfg(not(feature = "http"))]
fn http_provider() -> Result<Box<dyn LlmBackend>> {
    bail!("built without the http feature")
}

fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Scene::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(args: RunArgs) -> Result<()> {
    let scene = match &args.scene {
        Some(p) => load_scene(p)?,
        None => generate_scene(args.seed, &args.scene_args.params())?,
    };
    let llm = args.provider.build()?;
    let cfg = AgentConfig { ablations: args.ablations.to_ablations()?, seed: args.seed, ..AgentConfig::default() };
    let started = Instant::now();
    let vlm = GroundTruthVlm::new(scene.clone());
    let mut out = run_episode(&scene, &cfg, llm.as_ref(), &vlm);
    out.result.transcript_file = Some("transcript.jsonl".into());
    let dir = &args.out_dir;
    std::fs::create_dir_all(dir)?;
    write_atomic(&dir.join("scene.json"), scene.to_json())?;
    write_atomic(&dir.join("trace.jsonl"), trace_to_jsonl(&out.trace))?;
    write_atomic(&dir.join("transcript.jsonl"), out.transcript.to_jsonl())?;
    write_atomic(&dir.join("map.pgm"), out.map.to_pgm())?;
    write_atomic(&dir.join("map.txt"), out.map.dump_text())?;
    write_atomic(&dir.join("graph.json"), out.graph.to_json())?;
    write_atomic(&dir.join("path.pgm"), render_trace(&scene, &out.trace))?;
    write_atomic(&dir.join("result.json"), serde_json::to_string_pretty(&out.result)?)?;
    let r = &out.result;
    println!(
        "goal {}  success {}  steps {}  path {:.2} m  optimal {:.2} m  SPL {:.3}  SoftSPL {:.3}  end {:?}  ({:.1?})",
        r.goal,
        r.success,
        r.steps,
        r.path_length,
        r.optimal_length,
        r.spl,
        r.soft_spl,
        r.cause,
        started.elapsed()
    );
    if let Some(d) = &r.diagnostic {
        eprintln!("diagnostic: {d}");
    }
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let llm = args.provider.build()?;
    if args.provider.provider == Provider::Scripted && args.threads > 1 {
        bail!("a script is consumed in order; run scripted suites with --threads 1");
    }
    let suite = SuiteConfig {
        name: args.name.clone(),
        seeds: (args.seed..args.seed + args.count).collect(),
        params: args.scene_args.params(),
        vary_rooms: !args.fixed_rooms,
        agent: AgentConfig { ablations: args.ablations.to_ablations()?, seed: args.seed, ..AgentConfig::default() },
        provider: args.provider.name().into(),
    };
    let started = Instant::now();
    let run = run_suite(&suite, llm.as_ref(), args.threads)?;
    write_suite(&args.out_dir, &run)?;
    print!("{}", run.report.table());
    println!("{} episodes in {:.1?}; report in {}", run.outputs.len(), started.elapsed(), args.out_dir.display());
    Ok(())
}

fn gen_scene(args: GenArgs) -> Result<()> {
    let scene = generate_scene(args.seed, &args.scene_args.params())?;
    match &args.out {
        Some(p) => write_atomic(p, scene.to_json())?,
        None => println!("{}", scene.to_json()),
    }
    Ok(())
}

fn verify_bound(args: BoundArgs) -> Result<()> {
    if !(args.r > 1.0 && args.r <= 2.0) {
        bail!("--r must lie in (1, 2]");
    }
    let started = Instant::now();
    let check = verify_complexity_bound(&CostModel::from_alpha(args.l_pro, args.alpha, args.r), args.constant);
    println!(
        "sweep m 1..=5, n 1..=100 at r={} alpha={} L_pro={}: {} of {} points violate ratio < {}/(m+n); tightest constant {:.4}",
        args.r, args.alpha, args.l_pro, check.violations, check.points, args.constant, check.tightest_constant
    );
    if let Some(v) = check.first_violation {
        println!("first violation at m={} n={}: ratio {:.6} >= bound {:.6}", v.m, v.n, v.ratio, v.bound);
    }
    println!(
        "coefficient at m=5 n=100: simplified {:.4}, without dropping terms {:.4}",
        published_coefficient(5, 100, args.alpha, args.r),
        exact_coefficient(5, 100, args.alpha, args.r)
    );
    println!("{} ({:.1?})", if check.passed() { "PASS" } else { "FAIL" }, started.elapsed());
    if !check.passed() {
        std::process::exit(1);
    }
    Ok(())
}

fn render(args: RenderArgs) -> Result<()> {
    let scene = load_scene(&args.scene)?;
    let text = std::fs::read_to_string(&args.trace).with_context(|| format!("reading {}", args.trace.display()))?;
    let trace = trace_from_jsonl(&text).with_context(|| format!("parsing {}", args.trace.display()))?;
    write_atomic(&args.out, render_trace(&scene, &trace))?;
    println!("{} steps drawn to {}", trace.len(), args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    env_logger::init();
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::GenScene(a) => gen_scene(a),
        Command::VerifyBound(a) => verify_bound(a),
        Command::RenderTrace(a) => render(a),
    }
}
