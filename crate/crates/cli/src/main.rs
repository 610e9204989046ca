//! `arrange`: goal inference, planning, baselines and evaluation from the
//! command line.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use arrange_core::evaluation::{baseline_geometric, baseline_random, DEFAULT_MAX_ATTEMPTS};
use arrange_core::fixtures;
use arrange_core::layout::{Layout, LayoutRecord};
use arrange_core::pipeline::{
    evaluate_missing, run_pipeline, MissingTask, MissingTaskFile, PipelineConfig, PipelineError, ProviderSpec,
};
use arrange_core::planning::{plan_moves, simulate};
use arrange_core::provider::{GoalProvider, StubServer, SyntheticProvider, Template, FIXTURE_SUFFIX};
use arrange_core::render::{render_layout, RenderOptions};
use arrange_core::SceneDescription;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arrange", version, about = "Tabletop goal-arrangement inference and pick-and-place planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scene JSON file, or `builtin:dining|office|fruit`.
    #[arg(long)]
    scene: String,
    /// Pipeline config (JSON); every field is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write plan, reports and renders.
    Run {
        #[command(flatten)]
        common: Common,
        /// `fixture:DIR`, `synthetic:NAME` or `http:URL`.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Missing-object evaluation against the zero-shot baselines.
    EvalMissing {
        #[command(flatten)]
        common: Common,
        /// Task file: `{"tasks": [{"missing_id", "acceptable_poses", ...}]}`.
        #[arg(long)]
        tasks: PathBuf,
        /// A provider spec, or `oracle` to inpaint each object at its first
        /// acceptable pose.
        #[arg(long)]
        provider: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Arrange a scene with a zero-shot baseline.
    Baseline {
        kind: BaselineKind,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a scene, or a layout file over the scene's masks, as P6.
    Render {
        #[command(flatten)]
        common: Common,
        /// Layout JSON as written by `run` or `baseline`.
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        markers: bool,
    },
    /// Serve a provider over HTTP for `http:` runs.
    ServeStub {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        provider: String,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Write the built-in scenes and synthetic candidate sets to disk.
    GenFixtures {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Candidates per scene and template.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineKind {
    Random,
    Geometric,
}

fn load_scene(spec: &str) -> Result<SceneDescription, PipelineError> {
    match spec.strip_prefix("builtin:") {
        Some(name) => {
            fixtures::named_scene(name).ok_or_else(|| PipelineError::Config(format!("no built-in scene `{name}`")))
        }
        None => Ok(SceneDescription::load(Path::new(spec))?),
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<(), PipelineError> {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    std::fs::write(path, s).map_err(io(path))
}

fn provider_spec(cli: Option<&str>, cfg: &PipelineConfig) -> Result<ProviderSpec, PipelineError> {
    ProviderSpec::from_env(cli.or(cfg.provider.as_deref()))
}

fn cmd_run(common: &Common, provider: Option<&str>, out: &Path) -> Result<i32, PipelineError> {
    let scene = load_scene(&common.scene)?;
    let cfg = load_config(common)?;
    let spec = provider_spec(provider, &cfg)?;
    let provider = spec.build(&scene)?;
    let run = run_pipeline(&scene, &cfg, provider.as_ref(), Some(out))?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "{}: {} move(s), scale {:.4}, plan {} -> {}",
        spec,
        run.plan.len(),
        run.scale,
        if run.report.valid { "valid" } else { "INVALID" },
        out.display()
    );
    Ok(run.exit_code())
}

fn cmd_eval_missing(common: &Common, tasks: &Path, provider: Option<&str>, out: &Path) -> Result<i32, PipelineError> {
    let scene = load_scene(&common.scene)?;
    let cfg = load_config(common)?;
    let file = MissingTaskFile::load(tasks)?;
    let oracle = provider == Some("oracle");
    let spec = if oracle { None } else { Some(provider_spec(provider, &cfg)?) };
    let provider_for = |task: &MissingTask| -> Result<Box<dyn GoalProvider>, PipelineError> {
        match &spec {
            Some(s) => s.build(&scene),
            None => Ok(Box::new(SyntheticProvider::with_poses(
                scene.clone(),
                vec![(task.missing_id.clone(), task.acceptable_poses[0])],
            ))),
        }
    };
    let report = evaluate_missing(&scene, &file.tasks, &cfg, &provider_for)?;
    std::fs::create_dir_all(out).map_err(io(out))?;
    write_json(
        &out.join("report.json"),
        &serde_json::json!({ "rows": report.rows, "summary": report.summary() }),
    )?;
    let table = report.to_table();
    std::fs::write(out.join("report.txt"), &table).map_err(io(out))?;
    print!("{table}");
    Ok(0)
}

fn cmd_baseline(kind: BaselineKind, common: &Common, out: &Path) -> Result<i32, PipelineError> {
    let scene = load_scene(&common.scene)?;
    let cfg = load_config(common)?;
    let margin = cfg.collision.margin;
    let goal = match kind {
        BaselineKind::Random => baseline_random(&scene, cfg.seed, DEFAULT_MAX_ATTEMPTS, margin)?,
        BaselineKind::Geometric => baseline_geometric(&scene, margin)?,
    };
    let start = Layout::from_scene(&scene);
    let plan = plan_moves(&start, &goal, margin)?;
    let report = simulate(&plan, &start, &goal, margin)?;
    std::fs::create_dir_all(out).map_err(io(out))?;
    write_json(&out.join("layout.json"), &goal)?;
    write_json(&out.join("plan.json"), &plan.to_record(&scene.camera))?;
    write_json(&out.join("sim_report.json"), &report)?;
    let opts = if cfg.render_markers {
        RenderOptions::with_markers(None)
    } else {
        RenderOptions::default()
    };
    render_layout(&goal, scene.image_width, scene.image_height, &opts, &out.join("after.ppm"))?;
    println!("{} move(s), plan {}", plan.len(), if report.valid { "valid" } else { "INVALID" });
    Ok(if report.valid { 0 } else { 4 })
}

fn cmd_render(common: &Common, layout: Option<&Path>, out: &Path, markers: bool) -> Result<i32, PipelineError> {
    let scene = load_scene(&common.scene)?;
    let l = match layout {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(io(p))?;
            let rec: LayoutRecord =
                serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
            Layout::from_record(&scene, rec)?
        }
        None => Layout::from_scene(&scene),
    };
    let opts = if markers {
        RenderOptions::with_markers(None)
    } else {
        RenderOptions::default()
    };
    render_layout(&l, scene.image_width, scene.image_height, &opts, out)?;
    Ok(0)
}

fn cmd_serve(common: &Common, provider: &str, addr: &str) -> Result<i32, PipelineError> {
    let scene = load_scene(&common.scene)?;
    let spec: ProviderSpec = provider.parse()?;
    if let ProviderSpec::Http(_) = spec {
        return Err(PipelineError::Config("serve-stub needs a local provider".into()));
    }
    let backend: Arc<dyn GoalProvider> = Arc::from(spec.build(&scene)?);
    let server = StubServer::spawn(backend, addr)?;
    println!("serving {spec} at {}/generate", server.url());
    let _ = std::io::stdout().flush();
    server.join();
    Ok(0)
}

fn cmd_gen_fixtures(out: &Path, seed: u64, count: usize) -> Result<i32, PipelineError> {
    let scenes = out.join("scenes");
    std::fs::create_dir_all(&scenes).map_err(io(&scenes))?;
    for name in fixtures::SCENE_NAMES {
        let scene = fixtures::named_scene(name).expect("listed scene");
        let path = scenes.join(format!("{name}.scene.json"));
        std::fs::write(&path, scene.to_json() + "\n").map_err(io(&path))?;
        for template in Template::ALL {
            let provider = SyntheticProvider::new(template, scene.clone());
            let dir = out.join("candidates").join(format!("{name}-{}", template.name()));
            let mut written = 0;
            for k in 0..count {
                // templates that do not fit a scene are simply skipped
                let Ok(c) = provider.generate(Some(seed), k) else {
                    continue;
                };
                std::fs::create_dir_all(&dir).map_err(io(&dir))?;
                write_json(&dir.join(format!("{k:03}{FIXTURE_SUFFIX}")), &c.candidate)?;
                written += 1;
            }
            if written > 0 {
                println!("{}: {written} candidate(s)", dir.display());
            }
        }
    }
    let tasks = out.join("tasks");
    std::fs::create_dir_all(&tasks).map_err(io(&tasks))?;
    write_json(
        &tasks.join("dining.tasks.json"),
        &MissingTaskFile {
            tasks: fixtures::dining_missing_tasks(),
        },
    )?;
    let cfg = out.join("config.json");
    write_json(&cfg, &PipelineConfig::default())?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, provider, out } => cmd_run(common, provider.as_deref(), out),
        Command::EvalMissing {
            common,
            tasks,
            provider,
            out,
        } => cmd_eval_missing(common, tasks, provider.as_deref(), out),
        Command::Baseline { kind, common, out } => cmd_baseline(*kind, common, out),
        Command::Render {
            common,
            layout,
            out,
            markers,
        } => cmd_render(common, layout.as_deref(), out, *markers),
        Command::ServeStub { common, provider, addr } => cmd_serve(common, provider, addr),
        Command::GenFixtures { out, seed, count } => cmd_gen_fixtures(out, *seed, *count),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error [{}]: {e}", e.stage());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
