//! The full goal-inference and planning run, its configuration, artifacts
//! and audit trail, plus the missing-object evaluation run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::evaluation::{
    baseline_geometric_missing, baseline_random_missing, pose_error, AcceptablePoseSet, EvalError, EvalReport, PoseError,
    ReportRow, DEFAULT_MAX_ATTEMPTS, DEFAULT_SYMMETRIC,
};
use crate::geometry::Pose2D;
use crate::layout::{resolve_collisions_traced, scale_normalize, CollisionConfig, Layout, LayoutError};
use crate::matching::{select_goal, similarity_matrix, GoalSelection, MatchError};
use crate::planning::{plan_moves, simulate, PickPlacePlan, PlanError, SimReport};
use crate::prompting::{
    build_prompt, compose_inpaint_mask, preserve_only, InpaintMask, Prompt, PromptError, DEFAULT_CONTOUR_THICKNESS,
    DEFAULT_MOVABLE_DILATION, DEFAULT_SUFFIX,
};
use crate::provider::{
    sample_until_valid, FixtureProvider, GenerationRequest, GoalProvider, HttpProvider, ProviderError, SyntheticProvider,
    Template, DEFAULT_BATCH_SIZE, DEFAULT_MAX_BATCHES, ENDPOINT_ENV,
};
use crate::registration::{estimate_object_transform, Registration, RegistrationConfig, RegistrationError};
use crate::render::{render_layout, RenderError, RenderOptions};
use crate::scene::{ObjectInstance, SceneDescription, SceneError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("scene: {0}")]
    Scene(#[from] SceneError),
    #[error("prompting: {0}")]
    Prompting(#[from] PromptError),
    #[error("goal_provider: {0}")]
    Provider(#[from] ProviderError),
    #[error("matching: {0}")]
    Matching(#[from] MatchError),
    #[error("registration: `{id}`: {source}")]
    Registration { id: String, source: RegistrationError },
    #[error("layout: {0}")]
    Layout(#[from] LayoutError),
    #[error("planning: {0}")]
    Planning(#[from] PlanError),
    #[error("evaluation: {0}")]
    Evaluation(#[from] EvalError),
    #[error("output: cannot write `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Scene(_) => "scene",
            Self::Prompting(_) => "prompting",
            Self::Provider(_) => "goal_provider",
            Self::Matching(_) => "matching",
            Self::Registration { .. } => "registration",
            Self::Layout(_) => "layout",
            Self::Planning(_) => "planning",
            Self::Evaluation(_) => "evaluation",
            Self::Io { .. } => "output",
        }
    }

    /// 2 invalid input, 3 provider failure, 4 planning failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Scene(_) | Self::Prompting(_) | Self::Io { .. } => 2,
            Self::Provider(_) | Self::Matching(_) => 3,
            Self::Registration { .. } | Self::Layout(_) | Self::Planning(_) | Self::Evaluation(_) => 4,
        }
    }
}

impl From<RenderError> for PipelineError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Io { path, source } => Self::Io { path, source },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// `fixture:DIR`, `synthetic:NAME` or `http:URL`; the command line wins.
    pub provider: Option<String>,
    pub batch_size: usize,
    pub max_batches: usize,
    pub seed: u64,
    pub prompt_suffix: String,
    pub contour_thickness: u32,
    pub movable_dilation: u32,
    pub registration: RegistrationConfig,
    pub collision: CollisionConfig,
    /// Class nouns whose orientation error is not scored.
    pub symmetric_nouns: Vec<String>,
    pub render_markers: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            provider: None,
            batch_size: DEFAULT_BATCH_SIZE,
            max_batches: DEFAULT_MAX_BATCHES,
            seed: 0,
            prompt_suffix: DEFAULT_SUFFIX.into(),
            contour_thickness: DEFAULT_CONTOUR_THICKNESS,
            movable_dilation: DEFAULT_MOVABLE_DILATION,
            registration: RegistrationConfig::default(),
            collision: CollisionConfig::default(),
            symmetric_nouns: DEFAULT_SYMMETRIC.iter().map(|s| s.to_string()).collect(),
            render_markers: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::Config(m.into()));
        let icp = &self.registration.icp;
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.max_batches == 0 {
            return bad("max_batches must be at least 1");
        }
        if icp.max_iter == 0 || icp.restarts == 0 {
            return bad("registration.icp.max_iter and restarts must be at least 1");
        }
        if !(icp.tol.is_finite() && icp.tol >= 0.0) {
            return bad("registration.icp.tol must be finite and non-negative");
        }
        if icp.max_points < 3 {
            return bad("registration.icp.max_points must be at least 3");
        }
        if !(self.collision.step.is_finite() && self.collision.step > 0.0) {
            return bad("collision.step must be positive");
        }
        if self.collision.max_iter == 0 {
            return bad("collision.max_iter must be at least 1");
        }
        if let Some(p) = &self.provider {
            p.parse::<ProviderSpec>()?;
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, PipelineError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let s = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&s)
    }

    pub fn is_symmetric(&self, noun: &str) -> bool {
        self.symmetric_nouns.iter().any(|n| n == noun)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSpec {
    Fixture(PathBuf),
    Synthetic(Template),
    Http(String),
}

impl FromStr for ProviderSpec {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| PipelineError::Config(format!("provider `{s}` is not KIND:ARG")))?;
        if arg.is_empty() {
            return Err(PipelineError::Config(format!("provider `{s}` has an empty argument")));
        }
        match kind {
            "fixture" => Ok(Self::Fixture(PathBuf::from(arg))),
            "synthetic" => arg
                .parse()
                .map(Self::Synthetic)
                .map_err(|e: ProviderError| PipelineError::Config(e.to_string())),
            // a bare URL names itself
            "http" | "https" if arg.starts_with("//") => Ok(Self::Http(s.into())),
            "http" => Ok(Self::Http(arg.into())),
            other => Err(PipelineError::Config(format!("unknown provider kind `{other}`"))),
        }
    }
}

impl fmt::Display for ProviderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixture(d) => write!(f, "fixture:{}", d.display()),
            Self::Synthetic(t) => write!(f, "synthetic:{}", t.name()),
            Self::Http(u) => write!(f, "http:{u}"),
        }
    }
}

impl ProviderSpec {
    /// `spec` (command line, then config) with the endpoint override:
    /// `env_url` replaces the URL of an HTTP provider and is used on its own
    /// when nothing else names a provider.
    pub fn resolve(spec: Option<&str>, env_url: Option<&str>) -> Result<Self, PipelineError> {
        let env_url = env_url.filter(|u| !u.is_empty());
        match (spec.map(str::parse::<Self>).transpose()?, env_url) {
            (Some(Self::Http(_)), Some(u)) | (None, Some(u)) => Ok(Self::Http(u.into())),
            (Some(s), _) => Ok(s),
            (None, None) => Err(PipelineError::Config(format!(
                "no provider given; pass --provider or set {ENDPOINT_ENV}"
            ))),
        }
    }

    pub fn from_env(spec: Option<&str>) -> Result<Self, PipelineError> {
        Self::resolve(spec, std::env::var(ENDPOINT_ENV).ok().as_deref())
    }

    pub fn build(&self, scene: &SceneDescription) -> Result<Box<dyn GoalProvider>, PipelineError> {
        Ok(match self {
            Self::Fixture(d) => Box::new(FixtureProvider::open(d)?),
            Self::Synthetic(t) => Box::new(SyntheticProvider::new(*t, scene.clone())),
            Self::Http(u) => Box::new(HttpProvider::new(u)),
        })
    }
}

/// One JSON object per stage, in execution order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditLog {
    pub records: Vec<Value>,
}

impl AuditLog {
    fn record(&mut self, stage: &str, data: Value) {
        self.records.push(json!({ "stage": stage, "data": data }));
    }

    pub fn to_jsonl(&self) -> String {
        self.records.iter().map(|r| format!("{r}\n")).collect()
    }

    pub fn stages(&self) -> Vec<&str> {
        self.records.iter().filter_map(|r| r["stage"].as_str()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectRegistration {
    pub object_id: String,
    pub candidate_object: String,
    pub registration: Registration,
    pub goal_pose: Pose2D,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub provider: String,
    pub prompt: Prompt,
    pub inpaint: InpaintMask,
    /// Absent when there was nothing to move.
    pub selection: Option<GoalSelection>,
    pub batch_counts: Vec<Vec<usize>>,
    pub registrations: Vec<ObjectRegistration>,
    pub initial: Layout,
    pub raw_goal: Layout,
    pub scale: f64,
    pub scaled_goal: Layout,
    pub goal: Layout,
    pub anchor: Option<usize>,
    pub plan: PickPlacePlan,
    pub report: SimReport,
    pub warnings: Vec<String>,
    pub audit: AuditLog,
}

impl PipelineRun {
    pub fn exit_code(&self) -> i32 {
        if self.report.valid {
            0
        } else {
            4
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    std::fs::write(path, contents).map_err(io_err(path))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifacts serialize");
    s.push('\n');
    s
}

fn prompt_for(scene: &SceneDescription, suffix: &str) -> Result<Prompt, PromptError> {
    let nouns: Vec<String> = scene.objects.iter().map(|o| o.class_noun.clone()).collect();
    build_prompt(&nouns, suffix)
}

fn registration_audit(r: &ObjectRegistration) -> Value {
    let icp = &r.registration.icp;
    json!({
        "object_id": r.object_id,
        "candidate_object": r.candidate_object,
        "transform": r.registration.transform,
        "size_ratio": r.registration.size_ratio,
        "rms": icp.rms,
        "iterations": icp.iterations,
        "converged": icp.converged,
        "runner_up_rms": icp.runner_up_rms,
        "runner_up_theta": icp.runner_up_theta,
        "symmetry_warning": icp.symmetry_warning(),
        "restarts": icp.restarts.iter().map(|t| json!({
            "start_angle": t.start_angle,
            "theta": t.transform.theta,
            "rms": t.rms,
            "converged": t.converged,
        })).collect::<Vec<_>>(),
        "goal_pose": r.goal_pose,
    })
}

fn selection_audit(scene: &SceneDescription, sel: &GoalSelection) -> Result<Value, MatchError> {
    let init: Vec<&ObjectInstance> = scene.movable().collect();
    let cand: Vec<&ObjectInstance> = sel.candidate.movable().collect();
    Ok(json!({
        "selection": sel.audit(),
        "initial_ids": init.iter().map(|o| &o.id).collect::<Vec<_>>(),
        "candidate_ids": cand.iter().map(|o| &o.id).collect::<Vec<_>>(),
        "similarity": similarity_matrix(&init, &cand)?,
    }))
}

/// Registers every matched pair; goal poses carry each rest pose through the
/// estimated motion.
fn register_all(
    scene: &SceneDescription,
    sel: &GoalSelection,
    cfg: &RegistrationConfig,
    initial: &Layout,
) -> Result<Vec<ObjectRegistration>, PipelineError> {
    sel.matches
        .iter()
        .map(|m| {
            let init = &scene.objects[m.initial_index];
            let goal = &sel.candidate.objects[m.candidate_index];
            let registration = estimate_object_transform(init, goal, cfg).map_err(|source| PipelineError::Registration {
                id: init.id.clone(),
                source,
            })?;
            let rest = initial.entry(&init.id).expect("layout built from the scene").pose;
            let t = &registration.transform;
            let goal_pose = Pose2D::at(t.apply(rest.centroid()), rest.theta + t.theta);
            Ok(ObjectRegistration {
                object_id: init.id.clone(),
                candidate_object: goal.id.clone(),
                registration,
                goal_pose,
            })
        })
        .collect()
}

fn request_for(prompt: &Prompt, inpaint: &InpaintMask, cfg: &PipelineConfig) -> GenerationRequest {
    GenerationRequest::new(prompt.clone(), inpaint.clone())
        .with_batch_size(cfg.batch_size)
        .with_seed(Some(cfg.seed))
}

/// Runs every stage. With `out_dir` the artifacts are written there; the
/// audit log is written even when a stage fails.
pub fn run_pipeline(
    scene: &SceneDescription,
    cfg: &PipelineConfig,
    provider: &dyn GoalProvider,
    out_dir: Option<&Path>,
) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    scene.validate()?;
    if let Some(d) = out_dir {
        std::fs::create_dir_all(d).map_err(io_err(d))?;
    }
    let mut audit = AuditLog::default();
    let result = run_stages(scene, cfg, provider, &mut audit);
    if let Some(d) = out_dir {
        write(&d.join("audit.jsonl"), audit.to_jsonl())?;
    }
    let mut run = result?;
    run.audit = audit;
    if let Some(d) = out_dir {
        write_artifacts(scene, cfg, &run, d)?;
    }
    Ok(run)
}

fn run_stages(
    scene: &SceneDescription,
    cfg: &PipelineConfig,
    provider: &dyn GoalProvider,
    audit: &mut AuditLog,
) -> Result<PipelineRun, PipelineError> {
    let prompt = prompt_for(scene, &cfg.prompt_suffix)?;
    let inpaint = compose_inpaint_mask(scene, cfg.contour_thickness, cfg.movable_dilation);
    audit.record(
        "prompting",
        json!({ "prompt": prompt.text, "nouns": prompt.noun_list, "preserved_pixels": inpaint.mask.area() }),
    );
    let initial = Layout::from_scene(scene);
    let mut warnings = Vec::new();

    let (selection, batch_counts, registrations, raw_goal, scale, scaled_goal, goal, anchor) = if scene.movable_count() == 0 {
        audit.record("goal_provider", json!({ "skipped": "no movable objects" }));
        let l = initial.clone();
        (None, Vec::new(), Vec::new(), l.clone(), 1.0, l.clone(), l, None)
    } else {
        let request = request_for(&prompt, &inpaint, cfg);
        let outcome = sample_until_valid(provider, scene, &request, cfg.max_batches)?;
        audit.record(
            "goal_provider",
            json!({
                "provider": provider.describe(),
                "batch_size": cfg.batch_size,
                "seed": cfg.seed,
                "batches": outcome.batches,
                "counts": outcome.counts,
                "accepted": outcome.accepted.iter().map(|c| &c.source_tag).collect::<Vec<_>>(),
            }),
        );

        let sel = select_goal(scene, &outcome.accepted)?;
        audit.record("matching", selection_audit(scene, &sel)?);

        let regs = register_all(scene, &sel, &cfg.registration, &initial)?;
        for r in &regs {
            if r.registration.icp.symmetry_warning() {
                warnings.push(format!(
                    "`{}`: alternative alignment fits within {:.0}% (orientation may be ambiguous)",
                    r.object_id,
                    crate::registration::SYMMETRY_RATIO * 100.0
                ));
            }
        }
        audit.record("registration", Value::Array(regs.iter().map(registration_audit).collect()));

        let mut raw = initial.clone();
        let mut ratios = vec![1.0; raw.len()];
        for r in &regs {
            raw.set_pose(&r.object_id, r.goal_pose)?;
            ratios[raw.index_of(&r.object_id).expect("registered ids are in the layout")] = r.registration.size_ratio;
        }
        let (scaled, s) = scale_normalize(&raw, &ratios)?;
        let res = resolve_collisions_traced(&scaled, &cfg.collision)?;
        audit.record(
            "layout",
            json!({
                "scale": s,
                "anchor": res.layout.entries[res.anchor].id,
                "iterations": res.iterations,
                "goal": res.layout,
            }),
        );
        let (goal, anchor) = (res.layout, res.anchor);
        (Some(sel), outcome.counts, regs, raw, s, scaled, goal, Some(anchor))
    };

    let plan = plan_moves(&initial, &goal, cfg.collision.margin)?;
    audit.record("planning", json!({ "moves": plan.to_record(&scene.camera) }));
    let report = simulate(&plan, &initial, &goal, cfg.collision.margin)?;
    audit.record("simulation", json!({ "valid": report.valid, "violations": report.violations }));

    Ok(PipelineRun {
        provider: provider.describe(),
        prompt,
        inpaint,
        selection,
        batch_counts,
        registrations,
        initial,
        raw_goal,
        scale,
        scaled_goal,
        goal,
        anchor,
        plan,
        report,
        warnings,
        audit: AuditLog::default(),
    })
}

/// File names written by [`run_pipeline`].
pub const ARTIFACTS: &[&str] = &[
    "audit.jsonl",
    "prompt.txt",
    "inpaint_mask.json",
    "selection.json",
    "registration.json",
    "layout_raw.json",
    "layout_scaled.json",
    "layout.json",
    "plan.json",
    "sim_report.json",
    "summary.json",
    "before.ppm",
    "goal.ppm",
    "after.ppm",
];

fn write_artifacts(scene: &SceneDescription, cfg: &PipelineConfig, run: &PipelineRun, d: &Path) -> Result<(), PipelineError> {
    write(&d.join("prompt.txt"), format!("{}\n", run.prompt.text))?;
    write(&d.join("inpaint_mask.json"), pretty(&run.inpaint.mask))?;
    let selection = match &run.selection {
        Some(s) => json!({
            "batch_counts": run.batch_counts,
            "chosen": s.audit(),
            "candidate": s.candidate,
        }),
        None => Value::Null,
    };
    write(&d.join("selection.json"), pretty(&selection))?;
    write(&d.join("registration.json"), pretty(&run.registrations))?;
    write(&d.join("layout_raw.json"), pretty(&run.raw_goal))?;
    write(&d.join("layout_scaled.json"), pretty(&run.scaled_goal))?;
    write(&d.join("layout.json"), pretty(&run.goal))?;
    write(&d.join("plan.json"), pretty(&run.plan.to_record(&scene.camera)))?;
    write(&d.join("sim_report.json"), pretty(&run.report))?;
    write(
        &d.join("summary.json"),
        pretty(&json!({
            "provider": run.provider,
            "valid": run.report.valid,
            "moves": run.plan.len(),
            "scale": run.scale,
            "warnings": run.warnings,
        })),
    )?;
    let (w, h) = (scene.image_width, scene.image_height);
    let opts = |anchor| {
        if cfg.render_markers {
            RenderOptions::with_markers(anchor)
        } else {
            RenderOptions::default()
        }
    };
    render_layout(&run.initial, w, h, &opts(None), &d.join("before.ppm"))?;
    render_layout(&run.goal, w, h, &opts(run.anchor), &d.join("goal.ppm"))?;
    render_layout(&run.report.final_layout, w, h, &opts(run.anchor), &d.join("after.ppm"))?;
    Ok(())
}

/// One held-out object and the poses the user would accept for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingTask {
    pub missing_id: String,
    pub acceptable_poses: Vec<Pose2D>,
    /// Overrides the configured symmetric-noun list for this object.
    #[serde(default)]
    pub symmetric: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissingTaskFile {
    pub tasks: Vec<MissingTask>,
}

impl MissingTaskFile {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let s = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&s).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }
}

impl MissingTask {
    fn split<'a>(&self, scene: &'a SceneDescription) -> Result<(&'a ObjectInstance, Layout), PipelineError> {
        let missing = scene
            .object(&self.missing_id)
            .filter(|o| o.movable)
            .ok_or_else(|| PipelineError::Config(format!("`{}` is not a movable scene object", self.missing_id)))?;
        if self.acceptable_poses.is_empty() {
            return Err(EvalError::NoAcceptablePose(self.missing_id.clone()).into());
        }
        let full = Layout::from_scene(scene);
        let fixed = Layout::new(
            full.entries.into_iter().filter(|e| e.id != self.missing_id).collect(),
            full.bounds,
        )?;
        Ok((missing, fixed))
    }

    pub fn acceptable(&self) -> AcceptablePoseSet {
        AcceptablePoseSet {
            object_id: self.missing_id.clone(),
            poses: self.acceptable_poses.clone(),
        }
    }

    fn symmetric(&self, cfg: &PipelineConfig, noun: &str) -> bool {
        self.symmetric.unwrap_or_else(|| cfg.is_symmetric(noun))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MissingPrediction {
    pub predicted: Pose2D,
    pub error: PoseError,
    pub source_tag: String,
    pub symmetry_warning: bool,
}

/// Inpaints around the fixed objects and reads the held-out object's pose
/// off the generated scene. Candidates must hold the fixed movable objects
/// plus exactly one new one, so the usual count filter applies.
pub fn predict_missing(
    scene: &SceneDescription,
    task: &MissingTask,
    cfg: &PipelineConfig,
    provider: &dyn GoalProvider,
) -> Result<MissingPrediction, PipelineError> {
    cfg.validate()?;
    let (missing, _) = task.split(scene)?;
    let prompt = prompt_for(scene, &cfg.prompt_suffix)?;
    let fixed_ids: Vec<&str> = scene.objects.iter().map(|o| o.id.as_str()).filter(|id| *id != task.missing_id).collect();
    let inpaint = preserve_only(scene, &fixed_ids);
    let outcome = sample_until_valid(provider, scene, &request_for(&prompt, &inpaint, cfg), cfg.max_batches)?;
    let sel = select_goal(scene, &outcome.accepted)?;
    let m = sel
        .matches
        .iter()
        .find(|m| m.initial_id == task.missing_id)
        .expect("every movable object is matched");
    let reg = estimate_object_transform(missing, &sel.candidate.objects[m.candidate_index], &cfg.registration)
        .map_err(|source| PipelineError::Registration {
            id: missing.id.clone(),
            source,
        })?;
    let rest = Layout::from_scene(scene).entry(&missing.id).expect("scene object").pose;
    let predicted = Pose2D::at(reg.transform.apply(rest.centroid()), rest.theta + reg.transform.theta);
    let error = pose_error(&predicted, &task.acceptable(), &scene.camera, task.symmetric(cfg, &missing.class_noun))?;
    Ok(MissingPrediction {
        predicted,
        error,
        source_tag: sel.candidate.source_tag.clone(),
        symmetry_warning: reg.icp.symmetry_warning(),
    })
}

pub const METHOD_GENERATED: &str = "generated";
pub const METHOD_GEOMETRIC: &str = "geometric";
pub const METHOD_RANDOM: &str = "random";

/// Builds the provider that inpaints one task's missing object.
pub type ProviderFactory<'a> = dyn Fn(&MissingTask) -> Result<Box<dyn GoalProvider>, PipelineError> + 'a;

/// Scores the generator (through `provider_for`) and both baselines on every
/// task.
pub fn evaluate_missing(
    scene: &SceneDescription,
    tasks: &[MissingTask],
    cfg: &PipelineConfig,
    provider_for: &ProviderFactory,
) -> Result<EvalReport, PipelineError> {
    let mut report = EvalReport::default();
    for (k, task) in tasks.iter().enumerate() {
        let (missing, fixed) = task.split(scene)?;
        let acceptable = task.acceptable();
        let symmetric = task.symmetric(cfg, &missing.class_noun);
        let provider = provider_for(task)?;
        let generated = predict_missing(scene, task, cfg, provider.as_ref())?.predicted;
        let margin = cfg.collision.margin;
        let geometric = baseline_geometric_missing(&fixed, missing, margin)?;
        let random = baseline_random_missing(&fixed, missing, cfg.seed.wrapping_add(k as u64), DEFAULT_MAX_ATTEMPTS, margin)?;
        for (method, predicted) in [(METHOD_GENERATED, generated), (METHOD_GEOMETRIC, geometric), (METHOD_RANDOM, random)] {
            report.push(ReportRow {
                object_id: missing.id.clone(),
                class_noun: missing.class_noun.clone(),
                method: method.into(),
                predicted,
                error: pose_error(&predicted, &acceptable, &scene.camera, symmetric)?,
            });
        }
    }
    Ok(report)
}
