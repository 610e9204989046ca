use std::sync::Arc;

use arrange_core::fixtures;
use arrange_core::pipeline::{
    evaluate_missing, run_pipeline, MissingTask, PipelineConfig, PipelineError, ARTIFACTS, METHOD_GENERATED,
};
use arrange_core::provider::{GoalProvider, HttpProvider, StubServer, SyntheticProvider, Template};

fn place_setting() -> (arrange_core::SceneDescription, SyntheticProvider) {
    let scene = fixtures::dining_scene();
    let provider = SyntheticProvider::new(Template::PlaceSetting, scene.clone());
    (scene, provider)
}

#[test]
fn http_stub_gives_the_same_goal_as_the_local_provider() {
    let (scene, local) = place_setting();
    let cfg = PipelineConfig::default();
    let direct = run_pipeline(&scene, &cfg, &local, None).unwrap();

    let backend: Arc<dyn GoalProvider> = Arc::new(local);
    let server = StubServer::spawn(backend, "127.0.0.1:0").unwrap();
    let remote = HttpProvider::new(server.url());
    let via_http = run_pipeline(&scene, &cfg, &remote, None).unwrap();

    assert_eq!(direct.goal, via_http.goal);
    assert_eq!(direct.plan, via_http.plan);
    assert_eq!(direct.batch_counts, via_http.batch_counts);
    assert!(via_http.report.valid);
}

#[test]
fn unreachable_endpoint_is_a_provider_failure() {
    let (scene, _) = place_setting();
    // bind then drop to get a port nobody listens on
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let remote = HttpProvider::new(format!("http://127.0.0.1:{port}"));
    let err = run_pipeline(&scene, &PipelineConfig::default(), &remote, None).unwrap_err();
    assert!(matches!(err, PipelineError::Provider(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn every_artifact_is_written_and_reruns_are_identical() {
    let (scene, provider) = place_setting();
    let cfg = PipelineConfig::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_pipeline(&scene, &cfg, &provider, Some(a.path())).unwrap();
    run_pipeline(&scene, &cfg, &provider, Some(b.path())).unwrap();
    for name in ARTIFACTS {
        let x = std::fs::read(a.path().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs between reruns");
        if name.ends_with(".ppm") {
            let header = format!("P6\n{} {}\n255\n", scene.image_width, scene.image_height);
            assert!(x.starts_with(header.as_bytes()), "{name}");
            assert_eq!(x.len(), header.len() + 3 * (scene.image_width * scene.image_height) as usize);
        } else if name.ends_with(".json") {
            serde_json::from_slice::<serde_json::Value>(&x).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
    let audit = std::fs::read_to_string(a.path().join("audit.jsonl")).unwrap();
    for line in audit.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["stage"].is_string());
    }
}

#[test]
fn generated_missing_poses_beat_both_baselines() {
    let scene = fixtures::dining_scene();
    let tasks = fixtures::dining_missing_tasks();
    let oracle = |t: &MissingTask| -> Result<Box<dyn GoalProvider>, PipelineError> {
        Ok(Box::new(SyntheticProvider::with_poses(
            scene.clone(),
            vec![(t.missing_id.clone(), t.acceptable_poses[0])],
        )))
    };
    let report = evaluate_missing(&scene, &tasks, &PipelineConfig::default(), &oracle).unwrap();
    assert_eq!(report.rows.len(), 3 * tasks.len());
    let summary = report.summary();
    let generated = &summary.by_method[METHOD_GENERATED];
    assert_eq!(generated.count, tasks.len());
    assert!(generated.median_cm < 0.5, "{generated:?}");
    for (method, s) in &summary.by_method {
        if method != METHOD_GENERATED {
            assert!(s.median_cm > generated.median_cm, "{method}: {s:?}");
        }
    }
    assert!(report.to_table().contains("plate"));
}
