use std::path::Path;
use std::process::{Command, Output};

const ENDPOINT_ENV: &str = "ARRANGE_PROVIDER_URL";

fn arrange(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arrange"))
        .args(args)
        .env_remove(ENDPOINT_ENV)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synthetic_run_succeeds_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = arrange(&["run", "--scene", "builtin:dining", "--provider", "synthetic:place-setting", "--out", s(out)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["layout.json", "plan.json", "sim_report.json", "audit.jsonl", "after.ppm"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("sim_report.json")).unwrap()).unwrap();
    assert_eq!(report["valid"], true);
}

#[test]
fn generated_fixtures_drive_a_fixture_run() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    let o = arrange(&["gen-fixtures", "--out", s(&fx), "--count", "2"]);
    assert_eq!(code(&o), 0);
    assert!(fx.join("tasks/dining.tasks.json").is_file());
    let scene = fx.join("scenes/dining.scene.json");
    let candidates = fx.join("candidates/dining-place-setting");
    let provider = format!("fixture:{}", s(&candidates));
    let out = dir.path().join("run");
    let o = arrange(&[
        "run",
        "--scene",
        s(&scene),
        "--config",
        s(&fx.join("config.json")),
        "--provider",
        &provider,
        "--out",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("plan.json").is_file());
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = arrange(&["run", "--scene", "builtin:nowhere", "--provider", "synthetic:place-setting", "--out", s(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error ["));

    let scene = dir.path().join("bad.scene.json");
    std::fs::write(&scene, "{\"image_width\": 3}").unwrap();
    let o = arrange(&["run", "--scene", s(&scene), "--provider", "synthetic:place-setting", "--out", s(&out)]);
    assert_eq!(code(&o), 2);

    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{\"batch_size\": 4, \"no_such_field\": 1}").unwrap();
    let o = arrange(&["run", "--scene", "builtin:dining", "--config", s(&cfg), "--provider", "synthetic:place-setting", "--out", s(&out)]);
    assert_eq!(code(&o), 2);

    let o = arrange(&["run", "--scene", "builtin:dining", "--out", s(&out)]);
    assert_eq!(code(&o), 2, "no provider at all");
}

#[test]
fn provider_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let out = dir.path().join("out");
    let provider = format!("fixture:{}", s(&empty));
    let o = arrange(&["run", "--scene", "builtin:dining", "--provider", &provider, "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    // a candidate with one object missing never passes the count filter
    let fx = dir.path().join("fx");
    assert_eq!(code(&arrange(&["gen-fixtures", "--out", s(&fx), "--count", "1"])), 0);
    let short = dir.path().join("short");
    std::fs::create_dir(&short).unwrap();
    let src = fx.join("candidates/dining-place-setting/000.candidate.json");
    let mut doc: serde_json::Value = serde_json::from_slice(&std::fs::read(src).unwrap()).unwrap();
    doc["objects"].as_array_mut().unwrap().pop();
    std::fs::write(short.join("000.candidate.json"), doc.to_string()).unwrap();
    let provider = format!("fixture:{}", s(&short));
    let o = arrange(&["run", "--scene", "builtin:dining", "--provider", &provider, "--out", s(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("audit.jsonl").is_file());
}

#[test]
fn endpoint_variable_points_runs_at_a_stub() {
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut stub = Command::new(env!("CARGO_BIN_EXE_arrange"))
        .args(["serve-stub", "--scene", "builtin:dining", "--provider", "synthetic:place-setting", "--addr", &addr])
        .stdout(std::process::Stdio::null())
        .spawn()
        .unwrap();
    let out = dir.path().join("out");
    let mut result = None;
    // the stub needs a moment to bind
    for _ in 0..50 {
        let o = Command::new(env!("CARGO_BIN_EXE_arrange"))
            .args(["run", "--scene", "builtin:dining", "--out", s(&out)])
            .env(ENDPOINT_ENV, format!("http://{addr}"))
            .output()
            .unwrap();
        if code(&o) != 3 {
            result = Some(o);
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(100));
    }
    stub.kill().unwrap();
    let _ = stub.wait();
    let o = result.expect("stub never answered");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("http:"));

    let local = dir.path().join("local");
    let o = arrange(&["run", "--scene", "builtin:dining", "--provider", "synthetic:place-setting", "--out", s(&local)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(out.join("layout.json")).unwrap(), std::fs::read(local.join("layout.json")).unwrap());
}

#[test]
fn baselines_and_render() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["random", "geometric"] {
        let out = dir.path().join(kind);
        let o = arrange(&["baseline", kind, "--scene", "builtin:dining", "--out", s(&out)]);
        assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let ppm = dir.path().join(format!("{kind}.ppm"));
        let layout = out.join("layout.json");
        let o = arrange(&["render", "--scene", "builtin:dining", "--layout", s(&layout), "--out", s(&ppm), "--markers"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(std::fs::read(&ppm).unwrap().starts_with(b"P6\n"));
    }
}

#[test]
fn oracle_missing_evaluation_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let fx = dir.path().join("fx");
    assert_eq!(code(&arrange(&["gen-fixtures", "--out", s(&fx), "--count", "1"])), 0);
    let out = dir.path().join("eval");
    let tasks = fx.join("tasks/dining.tasks.json");
    let o = arrange(&["eval-missing", "--scene", "builtin:dining", "--tasks", s(&tasks), "--provider", "oracle", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap();
    let generated = &report["summary"]["by_method"]["generated"];
    assert!(generated["median_cm"].as_f64().unwrap() < 0.5, "{generated}");
    let table = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(table.contains("geometric") && table.contains("random"));
}
