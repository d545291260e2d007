use std::path::PathBuf;
use std::process::{Command, Output};

fn corpus(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/corpus")
        .join(file)
}

fn hitting(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hitting"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(file: &str) -> String {
    corpus(file).to_str().unwrap().to_string()
}

#[test]
fn compile_echoes_defaults_deterministically() {
    let a = hitting(&["compile", &path("move_right_3.tm")]);
    assert_eq!(a.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["epsilon"], "1/4");
    assert_eq!(v["delta"], "1/2");
    assert_eq!(v["grid"], 1);
    let b = hitting(&["compile", &path("move_right_3.tm")]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compile_rejects_out_of_range_epsilon() {
    let o = hitting(&["compile", &path("move_right_3.tm"), "--epsilon", "3/4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < ε < 1/2"));
}

#[test]
fn float_parameters_are_rejected() {
    let o = hitting(&["compile", &path("move_right_3.tm"), "--delta", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn hit_exit_codes() {
    let o = hitting(&["hit", &path("move_right_3.tm")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t"], "4");

    let o = hitting(&["hit", &path("stay_loop.tm")]);
    assert_eq!(o.status.code(), Some(2));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["max_fidelity"], 0.0);
}

#[test]
fn bad_machine_file_reports_position() {
    let dir = std::env::temp_dir().join(format!("hitting-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.tm");
    std::fs::write(
        &bad,
        "states: a h\nalphabet: _\nstart: a\nhalt: h\nrule: a _ -> b _ R\n",
    )
    .unwrap();
    let o = hitting(&["hit", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
}

#[test]
fn loop_trace_is_flat_zero() {
    let o = hitting(&["trace", &path("ping_pong.tm"), "--horizon", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,fidelity"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r.ends_with(",0.000000000000")));
}

#[test]
fn halted_trace_alternates_after_k_plus_one() {
    // bb2 halts at K = 6
    let o = hitting(&["trace", &path("bb2.tm"), "--horizon", "12"]);
    let text = stdout(&o);
    let fid: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    let expect: Vec<&str> = (0..=12)
        .map(|t| {
            if t >= 7 && (t - 7) % 2 == 0 {
                "1.000000000000"
            } else {
                "0.000000000000"
            }
        })
        .collect();
    assert_eq!(fid, expect);
}

#[test]
fn sub_grid_trace_has_exact_times() {
    let o = hitting(&[
        "trace",
        &path("move_right_3.tm"),
        "--horizon",
        "2",
        "--clock",
        "cyclic:8",
        "--grid",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let times: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    assert_eq!(
        times,
        ["0", "0.125", "0.25", "0.375", "1", "1.125", "1.25", "1.375", "2"]
    );
}

#[test]
fn out_flag_writes_file() {
    let out = std::env::temp_dir().join(format!("hitting-cli-out-{}.json", std::process::id()));
    let o = hitting(&["hit", &path("bb3.tm"), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["t"], "15");
}

#[test]
fn exact_target_round_trip() {
    let o = hitting(&["evolve", &path("move_right_3.tm"), "--time", "5"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["exact"], true);
    let hex = v["entries"][0][0].as_str().unwrap().to_string();
    let o = hitting(&["hit", &path("move_right_3.tm"), "--target", &format!("exact:{hex}")]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["t"], "5");
}

#[test]
fn verify_bundled_corpus() {
    let o = hitting(&["verify"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 18);
    assert!(lines.iter().all(|l| l["verdict"] == "agree"));
}

#[test]
fn verify_manifest_from_disk() {
    let o = hitting(&["verify", "--manifest", &path("manifest.json"), "--horizon", "500"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn sweep_reports_witnesses() {
    let o = hitting(&["sweep", "--budgets", "10,100"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<serde_json::Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["witness"]["K"], 12);
    assert_eq!(lines[1]["witness"]["K"], 102);
    assert_eq!(lines[1]["outcome"]["unreachable"], "observation_time");
}
