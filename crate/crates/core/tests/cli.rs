use std::fs;
use std::path::{Path, PathBuf};

use patchtree::cli::{self, EXIT_DATA_QUALITY, EXIT_OK, EXIT_USAGE};
use patchtree::frames::{read_frame_csv, FrameSidecar};
use patchtree::ingestion::PatchVersion;
use patchtree::synthetic::telemetry::{simulate_telemetry, TelemetrySpec};
use patchtree::synthetic::SyntheticSpec;
use patchtree::tree::estimate_effect;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(rel)
}

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("patchtree").chain(args.iter().copied()))
}

fn fixture_args(out: &Path) -> Vec<String> {
    let f = data("fixture");
    vec![
        "--matches".into(),
        f.join("matches.csv").display().to_string(),
        "--player-matches".into(),
        f.join("player_matches.csv").display().to_string(),
        "--catalog".into(),
        f.join("champions.csv").display().to_string(),
        "--out".into(),
        out.display().to_string(),
    ]
}

fn run_with(cmd: &[&str], common: &[String]) -> i32 {
    let mut args: Vec<&str> = cmd.to_vec();
    args.extend(common.iter().map(String::as_str));
    run(&args)
}

fn manifest(out: &Path, command: &str) -> serde_json::Value {
    let text =
        fs::read_to_string(out.join(format!("manifest_{command}.json"))).expect("manifest written");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn ingest_clean_fixture() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_with(&["ingest"], &fixture_args(dir.path())), EXIT_OK);
    let m = manifest(dir.path(), "ingest");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["row_counts"]["matches"], 4);
    assert_eq!(m["row_counts"]["player_matches"], 40);
    assert_eq!(m["inputs"].as_object().unwrap().len(), 3);
    assert_eq!(
        fs::read_to_string(dir.path().join("rejects.csv")).unwrap(),
        "file,line,reason,detail\n"
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("patch_timeline.csv")).unwrap(),
        "patch,first_seen\n4.6,1000000\n4.7,1005100\n"
    );
}

#[test]
fn missing_column_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("fixture/matches.csv")).unwrap();
    let stripped: String = text
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string() + "\n")
        .collect();
    let bad = dir.path().join("matches.csv");
    fs::write(&bad, stripped).unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "ingest",
        "--matches",
        bad.to_str().unwrap(),
        "--player-matches",
        data("fixture/player_matches.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_USAGE);
    let m = manifest(&out, "ingest");
    assert_eq!(m["exit_code"], 2);
    assert!(m["error"].as_str().unwrap().contains("winning_team"));
}

#[test]
fn reject_rate_breach_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let r = data("rejects");
    let code = run(&[
        "ingest",
        "--matches",
        r.join("matches.csv").to_str().unwrap(),
        "--player-matches",
        r.join("player_matches.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_DATA_QUALITY);
    let m = manifest(dir.path(), "ingest");
    assert_eq!(m["exit_code"], 3);
    assert_eq!(m["row_counts"]["rows_read"], 20);
    let rejects = fs::read_to_string(dir.path().join("rejects.csv")).unwrap();
    assert_eq!(rejects.lines().count(), 2, "{rejects}");
}

#[test]
fn missing_input_and_bad_config_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        run(&[
            "ingest",
            "--matches",
            "/nonexistent.csv",
            "--player-matches",
            "/nope.csv",
            "--out",
            out
        ]),
        EXIT_USAGE
    );
    assert_eq!(manifest(dir.path(), "ingest")["exit_code"], 2);

    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"tree": {"alpha": 2.5}}"#).unwrap();
    assert_eq!(
        run(&["report", "--config", cfg.to_str().unwrap(), "--out", out]),
        EXIT_USAGE
    );
    fs::write(&cfg, r#"{"no_such_key": 1}"#).unwrap();
    assert_eq!(
        run(&["report", "--config", cfg.to_str().unwrap(), "--out", out]),
        EXIT_USAGE
    );
    assert_eq!(run(&["fit", "--scope", "bogus", "--out", out]), EXIT_USAGE);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 5, "top_k_champions": 3}"#).unwrap();
    let out = dir.path().join("out");
    let mut common = fixture_args(&out);
    common.extend(["--config".to_string(), cfg.display().to_string()]);
    assert_eq!(run_with(&["ingest", "--seed", "7"], &common), EXIT_OK);
    let m = manifest(&out, "ingest");
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["config"]["top_k_champions"], 3);
    assert_eq!(m["config"]["tree"]["min_leaf_fraction"], 0.05);
}

fn column(csv_text: &str, user: &str, name: &str) -> Vec<String> {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let idx = rdr
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rdr.records()
        .map(Result::unwrap)
        .filter(|r| &r[0] == user)
        .map(|r| r[idx].to_string())
        .collect()
}

#[test]
fn features_single_user_golden() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_with(&["features"], &fixture_args(dir.path())), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("features.csv")).unwrap();
    assert_eq!(text.lines().count(), 41);
    // u00: kills 2, 2, 3, 5; end-to-start gaps of 10, 15 and 40 minutes.
    assert_eq!(column(&text, "u00", "match_id"), ["m1", "m2", "m3", "m4"]);
    assert_eq!(
        column(&text, "u00", "timeSinceLastMatch"),
        ["", "600", "900", "2400"]
    );
    assert_eq!(column(&text, "u00", "sessionNumber"), ["1", "1", "2", "3"]);
    assert_eq!(
        column(&text, "u00", "matchIndexInSession"),
        ["1", "2", "1", "1"]
    );
    assert_eq!(
        column(&text, "u00", "matchesPlayedSoFar"),
        ["0", "1", "2", "3"]
    );
    assert_eq!(
        column(&text, "u00", "cumKillsAtStart"),
        ["0", "2", "4", "7"]
    );
    assert_eq!(
        column(&text, "u00", "meanKillsAtStart"),
        ["0", "2", "2", "2.33333333"]
    );
    assert_eq!(
        column(&text, "u00", "sessionCumKillsAtStart"),
        ["0", "2", "0", "0"]
    );
    // Blue won m1 and m3; u00 is on blue.
    assert_eq!(column(&text, "u00", "cumWinsAtStart"), ["0", "1", "1", "2"]);
    assert_eq!(
        column(&text, "u03", "highestPrevSeasonTier"),
        ["", "", "", ""]
    );
    assert_eq!(
        column(&text, "u00", "highestPrevSeasonTier"),
        ["3", "3", "3", "3"]
    );

    let cols: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("features_columns.json")).unwrap(),
    )
    .unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let names: Vec<&str> = cols["columns"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(header, names);
}

#[test]
fn features_on_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.csv");
    let p = dir.path().join("p.csv");
    fs::write(
        &m,
        "match_id,start_time,duration,patch,queue_type,map_mode,season_id,winning_team\n",
    )
    .unwrap();
    fs::write(
        &p,
        "match_id,user_id,team,champion,role,lane,kills,deaths,assists,gold_earned,gold_spent,champ_level,highest_prev_season_tier\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let code = run(&[
        "features",
        "--matches",
        m.to_str().unwrap(),
        "--player-matches",
        p.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        fs::read_to_string(out.join("features.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
}

#[test]
fn analyze_matches_golden_ate_series() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_with(&["analyze"], &fixture_args(dir.path())), EXIT_OK);
    assert_eq!(
        fs::read_to_string(dir.path().join("ate_series.csv")).unwrap(),
        fs::read_to_string(data("fixture/golden_ate_series.csv")).unwrap()
    );
    // No trees fitted: empty reports, headers only.
    assert_eq!(
        fs::read_to_string(dir.path().join("feature_importance.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("effect_gaps.csv"))
            .unwrap()
            .lines()
            .count(),
        1
    );
    let heat = fs::read_to_string(dir.path().join("heatmap_meanKillsAtStart.csv")).unwrap();
    assert!(heat.starts_with("bin,bin_label,bin_share,column,count,value,se,p\n"));
    let counts: usize = csv::Reader::from_reader(heat.as_bytes())
        .records()
        .map(|r| r.unwrap()[4].parse::<usize>().unwrap())
        .sum();
    assert_eq!(counts, 40);
    assert!(dir.path().join("reports_manifest.json").exists());
}

#[test]
fn fit_skips_unfittable_frames() {
    let dir = tempfile::tempdir().unwrap();
    let common = fixture_args(dir.path());
    // Two rows per arm: below min_arm_count.
    assert_eq!(
        run_with(&["fit", "--scope", "player:Thresh:4.6-4.7"], &common),
        EXIT_OK
    );
    assert_eq!(
        manifest(dir.path(), "fit")["skipped_frames"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
    // No matches on 4.8.
    assert_eq!(
        run_with(&["fit", "--scope", "team:4.7-4.8"], &common),
        EXIT_OK
    );
    let m = manifest(dir.path(), "fit");
    assert!(m["skipped_frames"][0]["reason"]
        .as_str()
        .unwrap()
        .contains("4.8"));
    assert_eq!(
        run_with(&["fit", "--scope", "player:Nobody:4.6-4.7"], &common),
        EXIT_USAGE
    );
}

#[test]
fn synth_null_and_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("null.json");
    fs::write(
        &spec,
        serde_json::to_string(&SyntheticSpec::null(4000, 3, 11)).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        run(&[
            "synth",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let sidecar: FrameSidecar =
        serde_json::from_str(&fs::read_to_string(out.join("synth/frame.json")).unwrap()).unwrap();
    let frame = read_frame_csv(
        fs::File::open(out.join("synth/frame.csv")).unwrap(),
        &sidecar,
    )
    .unwrap();
    assert_eq!(frame.fingerprint(), sidecar.frame_sha256);
    let (t, c): (Vec<f64>, Vec<f64>) = {
        let mut t = Vec::new();
        let mut c = Vec::new();
        for (y, w) in frame.outcomes().iter().zip(frame.treatment()) {
            if *w {
                t.push(*y)
            } else {
                c.push(*y)
            }
        }
        (t, c)
    };
    let e = estimate_effect(&t, &c).unwrap();
    assert!(e.tau.abs() < 4.0 * e.se, "{e:?}");

    fs::write(&spec, r#"{"n_units": 10, "n_continuous": 1, "baseline": {"constant": 0}, "effects": [], "noise_sigma": -1, "seed": 1}"#).unwrap();
    assert_eq!(
        run(&[
            "synth",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_USAGE
    );
    assert_eq!(manifest(&out, "synth")["exit_code"], 2);
}

/// Hashes frozen from the first run of the seeded two-box spec; a change
/// means the generator's stream layout or formatting changed.
#[test]
fn synth_two_box_golden_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("two_box.json");
    fs::write(
        &spec,
        fs::read_to_string(data("two_box_spec.json")).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        run(&[
            "synth",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        EXIT_OK
    );
    let golden: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(data("two_box_hashes.json")).unwrap()).unwrap();
    for file in ["frame.csv", "oracle.json"] {
        let got = cli::sha256_file(&out.join("synth").join(file)).unwrap();
        assert_eq!(got, golden[file].as_str().unwrap(), "{file}");
    }
}

#[test]
fn synth_then_fit_frame_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("two_box.json");
    fs::write(
        &spec,
        serde_json::to_string(&SyntheticSpec::two_box(4000, 3, 1.0, -1.0, 0.5, 3)).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(
        run(&["synth", "--spec", spec.to_str().unwrap(), "--out", o]),
        EXIT_OK
    );
    let frame = out.join("synth/frame.csv");
    assert_eq!(
        run(&[
            "fit",
            "--scope",
            &format!("frame:{}", frame.display()),
            "--out",
            o
        ]),
        EXIT_OK
    );
    let tree = fs::read_to_string(out.join("trees/frame_frame.json")).unwrap();
    let tree = patchtree::CausalTree::from_json(&tree).unwrap();
    assert_eq!(tree.root.split.as_ref().unwrap().feature, "x1");
    assert!(fs::read_to_string(out.join("trees/frame_frame.dot"))
        .unwrap()
        .starts_with("digraph causal_tree {"));

    assert_eq!(run(&["report", "--alpha", "0.05", "--out", o]), EXIT_OK);
    assert!(out.join("report/frame_frame.trimmed.dot").exists());
    let summary = fs::read_to_string(out.join("report/summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().starts_with("frame_frame,"));
    assert_eq!(run(&["report", "--alpha", "0", "--out", o]), EXIT_USAGE);
}

fn small_telemetry(dir: &Path) {
    let spec = TelemetrySpec {
        n_users: 120,
        matches_per_patch: 160,
        patches: (6..=8).map(|m| PatchVersion::new(4, m)).collect(),
        n_champions: 10,
        seed: 21,
        ..TelemetrySpec::default()
    };
    simulate_telemetry(&spec).write_csvs(dir).unwrap();
}

fn telemetry_args(tel: &Path, out: &Path, threads: &str) -> Vec<String> {
    [
        "--matches",
        tel.join("matches.csv").to_str().unwrap(),
        "--player-matches",
        tel.join("player_matches.csv").to_str().unwrap(),
        "--catalog",
        tel.join("champions.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--threads",
        threads,
        "--seed",
        "3",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

#[test]
fn batch_tree_count_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let tel = dir.path().join("tel");
    small_telemetry(&tel);
    let out = dir.path().join("out");
    let common = telemetry_args(&tel, &out, "4");
    assert_eq!(run_with(&["fit", "--scope", "batch"], &common), EXIT_OK);
    let m = manifest(&out, "fit");
    let trees = m["row_counts"]["trees"].as_u64().unwrap();
    assert!((1..=10 * 2).contains(&trees), "{trees}");
    let jsons = fs::read_dir(out.join("trees"))
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .path()
                .extension()
                .is_some_and(|x| x == "json")
        })
        .count();
    assert_eq!(jsons as u64, trees);
}

#[test]
fn binary_runs() {
    let dir = tempfile::tempdir().unwrap();
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_patchtree"))
        .args(fixture_args(dir.path()))
        .arg("ingest")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_patchtree"))
        .arg("--help")
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
}
