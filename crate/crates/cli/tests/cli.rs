use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gridplan_core::{fixtures, CostTuple, MeasureCatalog, StudyResult};

fn gridplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridplan"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    gridplan(args).status.code().unwrap()
}

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Dir(tempfile::tempdir().unwrap())
    }

    fn path(&self, p: &str) -> String {
        self.0.path().join(p).display().to_string()
    }

    fn fixture(&self, name: &str) -> PathBuf {
        let out = self.path(name);
        assert_eq!(code(&["fixture", name, "--out", &out]), 0);
        PathBuf::from(out)
    }
}

fn s(p: &Path, file: &str) -> String {
    p.join(file).display().to_string()
}

#[test]
fn validate_exit_codes() {
    let d = Dir::new();
    let intro = d.fixture("intro");
    assert_eq!(
        code(&["validate", "--network", &s(&intro, "network_without_pv.json")]),
        0
    );
    let out = gridplan(&[
        "validate",
        "--network",
        &s(&intro, "network.json"),
        "--cases",
        &s(&intro, "cases.json"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("level 1"));
    assert_eq!(code(&["validate", "--network", &d.path("missing.json")]), 2);
    std::fs::write(d.path("broken.json"), "{").unwrap();
    let out = gridplan(&["validate", "--network", &d.path("broken.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn exhaustive_plan_on_the_intro_ring() {
    let d = Dir::new();
    let intro = d.fixture("intro");
    let out = d.path("plan");
    let args = [
        "plan",
        "--network",
        &s(&intro, "network.json"),
        "--rules",
        &s(&intro, "rules.json"),
        "--algorithm",
        "exhaustive",
        "--out",
        &out,
    ];
    assert_eq!(code(&args), 0);
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("solution.json")).unwrap()).unwrap();
    let ids: Vec<&str> = plan["measures"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["OPEN_SWITCH_4", "REPLACE_LINE_6"]);
    assert_eq!(plan["total_cost"], 4.0);
    let cost: CostTuple =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("cost.json")).unwrap()).unwrap();
    assert_eq!(cost, CostTuple::new(0, 4.0));
}

#[test]
fn same_seed_gives_identical_files() {
    let d = Dir::new();
    let intro = d.fixture("intro");
    let run = |out: &str| {
        let args = [
            "plan",
            "--network",
            &s(&intro, "network.json"),
            "--rules",
            &s(&intro, "rules.json"),
            "--algorithm",
            "ils",
            "--strength",
            "4",
            "--seed",
            "11",
            "--budget",
            "800",
            "--out",
            out,
        ];
        assert_eq!(code(&args), 0);
    };
    run(&d.path("a"));
    run(&d.path("b"));
    for f in ["solution.json", "cost.json", "trace.jsonl"] {
        let a = std::fs::read(Path::new(&d.path("a")).join(f)).unwrap();
        let b = std::fs::read(Path::new(&d.path("b")).join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    let trace = std::fs::read_to_string(Path::new(&d.path("a")).join("trace.jsonl")).unwrap();
    assert!(trace.contains("perturbation"));
}

#[test]
fn fixed_catalog_plan_and_replay() {
    let d = Dir::new();
    let replace = d.fixture("intro-replace");
    let out = d.path("plan");
    let args = [
        "plan",
        "--network",
        &s(&replace, "network.json"),
        "--catalog",
        &s(&replace, "catalog.json"),
        "--algorithm",
        "hc",
        "--seed",
        "3",
        "--out",
        &out,
    ];
    assert_eq!(code(&args), 0);
    let replay = gridplan(&[
        "replay",
        "--manifest",
        &s(Path::new(&out), "manifest.json"),
        "--out",
        &d.path("again"),
    ]);
    assert_eq!(replay.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&replay.stdout).contains("replay identical"));
}

#[test]
fn study_with_one_sample_is_degenerate() {
    let d = Dir::new();
    let intro = d.fixture("intro");
    let out = d.path("study");
    let args = [
        "study",
        "--network",
        &s(&intro, "network_without_pv.json"),
        "--rules",
        &s(&intro, "rules.json"),
        "--scenario",
        &s(&intro, "scenario_progressive.json"),
        "--samples",
        "1",
        "--seed",
        "5",
        "--out",
        &out,
    ];
    assert_eq!(code(&args), 0);
    let results: Vec<StudyResult> =
        serde_json::from_str(&std::fs::read_to_string(Path::new(&out).join("records.json")).unwrap()).unwrap();
    assert_eq!(results.len(), 1);
    let summary = &results[0].summary;
    assert_eq!(summary.n, 1);
    assert_eq!(summary.min, summary.max);
    assert_eq!(summary.median, summary.mean);
    let csv = std::fs::read_to_string(Path::new(&out).join("summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn compare_on_a_single_measure_problem() {
    let d = Dir::new();
    let base = fixtures::intro_replace_problem();
    let catalog = MeasureCatalog::new(
        base.catalog
            .measures
            .iter()
            .filter(|m| m.id == "REPLACE_LINE_2")
            .cloned()
            .collect(),
    );
    std::fs::write(d.path("network.json"), serde_json::to_string(&base.base).unwrap()).unwrap();
    std::fs::write(d.path("catalog.json"), serde_json::to_string(&catalog).unwrap()).unwrap();
    let out = d.path("compare");
    let (network, catalog) = (d.path("network.json"), d.path("catalog.json"));
    let mut args = vec![
        "compare",
        "--network",
        &network,
        "--catalog",
        &catalog,
        "--runs",
        "4",
        "--budget",
        "50",
        "--out",
        &out,
    ];
    assert_eq!(code(&args), 0);
    let mut reader = csv::Reader::from_path(Path::new(&out).join("runs.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 12);
    let headers = reader.headers().unwrap().clone();
    let level = headers.iter().position(|h| h == "level").unwrap();
    let magnitude = headers.iter().position(|h| h == "magnitude").unwrap();
    assert!(rows
        .iter()
        .all(|r| &r[level] == "0" && r[magnitude].parse::<f64>().unwrap() == 7.0));
    assert!(Path::new(&out).join("distribution.csv").exists());

    args.splice(5..5, ["--config", "HC"]);
    assert_eq!(code(&args), 2);
}
