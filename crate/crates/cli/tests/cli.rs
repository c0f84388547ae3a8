use std::path::PathBuf;
use std::process::{Command, Output};

use weightlab_core::instance::Instance;
use weightlab_core::report::{parse_markdown_counts, Status, SuiteReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weightlab"))
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn gen(name: &str, extra: &[&str]) -> PathBuf {
    let out = tmp(name);
    let mut args = vec!["gen", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn read_report(path: &PathBuf) -> SuiteReport {
    SuiteReport::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_is_deterministic() {
    let a = run(&["gen", "--blocks", "2,3", "--seed", "11", "--partner", "2"]);
    let b = run(&["gen", "--blocks", "2,3", "--seed", "11", "--partner", "2"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let inst = Instance::from_json(&String::from_utf8(a.stdout).unwrap()).unwrap();
    assert_eq!(inst.seed, 11);
    let c = run(&["gen", "--blocks", "2,3", "--seed", "12", "--partner", "2"]);
    assert_ne!(c.stdout, b.stdout);
}

#[test]
fn rerun_reproduces_report_modulo_timing() {
    let inst = gen("det.json", &["--blocks", "2,2", "--seed", "5", "--faithful"]);
    let (j1, j2) = (tmp("det1.json"), tmp("det2.json"));
    for (j, threads) in [(&j1, "1"), (&j2, "2")] {
        let o = run(&["run", inst.to_str().unwrap(), "--suite", "gns,kms,slice", "--json", j.to_str().unwrap(), "--threads", threads]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    }
    assert_eq!(read_report(&j1).without_timing(), read_report(&j2).without_timing());
}

#[test]
fn zero_block_is_usage_error() {
    assert_eq!(run(&["gen", "--blocks", "0"]).status.code(), Some(2));
    assert_eq!(run(&["gen"]).status.code(), Some(2));
}

#[test]
fn bad_instances_are_input_errors() {
    let missing = tmp("does_not_exist.json");
    assert_eq!(run(&["run", missing.to_str().unwrap()]).status.code(), Some(2));
    let garbage = tmp("garbage.json");
    std::fs::write(&garbage, "{\"schema_version\": 1, \"algebra\": ").unwrap();
    let o = run(&["run", garbage.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let future = tmp("future.json");
    let text = std::fs::read_to_string(gen("good.json", &["--blocks", "2"])).unwrap();
    std::fs::write(&future, text.replace("\"schema_version\": 1", "\"schema_version\": 99")).unwrap();
    assert_eq!(run(&["run", future.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn unknown_suite_and_bad_tol_are_usage_errors() {
    assert_eq!(run(&["run", "--suite", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["run", "--suite", "gns", "--tol", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["report", "--in", tmp("absent.json").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn tracial_m2_passes_kms() {
    let path = tmp("trace.json");
    let text = std::fs::read_to_string(gen("trace_src.json", &["--blocks", "2", "--faithful"])).unwrap();
    let mut inst = Instance::from_json(&text).unwrap();
    inst.weight = vec![vec![vec![1.0.into(), 0.0.into()], vec![0.0.into(), 1.0.into()]]];
    std::fs::write(&path, inst.to_json()).unwrap();
    let json = tmp("trace_report.json");
    let o = run(&["run", path.to_str().unwrap(), "--suite", "kms", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let r = read_report(&json);
    assert!(r.counts.total > 0 && r.counts.failed == 0);
}

#[test]
fn random_group_fails_invariance() {
    let inst = gen("random_group.json", &["--blocks", "2,2", "--faithful", "--group", "random"]);
    let json = tmp("random_group_report.json");
    let o = run(&["run", inst.to_str().unwrap(), "--suite", "kms", "--json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let r = read_report(&json);
    let rec = r.records.iter().find(|r| r.id == "kms.invariance").unwrap();
    assert_eq!(rec.status, Status::Fail);
    assert_eq!(rec.anchor, "Def sweight.def2");
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL kms.invariance"));
}

#[test]
fn report_renders_markdown_row_per_record() {
    let json = tmp("render.json");
    let md = tmp("render.md");
    let o = run(&["run", "--suite", "gns,hullx", "--json", json.to_str().unwrap(), "--md", md.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_report(&json);
    let rendered = run(&["report", "--in", json.to_str().unwrap(), "--format", "md"]);
    assert_eq!(rendered.status.code(), Some(0));
    let text = String::from_utf8(rendered.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(&md).unwrap());
    let (header, rows) = parse_markdown_counts(&text).unwrap();
    assert_eq!(header, r.counts);
    assert_eq!(rows, r.counts);
    let back = run(&["report", "--in", json.to_str().unwrap(), "--format", "json"]);
    assert_eq!(SuiteReport::from_json(&String::from_utf8(back.stdout).unwrap()).unwrap(), r);
}
