use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn rwcat(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rwcat")).arg("--out").arg(out).args(args).output().unwrap()
}

fn runs(out: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(out).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn results(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir.join("results"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const W: &str = "thm w (x:0..3) (h0: x + 1 = 3) : x = 2";

#[test]
fn monotonicity_suite_passes_and_writes_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rwcat(tmp.path(), &["simulate", "monotonicity", "--config", "default"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = runs(tmp.path());
    assert_eq!(dirs.len(), 1);
    let dir = &dirs[0];
    assert!(dir.file_name().unwrap().to_string_lossy().ends_with("Z-monotonicity"));
    for f in ["manifest.json", "inputs/rules.txt", "inputs/corpus.txt", "inputs/model.txt", "results/monotonicity.csv", "results/checks.jsonl"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "pass");
    let rep = rwcat(tmp.path(), &["report", dir.to_str().unwrap()]);
    assert_eq!(rep.status.code(), Some(0));
    let text = String::from_utf8_lossy(&rep.stdout);
    assert!(text.contains("PASS divisor-chain-monotone"), "{text}");
    assert_eq!(runs(tmp.path()).len(), 1);
}

#[test]
fn usage_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = rwcat(tmp.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rwcat(tmp.path(), &["simulate", "monotonicity", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--bogus-flag"));
    let o = rwcat(tmp.path(), &["simulate", "no-such-suite"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rwcat(tmp.path(), &["--jobs", "0", "simulate", "monotonicity"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--jobs"));
    assert_eq!(rwcat(tmp.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn tampered_results_fail_the_report() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rwcat(tmp.path(), &["rewrite", W, "--depth", "2"]).status.code(), Some(0));
    let dir = runs(tmp.path()).remove(0);
    std::fs::write(dir.join("results/class.csv"), "tampered\n").unwrap();
    assert_eq!(rwcat(tmp.path(), &["report", dir.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn runs_reproduce_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let args = ["ensemble", "c005", "--k", "4", "--n", "64"];
    assert_eq!(rwcat(&a, &args).status.code(), Some(0));
    assert_eq!(rwcat(&b, &args).status.code(), Some(0));
    let (ra, rb) = (runs(&a).remove(0), runs(&b).remove(0));
    assert_eq!(results(&ra), results(&rb));

    let o = rwcat(&b, &["rerun", ra.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("identical"));
    let again = runs(&b).into_iter().find(|d| *d != rb).unwrap();
    assert_eq!(results(&again), results(&ra));

    let c = tmp.path().join("c");
    assert_eq!(rwcat(&c, &["--seed", "5", "ensemble", "c005", "--k", "4", "--n", "64"]).status.code(), Some(0));
    assert_ne!(results(&runs(&c).remove(0)), results(&ra));
}

#[test]
fn prove_and_gen_corpus_runs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(rwcat(tmp.path(), &["prove", W, "--attempts", "8"]).status.code(), Some(0));
    let dir = runs(tmp.path()).remove(0);
    let p: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("results/prove.json")).unwrap()).unwrap();
    assert!(p.is_object());

    let g = tmp.path().join("g");
    assert_eq!(rwcat(&g, &["gen-corpus", "--size", "200"]).status.code(), Some(0));
    let corpus = std::fs::read_to_string(runs(&g).remove(0).join("results/corpus.txt")).unwrap();
    let shipped = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus.txt")).unwrap();
    assert_eq!(corpus, shipped);
}
