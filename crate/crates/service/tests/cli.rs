use std::process::Command;

fn tusample(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tusample")).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn sample_prints_one_record_per_label() {
    let (code, out, _) = tusample(&["sample", "--strategy", "tu", "--budget", "50", "--seed", "7", "--oracle", "gold"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 50);
    let last: serde_json::Value = serde_json::from_str(lines[49]).unwrap();
    assert_eq!(last["iteration"], 50);
    assert_eq!(last["strategy"], "tu");
}

#[test]
fn sweep_prints_a_table() {
    let (code, out, _) = tusample(&["sweep", "--lambda", "0.5"]);
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("lambda\tthreshold\tcoverage\taccuracy"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn bad_values_exit_2() {
    for args in [
        &["sample", "--strategy", "bogus"][..],
        &["sweep", "--lambda", "1.5"],
        &["sample", "--similarity", "cosine"],
        &["frobnicate"],
        &["eval", "--nope"],
        &["disambiguate", "--corpus", "somewhere.jsonl"],
    ] {
        let (code, _, err) = tusample(args);
        assert_eq!(code, 2, "{args:?}: {err}");
    }
}

#[test]
fn synth_then_disambiguate_and_eval_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(tusample(&["synth", "--out", d, "--seed", "4"]).0, 0);
    let corpus = format!("{d}/corpus.jsonl");
    let thesaurus = format!("{d}/thesaurus.tsv");
    let (code, out, _) = tusample(&["disambiguate", "--corpus", &corpus, "--thesaurus", &thesaurus]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 300);
    let (code, out, _) = tusample(&["eval", "--corpus", &corpus, "--thesaurus", &thesaurus, "--folds", "3", "--similarity", "vsm"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("fold\tLB\tRB\tNB\tVSM\tBGH"));
    assert!(!out.lines().last().unwrap().contains("NA"));
}

#[test]
fn ingest_counts_tuples() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tagged.txt");
    std::fs::write(&path, "N:a C:ga N:b C:wo V:toru N:a C:ga V:toru N:c C:ni").unwrap();
    let (code, out, err) = tusample(&["ingest", "--tagged", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("a\tga\ttoru\t2"));
    assert!(out.contains("b\two\ttoru\t1"));
    assert!(err.contains("skipped 1"));
}

#[test]
fn missing_file_is_an_error() {
    let (code, _, err) = tusample(&["ingest", "--tagged", "/nonexistent/file"]);
    assert_eq!(code, 1);
    assert!(err.contains("/nonexistent/file"));
}
