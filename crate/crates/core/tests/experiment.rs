use percolab::experiment::{emit_report, run, ExperimentConfig, Formats, RunRecord, RunResults};

const PHI_TOML: &str = r#"
kind = "phi"
d = 2
p = 1.0
seed = 3
replicates = 2
n = [6, 8]

[theta]
value = 1.0

[norm]
mesh = "axis-diagonal"
n = 8
replicates = 1

[phi]
anneal_steps = 300
certificate = true
"#;

#[test]
fn toml_to_archive_and_back() {
    let config = ExperimentConfig::from_toml(PHI_TOML).unwrap();
    let rec = run(&config).unwrap();
    let RunResults::Phi(study) = &rec.results else { panic!("wrong kind") };
    for r in &study.replicates {
        let o = r.outcome.as_ref().unwrap();
        assert_eq!(o.best.scaled(), 4.0, "n = {}", r.n);
    }

    let dir = tempfile::tempdir().unwrap();
    let paths = emit_report(std::slice::from_ref(&rec), dir.path(), Formats::default()).unwrap();
    let json = paths.iter().find(|p| p.extension().unwrap() == "json").unwrap();
    let back = RunRecord::from_json(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(back, rec);
    assert_eq!(back.config_hash, config.hash());

    let csv = std::fs::read_to_string(paths.iter().find(|p| p.extension().unwrap() == "csv").unwrap()).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("schema,config_hash,n,"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn formatting_does_not_change_the_hash() {
    let a = ExperimentConfig::from_toml(PHI_TOML).unwrap();
    let reordered = PHI_TOML.replace("seed = 3\nreplicates = 2\n", "replicates = 2\nseed   = 3\n");
    let b = ExperimentConfig::from_toml(&reordered).unwrap();
    assert_eq!(a.hash(), b.hash());
}
