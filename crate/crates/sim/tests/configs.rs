//! The shipped configuration files.

use std::path::{Path, PathBuf};

use czdg::config::{parse_config, print_config};
use czdg::run::run;
use czdg::scenario::{Scenario, SenSetup, SenSpec};

fn config(name: &str) -> (Scenario, PathBuf) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let text = std::fs::read_to_string(&path).unwrap();
    (parse_config(&text).unwrap(), path)
}

#[test]
fn sen_configs_describe_the_sen_scenarios() {
    for (file, setup, dir) in [
        ("sen1.cfg", SenSetup::Homogeneous, "out/sen1"),
        ("sen2.cfg", SenSetup::StiffInclusions, "out/sen2"),
    ] {
        let (mut parsed, _) = config(file);
        assert_eq!(parsed.output.dir.take(), Some(PathBuf::from(dir)));
        // the files leave the reaction tag to its default, the top edge
        assert_eq!(parsed.reaction_tag(), SenSpec::default().scenario(setup).output.reaction);
        parsed.output.reaction = SenSpec::default().scenario(setup).output.reaction;
        assert_eq!(parsed, SenSpec::default().scenario(setup), "{file}");
    }
}

#[test]
fn printed_configs_parse_back() {
    for file in ["sen1.cfg", "sen2.cfg", "elastic.cfg"] {
        let (s, _) = config(file);
        assert_eq!(parse_config(&print_config(&s)).unwrap(), s, "{file}");
    }
}

#[test]
fn elastic_config_runs_linearly() {
    let (s, path) = config("elastic.cfg");
    let out = run(&s, path.parent().unwrap(), None).unwrap();
    assert!(out.error.is_none());
    assert_eq!(out.steps.len(), 4);
    let k = out.steps[0].reaction.y / out.steps[0].delta;
    for step in &out.steps {
        assert_eq!(step.iterations, 1);
        assert!(step.failed_faces.is_empty());
        assert!((step.reaction.y / step.delta - k).abs() < 1e-9 * k.abs());
    }
}
