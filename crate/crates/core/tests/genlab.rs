mod common;

use std::fs;

use cfelo::dataset::load_bundle;
use cfelo::genlab::gateway::{prompt_key, GatewayError, ReplayGateway, TextGateway};
use cfelo::genlab::prompt::{build_testgen_prompt, GenerationRejection};
use cfelo::genlab::{
    corruption_samples, detect_for_problem, gen_tests_for_bundle, GenOptions, GenerationRecord, GenlabError,
    MultiSolution,
};
use cfelo::judge::Origin;
use common::{bundle_copy, fixtures, snapshot};

fn opts() -> GenOptions {
    GenOptions {
        count: 5,
        ..GenOptions::default()
    }
}

#[test]
fn fixture_prompts_are_keyed_by_their_hash() {
    for name in ["c1", "c2"] {
        let bundle = load_bundle(&fixtures().join(name)).unwrap();
        for pid in bundle.problem_ids() {
            let prompt = build_testgen_prompt(&bundle.statements[&pid], 5).unwrap();
            let key = prompt_key(&prompt);
            assert!(
                fixtures().join("recordings").join(format!("{key}.json")).is_file(),
                "{name}/{pid}"
            );
            let record: GenerationRecord = serde_json::from_str(
                &fs::read_to_string(fixtures().join(name).join(format!("genlab/{pid}.json"))).unwrap(),
            )
            .unwrap();
            assert_eq!(record.prompt, prompt);
        }
    }
}

#[test]
fn replay_regenerates_identical_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let gateway = ReplayGateway::new(fixtures().join("recordings"));
    let dir = bundle_copy(tmp.path(), "c1");
    let mut bundle = load_bundle(&dir).unwrap();
    let report = gen_tests_for_bundle(&mut bundle, &gateway, &opts()).unwrap();
    assert_eq!(report.records.len(), 3);
    assert!(report.aborted.is_empty());
    assert_eq!(snapshot(&dir), snapshot(&fixtures().join("c1")));
}

#[test]
fn rejected_inputs_carry_reasons() {
    let tmp = tempfile::tempdir().unwrap();
    let gateway = ReplayGateway::new(fixtures().join("recordings"));
    let dir = bundle_copy(tmp.path(), "c1");
    let mut bundle = load_bundle(&dir).unwrap();
    let report = gen_tests_for_bundle(&mut bundle, &gateway, &opts()).unwrap();
    let a = report.records.iter().find(|r| r.problem_id == "A").unwrap();
    let reasons: Vec<&str> = a.rejected_inputs.iter().map(|r| r.reason.as_str()).collect();
    assert_eq!(reasons, ["duplicate input", "oracle runtime error: exit status 1"]);
    assert_eq!(a.parsed_count(), 6);
    let ids: Vec<&str> = bundle.tests_for("A").iter().map(|t| t.id.as_str()).collect();
    assert_eq!(ids, ["001", "002", "003", "004", "005", "006"]);
    assert!(bundle.tests_for("A")[2..].iter().all(|t| t.origin == Origin::Generated));
    assert!(bundle.tests_for("A").iter().all(|t| t.input.ends_with('\n')));
}

#[test]
fn reply_without_a_fence_keeps_only_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let gateway = ReplayGateway::new(fixtures().join("recordings"));
    let dir = bundle_copy(tmp.path(), "c2");
    let mut bundle = load_bundle(&dir).unwrap();
    let report = gen_tests_for_bundle(&mut bundle, &gateway, &opts()).unwrap();
    let b = report.records.iter().find(|r| r.problem_id == "B").unwrap();
    assert_eq!(b.rejection, Some(GenerationRejection::MissingFence));
    assert!(b.accepted_inputs.is_empty());
    assert!(bundle.tests_for("B").iter().all(|t| t.origin == Origin::Sample));
}

#[test]
fn unrecorded_prompt_is_a_gateway_error() {
    let tmp = tempfile::tempdir().unwrap();
    let gateway = ReplayGateway::new(fixtures().join("recordings"));
    let dir = bundle_copy(tmp.path(), "c1");
    let mut bundle = load_bundle(&dir).unwrap();
    let before = snapshot(&dir);
    let err = gen_tests_for_bundle(&mut bundle, &gateway, &GenOptions { count: 7, ..opts() }).unwrap_err();
    assert!(
        matches!(
            err,
            GenlabError::Gateway {
                source: GatewayError::NotRecorded { .. },
                ..
            }
        ),
        "{err}"
    );
    assert_eq!(snapshot(&dir), before);
    assert!(gateway.send("never recorded").is_err());
}

#[test]
fn detection_on_fixture_problems() {
    let bundle = load_bundle(&fixtures().join("c1")).unwrap();
    assert_eq!(detect_for_problem(&bundle, "A", 2000).unwrap(), MultiSolution::Unique);
    assert_eq!(detect_for_problem(&bundle, "B", 2000).unwrap(), MultiSolution::Unique);
    let c = detect_for_problem(&bundle, "C", 2000).unwrap();
    assert!(matches!(c, MultiSolution::Multiple(_)), "{c:?}");
}

#[test]
fn corruption_samples_of_a_fixture_answer() {
    let bundle = load_bundle(&fixtures().join("c2")).unwrap();
    let t = &bundle.tests_for("A")[0];
    let mutants = corruption_samples(&t.reference_output, &[]);
    assert!(!mutants.is_empty());
    for m in &mutants {
        assert_ne!(
            m.split_whitespace().collect::<Vec<_>>(),
            t.reference_output.split_whitespace().collect::<Vec<_>>()
        );
    }
}
