//! Campaign harness integration tests against scripted stub fuzzers and
//! stub vulnerable/patched binary pairs.

mod support;

use std::path::PathBuf;

use senf_core::harness::{
    run_campaign, run_trial, verify_crash, CampaignSpec, HarnessError, InputMode, Termination,
};
use senf_core::model::TrialOutcome;

struct Stubs {
    _dir: tempfile::TempDir,
    root: PathBuf,
    vulnerable: PathBuf,
    patched: PathBuf,
}

fn stubs() -> Stubs {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let bin = root.join("bin");
    std::fs::create_dir_all(&bin).unwrap();
    std::fs::create_dir_all(root.join("seeds")).unwrap();
    let vulnerable = support::write_script(
        &bin,
        "vulnerable",
        "input=$(cat)\ncase \"$input\" in *CRASH*) kill -SEGV $$;; esac\nexit 0\n",
    );
    let patched = support::write_script(&bin, "patched", "cat > /dev/null\nexit 0\n");
    Stubs {
        _dir: dir,
        root,
        vulnerable,
        patched,
    }
}

fn spec_for(stubs: &Stubs, fuzzer_script: &std::path::Path, campaign: &str) -> CampaignSpec {
    CampaignSpec {
        fuzzer_id: "stub".into(),
        target_id: "T01".into(),
        seed_set_id: "seeded".into(),
        launch_command: vec![fuzzer_script.display().to_string()],
        crash_glob: "{workdir}/crashes/*".into(),
        vulnerable_binary: stubs.vulnerable.clone(),
        patched_binary: stubs.patched.clone(),
        input_mode: InputMode::Stdin,
        cap_seconds: 6.0,
        trials: 1,
        parallel_slots: 1,
        liveness_poll_seconds: 0.2,
        crash_exit_codes: vec![],
        seeds_dir: stubs.root.join("seeds"),
        output_dir: stubs.root.join(campaign),
    }
}

#[test]
fn verify_crash_differential_verdicts() {
    let stubs = stubs();
    let spec = spec_for(&stubs, &stubs.patched, "verify");
    let crashing = stubs.root.join("crashing_input");
    let benign = stubs.root.join("benign_input");
    std::fs::write(&crashing, "CRASH").unwrap();
    std::fs::write(&benign, "hello").unwrap();

    // Vulnerable dies by signal, patched survives.
    assert!(verify_crash(&crashing, &spec).unwrap());
    // Neither binary crashes.
    assert!(!verify_crash(&benign, &spec).unwrap());
    // Both crash: patched must survive for a verified verdict.
    let both_crash = CampaignSpec {
        patched_binary: spec.vulnerable_binary.clone(),
        ..spec.clone()
    };
    assert!(!verify_crash(&crashing, &both_crash).unwrap());
}

#[test]
fn verify_crash_honors_exit_code_set() {
    let stubs = stubs();
    let exiter = support::write_script(&stubs.root.join("bin"), "exiter", "exit 77\n");
    let mut spec = spec_for(&stubs, &stubs.patched, "exitcodes");
    spec.vulnerable_binary = exiter;
    let input = stubs.root.join("input");
    std::fs::write(&input, "x").unwrap();
    assert!(!verify_crash(&input, &spec).unwrap());
    spec.crash_exit_codes = vec![77];
    assert!(verify_crash(&input, &spec).unwrap());
}

#[test]
fn verify_crash_file_argument_mode() {
    let stubs = stubs();
    let bin = stubs.root.join("bin");
    let vulnerable = support::write_script(
        &bin,
        "vuln_file",
        "case \"$(cat \"$1\")\" in *CRASH*) kill -SEGV $$;; esac\nexit 0\n",
    );
    let patched = support::write_script(&bin, "patched_file", "exit 0\n");
    let mut spec = spec_for(&stubs, &stubs.patched, "fileargs");
    spec.vulnerable_binary = vulnerable;
    spec.patched_binary = patched;
    spec.input_mode = InputMode::FileArgument;
    let input = stubs.root.join("input");
    std::fs::write(&input, "CRASH").unwrap();
    assert!(verify_crash(&input, &spec).unwrap());
}

#[test]
fn non_reproducing_candidates_time_out() {
    let stubs = stubs();
    let teaser = support::write_script(
        &stubs.root.join("bin"),
        "teaser",
        "mkdir -p crashes\nprintf benign > crashes/nope\nsleep 600\n",
    );
    let spec = spec_for(&stubs, &teaser, "teaser");
    let result = run_trial(&spec, 0).unwrap();
    assert_eq!(result.termination, Termination::Timeout);
    assert_eq!(result.record.outcome, TrialOutcome::NotFound);
    assert!(result.verified_input.is_none());
    let log = std::fs::read_to_string(spec.output_dir.join("logs/trial_0.log")).unwrap();
    assert!(log.contains("candidate"));
    assert!(log.contains("rejected"));
    assert!(log.contains("stop: timeout"));
}

#[test]
fn finished_trial_index_is_not_overwritten() {
    let stubs = stubs();
    let quick = support::write_script(&stubs.root.join("bin"), "quick", "sleep 600\n");
    let mut spec = spec_for(&stubs, &quick, "collision");
    spec.cap_seconds = 0.4;
    run_trial(&spec, 0).unwrap();
    assert!(matches!(
        run_trial(&spec, 0),
        Err(HarnessError::WorkdirCollision(_))
    ));
}

#[test]
fn seeds_placeholder_reaches_the_fuzzer() {
    let stubs = stubs();
    std::fs::write(stubs.root.join("seeds/seed_0"), "CRASH").unwrap();
    // Copies a seed as its "crash" immediately; the harness should verify it.
    let copier = support::write_script(
        &stubs.root.join("bin"),
        "copier",
        "mkdir -p crashes\ncp \"$1\"/seed_0 crashes/from_seed\nsleep 600\n",
    );
    let mut spec = spec_for(&stubs, &copier, "seeds");
    spec.launch_command = vec![copier.display().to_string(), "{seeds}".into()];
    let result = run_trial(&spec, 0).unwrap();
    assert_eq!(result.termination, Termination::Found);
    assert!(result.record.outcome.is_found());
}

#[test]
fn schedule_independence_of_outcomes() {
    // Deterministic stubs: trials behave identically whatever the slot
    // count, so the outcome sets must match (timing fields aside).
    let collect = |slots: u32, name: &str| -> Vec<(u32, Termination, u32)> {
        let stubs = stubs();
        let finder = support::write_script(
            &stubs.root.join("bin"),
            "finder",
            "mkdir -p crashes\nprintf CRASH > crashes/candidate\nsleep 600\n",
        );
        let mut spec = spec_for(&stubs, &finder, name);
        spec.trials = 4;
        spec.parallel_slots = slots;
        spec.cap_seconds = 10.0;
        let report = run_campaign(&spec).unwrap();
        report
            .results
            .iter()
            .map(|r| (r.record.trial_index, r.termination, r.restarts))
            .collect()
    };
    let serial = collect(1, "serial");
    let parallel = collect(4, "parallel");
    assert_eq!(serial, parallel);
    assert_eq!(serial.len(), 4);
    assert!(serial.iter().all(|(_, t, _)| *t == Termination::Found));
}

#[test]
fn campaign_isolates_failing_trials() {
    // Trial teardown: fuzzer crashes for one workdir pre-created to provoke
    // a collision; the other trials still conclude and get recorded.
    let stubs = stubs();
    let finder = support::write_script(
        &stubs.root.join("bin"),
        "finder",
        "mkdir -p crashes\nprintf CRASH > crashes/candidate\nsleep 600\n",
    );
    let mut spec = spec_for(&stubs, &finder, "isolation");
    spec.trials = 4;
    spec.parallel_slots = 2;
    spec.cap_seconds = 10.0;
    std::fs::create_dir_all(spec.output_dir.join("work/trial_2")).unwrap();

    let report = run_campaign(&spec).unwrap();
    assert_eq!(report.results.len(), 3);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].trial_index, 2);
    assert_eq!(report.matrix.len(), 3);
}

#[test]
fn campaign_spec_round_trips_through_json() {
    let stubs = stubs();
    let spec = spec_for(&stubs, &stubs.patched, "roundtrip");
    let path = stubs.root.join("campaign.json");
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    let loaded = CampaignSpec::load(&path).unwrap();
    assert_eq!(loaded.fuzzer_id, spec.fuzzer_id);
    assert_eq!(loaded.launch_command, spec.launch_command);
    assert_eq!(loaded.cap_seconds, spec.cap_seconds);
    assert_eq!(loaded.liveness_poll_seconds, spec.liveness_poll_seconds);
}

#[test]
fn campaign_store_matches_ingest_schema() {
    let stubs = stubs();
    let finder = support::write_script(
        &stubs.root.join("bin"),
        "finder",
        "mkdir -p crashes\nprintf CRASH > crashes/candidate\nsleep 600\n",
    );
    let mut spec = spec_for(&stubs, &finder, "store");
    spec.trials = 2;
    spec.cap_seconds = 10.0;
    let report = run_campaign(&spec).unwrap();
    let matrix = senf_core::ingest_csv(&report.store_path).unwrap();
    assert_eq!(matrix, report.matrix);
}
