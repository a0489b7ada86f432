use std::process::Command;

use dspinn::geometry::{map_back, SampleCounts};
use dspinn::harness::{
    emit_artifacts, evaluate, evaluate_checkpoint, sweep_d, train, training_domain, Checkpoint,
    Profile, RunStatus, SweepStatus, TrainConfig, GRID_SIDE,
};
use dspinn::loss::{exact_field, zero_field, Method};
use dspinn::problems::{builtin, ProblemName};

fn tiny(problem: ProblemName, method: Method) -> TrainConfig {
    let mut cfg = TrainConfig::new(problem, method, Profile::Ci);
    cfg.layer_sizes = vec![2, 8, 8, 1];
    cfg.samples = SampleCounts {
        n_f: 40,
        n_b: 8,
        n_gamma: 20,
    };
    cfg.adam.iterations = 30;
    cfg.lbfgs.max_iterations = 20;
    cfg.log_every = 10;
    cfg
}

fn without_clock(m: &dspinn::harness::Metrics) -> serde_json::Value {
    let mut v = serde_json::to_value(m).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

#[test]
fn same_seed_gives_identical_runs() {
    let cfg = tiny(ProblemName::Ex1, Method::Nds);
    let a = train(&cfg).unwrap();
    let b = train(&cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(without_clock(&a.metrics), without_clock(&b.metrics));
    assert_eq!(a.metrics.status, RunStatus::Completed);

    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(train(&other).unwrap().params, a.params);
}

#[test]
fn artifacts_are_written_and_parse() {
    let outcome = train(&tiny(ProblemName::Ex3, Method::Ds)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_artifacts(&outcome.metrics, outcome.evaluation.as_ref(), dir.path()).unwrap();

    let text = std::fs::read_to_string(dir.path().join("metrics.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(json["rel_l2"].as_f64().unwrap() > 0.0);
    assert_eq!(json["status"], "completed");
    assert!(!json["loss_history"].as_array().unwrap().is_empty());

    let mut rdr = csv::Reader::from_path(dir.path().join("prediction.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["x", "y", "u_pred", "u_exact", "abs_err"]
    );
    assert_eq!(rdr.records().count(), GRID_SIDE * GRID_SIDE);

    let ppm = std::fs::read(dir.path().join("error_heatmap.ppm")).unwrap();
    let header = format!("P6\n{GRID_SIDE} {GRID_SIDE}\n255\n");
    assert!(ppm.starts_with(header.as_bytes()));
    assert_eq!(ppm.len(), header.len() + 3 * GRID_SIDE * GRID_SIDE);
}

#[test]
fn exact_and_zero_fields_on_test_grid() {
    for problem in ProblemName::ALL {
        let spec = builtin(problem);
        let dom = spec.separated_domain(spec.default_d).unwrap();
        let eval = evaluate(&exact_field(&spec, &dom), &spec, &dom).unwrap();
        assert!(eval.rel_l2 < 1e-12, "{problem}: {}", eval.rel_l2);
        // every queried point lies in a shifted subdomain
        for (q, row) in eval.queried.iter().zip(&eval.grid) {
            let x = map_back(*q, &dom).unwrap();
            assert!((x[0] - row.x).abs() < 1e-12 && (x[1] - row.y).abs() < 1e-12);
        }
    }
    let spec = builtin(ProblemName::Ex1);
    let eval = evaluate(&zero_field(), &spec, &spec.domain).unwrap();
    assert!((eval.rel_l2 - 1.0).abs() < 1e-15);
    assert_eq!(
        eval.abs_err_range().0,
        eval.grid
            .iter()
            .map(|r| r.abs_err)
            .fold(f64::INFINITY, f64::min)
    );
}

#[test]
fn zero_error_heatmap_is_uniform() {
    let spec = builtin(ProblemName::Ex4);
    let eval = evaluate(&exact_field(&spec, &spec.domain), &spec, &spec.domain).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.ppm");
    dspinn::harness::write_error_heatmap(&eval.grid, GRID_SIDE, (0.0, 0.0), &path).unwrap();
    let ppm = std::fs::read(&path).unwrap();
    let pixels = &ppm[ppm.len() - 3 * GRID_SIDE * GRID_SIDE..];
    assert!(pixels.chunks(3).all(|p| p == &pixels[..3]));
}

#[test]
fn std_ignores_separation_distance() {
    let spec = builtin(ProblemName::Ex1);
    let (dom, d) = training_domain(&spec, Method::Std, Some(0.5)).unwrap();
    assert_eq!(d, None);
    assert_eq!(dom.shifted_extent(), spec.domain.extent);
    let (_, d) = training_domain(&spec, Method::Nds, None).unwrap();
    assert_eq!(d, Some(spec.default_d));
}

#[test]
fn sweep_flags_overlapping_distance_and_single_repeat_has_zero_spread() {
    let base = tiny(ProblemName::Ex4, Method::Ds);
    let dir = tempfile::tempdir().unwrap();
    let rows = sweep_d(&base, &[3.0, 3.5], 1, Some(dir.path())).unwrap();
    assert_eq!(rows[0].status, SweepStatus::Invalid);
    assert_eq!(rows[0].n_runs, 0);
    assert!(!dir.path().join("d_3").exists());
    assert_eq!(rows[1].status, SweepStatus::Ok);
    assert_eq!(rows[1].std_rel_l2, Some(0.0));
    assert!(dir.path().join("d_3.5/run_0/metrics.json").exists());
    assert!(sweep_d(&base, &[3.5], 0, None).is_err());
}

#[test]
fn checkpoint_round_trip_reproduces_evaluation() {
    let outcome = train(&tiny(ProblemName::Ex5, Method::Nds)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("checkpoint.json");
    outcome.checkpoint().save(&path).unwrap();
    let ck = Checkpoint::load(&path).unwrap();
    assert_eq!(ck.network().unwrap(), outcome.params);
    let (metrics, eval) = evaluate_checkpoint(&ck).unwrap();
    assert_eq!(Some(eval.rel_l2), outcome.metrics.rel_l2);
    assert_eq!(metrics.rel_l2, outcome.metrics.rel_l2);
}

#[test]
fn config_file_overrides_profile_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(
        &path,
        "problem = \"ex3\"\nmethod = \"ds\"\nseed = 11\n[adam]\niterations = 7\n",
    )
    .unwrap();
    let cfg = TrainConfig::load(&path, Profile::Ci).unwrap();
    let defaults = TrainConfig::new(ProblemName::Ex3, Method::Ds, Profile::Ci);
    assert_eq!(cfg.seed, 11);
    assert_eq!(cfg.adam.iterations, 7);
    assert_eq!(cfg.adam.learning_rate, defaults.adam.learning_rate);
    assert_eq!(cfg.samples, defaults.samples);

    std::fs::write(&path, "problem = \"ex3\"\nmethod = \"ds\"\nbogus = 1\n").unwrap();
    assert!(TrainConfig::load(&path, Profile::Ci).is_err());
}

#[test]
fn smooth_problem_trains_to_small_error() {
    let mut cfg = TrainConfig::new(ProblemName::SmoothSanity, Method::Std, Profile::Ci);
    cfg.layer_sizes = vec![2, 16, 16, 1];
    cfg.samples = SampleCounts {
        n_f: 200,
        n_b: 30,
        n_gamma: 50,
    };
    cfg.adam.iterations = 500;
    cfg.lbfgs.max_iterations = 5000;
    let outcome = train(&cfg).unwrap();
    let err = outcome.metrics.rel_l2.unwrap();
    assert!(err <= 1e-3, "relative L2 {err}");
}

#[test]
fn cli_train_then_eval() {
    let bin = env!("CARGO_BIN_EXE_dspinn");
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "problem = \"ex1\"\nmethod = \"ds\"\nlayer_sizes = [2, 6, 1]\n\
         [samples]\nn_f = 20\nn_b = 4\nn_gamma = 10\n\
         [adam]\niterations = 50\n[lbfgs]\nmax_iterations = 5\n",
    )
    .unwrap();
    let out = dir.path().join("run");
    let status = Command::new(bin)
        .args([
            "train",
            "--profile",
            "ci",
            "--adam-iterations",
            "10",
            "--export-training-set",
        ])
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    for f in [
        "metrics.json",
        "prediction.csv",
        "error_heatmap.ppm",
        "checkpoint.json",
        "training_set.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    // the flag wins over the file
    assert_eq!(metrics["config"]["adam"]["iterations"], 10);

    let eval_out = dir.path().join("eval");
    let status = Command::new(bin)
        .arg("eval")
        .arg("--checkpoint")
        .arg(out.join("checkpoint.json"))
        .arg("--out")
        .arg(&eval_out)
        .status()
        .unwrap();
    assert!(status.success());
    let again: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval_out.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(again["rel_l2"], metrics["rel_l2"]);

    let bad = Command::new(bin)
        .args(["train", "--problem", "ex9", "--method", "ds"])
        .arg("--out")
        .arg(dir.path().join("bad"))
        .status()
        .unwrap();
    assert_eq!(bad.code(), Some(2));
}
