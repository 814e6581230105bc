use std::fs;

use spikerl::analysis::{total_nj, NetKind};
use spikerl::commands::{cmd_drift, cmd_energy, cmd_train, load_checkpoint, measure_energy, run_drift, DriftInputs};
use spikerl::config::RunConfig;
use spikerl::nn::Tensor;
use spikerl::rl::{Actor, ActorKind, TargetKind};
use spikerl::seeding;
use spikerl::Error;

fn tiny(extra: &str) -> RunConfig {
    let text = format!(
        "total_steps = 300\neval_interval = 0\neval_episodes = 2\n{extra}\n[san]\nhidden = [8]\n[td3]\ncritic_hidden = [8]\nwarmup_steps = 100\nbatch_size = 16\n[drift]\nsteps = 30\ncollect_steps = 200\nann_fit_iters = 50\n[energy]\nepisodes = 1\n"
    );
    RunConfig::from_toml_str(&text).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

#[test]
fn short_run_below_warmup_still_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("");
    cfg.total_steps = 50;
    cfg.out_dir = dir.path().to_path_buf();
    let out = cmd_train(&cfg).unwrap();
    assert!(out.trainer.metrics().is_empty());
    assert_eq!(fs::read_to_string(dir.path().join("metrics.csv")).unwrap().lines().count(), 1);
    let eval = fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    assert_eq!(eval.lines().count(), 1 + cfg.eval_episodes);
}

#[test]
fn every_target_kind_logs_its_gap() {
    for (actor, target) in [("san", "proxy"), ("san", "snn_polyak"), ("ann", "ann_polyak")] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny(&format!("actor = \"{actor}\""));
        cfg.td3.target_kind = match target {
            "proxy" => TargetKind::Proxy,
            "snn_polyak" => TargetKind::SnnPolyak,
            _ => TargetKind::AnnPolyak,
        };
        cfg.out_dir = dir.path().to_path_buf();
        cmd_train(&cfg).unwrap();
        let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        let gaps = column(&csv, "proxy_gap");
        let maintained: Vec<_> = gaps.iter().filter(|g| !g.is_empty()).collect();
        assert_eq!(maintained.len(), gaps.len() / cfg.td3.policy_delay, "{actor}/{target}");
        assert!(maintained.iter().all(|g| g.parse::<f64>().unwrap() >= 0.0));
        let spikes = column(&csv, "spike_rate");
        assert_eq!(spikes.iter().all(|s| s.is_empty()), actor == "ann");
    }
}

#[test]
fn resolved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("seed = 42");
    cfg.out_dir = dir.path().to_path_buf();
    cmd_train(&cfg).unwrap();
    let echoed = RunConfig::from_file(&dir.path().join("resolved-config.toml")).unwrap();
    assert_eq!(echoed.to_toml().unwrap(), cfg.to_toml().unwrap());
}

#[test]
fn zero_tau_polyak_drift_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("");
    cfg.out_dir = dir.path().to_path_buf();
    cfg.td3.tau = 0.0;
    cfg.drift.kinds = vec![TargetKind::AnnPolyak];
    let summary = cmd_drift(&cfg, None, true).unwrap();
    assert_eq!(summary.kinds["ann_polyak"].max_step_change, 0.0);
    let csv = fs::read_to_string(dir.path().join("drift_ann_polyak.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).map(|l| l.split_once(',').unwrap().1).collect();
    assert_eq!(rows.len(), cfg.drift.steps + 1);
    assert!(rows.iter().all(|r| *r == rows[0]));
    assert!(!dir.path().join("drift_proxy.csv").exists());
}

#[test]
fn drift_fans_out_over_all_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("");
    cfg.out_dir = dir.path().to_path_buf();
    let summary = cmd_drift(&cfg, None, true).unwrap();
    assert_eq!(summary.kinds.len(), 3);
    for kind in ["ann_polyak", "snn_polyak", "proxy"] {
        let csv = fs::read_to_string(dir.path().join(format!("drift_{kind}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), cfg.drift.steps + 2);
    }
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("drift_summary.json")).unwrap()).unwrap();
    assert_eq!(json["kinds"].as_object().unwrap().len(), 3);
    assert!(matches!(cmd_drift(&cfg, None, false), Err(Error::Config(_))));
}

#[test]
fn drift_rejects_snn_polyak_on_a_continuous_actor() {
    let cfg = tiny("");
    let mut rng = seeding::stream(0, seeding::INIT);
    let online = Actor::<f64>::new(ActorKind::Ann, &cfg.san_for_env().unwrap(), &mut rng).unwrap();
    let pool = Tensor::matrix(4, 3, vec![0.1; 12]).unwrap();
    let probes = Tensor::matrix(1, 3, vec![0.1; 3]).unwrap();
    let inputs = DriftInputs { online: &online, ann_online: None, pool: &pool, probes: &probes };
    assert!(run_drift(&cfg, inputs).is_err());
}

#[test]
fn energy_reports_follow_the_actor() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("actor = \"ann\"");
    cfg.td3.target_kind = TargetKind::AnnPolyak;
    cfg.out_dir = dir.path().to_path_buf();
    cmd_train(&cfg).unwrap();
    let report = cmd_energy(&cfg, &dir.path().join("checkpoint.bin")).unwrap();
    assert_eq!(report.net_kind, NetKind::Ann);
    assert_eq!(report.sops, 0.0);
    assert_eq!(report.total_nj, total_nj(report.flops, report.sops));
    assert!(dir.path().join("energy.json").exists());

    // a silent spiking actor pays only for encoding and decoding
    let mut rng = seeding::stream(0, seeding::INIT);
    let san_cfg = cfg.san_for_env().unwrap();
    let mut san = Actor::<f64>::new(ActorKind::San, &san_cfg, &mut rng).unwrap();
    let names: Vec<String> = san.params().names().map(str::to_string).collect();
    for name in names {
        let t = san.params_mut().value_mut(&name).unwrap();
        match name.as_str() {
            "enc.mu" => t.fill(1e6),
            "enc.sigma" => t.fill(1.0),
            _ => t.fill(0.0),
        }
    }
    let silent = measure_energy(&cfg, &san).unwrap();
    assert_eq!(silent.sops, 0.0);
    assert_eq!(silent.spike_rate, Some(0.0));
    assert_eq!(silent.total_nj, total_nj(silent.flops, 0.0));
    assert!(silent.flops > 0.0);
}

#[test]
fn checkpoint_for_another_env_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny("");
    cfg.out_dir = dir.path().to_path_buf();
    cmd_train(&cfg).unwrap();
    let ckpt = dir.path().join("checkpoint.bin");
    let loaded = load_checkpoint(&cfg, &ckpt).unwrap();
    assert_eq!(loaded.actor.kind(), ActorKind::San);
    assert!(loaded.proxy.is_some());

    cfg.env = "double_integrator".into();
    assert!(matches!(load_checkpoint(&cfg, &ckpt), Err(Error::Structural(_))));
    assert!(matches!(cmd_energy(&cfg, &ckpt), Err(Error::Structural(_))));
}

#[test]
fn shipped_checkpoint_shows_spiking_target_jumps() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_file(&root.join("configs/pendulum_pt_lif_50k.toml")).unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let summary = cmd_drift(&cfg, Some(&root.join("checkpoints/pendulum_pt_lif_50k.bin")), false).unwrap();
    let k = &summary.kinds;
    assert!(k["snn_polyak"].jump_count >= 1, "{summary:?}");
    assert_eq!(k["ann_polyak"].jump_count, 0);
    assert!(k["proxy"].max_step_change <= 5.0 * k["ann_polyak"].max_step_change, "{summary:?}");
}
