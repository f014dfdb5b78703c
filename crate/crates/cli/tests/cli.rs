use std::path::Path;
use std::process::{Command, Output};

fn goalshift(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_goalshift"))
        .args(args)
        .arg("--quiet")
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

const TINY: &str = "predictor.hidden = 8\npredictor.training_episodes = 3\npredictor.episodes_per_epoch = 3\n\
                    predictor.heldout_samples = 32\nscenario.episode_length = 40\n";

#[test]
fn full_pipeline_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "train.cfg", TINY);
    let out = goalshift(
        &[
            "train-predictor",
            "--config",
            "train.cfg",
            "--seed",
            "2",
            "--out",
            "train",
        ],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let printed = String::from_utf8(out.stdout).unwrap();
    assert!(printed.lines().any(|l| l.ends_with("model.txt")));
    assert!(printed.lines().any(|l| l.ends_with("manifest.txt")));

    write(
        d,
        "evolve.cfg",
        "model = train/model.txt\nscenario.preset_name = no_ammo\nevolution.population_size = 4\n\
         evolution.generations = 2\nevolution.episodes_per_eval = 1\n",
    );
    let out = goalshift(&["evolve", "--config", "evolve.cfg", "--out", "evolve"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("evolve/best_genome.txt").exists());

    write(
        d,
        "eval.cfg",
        "model = train/model.txt\nscenario.preset_name = no_ammo\nevaluation_episodes = 3\n\
         providers = static; defensive; evolved:evolve/best_genome.txt\n",
    );
    let out = goalshift(
        &["evaluate", "--config", "eval.cfg", "--seed", "10", "--out", "eval"],
        d,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let episodes = std::fs::read_to_string(d.join("eval/episodes.csv")).unwrap();
    assert_eq!(episodes.lines().count(), 1 + 3 * 3);
    assert!(episodes.lines().nth(1).unwrap().starts_with("static,0,11,"));

    write(d, "sweep.cfg", "genome = evolve/best_genome.txt\nsweep.kills = 0:5:1\n");
    let out = goalshift(&["sweep", "--config", "sweep.cfg", "--out", "sweep"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = std::fs::read_to_string(d.join("sweep/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 41 + 21 + 6);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = goalshift(&["evolve", "--out", "x"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("model"));

    write(d, "bad.cfg", "providers = sometimes\n");
    let out = goalshift(&["evaluate", "--config", "bad.cfg", "--out", "x"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sometimes"));

    let out = goalshift(&["sweep", "--config", "missing.cfg", "--out", "x"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.cfg"));

    let out = goalshift(&["fly", "--out", "x"], d);
    assert!(!out.status.success());
}
