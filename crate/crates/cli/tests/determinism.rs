//! A12: every pipeline is byte-identical across two runs with the same seed
//! and config, independent of the worker thread count. `timing.json` is the
//! only file allowed to differ and is excluded from the manifest as well.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_exhjb");

fn run(subcommand: &str, config: &Path, out: &Path, threads: &str) {
    let status = Command::new(BIN)
        .args([subcommand, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("RAYON_NUM_THREADS", threads)
        .status()
        .expect("failed to launch the binary");
    assert!(status.success(), "{subcommand} exited with {status:?}");
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        if name == "timing.json" {
            continue;
        }
        files.insert(name, fs::read(entry.path()).unwrap());
    }
    files
}

fn assert_identical(subcommand: &str, config_body: &str) {
    let root = std::env::temp_dir().join(format!("exhjb-determinism-{subcommand}"));
    let _ = fs::remove_dir_all(&root);
    fs::create_dir_all(&root).unwrap();
    let config = root.join("run.toml");
    fs::write(&config, config_body).unwrap();

    let out_a = root.join("a");
    let out_b = root.join("b");
    let out_c = root.join("c");
    run(subcommand, &config, &out_a, "1");
    run(subcommand, &config, &out_b, "1");
    run(subcommand, &config, &out_c, "4");

    let a = snapshot(&out_a);
    let b = snapshot(&out_b);
    let c = snapshot(&out_c);
    assert!(!a.is_empty(), "{subcommand} produced no output files");
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "{subcommand}: file sets differ between repeat runs"
    );
    for (name, bytes) in &a {
        assert_eq!(Some(bytes), b.get(name), "{subcommand}: {name} differs between repeat runs");
        assert_eq!(Some(bytes), c.get(name), "{subcommand}: {name} differs across thread counts");
    }
    println!("A12 ({subcommand}): pass");
}

const BASE: &str = r#"
[landscape]
name = "double_well_1d"

[grid]
halfwidth = 3.0
points = 101
dim = 1

[problem]
lambda = 0.1
rho = 1.0
a = 0.5

[sde]
dt = 0.005
horizon = 30.0
burn_in = 10.0
paths = 16
thin = 5
seed = 5
box_halfwidth = 3.0
"#;

#[test]
fn a12_solve_is_deterministic() {
    assert_identical("solve", BASE);
}

#[test]
fn a12_sweep_is_deterministic() {
    let cfg = format!(
        "{BASE}\n[experiment]\nlambdas = [0.2, 0.1]\nradius = 1.5\ndoubling_control = false\n"
    );
    assert_identical("sweep", &cfg);
}

#[test]
fn a12_stationary_is_deterministic() {
    let cfg = format!("{BASE}\n[experiment]\nbins = 40\n");
    assert_identical("stationary", &cfg);
}

#[test]
fn a12_anneal_is_deterministic() {
    let cfg = format!("{BASE}\n[experiment]\ntarget_f = 0.5\n");
    assert_identical("anneal", &cfg);
}
