//! Helpers that drive the compiled `uavdc` binary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn uavdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavdc"))
        .args(args)
        .output()
        .expect("failed to launch uavdc")
}

pub const TOY_TOML: &str = r#"
seed = 3

[map]
buildings = false

[city]
area_side = 300.0

[scenario]
num_nodes = 5

[td3]
episodes = 100
hidden_units = 32
warmup = 200
batch_size = 64

[evaluation]
realizations = 5
"#;

/// Every CSV under `dir`, keyed by its path relative to `dir`.
pub fn csv_files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.extension().is_some_and(|e| e == "csv") {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    std::fs::read(&path).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

/// Train then evaluate the toy configuration into `out`.
pub fn train_and_evaluate(config: &Path, out: &Path) -> Result<(), String> {
    let out_s = out.to_str().unwrap();
    let cfg_s = config.to_str().unwrap();
    for args in [
        vec!["train", "-c", cfg_s, "-o", out_s],
        vec!["evaluate", "-c", cfg_s, "-o", out_s],
    ] {
        let o = uavdc(&args);
        if !o.status.success() {
            return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    Ok(())
}

/// Run the toy pipeline twice in fresh directories and compare every CSV.
/// Returns the number of files compared.
pub fn determinism_check(work: &Path) -> Result<usize, String> {
    let config = work.join("toy.toml");
    std::fs::write(&config, TOY_TOML).map_err(|e| e.to_string())?;
    let (a, b) = (work.join("run_a"), work.join("run_b"));
    train_and_evaluate(&config, &a)?;
    train_and_evaluate(&config, &b)?;
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    if fa.keys().ne(fb.keys()) {
        return Err(format!("different file sets: {:?} vs {:?}", fa.keys(), fb.keys()));
    }
    for (name, bytes) in &fa {
        if fb[name] != *bytes {
            return Err(format!("{} differs between runs", name.display()));
        }
    }
    if !fa.contains_key(Path::new("training_log.csv")) || !fa.contains_key(Path::new("evaluation.csv")) {
        return Err(format!("expected outputs missing: {:?}", fa.keys()));
    }
    Ok(fa.len())
}
