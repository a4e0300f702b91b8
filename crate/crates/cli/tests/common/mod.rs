#![allow(dead_code)]

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

pub struct Dir {
    tmp: TempDir,
}

impl Dir {
    pub fn new() -> Self {
        Dir { tmp: TempDir::new().unwrap() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    pub fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).unwrap();
        }
        fs::write(&p, text).unwrap();
        p
    }

    pub fn write_rows(&self, name: &str, rows: &[Vec<f64>]) -> PathBuf {
        let text: String = rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",") + "\n")
            .collect();
        self.write(name, &text)
    }
}

pub fn probgsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probgsp")).args(args).output().unwrap()
}

/// Runs `sub --config cfg --out out [extra]` and returns the exit code.
pub fn run_config(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> i32 {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    let o = probgsp(&args);
    if !o.status.success() {
        eprintln!("{sub} stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    o.status.code().unwrap_or(-1)
}

pub fn read_table(path: &Path) -> Vec<HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect()
        })
        .collect()
}

pub fn read_numbers(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

pub fn random_rows(seed: u64, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    (0..rows).map(|_| (0..cols).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

/// Inputs and configs for every subcommand on a small 3 x 3 lattice family.
pub fn small_suite(d: &Dir) -> Vec<(&'static str, PathBuf)> {
    d.write("space.toml", "kind = \"lattice-pair\"\nrows = 3\ncols = 3\nnodes = 4\n");
    d.write("coarse.toml", "kind = \"lattice-pair\"\nrows = 3\ncols = 3\nnodes = 2\n");
    d.write_rows("signal.csv", &random_rows(1, 1, 9));
    d.write_rows("signals.csv", &random_rows(2, 6, 9));
    let clean: Vec<Vec<f64>> = random_rows(3, 8, 9).iter().map(|r| r.iter().map(|v| (v * 2.0).round()).collect()).collect();
    let noisy: Vec<Vec<f64>> = clean
        .iter()
        .zip(random_rows(4, 8, 9))
        .map(|(c, e)| c.iter().zip(e).map(|(a, b)| a + b.round()).collect())
        .collect();
    d.write_rows("clean.csv", &clean);
    d.write_rows("noisy.csv", &noisy);
    d.write("map.txt", "# z -> x\n0 -> 0\n1 -> 0\n2 -> 1\n3 -> 1\n");

    let mut out = Vec::new();
    let mut add = |sub: &'static str, name: &str, text: &str| out.push((sub, d.write(name, text)));
    add("spectrum", "spectrum.toml", "space = \"space.toml\"\nsignal = \"signal.csv\"\n");
    add(
        "filter",
        "filter.toml",
        "space = \"space.toml\"\nsignals = \"signals.csv\"\nwrite_matrix = true\n[kernel]\nkind = \"mask\"\nr1 = 1.0\nr2 = 0.2\ncutoff = 4\n",
    );
    add(
        "denoise",
        "denoise.toml",
        "space = \"coarse.toml\"\nnoisy = \"noisy.csv\"\nclean = \"clean.csv\"\nmode = \"all\"\nround = true\n\
         [tune]\nr1 = [0.0, 1.0, 2.0]\nr2 = [0.0, 0.5]\ncutoff = [2, 5, 9]\nsamples = 4\nt_grid = 3\n",
    );
    add("sample", "sample.toml", "space = \"space.toml\"\nsignals = \"signals.csv\"\nj = 4\ntrials = 2\n[band]\nlowpass = 5\n");
    add(
        "learn",
        "learn.toml",
        "space = \"space.toml\"\nsignals = \"signals.csv\"\nmethod = \"mcmc\"\n[loss]\nkind = \"spectral-compaction\"\ncutoff = 3\n\
         [gibbs]\ngamma = 2.0\nchain_length = 4000\nburn_in = 500\nthinning = 5\nstep_size = 0.2\nchains = 2\n",
    );
    add(
        "basechange",
        "basechange.toml",
        "x_space = \"coarse.toml\"\nz_space = \"space.toml\"\nmap = \"map.txt\"\nconstruction = \"pushforward-filter\"\nsignals = \"signals.csv\"\n\
         [kernel]\nkind = \"power\"\nk = 1\n",
    );
    add(
        "infect",
        "infect.toml",
        "fast_fractions = [0.5]\ntrials = 6\nbootstrap_resamples = 50\n[graph]\nkind = \"lattice\"\nrows = 5\ncols = 5\n",
    );
    add("selftest", "selftest.toml", "instances = 3\n");
    out
}

/// Every file under `dir`, by relative name.
pub fn snapshot_dir(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}
