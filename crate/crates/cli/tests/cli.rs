mod common;

use std::fs;

use common::{random_rows, read_numbers, read_table, run_config, small_suite, Dir};
use probgsp::graphs::{grid_2d, laplacian, split_axes};
use probgsp::opspace::{convex_family, Density};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, Normal, StandardNormal};

fn config(d: &Dir, name: &str) -> std::path::PathBuf {
    small_suite(d).into_iter().find(|(sub, _)| *sub == name).unwrap().1
}

#[test]
fn every_subcommand_writes_resolved_config() {
    let d = Dir::new();
    for (sub, cfg) in small_suite(&d) {
        let out = d.path(&format!("out_{sub}"));
        assert_eq!(run_config(sub, &cfg, &out, &["--seed", "9"]), 0, "{sub}");
        let resolved = fs::read_to_string(out.join("resolved_config.toml")).unwrap();
        let table: toml::Table = resolved.parse().unwrap();
        assert_eq!(table.get("seed").and_then(|v| v.as_integer()), Some(9), "{sub}");
        assert!(!table.contains_key("out"));
    }
}

#[test]
fn unknown_key_is_a_validation_error() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write("bad.toml", "space = \"space.toml\"\nsignal = \"signal.csv\"\nsignl = 3\n");
    assert_eq!(run_config("spectrum", &cfg, &d.path("o"), &[]), 1);
}

#[test]
fn missing_input_is_a_validation_error() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write("bad.toml", "space = \"space.toml\"\nsignal = \"nowhere.csv\"\n");
    assert_eq!(run_config("spectrum", &cfg, &d.path("o"), &[]), 1);
}

#[test]
fn stochastic_subcommand_without_seed_is_rejected() {
    let d = Dir::new();
    let cfg = config(&d, "sample");
    assert_eq!(run_config("sample", &cfg, &d.path("o"), &[]), 1);
}

#[test]
fn unreachable_condition_threshold_is_a_numerical_failure() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write(
        "strict.toml",
        "space = \"space.toml\"\nsignals = \"signals.csv\"\nj = 4\ncondition_threshold = 1.0\nmax_attempts = 10\n[band]\nlowpass = 5\n",
    );
    assert_eq!(run_config("sample", &cfg, &d.path("o"), &["--seed", "1"]), 2);
}

#[test]
fn kernel_on_measure_construction_is_rejected_before_writing() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write(
        "bc.toml",
        "x_space = \"coarse.toml\"\nz_space = \"space.toml\"\nmap = \"map.txt\"\nconstruction = \"pushforward-measure\"\n[kernel]\nkind = \"power\"\nk = 1\n",
    );
    let out = d.path("o");
    assert_eq!(run_config("basechange", &cfg, &out, &[]), 1);
    assert!(!out.join("weights.csv").exists());
}

#[test]
fn single_atom_spectrum_is_the_classical_gft() {
    let d = Dir::new();
    d.write("g.txt", "0 1\n1 2\n2 3\n3 0\n0 2 2.5\n");
    d.write("one.toml", "kind = \"discrete\"\ngraphs = [\"g.txt\"]\n");
    d.write_rows("f.csv", &[vec![1.0, -2.0, 0.5, 3.0]]);
    let cfg = d.write("s.toml", "space = \"one.toml\"\nsignal = \"f.csv\"\n");
    let out = d.path("o");
    assert_eq!(run_config("spectrum", &cfg, &out, &[]), 0);

    let g = probgsp::io::read_edge_list(&d.path("g.txt"), None).unwrap();
    let op = laplacian(&g).unwrap();
    let f = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    let want = op.eigenvectors().tr_mul(&f);
    let got = read_numbers(&out.join("coefficients.csv"));
    assert_eq!(got.len(), 1);
    for i in 0..4 {
        assert!((got[0][i] - want[i]).abs() < 1e-12);
    }
    let energy = read_table(&out.join("energy.csv"));
    let gap = energy.iter().find(|r| r["atom"] == "parseval_gap").unwrap();
    assert!(gap["weighted_energy"].parse::<f64>().unwrap() < 1e-12);
    assert!(energy.iter().any(|r| r["atom"] == "sum"));
}

#[test]
fn trivial_masks_are_identities() {
    let d = Dir::new();
    small_suite(&d);
    let input = read_numbers(&d.path("noisy.csv"));
    for (i, mask) in ["r1 = 1.0\nr2 = 1.0\ncutoff = 3", "r1 = 1.0\nr2 = 0.3\ncutoff = 9"].iter().enumerate() {
        let cfg = d.write(
            &format!("id{i}.toml"),
            &format!("space = \"coarse.toml\"\nnoisy = \"noisy.csv\"\nmode = \"distributional\"\n[mask]\n{mask}\n"),
        );
        let out = d.path(&format!("o{i}"));
        assert_eq!(run_config("denoise", &cfg, &out, &[]), 0);
        let got = read_numbers(&out.join("denoised_distributional.csv"));
        for (a, b) in got.iter().flatten().zip(input.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn filter_matrix_output_matches_library() {
    let d = Dir::new();
    let cfg = config(&d, "filter");
    let out = d.path("o");
    assert_eq!(run_config("filter", &cfg, &out, &[]), 0);
    let (h, v) = split_axes(&grid_2d(3, 3)).unwrap();
    let s = convex_family(&laplacian(&h).unwrap(), &laplacian(&v).unwrap(), 4, &Density::Uniform).unwrap();
    let k = probgsp::filters::frequency_mask(&s, 1.0, 0.2, 4).unwrap();
    let m = probgsp::filters::filter_matrix(&s, &k).unwrap();
    let got = read_numbers(&out.join("filter_matrix.csv"));
    for r in 0..9 {
        for c in 0..9 {
            assert_eq!(got[r][c], m[(r, c)]);
        }
    }
    let signals = read_numbers(&d.path("signals.csv"));
    let filtered = read_numbers(&out.join("filtered.csv"));
    for (f, g) in signals.iter().zip(&filtered) {
        let y = &m * nalgebra::DVector::from_vec(f.clone());
        assert!(y.iter().zip(g).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn sample_summary_columns_and_bounds() {
    let d = Dir::new();
    let cfg = config(&d, "sample");
    let out = d.path("o");
    assert_eq!(run_config("sample", &cfg, &out, &["--seed", "3"]), 0);
    let rows = read_table(&out.join("summary.csv"));
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let get = |k: &str| r[k].parse::<f64>().unwrap();
        assert!(get("error") <= get("bound_error") * (1.0 + 1e-9));
        assert!(get("residual") <= get("bound_residual") * (1.0 + 1e-9));
        assert_eq!(r["vertices"].split(';').count(), 5);
    }
    let rec = read_table(&out.join("recovered.csv"));
    assert!(rec[0].contains_key("v8"));
    assert_eq!(read_table(&out.join("bandpass_spectrum.csv")).len(), 9);
}

#[test]
fn pushforward_measure_manifest_reloads() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write(
        "bc.toml",
        "x_space = \"coarse.toml\"\nz_space = \"space.toml\"\nmap = \"map.txt\"\nconstruction = \"pushforward-measure\"\n",
    );
    let out = d.path("o");
    assert_eq!(run_config("basechange", &cfg, &out, &[]), 0);
    let w: Vec<f64> = read_numbers(&out.join("weights.csv")).into_iter().flatten().collect();
    assert_eq!(w.len(), 2);
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    // The written manifest is a valid space: use it for a spectrum run.
    d.write_rows("sig9.csv", &random_rows(5, 1, 9));
    let spec = d.write("spec.toml", &format!("space = \"{}\"\nsignal = \"sig9.csv\"\n", out.join("space.toml").display()));
    let out2 = d.path("o2");
    assert_eq!(run_config("spectrum", &spec, &out2, &[]), 0);
    let energy = read_table(&out2.join("energy.csv"));
    for (k, wk) in w.iter().enumerate() {
        assert_eq!(energy[k]["weight"].parse::<f64>().unwrap(), *wk);
    }
}

/// Two community graphs on the same vertices with integer class labels.
fn label_toy(d: &Dir, r: &mut ChaCha8Rng, db: f64) {
    let n = 60;
    let mut class: Vec<usize> = (0..n).map(|v| v % 3).collect();
    class.shuffle(r);
    let mut edges = |p_in: f64, p_out: f64| {
        let mut text = String::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let p = if class[u] == class[v] { p_in } else { p_out };
                if r.random_bool(p) {
                    text.push_str(&format!("{u} {v}\n"));
                }
            }
        }
        text
    };
    let actors = edges(0.5, 0.1);
    let directors = edges(0.15, 0.01);
    d.write("actors.txt", &actors);
    d.write("directors.txt", &directors);
    d.write("labels.toml", &format!("kind = \"discrete\"\ngraphs = [\"actors.txt\", \"directors.txt\"]\nn = {n}\n"));

    let f: Vec<f64> = class.iter().map(|&c| (c + 1) as f64).collect();
    let power = f.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let sigma = (power / 10f64.powf(db / 10.0)).sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let rows = 400;
    let clean = vec![f.clone(); rows];
    let noisy: Vec<Vec<f64>> = (0..rows).map(|_| f.iter().map(|x| (x + noise.sample(r)).round()).collect()).collect();
    d.write_rows("labels_clean.csv", &clean);
    d.write_rows("labels_noisy.csv", &noisy);
}

#[test]
fn distributional_denoising_beats_each_single_graph() {
    for db in [-5.0, -3.0, -1.0] {
        let d = Dir::new();
        let mut r = ChaCha8Rng::seed_from_u64(40 + (-db) as u64);
        label_toy(&d, &mut r, db);
        let cfg = d.write(
            "denoise.toml",
            "space = \"labels.toml\"\nnoisy = \"labels_noisy.csv\"\nclean = \"labels_clean.csv\"\nmode = \"all\"\nround = true\n\
             [tune]\nr1 = [0.0, 0.5, 1.0, 2.0]\nr2 = [0.0, 0.5, 1.0, 2.0]\ncutoff = [1, 2, 3, 4, 6, 10, 20, 60]\nsamples = 200\nt_grid = 9\n",
        );
        let out = d.path("o");
        assert_eq!(run_config("denoise", &cfg, &out, &[]), 0);
        let rows = read_table(&out.join("summary.csv"));
        let acc = |mode: &str| rows.iter().find(|r| r["mode"] == mode).unwrap()["accuracy"].parse::<f64>().unwrap();
        let dist = acc("distributional");
        for single in ["single_0", "single_1"] {
            assert!(dist >= acc(single), "{db} dB: distributional {dist} vs {single} {}", acc(single));
        }
        assert!(rows.iter().any(|r| r["mode"] == "mixture"));
    }
}

/// Fields obtained by heat diffusion of white noise on a Gaussian-kernel
/// graph over the points: smooth at the scale of a few neighbors.
fn diffused_fields(pts: &[Vec<f64>], count: usize, r: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = pts.len();
    let s = 0.1;
    let mut l = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        for v in 0..n {
            if u != v {
                let d2 = (pts[u][0] - pts[v][0]).powi(2) + (pts[u][1] - pts[v][1]).powi(2);
                let w = (-d2 / (2.0 * s * s)).exp();
                l[(u, v)] -= w;
                l[(u, u)] += w;
            }
        }
    }
    let e = SymmetricEigen::new(l);
    let mut ev: Vec<f64> = e.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let tau = 3.0 / ev[5];
    let heat = &e.eigenvectors * DMatrix::from_diagonal(&e.eigenvalues.map(|x| (-tau * x).exp())) * e.eigenvectors.transpose();
    (0..count)
        .map(|_| {
            let w = DVector::from_fn(n, |_, _| StandardNormal.sample(r));
            (&heat * w).iter().copied().collect()
        })
        .collect()
}

#[test]
fn learned_knn_weights_favor_small_k_for_smooth_fields() {
    let d = Dir::new();
    let mut r = ChaCha8Rng::seed_from_u64(77);
    let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![r.random::<f64>(), r.random::<f64>()]).collect();
    d.write_rows("points.csv", &pts);
    d.write_rows("fields.csv", &diffused_fields(&pts, 30, &mut r));
    let ks: Vec<usize> = (1..20).map(|i| 3 * i).collect();
    d.write("knn.toml", &format!("kind = \"knn-family\"\npoints = \"points.csv\"\nk = {ks:?}\n"));
    let cfg = d.write(
        "learn.toml",
        "space = \"knn.toml\"\nsignals = \"fields.csv\"\n[loss]\nkind = \"spectral-compaction\"\ncutoff = 5\n",
    );
    let out = d.path("o");
    assert_eq!(run_config("learn", &cfg, &out, &[]), 0);
    let w: Vec<f64> = read_numbers(&out.join("weights.csv")).into_iter().flatten().collect();
    let best = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
    assert!(ks[best] <= ks[ks.len() / 2], "argmax k = {}", ks[best]);
    let diag = read_table(&out.join("diagnostics.csv"));
    assert!(diag.iter().any(|r| r["key"] == "argmax_param"));
}

#[test]
fn infect_trials_table_has_one_row_per_trial() {
    let d = Dir::new();
    let cfg = config(&d, "infect");
    let out = d.path("o");
    assert_eq!(run_config("infect", &cfg, &out, &["--seed", "2"]), 0);
    assert_eq!(read_table(&out.join("trials.csv")).len(), 6);
    let s = read_table(&out.join("summary.csv"));
    assert_eq!(s.len(), 1);
    let lo: f64 = s[0]["gain_ci_low"].parse().unwrap();
    let hi: f64 = s[0]["gain_ci_high"].parse().unwrap();
    assert!(lo <= hi);
}

#[test]
fn selftest_passes_and_reports() {
    let d = Dir::new();
    let cfg = config(&d, "selftest");
    let out = d.path("o");
    assert_eq!(run_config("selftest", &cfg, &out, &["--seed", "4"]), 0);
    let rows = read_table(&out.join("selftest.csv"));
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["status"] == "PASS"));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let d = Dir::new();
    small_suite(&d);
    let cfg = d.write(
        "s.toml",
        "space = \"space.toml\"\nsignals = \"signals.csv\"\nj = 4\nseed = 5\n[band]\nlowpass = 5\n",
    );
    let (a, b, c) = (d.path("a"), d.path("b"), d.path("c"));
    assert_eq!(run_config("sample", &cfg, &a, &[]), 0);
    assert_eq!(run_config("sample", &cfg, &b, &["--seed", "5"]), 0);
    assert_eq!(run_config("sample", &cfg, &c, &["--seed", "6"]), 0);
    let read = |p: &std::path::Path| fs::read(p.join("summary.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(fs::read_to_string(c.join("resolved_config.toml")).unwrap().contains("seed = 6"));
}
