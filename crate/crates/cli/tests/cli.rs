use std::path::Path;
use std::process::{Command, Output};

use seqtpe::protocol::{coefficients, hom_g2_analytic, CascadeParams};

fn seqtpe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqtpe"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Header and rows of a CSV file as strings.
fn read_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn no_arguments_prints_usage_and_fails() {
    let out = seqtpe(&[]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_subcommand_and_flag_are_usage_errors() {
    assert_eq!(code(&seqtpe(&["frobnicate"])), 1);
    assert_eq!(code(&seqtpe(&["analytic", "--frobnicate"])), 1);
    assert_eq!(code(&seqtpe(&["analytic", "--dt", "soon"])), 1);
}

#[test]
fn analytic_row_matches_closed_forms() {
    let out = seqtpe(&["analytic", "--tau-b", "142", "--tau-x", "187", "--dt", "100"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 1);
    let r = &rows[0];
    let c = coefficients(142.0, 187.0, 100.0).unwrap();
    assert_eq!(num(&r[column(&h, "alpha_sq")]), c.alpha_sq);
    assert_eq!(num(&r[column(&h, "beta_sq")]), c.beta_sq);
    assert_eq!(num(&r[column(&h, "gamma_sq")]), c.gamma_sq);
    assert!((num(&r[column(&h, "mu")]) - 0.632).abs() < 1e-3);
    assert!((num(&r[column(&h, "g2_X_e_B_l")]) - 1.0 / c.gamma_sq).abs() < 1e-12);
    assert!((num(&r[column(&h, "g2_B_e_X_l")]) - 1.0 / (c.beta_sq + c.gamma_sq)).abs() < 1e-12);
    assert_eq!(num(&r[column(&h, "g2_B_e_B_e")]), 0.0);
    assert_eq!(h.len(), 5 + 10);
}

#[test]
fn analytic_sweep_writes_nan_where_undefined() {
    let out = seqtpe(&["analytic", "--sweep-to", "20", "--sweep-step", "10"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 3);
    // nothing is emitted at zero delay
    assert_eq!(rows[0][column(&h, "g2_B_e_X_e")], "NaN");
    assert_eq!(num(&rows[2][column(&h, "delta_t_ps")]), 20.0);
}

#[test]
fn simulate_rejects_delay_beyond_period() {
    let out = seqtpe(&["simulate", "--cycles", "10", "--dt", "12500"]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_lifetime_is_a_usage_error() {
    assert_eq!(code(&seqtpe(&["analytic", "--tau-b", "-1"])), 1);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "dt = 50.0\ntau_x = 100.0\n").unwrap();
    let c = cfg.to_str().unwrap();

    let out = seqtpe(&["analytic", "--config", c]);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(num(&rows[0][column(&h, "delta_t_ps")]), 50.0);
    let expected = coefficients(142.0, 100.0, 50.0).unwrap();
    assert_eq!(num(&rows[0][column(&h, "beta_sq")]), expected.beta_sq);

    let out = seqtpe(&["analytic", "--config", c, "--dt", "70"]);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(num(&rows[0][column(&h, "delta_t_ps")]), 70.0);
}

#[test]
fn broken_config_or_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(code(&seqtpe(&["analytic", "--config", cfg.to_str().unwrap()])), 2);

    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&seqtpe(&["analyze", "hist", missing.to_str().unwrap()])), 2);

    let garbage = dir.path().join("garbage.csv");
    std::fs::write(&garbage, "hello\n").unwrap();
    assert_eq!(code(&seqtpe(&["analyze", "hist", garbage.to_str().unwrap()])), 2);
}

fn write_uniform_tags(path: &Path) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut text = String::from("# seqtpe-tags v1\n# rep_period_ps=12500\n# n_cycles=20000\n# channel_map=1:B,3:X\nchannel,time_ps\n");
    for cycle in 0..20_000u64 {
        let t = cycle * 12_500 + rng.gen_range(0..12_500);
        text.push_str(&format!("1,{t}\n"));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn fit_without_decay_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let tags = dir.path().join("flat.csv");
    write_uniform_tags(&tags);
    let fit = dir.path().join("fit.csv");
    let hist = dir.path().join("hist.csv");
    let out = seqtpe(&[
        "analyze", "hist", tags.to_str().unwrap(), "--out", hist.to_str().unwrap(),
        "--fit-out", fit.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    // the histogram itself is still written
    let (_, rows) = read_csv(&std::fs::read_to_string(&hist).unwrap());
    assert_eq!(rows.len(), 500);
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let common = ["--ideal", "--fprep", "1", "--cycles", "100000", "--workers", "1"];
    let mut args = vec!["simulate", "--seed", "1", "--out"];
    let double = p("double.csv");
    args.push(&double);
    args.extend(common);
    assert_eq!(code(&seqtpe(&args)), 0);
    let mut args = vec!["simulate", "--single-pulse", "--seed", "2", "--out"];
    let single = p("single.csv");
    args.push(&single);
    args.extend(common);
    assert_eq!(code(&seqtpe(&args)), 0);

    let out = seqtpe(&["analyze", "mu", "--single", &single, &double]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&stdout(&out));
    let mu = CascadeParams::ideal(142.0, 187.0, 100.0).unwrap().coefficients().mean_photon_number();
    for name in ["mu_B", "mu_X"] {
        let v = num(&rows[0][column(&h, name)]);
        // about 1% statistical error at 10^5 cycles
        assert!((v - mu).abs() < 0.05, "{name} = {v}");
    }

    let out = seqtpe(&["analyze", "quadrants", &double]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 12);
    let g = column(&h, "g2");
    let le = rows.iter().find(|r| r[1] == "B-X" && r[2] == "le").unwrap();
    assert!((num(&le[g]) - 7.93).abs() < 1.5, "{le:?}");

    let out = seqtpe(&["analyze", "map", &double, "--a", "1,2", "--b", "X"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("t1_ps,t2_ps,count\n"));
}

#[test]
fn hom_synthesize_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let tags = dir.path().join("hom.csv");
    let summary = dir.path().join("summary.csv");
    let t = tags.to_str().unwrap();
    let out = seqtpe(&[
        "hom", "synthesize", "--phase", "0", "--duration", "2", "--hom-efficiency", "0.004",
        "--seed", "3", "--out", t,
    ]);
    assert_eq!(code(&out), 0);
    let out = seqtpe(&[
        "hom", "analyze", t, "--window", "0.5", "--shift", "0.25", "--summary-out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&std::fs::read_to_string(&summary).unwrap());
    let g = num(&rows[0][column(&h, "pooled_g2")]);
    let s = num(&rows[0][column(&h, "pooled_sigma")]);
    let expected = hom_g2_analytic(&CascadeParams::ideal(142.0, 187.0, 100.0).unwrap(), 0.0).unwrap();
    assert!((g - expected).abs() < 3.0 * s, "{g} ± {s} vs {expected}");
}

#[test]
fn hom_oracle_agrees_with_closed_form() {
    let out = seqtpe(&["hom", "oracle", "--points", "3"]);
    assert_eq!(code(&out), 0);
    let (h, rows) = read_csv(&stdout(&out));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!(num(&r[column(&h, "abs_diff")]) < 1e-9);
    }
}

#[test]
fn report_figures_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("rep");
    let out = seqtpe(&[
        "report", "--ideal", "--cycles", "200000", "--seed", "4", "--out", d.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let read = |name: &str| read_csv(&std::fs::read_to_string(d.join(name)).unwrap());

    // exciton twice as fast: β² peaks at exactly 1/4
    let (h, rows) = read("fig1b_populations.csv");
    let beta_max = rows.iter().map(|r| num(&r[column(&h, "beta_sq")])).fold(0.0, f64::max);
    assert!(beta_max <= 0.25 && beta_max > 0.2499, "{beta_max}");

    // with lossless detectors the ratios follow the preparation-aware model
    let (h, rows) = read("fig2d_mu_detail.csv");
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let model = num(&r[column(&h, "mu_model")]);
        for (m, s) in [("mu_B", "sigma_B"), ("mu_X", "sigma_X")] {
            let (v, sigma) = (num(&r[column(&h, m)]), num(&r[column(&h, s)]));
            assert!((v - model).abs() < 3.0 * sigma, "{m} {v} ± {sigma} vs {model}");
        }
    }

    let (h, rows) = read("fig5a_hom.csv");
    for r in rows.iter().skip(1) {
        assert!(num(&r[column(&h, "g2_phi_pi2")]) > num(&r[column(&h, "g2_phi0")]));
    }
    assert_eq!(rows[0][1], "NaN");

    let manifest: toml::Table = std::fs::read_to_string(d.join("manifest.toml")).unwrap().parse().unwrap();
    let files = manifest["files"].as_table().unwrap();
    for name in [
        "fig1b_populations.csv",
        "fig2d_mu.csv",
        "fig2d_mu_detail.csv",
        "fig4_quadrants.csv",
        "fig4_quadrants_analytic.csv",
        "fig5a_hom.csv",
    ] {
        assert!(d.join(name).exists(), "{name}");
        let params = files[name]["parameters"].as_table().unwrap();
        assert_eq!(params["seed"].as_integer(), Some(4));
        assert_eq!(params["cycles"].as_integer(), Some(200_000));
        assert_eq!(params["ideal"].as_bool(), Some(true));
    }
}
