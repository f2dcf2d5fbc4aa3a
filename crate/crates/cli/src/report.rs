//! Figure data for the whole protocol, written into one directory with a
//! manifest listing every file and the parameters behind it.

use std::io::Write;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

use seqtpe::correlate::{mean_photon_curve, write_mu_csv, write_quadrant_csv, MuPoint, Quadrant, TagRun};
use seqtpe::montecarlo::{expected_emission_ratio, run_experiment, PulseScheme, SimulationRun};
use seqtpe::protocol::{analytic_g2, CascadeParams};
use seqtpe::{Energy, TimeBin};

use crate::commands::{fit_t0, grid, output, quadrant_rows, resolve_channels, write_analytic_rows};
use crate::config::RunConfig;
use crate::error::CliError;

const FIG2D_POINTS: usize = 12;
const FIG2D_RANGE_PS: (f64, f64) = (15.0, 2000.0);
const FIG4_DELAYS_PS: [f64; 4] = [50.0, 100.0, 200.0, 400.0];
const CURVE_END_PS: f64 = 1000.0;

struct Manifest {
    params: Table,
    files: Table,
}

impl Manifest {
    fn add(&mut self, name: &str, description: &str, columns: &str, extra: Table) {
        let mut entry = Table::new();
        entry.insert("description".into(), description.into());
        entry.insert("columns".into(), columns.into());
        entry.extend(extra);
        entry.insert("parameters".into(), Value::Table(self.params.clone()));
        self.files.insert(name.into(), Value::Table(entry));
    }

    fn write(self, path: &Path) -> Result<(), CliError> {
        let mut root = Table::new();
        root.insert("files".into(), Value::Table(self.files));
        let text = toml::to_string(&root).map_err(CliError::data)?;
        let mut out = output(Some(path))?;
        out.write_all(text.as_bytes())?;
        out.flush()?;
        Ok(())
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn table<const N: usize>(entries: [(&str, Value); N]) -> Table {
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Geometric grid between `lo` and `hi` rounded to 0.01 ps.
fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            (x * 100.0).round() / 100.0
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("report"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut manifest = Manifest {
        params: cfg.echo(),
        files: Table::new(),
    };

    populations(cfg, &dir, &mut manifest)?;
    let reference = simulate(cfg, cfg.dt, PulseScheme::Single, cfg.seed)?;
    mean_photon(cfg, &dir, &reference, &mut manifest)?;
    quadrants(cfg, &dir, &reference, &mut manifest)?;
    hom_curves(cfg, &dir, &mut manifest)?;

    manifest.write(&dir.join("manifest.toml"))
}

fn simulate(cfg: &RunConfig, dt: f64, scheme: PulseScheme, seed: u64) -> Result<SimulationRun, CliError> {
    let exp = cfg.experiment(dt, scheme, seed)?;
    Ok(run_experiment(&exp, cfg.workers())?)
}

fn populations(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let tau_x = cfg.tau_b / 2.0;
    let params = grid(CURVE_END_PS, 2.0)?
        .into_iter()
        .map(|dt| CascadeParams::ideal(cfg.tau_b, tau_x, dt))
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = output(Some(&dir.join("fig1b_populations.csv")))?;
    write_analytic_rows(&params, &mut out)?;
    out.flush()?;
    manifest.add(
        "fig1b_populations.csv",
        "closed-form branch weights with the exciton decaying twice as fast as the biexciton",
        "delta_t_ps,alpha_sq,beta_sq,gamma_sq,mu,g2_<mode>_<mode>",
        table([
            ("tau_x_ps", Value::Float(tau_x)),
            ("prep_fidelity", Value::Float(1.0)),
            ("delta_t_step_ps", Value::Float(2.0)),
            ("delta_t_end_ps", Value::Float(CURVE_END_PS)),
        ]),
    );
    Ok(())
}

fn mean_photon(
    cfg: &RunConfig,
    dir: &Path,
    reference: &SimulationRun,
    manifest: &mut Manifest,
) -> Result<(), CliError> {
    let map = reference.channel_map();
    let b = resolve_channels("B", &map)?;
    let x = resolve_channels("X", &map)?;
    let lo = FIG2D_RANGE_PS.0.max(cfg.min_dt);
    let hi = FIG2D_RANGE_PS.1.min(cfg.rep_period as f64 / 2.0);
    if lo >= hi {
        return Err(CliError::Usage(format!(
            "no room for a delay sweep between {lo} and {hi} ps"
        )));
    }
    let delays = log_grid(lo, hi, FIG2D_POINTS);
    let one = TagRun {
        tags: &reference.tags,
        n_cycles: reference.n_cycles(),
    };
    let mut points: Vec<MuPoint> = Vec::with_capacity(delays.len());
    let mut seeds = Vec::with_capacity(delays.len());
    for (i, &dt) in delays.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(1 + i as u64);
        let run = simulate(cfg, dt, PulseScheme::Double, seed)?;
        let two = TagRun {
            tags: &run.tags,
            n_cycles: run.n_cycles(),
        };
        points.extend(mean_photon_curve(&[(dt, two)], one, &b, &x)?);
        seeds.push(Value::Integer(seed as i64));
    }

    let mut out = output(Some(&dir.join("fig2d_mu.csv")))?;
    write_mu_csv(&points, &mut out).map_err(CliError::data)?;
    out.flush()?;

    let exp = cfg.experiment(cfg.dt, PulseScheme::Double, cfg.seed)?;
    let mut out = output(Some(&dir.join("fig2d_mu_detail.csv")))?;
    writeln!(out, "delta_t_ps,mu_B,sigma_B,mu_X,sigma_X,mu_model,mu_ideal")?;
    for p in &points {
        let params = exp.params.with_delta_t(p.delta_t)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.delta_t,
            p.mu_b,
            p.sigma_b,
            p.mu_x,
            p.sigma_x,
            expected_emission_ratio(&params, &exp.model),
            params.coefficients().mean_photon_number()
        )?;
    }
    out.flush()?;

    let extra = table([
        ("delta_t_ps", floats(&delays)),
        ("seeds", Value::Array(seeds)),
        ("reference_seed", Value::Integer(cfg.seed as i64)),
    ]);
    manifest.add(
        "fig2d_mu.csv",
        "simulated two-pulse over single-pulse detections per energy",
        "delta_t_ps,mu_B,mu_X",
        extra.clone(),
    );
    manifest.add(
        "fig2d_mu_detail.csv",
        "the same ratios with Poisson errors, the detection-free model including preparation fidelity, and the ideal mean photon number",
        "delta_t_ps,mu_B,sigma_B,mu_X,sigma_X,mu_model,mu_ideal",
        extra,
    );
    Ok(())
}

fn quadrants(
    cfg: &RunConfig,
    dir: &Path,
    reference: &SimulationRun,
    manifest: &mut Manifest,
) -> Result<(), CliError> {
    let map = reference.channel_map();
    let b = resolve_channels("B", &map)?;
    let t0 = fit_t0(&reference.tags, &b, cfg.rep_period, cfg.bin_width)?;
    let delays: Vec<f64> = FIG4_DELAYS_PS
        .into_iter()
        .filter(|&dt| dt >= cfg.min_dt && t0 + dt < cfg.rep_period as f64)
        .collect();
    let mut rows = Vec::new();
    let mut seeds = Vec::new();
    for (i, &dt) in delays.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(100 + i as u64);
        let run = simulate(cfg, dt, PulseScheme::Double, seed)?;
        rows.extend(quadrant_rows(&run.tags, &map, cfg.rep_period, cfg.bin_width, t0, dt)?);
        seeds.push(Value::Integer(seed as i64));
    }
    let mut out = output(Some(&dir.join("fig4_quadrants.csv")))?;
    write_quadrant_csv(&rows, &mut out).map_err(CliError::data)?;
    out.flush()?;

    let mut out = output(Some(&dir.join("fig4_quadrants_analytic.csv")))?;
    writeln!(out, "delta_t_ps,pair,quadrant,g2")?;
    let bin = |q: Quadrant| match q {
        Quadrant::EE => (TimeBin::Early, TimeBin::Early),
        Quadrant::EL => (TimeBin::Early, TimeBin::Late),
        Quadrant::LE => (TimeBin::Late, TimeBin::Early),
        Quadrant::LL => (TimeBin::Late, TimeBin::Late),
    };
    for &dt in &delays {
        let p = CascadeParams::ideal(cfg.tau_b, cfg.tau_x, dt)?;
        for (pair, e1, e2) in [("B-X", Energy::B, Energy::X), ("B-B", Energy::B, Energy::B), ("X-X", Energy::X, Energy::X)] {
            for q in Quadrant::ALL {
                let (b1, b2) = bin(q);
                let g = match analytic_g2(&p, (e1, b1), (e2, b2)) {
                    Ok(g) => g.to_string(),
                    Err(_) => "NaN".into(),
                };
                writeln!(out, "{dt},{pair},{},{g}", q.label())?;
            }
        }
    }
    out.flush()?;

    let extra = table([
        ("delta_t_ps", floats(&delays)),
        ("seeds", Value::Array(seeds)),
        ("t0_ps", Value::Float(t0)),
        ("t0_source", "EMG fit of the single-pulse B arrival histogram".into()),
    ]);
    manifest.add(
        "fig4_quadrants.csv",
        "same-cycle quadrant counts normalized by the one-cycle displaced map",
        "delta_t_ps,pair,quadrant,raw,g2",
        extra.clone(),
    );
    manifest.add(
        "fig4_quadrants_analytic.csv",
        "closed-form quadrant g2 for perfect preparation and detection",
        "delta_t_ps,pair,quadrant,g2",
        extra,
    );
    Ok(())
}

fn hom_curves(cfg: &RunConfig, dir: &Path, manifest: &mut Manifest) -> Result<(), CliError> {
    let delays = grid(CURVE_END_PS, 5.0)?;
    let mut out = output(Some(&dir.join("fig5a_hom.csv")))?;
    writeln!(out, "delta_t_ps,g2_phi0,g2_phi_pi2")?;
    for &dt in &delays {
        let c = CascadeParams::ideal(cfg.tau_b, cfg.tau_x, dt)?.coefficients();
        let fmt = |phi: f64| c.hom_g2(phi).map_or_else(|_| "NaN".to_string(), |g| g.to_string());
        writeln!(out, "{dt},{},{}", fmt(0.0), fmt(std::f64::consts::FRAC_PI_2))?;
    }
    out.flush()?;
    manifest.add(
        "fig5a_hom.csv",
        "closed-form HOM g2 of two copies at phase 0 and pi/2",
        "delta_t_ps,g2_phi0,g2_phi_pi2",
        table([
            ("prep_fidelity", Value::Float(1.0)),
            ("delta_t_step_ps", Value::Float(5.0)),
            ("delta_t_end_ps", Value::Float(CURVE_END_PS)),
        ]),
    );
    Ok(())
}
