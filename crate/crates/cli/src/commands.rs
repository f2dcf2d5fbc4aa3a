use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqtpe::correlate::{
    arrival_histogram, fit_emg, hom_windowed_g2, mean_photon_curve, quadrant_g2, two_time_map,
    write_hist_csv, write_hom_series_csv, write_map_csv, write_mu_csv, write_quadrant_csv,
    HomWindowOptions, Pairing, QuadrantRow, TagRun,
};
use seqtpe::montecarlo::{
    read_tags, run_experiment, synth_hom_stream, write_tags, ChannelLabel, ChannelMap,
    HomDetector, PhaseModel, TagFile, TimeTag,
};
use seqtpe::protocol::{
    analytic_g2, hom_g2_analytic, hom_g2_oracle, mutual_information_partitions, psi_modes,
    CascadeParams, ProtocolError,
};

use crate::config::RunConfig;
use crate::error::CliError;

/// Buffered file (parent directories created) or standard output.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
            }
            let f = File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn read_tag_file(path: &Path) -> Result<TagFile, CliError> {
    let f = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    read_tags(BufReader::new(f)).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `B`, `X`, `OUT_C`, `OUT_D` or a comma-separated channel list.
pub fn resolve_channels(sel: &str, map: &ChannelMap) -> Result<Vec<u8>, CliError> {
    if let Ok(label) = sel.parse::<ChannelLabel>() {
        let chans = map.channels_for(label);
        if chans.is_empty() {
            return Err(CliError::Data(format!("tag file has no {label} channels")));
        }
        return Ok(chans);
    }
    sel.split(',')
        .map(|s| {
            s.trim()
                .parse::<u8>()
                .map_err(|_| CliError::Usage(format!("bad channel list {sel:?}")))
        })
        .collect()
}

fn header_f64(file: &TagFile, key: &str) -> Result<Option<f64>, CliError> {
    file.header_value(key)
        .map(|v| {
            v.parse::<f64>()
                .map_err(|_| CliError::Data(format!("header {key} = {v:?} is not a number")))
        })
        .transpose()
}

fn fmt_opt(v: Result<f64, ProtocolError>) -> Result<String, CliError> {
    match v {
        Ok(x) => Ok(x.to_string()),
        Err(ProtocolError::UndefinedCorrelation) => Ok("NaN".into()),
        Err(e) => Err(e.into()),
    }
}

/// Inclusive grid `0, step, 2·step, ...` up to `end`.
pub fn grid(end: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && end >= 0.0 && end.is_finite()) {
        return Err(CliError::Usage(format!("bad sweep: end {end}, step {step}")));
    }
    let n = (end / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| i as f64 * step).collect())
}

pub fn write_analytic_rows(params: &[CascadeParams], out: &mut dyn Write) -> Result<(), CliError> {
    let modes = psi_modes();
    let mut header = "delta_t_ps,alpha_sq,beta_sq,gamma_sq,mu".to_string();
    for i in 0..4 {
        for j in i..4 {
            header.push_str(&format!(",g2_{}_{}", modes[i], modes[j]));
        }
    }
    writeln!(out, "{header}")?;
    for p in params {
        let c = p.coefficients();
        let mut row = format!(
            "{},{},{},{},{}",
            p.delta_t(),
            c.alpha_sq,
            c.beta_sq,
            c.gamma_sq,
            c.mean_photon_number()
        );
        for i in 0..4 {
            for j in i..4 {
                let (a, b) = (modes[i], modes[j]);
                let g = analytic_g2(p, (a.energy, a.bin), (b.energy, b.bin));
                row.push(',');
                row.push_str(&fmt_opt(g)?);
            }
        }
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn analytic(cfg: &RunConfig, sweep_to: Option<f64>, step: f64) -> Result<(), CliError> {
    let base = cfg.ideal_params()?;
    let params = match sweep_to {
        Some(end) => grid(end, step)?
            .into_iter()
            .map(|dt| base.with_delta_t(dt))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![base],
    };
    let mut out = output(cfg.out.as_deref())?;
    write_analytic_rows(&params, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn mutual_info(cfg: &RunConfig) -> Result<(), CliError> {
    let rows = mutual_information_partitions(&cfg.ideal_params()?)?;
    let mut out = output(cfg.out.as_deref())?;
    writeln!(out, "partition,bits")?;
    for r in rows {
        writeln!(out, "\"{}\",{}", r.label(), r.bits)?;
    }
    out.flush()?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let exp = cfg.experiment(cfg.dt, cfg.scheme(), cfg.seed)?;
    let run = run_experiment(&exp, cfg.workers())?;
    eprintln!("{} tags over {} cycles", run.tags.len(), run.n_cycles());
    let mut out = output(cfg.out.as_deref())?;
    write_tags(&run.to_tag_file(), &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn analyze_hist(
    cfg: &RunConfig,
    input: &Path,
    channels: &str,
    fit_out: Option<&Path>,
    fix_sigma: Option<f64>,
) -> Result<(), CliError> {
    let file = read_tag_file(input)?;
    let chans = resolve_channels(channels, file.channel_map())?;
    let hist = arrival_histogram(&file.tags, &chans, file.rep_period(), cfg.bin_width)?;
    let mut out = output(cfg.out.as_deref())?;
    write_hist_csv(&hist, &mut out).map_err(CliError::data)?;
    out.flush()?;
    drop(out);
    if let Some(path) = fit_out {
        let fit = fit_emg(&hist, fix_sigma)?;
        let mut f = output(Some(path))?;
        writeln!(f, "t0_ps,tau_ps,sigma_ps,amplitude,reduced_chi2,iterations")?;
        writeln!(
            f,
            "{},{},{},{},{},{}",
            fit.t0, fit.tau, fit.sigma, fit.amplitude, fit.reduced_chi2, fit.iterations
        )?;
        f.flush()?;
    }
    Ok(())
}

pub fn analyze_map(
    cfg: &RunConfig,
    input: &Path,
    a: &str,
    b: &str,
    displaced: Option<u64>,
) -> Result<(), CliError> {
    let file = read_tag_file(input)?;
    let ca = resolve_channels(a, file.channel_map())?;
    let cb = resolve_channels(b, file.channel_map())?;
    let pairing = match displaced {
        None => Pairing::SameCycle,
        Some(n) => Pairing::Displaced {
            cycles: u32::try_from(n)
                .ok()
                .filter(|&c| c > 0)
                .ok_or_else(|| CliError::Usage(format!("displacement {n} out of range")))?,
        },
    };
    let map = two_time_map(&file.tags, &ca, &cb, file.rep_period(), cfg.bin_width, pairing, None)?;
    let mut out = output(cfg.out.as_deref())?;
    write_map_csv(&map, &mut out).map_err(CliError::data)?;
    out.flush()?;
    Ok(())
}

/// First-pulse arrival time from an EMG fit to the arrival histogram.
pub fn fit_t0(tags: &[TimeTag], channels: &[u8], rep_period: u64, bin_width: u64) -> Result<f64, CliError> {
    let hist = arrival_histogram(tags, channels, rep_period, bin_width)?;
    Ok(fit_emg(&hist, None)?.t0)
}

/// B-X, B-B and X-X quadrant tables at one pulse delay.
pub fn quadrant_rows(
    tags: &[TimeTag],
    map: &ChannelMap,
    rep_period: u64,
    bin_width: u64,
    t0: f64,
    dt: f64,
) -> Result<Vec<QuadrantRow>, CliError> {
    let b = resolve_channels("B", map)?;
    let x = resolve_channels("X", map)?;
    [("B-X", &b, &x), ("B-B", &b, &b), ("X-X", &x, &x)]
        .into_iter()
        .map(|(pair, ca, cb)| {
            let same = two_time_map(tags, ca, cb, rep_period, bin_width, Pairing::SameCycle, None)?;
            let displaced =
                two_time_map(tags, ca, cb, rep_period, bin_width, Pairing::DISPLACED_ONE_CYCLE, None)?;
            Ok(QuadrantRow {
                delta_t: dt,
                pair: pair.to_string(),
                result: quadrant_g2(&same, &displaced, t0, dt)?,
            })
        })
        .collect()
}

pub fn analyze_quadrants(
    cfg: &RunConfig,
    input: &Path,
    t0: Option<f64>,
    dt_flag: Option<f64>,
) -> Result<(), CliError> {
    let file = read_tag_file(input)?;
    let dt = match dt_flag {
        Some(dt) => dt,
        None => header_f64(&file, "delta_t_ps")?.ok_or_else(|| {
            CliError::Data("no delta_t_ps in the tag header, pass --dt".into())
        })?,
    };
    let t0 = match (t0, header_f64(&file, "pulse_offset_ps")?) {
        (Some(t), _) | (None, Some(t)) => t,
        (None, None) => {
            let b = resolve_channels("B", file.channel_map())?;
            fit_t0(&file.tags, &b, file.rep_period(), cfg.bin_width)?
        }
    };
    let rows = quadrant_rows(&file.tags, file.channel_map(), file.rep_period(), cfg.bin_width, t0, dt)?;
    let mut out = output(cfg.out.as_deref())?;
    write_quadrant_csv(&rows, &mut out).map_err(CliError::data)?;
    out.flush()?;
    Ok(())
}

pub fn analyze_mu(cfg: &RunConfig, single: &Path, double: &[std::path::PathBuf]) -> Result<(), CliError> {
    let one = read_tag_file(single)?;
    let b = resolve_channels("B", one.channel_map())?;
    let x = resolve_channels("X", one.channel_map())?;
    let twos = double
        .iter()
        .map(|p| {
            let f = read_tag_file(p)?;
            let dt = header_f64(&f, "delta_t_ps")?.ok_or_else(|| {
                CliError::Data(format!("{}: no delta_t_ps in the header", p.display()))
            })?;
            Ok((dt, f))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let runs: Vec<(f64, TagRun)> = twos
        .iter()
        .map(|(dt, f)| {
            (
                *dt,
                TagRun {
                    tags: &f.tags,
                    n_cycles: f.n_cycles(),
                },
            )
        })
        .collect();
    let reference = TagRun {
        tags: &one.tags,
        n_cycles: one.n_cycles(),
    };
    let points = mean_photon_curve(&runs, reference, &b, &x)?;
    let mut out = output(cfg.out.as_deref())?;
    write_mu_csv(&points, &mut out).map_err(CliError::data)?;
    out.flush()?;
    Ok(())
}

pub fn hom_table(cfg: &RunConfig, points: usize, oracle: bool) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Usage("need at least 2 phase points".into()));
    }
    let p = cfg.ideal_params()?;
    let mut out = output(cfg.out.as_deref())?;
    if oracle {
        writeln!(out, "phi_rad,g2_analytic,g2_oracle,abs_diff")?;
    } else {
        writeln!(out, "phi_rad,g2")?;
    }
    for i in 0..points {
        let phi = std::f64::consts::PI * i as f64 / (points - 1) as f64;
        let analytic = hom_g2_analytic(&p, phi);
        if oracle {
            let brute = hom_g2_oracle(&p, phi);
            let diff = match (&analytic, &brute) {
                (Ok(a), Ok(b)) => (a - b).abs().to_string(),
                _ => "NaN".into(),
            };
            writeln!(out, "{phi},{},{},{diff}", fmt_opt(analytic)?, fmt_opt(brute)?)?;
        } else {
            writeln!(out, "{phi},{}", fmt_opt(analytic)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn hom_synthesize(cfg: &RunConfig) -> Result<(), CliError> {
    let p = cfg.ideal_params()?;
    let phase = match cfg.phase {
        Some(phi) => PhaseModel::Constant(phi),
        None => PhaseModel::Random {
            stability_interval_s: cfg.stability,
        },
    };
    let detector = HomDetector {
        efficiency: cfg.hom_efficiency,
        jitter_sigma: cfg.jitter,
        dark_rate: cfg.dark_rate,
        rep_period: cfg.rep_period,
        pulse_offset: cfg.pulse_offset,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let stream = synth_hom_stream(&p, &phase, &detector, cfg.duration, &mut rng)?;
    eprintln!("{} tags over {} cycles", stream.tags.len(), stream.n_cycles);
    let phase_desc = match phase {
        PhaseModel::Constant(phi) => phi.to_string(),
        PhaseModel::Random { stability_interval_s } => format!("random/{stability_interval_s}s"),
    };
    let file = TagFile::new(
        stream.rep_period,
        stream.n_cycles,
        ChannelMap::hom(),
        Some(cfg.seed),
        vec![
            ("delta_t_ps".into(), p.delta_t().to_string()),
            ("tau_b_ps".into(), p.tau_b().to_string()),
            ("tau_x_ps".into(), p.tau_x().to_string()),
            ("phase".into(), phase_desc),
            ("efficiency".into(), cfg.hom_efficiency.to_string()),
            ("jitter_ps".into(), cfg.jitter.to_string()),
            ("dark_rate_hz".into(), cfg.dark_rate.to_string()),
        ],
        stream.tags,
    );
    let mut out = output(cfg.out.as_deref())?;
    write_tags(&file, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn hom_analyze(cfg: &RunConfig, input: &Path, summary_out: Option<&Path>) -> Result<(), CliError> {
    let file = read_tag_file(input)?;
    let c = resolve_channels("OUT_C", file.channel_map())?;
    let d = resolve_channels("OUT_D", file.channel_map())?;
    if c.len() != 1 || d.len() != 1 {
        return Err(CliError::Data("expected one channel per HOM output".into()));
    }
    let opts = HomWindowOptions {
        window_s: cfg.window,
        shift_s: cfg.shift,
        side_peaks: cfg.side_peaks,
        min_side_coincidences: cfg.min_side_coincidences,
        channel_c: c[0],
        channel_d: d[0],
    };
    let r = hom_windowed_g2(&file.tags, file.rep_period(), &opts)?;
    let mut out = output(cfg.out.as_deref())?;
    write_hom_series_csv(&r, &mut out).map_err(CliError::data)?;
    out.flush()?;
    drop(out);

    let pooled = r.pooled_g2(cfg.side_peaks).unwrap_or(f64::NAN);
    let sigma = r.pooled_sigma(cfg.side_peaks).unwrap_or(f64::NAN);
    eprintln!(
        "{} windows kept, {} excluded; mean g2 {:.4} (std {:.4}), pooled {:.4} ± {:.4}",
        r.series.len(),
        r.excluded,
        r.mean,
        r.std,
        pooled,
        sigma
    );
    if let Some(path) = summary_out {
        let mut f = output(Some(path))?;
        writeln!(f, "windows,excluded,mean_g2,std_g2,zero_peak_total,side_peak_total,pooled_g2,pooled_sigma")?;
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.series.len(),
            r.excluded,
            r.mean,
            r.std,
            r.zero_peak_total,
            r.side_peak_total,
            pooled,
            sigma
        )?;
        f.flush()?;
    }
    Ok(())
}
