use super::{check_channels, CorrelateError};
use crate::montecarlo::TimeTag;

/// A tag stream with the number of laser cycles it covers.
#[derive(Debug, Clone, Copy)]
pub struct TagRun<'a> {
    pub tags: &'a [TimeTag],
    pub n_cycles: u64,
}

impl TagRun<'_> {
    fn count(&self, channels: &[u8]) -> u64 {
        self.tags
            .iter()
            .filter(|t| channels.contains(&t.channel))
            .count() as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuPoint {
    pub delta_t: f64,
    pub mu_b: f64,
    pub mu_x: f64,
    /// Poisson standard errors of the ratios.
    pub sigma_b: f64,
    pub sigma_x: f64,
}

fn ratio(two: u64, two_cycles: u64, one: u64, one_cycles: u64) -> (f64, f64) {
    let rate_one = one as f64 / one_cycles as f64;
    let r = two as f64 / two_cycles as f64 / rate_one;
    // an empty two-pulse run still carries one count of uncertainty
    let s_two = (two.max(1) as f64).sqrt() / two_cycles as f64 / rate_one;
    let s_one = r / (one as f64).sqrt();
    (r, s_two.hypot(s_one))
}

/// Two-pulse emission per energy mode normalized to single-pulse emission.
pub fn mean_photon_curve(
    two_pulse: &[(f64, TagRun<'_>)],
    one_pulse: TagRun<'_>,
    channels_b: &[u8],
    channels_x: &[u8],
) -> Result<Vec<MuPoint>, CorrelateError> {
    check_channels(channels_b)?;
    check_channels(channels_x)?;
    let one_b = one_pulse.count(channels_b);
    let one_x = one_pulse.count(channels_x);
    if one_pulse.n_cycles == 0 || one_b == 0 || one_x == 0 {
        return Err(CorrelateError::Undefined(
            "single-pulse reference has no counts".into(),
        ));
    }
    two_pulse
        .iter()
        .map(|(dt, run)| {
            if run.n_cycles == 0 {
                return Err(CorrelateError::InvalidParameter(format!(
                    "two-pulse run at {dt} ps has no cycles"
                )));
            }
            let (mu_b, sigma_b) = ratio(run.count(channels_b), run.n_cycles, one_b, one_pulse.n_cycles);
            let (mu_x, sigma_x) = ratio(run.count(channels_x), run.n_cycles, one_x, one_pulse.n_cycles);
            Ok(MuPoint {
                delta_t: *dt,
                mu_b,
                mu_x,
                sigma_b,
                sigma_x,
            })
        })
        .collect()
}
