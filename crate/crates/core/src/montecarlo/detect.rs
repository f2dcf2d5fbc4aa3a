use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use super::{DetectorModel, EmissionEvent, TimeTag};

/// Placement of one laser cycle on the absolute time axis (ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleWindow {
    pub start: u64,
    pub period: u64,
    /// Offset of the first pulse from `start`.
    pub pulse_offset: f64,
}

/// TDC tick (1 ps) containing `t`.
pub(crate) fn to_tick(t: f64) -> u64 {
    t.max(0.0).floor() as u64
}

/// Detector response to one cycle before dead time is applied.
pub(crate) fn detect_raw<R: Rng + ?Sized>(
    events: &[EmissionEvent],
    detector: &DetectorModel,
    window: CycleWindow,
    rng: &mut R,
) -> Vec<TimeTag> {
    let mut tags = Vec::with_capacity(events.len());
    let jitter = (detector.jitter_sigma > 0.0)
        .then(|| Normal::new(0.0, detector.jitter_sigma).expect("finite sigma"));
    for ev in events {
        if !detector.polarization_filter.passes(ev.polarization) {
            continue;
        }
        let pair = detector.pair(ev.kind);
        let slot = if rng.gen_bool(detector.splitter_ratio) { 0 } else { 1 };
        if !rng.gen_bool(pair.efficiency[slot]) {
            continue;
        }
        let mut t = window.start as f64 + window.pulse_offset + ev.time;
        if let Some(j) = &jitter {
            t += j.sample(rng);
        }
        tags.push(TimeTag::new(pair.channels[slot], to_tick(t)));
    }
    if detector.dark_rate > 0.0 {
        let mean = detector.dark_rate * window.period as f64 * 1e-12;
        let dark = Poisson::new(mean).expect("positive mean");
        for ch in detector.channels() {
            let n = dark.sample(rng) as u64;
            for _ in 0..n {
                let t = window.start + rng.gen_range(0..window.period);
                tags.push(TimeTag::new(ch, t));
            }
        }
    }
    tags.sort_unstable();
    tags
}

/// Keeps a tag only if it is at least `deadtime` after the previously kept
/// tag on the same channel. Input must be sorted.
pub fn apply_deadtime(tags: &mut Vec<TimeTag>, deadtime: f64) {
    if deadtime <= 0.0 {
        return;
    }
    let mut last: Vec<Option<u64>> = vec![None; 256];
    tags.retain(|tag| {
        let slot = &mut last[tag.channel as usize];
        match *slot {
            Some(prev) if ((tag.time - prev) as f64) < deadtime => false,
            _ => {
                *slot = Some(tag.time);
                true
            }
        }
    });
}

/// Tags produced by one cycle's emissions: polarization filter, splitter
/// routing, efficiency loss, Gaussian jitter (rounded to 1 ps), Poisson dark
/// counts over the cycle, then per-channel dead time within the cycle.
pub fn detect<R: Rng + ?Sized>(
    events: &[EmissionEvent],
    detector: &DetectorModel,
    window: CycleWindow,
    rng: &mut R,
) -> Vec<TimeTag> {
    let mut tags = detect_raw(events, detector, window, rng);
    apply_deadtime(&mut tags, detector.deadtime);
    tags
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{cycle_rng, EmissionKind, Polarization, PolarizationFilter};

    fn window() -> CycleWindow {
        CycleWindow {
            start: 25_000,
            period: 12_500,
            pulse_offset: 500.0,
        }
    }

    fn events() -> Vec<EmissionEvent> {
        vec![
            EmissionEvent {
                kind: EmissionKind::B,
                cascade_index: 1,
                time: 10.2,
                polarization: Polarization::H,
            },
            EmissionEvent {
                kind: EmissionKind::X,
                cascade_index: 1,
                time: 200.7,
                polarization: Polarization::H,
            },
            EmissionEvent {
                kind: EmissionKind::B,
                cascade_index: 2,
                time: 300.0,
                polarization: Polarization::V,
            },
        ]
    }

    #[test]
    fn ideal_detector_is_bijective() {
        let tags = detect(&events(), &DetectorModel::ideal(), window(), &mut cycle_rng(1, 0));
        assert_eq!(tags.len(), 3);
        let times: Vec<u64> = tags.iter().map(|t| t.time).collect();
        assert_eq!(times, vec![25_510, 25_700, 25_800]);
        assert!([3, 4].contains(&tags[1].channel));
        assert!([1, 2].contains(&tags[0].channel));
    }

    #[test]
    fn zero_efficiency_leaves_only_dark_counts() {
        let mut d = DetectorModel::ideal().with_efficiency(0.0);
        assert!(detect(&events(), &d, window(), &mut cycle_rng(1, 0)).is_empty());
        d.dark_rate = 1e9; // 12.5 expected per channel per cycle
        let tags = detect(&events(), &d, window(), &mut cycle_rng(1, 0));
        assert!(!tags.is_empty());
        assert!(tags
            .iter()
            .all(|t| t.time >= 25_000 && t.time < 37_500));
    }

    #[test]
    fn polarization_filter_drops_other_polarization() {
        let mut d = DetectorModel::ideal();
        d.polarization_filter = PolarizationFilter::V;
        let tags = detect(&events(), &d, window(), &mut cycle_rng(1, 0));
        assert_eq!(tags.len(), 1);
        assert_eq!(tags[0].time, 25_800);
    }

    #[test]
    fn splitter_extremes_route_deterministically() {
        let mut d = DetectorModel::ideal();
        d.splitter_ratio = 1.0;
        let tags = detect(&events(), &d, window(), &mut cycle_rng(1, 0));
        let chans: Vec<u8> = tags.iter().map(|t| t.channel).collect();
        assert_eq!(chans, vec![1, 3, 1]);
    }

    #[test]
    fn deadtime_within_cycle() {
        let mut d = DetectorModel::ideal();
        d.splitter_ratio = 1.0;
        d.deadtime = 1_000.0;
        let tags = detect(&events(), &d, window(), &mut cycle_rng(1, 0));
        // second B photon lands on channel 1 within the dead time
        assert_eq!(tags.len(), 2);
    }

    #[test]
    fn deadtime_pass_spacing() {
        let mut tags: Vec<TimeTag> = [0u64, 50, 99, 100, 150, 260, 261]
            .iter()
            .map(|&t| TimeTag::new(1, t))
            .chain([TimeTag::new(2, 60)])
            .collect();
        tags.sort_unstable();
        apply_deadtime(&mut tags, 100.0);
        let kept: Vec<(u8, u64)> = tags.iter().map(|t| (t.channel, t.time)).collect();
        assert_eq!(kept, vec![(1, 0), (2, 60), (1, 100), (1, 260)]);
    }
}
