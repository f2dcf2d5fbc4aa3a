use proptest::prelude::*;

use seqtpe::correlate::{quadrant_g2, two_time_map, Pairing, Quadrant};
use seqtpe::fock::{
    beamsplitter, entropy, g2_between, mutual_information, number_expectation, partial_trace,
    BeamsplitterPair,
};
use seqtpe::montecarlo::TimeTag;
use seqtpe::protocol::{psi_modes, CascadeParams};
use seqtpe::{Complex64, Energy, ModeLabel, ModeRegister, PureState, Spatial, TimeBin};

const REP: u64 = 12_500;

fn normalized(amps: Vec<(f64, f64)>) -> Vec<Complex64> {
    let v: Vec<Complex64> = amps.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
    let n = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// Random normalized state on the four protocol modes, at most one photon each.
fn four_mode_state() -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16)
        .prop_filter("non-zero", |v| v.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3))
        .prop_map(|amps| {
            let reg = ModeRegister::new(psi_modes().to_vec(), 1).unwrap();
            PureState::new(reg, normalized(amps)).unwrap()
        })
}

fn port(s: Spatial) -> ModeLabel {
    ModeLabel::new(Energy::B, TimeBin::Early, s)
}

/// Two-port state with at most two photons in total, so no output overflows.
fn two_port_state() -> impl Strategy<Value = PureState> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6)
        .prop_filter("non-zero", |v| v.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3))
        .prop_map(|amps| {
            let reg = ModeRegister::new(vec![port(Spatial::A), port(Spatial::B)], 2).unwrap();
            let amps = normalized(amps);
            let occupations = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]];
            let mut dense = vec![Complex64::new(0.0, 0.0); 9];
            for (occ, a) in occupations.iter().zip(amps) {
                dense[occ[0] * 3 + occ[1]] = a;
            }
            PureState::new(reg, dense).unwrap()
        })
}

/// Sorted stream over a few cycles with tags on channels 1..=4.
fn tag_stream() -> impl Strategy<Value = Vec<TimeTag>> {
    prop::collection::vec((0u64..6, 1u8..=4, 0u64..REP), 0..80).prop_map(|raw| {
        let mut tags: Vec<TimeTag> = raw
            .into_iter()
            .map(|(cycle, ch, t)| TimeTag::new(ch, cycle * REP + t))
            .collect();
        tags.sort();
        tags.dedup();
        tags
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g2_is_symmetric(state in four_mode_state(), i in 0usize..4, j in 0usize..4) {
        let m = psi_modes();
        let ab = g2_between(&state, m[i], m[j]);
        let ba = g2_between(&state, m[j], m[i]);
        match (ab, ba) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "asymmetric outcome {:?}", other),
        }
    }

    #[test]
    fn pure_state_entropy_and_mutual_information(state in four_mode_state(), mask in 1u32..15) {
        let m = psi_modes();
        let (p1, p2): (Vec<ModeLabel>, Vec<ModeLabel>) =
            m.iter().partition(|x| mask & (1 << m.iter().position(|y| y == *x).unwrap()) != 0);
        let whole = partial_trace(&state, &m).unwrap();
        prop_assert!(entropy(&whole).abs() < 1e-9);
        let s1 = entropy(&partial_trace(&state, &p1).unwrap());
        let mi = mutual_information(&state, &p1, &p2).unwrap();
        prop_assert!((mi - 2.0 * s1).abs() < 1e-9, "{} vs {}", mi, 2.0 * s1);
    }

    #[test]
    fn beamsplitter_conserves_photons_and_inverts(state in two_port_state(), t in 0.0..=1.0f64) {
        let (a, b, c, d) = (port(Spatial::A), port(Spatial::B), port(Spatial::C), port(Spatial::D));
        let forward = BeamsplitterPair { input_a: a, input_b: b, output_c: c, output_d: d };
        let back = BeamsplitterPair { input_a: c, input_b: d, output_c: a, output_d: b };
        let out = beamsplitter(&state, &[forward], t).unwrap();
        let n_in = number_expectation(&state, a).unwrap() + number_expectation(&state, b).unwrap();
        let n_out = number_expectation(&out, c).unwrap() + number_expectation(&out, d).unwrap();
        prop_assert!((n_in - n_out).abs() < 1e-10);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
        let rec = beamsplitter(&out, &[back], t).unwrap();
        for (x, y) in rec.amplitudes().iter().zip(state.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn coefficients_close_and_order(
        tau_b in 10.0..1000.0f64,
        tau_x in 10.0..1000.0f64,
        dt in 0.01..5000.0f64,
    ) {
        let c = CascadeParams::ideal(tau_b, tau_x, dt).unwrap().coefficients();
        prop_assert!((c.alpha_sq + c.beta_sq + c.gamma_sq - 1.0).abs() < 1e-12);
        let later = CascadeParams::ideal(tau_b, tau_x, dt * 1.01).unwrap().coefficients();
        prop_assert!(later.alpha_sq < c.alpha_sq);
        prop_assert!(later.gamma_sq >= c.gamma_sq);
        prop_assert!(later.mean_photon_number() >= c.mean_photon_number());
        if c.beta_sq > 1e-9 && c.alpha_sq + c.gamma_sq > 1e-9 {
            let g0 = c.hom_g2(0.0).unwrap();
            let g90 = c.hom_g2(std::f64::consts::FRAC_PI_2).unwrap();
            prop_assert!(g90 > g0);
        }
    }

    #[test]
    fn swapped_channel_sets_transpose(tags in tag_stream()) {
        let ab = two_time_map(&tags, &[1, 2], &[3, 4], REP, 25, Pairing::SameCycle, None).unwrap();
        let ba = two_time_map(&tags, &[3, 4], &[1, 2], REP, 25, Pairing::SameCycle, None).unwrap();
        prop_assert_eq!(ab.transpose(), ba);
    }

    #[test]
    fn quadrants_account_for_every_count(tags in tag_stream(), boundary in 0u64..=REP) {
        let same = two_time_map(&tags, &[1, 3], &[2, 4], REP, 25, Pairing::SameCycle, None).unwrap();
        let disp = two_time_map(&tags, &[1, 3], &[2, 4], REP, 25, Pairing::DISPLACED_ONE_CYCLE, None).unwrap();
        let r = quadrant_g2(&same, &disp, boundary as f64, 0.0).unwrap();
        let sum: u64 = Quadrant::ALL.iter().map(|&q| r.same.get(q)).sum();
        prop_assert_eq!(sum, same.total());
    }

    #[test]
    fn common_scaling_leaves_g2_unchanged(tags in tag_stream(), k in 1u64..50) {
        let same = two_time_map(&tags, &[1, 2], &[3, 4], REP, 25, Pairing::SameCycle, None).unwrap();
        let disp = two_time_map(&tags, &[1, 2], &[3, 4], REP, 25, Pairing::DISPLACED_ONE_CYCLE, None).unwrap();
        let r = quadrant_g2(&same, &disp, 500.0, 100.0).unwrap();
        let scaled = quadrant_g2(&same.scaled(k), &disp.scaled(k), 500.0, 100.0).unwrap();
        prop_assert_eq!(r.g2, scaled.g2);
    }
}
