use aerial_noma::analysis::{coverage_from_link, DecodingThresholds, NakagamiLinkParams};
use aerial_noma::channel::AuePowerDistribution;
use aerial_noma::montecarlo::{run_trial, Event};
use aerial_noma::trajectory::{spiral_points, SpiralConfig};
use aerial_noma::{los_probability, LosEnvironment, LosModel, SystemParams};
use proptest::prelude::*;

fn environment() -> impl Strategy<Value = LosEnvironment> {
    (0.01f64..1.0, 1.0f64..1000.0, 1.0f64..80.0).prop_map(|(alpha, beta, delta)| LosEnvironment {
        alpha,
        beta,
        delta,
    })
}

fn thresholds() -> impl Strategy<Value = DecodingThresholds> {
    (-30.0f64..45.0, -30.0f64..20.0).prop_map(|(a, t)| DecodingThresholds::from_db(a, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn itu_los_is_a_probability(env in environment(), r in 0.0f64..2000.0, h in 0.0f64..400.0) {
        let p = los_probability(&LosModel::Itu(env), r, h, 30.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn three_gpp_los_is_a_probability(r in 0.0f64..5000.0, h in 22.51f64..300.0) {
        let p = los_probability(&LosModel::ThreeGppUrban, r, h, 30.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn three_gpp_pinned_above_100m(r in 0.0f64..1e5, h in 100.0f64..=300.0) {
        prop_assume!(h > 100.0);
        prop_assert_eq!(los_probability(&LosModel::ThreeGppUrban, r, h, 30.0).unwrap(), 1.0);
    }

    #[test]
    fn three_gpp_pinned_inside_breakpoint(h in 22.51f64..=100.0, frac in 0.0f64..=1.0) {
        let d1 = (294.05 * h.log10() - 432.94).max(18.0);
        prop_assert_eq!(los_probability(&LosModel::ThreeGppUrban, frac * d1, h, 30.0).unwrap(), 1.0);
    }

    #[test]
    fn events_partition_and_aggregates_are_ordered(
        p_los in 0.0f64..=1.0,
        d_a in 10.0f64..800.0,
        th in thresholds(),
    ) {
        let params = SystemParams::reference();
        let link = NakagamiLinkParams::new(&params, p_los, d_a).unwrap();
        let r = coverage_from_link(&link, &th, params.noise_power).unwrap();
        for p in [r.p1, r.p2, r.p3, r.p4, r.p5_residual] {
            prop_assert!((0.0..=1.0).contains(&p), "{:?}", r);
        }
        prop_assert!((r.p1 + r.p2 + r.p3 + r.p4 + r.p5_residual - 1.0).abs() <= 1e-9);
        prop_assert!(r.p_tot <= r.p_aue.min(r.p_tue) + 1e-15);
    }

    #[test]
    fn p_tot_nonincreasing_in_uav_threshold(
        p_los in 0.0f64..=1.0,
        d_a in 10.0f64..800.0,
        a_db in -20.0f64..40.0,
        step in 0.0f64..10.0,
        t_db in -20.0f64..15.0,
    ) {
        let params = SystemParams::reference();
        let link = NakagamiLinkParams::new(&params, p_los, d_a).unwrap();
        let lo = coverage_from_link(&link, &DecodingThresholds::from_db(a_db, t_db), params.noise_power).unwrap();
        let hi = coverage_from_link(&link, &DecodingThresholds::from_db(a_db + step, t_db), params.noise_power).unwrap();
        prop_assert!(hi.p_tot <= lo.p_tot + 1e-9, "{} > {}", hi.p_tot, lo.p_tot);
    }

    #[test]
    fn aue_cdf_is_monotone(p_los in 0.0f64..=1.0, d_a in 10.0f64..800.0, e1 in -16.0f64..-6.0, de in 0.0f64..2.0) {
        let dist = AuePowerDistribution::new(&SystemParams::reference(), p_los, d_a).unwrap();
        let (x, y) = (10f64.powf(e1), 10f64.powf(e1 + de));
        prop_assert!(dist.cdf(x) <= dist.cdf(y) + 1e-15);
        prop_assert!((0.0..=1.0).contains(&dist.cdf(y)));
    }

    #[test]
    fn every_trial_lands_in_exactly_one_event(
        xa in 0.0f64..1e-9,
        xt in 0.0f64..1e-9,
        th in thresholds(),
    ) {
        let e = run_trial(xa, xt, &th, 1e-13).event;
        let step1 = xa / (xt + 1e-13) >= th.theta_a;
        let expected = if step1 {
            if xt / 1e-13 >= th.theta_t { Event::E1 } else { Event::E2 }
        } else if xt / (xa + 1e-13) >= th.theta_t {
            if xa / 1e-13 >= th.theta_a { Event::E3 } else { Event::E4 }
        } else {
            Event::E5
        };
        prop_assert_eq!(e, expected);
    }

    #[test]
    fn spiral_points_stay_in_cell(h in 25.0f64..300.0, rounds in 1u32..6, speed in 5.0f64..40.0) {
        let cfg = SpiralConfig { rounds, speed, ..SpiralConfig::reference(h) };
        let pts = spiral_points(&cfg).unwrap();
        prop_assert!(!pts.is_empty());
        prop_assert!(pts.iter().all(|p| p.r_a <= cfg.cell_radius));
        prop_assert_eq!(pts.last().unwrap().r_a, cfg.cell_radius);
    }
}
