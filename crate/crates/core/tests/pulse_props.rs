use std::f64::consts::PI;

use fluxgate::pulse::{sample, validate_adiabaticity, Adiabaticity};
use fluxgate::PulseParams;
use proptest::prelude::*;

fn pulses() -> impl Strategy<Value = PulseParams> {
    (2.0f64..15.0, 0.0f64..40.0, 4.0f64..40.0, -0.1f64..0.1)
        .prop_map(|(t_r, t_p, a, d)| PulseParams::new(t_r, t_p, a, d * PI).unwrap())
}

#[test]
fn sampling_grid() {
    let p = PulseParams::new(7.05, 7.3, 16.741, 0.0705 * PI).unwrap();
    let s = sample(&p, p.duration() / 2.0).unwrap();
    assert_eq!(s.times.len(), 3);
    assert_eq!(s.flux[0], PI);
    assert!((s.flux[2] - PI).abs() < 1e-15);
    let s = sample(&p, 0.3).unwrap();
    assert_eq!(*s.times.last().unwrap(), p.duration());
    assert!(s.times.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-12));
    assert!(sample(&p, p.duration() * 1.01).is_err());
    assert!(sample(&p, 0.0).is_err());
}

#[test]
fn riemann_sum_self_converges() {
    let p = PulseParams::new(7.05, 7.3, 16.741, 0.0705 * PI).unwrap();
    let area = |dt: f64| {
        let s = sample(&p, dt).unwrap();
        s.times.windows(2).zip(&s.flux).map(|(w, f)| (w[1] - w[0]) * (f - PI)).sum::<f64>()
    };
    let (a, b, c) = (area(1e-3), area(5e-4), area(2.5e-4));
    assert!((b - c).abs() < 1e-6 && (a - b).abs() < 1e-6, "{a} {b} {c}");
}

#[test]
fn adiabaticity_verdicts() {
    let g = 0.0134;
    let p = PulseParams::new(7.05, 7.3, 16.741, 0.0705 * PI).unwrap();
    assert_eq!(validate_adiabaticity(&p, g, 0.848).verdict, Adiabaticity::Loose);
    let slow = PulseParams { t_r: 1e4, ..p };
    assert_eq!(validate_adiabaticity(&slow, g, 0.848).verdict, Adiabaticity::Fail);
    let fast = PulseParams { t_r: 1e-3, ..p };
    assert_eq!(validate_adiabaticity(&fast, g, 0.848).verdict, Adiabaticity::Fail);
}

#[test]
fn rejects_invalid_parameters() {
    assert!(PulseParams::new(0.0, 1.0, 10.0, 0.1).is_err());
    assert!(PulseParams::new(1.0, -1.0, 10.0, 0.1).is_err());
    assert!(PulseParams::new(1.0, 1.0, 0.0, 0.1).is_err());
    assert!(PulseParams::new(1.0, 1.0, 10.0, f64::NAN).is_err());
}

proptest! {
    #[test]
    fn continuous_at_segment_boundaries(p in pulses()) {
        let eps = 1e-12;
        for t in [p.plateau_start(), p.plateau_end()] {
            prop_assert!((p.flux_at(t - eps) - p.flux_at(t + eps)).abs() < 1e-14 + 1e-9 * p.delta_phi.abs());
            prop_assert!((p.flux_at(t) - (PI + p.delta_phi)).abs() < 1e-14);
        }
        prop_assert_eq!(p.flux_at(0.0), PI);
    }

    #[test]
    fn mirror_symmetric(p in pulses(), u in 0.0f64..1.0) {
        let t = u * p.duration();
        prop_assert!((p.flux_at(t) - p.flux_at(p.duration() - t)).abs() < 1e-14);
    }

    #[test]
    fn ramp_is_monotone(p in pulses()) {
        let d = p.delta_phi.abs().max(1e-3) * p.delta_phi.signum();
        let p = PulseParams { delta_phi: d, ..p };
        let n = 400;
        let mut prev = p.flux_at(0.0);
        for k in 1..=n {
            let f = p.flux_at(p.plateau_start() * k as f64 / n as f64);
            prop_assert!((f - prev) * d.signum() > 0.0);
            prev = f;
        }
    }

    #[test]
    fn plateau_is_the_peak(p in pulses()) {
        let s = sample(&p, p.duration() / 997.0).unwrap();
        let peak = PI + p.delta_phi;
        for (&t, &f) in s.times.iter().zip(&s.flux) {
            prop_assert!((f - PI).abs() <= p.delta_phi.abs() + 1e-15);
            if t > p.plateau_start() && t < p.plateau_end() {
                prop_assert_eq!(f, peak);
            }
        }
    }
}
