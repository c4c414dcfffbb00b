use fracns::estimates::{self, C0Branch, ConstantsLedger, ForcingSeries, GronwallSpec, RadiusBranch, TstarBranch};
use fracns::harness::random_field;
use fracns::{GridSpec, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit() -> ConstantsLedger {
    ConstantsLedger::default()
}

fn grid_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
}

/// Smallest `s` admissible for `α` plus a fraction of the remaining room.
fn admissible_s(alpha: f64, frac: f64) -> f64 {
    let lo = 2.5 - 2.0 * alpha;
    lo + (1.0 - lo) * frac
}

#[test]
fn single_mode_difference_ratio() {
    let mut u = SpectralField::zeros(GridSpec::new(16).unwrap());
    let z = Complex64::default();
    u.set_mode([2, 0, 0], [z, Complex64::new(0.0, -0.5), z]).unwrap();
    let c = estimates::frac_lap_diff_check(&u, 1.0, 0.9, 1.0, 0.0, &unit()).unwrap();
    let norm = spectral_l2(&u);
    let lhs = (4.0 - 4f64.powf(0.9)) * norm;
    let rhs = 10f64.sqrt() * 0.1 * 5f64.powf(1.5) * norm;
    assert!((c.lhs - lhs).abs() <= 1e-13 * lhs);
    assert!((c.rhs - rhs).abs() <= 1e-13 * rhs);
    assert!((c.ratio - 0.146_446).abs() < 1e-5);
    // |k| = 1 has symbol 1 at every order.
    let mut w = SpectralField::zeros(GridSpec::new(16).unwrap());
    w.set_mode([0, 0, 1], [Complex64::new(1.0, 0.0), z, z]).unwrap();
    assert_eq!(estimates::frac_lap_diff_check(&w, 1.2, 0.8, 1.0, 0.5, &unit()).unwrap().lhs, 0.0);
}

fn spectral_l2(u: &SpectralField) -> f64 {
    fracns::spectral::sobolev_norm(u, fracns::NormConvention::L2)
}

#[test]
fn reference_scan_below_one() {
    // Frozen maximum of the lattice scan at α=5/4, β=6/5, δ=1, k_max=64.
    let r = estimates::permode_diff_bound_scan(1.25, 1.2, 1.0, 64, &unit()).unwrap();
    assert!(r.worst_ratio < 1.0);
    assert!((r.worst_ratio - SCAN_REFERENCE).abs() <= 1e-12 * SCAN_REFERENCE, "{:.17e} at |k|²={}", r.worst_ratio, r.worst_k_sq);
    assert_eq!(estimates::permode_diff_bound_scan(1.1, 1.1, 0.5, 64, &unit()).unwrap().worst_ratio, 0.0);
}

const SCAN_REFERENCE: f64 = 3.439_266_646_697_139_4e-2;

#[test]
fn scan_bounded_on_delta_ladder() {
    for gap in [0.05, 0.02, 0.005] {
        for d in [1.0, 0.5, 0.25, 0.1, 0.05, 0.02, 0.01] {
            if d < 2.0 * gap {
                continue;
            }
            let r = estimates::permode_diff_bound_scan(1.0, 1.0 - gap, d, 128, &unit()).unwrap();
            assert!(r.worst_ratio <= 1.0, "gap {gap} δ {d}: {}", r.worst_ratio);
        }
    }
}

#[test]
fn closed_form_constants() {
    assert_eq!(estimates::gamma_exponent(1.0, 1.25).unwrap(), 2.25);
    // (1 − 3/5)(6/(5/4))^{5/2} at the unit ledger.
    let c0 = estimates::constant_c0(1.0, 1.25, &unit()).unwrap();
    assert_eq!(c0.branch, C0Branch::Gradient);
    let expect = 0.4 * 4.8f64.powf(2.5);
    assert!((c0.value - expect).abs() <= 1e-12 * expect);
    assert_eq!(estimates::constant_c1(&unit()), 6.0 * (3.0 * 4.0 + 2.0));
    assert_eq!(unit().c_a(), 8.0);
    let frac = estimates::constant_c0(0.5, 1.25, &unit()).unwrap();
    assert_eq!(frac.branch, C0Branch::Fractional);
}

#[test]
fn radius_limits() {
    for delta in [0.05, 0.2, 0.5, 0.8, 1.0] {
        let e = estimates::epsilon_54(0.0, delta, &unit()).unwrap();
        let quarter = (delta / 4.0f64).powf(1.0 / delta);
        let exp = 48f64.powf(-1.0 / delta);
        let expect = quarter.min(exp);
        assert!((e.value - expect).abs() <= 1e-12 * expect, "δ={delta}");
        let branch = if quarter <= exp { RadiusBranch::Quarter } else { RadiusBranch::Exponential };
        assert_eq!(e.branch, branch);
    }
    let tiny = estimates::epsilon_54(2.0, 1.0, &unit()).unwrap();
    assert!(tiny.underflow && !tiny.overflow);
    assert!(tiny.log10_value.is_finite() && tiny.log10_value < -300.0);
    assert!(estimates::epsilon_54(10.0, 1.0, &unit()).unwrap().overflow);
}

#[test]
fn tstar_branches() {
    let t = estimates::tstar(1.0, 1.0, &unit()).unwrap();
    assert_eq!(t.branch, TstarBranch::Hyperdissipative);
    assert!((t.cap.unwrap() - 0.25).abs() <= 1e-12 * 0.25);
    assert_eq!(t.cap_below_threshold, Some(true));
    let ipo = estimates::tstar(1.0, 0.9, &unit()).unwrap();
    assert_eq!(ipo.branch, TstarBranch::Ipodissipative);
    assert!(ipo.cap.is_none() && ipo.threshold > 0.0);
    assert!(estimates::tstar(1.0, 1.25, &unit()).is_err());
}

#[test]
fn leray_horizons_scale() {
    let a = estimates::leray_time_h1(2.0, 1.1, &unit()).unwrap();
    let b = estimates::leray_time_h1(4.0, 1.1, &unit()).unwrap();
    let exponent = (b / a).log2();
    let expect = -4.4 / (4.4 - 3.0);
    assert!((exponent - expect).abs() <= 1e-12 * expect.abs());
    let h = estimates::leray_time_halpha(2.0, 0.9, &unit()).unwrap();
    let expect = 2f64.powi(-18);
    assert!((h - expect).abs() <= 1e-12 * expect);
}

#[test]
fn forcing_gaps_rejected() {
    let mut forcing = ForcingSeries::zeros(grid_times(1.0, 10));
    forcing.high.pop();
    let spec = GronwallSpec::from_calculators(1.0, 1.25, 1.25, 1.0, &unit(), forcing).unwrap();
    assert!(estimates::gronwall_bound(&spec, 0.1).is_err());
}

#[test]
fn pure_power_escape_time_matches_cap() {
    let t_end = 1.0;
    let forcing = ForcingSeries::zeros(grid_times(2.0 * t_end, 40));
    let spec = GronwallSpec::from_calculators(1.0, 1.25, 1.25, 1.0, &unit(), forcing).unwrap();
    let f0 = estimates::pure_power_cap(spec.c0, spec.gamma, t_end);
    let b = estimates::gronwall_bound(&spec, f0).unwrap();
    let t = b.blowup_time.unwrap();
    assert!((t - t_end).abs() <= 1e-9 * t_end, "escape at {t}");
    // A smaller datum escapes at its own horizon.
    let below = estimates::gronwall_bound(&spec, 0.8 * f0).unwrap();
    let escape = below.blowup_time.unwrap();
    let expect = estimates::pure_power_horizon(0.8 * f0, spec.c0, spec.gamma);
    assert!(escape > t_end);
    assert!((escape - expect).abs() <= 1e-9 * expect);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn c0_respects_cap(beta in 0.7501f64..1.25, frac in 0.001f64..1.0) {
        let s = admissible_s(beta, frac);
        let c0 = estimates::constant_c0(s, beta, &unit()).unwrap();
        prop_assert!(c0.value > 0.0);
        // Both overflow together near the admissibility boundary.
        prop_assert!(c0.value.is_finite() || !c0.cap.is_finite());
        prop_assert!(c0.within_cap || !c0.value.is_finite(), "C0 {} cap {}", c0.value, c0.cap);
        prop_assert!(estimates::gamma_exponent(s, beta).unwrap() > 1.0);
    }

    #[test]
    fn scan_within_bound(alpha in 0.76f64..1.25, delta in 0.1f64..1.0, t in 0.0f64..1.0) {
        let lo = (alpha - delta / 2.0).max(delta / 2.0);
        let beta = lo + t * (alpha - lo);
        prop_assert!(estimates::permode_diff_bound_scan(alpha, beta, delta, 48, &unit()).unwrap().worst_ratio <= 1.0);
    }

    #[test]
    fn field_difference_within_bound(seed in any::<u64>(), alpha in 0.76f64..1.25, delta in 0.1f64..1.0, t in 0.0f64..1.0, s in 0.0f64..1.0) {
        let lo = (alpha - delta / 2.0).max(delta / 2.0);
        let beta = lo + t * (alpha - lo);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_field(GridSpec::new(16).unwrap(), &mut rng, 1.0, 7, false).unwrap();
        let c = estimates::frac_lap_diff_check(&u, alpha, beta, delta, s, &unit()).unwrap();
        prop_assert!(c.ratio <= 1.0);
        let swapped = estimates::frac_lap_diff_check(&u, beta, alpha, delta, s, &unit()).unwrap();
        prop_assert!(swapped.swapped || alpha == beta);
        prop_assert_eq!(swapped.lhs, c.lhs);
    }

    #[test]
    fn gronwall_bound_monotone(f0 in 0.0f64..1e-2, df in 0.0f64..1e-2, g in 0.0f64..5.0, gap in 0.0f64..0.125) {
        let times = grid_times(0.5, 20);
        let forcing = ForcingSeries {
            gradient: times.iter().map(|t| g * (1.0 + t)).collect(),
            high: times.iter().map(|t| g * (1.0 - 0.5 * t)).collect(),
            times,
        };
        let spec = GronwallSpec::from_calculators(1.0, 1.0, 1.0 - gap, 1.0, &unit(), forcing).unwrap();
        let lo = estimates::gronwall_bound(&spec, f0).unwrap();
        let hi = estimates::gronwall_bound(&spec, f0 + df).unwrap();
        prop_assert!(lo.values[0] == f0);
        prop_assert!(lo.values.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a <= b));
    }

    #[test]
    fn radius_shrinks_with_size(m in 0.0f64..3.0, dm in 0.0f64..3.0, delta in 0.05f64..1.0) {
        let a = estimates::epsilon_54(m, delta, &unit()).unwrap();
        let b = estimates::epsilon_54(m + dm, delta, &unit()).unwrap();
        prop_assert!(b.log10_value <= a.log10_value);
    }

    #[test]
    fn tstar_cap_below_threshold(m in 0.01f64..10.0, alpha in 1.0f64..1.249, cb in 0.2f64..3.0) {
        let ledger = ConstantsLedger { c_bar: cb, ..unit() };
        let t = estimates::tstar(m, alpha, &ledger).unwrap();
        let cap = t.cap.unwrap();
        prop_assert_eq!(t.cap_below_threshold, Some(true));
        let q = 5.0 - 4.0 * alpha;
        if cap > 0.0 {
            let (lc, lt) = (cap.ln(), t.threshold.ln());
            let expect = 2.0 / q * q.ln();
            prop_assert!(((lc - lt) - expect).abs() <= 1e-12 * (1.0 + lc.abs() + lt.abs()));
        }
    }

    #[test]
    fn local_radius_positive(alpha in 0.8f64..1.25, frac in 0.05f64..1.0, delta in 0.1f64..1.0, n in 0.0f64..2.0) {
        let s = admissible_s(alpha, frac);
        let inp = estimates::LocalRadiusInputs {
            s,
            alpha,
            beta: alpha,
            delta,
            horizon: 1.0,
            norm_s1: n,
            norm_high: n,
        };
        let e = estimates::epsilon_local(&inp, &unit()).unwrap();
        prop_assert!(e > 0.0 && e <= 0.5 * delta);
    }
}
