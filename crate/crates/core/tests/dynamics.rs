use fracns::dynamics::{self, RunStatus, Solver, SolverParams};
use fracns::harness::{self, random_field};
use fracns::spectral::{self, VOLUME};
use fracns::{GridSpec, NormConvention, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn divfree(n: usize, seed: u64, cutoff: i64) -> SpectralField {
    let grid = GridSpec::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    spectral::leray_project(&random_field(grid, &mut rng, 1.0, cutoff, false).unwrap())
}

fn rel_l2(a: &SpectralField, b: &SpectralField) -> f64 {
    spectral::sobolev_norm(&(a - b), NormConvention::L2) / spectral::sobolev_norm(b, NormConvention::L2)
}

/// `−P[i k_j Σ_{p+q=k} û_j(p) û_i(q)]` by direct summation over mode pairs.
fn convolution_oracle(u: &SpectralField) -> SpectralField {
    let grid = *u.grid();
    let support: Vec<([i64; 3], [Complex64; 3])> = (0..grid.len())
        .map(|i| (grid.mode(i), u.coeff(i)))
        .filter(|(_, c)| c.iter().any(|z| z.norm() > 0.0))
        .collect();
    let mut out = SpectralField::zeros(grid);
    let mut acc = vec![[Complex64::default(); 3]; grid.len()];
    for (p, up) in &support {
        for (q, uq) in &support {
            let k = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
            let Some(idx) = grid.index_of(k) else { continue };
            if !grid.in_mask(idx) || k == [0, 0, 0] {
                continue;
            }
            let kdotu: Complex64 = (0..3).map(|j| up[j] * k[j] as f64).sum();
            for i in 0..3 {
                acc[idx][i] += -Complex64::i() * kdotu * uq[i];
            }
        }
    }
    for (idx, v) in acc.iter().enumerate() {
        if idx == 0 {
            continue;
        }
        for c in 0..3 {
            out.component_mut(c)[idx] = v[c];
        }
    }
    spectral::leray_project(&out)
}

#[test]
fn taylor_green_matches_convolution_sum() {
    let u = harness::taylor_green(GridSpec::new(8).unwrap());
    let fast = dynamics::nonlinear_term(&u, 0.0).unwrap();
    let slow = convolution_oracle(&u);
    assert!(!slow.is_zero());
    let grid = *u.grid();
    for i in 0..grid.len() {
        for (a, b) in fast.coeff(i).iter().zip(slow.coeff(i)) {
            assert!((a - b).norm() <= 1e-15, "mode {:?}: {a} vs {b}", grid.mode(i));
        }
    }
}

#[test]
fn random_low_modes_match_convolution_sum() {
    for seed in 0..4 {
        let u = divfree(8, seed, 1);
        let fast = dynamics::nonlinear_term(&u, 0.0).unwrap();
        assert!(rel_l2(&fast, &convolution_oracle(&u)) <= 1e-13);
    }
}

#[test]
fn shear_has_no_nonlinearity() {
    let mut u = SpectralField::zeros(GridSpec::new(16).unwrap());
    let z = Complex64::default();
    u.set_mode([0, 1, 0], [Complex64::new(0.0, -0.5), z, z]).unwrap();
    for eps in [0.0, 0.3] {
        assert!(dynamics::nonlinear_term(&u, eps).unwrap().max_abs_coeff() <= 1e-16);
    }
}

#[test]
fn self_convergence_is_fourth_order() {
    let grid = GridSpec::new(16).unwrap();
    let u0 = harness::taylor_green(grid);
    let solve = |dt: f64| {
        let p = SolverParams {
            alpha: 1.0,
            dt,
            t_end: 0.4,
            ..SolverParams::default()
        };
        Solver::new(grid, p).unwrap().run(&u0).unwrap().final_state.unwrap()
    };
    let reference = solve(0.05 / 16.0);
    let coarse = rel_l2(&solve(0.05), &reference);
    let fine = rel_l2(&solve(0.025), &reference);
    let ratio = coarse / fine;
    assert!((12.0..20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn strong_mollification_approaches_linear_flow() {
    let grid = GridSpec::new(16).unwrap();
    let u0 = divfree(16, 5, 3).scaled(5.0);
    let solve = |eps: f64, nonlinear: bool| {
        let p = SolverParams {
            alpha: 1.0,
            dt: 2e-3,
            t_end: 0.1,
            mollifier_eps: eps,
            nonlinear,
            ..SolverParams::default()
        };
        Solver::new(grid, p).unwrap().run(&u0).unwrap().final_state.unwrap()
    };
    let linear = solve(0.0, false);
    let gaps: Vec<f64> = [1.0, 2.0, 4.0, 8.0].iter().map(|&e| rel_l2(&solve(e, true), &linear)).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    assert!(gaps[3] < 1e-10, "{gaps:?}");
}

#[test]
fn linear_energy_decay_is_exact() {
    let grid = GridSpec::new(16).unwrap();
    let mut u0 = SpectralField::zeros(grid);
    let z = Complex64::default();
    u0.set_mode([2, 0, 0], [z, Complex64::new(0.0, -0.5), z]).unwrap();
    let p = SolverParams {
        alpha: 1.25,
        dt: 0.01,
        t_end: 0.5,
        nonlinear: false,
        ..SolverParams::default()
    };
    let rep = Solver::new(grid, p).unwrap().run(&u0).unwrap();
    let rate = 2.0 * 4f64.powf(1.25);
    for (t, e) in rep.times.iter().zip(&rep.energy) {
        let exact = rep.energy[0] * (-rate * t).exp();
        assert!((e - exact).abs() <= 1e-13 * exact);
    }
    assert!((rep.energy[0] - VOLUME / 4.0).abs() < 1e-12);
}

#[test]
fn taylor_green_reference_run() {
    let grid = GridSpec::new(32).unwrap();
    let u0 = harness::taylor_green(grid);
    let p = SolverParams {
        alpha: 1.25,
        dt: 1e-3,
        t_end: 1.0,
        ..SolverParams::default()
    };
    let rep = Solver::new(grid, p).unwrap().run(&u0).unwrap();
    assert_eq!(rep.status, RunStatus::Completed);
    let h1 = &rep.sobolev_norms.iter().find(|s| s.order == 1.0).unwrap().values;
    let growth = h1.iter().fold(0.0f64, |m, v| m.max(*v)) / h1[0];
    assert!(growth < 2.0);
    let defect = dynamics::energy_budget_check(&rep);
    assert!(defect <= 1e-8 * rep.energy[0], "defect {defect:e}");
    assert!(rep.energy.windows(2).all(|w| w[1] <= w[0]));
    let u = rep.final_state.as_ref().unwrap();
    assert_eq!(u.coeff(0), [Complex64::default(); 3]);
    assert!(u.divergence_residual() <= 1e-10);
    // Frozen from the reference run.
    let e_end = *rep.energy.last().unwrap();
    assert!((e_end - TG_FINAL_ENERGY).abs() <= 1e-10 * TG_FINAL_ENERGY, "final energy {e_end:.17e}");
}

const TG_FINAL_ENERGY: f64 = 1.152_278_901_134_559_8e-2;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn transport_is_skew(seed in any::<u64>(), eps in 0.0f64..1.0) {
        let u = divfree(16, seed, 5);
        let n = dynamics::nonlinear_term(&u, eps).unwrap();
        prop_assert!(n.divergence_residual() <= 1e-12);
        let ip = spectral::inner_product(&n, &u).unwrap();
        let l2 = spectral::sobolev_norm_sq(&u, NormConvention::L2);
        let h1 = spectral::sobolev_norm(&u, NormConvention::Inhomogeneous(1.0));
        prop_assert!(ip.abs() <= 1e-12 * l2 * h1);
    }

    #[test]
    fn quadrature_integrates_cubics(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0, steps in 3usize..12) {
        let h = 0.1;
        let f: Vec<f64> = (0..=steps).map(|i| { let t = i as f64 * h; a + b * t + c * t * t * t }).collect();
        let q = dynamics::cumulative_quadrature(&f, h);
        for (i, v) in q.iter().enumerate() {
            let t = i as f64 * h;
            let exact = a * t + b * t * t / 2.0 + c * t.powi(4) / 4.0;
            prop_assert!((v - exact).abs() <= 1e-12);
        }
    }
}
