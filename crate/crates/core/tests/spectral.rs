use fracns::harness::random_field;
use fracns::snapshot;
use fracns::spectral::{self, VOLUME};
use fracns::{Execution, Fft3, GridSpec, NormConvention, SpectralField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(n: usize, seed: u64, slope: f64, cutoff: i64) -> SpectralField {
    let grid = GridSpec::new(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(grid, &mut rng, slope, cutoff, false).unwrap()
}

fn rel_diff(a: &SpectralField, b: &SpectralField) -> f64 {
    let d = spectral::sobolev_norm(&(a - b), NormConvention::L2);
    d / spectral::sobolev_norm(b, NormConvention::L2).max(f64::MIN_POSITIVE)
}

fn shear(k: i64, scale: f64) -> SpectralField {
    // scale·sin(k x₁) e₂
    let mut u = SpectralField::zeros(GridSpec::new(16).unwrap());
    let z = Complex64::default();
    u.set_mode([k, 0, 0], [z, Complex64::new(0.0, -0.5 * scale), z]).unwrap();
    u
}

#[test]
fn laplacian_examples() {
    for alpha in [0.0, 0.3, 1.0, 1.4] {
        assert!(rel_diff(&spectral::frac_laplacian(&shear(1, 1.0), alpha).unwrap(), &shear(1, 1.0)) < 1e-15);
    }
    assert!(rel_diff(&spectral::frac_laplacian(&shear(2, 1.0), 0.5).unwrap(), &shear(2, 2.0)) < 1e-15);
    assert!(rel_diff(&spectral::frac_laplacian(&shear(2, 1.0), 1.0).unwrap(), &shear(2, 4.0)) < 1e-15);
    assert!(spectral::frac_laplacian(&shear(2, 1.0), -0.1).is_err());
}

#[test]
fn norm_conventions_on_shear() {
    // ‖sin 2x₁‖²_{L²} = (2π)³/2
    let u = shear(2, 1.0);
    let l2 = spectral::sobolev_norm_sq(&u, NormConvention::L2);
    assert!((l2 - VOLUME / 2.0).abs() < 1e-12 * l2);
    let h = spectral::sobolev_norm_sq(&u, NormConvention::Homogeneous(1.5));
    assert!((h - 8.0 * VOLUME / 2.0).abs() < 1e-12 * h);
    let inh = spectral::sobolev_norm_sq(&u, NormConvention::Inhomogeneous(1.0));
    assert!((inh - 5.0 * VOLUME / 2.0).abs() < 1e-12 * inh);
}

#[test]
fn dealias_mask() {
    let grid = GridSpec::new(16).unwrap();
    let z = Complex64::default();
    let one = Complex64::new(1.0, 0.0);
    let mut inside = SpectralField::zeros(grid);
    inside.set_mode([5, -5, 3], [z, z, one]).unwrap();
    assert_eq!(spectral::dealias(&inside), inside);
    let mut outside = SpectralField::zeros(grid);
    outside.set_mode([6, 0, 0], [z, one, z]).unwrap();
    assert!(spectral::dealias(&outside).is_zero());
    let mixed = &inside + &outside;
    assert_eq!(spectral::dealias(&mixed), inside);
}

#[test]
fn parseval_matches_quadrature() {
    let u = field(16, 3, 1.0, 7);
    let fft = Fft3::new(16, Execution::default());
    let phys = u.to_physical(&fft);
    let cell = u.grid().spacing().powi(3);
    let quad: f64 = phys.iter().flatten().map(|x| x * x).sum::<f64>() * cell;
    let spec = spectral::sobolev_norm_sq(&u, NormConvention::L2);
    assert!((quad - spec).abs() <= 1e-10 * spec);
}

#[test]
fn partition_independent_norms() {
    let u = field(32, 9, 1.5, 10);
    let grid = *u.grid();
    let seq = Fft3::new(32, Execution::Sequential);
    let par = Fft3::new(32, Execution::default());
    let a = SpectralField::from_physical(grid, &u.to_physical(&seq), &seq).unwrap();
    let b = SpectralField::from_physical(grid, &u.to_physical(&par), &par).unwrap();
    assert_eq!(a, b);
    assert!(rel_diff(&a, &u) < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn semigroup(seed in any::<u64>(), alpha in 0.0f64..1.5) {
        let u = field(8, seed, 1.0, 3);
        let half = spectral::frac_laplacian(&u, alpha / 2.0).unwrap();
        let twice = spectral::frac_laplacian(&half, alpha / 2.0).unwrap();
        let once = spectral::frac_laplacian(&u, alpha).unwrap();
        prop_assert!(rel_diff(&twice, &once) <= 1e-12);
    }

    #[test]
    fn leray_idempotent_and_self_adjoint(a in any::<u64>(), b in any::<u64>()) {
        let u = field(8, a, 0.5, 3);
        let v = field(8, b, 0.5, 3);
        let pu = spectral::leray_project(&u);
        prop_assert!(pu.divergence_residual() <= 1e-12);
        prop_assert!(rel_diff(&spectral::leray_project(&pu), &pu) <= 1e-14);
        let lhs = spectral::inner_product(&pu, &v).unwrap();
        let rhs = spectral::inner_product(&u, &spectral::leray_project(&v)).unwrap();
        let scale = spectral::sobolev_norm(&u, NormConvention::L2) * spectral::sobolev_norm(&v, NormConvention::L2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn mollify_contracts(seed in any::<u64>(), eps in 0.0f64..2.0, s in 0.0f64..2.0) {
        let u = field(8, seed, 1.0, 3);
        let m = spectral::mollify(&u, eps).unwrap();
        let conv = NormConvention::Inhomogeneous(s);
        prop_assert!(spectral::sobolev_norm(&m, conv) <= spectral::sobolev_norm(&u, conv) * (1.0 + 1e-15));
        prop_assert!(m.hermitian_residual() <= 1e-15);
    }

    #[test]
    fn inhomogeneous_norm_monotone(seed in any::<u64>(), s in 0.0f64..3.0, ds in 0.0f64..1.0) {
        let u = field(8, seed, 1.0, 3);
        let lo = spectral::sobolev_norm(&u, NormConvention::Inhomogeneous(s));
        let hi = spectral::sobolev_norm(&u, NormConvention::Inhomogeneous(s + ds));
        prop_assert!(lo <= hi);
    }

    #[test]
    fn interpolation_with_constant_one(seed in any::<u64>(), beta in 0.75f64..1.45, t in 0.0f64..1.0) {
        let u = field(16, seed, 1.0, 5);
        let s = (1.0 - beta).max(0.0) + t * (1.0 - (1.0 - beta).max(0.0));
        let (lhs, rhs) = spectral::gradient_interpolation(&u, s, beta);
        prop_assert!(rhs - lhs >= -1e-12 * rhs);
        let (lhs, rhs) = spectral::critical_interpolation(&u, beta);
        prop_assert!(rhs - lhs >= -1e-12 * rhs);
    }

    #[test]
    fn fft_roundtrip(seed in any::<u64>()) {
        let u = field(8, seed, 0.0, 3);
        let fft = Fft3::new(8, Execution::Sequential);
        let back = SpectralField::from_physical(*u.grid(), &u.to_physical(&fft), &fft).unwrap();
        prop_assert!(rel_diff(&back, &u) <= 1e-14);
    }

    #[test]
    fn snapshot_roundtrip(seed in any::<u64>(), id in 0u8..3, order in 0.0f64..3.0) {
        let u = spectral::leray_project(&field(8, seed, 1.0, 3));
        let norm = NormConvention::from_id(id, order).unwrap();
        let mut bytes = Vec::new();
        snapshot::write_binary(&mut bytes, &u, norm).unwrap();
        let snap = snapshot::read_binary(bytes.as_slice()).unwrap();
        prop_assert_eq!(&snap.field, &u);
        prop_assert_eq!(snap.norm, norm);
        let json = snapshot::from_json(&snapshot::to_json(&u, norm).unwrap()).unwrap();
        prop_assert_eq!(&json.field, &u);
        prop_assert_eq!(json.norm, norm);
    }
}
