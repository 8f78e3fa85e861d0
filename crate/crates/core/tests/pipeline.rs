use nalgebra::DMatrix;
use proptest::prelude::*;
use rkcca::influence::{eif_kcca, ContaminationPoint, ExternalPoint, RhoInfluence};
use rkcca::kcca::{fit_robust_kcca, fit_standard_kcca, fit_weighted_kcca, CcaWeights, KccaOptions, RobustOptions};
use rkcca::kernel::{gram, KernelChoice, KernelSpec};
use rkcca::synth::{gen_mgsd, gen_sfsd, Contamination, MgsdSigma};

fn data(n: usize, d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-3.0f64..3.0, n * d).prop_map(move |v| DMatrix::from_vec(n, d, v))
}

fn paired() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (8usize..25).prop_flat_map(|n| (data(n, 2), data(n, 3)))
}

fn on_simplex(w: &[f64]) -> bool {
    w.iter().all(|&v| v >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() < 1e-9
}

fn permute(m: &DMatrix<f64>, p: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(p[i], j)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn robust_fit_is_well_formed((x, y) in paired()) {
        let kx = gram(&KernelSpec::gaussian(1.5), &x).unwrap();
        let ky = gram(&KernelSpec::gaussian(1.5), &y).unwrap();
        let opts = KccaOptions { components: 2, ..KccaOptions::default() };
        let m = fit_robust_kcca(&kx, &ky, &opts, &RobustOptions::default()).unwrap();
        prop_assert!(m.rho.iter().all(|&r| (0.0..=1.0).contains(&r)));
        prop_assert!(m.rho[0] >= m.rho[1]);
        for w in [&m.weights.xx, &m.weights.yy, &m.weights.xy, &m.centering_x, &m.centering_y] {
            prop_assert!(on_simplex(w));
        }
    }

    #[test]
    fn fits_are_equivariant_under_relabelling((x, y) in paired(), seed in any::<u64>()) {
        let n = x.nrows();
        let mut p: Vec<usize> = (0..n).collect();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            p.swap(i, (s >> 33) as usize % (i + 1));
        }
        let spec = KernelSpec::gaussian(1.5);
        let (kx, ky) = (gram(&spec, &x).unwrap(), gram(&spec, &y).unwrap());
        let (px, py) = (permute(&x, &p), permute(&y, &p));
        let (pkx, pky) = (gram(&spec, &px).unwrap(), gram(&spec, &py).unwrap());
        let opts = KccaOptions::default();
        let a = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let b = fit_standard_kcca(&pkx, &pky, &opts).unwrap();
        prop_assert!((a.rho[0] - b.rho[0]).abs() < 1e-8);
        let ra = fit_robust_kcca(&kx, &ky, &opts, &RobustOptions::default()).unwrap();
        let rb = fit_robust_kcca(&pkx, &pky, &opts, &RobustOptions::default()).unwrap();
        for (i, &pi) in p.iter().enumerate() {
            prop_assert!((rb.weights.xy[i] - ra.weights.xy[pi]).abs() < 1e-7);
        }
    }
}

#[test]
fn external_point_influence_matches_refit_slope() {
    let opts = KccaOptions::default();
    let n = 30;
    for seed in 0..5u64 {
        let d = gen_mgsd(n + 1, Contamination::None, seed, &MgsdSigma::default()).unwrap();
        let y = d.y.unwrap();
        let sx = KernelChoice::gaussian_median().resolve(&d.x.rows(0, n).into_owned()).unwrap();
        let sy = KernelChoice::gaussian_median().resolve(&y.rows(0, n).into_owned()).unwrap();
        let (kxa, kya) = (gram(&sx, &d.x).unwrap(), gram(&sy, &y).unwrap());
        let kx = kxa.view((0, 0), (n, n)).into_owned();
        let ky = kya.view((0, 0), (n, n)).into_owned();
        let model = fit_standard_kcca(&kx, &ky, &opts).unwrap();
        let xr: Vec<f64> = kxa.view((n, 0), (1, n)).iter().copied().collect();
        let yr: Vec<f64> = kya.view((n, 0), (1, n)).iter().copied().collect();
        let point = ContaminationPoint::External(ExternalPoint { kx_row: &xr, kx_self: 1.0, ky_row: &yr, ky_self: 1.0 });
        let inf = eif_kcca(&model, &kx, &ky, 0, &point, RhoInfluence::Regularized).unwrap();
        // Refit on the augmented sample with mass ε on the new point.
        let rho_sq = |e: f64| {
            let mut p = vec![(1.0 - e) / n as f64; n + 1];
            p[n] = e;
            let w = CcaWeights { xx: p.clone(), yy: p.clone(), xy: p.clone() };
            fit_weighted_kcca(&kxa, &kya, &p, &p, w, &opts).unwrap().rho[0].powi(2)
        };
        let eps = 1e-8;
        let slope = (rho_sq(eps) - rho_sq(0.0)) / eps;
        let rel = ((slope - inf.if_rho) / inf.if_rho).abs();
        assert!(rel < 1e-2, "seed {seed}: slope {slope} vs {}", inf.if_rho);
    }
}

#[test]
fn contamination_only_touches_the_listed_rows() {
    let clean = gen_sfsd(200, Contamination::None, 11).unwrap();
    let dirty = gen_sfsd(200, Contamination::mixture5(), 11).unwrap();
    assert_eq!(dirty.contaminated_indices.len(), 10);
    for i in 0..200 {
        let same = clean.x.row(i) == dirty.x.row(i);
        assert_eq!(same, !dirty.contaminated_indices.contains(&i), "row {i}");
    }
}
