use lbfilm_core::grid::Grid;
use lbfilm_core::model::{self, ModelParams};
use lbfilm_core::shoot::{self, ShootOptions, SteadyState};
use lbfilm_core::spectrum::{self, KernelOptions};
use proptest::prelude::*;

mod common;
use common::{fold_params, rk4_trajectory};

fn states(p: &ModelParams<f64>, n_out: usize) -> Vec<SteadyState<f64>> {
    let opts = ShootOptions {
        n_out,
        ..ShootOptions::default()
    };
    shoot::find_steady_states(p, &opts).unwrap().states
}

/// Sign changes of `h'` on `(0, 1)`: by Sturm oscillation this is the number
/// of negative eigenvalues of `-d^2/dy^2 + L^2 W''(v)` with `h(0) = h'(1) = 0`.
fn sturm_count(p: &ModelParams<f64>, z: f64) -> usize {
    let traj = rk4_trajectory(p, z, 20_000);
    traj[1..traj.len() - 1]
        .windows(2)
        .filter(|w| w[0][3] * w[1][3] < 0.0)
        .count()
}

fn negatives(ev: &[num_complex::Complex<f64>]) -> usize {
    ev.iter().filter(|e| e.re < 0.0).count()
}

#[test]
fn morse_index_of_m_matches_oscillation_count() {
    let mut seen = std::collections::BTreeSet::new();
    for l in [1.0, 3.0, 5.5] {
        let p = fold_params(l);
        for s in states(&p, 513) {
            let spec = spectrum::spectrum_m(&s).unwrap();
            assert!(spec.max_abs_imag == 0.0 || spec.imag_ratio() < 1e-12);
            let k = sturm_count(&p, s.z);
            assert_eq!(negatives(&spec.eigenvalues), k, "L={l} z={}", s.z);
            seen.insert(k);
        }
    }
    // the oracle has to see both stable and unstable states to mean anything
    assert!(seen.len() >= 2, "{seen:?}");
}

#[test]
fn unstable_directions_of_l4_match_morse_index_of_m() {
    // -A (A + C) is similar to -A^{1/2} (A + C) A^{1/2}, congruent to -(A + C)
    for s in states(&fold_params(5.5), 257) {
        let m = spectrum::spectrum_m(&s).unwrap();
        let l4 = spectrum::spectrum_l4(&s, 0.0).unwrap();
        let pos = l4.eigenvalues.iter().filter(|e| e.re > 0.0).count();
        assert_eq!(pos, negatives(&m.eigenvalues), "z={}", s.z);
        assert!(l4.max_abs_imag == 0.0 || l4.imag_ratio() < 1e-10);
    }
}

#[test]
fn kernel_indicators_agree_away_from_folds() {
    let opts = KernelOptions::default();
    for s in states(&fold_params(3.0), 513) {
        let k = spectrum::kernel_indicator(&s, &opts).unwrap();
        assert!(k.consistent);
        assert!(k.sigma_min > 1e-2);
        assert!(k.dzf.abs() > 1e-3);
    }
}

#[test]
fn kernel_indicators_agree_at_a_fold() {
    let p = fold_params(1.9339193686);
    let opts = ShootOptions::default();
    let ss = shoot::state_from_shot(&p, -0.66018, &opts).unwrap();
    let k = spectrum::kernel_indicator(&ss, &KernelOptions::default()).unwrap();
    assert!(k.sigma_min < 1e-4, "{}", k.sigma_min);
    assert!(k.dzf.abs() < 1e-4, "{}", k.dzf);
}

#[test]
fn default_state_is_hyperbolic() {
    let s = &states(&ModelParams::new(1.0, -0.3), 257)[0];
    for beta in [0.0, 0.05, 0.5] {
        let g = spectrum::spectral_gap(s, beta, spectrum::default_tol_gap()).unwrap();
        assert!(g.hyperbolic, "beta={beta}: delta {}", g.delta);
    }
    let l4 = spectrum::spectrum_l4(s, 0.0).unwrap();
    assert!(l4.eigenvalues.iter().all(|e| e.re < 0.0));
}

#[test]
fn oversized_problems_are_rejected() {
    let g = Grid::new(spectrum::MAX_DENSE + 2, 0.0, 1.0).unwrap();
    let curv = vec![0.0; g.len()];
    assert!(spectrum::assemble_l4_from(&g, &curv, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn constant_curvature_spectrum_is_closed_form(c in -3.0f64..3.0, l in 0.5f64..3.0, n in 9usize..40) {
        let g = Grid::new(n, 0.0, l).unwrap();
        let a = spectrum::assemble_l4_from(&g, &vec![c; n], 0.0).unwrap();
        let s = spectrum::eigenvalues(&a, spectrum::Operator::L4, 0.0).unwrap();
        let h = g.spacing();
        let m = n - 1;
        let mut exact: Vec<f64> = (1..=m)
            .map(|j| {
                let s = ((2 * j - 1) as f64 * std::f64::consts::PI / (4 * m) as f64).sin();
                let kappa = 4.0 / (h * h) * s * s;
                -kappa * (kappa + c)
            })
            .collect();
        exact.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = exact.iter().fold(1.0f64, |a, b| a.max(b.abs()));
        for (e, x) in s.eigenvalues.iter().zip(&exact) {
            prop_assert!((e.re - x).abs() < 1e-9 * scale, "{} vs {x}", e.re);
        }
    }

    #[test]
    fn advection_leaves_the_trace_and_conjugate_symmetry(beta in 0.0f64..2.0, seed in 0u64..1000) {
        let g = Grid::new(24, 0.0, 1.3).unwrap();
        let curv: Vec<f64> = (0..24).map(|i| ((i as f64 + seed as f64) * 0.7).sin() * 2.0).collect();
        let a0 = spectrum::assemble_l4_from(&g, &curv, 0.0).unwrap();
        let a = spectrum::assemble_l4_from(&g, &curv, beta).unwrap();
        let s = spectrum::eigenvalues(&a, spectrum::Operator::L4, beta).unwrap();
        let trace: f64 = (0..a0.rows()).map(|i| a0[(i, i)]).sum();
        let sum_re: f64 = s.eigenvalues.iter().map(|e| e.re).sum();
        let sum_im: f64 = s.eigenvalues.iter().map(|e| e.im).sum();
        let scale = a.norm();
        prop_assert!((sum_re - trace).abs() < 1e-10 * scale);
        prop_assert!(sum_im.abs() < 1e-10 * scale);
        prop_assert!(s.max_residual < 1e-10);
    }

    #[test]
    fn m_is_symmetric_with_curvature_diagonal(v in prop::collection::vec(-1.3f64..1.3, 6..40), l in 0.1f64..5.0) {
        let m = spectrum::assemble_m_banded(&v, l).unwrap().to_dense();
        let n = v.len();
        let h = 1.0 / (n - 1) as f64;
        for i in 0..m.rows() {
            for j in 0..m.rows() {
                prop_assert_eq!(m[(i, j)], m[(j, i)]);
            }
            let d = 2.0 / (h * h) + l * l * model::double_well_curvature(v[i + 1]);
            prop_assert!((m[(i, i)] - d).abs() <= 1e-12 * d.abs().max(1.0));
        }
    }
}
