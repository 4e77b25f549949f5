use lbfilm_core::model::{self, ModelParams};
use lbfilm_core::shoot::{self, BranchOptions, ShootOptions, ZeroStart};
use proptest::prelude::*;

mod common;
use common::{fold_params, rk4_miss as rk4_oracle};

#[test]
fn miss_agrees_with_rk4_without_meniscus() {
    let p = ModelParams::<f64>::new(1.0, -0.3).with_nu(0.0);
    let (f, dzf) = shoot::shoot_f(&p, 0.0, 1e-12).unwrap();
    let (fo, dzo) = rk4_oracle(&p, 0.0, 100_000);
    assert!((f - fo).abs() < 1e-8, "{f} vs {fo}");
    assert!((dzf - dzo).abs() < 1e-8, "{dzf} vs {dzo}");
}

#[test]
fn miss_agrees_with_rk4_with_meniscus() {
    for (l, c0, z) in [(0.5, -0.3, 0.2), (2.0, -0.6, -0.4), (3.0, 0.0, 1.0)] {
        let p = ModelParams::<f64>::new(l, c0);
        let (f, dzf) = shoot::shoot_f(&p, z, 1e-12).unwrap();
        let (fo, dzo) = rk4_oracle(&p, z, 20_000);
        let scale = 1.0 + fo.abs();
        assert!((f - fo).abs() < 1e-8 * scale, "L={l}: {f} vs {fo}");
        assert!((dzf - dzo).abs() < 1e-8 * (1.0 + dzo.abs()), "L={l}: {dzf} vs {dzo}");
    }
}

#[test]
fn derivative_matches_difference_quotient() {
    let p = ModelParams::<f64>::new(1.7, -0.3);
    for z in [-0.5f64, 0.0, 0.3, 0.9] {
        let d = 1e-5;
        let (fp, _) = shoot::shoot_f(&p, z + d, 1e-12).unwrap();
        let (fm, _) = shoot::shoot_f(&p, z - d, 1e-12).unwrap();
        let (_, dzf) = shoot::shoot_f(&p, z, 1e-12).unwrap();
        let fd = (fp - fm) / (2.0 * d);
        assert!((fd - dzf).abs() < 1e-6 * (1.0 + dzf.abs()), "z={z}: {fd} vs {dzf}");
    }
}

#[test]
fn sampled_trajectory_ends_at_the_miss() {
    let p = ModelParams::<f64>::new(1.2, -0.3);
    let sol = shoot::integrate_ivp(&p, 0.4, 1e-11, 257).unwrap();
    assert_eq!(sol.v.len(), 257);
    assert_eq!(sol.v.values()[0], -0.3);
    assert_eq!(sol.vy.values()[0], 0.4);
    assert_eq!(*sol.vy.values().last().unwrap(), sol.f);
    assert_eq!(*sol.hy.values().last().unwrap(), sol.dzf);
}

#[test]
fn default_parameters_have_one_state_at_unit_length() {
    let cat = shoot::find_steady_states(&ModelParams::<f64>::new(1.0, -0.3), &ShootOptions::default()).unwrap();
    assert_eq!(cat.states.len(), 1);
    let s = &cat.states[0];
    assert!(s.nondegenerate);
    assert!(s.u.values()[0].abs() < 1e-14);
    assert!(s.ux.values().last().unwrap().abs() < 1e-9);
    assert!(s.f.unwrap().abs() < 1e-10);
}

#[test]
fn state_counts_across_the_folds() {
    let opts = ShootOptions::default();
    for (l, count) in [(1.5, 1), (3.0, 3), (5.5, 5)] {
        let cat = shoot::find_steady_states(&fold_params(l), &opts).unwrap();
        assert_eq!(cat.states.len(), count, "L={l}");
        assert!(cat.states.iter().all(|s| s.nondegenerate));
    }
}

#[test]
fn symmetric_potential_gives_symmetric_catalog() {
    let p = ModelParams::<f64>::new(4.0, 0.0).with_nu(0.0);
    let cat = shoot::find_steady_states(&p, &ShootOptions::default()).unwrap();
    assert!(cat.states.len() >= 3);
    for s in &cat.states {
        assert!(
            cat.states.iter().any(|t| (t.z + s.z).abs() < 1e-7),
            "no mirror for z={}",
            s.z
        );
    }
}

#[test]
fn fine_output_resolves_chemical_potential() {
    let opts = ShootOptions {
        n_out: 4097,
        ..ShootOptions::default()
    };
    let cat = shoot::find_steady_states(&ModelParams::<f64>::new(1.0, -0.3), &opts).unwrap();
    assert!(cat.states[0].mu_residual < 1e-6, "{}", cat.states[0].mu_residual);
}

#[test]
fn chemical_potential_residual_shrinks_quadratically() {
    let res = |n| {
        let opts = ShootOptions {
            n_out: n,
            ..ShootOptions::default()
        };
        shoot::find_steady_states(&ModelParams::<f64>::new(2.0, -0.3), &opts)
            .unwrap()
            .states[0]
            .mu_residual
    };
    let ratio = res(257) / res(513);
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn catalog_is_deterministic() {
    let opts = ShootOptions::default();
    let a = shoot::find_steady_states(&fold_params(5.5), &opts).unwrap();
    let b = shoot::find_steady_states(&fold_params(5.5), &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn refining_the_scan_never_loses_states() {
    let mut prev = 0;
    for n_scan in [64, 128, 256, 512] {
        let opts = ShootOptions {
            n_scan,
            ..ShootOptions::default()
        };
        let k = shoot::find_steady_states(&fold_params(5.5), &opts)
            .unwrap()
            .states
            .len();
        assert!(k >= prev, "n_scan={n_scan}: {k} < {prev}");
        prev = k;
    }
    assert_eq!(prev, 5);
}

#[test]
fn advection_is_rejected_by_the_catalog() {
    let p = ModelParams::<f64>::new(1.0, -0.3).with_beta(0.1);
    assert!(shoot::find_steady_states(&p, &ShootOptions::default()).is_err());
}

#[test]
fn guess_start_polishes_to_the_catalog_state() {
    let opts = ShootOptions::default();
    let p = ModelParams::<f64>::new(1.0, -0.3);
    let cat = shoot::find_steady_states(&p, &opts).unwrap();
    let z0 = cat.states[0].z;
    let s = shoot::polish_zero(&p, ZeroStart::Guess(z0 + 1e-3), &opts).unwrap();
    assert!((s.z - z0).abs() < 1e-9);
}

#[test]
fn branch_point_is_a_double_zero_of_the_oracle() {
    let scan = shoot::detect_branch_points(
        &fold_params(1.0),
        1.5,
        2.5,
        21,
        &ShootOptions::default(),
        &BranchOptions::default(),
    )
    .unwrap();
    assert_eq!(scan.points.len(), 1, "{:?}", scan.points);
    let bp = scan.points[0];
    assert!(bp.l_star > 1.85 && bp.l_star < 2.0);
    let (f, dzf) = rk4_oracle(&fold_params(bp.l_star), bp.z_star, 20_000);
    assert!(f.abs() < 1e-6, "f {f}");
    assert!(dzf.abs() < 1e-5, "dzf {dzf}");
    assert!(bp.second_deriv_dz2f.abs() > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steady_states_stay_inside_the_slope_bracket(l in 0.1f64..3.0, c0 in -0.9f64..0.0, nu in 0.0f64..=1.0) {
        let p = ModelParams::<f64>::new(l, c0).with_nu(nu);
        let opts = ShootOptions { n_scan: 128, ..ShootOptions::default() };
        let cat = shoot::find_steady_states(&p, &opts).unwrap();
        prop_assert!(!cat.states.is_empty());
        let (zl, zr) = model::shooting_bounds(c0);
        for s in &cat.states {
            prop_assert!(s.z >= l * zl - 1e-9 && s.z <= l * zr + 1e-9, "z={} outside [{}, {}]", s.z, l * zl, l * zr);
            let sol = shoot::integrate_ivp(&p, s.z, 1e-10, 257).unwrap();
            let tol = shoot::attainable_tol(1e-8, s.z, sol.dzf);
            let rep = shoot::check_persistence_bounds(&sol, tol, 1e-8);
            prop_assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn miss_is_odd_for_the_symmetric_potential(l in 0.1f64..3.0, z in -1.0f64..1.0) {
        let p = ModelParams::<f64>::new(l, 0.0).with_nu(0.0);
        let (a, da) = shoot::shoot_f(&p, z, 1e-12).unwrap();
        let (b, db) = shoot::shoot_f(&p, -z, 1e-12).unwrap();
        prop_assert!((a + b).abs() < 1e-9 * (1.0 + a.abs()));
        prop_assert!((da - db).abs() < 1e-9 * (1.0 + da.abs()));
    }
}

#[test]
fn polish_from_a_stale_guess_stays_finite() {
    // the steepest state at L = 3 used as the guess at L = 3.15; a full
    // Newton step from there leaves the region where the IVP stays bounded
    let opts = ShootOptions::default();
    let cat = shoot::find_steady_states(&fold_params(3.0), &opts).unwrap();
    let z0 = cat.states.iter().map(|s| s.z).fold(f64::INFINITY, f64::min);
    let p = fold_params(3.15);
    let s = shoot::polish_zero(&p, ZeroStart::Guess(z0), &opts).unwrap();
    let (f, _) = rk4_oracle(&p, s.z, 20_000);
    assert!(f.abs() < 1e-6, "oracle miss {f}");
    let (lo, hi) = shoot::scan_interval(&p, opts.margin_frac);
    assert!(s.z >= lo && s.z <= hi);
}
