use lbfilm_core::continuation::{self, ContinuationOptions, MixedState, NewtonOptions, KL, KU};
use lbfilm_core::grid::{Field, Grid};
use lbfilm_core::model::ModelParams;
use lbfilm_core::shoot::{self, ShootOptions, SteadyState};
use lbfilm_core::Error;

fn fold_params(l: f64) -> ModelParams<f64> {
    ModelParams::<f64>::new(l, 0.0).with_nu(0.1)
}

fn states(p: &ModelParams<f64>, n_out: usize) -> Vec<SteadyState<f64>> {
    let opts = ShootOptions {
        n_out,
        ..ShootOptions::default()
    };
    shoot::find_steady_states(p, &opts).unwrap().states
}

/// Column-by-column central differences of the residual.
fn fd_jacobian(grid: &Grid<f64>, x: &[f64], p: &ModelParams<f64>) -> Vec<Vec<f64>> {
    let m = x.len();
    let mut cols = vec![vec![0.0; m]; m];
    for j in 0..m {
        let d = 1e-6 * (1.0 + x[j].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += d;
        xm[j] -= d;
        let rp = continuation::assemble_steady_residual(grid, &xp, p).unwrap();
        let rm = continuation::assemble_steady_residual(grid, &xm, p).unwrap();
        for i in 0..m {
            cols[j][i] = (rp[i] - rm[i]) / (2.0 * d);
        }
    }
    cols
}

#[test]
fn jacobian_matches_difference_quotients() {
    let cases = [
        (ModelParams::<f64>::new(1.0, -0.3), 0),
        (fold_params(3.0), 0),
        (fold_params(3.0), 2),
        (fold_params(5.5), 1),
        (ModelParams::<f64>::new(2.0, -0.6).with_beta(0.2), 0),
    ];
    for (p, k) in cases {
        let base = p.with_beta(0.0);
        for n in [9, 17, 33] {
            let ss = &states(&base, n)[k];
            let grid = Grid::new(n, 0.0, p.length).unwrap();
            let mut x = MixedState::from_steady(ss, grid).pack();
            // perturb mu so the advection and mu rows are exercised away from zero
            for (i, v) in x.iter_mut().enumerate().skip(3).step_by(2) {
                *v += 0.01 * (i as f64).sin();
            }
            let j = continuation::steady_jacobian(&grid, &x, &p).unwrap();
            assert_eq!(j.bandwidths(), (KL, KU));
            let fd = fd_jacobian(&grid, &x, &p);
            let scale = j.max_abs();
            for (c, col) in fd.iter().enumerate() {
                for (r, &v) in col.iter().enumerate() {
                    assert!(
                        (j.get(r, c) - v).abs() < 1e-7 * scale,
                        "L={} n={n} entry ({r},{c}): {} vs {v}",
                        p.length,
                        j.get(r, c)
                    );
                }
            }
        }
    }
}

#[test]
fn pack_and_unpack_are_inverse() {
    let g = Grid::new(11, 0.0, 2.0).unwrap();
    let u = Field::from_fn(g, |x: f64| x.sin()).unwrap();
    let mu = Field::from_fn(g, |x: f64| x * x).unwrap();
    let s = MixedState::new(u, mu).unwrap();
    let x = s.pack();
    assert_eq!(x.len(), 22);
    assert_eq!(MixedState::unpack(g, &x).unwrap(), s);
}

#[test]
fn newton_converges_quadratically_to_discrete_state() {
    let ss = &states(&ModelParams::new(1.5, -0.3), 257)[0];
    let sol = continuation::discrete_from_shooting(ss, 257, &NewtonOptions::default()).unwrap();
    assert!(sol.residual < 1e-10);
    assert!(sol.iterations <= 6, "{} iterations", sol.iterations);
    assert!(sol.sigma_min > 1e-3);
    assert_eq!(sol.state.u.values()[0], 0.0);
    assert!(sol.mu.values().iter().all(|m| m.abs() < 1e-9));
}

#[test]
fn discrete_states_converge_at_second_order() {
    let p = ModelParams::new(2.0, -0.3);
    let fine = &states(&p, 4097)[0];
    let err = |n: usize| {
        let sol = continuation::discrete_from_shooting(fine, n, &NewtonOptions::default()).unwrap();
        let stride = 4096 / (n - 1);
        sol.state
            .u
            .values()
            .iter()
            .enumerate()
            .map(|(i, &u)| (u - fine.u.values()[i * stride]).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (err(65), err(129), err(257));
    for (a, b) in [(e1, e2), (e2, e3)] {
        let order = (a / b).log2();
        assert!((1.8..=2.2).contains(&order), "order {order} from {a:e}, {b:e}");
    }
}

#[test]
fn newton_refuses_a_fold() {
    let p = fold_params(1.9339193686);
    let opts = ShootOptions {
        n_out: 513,
        ..ShootOptions::default()
    };
    let ss = shoot::state_from_shot(&p, -0.66018, &opts).unwrap();
    let r = continuation::discrete_from_shooting(&ss, 513, &NewtonOptions::default());
    assert!(matches!(r, Err(Error::SingularMatrix(_))), "{r:?}");
}

#[test]
fn beta_branch_scales_linearly() {
    let ss = &states(&ModelParams::new(1.0, -0.3), 513)[0];
    let targets = [0.0025, 0.005, 0.01];
    let b = continuation::continue_in_beta_strict(ss, &targets, &ContinuationOptions::default()).unwrap();
    assert!(b.terminated.is_none());
    assert_eq!(b.ratios.len(), 3);
    let r: Vec<f64> = b.ratios.iter().map(|r| r.1).collect();
    for w in r.windows(2) {
        assert!((w[0] - w[1]).abs() < 0.01 * w[0], "{r:?}");
    }
    assert_eq!(b.reached(), Some(0.01));
    assert!(b.samples.iter().all(|s| s.residual < 1e-9));
}

#[test]
fn continuation_in_beta_is_continuous() {
    let ss = &states(&ModelParams::new(1.0, -0.3), 257)[0];
    let opts = ContinuationOptions {
        n: 257,
        ..ContinuationOptions::default()
    };
    let b = continuation::continue_in_beta(ss, &[1e-8, 1e-6], &opts).unwrap();
    let d: Vec<f64> = b.samples.iter().filter_map(|s| s.distance).collect();
    assert!(d.last().unwrap() < &1e-5);
    assert!(d.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn length_branch_stops_at_the_fold() {
    let seeds = states(&fold_params(2.5), 513);
    assert_eq!(seeds.len(), 3);
    let lengths: Vec<f64> = (1..=40).map(|k| 2.5 - 0.025 * k as f64).collect();
    let mut stopped = 0;
    for s in &seeds {
        let b = continuation::continue_in_l(s, &lengths, &ShootOptions::default()).unwrap();
        if b.terminated.is_some() {
            stopped += 1;
            let reached = b.reached().unwrap();
            assert!(reached > 1.9339 && reached < 1.9339 + 0.05, "stopped at {reached}");
        } else {
            assert_eq!(b.reached(), Some(lengths[39]));
        }
    }
    // two of the three states meet in the fold; the third continues
    assert_eq!(stopped, 2);
}

#[test]
fn h4_norm_of_a_polynomial() {
    let g = Grid::new(2049, 0.0, 1.0).unwrap();
    let v: Vec<f64> = g.nodes().iter().map(|&x| x * x).collect();
    // L2: 1/5, H1: 4/3, H2: 4, higher derivatives vanish
    let exact = (0.2f64 + 4.0 / 3.0 + 4.0).sqrt();
    let got = continuation::h4_norm(&g, &v).unwrap();
    assert!((got - exact).abs() < 1e-2, "{got} vs {exact}");
}
