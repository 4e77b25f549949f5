use lbfilm_core::grid::{Field, Grid};
use lbfilm_core::model::{self, ModelParams};
use proptest::prelude::*;

fn params(l: f64, c0: f64, nu: f64) -> ModelParams<f64> {
    ModelParams::new(l, c0).with_nu(nu)
}

#[test]
fn energy_of_zero_field_closed_forms() {
    let g = Grid::new(101, 0.0, 2.0).unwrap();
    let u = Field::zeros(g);
    assert!((model::energy(&u, &params(2.0, 0.0, 0.0)) - 0.5).abs() < 1e-14);
    let p = params(2.0, -0.3, 0.7);
    let zeta: Vec<f64> = g.nodes().iter().map(|&x| model::meniscus(x, &p)).collect();
    let expect = 2.0 * 0.25 * (0.09f64 - 1.0).powi(2) + 0.7 * -0.3 * g.integrate(&zeta);
    assert!((model::energy(&u, &p) - expect).abs() < 1e-13);
    let e1 = model::energy_e1(&u, &p).unwrap();
    assert!((e1 - 2.0 * 0.25 * (0.09f64 - 1.0).powi(2)).abs() < 1e-13);
}

#[test]
fn inverse_laplacian_of_first_eigenfunction() {
    let l = 1.5;
    let g = Grid::new(2049, 0.0, l).unwrap();
    let k = std::f64::consts::PI / (2.0 * l);
    let u = Field::from_fn(g, |x| (k * x).sin()).unwrap();
    let term = model::inverse_laplacian_energy(&u).unwrap();
    let expect = g.dot(u.values(), u.values()) / (k * k);
    assert!((term - expect).abs() < 1e-6 * expect);
}

#[test]
fn chemical_potential_second_order_on_quartic() {
    // the central stencil is exact on cubics, so a quartic exposes the h^2 term
    let p = params(1.0, 0.0, 0.0);
    let err = |n: usize| {
        let g = Grid::new(n, 0.0, 1.0).unwrap();
        let u = Field::from_fn(g, |x: f64| x.powi(4)).unwrap();
        let mu = model::chemical_potential(&u, &p).unwrap();
        (1..n - 1)
            .map(|i| {
                let x = g.x(i);
                let s = x.powi(4);
                let exact = -12.0 * x * x + s * s * s - s;
                (mu.values()[i] - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    let ratio = err(33) / err(65);
    assert!((ratio - 4.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn v_max_is_between_bisection_bounds() {
    let v: f64 = model::v_max();
    let (mut a, mut b) = (1.0f64, 2.0f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m * m * m - m - 1.0 > 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    assert!((v - a).abs() < 1e-12);
    assert!(v > 1.3 && v < 1.33);
    assert!((v * v * v - v - 1.0).abs() < 1e-12);
}

#[test]
fn shooting_bounds_at_unit_concentration() {
    for c0 in [1.0f64, -1.0] {
        let (zl, zr) = model::shooting_bounds(c0);
        assert_eq!(zl, 0.0);
        assert!(zr > 0.0);
    }
}

proptest! {
    #[test]
    fn meniscus_decreasing_and_bounded(l in 0.1f64..20.0, frac in 0.1f64..0.9, width in 0.01f64..0.5) {
        let p = ModelParams::new(l, -0.3).with_meniscus(frac * l, width * l);
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let x = l * i as f64 / 999.0;
            let z = model::meniscus(x, &p);
            prop_assert!((-1.0..=0.0).contains(&z));
            prop_assert!(z <= prev);
            prev = z;
        }
        let far = model::meniscus(0.0, &p) - model::meniscus(l, &p);
        prop_assert!(far > 0.0);
    }

    #[test]
    fn dw_ds_matches_difference_quotient(x in 0.0f64..5.0, s in -2.0f64..2.0, c0 in -0.9f64..0.0, nu in 0.0f64..2.0) {
        let p = params(5.0, c0, nu);
        let d = 1e-5;
        let fd = (model::potential_w(x, s + d, &p) - model::potential_w(x, s - d, &p)) / (2.0 * d);
        let exact = model::dw_ds(x, s, &p);
        prop_assert!((fd - exact).abs() <= 1e-7 * exact.abs().max(1.0));
    }

    #[test]
    fn inverse_laplacian_is_symmetric(a in prop::collection::vec(-1.0f64..1.0, 33), b in prop::collection::vec(-1.0f64..1.0, 33)) {
        let g = Grid::new(33, 0.0, 1.3).unwrap();
        let mut a = a;
        let mut b = b;
        a[0] = 0.0;
        b[0] = 0.0;
        let pa = g.solve_poisson(&a).unwrap();
        let pb = g.solve_poisson(&b).unwrap();
        let lhs = g.dot(&a, &pb);
        let rhs = g.dot(&b, &pa);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn e1_is_nonnegative(v in prop::collection::vec(-2.0f64..2.0, 17), c0 in -0.9f64..0.0, nu in 0.0f64..2.0) {
        let g = Grid::new(17, 0.0, 2.0).unwrap();
        let mut v = v;
        v[0] = 0.0;
        let u = Field::new(g, v).unwrap();
        prop_assert!(model::energy_e1(&u, &params(2.0, c0, nu)).unwrap() >= 0.0);
    }

    #[test]
    fn shooting_bounds_bracket_zero(c0 in -5.0f64..5.0) {
        let (zl, zr) = model::shooting_bounds(c0);
        prop_assert!(zl <= 0.0 && 0.0 <= zr);
    }

    #[test]
    fn sos_identity_holds(t in -1e3f64..1e3) {
        let (lhs, rhs) = model::sos_identity(t);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs());
    }
}
