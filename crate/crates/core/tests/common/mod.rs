#![allow(dead_code)]

use lbfilm_core::model::{self, ModelParams};

/// Classical RK4 on `v'' = L^2 (v^3 - v + nu zeta(L y))` together with the
/// variational equation `h'' = L^2 (3 v^2 - 1) h`, fixed step on `[0, 1]`
/// from `(c0, z, 0, 1)`. Returns the state `(v, v', h, h')` at every step.
pub fn rk4_trajectory(p: &ModelParams<f64>, z: f64, steps: usize) -> Vec<[f64; 4]> {
    let l = p.length;
    let f = |y: f64, s: [f64; 4]| -> [f64; 4] {
        let v = s[0];
        let zeta = model::meniscus(l * y, p);
        [
            s[1],
            l * l * (v * v * v - v + p.nu * zeta),
            s[3],
            l * l * (3.0 * v * v - 1.0) * s[2],
        ]
    };
    let add = |a: [f64; 4], b: [f64; 4], c: f64| -> [f64; 4] {
        [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2], a[3] + c * b[3]]
    };
    let h = 1.0 / steps as f64;
    let mut s = [p.c0, z, 0.0, 1.0];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    for k in 0..steps {
        let y = k as f64 * h;
        let k1 = f(y, s);
        let k2 = f(y + h / 2.0, add(s, k1, h / 2.0));
        let k3 = f(y + h / 2.0, add(s, k2, h / 2.0));
        let k4 = f(y + h, add(s, k3, h));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push(s);
    }
    out
}

/// `(v'(1), h'(1))` from [`rk4_trajectory`].
pub fn rk4_miss(p: &ModelParams<f64>, z: f64, steps: usize) -> (f64, f64) {
    let end = *rk4_trajectory(p, z, steps).last().unwrap();
    (end[1], end[3])
}

pub fn fold_params(l: f64) -> ModelParams<f64> {
    ModelParams::<f64>::new(l, 0.0).with_nu(0.1)
}
