//! Dormand-Prince 5(4) with step-size control and the fourth-order
//! continuous extension for dense output.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options<T> {
    /// Local error target per step (mixed absolute/relative).
    pub tol: T,
    pub initial_step: T,
    pub min_step: T,
    /// Upper limit on the step size.
    pub max_step: T,
    pub max_steps: usize,
}

impl<T: Real> Dopri5Options<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            initial_step: T::lit(1e-3),
            min_step: T::lit(1e-14),
            max_step: T::infinity(),
            max_steps: 1_000_000,
        }
    }
}

/// One accepted step together with its interpolation data.
#[derive(Debug, Clone)]
pub struct DenseStep<T, const N: usize> {
    pub t0: T,
    pub t1: T,
    pub y0: [T; N],
    pub y1: [T; N],
    rcont: [[T; N]; 5],
}

impl<T: Real, const N: usize> DenseStep<T, N> {
    /// Solution at `t` in `[t0, t1]`.
    pub fn eval(&self, t: T) -> [T; N] {
        let h = self.t1 - self.t0;
        let theta = (t - self.t0) / h;
        let theta1 = T::one() - theta;
        let r = &self.rcont;
        let mut out = [T::zero(); N];
        for i in 0..N {
            out[i] = r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

struct Tableau<T> {
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
    d: [T; 7],
}

impl<T: Real> Tableau<T> {
    fn new() -> Self {
        let f = |p: f64, q: f64| T::lit(p) / T::lit(q);
        let z = T::zero();
        Self {
            c: [z, f(1., 5.), f(3., 10.), f(4., 5.), f(8., 9.), T::one(), T::one()],
            a: [
                [z; 6],
                [f(1., 5.), z, z, z, z, z],
                [f(3., 40.), f(9., 40.), z, z, z, z],
                [f(44., 45.), f(-56., 15.), f(32., 9.), z, z, z],
                [
                    f(19372., 6561.),
                    f(-25360., 2187.),
                    f(64448., 6561.),
                    f(-212., 729.),
                    z,
                    z,
                ],
                [
                    f(9017., 3168.),
                    f(-355., 33.),
                    f(46732., 5247.),
                    f(49., 176.),
                    f(-5103., 18656.),
                    z,
                ],
                [
                    f(35., 384.),
                    z,
                    f(500., 1113.),
                    f(125., 192.),
                    f(-2187., 6784.),
                    f(11., 84.),
                ],
            ],
            e: [
                f(71., 57600.),
                z,
                f(-71., 16695.),
                f(71., 1920.),
                f(-17253., 339200.),
                f(22., 525.),
                f(-1., 40.),
            ],
            d: [
                f(-12715105075., 11282082432.),
                z,
                f(87487479700., 32700410799.),
                f(-10690763975., 1880347072.),
                f(701980252875., 199316789632.),
                f(-1453857185., 822651844.),
                f(69997945., 29380423.),
            ],
        }
    }
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1 > t0`. `on_step` sees every
/// accepted step and may abort the integration by returning an error.
pub fn integrate<T, const N: usize, F, G>(
    mut rhs: F,
    y0: [T; N],
    t0: T,
    t1: T,
    opts: &Dopri5Options<T>,
    mut on_step: G,
) -> Result<([T; N], Dopri5Stats)>
where
    T: Real,
    F: FnMut(T, &[T; N]) -> [T; N],
    G: FnMut(&DenseStep<T, N>) -> Result<()>,
{
    let tab = Tableau::<T>::new();
    let mut stats = Dopri5Stats::default();
    let mut t = t0;
    let mut y = y0;
    if t1 <= t0 {
        return Ok((y, stats));
    }
    let mut h = opts.initial_step.min(t1 - t0);
    let mut k = [[T::zero(); N]; 7];
    k[0] = rhs(t, &y);
    stats.evaluations += 1;
    let safety = T::lit(0.9);
    let fac_min = T::lit(0.2);
    let fac_max = T::lit(5.0);
    let expo = T::lit(0.2);
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::NoConvergence {
                what: "Dormand-Prince integration",
                iterations: opts.max_steps,
                residual: t.as_f64(),
            });
        }
        if h < opts.min_step {
            return Err(Error::StepUnderflow {
                y: t.as_f64(),
                step: h.as_f64(),
            });
        }
        h = h.min(opts.max_step);
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = T::zero();
                for j in 0..s {
                    acc += tab.a[s][j] * k[j][i];
                }
                ys[i] += h * acc;
            }
            k[s] = rhs(t + tab.c[s] * h, &ys);
            stats.evaluations += 1;
        }
        // stage 7 is evaluated at the 5th-order solution (FSAL)
        let mut y_new = y;
        for i in 0..N {
            let mut acc = T::zero();
            for j in 0..6 {
                acc += tab.a[6][j] * k[j][i];
            }
            y_new[i] += h * acc;
        }
        let mut err = T::zero();
        for i in 0..N {
            let mut e = T::zero();
            for j in 0..7 {
                e += tab.e[j] * k[j][i];
            }
            let sc = opts.tol * (T::one() + y[i].abs().max(y_new[i].abs()));
            let r = h * e / sc;
            err = err.max(r.abs());
        }
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= fac_min;
            stats.rejected += 1;
            last_rejected = true;
            continue;
        }
        if err <= T::one() {
            let mut rcont = [[T::zero(); N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut acc = T::zero();
                for j in 0..7 {
                    acc += tab.d[j] * k[j][i];
                }
                rcont[4][i] = h * acc;
            }
            let t_new = if last { t1 } else { t + h };
            let step = DenseStep {
                t0: t,
                t1: t_new,
                y0: y,
                y1: y_new,
                rcont,
            };
            stats.accepted += 1;
            on_step(&step)?;
            t = t_new;
            y = y_new;
            k[0] = k[6];
            let mut fac = safety * err.max(T::lit(1e-10)).powf(-expo);
            fac = fac.min(if last_rejected { T::one() } else { fac_max }).max(fac_min);
            h *= fac;
            last_rejected = false;
        } else {
            let fac = (safety * err.powf(-expo)).max(fac_min);
            h *= fac;
            stats.rejected += 1;
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_endpoint_and_dense_output() {
        let opts = Dopri5Options::with_tol(1e-12);
        let mut max_dense_err = 0.0f64;
        let (y, stats) = integrate(
            |_, y: &[f64; 2]| [-y[0], y[0] - 2.0 * y[1]],
            [1.0, 0.0],
            0.0,
            2.0,
            &opts,
            |s| {
                for k in 0..=8 {
                    let t = s.t0 + (s.t1 - s.t0) * k as f64 / 8.0;
                    let v = s.eval(t);
                    let exact0 = (-t).exp();
                    let exact1 = (-t).exp() - (-2.0 * t).exp();
                    max_dense_err = max_dense_err.max((v[0] - exact0).abs()).max((v[1] - exact1).abs());
                }
                Ok(())
            },
        )
        .unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-11);
        assert!((y[1] - ((-2.0f64).exp() - (-4.0f64).exp())).abs() < 1e-11);
        assert!(max_dense_err < 1e-10, "dense output error {max_dense_err}");
        assert!(stats.accepted > 5);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let opts = Dopri5Options::with_tol(1e-11);
        let tp = 2.0 * std::f64::consts::PI;
        let (y, _) = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], [1.0, 0.0], 0.0, tp, &opts, |_| Ok(())).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn observer_can_abort() {
        let opts = Dopri5Options::with_tol(1e-8);
        let r = integrate(
            |_, y: &[f64; 1]| [y[0] * y[0]],
            [1.0],
            0.0,
            2.0,
            &opts,
            |s| {
                if s.y1[0] > 100.0 {
                    Err(Error::BlowUp {
                        y: s.t1,
                        value: s.y1[0],
                    })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(r, Err(Error::BlowUp { .. })));
    }
}
