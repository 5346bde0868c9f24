//! Embedded Dormand–Prince 5(4) integrator for complex vector ODEs.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Adaptive integrator state. The step size carries over between calls to
/// [`DormandPrince::advance`].
pub struct DormandPrince {
    tol: Tolerances,
    h: f64,
    h_max: f64,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    fsal_valid: bool,
    pub stats: Stats,
}

impl DormandPrince {
    pub fn new(n: usize, h0: f64, tol: Tolerances) -> Self {
        Self {
            tol,
            h: h0,
            h_max: f64::INFINITY,
            k: std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); n]),
            stage: vec![Complex64::new(0.0, 0.0); n],
            fsal_valid: false,
            stats: Stats::default(),
        }
    }

    pub fn with_max_step(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    /// Forces re-evaluation of the first stage, needed after the state was
    /// modified outside the integrator.
    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    /// Integrates `y` from `*t` to `t_end`. `post_step` runs after every
    /// accepted step and may apply a roundoff-level projection to `y`.
    pub fn advance<F, P>(
        &mut self,
        mut rhs: F,
        t: &mut f64,
        y: &mut [Complex64],
        t_end: f64,
        mut post_step: P,
    ) -> Result<()>
    where
        F: FnMut(f64, &[Complex64], &mut [Complex64]),
        P: FnMut(f64, &mut [Complex64]) -> Result<()>,
    {
        let n = y.len();
        while *t < t_end {
            let remaining = t_end - *t;
            if remaining <= 1e-14 * t_end.abs().max(1.0) {
                *t = t_end;
                break;
            }
            let h_floor = 1e-13 * t.abs().max(1.0);
            if self.h < h_floor {
                return Err(Error::StepUnderflow {
                    time: *t,
                    step: self.h,
                });
            }
            let h_natural = self.h.min(self.h_max);
            let hitting_end = h_natural >= remaining;
            let h = if hitting_end { remaining } else { h_natural };

            if !self.fsal_valid {
                rhs(*t, y, &mut self.k[0]);
                self.stats.evaluations += 1;
                self.fsal_valid = true;
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.stage[i] = acc;
                }
                let (_, rest) = self.k.split_at_mut(s);
                rhs(*t + C[s] * h, &self.stage, &mut rest[0]);
                self.stats.evaluations += 1;
            }
            // stage now holds the fifth-order solution (row 7 of A).
            let mut err: f64 = 0.0;
            for i in 0..n {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[j][i] * *w;
                    }
                }
                let scale = self.tol.abs + self.tol.rel * y[i].norm().max(self.stage[i].norm());
                err = err.max(h * e.norm() / scale);
            }
            if !err.is_finite() {
                self.h = h * 0.2;
                self.stats.rejected += 1;
                continue;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                y.copy_from_slice(&self.stage);
                *t = if hitting_end { t_end } else { *t + h };
                self.k.swap(0, 6);
                self.stats.accepted += 1;
                // A step shortened to land on t_end says little about the
                // natural step size.
                self.h = if hitting_end && factor >= 1.0 {
                    h_natural
                } else {
                    h * factor
                };
                post_step(*t, y)?;
            } else {
                self.h = h * factor.min(1.0);
                self.stats.rejected += 1;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = Complex64::new(-1.5, 4.0);
        let mut y = vec![Complex64::new(1.0, 0.5)];
        let mut t = 0.0;
        let mut dp = DormandPrince::new(1, 1e-3, Tolerances { rel: 1e-11, abs: 1e-13 });
        dp.advance(|_, y, dy| dy[0] = lam * y[0], &mut t, &mut y, 2.0, |_, _| Ok(()))
            .unwrap();
        let exact = Complex64::new(1.0, 0.5) * (lam * 2.0).exp();
        assert!((y[0] - exact).norm() < 1e-9 * exact.norm().max(1e-3));
        assert_eq!(t, 2.0);
    }

    #[test]
    fn fifth_order_convergence_on_fixed_steps() {
        // With a loose tolerance the controller is bypassed by h_max.
        let f = |t: f64, y: &[Complex64], dy: &mut [Complex64]| {
            dy[0] = Complex64::new(t.cos(), 0.0) * y[0];
        };
        let run = |h: f64| {
            let mut y = vec![Complex64::new(1.0, 0.0)];
            let mut t = 0.0;
            let mut dp = DormandPrince::new(1, h, Tolerances { rel: 1e3, abs: 1e3 }).with_max_step(h);
            dp.advance(f, &mut t, &mut y, 1.0, |_, _| Ok(())).unwrap();
            (y[0] - Complex64::new(1f64.sin().exp(), 0.0)).norm()
        };
        let e1 = run(0.1);
        let e2 = run(0.05);
        let order = (e1 / e2).log2();
        assert!(order > 4.5, "observed order {order}");
    }

    #[test]
    fn reports_underflow() {
        // Finite-time blow-up forces the step size to collapse.
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut t = 0.0;
        let mut dp = DormandPrince::new(1, 1e-2, Tolerances { rel: 1e-10, abs: 1e-12 });
        let r = dp.advance(|_, y, dy| dy[0] = y[0] * y[0], &mut t, &mut y, 2.0, |_, _| Ok(()));
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
