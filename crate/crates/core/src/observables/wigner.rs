use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::Mode;
use crate::error::{Error, Result};
use crate::hilbert::DensityState;

/// Grid layout for [`wigner`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerOptions {
    /// Points per axis; odd so the origin is a grid point.
    pub points: usize,
    /// Half-width of the square `[−w, w]²`; defaults to `max(3, 2√cutoff)`.
    pub half_width: Option<f64>,
}

impl Default for WignerOptions {
    fn default() -> Self {
        Self {
            points: 101,
            half_width: None,
        }
    }
}

/// Wigner function sampled on a square grid. `values[(i, j)]` is
/// `W(axis[j] + i·axis[i])`, i.e. rows run along Im α.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub axis: Vec<f64>,
    pub values: DMatrix<f64>,
    pub mode: Option<Mode>,
    /// Population of the highest Fock level of the input state.
    pub tail_weight: f64,
}

impl WignerGrid {
    pub fn step(&self) -> f64 {
        self.axis[1] - self.axis[0]
    }

    /// `∬ W d²α` by the rectangle rule.
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.step().powi(2)
    }

    /// Marginal `∫ W d(Im α)` as a function of Re α.
    pub fn marginal_re(&self) -> Vec<f64> {
        let h = self.step();
        (0..self.axis.len())
            .map(|j| self.values.column(j).sum() * h)
            .collect()
    }

    fn interpolate(&self, x: f64, y: f64) -> f64 {
        let h = self.step();
        let n = self.axis.len();
        let fx = ((x - self.axis[0]) / h).clamp(0.0, (n - 1) as f64);
        let fy = ((y - self.axis[0]) / h).clamp(0.0, (n - 1) as f64);
        let (j0, i0) = (fx.floor() as usize, fy.floor() as usize);
        let (j1, i1) = ((j0 + 1).min(n - 1), (i0 + 1).min(n - 1));
        let (tx, ty) = (fx - j0 as f64, fy - i0 as f64);
        let v = &self.values;
        (1.0 - ty) * ((1.0 - tx) * v[(i0, j0)] + tx * v[(i0, j1)])
            + ty * ((1.0 - tx) * v[(i1, j0)] + tx * v[(i1, j1)])
    }
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// Generalized Laguerre polynomials `L_k^{(d)}(x)`, indexed `[d][k]`.
fn laguerre_table(n: usize, x: f64) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|d| {
            let a = d as f64;
            let mut row = Vec::with_capacity(n + 1);
            row.push(1.0);
            if n >= 1 {
                row.push(1.0 + a - x);
            }
            for k in 1..n {
                let kf = k as f64;
                let next = ((2.0 * kf + 1.0 + a - x) * row[k] - (kf + a) * row[k - 1]) / (kf + 1.0);
                row.push(next);
            }
            row
        })
        .collect()
}

/// `W(α) = (2/π) Tr[ρ D(α) P D†(α)] = (2/π) Σ_{mn} ρ_{mn} (−1)^m ⟨n|D(2α)|m⟩`.
fn wigner_point(rho: &DMatrix<Complex64>, alpha: Complex64, lnf: &[f64]) -> f64 {
    let c = rho.nrows() - 1;
    let beta = alpha * 2.0;
    let x = beta.norm_sqr();
    let lag = laguerre_table(c, x);
    let gauss = (-0.5 * x).exp();
    let mut beta_pow = vec![Complex64::new(1.0, 0.0); c + 1];
    let mut mbeta_conj_pow = vec![Complex64::new(1.0, 0.0); c + 1];
    for d in 1..=c {
        beta_pow[d] = beta_pow[d - 1] * beta;
        mbeta_conj_pow[d] = mbeta_conj_pow[d - 1] * (-beta.conj());
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..=c {
        let parity = if m % 2 == 0 { 1.0 } else { -1.0 };
        for n in 0..=c {
            let r = rho[(m, n)];
            if r == Complex64::new(0.0, 0.0) {
                continue;
            }
            let disp = if n >= m {
                let d = n - m;
                beta_pow[d] * ((0.5 * (lnf[m] - lnf[n])).exp() * gauss * lag[d][m])
            } else {
                let d = m - n;
                mbeta_conj_pow[d] * ((0.5 * (lnf[n] - lnf[m])).exp() * gauss * lag[d][n])
            };
            acc += r * disp * parity;
        }
    }
    acc.re * 2.0 / std::f64::consts::PI
}

/// Wigner function of a single-mode state in the Fock basis.
pub fn wigner(rho_mode: &DensityState, opts: &WignerOptions, mode: Option<Mode>) -> Result<WignerGrid> {
    if rho_mode.dims().len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "Wigner function needs a single-mode state, got dims {:?}",
            rho_mode.dims()
        )));
    }
    if opts.points < 3 {
        return Err(Error::InvalidParameter("Wigner grid needs at least 3 points".into()));
    }
    let cutoff = rho_mode.dim() - 1;
    let w = opts
        .half_width
        .unwrap_or_else(|| (2.0 * (cutoff as f64).sqrt()).max(3.0));
    let np = opts.points;
    let axis: Vec<f64> = (0..np)
        .map(|j| -w + 2.0 * w * j as f64 / (np - 1) as f64)
        .collect();
    let lnf = ln_factorials(cutoff);
    let rho = rho_mode.matrix();
    let values = DMatrix::from_fn(np, np, |i, j| wigner_point(rho, Complex64::new(axis[j], axis[i]), &lnf));
    Ok(WignerGrid {
        axis,
        values,
        mode,
        tail_weight: rho[(cutoff, cutoff)].re.abs(),
    })
}

/// Field magnitude read off the radial profile of a Wigner function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldExtraction {
    pub magnitude: f64,
    pub is_annulus: bool,
    /// `(r, W)` averaged over four azimuthal cuts and both signs of r.
    pub radial_profile: Vec<(f64, f64)>,
    /// Raw signed cut along Im α = 0.
    pub cut: Vec<(f64, f64)>,
}

/// Relative height by which an off-centre maximum must exceed the central value.
pub const ANNULUS_CONTRAST: f64 = 0.02;

pub fn extract_field(w: &WignerGrid) -> Result<FieldExtraction> {
    let n = w.axis.len();
    let peak = w.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut edge: f64 = 0.0;
    for k in 0..n {
        for v in [
            w.values[(0, k)],
            w.values[(n - 1, k)],
            w.values[(k, 0)],
            w.values[(k, n - 1)],
        ] {
            edge = edge.max(v.abs());
        }
    }
    if peak == 0.0 || edge > 1e-4 * peak {
        return Err(Error::SupportViolation {
            ratio: if peak == 0.0 { f64::INFINITY } else { edge / peak },
        });
    }
    let h = w.step();
    let half = (n - 1) / 2;
    let angles = [0.0, 0.25, 0.5, 0.75].map(|f: f64| f * std::f64::consts::PI);
    let signed: Vec<(f64, f64)> = (-(half as i64)..=half as i64)
        .map(|s| {
            let r = s as f64 * h;
            let avg = angles
                .iter()
                .map(|th| w.interpolate(r * th.cos(), r * th.sin()))
                .sum::<f64>()
                / angles.len() as f64;
            (r, avg)
        })
        .collect();
    let radial_profile: Vec<(f64, f64)> = (0..=half)
        .map(|j| (j as f64 * h, 0.5 * (signed[half + j].1 + signed[half - j].1)))
        .collect();
    let cut = (-(half as i64)..=half as i64)
        .map(|s| {
            let r = s as f64 * h;
            (r, w.interpolate(r, 0.0))
        })
        .collect();

    let (jmax, vmax) = radial_profile
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (j, &(_, v))| if v > acc.1 { (j, v) } else { acc });
    let centre = radial_profile[0].1;
    let is_annulus = jmax >= 2 && vmax - centre >= ANNULUS_CONTRAST * vmax.abs();
    let magnitude = if is_annulus {
        // Parabolic refinement of the peak position.
        let mut r = radial_profile[jmax].0;
        if jmax + 1 < radial_profile.len() {
            let (a, b, c) = (
                radial_profile[jmax - 1].1,
                radial_profile[jmax].1,
                radial_profile[jmax + 1].1,
            );
            let denom = a - 2.0 * b + c;
            if denom < 0.0 {
                r += 0.5 * h * (a - c) / denom;
            }
        }
        r
    } else {
        0.0
    };
    Ok(FieldExtraction {
        magnitude,
        is_annulus,
        radial_profile,
        cut,
    })
}

/// Uniform phase mixture of coherent states of amplitude `lambda`,
/// `e^{−λ²} Σ λ^{2n}/n! |n⟩⟨n|`, renormalized on the truncated space.
pub fn phase_averaged_coherent(lambda: f64, cutoff: usize) -> DensityState {
    let lnf = ln_factorials(cutoff);
    let mut p: Vec<f64> = (0..=cutoff)
        .map(|n| {
            if lambda == 0.0 {
                if n == 0 { 1.0 } else { 0.0 }
            } else {
                (-lambda * lambda + 2.0 * n as f64 * lambda.ln() - lnf[n]).exp()
            }
        })
        .collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let diag: Vec<Complex64> = p.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    DensityState::new(vec![cutoff + 1], m).expect("square")
}
