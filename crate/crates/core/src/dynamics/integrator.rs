//! Dormand-Prince 5(4) with embedded error control and dense stepping onto
//! a prescribed output grid.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hilbert::C64;

/// Mixed error tolerance `atol + rtol·|y|` per component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// The last row doubles as the fifth-order weights (first same as last).
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth minus fourth order weights.
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
pub struct Dopri5 {
    pub tol: Tolerances,
    /// Upper bound on the step, e.g. to resolve a drive period.
    pub h_max: Option<f64>,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { tol: Tolerances::default(), h_max: None, max_steps: 5_000_000 }
    }
}

impl Dopri5 {
    pub fn new(tol: Tolerances) -> Self {
        Self { tol, ..Self::default() }
    }

    fn error_norm(&self, err: &DVector<C64>, y0: &DVector<C64>, y1: &DVector<C64>) -> f64 {
        let n = err.len().max(1) as f64;
        let s: f64 = err
            .iter()
            .zip(y0.iter().zip(y1.iter()))
            .map(|(e, (a, b))| {
                let sc = self.tol.atol + self.tol.rtol * a.norm().max(b.norm());
                (e.norm() / sc).powi(2)
            })
            .sum();
        (s / n).sqrt()
    }

    /// Integrates `y' = f(t, y)` from `grid[0]` through every later grid time,
    /// calling `out(i, t_i, y_i)` at each grid point including the first.
    /// Steps are truncated to land exactly on grid points.
    pub fn integrate<F, O>(
        &self,
        mut f: F,
        y0: DVector<C64>,
        grid: &[f64],
        mut out: O,
    ) -> Result<StepStats>
    where
        F: FnMut(f64, &DVector<C64>, &mut DVector<C64>),
        O: FnMut(usize, f64, &DVector<C64>) -> Result<()>,
    {
        check_grid(grid)?;
        let n = y0.len();
        let mut stats = StepStats { accepted: 0, rejected: 0, evaluations: 0 };
        let mut t = grid[0];
        let mut y = y0;
        out(0, t, &y)?;
        if grid.len() == 1 {
            return Ok(stats);
        }

        let mut k: Vec<DVector<C64>> = (0..7).map(|_| DVector::zeros(n)).collect();
        f(t, &y, &mut k[0]);
        stats.evaluations += 1;
        let mut h = self.initial_step(&mut f, t, &y, &k[0], grid[grid.len() - 1] - t, &mut stats);
        let mut stage = DVector::<C64>::zeros(n);
        let mut y_new = DVector::<C64>::zeros(n);
        let mut err = DVector::<C64>::zeros(n);
        let mut next = 1;

        while next < grid.len() {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepLimit { t, steps: self.max_steps });
            }
            let target = grid[next];
            let mut hit = false;
            let mut h_try = h;
            if let Some(hm) = self.h_max {
                h_try = h_try.min(hm);
            }
            if t + h_try >= target || (target - t - h_try) < 1e-12 * h_try {
                h_try = target - t;
                hit = true;
            }
            if h_try <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h: h_try, err: f64::NAN });
            }

            for s in 1..7 {
                stage.copy_from(&y);
                for (j, a) in A[s].iter().enumerate().take(s) {
                    if *a != 0.0 {
                        stage.axpy(C64::new(h_try * a, 0.0), &k[j], C64::new(1.0, 0.0));
                    }
                }
                f(t + C[s] * h_try, &stage, &mut k[s]);
                stats.evaluations += 1;
                if s == 6 {
                    y_new.copy_from(&stage);
                }
            }
            // k[6] is f at the fifth-order solution and becomes the next k[0].
            err.fill(C64::new(0.0, 0.0));
            for (j, e) in E.iter().enumerate() {
                if *e != 0.0 {
                    err.axpy(C64::new(h_try * e, 0.0), &k[j], C64::new(1.0, 0.0));
                }
            }
            let en = self.error_norm(&err, &y, &y_new);
            if !en.is_finite() {
                return Err(Error::StepSizeUnderflow { t, h: h_try, err: en });
            }
            if en <= 1.0 {
                t = if hit { target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                k.swap(0, 6);
                stats.accepted += 1;
                let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                // A step shortened to hit the grid says nothing about the
                // natural step size; keep the previous one.
                h = if hit { h.max(h_try * fac) } else { h_try * fac };
                if hit {
                    out(next, t, &y)?;
                    next += 1;
                }
            } else {
                stats.rejected += 1;
                h = h_try * (0.9 * en.powf(-0.2)).clamp(0.1, 1.0);
                if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
                    return Err(Error::StepSizeUnderflow { t, h, err: en });
                }
            }
        }
        Ok(stats)
    }

    fn initial_step<F>(
        &self,
        f: &mut F,
        t: f64,
        y: &DVector<C64>,
        f0: &DVector<C64>,
        span: f64,
        stats: &mut StepStats,
    ) -> f64
    where
        F: FnMut(f64, &DVector<C64>, &mut DVector<C64>),
    {
        let zero = DVector::<C64>::zeros(y.len());
        let d0 = self.error_norm(y, y, &zero);
        let d1 = self.error_norm(f0, y, &zero);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span.abs());
        let mut y1 = y.clone();
        y1.axpy(C64::new(h0, 0.0), f0, C64::new(1.0, 0.0));
        let mut f1 = DVector::<C64>::zeros(y.len());
        f(t + h0, &y1, &mut f1);
        stats.evaluations += 1;
        let d2 = self.error_norm(&(f1 - f0), y, &zero) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        let mut h = (100.0 * h0).min(h1).min(span.abs());
        if let Some(hm) = self.h_max {
            h = h.min(hm);
        }
        h
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter("time grid has non-finite entries".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `n` points evenly spaced on `[t0, t1]`.
pub fn linspace(t0: f64, t1: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![t0],
        _ => (0..n).map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64).collect(),
    }
}
