use serde::{Deserialize, Serialize};

use super::system::ApplyPreconditioner;
use crate::error::{Error, Result};
use crate::kernels::FlopCounter;
use crate::sparse::vec_norm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GmresConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub restart: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 50,
            restart: 50,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!("GMRES tolerance must be > 0, got {}", self.tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("GMRES needs max_iterations >= 1".into()));
        }
        if self.restart == 0 {
            return Err(Error::Config("GMRES restart length must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// Arnoldi steps taken, over all restart cycles.
    pub iterations: usize,
    pub converged: bool,
    /// `‖b − A x‖ / ‖b‖` of the returned iterate.
    pub relative_residual: f64,
}

/// Anything GMRES can multiply by.
pub trait Operator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Operator for crate::sparse::SparseMatrixCsc {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.spmv(x)
    }
}

impl Operator for super::BlockSystem {
    fn dim(&self) -> usize {
        super::BlockSystem::dim(self)
    }

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        super::BlockSystem::apply(self, x)
    }
}

fn residual(a: &dyn Operator, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let ax = a.apply(x)?;
    Ok(b.iter().zip(&ax).map(|(p, q)| p - q).collect())
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Restarted right-preconditioned GMRES from `x0 = 0`, with modified
/// Gram–Schmidt and Givens rotations. Preconditioner applications are
/// charged to `flops.solve_flops`.
pub fn gmres(
    a: &dyn Operator,
    b: &[f64],
    m: &dyn ApplyPreconditioner,
    cfg: &GmresConfig,
    flops: &mut FlopCounter,
) -> Result<GmresOutcome> {
    cfg.validate()?;
    let n = a.dim();
    if b.len() != n || m.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if b.len() != n { b.len() } else { m.dim() },
        });
    }
    let bnorm = vec_norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x,
            iterations: 0,
            converged: true,
            relative_residual: 0.0,
        });
    }
    let target = cfg.tolerance * bnorm;
    let mut iterations = 0;
    let mut r = b.to_vec();
    let mut rnorm = bnorm;

    loop {
        let steps = cfg.restart.min(cfg.max_iterations - iterations);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(steps);
        basis.push(r.iter().map(|v| v / rnorm).collect());
        // Column-stored Hessenberg, already rotated.
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut rotations: Vec<(f64, f64)> = Vec::with_capacity(steps);
        let mut g = vec![0.0; steps + 1];
        g[0] = rnorm;
        let mut breakdown = false;

        for j in 0..steps {
            let z = m.precondition(&basis[j], flops)?;
            let mut w = a.apply(&z)?;
            zs.push(z);
            let wnorm = vec_norm(&w);
            let mut col = vec![0.0; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij: f64 = w.iter().zip(v).map(|(p, q)| p * q).sum();
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let hnext = vec_norm(&w);
            col[j + 1] = hnext;
            for (i, &(c, s)) in rotations.iter().enumerate() {
                let (p, q) = (col[i], col[i + 1]);
                col[i] = c * p + s * q;
                col[i + 1] = -s * p + c * q;
            }
            if col[j] == 0.0 && col[j + 1] == 0.0 {
                // A z_j lies in the span of earlier directions: nothing new.
                iterations += 1;
                breakdown = true;
                break;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            rotations.push((c, s));
            h.push(col);
            iterations += 1;

            if g[j + 1].abs() <= target {
                break;
            }
            if hnext <= 1e-14 * wnorm {
                breakdown = true;
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }

        // Back substitution on the rotated Hessenberg.
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (l, yl) in y.iter().enumerate().skip(i + 1) {
                s -= h[l][i] * yl;
            }
            y[i] = s / h[i][i];
        }
        for (z, &yl) in zs.iter().zip(&y) {
            for (xi, zi) in x.iter_mut().zip(z) {
                *xi += yl * zi;
            }
        }

        r = residual(a, b, &x)?;
        rnorm = vec_norm(&r);
        let rel = rnorm / bnorm;
        if rnorm <= target {
            return Ok(GmresOutcome {
                x,
                iterations,
                converged: true,
                relative_residual: rel,
            });
        }
        if breakdown {
            return Err(Error::Breakdown(rel));
        }
        if iterations >= cfg.max_iterations {
            return Ok(GmresOutcome {
                x,
                iterations,
                converged: false,
                relative_residual: rel,
            });
        }
    }
}
