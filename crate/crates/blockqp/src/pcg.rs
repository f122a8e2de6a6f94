//! Preconditioned conjugate gradient for symmetric positive semidefinite
//! operators, used as an alternative to direct factorization on large normal
//! equations.

use crate::sparse::LinearOperator;
use crate::vecops;

#[derive(Debug, Clone)]
pub struct PcgParams {
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl Default for PcgParams {
    fn default() -> Self {
        PcgParams { tol_rel: 1e-10, max_iter: 500 }
    }
}

#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
}

/// Jacobi preconditioner: elementwise division by max(diag, floor).
pub fn jacobi_apply(diag: &[f64], r: &[f64]) -> Vec<f64> {
    let floor = 1e-12 * diag.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    r.iter().zip(diag).map(|(ri, di)| ri / di.max(floor)).collect()
}

/// Solve op x = b with an SPD operator. `precond` maps a residual to a
/// preconditioned residual; identity when None. Returns the iterate with the
/// smallest residual seen, so a stagnating run still yields the best answer.
pub fn pcg<O: LinearOperator>(
    op: &O,
    b: &[f64],
    x0: Option<&[f64]>,
    precond: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
    params: &PcgParams,
) -> PcgOutcome {
    let n = b.len();
    assert_eq!(op.nrows(), n);
    let bnorm = vecops::norm2(b);
    if bnorm == 0.0 {
        return PcgOutcome { x: vec![0.0; n], iterations: 0, rel_residual: 0.0, converged: true };
    }
    let mut x = match x0 {
        Some(v) => v.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vecops::sub(b, &op.apply(&x));
    let ident = |v: &[f64]| v.to_vec();
    let prec: &dyn Fn(&[f64]) -> Vec<f64> = match precond {
        Some(p) => p,
        None => &ident,
    };
    let mut z = prec(&r);
    let mut p = z.clone();
    let mut rz = vecops::dot(&r, &z);
    let mut best_x = x.clone();
    let mut best_res = vecops::norm2(&r);
    let mut iterations = 0;
    for k in 0..params.max_iter {
        let rel = vecops::norm2(&r) / bnorm;
        if vecops::norm2(&r) < best_res {
            best_res = vecops::norm2(&r);
            best_x = x.clone();
        }
        if rel <= params.tol_rel {
            return PcgOutcome { x, iterations: k, rel_residual: rel, converged: true };
        }
        let ap = op.apply(&p);
        let pap = vecops::dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        vecops::axpy(alpha, &p, &mut x);
        vecops::axpy(-alpha, &ap, &mut r);
        z = prec(&r);
        let rz_new = vecops::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations = k + 1;
    }
    let final_res = vecops::norm2(&r);
    if final_res < best_res {
        best_res = final_res;
        best_x = x;
    }
    PcgOutcome {
        x: best_x,
        iterations,
        rel_residual: best_res / bnorm,
        converged: best_res / bnorm <= params.tol_rel,
    }
}
