//! Independent desk-scale oracle: exhaustive enumeration of bound-activity
//! patterns, each reduced to an equality-constrained QP solved by dense
//! least squares, with a self-contained KKT verification. Exponential time,
//! guarded by hard size caps; exists to cross-check the iterative solvers
//! with none of their code in the loop.

use blockqp::{BlockAngularProblem, Cone, Error, Quadratic, Result, SeparableFunction};
use nalgebra::{DMatrix, DVector};

const KKT_TOL: f64 = 1e-8;
/// hard caps: total variables and enumerated cells
const MAX_VARS: usize = 24;
const MAX_CELLS: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// concatenated block solution
    pub x: Vec<f64>,
    pub objective: f64,
    /// equality-row multipliers: coupling rows first, then local rows per block
    pub multipliers: Vec<f64>,
    /// stationarity vector Qx + c + theta' - B^T nu; carries the bound
    /// multipliers on active coordinates
    pub reduced: Vec<f64>,
    pub cells_checked: u64,
}

#[derive(Debug, Clone, Copy)]
enum VarState {
    Fixed(f64),
    /// sign restriction for the separable |x| term: 0 none, +-1 orthant
    Interior(i8),
}

struct DenseProblem {
    n: usize,
    m: usize,
    q: DMatrix<f64>,
    c: DVector<f64>,
    b_mat: DMatrix<f64>,
    rhs: DVector<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    l1: Vec<f64>,
}

fn densify(problem: &BlockAngularProblem) -> Result<DenseProblem> {
    let n: usize = problem.total_dim();
    if n > MAX_VARS {
        return Err(Error::Parameter(format!(
            "oracle size cap: {n} variables exceeds {MAX_VARS}"
        )));
    }
    let m0 = problem.m0();
    let m = problem.total_rows();
    let mut q = DMatrix::zeros(n, n);
    let mut c = DVector::zeros(n);
    let mut b_mat = DMatrix::zeros(m, n);
    let mut rhs = DVector::zeros(m);
    let mut lower = vec![f64::NEG_INFINITY; n];
    let mut upper = vec![f64::INFINITY; n];
    let mut l1 = vec![0.0; n];
    for j in 0..m0 {
        rhs[j] = problem.b0[j];
    }
    let mut col0 = 0usize;
    let mut row0 = m0;
    for blk in &problem.blocks {
        let ni = blk.dim();
        match &blk.q {
            Quadratic::Zero(_) => {}
            Quadratic::Diagonal(d) => {
                for (j, &v) in d.iter().enumerate() {
                    q[(col0 + j, col0 + j)] = v;
                }
            }
            Quadratic::Sparse(mat) => {
                for (r, cc, v) in mat.iter() {
                    q[(col0 + r, col0 + cc)] = v;
                }
            }
        }
        for (j, &v) in blk.c.iter().enumerate() {
            c[col0 + j] = v;
        }
        for (r, cc, v) in blk.a.iter() {
            b_mat[(r, col0 + cc)] = v;
        }
        if let Some(d) = &blk.d {
            for (r, cc, v) in d.iter() {
                b_mat[(row0 + r, col0 + cc)] = v;
            }
            for (r, &v) in blk.b.as_ref().expect("b present with d").iter().enumerate() {
                rhs[row0 + r] = v;
            }
            row0 += d.nrows();
        }
        match &blk.cone {
            Cone::Free(_) => {}
            Cone::NonNeg(_) => {
                for j in 0..ni {
                    lower[col0 + j] = 0.0;
                }
            }
            Cone::Box { lower: lo, upper: up } => {
                for j in 0..ni {
                    lower[col0 + j] = lo[j];
                    upper[col0 + j] = up[j];
                }
            }
        }
        match &blk.theta {
            SeparableFunction::Zero => {}
            SeparableFunction::L1 { weight } => {
                for j in 0..ni {
                    l1[col0 + j] = *weight;
                }
            }
            other => {
                return Err(Error::Parameter(format!(
                    "oracle supports only Zero/L1 separable terms, got {other:?}"
                )))
            }
        }
        col0 += ni;
    }
    Ok(DenseProblem { n, m, q, c, b_mat, rhs, lower, upper, l1 })
}

fn var_states(l: f64, u: f64, w: f64) -> Vec<VarState> {
    if l == u {
        return vec![VarState::Fixed(l)];
    }
    let mut states = Vec::new();
    if l.is_finite() {
        states.push(VarState::Fixed(l));
    }
    if u.is_finite() {
        states.push(VarState::Fixed(u));
    }
    if w > 0.0 {
        if l < 0.0 && u > 0.0 {
            states.push(VarState::Fixed(0.0));
        }
        if u > 0.0 {
            states.push(VarState::Interior(1));
        }
        if l < 0.0 {
            states.push(VarState::Interior(-1));
        }
    } else {
        states.push(VarState::Interior(0));
    }
    states
}

/// Subgradient interval of w|x| at v.
fn l1_subgradient(w: f64, v: f64) -> (f64, f64) {
    if v > 0.0 {
        (w, w)
    } else if v < 0.0 {
        (-w, -w)
    } else {
        (-w, w)
    }
}

fn solve_cell(dp: &DenseProblem, states: &[VarState]) -> Option<(Vec<f64>, DVector<f64>)> {
    let free: Vec<usize> = states
        .iter()
        .enumerate()
        .filter(|(_, s)| matches!(s, VarState::Interior(_)))
        .map(|(j, _)| j)
        .collect();
    let nf = free.len();
    let dim = nf + dp.m;
    let mut x = vec![0.0; dp.n];
    for (j, s) in states.iter().enumerate() {
        if let VarState::Fixed(v) = s {
            x[j] = *v;
        }
    }
    let mut nu = DVector::zeros(dp.m);
    if dim > 0 {
        let mut mat = DMatrix::zeros(dim, dim);
        let mut r = DVector::zeros(dim);
        for (a, &j) in free.iter().enumerate() {
            for (b, &k) in free.iter().enumerate() {
                mat[(a, b)] = dp.q[(j, k)];
            }
            for row in 0..dp.m {
                mat[(a, nf + row)] = -dp.b_mat[(row, j)];
            }
            let sign = match states[j] {
                VarState::Interior(s) => s as f64,
                VarState::Fixed(_) => unreachable!(),
            };
            let mut v = -dp.c[j] - dp.l1[j] * sign;
            for (k, sk) in states.iter().enumerate() {
                if let VarState::Fixed(fv) = sk {
                    v -= dp.q[(j, k)] * fv;
                }
            }
            r[a] = v;
        }
        for row in 0..dp.m {
            for (b, &k) in free.iter().enumerate() {
                mat[(nf + row, b)] = dp.b_mat[(row, k)];
            }
            let mut v = dp.rhs[row];
            for (k, sk) in states.iter().enumerate() {
                if let VarState::Fixed(fv) = sk {
                    v -= dp.b_mat[(row, k)] * fv;
                }
            }
            r[nf + row] = v;
        }
        let svd = mat.svd(true, true);
        let sol = svd.solve(&r, 1e-12).ok()?;
        for (a, &j) in free.iter().enumerate() {
            x[j] = sol[a];
        }
        for row in 0..dp.m {
            nu[row] = sol[nf + row];
        }
    }
    Some((x, nu))
}

/// Full KKT check, independent of the solver library's residual code.
fn verify_cell(
    dp: &DenseProblem,
    states: &[VarState],
    x: &[f64],
    nu: &DVector<f64>,
) -> Option<Vec<f64>> {
    let scale = 1.0 + dp.c.amax() + x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = KKT_TOL * scale;
    for j in 0..dp.n {
        if x[j] < dp.lower[j] - tol || x[j] > dp.upper[j] + tol {
            return None;
        }
        match states[j] {
            VarState::Interior(1) => {
                if x[j] < -tol {
                    return None;
                }
            }
            VarState::Interior(-1) => {
                if x[j] > tol {
                    return None;
                }
            }
            _ => {}
        }
    }
    for row in 0..dp.m {
        let mut v = -dp.rhs[row];
        for j in 0..dp.n {
            v += dp.b_mat[(row, j)] * x[j];
        }
        if v.abs() > tol {
            return None;
        }
    }
    let mut reduced = vec![0.0; dp.n];
    for j in 0..dp.n {
        let mut g = dp.c[j];
        for k in 0..dp.n {
            g += dp.q[(j, k)] * x[k];
        }
        for row in 0..dp.m {
            g -= dp.b_mat[(row, j)] * nu[row];
        }
        let (sub_lo, sub_hi) = l1_subgradient(dp.l1[j], x[j]);
        match states[j] {
            VarState::Interior(s) => {
                let sub = if dp.l1[j] > 0.0 { dp.l1[j] * s as f64 } else { 0.0 };
                if (g + sub).abs() > tol {
                    return None;
                }
            }
            VarState::Fixed(v) => {
                if dp.lower[j] == dp.upper[j] {
                    // equality-pinned variable: no sign condition
                } else if (v - dp.lower[j]).abs() <= tol && dp.lower[j].is_finite() {
                    // can only move up: some subgradient must lift g to >= 0
                    if g + sub_hi < -tol {
                        return None;
                    }
                } else if (v - dp.upper[j]).abs() <= tol && dp.upper[j].is_finite() {
                    if g + sub_lo > tol {
                        return None;
                    }
                } else {
                    // interior kink at zero: 0 in g + [-w, w]
                    if g.abs() > dp.l1[j] + tol {
                        return None;
                    }
                }
            }
        }
        reduced[j] = g;
    }
    Some(reduced)
}

fn cell_objective(dp: &DenseProblem, x: &[f64]) -> f64 {
    let mut obj = 0.0;
    for j in 0..dp.n {
        let mut qx = 0.0;
        for k in 0..dp.n {
            qx += dp.q[(j, k)] * x[k];
        }
        obj += 0.5 * x[j] * qx + dp.c[j] * x[j] + dp.l1[j] * x[j].abs();
    }
    obj
}

pub fn oracle_solve(problem: &BlockAngularProblem) -> Result<OracleSolution> {
    let dp = densify(problem)?;
    let states: Vec<Vec<VarState>> = (0..dp.n)
        .map(|j| var_states(dp.lower[j], dp.upper[j], dp.l1[j]))
        .collect();
    let mut cells: u64 = 1;
    for s in &states {
        cells = cells.saturating_mul(s.len() as u64);
        if cells > MAX_CELLS {
            return Err(Error::Parameter(format!(
                "oracle size cap: more than {MAX_CELLS} activity cells"
            )));
        }
    }
    let mut counter = vec![0usize; dp.n];
    let mut best: Option<OracleSolution> = None;
    let mut checked = 0u64;
    loop {
        checked += 1;
        let assignment: Vec<VarState> =
            counter.iter().enumerate().map(|(j, &k)| states[j][k]).collect();
        if let Some((x, nu)) = solve_cell(&dp, &assignment) {
            if let Some(reduced) = verify_cell(&dp, &assignment, &x, &nu) {
                let obj = cell_objective(&dp, &x);
                let better = best.as_ref().map_or(true, |b| obj < b.objective);
                if better {
                    best = Some(OracleSolution {
                        x,
                        objective: obj,
                        multipliers: nu.iter().copied().collect(),
                        reduced,
                        cells_checked: 0,
                    });
                }
            }
        }
        // mixed-radix increment
        let mut j = 0;
        loop {
            if j == dp.n {
                break;
            }
            counter[j] += 1;
            if counter[j] < states[j].len() {
                break;
            }
            counter[j] = 0;
            j += 1;
        }
        if j == dp.n {
            break;
        }
    }
    match best {
        Some(mut sol) => {
            sol.cells_checked = checked;
            Ok(sol)
        }
        None => Err(Error::InvalidProblem(
            "oracle found no KKT-consistent activity cell (infeasible or rank-deficient)".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use blockqp::gen::{gen_random, RandKind};
    use blockqp::{Block, Metadata, SgsAdmmParams, SparseMatrix};
    use std::sync::Arc;

    fn bare_block(n: usize, c: Vec<f64>, cone: Cone, theta: SeparableFunction) -> BlockAngularProblem {
        BlockAngularProblem {
            blocks: vec![Block {
                a: Arc::new(SparseMatrix::zeros(0, n)),
                d: None,
                q: Quadratic::Zero(n),
                c,
                b: None,
                cone,
                theta,
            }],
            b0: vec![],
            meta: Metadata::default(),
        }
    }

    #[test]
    fn scalar_qp_with_bound() {
        // min x^2/2 - x over x >= 0: x* = 1, objective -1/2
        let mut p = bare_block(1, vec![-1.0], Cone::NonNeg(1), SeparableFunction::Zero);
        p.blocks[0].q = Quadratic::Diagonal(vec![1.0]);
        let sol = oracle_solve(&p).unwrap();
        assert!((sol.x[0] - 1.0).abs() <= 1e-10);
        assert!((sol.objective + 0.5).abs() <= 1e-10);
    }

    #[test]
    fn linear_hits_bound_with_multiplier() {
        // min x over x >= 0: x* = 0 and the bound multiplier equals 1
        let p = bare_block(1, vec![1.0], Cone::NonNeg(1), SeparableFunction::Zero);
        let sol = oracle_solve(&p).unwrap();
        assert_eq!(sol.x[0], 0.0);
        assert!((sol.reduced[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn l1_soft_threshold() {
        // min w|x| + (x - a)^2/2: x* = sign(a) max(|a| - w, 0)
        for (a, w, expect) in [(2.0, 0.5, 1.5), (-2.0, 0.5, -1.5), (0.3, 0.5, 0.0)] {
            let mut p =
                bare_block(1, vec![-a], Cone::Free(1), SeparableFunction::L1 { weight: w });
            p.blocks[0].q = Quadratic::Diagonal(vec![1.0]);
            let sol = oracle_solve(&p).unwrap();
            assert!((sol.x[0] - expect).abs() <= 1e-10, "a={a} w={w}: {:?}", sol.x);
        }
    }

    #[test]
    fn box_lp_picks_vertex() {
        // min x0 - 2 x1 over [0,1] x [0,2]
        let p = bare_block(
            2,
            vec![1.0, -2.0],
            Cone::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 2.0] },
            SeparableFunction::Zero,
        );
        let sol = oracle_solve(&p).unwrap();
        assert_eq!(sol.x, vec![0.0, 2.0]);
        assert!((sol.objective + 4.0).abs() <= 1e-12);
    }

    #[test]
    fn equality_constrained_qp_multipliers() {
        // min ||x||^2/2 s.t. x0 + x1 = 2: x = (1,1), row multiplier 1
        let mut p = bare_block(2, vec![0.0, 0.0], Cone::Free(2), SeparableFunction::Zero);
        p.blocks[0].a = Arc::new(
            SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
        );
        p.blocks[0].q = Quadratic::Diagonal(vec![1.0, 1.0]);
        p.b0 = vec![2.0];
        let sol = oracle_solve(&p).unwrap();
        assert!((sol.x[0] - 1.0).abs() <= 1e-10 && (sol.x[1] - 1.0).abs() <= 1e-10);
        assert!((sol.multipliers[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn matches_iterative_solver_on_random_instance() {
        let p = gen_random(2, 3, 2, RandKind::T1, 13).unwrap();
        let sol = oracle_solve(&p).unwrap();
        let (it, report) =
            blockqp::sgs::solve(&p, SgsAdmmParams { tol: 1e-9, ..Default::default() }).unwrap();
        assert!(report.converged());
        let obj = report.final_residuals.primal_obj;
        assert!(
            (obj - sol.objective).abs() <= 1e-5 * (1.0 + sol.objective.abs()),
            "objective {obj} vs oracle {}",
            sol.objective
        );
        let flat = it.x.concat();
        for (a, b) in flat.iter().zip(&sol.x) {
            assert!((a - b).abs() <= 1e-4 * (1.0 + b.abs()), "{flat:?} vs {:?}", sol.x);
        }
    }

    #[test]
    fn size_cap_enforced() {
        let p = gen_random(2, 13, 2, RandKind::T1, 1).unwrap();
        assert!(matches!(oracle_solve(&p), Err(Error::Parameter(_))));
    }
}
