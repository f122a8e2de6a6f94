//! Dual-side solver: one semi-proximal symmetric Gauss-Seidel ADMM cycle per
//! iteration over the dual of the block-angular problem. Each cycle solves
//! the local normal systems D_i D_i^T twice (forward/backward sweep), the
//! (I + sigma Q_i) systems twice, and the coupling normal system
//! sum_i A_i A_i^T twice, then takes the multiplier step on x.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;

use crate::chol::{cholesky, CholeskyFactor};
use crate::error::{Error, Result};
use crate::kkt::{compute_residuals, NormCache, PrimalDualIterate, Residuals};
use crate::model::{Block, BlockAngularProblem, BlockVector, Quadratic};
use crate::pcg::{jacobi_apply, pcg, PcgParams};
use crate::prox::{moreau_cone_step, moreau_theta_step};
use crate::report::{SolveReport, Termination, TracePoint};
use crate::sparse::{form_normal, NormalMode, SparseMatrix};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaUpdate {
    Fixed,
    /// every `interval` residual checks, scale sigma by `factor` toward
    /// whichever of the primal/dual residuals is lagging
    Balance { interval: usize, factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearSolverKind {
    Direct,
    /// Jacobi-preconditioned CG with tolerance schedule max(1e-12, 0.1/k^2)
    Pcg,
}

#[derive(Debug, Clone)]
pub struct SgsAdmmParams {
    pub sigma0: f64,
    pub tau: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub check_interval: usize,
    pub sigma_update: SigmaUpdate,
    pub linear_solver: LinearSolverKind,
}

impl Default for SgsAdmmParams {
    fn default() -> Self {
        SgsAdmmParams {
            sigma0: 1.0,
            tau: 1.618,
            tol: 1e-5,
            max_iter: 100_000,
            check_interval: 10,
            sigma_update: SigmaUpdate::Balance { interval: 50, factor: 1.25 },
            linear_solver: LinearSolverKind::Direct,
        }
    }
}

impl SgsAdmmParams {
    fn check(&self) -> Result<()> {
        let tau_max = (1.0 + 5.0f64.sqrt()) / 2.0;
        if !(self.tau > 0.0 && self.tau < tau_max) {
            return Err(Error::Parameter(format!(
                "tau must lie in (0, {tau_max:.10}), got {}",
                self.tau
            )));
        }
        if self.sigma0 <= 0.0 {
            return Err(Error::Parameter(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if self.check_interval == 0 {
            return Err(Error::Parameter("check_interval must be positive".into()));
        }
        Ok(())
    }
}

/// Solver for a normal system M y = r where M is sigma-independent.
#[derive(Clone)]
enum NormalSolver {
    /// zero-dimensional system
    Empty,
    /// M = alpha I
    Scalar(f64),
    Direct(Arc<CholeskyFactor>),
    Iterative { mat: Arc<SparseMatrix>, diag: Vec<f64> },
}

impl NormalSolver {
    fn build(mat: SparseMatrix, kind: LinearSolverKind, label: &str, notes: &mut Vec<String>) -> Result<(Self, usize)> {
        if mat.nrows() == 0 {
            return Ok((NormalSolver::Empty, 0));
        }
        if let Some(alpha) = mat.as_scalar_identity() {
            if alpha > 0.0 {
                return Ok((NormalSolver::Scalar(alpha), 0));
            }
        }
        match kind {
            LinearSolverKind::Direct => {
                let f = cholesky(&mat).map_err(|e| match e {
                    Error::NotPositiveDefinite { detail, .. } => Error::NotPositiveDefinite {
                        block: None,
                        detail: format!("{label}: {detail}"),
                    },
                    other => other,
                })?;
                if f.ridge() > 0.0 {
                    notes.push(format!("{label}: ridge {:.3e} applied", f.ridge()));
                }
                Ok((NormalSolver::Direct(Arc::new(f)), 1))
            }
            LinearSolverKind::Pcg => {
                let diag = mat.diag();
                Ok((NormalSolver::Iterative { mat: Arc::new(mat), diag }, 0))
            }
        }
    }

    fn solve(&self, r: &[f64], tol: f64) -> Vec<f64> {
        match self {
            NormalSolver::Empty => Vec::new(),
            NormalSolver::Scalar(alpha) => r.iter().map(|v| v / alpha).collect(),
            NormalSolver::Direct(f) => f.solve(r),
            NormalSolver::Iterative { mat, diag } => {
                let prec = |res: &[f64]| jacobi_apply(diag, res);
                pcg(
                    mat.as_ref(),
                    r,
                    None,
                    Some(&prec),
                    &PcgParams { tol_rel: tol, max_iter: 2 * r.len() + 50 },
                )
                .x
            }
        }
    }
}

/// Solver for (I + sigma Q_i); valid only for the stamped sigma.
enum QSolver {
    /// Q_i = 0
    Identity,
    /// diagonal Q: componentwise reciprocal of 1 + sigma q_j
    Recip(Vec<f64>),
    Chol(CholeskyFactor),
}

impl QSolver {
    fn build(q: &Quadratic, sigma: f64) -> Result<(Self, usize)> {
        match q {
            Quadratic::Zero(_) => Ok((QSolver::Identity, 0)),
            Quadratic::Diagonal(d) => {
                Ok((QSolver::Recip(d.iter().map(|&v| 1.0 / (1.0 + sigma * v)).collect()), 0))
            }
            Quadratic::Sparse(m) => {
                let shifted = m.scaled(sigma).add_scaled_identity(1.0)?;
                Ok((QSolver::Chol(cholesky(&shifted)?), 1))
            }
        }
    }

    fn solve(&self, r: &[f64]) -> Vec<f64> {
        match self {
            QSolver::Identity => r.to_vec(),
            QSolver::Recip(inv) => inv.iter().zip(r).map(|(a, b)| a * b).collect(),
            QSolver::Chol(f) => f.solve(r),
        }
    }
}

pub struct FactorCache {
    d_solvers: Vec<NormalSolver>,
    a_solver: NormalSolver,
    q_solvers: Vec<QSolver>,
    sigma: f64,
    pub factorizations: usize,
    pub ridge_notes: Vec<String>,
}

impl FactorCache {
    pub fn build(problem: &BlockAngularProblem, sigma: f64, kind: LinearSolverKind) -> Result<Self> {
        let mut notes = Vec::new();
        let mut factorizations = 0;
        // local normal systems, deduplicated for shared D storage
        let mut shared: HashMap<*const SparseMatrix, NormalSolver> = HashMap::new();
        let mut d_solvers = Vec::with_capacity(problem.blocks.len());
        for (i, blk) in problem.blocks.iter().enumerate() {
            match &blk.d {
                None => d_solvers.push(NormalSolver::Empty),
                Some(d) => {
                    let key = Arc::as_ptr(d);
                    if let Some(existing) = shared.get(&key) {
                        d_solvers.push(existing.clone());
                        continue;
                    }
                    let normal = form_normal(d, NormalMode::MMt);
                    let (solver, nfact) =
                        NormalSolver::build(normal, kind, &format!("D_{i} normal system"), &mut notes)
                            .map_err(|e| match e {
                                Error::NotPositiveDefinite { detail, .. } => {
                                    Error::NotPositiveDefinite { block: Some(i), detail }
                                }
                                other => other,
                            })?;
                    factorizations += nfact;
                    shared.insert(key, solver.clone());
                    d_solvers.push(solver);
                }
            }
        }
        let m0 = problem.m0();
        let mut aat = SparseMatrix::zeros(m0, m0);
        for blk in &problem.blocks {
            aat = aat.add(&form_normal(&blk.a, NormalMode::MMt))?;
        }
        let (a_solver, nfact) =
            NormalSolver::build(aat, kind, "coupling normal system", &mut notes)?;
        factorizations += nfact;
        let mut q_solvers = Vec::with_capacity(problem.blocks.len());
        for blk in &problem.blocks {
            let (qs, nfact) = QSolver::build(&blk.q, sigma)?;
            factorizations += nfact;
            q_solvers.push(qs);
        }
        Ok(FactorCache {
            d_solvers,
            a_solver,
            q_solvers,
            sigma,
            factorizations,
            ridge_notes: notes,
        })
    }

    /// Re-stamp for a new sigma: only the (I + sigma Q) solvers depend on it.
    pub fn restamp(&mut self, problem: &BlockAngularProblem, sigma: f64) -> Result<()> {
        for (qs, blk) in self.q_solvers.iter_mut().zip(&problem.blocks) {
            let (new, nfact) = QSolver::build(&blk.q, sigma)?;
            *qs = new;
            self.factorizations += nfact;
        }
        self.sigma = sigma;
        Ok(())
    }

    pub fn coupling_is_scalar(&self) -> Option<f64> {
        match self.a_solver {
            NormalSolver::Scalar(alpha) => Some(alpha),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SgsState {
    pub it: PrimalDualIterate,
    pub w_tilde: BlockVector,
    pub sigma: f64,
    pub iteration: usize,
}

impl SgsState {
    pub fn zeros(problem: &BlockAngularProblem, sigma: f64) -> Self {
        SgsState {
            it: PrimalDualIterate::zeros(problem),
            w_tilde: BlockVector::zeros_like(problem),
            sigma,
            iteration: 0,
        }
    }
}

struct BlockPass {
    w_tilde: Vec<f64>,
    q_new: Vec<f64>,
    s_new: Vec<f64>,
    y_new: Vec<f64>,
    h: Vec<f64>,
    prox_warm: Option<Vec<f64>>,
}

pub struct SgsSolver<'a> {
    pub problem: &'a BlockAngularProblem,
    pub params: SgsAdmmParams,
    pub cache: FactorCache,
    pub state: SgsState,
    norms: NormCache,
    warm_prox: Vec<Option<Vec<f64>>>,
}

impl<'a> SgsSolver<'a> {
    pub fn new(problem: &'a BlockAngularProblem, params: SgsAdmmParams) -> Result<Self> {
        let state = SgsState::zeros(problem, params.sigma0);
        Self::from_state(problem, params, state)
    }

    /// Assemble from pre-built parts without validation or factorization;
    /// the recursive subproblem path re-enters here every outer iteration.
    pub(crate) fn assemble(
        problem: &'a BlockAngularProblem,
        params: SgsAdmmParams,
        cache: FactorCache,
        state: SgsState,
        norms: NormCache,
    ) -> Self {
        let warm_prox = vec![None; problem.blocks.len()];
        SgsSolver { problem, params, cache, state, norms, warm_prox }
    }

    pub(crate) fn into_parts(self) -> (FactorCache, SgsState) {
        (self.cache, self.state)
    }

    /// Resume from an explicit state; used to prove sigma re-stamping does
    /// not perturb the trajectory.
    pub fn from_state(
        problem: &'a BlockAngularProblem,
        params: SgsAdmmParams,
        state: SgsState,
    ) -> Result<Self> {
        params.check()?;
        let report = problem.validate();
        if !report.is_valid() {
            return Err(Error::InvalidProblem(report.violations.join("; ")));
        }
        let cache = FactorCache::build(problem, state.sigma, params.linear_solver)?;
        let norms = NormCache::new(problem);
        let warm_prox = vec![None; problem.blocks.len()];
        Ok(SgsSolver { problem, params, cache, state, norms, warm_prox })
    }

    fn linear_tol(&self) -> f64 {
        let k = (self.state.iteration + 1) as f64;
        (0.1 / (k * k)).max(1e-12)
    }

    pub fn iterate_once(&mut self) -> Result<()> {
        debug_assert_eq!(self.cache.sigma, self.state.sigma, "cache sigma stamp stale");
        let sigma = self.state.sigma;
        let sigma_inv = 1.0 / sigma;
        let tau = self.params.tau;
        let ltol = self.linear_tol();
        let it = &self.state.it;
        let blocks = &self.problem.blocks;

        // g_i = A_i^T y0 + z_i - c_i + x_i / sigma
        let g: Vec<Vec<f64>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| {
                let mut gi = blk.a.mul_vec_t(&it.y0);
                for j in 0..blk.dim() {
                    gi[j] += it.z.segments[i][j] - blk.c[j] + sigma_inv * it.x.segments[i][j];
                }
                gi
            })
            .collect();

        // forward/backward sweep over (y_i, w_i, s_i) per block
        let passes: Vec<Result<BlockPass>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| {
                self.block_pass(i, blk, &g[i], sigma, sigma_inv, ltol)
            })
            .collect();
        let mut w_tilde = Vec::with_capacity(blocks.len());
        let mut q_new = Vec::with_capacity(blocks.len());
        let mut s_new = Vec::with_capacity(blocks.len());
        let mut y_new = Vec::with_capacity(blocks.len());
        let mut h = Vec::with_capacity(blocks.len());
        for (i, pass) in passes.into_iter().enumerate() {
            let pass = pass?;
            w_tilde.push(pass.w_tilde);
            q_new.push(pass.q_new);
            s_new.push(pass.s_new);
            y_new.push(pass.y_new);
            h.push(pass.h);
            self.warm_prox[i] = pass.prox_warm;
        }

        // coupling sweep over (y_0, z): solve, project, re-solve
        let az: Vec<Vec<f64>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| {
                let v = vecops::add(&self.state.it.z.segments[i], &h[i]);
                blk.a.mul_vec(&v)
            })
            .collect();
        let mut rhs0: Vec<f64> = self.problem.b0.iter().map(|v| v * sigma_inv).collect();
        for a in &az {
            for (r, v) in rhs0.iter_mut().zip(a) {
                *r -= v;
            }
        }
        let y0_bar = self.cache.a_solver.solve(&rhs0, ltol);
        let z_new: Vec<Vec<f64>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| {
                let mut u = blk.a.mul_vec_t(&y0_bar);
                vecops::axpy(1.0, &h[i], &mut u);
                moreau_cone_step(&blk.cone, sigma, &u)
            })
            .collect();
        let az2: Vec<Vec<f64>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| blk.a.mul_vec(&vecops::add(&z_new[i], &h[i])))
            .collect();
        let mut rhs0: Vec<f64> = self.problem.b0.iter().map(|v| v * sigma_inv).collect();
        for a in &az2 {
            for (r, v) in rhs0.iter_mut().zip(a) {
                *r -= v;
            }
        }
        let y0_new = self.cache.a_solver.solve(&rhs0, ltol);

        // multiplier step x += tau*sigma*(dual feasibility residual)
        let x_new: Vec<Vec<f64>> = blocks
            .par_iter()
            .enumerate()
            .map(|(i, blk)| {
                let mut r = blk.a.mul_vec_t(&y0_new);
                if let Some(d) = &blk.d {
                    vecops::axpy(1.0, &d.mul_vec_t(&y_new[i]), &mut r);
                }
                let xi = &self.state.it.x.segments[i];
                (0..blk.dim())
                    .map(|j| {
                        xi[j] + tau
                            * sigma
                            * (-q_new[i][j] + r[j] + s_new[i][j] + z_new[i][j] - blk.c[j])
                    })
                    .collect()
            })
            .collect();

        let wqw: f64 = w_tilde
            .iter()
            .zip(&q_new)
            .map(|(w, q)| vecops::dot(w, q))
            .sum();
        let st = &mut self.state;
        st.it.x = BlockVector { segments: x_new };
        st.it.y0 = y0_new;
        st.it.y = y_new;
        st.it.s = BlockVector { segments: s_new };
        st.it.z = BlockVector { segments: z_new };
        st.it.q = BlockVector { segments: q_new };
        st.it.wqw = wqw;
        st.w_tilde = BlockVector { segments: w_tilde };
        st.iteration += 1;
        Ok(())
    }

    fn block_pass(
        &self,
        i: usize,
        blk: &Block,
        gi: &[f64],
        sigma: f64,
        sigma_inv: f64,
        ltol: f64,
    ) -> Result<BlockPass> {
        let it = &self.state.it;
        let si = &it.s.segments[i];
        let qi = &it.q.segments[i];
        let theta_zero = blk.theta.is_zero();
        let q_zero = blk.q.is_zero();

        let dty_bar = match &blk.d {
            None => vec![0.0; blk.dim()],
            Some(d) => {
                // forward local solve with the old (w, s)
                let mut arg = vec![0.0; blk.dim()];
                for j in 0..blk.dim() {
                    arg[j] = -qi[j] + si[j] + gi[j];
                }
                let mut rhs: Vec<f64> =
                    blk.b.as_ref().unwrap().iter().map(|v| v * sigma_inv).collect();
                vecops::axpy(-1.0, &d.mul_vec(&arg), &mut rhs);
                let y_bar = self.cache.d_solvers[i].solve(&rhs, ltol);
                d.mul_vec_t(&y_bar)
            }
        };

        // forward quadratic solve (skipped when Q = 0)
        let (w_bar, q_bar) = if q_zero {
            (Vec::new(), vec![0.0; blk.dim()])
        } else {
            let rhs: Vec<f64> = (0..blk.dim())
                .map(|j| sigma * (dty_bar[j] + si[j] + gi[j]))
                .collect();
            let w = self.cache.q_solvers[i].solve(&rhs);
            let q = blk.q.apply(&w);
            (w, q)
        };

        // s-update (skipped when theta = 0, in which case s stays put and
        // the forward quadratic solve already equals the backward one)
        let (s_new, prox_warm) = if theta_zero {
            (si.clone(), None)
        } else {
            let a: Vec<f64> = (0..blk.dim())
                .map(|j| -q_bar[j] + dty_bar[j] + gi[j])
                .collect();
            let (s, prox) = moreau_theta_step(
                &blk.theta,
                sigma,
                &a,
                1e-12,
                self.warm_prox[i].as_deref(),
            )?;
            (s, Some(prox.point))
        };

        // backward quadratic solve with the new s
        let (w_new, q_new) = if q_zero {
            (vec![0.0; blk.dim()], vec![0.0; blk.dim()])
        } else if theta_zero {
            (w_bar, q_bar)
        } else {
            let rhs: Vec<f64> = (0..blk.dim())
                .map(|j| sigma * (dty_bar[j] + s_new[j] + gi[j]))
                .collect();
            let w = self.cache.q_solvers[i].solve(&rhs);
            let q = blk.q.apply(&w);
            (w, q)
        };

        // backward local solve with the new (w, s)
        let (y_new, dty_new) = match &blk.d {
            None => (Vec::new(), vec![0.0; blk.dim()]),
            Some(d) => {
                let mut arg = vec![0.0; blk.dim()];
                for j in 0..blk.dim() {
                    arg[j] = -q_new[j] + s_new[j] + gi[j];
                }
                let mut rhs: Vec<f64> =
                    blk.b.as_ref().unwrap().iter().map(|v| v * sigma_inv).collect();
                vecops::axpy(-1.0, &d.mul_vec(&arg), &mut rhs);
                let y = self.cache.d_solvers[i].solve(&rhs, ltol);
                let dty = d.mul_vec_t(&y);
                (y, dty)
            }
        };

        let xi = &it.x.segments[i];
        let h: Vec<f64> = (0..blk.dim())
            .map(|j| -q_new[j] + dty_new[j] + s_new[j] - blk.c[j] + sigma_inv * xi[j])
            .collect();
        Ok(BlockPass { w_tilde: w_new, q_new, s_new, y_new, h, prox_warm })
    }

    pub fn residuals(&self) -> Residuals {
        compute_residuals(self.problem, &self.state.it, &self.norms)
    }

    pub fn solve(&mut self) -> Result<(PrimalDualIterate, SolveReport)> {
        let start = Instant::now();
        let mut report = SolveReport::new("sgs-admm", &self.problem.meta.name);
        report.ridge_notes = self.cache.ridge_notes.clone();
        let mut checks = 0usize;
        let mut terminated = false;
        while self.state.iteration < self.params.max_iter {
            self.iterate_once()?;
            if self.state.iteration % self.params.check_interval == 0
                || self.state.iteration == self.params.max_iter
            {
                let res = self.residuals();
                checks += 1;
                report.trace.push(TracePoint {
                    iteration: self.state.iteration,
                    sigma: self.state.sigma,
                    residuals: res.clone(),
                });
                report.final_residuals = res.clone();
                if res.eta <= self.params.tol {
                    report.termination = Termination::Converged;
                    terminated = true;
                    break;
                }
                if let SigmaUpdate::Balance { interval, factor } = self.params.sigma_update {
                    if checks % interval == 0 {
                        let mut sigma = self.state.sigma;
                        if res.eta_p > 5.0 * res.eta_d {
                            sigma *= factor;
                        } else if res.eta_d > 5.0 * res.eta_p {
                            sigma /= factor;
                        }
                        sigma = sigma.clamp(1e-4, 1e4);
                        if sigma != self.state.sigma {
                            self.cache.restamp(self.problem, sigma)?;
                            self.state.sigma = sigma;
                        }
                    }
                }
            }
        }
        if !terminated {
            report.final_residuals = self.residuals();
            if report.final_residuals.eta <= self.params.tol {
                report.termination = Termination::Converged;
            } else {
                report.termination = Termination::MaxIterations;
            }
        }
        report.iterations = self.state.iteration;
        report.factorizations = self.cache.factorizations;
        report.wall_time_s = start.elapsed().as_secs_f64();
        Ok((self.state.it.clone(), report))
    }
}

/// Convenience wrapper: build a solver and run it.
pub fn solve(
    problem: &BlockAngularProblem,
    params: SgsAdmmParams,
) -> Result<(PrimalDualIterate, SolveReport)> {
    SgsSolver::new(problem, params)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Cone, Metadata, SeparableFunction};
    use std::sync::Arc;

    fn tiny_qp() -> BlockAngularProblem {
        // min 0.5 x^2 s.t. x = 1
        let a = Arc::new(SparseMatrix::identity(1));
        BlockAngularProblem {
            blocks: vec![Block {
                a,
                d: None,
                q: Quadratic::Diagonal(vec![1.0]),
                c: vec![0.0],
                b: None,
                cone: Cone::Free(1),
                theta: SeparableFunction::Zero,
            }],
            b0: vec![1.0],
            meta: Metadata::default(),
        }
    }

    fn two_block() -> BlockAngularProblem {
        // N=1: min 0.5||x0||^2 + c0.x0 + 0.5||x1||^2  s.t. x0 + x1 (coupled), x1 local row
        let a0 = Arc::new(SparseMatrix::identity(2));
        let a1 = Arc::new(SparseMatrix::from_triplets(2, 2, &[(0, 0, -1.0), (1, 1, -1.0)]).unwrap());
        let d1 = Arc::new(SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap());
        BlockAngularProblem {
            blocks: vec![
                Block {
                    a: a0,
                    d: None,
                    q: Quadratic::Diagonal(vec![1.0, 1.0]),
                    c: vec![0.3, -0.2],
                    b: None,
                    cone: Cone::NonNeg(2),
                    theta: SeparableFunction::Zero,
                },
                Block {
                    a: a1,
                    d: Some(d1),
                    q: Quadratic::Diagonal(vec![1.0, 1.0]),
                    c: vec![0.0, 0.0],
                    b: Some(vec![1.0]),
                    cone: Cone::NonNeg(2),
                    theta: SeparableFunction::Zero,
                },
            ],
            b0: vec![0.0, 0.0],
            meta: Metadata::default(),
        }
    }

    #[test]
    fn tiny_qp_converges_to_known_solution() {
        let p = tiny_qp();
        let params = SgsAdmmParams { tol: 1e-9, ..Default::default() };
        let (it, report) = solve(&p, params).unwrap();
        assert!(report.converged(), "{:?}", report.final_residuals);
        assert!((it.x.segments[0][0] - 1.0).abs() <= 1e-6);
        // multiplier: Qx = A^T y0 -> y0 = 1
        assert!((it.y0[0] - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn hand_evaluated_first_iteration() {
        // N=1, m0=1, n=1 per block, all scalars; replicate the update
        // formulas with plain arithmetic and compare one iteration from zero
        let a0 = Arc::new(SparseMatrix::from_triplets(1, 1, &[(0, 0, 2.0)]).unwrap());
        let a1 = Arc::new(SparseMatrix::from_triplets(1, 1, &[(0, 0, -1.0)]).unwrap());
        let d1 = Arc::new(SparseMatrix::from_triplets(1, 1, &[(0, 0, 3.0)]).unwrap());
        let p = BlockAngularProblem {
            blocks: vec![
                Block {
                    a: a0,
                    d: None,
                    q: Quadratic::Diagonal(vec![0.5]),
                    c: vec![1.0],
                    b: None,
                    cone: Cone::NonNeg(1),
                    theta: SeparableFunction::Zero,
                },
                Block {
                    a: a1,
                    d: Some(d1),
                    q: Quadratic::Zero(1),
                    c: vec![-2.0],
                    b: Some(vec![3.0]),
                    cone: Cone::Free(1),
                    theta: SeparableFunction::Zero,
                },
            ],
            b0: vec![4.0],
            meta: Metadata::default(),
        };
        let params = SgsAdmmParams { sigma0: 2.0, tau: 1.5, ..Default::default() };
        let mut solver = SgsSolver::new(&p, params).unwrap();
        solver.iterate_once().unwrap();

        // hand evaluation, all from zero start, sigma=2, tau=1.5
        let sigma = 2.0f64;
        let tau = 1.5f64;
        let (c0, c1) = (1.0, -2.0);
        let (g0, g1) = (-c0, -c1);
        // block 1: D D^T = 9; y1_bar = (b/sigma - D*(s+g)) / 9
        let y1_bar = (3.0 / sigma - 3.0 * g1) / 9.0;
        // Q1 = 0 so q1 = 0; theta = 0 so s stays 0; y1_new = y1_bar (same rhs)
        let y1_new = y1_bar;
        // block 0: Q = 0.5 diag; w~ = sigma*g0/(1+sigma*0.5); q0 = 0.5 w~
        let w0 = sigma * g0 / (1.0 + sigma * 0.5);
        let q0 = 0.5 * w0;
        // h_i = -q_i + D^T y_new + s - c + x/sigma
        let h0 = -q0 - c0;
        let h1 = 3.0 * y1_new - c1;
        // coupling: sum A A^T = 4 + 1 = 5
        let y0_bar = (4.0 / sigma - (2.0 * h0 + (-1.0) * h1)) / 5.0;
        // z: block0 NonNeg on u0 = 2*y0_bar + h0; block1 Free -> 0
        let u0 = 2.0 * y0_bar + h0;
        let z0 = (sigma * u0).max(0.0) / sigma - u0;
        let z1 = 0.0;
        let y0_new = (4.0 / sigma - (2.0 * (z0 + h0) + (-1.0) * (z1 + h1))) / 5.0;
        let x0 = tau * sigma * (-q0 + 2.0 * y0_new + z0 - c0);
        let x1 = tau * sigma * (-y0_new + 3.0 * y1_new + z1 - c1);

        let it = &solver.state.it;
        assert!((it.y[1][0] - y1_new).abs() <= 1e-14);
        assert!((it.q.segments[0][0] - q0).abs() <= 1e-14);
        assert!((it.y0[0] - y0_new).abs() <= 1e-14);
        assert!((it.z.segments[0][0] - z0).abs() <= 1e-14);
        assert!((it.x.segments[0][0] - x0).abs() <= 1e-14);
        assert!((it.x.segments[1][0] - x1).abs() <= 1e-14);
    }

    #[test]
    fn exact_kkt_point_is_fixed() {
        // min c.x s.t. [1 1]x = 1, x >= 0: vertex x=(1,0), y0=1, z=(0,1)
        let a = Arc::new(SparseMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap());
        let p = BlockAngularProblem {
            blocks: vec![Block {
                a,
                d: None,
                q: Quadratic::Zero(2),
                c: vec![1.0, 2.0],
                b: None,
                cone: Cone::NonNeg(2),
                theta: SeparableFunction::Zero,
            }],
            b0: vec![1.0],
            meta: Metadata::default(),
        };
        let mut state = SgsState::zeros(&p, 1.0);
        state.it.x.segments[0] = vec![1.0, 0.0];
        state.it.y0 = vec![1.0];
        state.it.z.segments[0] = vec![0.0, 1.0];
        let before = state.it.clone();
        let mut solver = SgsSolver::from_state(&p, SgsAdmmParams::default(), state).unwrap();
        solver.iterate_once().unwrap();
        let after = &solver.state.it;
        let dx = vecops::sub(&after.x.segments[0], &before.x.segments[0]);
        let dz = vecops::sub(&after.z.segments[0], &before.z.segments[0]);
        assert!(vecops::norm2(&dx) <= 1e-9);
        assert!(vecops::norm2(&dz) <= 1e-9);
        assert!((after.y0[0] - before.y0[0]).abs() <= 1e-9);
    }

    #[test]
    fn two_block_converges() {
        let p = two_block();
        let params = SgsAdmmParams { tol: 1e-8, ..Default::default() };
        let (it, report) = solve(&p, params).unwrap();
        assert!(report.converged(), "{:?}", report.final_residuals);
        // local row satisfied
        let local = it.x.segments[1][0] + it.x.segments[1][1];
        assert!((local - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn q_range_certificate() {
        let p = two_block();
        let params = SgsAdmmParams::default();
        let mut solver = SgsSolver::new(&p, params).unwrap();
        for _ in 0..25 {
            solver.iterate_once().unwrap();
            for (i, blk) in p.blocks.iter().enumerate() {
                let recomputed = blk.q.apply(&solver.state.w_tilde.segments[i]);
                let stored = &solver.state.it.q.segments[i];
                let diff = vecops::sub(&recomputed, stored);
                assert!(vecops::norm2(&diff) <= 1e-12 * (1.0 + vecops::norm2(stored)));
            }
        }
    }

    #[test]
    fn multiplier_step_matches_dual_residual() {
        let p = two_block();
        let mut solver = SgsSolver::new(&p, SgsAdmmParams::default()).unwrap();
        for _ in 0..5 {
            let x_before = solver.state.it.x.clone();
            solver.iterate_once().unwrap();
            let st = &solver.state;
            let tau_sigma = solver.params.tau * st.sigma;
            for (i, blk) in p.blocks.iter().enumerate() {
                let mut r = blk.a.mul_vec_t(&st.it.y0);
                if let Some(d) = &blk.d {
                    vecops::axpy(1.0, &d.mul_vec_t(&st.it.y[i]), &mut r);
                }
                for j in 0..blk.dim() {
                    let rd = -st.it.q.segments[i][j]
                        + r[j]
                        + st.it.s.segments[i][j]
                        + st.it.z.segments[i][j]
                        - blk.c[j];
                    let dx = st.it.x.segments[i][j] - x_before.segments[i][j];
                    assert!((dx - tau_sigma * rd).abs() <= 1e-13 * (1.0 + rd.abs()));
                }
            }
        }
    }

    #[test]
    fn sigma_restamp_is_exact() {
        let p = two_block();
        let params = SgsAdmmParams { sigma_update: SigmaUpdate::Fixed, ..Default::default() };
        let mut solver = SgsSolver::new(&p, params.clone()).unwrap();
        for _ in 0..7 {
            solver.iterate_once().unwrap();
        }
        let new_sigma = 2.5;
        solver.cache.restamp(&p, new_sigma).unwrap();
        solver.state.sigma = new_sigma;
        let snapshot = solver.state.clone();
        solver.iterate_once().unwrap();
        let mut fresh = SgsSolver::from_state(&p, params, snapshot).unwrap();
        fresh.iterate_once().unwrap();
        for i in 0..p.blocks.len() {
            let d = vecops::sub(
                &solver.state.it.x.segments[i],
                &fresh.state.it.x.segments[i],
            );
            assert!(vecops::norm2(&d) <= 1e-12);
        }
        assert!(
            vecops::norm2(&vecops::sub(&solver.state.it.y0, &fresh.state.it.y0)) <= 1e-12
        );
    }

    #[test]
    fn shortcut_matches_general_path() {
        // LP: shortcut (Zero Q / Zero theta) vs the general path forced by
        // Diagonal(0) Q and L1(0) theta, which are the same functions
        let make = |general: bool| {
            let mut p = two_block();
            for blk in &mut p.blocks {
                blk.q = if general {
                    Quadratic::Diagonal(vec![0.0, 0.0])
                } else {
                    Quadratic::Zero(2)
                };
                blk.theta = if general {
                    SeparableFunction::L1 { weight: 0.0 }
                } else {
                    SeparableFunction::Zero
                };
            }
            p
        };
        let p_short = make(false);
        let p_gen = make(true);
        let params = SgsAdmmParams { sigma_update: SigmaUpdate::Fixed, ..Default::default() };
        let mut s1 = SgsSolver::new(&p_short, params.clone()).unwrap();
        let mut s2 = SgsSolver::new(&p_gen, params).unwrap();
        for _ in 0..100 {
            s1.iterate_once().unwrap();
            s2.iterate_once().unwrap();
            for i in 0..2 {
                let d = vecops::sub(
                    &s1.state.it.x.segments[i],
                    &s2.state.it.x.segments[i],
                );
                assert!(vecops::norm2(&d) <= 1e-12 * (1.0 + s1.state.it.x.norm2()));
            }
        }
    }

    #[test]
    fn invalid_problem_rejected() {
        let mut p = two_block();
        p.blocks[1].a = Arc::new(SparseMatrix::zeros(3, 2));
        assert!(matches!(
            SgsSolver::new(&p, SgsAdmmParams::default()),
            Err(Error::InvalidProblem(_))
        ));
    }

    #[test]
    fn infinite_tol_returns_immediately() {
        let p = two_block();
        let params = SgsAdmmParams { tol: f64::INFINITY, ..Default::default() };
        let (_, report) = solve(&p, params).unwrap();
        assert!(report.converged());
        assert!(report.iterations <= 10);
    }

    #[test]
    fn bad_tau_rejected() {
        let p = tiny_qp();
        let params = SgsAdmmParams { tau: 1.7, ..Default::default() };
        assert!(matches!(SgsSolver::new(&p, params), Err(Error::Parameter(_))));
    }

    #[test]
    fn mcf_like_coupling_detected_as_scalar() {
        // A_0 = I, A_1 = -I: sum A A^T = 2I
        let a0 = Arc::new(SparseMatrix::identity(3));
        let a1 = Arc::new(SparseMatrix::identity(3).scaled(-1.0));
        let d1 = Arc::new(SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap());
        let p = BlockAngularProblem {
            blocks: vec![
                Block {
                    a: a0,
                    d: None,
                    q: Quadratic::Zero(3),
                    c: vec![1.0; 3],
                    b: None,
                    cone: Cone::NonNeg(3),
                    theta: SeparableFunction::Zero,
                },
                Block {
                    a: a1,
                    d: Some(d1),
                    q: Quadratic::Zero(3),
                    c: vec![0.0; 3],
                    b: Some(vec![1.0]),
                    cone: Cone::NonNeg(3),
                    theta: SeparableFunction::Zero,
                },
            ],
            b0: vec![0.0; 3],
            meta: Metadata::default(),
        };
        let solver = SgsSolver::new(&p, SgsAdmmParams::default()).unwrap();
        assert_eq!(solver.cache.coupling_is_scalar(), Some(2.0));
    }

    #[test]
    fn pcg_backend_agrees_with_direct() {
        let p = two_block();
        let direct = SgsAdmmParams {
            tol: 1e-7,
            sigma_update: SigmaUpdate::Fixed,
            ..Default::default()
        };
        let iterative = SgsAdmmParams {
            linear_solver: LinearSolverKind::Pcg,
            ..direct.clone()
        };
        let (it1, r1) = solve(&p, direct).unwrap();
        let (it2, r2) = solve(&p, iterative).unwrap();
        assert!(r1.converged() && r2.converged());
        for i in 0..2 {
            let d = vecops::sub(&it1.x.segments[i], &it2.x.segments[i]);
            assert!(vecops::norm2(&d) <= 1e-4);
        }
    }
}
