//! KKT mapping and the five relative residuals used for termination by every
//! solver: primal feasibility, dual feasibility, Q-consistency, cone
//! complementarity, and prox complementarity.

use crate::model::{BlockAngularProblem, BlockVector, Cone, Quadratic, SeparableFunction};
use crate::prox::{project_cone, prox_theta};
use crate::sparse::spectral_norm;
use crate::vecops;

#[derive(Debug, Clone)]
pub struct PrimalDualIterate {
    pub x: BlockVector,
    pub y0: Vec<f64>,
    /// local-row multipliers, aligned with blocks; empty vector when no D_i
    pub y: Vec<Vec<f64>>,
    pub s: BlockVector,
    pub z: BlockVector,
    /// q_i = Q_i applied to the implicit dual argument w
    pub q: BlockVector,
    /// the scalar <w, Qw> tracked by the producing solver
    pub wqw: f64,
}

impl PrimalDualIterate {
    pub fn zeros(problem: &BlockAngularProblem) -> Self {
        PrimalDualIterate {
            x: BlockVector::zeros_like(problem),
            y0: vec![0.0; problem.m0()],
            y: problem.blocks.iter().map(|b| vec![0.0; b.local_rows()]).collect(),
            s: BlockVector::zeros_like(problem),
            z: BlockVector::zeros_like(problem),
            q: BlockVector::zeros_like(problem),
            wqw: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct Residuals {
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_q: f64,
    pub eta_k: f64,
    pub eta_s: f64,
    pub eta: f64,
    pub primal_obj: f64,
    /// -inf when a conjugate/support term is infinite at the iterate
    pub dual_obj: f64,
}

#[derive(Debug, Clone)]
pub struct NormCache {
    pub norm_b: f64,
    pub norm_c: f64,
    pub norm_q: f64,
}

impl NormCache {
    pub fn new(problem: &BlockAngularProblem) -> Self {
        let norm_b = vecops::norm2(&problem.stacked_rhs());
        let norm_c = problem
            .blocks
            .iter()
            .map(|b| vecops::dot(&b.c, &b.c))
            .sum::<f64>()
            .sqrt();
        let norm_q = problem
            .blocks
            .iter()
            .map(|b| match &b.q {
                Quadratic::Zero(_) => 0.0,
                Quadratic::Diagonal(d) => vecops::norm_inf(d),
                Quadratic::Sparse(m) => spectral_norm(m),
            })
            .fold(0.0, f64::max);
        NormCache { norm_b, norm_c, norm_q }
    }
}

struct ResidualBlocks {
    rp: Vec<f64>,
    rd: Vec<f64>,
    rq: Vec<f64>,
    rk: Vec<f64>,
    rs: Vec<f64>,
}

fn residual_blocks(problem: &BlockAngularProblem, it: &PrimalDualIterate) -> ResidualBlocks {
    let mut rp = problem.apply_b(&it.x);
    let rhs = problem.stacked_rhs();
    for (r, b) in rp.iter_mut().zip(&rhs) {
        *r -= b;
    }
    let mut rd = Vec::with_capacity(problem.total_dim());
    let mut rq = Vec::with_capacity(problem.total_dim());
    let mut rk = Vec::with_capacity(problem.total_dim());
    let mut rs = Vec::with_capacity(problem.total_dim());
    for (i, blk) in problem.blocks.iter().enumerate() {
        let xi = &it.x.segments[i];
        let si = &it.s.segments[i];
        let zi = &it.z.segments[i];
        let qi = &it.q.segments[i];
        let mut di = blk.a.mul_vec_t(&it.y0);
        if let Some(d) = &blk.d {
            vecops::axpy(1.0, &d.mul_vec_t(&it.y[i]), &mut di);
        }
        for j in 0..blk.dim() {
            rd.push(-qi[j] + di[j] + si[j] + zi[j] - blk.c[j]);
        }
        let qx = blk.q.apply(xi);
        for j in 0..blk.dim() {
            rq.push(qi[j] - qx[j]);
        }
        let shifted: Vec<f64> = xi.iter().zip(zi).map(|(x, z)| x - z).collect();
        let proj = project_cone(&blk.cone, &shifted);
        for j in 0..blk.dim() {
            rk.push(xi[j] - proj[j]);
        }
        let shifted: Vec<f64> = xi.iter().zip(si).map(|(x, s)| x - s).collect();
        let px = prox_theta(&blk.theta, 1.0, &shifted, 1e-13, Some(xi))
            .expect("unit sigma prox")
            .point;
        for j in 0..blk.dim() {
            rs.push(xi[j] - px[j]);
        }
    }
    ResidualBlocks { rp, rd, rq, rk, rs }
}

/// Stacked unscaled KKT residual vector.
pub fn kkt_map(problem: &BlockAngularProblem, it: &PrimalDualIterate) -> Vec<f64> {
    let b = residual_blocks(problem, it);
    let mut out = b.rp;
    out.extend(b.rd);
    out.extend(b.rq);
    out.extend(b.rk);
    out.extend(b.rs);
    out
}

/// Conjugate of the separable term at v = -s, summed; +inf when outside dom.
fn theta_conjugate_neg(theta: &SeparableFunction, s: &[f64]) -> f64 {
    const FEAS_TOL: f64 = 1e-9;
    match theta {
        SeparableFunction::Zero => {
            if vecops::norm_inf(s) > FEAS_TOL {
                f64::INFINITY
            } else {
                0.0
            }
        }
        SeparableFunction::L1 { weight } => {
            if s.iter().any(|&v| v.abs() > weight + FEAS_TOL) {
                f64::INFINITY
            } else {
                0.0
            }
        }
        SeparableFunction::Kleinrock { cap } => {
            let mut total = 0.0;
            for (&sj, &cj) in s.iter().zip(cap) {
                let v = -sj;
                if v > 1.0 / cj {
                    let root = (v * cj).sqrt() - 1.0;
                    total += root * root;
                }
            }
            total
        }
        SeparableFunction::Bpr { cap, freeflow, b, beta } => {
            let mut total = 0.0;
            for ((&sj, &cj), &rj) in s.iter().zip(cap).zip(freeflow) {
                let v = -sj;
                if v > rj {
                    let t = cj * ((v - rj) / (rj * b * (beta + 1.0))).powf(1.0 / beta);
                    total += t * (v - rj) * beta / (beta + 1.0);
                }
            }
            total
        }
    }
}

/// Support function of the cone at -z; +inf when unbounded.
fn cone_support_neg(cone: &Cone, z: &[f64]) -> f64 {
    const FEAS_TOL: f64 = 1e-9;
    match cone {
        Cone::Free(_) => {
            if vecops::norm_inf(z) > FEAS_TOL {
                f64::INFINITY
            } else {
                0.0
            }
        }
        Cone::NonNeg(_) => {
            if z.iter().any(|&v| v < -FEAS_TOL) {
                f64::INFINITY
            } else {
                0.0
            }
        }
        Cone::Box { lower, upper } => {
            let mut total = 0.0;
            for (&zj, (&l, &u)) in z.iter().zip(lower.iter().zip(upper)) {
                let v = -zj;
                let bound = if v > 0.0 { u } else { l };
                if v != 0.0 {
                    if bound.is_infinite() {
                        return f64::INFINITY;
                    }
                    total += v * bound;
                }
            }
            total
        }
    }
}

pub fn compute_residuals(
    problem: &BlockAngularProblem,
    it: &PrimalDualIterate,
    cache: &NormCache,
) -> Residuals {
    let b = residual_blocks(problem, it);
    let norm_x = it.x.norm2();
    let norm_s = it.s.norm2();
    let norm_z = it.z.norm2();
    let eta_p = vecops::norm2(&b.rp) / (1.0 + cache.norm_b);
    let eta_d = vecops::norm2(&b.rd) / (1.0 + cache.norm_c);
    let eta_q = vecops::norm2(&b.rq) / (1.0 + cache.norm_q);
    let eta_k = vecops::norm2(&b.rk) / (1.0 + norm_x + norm_z);
    let eta_s = vecops::norm2(&b.rs) / (1.0 + norm_x + norm_s);
    let eta = eta_p.max(eta_d).max(eta_q).max(eta_k).max(eta_s);
    let primal_obj = problem.objective(&it.x);
    let mut by = vecops::dot(&problem.b0, &it.y0);
    let mut support = 0.0;
    let mut conj = 0.0;
    for (i, blk) in problem.blocks.iter().enumerate() {
        if let Some(bi) = &blk.b {
            by += vecops::dot(bi, &it.y[i]);
        }
        conj += theta_conjugate_neg(&blk.theta, &it.s.segments[i]);
        support += cone_support_neg(&blk.cone, &it.z.segments[i]);
    }
    let dual_obj = if conj.is_infinite() || support.is_infinite() {
        f64::NEG_INFINITY
    } else {
        by - conj - 0.5 * it.wqw - support
    };
    Residuals { eta_p, eta_d, eta_q, eta_k, eta_s, eta, primal_obj, dual_obj }
}
