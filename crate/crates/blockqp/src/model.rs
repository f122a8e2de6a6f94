//! Data model for block-angular problems: a row of coupling blocks A_i over
//! a block-diagonal of local blocks D_i, with per-block quadratic cost,
//! separable convex term, and cone constraint.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use crate::vecops;

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    Free(usize),
    NonNeg(usize),
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl Cone {
    pub fn dim(&self) -> usize {
        match self {
            Cone::Free(n) | Cone::NonNeg(n) => *n,
            Cone::Box { lower, .. } => lower.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SeparableFunction {
    Zero,
    /// weight * ||x||_1
    L1 { weight: f64 },
    /// sum_j x_j / (cap_j - x_j) on [0, cap_j)
    Kleinrock { cap: Vec<f64> },
    /// sum_j r_j * x_j * (1 + b * (x_j / cap_j)^beta) on x_j >= 0
    Bpr { cap: Vec<f64>, freeflow: Vec<f64>, b: f64, beta: f64 },
}

impl SeparableFunction {
    pub fn is_zero(&self) -> bool {
        matches!(self, SeparableFunction::Zero)
    }

    /// Value at x, or +inf outside the domain.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            SeparableFunction::Zero => 0.0,
            SeparableFunction::L1 { weight } => {
                weight * x.iter().map(|v| v.abs()).sum::<f64>()
            }
            SeparableFunction::Kleinrock { cap } => {
                let mut total = 0.0;
                for (&xj, &cj) in x.iter().zip(cap) {
                    if xj < 0.0 || xj >= cj {
                        return f64::INFINITY;
                    }
                    total += xj / (cj - xj);
                }
                total
            }
            SeparableFunction::Bpr { cap, freeflow, b, beta } => {
                let mut total = 0.0;
                for ((&xj, &cj), &rj) in x.iter().zip(cap).zip(freeflow) {
                    if xj < 0.0 {
                        return f64::INFINITY;
                    }
                    total += rj * xj * (1.0 + b * (xj / cj).powf(*beta));
                }
                total
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Quadratic {
    Zero(usize),
    Diagonal(Vec<f64>),
    Sparse(SparseMatrix),
}

impl Quadratic {
    pub fn dim(&self) -> usize {
        match self {
            Quadratic::Zero(n) => *n,
            Quadratic::Diagonal(d) => d.len(),
            Quadratic::Sparse(m) => m.ncols(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Quadratic::Zero(_))
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Quadratic::Zero(n) => vec![0.0; *n],
            Quadratic::Diagonal(d) => d.iter().zip(v).map(|(di, vi)| di * vi).collect(),
            Quadratic::Sparse(m) => m.mul_vec(v),
        }
    }

    pub fn quad_form(&self, v: &[f64]) -> f64 {
        match self {
            Quadratic::Zero(_) => 0.0,
            Quadratic::Diagonal(d) => d.iter().zip(v).map(|(di, vi)| di * vi * vi).sum(),
            Quadratic::Sparse(m) => m.quad_form(v),
        }
    }

    /// Materialize as a sparse matrix (for the recursive subproblem path).
    pub fn to_sparse(&self) -> SparseMatrix {
        match self {
            Quadratic::Zero(n) => SparseMatrix::zeros(*n, *n),
            Quadratic::Diagonal(d) => SparseMatrix::diagonal(d),
            Quadratic::Sparse(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    /// coupling rows, m0 x n_i
    pub a: Arc<SparseMatrix>,
    /// local rows, m_i x n_i; None for block 0
    pub d: Option<Arc<SparseMatrix>>,
    pub q: Quadratic,
    pub c: Vec<f64>,
    /// local right-hand side; None for block 0
    pub b: Option<Vec<f64>>,
    pub cone: Cone,
    pub theta: SeparableFunction,
}

impl Block {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn local_rows(&self) -> usize {
        self.d.as_ref().map_or(0, |d| d.nrows())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Metadata {
    pub name: String,
    pub seed: u64,
    pub family: String,
    /// rng algorithm identifier, e.g. "chacha8"
    pub rng_algo: String,
    /// primal feasibility witness when built by a generator
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct BlockAngularProblem {
    /// blocks[0] has no local constraints; blocks[1..] may
    pub blocks: Vec<Block>,
    pub b0: Vec<f64>,
    pub meta: Metadata,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    pub segments: Vec<Vec<f64>>,
}

impl BlockVector {
    pub fn zeros_like(problem: &BlockAngularProblem) -> Self {
        BlockVector { segments: problem.blocks.iter().map(|b| vec![0.0; b.dim()]).collect() }
    }

    pub fn concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.iter().map(|s| s.len()).sum());
        for s in &self.segments {
            out.extend_from_slice(s);
        }
        out
    }

    pub fn norm2(&self) -> f64 {
        self.segments.iter().map(|s| vecops::dot(s, s)).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.segments.iter().map(|s| vecops::norm_inf(s)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl BlockAngularProblem {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// N in the "N+1 blocks" convention.
    pub fn n_coupled(&self) -> usize {
        self.blocks.len().saturating_sub(1)
    }

    pub fn m0(&self) -> usize {
        self.b0.len()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    pub fn total_rows(&self) -> usize {
        self.m0() + self.blocks.iter().map(|b| b.local_rows()).sum::<usize>()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let m0 = self.m0();
        if self.blocks.is_empty() {
            report.violations.push("problem has no blocks".into());
            return report;
        }
        for (i, blk) in self.blocks.iter().enumerate() {
            let n = blk.dim();
            if blk.a.nrows() != m0 {
                report
                    .violations
                    .push(format!("A_{i} row count {} != {m0}", blk.a.nrows()));
            }
            if blk.a.ncols() != n {
                report
                    .violations
                    .push(format!("A_{i} column count {} != {n}", blk.a.ncols()));
            }
            if i == 0 && (blk.d.is_some() || blk.b.is_some()) {
                report.violations.push("block 0 must not carry local constraints".into());
            }
            if let Some(d) = &blk.d {
                if d.ncols() != n {
                    report
                        .violations
                        .push(format!("D_{i} column count {} != {n}", d.ncols()));
                }
                match &blk.b {
                    Some(b) if b.len() != d.nrows() => report.violations.push(format!(
                        "b_{i} length {} != D_{i} row count {}",
                        b.len(),
                        d.nrows()
                    )),
                    None => report
                        .violations
                        .push(format!("block {i} has D_{i} but no b_{i}")),
                    _ => {}
                }
            } else if blk.b.is_some() {
                report.violations.push(format!("block {i} has b_{i} but no D_{i}"));
            }
            if blk.q.dim() != n {
                report.violations.push(format!("Q_{i} dim {} != {n}", blk.q.dim()));
            }
            if let Quadratic::Diagonal(d) = &blk.q {
                if d.iter().any(|&v| v < 0.0) {
                    report.violations.push(format!("Q_{i} diagonal has a negative entry"));
                }
            }
            if let Quadratic::Sparse(m) = &blk.q {
                // symmetry exact by storage; PSD checked probabilistically
                for (r, c, v) in m.iter() {
                    if r > c {
                        continue;
                    }
                    let vt: f64 = m.col(r).filter(|&(rr, _)| rr == c).map(|(_, v)| v).sum();
                    if vt != v {
                        report.violations.push(format!("Q_{i} asymmetric at ({r},{c})"));
                        break;
                    }
                }
                let mut state = 0x9e3779b97f4a7c15u64 ^ (i as u64);
                for _ in 0..8 {
                    let v: Vec<f64> = (0..n)
                        .map(|_| {
                            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
                        })
                        .collect();
                    let rayleigh = m.quad_form(&v);
                    if rayleigh < -1e-12 * vecops::dot(&v, &v) {
                        report
                            .violations
                            .push(format!("Q_{i} fails PSD probe (v'Qv = {rayleigh:.3e})"));
                        break;
                    }
                }
            }
            if blk.cone.dim() != n {
                report
                    .violations
                    .push(format!("cone of block {i} has dim {} != {n}", blk.cone.dim()));
            }
            if let Cone::Box { lower, upper } = &blk.cone {
                for (j, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l > u {
                        report
                            .violations
                            .push(format!("box bounds crossed at index {j} of block {i}"));
                    }
                }
            }
            let theta_dim = match &blk.theta {
                SeparableFunction::Zero => n,
                SeparableFunction::L1 { weight } => {
                    if *weight < 0.0 {
                        report.violations.push(format!("L1 weight negative in block {i}"));
                    }
                    n
                }
                SeparableFunction::Kleinrock { cap } => {
                    if cap.iter().any(|&c| c <= 0.0) {
                        report
                            .violations
                            .push(format!("Kleinrock cap must be positive in block {i}"));
                    }
                    cap.len()
                }
                SeparableFunction::Bpr { cap, freeflow, b, beta } => {
                    if cap.iter().any(|&c| c <= 0.0)
                        || freeflow.iter().any(|&r| r < 0.0)
                        || *b <= 0.0
                        || *beta <= 0.0
                    {
                        report.violations.push(format!("invalid BPR data in block {i}"));
                    }
                    cap.len().min(freeflow.len())
                }
            };
            if theta_dim != n {
                report
                    .violations
                    .push(format!("theta of block {i} has dim {theta_dim} != {n}"));
            }
        }
        report
    }

    pub fn split_blocks(&self, flat: &[f64]) -> Result<BlockVector> {
        if flat.len() != self.total_dim() {
            return Err(Error::Dimension(format!(
                "flat vector length {} != total dim {}",
                flat.len(),
                self.total_dim()
            )));
        }
        let mut segments = Vec::with_capacity(self.blocks.len());
        let mut off = 0;
        for blk in &self.blocks {
            segments.push(flat[off..off + blk.dim()].to_vec());
            off += blk.dim();
        }
        Ok(BlockVector { segments })
    }

    pub fn objective(&self, x: &BlockVector) -> f64 {
        let mut total = 0.0;
        for (blk, xi) in self.blocks.iter().zip(&x.segments) {
            let theta = blk.theta.value(xi);
            if theta.is_infinite() {
                return f64::INFINITY;
            }
            total += theta + 0.5 * blk.q.quad_form(xi) + vecops::dot(&blk.c, xi);
        }
        total
    }

    /// Coupling-row product Ax = sum_i A_i x_i.
    pub fn apply_a(&self, x: &BlockVector) -> Vec<f64> {
        let mut out = vec![0.0; self.m0()];
        for (blk, xi) in self.blocks.iter().zip(&x.segments) {
            let axi = blk.a.mul_vec(xi);
            vecops::axpy(1.0, &axi, &mut out);
        }
        out
    }

    /// Full constraint product Bx stacked as (coupling rows; local rows per block).
    pub fn apply_b(&self, x: &BlockVector) -> Vec<f64> {
        let mut out = self.apply_a(x);
        for (blk, xi) in self.blocks.iter().zip(&x.segments) {
            if let Some(d) = &blk.d {
                out.extend_from_slice(&d.mul_vec(xi));
            }
        }
        out
    }

    /// Stacked right-hand side (b0; b_1; ...; b_N).
    pub fn stacked_rhs(&self) -> Vec<f64> {
        let mut out = self.b0.clone();
        for blk in &self.blocks {
            if let Some(b) = &blk.b {
                out.extend_from_slice(b);
            }
        }
        out
    }
}
