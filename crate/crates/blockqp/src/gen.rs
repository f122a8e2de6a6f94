//! Seeded instance generators: multicommodity flow networks, random dense-ish
//! blocks, and table-adjustment problems. Every generated instance is primal
//! feasible by construction and carries its feasibility witness in metadata.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{
    Block, BlockAngularProblem, Cone, Metadata, Quadratic, SeparableFunction,
};
use crate::sparse::SparseMatrix;

const RNG_ALGO: &str = "chacha8";

#[derive(Debug, Clone)]
pub struct GraphSpec {
    pub nodes: usize,
    /// directed arcs (tail, head)
    pub arcs: Vec<(usize, usize)>,
    pub cap: Vec<f64>,
    pub freeflow: Vec<f64>,
}

impl GraphSpec {
    fn check(&self) -> Result<()> {
        if self.arcs.len() != self.cap.len() || self.arcs.len() != self.freeflow.len() {
            return Err(Error::Generator("arc/cap/freeflow length mismatch".into()));
        }
        for &(t, h) in &self.arcs {
            if t == h {
                return Err(Error::Generator(format!("self-loop at node {t}")));
            }
            if t >= self.nodes || h >= self.nodes {
                return Err(Error::Generator(format!("arc ({t},{h}) out of range")));
            }
        }
        // connectivity of the underlying undirected graph
        let mut adj = vec![Vec::new(); self.nodes];
        for &(t, h) in &self.arcs {
            adj[t].push(h);
            adj[h].push(t);
        }
        let mut seen = vec![false; self.nodes];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::Generator("graph is not connected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CommoditySpec {
    pub source: usize,
    pub sink: usize,
    pub demand: f64,
}

#[derive(Debug, Clone)]
pub enum McfObjective {
    /// linear arc costs on the total-flow block
    Linear(Vec<f64>),
    /// Q_i = q * I on every block
    Quad(f64),
    Kleinrock,
    Bpr { b: f64, beta: f64 },
}

/// Node-arc incidence: column for arc (t, h) has +1 at row t, -1 at row h.
pub fn incidence(graph: &GraphSpec) -> Result<SparseMatrix> {
    graph.check()?;
    let mut triplets = Vec::with_capacity(2 * graph.arcs.len());
    for (j, &(t, h)) in graph.arcs.iter().enumerate() {
        triplets.push((t, j, 1.0));
        triplets.push((h, j, -1.0));
    }
    SparseMatrix::from_triplets(graph.nodes, graph.arcs.len(), &triplets)
}

/// Shortest directed path from s to t by BFS; arcs scanned in index order so
/// routing is deterministic. Returns arc indices along the path.
fn route(graph: &GraphSpec, s: usize, t: usize) -> Option<Vec<usize>> {
    let mut out = vec![Vec::new(); graph.nodes];
    for (j, &(tail, head)) in graph.arcs.iter().enumerate() {
        out[tail].push((head, j));
    }
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; graph.nodes];
    let mut seen = vec![false; graph.nodes];
    let mut queue = std::collections::VecDeque::new();
    seen[s] = true;
    queue.push_back(s);
    while let Some(v) = queue.pop_front() {
        if v == t {
            break;
        }
        for &(u, j) in &out[v] {
            if !seen[u] {
                seen[u] = true;
                prev[u] = Some((v, j));
                queue.push_back(u);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        let (p, j) = prev[v]?;
        path.push(j);
        v = p;
    }
    path.reverse();
    Some(path)
}

pub fn gen_mcf(
    graph: &GraphSpec,
    commodities: &[CommoditySpec],
    objective: &McfObjective,
) -> Result<BlockAngularProblem> {
    graph.check()?;
    let n = graph.arcs.len();
    let m = graph.nodes;
    let inc = Arc::new(incidence(graph)?);
    let eye = Arc::new(SparseMatrix::identity(n));
    let neg_eye = Arc::new(SparseMatrix::identity(n).scaled(-1.0));

    // feasibility witness: route each commodity, total flow on block 0
    let mut x0_witness = vec![0.0; n];
    let mut xi_witness = Vec::with_capacity(commodities.len());
    for (k, com) in commodities.iter().enumerate() {
        if com.source == com.sink {
            return Err(Error::Generator(format!("commodity {k}: source equals sink")));
        }
        if com.demand <= 0.0 {
            return Err(Error::Generator(format!("commodity {k}: demand must be positive")));
        }
        let path = route(graph, com.source, com.sink).ok_or_else(|| {
            Error::Generator(format!(
                "commodity {k}: no directed path {} -> {}",
                com.source, com.sink
            ))
        })?;
        let mut xi = vec![0.0; n];
        for j in path {
            xi[j] += com.demand;
            x0_witness[j] += com.demand;
        }
        xi_witness.push(xi);
    }
    for (j, (&load, &cap)) in x0_witness.iter().zip(&graph.cap).enumerate() {
        if load >= cap {
            return Err(Error::Generator(format!(
                "arc {j}: routed load {load} is not strictly below capacity {cap}"
            )));
        }
    }

    let zero_c = vec![0.0; n];
    let (q0, c0, theta0, cone0): (Quadratic, Vec<f64>, SeparableFunction, Cone) = match objective {
        McfObjective::Linear(costs) => {
            if costs.len() != n {
                return Err(Error::Generator(format!(
                    "linear cost length {} != arc count {n}",
                    costs.len()
                )));
            }
            (
                Quadratic::Zero(n),
                costs.clone(),
                SeparableFunction::Zero,
                Cone::Box { lower: vec![0.0; n], upper: graph.cap.clone() },
            )
        }
        McfObjective::Quad(q) => (
            Quadratic::Diagonal(vec![*q; n]),
            zero_c.clone(),
            SeparableFunction::Zero,
            Cone::Box { lower: vec![0.0; n], upper: graph.cap.clone() },
        ),
        McfObjective::Kleinrock => (
            Quadratic::Zero(n),
            zero_c.clone(),
            SeparableFunction::Kleinrock { cap: graph.cap.clone() },
            Cone::Box { lower: vec![0.0; n], upper: graph.cap.clone() },
        ),
        McfObjective::Bpr { b, beta } => (
            Quadratic::Zero(n),
            zero_c.clone(),
            SeparableFunction::Bpr {
                cap: graph.cap.clone(),
                freeflow: graph.freeflow.clone(),
                b: *b,
                beta: *beta,
            },
            Cone::NonNeg(n),
        ),
    };
    let qi = match objective {
        McfObjective::Quad(q) => Quadratic::Diagonal(vec![*q; n]),
        _ => Quadratic::Zero(n),
    };

    let mut blocks = Vec::with_capacity(commodities.len() + 1);
    blocks.push(Block {
        a: eye,
        d: None,
        q: q0,
        c: c0,
        b: None,
        cone: cone0,
        theta: theta0,
    });
    for com in commodities {
        let mut bi = vec![0.0; m];
        bi[com.source] = com.demand;
        bi[com.sink] = -com.demand;
        blocks.push(Block {
            a: neg_eye.clone(),
            d: Some(inc.clone()),
            q: qi.clone(),
            c: zero_c.clone(),
            b: Some(bi),
            cone: Cone::NonNeg(n),
            theta: SeparableFunction::Zero,
        });
    }
    let mut witness = x0_witness;
    for xi in xi_witness {
        witness.extend(xi);
    }
    let family = match objective {
        McfObjective::Linear(_) => "mcf-linear",
        McfObjective::Quad(_) => "mcf-quad",
        McfObjective::Kleinrock => "mcf-kleinrock",
        McfObjective::Bpr { .. } => "mcf-bpr",
    };
    Ok(BlockAngularProblem {
        blocks,
        b0: vec![0.0; n],
        meta: Metadata {
            name: format!("{family}-m{m}-n{n}-N{}", commodities.len()),
            seed: 0,
            family: family.into(),
            rng_algo: RNG_ALGO.into(),
            witness: Some(witness),
        },
    })
}

/// Generic arc costs in U(1,2); distinct values keep linear network optima
/// unique, which matters when comparing solutions rather than objectives.
pub fn random_linear_costs(arcs: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..arcs).map(|_| rng.gen_range(1.0..2.0)).collect()
}

/// Random connected directed graph plus commodities; capacities are set
/// strictly above the deterministic witness routing so gen_mcf always
/// succeeds.
pub fn random_mcf(
    nodes: usize,
    arcs: usize,
    commodities: usize,
    seed: u64,
) -> Result<(GraphSpec, Vec<CommoditySpec>)> {
    if nodes < 2 || arcs < nodes {
        return Err(Error::Generator(
            "need at least 2 nodes and arcs >= nodes for the backbone cycle".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // backbone cycle guarantees directed connectivity
    let mut arc_list: Vec<(usize, usize)> = (0..nodes).map(|v| (v, (v + 1) % nodes)).collect();
    while arc_list.len() < arcs {
        let t = rng.gen_range(0..nodes);
        let h = rng.gen_range(0..nodes);
        if t != h {
            arc_list.push((t, h));
        }
    }
    let freeflow: Vec<f64> = (0..arcs).map(|_| 0.1 + 0.9 * rng.gen::<f64>()).collect();
    let coms: Vec<CommoditySpec> = (0..commodities)
        .map(|_| {
            let source = rng.gen_range(0..nodes);
            let mut sink = rng.gen_range(0..nodes);
            while sink == source {
                sink = rng.gen_range(0..nodes);
            }
            CommoditySpec { source, sink, demand: 0.5 + rng.gen::<f64>() }
        })
        .collect();
    let mut graph = GraphSpec {
        nodes,
        arcs: arc_list,
        cap: vec![1.0; arcs],
        freeflow,
    };
    let mut load = vec![0.0; arcs];
    for com in &coms {
        let path = route(&graph, com.source, com.sink)
            .ok_or_else(|| Error::Generator("backbone routing failed".into()))?;
        for j in path {
            load[j] += com.demand;
        }
    }
    graph.cap = load
        .iter()
        .map(|&l| l + 1.0 + rng.gen::<f64>())
        .collect();
    Ok((graph, coms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandKind {
    /// diagonal Q with uniform(0,1) entries
    T1,
    /// Q = S S^T with sparse Gaussian S
    T2,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; avoids an extra dependency for one distribution
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn sparse_gaussian(
    rng: &mut ChaCha8Rng,
    nrows: usize,
    ncols: usize,
    density: f64,
    patch_rows: bool,
) -> SparseMatrix {
    let mut triplets = Vec::new();
    let mut row_hit = vec![false; nrows];
    for j in 0..ncols {
        for i in 0..nrows {
            if rng.gen::<f64>() < density {
                triplets.push((i, j, gaussian(rng)));
                row_hit[i] = true;
            }
        }
    }
    if patch_rows {
        // a zero row would make the normal matrix singular beyond ridge help
        for (i, hit) in row_hit.iter().enumerate() {
            if !hit && ncols > 0 {
                let j = rng.gen_range(0..ncols);
                triplets.push((i, j, 1.0 + rng.gen::<f64>()));
            }
        }
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets).unwrap()
}

pub fn gen_random(
    mi: usize,
    ni: usize,
    n_blocks: usize,
    kind: RandKind,
    seed: u64,
) -> Result<BlockAngularProblem> {
    if mi == 0 || ni == 0 {
        return Err(Error::Generator("dims must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m0 = mi;
    let mut blocks = Vec::with_capacity(n_blocks + 1);
    for i in 0..=n_blocks {
        let a = Arc::new(sparse_gaussian(&mut rng, m0, ni, 0.5, true));
        let d = if i == 0 {
            None
        } else {
            Some(Arc::new(sparse_gaussian(&mut rng, mi, ni, 0.3, true)))
        };
        let q = match kind {
            RandKind::T1 => Quadratic::Diagonal((0..ni).map(|_| rng.gen::<f64>()).collect()),
            RandKind::T2 => {
                let s = sparse_gaussian(&mut rng, ni, ni, 0.1, false);
                Quadratic::Sparse(crate::sparse::form_normal(&s, crate::sparse::NormalMode::MMt))
            }
        };
        let c: Vec<f64> = (0..ni).map(|_| gaussian(&mut rng)).collect();
        blocks.push(Block {
            a,
            d,
            q,
            c,
            b: None, // filled from the witness below
            cone: Cone::NonNeg(ni),
            theta: SeparableFunction::Zero,
        });
    }
    // feasibility by construction: b = B * witness with nonnegative witness
    let witness: Vec<Vec<f64>> = (0..=n_blocks)
        .map(|_| (0..ni).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut b0 = vec![0.0; m0];
    for (blk, xi) in blocks.iter().zip(&witness) {
        let axi = blk.a.mul_vec(xi);
        for (acc, v) in b0.iter_mut().zip(&axi) {
            *acc += v;
        }
    }
    for (blk, xi) in blocks.iter_mut().zip(&witness) {
        if let Some(d) = &blk.d {
            blk.b = Some(d.mul_vec(xi));
        }
    }
    let kind_tag = match kind {
        RandKind::T1 => "t1",
        RandKind::T2 => "t2",
    };
    Ok(BlockAngularProblem {
        blocks,
        b0,
        meta: Metadata {
            name: format!("rand-{kind_tag}-m{mi}-n{ni}-N{n_blocks}-s{seed}"),
            seed,
            family: format!("rand-{kind_tag}"),
            rng_algo: RNG_ALGO.into(),
            witness: Some(witness.concat()),
        },
    })
}

/// Table-adjustment family: each block is a rows x cols table of cells whose
/// row sums and column sums are fixed; layers are linked by A_0 = I,
/// A_i = -I. The local matrix is the incidence of the bipartite graph from
/// row nodes to column nodes (one arc per cell).
pub fn gen_cta(rows: usize, cols: usize, n_blocks: usize, seed: u64) -> Result<BlockAngularProblem> {
    if rows == 0 || cols == 0 || n_blocks == 0 {
        return Err(Error::Generator("dims must be positive".into()));
    }
    let n = rows * cols;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(2 * n);
    for r in 0..rows {
        for c in 0..cols {
            let j = r * cols + c;
            triplets.push((r, j, 1.0));
            triplets.push((rows + c, j, -1.0));
        }
    }
    let d = Arc::new(SparseMatrix::from_triplets(rows + cols, n, &triplets)?);
    let eye = Arc::new(SparseMatrix::identity(n));
    let neg_eye = Arc::new(SparseMatrix::identity(n).scaled(-1.0));
    let mut blocks = Vec::with_capacity(n_blocks + 1);
    let mut witness: Vec<Vec<f64>> = Vec::with_capacity(n_blocks + 1);
    // witness layers first (block 0 is their coupling-consistent total)
    let layers: Vec<Vec<f64>> = (0..n_blocks)
        .map(|_| (0..n).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut x0 = vec![0.0; n];
    for layer in &layers {
        for (acc, v) in x0.iter_mut().zip(layer) {
            *acc += v;
        }
    }
    witness.push(x0);
    blocks.push(Block {
        a: eye,
        d: None,
        q: Quadratic::Diagonal(vec![1.0; n]),
        c: (0..n).map(|_| gaussian(&mut rng)).collect(),
        b: None,
        cone: Cone::NonNeg(n),
        theta: SeparableFunction::Zero,
    });
    for layer in layers {
        blocks.push(Block {
            a: neg_eye.clone(),
            d: Some(d.clone()),
            q: Quadratic::Diagonal(vec![1.0; n]),
            c: (0..n).map(|_| gaussian(&mut rng)).collect(),
            b: Some(d.mul_vec(&layer)),
            cone: Cone::NonNeg(n),
            theta: SeparableFunction::Zero,
        });
        witness.push(layer);
    }
    Ok(BlockAngularProblem {
        blocks,
        b0: vec![0.0; n],
        meta: Metadata {
            name: format!("cta-r{rows}-c{cols}-N{n_blocks}-s{seed}"),
            seed,
            family: "cta".into(),
            rng_algo: RNG_ALGO.into(),
            witness: Some(witness.concat()),
        },
    })
}

/// Check the stored witness against the constraints; generators guarantee
/// this holds to 1e-10.
pub fn witness_residual(problem: &BlockAngularProblem) -> Option<f64> {
    let w = problem.meta.witness.as_ref()?;
    let bv = problem.split_blocks(w).ok()?;
    let bx = problem.apply_b(&bv);
    let rhs = problem.stacked_rhs();
    Some(crate::vecops::norm2(&crate::vecops::sub(&bx, &rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BlockVector;
    use crate::sparse::{form_normal, NormalMode};
    use crate::vecops;

    fn bv(problem: &BlockAngularProblem) -> BlockVector {
        problem
            .split_blocks(problem.meta.witness.as_ref().unwrap())
            .unwrap()
    }

    #[test]
    fn single_arc_incidence() {
        let g = GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1)],
            cap: vec![2.0],
            freeflow: vec![1.0],
        };
        let inc = incidence(&g).unwrap();
        assert_eq!(inc.mul_vec(&[1.0]), vec![1.0, -1.0]);
    }

    #[test]
    fn incidence_columns_sum_to_zero() {
        let (g, _) = random_mcf(6, 14, 3, 1).unwrap();
        let inc = incidence(&g).unwrap();
        let ones = vec![1.0; g.nodes];
        let colsums = inc.mul_vec_t(&ones);
        assert!(vecops::norm_inf(&colsums) == 0.0);
    }

    #[test]
    fn path_incidence_gives_laplacian() {
        let g = GraphSpec {
            nodes: 3,
            arcs: vec![(0, 1), (1, 2)],
            cap: vec![1.0, 1.0],
            freeflow: vec![1.0, 1.0],
        };
        let lap = form_normal(&incidence(&g).unwrap(), NormalMode::MMt);
        let expected = [
            [1.0, -1.0, 0.0],
            [-1.0, 2.0, -1.0],
            [0.0, -1.0, 1.0],
        ];
        for (i, j, v) in lap.iter() {
            assert_eq!(v, expected[i][j]);
        }
    }

    #[test]
    fn tiny_linear_mcf_solves_to_known_optimum() {
        let g = GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1)],
            cap: vec![2.0],
            freeflow: vec![1.0],
        };
        let coms = [CommoditySpec { source: 0, sink: 1, demand: 1.0 }];
        let p = gen_mcf(&g, &coms, &McfObjective::Linear(vec![1.0])).unwrap();
        assert!(p.validate().is_valid());
        let params = crate::sgs::SgsAdmmParams { tol: 1e-8, ..Default::default() };
        let (it, report) = crate::sgs::solve(&p, params).unwrap();
        assert!(report.converged());
        assert!((it.x.segments[1][0] - 1.0).abs() <= 1e-5);
        assert!((p.objective(&it.x) - 1.0).abs() <= 1e-5);
    }

    #[test]
    fn tiny_kleinrock_mcf_objective() {
        let g = GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1)],
            cap: vec![2.0],
            freeflow: vec![1.0],
        };
        let coms = [CommoditySpec { source: 0, sink: 1, demand: 1.0 }];
        let p = gen_mcf(&g, &coms, &McfObjective::Kleinrock).unwrap();
        // flow forced to 1 by demand: objective = 1/(2-1) = 1
        let w = bv(&p);
        assert!((p.objective(&w) - 1.0).abs() <= 1e-12);
        let params = crate::sgs::SgsAdmmParams { tol: 1e-7, ..Default::default() };
        let (it, report) = crate::sgs::solve(&p, params).unwrap();
        assert!(report.converged(), "{:?}", report.final_residuals);
        assert!((p.objective(&it.x) - 1.0).abs() <= 1e-4);
    }

    #[test]
    fn quad_family_uses_diagonal_q() {
        let (g, coms) = random_mcf(5, 10, 2, 3).unwrap();
        let p = gen_mcf(&g, &coms, &McfObjective::Quad(0.1)).unwrap();
        for blk in &p.blocks {
            match &blk.q {
                Quadratic::Diagonal(d) => assert!(d.iter().all(|&v| v == 0.1)),
                other => panic!("expected diagonal Q, got {other:?}"),
            }
        }
    }

    #[test]
    fn generated_problems_validate_and_have_witness() {
        let cases: Vec<BlockAngularProblem> = vec![
            gen_random(4, 6, 2, RandKind::T1, 1).unwrap(),
            gen_random(5, 7, 3, RandKind::T2, 2).unwrap(),
            gen_cta(2, 3, 2, 3).unwrap(),
            {
                let (g, coms) = random_mcf(5, 12, 3, 4).unwrap();
                gen_mcf(&g, &coms, &McfObjective::Quad(0.1)).unwrap()
            },
        ];
        for p in &cases {
            assert!(p.validate().is_valid(), "{}: {:?}", p.meta.name, p.validate());
            let res = witness_residual(p).unwrap();
            assert!(res <= 1e-10, "{}: witness residual {res}", p.meta.name);
        }
    }

    #[test]
    fn commodity_rhs_sums_to_zero() {
        let (g, coms) = random_mcf(6, 12, 4, 5).unwrap();
        let p = gen_mcf(&g, &coms, &McfObjective::Quad(0.1)).unwrap();
        for blk in p.blocks.iter().skip(1) {
            let s: f64 = blk.b.as_ref().unwrap().iter().sum();
            assert!(s.abs() <= 1e-12);
        }
    }

    #[test]
    fn seed_determinism() {
        let a = gen_random(4, 6, 2, RandKind::T1, 42).unwrap();
        let b = gen_random(4, 6, 2, RandKind::T1, 42).unwrap();
        assert_eq!(a.b0, b.b0);
        for (x, y) in a.blocks.iter().zip(&b.blocks) {
            assert_eq!(x.c, y.c);
            assert_eq!(
                x.a.iter().collect::<Vec<_>>(),
                y.a.iter().collect::<Vec<_>>()
            );
        }
        let c = gen_random(4, 6, 2, RandKind::T1, 43).unwrap();
        assert_ne!(a.b0, c.b0);
    }

    #[test]
    fn t1_q_is_diagonal_and_t2_q_is_psd() {
        let a = gen_random(4, 6, 2, RandKind::T1, 7).unwrap();
        for blk in &a.blocks {
            assert!(matches!(blk.q, Quadratic::Diagonal(_)));
        }
        let b = gen_random(4, 6, 2, RandKind::T2, 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for blk in &b.blocks {
            for _ in 0..10 {
                let v: Vec<f64> = (0..blk.dim()).map(|_| gaussian(&mut rng)).collect();
                assert!(blk.q.quad_form(&v) >= -1e-10 * vecops::dot(&v, &v));
            }
        }
    }

    #[test]
    fn cta_structure() {
        let p = gen_cta(2, 2, 1, 1).unwrap();
        let d = p.blocks[1].d.as_ref().unwrap();
        assert_eq!(d.ncols(), 4);
        assert_eq!(d.nrows(), 4);
        for j in 0..4 {
            assert_eq!(d.col(j).count(), 2);
        }
        for blk in &p.blocks {
            match &blk.q {
                Quadratic::Diagonal(v) => assert!(v.iter().all(|&x| x == 1.0)),
                other => panic!("expected identity Q, got {other:?}"),
            }
        }
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = GraphSpec {
            nodes: 4,
            arcs: vec![(0, 1), (2, 3)],
            cap: vec![1.0, 1.0],
            freeflow: vec![1.0, 1.0],
        };
        assert!(matches!(incidence(&g), Err(Error::Generator(_))));
    }

    #[test]
    fn unroutable_commodity_rejected() {
        // only arc 0 -> 1; commodity needs 1 -> 0
        let g = GraphSpec {
            nodes: 2,
            arcs: vec![(0, 1)],
            cap: vec![5.0],
            freeflow: vec![1.0],
        };
        let coms = [CommoditySpec { source: 1, sink: 0, demand: 1.0 }];
        assert!(matches!(
            gen_mcf(&g, &coms, &McfObjective::Quad(0.1)),
            Err(Error::Generator(_))
        ));
    }
}
