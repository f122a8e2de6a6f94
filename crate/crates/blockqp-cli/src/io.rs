//! Versioned text format for block-angular problem files (`.bap`).
//!
//! Line-oriented, whitespace-separated, with matrices as 1-based coordinate
//! triplets and floats printed with 17 significant digits so a write/read
//! round trip reproduces every binary64 value exactly.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use blockqp::{
    Block, BlockAngularProblem, Cone, Error, Metadata, Quadratic, Result, SeparableFunction,
    SparseMatrix,
};

pub const FORMAT_VERSION: u32 = 1;

fn fmt_f64(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn push_vector(out: &mut String, label: &str, v: &[f64]) {
    let _ = write!(out, "{label} {}", v.len());
    for x in v {
        let _ = write!(out, " {}", fmt_f64(*x));
    }
    out.push('\n');
}

fn push_matrix(out: &mut String, label: &str, m: &SparseMatrix) {
    let nnz = m.iter().count();
    let _ = writeln!(out, "{label} {} {} {}", m.nrows(), m.ncols(), nnz);
    for (r, c, v) in m.iter() {
        let _ = writeln!(out, "{} {} {}", r + 1, c + 1, fmt_f64(v));
    }
}

pub fn problem_to_string(problem: &BlockAngularProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "bap {FORMAT_VERSION}");
    let _ = writeln!(out, "name {}", problem.meta.name);
    let _ = writeln!(out, "family {}", problem.meta.family);
    let _ = writeln!(out, "seed {}", problem.meta.seed);
    let _ = writeln!(out, "rng {}", problem.meta.rng_algo);
    let _ = writeln!(out, "blocks {}", problem.num_blocks());
    push_vector(&mut out, "b0", &problem.b0);
    if let Some(w) = &problem.meta.witness {
        push_vector(&mut out, "witness", w);
    }
    for (i, blk) in problem.blocks.iter().enumerate() {
        let _ = writeln!(out, "block {i}");
        let _ = writeln!(out, "n {}", blk.dim());
        push_matrix(&mut out, "a", &blk.a);
        match &blk.d {
            None => {
                let _ = writeln!(out, "d none");
            }
            Some(d) => {
                push_matrix(&mut out, "d", d);
                push_vector(&mut out, "b", blk.b.as_deref().unwrap_or(&[]));
            }
        }
        match &blk.q {
            Quadratic::Zero(_) => {
                let _ = writeln!(out, "q zero");
            }
            Quadratic::Diagonal(dg) => {
                push_vector(&mut out, "q diag", dg);
            }
            Quadratic::Sparse(m) => {
                push_matrix(&mut out, "q sparse", m);
            }
        }
        push_vector(&mut out, "c", &blk.c);
        match &blk.cone {
            Cone::Free(_) => {
                let _ = writeln!(out, "cone free");
            }
            Cone::NonNeg(_) => {
                let _ = writeln!(out, "cone nonneg");
            }
            Cone::Box { lower, upper } => {
                let _ = writeln!(out, "cone box");
                push_vector(&mut out, "lower", lower);
                push_vector(&mut out, "upper", upper);
            }
        }
        match &blk.theta {
            SeparableFunction::Zero => {
                let _ = writeln!(out, "theta zero");
            }
            SeparableFunction::L1 { weight } => {
                let _ = writeln!(out, "theta l1 {}", fmt_f64(*weight));
            }
            SeparableFunction::Kleinrock { cap } => {
                let _ = writeln!(out, "theta kleinrock");
                push_vector(&mut out, "cap", cap);
            }
            SeparableFunction::Bpr { cap, freeflow, b, beta } => {
                let _ = writeln!(out, "theta bpr {} {}", fmt_f64(*b), fmt_f64(*beta));
                push_vector(&mut out, "cap", cap);
                push_vector(&mut out, "freeflow", freeflow);
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_problem(problem: &BlockAngularProblem, path: &Path) -> Result<()> {
    std::fs::write(path, problem_to_string(problem))
        .map_err(|e| Error::Generator(format!("write {}: {e}", path.display())))
}

/// Line cursor that keeps the current position for error messages.
struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor { lines: text.lines().enumerate(), line_no: 0 }
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Generator(format!("parse error at line {}: {msg}", self.line_no))
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            match self.lines.next() {
                None => {
                    return Err(Error::Generator(format!(
                        "parse error at line {}: unexpected end of file",
                        self.line_no
                    )))
                }
                Some((idx, raw)) => {
                    self.line_no = idx + 1;
                    let t = raw.trim();
                    if !t.is_empty() && !t.starts_with('#') {
                        return Ok(t);
                    }
                }
            }
        }
    }

    /// Next line that must start with `keyword`; returns the remainder.
    fn expect(&mut self, keyword: &str) -> Result<&'a str> {
        let line = self.next_line()?;
        match line.strip_prefix(keyword) {
            Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => {
                Ok(rest.trim_start())
            }
            _ => Err(self.err(format!("expected `{keyword}`, found `{line}`"))),
        }
    }
}

fn parse_f64(cur: &Cursor, tok: &str) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| cur.err(format!("bad float `{tok}`")))
}

fn parse_usize(cur: &Cursor, tok: &str) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| cur.err(format!("bad integer `{tok}`")))
}

/// `rest` is everything after the section keyword: a count followed by that
/// many floats on the same line.
fn parse_vector(cur: &Cursor, rest: &str) -> Result<Vec<f64>> {
    let mut toks = rest.split_whitespace();
    let len = parse_usize(cur, toks.next().ok_or_else(|| cur.err("missing vector length"))?)?;
    let vals: Vec<f64> = toks.map(|t| parse_f64(cur, t)).collect::<Result<_>>()?;
    if vals.len() != len {
        return Err(cur.err(format!("vector declared {len} entries, found {}", vals.len())));
    }
    Ok(vals)
}

/// Header `rows cols nnz` on the current line, then nnz 1-based triplets.
fn parse_matrix(cur: &mut Cursor, rest: &str) -> Result<SparseMatrix> {
    let toks: Vec<&str> = rest.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(cur.err(format!("matrix header needs `rows cols nnz`, found `{rest}`")));
    }
    let nrows = parse_usize(cur, toks[0])?;
    let ncols = parse_usize(cur, toks[1])?;
    let nnz = parse_usize(cur, toks[2])?;
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = cur.next_line()?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(cur.err(format!("triplet needs `row col value`, found `{line}`")));
        }
        let r = parse_usize(cur, t[0])?;
        let c = parse_usize(cur, t[1])?;
        if r == 0 || c == 0 {
            return Err(cur.err("triplet indices are 1-based"));
        }
        triplets.push((r - 1, c - 1, parse_f64(cur, t[2])?));
    }
    SparseMatrix::from_triplets(nrows, ncols, &triplets)
        .map_err(|e| cur.err(format!("bad matrix: {e}")))
}

/// Key for deduplicating identical local matrices into shared storage.
fn matrix_key(m: &SparseMatrix) -> (usize, usize, Vec<(usize, usize, u64)>) {
    (m.nrows(), m.ncols(), m.iter().map(|(r, c, v)| (r, c, v.to_bits())).collect())
}

pub fn problem_from_string(text: &str) -> Result<BlockAngularProblem> {
    let mut cur = Cursor::new(text);
    let version = cur.expect("bap")?;
    let version = parse_usize(&cur, version.trim())?;
    if version != FORMAT_VERSION as usize {
        return Err(Error::Generator(format!(
            "unsupported format version: found {version}, expected {FORMAT_VERSION}"
        )));
    }
    let name = cur.expect("name")?.to_string();
    let family = cur.expect("family")?.to_string();
    let seed_tok = cur.expect("seed")?;
    let seed = seed_tok.parse::<u64>().map_err(|_| cur.err(format!("bad seed `{seed_tok}`")))?;
    let rng_algo = cur.expect("rng")?.to_string();
    let blocks_tok = cur.expect("blocks")?;
    let nblocks = parse_usize(&cur, blocks_tok)?;
    let b0_rest = cur.expect("b0")?;
    let b0 = parse_vector(&cur, b0_rest)?;
    // optional witness, then the first block header
    let mut witness = None;
    let mut line = cur.next_line()?;
    if let Some(rest) = line.strip_prefix("witness") {
        witness = Some(parse_vector(&cur, rest.trim_start())?);
        line = cur.next_line()?;
    }
    let mut shared: HashMap<(usize, usize, Vec<(usize, usize, u64)>), Arc<SparseMatrix>> =
        HashMap::new();
    let mut dedup = |m: SparseMatrix| -> Arc<SparseMatrix> {
        shared.entry(matrix_key(&m)).or_insert_with(|| Arc::new(m)).clone()
    };
    let mut blocks = Vec::with_capacity(nblocks);
    for i in 0..nblocks {
        let expected = format!("block {i}");
        if line != expected {
            return Err(cur.err(format!("expected `{expected}`, found `{line}`")));
        }
        let n_tok = cur.expect("n")?;
        let n = parse_usize(&cur, n_tok)?;
        let a_rest = cur.expect("a")?.to_string();
        let a = dedup(parse_matrix(&mut cur, &a_rest)?);
        let d_rest = cur.expect("d")?.to_string();
        let (d, b) = if d_rest.trim() == "none" {
            (None, None)
        } else {
            let d = dedup(parse_matrix(&mut cur, &d_rest)?);
            let b_rest = cur.expect("b")?.to_string();
            (Some(d), Some(parse_vector(&cur, &b_rest)?))
        };
        let q_rest = cur.expect("q")?.to_string();
        let q = if q_rest.trim() == "zero" {
            Quadratic::Zero(n)
        } else if let Some(rest) = q_rest.strip_prefix("diag") {
            Quadratic::Diagonal(parse_vector(&cur, rest.trim_start())?)
        } else if let Some(rest) = q_rest.strip_prefix("sparse") {
            Quadratic::Sparse(parse_matrix(&mut cur, rest.trim_start())?)
        } else {
            return Err(cur.err(format!("unknown quadratic kind `{q_rest}`")));
        };
        let c_rest = cur.expect("c")?.to_string();
        let c = parse_vector(&cur, &c_rest)?;
        let cone_rest = cur.expect("cone")?.to_string();
        let cone = match cone_rest.trim() {
            "free" => Cone::Free(n),
            "nonneg" => Cone::NonNeg(n),
            "box" => {
                let lo_rest = cur.expect("lower")?;
                let lower = parse_vector(&cur, lo_rest)?;
                let up_rest = cur.expect("upper")?;
                let upper = parse_vector(&cur, up_rest)?;
                Cone::Box { lower, upper }
            }
            other => return Err(cur.err(format!("unknown cone `{other}`"))),
        };
        let theta_rest = cur.expect("theta")?.to_string();
        let theta = if theta_rest.trim() == "zero" {
            SeparableFunction::Zero
        } else if let Some(rest) = theta_rest.strip_prefix("l1") {
            SeparableFunction::L1 { weight: parse_f64(&cur, rest.trim()) ? }
        } else if theta_rest.trim() == "kleinrock" {
            let rest = cur.expect("cap")?.to_string();
            SeparableFunction::Kleinrock { cap: parse_vector(&cur, &rest)? }
        } else if let Some(rest) = theta_rest.strip_prefix("bpr") {
            let toks: Vec<&str> = rest.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(cur.err("bpr needs two scalars `b beta`"));
            }
            let bcoef = parse_f64(&cur, toks[0])?;
            let beta = parse_f64(&cur, toks[1])?;
            let cap_rest = cur.expect("cap")?.to_string();
            let cap = parse_vector(&cur, &cap_rest)?;
            let ff_rest = cur.expect("freeflow")?.to_string();
            let freeflow = parse_vector(&cur, &ff_rest)?;
            SeparableFunction::Bpr { cap, freeflow, b: bcoef, beta }
        } else {
            return Err(cur.err(format!("unknown theta kind `{theta_rest}`")));
        };
        blocks.push(Block { a, d, q, c, b, cone, theta });
        line = cur.next_line()?;
    }
    if line != "end" {
        return Err(cur.err(format!("expected `end`, found `{line}`")));
    }
    Ok(BlockAngularProblem {
        blocks,
        b0,
        meta: Metadata { name, seed, family, rng_algo, witness },
    })
}

pub fn read_problem(path: &Path) -> Result<BlockAngularProblem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Generator(format!("read {}: {e}", path.display())))?;
    problem_from_string(&text)
}
