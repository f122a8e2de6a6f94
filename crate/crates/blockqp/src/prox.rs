//! Cone projections and proximal maps of the separable cost terms, plus the
//! two Moreau-identity update kernels used by the splitting solvers.

use crate::error::{Error, Result};
use crate::model::{Cone, SeparableFunction};

#[derive(Debug, Clone)]
pub struct ProxResult {
    pub point: Vec<f64>,
    pub newton_iterations: usize,
    pub max_residual: f64,
}

pub fn project_cone(cone: &Cone, v: &[f64]) -> Vec<f64> {
    match cone {
        Cone::Free(_) => v.to_vec(),
        Cone::NonNeg(_) => v.iter().map(|&x| x.max(0.0)).collect(),
        Cone::Box { lower, upper } => v
            .iter()
            .zip(lower.iter().zip(upper))
            .map(|(&x, (&l, &u))| x.max(l).min(u))
            .collect(),
    }
}

/// Safeguarded Newton on a strictly increasing g' over (lo, hi). Returns
/// (root, iterations). g' must be negative near lo and positive near hi.
fn newton_bracketed(
    mut t: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
    gp: &dyn Fn(f64) -> f64,
    gpp: &dyn Fn(f64) -> f64,
) -> (f64, usize, f64) {
    if !(t > lo && t < hi) {
        t = 0.5 * (lo + hi);
    }
    let mut g = gp(t);
    for it in 0..200 {
        if g.abs() <= tol {
            return (t, it, g.abs());
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = g / gpp(t);
        let mut tn = t - step;
        if !(tn > lo && tn < hi) || !tn.is_finite() {
            tn = 0.5 * (lo + hi);
        }
        t = tn;
        g = gp(t);
    }
    (t, 200, g.abs())
}

/// Componentwise argmin_t sigma*theta(t) + 0.5*(t - v)^2. `warm` supplies
/// Newton starting points (previous prox output).
pub fn prox_theta(
    theta: &SeparableFunction,
    sigma: f64,
    v: &[f64],
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<ProxResult> {
    if sigma <= 0.0 {
        return Err(Error::Parameter(format!("prox requires sigma > 0, got {sigma}")));
    }
    match theta {
        SeparableFunction::Zero => Ok(ProxResult {
            point: v.to_vec(),
            newton_iterations: 0,
            max_residual: 0.0,
        }),
        SeparableFunction::L1 { weight } => {
            let t = sigma * weight;
            Ok(ProxResult {
                point: v
                    .iter()
                    .map(|&x| {
                        if x > t {
                            x - t
                        } else if x < -t {
                            x + t
                        } else {
                            0.0
                        }
                    })
                    .collect(),
                newton_iterations: 0,
                max_residual: 0.0,
            })
        }
        SeparableFunction::Kleinrock { cap } => {
            let mut point = Vec::with_capacity(v.len());
            let mut iters = 0;
            let mut max_res = 0.0f64;
            for (j, (&vj, &cj)) in v.iter().zip(cap).enumerate() {
                // g'(t) = sigma*c/(c-t)^2 + t - v, increasing on [0, c)
                if vj <= sigma / cj {
                    point.push(0.0);
                    continue;
                }
                let gp = |t: f64| sigma * cj / ((cj - t) * (cj - t)) + t - vj;
                let gpp = |t: f64| 2.0 * sigma * cj / ((cj - t) * (cj - t) * (cj - t)) + 1.0;
                let start = warm
                    .map(|w| w[j])
                    .filter(|&w| w > 0.0 && w < cj)
                    .unwrap_or_else(|| vj.min(0.9 * cj));
                let (t, it, res) = newton_bracketed(start, 0.0, cj, tol, &gp, &gpp);
                iters += it;
                max_res = max_res.max(res);
                point.push(t);
            }
            Ok(ProxResult { point, newton_iterations: iters, max_residual: max_res })
        }
        SeparableFunction::Bpr { cap, freeflow, b, beta } => {
            let mut point = Vec::with_capacity(v.len());
            let mut iters = 0;
            let mut max_res = 0.0f64;
            for (j, ((&vj, &cj), &rj)) in v.iter().zip(cap).zip(freeflow).enumerate() {
                // g'(t) = sigma*r*(1 + B(beta+1)(t/c)^beta) + t - v, increasing on t >= 0
                if vj <= sigma * rj {
                    point.push(0.0);
                    continue;
                }
                let gp = |t: f64| {
                    sigma * rj * (1.0 + b * (beta + 1.0) * (t / cj).powf(*beta)) + t - vj
                };
                let gpp = |t: f64| {
                    // curvature is unbounded at 0 when beta < 1; the bracket
                    // fallback handles the resulting zero-length Newton step
                    if *beta < 1.0 && t <= 0.0 {
                        1.0
                    } else {
                        sigma * rj * b * (beta + 1.0) * beta * (t / cj).powf(beta - 1.0) / cj
                            + 1.0
                    }
                };
                // g'(v) >= 0 always, so [0, v] brackets the root
                let start = warm
                    .map(|w| w[j])
                    .filter(|&w| w > 0.0 && w < vj)
                    .unwrap_or(0.5 * vj);
                let (t, it, res) = newton_bracketed(start, 0.0, vj, tol, &gp, &gpp);
                iters += it;
                max_res = max_res.max(res);
                point.push(t);
            }
            Ok(ProxResult { point, newton_iterations: iters, max_residual: max_res })
        }
    }
}

/// s-update kernel: (1/sigma) Prox_{sigma*theta}(sigma*a) - a.
pub fn moreau_theta_step(
    theta: &SeparableFunction,
    sigma: f64,
    a: &[f64],
    tol: f64,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, ProxResult)> {
    let scaled: Vec<f64> = a.iter().map(|&x| sigma * x).collect();
    let prox = prox_theta(theta, sigma, &scaled, tol, warm)?;
    let s = prox
        .point
        .iter()
        .zip(a)
        .map(|(&p, &ai)| p / sigma - ai)
        .collect();
    Ok((s, prox))
}

/// z-update kernel: (1/sigma) Proj_K(sigma*a) - a.
pub fn moreau_cone_step(cone: &Cone, sigma: f64, a: &[f64]) -> Vec<f64> {
    let scaled: Vec<f64> = a.iter().map(|&x| sigma * x).collect();
    project_cone(cone, &scaled)
        .iter()
        .zip(a)
        .map(|(&p, &ai)| p / sigma - ai)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bisect_root(lo: f64, hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn golden_min(mut lo: f64, mut hi: f64, f: &dyn Fn(f64) -> f64) -> f64 {
        let phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - phi * (hi - lo);
        let mut d = lo + phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..300 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + phi * (hi - lo);
                fd = f(d);
            }
        }
        // golden section alone locates the minimum only to ~sqrt(eps);
        // one parabolic fit through three nearby points recovers full
        // precision on these smooth objectives
        let mut t = 0.5 * (lo + hi);
        for _ in 0..2 {
            let h = 1e-5 * (1.0 + t.abs());
            let (fm, f0, fp) = (f(t - h), f(t), f(t + h));
            let denom = fp - 2.0 * f0 + fm;
            if denom > 0.0 {
                let shift = 0.5 * h * (fm - fp) / denom;
                if shift.abs() < h {
                    t += shift;
                }
            }
        }
        t.max(0.0)
    }

    #[test]
    fn cone_projections() {
        assert_eq!(project_cone(&Cone::NonNeg(2), &[-1.0, 2.0]), vec![0.0, 2.0]);
        assert_eq!(
            project_cone(
                &Cone::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] },
                &[2.0, -3.0]
            ),
            vec![1.0, 0.0]
        );
        assert_eq!(project_cone(&Cone::Free(2), &[1.5, -2.5]), vec![1.5, -2.5]);
    }

    #[test]
    fn projection_idempotent_and_firm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cones = [
            Cone::NonNeg(4),
            Cone::Box {
                lower: vec![-1.0, 0.0, f64::NEG_INFINITY, 0.5],
                upper: vec![1.0, f64::INFINITY, 2.0, 0.5],
            },
        ];
        for cone in &cones {
            for _ in 0..50 {
                let a: Vec<f64> = (0..4).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
                let b: Vec<f64> = (0..4).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
                let pa = project_cone(cone, &a);
                assert_eq!(project_cone(cone, &pa), pa);
                let pb = project_cone(cone, &b);
                let diff_p: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x - y).collect();
                let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                let lhs = crate::vecops::dot(&diff_p, &diff_p);
                let rhs = crate::vecops::dot(&diff_p, &diff);
                assert!(lhs <= rhs + 1e-12);
            }
        }
    }

    #[test]
    fn zero_and_l1_prox() {
        let r = prox_theta(&SeparableFunction::Zero, 1.0, &[5.0, -1.0], 1e-12, None).unwrap();
        assert_eq!(r.point, vec![5.0, -1.0]);
        assert_eq!(r.newton_iterations, 0);
        let r = prox_theta(&SeparableFunction::L1 { weight: 1.0 }, 2.0, &[3.0], 1e-12, None)
            .unwrap();
        assert_eq!(r.point, vec![1.0]);
    }

    #[test]
    fn sigma_must_be_positive() {
        assert!(prox_theta(&SeparableFunction::Zero, 0.0, &[1.0], 1e-12, None).is_err());
    }

    #[test]
    fn kleinrock_prox_vs_bisection() {
        let theta = SeparableFunction::Kleinrock { cap: vec![1.0] };
        let r = prox_theta(&theta, 1.0, &[0.9], 1e-12, None).unwrap();
        // t*=0 when v <= sigma/c = 1; here v = 0.9 < 1
        assert_eq!(r.point[0], 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let c = 0.1 + 5.0 * rng.gen::<f64>();
            let sigma = 0.01 + 3.0 * rng.gen::<f64>();
            let v = 10.0 * rng.gen::<f64>() - 2.0;
            let theta = SeparableFunction::Kleinrock { cap: vec![c] };
            let r = prox_theta(&theta, sigma, &[v], 1e-12, None).unwrap();
            let expected = if v <= sigma / c {
                0.0
            } else {
                let gp = |t: f64| sigma * c / ((c - t) * (c - t)) + t - v;
                bisect_root(0.0, c - 1e-14, &gp)
            };
            assert!(
                (r.point[0] - expected).abs() <= 1e-10 * (1.0 + expected.abs()),
                "c={c} sigma={sigma} v={v}: got {} want {expected}",
                r.point[0]
            );
        }
    }

    #[test]
    fn bpr_prox_vs_golden_section() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let c = 0.2 + 4.0 * rng.gen::<f64>();
            let rf = 0.1 + 2.0 * rng.gen::<f64>();
            let b = 0.15;
            let beta = 4.0;
            let sigma = 0.05 + 2.0 * rng.gen::<f64>();
            let v = 8.0 * rng.gen::<f64>() - 1.0;
            let theta = SeparableFunction::Bpr {
                cap: vec![c],
                freeflow: vec![rf],
                b,
                beta,
            };
            let r = prox_theta(&theta, sigma, &[v], 1e-12, None).unwrap();
            let obj = |t: f64| {
                sigma * rf * t * (1.0 + b * (t / c).powf(beta)) + 0.5 * (t - v) * (t - v)
            };
            let expected = golden_min(0.0, v.abs() + 1.0, &obj);
            assert!(
                (r.point[0] - expected).abs() <= 1e-8 * (1.0 + expected.abs()),
                "c={c} r={rf} sigma={sigma} v={v}: got {} want {expected}",
                r.point[0]
            );
        }
    }

    #[test]
    fn moreau_kernels() {
        // theta=Zero -> s = 0
        let (s, _) =
            moreau_theta_step(&SeparableFunction::Zero, 2.0, &[1.0, -3.0], 1e-12, None).unwrap();
        assert_eq!(s, vec![0.0, 0.0]);
        // L1(1), sigma=1, a=0.5 -> prox(0.5)=0 -> s=-0.5
        let (s, _) =
            moreau_theta_step(&SeparableFunction::L1 { weight: 1.0 }, 1.0, &[0.5], 1e-12, None)
                .unwrap();
        assert_eq!(s, vec![-0.5]);
        // NonNeg, sigma=1, a=(2,-3) -> (0,3)
        assert_eq!(moreau_cone_step(&Cone::NonNeg(2), 1.0, &[2.0, -3.0]), vec![0.0, 3.0]);
        // Free -> always 0
        assert_eq!(moreau_cone_step(&Cone::Free(2), 3.0, &[1.0, -4.0]), vec![0.0, 0.0]);
        // Box[0,1], sigma=2, a=1 -> 0.5*clamp(2)-1 = -0.5
        assert_eq!(
            moreau_cone_step(&Cone::Box { lower: vec![0.0], upper: vec![1.0] }, 2.0, &[1.0]),
            vec![-0.5]
        );
    }

    #[test]
    fn moreau_identity_all_variants() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let variants = [
            SeparableFunction::Zero,
            SeparableFunction::L1 { weight: 0.7 },
            SeparableFunction::Kleinrock { cap: vec![2.0, 0.5, 3.0] },
            SeparableFunction::Bpr {
                cap: vec![1.0, 2.0, 0.7],
                freeflow: vec![0.3, 1.0, 0.1],
                b: 0.15,
                beta: 4.0,
            },
        ];
        for theta in &variants {
            for _ in 0..50 {
                let sigma = 0.1 + 3.0 * rng.gen::<f64>();
                let a: Vec<f64> = (0..3).map(|_| 6.0 * rng.gen::<f64>() - 3.0).collect();
                let (s, prox) = moreau_theta_step(theta, sigma, &a, 1e-14, None).unwrap();
                for j in 0..3 {
                    let recon = prox.point[j] / sigma - s[j];
                    assert!((recon - a[j]).abs() <= 1e-10 * (1.0 + a[j].abs()));
                }
            }
        }
    }

    #[test]
    fn prox_optimality_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let theta = SeparableFunction::Kleinrock { cap: vec![1.5] };
        for _ in 0..100 {
            let sigma = 0.2 + 2.0 * rng.gen::<f64>();
            let v = 6.0 * rng.gen::<f64>();
            let r = prox_theta(&theta, sigma, &[v], 1e-12, None).unwrap();
            let t = r.point[0];
            if t > 0.0 {
                let g = sigma * 1.5 / ((1.5 - t) * (1.5 - t)) + t - v;
                assert!(g.abs() <= 1e-10 * (1.0 + v.abs()));
            } else {
                assert!(v <= sigma / 1.5 + 1e-12);
            }
        }
    }

    #[test]
    fn warm_start_converges_same() {
        let theta = SeparableFunction::Kleinrock { cap: vec![2.0] };
        let cold = prox_theta(&theta, 0.5, &[4.0], 1e-13, None).unwrap();
        let warm = prox_theta(&theta, 0.5, &[4.0], 1e-13, Some(&cold.point)).unwrap();
        assert!((cold.point[0] - warm.point[0]).abs() <= 1e-12);
        assert!(warm.newton_iterations <= cold.newton_iterations);
    }
}
