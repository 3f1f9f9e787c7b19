//! Certified upper bounds for sup |p| over the torus 𝕋^d.
//!
//! Each cubic cell of half-width h around a center c is bounded through the
//! Taylor expansion of G = |p|² to third order plus the fourth-order
//! remainder (S₀S₄ + 4S₁S₃ + 3S₂²)/12, S_j = Σ|c_n|(h‖n‖₁)^j. Cubic terms
//! with a repeated index are absorbed into the diagonal curvature; the
//! quadratic model is then maximized exactly per coordinate. The plain
//! Lipschitz bound (grid max + L·mesh) is also computed and the smaller of
//! the two is reported. Cells whose bound exceeds the running estimate are
//! split in a branch-and-bound loop.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::poly::LaurentPolynomial;
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSup {
    /// Largest |p| seen at an evaluated point.
    pub estimate: f64,
    /// Certified: sup |p| ≤ upper_bound.
    pub upper_bound: f64,
    /// Angles of the point achieving `estimate`.
    pub argmax: Vec<f64>,
    pub lipschitz_bound: f64,
    pub cells_evaluated: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSupOptions {
    pub resolution: usize,
    pub refinement_rounds: usize,
    /// Cap on cells evaluated during refinement.
    pub cell_budget: usize,
    /// Cells with bound ≤ estimate + gap are not refined further.
    pub gap: f64,
}

pub const MAX_GRID_CELLS: usize = 1 << 22;

const MAX_D: usize = 8;

impl TorusSupOptions {
    pub fn new(resolution: usize, refinement_rounds: usize) -> Self {
        Self { resolution, refinement_rounds, cell_budget: 1 << 21, gap: 1e-12 }
    }

    /// Defaults by variable count.
    pub fn for_dimension(d: usize) -> Self {
        let resolution = match d {
            0 | 1 => 1024,
            2 => 256,
            3 => 48,
            _ => 16,
        };
        Self::new(resolution, 6)
    }
}

struct Term {
    n: Vec<f64>,
    coeff: C64,
    l1: f64,
}

struct CellEvaluator {
    d: usize,
    terms: Vec<Term>,
}

impl CellEvaluator {
    fn new(p: &LaurentPolynomial) -> Self {
        let terms = p
            .terms()
            .map(|(e, z)| Term {
                n: e.iter().map(|&x| x as f64).collect(),
                coeff: *z,
                l1: e.iter().map(|x| x.unsigned_abs() as f64).sum(),
            })
            .collect();
        Self { d: p.d(), terms }
    }

    /// Fourth-order Taylor remainder bound of G = |p|² over the cell.
    fn remainder(&self, h: f64) -> f64 {
        let mut s = [0.0f64; 5];
        for t in &self.terms {
            let a = t.coeff.norm();
            let x = h * t.l1;
            let mut pow = a;
            for sj in s.iter_mut() {
                *sj += pow;
                pow *= x;
            }
        }
        (s[0] * s[4] + 4.0 * s[1] * s[3] + 3.0 * s[2] * s[2]) / 12.0
    }

    /// (|p(center)|, certified bound of |p| on the cell).
    fn cell(&self, center: &[f64], h: f64, remainder: f64) -> (f64, f64) {
        let d = self.d;
        let zero = C64::new(0.0, 0.0);
        let mut q = zero;
        let mut q1 = [zero; MAX_D];
        let mut q2 = [[zero; MAX_D]; MAX_D];
        let mut q3 = [[[zero; MAX_D]; MAX_D]; MAX_D];
        for t in &self.terms {
            let phase: f64 = t.n.iter().zip(center).map(|(n, x)| n * x).sum();
            let v = t.coeff * c(0.0, phase).exp();
            q += v;
            for i in 0..d {
                q1[i] += v * c(0.0, t.n[i]);
                for j in i..d {
                    let vij = v * (t.n[i] * t.n[j]);
                    q2[i][j] -= vij;
                    for k in j..d {
                        q3[i][j][k] += vij * c(0.0, -t.n[k]);
                    }
                }
            }
        }
        let sym2 = |i: usize, j: usize| if i <= j { q2[i][j] } else { q2[j][i] };
        let third = |i: usize, j: usize, k: usize| {
            let mut ix = [i, j, k];
            ix.sort_unstable();
            2.0 * (q3[ix[0]][ix[1]][ix[2]] * q.conj()
                + sym2(i, j) * q1[k].conj()
                + sym2(i, k) * q1[j].conj()
                + sym2(j, k) * q1[i].conj())
            .re
        };
        let g0 = q.norm_sqr();
        let mut model = 0.0;
        for i in 0..d {
            let g = 2.0 * (q.conj() * q1[i]).re;
            // Cubic terms with a repeated index are bounded by h·δ_i² and
            // folded into the diagonal curvature.
            let mut hii = 2.0 * (q1[i].norm_sqr() + q.conj() * q2[i][i]).re + third(i, i, i).abs() * h / 3.0;
            for j in 0..d {
                if j != i {
                    hii += third(i, i, j).abs() * h;
                }
            }
            // max over |δ| ≤ h of gδ + ½h_ii δ²
            model += if hii < 0.0 && g.abs() <= -hii * h {
                g * g / (-2.0 * hii)
            } else {
                g.abs() * h + 0.5 * hii * h * h
            };
            for j in i + 1..d {
                let hij = 2.0 * (q1[i].conj() * q1[j] + q.conj() * q2[i][j]).re;
                model += hij.abs() * h * h;
                for k in j + 1..d {
                    model += third(i, j, k).abs() * h * h * h;
                }
            }
        }
        let bound = g0 + model + remainder;
        (g0.sqrt(), bound.max(0.0).sqrt())
    }
}

pub fn torus_sup(p: &LaurentPolynomial, resolution: usize, refinement_rounds: usize) -> Result<TorusSup> {
    torus_sup_with(p, TorusSupOptions::new(resolution, refinement_rounds))
}

pub fn torus_sup_with(p: &LaurentPolynomial, opts: TorusSupOptions) -> Result<TorusSup> {
    let d = p.d();
    if opts.resolution < 8 {
        return Err(Error::InvalidParameter(format!("resolution {} below 8 points per circle", opts.resolution)));
    }
    if p.term_count() <= 1 {
        // |c λ^n| is constant on the torus.
        let v = p.terms().next().map(|(_, z)| z.norm()).unwrap_or(0.0);
        return Ok(TorusSup {
            estimate: v,
            upper_bound: v,
            argmax: vec![0.0; d],
            lipschitz_bound: v,
            cells_evaluated: 0,
        });
    }
    // Variables that never appear do not change the sup.
    let active: Vec<usize> = (0..d).filter(|&i| p.terms().any(|(e, _)| e[i] != 0)).collect();
    if active.len() < d {
        let reduced = LaurentPolynomial::from_terms(
            active.len(),
            p.terms().map(|(e, z)| (active.iter().map(|&i| e[i]).collect(), *z)),
        )?;
        let mut sup = torus_sup_with(&reduced, opts)?;
        let mut argmax = vec![0.0; d];
        for (k, &i) in active.iter().enumerate() {
            argmax[i] = sup.argmax[k];
        }
        sup.argmax = argmax;
        return Ok(sup);
    }
    if d > MAX_D || (opts.resolution as f64).powi(d as i32) > MAX_GRID_CELLS as f64 {
        return Err(Error::InvalidParameter(format!(
            "torus grid {}^{d} exceeds the budget of {MAX_GRID_CELLS} cells",
            opts.resolution
        )));
    }
    let ev = CellEvaluator::new(p);
    let r = opts.resolution;
    let mesh = 2.0 * PI / r as f64;
    let h0 = mesh / 2.0;
    let rem0 = ev.remainder(h0);
    let mut estimate = 0.0f64;
    let mut argmax = vec![0.0; d];
    // (center, half-width, bound)
    let mut kept: Vec<(Vec<f64>, f64, f64)> = Vec::new();
    let total = r.pow(d as u32);
    let mut center = vec![0.0; d];
    for idx in 0..total {
        let mut k = idx;
        for x in center.iter_mut() {
            *x = (k % r) as f64 * mesh;
            k /= r;
        }
        let (v, b) = ev.cell(&center, h0, rem0);
        if v > estimate {
            estimate = v;
            argmax.clone_from(&center);
        }
        if b > estimate {
            kept.push((center.clone(), h0, b));
        }
    }
    let lipschitz_bound = estimate + p.coefficient_l1() * p.absolute_degree() as f64 * d as f64 * mesh;
    let mut evaluated = total;
    let mut budget = opts.cell_budget;
    let children = 1usize << d;
    for _ in 0..opts.refinement_rounds {
        kept.retain(|(_, _, b)| *b > estimate);
        let mut active = Vec::new();
        let mut next = Vec::new();
        kept.sort_by(|a, b| b.2.total_cmp(&a.2));
        for cell in kept.drain(..) {
            if cell.2 > estimate + opts.gap && budget >= children {
                budget -= children;
                active.push(cell);
            } else {
                next.push(cell);
            }
        }
        if active.is_empty() {
            kept = next;
            break;
        }
        for (cen, h, _) in active {
            let hc = h / 2.0;
            let rem = ev.remainder(hc);
            for code in 0..children {
                let child: Vec<f64> =
                    cen.iter().enumerate().map(|(i, x)| if code >> i & 1 == 1 { x + hc } else { x - hc }).collect();
                let (v, b) = ev.cell(&child, hc, rem);
                evaluated += 1;
                if v > estimate {
                    estimate = v;
                    argmax.clone_from(&child);
                }
                next.push((child, hc, b));
            }
        }
        kept = next;
    }
    let taylor = kept.iter().map(|(_, _, b)| *b).fold(estimate, f64::max);
    Ok(TorusSup {
        estimate,
        upper_bound: taylor.min(lipschitz_bound).max(estimate),
        argmax,
        lipschitz_bound,
        cells_evaluated: evaluated,
    })
}
