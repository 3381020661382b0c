//! Maximal success probability of the six-condition test and the bound `q₃`.

use rayon::prelude::*;

use crate::error::Result;
use crate::hardy3::{
    canonical_settings, det_c_formula, evaluate_conditions, settings_from_xyz, solve_xy, HardySettings, Tolerances,
    DET_C_TOL,
};
use crate::magic::CanonicalForm;
use crate::sample::{complex_vector, substream};
use crate::tensor::Complex;

/// `ξ`, the positive root of `x³ + 4x² − 2`, and `q₃ = (1−ξ²)ξ²/(2+ξ)²`.
pub fn q3_constant() -> (f64, f64) {
    let f = |x: f64| x * x * x + 4.0 * x * x - 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xi = 0.5 * (lo + hi);
    (xi, (1.0 - xi * xi) * xi * xi / ((2.0 + xi) * (2.0 + xi)))
}

pub const DIM: usize = 8;

/// Packed search coordinates: `arg h`, five unnormalized moduli of
/// `(|h|, u, v, s, t)`, and `Re z`, `Im z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchPoint(pub [f64; DIM]);

impl SearchPoint {
    pub fn canon(&self) -> Option<CanonicalForm> {
        let p = &self.0;
        let m: Vec<f64> = p[1..6].iter().map(|x| x.abs()).collect();
        let n = m.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !n.is_finite() || n <= 1e-12 {
            return None;
        }
        CanonicalForm::from_coefficients(
            Complex::from_polar(m[0] / n, p[0]),
            m[1] / n,
            m[2] / n,
            m[3] / n,
            m[4] / n,
        )
        .ok()
    }

    pub fn z(&self) -> Complex {
        Complex::new(self.0[6], self.0[7])
    }
}

/// Best passing positivity over the roots at the point's `z`, 0 when nothing
/// passes.
pub fn objective(point: &SearchPoint) -> f64 {
    best_at(point).map_or(0.0, |(p, _, _)| p)
}

fn best_at(point: &SearchPoint) -> Option<(f64, Complex, Complex)> {
    let canon = point.canon()?;
    let z = point.z();
    let det = det_c_formula(&canon, z).norm();
    if det.is_nan() || det < DET_C_TOL {
        return None;
    }
    let tol = Tolerances::default();
    let mut best: Option<(f64, Complex, Complex)> = None;
    for (x, y) in solve_xy(&canon, z).ok()? {
        let Ok(pairs) = canonical_settings(&canon, z, x, y) else {
            continue;
        };
        let Ok(r) = evaluate_conditions(&canon.state, &HardySettings::external(pairs), tol) else {
            continue;
        };
        if r.passed && best.is_none_or(|b| r.p_pos > b.0) {
            best = Some((r.p_pos, x, y));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub reflect: f64,
    pub expand: f64,
    pub contract: f64,
    pub shrink: f64,
    /// Stop once every vertex is within this of the best one.
    pub diameter_tol: f64,
    pub max_iters: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            reflect: 1.0,
            expand: 2.0,
            contract: 0.5,
            shrink: 0.5,
            diameter_tol: 1e-10,
            max_iters: 4000,
        }
    }
}

fn axpy(a: &[f64; DIM], t: f64, b: &[f64; DIM]) -> [f64; DIM] {
    std::array::from_fn(|i| a[i] + t * (b[i] - a[i]))
}

impl NelderMead {
    /// Maximizes `f` from the simplex `x0 + step·eᵢ`.
    pub fn maximize<F: Fn(&[f64; DIM]) -> f64>(&self, f: F, x0: [f64; DIM], step: f64) -> ([f64; DIM], f64, usize) {
        let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
        simplex.push((x0, f(&x0)));
        for i in 0..DIM {
            let mut x = x0;
            x[i] += step;
            simplex.push((x, f(&x)));
        }
        let mut iters = 0;
        while iters < self.max_iters {
            // best first; stable sort keeps ties in insertion order
            simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
            let diameter = simplex[1..]
                .iter()
                .map(|(x, _)| {
                    x.iter()
                        .zip(&simplex[0].0)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if diameter < self.diameter_tol {
                break;
            }
            iters += 1;
            let centroid: [f64; DIM] =
                std::array::from_fn(|i| simplex[..DIM].iter().map(|(x, _)| x[i]).sum::<f64>() / DIM as f64);
            let (worst, f_worst) = simplex[DIM];
            let reflected = axpy(&centroid, -self.reflect, &worst);
            let f_r = f(&reflected);
            if f_r > simplex[0].1 {
                let expanded = axpy(&centroid, -self.expand, &worst);
                let f_e = f(&expanded);
                simplex[DIM] = if f_e > f_r { (expanded, f_e) } else { (reflected, f_r) };
                continue;
            }
            if f_r > simplex[DIM - 1].1 {
                simplex[DIM] = (reflected, f_r);
                continue;
            }
            let (target, f_target) = if f_r > f_worst {
                (reflected, f_r)
            } else {
                (worst, f_worst)
            };
            let contracted = axpy(&centroid, self.contract, &target);
            let f_c = f(&contracted);
            if f_c > f_target {
                simplex[DIM] = (contracted, f_c);
                continue;
            }
            let best = simplex[0].0;
            for v in simplex.iter_mut().skip(1) {
                v.0 = axpy(&best, self.shrink, &v.0);
                v.1 = f(&v.0);
            }
        }
        simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
        (simplex[0].0, simplex[0].1, iters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub seed: u64,
    pub restarts: usize,
    pub iters: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            seed: 7,
            restarts: 200,
            iters: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub canon: CanonicalForm,
    pub settings: HardySettings,
    pub p_best: f64,
    pub point: SearchPoint,
    pub restart: usize,
}

fn start_point(seed: u64, restart: usize) -> [f64; DIM] {
    let mut rng = substream(seed, restart as u64);
    let draws = complex_vector(&mut rng, DIM / 2);
    std::array::from_fn(|i| if i % 2 == 0 { draws[i / 2].re } else { draws[i / 2].im })
}

/// Multi-start downhill simplex over canonical forms and `z`. Restarts run in
/// parallel; the best value wins, ties to the lower restart index.
pub fn maximize_success(opts: &SearchOptions) -> Result<SearchResult> {
    let nm = NelderMead {
        max_iters: opts.iters,
        ..NelderMead::default()
    };
    let (restart, x, _) = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let (x, v, _) = nm.maximize(|p| objective(&SearchPoint(*p)), start_point(opts.seed, r), 0.3);
            (r, x, v)
        })
        .reduce_with(|a, b| if b.2 > a.2 || (b.2 == a.2 && b.0 < a.0) { b } else { a })
        .expect("at least one restart");
    let point = SearchPoint(x);
    let canon = point.canon().expect("best point decodes");
    let (p_best, xx, yy) = best_at(&point).unwrap_or((0.0, Complex::from(1.0), Complex::from(0.0)));
    let settings = settings_from_xyz(&canon, point.z(), xx, yy)?;
    Ok(SearchResult {
        canon,
        settings,
        p_best,
        point,
        restart,
    })
}
