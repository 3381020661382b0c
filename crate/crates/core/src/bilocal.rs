//! Membership in the bi-local polytope: mixtures over the three bipartitions
//! `{k | rest}` of a local deterministic strategy for party `k` times an
//! extreme non-signaling box for the other two.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lp::{lp_feasibility, LpOutcome};
use crate::tensor::CorrelationTable;

/// Phase-1 optimum at or below this counts as feasible.
pub const LP_TOL: f64 = 1e-7;
/// Feasible weights must reproduce the table to this accuracy.
pub const RECONSTRUCTION_TOL: f64 = 1e-8;

pub const N_VERTICES: usize = 288;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SinglePartyVertex {
    /// Outcome for settings a and b.
    pub outcomes: [u8; 2],
}

impl SinglePartyVertex {
    pub fn all() -> [Self; 4] {
        [[0, 0], [0, 1], [1, 0], [1, 1]].map(|outcomes| Self { outcomes })
    }

    pub fn p(&self, s: usize, o: usize) -> f64 {
        if self.outcomes[s] as usize == o {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxKind {
    /// Deterministic outcomes `(o_i(a), o_i(b), o_j(a), o_j(b))`.
    LocalDeterministic([u8; 4]),
    /// Outcome parity `s_i s_j ⊕ α s_i ⊕ β s_j ⊕ γ`.
    PrBox { alpha: u8, beta: u8, gamma: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BipartiteNSVertex {
    pub kind: BoxKind,
}

impl BipartiteNSVertex {
    /// 16 deterministic boxes then 8 PR boxes.
    pub fn all() -> Vec<Self> {
        let mut out = Vec::with_capacity(24);
        for m in 0..16u8 {
            out.push(Self {
                kind: BoxKind::LocalDeterministic([m >> 3 & 1, m >> 2 & 1, m >> 1 & 1, m & 1]),
            });
        }
        for g in 0..8u8 {
            out.push(Self {
                kind: BoxKind::PrBox {
                    alpha: g >> 2 & 1,
                    beta: g >> 1 & 1,
                    gamma: g & 1,
                },
            });
        }
        out
    }

    /// `p(o_i o_j | s_i s_j)`.
    pub fn p(&self, si: usize, sj: usize, oi: usize, oj: usize) -> f64 {
        match self.kind {
            BoxKind::LocalDeterministic(d) => {
                if d[si] as usize == oi && d[2 + sj] as usize == oj {
                    1.0
                } else {
                    0.0
                }
            }
            BoxKind::PrBox { alpha, beta, gamma } => {
                let parity = (si & sj) ^ (alpha as usize & si) ^ (beta as usize & sj) ^ gamma as usize;
                if oi ^ oj == parity {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vertex {
    /// Party treated locally.
    pub isolated: usize,
    pub single: SinglePartyVertex,
    pub pair: BipartiteNSVertex,
    pub table: CorrelationTable,
}

fn vertex_table(isolated: usize, single: &SinglePartyVertex, pair: &BipartiteNSVertex) -> CorrelationTable {
    let (j, k) = match isolated {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let bit = |x: usize, party: usize| (x >> (2 - party)) & 1;
    let mut p = vec![0.0; 64];
    for s in 0..8 {
        for o in 0..8 {
            p[(s << 3) | o] =
                single.p(bit(s, isolated), bit(o, isolated)) * pair.p(bit(s, j), bit(s, k), bit(o, j), bit(o, k));
        }
    }
    CorrelationTable::non_signaling(3, p).expect("vertex tables are valid")
}

/// The 288 vertices, indexed `96·isolated + 24·single + pair`.
pub fn enumerate_vertices() -> &'static [Vertex] {
    static VERTICES: OnceLock<Vec<Vertex>> = OnceLock::new();
    VERTICES.get_or_init(|| {
        let pairs = BipartiteNSVertex::all();
        let mut out = Vec::with_capacity(N_VERTICES);
        for isolated in 0..3 {
            for single in SinglePartyVertex::all() {
                for pair in &pairs {
                    out.push(Vertex {
                        isolated,
                        single,
                        pair: *pair,
                        table: vertex_table(isolated, &single, pair),
                    });
                }
            }
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BilocalCertificate {
    pub verdict: Verdict,
    /// Vertex weights when feasible.
    pub weights: Option<Vec<f64>>,
    /// Phase-1 optimum.
    pub margin: f64,
}

impl BilocalCertificate {
    pub fn is_infeasible(&self) -> bool {
        self.verdict == Verdict::Infeasible
    }
}

/// Mixture `Σ w_v V_v`.
pub fn reconstruct(weights: &[f64]) -> Vec<f64> {
    let mut p = vec![0.0; 64];
    for (w, v) in weights.iter().zip(enumerate_vertices()) {
        if *w != 0.0 {
            for (slot, x) in p.iter_mut().zip(v.table.entries()) {
                *slot += w * x;
            }
        }
    }
    p
}

/// Decides whether `table` is a mixture of the bi-local vertices.
pub fn check_bilocal(table: &CorrelationTable, tol: f64) -> Result<BilocalCertificate> {
    if table.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "bi-local check needs 3 parties, got {}",
            table.n_parties()
        )));
    }
    let vertices = enumerate_vertices();
    let mut a = DMatrix::zeros(65, N_VERTICES);
    for (c, v) in vertices.iter().enumerate() {
        for (r, x) in v.table.entries().iter().enumerate() {
            a[(r, c)] = *x;
        }
        a[(64, c)] = 1.0;
    }
    let mut b = table.entries().to_vec();
    b.push(1.0);
    match lp_feasibility(&a, &b, tol)? {
        LpOutcome::Infeasible { margin } => Ok(BilocalCertificate {
            verdict: Verdict::Infeasible,
            weights: None,
            margin,
        }),
        LpOutcome::Feasible { x, margin } => {
            let err = reconstruct(&x)
                .iter()
                .zip(table.entries())
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            if err > RECONSTRUCTION_TOL.max(tol) {
                return Err(Error::LpNumericalFailure(format!("reconstruction error {err:.3e}")));
            }
            Ok(BilocalCertificate {
                verdict: Verdict::Feasible,
                weights: Some(x),
                margin,
            })
        }
    }
}

/// Smallest uniform-noise weight making the table bi-local, by bisection to
/// `resolution`.
pub fn noise_threshold(table: &CorrelationTable, tol: f64, resolution: f64) -> Result<f64> {
    let uniform = CorrelationTable::uniform(3);
    let (mut lo, mut hi) = (0.0, 1.0);
    if !check_bilocal(table, tol)?.is_infeasible() {
        return Ok(0.0);
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if check_bilocal(&table.mix(&uniform, mid)?, tol)?.is_infeasible() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy3::{evaluate_conditions, HardySettings, Tolerances};
    use crate::sample::seeded;
    use crate::tensor::{correlation_table, make_state, Complex, MeasurementPair, ONE};
    use rand::Rng;

    #[test]
    fn vertex_count_and_validity() {
        let v = enumerate_vertices();
        assert_eq!(v.len(), 288);
        for vertex in v {
            assert_eq!(vertex.table.max_signaling(), 0.0);
            assert_eq!(vertex.table.normalization_error(), 0.0);
            assert!(vertex.table.entries().iter().all(|&x| x == 0.0 || x == 0.5 || x == 1.0));
        }
    }

    #[test]
    fn deterministic_products_shared_by_all_partitions() {
        let v = enumerate_vertices();
        let det = |x: &Vertex| matches!(x.pair.kind, BoxKind::LocalDeterministic(_));
        for k in 0..3 {
            let family: Vec<&Vertex> = v.iter().filter(|x| x.isolated == k && det(x)).collect();
            assert_eq!(family.len(), 64);
            for other in 0..3 {
                for f in &family {
                    assert!(v.iter().any(|x| x.isolated == other && det(x) && x.table == f.table));
                }
            }
        }
        // PR-box products are genuinely different across partitions
        let pr0 = v.iter().find(|x| x.isolated == 0 && !det(x)).unwrap();
        assert!(!v.iter().any(|x| x.isolated != 0 && x.table == pr0.table));
    }

    #[test]
    fn pr_box_marginals_uniform() {
        for b in BipartiteNSVertex::all().into_iter().skip(16) {
            for si in 0..2 {
                for sj in 0..2 {
                    for oi in 0..2 {
                        assert_eq!(b.p(si, sj, oi, 0) + b.p(si, sj, oi, 1), 0.5);
                    }
                }
            }
        }
    }

    #[test]
    fn random_mixtures_are_feasible() {
        let mut rng = seeded(1);
        for _ in 0..10 {
            let raw: Vec<f64> = (0..N_VERTICES)
                .map(|_| if rng.random_bool(0.1) { rng.random::<f64>() } else { 0.0 })
                .collect();
            let total: f64 = raw.iter().sum::<f64>().max(1e-12);
            let w: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let table = CorrelationTable::non_signaling(3, reconstruct(&w)).unwrap();
            let cert = check_bilocal(&table, LP_TOL).unwrap();
            assert_eq!(cert.verdict, Verdict::Feasible);
            let err = reconstruct(cert.weights.as_ref().unwrap())
                .iter()
                .zip(table.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8);
        }
    }

    #[test]
    fn product_with_chsh_pair_is_bilocal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = make_state(vec![2, 2, 2], &[(vec![0, 0, 0], ONE), (vec![0, 1, 1], ONE)]).unwrap();
        let ray = |th: f64| [Complex::from(th.cos()), Complex::from(th.sin())];
        let pi = std::f64::consts::PI;
        let settings = vec![
            MeasurementPair::qubit(&[ONE, Complex::from(0.0)], &[Complex::from(h), Complex::from(h)]).unwrap(),
            MeasurementPair::qubit(&ray(0.0), &ray(pi / 4.0)).unwrap(),
            MeasurementPair::qubit(&ray(pi / 8.0), &ray(-pi / 8.0)).unwrap(),
        ];
        let table = correlation_table(&psi, &settings).unwrap();
        assert_eq!(check_bilocal(&table, LP_TOL).unwrap().verdict, Verdict::Feasible);
    }

    fn gedanken_table() -> CorrelationTable {
        let e = |s: &str| (s.bytes().map(|b| (b - b'0') as usize).collect::<Vec<_>>(), ONE);
        let psi = make_state(vec![2, 2, 2], &[e("000"), e("100"), e("110"), e("111")]).unwrap();
        let x = Complex::new(-2.0, 1.0) / 5.0;
        let o = [ONE, Complex::new(0.0, 1.0)];
        let settings = vec![
            MeasurementPair::qubit(&[ONE, x], &o).unwrap(),
            MeasurementPair::qubit(&o, &[ONE, ONE]).unwrap(),
            MeasurementPair::qubit(&[x, ONE], &o).unwrap(),
        ];
        let r = evaluate_conditions(&psi, &HardySettings::external(settings.clone()), Tolerances::default()).unwrap();
        assert!(r.passed);
        correlation_table(&psi, &settings).unwrap()
    }

    #[test]
    fn gedanken_table_is_not_bilocal() {
        let cert = check_bilocal(&gedanken_table(), LP_TOL).unwrap();
        assert_eq!(cert.verdict, Verdict::Infeasible);
        assert!(cert.margin > 1e-7);
    }

    #[test]
    fn noise_eventually_makes_it_bilocal() {
        let w = noise_threshold(&gedanken_table(), LP_TOL, 1e-3).unwrap();
        assert!(w > 0.0 && w < 1.0, "{w}");
    }
}
