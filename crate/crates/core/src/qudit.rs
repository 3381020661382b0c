//! Local projection of a tripartite qudit state onto a fully entangled
//! three-qubit state that stays in a magic basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::magic::{single_excitation_residual, MagicBasisTransform, FULL_RANK_TOL, MAGIC_RESIDUAL_TOL};
use crate::tensor::{inner, is_fully_entangled, norm, normalized, project_local, Complex, PureState, ONE, ZERO};

/// Amplitude threshold for "nonzero" coefficients.
pub const REDUCE_TOL: f64 = 1e-10;
const PROPORTIONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    /// Some amplitude with all three indices nonzero survives.
    TNonzero,
    /// All such amplitudes vanish; one party is projected onto a mixed ray.
    TZero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceRecord {
    /// Per party, the two retained orthonormal kets in magic-basis coordinates.
    pub kets: Vec<[Vec<Complex>; 2]>,
    pub branch: Branch,
}

impl SubspaceRecord {
    /// Retained kets as `d × 2` isometries.
    pub fn isometries(&self) -> Vec<DMatrix<Complex>> {
        self.kets
            .iter()
            .map(|[k0, k1]| DMatrix::from_fn(k0.len(), 2, |r, c| if c == 0 { k0[r] } else { k1[r] }))
            .collect()
    }

    /// Composes the retained kets with the magic-basis rotation, giving frame
    /// maps from qubit coordinates to original coordinates.
    pub fn lift(&self, magic: &MagicBasisTransform, residual: f64) -> MagicBasisTransform {
        let bases = magic.bases.iter().zip(self.isometries()).map(|(u, k)| u * k).collect();
        MagicBasisTransform { bases, residual }
    }
}

fn unit(d: usize, i: usize) -> Vec<Complex> {
    (0..d).map(|k| if k == i { ONE } else { ZERO }).collect()
}

fn check_input(state: &PureState) -> Result<()> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "reduction needs 3 parties, got {}",
            state.n_parties()
        )));
    }
    if state.amplitude(&[0, 0, 0]).norm() <= REDUCE_TOL {
        return Err(Error::NotMagicBasis("vanishing ⟨ψ|000⟩".into()));
    }
    let residual = single_excitation_residual(state);
    if residual >= MAGIC_RESIDUAL_TOL {
        return Err(Error::NotMagicBasis(format!(
            "single-excitation amplitude {residual:.3e}"
        )));
    }
    is_fully_entangled(state, FULL_RANK_TOL)
}

/// Projects a magic-basis tripartite state onto a fully entangled 3-qubit
/// state. Qubit inputs come back unchanged.
pub fn reduce_to_3qubit(state: &PureState, tol: f64) -> Result<(PureState, SubspaceRecord)> {
    check_input(state)?;
    let dims = state.dims().to_vec();
    let t_max = best_t(state);
    if dims.iter().all(|&d| d == 2) {
        let kets = dims.iter().map(|&d| [unit(d, 0), unit(d, 1)]).collect();
        let branch = if t_max.is_some_and(|(_, a)| a > tol) {
            Branch::TNonzero
        } else {
            Branch::TZero
        };
        return Ok((state.clone(), SubspaceRecord { kets, branch }));
    }
    let record = match t_max {
        Some((idx, a)) if a > tol => SubspaceRecord {
            kets: (0..3).map(|k| [unit(dims[k], 0), unit(dims[k], idx[k])]).collect(),
            branch: Branch::TNonzero,
        },
        _ => t_zero_record(state, tol)?,
    };
    let kets: Vec<Vec<Vec<Complex>>> = record.kets.iter().map(|k| k.to_vec()).collect();
    let reduced = project_local(state, &kets)?;
    is_fully_entangled(&reduced, FULL_RANK_TOL)?;
    Ok((reduced, record))
}

/// Largest `|c_{jkl}|` with `j, k, l ≥ 1`, first in index order on ties.
fn best_t(state: &PureState) -> Option<([usize; 3], f64)> {
    let d = state.dims();
    let mut best: Option<([usize; 3], f64)> = None;
    for j in 1..d[0] {
        for k in 1..d[1] {
            for l in 1..d[2] {
                let a = state.amplitude(&[j, k, l]).norm();
                if best.is_none_or(|(_, b)| a > b) {
                    best = Some(([j, k, l], a));
                }
            }
        }
    }
    best
}

fn at(state: &PureState, roles: [(usize, usize); 3]) -> Complex {
    let mut idx = [0; 3];
    for (party, i) in roles {
        idx[party] = i;
    }
    state.amplitude(&idx)
}

/// Vector over the pivot's nonzero indices of amplitudes with `other = i`
/// and the remaining party at 0, for the `i` with the largest entry.
fn family(state: &PureState, pivot: usize, other: usize, zero: usize, tol: f64) -> Option<(usize, Vec<Complex>)> {
    let d = state.dims();
    let mut best: Option<(usize, f64)> = None;
    for i in 1..d[other] {
        for p in 1..d[pivot] {
            let a = at(state, [(pivot, p), (other, i), (zero, 0)]).norm();
            if a > tol && best.is_none_or(|(_, b)| a > b) {
                best = Some((i, a));
            }
        }
    }
    let (i, _) = best?;
    let v = (0..d[pivot])
        .map(|p| {
            if p == 0 {
                ZERO
            } else {
                at(state, [(pivot, p), (other, i), (zero, 0)])
            }
        })
        .collect();
    Some((i, v))
}

/// Ray with nonzero overlap on both `φ` and `φ'`: `φ̂` itself when the two are
/// parallel, else `φ̂ + e^{iθ}φ̂'` with `e^{iθ}` the phase of `⟨φ̂'|φ̂⟩`.
pub fn overlapping_ray(phi: &[Complex], phi_prime: &[Complex]) -> Result<Vec<Complex>> {
    let a = normalized(phi)?;
    let b = normalized(phi_prime)?;
    let ov = inner(&b, &a);
    if ov.norm() > 1.0 - PROPORTIONAL_TOL {
        return Ok(a);
    }
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    normalized(&a.iter().zip(&b).map(|(x, y)| x + phase * y).collect::<Vec<_>>())
}

fn t_zero_record(state: &PureState, tol: f64) -> Result<SubspaceRecord> {
    let d = state.dims().to_vec();
    for (pivot, q_party, r_party) in [(2, 0, 1), (0, 1, 2), (1, 0, 2)] {
        let Some((r, phi)) = family(state, pivot, r_party, q_party, tol) else {
            continue;
        };
        let Some((q, phi_prime)) = family(state, pivot, q_party, r_party, tol) else {
            continue;
        };
        let plus = overlapping_ray(&phi, &phi_prime)?;
        let mut kets = vec![[vec![], vec![]], [vec![], vec![]], [vec![], vec![]]];
        kets[q_party] = [unit(d[q_party], 0), unit(d[q_party], q)];
        kets[r_party] = [unit(d[r_party], 0), unit(d[r_party], r)];
        kets[pivot] = [unit(d[pivot], 0), plus];
        return Ok(SubspaceRecord {
            kets,
            branch: Branch::TZero,
        });
    }
    // unreachable for fully entangled inputs
    let rank = (0..3)
        .map(|k| crate::tensor::reduced_rank(state, k, FULL_RANK_TOL))
        .min()
        .unwrap_or(0);
    Err(Error::NotFullyEntangled { party: 0, rank })
}

/// Retained kets are orthonormal per party.
pub fn record_defect(record: &SubspaceRecord) -> f64 {
    record
        .kets
        .iter()
        .map(|[a, b]| (norm(a) - 1.0).abs().max((norm(b) - 1.0).abs()).max(inner(a, b).norm()))
        .fold(0.0, f64::max)
}
