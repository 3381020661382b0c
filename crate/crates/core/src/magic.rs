//! Closest product states, magic bases and the 3-qubit canonical form
//! `h*|000⟩ + u|011⟩ + v|101⟩ + s|110⟩ + t|111⟩`.
//!
//! A magic basis is a local product basis with `⟨ψ|000⟩ ≠ 0` in which every
//! amplitude with exactly one nonzero index vanishes. The closest product
//! state, taken as `|0…0⟩`, always yields one.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sample::{complex_vector, substream};
use crate::tensor::{
    apply_local, contract, is_fully_entangled, local_basis_change, multi_index, norm, normalized, Complex,
    MeasurementPair, Observable, PureState, ONE, ZERO,
};

/// Single-excitation amplitudes at or above this are not a magic basis.
pub const MAGIC_RESIDUAL_TOL: f64 = 1e-9;
/// Eigenvalue threshold used for "full rank" reductions.
pub const FULL_RANK_TOL: f64 = 1e-12;
/// Stationarity target for the alternating product-state iteration.
const STATIONARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestProductOptions {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once a sweep improves `|⟨ψ|p⟩|` by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for ClosestProductOptions {
    fn default() -> Self {
        Self {
            restarts: 24,
            max_iters: 500,
            tol: 1e-13,
            seed: 0x00C1_05E5,
        }
    }
}

/// Best local optimum of `|⟨ψ|p₁…pₙ⟩|` found by the multi-start iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductAnsatz {
    /// Normalized per-party vectors.
    pub vectors: Vec<Vec<Complex>>,
    /// `⟨ψ|p⟩`.
    pub overlap_h: Complex,
    /// Largest single-excitation amplitude left at the optimum.
    pub residual: f64,
    /// False when the iteration cap was hit on every restart.
    pub converged: bool,
    pub restart: usize,
}

/// Component of `conj(partial)` orthogonal to `v`, i.e. the amplitude the
/// state has on `φ ⊗ p_rest` for `φ ⊥ v`.
fn excitation_norm(partial: &[Complex], v: &[Complex]) -> f64 {
    let target: Vec<Complex> = partial.iter().map(|c| c.conj()).collect();
    let along: Complex = v.iter().zip(&target).map(|(a, b)| a.conj() * b).sum();
    let rest: Vec<Complex> = target.iter().zip(v).map(|(t, a)| t - along * a).collect();
    norm(&rest)
}

fn stationarity(state: &PureState, vectors: &[Vec<Complex>]) -> f64 {
    (0..state.n_parties())
        .map(|k| excitation_norm(&contract(state, vectors, Some(k)), &vectors[k]))
        .fold(0.0, f64::max)
}

fn polish(state: &PureState, vectors: &mut [Vec<Complex>], opts: &ClosestProductOptions) -> (f64, bool) {
    let n = state.n_parties();
    let mut last = contract(state, vectors, None)[0].norm();
    for _ in 0..opts.max_iters {
        for k in 0..n {
            let partial = contract(state, vectors, Some(k));
            let target: Vec<Complex> = partial.iter().map(|c| c.conj()).collect();
            if let Ok(v) = normalized(&target) {
                vectors[k] = v;
            }
        }
        let now = contract(state, vectors, None)[0].norm();
        let gain = now - last;
        last = now;
        if gain < opts.tol && stationarity(state, vectors) < STATIONARY_TOL {
            return (now, true);
        }
    }
    (last, false)
}

/// Alternating fixed-point search for the product state of maximal overlap.
///
/// Each sweep replaces party `k`'s vector by the normalized conjugate of `ψ`
/// contracted against the other parties' vectors, which maximizes the overlap
/// in that party alone. Restarts run from seeded random vectors; the best
/// overlap wins, ties going to the lower restart index.
pub fn closest_product_state(state: &PureState, opts: &ClosestProductOptions) -> ProductAnsatz {
    let mut best: Option<ProductAnsatz> = None;
    let mut any_converged = false;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = substream(opts.seed, restart as u64);
        let mut vectors: Vec<Vec<Complex>> = state
            .dims()
            .iter()
            .map(|&d| normalized(&complex_vector(&mut rng, d)).expect("gaussian draw is nonzero"))
            .collect();
        let (_, converged) = polish(state, &mut vectors, opts);
        any_converged |= converged;
        let overlap_h = contract(state, &vectors, None)[0];
        let better = best
            .as_ref()
            .is_none_or(|b| overlap_h.norm() > b.overlap_h.norm() + 1e-15);
        if better {
            best = Some(ProductAnsatz {
                residual: stationarity(state, &vectors),
                vectors,
                overlap_h,
                converged,
                restart,
            });
        }
    }
    let mut best = best.expect("at least one restart");
    best.converged = best.converged || (any_converged && best.residual < STATIONARY_TOL);
    best
}

/// Completes a unit vector to a unitary whose first column is that vector.
pub fn complete_to_unitary(first: &[Complex]) -> DMatrix<Complex> {
    let d = first.len();
    let mut cols: Vec<Vec<Complex>> = vec![first.to_vec()];
    for e in 0..d {
        if cols.len() == d {
            break;
        }
        let mut v: Vec<Complex> = (0..d).map(|i| if i == e { ONE } else { ZERO }).collect();
        // two Gram–Schmidt passes for stability
        for _ in 0..2 {
            for c in &cols {
                let proj: Complex = c.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        if norm(&v) > 1e-6 {
            cols.push(normalized(&v).expect("checked norm"));
        }
    }
    DMatrix::from_fn(d, d, |r, c| cols[c][r])
}

/// Local bases taking a state to magic-basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct MagicBasisTransform {
    /// Per party, columns are the retained basis kets in original coordinates.
    /// Square unitaries for a direct magic basis; `d × 2` isometries after a
    /// local projection to qubits.
    pub bases: Vec<DMatrix<Complex>>,
    /// Largest single-excitation amplitude in the transformed state.
    pub residual: f64,
}

impl MagicBasisTransform {
    pub fn identity(dims: &[usize]) -> Self {
        Self {
            bases: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
            residual: 0.0,
        }
    }

    /// Expresses a frame ray (coordinates in the transformed basis) in
    /// original coordinates.
    pub fn lift(&self, party: usize, ray: &[Complex]) -> Vec<Complex> {
        let b = &self.bases[party];
        (0..b.nrows())
            .map(|r| (0..b.ncols()).map(|c| b[(r, c)] * ray[c]).sum())
            .collect()
    }
}

/// Largest amplitude with exactly one nonzero index.
pub fn single_excitation_residual(state: &PureState) -> f64 {
    let dims = state.dims();
    state
        .amps()
        .iter()
        .enumerate()
        .filter(|(flat, _)| multi_index(dims, *flat).iter().filter(|&&i| i != 0).count() == 1)
        .map(|(_, c)| c.norm())
        .fold(0.0, f64::max)
}

fn check_magic(state: &PureState) -> Result<f64> {
    let zero = vec![0; state.n_parties()];
    if state.amplitude(&zero).norm() < 1e-12 {
        return Err(Error::NotMagicBasis("vanishing ⟨ψ|0…0⟩".into()));
    }
    let residual = single_excitation_residual(state);
    if residual >= MAGIC_RESIDUAL_TOL {
        return Err(Error::NotMagicBasis(format!(
            "single-excitation amplitude {residual:.3e}"
        )));
    }
    Ok(residual)
}

/// Rotates the state so that the ansatz product state becomes `|0…0⟩`.
pub fn to_magic_basis(state: &PureState, ansatz: &ProductAnsatz) -> Result<(PureState, MagicBasisTransform)> {
    let bases: Vec<DMatrix<Complex>> = ansatz.vectors.iter().map(|v| complete_to_unitary(v)).collect();
    let inverse: Vec<DMatrix<Complex>> = bases.iter().map(|u| u.adjoint()).collect();
    let magic = local_basis_change(state, &inverse)?;
    let residual = single_excitation_residual(&magic);
    if residual >= MAGIC_RESIDUAL_TOL {
        return Err(Error::MagicResidualTooLarge { residual });
    }
    Ok((magic, MagicBasisTransform { bases, residual }))
}

/// 3-qubit canonical form together with the frame that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalForm {
    pub h: Complex,
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub t: f64,
    /// Canonical party `k` is original party `permutation[k]`.
    pub permutation: [usize; 3],
    /// Phase-fixed bases, indexed by original party.
    pub transform: MagicBasisTransform,
    /// Actual amplitudes in canonical coordinates.
    pub state: PureState,
}

fn canonical_amplitudes(h: Complex, u: f64, v: f64, s: f64, t: f64) -> Vec<Complex> {
    let mut amps = vec![ZERO; 8];
    amps[0b000] = h.conj();
    amps[0b011] = Complex::from(u);
    amps[0b101] = Complex::from(v);
    amps[0b110] = Complex::from(s);
    amps[0b111] = Complex::from(t);
    amps
}

impl CanonicalForm {
    /// Canonical form given directly by its coefficients (identity frame).
    /// Coefficients are rescaled to unit norm.
    pub fn from_coefficients(h: Complex, u: f64, v: f64, s: f64, t: f64) -> Result<Self> {
        if [u, v, s, t].iter().any(|&c| c.is_nan() || c < 0.0) {
            return Err(Error::InvalidArgument("u, v, s, t must be nonnegative".into()));
        }
        let state = PureState::new(vec![2, 2, 2], canonical_amplitudes(h, u, v, s, t))?;
        let h = state.amplitude(&[0, 0, 0]).conj();
        let c = |i: usize| state.amps()[i].re;
        Ok(Self {
            h,
            u: c(0b011),
            v: c(0b101),
            s: c(0b110),
            t: c(0b111),
            permutation: [0, 1, 2],
            transform: MagicBasisTransform::identity(&[2, 2, 2]),
            state,
        })
    }

    /// The state rebuilt from `(h, u, v, s, t)` alone, canonical coordinates.
    pub fn ideal_state(&self) -> Result<PureState> {
        PureState::new(
            vec![2, 2, 2],
            canonical_amplitudes(self.h, self.u, self.v, self.s, self.t),
        )
    }

    /// Maps a canonical-coordinate state back to the original parties and basis.
    pub fn to_original(&self, canonical: &PureState) -> Result<PureState> {
        let mut inverse = [0usize; 3];
        for (k, &p) in self.permutation.iter().enumerate() {
            inverse[p] = k;
        }
        let frame = canonical.permute_parties(&inverse)?;
        apply_local(&frame, &self.transform.bases)
    }

    /// Expresses canonical-frame settings in the original parties and basis.
    pub fn pull_back(&self, canonical: &[MeasurementPair]) -> Result<Vec<MeasurementPair>> {
        if canonical.len() != 3 {
            return Err(Error::DimensionMismatch(format!(
                "{} measurement pairs for 3 parties",
                canonical.len()
            )));
        }
        let mut out: Vec<Option<MeasurementPair>> = vec![None; 3];
        for (k, pair) in canonical.iter().enumerate() {
            let party = self.permutation[k];
            let lift = |o: &Observable| {
                Observable::in_subspace(
                    &self.transform.lift(party, o.ray(0)),
                    &self.transform.lift(party, o.ray(1)),
                )
            };
            out[party] = Some(MeasurementPair::new(lift(&pair.a)?, lift(&pair.b)?)?);
        }
        Ok(out
            .into_iter()
            .map(|p| p.expect("permutation covers all parties"))
            .collect())
    }
}

/// Phase-fixes, relabels and reads off the canonical coefficients of a
/// 3-qubit state given in a magic basis.
pub fn canonical_form_3qubit(magic_state: &PureState, transform: &MagicBasisTransform) -> Result<CanonicalForm> {
    if magic_state.dims() != [2, 2, 2] {
        return Err(Error::DimensionMismatch(format!(
            "canonical form needs 3 qubits, got {:?}",
            magic_state.dims()
        )));
    }
    check_magic(magic_state)?;
    is_fully_entangled(magic_state, FULL_RANK_TOL)?;

    // Basis phases θ[k][i] making u, v, s, t real and nonnegative; new
    // amplitudes are e^{-i(θ₁+θ₂+θ₃)} c. Solution with β₂ = β₃ = 0.
    let arg = |idx: [usize; 3]| {
        let c = magic_state.amplitude(&idx);
        if c.norm() > 0.0 {
            c.arg()
        } else {
            0.0
        }
    };
    let (pu, pv, ps, pt) = (arg([0, 1, 1]), arg([1, 0, 1]), arg([1, 1, 0]), arg([1, 1, 1]));
    let phases = [[pu, pt], [pv - pt, 0.0], [ps - pt, 0.0]];
    let diag = |k: usize, sign: f64| {
        DMatrix::from_fn(2, 2, |r, c| {
            if r == c {
                Complex::from_polar(1.0, sign * phases[k][r])
            } else {
                ZERO
            }
        })
    };
    let fixed = local_basis_change(magic_state, &[diag(0, -1.0), diag(1, -1.0), diag(2, -1.0)])?;
    let bases: Vec<DMatrix<Complex>> = transform
        .bases
        .iter()
        .enumerate()
        .map(|(k, b)| b * diag(k, 1.0))
        .collect();

    let h = fixed.amplitude(&[0, 0, 0]).conj();
    let t = fixed.amplitude(&[1, 1, 1]).norm();
    // coefficient attached to each party being the one in |0⟩
    let family = [
        fixed.amplitude(&[0, 1, 1]).norm(),
        fixed.amplitude(&[1, 0, 1]).norm(),
        fixed.amplitude(&[1, 1, 0]).norm(),
    ];
    let permutation = choose_labels(h, family, t);
    let state = fixed.permute_parties(&permutation)?;
    Ok(CanonicalForm {
        h,
        u: family[permutation[0]],
        v: family[permutation[1]],
        s: family[permutation[2]],
        t,
        permutation,
        transform: MagicBasisTransform {
            bases,
            residual: single_excitation_residual(&fixed),
        },
        state,
    })
}

const LABEL_TOL: f64 = 1e-9;

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Lexicographically first relabeling with `|h| ≠ s` (or `s = 0` when some
/// coefficient vanishes), `u > 0` and `t + s + v > 0`. Symmetric
/// coefficient sets keep the identity labeling.
fn choose_labels(h: Complex, family: [f64; 3], t: f64) -> [usize; 3] {
    let uniform = (family[0] - family[1]).abs() < LABEL_TOL && (family[1] - family[2]).abs() < LABEL_TOL;
    if uniform {
        return [0, 1, 2];
    }
    let has_zero = family.iter().any(|&c| c < LABEL_TOL);
    PERMUTATIONS
        .into_iter()
        .find(|p| {
            let (u, v, s) = (family[p[0]], family[p[1]], family[p[2]]);
            let s_ok = if has_zero {
                s < LABEL_TOL
            } else {
                (s - h.norm()).abs() >= LABEL_TOL
            };
            s_ok && u >= LABEL_TOL && t + s + v >= LABEL_TOL
        })
        .unwrap_or([0, 1, 2])
}

/// Why an exceptional symmetric state fails the six-condition test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailingKind {
    /// `u = v = s = 0`.
    GhzLike,
    /// `t ≠ 0`, `s ≠ 0` and `h = s` as complex numbers.
    EqualHS,
    /// `t = 0`, `s ≠ 0` and `|h| = s`.
    EqualAbsHS,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateClass {
    Asymmetric,
    SymmetricPassing,
    SymmetricFailing(FailingKind),
}

impl StateClass {
    pub fn is_symmetric(self) -> bool {
        !matches!(self, StateClass::Asymmetric)
    }
}

impl std::fmt::Display for StateClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateClass::Asymmetric => write!(f, "Asymmetric"),
            StateClass::SymmetricPassing => write!(f, "SymmetricPassing"),
            StateClass::SymmetricFailing(FailingKind::GhzLike) => write!(f, "SymmetricFailing/GHZlike"),
            StateClass::SymmetricFailing(FailingKind::EqualHS) => write!(f, "SymmetricFailing/EqualHS_tNonzero"),
            StateClass::SymmetricFailing(FailingKind::EqualAbsHS) => write!(f, "SymmetricFailing/EqualAbsHS_tZero"),
        }
    }
}

/// Default tolerance on coefficient differences for [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-9;

pub fn classify(canon: &CanonicalForm, tol: f64) -> StateClass {
    let CanonicalForm { h, u, v, s, t, .. } = *canon;
    let symmetric = (u - v).abs() < tol && (v - s).abs() < tol;
    if !symmetric {
        return StateClass::Asymmetric;
    }
    if u < tol && v < tol && s < tol {
        StateClass::SymmetricFailing(FailingKind::GhzLike)
    } else if t >= tol && (h - Complex::from(s)).norm() < tol {
        StateClass::SymmetricFailing(FailingKind::EqualHS)
    } else if t < tol && (h.norm() - s).abs() < tol {
        StateClass::SymmetricFailing(FailingKind::EqualAbsHS)
    } else {
        StateClass::SymmetricPassing
    }
}

/// Magic-basis state and the rotation producing it; retries the closest
/// product search with more effort when it stalls.
pub fn magic_frame(state: &PureState, opts: &ClosestProductOptions) -> Result<(PureState, MagicBasisTransform)> {
    let mut opts = *opts;
    let mut last = None;
    for _ in 0..3 {
        let ansatz = closest_product_state(state, &opts);
        match to_magic_basis(state, &ansatz) {
            Ok(out) => return Ok(out),
            Err(e @ Error::MagicResidualTooLarge { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
        opts.restarts *= 2;
        opts.max_iters *= 4;
    }
    Err(last.expect("loop ran"))
}

/// Closest product state, magic basis and canonical form of three qubits.
pub fn canonicalize(state: &PureState, opts: &ClosestProductOptions) -> Result<CanonicalForm> {
    let (magic, transform) = magic_frame(state, opts)?;
    canonical_form_3qubit(&magic, &transform)
}
