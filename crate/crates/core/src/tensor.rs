//! Dense complex amplitude tensors, rank-1 dichotomic measurements and
//! Born-rule probabilities for product measurements.
//!
//! Amplitudes are stored row-major with party 0 as the slowest index.
//! Throughout the crate `⟨ψ|v₁…vₙ⟩` means `Σ conj(c_{i₁…iₙ}) v₁[i₁]…vₙ[iₙ]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Complex = Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// Norm tolerance after construction.
const NORM_TOL: f64 = 1e-12;
/// Below this squared norm an input state is treated as zero.
const ZERO_STATE_TOL: f64 = 1e-24;
/// Rays shorter than this cannot be normalized.
pub const RAY_TOL: f64 = 1e-12;
/// Roundoff allowance for negative probabilities.
const NEG_PROB_TOL: f64 = 1e-12;

/// Normalized pure state of `n ≥ 2` parties.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: Vec<Complex>,
}

impl PureState {
    /// Builds a state from a dense amplitude vector, normalizing it.
    pub fn new(dims: Vec<usize>, amps: Vec<Complex>) -> Result<Self> {
        if dims.len() < 2 || dims.iter().any(|&d| d < 2) {
            return Err(Error::DimensionMismatch(format!(
                "need at least two parties of dimension >= 2, got {dims:?}"
            )));
        }
        let len: usize = dims.iter().product();
        if amps.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dims {dims:?}",
                amps.len()
            )));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let norm_sqr: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if norm_sqr < ZERO_STATE_TOL {
            return Err(Error::ZeroState);
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let amps = amps.into_iter().map(|c| c * scale).collect();
        Ok(Self { dims, amps })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(dims: Vec<usize>, index: &[usize]) -> Result<Self> {
        make_state(dims, &[(index.to_vec(), ONE)])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn amps(&self) -> &[Complex] {
        &self.amps
    }

    pub fn flat_index(&self, index: &[usize]) -> usize {
        flat_index(&self.dims, index)
    }

    pub fn amplitude(&self, index: &[usize]) -> Complex {
        self.amps[self.flat_index(index)]
    }

    /// Relabels parties: party `k` of the result is party `perm[k]` of `self`.
    pub fn permute_parties(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_parties();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument(format!(
                "{perm:?} is not a permutation of {n} parties"
            )));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims[p]).collect();
        let mut amps = vec![ZERO; self.amps.len()];
        let mut old = vec![0; n];
        for (flat, slot) in amps.iter_mut().enumerate() {
            let new = multi_index(&dims, flat);
            for k in 0..n {
                old[perm[k]] = new[k];
            }
            *slot = self.amplitude(&old);
        }
        Ok(Self { dims, amps })
    }

    /// Squared norm deviation from one.
    pub fn norm_error(&self) -> f64 {
        (self.amps.iter().map(|c| c.norm_sqr()).sum::<f64>() - 1.0).abs()
    }
}

pub(crate) fn flat_index(dims: &[usize], index: &[usize]) -> usize {
    index.iter().zip(dims).fold(0, |acc, (&i, &d)| acc * d + i)
}

pub(crate) fn multi_index(dims: &[usize], mut flat: usize) -> Vec<usize> {
    let mut index = vec![0; dims.len()];
    for (slot, &d) in index.iter_mut().zip(dims).rev() {
        *slot = flat % d;
        flat /= d;
    }
    index
}

/// Builds a normalized state from sparse `(index, amplitude)` entries.
pub fn make_state(dims: Vec<usize>, entries: &[(Vec<usize>, Complex)]) -> Result<PureState> {
    let len: usize = dims.iter().product();
    let mut amps = vec![ZERO; len];
    for (index, amp) in entries {
        if index.len() != dims.len() || index.iter().zip(&dims).any(|(&i, &d)| i >= d) {
            return Err(Error::IndexOutOfRange {
                index: index.clone(),
                dims: dims.clone(),
            });
        }
        amps[flat_index(&dims, index)] += *amp;
    }
    let state = PureState::new(dims, amps)?;
    debug_assert!(state.norm_error() < NORM_TOL);
    Ok(state)
}

pub fn norm(v: &[Complex]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn normalized(v: &[Complex]) -> Result<Vec<Complex>> {
    let n = norm(v);
    if !n.is_finite() {
        return Err(Error::NonFinite("measurement vector"));
    }
    if n < RAY_TOL {
        return Err(Error::ZeroRay("local vector"));
    }
    Ok(v.iter().map(|c| c / n).collect())
}

/// `⟨u|v⟩`.
pub fn inner(u: &[Complex], v: &[Complex]) -> Complex {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Contracts `conj(ψ)` against one vector per party, leaving party `skip` open
/// when given. Vectors are used as passed (no normalization).
pub(crate) fn contract<V: AsRef<[Complex]>>(state: &PureState, vectors: &[V], skip: Option<usize>) -> Vec<Complex> {
    let dims = state.dims();
    let out_len = skip.map_or(1, |k| dims[k]);
    let mut out = vec![ZERO; out_len];
    let mut index = vec![0usize; dims.len()];
    for &c in state.amps() {
        if c != ZERO {
            let mut term = c.conj();
            for (k, v) in vectors.iter().enumerate() {
                if Some(k) != skip {
                    term *= v.as_ref()[index[k]];
                }
            }
            out[skip.map_or(0, |k| index[k])] += term;
        }
        // odometer increment, last party fastest
        for k in (0..dims.len()).rev() {
            index[k] += 1;
            if index[k] < dims[k] {
                break;
            }
            index[k] = 0;
        }
    }
    out
}

fn check_vector_dims<V: AsRef<[Complex]>>(state: &PureState, vectors: &[V]) -> Result<()> {
    if vectors.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} vectors for {} parties",
            vectors.len(),
            state.n_parties()
        )));
    }
    for (k, (v, &d)) in vectors.iter().zip(state.dims()).enumerate() {
        if v.as_ref().len() != d {
            return Err(Error::DimensionMismatch(format!(
                "party {k}: vector of length {} for dimension {d}",
                v.as_ref().len()
            )));
        }
    }
    Ok(())
}

/// `⟨ψ|v₁⊗…⊗vₙ⟩` with every vector normalized first.
pub fn overlap<V: AsRef<[Complex]>>(state: &PureState, vectors: &[V]) -> Result<Complex> {
    check_vector_dims(state, vectors)?;
    let unit = vectors
        .iter()
        .map(|v| normalized(v.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(contract(state, &unit, None)[0])
}

/// `⟨ψ|v₁⊗…⊗vₙ⟩` on the vectors exactly as given.
pub fn raw_overlap<V: AsRef<[Complex]>>(state: &PureState, vectors: &[V]) -> Result<Complex> {
    check_vector_dims(state, vectors)?;
    Ok(contract(state, vectors, None)[0])
}

/// Clamps roundoff negatives to zero and rejects anything more negative.
pub fn clamp_probability(p: f64) -> Result<f64> {
    if p >= 0.0 {
        Ok(p)
    } else if p >= -NEG_PROB_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeProbability { value: p })
    }
}

/// Which of the two observables a party measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    A,
    B,
}

impl Setting {
    pub const BOTH: [Setting; 2] = [Setting::A, Setting::B];

    pub fn bit(self) -> usize {
        match self {
            Setting::A => 0,
            Setting::B => 1,
        }
    }

    pub fn from_bit(bit: usize) -> Self {
        if bit & 1 == 0 {
            Setting::A
        } else {
            Setting::B
        }
    }
}

/// Rank-1 dichotomic observable: outcome-0 ray and the orthogonal outcome-1
/// ray inside a two-dimensional measurement subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    zero: Vec<Complex>,
    one: Vec<Complex>,
}

impl Observable {
    /// Qubit observable; the outcome-1 ray is `J|ray*⟩` with `J = iσ_y`.
    pub fn qubit(ray: &[Complex]) -> Result<Self> {
        if ray.len() != 2 {
            return Err(Error::DimensionMismatch(format!("qubit ray of length {}", ray.len())));
        }
        let zero = normalized(ray)?;
        let one = vec![zero[1].conj(), -zero[0].conj()];
        Ok(Self { zero, one })
    }

    /// Observable on the plane spanned by `ray` and `span`; the outcome-1 ray is
    /// the normalized part of `span` orthogonal to `ray`.
    pub fn in_subspace(ray: &[Complex], span: &[Complex]) -> Result<Self> {
        if ray.len() != span.len() {
            return Err(Error::DimensionMismatch("subspace rays differ in length".into()));
        }
        let zero = normalized(ray)?;
        let along = inner(&zero, span);
        let rest: Vec<Complex> = span.iter().zip(&zero).map(|(s, z)| s - along * z).collect();
        let one = normalized(&rest).map_err(|_| Error::ZeroRay("measurement subspace"))?;
        Ok(Self { zero, one })
    }

    pub fn dim(&self) -> usize {
        self.zero.len()
    }

    pub fn ray(&self, outcome: u8) -> &[Complex] {
        if outcome == 0 {
            &self.zero
        } else {
            &self.one
        }
    }
}

/// The two observables `a_k`, `b_k` of one party.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementPair {
    pub a: Observable,
    pub b: Observable,
}

impl MeasurementPair {
    pub fn new(a: Observable, b: Observable) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch(
                "observables of one party differ in dimension".into(),
            ));
        }
        Ok(Self { a, b })
    }

    /// Qubit pair from the outcome-0 rays of `a` and `b`.
    pub fn qubit(a0: &[Complex], b0: &[Complex]) -> Result<Self> {
        Self::new(Observable::qubit(a0)?, Observable::qubit(b0)?)
    }

    pub fn observable(&self, setting: Setting) -> &Observable {
        match setting {
            Setting::A => &self.a,
            Setting::B => &self.b,
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

fn check_settings(state: &PureState, settings: &[MeasurementPair]) -> Result<()> {
    if settings.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurement pairs for {} parties",
            settings.len(),
            state.n_parties()
        )));
    }
    for (k, (pair, &d)) in settings.iter().zip(state.dims()).enumerate() {
        if pair.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "party {k}: settings of dimension {} for a {d}-level system",
                pair.dim()
            )));
        }
    }
    Ok(())
}

/// Born probability of the given per-party settings and outcome bits.
pub fn joint_probability(
    state: &PureState,
    settings: &[MeasurementPair],
    choice: &[Setting],
    outcome: &[u8],
) -> Result<f64> {
    check_settings(state, settings)?;
    let n = state.n_parties();
    if choice.len() != n || outcome.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "choice/outcome length differs from {n} parties"
        )));
    }
    let rays: Vec<&[Complex]> = settings
        .iter()
        .zip(choice.iter().zip(outcome))
        .map(|(pair, (&s, &o))| pair.observable(s).ray(o))
        .collect();
    clamp_probability(contract(state, &rays, None)[0].norm_sqr())
}

const TABLE_NORM_TOL: f64 = 1e-10;
const TABLE_NS_TOL: f64 = 1e-10;

/// Joint outcome distribution over all `2ⁿ` setting combinations.
///
/// Entry `(s, o)` lives at `s · 2ⁿ + o`, where bit `n−1−k` of `s` (resp. `o`)
/// is party `k`'s setting (resp. outcome), so `aab` reads left to right.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    n: usize,
    p: Vec<f64>,
}

impl CorrelationTable {
    /// Wraps raw entries, clamping roundoff negatives and checking normalization.
    pub fn from_values(n: usize, mut p: Vec<f64>) -> Result<Self> {
        if p.len() != 1 << (2 * n) {
            return Err(Error::DimensionMismatch(format!("{} entries for {n} parties", p.len())));
        }
        for v in p.iter_mut() {
            if !v.is_finite() {
                return Err(Error::NonFinite("correlation table"));
            }
            *v = clamp_probability(*v)?;
        }
        let table = Self { n, p };
        let err = table.normalization_error();
        if err > TABLE_NORM_TOL {
            return Err(Error::InconsistentTable(format!("normalization off by {err:.3e}")));
        }
        Ok(table)
    }

    /// Like [`from_values`](Self::from_values) but also requires non-signaling.
    pub fn non_signaling(n: usize, p: Vec<f64>) -> Result<Self> {
        let table = Self::from_values(n, p)?;
        let sig = table.max_signaling();
        if sig > TABLE_NS_TOL {
            return Err(Error::InconsistentTable(format!("signaling {sig:.3e}")));
        }
        Ok(table)
    }

    pub fn n_parties(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.p
    }

    pub fn index(&self, settings: usize, outcomes: usize) -> usize {
        (settings << self.n) | outcomes
    }

    pub fn get(&self, settings: usize, outcomes: usize) -> f64 {
        self.p[self.index(settings, outcomes)]
    }

    /// Probability of a word given as per-party `(setting, outcome)` letters.
    pub fn word(&self, letters: &[(Setting, u8)]) -> f64 {
        let (s, o) = letters.iter().fold((0, 0), |(s, o), &(set, out)| {
            ((s << 1) | set.bit(), (o << 1) | out as usize)
        });
        self.get(s, o)
    }

    pub fn normalization_error(&self) -> f64 {
        let m = 1usize << self.n;
        (0..m)
            .map(|s| (self.p[s * m..(s + 1) * m].iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of the single-party non-signaling equalities: summing
    /// out party `k`'s outcome must not depend on party `k`'s setting. These
    /// imply independence for every marginal.
    pub fn max_signaling(&self) -> f64 {
        let n = self.n;
        let m = 1usize << n;
        let mut worst = 0.0f64;
        for k in 0..n {
            let bit = 1usize << (n - 1 - k);
            for s in (0..m).filter(|s| s & bit == 0) {
                for o in (0..m).filter(|o| o & bit == 0) {
                    let with_a = self.get(s, o) + self.get(s, o | bit);
                    let with_b = self.get(s | bit, o) + self.get(s | bit, o | bit);
                    worst = worst.max((with_a - with_b).abs());
                }
            }
        }
        worst
    }

    /// Entry-wise maximum absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Convex combination `(1−w)·self + w·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch("mixing tables of different size".into()));
        }
        let p = self
            .p
            .iter()
            .zip(&other.p)
            .map(|(a, b)| (1.0 - w) * a + w * b)
            .collect();
        Self::from_values(self.n, p)
    }

    /// Uniformly random outcomes for every setting.
    pub fn uniform(n: usize) -> Self {
        Self {
            n,
            p: vec![1.0 / (1u64 << n) as f64; 1 << (2 * n)],
        }
    }
}

/// Fills the full correlation table of `state` under `settings`.
pub fn correlation_table(state: &PureState, settings: &[MeasurementPair]) -> Result<CorrelationTable> {
    check_settings(state, settings)?;
    let n = state.n_parties();
    let m = 1usize << n;
    let mut p = Vec::with_capacity(m * m);
    let mut choice = vec![Setting::A; n];
    let mut outcome = vec![0u8; n];
    for s in 0..m {
        for o in 0..m {
            for k in 0..n {
                choice[k] = Setting::from_bit(s >> (n - 1 - k));
                outcome[k] = ((o >> (n - 1 - k)) & 1) as u8;
            }
            p.push(joint_probability(state, settings, &choice, &outcome)?);
        }
    }
    CorrelationTable::non_signaling(n, p)
}

/// Applies one linear map per party (`rows × dim_k`) to the raw amplitudes.
fn apply_local_maps(state: &PureState, maps: &[DMatrix<Complex>]) -> Result<(Vec<usize>, Vec<Complex>)> {
    if maps.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "{} local maps for {} parties",
            maps.len(),
            state.n_parties()
        )));
    }
    let mut dims = state.dims().to_vec();
    let mut amps = state.amps().to_vec();
    for (k, map) in maps.iter().enumerate() {
        if map.ncols() != dims[k] {
            return Err(Error::DimensionMismatch(format!(
                "party {k}: map takes dimension {} but party has {}",
                map.ncols(),
                dims[k]
            )));
        }
        let outer: usize = dims[..k].iter().product();
        let inner_len: usize = dims[k + 1..].iter().product();
        let (d_in, d_out) = (dims[k], map.nrows());
        let mut next = vec![ZERO; outer * d_out * inner_len];
        for o in 0..outer {
            for r in 0..d_out {
                for c in 0..d_in {
                    let m = map[(r, c)];
                    if m == ZERO {
                        continue;
                    }
                    let src = (o * d_in + c) * inner_len;
                    let dst = (o * d_out + r) * inner_len;
                    for i in 0..inner_len {
                        next[dst + i] += m * amps[src + i];
                    }
                }
            }
        }
        dims[k] = d_out;
        amps = next;
    }
    Ok((dims, amps))
}

/// Largest entry of `U†U − 1`.
pub fn unitarity_defect(u: &DMatrix<Complex>) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((g[(r, c)] - target).norm());
        }
    }
    worst
}

/// Applies `U₁⊗…⊗Uₙ` to the state.
pub fn local_basis_change(state: &PureState, unitaries: &[DMatrix<Complex>]) -> Result<PureState> {
    for (party, u) in unitaries.iter().enumerate() {
        let deviation = unitarity_defect(u);
        if deviation > 1e-10 {
            return Err(Error::NotUnitary { party, deviation });
        }
    }
    let (dims, amps) = apply_local_maps(state, unitaries)?;
    PureState::new(dims, amps)
}

/// Applies arbitrary per-party linear maps (`rows × dim_k`) and renormalizes.
pub fn apply_local(state: &PureState, maps: &[DMatrix<Complex>]) -> Result<PureState> {
    let (dims, amps) = apply_local_maps(state, maps)?;
    PureState::new(dims, amps)
}

/// Projects each party onto the span of its retained kets (`kets[k]`,
/// orthonormal, in current coordinates). Returns the renormalized state in
/// the retained coordinates.
pub fn project_local(state: &PureState, kets: &[Vec<Vec<Complex>>]) -> Result<PureState> {
    let maps: Vec<DMatrix<Complex>> = kets
        .iter()
        .map(|party| {
            let d = party.first().map_or(0, Vec::len);
            DMatrix::from_fn(party.len(), d, |r, c| party[r].get(c).copied().unwrap_or(ZERO).conj())
        })
        .collect();
    let (dims, amps) = apply_local_maps(state, &maps)?;
    PureState::new(dims, amps)
}

/// Eigenvalues of the single-party reduced density operator, descending.
pub fn reduced_spectrum(state: &PureState, party: usize) -> Vec<f64> {
    let d = state.dims()[party];
    let permuted_order: Vec<usize> = std::iter::once(party)
        .chain((0..state.n_parties()).filter(|&k| k != party))
        .collect();
    let moved = state.permute_parties(&permuted_order).expect("valid permutation");
    let rest = moved.amps().len() / d;
    let m = DMatrix::from_fn(d, rest, |r, c| moved.amps()[r * rest + c]);
    let mut ev: Vec<f64> = m.singular_values().iter().map(|s| s * s).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Numerical rank of the reduced density operator of `party`.
pub fn reduced_rank(state: &PureState, party: usize, tol: f64) -> usize {
    reduced_spectrum(state, party).into_iter().filter(|&e| e > tol).count()
}

/// Every single-party reduction has rank at least two.
pub fn is_fully_entangled(state: &PureState, tol: f64) -> Result<()> {
    for party in 0..state.n_parties() {
        let rank = reduced_rank(state, party, tol);
        if rank < 2 {
            return Err(Error::NotFullyEntangled { party, rank });
        }
    }
    Ok(())
}

/// Restricts a qudit scenario to the two-dimensional measurement subspaces.
///
/// Every party of dimension above two must measure both observables inside the
/// same plane. The state is filtered onto those planes and renormalized, and
/// the settings are re-expressed in qubit coordinates `{a.zero, a.one}`.
pub fn restrict_to_measurement_subspaces(
    state: &PureState,
    settings: &[MeasurementPair],
) -> Result<(PureState, Vec<MeasurementPair>)> {
    check_settings(state, settings)?;
    if state.dims().iter().all(|&d| d == 2) {
        return Ok((state.clone(), settings.to_vec()));
    }
    let mut kets = Vec::with_capacity(settings.len());
    let mut local = Vec::with_capacity(settings.len());
    for (k, pair) in settings.iter().enumerate() {
        let basis = vec![pair.a.zero.clone(), pair.a.one.clone()];
        let coords = |v: &[Complex]| -> Result<Vec<Complex>> {
            let c = vec![inner(&basis[0], v), inner(&basis[1], v)];
            if (norm(&c) - 1.0).abs() > 1e-9 {
                return Err(Error::DimensionMismatch(format!(
                    "party {k}: observables a and b span different planes"
                )));
            }
            Ok(c)
        };
        let b_zero = coords(&pair.b.zero)?;
        let b_one = coords(&pair.b.one)?;
        local.push(MeasurementPair::new(
            Observable {
                zero: vec![ONE, ZERO],
                one: vec![ZERO, ONE],
            },
            Observable {
                zero: b_zero,
                one: b_one,
            },
        )?);
        kets.push(basis);
    }
    Ok((project_local(state, &kets)?, local))
}
