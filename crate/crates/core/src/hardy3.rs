//! Six-condition Hardy test for three qubits built from the canonical form.
//!
//! With `|b₃⟩ = |0⟩ + z|1⟩` and `|a₁⟩ = x|0⟩ + y|1⟩` the settings
//!
//! ```text
//! b₁ = C†C a₁    a₂ = J C C†C a₁    b₂ = J C a₁    a₃ = J Dᵀ C* a₁*
//! ```
//!
//! satisfy four of the five zero conditions for every `(x, y, z)` with
//! `det C ≠ 0`; the remaining one fixes `(x, y)` as a root of a homogeneous
//! quadratic. The test passes when additionally `det D ≠ 0`.

use nalgebra::Matrix2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::magic::CanonicalForm;
use crate::sample::{complex_normal, complex_vector, seeded, substream};
use crate::tensor::{
    joint_probability, norm, normalized, raw_overlap, restrict_to_measurement_subspaces, Complex, MeasurementPair,
    PureState, Setting, ONE, ZERO,
};

pub type Mat2 = Matrix2<Complex>;

/// `J = iσ_y`.
pub fn j_matrix() -> Mat2 {
    Mat2::new(ZERO, ONE, -ONE, ZERO)
}

/// Coefficients below this make the quadratic identically zero.
pub const DEGENERATE_TOL: f64 = 1e-13;
/// Candidates with `|det C|` at or below this are skipped.
pub const DET_C_TOL: f64 = 1e-8;
const PARALLEL_TOL: f64 = 1e-12;
const DEGENERATE_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Zero conditions must fall strictly below this.
    pub zero: f64,
    /// Positivity must exceed this.
    pub pos: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero: 1e-9, pos: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMatrices {
    pub c: Mat2,
    pub c_tilde: Mat2,
    pub d: Mat2,
    pub z: Complex,
    pub x: Complex,
    pub y: Complex,
}

impl CMatrices {
    pub fn det_c(&self) -> Complex {
        self.c.determinant()
    }

    pub fn det_d(&self) -> Complex {
        self.d.determinant()
    }

    /// `F = Cᵀ C* Cᵀ J C̃`.
    pub fn f_matrix(&self) -> Mat2 {
        self.c.transpose() * self.c.conjugate() * self.c.transpose() * j_matrix() * self.c_tilde
    }
}

fn split_c(canon: &CanonicalForm) -> (Mat2, Mat2) {
    let (h, u, v, s, t) = (canon.h, canon.u.into(), canon.v.into(), canon.s.into(), canon.t.into());
    (Mat2::new(h, ZERO, ZERO, s), Mat2::new(ZERO, v, u, t))
}

pub fn d_matrix(canon: &CanonicalForm, x: Complex, y: Complex) -> Mat2 {
    let (u, v, s, t): (Complex, Complex, Complex, Complex) =
        (canon.u.into(), canon.v.into(), canon.s.into(), canon.t.into());
    Mat2::new(canon.h * x, v * y, s * y, u * x + t * y)
}

/// `C = C₀ + zC₁`, `C̃ = z*C₀ − C₁` and `D = xD₀ + yD₁`.
pub fn build_matrices(canon: &CanonicalForm, z: Complex, x: Complex, y: Complex) -> CMatrices {
    let (c0, c1) = split_c(canon);
    CMatrices {
        c: c0 + c1 * z,
        c_tilde: c0 * z.conj() - c1,
        d: d_matrix(canon, x, y),
        z,
        x,
        y,
    }
}

/// Closed form `h(s + tz) − uvz²`.
pub fn det_c_formula(canon: &CanonicalForm, z: Complex) -> Complex {
    canon.h * (canon.s + canon.t * z) - canon.u * canon.v * z * z
}

/// Closed form `hux² + htxy − svy²`.
pub fn det_d_formula(canon: &CanonicalForm, x: Complex, y: Complex) -> Complex {
    canon.h * canon.u * x * x + canon.h * canon.t * x * y - canon.s * canon.v * y * y
}

/// Homogeneous form `x²F₀₀ + xy(F₀₁+F₁₀) + y²F₁₁`.
pub fn quadratic_residual(f: &Mat2, x: Complex, y: Complex) -> Complex {
    x * x * f[(0, 0)] + x * y * (f[(0, 1)] + f[(1, 0)]) + y * y * f[(1, 1)]
}

fn unit_pair(x: Complex, y: Complex) -> Option<(Complex, Complex)> {
    let n = (x.norm_sqr() + y.norm_sqr()).sqrt();
    (n > 1e-300).then(|| (x / n, y / n))
}

/// Normalized roots `(x, y)` of the quadratic fixing `a₁`.
///
/// Uses the cancellation-free form `q = −(B ± √(B²−4AC))/2` with the larger
/// `|q|`; the homogeneous roots are then `(q, A)` and `(C, q)`.
pub fn solve_xy(canon: &CanonicalForm, z: Complex) -> Result<Vec<(Complex, Complex)>> {
    let f = build_matrices(canon, z, ONE, ZERO).f_matrix();
    let (a, b, c) = (f[(0, 0)], f[(0, 1)] + f[(1, 0)], f[(1, 1)]);
    if a.norm() < DEGENERATE_TOL && b.norm() < DEGENERATE_TOL && c.norm() < DEGENERATE_TOL {
        return Err(Error::DegenerateQuadratic);
    }
    let root = (b * b - a * c * 4.0).sqrt();
    let (plus, minus) = (b + root, b - root);
    let q = -(if plus.norm() >= minus.norm() { plus } else { minus }) / 2.0;
    let mut roots: Vec<(Complex, Complex)> = Vec::with_capacity(2);
    for cand in [unit_pair(q, a), unit_pair(c, q)].into_iter().flatten() {
        let dup = roots
            .iter()
            .any(|&(x, y)| (x.conj() * cand.0 + y.conj() * cand.1).norm() > 1.0 - PARALLEL_TOL);
        if !dup {
            roots.push(cand);
        }
    }
    Ok(roots)
}

/// Raw settings rays in the canonical frame, `[[a₁, b₁], [a₂, b₂], [a₃, b₃]]`.
pub fn raw_rays(canon: &CanonicalForm, z: Complex, x: Complex, y: Complex) -> [[Vec<Complex>; 2]; 3] {
    let m = build_matrices(canon, z, x, y);
    let j = j_matrix();
    let a1 = nalgebra::Vector2::new(x, y);
    let cc = m.c.adjoint() * m.c;
    let b1 = cc * a1;
    let a2 = j * m.c * cc * a1;
    let b2 = j * m.c * a1;
    let a3 = j * m.d.transpose() * m.c.conjugate() * a1.conjugate();
    let b3 = nalgebra::Vector2::new(ONE, z);
    let v = |w: nalgebra::Vector2<Complex>| vec![w[0], w[1]];
    [[v(a1), v(b1)], [v(a2), v(b2)], [v(a3), v(b3)]]
}

const RAY_NAMES: [[&str; 2]; 3] = [["a1", "b1"], ["a2", "b2"], ["a3", "b3"]];

/// Qubit settings in the canonical frame.
pub fn canonical_settings(canon: &CanonicalForm, z: Complex, x: Complex, y: Complex) -> Result<Vec<MeasurementPair>> {
    let rays = raw_rays(canon, z, x, y);
    rays.iter()
        .zip(RAY_NAMES)
        .map(|([a, b], [na, nb])| {
            if norm(a) < 1e-12 {
                return Err(Error::ZeroRay(na));
            }
            if norm(b) < 1e-12 {
                return Err(Error::ZeroRay(nb));
            }
            MeasurementPair::qubit(a, b)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Provenance {
    /// Built from `(z, x, y)`; `degenerate` marks a sampled `(x, y)` after the
    /// quadratic vanished identically.
    Constructed {
        z: Complex,
        x: Complex,
        y: Complex,
        degenerate: bool,
    },
    External,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardySettings {
    /// One pair per original party, in original coordinates.
    pub pairs: Vec<MeasurementPair>,
    pub provenance: Provenance,
}

impl HardySettings {
    pub fn external(pairs: Vec<MeasurementPair>) -> Self {
        Self {
            pairs,
            provenance: Provenance::External,
        }
    }
}

/// Settings from `(z, x, y)`, pulled back to the original parties and basis.
pub fn settings_from_xyz(canon: &CanonicalForm, z: Complex, x: Complex, y: Complex) -> Result<HardySettings> {
    let pairs = canon.pull_back(&canonical_settings(canon, z, x, y)?)?;
    Ok(HardySettings {
        pairs,
        provenance: Provenance::Constructed {
            z,
            x,
            y,
            degenerate: false,
        },
    })
}

/// Both sides of `|⟨ψ|a₁a₂a₃⟩|² = ⟨a₁*|(CᵀC*)²|a₁*⟩² |det D|²` on raw rays.
pub fn success_probability_identity(canon: &CanonicalForm, z: Complex, x: Complex, y: Complex) -> Result<(f64, f64)> {
    let rays = raw_rays(canon, z, x, y);
    let ideal = canon.ideal_state()?;
    let lhs = raw_overlap(&ideal, &[&rays[0][0], &rays[1][0], &rays[2][0]])?.norm_sqr();
    let m = build_matrices(canon, z, x, y);
    let g = m.c.transpose() * m.c.conjugate();
    let a1 = nalgebra::Vector2::new(x, y);
    let quad = (a1.transpose() * g * g * a1.conjugate())[(0, 0)].re;
    Ok((lhs, quad * quad * m.det_d().norm_sqr()))
}

/// Word order of [`ConditionReport::zeros`], as `(setting, outcome)` letters.
pub const ZERO_WORDS: [[(Setting, u8); 3]; 5] = [
    [(Setting::A, 0), (Setting::A, 0), (Setting::B, 1)],
    [(Setting::A, 0), (Setting::B, 1), (Setting::A, 0)],
    [(Setting::A, 0), (Setting::B, 0), (Setting::B, 0)],
    [(Setting::B, 0), (Setting::A, 0), (Setting::B, 0)],
    [(Setting::B, 1), (Setting::B, 1), (Setting::B, 0)],
];
pub const POSITIVE_WORD: [(Setting, u8); 3] = [(Setting::A, 0), (Setting::A, 0), (Setting::A, 0)];

/// Labels matching [`ZERO_WORDS`].
pub const ZERO_LABELS: [&str; 5] = ["a1 a2 ~b3", "a1 ~b2 a3", "a1 b2 b3", "b1 a2 b3", "~b1 ~b2 b3"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    /// `P(a₁a₂a₃)`.
    pub p_pos: f64,
    /// `P(a₁a₂b̄₃), P(a₁b̄₂a₃), P(a₁b₂b₃), P(b₁a₂b₃), P(b̄₁b̄₂b₃)`.
    pub zeros: [f64; 5],
    pub passed: bool,
    pub tol: Tolerances,
}

impl ConditionReport {
    pub fn new(p_pos: f64, zeros: [f64; 5], tol: Tolerances) -> Self {
        let passed = p_pos > tol.pos && max_zero(&zeros) < tol.zero;
        Self {
            p_pos,
            zeros,
            passed,
            tol,
        }
    }

    pub fn max_zero(&self) -> f64 {
        max_zero(&self.zeros)
    }
}

fn max_zero(zeros: &[f64]) -> f64 {
    zeros.iter().copied().fold(0.0, f64::max)
}

pub(crate) fn word_probability(state: &PureState, pairs: &[MeasurementPair], word: &[(Setting, u8)]) -> Result<f64> {
    let (choice, outcome): (Vec<Setting>, Vec<u8>) = word.iter().copied().unzip();
    joint_probability(state, pairs, &choice, &outcome)
}

/// Probabilities of the six condition words. Qudit settings are evaluated on
/// the state filtered onto their measurement planes.
pub fn evaluate_conditions(state: &PureState, settings: &HardySettings, tol: Tolerances) -> Result<ConditionReport> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "six-condition test needs 3 parties, got {}",
            state.n_parties()
        )));
    }
    let (state, pairs) = restrict_to_measurement_subspaces(state, &settings.pairs)?;
    let p_pos = word_probability(&state, &pairs, &POSITIVE_WORD)?;
    let mut zeros = [0.0; 5];
    for (slot, word) in zeros.iter_mut().zip(&ZERO_WORDS) {
        *slot = word_probability(&state, &pairs, word)?;
    }
    Ok(ConditionReport::new(p_pos, zeros, tol))
}

/// 48 points on circles of radius 0.5, 1, 2 at 16 angles, then 16 seeded
/// complex normal draws.
pub fn default_z_candidates(seed: u64) -> Vec<Complex> {
    let mut out = Vec::with_capacity(64);
    for r in [0.5, 1.0, 2.0] {
        for k in 0..16 {
            out.push(Complex::from_polar(r, std::f64::consts::TAU * k as f64 / 16.0));
        }
    }
    let mut rng = seeded(seed);
    out.extend((0..16).map(|_| complex_normal(&mut rng)));
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Candidate {
    index: usize,
    z: Complex,
    x: Complex,
    y: Complex,
    degenerate: bool,
    report: ConditionReport,
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    // passed first, then larger p_pos, then lower index
    (a.report.passed, a.report.p_pos, std::cmp::Reverse(a.index))
        .partial_cmp(&(b.report.passed, b.report.p_pos, std::cmp::Reverse(b.index)))
        .is_some_and(|o| o.is_gt())
}

fn try_candidate(canon: &CanonicalForm, index: usize, z: Complex, seed: u64, tol: Tolerances) -> Option<Candidate> {
    if det_c_formula(canon, z).norm() <= DET_C_TOL {
        return None;
    }
    let (roots, degenerate) = match solve_xy(canon, z) {
        Ok(r) => (r, false),
        Err(_) => {
            let mut rng = substream(seed, index as u64);
            let draws = (0..DEGENERATE_SAMPLES)
                .filter_map(|_| normalized(&complex_vector(&mut rng, 2)).ok())
                .map(|v| (v[0], v[1]))
                .collect();
            (draws, true)
        }
    };
    let mut best: Option<Candidate> = None;
    for (x, y) in roots {
        let Ok(pairs) = canonical_settings(canon, z, x, y) else {
            continue;
        };
        let settings = HardySettings::external(pairs);
        let Ok(report) = evaluate_conditions(&canon.state, &settings, tol) else {
            continue;
        };
        let cand = Candidate {
            index,
            z,
            x,
            y,
            degenerate,
            report,
        };
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best
}

/// Scans `z` candidates and returns the passing settings with the largest
/// positivity, pulled back to the original frame. The report is computed in
/// the canonical frame.
pub fn construct_test(
    canon: &CanonicalForm,
    z_candidates: &[Complex],
    tol: Tolerances,
    seed: u64,
) -> Result<(HardySettings, ConditionReport)> {
    let best = z_candidates
        .par_iter()
        .enumerate()
        .filter_map(|(i, &z)| try_candidate(canon, i, z, seed, tol))
        .reduce_with(|a, b| if better(&b, &a) { b } else { a });
    match best {
        Some(c) if c.report.passed => {
            let pairs = canon.pull_back(&canonical_settings(canon, c.z, c.x, c.y)?)?;
            let provenance = Provenance::Constructed {
                z: c.z,
                x: c.x,
                y: c.y,
                degenerate: c.degenerate,
            };
            Ok((HardySettings { pairs, provenance }, c.report))
        }
        other => Err(Error::ConstructionFailed {
            best_p_pos: other.map_or(0.0, |c| c.report.p_pos),
        }),
    }
}

/// Uniformly random qubit settings, one pair per party.
pub fn random_qubit_settings<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<MeasurementPair> {
    (0..n)
        .map(|_| {
            let a = complex_vector(rng, 2);
            let b = complex_vector(rng, 2);
            MeasurementPair::qubit(&a, &b).expect("gaussian rays are nonzero")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::magic::{canonicalize, ClosestProductOptions};
    use crate::sample::random_state;
    use crate::tensor::make_state;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn generic() -> CanonicalForm {
        CanonicalForm::from_coefficients(Complex::from_polar(0.5, 0.3), 0.7, 0.3, 0.1, 0.4).unwrap()
    }

    #[test]
    fn matrices_at_special_points() {
        let k = generic();
        let m = build_matrices(&k, ZERO, ONE, ZERO);
        assert_eq!(m.c, Mat2::new(k.h, ZERO, ZERO, k.s.into()));
        assert!((m.det_c() - k.h * k.s).norm() < 1e-15);
        assert_eq!(m.d, Mat2::new(k.h, ZERO, ZERO, k.u.into()));
        assert!((m.det_d() - k.h * k.u).norm() < 1e-15);
    }

    #[test]
    fn determinants_match_closed_forms() {
        let k = generic();
        for (z, x, y) in [
            (c(0.3, -1.2), c(0.6, 0.0), c(0.0, 0.8)),
            (c(-2.0, 0.5), c(0.1, 0.2), c(0.9, -0.3)),
        ] {
            let m = build_matrices(&k, z, x, y);
            assert!((m.det_c() - det_c_formula(&k, z)).norm() < 1e-14);
            assert!((m.det_d() - det_d_formula(&k, x, y)).norm() < 1e-14);
        }
    }

    #[test]
    fn operators_reproduce_amplitudes() {
        // ⟨ψ|a, w, b₃⟩ = wᵀ C a and ⟨ψ|a, w, a'⟩ = wᵀ D a'
        let k = generic();
        let psi = k.ideal_state().unwrap();
        let (z, x, y) = (c(0.4, 0.9), c(0.2, -0.5), c(1.1, 0.3));
        let m = build_matrices(&k, z, x, y);
        let a = nalgebra::Vector2::new(c(0.3, 0.1), c(-0.7, 0.2));
        let w = nalgebra::Vector2::new(c(0.5, -0.4), c(0.9, 0.6));
        let via_c = (w.transpose() * m.c * a)[(0, 0)];
        let direct = raw_overlap(&psi, &[vec![a[0], a[1]], vec![w[0], w[1]], vec![ONE, z]]).unwrap();
        assert!((via_c - direct).norm() < 1e-14);
        let via_d = (w.transpose() * m.d * a)[(0, 0)];
        let direct = raw_overlap(&psi, &[vec![x, y], vec![w[0], w[1]], vec![a[0], a[1]]]).unwrap();
        assert!((via_d - direct).norm() < 1e-14);
    }

    #[test]
    fn roots_solve_quadratic() {
        let k = generic();
        for z in default_z_candidates(1).into_iter().take(20) {
            let roots = solve_xy(&k, z).unwrap();
            assert_eq!(roots.len(), 2);
            let f = build_matrices(&k, z, ONE, ZERO).f_matrix();
            for (x, y) in roots {
                assert!(quadratic_residual(&f, x, y).norm() < 1e-10);
                assert!((x.norm_sqr() + y.norm_sqr() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn vanishing_leading_coefficient() {
        // t = 0, v = 0 and z = 0 give C diagonal with F₀₀ = 0
        let k = CanonicalForm::from_coefficients(c(0.6, 0.0), 0.4, 0.0, 0.5, 0.0).unwrap();
        let f = build_matrices(&k, c(0.7, 0.0), ONE, ZERO).f_matrix();
        let roots = solve_xy(&k, c(0.7, 0.0)).unwrap();
        for (x, y) in &roots {
            assert!(quadratic_residual(&f, *x, *y).norm() < 1e-12);
        }
        // direct check of the structural case on a hand-built matrix
        let f = Mat2::new(ZERO, ONE, ZERO, c(2.0, 0.0));
        assert!(quadratic_residual(&f, ONE, ZERO).norm() == 0.0);
    }

    #[test]
    fn construction_identities_hold_for_any_a1() {
        let k = generic();
        let psi = k.ideal_state().unwrap();
        let mut rng = seeded(4);
        for _ in 0..30 {
            let z = complex_normal(&mut rng);
            let v = normalized(&complex_vector(&mut rng, 2)).unwrap();
            let (x, y) = (v[0], v[1]);
            let pairs = canonical_settings(&k, z, x, y).unwrap();
            let r = evaluate_conditions(&psi, &HardySettings::external(pairs), Tolerances::default()).unwrap();
            for z in &r.zeros[1..] {
                assert!(*z < 1e-10, "{:?}", r.zeros);
            }
            // C a₁ = D b₃ and ⟨ā₃|b₃⟩ = −⟨a₁|C†C|a₁⟩ (J² = −1)
            let m = build_matrices(&k, z, x, y);
            let a1 = nalgebra::Vector2::new(x, y);
            let b3 = nalgebra::Vector2::new(ONE, z);
            assert!((m.c * a1 - m.d * b3).norm() < 1e-12);
            let rays = raw_rays(&k, z, x, y);
            let a3 = &rays[2][0];
            let bar_a3 = [a3[1].conj(), -a3[0].conj()];
            let lhs = bar_a3[0].conj() * ONE + bar_a3[1].conj() * z;
            let rhs = (a1.adjoint() * m.c.adjoint() * m.c * a1)[(0, 0)];
            assert!(
                (lhs + rhs).norm() < 1e-12 * rhs.norm().max(1.0) && rhs.re > 0.0,
                "{lhs} {rhs}"
            );
        }
    }

    #[test]
    fn identity_for_success_probability() {
        let k = generic();
        let mut rng = seeded(6);
        for _ in 0..30 {
            let z = complex_normal(&mut rng);
            let v = normalized(&complex_vector(&mut rng, 2)).unwrap();
            let (lhs, rhs) = success_probability_identity(&k, z, v[0], v[1]).unwrap();
            assert!((lhs - rhs).abs() < 1e-10 * rhs.max(1.0), "{lhs} {rhs}");
        }
    }

    #[test]
    fn det_d_root_kills_success() {
        let k = generic();
        // roots of hu x² + ht xy − sv y² with y = 1
        let (a, b, cc) = (k.h * k.u, k.h * k.t, Complex::from(-k.s * k.v));
        let x = (-b + (b * b - a * cc * 4.0).sqrt()) / (a * 2.0);
        let (x, y) = unit_pair(x, ONE).unwrap();
        assert!(det_d_formula(&k, x, y).norm() < 1e-14);
        let (lhs, _) = success_probability_identity(&k, c(0.8, 0.2), x, y).unwrap();
        assert!(lhs < 1e-12);
    }

    #[test]
    fn gedanken_settings_give_one_in_seventy_two() {
        let e = |s: &str| (s.bytes().map(|b| (b - b'0') as usize).collect::<Vec<_>>(), ONE);
        let psi = make_state(vec![2, 2, 2], &[e("000"), e("100"), e("110"), e("111")]).unwrap();
        let x = c(-2.0, 1.0) / 5.0;
        let o = [ONE, c(0.0, 1.0)];
        let pairs = vec![
            MeasurementPair::qubit(&[ONE, x], &o).unwrap(),
            MeasurementPair::qubit(&o, &[ONE, ONE]).unwrap(),
            MeasurementPair::qubit(&[x, ONE], &o).unwrap(),
        ];
        let r = evaluate_conditions(&psi, &HardySettings::external(pairs), Tolerances::default()).unwrap();
        assert!((r.p_pos - 1.0 / 72.0).abs() < 1e-12);
        assert!(r.max_zero() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn near_optimal_state_gives_one_in_thirty_two() {
        let entries: Vec<(Vec<usize>, Complex)> = [
            ("000", 1.0),
            ("001", 1.0),
            ("010", 1.0),
            ("100", -1.0),
            ("101", -1.0),
            ("011", -3.0),
            ("110", -3.0),
            ("111", -3.0),
        ]
        .iter()
        .map(|(s, a)| (s.bytes().map(|b| (b - b'0') as usize).collect(), Complex::from(*a)))
        .collect();
        let psi = make_state(vec![2, 2, 2], &entries).unwrap();
        let pair = MeasurementPair::qubit(&[ONE, ZERO], &[ONE, ONE]).unwrap();
        let r = evaluate_conditions(&psi, &HardySettings::external(vec![pair; 3]), Tolerances::default()).unwrap();
        assert!((r.p_pos - 1.0 / 32.0).abs() < 1e-12);
        assert!(r.max_zero() < 1e-15);
        assert!(r.passed);
    }

    #[test]
    fn construct_passes_for_random_states() {
        let mut rng = seeded(21);
        for _ in 0..10 {
            let s = random_state(&mut rng, &[2, 2, 2]).unwrap();
            let canon = canonicalize(&s, &ClosestProductOptions::default()).unwrap();
            let (settings, report) =
                construct_test(&canon, &default_z_candidates(3), Tolerances::default(), 3).unwrap();
            assert!(report.passed && report.p_pos > 0.0);
            let original = evaluate_conditions(&s, &settings, Tolerances::default()).unwrap();
            assert!(original.passed, "{original:?}");
            assert!((original.p_pos - report.p_pos).abs() < 1e-9);
        }
    }

    #[test]
    fn ghz_like_construction_fails() {
        let k = CanonicalForm::from_coefficients(ONE, 0.0, 0.0, 0.0, 1.0).unwrap();
        for z in default_z_candidates(0).into_iter().take(10) {
            if let Ok(roots) = solve_xy(&k, z) {
                for (x, y) in roots {
                    assert!(success_probability_identity(&k, z, x, y).unwrap().0 < 1e-20);
                }
            }
        }
        let err = construct_test(&k, &default_z_candidates(0), Tolerances::default(), 0).unwrap_err();
        assert!(matches!(err, Error::ConstructionFailed { .. }));
    }

    #[test]
    fn product_state_never_passes() {
        let psi = PureState::basis(vec![2, 2, 2], &[0, 0, 0]).unwrap();
        let mut rng = seeded(2);
        for _ in 0..100 {
            let pairs = random_qubit_settings(&mut rng, 3);
            let r = evaluate_conditions(&psi, &HardySettings::external(pairs), Tolerances::default()).unwrap();
            assert!(!r.passed);
        }
    }
}
