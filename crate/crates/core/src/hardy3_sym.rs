//! Hardy test for symmetric three-qubit states with identical settings on
//! the first two qubits.
//!
//! For `h*|000⟩ + s(|011⟩+|101⟩+|110⟩) + t|111⟩` and `|x⟩ = |0⟩ + x|1⟩`, take
//! `D = D₀ + xD₁` and
//!
//! ```text
//! a₁ = a₂ = |x⟩    b₁ = b₂ = J D D† |x*⟩    b₃ = (Dᵀ|x⟩)*    a₃ = J Dᵀ D* Dᵀ |x⟩
//! ```
//!
//! Then `⟨ψ|a₁a₂a₃⟩ = −R(x) det D` with `R(x) = ⟨x̄|D*Dᵀ|x⟩`, a polynomial in
//! `x, x*` whose linear part is `(|h|²−2s²)x − hs x*`.

use nalgebra::Vector2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hardy3::{
    d_matrix, j_matrix, word_probability, ConditionReport, HardySettings, Mat2, Tolerances, ZERO_WORDS,
};
use crate::magic::{CanonicalForm, FULL_RANK_TOL};
use crate::sample::seeded;
use crate::tensor::{
    is_fully_entangled, norm, restrict_to_measurement_subspaces, Complex, MeasurementPair, PureState, Setting, ONE,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricCanon {
    pub h: Complex,
    pub s: f64,
    pub t: f64,
}

impl SymmetricCanon {
    /// Normalizes `(h, s, t)`.
    pub fn new(h: Complex, s: f64, t: f64) -> Result<Self> {
        if !(s >= 0.0 && t >= 0.0) {
            return Err(Error::InvalidArgument("s and t must be nonnegative".into()));
        }
        let n = (h.norm_sqr() + 3.0 * s * s + t * t).sqrt();
        if !n.is_finite() || n <= 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            h: h / n,
            s: s / n,
            t: t / n,
        })
    }

    /// Symmetric part of a canonical form; `s` is the mean of `u, v, s`.
    pub fn from_canonical(canon: &CanonicalForm) -> Result<Self> {
        Self::new(canon.h, (canon.u + canon.v + canon.s) / 3.0, canon.t)
    }

    pub fn as_canonical(&self) -> Result<CanonicalForm> {
        CanonicalForm::from_coefficients(self.h, self.s, self.s, self.s, self.t)
    }

    pub fn state(&self) -> Result<PureState> {
        self.as_canonical()?.ideal_state()
    }

    /// `D₀ + xD₁`.
    pub fn d(&self, x: Complex) -> Result<Mat2> {
        Ok(d_matrix(&self.as_canonical()?, ONE, x))
    }
}

/// `R(x) = ⟨x̄|D*Dᵀ|x⟩` from the matrices, `x̄ = J|x*⟩`.
pub fn r_direct(canon: &SymmetricCanon, x: Complex) -> Result<Complex> {
    let d = canon.d(x)?;
    let xv = Vector2::new(ONE, x);
    let xbar = j_matrix() * xv.conjugate();
    Ok((xbar.adjoint() * d.conjugate() * d.transpose() * xv)[(0, 0)])
}

/// `R(x)` from its expansion in `x` and `x*`.
pub fn r_polynomial(canon: &SymmetricCanon, x: Complex) -> Complex {
    let SymmetricCanon { h, s, t } = *canon;
    let xc = x.conj();
    let m2 = x.norm_sqr();
    (h.norm_sqr() - 2.0 * s * s) * x - h * s * xc - 2.0 * s * t * m2 - s * t * x * x
        + (s * s - t * t) * x * m2
        + h.conj() * s * x * x * x
        + s * t * x * x * m2
}

/// Raw rays `[[a₁, b₁], [a₂, b₂], [a₃, b₃]]` of the identical-settings test.
pub fn symmetric_raw_rays(canon: &SymmetricCanon, x: Complex) -> Result<[[Vec<Complex>; 2]; 3]> {
    let d = canon.d(x)?;
    let j = j_matrix();
    let xv = Vector2::new(ONE, x);
    let b1 = j * d * d.adjoint() * xv.conjugate();
    let b3 = (d.transpose() * xv).conjugate();
    let a3 = j * d.transpose() * d.conjugate() * d.transpose() * xv;
    let v = |w: Vector2<Complex>| vec![w[0], w[1]];
    Ok([[v(xv), v(b1)], [v(xv), v(b1)], [v(a3), v(b3)]])
}

/// Canonical-frame settings of the identical-settings test.
pub fn symmetric_settings(canon: &SymmetricCanon, x: Complex) -> Result<HardySettings> {
    let rays = symmetric_raw_rays(canon, x)?;
    let names = [["a1", "b1"], ["a2", "b2"], ["a3", "b3"]];
    let pairs = rays
        .iter()
        .zip(names)
        .map(|([a, b], [na, nb])| {
            if norm(a) < 1e-12 {
                return Err(Error::ZeroRay(na));
            }
            if norm(b) < 1e-12 {
                return Err(Error::ZeroRay(nb));
            }
            MeasurementPair::qubit(a, b)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HardySettings::external(pairs))
}

/// Zero set of the identical-settings test: the first four words of the
/// six-condition test plus `b̄₁a₂a₃`.
pub const SYMMETRIC_ZERO_WORDS: [[(Setting, u8); 3]; 5] = [
    ZERO_WORDS[0],
    ZERO_WORDS[1],
    ZERO_WORDS[2],
    ZERO_WORDS[3],
    [(Setting::B, 1), (Setting::A, 0), (Setting::A, 0)],
];
pub const SYMMETRIC_ZERO_LABELS: [&str; 5] = ["a1 a2 ~b3", "a1 ~b2 a3", "a1 b2 b3", "b1 a2 b3", "~b1 a2 a3"];

pub fn evaluate_chenq_conditions(
    state: &PureState,
    settings: &HardySettings,
    tol: Tolerances,
) -> Result<ConditionReport> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "symmetric test needs 3 parties, got {}",
            state.n_parties()
        )));
    }
    let (state, pairs) = restrict_to_measurement_subspaces(state, &settings.pairs)?;
    let p_pos = word_probability(&state, &pairs, &crate::hardy3::POSITIVE_WORD)?;
    let mut zeros = [0.0; 5];
    for (slot, word) in zeros.iter_mut().zip(&SYMMETRIC_ZERO_WORDS) {
        *slot = word_probability(&state, &pairs, word)?;
    }
    Ok(ConditionReport::new(p_pos, zeros, tol))
}

pub const GRID_SIZE: usize = 32;
pub const GRID_RANGE: (f64, f64) = (0.05, 20.0);

/// Seeded log-uniform moduli for `|x|`.
pub fn modulus_grid(seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    let (lo, hi) = (GRID_RANGE.0.ln(), GRID_RANGE.1.ln());
    (0..GRID_SIZE).map(|_| rng.random_range(lo..hi).exp()).collect()
}

/// Phase of `x` avoiding `2γ ∈ {β, β+π}` with maximal margin, `β = arg h`.
pub fn default_phase(canon: &SymmetricCanon) -> f64 {
    canon.h.arg() / 2.0 + std::f64::consts::FRAC_PI_4
}

/// Canonical-frame identical-settings test with the largest passing
/// positivity over the modulus grid.
pub fn construct_symmetric_test(
    canon: &SymmetricCanon,
    tol: Tolerances,
    seed: u64,
) -> Result<(HardySettings, ConditionReport, Complex)> {
    let state = canon.state()?;
    is_fully_entangled(&state, FULL_RANK_TOL)?;
    let gamma = default_phase(canon);
    let best = modulus_grid(seed)
        .into_par_iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let x = Complex::from_polar(m, gamma);
            let settings = symmetric_settings(canon, x).ok()?;
            let report = evaluate_chenq_conditions(&state, &settings, tol).ok()?;
            Some((i, x, settings, report))
        })
        .reduce_with(|a, b| {
            let key = |c: &(usize, Complex, HardySettings, ConditionReport)| (c.3.passed, c.3.p_pos);
            match key(&a).partial_cmp(&key(&b)) {
                Some(std::cmp::Ordering::Less) => b,
                Some(std::cmp::Ordering::Equal) if b.0 < a.0 => b,
                _ => a,
            }
        });
    match best {
        Some((_, x, settings, report)) if report.passed => Ok((settings, report, x)),
        other => Err(Error::ConstructionFailed {
            best_p_pos: other.map_or(0.0, |c| c.3.p_pos),
        }),
    }
}

/// Identical-settings test for a symmetric canonical form, pulled back to the
/// original frame.
pub fn construct_symmetric_for(
    canon: &CanonicalForm,
    tol: Tolerances,
    seed: u64,
) -> Result<(HardySettings, ConditionReport, Complex)> {
    let sym = SymmetricCanon::from_canonical(canon)?;
    let (settings, report, x) = construct_symmetric_test(&sym, tol, seed)?;
    let pairs = canon.pull_back(&settings.pairs)?;
    Ok((HardySettings::external(pairs), report, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy3::{construct_test, default_z_candidates};
    use crate::sample::{complex_normal, random_unitary};
    use crate::tensor::{local_basis_change, raw_overlap};

    fn sample() -> SymmetricCanon {
        SymmetricCanon::new(Complex::from_polar(0.5, 0.7), 0.4, 0.3).unwrap()
    }

    #[test]
    fn r_expansion_matches_matrices() {
        let k = sample();
        let mut rng = seeded(1);
        for _ in 0..50 {
            let x = complex_normal(&mut rng) * 2.0;
            let (a, b) = (r_direct(&k, x).unwrap(), r_polynomial(&k, x));
            assert!((a - b).norm() < 1e-12 * a.norm().max(1.0), "{a} {b}");
        }
    }

    #[test]
    fn linear_term_by_finite_difference() {
        let k = sample();
        let g = default_phase(&k);
        let eps = 1e-7;
        let x = Complex::from_polar(eps, g);
        let numeric = r_direct(&k, x).unwrap() / eps;
        let linear = ((k.h.norm_sqr() - 2.0 * k.s * k.s) * x - k.h * k.s * x.conj()) / eps;
        assert!((numeric - linear).norm() < 1e-6);
    }

    #[test]
    fn success_amplitude_is_r_times_det() {
        let k = sample();
        let psi = k.state().unwrap();
        let mut rng = seeded(2);
        for _ in 0..20 {
            let x = complex_normal(&mut rng);
            let rays = symmetric_raw_rays(&k, x).unwrap();
            let amp = raw_overlap(&psi, &[&rays[0][0], &rays[1][0], &rays[2][0]]).unwrap();
            let expected = -r_direct(&k, x).unwrap() * k.d(x).unwrap().determinant();
            assert!((amp - expected).norm() < 1e-12 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn first_conditions_hold_for_any_x() {
        let k = sample();
        let psi = k.state().unwrap();
        let mut rng = seeded(3);
        for _ in 0..20 {
            let x = complex_normal(&mut rng);
            let r =
                evaluate_chenq_conditions(&psi, &symmetric_settings(&k, x).unwrap(), Tolerances::default()).unwrap();
            assert!(r.zeros[..3].iter().all(|&z| z < 1e-10), "{:?}", r.zeros);
        }
    }

    #[test]
    fn swap_of_first_two_parties_is_invariant() {
        let k = sample();
        let psi = k.state().unwrap();
        let settings = symmetric_settings(&k, Complex::new(0.8, 0.3)).unwrap();
        let swapped_state = psi.permute_parties(&[1, 0, 2]).unwrap();
        let mut swapped = settings.clone();
        swapped.pairs.swap(0, 1);
        let a = evaluate_chenq_conditions(&psi, &settings, Tolerances::default()).unwrap();
        let b = evaluate_chenq_conditions(&swapped_state, &swapped, Tolerances::default()).unwrap();
        assert!((a.p_pos - b.p_pos).abs() < 1e-14);
        for (x, y) in a.zeros.iter().zip(&b.zeros) {
            assert!((x - y).abs() < 1e-14);
        }
        // a₁b̄₂a₃ and b̄₁a₂a₃ are mirror images
        assert!((a.zeros[1] - a.zeros[4]).abs() < 1e-12);
    }

    #[test]
    fn ghz_passes() {
        let k = SymmetricCanon::new(Complex::from(1.0), 0.0, 1.0).unwrap();
        let (_, report, _) = construct_symmetric_test(&k, Tolerances::default(), 0).unwrap();
        assert!(report.passed && report.p_pos > 0.0);
    }

    #[test]
    fn failing_family_passes_here() {
        let th = std::f64::consts::FRAC_PI_3;
        let k = SymmetricCanon::new(Complex::from(th.sin() / 2.0), th.sin() / 2.0, th.cos()).unwrap();
        let (_, report, _) = construct_symmetric_test(&k, Tolerances::default(), 0).unwrap();
        assert!(report.passed);
        let canon = k.as_canonical().unwrap();
        let six = construct_test(&canon, &default_z_candidates(0), Tolerances::default(), 0);
        assert!(matches!(six, Err(Error::ConstructionFailed { .. })));
    }

    #[test]
    fn separable_rejected() {
        let k = SymmetricCanon::new(Complex::from(1.0), 0.0, 0.0).unwrap();
        assert!(matches!(
            construct_symmetric_test(&k, Tolerances::default(), 0),
            Err(Error::NotFullyEntangled { .. })
        ));
    }

    #[test]
    fn random_settings_fail_on_ghz() {
        let psi = SymmetricCanon::new(Complex::from(1.0), 0.0, 1.0)
            .unwrap()
            .state()
            .unwrap();
        let mut rng = seeded(4);
        for _ in 0..20 {
            let pairs = crate::hardy3::random_qubit_settings(&mut rng, 3);
            let r = evaluate_chenq_conditions(&psi, &HardySettings::external(pairs), Tolerances::default()).unwrap();
            assert!(!r.passed);
        }
    }

    #[test]
    fn pull_back_through_local_unitaries() {
        let k = sample();
        let mut rng = seeded(5);
        let us: Vec<_> = (0..3).map(|_| random_unitary(&mut rng, 2)).collect();
        let moved = local_basis_change(&k.state().unwrap(), &us).unwrap();
        let canon = crate::magic::canonicalize(&moved, &Default::default()).unwrap();
        assert!(crate::magic::classify(&canon, 1e-9).is_symmetric());
        let (settings, _, _) = construct_symmetric_for(&canon, Tolerances::default(), 0).unwrap();
        let report = evaluate_chenq_conditions(&moved, &settings, Tolerances::default()).unwrap();
        assert!(report.passed, "{report:?}");
    }
}
