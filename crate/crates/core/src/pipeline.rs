//! End-to-end certification of a tripartite pure state.
//!
//! magic basis → qubit reduction (if needed) → canonical form → classify →
//! build a Hardy test → evaluate it on the input state → bi-local LP.

use crate::bilocal::{check_bilocal, BilocalCertificate, LP_TOL};
use crate::error::{Error, Result};
use crate::hardy3::{
    construct_test, default_z_candidates, evaluate_conditions, ConditionReport, HardySettings, Tolerances,
};
use crate::hardy3_sym::{construct_symmetric_for, evaluate_chenq_conditions};
use crate::magic::{
    canonical_form_3qubit, classify, magic_frame, single_excitation_residual, CanonicalForm, ClosestProductOptions,
    StateClass, CLASSIFY_TOL, FULL_RANK_TOL,
};
use crate::qudit::{reduce_to_3qubit, SubspaceRecord, REDUCE_TOL};
use crate::tensor::{
    correlation_table, is_fully_entangled, restrict_to_measurement_subspaces, CorrelationTable, MeasurementPair,
    PureState,
};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    pub closest: ClosestProductOptions,
    pub tol: Tolerances,
    pub lp_tol: f64,
    pub classify_tol: f64,
    pub seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            closest: ClosestProductOptions::default(),
            tol: Tolerances::default(),
            lp_tol: LP_TOL,
            classify_tol: CLASSIFY_TOL,
            seed: 0,
        }
    }
}

impl PipelineOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            closest: ClosestProductOptions {
                seed,
                ..Default::default()
            },
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestKind {
    /// Six conditions, zero set `{a₁a₂b̄₃, a₁b̄₂a₃, a₁b₂b₃, b₁a₂b₃, b̄₁b̄₂b₃}`.
    SixCondition,
    /// Identical settings on the first two qubits, last zero `b̄₁a₂a₃`.
    Symmetric,
}

/// Canonical form of any fully entangled tripartite state, reducing qudits to
/// qubits first. The frame maps canonical qubits into the original spaces.
pub fn canonical_form(
    state: &PureState,
    opts: &ClosestProductOptions,
) -> Result<(CanonicalForm, Option<SubspaceRecord>)> {
    if state.n_parties() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "need 3 parties, got {}",
            state.n_parties()
        )));
    }
    is_fully_entangled(state, FULL_RANK_TOL)?;
    let (magic, transform) = magic_frame(state, opts)?;
    if state.dims().iter().all(|&d| d == 2) {
        return Ok((canonical_form_3qubit(&magic, &transform)?, None));
    }
    let (reduced, record) = reduce_to_3qubit(&magic, REDUCE_TOL)?;
    let lifted = record.lift(&transform, single_excitation_residual(&reduced));
    Ok((canonical_form_3qubit(&reduced, &lifted)?, Some(record)))
}

/// Full correlation table; qudit settings act on the state filtered onto
/// their measurement planes.
pub fn settings_table(state: &PureState, settings: &[MeasurementPair]) -> Result<CorrelationTable> {
    let (state, pairs) = restrict_to_measurement_subspaces(state, settings)?;
    correlation_table(&state, &pairs)
}

pub fn evaluate(
    state: &PureState,
    settings: &HardySettings,
    kind: TestKind,
    tol: Tolerances,
) -> Result<ConditionReport> {
    match kind {
        TestKind::SixCondition => evaluate_conditions(state, settings, tol),
        TestKind::Symmetric => evaluate_chenq_conditions(state, settings, tol),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub canon: CanonicalForm,
    pub class: StateClass,
    pub reduction: Option<SubspaceRecord>,
    pub kind: TestKind,
    pub settings: HardySettings,
    /// Conditions evaluated on the input state with the pulled-back settings.
    pub report: ConditionReport,
    pub table: CorrelationTable,
    pub lp: BilocalCertificate,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.report.passed && self.lp.is_infeasible()
    }
}

/// Builds a test for `canon` routed by its class. Symmetric states whose
/// six-condition construction fails fall back to the identical-settings test.
pub fn construct_for(
    canon: &CanonicalForm,
    class: StateClass,
    opts: &PipelineOptions,
) -> Result<(TestKind, HardySettings)> {
    let six = || construct_test(canon, &default_z_candidates(opts.seed), opts.tol, opts.seed);
    match class {
        StateClass::Asymmetric => Ok((TestKind::SixCondition, six()?.0)),
        StateClass::SymmetricPassing => match six() {
            Ok((s, _)) => Ok((TestKind::SixCondition, s)),
            Err(Error::ConstructionFailed { .. }) => Ok((
                TestKind::Symmetric,
                construct_symmetric_for(canon, opts.tol, opts.seed)?.0,
            )),
            Err(e) => Err(e),
        },
        StateClass::SymmetricFailing(_) => Ok((
            TestKind::Symmetric,
            construct_symmetric_for(canon, opts.tol, opts.seed)?.0,
        )),
    }
}

pub fn certify(state: &PureState, opts: &PipelineOptions) -> Result<Certification> {
    let (canon, reduction) = canonical_form(state, &opts.closest)?;
    let class = classify(&canon, opts.classify_tol);
    let (kind, settings) = construct_for(&canon, class, opts)?;
    let report = evaluate(state, &settings, kind, opts.tol)?;
    let table = settings_table(state, &settings.pairs)?;
    let lp = check_bilocal(&table, opts.lp_tol)?;
    Ok(Certification {
        canon,
        class,
        reduction,
        kind,
        settings,
        report,
        table,
        lp,
    })
}
