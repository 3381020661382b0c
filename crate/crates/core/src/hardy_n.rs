//! Recursive n-party Hardy condition sets.
//!
//! `H₂ = {ab̄, b̄a, bb}` and `Hₙ = {a·Hₙ₋₁, b aⁿ⁻² b, b̄ aⁿ⁻³ b̄ b}`; the test asks
//! `P(aⁿ) > 0` together with `P(w) = 0` for every `w ∈ Hₙ`.

use std::fmt;

use crate::error::{Error, Result};
use crate::hardy3::Tolerances;
use crate::tensor::{joint_probability, MeasurementPair, PureState, Setting};

/// One party's observable and outcome: plain letters mean outcome 0, barred
/// letters outcome 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    ABar,
    B,
    BBar,
}

impl Letter {
    pub fn setting(self) -> Setting {
        match self {
            Letter::A | Letter::ABar => Setting::A,
            Letter::B | Letter::BBar => Setting::B,
        }
    }

    pub fn outcome(self) -> u8 {
        match self {
            Letter::A | Letter::B => 0,
            Letter::ABar | Letter::BBar => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Letter::A => Letter::ABar,
            Letter::ABar => Letter::A,
            Letter::B => Letter::BBar,
            Letter::BBar => Letter::B,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConditionWord(pub Vec<Letter>);

impl ConditionWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn to_pairs(&self) -> Vec<(Setting, u8)> {
        self.0.iter().map(|l| (l.setting(), l.outcome())).collect()
    }

    /// Parses `a`, `b`, with `~` before a letter for the barred outcome.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut bar = false;
        for ch in text.chars().filter(|c| !c.is_whitespace()) {
            match (ch, bar) {
                ('~', false) => bar = true,
                ('a', b) => {
                    out.push(if b { Letter::ABar } else { Letter::A });
                    bar = false;
                }
                ('b', b) => {
                    out.push(if b { Letter::BBar } else { Letter::B });
                    bar = false;
                }
                _ => return Err(Error::InvalidArgument(format!("bad condition word {text:?}"))),
            }
        }
        if bar {
            return Err(Error::InvalidArgument(format!("dangling bar in {text:?}")));
        }
        Ok(Self(out))
    }
}

impl fmt::Display for ConditionWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            f.write_str(match l {
                Letter::A => "a",
                Letter::ABar => "~a",
                Letter::B => "b",
                Letter::BBar => "~b",
            })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardySetN {
    pub n: usize,
    pub positivity: ConditionWord,
    pub zeros: Vec<ConditionWord>,
}

/// `Hₙ` in recursion order: prefix-extended words first, then the two new ones.
pub fn hardy_set(n: usize) -> Result<HardySetN> {
    use Letter::*;
    if n < 2 {
        return Err(Error::BadArity(n));
    }
    let mut zeros = vec![
        ConditionWord(vec![A, BBar]),
        ConditionWord(vec![BBar, A]),
        ConditionWord(vec![B, B]),
    ];
    for m in 3..=n {
        let mut next: Vec<ConditionWord> = zeros
            .into_iter()
            .map(|w| ConditionWord(std::iter::once(A).chain(w.0).collect()))
            .collect();
        let mut w1 = vec![B];
        w1.extend(std::iter::repeat_n(A, m - 2));
        w1.push(B);
        let mut w2 = vec![BBar];
        w2.extend(std::iter::repeat_n(A, m - 3));
        w2.extend([BBar, B]);
        next.push(ConditionWord(w1));
        next.push(ConditionWord(w2));
        zeros = next;
    }
    Ok(HardySetN {
        n,
        positivity: ConditionWord(vec![A; n]),
        zeros,
    })
}

pub fn evaluate_word(state: &PureState, settings: &[MeasurementPair], word: &ConditionWord) -> Result<f64> {
    if word.len() != state.n_parties() {
        return Err(Error::DimensionMismatch(format!(
            "word of length {} for {} parties",
            word.len(),
            state.n_parties()
        )));
    }
    let (choice, outcome): (Vec<Setting>, Vec<u8>) = word.to_pairs().into_iter().unzip();
    joint_probability(state, settings, &choice, &outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyNReport {
    pub p_pos: f64,
    /// One entry per word of [`HardySetN::zeros`], same order.
    pub zeros: Vec<f64>,
    pub passed: bool,
    pub tol: Tolerances,
}

impl HardyNReport {
    pub fn max_zero(&self) -> f64 {
        self.zeros.iter().copied().fold(0.0, f64::max)
    }
}

pub fn evaluate_hardy_n(state: &PureState, settings: &[MeasurementPair], tol: Tolerances) -> Result<HardyNReport> {
    let set = hardy_set(state.n_parties())?;
    let p_pos = evaluate_word(state, settings, &set.positivity)?;
    let zeros = set
        .zeros
        .iter()
        .map(|w| evaluate_word(state, settings, w))
        .collect::<Result<Vec<_>>>()?;
    let passed = p_pos > tol.pos && zeros.iter().all(|&z| z < tol.zero);
    Ok(HardyNReport {
        p_pos,
        zeros,
        passed,
        tol,
    })
}
