//! Text formats for states and settings.
//!
//! State file:
//! ```text
//! dims 2 2 2
//! # i1 i2 i3 re im
//! 0 0 0 1 0
//! 1 1 1 1 0
//! ```
//!
//! Settings file, one ray per line as `party obs re im re im ...` with
//! 1-based parties and `obs` in `{a, b}`. One line gives a qubit observable
//! by its outcome-0 ray; two lines for the same observable give the outcome-0
//! ray and a second ray spanning the measurement plane.

use std::fmt::Write as _;

use hardy_core::tensor::{Complex, MeasurementPair, Observable, PureState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line == 0 {
            write!(f, "{}", self.message)
        } else {
            write!(f, "line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ParseError {}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

/// Non-empty, comment-stripped lines with their 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, ParseError> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("bad number {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(err(line, format!("non-finite number {tok:?}")))
    }
}

/// Parses a state file; amplitudes are normalized on load.
pub fn parse_state(text: &str) -> Result<PureState, Box<dyn std::error::Error>> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| err(0, "empty state file"))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("dims") {
        return Err(err(hl, "first line must be `dims d1 d2 ...`").into());
    }
    let dims: Vec<usize> = toks
        .map(|t| t.parse::<usize>().map_err(|_| err(hl, format!("bad dimension {t:?}"))))
        .collect::<Result<_, _>>()?;
    if dims.is_empty() {
        return Err(err(hl, "no dimensions given").into());
    }
    let len: usize = dims.iter().product();
    let mut amps = vec![Complex::new(0.0, 0.0); len];
    let mut seen = vec![false; len];
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != dims.len() + 2 {
            return Err(err(ln, format!("expected {} indices and re im", dims.len())).into());
        }
        let mut flat = 0;
        for (k, (tok, &d)) in toks.iter().zip(&dims).enumerate() {
            let i: usize = tok.parse().map_err(|_| err(ln, format!("bad index {tok:?}")))?;
            if i >= d {
                return Err(err(
                    ln,
                    format!("index {i} out of range for party {} of dimension {d}", k + 1),
                )
                .into());
            }
            flat = flat * d + i;
        }
        if std::mem::replace(&mut seen[flat], true) {
            return Err(err(ln, "duplicate basis index").into());
        }
        let n = dims.len();
        amps[flat] = Complex::new(parse_f64(toks[n], ln)?, parse_f64(toks[n + 1], ln)?);
    }
    Ok(PureState::new(dims, amps)?)
}

/// Parses a settings file against the party dimensions.
pub fn parse_settings(text: &str, dims: &[usize]) -> Result<Vec<MeasurementPair>, Box<dyn std::error::Error>> {
    let mut rays: Vec<[Vec<Vec<Complex>>; 2]> = vec![[Vec::new(), Vec::new()]; dims.len()];
    for (ln, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() < 2 {
            return Err(err(ln, "expected `party obs re im ...`").into());
        }
        let party: usize = toks[0]
            .parse()
            .map_err(|_| err(ln, format!("bad party {:?}", toks[0])))?;
        if party == 0 || party > dims.len() {
            return Err(err(ln, format!("party {party} outside 1..={}", dims.len())).into());
        }
        let obs = match toks[1] {
            "a" | "A" => 0,
            "b" | "B" => 1,
            other => return Err(err(ln, format!("observable must be a or b, got {other:?}")).into()),
        };
        let d = dims[party - 1];
        let nums = &toks[2..];
        if nums.len() != 2 * d {
            return Err(err(
                ln,
                format!("party {party} has dimension {d}: expected {} numbers", 2 * d),
            )
            .into());
        }
        let ray = nums
            .chunks(2)
            .map(|c| Ok(Complex::new(parse_f64(c[0], ln)?, parse_f64(c[1], ln)?)))
            .collect::<Result<Vec<_>, ParseError>>()?;
        let slot = &mut rays[party - 1][obs];
        if slot.len() == 2 {
            return Err(err(
                ln,
                format!("more than two rays for party {party} observable {}", toks[1]),
            )
            .into());
        }
        slot.push(ray);
    }
    rays.into_iter()
        .enumerate()
        .map(|(k, [a, b])| {
            let obs = |r: &[Vec<Complex>], name: &str| -> Result<Observable, Box<dyn std::error::Error>> {
                match r {
                    [zero] if zero.len() == 2 => Ok(Observable::qubit(zero)?),
                    [_] => Err(err(0, format!("party {} observable {name}: qudit needs two rays", k + 1)).into()),
                    [zero, span] => Ok(Observable::in_subspace(zero, span)?),
                    _ => Err(err(0, format!("party {} observable {name} missing", k + 1)).into()),
                }
            };
            Ok(MeasurementPair::new(obs(&a, "a")?, obs(&b, "b")?)?)
        })
        .collect()
}

/// `x` with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..6).contains(&mag) {
        format!("{:.*}", (16 - mag) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

/// Settings in the settings-file format; qubit observables as one line,
/// qudit observables as both rays.
pub fn format_settings(pairs: &[MeasurementPair]) -> String {
    let mut out = String::new();
    for (k, pair) in pairs.iter().enumerate() {
        for (name, o) in [("a", &pair.a), ("b", &pair.b)] {
            let rays: &[u8] = if o.dim() == 2 { &[0] } else { &[0, 1] };
            for &r in rays {
                let _ = write!(out, "{} {}", k + 1, name);
                for c in o.ray(r) {
                    let _ = write!(out, " {} {}", fmt17(c.re), fmt17(c.im));
                }
                out.push('\n');
            }
        }
    }
    out
}

/// State in the state-file format, nonzero amplitudes only.
pub fn format_state(state: &PureState) -> String {
    let mut out = String::from("dims");
    for d in state.dims() {
        let _ = write!(out, " {d}");
    }
    out.push('\n');
    let dims = state.dims();
    for (flat, c) in state.amps().iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let mut idx = vec![0; dims.len()];
        let mut rest = flat;
        for (slot, &d) in idx.iter_mut().zip(dims).rev() {
            *slot = rest % d;
            rest /= d;
        }
        for i in idx {
            let _ = write!(out, "{i} ");
        }
        let _ = writeln!(out, "{} {}", fmt17(c.re), fmt17(c.im));
    }
    out
}
