use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use cramer_core::WeightVector;

/// Parses `--weights`: an inline list, or `@path` to a weights file.
pub fn read_weights(spec: &str) -> Result<WeightVector> {
    let values = match spec.strip_prefix('@') {
        Some(path) => {
            let text = std::fs::read_to_string(Path::new(path))
                .with_context(|| format!("cannot read weights file `{path}`"))?;
            parse_weight_text(&text).with_context(|| format!("in weights file `{path}`"))?
        }
        None => parse_weight_text(spec)?,
    };
    if values.is_empty() {
        bail!("no weights given");
    }
    Ok(WeightVector::new(values)?)
}

/// Whitespace, newline or comma separated reals; `#` starts a comment.
pub fn parse_weight_text(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or(""))
        .flat_map(|line| line.split(|c: char| c.is_whitespace() || c == ','))
        .filter(|tok| !tok.is_empty())
        .map(|tok| {
            let v: f64 = tok
                .parse()
                .with_context(|| format!("invalid weight `{tok}`"))?;
            if !v.is_finite() {
                bail!("weight `{tok}` is not finite");
            }
            Ok(v)
        })
        .collect()
}

/// `count,coverage`: `count` odd points spanning `coverage` of the open domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub count: usize,
    pub coverage: f64,
}

impl GridSpec {
    pub const DEFAULT: GridSpec = GridSpec {
        count: 41,
        coverage: 0.98,
    };

    /// Symmetric grid on `[-c ‖t‖₁, c ‖t‖₁]`; the middle point is exactly 0.
    pub fn points(&self, t: &WeightVector) -> Vec<f64> {
        let half = self.coverage * t.l1_norm();
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| half * (((2 * k) as f64 - m) / m))
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (count, coverage) = s
            .split_once(',')
            .ok_or_else(|| format!("expected COUNT,COVERAGE, got `{s}`"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|e| format!("grid count: {e}"))?;
        let coverage: f64 = coverage
            .trim()
            .parse()
            .map_err(|e| format!("grid coverage: {e}"))?;
        if count < 3 || count.is_multiple_of(2) {
            return Err(format!(
                "grid count must be odd and at least 3, got {count}"
            ));
        }
        if !(coverage > 0.0 && coverage < 1.0) {
            return Err(format!("grid coverage must lie in (0, 1), got {coverage}"));
        }
        Ok(GridSpec { count, coverage })
    }
}

/// Explicit alphas alone when given without a grid; otherwise the grid
/// (default if unset) plus any explicit values. Sorted, duplicates removed.
pub fn alphas(
    t: &WeightVector,
    grid: Option<GridSpec>,
    explicit: &[f64],
    default: GridSpec,
) -> Result<Vec<f64>> {
    if let Some(a) = explicit.iter().find(|a| !a.is_finite()) {
        bail!("alpha {a} is not finite");
    }
    let mut out = explicit.to_vec();
    if grid.is_some() || explicit.is_empty() {
        out.extend(grid.unwrap_or(default).points(t));
    }
    // Fold -0 into 0.
    out.iter_mut().for_each(|a| *a += 0.0);
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Parses a comma-separated list of positive integers.
pub fn parse_schedule(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|tok| match tok.trim().parse::<usize>() {
            Ok(0) => Err("schedule entries must be at least 1".to_string()),
            Ok(n) => Ok(n),
            Err(e) => Err(format!("schedule entry `{tok}`: {e}")),
        })
        .collect()
}
