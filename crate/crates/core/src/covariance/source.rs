use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{CovarianceSpec, DecayLaw};
use crate::error::{LabError, Result};

/// How a covariance is written in an experiment config.
///
/// ```toml
/// [covariance]
/// type = "polynomial"   # q_k = c k^-beta on K modes
/// c = 1.0
/// beta = 4.0
/// k = 256
/// ```
///
/// Other forms: `type = "exponential"` (`c`, `rho`, `k`), `type = "diagonal"`
/// (`q = [...]`), `type = "matrix"` (`rows = [[...], ...]`) and
/// `type = "matrix_csv"` (`path`, resolved against the config directory).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceSource {
    Polynomial { c: f64, beta: f64, k: usize },
    Exponential { c: f64, rho: f64, k: usize },
    Diagonal { q: Vec<f64> },
    Matrix { rows: Vec<Vec<f64>> },
    MatrixCsv { path: String },
}

impl CovarianceSource {
    pub fn decay_law(&self) -> Option<DecayLaw> {
        match *self {
            CovarianceSource::Polynomial { c, beta, k } => Some(DecayLaw::Polynomial { c, beta, k }),
            CovarianceSource::Exponential { c, rho, k } => Some(DecayLaw::Exponential { c, rho, k }),
            _ => None,
        }
    }

    /// Materializes the covariance; relative CSV paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<CovarianceSpec> {
        if let Some(law) = self.decay_law() {
            return law.materialize();
        }
        match self {
            CovarianceSource::Diagonal { q } => CovarianceSpec::diagonal(q.clone()),
            CovarianceSource::Matrix { rows } => CovarianceSpec::dense(rows_to_matrix(rows)?),
            CovarianceSource::MatrixCsv { path } => {
                let full = base.join(path);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    LabError::Config(format!("cannot read {}: {e}", full.display()))
                })?;
                CovarianceSpec::dense(parse_matrix_csv(&text)?)
            }
            _ => unreachable!(),
        }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(LabError::Config("covariance matrix must be square and non-empty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Comma-separated rows; blank lines and `#` comments are skipped.
pub(crate) fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    LabError::Config(format!("matrix csv line {}: {e}", ln + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    rows_to_matrix(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_toml_forms() {
        let src: CovarianceSource = toml::from_str("type = \"polynomial\"\nc = 1.0\nbeta = 4.0\nk = 8").unwrap();
        let q = src.build(Path::new(".")).unwrap();
        assert_eq!(q.k(), 8);
        assert!((q.diag().unwrap()[1] - 1.0 / 16.0).abs() < 1e-15);

        let src: CovarianceSource =
            toml::from_str("type = \"matrix\"\nrows = [[2.0, 1.0], [1.0, 2.0]]").unwrap();
        assert!(!src.build(Path::new(".")).unwrap().is_diagonal());

        let bad = toml::from_str::<CovarianceSource>("type = \"diagonal\"\nq = [1.0]\nextra = 1");
        assert!(bad.is_err());
    }

    #[test]
    fn csv_matrix() {
        let m = parse_matrix_csv("# Q\n1.0, 0.5\n0.5, 1.0\n").unwrap();
        assert_eq!(m[(0, 1)], 0.5);
        assert!(parse_matrix_csv("1,2,3\n4,5\n").is_err());
    }
}
