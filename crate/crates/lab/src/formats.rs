//! On-disk formats: JSON matrices, operator pairs and paths; versioned CSV
//! tables.

use std::path::Path;

use serde::{Deserialize, Serialize};
use witten_core::determinants::{LogDetBranch, OperatorPair};
use witten_core::model::OperatorPath;
use witten_core::operator::HermitianOperator;
use witten_core::ssf::{Normalization, SsfCurve};
use witten_core::{CMat, C64};

use crate::error::{LabError, Result};

/// First line of every CSV file written by this crate.
pub const CSV_VERSION_LINE: &str = "# witten-index-lab v1";

/// `{"dim": n, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFile {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &CMat) -> Self {
        let row = |i: usize, f: fn(&C64) -> f64| m.row(i).iter().map(f).collect();
        Self {
            dim: m.rows(),
            re: (0..m.rows()).map(|i| row(i, |z| z.re)).collect(),
            im: Some((0..m.rows()).map(|i| row(i, |z| z.im)).collect()),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.dim;
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !shape_ok(&self.re) || !self.im.as_ref().is_none_or(shape_ok) {
            return Err(LabError::Config(format!("matrix entries do not form a {n}×{n} array")));
        }
        let im = |i: usize, j: usize| self.im.as_ref().map_or(0.0, |m| m[i][j]);
        Ok(CMat::from_fn(n, n, |i, j| C64::new(self.re[i][j], im(i, j))))
    }

    pub fn to_hermitian(&self) -> Result<HermitianOperator> {
        Ok(HermitianOperator::new(self.to_matrix()?)?)
    }
}

/// `{"base": matrix, "perturbation": matrix}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub base: MatrixFile,
    pub perturbation: MatrixFile,
}

impl PairFile {
    pub fn to_pair(&self) -> Result<OperatorPair> {
        Ok(OperatorPair::new(self.base.to_hermitian()?, self.perturbation.to_hermitian()?)?)
    }
}

/// `{"t": [...], "a_minus": matrix, "b": [matrix...], "b_prime": [matrix...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub t: Vec<f64>,
    pub a_minus: MatrixFile,
    pub b: Vec<MatrixFile>,
    pub b_prime: Vec<MatrixFile>,
}

impl PathFile {
    pub fn from_path(path: &OperatorPath) -> Self {
        let mats = |ops: &[HermitianOperator]| ops.iter().map(|h| MatrixFile::from_matrix(h.matrix())).collect();
        Self {
            t: path.t_grid().to_vec(),
            a_minus: MatrixFile::from_matrix(path.a_minus().matrix()),
            b: mats(path.b_samples()),
            b_prime: mats(path.b_prime_samples()),
        }
    }

    pub fn to_path(&self) -> Result<OperatorPath> {
        let ops = |ms: &[MatrixFile]| ms.iter().map(MatrixFile::to_hermitian).collect::<Result<Vec<_>>>();
        Ok(OperatorPath::new(self.t.clone(), self.a_minus.to_hermitian()?, ops(&self.b)?, ops(&self.b_prime)?)?)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| LabError::Json { path: path.to_path_buf(), source })
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8");
    format!("{CSV_VERSION_LINE}\n{body}")
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Columns `x,xi,normalization`.
pub fn ssf_csv(curve: &SsfCurve) -> String {
    let tag = curve.normalization().as_str();
    csv_text(
        &["x", "xi", "normalization"],
        curve.grid().iter().zip(curve.values()).map(|(x, v)| vec![num(*x), num(*v), tag.to_string()]),
    )
}

/// Columns `parameter,re,im_unwound`.
pub fn branch_csv(branch: &LogDetBranch) -> String {
    csv_text(
        &["parameter", "re", "im_unwound"],
        branch.parameters.iter().zip(&branch.values).map(|(p, v)| vec![num(*p), num(v.re), num(v.im)]),
    )
}

/// A table keyed by the cutoff `n`, e.g. `n,distance_B1,distance_wL1`.
pub fn cutoff_table_csv(header: &[&str], rows: &[(u32, Vec<f64>)]) -> String {
    csv_text(header, rows.iter().map(|(n, r)| core::iter::once(n.to_string()).chain(r.iter().map(|x| num(*x))).collect()))
}

/// Reads an `x,xi,normalization` file. Comment lines start with `#`.
pub fn read_ssf_csv(path: &Path) -> Result<SsfCurve> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
    parse_ssf_csv(&text).map_err(|message| LabError::Csv { path: path.to_path_buf(), message })
}

pub fn parse_ssf_csv(text: &str) -> std::result::Result<SsfCurve, String> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().collect::<Vec<_>>() != ["x", "xi", "normalization"] {
        return Err(format!("expected header x,xi,normalization, found {}", header.iter().collect::<Vec<_>>().join(",")));
    }
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    let mut norm = None;
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let field = |k: usize| -> std::result::Result<f64, String> {
            record[k].parse::<f64>().map_err(|_| format!("row {}: '{}' is not a number", line + 1, &record[k]))
        };
        grid.push(field(0)?);
        values.push(field(1)?);
        let tag = Normalization::parse(&record[2]).ok_or_else(|| format!("unknown normalization '{}'", &record[2]))?;
        if norm.is_some_and(|n| n != tag) {
            return Err("mixed normalizations in one file".into());
        }
        norm = Some(tag);
    }
    let norm = norm.ok_or("no data rows")?;
    SsfCurve::sampled(grid, values, norm).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let m = CMat::from_fn(3, 3, |i, j| C64::new(i as f64 + 0.5 * j as f64, i as f64 - j as f64));
        let back = MatrixFile::from_matrix(&m).to_matrix().unwrap();
        assert_eq!(back, m);
        let bad = MatrixFile { dim: 2, re: vec![vec![1.0, 2.0]], im: None };
        assert!(bad.to_matrix().is_err());
    }

    #[test]
    fn ssf_csv_round_trip() {
        let c = SsfCurve::sampled(vec![-1.0, 0.0, 0.1], vec![0.0, 1.0, 0.25], Normalization::Cayley).unwrap();
        let text = ssf_csv(&c);
        assert!(text.starts_with(CSV_VERSION_LINE));
        let back = parse_ssf_csv(&text).unwrap();
        assert_eq!(back.grid(), c.grid());
        assert_eq!(back.values(), c.values());
        assert_eq!(back.normalization(), Normalization::Cayley);
        assert!(parse_ssf_csv("a,b\n1,2\n").is_err());
    }
}
