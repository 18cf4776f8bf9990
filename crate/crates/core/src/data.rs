//! Datasets, centering/scaling, and CSV input/output.
//!
//! After [`standardize`] the response sums to zero and every design column has
//! zero sum and sum of squares `n` (divisor `n`, not `n − 1`). There is no
//! intercept column; predictions add back the training response mean.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct Dataset<T> {
    pub y: Vec<T>,
    pub x: Matrix<T>,
    pub column_names: Vec<String>,
    pub provenance: String,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(y: Vec<T>, x: Matrix<T>, column_names: Vec<String>, provenance: impl Into<String>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::Data(format!("need at least 2 rows, got {n}")));
        }
        if x.rows() != n {
            return Err(Error::DimensionMismatch(format!("{} design rows for {n} responses", x.rows())));
        }
        if x.cols() == 0 {
            return Err(Error::Data("design matrix has no columns".into()));
        }
        if column_names.len() != x.cols() {
            return Err(Error::DimensionMismatch(format!(
                "{} column names for {} columns",
                column_names.len(),
                x.cols()
            )));
        }
        if y.iter().chain(x.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::Data("non-finite value in dataset".into()));
        }
        Ok(Self {
            y,
            x,
            column_names,
            provenance: provenance.into(),
        })
    }

    /// Columns named `x1, x2, ...`.
    pub fn unnamed(y: Vec<T>, x: Matrix<T>, provenance: impl Into<String>) -> Result<Self> {
        let names = (1..=x.cols()).map(|j| format!("x{j}")).collect();
        Self::new(y, x, names, provenance)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        Self::new(
            idx.iter().map(|&i| self.y[i]).collect(),
            self.x.select_rows(idx),
            self.column_names.clone(),
            self.provenance.clone(),
        )
    }

    /// Reads a CSV with a header row and one column named `y`; the remaining
    /// columns become the design in header order.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let y_col = headers
            .iter()
            .position(|h| h == "y")
            .ok_or_else(|| Error::Data(format!("{}: no column named `y`", path.display())))?;
        let names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != y_col)
            .map(|(_, h)| h.clone())
            .collect();
        let mut y = Vec::new();
        let mut xs = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            // header is line 1
            let line = r + 2;
            let rec = rec.map_err(|e| Error::Data(format!("{}: line {line}: {e}", path.display())))?;
            if rec.len() != headers.len() {
                return Err(Error::Data(format!(
                    "{}: line {line} has {} fields, header has {}",
                    path.display(),
                    rec.len(),
                    headers.len()
                )));
            }
            for (j, field) in rec.iter().enumerate() {
                let v: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| {
                    Error::Data(format!(
                        "{}: row {} column `{}`: `{field}` is not a number",
                        path.display(),
                        r + 1,
                        headers[j]
                    ))
                })?;
                if j == y_col {
                    y.push(T::lit(v));
                } else {
                    xs.push(T::lit(v));
                }
            }
        }
        let n = y.len();
        let x = Matrix::from_row_major(n, names.len(), xs)?;
        Self::new(y, x, names, path.display().to_string())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut header = vec!["y".to_string()];
        header.extend(self.column_names.iter().cloned());
        let rows = (0..self.n()).map(|i| {
            std::iter::once(self.y[i])
                .chain(self.x.row(i).iter().copied())
                .map(fmt_num)
                .collect::<Vec<_>>()
        });
        write_csv_atomic(path.as_ref(), &header, rows)
    }
}

/// Design and response in the form the samplers consume, with the cross
/// products precomputed.
#[derive(Clone, Debug)]
pub struct RegressionData<T> {
    x: Matrix<T>,
    y: Vec<T>,
    xtx: Matrix<T>,
    xty: Vec<T>,
}

impl<T: Scalar> RegressionData<T> {
    pub fn new(x: Matrix<T>, y: Vec<T>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} rows, {} responses", x.rows(), y.len())));
        }
        let xtx = x.gram();
        let xty = x.tr_mul_vec(&y);
        Ok(Self { x, y, xtx, xty })
    }

    /// Same design, new response.
    pub fn with_response(&self, y: Vec<T>) -> Result<Self> {
        if y.len() != self.y.len() {
            return Err(Error::DimensionMismatch("response length changed".into()));
        }
        let xty = self.x.tr_mul_vec(&y);
        Ok(Self {
            x: self.x.clone(),
            y,
            xtx: self.xtx.clone(),
            xty,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix<T> {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn xtx(&self) -> &Matrix<T> {
        &self.xtx
    }

    pub fn xty(&self) -> &[T] {
        &self.xty
    }

    /// `(y − Xβ)ᵀ(y − Xβ)`.
    pub fn residual_ss(&self, beta: &[T]) -> T {
        self.y
            .iter()
            .enumerate()
            .map(|(i, &yi)| {
                let r = yi - dot(self.x.row(i), beta);
                r * r
            })
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct StandardizedDataset<T> {
    data: RegressionData<T>,
    pub y_mean: T,
    pub col_means: Vec<T>,
    pub col_scales: Vec<T>,
    pub column_names: Vec<String>,
}

impl<T: Scalar> StandardizedDataset<T> {
    pub fn data(&self) -> &RegressionData<T> {
        &self.data
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    /// Applies the stored column transform to a raw design row.
    pub fn transform_row(&self, x_raw: &[T]) -> Vec<T> {
        x_raw
            .iter()
            .zip(self.col_means.iter().zip(&self.col_scales))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    /// Prediction on the original response scale from standardized-scale
    /// coefficients.
    pub fn predict(&self, beta_std: &[T], x_raw: &[T]) -> T {
        self.y_mean + dot(&self.transform_row(x_raw), beta_std)
    }

    /// Maps standardized-scale coefficients back to the raw design scale.
    /// Returns the slopes and the implied intercept.
    pub fn to_original_scale(&self, beta_std: &[T]) -> (Vec<T>, T) {
        let slopes: Vec<T> = beta_std.iter().zip(&self.col_scales).map(|(&b, &s)| b / s).collect();
        let intercept = self.y_mean - dot(&slopes, &self.col_means);
        (slopes, intercept)
    }
}

/// Centers the response and scales each column to zero sum and sum of
/// squares `n`.
pub fn standardize<T: Scalar>(ds: &Dataset<T>) -> Result<StandardizedDataset<T>> {
    let n = ds.n();
    let nf = T::lit(n as f64);
    let y_mean = ds.y.iter().copied().sum::<T>() / nf;
    let yc: Vec<T> = ds.y.iter().map(|&v| v - y_mean).collect();
    let p = ds.p();
    let mut col_means = Vec::with_capacity(p);
    let mut col_scales = Vec::with_capacity(p);
    let mut xs = Matrix::zeros(n, p);
    for j in 0..p {
        let col = ds.x.column(j);
        let mean = col.iter().copied().sum::<T>() / nf;
        let ss: T = col.iter().map(|&v| (v - mean) * (v - mean)).sum();
        let scale = (ss / nf).sqrt();
        let magnitude = col.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        if !(scale > T::epsilon() * T::lit(16.0) * magnitude.max(T::min_positive_value())) {
            return Err(Error::DegenerateColumn(ds.column_names[j].clone()));
        }
        for (i, &v) in col.iter().enumerate() {
            xs[(i, j)] = (v - mean) / scale;
        }
        col_means.push(mean);
        col_scales.push(scale);
    }
    Ok(StandardizedDataset {
        data: RegressionData::new(xs, yc)?,
        y_mean,
        col_means,
        col_scales,
        column_names: ds.column_names.clone(),
    })
}

/// 17 significant digits, enough for an exact `f64` round trip.
pub fn fmt_num<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn write_csv_atomic<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let tmp = temp_sibling(path);
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_text_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = temp_sibling(path);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.{}.tmp", std::process::id()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset<f64> {
        let x = Matrix::from_rows(&[vec![1.0, 10.0], vec![2.0, 14.0], vec![3.0, 9.0], vec![4.0, 20.0]]).unwrap();
        Dataset::unnamed(vec![1.0, 3.0, 2.0, 6.0], x, "toy").unwrap()
    }

    #[test]
    fn column_one_two_three() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let ds = Dataset::unnamed(vec![0.0, 1.0, 5.0], x, "t").unwrap();
        let s = standardize(&ds).unwrap();
        let c = s.data().x().column(0);
        let r = 1.5f64.sqrt();
        assert!((c[0] + r).abs() < 1e-15 && c[1].abs() < 1e-15 && (c[2] - r).abs() < 1e-15);
        assert_eq!(s.y_mean, 2.0);
    }

    #[test]
    fn standardized_invariants() {
        let s = standardize(&toy()).unwrap();
        let n = s.n() as f64;
        assert!(s.data().y().iter().sum::<f64>().abs() < 1e-12);
        for j in 0..s.p() {
            let c = s.data().x().column(j);
            assert!(c.iter().sum::<f64>().abs() < 1e-10 * n);
            assert!((c.iter().map(|v| v * v).sum::<f64>() - n).abs() < 1e-10 * n);
        }
    }

    #[test]
    fn idempotent_on_standardized_input() {
        let s = standardize(&toy()).unwrap();
        let again = Dataset::unnamed(s.data().y().to_vec(), s.data().x().clone(), "s").unwrap();
        let s2 = standardize(&again).unwrap();
        assert!(s2.y_mean.abs() < 1e-14);
        for j in 0..s.p() {
            assert!(s2.col_means[j].abs() < 1e-14);
            assert!((s2.col_scales[j] - 1.0).abs() < 1e-14);
        }
        for (a, b) in s.data().x().as_slice().iter().zip(s2.data().x().as_slice()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn constant_column_is_named() {
        let x = Matrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let ds = Dataset::new(vec![0.0, 1.0, 2.0], x, vec!["a".into(), "flat".into()], "t").unwrap();
        match standardize(&ds) {
            Err(Error::DegenerateColumn(name)) => assert_eq!(name, "flat"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn prediction_round_trip() {
        let ds = toy();
        let s = standardize(&ds).unwrap();
        let beta = [0.7, -0.2];
        let (slopes, b0) = s.to_original_scale(&beta);
        for i in 0..ds.n() {
            let via_std = s.predict(&beta, ds.x.row(i));
            let via_raw = b0 + dot(&slopes, ds.x.row(i));
            assert!((via_std - via_raw).abs() < 1e-10);
        }
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(Dataset::unnamed(vec![1.0], x, "t").is_err());
    }

    #[test]
    fn residual_ss_matches_direct() {
        let s = standardize(&toy()).unwrap();
        let beta = [0.3, 0.1];
        let d = s.data();
        let direct: f64 = (0..d.n())
            .map(|i| (d.y()[i] - d.x()[(i, 0)] * 0.3 - d.x()[(i, 1)] * 0.1).powi(2))
            .sum();
        assert!((d.residual_ss(&beta) - direct).abs() < 1e-14);
    }
}
