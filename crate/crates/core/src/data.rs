//! Synthetic data, dataset files and train/test splits.
//!
//! Synthetic covariates have rows `xₙ ~ N(0, R diag(5 · 1.05⁻ⁱ) Rᵀ)`,
//! `i = 1, …, D`, with `R` a seeded random rotation, so the design is
//! approximately low rank with a geometrically decaying spectrum.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, Matrix, Vector};
use crate::models::{sigmoid, softplus, Family};

/// ChaCha stream used for rotations, kept apart from the covariate draws.
const ROTATION_STREAM: u64 = 1;
const BINARY_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vector,
    pub family: Family,
    pub true_beta: Option<Vector>,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vector, family: Family) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "X has {} rows but Y has length {}",
                x.nrows(),
                y.len()
            )));
        }
        // column-major storage
        if let Some(k) = x.iter().position(|v| !v.is_finite()) {
            let (i, j) = (k % x.nrows(), k / x.nrows());
            return Err(Error::InvalidArgument(format!(
                "covariate ({i}, {j}) is {}",
                x[(i, j)]
            )));
        }
        family.check_responses(&y)?;
        Ok(Dataset {
            x,
            y,
            family,
            true_beta: None,
            seed: None,
        })
    }

    pub fn n_obs(&self) -> usize {
        self.x.nrows()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows),
            y: Vector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            family: self.family,
            true_beta: self.true_beta.clone(),
            seed: self.seed,
        }
    }
}

/// `5 · 1.05⁻ⁱ` for `i = 1, …, D`.
pub fn covariate_variances(d: usize) -> Vector {
    Vector::from_fn(d, |i, _| 5.0 * 1.05f64.powi(-(i as i32 + 1)))
}

/// Haar-distributed orthogonal matrix: Q of a Gaussian matrix with the
/// signs fixed so that R has a positive diagonal.
pub fn random_rotation(d: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ROTATION_STREAM);
    let qr = gaussian_matrix(d, d, &mut rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn covariates(n: usize, d: usize, draw_seed: u64, rotation: Option<u64>) -> Result<Matrix> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidArgument(format!(
            "N and D must be >= 1, got {n} and {d}"
        )));
    }
    let sd = covariate_variances(d).map(f64::sqrt);
    let mut rng = ChaCha8Rng::seed_from_u64(draw_seed);
    let mut z = gaussian_matrix(n, d, &mut rng);
    for (j, s) in sd.iter().enumerate() {
        z.column_mut(j).scale_mut(*s);
    }
    Ok(match rotation {
        Some(rs) => z * random_rotation(d, rs).transpose(),
        None => z,
    })
}

/// `N × D` covariates with decaying spectrum, rotated when `rotate` is set.
pub fn synth_covariates(n: usize, d: usize, seed: u64, rotate: bool) -> Result<Matrix> {
    covariates(n, d, seed, rotate.then_some(seed))
}

/// Test covariates from the same spectrum under an independent rotation
/// seeded by `seed_alt`.
pub fn out_of_sample_covariates(n: usize, d: usize, seed_alt: u64) -> Result<Matrix> {
    covariates(n, d, seed_alt.wrapping_add(0x9e37_79b9_7f4a_7c15), Some(seed_alt))
}

/// Draws responses from the family given the linear predictor `Xβ`.
///
/// Gaussian: `y = Xβ + τ^{-1/2} ε`. Logistic: `y = +1` with probability
/// `sigmoid(xᵀβ)`, otherwise `−1`. Poisson: `y ~ Poisson(softplus(xᵀβ))`.
pub fn synth_responses(x: &Matrix, beta: &Vector, family: Family, seed: u64) -> Result<Vector> {
    if beta.len() != x.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "β has length {}, X has {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    family.validate()?;
    let eta = x * beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = match family {
        Family::Gaussian { tau } => {
            let sd = tau.sqrt().recip();
            eta.map(|a| a + sd * rng.sample::<f64, _>(StandardNormal))
        }
        Family::Logistic => eta.map(|a| if rng.random_bool(sigmoid(a)) { 1.0 } else { -1.0 }),
        Family::PoissonSoftplus => {
            let mut out = Vector::zeros(eta.len());
            for (o, a) in out.iter_mut().zip(eta.iter()) {
                let rate = softplus(*a);
                *o = if rate > 0.0 {
                    Poisson::new(rate)
                        .map_err(|e| Error::InvalidArgument(format!("Poisson rate {rate}: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
            }
            out
        }
    };
    Ok(y)
}

/// Full synthetic dataset with `β* ~ N(0, I)` drawn from `seed`.
pub fn synth_dataset(n: usize, d: usize, family: Family, seed: u64, rotate: bool) -> Result<Dataset> {
    let x = synth_covariates(n, d, seed, rotate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let beta = gaussian_matrix(d, 1, &mut rng).column(0).into_owned();
    let y = synth_responses(&x, &beta, family, seed.wrapping_add(2))?;
    let mut ds = Dataset::new(x, y, family)?;
    ds.true_beta = Some(beta);
    ds.seed = Some(seed);
    Ok(ds)
}

/// Reads a numeric CSV with a header row. `response` names the response
/// column, or gives its zero-based index. Logistic responses in `{0, 1}`
/// are mapped to `{−1, +1}`.
pub fn load_csv(path: &Path, response: &str, family: Family) -> Result<Dataset> {
    read_csv(File::open(path)?, response, family)
}

pub fn read_csv<R: Read>(reader: R, response: &str, family: Family) -> Result<Dataset> {
    let (header, table) = read_table(reader)?;
    let col = header
        .iter()
        .position(|h| h == response)
        .or_else(|| response.parse::<usize>().ok().filter(|&i| i < header.len()))
        .ok_or_else(|| Error::InvalidArgument(format!("unknown response column '{response}'")))?;
    if header.len() < 2 {
        return Err(Error::Parse(
            "need at least one covariate column and a response".into(),
        ));
    }
    let mut y = table.column(col).into_owned();
    let x = table.remove_column(col);
    if family == Family::Logistic && y.iter().all(|&v| v == 0.0 || v == 1.0) {
        y.apply(|v| *v = 2.0 * *v - 1.0);
    }
    Dataset::new(x, y, family)
}

/// Reads a rectangular numeric CSV with a header row.
pub fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Matrix)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(BufReader::new(reader));
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => {
                Error::Parse(format!("ragged row at data line {}", line + 1))
            }
            _ => Error::Csv(e),
        })?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Parse(format!(
                    "non-numeric cell '{cell}' at data line {}, column {}",
                    line + 1,
                    j + 1
                ))
            })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Parse("CSV has no data rows".into()));
    }
    Ok((
        header.clone(),
        Matrix::from_row_slice(rows, header.len(), &values),
    ))
}

pub fn load_table(path: &Path) -> Result<(Vec<String>, Matrix)> {
    read_table(File::open(path)?)
}

/// Writes `x_0, …, x_{D-1}, y` with shortest round-trip float formatting.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..ds.dim()).map(|j| format!("x_{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..ds.n_obs() {
        let mut row: Vec<String> = ds.x.row(i).iter().map(|v| v.to_string()).collect();
        row.push(ds.y[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: &Path) -> Result<()> {
    write_csv(ds, BufWriter::new(File::create(path)?))
}

/// Seeded random partition; the first `round(train_frac · N)` permuted rows
/// form the training set.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(Error::InvalidArgument(format!(
            "train_frac must lie in [0, 1], got {train_frac}"
        )));
    }
    let mut idx: Vec<usize> = (0..ds.n_obs()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_frac * ds.n_obs() as f64).round() as usize;
    let (train, test) = idx.split_at(n_train);
    Ok((ds.subset(train), ds.subset(test)))
}

/// Binary matrix file: rows and columns as little-endian `u64`, then the
/// entries row-major as little-endian `f64`.
pub fn write_matrix_bin<W: Write>(m: &Matrix, mut writer: W) -> Result<()> {
    writer.write_all(&(m.nrows() as u64).to_le_bytes())?;
    writer.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for v in m.row(i).iter() {
            writer.write_all(&v.to_le_bytes())?;
        }
    }
    writer.flush()?;
    Ok(())
}

pub fn read_matrix_bin<R: Read>(mut reader: R) -> Result<Matrix> {
    let mut header = [0u8; BINARY_HEADER_LEN];
    reader.read_exact(&mut header)?;
    let rows = u64::from_le_bytes(header[..8].try_into().expect("8 bytes")) as usize;
    let cols = u64::from_le_bytes(header[8..].try_into().expect("8 bytes")) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::Parse(format!("matrix dimensions {rows}x{cols} overflow")))?;
    let mut bytes = Vec::with_capacity(len);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != len {
        return Err(Error::Parse(format!(
            "expected {len} bytes of data for a {rows}x{cols} matrix, found {}",
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok(Matrix::from_row_slice(rows, cols, &values))
}

pub fn save_matrix_bin(m: &Matrix, path: &Path) -> Result<()> {
    write_matrix_bin(m, BufWriter::new(File::create(path)?))
}

pub fn load_matrix_bin(path: &Path) -> Result<Matrix> {
    read_matrix_bin(BufReader::new(File::open(path)?))
}
