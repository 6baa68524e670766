//! Linear instantaneous mixing model, signal statistics and CSV ingestion.
//!
//! Signals are stored channel-major: one row per channel, one column per
//! sample. Every expectation is a plain sample mean; lagged products only use
//! the samples where both terms exist.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("dimension mismatch: {what} (expected {expected}, found {found})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in channel {channel} at sample {sample}")]
    NonFinite { channel: usize, sample: usize },
    #[error("signal needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("channel {channel} has {found} samples, expected {expected}")]
    Ragged {
        channel: usize,
        expected: usize,
        found: usize,
    },
    #[error("signal matrix has no channels")]
    NoChannels,
    #[error("zero-variance (constant) signal")]
    ZeroVariance,
    #[error("separation matrix row {0} has zero norm")]
    ZeroRow(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown generator `{0}` (expected `ecg-like` or `smooth`)")]
    UnknownGenerator(String),
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("no samples")]
    NoSamples,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SignalError> = std::result::Result<T, E>;

/// Real-valued multichannel signal: `channels × samples`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignalMatrix", into = "RawSignalMatrix")]
pub struct SignalMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawSignalMatrix {
    labels: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<RawSignalMatrix> for SignalMatrix {
    type Error = SignalError;

    fn try_from(raw: RawSignalMatrix) -> Result<Self> {
        SignalMatrix::new(raw.labels, raw.rows)
    }
}

impl From<SignalMatrix> for RawSignalMatrix {
    fn from(m: SignalMatrix) -> Self {
        RawSignalMatrix {
            labels: m.labels,
            rows: m.rows,
        }
    }
}

impl SignalMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SignalError::NoChannels);
        }
        if labels.len() != rows.len() {
            return Err(SignalError::DimensionMismatch {
                what: "channel labels",
                expected: rows.len(),
                found: labels.len(),
            });
        }
        let samples = rows[0].len();
        if samples < 2 {
            return Err(SignalError::TooShort(samples));
        }
        for (channel, row) in rows.iter().enumerate() {
            if row.len() != samples {
                return Err(SignalError::Ragged {
                    channel,
                    expected: samples,
                    found: row.len(),
                });
            }
            if let Some(sample) = row.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite { channel, sample });
            }
        }
        Ok(SignalMatrix { labels, rows })
    }

    /// Builds a matrix with labels `{prefix}_1`, `{prefix}_2`, ...
    pub fn with_prefix(prefix: &str, rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (1..=rows.len()).map(|i| format!("{prefix}_{i}")).collect();
        Self::new(labels, rows)
    }

    pub fn channels(&self) -> usize {
        self.rows.len()
    }

    pub fn samples(&self) -> usize {
        self.rows[0].len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, channel: usize) -> &[f64] {
        &self.rows[channel]
    }

    pub fn into_rows(self) -> Vec<Vec<f64>> {
        self.rows
    }

    /// Keeps the listed channels, in the given order.
    pub fn select(&self, channels: &[usize]) -> Result<Self> {
        let mut labels = Vec::with_capacity(channels.len());
        let mut rows = Vec::with_capacity(channels.len());
        for &c in channels {
            if c >= self.channels() {
                return Err(SignalError::InvalidArgument(format!(
                    "channel {c} out of range (matrix has {})",
                    self.channels()
                )));
            }
            labels.push(self.labels[c].clone());
            rows.push(self.rows[c].clone());
        }
        Self::new(labels, rows)
    }

    /// Stacks the channels of several matrices with equal sample counts.
    pub fn stack(parts: &[&SignalMatrix]) -> Result<Self> {
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for part in parts {
            labels.extend(part.labels.iter().cloned());
            rows.extend(part.rows.iter().cloned());
        }
        Self::new(labels, rows)
    }
}

/// Mixing process `x(t) = A s(t) + r(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixingConfig {
    pub mixing_matrix: Vec<Vec<f64>>,
    /// Per-channel signal-to-noise ratio in decibels; `None` means no noise.
    pub snr_db: Option<f64>,
    pub noise_seed: u64,
}

impl Default for MixingConfig {
    fn default() -> Self {
        MixingConfig {
            mixing_matrix: vec![vec![1.0, 0.5], vec![0.5, 1.0]],
            snr_db: None,
            noise_seed: 0,
        }
    }
}

impl MixingConfig {
    /// Returns every violated invariant as a human-readable string.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.mixing_matrix.len();
        if n == 0 {
            out.push("mixing.mixing_matrix: must not be empty".to_string());
        }
        for (i, row) in self.mixing_matrix.iter().enumerate() {
            if row.len() != n {
                out.push(format!(
                    "mixing.mixing_matrix: row {i} has {} entries, matrix must be square ({n}x{n})",
                    row.len()
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                out.push(format!("mixing.mixing_matrix: row {i} has non-finite entries"));
            }
        }
        if let Some(snr) = self.snr_db {
            if !(snr > 0.0 && snr <= 100.0) {
                out.push(format!("mixing.snr_db: {snr} outside (0, 100]"));
            }
        }
        out
    }
}

/// Linear separating system `y(t) = W x(t)`; rows `w_i` produce one estimate each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SeparationMatrix {
    rows: Vec<Vec<f64>>,
}

impl TryFrom<Vec<Vec<f64>>> for SeparationMatrix {
    type Error = SignalError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        SeparationMatrix::new(rows)
    }
}

impl From<SeparationMatrix> for Vec<Vec<f64>> {
    fn from(w: SeparationMatrix) -> Self {
        w.rows
    }
}

impl SeparationMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(SignalError::NoChannels);
        }
        let cols = rows[0].len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(SignalError::Ragged {
                    channel: i,
                    expected: cols,
                    found: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(SignalError::NonFinite {
                    channel: i,
                    sample: j,
                });
            }
            if row.iter().all(|&v| v == 0.0) {
                return Err(SignalError::ZeroRow(i));
            }
        }
        Ok(SeparationMatrix { rows })
    }

    /// Row-major genome of length `rows * cols`.
    pub fn from_genome(genome: &[f64], rows: usize, cols: usize) -> Result<Self> {
        if genome.len() != rows * cols {
            return Err(SignalError::DimensionMismatch {
                what: "genome length",
                expected: rows * cols,
                found: genome.len(),
            });
        }
        Self::new(genome.chunks(cols).map(<[f64]>::to_vec).collect())
    }

    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        SeparationMatrix { rows }
    }

    pub fn genome(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// Multiplies every entry by `factor` (used when probing scale invariance).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.rows
                .iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect(),
        )
    }
}

/// `A · s(t)` without noise, as raw rows.
fn apply_matrix(matrix: &[Vec<f64>], signals: &SignalMatrix) -> Vec<Vec<f64>> {
    let t_len = signals.samples();
    matrix
        .iter()
        .map(|coeffs| {
            let mut out = vec![0.0; t_len];
            for (c, src) in coeffs.iter().zip(signals.rows()) {
                if *c == 0.0 {
                    continue;
                }
                for (o, s) in out.iter_mut().zip(src) {
                    *o += c * s;
                }
            }
            out
        })
        .collect()
}

/// Generates mixtures `x(t) = A s(t) + r(t)`.
///
/// When `snr_db` is set, channel `i` receives i.i.d. Gaussian noise with
/// variance `var(A s)_i · 10^(-snr/10)`, drawn channel by channel from a
/// ChaCha8 stream seeded with `noise_seed`.
pub fn mix(sources: &SignalMatrix, cfg: &MixingConfig) -> Result<SignalMatrix> {
    let a = &cfg.mixing_matrix;
    if a.is_empty() {
        return Err(SignalError::NoChannels);
    }
    for (i, row) in a.iter().enumerate() {
        if row.len() != sources.channels() {
            return Err(SignalError::DimensionMismatch {
                what: "mixing matrix columns vs source channels",
                expected: sources.channels(),
                found: row.len(),
            });
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite {
                channel: i,
                sample: j,
            });
        }
    }
    let mut rows = apply_matrix(a, sources);
    if let Some(snr) = cfg.snr_db {
        if !snr.is_finite() {
            return Err(SignalError::InvalidArgument(format!("snr_db = {snr}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise_seed);
        let scale = 10f64.powf(-snr / 10.0);
        for row in rows.iter_mut() {
            let sigma = (variance(row) * scale).sqrt();
            for v in row.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += sigma * z;
            }
        }
    }
    SignalMatrix::with_prefix("mixture", rows)
}

/// Computes estimates `y(t) = W x(t)`.
pub fn separate(mixtures: &SignalMatrix, w: &SeparationMatrix) -> Result<SignalMatrix> {
    if w.ncols() != mixtures.channels() {
        return Err(SignalError::DimensionMismatch {
            what: "separation matrix columns vs mixture channels",
            expected: mixtures.channels(),
            found: w.ncols(),
        });
    }
    SignalMatrix::with_prefix("estimate", apply_matrix(w.rows(), mixtures))
}

pub(crate) fn project(mixtures: &SignalMatrix, w: &SeparationMatrix) -> Result<Vec<Vec<f64>>> {
    if w.ncols() != mixtures.channels() {
        return Err(SignalError::DimensionMismatch {
            what: "separation matrix columns vs mixture channels",
            expected: mixtures.channels(),
            found: w.ncols(),
        });
    }
    Ok(apply_matrix(w.rows(), mixtures))
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population variance (divides by the sample count).
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64
}

/// Normalised sample autocorrelation for lags `0..=max_lag`.
///
/// Lagged sums run over the overlapping samples and are divided by the
/// full-length lag-0 sum, so the coefficient at lag 0 is exactly 1 and the
/// sequence is the standard (biased) ACF.
pub fn autocorrelation(signal: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag >= signal.len() {
        return Err(SignalError::InvalidArgument(format!(
            "max_lag {max_lag} must be below the sample count {}",
            signal.len()
        )));
    }
    let m = mean(signal);
    let centered: Vec<f64> = signal.iter().map(|v| v - m).collect();
    let energy: f64 = centered.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Err(SignalError::ZeroVariance);
    }
    let mut out = Vec::with_capacity(max_lag + 1);
    out.push(1.0);
    for lag in 1..=max_lag {
        let s: f64 = centered[lag..]
            .iter()
            .zip(&centered[..centered.len() - lag])
            .map(|(a, b)| a * b)
            .sum();
        out.push(s / energy);
    }
    Ok(out)
}

/// Lag in `[min_lag, max_lag]` with the largest autocorrelation; ties go to
/// the smallest lag.
pub fn detect_delay(signal: &[f64], min_lag: usize, max_lag: usize) -> Result<usize> {
    if min_lag < 1 || min_lag >= max_lag {
        return Err(SignalError::InvalidArgument(format!(
            "lag range [{min_lag}, {max_lag}] must satisfy 1 <= min < max"
        )));
    }
    let acf = autocorrelation(signal, max_lag)?;
    let mut best = min_lag;
    for lag in min_lag + 1..=max_lag {
        if acf[lag] > acf[best] {
            best = lag;
        }
    }
    Ok(best)
}

/// Sample Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(SignalError::DimensionMismatch {
            what: "pearson input lengths",
            expected: a.len(),
            found: b.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(SignalError::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Zero mean, unit (population) variance.
pub fn standardize(signal: &[f64]) -> Result<Vec<f64>> {
    let m = mean(signal);
    let var = variance(signal);
    if var == 0.0 {
        return Err(SignalError::ZeroVariance);
    }
    let sd = var.sqrt();
    Ok(signal.iter().map(|v| (v - m) / sd).collect())
}

/// Source generators for the synthetic surrogate problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    /// Positive baseline plus a periodic P/QRS/T beat: sparse and
    /// strongly time-correlated at the beat period.
    EcgLike,
    /// Offset dense oscillation built from a few incommensurate tones.
    Smooth,
}

impl Generator {
    pub fn id(self) -> &'static str {
        match self {
            Generator::EcgLike => "ecg-like",
            Generator::Smooth => "smooth",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Generator {
    type Err = SignalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ecg-like" => Ok(Generator::EcgLike),
            "smooth" => Ok(Generator::Smooth),
            other => Err(SignalError::UnknownGenerator(other.to_string())),
        }
    }
}

const ECG_BASELINE: f64 = 0.02;
const SMOOTH_OFFSET: f64 = 0.06;
const SMOOTH_RMS: f64 = 0.06;

fn gaussian_bump(out: &mut [f64], center: f64, width: f64, amplitude: f64) {
    let reach = 6.0 * width;
    let lo = (center - reach).floor().max(0.0) as usize;
    let hi = ((center + reach).ceil() as isize).min(out.len() as isize - 1);
    if hi < 0 || lo >= out.len() {
        return;
    }
    for (t, v) in out.iter_mut().enumerate().take(hi as usize + 1).skip(lo) {
        let z = (t as f64 - center) / width;
        *v += amplitude * (-0.5 * z * z).exp();
    }
}

fn ecg_like(period: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = period as f64;
    let mut out = vec![ECG_BASELINE; samples];
    let phase = rng.random_range(0..period) as f64;
    let beats = samples / period + 2;
    for k in 0..=beats {
        let center = phase + (k as f64 - 1.0) * p;
        let gain = 1.0 + 0.05 * (2.0 * rng.random::<f64>() - 1.0);
        gaussian_bump(&mut out, center - 0.13 * p, 0.031 * p, 0.10 * gain);
        gaussian_bump(&mut out, center, (0.0104 * p).max(1.0), gain);
        gaussian_bump(&mut out, center + 0.21 * p, 0.041 * p, 0.25 * gain);
    }
    out
}

fn smooth(period: usize, samples: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    const TONES: [(f64, f64); 3] = [(1.0, 1.0), (0.45, 0.5), (0.19, 0.25)];
    let mut osc = vec![0.0; samples];
    for (ratio, amplitude) in TONES {
        let tone_period = period as f64 * ratio * (1.0 + 0.1 * (rng.random::<f64>() - 0.5));
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let omega = std::f64::consts::TAU / tone_period;
        for (t, v) in osc.iter_mut().enumerate() {
            *v += amplitude * (omega * t as f64 + phase).sin();
        }
    }
    let m = mean(&osc);
    let rms = variance(&osc).sqrt();
    osc.iter()
        .map(|v| SMOOTH_OFFSET + SMOOTH_RMS * (v - m) / rms)
        .collect()
}

/// Single-channel synthetic source.
pub fn synth_sources(
    kind: &str,
    period: usize,
    samples: usize,
    seed: u64,
) -> Result<SignalMatrix> {
    let generator: Generator = kind.parse()?;
    synth(generator, period, samples, seed)
}

pub fn synth(generator: Generator, period: usize, samples: usize, seed: u64) -> Result<SignalMatrix> {
    if period == 0 || samples < 4 * period {
        return Err(SignalError::InvalidArgument(format!(
            "need samples >= 4 * period (period {period}, samples {samples})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let row = match generator {
        Generator::EcgLike => ecg_like(period, samples, &mut rng),
        Generator::Smooth => smooth(period, samples, &mut rng),
    };
    SignalMatrix::new(vec![generator.id().to_string()], vec![row])
}

/// The default two-source problem: `[smooth, ecg-like]`.
///
/// The spiky source sits in the second channel so that it dominates the
/// second mixture under the default mixing matrix.
pub fn synthetic_pair(
    ecg_period: usize,
    smooth_period: usize,
    samples: usize,
    seed: u64,
) -> Result<SignalMatrix> {
    let smooth = synth(Generator::Smooth, smooth_period, samples, seed.wrapping_add(1))?;
    let ecg = synth(Generator::EcgLike, ecg_period, samples, seed)?;
    SignalMatrix::stack(&[&smooth, &ecg])
}

/// Reads one column per channel, header row of labels.
pub fn read_signals<R: Read>(reader: R) -> Result<SignalMatrix> {
    let (headers, rows) = read_columns(reader, false)?;
    SignalMatrix::new(headers, rows)
}

/// Reads an exported numeric table column by column. Unlike
/// [`read_signals`] a single row is accepted and `NaN` marks a missing cell.
pub fn read_table<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    read_columns(reader, true)
}

fn read_columns<R: Read>(reader: R, allow_nan: bool) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| csv_error(&e, 1))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(SignalError::Csv {
            line: 1,
            message: "missing header row".to_string(),
        });
    }
    let mut rows = vec![Vec::new(); headers.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| csv_error(&e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| SignalError::Csv {
                line,
                message: format!("non-numeric cell `{cell}` in column `{}`", headers[col]),
            })?;
            if !(v.is_finite() || allow_nan && v.is_nan()) {
                return Err(SignalError::Csv {
                    line,
                    message: format!("non-finite cell `{cell}` in column `{}`", headers[col]),
                });
            }
            rows[col].push(v);
        }
    }
    if rows[0].is_empty() {
        return Err(SignalError::NoSamples);
    }
    Ok((headers, rows))
}

fn csv_error(e: &csv::Error, fallback_line: u64) -> SignalError {
    let line = e.position().map_or(fallback_line, |p| p.line());
    let message = match e.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("ragged row: {len} fields, expected {expected_len}")
        }
        _ => e.to_string(),
    };
    SignalError::Csv { line, message }
}

pub fn write_signals<W: Write>(m: &SignalMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| SignalError::Io(e.into());
    wtr.write_record(m.labels()).map_err(to_io)?;
    let mut record = Vec::with_capacity(m.channels());
    for t in 0..m.samples() {
        record.clear();
        record.extend(m.rows().iter().map(|row| row[t].to_string()));
        wtr.write_record(&record).map_err(to_io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn load_signals(path: impl AsRef<Path>) -> Result<SignalMatrix> {
    read_signals(std::fs::File::open(path)?)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    read_table(std::fs::File::open(path)?)
}

pub fn save_signals(m: &SignalMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_signals(m, std::io::BufWriter::new(std::fs::File::create(path)?))
}
