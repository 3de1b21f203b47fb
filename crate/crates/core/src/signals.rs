//! Benchmark input series: white noise, MSO, Lorenz, Mackey-Glass and the Santa Fe laser file.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{EsnError, Result};

const DIVERGENCE_BOUND: f64 = 1e6;

/// A T x d series with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub values: DMatrix<f64>,
    pub dt: Option<f64>,
    pub source: String,
}

impl TimeSeries {
    pub fn scalar(values: Vec<f64>, dt: Option<f64>, source: impl Into<String>) -> Self {
        Self {
            values: DMatrix::from_vec(values.len(), 1, values),
            dt,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn channels(&self) -> usize {
        self.values.ncols()
    }

    /// First channel as a slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.values.as_slice()[..self.len()]
    }

    /// SHA-256 over the little-endian bytes of the values (column-major).
    pub fn sha256(&self) -> String {
        let mut h = Sha256::new();
        for v in self.values.iter() {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Two-column `index,value` CSV (one value column per channel).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .map_err(|e| csv_error(path, e))?;
        let mut header = vec!["index".to_string()];
        if self.channels() == 1 {
            header.push("value".into());
        } else {
            header.extend((0..self.channels()).map(|c| format!("value_{c}")));
        }
        w.write_record(&header).map_err(|e| csv_error(path, e))?;
        for k in 0..self.len() {
            let mut rec = vec![k.to_string()];
            rec.extend(self.values.row(k).iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| EsnError::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> EsnError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => EsnError::io(path, io),
        other => EsnError::Serialization(format!("{}: {other:?}", path.display())),
    }
}

fn require_length(length: usize) -> Result<()> {
    if length == 0 {
        Err(EsnError::InvalidParameter("length must be >= 1".into()))
    } else {
        Ok(())
    }
}

/// I.i.d. uniform samples on [-1, 1].
pub fn white_noise(length: usize, seed: u64) -> Result<TimeSeries> {
    require_length(length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..length).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    Ok(TimeSeries::scalar(v, None, format!("white_noise(length={length},seed={seed})")))
}

/// `sin(0.2k) + sin(0.311k) + sin(0.42k)`, k = 0..length-1.
pub fn mso(length: usize) -> Result<TimeSeries> {
    require_length(length)?;
    let v = (0..length)
        .map(|k| {
            let k = k as f64;
            (0.2 * k).sin() + (0.311 * k).sin() + (0.42 * k).sin()
        })
        .collect();
    Ok(TimeSeries::scalar(v, None, format!("mso(length={length})")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LorenzParams {
    pub length: usize,
    pub dt: f64,
    pub subsample: usize,
    pub transient_steps: usize,
    pub initial: [f64; 3],
    /// Seeds a uniform perturbation of size 1e-3 added to `initial`.
    pub seed_perturbation: Option<u64>,
    pub sigma: f64,
    pub beta: f64,
    pub rho: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            length: 1000,
            dt: 0.01,
            subsample: 5,
            transient_steps: 1000,
            initial: [1.0, 1.0, 1.0],
            seed_perturbation: None,
            sigma: 10.0,
            beta: 8.0 / 3.0,
            rho: 28.0,
        }
    }
}

impl LorenzParams {
    pub fn field(&self, s: [f64; 3]) -> [f64; 3] {
        [
            self.sigma * (s[1] - s[0]),
            s[0] * (self.rho - s[2]) - s[1],
            s[0] * s[1] - self.beta * s[2],
        ]
    }
}

fn rk4_step(p: &LorenzParams, s: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = p.field(s);
    let k2 = p.field(add(s, k1, h / 2.0));
    let k3 = p.field(add(s, k2, h / 2.0));
    let k4 = p.field(add(s, k3, h));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// x coordinate of the Lorenz system, RK4, sampled every `subsample` steps after the transient.
pub fn lorenz_x(p: &LorenzParams) -> Result<TimeSeries> {
    require_length(p.length)?;
    if !(p.dt > 0.0 && p.dt <= 0.02) {
        return Err(EsnError::InvalidParameter(format!("Lorenz dt must lie in (0, 0.02], got {}", p.dt)));
    }
    if p.subsample == 0 {
        return Err(EsnError::InvalidParameter("subsample must be >= 1".into()));
    }
    if p.transient_steps < 1000 {
        return Err(EsnError::InvalidParameter(format!(
            "transient must be at least 1000 integrator steps, got {}",
            p.transient_steps
        )));
    }
    let mut s = p.initial;
    if let Some(seed) = p.seed_perturbation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in s.iter_mut() {
            *v += rng.gen_range(-1e-3..=1e-3);
        }
    }
    let total = p.transient_steps + p.length * p.subsample;
    let mut out = Vec::with_capacity(p.length);
    for step in 1..=total {
        s = rk4_step(p, s, p.dt);
        if !s.iter().all(|v| v.is_finite() && v.abs() <= DIVERGENCE_BOUND) {
            return Err(EsnError::Divergence { step });
        }
        if step > p.transient_steps && (step - p.transient_steps) % p.subsample == 0 {
            out.push(s[0]);
        }
    }
    Ok(TimeSeries::scalar(
        out,
        Some(p.dt * p.subsample as f64),
        format!(
            "lorenz_x(length={},dt={},subsample={},transient={},initial={:?},perturbation={:?})",
            p.length, p.dt, p.subsample, p.transient_steps, p.initial, p.seed_perturbation
        ),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MackeyGlassParams {
    pub length: usize,
    pub dt: f64,
    pub sample_every: usize,
    pub delay: f64,
    pub alpha: f64,
    pub beta: f64,
    pub exponent: f64,
    pub initial_history: f64,
}

impl Default for MackeyGlassParams {
    fn default() -> Self {
        Self {
            length: 1000,
            dt: 0.1,
            sample_every: 10,
            delay: 17.0,
            alpha: 0.2,
            beta: 0.1,
            exponent: 1.0,
            initial_history: 1.2,
        }
    }
}

impl MackeyGlassParams {
    fn rhs(&self, x: f64, x_delayed: f64) -> f64 {
        let p = if self.exponent.fract() == 0.0 && self.exponent.abs() < 64.0 {
            x_delayed.powi(self.exponent as i32)
        } else {
            x_delayed.powf(self.exponent)
        };
        self.alpha * x_delayed / (1.0 + p) - self.beta * x
    }

    fn delay_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(EsnError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        let m = self.delay / self.dt;
        let rounded = m.round();
        if rounded < 1.0 || (m - rounded).abs() > 1e-9 * m.max(1.0) {
            return Err(EsnError::InvalidParameter(format!(
                "delay ({}) must be a positive integer multiple of dt ({})",
                self.delay, self.dt
            )));
        }
        Ok(rounded as usize)
    }
}

/// Integrates the delay equation with RK4 for `n_steps` steps of size `dt`,
/// returning the grid values `x(0), x(dt), ..., x(n_steps dt)`.
///
/// The delayed term at half steps is read from a cubic Hermite interpolant of
/// the stored grid values and derivatives, which keeps the scheme fourth order.
pub fn integrate_mackey_glass(p: &MackeyGlassParams, n_steps: usize) -> Result<Vec<f64>> {
    let m = p.delay_steps()?;
    let h = p.dt;
    let hist = p.initial_history;
    let mut x = Vec::with_capacity(n_steps + 1);
    let mut dx = Vec::with_capacity(n_steps + 1);
    x.push(hist);
    dx.push(p.rhs(hist, hist));

    // delayed value at grid position i - m + theta; intervals left of t = 0 are history
    let delayed = |x: &[f64], dx: &[f64], i: usize, theta: f64| -> f64 {
        if i < m {
            return hist;
        }
        let j = i - m;
        let (x0, x1, d0, d1) = (x[j], x[j + 1], dx[j], dx[j + 1]);
        let t = theta;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * x0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * x1 + (t3 - t2) * h * d1
    };

    for i in 0..n_steps {
        let xi = x[i];
        let d_lo = if i >= m { x[i - m] } else { hist };
        let d_mid = delayed(&x, &dx, i, 0.5);
        let d_hi = if i >= m { x[i + 1 - m] } else { hist };
        let k1 = p.rhs(xi, d_lo);
        let k2 = p.rhs(xi + 0.5 * h * k1, d_mid);
        let k3 = p.rhs(xi + 0.5 * h * k2, d_mid);
        let k4 = p.rhs(xi + h * k3, d_hi);
        let next = xi + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !next.is_finite() || next.abs() > DIVERGENCE_BOUND {
            return Err(EsnError::Divergence { step: i + 1 });
        }
        let d_next = if i + 1 >= m { x[i + 1 - m] } else { hist };
        x.push(next);
        dx.push(p.rhs(next, d_next));
    }
    Ok(x)
}

/// Mackey-Glass series sampled every `sample_every` integrator steps, starting at t = 0.
pub fn mackey_glass(p: &MackeyGlassParams) -> Result<TimeSeries> {
    require_length(p.length)?;
    if p.sample_every == 0 {
        return Err(EsnError::InvalidParameter("sample_every must be >= 1".into()));
    }
    let grid = integrate_mackey_glass(p, (p.length - 1) * p.sample_every)?;
    let v = grid.iter().step_by(p.sample_every).copied().collect();
    Ok(TimeSeries::scalar(
        v,
        Some(p.dt * p.sample_every as f64),
        format!(
            "mackey_glass(length={},dt={},sample_every={},delay={},alpha={},beta={},exponent={},history={})",
            p.length, p.dt, p.sample_every, p.delay, p.alpha, p.beta, p.exponent, p.initial_history
        ),
    ))
}

/// One sample per line; blank lines are skipped, surrounding whitespace ignored.
pub fn load_santa_fe(path: &Path) -> Result<TimeSeries> {
    let text = fs::read_to_string(path).map_err(|e| EsnError::io(path, e))?;
    let mut v = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t.parse().map_err(|_| EsnError::Parse {
            path: PathBuf::from(path),
            line: i + 1,
            content: t.to_string(),
        })?;
        if !x.is_finite() {
            return Err(EsnError::Parse {
                path: PathBuf::from(path),
                line: i + 1,
                content: t.to_string(),
            });
        }
        v.push(x);
    }
    if v.is_empty() {
        return Err(EsnError::Empty("Santa Fe file"));
    }
    Ok(TimeSeries::scalar(v, None, format!("santa_fe({})", path.display())))
}

/// Divides every channel by its sample standard deviation; optionally subtracts the mean first.
pub fn normalize_unit_variance(series: &TimeSeries, center: bool) -> Result<TimeSeries> {
    let t = series.len();
    let mut out = series.values.clone();
    for (c, mut col) in out.column_iter_mut().enumerate() {
        if t < 2 {
            return Err(EsnError::ZeroVariance { channel: c });
        }
        let (mean, std) = crate::experiments::stats::mean_std(col.as_slice());
        if !(std > 0.0) || !std.is_finite() {
            return Err(EsnError::ZeroVariance { channel: c });
        }
        if center {
            col.add_scalar_mut(-mean);
        }
        col /= std;
    }
    Ok(TimeSeries {
        values: out,
        dt: series.dt,
        source: format!("{}|unit_variance(center={center})", series.source),
    })
}

/// The five benchmark inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    WhiteNoise,
    Mso,
    Lorenz,
    MackeyGlass,
    SantaFe,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::WhiteNoise => "white_noise",
            Benchmark::Mso => "mso",
            Benchmark::Lorenz => "lorenz",
            Benchmark::MackeyGlass => "mackey_glass",
            Benchmark::SantaFe => "santa_fe",
        }
    }

    /// Raw (unnormalized) series of the given length. The seed only affects white noise
    /// and the Lorenz initial perturbation.
    pub fn generate(self, length: usize, seed: u64, santa_fe_path: Option<&Path>) -> Result<TimeSeries> {
        match self {
            Benchmark::WhiteNoise => white_noise(length, seed),
            Benchmark::Mso => mso(length),
            Benchmark::Lorenz => lorenz_x(&LorenzParams {
                length,
                seed_perturbation: Some(seed),
                ..LorenzParams::default()
            }),
            Benchmark::MackeyGlass => mackey_glass(&MackeyGlassParams {
                length,
                ..MackeyGlassParams::default()
            }),
            Benchmark::SantaFe => {
                let path = santa_fe_path.ok_or_else(|| EsnError::InvalidParameter("santa_fe needs a data file path".into()))?;
                let s = load_santa_fe(path)?;
                if s.len() < length {
                    return Err(EsnError::SeriesTooShort {
                        needed: length,
                        available: s.len(),
                    });
                }
                Ok(TimeSeries {
                    values: s.values.rows(0, length).into_owned(),
                    ..s
                })
            }
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Benchmark {
    type Err = EsnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "white_noise" => Ok(Benchmark::WhiteNoise),
            "mso" => Ok(Benchmark::Mso),
            "lorenz" => Ok(Benchmark::Lorenz),
            "mackey_glass" => Ok(Benchmark::MackeyGlass),
            "santa_fe" => Ok(Benchmark::SantaFe),
            other => Err(EsnError::InvalidParameter(format!(
                "unknown benchmark {other:?} (expected white_noise, mso, lorenz, mackey_glass or santa_fe)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn white_noise_bounds_and_determinism() {
        let a = white_noise(1000, 3).unwrap();
        assert!(a.as_slice().iter().all(|v| (-1.0..=1.0).contains(v)));
        assert_eq!(a, white_noise(1000, 3).unwrap());
        assert_ne!(a.as_slice(), white_noise(1000, 4).unwrap().as_slice());
        assert!(white_noise(0, 1).is_err());
    }

    #[test]
    fn mso_values() {
        let s = mso(500).unwrap();
        assert_eq!(s.as_slice()[0], 0.0);
        assert!((s.as_slice()[1] - 0.9124406).abs() < 1e-7);
        assert!(s.as_slice().iter().all(|v| v.abs() <= 3.0));
    }

    #[test]
    fn lorenz_origin_is_fixed() {
        let p = LorenzParams { initial: [0.0; 3], length: 50, ..LorenzParams::default() };
        assert!(lorenz_x(&p).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn lorenz_equilibria_have_zero_field() {
        let p = LorenzParams::default();
        let c = (p.beta * (p.rho - 1.0)).sqrt();
        for s in [[c, c, p.rho - 1.0], [-c, -c, p.rho - 1.0]] {
            assert!(p.field(s).iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn lorenz_validation() {
        assert!(lorenz_x(&LorenzParams { dt: 0.05, ..LorenzParams::default() }).is_err());
        assert!(lorenz_x(&LorenzParams { transient_steps: 10, ..LorenzParams::default() }).is_err());
        assert!(lorenz_x(&LorenzParams { subsample: 0, ..LorenzParams::default() }).is_err());
    }

    #[test]
    fn lorenz_divergence_is_reported() {
        let p = LorenzParams { initial: [1e5, 1e5, 1e5], rho: 28.0, ..LorenzParams::default() };
        assert!(matches!(lorenz_x(&p), Err(EsnError::Divergence { .. })));
    }

    #[test]
    fn mackey_glass_fixed_points() {
        let one = MackeyGlassParams { initial_history: 1.0, length: 200, ..MackeyGlassParams::default() };
        assert!(mackey_glass(&one).unwrap().as_slice().iter().all(|v| (v - 1.0).abs() < 1e-9));
        let zero = MackeyGlassParams { initial_history: 0.0, length: 200, ..MackeyGlassParams::default() };
        assert!(mackey_glass(&zero).unwrap().as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mackey_glass_sampling() {
        let p = MackeyGlassParams { length: 30, ..MackeyGlassParams::default() };
        let s = mackey_glass(&p).unwrap();
        let grid = integrate_mackey_glass(&p, 290).unwrap();
        assert_eq!(s.len(), 30);
        assert_eq!(s.as_slice()[0], 1.2);
        assert_eq!(s.as_slice()[29], grid[290]);
        assert_eq!(s.dt, Some(1.0));
    }

    #[test]
    fn mackey_glass_rejects_incommensurate_delay() {
        let p = MackeyGlassParams { delay: 17.05, ..MackeyGlassParams::default() };
        assert!(mackey_glass(&p).is_err());
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn santa_fe_parsing() {
        let f = write_tmp("1\n2\n3\n4\n5");
        assert_eq!(load_santa_fe(f.path()).unwrap().as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let f = write_tmp("1\n2\n3\n4\n5\n\n");
        assert_eq!(load_santa_fe(f.path()).unwrap().len(), 5);
        let f = write_tmp("  86 \n\t141\n");
        assert_eq!(load_santa_fe(f.path()).unwrap().as_slice(), &[86.0, 141.0]);
    }

    #[test]
    fn santa_fe_errors() {
        let f = write_tmp("1\n2\nabc\n");
        match load_santa_fe(f.path()) {
            Err(EsnError::Parse { line, content, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(content, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
        let f = write_tmp("\n\n");
        assert!(matches!(load_santa_fe(f.path()), Err(EsnError::Empty(_))));
        assert!(matches!(load_santa_fe(Path::new("/nonexistent/laser.dat")), Err(EsnError::Io { .. })));
    }

    #[test]
    fn normalization_examples() {
        let two = TimeSeries::scalar(vec![0.0, 2.0], None, "t");
        let n = normalize_unit_variance(&two, false).unwrap();
        assert!((n.as_slice()[1] - 2f64.sqrt()).abs() < 1e-15);
        let (_, sd) = crate::experiments::stats::mean_std(n.as_slice());
        assert!((sd - 1.0).abs() < 1e-15);

        let again = normalize_unit_variance(&n, false).unwrap();
        assert!((again.values.clone() - n.values.clone()).amax() < 1e-12);

        let centered = normalize_unit_variance(&TimeSeries::scalar(vec![1.0, 2.0, 3.0], None, "t"), true).unwrap();
        assert!(centered.as_slice().iter().sum::<f64>().abs() < 1e-15);

        let flat = TimeSeries::scalar(vec![4.0, 4.0, 4.0], None, "t");
        assert!(matches!(normalize_unit_variance(&flat, false), Err(EsnError::ZeroVariance { channel: 0 })));
    }

    #[test]
    fn csv_dump() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mso.csv");
        mso(3).unwrap().write_csv(&path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,value");
        assert_eq!(lines[1], "0,0");
        assert_eq!(lines.len(), 4);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn benchmark_names_round_trip() {
        for b in [Benchmark::WhiteNoise, Benchmark::Mso, Benchmark::Lorenz, Benchmark::MackeyGlass, Benchmark::SantaFe] {
            assert_eq!(b.name().parse::<Benchmark>().unwrap(), b);
        }
        assert!(Benchmark::SantaFe.generate(10, 0, None).is_err());
    }
}
