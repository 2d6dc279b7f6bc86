//! Dataset generation from the analytic law and CSV persistence.
//!
//! The training set is the deterministic 70 x 6 x 6 grid (2520 rows); test
//! sets are seeded random draws that also carry the three analytic
//! derivatives for error reporting.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::johnson_cook::{jc_derivatives, jc_flow_stress, JohnsonCookParams};
use crate::rng::SeededRng;

/// Columnar records of (eps_p, rate, T, sigma) plus, for test sets, the
/// analytic derivative triples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub eps_p: Vec<f64>,
    pub rate: Vec<f64>,
    pub temperature: Vec<f64>,
    pub sigma: Vec<f64>,
    pub derivs: Option<Vec<[f64; 3]>>,
}

/// How test-set strain rates are drawn over their range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateSampling {
    /// Log-uniform, matching the geometry of the ln preprocessing.
    #[default]
    LogUniform,
    /// Plain uniform on the linear axis.
    LinearUniform,
}

/// Plastic strain values of the training grid: 70 equidistant points on [0, 1].
pub const GRID_EPS_COUNT: usize = 70;
/// Strain rates of the training grid (1/s).
pub const GRID_RATES: [f64; 6] = [1.0, 10.0, 50.0, 500.0, 5_000.0, 50_000.0];
/// Temperatures of the training grid (deg C).
pub const GRID_TEMPS: [f64; 6] = [20.0, 100.0, 200.0, 300.0, 400.0, 500.0];

/// Test-set sampling box.
pub const TEST_EPS_RANGE: (f64, f64) = (0.0, 1.0);
pub const TEST_RATE_RANGE: (f64, f64) = (1.0, 50_000.0);
pub const TEST_TEMP_RANGE: (f64, f64) = (20.0, 500.0);

impl Dataset {
    pub fn len(&self) -> usize {
        self.eps_p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_p.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.eps_p.len();
        if self.rate.len() != n || self.temperature.len() != n || self.sigma.len() != n {
            return Err(Error::dataset("column lengths differ"));
        }
        if let Some(d) = &self.derivs {
            if d.len() != n {
                return Err(Error::dataset("derivative column length differs"));
            }
        }
        let finite = self
            .eps_p
            .iter()
            .chain(&self.rate)
            .chain(&self.temperature)
            .chain(&self.sigma)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::dataset("dataset contains non-finite entries"));
        }
        if self.rate.iter().any(|&r| r <= 0.0) {
            return Err(Error::dataset("strain rates must be positive"));
        }
        Ok(())
    }

    fn push(&mut self, eps: f64, rate: f64, temp: f64, sigma: f64) {
        self.eps_p.push(eps);
        self.rate.push(rate);
        self.temperature.push(temp);
        self.sigma.push(sigma);
    }

    /// Serialize as CSV with the header
    /// `eps_p,rate,T,sigma[,dsde,dsdr,dsdT]`. Numbers are written in the
    /// shortest form that round-trips exactly, so identical datasets produce
    /// byte-identical files.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.derivs.is_some() {
            out.push_str("eps_p,rate,T,sigma,dsde,dsdr,dsdT\n");
        } else {
            out.push_str("eps_p,rate,T,sigma\n");
        }
        for i in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{},{}",
                self.eps_p[i], self.rate[i], self.temperature[i], self.sigma[i]
            );
            if let Some(d) = &self.derivs {
                let _ = write!(out, ",{},{},{}", d[i][0], d[i][1], d[i][2]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::dataset("empty CSV"))?
            .trim();
        let with_derivs = match header {
            "eps_p,rate,T,sigma" => false,
            "eps_p,rate,T,sigma,dsde,dsdr,dsdT" => true,
            other => {
                return Err(Error::dataset(format!("unrecognized header `{other}`")));
            }
        };
        let mut data = Dataset {
            derivs: with_derivs.then(Vec::new),
            ..Dataset::default()
        };
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let expected = if with_derivs { 7 } else { 4 };
            if fields.len() != expected {
                return Err(Error::dataset(format!(
                    "line {}: expected {expected} fields, found {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let mut vals = [0.0; 7];
            for (k, f) in fields.iter().enumerate() {
                vals[k] = f.trim().parse::<f64>().map_err(|_| {
                    Error::dataset(format!("line {}: bad number `{f}`", lineno + 2))
                })?;
            }
            data.push(vals[0], vals[1], vals[2], vals[3]);
            if let Some(d) = &mut data.derivs {
                d.push([vals[4], vals[5], vals[6]]);
            }
        }
        data.validate()?;
        Ok(data)
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        Dataset::from_csv(&std::fs::read_to_string(path)?)
    }

    /// SHA-256 of the canonical CSV form, hex-encoded. Recorded as archive
    /// provenance.
    pub fn content_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.to_csv().as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }
}

/// The 2520-point training grid: 70 equidistant plastic strains on [0, 1]
/// crossed with 6 rates and 6 temperatures, stresses from the analytic law.
pub fn training_grid(p: &JohnsonCookParams) -> Dataset {
    let mut data = Dataset::default();
    for i in 0..GRID_EPS_COUNT {
        let eps = i as f64 / (GRID_EPS_COUNT - 1) as f64;
        for rate in GRID_RATES {
            for temp in GRID_TEMPS {
                let sigma = jc_flow_stress(p, eps, rate, temp)
                    .expect("grid points are inside the law's domain");
                data.push(eps, rate, temp, sigma);
            }
        }
    }
    data
}

/// `count` random in-range points with stresses and analytic derivative
/// triples. Deterministic under `seed`.
pub fn test_set(p: &JohnsonCookParams, count: usize, seed: u64, sampling: RateSampling) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let mut data = Dataset {
        derivs: Some(Vec::with_capacity(count)),
        ..Dataset::default()
    };
    for _ in 0..count {
        let eps = rng.uniform_in(TEST_EPS_RANGE.0, TEST_EPS_RANGE.1);
        let rate = match sampling {
            RateSampling::LogUniform => rng.log_uniform_in(TEST_RATE_RANGE.0, TEST_RATE_RANGE.1),
            RateSampling::LinearUniform => rng.uniform_in(TEST_RATE_RANGE.0, TEST_RATE_RANGE.1),
        };
        let temp = rng.uniform_in(TEST_TEMP_RANGE.0, TEST_TEMP_RANGE.1);
        let sigma = jc_flow_stress(p, eps, rate, temp).expect("in-range point");
        let (de, dr, dt) = jc_derivatives(p, eps, rate, temp).expect("in-range point");
        data.push(eps, rate, temp, sigma);
        data.derivs.as_mut().unwrap().push([de, dr, dt]);
    }
    data
}
