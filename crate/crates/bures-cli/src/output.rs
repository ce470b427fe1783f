//! Result emission: JSON results that round-trip (non-finite reals as the
//! strings "inf"/"-inf"/"nan"), RFC-4180 CSV tables, and the per-run manifest
//! (config hash, seed, version, wall time) that makes reruns checkable.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Real number that stays valid JSON at ±∞: finite values serialize as
/// numbers, non-finite ones as "inf" / "-inf" / "nan".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct RealVisitor;
        impl Visitor<'_> for RealVisitor {
            type Value = Real;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or \"inf\"/\"-inf\"/\"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Real, E> {
                Ok(Real(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Real, E> {
                Ok(Real(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Real, E> {
                match v {
                    "inf" => Ok(Real(f64::INFINITY)),
                    "-inf" => Ok(Real(f64::NEG_INFINITY)),
                    "nan" => Ok(Real(f64::NAN)),
                    other => Err(E::custom(format!("unknown real literal {other:?}"))),
                }
            }
        }
        d.deserialize_any(RealVisitor)
    }
}

/// CSV cell for a real; shortest round-trip form, bare inf/-inf/nan.
pub fn csv_real(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).expect("finite f64 serializes")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    task: &'a str,
    version: &'a str,
    config_sha256: &'a str,
    seed: Option<u64>,
    threads: Option<usize>,
    wall_time: String,
    outputs: &'a [String],
}

/// Collects the files one run emits and writes the manifest on `finish`.
pub struct Emitter {
    dir: PathBuf,
    task: &'static str,
    config_sha256: String,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    outputs: Vec<String>,
}

impl Emitter {
    pub fn new(
        dir: &Path,
        task: &'static str,
        config_raw: &[u8],
        seed: Option<u64>,
        threads: Option<usize>,
    ) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let mut hasher = Sha256::new();
        hasher.update(config_raw);
        let config_sha256 = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        Ok(Self {
            dir: dir.to_path_buf(),
            task,
            config_sha256,
            seed,
            threads,
            outputs: Vec::new(),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        fs::write(self.dir.join(name), bytes)?;
        self.outputs.push(name.to_string());
        println!("wrote {}", self.dir.join(name).display());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let mut writer = csv::Writer::from_path(self.dir.join(name))?;
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(row)?;
        }
        writer.flush()?;
        self.outputs.push(name.to_string());
        println!("wrote {}", self.dir.join(name).display());
        Ok(())
    }

    /// Diagnostic JSON accompanying exit code 3.
    pub fn diagnostic(&mut self, error: impl fmt::Display, details: serde_json::Value) -> io::Result<()> {
        self.json(
            "diagnostic.json",
            &serde_json::json!({ "error": error.to_string(), "details": details }),
        )
    }

    pub fn finish(mut self) -> io::Result<()> {
        let manifest = Manifest {
            task: self.task,
            version: env!("CARGO_PKG_VERSION"),
            config_sha256: &self.config_sha256,
            seed: self.seed,
            threads: self.threads,
            wall_time: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: &self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        self.outputs.push("manifest.json".into());
        Ok(())
    }
}

// Result shapes; each re-parses from its own emission.

#[derive(Serialize, Deserialize)]
pub struct AtomCheckOut {
    pub index: usize,
    pub min_eig: Option<f64>,
    pub strictly_positive: bool,
    pub error: Option<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ValidateOut {
    pub valid: bool,
    pub atom_count: usize,
    pub dims_consistent: bool,
    pub weight_count_matches: bool,
    pub weights_nonnegative: bool,
    pub weight_sum: f64,
    pub weight_sum_ok: bool,
    pub all_atoms_strictly_positive: bool,
    pub moment_condition: String,
    pub atoms: Vec<AtomCheckOut>,
}

#[derive(Serialize, Deserialize)]
pub struct BarycenterOut {
    pub dim: usize,
    pub barycenter: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

#[derive(Serialize, Deserialize)]
pub struct RateOut {
    pub dim: usize,
    #[serde(rename = "I_P")]
    pub i_p: Real,
    #[serde(rename = "A_M")]
    pub a_m: Vec<f64>,
    pub tilted_weights: Vec<f64>,
    pub feasible: bool,
    pub status: String,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Serialize, Deserialize)]
pub struct GradOut {
    pub dim: usize,
    pub gradient: Vec<f64>,
    #[serde(rename = "I_P")]
    pub i_p: Real,
}

#[derive(Serialize, Deserialize)]
pub struct TiltOut {
    pub tilted_weights: Vec<f64>,
    pub cgf: f64,
}

#[derive(Serialize, Deserialize)]
pub struct PrgdOut {
    pub dim: usize,
    pub minimizer: Vec<f64>,
    pub value: Real,
    pub iterations: usize,
    pub eta_final: f64,
    pub trace: Vec<Real>,
}

#[derive(Serialize, Deserialize)]
pub struct SimulateSummaryOut {
    pub r: f64,
    pub exact: bool,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub reference: Real,
    pub rel_error: Option<f64>,
    pub included_rows: usize,
    pub failures: usize,
}

#[derive(Serialize, Deserialize)]
pub struct UvBarycenterOut {
    pub grid_size: usize,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct UvRateOut {
    pub rate: Real,
    pub weights: Vec<f64>,
    pub theta: Vec<f64>,
    pub feasible: bool,
    pub converged: bool,
    pub gap: f64,
    pub moment_residual: f64,
    pub iterations: usize,
}
