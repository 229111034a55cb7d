//! Run configuration: plain `key = value` lines, `#` comments, unknown keys
//! rejected with their line number.

use std::path::PathBuf;

use elmfem::Tolerances64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Adaptive,
    Uniform,
    Algorithm1Only,
    Convergence,
    TraceDiagnostics,
}

impl Mode {
    fn parse(s: &str) -> Option<Mode> {
        match s {
            "adaptive" => Some(Mode::Adaptive),
            "uniform" => Some(Mode::Uniform),
            "algorithm1-only" => Some(Mode::Algorithm1Only),
            "convergence" => Some(Mode::Convergence),
            "trace-diagnostics" => Some(Mode::TraceDiagnostics),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub benchmark: String,
    pub epsilon: f64,
    pub mode: Mode,
    pub tol_time: f64,
    pub tol_space: f64,
    pub tol_coarsen: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub theta: f64,
    pub t_final: f64,
    pub k0: f64,
    pub k_min: Option<f64>,
    pub k_max: Option<f64>,
    pub max_refine_loops: usize,
    /// Initial mesh subdivisions per direction.
    pub resolution: usize,
    pub output_dir: PathBuf,
    /// Snapshot every m accepted steps; 0 disables snapshots.
    pub snapshot_every: usize,
    /// Step sizes for `convergence` mode.
    pub study_ks: Vec<f64>,
    /// Step sizes for `trace-diagnostics` mode.
    pub trace_ks: Vec<f64>,
}

impl RunConfig {
    pub fn tolerances(&self) -> Tolerances64 {
        let mut t = Tolerances64::new(
            self.t_final,
            self.k0,
            self.tol_time,
            self.tol_space,
            self.tol_coarsen,
        );
        t.delta1 = self.delta1;
        t.delta2 = self.delta2;
        t.theta = self.theta;
        if let Some(k_min) = self.k_min {
            t.k_min = k_min;
        }
        if let Some(k_max) = self.k_max {
            t.k_max = k_max;
        }
        t.max_refine_loops = self.max_refine_loops;
        t
    }
}

const KNOWN_BENCHMARKS: &[&str] = &[
    "peak_1d",
    "shock_1d",
    "cone_2d",
    "shock1_2d",
    "shock2_2d",
    "heat_1d",
];

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut benchmark: Option<String> = None;
    let mut epsilon = 1e-3;
    let mut mode = Mode::Adaptive;
    let mut tol_time = f64::INFINITY;
    let mut tol_space = f64::INFINITY;
    let mut tol_coarsen = 0.0;
    // Published experiment defaults.
    let mut delta1 = 0.5;
    let mut delta2 = 2.0;
    let mut theta = 0.5;
    let mut t_final = 1.0;
    let mut k0 = 0.01;
    let mut k_min = None;
    let mut k_max = None;
    let mut max_refine_loops = 20usize;
    let mut resolution = 64usize;
    let mut output_dir = PathBuf::from("out");
    let mut snapshot_every = 0usize;
    let mut study_ks: Option<Vec<f64>> = None;
    let mut trace_ks: Option<Vec<f64>> = None;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(cut) => &raw[..cut],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: lineno,
            reason: format!("expected 'key = value', got '{line}'"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let parse_f64 = |v: &str| -> Result<f64, ConfigError> {
            v.parse().map_err(|_| ConfigError::Parse {
                line: lineno,
                reason: format!("'{v}' is not a number"),
            })
        };
        let parse_usize = |v: &str| -> Result<usize, ConfigError> {
            v.parse().map_err(|_| ConfigError::Parse {
                line: lineno,
                reason: format!("'{v}' is not a non-negative integer"),
            })
        };
        let parse_list = |v: &str| -> Result<Vec<f64>, ConfigError> {
            v.split(',')
                .map(|s| parse_f64(s.trim()))
                .collect::<Result<Vec<f64>, _>>()
        };
        match key {
            "benchmark" => benchmark = Some(value.to_string()),
            "epsilon" => epsilon = parse_f64(value)?,
            "mode" => {
                mode = Mode::parse(value).ok_or_else(|| ConfigError::Parse {
                    line: lineno,
                    reason: format!("unknown mode '{value}'"),
                })?
            }
            "tol_time" => tol_time = parse_f64(value)?,
            "tol_space" => tol_space = parse_f64(value)?,
            "tol_coarsen" => tol_coarsen = parse_f64(value)?,
            "delta1" => delta1 = parse_f64(value)?,
            "delta2" => delta2 = parse_f64(value)?,
            "theta" => theta = parse_f64(value)?,
            "T" => t_final = parse_f64(value)?,
            "k0" => k0 = parse_f64(value)?,
            "k_min" => k_min = Some(parse_f64(value)?),
            "k_max" => k_max = Some(parse_f64(value)?),
            "max_refine_loops" => max_refine_loops = parse_usize(value)?,
            "resolution" => resolution = parse_usize(value)?,
            "output_dir" => output_dir = PathBuf::from(value),
            "snapshot_every" => snapshot_every = parse_usize(value)?,
            "study_ks" => study_ks = Some(parse_list(value)?),
            "trace_ks" => trace_ks = Some(parse_list(value)?),
            other => {
                return Err(ConfigError::Parse {
                    line: lineno,
                    reason: format!("unknown key '{other}'"),
                })
            }
        }
    }

    let benchmark = benchmark.ok_or_else(|| ConfigError::Validation {
        field: "benchmark".into(),
        reason: "missing".into(),
    })?;
    let invalid = |field: &str, reason: String| ConfigError::Validation {
        field: field.into(),
        reason,
    };
    if !KNOWN_BENCHMARKS.contains(&benchmark.as_str()) {
        return Err(invalid(
            "benchmark",
            format!("unknown '{benchmark}', expected one of {KNOWN_BENCHMARKS:?}"),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(invalid("epsilon", format!("{epsilon} not > 0")));
    }
    if !(0.0 < delta1 && delta1 < 1.0) {
        return Err(invalid("delta1", format!("{delta1} not in (0,1)")));
    }
    if !(delta2 > 1.0) {
        return Err(invalid("delta2", format!("{delta2} not > 1")));
    }
    if !(0.0 < theta && theta < 1.0) {
        return Err(invalid("theta", format!("{theta} not in (0,1)")));
    }
    if !(t_final > 0.0) {
        return Err(invalid("T", format!("{t_final} not > 0")));
    }
    if !(k0 > 0.0 && k0 <= t_final) {
        return Err(invalid("k0", format!("{k0} not in (0, T]")));
    }
    if let Some(km) = k_min {
        if !(km > 0.0 && km <= k0) {
            return Err(invalid("k_min", format!("{km} not in (0, k0]")));
        }
    }
    if let Some(km) = k_max {
        if !(km >= k0) {
            return Err(invalid("k_max", format!("{km} < k0")));
        }
    }
    if resolution == 0 {
        return Err(invalid("resolution", "must be >= 1".into()));
    }
    for (name, list) in [("study_ks", &study_ks), ("trace_ks", &trace_ks)] {
        if let Some(ks) = list {
            if ks.is_empty() || ks.iter().any(|&k| !(k > 0.0)) {
                return Err(invalid(name, "needs a list of positive steps".into()));
            }
        }
    }

    let halvings = |k: f64, n: usize| -> Vec<f64> {
        (0..n).map(|i| k / f64::powi(2.0, i as i32)).collect()
    };
    Ok(RunConfig {
        benchmark,
        epsilon,
        mode,
        tol_time,
        tol_space,
        tol_coarsen,
        delta1,
        delta2,
        theta,
        t_final,
        k0,
        k_min,
        k_max,
        max_refine_loops,
        resolution,
        output_dir,
        snapshot_every,
        study_ks: study_ks.unwrap_or_else(|| halvings(k0, 3)),
        trace_ks: trace_ks.unwrap_or_else(|| halvings(k0, 4)),
    })
}
