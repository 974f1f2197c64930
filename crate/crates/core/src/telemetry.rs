//! Raw telemetry parsing, tumbling-window aggregation and noise labeling.
//!
//! Raw samples arrive as CSV rows of (timestamp, server CPU, bandwidth in/out,
//! noise-VM CPU). They are aggregated into fixed-length tumbling windows whose
//! per-feature arithmetic means form the instances consumed by the classifiers.
//! The noise-VM CPU column is ground truth only: it drives the binary label and
//! is never a model input.

use thiserror::Error;

/// Header of the raw telemetry CSV format.
pub const RAW_CSV_HEADER: &str = "timestamp_s,cpu_util_pct,bw_in_bps,bw_out_bps,noise_cpu_pct";
/// Header of the labeled dataset CSV format.
pub const DATASET_CSV_HEADER: &str = "window_start_s,cpu_util_pct,bw_in_bps,bw_out_bps,label";
/// Header of the aggregated-windows CSV format (noise column retained, pre-label).
pub const WINDOWS_CSV_HEADER: &str =
    "window_start_s,cpu_util_pct,bw_in_bps,bw_out_bps,noise_cpu_pct,sample_count";

/// Default noise-VM CPU threshold (percent) above which a window is labeled noisy.
pub const DEFAULT_NOISE_THRESHOLD: f64 = 5.0;
/// Default aggregation window length in seconds.
pub const DEFAULT_WINDOW_LEN: f64 = 30.0;

pub type Label = i8;

#[derive(Debug, Error)]
pub enum TelemetryError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: timestamp {current} does not increase over {previous}")]
    Ordering {
        line: usize,
        previous: f64,
        current: f64,
    },
    #[error("samples are not ordered by timestamp (index {index})")]
    Unordered { index: usize },
    #[error("window length must be positive, got {0}")]
    BadWindowLen(f64),
    #[error("noise threshold must lie in (0, 100), got {0}")]
    BadThreshold(f64),
}

/// One timestamped telemetry reading of the monitored server plus the
/// noise VMs' CPU (ground-truth indicator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawSample {
    pub timestamp: f64,
    pub cpu_util: f64,
    pub bw_in: f64,
    pub bw_out: f64,
    pub noise_cpu: f64,
}

impl RawSample {
    fn check_ranges(&self, line: usize) -> Result<(), TelemetryError> {
        let bad = |msg: String| TelemetryError::Parse { line, msg };
        if !(0.0..=100.0).contains(&self.cpu_util) {
            return Err(bad(format!("cpu_util_pct {} outside [0,100]", self.cpu_util)));
        }
        if !(0.0..=100.0).contains(&self.noise_cpu) {
            return Err(bad(format!(
                "noise_cpu_pct {} outside [0,100]",
                self.noise_cpu
            )));
        }
        if self.bw_in < 0.0 || self.bw_out < 0.0 {
            return Err(bad("negative bandwidth".to_string()));
        }
        if self.timestamp < 0.0 || !self.timestamp.is_finite() {
            return Err(bad(format!("bad timestamp {}", self.timestamp)));
        }
        Ok(())
    }
}

/// One aggregated window before labeling: feature means plus the mean
/// noise-VM CPU that will decide the label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    /// Means of (cpu_util, bw_in, bw_out) over the contributing samples.
    pub features: [f64; 3],
    pub mean_noise_cpu: f64,
    pub sample_count: usize,
}

/// One labeled 30-second instance: 3 feature means and a binary label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instance {
    pub window_start: f64,
    pub features: [f64; 3],
    /// +1 = noisy neighbor present, -1 = quiet.
    pub label: Label,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub instances: Vec<Instance>,
    pub provenance: String,
}

fn parse_field(s: &str, line: usize, name: &str) -> Result<f64, TelemetryError> {
    s.trim().parse::<f64>().map_err(|_| TelemetryError::Parse {
        line,
        msg: format!("non-numeric {name} field {s:?}"),
    })
}

/// Parses the raw telemetry CSV format. Timestamps must be strictly increasing.
pub fn parse_samples(text: &str) -> Result<Vec<RawSample>, TelemetryError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == RAW_CSV_HEADER => {}
        other => {
            return Err(TelemetryError::Parse {
                line: 1,
                msg: format!(
                    "expected header {RAW_CSV_HEADER:?}, got {:?}",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    let mut out: Vec<RawSample> = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(TelemetryError::Parse {
                line,
                msg: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        let sample = RawSample {
            timestamp: parse_field(fields[0], line, "timestamp_s")?,
            cpu_util: parse_field(fields[1], line, "cpu_util_pct")?,
            bw_in: parse_field(fields[2], line, "bw_in_bps")?,
            bw_out: parse_field(fields[3], line, "bw_out_bps")?,
            noise_cpu: parse_field(fields[4], line, "noise_cpu_pct")?,
        };
        sample.check_ranges(line)?;
        if let Some(prev) = out.last() {
            if sample.timestamp <= prev.timestamp {
                return Err(TelemetryError::Ordering {
                    line,
                    previous: prev.timestamp,
                    current: sample.timestamp,
                });
            }
        }
        out.push(sample);
    }
    Ok(out)
}

/// Emits the raw telemetry CSV format. Round-trips bit-exactly through
/// `parse_samples` (shortest round-trip float formatting).
pub fn emit_samples_csv(samples: &[RawSample]) -> String {
    let mut out = String::from(RAW_CSV_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.timestamp, s.cpu_util, s.bw_in, s.bw_out, s.noise_cpu
        ));
    }
    out
}

/// Aggregates ordered samples into tumbling windows of `window_len` seconds,
/// anchored at `floor(first_timestamp / window_len) * window_len`. Each window
/// is the arithmetic mean of the samples in [start, start + window_len);
/// windows with no samples are omitted.
pub fn aggregate_windows(
    samples: &[RawSample],
    window_len: f64,
) -> Result<Vec<Window>, TelemetryError> {
    if !(window_len > 0.0) || !window_len.is_finite() {
        return Err(TelemetryError::BadWindowLen(window_len));
    }
    let Some(first) = samples.first() else {
        return Ok(Vec::new());
    };
    for (i, pair) in samples.windows(2).enumerate() {
        if pair[1].timestamp <= pair[0].timestamp {
            return Err(TelemetryError::Unordered { index: i + 1 });
        }
    }
    let anchor = (first.timestamp / window_len).floor() * window_len;
    let mut out: Vec<Window> = Vec::new();
    let mut current_idx: i64 = -1;
    let mut sums = [0.0f64; 4];
    let mut count = 0usize;
    let flush = |idx: i64, sums: &[f64; 4], count: usize, out: &mut Vec<Window>| {
        if count > 0 {
            let n = count as f64;
            out.push(Window {
                start: anchor + idx as f64 * window_len,
                features: [sums[0] / n, sums[1] / n, sums[2] / n],
                mean_noise_cpu: sums[3] / n,
                sample_count: count,
            });
        }
    };
    for s in samples {
        let idx = ((s.timestamp - anchor) / window_len).floor() as i64;
        if idx != current_idx {
            flush(current_idx, &sums, count, &mut out);
            current_idx = idx;
            sums = [0.0; 4];
            count = 0;
        }
        sums[0] += s.cpu_util;
        sums[1] += s.bw_in;
        sums[2] += s.bw_out;
        sums[3] += s.noise_cpu;
        count += 1;
    }
    flush(current_idx, &sums, count, &mut out);
    Ok(out)
}

/// Attaches binary labels: +1 iff the window's mean noise-VM CPU is at least
/// `noise_threshold` (percent), else -1. The noise column is dropped from the
/// instance features.
pub fn label_windows(
    windows: &[Window],
    noise_threshold: f64,
) -> Result<Dataset, TelemetryError> {
    if !(noise_threshold > 0.0 && noise_threshold < 100.0) {
        return Err(TelemetryError::BadThreshold(noise_threshold));
    }
    let instances = windows
        .iter()
        .map(|w| Instance {
            window_start: w.start,
            features: w.features,
            label: if w.mean_noise_cpu >= noise_threshold { 1 } else { -1 },
            sample_count: w.sample_count,
        })
        .collect();
    Ok(Dataset {
        instances,
        provenance: String::new(),
    })
}

/// Returns (total instance count, positive-label count).
pub fn dataset_summary(d: &Dataset) -> (usize, usize) {
    let positives = d.instances.iter().filter(|i| i.label == 1).count();
    (d.instances.len(), positives)
}

/// Emits the labeled dataset CSV format.
pub fn emit_dataset_csv(d: &Dataset) -> String {
    let mut out = String::from(DATASET_CSV_HEADER);
    out.push('\n');
    for i in &d.instances {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            i.window_start, i.features[0], i.features[1], i.features[2], i.label
        ));
    }
    out
}

/// Parses the labeled dataset CSV format. `sample_count` is not part of the
/// on-disk format and is restored as 1.
pub fn parse_dataset_csv(text: &str) -> Result<Dataset, TelemetryError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == DATASET_CSV_HEADER => {}
        other => {
            return Err(TelemetryError::Parse {
                line: 1,
                msg: format!(
                    "expected header {DATASET_CSV_HEADER:?}, got {:?}",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    let mut instances = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 5 {
            return Err(TelemetryError::Parse {
                line,
                msg: format!("expected 5 columns, got {}", fields.len()),
            });
        }
        let label = match fields[4].trim() {
            "1" | "+1" => 1,
            "-1" => -1,
            other => {
                return Err(TelemetryError::Parse {
                    line,
                    msg: format!("label must be -1 or 1, got {other:?}"),
                })
            }
        };
        instances.push(Instance {
            window_start: parse_field(fields[0], line, "window_start_s")?,
            features: [
                parse_field(fields[1], line, "cpu_util_pct")?,
                parse_field(fields[2], line, "bw_in_bps")?,
                parse_field(fields[3], line, "bw_out_bps")?,
            ],
            label,
            sample_count: 1,
        });
    }
    Ok(Dataset {
        instances,
        provenance: String::new(),
    })
}

/// Emits the aggregated-windows CSV (noise column retained), input of the
/// dependence analysis.
pub fn emit_windows_csv(windows: &[Window]) -> String {
    let mut out = String::from(WINDOWS_CSV_HEADER);
    out.push('\n');
    for w in windows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            w.start, w.features[0], w.features[1], w.features[2], w.mean_noise_cpu, w.sample_count
        ));
    }
    out
}

/// Parses the aggregated-windows CSV.
pub fn parse_windows_csv(text: &str) -> Result<Vec<Window>, TelemetryError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == WINDOWS_CSV_HEADER => {}
        other => {
            return Err(TelemetryError::Parse {
                line: 1,
                msg: format!(
                    "expected header {WINDOWS_CSV_HEADER:?}, got {:?}",
                    other.map(|(_, h)| h).unwrap_or("")
                ),
            })
        }
    }
    let mut windows = Vec::new();
    for (idx, row) in lines {
        let line = idx + 1;
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 6 {
            return Err(TelemetryError::Parse {
                line,
                msg: format!("expected 6 columns, got {}", fields.len()),
            });
        }
        let sample_count: usize =
            fields[5].trim().parse().map_err(|_| TelemetryError::Parse {
                line,
                msg: format!("bad sample_count {:?}", fields[5]),
            })?;
        if sample_count == 0 {
            return Err(TelemetryError::Parse {
                line,
                msg: "sample_count must be >= 1".to_string(),
            });
        }
        windows.push(Window {
            start: parse_field(fields[0], line, "window_start_s")?,
            features: [
                parse_field(fields[1], line, "cpu_util_pct")?,
                parse_field(fields[2], line, "bw_in_bps")?,
                parse_field(fields[3], line, "bw_out_bps")?,
            ],
            mean_noise_cpu: parse_field(fields[4], line, "noise_cpu_pct")?,
            sample_count,
        });
    }
    Ok(windows)
}
