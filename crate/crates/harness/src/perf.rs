//! The `perf stat -x,` command line and its machine-readable output, plus the
//! two-line stdout protocol of the kernel driver.

use std::ffi::OsString;
use std::path::Path;

use rvvprobe_core::{EventKind, PartialCounts};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("counter output is empty")]
    Empty,
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("no counter row for selector `{0}`")]
    MissingRow(String),
    #[error("driver output lacks `{0}=`")]
    MissingField(&'static str),
}

/// Counter values read from one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PerfReading {
    pub counts: PartialCounts,
    pub multiplexed: Vec<EventKind>,
    pub not_counted: Vec<EventKind>,
}

/// Argument vector for one counted and pinned run.
pub fn perf_command(
    taskset: &Path,
    perf: &Path,
    cpus: &str,
    selectors: &[(EventKind, String)],
    binary: &Path,
    args: &[String],
) -> Vec<OsString> {
    let mut cmd: Vec<OsString> = vec![
        taskset.into(),
        "-c".into(),
        cpus.into(),
        perf.into(),
        "stat".into(),
        "-x,".into(),
    ];
    for (_, sel) in selectors {
        cmd.push("-e".into());
        cmd.push(sel.into());
    }
    cmd.push("--".into());
    cmd.push(binary.into());
    cmd.extend(args.iter().map(OsString::from));
    cmd
}

fn base_name(sel: &str) -> &str {
    // perf may echo modifiers such as `:u` that were not in the request.
    match sel.rfind(':') {
        Some(i) if !sel[i..].contains('/') => &sel[..i],
        _ => sel,
    }
}

/// Parse `perf stat -x,` output against the selectors that were requested,
/// in request order. Rows are matched by event name and fall back to position.
pub fn parse_perf_output(text: &str, selectors: &[(EventKind, String)]) -> Result<PerfReading, ParseError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 3 {
            return Err(ParseError::Malformed {
                line: idx + 1,
                reason: format!("expected at least 3 fields, found {}", fields.len()),
            });
        }
        let value = match fields[0].trim() {
            "<not counted>" | "<not supported>" => None,
            v => Some(v.parse::<u64>().map_err(|_| ParseError::Malformed {
                line: idx + 1,
                reason: format!("counter value `{v}` is not a non-negative integer"),
            })?),
        };
        let pct = match fields.get(4).map(|s| s.trim()) {
            None | Some("") => None,
            Some(p) => Some(p.parse::<f64>().map_err(|_| ParseError::Malformed {
                line: idx + 1,
                reason: format!("percentage `{p}` is not a number"),
            })?),
        };
        rows.push((idx + 1, value, fields[2].trim().to_string(), pct));
    }
    if rows.is_empty() {
        return Err(ParseError::Empty);
    }
    let mut used = vec![false; rows.len()];
    let mut out = PerfReading::default();
    for (pos, (event, sel)) in selectors.iter().enumerate() {
        let by_name = rows
            .iter()
            .enumerate()
            .position(|(i, r)| !used[i] && base_name(&r.2) == base_name(sel));
        let i = match by_name {
            Some(i) => i,
            None if pos < rows.len() && !used[pos] => pos,
            None => return Err(ParseError::MissingRow(sel.clone())),
        };
        used[i] = true;
        let (_, value, _, pct) = &rows[i];
        match value {
            Some(v) => out.counts[*event] = Some(*v),
            None => out.not_counted.push(*event),
        }
        if value.is_some() && pct.is_some_and(|p| p < 100.0) {
            out.multiplexed.push(*event);
        }
    }
    Ok(out)
}

/// Values printed by the kernel driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriverReport {
    pub elapsed_ns: u64,
    pub iterations: u64,
}

/// Read `elapsed_ns=<u64>` and `iterations=<u64>` lines. Other lines are ignored.
pub fn parse_driver_output(stdout: &str) -> Result<DriverReport, ParseError> {
    let mut elapsed = None;
    let mut iterations = None;
    for (idx, line) in stdout.lines().enumerate() {
        let slot = if let Some(v) = line.strip_prefix("elapsed_ns=") {
            Some((&mut elapsed, v))
        } else {
            line.strip_prefix("iterations=").map(|v| (&mut iterations, v))
        };
        if let Some((slot, v)) = slot {
            *slot = Some(v.parse::<u64>().map_err(|_| ParseError::Malformed {
                line: idx + 1,
                reason: format!("`{v}` is not a decimal u64"),
            })?);
        }
    }
    Ok(DriverReport {
        elapsed_ns: elapsed.ok_or(ParseError::MissingField("elapsed_ns"))?,
        iterations: iterations.ok_or(ParseError::MissingField("iterations"))?,
    })
}

/// Only the elapsed line, for applications that print it without the iteration line.
pub fn parse_elapsed_line(stdout: &str) -> Option<u64> {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix("elapsed_ns="))
        .and_then(|v| v.parse().ok())
}
