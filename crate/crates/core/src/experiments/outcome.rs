//! Per-replica outcome rows and estimate rows with their CSV encodings.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ld::Closure;
use crate::error::{Error, Result};

pub const OUTCOMES_SCHEMA: &str = "bbmlab outcomes v1";
pub const ESTIMATES_SCHEMA: &str = "bbmlab estimates v1";

/// Fixed outcome columns; one `event_<i>` column per configured kappa
/// follows them.
pub const OUTCOME_COLUMNS: [&str; 13] = [
    "replica_id",
    "env_seed",
    "t",
    "population",
    "n_t",
    "n_t_fine",
    "normalized_mass",
    "extinct",
    "range_radius",
    "censored",
    "closure",
    "clearing_radius",
    "hit",
];

pub const ESTIMATE_COLUMNS: [&str; 8] = [
    "estimand",
    "t",
    "point",
    "ci_low",
    "ci_high",
    "replicas_used",
    "censored",
    "note",
];

/// One row per replica and horizon. Fields that do not apply to a mode are
/// `None` and written as empty cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaOutcome {
    pub replica_id: u64,
    pub env_seed: u64,
    pub t: f64,
    pub population: Option<u64>,
    pub n_t: Option<u64>,
    pub n_t_fine: Option<u64>,
    pub normalized_mass: Option<f64>,
    pub extinct: Option<bool>,
    pub range_radius: Option<f64>,
    pub censored: bool,
    pub closure: Option<Closure>,
    pub clearing_radius: Option<f64>,
    pub hit: Option<bool>,
    /// `{n_t < gamma_t p_t e^{beta t}}`, one entry per kappa.
    pub events: Vec<bool>,
}

impl ReplicaOutcome {
    pub fn new(replica_id: u64, env_seed: u64, t: f64) -> Self {
        ReplicaOutcome {
            replica_id,
            env_seed,
            t,
            population: None,
            n_t: None,
            n_t_fine: None,
            normalized_mass: None,
            extinct: None,
            range_radius: None,
            censored: false,
            closure: None,
            clearing_radius: None,
            hit: None,
            events: Vec::new(),
        }
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn parse_err(message: impl Into<String>) -> Error {
    Error::Format {
        what: "outcomes csv",
        message: message.into(),
    }
}

fn parse_opt<T: std::str::FromStr>(s: &str, column: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse()
        .map(Some)
        .map_err(|e| parse_err(format!("column {column}: {e}")))
}

fn parse_flag(s: &str, column: &str) -> Result<bool> {
    match s {
        "1" => Ok(true),
        "0" => Ok(false),
        other => Err(parse_err(format!("column {column}: expected 0 or 1, got {other:?}"))),
    }
}

fn parse_closure(s: &str) -> Result<Option<Closure>> {
    Ok(match s {
        "" => None,
        "horizon" => Some(Closure::Horizon),
        "extinct" => Some(Closure::Extinct),
        "decided" => Some(Closure::Decided),
        "cap" => Some(Closure::Cap),
        other => return Err(parse_err(format!("unknown closure {other:?}"))),
    })
}

impl ReplicaOutcome {
    pub fn to_record(&self) -> Vec<String> {
        let mut rec = vec![
            self.replica_id.to_string(),
            self.env_seed.to_string(),
            self.t.to_string(),
            opt(&self.population),
            opt(&self.n_t),
            opt(&self.n_t_fine),
            opt(&self.normalized_mass),
            self.extinct.map(flag).unwrap_or_default(),
            opt(&self.range_radius),
            flag(self.censored),
            self.closure.map(|c| c.as_str().to_string()).unwrap_or_default(),
            opt(&self.clearing_radius),
            self.hit.map(flag).unwrap_or_default(),
        ];
        rec.extend(self.events.iter().map(|&e| flag(e)));
        rec
    }

    pub fn from_record(rec: &[String]) -> Result<Self> {
        if rec.len() < OUTCOME_COLUMNS.len() {
            return Err(parse_err(format!("row has {} cells", rec.len())));
        }
        let req = |i: usize| -> Result<&str> { Ok(rec[i].as_str()) };
        Ok(ReplicaOutcome {
            replica_id: parse_opt(req(0)?, "replica_id")?.ok_or_else(|| parse_err("missing replica_id"))?,
            env_seed: parse_opt(req(1)?, "env_seed")?.ok_or_else(|| parse_err("missing env_seed"))?,
            t: parse_opt(req(2)?, "t")?.ok_or_else(|| parse_err("missing t"))?,
            population: parse_opt(req(3)?, "population")?,
            n_t: parse_opt(req(4)?, "n_t")?,
            n_t_fine: parse_opt(req(5)?, "n_t_fine")?,
            normalized_mass: parse_opt(req(6)?, "normalized_mass")?,
            extinct: if rec[7].is_empty() { None } else { Some(parse_flag(&rec[7], "extinct")?) },
            range_radius: parse_opt(req(8)?, "range_radius")?,
            censored: parse_flag(&rec[9], "censored")?,
            closure: parse_closure(&rec[10])?,
            clearing_radius: parse_opt(req(11)?, "clearing_radius")?,
            hit: if rec[12].is_empty() { None } else { Some(parse_flag(&rec[12], "hit")?) },
            events: rec[13..]
                .iter()
                .enumerate()
                .map(|(i, s)| parse_flag(s, &format!("event_{i}")))
                .collect::<Result<_>>()?,
        })
    }
}

/// One aggregated estimate. `t` is empty for rows that pool horizons.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRow {
    pub estimand: String,
    pub t: Option<f64>,
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub replicas_used: u64,
    pub censored: u64,
    pub note: String,
}

impl EstimateRow {
    /// A reference value with a degenerate interval.
    pub fn exact(estimand: impl Into<String>, t: Option<f64>, value: f64, note: impl Into<String>) -> Self {
        EstimateRow {
            estimand: estimand.into(),
            t,
            point: value,
            ci_low: value,
            ci_high: value,
            replicas_used: 0,
            censored: 0,
            note: note.into(),
        }
    }

    fn to_record(&self) -> Vec<String> {
        vec![
            self.estimand.clone(),
            opt(&self.t),
            self.point.to_string(),
            self.ci_low.to_string(),
            self.ci_high.to_string(),
            self.replicas_used.to_string(),
            self.censored.to_string(),
            self.note.clone(),
        ]
    }
}

pub(crate) fn outcome_header(mode: &str, config_hash: &str, kappa: &[f64]) -> String {
    let kappas: Vec<String> = kappa.iter().map(|k| k.to_string()).collect();
    format!(
        "# {OUTCOMES_SCHEMA} mode={mode} config_hash={config_hash} kappa={}",
        kappas.join(";")
    )
}

pub(crate) fn outcome_columns(n_events: usize) -> Vec<String> {
    let mut cols: Vec<String> = OUTCOME_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((0..n_events).map(|i| format!("event_{i}")));
    cols
}

fn csv_line(cells: &[String]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(cells)
        .map_err(|e| parse_err(e.to_string()))?;
    let bytes = w.into_inner().map_err(|e| parse_err(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Encodes one outcome as a CSV line (with trailing newline).
pub(crate) fn outcome_line(o: &ReplicaOutcome) -> Result<String> {
    csv_line(&o.to_record())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub(crate) fn render_outcomes(header: &str, n_events: usize, lines: &[String]) -> Result<String> {
    let mut text = String::new();
    text.push_str(header);
    text.push('\n');
    text.push_str(&csv_line(&outcome_columns(n_events))?);
    for line in lines {
        text.push_str(line);
    }
    Ok(text)
}

/// Renders estimate rows with the versioned header line.
pub fn render_estimates(mode: &str, config_hash: &str, rows: &[EstimateRow]) -> Result<String> {
    let mut text = format!("# {ESTIMATES_SCHEMA} mode={mode} config_hash={config_hash}\n");
    let cols: Vec<String> = ESTIMATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    text.push_str(&csv_line(&cols)?);
    for row in rows {
        text.push_str(&csv_line(&row.to_record())?);
    }
    Ok(text)
}

/// Parses CSV rows (without header) into outcomes.
pub(crate) fn parse_outcome_lines(text: &str) -> Result<Vec<ReplicaOutcome>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    reader
        .records()
        .map(|r| {
            let rec = r.map_err(|e| parse_err(e.to_string()))?;
            let cells: Vec<String> = rec.iter().map(str::to_string).collect();
            ReplicaOutcome::from_record(&cells)
        })
        .collect()
}

/// Reads an `outcomes.csv` written by the harness.
pub fn read_outcomes_csv(path: &Path) -> Result<Vec<ReplicaOutcome>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.starts_with(&format!("# {OUTCOMES_SCHEMA}")) => {}
        _ => return Err(parse_err("missing versioned header line")),
    }
    let columns = lines.next().ok_or_else(|| parse_err("missing column row"))?;
    if !columns.starts_with(OUTCOME_COLUMNS[0]) {
        return Err(parse_err("unexpected column row"));
    }
    let body: Vec<&str> = lines.collect();
    parse_outcome_lines(&(body.join("\n") + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn outcome_rows_round_trip(
            id in any::<u64>(),
            t in 0.0f64..1e3,
            pop in proptest::option::of(any::<u64>()),
            mass in proptest::option::of(-1e300f64..1e300),
            events in proptest::collection::vec(any::<bool>(), 0..4),
            extinct in proptest::option::of(any::<bool>()),
        ) {
            let mut o = ReplicaOutcome::new(id, 3, t);
            o.population = pop;
            o.normalized_mass = mass;
            o.extinct = extinct;
            o.closure = Some(Closure::Decided);
            o.clearing_radius = Some(f64::INFINITY);
            o.events = events;
            let line = outcome_line(&o).unwrap();
            let back = parse_outcome_lines(&line).unwrap();
            prop_assert_eq!(back, vec![o]);
        }
    }
}
