//! Plain-text environment files.
//!
//! ```text
//! bbmlab-env v1,<dim>,<nu>,<trap_radius>,<env_seed>,<lo_1>,<hi_1>,...,<lo_d>,<hi_d>
//! <x_1>,...,<x_d>
//! ...
//! ```
//!
//! The box is the query domain; atoms may lie in the domain padded by the
//! trap radius. Floats are written in shortest round-trip form, so a loaded
//! field answers every query bit-identically.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TrapField;
use crate::error::{Error, Result};
use crate::geometry::{AxisBox, Point};

pub const ENV_FORMAT_TAG: &str = "bbmlab-env v1";

fn fmt_err(message: impl Into<String>) -> Error {
    Error::Format {
        what: "environment file",
        message: message.into(),
    }
}

pub(crate) fn render(field: &TrapField) -> String {
    let mut out = format!(
        "{ENV_FORMAT_TAG},{},{},{},{}",
        field.dim(),
        field.intensity(),
        field.trap_radius(),
        field.env_seed()
    );
    for (lo, hi) in field.domain().lo.iter().zip(&field.domain().hi) {
        let _ = write!(out, ",{lo},{hi}");
    }
    out.push('\n');
    for atom in field.atoms() {
        let row: Vec<String> = atom.iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub(crate) fn parse(text: &str) -> Result<TrapField> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| fmt_err("file is empty"))?;
    let fields: Vec<&str> = header.split(',').map(str::trim).collect();
    if fields.first() != Some(&ENV_FORMAT_TAG) {
        return Err(fmt_err(format!("expected header tag `{ENV_FORMAT_TAG}`")));
    }
    let num = |i: usize, name: &str| -> Result<f64> {
        fields
            .get(i)
            .ok_or_else(|| fmt_err(format!("header is missing {name}")))?
            .parse::<f64>()
            .map_err(|e| fmt_err(format!("bad {name}: {e}")))
    };
    let dim: usize = fields
        .get(1)
        .ok_or_else(|| fmt_err("header is missing dim"))?
        .parse()
        .map_err(|e| fmt_err(format!("bad dim: {e}")))?;
    let nu = num(2, "nu")?;
    let a = num(3, "trap_radius")?;
    let env_seed: u64 = fields
        .get(4)
        .ok_or_else(|| fmt_err("header is missing env_seed"))?
        .parse()
        .map_err(|e| fmt_err(format!("bad env_seed: {e}")))?;
    if fields.len() != 5 + 2 * dim {
        return Err(fmt_err(format!(
            "header has {} fields, expected {} for dimension {dim}",
            fields.len(),
            5 + 2 * dim
        )));
    }
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for k in 0..dim {
        lo.push(num(5 + 2 * k, "box")?);
        hi.push(num(6 + 2 * k, "box")?);
    }
    let domain = AxisBox::new(lo, hi)?;
    let mut atoms = Vec::new();
    for (row, line) in lines.enumerate() {
        let coords = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| fmt_err(format!("atom row {}: {e}", row + 1)))?;
        if coords.len() != dim {
            return Err(fmt_err(format!(
                "atom row {} has {} coordinates, expected {dim}",
                row + 1,
                coords.len()
            )));
        }
        atoms.push(Point::from_slice(&coords)?);
    }
    TrapField::from_atoms(dim, nu, a, domain, atoms, env_seed)
}

pub fn write_env_file(field: &TrapField, path: &Path) -> Result<()> {
    fs::write(path, render(field)).map_err(|e| Error::io(path, e))
}

pub fn read_env_file(path: &Path) -> Result<TrapField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}
