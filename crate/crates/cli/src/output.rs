use std::io::Write;

use serde::Serialize;

/// Writes `value` as one JSON line. Objects go through `serde_json::Value`,
/// whose maps are ordered by key, so the output is stable.
pub fn emit(out: &mut impl Write, value: &impl Serialize) -> std::io::Result<()> {
    let v = serde_json::to_value(value).map_err(std::io::Error::other)?;
    let line = serde_json::to_string(&v).map_err(std::io::Error::other)?;
    writeln!(out, "{line}")
}
