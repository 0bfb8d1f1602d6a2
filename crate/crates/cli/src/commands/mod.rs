pub mod fit;
pub mod penalty_table;
pub mod prox_check;
pub mod simulate;

use std::io::Write;

use crate::{runtime_err, CliResult};

/// Metadata header written at the top of every output file: version, the
/// fully resolved configuration and (where applicable) the seed, so a run can
/// be reproduced from its own output. Lines start with `#` so CSV readers can
/// skip them.
pub fn write_metadata_header<W: Write>(
    out: &mut W,
    command: &str,
    config: &serde_json::Value,
) -> CliResult<()> {
    writeln!(out, "# cdfreg {}", env!("CARGO_PKG_VERSION")).map_err(runtime_err)?;
    writeln!(out, "# command: {command}").map_err(runtime_err)?;
    writeln!(out, "# config: {config}").map_err(runtime_err)?;
    Ok(())
}
