//! Machine-readable JSON reports and versioned file I/O for the CLI.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::surface::Surface;

pub const SCHEMA: &str = "ztangle/1";

/// Top-level report written to stdout by every command.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub details: Value,
}

impl Report {
    pub fn new(command: &str, pass: bool, tolerance: Option<f64>, details: Value) -> Report {
        Report { schema: SCHEMA, command: command.to_string(), pass, tolerance, details }
    }

    pub fn print(&self) {
        println!("{}", serde_json::to_string_pretty(self).expect("report serializes"));
    }
}

/// A complex number in report details, as [re, im].
pub fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

/// Why a command failed, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// exit 1: a verification ran and did not pass
    Failed,
    /// exit 2: bad flags or inconsistent inputs
    Usage(String),
    /// exit 3: a referenced file does not match its schema
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed => 1,
            CliError::Usage(_) => 2,
            CliError::Schema(_) => 3,
        }
    }
}

/// On-disk surface file: the surface plus the schema version tag.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub schema: String,
    pub surface: Surface,
}

pub fn load_surface(path: &Path) -> Result<Surface, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let file: SurfaceFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    if file.schema != SCHEMA {
        return Err(CliError::Schema(format!(
            "{}: schema {:?}, expected {:?}",
            path.display(),
            file.schema,
            SCHEMA
        )));
    }
    Ok(file.surface)
}

pub fn save_surface(path: &Path, surface: &Surface) -> Result<(), CliError> {
    let file = SurfaceFile { schema: SCHEMA.to_string(), surface: surface.clone() };
    let text = serde_json::to_string_pretty(&file).expect("surface serializes");
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Parse a "[i,j,k]" map key into coordinates.
pub fn parse_coord_key(key: &str) -> Result<crate::surface::Coord3, CliError> {
    let arr: [i64; 3] = serde_json::from_str(key)
        .map_err(|e| CliError::Schema(format!("bad coordinate key {key:?}: {e}")))?;
    Ok(crate::surface::Coord3(arr[0], arr[1], arr[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::build_flat_surface;

    #[test]
    fn surface_file_round_trip() {
        let s = build_flat_surface(2, 2, &[0.9, 1.0], &[0.1, 0.2]).unwrap();
        let dir = std::env::temp_dir().join("ztangle-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("s.json");
        save_surface(&path, &s).unwrap();
        let back = load_surface(&path).unwrap();
        assert_eq!(s.squares, back.squares);
        assert_eq!(s.p_values, back.p_values);
        assert_eq!(s.q_values, back.q_values);
        // canonical: a second save is byte-identical
        let first = std::fs::read(&path).unwrap();
        save_surface(&path, &back).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn schema_mismatch_rejected() {
        let dir = std::env::temp_dir().join("ztangle-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.json");
        std::fs::write(
            &path,
            r#"{"schema":"ztangle/9","surface":{"squares":[],"p_values":{},"q_values":{}}}"#,
        )
        .unwrap();
        assert!(matches!(load_surface(&path), Err(CliError::Schema(_))));
    }

    #[test]
    fn coord_keys() {
        assert_eq!(parse_coord_key("[1,2,3]").unwrap(), crate::surface::Coord3(1, 2, 3));
        assert!(parse_coord_key("nope").is_err());
    }
}
