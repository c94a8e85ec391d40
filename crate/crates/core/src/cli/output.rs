use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ConfigEcho, RunConfig};
use crate::error::{Error, Result};
use crate::metrics::EhFeatures;
use crate::protein::{parse_pdb, FeatureRow, ProteinModel};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: &str =
    "protein,chain,residue,EH_inf_0,EH_inf_1,EH_inf_2,EH_1_0,EH_1_1,EH_1_2,EH_2_0,EH_2_1,EH_2_2,bfactor";

/// `%.{digits}g`-style formatting: `digits` significant digits, trailing
/// zeros dropped, scientific notation for very small or large magnitudes.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -5 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{:.*}", (digits as i32 - 1 - exp) as usize, v))
    }
}

/// 64-bit FNV-1a, used to fingerprint input files.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InputStamp {
    pub path: String,
    pub fnv1a64: String,
}

/// Header embedded in every output file.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<InputStamp>,
    pub config: ConfigEcho,
}

impl Provenance {
    pub fn new(command: impl Into<String>, inputs: Vec<InputStamp>, cfg: &RunConfig) -> Self {
        Self {
            tool: "evohom",
            version: VERSION,
            command: command.into(),
            inputs,
            config: cfg.echo(),
        }
    }

    /// The same information as `# ` comment lines.
    pub fn comment_lines(&self) -> String {
        let mut out = format!("# {} {}\n# command: {}\n", self.tool, self.version, self.command);
        for i in &self.inputs {
            out.push_str(&format!("# input: {} fnv1a64={}\n", i.path, i.fnv1a64));
        }
        for (k, v) in &self.config.0 {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }
}

/// A parsed input file.
pub enum Input {
    Points(Vec<Vec<f64>>),
    Pdb(Vec<ProteinModel>),
}

pub fn is_pdb_path(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("pdb" | "ent")
    )
}

pub fn input_error(path: &Path, message: impl Into<String>) -> Error {
    Error::Input {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_points(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let p = body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| input_error(path, format!("line {}: expected finite coordinates", n + 1)))?;
        if let Some(first) = points.first() {
            if first.len() != p.len() {
                return Err(input_error(
                    path,
                    format!("line {}: {} coordinates, earlier points have {}", n + 1, p.len(), first.len()),
                ));
            }
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(input_error(path, "no points"));
    }
    Ok(points)
}

/// Reads a points file (one point per line, whitespace or comma separated)
/// or, for `.pdb`/`.ent` files, a protein structure.
pub fn load_input(path: &Path) -> Result<(Input, InputStamp)> {
    let bytes = fs::read(path).map_err(|e| input_error(path, e.to_string()))?;
    let stamp = InputStamp {
        path: path.display().to_string(),
        fnv1a64: format!("{:016x}", fnv1a64(&bytes)),
    };
    let text = String::from_utf8_lossy(&bytes);
    let input = if is_pdb_path(path) {
        Input::Pdb(parse_pdb(&text).map_err(|e| input_error(path, e.to_string()))?)
    } else {
        Input::Points(parse_points(path, &text)?)
    };
    Ok((input, stamp))
}

/// File stem used to name outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string()
}

/// One CSV feature row. Missing values are empty cells.
pub fn csv_row(protein: &str, chain: &str, residue: &str, features: &EhFeatures, bfactor: Option<f64>) -> String {
    let mut cells = vec![protein.to_string(), chain.to_string(), residue.to_string()];
    cells.extend(features.values.iter().map(f64::to_string));
    cells.push(bfactor.map(|b| b.to_string()).unwrap_or_default());
    cells.join(",") + "\n"
}

pub fn feature_csv(provenance: &Provenance, rows: &[String]) -> String {
    let mut out = provenance.comment_lines();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(r);
    }
    out
}

pub fn protein_csv(provenance: &Provenance, protein: &str, rows: &[FeatureRow]) -> String {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| csv_row(protein, &r.chain.to_string(), &r.residue, &r.features, r.bfactor))
        .collect();
    feature_csv(provenance, &lines)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes every file or, on the first failure, leaves the named targets
/// untouched. Each file is staged next to its target and renamed into place.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| input_error(dir, e.to_string()))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| input_error(dir, e.to_string()))?;
        tmp.write_all(contents.as_bytes())
            .and_then(|_| tmp.flush())
            .map_err(|e| input_error(dir, e.to_string()))?;
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, target) in staged {
        tmp.persist(&target).map_err(|e| input_error(&target, e.error.to_string()))?;
        written.push(target);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(format_significant(0.0, 12), "0");
        assert_eq!(format_significant(8.0 * 3f64.sqrt(), 12), "13.8564064606");
        assert_eq!(format_significant(1.0, 12), "1");
        assert_eq!(format_significant(0.5, 12), "0.5");
        assert_eq!(format_significant(1.5e-7, 12), "1.5e-07");
        assert_eq!(format_significant(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_significant(-2.0 / 3.0, 12), "-0.666666666667");
        assert_eq!(format_significant(99999999999.99, 12), "100000000000");
        assert_eq!(format_significant(999999999999.5, 12), "1e+12");
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn points_parsing() {
        let p = parse_points(Path::new("x"), "# hexagon\n0 0 0\n1, 0, 0 # second\n\n").unwrap();
        assert_eq!(p, vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]);
        assert!(parse_points(Path::new("x"), "0 0\n1 2 3\n").is_err());
        assert!(parse_points(Path::new("x"), "").is_err());
        assert!(parse_points(Path::new("x"), "1 nan\n").is_err());
    }

    #[test]
    fn atomic_writes() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let written = write_all(&out, &[("a.txt".into(), "x".into())]).unwrap();
        assert_eq!(fs::read_to_string(&written[0]).unwrap(), "x");
        assert_eq!(fs::read_dir(&out).unwrap().count(), 1);
    }
}
