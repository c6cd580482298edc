//! Text file helpers: score CSVs, masks, digests.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::failure::{Failure, Result};

pub const SCORE_HEADER: &str = "sample_index,score";

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Scores as CSV with 17 significant digits, enough to round-trip an f64.
pub fn scores_csv(scores: &[f64]) -> String {
    let mut out = String::with_capacity(scores.len() * 32);
    out.push_str(SCORE_HEADER);
    out.push('\n');
    for (i, s) in scores.iter().enumerate() {
        writeln!(out, "{i},{s:.16e}").expect("write to String");
    }
    out
}

/// Reads a score list. Accepts the score CSV written by `score` (header
/// optional) or a bare column of numbers.
pub fn parse_scores(text: &str, origin: &Path) -> Result<Vec<f64>> {
    let mut scores = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line == SCORE_HEADER) {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        let v: f64 = field.parse().map_err(|_| {
            Failure::validation(
                "BadScoreFile",
                format!(
                    "{}:{}: cannot parse score {field:?}",
                    origin.display(),
                    n + 1
                ),
            )
        })?;
        scores.push(v);
    }
    Ok(scores)
}

pub fn read_scores(path: &Path) -> Result<Vec<f64>> {
    parse_scores(&read_text(path)?, path)
}

/// Mask file: one `1` (ID) or `0` (OOD) per line.
pub fn parse_mask(text: &str, origin: &Path) -> Result<Vec<bool>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| match l.trim() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(Failure::validation(
                "BadMaskFile",
                format!(
                    "{}:{}: expected 0 or 1, got {other:?}",
                    origin.display(),
                    n + 1
                ),
            )),
        })
        .collect()
}

pub fn mask_text(mask: &[bool]) -> String {
    mask.iter()
        .map(|&m| if m { "1\n" } else { "0\n" })
        .collect()
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Failure::internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_round_trip() {
        let scores = [0.1, -1.0 / 3.0, 1e-300, 12345.678];
        let text = scores_csv(&scores);
        assert!(text.starts_with("sample_index,score\n0,1.0000000000000001e-1\n"));
        assert_eq!(parse_scores(&text, Path::new("x")).unwrap(), scores);
        assert_eq!(
            parse_scores("0.5\n0.25\n", Path::new("x")).unwrap(),
            vec![0.5, 0.25]
        );
        assert!(parse_scores("abc\n", Path::new("x")).is_err());
    }

    #[test]
    fn mask_round_trip() {
        let m = [true, false, true];
        assert_eq!(parse_mask(&mask_text(&m), Path::new("m")).unwrap(), m);
        assert!(parse_mask("2\n", Path::new("m")).is_err());
    }
}
