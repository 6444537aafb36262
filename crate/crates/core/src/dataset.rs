//! Plain-text dataset files: one decimal value per line (or an `x,y` pair
//! for point files). Blank lines and `#` comments are ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::SampleSet;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_value(line_no: usize, line: &str, field: &str) -> Result<f64> {
    let column = line.find(field).map_or(1, |c| c + 1);
    match field.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line: line_no,
            column,
            message: format!("expected a finite decimal value, found '{}'", field.trim()),
        }),
    }
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    content_lines(text)
        .map(|(n, line)| parse_value(n, line, line))
        .collect()
}

pub fn parse_samples(text: &str) -> Result<SampleSet> {
    SampleSet::new(parse_values(text)?)
}

pub fn read_samples(path: &Path) -> Result<SampleSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_samples(&text)
}

/// Reads a dataset file; an empty file is an error.
pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    Ok(read_samples(path)?.into_inner())
}

pub fn parse_points(text: &str) -> Result<Vec<[f64; 2]>> {
    content_lines(text)
        .map(|(n, line)| {
            let mut fields = line.split([',', ' ', '\t']).filter(|f| !f.is_empty());
            match (fields.next(), fields.next(), fields.next()) {
                (Some(x), Some(y), None) => {
                    Ok([parse_value(n, line, x)?, parse_value(n, line, y)?])
                }
                _ => Err(Error::Parse {
                    line: n,
                    column: 1,
                    message: "expected two coordinates".into(),
                }),
            }
        })
        .collect()
}

pub fn read_points(path: &Path) -> Result<Vec<[f64; 2]>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_points(&text)
}
