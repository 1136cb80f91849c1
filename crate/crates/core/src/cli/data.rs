//! CSV formats: the scenario table written by `simulate` and the inputs
//! accepted by `fit`. Floats use Rust's shortest round-trip formatting.

use std::fmt::Write;
use std::io::Read;

use crate::simulation::OutlierScenario;

use super::CliError;

pub const SCENARIO_HEADER: &str = "s,channel,x,y,is_outlier";

pub fn scenario_csv(scenario: &OutlierScenario) -> String {
    let mut out =
        String::with_capacity(64 * scenario.frames.len() * scenario.base_sample.channels());
    out.push_str(SCENARIO_HEADER);
    out.push('\n');
    for frame in &scenario.frames {
        for (k, (x, y)) in frame.x.values().iter().zip(frame.y.values()).enumerate() {
            let flag = u8::from(scenario.is_outlier(frame.s, k));
            let _ = writeln!(out, "{},{},{},{},{}", frame.s, k, x, y, flag);
        }
    }
    out
}

/// Points read from a fit input CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FitInput {
    pub points: Vec<(f64, f64)>,
    /// Channel count implied by a scenario CSV (rows per frame).
    pub channels: Option<usize>,
}

fn column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn field(record: &csv::StringRecord, idx: usize, line: u64) -> Result<&str, CliError> {
    record
        .get(idx)
        .map(str::trim)
        .ok_or_else(|| CliError::Usage(format!("row {line}: missing column {}", idx + 1)))
}

fn parse_f64(s: &str, name: &str, line: u64) -> Result<f64, CliError> {
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("row {line}: cannot parse {name} value '{s}'")))?;
    if !v.is_finite() {
        return Err(CliError::Usage(format!(
            "row {line}: {name} value '{s}' is not finite"
        )));
    }
    Ok(v)
}

/// Reads either a plain `x,y` table or a scenario table. Scenario rows are
/// filtered to `is_outlier = 1`.
pub fn read_fit_input<R: Read>(reader: R) -> Result<FitInput, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| CliError::Usage(format!("cannot read CSV header: {e}")))?
        .clone();
    if headers.iter().all(|h| h.trim().is_empty()) {
        return Err(CliError::Usage("empty CSV".into()));
    }
    let (xi, yi) = match (column(&headers, "x"), column(&headers, "y")) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(CliError::Usage("CSV needs columns x and y".into())),
    };
    let outlier_col = column(&headers, "is_outlier");
    let frame_col = column(&headers, "s");

    let mut points = Vec::new();
    let mut rows = 0usize;
    let mut first_frame: Option<(String, usize)> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Usage(format!("row {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows += 1;
        if let Some(fc) = frame_col {
            let s = field(&record, fc, line)?;
            match &mut first_frame {
                None => first_frame = Some((s.to_string(), 1)),
                Some((first, n)) if first == s => *n += 1,
                _ => {}
            }
        }
        let x = parse_f64(field(&record, xi, line)?, "x", line)?;
        let y = parse_f64(field(&record, yi, line)?, "y", line)?;
        if let Some(oc) = outlier_col {
            match field(&record, oc, line)? {
                "1" => points.push((x, y)),
                "0" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "row {line}: is_outlier must be 0 or 1, got '{other}'"
                    )))
                }
            }
        } else {
            points.push((x, y));
        }
    }
    if rows == 0 {
        return Err(CliError::Usage("CSV has no data rows".into()));
    }
    if points.is_empty() {
        return Err(CliError::Usage(
            "CSV has no rows marked is_outlier = 1".into(),
        ));
    }
    let channels = match (outlier_col, first_frame) {
        (Some(_), Some((_, n))) => Some(n),
        _ => None,
    };
    Ok(FitInput { points, channels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::{run_scenario, SimulationConfig};

    #[test]
    fn scenario_round_trip_is_exact() {
        let sc = run_scenario(&SimulationConfig {
            channels: 7,
            s_max: 3,
            ..Default::default()
        })
        .unwrap();
        let text = scenario_csv(&sc);
        assert!(text.starts_with("s,channel,x,y,is_outlier\n"));
        assert_eq!(text.lines().count(), 1 + 7 * 4);
        let input = read_fit_input(text.as_bytes()).unwrap();
        assert_eq!(input.channels, Some(7));
        let o = sc.outlier_index;
        let want: Vec<(f64, f64)> = sc.frames[1..]
            .iter()
            .map(|f| (f.x.values()[o], f.y.values()[o]))
            .collect();
        assert_eq!(input.points, want);
    }

    #[test]
    fn plain_xy() {
        let input = read_fit_input("x,y\n1,0.5\n-1,-0.5\n".as_bytes()).unwrap();
        assert_eq!(input.points, vec![(1.0, 0.5), (-1.0, -0.5)]);
        assert_eq!(input.channels, None);
    }

    #[test]
    fn malformed_inputs() {
        let err = read_fit_input("x,y\n1,0.5\n2,abc\n".as_bytes()).unwrap_err();
        assert!(
            matches!(&err, CliError::Usage(m) if m.contains("row 3")),
            "{err:?}"
        );
        assert!(matches!(
            read_fit_input("".as_bytes()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            read_fit_input("x,y\n".as_bytes()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            read_fit_input("a,b\n1,2\n".as_bytes()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            read_fit_input("x,y\n1,inf\n".as_bytes()),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            read_fit_input("s,channel,x,y,is_outlier\n0,0,1,1,2\n".as_bytes()),
            Err(CliError::Usage(_))
        ));
    }
}
