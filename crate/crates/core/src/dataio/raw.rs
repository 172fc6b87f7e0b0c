use std::collections::BTreeMap;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};

use crate::error::{Error, Result};

/// One subject's raw multivariate series. Missing values are NaN until
/// cleaning drops them.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub subject_id: String,
    /// Epoch seconds, sorted ascending (stable on ties).
    pub timestamps: Vec<i64>,
    pub channel_names: Vec<String>,
    /// One vector per channel, same length as `timestamps`.
    pub values: Vec<Vec<f64>>,
}

impl RawSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Schema(format!("unknown channel '{name}'")))
    }

    /// Keep only the rows at `keep` (sorted indices).
    pub(crate) fn filter_rows(&self, keep: &[usize]) -> RawSeries {
        RawSeries {
            subject_id: self.subject_id.clone(),
            timestamps: keep.iter().map(|&i| self.timestamps[i]).collect(),
            channel_names: self.channel_names.clone(),
            values: self
                .values
                .iter()
                .map(|col| keep.iter().map(|&i| col[i]).collect())
                .collect(),
        }
    }
}

fn parse_timestamp(raw: &str, line: usize) -> Result<i64> {
    let raw = raw.trim();
    if let Ok(epoch) = raw.parse::<i64>() {
        return Ok(epoch);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(Error::Parse {
        line,
        message: format!("unparseable timestamp '{raw}'"),
    })
}

fn parse_value(raw: &str, line: usize) -> Result<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(f64::NAN);
    }
    raw.parse::<f64>().map_err(|_| Error::Parse {
        line,
        message: format!("unparseable value '{raw}'"),
    })
}

/// Load `subject,timestamp,<channel...>` CSV into one series per subject,
/// subjects ordered lexicographically, rows sorted by timestamp within
/// each subject (stable on ties).
pub fn load_csv(path: &Path, schema: &[String]) -> Result<Vec<RawSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("header missing column '{name}'")))
    };
    let subject_col = find("subject")?;
    let timestamp_col = find("timestamp")?;
    let channel_cols: Vec<usize> = schema.iter().map(|c| find(c)).collect::<Result<_>>()?;

    // (timestamp, original order, values) per subject.
    let mut per_subject: BTreeMap<String, Vec<(i64, usize, Vec<f64>)>> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2; // header is line 1
        let record = record?;
        let get = |col: usize| -> Result<&str> {
            record.get(col).ok_or_else(|| Error::Parse {
                line,
                message: format!("row has {} fields, need column {}", record.len(), col + 1),
            })
        };
        let subject = get(subject_col)?.trim().to_string();
        if subject.is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty subject id".into(),
            });
        }
        let ts = parse_timestamp(get(timestamp_col)?, line)?;
        let vals = channel_cols
            .iter()
            .map(|&c| parse_value(get(c)?, line))
            .collect::<Result<Vec<_>>>()?;
        per_subject.entry(subject).or_default().push((ts, idx, vals));
    }

    let mut out = Vec::with_capacity(per_subject.len());
    for (subject_id, mut rows) in per_subject {
        rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        let timestamps: Vec<i64> = rows.iter().map(|r| r.0).collect();
        let values: Vec<Vec<f64>> = (0..schema.len())
            .map(|c| rows.iter().map(|r| r.2[c]).collect())
            .collect();
        out.push(RawSeries {
            subject_id,
            timestamps,
            channel_names: schema.to_vec(),
            values,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn schema(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn loads_two_subjects() {
        let mut content = String::from("subject,timestamp,a,b,c\n");
        for s in ["p1", "p2"] {
            for t in 0..10 {
                content.push_str(&format!("{s},{t},{t}.0,1.0,2.0\n"));
            }
        }
        let f = write_csv(&content);
        let series = load_csv(f.path(), &schema(&["a", "b", "c"])).unwrap();
        assert_eq!(series.len(), 2);
        assert_eq!(series[0].subject_id, "p1");
        assert_eq!(series[0].len(), 10);
        assert_eq!(series[1].len(), 10);
    }

    #[test]
    fn resorts_out_of_order_rows_stably() {
        let content = "subject,timestamp,a\np1,5,1.0\np1,2,2.0\np1,5,3.0\np1,1,4.0\n";
        let f = write_csv(content);
        let series = load_csv(f.path(), &schema(&["a"])).unwrap();
        assert_eq!(series[0].timestamps, vec![1, 2, 5, 5]);
        // Tie at t=5 keeps the original row order (1.0 before 3.0).
        assert_eq!(series[0].values[0], vec![4.0, 2.0, 1.0, 3.0]);
    }

    #[test]
    fn empty_file_with_header_is_ok() {
        let f = write_csv("subject,timestamp,a\n");
        let series = load_csv(f.path(), &schema(&["a"])).unwrap();
        assert!(series.is_empty());
    }

    #[test]
    fn malformed_row_names_line() {
        let f = write_csv("subject,timestamp,a\np1,0,1.0\np1,1,oops\n");
        let err = load_csv(f.path(), &schema(&["a"])).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn unknown_channel_is_schema_error() {
        let f = write_csv("subject,timestamp,a\np1,0,1.0\n");
        let err = load_csv(f.path(), &schema(&["z"])).unwrap_err();
        assert!(matches!(err, Error::Schema(_)), "{err}");
    }

    #[test]
    fn iso_timestamps_and_missing_values() {
        let f = write_csv(
            "subject,timestamp,a\np1,1970-01-01T00:01:00,1.5\np1,1970-01-01T00:00:00,\n",
        );
        let series = load_csv(f.path(), &schema(&["a"])).unwrap();
        assert_eq!(series[0].timestamps, vec![0, 60]);
        assert!(series[0].values[0][0].is_nan());
        assert_eq!(series[0].values[0][1], 1.5);
    }
}
