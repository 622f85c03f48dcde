use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::{io_err, IoError};
use crate::model::CaseDefinition;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KeyPolicy {
    /// Unknown keys are an error.
    #[default]
    Strict,
    /// Unknown keys are returned as warnings.
    Lax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadedCase {
    pub case: CaseDefinition,
    /// Unknown keys tolerated under [`KeyPolicy::Lax`].
    pub warnings: Vec<String>,
}

pub fn load_case(path: &Path, policy: KeyPolicy) -> Result<LoadedCase, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    load_case_str(&text, path, policy)
}

/// Parses case JSON as if read from `path`; CSV references resolve against
/// its directory.
pub fn load_case_str(text: &str, path: &Path, policy: KeyPolicy) -> Result<LoadedCase, IoError> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| IoError::Parse {
        path: path.to_path_buf(),
        line: e.line().max(1),
        column: e.column().max(1),
        message: strip_position(&e.to_string()),
    })?;
    let periods = value.pointer("/time/periods").and_then(Value::as_u64).map(|p| p as usize);
    let base = path.parent().unwrap_or(Path::new("."));
    resolve_csv(&mut value, base, path, periods)?;
    let case: CaseDefinition = serde_path_to_error::deserialize(value.clone()).map_err(|e| IoError::Schema {
        path: path.to_path_buf(),
        at: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let back = serde_json::to_value(&case).expect("case serializes");
    let mut unknown = Vec::new();
    diff_keys(&value, &back, String::new(), &mut unknown);
    if !unknown.is_empty() && policy == KeyPolicy::Strict {
        return Err(IoError::UnknownKeys { path: path.to_path_buf(), keys: unknown });
    }
    Ok(LoadedCase { case, warnings: unknown })
}

fn strip_position(msg: &str) -> String {
    msg.split(" at line ").next().unwrap_or(msg).to_string()
}

fn resolve_csv(v: &mut Value, base: &Path, json: &Path, periods: Option<usize>) -> Result<(), IoError> {
    match v {
        Value::Object(m) => {
            if m.len() == 1 {
                if let Some(Value::String(rel)) = m.get("csv") {
                    *v = read_series_csv(&base.join(rel), json, periods)?;
                    return Ok(());
                }
            }
            for x in m.values_mut() {
                resolve_csv(x, base, json, periods)?;
            }
        }
        Value::Array(a) => {
            for x in a {
                resolve_csv(x, base, json, periods)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Reads a periods-by-scenarios table into `[scenario][period]` JSON.
fn read_series_csv(file: &Path, json: &Path, periods: Option<usize>) -> Result<Value, IoError> {
    if !file.is_file() {
        return Err(IoError::MissingCsv { path: json.to_path_buf(), csv: file.to_path_buf() });
    }
    let csv_err = |message: String| IoError::Csv { path: file.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(file).map_err(|e| csv_err(e.to_string()))?;
    let cols = rdr.headers().map_err(|e| csv_err(e.to_string()))?.len();
    let mut series: Vec<Vec<f64>> = vec![Vec::new(); cols];
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(e.to_string()))?;
        for (w, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| csv_err(format!("row {}: `{field}` is not a number", r + 2)))?;
            series[w].push(v);
        }
    }
    let found = series.first().map_or(0, Vec::len);
    if let Some(expected) = periods {
        if found != expected {
            return Err(IoError::Length { path: file.to_path_buf(), expected, found });
        }
    }
    Ok(serde_json::to_value(series).expect("numbers serialize"))
}

/// Keys of `input` that do not survive a parse and re-serialize.
fn diff_keys(input: &Value, back: &Value, at: String, out: &mut Vec<String>) {
    match (input, back) {
        (Value::Object(a), Value::Object(b)) => {
            for (k, v) in a {
                let here = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                match b.get(k) {
                    Some(bv) => diff_keys(v, bv, here, out),
                    None if v.is_null() => {}
                    None => out.push(here),
                }
            }
        }
        (Value::Array(a), Value::Array(b)) => {
            for (i, (x, y)) in a.iter().zip(b).enumerate() {
                diff_keys(x, y, format!("{at}[{i}]"), out);
            }
        }
        _ => {}
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesStorage {
    Inline,
    /// Every series goes to its own CSV in a directory named after the case
    /// file's stem.
    Csv,
}

pub fn save_case(case: &CaseDefinition, path: &Path, storage: SeriesStorage) -> Result<(), IoError> {
    let mut value = serde_json::to_value(case).expect("case serializes");
    if storage == SeriesStorage::Csv {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("case").to_string();
        let dir = path.parent().unwrap_or(Path::new(".")).join(&stem);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        extract_series(&mut value, &mut Vec::new(), &dir, Path::new(&stem))?;
    }
    let mut text = serde_json::to_string_pretty(&value).expect("value serializes");
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn is_series(v: &Value) -> bool {
    matches!(v, Value::Array(rows) if !rows.is_empty()
        && rows.iter().all(|r| matches!(r, Value::Array(xs) if xs.iter().all(Value::is_number))))
}

fn extract_series(v: &mut Value, at: &mut Vec<String>, dir: &Path, rel: &Path) -> Result<(), IoError> {
    if is_series(v) {
        let name = format!("{}.csv", at.join("_"));
        write_series_csv(v, &dir.join(&name))?;
        let mut m = Map::new();
        m.insert("csv".into(), Value::String(rel.join(&name).to_string_lossy().replace('\\', "/")));
        *v = Value::Object(m);
        return Ok(());
    }
    match v {
        Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                at.push(k.clone());
                extract_series(x, at, dir, rel)?;
                at.pop();
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter_mut().enumerate() {
                let label = x.get("id").and_then(Value::as_str).map_or(i.to_string(), str::to_string);
                at.push(label);
                extract_series(x, at, dir, rel)?;
                at.pop();
            }
        }
        _ => {}
    }
    Ok(())
}

fn write_series_csv(v: &Value, file: &PathBuf) -> Result<(), IoError> {
    let series: Vec<Vec<f64>> = serde_json::from_value(v.clone()).expect("checked series shape");
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=series.len()).map(|w| format!("w{w}")).collect();
    let csv_err = |e: csv::Error| IoError::Csv { path: file.clone(), message: e.to_string() };
    w.write_record(&header).map_err(csv_err)?;
    for t in 0..series[0].len() {
        w.write_record(series.iter().map(|s| s.get(t).map_or(String::new(), |x| x.to_string()))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Csv { path: file.clone(), message: e.to_string() })?;
    fs::write(file, bytes).map_err(io_err(file))
}
