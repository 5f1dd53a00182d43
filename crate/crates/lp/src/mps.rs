//! Fixed-format MPS output and a tolerant MPS reader.
//!
//! Row and column names are replaced by fixed-width codes (`R0000000`,
//! `C0000000`, objective row `OBJ`) so every name fits the 8-character
//! fields; the mapping back to the model's names is produced as a CSV
//! sidecar with the columns `kind,index,short,original`.
//!
//! Numbers are written in Rust's shortest round-trip notation, so a model
//! read back reproduces every coefficient bit for bit. Every variable gets
//! explicit bounds. A constant objective offset is written as the
//! right-hand side of the objective row with the opposite sign.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::model::{LpModel, RowSense, Sense};
use crate::Error;

const OBJ_ROW: &str = "OBJ";

/// An exported model: the MPS text and its name table.
#[derive(Clone, Debug)]
pub struct MpsExport {
    pub mps: String,
    pub names: String,
}

pub fn row_code(i: usize) -> String {
    format!("R{i:07}")
}

pub fn col_code(j: usize) -> String {
    format!("C{j:07}")
}

fn num(v: f64) -> String {
    // Debug keeps the shortest round-trip digits and switches to exponent
    // notation for very large or small magnitudes.
    let s = format!("{v:?}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}

fn data_line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str, rest: Option<(&str, &str)>) {
    let mut line = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4}");
    if let Some((f5, f6)) = rest {
        while line.len() < 39 {
            line.push(' ');
        }
        if line.len() == 39 {
            let _ = write!(line, "{f5:<8}  {f6}");
        } else {
            let _ = write!(line, " {f5:<8}  {f6}");
        }
    }
    out.push_str(line.trim_end());
    out.push('\n');
}

/// Serializes `model` as fixed-format MPS plus the name table.
pub fn to_mps(model: &LpModel) -> MpsExport {
    let mut out = String::new();
    let name: String = model
        .name
        .chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect();
    let name = if name.is_empty() { "MODEL".to_string() } else { name };
    let _ = writeln!(out, "{:<14}{}", "NAME", name);
    out.push_str("OBJSENSE\n");
    out.push_str(match model.sense {
        Sense::Maximize => "    MAX\n",
        Sense::Minimize => "    MIN\n",
    });

    out.push_str("ROWS\n");
    data_line(&mut out, "N", OBJ_ROW, "", "", None);
    for (i, c) in model.constraints.iter().enumerate() {
        let t = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        data_line(&mut out, t, &row_code(i), "", "", None);
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (i, c) in model.constraints.iter().enumerate() {
        for &(j, a) in &c.coefficients {
            columns[j].push((i, a));
        }
    }
    out.push_str("COLUMNS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let code = col_code(j);
        let mut entries: Vec<(String, f64)> = Vec::with_capacity(columns[j].len() + 1);
        if v.objective != 0.0 || columns[j].is_empty() {
            entries.push((OBJ_ROW.to_string(), v.objective));
        }
        entries.extend(columns[j].iter().map(|&(i, a)| (row_code(i), a)));
        for pair in entries.chunks(2) {
            let second = pair.get(1).map(|(r, a)| (r.as_str(), num(*a)));
            data_line(
                &mut out,
                "",
                &code,
                &pair[0].0,
                &num(pair[0].1),
                second.as_ref().map(|(r, a)| (*r, a.as_str())),
            );
        }
    }

    out.push_str("RHS\n");
    if model.objective_offset != 0.0 {
        data_line(&mut out, "", "RHS", OBJ_ROW, &num(-model.objective_offset), None);
    }
    for (i, c) in model.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            data_line(&mut out, "", "RHS", &row_code(i), &num(c.rhs), None);
        }
    }

    out.push_str("BOUNDS\n");
    for (j, v) in model.variables.iter().enumerate() {
        let code = col_code(j);
        let (l, u) = (v.lower, v.upper);
        if l == u {
            data_line(&mut out, "FX", "BND", &code, &num(l), None);
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            data_line(&mut out, "FR", "BND", &code, "", None);
        } else {
            if l == f64::NEG_INFINITY {
                data_line(&mut out, "MI", "BND", &code, "", None);
            } else {
                data_line(&mut out, "LO", "BND", &code, &num(l), None);
            }
            if u.is_finite() {
                data_line(&mut out, "UP", "BND", &code, &num(u), None);
            }
        }
    }
    out.push_str("ENDATA\n");

    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record(["kind", "index", "short", "original"]);
    let _ = w.write_record(["model", "0", &name, &model.name]);
    let _ = w.write_record(["objective", "0", OBJ_ROW, "objective"]);
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = w.write_record(["row", &i.to_string(), &row_code(i), &c.name]);
    }
    for (j, v) in model.variables.iter().enumerate() {
        let _ = w.write_record(["column", &j.to_string(), &col_code(j), &v.name]);
    }
    let names = String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();

    MpsExport { mps: out, names }
}

/// Writes `<path>` and the name table next to it (`<stem>.names.csv`).
/// Returns both paths.
pub fn write_files(model: &LpModel, path: &Path) -> Result<(PathBuf, PathBuf), Error> {
    let export = to_mps(model);
    std::fs::write(path, export.mps)?;
    let names_path = path.with_extension("names.csv");
    std::fs::write(&names_path, export.names)?;
    Ok((path.to_path_buf(), names_path))
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, Error> {
    tok.parse::<f64>().map_err(|_| Error::Mps {
        line,
        message: format!("`{tok}` is not a number"),
    })
}

/// Reads an MPS model. Fields are split on whitespace, so both fixed and
/// free layouts are accepted as long as names contain no blanks.
pub fn parse(text: &str) -> Result<LpModel, Error> {
    let mut model = LpModel::new("", Sense::Minimize);
    let mut section = Section::None;
    let mut objective: Option<String> = None;
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut ended = false;

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| Error::Mps { line, message };
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            match toks[0] {
                "NAME" => {
                    model.name = toks.get(1).copied().unwrap_or("").to_string();
                    section = Section::None;
                }
                "OBJSENSE" => {
                    section = Section::ObjSense;
                    if let Some(&s) = toks.get(1) {
                        model.sense = parse_sense(s).ok_or_else(|| err(format!("unknown sense `{s}`")))?;
                        section = Section::None;
                    }
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "RANGES" => return Err(err("RANGES are not supported".into())),
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(format!("unknown section `{other}`"))),
            }
            continue;
        }

        match section {
            Section::None => return Err(err("data line outside of a section".into())),
            Section::ObjSense => {
                model.sense =
                    parse_sense(toks[0]).ok_or_else(|| err(format!("unknown sense `{}`", toks[0])))?;
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(err("expected a row type and a row name".into()));
                }
                let sense = match toks[0] {
                    "N" => {
                        if objective.is_none() {
                            objective = Some(toks[1].to_string());
                        }
                        continue;
                    }
                    "L" => RowSense::Le,
                    "G" => RowSense::Ge,
                    "E" => RowSense::Eq,
                    t => return Err(err(format!("unknown row type `{t}`"))),
                };
                if row_index.contains_key(toks[1]) {
                    return Err(err(format!("duplicate row `{}`", toks[1])));
                }
                row_index.insert(toks[1].to_string(), model.constraints.len());
                model.add_row(toks[1], std::iter::empty(), sense, 0.0);
            }
            Section::Columns => {
                if toks.contains(&"'MARKER'") {
                    return Err(err("integer markers are not supported".into()));
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err("expected a column name and one or two (row, value) pairs".into()));
                }
                let col = toks[0];
                let j = match col_index.get(col) {
                    Some(&j) => j,
                    None => {
                        let j = model.add_var(col, 0.0, f64::INFINITY, 0.0).0;
                        col_index.insert(col.to_string(), j);
                        j
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let value = parse_num(pair[1], line)?;
                    if objective.as_deref() == Some(pair[0]) {
                        model.variables[j].objective = value;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        if value != 0.0 {
                            let c = &mut model.constraints[i];
                            if c.coefficients.iter().any(|&(k, _)| k == j) {
                                return Err(err(format!(
                                    "column `{col}` appears twice in row `{}`",
                                    pair[0]
                                )));
                            }
                            c.coefficients.push((j, value));
                        }
                    } else {
                        return Err(err(format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                let body = match toks.len() {
                    2 | 4 => &toks[..],
                    3 | 5 => &toks[1..],
                    _ => return Err(err("malformed RHS line".into())),
                };
                for pair in body.chunks(2) {
                    let value = parse_num(pair[1], line)?;
                    if objective.as_deref() == Some(pair[0]) {
                        model.objective_offset = -value;
                    } else if let Some(&i) = row_index.get(pair[0]) {
                        model.constraints[i].rhs = value;
                    } else {
                        return Err(err(format!("unknown row `{}`", pair[0])));
                    }
                }
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_value = matches!(kind, "UP" | "LO" | "FX");
                let (col, value) = match (needs_value, toks.len()) {
                    (true, 4) => (toks[2], Some(parse_num(toks[3], line)?)),
                    (true, 3) => (toks[1], Some(parse_num(toks[2], line)?)),
                    (false, 3) | (false, 4) => (toks[2], None),
                    (false, 2) => (toks[1], None),
                    _ => return Err(err(format!("malformed {kind} bound"))),
                };
                let &j = col_index
                    .get(col)
                    .ok_or_else(|| err(format!("bound on unknown column `{col}`")))?;
                let v = &mut model.variables[j];
                match (kind, value) {
                    ("UP", Some(x)) => {
                        if x < 0.0 && v.lower == 0.0 {
                            v.lower = f64::NEG_INFINITY;
                        }
                        v.upper = x;
                    }
                    ("LO", Some(x)) => v.lower = x,
                    ("FX", Some(x)) => {
                        v.lower = x;
                        v.upper = x;
                    }
                    ("FR", None) => {
                        v.lower = f64::NEG_INFINITY;
                        v.upper = f64::INFINITY;
                    }
                    ("MI", None) => v.lower = f64::NEG_INFINITY,
                    ("PL", None) => v.upper = f64::INFINITY,
                    _ => return Err(err(format!("unsupported bound type `{kind}`"))),
                }
            }
        }
    }

    if !ended {
        return Err(Error::MpsStructure("missing ENDATA".into()));
    }
    if objective.is_none() {
        return Err(Error::MpsStructure("no objective (N) row".into()));
    }
    if model.variables.is_empty() {
        return Err(Error::MpsStructure("no variables".into()));
    }
    model.validate()?;
    Ok(model)
}

fn parse_sense(s: &str) -> Option<Sense> {
    match s.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Some(Sense::Maximize),
        "MIN" | "MINIMIZE" => Some(Sense::Minimize),
        _ => None,
    }
}

/// Replaces the short codes of a parsed model with the names recorded in a
/// name table produced by [`to_mps`].
pub fn restore_names(model: &mut LpModel, names_csv: &str) -> Result<(), Error> {
    let mut rows: HashMap<String, String> = HashMap::new();
    let mut cols: HashMap<String, String> = HashMap::new();
    let mut model_name = None;
    let mut reader = csv::Reader::from_reader(names_csv.as_bytes());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Mps {
            line: k + 2,
            message: format!("name table: {e}"),
        })?;
        if rec.len() != 4 {
            return Err(Error::Mps {
                line: k + 2,
                message: "name table rows need 4 fields".into(),
            });
        }
        match &rec[0] {
            "row" => {
                rows.insert(rec[2].to_string(), rec[3].to_string());
            }
            "column" => {
                cols.insert(rec[2].to_string(), rec[3].to_string());
            }
            "model" => model_name = Some(rec[3].to_string()),
            _ => {}
        }
    }
    for c in &mut model.constraints {
        if let Some(n) = rows.get(&c.name) {
            c.name = n.clone();
        }
    }
    for v in &mut model.variables {
        if let Some(n) = cols.get(&v.name) {
            v.name = n.clone();
        }
    }
    if let Some(n) = model_name {
        model.name = n;
    }
    model.validate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> LpModel {
        let mut m = LpModel::new("tiny", Sense::Maximize);
        let x = m.add_var("x", 0.0, f64::INFINITY, 1.0);
        m.add_row("c", [(x, 1.0)], RowSense::Le, 1.0);
        m
    }

    #[test]
    fn tiny_model_layout() {
        let e = to_mps(&tiny());
        let expected = "\
NAME          tiny
OBJSENSE
    MAX
ROWS
 N  OBJ
 L  R0000000
COLUMNS
    C0000000  OBJ       1              R0000000  1
RHS
    RHS       R0000000  1
BOUNDS
 LO BND       C0000000  0
ENDATA
";
        assert_eq!(e.mps, expected);
        assert!(e.names.contains("column,0,C0000000,x"));
    }

    #[test]
    fn fields_start_at_fixed_columns() {
        let e = to_mps(&tiny());
        let line = e.mps.lines().find(|l| l.starts_with("    C0000000")).unwrap();
        assert_eq!(&line[4..12], "C0000000");
        assert_eq!(&line[14..17], "OBJ");
        assert_eq!(&line[24..25], "1");
        assert_eq!(&line[39..47], "R0000000");
        assert_eq!(&line[49..50], "1");
    }

    #[test]
    fn round_trip_restores_names_and_offset() {
        let mut m = LpModel::new("two words", Sense::Minimize);
        m.objective_offset = -12.5;
        let a = m.add_var("Xo[grinder,3]", -2.0, 5.0, 0.1);
        let b = m.add_var("free", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        let c = m.add_var("neg", f64::NEG_INFINITY, -1.0, 1e-9);
        let d = m.add_var("fixed", 3.0, 3.0, 0.0);
        m.add_row("r,1", [(a, 1.0 / 3.0), (b, -1e20), (c, 2.0)], RowSense::Ge, 0.7);
        m.add_row("r2", [(d, 1.0), (a, 1.0)], RowSense::Eq, -4.0);
        let e = to_mps(&m);
        let mut back = parse(&e.mps).unwrap();
        restore_names(&mut back, &e.names).unwrap();
        for c in back.constraints.iter_mut().chain(m.constraints.iter_mut()) {
            c.coefficients.sort_by_key(|&(j, _)| j);
        }
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "NAME x\nROWS\n N OBJ\n L R1\nCOLUMNS\n    X R1 abc\nENDATA\n";
        match parse(text) {
            Err(Error::Mps { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_columns_is_an_error() {
        let text = "NAME x\nROWS\n N OBJ\nCOLUMNS\nRHS\nENDATA\n";
        let e = parse(text).unwrap_err();
        assert!(e.to_string().contains("no variables"));
    }
}
