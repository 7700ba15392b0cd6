use std::path::Path;

use super::{DataError, Dataset, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    /// Sparse `label idx:val ...` files are recognised by extension
    /// (`.svm`, `.libsvm`, `.svmlight`) or by a `:` in the second token.
    #[default]
    Auto,
    Delimited,
    Libsvm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Char(char),
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// A first row whose feature fields are not all numeric is a header.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    First,
    Index(usize),
    Name(String),
    /// Every column is a feature; rows get a placeholder positive label.
    Absent,
}

impl std::str::FromStr for LabelColumn {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim() {
            "last" => LabelColumn::Last,
            "first" => LabelColumn::First,
            "none" => LabelColumn::Absent,
            other => match other.parse::<usize>() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) if !other.is_empty() => LabelColumn::Name(other.to_string()),
                Err(_) => return Err(DataError::UnknownLabelColumn(s.to_string())),
            },
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Last => f.write_str("last"),
            LabelColumn::First => f.write_str("first"),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Absent => f.write_str("none"),
        }
    }
}

/// Explicit mapping from raw label strings to classes.
///
/// Lookup first tries an exact (trimmed) string match, then numeric equality,
/// so `1.0` matches a `1` key.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabelMap {
    entries: Vec<(String, Label)>,
}

impl LabelMap {
    pub fn new(entries: impl IntoIterator<Item = (String, Label)>) -> Self {
        LabelMap { entries: entries.into_iter().collect() }
    }

    /// `-1 -> Negative`, `+1 -> Positive`.
    pub fn signed() -> Self {
        LabelMap::new([("-1".to_string(), Label::Negative), ("+1".to_string(), Label::Positive)])
    }

    /// Parses `raw:class` pairs separated by `,` or `;`, e.g. `0:-1,1:+1`.
    pub fn parse(spec: &str) -> Result<Self, DataError> {
        let mut entries = Vec::new();
        for part in spec.split([',', ';']).map(str::trim).filter(|s| !s.is_empty()) {
            let (raw, class) = part
                .rsplit_once(':')
                .ok_or_else(|| DataError::InvalidLabelMap(part.to_string()))?;
            let label = match class.trim() {
                "-1" | "neg" | "negative" => Label::Negative,
                "1" | "+1" | "pos" | "positive" => Label::Positive,
                _ => return Err(DataError::InvalidLabelMap(part.to_string())),
            };
            entries.push((raw.trim().to_string(), label));
        }
        if entries.is_empty() {
            return Err(DataError::InvalidLabelMap(spec.to_string()));
        }
        Ok(LabelMap { entries })
    }

    /// An empty map behaves as [`LabelMap::signed`].
    pub fn lookup(&self, raw: &str) -> Option<Label> {
        if self.entries.is_empty() {
            return LabelMap::signed().lookup(raw);
        }
        let raw = raw.trim();
        if let Some((_, l)) = self.entries.iter().find(|(k, _)| k == raw) {
            return Some(*l);
        }
        let value: f64 = raw.parse().ok()?;
        self.entries
            .iter()
            .find(|(k, _)| k.parse::<f64>().is_ok_and(|kv| kv == value))
            .map(|(_, l)| *l)
    }

    pub fn to_spec(&self) -> String {
        self.entries
            .iter()
            .map(|(k, l)| format!("{k}:{l}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadOptions {
    pub format: DataFormat,
    /// `None` auto-detects among `,`, `;`, tab and runs of whitespace.
    pub delimiter: Option<Delimiter>,
    pub header: HeaderMode,
    pub label_column: LabelColumn,
    pub label_map: LabelMap,
    /// Zero-based columns (in the raw file) to drop, e.g. record ids.
    pub skip_columns: Vec<usize>,
    /// Identifier stored on the dataset; defaults to the file stem.
    pub id: Option<String>,
}

pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| DataError::Io { path: path.display().to_string(), message: e.to_string() })?;
    let mut opts = opts.clone();
    if opts.id.is_none() {
        opts.id = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    }
    if opts.format == DataFormat::Auto {
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if matches!(ext, "svm" | "libsvm" | "svmlight") {
            opts.format = DataFormat::Libsvm;
        }
    }
    parse_dataset(&text, &opts)
}

/// Parses dataset text; line numbers in errors are 1-based file lines.
pub fn parse_dataset(text: &str, opts: &LoadOptions) -> Result<Dataset, DataError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    let format = match opts.format {
        DataFormat::Auto if looks_sparse(&lines) => DataFormat::Libsvm,
        DataFormat::Auto => DataFormat::Delimited,
        f => f,
    };
    let id = opts.id.clone().unwrap_or_else(|| "dataset".to_string());
    match format {
        DataFormat::Libsvm => parse_libsvm(&lines, opts, id),
        _ => parse_delimited(&lines, opts, id),
    }
}

fn looks_sparse(lines: &[(usize, &str)]) -> bool {
    lines.first().is_some_and(|(_, l)| {
        let mut tokens = l.split_whitespace();
        tokens.next();
        tokens.next().is_some_and(|t| t.contains(':'))
    })
}

fn detect_delimiter(line: &str) -> Delimiter {
    [',', ';', '\t']
        .into_iter()
        .map(|c| (line.matches(c).count(), c))
        .filter(|(count, _)| *count > 0)
        .max_by_key(|(count, _)| *count)
        .map_or(Delimiter::Whitespace, |(_, c)| Delimiter::Char(c))
}

fn split_fields(line: &str, delim: Delimiter) -> Vec<&str> {
    fn unquote(f: &str) -> &str {
        let f = f.trim();
        f.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(f)
    }
    match delim {
        Delimiter::Whitespace => line.split_whitespace().map(unquote).collect(),
        Delimiter::Char(c) => line.split(c).map(unquote).collect(),
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field, "" | "?" | "NA" | "na" | "NaN" | "nan")
}

fn parse_delimited(lines: &[(usize, &str)], opts: &LoadOptions, id: String) -> Result<Dataset, DataError> {
    let Some(&(_, first)) = lines.first() else {
        return Err(DataError::TooSmall { n: 0, p: 0 });
    };
    let delim = opts.delimiter.unwrap_or_else(|| detect_delimiter(first));
    let first_fields = split_fields(first, delim);
    let width = first_fields.len();

    let fixed_label_idx = match &opts.label_column {
        LabelColumn::Last => Some(width.saturating_sub(1)),
        LabelColumn::First => Some(0),
        LabelColumn::Index(i) => Some(*i),
        LabelColumn::Name(_) => None,
        LabelColumn::Absent => Some(usize::MAX),
    };
    let has_header = match opts.header {
        HeaderMode::Present => true,
        HeaderMode::Absent => false,
        HeaderMode::Auto => match fixed_label_idx {
            None => true,
            Some(li) => first_fields.iter().enumerate().any(|(c, f)| {
                c != li && !opts.skip_columns.contains(&c) && !is_missing(f) && f.parse::<f64>().is_err()
            }),
        },
    };
    let header: Option<Vec<String>> = has_header.then(|| first_fields.iter().map(|s| s.to_string()).collect());

    let label_idx = match (&opts.label_column, fixed_label_idx) {
        (LabelColumn::Absent, _) => usize::MAX,
        (_, Some(i)) if i < width => i,
        (LabelColumn::Name(name), None) => header
            .as_ref()
            .and_then(|h| h.iter().position(|c| c == name))
            .ok_or_else(|| DataError::UnknownLabelColumn(name.clone()))?,
        (_, i) => return Err(DataError::UnknownLabelColumn(format!("{i:?}"))),
    };
    let feature_cols: Vec<usize> = (0..width)
        .filter(|&c| c != label_idx && !opts.skip_columns.contains(&c))
        .collect();
    let p = feature_cols.len();

    let mut x = Vec::new();
    let mut y = Vec::new();
    for &(line_no, line) in lines.iter().skip(usize::from(has_header)) {
        let fields = split_fields(line, delim);
        if fields.len() != width {
            return Err(DataError::FieldCount { line: line_no, expected: width, found: fields.len() });
        }
        for &c in &feature_cols {
            let f = fields[c];
            if is_missing(f) {
                return Err(DataError::MissingValue { line: line_no, column: c + 1 });
            }
            let v: f64 = f
                .parse()
                .map_err(|_| DataError::Parse { line: line_no, column: c + 1, value: f.to_string() })?;
            x.push(v);
        }
        if label_idx == usize::MAX {
            y.push(Label::Positive);
            continue;
        }
        let raw = fields[label_idx];
        if is_missing(raw) {
            return Err(DataError::MissingValue { line: line_no, column: label_idx + 1 });
        }
        y.push(
            opts.label_map
                .lookup(raw)
                .ok_or_else(|| DataError::UnmappedLabel { line: line_no, value: raw.to_string() })?,
        );
    }
    if p == 0 {
        return Err(DataError::TooSmall { n: y.len(), p });
    }
    let n = y.len();
    let d = Dataset::new(id, x, p, y).map_err(|e| match e {
        DataError::Shape { .. } => DataError::TooSmall { n, p },
        e => e,
    })?;
    Ok(match header {
        Some(h) => d.with_names(feature_cols.iter().map(|&c| h[c].clone()).collect()),
        None => d,
    })
}

fn parse_libsvm(lines: &[(usize, &str)], opts: &LoadOptions, id: String) -> Result<Dataset, DataError> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(lines.len());
    let mut y = Vec::with_capacity(lines.len());
    let mut p = 0;
    for &(line_no, line) in lines {
        let mut tokens = line.split_whitespace();
        let raw = tokens.next().unwrap_or_default();
        y.push(
            opts.label_map
                .lookup(raw)
                .ok_or_else(|| DataError::UnmappedLabel { line: line_no, value: raw.to_string() })?,
        );
        let mut row = Vec::new();
        for tok in tokens {
            let bad = || DataError::SparseEntry { line: line_no, entry: tok.to_string() };
            let (idx, val) = tok.split_once(':').ok_or_else(bad)?;
            let idx: usize = idx.parse().map_err(|_| bad())?;
            if idx == 0 {
                return Err(bad());
            }
            if is_missing(val) {
                return Err(DataError::MissingValue { line: line_no, column: idx });
            }
            let val: f64 = val
                .parse()
                .map_err(|_| DataError::Parse { line: line_no, column: idx, value: val.to_string() })?;
            p = p.max(idx);
            row.push((idx - 1, val));
        }
        rows.push(row);
    }
    let n = rows.len();
    if p == 0 || n < 2 {
        return Err(DataError::TooSmall { n, p });
    }
    let mut x = vec![0.0; n * p];
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            x[i * p + j] = v;
        }
    }
    Dataset::new(id, x, p, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(map: &str) -> LoadOptions {
        LoadOptions { label_map: LabelMap::parse(map).unwrap(), ..Default::default() }
    }

    #[test]
    fn two_row_file_with_zero_one_labels() {
        let d = parse_dataset("0.5,1.5,0\n2.0,3.0,1\n", &opts("0:-1,1:+1")).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.labels(), &[Label::Negative, Label::Positive]);
        assert_eq!(d.row(1), &[2.0, 3.0]);
    }

    #[test]
    fn detects_delimiters_and_headers() {
        let semi = parse_dataset("a;b;class\n1;2;1\n3;4;-1\n", &LoadOptions {
            label_column: LabelColumn::Name("class".into()),
            ..opts("-1:-1,1:1")
        })
        .unwrap();
        assert_eq!(semi.names().unwrap(), &["a".to_string(), "b".to_string()]);
        assert_eq!(semi.row(1), &[3.0, 4.0]);

        let ws = parse_dataset("1 2 3 AB\n4 5 6 NO\n", &opts("AB:+1,NO:-1")).unwrap();
        assert_eq!((ws.n(), ws.p()), (2, 3));
        assert_eq!(ws.labels(), &[Label::Positive, Label::Negative]);

        let tab = parse_dataset("2\t1.0\t7\n4\t2.0\t8\n", &LoadOptions {
            label_column: LabelColumn::First,
            skip_columns: vec![2],
            ..opts("2:-1,4:+1")
        })
        .unwrap();
        assert_eq!(tab.p(), 1);
        assert_eq!(tab.features(), &[1.0, 2.0]);
    }

    #[test]
    fn numeric_label_lookup() {
        let m = LabelMap::parse("0:-1, 1:+1").unwrap();
        assert_eq!(m.lookup("1.0"), Some(Label::Positive));
        assert_eq!(m.lookup(" 0 "), Some(Label::Negative));
        assert_eq!(m.lookup("2"), None);
        assert!(LabelMap::parse("0=1").is_err());
    }

    #[test]
    fn distinct_error_kinds_name_row_and_column() {
        let o = opts("0:-1,1:+1");
        assert_eq!(
            parse_dataset("1,2,0\n1,x,1\n", &o),
            Err(DataError::Parse { line: 2, column: 2, value: "x".into() })
        );
        assert_eq!(
            parse_dataset("1,2,0\n1,?,1\n", &o),
            Err(DataError::MissingValue { line: 2, column: 2 })
        );
        assert_eq!(
            parse_dataset("1,2,0\n1,2,5\n", &o),
            Err(DataError::UnmappedLabel { line: 2, value: "5".into() })
        );
        assert_eq!(
            parse_dataset("1,2,0\n1,1\n", &o),
            Err(DataError::FieldCount { line: 2, expected: 3, found: 2 })
        );
    }

    #[test]
    fn sparse_format() {
        let d = parse_dataset("+1 1:0.5 3:2\n-1 2:1\n# comment\n+1 3:-1\n", &LoadOptions {
            label_map: LabelMap::signed(),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((d.n(), d.p()), (3, 3));
        assert_eq!(d.row(0), &[0.5, 0.0, 2.0]);
        assert_eq!(d.row(1), &[0.0, 1.0, 0.0]);
        assert!(matches!(
            parse_dataset("+1 0:1\n-1 1:1\n", &LoadOptions {
                format: DataFormat::Libsvm,
                label_map: LabelMap::signed(),
                ..Default::default()
            }),
            Err(DataError::SparseEntry { line: 1, .. })
        ));
    }

    #[test]
    fn absent_label_column_reads_every_column_as_a_feature() {
        let opts = LoadOptions { label_column: LabelColumn::Absent, ..Default::default() };
        let d = parse_dataset("1,2\n3,4\n", &opts).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn empty_map_reads_signed_labels() {
        let d = parse_dataset("0.5,-1\n1.5,+1\n", &LoadOptions::default()).unwrap();
        assert_eq!(d.labels(), &[Label::Negative, Label::Positive]);
    }
}
