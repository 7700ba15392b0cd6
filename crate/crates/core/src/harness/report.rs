use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use super::run::{ExperimentReport, Record, Timing};
use super::{HarnessError, Orientation, model_label, quantile};
use crate::fit::ModelFamily;

const RECORDS_HEADER: &str = "# relabel-records v1";
const COLUMNS: &str = "dataset\tmodel\trate\trepeat\tfold\tgrid\tparams\tn_train\tn_test\taccuracy\tobjective\tstatus\tmodel_flips";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    /// Accuracy tables, datasets × models against noise rates.
    TableMarkdown,
    /// One tab-separated row per record; re-readable with [`parse_records`].
    Delimited,
    /// Five-number summaries of the selected grid point's accuracies.
    BoxplotData,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table-markdown" | "markdown" => Ok(ReportFormat::TableMarkdown),
            "delimited" | "tsv" => Ok(ReportFormat::Delimited),
            "boxplot-data" | "boxplot" => Ok(ReportFormat::BoxplotData),
            _ => Err(format!("unknown report format `{s}` (expected markdown, delimited or boxplot)")),
        }
    }
}

/// Summary of one (dataset, model, rate) group.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub dataset: String,
    pub model: ModelFamily,
    pub rate: f64,
    /// Highest mean accuracy over grid points (ties to the earliest point).
    pub best_of_means: Option<f64>,
    pub best_grid: Option<usize>,
    pub best_params: Option<String>,
    /// Mean over repeats of the best fold-mean accuracy within each repeat.
    pub mean_of_best: Option<f64>,
    pub records: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotRow {
    pub dataset: String,
    pub model: ModelFamily,
    /// `None` pools every rate, each at its own selected grid point.
    pub rate: Option<f64>,
    pub params: String,
    pub values: Vec<f64>,
}

impl BoxplotRow {
    /// `[min, q1, median, q3, max]`.
    pub fn five_numbers(&self) -> Option<[f64; 5]> {
        Some([
            quantile(&self.values, 0.0)?,
            quantile(&self.values, 0.25)?,
            quantile(&self.values, 0.5)?,
            quantile(&self.values, 0.75)?,
            quantile(&self.values, 1.0)?,
        ])
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Highest value, ties to the smallest key.
fn argmax(m: &BTreeMap<usize, f64>) -> Option<(usize, f64)> {
    m.iter().fold(None, |best, (&k, &v)| match best {
        Some((_, bv)) if bv >= v => best,
        _ => Some((k, v)),
    })
}

type GroupKey = (String, ModelFamily, u64);

impl ExperimentReport {
    /// Records grouped by (dataset, model, rate), in first-appearance order.
    fn groups(&self) -> Vec<(GroupKey, Vec<&Record>)> {
        let mut index: HashMap<GroupKey, usize> = HashMap::new();
        let mut groups: Vec<(GroupKey, Vec<&Record>)> = Vec::new();
        for r in &self.records {
            let key = (r.dataset.clone(), r.model, r.rate.to_bits());
            let at = *index.entry(key.clone()).or_insert_with(|| {
                groups.push((key, Vec::new()));
                groups.len() - 1
            });
            groups[at].1.push(r);
        }
        groups
    }

    pub fn aggregates(&self) -> Vec<Aggregate> {
        self.groups()
            .into_iter()
            .map(|((dataset, model, rate), recs)| {
                let mut by_grid: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
                let mut by_repeat: BTreeMap<usize, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
                for r in &recs {
                    if let Some(a) = r.accuracy {
                        by_grid.entry(r.grid_index).or_default().push(a);
                        by_repeat.entry(r.repeat).or_default().entry(r.grid_index).or_default().push(a);
                    }
                }
                let means = |m: &BTreeMap<usize, Vec<f64>>| -> BTreeMap<usize, f64> {
                    m.iter().filter_map(|(k, v)| Some((*k, mean(v)?))).collect()
                };
                let best = argmax(&means(&by_grid));
                let per_repeat: Vec<f64> =
                    by_repeat.values().filter_map(|g| argmax(&means(g)).map(|(_, v)| v)).collect();
                let best_params = best.and_then(|(g, _)| {
                    recs.iter().find(|r| r.grid_index == g).map(|r| r.params.clone())
                });
                Aggregate {
                    dataset,
                    model,
                    rate: f64::from_bits(rate),
                    best_of_means: best.map(|b| b.1),
                    best_grid: best.map(|b| b.0),
                    best_params,
                    mean_of_best: mean(&per_repeat),
                    records: recs.len(),
                    failures: recs.iter().filter(|r| r.accuracy.is_none()).count(),
                }
            })
            .collect()
    }

    /// Per-rate rows followed, for each (dataset, model), by a row pooling
    /// all rates.
    pub fn boxplots(&self) -> Vec<BoxplotRow> {
        let aggs = self.aggregates();
        let groups = self.groups();
        let mut rows: Vec<BoxplotRow> = Vec::new();
        let mut pooled: Vec<BoxplotRow> = Vec::new();
        for (agg, (_, recs)) in aggs.iter().zip(&groups) {
            let Some(g) = agg.best_grid else { continue };
            let values: Vec<f64> =
                recs.iter().filter(|r| r.grid_index == g).filter_map(|r| r.accuracy).collect();
            match pooled.iter_mut().find(|p| p.dataset == agg.dataset && p.model == agg.model) {
                Some(p) => p.values.extend(&values),
                None => pooled.push(BoxplotRow {
                    dataset: agg.dataset.clone(),
                    model: agg.model,
                    rate: None,
                    params: "selected-per-rate".into(),
                    values: values.clone(),
                }),
            }
            rows.push(BoxplotRow {
                dataset: agg.dataset.clone(),
                model: agg.model,
                rate: Some(agg.rate),
                params: agg.best_params.clone().unwrap_or_default(),
                values,
            });
        }
        rows.extend(pooled);
        rows
    }

    /// Concatenates records of reports produced under the same protocol.
    pub fn merge(mut self, other: ExperimentReport) -> Result<ExperimentReport, HarnessError> {
        if self.orientation != other.orientation {
            return Err(HarnessError::Report(format!(
                "cannot combine {} and {} orientation results",
                self.orientation, other.orientation
            )));
        }
        if self.folds != other.folds {
            return Err(HarnessError::Report(format!(
                "cannot combine {}-fold and {}-fold results",
                self.folds, other.folds
            )));
        }
        self.repeats = self.repeats.max(other.repeats);
        self.records.extend(other.records);
        self.audits.extend(other.audits);
        self.timings.extend(other.timings);
        Ok(self)
    }
}

fn rate_label(rate: f64) -> String {
    format!("{}%", (rate * 100.0 * 1e6).round() / 1e6)
}

fn protocol_line(r: &ExperimentReport) -> String {
    let k = r.folds;
    match r.orientation {
        Orientation::Paper => format!(
            "Protocol: train on 1 of {k} folds, test on the other {}; {} repeat(s); noise injected into training labels only.",
            k - 1,
            r.repeats
        ),
        Orientation::Conventional => format!(
            "Protocol: train on {} of {k} folds, test on the held-out fold; {} repeat(s); noise injected into training labels only.",
            k - 1,
            r.repeats
        ),
    }
}

fn markdown(r: &ExperimentReport) -> String {
    let aggs = r.aggregates();
    let mut rates: Vec<f64> = Vec::new();
    let mut rows: Vec<(String, ModelFamily)> = Vec::new();
    for a in &aggs {
        if !rates.iter().any(|x| x.to_bits() == a.rate.to_bits()) {
            rates.push(a.rate);
        }
        if !rows.iter().any(|(d, m)| *d == a.dataset && *m == a.model) {
            rows.push((a.dataset.clone(), a.model));
        }
    }
    let mut s = String::from("<!-- relabel-report v1 -->\n");
    let _ = writeln!(s, "{}", protocol_line(r));
    s.push('\n');
    let tables: [(&str, fn(&Aggregate) -> Option<f64>); 2] = [
        (
            "Mean test accuracy (%) at the best grid point. The grid point is chosen on test accuracy, so these figures are optimistic.",
            |a| a.best_of_means,
        ),
        ("Mean over repeats of the per-repeat best grid point (%). Also selected on test accuracy.", |a| {
            a.mean_of_best
        }),
    ];
    for (ti, (caption, value)) in tables.iter().enumerate() {
        if ti > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "{caption}\n");
        let _ = write!(s, "| Dataset | Model |");
        for rate in &rates {
            let _ = write!(s, " {} |", rate_label(*rate));
        }
        let _ = write!(s, "\n| --- | --- |");
        for _ in &rates {
            s.push_str(" ---: |");
        }
        s.push('\n');
        let mut last_dataset: Option<&str> = None;
        for (dataset, model) in &rows {
            let shown = if last_dataset == Some(dataset.as_str()) { "" } else { dataset.as_str() };
            last_dataset = Some(dataset);
            let _ = write!(s, "| {shown} | {} |", model_label(*model));
            for rate in &rates {
                let cell = aggs
                    .iter()
                    .find(|a| a.dataset == *dataset && a.model == *model && a.rate.to_bits() == rate.to_bits())
                    .and_then(value);
                match cell {
                    Some(v) => {
                        let _ = write!(s, " {v:.2} |");
                    }
                    None => s.push_str(" n/a |"),
                }
            }
            s.push('\n');
        }
    }
    let failures = r.failures();
    if failures > 0 {
        let _ = writeln!(s, "\n{failures} fit(s) failed and are excluded from the means.");
    }
    s
}

fn clean(field: &str) -> String {
    field.replace(['\t', '\n', '\r'], " ")
}

fn delimited(r: &ExperimentReport) -> String {
    let mut s = format!("{RECORDS_HEADER}\n# orientation={} folds={} repeats={}\n{COLUMNS}\n", r.orientation, r.folds, r.repeats);
    let opt = |v: Option<f64>| v.map_or("NA".to_string(), |x| x.to_string());
    for rec in &r.records {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            clean(&rec.dataset),
            rec.model,
            rec.rate,
            rec.repeat,
            rec.fold,
            rec.grid_index,
            clean(&rec.params),
            rec.n_train,
            rec.n_test,
            opt(rec.accuracy),
            opt(rec.objective),
            clean(&rec.status),
            rec.model_flips
        );
    }
    s
}

fn boxplot(r: &ExperimentReport) -> String {
    let mut s = format!(
        "# relabel-boxplot v1\n# orientation={}\ndataset\tmodel\trate\tparams\tn\tmin\tq1\tmedian\tq3\tmax\n",
        r.orientation
    );
    for row in r.boxplots() {
        let rate = row.rate.map_or("all".to_string(), |x| x.to_string());
        let _ = write!(s, "{}\t{}\t{rate}\t{}\t{}", clean(&row.dataset), row.model, clean(&row.params), row.values.len());
        match row.five_numbers() {
            Some(q) => q.iter().for_each(|v| {
                let _ = write!(s, "\t{v:.4}");
            }),
            None => s.push_str("\tNA\tNA\tNA\tNA\tNA"),
        }
        s.push('\n');
    }
    s
}

/// Renders a report. Output depends only on the records, never on timings,
/// so reruns of the same plan are byte-identical.
pub fn emit_report(r: &ExperimentReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::TableMarkdown => markdown(r),
        ReportFormat::Delimited => delimited(r),
        ReportFormat::BoxplotData => boxplot(r),
    }
}

pub fn emit_timings(timings: &[Timing]) -> String {
    let mut s = String::from("# relabel-timings v1\ndataset\tmodel\trate\trepeat\tfold\tgrid\tseconds\n");
    for t in timings {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}",
            clean(&t.dataset),
            t.model,
            t.rate,
            t.repeat,
            t.fold,
            t.grid_index,
            t.seconds
        );
    }
    s
}

/// Reads the delimited format back. Audits and timings are not part of it.
pub fn parse_records(text: &str) -> Result<ExperimentReport, HarnessError> {
    let err = |line: usize, m: String| HarnessError::Report(format!("line {line}: {m}"));
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == RECORDS_HEADER => {}
        _ => return Err(err(1, format!("expected header `{RECORDS_HEADER}`"))),
    }
    let (meta_line, meta) = lines.next().ok_or_else(|| err(2, "missing protocol line".into()))?;
    let field = |key: &str| {
        meta.trim_start_matches('#')
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
            .ok_or_else(|| err(meta_line, format!("missing `{key}`")))
    };
    let orientation: Orientation = field("orientation")?.parse().map_err(|e| err(meta_line, e))?;
    let folds = field("folds")?.parse().map_err(|_| err(meta_line, "bad fold count".into()))?;
    let repeats = field("repeats")?.parse().map_err(|_| err(meta_line, "bad repeat count".into()))?;
    match lines.next() {
        Some((_, l)) if l == COLUMNS => {}
        Some((n, _)) => return Err(err(n, "unexpected column header".into())),
        None => return Err(err(3, "missing column header".into())),
    }
    let mut records = Vec::new();
    for (n, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 13 {
            return Err(err(n, format!("expected 13 fields, found {}", f.len())));
        }
        let num = |i: usize| f[i].parse::<usize>().map_err(|_| err(n, format!("bad integer `{}`", f[i])));
        let real = |i: usize| f[i].parse::<f64>().map_err(|_| err(n, format!("bad number `{}`", f[i])));
        let opt = |i: usize| if f[i] == "NA" { Ok(None) } else { real(i).map(Some) };
        records.push(Record {
            dataset: f[0].to_string(),
            model: f[1].parse().map_err(|e: crate::fit::FitError| err(n, e.to_string()))?,
            rate: real(2)?,
            repeat: num(3)?,
            fold: num(4)?,
            grid_index: num(5)?,
            params: f[6].to_string(),
            n_train: num(7)?,
            n_test: num(8)?,
            accuracy: opt(9)?,
            objective: opt(10)?,
            status: f[11].to_string(),
            model_flips: num(12)?,
        });
    }
    Ok(ExperimentReport { orientation, folds, repeats, records, audits: Vec::new(), timings: Vec::new() })
}
