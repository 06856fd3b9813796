//! Group summaries and report emission.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use statecheck_pipeline::records::ParseStatus;

use crate::stats::{kendall_tau_b, mean, standard_error_of_mean, TauError};

/// One evaluated record as persisted by `evaluate` and consumed by `report`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvaluatedLine {
    pub record_index: usize,
    pub game_id: String,
    pub group_label: usize,
    pub truncation_length: usize,
    pub parse_status: ParseStatus,
    pub exact_match: bool,
    pub edit_distance: usize,
    pub edit_kernel: f64,
    pub board_accuracy: f64,
    pub precision_m: Option<f64>,
    pub recall_m: Option<f64>,
    pub depth_m: usize,
}

/// Per-group aggregates. The Kendall tau field is `None` when the
/// coefficient is undefined (one side all ties), which is reported as
/// missing rather than coerced to zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group_label: usize,
    pub n_records: usize,
    pub exact_match_rate: f64,
    pub mean_edit_distance: f64,
    pub mean_edit_kernel: f64,
    pub mean_board_accuracy: f64,
    pub mean_precision_m: f64,
    pub mean_recall_m: f64,
    pub se_precision_m: f64,
    pub kendall_tau_precision_vs_neg_edit: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summaries {
    /// Pooled over every record; `group_label` is 0 by convention.
    pub overall: GroupSummary,
    pub groups: Vec<GroupSummary>,
    /// Expected groups that had no records at all.
    pub empty_groups_skipped: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug)]
pub struct ReportConfig {
    pub output_format: ReportFormat,
    pub output_path: PathBuf,
    pub include_per_record: bool,
}

fn summarize_subset(label: usize, lines: &[&EvaluatedLine]) -> GroupSummary {
    let precisions: Vec<f64> = lines
        .iter()
        .map(|l| l.precision_m.unwrap_or(0.0))
        .collect();
    let recalls: Vec<f64> = lines.iter().map(|l| l.recall_m.unwrap_or(0.0)).collect();
    let distances: Vec<f64> = lines.iter().map(|l| l.edit_distance as f64).collect();
    let neg_distances: Vec<f64> = distances.iter().map(|d| -d).collect();
    let kernels: Vec<f64> = lines.iter().map(|l| l.edit_kernel).collect();
    let boards: Vec<f64> = lines.iter().map(|l| l.board_accuracy).collect();
    let tau = match kendall_tau_b(&precisions, &neg_distances) {
        Ok(t) => Some(t),
        Err(TauError::DegenerateInput) | Err(TauError::TooShort) => None,
        Err(e) => unreachable!("parallel lists by construction: {e}"),
    };
    GroupSummary {
        group_label: label,
        n_records: lines.len(),
        exact_match_rate: lines.iter().filter(|l| l.exact_match).count() as f64
            / lines.len().max(1) as f64,
        mean_edit_distance: mean(&distances),
        mean_edit_kernel: mean(&kernels),
        mean_board_accuracy: mean(&boards),
        mean_precision_m: mean(&precisions),
        mean_recall_m: mean(&recalls),
        se_precision_m: standard_error_of_mean(&precisions),
        kendall_tau_precision_vs_neg_edit: tau,
    }
}

/// Aggregate per group and overall. `expected_labels` (when known) lets the
/// summary report groups that ended up with no records.
pub fn summarize_groups(lines: &[EvaluatedLine], expected_labels: &[usize]) -> Summaries {
    let mut labels: Vec<usize> = lines.iter().map(|l| l.group_label).collect();
    labels.sort_unstable();
    labels.dedup();
    let groups: Vec<GroupSummary> = labels
        .iter()
        .map(|&label| {
            let members: Vec<&EvaluatedLine> =
                lines.iter().filter(|l| l.group_label == label).collect();
            summarize_subset(label, &members)
        })
        .collect();
    let all: Vec<&EvaluatedLine> = lines.iter().collect();
    let empty = expected_labels
        .iter()
        .filter(|l| !labels.contains(l))
        .count();
    Summaries {
        overall: summarize_subset(0, &all),
        groups,
        empty_groups_skipped: empty,
    }
}

fn format_float(x: f64) -> String {
    // Shortest round-trip representation keeps reports byte-deterministic.
    format!("{x}")
}

fn format_optional(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

const SUMMARY_COLUMNS: &str = "scope,group_label,n_records,exact_match_rate,mean_edit_distance,mean_edit_kernel,mean_board_accuracy,mean_precision_m,mean_recall_m,se_precision_m,kendall_tau_precision_vs_neg_edit";

fn summary_row(scope: &str, label: &str, s: &GroupSummary) -> String {
    format!(
        "{scope},{label},{},{},{},{},{},{},{},{},{}",
        s.n_records,
        format_float(s.exact_match_rate),
        format_float(s.mean_edit_distance),
        format_float(s.mean_edit_kernel),
        format_float(s.mean_board_accuracy),
        format_float(s.mean_precision_m),
        format_float(s.mean_recall_m),
        format_float(s.se_precision_m),
        format_optional(s.kendall_tau_precision_vs_neg_edit),
    )
}

pub fn summaries_to_csv(summaries: &Summaries) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_COLUMNS);
    out.push('\n');
    out.push_str(&summary_row("overall", "", &summaries.overall));
    out.push('\n');
    for group in &summaries.groups {
        out.push_str(&summary_row("group", &group.group_label.to_string(), group));
        out.push('\n');
    }
    out
}

const RECORD_COLUMNS: &str = "record_index,game_id,group_label,truncation_length,parse_status,exact_match,edit_distance,edit_kernel,board_accuracy,precision_m,recall_m,depth_m";

fn escape_csv(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

pub fn records_to_csv(lines: &[EvaluatedLine]) -> String {
    let mut out = String::new();
    out.push_str(RECORD_COLUMNS);
    out.push('\n');
    for l in lines {
        let status = serde_json::to_value(l.parse_status).unwrap();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            l.record_index,
            escape_csv(&l.game_id),
            l.group_label,
            l.truncation_length,
            status.as_str().unwrap(),
            l.exact_match,
            l.edit_distance,
            format_float(l.edit_kernel),
            format_float(l.board_accuracy),
            format_optional(l.precision_m),
            format_optional(l.recall_m),
            l.depth_m,
        ));
    }
    out
}

/// Write the report; returns the files written. CSV puts per-record rows in
/// a sibling `<stem>_records.csv`; JSON embeds them under `"records"`.
pub fn emit_report(
    summaries: &Summaries,
    per_record: Option<&[EvaluatedLine]>,
    config: &ReportConfig,
) -> std::io::Result<Vec<PathBuf>> {
    if let Some(parent) = config.output_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut written = Vec::new();
    match config.output_format {
        ReportFormat::Csv => {
            write_atomically(&config.output_path, summaries_to_csv(summaries).as_bytes())?;
            written.push(config.output_path.clone());
            if let Some(lines) = per_record.filter(|_| config.include_per_record) {
                let sibling = sibling_records_path(&config.output_path);
                write_atomically(&sibling, records_to_csv(lines).as_bytes())?;
                written.push(sibling);
            }
        }
        ReportFormat::Json => {
            let mut value = serde_json::to_value(summaries).expect("summaries serialize");
            if let Some(lines) = per_record.filter(|_| config.include_per_record) {
                value["records"] = serde_json::to_value(lines).expect("records serialize");
            }
            let mut text = serde_json::to_string_pretty(&value).expect("report serializes");
            text.push('\n');
            write_atomically(&config.output_path, text.as_bytes())?;
            written.push(config.output_path.clone());
        }
    }
    Ok(written)
}

fn sibling_records_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let mut sibling = path.to_path_buf();
    sibling.set_file_name(format!("{stem}_records.csv"));
    sibling
}

fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(bytes)?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(index: usize, label: usize, precision: f64, distance: usize, exact: bool) -> EvaluatedLine {
        EvaluatedLine {
            record_index: index,
            game_id: format!("g{index}"),
            group_label: label,
            truncation_length: label,
            parse_status: ParseStatus::Ok,
            exact_match: exact,
            edit_distance: distance,
            edit_kernel: (-0.1 * distance as f64).exp(),
            board_accuracy: 1.0 - distance as f64 / 100.0,
            precision_m: Some(precision),
            recall_m: Some(precision),
            depth_m: 4,
        }
    }

    #[test]
    fn group_means_match_hand_arithmetic() {
        let lines = vec![
            line(0, 4, 1.0, 0, true),
            line(1, 4, 0.5, 10, false),
            line(2, 8, 0.25, 20, false),
        ];
        let summaries = summarize_groups(&lines, &[4, 8, 12]);
        assert_eq!(summaries.groups.len(), 2);
        let g4 = &summaries.groups[0];
        assert_eq!(g4.group_label, 4);
        assert_eq!(g4.n_records, 2);
        assert_eq!(g4.exact_match_rate, 0.5);
        assert_eq!(g4.mean_edit_distance, 5.0);
        assert_eq!(g4.mean_precision_m, 0.75);
        assert_eq!(summaries.overall.n_records, 3);
        assert!((summaries.overall.mean_precision_m - (1.75 / 3.0)).abs() < 1e-12);
        assert_eq!(summaries.empty_groups_skipped, 1);
    }

    #[test]
    fn all_perfect_records_flag_tau_as_degenerate() {
        let lines = vec![line(0, 4, 1.0, 0, true), line(1, 4, 1.0, 0, true)];
        let summaries = summarize_groups(&lines, &[]);
        assert_eq!(summaries.overall.exact_match_rate, 1.0);
        assert_eq!(summaries.overall.kendall_tau_precision_vs_neg_edit, None);
    }

    #[test]
    fn csv_is_header_only_for_empty_input() {
        let summaries = summarize_groups(&[], &[]);
        let csv = summaries_to_csv(&summaries);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SUMMARY_COLUMNS);
        // Only the overall row (with zero records) follows the header.
        assert_eq!(lines.len(), 2);
        assert!(lines[1].starts_with("overall,,0,"));
    }

    #[test]
    fn csv_row_carries_all_fields_in_order() {
        let lines = vec![line(0, 4, 0.5, 3, false)];
        let summaries = summarize_groups(&lines, &[]);
        let csv = summaries_to_csv(&summaries);
        let row = csv.lines().nth(2).unwrap();
        assert!(row.starts_with("group,4,1,0,3,"), "{row}");
    }

    #[test]
    fn json_report_embeds_records_when_asked() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![line(0, 4, 1.0, 0, true), line(1, 4, 0.0, 30, false)];
        let summaries = summarize_groups(&lines, &[]);
        let config = ReportConfig {
            output_format: ReportFormat::Json,
            output_path: dir.path().join("report.json"),
            include_per_record: true,
        };
        emit_report(&summaries, Some(&lines), &config).unwrap();
        let value: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&config.output_path).unwrap()).unwrap();
        assert_eq!(value["records"].as_array().unwrap().len(), 2);
        assert_eq!(value["overall"]["n_records"], 2);
        assert_eq!(value["groups"][0]["group_label"], 4);
    }

    #[test]
    fn reports_are_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let lines = vec![line(0, 4, 0.7, 3, false), line(1, 8, 0.2, 17, false)];
        let summaries = summarize_groups(&lines, &[]);
        for format in [ReportFormat::Csv, ReportFormat::Json] {
            let path = dir.path().join(match format {
                ReportFormat::Csv => "r.csv",
                ReportFormat::Json => "r.json",
            });
            let config = ReportConfig {
                output_format: format,
                output_path: path.clone(),
                include_per_record: true,
            };
            emit_report(&summaries, Some(&lines), &config).unwrap();
            let first = std::fs::read(&path).unwrap();
            emit_report(&summaries, Some(&lines), &config).unwrap();
            assert_eq!(first, std::fs::read(&path).unwrap());
        }
    }
}
