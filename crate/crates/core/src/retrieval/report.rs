use super::RetrievalReport;

pub const TSV_HEADER: &str = "mode\tdirection\trecall@1\trecall@5\trecall@10\tpreselect_s\trerank_s\ttotal_s";

fn fields(r: &RetrievalReport) -> Vec<String> {
    vec![
        r.mode.clone(),
        r.direction.name().to_string(),
        format!("{:.4}", r.recall[0]),
        format!("{:.4}", r.recall[1]),
        format!("{:.4}", r.recall[2]),
        format!("{:.6}", r.preselect_s),
        format!("{:.6}", r.rerank_s),
        format!("{:.6}", r.total_s),
    ]
}

/// Header line plus one tab-separated row per report, newline-terminated.
pub fn format_tsv(reports: &[RetrievalReport]) -> String {
    let mut out = String::from(TSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&fields(r).join("\t"));
        out.push('\n');
    }
    out
}

/// The same rows as [`format_tsv`], padded into aligned columns.
pub fn format_table(reports: &[RetrievalReport]) -> String {
    let header: Vec<String> = TSV_HEADER.split('\t').map(str::to_string).collect();
    let rows: Vec<Vec<String>> = std::iter::once(header).chain(reports.iter().map(fields)).collect();
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (cell, &w))| {
                if c < 2 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}
