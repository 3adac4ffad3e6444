//! Aligned text tables and CSV for experiment results.

use viewpath_core::evaluation::CoverageReport;

use crate::error::Result;
use crate::experiment::{Cell, CellResult, SweepParam, SweepRow};
use crate::export::csv_string;

/// Left-aligned columns separated by two spaces.
pub fn aligned(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0; cols];
    for r in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    for r in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
        let line: Vec<String> = r.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

pub fn mean_max_min(r: &CoverageReport) -> String {
    format!("{} ({}, {})", pct(r.mean), pct(r.max), pct(r.min))
}

pub fn rate_time(r: &CoverageReport) -> String {
    format!("({:.2}%/s, {}s)", r.coverage_rate, r.survey_time)
}

fn distinct(cells: &[Cell], f: impl Fn(&Cell) -> &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for c in cells {
        if !out.iter().any(|x| x == f(c)) {
            out.push(f(c).to_string());
        }
    }
    out
}

/// Rows per path (and per row label), one column per layout.
fn grid_table(cells: &[Cell], labels: &[&str], cell: impl Fn(&CellResult, usize) -> Option<String>) -> Option<String> {
    let layouts = distinct(cells, |c| &c.layout);
    let paths = distinct(cells, |c| &c.path);
    let mut header = vec!["".to_string(), "base path".to_string()];
    header.extend(layouts.iter().cloned());
    let mut rows = Vec::new();
    let mut any = false;
    for (li, label) in labels.iter().enumerate() {
        for p in &paths {
            let mut row = vec![label.to_string(), p.clone()];
            for l in &layouts {
                let v = cells
                    .iter()
                    .find(|c| &c.layout == l && &c.path == p)
                    .map(|c| match &c.result {
                        Ok(r) => cell(r, li),
                        Err(_) => Some("failed".into()),
                    })
                    .unwrap_or(None);
                any |= v.is_some();
                row.push(v.unwrap_or_else(|| "-".into()));
            }
            rows.push(row);
        }
    }
    any.then(|| aligned(&header, &rows))
}

/// Text rendering of every table the cells carry data for.
pub fn compare_text(cells: &[Cell]) -> String {
    let mut out = String::new();
    let mut section = |title: &str, body: Option<String>| {
        if let Some(b) = body {
            out.push_str(title);
            out.push('\n');
            out.push_str(&b);
            out.push('\n');
        }
    };
    section(
        "Coverage study: mean (max, min) over objects of interest",
        grid_table(cells, &["greedy", "see-nearest"], |r, i| match i {
            0 => Some(mean_max_min(&r.greedy)),
            _ => r.nearest.as_ref().map(mean_max_min),
        }),
    );
    section(
        "Joint reachability ablation: mean coverage [infeasible transitions planned]",
        grid_table(cells, &["with filter", "without filter"], |r, i| match i {
            0 => Some(format!("{} [{}]", pct(r.greedy.mean), r.greedy.violations.len())),
            _ => r
                .unfiltered
                .as_ref()
                .map(|u| format!("{} [{}]", pct(u.mean), u.violations.len())),
        }),
    );
    section(
        "Coverage rate and survey time with and without stopping",
        grid_table(cells, &["no stop", "with stop"], |r, i| match i {
            0 => r.stops.as_ref().map(|_| rate_time(&r.greedy)),
            _ => r.stops.as_ref().map(rate_time),
        }),
    );
    section(
        "Entire camera stream against viewpoints only: mean coverage",
        grid_table(cells, &["all images", "viewpoints"], |r, i| match i {
            0 => r.all_images.as_ref().map(|a| pct(a.mean)),
            _ => r.all_images.as_ref().map(|_| pct(r.greedy.mean)),
        }),
    );
    let mut audit = Vec::new();
    for c in cells {
        match &c.result {
            Ok(r) => {
                let s: Vec<String> = r
                    .audit
                    .iter()
                    .map(|(v, ok)| format!("{v} {}", if *ok { "executable" } else { "NOT executable" }))
                    .collect();
                audit.push(vec![format!("{}/{}", c.layout, c.path), r.n.to_string(), s.join(", ")]);
            }
            Err(e) => audit.push(vec![format!("{}/{}", c.layout, c.path), "-".into(), format!("failed: {e}")]),
        }
    }
    section(
        "Executability audit",
        Some(aligned(&["scenario".into(), "N".into(), "planned paths".into()], &audit)),
    );
    out
}

/// Long-format CSV: one row per (cell, variant, survey mode).
pub fn compare_csv(cells: &[Cell]) -> Result<String> {
    let mut rows = Vec::new();
    for c in cells {
        let r = match &c.result {
            Ok(r) => r,
            Err(e) => {
                let mut row = vec![c.layout.clone(), c.path.clone()];
                row.extend(std::iter::repeat_n(String::new(), 10));
                row.push(e.clone());
                rows.push(row);
                continue;
            }
        };
        let variants = [
            ("greedy", Some(&r.greedy)),
            ("see-nearest", r.nearest.as_ref()),
            ("greedy-unfiltered", r.unfiltered.as_ref()),
            ("greedy-stops", r.stops.as_ref()),
            ("greedy", r.all_images.as_ref()),
        ];
        for (name, rep) in variants {
            if let Some(rep) = rep {
                rows.push(vec![
                    c.layout.clone(),
                    c.path.clone(),
                    r.n.to_string(),
                    name.to_string(),
                    rep.mode.name().to_string(),
                    format!("{:.4}", rep.mean * 100.0),
                    format!("{:.4}", rep.max * 100.0),
                    format!("{:.4}", rep.min * 100.0),
                    format!("{}", rep.survey_time),
                    format!("{:.4}", rep.coverage_rate),
                    rep.executable().to_string(),
                    rep.violations.len().to_string(),
                    String::new(),
                ]);
            }
        }
    }
    csv_string(
        &[
            "layout",
            "path",
            "n",
            "variant",
            "mode",
            "mean_pct",
            "max_pct",
            "min_pct",
            "survey_time_s",
            "rate_pct_per_s",
            "executable",
            "violations",
            "error",
        ],
        rows,
    )
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> Result<String> {
    let rows = rows.iter().map(|r| match &r.result {
        Ok(p) => vec![
            r.value.to_string(),
            p.n.to_string(),
            p.report.survey_time.to_string(),
            format!("{:.4}", p.report.mean * 100.0),
            format!("{:.4}", p.report.max * 100.0),
            format!("{:.4}", p.report.min * 100.0),
            p.all_images.as_ref().map_or(String::new(), |a| format!("{:.4}", a.mean * 100.0)),
            String::new(),
        ],
        Err(e) => vec![
            r.value.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            e.clone(),
        ],
    });
    csv_string(
        &[
            param.name(),
            "n",
            "survey_time_s",
            "mean_pct",
            "max_pct",
            "min_pct",
            "all_images_mean_pct",
            "error",
        ],
        rows,
    )
}

pub fn report_text(r: &CoverageReport) -> String {
    let mut rows: Vec<Vec<String>> = r.per_object.iter().map(|(id, c)| vec![id.clone(), pct(*c)]).collect();
    rows.push(vec!["mean (max, min)".into(), mean_max_min(r)]);
    rows.push(vec!["survey time, rate".into(), rate_time(r)]);
    rows.push(vec!["mode".into(), r.mode.name().into()]);
    let exec = if r.executable() {
        "yes".to_string()
    } else {
        format!("no, infeasible transitions into steps {:?}", r.violations)
    };
    rows.push(vec!["executable".into(), exec]);
    aligned(&["object".into(), "coverage".into()], &rows)
}
