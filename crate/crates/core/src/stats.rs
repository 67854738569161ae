//! Suite volume statistics in the `Mean (Min–Max) ×multiplier` layout.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde_json::{Map, Value as Json};

use crate::suite::SuiteCounts;

pub const CATEGORIES: [&str; 3] = ["Expected Input-Output", "Unexpected Output", "Unexpected Input"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CategoryStats {
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    /// `mean / baseline mean`, when a baseline was given and its mean is
    /// non-zero.
    pub multiplier: Option<f64>,
}

impl CategoryStats {
    /// `370.07 (5–705) ×62.83`
    pub fn cell(&self) -> String {
        let mut s = format!("{:.2} ({}–{})", self.mean, self.min, self.max);
        if let Some(m) = self.multiplier {
            s.push_str(&format!(" ×{m:.2}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteStats {
    pub suites: usize,
    /// In [`CATEGORIES`] order.
    pub categories: [CategoryStats; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no suites to summarise")]
pub struct EmptySuiteSet;

fn columns(c: &SuiteCounts) -> [usize; 3] {
    [c.expected_pairs, c.unexpected_outputs, c.unexpected_inputs]
}

fn means(counts: &[SuiteCounts]) -> [f64; 3] {
    let mut sum = [0usize; 3];
    for c in counts {
        for (s, v) in sum.iter_mut().zip(columns(c)) {
            *s += v;
        }
    }
    sum.map(|s| s as f64 / counts.len() as f64)
}

/// Ratio rounded to two decimals.
pub fn multiplier(mean: f64, baseline_mean: f64) -> Option<f64> {
    (baseline_mean > 0.0).then(|| round2(mean / baseline_mean))
}

fn round2(x: f64) -> f64 {
    // Round through the decimal rendering so reports and values agree.
    format!("{x:.2}").parse().expect("formatted float parses")
}

pub fn compute_stats(suites: &[SuiteCounts], baseline: Option<&[SuiteCounts]>) -> Result<SuiteStats, EmptySuiteSet> {
    if suites.is_empty() || baseline.is_some_and(<[_]>::is_empty) {
        return Err(EmptySuiteSet);
    }
    let mean = means(suites);
    let base = baseline.map(means);
    let categories = core::array::from_fn(|k| {
        let col = suites.iter().map(|c| columns(c)[k]);
        CategoryStats {
            mean: mean[k],
            min: col.clone().min().expect("non-empty"),
            max: col.max().expect("non-empty"),
            multiplier: base.and_then(|b| multiplier(mean[k], b[k])),
        }
    });
    Ok(SuiteStats {
        suites: suites.len(),
        categories,
    })
}

impl SuiteStats {
    pub fn to_json(&self) -> Json {
        let mut m = Map::new();
        m.insert("suites".into(), self.suites.into());
        for (name, c) in CATEGORIES.iter().zip(&self.categories) {
            let mut o = Map::new();
            o.insert("mean".into(), Json::from(round2(c.mean)));
            o.insert("min".into(), c.min.into());
            o.insert("max".into(), c.max.into());
            o.insert("multiplier".into(), c.multiplier.map_or(Json::Null, Json::from));
            m.insert((*name).into(), Json::Object(o));
        }
        Json::Object(m)
    }
}

/// Aligned plain-text table with one row per labelled stats set.
pub fn render_table(rows: &[(&str, &SuiteStats)]) -> String {
    let mut grid: Vec<Vec<String>> = Vec::new();
    let mut head = Vec::from(["Suite set".into()]);
    head.extend(CATEGORIES.iter().map(|c| String::from(*c)));
    grid.push(head);
    for (label, s) in rows {
        let mut r = Vec::from([String::from(*label)]);
        r.extend(s.categories.iter().map(CategoryStats::cell));
        grid.push(r);
    }
    let widths: Vec<usize> = (0..4)
        .map(|k| grid.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in &grid {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(e: usize, o: usize, i: usize) -> SuiteCounts {
        SuiteCounts {
            expected_pairs: e,
            unexpected_outputs: o,
            unexpected_inputs: i,
        }
    }

    #[test]
    fn single_suite() {
        let s = compute_stats(&[counts(3, 1, 0)], None).unwrap();
        assert_eq!(s.categories[0].cell(), "3.00 (3–3)");
        assert_eq!(s.categories[2].multiplier, None);
        assert_eq!(compute_stats(&[], None), Err(EmptySuiteSet));
    }

    #[test]
    fn multiplier_and_table() {
        let plus = [counts(10, 4, 0), counts(20, 0, 3)];
        let base = [counts(2, 1, 0), counts(3, 1, 0)];
        let s = compute_stats(&plus, Some(&base)).unwrap();
        assert_eq!(s.categories[0].cell(), "15.00 (10–20) ×6.00");
        assert_eq!(s.categories[1].cell(), "2.00 (0–4) ×2.00");
        // Zero baseline mean has no multiplier.
        assert_eq!(s.categories[2].cell(), "1.50 (0–3)");
        let t = render_table(&[("plus", &s)]);
        assert!(t.starts_with("Suite set  Expected Input-Output"));
        assert!(t.lines().nth(1).unwrap().starts_with("plus       15.00 (10–20) ×6.00"));
    }
}
