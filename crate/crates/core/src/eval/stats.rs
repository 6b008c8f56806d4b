use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Category used for records that carry none.
pub const UNCATEGORIZED: &str = "uncategorized";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub counts: Vec<u64>,
}

/// Per-category class counts in first-seen category order, plus a totals row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub classes: Vec<String>,
    pub rows: Vec<CategoryRow>,
}

impl CategoryStats {
    pub fn totals(&self) -> Vec<u64> {
        let mut t = vec![0; self.classes.len()];
        for r in &self.rows {
            for (a, b) in t.iter_mut().zip(&r.counts) {
                *a += b;
            }
        }
        t
    }

    pub fn row(&self, category: &str) -> Option<&[u64]> {
        self.rows
            .iter()
            .find(|r| r.category == category)
            .map(|r| r.counts.as_slice())
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Tab-separated: `Category`, one capitalized column per class, then a `Total` row.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Category");
        for c in &self.classes {
            let mut chars = c.chars();
            let cap: String = chars
                .next()
                .map(|f| f.to_uppercase().chain(chars).collect())
                .unwrap_or_default();
            let _ = write!(out, "\t{cap}");
        }
        out.push('\n');
        if self.rows.is_empty() {
            return out;
        }
        let mut line = |name: &str, counts: &[u64]| {
            out.push_str(name);
            for n in counts {
                let _ = write!(out, "\t{n}");
            }
            out.push('\n');
        };
        for r in &self.rows {
            line(&r.category, &r.counts);
        }
        line("Total", &self.totals());
        out
    }
}

/// Counts `(category, class index)` pairs. Labels outside `classes` are ignored.
pub fn category_stats<'a>(
    classes: &[String],
    records: impl IntoIterator<Item = (Option<&'a str>, usize)>,
) -> CategoryStats {
    let mut rows: Vec<CategoryRow> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (category, label) in records {
        if label >= classes.len() {
            continue;
        }
        let name = category.filter(|c| !c.trim().is_empty()).unwrap_or(UNCATEGORIZED);
        let i = *index.entry(name.to_owned()).or_insert_with(|| {
            rows.push(CategoryRow {
                category: name.to_owned(),
                counts: vec![0; classes.len()],
            });
            rows.len() - 1
        });
        rows[i].counts[label] += 1;
    }
    CategoryStats {
        classes: classes.to_vec(),
        rows,
    }
}
