use std::collections::BTreeMap;

/// Smoothed tf-idf fitted on one set of documents.
#[derive(Debug, Clone, PartialEq)]
pub struct TfIdfModel {
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
}

/// Sparse row: (column, value) sorted by column.
pub type SparseRow = Vec<(usize, f64)>;

impl TfIdfModel {
    /// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`.
    pub fn fit(docs: &[Vec<String>]) -> Self {
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let mut terms: Vec<&str> = doc.iter().map(String::as_str).collect();
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            vocabulary.insert(term.to_string(), i);
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
        }
        TfIdfModel { vocabulary, idf }
    }

    /// Raw term counts times idf, L2-normalized. Unknown terms are ignored.
    pub fn transform(&self, doc: &[String]) -> SparseRow {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for t in doc {
            if let Some(&col) = self.vocabulary.get(t) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut row: SparseRow = counts.into_iter().map(|(c, tf)| (c, tf * self.idf[c])).collect();
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, v) in row.iter_mut() {
                *v /= norm;
            }
        }
        row
    }
}

/// Dot product of two sorted sparse rows.
pub fn sparse_dot(a: &SparseRow, b: &SparseRow) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}
