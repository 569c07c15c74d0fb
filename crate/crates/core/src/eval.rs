//! Human-evaluation arithmetic: Fleiss' kappa over N items rated by n
//! annotators into k categories, and the strict-majority "makes sense" rate.

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("annotation file is empty")]
    Empty,
    #[error("missing '#categories:' header line")]
    MissingHeader,
    #[error("need at least 2 categories, found {0}")]
    TooFewCategories(usize),
    #[error("duplicate category {0:?}")]
    DuplicateCategory(String),
    #[error("need at least 2 raters, found {0}")]
    TooFewRaters(usize),
    #[error("row {row}: expected {expected} labels, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: usize, label: String },
    #[error("row {row}: category index {index} out of range")]
    CategoryOutOfRange { row: usize, index: usize },
    #[error("row {row}: {source}")]
    Csv {
        row: usize,
        #[source]
        source: csv::Error,
    },
    #[error("kappa is undefined: every rating falls in a single category")]
    Degenerate,
}

/// Items × raters matrix of category indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMatrix {
    categories: Vec<String>,
    rows: Vec<Vec<usize>>,
}

impl AnnotationMatrix {
    pub fn new(categories: Vec<String>, rows: Vec<Vec<usize>>) -> Result<Self, EvalError> {
        if categories.len() < 2 {
            return Err(EvalError::TooFewCategories(categories.len()));
        }
        for (i, c) in categories.iter().enumerate() {
            if categories[..i].contains(c) {
                return Err(EvalError::DuplicateCategory(c.clone()));
            }
        }
        let Some(first) = rows.first() else {
            return Err(EvalError::Empty);
        };
        let raters = first.len();
        if raters < 2 {
            return Err(EvalError::TooFewRaters(raters));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != raters {
                return Err(EvalError::Ragged {
                    row: i + 1,
                    expected: raters,
                    found: row.len(),
                });
            }
            if let Some(&index) = row.iter().find(|&&c| c >= categories.len()) {
                return Err(EvalError::CategoryOutOfRange { row: i + 1, index });
            }
        }
        Ok(AnnotationMatrix { categories, rows })
    }

    /// Convenience for anonymous categories `0..k`.
    pub fn with_k(k: usize, rows: Vec<Vec<usize>>) -> Result<Self, EvalError> {
        Self::new((0..k).map(|c| c.to_string()).collect(), rows)
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    pub fn items(&self) -> usize {
        self.rows.len()
    }

    pub fn raters(&self) -> usize {
        self.rows[0].len()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// `n_ij`: how many raters put item i into category j.
    pub fn category_counts(&self) -> Vec<Vec<usize>> {
        self.rows
            .iter()
            .map(|row| {
                let mut counts = vec![0; self.categories.len()];
                for &c in row {
                    counts[c] += 1;
                }
                counts
            })
            .collect()
    }
}

/// Fleiss' kappa, `(P̄ − P̄e) / (1 − P̄e)`.
pub fn fleiss_kappa(m: &AnnotationMatrix) -> Result<f64, EvalError> {
    let counts = m.category_counts();
    let n = m.raters() as f64;
    let items = m.items() as f64;

    let observed = counts
        .iter()
        .map(|row| {
            let sq: usize = row.iter().map(|c| c * c).sum();
            (sq as f64 - n) / (n * (n - 1.0))
        })
        .sum::<f64>()
        / items;

    let mut totals = vec![0usize; m.categories.len()];
    for row in &counts {
        for (t, c) in totals.iter_mut().zip(row) {
            *t += c;
        }
    }
    let ratings = items * n;
    if totals.iter().any(|&t| t as f64 == ratings) {
        return Err(EvalError::Degenerate);
    }
    let chance: f64 = totals
        .iter()
        .map(|&t| {
            let p = t as f64 / ratings;
            p * p
        })
        .sum();
    Ok((observed - chance) / (1.0 - chance))
}

/// Fraction of items where more than half of the raters chose `positive`.
pub fn makes_sense_rate(m: &AnnotationMatrix, positive: usize) -> f64 {
    let n = m.raters();
    let hits = m
        .rows
        .iter()
        .filter(|row| 2 * row.iter().filter(|&&c| c == positive).count() > n)
        .count();
    hits as f64 / m.items() as f64
}

/// Parses the annotation CSV: a `#categories: A,B,...` header followed by
/// one row of rater labels per item.
pub fn parse_annotations(text: &str) -> Result<AnnotationMatrix, EvalError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(EvalError::Empty)?;
    let declared = header
        .trim()
        .strip_prefix('#')
        .map(str::trim_start)
        .and_then(|h| h.strip_prefix("categories:"))
        .ok_or(EvalError::MissingHeader)?;
    let categories: Vec<String> = declared
        .split(',')
        .map(|c| c.trim().to_owned())
        .filter(|c| !c.is_empty())
        .collect();
    if categories.len() < 2 {
        return Err(EvalError::TooFewCategories(categories.len()));
    }

    let mut rows = Vec::new();
    let mut expected = None;
    for (lineno, body) in lines {
        let row = lineno + 1;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let record = match reader.records().next() {
            Some(r) => r.map_err(|source| EvalError::Csv { row, source })?,
            None => continue,
        };
        let width = *expected.get_or_insert(record.len());
        if record.len() != width {
            return Err(EvalError::Ragged {
                row,
                expected: width,
                found: record.len(),
            });
        }
        let labels = record
            .iter()
            .map(|label| {
                categories
                    .iter()
                    .position(|c| c == label)
                    .ok_or_else(|| EvalError::UnknownLabel {
                        row,
                        label: label.to_owned(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(labels);
    }
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    AnnotationMatrix::new(categories, rows)
}

pub fn load_annotations(path: &Path) -> Result<AnnotationMatrix, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_annotations(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Straight transcription of the textbook definition, kept apart from
    /// the library path.
    fn naive_kappa(rows: &[Vec<usize>], k: usize) -> f64 {
        let big_n = rows.len() as f64;
        let n = rows[0].len() as f64;
        let mut p_i_sum = 0.0;
        let mut p_j = vec![0.0; k];
        for row in rows {
            let mut s = 0.0;
            for (j, pj) in p_j.iter_mut().enumerate() {
                let nij = row.iter().filter(|&&c| c == j).count() as f64;
                s += nij * nij;
                *pj += nij;
            }
            p_i_sum += (s - n) / (n * (n - 1.0));
        }
        let p_bar = p_i_sum / big_n;
        let pe: f64 = p_j.iter().map(|t| (t / (big_n * n)).powi(2)).sum();
        (p_bar - pe) / (1.0 - pe)
    }

    #[test]
    fn perfect_agreement_is_one() {
        let rows = (0..10).map(|i| vec![i % 2; 4]).collect();
        let m = AnnotationMatrix::with_k(2, rows).unwrap();
        assert_eq!(fleiss_kappa(&m).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_regression() {
        // Per-item agreement 1, 1, 1/3, 1/2 → P̄ = 17/24; pooled proportions
        // 9/16 and 7/16 → P̄e = 130/256; kappa = 11/27.
        let rows = vec![
            vec![0, 0, 0, 0],
            vec![1, 1, 1, 1],
            vec![0, 0, 1, 1],
            vec![0, 0, 0, 1],
        ];
        let m = AnnotationMatrix::with_k(2, rows.clone()).unwrap();
        let kappa = fleiss_kappa(&m).unwrap();
        assert!((kappa - 11.0 / 27.0).abs() < 1e-12, "{kappa}");
        assert!((naive_kappa(&rows, 2) - 11.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn random_raters_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1971);
        let rows = (0..10_000)
            .map(|_| (0..4).map(|_| rng.gen_range(0..2)).collect())
            .collect();
        let kappa = fleiss_kappa(&AnnotationMatrix::with_k(2, rows).unwrap()).unwrap();
        assert!(kappa.abs() < 0.05, "{kappa}");
    }

    #[test]
    fn degenerate_matrix() {
        let m = AnnotationMatrix::with_k(2, vec![vec![1; 4]; 5]).unwrap();
        assert!(matches!(fleiss_kappa(&m), Err(EvalError::Degenerate)));
    }

    #[test]
    fn makes_sense_strict_majority() {
        let mut rows = vec![vec![0, 0, 0, 1]; 129];
        rows.extend(vec![vec![0, 0, 1, 1]; 40]);
        rows.extend(vec![vec![1, 1, 1, 1]; 31]);
        let m = AnnotationMatrix::with_k(2, rows).unwrap();
        assert_eq!(makes_sense_rate(&m, 0), 0.645);

        let none = AnnotationMatrix::with_k(2, vec![vec![1; 4]; 7]).unwrap();
        assert_eq!(makes_sense_rate(&none, 0), 0.0);

        let tie = AnnotationMatrix::with_k(2, vec![vec![0, 0, 1, 1]]).unwrap();
        assert_eq!(makes_sense_rate(&tie, 0), 0.0);
    }

    #[test]
    fn matrix_validation() {
        assert!(matches!(
            AnnotationMatrix::with_k(2, vec![vec![0, 1], vec![0]]),
            Err(EvalError::Ragged { row: 2, .. })
        ));
        assert!(matches!(
            AnnotationMatrix::with_k(2, vec![]),
            Err(EvalError::Empty)
        ));
        assert!(matches!(
            AnnotationMatrix::with_k(2, vec![vec![0]]),
            Err(EvalError::TooFewRaters(1))
        ));
        assert!(matches!(
            AnnotationMatrix::with_k(1, vec![vec![0, 0]]),
            Err(EvalError::TooFewCategories(1))
        ));
        assert!(matches!(
            AnnotationMatrix::with_k(2, vec![vec![0, 2]]),
            Err(EvalError::CategoryOutOfRange { row: 1, index: 2 })
        ));
    }

    #[test]
    fn parses_csv() {
        let m = parse_annotations(
            "#categories: MakesSense,DoesNotMakeSense\nMakesSense,MakesSense\nDoesNotMakeSense, MakesSense\n\nMakesSense,DoesNotMakeSense\n",
        )
        .unwrap();
        assert_eq!(m.items(), 3);
        assert_eq!(m.raters(), 2);
        assert_eq!(m.rows()[1], [1, 0]);
        assert_eq!(m.category_index("DoesNotMakeSense"), Some(1));
    }

    #[test]
    fn csv_errors() {
        let header = "#categories: yes,no\n";
        match parse_annotations(&format!("{header}yes,no\nyes,no,yes\n")) {
            Err(EvalError::Ragged {
                row: 3,
                expected: 2,
                found: 3,
            }) => {}
            other => panic!("{other:?}"),
        }
        match parse_annotations(&format!("{header}yes,maybe\n")) {
            Err(EvalError::UnknownLabel { row: 2, label }) => assert_eq!(label, "maybe"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_annotations(""), Err(EvalError::Empty)));
        assert!(matches!(parse_annotations(header), Err(EvalError::Empty)));
        assert!(matches!(
            parse_annotations("yes,no\n"),
            Err(EvalError::MissingHeader)
        ));
        assert!(matches!(
            parse_annotations("#categories: yes\nyes,yes\n"),
            Err(EvalError::TooFewCategories(1))
        ));
    }

    fn matrix_strategy() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
        (2usize..5, 2usize..7, 1usize..=50).prop_flat_map(|(k, n, items)| {
            (
                Just(k),
                proptest::collection::vec(proptest::collection::vec(0..k, n), items),
            )
        })
    }

    proptest! {
        #[test]
        fn kappa_matches_naive_and_stays_in_range((k, rows) in matrix_strategy()) {
            let m = AnnotationMatrix::with_k(k, rows.clone()).unwrap();
            match fleiss_kappa(&m) {
                Ok(kappa) => {
                    prop_assert!((kappa - naive_kappa(&rows, k)).abs() < 1e-12);
                    prop_assert!((-1.0..=1.0).contains(&kappa), "{}", kappa);
                }
                Err(EvalError::Degenerate) => {
                    let first = rows[0][0];
                    prop_assert!(rows.iter().flatten().all(|&c| c == first));
                }
                Err(e) => prop_assert!(false, "{}", e),
            }
        }

        #[test]
        fn permutation_invariance((k, rows) in matrix_strategy(), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut cols: Vec<usize> = (0..rows[0].len()).collect();
            cols.shuffle(&mut rng);
            let mut permuted: Vec<Vec<usize>> = rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c]).collect())
                .collect();
            permuted.shuffle(&mut rng);
            let a = AnnotationMatrix::with_k(k, rows).unwrap();
            let b = AnnotationMatrix::with_k(k, permuted).unwrap();
            if let (Ok(x), Ok(y)) = (fleiss_kappa(&a), fleiss_kappa(&b)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
            prop_assert_eq!(makes_sense_rate(&a, 0), makes_sense_rate(&b, 0));
        }

        #[test]
        fn label_swap_symmetry(rows in proptest::collection::vec(proptest::collection::vec(0usize..2, 4), 1..40)) {
            let swapped: Vec<Vec<usize>> = rows.iter().map(|r| r.iter().map(|c| 1 - c).collect()).collect();
            let a = fleiss_kappa(&AnnotationMatrix::with_k(2, rows).unwrap());
            let b = fleiss_kappa(&AnnotationMatrix::with_k(2, swapped).unwrap());
            match (a, b) {
                (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "asymmetric definedness"),
            }
        }
    }
}
