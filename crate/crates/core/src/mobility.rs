//! Region-movement patterns: path matrix, sequential-pattern support, and
//! association/adjacency confidence scores.
//!
//! A region history is chunked into the rows of a path matrix (zero-padded on
//! the right). A pattern's support adds, per row, 1 when it appears as a
//! contiguous substring, and `1 / (1 + t)` when it appears only as a gapped
//! subsequence, where `t` is the fewest extraneous elements interleaved into
//! the match over all order-preserving embeddings. Rule confidence is the
//! usual support ratio scaled to 0-100, and the live region score is the best
//! of three rules conditioned on the last one or two visited regions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("path must contain at least one region")]
    EmptyPath,
    #[error("region ids start at 1; 0 is reserved for padding")]
    ZeroRegion,
    #[error("row length must be at least 1")]
    ZeroRowLength,
    #[error("patterns must be non-empty")]
    EmptyPattern,
    #[error("adjacency needs at least 2 regions in the path")]
    TooFewTransitions,
}

/// A non-empty sequence of region ids (no padding zeros).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pattern(Vec<u32>);

impl Pattern {
    pub fn new(regions: Vec<u32>) -> Result<Self, MobilityError> {
        if regions.is_empty() {
            return Err(MobilityError::EmptyPattern);
        }
        if regions.contains(&0) {
            return Err(MobilityError::ZeroRegion);
        }
        Ok(Pattern(regions))
    }

    pub fn regions(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The pattern followed by `other`; used to form rule bodies.
    pub fn concat(&self, other: &Pattern) -> Pattern {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Pattern(v)
    }
}

/// Region history chunked into fixed-width rows, zero-padded at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMatrix {
    rows: Vec<Vec<u32>>,
    row_len: usize,
}

impl PathMatrix {
    /// Chunks `path` into rows of `row_len`, padding the final partial row
    /// with zeros.
    pub fn from_path(path: &[u32], row_len: usize) -> Result<Self, MobilityError> {
        if row_len == 0 {
            return Err(MobilityError::ZeroRowLength);
        }
        if path.is_empty() {
            return Err(MobilityError::EmptyPath);
        }
        if path.contains(&0) {
            return Err(MobilityError::ZeroRegion);
        }
        let rows = path
            .chunks(row_len)
            .map(|chunk| {
                let mut row = chunk.to_vec();
                row.resize(row_len, 0);
                row
            })
            .collect();
        Ok(PathMatrix { rows, row_len })
    }

    /// Builds a matrix from natural segments (e.g. one per week), padding
    /// every segment to the longest one.
    pub fn from_segments(segments: &[Vec<u32>]) -> Result<Self, MobilityError> {
        if segments.is_empty() || segments.iter().all(|s| s.is_empty()) {
            return Err(MobilityError::EmptyPath);
        }
        if segments.iter().flatten().any(|&r| r == 0) {
            return Err(MobilityError::ZeroRegion);
        }
        let row_len = segments.iter().map(Vec::len).max().expect("non-empty");
        let rows = segments
            .iter()
            .map(|seg| {
                let mut row = seg.clone();
                row.resize(row_len, 0);
                row
            })
            .collect();
        Ok(PathMatrix { rows, row_len })
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn row_len(&self) -> usize {
        self.row_len
    }

    /// Largest region id present (0 for an all-padding matrix, which cannot
    /// be constructed).
    pub fn region_count(&self) -> u32 {
        self.rows.iter().flatten().copied().max().unwrap_or(0)
    }

    /// The non-padding prefix of a row.
    fn active(row: &[u32]) -> &[u32] {
        let end = row.iter().position(|&r| r == 0).unwrap_or(row.len());
        &row[..end]
    }
}

/// Smallest number of extraneous elements interleaved into an order-
/// preserving embedding of `pattern` in `row`, or `None` when `pattern` is
/// not a subsequence. For each candidate start the earliest completion
/// minimizes the span, so scanning starts left to right finds the optimum.
fn min_gap(row: &[u32], pattern: &[u32]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for start in 0..row.len() {
        if row[start] != pattern[0] {
            continue;
        }
        let mut pos = start;
        let mut matched = 1;
        while matched < pattern.len() {
            pos += 1;
            if pos >= row.len() {
                break;
            }
            if row[pos] == pattern[matched] {
                matched += 1;
            }
        }
        if matched == pattern.len() {
            let gap = (pos - start + 1) - pattern.len();
            if best.is_none_or(|b| gap < b) {
                best = Some(gap);
            }
        }
    }
    best
}

/// Pattern support summed over rows: 1 per row with a contiguous occurrence,
/// `1 / (1 + t)` per row with only a gapped one (`t` = minimal interleave),
/// 0 per row without the pattern.
pub fn support(matrix: &PathMatrix, pattern: &Pattern) -> f64 {
    let p = pattern.regions();
    matrix
        .rows()
        .iter()
        .map(|row| {
            let active = PathMatrix::active(row);
            match min_gap(active, p) {
                Some(t) => 1.0 / (1.0 + t as f64),
                None => 0.0,
            }
        })
        .sum()
}

/// `100 * S(antecedent ++ consequent) / S(antecedent)`; 0 when the
/// antecedent itself has no support.
pub fn rule_confidence(matrix: &PathMatrix, antecedent: &Pattern, consequent: &Pattern) -> f64 {
    let s_ante = support(matrix, antecedent);
    if s_ante == 0.0 {
        return 0.0;
    }
    100.0 * support(matrix, &antecedent.concat(consequent)) / s_ante
}

/// Best confidence among the three rules that predict the next region from
/// the last one or two visited regions:
///
/// 1. `<prev2> -> <prev1, next>`
/// 2. `<prev2, prev1> -> <next>`
/// 3. `<prev1> -> <next>`
///
/// With no `prev2` only rule 3 applies; with no history at all the score is 0.
pub fn region_confidence_assoc(
    matrix: &PathMatrix,
    prev2: Option<u32>,
    prev1: Option<u32>,
    next: u32,
) -> f64 {
    let Some(a_n) = prev1 else { return 0.0 };
    let single = |r: u32| Pattern(vec![r]);
    let rule3 = rule_confidence(matrix, &single(a_n), &single(next));
    let Some(a_n1) = prev2 else { return rule3 };
    let rule1 = rule_confidence(matrix, &single(a_n1), &Pattern(vec![a_n, next]));
    let rule2 = rule_confidence(matrix, &Pattern(vec![a_n1, a_n]), &single(next));
    rule1.max(rule2).max(rule3)
}

/// Row-stochastic first-order transition matrix estimated from the path
/// matrix. Transitions never cross a row boundary (each row is a separate
/// visit segment), and rows for never-departed regions stay all zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    probs: Vec<Vec<f64>>,
}

impl AdjacencyMatrix {
    pub fn from_path_matrix(matrix: &PathMatrix) -> Result<Self, MobilityError> {
        let n = matrix.region_count() as usize;
        let total_regions: usize = matrix
            .rows()
            .iter()
            .map(|r| PathMatrix::active(r).len())
            .sum();
        if total_regions < 2 {
            return Err(MobilityError::TooFewTransitions);
        }
        let mut counts = vec![vec![0.0_f64; n]; n];
        for row in matrix.rows() {
            for w in PathMatrix::active(row).windows(2) {
                counts[(w[0] - 1) as usize][(w[1] - 1) as usize] += 1.0;
            }
        }
        for row in &mut counts {
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for v in row.iter_mut() {
                    *v /= total;
                }
            }
        }
        Ok(AdjacencyMatrix { probs: counts })
    }

    /// `P(to | from)`; 0 for regions outside the matrix.
    pub fn prob(&self, from: u32, to: u32) -> f64 {
        if from == 0 || to == 0 {
            return 0.0;
        }
        let (i, j) = ((from - 1) as usize, (to - 1) as usize);
        if i >= self.probs.len() || j >= self.probs.len() {
            return 0.0;
        }
        self.probs[i][j]
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }
}

/// Adjacency-based region score: `100 * P(next | prev)`.
pub fn region_confidence_adj(adj: &AdjacencyMatrix, prev: u32, next: u32) -> f64 {
    100.0 * adj.prob(prev, next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    fn pat(regions: &[u32]) -> Pattern {
        Pattern::new(regions.to_vec()).unwrap()
    }

    /// Four observed visit segments used as a reference fixture throughout:
    /// supports, confidences, and transition probabilities below were worked
    /// out by hand against this history.
    fn reference_matrix() -> PathMatrix {
        PathMatrix::from_segments(&[
            vec![7, 1, 1, 2],
            vec![6, 6, 9, 4, 4, 4, 10, 1, 1],
            vec![1, 1, 1, 6, 6, 1, 12, 3],
            vec![8, 11],
        ])
        .unwrap()
    }

    #[test]
    fn segments_pad_to_the_longest_row() {
        let m = reference_matrix();
        assert_eq!(m.row_len(), 9);
        assert_eq!(
            m.rows(),
            &[
                vec![7, 1, 1, 2, 0, 0, 0, 0, 0],
                vec![6, 6, 9, 4, 4, 4, 10, 1, 1],
                vec![1, 1, 1, 6, 6, 1, 12, 3, 0],
                vec![8, 11, 0, 0, 0, 0, 0, 0, 0],
            ]
        );
        assert_eq!(m.region_count(), 12);
    }

    #[test]
    fn chunked_path_pads_the_final_row() {
        let m = PathMatrix::from_path(&[5, 3, 5, 2, 5, 3, 1], 3).unwrap();
        assert_eq!(m.rows(), &[vec![5, 3, 5], vec![2, 5, 3], vec![1, 0, 0]]);
        let exact = PathMatrix::from_path(&[1, 2, 3, 4], 2).unwrap();
        assert_eq!(exact.rows(), &[vec![1, 2], vec![3, 4]]);
    }

    #[test]
    fn constructors_reject_bad_input() {
        assert!(matches!(
            PathMatrix::from_path(&[], 5),
            Err(MobilityError::EmptyPath)
        ));
        assert!(matches!(
            PathMatrix::from_path(&[1, 2], 0),
            Err(MobilityError::ZeroRowLength)
        ));
        assert!(matches!(
            PathMatrix::from_path(&[1, 0, 2], 5),
            Err(MobilityError::ZeroRegion)
        ));
        assert!(matches!(
            Pattern::new(vec![]),
            Err(MobilityError::EmptyPattern)
        ));
        assert!(matches!(
            Pattern::new(vec![1, 0]),
            Err(MobilityError::ZeroRegion)
        ));
    }

    #[test]
    fn singleton_supports_count_containing_rows() {
        let m = reference_matrix();
        let expected: &[(&[u32], f64)] = &[
            (&[1], 3.0),
            (&[2], 1.0),
            (&[3], 1.0),
            (&[4], 1.0),
            (&[6], 2.0),
            (&[7], 1.0),
            (&[8], 1.0),
            (&[9], 1.0),
            (&[10], 1.0),
            (&[11], 1.0),
            (&[12], 1.0),
        ];
        for (p, want) in expected {
            assert_close(support(&m, &pat(p)), *want, 1e-9);
        }
        // Region 5 never appears.
        assert_close(support(&m, &pat(&[5])), 0.0, 1e-12);
    }

    #[test]
    fn pair_supports_discount_gapped_matches() {
        let m = reference_matrix();
        let expected: &[(&[u32], f64)] = &[
            (&[1, 1], 3.0),
            (&[1, 2], 1.0),
            (&[1, 3], 0.5),
            (&[1, 6], 1.0),
            (&[1, 12], 1.0),
            (&[4, 1], 0.5),
            (&[4, 4], 1.0),
            (&[4, 10], 1.0),
            (&[6, 1], 1.0 + 1.0 / 6.0),
            (&[6, 3], 1.0 / 3.0),
            (&[6, 4], 0.5),
            (&[6, 6], 2.0),
            (&[6, 9], 1.0),
            (&[6, 10], 0.2),
            (&[6, 12], 0.5),
            (&[7, 1], 1.0),
            (&[7, 2], 1.0 / 3.0),
            (&[8, 11], 1.0),
            (&[9, 1], 0.2),
            (&[9, 4], 1.0),
            (&[9, 10], 0.25),
            (&[10, 1], 1.0),
            (&[12, 3], 1.0),
        ];
        for (p, want) in expected {
            assert_close(support(&m, &pat(p)), *want, 1e-9);
        }
    }

    #[test]
    fn support_ignores_padding_and_order_violations() {
        let m = reference_matrix();
        // 2 then 7 never happens in that order.
        assert_close(support(&m, &pat(&[2, 7])), 0.0, 1e-12);
        // A pattern longer than any active prefix cannot match.
        assert_close(support(&m, &pat(&[8, 11, 8])), 0.0, 1e-12);
    }

    #[test]
    fn three_element_support_takes_the_tightest_embedding() {
        let m = reference_matrix();
        // <6,4,1> embeds only in the second row, best span 6..1 with four
        // extraneous elements.
        assert_close(support(&m, &pat(&[6, 4, 1])), 0.2, 1e-9);
    }

    #[test]
    fn brute_force_embedding_oracle_agrees() {
        // Enumerate every order-preserving embedding recursively and take the
        // best row contribution; the scanning implementation must match.
        fn best_gap(row: &[u32], pattern: &[u32]) -> Option<usize> {
            fn walk(
                row: &[u32],
                pattern: &[u32],
                from: usize,
                picked: &mut Vec<usize>,
                best: &mut Option<usize>,
            ) {
                if picked.len() == pattern.len() {
                    let span = picked[picked.len() - 1] - picked[0] + 1;
                    let gap = span - pattern.len();
                    if best.is_none_or(|b| gap < b) {
                        *best = Some(gap);
                    }
                    return;
                }
                for i in from..row.len() {
                    if row[i] == pattern[picked.len()] {
                        picked.push(i);
                        walk(row, pattern, i + 1, picked, best);
                        picked.pop();
                    }
                }
            }
            let mut best = None;
            walk(row, pattern, 0, &mut Vec::new(), &mut best);
            best
        }

        let m = reference_matrix();
        let alphabet = [1, 2, 3, 4, 6, 9, 10, 12];
        for &a in &alphabet {
            for &b in &alphabet {
                for &c in &alphabet {
                    let p = pat(&[a, b, c]);
                    let oracle: f64 = m
                        .rows()
                        .iter()
                        .map(|row| match best_gap(PathMatrix::active(row), p.regions()) {
                            Some(t) => 1.0 / (1.0 + t as f64),
                            None => 0.0,
                        })
                        .sum();
                    assert_close(support(&m, &p), oracle, 1e-12);
                }
            }
        }
    }

    #[test]
    fn support_never_grows_when_a_pattern_is_extended() {
        let m = reference_matrix();
        let alphabet = [1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12];
        for &a in &alphabet {
            let s1 = support(&m, &pat(&[a]));
            for &b in &alphabet {
                let s2 = support(&m, &pat(&[a, b]));
                assert!(s2 <= s1 + 1e-12, "S(<{a},{b}>) = {s2} > S(<{a}>) = {s1}");
                for &c in &alphabet {
                    let s3 = support(&m, &pat(&[a, b, c]));
                    assert!(s3 <= s2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn rule_confidences_for_the_reference_history() {
        let m = reference_matrix();
        // Three ways to ask "how plausible is region 1 after visiting 6, 4":
        let r1 = rule_confidence(&m, &pat(&[6]), &pat(&[4, 1]));
        let r2 = rule_confidence(&m, &pat(&[6, 4]), &pat(&[1]));
        let r3 = rule_confidence(&m, &pat(&[4]), &pat(&[1]));
        assert_close(r1, 10.0, 1e-9);
        assert_close(r2, 40.0, 1e-9);
        assert_close(r3, 50.0, 1e-9);
        assert_close(region_confidence_assoc(&m, Some(6), Some(4), 1), 50.0, 1e-9);
    }

    #[test]
    fn assoc_confidence_handles_short_histories() {
        let m = reference_matrix();
        // Without a second-to-last region only rule 3 is available.
        let expected = rule_confidence(&m, &pat(&[4]), &pat(&[1]));
        assert_close(
            region_confidence_assoc(&m, None, Some(4), 1),
            expected,
            1e-12,
        );
        // No history at all scores 0.
        assert_close(region_confidence_assoc(&m, None, None, 1), 0.0, 1e-12);
        // A never-observed next region scores 0.
        assert_close(region_confidence_assoc(&m, Some(6), Some(4), 5), 0.0, 1e-12);
    }

    #[test]
    fn rule_confidence_zero_guard_and_range() {
        let m = reference_matrix();
        assert_close(rule_confidence(&m, &pat(&[5]), &pat(&[1])), 0.0, 1e-12);
        let alphabet = [1, 2, 3, 4, 6, 7, 8, 9, 10, 11, 12];
        for &a in &alphabet {
            for &b in &alphabet {
                let c = rule_confidence(&m, &pat(&[a]), &pat(&[b]));
                assert!((0.0..=100.0 + 1e-9).contains(&c));
            }
        }
    }

    #[test]
    fn adjacency_probabilities_from_hand_counted_transitions() {
        let m = reference_matrix();
        let adj = AdjacencyMatrix::from_path_matrix(&m).unwrap();
        // Region 4 departs three times: 4->4, 4->4, 4->10.
        assert_close(adj.prob(4, 4), 2.0 / 3.0, 1e-12);
        assert_close(adj.prob(4, 10), 1.0 / 3.0, 1e-12);
        assert_close(adj.prob(4, 1), 0.0, 1e-12);
        // Region 1 departs seven times: 1->1 and 1->2 (row 1), 1->1 (row 2),
        // and 1->1, 1->1, 1->6, 1->12 (row 3).
        assert_close(adj.prob(1, 1), 4.0 / 7.0, 1e-12);
        assert_close(adj.prob(1, 2), 1.0 / 7.0, 1e-12);
        assert_close(adj.prob(1, 6), 1.0 / 7.0, 1e-12);
        assert_close(adj.prob(1, 12), 1.0 / 7.0, 1e-12);
        // No transition crosses a row boundary: 2 (end of row 1) never
        // transitions to 6 (start of row 2), and 11 never departs.
        assert_close(adj.prob(2, 6), 0.0, 1e-12);
        let row11: f64 = (1..=12).map(|to| adj.prob(11, to)).sum();
        assert_close(row11, 0.0, 1e-12);
        assert_close(region_confidence_adj(&adj, 4, 4), 2.0 / 3.0 * 100.0, 1e-9);
    }

    #[test]
    fn adjacency_rows_are_stochastic_or_zero() {
        let m = PathMatrix::from_path(&[1, 2, 1, 3, 2, 2, 1, 3, 3, 1, 2, 3], 4).unwrap();
        let adj = AdjacencyMatrix::from_path_matrix(&m).unwrap();
        for from in 1..=3 {
            let total: f64 = (1..=3).map(|to| adj.prob(from, to)).sum();
            assert!(
                (total - 1.0).abs() < 1e-12 || total == 0.0,
                "row {from} sums to {total}"
            );
        }
        assert_close(adj.prob(0, 1), 0.0, 1e-12);
        assert_close(adj.prob(1, 99), 0.0, 1e-12);
    }

    #[test]
    fn adjacency_needs_two_regions() {
        let m = PathMatrix::from_path(&[3], 10).unwrap();
        assert!(matches!(
            AdjacencyMatrix::from_path_matrix(&m),
            Err(MobilityError::TooFewTransitions)
        ));
    }
}
