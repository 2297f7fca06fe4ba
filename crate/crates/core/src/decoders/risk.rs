use crate::decoders::nbest::NBestList;

pub const DEFAULT_RISK_EPSILON: f64 = 1e-10;

/// Levenshtein distance with unit insertion, deletion and substitution costs.
pub fn edit_distance<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// N-best approximation of the expected edit distance:
/// `sum P(W)*u(W, ref) / (sum P(W) + epsilon)`, where each entry's total
/// score is taken as its log-posterior.
pub fn approx_bayesian_risk(nbest: &NBestList, reference: &[String], epsilon: f64) -> f64 {
    let mut weighted = 0.0;
    let mut mass = 0.0;
    for e in &nbest.entries {
        let p = e.total.exp();
        weighted += p * edit_distance(&e.tokens, reference) as f64;
        mass += p;
    }
    weighted / (mass + epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoders::hypothesis::ScoreBreakdown;
    use crate::decoders::nbest::NBestEntry;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn list(items: &[(&str, f64)]) -> NBestList {
        NBestList::new(
            "u",
            items
                .iter()
                .map(|(s, p)| NBestEntry {
                    tokens: words(s),
                    total: p.ln(),
                    breakdown: ScoreBreakdown::default(),
                })
                .collect(),
        )
    }

    /// Full-table DP kept independent of the two-row implementation.
    fn table_distance(a: &[char], b: &[char]) -> usize {
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let c = if a[i - 1] == b[j - 1] { 0 } else { 1 };
                d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + c);
            }
        }
        d[a.len()][b.len()]
    }

    #[test]
    fn edit_distance_examples() {
        assert_eq!(edit_distance(&['x'], &['x']), 0);
        assert_eq!(edit_distance(&['a', 'b', 'c'], &[]), 3);
        let k: Vec<char> = "kitten".chars().collect();
        let s: Vec<char> = "sitting".chars().collect();
        assert_eq!(table_distance(&k, &s), 3);
        assert_eq!(edit_distance(&k, &s), 3);
        for (a, b) in [("flaw", "lawn"), ("", "abc"), ("intention", "execution")] {
            let a: Vec<char> = a.chars().collect();
            let b: Vec<char> = b.chars().collect();
            assert_eq!(edit_distance(&a, &b), table_distance(&a, &b));
        }
    }

    #[test]
    fn risk_examples() {
        assert_eq!(
            approx_bayesian_risk(&list(&[("a b", 0.7)]), &words("a b"), 1e-10),
            0.0
        );
        let r = approx_bayesian_risk(&list(&[("a b", 0.5), ("c d", 0.5)]), &words("a b"), 1e-10);
        assert!((r - 1.0).abs() < 1e-9, "{r}");
        let tiny = list(&[("x y z", 1e-300), ("q", 1e-300)]);
        let r = approx_bayesian_risk(&tiny, &words("a"), 1e-10);
        assert!(r.is_finite() && r < 1e-280);
    }
}
