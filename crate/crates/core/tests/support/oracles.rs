//! Brute-force reference implementations. Deliberately naive and independent
//! of the library code paths they check.
#![allow(dead_code)]

use std::collections::HashMap;

/// Full (n+1)x(m+1) edit-distance matrix.
pub fn levenshtein_matrix(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = if a[i - 1] == b[j - 1] { 0 } else { 1 };
            d[i][j] = (d[i - 1][j] + 1).min(d[i][j - 1] + 1).min(d[i - 1][j - 1] + cost);
        }
    }
    d[a.len()][b.len()]
}

/// Ratio as an exact fraction `(numerator, denominator)`.
pub fn levenshtein_ratio_fraction(a: &str, b: &str) -> (usize, usize) {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return (1, 1);
    }
    (longest - levenshtein_matrix(a, b), longest)
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

/// Longest common subsequence by trying every subsequence of `a`.
pub fn lcs_bruteforce<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() <= 16, "oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let picked: Vec<&T> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if is_subsequence(&picked, b) {
            best = len;
        }
    }
    best
}

/// ROUGE-L F1 as an exact fraction: `2·lcs / (|a| + |b|)`.
pub fn rouge_l_fraction<T: PartialEq>(a: &[T], b: &[T]) -> (usize, usize) {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => (1, 1),
        (true, false) | (false, true) => (0, 1),
        _ => (2 * lcs_bruteforce(a, b), a.len() + b.len()),
    }
}

/// Maximum bipartite matching by exhaustive search over injective maps.
pub fn max_matching<T: PartialEq>(left: &[T], right: &[T]) -> usize {
    fn go<T: PartialEq>(i: usize, left: &[T], right: &[T], used: &mut Vec<bool>) -> usize {
        if i == left.len() {
            return 0;
        }
        let mut best = go(i + 1, left, right, used);
        for j in 0..right.len() {
            if !used[j] && left[i] == right[j] {
                used[j] = true;
                best = best.max(1 + go(i + 1, left, right, used));
                used[j] = false;
            }
        }
        best
    }
    go(0, left, right, &mut vec![false; right.len()])
}

/// Among all injective partial assignments gold -> candidate using only
/// positive scores, the one whose score vector (in gold order, 0 for missing)
/// is lexicographically largest.
pub fn best_assignment(scores: &[Vec<usize>]) -> Vec<Option<usize>> {
    let candidates = scores.first().map_or(0, |r| r.len());
    let mut best: Option<(Vec<usize>, Vec<Option<usize>>)> = None;
    let mut current = vec![None; scores.len()];
    fn go(
        g: usize,
        scores: &[Vec<usize>],
        candidates: usize,
        used: &mut Vec<bool>,
        current: &mut Vec<Option<usize>>,
        best: &mut Option<(Vec<usize>, Vec<Option<usize>>)>,
    ) {
        if g == scores.len() {
            let vector: Vec<usize> = current
                .iter()
                .enumerate()
                .map(|(g, c)| c.map_or(0, |c| scores[g][c]))
                .collect();
            if best.as_ref().is_none_or(|(v, _)| vector > *v) {
                *best = Some((vector, current.clone()));
            }
            return;
        }
        current[g] = None;
        go(g + 1, scores, candidates, used, current, best);
        for c in 0..candidates {
            if !used[c] && scores[g][c] > 0 {
                used[c] = true;
                current[g] = Some(c);
                go(g + 1, scores, candidates, used, current, best);
                used[c] = false;
                current[g] = None;
            }
        }
    }
    go(
        0,
        scores,
        candidates,
        &mut vec![false; candidates],
        &mut current,
        &mut best,
    );
    best.map(|(_, a)| a).unwrap_or_default()
}

/// Counts occurrences; handy for multiset comparisons in tests.
pub fn multiset<T: std::hash::Hash + Eq + Clone>(xs: &[T]) -> HashMap<T, usize> {
    let mut m = HashMap::new();
    for x in xs {
        *m.entry(x.clone()).or_default() += 1;
    }
    m
}

/// Every string over `alphabet` with length `0..=max_len`.
pub fn all_strings(alphabet: &[char], max_len: usize) -> Vec<String> {
    let mut out = vec![String::new()];
    let mut frontier = vec![String::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &frontier {
            for c in alphabet {
                let mut t = s.clone();
                t.push(*c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}
