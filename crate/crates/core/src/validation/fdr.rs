/// Number of hypotheses rejected by the Benjamini–Hochberg rule: the
/// largest 1-based rank `i` with `p_(i) ≤ i·α/n`, or 0.
pub fn fdr_rejection_count(pvalues: &[f64], alpha: f64) -> usize {
    fdr_rejection_count_in_family(pvalues, alpha, pvalues.len())
}

/// As [`fdr_rejection_count`] with `n = family_size`; the tests missing from
/// `pvalues` count as `p = 1`. A family smaller than the slice is widened to
/// the slice.
pub fn fdr_rejection_count_in_family(pvalues: &[f64], alpha: f64, family_size: usize) -> usize {
    let n = family_size.max(pvalues.len());
    let mut sorted = pvalues.to_vec();
    sorted.sort_by(f64::total_cmp);
    // a p = 1 test at rank i would need i ≥ n/α > n, so only given p-values
    // can be rejected
    (1..=sorted.len())
        .rev()
        .find(|&i| sorted[i - 1] <= i as f64 * alpha / n as f64)
        .unwrap_or(0)
}

/// Keys of the hypotheses rejected at FDR level `alpha`, in ascending
/// p-value order (ties keep input order). The whole slice is the test
/// family.
pub fn fdr_select<K: Clone>(tests: &[(K, f64)], alpha: f64) -> Vec<K> {
    fdr_select_in_family(tests, alpha, tests.len())
}

/// As [`fdr_select`] inside a family of `family_size` tests.
pub fn fdr_select_in_family<K: Clone>(
    tests: &[(K, f64)],
    alpha: f64,
    family_size: usize,
) -> Vec<K> {
    let mut order: Vec<usize> = (0..tests.len()).collect();
    order.sort_by(|&a, &b| tests[a].1.total_cmp(&tests[b].1));
    let pvalues: Vec<f64> = tests.iter().map(|t| t.1).collect();
    let count = fdr_rejection_count_in_family(&pvalues, alpha, family_size);
    order[..count].iter().map(|&i| tests[i].0.clone()).collect()
}
