/// Kendall's tau-b in O(n log n) (Knight's algorithm): sort by `(x, y)`,
/// count tie pairs, then count discordant pairs as merge-sort swaps on `y`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "kendall_tau needs paired samples");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));
    let pairs = |m: usize| (m * m.saturating_sub(1) / 2) as u64;

    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1usize, 1usize);
    for w in idx.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                joint_ties += pairs(run_xy);
                run_xy = 1;
            }
        } else {
            x_ties += pairs(run_x);
            joint_ties += pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += pairs(run_x);
    joint_ties += pairs(run_xy);

    let mut ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);

    let mut y_ties = 0u64;
    let mut run = 1usize;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            y_ties += pairs(run);
            run = 1;
        }
    }
    y_ties += pairs(run);

    let total = pairs(n);
    let concordant_minus_discordant = total as f64 - x_ties as f64 - y_ties as f64 + joint_ties as f64 - 2.0 * swaps as f64;
    let denom = ((total - x_ties) as f64 * (total - y_ties) as f64).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (concordant_minus_discordant / denom).clamp(-1.0, 1.0)
}

/// Stable merge sort counting inversions (strictly greater before smaller).
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j] < v[i] {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}
