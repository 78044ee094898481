//! Data-parallel index maps with a sequential fallback.
//!
//! All parallel loops in the crate (seesaw restarts, filter candidates,
//! family scans, batch Born evaluation) go through `map_indexed`, which uses
//! rayon when the default `parallel` feature is on. Results are collected in
//! index order and merged with first-wins argmax, so parallel and sequential
//! runs produce bit-identical output.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(n, f)
}

/// Always-sequential variant, kept available so benchmarks can compare the
/// two paths under identical workloads.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Index of the maximal score; ties break toward the lowest index. NaN
/// scores lose against everything.
pub fn argmax(scores: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.into_iter().enumerate() {
        if s.is_nan() {
            continue;
        }
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let par = map_indexed(100, |i| (i * i) as f64);
        let seq = map_indexed_seq(100, |i| (i * i) as f64);
        assert_eq!(par, seq);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax([1.0, 3.0, 3.0, 2.0]), Some(1));
        assert_eq!(argmax([f64::NAN, 1.0]), Some(1));
        assert_eq!(argmax(std::iter::empty()), None);
    }
}
