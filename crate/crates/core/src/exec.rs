//! Order-preserving map over independent work items. Uses the rayon pool when
//! the `parallel` feature is on, a plain loop otherwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `f(i, &items[i])` for every item, results in input order.
#[cfg(feature = "parallel")]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    seq_map(items, f)
}

/// Always sequential; the reference the parallel path must match.
pub fn seq_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(usize, &T) -> R,
{
    items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
}

/// `f(i)` for `i in 0..n`, results in index order.
pub fn par_map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    let idx: Vec<usize> = (0..n).collect();
    par_map(&idx, |_, &i| f(i))
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let v: Vec<u64> = (0..1000).collect();
        let a = par_map(&v, |i, x| x * x + i as u64);
        let b = seq_map(&v, |i, x| x * x + i as u64);
        assert_eq!(a, b);
        assert_eq!(par_map_range(5, |i| i * 2), vec![0, 2, 4, 6, 8]);
    }
}
