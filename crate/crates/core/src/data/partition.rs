use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::rng_from;

use super::Dataset;

/// Splits `ds` into `n` disjoint shards after a seeded shuffle; shard sizes
/// differ by at most one.
pub fn partition_iid(ds: &Dataset, n: usize, seed: u64) -> Result<Vec<Dataset>> {
    if n == 0 {
        return Err(Error::input("number of shards must be positive"));
    }
    if ds.len() < n {
        return Err(Error::input(format!("{} items cannot fill {n} shards", ds.len())));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_from(seed));
    let base = ds.len() / n;
    let extra = ds.len() % n;
    let mut shards = Vec::with_capacity(n);
    let mut start = 0;
    for s in 0..n {
        let size = base + usize::from(s < extra);
        let items = order[start..start + size].iter().map(|&i| ds.items[i].clone()).collect();
        shards.push(Dataset::new(items, ds.class_count));
        start += size;
    }
    Ok(shards)
}
