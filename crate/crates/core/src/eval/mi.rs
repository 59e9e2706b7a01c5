use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::labeling::Labeling;

fn check_grids(a: &Labeling, b: &Labeling) -> Result<()> {
    if a.bounds.width != b.bounds.width || a.bounds.height != b.bounds.height {
        return Err(Error::GridMismatch(a.bounds.width, a.bounds.height, b.bounds.width, b.bounds.height));
    }
    Ok(())
}

/// Mutual information in bits between two labelings of the same grid,
/// computed over the cells labeled in both.
pub fn mutual_information(a: &Labeling, b: &Labeling) -> Result<f64> {
    check_grids(a, b)?;
    let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    let mut ma: BTreeMap<u32, u64> = BTreeMap::new();
    let mut mb: BTreeMap<u32, u64> = BTreeMap::new();
    let mut n = 0u64;
    for (x, y) in a.labels.iter().zip(&b.labels) {
        if let (Some(x), Some(y)) = (x, y) {
            *joint.entry((*x, *y)).or_default() += 1;
            *ma.entry(*x).or_default() += 1;
            *mb.entry(*y).or_default() += 1;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyIntersection);
    }
    let n = n as f64;
    let mut terms: Vec<f64> = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = ma[&x] as f64 / n;
            let py = mb[&y] as f64 / n;
            pxy * (pxy / (px * py)).log2()
        })
        .collect();
    // Summing in value order makes the result exactly invariant under
    // relabeling and argument order.
    terms.sort_by(f64::total_cmp);
    let mi: f64 = terms.iter().sum();
    // Rounding can leave a tiny negative value for independent labelings.
    Ok(mi.max(0.0))
}

/// Entropy in bits of the labeled cells.
pub fn entropy(a: &Labeling) -> f64 {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for l in a.labels.iter().flatten() {
        *counts.entry(*l).or_default() += 1;
    }
    let n: u64 = counts.values().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    -counts.values().map(|&c| c as f64 / n).map(|p| p * p.log2()).sum::<f64>()
}

/// Entropy of `a` restricted to the cells labeled in both `a` and `b`.
pub fn joint_support_entropy(a: &Labeling, b: &Labeling) -> Result<f64> {
    check_grids(a, b)?;
    let labels = a.labels.iter().zip(&b.labels).map(|(x, y)| if y.is_some() { *x } else { None }).collect();
    Ok(entropy(&Labeling { bounds: a.bounds, labels, alphabet: a.alphabet }))
}
