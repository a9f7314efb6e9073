use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RATIOS: [f64; 3] = [0.8, 0.1, 0.1];

/// Disjoint train/val/test vertex id sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<u64>,
    pub val: Vec<u64>,
    pub test: Vec<u64>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

impl SplitMasks {
    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Largest-remainder rounding of `quotas` to integers summing to `total`.
fn largest_remainder(quotas: &[f64], total: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor().max(0.0) as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - counts[a] as f64;
        let fb = quotas[b] - counts[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &k in order.iter().take(total.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Controlled rounding of the class x part table `sizes[c] * ratios[k]`:
/// every cell is the floor or ceiling of its quota, rows sum to the class
/// sizes, and columns sum to the largest-remainder part sizes. The extra
/// units left after flooring are placed with a small max-flow.
fn apportion(sizes: &[usize], ratios: [f64; 3]) -> Vec<[usize; 3]> {
    let n: usize = sizes.iter().sum();
    let columns = largest_remainder(&ratios.map(|r| r * n as f64), n);
    let mut table: Vec<[usize; 3]> = Vec::with_capacity(sizes.len());
    let mut fractional: Vec<[bool; 3]> = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let quota = ratios.map(|r| r * size as f64);
        let floors = quota.map(|q| (q + 1e-9).floor() as usize);
        fractional.push([0, 1, 2].map(|k| quota[k] - floors[k] as f64 > 1e-9));
        table.push(floors);
    }
    // flow network: source, classes, parts, sink
    let c = sizes.len();
    let (src, sink) = (0, c + 4);
    let mut cap = vec![vec![0usize; c + 5]; c + 5];
    for (i, &size) in sizes.iter().enumerate() {
        cap[src][1 + i] = size - table[i].iter().sum::<usize>();
        for k in 0..3 {
            if fractional[i][k] {
                cap[1 + i][1 + c + k] = 1;
            }
        }
    }
    for k in 0..3 {
        let floors: usize = table.iter().map(|row| row[k]).sum();
        cap[1 + c + k][sink] = columns[k].saturating_sub(floors);
    }
    let flow_cap = cap.clone();
    loop {
        let mut parent = vec![usize::MAX; c + 5];
        parent[src] = src;
        let mut queue = std::collections::VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            for v in 0..c + 5 {
                if parent[v] == usize::MAX && cap[u][v] > 0 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[sink] == usize::MAX {
            break;
        }
        let mut v = sink;
        while v != src {
            let u = parent[v];
            cap[u][v] -= 1;
            cap[v][u] += 1;
            v = u;
        }
    }
    for (i, row) in table.iter_mut().enumerate() {
        for k in 0..3 {
            if flow_cap[1 + i][1 + c + k] == 1 && cap[1 + i][1 + c + k] == 0 {
                row[k] += 1;
            }
        }
        debug_assert_eq!(row.iter().sum::<usize>(), sizes[i]);
    }
    table
}

/// Deterministic split of `eligible` ids. With `strata` (one class per
/// eligible id) each class is divided so its count in every part is within
/// one vertex of `class size * ratio`, while part sizes stay within one
/// vertex of `n * ratio`.
pub fn make_splits(eligible: &[u64], ratios: [f64; 3], seed: u64, strata: Option<&[usize]>) -> Result<SplitMasks> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(ratios));
    }
    let mut groups: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
    match strata {
        None => {
            groups.insert(0, eligible.to_vec());
        }
        Some(classes) => {
            if classes.len() != eligible.len() {
                return Err(Error::RowMismatch { expected: eligible.len(), found: classes.len() });
            }
            for (&id, &c) in eligible.iter().zip(classes) {
                groups.entry(c).or_default().push(id);
            }
            if let Some((&class, ids)) = groups.iter().find(|(_, ids)| ids.len() < 3) {
                return Err(Error::EmptyClass { class, count: ids.len() });
            }
        }
    }
    let sizes: Vec<usize> = groups.values().map(Vec::len).collect();
    let table = apportion(&sizes, ratios);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (mut ids, counts) in groups.into_values().zip(table) {
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        train.extend_from_slice(&ids[..counts[0]]);
        val.extend_from_slice(&ids[counts[0]..counts[0] + counts[1]]);
        test.extend_from_slice(&ids[counts[0] + counts[1]..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitMasks { train, val, test, seed, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_sizes() {
        let ids: Vec<u64> = (0..100).collect();
        let s = make_splits(&ids, DEFAULT_RATIOS, 7, None).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (80, 10, 10));
        assert_eq!(s, make_splits(&ids, DEFAULT_RATIOS, 7, None).unwrap());
        assert_ne!(s.train, make_splits(&ids, DEFAULT_RATIOS, 8, None).unwrap().train);
    }

    #[test]
    fn input_order_does_not_matter() {
        let ids: Vec<u64> = (0..50).collect();
        let rev: Vec<u64> = ids.iter().rev().copied().collect();
        assert_eq!(make_splits(&ids, DEFAULT_RATIOS, 1, None).unwrap(), make_splits(&rev, DEFAULT_RATIOS, 1, None).unwrap());
    }

    #[test]
    fn invalid_ratios() {
        assert!(matches!(make_splits(&[1, 2, 3], [0.5, 0.5, 0.5], 0, None), Err(Error::InvalidRatios(_))));
        assert!(matches!(make_splits(&[1, 2, 3], [1.0, 0.0, 0.0], 0, None), Err(Error::InvalidRatios(_))));
    }

    #[test]
    fn tiny_class_rejected() {
        let ids = [1, 2, 3, 4, 5];
        let classes = [0, 0, 0, 1, 1];
        assert!(matches!(make_splits(&ids, DEFAULT_RATIOS, 0, Some(&classes)), Err(Error::EmptyClass { class: 1, count: 2 })));
    }

    fn check_stratified(classes: &[usize], ratios: [f64; 3], seed: u64) {
        let ids: Vec<u64> = (0..classes.len() as u64).collect();
        let s = make_splits(&ids, ratios, seed, Some(classes)).unwrap();
        let mut all: Vec<u64> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, ids);
        let n = ids.len() as f64;
        for (len, r) in [(s.train.len(), ratios[0]), (s.val.len(), ratios[1]), (s.test.len(), ratios[2])] {
            assert!((len as f64 - r * n).abs() < 1.0);
        }
        let n_classes = classes.iter().max().unwrap() + 1;
        for (part, r) in [(&s.train, ratios[0]), (&s.val, ratios[1]), (&s.test, ratios[2])] {
            let mut hist = vec![0usize; n_classes];
            for &id in part.iter() {
                hist[classes[id as usize]] += 1;
            }
            let global: Vec<usize> = (0..n_classes).map(|c| classes.iter().filter(|&&x| x == c).count()).collect();
            for c in 0..n_classes {
                let expect = global[c] as f64 * r;
                assert!((hist[c] as f64 - expect).abs() < 1.0 + 1e-9, "class {c}: {} vs {expect} (ratio {r})", hist[c]);
            }
        }
    }

    #[test]
    fn stratified_histograms() {
        let classes: Vec<usize> = (0..400).map(|i| [0, 1, 1, 2, 3, 3, 3, 0][i % 8]).collect();
        check_stratified(&classes, DEFAULT_RATIOS, 11);
    }

    proptest! {
        #[test]
        fn stratified_partition(sizes in proptest::collection::vec(3usize..60, 2..5), seed in any::<u64>()) {
            let classes: Vec<usize> = sizes.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat(c).take(k)).collect();
            check_stratified(&classes, DEFAULT_RATIOS, seed);
        }
    }
}
