//! Enumeration of nonfanout inflations and of isomorphic sub-network pairs.
//!
//! Raw wirings fix the first slot of every source to the identity; every
//! other slot ranges over all permutations of the copy indices. Two wirings
//! are *copy-equivalent* when a relabeling of the copies of each party type
//! (followed by re-sorting the source copies) maps one to the other. Copy
//! classes are further grouped under relabelings of the party types
//! themselves, which is how inflations of a fully symmetric network are
//! usually counted.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{subnetwork_isomorphism, Inflation, IsoMap, PartyCopy, Scenario, SubNetwork};

/// Default cap on the number of raw wirings visited.
pub const DEFAULT_MAX_WIRINGS: u128 = 1_000_000;

type Wiring = Vec<Vec<Vec<usize>>>;

/// Inflations equivalent up to relabeling copies and party types.
#[derive(Clone, Debug)]
pub struct InflationClass {
    /// Canonical wiring of the first member.
    pub representative: Inflation,
    /// One inflation per copy-equivalence class inside this class. These are
    /// the distinct variable blocks of the linear program.
    pub members: Vec<Inflation>,
    /// Raw wirings in each member's copy class.
    pub member_raw_counts: Vec<u64>,
    /// Number of copy classes merged into this class.
    pub multiplicity: usize,
    /// Raw wirings in the whole class.
    pub raw_count: u64,
}

/// `∏_s (K!)^(|att(s)|−1)`.
pub fn raw_wiring_count(scenario: &Scenario, order: usize) -> u128 {
    let kf: u128 = (1..=order as u128).product();
    (0..scenario.n_sources())
        .map(|s| {
            let free = scenario.attached(s).len().saturating_sub(1) as u32;
            kf.checked_pow(free).unwrap_or(u128::MAX)
        })
        .fold(1u128, |acc, v| acc.saturating_mul(v))
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                rec(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

fn decode_wiring(scenario: &Scenario, order: usize, perms: &[Vec<usize>], mut idx: u128) -> Wiring {
    let np = perms.len() as u128;
    (0..scenario.n_sources())
        .map(|s| {
            let width = scenario.attached(s).len();
            let mut cols: Vec<&Vec<usize>> = vec![&perms[0]];
            for _ in 1..width {
                cols.push(&perms[(idx % np) as usize]);
                idx /= np;
            }
            (0..order)
                .map(|k| cols.iter().map(|c| c[k]).collect())
                .collect()
        })
        .collect()
}

/// Relabel party copies by `rho[party][old] = new`, then sort source copies.
fn relabel(scenario: &Scenario, w: &Wiring, rho: &[&Vec<usize>]) -> Wiring {
    w.iter()
        .enumerate()
        .map(|(s, rows)| {
            let att = scenario.attached(s);
            let mut rows: Vec<Vec<usize>> = rows
                .iter()
                .map(|r| r.iter().zip(att).map(|(&c, &j)| rho[j][c]).collect())
                .collect();
            rows.sort();
            rows
        })
        .collect()
}

/// Lexicographically least wiring in the copy-relabeling orbit.
fn copy_canonical(scenario: &Scenario, w: &Wiring, perms: &[Vec<usize>]) -> Wiring {
    let n = scenario.n_parties();
    let np = perms.len();
    let total = np.pow(n as u32);
    let mut best: Option<Wiring> = None;
    for g in 0..total {
        let mut rest = g;
        let rho: Vec<&Vec<usize>> = (0..n)
            .map(|_| {
                let p = &perms[rest % np];
                rest /= np;
                p
            })
            .collect();
        let cand = relabel(scenario, w, &rho);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.expect("group is nonempty")
}

/// Apply a party-type permutation `sigma` (old type → new type) to a wiring
/// of the canonical scenario, where source `i` is the one missing party `i`.
fn permute_types(scenario: &Scenario, w: &Wiring, sigma: &[usize]) -> Option<Wiring> {
    let n = scenario.n_parties();
    let mut out: Wiring = vec![Vec::new(); scenario.n_sources()];
    for (i, rows) in w.iter().enumerate() {
        let target = (0..scenario.n_sources()).find(|&t| {
            let mapped: BTreeSet<usize> = scenario.attached(i).iter().map(|&j| sigma[j]).collect();
            mapped == scenario.attached(t).iter().copied().collect()
        })?;
        let att_old = scenario.attached(i);
        let att_new = scenario.attached(target);
        out[target] = rows
            .iter()
            .map(|r| {
                let mut nr = vec![0; att_new.len()];
                for (slot, &j) in att_old.iter().enumerate() {
                    let ns = att_new.iter().position(|&q| q == sigma[j])?;
                    nr[ns] = r[slot];
                }
                Some(nr)
            })
            .collect::<Option<Vec<_>>>()?;
    }
    debug_assert_eq!(sigma.len(), n);
    Some(out)
}

/// All nonfanout inflations of `order`, grouped into classes.
pub fn enumerate_inflations(
    scenario: &Scenario,
    order: usize,
    max_wirings: u128,
) -> Result<Vec<InflationClass>> {
    if order == 0 {
        return Err(Error::InvalidInflation("order must be at least 1".into()));
    }
    let total = raw_wiring_count(scenario, order);
    if total > max_wirings {
        return Err(Error::TooLarge {
            what: "raw wiring count",
            count: total,
            limit: max_wirings,
        });
    }
    let perms = permutations(order);
    let counts: BTreeMap<Wiring, u64> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let w = decode_wiring(scenario, order, &perms, idx);
            copy_canonical(scenario, &w, &perms)
        })
        .fold(BTreeMap::new, |mut m, key| {
            *m.entry(key).or_insert(0u64) += 1;
            m
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        });

    // group copy classes by party-type relabeling
    let type_perms = permutations(scenario.n_parties());
    let mut groups: BTreeMap<Wiring, Vec<(Wiring, u64)>> = BTreeMap::new();
    for (key, count) in counts {
        let full_key = type_perms
            .iter()
            .filter_map(|sigma| permute_types(scenario, &key, sigma))
            .map(|w| copy_canonical(scenario, &w, &perms))
            .min()
            .unwrap_or_else(|| key.clone());
        groups.entry(full_key).or_default().push((key, count));
    }
    let mut classes: Vec<InflationClass> = groups
        .into_values()
        .map(|members| {
            let raw_count = members.iter().map(|(_, c)| c).sum();
            let member_raw_counts = members.iter().map(|(_, c)| *c).collect();
            let members: Vec<Inflation> = members
                .into_iter()
                .map(|(w, _)| Inflation::new(scenario.clone(), order, w))
                .collect();
            InflationClass {
                representative: members[0].clone(),
                multiplicity: members.len(),
                members,
                member_raw_counts,
                raw_count,
            }
        })
        .collect();
    classes.sort_by(|a, b| a.representative.wiring.cmp(&b.representative.wiring));
    Ok(classes)
}

/// Every copy class of `order`, in enumeration order.
pub fn all_members(classes: &[InflationClass]) -> Vec<Inflation> {
    classes.iter().flat_map(|c| c.members.iter().cloned()).collect()
}

/// Two isomorphic sub-networks, listed position by position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubnetworkPair {
    pub left: Vec<PartyCopy>,
    pub right: Vec<PartyCopy>,
    pub map: IsoMap,
}

/// Isomorphic pairs between sub-networks drawn from `pool1` (ordered as in
/// `pool1`) and `pool2`, keeping only pairs with no one-party extension.
/// Identity pairs are skipped when both sides are the same inflation.
pub fn maximal_pairs(
    i1: &Inflation,
    pool1: &[PartyCopy],
    i2: &Inflation,
    pool2: &[PartyCopy],
) -> Vec<SubnetworkPair> {
    maximal_pairs_impl(i1, pool1, i2, pool2, i1 == i2)
}

fn maximal_pairs_impl(
    i1: &Inflation,
    pool1: &[PartyCopy],
    i2: &Inflation,
    pool2: &[PartyCopy],
    same: bool,
) -> Vec<SubnetworkPair> {
    let mut found: Vec<(Vec<PartyCopy>, Vec<PartyCopy>)> = Vec::new();

    fn is_iso(i1: &Inflation, t1: &[PartyCopy], i2: &Inflation, t2: &[PartyCopy]) -> bool {
        let g1 = SubNetwork::new(i1, t1.to_vec()).expect("distinct parties");
        let g2 = SubNetwork::new(i2, t2.to_vec()).expect("distinct parties");
        subnetwork_isomorphism(&g1, &g2).is_some()
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        i1: &Inflation,
        pool1: &[PartyCopy],
        i2: &Inflation,
        pool2: &[PartyCopy],
        start: usize,
        t1: &mut Vec<PartyCopy>,
        t2: &mut Vec<PartyCopy>,
        found: &mut Vec<(Vec<PartyCopy>, Vec<PartyCopy>)>,
    ) {
        for i in start..pool1.len() {
            let p = pool1[i];
            for &q in pool2 {
                if q.party != p.party || t2.contains(&q) {
                    continue;
                }
                t1.push(p);
                t2.push(q);
                if is_iso(i1, t1, i2, t2) {
                    found.push((t1.clone(), t2.clone()));
                    dfs(i1, pool1, i2, pool2, i + 1, t1, t2, found);
                }
                t1.pop();
                t2.pop();
            }
        }
    }
    dfs(i1, pool1, i2, pool2, 0, &mut Vec::new(), &mut Vec::new(), &mut found);

    let key = |t1: &[PartyCopy], t2: &[PartyCopy]| {
        let mut k: Vec<(PartyCopy, PartyCopy)> = t1.iter().copied().zip(t2.iter().copied()).collect();
        k.sort();
        k
    };
    let all: HashSet<Vec<(PartyCopy, PartyCopy)>> = found.iter().map(|(a, b)| key(a, b)).collect();
    found
        .into_iter()
        .filter(|(t1, t2)| !(same && t1 == t2))
        .filter(|(t1, t2)| {
            let base = key(t1, t2);
            !pool1.iter().filter(|p| !t1.contains(p)).any(|&p| {
                pool2
                    .iter()
                    .filter(|q| q.party == p.party && !t2.contains(q))
                    .any(|&q| {
                        let mut k = base.clone();
                        k.push((p, q));
                        k.sort();
                        all.contains(&k)
                    })
            })
        })
        .map(|(left, right)| {
            let g1 = SubNetwork::new(i1, left.clone()).expect("distinct parties");
            let g2 = SubNetwork::new(i2, right.clone()).expect("distinct parties");
            let map = subnetwork_isomorphism(&g1, &g2).expect("checked above");
            SubnetworkPair { left, right, map }
        })
        .collect()
}

/// Maximal pairs (inflation sub-network, base sub-network).
pub fn enumerate_c1_pairs(inflation: &Inflation, scenario: &Scenario) -> Vec<SubnetworkPair> {
    enumerate_c1_pairs_within(inflation, scenario, &inflation.party_copies())
}

/// As [`enumerate_c1_pairs`], restricted to party copies in `pool`.
pub fn enumerate_c1_pairs_within(
    inflation: &Inflation,
    scenario: &Scenario,
    pool: &[PartyCopy],
) -> Vec<SubnetworkPair> {
    let base = Inflation::trivial(scenario.clone());
    let base_pool = base.party_copies();
    maximal_pairs_impl(inflation, pool, &base, &base_pool, false)
}

/// Maximal isomorphic pairs across two inflations (or within one).
pub fn enumerate_c2_pairs(i1: &Inflation, i2: &Inflation) -> Vec<SubnetworkPair> {
    maximal_pairs(i1, &i1.party_copies(), i2, &i2.party_copies())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{canonical_scenario, validate_inflation, PartySpec};

    fn symmetric(n: usize) -> Scenario {
        canonical_scenario(n, (0..n).map(|i| PartySpec::new(format!("P{i}"), 2, 2)).collect()).unwrap()
    }

    fn pc(party: usize, copy: usize) -> PartyCopy {
        PartyCopy { party, copy }
    }

    fn hexagon(s: &Scenario) -> Inflation {
        Inflation::new(
            s.clone(),
            2,
            vec![vec![vec![0, 0], vec![1, 1]], vec![vec![1, 0], vec![0, 1]], vec![vec![0, 0], vec![1, 1]]],
        )
    }

    #[test]
    fn triangle_classes() {
        let t = symmetric(3);
        assert_eq!(enumerate_inflations(&t, 1, DEFAULT_MAX_WIRINGS).unwrap().len(), 1);
        let classes = enumerate_inflations(&t, 2, DEFAULT_MAX_WIRINGS).unwrap();
        assert_eq!(classes.len(), 2);
        assert_eq!(classes[0].representative, Inflation::identity(t.clone(), 2));
        assert_eq!(classes.iter().map(|c| c.raw_count).sum::<u64>(), 8);
        assert!(classes.iter().all(|c| c.multiplicity == 1));
    }

    #[test]
    fn raw_counts_match_brute_force() {
        for (n, k) in [(3, 2), (4, 2), (3, 3)] {
            let s = symmetric(n);
            let classes = enumerate_inflations(&s, k, DEFAULT_MAX_WIRINGS).unwrap();
            let sum: u64 = classes.iter().map(|c| c.raw_count).sum();
            assert_eq!(sum as u128, raw_wiring_count(&s, k));
            for c in &classes {
                assert!(c.members.iter().all(validate_inflation));
                assert_eq!(c.member_raw_counts.iter().sum::<u64>(), c.raw_count);
            }
        }
        assert_eq!(raw_wiring_count(&symmetric(4), 2), 256);
    }

    #[test]
    fn tetrahedron_classes() {
        let classes = enumerate_inflations(&symmetric(4), 2, DEFAULT_MAX_WIRINGS).unwrap();
        let mut mult: Vec<usize> = classes.iter().map(|c| c.multiplicity).collect();
        mult.sort();
        assert_eq!(mult, vec![1, 1, 3, 3, 12, 12]);
        assert_eq!(all_members(&classes).len(), 32);
    }

    #[test]
    fn cap_is_enforced() {
        let err = enumerate_inflations(&symmetric(4), 3, 1000).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
    }

    #[test]
    fn c1_pairs_on_triangle_inflations() {
        let t = symmetric(3);
        let dt = Inflation::identity(t.clone(), 2);
        let pairs = enumerate_c1_pairs(&dt, &t);
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().any(|p| p.left == vec![pc(0, 0), pc(1, 0), pc(2, 0)]));

        let hex = hexagon(&t);
        let pairs = enumerate_c1_pairs(&hex, &t);
        assert!(pairs.iter().all(|p| p.left.len() == 2));
        assert!(pairs.iter().any(|p| p.left == vec![pc(0, 0), pc(1, 0)]));
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn c2_pairs_contain_copy_swap() {
        let t = symmetric(3);
        let dt = Inflation::identity(t.clone(), 2);
        let pairs = enumerate_c2_pairs(&dt, &dt);
        let swap: Vec<PartyCopy> = dt.party_copies().iter().map(|p| pc(p.party, 1 - p.copy)).collect();
        assert!(pairs.iter().any(|p| p.left == dt.party_copies() && p.right == swap));
        assert!(pairs.iter().all(|p| p.left != p.right));

        let hex = hexagon(&t);
        let cross = enumerate_c2_pairs(&hex, &dt);
        // (A^1,B^1) ↔ (A^1,B^1) is isomorphic and survives inside a larger maximal pair
        let extends = |p: &SubnetworkPair| {
            [pc(0, 0), pc(1, 0)].iter().all(|q| {
                p.left.iter().position(|l| l == q).is_some_and(|i| p.right[i] == *q)
            })
        };
        assert!(cross.iter().any(extends));
    }
}
