//! Compilation of (scenario, observed behavior, inflations) into the
//! equality system of the inflation test.
//!
//! Each inflation contributes one block: the behavior of all its party
//! copies, written in Collins–Gisin coordinates (see [`cg`]). Rows are
//! equalities between block coordinates (`C2+`), between a block coordinate
//! and a coordinate of the observed behavior (`C1`), or between a block
//! coordinate and a constant. Nonnegativity of every block entry is implicit.

pub mod cg;
pub mod dump;
pub mod shared_bit;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;

use crate::behavior::{Behavior, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::index;
use crate::inflation::{enumerate_c1_pairs, maximal_pairs, SubnetworkPair};
use crate::network::{Inflation, PartyCopy, PartySpec, Scenario};
use crate::scalar::Scalar;

pub use cg::CgLayout;

/// Default cap on the number of raw block entries.
pub const DEFAULT_MAX_VARIABLES: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Origin {
    C1,
    C2,
    Independence,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::C1 => "C1",
            Origin::C2 => "C2+",
            Origin::Independence => "IND",
        })
    }
}

/// A coordinate of one block. Coordinate 0 is the constant and never a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node {
    pub block: usize,
    pub coord: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum EqRow<T> {
    /// `q[left] − q[right] = 0`.
    Identify { origin: Origin, left: Node, right: Node },
    /// `q[node] − P[p_coord] = 0`.
    Pin { origin: Origin, node: Node, p_coord: usize },
    /// `q[node] − value = 0`.
    Fix { origin: Origin, node: Node, value: T },
}

impl<T> EqRow<T> {
    pub fn origin(&self) -> Origin {
        match self {
            EqRow::Identify { origin, .. } | EqRow::Pin { origin, .. } | EqRow::Fix { origin, .. } => *origin,
        }
    }
}

/// One variable block: the behavior of `parties` within `inflation`.
#[derive(Clone, Debug)]
pub struct Block {
    pub label: String,
    pub inflation: Inflation,
    pub parties: Vec<PartyCopy>,
    pub layout: CgLayout,
}

impl Block {
    pub fn new(label: impl Into<String>, inflation: Inflation, parties: Vec<PartyCopy>) -> Self {
        let specs: Vec<PartySpec> = parties
            .iter()
            .map(|pc| {
                let base = &inflation.base.parties()[pc.party];
                PartySpec::new(inflation.party_label(*pc), base.inputs, base.outputs)
            })
            .collect();
        Self {
            label: label.into(),
            layout: CgLayout::new(specs),
            inflation,
            parties,
        }
    }

    pub fn n_entries(&self) -> usize {
        self.layout.n_entries()
    }

    pub fn n_coords(&self) -> usize {
        self.layout.len()
    }

    fn position(&self, pc: PartyCopy) -> Option<usize> {
        self.parties.iter().position(|&p| p == pc)
    }
}

#[derive(Clone, Debug)]
pub struct ConstraintSystem<T> {
    pub scenario: Scenario,
    pub p: Behavior<T>,
    pub p_layout: CgLayout,
    pub order: usize,
    pub blocks: Vec<Block>,
    pub rows: Vec<EqRow<T>>,
}

impl<T: Scalar> ConstraintSystem<T> {
    /// Assembles a system from parts, checking only that `p` matches the
    /// scenario's parties.
    pub fn from_parts(
        scenario: Scenario,
        p: Behavior<T>,
        order: usize,
        blocks: Vec<Block>,
        rows: Vec<EqRow<T>>,
    ) -> Result<Self> {
        if p.parties() != scenario.parties() {
            return Err(Error::PartyMismatch(
                "observed behavior parties differ from the scenario's".into(),
            ));
        }
        let p_layout = CgLayout::new(p.parties().to_vec());
        Ok(Self {
            scenario,
            p,
            p_layout,
            order,
            blocks,
            rows,
        })
    }

    /// The same rows against another observed behavior. `Fix` rows keep
    /// their values, so systems with rows computed from `P` must be rebuilt.
    pub fn with_behavior(&self, p: Behavior<T>) -> Result<Self> {
        Self::from_parts(
            self.scenario.clone(),
            p,
            self.order,
            self.blocks.clone(),
            self.rows.clone(),
        )
    }

    /// Same rows and blocks over another scalar type.
    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(&T) -> U) -> ConstraintSystem<U> {
        ConstraintSystem {
            scenario: self.scenario.clone(),
            p: self.p.map(&f),
            p_layout: self.p_layout.clone(),
            order: self.order,
            blocks: self.blocks.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| match r {
                    EqRow::Identify { origin, left, right } => EqRow::Identify {
                        origin: *origin,
                        left: *left,
                        right: *right,
                    },
                    EqRow::Pin { origin, node, p_coord } => EqRow::Pin {
                        origin: *origin,
                        node: *node,
                        p_coord: *p_coord,
                    },
                    EqRow::Fix { origin, node, value } => EqRow::Fix {
                        origin: *origin,
                        node: *node,
                        value: f(value),
                    },
                })
                .collect(),
        }
    }

    /// Raw block entries, i.e. probabilities of the inflated behaviors.
    pub fn n_variables(&self) -> usize {
        self.blocks.iter().map(Block::n_entries).sum()
    }

    pub fn n_coordinates(&self) -> usize {
        self.blocks.iter().map(|b| b.n_coords() - 1).sum()
    }

    pub fn count_rows(&self, origin: Origin) -> usize {
        self.rows.iter().filter(|r| r.origin() == origin).count()
    }

    /// Value of coordinate `p_coord` of the observed behavior.
    pub fn p_value(&self, p_coord: usize) -> T {
        self.p_layout.coordinate_value(&self.p, p_coord)
    }
}

/// Every nonempty sub-coordinate living on the paired positions, mapped
/// into both sides.
fn paired_coordinates(
    left: &CgLayout,
    left_pos: &[usize],
    right: &CgLayout,
    right_pos: &[usize],
) -> Vec<(usize, usize)> {
    let radices: Vec<usize> = left_pos
        .iter()
        .map(|&i| {
            let s = &left.specs()[i];
            1 + s.inputs * (s.outputs - 1)
        })
        .collect();
    let decode_digit = |spec: &PartySpec, d: usize| {
        (d > 0).then(|| {
            let m = spec.outputs - 1;
            ((d - 1) / m, (d - 1) % m)
        })
    };
    index::tuples(&radices)
        .skip(1)
        .map(|digits| {
            let mut lp = vec![None; left.n_parties()];
            let mut rp = vec![None; right.n_parties()];
            for (k, &d) in digits.iter().enumerate() {
                let pick = decode_digit(&left.specs()[left_pos[k]], d);
                lp[left_pos[k]] = pick;
                rp[right_pos[k]] = pick;
            }
            (left.encode(&lp), right.encode(&rp))
        })
        .collect()
}

fn pair_positions(block: &Block, parties: &[PartyCopy]) -> Vec<usize> {
    parties
        .iter()
        .map(|&pc| block.position(pc).expect("pair drawn from block parties"))
        .collect()
}

/// C1 pins for one block against the base scenario.
pub fn c1_rows<T>(block_index: usize, block: &Block, pairs: &[SubnetworkPair], p_layout: &CgLayout) -> Vec<EqRow<T>> {
    let mut rows = Vec::new();
    for pair in pairs {
        let lpos = pair_positions(block, &pair.left);
        let rpos: Vec<usize> = pair.right.iter().map(|pc| pc.party).collect();
        for (lc, rc) in paired_coordinates(&block.layout, &lpos, p_layout, &rpos) {
            rows.push(EqRow::Pin {
                origin: Origin::C1,
                node: Node {
                    block: block_index,
                    coord: lc,
                },
                p_coord: rc,
            });
        }
    }
    rows
}

/// C2+ identifications between two blocks (or within one).
pub fn c2_rows<T>(bi: usize, b1: &Block, bj: usize, b2: &Block, pairs: &[SubnetworkPair]) -> Vec<EqRow<T>> {
    let mut rows = Vec::new();
    for pair in pairs {
        let lpos = pair_positions(b1, &pair.left);
        let rpos = pair_positions(b2, &pair.right);
        for (lc, rc) in paired_coordinates(&b1.layout, &lpos, &b2.layout, &rpos) {
            let left = Node { block: bi, coord: lc };
            let right = Node { block: bj, coord: rc };
            if left != right {
                rows.push(EqRow::Identify {
                    origin: Origin::C2,
                    left: left.min(right),
                    right: left.max(right),
                });
            }
        }
    }
    rows
}

/// Drops repeated rows, keeping first occurrences.
pub fn dedup_rows<T: Scalar>(rows: Vec<EqRow<T>>) -> Vec<EqRow<T>> {
    let mut seen_pin = HashSet::new();
    let mut seen_id = HashSet::new();
    rows.into_iter()
        .filter(|r| match r {
            EqRow::Pin { node, p_coord, .. } => seen_pin.insert((*node, *p_coord)),
            EqRow::Identify { left, right, .. } => seen_id.insert((*left, *right)),
            EqRow::Fix { .. } => true,
        })
        .collect()
}

/// Builds the system for the given inflations: one block per inflation,
/// C1 pins against `p`, and C2+ identifications for every pair of blocks
/// (a block with itself included).
pub fn compile<T: Scalar>(
    scenario: &Scenario,
    p: &Behavior<T>,
    inflations: &[Inflation],
    max_variables: usize,
) -> Result<ConstraintSystem<T>> {
    if inflations.is_empty() {
        return Err(Error::InvalidInflation("no inflations given".into()));
    }
    if p.parties() != scenario.parties() {
        return Err(Error::PartyMismatch(
            "observed behavior parties differ from the scenario's".into(),
        ));
    }
    if !p.check_nonsignalling(DEFAULT_TOL)? {
        return Err(Error::Signalling("observed behavior".into()));
    }
    let order = inflations[0].order;
    if inflations.iter().any(|i| i.order != order || &i.base != scenario) {
        return Err(Error::InvalidInflation(
            "inflations must share the scenario and the order".into(),
        ));
    }
    let blocks: Vec<Block> = inflations
        .iter()
        .enumerate()
        .map(|(i, inf)| Block::new(format!("I{}", i + 1), inf.clone(), inf.party_copies()))
        .collect();
    let vars: usize = blocks.iter().map(Block::n_entries).sum();
    if vars > max_variables {
        return Err(Error::TooLarge {
            what: "inflated behavior entries",
            count: vars as u128,
            limit: max_variables as u128,
        });
    }
    let p_layout = CgLayout::new(p.parties().to_vec());

    let mut rows: Vec<EqRow<T>> = blocks
        .par_iter()
        .enumerate()
        .map(|(bi, b)| c1_rows(bi, b, &enumerate_c1_pairs(&b.inflation, scenario), &p_layout))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let block_pairs: Vec<(usize, usize)> = (0..blocks.len())
        .flat_map(|i| (i..blocks.len()).map(move |j| (i, j)))
        .collect();
    let c2: Vec<Vec<EqRow<T>>> = block_pairs
        .par_iter()
        .map(|&(i, j)| {
            let (b1, b2) = (&blocks[i], &blocks[j]);
            let pairs = maximal_pairs(&b1.inflation, &b1.parties, &b2.inflation, &b2.parties);
            c2_rows(i, b1, j, b2, &pairs)
        })
        .collect();
    rows.extend(c2.into_iter().flatten());

    ConstraintSystem::from_parts(scenario.clone(), p.clone(), order, blocks, dedup_rows(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::deterministic;
    use crate::inflation::{all_members, enumerate_inflations, DEFAULT_MAX_WIRINGS};
    use crate::network::canonical_scenario;
    use num_rational::BigRational;

    fn ghz_scenario() -> Scenario {
        canonical_scenario(
            3,
            vec![
                PartySpec::new("A", 2, 2),
                PartySpec::new("B", 3, 2),
                PartySpec::new("C", 2, 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn triangle_k2_block_sizes() {
        let s = ghz_scenario();
        let p: Behavior<BigRational> = Behavior::uniform(s.parties().to_vec());
        let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
        let sys = compile(&s, &p, &infl, DEFAULT_MAX_VARIABLES).unwrap();
        assert_eq!(sys.blocks.len(), 2);
        assert!(sys.blocks.iter().all(|b| b.n_entries() == 9216));
        assert_eq!(sys.n_variables(), 2 * 9216);
        // (1 + 2)(1 + 3)(1 + 2) coordinates per copy, squared for two copies
        assert!(sys.blocks.iter().all(|b| b.n_coords() == 36 * 36));
        assert!(sys.count_rows(Origin::C1) > 0 && sys.count_rows(Origin::C2) > 0);
    }

    #[test]
    fn rows_are_deterministic() {
        let s = ghz_scenario();
        let p: Behavior<BigRational> =
            deterministic(s.parties().to_vec(), &[vec![0, 1], vec![1, 0, 0], vec![0, 0]]).unwrap();
        let infl = all_members(&enumerate_inflations(&s, 2, DEFAULT_MAX_WIRINGS).unwrap());
        let a = compile(&s, &p, &infl, DEFAULT_MAX_VARIABLES).unwrap();
        let b = compile(&s, &p, &infl, DEFAULT_MAX_VARIABLES).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn single_copy_pins_everything() {
        let s = ghz_scenario();
        let p: Behavior<BigRational> = Behavior::uniform(s.parties().to_vec());
        let sys = compile(&s, &p, &[Inflation::trivial(s.clone())], DEFAULT_MAX_VARIABLES).unwrap();
        assert_eq!(sys.count_rows(Origin::C1), sys.blocks[0].n_coords() - 1);
        assert_eq!(sys.count_rows(Origin::C2), 0);
    }

    #[test]
    fn signalling_input_rejected() {
        let s = ghz_scenario();
        let p = Behavior::<BigRational>::from_fn(s.parties().to_vec(), |x, a| {
            let ok = a[0] == x[2] && a[1] == 0 && a[2] == 0;
            if ok { crate::scalar::ratio(1, 1) } else { crate::scalar::ratio(0, 1) }
        })
        .unwrap();
        let err = compile(&s, &p, &[Inflation::trivial(s.clone())], DEFAULT_MAX_VARIABLES).unwrap_err();
        assert!(matches!(err, Error::Signalling(_)));
    }

    #[test]
    fn variable_cap() {
        let s = ghz_scenario();
        let p: Behavior<BigRational> = Behavior::uniform(s.parties().to_vec());
        let infl = vec![Inflation::identity(s.clone(), 2)];
        assert!(matches!(compile(&s, &p, &infl, 100), Err(Error::TooLarge { .. })));
    }
}
