//! Collins–Gisin coordinates of nonsignalling behaviors.
//!
//! A coordinate picks, for every party, either nothing or a pair `(x, a)`
//! with `a < d − 1`, and stands for the probability that every picked party
//! outputs its `a` on input `x`. Coordinate 0 (nothing picked) is the
//! constant 1. Any nonsignalling table is an integer combination of its
//! coordinates, so parametrizing a block by them makes normalization and
//! nonsignalling hold by construction.

use crate::behavior::Behavior;
use crate::index;
use crate::network::PartySpec;
use crate::scalar::Scalar;

/// Per-party choice inside a coordinate.
pub type Pick = Option<(usize, usize)>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CgLayout {
    specs: Vec<PartySpec>,
    radices: Vec<usize>,
}

impl CgLayout {
    pub fn new(specs: Vec<PartySpec>) -> Self {
        let radices = specs
            .iter()
            .map(|p| 1 + p.inputs * (p.outputs - 1))
            .collect();
        Self { specs, radices }
    }

    pub fn specs(&self) -> &[PartySpec] {
        &self.specs
    }

    pub fn n_parties(&self) -> usize {
        self.specs.len()
    }

    /// Number of coordinates, constant included.
    pub fn len(&self) -> usize {
        index::size(&self.radices)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of raw table entries of a behavior on these parties.
    pub fn n_entries(&self) -> usize {
        self.specs.iter().map(|p| p.inputs * p.outputs).product()
    }

    fn digit(&self, party: usize, pick: Pick) -> usize {
        match pick {
            None => 0,
            Some((x, a)) => 1 + x * (self.specs[party].outputs - 1) + a,
        }
    }

    pub fn encode(&self, picks: &[Pick]) -> usize {
        let digits: Vec<usize> = picks
            .iter()
            .enumerate()
            .map(|(i, &p)| self.digit(i, p))
            .collect();
        index::encode(&digits, &self.radices)
    }

    pub fn decode(&self, coord: usize) -> Vec<Pick> {
        index::decode(coord, &self.radices)
            .into_iter()
            .enumerate()
            .map(|(i, d)| {
                if d == 0 {
                    None
                } else {
                    let m = self.specs[i].outputs - 1;
                    Some(((d - 1) / m, (d - 1) % m))
                }
            })
            .collect()
    }

    /// Integer expansion of `P(a|x)` over coordinates, by inclusion–exclusion
    /// on the parties that return their last output.
    pub fn expand_entry(&self, x: &[usize], a: &[usize]) -> Vec<(usize, i64)> {
        let mut terms: Vec<(Vec<Pick>, i64)> = vec![(Vec::with_capacity(self.n_parties()), 1)];
        for (i, spec) in self.specs.iter().enumerate() {
            let last = spec.outputs - 1;
            let options: Vec<(Pick, i64)> = if a[i] < last {
                vec![(Some((x[i], a[i])), 1)]
            } else {
                std::iter::once((None, 1))
                    .chain((0..last).map(|b| (Some((x[i], b)), -1)))
                    .collect()
            };
            terms = terms
                .into_iter()
                .flat_map(|(picks, c)| {
                    options.iter().map(move |&(p, s)| {
                        let mut picks = picks.clone();
                        picks.push(p);
                        (picks, c * s)
                    })
                })
                .collect();
        }
        terms
            .into_iter()
            .map(|(picks, c)| (self.encode(&picks), c))
            .collect()
    }

    /// Flat entry index of a behavior on these parties (inputs outer,
    /// outputs inner) for the entry-numbering used by blocks.
    pub fn entry_index(&self, x: &[usize], a: &[usize]) -> usize {
        let rin: Vec<usize> = self.specs.iter().map(|p| p.inputs).collect();
        let rout: Vec<usize> = self.specs.iter().map(|p| p.outputs).collect();
        index::encode(x, &rin) * index::size(&rout) + index::encode(a, &rout)
    }

    pub fn split_entry(&self, entry: usize) -> (Vec<usize>, Vec<usize>) {
        let rin: Vec<usize> = self.specs.iter().map(|p| p.inputs).collect();
        let rout: Vec<usize> = self.specs.iter().map(|p| p.outputs).collect();
        let d = index::size(&rout);
        (index::decode(entry / d, &rin), index::decode(entry % d, &rout))
    }

    /// Flat indices of the table entries whose sum is the coordinate, with
    /// unpicked parties read at input 0.
    pub fn coordinate_terms(&self, coord: usize) -> Vec<usize> {
        let picks = self.decode(coord);
        let x: Vec<usize> = picks.iter().map(|p| p.map_or(0, |(x, _)| x)).collect();
        let free: Vec<usize> = picks
            .iter()
            .zip(&self.specs)
            .map(|(p, s)| if p.is_some() { 1 } else { s.outputs })
            .collect();
        index::tuples(&free)
            .map(|t| {
                let a: Vec<usize> = picks
                    .iter()
                    .zip(&t)
                    .map(|(p, &v)| p.map_or(v, |(_, a)| a))
                    .collect();
                self.entry_index(&x, &a)
            })
            .collect()
    }

    /// Entries at the coordinate's joint input whose sum is the coordinate
    /// (`complement == false`) or one minus it (`complement == true`).
    pub fn coordinate_entry_set(&self, coord: usize, complement: bool) -> Vec<usize> {
        let picks = self.decode(coord);
        let x: Vec<usize> = picks.iter().map(|p| p.map_or(0, |(x, _)| x)).collect();
        let rout: Vec<usize> = self.specs.iter().map(|p| p.outputs).collect();
        index::tuples(&rout)
            .filter(|a| {
                let hit = picks
                    .iter()
                    .zip(a)
                    .all(|(p, &ai)| p.is_none_or(|(_, pa)| pa == ai));
                hit != complement
            })
            .map(|a| self.entry_index(&x, &a))
            .collect()
    }

    /// Value of a coordinate on a behavior over the same parties.
    pub fn coordinate_value<T: Scalar>(&self, b: &Behavior<T>, coord: usize) -> T {
        if coord == 0 {
            return T::one();
        }
        self.coordinate_terms(coord)
            .into_iter()
            .fold(T::zero(), |acc, i| acc + b.table()[i].clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;

    fn layout() -> CgLayout {
        CgLayout::new(vec![
            PartySpec::new("A", 2, 3),
            PartySpec::new("B", 3, 2),
        ])
    }

    #[test]
    fn encode_decode_roundtrip() {
        let l = layout();
        assert_eq!(l.len(), 5 * 4);
        for c in 0..l.len() {
            assert_eq!(l.encode(&l.decode(c)), c);
        }
    }

    #[test]
    fn expansion_reproduces_table() {
        // an arbitrary nonsignalling behavior: product of local tables
        let a = Behavior::<BigRational>::new(
            vec![PartySpec::new("A", 2, 3)],
            vec![ratio(1, 2), ratio(1, 3), ratio(1, 6), ratio(1, 5), ratio(0, 1), ratio(4, 5)],
        )
        .unwrap();
        let b = Behavior::<BigRational>::new(
            vec![PartySpec::new("B", 3, 2)],
            vec![ratio(1, 7), ratio(6, 7), ratio(1, 1), ratio(0, 1), ratio(2, 3), ratio(1, 3)],
        )
        .unwrap();
        let ab = a.product(&b).unwrap();
        let l = layout();
        let coords: Vec<BigRational> = (0..l.len()).map(|c| l.coordinate_value(&ab, c)).collect();
        for (flat, v) in ab.table().iter().enumerate() {
            let (x, out) = l.split_entry(flat);
            let s = l
                .expand_entry(&x, &out)
                .into_iter()
                .fold(ratio(0, 1), |acc, (c, k)| acc + coords[c].clone() * ratio(k, 1));
            assert_eq!(&s, v);
        }
        for c in 1..l.len() {
            let inside: BigRational = l
                .coordinate_entry_set(c, false)
                .into_iter()
                .map(|i| ab.table()[i].clone())
                .sum();
            let outside: BigRational = l
                .coordinate_entry_set(c, true)
                .into_iter()
                .map(|i| ab.table()[i].clone())
                .sum();
            assert_eq!(inside, coords[c]);
            assert_eq!(outside, ratio(1, 1) - coords[c].clone());
        }
    }
}
