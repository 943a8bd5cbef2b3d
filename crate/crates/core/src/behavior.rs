//! Conditional probability tables `P(a | x)` over an ordered party list.
//!
//! Storage is dense. The flat index puts the joint input outermost and the
//! joint output innermost; within each, the first party is the most
//! significant digit. Dichotomic observables take the value `(−1)^a`, so
//! output 0 reads as +1 and output 1 as −1.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::index;
use crate::network::PartySpec;
use crate::scalar::Scalar;

/// Default tolerance for float equality checks.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Behavior<T> {
    parties: Vec<PartySpec>,
    table: Vec<T>,
}

/// Product of `(−1)^{a_j}` over the listed `(party, input)` pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correlator {
    pub factors: Vec<(usize, usize)>,
}

impl Correlator {
    pub fn new(factors: Vec<(usize, usize)>) -> Self {
        Self { factors }
    }
}

/// A conditioning event on outputs at fixed inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    /// Party `party` on input `input` returns `output`.
    Output {
        party: usize,
        input: usize,
        output: usize,
    },
    /// All listed parties use `input`; the product of their `(−1)^a` values is
    /// +1 when `even`, −1 otherwise.
    Parity {
        parties: Vec<usize>,
        input: usize,
        even: bool,
    },
}

impl Event {
    fn inputs(&self) -> Vec<(usize, usize)> {
        match self {
            Event::Output { party, input, .. } => vec![(*party, *input)],
            Event::Parity { parties, input, .. } => parties.iter().map(|&p| (p, *input)).collect(),
        }
    }

    fn holds(&self, outputs: &[usize]) -> bool {
        match self {
            Event::Output { party, output, .. } => outputs[*party] == *output,
            Event::Parity { parties, even, .. } => {
                let ones = parties.iter().filter(|&&p| outputs[p] % 2 == 1).count();
                (ones % 2 == 0) == *even
            }
        }
    }

    fn describe(&self) -> String {
        format!("{self:?}")
    }
}

impl<T: Scalar> Behavior<T> {
    /// Validates shape, nonnegativity and normalization (floats within
    /// [`DEFAULT_TOL`]).
    pub fn new(parties: Vec<PartySpec>, table: Vec<T>) -> Result<Self> {
        let b = Self::new_unchecked(parties, table)?;
        b.validate(DEFAULT_TOL)?;
        Ok(b)
    }

    /// Checks the table length only.
    pub fn new_unchecked(parties: Vec<PartySpec>, table: Vec<T>) -> Result<Self> {
        let names: BTreeSet<&str> = parties.iter().map(|p| p.name.as_str()).collect();
        if names.len() != parties.len() {
            return Err(Error::InvalidBehavior("party names must be unique".into()));
        }
        let expected = index::size(&radices_in(&parties)) * index::size(&radices_out(&parties));
        if table.len() != expected {
            return Err(Error::InvalidBehavior(format!(
                "expected {expected} entries, got {}",
                table.len()
            )));
        }
        Ok(Self { parties, table })
    }

    pub fn from_fn(
        parties: Vec<PartySpec>,
        mut f: impl FnMut(&[usize], &[usize]) -> T,
    ) -> Result<Self> {
        let rin = radices_in(&parties);
        let rout = radices_out(&parties);
        let mut table = Vec::with_capacity(index::size(&rin) * index::size(&rout));
        for x in index::tuples(&rin) {
            for a in index::tuples(&rout) {
                table.push(f(&x, &a));
            }
        }
        Self::new(parties, table)
    }

    /// Uniform outputs for every input.
    pub fn uniform(parties: Vec<PartySpec>) -> Self {
        let d: usize = index::size(&radices_out(&parties));
        Self::from_fn(parties, |_, _| T::from_ratio(1, d as i64)).expect("uniform is valid")
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if let Some(v) = self.table.iter().find(|v| v.is_negative_tol(tol)) {
            return Err(Error::InvalidBehavior(format!("negative entry {v}")));
        }
        let d = self.n_joint_outputs();
        for (xi, chunk) in self.table.chunks(d).enumerate() {
            let s = chunk.iter().fold(T::zero(), |acc, v| acc + v.clone());
            if !s.approx_eq(&T::one(), tol) {
                return Err(Error::InvalidBehavior(format!(
                    "outputs for joint input {:?} sum to {s}",
                    index::decode(xi, &self.input_radices())
                )));
            }
        }
        Ok(())
    }

    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn table(&self) -> &[T] {
        &self.table
    }

    pub fn into_table(self) -> Vec<T> {
        self.table
    }

    pub fn input_radices(&self) -> Vec<usize> {
        radices_in(&self.parties)
    }

    pub fn output_radices(&self) -> Vec<usize> {
        radices_out(&self.parties)
    }

    pub fn n_joint_inputs(&self) -> usize {
        index::size(&self.input_radices())
    }

    pub fn n_joint_outputs(&self) -> usize {
        index::size(&self.output_radices())
    }

    pub fn flat_index(&self, inputs: &[usize], outputs: &[usize]) -> usize {
        index::encode(inputs, &self.input_radices()) * self.n_joint_outputs()
            + index::encode(outputs, &self.output_radices())
    }

    /// Inverse of [`Behavior::flat_index`].
    pub fn split_index(&self, flat: usize) -> (Vec<usize>, Vec<usize>) {
        let d = self.n_joint_outputs();
        (
            index::decode(flat / d, &self.input_radices()),
            index::decode(flat % d, &self.output_radices()),
        )
    }

    pub fn get(&self, inputs: &[usize], outputs: &[usize]) -> &T {
        &self.table[self.flat_index(inputs, outputs)]
    }

    /// Output distribution for one joint input.
    pub fn row(&self, inputs: &[usize]) -> &[T] {
        let d = self.n_joint_outputs();
        let xi = index::encode(inputs, &self.input_radices());
        &self.table[xi * d..(xi + 1) * d]
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.name == name)
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Behavior<U> {
        Behavior {
            parties: self.parties.clone(),
            table: self.table.iter().map(f).collect(),
        }
    }

    /// `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: &T) -> Result<Self> {
        if self.parties != other.parties {
            return Err(Error::PartyMismatch("mixing behaviors over different parties".into()));
        }
        let rest = T::one() - w.clone();
        Ok(Self {
            parties: self.parties.clone(),
            table: self
                .table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| w.clone() * a.clone() + rest.clone() * b.clone())
                .collect(),
        })
    }

    /// True iff every single-party marginal-out is independent of that party's
    /// input; this is equivalent to nonsignalling for every party subset.
    /// `tol` is ignored for exact scalars.
    pub fn check_nonsignalling(&self, tol: f64) -> Result<bool> {
        self.validate(tol)?;
        Ok(self.first_signalling(tol).is_none())
    }

    /// The first party whose input leaks into the others' marginal.
    fn first_signalling(&self, tol: f64) -> Option<usize> {
        let rin = self.input_radices();
        let rout = self.output_radices();
        for j in 0..self.n_parties() {
            let mut others_out = rout.clone();
            others_out[j] = 1;
            for x in index::tuples(&rin) {
                if x[j] != 0 {
                    continue;
                }
                for a in index::tuples(&others_out) {
                    let reference = self.sum_over_party(&x, &a, j);
                    for xj in 1..rin[j] {
                        let mut x2 = x.clone();
                        x2[j] = xj;
                        if !self.sum_over_party(&x2, &a, j).approx_eq(&reference, tol) {
                            return Some(j);
                        }
                    }
                }
            }
        }
        None
    }

    fn sum_over_party(&self, x: &[usize], a: &[usize], j: usize) -> T {
        let mut a = a.to_vec();
        let mut s = T::zero();
        for aj in 0..self.parties[j].outputs {
            a[j] = aj;
            s = s + self.get(x, &a).clone();
        }
        s
    }

    /// Marginal on `keep` (indices, in the requested order). Dropped parties
    /// are read at input 0.
    pub fn marginalize(&self, keep: &[usize]) -> Result<Self> {
        let distinct: BTreeSet<_> = keep.iter().collect();
        if distinct.len() != keep.len() || keep.iter().any(|&k| k >= self.n_parties()) {
            return Err(Error::PartyMismatch(format!(
                "cannot keep {keep:?} out of {} parties",
                self.n_parties()
            )));
        }
        if let Some(j) = self.first_signalling(DEFAULT_TOL) {
            return Err(Error::Signalling(format!(
                "marginal ill-defined: party {} signals",
                self.parties[j].name
            )));
        }
        Ok(self.marginalize_at(keep, &vec![0; self.n_parties()]))
    }

    /// Marginal with dropped parties' inputs taken from `fixed`, without any
    /// nonsignalling check.
    pub fn marginalize_at(&self, keep: &[usize], fixed: &[usize]) -> Self {
        let parties: Vec<PartySpec> = keep.iter().map(|&k| self.parties[k].clone()).collect();
        let rout = self.output_radices();
        let sub_in = radices_in(&parties);
        let sub_out = radices_out(&parties);
        let d_sub = index::size(&sub_out);
        let mut table = vec![T::zero(); index::size(&sub_in) * d_sub];
        for (xi, xs) in index::tuples(&sub_in).enumerate() {
            let mut x = fixed.to_vec();
            for (&k, &v) in keep.iter().zip(&xs) {
                x[k] = v;
            }
            let row = self.row(&x);
            for (ai, a) in index::tuples(&rout).enumerate() {
                let sub: Vec<usize> = keep.iter().map(|&k| a[k]).collect();
                let si = xi * d_sub + index::encode(&sub, &sub_out);
                table[si] = table[si].clone() + row[ai].clone();
            }
        }
        Self { parties, table }
    }

    pub fn marginalize_names(&self, keep: &[&str]) -> Result<Self> {
        let idx = keep
            .iter()
            .map(|n| {
                self.party_index(n)
                    .ok_or_else(|| Error::PartyMismatch(format!("unknown party {n}")))
            })
            .collect::<Result<Vec<_>>>()?;
        self.marginalize(&idx)
    }

    /// Independent joint behavior on the concatenated party list.
    pub fn product(&self, other: &Self) -> Result<Self> {
        for p in &other.parties {
            if self.party_index(&p.name).is_some() {
                return Err(Error::PartyMismatch(format!(
                    "party {} appears in both factors",
                    p.name
                )));
            }
        }
        let parties: Vec<PartySpec> = self.parties.iter().chain(&other.parties).cloned().collect();
        let n1 = self.n_parties();
        Self::from_fn(parties, |x, a| {
            self.get(&x[..n1], &a[..n1]).clone() * other.get(&x[n1..], &a[n1..]).clone()
        })
    }

    /// Joint input with the listed `(party, input)` settings and 0 elsewhere.
    fn joint_input(&self, settings: &[(usize, usize)]) -> Result<Vec<usize>> {
        let mut x: Vec<Option<usize>> = vec![None; self.n_parties()];
        for &(p, v) in settings {
            if p >= self.n_parties() || v >= self.parties[p].inputs {
                return Err(Error::PartyMismatch(format!(
                    "setting ({p}, {v}) out of range"
                )));
            }
            match x[p] {
                Some(old) if old != v => {
                    return Err(Error::InvalidBehavior(format!(
                        "party {} asked for inputs {old} and {v} at once",
                        self.parties[p].name
                    )))
                }
                _ => x[p] = Some(v),
            }
        }
        Ok(x.into_iter().map(|v| v.unwrap_or(0)).collect())
    }

    /// `Σ_a P(a|x) f(a)` and `P(E|x)` at the joint input fixed by `settings`,
    /// restricted to outputs where `given` holds.
    fn weighted_sums(
        &self,
        settings: &[(usize, usize)],
        f: impl Fn(&[usize]) -> T,
        given: impl Fn(&[usize]) -> bool,
    ) -> Result<(T, T)> {
        let x = self.joint_input(settings)?;
        let row = self.row(&x);
        let mut num = T::zero();
        let mut den = T::zero();
        for (ai, a) in index::tuples(&self.output_radices()).enumerate() {
            if !given(&a) {
                continue;
            }
            num = num + row[ai].clone() * f(&a);
            den = den + row[ai].clone();
        }
        Ok((num, den))
    }

    /// `⟨observable⟩` conditioned on `given`. Parties not mentioned use input 0.
    pub fn condition_expectation(&self, observable: &Correlator, given: Option<&Event>) -> Result<T> {
        let mut settings = observable.factors.clone();
        if let Some(e) = given {
            settings.extend(e.inputs());
        }
        let parties: Vec<usize> = observable.factors.iter().map(|&(p, _)| p).collect();
        let sign = |a: &[usize]| {
            let ones = parties.iter().filter(|&&p| a[p] % 2 == 1).count();
            if ones % 2 == 0 {
                T::one()
            } else {
                -T::one()
            }
        };
        let (num, den) = self.weighted_sums(&settings, sign, |a| given.is_none_or(|e| e.holds(a)))?;
        if den.is_zero() {
            return Err(Error::ConditioningUndefined(
                given.map(Event::describe).unwrap_or_default(),
            ));
        }
        Ok(num / den)
    }

    /// Unconditioned `⟨observable⟩`.
    pub fn correlator(&self, observable: &Correlator) -> Result<T> {
        self.condition_expectation(observable, None)
    }

    /// `P(pred | given)` at the joint input fixed by `settings`.
    pub fn conditional_probability(
        &self,
        settings: &[(usize, usize)],
        pred: impl Fn(&[usize]) -> bool,
        given: Option<&Event>,
    ) -> Result<T> {
        let mut settings = settings.to_vec();
        if let Some(e) = given {
            settings.extend(e.inputs());
        }
        let f = |a: &[usize]| if pred(a) { T::one() } else { T::zero() };
        let (num, den) = self.weighted_sums(&settings, f, |a| given.is_none_or(|e| e.holds(a)))?;
        if den.is_zero() {
            return Err(Error::ConditioningUndefined(
                given.map(Event::describe).unwrap_or_default(),
            ));
        }
        Ok(num / den)
    }
}

fn radices_in(parties: &[PartySpec]) -> Vec<usize> {
    parties.iter().map(|p| p.inputs).collect()
}

fn radices_out(parties: &[PartySpec]) -> Vec<usize> {
    parties.iter().map(|p| p.outputs).collect()
}

/// Deterministic local strategy: party `j` answers `responses[j][x_j]`.
pub fn deterministic<T: Scalar>(parties: Vec<PartySpec>, responses: &[Vec<usize>]) -> Result<Behavior<T>> {
    if responses.len() != parties.len() {
        return Err(Error::PartyMismatch("one response table per party".into()));
    }
    for (p, r) in parties.iter().zip(responses) {
        if r.len() != p.inputs || r.iter().any(|&o| o >= p.outputs) {
            return Err(Error::InvalidBehavior(format!(
                "bad response table for {}",
                p.name
            )));
        }
    }
    Behavior::from_fn(parties, |x, a| {
        if a.iter().enumerate().all(|(j, &aj)| responses[j][x[j]] == aj) {
            T::one()
        } else {
            T::zero()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn spec(name: &str, m: usize, d: usize) -> PartySpec {
        PartySpec::new(name, m, d)
    }

    fn random_local(parties: &[PartySpec], seed: &[u32]) -> Behavior<BigRational> {
        // independent local response functions with rational weights
        let mut it = seed.iter().cycle();
        let mut factors = Vec::new();
        for p in parties {
            let mut table = Vec::new();
            for _ in 0..p.inputs {
                let w: Vec<i64> = (0..p.outputs).map(|_| 1 + (*it.next().unwrap() % 7) as i64).collect();
                let tot: i64 = w.iter().sum();
                table.extend(w.iter().map(|&v| ratio(v, tot)));
            }
            factors.push(Behavior::new(vec![p.clone()], table).unwrap());
        }
        factors.into_iter().reduce(|a, b| a.product(&b).unwrap()).unwrap()
    }

    #[test]
    fn uniform_product_is_uniform() {
        let a = Behavior::<BigRational>::uniform(vec![spec("A", 2, 2)]);
        let b = Behavior::<BigRational>::uniform(vec![spec("B", 3, 2)]);
        let ab = a.product(&b).unwrap();
        assert_eq!(ab, Behavior::uniform(vec![spec("A", 2, 2), spec("B", 3, 2)]));
        assert!(ab.check_nonsignalling(0.0).unwrap());
        assert!(a.product(&a).is_err());
    }

    #[test]
    fn signalling_table_detected() {
        // B's output copies A's input
        let parties = vec![spec("A", 2, 2), spec("B", 1, 2)];
        let b = Behavior::<BigRational>::from_fn(parties, |x, a| {
            if a[1] == x[0] && a[0] == 0 {
                ratio(1, 1)
            } else {
                ratio(0, 1)
            }
        })
        .unwrap();
        assert!(!b.check_nonsignalling(0.0).unwrap());
        assert!(matches!(b.marginalize(&[1]), Err(Error::Signalling(_))));
    }

    #[test]
    fn unnormalized_rejected() {
        let r = Behavior::<f64>::new(vec![spec("A", 1, 2)], vec![0.5, 0.6]);
        assert!(matches!(r, Err(Error::InvalidBehavior(_))));
        let ok = Behavior::<f64>::new_unchecked(vec![spec("A", 1, 2)], vec![0.5, 0.6]).unwrap();
        assert!(ok.check_nonsignalling(1e-9).is_err());
    }

    #[test]
    fn deterministic_correlators() {
        let parties = vec![spec("A", 2, 2), spec("B", 3, 2), spec("C", 2, 2)];
        let b: Behavior<BigRational> = deterministic(parties, &[vec![0, 0], vec![0, 0, 0], vec![0, 0]]).unwrap();
        let given = Event::Output { party: 2, input: 1, output: 0 };
        for (x, y) in [(0, 0), (1, 1), (0, 2)] {
            let v = b.condition_expectation(&Correlator::new(vec![(0, x), (1, y)]), Some(&given)).unwrap();
            assert_eq!(v, ratio(1, 1));
        }
        let never = Event::Output { party: 2, input: 1, output: 1 };
        assert!(matches!(
            b.condition_expectation(&Correlator::new(vec![(0, 0)]), Some(&never)),
            Err(Error::ConditioningUndefined(_))
        ));
        assert!(b.correlator(&Correlator::new(vec![(0, 0), (0, 1)])).is_err());
    }

    #[test]
    fn marginal_of_nothing_dropped_is_identity() {
        let parties = vec![spec("A", 2, 2), spec("B", 2, 3)];
        let b = random_local(&parties, &[3, 1, 4, 1, 5, 9, 2, 6]);
        assert_eq!(b.marginalize(&[0, 1]).unwrap(), b);
        let swapped = b.marginalize(&[1, 0]).unwrap();
        assert_eq!(swapped.parties()[0].name, "B");
        assert_eq!(swapped.get(&[1, 0], &[2, 1]), b.get(&[0, 1], &[1, 2]));
    }

    proptest! {
        #[test]
        fn marginalize_recovers_product_factors(seed in prop::collection::vec(0u32..100, 12)) {
            let p1 = vec![spec("A", 2, 2), spec("B", 1, 3)];
            let p2 = vec![spec("C", 3, 2)];
            let b1 = random_local(&p1, &seed);
            let b2 = random_local(&p2, &seed[5..]);
            let joint = b1.product(&b2).unwrap();
            prop_assert_eq!(joint.marginalize(&[0, 1]).unwrap(), b1);
            prop_assert_eq!(joint.marginalize(&[2]).unwrap(), b2);
        }

        #[test]
        fn marginalization_commutes(seed in prop::collection::vec(0u32..100, 12), mix in 0i64..=10) {
            let parties = vec![spec("A", 2, 2), spec("B", 2, 2), spec("C", 2, 3)];
            let b = random_local(&parties, &seed)
                .mix(&random_local(&parties, &seed[3..]), &ratio(mix, 10))
                .unwrap();
            let direct = b.marginalize(&[2, 0]).unwrap();
            let staged = b.marginalize(&[0, 2]).unwrap().marginalize(&[1, 0]).unwrap();
            prop_assert_eq!(direct, staged);
        }
    }
}
