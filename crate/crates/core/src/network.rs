//! Scenarios, nonfanout inflations, sub-networks and their isomorphisms.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartySpec {
    pub name: String,
    pub inputs: usize,
    pub outputs: usize,
}

impl PartySpec {
    pub fn new(name: impl Into<String>, inputs: usize, outputs: usize) -> Self {
        Self {
            name: name.into(),
            inputs,
            outputs,
        }
    }
}

/// A network of parties and sources. `attachment[s]` lists the parties fed
/// by source `s` in increasing index order; that order defines the slots of
/// an inflation wiring.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    parties: Vec<PartySpec>,
    sources: Vec<String>,
    attachment: Vec<Vec<usize>>,
}

impl Scenario {
    pub fn new(
        parties: Vec<PartySpec>,
        sources: Vec<String>,
        attachment: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if sources.len() != attachment.len() {
            return Err(Error::InvalidScenario(
                "one attachment list per source is required".into(),
            ));
        }
        let names: BTreeSet<&str> = parties.iter().map(|p| p.name.as_str()).collect();
        if names.len() != parties.len() {
            return Err(Error::InvalidScenario("party names must be unique".into()));
        }
        for p in &parties {
            if p.inputs == 0 || p.outputs == 0 {
                return Err(Error::InvalidScenario(format!(
                    "party {} needs at least one input and one output",
                    p.name
                )));
            }
        }
        let mut attachment = attachment;
        for (s, att) in attachment.iter_mut().enumerate() {
            att.sort_unstable();
            att.dedup();
            if att.iter().any(|&j| j >= parties.len()) {
                return Err(Error::InvalidScenario(format!(
                    "source {} attaches an unknown party",
                    sources[s]
                )));
            }
        }
        Ok(Self {
            parties,
            sources,
            attachment,
        })
    }

    pub fn parties(&self) -> &[PartySpec] {
        &self.parties
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn n_parties(&self) -> usize {
        self.parties.len()
    }

    pub fn n_sources(&self) -> usize {
        self.sources.len()
    }

    /// Parties attached to source `s`, in slot order.
    pub fn attached(&self, s: usize) -> &[usize] {
        &self.attachment[s]
    }

    /// Sources attached to party `j`, in increasing order.
    pub fn sources_of(&self, j: usize) -> Vec<usize> {
        (0..self.n_sources())
            .filter(|&s| self.attachment[s].contains(&j))
            .collect()
    }

    /// Slot of party `j` within source `s`.
    pub fn slot(&self, s: usize, j: usize) -> Option<usize> {
        self.attachment[s].iter().position(|&p| p == j)
    }

    pub fn party_index(&self, name: &str) -> Option<usize> {
        self.parties.iter().position(|p| p.name == name)
    }

    /// Two-party networks are accepted, but no certification claim targets them.
    pub fn is_degenerate(&self) -> bool {
        self.n_parties() < 3
    }
}

/// The network with one source per (n−1)-subset: source `S_i` feeds every
/// party except `A_i`.
pub fn canonical_scenario(n: usize, party_specs: Vec<PartySpec>) -> Result<Scenario> {
    if n < 2 {
        return Err(Error::InvalidScenario(format!(
            "at least two parties are required, got {n}"
        )));
    }
    if party_specs.len() != n {
        return Err(Error::InvalidScenario(format!(
            "expected {n} party specs, got {}",
            party_specs.len()
        )));
    }
    let sources = (0..n).map(|i| format!("S_{}", party_specs[i].name)).collect();
    let attachment = (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect();
    Scenario::new(party_specs, sources, attachment)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyCopy {
    pub party: usize,
    pub copy: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SourceCopy {
    pub source: usize,
    pub copy: usize,
}

/// A K-th order copy structure over a base scenario.
///
/// `wiring[s][k][slot]` is the copy index of the party in `slot` of source
/// `s` that source copy `k` attaches.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inflation {
    pub base: Scenario,
    pub order: usize,
    pub wiring: Vec<Vec<Vec<usize>>>,
}

impl Inflation {
    pub fn new(base: Scenario, order: usize, wiring: Vec<Vec<Vec<usize>>>) -> Self {
        Self {
            base,
            order,
            wiring,
        }
    }

    /// K disjoint copies of the base network.
    pub fn identity(base: Scenario, order: usize) -> Self {
        let wiring = (0..base.n_sources())
            .map(|s| {
                (0..order)
                    .map(|k| vec![k; base.attached(s).len()])
                    .collect()
            })
            .collect();
        Self::new(base, order, wiring)
    }

    /// The base network seen as its own order-1 inflation.
    pub fn trivial(base: Scenario) -> Self {
        Self::identity(base, 1)
    }

    /// All party copies, copy-major: `A^1 B^1 C^1 A^2 …`.
    pub fn party_copies(&self) -> Vec<PartyCopy> {
        (0..self.order)
            .flat_map(|copy| (0..self.base.n_parties()).map(move |party| PartyCopy { party, copy }))
            .collect()
    }

    pub fn source_copies(&self) -> Vec<SourceCopy> {
        (0..self.base.n_sources())
            .flat_map(|source| (0..self.order).map(move |copy| SourceCopy { source, copy }))
            .collect()
    }

    pub fn attached(&self, sc: SourceCopy) -> Vec<PartyCopy> {
        self.base
            .attached(sc.source)
            .iter()
            .zip(&self.wiring[sc.source][sc.copy])
            .map(|(&party, &copy)| PartyCopy { party, copy })
            .collect()
    }

    /// The copy of source type `source` that feeds `pc`, if any.
    pub fn source_copy_of(&self, pc: PartyCopy, source: usize) -> Option<SourceCopy> {
        let slot = self.base.slot(source, pc.party)?;
        self.wiring[source]
            .iter()
            .position(|row| row[slot] == pc.copy)
            .map(|copy| SourceCopy { source, copy })
    }

    pub fn sources_of(&self, pc: PartyCopy) -> Vec<SourceCopy> {
        self.base
            .sources_of(pc.party)
            .into_iter()
            .filter_map(|s| self.source_copy_of(pc, s))
            .collect()
    }

    /// Compact wiring string, e.g. `S_A[00,11] S_B[10,01] …`.
    pub fn wiring_label(&self) -> String {
        self.wiring
            .iter()
            .enumerate()
            .map(|(s, rows)| {
                let rows: Vec<String> = rows
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(""))
                    .collect();
                format!("{}[{}]", self.base.sources()[s], rows.join(","))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn party_label(&self, pc: PartyCopy) -> String {
        format!("{}^{}", self.base.parties()[pc.party].name, pc.copy + 1)
    }
}

impl fmt::Display for Inflation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={} {}", self.order, self.wiring_label())
    }
}

/// Checks shape and both nonfanout rules. Each wiring column must be a
/// permutation of the copy indices.
pub fn validate_inflation(candidate: &Inflation) -> bool {
    let base = &candidate.base;
    let k = candidate.order;
    if k == 0 || candidate.wiring.len() != base.n_sources() {
        return false;
    }
    for (s, rows) in candidate.wiring.iter().enumerate() {
        let width = base.attached(s).len();
        if rows.len() != k || rows.iter().any(|r| r.len() != width) {
            return false;
        }
        for slot in 0..width {
            let mut seen = vec![false; k];
            for row in rows {
                let c = row[slot];
                if c >= k || seen[c] {
                    return false;
                }
                seen[c] = true;
            }
        }
    }
    true
}

/// An ordered list of party copies together with every source copy they touch.
#[derive(Clone, Debug)]
pub struct SubNetwork<'a> {
    pub host: &'a Inflation,
    pub parties: Vec<PartyCopy>,
    pub sources: Vec<SourceCopy>,
}

impl<'a> SubNetwork<'a> {
    pub fn new(host: &'a Inflation, parties: Vec<PartyCopy>) -> Result<Self> {
        let distinct: BTreeSet<_> = parties.iter().collect();
        if distinct.len() != parties.len() {
            return Err(Error::InvalidInflation(
                "sub-network party list contains duplicates".into(),
            ));
        }
        for pc in &parties {
            if pc.party >= host.base.n_parties() || pc.copy >= host.order {
                return Err(Error::InvalidInflation(format!(
                    "party copy {pc:?} not in host"
                )));
            }
        }
        let sources: BTreeSet<SourceCopy> =
            parties.iter().flat_map(|&pc| host.sources_of(pc)).collect();
        Ok(Self {
            host,
            parties,
            sources: sources.into_iter().collect(),
        })
    }

    /// Positions (in `parties`) fed by `sc`.
    fn positions_of(&self, sc: SourceCopy) -> Vec<usize> {
        let att = self.host.attached(sc);
        (0..self.parties.len())
            .filter(|&i| att.contains(&self.parties[i]))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoMap {
    pub parties: Vec<(PartyCopy, PartyCopy)>,
    pub sources: Vec<(SourceCopy, SourceCopy)>,
}

/// The index-dropping isomorphism between two sub-networks whose party lists
/// correspond position by position. The source map is forced: a source copy
/// must go to the same-type copy feeding the image of any of its parties.
pub fn subnetwork_isomorphism(g1: &SubNetwork<'_>, g2: &SubNetwork<'_>) -> Option<IsoMap> {
    if g1.parties.len() != g2.parties.len() || g1.sources.len() != g2.sources.len() {
        return None;
    }
    let specs1 = g1.host.base.parties();
    let specs2 = g2.host.base.parties();
    for (a, b) in g1.parties.iter().zip(&g2.parties) {
        if a.party != b.party || specs1[a.party] != specs2[b.party] {
            return None;
        }
    }
    let mut source_map = Vec::with_capacity(g1.sources.len());
    let mut images = BTreeSet::new();
    for &s in &g1.sources {
        let pos1 = g1.positions_of(s);
        let first = *pos1.first()?;
        let t = g2.host.source_copy_of(g2.parties[first], s.source)?;
        if g2.positions_of(t) != pos1 || !images.insert(t) {
            return None;
        }
        source_map.push((s, t));
    }
    Some(IsoMap {
        parties: g1.parties.iter().copied().zip(g2.parties.iter().copied()).collect(),
        sources: source_map,
    })
}
