//! Elimination of the equality rows.
//!
//! Identify rows merge block coordinates into classes (union–find). A class
//! holding a Pin or Fix row is *fixed*: its value comes from the observed
//! behavior or a constant. The remaining classes are the free variables `z`.
//! Every block entry then reads `g·z + c`, with `g` integer and independent
//! of the observed behavior, and the system is feasible iff some `z` makes
//! all entries nonnegative.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;

use crate::constraints::{ConstraintSystem, EqRow, Node};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassKind {
    Free(usize),
    /// Value taken from the first anchor row.
    Fixed,
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub kind: ClassKind,
    /// Node ids, root first, then breadth-first.
    pub nodes: Vec<usize>,
    /// Pin/Fix rows whose node lies in this class, in row order.
    pub anchors: Vec<usize>,
}

/// One block entry as an affine function of the free classes.
#[derive(Clone, Debug)]
pub struct Column {
    pub block: usize,
    pub entry: usize,
    pub free: Vec<(u32, i64)>,
    pub fixed: Vec<(u32, i64)>,
    pub constant: i64,
}

#[derive(Clone, Debug)]
pub struct Reduced {
    /// Node id of coordinate `c` of block `b` is `offsets[b] + c`.
    pub offsets: Vec<usize>,
    pub class_of: Vec<usize>,
    pub classes: Vec<ClassInfo>,
    pub n_free: usize,
    /// Spanning-forest parent of each node: (parent node, Identify row).
    pub parent: Vec<Option<(usize, usize)>>,
    pub columns: Vec<Column>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }
    fn find(&mut self, mut u: usize) -> usize {
        while self.parent[u] != u {
            self.parent[u] = self.parent[self.parent[u]];
            u = self.parent[u];
        }
        u
    }
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

impl Reduced {
    pub fn node_id(&self, n: Node) -> usize {
        self.offsets[n.block] + n.coord
    }

    pub fn node_of(&self, id: usize) -> Node {
        let block = self.offsets.partition_point(|&o| o <= id) - 1;
        Node {
            block,
            coord: id - self.offsets[block],
        }
    }

    pub fn build<T: Scalar>(sys: &ConstraintSystem<T>) -> Self {
        let mut offsets = Vec::with_capacity(sys.blocks.len());
        let mut total = 0;
        for b in &sys.blocks {
            offsets.push(total);
            total += b.n_coords();
        }
        let id = |n: &Node| offsets[n.block] + n.coord;

        let mut uf = UnionFind::new(total);
        let mut adjacency: Vec<Vec<(usize, usize)>> = vec![Vec::new(); total];
        for (r, row) in sys.rows.iter().enumerate() {
            if let EqRow::Identify { left, right, .. } = row {
                let (u, v) = (id(left), id(right));
                if uf.union(u, v) {
                    adjacency[u].push((v, r));
                    adjacency[v].push((u, r));
                }
            }
        }
        let mut anchors_of: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (r, row) in sys.rows.iter().enumerate() {
            match row {
                EqRow::Pin { node, .. } | EqRow::Fix { node, .. } => {
                    let root = uf.find(id(node));
                    anchors_of.entry(root).or_default().push(r);
                }
                EqRow::Identify { .. } => {}
            }
        }

        // classes in order of their smallest node; constant coordinates excluded
        let mut class_of = vec![usize::MAX; total];
        let mut classes = Vec::new();
        let mut parent = vec![None; total];
        let mut n_free = 0;
        let is_constant = |u: usize| offsets.contains(&u);
        for u in 0..total {
            if is_constant(u) || class_of[u] != usize::MAX {
                continue;
            }
            let root_uf = uf.find(u);
            let anchors = anchors_of.remove(&root_uf).unwrap_or_default();
            let start = match anchors.first() {
                Some(&r) => match &sys.rows[r] {
                    EqRow::Pin { node, .. } | EqRow::Fix { node, .. } => id(node),
                    EqRow::Identify { .. } => unreachable!(),
                },
                None => u,
            };
            let cid = classes.len();
            let mut nodes = vec![start];
            class_of[start] = cid;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &(w, r) in &adjacency[v] {
                    if class_of[w] == usize::MAX {
                        class_of[w] = cid;
                        parent[w] = Some((v, r));
                        nodes.push(w);
                        queue.push_back(w);
                    }
                }
            }
            let kind = if anchors.is_empty() {
                n_free += 1;
                ClassKind::Free(n_free - 1)
            } else {
                ClassKind::Fixed
            };
            classes.push(ClassInfo { kind, nodes, anchors });
        }

        let columns: Vec<Column> = sys
            .blocks
            .par_iter()
            .enumerate()
            .flat_map_iter(|(bi, b)| {
                let layout = &b.layout;
                let class_of = &class_of;
                let classes = &classes;
                let off = offsets[bi];
                (0..layout.n_entries())
                    .map(move |entry| (entry, layout.split_entry(entry)))
                    .map(move |(entry, (x, a))| {
                        let mut constant = 0;
                        let mut free: BTreeMap<u32, i64> = BTreeMap::new();
                        let mut fixed: BTreeMap<u32, i64> = BTreeMap::new();
                        for (c, k) in layout.expand_entry(&x, &a) {
                            if c == 0 {
                                constant += k;
                                continue;
                            }
                            let cls = class_of[off + c];
                            match classes[cls].kind {
                                ClassKind::Free(f) => *free.entry(f as u32).or_insert(0) += k,
                                ClassKind::Fixed => *fixed.entry(cls as u32).or_insert(0) += k,
                            }
                        }
                        Column {
                            block: bi,
                            entry,
                            free: free.into_iter().filter(|&(_, k)| k != 0).collect(),
                            fixed: fixed.into_iter().filter(|&(_, k)| k != 0).collect(),
                            constant,
                        }
                    })
            })
            .collect();

        Self {
            offsets,
            class_of,
            classes,
            n_free,
            parent,
            columns,
        }
    }

    /// Value of an anchor row under the system's observed behavior.
    pub fn anchor_value<T: Scalar>(sys: &ConstraintSystem<T>, row: usize) -> T {
        match &sys.rows[row] {
            EqRow::Pin { p_coord, .. } => sys.p_value(*p_coord),
            EqRow::Fix { value, .. } => value.clone(),
            EqRow::Identify { .. } => unreachable!("identify rows are not anchors"),
        }
    }

    /// Values of fixed classes, plus the first pair of anchors in one class
    /// that disagree (beyond `tol` for floats).
    pub fn class_values<T: Scalar>(&self, sys: &ConstraintSystem<T>, tol: f64) -> (Vec<Option<T>>, Option<(usize, usize)>) {
        let mut conflict = None;
        let values = self
            .classes
            .iter()
            .map(|c| {
                let first = *c.anchors.first()?;
                let v = Self::anchor_value(sys, first);
                if conflict.is_none() {
                    for &r in &c.anchors[1..] {
                        if !Self::anchor_value(sys, r).approx_eq(&v, tol) {
                            conflict = Some((first, r));
                            break;
                        }
                    }
                }
                Some(v)
            })
            .collect();
        (values, conflict)
    }

    /// Constant part `c` of every column.
    pub fn costs<T: Scalar>(&self, values: &[Option<T>]) -> Vec<T> {
        self.columns
            .par_iter()
            .map(|col| {
                col.fixed.iter().fold(T::from_ratio(col.constant, 1), |acc, &(cls, k)| {
                    acc + values[cls as usize].clone().expect("fixed class has a value") * T::from_ratio(k, 1)
                })
            })
            .collect()
    }

    /// `g·z + c` for one column.
    pub fn entry_value<T: Scalar>(&self, col: usize, z: &[T], costs: &[T]) -> T {
        self.columns[col]
            .free
            .iter()
            .fold(costs[col].clone(), |acc, &(f, k)| acc + z[f as usize].clone() * T::from_ratio(k, 1))
    }

    /// Representative node of a class (its root).
    pub fn root(&self, class: usize) -> usize {
        self.classes[class].nodes[0]
    }

    /// Class index of the free variable `f`.
    pub fn free_class(&self, f: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.kind == ClassKind::Free(f))
            .expect("free index in range")
    }
}
