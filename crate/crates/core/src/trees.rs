//! Rooted trees on the vertex set GF(p^s) with root 0.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldRef, FieldSpec, GfElem};

pub const DEFAULT_ENUM_CAP: u128 = 1_000_000;

#[derive(Clone, Debug)]
pub struct RootedTree {
    field: FieldRef,
    /// `parent[v]` for every vertex index; the root's slot holds 0.
    parent: Vec<GfElem>,
    /// Vertex count on the path from the root, root included.
    depth: Vec<u32>,
    height: u32,
}

impl PartialEq for RootedTree {
    fn eq(&self, other: &Self) -> bool {
        *self.field == *other.field && self.parent == other.parent
    }
}

impl Eq for RootedTree {}

impl RootedTree {
    /// Validates a parent map given as `(child, parent)` pairs.
    pub fn from_pairs(field: FieldRef, pairs: &[(GfElem, GfElem)]) -> Result<RootedTree> {
        let q = field.order() as usize;
        let mut parent: Vec<Option<GfElem>> = vec![None; q];
        for &(v, u) in pairs {
            for x in [v, u] {
                if !field.contains(x) {
                    return Err(Error::ForeignElement(x.index()));
                }
            }
            if v.is_zero() {
                return Err(Error::InvalidTree("the root has no parent".into()));
            }
            if parent[v.index() as usize].replace(u).is_some() {
                return Err(Error::InvalidTree(format!(
                    "vertex {} has two parents",
                    field.format(v)
                )));
            }
        }
        let mut full = vec![GfElem::ZERO; q];
        for v in 1..q {
            match parent[v] {
                Some(u) => full[v] = u,
                None => {
                    return Err(Error::InvalidTree(format!(
                        "vertex {} has no parent",
                        field.format(field.from_index(v as u32)?)
                    )))
                }
            }
        }
        RootedTree::from_parent_vec(field, full)
    }

    /// `parent[v]` indexed by vertex index; entry 0 is ignored.
    pub fn from_parent_vec(field: FieldRef, mut parent: Vec<GfElem>) -> Result<RootedTree> {
        let q = field.order() as usize;
        if parent.len() != q {
            return Err(Error::InvalidTree(format!(
                "expected {} parent entries, got {}",
                q,
                parent.len()
            )));
        }
        if let Some(u) = parent.iter().find(|u| !field.contains(**u)) {
            return Err(Error::ForeignElement(u.index()));
        }
        parent[0] = GfElem::ZERO;
        let mut depth = vec![0u32; q];
        depth[0] = 1;
        let mut stack = Vec::new();
        let mut walk = vec![0usize; q];
        for start in 1..q {
            let mut v = start;
            while depth[v] == 0 {
                // a vertex already on the current walk means a cycle
                if walk[v] == start {
                    return Err(Error::Cycle(field.format(field.from_index(v as u32)?)));
                }
                walk[v] = start;
                stack.push(v);
                v = parent[v].index() as usize;
            }
            let mut d = depth[v];
            while let Some(w) = stack.pop() {
                d += 1;
                depth[w] = d;
            }
        }
        let height = depth.iter().copied().max().unwrap_or(1);
        Ok(RootedTree {
            field,
            parent,
            depth,
            height,
        })
    }

    /// Every nonzero vertex attached to the root.
    pub fn star(field: FieldRef) -> RootedTree {
        let q = field.order() as usize;
        RootedTree::from_parent_vec(field, vec![GfElem::ZERO; q]).expect("star is a tree")
    }

    pub fn field(&self) -> &FieldRef {
        &self.field
    }

    pub fn parent(&self, v: GfElem) -> Option<GfElem> {
        (!v.is_zero()).then(|| self.parent[v.index() as usize])
    }

    /// Parent slots indexed by vertex index, root slot 0.
    pub fn parents(&self) -> &[GfElem] {
        &self.parent
    }

    pub fn is_edge(&self, child: GfElem, parent: GfElem) -> bool {
        self.field.contains(child) && !child.is_zero() && self.parent[child.index() as usize] == parent
    }

    /// Vertex count on the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        self.height
    }

    /// Vertex count on the path from the root to `v`.
    pub fn depth(&self, v: GfElem) -> u32 {
        self.depth[v.index() as usize]
    }

    pub fn children(&self, u: GfElem) -> Vec<GfElem> {
        self.field
            .elements()
            .skip(1)
            .filter(|&v| self.parent[v.index() as usize] == u)
            .collect()
    }

    pub fn first_level(&self) -> Vec<GfElem> {
        self.children(GfElem::ZERO)
    }

    /// `(0, .., parent(v), v)`.
    pub fn path(&self, v: GfElem) -> Result<Vec<GfElem>> {
        if !self.field.contains(v) {
            return Err(Error::ForeignElement(v.index()));
        }
        if v.is_zero() {
            return Err(Error::InvalidTree("path requested for the root".into()));
        }
        let mut path = vec![v];
        let mut w = v;
        while !w.is_zero() {
            w = self.parent[w.index() as usize];
            path.push(w);
        }
        path.reverse();
        Ok(path)
    }

    pub fn prufer_encode(&self) -> Vec<GfElem> {
        let q = self.parent.len();
        if q <= 2 {
            return Vec::new();
        }
        let mut degree = vec![0usize; q];
        for v in 1..q {
            degree[v] += 1;
            degree[self.parent[v].index() as usize] += 1;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); q];
        for v in 1..q {
            let u = self.parent[v].index() as usize;
            adj[v].push(u);
            adj[u].push(v);
        }
        let mut removed = vec![false; q];
        let mut seq = Vec::with_capacity(q - 2);
        for _ in 0..q - 2 {
            let leaf = (0..q).find(|&v| !removed[v] && degree[v] == 1).expect("tree has a leaf");
            let nb = adj[leaf]
                .iter()
                .copied()
                .find(|&u| !removed[u])
                .expect("leaf has a neighbour");
            removed[leaf] = true;
            degree[nb] -= 1;
            seq.push(GfElem::from_raw(nb as u32));
        }
        seq
    }

    pub fn prufer_decode(field: FieldRef, seq: &[GfElem]) -> Result<RootedTree> {
        let q = field.order() as usize;
        if seq.len() + 2 != q {
            return Err(Error::PruferLength {
                expected: q - 2,
                got: seq.len(),
            });
        }
        if let Some(a) = seq.iter().find(|a| !field.contains(**a)) {
            return Err(Error::ForeignElement(a.index()));
        }
        let mut degree = vec![1usize; q];
        for a in seq {
            degree[a.index() as usize] += 1;
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); q];
        for a in seq {
            let a = a.index() as usize;
            let leaf = (0..q).find(|&v| degree[v] == 1).expect("a leaf remains");
            adj[leaf].push(a);
            adj[a].push(leaf);
            degree[leaf] = 0;
            degree[a] -= 1;
        }
        let last: Vec<usize> = (0..q).filter(|&v| degree[v] == 1).collect();
        adj[last[0]].push(last[1]);
        adj[last[1]].push(last[0]);

        let mut parent = vec![GfElem::ZERO; q];
        let mut seen = vec![false; q];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = GfElem::from_raw(u as u32);
                    queue.push_back(v);
                }
            }
        }
        RootedTree::from_parent_vec(field, parent)
    }

    /// Decode of a uniformly random Prufer sequence.
    pub fn random(field: FieldRef, seed: u64) -> RootedTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RootedTree::random_with(field, &mut rng)
    }

    pub fn random_with<R: Rng>(field: FieldRef, rng: &mut R) -> RootedTree {
        let q = field.order();
        let seq: Vec<GfElem> = (0..q.saturating_sub(2))
            .map(|_| GfElem::from_raw(rng.gen_range(0..q)))
            .collect();
        RootedTree::prufer_decode(field, &seq).expect("random sequence has the right length")
    }

    pub fn to_json(&self) -> TreeJson {
        let parent = self
            .field
            .elements()
            .skip(1)
            .map(|v| {
                (
                    self.field.format(v),
                    self.field.format(self.parent[v.index() as usize]),
                )
            })
            .collect();
        TreeJson {
            field: self.field.spec(),
            parent,
        }
    }

    pub fn from_json(json: &TreeJson) -> Result<RootedTree> {
        let field = Field::from_spec(&json.field)?;
        let pairs = json
            .parent
            .iter()
            .map(|(v, u)| Ok((field.parse(v)?, field.parse(u)?)))
            .collect::<Result<Vec<_>>>()?;
        RootedTree::from_pairs(field, &pairs)
    }
}

/// `{"field": {..}, "parent": {"1,1": "0,0", ..}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub field: FieldSpec,
    pub parent: BTreeMap<String, String>,
}

/// `q^(q-2)`, or `None` on overflow.
pub fn tree_count(q: u32) -> Option<u128> {
    if q < 2 {
        return Some(1);
    }
    (q as u128).checked_pow(q - 2)
}

/// The tree whose Prufer sequence has base-`q` index `idx` (first entry
/// least significant).
pub fn tree_from_index(field: FieldRef, mut idx: u64) -> Result<RootedTree> {
    let q = field.order() as u64;
    let len = field.order().saturating_sub(2) as usize;
    let seq: Vec<GfElem> = (0..len)
        .map(|_| {
            let a = GfElem::from_raw((idx % q) as u32);
            idx /= q;
            a
        })
        .collect();
    if idx != 0 {
        return Err(Error::InvalidTree("tree index out of range".into()));
    }
    RootedTree::prufer_decode(field, &seq)
}

/// All trees on the field, in Prufer-sequence order.
pub fn enumerate(field: FieldRef, cap: u128) -> Result<impl Iterator<Item = RootedTree>> {
    let q = field.order();
    let count = tree_count(q).unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }
    Ok((0..count as u64).map(move |idx| tree_from_index(field.clone(), idx).expect("index below count")))
}
