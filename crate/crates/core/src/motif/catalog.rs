//! The catalog of 2- and 3-node ego motifs.
//!
//! Every shape is rooted at the ego `E`; neighbour roles are `i` and `j`.
//! Edges must touch the ego, so a shape is fully described by the
//! direction state of each ego–neighbour pair.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::etn::PairState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Role {
    #[serde(rename = "E")]
    Ego,
    #[serde(rename = "i")]
    I,
    #[serde(rename = "j")]
    J,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Ego => "E",
            Role::I => "i",
            Role::J => "j",
        })
    }
}

/// Direction states of the neighbour roles, in role order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ShapePattern {
    Dyad(PairState),
    Triad(PairState, PairState),
}

impl ShapePattern {
    /// Representative of the isomorphism class (neighbour roles may swap).
    pub fn canonical(self) -> ShapePattern {
        match self {
            ShapePattern::Triad(a, b) if b < a => ShapePattern::Triad(b, a),
            p => p,
        }
    }

    pub fn automorphisms(self) -> u64 {
        match self {
            ShapePattern::Triad(a, b) if a == b => 2,
            _ => 1,
        }
    }

    pub fn is_symmetric(self) -> bool {
        self.automorphisms() == 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifShape {
    pub id: String,
    pub nodes: Vec<Role>,
    pub edges: Vec<(Role, Role)>,
}

impl MotifShape {
    fn from_pattern(id: String, pattern: ShapePattern) -> Self {
        let role_edges = |role: Role, s: PairState| {
            let mut v = Vec::new();
            if s.has_out() {
                v.push((Role::Ego, role));
            }
            if s.has_in() {
                v.push((role, Role::Ego));
            }
            v
        };
        match pattern {
            ShapePattern::Dyad(s) => MotifShape {
                id,
                nodes: vec![Role::Ego, Role::I],
                edges: role_edges(Role::I, s),
            },
            ShapePattern::Triad(a, b) => {
                let mut edges = role_edges(Role::I, a);
                edges.extend(role_edges(Role::J, b));
                MotifShape {
                    id,
                    nodes: vec![Role::Ego, Role::I, Role::J],
                    edges,
                }
            }
        }
    }

    /// Validates the shape and derives its pattern.
    pub fn pattern(&self) -> Result<ShapePattern> {
        let bad = |m: String| Err(Error::invalid("motif catalog", format!("{}: {m}", self.id)));
        let roles: BTreeSet<Role> = self.nodes.iter().copied().collect();
        if roles.len() != self.nodes.len() {
            return bad("duplicate node roles".into());
        }
        let three = match roles.iter().copied().collect::<Vec<_>>().as_slice() {
            [Role::Ego, Role::I] => false,
            [Role::Ego, Role::I, Role::J] => true,
            _ => return bad("nodes must be [E, i] or [E, i, j]".into()),
        };
        let mut flags = [(false, false); 2];
        let mut seen = BTreeSet::new();
        for &(s, t) in &self.edges {
            if !roles.contains(&s) || !roles.contains(&t) {
                return bad(format!("edge ({s},{t}) uses an undeclared role"));
            }
            if s == t {
                return bad("self-loop".into());
            }
            if s != Role::Ego && t != Role::Ego {
                return bad(format!("edge ({s},{t}) does not touch the ego"));
            }
            if !seen.insert((s, t)) {
                return bad(format!("duplicate edge ({s},{t})"));
            }
            let slot = |r: Role| if r == Role::I { 0 } else { 1 };
            if s == Role::Ego {
                flags[slot(t)].0 = true;
            } else {
                flags[slot(s)].1 = true;
            }
        }
        let state = |k: usize| PairState::from_flags(flags[k].0, flags[k].1);
        match (three, state(0), state(1)) {
            (false, Some(a), _) => Ok(ShapePattern::Dyad(a)),
            (true, Some(a), Some(b)) => Ok(ShapePattern::Triad(a, b)),
            _ => bad("every neighbour role needs an edge to the ego".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub shape: MotifShape,
    pub pattern: ShapePattern,
}

/// Ordered, isomorphism-free list of ego motif shapes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifCatalog {
    entries: Vec<CatalogEntry>,
}

impl MotifCatalog {
    pub fn from_shapes(shapes: Vec<MotifShape>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut classes = BTreeSet::new();
        let mut entries = Vec::with_capacity(shapes.len());
        for shape in shapes {
            if shape.id.is_empty() || shape.id.contains(['(', ')', ',', '|']) {
                return Err(Error::invalid(
                    "motif catalog",
                    format!("bad motif id {:?}", shape.id),
                ));
            }
            if !ids.insert(shape.id.clone()) {
                return Err(Error::invalid(
                    "motif catalog",
                    format!("duplicate motif id {}", shape.id),
                ));
            }
            let pattern = shape.pattern()?;
            if !classes.insert(pattern.canonical()) {
                return Err(Error::invalid(
                    "motif catalog",
                    format!("{} is isomorphic to an earlier entry", shape.id),
                ));
            }
            entries.push(CatalogEntry { shape, pattern });
        }
        Ok(MotifCatalog { entries })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Self::from_shapes(serde_json::from_slice(bytes)?)
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let shapes: Vec<&MotifShape> = self.entries.iter().map(|e| &e.shape).collect();
        Ok(serde_json::to_vec_pretty(&shapes)?)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&CatalogEntry> {
        self.entries.iter().find(|e| e.shape.id == id)
    }

    pub fn find_pattern(&self, pattern: ShapePattern) -> Option<&CatalogEntry> {
        let c = pattern.canonical();
        self.entries.iter().find(|e| e.pattern.canonical() == c)
    }
}

/// Enumerates every ego-rooted shape on `{E, i}` and `{E, i, j}` whose edges
/// all touch the ego, one per isomorphism class. Each ego–neighbour pair is
/// out, in or reciprocal, giving 3 dyads and 6 triads.
pub fn enumerate_catalog() -> MotifCatalog {
    let mut patterns: Vec<ShapePattern> = PairState::ALL.map(ShapePattern::Dyad).to_vec();
    let mut seen = BTreeSet::new();
    for a in PairState::ALL {
        for b in PairState::ALL {
            let p = ShapePattern::Triad(a, b).canonical();
            if seen.insert(p) {
                patterns.push(p);
            }
        }
    }
    let shapes = patterns
        .into_iter()
        .enumerate()
        .map(|(k, p)| MotifShape::from_pattern(format!("m{}", k + 1), p))
        .collect();
    MotifCatalog::from_shapes(shapes).expect("enumerated shapes are distinct")
}
