//! Finite permutation groups on tracked root indices.
//!
//! Generators may be full permutations ([`Perm`]) or partial injections
//! ([`PartialPerm`]) when continuation lost some roots at the window edge.
//! Orbit and block computations accept either through [`Action`]; closure
//! and the derived series need full permutations.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Default cap on enumerated group elements.
pub const DEFAULT_CLOSURE_CAP: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("degree mismatch: expected {expected}, found {found}")]
    DegreeMismatch { expected: usize, found: usize },
    #[error("images do not form an injective map on 0..{0}")]
    NotBijection(usize),
    #[error("action is not transitive")]
    NotTransitive,
    #[error("malformed cycle notation: {0}")]
    BadCycles(String),
}

/// Anything that maps point indices, possibly partially.
pub trait Action {
    fn degree(&self) -> usize;
    fn image(&self, i: usize) -> Option<usize>;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Perm {
    images: Vec<usize>,
}

impl Perm {
    pub fn new(images: Vec<usize>) -> Result<Perm, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &i in &images {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(PermError::NotBijection(n));
            }
        }
        Ok(Perm { images })
    }

    pub fn identity(n: usize) -> Perm {
        Perm {
            images: (0..n).collect(),
        }
    }

    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Perm, PermError> {
        let mut images: Vec<usize> = (0..n).collect();
        let mut touched = vec![false; n];
        for cycle in cycles {
            for (k, &a) in cycle.iter().enumerate() {
                if a >= n || std::mem::replace(&mut touched[a], true) {
                    return Err(PermError::BadCycles(format!("{cycle:?}")));
                }
                images[a] = cycle[(k + 1) % cycle.len()];
            }
        }
        Perm::new(images)
    }

    /// Parses cycle notation such as `(0 1)(2 3 4)`; `()` is the identity.
    pub fn parse_cycles(n: usize, text: &str) -> Result<Perm, PermError> {
        let bad = || PermError::BadCycles(text.to_string());
        let mut cycles: Vec<Vec<usize>> = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let body = rest.strip_prefix('(').ok_or_else(bad)?;
            let end = body.find(')').ok_or_else(bad)?;
            let cycle = body[..end]
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<usize>().map_err(|_| bad()))
                .collect::<Result<Vec<_>, _>>()?;
            if !cycle.is_empty() {
                cycles.push(cycle);
            }
            rest = body[end + 1..].trim_start();
        }
        let refs: Vec<&[usize]> = cycles.iter().map(Vec::as_slice).collect();
        Perm::from_cycles(n, &refs)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self` first, then `other`.
    pub fn then(&self, other: &Perm) -> Perm {
        Perm {
            images: self.images.iter().map(|&i| other.images[i]).collect(),
        }
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j] = i;
        }
        Perm { images: inv }
    }

    /// `a⁻¹ b⁻¹ a b`, applied left to right.
    pub fn commutator(a: &Perm, b: &Perm) -> Perm {
        a.inverse().then(&b.inverse()).then(a).then(b)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.degree()).filter(|&i| self.images[i] != i).collect()
    }

    /// Nontrivial cycles, each starting at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.degree()];
        let mut out = Vec::new();
        for start in 0..self.degree() {
            if seen[start] || self.images[start] == start {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut j = self.images[start];
            while j != start {
                seen[j] = true;
                cycle.push(j);
                j = self.images[j];
            }
            out.push(cycle);
        }
        out
    }

    /// Lengths of nontrivial cycles, longest first.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.cycles().iter().map(Vec::len).collect();
        t.sort_unstable_by(|a, b| b.cmp(a));
        t
    }
}

impl Action for Perm {
    fn degree(&self) -> usize {
        self.images.len()
    }

    fn image(&self, i: usize) -> Option<usize> {
        self.images.get(i).copied()
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let body: Vec<String> = c.iter().map(usize::to_string).collect();
            write!(f, "({})", body.join(" "))?;
        }
        Ok(())
    }
}

impl Serialize for Perm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Injective partial map on `0..n`; `None` marks an unknown image.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialPerm {
    images: Vec<Option<usize>>,
}

impl PartialPerm {
    pub fn new(images: Vec<Option<usize>>) -> Result<PartialPerm, PermError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for i in images.iter().flatten() {
            if *i >= n || std::mem::replace(&mut seen[*i], true) {
                return Err(PermError::NotBijection(n));
            }
        }
        Ok(PartialPerm { images })
    }

    pub fn images(&self) -> &[Option<usize>] {
        &self.images
    }

    /// Indices whose image is unknown.
    pub fn escaped(&self) -> Vec<usize> {
        (0..self.images.len()).filter(|&i| self.images[i].is_none()).collect()
    }

    pub fn is_total(&self) -> bool {
        self.images.iter().all(Option::is_some)
    }

    pub fn to_perm(&self) -> Option<Perm> {
        let images: Option<Vec<usize>> = self.images.iter().copied().collect();
        images.and_then(|v| Perm::new(v).ok())
    }

    /// Points moved by the known part of the map.
    pub fn moved(&self) -> Vec<usize> {
        (0..self.images.len())
            .filter(|&i| self.images[i].is_some_and(|j| j != i))
            .collect()
    }
}

impl From<Perm> for PartialPerm {
    fn from(p: Perm) -> Self {
        PartialPerm {
            images: p.images.into_iter().map(Some).collect(),
        }
    }
}

impl Action for PartialPerm {
    fn degree(&self) -> usize {
        self.images.len()
    }

    fn image(&self, i: usize) -> Option<usize> {
        self.images.get(i).copied().flatten()
    }
}

impl fmt::Display for PartialPerm {
    /// Cycles as `(a b c)`; open chains that run into an unknown image as
    /// `[a b c]` meaning `a -> b -> c -> ?`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.images.len();
        let mut has_pre = vec![false; n];
        for j in self.images.iter().flatten() {
            has_pre[*j] = true;
        }
        let mut seen = vec![false; n];
        let mut parts = Vec::new();
        // chains first: start at points without a preimage
        for start in 0..n {
            if has_pre[start] || seen[start] {
                continue;
            }
            let mut chain = vec![start];
            seen[start] = true;
            let mut cur = start;
            while let Some(next) = self.images[cur] {
                seen[next] = true;
                chain.push(next);
                cur = next;
            }
            if chain.len() > 1 || self.images[start].is_none() {
                let body: Vec<String> = chain.iter().map(usize::to_string).collect();
                parts.push(format!("[{}]", body.join(" ")));
            }
        }
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut cur = self.images[start].expect("cycle point");
            while cur != start {
                seen[cur] = true;
                cycle.push(cur);
                cur = self.images[cur].expect("cycle point");
            }
            if cycle.len() > 1 {
                let body: Vec<String> = cycle.iter().map(usize::to_string).collect();
                parts.push(format!("({})", body.join(" ")));
            }
        }
        if parts.is_empty() {
            write!(f, "()")
        } else {
            write!(f, "{}", parts.concat())
        }
    }
}

impl Serialize for PartialPerm {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

fn check_degree<A: Action>(degree: usize, gens: &[A]) -> Result<(), PermError> {
    match gens.iter().find(|g| g.degree() != degree) {
        Some(g) => Err(PermError::DegreeMismatch {
            expected: degree,
            found: g.degree(),
        }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureSize {
    Exact(usize),
    /// Enumeration stopped after this many elements.
    Capped(usize),
}

impl ClosureSize {
    pub fn exact(&self) -> Option<usize> {
        match self {
            ClosureSize::Exact(n) => Some(*n),
            ClosureSize::Capped(_) => None,
        }
    }
}

impl Serialize for ClosureSize {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ClosureSize::Exact(n) => s.serialize_u64(*n as u64),
            ClosureSize::Capped(n) => s.collect_str(&format_args!("capped>{n}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    /// All elements in sorted order, when enumeration finished.
    pub elements: Option<Vec<Perm>>,
    pub size: ClosureSize,
}

/// Breadth-first product closure of `gens` on `degree` points.
pub fn closure(degree: usize, gens: &[Perm], cap: usize) -> Result<Closure, PermError> {
    check_degree(degree, gens)?;
    let id = Perm::identity(degree);
    let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    while let Some(e) = queue.pop_front() {
        for g in gens {
            let p = e.then(g);
            if !seen.contains(&p) {
                if seen.len() >= cap {
                    return Ok(Closure {
                        elements: None,
                        size: ClosureSize::Capped(seen.len()),
                    });
                }
                seen.insert(p.clone());
                queue.push_back(p);
            }
        }
    }
    let mut elements: Vec<Perm> = seen.into_iter().collect();
    elements.sort();
    Ok(Closure {
        size: ClosureSize::Exact(elements.len()),
        elements: Some(elements),
    })
}

fn uf_find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

fn uf_union(parent: &mut [usize], a: usize, b: usize) -> bool {
    let (ra, rb) = (uf_find(parent, a), uf_find(parent, b));
    if ra == rb {
        return false;
    }
    parent[ra.max(rb)] = ra.min(rb);
    true
}

fn classes(parent: &mut [usize]) -> Vec<Vec<usize>> {
    let n = parent.len();
    let mut by_root: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = uf_find(parent, i);
        by_root[r].push(i);
    }
    // roots are class minima, so this is already sorted by first element
    by_root.into_iter().filter(|c| !c.is_empty()).collect()
}

/// A partition of `0..n` into sorted classes ordered by smallest element.
pub type Partition = Vec<Vec<usize>>;

/// Connected components of the union of the generator graphs.
pub fn orbits<A: Action>(degree: usize, gens: &[A]) -> Result<Partition, PermError> {
    check_degree(degree, gens)?;
    let mut parent: Vec<usize> = (0..degree).collect();
    for g in gens {
        for i in 0..degree {
            if let Some(j) = g.image(i) {
                uf_union(&mut parent, i, j);
            }
        }
    }
    Ok(classes(&mut parent))
}

pub fn is_transitive<A: Action>(degree: usize, gens: &[A]) -> Result<bool, PermError> {
    Ok(orbits(degree, gens)?.len() <= 1)
}

/// Finest block system in which `a` and `b` share a block.
fn minimal_block_system<A: Action>(degree: usize, gens: &[A], a: usize, b: usize) -> Partition {
    let mut parent: Vec<usize> = (0..degree).collect();
    uf_union(&mut parent, a, b);
    let mut pending = vec![(a, b)];
    while let Some((x, y)) = pending.pop() {
        for g in gens {
            if let (Some(gx), Some(gy)) = (g.image(x), g.image(y)) {
                if uf_union(&mut parent, gx, gy) {
                    pending.push((gx, gy));
                }
            }
        }
    }
    classes(&mut parent)
}

/// The trivial systems plus, for every `β != 0`, the minimal block system
/// joining `0` and `β` when it is nontrivial. Deduplicated, ordered as
/// singletons, nontrivial systems by block size, whole set.
pub fn block_systems<A: Action>(degree: usize, gens: &[A]) -> Result<Vec<Partition>, PermError> {
    if !is_transitive(degree, gens)? {
        return Err(PermError::NotTransitive);
    }
    let mut nontrivial: Vec<Partition> = Vec::new();
    for beta in 1..degree {
        let sys = minimal_block_system(degree, gens, 0, beta);
        if sys.len() > 1 && !nontrivial.contains(&sys) {
            nontrivial.push(sys);
        }
    }
    nontrivial.sort_by(|a, b| a[0].len().cmp(&b[0].len()).then_with(|| a.cmp(b)));
    let singletons: Partition = (0..degree).map(|i| vec![i]).collect();
    let whole: Partition = vec![(0..degree).collect()];
    let mut out = vec![singletons];
    out.extend(nontrivial);
    if degree > 1 {
        out.push(whole);
    }
    Ok(out)
}

pub fn is_trivial_system(p: &Partition, degree: usize) -> bool {
    p.len() == degree || p.len() <= 1
}

/// Literal check that every generator maps each block onto itself or off it.
pub fn is_block_system<A: Action>(partition: &Partition, gens: &[A]) -> bool {
    partition.iter().all(|block| {
        let set: HashSet<usize> = block.iter().copied().collect();
        gens.iter().all(|g| {
            let imgs: Vec<usize> = block.iter().filter_map(|&i| g.image(i)).collect();
            let inside = imgs.iter().filter(|j| set.contains(j)).count();
            inside == 0 || inside == imgs.len()
        })
    })
}

pub fn is_primitive<A: Action>(degree: usize, gens: &[A]) -> Result<bool, PermError> {
    Ok(block_systems(degree, gens)?
        .iter()
        .all(|p| is_trivial_system(p, degree)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedSeries {
    /// `None` when the cap stopped the computation.
    pub solvable: Option<bool>,
    pub derived_length: Option<usize>,
    /// Orders of `G, G', G'', ...` as far as they were computed.
    pub sizes: Vec<ClosureSize>,
}

fn contains(closure: &Closure, p: &Perm) -> bool {
    closure
        .elements
        .as_ref()
        .is_some_and(|els| els.binary_search(p).is_ok())
}

/// Derived series `G ⊇ [G,G] ⊇ ...` until it reaches the identity
/// (solvable) or stabilizes at a nontrivial perfect subgroup (not solvable).
pub fn derived_series(degree: usize, gens: &[Perm], cap: usize) -> Result<DerivedSeries, PermError> {
    check_degree(degree, gens)?;
    let unknown = |sizes| DerivedSeries {
        solvable: None,
        derived_length: None,
        sizes,
    };
    let mut current: Vec<Perm> = gens.iter().filter(|g| !g.is_identity()).cloned().collect();
    let top = closure(degree, &current, cap)?;
    let mut sizes = vec![top.size];
    let Some(mut order) = top.size.exact() else {
        return Ok(unknown(sizes));
    };
    loop {
        if order == 1 {
            return Ok(DerivedSeries {
                solvable: Some(true),
                derived_length: Some(sizes.len() - 1),
                sizes,
            });
        }
        // normal closure of generator commutators under conjugation by `current`
        let mut next: Vec<Perm> = Vec::new();
        for (i, a) in current.iter().enumerate() {
            for b in &current[i + 1..] {
                let c = Perm::commutator(a, b);
                if !c.is_identity() && !next.contains(&c) {
                    next.push(c);
                }
            }
        }
        let mut sub = closure(degree, &next, cap)?;
        'grow: loop {
            if sub.size.exact().is_none() {
                sizes.push(sub.size);
                return Ok(unknown(sizes));
            }
            for n in next.clone() {
                for g in &current {
                    let conj = g.inverse().then(&n).then(g);
                    if !contains(&sub, &conj) {
                        next.push(conj);
                        sub = closure(degree, &next, cap)?;
                        continue 'grow;
                    }
                }
            }
            break;
        }
        let sub_order = sub.size.exact().expect("checked above");
        sizes.push(sub.size);
        if sub_order == order {
            return Ok(DerivedSeries {
                solvable: Some(false),
                derived_length: None,
                sizes,
            });
        }
        order = sub_order;
        current = next;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FiniteSupport {
    pub has_finite_support_gen: bool,
    /// Smallest support among generators fully witnessed in the window.
    pub min_support: Option<usize>,
}

/// A generator counts when it is not the identity and none of its images
/// escaped, so its whole action is visible.
pub fn finite_support_analysis(gens: &[PartialPerm]) -> FiniteSupport {
    let min_support = gens
        .iter()
        .filter(|g| g.is_total())
        .map(|g| g.moved().len())
        .filter(|&s| s > 0)
        .min();
    FiniteSupport {
        has_finite_support_gen: min_support.is_some(),
        min_support,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupReport {
    pub degree: usize,
    pub generators: Vec<PartialPerm>,
    /// Indices of generators with escaped images; they are left out of the
    /// closure and the derived series.
    pub escaped_generators: Vec<usize>,
    pub closure_size: ClosureSize,
    pub orbits: Partition,
    pub transitive: bool,
    /// Present only for transitive actions.
    pub blocks: Option<Vec<Partition>>,
    pub primitive: Option<bool>,
    pub solvable: Option<bool>,
    pub derived_length: Option<usize>,
    pub derived_sizes: Vec<ClosureSize>,
    pub has_finite_support_gen: bool,
    pub min_support: Option<usize>,
}

pub fn group_report(degree: usize, gens: &[PartialPerm], cap: usize) -> Result<GroupReport, PermError> {
    check_degree(degree, gens)?;
    let escaped_generators: Vec<usize> = (0..gens.len()).filter(|&i| !gens[i].is_total()).collect();
    let clean: Vec<Perm> = gens.iter().filter_map(PartialPerm::to_perm).collect();
    let cl = closure(degree, &clean, cap)?;
    let orbits = orbits(degree, gens)?;
    let transitive = orbits.len() <= 1;
    let blocks = if transitive {
        Some(block_systems(degree, gens)?)
    } else {
        None
    };
    let primitive = blocks
        .as_ref()
        .map(|bs| bs.iter().all(|p| is_trivial_system(p, degree)));
    let ds = derived_series(degree, &clean, cap)?;
    let fs = finite_support_analysis(gens);
    Ok(GroupReport {
        degree,
        generators: gens.to_vec(),
        escaped_generators,
        closure_size: cl.size,
        orbits,
        transitive,
        blocks,
        primitive,
        solvable: ds.solvable,
        derived_length: ds.derived_length,
        derived_sizes: ds.sizes,
        has_finite_support_gen: fs.has_finite_support_gen,
        min_support: fs.min_support,
    })
}
