//! Cusped Cayley graph backend.
//!
//! Vertices are Cayley vertices `(g, 0)` plus combinatorial horoball vertices
//! `(g, k, d)` for each parabolic class `k` and depth `1 <= d <= D`. At depth
//! `d`, horizontal edges join `g` and `g a^j` for `0 < |j| <= 2^d`; vertical
//! edges join consecutive depths. Distances are breadth-first.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::boundary::TransitionParams;
use crate::enumeration::{HoroballEntry, OrbitBall, OrbitEntry};
use crate::error::{Error, Result};
use crate::models::spec::CuspedSpec;
use crate::models::word::{Alphabet, Word};
use crate::space::{triangles_delta, Backend, ModelConstants, PathSample, Space};

/// A vertex of the cusped graph. Cayley vertices have `depth == 0` and `class == 0`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Vertex {
    pub elem: Word,
    pub class: u8,
    pub depth: u8,
}

impl Vertex {
    pub fn cayley(elem: Word) -> Self {
        Vertex { elem, class: 0, depth: 0 }
    }
}

/// The combinatorial horoball over the coset `coset · ⟨a_class⟩`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct GraphHoroball {
    pub class: u8,
    pub coset: Word,
    label: String,
}

impl fmt::Display for GraphHoroball {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// A group element with the alphabet needed to print it.
#[derive(Clone, Debug)]
pub struct Element {
    pub word: Word,
    label: std::sync::Arc<Alphabet>,
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        self.word == other.word
    }
}
impl Eq for Element {}
impl std::hash::Hash for Element {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.word.hash(state)
    }
}
impl PartialOrd for Element {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Element {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.word.cmp(&other.word)
    }
}
impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label.display(&self.word))
    }
}

/// A far vertex standing in for a boundary point.
#[derive(Clone, Debug, PartialEq)]
pub struct Proxy {
    pub vertex: Vertex,
    pub distance: f64,
    label: String,
}

impl fmt::Display for Proxy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

/// Breadth-first search result with the canonical parent rule: each vertex's
/// parent is its smallest neighbor one step closer to the source.
#[derive(Clone)]
pub struct BfsTree {
    pub verts: IndexSet<Vertex>,
    pub dist: Vec<u16>,
    pub parent: Vec<u32>,
}

impl BfsTree {
    pub fn distance_to(&self, v: &Vertex) -> Option<u16> {
        self.verts.get_index_of(v).map(|i| self.dist[i])
    }

    /// Path from the source to vertex index `i`.
    pub fn path_to(&self, mut i: usize) -> Vec<Vertex> {
        let mut out = vec![self.verts[i].clone()];
        while self.dist[i] > 0 {
            i = self.parent[i] as usize;
            out.push(self.verts[i].clone());
        }
        out.reverse();
        out
    }
}

pub struct CuspedModel {
    alphabet: std::sync::Arc<Alphabet>,
    /// Generator index of each parabolic class.
    parabolics: Vec<u8>,
    max_depth: u8,
    truncation: f64,
    basepoint: Vertex,
    constants: ModelConstants,
    tree: OnceLock<BfsTree>,
    ball: OnceLock<OrbitBall<Element>>,
    horoballs: OnceLock<Vec<HoroballEntry<GraphHoroball>>>,
    near_cache: Mutex<HashMap<Vertex, Vec<GraphHoroball>>>,
}

impl fmt::Debug for CuspedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CuspedModel")
            .field("generators", &self.alphabet)
            .field("parabolics", &self.parabolics)
            .field("max_depth", &self.max_depth)
            .field("truncation", &self.truncation)
            .finish()
    }
}

impl CuspedModel {
    pub fn build(spec: &CuspedSpec) -> Result<Self> {
        let alphabet = Alphabet::new(&spec.generators)?;
        let mut parabolics = Vec::new();
        for class in &spec.parabolics {
            let [name] = class.as_slice() else {
                return Err(Error::Unsupported(
                    "cusped-Cayley parabolic classes must be cyclic: one generator symbol each".into(),
                ));
            };
            let g = alphabet.index(name).ok_or_else(|| Error::Spec(format!("unknown parabolic generator `{name}`")))?;
            if alphabet.order(g) != 0 {
                return Err(Error::Spec(format!("parabolic generator `{name}` must have infinite order")));
            }
            if parabolics.contains(&g) {
                return Err(Error::Spec(format!("parabolic generator `{name}` listed twice")));
            }
            parabolics.push(g);
        }
        if spec.truncation_radius < 1.0 {
            return Err(Error::Spec("truncation_radius must be at least 1".into()));
        }
        if spec.truncation_radius > 60.0 {
            return Err(Error::Unsupported("graph truncation beyond radius 60".into()));
        }
        let basepoint = Vertex::cayley(alphabet.parse(&spec.basepoint)?);
        let mut model = CuspedModel {
            alphabet: std::sync::Arc::new(alphabet),
            parabolics,
            max_depth: if spec.parabolics.is_empty() { 0 } else { spec.max_depth as u8 },
            truncation: spec.truncation_radius.floor(),
            basepoint,
            constants: ModelConstants { delta_hat: 0.0, triangle_sample: 0, quasiconvexity_eps: 0.0, cocompactness_m: 0.5 },
            tree: OnceLock::new(),
            ball: OnceLock::new(),
            horoballs: OnceLock::new(),
            near_cache: Mutex::new(HashMap::new()),
        };
        model.constants = model.sample_constants()?;
        Ok(model)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn max_depth(&self) -> u8 {
        self.max_depth
    }

    pub fn element(&self, word: Word) -> Element {
        Element { word, label: self.alphabet.clone() }
    }

    pub fn parse_element(&self, text: &str) -> Result<Element> {
        Ok(self.element(self.alphabet.parse(text)?))
    }

    pub fn parabolic_generator(&self, class: usize) -> u8 {
        self.parabolics[class]
    }

    /// Neighbors in increasing vertex order.
    pub fn neighbors(&self, v: &Vertex) -> Vec<Vertex> {
        let a = &*self.alphabet;
        let mut out = Vec::new();
        if v.depth == 0 {
            for (g, s) in a.letters() {
                let mut w = v.elem.clone();
                a.push(&mut w, g, s as i64);
                out.push(Vertex::cayley(w));
            }
            if self.max_depth >= 1 {
                for k in 0..self.parabolics.len() {
                    out.push(Vertex { elem: v.elem.clone(), class: k as u8, depth: 1 });
                }
            }
        } else {
            let gen = self.parabolics[v.class as usize];
            let span = 1i64 << v.depth;
            for j in (-span..=span).filter(|&j| j != 0) {
                let mut w = v.elem.clone();
                a.push(&mut w, gen, j);
                out.push(Vertex { elem: w, class: v.class, depth: v.depth });
            }
            if v.depth < self.max_depth {
                out.push(Vertex { elem: v.elem.clone(), class: v.class, depth: v.depth + 1 });
            }
            if v.depth == 1 {
                out.push(Vertex::cayley(v.elem.clone()));
            } else {
                out.push(Vertex { elem: v.elem.clone(), class: v.class, depth: v.depth - 1 });
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Breadth-first search from `source` out to `radius`, stopping early once
    /// the layer containing `target` is complete.
    pub fn bfs(&self, source: &Vertex, radius: u16, target: Option<&Vertex>) -> BfsTree {
        let mut verts = IndexSet::new();
        let mut dist = Vec::new();
        let mut parent: Vec<u32> = Vec::new();
        verts.insert(source.clone());
        dist.push(0u16);
        parent.push(0);
        let mut queue = VecDeque::from([0usize]);
        let mut stop_at: Option<u16> = (target == Some(source)).then_some(0);
        while let Some(i) = queue.pop_front() {
            let d = dist[i];
            if d >= radius || stop_at.is_some_and(|s| d >= s) {
                continue;
            }
            let v = verts[i].clone();
            for w in self.neighbors(&v) {
                match verts.get_index_of(&w) {
                    Some(j) => {
                        if dist[j] == d + 1 && verts[i] < verts[parent[j] as usize] {
                            parent[j] = i as u32;
                        }
                    }
                    None => {
                        if target == Some(&w) {
                            stop_at = Some(d + 1);
                        }
                        let (j, _) = verts.insert_full(w);
                        dist.push(d + 1);
                        parent.push(i as u32);
                        queue.push_back(j);
                    }
                }
            }
        }
        BfsTree { verts, dist, parent }
    }

    pub fn tree(&self) -> &BfsTree {
        self.tree.get_or_init(|| self.bfs(&self.basepoint, self.truncation as u16, None))
    }

    /// Combinatorial horoballs containing a vertex.
    pub fn horoballs_of(&self, v: &Vertex) -> Vec<GraphHoroball> {
        let classes: Vec<u8> = if v.depth == 0 {
            (0..self.parabolics.len() as u8).collect()
        } else {
            vec![v.class]
        };
        classes.into_iter().map(|k| self.horoball(k, &v.elem)).collect()
    }

    fn horoball(&self, class: u8, elem: &Word) -> GraphHoroball {
        let gen = self.parabolics[class as usize];
        let (coset, _) = self.alphabet.coset_rep(elem, gen);
        let label = format!("{}<{}>", self.alphabet.display(&coset), self.alphabet.name(gen));
        GraphHoroball { class, coset, label }
    }

    fn belongs(&self, v: &Vertex, u: &GraphHoroball) -> bool {
        (v.depth == 0 || v.class == u.class) && self.alphabet.coset_rep(&v.elem, self.parabolics[u.class as usize]).0 == u.coset
    }

    fn tree_from(&self, x: &Vertex, radius: u16, target: Option<&Vertex>) -> std::borrow::Cow<'_, BfsTree> {
        if *x == self.basepoint && radius <= self.truncation as u16 {
            std::borrow::Cow::Borrowed(self.tree())
        } else {
            std::borrow::Cow::Owned(self.bfs(x, radius, target))
        }
    }

    /// Distance from `source` to the nearest vertex of `targets`, searching
    /// out to `limit`.
    fn distance_to_set(&self, source: &Vertex, targets: &HashSet<&Vertex>, limit: u16) -> Option<u16> {
        if targets.contains(source) {
            return Some(0);
        }
        let mut seen = HashSet::from([source.clone()]);
        let mut layer = vec![source.clone()];
        for d in 1..=limit {
            let mut next = Vec::new();
            for v in &layer {
                for w in self.neighbors(v) {
                    if targets.contains(&w) {
                        return Some(d);
                    }
                    if seen.insert(w.clone()) {
                        next.push(w);
                    }
                }
            }
            layer = next;
        }
        None
    }

    fn search_limit(&self) -> u16 {
        (2.0 * self.truncation + 2.0) as u16
    }

    fn graph_distance(&self, x: &Vertex, y: &Vertex) -> Result<u16> {
        if x == y {
            return Ok(0);
        }
        if *x == self.basepoint {
            if let Some(d) = self.tree().distance_to(y) {
                return Ok(d);
            }
        }
        if *y == self.basepoint {
            if let Some(d) = self.tree().distance_to(x) {
                return Ok(d);
            }
        }
        if self.parabolics.is_empty() {
            let diff = self.alphabet.mul(&self.alphabet.inverse(&x.elem), &y.elem);
            return Ok(self.alphabet.length(&diff) as u16);
        }
        let limit = self.search_limit();
        let tree = self.bfs(x, limit, Some(y));
        tree.distance_to(y)
            .ok_or(Error::Truncation { requested: limit as f64 + 1.0, limit: limit as f64 })
    }

    fn path(&self, x: &Vertex, y: &Vertex) -> Result<Vec<Vertex>> {
        if x == y {
            return Ok(vec![x.clone()]);
        }
        let d = self.graph_distance(x, y)?;
        let tree = self.tree_from(x, d.max(1), Some(y));
        let i = tree
            .verts
            .get_index_of(y)
            .ok_or_else(|| Error::DomainTruncation("geodesic endpoint outside the search".into()))?;
        Ok(tree.path_to(i))
    }

    fn near_cached(&self, v: &Vertex, eps: f64) -> Vec<GraphHoroball> {
        let radius = eps.floor().max(0.0) as u16;
        if radius == 1 {
            if let Some(hit) = self.near_cache.lock().unwrap().get(v) {
                return hit.clone();
            }
        }
        let tree = self.bfs(v, radius, None);
        let mut out: Vec<GraphHoroball> = tree.verts.iter().flat_map(|w| self.horoballs_of(w)).collect();
        out.sort();
        out.dedup();
        if radius == 1 {
            let mut cache = self.near_cache.lock().unwrap();
            if cache.len() > 200_000 {
                cache.clear();
            }
            cache.insert(v.clone(), out.clone());
        }
        out
    }

    /// Indices of the `(eps, R)`-transition vertices on a vertex path.
    pub fn path_transitions(&self, path: &[Vertex], params: &TransitionParams) -> Vec<bool> {
        if self.parabolics.is_empty() {
            return vec![true; path.len()];
        }
        let near: Vec<Vec<GraphHoroball>> = path.iter().map(|v| self.near_cached(v, params.eps)).collect();
        let r = params.big_r.floor() as usize;
        (0..path.len())
            .map(|i| {
                let lo = i.saturating_sub(r);
                let hi = (i + r).min(path.len() - 1);
                !near[i].iter().any(|u| (lo..=hi).all(|j| near[j].binary_search(u).is_ok()))
            })
            .collect()
    }

    fn sample_constants(&self) -> Result<ModelConstants> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let letters = self.alphabet.letters();
        let random_vertex = |rng: &mut ChaCha8Rng| {
            let mut w = self.alphabet.identity();
            for _ in 0..rng.gen_range(0..=3) {
                let (g, s) = letters[rng.gen_range(0..letters.len())];
                self.alphabet.push(&mut w, g, s as i64);
            }
            Vertex::cayley(self.alphabet.mul(&self.basepoint.elem, &w))
        };
        let triangles: Vec<[Vertex; 3]> = (0..10)
            .map(|_| [random_vertex(&mut rng), random_vertex(&mut rng), random_vertex(&mut rng)])
            .collect();
        let delta_hat = triangles_delta(self, &triangles)?;
        let mut quasiconvexity_eps = 0.0f64;
        for class in 0..self.parabolics.len() {
            let u = self.horoball(class as u8, &self.alphabet.identity());
            let gen = self.parabolics[class];
            let reach = 1i64 << self.max_depth.min(4);
            for m in 1..=reach {
                let end = Vertex::cayley(self.alphabet.power(gen, m));
                for v in self.path(&Vertex::cayley(self.alphabet.identity()), &end)? {
                    let d = self.bfs_until(&v, 3, |w| self.belongs(w, &u)).map_or(4.0, |(_, d)| d as f64);
                    quasiconvexity_eps = quasiconvexity_eps.max(d);
                }
            }
        }
        Ok(ModelConstants { delta_hat, triangle_sample: triangles.len(), quasiconvexity_eps, cocompactness_m: 0.5 })
    }

    /// Smallest vertex in the first BFS layer satisfying `pred`.
    fn bfs_until(&self, source: &Vertex, radius: u16, pred: impl Fn(&Vertex) -> bool) -> Option<(Vertex, u16)> {
        let mut seen: HashSet<Vertex> = HashSet::from([source.clone()]);
        let mut layer = vec![source.clone()];
        for d in 0..=radius {
            let mut hits: Vec<&Vertex> = layer.iter().filter(|v| pred(v)).collect();
            if !hits.is_empty() {
                hits.sort();
                return Some((hits[0].clone(), d));
            }
            let mut next = Vec::new();
            for v in &layer {
                for w in self.neighbors(v) {
                    if seen.insert(w.clone()) {
                        next.push(w);
                    }
                }
            }
            layer = next;
        }
        None
    }

    /// `d((g,0), (g a^m,0))` for every `m` within `radius`, by search in the
    /// single combinatorial horoball over the coset. Since `a` generates a
    /// free factor, a path that leaves the horoball at `g a^i` must come back
    /// through `g a^i`, so geodesics between coset points stay inside it.
    pub fn coset_distances(&self, radius: u16) -> Vec<(i64, u16)> {
        let depth = self.max_depth as usize;
        let width = (1i64 << depth) * (radius as i64 + 1) + 1;
        let idx = |i: i64, k: usize| ((i + width) as usize) * (depth + 1) + k;
        let mut dist = vec![u16::MAX; (2 * width as usize + 1) * (depth + 1)];
        let mut queue = VecDeque::from([(0i64, 0usize)]);
        dist[idx(0, 0)] = 0;
        while let Some((i, k)) = queue.pop_front() {
            let d = dist[idx(i, k)];
            if d >= radius {
                continue;
            }
            let span = 1i64 << k;
            let mut next: Vec<(i64, usize)> = (-span..=span).filter(|&j| j != 0).map(|j| (i + j, k)).collect();
            if k < depth {
                next.push((i, k + 1));
            }
            if k > 0 {
                next.push((i, k - 1));
            }
            for (j, l) in next {
                if j.abs() <= width && dist[idx(j, l)] == u16::MAX {
                    dist[idx(j, l)] = d + 1;
                    queue.push_back((j, l));
                }
            }
        }
        (-width..=width).filter(|&m| dist[idx(m, 0)] != u16::MAX).map(|m| (m, dist[idx(m, 0)])).collect()
    }

    /// `d((e,0), (a^n,0))` for the parabolic generator of `class`.
    pub fn parabolic_distortion(&self, class: usize, n: i64) -> Result<f64> {
        let end = Vertex::cayley(self.alphabet.power(self.parabolics[class], n));
        self.distance(&Vertex::cayley(self.alphabet.identity()), &end)
    }

    pub fn horizon(&self) -> f64 {
        (self.truncation - 2.0).max(1.0)
    }

    /// A proxy boundary point at distance at least `horizon`, reached by
    /// extending the word of `p` with a non-parabolic letter.
    pub fn proxy_through(&self, p: &Vertex, horizon: f64) -> Result<Proxy> {
        let a = &*self.alphabet;
        let mut w = p.elem.clone();
        let extension = match w.syllables().last() {
            Some(&(g, e)) if !self.parabolics.contains(&g) && a.order(g) == 0 => (g, e.signum()),
            last => {
                let last_gen = last.map(|&(g, _)| g);
                let g = (0..a.len() as u8)
                    .find(|g| !self.parabolics.contains(g) && Some(*g) != last_gen)
                    .or_else(|| (0..a.len() as u8).find(|g| !self.parabolics.contains(g)))
                    .ok_or_else(|| Error::Unsupported("every generator is parabolic; no proxy direction".into()))?;
                (g, 1)
            }
        };
        let tree = self.tree();
        let mut vertex = Vertex::cayley(w.clone());
        for _ in 0..(4 * self.truncation as usize + 8) {
            match tree.distance_to(&vertex) {
                Some(d) if d as f64 >= horizon => {
                    let label = format!("proxy({})", a.display(&vertex.elem));
                    return Ok(Proxy { vertex, distance: d as f64, label });
                }
                None => break,
                _ => {}
            }
            let (g, s) = extension;
            if a.order(g) != 0 {
                // finite-order letters cannot extend a ray; alternate with the next generator
                let alt = (0..a.len() as u8).find(|&h| h != g && !self.parabolics.contains(&h));
                match (w.syllables().last(), alt) {
                    (Some(&(last, _)), Some(h)) if last == g => a.push(&mut w, h, 1),
                    _ => a.push(&mut w, g, 1),
                }
            } else {
                a.push(&mut w, g, s as i64);
            }
            vertex = Vertex::cayley(w.clone());
        }
        Err(Error::Horizon { distance: tree.distance_to(&vertex).map_or(f64::NAN, f64::from), horizon })
    }

    pub fn proxy(&self, vertex: Vertex) -> Result<Proxy> {
        let d = self.distance(&self.basepoint, &vertex)?;
        let horizon = self.horizon();
        if d < horizon {
            return Err(Error::Horizon { distance: d, horizon });
        }
        let label = format!("proxy({})", self.alphabet.display(&vertex.elem));
        Ok(Proxy { vertex, distance: d, label })
    }
}

impl Space for CuspedModel {
    type Point = Vertex;
    type Element = Element;
    type Horoball = GraphHoroball;
    type Boundary = Proxy;

    fn parse_element(&self, text: &str) -> Result<Element> {
        CuspedModel::parse_element(self, text)
    }

    /// `e`, the first generator, and the second generator times the first.
    fn sample_centers(&self) -> Vec<Element> {
        let a = &*self.alphabet;
        let mut first = Word::default();
        a.push(&mut first, 0, 1);
        let mut second = Word::default();
        a.push(&mut second, (a.len() > 1) as u8, 1);
        a.push(&mut second, 0, 1);
        vec![self.identity(), self.element(first), self.element(second)]
    }

    fn backend(&self) -> Backend {
        Backend::CuspedCayley
    }

    fn basepoint(&self) -> &Vertex {
        &self.basepoint
    }

    fn truncation(&self) -> f64 {
        self.truncation
    }

    fn constants(&self) -> &ModelConstants {
        &self.constants
    }

    fn default_step(&self) -> f64 {
        1.0
    }

    fn distance(&self, x: &Vertex, y: &Vertex) -> Result<f64> {
        Ok(self.graph_distance(x, y)? as f64)
    }

    fn geodesic(&self, x: &Vertex, y: &Vertex, step: f64) -> Result<PathSample<Vertex>> {
        if !(step > 0.0) {
            return Err(Error::Usage("geodesic step must be positive".into()));
        }
        let points = self.path(x, y)?;
        let lengths = (0..points.len()).map(|i| i as f64).collect();
        Ok(PathSample::new(points, lengths, 1.0))
    }

    fn point_along(&self, x: &Vertex, y: &Vertex, t: f64) -> Result<Vertex> {
        let path = self.path(x, y)?;
        let i = ((t + 1e-9).floor().max(0.0) as usize).min(path.len() - 1);
        Ok(path[i].clone())
    }

    fn identity(&self) -> Element {
        self.element(self.alphabet.identity())
    }

    fn compose(&self, g: &Element, h: &Element) -> Element {
        self.element(self.alphabet.mul(&g.word, &h.word))
    }

    fn inverse(&self, g: &Element) -> Element {
        self.element(self.alphabet.inverse(&g.word))
    }

    fn apply(&self, g: &Element, x: &Vertex) -> Vertex {
        Vertex { elem: self.alphabet.mul(&g.word, &x.elem), class: x.class, depth: x.depth }
    }

    fn generators(&self) -> Vec<Element> {
        self.alphabet.letters().into_iter().map(|(g, s)| self.element(self.alphabet.letter(g, s))).collect()
    }

    fn orbit_ball(&self) -> Result<&OrbitBall<Element>> {
        Ok(self.ball.get_or_init(|| {
            let tree = self.tree();
            let base_inv = self.alphabet.inverse(&self.basepoint.elem);
            let mut entries: Vec<OrbitEntry<Element>> = tree
                .verts
                .iter()
                .zip(&tree.dist)
                .filter(|(v, _)| v.depth == 0)
                .map(|(v, &d)| OrbitEntry {
                    // vertex g o corresponds to the element g = v o^-1
                    element: self.element(self.alphabet.mul(&v.elem, &base_inv)),
                    dist: d as f64,
                })
                .collect();
            entries.sort_by(|x, y| x.dist.total_cmp(&y.dist).then(x.element.cmp(&y.element)));
            OrbitBall { radius: self.truncation, entries }
        }))
    }

    fn num_parabolic_classes(&self) -> usize {
        self.parabolics.len()
    }

    fn class_horoball(&self, k: usize) -> GraphHoroball {
        self.horoball(k as u8, &self.alphabet.identity())
    }

    fn horoball_class(&self, u: &GraphHoroball) -> usize {
        u.class as usize
    }

    fn translate_horoball(&self, g: &Element, u: &GraphHoroball) -> GraphHoroball {
        self.horoball(u.class, &self.alphabet.mul(&g.word, &u.coset))
    }

    fn horoball_table(&self) -> Result<&[HoroballEntry<GraphHoroball>]> {
        Ok(self.horoballs.get_or_init(|| {
            if self.parabolics.is_empty() {
                return Vec::new();
            }
            let tree = self.tree();
            let mut best: HashMap<GraphHoroball, u16> = HashMap::new();
            for (v, &d) in tree.verts.iter().zip(&tree.dist) {
                for u in self.horoballs_of(v) {
                    let slot = best.entry(u).or_insert(d);
                    *slot = (*slot).min(d);
                }
            }
            let mut out: Vec<HoroballEntry<GraphHoroball>> =
                best.into_iter().map(|(horoball, d)| HoroballEntry { horoball, dist: d as f64 }).collect();
            out.sort_by(|x, y| x.dist.total_cmp(&y.dist).then(x.horoball.cmp(&y.horoball)));
            out
        }))
    }

    fn horoball_distance(&self, x: &Vertex, u: &GraphHoroball) -> Result<f64> {
        self.bfs_until(x, self.search_limit(), |v| self.belongs(v, u))
            .map(|(_, d)| d as f64)
            .ok_or_else(|| Error::DomainTruncation(format!("horoball {u} not reached within the search radius")))
    }

    fn horoball_foot(&self, x: &Vertex, u: &GraphHoroball) -> Result<Vertex> {
        // the horosphere is the depth-0 coset; a vertex at depth > 0 is interior
        self.bfs_until(x, self.search_limit(), |v| v.depth == 0 && self.belongs(v, u))
            .map(|(v, _)| v)
            .ok_or_else(|| Error::DomainTruncation(format!("horoball {u} not reached within the search radius")))
    }

    fn horoballs_near(&self, x: &Vertex, eps: f64) -> Result<Vec<GraphHoroball>> {
        if self.parabolics.is_empty() {
            return Ok(Vec::new());
        }
        Ok(self.near_cached(x, eps))
    }

    fn stabilizer_orbit(&self, u: &GraphHoroball, v: &Vertex, radius: f64) -> Result<Vec<(Element, f64)>> {
        let a = &*self.alphabet;
        let gen = *self
            .parabolics
            .get(u.class as usize)
            .ok_or_else(|| Error::Spec("horoball has no declared stabilizer generators".into()))?;
        let r = radius.floor().max(0.0) as u16;
        let conj_inv = a.inverse(&u.coset);
        let mut out = Vec::new();
        if v.depth == 0 && self.belongs(v, u) {
            for (m, d) in self.coset_distances(r) {
                out.push((self.element(a.mul(&a.mul(&u.coset, &a.power(gen, m)), &conj_inv)), d as f64));
            }
            out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            return Ok(out);
        }
        let tree = self.tree_from(v, r, None);
        let bound = 1i64 << ((radius / 2.0).floor() as u32 + 3).min(24);
        for m in -bound..=bound {
            let h = a.mul(&a.mul(&u.coset, &a.power(gen, m)), &conj_inv);
            let hv = Vertex { elem: a.mul(&h, &v.elem), class: v.class, depth: v.depth };
            if let Some(d) = tree.distance_to(&hv) {
                out.push((self.element(h), d as f64));
            }
        }
        out.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
        Ok(out)
    }

    fn shadow_slack(&self) -> f64 {
        0.5 + self.constants.delta_hat
    }

    fn segment_distance(&self, x: &Vertex, y: &Vertex, p: &Vertex) -> Result<f64> {
        let path = self.path(x, y)?;
        let targets: HashSet<&Vertex> = path.iter().collect();
        let limit = self.search_limit();
        self.distance_to_set(p, &targets, limit)
            .map(f64::from)
            .ok_or(Error::Truncation { requested: limit as f64 + 1.0, limit: limit as f64 })
    }

    fn cone_mask(&self, ball: &OrbitBall<Element>, p: &Vertex, r: f64) -> Result<Vec<bool>> {
        let reach = (r + self.shadow_slack()).floor().max(0.0) as u16;
        let near: HashSet<Vertex> = self.bfs(p, reach, None).verts.into_iter().collect();
        let tree = self.tree();
        let mut marked = vec![false; tree.verts.len()];
        // BFS order visits parents first
        for i in 0..tree.verts.len() {
            marked[i] = near.contains(&tree.verts[i]) || (tree.dist[i] > 0 && marked[tree.parent[i] as usize]);
        }
        ball.entries
            .iter()
            .map(|e| {
                let v = self.orbit_point(&e.element);
                tree.verts
                    .get_index_of(&v)
                    .map(|i| marked[i])
                    .ok_or_else(|| Error::Truncation { requested: e.dist, limit: self.truncation })
            })
            .collect()
    }

    fn transition_near(
        &self,
        x: &Vertex,
        y: &Vertex,
        p: &Vertex,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<bool> {
        let path = self.path(x, y)?;
        let flags = self.path_transitions(&path, params);
        let targets: HashSet<&Vertex> = path.iter().zip(flags).filter(|(_, t)| *t).map(|(v, _)| v).collect();
        if targets.is_empty() {
            return Ok(false);
        }
        Ok(self.distance_to_set(p, &targets, radius.floor().max(0.0) as u16).is_some())
    }

    fn transition_mask(
        &self,
        ball: &OrbitBall<Element>,
        candidates: &[usize],
        p: &Vertex,
        radius: f64,
        params: &TransitionParams,
    ) -> Result<Vec<bool>> {
        let near: HashSet<Vertex> = self.bfs(p, radius.floor().max(0.0) as u16, None).verts.into_iter().collect();
        let tree = self.tree();
        candidates
            .iter()
            .map(|&i| {
                let e = &ball.entries[i];
                let idx = tree
                    .verts
                    .get_index_of(&self.orbit_point(&e.element))
                    .ok_or(Error::Truncation { requested: e.dist, limit: self.truncation })?;
                let path = tree.path_to(idx);
                let flags = self.path_transitions(&path, params);
                Ok(path.iter().zip(flags).any(|(v, t)| t && near.contains(v)))
            })
            .collect()
    }

    fn ray_distance(&self, xi: &Proxy, p: &Vertex) -> Result<f64> {
        self.segment_distance(&self.basepoint, &xi.vertex, p)
    }

    fn ray_transition_near(&self, xi: &Proxy, p: &Vertex, radius: f64, params: &TransitionParams) -> Result<bool> {
        self.transition_near(&self.basepoint, &xi.vertex, p, radius, params)
    }

    fn ray_point(&self, xi: &Proxy, t: f64) -> Result<Vertex> {
        if t > xi.distance {
            return Err(Error::Horizon { distance: t, horizon: xi.distance });
        }
        self.point_along(&self.basepoint, &xi.vertex, t)
    }

    fn busemann(&self, xi: &Proxy, x: &Vertex, y: &Vertex) -> Result<f64> {
        let (dx, dy) = (self.distance(x, &xi.vertex)?, self.distance(y, &xi.vertex)?);
        let horizon = self.horizon();
        if dx < horizon.min(xi.distance) / 2.0 || dy < horizon.min(xi.distance) / 2.0 {
            return Err(Error::Horizon { distance: dx.min(dy), horizon });
        }
        Ok(dx - dy)
    }

    fn boundary_through(&self, p: &Vertex) -> Result<Proxy> {
        self.proxy_through(p, self.horizon())
    }
}
