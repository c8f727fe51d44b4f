//! Typed directed multigraphs, injective morphisms and their enumeration.
//!
//! Vertices and edges are identified by their position; a graph is typed
//! over a shared [`TypeGraph`]. All morphisms in this crate are monic.

use std::fmt;
use std::ops::ControlFlow;
use std::sync::Arc;

use thiserror::Error;

use crate::canon::{canonical_labelling, CanonicalKey, LabelledGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate vertex type `{0}`")]
    DuplicateVertexType(String),
    #[error("duplicate edge type `{0}`")]
    DuplicateEdgeType(String),
    #[error("unknown vertex type `{0}`")]
    UnknownVertexType(String),
    #[error("unknown edge type `{0}`")]
    UnknownEdgeType(String),
    #[error("vertex {vertex} has type index {ty} outside the type graph")]
    VertexTypeIndex { vertex: usize, ty: usize },
    #[error("edge {edge} has type index {ty} outside the type graph")]
    EdgeTypeIndex { edge: usize, ty: usize },
    #[error("edge {edge} references missing vertex {vertex}")]
    MissingEndpoint { edge: usize, vertex: usize },
    #[error("edge {edge} of type `{ty}` connects vertices of the wrong types")]
    EndpointType { edge: usize, ty: String },
    #[error("graphs are typed over different type graphs")]
    TypeGraphMismatch,
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeType {
    pub label: String,
    pub src: usize,
    pub tgt: usize,
}

/// The type graph: vertex labels and edge labels with their endpoint types.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeGraph {
    vertex_types: Vec<String>,
    edge_types: Vec<EdgeType>,
}

impl TypeGraph {
    /// `edge_types` lists `(label, source vertex type, target vertex type)`.
    pub fn new<S: AsRef<str>>(vertex_types: &[S], edge_types: &[(S, S, S)]) -> Result<Arc<Self>, GraphError> {
        let mut vt: Vec<String> = Vec::with_capacity(vertex_types.len());
        for v in vertex_types {
            let v = v.as_ref().to_string();
            if vt.contains(&v) {
                return Err(GraphError::DuplicateVertexType(v));
            }
            vt.push(v);
        }
        let lookup = |name: &str| {
            vt.iter()
                .position(|x| x == name)
                .ok_or_else(|| GraphError::UnknownVertexType(name.to_string()))
        };
        let mut et: Vec<EdgeType> = Vec::with_capacity(edge_types.len());
        for (label, s, t) in edge_types {
            let label = label.as_ref().to_string();
            if et.iter().any(|e| e.label == label) {
                return Err(GraphError::DuplicateEdgeType(label));
            }
            et.push(EdgeType {
                src: lookup(s.as_ref())?,
                tgt: lookup(t.as_ref())?,
                label,
            });
        }
        Ok(Arc::new(TypeGraph {
            vertex_types: vt,
            edge_types: et,
        }))
    }

    pub fn vertex_types(&self) -> &[String] {
        &self.vertex_types
    }

    pub fn edge_types(&self) -> &[EdgeType] {
        &self.edge_types
    }

    pub fn vertex_type(&self, name: &str) -> Result<usize, GraphError> {
        self.vertex_types
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| GraphError::UnknownVertexType(name.to_string()))
    }

    pub fn edge_type(&self, name: &str) -> Result<usize, GraphError> {
        self.edge_types
            .iter()
            .position(|x| x.label == name)
            .ok_or_else(|| GraphError::UnknownEdgeType(name.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub ty: usize,
    pub src: usize,
    pub tgt: usize,
}

/// A finite directed multigraph typed over a [`TypeGraph`].
#[derive(Clone)]
pub struct TypedGraph {
    types: Arc<TypeGraph>,
    vertices: Vec<usize>,
    edges: Vec<Edge>,
}

impl TypedGraph {
    pub fn new(types: &Arc<TypeGraph>, vertices: Vec<usize>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        for (v, &ty) in vertices.iter().enumerate() {
            if ty >= types.vertex_types.len() {
                return Err(GraphError::VertexTypeIndex { vertex: v, ty });
            }
        }
        for (i, e) in edges.iter().enumerate() {
            let et = types
                .edge_types
                .get(e.ty)
                .ok_or(GraphError::EdgeTypeIndex { edge: i, ty: e.ty })?;
            for v in [e.src, e.tgt] {
                if v >= vertices.len() {
                    return Err(GraphError::MissingEndpoint { edge: i, vertex: v });
                }
            }
            if vertices[e.src] != et.src || vertices[e.tgt] != et.tgt {
                return Err(GraphError::EndpointType {
                    edge: i,
                    ty: et.label.clone(),
                });
            }
        }
        Ok(TypedGraph {
            types: types.clone(),
            vertices,
            edges,
        })
    }

    pub fn empty(types: &Arc<TypeGraph>) -> Self {
        TypedGraph {
            types: types.clone(),
            vertices: Vec::new(),
            edges: Vec::new(),
        }
    }

    /// Builds a graph from type names; edges are `(edge type, source, target)`.
    pub fn from_names(
        types: &Arc<TypeGraph>,
        vertices: &[&str],
        edges: &[(&str, usize, usize)],
    ) -> Result<Self, GraphError> {
        let vs = vertices
            .iter()
            .map(|v| types.vertex_type(v))
            .collect::<Result<Vec<_>, _>>()?;
        let es = edges
            .iter()
            .map(|&(l, src, tgt)| {
                Ok(Edge {
                    ty: types.edge_type(l)?,
                    src,
                    tgt,
                })
            })
            .collect::<Result<Vec<_>, GraphError>>()?;
        TypedGraph::new(types, vs, es)
    }

    pub fn type_graph(&self) -> &Arc<TypeGraph> {
        &self.types
    }

    pub fn same_type_graph(&self, other: &TypedGraph) -> bool {
        Arc::ptr_eq(&self.types, &other.types) || self.types == other.types
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex_type(&self, v: usize) -> usize {
        self.vertices[v]
    }

    pub fn vertex_types(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    pub fn add_vertex(&mut self, ty: usize) -> usize {
        assert!(ty < self.types.vertex_types.len(), "vertex type out of range");
        self.vertices.push(ty);
        self.vertices.len() - 1
    }

    pub fn add_edge(&mut self, ty: usize, src: usize, tgt: usize) -> usize {
        let et = &self.types.edge_types[ty];
        assert!(
            self.vertices[src] == et.src && self.vertices[tgt] == et.tgt,
            "edge endpoints do not match the edge type"
        );
        self.edges.push(Edge { ty, src, tgt });
        self.edges.len() - 1
    }

    /// Number of edges of each edge type.
    pub fn edge_type_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.types.edge_types.len()];
        for e in &self.edges {
            c[e.ty] += 1;
        }
        c
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.tgt == v).count()
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.src == v)
    }

    /// Renames ids: vertex `v` becomes `vperm[v]`, edge `e` becomes `eperm[e]`.
    pub fn relabel(&self, vperm: &[usize], eperm: &[usize]) -> TypedGraph {
        let mut vertices = vec![0; self.vertices.len()];
        for (v, &ty) in self.vertices.iter().enumerate() {
            vertices[vperm[v]] = ty;
        }
        let mut edges = vec![Edge { ty: 0, src: 0, tgt: 0 }; self.edges.len()];
        for (i, e) in self.edges.iter().enumerate() {
            edges[eperm[i]] = Edge {
                ty: e.ty,
                src: vperm[e.src],
                tgt: vperm[e.tgt],
            };
        }
        TypedGraph {
            types: self.types.clone(),
            vertices,
            edges,
        }
    }

    /// Subgraph on the given vertices and edges (edges must have both
    /// endpoints kept). Returns the subgraph and its inclusion.
    pub fn subgraph(&self, keep_v: &[bool], keep_e: &[bool]) -> (TypedGraph, Embedding) {
        let mut vmap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::new();
        let mut incl_v = Vec::new();
        for (v, &ty) in self.vertices.iter().enumerate() {
            if keep_v[v] {
                vmap[v] = vertices.len();
                vertices.push(ty);
                incl_v.push(v);
            }
        }
        let mut edges = Vec::new();
        let mut incl_e = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            if keep_e[i] {
                assert!(keep_v[e.src] && keep_v[e.tgt], "edge endpoints must be kept");
                edges.push(Edge {
                    ty: e.ty,
                    src: vmap[e.src],
                    tgt: vmap[e.tgt],
                });
                incl_e.push(i);
            }
        }
        (
            TypedGraph {
                types: self.types.clone(),
                vertices,
                edges,
            },
            Embedding {
                vertices: incl_v,
                edges: incl_e,
            },
        )
    }

    /// Weakly connected components as vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for e in &self.edges {
            let a = find(&mut parent, e.src);
            let b = find(&mut parent, e.tgt);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut index = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if index[r] == usize::MAX {
                index[r] = comps.len();
                comps.push(Vec::new());
            }
            comps[index[r]].push(v);
        }
        comps
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn canonical_form(&self) -> CanonicalKey {
        self.canonical_labelling().0
    }

    /// Canonical key plus the canonical position of every vertex.
    pub fn canonical_labelling(&self) -> (CanonicalKey, Vec<usize>) {
        let labels: Vec<u32> = self.vertices.iter().map(|&t| t as u32).collect();
        let edges: Vec<(u32, usize, usize)> = self.edges.iter().map(|e| (e.ty as u32, e.src, e.tgt)).collect();
        canonical_labelling(&LabelledGraph {
            labels: &labels,
            edges: &edges,
        })
    }

    /// The graph with vertices renumbered into canonical order and edges sorted.
    pub fn canonicalized(&self) -> TypedGraph {
        let (_, pos) = self.canonical_labelling();
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        let key = |i: usize| {
            let e = self.edges[i];
            (e.ty, pos[e.src], pos[e.tgt])
        };
        order.sort_by_key(|&i| key(i));
        let mut eperm = vec![0; self.edges.len()];
        for (new, &old) in order.iter().enumerate() {
            eperm[old] = new;
        }
        self.relabel(&pos, &eperm)
    }
}

impl PartialEq for TypedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.same_type_graph(other) && self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Eq for TypedGraph {}

impl fmt::Debug for TypedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypedGraph[")?;
        for (v, &ty) in self.vertices.iter().enumerate() {
            if v > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}:{}", self.types.vertex_types[ty])?;
        }
        write!(f, ";")?;
        for e in &self.edges {
            write!(f, " {}-{}->{}", e.src, self.types.edge_types[e.ty].label, e.tgt)?;
        }
        write!(f, "]")
    }
}

/// Vertex and edge components of a graph morphism, without the graphs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding {
    pub vertices: Vec<usize>,
    pub edges: Vec<usize>,
}

impl Embedding {
    pub fn identity(g: &TypedGraph) -> Self {
        Embedding {
            vertices: (0..g.num_vertices()).collect(),
            edges: (0..g.num_edges()).collect(),
        }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Embedding) -> Embedding {
        Embedding {
            vertices: self.vertices.iter().map(|&v| other.vertices[v]).collect(),
            edges: self.edges.iter().map(|&e| other.edges[e]).collect(),
        }
    }

    /// Checks totality, injectivity and preservation of types and incidence.
    pub fn check(&self, dom: &TypedGraph, cod: &TypedGraph) -> Result<(), GraphError> {
        let bad = |m: &str| Err(GraphError::InvalidMorphism(m.to_string()));
        if !dom.same_type_graph(cod) {
            return Err(GraphError::TypeGraphMismatch);
        }
        if self.vertices.len() != dom.num_vertices() || self.edges.len() != dom.num_edges() {
            return bad("map is not total");
        }
        let mut seen = vec![false; cod.num_vertices()];
        for (v, &w) in self.vertices.iter().enumerate() {
            if w >= cod.num_vertices() {
                return bad("vertex image out of range");
            }
            if seen[w] {
                return bad("vertex map is not injective");
            }
            seen[w] = true;
            if dom.vertex_type(v) != cod.vertex_type(w) {
                return bad("vertex map does not preserve types");
            }
        }
        let mut seen = vec![false; cod.num_edges()];
        for (e, &f) in self.edges.iter().enumerate() {
            if f >= cod.num_edges() {
                return bad("edge image out of range");
            }
            if seen[f] {
                return bad("edge map is not injective");
            }
            seen[f] = true;
            let (a, b) = (dom.edge(e), cod.edge(f));
            if a.ty != b.ty || self.vertices[a.src] != b.src || self.vertices[a.tgt] != b.tgt {
                return bad("edge map does not preserve types or incidence");
            }
        }
        Ok(())
    }
}

/// A monomorphism together with its domain and codomain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    pub domain: TypedGraph,
    pub codomain: TypedGraph,
    pub map: Embedding,
}

impl Morphism {
    pub fn new(domain: TypedGraph, codomain: TypedGraph, map: Embedding) -> Result<Self, GraphError> {
        map.check(&domain, &codomain)?;
        Ok(Morphism { domain, codomain, map })
    }

    /// The unique morphism out of the empty graph.
    pub fn from_empty(codomain: TypedGraph) -> Self {
        Morphism {
            domain: TypedGraph::empty(codomain.type_graph()),
            codomain,
            map: Embedding {
                vertices: Vec::new(),
                edges: Vec::new(),
            },
        }
    }

    pub fn identity(g: TypedGraph) -> Self {
        let map = Embedding::identity(&g);
        Morphism {
            domain: g.clone(),
            codomain: g,
            map,
        }
    }
}

/// Enumerates all monomorphisms `pattern ↪ host`, sorted lexicographically
/// by vertex images and then edge images.
pub fn enumerate_monos(pattern: &TypedGraph, host: &TypedGraph) -> Result<Vec<Embedding>, GraphError> {
    if !pattern.same_type_graph(host) {
        return Err(GraphError::TypeGraphMismatch);
    }
    let mut out = Vec::new();
    let _ = for_each_extension(pattern, host, &Partial::none(pattern), |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    });
    out.sort();
    Ok(out)
}

pub fn count_monos(pattern: &TypedGraph, host: &TypedGraph) -> usize {
    let mut n = 0;
    let _ = for_each_extension(pattern, host, &Partial::none(pattern), |_| {
        n += 1;
        ControlFlow::Continue(())
    });
    n
}

/// True iff a bijective mono exists, which for finite graphs of equal size
/// also yields one in the reverse direction.
pub fn is_isomorphic(a: &TypedGraph, b: &TypedGraph) -> bool {
    if !a.same_type_graph(b)
        || a.num_vertices() != b.num_vertices()
        || a.num_edges() != b.num_edges()
        || a.edge_type_counts() != b.edge_type_counts()
    {
        return false;
    }
    for_each_extension(a, b, &Partial::none(a), |_| ControlFlow::Break(())).is_break()
}

/// Pre-assigned images constraining a mono search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partial {
    pub vertices: Vec<Option<usize>>,
    pub edges: Vec<Option<usize>>,
}

impl Partial {
    pub fn none(pattern: &TypedGraph) -> Self {
        Partial {
            vertices: vec![None; pattern.num_vertices()],
            edges: vec![None; pattern.num_edges()],
        }
    }

    /// Images forced by `host_map ∘ embed⁻¹`: for `embed: X ↪ Y` and
    /// `host_map: X ↪ Z`, constrains monos `Y ↪ Z` to commute.
    pub fn through(embed: &Embedding, host_map: &Embedding, y: &TypedGraph) -> Self {
        let mut p = Partial::none(y);
        for (x, &yv) in embed.vertices.iter().enumerate() {
            p.vertices[yv] = Some(host_map.vertices[x]);
        }
        for (x, &ye) in embed.edges.iter().enumerate() {
            p.edges[ye] = Some(host_map.edges[x]);
        }
        p
    }
}

/// Calls `f` on every mono `pattern ↪ host` extending `partial`, stopping
/// early when `f` breaks. Order is deterministic but unsorted.
pub fn for_each_extension<F>(pattern: &TypedGraph, host: &TypedGraph, partial: &Partial, mut f: F) -> ControlFlow<()>
where
    F: FnMut(&Embedding) -> ControlFlow<()>,
{
    let np = pattern.num_vertices();
    let mut vmap = vec![usize::MAX; np];
    let mut used_v = vec![false; host.num_vertices()];
    let mut emap = vec![usize::MAX; pattern.num_edges()];
    let mut used_e = vec![false; host.num_edges()];

    // seed from pre-assigned edges and vertices
    let fix = |p: usize, h: usize, vmap: &mut Vec<usize>, used_v: &mut Vec<bool>| -> bool {
        if h >= host.num_vertices() || pattern.vertex_type(p) != host.vertex_type(h) {
            return false;
        }
        if vmap[p] == h {
            return true;
        }
        if vmap[p] != usize::MAX || used_v[h] {
            return false;
        }
        vmap[p] = h;
        used_v[h] = true;
        true
    };
    for (p, h) in partial.vertices.iter().enumerate() {
        if let Some(h) = *h {
            if !fix(p, h, &mut vmap, &mut used_v) {
                return ControlFlow::Continue(());
            }
        }
    }
    for (e, h) in partial.edges.iter().enumerate() {
        if let Some(h) = *h {
            if h >= host.num_edges() || used_e[h] {
                return ControlFlow::Continue(());
            }
            let (pe, he) = (pattern.edge(e), host.edge(h));
            if pe.ty != he.ty
                || !fix(pe.src, he.src, &mut vmap, &mut used_v)
                || !fix(pe.tgt, he.tgt, &mut vmap, &mut used_v)
            {
                return ControlFlow::Continue(());
            }
            emap[e] = h;
            used_e[h] = true;
        }
    }

    let mut host_out = vec![Vec::new(); host.num_vertices()];
    let mut host_in = vec![Vec::new(); host.num_vertices()];
    for (i, e) in host.edges().iter().enumerate() {
        host_out[e.src].push(i);
        host_in[e.tgt].push(i);
    }
    let mut pat_adj = vec![Vec::new(); np];
    for (i, e) in pattern.edges().iter().enumerate() {
        pat_adj[e.src].push(i);
        if e.tgt != e.src {
            pat_adj[e.tgt].push(i);
        }
    }

    // vertex order: pre-assigned first, then most-constrained
    let mut placed = vec![false; np];
    let mut order = Vec::with_capacity(np);
    for p in 0..np {
        if vmap[p] != usize::MAX {
            placed[p] = true;
            order.push(p);
        }
    }
    let fixed = order.len();
    while order.len() < np {
        let best = (0..np)
            .filter(|&p| !placed[p])
            .max_by_key(|&p| {
                let links = pat_adj[p]
                    .iter()
                    .filter(|&&e| {
                        let ed = pattern.edge(e);
                        let other = if ed.src == p { ed.tgt } else { ed.src };
                        placed[other]
                    })
                    .count();
                (links, pat_adj[p].len(), std::cmp::Reverse(p))
            })
            .unwrap();
        placed[best] = true;
        order.push(best);
    }
    let mut position = vec![0; np];
    for (i, &p) in order.iter().enumerate() {
        position[p] = i;
    }
    // for every free vertex: edges to vertices placed no later than itself
    let back: Vec<Vec<usize>> = order
        .iter()
        .map(|&p| {
            pat_adj[p]
                .iter()
                .copied()
                .filter(|&e| {
                    let ed = pattern.edge(e);
                    position[ed.src] <= position[p] && position[ed.tgt] <= position[p]
                })
                .collect()
        })
        .collect();

    // prune early on pre-assigned vertices
    for i in 0..fixed {
        if !multiplicities_ok(pattern, host, &host_out, &back[i], &vmap) {
            return ControlFlow::Continue(());
        }
    }

    let mut search = MonoSearch {
        pattern,
        host,
        host_out: &host_out,
        host_in: &host_in,
        order: &order,
        back: &back,
        vmap,
        used_v,
        emap,
        used_e,
    };
    search.vertices(fixed, &mut f)
}

fn multiplicities_ok(
    pattern: &TypedGraph,
    host: &TypedGraph,
    host_out: &[Vec<usize>],
    edges: &[usize],
    vmap: &[usize],
) -> bool {
    for (k, &e) in edges.iter().enumerate() {
        let pe = pattern.edge(e);
        // count each (ty, src, tgt) class once, at its first occurrence
        if edges[..k].iter().any(|&o| pattern.edge(o) == pe) {
            continue;
        }
        let need = edges.iter().filter(|&&o| pattern.edge(o) == pe).count();
        let (hs, ht) = (vmap[pe.src], vmap[pe.tgt]);
        let have = host_out[hs]
            .iter()
            .filter(|&&h| {
                let he = host.edge(h);
                he.ty == pe.ty && he.tgt == ht
            })
            .count();
        if have < need {
            return false;
        }
    }
    true
}

struct MonoSearch<'a> {
    pattern: &'a TypedGraph,
    host: &'a TypedGraph,
    host_out: &'a [Vec<usize>],
    host_in: &'a [Vec<usize>],
    order: &'a [usize],
    back: &'a [Vec<usize>],
    vmap: Vec<usize>,
    used_v: Vec<bool>,
    emap: Vec<usize>,
    used_e: Vec<bool>,
}

impl MonoSearch<'_> {
    fn candidates(&self, p: usize, depth: usize) -> Vec<usize> {
        let ty = self.pattern.vertex_type(p);
        // an edge to an already placed vertex narrows the candidates
        for &e in &self.back[depth] {
            let pe = self.pattern.edge(e);
            if pe.src == p && pe.tgt != p {
                let anchor = self.vmap[pe.tgt];
                let mut c: Vec<usize> = self.host_in[anchor]
                    .iter()
                    .map(|&h| self.host.edge(h))
                    .filter(|he| he.ty == pe.ty)
                    .map(|he| he.src)
                    .collect();
                c.sort_unstable();
                c.dedup();
                return c;
            }
            if pe.tgt == p && pe.src != p {
                let anchor = self.vmap[pe.src];
                let mut c: Vec<usize> = self.host_out[anchor]
                    .iter()
                    .map(|&h| self.host.edge(h))
                    .filter(|he| he.ty == pe.ty)
                    .map(|he| he.tgt)
                    .collect();
                c.sort_unstable();
                c.dedup();
                return c;
            }
        }
        (0..self.host.num_vertices())
            .filter(|&h| self.host.vertex_type(h) == ty)
            .collect()
    }

    fn vertices<F>(&mut self, depth: usize, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&Embedding) -> ControlFlow<()>,
    {
        if depth == self.order.len() {
            return self.edges(0, f);
        }
        let p = self.order[depth];
        for h in self.candidates(p, depth) {
            if self.used_v[h] || self.host.vertex_type(h) != self.pattern.vertex_type(p) {
                continue;
            }
            self.vmap[p] = h;
            if multiplicities_ok(self.pattern, self.host, self.host_out, &self.back[depth], &self.vmap) {
                self.used_v[h] = true;
                let r = self.vertices(depth + 1, f);
                self.used_v[h] = false;
                if r.is_break() {
                    self.vmap[p] = usize::MAX;
                    return r;
                }
            }
            self.vmap[p] = usize::MAX;
        }
        ControlFlow::Continue(())
    }

    fn edges<F>(&mut self, e: usize, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&Embedding) -> ControlFlow<()>,
    {
        if e == self.pattern.num_edges() {
            let m = Embedding {
                vertices: self.vmap.clone(),
                edges: self.emap.clone(),
            };
            return f(&m);
        }
        if self.emap[e] != usize::MAX {
            return self.edges(e + 1, f);
        }
        let pe = self.pattern.edge(e);
        let (hs, ht) = (self.vmap[pe.src], self.vmap[pe.tgt]);
        for k in 0..self.host_out[hs].len() {
            let h = self.host_out[hs][k];
            let he = self.host.edge(h);
            if self.used_e[h] || he.ty != pe.ty || he.tgt != ht {
                continue;
            }
            self.emap[e] = h;
            self.used_e[h] = true;
            let r = self.edges(e + 1, f);
            self.used_e[h] = false;
            self.emap[e] = usize::MAX;
            r?;
        }
        ControlFlow::Continue(())
    }
}
