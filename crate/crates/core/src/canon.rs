//! Canonical labelling of small vertex- and edge-labelled directed multigraphs.
//!
//! Iterated colour refinement followed by individualisation of the first
//! non-singleton cell; the canonical code is the minimum code over all
//! leaves of the search tree. Twin vertices (identical labelled
//! neighbourhoods) are explored once per twin class.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Canonical code of a graph: equal codes iff the graphs are isomorphic.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalKey(Vec<u32>);

impl CanonicalKey {
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn from_code(code: Vec<u32>) -> Self {
        CanonicalKey(code)
    }
}

impl fmt::Debug for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CanonicalKey({self})")
    }
}

// Rendered as `n|labels|edges`, e.g. `2|0.0|0:0>1`.
impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let code = &self.0;
        if code.is_empty() {
            return write!(f, "-");
        }
        let n = code[0] as usize;
        write!(f, "{n}|")?;
        for (i, l) in code[1..1 + n].iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "|")?;
        let rest = &code[2 + n..];
        for (i, e) in rest.chunks(3).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}:{}>{}", e[0], e[1], e[2])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed canonical key `{0}`")]
pub struct KeyParseError(pub String);

impl FromStr for CanonicalKey {
    type Err = KeyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || KeyParseError(s.to_string());
        let mut parts = s.split('|');
        let n: u32 = parts.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let labels = parts.next().ok_or_else(err)?;
        let edges = parts.next().ok_or_else(err)?;
        if parts.next().is_some() {
            return Err(err());
        }
        let mut code = vec![n];
        if n > 0 {
            for l in labels.split('.') {
                code.push(l.parse().map_err(|_| err())?);
            }
        }
        if code.len() != n as usize + 1 {
            return Err(err());
        }
        let mut triples: Vec<u32> = Vec::new();
        if !edges.is_empty() {
            for e in edges.split(',') {
                let (label, rest) = e.split_once(':').ok_or_else(err)?;
                let (a, b) = rest.split_once('>').ok_or_else(err)?;
                triples.push(label.parse().map_err(|_| err())?);
                triples.push(a.parse().map_err(|_| err())?);
                triples.push(b.parse().map_err(|_| err())?);
            }
        }
        code.push((triples.len() / 3) as u32);
        code.extend(triples);
        Ok(CanonicalKey(code))
    }
}

/// Labelled directed multigraph handed to the canonicaliser.
pub struct LabelledGraph<'a> {
    pub labels: &'a [u32],
    /// `(label, source, target)`.
    pub edges: &'a [(u32, usize, usize)],
}

/// Returns the canonical key and a canonical position for every vertex.
pub fn canonical_labelling(g: &LabelledGraph<'_>) -> (CanonicalKey, Vec<usize>) {
    let n = g.labels.len();
    // (direction, edge label, neighbour)
    let mut adj: Vec<Vec<(u8, u32, usize)>> = vec![Vec::new(); n];
    for &(l, s, t) in g.edges {
        adj[s].push((0, l, t));
        adj[t].push((1, l, s));
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
    }
    let mut distinct: Vec<u32> = g.labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut colours: Vec<u32> = g
        .labels
        .iter()
        .map(|l| distinct.binary_search(l).unwrap() as u32)
        .collect();
    let search = Search { g, adj: &adj };
    search.refine(&mut colours);
    let mut best: Option<(Vec<u32>, Vec<u32>)> = None;
    search.descend(colours, &mut best);
    let (code, colours) = best.unwrap_or_else(|| (vec![0, 0], Vec::new()));
    (CanonicalKey(code), colours.into_iter().map(|c| c as usize).collect())
}

struct Search<'a, 'g> {
    g: &'a LabelledGraph<'g>,
    adj: &'a [Vec<(u8, u32, usize)>],
}

impl Search<'_, '_> {
    fn refine(&self, colours: &mut Vec<u32>) {
        let n = colours.len();
        let mut cells = count_cells(colours);
        loop {
            if cells == n {
                return;
            }
            let sigs: Vec<(u32, Vec<(u8, u32, u32)>)> = (0..n)
                .map(|v| {
                    let mut nb: Vec<(u8, u32, u32)> = self.adj[v].iter().map(|&(d, l, u)| (d, l, colours[u])).collect();
                    nb.sort_unstable();
                    (colours[v], nb)
                })
                .collect();
            let mut sorted: Vec<&(u32, Vec<(u8, u32, u32)>)> = sigs.iter().collect();
            sorted.sort_unstable();
            sorted.dedup();
            let next: Vec<u32> = sigs.iter().map(|s| sorted.binary_search(&s).unwrap() as u32).collect();
            let next_cells = sorted.len();
            *colours = next;
            if next_cells == cells {
                return;
            }
            cells = next_cells;
        }
    }

    fn descend(&self, colours: Vec<u32>, best: &mut Option<(Vec<u32>, Vec<u32>)>) {
        let n = colours.len();
        // smallest colour among non-singleton cells
        let mut sizes: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (v, &c) in colours.iter().enumerate() {
            sizes.entry(c).or_default().push(v);
        }
        let target = sizes
            .iter()
            .find(|(_, vs)| vs.len() > 1)
            .map(|(c, vs)| (*c, vs.clone()));
        let Some((cell, members)) = target else {
            let code = self.encode(&colours);
            match best {
                Some((b, _)) if *b <= code => {}
                _ => *best = Some((code, colours)),
            }
            return;
        };
        let mut seen_twins: Vec<Vec<(u8, u32, usize)>> = Vec::new();
        for &v in &members {
            let nbhd = self.adj[v].clone();
            if seen_twins.contains(&nbhd) {
                continue;
            }
            seen_twins.push(nbhd);
            let mut c: Vec<u32> = colours
                .iter()
                .enumerate()
                .map(|(u, &col)| 2 * col + u32::from(col == cell && u != v))
                .collect();
            // re-rank to dense colours
            let mut d = c.clone();
            d.sort_unstable();
            d.dedup();
            for x in c.iter_mut() {
                *x = d.binary_search(x).unwrap() as u32;
            }
            self.refine(&mut c);
            debug_assert!(count_cells(&c) <= n);
            self.descend(c, best);
        }
    }

    fn encode(&self, pos: &[u32]) -> Vec<u32> {
        let n = pos.len();
        let mut labels = vec![0u32; n];
        for (v, &p) in pos.iter().enumerate() {
            labels[p as usize] = self.g.labels[v];
        }
        let mut edges: Vec<(u32, u32, u32)> = self.g.edges.iter().map(|&(l, s, t)| (l, pos[s], pos[t])).collect();
        edges.sort_unstable();
        let mut code = Vec::with_capacity(2 + n + 3 * edges.len());
        code.push(n as u32);
        code.extend(labels);
        code.push(edges.len() as u32);
        for (l, s, t) in edges {
            code.extend([l, s, t]);
        }
        code
    }
}

fn count_cells(colours: &[u32]) -> usize {
    let mut c = colours.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(labels: &[u32], edges: &[(u32, usize, usize)]) -> CanonicalKey {
        canonical_labelling(&LabelledGraph { labels, edges }).0
    }

    #[test]
    fn empty_graph_has_a_key() {
        assert_eq!(key(&[], &[]).to_string(), "0||");
    }

    #[test]
    fn symmetric_graphs_terminate() {
        // 8 isolated vertices and a directed 6-cycle
        let k = key(&[0; 8], &[]);
        assert_eq!(k.as_slice()[0], 8);
        let cyc: Vec<(u32, usize, usize)> = (0..6).map(|i| (0, i, (i + 1) % 6)).collect();
        let rotated: Vec<(u32, usize, usize)> = (0..6).map(|i| (0, (i + 2) % 6, (i + 3) % 6)).collect();
        assert_eq!(key(&[0; 6], &cyc), key(&[0; 6], &rotated));
    }

    #[test]
    fn orientation_matters() {
        let a = key(&[0, 1], &[(0, 0, 1)]);
        let b = key(&[0, 1], &[(0, 1, 0)]);
        assert_ne!(a, b);
    }

    #[test]
    fn display_roundtrips() {
        let k = key(&[0, 0, 1], &[(2, 0, 1), (1, 1, 2)]);
        let parsed: CanonicalKey = k.to_string().parse().unwrap();
        assert_eq!(parsed, k);
        assert!("3|0.0|".parse::<CanonicalKey>().is_err());
    }
}
