//! Dataset bundle: five TSV files plus `manifest.json`.
//!
//! ```text
//! road_vertices.tsv  id  x  y
//! road_edges.tsv     src  dst  meters
//! pois.tsv           id  vertex  offset  term:weight,...  user,...
//! users.tsv          id  vertex  offset  term:weight,...  friend,...
//! social_edges.tsv   src  dst  prob
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. External ids are
//! arbitrary `u64`s and are remapped to dense ranges in file order.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::*;
use crate::error::{Error, Result};

pub const FILES: [&str; 5] = [
    "road_vertices.tsv",
    "road_edges.tsv",
    "pois.tsv",
    "users.tsv",
    "social_edges.tsv",
];

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub vertices: usize,
    pub road_edges: usize,
    pub users: usize,
    pub pois: usize,
    pub social_edges: usize,
    pub keywords: usize,
    /// SHA-256 over the five TSV files, hex encoded.
    pub content_hash: String,
}

pub const FORMAT_VERSION: u32 = 1;

struct Lines<'a> {
    file: &'a str,
    text: &'a str,
}

impl<'a> Lines<'a> {
    fn rows(&self) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
        let text = self.text;
        text.lines().enumerate().filter_map(|(i, l)| {
            let l = l.trim_end_matches('\r');
            if l.trim().is_empty() || l.starts_with('#') {
                None
            } else {
                Some((i + 1, l.split('\t').collect()))
            }
        })
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            file: self.file.to_string(),
            line,
            message: message.into(),
        }
    }

    fn field<T: std::str::FromStr>(
        &self,
        line: usize,
        cols: &[&str],
        i: usize,
        name: &str,
    ) -> Result<T> {
        let raw = cols
            .get(i)
            .ok_or_else(|| self.err(line, format!("missing column '{name}'")))?;
        raw.trim()
            .parse()
            .map_err(|_| self.err(line, format!("cannot parse {name} '{raw}'")))
    }

    fn expect_cols(&self, line: usize, cols: &[&str], min: usize) -> Result<()> {
        if cols.len() < min {
            return Err(self.err(
                line,
                format!("expected at least {min} columns, found {}", cols.len()),
            ));
        }
        Ok(())
    }
}

fn read(dir: &Path, name: &str) -> Result<String> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| Error::io(path, e))
}

fn parse_list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_terms<'a>(lines: &Lines<'a>, line: usize, raw: &'a str) -> Result<Vec<(&'a str, f64)>> {
    parse_list(raw)
        .map(|item| match item.rsplit_once(':') {
            Some((term, w)) => {
                let w: f64 = w
                    .parse()
                    .map_err(|_| lines.err(line, format!("bad keyword weight in '{item}'")))?;
                if !(w.is_finite() && w > 0.0) {
                    return Err(
                        lines.err(line, format!("keyword weight must be positive in '{item}'"))
                    );
                }
                Ok((term, w))
            }
            None => Ok((item, 1.0)),
        })
        .collect()
}

fn dense(lines: &Lines, map: &HashMap<u64, u32>, line: usize, ext: u64, what: &str) -> Result<u32> {
    map.get(&ext)
        .copied()
        .ok_or_else(|| lines.err(line, format!("dangling reference to {what} {ext}")))
}

struct RawObject<'a> {
    line: usize,
    vertex: u64,
    offset: f64,
    terms: Vec<(&'a str, f64)>,
    refs: Vec<u64>,
}

fn parse_objects<'a>(lines: &Lines<'a>, ids: &mut Vec<u64>) -> Result<Vec<RawObject<'a>>> {
    let mut out = Vec::new();
    for (line, cols) in lines.rows() {
        lines.expect_cols(line, &cols, 3)?;
        let id: u64 = lines.field(line, &cols, 0, "id")?;
        let vertex: u64 = lines.field(line, &cols, 1, "vertex")?;
        let offset: f64 = lines.field(line, &cols, 2, "offset")?;
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(lines.err(line, "offset must be non-negative"));
        }
        let terms = parse_terms(lines, line, cols.get(3).copied().unwrap_or(""))?;
        let refs = parse_list(cols.get(4).copied().unwrap_or(""))
            .map(|r| {
                r.parse::<u64>()
                    .map_err(|_| lines.err(line, format!("bad id '{r}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        ids.push(id);
        out.push(RawObject {
            line,
            vertex,
            offset,
            terms,
            refs,
        });
    }
    Ok(out)
}

fn index_of(lines: &Lines, ids: &[u64], what: &str) -> Result<HashMap<u64, u32>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, &id) in ids.iter().enumerate() {
        if map.insert(id, i as u32).is_some() {
            return Err(lines.err(0, format!("duplicate {what} id {id}")));
        }
    }
    Ok(map)
}

/// Loads a dataset bundle from `dir`. The manifest, when present, must match.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<GeoSocialDataset> {
    let dir = dir.as_ref();
    let texts: Vec<String> = FILES.iter().map(|f| read(dir, f)).collect::<Result<_>>()?;
    let ds = parse_dataset(&texts)?;
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        let raw = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&raw).map_err(|e| Error::Dataset(format!("bad manifest: {e}")))?;
        let hash = content_hash(&texts);
        if manifest.content_hash != hash {
            return Err(Error::Dataset(format!(
                "manifest hash {} does not match file contents {}",
                manifest.content_hash, hash
            )));
        }
    }
    Ok(ds)
}

fn parse_dataset(texts: &[String]) -> Result<GeoSocialDataset> {
    let vl = Lines {
        file: FILES[0],
        text: &texts[0],
    };
    let el = Lines {
        file: FILES[1],
        text: &texts[1],
    };
    let pl = Lines {
        file: FILES[2],
        text: &texts[2],
    };
    let ul = Lines {
        file: FILES[3],
        text: &texts[3],
    };
    let sl = Lines {
        file: FILES[4],
        text: &texts[4],
    };

    let mut vertex_ids = Vec::new();
    let mut coords = Vec::new();
    for (line, cols) in vl.rows() {
        vl.expect_cols(line, &cols, 3)?;
        vertex_ids.push(vl.field::<u64>(line, &cols, 0, "id")?);
        coords.push((
            vl.field(line, &cols, 1, "x")?,
            vl.field(line, &cols, 2, "y")?,
        ));
    }
    let vmap = index_of(&vl, &vertex_ids, "vertex")?;

    let mut edges = Vec::new();
    for (line, cols) in el.rows() {
        el.expect_cols(line, &cols, 3)?;
        let a = dense(&el, &vmap, line, el.field(line, &cols, 0, "src")?, "vertex")?;
        let b = dense(&el, &vmap, line, el.field(line, &cols, 1, "dst")?, "vertex")?;
        let w: f64 = el.field(line, &cols, 2, "meters")?;
        if !(w.is_finite() && w > 0.0) {
            return Err(el.err(line, "edge length must be positive"));
        }
        edges.push((a, b, w));
    }
    let road = RoadNetwork::new(coords, edges)?;

    let mut poi_ids = Vec::new();
    let raw_pois = parse_objects(&pl, &mut poi_ids)?;
    if raw_pois.is_empty() {
        return Err(Error::Dataset("no POIs".into()));
    }
    let mut user_ids = Vec::new();
    let raw_users = parse_objects(&ul, &mut user_ids)?;
    index_of(&pl, &poi_ids, "POI")?;
    let umap = index_of(&ul, &user_ids, "user")?;

    let mut terms: Vec<String> = raw_pois
        .iter()
        .chain(raw_users.iter())
        .flat_map(|o| o.terms.iter().map(|t| t.0.to_string()))
        .collect();
    terms.sort();
    terms.dedup();
    let vocab = Vocabulary::from_terms(terms);

    let keywords = |lines: &Lines, o: &RawObject| -> Result<Vec<(KeywordId, f64)>> {
        let mut kws: Vec<(KeywordId, f64)> = o
            .terms
            .iter()
            .map(|&(t, w)| (vocab.id(t).expect("term registered"), w))
            .collect();
        kws.sort_by_key(|e| e.0);
        if kws.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(lines.err(o.line, "keyword listed twice"));
        }
        Ok(kws)
    };

    let mut pois = Vec::with_capacity(raw_pois.len());
    for o in &raw_pois {
        let vertex = dense(&pl, &vmap, o.line, o.vertex, "vertex")?;
        let checkins = o
            .refs
            .iter()
            .map(|&r| dense(&pl, &umap, o.line, r, "user"))
            .collect::<Result<Vec<_>>>()?;
        pois.push(Poi {
            loc: Location {
                vertex,
                offset: o.offset,
            },
            keywords: keywords(&pl, o)?,
            checkins,
        });
    }
    let mut users = Vec::with_capacity(raw_users.len());
    for o in &raw_users {
        let vertex = dense(&ul, &vmap, o.line, o.vertex, "vertex")?;
        let friends = o
            .refs
            .iter()
            .map(|&r| dense(&ul, &umap, o.line, r, "user"))
            .collect::<Result<Vec<_>>>()?;
        users.push(User {
            loc: Location {
                vertex,
                offset: o.offset,
            },
            keywords: keywords(&ul, o)?,
            friends,
        });
    }

    let mut social_edges = Vec::new();
    for (line, cols) in sl.rows() {
        sl.expect_cols(line, &cols, 3)?;
        let a = dense(&sl, &umap, line, sl.field(line, &cols, 0, "src")?, "user")?;
        let b = dense(&sl, &umap, line, sl.field(line, &cols, 1, "dst")?, "user")?;
        let w: f64 = sl.field(line, &cols, 2, "prob")?;
        if !(0.0..=1.0).contains(&w) {
            return Err(sl.err(line, format!("probability {w} outside [0, 1]")));
        }
        social_edges.push((a, b, w));
    }
    let social = SocialNetwork::new(users.len(), social_edges)?;
    let ids = IdMap {
        vertices: vertex_ids,
        users: user_ids,
        pois: poi_ids,
    };
    GeoSocialDataset::new(road, social, users, pois, vocab, ids)
}

fn content_hash(texts: &[String]) -> String {
    let mut h = Sha256::new();
    for (name, text) in FILES.iter().zip(texts) {
        h.update(name.as_bytes());
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    hex::encode(h.finalize())
}

fn join_terms(out: &mut String, vocab: &Vocabulary, kws: &[(KeywordId, f64)]) {
    for (i, &(t, w)) in kws.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{}:{}", vocab.term(t), w);
    }
}

fn join_ids(out: &mut String, ids: impl Iterator<Item = u64>) {
    for (i, id) in ids.enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "{id}");
    }
}

/// Renders the five TSV files in `FILES` order.
pub fn render_dataset(ds: &GeoSocialDataset) -> [String; 5] {
    let ids = &ds.ids;
    let mut v = String::from("# id\tx\ty\n");
    for i in 0..ds.road.num_vertices() {
        let (x, y) = ds.road.coord(i as VertexId);
        let _ = writeln!(v, "{}\t{}\t{}", ids.vertices[i], x, y);
    }
    let mut e = String::from("# src\tdst\tmeters\n");
    for &(a, b, w) in ds.road.edges() {
        let _ = writeln!(
            e,
            "{}\t{}\t{}",
            ids.vertices[a as usize], ids.vertices[b as usize], w
        );
    }
    let mut p = String::from("# id\tvertex\toffset\tkeywords\tcheckins\n");
    for (i, poi) in ds.pois.iter().enumerate() {
        let _ = write!(
            p,
            "{}\t{}\t{}\t",
            ids.pois[i], ids.vertices[poi.loc.vertex as usize], poi.loc.offset
        );
        join_terms(&mut p, &ds.vocab, &poi.keywords);
        p.push('\t');
        join_ids(&mut p, poi.checkins.iter().map(|&u| ids.users[u as usize]));
        p.push('\n');
    }
    let mut u = String::from("# id\tvertex\toffset\tkeywords\tfriends\n");
    for (i, user) in ds.users.iter().enumerate() {
        let _ = write!(
            u,
            "{}\t{}\t{}\t",
            ids.users[i], ids.vertices[user.loc.vertex as usize], user.loc.offset
        );
        join_terms(&mut u, &ds.vocab, &user.keywords);
        u.push('\t');
        join_ids(&mut u, user.friends.iter().map(|&f| ids.users[f as usize]));
        u.push('\n');
    }
    let mut s = String::from("# src\tdst\tprob\n");
    for &(a, b, w) in ds.social.edges() {
        let _ = writeln!(
            s,
            "{}\t{}\t{}",
            ids.users[a as usize], ids.users[b as usize], w
        );
    }
    [v, e, p, u, s]
}

/// Writes the bundle and its manifest into `dir`, creating it if needed.
pub fn write_dataset(ds: &GeoSocialDataset, dir: impl AsRef<Path>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let texts = render_dataset(ds);
    for (name, text) in FILES.iter().zip(texts.iter()) {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Error::io(path, e))?;
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        vertices: ds.road.num_vertices(),
        road_edges: ds.road.num_edges(),
        users: ds.num_users(),
        pois: ds.num_pois(),
        social_edges: ds.social.num_edges(),
        keywords: ds.vocab.len(),
        content_hash: content_hash(&texts),
    };
    let path = dir.join(MANIFEST);
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(path, e))?;
    Ok(manifest)
}

/// Manifest for an in-memory dataset, as `write_dataset` would produce it.
pub fn manifest_of(ds: &GeoSocialDataset) -> Manifest {
    let texts = render_dataset(ds);
    Manifest {
        format_version: FORMAT_VERSION,
        vertices: ds.road.num_vertices(),
        road_edges: ds.road.num_edges(),
        users: ds.num_users(),
        pois: ds.num_pois(),
        social_edges: ds.social.num_edges(),
        keywords: ds.vocab.len(),
        content_hash: content_hash(&texts),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_files(dir: &Path, files: [&str; 5]) {
        for (name, text) in FILES.iter().zip(files) {
            fs::write(dir.join(name), text).unwrap();
        }
    }

    const VERTS: &str = "0\t0\t0\n1\t1\t0\n";
    const EDGES: &str = "0\t1\t10\n";
    const POIS: &str = "7\t0\t0\tbar:2,cafe:1\t100\n";
    const USERS: &str = "100\t1\t0\tbar:1\t200\n200\t0\t0\t\t100\n";
    const SOCIAL: &str = "100\t200\t0.5\n200\t100\t0.25\n";

    #[test]
    fn parses_minimal_bundle() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), [VERTS, EDGES, POIS, USERS, SOCIAL]);
        let ds = load_dataset(dir.path()).unwrap();
        assert_eq!(ds.num_pois(), 1);
        assert_eq!(ds.num_users(), 2);
        assert_eq!(ds.ids.pois, vec![7]);
        assert_eq!(ds.pois[0].checkins, vec![0]);
        assert_eq!(ds.users[0].friends, vec![1]);
        assert_eq!(ds.vocab.terms(), ["bar", "cafe"]);
    }

    #[test]
    fn bad_probability_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            [VERTS, EDGES, POIS, USERS, "# header\n100\t200\t1.5\n"],
        );
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("social_edges.tsv:2"), "{err}");
    }

    #[test]
    fn empty_poi_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), [VERTS, EDGES, "# nothing\n", USERS, SOCIAL]);
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(err.contains("no POIs"), "{err}");
    }

    #[test]
    fn dangling_vertex_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), [VERTS, "0\t9\t10\n", POIS, USERS, SOCIAL]);
        let err = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains("road_edges.tsv:1") && err.contains("dangling"),
            "{err}"
        );
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_files(a.path(), [VERTS, EDGES, POIS, USERS, SOCIAL]);
        let ds = load_dataset(a.path()).unwrap();
        let m1 = write_dataset(&ds, b.path()).unwrap();
        let ds2 = load_dataset(b.path()).unwrap();
        let m2 = write_dataset(&ds2, a.path()).unwrap();
        assert_eq!(m1, m2);
        for f in FILES {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn tampered_manifest_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_files(dir.path(), [VERTS, EDGES, POIS, USERS, SOCIAL]);
        let ds = load_dataset(dir.path()).unwrap();
        write_dataset(&ds, dir.path()).unwrap();
        fs::write(dir.path().join("road_edges.tsv"), "0\t1\t11\n").unwrap();
        assert!(load_dataset(dir.path()).is_err());
    }
}
