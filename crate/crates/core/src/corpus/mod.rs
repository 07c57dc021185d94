//! Fixed knowledge bases and synthetic data generators.
//!
//! Every dataset is a catalog file, its CSV tables, a rule file and a
//! mapping file. Graph scenarios use the ancestor program over a `par`
//! edge table.

mod fixtures;
mod random;

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hybrid::{KnowledgeBase, LoadError};
use crate::relstore::{parse_catalog, Catalog, ColumnType, RelError};

pub use fixtures::{crimes_fixture, hierarchy_fixture, persons_fixture, Fixture, GoldenQuery};
pub use random::{random_instance, RandomInstance, RandomLimits};

/// Transitive closure with the recursive atom first, so a query bound on
/// the first argument needs one goal only.
pub const ANCESTOR_RULES: &str = "\
anc(?x,?y) :- par(?x,?y).
anc(?x,?z) :- anc(?x,?y), par(?y,?z).
";

const EDGE_MAPPING: &str = "map par(?x,?y) <- from par select src, dst.\n";
const EDGE_CATALOG: &str = "table par file par.csv columns src:sym,dst:sym\n";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Load(#[from] LoadError),
}

impl From<RelError> for CorpusError {
    fn from(e: RelError) -> Self {
        CorpusError::Load(LoadError::Relational(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// One path `c0 -> c1 -> ... -> cN`.
    Chain { n: usize },
    /// `k` disjoint paths of `l` edges each.
    Multichain { k: usize, l: usize },
    /// `edges` distinct directed edges drawn uniformly over `nodes` nodes.
    TcRandom { nodes: usize, edges: usize, seed: u64 },
    /// The crimes fixture with every identifier copied `scale` times.
    Crimes { scale: usize },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Chain { .. } => "chain",
            Scenario::Multichain { .. } => "multichain",
            Scenario::TcRandom { .. } => "tc-random",
            Scenario::Crimes { .. } => "crimes",
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let sizes: &[usize] = match self {
            Scenario::Chain { n } => &[*n],
            Scenario::Multichain { k, l } => &[*k, *l],
            Scenario::TcRandom { nodes, edges, .. } => {
                if nodes.checked_mul(*nodes).is_some_and(|cap| *edges > cap) {
                    return Err(CorpusError::Invalid(format!(
                        "{edges} distinct edges do not fit on {nodes} nodes"
                    )));
                }
                &[*nodes, *edges]
            }
            Scenario::Crimes { scale } => &[*scale],
        };
        if sizes.contains(&0) {
            return Err(CorpusError::Invalid(format!("{self}: sizes must be at least 1")));
        }
        Ok(())
    }

    /// The query the benchmarks pose for this scenario.
    pub fn default_query(&self) -> &'static str {
        match self {
            Scenario::Chain { .. } => "anc(c0,?y)",
            Scenario::Multichain { .. } => "anc(a0,?y)",
            Scenario::TcRandom { .. } => "anc(?x,?y)",
            Scenario::Crimes { .. } => "Perpetrator(?p)",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scenario::Chain { n } => write!(f, "chain n={n}"),
            Scenario::Multichain { k, l } => write!(f, "multichain k={k} l={l}"),
            Scenario::TcRandom { nodes, edges, seed } => {
                write!(f, "tc-random nodes={nodes} edges={edges} seed={seed}")
            }
            Scenario::Crimes { scale } => write!(f, "crimes scale={scale}"),
        }
    }
}

/// A complete knowledge base held as file contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub rules: String,
    pub mappings: String,
    pub catalog: String,
    /// (file name, CSV text) for each table file named in the catalog.
    pub tables: Vec<(String, String)>,
}

impl Dataset {
    /// Writes `catalog.txt`, `rules.dl`, `mappings.map` and the CSV files
    /// into `dir`, creating it if needed. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        let mut files: Vec<(&str, &str)> = vec![
            ("catalog.txt", &self.catalog),
            ("rules.dl", &self.rules),
            ("mappings.map", &self.mappings),
        ];
        files.extend(self.tables.iter().map(|(n, t)| (n.as_str(), t.as_str())));
        let mut written = Vec::new();
        for (name, content) in files {
            let path = dir.join(name);
            fs::write(&path, content).map_err(io(&path))?;
            written.push(path);
        }
        Ok(written)
    }

    /// Builds the knowledge base without touching the file system.
    pub fn load(&self) -> Result<KnowledgeBase, CorpusError> {
        let mut catalog = Catalog::new();
        for (schema, file) in parse_catalog(&self.catalog)? {
            let text = self
                .tables
                .iter()
                .find(|(n, _)| *n == file)
                .map(|(_, t)| t.as_str())
                .ok_or_else(|| CorpusError::Invalid(format!("no contents for table file {file}")))?;
            catalog.add_csv_text(schema, text)?;
        }
        Ok(KnowledgeBase::from_sources(&self.rules, &self.mappings, catalog)?)
    }

    /// Total number of data rows over all tables.
    pub fn row_count(&self) -> usize {
        self.tables
            .iter()
            .map(|(_, t)| t.lines().count().saturating_sub(1))
            .sum()
    }
}

fn edge_dataset(edges: impl IntoIterator<Item = (String, String)>) -> Dataset {
    let mut csv = String::from("src,dst\n");
    for (a, b) in edges {
        csv.push_str(&a);
        csv.push(',');
        csv.push_str(&b);
        csv.push('\n');
    }
    Dataset {
        rules: ANCESTOR_RULES.into(),
        mappings: EDGE_MAPPING.into(),
        catalog: EDGE_CATALOG.into(),
        tables: vec![("par.csv".into(), csv)],
    }
}

/// Labels `a`..`z`, `aa`, `ab`, ... for chain `index`.
pub fn chain_label(mut index: usize) -> String {
    let mut label = Vec::new();
    loop {
        label.push(b'a' + (index % 26) as u8);
        if index < 26 {
            break;
        }
        index = index / 26 - 1;
    }
    label.reverse();
    String::from_utf8(label).expect("ascii")
}

/// Distinct edges `(i, j)` over `0..nodes`, drawn uniformly in a
/// seed-determined order.
pub fn random_edges(nodes: usize, edges: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(edges);
    while out.len() < edges {
        let e = (rng.random_range(0..nodes), rng.random_range(0..nodes));
        if seen.insert(e) {
            out.push(e);
        }
    }
    out
}

/// Builds a scenario's dataset. A pure function of the scenario.
pub fn dataset(scenario: &Scenario) -> Result<Dataset, CorpusError> {
    scenario.validate()?;
    Ok(match *scenario {
        Scenario::Chain { n } => edge_dataset((0..n).map(|i| (format!("c{i}"), format!("c{}", i + 1)))),
        Scenario::Multichain { k, l } => edge_dataset((0..k).flat_map(|c| {
            let label = chain_label(c);
            (0..l).map(move |i| (format!("{label}{i}"), format!("{label}{}", i + 1)))
        })),
        Scenario::TcRandom { nodes, edges, seed } => edge_dataset(
            random_edges(nodes, edges, seed)
                .into_iter()
                .map(|(a, b)| (format!("n{a}"), format!("n{b}"))),
        ),
        Scenario::Crimes { scale } => scale_dataset(&crimes_fixture().dataset, scale)?,
    })
}

/// Writes a scenario's files into `out`.
pub fn generate(scenario: &Scenario, out: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    dataset(scenario)?.write(out)
}

/// Repeats every table row `scale` times; copy `j > 0` suffixes each
/// symbol cell with `_j` so the copies share no identifiers.
pub fn scale_dataset(base: &Dataset, scale: usize) -> Result<Dataset, CorpusError> {
    if scale == 0 {
        return Err(CorpusError::Invalid("scale must be at least 1".into()));
    }
    let schemas = parse_catalog(&base.catalog)?;
    let mut tables = Vec::with_capacity(base.tables.len());
    for (file, text) in &base.tables {
        let Some((schema, _)) = schemas.iter().find(|(_, f)| f == file) else {
            tables.push((file.clone(), text.clone()));
            continue;
        };
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let mut writer = csv::Writer::from_writer(Vec::new());
        let bad = |e: csv::Error| CorpusError::Invalid(format!("{file}: {e}"));
        writer.write_record(reader.headers().map_err(bad)?).map_err(bad)?;
        let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(bad)?;
        for j in 0..scale {
            for record in &records {
                let row: Vec<String> = record
                    .iter()
                    .zip(&schema.columns)
                    .map(|(cell, (_, ty))| match (j, ty) {
                        (0, _) | (_, ColumnType::Int | ColumnType::Dec | ColumnType::Str) => cell.to_string(),
                        (_, ColumnType::Sym) => format!("{cell}_{j}"),
                    })
                    .collect();
                writer.write_record(&row).map_err(bad)?;
            }
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CorpusError::Invalid(format!("{file}: {e}")))?;
        tables.push((file.clone(), String::from_utf8(bytes).expect("csv of utf-8 input")));
    }
    Ok(Dataset {
        tables,
        ..base.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::Mode;

    fn rows(d: &Dataset) -> Vec<String> {
        d.tables[0].1.lines().skip(1).map(String::from).collect()
    }

    #[test]
    fn chain_rows() {
        let d = dataset(&Scenario::Chain { n: 3 }).unwrap();
        assert_eq!(rows(&d), ["c0,c1", "c1,c2", "c2,c3"]);
    }

    #[test]
    fn multichain_rows() {
        let d = dataset(&Scenario::Multichain { k: 2, l: 2 }).unwrap();
        assert_eq!(rows(&d), ["a0,a1", "a1,a2", "b0,b1", "b1,b2"]);
    }

    #[test]
    fn chain_labels() {
        assert_eq!(chain_label(0), "a");
        assert_eq!(chain_label(25), "z");
        assert_eq!(chain_label(26), "aa");
        assert_eq!(chain_label(27), "ab");
        assert_eq!(chain_label(26 + 26 * 26), "aaa");
    }

    #[test]
    fn tc_random_is_deterministic_and_distinct() {
        let s = Scenario::TcRandom { nodes: 10, edges: 20, seed: 7 };
        let a = dataset(&s).unwrap();
        assert_eq!(a, dataset(&s).unwrap());
        let r = rows(&a);
        assert_eq!(r.len(), 20);
        assert_eq!(r.iter().collect::<BTreeSet<_>>().len(), 20);
        let other = dataset(&Scenario::TcRandom { nodes: 10, edges: 20, seed: 8 }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn invalid_sizes() {
        assert!(dataset(&Scenario::Chain { n: 0 }).is_err());
        assert!(dataset(&Scenario::Multichain { k: 1, l: 0 }).is_err());
        assert!(dataset(&Scenario::TcRandom { nodes: 2, edges: 5, seed: 1 }).is_err());
        assert!(dataset(&Scenario::Crimes { scale: 0 }).is_err());
    }

    #[test]
    fn generated_files_load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let written = generate(&Scenario::Chain { n: 4 }, dir.path()).unwrap();
        assert_eq!(written.len(), 4);
        let catalog = crate::relstore::load_catalog(dir.path().join("catalog.txt")).unwrap();
        assert_eq!(catalog.rows("par").unwrap().len(), 4);
    }

    #[test]
    fn chain_closure_size() {
        let kb = dataset(&Scenario::Chain { n: 10 }).unwrap().load().unwrap();
        let q = kb.parse_query("anc(?x,?y)").unwrap();
        assert_eq!(kb.answer(&q, Mode::Forward).unwrap().len(), 55);
    }

    #[test]
    fn scaled_crimes_repeat_answers() {
        let d = dataset(&Scenario::Crimes { scale: 3 }).unwrap();
        assert_eq!(d.row_count(), 3 * crimes_fixture().dataset.row_count());
        let kb = d.load().unwrap();
        let q = kb.parse_query("sanctionedBy(?p,?a)").unwrap();
        let got = kb.answer(&q, Mode::Hybrid).unwrap();
        assert_eq!(
            got.to_tsv(false),
            "?p\t?a\np1\tart296\np1_1\tart296\np1_2\tart296\n"
        );
    }
}
