use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use rqa_core::corpus::{dataset, generate, CorpusError, Scenario};
use rqa_core::hybrid::augment;
use rqa_core::mapping::{parse_mappings, validate_coverage, MappingError};
use rqa_core::{
    load_catalog, magic_transform, parse_program, AnswerError, Catalog, KnowledgeBase, LoadError, MappingSet, Mode,
    Program, ProgramError, QueryError,
};

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Safety(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    MappingGap(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Parse(_) => 2,
            Failure::Safety(_) => 3,
            Failure::Data(_) => 4,
            Failure::MappingGap(_) => 5,
        }
    }
}

fn in_file(path: &Path, e: impl std::fmt::Display) -> String {
    format!("{}: {e}", path.display())
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Data(in_file(path, e)))
}

fn program_failure(path: &Path, e: ProgramError) -> Failure {
    match e {
        ProgramError::Unsafe(_) => Failure::Safety(in_file(path, e)),
        _ => Failure::Parse(in_file(path, e)),
    }
}

fn mapping_failure(path: &Path, e: MappingError) -> Failure {
    match e {
        MappingError::Invalid { .. } | MappingError::Relational(_) => Failure::Data(in_file(path, e)),
        MappingError::Unmapped(_) => Failure::MappingGap(in_file(path, e)),
        _ => Failure::Parse(in_file(path, e)),
    }
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| program_failure(path, e))
}

/// Loads a catalog and scans every table once so malformed rows surface
/// before evaluation.
fn load_tables(path: &Path) -> Result<Catalog, Failure> {
    let catalog = load_catalog(path).map_err(|e| Failure::Data(in_file(path, e)))?;
    for t in catalog.table_names() {
        catalog.rows(t).map_err(|e| Failure::Data(in_file(path, e)))?;
    }
    Ok(catalog)
}

fn load_mappings(path: &Path, catalog: &Catalog, program: &Program) -> Result<MappingSet, Failure> {
    let mappings = parse_mappings(&read(path)?, catalog).map_err(|e| mapping_failure(path, e))?;
    mappings
        .check_arities(program)
        .map_err(|e| mapping_failure(path, e))?;
    Ok(mappings)
}

pub fn check(rules: &Path, mappings: Option<&Path>, catalog: Option<&Path>) -> Result<String, Failure> {
    let program = load_program(rules)?;
    let catalog = catalog.map(load_tables).transpose()?;
    if let (Some(path), Some(catalog)) = (mappings, &catalog) {
        let mappings = load_mappings(path, catalog, &program)?;
        for note in validate_coverage(&mappings, &program) {
            eprintln!("{}", note);
        }
    }
    Ok("OK\n".into())
}

fn answer_failure(e: AnswerError) -> Failure {
    match e {
        AnswerError::Unmapped(_) => Failure::MappingGap(e.to_string()),
        AnswerError::Program(p) => Failure::Parse(p.to_string()),
        AnswerError::Mapping(MappingError::Unmapped(_)) => Failure::MappingGap(e.to_string()),
        AnswerError::Engine(_) | AnswerError::Mapping(_) => Failure::Data(e.to_string()),
    }
}

fn query_failure(e: QueryError) -> Failure {
    match e {
        QueryError::NoAtoms | QueryError::Unsafe(_) => Failure::Safety(format!("query: {e}")),
        _ => Failure::Parse(format!("query: {e}")),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn query(
    rules: &Path,
    mappings: &Path,
    catalog: &Path,
    text: &str,
    mode: Mode,
    explain: bool,
    stats: bool,
) -> Result<String, Failure> {
    let program = load_program(rules)?;
    let catalog = load_tables(catalog)?;
    let mappings = load_mappings(mappings, &catalog, &program)?;
    let kb = KnowledgeBase {
        program,
        mappings,
        catalog,
    };
    let q = kb.parse_query(text).map_err(query_failure)?;
    if explain {
        let program = augment(&kb.program, &kb.mappings).map_err(|e| Failure::Parse(e.to_string()))?;
        match mode {
            Mode::Magic | Mode::Hybrid => {
                let mp = magic_transform(&program, &q).map_err(|e| Failure::Parse(e.to_string()))?;
                eprint!("{mp}");
            }
            Mode::Naive | Mode::Forward => eprint!("{program}"),
        }
    }
    let answers = kb.answer(&q, mode).map_err(answer_failure)?;
    if stats {
        eprintln!("wall_ms\t{:.3}", answers.stats.wall_ms);
    }
    Ok(answers.to_tsv(stats))
}

fn corpus_failure(e: CorpusError) -> Failure {
    match e {
        CorpusError::Load(LoadError::Program(p)) => Failure::Parse(p.to_string()),
        CorpusError::Load(LoadError::Mapping(m)) => Failure::Parse(m.to_string()),
        other => Failure::Data(other.to_string()),
    }
}

pub fn gen(scenario: &Scenario, out: &Path) -> Result<String, Failure> {
    let written = generate(scenario, out).map_err(corpus_failure)?;
    let mut report = String::new();
    for path in written {
        writeln!(report, "{}", path.display()).expect("string write");
    }
    Ok(report)
}

const BENCH_HEADER: &str = "scenario\tmode\tanswers\tfacts_fetched\tfacts_derived\trule_firings\titerations\n";

/// One counter row per mode on stdout; wall-clock times go to stderr so
/// that stdout stays identical across runs.
pub fn bench(scenario: &Scenario, modes: &[Mode], query: Option<&str>) -> Result<String, Failure> {
    let kb = dataset(scenario)
        .and_then(|d| d.load())
        .map_err(corpus_failure)?;
    let text = query.unwrap_or(scenario.default_query());
    let q = kb.parse_query(text).map_err(query_failure)?;
    let mut out = String::from(BENCH_HEADER);
    for &mode in modes {
        let a = kb.answer(&q, mode).map_err(answer_failure)?;
        let s = &a.stats;
        writeln!(
            out,
            "{scenario}\t{mode}\t{}\t{}\t{}\t{}\t{}",
            a.len(),
            s.facts_fetched,
            s.facts_derived,
            s.rule_firings,
            s.iterations
        )
        .expect("string write");
        eprintln!("{scenario}\t{mode}\twall_ms\t{:.3}", s.wall_ms);
    }
    Ok(out)
}
