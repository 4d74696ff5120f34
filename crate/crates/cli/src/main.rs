//! The `xmlcube` command line: wires ingestion, cube building, the store,
//! the join index, view selection, querying, clustering aggregation and
//! structure mining into one pipeline.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on data errors. Every
//! subcommand is deterministic given its inputs: directories are read in
//! name order and all writers emit canonical bytes.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use xmlcube::gen;
use xmlcube::ingest;
use xmlcube::io::{self, CliError};
use xmlcube_core::cube::{self, DocumentInput, XmlCube};
use xmlcube_core::joinindex;
use xmlcube_core::mcm::Mcm;
use xmlcube_core::opac;
use xmlcube_core::query::{self, AnalyticalQuery};
use xmlcube_core::store::{import_cube, XCubeStore};
use xmlcube_core::structminer;
use xmlcube_core::viewsel::{self, CostModel, CoverageOutcome, MaterializedView, Workload, WorkloadQuery};
use xmlcube_core::xml;

#[derive(Parser)]
#[command(name = "xmlcube", version, about = "XML warehouse engine: build, store, index and query multidimensional XML cubes")]
struct Cli {
    /// Worker cap for parallel stages (document gating).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Print extra statistics to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Describe source files as XML descriptor documents.
    Ingest {
        /// Directory of source files (walked recursively).
        #[arg(long)]
        src: PathBuf,
        /// Optional annotation file with per-object `specific` pairs.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Output directory for descriptor documents.
        #[arg(long)]
        out: PathBuf,
    },
    /// Gate documents against a model and emit the cube's fact documents.
    BuildCube {
        /// Model configuration file.
        #[arg(long)]
        mcm: PathBuf,
        /// Directory of input XML documents.
        #[arg(long)]
        src: PathBuf,
        /// Output directory: Schema.xml, fact documents, rejections.xml.
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a built cube into the two-document store.
    Import {
        /// Directory produced by build-cube.
        #[arg(long)]
        cube: PathBuf,
        /// Store directory (defaults to $XMLCUBE_DATA/store).
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Build or check the join-eliminating index.
    Index {
        #[command(subcommand)]
        action: IndexCmd,
    },
    /// Select, materialize and query materialized views.
    Views {
        #[command(subcommand)]
        action: ViewsCmd,
    },
    /// Evaluate an analytical query against the store, the index or views.
    Query {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Query file.
        #[arg(long)]
        query: PathBuf,
        /// Answer from this index document instead of joining the store.
        #[arg(long)]
        via_index: Option<PathBuf>,
        /// Answer from the materialized views in this directory.
        #[arg(long)]
        via_views: Option<PathBuf>,
        /// Aggregate-level mapping applied to the store before evaluation.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        /// Result file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster a dimension's members into a new aggregate level.
    Opac {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        dimension: String,
        /// Comma-separated measure list.
        #[arg(long)]
        measures: String,
        /// Comma-separated descriptor attribute list.
        #[arg(long, default_value = "")]
        descriptors: String,
        /// Cluster count; the recommended cut when omitted.
        #[arg(long)]
        k: Option<usize>,
        /// Output directory: dendrogram.xml, scores.xml, aggregate-level.xml.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine association rules over the tag structure of a corpus.
    MineStructure {
        /// Directory of XML documents.
        #[arg(long)]
        corpus: PathBuf,
        /// Minimum support fraction in (0, 1].
        #[arg(long)]
        minsup: f64,
        /// Minimum confidence in (0, 1].
        #[arg(long)]
        minconf: f64,
        /// Rules output file.
        #[arg(long)]
        out: PathBuf,
        /// Minimal-DTD diagnostic file (defaults next to the rules file).
        #[arg(long)]
        dtd_out: Option<PathBuf>,
    },
    /// Generate synthetic warehouses, workloads and corpora.
    Gen {
        #[command(subcommand)]
        what: GenCmd,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Build Index.xml from the store.
    Build {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Index file (defaults to Index.xml inside the store directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify an index against the store: provenance and full content.
    Check {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        index: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SelectionArgs {
    #[arg(long)]
    store: Option<PathBuf>,
    /// Directory of query files, optionally with frequencies.xml.
    #[arg(long)]
    workload: PathBuf,
    /// Similarity threshold for query clustering, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Storage budget in view rows; every beneficial view fits by default.
    #[arg(long)]
    budget: Option<u64>,
    /// Maintenance weight in the objective.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
}

#[derive(Subcommand)]
enum ViewsCmd {
    /// Cluster the workload, derive candidates and run the greedy selection.
    Select {
        #[command(flatten)]
        selection: SelectionArgs,
        /// Output directory: candidates.xml and selection.xml.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the selection and materialize the selected views.
    Materialize {
        #[command(flatten)]
        selection: SelectionArgs,
        /// Materialize every candidate, not just the greedy selection.
        #[arg(long)]
        all: bool,
        /// Output directory for view-<id>.xml documents.
        #[arg(long)]
        out: PathBuf,
    },
    /// Answer one query from materialized views, without base data.
    Answer {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Directory of view-<id>.xml documents.
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        query: PathBuf,
        /// Result file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Generate a populated store.
    Warehouse {
        #[arg(long, default_value_t = 3)]
        dims: usize,
        #[arg(long, default_value_t = 4)]
        attrs: usize,
        #[arg(long, default_value_t = 30)]
        members: usize,
        #[arg(long, default_value_t = 1000)]
        cells: usize,
        /// Add Day/Month/Year dimensions with a hierarchy.
        #[arg(long)]
        with_time_hierarchy: bool,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a workload of query files against a store.
    Workload {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        queries: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate an XML document corpus.
    Corpus {
        #[arg(long, default_value_t = 50)]
        docs: usize,
        /// Generate documents against this model, with controlled coverage.
        #[arg(long)]
        mcm: Option<PathBuf>,
        /// Presence probability of mandatory values (model corpora only).
        #[arg(long, default_value_t = 0.85)]
        coverage: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes.
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::Ingest { src, annotations, out } => {
            let described = ingest::describe_dir(&src, annotations.as_deref())?;
            std::fs::create_dir_all(&out)
                .map_err(|e| CliError::data("cannot create output directory", e))?;
            let written = ingest::write_descriptors(&out, &described.descriptors)?;
            for (id, reason) in &described.errors {
                eprintln!("warning: skipped '{id}': {reason}");
            }
            println!(
                "ingest: {} descriptors written to {}, {} sources skipped",
                written.len(),
                out.display(),
                described.errors.len()
            );
            Ok(())
        }
        Command::BuildCube { mcm, src, out } => {
            let model = load_mcm(&mcm)?;
            let docs = read_documents(&src)?;
            let built = build_cube_parallel(&model, docs, threads)?;
            io::write_file(&out.join("Schema.xml"), &built.schema.to_document_string())?;
            for (i, fact) in built.facts.iter().enumerate() {
                io::write_file(
                    &out.join(format!("fact-{:05}.xml", i + 1)),
                    &fact.to_document_string(),
                )?;
            }
            io::write_file(
                &out.join("rejections.xml"),
                &cube::rejections_report(&built).to_document_string(),
            )?;
            println!(
                "build-cube: {} facts, {} rejected, {} malformed -> {}",
                built.facts.len(),
                built.rejected.len(),
                built.malformed.len(),
                out.display()
            );
            Ok(())
        }
        Command::Import { cube: cube_dir, store } => {
            let store_dir = io::resolve_store_dir(store)?;
            let built = read_cube_dir(&cube_dir)?;
            let imported = import_cube(&built).map_err(|e| CliError::data("import", e))?;
            io::write_store(&store_dir, &imported)?;
            println!(
                "import: {} cells, {} members -> {}",
                imported.cell_count(),
                imported.member_count(),
                store_dir.display()
            );
            Ok(())
        }
        Command::Index { action } => match action {
            IndexCmd::Build { store, out } => {
                let store_dir = io::resolve_store_dir(store)?;
                let store = io::read_store(&store_dir)?;
                let index = joinindex::build_index(&store)
                    .map_err(|e| CliError::data("index build", e))?;
                let path = out.unwrap_or_else(|| store_dir.join(io::INDEX_FILE));
                io::write_index(&path, &index)?;
                println!("index: {} cells -> {}", index.cells.len(), path.display());
                Ok(())
            }
            IndexCmd::Check { store, index } => {
                let store_dir = io::resolve_store_dir(store)?;
                let store = io::read_store(&store_dir)?;
                let path = index.unwrap_or_else(|| store_dir.join(io::INDEX_FILE));
                let loaded = io::read_index(&path, &store)?;
                if loaded.provenance != store.content_hash() {
                    return Err(CliError::Data(format!(
                        "index '{}' is stale: rebuild it",
                        path.display()
                    )));
                }
                let rebuilt = joinindex::build_index(&store)
                    .map_err(|e| CliError::data("index check", e))?;
                if rebuilt != loaded {
                    return Err(CliError::Data(format!(
                        "index '{}' does not match the store contents",
                        path.display()
                    )));
                }
                println!("index: ok ({} cells)", loaded.cells.len());
                Ok(())
            }
        },
        Command::Views { action } => match action {
            ViewsCmd::Select { selection, out } => {
                let (force, result, candidates) = run_selection(&selection)?;
                let _ = force;
                io::write_file(
                    &out.join("candidates.xml"),
                    &candidates_xml(&candidates).to_document_string(),
                )?;
                io::write_file(
                    &out.join("selection.xml"),
                    &viewsel::selection_report(&result).to_document_string(),
                )?;
                println!(
                    "views: {} candidates, {} selected (budget {} used {}) -> {}",
                    candidates.len(),
                    result.selected.len(),
                    result.budget_limit,
                    result.budget_used,
                    out.display()
                );
                Ok(())
            }
            ViewsCmd::Materialize { selection, all, out } => {
                let (store, result, candidates) = run_selection(&selection)?;
                std::fs::create_dir_all(&out)
                    .map_err(|e| CliError::data("cannot create output directory", e))?;
                let mut written = 0;
                for candidate in &candidates {
                    if !all && !result.selected.contains(&candidate.id) {
                        continue;
                    }
                    let view = viewsel::materialize(&store, candidate)
                        .map_err(|e| CliError::data("materialize", e))?;
                    io::write_file(
                        &out.join(format!("view-{}.xml", view.id)),
                        &view.to_document(),
                    )?;
                    written += 1;
                }
                println!("views: {written} materialized -> {}", out.display());
                Ok(())
            }
            ViewsCmd::Answer { store, views, query, out } => {
                let store_dir = io::resolve_store_dir(store)?;
                let store = io::read_store(&store_dir)?;
                let q = load_query(&query)?;
                let views = read_views_dir(&views, &store)?;
                match viewsel::answer_from_views(&store, &views, &q)
                    .map_err(|e| CliError::data("views answer", e))?
                {
                    CoverageOutcome::Covered { view, table } => {
                        if cli.verbose {
                            eprintln!("answered from view '{view}'");
                        }
                        emit_result(&table, q.group_by.len(), out.as_deref())
                    }
                    CoverageOutcome::NotCovered => Err(CliError::Data(
                        "no materialized view covers this query".to_string(),
                    )),
                }
            }
        },
        Command::Query { store, query, via_index, via_views, aggregate, out } => {
            let store_dir = io::resolve_store_dir(store)?;
            let mut store = io::read_store(&store_dir)?;
            let q = load_query(&query)?;
            if aggregate.is_some() && via_index.is_some() {
                return Err(CliError::Usage(
                    "--aggregate cannot be combined with --via-index; rebuild the index from the augmented store".to_string(),
                ));
            }
            if let Some(path) = aggregate {
                let doc = io::load_xml(&path)?;
                let level = opac::AggregateLevel::from_xml(&doc)
                    .map_err(|e| CliError::data("aggregate level", e))?;
                store = level.apply(&store).map_err(|e| CliError::data("aggregate level", e))?;
            }
            let (table, lookups) = if let Some(path) = via_index {
                let index = io::read_index(&path, &store)?;
                let (table, stats) = joinindex::evaluate_indexed(&store, &index, &q)
                    .map_err(|e| CliError::data("query", e))?;
                (table, stats.member_lookups)
            } else if let Some(dir) = via_views {
                let views = read_views_dir(&dir, &store)?;
                match viewsel::answer_from_views(&store, &views, &q)
                    .map_err(|e| CliError::data("query", e))?
                {
                    CoverageOutcome::Covered { table, .. } => (table, 0),
                    CoverageOutcome::NotCovered => {
                        return Err(CliError::Data(
                            "no materialized view covers this query".to_string(),
                        ))
                    }
                }
            } else {
                let (table, stats) = query::evaluate_with_stats(&store, &q)
                    .map_err(|e| CliError::data("query", e))?;
                (table, stats.member_lookups)
            };
            if cli.verbose {
                eprintln!("member lookups: {lookups}");
            }
            emit_result(&table, q.group_by.len(), out.as_deref())
        }
        Command::Opac { store, dimension, measures, descriptors, k, out } => {
            let store_dir = io::resolve_store_dir(store)?;
            let store = io::read_store(&store_dir)?;
            let measures: Vec<String> = split_list(&measures);
            let descriptors: Vec<String> = split_list(&descriptors);
            if measures.is_empty() && descriptors.is_empty() {
                return Err(CliError::Usage(
                    "opac needs at least one measure or descriptor".to_string(),
                ));
            }
            let vectorized = opac::vectorize(&store, &dimension, &measures, &descriptors)
                .map_err(|e| CliError::data("opac", e))?;
            for warning in &vectorized.warnings {
                eprintln!("warning: {warning}");
            }
            let dendrogram =
                opac::ahc(&vectorized.vectors).map_err(|e| CliError::data("opac", e))?;
            let (scores, recommended) = opac::score_partitions(&dendrogram, &vectorized.vectors)
                .map_err(|e| CliError::data("opac", e))?;
            let k = k.unwrap_or(recommended);
            let level = opac::opac_aggregate(&store, &dimension, &measures, &descriptors, k)
                .map_err(|e| CliError::data("opac", e))?;
            io::write_file(
                &out.join("dendrogram.xml"),
                &opac::dendrogram_to_xml(&dendrogram).to_document_string(),
            )?;
            io::write_file(
                &out.join("scores.xml"),
                &opac::scores_to_xml(&scores, recommended).to_document_string(),
            )?;
            io::write_file(
                &out.join("aggregate-level.xml"),
                &level.to_xml().to_document_string(),
            )?;
            println!(
                "opac: {} members of '{dimension}' cut at k={k} (recommended {recommended}) -> {}",
                vectorized.vectors.len(),
                out.display()
            );
            Ok(())
        }
        Command::MineStructure { corpus, minsup, minconf, out, dtd_out } => {
            let mut parsed = Vec::new();
            for path in io::read_dir_sorted(&corpus)? {
                let id = file_name(&path);
                match io::load_xml(&path) {
                    Ok(doc) => parsed.push((id, doc)),
                    Err(e) => eprintln!("warning: skipped '{id}': {e}"),
                }
            }
            let dtd = structminer::build_minimal_dtd(&parsed)
                .map_err(|e| CliError::data("mine-structure", e))?;
            let transactions = structminer::extract_transactions(&parsed, &dtd)
                .map_err(|e| CliError::data("mine-structure", e))?;
            let frequent = structminer::apriori(&transactions, minsup)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let rules = structminer::extract_rules(&frequent, minconf)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            io::write_file(&out, &structminer::emit_rules_xml(&rules).to_document_string())?;
            let dtd_path = dtd_out.unwrap_or_else(|| {
                out.parent().unwrap_or(Path::new(".")).join("minimal-dtd.xml")
            });
            io::write_file(&dtd_path, &dtd.to_xml().to_document_string())?;
            println!(
                "mine-structure: {} documents, {} frequent itemsets, {} rules -> {}",
                transactions.len(),
                frequent.sets.len(),
                rules.len(),
                out.display()
            );
            Ok(())
        }
        Command::Gen { what } => match what {
            GenCmd::Warehouse { dims, attrs, members, cells, with_time_hierarchy, seed, out } => {
                let spec = gen::WarehouseSpec {
                    dimensions: dims,
                    attributes_per_dimension: attrs,
                    members_per_dimension: members,
                    cells,
                    with_time_hierarchy,
                    seed,
                };
                if dims == 0 || attrs == 0 || members == 0 {
                    return Err(CliError::Usage(
                        "gen warehouse needs at least one dimension, attribute and member".to_string(),
                    ));
                }
                let store = gen::warehouse(&spec);
                io::write_store(&out, &store)?;
                println!(
                    "gen: warehouse with {} cells, {} members -> {}",
                    store.cell_count(),
                    store.member_count(),
                    out.display()
                );
                Ok(())
            }
            GenCmd::Workload { store, queries, seed, out } => {
                let store_dir = io::resolve_store_dir(store)?;
                let store = io::read_store(&store_dir)?;
                let workload = gen::workload(&store, queries, seed);
                for (id, q) in &workload {
                    io::write_file(&out.join(format!("{id}.xml")), &q.to_xml().to_document_string())?;
                }
                println!("gen: {} queries -> {}", workload.len(), out.display());
                Ok(())
            }
            GenCmd::Corpus { docs, mcm, coverage, seed, out } => {
                if !(0.0..=1.0).contains(&coverage) {
                    return Err(CliError::Usage(format!(
                        "--coverage must be in [0, 1], got {coverage}"
                    )));
                }
                let corpus = match mcm {
                    Some(path) => gen::mcm_corpus(&load_mcm(&path)?, docs, coverage, seed),
                    None => gen::tag_corpus(docs, seed),
                };
                for (id, doc) in &corpus {
                    io::write_file(&out.join(id), &doc.to_document_string())?;
                }
                println!("gen: {} documents -> {}", corpus.len(), out.display());
                Ok(())
            }
        },
    }
}

fn split_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_mcm(path: &Path) -> Result<Mcm, CliError> {
    let doc = io::load_xml(path)?;
    Mcm::from_xml(&doc).map_err(|e| CliError::data(&format!("model '{}'", path.display()), e))
}

fn load_query(path: &Path) -> Result<AnalyticalQuery, CliError> {
    let doc = io::load_xml(path)?;
    AnalyticalQuery::from_xml(&doc)
        .map_err(|e| CliError::data(&format!("query '{}'", path.display()), e))
}

fn read_documents(src: &Path) -> Result<Vec<DocumentInput>, CliError> {
    let mut docs = Vec::new();
    for path in io::read_dir_sorted(src)? {
        let id = file_name(&path);
        let parsed = match io::read_to_string(&path) {
            Ok(text) => xml::parse(&text).map_err(|e| e.to_string()),
            Err(e) => Err(e.to_string()),
        };
        docs.push((id, parsed));
    }
    Ok(docs)
}

/// Gates documents in contiguous chunks across worker threads; results are
/// merged in input order, so the output is identical at any thread count.
fn build_cube_parallel(
    model: &Mcm,
    docs: Vec<DocumentInput>,
    threads: usize,
) -> Result<XmlCube, CliError> {
    let map_err = |e: xmlcube_core::mcm::McmError| CliError::data("build-cube", e);
    if threads <= 1 || docs.len() <= 1 {
        return cube::build_cube(model, docs).map_err(map_err);
    }
    let chunk_size = docs.len().div_ceil(threads);
    let chunks: Vec<Vec<DocumentInput>> = docs
        .chunks(chunk_size)
        .map(|c| c.to_vec())
        .collect();
    let results: Vec<Result<XmlCube, _>> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|chunk| scope.spawn(move || cube::build_cube(model, chunk)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });
    let mut merged: Option<XmlCube> = None;
    for result in results {
        let part = result.map_err(map_err)?;
        match &mut merged {
            None => merged = Some(part),
            Some(cube) => {
                cube.facts.extend(part.facts);
                cube.rejected.extend(part.rejected);
                cube.malformed.extend(part.malformed);
            }
        }
    }
    Ok(merged.expect("at least one chunk"))
}

fn read_cube_dir(dir: &Path) -> Result<XmlCube, CliError> {
    let schema = io::load_xml(&dir.join("Schema.xml"))?;
    let mut facts = Vec::new();
    for path in io::read_dir_sorted(dir)? {
        let name = file_name(&path);
        if !name.starts_with("fact-") || !name.ends_with(".xml") {
            continue;
        }
        let fact = io::load_xml(&path)?;
        if !cube::validate_fact(&fact, &schema) {
            return Err(CliError::Data(format!(
                "fact document '{name}' does not validate against Schema.xml"
            )));
        }
        facts.push(fact);
    }
    Ok(XmlCube {
        schema,
        facts,
        rejected: Vec::new(),
        malformed: Vec::new(),
    })
}

fn read_views_dir(dir: &Path, store: &XCubeStore) -> Result<Vec<MaterializedView>, CliError> {
    let mut views = Vec::new();
    for path in io::read_dir_sorted(dir)? {
        let name = file_name(&path);
        if !name.starts_with("view-") || !name.ends_with(".xml") {
            continue;
        }
        let text = io::read_to_string(&path)?;
        let view = MaterializedView::from_document(&text, store)
            .map_err(|e| CliError::data(&format!("view '{name}'"), e))?;
        views.push(view);
    }
    Ok(views)
}

/// Reads the workload directory: every .xml query file plus an optional
/// frequencies.xml manifest.
fn read_workload(dir: &Path, store: &XCubeStore) -> Result<Workload, CliError> {
    let mut frequencies: Vec<(String, f64)> = Vec::new();
    let manifest = dir.join("frequencies.xml");
    if manifest.is_file() {
        let doc = io::load_xml(&manifest)?;
        for entry in doc.children_named("query") {
            let file = entry
                .attr("file")
                .ok_or_else(|| CliError::Data("frequencies entry without 'file'".to_string()))?;
            let frequency: f64 = entry
                .attr("frequency")
                .and_then(|f| f.parse().ok())
                .ok_or_else(|| CliError::Data("frequencies entry without numeric 'frequency'".to_string()))?;
            frequencies.push((file.to_string(), frequency));
        }
    }
    let mut queries = Vec::new();
    for path in io::read_dir_sorted(dir)? {
        let name = file_name(&path);
        if !name.ends_with(".xml") || name == "frequencies.xml" {
            continue;
        }
        let q = load_query(&path)?;
        // Surface unknown attributes and measures before selection runs.
        query::evaluate_with_stats(store, &q)
            .map_err(|e| CliError::data(&format!("workload query '{name}'"), e))?;
        let frequency = frequencies
            .iter()
            .find(|(file, _)| *file == name)
            .map(|(_, f)| *f)
            .unwrap_or(1.0);
        queries.push(WorkloadQuery {
            id: name,
            query: q,
            frequency,
        });
    }
    Workload::new(queries).map_err(|e| CliError::data("workload", e))
}

fn run_selection(
    args: &SelectionArgs,
) -> Result<(XCubeStore, viewsel::SelectionResult, Vec<viewsel::CandidateView>), CliError> {
    if !(0.0..=1.0).contains(&args.theta) {
        return Err(CliError::Usage(format!(
            "--theta must be in [0, 1], got {}",
            args.theta
        )));
    }
    if args.lambda < 0.0 {
        return Err(CliError::Usage(format!(
            "--lambda must be non-negative, got {}",
            args.lambda
        )));
    }
    let store_dir = io::resolve_store_dir(args.store.clone())?;
    let store = io::read_store(&store_dir)?;
    let workload = read_workload(&args.workload, &store)?;
    let matrix = viewsel::build_matrix(&workload);
    let clusters = viewsel::cluster_queries(&matrix, args.theta);
    let stats = viewsel::StoreStatistics::of(&store);
    let candidates = viewsel::candidate_views(&clusters, &workload, &stats);
    let budget = args
        .budget
        .unwrap_or_else(|| candidates.iter().map(|v| v.estimated_rows.max(1)).sum());
    let cost = CostModel { lambda: args.lambda };
    let result = viewsel::greedy_select(&candidates, &workload, &stats, budget, &cost);
    Ok((store, result, candidates))
}

fn candidates_xml(candidates: &[viewsel::CandidateView]) -> xmlcube_core::Element {
    let mut root = xmlcube_core::Element::new("candidates");
    for v in candidates {
        let mut e = xmlcube_core::Element::new("view")
            .with_attr("id", v.id.clone())
            .with_attr("rows", v.estimated_rows.to_string());
        for attr in &v.attributes {
            e.children
                .push(xmlcube_core::Element::new("attribute").with_attr("ref", attr.to_string()));
        }
        for agg in &v.aggregates {
            e.children.push(
                xmlcube_core::Element::new("aggregate")
                    .with_attr("function", agg.func.as_str())
                    .with_attr("measure", agg.measure.clone()),
            );
        }
        for id in &v.cluster {
            e.children
                .push(xmlcube_core::Element::new("member").with_attr("query", id.clone()));
        }
        for id in &v.resolvable {
            e.children
                .push(xmlcube_core::Element::new("resolves").with_attr("query", id.clone()));
        }
        root.children.push(e);
    }
    root
}

fn emit_result(
    table: &xmlcube_core::ResultTable,
    group_columns: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let text = table.to_xml(group_columns).to_document_string();
    match out {
        Some(path) => io::write_file(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
