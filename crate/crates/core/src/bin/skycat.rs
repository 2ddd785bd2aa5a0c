use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use skycat::bench::{bench_cold, bench_warm, BenchReport, ScanPredicate};
use skycat::catalog::{Catalog, TableName, DEFAULT_INDEX_DEPTH};
use skycat::htm::{id_to_name, lookup_id, max_edge_beam, name_to_id, nominal_edge_arcmin, TrixelId};
use skycat::loader::{self, Journal, LoadEvent};
use skycat::queries::{self, QueryLimits, DEFAULT_NEIGHBOR_RADIUS};
use skycat::region::{cover, polygon_region, Cap, Region, DEFAULT_COVER_BUDGET};
use skycat::sphere::EquatorialCoord;
use skycat::synth::{generate_with, DensityProfile, SynthParams, CSV_FILES};
use skycat::{Error, Result};

#[derive(Parser)]
#[command(name = "skycat", version, about = "Sky catalog with HTM spatial index")]
struct Cli {
    /// Catalog file.
    #[arg(long, global = true, env = "SKYCAT_CATALOG", default_value = "skycat.cat")]
    catalog: PathBuf,

    /// Output format for tabular results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Create an empty catalog.
    Create {
        #[arg(long, default_value_t = DEFAULT_INDEX_DEPTH)]
        depth: u32,
        /// Replace an existing catalog.
        #[arg(long)]
        force: bool,
    },
    /// Load a CSV file into a table.
    Load { table: TableName, file: PathBuf },
    /// Load every generated CSV file from a directory, in dependency order.
    LoadDir { dir: PathBuf },
    /// Remove the rows inserted by a load event.
    Undo { event: u64 },
    /// List load events.
    Events,
    /// Report integrity violations.
    Validate,
    /// Row counts and content digest.
    Info,
    /// Cover a region with HTM id ranges.
    Cover(CoverArgs),
    /// Objects within a radius, nearest first.
    Nearby(ConeArgs),
    /// Nearest object within a radius.
    Nearest(ConeArgs),
    /// Neighbor table maintenance.
    Neighbors {
        #[command(subcommand)]
        action: NeighborsAction,
    },
    /// Named data-mining queries.
    Query(QueryArgs),
    /// Scan benchmarks.
    Bench {
        #[command(subcommand)]
        action: BenchAction,
    },
    /// Write a synthetic sky as loader-ready CSV files.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// uniform or sdss
        #[arg(long, default_value = "uniform")]
        profile: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a table as CSV.
    Export {
        table: TableName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// HTM utilities.
    Htm {
        #[command(subcommand)]
        action: HtmAction,
    },
}

#[derive(Args)]
struct CoverArgs {
    /// Cap center and radius in arcminutes.
    #[arg(long, num_args = 3, value_names = ["RA", "DEC", "R"], allow_negative_numbers = true,
          conflicts_with = "polygon", required_unless_present = "polygon")]
    cap: Option<Vec<f64>>,
    /// Counterclockwise vertices as RA,DEC pairs.
    #[arg(long, num_args = 3.., value_name = "RA,DEC", allow_hyphen_values = true)]
    polygon: Option<Vec<String>>,
    #[arg(long, default_value_t = DEFAULT_INDEX_DEPTH)]
    depth: u32,
    #[arg(long, default_value_t = DEFAULT_COVER_BUDGET)]
    budget: usize,
}

#[derive(Args)]
struct ConeArgs {
    #[arg(long, allow_negative_numbers = true)]
    ra: f64,
    #[arg(long, allow_negative_numbers = true)]
    dec: f64,
    /// Radius in arcminutes.
    #[arg(long, default_value_t = 1.0)]
    r: f64,
}

#[derive(Subcommand)]
enum NeighborsAction {
    /// Rebuild the neighbors table.
    Build {
        #[arg(long, default_value_t = DEFAULT_NEIGHBOR_RADIUS)]
        radius: f64,
    },
}

#[derive(Args)]
struct QueryArgs {
    /// Maximum rows returned.
    #[arg(long, global = true, default_value_t = 1000)]
    limit: usize,
    /// Time quota in seconds.
    #[arg(long, global = true, default_value_t = 30.0)]
    timeout: f64,
    #[command(subcommand)]
    query: NamedQuery,
}

#[derive(Subcommand)]
enum NamedQuery {
    /// Unsaturated primary galaxies near a point.
    Q1(ConeArgs),
    /// Asteroid candidates by velocity.
    Q15,
    /// Red/green streak pairs.
    Fastmovers,
    /// Count of rows with modelMag_r - modelMag_g above a threshold.
    Colorcount {
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        threshold: f64,
    },
}

#[derive(Subcommand)]
enum BenchAction {
    /// Time a full photo-table scan.
    Scan {
        #[arg(long, default_value = "colorcut")]
        predicate: String,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, value_enum, default_value_t = BenchMode::Both)]
        mode: BenchMode,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchMode {
    Warm,
    Cold,
    Both,
}

#[derive(Subcommand)]
enum HtmAction {
    /// Trixel containing a position.
    Lookup {
        #[arg(long, allow_negative_numbers = true)]
        ra: f64,
        #[arg(long, allow_negative_numbers = true)]
        dec: f64,
        #[arg(long, default_value_t = DEFAULT_INDEX_DEPTH)]
        depth: u32,
    },
    /// Name of a numeric trixel id.
    Name { id: u64 },
    /// Numeric id of a trixel name.
    Id { name: String },
    /// Measured maximum trixel edge length at a depth.
    Edges {
        #[arg(long, default_value_t = 20)]
        depth: u32,
        /// Trixels kept per level by the search.
        #[arg(long, default_value_t = 256)]
        beam: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn open(path: &Path) -> Result<Catalog> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "catalog {} does not exist; run `skycat create` first",
            path.display()
        )));
    }
    Catalog::open(path)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let out = io::stdout();
    let mut out = out.lock();
    let path = cli.catalog.as_path();
    let fmt = cli.format;
    match cli.command {
        Command::Create { depth, force } => {
            if path.exists() && !force {
                return Err(Error::Config(format!(
                    "{} exists; pass --force to replace it",
                    path.display()
                )));
            }
            Catalog::new(depth)?.save(path)?;
            let journal = Journal::path_for(path);
            if journal.exists() {
                std::fs::remove_file(&journal).map_err(|e| Error::Io {
                    path: journal,
                    source: e,
                })?;
            }
        }
        Command::Load { table, file } => {
            let mut cat = open(path)?;
            let mut journal = Journal::open_for(path)?;
            let report = loader::load_csv(&mut cat, &mut journal, table, &file)?;
            cat.save(path)?;
            journal.commit()?;
            emit(&mut out, fmt, &EVENT_HEADER, &[event_row(&report.event)], None)?;
            if let Some(msg) = &report.event.detail {
                eprintln!("error: load failed: {msg}");
                return Ok(ExitCode::from(1));
            }
            if !report.trace.is_empty() {
                eprintln!("{} rows rejected; see the trace file", report.trace.len());
            }
        }
        Command::LoadDir { dir } => {
            let mut cat = open(path)?;
            let mut journal = Journal::open_for(path)?;
            let mut rows = Vec::new();
            let mut failed = false;
            for (table, file) in CSV_FILES {
                let report = loader::load_csv(&mut cat, &mut journal, table.parse()?, dir.join(file))?;
                failed |= report.event.detail.is_some();
                rows.push(event_row(&report.event));
            }
            cat.save(path)?;
            journal.commit()?;
            emit(&mut out, fmt, &EVENT_HEADER, &rows, None)?;
            if failed {
                eprintln!("error: one or more loads failed");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Undo { event } => {
            let mut cat = open(path)?;
            let mut journal = Journal::open_for(path)?;
            let removed = loader::undo(&mut cat, &mut journal, event)?;
            cat.save(path)?;
            journal.commit()?;
            emit(&mut out, fmt, &["eventID", "removedRows"], &[(event, removed)], None)?;
        }
        Command::Events => {
            let journal = Journal::open_for(path)?;
            let rows: Vec<_> = journal.events().iter().map(event_row).collect();
            emit(&mut out, fmt, &EVENT_HEADER, &rows, None)?;
        }
        Command::Validate => {
            let cat = open(path)?;
            let rows: Vec<_> = loader::validate(&cat)
                .into_iter()
                .map(|v| (v.table.to_string(), v.row, v.constraint.to_string(), v.detail))
                .collect();
            emit(&mut out, fmt, &["table", "row", "constraint", "detail"], &rows, None)?;
        }
        Command::Info => {
            let cat = open(path)?;
            let mut rows: Vec<(String, String)> = cat
                .row_counts()
                .into_iter()
                .map(|(t, n)| (t.to_string(), n.to_string()))
                .collect();
            rows.push(("indexDepth".into(), cat.index_depth().to_string()));
            rows.push(("digest".into(), format!("{:016x}", cat.digest())));
            emit(&mut out, fmt, &["key", "value"], &rows, None)?;
        }
        Command::Cover(args) => {
            let region: Region = match (&args.cap, &args.polygon) {
                (Some(c), _) => Cap::from_eq(c[0], c[1], c[2])?.into(),
                (None, Some(pts)) => {
                    let coords = pts.iter().map(|p| parse_point(p)).collect::<Result<Vec<_>>>()?;
                    polygon_region(&coords)?.into()
                }
                (None, None) => unreachable!("clap requires one of --cap/--polygon"),
            };
            let set = cover(&region, args.depth, args.budget)?;
            match fmt {
                Format::Csv => {
                    for (lo, hi) in set.ranges() {
                        writeln!(out, "{lo} {hi}").map_err(stdout_err)?;
                    }
                }
                Format::Json => {
                    let v = serde_json::json!({ "indexDepth": set.index_depth(), "ranges": set.ranges() });
                    writeln!(out, "{v}").map_err(stdout_err)?;
                }
            }
        }
        Command::Nearby(c) => {
            let cat = open(path)?;
            let hits = queries::nearby_eq(&cat, c.ra, c.dec, c.r)?;
            emit(&mut out, fmt, &HIT_HEADER, &hits, None)?;
        }
        Command::Nearest(c) => {
            let cat = open(path)?;
            let hit: Vec<_> = queries::nearest_eq(&cat, c.ra, c.dec, c.r)?.into_iter().collect();
            emit(&mut out, fmt, &HIT_HEADER, &hit, None)?;
        }
        Command::Neighbors {
            action: NeighborsAction::Build { radius },
        } => {
            let mut cat = open(path)?;
            let n = queries::build_neighbors(&mut cat, radius)?;
            cat.save(path)?;
            emit(&mut out, fmt, &["pairs"], &[(n,)], None)?;
        }
        Command::Query(q) => {
            let limits = QueryLimits {
                max_rows: q.limit,
                timeout: Duration::try_from_secs_f64(q.timeout)
                    .map_err(|_| Error::Config(format!("invalid timeout {}", q.timeout)))?,
            };
            let cat = open(path)?;
            let started = Instant::now();
            match q.query {
                NamedQuery::Q1(c) => {
                    let hits = queries::q1_unsaturated_galaxies(&cat, c.ra, c.dec, c.r)?;
                    let r = limits.apply(hits, started);
                    emit(&mut out, fmt, &HIT_HEADER, &r.rows, Some(r.truncated))?;
                }
                NamedQuery::Q15 => {
                    let r = limits.apply(queries::q15_asteroids(&cat), started);
                    emit(&mut out, fmt, &["objID", "velocity"], &r.rows, Some(r.truncated))?;
                }
                NamedQuery::Fastmovers => {
                    let r = limits.apply(queries::fast_movers(&cat), started);
                    emit(&mut out, fmt, &["rId", "gId"], &r.rows, Some(r.truncated))?;
                }
                NamedQuery::Colorcount { threshold } => {
                    let s = queries::color_count(&cat, threshold);
                    let header = [
                        "count",
                        "rowsScanned",
                        "bytesScanned",
                        "elapsed",
                        "rowsPerSec",
                        "bytesPerSec",
                    ];
                    emit(&mut out, fmt, &header, &[s], None)?;
                }
            }
        }
        Command::Bench {
            action: BenchAction::Scan { predicate, runs, mode },
        } => {
            let predicate: ScanPredicate = predicate.parse()?;
            let mut reports: Vec<BenchReport> = Vec::new();
            if mode != BenchMode::Cold {
                reports.push(bench_warm(&open(path)?, predicate, runs));
            }
            if mode != BenchMode::Warm {
                reports.push(bench_cold(path, predicate, runs)?);
            }
            for r in reports {
                writeln!(out, "{}", serde_json::to_string(&r).expect("report serializes")).map_err(stdout_err)?;
            }
        }
        Command::Gen {
            n,
            seed,
            profile,
            out: dir,
        } => {
            let params = SynthParams {
                profile: DensityProfile::parse(&profile)?,
                ..Default::default()
            };
            generate_with(n, seed, &params).write_csv(&dir)?;
        }
        Command::Export { table, out: file } => {
            let cat = open(path)?;
            match file {
                Some(f) => {
                    let w = std::fs::File::create(&f).map_err(|e| Error::Io {
                        path: f.clone(),
                        source: e,
                    })?;
                    cat.export_csv(table, io::BufWriter::new(w))?;
                }
                None => cat.export_csv(table, &mut out)?,
            }
        }
        Command::Htm { action } => htm(&mut out, fmt, action)?,
    }
    out.flush().map_err(stdout_err)?;
    Ok(ExitCode::SUCCESS)
}

fn htm(out: &mut impl Write, fmt: Format, action: HtmAction) -> Result<()> {
    match action {
        HtmAction::Lookup { ra, dec, depth } => {
            let id = lookup_id(&EquatorialCoord::new(ra, dec)?.to_vec(), depth)?;
            emit(out, fmt, &["id", "name"], &[(id.raw(), id_to_name(id))], None)
        }
        HtmAction::Name { id } => {
            let id = TrixelId::new(id)?;
            emit(out, fmt, &["id", "name"], &[(id.raw(), id_to_name(id))], None)
        }
        HtmAction::Id { name } => {
            let id = name_to_id(&name)?;
            emit(out, fmt, &["id", "name"], &[(id.raw(), id_to_name(id))], None)
        }
        HtmAction::Edges { depth, beam } => {
            if depth > skycat::htm::MAX_DEPTH {
                return Err(Error::DepthLimit {
                    depth,
                    max: skycat::htm::MAX_DEPTH,
                });
            }
            let max = max_edge_beam(depth, beam);
            let nominal = nominal_edge_arcmin(depth);
            let row = EdgeReport {
                depth,
                max_edge_arcmin: max,
                max_edge_arcsec: max * 60.0,
                nominal_edge_arcsec: nominal * 60.0,
                ratio_to_nominal: max / nominal,
                ratio_to_tenth_arcsec: max * 60.0 / 0.1,
            };
            let header = [
                "depth",
                "maxEdgeArcmin",
                "maxEdgeArcsec",
                "nominalEdgeArcsec",
                "ratioToNominal",
                "ratioToTenthArcsec",
            ];
            emit(out, fmt, &header, &[row], None)
        }
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct EdgeReport {
    depth: u32,
    max_edge_arcmin: f64,
    max_edge_arcsec: f64,
    nominal_edge_arcsec: f64,
    ratio_to_nominal: f64,
    ratio_to_tenth_arcsec: f64,
}

const HIT_HEADER: [&str; 2] = ["objID", "distance"];

const EVENT_HEADER: [&str; 8] = [
    "eventID",
    "table",
    "startStamp",
    "stopStamp",
    "sourceRows",
    "insertedRows",
    "status",
    "tracePath",
];

type EventRow = (u64, String, u64, u64, u64, u64, &'static str, String);

fn event_row(e: &LoadEvent) -> EventRow {
    (
        e.event_id,
        e.table.to_string(),
        e.start_stamp,
        e.stop_stamp,
        e.source_rows,
        e.inserted_rows,
        e.status.as_str(),
        e.trace_path
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default(),
    )
}

fn parse_point(s: &str) -> Result<EquatorialCoord> {
    let bad = || Error::Config(format!("expected RA,DEC but got {s:?}"));
    let (ra, dec) = s.split_once(',').ok_or_else(bad)?;
    EquatorialCoord::new(
        ra.trim().parse().map_err(|_| bad())?,
        dec.trim().parse().map_err(|_| bad())?,
    )
}

fn stdout_err(e: io::Error) -> Error {
    Error::Io {
        path: PathBuf::from("<stdout>"),
        source: e,
    }
}

/// Writes rows as headed CSV or as JSON. Rows serialize as tuples or flat
/// structs; JSON objects are keyed by `header`.
fn emit<T: Serialize>(
    out: &mut impl Write,
    fmt: Format,
    header: &[&str],
    rows: &[T],
    truncated: Option<bool>,
) -> Result<()> {
    match fmt {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut *out);
            let err = |e: csv::Error| Error::Format(format!("csv output: {e}"));
            w.write_record(header).map_err(err)?;
            for r in rows {
                w.serialize(r).map_err(err)?;
            }
            w.flush().map_err(stdout_err)?;
            if truncated == Some(true) {
                eprintln!("result truncated at {} rows", rows.len());
            }
        }
        Format::Json => {
            let objects: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| keyed(header, serde_json::to_value(r).expect("row serializes")))
                .collect();
            let v = match truncated {
                Some(t) => serde_json::json!({ "rows": objects, "truncated": t }),
                None => serde_json::json!(objects),
            };
            writeln!(out, "{v}").map_err(stdout_err)?;
        }
    }
    Ok(())
}

fn keyed(header: &[&str], v: serde_json::Value) -> serde_json::Map<String, serde_json::Value> {
    match v {
        serde_json::Value::Object(m) => m,
        serde_json::Value::Array(items) => header.iter().map(|h| h.to_string()).zip(items).collect(),
        other => header.iter().map(|h| h.to_string()).zip([other]).collect(),
    }
}
