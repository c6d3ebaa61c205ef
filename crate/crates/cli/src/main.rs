//! Command-line entry points: scenario generation, mission execution, map
//! exports, hash-lookup benchmarks, and wire-format validation.
//!
//! Exit codes are contractual: 0 success, 2 validation error, 3 mission
//! failure, 64 unknown flags.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use coexplore_core::config::Config;
use coexplore_core::geometry::Point3;
use coexplore_core::protocol::decode_message;
use coexplore_core::sim::{run_mission, Scenario, ScenarioKind};
use coexplore_core::voxel::{VoxelMap, VoxelState};

#[derive(Parser)]
#[command(name = "coexplore", version, about = "Ground-aerial collaborative exploration missions")]
struct Cli {
    /// Print a config template with every default parameter explicit, then exit.
    #[arg(long)]
    emit_default_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Open,
    Corridor,
    Junction,
    Clutter,
    Stairs,
}

impl From<KindArg> for ScenarioKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Open => ScenarioKind::Open,
            KindArg::Corridor => ScenarioKind::Corridor,
            KindArg::Junction => ScenarioKind::Junction,
            KindArg::Clutter => ScenarioKind::Clutter,
            KindArg::Stairs => ScenarioKind::Stairs,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Pgm,
    Csv,
    Dot,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Write a canned scenario (manifest, heightmap, labels) into a directory.
    GenScenario {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full mission and write all artifacts under --out.
    Run {
        /// Path to a scenario manifest.json.
        #[arg(long)]
        scenario: PathBuf,
        /// Mission config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convert a voxel-map snapshot (.tvox) to another format.
    Export {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure voxel lookup latency across allocated-block counts.
    Bench {
        /// Comma-separated allocated-block counts, e.g. 1000,100000.
        #[arg(long, default_value = "1000,100000")]
        map_sizes: String,
        /// Lookups per map size.
        #[arg(long, default_value_t = 1_000_000)]
        lookups: u64,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an encoded protocol message for wire-format conformance.
    Validate {
        #[arg(long)]
        message: PathBuf,
    },
}

/// Failures carrying their contractual exit code.
enum Failure {
    Validation(String),
    Mission(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Mission(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Mission(m) => m,
        }
    }
}

fn validation<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Validation(format!("{context}: {e}"))
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::UnknownArgument | ErrorKind::InvalidSubcommand => 64,
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    if cli.emit_default_config {
        println!("{}", serde_json::to_string_pretty(&Config::default()).expect("config is serializable"));
        std::process::exit(0);
    }

    let Some(command) = cli.command else {
        let _ = Cli::command().print_help();
        std::process::exit(2);
    };

    match dispatch(command) {
        Ok(()) => {}
        Err(f) => {
            eprintln!("error: {}", f.message());
            std::process::exit(f.code());
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenScenario { kind, seed, out } => gen_scenario(kind.into(), seed, &out),
        Command::Run { scenario, config, out } => run(&scenario, config.as_deref(), &out),
        Command::Export { map, format, out } => export(&map, format, out.as_deref()),
        Command::Bench { map_sizes, lookups, out } => bench(&map_sizes, lookups, out.as_deref()),
        Command::Validate { message } => validate_message(&message),
    }
}

fn gen_scenario(kind: ScenarioKind, seed: u64, out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(validation("creating output directory"))?;
    let scenario = Scenario::build(kind, seed);
    scenario.save(out).map_err(validation("writing scenario"))?;
    println!("wrote {} scenario to {}", scenario.name, out.display());
    Ok(())
}

fn run(scenario_path: &Path, config_path: Option<&Path>, out: &Path) -> Result<(), Failure> {
    let scenario = Scenario::load(scenario_path).map_err(validation("loading scenario"))?;
    let config = match config_path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(validation("reading config"))?;
            serde_json::from_str::<Config>(&text).map_err(validation("parsing config"))?
        }
        None => Config::default(),
    };
    config.validate().map_err(validation("validating config"))?;
    fs::create_dir_all(out).map_err(validation("creating output directory"))?;

    let report = run_mission(&scenario, &config, Some(out))
        .map_err(|e| Failure::Mission(format!("mission aborted: {e}")))?;
    let m = &report.metrics;
    println!(
        "{}: cycles={} deployments={} completed={} ground_free={} aerial_free={}",
        scenario.name,
        m.cycles.len(),
        m.deployments.len(),
        m.completed,
        m.final_ground_free,
        m.final_aerial_free,
    );
    let failed = m.cycles.iter().any(|c| c.decision == "failed");
    if failed {
        return Err(Failure::Mission("a planning cycle starved; metrics record the failure".into()));
    }
    Ok(())
}

fn export(map_path: &Path, format: ExportFormat, out: Option<&Path>) -> Result<(), Failure> {
    let mut file = fs::File::open(map_path).map_err(validation("opening map snapshot"))?;
    let map = VoxelMap::read_snapshot(&mut file).map_err(validation("reading map snapshot"))?;
    let bytes = match format {
        ExportFormat::Pgm => export_pgm(&map).map_err(validation("rendering pgm"))?,
        ExportFormat::Csv => export_csv(&map).into_bytes(),
        ExportFormat::Dot => export_dot(&map).into_bytes(),
        ExportFormat::Json => export_json(&map).into_bytes(),
    };
    match out {
        Some(p) => fs::write(p, bytes).map_err(validation("writing export"))?,
        None => std::io::stdout().write_all(&bytes).map_err(validation("writing export"))?,
    }
    Ok(())
}

/// Top-down projection: per (x, y) column, occupied wins over free; never
/// observed columns render mid-gray.
fn export_pgm(map: &VoxelMap) -> coexplore_core::Result<Vec<u8>> {
    use std::collections::BTreeMap;
    let thr = map.occupancy_threshold();
    let mut columns: BTreeMap<(i64, i64), u8> = BTreeMap::new();
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
    map.for_each_voxel_sorted(|(ix, iy, _), v| {
        let shade = match v.state(thr) {
            VoxelState::Occupied => 0u8,
            VoxelState::Free => 255,
            VoxelState::Unknown => return,
        };
        min_x = min_x.min(ix);
        max_x = max_x.max(ix);
        min_y = min_y.min(iy);
        max_y = max_y.max(iy);
        columns
            .entry((ix, iy))
            .and_modify(|s| *s = (*s).min(shade))
            .or_insert(shade);
    });
    let mut buf = Vec::new();
    if min_x > max_x {
        coexplore_core::io::write_pgm(&mut buf, 1, 1, &[128])?;
        return Ok(buf);
    }
    let width = (max_x - min_x + 1) as u32;
    let height = (max_y - min_y + 1) as u32;
    let mut data = vec![128u8; (width * height) as usize];
    for ((ix, iy), shade) in columns {
        let col = (ix - min_x) as u32;
        // PGM rows run top to bottom; keep +y up.
        let row = (max_y - iy) as u32;
        data[(row * width + col) as usize] = shade;
    }
    coexplore_core::io::write_pgm(&mut buf, width, height, &data)?;
    Ok(buf)
}

fn export_csv(map: &VoxelMap) -> String {
    let thr = map.occupancy_threshold();
    let mut out = String::from("x,y,z,distance,weight,trav,state\n");
    map.for_each_voxel_sorted(|idx, v| {
        let state = match v.state(thr) {
            VoxelState::Free => "free",
            VoxelState::Occupied => "occupied",
            VoxelState::Unknown => return,
        };
        let c = map.voxel_center(idx);
        let trav = if v.trav_weight > 0.0 { format!("{:.6}", v.trav) } else { String::new() };
        let _ = writeln!(out, "{:.3},{:.3},{:.3},{:.6},{:.3},{},{}", c.x, c.y, c.z, v.distance, v.weight, trav, state);
    });
    out
}

/// Allocated-block adjacency: nodes are block indices, edges join blocks
/// sharing a face. A quick structural view of map connectivity.
fn export_dot(map: &VoxelMap) -> String {
    use std::collections::BTreeSet;
    let side = map.block_side as i64;
    let mut blocks: BTreeSet<(i64, i64, i64)> = BTreeSet::new();
    map.for_each_voxel_sorted(|(ix, iy, iz), _| {
        blocks.insert((ix.div_euclid(side), iy.div_euclid(side), iz.div_euclid(side)));
    });
    let mut out = String::from("graph map {\n");
    for b in &blocks {
        let _ = writeln!(out, "  \"{}_{}_{}\";", b.0, b.1, b.2);
    }
    for &(x, y, z) in &blocks {
        for n in [(x + 1, y, z), (x, y + 1, z), (x, y, z + 1)] {
            if blocks.contains(&n) {
                let _ = writeln!(out, "  \"{}_{}_{}\" -- \"{}_{}_{}\";", x, y, z, n.0, n.1, n.2);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn export_json(map: &VoxelMap) -> String {
    let (free, occupied) = map.count_known();
    let summary = serde_json::json!({
        "voxel_size": map.voxel_size,
        "block_side": map.block_side,
        "allocated_blocks": map.allocated_blocks(),
        "free_voxels": free,
        "occupied_voxels": occupied,
    });
    serde_json::to_string_pretty(&summary).expect("summary is serializable") + "\n"
}

/// Builds a map with exactly `blocks` allocated blocks by carving one voxel
/// per block over a cubic block lattice.
fn bench_map(blocks: usize) -> coexplore_core::Result<(VoxelMap, i64)> {
    let mut map = VoxelMap::new(0.1, 8, 0.3)?;
    let side_m = map.block_side as f64 * map.voxel_size;
    let lattice = (blocks as f64).cbrt().ceil() as i64;
    let mut allocated = 0usize;
    'outer: for bz in 0..lattice {
        for by in 0..lattice {
            for bx in 0..lattice {
                if allocated == blocks {
                    break 'outer;
                }
                let half = map.voxel_size / 2.0;
                let p = Point3::new(
                    bx as f64 * side_m + half,
                    by as f64 * side_m + half,
                    bz as f64 * side_m + half,
                );
                // A hair wider than the voxel center so float rounding
                // cannot leave the box empty.
                map.fill_free_box(
                    &Point3::new(p.x - half / 2.0, p.y - half / 2.0, p.z - half / 2.0),
                    &Point3::new(p.x + half / 2.0, p.y + half / 2.0, p.z + half / 2.0),
                );
                allocated += 1;
            }
        }
    }
    Ok((map, lattice))
}

fn bench(map_sizes: &str, lookups: u64, out: Option<&Path>) -> Result<(), Failure> {
    let sizes: Vec<usize> = map_sizes
        .split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(validation("parsing --map-sizes"))?;
    if sizes.is_empty() || sizes.contains(&0) || lookups == 0 {
        return Err(Failure::Validation("map sizes and lookups must be positive".into()));
    }

    let mut report = String::from("blocks,lookups,total_ms,mean_ns\n");
    let mut means = Vec::new();
    for &blocks in &sizes {
        let (map, lattice) = bench_map(blocks).map_err(validation("building bench map"))?;
        let side_m = map.block_side as f64 * map.voxel_size;
        let extent = lattice as f64 * side_m;
        // Deterministic pseudo-random probe points over the lattice extent.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let probes: Vec<Point3> = (0..4096)
            .map(|_| Point3::new(next() * extent, next() * extent, next() * extent))
            .collect();
        let start = Instant::now();
        let mut acc = 0u64;
        for i in 0..lookups {
            let p = &probes[(i % probes.len() as u64) as usize];
            acc = acc.wrapping_add(map.voxel_state(p) as u64);
        }
        let elapsed = start.elapsed();
        std::hint::black_box(acc);
        let mean_ns = elapsed.as_nanos() as f64 / lookups as f64;
        means.push(mean_ns);
        let _ = writeln!(report, "{},{},{:.3},{:.2}", blocks, lookups, elapsed.as_secs_f64() * 1e3, mean_ns);
    }
    let flatness = means.iter().cloned().fold(0.0f64, f64::max)
        / means.iter().cloned().fold(f64::INFINITY, f64::min);
    let _ = writeln!(report, "# flatness max/min mean latency: {flatness:.3}");

    match out {
        Some(p) => fs::write(p, &report).map_err(validation("writing report"))?,
        None => print!("{report}"),
    }
    Ok(())
}

fn validate_message(path: &Path) -> Result<(), Failure> {
    let bytes = fs::read(path).map_err(validation("reading message"))?;
    let msg = decode_message(&bytes).map_err(validation("decoding message"))?;
    println!("ok: mission {}", msg.mission_id());
    Ok(())
}
