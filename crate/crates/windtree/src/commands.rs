//! The five subcommands. Each returns its text report and writes files under `out`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use windtree_core::adic::TransferData;
use windtree_core::billiard::{simulate_billiard, SectionLift, Table};
use windtree_core::hausdorff::{
    alternate_pairs, box_dimension_estimate, dimension_bound, gap_params, DimensionBound, GapSystem,
};
use windtree_core::homology::Block;
use windtree_core::iet::PermutationPair;
use windtree_core::interval::Interval;
use windtree_core::invariant::{block_invariant, certify_invariance, gamma_instability, InvariantFunction, SkewSystem};
use windtree_core::linalg::eigenvalues;
use windtree_core::rauzy::{parse_word, rauzy_loop_search, PeriodicIet, RauzyError, RauzyLoop};
use windtree_core::render::{InvariantRaster, PlaneWindow, RenderMode, RenderSettings, Renderer};
use windtree_core::section::{build_section, SectionBudget, SectionData, WindTreeParams};
use windtree_core::surface::Cover;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::formats::{raster_metadata, write_cover_csv, write_raster, write_trajectory_csv, CatalogEntry};

/// A periodic record with its invariant function for the configured block.
pub struct Record {
    pub sd: SectionData,
    pub block: Block,
    pub f: InvariantFunction,
    pub skew: SkewSystem,
}

pub fn budget(cfg: &RunConfig) -> SectionBudget {
    SectionBudget { trace_segments: cfg.record.trace_segments, induction_steps: cfg.record.induction_steps }
}

pub fn load_record(cfg: &RunConfig) -> Result<Record, CliError> {
    let sd = build_section(&cfg.params(), cfg.cover()?, budget(cfg))?;
    let block = cfg.block()?;
    let (f, skew) = block_invariant(&sd, block)?;
    Ok(Record { sd, block, f, skew })
}

pub fn provenance(p: &WindTreeParams, cover: Cover) -> String {
    let (s0, s1, s2, d) = p.slope;
    let cover = if cover == Cover::Fourfold { "fourfold" } else { "base" };
    format!("a:{}/{};b:{}/{};slope:({}+{}*sqrt{})/{};cover:{}", p.a.0, p.a.1, p.b.0, p.b.1, s0, s1, d, s2, cover)
}

fn write_file(out: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join(name), text)?;
    Ok(())
}

/// Rebuilds the loop of a catalog entry and checks the lengths are a fixed point.
pub fn replay_entry(e: &CatalogEntry) -> Result<PeriodicIet, CliError> {
    let perm = PermutationPair::new(e.top.clone(), e.bot.clone()).map_err(RauzyError::from)?;
    let p = PeriodicIet::from_loop(RauzyLoop::new(perm, parse_word(&e.word)?)?)?;
    check_fixed_point(&p)?;
    Ok(p)
}

fn check_fixed_point(p: &PeriodicIet) -> Result<(), CliError> {
    let back = p.replay_lengths()?;
    if back.iter().zip(&p.iet.lengths).all(|(a, b)| a.overlaps(*b)) {
        Ok(())
    } else {
        Err(CliError::Certificate(format!("loop {} does not replay to its lengths", p.lp.word())))
    }
}

fn entry(p: &PeriodicIet, record: Option<String>) -> CatalogEntry {
    CatalogEntry {
        top: p.lp.start.top.clone(),
        bot: p.lp.start.bot.clone(),
        word: p.lp.word(),
        rho: p.rho.mid(),
        record,
    }
}

pub fn cmd_search(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let s = &cfg.search;
    let mut cat = String::new();
    let mut skipped = String::new();
    if s.max_len > 0 {
        let perm = PermutationPair::new(s.top.clone(), s.bottom.clone()).map_err(RauzyError::from)?;
        for lp in rauzy_loop_search(&perm, s.max_len) {
            let p = PeriodicIet::from_loop(lp)?;
            check_fixed_point(&p)?;
            let _ = writeln!(cat, "{}", entry(&p, None).to_line());
        }
        for size in &s.sizes {
            for slope in &s.slopes {
                let params = WindTreeParams { a: (size[0], size[1]), b: (size[0], size[1]), slope: (slope[0], slope[1], slope[2], slope[3] as u32) };
                let tag = provenance(&params, Cover::Fourfold);
                match build_section(&params, Cover::Fourfold, budget(cfg)) {
                    Ok(sd) => {
                        check_fixed_point(&sd.periodic)?;
                        let _ = writeln!(cat, "{}", entry(&sd.periodic, Some(tag)).to_line());
                    }
                    Err(e) => {
                        let _ = writeln!(skipped, "skipped {tag}: {e}");
                    }
                }
            }
        }
    }
    write_file(out, "catalog.txt", &cat)?;
    Ok(format!("{}entries = {}\n", skipped, cat.lines().count()))
}

fn fmt_vec(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(|x| format!("{x:.12e}")).collect::<Vec<_>>().join(" ")
}

/// Uniform random skew states with cocycle coordinates in `[-20, 20)`.
pub fn random_states(seed: u64, count: usize, dim: usize) -> Vec<(f64, Vec<i64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (rng.gen_range(0.0..1.0), (0..dim).map(|_| rng.gen_range(-20..20)).collect())).collect()
}

pub fn cmd_analyze(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let rec = load_record(cfg)?;
    let sd = &rec.sd;
    let mut r = String::new();
    let _ = writeln!(r, "record = {}", provenance(&sd.params, sd.cover));
    let _ = writeln!(r, "intervals = {}", sd.len());
    let _ = writeln!(r, "period = {}", sd.periodic.period());
    let _ = writeln!(r, "word = {}", sd.periodic.lp.word());
    let _ = writeln!(r, "rho = {}", sd.periodic.rho);
    let a = sd.matrix();
    let at = nalgebra::DMatrix::from_fn(a.n, a.n, |i, j| a.get(j, i) as f64);
    let mut spec = eigenvalues(&at);
    spec.sort_by(|p, q| q.abs().total_cmp(&p.abs()));
    let spec: Vec<String> = spec.iter().map(|e| if e.im.abs() < 1e-9 * e.abs().max(1.0) { format!("{:.10}", e.re) } else { format!("{:.10}{:+.10}i", e.re, e.im) }).collect();
    let _ = writeln!(r, "eigenvalues = {}", spec.join(" "));
    let [uh, uv] = gamma_instability(sd)?;
    let _ = writeln!(r, "gamma_h unstable = {uh}");
    let _ = writeln!(r, "gamma_v unstable = {uv}");
    let _ = writeln!(r, "block = {}", rec.block.name());
    for (i, td) in rec.f.transfers.iter().enumerate() {
        let _ = writeln!(r, "lambda[{i}] = {:.15e}", td.pair.lambda);
        let _ = writeln!(r, "psi[{i}] = {}", fmt_vec(td.pair.psi.values.iter().copied()));
        let _ = writeln!(r, "tau[{i}] = {}", fmt_vec(td.tau.iter().copied()));
    }
    let _ = writeln!(r, "b = {}", fmt_vec(rec.f.b.iter().copied()));
    let _ = writeln!(r, "C = {}", fmt_vec(rec.f.c.iter().copied()));
    let _ = writeln!(r, "Lambda = C Z^{}", rec.f.dim());
    let states = random_states(cfg.seed, cfg.analyze.samples, rec.skew.dim());
    let cert = certify_invariance(&rec.f, &rec.skew, &states, cfg.analyze.depth)?;
    let _ = writeln!(r, "invariance checked = {}", cert.checked);
    let _ = writeln!(r, "invariance failures = {}", cert.failures.len());
    let _ = writeln!(r, "max enclosure width = {:e}", cert.max_width);
    match &cert.witness {
        Some((s, t)) => {
            let _ = writeln!(r, "witness = ({:.17e}, {:?}) ({:.17e}, {:?})", s.0, s.1, t.0, t.1);
        }
        None => {
            let _ = writeln!(r, "witness = none");
        }
    }
    write_file(out, "analyze.txt", &r)?;
    if !cert.failures.is_empty() {
        return Err(CliError::Certificate(format!("{} invariance failures, first at {:?}", cert.failures.len(), cert.failures[0])));
    }
    Ok(r)
}

pub fn plot_settings(cfg: &RunConfig, f: &InvariantFunction) -> Result<RenderSettings, CliError> {
    let p = &cfg.plot;
    let mode = match p.mode.as_str() {
        "torus" => RenderMode::TorusColor,
        _ => {
            let z = match p.z {
                Some(z) => vec![z; f.dim()],
                None => {
                    let zero = vec![0; f.b.ncols()];
                    f.hat_h(Interval::point(p.level_point), &zero, p.depth)?.coords.iter().map(|c| c.mid()).collect()
                }
            };
            RenderMode::LevelSet { z, tol: p.tol }
        }
    };
    Ok(RenderSettings {
        window: PlaneWindow { x0: p.x0, y0: p.y0, x1: p.x1, y1: p.y1 },
        resolution: p.resolution,
        depth: p.depth,
        signs: (p.signs[0], p.signs[1]),
        mode,
        supersample: p.supersample,
    })
}

/// Renders rows on a pool of `workers` threads; assembly keeps row order.
pub fn render_parallel(renderer: &Renderer<'_>, workers: usize) -> Result<InvariantRaster, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let (_, h) = renderer.size();
    let rows = pool.install(|| (0..h).into_par_iter().map(|r| renderer.row(r)).collect::<Vec<_>>());
    Ok(renderer.assemble(rows))
}

pub fn table(sd: &SectionData) -> Table {
    Table { a: sd.params.a_f64(), b: sd.params.b_f64() }
}

pub fn cmd_plot(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let rec = load_record(cfg)?;
    let lift = SectionLift::new(&rec.sd, cfg.plot.budget)?;
    let settings = plot_settings(cfg, &rec.f)?;
    let renderer = Renderer { lift: &lift, f: &rec.f, table: table(&rec.sd), settings };
    let raster = render_parallel(&renderer, cfg.workers)?;
    std::fs::create_dir_all(out)?;
    let name = if cfg.plot.mode == "torus" { "plot.ppm" } else { "plot.pgm" };
    write_raster(&out.join(name), &raster)?;
    let meta = raster_metadata(&raster, &provenance(&rec.sd.params, rec.sd.cover));
    write_file(out, "plot.txt", &meta)?;
    Ok(format!("image = {name}\n{meta}"))
}

/// Middle-thirds intervals after `depth` removals.
pub fn middle_thirds(depth: usize) -> Vec<(f64, f64)> {
    let mut ivs = vec![(0.0, 1.0)];
    for _ in 0..depth {
        ivs = ivs
            .iter()
            .flat_map(|&(a, b): &(f64, f64)| {
                let t = (b - a) / 3.0;
                [(a, a + t), (b - t, b)]
            })
            .collect();
    }
    ivs
}

fn cantor_fixture(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let depths = 1..=cfg.hdim.box_depths.len().max(4) + 4;
    let samples: Vec<(f64, f64)> = depths.clone().map(|k| (3f64.powi(-(k as i32)), 2f64.powi(k as i32))).collect();
    let e = box_dimension_estimate(&samples)?;
    let last = *depths.end();
    let rows: Vec<(usize, f64, f64)> = middle_thirds(last.min(10)).into_iter().map(|(a, b)| (last.min(10), a, b)).collect();
    std::fs::create_dir_all(out)?;
    write_cover_csv(std::fs::File::create(out.join("cover.csv"))?, &rows)?;
    let mut r = String::new();
    let _ = writeln!(r, "fixture = middle-thirds");
    let _ = writeln!(r, "box dimension = {:.6}", e.slope);
    let _ = writeln!(r, "log2/log3 = {:.6}", 2f64.ln() / 3f64.ln());
    let _ = writeln!(r, "fit residual = {:e}", e.residual);
    Ok(r)
}

/// Alternate pairs, gap depth and dimension bound for one transfer function.
pub fn hdim_chain(td: &TransferData, max_multiple: usize, k_max: usize) -> Result<(GapSystem, DimensionBound), CliError> {
    let gs = gap_params(alternate_pairs(td, max_multiple)?)?;
    let db = dimension_bound(td, &gs, k_max)?;
    Ok((gs, db))
}

pub fn hdim_report(td: &TransferData, gs: &GapSystem, db: &DimensionBound) -> String {
    let mut r = String::new();
    let n = td.len();
    let map = &gs.map;
    let complete = map.pairs.len() == n && map.pairs.iter().all(|row| row.len() == n);
    let _ = writeln!(r, "alternate pairs = {} x {} complete = {complete}", n, n);
    let _ = writeln!(r, "pair multiple N = {}", map.multiple);
    let l = map.lambda.abs();
    let lhs = gs.big_f * l.powi(gs.b as u32) / (Interval::ONE - l);
    let _ = writeln!(r, "F = {:e}", gs.big_f.hi);
    let _ = writeln!(r, "lambda^N = {:e}", map.lambda.mid());
    let _ = writeln!(r, "delta = {:e}", gs.delta.lo);
    let _ = writeln!(r, "b = {}", gs.b);
    let _ = writeln!(r, "F lambda^b / (1 - lambda) = {:e} < delta = {:e}: {}", lhs.hi, gs.delta.lo, lhs.hi < gs.delta.lo);
    let _ = writeln!(r, "m = {}", db.m);
    let _ = writeln!(r, "mu = {:e}", db.mu.lo);
    let _ = writeln!(r, "beta0 = {:.15}", db.beta0);
    let _ = writeln!(r, "1 - beta0 = {:e}", 1.0 - db.beta0);
    for s in &db.stats {
        // Relative slack for the rounding of the enclosure at k = 0, where |C_0| = 1.
        let q = (1.0 - db.mu.lo / db.m).powi(s.k as i32) * (1.0 + 1e-12);
        let nb = n as f64 * db.m.powi(s.k as i32);
        let _ = writeln!(
            r,
            "k = {} cells = {:e} |C_k| = {:e} <= {:e}: {} N_k <= {:e} <= n m^k = {:e}: {}",
            s.k,
            s.cells.mid(),
            s.length.hi,
            q,
            s.length.hi <= q,
            s.components_bound,
            nb,
            s.components_bound <= nb
        );
    }
    r
}

pub fn cmd_hdim(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    if cfg.hdim.cantor_fixture {
        let r = cantor_fixture(cfg, out)?;
        write_file(out, "hdim.txt", &r)?;
        return Ok(r);
    }
    let rec = load_record(cfg)?;
    let td = &rec.f.transfers[0];
    let (gs, db) = hdim_chain(td, cfg.hdim.max_multiple, cfg.hdim.k_max)?;
    let mut r = format!("record = {}\nblock = {}\n", provenance(&rec.sd.params, rec.sd.cover), rec.block.name());
    r.push_str(&hdim_report(td, &gs, &db));
    let z = td.h_eval(cfg.hdim.level_point, cfg.plot.depth)?.mid();
    let samples: Vec<(f64, f64)> = cfg
        .hdim
        .box_depths
        .iter()
        .map(|&k| {
            let cells = windtree_core::adic::level_cells(&td.cell_bounds(k), z, None);
            (cells.iter().map(|c| c.length.hi).fold(0.0, f64::max), cells.len() as f64)
        })
        .collect();
    match box_dimension_estimate(&samples) {
        Ok(e) => {
            let _ = writeln!(r, "level set box estimate = {:.6} (section, z = {z:e})", e.slope);
        }
        Err(e) => {
            let _ = writeln!(r, "level set box estimate = unavailable: {e}");
        }
    }
    write_file(out, "hdim.txt", &r)?;
    Ok(r)
}

pub fn cmd_simulate(cfg: &RunConfig, out: &Path) -> Result<String, CliError> {
    let s = &cfg.simulate;
    let t = table_of(cfg);
    let norm = s.velocity[0].hypot(s.velocity[1]);
    let v = (s.velocity[0] / norm, s.velocity[1] / norm);
    let traj = simulate_billiard(t, (s.start[0], s.start[1]), v, s.t_max, s.max_events)?;
    std::fs::create_dir_all(out)?;
    write_trajectory_csv(std::io::BufWriter::new(std::fs::File::create(out.join("trajectory.csv"))?), &traj)?;
    let speeds = traj.velocities.iter().map(|v| v.0.hypot(v.1));
    let (lo, hi) = speeds.fold((f64::MAX, f64::MIN), |(l, h), x| (l.min(x), h.max(x)));
    let margin = traj.points.iter().map(|p| t.margin(p.0, p.1)).fold(f64::MAX, f64::min);
    Ok(format!(
        "bounces = {}\nlength = {}\nspeed range = {:e}\nmin obstacle margin = {:e}\n",
        traj.bounces,
        traj.length(),
        hi - lo,
        margin
    ))
}

pub fn table_of(cfg: &RunConfig) -> Table {
    let r = &cfg.record;
    Table { a: r.a[0] as f64 / r.a[1] as f64, b: r.b[0] as f64 / r.b[1] as f64 }
}
