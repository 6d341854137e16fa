use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use delone::decorate::{build_decoration, decorate, undecorate, TilingSource};
use delone::ergodic::{birkhoff_average, density_curve, rotation_grid, WeightFunctionSpec};
use delone::geom::{poly, Aabb, Isometry, Point, Region, Q};
use delone::io::{
    content_hash, read_json, write_atomic, write_json, Envelope, ExperimentReport, PointSetData, TilingData,
    POINTSET_SCHEMA, REPORT_SCHEMA, TILING_SCHEMA,
};
use delone::metrics::{local_matching_distance, local_rubber_distance, pattern_deviation, Deviation};
use delone::pointset::{realize, GeneratorSpec, PointSetWindow, TrigPoly};
use delone::render::{render_svg, Scene, Style};
use delone::repet::{integer_grid, period_set, repetitivity_curve, tiling_wiggle_curve, PeriodMode};
use delone::subst::{builtin_rule, dto_witness, is_primitive, substitute_n, substitution_matrix, Tile};
use delone::Error;

#[derive(Parser)]
#[command(
    name = "delone",
    version,
    about = "Delone sets, substitution tilings and repetitivity diagnostics"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Record wall-clock time in reports (breaks byte-for-byte reproducibility).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Realize a point set or a supertile and write it as JSON.
    Gen(GenArgs),
    /// Distances between two point-set files.
    Metric {
        #[command(subcommand)]
        kind: MetricCmd,
    },
    /// Substitution rules: supertiles, matrices, orientation witnesses.
    Subst {
        #[command(subcommand)]
        kind: SubstCmd,
    },
    /// Prototile decoration and its inverse.
    Decorate {
        #[command(subcommand)]
        kind: DecorateCmd,
    },
    /// Repetitivity curves and ε-period sets.
    Repet {
        #[command(subcommand)]
        kind: RepetCmd,
    },
    /// Local densities and Birkhoff averages.
    Ergodic {
        #[command(subcommand)]
        kind: ErgodicCmd,
    },
    /// Draw a tiling or point-set file as SVG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 800.0)]
        width: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetName {
    Z,
    Z2,
    Twoadic,
    Twoadic0,
    Bohr,
    Defect,
    Pinwheel,
    Chair,
}

impl SetName {
    fn spec(self, level: Option<u32>) -> GeneratorSpec {
        match self {
            SetName::Z => GeneratorSpec::IntegerLattice { dim: 1 },
            SetName::Z2 => GeneratorSpec::IntegerLattice { dim: 2 },
            SetName::Twoadic => GeneratorSpec::TwoAdic,
            SetName::Twoadic0 => GeneratorSpec::TwoAdicPunctured,
            SetName::Bohr => GeneratorSpec::BohrModulated { f: TrigPoly::golden() },
            SetName::Defect => GeneratorSpec::HalfLineDefect,
            SetName::Pinwheel => GeneratorSpec::DecoratedTiling {
                rule: "pinwheel".into(),
                level,
            },
            SetName::Chair => GeneratorSpec::DecoratedTiling {
                rule: "chair".into(),
                level,
            },
        }
    }

    fn rule(self) -> Option<&'static str> {
        match self {
            SetName::Pinwheel => Some("pinwheel"),
            SetName::Chair => Some("chair"),
            _ => None,
        }
    }
}

#[derive(Args)]
struct SetArgs {
    #[arg(long, value_enum)]
    set: SetName,
    /// Half-width of the realization window.
    #[arg(long)]
    window: Option<f64>,
    /// Use floating coordinates even where exact ones are available.
    #[arg(long)]
    float: bool,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    set: SetArgs,
    /// For tilings: the supertile level (σ^level of the prototile).
    #[arg(long)]
    level: Option<u32>,
    /// For tilings: write the decorated point set instead of the tiles.
    #[arg(long)]
    decorate: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum MetricCmd {
    /// Local rubber distance d_LR.
    Lr(PairArgs),
    /// Bracket on the local matching distance d_LM.
    Lm(PairArgs),
    /// Pattern deviation d_V over a box `--region lo,hi` or `--region x0,y0,x1,y1`.
    Dv {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        region: Vec<f64>,
    },
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
}

#[derive(Subcommand)]
enum SubstCmd {
    /// Write σ^k of a prototile as a tiling file.
    Apply {
        #[arg(long)]
        rule: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, default_value_t = 0)]
        proto: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the substitution matrix and its primitivity power.
    Matrix {
        #[arg(long)]
        rule: String,
    },
    /// Search for an irrational relative rotation of tiles.
    Dto {
        #[arg(long)]
        rule: String,
        #[arg(long, default_value_t = 2)]
        max_order: u32,
    },
}

#[derive(Subcommand)]
enum DecorateCmd {
    /// Tiling file to decorated point-set file.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decorated point-set file back to a tiling file.
    Decode {
        #[arg(long)]
        rule: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum RepetCmd {
    /// R̂(r, ε) table as CSV.
    Curve {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Pattern and search centers per axis of the sample grid.
        #[arg(long)]
        samples: Option<usize>,
        /// Allow small rotations (decorated tilings).
        #[arg(long)]
        wiggle: bool,
        /// Largest copy distance searched in wiggle mode.
        #[arg(long, default_value_t = 600.0)]
        cap: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// ε-periods on an integer shift grid and their gap gauge.
    Periods {
        #[command(flatten)]
        set: SetArgs,
        #[arg(long)]
        eps: f64,
        /// Shifts -range..=range.
        #[arg(long, default_value_t = 100)]
        range: i64,
        /// Box V for d_V-periods; d_LR-periods when absent.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        region: Option<Vec<f64>>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ErgodicCmd {
    /// Sampled bounds f⁻(U), f⁺(U) as CSV.
    Density {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        f: BumpArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<f64>,
        #[arg(long, default_value_t = 24)]
        boxes: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Birkhoff averages J_n over centered cubes.
    Birkhoff {
        #[command(flatten)]
        set: SetArgs,
        #[command(flatten)]
        f: BumpArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<f64>,
        /// Average over this many evenly spaced rotations (d = 2).
        #[arg(long)]
        rotations: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BumpArgs {
    /// Plateau radius of the smoothed count.
    #[arg(long, default_value_t = 0.25)]
    w: f64,
    /// Ramp width of the smoothed count.
    #[arg(long, default_value_t = 0.2)]
    b: f64,
}

impl BumpArgs {
    fn spec(&self) -> WeightFunctionSpec {
        WeightFunctionSpec::SmoothedCount { w: self.w, b: self.b }
    }
}

type CliResult<T> = std::result::Result<T, Error>;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

fn realize_set(args: &SetArgs, default_half: f64, level: Option<u32>) -> CliResult<PointSetData> {
    let spec = args.set.spec(level);
    let half = args.window.unwrap_or(default_half);
    if !(half > 0.0) {
        return Err(invalid("--window must be positive"));
    }
    let exact = !args.float && !matches!(args.set, SetName::Bohr);
    let dim = spec.dim();
    if exact {
        let h = Q::from_integer(half.ceil() as i128);
        let w = if dim == 1 {
            Aabb::interval(-h, h)
        } else {
            Aabb::centered_square(Point::origin(), h)
        };
        Ok(PointSetData::Exact(realize(&spec, &w)?))
    } else {
        let w = if dim == 1 {
            Aabb::interval(-half, half)
        } else {
            Aabb::centered_square(Point::origin(), half)
        };
        Ok(PointSetData::Float(realize(&spec, &w)?))
    }
}

fn supertile_tiles(rule: &str, k: u32, proto: usize) -> CliResult<Vec<Tile<Q>>> {
    let r = builtin_rule(rule)?;
    if proto >= r.prototiles.len() {
        return Err(invalid(format!("rule {rule} has {} prototiles", r.prototiles.len())));
    }
    Ok(substitute_n(
        &r,
        &[Tile {
            proto,
            g: Isometry::identity(),
        }],
        k,
    ))
}

fn decorated_set(rule: &str, tiles: &[Tile<Q>], level: Option<u32>) -> CliResult<PointSetWindow<Q>> {
    let phi = build_decoration(&builtin_rule(rule)?)?;
    let pts = decorate(&phi, tiles);
    if pts.is_empty() {
        return Err(invalid("empty tiling"));
    }
    let (lo, hi) = poly::bounds(&pts);
    Ok(PointSetWindow::from_points(
        2,
        pts,
        Aabb::new(2, lo, hi - lo),
        phi.radius,
        GeneratorSpec::DecoratedTiling {
            rule: rule.into(),
            level,
        },
    ))
}

fn gen(a: &GenArgs) -> CliResult<()> {
    if let (Some(rule), Some(level)) = (a.set.set.rule(), a.level) {
        let tiles = supertile_tiles(rule, level, 0)?;
        if a.decorate {
            let set = decorated_set(rule, &tiles, Some(level))?;
            let n = set.len();
            write_json(POINTSET_SCHEMA, &a.out, &PointSetData::Exact(set))?;
            println!("{n} points");
        } else {
            println!("{} tiles", tiles.len());
            write_json(
                TILING_SCHEMA,
                &a.out,
                &TilingData {
                    rule: rule.into(),
                    tiles,
                },
            )?;
        }
        return Ok(());
    }
    if a.level.is_some() && a.set.set.rule().is_none() {
        return Err(invalid("--level applies to tilings only"));
    }
    let default = if a.set.set.rule().is_some() { 10.0 } else { 100.0 };
    let data = realize_set(&a.set, default, None)?;
    let n = match &data {
        PointSetData::Exact(p) => p.len(),
        PointSetData::Float(p) => p.len(),
    };
    write_json(POINTSET_SCHEMA, &a.out, &data)?;
    println!("{n} points");
    Ok(())
}

fn load_pair(p: &PairArgs) -> CliResult<(PointSetData, PointSetData)> {
    let a: PointSetData = read_json(POINTSET_SCHEMA, &p.a)?;
    let b: PointSetData = read_json(POINTSET_SCHEMA, &p.b)?;
    if a.dim() != b.dim() {
        return Err(Error::Dimension(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok((a, b))
}

fn mixed() -> Error {
    Error::InvalidInput("one file is exact and the other floating; convert explicitly".into())
}

fn metric(cmd: &MetricCmd) -> CliResult<()> {
    match cmd {
        MetricCmd::Lr(p) => {
            let d = match load_pair(p)? {
                (PointSetData::Exact(a), PointSetData::Exact(b)) => local_rubber_distance(&a, &b),
                (PointSetData::Float(a), PointSetData::Float(b)) => local_rubber_distance(&a, &b),
                _ => return Err(mixed()),
            };
            if d.lower_bound_only {
                println!("{} (lower bound: windows too small to certify)", d.value);
            } else {
                println!("{}", d.value);
            }
        }
        MetricCmd::Lm(p) => {
            let b = match load_pair(p)? {
                (PointSetData::Exact(a), PointSetData::Exact(b)) => local_matching_distance(&a, &b, None),
                (PointSetData::Float(a), PointSetData::Float(b)) => local_matching_distance(&a, &b, None),
                _ => return Err(mixed()),
            };
            println!(
                "[{}, {}]{}",
                b.lower,
                b.upper,
                if b.certified { "" } else { " (floating)" }
            );
        }
        MetricCmd::Dv { pair, region } => {
            let (a, b) = load_pair(pair)?;
            let v = box_region(a.dim(), region)?;
            let d = match (a, b) {
                (PointSetData::Exact(a), PointSetData::Exact(b)) => {
                    let vq = exact_box(&v)?;
                    pattern_deviation(&a.points, &b.points, &Region::Box(vq)).value()
                }
                (PointSetData::Float(a), PointSetData::Float(b)) => {
                    match pattern_deviation(&a.points, &b.points, &Region::Box(v)) {
                        Deviation::Infinite => f64::INFINITY,
                        d => d.value(),
                    }
                }
                _ => return Err(mixed()),
            };
            println!("{d}");
        }
    }
    Ok(())
}

fn box_region(dim: usize, v: &[f64]) -> CliResult<Aabb<f64>> {
    match (dim, v) {
        (1, [lo, hi]) if lo <= hi => Ok(Aabb::interval(*lo, *hi)),
        (2, [x0, y0, x1, y1]) if x0 <= x1 && y0 <= y1 => {
            Ok(Aabb::new(2, Point::new(*x0, *y0), Point::new(x1 - x0, y1 - y0)))
        }
        _ => Err(invalid(format!("region needs {} ordered coordinates", 2 * dim))),
    }
}

/// Region corners as exact dyadic rationals (inputs are decimal literals).
fn exact_box(b: &Aabb<f64>) -> CliResult<Aabb<Q>> {
    let q = |x: f64| -> CliResult<Q> {
        Q::approximate_float(x).ok_or_else(|| invalid(format!("{x} is not representable exactly")))
    };
    Ok(Aabb::new(
        b.dim,
        Point::new(q(b.lo.x)?, q(b.lo.y)?),
        Point::new(q(b.side.x)?, q(b.side.y)?),
    ))
}

fn subst(cmd: &SubstCmd) -> CliResult<()> {
    match cmd {
        SubstCmd::Apply { rule, k, proto, out } => {
            let tiles = supertile_tiles(rule, *k, *proto)?;
            println!("{} tiles", tiles.len());
            write_json(
                TILING_SCHEMA,
                out,
                &TilingData {
                    rule: rule.clone(),
                    tiles,
                },
            )?;
        }
        SubstCmd::Matrix { rule } => {
            let m = substitution_matrix(&builtin_rule(rule)?);
            for row in &m {
                println!("{}", row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "));
            }
            match is_primitive(&m)? {
                Some(p) => println!("primitive at power {p}"),
                None => println!("not primitive"),
            }
        }
        SubstCmd::Dto { rule, max_order } => {
            let w = dto_witness(&builtin_rule(rule)?, *max_order);
            println!("{}", serde_json::to_string(&w.verdict)?.trim_matches('"'));
            if let (Some(order), Some(r)) = (w.order, w.relative_rotation) {
                println!("order {order}, relative rotation {} + {}i", r.cos, r.sin);
            }
        }
    }
    Ok(())
}

fn decorate_cmd(cmd: &DecorateCmd) -> CliResult<()> {
    match cmd {
        DecorateCmd::Encode { input, out } => {
            let t: TilingData = read_json(TILING_SCHEMA, input)?;
            let set = decorated_set(&t.rule, &t.tiles, None)?;
            println!("{} points", set.len());
            write_json(POINTSET_SCHEMA, out, &PointSetData::Exact(set))?;
        }
        DecorateCmd::Decode { rule, input, out } => {
            let p: PointSetData = read_json(POINTSET_SCHEMA, input)?;
            let PointSetData::Exact(p) = p else {
                return Err(Error::ExactRequired("decoding needs an exact point set".into()));
            };
            let phi = build_decoration(&builtin_rule(rule)?)?;
            let tiles = undecorate(&phi, &p.points)?;
            println!("{} tiles", tiles.len());
            write_json(
                TILING_SCHEMA,
                out,
                &TilingData {
                    rule: rule.clone(),
                    tiles,
                },
            )?;
        }
    }
    Ok(())
}

struct Reporter<'a> {
    command: &'a str,
    seed: u64,
    timing: bool,
    start: Instant,
}

impl Reporter<'_> {
    fn write(&self, path: &Path, config: Value, inputs: &[u8], tables: Value, witnesses: Value) -> CliResult<()> {
        let mut h = config.to_string().into_bytes();
        h.extend_from_slice(inputs);
        let report = ExperimentReport {
            command: self.command.into(),
            config,
            input_hash: content_hash(&h),
            seed: self.seed,
            tables,
            witnesses,
            runtime_ms: self.timing.then(|| self.start.elapsed().as_millis() as u64),
        };
        write_json(REPORT_SCHEMA, path, &report)
    }
}

fn exact_list(v: &[f64], what: &str) -> CliResult<Vec<Q>> {
    v.iter()
        .map(|&x| {
            Q::approximate_float(x)
                .filter(|_| x.is_finite())
                .ok_or_else(|| invalid(format!("bad {what} {x}")))
        })
        .collect()
}

fn set_config(s: &SetArgs) -> Value {
    json!({
        "set": s.set.to_possible_value().map(|v| v.get_name().to_string()),
        "window": s.window,
        "float": s.float,
    })
}

fn repet(cmd: &RepetCmd, rep: &Reporter) -> CliResult<()> {
    match cmd {
        RepetCmd::Curve {
            set,
            r,
            eps,
            samples,
            wiggle,
            cap,
            out,
            report,
        } => {
            let curve = if *wiggle {
                let rule = set
                    .set
                    .rule()
                    .ok_or_else(|| invalid("--wiggle needs a decorated tiling (pinwheel, chair)"))?;
                let half = set.window.unwrap_or(100.0);
                let n = samples.unwrap_or(8);
                let src = TilingSource::new(rule, half + cap + r.iter().fold(0.0, |a: f64, b| a.max(*b)) + 10.0)?;
                tiling_wiggle_curve(&src, r, eps, (n, n), rep.seed, half, *cap)?
            } else {
                let n = samples.unwrap_or(32);
                let default = if set.set.rule().is_some() { 40.0 } else { 1024.0 };
                match realize_set(set, default, None)? {
                    PointSetData::Exact(p) => repetitivity_curve(
                        &p,
                        &exact_list(r, "r")?,
                        &exact_list(eps, "eps")?,
                        false,
                        (n, n),
                        rep.seed,
                    )?,
                    PointSetData::Float(p) => repetitivity_curve(&p, r, eps, false, (n, n), rep.seed)?,
                }
            };
            let csv = curve.to_csv();
            write_atomic(out, csv.as_bytes())?;
            print!("{csv}");
            if let Some(path) = report {
                let config = json!({ "set": set_config(set), "r": r, "eps": eps, "samples": samples, "wiggle": wiggle, "cap": cap });
                let tables = json!({ "curve": curve.samples, "fits": curve.fits });
                rep.write(path, config, &[], tables, serde_json::to_value(&curve.witnesses)?)?;
            }
        }
        RepetCmd::Periods {
            set,
            eps,
            range,
            region,
            report,
        } => {
            let data = realize_set(set, (*range as f64) + 2.0 / eps + 60.0, None)?;
            let (max_gap, count) = match data {
                PointSetData::Exact(p) => {
                    let e = exact_list(&[*eps], "eps")?[0];
                    let mode = match region {
                        Some(v) => PeriodMode::V {
                            region: Region::Box(exact_box(&box_region(p.dim, v)?)?),
                        },
                        None => PeriodMode::Lr,
                    };
                    let ps = period_set(&p, e, mode, &integer_grid(p.dim, *range))?;
                    (ps.max_gap, ps.shifts.len())
                }
                PointSetData::Float(p) => {
                    let mode = match region {
                        Some(v) => PeriodMode::V {
                            region: Region::Box(box_region(p.dim, v)?),
                        },
                        None => PeriodMode::Lr,
                    };
                    let ps = period_set(&p, *eps, mode, &integer_grid(p.dim, *range))?;
                    (ps.max_gap, ps.shifts.len())
                }
            };
            println!("{count} periods, max_gap {max_gap}");
            if let Some(path) = report {
                let config = json!({ "set": set_config(set), "eps": eps, "range": range, "region": region });
                rep.write(
                    path,
                    config,
                    &[],
                    json!({ "count": count, "max_gap": max_gap }),
                    Value::Null,
                )?;
            }
        }
    }
    Ok(())
}

fn float_set(set: &SetArgs, default: f64) -> CliResult<PointSetWindow<f64>> {
    Ok(realize_set(set, default, None)?.to_f64())
}

fn ergodic(cmd: &ErgodicCmd, rep: &Reporter) -> CliResult<()> {
    match cmd {
        ErgodicCmd::Density {
            set,
            f,
            u,
            boxes,
            out,
            report,
        } => {
            let default = if set.set.rule().is_some() { 100.0 } else { 2000.0 };
            let p = float_set(set, default)?;
            let curve = density_curve(&f.spec(), &p, u, *boxes, rep.seed)?;
            let csv = curve.to_csv();
            write_atomic(out, csv.as_bytes())?;
            print!("{csv}");
            if let Some(path) = report {
                let config = json!({ "set": set_config(set), "f": f.spec(), "u": u, "boxes": boxes });
                rep.write(path, config, &[], json!({ "density": curve }), Value::Null)?;
            }
        }
        ErgodicCmd::Birkhoff {
            set,
            f,
            n,
            rotations,
            report,
        } => {
            let nmax = n.iter().fold(0.0, |a: f64, b| a.max(*b));
            let p = float_set(set, nmax * 1.5 + 2.0)?;
            let angles = rotations.map(rotation_grid);
            let mut rows = Vec::new();
            for &ni in n {
                let j = birkhoff_average(&f.spec(), &p, ni, angles.as_deref())?;
                println!("{ni},{j}");
                rows.push(json!({ "n": ni, "J": j }));
            }
            if let Some(path) = report {
                let config = json!({ "set": set_config(set), "f": f.spec(), "n": n, "rotations": rotations });
                rep.write(path, config, &[], json!({ "birkhoff": rows }), Value::Null)?;
            }
        }
    }
    Ok(())
}

fn render(input: &Path, out: &Path, width: f64) -> CliResult<()> {
    let text = fs::read_to_string(input)?;
    let env: Envelope<Value> = serde_json::from_str(&text)?;
    let style = Style {
        width,
        ..Style::default()
    };
    let svg = match env.schema.as_str() {
        TILING_SCHEMA => {
            let t: TilingData = delone::io::from_json(TILING_SCHEMA, &text)?;
            let rule = builtin_rule(&t.rule)?.to_f64();
            let tiles: Vec<Tile<f64>> = t
                .tiles
                .iter()
                .map(|t| Tile {
                    proto: t.proto,
                    g: t.g.to_f64(),
                })
                .collect();
            render_svg(
                &Scene::Tiling {
                    rule: &rule,
                    tiles: &tiles,
                },
                &style,
            )
        }
        POINTSET_SCHEMA => {
            let p: PointSetData = delone::io::from_json(POINTSET_SCHEMA, &text)?;
            render_svg(&Scene::Points(&p.to_f64()), &style)
        }
        other => return Err(invalid(format!("cannot render schema {other}"))),
    };
    write_atomic(out, svg.as_bytes())
}

fn run(cli: &Cli) -> CliResult<()> {
    let rep = |command| Reporter {
        command,
        seed: cli.seed,
        timing: cli.timing,
        start: Instant::now(),
    };
    match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Metric { kind } => metric(kind),
        Command::Subst { kind } => subst(kind),
        Command::Decorate { kind } => decorate_cmd(kind),
        Command::Repet { kind } => repet(kind, &rep("repet")),
        Command::Ergodic { kind } => ergodic(kind, &rep("ergodic")),
        Command::Render { input, out, width } => render(input, out, *width),
    }
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
    if let Some(n) = std::env::var("DELONE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
