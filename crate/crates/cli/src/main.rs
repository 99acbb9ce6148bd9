use anyhow::Context;
use cellca::diagnostics::{decompose_inertia, outlier_report, OutlierReport};
use cellca::io::{read_table, render_map, MapKind, MapOptions, ReadOptions, SolutionDocument};
use cellca::reconstitution::parse_cell_label;
use cellca::{
    fit_ca, fit_supplementary, reconstitute, CellSet, ContingencyTable, Error, NegativePolicy,
    ReconstitutionConfig, SupplementarySpec,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cellca",
    version,
    about = "Correspondence analysis with cell reconstitution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the table and write the solution.
    Fit(FitArgs),
    /// Rank the points and cells that dominate each dimension.
    Diagnose(DiagnoseArgs),
    /// Replace flagged cells by their reconstituted values and refit.
    Reconstitute(ReconstituteArgs),
    /// Refit with some rows and columns projected as supplementary points.
    Supplementary(SupplementaryArgs),
    /// Draw a correspondence map as SVG.
    Render(RenderArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV table; `-` reads stdin.
    #[arg(short, long)]
    input: PathBuf,
    /// Drop all-zero rows and columns instead of rejecting the table.
    #[arg(long)]
    drop_empty: bool,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Svg,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    map: MapArgs,
}

#[derive(Args)]
struct MapArgs {
    /// symmetric, asymmetric_row, asymmetric_col or contribution_biplot.
    #[arg(long, default_value = "symmetric")]
    kind: MapKind,
    /// Dimension pair to plot, 1-based.
    #[arg(long, default_value = "1,2", value_parser = parse_dims)]
    dims: (usize, usize),
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Attach a diagnostics report with this many entries per list.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 5)]
    top: usize,
    /// Write the solution document with the report instead of text.
    #[arg(long)]
    json: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstituteArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Cell to reconstitute as ROW:COL; repeatable.
    #[arg(long = "cell", required = true)]
    cells: Vec<String>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// error, fallback or clamp.
    #[arg(long)]
    negative_policy: Option<NegativePolicy>,
}

#[derive(Args)]
struct SupplementaryArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long = "sup-row")]
    sup_rows: Vec<String>,
    #[arg(long = "sup-col")]
    sup_cols: Vec<String>,
    /// Make this cell's row and column supplementary; repeatable.
    #[arg(long = "cell")]
    cells: Vec<String>,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    map: MapArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Directory of static UI assets.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected A,B")?;
    let a = a
        .trim()
        .parse()
        .map_err(|_| format!("bad dimension `{a}`"))?;
    let b = b
        .trim()
        .parse()
        .map_err(|_| format!("bad dimension `{b}`"))?;
    Ok((a, b))
}

fn load(args: &InputArgs) -> anyhow::Result<ContingencyTable> {
    let opts = ReadOptions {
        drop_empty: args.drop_empty,
    };
    let table = if args.input.as_os_str() == "-" {
        read_table(std::io::stdin().lock(), &opts)?
    } else {
        let f = std::fs::File::open(&args.input)
            .with_context(|| format!("cannot open {}", args.input.display()))?;
        read_table(f, &opts)?
    };
    Ok(table)
}

fn emit(output: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => Ok(std::io::stdout().lock().write_all(text.as_bytes())?),
    }
}

fn resolve_cells(t: &ContingencyTable, specs: &[String]) -> cellca::Result<CellSet> {
    let cells = specs
        .iter()
        .map(|s| parse_cell_label(t, s))
        .collect::<cellca::Result<Vec<_>>>()?;
    CellSet::new(t, cells)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit(a) => {
            let t = load(&a.input)?;
            let sol = fit_ca(&t)?;
            match a.output.format {
                Format::Json => {
                    let mut doc = SolutionDocument::new(&t, &sol);
                    if let Some(n) = a.top {
                        doc =
                            doc.with_diagnostics(outlier_report(&decompose_inertia(&t, &sol)?, n));
                    }
                    emit(a.output.output.as_ref(), &doc.to_json())
                }
                Format::Svg => {
                    let svg = render_map(
                        &t,
                        &sol,
                        a.output.map.kind,
                        a.output.map.dims,
                        &MapOptions::default(),
                    )?;
                    emit(a.output.output.as_ref(), &svg)
                }
            }
        }
        Command::Diagnose(a) => {
            let t = load(&a.input)?;
            let sol = fit_ca(&t)?;
            let report = outlier_report(&decompose_inertia(&t, &sol)?, a.top);
            if a.json {
                let doc = SolutionDocument::new(&t, &sol).with_diagnostics(report);
                emit(a.output.as_ref(), &doc.to_json())
            } else {
                emit(a.output.as_ref(), &report_text(&report))
            }
        }
        Command::Reconstitute(a) => {
            let t = load(&a.input)?;
            let cells = resolve_cells(&t, &a.cells)?;
            let mut cfg = ReconstitutionConfig::default();
            if let Some(o) = a.order {
                cfg.order = o;
            }
            if let Some(tol) = a.tolerance {
                cfg.tolerance = tol;
            }
            if let Some(m) = a.max_iter {
                cfg.max_iterations = m;
            }
            if let Some(p) = a.negative_policy {
                cfg.negative_policy = p;
            }
            cfg.validate(t.n_rows(), t.n_cols())?;
            let res = reconstitute(&t, &cells, &cfg)?;
            for note in &res.advisories {
                eprintln!("note: {note}");
            }
            match a.output.format {
                Format::Json => emit(
                    a.output.output.as_ref(),
                    &SolutionDocument::from_reconstitution(&res).to_json(),
                ),
                Format::Svg => {
                    let svg = render_map(
                        &res.table,
                        &res.solution,
                        a.output.map.kind,
                        a.output.map.dims,
                        &MapOptions::default(),
                    )?;
                    emit(a.output.output.as_ref(), &svg)
                }
            }
        }
        Command::Supplementary(a) => {
            let t = load(&a.input)?;
            let mut rows = a.sup_rows.clone();
            let mut cols = a.sup_cols.clone();
            for &(i, j) in resolve_cells(&t, &a.cells)?.cells() {
                let (r, c) = (&t.row_labels()[i], &t.col_labels()[j]);
                if !rows.contains(r) {
                    rows.push(r.clone());
                }
                if !cols.contains(c) {
                    cols.push(c.clone());
                }
            }
            let sup = fit_supplementary(&t, &SupplementarySpec::new(rows, cols))?;
            match a.output.format {
                Format::Json => emit(
                    a.output.output.as_ref(),
                    &SolutionDocument::from_supplementary(&sup).to_json(),
                ),
                Format::Svg => {
                    let opts = MapOptions {
                        supplementary: Some(&sup),
                        ..Default::default()
                    };
                    let svg = render_map(
                        &sup.reduced,
                        &sup.base,
                        a.output.map.kind,
                        a.output.map.dims,
                        &opts,
                    )?;
                    emit(a.output.output.as_ref(), &svg)
                }
            }
        }
        Command::Render(a) => {
            let t = load(&a.input)?;
            let sol = fit_ca(&t)?;
            let opts = MapOptions {
                title: a.title,
                ..Default::default()
            };
            emit(
                a.output.as_ref(),
                &render_map(&t, &sol, a.map.kind, a.map.dims, &opts)?,
            )
        }
        Command::Serve(a) => {
            let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, a.port));
            eprintln!("listening on http://{addr}");
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(cellca_service::serve(addr, a.static_dir))?;
            Ok(())
        }
    }
}

fn report_text(r: &OutlierReport) -> String {
    let mut s = format!("total inertia {:.6}\n", r.total_inertia);
    for d in &r.dimensions {
        s += &format!(
            "\ndim {}  sigma {:.6}  {:.1}% of inertia\n",
            d.dim,
            d.sigma,
            100.0 * d.inertia_share
        );
        for p in d.rows.iter().chain(&d.cols) {
            s += &format!(
                "  {:<4} {:<24} contrib {:>6.1}%  mass {:.4}\n",
                p.axis.to_string(),
                p.label,
                100.0 * p.contribution,
                p.mass
            );
        }
        for c in &d.cells {
            s += &format!(
                "  cell {}:{}  {:.2}% of total\n",
                c.row,
                c.col,
                100.0 * c.share
            );
        }
    }
    if !r.cells.is_empty() {
        s += "\ncells by share of total inertia\n";
        for c in &r.cells {
            s += &format!("  {}:{}  {:.2}%\n", c.row, c.col, 100.0 * c.share);
        }
    }
    for g in &r.duplicate_groups {
        s += &format!(
            "\nidentical profiles ({}): {}\n",
            g.axis,
            g.members.join(", ")
        );
    }
    for a in &r.advisories {
        s += &format!("\nadvisory: {}\n", a.message);
    }
    s
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_input_error() => 2,
        Some(Error::ZeroMargin { .. } | Error::InvalidMatrix(_) | Error::Shape(_)) => 2,
        Some(_) => 1,
        // unreadable input files
        None => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match err.downcast_ref::<Error>() {
                Some(e) => eprintln!(
                    "{}",
                    serde_json::to_string_pretty(&e.payload()).expect("payload serializes")
                ),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
