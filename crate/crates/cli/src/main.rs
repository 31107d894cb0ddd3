use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use nmrfetch::config::{parse_config, ExperimentConfig};
use nmrfetch::engine::{query_backends, spectrum_engines};
use nmrfetch::export::{ascii_plot, parse_spectrum_csv, spectrum_csv, spectrum_svg, summary_json, summary_text};
use nmrfetch::oracle::{compare_unitaries, pulse_unitary, MarkedSet};
use nmrfetch::pipeline::{run_experiment, Summary};
use nmrfetch::sequence::parse_sequence;
use nmrfetch::spinops::{validate, TransitionTable};

#[derive(Parser)]
#[command(name = "nmrfetch", version, about = "Single-query retrieval of marked items from a simulated NMR ancilla spectrum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SummaryFormat {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment and print the recovered marked items.
    Simulate {
        #[arg(long)]
        system: PathBuf,
        /// Comma-separated bitstrings; replaces `marked` from the file.
        #[arg(long)]
        marked: Option<String>,
        /// Directory for the spectrum CSV, plot and summary.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit nonzero unless exactly these items are recovered.
        #[arg(long)]
        expect: Option<String>,
        #[arg(long)]
        ascii_plot: bool,
        #[arg(long, value_enum, default_value = "text")]
        summary_format: SummaryFormat,
        #[arg(long)]
        engine: Option<String>,
        #[arg(long)]
        backend: Option<String>,
        /// Replace existing output files.
        #[arg(long)]
        force: bool,
    },
    /// Check a spin system and print its ancilla transition table.
    Validate {
        #[arg(long)]
        system: PathBuf,
    },
    /// Render a spectrum CSV as SVG.
    Plot {
        csv: PathBuf,
        /// SVG path; defaults to the CSV path with an .svg extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        ascii_plot: bool,
        #[arg(long)]
        force: bool,
    },
    /// Print the query unitary for a configuration.
    Oracle {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        marked: Option<String>,
        #[arg(long)]
        backend: Option<String>,
        /// Pulse listing to compare against the compiled matrix.
        #[arg(long)]
        sequence: Option<PathBuf>,
    },
    /// List the registered spectrum engines and query backends.
    Strategies,
}

fn load(path: &Path, marked: Option<&str>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    if let Some(m) = marked {
        cfg.marked = MarkedSet::parse(m, cfg.system.n_register()).context("--marked")?;
        cfg.defaults.retain(|d| !d.starts_with("readout.marked"));
    }
    Ok(cfg)
}

fn write_new(path: &Path, contents: &str, force: bool) -> Result<()> {
    if !force && path.exists() {
        bail!("{} already exists (use --force to replace it)", path.display());
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    system: &Path,
    marked: Option<&str>,
    out: Option<&Path>,
    expect: Option<&str>,
    ascii: bool,
    format: SummaryFormat,
    engine: Option<String>,
    backend: Option<String>,
    force: bool,
) -> Result<bool> {
    let mut cfg = load(system, marked)?;
    if let Some(e) = engine {
        cfg.readout.engine = e;
    }
    if let Some(b) = backend {
        cfg.readout.backend = b;
    }
    let expected = expect
        .map(|e| MarkedSet::parse(e, cfg.system.n_register()))
        .transpose()
        .context("--expect")?;

    let report = run_experiment(&cfg)?;
    let mut summary = Summary::new(&cfg, &report, expected.is_some());
    if let Some(e) = &expected {
        summary.expected = Some(e.to_string());
        summary.matches = Some(report.matches(e));
    }
    let summary_body = match format {
        SummaryFormat::Text => summary_text(&summary),
        SummaryFormat::Structured => summary_json(&summary),
    };

    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let summary_name = cfg.outputs.summary.clone().unwrap_or_else(|| {
            match format {
                SummaryFormat::Text => "summary.txt",
                SummaryFormat::Structured => "summary.json",
            }
            .to_string()
        });
        let names = [&cfg.outputs.spectrum, &cfg.outputs.plot, &summary_name];
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                bail!("output name {a} is used for two different files");
            }
        }
        write_new(&dir.join(&cfg.outputs.spectrum), &spectrum_csv(&report.spectrum), force)?;
        let title = format!("ancilla spectrum, marked {}", cfg.marked);
        write_new(&dir.join(&cfg.outputs.plot), &spectrum_svg(&report.spectrum, &title)?, force)?;
        write_new(&dir.join(&summary_name), &summary_body, force)?;
    } else {
        eprint!("{summary_body}");
    }

    let mut stdout = std::io::stdout().lock();
    if ascii {
        write!(stdout, "{}", ascii_plot(&report.spectrum, 72))?;
    }
    for b in report.readout.marked.iter() {
        writeln!(stdout, "{b}")?;
    }
    if !report.readout.unseen.is_empty() {
        let unseen: Vec<String> = report.readout.unseen.iter().map(|b| b.to_string()).collect();
        eprintln!("warning: no peak found for {}", unseen.join(","));
    }
    Ok(expected.is_none_or(|e| report.matches(&e)))
}

fn validate_cmd(system: &Path) -> Result<bool> {
    let cfg = load(system, None)?;
    let report = validate(&cfg.system, cfg.readout.resolution_hz);
    let table = TransitionTable::of(&cfg.system);
    println!("register    line (Hz)");
    for row in table.rows() {
        println!("{:<10} {:>10.4}", row.register.to_string(), row.freq_hz);
    }
    if let Some((gap, a, b)) = table.min_gap() {
        println!("smallest gap {gap:.4} Hz ({a} / {b}), resolution {:.4} Hz", cfg.readout.resolution_hz);
    }
    println!("ok");
    Ok(report.is_ok())
}

fn plot_cmd(csv: &Path, out: Option<&Path>, ascii: bool, force: bool) -> Result<()> {
    let text = fs::read_to_string(csv).with_context(|| format!("reading {}", csv.display()))?;
    let spectrum = parse_spectrum_csv(&text).with_context(|| format!("in {}", csv.display()))?;
    let target = out.map(Path::to_path_buf).unwrap_or_else(|| csv.with_extension("svg"));
    let title = csv.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    write_new(&target, &spectrum_svg(&spectrum, &title)?, force)?;
    if ascii {
        print!("{}", ascii_plot(&spectrum, 72));
    }
    Ok(())
}

fn oracle_cmd(system: &Path, marked: Option<&str>, backend: Option<&str>, sequence: Option<&Path>) -> Result<()> {
    let cfg = load(system, marked)?;
    let backend = query_backends().get(backend.unwrap_or(&cfg.readout.backend))?;
    let oracle = backend.build(&cfg.system, &cfg.marked)?;
    println!("backend {}, marked {}", backend.name(), cfg.marked);
    let m = oracle.matrix();
    for r in 0..m.dim() {
        let row: Vec<String> = (0..m.dim())
            .map(|c| {
                let z = m.get(r, c);
                let re = if z.re.abs() < 1e-12 { 0.0 } else { z.re };
                let im = if z.im.abs() < 1e-12 { 0.0 } else { z.im };
                if im == 0.0 {
                    format!("{re:>7.3}")
                } else {
                    format!("{re:.3}{im:+.3}i")
                }
            })
            .collect();
        println!("{}", row.join(" "));
    }
    if let Some(path) = sequence {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let events = parse_sequence(&text, &cfg.system).with_context(|| format!("in {}", path.display()))?;
        let u = pulse_unitary(&events, &cfg.system)?;
        let cmp = compare_unitaries(&u, m);
        println!("sequence {}: {} events", path.display(), events.len());
        println!("max |U_seq - U| = {:.3e}", cmp.max_abs_diff);
        println!(
            "global phase {:.6} rad, max difference after removing it {:.3e}",
            cmp.global_phase, cmp.max_abs_diff_modulo_phase
        );
    }
    Ok(())
}

fn strategies() {
    println!("spectrum engines:");
    for e in spectrum_engines().iter() {
        println!("  {:<12} {}", e.name(), e.describe());
    }
    println!("query backends:");
    for b in query_backends().iter() {
        println!("  {:<12} {}", b.name(), b.describe());
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate {
            system,
            marked,
            out,
            expect,
            ascii_plot,
            summary_format,
            engine,
            backend,
            force,
        } => simulate(
            &system,
            marked.as_deref(),
            out.as_deref(),
            expect.as_deref(),
            ascii_plot,
            summary_format,
            engine,
            backend,
            force,
        ),
        Command::Validate { system } => validate_cmd(&system),
        Command::Plot {
            csv,
            out,
            ascii_plot,
            force,
        } => plot_cmd(&csv, out.as_deref(), ascii_plot, force).map(|_| true),
        Command::Oracle {
            system,
            marked,
            backend,
            sequence,
        } => oracle_cmd(&system, marked.as_deref(), backend.as_deref(), sequence.as_deref()).map(|_| true),
        Command::Strategies => {
            strategies();
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
