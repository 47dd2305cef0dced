use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jetbv::bv::{self, BvExtension};
use jetbv::frontend::{format_expression, parse_model, ParsedModel, Style};
use jetbv::models::{self, ModelOptions};
use jetbv::variational::{self, LocalFunctional};
use jetbv::{jet, Error, Expression};

/// Exact variational calculus and BV master-equation checks for model files.
#[derive(Parser, Debug)]
#[command(name = "jetbv", version)]
struct Cli {
    /// Render expressions as LaTeX.
    #[arg(long, global = true)]
    latex: bool,
    /// Jet order up to which on-shell reduction is applied.
    #[arg(long, global = true, value_name = "N")]
    max_order: Option<u32>,
    /// Base dimension for built-in field theories (2, 3 or 4).
    #[arg(long, global = true, value_name = "N", default_value_t = 2)]
    dim: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the Euler-Lagrange system.
    El { file: PathBuf },
    /// Check whether the characteristics define a symmetry of the action.
    Symm {
        file: PathBuf,
        /// Characteristics such as `u = d(u;t)`; several may be given.
        #[arg(long = "q", required = true, num_args = 1..)]
        q: Vec<String>,
    },
    /// Check a Noether identity such as `D_t` or `d(E(A[mu]);mu)`.
    Noether {
        file: PathBuf,
        #[arg(long)]
        op: String,
    },
    /// Decide whether a density is a total divergence.
    Divergence {
        file: PathBuf,
        #[arg(long)]
        expr: String,
        /// Also construct F with D_t F = density (one independent variable only).
        #[arg(long)]
        witness: bool,
    },
    /// Antibracket of two densities.
    Bracket {
        file: PathBuf,
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
    },
    /// Apply the Koszul-Tate differential.
    Kt {
        file: PathBuf,
        #[arg(long)]
        expr: String,
    },
    /// Check the classical master equation for the model's master action.
    Master { file: PathBuf },
    /// Integrate the action over a box along a polynomial section.
    Eval {
        file: PathBuf,
        /// Field values and parameters, e.g. `u = t^2; m = 2`.
        #[arg(long)]
        section: String,
        /// Intervals, e.g. `t=0..1`.
        #[arg(long = "box")]
        bounds: String,
    },
    /// List built-in models or print one as a model file.
    Models {
        #[arg(long, value_name = "NAME")]
        emit: Option<String>,
        /// Potential of the free particle, an expression in `u[1..3]` and `m`.
        #[arg(long)]
        potential: Option<String>,
    },
}

/// Failure classes mapped to exit codes 2 (input) and 3 (mathematical domain).
enum Failure {
    Input(String),
    Domain(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::Parse(p) => {
                let mut msg = format!("error: {p}");
                if let Some(c) = p.caret() {
                    msg.push('\n');
                    msg.push_str(&c);
                }
                Failure::Input(msg)
            }
            Error::UnknownModel(_) | Error::UnknownGenerator(_) | Error::UnknownVariable(_) => {
                Failure::Input(format!("error: {e}"))
            }
            _ => Failure::Domain(format!("error: {e}")),
        }
    }
}

struct Report {
    ok: bool,
    text: String,
}

impl Report {
    fn ok(text: String) -> Self {
        Report { ok: true, text }
    }
}

struct Ctx {
    style: Style,
    max_order: Option<u32>,
}

impl Ctx {
    fn show(&self, e: &Expression) -> String {
        format_expression(e, self.style)
    }
}

fn load(path: &PathBuf) -> Result<ParsedModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("error: cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| match Failure::from(e) {
        Failure::Input(m) => Failure::Input(format!("{}: {}", path.display(), m.trim_start_matches("error: "))),
        other => other,
    })
}

/// The model's BV extension, or the trivial one when none is declared.
fn bv_of(model: &ParsedModel) -> Result<BvExtension, Failure> {
    match &model.bv {
        Some(b) => Ok(b.clone()),
        None => Ok(bv::extend_to_bv(&model.theory, Vec::new())?),
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let cx = Ctx { style: if cli.latex { Style::Latex } else { Style::Plain }, max_order: cli.max_order };
    match &cli.command {
        Command::El { file } => {
            let m = load(file)?;
            let sig = m.theory.signature().clone();
            let el = variational::euler_lagrange_system(&m.theory)?;
            let mut out = String::new();
            for ((gen, comp), e) in &el {
                out.push_str(&format!("EL({}) = {}\n", sig.component_label(*gen, comp), cx.show(e)));
            }
            Ok(Report::ok(out))
        }
        Command::Symm { file, q } => {
            let m = load(file)?;
            let x = m.characteristics(&q.join("; "))?;
            let image = jet::prolong_apply(&x, m.theory.lagrangian())?;
            if jet::is_total_divergence(&image)? {
                let mut out = String::from("symmetry: pr X(L) is a total divergence\n");
                if image.signature().num_vars() == 1 && !image.is_zero() {
                    for (v, f) in jet::divergence_witness(&image)? {
                        out.push_str(&format!("witness {}: {}\n", image.signature().vars()[v], cx.show(&f)));
                    }
                }
                Ok(Report::ok(out))
            } else {
                Ok(Report { ok: false, text: format!("not a symmetry\npr X(L) = {}\n", cx.show(&image)) })
            }
        }
        Command::Noether { file, op } => {
            let m = load(file)?;
            let n = m.operator(op)?;
            let residual = variational::noether_residual(&m.theory, &n)?;
            if residual.is_zero() {
                return Ok(Report::ok("Noether identity holds: residual 0\n".into()));
            }
            let mut text = format!("not a Noether identity\nresidual: {}\n", cx.show(&residual));
            if let Some(k) = cx.max_order {
                let reduced = variational::on_shell_reduce(&residual, &m.theory, k)?;
                if reduced.is_zero() {
                    text.push_str(&format!("residual vanishes on shell (order {k})\n"));
                    return Ok(Report { ok: true, text });
                }
                text.push_str(&format!("on-shell residual (order {k}): {}\n", cx.show(&reduced)));
            }
            Ok(Report { ok: false, text })
        }
        Command::Divergence { file, expr, witness } => {
            let m = load(file)?;
            let e = m.expression(expr)?;
            if !jet::is_total_divergence(&e)? {
                let mut text = String::from("not a total divergence\n");
                for ((gen, comp), el) in jet::euler_lagrange_all(&e, jetbv::exec::default_policy()) {
                    if !el.is_zero() {
                        let label = e.signature().component_label(gen, &comp);
                        text.push_str(&format!("EL({label}) = {}\n", cx.show(&el)));
                    }
                }
                return Ok(Report { ok: false, text });
            }
            let mut text = String::from("total divergence\n");
            if *witness {
                for (v, f) in jet::divergence_witness(&e)? {
                    text.push_str(&format!("witness {}: {}\n", e.signature().vars()[v], cx.show(&f)));
                }
            }
            Ok(Report::ok(text))
        }
        Command::Bracket { file, f, g } => {
            let m = load(file)?;
            let b = bv_of(&m)?;
            let ctx_model = ParsedModel { bv: Some(b), ..m };
            let fe = LocalFunctional::new(ctx_model.expression(f)?);
            let ge = LocalFunctional::new(ctx_model.expression(g)?);
            let r = bv::antibracket(&fe, &ge)?;
            Ok(Report::ok(format!("{}\n", cx.show(r.density()))))
        }
        Command::Kt { file, expr } => {
            let m = load(file)?;
            let b = bv_of(&m)?;
            let ctx_model = ParsedModel { bv: Some(b.clone()), ..m };
            let e = ctx_model.expression(expr)?;
            Ok(Report::ok(format!("{}\n", cx.show(&bv::koszul_tate_apply(&b, &e)?))))
        }
        Command::Master { file } => {
            let m = load(file)?;
            let b = bv_of(&m)?;
            let report = bv::check_master_equation(&b)?;
            if report.holds {
                Ok(Report::ok("master equation holds in h(A)\n".into()))
            } else {
                Ok(Report {
                    ok: false,
                    text: format!(
                        "master equation fails\nresidual (S,S) = {}\n",
                        cx.show(report.residual.density())
                    ),
                })
            }
        }
        Command::Eval { file, section, bounds } => {
            let m = load(file)?;
            let s = m.section(section)?;
            let bx = m.bounds(bounds)?;
            let f = LocalFunctional::new(m.theory.lagrangian().clone());
            let v = variational::integrate_on_box(&f, &s, &bx)?;
            Ok(Report::ok(format!("{v}\n")))
        }
        Command::Models { emit, potential } => match emit {
            None => Ok(Report::ok(models::list_models().iter().map(|n| format!("{n}\n")).collect())),
            Some(name) => {
                let opts = ModelOptions { dim: cli.dim, potential: potential.clone() };
                let text = models::emit(name, &opts)?;
                // the emitted text must itself be a valid model
                models::builtin_with(name, &opts)?;
                Ok(Report::ok(text))
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(r) => {
            print!("{}", r.text);
            ExitCode::from(if r.ok { 0 } else { 1 })
        }
        Err(Failure::Input(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}
