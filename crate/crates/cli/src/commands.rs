//! Subcommand implementations. Each returns the JSON document to emit.

use std::path::Path;

use num_complex::Complex64;
use pomalg::algebra::{combine_with_hermitian, deviation, distance, expect_g, min_distance};
use pomalg::joint::build_joint_space;
use pomalg::phase::{
    canonical_phase_pom, circular_deviation, delta_asymptote, number_phase_bound, FockState,
};
use pomalg::pom::{expect_f, maximal_extension, probabilities, reduce_nonredundant, sample, validate, variance};
use pomalg::{
    uncertainty, CombinedPom, ComplexMatrix, GeneralPom, MaximalPom, Observable, OpExpr, State, Tolerance,
};
use serde_json::{json, Value};

use crate::format::{self, emit_general, emit_hermitian, emit_maximal, num, reals, PomDoc};
use crate::{read_json, CliError, Command, Context, Outcome};

type CResult<T> = Result<T, CliError>;

fn ok(document: Value) -> CResult<Outcome> {
    Ok(Outcome { document, code: 0 })
}

fn format_err(path: &Path, err: format::FormatError) -> CliError {
    CliError::Format { file: path.display().to_string(), err }
}

fn load_pom(path: &Path) -> CResult<PomDoc> {
    format::parse_pom(&read_json(path)?).map_err(|e| format_err(path, e))
}

/// Loads a POM and returns its rank-1 form, decomposing general elements.
fn load_maximal(path: &Path, tol: &Tolerance) -> CResult<MaximalPom> {
    match load_pom(path)? {
        PomDoc::Maximal(m) => Ok(m),
        PomDoc::General(g) => Ok(maximal_extension(&g, tol)?),
    }
}

fn load_general(path: &Path) -> CResult<GeneralPom> {
    Ok(match load_pom(path)? {
        PomDoc::General(g) => g,
        PomDoc::Maximal(m) => m.to_general(),
    })
}

fn load_hermitian(path: &Path) -> CResult<ComplexMatrix> {
    format::parse_hermitian(&read_json(path)?).map_err(|e| format_err(path, e))
}

fn parse_expr(src: &str) -> CResult<OpExpr> {
    OpExpr::parse(src).map_err(|e| CliError::Usage(format!("--g `{src}`: {e}")))
}

/// Resolves `--state`. Generated states need a dimension; coherent states
/// choose one from `auto_tail` when `dim` is absent.
fn load_fock(spec: &str, dim: Option<usize>, auto_tail: Option<f64>, tol: &Tolerance) -> CResult<FockState> {
    let need_dim = || {
        dim.filter(|&d| d > 0)
            .ok_or_else(|| CliError::Usage(format!("--state {spec} needs a positive --dim")))
    };
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let psi = match kind {
        "vacuum" => FockState::vacuum(need_dim()?),
        "fock" => {
            let n: usize = arg
                .parse()
                .map_err(|_| CliError::Usage(format!("--state fock:N expects an integer, got `{arg}`")))?;
            let d = need_dim()?;
            if n >= d {
                return Err(CliError::Usage(format!("Fock level {n} does not fit in dimension {d}")));
            }
            FockState::fock(n, d)
        }
        "coherent" => {
            let parts: Vec<&str> = arg.split(',').collect();
            let parsed: Vec<f64> = parts.iter().filter_map(|p| p.trim().parse().ok()).collect();
            if parts.len() != 2 || parsed.len() != 2 || parsed.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage(format!("--state coherent:RE,IM expects two numbers, got `{arg}`")));
            }
            let alpha = Complex64::new(parsed[0], parsed[1]);
            match (dim, auto_tail) {
                (Some(d), _) if d > 0 => FockState::coherent_in(alpha, d),
                (None, Some(tail)) => FockState::coherent(alpha, tail),
                _ => FockState::coherent_in(alpha, need_dim()?),
            }
        }
        "file" => load_state_file(Path::new(arg), dim, tol)?,
        _ => load_state_file(Path::new(spec), dim, tol)?,
    };
    Ok(psi)
}

fn load_state_file(path: &Path, dim: Option<usize>, tol: &Tolerance) -> CResult<FockState> {
    let psi = format::parse_state(&read_json(path)?, tol).map_err(|e| format_err(path, e))?;
    if let Some(d) = dim {
        if psi.dim() != d {
            return Err(CliError::Usage(format!("{} has dimension {}, expected {d}", path.display(), psi.dim())));
        }
    }
    Ok(FockState::new(psi))
}

fn load_state(spec: &str, dim: usize, tol: &Tolerance) -> CResult<State> {
    Ok(load_fock(spec, Some(dim), None, tol)?.state().clone())
}

/// Outcome functions accepted by `expect --f`.
fn outcome_function(spec: &str) -> CResult<Box<dyn Fn(f64) -> f64>> {
    let f: Box<dyn Fn(f64) -> f64> = match spec.trim() {
        "a" => Box::new(|a| a),
        "abs" => Box::new(f64::abs),
        "cos" => Box::new(f64::cos),
        "sin" => Box::new(f64::sin),
        other => match other.strip_prefix("a^").map(str::parse::<i32>) {
            Some(Ok(k)) => Box::new(move |a: f64| a.powi(k)),
            _ => return Err(CliError::Usage(format!("--f `{spec}`: expected a, a^K, abs, cos or sin"))),
        },
    };
    Ok(f)
}

fn distribution(pairs: &[(f64, f64)]) -> Value {
    Value::Array(
        pairs
            .iter()
            .map(|(k, p)| json!({ "outcome": num(*k), "probability": num(*p) }))
            .collect(),
    )
}

fn combined_document(c: &CombinedPom, psi: Option<&State>, tol: &Tolerance) -> CResult<Value> {
    let mut doc = json!({
        "expr": c.expr.to_string(),
        "operands": c.operands,
        "outcomes": reals(&c.outcomes()),
        "completeness_defect": num(c.completeness_defect()),
        "pom": emit_maximal(&c.pom),
    });
    if let Some(psi) = psi {
        doc["distribution"] = distribution(&c.distribution(psi, tol)?);
        doc["mean"] = num(c.moment(1, psi)?);
    }
    Ok(doc)
}

pub fn dispatch(command: &Command, ctx: &Context) -> CResult<Outcome> {
    let tol = &ctx.tol;
    match command {
        Command::Validate { pom } => {
            let doc = load_pom(pom)?;
            let report = match &doc {
                PomDoc::General(g) => validate(g, tol),
                PomDoc::Maximal(m) => validate(m, tol),
            };
            let pairs: Vec<Value> = report
                .redundant_pairs
                .iter()
                .map(|p| json!({ "first": p.first, "second": p.second, "ratio": num(p.ratio) }))
                .collect();
            Ok(Outcome {
                code: if report.pass { 0 } else { 1 },
                document: json!({
                    "kind": doc.kind(),
                    "dim": doc.dim(),
                    "pass": report.pass,
                    "positive": report.positive,
                    "complete": report.complete,
                    "completeness_defect": num(report.completeness_defect),
                    "min_eigenvalues": reals(&report.min_eigenvalues),
                    "redundant_pairs": pairs,
                    "zero_elements": report.zero_elements,
                }),
            })
        }
        Command::Reduce { pom } => {
            let r = reduce_nonredundant(&load_general(pom)?, tol)?;
            ok(json!({ "pom": emit_general(&r.pom), "groups": r.groups, "warnings": r.warnings }))
        }
        Command::Maximalize { pom } => ok(emit_maximal(&load_maximal(pom, tol)?)),
        Command::Expect { pom, state, f } => {
            let p = load_general(pom)?;
            let psi = load_state(&state.state, p.dim(), tol)?;
            let value = expect_f(&p, outcome_function(f)?, &psi, tol)?;
            ok(json!({ "f": f, "expectation": num(value) }))
        }
        Command::Variance { pom, state } => {
            let p = load_general(pom)?;
            let psi = load_state(&state.state, p.dim(), tol)?;
            let mean = expect_f(&p, |a| a, &psi, tol)?;
            ok(json!({ "mean": num(mean), "variance": num(variance(&p, &psi)?) }))
        }
        Command::Sample { pom, state, n, raw } => {
            let p = load_general(pom)?;
            let psi = load_state(&state.state, p.dim(), tol)?;
            let draws = sample(&p, &psi, *n, ctx.seed)?;
            let probs = probabilities(&p, &psi)?;
            let mut outcomes: Vec<f64> = (0..p.len()).map(|i| p.outcome(i)).collect();
            outcomes.sort_by(f64::total_cmp);
            outcomes.dedup();
            let rows: Vec<Value> = outcomes
                .iter()
                .map(|&k| {
                    let count = draws.iter().filter(|&&d| d == k).count();
                    let prob: f64 = (0..p.len()).filter(|&i| p.outcome(i) == k).map(|i| probs[i]).sum();
                    json!({
                        "outcome": num(k),
                        "count": count,
                        "frequency": num(count as f64 / *n as f64),
                        "probability": num(prob),
                    })
                })
                .collect();
            let mut doc = json!({ "n": n, "seed": ctx.seed, "frequencies": rows });
            if *raw {
                doc["samples"] = reals(&draws);
            }
            ok(doc)
        }
        Command::Deviation { pom, x, state } => {
            let a = load_maximal(pom, tol)?;
            let x = load_hermitian(x)?;
            let psi = load_state(&state.state, a.dim(), tol)?;
            ok(json!({ "deviation": num(deviation(&a, &x, &psi, tol)?) }))
        }
        Command::Distance { pom, x } => {
            let a = load_maximal(pom, tol)?;
            ok(json!({ "distance": num(distance(&a, &load_hermitian(x)?, tol)?) }))
        }
        Command::Mindist { pom } => {
            let a = load_maximal(pom, tol)?;
            let (d, mean) = min_distance(&a, tol)?;
            ok(json!({
                "min_distance": num(d),
                "projective": a.is_projective(tol),
                "mean_operator": emit_hermitian(&mean),
            }))
        }
        Command::CombineHx { pom, x, g, state } => {
            let a = load_maximal(pom, tol)?;
            let x = load_hermitian(x)?;
            let g = parse_expr(g)?;
            let c = combine_with_hermitian(&a, &x, &g, tol)?;
            let psi = state.as_deref().map(|s| load_state(s, a.dim(), tol)).transpose()?;
            let mut doc = combined_document(&c, psi.as_ref(), tol)?;
            if let Some(psi) = &psi {
                doc["expectation"] = num(expect_g(&a, &x, &g, psi, tol)?);
            }
            ok(doc)
        }
        Command::CombinePp { a, b, g, state } => {
            let a = load_maximal(a, tol)?;
            let b = load_maximal(b, tol)?;
            let g = parse_expr(g)?;
            let js = build_joint_space(&a, &b, tol)?;
            let c = js.combine(&g, tol)?;
            let psi = state.as_deref().map(|s| load_state(s, a.dim(), tol)).transpose()?;
            let mut doc = combined_document(&c, psi.as_ref(), tol)?;
            if let Some(psi) = &psi {
                doc["expectation"] = format::complex(js.expect(&g, &[], psi, tol)?);
            }
            let dec = js.decomposition();
            doc["joint_dim"] = json!(js.joint_dim());
            doc["common_elements"] = json!(dec.common.len());
            doc["warnings"] = json!(dec.warnings);
            ok(doc)
        }
        Command::Uncertainty { a, b, state } => {
            let a = load_maximal(a, tol)?;
            let b = load_maximal(b, tol)?;
            let psi = load_state(&state.state, a.dim(), tol)?;
            let r = uncertainty(&a, &b, &psi, tol)?;
            ok(json!({
                "delta_a": num(r.delta_a),
                "delta_b": num(r.delta_b),
                "product": num(r.delta_a * r.delta_b),
                "bound": num(r.bound),
                "commutator_expectation": format::complex(r.commutator_expectation),
                "satisfied": r.satisfied,
            }))
        }
        Command::PhaseCanonical { dim, bins } => ok(emit_maximal(&canonical_phase_pom(*dim, *bins)?)),
        Command::PhaseBound { state, dim, bins } => {
            let psi = load_fock(&state.state, *dim, None, tol)?;
            let r = number_phase_bound(&psi, *bins, tol)?;
            ok(json!({
                "dim": psi.dim(),
                "bins": bins,
                "bound": num(r.bound),
                "density_at_pi": num(r.density_at_pi),
                "algebraic": num(r.algebraic),
                "discretisation": num(r.discretisation),
            }))
        }
        Command::PhaseDelta { state, dim } => {
            let psi = load_fock(&state.state, *dim, Some(1e-14), tol)?;
            ok(json!({
                "dim": psi.dim(),
                "tail": num(psi.tail),
                "mean_photon_number": num(psi.mean_photon_number()),
                "delta": num(circular_deviation(&psi, tol)?),
                "asymptote": num(delta_asymptote(&psi)),
            }))
        }
        Command::Chain { a, b, x, g, state } => {
            let a = load_maximal(a, tol)?;
            let b = load_maximal(b, tol)?;
            let xs = x.iter().map(|p| load_hermitian(p)).collect::<CResult<Vec<_>>>()?;
            let g = parse_expr(g)?;
            let psi = load_state(&state.state, a.dim(), tol)?;
            let js = build_joint_space(&a, &b, tol)?;
            ok(json!({
                "expr": g.to_string(),
                "expectation": format::complex(js.expect(&g, &xs, &psi, tol)?),
                "joint_dim": js.joint_dim(),
            }))
        }
    }
}
