use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use oadesign::io::{self, DesignBody, DesignFile, OaRef, SCHEMA_VERSION};
use oadesign::verify::{EMBED_CHECK_SAMPLES, EMBED_CHECK_SEED};
use oadesign::{
    chebyshev_rule, check_hilbert_identity, embedding_map, gaussian_to_spherical,
    hilbert_kamke_rule, orbit_check, product_design, psl28, puncture, puncture_first,
    rational_weight_rule, reduce_by_oa, reduce_by_oa_multiset, trace_code_generators,
    verify_design, verify_strength_exhaustive, verify_strength_linear, Budget, CertificationMethod,
    MeasureTag, OrthogonalArray, PermSet, Rule1D, TolerancePolicy, VerificationReport,
    VerifyOptions, WeightedDesign,
};
use serde::{Deserialize, Serialize};

use crate::args::{
    DesignBuildArgs, EmbedArgs, GroupArg, GroupCheckArgs, MeasureArg, OaBuildArgs, ReproArgs,
    ToleranceArgs, VerifyArgs,
};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

/// Bad flags or flag combinations; maps to exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

fn versioned_json<T: Serialize>(body: &T) -> String {
    io::to_json(&Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    })
}

pub fn oa_build(args: &OaBuildArgs, budget: &Budget) -> Result<Outcome> {
    let full = trace_code_generators(args.q, args.m, args.t)?;
    let g = match (&args.columns, args.d) {
        (Some(cols), _) => puncture(&full, cols, args.t)?,
        (None, Some(d)) => puncture_first(&full, d, args.t)?,
        (None, None) => full,
    };
    let rank = g.rank();
    let linear = verify_strength_linear(&g, args.t, budget)?;
    println!(
        "linear certification at t={}: {} ({} column subsets)",
        args.t,
        if linear.passed { "pass" } else { "fail" },
        linear.subsets_checked
    );
    let Some(cert) = linear.certification() else {
        println!("failure: {:?}", linear.failure);
        return Ok(Outcome::Fail);
    };
    let mut oa = OrthogonalArray::from_generator(g).with_certification(cert);
    let mut exhaustive_ran = false;
    if oa.n_runs() <= budget.max_rows {
        match verify_strength_exhaustive(&oa, args.t, budget) {
            Ok(rep) => {
                println!(
                    "exhaustive certification at t={}: {}",
                    args.t,
                    if rep.passed { "pass" } else { "fail" }
                );
                if !rep.passed {
                    println!("failure: {:?}", rep.failure);
                    return Ok(Outcome::Fail);
                }
                exhaustive_ran = true;
            }
            Err(e) if e.is_refusal() => println!("exhaustive certification skipped: {e}"),
            Err(e) => return Err(e.into()),
        }
    } else {
        println!(
            "exhaustive certification skipped: {} runs exceed the row budget",
            oa.n_runs()
        );
    }
    if args.explicit {
        if !exhaustive_ran {
            bail!(oadesign::Error::BudgetExceeded {
                what: "explicit array storage",
                required: oa.n_runs(),
                cap: budget.max_rows,
            });
        }
        oa = oa
            .into_explicit(budget.max_rows)?
            .with_certification(oadesign::Certification {
                strength: args.t,
                method: CertificationMethod::Exhaustive,
            });
    }
    write_file(&args.out, &io::oa_to_json(&oa))?;
    let lambda = oa.index(args.t).map_or("-".to_string(), |l| l.to_string());
    println!(
        "OA(N={}, k={}, q={}, t={}): code dimension {}, lambda {}",
        oa.n_runs(),
        oa.k(),
        oa.q(),
        args.t,
        rank,
        lambda
    );
    println!("wrote {}", args.out.display());
    Ok(Outcome::Pass)
}

fn select_rule(args: &DesignBuildArgs) -> Result<(Rule1D, bool)> {
    match args.measure {
        MeasureArg::Gaussian => match (args.hk_m, args.t, args.q, args.n) {
            (_, _, _, Some(_)) => Err(usage(
                "--n selects a Chebyshev rule; use --M or --t/--q for gaussian",
            )),
            (Some(m), None, None, None) => Ok((hilbert_kamke_rule(m)?, false)),
            (None, Some(t), Some(q), None) => {
                let sol = rational_weight_rule(t, q)?;
                println!(
                    "rational-weight rule t={t}, q={q}: counts {:?}, {} Newton steps, residual {:.3e}",
                    match sol.rule.weights() {
                        oadesign::RuleWeights::Rational { counts, .. } => counts.clone(),
                        _ => Vec::new(),
                    },
                    sol.newton_steps,
                    sol.residual
                );
                Ok((sol.rule, true))
            }
            _ => Err(usage(
                "gaussian designs need exactly one of --M or --t with --q",
            )),
        },
        MeasureArg::Chebyshev => match (args.n, args.hk_m, args.t, args.q) {
            (Some(n), None, None, None) => Ok((chebyshev_rule(n)?, false)),
            _ => Err(usage("chebyshev designs need --n and no other rule flags")),
        },
    }
}

pub fn design_build(args: &DesignBuildArgs, budget: &Budget) -> Result<Outcome> {
    let (rule, multiset) = select_rule(args)?;
    let design = match &args.oa {
        Some(path) => {
            let oa = io::oa_from_json(&read_file(path)?, budget)
                .with_context(|| format!("loading {}", path.display()))?;
            if let Some(d) = args.d.filter(|&d| d != oa.k()) {
                return Err(usage(format!(
                    "--d {d} does not match the array's {} columns",
                    oa.k()
                )));
            }
            if oa.certification().is_none() {
                return Err(usage(format!(
                    "{} carries no strength certification",
                    path.display()
                )));
            }
            if multiset {
                reduce_by_oa_multiset(&rule, &oa)?
            } else {
                reduce_by_oa(&rule, &oa)?
            }
        }
        None => {
            let d = args
                .d
                .ok_or_else(|| usage("--d is required without --oa"))?;
            product_design(&rule, d, budget)?
        }
    };
    let mut file = DesignFile::from_design(&design);
    if args.link_oa {
        if let (DesignBody::Factored { oa_ref, .. }, Some(p)) = (&mut file.body, &args.oa) {
            let abs = fs::canonicalize(p).with_context(|| format!("resolving {}", p.display()))?;
            *oa_ref = OaRef::Path(abs.to_string_lossy().into_owned());
        }
    }
    write_file(&args.out, &io::to_json(&file))?;
    let grid = (rule.len() as u128).saturating_pow(design.dim() as u32);
    println!(
        "design: {} points in R^{} ({} measure, degree {}), replacing a {}-point grid",
        design.n_points(),
        design.dim(),
        design.measure().name(),
        design.claimed_degree(),
        grid
    );
    println!("reduction factor {}", format_ratio(grid, design.n_points()));
    println!("wrote {}", args.out.display());
    Ok(Outcome::Pass)
}

fn format_ratio(a: u128, b: u128) -> String {
    if b != 0 && a % b == 0 {
        (a / b).to_string()
    } else {
        format!("{:.3}", a as f64 / b as f64)
    }
}

fn load_design(path: &Path, budget: &Budget) -> Result<WeightedDesign> {
    let text = read_file(path)?;
    let dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    io::design_from_json(&text, Some(&dir), budget)
        .with_context(|| format!("loading {}", path.display()))
}

fn policy(tol: &ToleranceArgs) -> Result<TolerancePolicy> {
    if !(tol.rel_tol > 0.0 && tol.abs_tol > 0.0) {
        return Err(usage("tolerances must be positive"));
    }
    Ok(TolerancePolicy::new(tol.abs_tol, tol.rel_tol))
}

fn print_report(r: &VerificationReport) {
    println!(
        "verified {} points in R^{} at degree {}: {} of {} monomials{}",
        r.n_points,
        r.dim,
        r.degree_checked,
        r.monomials_checked,
        r.monomial_count,
        if r.exhaustive {
            ""
        } else {
            " (sampled, not exhaustive)"
        }
    );
    println!(
        "max abs error {:.3e}, max rel error {:.3e}, failures {}",
        r.max_abs_error, r.max_rel_error, r.failures
    );
    if let Some(total) = r.rescaled_from {
        println!("note: weights summed to {total} and were rescaled to 1");
    }
    if let Some(w) = r.worst.first() {
        println!(
            "worst monomial {} (exact {}, computed {})",
            w.monomial, w.exact, w.computed
        );
    }
    println!("{}", if r.passed { "PASS" } else { "FAIL" });
}

pub fn verify(args: &VerifyArgs, budget: &Budget) -> Result<Outcome> {
    let design = load_design(&args.design, budget)?;
    let opts = VerifyOptions {
        sample: args.sample,
        seed: args.seed,
        budget: *budget,
    };
    let report = verify_design(&design, args.t, policy(&args.tol)?, &opts)?;
    if let Some(path) = &args.report {
        write_file(path, &versioned_json(&report))?;
    }
    print_report(&report);
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::Fail
    })
}

#[derive(Serialize)]
struct EmbedReport<'a> {
    dim: usize,
    exponent: u32,
    rows: usize,
    design_verification: &'a VerificationReport,
    hilbert: &'a oadesign::HilbertReport,
    max_norm_distortion: f64,
    passed: bool,
}

pub fn embed(args: &EmbedArgs, budget: &Budget) -> Result<Outcome> {
    if args.r == 0 {
        return Err(usage("--r must be at least 1"));
    }
    let design = load_design(&args.design, budget)?;
    if design.measure() != &MeasureTag::Gaussian {
        return Err(usage("embedding needs a Gaussian design"));
    }
    let two_r = 2 * args.r as usize;
    let ver = verify_design(
        &design,
        two_r,
        TolerancePolicy::default(),
        &VerifyOptions {
            budget: *budget,
            ..VerifyOptions::default()
        },
    )?;
    if !ver.passed {
        print_report(&ver);
        println!("not a Gaussian {two_r}-design; no embedding written");
        return Ok(Outcome::Fail);
    }
    let sph = gaussian_to_spherical(&design, args.r, budget)?;
    let hil = check_hilbert_identity(&sph, args.r, args.samples, args.seed, args.tol)?;
    println!(
        "Hilbert identity at r={}: max rel error {:.3e} over {} vectors",
        args.r,
        hil.max_rel_error,
        hil.samples + hil.dim
    );
    if !hil.passed {
        println!("FAIL");
        return Ok(Outcome::Fail);
    }
    let emb = embedding_map(&sph, args.r, args.tol)?;
    let distortion = emb.max_distortion(
        args.samples.max(EMBED_CHECK_SAMPLES),
        args.seed ^ EMBED_CHECK_SEED,
    );
    let passed = distortion < args.tol;
    let mut csv = String::with_capacity(emb.rows.len() * emb.dim() * 24);
    for row in &emb.rows {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                csv.push(',');
            }
            write!(csv, "{v:.16e}").expect("string write");
        }
        csv.push('\n');
    }
    if passed {
        write_file(&args.out, &csv)?;
    }
    let report = EmbedReport {
        dim: emb.dim(),
        exponent: 2 * args.r,
        rows: emb.rows.len(),
        design_verification: &ver,
        hilbert: &hil,
        max_norm_distortion: distortion,
        passed,
    };
    if let Some(path) = &args.report {
        write_file(path, &versioned_json(&report))?;
    }
    println!(
        "embedding l2^{} -> l{}^{}: max norm distortion {:.3e}",
        emb.dim(),
        2 * args.r,
        emb.rows.len(),
        distortion
    );
    if passed {
        println!("wrote {}", args.out.display());
        println!("PASS");
        Ok(Outcome::Pass)
    } else {
        println!("FAIL");
        Ok(Outcome::Fail)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PermFile {
    degree: usize,
    perms: Vec<Vec<usize>>,
    /// Treat `perms` as generators and close them under composition.
    #[serde(default)]
    closure: bool,
}

#[derive(Serialize)]
struct GroupReport {
    group: String,
    group_order: usize,
    is_group: bool,
    orbit_size: usize,
    x: Vec<f64>,
    degree: usize,
    tolerance: f64,
    max_error_by_degree: Vec<f64>,
    worst_by_degree: Vec<Vec<u32>>,
    /// Highest degree through which every monomial matched.
    equality_through: Option<usize>,
    first_violation: Option<usize>,
}

pub fn group_check(args: &GroupCheckArgs, budget: &Budget) -> Result<Outcome> {
    let (name, group) = match args.group {
        GroupArg::Psl28 => ("psl28".to_string(), psl28()),
        GroupArg::Sym => {
            let d = args.d.ok_or_else(|| usage("--group sym needs --d"))?;
            (
                format!("sym{d}"),
                PermSet::symmetric(d, budget.max_group_order)?,
            )
        }
        GroupArg::File => {
            let path = args
                .file
                .as_ref()
                .ok_or_else(|| usage("--group file needs --file"))?;
            let f: PermFile = serde_json::from_str(&read_file(path)?)
                .map_err(oadesign::Error::from)
                .with_context(|| format!("parsing {}", path.display()))?;
            let set = if f.closure {
                PermSet::closure(f.degree, &f.perms, budget.max_group_order)?
            } else {
                PermSet::new(f.degree, f.perms)?
            };
            (path.display().to_string(), set)
        }
    };
    let d = group.degree();
    let x = match &args.x {
        Some(x) => x.clone(),
        None => {
            let norm = ((1..=d).map(|i| (i * i) as f64).sum::<f64>()).sqrt();
            (1..=d).map(|i| i as f64 / norm).collect()
        }
    };
    if x.len() != d {
        return Err(usage(format!(
            "--x has {} entries for a group of degree {d}",
            x.len()
        )));
    }
    let check = orbit_check(&group, &x, args.degree, args.tol)?;
    let equality_through = match check.first_violation {
        Some(0) => None,
        Some(k) => Some(k - 1),
        None => Some(args.degree),
    };
    println!(
        "group {name}: order {}, orbit of x has {} points",
        check.group_order, check.orbit_size
    );
    for (k, err) in check.max_error_by_degree.iter().enumerate() {
        println!("degree {k}: max |orbit - symmetric| = {err:.3e}");
    }
    match check.first_violation {
        Some(k) => println!(
            "equality holds through degree {}, violated at degree {k} (monomial exponents {:?})",
            equality_through.map_or("-".into(), |e| e.to_string()),
            check.worst_by_degree[k]
        ),
        None => println!("equality holds through degree {}", args.degree),
    }
    if let Some(path) = &args.report {
        let report = GroupReport {
            group: name,
            group_order: check.group_order,
            is_group: group.is_group(),
            orbit_size: check.orbit_size,
            x,
            degree: args.degree,
            tolerance: args.tol,
            max_error_by_degree: check.max_error_by_degree,
            worst_by_degree: check.worst_by_degree,
            equality_through,
            first_violation: check.first_violation,
        };
        write_file(path, &versioned_json(&report))?;
    }
    Ok(Outcome::Pass)
}

pub fn repro(args: &ReproArgs, budget: &Budget) -> Result<Outcome> {
    let dir = &args.out_dir;
    let mut all = Outcome::Pass;
    let pipelines = [
        ("gaussian d=7", 7u64, 1u32, MeasureArg::Gaussian, "7", 1e-9),
        ("equilibrium d=9", 3, 2, MeasureArg::Chebyshev, "9", 1e-12),
    ];
    for (label, q, m, measure, tag, rel_tol) in pipelines {
        println!("== {label} ==");
        let oa_path = dir.join(format!("oa{tag}.json"));
        let design_path = dir.join(format!("design{tag}.json"));
        let report_path = dir.join(format!("report{tag}.json"));
        let step = oa_build(
            &OaBuildArgs {
                q,
                m,
                t: 5,
                columns: None,
                d: None,
                explicit: false,
                out: oa_path.clone(),
            },
            budget,
        )?;
        if step == Outcome::Fail {
            all = Outcome::Fail;
            continue;
        }
        let (hk_m, n) = match measure {
            MeasureArg::Gaussian => (Some(3), None),
            MeasureArg::Chebyshev => (None, Some(3)),
        };
        design_build(
            &DesignBuildArgs {
                measure,
                hk_m,
                n,
                t: None,
                q: None,
                d: None,
                oa: Some(oa_path),
                link_oa: false,
                out: design_path.clone(),
            },
            budget,
        )?;
        let step = verify(
            &VerifyArgs {
                design: design_path,
                t: 5,
                tol: ToleranceArgs {
                    rel_tol,
                    abs_tol: 1e-10,
                },
                sample: None,
                seed: 0x5eed,
                report: Some(report_path),
            },
            budget,
        )?;
        if step == Outcome::Fail {
            all = Outcome::Fail;
        }
    }
    Ok(all)
}
