use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use dilation_lab::analysis::tables::{convergence_table, dissipation_table, num, subset_table, verdict_table, Table};
use dilation_lab::analysis::{run_equivalence_battery, FamilySource, FamilySpec};
use dilation_lab::approximants::{convergence_profile, expectation_identity_check, ApproximantKind};
use dilation_lab::counterexample::{build_counterexample, spectrum_deviation_from_minus_one, CounterexampleParams};
use dilation_lab::dissipativity::complete_dissipativity_report;
use dilation_lab::linalg::{c, C64};
use dilation_lab::monoid::ccr::{build_ccr_family, ccr_relation_sweep, family_correlation, heisenberg_homomorphism};
use dilation_lab::monoid::{axioms_check, Correlation, Group, GroupElement, PositivePart, PositivityStructure};
use dilation_lab::parallel::set_threads;
use dilation_lab::random::rng;
use dilation_lab::stochastic::{characteristic_fn, empirical_char_fn, empirical_moments, moments, sample, DistributionSemigroup};
use dilation_lab::subset::Subset;
use dilation_lab::{Error, Result};

use crate::{Cli, Command, Common, Law, Variant};

const DEFAULT_MC_N: u64 = 100_000;

pub fn run(cli: &Cli) -> Result<u8> {
    if let Some(t) = cli.common.threads {
        set_threads(t);
    }
    let c = &cli.common;
    let (report, tables, pass) = match &cli.command {
        Command::Analyze { subsets, transfer } => analyze(c, *subsets, *transfer)?,
        Command::Approximants { rates, times } => approximants(c, rates, times)?,
        Command::Stochastic { law, lambda, drift, diffusion, t, n, omega } => {
            let ds = match law {
                Law::Dirac => DistributionSemigroup::Dirac,
                Law::ScaledPoisson => DistributionSemigroup::ScaledPoisson { rate: *lambda },
                Law::AuxPoisson => DistributionSemigroup::AuxiliaryPoisson { rate: *lambda },
                Law::Gaussian => DistributionSemigroup::Gaussian { drift: *drift, diffusion: *diffusion },
            };
            let n = n.or(c.mc_n).unwrap_or(DEFAULT_MC_N);
            stochastic(ds, *t, n, c.seed.unwrap_or(0), omega)?
        }
        Command::Counterexample { d, dim1, dim2, alpha, family_seed, emit_spec } => {
            let p = CounterexampleParams { d: *d, dim1: *dim1, dim2: *dim2, alpha: *alpha, seed: *family_seed };
            counterexample(c, p, emit_spec.as_deref())?
        }
        Command::Monoid { variant, d, samples, mutations } => monoid(c, *variant, *d, *samples, *mutations)?,
    };
    emit(c, &report, &tables)?;
    Ok(if pass { 0 } else { 1 })
}

fn emit(c: &Common, report: &Value, tables: &[(String, Table)]) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match &c.out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    if let Some(dir) = &c.csv {
        fs::create_dir_all(dir)?;
        for (name, t) in tables {
            fs::write(dir.join(format!("{name}.csv")), t.to_csv()?)?;
        }
    }
    Ok(())
}

fn load_spec(c: &Common) -> Result<FamilySpec> {
    let path = c.spec.as_ref().ok_or_else(|| Error::Spec("--spec is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Spec(format!("{}: {e}", path.display())))?;
    let mut spec = FamilySpec::from_json(&text).map_err(|e| match e {
        Error::Spec(m) => Error::Spec(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if let Some(s) = c.seed {
        spec.monte_carlo.seed = s;
    }
    if let Some(n) = c.mc_n {
        spec.monte_carlo.n = n as usize;
    }
    if let Some(t) = c.tol_psd {
        spec.tolerances.psd = t;
    }
    if let Some(g) = c.grid_max {
        spec.grids.t_max = g;
    }
    spec.validate()?;
    Ok(spec)
}

type Outcome = (Value, Vec<(String, Table)>, bool);

fn analyze(c: &Common, subsets: bool, transfer: bool) -> Result<Outcome> {
    let mut spec = load_spec(c)?;
    spec.battery.subsets |= subsets;
    spec.battery.transfer |= transfer;
    let report = run_equivalence_battery(&spec)?;
    let mut tables = vec![
        ("verdicts".to_string(), verdict_table(std::slice::from_ref(&report))?),
        ("dissipation".to_string(), dissipation_table(&report)?),
        ("convergence".to_string(), convergence_table(&report)?),
    ];
    if !report.subsets.is_empty() {
        tables.push(("subsets".to_string(), subset_table(&report)?));
    }
    let pass = report.exit_code() == 0;
    Ok((serde_json::to_value(&report)?, tables, pass))
}

fn approximants(common: &Common, rates: &[f64], times: &[f64]) -> Result<Outcome> {
    let spec = load_spec(common)?;
    let fam = spec.build_family()?;
    let axis = spec.grids.axis();
    let n = fam.dim();
    let basis: Vec<Vec<C64>> = (0..n).map(|i| (0..n).map(|j| c(f64::from(u8::from(i == j)), 0.0)).collect()).collect();
    let mut conv = Table::new(&["generator", "approximant", "rate", "sup_error", "sup_norm"]);
    let mut ident = Table::new(&["generator", "approximant", "rate", "t", "deviation", "std_error", "pass"]);
    let mut profiles = Vec::new();
    let mut checks = Vec::new();
    let mut pass = true;
    for (i, g) in fam.generators().iter().enumerate() {
        for kind in [ApproximantKind::Hille { rate: 1.0 }, ApproximantKind::Yosida { rate: 1.0 }] {
            let p = convergence_profile(g, kind, rates, &axis, &basis)?;
            for r in &p.rows {
                conv.push(vec![(i + 1).to_string(), p.kind.clone(), num(r.rate), num(r.sup_error), num(r.sup_norm)])?;
                pass &= r.sup_norm <= 1.0 + spec.tolerances.psd;
            }
            profiles.push(json!({"generator": i + 1, "profile": p}));
            for &rate in rates {
                for &t in times {
                    let k = kind.with_rate(rate);
                    let seed = dilation_lab::random::mix_seed(spec.monte_carlo.seed, (i as u64) << 32 | rate.to_bits() >> 32 ^ t.to_bits());
                    let r = expectation_identity_check(g, k, t, spec.monte_carlo.n, seed, spec.tolerances.mc_sigmas)?;
                    pass &= r.passes;
                    ident.push(vec![
                        (i + 1).to_string(),
                        k.name().to_string(),
                        num(rate),
                        num(t),
                        num(r.deviation),
                        num(r.std_error),
                        r.passes.to_string(),
                    ])?;
                    checks.push(json!({"generator": i + 1, "approximant": k.name(), "rate": rate, "t": t, "check": r}));
                }
            }
        }
    }
    let report = json!({
        "spec_digest": spec.digest()?,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "verdicts": {"approximants": if pass { "pass" } else { "fail" }},
        "convergence": profiles,
        "expectation_identities": checks,
        "seeds": {"monte_carlo": spec.monte_carlo.seed},
    });
    Ok((report, vec![("convergence".into(), conv), ("expectation".into(), ident)], pass))
}

fn stochastic(ds: DistributionSemigroup, t: f64, n: u64, seed: u64, omegas: &[f64]) -> Result<Outcome> {
    if n < 2 {
        return Err(Error::InvalidParameter("--n must be at least 2".into()));
    }
    let batch = sample(ds, t, n as usize, seed)?;
    let m = empirical_moments(&batch);
    let (mean, var) = moments(ds, t);
    let sigmas = 5.0;
    let root_n = (n as f64).sqrt();
    // Exact dispersion for the mean, empirical standard error for the variance.
    let mean_ok = (m.mean - mean).abs() <= sigmas * var.sqrt() / root_n + 1e-12 * (1.0 + mean.abs());
    let var_ok = (m.variance - var).abs() <= sigmas * m.variance_std_error + 1e-12 * (1.0 + var);
    let mut moments_t = Table::new(&["quantity", "empirical", "exact", "std_error", "pass"]);
    moments_t.push(vec!["mean".into(), num(m.mean), num(mean), num(var.sqrt() / root_n), mean_ok.to_string()])?;
    moments_t.push(vec!["variance".into(), num(m.variance), num(var), num(m.variance_std_error), var_ok.to_string()])?;
    let mut chf = Table::new(&["omega", "empirical_re", "empirical_im", "exact_re", "exact_im", "deviation", "pass"]);
    let mut pass = mean_ok && var_ok;
    let mut rows = Vec::new();
    for &w in omegas {
        let e = empirical_char_fn(&batch, w);
        let x = characteristic_fn(ds, t, w);
        let dev = (e - x).norm();
        let ok = dev <= sigmas / root_n;
        pass &= ok;
        chf.push(vec![num(w), num(e.re), num(e.im), num(x.re), num(x.im), num(dev), ok.to_string()])?;
        rows.push(json!({"omega": w, "deviation": dev, "pass": ok}));
    }
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "law": ds,
        "t": t,
        "n": n,
        "verdicts": {"stochastic": if pass { "pass" } else { "fail" }},
        "moments": {"empirical": m, "exact_mean": mean, "exact_variance": var, "mean_pass": mean_ok, "variance_pass": var_ok},
        "characteristic_function": rows,
        "seeds": {"monte_carlo": seed},
    });
    Ok((report, vec![("moments".into(), moments_t), ("characteristic_function".into(), chf)], pass))
}

fn counterexample(c: &Common, p: CounterexampleParams, emit_spec: Option<&Path>) -> Result<Outcome> {
    p.validate()?;
    let fam = build_counterexample(p.d, p.dim1, p.dim2, p.alpha, p.seed)?;
    let mut spec = FamilySpec::new(format!("counterexample-d{}", p.d), FamilySource::Counterexample(p));
    spec.battery.subsets = true;
    if let Some(s) = c.seed {
        spec.monte_carlo.seed = s;
    }
    if let Some(t) = c.tol_psd {
        spec.tolerances.psd = t;
    }
    if let Some(g) = c.grid_max {
        spec.grids.t_max = g;
    }
    spec.validate()?;
    if let Some(path) = emit_spec {
        fs::write(path, spec.to_json()? + "\n")?;
    }
    let spectrum = spectrum_deviation_from_minus_one(&fam)?;
    let report = run_equivalence_battery(&spec)?;
    let full = Subset::full(p.d);
    let diss = complete_dissipativity_report(&fam, spec.tolerances.psd)?;
    let full_min = diss.verdict(full).map_or(f64::NAN, |v| v.min_eigenvalue);
    let sharp = spectrum <= 1e-9 && full_min < -1e-6 && report.subset_monotonicity == Some(true) && report.agreement.consistent;
    let mut out = serde_json::to_value(&report)?;
    out["counterexample"] = json!({
        "params": p,
        "spectrum_deviation": spectrum,
        "full_order_min_eigenvalue": full_min,
        "sharp": sharp,
    });
    let tables = vec![
        ("dissipation".to_string(), dissipation_table(&report)?),
        ("subsets".to_string(), subset_table(&report)?),
    ];
    Ok((out, tables, sharp))
}

fn monoid(c: &Common, variant: Variant, d: usize, samples: usize, mutations: u64) -> Result<Outcome> {
    if let Some(path) = &c.spec {
        let spec = load_spec(c)?;
        if let FamilySource::Ccr(params) = &spec.family {
            return ccr(&spec, params);
        }
        return Err(Error::Spec(format!("{}: monoid checks need a ccr source", path.display())));
    }
    if d == 0 || d > 16 {
        return Err(Error::InvalidParameter("--d must lie in 1..=16".into()));
    }
    let seed = c.seed.unwrap_or(0);
    let group = match variant {
        Variant::Euclidean => Group::Euclidean { d },
        Variant::Heisenberg => Group::Heisenberg { d },
        Variant::HeisenbergC => Group::CorrelatedHeisenberg { c: Correlation::random(&mut rng(seed), d, 1.0) },
        Variant::Product => Group::Product { factors: vec![Group::Euclidean { d }, Group::Heisenberg { d }] },
    };
    let ps = PositivityStructure::canonical(group.clone());
    let base = axioms_check(&ps, samples, seed)?;
    let mut mutation_rows = Vec::new();
    let mut detected_all = true;
    for s in 0..mutations {
        let map = PositivePart::seeded_mutation(&group, seed.wrapping_add(s));
        let r = axioms_check(&PositivityStructure { group: group.clone(), map: map.clone() }, samples, seed.wrapping_add(1000 + s))?;
        detected_all &= !r.all_pass;
        mutation_rows.push(json!({"map": map, "detected": !r.all_pass}));
    }
    let mut t = Table::new(&["axiom", "failures", "worst_residual"]);
    for (name, tally) in [
        ("identity", &base.identity),
        ("idempotent", &base.idempotent),
        ("representation", &base.representation),
        ("plus_minus", &base.plus_minus),
        ("membership", &base.membership),
    ] {
        t.push(vec![name.into(), tally.failures.to_string(), num(tally.worst_residual)])?;
    }
    let pass = base.all_pass && detected_all;
    let report = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "group": group,
        "verdicts": {"axioms": if base.all_pass { "pass" } else { "fail" }, "mutations_detected": if detected_all { "pass" } else { "fail" }},
        "axioms": base,
        "mutations": mutation_rows,
        "seeds": {"samples": seed},
    });
    Ok((report, vec![("axioms".into(), t)], pass))
}

fn ccr(spec: &FamilySpec, params: &dilation_lab::monoid::ccr::CcrParams) -> Result<Outcome> {
    use rand::Rng;
    let fam = build_ccr_family(params)?;
    let relation = ccr_relation_sweep(&fam, 4)?;
    let dm = family_correlation(&fam);
    let mut g = rng(spec.monte_carlo.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut elem = || GroupElement::CorrelatedHeisenberg {
            x: (0..fam.d()).map(|_| f64::from(g.random_range(0..=3u32))).collect(),
            e: g.random_range(-2.0..2.0),
        };
        let (a, b) = (elem(), elem());
        worst = worst.max(heisenberg_homomorphism(&fam, &dm, &a, &b)?);
    }
    let rel_ok = relation <= 1e-12;
    let hom_ok = worst <= 1e-10;
    let mut t = Table::new(&["check", "residual", "pass"]);
    t.push(vec!["relation".into(), num(relation), rel_ok.to_string()])?;
    t.push(vec!["homomorphism".into(), num(worst), hom_ok.to_string()])?;
    let report = json!({
        "spec_digest": spec.digest()?,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "correlation": fam.c_matrix(),
        "verdicts": {"ccr_relation": if rel_ok { "pass" } else { "fail" }, "homomorphism": if hom_ok { "pass" } else { "fail" }},
        "relation_residual": relation,
        "homomorphism_residual": worst,
        "seeds": {"monte_carlo": spec.monte_carlo.seed},
    });
    Ok((report, vec![("ccr".into(), t)], rel_ok && hom_ok))
}
