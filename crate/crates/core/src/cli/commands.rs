use serde_json::{json, Value};

use super::{Cli, Command, DumpFormat, EvalArgs, Format, GridArgs, Output, PerturbArgs, SimulateArgs, StrategyChoice};
use crate::compare::{dominance_table, dominance_to_table, CramerLundbergSpec};
use crate::equilibrium::{
    self, exponential_utility_strategy, proportional_equilibrium_schedule, EquilibriumStrategy,
    ValueFunctions,
};
use crate::error::{Error, Result};
use crate::generator::{verify_ehjb, SearchSettings};
use crate::model::{Config, ModelParams, Retention, Strategy};
use crate::simulate::{
    estimate_objective, perturbation_library, perturbation_test, simulate_terminal, write_samples,
    SampleFormat, SimConfig,
};
use crate::table::{format_g, Table, CSV_DIGITS};

pub(super) fn dispatch(cli: &Cli, cfg: &Config) -> Result<Output> {
    match &cli.command {
        Command::Eval(a) => eval(cli, cfg, a),
        Command::Table(a) => table(cli, cfg, a),
        Command::Simulate(a) => simulate(cli, cfg, a),
        Command::Verify(a) => verify(cli, cfg, a),
        Command::Perturb(a) => perturb(cli, cfg, a),
        Command::Compare(a) => compare(cli, cfg, a),
    }
}

fn uniform(horizon: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { horizon } else { horizon * i as f64 / (n - 1) as f64 })
        .collect()
}

fn compact(v: &Value) -> String {
    serde_json::to_string(v).expect("json")
}

/// `{"params", "options", "rows", ...extra}` or CSV with the echo as
/// `#` comment lines.
fn render(cli: &Cli, cfg: &Config, options: Value, table: &Table, extra: Vec<(&str, Value)>) -> String {
    match cli.format {
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert("params".into(), cfg.to_json_value());
            doc.insert("options".into(), options);
            for (k, v) in extra {
                doc.insert(k.into(), v);
            }
            doc.insert("rows".into(), Value::Array(table.json_rows()));
            serde_json::to_string_pretty(&Value::Object(doc)).expect("json") + "\n"
        }
        Format::Csv => {
            let mut pre = vec![
                format!("params: {}", compact(&cfg.to_json_value())),
                format!("options: {}", compact(&options)),
            ];
            for (k, v) in extra {
                pre.push(format!("{k}: {}", compact(&v)));
            }
            table.to_csv(&pre)
        }
    }
}

fn set_param(p: &mut ModelParams, key: &str, v: f64) -> Result<()> {
    let slot = match key {
        "r" => &mut p.r,
        "mu" => &mut p.mu,
        "sigma1" => &mut p.sigma1,
        "sigma2" => &mut p.sigma2,
        "rho" => &mut p.rho,
        "theta" => &mut p.theta,
        "eta" => &mut p.eta,
        "gamma" => &mut p.gamma,
        "T" => &mut p.horizon,
        other => return Err(Error::Unsupported(format!("unknown parameter {other:?}"))),
    };
    *slot = v;
    Ok(())
}

fn eval(cli: &Cli, cfg: &Config, a: &EvalArgs) -> Result<Output> {
    let sweep: Vec<(Option<f64>, ModelParams)> = match (&a.vary, &a.over) {
        (Some(key), Some(values)) => values
            .iter()
            .map(|&v| {
                let mut p = cfg.params;
                set_param(&mut p, key, v)?;
                p.validate()?;
                Ok((Some(v), p))
            })
            .collect::<Result<_>>()?,
        _ => vec![(None, cfg.params)],
    };
    let mut columns = vec!["t", "m_star", "pi_star", "exp_utility_deductible"];
    if let Some(key) = &a.vary {
        columns.insert(0, key.as_str());
    }
    let mut out = Table::new(columns);
    for (v, p) in &sweep {
        let times = a.times.clone().unwrap_or_else(|| uniform(p.horizon, 10));
        for t in times {
            let (du, _) = exponential_utility_strategy(t, p)?;
            let mut row = vec![
                t,
                equilibrium::equilibrium_deductible(t, p)?,
                equilibrium::equilibrium_investment(t, p)?,
                du,
            ];
            if let Some(v) = v {
                row.insert(0, *v);
            }
            out.push(row);
        }
    }
    let options = json!({ "command": "eval", "times": a.times, "vary": a.vary, "over": a.over });
    Ok(Output { text: render(cli, cfg, options, &out, vec![]), pass: None })
}

fn grid(a: &GridArgs, horizon: f64, n_times: usize, xs: &[f64]) -> Vec<(f64, f64)> {
    let times = a.times.clone().unwrap_or_else(|| uniform(horizon, n_times));
    let xs = a.xs.clone().unwrap_or_else(|| xs.to_vec());
    times.iter().flat_map(|&t| xs.iter().map(move |&x| (x, t))).collect()
}

fn table(cli: &Cli, cfg: &Config, a: &GridArgs) -> Result<Output> {
    let vf = ValueFunctions::new(cfg.params, cfg.claims.clone(), cfg.quad);
    let mut out = Table::new(["t", "x", "B", "b", "V", "g", "Var"]);
    for (x, t) in grid(a, cfg.params.horizon, 7, &[0.0]) {
        let pt = vf.evaluate(x, t)?;
        out.push(vec![
            t,
            x,
            vf.value_intercept(t)?,
            vf.expectation_intercept(t)?,
            pt.value,
            pt.expectation,
            pt.variance,
        ]);
    }
    let options = json!({ "command": "table", "times": a.times, "xs": a.xs });
    Ok(Output { text: render(cli, cfg, options, &out, vec![]), pass: None })
}

fn strategy_for(choice: StrategyChoice, cfg: &Config) -> Result<Strategy> {
    let p = &cfg.params;
    let eq = EquilibriumStrategy::new(*p);
    let retention = match choice {
        StrategyChoice::Equilibrium => eq.retention(),
        StrategyChoice::Proportional => Retention::proportional(proportional_equilibrium_schedule(p, &cfg.claims)?),
        StrategyChoice::ExpUtility => equilibrium::exponential_utility_retention(p),
        StrategyChoice::Full => Retention::Full,
        StrategyChoice::Zero => Retention::zero(),
    };
    Ok(Strategy::new(retention, eq.investment_schedule(), p.horizon))
}

fn choice_name(c: StrategyChoice) -> &'static str {
    match c {
        StrategyChoice::Equilibrium => "equilibrium",
        StrategyChoice::Proportional => "proportional",
        StrategyChoice::ExpUtility => "exp-utility",
        StrategyChoice::Full => "full",
        StrategyChoice::Zero => "zero",
    }
}

fn simulate(cli: &Cli, cfg: &Config, a: &SimulateArgs) -> Result<Output> {
    let strategy = strategy_for(a.strategy, cfg)?;
    let sim = SimConfig {
        n_paths: a.paths,
        steps_per_unit_time: a.steps,
        seed: cli.seed,
        x0: a.x0.unwrap_or(cfg.x0),
        t0: a.t0.unwrap_or(cfg.t0),
        threads: cli.threads,
    };
    let samples = simulate_terminal(&sim, &strategy, &cfg.params, &cfg.claims)?;
    if let Some(path) = &a.dump {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        let format = match a.dump_format {
            DumpFormat::Binary => SampleFormat::Binary,
            DumpFormat::Csv => SampleFormat::Csv,
        };
        write_samples(file, &samples, format)?;
    }
    let mut est = estimate_objective(&samples, cfg.params.gamma)?;
    est.seed = Some(cli.seed);
    let options = json!({
        "command": "simulate",
        "strategy": choice_name(a.strategy),
        "n_paths": sim.n_paths,
        "steps_per_unit_time": sim.steps_per_unit_time,
        "seed": sim.seed,
        "x0": sim.x0,
        "t0": sim.t0,
    });
    let text = match cli.format {
        Format::Json => {
            let doc = json!({ "params": cfg.to_json_value(), "options": options, "rows": [est] });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let f = |x: f64| format_g(x, CSV_DIGITS);
            format!(
                "# params: {}\n# options: {}\nmean,variance,se_mean,se_variance,J,se_J,n_paths,seed\n{},{},{},{},{},{},{},{}\n",
                compact(&cfg.to_json_value()),
                compact(&options),
                f(est.mean),
                f(est.variance),
                f(est.se_mean),
                f(est.se_variance),
                f(est.objective_j),
                f(est.se_j),
                est.n_paths,
                cli.seed
            )
        }
    };
    Ok(Output { text, pass: None })
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn verify(cli: &Cli, cfg: &Config, a: &GridArgs) -> Result<Output> {
    let points = grid(a, cfg.params.horizon, 5, &[-5.0, 0.0, 5.0]);
    let report = verify_ehjb(&points, &cfg.params, &cfg.claims, &cfg.quad, &SearchSettings::default());
    let mut out = Table::new([
        "x",
        "t",
        "ehjb_residual",
        "ehjb_generator_residual",
        "supremum_gap",
        "exp_utility_shortfall",
        "generator_residual",
        "terminal_v",
        "terminal_g",
        "derivative_ok",
        "pass",
    ]);
    for q in &report.points {
        out.push(vec![
            q.x,
            q.t,
            q.ehjb_residual,
            q.ehjb_generator_residual,
            q.supremum_gap,
            q.exp_utility_shortfall,
            q.generator_residual,
            q.terminal_v,
            q.terminal_g,
            flag(q.derivative_ok),
            flag(q.pass),
        ]);
    }
    let errors: Vec<Value> = report
        .points
        .iter()
        .filter_map(|q| q.error.as_ref().map(|e| json!({ "x": q.x, "t": q.t, "error": e })))
        .collect();
    let options = json!({ "command": "verify", "times": a.times, "xs": a.xs, "search": report.search });
    let mut extra = vec![
        ("tolerances", serde_json::to_value(report.tolerances).expect("json")),
        ("pass", Value::Bool(report.pass)),
    ];
    if !errors.is_empty() {
        extra.push(("errors", Value::Array(errors)));
    }
    Ok(Output { text: render(cli, cfg, options, &out, extra), pass: Some(report.pass) })
}

fn perturb(cli: &Cli, cfg: &Config, a: &PerturbArgs) -> Result<Output> {
    let p = &cfg.params;
    let sim = SimConfig {
        n_paths: a.paths,
        steps_per_unit_time: a.steps,
        seed: cli.seed,
        x0: a.x,
        t0: a.t,
        threads: cli.threads,
    };
    let library = perturbation_library(a.t, p)?;
    let report = perturbation_test(a.x, a.t, &a.eps, &library, &sim, p, &cfg.claims)?;
    let options = json!({
        "command": "perturb",
        "x": a.x,
        "t": a.t,
        "eps": a.eps,
        "n_paths": a.paths,
        "steps_per_unit_time": a.steps,
        "seed": cli.seed,
    });
    let text = match cli.format {
        Format::Json => {
            let doc = json!({
                "params": cfg.to_json_value(),
                "options": options,
                "equilibrium": report.equilibrium,
                "pass": report.pass,
                "rows": report.results,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let f = |x: f64| format_g(x, CSV_DIGITS);
            let mut s = format!(
                "# params: {}\n# options: {}\n# pass: {}\nname,eps,ratio,se,pass,separated\n",
                compact(&cfg.to_json_value()),
                compact(&options),
                report.pass
            );
            for r in &report.results {
                for e in &r.estimates {
                    s += &format!(
                        "{},{},{},{},{},{}\n",
                        r.name,
                        f(e.eps),
                        f(e.ratio),
                        f(e.se),
                        u8::from(e.ratio >= -3.0 * e.se),
                        u8::from(e.ratio > 3.0 * e.se)
                    );
                }
            }
            s
        }
    };
    Ok(Output { text, pass: Some(report.pass) })
}

fn compare(cli: &Cli, cfg: &Config, a: &GridArgs) -> Result<Output> {
    let spec = CramerLundbergSpec::from_config(cfg)?;
    let points = grid(a, cfg.params.horizon, 7, &[0.0, 5.0, 10.0]);
    let rows = dominance_table(&points, &spec)?;
    let options = json!({ "command": "compare", "times": a.times, "xs": a.xs });
    Ok(Output {
        text: render(cli, cfg, options, &dominance_to_table(&rows), vec![]),
        pass: None,
    })
}
