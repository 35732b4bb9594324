//! One function per subcommand.

use serde::Serialize;

use sepcoef::data::{preprocess, validate, ValidationIssue};
use sepcoef::estimators::{lambda_nn, lambda_rank_based, recommended_variant};
use sepcoef::inference::permutation_test;
use sepcoef::oracles::{lambda_exact, psi_exact, ClosedFormModel, FinitePmf, PiecewiseUniformGroups};
use sepcoef::selection::{best_subset_select_with, forward_select_with, SelectionMethod, SelectionOptions, SelectionTrace};
use sepcoef::simgen::{generate, run_scenario, Scenario, ScenarioSpec, ScenarioSummary};
use sepcoef::{Error, NnVariant, ObservationSet, PreprocessMode, PreprocessSpec, Variant};

use crate::args::{
    EstimateArgs, FamilyArgs, InputArgs, MethodArg, OracleArgs, OutputFormat, PermtestArgs, PreprocessArg,
    ScenarioArg, SelectArgs, SimulateArgs, VariantArg,
};
use crate::config::{CommandName, RunConfig};
use crate::error::{CliError, CliResult};
use crate::input::{read_table, write_observations};
use crate::output::{emit, format_sig17, to_json};

struct Loaded {
    obs: ObservationSet,
    preprocess: PreprocessSpec,
    warnings: Vec<String>,
}

fn load(input: &InputArgs) -> CliResult<Loaded> {
    let table = read_table(&input.input)?;
    let raw = table.observations(&input.response, &input.predictors, &input.input)?;
    let mode = match input.preprocess {
        PreprocessArg::None => PreprocessMode::None,
        PreprocessArg::Rank => PreprocessMode::Rank,
        PreprocessArg::Standardize => PreprocessMode::Standardize,
    };
    if input.rank_response && mode != PreprocessMode::Rank {
        return Err(CliError::Usage("--rank-response requires --preprocess rank".into()));
    }
    let spec = PreprocessSpec {
        mode,
        rank_response: input.rank_response,
    };
    let prepared = preprocess(&raw, &spec);
    let mut warnings: Vec<String> = prepared
        .untouched_columns
        .iter()
        .map(|&j| format!("column '{}' is constant and was not standardised", raw.column_label(j)))
        .collect();
    for issue in validate(&prepared.data).issues {
        warnings.push(match issue {
            ValidationIssue::AllPredictorsDegenerate => "every predictor column is constant".to_string(),
            ValidationIssue::ResponseDegenerate => "the response is constant".to_string(),
        });
    }
    Ok(Loaded {
        obs: prepared.data,
        preprocess: spec,
        warnings,
    })
}

fn input_config(cfg: &mut RunConfig, input: &InputArgs, loaded: &Loaded) {
    cfg.input_path = Some(input.input.clone());
    cfg.response_column = Some(input.response.clone());
    cfg.predictor_columns = (0..loaded.obs.p()).map(|j| loaded.obs.column_label(j)).collect();
    cfg.preprocess = Some(loaded.preprocess);
}

fn nn_variant(arg: VariantArg, obs: &ObservationSet) -> CliResult<NnVariant> {
    match arg {
        VariantArg::Auto => Ok(recommended_variant(obs)),
        VariantArg::Standard => Ok(NnVariant::Standard),
        VariantArg::BetweenGroup => Ok(NnVariant::BetweenGroup),
        VariantArg::RankBased => Err(CliError::Usage(
            "the rank_based variant is only available for `estimate`".into(),
        )),
    }
}

fn format_or(output: Option<OutputFormat>, default: OutputFormat) -> OutputFormat {
    output.unwrap_or(default)
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(format_sig17).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    command: CommandName,
    lambda: f64,
    numerator: f64,
    denominator: f64,
    variant: Variant,
    n: usize,
    p: usize,
    seed: u64,
    signed_sum: Option<i64>,
    tied_pairs: u64,
    pairs_total: u64,
    warnings: Vec<String>,
    config: RunConfig,
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let format = format_or(args.output.format, OutputFormat::Json);
    let mut cfg = RunConfig::new(CommandName::Estimate, format, args.output.output.clone());
    let loaded = load(&args.input)?;
    input_config(&mut cfg, &args.input, &loaded);
    let seed = args.seed.seed;
    let est = match args.variant {
        VariantArg::RankBased => lambda_rank_based(&loaded.obs)?,
        other => lambda_nn(&loaded.obs, seed, nn_variant(other, &loaded.obs)?)?,
    };
    cfg.variant = Some(est.variant);
    cfg.seed = Some(seed);
    cfg.clip_negative = args.clip_negative;
    let mut warnings = loaded.warnings;
    warnings.extend(est.warnings());
    let lambda = if args.clip_negative && est.value < 0.0 {
        warnings.push(format!("negative estimate {} reported as 0", format_sig17(est.value)));
        0.0
    } else {
        est.value
    };
    let report = EstimateReport {
        command: CommandName::Estimate,
        lambda,
        numerator: est.numerator,
        denominator: est.denominator,
        variant: est.variant,
        n: est.n,
        p: est.p,
        seed,
        signed_sum: est.signed_sum,
        tied_pairs: est.tied_pairs,
        pairs_total: est.pairs_total,
        warnings,
        config: cfg,
    };
    let bytes = match format {
        OutputFormat::Json => to_json(&report).into_bytes(),
        OutputFormat::Csv => csv_bytes(
            &["lambda", "numerator", "denominator", "variant", "n", "p", "seed"],
            &[vec![
                format_sig17(report.lambda),
                format_sig17(report.numerator),
                format_sig17(report.denominator),
                report.variant.to_string(),
                report.n.to_string(),
                report.p.to_string(),
                seed.to_string(),
            ]],
        ),
    };
    emit(args.output.output.as_deref(), &bytes)
}

#[derive(Debug, Serialize)]
struct PermtestReport {
    command: CommandName,
    observed: f64,
    p_value: f64,
    corrected_p_value: Option<f64>,
    exceedances: usize,
    n_perms: usize,
    variant: Variant,
    n: usize,
    p: usize,
    seed: u64,
    replicates: Option<Vec<f64>>,
    warnings: Vec<String>,
    config: RunConfig,
}

pub fn permtest(args: &PermtestArgs) -> CliResult<()> {
    let format = format_or(args.output.format, OutputFormat::Json);
    let mut cfg = RunConfig::new(CommandName::Permtest, format, args.output.output.clone());
    let loaded = load(&args.input)?;
    input_config(&mut cfg, &args.input, &loaded);
    let variant = nn_variant(args.variant, &loaded.obs)?;
    let seed = args.seed.seed;
    let result = permutation_test(&loaded.obs, args.n_perms, seed, variant)?;
    cfg.variant = Some(variant.into());
    cfg.seed = Some(seed);
    cfg.n_perms = Some(args.n_perms);
    cfg.corrected = args.corrected;
    let report = PermtestReport {
        command: CommandName::Permtest,
        observed: result.observed,
        p_value: result.p_value,
        corrected_p_value: args.corrected.then(|| result.corrected_p_value()),
        exceedances: result.exceedances(),
        n_perms: result.n_perms,
        variant: variant.into(),
        n: loaded.obs.n(),
        p: loaded.obs.p(),
        seed,
        replicates: args.replicates.then(|| result.replicates.clone()),
        warnings: loaded.warnings,
        config: cfg,
    };
    let bytes = match format {
        OutputFormat::Json => to_json(&report).into_bytes(),
        OutputFormat::Csv => csv_bytes(
            &["observed", "p_value", "corrected_p_value", "exceedances", "n_perms", "variant", "seed"],
            &[vec![
                format_sig17(report.observed),
                format_sig17(report.p_value),
                opt_num(report.corrected_p_value),
                report.exceedances.to_string(),
                report.n_perms.to_string(),
                report.variant.to_string(),
                seed.to_string(),
            ]],
        ),
    };
    emit(args.output.output.as_deref(), &bytes)
}

#[derive(Debug, Serialize)]
struct SelectReport {
    command: CommandName,
    #[serde(flatten)]
    trace: SelectionTrace,
    warnings: Vec<String>,
    config: RunConfig,
}

pub fn select(args: &SelectArgs) -> CliResult<()> {
    let format = format_or(args.output.format, OutputFormat::Json);
    let mut cfg = RunConfig::new(CommandName::Select, format, args.output.output.clone());
    let loaded = load(&args.input)?;
    input_config(&mut cfg, &args.input, &loaded);
    let options = SelectionOptions {
        standardize: !args.no_standardize,
        variant: nn_variant(args.variant, &loaded.obs)?,
        max_p: args.max_p,
    };
    let seed = args.seed.seed;
    let (method, trace) = match args.method {
        MethodArg::Forward => (SelectionMethod::Forward, forward_select_with(&loaded.obs, seed, &options)?),
        MethodArg::BestSubset => (
            SelectionMethod::BestSubset,
            best_subset_select_with(&loaded.obs, seed, &options)?,
        ),
    };
    cfg.variant = Some(options.variant.into());
    cfg.seed = Some(seed);
    cfg.method = Some(method);
    cfg.standardize = Some(options.standardize);
    cfg.max_p = Some(options.max_p);
    let bytes = match format {
        OutputFormat::Json => to_json(&SelectReport {
            command: CommandName::Select,
            trace,
            warnings: loaded.warnings,
            config: cfg,
        })
        .into_bytes(),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            for step in &trace.steps {
                for c in &step.candidates {
                    rows.push(vec![
                        step.step.to_string(),
                        c.column.to_string(),
                        c.label.clone(),
                        opt_num(c.lambda),
                        (step.accepted && step.added_variable == Some(c.column)).to_string(),
                    ]);
                }
            }
            if let Some(subsets) = &trace.all_subsets {
                for s in subsets {
                    rows.push(vec![
                        String::new(),
                        s.columns.iter().map(usize::to_string).collect::<Vec<_>>().join(" "),
                        s.labels.join(" "),
                        opt_num(s.lambda),
                        (s.columns == trace.selected).to_string(),
                    ]);
                }
            }
            csv_bytes(&["step", "columns", "labels", "lambda", "selected"], &rows)
        }
    };
    emit(args.output.output.as_deref(), &bytes)
}

fn scenario(args: &SimulateArgs) -> CliResult<Scenario> {
    let require = |v: Option<f64>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this scenario")))
    };
    Ok(match args.scenario {
        ScenarioArg::Intro => Scenario::IntroDiscretization {
            categories: args.categories,
        },
        ScenarioArg::S1 => Scenario::S1Bvn {
            rho: require(args.rho, "rho")?,
        },
        ScenarioArg::S2a => Scenario::S2aBf,
        ScenarioArg::S2b => Scenario::S2bBf,
        ScenarioArg::S3 => Scenario::S3Discretize { k: args.k },
        ScenarioArg::S4a => Scenario::S4aNoise {
            sigma: require(args.sigma, "sigma")?,
        },
        ScenarioArg::S4b => Scenario::S4bCosine,
        ScenarioArg::S5a => Scenario::S5aIndep,
        ScenarioArg::S5b => Scenario::S5bScale,
        ScenarioArg::S5c => Scenario::S5cRademacher,
        ScenarioArg::S5d => Scenario::S5dMisspec,
    })
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    command: CommandName,
    #[serde(flatten)]
    summary: ScenarioSummary,
    config: RunConfig,
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let format = format_or(args.output.format, OutputFormat::Csv);
    let mut cfg = RunConfig::new(CommandName::Simulate, format, args.output.output.clone());
    let spec = ScenarioSpec::new(scenario(args)?, args.n, args.seed.seed, args.reps);
    cfg.seed = Some(spec.seed);
    cfg.scenario = Some(spec);
    let summary = run_scenario(&spec)?;
    if let Some(path) = &args.dump_data {
        let mut buf = Vec::new();
        write_observations(&generate(&spec)?, &mut buf).map_err(|e| CliError::Write {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
        emit(Some(path), &buf)?;
    }
    let bytes = match format {
        OutputFormat::Csv => {
            let mut header = vec!["scenario", "n", "rep", "data_seed", "estimator_seed"];
            header.extend(summary.metric_names.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = summary
                .reps
                .iter()
                .map(|r| {
                    let mut row = vec![
                        spec.scenario.id().to_string(),
                        spec.n.to_string(),
                        r.rep.to_string(),
                        r.data_seed.to_string(),
                        r.estimator_seed.to_string(),
                    ];
                    row.extend(r.values.iter().map(|&v| format_sig17(v)));
                    row
                })
                .collect();
            csv_bytes(&header, &rows)
        }
        OutputFormat::Json => to_json(&SimulateReport {
            command: CommandName::Simulate,
            summary,
            config: cfg,
        })
        .into_bytes(),
    };
    emit(args.output.output.as_deref(), &bytes)
}

fn model(family: &FamilyArgs) -> CliResult<ClosedFormModel> {
    Ok(match *family {
        FamilyArgs::Mvn { rho } => ClosedFormModel::bivariate_normal(rho),
        FamilyArgs::BfNormal { mu1, mu2, s1, s2, q } => ClosedFormModel::BfNormal {
            mu1,
            var1: s1,
            mu2,
            var2: s2,
            q,
        },
        FamilyArgs::UniformShift { delta, q } => ClosedFormModel::UniformShift { delta, q },
        FamilyArgs::Bernoulli { p1, p2, q } => ClosedFormModel::BernoulliPair { p1, p2, q },
        FamilyArgs::Exponential { rate1, rate2, q } => ClosedFormModel::ExponentialPair { rate1, rate2, q },
        FamilyArgs::MarshallOlkin { beta } => ClosedFormModel::MarshallOlkin { beta },
        FamilyArgs::Frechet { alpha, beta } => ClosedFormModel::Frechet { alpha, beta },
        FamilyArgs::Efgm { alpha, p } => ClosedFormModel::Efgm { alpha, p },
        FamilyArgs::FrechetTable { a10, a20 } => ClosedFormModel::FinitePmf(FinitePmf::frechet_class(a10, a20)?),
        FamilyArgs::ThreeGroup { q } => ClosedFormModel::PiecewiseUniform(PiecewiseUniformGroups::three_group(q)?),
        FamilyArgs::Model { ref file } => {
            let text = std::fs::read_to_string(file).map_err(|source| CliError::Read {
                path: file.clone(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| CliError::Csv {
                path: file.clone(),
                message: format!("invalid model: {e}"),
            })?
        }
    })
}

#[derive(Debug, Serialize)]
struct OracleReport {
    command: CommandName,
    family: &'static str,
    lambda: f64,
    /// `None` for models that are not two-group families.
    psi: Option<f64>,
    config: RunConfig,
}

pub fn oracle(args: &OracleArgs) -> CliResult<()> {
    let format = format_or(args.output.format, OutputFormat::Json);
    let mut cfg = RunConfig::new(CommandName::Oracle, format, args.output.output.clone());
    let model = model(&args.family)?;
    let lambda = lambda_exact(&model)?;
    let psi = match psi_exact(&model) {
        Ok(v) => Some(v),
        Err(Error::NotTwoGroup(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let family = model.name();
    cfg.model = Some(model);
    let bytes = match format {
        OutputFormat::Json => to_json(&OracleReport {
            command: CommandName::Oracle,
            family,
            lambda,
            psi,
            config: cfg,
        })
        .into_bytes(),
        OutputFormat::Csv => csv_bytes(
            &["family", "lambda", "psi"],
            &[vec![family.to_string(), format_sig17(lambda), opt_num(psi)]],
        ),
    };
    emit(args.output.output.as_deref(), &bytes)
}
