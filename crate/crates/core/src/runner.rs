//! Experiment specs, schema validation, dispatch and output files.
//!
//! A spec is a JSON object with `kind`, `parameters`, `master_seed` and an
//! optional `output_dir`. A run writes, under the output directory,
//! `<kind>-<fingerprint>.csv`, `.summary.json` and `.manifest.json`; a
//! `.partial` marker exists until all three are complete.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};
use sha2::{Digest, Sha256};

use crate::chains::{self, Prop2Params, DEFAULT_WORK_CAP};
use crate::error::{Error, Result};
use crate::experiment::ExperimentResult;
use crate::graphs::NetworkKind;
use crate::perc::{good_probability, t_experiment, GoodSweep, TExperiment};
use crate::robust::{ac_sweep, RobustRule};
use crate::routes::{linearity_curve, moment_experiment, stretch_sweep, RouteOptions};

pub const KINDS: [&str; 8] = [
    "ac_sweep",
    "linearity",
    "moment",
    "stretch",
    "perc_t",
    "good_prob",
    "chains",
    "prop2",
];

/// Environment variable naming the output directory when a spec has none.
pub const OUTPUT_DIR_ENV: &str = "PROXNET_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: String,
    pub parameters: Map<String, Json>,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One schema violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Issue {
    /// Dotted path such as `parameters.replicates`.
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}: {}", self.field, self.message),
            None => write!(f, "{}: {}", self.field, self.message),
        }
    }
}

fn issue(field: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue {
        field: field.into(),
        line: None,
        message: message.into(),
    }
}

fn issues_to_error(issues: &[Issue]) -> Error {
    let first = &issues[0];
    let reason = issues.iter().map(Issue::to_string).collect::<Vec<_>>().join("; ");
    Error::InvalidParameter {
        name: first.field.clone(),
        reason,
    }
}

fn one() -> f64 {
    1.0
}

fn rng_rule() -> String {
    "rng".to_string()
}

fn default_c_stars() -> Vec<f64> {
    vec![1.0, 2.0, 4.0]
}

fn default_work_cap() -> u64 {
    DEFAULT_WORK_CAP
}

fn default_c_star() -> f64 {
    2.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AcSweepParams {
    #[serde(default = "rng_rule")]
    rule: String,
    #[serde(rename = "Ls")]
    ls: Vec<f64>,
    replicates: usize,
    #[serde(default = "one")]
    intensity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearityParams {
    network: NetworkKind,
    rs: Vec<f64>,
    replicates: usize,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    margin_per_r: Option<f64>,
    #[serde(default = "one")]
    intensity: f64,
    #[serde(default)]
    angle: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentParams {
    network: NetworkKind,
    rs: Vec<f64>,
    k: u32,
    replicates: usize,
    #[serde(default)]
    margin: Option<f64>,
    #[serde(default)]
    margin_per_r: Option<f64>,
    #[serde(default = "one")]
    intensity: f64,
    #[serde(default)]
    angle: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StretchParams {
    network: NetworkKind,
    ns: Vec<usize>,
    replicates: usize,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
enum ChainsParams {
    Theta {
        #[serde(rename = "L")]
        l: f64,
        #[serde(default = "one")]
        intensity: f64,
        instances: usize,
    },
    Decreasing {
        #[serde(rename = "L")]
        l: f64,
        ns: Vec<usize>,
        d0s: Vec<f64>,
        #[serde(default = "one")]
        intensity: f64,
        replicates: usize,
        #[serde(default = "default_work_cap")]
        work_cap: u64,
    },
    LongestMst {
        #[serde(rename = "Ls")]
        ls: Vec<f64>,
        #[serde(default = "one")]
        intensity: f64,
        replicates: usize,
        #[serde(default = "default_c_stars")]
        c_stars: Vec<f64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Prop2Spec {
    #[serde(rename = "L")]
    l: f64,
    #[serde(default = "default_c_star")]
    c_star: f64,
    #[serde(default = "one")]
    intensity: f64,
    replicates: usize,
}

/// Typed parameters of a validated spec.
#[derive(Debug)]
enum Plan {
    AcSweep(AcSweepParams, RobustRule),
    Linearity(LinearityParams),
    Moment(MomentParams),
    Stretch(StretchParams),
    PercT(TExperiment),
    GoodProb(GoodSweep),
    Chains(ChainsParams),
    Prop2(Prop2Spec),
}

fn parse_params<T: DeserializeOwned>(params: &Map<String, Json>) -> std::result::Result<T, Issue> {
    let value = Json::Object(params.clone());
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." {
            // Missing or unknown fields carry their name in the message.
            "parameters".to_string()
        } else {
            format!("parameters.{path}")
        };
        issue(field, e.into_inner().to_string())
    })
}

fn positive(field: &str, x: f64, out: &mut Vec<Issue>) {
    if !(x.is_finite() && x > 0.0) {
        out.push(issue(format!("parameters.{field}"), format!("must be positive, got {x}")));
    }
}

fn non_negative(field: &str, x: f64, out: &mut Vec<Issue>) {
    if !(x.is_finite() && x >= 0.0) {
        out.push(issue(format!("parameters.{field}"), format!("must be non-negative, got {x}")));
    }
}

fn at_least_one(field: &str, n: usize, out: &mut Vec<Issue>) {
    if n == 0 {
        out.push(issue(format!("parameters.{field}"), "must be at least 1"));
    }
}

fn non_empty<T>(field: &str, xs: &[T], out: &mut Vec<Issue>) {
    if xs.is_empty() {
        out.push(issue(format!("parameters.{field}"), "must not be empty"));
    }
}

fn margins(margin: Option<f64>, per_r: Option<f64>, out: &mut Vec<Issue>) {
    if let Some(m) = margin {
        positive("margin", m, out);
    }
    if let Some(c) = per_r {
        positive("margin_per_r", c, out);
    }
}

fn plan(spec: &ExperimentSpec) -> std::result::Result<Plan, Vec<Issue>> {
    let p = &spec.parameters;
    let mut out = Vec::new();
    let plan = match spec.kind.as_str() {
        "ac_sweep" => {
            let a: AcSweepParams = parse_params(p).map_err(|e| vec![e])?;
            non_empty("Ls", &a.ls, &mut out);
            a.ls.iter().for_each(|&l| positive("Ls", l, &mut out));
            if a.ls.windows(2).any(|w| w[1] <= w[0]) {
                out.push(issue("parameters.Ls", "must be strictly increasing"));
            }
            at_least_one("replicates", a.replicates, &mut out);
            non_negative("intensity", a.intensity, &mut out);
            match a.rule.parse::<RobustRule>() {
                Ok(rule) => Plan::AcSweep(a, rule),
                Err(e) => {
                    out.push(issue("parameters.rule", e.to_string()));
                    return Err(out);
                }
            }
        }
        "linearity" => {
            let a: LinearityParams = parse_params(p).map_err(|e| vec![e])?;
            non_empty("rs", &a.rs, &mut out);
            a.rs.iter().for_each(|&r| positive("rs", r, &mut out));
            at_least_one("replicates", a.replicates, &mut out);
            non_negative("intensity", a.intensity, &mut out);
            margins(a.margin, a.margin_per_r, &mut out);
            Plan::Linearity(a)
        }
        "moment" => {
            let a: MomentParams = parse_params(p).map_err(|e| vec![e])?;
            non_empty("rs", &a.rs, &mut out);
            a.rs.iter().for_each(|&r| positive("rs", r, &mut out));
            at_least_one("k", a.k as usize, &mut out);
            at_least_one("replicates", a.replicates, &mut out);
            non_negative("intensity", a.intensity, &mut out);
            margins(a.margin, a.margin_per_r, &mut out);
            Plan::Moment(a)
        }
        "stretch" => {
            let a: StretchParams = parse_params(p).map_err(|e| vec![e])?;
            non_empty("ns", &a.ns, &mut out);
            if a.ns.iter().any(|&n| n < 2) {
                out.push(issue("parameters.ns", "every n must be at least 2"));
            }
            at_least_one("replicates", a.replicates, &mut out);
            Plan::Stretch(a)
        }
        "perc_t" => {
            let a: TExperiment = parse_params(p).map_err(|e| vec![e])?;
            if !(0.0..=1.0).contains(&a.p) {
                out.push(issue("parameters.p", format!("must lie in [0, 1], got {}", a.p)));
            }
            if a.half_width < 2 {
                out.push(issue("parameters.half_width", "must be at least 2"));
            }
            if a.half_height < 1 {
                out.push(issue("parameters.half_height", "must be at least 1"));
            }
            at_least_one("replicates", a.replicates, &mut out);
            Plan::PercT(a)
        }
        "good_prob" => {
            let a: GoodSweep = parse_params(p).map_err(|e| vec![e])?;
            non_empty("Ls", &a.ls, &mut out);
            a.ls.iter().for_each(|&l| positive("Ls", l, &mut out));
            a.c_ls.iter().for_each(|&c| positive("c_Ls", c, &mut out));
            if a.c_ls.is_empty() && a.c_l_quantile.is_none() {
                out.push(issue("parameters.c_Ls", "give c_Ls, c_l_quantile, or both"));
            }
            if let Some(q) = a.c_l_quantile {
                if !(q > 0.0 && q <= 1.0) {
                    out.push(issue("parameters.c_l_quantile", "must lie in (0, 1]"));
                }
            }
            at_least_one("replicates", a.replicates, &mut out);
            non_negative("intensity", a.intensity, &mut out);
            if let Err(e) = a.thresholds.validate() {
                out.push(issue("parameters.thresholds", e.to_string()));
            }
            Plan::GoodProb(a)
        }
        "chains" => {
            let a: ChainsParams = parse_params(p).map_err(|e| vec![e])?;
            match &a {
                ChainsParams::Theta { l, intensity, instances } => {
                    positive("L", *l, &mut out);
                    non_negative("intensity", *intensity, &mut out);
                    at_least_one("instances", *instances, &mut out);
                }
                ChainsParams::Decreasing {
                    l,
                    ns,
                    d0s,
                    intensity,
                    replicates,
                    work_cap,
                } => {
                    positive("L", *l, &mut out);
                    non_empty("ns", ns, &mut out);
                    if ns.contains(&0) {
                        out.push(issue("parameters.ns", "every n must be at least 1"));
                    }
                    non_empty("d0s", d0s, &mut out);
                    d0s.iter().for_each(|&d| non_negative("d0s", d, &mut out));
                    non_negative("intensity", *intensity, &mut out);
                    at_least_one("replicates", *replicates, &mut out);
                    at_least_one("work_cap", *work_cap as usize, &mut out);
                }
                ChainsParams::LongestMst {
                    ls,
                    intensity,
                    replicates,
                    c_stars,
                } => {
                    if ls.len() < 2 {
                        out.push(issue("parameters.Ls", "need at least two sizes"));
                    }
                    ls.iter().for_each(|&l| positive("Ls", l, &mut out));
                    non_negative("intensity", *intensity, &mut out);
                    at_least_one("replicates", *replicates, &mut out);
                    c_stars.iter().for_each(|&c| positive("c_stars", c, &mut out));
                }
            }
            Plan::Chains(a)
        }
        "prop2" => {
            let a: Prop2Spec = parse_params(p).map_err(|e| vec![e])?;
            at_least_one("replicates", a.replicates, &mut out);
            let params = Prop2Params {
                l: a.l,
                c_star: a.c_star,
                intensity: a.intensity,
            };
            if let Err(Error::InvalidParameter { name, reason }) = params.validate() {
                out.push(issue(format!("parameters.{name}"), reason));
            }
            Plan::Prop2(a)
        }
        other => {
            return Err(vec![issue(
                "kind",
                format!("unknown kind `{other}`; valid kinds: {}", KINDS.join(", ")),
            )]);
        }
    };
    if out.is_empty() {
        Ok(plan)
    } else {
        Err(out)
    }
}

/// Line of the first occurrence of the last key of `field`, searching after
/// the keys that precede it.
fn locate(text: &str, field: &str) -> Option<usize> {
    let mut from = 0;
    for key in field.split('.') {
        let key = key.split('[').next().unwrap_or(key);
        let needle = format!("\"{key}\"");
        from += text[from..].find(&needle)?;
    }
    Some(text[..from].matches('\n').count() + 1)
}

fn parse_spec_value(value: Json) -> std::result::Result<ExperimentSpec, Vec<Issue>> {
    let Json::Object(mut obj) = value else {
        return Err(vec![issue("spec", "must be a JSON object")]);
    };
    // A manifest carries its spec under `spec`.
    if let (Some(Json::Object(inner)), true) = (obj.get("spec"), obj.contains_key("fingerprint")) {
        obj = inner.clone();
    }
    let mut out = Vec::new();
    for key in obj.keys() {
        if !["kind", "parameters", "master_seed", "output_dir"].contains(&key.as_str()) {
            out.push(issue(key.clone(), "unknown field"));
        }
    }
    let kind = match obj.get("kind") {
        Some(Json::String(s)) => Some(s.clone()),
        Some(_) => {
            out.push(issue("kind", "must be a string"));
            None
        }
        None => {
            out.push(issue("kind", format!("missing; valid kinds: {}", KINDS.join(", "))));
            None
        }
    };
    let master_seed = match obj.get("master_seed") {
        Some(v) => match v.as_u64() {
            Some(s) => Some(s),
            None => {
                out.push(issue("master_seed", "must be a non-negative integer below 2^64"));
                None
            }
        },
        None => {
            out.push(issue(
                "master_seed",
                "missing; a master seed is required and is never generated automatically",
            ));
            None
        }
    };
    let parameters = match obj.get("parameters") {
        Some(Json::Object(m)) => Some(m.clone()),
        Some(_) => {
            out.push(issue("parameters", "must be an object"));
            None
        }
        None => {
            out.push(issue("parameters", "missing"));
            None
        }
    };
    let output_dir = match obj.get("output_dir") {
        None | Some(Json::Null) => None,
        Some(Json::String(s)) => Some(PathBuf::from(s)),
        Some(_) => {
            out.push(issue("output_dir", "must be a string"));
            None
        }
    };
    match (kind, master_seed, parameters) {
        (Some(kind), Some(master_seed), Some(parameters)) if out.is_empty() => Ok(ExperimentSpec {
            kind,
            parameters,
            master_seed,
            output_dir,
        }),
        _ => Err(out),
    }
}

/// Parses and validates a spec or manifest. Every issue carries the line of
/// the offending field where it can be found.
pub fn validate_text(text: &str) -> std::result::Result<ExperimentSpec, Vec<Issue>> {
    let value: Json = serde_json::from_str(text).map_err(|e| {
        vec![Issue {
            field: "spec".into(),
            line: Some(e.line()),
            message: e.to_string(),
        }]
    })?;
    let result = parse_spec_value(value).and_then(|spec| plan(&spec).map(|_| spec));
    result.map_err(|issues| {
        issues
            .into_iter()
            .map(|mut i| {
                i.line = i.line.or_else(|| locate(text, &i.field));
                i
            })
            .collect()
    })
}

/// Validates a parsed spec without line information.
pub fn validate(spec: &ExperimentSpec) -> std::result::Result<(), Vec<Issue>> {
    plan(spec).map(|_| ())
}

/// Reads and validates a spec or manifest file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)?;
    validate_text(&text).map_err(|issues| issues_to_error(&issues))
}

/// Sets the field at a dotted path (for example `parameters.replicates`).
/// `raw` is read as JSON, falling back to a plain string.
pub fn apply_override(spec: &mut Json, path: &str, raw: &str) -> Result<()> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Json::String(raw.to_string()));
    let mut keys = path.split('.').peekable();
    let mut node = spec;
    while let Some(key) = keys.next() {
        if key.is_empty() {
            return Err(Error::invalid(path, "empty path segment"));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::invalid(path, format!("`{key}` is not inside an object")))?;
        if keys.peek().is_none() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Json::Object(Map::new()));
    }
    Err(Error::invalid(path, "empty path"))
}

/// Hash of the spec without its output directory: 16 bytes of SHA-256 over
/// the canonical (key-sorted) JSON, hex encoded.
pub fn fingerprint(spec: &ExperimentSpec) -> String {
    let canonical = json!({
        "kind": spec.kind,
        "master_seed": spec.master_seed,
        "parameters": spec.parameters,
    });
    let digest = Sha256::digest(canonical.to_string().as_bytes());
    hex::encode(&digest[..16])
}

/// Computes an experiment without writing anything.
pub fn execute(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let plan = plan(spec).map_err(|issues| issues_to_error(&issues))?;
    let seed = spec.master_seed;
    let opts = |margin, margin_per_r, intensity, angle| RouteOptions {
        margin,
        margin_per_r,
        intensity,
        angle,
    };
    let mut result = match plan {
        Plan::AcSweep(a, rule) => ac_sweep(rule, &a.ls, a.replicates, a.intensity, seed)?,
        Plan::Linearity(a) => linearity_curve(
            a.network,
            &a.rs,
            a.replicates,
            seed,
            opts(a.margin, a.margin_per_r, a.intensity, a.angle),
        )?,
        Plan::Moment(a) => moment_experiment(
            a.network,
            &a.rs,
            a.k,
            a.replicates,
            seed,
            opts(a.margin, a.margin_per_r, a.intensity, a.angle),
        )?,
        Plan::Stretch(a) => stretch_sweep(a.network, &a.ns, a.replicates, seed)?,
        Plan::PercT(a) => t_experiment(&a, seed)?,
        Plan::GoodProb(a) => good_probability(&a, seed)?,
        Plan::Chains(ChainsParams::Theta { l, intensity, instances }) => {
            chains::theta_chain_check(l, intensity, instances, seed)?
        }
        Plan::Chains(ChainsParams::Decreasing {
            l,
            ns,
            d0s,
            intensity,
            replicates,
            work_cap,
        }) => chains::decreasing_chain_grid(l, &ns, &d0s, intensity, replicates, seed, work_cap)?,
        Plan::Chains(ChainsParams::LongestMst {
            ls,
            intensity,
            replicates,
            c_stars,
        }) => chains::longest_mst_sweep(&ls, intensity, replicates, &c_stars, seed)?,
        Plan::Prop2(a) => chains::prop2_events(
            &Prop2Params {
                l: a.l,
                c_star: a.c_star,
                intensity: a.intensity,
            },
            a.replicates,
            seed,
        )?,
    };
    result.kind = spec.kind.clone();
    result.spec_fingerprint = fingerprint(spec);
    Ok(result)
}

/// Paths written by [`run`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub fingerprint: String,
    pub csv: PathBuf,
    pub summary: PathBuf,
    pub manifest: PathBuf,
}

/// Resolves the output directory: the spec's, then `PROXNET_OUTPUT_DIR`,
/// then `./proxnet-out`.
pub fn output_dir(spec: &ExperimentSpec) -> PathBuf {
    spec.output_dir
        .clone()
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("proxnet-out"))
}

/// Validates, computes and writes the three output files.
pub fn run(spec: &ExperimentSpec) -> Result<(ExperimentResult, RunOutput)> {
    validate(spec).map_err(|issues| issues_to_error(&issues))?;
    let dir = output_dir(spec);
    fs::create_dir_all(&dir)?;
    let fp = fingerprint(spec);
    let stem = format!("{}-{fp}", spec.kind);
    let partial = dir.join(format!("{stem}.partial"));
    fs::write(&partial, b"")?;

    let result = execute(spec)?;
    let out = RunOutput {
        fingerprint: fp.clone(),
        csv: dir.join(format!("{stem}.csv")),
        summary: dir.join(format!("{stem}.summary.json")),
        manifest: dir.join(format!("{stem}.manifest.json")),
    };
    result.table.write_csv(fs::File::create(&out.csv)?)?;
    let summary = json!({
        "kind": result.kind,
        "spec_fingerprint": fp,
        "tool_version": result.tool_version,
        "summary": result.summary,
    });
    fs::write(&out.summary, serde_json::to_string_pretty(&summary)? + "\n")?;
    let file_name = |p: &Path| p.file_name().map(|f| f.to_string_lossy().into_owned());
    let manifest = json!({
        "fingerprint": fp,
        "spec": spec,
        "master_seed": spec.master_seed,
        "tool_version": result.tool_version,
        "files": [file_name(&out.csv), file_name(&out.summary)],
    });
    fs::write(&out.manifest, serde_json::to_string_pretty(&manifest)? + "\n")?;
    fs::remove_file(&partial)?;
    Ok((result, out))
}

/// [`run`] on a dedicated pool of `threads` workers.
pub fn run_with_threads(spec: &ExperimentSpec, threads: usize) -> Result<(ExperimentResult, RunOutput)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::invalid("threads", e.to_string()))?;
    pool.install(|| run(spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEARITY: &str = r#"{
  "kind": "linearity",
  "parameters": {
    "network": "rng",
    "rs": [3],
    "replicates": 2
  },
  "master_seed": 7
}"#;

    #[test]
    fn valid_spec_parses() {
        let spec = validate_text(LINEARITY).unwrap();
        assert_eq!(spec.kind, "linearity");
        assert_eq!(spec.master_seed, 7);
    }

    #[test]
    fn negative_replicates_names_field_and_line() {
        let text = LINEARITY.replace("\"replicates\": 2", "\"replicates\": -1");
        let issues = validate_text(&text).unwrap_err();
        assert_eq!(issues[0].field, "parameters.replicates");
        assert_eq!(issues[0].line, Some(6));
    }

    #[test]
    fn zero_replicates_rejected() {
        let text = LINEARITY.replace("\"replicates\": 2", "\"replicates\": 0");
        let issues = validate_text(&text).unwrap_err();
        assert_eq!(issues[0].field, "parameters.replicates");
    }

    #[test]
    fn missing_seed_rejected() {
        let text = LINEARITY.replace(",\n  \"master_seed\": 7", "");
        let issues = validate_text(&text).unwrap_err();
        assert!(issues.iter().any(|i| i.field == "master_seed"));
    }

    #[test]
    fn unknown_kind_lists_kinds() {
        let text = LINEARITY.replace("\"linearity\"", "\"nope\"");
        let issues = validate_text(&text).unwrap_err();
        assert_eq!(issues[0].field, "kind");
        assert!(issues[0].message.contains("prop2"));
        assert_eq!(issues[0].line, Some(2));
    }

    #[test]
    fn unknown_parameter_rejected() {
        let text = LINEARITY.replace("\"rs\"", "\"radii\"");
        assert!(validate_text(&text).is_err());
    }

    #[test]
    fn syntax_error_has_line() {
        let issues = validate_text("{\n  \"kind\": \n}").unwrap_err();
        assert_eq!(issues[0].line, Some(3));
    }

    #[test]
    fn overrides_set_nested_fields() {
        let mut v: Json = serde_json::from_str(LINEARITY).unwrap();
        apply_override(&mut v, "parameters.replicates", "5").unwrap();
        apply_override(&mut v, "parameters.network", "mst").unwrap();
        assert_eq!(v["parameters"]["replicates"], json!(5));
        assert_eq!(v["parameters"]["network"], json!("mst"));
    }

    #[test]
    fn fingerprint_ignores_output_dir() {
        let mut a = validate_text(LINEARITY).unwrap();
        let fa = fingerprint(&a);
        a.output_dir = Some("elsewhere".into());
        assert_eq!(fingerprint(&a), fa);
        a.master_seed += 1;
        assert_ne!(fingerprint(&a), fa);
    }

    #[test]
    fn every_kind_dispatches() {
        let specs = [
            json!({"kind": "ac_sweep", "parameters": {"Ls": [3, 4], "replicates": 1}, "master_seed": 1}),
            json!({"kind": "linearity", "parameters": {"network": "rng", "rs": [2], "replicates": 1}, "master_seed": 1}),
            json!({"kind": "moment", "parameters": {"network": "rng", "rs": [2], "k": 2, "replicates": 1}, "master_seed": 1}),
            json!({"kind": "stretch", "parameters": {"network": "delaunay", "ns": [10], "replicates": 1}, "master_seed": 1}),
            json!({"kind": "perc_t", "parameters": {"mechanism": "independent", "p": 0.9, "half_width": 4, "half_height": 3, "replicates": 2}, "master_seed": 1}),
            json!({"kind": "good_prob", "parameters": {"Ls": [3], "c_Ls": [100], "replicates": 1}, "master_seed": 1}),
            json!({"kind": "chains", "parameters": {"mode": "decreasing", "L": 2, "ns": [2], "d0s": [0.3], "replicates": 2}, "master_seed": 1}),
            json!({"kind": "prop2", "parameters": {"L": 30, "c_star": 0.5, "replicates": 1}, "master_seed": 1}),
        ];
        for v in specs {
            let spec: ExperimentSpec = serde_json::from_value(v).unwrap();
            let res = execute(&spec).unwrap();
            assert_eq!(res.kind, spec.kind);
            assert_eq!(res.spec_fingerprint, fingerprint(&spec));
        }
    }
}
