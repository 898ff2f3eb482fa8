//! Line-oriented `key = value` configuration with `[section]` headers.
//!
//! Every key can be overridden from the environment as
//! `WNEQUIV_<SECTION>_<KEY>` (upper case); `schema_version` maps to
//! `WNEQUIV_SCHEMA_VERSION`. Battery members are repeated `member` lines;
//! an environment override lists them separated by `;`. Keys missing from a
//! file take their values from [`DEFAULT_CONFIG`]; `m_rho = none` turns the rule off.

use std::collections::BTreeMap;
use std::path::PathBuf;

use wnequiv::measure::{BaseMeasure, DensityParameter};

use crate::error::{ConfigError, Origin};

pub const SCHEMA_VERSION: u64 = 1;
pub const ENV_PREFIX: &str = "WNEQUIV_";

/// The configuration used when no file is given. Also the reference for the schema.
pub const DEFAULT_CONFIG: &str = "\
schema_version = 1

[measure]
# uniform (lower, upper) | power_law (exponent, length) | exponential (rate)
family = uniform
lower = 0
upper = 1

[battery]
# kind followed by parameters; kappa, upper, gamma and k override the class constants
member = sinusoidal amplitude=0.3 frequency=1 phase=0
member = sinusoidal amplitude=0.2 frequency=1 phase=0
member = sinusoidal amplitude=0.1 frequency=1 phase=0

[study]
n_grid = 1000, 10000, 100000, 1000000
m_list = 8, 16, 32, 64, 128
m_rho = 0.4
seed = 20240601
c_r = 1
output_dir = wnequiv-out
gnuplot = false

[verify]
checks = all
partition_m = 2, 8, 64
unity_m = 16
unity_points = 10000
lemma_m = 8, 16, 32
slope_m = 8, 16, 32, 64, 128
slope_lower = -1.7
slope_upper = -1.3
ystar_n = 100
ystar_m = 8
ystar_paths = 200000
ystar_times = 0.25, 0.5, 0.75, 1.0
kernel_n = 200
kernel_m = 8
kernel_draws = 100000
tv_points = 1000
step1_factors = 50
step1_m = 32
step1_reps = 100000
leg_m = 8, 32
leg_n = 1000
theorem_n = 1000, 10000, 100000, 1000000
theorem_rho = 0.4
membership_grid = 2001
l1_m = 16

[demo]
member = 1
n = 200
m = 8
draws = 100000
paths = 20000
times = 0.25, 0.5, 0.75, 1.0
";

const KEYS: &[(&str, &[&str])] = &[
    ("", &["schema_version"]),
    ("measure", &["family", "lower", "upper", "exponent", "length", "rate"]),
    ("battery", &["member"]),
    (
        "study",
        &["n_grid", "m_list", "m_rho", "seed", "c_r", "output_dir", "gnuplot"],
    ),
    (
        "verify",
        &[
            "checks",
            "partition_m",
            "unity_m",
            "unity_points",
            "lemma_m",
            "slope_m",
            "slope_lower",
            "slope_upper",
            "ystar_n",
            "ystar_m",
            "ystar_paths",
            "ystar_times",
            "kernel_n",
            "kernel_m",
            "kernel_draws",
            "tv_points",
            "step1_factors",
            "step1_m",
            "step1_reps",
            "leg_m",
            "leg_n",
            "theorem_n",
            "theorem_rho",
            "membership_grid",
            "l1_m",
        ],
    ),
    ("demo", &["member", "n", "m", "draws", "paths", "times"]),
];

fn known(section: &str, key: &str) -> bool {
    KEYS.iter().any(|(s, keys)| *s == section && keys.contains(&key))
}

fn is_repeatable(section: &str, key: &str) -> bool {
    section == "battery" && key == "member"
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    value: String,
    origin: Origin,
}

type Table = BTreeMap<(String, String), Vec<Entry>>;

fn lex(text: &str) -> Result<Table, ConfigError> {
    let mut table = Table::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| {
                ConfigError::new(Origin::Line(line), content, "unterminated section header")
            })?;
            let name = name.trim().to_ascii_lowercase();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(ConfigError::new(Origin::Line(line), name, "unknown section"));
            }
            section = name;
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            ConfigError::new(Origin::Line(line), content, "expected `key = value`")
        })?;
        let key = key.trim().to_ascii_lowercase();
        if !known(&section, &key) {
            let where_ = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(ConfigError::new(
                Origin::Line(line),
                key,
                format!("unknown key in {where_}"),
            ));
        }
        let slot = table.entry((section.clone(), key.clone())).or_default();
        if !slot.is_empty() && !is_repeatable(&section, &key) {
            return Err(ConfigError::new(
                Origin::Line(line),
                key,
                format!("duplicate key (first set at {})", slot[0].origin),
            ));
        }
        slot.push(Entry {
            value: value.trim().to_string(),
            origin: Origin::Line(line),
        });
    }
    Ok(table)
}

/// The built-in table; keys absent from a file fall back to these.
fn defaults() -> Table {
    let mut t = lex(DEFAULT_CONFIG).expect("built-in configuration parses");
    for entries in t.values_mut() {
        entries.iter_mut().for_each(|e| e.origin = Origin::Default);
    }
    t
}

fn env_name(section: &str, key: &str) -> String {
    if section.is_empty() {
        format!("{ENV_PREFIX}{}", key.to_ascii_uppercase())
    } else {
        format!("{ENV_PREFIX}{}_{}", section.to_ascii_uppercase(), key.to_ascii_uppercase())
    }
}

fn apply_env(table: &mut Table, env: &BTreeMap<String, String>) -> Result<(), ConfigError> {
    for (var, value) in env.range(ENV_PREFIX.to_string()..) {
        if !var.starts_with(ENV_PREFIX) {
            break;
        }
        let target = KEYS
            .iter()
            .flat_map(|(s, keys)| keys.iter().map(move |k| (*s, *k)))
            .find(|(s, k)| env_name(s, k) == *var);
        let Some((section, key)) = target else {
            return Err(ConfigError::new(
                Origin::Env(var.clone()),
                var.trim_start_matches(ENV_PREFIX).to_ascii_lowercase(),
                "does not name a configuration key",
            ));
        };
        let origin = Origin::Env(var.clone());
        let entries = if is_repeatable(section, key) {
            value
                .split(';')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| Entry {
                    value: v.to_string(),
                    origin: origin.clone(),
                })
                .collect()
        } else {
            vec![Entry {
                value: value.trim().to_string(),
                origin,
            }]
        };
        table.insert((section.to_string(), key.to_string()), entries);
    }
    Ok(())
}

struct Reader {
    table: Table,
}

impl Reader {
    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.table
            .get(&(section.to_string(), key.to_string()))
            .and_then(|v| v.first())
    }

    fn origin(&self, section: &str, key: &str) -> Origin {
        self.entry(section, key).map(|e| e.origin.clone()).unwrap_or(Origin::File)
    }

    fn err(&self, section: &str, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::new(self.origin(section, key), key, msg)
    }

    fn required(&self, section: &str, key: &str) -> Result<&Entry, ConfigError> {
        self.entry(section, key)
            .ok_or_else(|| ConfigError::new(Origin::File, key, format!("missing in [{section}]")))
    }

    fn parse<T>(
        &self,
        section: &str,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Result<T, ConfigError> {
        match self.entry(section, key) {
            None => Ok(default),
            Some(e) => parse(&e.value).ok_or_else(|| {
                ConfigError::new(e.origin.clone(), key, format!("expected {what}, got `{}`", e.value))
            }),
        }
    }

    fn f64(&self, section: &str, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.parse(section, key, default, parse_f64, "a finite number")
    }

    fn u64(&self, section: &str, key: &str, default: u64) -> Result<u64, ConfigError> {
        self.parse(section, key, default, parse_u64, "a non-negative integer")
    }

    fn usize(&self, section: &str, key: &str, default: usize) -> Result<usize, ConfigError> {
        self.u64(section, key, default as u64).map(|v| v as usize)
    }

    fn list<T>(
        &self,
        section: &str,
        key: &str,
        default: &[T],
        parse: impl Fn(&str) -> Option<T>,
        what: &str,
    ) -> Result<Vec<T>, ConfigError>
    where
        T: Clone,
    {
        self.parse(
            section,
            key,
            default.to_vec(),
            |s| s.split(',').map(|p| parse(p.trim())).collect(),
            what,
        )
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Accepts plain integers and exact scientific notation such as `1e6`.
fn parse_u64(s: &str) -> Option<u64> {
    s.parse::<u64>().ok().or_else(|| {
        let v = s.parse::<f64>().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v <= 9_007_199_254_740_992.0).then_some(v as u64)
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureSpec {
    Uniform { lower: f64, upper: f64 },
    PowerLaw { exponent: f64, length: f64 },
    Exponential { rate: f64 },
}

impl MeasureSpec {
    pub fn build(&self) -> wnequiv::Result<BaseMeasure> {
        match *self {
            MeasureSpec::Uniform { lower, upper } => BaseMeasure::uniform(lower, upper),
            MeasureSpec::PowerLaw { exponent, length } => BaseMeasure::power_law(exponent, length),
            MeasureSpec::Exponential { rate } => BaseMeasure::exponential(rate),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    Constant,
    Sinusoidal { amplitude: f64, frequency: f64, phase: f64 },
    Quadratic { slope: f64, curvature: f64 },
    /// `exp(-theta x)`; on a power-law base measure this is the truncated-Gamma model.
    TruncatedGamma { theta: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemberSpec {
    pub family: FamilySpec,
    pub kappa: Option<f64>,
    pub upper: Option<f64>,
    pub gamma: Option<f64>,
    pub k: Option<f64>,
    pub origin: Origin,
}

impl MemberSpec {
    fn parse(text: &str, origin: Origin) -> Result<Self, ConfigError> {
        let err = |msg: String| ConfigError::new(origin.clone(), "member", msg);
        let mut words = text.split_whitespace();
        let kind = words.next().ok_or_else(|| err("empty battery member".into()))?;
        let mut params = BTreeMap::new();
        for w in words {
            let (k, v) = w
                .split_once('=')
                .ok_or_else(|| err(format!("expected name=value, got `{w}`")))?;
            let v = parse_f64(v).ok_or_else(|| err(format!("`{k}` is not a finite number: `{v}`")))?;
            if params.insert(k.to_ascii_lowercase(), v).is_some() {
                return Err(err(format!("parameter `{k}` given twice")));
            }
        }
        let mut take = |name: &str, default: Option<f64>| -> Result<f64, ConfigError> {
            params
                .remove(name)
                .or(default)
                .ok_or_else(|| err(format!("{kind} needs `{name}`")))
        };
        let family = match kind.to_ascii_lowercase().as_str() {
            "constant" => FamilySpec::Constant,
            "sinusoidal" => FamilySpec::Sinusoidal {
                amplitude: take("amplitude", None)?,
                frequency: take("frequency", Some(1.0))?,
                phase: take("phase", Some(0.0))?,
            },
            "quadratic" => FamilySpec::Quadratic {
                slope: take("slope", Some(0.0))?,
                curvature: take("curvature", Some(0.0))?,
            },
            "truncated_gamma" | "exponential_tilt" => FamilySpec::TruncatedGamma {
                theta: take("theta", None)?,
            },
            other => return Err(err(format!("unknown family `{other}`"))),
        };
        let kappa = params.remove("kappa");
        let upper = params.remove("upper").or(params.remove("m"));
        let gamma = params.remove("gamma");
        let k = params.remove("k");
        if let Some(extra) = params.keys().next() {
            return Err(err(format!("unknown parameter `{extra}` for {kind}")));
        }
        Ok(Self {
            family,
            kappa,
            upper,
            gamma,
            k,
            origin,
        })
    }

    pub fn build(&self, measure: &BaseMeasure) -> Result<DensityParameter, ConfigError> {
        let err = |e: wnequiv::Error| ConfigError::new(self.origin.clone(), "member", e.to_string());
        let mut f = match self.family {
            FamilySpec::Constant => DensityParameter::constant(measure),
            FamilySpec::Sinusoidal {
                amplitude,
                frequency,
                phase,
            } => DensityParameter::sinusoidal(measure, amplitude, frequency, phase),
            FamilySpec::Quadratic { slope, curvature } => DensityParameter::quadratic(measure, slope, curvature),
            FamilySpec::TruncatedGamma { theta } => DensityParameter::exponential_tilt(measure, theta),
        }
        .map_err(err)?;
        if self.kappa.is_some() || self.upper.is_some() {
            let (kappa, upper) = (self.kappa.unwrap_or(f.kappa()), self.upper.unwrap_or(f.upper()));
            f = f.with_bounds(kappa, upper).map_err(err)?;
        }
        if self.gamma.is_some() || self.k.is_some() {
            let declared = f.holder();
            let gamma = self.gamma.or(declared.map(|h| h.gamma)).unwrap_or(1.0);
            let k = self.k.or(declared.map(|h| h.constant)).unwrap_or(0.0);
            f = f.with_holder(gamma, k).map_err(err)?;
        }
        Ok(f)
    }
}

/// Named groups of verification checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum CheckGroup {
    PartitionMasses,
    PartitionOfUnity,
    LemmaL2,
    RateSlopes,
    YStarMoments,
    KernelKs,
    GaussianTv,
    Step1Domination,
    GaussianLeg,
    Theorem1Monotone,
    ClassMembership,
    L1Hellinger,
}

impl CheckGroup {
    pub const ALL: [CheckGroup; 12] = [
        CheckGroup::PartitionMasses,
        CheckGroup::PartitionOfUnity,
        CheckGroup::LemmaL2,
        CheckGroup::RateSlopes,
        CheckGroup::YStarMoments,
        CheckGroup::KernelKs,
        CheckGroup::GaussianTv,
        CheckGroup::Step1Domination,
        CheckGroup::GaussianLeg,
        CheckGroup::Theorem1Monotone,
        CheckGroup::ClassMembership,
        CheckGroup::L1Hellinger,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CheckGroup::PartitionMasses => "partition_masses",
            CheckGroup::PartitionOfUnity => "partition_of_unity",
            CheckGroup::LemmaL2 => "lemma_l2",
            CheckGroup::RateSlopes => "rate_slopes",
            CheckGroup::YStarMoments => "ystar_moments",
            CheckGroup::KernelKs => "kernel_ks",
            CheckGroup::GaussianTv => "gaussian_tv",
            CheckGroup::Step1Domination => "step1_domination",
            CheckGroup::GaussianLeg => "gaussian_leg",
            CheckGroup::Theorem1Monotone => "theorem1_monotone",
            CheckGroup::ClassMembership => "class_membership",
            CheckGroup::L1Hellinger => "l1_hellinger",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub checks: Vec<CheckGroup>,
    pub partition_m: Vec<usize>,
    pub unity_m: usize,
    pub unity_points: usize,
    pub lemma_m: Vec<usize>,
    pub slope_m: Vec<usize>,
    pub slope_window: (f64, f64),
    pub ystar_n: u64,
    pub ystar_m: usize,
    pub ystar_paths: usize,
    pub ystar_times: Vec<f64>,
    pub kernel_n: u64,
    pub kernel_m: usize,
    pub kernel_draws: usize,
    pub tv_points: usize,
    pub step1_factors: u64,
    pub step1_m: usize,
    pub step1_reps: usize,
    pub leg_m: Vec<usize>,
    pub leg_n: u64,
    pub theorem_n: Vec<u64>,
    pub theorem_rho: f64,
    pub membership_grid: usize,
    pub l1_m: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoConfig {
    /// 1-based index into the battery.
    pub member: usize,
    pub n: u64,
    pub m: usize,
    pub draws: usize,
    pub paths: usize,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub measure_spec: MeasureSpec,
    pub members: Vec<MemberSpec>,
    pub measure: BaseMeasure,
    pub battery: Vec<DensityParameter>,
    pub n_grid: Vec<u64>,
    pub m_list: Vec<usize>,
    pub m_rho: Option<f64>,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub c_r: f64,
    pub gnuplot: bool,
    pub verify: VerifyConfig,
    pub demo: DemoConfig,
}

/// `m = ceil(n^rho)`, guarded against `n^rho` landing a hair above an integer.
pub fn rule_m(n: u64, rho: f64) -> usize {
    ((n as f64).powf(rho) - 1e-9).ceil().max(2.0) as usize
}

impl StudyConfig {
    /// Parses `text` and applies overrides from the process environment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let env: BTreeMap<String, String> = std::env::vars().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        Self::parse_with_env(text, &env)
    }

    pub fn parse_with_env(text: &str, env: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let user = lex(text)?;
        if !user.contains_key(&(String::new(), "schema_version".to_string())) {
            return Err(ConfigError::new(Origin::File, "schema_version", "missing; expected `schema_version = 1`"));
        }
        let mut table = defaults();
        table.extend(user);
        apply_env(&mut table, env)?;
        Self::from_reader(&Reader { table })
    }

    /// The built-in configuration plus environment overrides.
    pub fn from_env() -> Result<Self, ConfigError> {
        Self::parse(DEFAULT_CONFIG)
    }

    fn from_reader(r: &Reader) -> Result<Self, ConfigError> {
        let version = r.required("", "schema_version")?;
        match parse_u64(&version.value) {
            Some(SCHEMA_VERSION) => {}
            _ => {
                return Err(ConfigError::new(
                    version.origin.clone(),
                    "schema_version",
                    format!("unsupported schema version `{}` (expected {SCHEMA_VERSION})", version.value),
                ))
            }
        }

        let family = r.required("measure", "family")?;
        let measure_spec = match family.value.to_ascii_lowercase().as_str() {
            "uniform" => MeasureSpec::Uniform {
                lower: r.f64("measure", "lower", 0.0)?,
                upper: r.f64("measure", "upper", 1.0)?,
            },
            "power_law" => MeasureSpec::PowerLaw {
                exponent: r.f64("measure", "exponent", 1.0)?,
                length: r.f64("measure", "length", 1.0)?,
            },
            "exponential" => MeasureSpec::Exponential {
                rate: r.f64("measure", "rate", 1.0)?,
            },
            other => {
                return Err(ConfigError::new(
                    family.origin.clone(),
                    "family",
                    format!("unknown measure family `{other}`"),
                ))
            }
        };
        let measure = measure_spec
            .build()
            .map_err(|e| ConfigError::new(family.origin.clone(), "family", e.to_string()))?;

        let members = r
            .table
            .get(&("battery".to_string(), "member".to_string()))
            .map(|v| v.as_slice())
            .unwrap_or(&[]);
        if members.is_empty() {
            return Err(ConfigError::new(Origin::File, "member", "battery is empty"));
        }
        let members = members
            .iter()
            .map(|e| MemberSpec::parse(&e.value, e.origin.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        let battery = members
            .iter()
            .map(|m| m.build(&measure))
            .collect::<Result<Vec<_>, _>>()?;

        let n_grid = r.list("study", "n_grid", &[1000], parse_u64, "a list of integers")?;
        if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(r.err("study", "n_grid", "must be a strictly increasing list of positive integers"));
        }
        let m_list: Vec<usize> = r
            .list("study", "m_list", &[], parse_u64, "a list of integers")?
            .into_iter()
            .map(|v| v as usize)
            .collect();
        if m_list.iter().any(|m| *m < 2) {
            return Err(r.err("study", "m_list", "every m must be at least 2"));
        }
        let m_rho = match r.entry("study", "m_rho") {
            None => None,
            Some(e) if e.value.eq_ignore_ascii_case("none") => None,
            Some(_) => Some(r.f64("study", "m_rho", 0.4)?),
        };
        if let Some(rho) = m_rho {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(r.err("study", "m_rho", format!("need 0 < rho < 1, got {rho}")));
            }
        }
        if m_list.is_empty() && m_rho.is_none() {
            return Err(ConfigError::new(Origin::File, "m_list", "need m_list, m_rho or both"));
        }
        let c_r = r.f64("study", "c_r", 1.0)?;
        if !(c_r > 0.0) {
            return Err(r.err("study", "c_r", "must be positive"));
        }
        let output_dir = PathBuf::from(
            r.entry("study", "output_dir")
                .map(|e| e.value.clone())
                .unwrap_or_else(|| "wnequiv-out".into()),
        );

        let verify = Self::read_verify(r)?;
        let demo = Self::read_demo(r, battery.len())?;

        Ok(Self {
            measure_spec,
            members,
            measure,
            battery,
            n_grid,
            m_list,
            m_rho,
            seed: r.u64("study", "seed", 20240601)?,
            output_dir,
            c_r,
            gnuplot: r.parse("study", "gnuplot", false, parse_bool, "true or false")?,
            verify,
            demo,
        })
    }

    fn read_verify(r: &Reader) -> Result<VerifyConfig, ConfigError> {
        let s = "verify";
        let checks = match r.entry(s, "checks") {
            None => CheckGroup::ALL.to_vec(),
            Some(e) if e.value.trim().eq_ignore_ascii_case("all") => CheckGroup::ALL.to_vec(),
            Some(e) => {
                let mut out = Vec::new();
                for name in e.value.split(',').map(str::trim).filter(|x| !x.is_empty()) {
                    let g = CheckGroup::from_name(name).ok_or_else(|| {
                        ConfigError::new(e.origin.clone(), "checks", format!("unknown check `{name}`"))
                    })?;
                    if !out.contains(&g) {
                        out.push(g);
                    }
                }
                out.sort();
                out
            }
        };
        let ms = |key: &str, default: &[usize]| -> Result<Vec<usize>, ConfigError> {
            let v: Vec<usize> = r
                .list(s, key, &default.iter().map(|x| *x as u64).collect::<Vec<_>>(), parse_u64, "a list of integers")?
                .into_iter()
                .map(|x| x as usize)
                .collect();
            if v.is_empty() || v.iter().any(|m| *m == 0) {
                return Err(r.err(s, key, "need a nonempty list of positive cell counts"));
            }
            Ok(v)
        };
        let positive = |key: &str, default: u64| -> Result<u64, ConfigError> {
            let v = r.u64(s, key, default)?;
            if v == 0 {
                return Err(r.err(s, key, "must be positive"));
            }
            Ok(v)
        };
        let at_least_two = |key: &str, default: usize| -> Result<usize, ConfigError> {
            let v = r.usize(s, key, default)?;
            if v < 2 {
                return Err(r.err(s, key, "must be at least 2"));
            }
            Ok(v)
        };
        let slope_window = (r.f64(s, "slope_lower", -1.7)?, r.f64(s, "slope_upper", -1.3)?);
        if slope_window.0 >= slope_window.1 {
            return Err(r.err(s, "slope_upper", "must exceed slope_lower"));
        }
        let theorem_n = r.list(s, "theorem_n", &[1000, 10_000, 100_000, 1_000_000], parse_u64, "a list of integers")?;
        if theorem_n.len() < 2 || theorem_n[0] == 0 || theorem_n.windows(2).any(|w| w[1] <= w[0]) {
            return Err(r.err(s, "theorem_n", "must be a strictly increasing list of at least two positive integers"));
        }
        let theorem_rho = r.f64(s, "theorem_rho", 0.4)?;
        if !(theorem_rho > 0.0 && theorem_rho < 1.0) {
            return Err(r.err(s, "theorem_rho", "need 0 < rho < 1"));
        }
        let slope_m = ms("slope_m", &[8, 16, 32, 64, 128])?;
        if slope_m.len() < 2 || slope_m.iter().any(|m| *m < 2) {
            return Err(r.err(s, "slope_m", "need at least two cell counts, each at least 2"));
        }
        let lemma_m = ms("lemma_m", &[8, 16, 32])?;
        let leg_m = ms("leg_m", &[8, 32])?;
        if lemma_m.iter().chain(&leg_m).any(|m| *m < 2) {
            let key = if lemma_m.iter().any(|m| *m < 2) { "lemma_m" } else { "leg_m" };
            return Err(r.err(s, key, "every m must be at least 2"));
        }
        Ok(VerifyConfig {
            checks,
            partition_m: ms("partition_m", &[2, 8, 64])?,
            unity_m: at_least_two("unity_m", 16)?,
            unity_points: positive("unity_points", 10_000)? as usize,
            lemma_m,
            slope_m,
            slope_window,
            ystar_n: positive("ystar_n", 100)?,
            ystar_m: at_least_two("ystar_m", 8)?,
            ystar_paths: at_least_two("ystar_paths", 200_000)?,
            ystar_times: r.list(s, "ystar_times", &[0.25, 0.5, 0.75, 1.0], parse_f64, "a list of numbers")?,
            kernel_n: positive("kernel_n", 200)?,
            kernel_m: at_least_two("kernel_m", 8)?,
            kernel_draws: at_least_two("kernel_draws", 100_000)?,
            tv_points: positive("tv_points", 1000)? as usize,
            step1_factors: positive("step1_factors", 50)?,
            step1_m: at_least_two("step1_m", 32)?,
            step1_reps: at_least_two("step1_reps", 100_000)?,
            leg_m,
            leg_n: positive("leg_n", 1000)?,
            theorem_n,
            theorem_rho,
            membership_grid: at_least_two("membership_grid", 2001)?,
            l1_m: at_least_two("l1_m", 16)?,
        })
    }

    fn read_demo(r: &Reader, battery_len: usize) -> Result<DemoConfig, ConfigError> {
        let s = "demo";
        let member = r.usize(s, "member", 1)?;
        if member == 0 || member > battery_len {
            return Err(r.err(s, "member", format!("must lie in 1..={battery_len}")));
        }
        let n = r.u64(s, "n", 200)?;
        let m = r.usize(s, "m", 8)?;
        let draws = r.usize(s, "draws", 100_000)?;
        let paths = r.usize(s, "paths", 20_000)?;
        for (key, ok) in [("n", n >= 1), ("m", m >= 2), ("draws", draws >= 2), ("paths", paths >= 2)] {
            if !ok {
                return Err(r.err(s, key, "value too small"));
            }
        }
        let times = r.list(s, "times", &[0.25, 0.5, 0.75, 1.0], parse_f64, "a list of numbers")?;
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(r.err(s, "times", "must be a nonempty increasing list"));
        }
        Ok(DemoConfig {
            member,
            n,
            m,
            draws,
            paths,
            times,
        })
    }

    /// The `m` values paired with `n` in the rate study: the explicit list and the rule value.
    pub fn m_values(&self, n: u64) -> Vec<usize> {
        let mut ms = self.m_list.clone();
        if let Some(rho) = self.m_rho {
            ms.push(rule_m(n, rho));
        }
        ms.sort_unstable();
        ms.dedup();
        ms
    }

    pub fn member_label(&self, i: usize) -> String {
        format!("{}:{}", i + 1, self.battery[i].label())
    }
}
