use serde::Serialize;

/// Default bound on `|z|` for tolerance checks.
pub const DEFAULT_ZMAX: f64 = 4.0;

/// How a report decides `pass`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `|z| ≤ z_max`: the estimate agrees with the target.
    Within(f64),
    /// `z > z_max`: the estimate exceeds the target by a resolved margin.
    Exceeds(f64),
    /// Exact comparison; `stderr` is 0 and `z` is 0 on equality, ±∞ otherwise.
    Exact,
    /// `estimate < target` for a deterministic bound; `z` as for `Exact`.
    Below,
}

/// One verified quantity.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: f64,
    pub pass: bool,
    pub reps: u64,
    pub seed: u64,
    #[serde(skip)]
    pub rule: Rule,
}

impl CheckReport {
    /// A Monte Carlo estimate that should agree with `target`.
    pub fn within(name: impl Into<String>, target: f64, estimate: f64, stderr: f64, z_max: f64, reps: u64, seed: u64) -> Self {
        Self::build(name.into(), target, estimate, stderr, Rule::Within(z_max), reps, seed)
    }

    /// A Monte Carlo estimate that should exceed `target` by more than
    /// `z_max` standard errors.
    pub fn exceeds(name: impl Into<String>, target: f64, estimate: f64, stderr: f64, z_max: f64, reps: u64, seed: u64) -> Self {
        Self::build(name.into(), target, estimate, stderr, Rule::Exceeds(z_max), reps, seed)
    }

    /// An exact comparison (counts, rationals compared without tolerance).
    pub fn exact(name: impl Into<String>, target: f64, estimate: f64, equal: bool, reps: u64, seed: u64) -> Self {
        let z = if equal {
            0.0
        } else if estimate >= target {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        Self { name: name.into(), target, estimate, stderr: 0.0, z, pass: equal, reps, seed, rule: Rule::Exact }
    }

    /// A statistic that must stay strictly below `bound`.
    pub fn below(name: impl Into<String>, bound: f64, estimate: f64, reps: u64, seed: u64) -> Self {
        let pass = estimate < bound;
        let z = if pass { 0.0 } else { f64::INFINITY };
        Self { name: name.into(), target: bound, estimate, stderr: 0.0, z, pass, reps, seed, rule: Rule::Below }
    }

    /// A check that could not be evaluated (for example too few
    /// conditioning hits); always fails.
    pub fn unavailable(name: impl Into<String>, target: f64, reps: u64, seed: u64) -> Self {
        Self {
            name: name.into(),
            target,
            estimate: f64::NAN,
            stderr: f64::NAN,
            z: f64::NAN,
            pass: false,
            reps,
            seed,
            rule: Rule::Exact,
        }
    }

    fn build(name: String, target: f64, estimate: f64, stderr: f64, rule: Rule, reps: u64, seed: u64) -> Self {
        let z = z_score(estimate, target, stderr);
        let pass = match rule {
            Rule::Within(z_max) => z.abs() <= z_max,
            Rule::Exceeds(z_max) => z > z_max,
            Rule::Exact | Rule::Below => z == 0.0,
        };
        Self { name, target, estimate, stderr, z, pass, reps, seed, rule }
    }
}

fn z_score(estimate: f64, target: f64, stderr: f64) -> f64 {
    let diff = estimate - target;
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else if diff.is_nan() || stderr.is_nan() {
        f64::NAN
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// `name,target,estimate,stderr,z,pass,reps,seed`, one row per report.
pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv is utf-8")
}

/// JSON array of reports; non-finite numbers become `null`.
pub fn reports_to_json(reports: &[CheckReport]) -> serde_json::Value {
    serde_json::to_value(reports).expect("reports serialize")
}

/// Mean and standard error of a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SampleStats {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SampleStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn from_slice(xs: &[f64]) -> Self {
        let mut s = Self::default();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Frequency `hits / n` with its binomial standard error.
pub fn proportion(hits: u64, n: u64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}
