use serde::Serialize;
use serde_json::{Map, Value};

/// Outcome of an inequality, identity or scaling check.
///
/// Serializes as `{probe, inputs, measured, bound, pass, margin}`. `margin`
/// is the smallest slack `bound - measured` over the individual checks, so a
/// negative margin means at least one check was violated.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub probe: String,
    pub inputs: Value,
    pub measured: Value,
    pub bound: Value,
    pub pass: bool,
    pub margin: f64,
    /// Report-only probes are informational and never fail a run.
    #[serde(skip)]
    pub report_only: bool,
}

impl ProbeReport {
    pub fn new(probe: impl Into<String>) -> Self {
        ProbeReport {
            probe: probe.into(),
            inputs: Value::Object(Map::new()),
            measured: Value::Object(Map::new()),
            bound: Value::Object(Map::new()),
            pass: true,
            margin: f64::INFINITY,
            report_only: false,
        }
    }

    pub fn input(mut self, key: &str, value: impl Into<Value>) -> Self {
        insert(&mut self.inputs, key, value.into());
        self
    }

    pub fn measure(&mut self, key: &str, value: impl Into<Value>) {
        insert(&mut self.measured, key, value.into());
    }

    /// Records `measured <= bound` under `key` and folds it into the verdict.
    pub fn check_le(&mut self, key: &str, measured: f64, bound: f64) -> bool {
        insert(&mut self.measured, key, json_f64(measured));
        insert(&mut self.bound, key, json_f64(bound));
        let slack = bound - measured;
        let ok = slack >= 0.0;
        self.fold(ok, slack);
        ok
    }

    /// Records `measured >= bound` under `key`.
    pub fn check_ge(&mut self, key: &str, measured: f64, bound: f64) -> bool {
        insert(&mut self.measured, key, json_f64(measured));
        insert(&mut self.bound, key, json_f64(bound));
        let slack = measured - bound;
        let ok = slack >= 0.0;
        self.fold(ok, slack);
        ok
    }

    /// Records a boolean condition with no numeric slack.
    pub fn check_that(&mut self, key: &str, ok: bool) {
        insert(&mut self.measured, key, Value::Bool(ok));
        insert(&mut self.bound, key, Value::Bool(true));
        self.fold(ok, if ok { f64::INFINITY } else { -1.0 });
    }

    pub fn report_only(mut self) -> Self {
        self.report_only = true;
        self
    }

    /// True unless a hard check failed.
    pub fn is_ok(&self) -> bool {
        self.pass || self.report_only
    }

    fn fold(&mut self, ok: bool, slack: f64) {
        self.pass &= ok && !slack.is_nan();
        if slack.is_nan() {
            self.margin = f64::NAN;
        } else if !self.margin.is_nan() {
            self.margin = self.margin.min(slack);
        }
    }
}

/// JSON has no representation for non-finite floats; encode them as strings.
pub fn json_f64(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(x.to_string()))
}

fn insert(target: &mut Value, key: &str, value: Value) {
    if let Value::Object(map) = target {
        map.insert(key.to_string(), value);
    }
}
