#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::time::Duration;

use crowdqc::config::{
    Category, ConsentConfig, Example, PaymentInputs, QualityControlConfig, StyleConfig,
    TaskConfig, Template,
};
use crowdqc::model::{UnitId, WorkerId};
use crowdqc::service::{http, ManualClock, Service};
use proptest::prelude::*;
use tokio::sync::oneshot;

/// A server on an ephemeral port, driven by a manual clock.
pub struct TestServer {
    pub base: String,
    pub clock: Arc<ManualClock>,
    pub service: Arc<Service>,
    pub dir: tempfile::TempDir,
    stop: Option<oneshot::Sender<()>>,
}

impl TestServer {
    pub async fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let clock = Arc::new(ManualClock::new(1_700_000_000_000));
        let service = Arc::new(Service::open(dir.path(), clock.clone(), Duration::from_secs(3600)).unwrap());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (stop, stopped) = oneshot::channel::<()>();
        tokio::spawn(http::serve(listener, service.clone(), async {
            let _ = stopped.await;
        }));
        Self { base, clock, service, dir, stop: Some(stop) }
    }

    pub fn advance(&self) -> impl Fn(u64) + Sync + '_ {
        move |ms| self.clock.advance_ms(ms)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
    }
}

/// Starts the `crowdqc serve` binary on an ephemeral port and returns the
/// child with the base URL it printed.
pub fn spawn_server_binary(data_dir: &Path) -> (Child, String) {
    let mut child = Command::new(env!("CARGO_BIN_EXE_crowdqc"))
        .args(["serve", "--port", "0", "--data-dir"])
        .arg(data_dir)
        .env_remove("CROWDQC_PORT")
        .env_remove("CROWDQC_DATA_DIR")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn crowdqc serve");
    let stdout = child.stdout.take().unwrap();
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).unwrap();
    let base = line
        .trim()
        .strip_prefix("listening on ")
        .unwrap_or_else(|| panic!("unexpected first line {line:?}"))
        .to_owned();
    (child, base)
}

/// Straightforward floating-point version of the time rule: for each worker,
/// take every other worker's durations, compute their mean and sample
/// standard deviation in two passes, and flag durations more than two
/// deviations away.
pub fn naive_time_outliers(durations: &BTreeMap<WorkerId, Vec<(UnitId, u64)>>) -> Option<BTreeSet<(WorkerId, UnitId)>> {
    let contributing: Vec<_> = durations.iter().filter(|(_, v)| !v.is_empty()).collect();
    if contributing.len() < 3 {
        return None;
    }
    let mut flagged = BTreeSet::new();
    for (worker, values) in &contributing {
        let peers: Vec<f64> = contributing
            .iter()
            .filter(|(w, _)| w != worker)
            .flat_map(|(_, v)| v.iter().map(|(_, t)| *t as f64))
            .collect();
        let n = peers.len() as f64;
        let mean = peers.iter().sum::<f64>() / n;
        let var = peers.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        for (unit, t) in values.iter() {
            if (*t as f64 - mean).abs() > 2.0 * sd {
                flagged.insert(((*worker).clone(), unit.clone()));
            }
        }
    }
    Some(flagged)
}

/// Textbook kappa from proportions.
pub fn naive_kappa(a: &[u8], b: &[u8]) -> f64 {
    let n = a.len() as f64;
    let p_o = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let labels: BTreeSet<u8> = a.iter().chain(b).copied().collect();
    let p_e: f64 = labels
        .iter()
        .map(|l| {
            let pa = a.iter().filter(|x| *x == l).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == l).count() as f64 / n;
            pa * pb
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return if p_o == 1.0 { 1.0 } else { 0.0 };
    }
    (p_o - p_e) / (1.0 - p_e)
}

fn text() -> impl Strategy<Value = String> {
    // Printable text including quotes, backslashes, Markdown and non-ASCII.
    "[a-zA-Z0-9 _*#\\-\\.,:;!?'\"\\\\/()\\[\\]`éüß日本→]{1,40}"
        .prop_filter("non-blank", |s| !s.trim().is_empty())
}

fn example() -> impl Strategy<Value = Example> {
    (text(), text()).prop_map(|(text, explanation)| Example { text, explanation })
}

fn category(template: Template) -> impl Strategy<Value = Category> {
    let options = match template {
        Template::QualityAnnotation => prop::collection::vec(text(), 1..5).boxed(),
        Template::IntentClassification => prop::collection::vec(text(), 0..2).boxed(),
        _ => Just(Vec::new()).boxed(),
    };
    (
        text(),
        prop::option::of(text()),
        prop::collection::vec(example(), 0..3),
        prop::collection::vec(example(), 0..3),
        options,
    )
        .prop_map(|(name, instructions, examples, counterexamples, answer_options)| Category {
            name,
            instructions: instructions.unwrap_or_default(),
            examples,
            counterexamples,
            answer_options,
        })
}

fn qc() -> impl Strategy<Value = QualityControlConfig> {
    (1u32..40, 1u32..6, 0u32..4, 0u32..4, 1u32..10, 0u32..=100, prop::option::of(any::<u64>()))
        .prop_map(|(items, units_per_task, dup, golden, assignments, threshold, seed)| {
            let dup = if items >= dup + 2 { dup } else { 0 };
            let golden = if dup + golden < items { golden } else { 0 };
            QualityControlConfig {
                items_per_unit: items,
                units_per_task,
                duplicates_per_unit: dup,
                golden_per_unit: golden,
                assignments_per_unit: assignments,
                golden_pass_threshold: threshold as f64 / 100.0,
                shuffle_seed: seed,
            }
        })
}

/// Valid configs across all templates.
pub fn task_config() -> impl Strategy<Value = TaskConfig> {
    prop_oneof![
        Just(Template::IntentClassification),
        Just(Template::EntityClassification),
        Just(Template::QualityAnnotation),
        Just(Template::Interactive),
    ]
    .prop_flat_map(|template| {
        let categories = if template == Template::Interactive {
            prop::collection::vec(category(template), 0..2).boxed()
        } else {
            prop::collection::vec(category(template), 1..5).boxed()
        };
        (
            Just(template),
            text(),
            text(),
            categories,
            (0.05f64..600.0, 1u32..10_000),
            qc(),
            (prop::option::of(text()), any::<bool>()),
            (prop::option::of("#[0-9a-f]{6}"), prop::option::of(text())),
            any::<bool>(),
            "[a-z]{1,10}",
        )
    })
    .prop_map(
        |(template, title, general_instructions, mut categories, (minutes, rate), qc, (consent_text, required), (background_color, font), feedback_enabled, host)| {
            let mut seen = BTreeSet::new();
            categories.retain(|c| seen.insert(c.name.clone()));
            TaskConfig {
                template,
                title,
                general_instructions,
                categories,
                payment: PaymentInputs {
                    estimated_minutes_per_unit: minutes,
                    hourly_rate_cents: rate,
                },
                qc,
                consent: ConsentConfig {
                    consent_text: consent_text.unwrap_or_default(),
                    required,
                },
                style: StyleConfig { background_color, font },
                feedback_enabled,
                agent_endpoint: (template == Template::Interactive).then(|| format!("https://{host}.example/agent")),
            }
        },
    )
}
