//! End-to-end orchestration: QA_orig → selector → reformulations →
//! augmentation → QA_robust → evaluation, plus the ablation variants and
//! distant-pair export.
//!
//! Every run writes into `paths.out_dir`:
//!
//! ```text
//! qa_orig.json  rcs.ckpt.json  reformulations.jsonl  qa_robust.json
//! orig/report.json  robust/report.json  manifest.json
//! ```
//!
//! Selector training seeds from the top-level seed; the other random stages
//! draw from their own ChaCha stream of it, so no stage's randomness
//! depends on how much an earlier stage consumed.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{self, AnnotatedQuestion, Conversation};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport};
use crate::kg::KnowledgeGraph;
use crate::qa::{augment_training_set, ConvQa, OverlapQaModel, QaPair};
use crate::rcs::{self, train_rcs, DqnConfig, HashedBowEncoder, RewardMode, Selector, ENCODER_KIND, ENCODER_VERSION};
use crate::reformulator::{
    self, generate_distant_pairs, write_distant_pairs, Generator, NoisyGenerator, Provenance, Reformulation,
    RuleGenerator,
};
use crate::synth;
use crate::taxonomy::{valid_actions, ActionMask, Category, Operation};
use crate::text;
use crate::SeededRng;

pub const QA_ORIG_FILE: &str = "qa_orig.json";
pub const QA_ROBUST_FILE: &str = "qa_robust.json";
pub const RCS_FILE: &str = "rcs.ckpt.json";
pub const REFORMULATIONS_FILE: &str = "reformulations.jsonl";
pub const DISTANT_PAIRS_FILE: &str = "distant_pairs.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

const STREAM_SELECT: u64 = 4;
const STREAM_DISTANT: u64 = 8;

fn stage_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Defaults point at the bundled synthetic benchmark.
    pub kg_items: PathBuf,
    pub kg_facts: PathBuf,
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
    /// Default `out`.
    pub out_dir: PathBuf,
    /// JSONL of `{conv, turn, text}` rewrites, one per train turn; only read
    /// by the `completion_file` selection mode.
    pub completion_file: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        let data = synth::bundled_data_dir();
        Self {
            kg_items: data.join(synth::ITEMS_FILE),
            kg_facts: data.join(synth::FACTS_FILE),
            train: data.join(synth::TRAIN_FILE),
            dev: data.join(synth::DEV_FILE),
            test: data.join(synth::TEST_FILE),
            out_dir: PathBuf::from("out"),
            completion_file: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorMode {
    #[default]
    Rule,
    RuleNoisy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub mode: GeneratorMode,
    /// Only used by `rule_noisy`. Default 0.1.
    pub noise_rate: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            mode: GeneratorMode::Rule,
            noise_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaConfig {
    /// Additive smoothing of the learned token→predicate weights. Default 1.
    pub smoothing: f64,
}

impl Default for QaConfig {
    fn default() -> Self {
        Self { smoothing: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistantPairsConfig {
    /// Per-category cap. Default 2000.
    pub cap: usize,
}

impl Default for DistantPairsConfig {
    fn default() -> Self {
        Self { cap: 2000 }
    }
}

/// Whole-run configuration, read from TOML. Every field has a default.
///
/// The top-level `seed` and `k` override `dqn.seed` and `dqn.k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Default 0.
    pub seed: u64,
    /// Categories selected per train question. Default 5.
    pub k: usize,
    /// Default `extrinsic`.
    pub reward: RewardMode,
    pub paths: PathsConfig,
    pub dqn: DqnConfig,
    pub generator: GeneratorConfig,
    pub qa: QaConfig,
    pub distant_pairs: DistantPairsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            k: 5,
            reward: RewardMode::Extrinsic,
            paths: PathsConfig::default(),
            dqn: DqnConfig::default(),
            generator: GeneratorConfig::default(),
            qa: QaConfig::default(),
            distant_pairs: DistantPairsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Validation(format!("config: {e}")))
    }

    /// Reads a TOML file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let body =
            fs::read_to_string(path).map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&body).map_err(|e| match e {
            Error::Validation(m) => Error::Validation(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.kg_items,
            &mut p.kg_facts,
            &mut p.train,
            &mut p.dev,
            &mut p.test,
            &mut p.out_dir,
        ] {
            if slot.is_relative() {
                *slot = base.join(&*slot);
            }
        }
        if let Some(c) = p.completion_file.as_mut().filter(|c| c.is_relative()) {
            *c = base.join(&*c);
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The DQN settings actually used for training.
    pub fn effective_dqn(&self) -> DqnConfig {
        DqnConfig {
            seed: self.seed,
            k: self.k,
            ..self.dqn.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Validation("k must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.generator.noise_rate) {
            return Err(Error::Validation(format!(
                "generator.noise_rate must lie in [0, 1], got {}",
                self.generator.noise_rate
            )));
        }
        if !(self.qa.smoothing > 0.0 && self.qa.smoothing.is_finite()) {
            return Err(Error::Validation(format!(
                "qa.smoothing must be > 0, got {}",
                self.qa.smoothing
            )));
        }
        self.effective_dqn().validate()?;
        let p = &self.paths;
        for (name, path) in [
            ("kg_items", &p.kg_items),
            ("kg_facts", &p.kg_facts),
            ("train", &p.train),
            ("dev", &p.dev),
            ("test", &p.test),
        ] {
            if !path.is_file() {
                return Err(Error::Validation(format!(
                    "paths.{name}: {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Selection modes

/// How stage 4 picks categories for each train question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    /// Greedy top-k of the trained selector.
    #[default]
    Rcs,
    AllCats,
    RandomCats,
    SampleCats,
    InsOnly,
    DelOnly,
    SubsOnly,
    CompletionFile,
}

impl SelectionMode {
    pub const ALL: [SelectionMode; 8] = [
        SelectionMode::Rcs,
        SelectionMode::AllCats,
        SelectionMode::RandomCats,
        SelectionMode::SampleCats,
        SelectionMode::InsOnly,
        SelectionMode::DelOnly,
        SelectionMode::SubsOnly,
        SelectionMode::CompletionFile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectionMode::Rcs => "rcs",
            SelectionMode::AllCats => "all_cats",
            SelectionMode::RandomCats => "random_cats",
            SelectionMode::SampleCats => "sample_cats",
            SelectionMode::InsOnly => "ins_only",
            SelectionMode::DelOnly => "del_only",
            SelectionMode::SubsOnly => "subs_only",
            SelectionMode::CompletionFile => "completion_file",
        }
    }

    pub fn needs_selector(self) -> bool {
        matches!(self, SelectionMode::Rcs | SelectionMode::SampleCats)
    }

    fn operation(self) -> Option<Operation> {
        match self {
            SelectionMode::InsOnly => Some(Operation::Insert),
            SelectionMode::DelOnly => Some(Operation::Delete),
            SelectionMode::SubsOnly => Some(Operation::Substitute),
            _ => None,
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown selection mode `{s}`")))
    }
}

/// Per-question categories for the non-learned modes.
pub fn select_without_selector(
    mode: SelectionMode,
    mask: &ActionMask,
    k: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Category>> {
    let valid: Vec<Category> = mask.valid_categories().collect();
    Ok(match mode {
        SelectionMode::AllCats => valid,
        SelectionMode::RandomCats => valid.choose_multiple(rng, k).copied().collect(),
        m if m.operation().is_some() => valid
            .into_iter()
            .filter(|c| Some(c.operation()) == m.operation())
            .collect(),
        m => {
            return Err(Error::Contract(format!(
                "mode {m} needs a selector or a completion file"
            )))
        }
    })
}

/// Draws up to `k` distinct valid categories, each from the Boltzmann
/// distribution over the Q-values of the categories not yet drawn.
pub fn sample_categories(
    q: &[f64; crate::taxonomy::NUM_CATEGORIES],
    mask: &ActionMask,
    k: usize,
    tau: f64,
    rng: &mut SeededRng,
) -> Result<Vec<Category>> {
    let mut remaining = *mask;
    let mut out = Vec::new();
    while out.len() < k && remaining.count() > 0 {
        let c = rcs::sample_action(q, &remaining, tau, rng)?;
        remaining.set(c, false);
        out.push(c);
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct CompletionRecord {
    conv: String,
    turn: usize,
    text: String,
}

/// Reads one rewrite per train turn. Completions carry no category and are
/// recorded under `retain` with `completion` provenance.
pub fn read_completions(path: &Path, questions: &[AnnotatedQuestion]) -> Result<Vec<Reformulation>> {
    let records: Vec<CompletionRecord> = crate::kg::read_jsonl(path)?;
    let mut by_turn: BTreeMap<(String, usize), String> = BTreeMap::new();
    for r in records {
        let key = (r.conv, r.turn);
        if by_turn.contains_key(&key) {
            return Err(Error::Validation(format!(
                "{}: duplicate completion for {}#{}",
                path.display(),
                key.0,
                key.1
            )));
        }
        by_turn.insert(key, r.text);
    }
    let mut out = Vec::with_capacity(questions.len());
    for aq in questions {
        let text = by_turn
            .remove(&(aq.conversation_id.clone(), aq.turn_index))
            .ok_or_else(|| {
                Error::Validation(format!(
                    "{}: no completion for train turn {}#{}",
                    path.display(),
                    aq.conversation_id,
                    aq.turn_index
                ))
            })?;
        out.push(Reformulation {
            conversation_id: aq.conversation_id.clone(),
            turn_index: aq.turn_index,
            category: Category::Retain,
            tokens: text::tokenize(&text),
            provenance: Provenance::Completion,
        });
    }
    if let Some(((conv, turn), _)) = by_turn.into_iter().next() {
        return Err(Error::Validation(format!(
            "{}: completion for {conv}#{turn} matches no train turn",
            path.display()
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Manifest

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    Skipped,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    pub sha256: String,
    pub bytes: usize,
    /// Written by a run that later failed.
    pub partial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub mode: SelectionMode,
    pub seed: u64,
    pub config: PipelineConfig,
    pub versions: BTreeMap<String, String>,
    pub stages: Vec<StageRecord>,
    pub artifacts: BTreeMap<String, ArtifactRecord>,
    pub counts: BTreeMap<String, usize>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn component_versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("reign".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
        ("encoder".to_owned(), format!("{ENCODER_KIND}/{ENCODER_VERSION}")),
        ("qa_model".to_owned(), "overlap".to_owned()),
    ])
}

/// Times stages, records artifacts and writes the manifest once.
struct Recorder {
    out: PathBuf,
    manifest_name: String,
    manifest: RunManifest,
}

impl Recorder {
    fn new(cfg: &PipelineConfig, command: &str, mode: SelectionMode) -> Result<Self> {
        let out = cfg.paths.out_dir.clone();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        let manifest_name = if command == "e2e" || command.starts_with("ablation") {
            MANIFEST_FILE.to_owned()
        } else {
            format!("manifest.{command}.json")
        };
        Ok(Self {
            out,
            manifest_name,
            manifest: RunManifest {
                command: command.to_owned(),
                mode,
                seed: cfg.seed,
                config: cfg.clone(),
                versions: component_versions(),
                stages: Vec::new(),
                artifacts: BTreeMap::new(),
                counts: BTreeMap::new(),
                error: None,
            },
        })
    }

    fn stage<T>(&mut self, name: &'static str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let result = f(self);
        let status = if result.is_ok() {
            StageStatus::Ok
        } else {
            StageStatus::Failed
        };
        self.manifest.stages.push(StageRecord {
            name: name.to_owned(),
            status,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        result.map_err(|e| e.in_stage(name))
    }

    fn skip(&mut self, name: &str) {
        self.manifest.stages.push(StageRecord {
            name: name.to_owned(),
            status: StageStatus::Skipped,
            wall_ms: 0.0,
        });
    }

    fn write(&mut self, rel: &str, body: &str) -> Result<PathBuf> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.manifest.artifacts.insert(
            rel.to_owned(),
            ArtifactRecord {
                sha256: sha256_hex(body.as_bytes()),
                bytes: body.len(),
                partial: false,
            },
        );
        Ok(path)
    }

    fn count(&mut self, name: &str, n: usize) {
        self.manifest.counts.insert(name.to_owned(), n);
    }

    /// Writes the manifest; on failure every artifact is flagged partial
    /// and the original error is returned.
    fn finish<T>(mut self, result: Result<T>) -> Result<(T, RunManifest)> {
        if let Err(e) = &result {
            self.manifest.error = Some(e.to_string());
            self.manifest.artifacts.values_mut().for_each(|a| a.partial = true);
        }
        let body = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        let path = self.out.join(&self.manifest_name);
        let written = fs::write(&path, body).map_err(|e| Error::io(&path, e));
        let value = result?;
        written?;
        Ok((value, self.manifest))
    }
}

// ---------------------------------------------------------------------------
// Loaded inputs

/// Stage 1 output: the KG, the three benchmark splits, and the annotated
/// train and dev questions.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub kg: Arc<KnowledgeGraph>,
    pub train: Vec<Conversation>,
    pub dev: Vec<Conversation>,
    pub test: Vec<Conversation>,
    pub train_questions: Vec<AnnotatedQuestion>,
    pub dev_questions: Vec<AnnotatedQuestion>,
}

impl Inputs {
    pub fn load(cfg: &PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let p = &cfg.paths;
        let kg = Arc::new(KnowledgeGraph::load(&p.kg_items, &p.kg_facts)?);
        let train = corpus::load_benchmark(&p.train)?;
        let dev = corpus::load_benchmark(&p.dev)?;
        let test = corpus::load_benchmark(&p.test)?;
        let train_questions = corpus::annotate_all(&kg, &train)?;
        let dev_questions = corpus::annotate_all(&kg, &dev)?;
        Ok(Self {
            kg,
            train,
            dev,
            test,
            train_questions,
            dev_questions,
        })
    }

    pub fn train_pairs(&self) -> Vec<QaPair> {
        self.train_questions.iter().map(QaPair::from_annotated).collect()
    }

    pub fn test_has_paraphrases(&self) -> bool {
        self.test
            .iter()
            .flat_map(|c| &c.turns)
            .any(|t| !t.paraphrases.is_empty())
    }
}

fn generator<'k>(cfg: &PipelineConfig, kg: &'k KnowledgeGraph) -> Result<Box<dyn Generator + 'k>> {
    let rule = RuleGenerator::new(kg);
    Ok(match cfg.generator.mode {
        GeneratorMode::Rule => Box::new(rule),
        GeneratorMode::RuleNoisy => Box::new(NoisyGenerator::new(rule, kg, cfg.generator.noise_rate)?),
    })
}

fn train_qa_model(cfg: &PipelineConfig, kg: &Arc<KnowledgeGraph>, pairs: &[QaPair]) -> Result<OverlapQaModel> {
    let mut model = OverlapQaModel::with_smoothing(kg.clone(), cfg.qa.smoothing);
    model.train(pairs)?;
    Ok(model)
}

/// Trains the selector on dev questions with rewards from `qa`.
pub fn train_selector<Q: ConvQa + ?Sized>(cfg: &PipelineConfig, inputs: &Inputs, qa: &Q) -> Result<Selector> {
    let dqn = cfg.effective_dqn();
    let encoder = HashedBowEncoder::new(dqn.d)?;
    let gen = generator(cfg, &inputs.kg)?;
    let (net, _) = train_rcs(
        &inputs.dev_questions,
        &inputs.kg,
        qa,
        gen.as_ref(),
        &encoder,
        cfg.reward,
        &dqn,
    )?;
    Selector::new(net, dqn)
}

/// Stage 4: selects categories per train question and generates one
/// reformulation per selected category. Every selected category is
/// checked against the question's mask.
pub fn generate_reformulations(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    mode: SelectionMode,
    selector: Option<&Selector>,
) -> Result<Vec<Reformulation>> {
    if mode == SelectionMode::CompletionFile {
        let path = cfg
            .paths
            .completion_file
            .as_deref()
            .ok_or_else(|| Error::Validation("completion_file mode needs paths.completion_file".into()))?;
        return read_completions(path, &inputs.train_questions);
    }
    let kg = inputs.kg.as_ref();
    let gen = generator(cfg, kg)?;
    let mut rng = stage_rng(cfg.seed, STREAM_SELECT);
    let mut out = Vec::new();
    for aq in &inputs.train_questions {
        let mask = valid_actions(aq, kg);
        let categories = match (mode, selector) {
            (SelectionMode::Rcs, Some(sel)) => sel.top_k(aq, &mask, cfg.k)?,
            (SelectionMode::SampleCats, Some(sel)) => {
                let q = sel
                    .net
                    .q_values(&rcs::Encoder::encode_annotated(&sel.encoder, aq), &mask)?;
                sample_categories(&q, &mask, cfg.k, cfg.dqn.tau, &mut rng)?
            }
            (m, None) if m.needs_selector() => {
                return Err(Error::Contract(format!("mode {m} needs a trained selector")));
            }
            (m, _) => select_without_selector(m, &mask, cfg.k, &mut rng)?,
        };
        for category in categories {
            if !mask.is_valid(category) {
                return Err(Error::Contract(format!(
                    "selected {category} is not valid for {}#{}",
                    aq.conversation_id, aq.turn_index
                )));
            }
            let reform = gen.generate(aq, category, &mut rng).ok_or_else(|| {
                Error::Contract(format!(
                    "generator produced nothing for valid {category} on {}#{}: `{}`",
                    aq.conversation_id,
                    aq.turn_index,
                    aq.text()
                ))
            })?;
            out.push(reform);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Runs

/// Knobs a run takes besides the config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub mode: SelectionMode,
    /// Use this selector instead of training one on dev.
    pub rcs_checkpoint: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct E2eOutcome {
    pub orig: MetricsReport,
    pub robust: MetricsReport,
    pub manifest: RunManifest,
    pub n_reformulations: usize,
    pub n_augmented_pairs: usize,
}

struct Trained {
    reformulations: Vec<Reformulation>,
    augmented: usize,
    qa_orig: OverlapQaModel,
    qa_robust: OverlapQaModel,
}

/// Stages 2 to 5, shared by `e2e`, ablations and `augment`.
fn train_stages(cfg: &PipelineConfig, opts: &RunOptions, inputs: &Inputs, rec: &mut Recorder) -> Result<Trained> {
    let pairs = inputs.train_pairs();
    let qa_orig = rec.stage("train_qa", |rec| {
        let m = train_qa_model(cfg, &inputs.kg, &pairs)?;
        rec.write(QA_ORIG_FILE, &m.to_json())?;
        Ok(m)
    })?;
    let selector = if !opts.mode.needs_selector() {
        rec.skip("train_rcs");
        None
    } else if let Some(path) = &opts.rcs_checkpoint {
        rec.skip("train_rcs");
        Some(Selector::load(path).map_err(|e| e.in_stage("load_rcs"))?)
    } else {
        Some(rec.stage("train_rcs", |rec| {
            let sel = train_selector(cfg, inputs, &qa_orig)?;
            rec.write(RCS_FILE, &sel.to_json())?;
            Ok(sel)
        })?)
    };
    let reformulations = rec.stage("reformulate", |rec| {
        let r = generate_reformulations(cfg, inputs, opts.mode, selector.as_ref())?;
        rec.write(REFORMULATIONS_FILE, &reformulator::reformulations_to_jsonl(&r))?;
        rec.count("reformulations", r.len());
        Ok(r)
    })?;
    let (qa_robust, augmented) = rec.stage("train_robust", |rec| {
        let aug = augment_training_set(&pairs, &reformulations)?;
        rec.count("train_pairs", pairs.len());
        rec.count("augmented_pairs", aug.len());
        let m = train_qa_model(cfg, &inputs.kg, &aug)?;
        rec.write(QA_ROBUST_FILE, &m.to_json())?;
        Ok((m, aug.len()))
    })?;
    Ok(Trained {
        reformulations,
        augmented,
        qa_orig,
        qa_robust,
    })
}

fn load_inputs(cfg: &PipelineConfig, rec: &mut Recorder) -> Result<Inputs> {
    rec.stage("load", |rec| {
        let inputs = Inputs::load(cfg)?;
        rec.count("train_questions", inputs.train_questions.len());
        rec.count("dev_questions", inputs.dev_questions.len());
        Ok(inputs)
    })
}

/// The full pipeline. With `opts.rcs_checkpoint` set, dev rewards are
/// never computed.
pub fn run_e2e_with(cfg: &PipelineConfig, opts: &RunOptions) -> Result<E2eOutcome> {
    let command = if opts.mode == SelectionMode::Rcs {
        "e2e".to_owned()
    } else {
        format!("ablation_{}", opts.mode)
    };
    let mut rec = Recorder::new(cfg, &command, opts.mode)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        let trained = train_stages(cfg, opts, &inputs, &mut rec)?;
        let paraphrases = inputs.test_has_paraphrases();
        let (orig, robust) = rec.stage("evaluate", |_| {
            Ok((
                evaluate(&trained.qa_orig, &inputs.kg, &inputs.test, paraphrases)?,
                evaluate(&trained.qa_robust, &inputs.kg, &inputs.test, paraphrases)?,
            ))
        })?;
        rec.stage("report", |rec| {
            rec.write(&format!("orig/{REPORT_FILE}"), &orig.to_json())?;
            rec.write(&format!("robust/{REPORT_FILE}"), &robust.to_json())?;
            Ok(())
        })?;
        Ok((orig, robust, trained.reformulations.len(), trained.augmented))
    })();
    let ((orig, robust, n_reformulations, n_augmented_pairs), manifest) = rec.finish(result)?;
    Ok(E2eOutcome {
        orig,
        robust,
        manifest,
        n_reformulations,
        n_augmented_pairs,
    })
}

pub fn run_e2e(cfg: &PipelineConfig) -> Result<E2eOutcome> {
    run_e2e_with(cfg, &RunOptions::default())
}

/// Runs the pipeline with stage 4 replaced by `mode` and returns the
/// report of the retrained model.
pub fn run_ablation(cfg: &PipelineConfig, mode: SelectionMode) -> Result<MetricsReport> {
    Ok(run_e2e_with(
        cfg,
        &RunOptions {
            mode,
            rcs_checkpoint: None,
        },
    )?
    .robust)
}

/// Trains QA_orig and writes `qa_orig.json`.
pub fn run_train_qa(cfg: &PipelineConfig) -> Result<RunManifest> {
    let mut rec = Recorder::new(cfg, "train_qa", SelectionMode::Rcs)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        rec.stage("train_qa", |rec| {
            let m = train_qa_model(cfg, &inputs.kg, &inputs.train_pairs())?;
            rec.write(QA_ORIG_FILE, &m.to_json())?;
            Ok(())
        })
    })();
    Ok(rec.finish(result)?.1)
}

/// Trains QA_orig, then the selector on dev; writes both.
pub fn run_train_rcs(cfg: &PipelineConfig) -> Result<(Selector, RunManifest)> {
    let mut rec = Recorder::new(cfg, "train_rcs", SelectionMode::Rcs)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        let qa = rec.stage("train_qa", |rec| {
            let m = train_qa_model(cfg, &inputs.kg, &inputs.train_pairs())?;
            rec.write(QA_ORIG_FILE, &m.to_json())?;
            Ok(m)
        })?;
        rec.stage("train_rcs", |rec| {
            let sel = train_selector(cfg, &inputs, &qa)?;
            rec.write(RCS_FILE, &sel.to_json())?;
            Ok(sel)
        })
    })();
    rec.finish(result)
}

/// Stages 1 to 5 without evaluation. A selector-based mode with no
/// override reuses `rcs.ckpt.json` from the output directory when present.
pub fn run_augment(cfg: &PipelineConfig, opts: &RunOptions) -> Result<RunManifest> {
    let mut opts = opts.clone();
    let existing = cfg.paths.out_dir.join(RCS_FILE);
    if opts.rcs_checkpoint.is_none() && opts.mode.needs_selector() && existing.is_file() {
        opts.rcs_checkpoint = Some(existing);
    }
    let mut rec = Recorder::new(cfg, "augment", opts.mode)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        train_stages(cfg, &opts, &inputs, &mut rec).map(|_| ())
    })();
    Ok(rec.finish(result)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelChoice {
    Orig,
    Robust,
}

impl ModelChoice {
    pub fn file(self) -> &'static str {
        match self {
            ModelChoice::Orig => QA_ORIG_FILE,
            ModelChoice::Robust => QA_ROBUST_FILE,
        }
    }

    pub fn dir(self) -> &'static str {
        match self {
            ModelChoice::Orig => "orig",
            ModelChoice::Robust => "robust",
        }
    }
}

/// Evaluates a saved model from the output directory on the test split and
/// writes `<orig|robust>/report.json`.
pub fn run_evaluate(cfg: &PipelineConfig, model: ModelChoice, paraphrases: bool) -> Result<MetricsReport> {
    let mut rec = Recorder::new(cfg, &format!("evaluate_{}", model.dir()), SelectionMode::Rcs)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        let report = rec.stage("evaluate", |_| {
            let path = cfg.paths.out_dir.join(model.file());
            let qa = OverlapQaModel::load(inputs.kg.clone(), &path)?;
            evaluate(&qa, &inputs.kg, &inputs.test, paraphrases)
        })?;
        rec.stage("report", |rec| {
            rec.write(&format!("{}/{REPORT_FILE}", model.dir()), &report.to_json())?;
            Ok(())
        })?;
        Ok(report)
    })();
    Ok(rec.finish(result)?.0)
}

/// Writes `distant_pairs.jsonl` from the dev questions; returns its path.
pub fn emit_distant_pairs(cfg: &PipelineConfig, cap: usize) -> Result<PathBuf> {
    let mut rec = Recorder::new(cfg, "distant_pairs", SelectionMode::Rcs)?;
    let result = (|| {
        let inputs = load_inputs(cfg, &mut rec)?;
        rec.stage("distant_pairs", |rec| {
            let gen = generator(cfg, &inputs.kg)?;
            let mut rng = stage_rng(cfg.seed, STREAM_DISTANT);
            let pairs = generate_distant_pairs(&inputs.kg, &inputs.dev_questions, gen.as_ref(), &mut rng, cap)?;
            let path = cfg.paths.out_dir.join(DISTANT_PAIRS_FILE);
            write_distant_pairs(&path, &pairs)?;
            let body = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            rec.manifest.artifacts.insert(
                DISTANT_PAIRS_FILE.to_owned(),
                ArtifactRecord {
                    sha256: sha256_hex(&body),
                    bytes: body.len(),
                    partial: false,
                },
            );
            rec.count("distant_pairs", pairs.len());
            Ok(path)
        })
    })();
    Ok(rec.finish(result)?.0)
}
