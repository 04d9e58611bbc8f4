//! C ABI for embedding the evidence pipeline in other languages.
//!
//! Conventions: opaque handles created by `ev_*_load`/`ev_train` and
//! released by the matching `ev_*_free`; every fallible call returns an
//! [`EvStatus`] and leaves a message for [`ev_last_error_message`] on
//! failure; strings returned through out-parameters are owned by the caller
//! and released with [`ev_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use evigraph::config::RunConfig;
use evigraph::error::Error;
use evigraph::evaluator::{Evaluator, TargetTriple};
use evigraph::gnn::{train, GnnModel, TrainConfig};
use evigraph::graph::PropertyGraph;
use evigraph::reasoner::{entails, Entailment, KnowledgeBase, Lexicon, ProofDoc};
use evigraph::text::CorpusIndex;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidInput = 5,
    Runtime = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let cstring = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> EvStatus {
    match err {
        Error::Io { .. } => EvStatus::Io,
        Error::MalformedLine { .. }
        | Error::KbParse { .. }
        | Error::ArityConflict { .. }
        | Error::NonGroundGoal { .. } => EvStatus::Parse,
        Error::DanglingEndpoint { .. }
        | Error::DuplicateNodeId { .. }
        | Error::DuplicateTriple { .. }
        | Error::FeatureDimension { .. }
        | Error::SelfLoop { .. }
        | Error::NonFiniteFeature { .. }
        | Error::InvalidNodeIndex { .. }
        | Error::UnknownNodeId { .. }
        | Error::DimensionMismatch { .. }
        | Error::ClusterCountOutOfRange { .. }
        | Error::IdenticalEndpoints { .. } => EvStatus::InvalidInput,
        Error::EmptyTrainingSet
        | Error::NonFiniteLoss { .. }
        | Error::NonFiniteScore { .. }
        | Error::Checkpoint { .. }
        | Error::AllChannelsDisabled
        | Error::Config { .. } => EvStatus::Runtime,
    }
}

fn fail(err: &Error) -> EvStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Last error message for this thread, or null when the previous call
/// succeeded. The pointer stays valid until the next failing call.
#[no_mangle]
pub extern "C" fn ev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |message| message.as_ptr())
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ev_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Release a string allocated by this library.
///
/// # Safety
/// `s` must have been returned by an `ev_*` out-parameter and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ev_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, EvStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(EvStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(&format!("{name} is not valid UTF-8"));
        EvStatus::InvalidUtf8
    })
}

fn give_string(out: *mut *mut c_char, value: String) {
    if out.is_null() {
        return;
    }
    let cstring = CString::new(value.replace('\0', " ")).unwrap_or_default();
    unsafe { *out = cstring.into_raw() };
}

// ---- property graph ---------------------------------------------------------

/// Opaque property graph handle.
pub struct EvGraph {
    inner: PropertyGraph,
}

/// Load a graph from nodes/edges TSV paths into a new handle.
///
/// # Safety
/// `nodes_path` and `edges_path` must be NUL-terminated strings; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ev_graph_load(
    nodes_path: *const c_char,
    edges_path: *const c_char,
    out: *mut *mut EvGraph,
) -> EvStatus {
    clear_error();
    if out.is_null() {
        set_error("out is null");
        return EvStatus::NullArgument;
    }
    let nodes = match utf8_arg(nodes_path, "nodes_path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let edges = match utf8_arg(edges_path, "edges_path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match PropertyGraph::load(Path::new(nodes), Path::new(edges)) {
        Ok(graph) => {
            *out = Box::into_raw(Box::new(EvGraph { inner: graph }));
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `graph` must come from `ev_graph_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ev_graph_free(graph: *mut EvGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Node count; 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ev_graph_node_count(graph: *const EvGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.node_count())
}

/// Edge count; 0 for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ev_graph_edge_count(graph: *const EvGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.edge_count())
}

// ---- model ------------------------------------------------------------------

/// Opaque trained-model handle.
pub struct EvModel {
    inner: GnnModel,
}

/// Training hyperparameters. `layers == 0` picks the graph diameter capped
/// at 4; zeros elsewhere fall back to library defaults.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EvTrainOptions {
    pub layers: u32,
    pub hidden_dim: u32,
    pub learning_rate: f64,
    pub epochs: u32,
    pub seed: u64,
}

/// Train on the graph's own edges with sampled negatives.
///
/// # Safety
/// `graph` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ev_train(
    graph: *const EvGraph,
    options: EvTrainOptions,
    out: *mut *mut EvModel,
) -> EvStatus {
    clear_error();
    let Some(graph) = graph.as_ref() else {
        set_error("graph is null");
        return EvStatus::NullArgument;
    };
    if out.is_null() {
        set_error("out is null");
        return EvStatus::NullArgument;
    }
    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        layers: if options.layers == 0 {
            graph.inner.diameter().clamp(1, 4)
        } else {
            options.layers as usize
        },
        hidden_dim: if options.hidden_dim == 0 {
            defaults.hidden_dim
        } else {
            options.hidden_dim as usize
        },
        learning_rate: if options.learning_rate > 0.0 {
            options.learning_rate
        } else {
            defaults.learning_rate
        },
        epochs: options.epochs as usize,
        seed: options.seed,
    };
    let positives: Vec<(usize, usize)> =
        graph.inner.edges().iter().map(|e| (e.src, e.dst)).collect();
    match train(&graph.inner, &positives, &[], &cfg) {
        Ok(outcome) => {
            *out = Box::into_raw(Box::new(EvModel {
                inner: outcome.model,
            }));
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `model` a live handle.
#[no_mangle]
pub unsafe extern "C" fn ev_model_save(model: *const EvModel, path: *const c_char) -> EvStatus {
    clear_error();
    let Some(model) = model.as_ref() else {
        set_error("model is null");
        return EvStatus::NullArgument;
    };
    let path = match utf8_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match model.inner.save(Path::new(path)) {
        Ok(()) => EvStatus::Ok,
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ev_model_load(path: *const c_char, out: *mut *mut EvModel) -> EvStatus {
    clear_error();
    if out.is_null() {
        set_error("out is null");
        return EvStatus::NullArgument;
    }
    let path = match utf8_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match GnnModel::load(Path::new(path)) {
        Ok(model) => {
            *out = Box::into_raw(Box::new(EvModel { inner: model }));
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `model` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ev_model_free(model: *mut EvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Link probability in (0,1) for two node ids.
///
/// # Safety
/// Handles must be live; id strings NUL-terminated; `score_out` valid.
#[no_mangle]
pub unsafe extern "C" fn ev_score_link(
    graph: *const EvGraph,
    model: *const EvModel,
    src_id: *const c_char,
    dst_id: *const c_char,
    score_out: *mut f64,
) -> EvStatus {
    clear_error();
    let (Some(graph), Some(model)) = (graph.as_ref(), model.as_ref()) else {
        set_error("graph or model is null");
        return EvStatus::NullArgument;
    };
    if score_out.is_null() {
        set_error("score_out is null");
        return EvStatus::NullArgument;
    }
    let src = match utf8_arg(src_id, "src_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let dst = match utf8_arg(dst_id, "dst_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let result = (|| -> Result<f64, Error> {
        let u = graph.inner.node_index(src)?;
        let v = graph.inner.node_index(dst)?;
        let emb = model.inner.forward(&graph.inner)?;
        model.inner.score(&emb, u, v)
    })();
    match result {
        Ok(score) => {
            *score_out = score;
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

// ---- corpus and knowledge base ------------------------------------------------

/// Opaque corpus-index handle.
pub struct EvCorpus {
    inner: CorpusIndex,
}

/// Build a corpus index from a JSONL file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ev_corpus_load(path: *const c_char, out: *mut *mut EvCorpus) -> EvStatus {
    clear_error();
    if out.is_null() {
        set_error("out is null");
        return EvStatus::NullArgument;
    }
    let path = match utf8_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match CorpusIndex::build(Path::new(path)) {
        Ok(corpus) => {
            *out = Box::into_raw(Box::new(EvCorpus { inner: corpus }));
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `corpus` must come from `ev_corpus_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ev_corpus_free(corpus: *mut EvCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Opaque knowledge-base handle.
pub struct EvKb {
    inner: KnowledgeBase,
}

/// Parse an axiom file into a knowledge base.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn ev_kb_load(path: *const c_char, out: *mut *mut EvKb) -> EvStatus {
    clear_error();
    if out.is_null() {
        set_error("out is null");
        return EvStatus::NullArgument;
    }
    let path = match utf8_arg(path, "path") {
        Ok(s) => s,
        Err(status) => return status,
    };
    match KnowledgeBase::parse_file(Path::new(path)) {
        Ok(kb) => {
            *out = Box::into_raw(Box::new(EvKb { inner: kb }));
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

/// # Safety
/// `kb` must come from `ev_kb_load` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ev_kb_free(kb: *mut EvKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Decide entailment of a ground goal like `Mortal(socrates)`. On
/// entailment, `proof_json_out` (when non-null) receives the proof document.
///
/// # Safety
/// `kb` must be live; `goal` NUL-terminated; `entailed_out` valid;
/// `proof_json_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn ev_kb_entails(
    kb: *const EvKb,
    goal: *const c_char,
    entailed_out: *mut i32,
    proof_json_out: *mut *mut c_char,
) -> EvStatus {
    clear_error();
    let Some(kb) = kb.as_ref() else {
        set_error("kb is null");
        return EvStatus::NullArgument;
    };
    if entailed_out.is_null() {
        set_error("entailed_out is null");
        return EvStatus::NullArgument;
    }
    if !proof_json_out.is_null() {
        *proof_json_out = ptr::null_mut();
    }
    let goal = match utf8_arg(goal, "goal") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let parsed = match KnowledgeBase::parse_goal(goal) {
        Ok(atom) => atom,
        Err(err) => return fail(&err),
    };
    match entails(&kb.inner, &parsed) {
        Ok(Entailment::Entailed(proof)) => {
            *entailed_out = 1;
            if !proof_json_out.is_null() {
                let doc = ProofDoc::from_proof(&kb.inner, &proof, &Lexicon::default());
                give_string(
                    proof_json_out,
                    serde_json::to_string_pretty(&doc).unwrap_or_default(),
                );
            }
            EvStatus::Ok
        }
        Ok(Entailment::NotEntailed) => {
            *entailed_out = 0;
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}

// ---- evaluation ----------------------------------------------------------------

/// Evaluate one predicted link through every available channel and return
/// the report JSON. `corpus` and `kb` may be null to skip their channels;
/// `config_toml` may be null for defaults.
///
/// # Safety
/// Handles must be live or null as documented; strings NUL-terminated;
/// `report_json_out` valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn ev_evaluate(
    graph: *const EvGraph,
    model: *const EvModel,
    corpus: *const EvCorpus,
    kb: *const EvKb,
    src_id: *const c_char,
    relation: *const c_char,
    dst_id: *const c_char,
    config_toml: *const c_char,
    report_json_out: *mut *mut c_char,
) -> EvStatus {
    clear_error();
    let (Some(graph), Some(model)) = (graph.as_ref(), model.as_ref()) else {
        set_error("graph or model is null");
        return EvStatus::NullArgument;
    };
    if report_json_out.is_null() {
        set_error("report_json_out is null");
        return EvStatus::NullArgument;
    }
    *report_json_out = ptr::null_mut();
    let src = match utf8_arg(src_id, "src_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let relation = match utf8_arg(relation, "relation") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let dst = match utf8_arg(dst_id, "dst_id") {
        Ok(s) => s,
        Err(status) => return status,
    };
    let config = if config_toml.is_null() {
        RunConfig::default()
    } else {
        let raw = match utf8_arg(config_toml, "config_toml") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match toml::from_str::<RunConfig>(raw) {
            Ok(cfg) => cfg,
            Err(e) => {
                set_error(&format!("config_toml: {e}"));
                return EvStatus::Parse;
            }
        }
    };
    let evaluator = Evaluator {
        graph: &graph.inner,
        model: &model.inner,
        corpus: corpus.as_ref().map(|c| &c.inner),
        kb: kb.as_ref().map(|k| &k.inner),
        config: &config,
    };
    let target = TargetTriple {
        src: src.to_string(),
        relation: relation.to_string(),
        dst: dst.to_string(),
    };
    match evaluator.evaluate(&target) {
        Ok(report) => {
            give_string(
                report_json_out,
                serde_json::to_string_pretty(&report).unwrap_or_default(),
            );
            EvStatus::Ok
        }
        Err(err) => fail(&err),
    }
}
