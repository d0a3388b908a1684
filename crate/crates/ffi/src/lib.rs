//! C ABI over the `ldts` crate.
//!
//! Every entry point returns an [`LdtsStatus`]. On failure a human-readable
//! message is available from [`ldts_last_error_message`] on the same thread.
//! Datasets and models are opaque heap handles owned by the caller and
//! released with their matching `_free` function. Panics never cross the
//! boundary; they are reported as `LDTS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use ldts::data::{generate_synthetic, load_dataset, save_dataset, Dataset, Split, SynthConfig};
use ldts::difficulty::{loss_decrease, to_probability, LossRecord, SelectionDistribution};
use ldts::nn::ModelParams;
use ldts::pacing::{pacing_fraction, sample_count, PacingConfig, PacingKind};
use ldts::sampler::{sample_without_replacement, RngState};
use ldts::trainer::{evaluate, train, PreparedData, Strategy, TrainConfig};
use ldts::LdtsError;

/// Result code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdtsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or not valid UTF-8.
    InvalidArgument = 2,
    /// Hyperparameters were rejected.
    Config = 3,
    /// Array dimensions did not agree.
    Shape = 4,
    /// A non-finite value appeared in the input or the computation.
    Numeric = 5,
    /// The dataset is inconsistent or has an empty split.
    Data = 6,
    /// A file could not be read or written.
    Io = 7,
    /// A file was readable but malformed.
    Format = 8,
    /// Training produced a non-finite loss.
    Diverged = 9,
    /// An internal panic was caught.
    Panic = 10,
}

/// Values accepted wherever a pacing kind is expected.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdtsPacingKind {
    Linear = 0,
    Root = 1,
    Geometric = 2,
}

/// Values accepted wherever a training strategy is expected.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdtsStrategy {
    Plain = 0,
    AbsoluteLoss = 1,
    LossDecrease = 2,
}

/// Values accepted wherever a data split is expected.
#[repr(u32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdtsSplit {
    Train = 0,
    Val = 1,
    Test = 2,
}

/// Synthetic graph parameters. Fill with `ldts_synth_config_default` first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdtsSynthConfig {
    pub n_target: usize,
    pub class_count: usize,
    pub feature_dim: usize,
    pub cluster_separation: f64,
    pub noise_fraction: f64,
    pub aux_types: usize,
    /// 0 picks a size from `n_target` and `class_count`.
    pub aux_nodes_per_type: usize,
    pub edges_per_node: usize,
    pub homophily: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
    pub seed: u64,
}

/// Training hyperparameters. Fill with `ldts_train_config_default` first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdtsTrainConfig {
    /// One of `LdtsStrategy`.
    pub strategy: u32,
    /// One of `LdtsPacingKind`.
    pub pacing_kind: u32,
    pub lambda0: f64,
    pub saturation_epoch: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

/// What a finished run reports back.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LdtsTrainSummary {
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_accuracy: f64,
    pub test_accuracy_at_best: f64,
}

/// Opaque dataset handle.
pub struct LdtsDataset {
    dataset: Dataset,
}

/// Opaque model handle.
pub struct LdtsModel {
    params: ModelParams,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: LdtsStatus,
    message: String,
}

impl Failure {
    fn new(status: LdtsStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(name: &str) -> Self {
        Failure::new(LdtsStatus::NullPointer, format!("{name} is null"))
    }
}

impl From<LdtsError> for Failure {
    fn from(e: LdtsError) -> Self {
        let status = match &e {
            LdtsError::Config(_) => LdtsStatus::Config,
            LdtsError::Argument(_) => LdtsStatus::InvalidArgument,
            LdtsError::Shape(_) => LdtsStatus::Shape,
            LdtsError::Numeric(_) => LdtsStatus::Numeric,
            LdtsError::Data(_) | LdtsError::EmptyDataset => LdtsStatus::Data,
            LdtsError::Io { .. } => LdtsStatus::Io,
            LdtsError::Format { .. } => LdtsStatus::Format,
            LdtsError::Diverged { .. } => LdtsStatus::Diverged,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LdtsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LdtsStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("internal panic: {detail}"));
            LdtsStatus::Panic
        }
    }
}

/// Borrow `len` elements, treating a null pointer as empty only when `len` is 0.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(Failure::null(name))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        Ok(&mut [])
    } else if ptr.is_null() {
        Err(Failure::null(name))
    } else {
        Ok(std::slice::from_raw_parts_mut(ptr, len))
    }
}

unsafe fn out_ref<'a, T>(ptr: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| Failure::null(name))
}

unsafe fn in_ref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| Failure::null(name))
}

unsafe fn path_arg(ptr: *const c_char, name: &str) -> Result<PathBuf, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| {
            Failure::new(
                LdtsStatus::InvalidArgument,
                format!("{name} is not valid UTF-8"),
            )
        })
}

fn pacing_kind(raw: u32) -> Result<PacingKind, Failure> {
    match raw {
        0 => Ok(PacingKind::Linear),
        1 => Ok(PacingKind::Root),
        2 => Ok(PacingKind::Geometric),
        _ => Err(Failure::new(
            LdtsStatus::InvalidArgument,
            format!("unknown pacing kind {raw}"),
        )),
    }
}

fn strategy(raw: u32) -> Result<Strategy, Failure> {
    match raw {
        0 => Ok(Strategy::Plain),
        1 => Ok(Strategy::AbsoluteLossCurriculum),
        2 => Ok(Strategy::LossDecreaseCurriculum),
        _ => Err(Failure::new(
            LdtsStatus::InvalidArgument,
            format!("unknown strategy {raw}"),
        )),
    }
}

fn split(raw: u32) -> Result<Split, Failure> {
    match raw {
        0 => Ok(Split::Train),
        1 => Ok(Split::Val),
        2 => Ok(Split::Test),
        _ => Err(Failure::new(
            LdtsStatus::InvalidArgument,
            format!("unknown split {raw}"),
        )),
    }
}

fn strategy_code(s: Strategy) -> u32 {
    match s {
        Strategy::Plain => LdtsStrategy::Plain as u32,
        Strategy::AbsoluteLossCurriculum => LdtsStrategy::AbsoluteLoss as u32,
        Strategy::LossDecreaseCurriculum => LdtsStrategy::LossDecrease as u32,
    }
}

fn kind_code(k: PacingKind) -> u32 {
    match k {
        PacingKind::Linear => LdtsPacingKind::Linear as u32,
        PacingKind::Root => LdtsPacingKind::Root as u32,
        PacingKind::Geometric => LdtsPacingKind::Geometric as u32,
    }
}

impl From<&SynthConfig> for LdtsSynthConfig {
    fn from(c: &SynthConfig) -> Self {
        LdtsSynthConfig {
            n_target: c.n_target,
            class_count: c.class_count,
            feature_dim: c.feature_dim,
            cluster_separation: c.cluster_separation,
            noise_fraction: c.noise_fraction,
            aux_types: c.aux_types,
            aux_nodes_per_type: c.aux_nodes_per_type,
            edges_per_node: c.edges_per_node,
            homophily: c.homophily,
            train_fraction: c.train_fraction,
            val_fraction: c.val_fraction,
            seed: c.seed,
        }
    }
}

impl From<&LdtsSynthConfig> for SynthConfig {
    fn from(c: &LdtsSynthConfig) -> Self {
        SynthConfig {
            n_target: c.n_target,
            class_count: c.class_count,
            feature_dim: c.feature_dim,
            cluster_separation: c.cluster_separation,
            noise_fraction: c.noise_fraction,
            aux_types: c.aux_types,
            aux_nodes_per_type: c.aux_nodes_per_type,
            edges_per_node: c.edges_per_node,
            homophily: c.homophily,
            train_fraction: c.train_fraction,
            val_fraction: c.val_fraction,
            seed: c.seed,
        }
    }
}

fn train_config(c: &LdtsTrainConfig) -> Result<TrainConfig, Failure> {
    Ok(TrainConfig {
        strategy: strategy(c.strategy)?,
        pacing: PacingConfig::new(pacing_kind(c.pacing_kind)?, c.lambda0, c.saturation_epoch)?,
        lr: c.lr,
        max_epochs: c.max_epochs,
        patience: c.patience,
        hidden_dim: c.hidden_dim,
        seed: c.seed,
    })
}

/// Message for the last failed call on this thread, or null if none failed yet.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ldts_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ldts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Fraction of the training set admitted at `epoch`.
///
/// # Safety
/// `out` must be null or point to writable storage for one `double`.
#[no_mangle]
pub unsafe extern "C" fn ldts_pacing_fraction(
    kind: u32,
    lambda0: f64,
    saturation_epoch: usize,
    epoch: usize,
    out: *mut f64,
) -> LdtsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cfg = PacingConfig::new(pacing_kind(kind)?, lambda0, saturation_epoch)?;
        *out = pacing_fraction(&cfg, epoch);
        Ok(())
    })
}

/// Number of nodes drawn from `n` at the given pacing fraction.
///
/// # Safety
/// `out` must be null or point to writable storage for one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn ldts_sample_count(n: usize, fraction: f64, out: *mut usize) -> LdtsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = sample_count(n, fraction)?;
        Ok(())
    })
}

/// Per-node loss decrease `previous[i] - current[i]`.
///
/// # Safety
/// `previous` and `current` must be readable for `n` doubles and `out`
/// writable for `n` doubles. `out` may alias neither input.
#[no_mangle]
pub unsafe extern "C" fn ldts_loss_decrease(
    previous: *const f64,
    current: *const f64,
    n: usize,
    out: *mut f64,
) -> LdtsStatus {
    guard(|| {
        let previous = slice(previous, n, "previous")?;
        let current = slice(current, n, "current")?;
        let out = slice_mut(out, n, "out")?;
        let record = LossRecord::new(previous.to_vec(), current.to_vec(), 1)?;
        out.copy_from_slice(&loss_decrease(&record));
        Ok(())
    })
}

/// Softmax of `values` into `out`.
///
/// # Safety
/// `values` must be readable and `out` writable for `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ldts_softmax(values: *const f64, n: usize, out: *mut f64) -> LdtsStatus {
    guard(|| {
        let values = slice(values, n, "values")?;
        let out = slice_mut(out, n, "out")?;
        out.copy_from_slice(to_probability(values)?.probabilities());
        Ok(())
    })
}

/// Draw `k` distinct indices from `probabilities` and write them in ascending order.
///
/// The draw is a deterministic function of `(probabilities, k, seed, stream)`.
///
/// # Safety
/// `probabilities` must be readable for `n` doubles and `out_indices`
/// writable for `k` elements.
#[no_mangle]
pub unsafe extern "C" fn ldts_sample_without_replacement(
    probabilities: *const f64,
    n: usize,
    k: usize,
    seed: u64,
    stream: u64,
    out_indices: *mut usize,
) -> LdtsStatus {
    guard(|| {
        let p = slice(probabilities, n, "probabilities")?;
        let out = slice_mut(out_indices, k, "out_indices")?;
        let dist = SelectionDistribution::from_probabilities(p.to_vec())?;
        let mut rng = RngState::for_stream(seed, stream);
        let sample = sample_without_replacement(&dist, k, &mut rng)?;
        out.copy_from_slice(sample.indices());
        Ok(())
    })
}

/// Fill `out` with the default generator parameters.
///
/// # Safety
/// `out` must be null or point to a writable `LdtsSynthConfig`.
#[no_mangle]
pub unsafe extern "C" fn ldts_synth_config_default(out: *mut LdtsSynthConfig) -> LdtsStatus {
    guard(|| {
        *out_ref(out, "out")? = (&SynthConfig::default()).into();
        Ok(())
    })
}

/// Generate a synthetic dataset. Release it with `ldts_dataset_free`.
///
/// # Safety
/// `config` must be null or point to a valid `LdtsSynthConfig`; `out` must be
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_dataset_generate(
    config: *const LdtsSynthConfig,
    out: *mut *mut LdtsDataset,
) -> LdtsStatus {
    guard(|| {
        let cfg = SynthConfig::from(in_ref(config, "config")?);
        let out = out_ref(out, "out")?;
        let dataset = generate_synthetic(&cfg)?;
        *out = Box::into_raw(Box::new(LdtsDataset { dataset }));
        Ok(())
    })
}

/// Load a dataset directory. Release it with `ldts_dataset_free`.
///
/// # Safety
/// `dir` must be null or a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_dataset_load(
    dir: *const c_char,
    out: *mut *mut LdtsDataset,
) -> LdtsStatus {
    guard(|| {
        let dir = path_arg(dir, "dir")?;
        let out = out_ref(out, "out")?;
        let dataset = load_dataset(&dir)?;
        *out = Box::into_raw(Box::new(LdtsDataset { dataset }));
        Ok(())
    })
}

/// Write a dataset directory, creating it if needed.
///
/// # Safety
/// `dataset` must be null or a live handle; `dir` must be null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ldts_dataset_save(
    dataset: *const LdtsDataset,
    dir: *const c_char,
) -> LdtsStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        save_dataset(&ds.dataset, &path_arg(dir, "dir")?)?;
        Ok(())
    })
}

/// Node count, raw feature width and class count of a dataset. Any output may be null.
///
/// # Safety
/// `dataset` must be null or a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_dataset_shape(
    dataset: *const LdtsDataset,
    node_count: *mut usize,
    feature_dim: *mut usize,
    class_count: *mut usize,
) -> LdtsStatus {
    guard(|| {
        let ds = &in_ref(dataset, "dataset")?.dataset;
        if let Some(o) = node_count.as_mut() {
            *o = ds.node_count();
        }
        if let Some(o) = feature_dim.as_mut() {
            *o = ds.feature_dim();
        }
        if let Some(o) = class_count.as_mut() {
            *o = ds.class_count;
        }
        Ok(())
    })
}

/// Release a dataset. Null is ignored.
///
/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ldts_dataset_free(dataset: *mut LdtsDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Fill `out` with the default hyperparameters for a strategy.
///
/// # Safety
/// `out` must be null or point to a writable `LdtsTrainConfig`.
#[no_mangle]
pub unsafe extern "C" fn ldts_train_config_default(
    strategy_id: u32,
    seed: u64,
    out: *mut LdtsTrainConfig,
) -> LdtsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let c = TrainConfig::new(strategy(strategy_id)?, seed);
        *out = LdtsTrainConfig {
            strategy: strategy_code(c.strategy),
            pacing_kind: kind_code(c.pacing.kind()),
            lambda0: c.pacing.lambda0(),
            saturation_epoch: c.pacing.saturation_epoch(),
            lr: c.lr,
            max_epochs: c.max_epochs,
            patience: c.patience,
            hidden_dim: c.hidden_dim,
            seed: c.seed,
        };
        Ok(())
    })
}

/// Train a model and return the best-validation parameters.
///
/// `summary` may be null. Release the model with `ldts_model_free`.
///
/// # Safety
/// `dataset` must be a live handle, `config` a valid `LdtsTrainConfig`,
/// `out_model` writable, and `summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_train(
    dataset: *const LdtsDataset,
    config: *const LdtsTrainConfig,
    out_model: *mut *mut LdtsModel,
    summary: *mut LdtsTrainSummary,
) -> LdtsStatus {
    guard(|| {
        let ds = in_ref(dataset, "dataset")?;
        let cfg = train_config(in_ref(config, "config")?)?;
        let out_model = out_ref(out_model, "out_model")?;
        let data = PreparedData::from_dataset(&ds.dataset)?;
        let outcome = train(&cfg, &data)?;
        if let Some(s) = summary.as_mut() {
            let best = outcome.best_report();
            *s = LdtsTrainSummary {
                best_epoch: outcome.best_epoch,
                epochs_run: outcome.reports.len(),
                best_val_accuracy: best.val_accuracy,
                test_accuracy_at_best: best.test_accuracy,
            };
        }
        *out_model = Box::into_raw(Box::new(LdtsModel {
            params: outcome.params,
        }));
        Ok(())
    })
}

/// Accuracy of a model on one split of a dataset.
///
/// # Safety
/// `model` and `dataset` must be live handles; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_model_evaluate(
    model: *const LdtsModel,
    dataset: *const LdtsDataset,
    split_id: u32,
    out: *mut f64,
) -> LdtsStatus {
    guard(|| {
        let model = in_ref(model, "model")?;
        let ds = in_ref(dataset, "dataset")?;
        let which = split(split_id)?;
        let out = out_ref(out, "out")?;
        let data = PreparedData::from_dataset(&ds.dataset)?;
        *out = evaluate(&model.params, &data, which)?;
        Ok(())
    })
}

/// Write a model checkpoint.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ldts_model_save(
    model: *const LdtsModel,
    path: *const c_char,
) -> LdtsStatus {
    guard(|| {
        let model = in_ref(model, "model")?;
        model.params.save(&path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Read a model checkpoint. Release it with `ldts_model_free`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn ldts_model_load(
    path: *const c_char,
    out: *mut *mut LdtsModel,
) -> LdtsStatus {
    guard(|| {
        let path = path_arg(path, "path")?;
        let out = out_ref(out, "out")?;
        let params = ModelParams::load(&path)?;
        *out = Box::into_raw(Box::new(LdtsModel { params }));
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ldts_model_free(model: *mut LdtsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
