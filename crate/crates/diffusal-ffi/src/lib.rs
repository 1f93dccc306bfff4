//! C ABI for the diffusal toolkit.
//!
//! Conventions: every function returns a [`DalStatus`]; outputs go through
//! out-pointers. On any non-OK status the thread-local message from
//! [`dal_last_error_message`] describes the failure. Handles are opaque and
//! must be released with their matching `_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use diffusal::harness::{self, ExperimentConfig};
use diffusal::{
    l1_normalize_rows, largest_connected_component, load_dataset, welch_t_test, CombineMode,
    Dataset, DiffusionConfig, DiffusionMatrix, Error, FeatureMatrix, StrategyConfig, StrategyKind,
};

/// Result codes for every API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DalStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument value was rejected; see the last error message.
    InvalidArgument = 2,
    /// Reading or writing a file failed.
    Io = 3,
    /// A buffer was too small for the requested data.
    BufferTooSmall = 4,
    /// A panic or other internal failure; see the last error message.
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let sanitized = msg.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DalStatus {
    match err {
        Error::MissingFile(_) | Error::Io { .. } => DalStatus::Io,
        Error::Parse { .. } => DalStatus::InvalidArgument,
        Error::InvalidInput(_) | Error::InvalidConfig(_) | Error::IncompleteResults(_) => {
            DalStatus::InvalidArgument
        }
    }
}

fn fail(err: Error) -> DalStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

/// Runs `body` with panics converted to `DalStatus::Internal`.
fn guarded(body: impl FnOnce() -> DalStatus) -> DalStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(&msg);
            DalStatus::Internal
        }
    }
}

unsafe fn cstr_arg(ptr: *const c_char, name: &str) -> Result<String, DalStatus> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return Err(DalStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(s.to_string()),
        Err(_) => {
            set_error(&format!("{name} is not valid UTF-8"));
            Err(DalStatus::InvalidArgument)
        }
    }
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread. Never null.
#[no_mangle]
pub extern "C" fn dal_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Static version string of the underlying library.
#[no_mangle]
pub extern "C" fn dal_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// A dataset restricted to its largest connected component with
/// L1-normalized features, ready for diffusion.
pub struct DalDataset {
    inner: Dataset,
}

/// A diffusion operator with its propagated features and importance scores.
pub struct DalDiffusion {
    matrix: DiffusionMatrix,
    propagated: FeatureMatrix,
    importance: Vec<f64>,
}

fn load_prepared(dir: &str) -> Result<Dataset, Error> {
    let raw = load_dataset(std::path::Path::new(dir))?;
    let mut ds = largest_connected_component(&raw)?;
    ds.features = l1_normalize_rows(&ds.features)?;
    Ok(ds)
}

/// Loads a dataset directory (graph.edges, features.csv, labels.csv,
/// meta.json), keeps the largest connected component, and L1-normalizes the
/// features. On success `*out` owns the new handle.
///
/// # Safety
/// `dir` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_load(
    dir: *const c_char,
    out: *mut *mut DalDataset,
) -> DalStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return DalStatus::NullArgument;
        }
        let dir = match cstr_arg(dir, "dir") {
            Ok(s) => s,
            Err(status) => return status,
        };
        match load_prepared(&dir) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DalDataset { inner }));
                DalStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a dataset handle. Null is a no-op.
///
/// # Safety
/// `ds` must be a handle from [`dal_dataset_load`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_free(ds: *mut DalDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

unsafe fn dataset_stat(
    ds: *const DalDataset,
    out: *mut usize,
    read: impl Fn(&Dataset) -> usize,
) -> DalStatus {
    guarded(|| {
        if ds.is_null() || out.is_null() {
            set_error("ds and out must be non-null");
            return DalStatus::NullArgument;
        }
        *out = read(&(*ds).inner);
        DalStatus::Ok
    })
}

/// Number of nodes in the prepared dataset.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_num_nodes(
    ds: *const DalDataset,
    out: *mut usize,
) -> DalStatus {
    dataset_stat(ds, out, |d| d.num_nodes())
}

/// Number of undirected edges in the prepared dataset.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_num_edges(
    ds: *const DalDataset,
    out: *mut usize,
) -> DalStatus {
    dataset_stat(ds, out, |d| d.graph.num_edges())
}

/// Number of label classes.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_num_classes(
    ds: *const DalDataset,
    out: *mut usize,
) -> DalStatus {
    dataset_stat(ds, out, |d| d.num_classes())
}

/// Width of the feature matrix.
///
/// # Safety
/// `ds` must be a live dataset handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_dataset_feature_dim(
    ds: *const DalDataset,
    out: *mut usize,
) -> DalStatus {
    dataset_stat(ds, out, |d| d.feature_dim())
}

/// Builds the diffusion operator for a dataset: the sum of push-approximated
/// personalized-PageRank matrices over `alphas` (or the squared normalized
/// adjacency when `two_hop` is set), plus propagated features and
/// importance scores. On success `*out` owns the new handle.
///
/// # Safety
/// `ds` must be a live dataset handle; `alphas` must point to `num_alphas`
/// doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_diffusion_compute(
    ds: *const DalDataset,
    alphas: *const f64,
    num_alphas: usize,
    epsilon: f64,
    two_hop: bool,
    out: *mut *mut DalDiffusion,
) -> DalStatus {
    guarded(|| {
        if ds.is_null() || out.is_null() || (alphas.is_null() && num_alphas > 0) {
            set_error("ds, alphas, and out must be non-null");
            return DalStatus::NullArgument;
        }
        let dataset = &(*ds).inner;
        let alphas = std::slice::from_raw_parts(alphas, num_alphas).to_vec();
        let build = || -> Result<DalDiffusion, Error> {
            let matrix = if two_hop {
                diffusal::two_hop_matrix(&dataset.graph)?
            } else {
                let cfg = DiffusionConfig::new(alphas, epsilon)?;
                diffusal::diffusion_matrix(&dataset.graph, &cfg)?
            };
            let propagated = diffusal::propagate_features(&matrix, &dataset.features)?;
            let importance = if two_hop {
                let mut sums = matrix.col_sums();
                let total: f64 = sums.iter().sum();
                if total > 0.0 {
                    for s in &mut sums {
                        *s /= total;
                    }
                }
                sums
            } else {
                diffusal::importance_scores(&matrix)
            };
            Ok(DalDiffusion {
                matrix,
                propagated,
                importance,
            })
        };
        match build() {
            Ok(diff) => {
                *out = Box::into_raw(Box::new(diff));
                DalStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a diffusion handle. Null is a no-op.
///
/// # Safety
/// `diff` must be a handle from [`dal_diffusion_compute`] not freed before.
#[no_mangle]
pub unsafe extern "C" fn dal_diffusion_free(diff: *mut DalDiffusion) {
    if !diff.is_null() {
        drop(Box::from_raw(diff));
    }
}

/// Number of stored nonzeros in the diffusion matrix.
///
/// # Safety
/// `diff` must be a live diffusion handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_diffusion_nnz(
    diff: *const DalDiffusion,
    out: *mut usize,
) -> DalStatus {
    guarded(|| {
        if diff.is_null() || out.is_null() {
            set_error("diff and out must be non-null");
            return DalStatus::NullArgument;
        }
        *out = (*diff).matrix.nnz();
        DalStatus::Ok
    })
}

/// Copies the per-node importance scores (normalized over all nodes) into
/// `out`, which must hold exactly one double per node.
///
/// # Safety
/// `diff` must be a live diffusion handle; `out` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dal_diffusion_importance(
    diff: *const DalDiffusion,
    out: *mut f64,
    len: usize,
) -> DalStatus {
    guarded(|| {
        if diff.is_null() || out.is_null() {
            set_error("diff and out must be non-null");
            return DalStatus::NullArgument;
        }
        let importance = &(*diff).importance;
        if len < importance.len() {
            set_error(&format!(
                "buffer holds {len} doubles, need {}",
                importance.len()
            ));
            return DalStatus::BufferTooSmall;
        }
        std::ptr::copy_nonoverlapping(importance.as_ptr(), out, importance.len());
        DalStatus::Ok
    })
}

/// Copies the diffused feature matrix row-major into `out`, which must hold
/// `num_nodes * feature_dim` doubles.
///
/// # Safety
/// `diff` must be a live diffusion handle; `out` must point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dal_diffusion_propagated(
    diff: *const DalDiffusion,
    out: *mut f64,
    len: usize,
) -> DalStatus {
    guarded(|| {
        if diff.is_null() || out.is_null() {
            set_error("diff and out must be non-null");
            return DalStatus::NullArgument;
        }
        let px = &(*diff).propagated;
        let needed = px.nrows() * px.ncols();
        if len < needed {
            set_error(&format!("buffer holds {len} doubles, need {needed}"));
            return DalStatus::BufferTooSmall;
        }
        let slice = px.as_slice().expect("propagated features are contiguous");
        std::ptr::copy_nonoverlapping(slice.as_ptr(), out, needed);
        DalStatus::Ok
    })
}

/// Two-sided Welch t-test; writes the p-value to `out_p`.
///
/// # Safety
/// `a` and `b` must point to `a_len` and `b_len` doubles; `out_p` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_welch_t_test(
    a: *const f64,
    a_len: usize,
    b: *const f64,
    b_len: usize,
    out_p: *mut f64,
) -> DalStatus {
    guarded(|| {
        if a.is_null() || b.is_null() || out_p.is_null() {
            set_error("a, b, and out_p must be non-null");
            return DalStatus::NullArgument;
        }
        let a = std::slice::from_raw_parts(a, a_len);
        let b = std::slice::from_raw_parts(b, b_len);
        match welch_t_test(a, b) {
            Ok(r) => {
                *out_p = r.p_value;
                DalStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Scalar knobs for [`dal_run`]; get defaults from
/// [`dal_run_options_default`] before overriding fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DalRunOptions {
    pub epsilon: f64,
    pub members: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub val_size: usize,
    pub budget_max_multiple: usize,
    pub step_multiple: usize,
    pub kmeans_restarts: usize,
    pub two_hop: bool,
    pub additive_combine: bool,
    pub use_uncertainty: bool,
    pub use_diversity: bool,
    pub use_importance: bool,
}

/// Fills `out` with the default experiment options.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_run_options_default(out: *mut DalRunOptions) -> DalStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return DalStatus::NullArgument;
        }
        let cfg = ExperimentConfig::default();
        *out = DalRunOptions {
            epsilon: cfg.diffusion.epsilon,
            members: cfg.model.members,
            hidden: cfg.model.hidden,
            dropout: cfg.model.dropout,
            learning_rate: cfg.model.learning_rate,
            weight_decay: cfg.model.weight_decay,
            max_epochs: cfg.model.max_epochs,
            patience: cfg.model.patience,
            val_size: cfg.val_size,
            budget_max_multiple: cfg.budget_max_multiple,
            step_multiple: cfg.step_multiple,
            kmeans_restarts: cfg.kmeans_restarts,
            two_hop: cfg.two_hop,
            additive_combine: false,
            use_uncertainty: true,
            use_diversity: true,
            use_importance: true,
        };
        DalStatus::Ok
    })
}

/// Runs one seeded experiment over the full budget grid and appends the
/// result rows to `out_csv` (created with a header when missing).
/// `strategy` is one of diffusal|random|entropy|degree|coreset.
///
/// # Safety
/// `dataset_dir`, `strategy`, and `out_csv` must be valid NUL-terminated
/// strings; `alphas` must point to `num_alphas` doubles; `options` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dal_run(
    dataset_dir: *const c_char,
    strategy: *const c_char,
    alphas: *const f64,
    num_alphas: usize,
    seed: u64,
    options: *const DalRunOptions,
    out_csv: *const c_char,
) -> DalStatus {
    guarded(|| {
        if options.is_null() || (alphas.is_null() && num_alphas > 0) {
            set_error("options and alphas must be non-null");
            return DalStatus::NullArgument;
        }
        let dir = match cstr_arg(dataset_dir, "dataset_dir") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let strategy_name = match cstr_arg(strategy, "strategy") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let out_path = match cstr_arg(out_csv, "out_csv") {
            Ok(s) => s,
            Err(status) => return status,
        };
        let opts = *options;
        let alphas = std::slice::from_raw_parts(alphas, num_alphas).to_vec();
        let run = || -> Result<(), Error> {
            let kind = StrategyKind::parse(&strategy_name)?;
            let mut strategy = StrategyConfig::new(kind);
            strategy.use_uncertainty = opts.use_uncertainty;
            strategy.use_diversity = opts.use_diversity;
            strategy.use_importance = opts.use_importance;
            strategy.combine = if opts.additive_combine {
                CombineMode::Additive
            } else {
                CombineMode::Multiplicative
            };
            let cfg = ExperimentConfig {
                dataset_dir: PathBuf::from(&dir),
                strategy,
                diffusion: DiffusionConfig::new(alphas.clone(), opts.epsilon)?,
                model: diffusal::QbcConfig {
                    members: opts.members,
                    hidden: opts.hidden,
                    dropout: opts.dropout,
                    learning_rate: opts.learning_rate,
                    weight_decay: opts.weight_decay,
                    max_epochs: opts.max_epochs,
                    patience: opts.patience,
                    seed: 0,
                },
                seeds: vec![seed],
                val_size: opts.val_size,
                budget_max_multiple: opts.budget_max_multiple,
                step_multiple: opts.step_multiple,
                two_hop: opts.two_hop,
                kmeans_restarts: opts.kmeans_restarts,
                cache_path: None,
            };
            let out = harness::run_experiment(&cfg, seed)?;
            harness::append_results(std::path::Path::new(&out_path), &out.rows)?;
            Ok(())
        };
        match run() {
            Ok(()) => DalStatus::Ok,
            Err(e) => fail(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn fixture_dir() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let ds = diffusal::two_block(12, 6, 3).unwrap();
        diffusal::write_dataset_dir(dir.path(), &ds).unwrap();
        dir
    }

    fn c_path(p: &std::path::Path) -> CString {
        CString::new(p.to_str().unwrap()).unwrap()
    }

    #[test]
    fn load_query_free_cycle() {
        let dir = fixture_dir();
        let c_dir = c_path(dir.path());
        let mut handle: *mut DalDataset = std::ptr::null_mut();
        let status = unsafe { dal_dataset_load(c_dir.as_ptr(), &mut handle) };
        assert_eq!(status, DalStatus::Ok);
        assert!(!handle.is_null());
        let mut n = 0usize;
        assert_eq!(
            unsafe { dal_dataset_num_nodes(handle, &mut n) },
            DalStatus::Ok
        );
        assert_eq!(n, 24);
        let mut c = 0usize;
        assert_eq!(
            unsafe { dal_dataset_num_classes(handle, &mut c) },
            DalStatus::Ok
        );
        assert_eq!(c, 2);
        unsafe { dal_dataset_free(handle) };
    }

    #[test]
    fn null_and_missing_inputs_are_reported() {
        let mut handle: *mut DalDataset = std::ptr::null_mut();
        let status = unsafe { dal_dataset_load(std::ptr::null(), &mut handle) };
        assert_eq!(status, DalStatus::NullArgument);
        let missing = CString::new("/definitely/not/here").unwrap();
        let status = unsafe { dal_dataset_load(missing.as_ptr(), &mut handle) };
        assert_eq!(status, DalStatus::Io);
        let msg = unsafe { CStr::from_ptr(dal_last_error_message()) };
        assert!(!msg.to_bytes().is_empty());
    }

    #[test]
    fn diffusion_buffers_round_trip() {
        let dir = fixture_dir();
        let c_dir = c_path(dir.path());
        let mut ds: *mut DalDataset = std::ptr::null_mut();
        assert_eq!(
            unsafe { dal_dataset_load(c_dir.as_ptr(), &mut ds) },
            DalStatus::Ok
        );
        let alphas = [0.05f64, 0.2];
        let mut diff: *mut DalDiffusion = std::ptr::null_mut();
        let status = unsafe {
            dal_diffusion_compute(ds, alphas.as_ptr(), alphas.len(), 1e-3, false, &mut diff)
        };
        assert_eq!(status, DalStatus::Ok);
        let mut imp = vec![0f64; 24];
        assert_eq!(
            unsafe { dal_diffusion_importance(diff, imp.as_mut_ptr(), imp.len()) },
            DalStatus::Ok
        );
        let total: f64 = imp.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        let mut short = vec![0f64; 3];
        assert_eq!(
            unsafe { dal_diffusion_importance(diff, short.as_mut_ptr(), short.len()) },
            DalStatus::BufferTooSmall
        );
        let mut px = vec![0f64; 24 * 6];
        assert_eq!(
            unsafe { dal_diffusion_propagated(diff, px.as_mut_ptr(), px.len()) },
            DalStatus::Ok
        );
        assert!(px.iter().any(|&v| v > 0.0));
        unsafe {
            dal_diffusion_free(diff);
            dal_dataset_free(ds);
        }
    }

    #[test]
    fn welch_through_the_boundary() {
        let a = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0f64, 3.0, 4.0, 5.0, 6.0];
        let mut p = 0f64;
        let status =
            unsafe { dal_welch_t_test(a.as_ptr(), a.len(), b.as_ptr(), b.len(), &mut p) };
        assert_eq!(status, DalStatus::Ok);
        assert!((p - 0.34659350708733416).abs() < 1e-12);
        let status =
            unsafe { dal_welch_t_test(a.as_ptr(), 1, b.as_ptr(), b.len(), &mut p) };
        assert_eq!(status, DalStatus::InvalidArgument);
    }

    #[test]
    fn full_run_writes_csv() {
        let dir = fixture_dir();
        let out = dir.path().join("results.csv");
        let c_dir = c_path(dir.path());
        let c_strategy = CString::new("random").unwrap();
        let c_out = c_path(&out);
        let mut opts = unsafe { std::mem::zeroed::<DalRunOptions>() };
        assert_eq!(unsafe { dal_run_options_default(&mut opts) }, DalStatus::Ok);
        opts.budget_max_multiple = 4;
        opts.max_epochs = 15;
        opts.patience = 5;
        opts.members = 2;
        opts.hidden = 8;
        let alphas = [0.05f64, 0.2];
        let status = unsafe {
            dal_run(
                c_dir.as_ptr(),
                c_strategy.as_ptr(),
                alphas.as_ptr(),
                alphas.len(),
                7,
                &opts,
                c_out.as_ptr(),
            )
        };
        assert_eq!(status, DalStatus::Ok);
        let rows = diffusal::read_results(&out).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.strategy == "random"));
    }
}
