//! C ABI over `wienerlab`.
//!
//! Every fallible function returns a [`WlStatus`]; on failure a message is
//! available from [`wl_last_error_message`] on the calling thread. Objects are
//! opaque handles released with their `_free` function. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wienerlab::gauss_sim::{simulate, GaussianModel};
use wienerlab::pricing::{relative_entropy, sample_kernel, EntropyDirection, KernelSample, ThetaSpec};
use wienerlab::strategy::{construct_strategy, holder_budget, replication_error, LemmaCase, StrategySchedule};
use wienerlab::utility::{optimal_profile, UtilitySpec};
use wienerlab::{Error, GridFunction, SamplePath};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// A numerical divergence was detected (entropy, norm, factorization, bracketing).
    Numerical = 2,
    GridMismatch = 3,
    Io = 4,
    NullPointer = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// Direction of a relative entropy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlEntropyDirection {
    /// `H(P*|P) = E(φ log φ)`.
    PStarP = 0,
    /// `H(P|P*) = E(-log φ)`.
    PPStar = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlUtilityKind {
    Exponential = 0,
    Power = 1,
    Log = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WlLemmaCase {
    Bounded = 0,
    SupMoment = 1,
    IntegratedMoment = 2,
}

/// Summary of an optimal terminal profile.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WlProfileSummary {
    pub expected_utility: f64,
    pub standard_error: f64,
    pub closed_form: f64,
    pub budget_residual: f64,
    pub c_star: f64,
}

/// Hölder orders and admissibility of a replication setup.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct WlHolderBudget {
    pub theta_order: f64,
    pub h3: f64,
    pub rho0: f64,
    pub admissible: bool,
}

/// Sampled paths on a common grid.
pub struct WlPathSet {
    paths: Vec<SamplePath>,
}

/// Pricing-kernel samples.
pub struct WlKernel {
    samples: Vec<KernelSample>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> WlStatus {
    match err {
        Error::GridMismatch(_) => WlStatus::GridMismatch,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::MissingArtifact(_) => WlStatus::Io,
        e if e.is_numerical() => WlStatus::Numerical,
        _ => WlStatus::InvalidArgument,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), WlStatus>) -> WlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WlStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            WlStatus::Panic
        }
    }
}

fn lift<T>(r: wienerlab::Result<T>) -> Result<T, WlStatus> {
    r.map_err(|e| {
        set_error(e.to_string());
        status_of(&e)
    })
}

fn fail<T>(status: WlStatus, msg: &str) -> Result<T, WlStatus> {
    set_error(msg.to_string());
    Err(status)
}

fn nonnull<T>(p: *const T, what: &str) -> Result<(), WlStatus> {
    if p.is_null() {
        return fail(WlStatus::NullPointer, &format!("{what} is null"));
    }
    Ok(())
}

unsafe fn json_arg<T: serde::de::DeserializeOwned>(s: *const c_char, what: &str) -> Result<T, WlStatus> {
    nonnull(s, what)?;
    let text = match CStr::from_ptr(s).to_str() {
        Ok(t) => t,
        Err(_) => return fail(WlStatus::InvalidArgument, &format!("{what} is not UTF-8")),
    };
    serde_json::from_str(text).or_else(|e| fail(WlStatus::InvalidArgument, &format!("{what}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], WlStatus> {
    nonnull(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, capacity: usize) -> Result<(), WlStatus> {
    nonnull(dst, "output buffer")?;
    if capacity < src.len() {
        return fail(
            WlStatus::BufferTooSmall,
            &format!("buffer holds {capacity} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

unsafe fn grid(values: *const f64, n_points: usize, horizon: f64) -> Result<GridFunction, WlStatus> {
    if n_points < 2 {
        return fail(WlStatus::InvalidArgument, "need at least two grid points");
    }
    let v = slice(values, n_points, "values")?;
    let times = (0..n_points).map(|k| horizon * k as f64 / (n_points - 1) as f64).collect();
    lift(GridFunction::new(times, v.to_vec()))
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), WlStatus> {
    nonnull(out, "output pointer")?;
    out.write(value);
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn wl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn wl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples `n_paths` paths of the model described by `model_json`
/// (e.g. `{"kind":"fbm","hurst":0.7,"horizon":1.0}`) on `n_steps` uniform steps.
///
/// # Safety
/// `model_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_simulate(
    model_json: *const c_char,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    out: *mut *mut WlPathSet,
) -> WlStatus {
    guard(|| {
        nonnull(out, "out")?;
        let model: GaussianModel = json_arg(model_json, "model_json")?;
        lift(model.validate())?;
        let paths = lift(simulate(&model, n_steps, n_paths, seed))?;
        write(out, Box::into_raw(Box::new(WlPathSet { paths })))
    })
}

/// # Safety
/// `set` must come from [`wl_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_pathset_free(set: *mut WlPathSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wl_pathset_n_paths(set: *const WlPathSet) -> usize {
    set.as_ref().map_or(0, |s| s.paths.len())
}

/// Grid points per path (steps + 1).
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wl_pathset_n_points(set: *const WlPathSet) -> usize {
    set.as_ref().and_then(|s| s.paths.first()).map_or(0, |p| p.len())
}

/// Copies the grid times into `buf`.
///
/// # Safety
/// `set` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn wl_pathset_times(set: *const WlPathSet, buf: *mut f64, capacity: usize) -> WlStatus {
    guard(|| {
        nonnull(set, "set")?;
        match (&*set).paths.first() {
            Some(p) => copy_out(&p.times, buf, capacity),
            None => fail(WlStatus::InvalidArgument, "empty path set"),
        }
    })
}

/// Copies the values of path `index` into `buf`.
///
/// # Safety
/// `set` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn wl_pathset_values(
    set: *const WlPathSet,
    index: usize,
    buf: *mut f64,
    capacity: usize,
) -> WlStatus {
    guard(|| {
        nonnull(set, "set")?;
        match (&*set).paths.get(index) {
            Some(p) => copy_out(&p.values, buf, capacity),
            None => fail(WlStatus::InvalidArgument, &format!("path index {index} out of range")),
        }
    })
}

/// Samples the pricing kernel for `theta_json`
/// (e.g. `{"kind":"constant","theta0":0.3,"horizon":1.0}`) over Wiener paths.
///
/// # Safety
/// `theta_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wl_kernel_sample(
    theta_json: *const c_char,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    out: *mut *mut WlKernel,
) -> WlStatus {
    guard(|| {
        nonnull(out, "out")?;
        let theta: ThetaSpec = json_arg(theta_json, "theta_json")?;
        lift(theta.validate())?;
        let wiener = lift(GaussianModel::wiener(theta.horizon))?;
        let paths = lift(simulate(&wiener, n_steps, n_paths, seed))?;
        let samples = lift(sample_kernel(&theta, &paths))?;
        write(out, Box::into_raw(Box::new(WlKernel { samples })))
    })
}

/// # Safety
/// `kernel` must come from [`wl_kernel_sample`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wl_kernel_free(kernel: *mut WlKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// # Safety
/// `kernel` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn wl_kernel_len(kernel: *const WlKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.samples.len())
}

/// Copies `log φ(T)` per path into `buf`.
///
/// # Safety
/// `kernel` must be a live handle; `buf` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn wl_kernel_log_phi(kernel: *const WlKernel, buf: *mut f64, capacity: usize) -> WlStatus {
    guard(|| {
        nonnull(kernel, "kernel")?;
        let v: Vec<f64> = (&*kernel).samples.iter().map(|s| s.log_phi_t).collect();
        copy_out(&v, buf, capacity)
    })
}

/// Monte Carlo relative entropy; `diverging` reports unstable batch means.
///
/// # Safety
/// `kernel` must be a live handle and the output pointers valid.
#[no_mangle]
pub unsafe extern "C" fn wl_kernel_entropy(
    kernel: *const WlKernel,
    direction: WlEntropyDirection,
    value: *mut f64,
    standard_error: *mut f64,
    diverging: *mut bool,
) -> WlStatus {
    guard(|| {
        nonnull(kernel, "kernel")?;
        let dir = match direction {
            WlEntropyDirection::PStarP => EntropyDirection::PStarP,
            WlEntropyDirection::PPStar => EntropyDirection::PPStar,
        };
        let est = lift(relative_entropy(&(&*kernel).samples, dir))?;
        write(value, est.value)?;
        write(standard_error, est.se)?;
        write(diverging, est.diverging)
    })
}

/// Optimal terminal profile for the utility; `param` is β (exponential),
/// γ (power) and ignored for log.
///
/// # Safety
/// `kernel` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn wl_optimal_profile(
    kernel: *const WlKernel,
    kind: WlUtilityKind,
    param: f64,
    w: f64,
    out: *mut WlProfileSummary,
) -> WlStatus {
    guard(|| {
        nonnull(kernel, "kernel")?;
        let u = match kind {
            WlUtilityKind::Exponential => UtilitySpec::Exponential { beta: param },
            WlUtilityKind::Power => UtilitySpec::Power { gamma: param },
            WlUtilityKind::Log => UtilitySpec::Log,
        };
        let p = lift(optimal_profile(u, w, &(&*kernel).samples))?;
        write(
            out,
            WlProfileSummary {
                expected_utility: p.expected_utility.mean,
                standard_error: p.expected_utility.se,
                closed_form: p.closed_form,
                budget_residual: p.budget_residual,
                c_star: p.c_star.unwrap_or(f64::NAN),
            },
        )
    })
}

/// `∫ f dg` over `[0, horizon]` for values on a uniform grid of `n_points` nodes.
///
/// # Safety
/// `f` and `g` must hold `n_points` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_gls_integral(
    f: *const f64,
    g: *const f64,
    n_points: usize,
    horizon: f64,
    alpha: f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        let (f, g) = (grid(f, n_points, horizon)?, grid(g, n_points, horizon)?);
        write(out, lift(wienerlab::frac_calc::gls_integral(&f, &g, alpha))?)
    })
}

/// `‖f‖_{α,[0,horizon]}` for values on a uniform grid.
///
/// # Safety
/// `f` must hold `n_points` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_holder_norm(
    f: *const f64,
    n_points: usize,
    horizon: f64,
    alpha: f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        let f = grid(f, n_points, horizon)?;
        write(out, lift(wienerlab::frac_calc::holder_norm(&f, alpha, horizon))?)
    })
}

/// `Λ_α(g)` for values on a uniform grid.
///
/// # Safety
/// `g` must hold `n_points` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_lambda_alpha(
    g: *const f64,
    n_points: usize,
    horizon: f64,
    alpha: f64,
    out: *mut f64,
) -> WlStatus {
    guard(|| {
        let g = grid(g, n_points, horizon)?;
        write(out, lift(wienerlab::frac_calc::lambda_alpha(&g, alpha))?)
    })
}

/// Lower bound on the variance of the prelimit drift density.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_variance_blowup_bound(hurst: f64, t: f64, eps: f64, out: *mut f64) -> WlStatus {
    guard(|| write(out, lift(wienerlab::pricing::variance_blowup_bound(hurst, t, eps))?))
}

/// Hölder bookkeeping; `delta` is ignored for the bounded case.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_holder_budget(
    lambda: f64,
    case: WlLemmaCase,
    delta: f64,
    h1: f64,
    h2: f64,
    out: *mut WlHolderBudget,
) -> WlStatus {
    guard(|| {
        let case = match case {
            WlLemmaCase::Bounded => LemmaCase::I,
            WlLemmaCase::SupMoment => LemmaCase::Ii { delta },
            WlLemmaCase::IntegratedMoment => LemmaCase::Iii { delta },
        };
        let b = lift(holder_budget(lambda, case, h1, h2))?;
        write(
            out,
            WlHolderBudget {
                theta_order: b.theta_order,
                h3: b.h3,
                rho0: b.rho0,
                admissible: b.admissible,
            },
        )
    })
}

/// Self-replication of one fBm path with the default `levels`-level schedule.
/// Writes `levels + 1` residuals `|V_{t_n} - Z_{t_{n-1}}|` into `residuals`.
///
/// # Safety
/// `residuals` must hold `capacity` doubles; `never_hit` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wl_replicate_self(
    hurst: f64,
    n_steps: usize,
    levels: usize,
    seed: u64,
    residuals: *mut f64,
    capacity: usize,
    never_hit: *mut bool,
) -> WlStatus {
    guard(|| {
        let model = lift(GaussianModel::fbm(hurst, 1.0))?;
        let g = lift(simulate(&model, n_steps, 1, seed))?.remove(0);
        let sched = StrategySchedule::default_levels(levels);
        let (_, state) = lift(construct_strategy(&g, &g, &sched))?;
        let z1 = g.values[g.len() - 1];
        let res = (1..=levels + 1)
            .map(|n| replication_error(&state, z1, n).map(|r| r.0))
            .collect::<wienerlab::Result<Vec<_>>>();
        copy_out(&lift(res)?, residuals, capacity)?;
        write(never_hit, state.any_never_hit())
    })
}
