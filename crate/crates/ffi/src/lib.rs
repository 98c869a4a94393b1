//! C ABI over the cpmp-dlts solver.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style functions and released by the matching `*_free`. Fallible calls
//! return a [`CpmpStatus`]; on failure [`cpmp_last_error_message`] describes
//! the error on the calling thread. Stack indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use cpmp_dlts::model::{parse_instance, Bay, Group, Move, Solution};
use cpmp_dlts::nn::{load_weights, Head, Network};
use cpmp_dlts::search::{
    search, Models, MpVariant, PolicyModel, SearchConfig, Strategy, UniformPolicy, ValueModel,
};
use cpmp_dlts::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpmpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Io = 4,
    ShapeMismatch = 5,
    VersionMismatch = 6,
    IllegalMove = 7,
    Config = 8,
    /// A Rust panic was caught at the boundary.
    Internal = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpmpStrategy {
    Dfs = 0,
    Lds = 1,
    Wbs = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CpmpPruning {
    Constant = 0,
    Quadratic = 1,
    Log = 2,
}

/// Search settings. `time_limit <= 0` means unlimited; `md0 == 0` uses
/// twice the container count.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CpmpSearchConfig {
    pub strategy: CpmpStrategy,
    pub pruning: CpmpPruning,
    pub k: usize,
    pub d: f64,
    pub p: f64,
    pub reactive_md: bool,
    pub binning: bool,
    pub bins: usize,
    pub z: usize,
    pub alpha: f64,
    pub gamma: f64,
    pub time_limit: f64,
    pub md0: usize,
}

pub struct CpmpBay(Bay);

pub struct CpmpNetwork(Network);

/// Outcome of an oracle or heuristic search.
pub struct CpmpResult {
    solution: Option<Solution>,
    nodes_opened: u64,
    /// Oracle: optimality proven. Search: the pruned tree was exhausted.
    complete: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: CpmpStatus, msg: impl Into<String>) -> CpmpStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> CpmpStatus {
    match err {
        Error::IllegalMove { .. } | Error::DeadEnd | Error::InvalidSolution(_) => {
            CpmpStatus::IllegalMove
        }
        Error::Parse { .. } | Error::Csv(_) => CpmpStatus::Parse,
        Error::ShapeMismatch(_) => CpmpStatus::ShapeMismatch,
        Error::VersionMismatch { .. } => CpmpStatus::VersionMismatch,
        Error::Io(_) => CpmpStatus::Io,
        Error::Config(_) | Error::MissingReference(_) => CpmpStatus::Config,
        Error::InfeasibleSpec(_) | Error::EmptyDataset => CpmpStatus::InvalidArgument,
    }
}

/// Runs `body`, translating library errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (CpmpStatus, String)>) -> CpmpStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CpmpStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(CpmpStatus::Internal, "panic inside cpmp-dlts"),
    }
}

fn lib(err: Error) -> (CpmpStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (CpmpStatus, String) {
    (CpmpStatus::NullPointer, format!("{name} is null"))
}

unsafe fn c_str<'a>(s: *const c_char, name: &str) -> Result<&'a str, (CpmpStatus, String)> {
    if s.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (CpmpStatus::InvalidArgument, format!("{name} is not UTF-8")))
}

/// Writes a new handle to `out`, which must be non-null.
unsafe fn emit<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cpmp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn cpmp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a bay from a stack-major grid of `stacks * tiers` groups, tier 0
/// at the bottom of each stack and 0 marking an empty slot.
///
/// # Safety
/// `grid` must point to `stacks * tiers` readable values and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_new(
    stacks: usize,
    tiers: usize,
    grid: *const u16,
    out: *mut *mut CpmpBay,
) -> CpmpStatus {
    guard(|| {
        if grid.is_null() {
            return Err(null("grid"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = stacks
            .checked_mul(tiers)
            .ok_or((CpmpStatus::InvalidArgument, "bay too large".to_string()))?;
        let cells = std::slice::from_raw_parts(grid, len);
        let columns: Vec<Vec<Group>> = (0..stacks)
            .map(|s| {
                let col = &cells[s * tiers..(s + 1) * tiers];
                let height = col.iter().position(|&g| g == 0).unwrap_or(tiers);
                if col[height..].iter().any(|&g| g != 0) {
                    return Err((
                        CpmpStatus::InvalidArgument,
                        format!("stack {s} has a container above an empty slot"),
                    ));
                }
                Ok(col[..height].to_vec())
            })
            .collect::<Result<_, _>>()?;
        let bay = Bay::from_stacks(tiers, &columns).map_err(lib)?;
        emit(out, CpmpBay(bay));
        Ok(())
    })
}

/// Parses a bay in the `CPMP v1` text format.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_parse(text: *const c_char, out: *mut *mut CpmpBay) -> CpmpStatus {
    guard(|| {
        let text = c_str(text, "text")?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, CpmpBay(parse_instance(text).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `bay` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_free(bay: *mut CpmpBay) {
    if !bay.is_null() {
        drop(Box::from_raw(bay));
    }
}

/// # Safety
/// `bay` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_stacks(bay: *const CpmpBay) -> usize {
    bay.as_ref().map_or(0, |b| b.0.stacks())
}

/// # Safety
/// `bay` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_tiers(bay: *const CpmpBay) -> usize {
    bay.as_ref().map_or(0, |b| b.0.tiers())
}

/// Containers that sit above a smaller group in their stack.
///
/// # Safety
/// `bay` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_blocking_count(bay: *const CpmpBay) -> usize {
    bay.as_ref().map_or(0, |b| b.0.blocking_count())
}

/// # Safety
/// `bay` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_is_sorted(bay: *const CpmpBay) -> bool {
    bay.as_ref().is_some_and(|b| b.0.is_sorted())
}

/// Moves the top container of `from` onto `to` in place.
///
/// # Safety
/// `bay` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_bay_apply_move(
    bay: *mut CpmpBay,
    from: usize,
    to: usize,
) -> CpmpStatus {
    guard(|| {
        let bay = bay.as_mut().ok_or_else(|| null("bay"))?;
        bay.0 = bay.0.apply_move(Move::new(from, to)).map_err(lib)?;
        Ok(())
    })
}

/// Loads a weights file written by `cpmp-dlts train`.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpmp_network_load(
    path: *const c_char,
    out: *mut *mut CpmpNetwork,
) -> CpmpStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        emit(out, CpmpNetwork(load_weights(path).map_err(lib)?));
        Ok(())
    })
}

/// # Safety
/// `net` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpmp_network_free(net: *mut CpmpNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Solves `bay` optimally. `time_limit <= 0` means unlimited; after a
/// timeout the result holds a heuristic solution and is not complete.
///
/// # Safety
/// `bay` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cpmp_oracle_solve(
    bay: *const CpmpBay,
    time_limit: f64,
    out: *mut *mut CpmpResult,
) -> CpmpStatus {
    guard(|| {
        let bay = bay.as_ref().ok_or_else(|| null("bay"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let limit = (time_limit > 0.0)
            .then(|| Duration::try_from_secs_f64(time_limit))
            .transpose()
            .map_err(|e| (CpmpStatus::InvalidArgument, e.to_string()))?;
        let res = cpmp_dlts::oracle::solve_exact(&bay.0, limit);
        emit(
            out,
            CpmpResult {
                solution: res.solution,
                nodes_opened: res.nodes_opened,
                complete: res.proven_optimal,
            },
        );
        Ok(())
    })
}

/// Default settings of the `solve-dlts` command.
#[no_mangle]
pub extern "C" fn cpmp_search_config_default() -> CpmpSearchConfig {
    let c = SearchConfig::default();
    CpmpSearchConfig {
        strategy: CpmpStrategy::Dfs,
        pruning: CpmpPruning::Log,
        k: c.k,
        d: c.d,
        p: c.p,
        reactive_md: c.reactive_md,
        binning: c.binning,
        bins: c.bins,
        z: c.z,
        alpha: c.alpha,
        gamma: c.gamma,
        time_limit: c.time_limit.unwrap_or(0.0),
        md0: 0,
    }
}

fn to_config(c: &CpmpSearchConfig) -> SearchConfig {
    SearchConfig {
        strategy: match c.strategy {
            CpmpStrategy::Dfs => Strategy::Dfs,
            CpmpStrategy::Lds => Strategy::Lds,
            CpmpStrategy::Wbs => Strategy::Wbs,
        },
        mp: match c.pruning {
            CpmpPruning::Constant => MpVariant::Constant,
            CpmpPruning::Quadratic => MpVariant::Quadratic,
            CpmpPruning::Log => MpVariant::Log,
        },
        k: c.k,
        d: c.d,
        p: c.p,
        reactive_md: c.reactive_md,
        binning: c.binning,
        bins: c.bins,
        z: c.z,
        alpha: c.alpha,
        gamma: c.gamma,
        time_limit: (c.time_limit > 0.0).then_some(c.time_limit),
        md0: (c.md0 > 0).then_some(c.md0),
    }
}

fn check_network(net: &CpmpNetwork, head: Head, bay: &Bay) -> Result<(), (CpmpStatus, String)> {
    if net.0.head() != head {
        return Err((
            CpmpStatus::ShapeMismatch,
            format!("expected a {head} network, got {}", net.0.head()),
        ));
    }
    net.0.check_dims(bay.stacks(), bay.tiers()).map_err(lib)
}

/// Runs a guided tree search. A null `policy` ranks all moves equally; a
/// null `value` disables value bounds (and is rejected by WBS).
///
/// # Safety
/// Handles must be live or null where allowed; `config` and `out` must be
/// valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cpmp_search(
    bay: *const CpmpBay,
    policy: *const CpmpNetwork,
    value: *const CpmpNetwork,
    config: *const CpmpSearchConfig,
    out: *mut *mut CpmpResult,
) -> CpmpStatus {
    guard(|| {
        let bay = bay.as_ref().ok_or_else(|| null("bay"))?;
        let config = to_config(config.as_ref().ok_or_else(|| null("config"))?);
        if out.is_null() {
            return Err(null("out"));
        }
        let policy: &dyn PolicyModel = match policy.as_ref() {
            Some(n) => {
                check_network(n, Head::Policy, &bay.0)?;
                &n.0
            }
            None => &UniformPolicy,
        };
        let value = match value.as_ref() {
            Some(n) => {
                check_network(n, Head::Value, &bay.0)?;
                Some(&n.0 as &dyn ValueModel)
            }
            None => None,
        };
        if config.strategy == Strategy::Wbs && value.is_none() {
            return Err((
                CpmpStatus::Config,
                "weighted beam search needs a value network".into(),
            ));
        }
        let res = search(&bay.0, Models::new(policy, value), &config).map_err(lib)?;
        emit(
            out,
            CpmpResult {
                solution: res.solution,
                nodes_opened: res.nodes_opened,
                complete: res.completed,
            },
        );
        Ok(())
    })
}

/// # Safety
/// `res` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_free(res: *mut CpmpResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_found(res: *const CpmpResult) -> bool {
    res.as_ref().is_some_and(|r| r.solution.is_some())
}

/// Number of moves, 0 when no solution was found.
///
/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_len(res: *const CpmpResult) -> usize {
    res.as_ref()
        .and_then(|r| r.solution.as_ref())
        .map_or(0, Solution::len)
}

/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_nodes_opened(res: *const CpmpResult) -> u64 {
    res.as_ref().map_or(0, |r| r.nodes_opened)
}

/// Oracle: the solution is proven optimal. Search: the pruned tree was
/// exhausted within the time limit.
///
/// # Safety
/// `res` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_complete(res: *const CpmpResult) -> bool {
    res.as_ref().is_some_and(|r| r.complete)
}

/// Move `index` of the solution.
///
/// # Safety
/// `res` must be a live handle; `from` and `to` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cpmp_result_move(
    res: *const CpmpResult,
    index: usize,
    from: *mut usize,
    to: *mut usize,
) -> CpmpStatus {
    guard(|| {
        let res = res.as_ref().ok_or_else(|| null("result"))?;
        if from.is_null() || to.is_null() {
            return Err(null("from/to"));
        }
        let mv = res
            .solution
            .as_ref()
            .and_then(|s| s.moves.get(index))
            .ok_or((
                CpmpStatus::InvalidArgument,
                format!("no move at index {index}"),
            ))?;
        *from = mv.from;
        *to = mv.to;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bay(stacks: usize, tiers: usize, grid: &[u16]) -> *mut CpmpBay {
        let mut out = ptr::null_mut();
        assert_eq!(
            unsafe { cpmp_bay_new(stacks, tiers, grid.as_ptr(), &mut out) },
            CpmpStatus::Ok
        );
        out
    }

    fn last_error() -> String {
        unsafe { CStr::from_ptr(cpmp_last_error_message()) }
            .to_string_lossy()
            .into_owned()
    }

    #[test]
    fn grid_must_be_gravity_packed() {
        let mut out = ptr::null_mut();
        let grid = [0u16, 2, 1, 0];
        let status = unsafe { cpmp_bay_new(2, 2, grid.as_ptr(), &mut out) };
        assert_eq!(status, CpmpStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(last_error().contains("stack 0"));
    }

    #[test]
    fn moves_update_the_bay() {
        let b = bay(2, 2, &[1, 2, 0, 0]);
        unsafe {
            assert_eq!(cpmp_bay_blocking_count(b), 1);
            assert_eq!(cpmp_bay_apply_move(b, 0, 1), CpmpStatus::Ok);
            assert!(cpmp_bay_is_sorted(b));
            assert_eq!(cpmp_bay_apply_move(b, 0, 0), CpmpStatus::IllegalMove);
            cpmp_bay_free(b);
        }
    }

    #[test]
    fn oracle_and_search_agree_on_a_small_bay() {
        let b = bay(3, 3, &[1, 2, 3, 0, 0, 0, 0, 0, 0]);
        unsafe {
            let mut exact = ptr::null_mut();
            assert_eq!(cpmp_oracle_solve(b, 0.0, &mut exact), CpmpStatus::Ok);
            assert!(cpmp_result_found(exact) && cpmp_result_complete(exact));
            assert_eq!(cpmp_result_len(exact), 2);

            let mut config = cpmp_search_config_default();
            config.p = 1.0;
            config.pruning = CpmpPruning::Constant;
            config.time_limit = 0.0;
            let mut res = ptr::null_mut();
            assert_eq!(
                cpmp_search(b, ptr::null(), ptr::null(), &config, &mut res),
                CpmpStatus::Ok
            );
            assert_eq!(cpmp_result_len(res), 2);
            let (mut from, mut to) = (0, 0);
            for i in 0..2 {
                assert_eq!(cpmp_result_move(res, i, &mut from, &mut to), CpmpStatus::Ok);
                assert_eq!(cpmp_bay_apply_move(b, from, to), CpmpStatus::Ok);
            }
            assert!(cpmp_bay_is_sorted(b));
            assert_eq!(
                cpmp_result_move(res, 2, &mut from, &mut to),
                CpmpStatus::InvalidArgument
            );

            config.strategy = CpmpStrategy::Wbs;
            let mut none = ptr::null_mut();
            assert_eq!(
                cpmp_search(b, ptr::null(), ptr::null(), &config, &mut none),
                CpmpStatus::Config
            );
            cpmp_result_free(exact);
            cpmp_result_free(res);
            cpmp_bay_free(b);
        }
    }

    #[test]
    fn null_handles_are_reported() {
        let mut out = ptr::null_mut();
        let status = unsafe { cpmp_oracle_solve(ptr::null(), 0.0, &mut out) };
        assert_eq!(status, CpmpStatus::NullPointer);
        assert!(last_error().contains("bay"));
        assert_eq!(unsafe { cpmp_bay_blocking_count(ptr::null()) }, 0);
    }
}
