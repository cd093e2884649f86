//! C interface to the uavdc simulator.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new`/`*_load` function and released by the matching `*_free`. Calls
//! return a [`UavdcStatus`]; on failure a description is available from
//! [`uavdc_last_error`] until the next failing call on the same thread.
//! Panics never unwind into C; they surface as `UAVDC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use uavdc::citymap::{generate_city, CityMap, ItuParams};
use uavdc::config::ExperimentConfig;
use uavdc::env::{Action, Env};
use uavdc::harness::{build_scenario, realization_env};
use uavdc::metrics::{propulsion_power, PowerModelParams};
use uavdc::td3::Agent;
use uavdc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UavdcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Io = 4,
    MissingCheckpoint = 5,
    EpisodeOver = 6,
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

/// Generated or loaded city map.
pub struct UavdcCity {
    map: CityMap,
}

/// One environment realization.
pub struct UavdcEnv {
    env: Env,
}

/// Trained actor loaded from a checkpoint directory.
pub struct UavdcAgent {
    agent: Agent,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(UavdcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Config(_) => UavdcStatus::Config,
            Error::Io { .. } => UavdcStatus::Io,
            Error::MissingCheckpoint(_) => UavdcStatus::MissingCheckpoint,
            Error::EpisodeOver => UavdcStatus::EpisodeOver,
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::UnknownSeedLabel(_) => {
                UavdcStatus::InvalidArgument
            }
            Error::NonFinite(_) | Error::Serde(_) => UavdcStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(UavdcStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> UavdcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => UavdcStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            UavdcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(UavdcStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn obj<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn obj_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn check_buffer(out: *mut f64, capacity: usize, needed: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("obs_out"));
    }
    if capacity < needed {
        return Err(Failure(
            UavdcStatus::BufferTooSmall,
            format!("observation needs {needed} entries, buffer holds {capacity}"),
        ));
    }
    Ok(())
}

unsafe fn write_obs(obs: &[f64], out: *mut f64, capacity: usize) -> Result<(), Failure> {
    check_buffer(out, capacity, obs.len())?;
    std::ptr::copy_nonoverlapping(obs.as_ptr(), out, obs.len());
    Ok(())
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn uavdc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Rotary-wing propulsion power in watts at horizontal speed `v` (m/s),
/// with the default power-model parameters.
#[no_mangle]
pub extern "C" fn uavdc_propulsion_power(v: f64) -> f64 {
    propulsion_power(v, &PowerModelParams::default())
}

/// Generate a city with the statistical building model.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn uavdc_city_generate(
    area_side: f64,
    alpha: f64,
    beta: f64,
    lambda_mean: f64,
    seed: u64,
    out: *mut *mut UavdcCity,
) -> UavdcStatus {
    guard(|| {
        let params = ItuParams {
            area_side,
            alpha,
            beta,
            lambda_mean,
            ..ItuParams::default()
        };
        put(
            out,
            UavdcCity {
                map: generate_city(params, seed)?,
            },
            "out",
        )
    })
}

/// Load a map written by `uavdc generate-map`.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_city_load(path: *const c_char, out: *mut *mut UavdcCity) -> UavdcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(
            out,
            UavdcCity {
                map: CityMap::load(Path::new(path))?,
            },
            "out",
        )
    })
}

/// # Safety
/// `city` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn uavdc_city_free(city: *mut UavdcCity) {
    if !city.is_null() {
        drop(Box::from_raw(city));
    }
}

/// # Safety
/// `city` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_city_building_count(city: *const UavdcCity, out: *mut usize) -> UavdcStatus {
    guard(|| {
        let city = obj(city, "city")?;
        *obj_mut(out, "out")? = city.map.buildings.len();
        Ok(())
    })
}

/// Whether the straight segment between two 3-D points clears every building.
///
/// # Safety
/// `p` and `q` must each point to three doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_city_is_los(
    city: *const UavdcCity,
    p: *const f64,
    q: *const f64,
    out: *mut bool,
) -> UavdcStatus {
    guard(|| {
        let city = obj(city, "city")?;
        let p = obj(p as *const [f64; 3], "p")?;
        let q = obj(q as *const [f64; 3], "q")?;
        *obj_mut(out, "out")? = city.map.is_los(p, q);
        Ok(())
    })
}

/// Build the scenario described by a TOML configuration (null for the
/// defaults) and open evaluation realization `realization`.
///
/// # Safety
/// `config_toml` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_new(
    config_toml: *const c_char,
    realization: u64,
    out: *mut *mut UavdcEnv,
) -> UavdcStatus {
    guard(|| {
        let cfg = if config_toml.is_null() {
            ExperimentConfig::default()
        } else {
            ExperimentConfig::from_toml_str(str_arg(config_toml, "config_toml")?)?
        };
        cfg.validate()?;
        let scenario = build_scenario(&cfg)?;
        let env = realization_env(Arc::clone(&scenario), cfg.seed, realization);
        put(out, UavdcEnv { env }, "out")
    })
}

/// # Safety
/// `env` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_free(env: *mut UavdcEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Length of the observation vector.
///
/// # Safety
/// `env` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_obs_dim(env: *const UavdcEnv, out: *mut usize) -> UavdcStatus {
    guard(|| {
        let env = obj(env, "env")?;
        *obj_mut(out, "out")? = env.env.obs_dim();
        Ok(())
    })
}

/// Start a new episode and write the first observation.
///
/// # Safety
/// `obs_out` must hold at least `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_reset(env: *mut UavdcEnv, obs_out: *mut f64, capacity: usize) -> UavdcStatus {
    guard(|| {
        let env = obj_mut(env, "env")?;
        let obs = env.env.reset();
        write_obs(&obs, obs_out, capacity)
    })
}

/// Fly one step with heading (rad) and speed (m/s).
///
/// # Safety
/// `obs_out` must hold at least `capacity` doubles; the scalar outputs must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_step(
    env: *mut UavdcEnv,
    heading: f64,
    speed: f64,
    obs_out: *mut f64,
    capacity: usize,
    reward: *mut f64,
    episode_over: *mut bool,
    terminated: *mut bool,
) -> UavdcStatus {
    guard(|| {
        let env = obj_mut(env, "env")?;
        let (reward, episode_over, terminated) = (
            obj_mut(reward, "reward")?,
            obj_mut(episode_over, "episode_over")?,
            obj_mut(terminated, "terminated")?,
        );
        // reject a short buffer before the environment advances
        check_buffer(obs_out, capacity, env.env.obs_dim())?;
        let res = env.env.step(Action { heading, speed })?;
        write_obs(&res.observation, obs_out, capacity)?;
        *reward = res.reward;
        *episode_over = res.episode_over;
        *terminated = res.terminated;
        Ok(())
    })
}

/// Current UAV position and elapsed mission time.
///
/// # Safety
/// `xy` must hold two doubles; `elapsed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_env_position(env: *const UavdcEnv, xy: *mut f64, elapsed: *mut f64) -> UavdcStatus {
    guard(|| {
        let env = obj(env, "env")?;
        let state = env.env.state();
        *obj_mut(xy as *mut [f64; 2], "xy")? = state.position;
        *obj_mut(elapsed, "elapsed")? = state.elapsed;
        Ok(())
    })
}

/// Load a checkpoint directory written by `uavdc train`.
///
/// # Safety
/// `dir` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_agent_load(dir: *const c_char, out: *mut *mut UavdcAgent) -> UavdcStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        put(
            out,
            UavdcAgent {
                agent: Agent::load(Path::new(dir))?,
            },
            "out",
        )
    })
}

/// # Safety
/// `agent` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn uavdc_agent_free(agent: *mut UavdcAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Noise-free action for an observation, as heading (rad) and speed (m/s).
///
/// # Safety
/// `obs` must point to `len` doubles; `heading` and `speed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn uavdc_agent_act(
    agent: *const UavdcAgent,
    obs: *const f64,
    len: usize,
    heading: *mut f64,
    speed: *mut f64,
) -> UavdcStatus {
    guard(|| {
        let agent = &obj(agent, "agent")?.agent;
        if obs.is_null() {
            return Err(null("obs"));
        }
        let obs = std::slice::from_raw_parts(obs, len);
        let action = Action::from_normalized(agent.raw_action(obs)?, agent.v_max);
        *obj_mut(heading, "heading")? = action.heading;
        *obj_mut(speed, "speed")? = action.speed;
        Ok(())
    })
}
