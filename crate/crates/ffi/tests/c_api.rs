use std::ffi::{CStr, CString};
use std::ptr;

use uavdc_ffi::*;

fn last_error() -> String {
    let p = uavdc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

const TOY: &str = "seed = 2\n[map]\nbuildings = false\n[city]\narea_side = 300.0\n[scenario]\nnum_nodes = 5\n";

#[test]
fn power_matches_core() {
    assert!((uavdc_propulsion_power(0.0) - 168.4842).abs() < 1e-3);
    assert!((uavdc_propulsion_power(20.0) - 178.29583555165271).abs() < 1e-9);
}

#[test]
fn city_handle_lifecycle() {
    let mut city = ptr::null_mut();
    let status = unsafe { uavdc_city_generate(1000.0, 0.3, 144.0, 50.0, 5, &mut city) };
    assert_eq!(status, UavdcStatus::Ok);
    let mut n = 0usize;
    assert_eq!(unsafe { uavdc_city_building_count(city, &mut n) }, UavdcStatus::Ok);
    assert_eq!(n, 144);
    // a segment entirely above the tallest building is always clear
    let (p, q) = ([10.0, 10.0, 60.0], [990.0, 990.0, 60.0]);
    let mut los = false;
    assert_eq!(
        unsafe { uavdc_city_is_los(city, p.as_ptr(), q.as_ptr(), &mut los) },
        UavdcStatus::Ok
    );
    assert!(los);
    unsafe { uavdc_city_free(city) };
    unsafe { uavdc_city_free(ptr::null_mut()) };
}

#[test]
fn bad_city_parameters_are_reported() {
    let mut city = ptr::null_mut();
    let status = unsafe { uavdc_city_generate(1000.0, 1.5, 144.0, 50.0, 5, &mut city) };
    assert_eq!(status, UavdcStatus::InvalidArgument);
    assert!(city.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn null_arguments_are_rejected() {
    let mut n = 0usize;
    assert_eq!(
        unsafe { uavdc_city_building_count(ptr::null(), &mut n) },
        UavdcStatus::NullPointer
    );
    assert!(last_error().contains("city"));
    assert_eq!(
        unsafe { uavdc_city_load(ptr::null(), ptr::null_mut()) },
        UavdcStatus::NullPointer
    );
}

#[test]
fn env_episode_runs_to_completion() {
    let cfg = CString::new(TOY).unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { uavdc_env_new(cfg.as_ptr(), 1, &mut env) }, UavdcStatus::Ok);
    let mut dim = 0usize;
    assert_eq!(unsafe { uavdc_env_obs_dim(env, &mut dim) }, UavdcStatus::Ok);
    assert_eq!(dim, 13);
    let mut obs = vec![0.0; dim];
    assert_eq!(
        unsafe { uavdc_env_reset(env, obs.as_mut_ptr(), obs.len()) },
        UavdcStatus::Ok
    );
    let (mut reward, mut over, mut done) = (0.0, false, false);
    let mut steps = 0;
    while !over {
        // sweep the heading so the UAV wanders the whole area
        let heading = 0.7 * steps as f64 + 0.1;
        let status = unsafe {
            uavdc_env_step(
                env,
                heading,
                20.0,
                obs.as_mut_ptr(),
                obs.len(),
                &mut reward,
                &mut over,
                &mut done,
            )
        };
        assert_eq!(status, UavdcStatus::Ok, "{}", last_error());
        assert!(reward > -1.0);
        steps += 1;
    }
    assert!(steps <= 200);
    let status = unsafe {
        uavdc_env_step(
            env,
            1.0,
            1.0,
            obs.as_mut_ptr(),
            obs.len(),
            &mut reward,
            &mut over,
            &mut done,
        )
    };
    assert_eq!(status, UavdcStatus::EpisodeOver);
    let (mut xy, mut elapsed) = ([0.0; 2], 0.0);
    assert_eq!(
        unsafe { uavdc_env_position(env, xy.as_mut_ptr(), &mut elapsed) },
        UavdcStatus::Ok
    );
    assert!(elapsed > 0.0 && xy.iter().all(|c| (0.0..=300.0).contains(c)));
    unsafe { uavdc_env_free(env) };
}

#[test]
fn short_observation_buffer_is_refused_before_stepping() {
    let cfg = CString::new(TOY).unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { uavdc_env_new(cfg.as_ptr(), 1, &mut env) }, UavdcStatus::Ok);
    let mut obs = vec![0.0; 13];
    assert_eq!(
        unsafe { uavdc_env_reset(env, obs.as_mut_ptr(), 4) },
        UavdcStatus::BufferTooSmall
    );
    assert_eq!(unsafe { uavdc_env_reset(env, obs.as_mut_ptr(), 13) }, UavdcStatus::Ok);
    let (mut reward, mut over, mut done) = (0.0, false, false);
    let status = unsafe { uavdc_env_step(env, 1.0, 5.0, obs.as_mut_ptr(), 3, &mut reward, &mut over, &mut done) };
    assert_eq!(status, UavdcStatus::BufferTooSmall);
    let (mut xy, mut elapsed) = ([0.0; 2], 0.0);
    unsafe { uavdc_env_position(env, xy.as_mut_ptr(), &mut elapsed) };
    assert_eq!(elapsed, 0.0);
    unsafe { uavdc_env_free(env) };
}

#[test]
fn malformed_config_is_a_config_error() {
    let cfg = CString::new("[scenario]\nnum_nodez = 5\n").unwrap();
    let mut env = ptr::null_mut();
    assert_eq!(unsafe { uavdc_env_new(cfg.as_ptr(), 1, &mut env) }, UavdcStatus::Config);
    assert!(last_error().contains("num_nodez"));
}

#[test]
fn agent_round_trip_through_checkpoint() {
    use rand::SeedableRng;
    let dir = tempfile::tempdir().unwrap();
    let mut rng = uavdc::seeds::SimRng::seed_from_u64(4);
    let cfg = uavdc::td3::Td3Config {
        hidden_units: 16,
        ..Default::default()
    };
    let agent = uavdc::td3::Agent::new(5, 20.0, cfg, &mut rng).unwrap();
    agent.save(dir.path()).unwrap();

    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(unsafe { uavdc_agent_load(path.as_ptr(), &mut handle) }, UavdcStatus::Ok);
    let obs = vec![0.25; 13];
    let (mut heading, mut speed) = (0.0, 0.0);
    let status = unsafe { uavdc_agent_act(handle, obs.as_ptr(), obs.len(), &mut heading, &mut speed) };
    assert_eq!(status, UavdcStatus::Ok);
    let want = uavdc::env::Action::from_normalized(agent.raw_action(&obs).unwrap(), 20.0);
    assert_eq!((heading, speed), (want.heading, want.speed));
    let status = unsafe { uavdc_agent_act(handle, obs.as_ptr(), 7, &mut heading, &mut speed) };
    assert_eq!(status, UavdcStatus::InvalidArgument);
    unsafe { uavdc_agent_free(handle) };
}

#[test]
fn missing_checkpoint_has_its_own_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut handle = ptr::null_mut();
    assert_eq!(
        unsafe { uavdc_agent_load(path.as_ptr(), &mut handle) },
        UavdcStatus::MissingCheckpoint
    );
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/uavdc.h");
    for name in [
        "uavdc_last_error",
        "uavdc_propulsion_power",
        "uavdc_city_generate",
        "uavdc_city_load",
        "uavdc_city_free",
        "uavdc_city_is_los",
        "uavdc_env_new",
        "uavdc_env_step",
        "uavdc_env_free",
        "uavdc_agent_load",
        "uavdc_agent_act",
        "uavdc_agent_free",
        "UAVDC_STATUS_OK",
        "typedef struct UavdcEnv UavdcEnv",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/uavdc.h");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        let Ok(out) = std::process::Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header])
            .output()
        else {
            eprintln!("{compiler} not available; skipping");
            continue;
        };
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
