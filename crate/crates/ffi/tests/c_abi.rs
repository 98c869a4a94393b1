//! The generated header compiles as C, and handles round-trip through the
//! exported functions.

use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use cpmp_dlts::nn::{save_weights, Architecture, Head, Network};
use cpmp_dlts_ffi::*;

const PROGRAM: &str = r#"
#include "cpmp_dlts.h"
int main(void) {
    uint16_t grid[6] = {1, 2, 0, 0, 0, 0};
    CpmpBay *bay = NULL;
    CpmpResult *res = NULL;
    CpmpSearchConfig config = cpmp_search_config_default();
    if (cpmp_bay_new(3, 2, grid, &bay) != CPMP_STATUS_OK) return 1;
    if (cpmp_search(bay, NULL, NULL, &config, &res) != CPMP_STATUS_OK) return 2;
    cpmp_result_free(res);
    cpmp_bay_free(bay);
    return 0;
}
"#;

#[test]
fn header_is_valid_c() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .args(["-std=c11", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .expect("a C compiler is available as `cc`");
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn network_guided_search_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let arch = Architecture::uniform(1, 4, 2, 8).unwrap();
    let weights = dir.path().join("p.bin");
    save_weights(
        &Network::new(3, 4, Head::Policy, 4.0, &arch, 1).unwrap(),
        &weights,
    )
    .unwrap();
    let value_path = dir.path().join("v.bin");
    save_weights(
        &Network::new(3, 4, Head::Value, 4.0, &arch, 2).unwrap(),
        &value_path,
    )
    .unwrap();

    let text = CString::new("CPMP v1\n3 4\n3 1 2 3\n1 4\n0\n").unwrap();
    unsafe {
        let mut bay = ptr::null_mut();
        assert_eq!(cpmp_bay_parse(text.as_ptr(), &mut bay), CpmpStatus::Ok);
        assert_eq!((cpmp_bay_stacks(bay), cpmp_bay_tiers(bay)), (3, 4));

        let mut policy = ptr::null_mut();
        let mut value = ptr::null_mut();
        let p = CString::new(weights.to_str().unwrap()).unwrap();
        let v = CString::new(value_path.to_str().unwrap()).unwrap();
        assert_eq!(cpmp_network_load(p.as_ptr(), &mut policy), CpmpStatus::Ok);
        assert_eq!(cpmp_network_load(v.as_ptr(), &mut value), CpmpStatus::Ok);

        let mut exact = ptr::null_mut();
        assert_eq!(cpmp_oracle_solve(bay, 10.0, &mut exact), CpmpStatus::Ok);

        for strategy in [CpmpStrategy::Dfs, CpmpStrategy::Lds, CpmpStrategy::Wbs] {
            let mut config = cpmp_search_config_default();
            config.strategy = strategy;
            config.p = 1.0;
            config.pruning = CpmpPruning::Constant;
            config.d = 0.0;
            config.time_limit = 0.0;
            let mut res = ptr::null_mut();
            assert_eq!(
                cpmp_search(bay, policy, value, &config, &mut res),
                CpmpStatus::Ok
            );
            assert!(cpmp_result_complete(res));
            assert!(cpmp_result_nodes_opened(res) > 0);
            assert_eq!(cpmp_result_len(res), cpmp_result_len(exact), "{strategy:?}");
            cpmp_result_free(res);
        }

        // the policy head cannot stand in for a value network
        let config = cpmp_search_config_default();
        let mut res = ptr::null_mut();
        assert_eq!(
            cpmp_search(bay, policy, policy, &config, &mut res),
            CpmpStatus::ShapeMismatch
        );
        assert!(res.is_null());

        let missing = CString::new(dir.path().join("nope.bin").to_str().unwrap()).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(
            cpmp_network_load(missing.as_ptr(), &mut none),
            CpmpStatus::Io
        );
        let msg = CStr::from_ptr(cpmp_last_error_message()).to_string_lossy();
        assert!(!msg.is_empty());

        assert!(!CStr::from_ptr(cpmp_version()).to_bytes().is_empty());
        cpmp_result_free(exact);
        cpmp_network_free(policy);
        cpmp_network_free(value);
        cpmp_bay_free(bay);
    }
}
