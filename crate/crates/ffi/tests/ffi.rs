use std::ffi::CStr;
use std::ptr;

use vmac_ffi::*;

fn last_error() -> String {
    let p = vmac_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn water_fill_matches_hand_solution() {
    let noises = [1.0, 2.0, 4.0];
    let mut powers = [0.0; 3];
    let mut level = 0.0;
    let st = unsafe { vmac_water_fill(noises.as_ptr(), 3, 3.0, powers.as_mut_ptr(), &mut level) };
    assert_eq!(st, VmacStatus::Ok);
    assert!((level - 3.0).abs() < 1e-12);
    assert!((powers[0] - 2.0).abs() < 1e-12);
    assert!((powers[1] - 1.0).abs() < 1e-12);
    assert_eq!(powers[2], 0.0);
}

#[test]
fn errors_map_to_status_codes() {
    let noises = [1.0];
    let mut powers = [0.0];
    let mut level = 0.0;
    let st = unsafe { vmac_water_fill(noises.as_ptr(), 1, -1.0, powers.as_mut_ptr(), &mut level) };
    assert_eq!(st, VmacStatus::NonpositiveBudget);
    assert!(last_error().contains("-1"));

    let st = unsafe { vmac_water_fill(ptr::null(), 0, 1.0, ptr::null_mut(), &mut level) };
    assert_eq!(st, VmacStatus::EmptyCandidateSet);

    let st = unsafe { vmac_water_fill(noises.as_ptr(), 1, 1.0, powers.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(st, VmacStatus::NullPointer);
    assert!(last_error().contains("water_level"));

    let mut cfg = ptr::null_mut();
    let st = unsafe { vmac_config_new(0, 4, 10.0, &mut cfg) };
    assert_eq!(st, VmacStatus::InvalidArgument);
    assert!(cfg.is_null());
}

#[test]
fn simulate_through_handles() {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(vmac_config_new(3, 8, 10.0, &mut cfg), VmacStatus::Ok);
        let mut gains = ptr::null_mut();
        assert_eq!(vmac_gains_sample(cfg, 7, 0, &mut gains), VmacStatus::Ok);
        let mut g00 = 0.0;
        assert_eq!(vmac_gains_get(gains, 0, 0, &mut g00), VmacStatus::Ok);
        assert!(g00 > 0.0);
        assert_eq!(vmac_gains_get(gains, 3, 0, &mut g00), VmacStatus::InvalidArgument);

        for scenario in [VmacScenario::Partition, VmacScenario::Sharing] {
            let mut outcome = ptr::null_mut();
            let st = vmac_run(cfg, gains, scenario, 0, VmacBudget::Accessible, &mut outcome);
            assert_eq!(st, VmacStatus::Ok);
            assert_eq!(vmac_outcome_num_transmitters(outcome), 3);
            let mut nse = 0.0;
            assert_eq!(vmac_outcome_nse(outcome, &mut nse), VmacStatus::Ok);
            let mut sum = 0.0;
            for k in 0..3 {
                let mut s = std::mem::zeroed::<VmacTransmitterStats>();
                assert_eq!(vmac_outcome_transmitter(outcome, k, &mut s), VmacStatus::Ok);
                sum += s.spectral_efficiency;
                let mut p = [0.0; 8];
                assert_eq!(vmac_outcome_powers(outcome, k, p.as_mut_ptr(), 8), VmacStatus::Ok);
                assert!(p.iter().all(|&x| x >= 0.0));
            }
            assert!((sum - nse).abs() < 1e-12);
            let mut p = [0.0; 4];
            assert_eq!(
                vmac_outcome_powers(outcome, 0, p.as_mut_ptr(), 4),
                VmacStatus::InvalidArgument
            );
            vmac_outcome_free(outcome);
        }

        let mut outcome = ptr::null_mut();
        let st = vmac_run(cfg, gains, VmacScenario::Partition, 9, VmacBudget::FullBand, &mut outcome);
        assert_eq!(st, VmacStatus::InvalidArgument);
        vmac_gains_free(gains);
        vmac_config_free(cfg);
        vmac_config_free(ptr::null_mut());
    }
}

#[test]
fn gains_from_array_round_trip() {
    let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(vmac_gains_from_array(2, 3, data.as_ptr(), &mut g), VmacStatus::Ok);
        let mut v = 0.0;
        assert_eq!(vmac_gains_get(g, 1, 2, &mut v), VmacStatus::Ok);
        assert_eq!(v, 6.0);
        vmac_gains_free(g);
        let bad = [1.0, -1.0];
        assert_eq!(
            vmac_gains_from_array(1, 2, bad.as_ptr(), &mut g),
            VmacStatus::InvalidArgument
        );
    }
}

#[test]
fn asymptotics_and_optimal_cap() {
    unsafe {
        let mut a = std::mem::zeroed::<VmacPartitionAsymptotics>();
        assert_eq!(vmac_partition_asymptotics(1, 10.0, &mut a), VmacStatus::Ok);
        assert!((a.omega - (-1.0 / a.beta_star).exp_m1().abs()).abs() < 1e-12);
        let mut l = 0usize;
        assert_eq!(vmac_optimal_bl(25, 50, 10.0, &mut l), VmacStatus::Ok);
        assert_eq!(l, 3);
        let mut levels = [0.0; 2];
        let mut rates = [0.0; 2];
        assert_eq!(
            vmac_sharing_chain(2, 10.0, levels.as_mut_ptr(), rates.as_mut_ptr()),
            VmacStatus::Ok
        );
        assert!((levels[0] - a.beta_star).abs() < 1e-9 * a.beta_star);
        assert!(levels[1] >= levels[0]);
        assert!(rates[1] <= rates[0]);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(vmac_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
