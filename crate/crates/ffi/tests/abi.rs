use std::ffi::{CStr, CString};
use std::ptr;

use hexcryst_ffi::*;

fn last_error() -> String {
    let p = hc_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn named_domain_area_and_free() {
    let name = CString::new("square").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hc_domain_named(name.as_ptr(), 0.5, &mut d) }, HcStatus::Ok);
    let v = unsafe { hc_domain_v_lambda(d) };
    let expected = (2.0 * hc_c6() / 0.5f64).powf(2.0 / 3.0);
    assert!((v - expected).abs() < 1e-12 * expected);
    unsafe { hc_domain_free(d) };
    unsafe { hc_domain_free(ptr::null_mut()) };
}

#[test]
fn null_and_bad_inputs_report_codes() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hc_domain_named(ptr::null(), 1.0, &mut d) }, HcStatus::NullPointer);
    assert!(last_error().contains("name"));
    let name = CString::new("dodecahedron").unwrap();
    assert_ne!(unsafe { hc_domain_named(name.as_ptr(), 1.0, &mut d) }, HcStatus::Ok);
    assert!(d.is_null());
    let square = CString::new("square").unwrap();
    assert_eq!(unsafe { hc_domain_named(square.as_ptr(), -1.0, &mut d) }, HcStatus::InvalidDomain);
    // clockwise-degenerate polygon: three collinear points
    let xy = [0.0, 0.0, 1.0, 0.0, 2.0, 0.0];
    assert_eq!(unsafe { hc_domain_polygon(xy.as_ptr(), 3, 1.0, &mut d) }, HcStatus::InvalidDomain);
    assert!(unsafe { hc_domain_v_lambda(ptr::null()) }.is_nan());
    assert_eq!(unsafe { hc_result_converged(ptr::null()) }, -1);
}

#[test]
fn energy_of_a_lattice_on_the_commensurate_torus() {
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hc_domain_commensurate_torus(3, 3, &mut d) }, HcStatus::Ok);
    let v = unsafe { hc_domain_v_lambda(d) };
    // 18 sites of the triangular lattice with unit-area cells
    let a = (2.0 / 3f64.sqrt()).sqrt();
    let h = a * 3f64.sqrt();
    let mut xy = Vec::new();
    for j in 0..6 {
        for i in 0..3 {
            let x = a * (i as f64 + if j % 2 == 1 { 0.5 } else { 0.0 } + 0.25);
            xy.extend([x, j as f64 * h / 2.0 + 0.1]);
        }
    }
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { hc_measure_new(d, xy.as_ptr(), ptr::null(), 18, &mut m) }, HcStatus::Ok);
    let mut e = HcEnergy::default();
    assert_eq!(unsafe { hc_energy(d, m, 1e-10, &mut e) }, HcStatus::Ok);
    assert!((e.v_lambda - v).abs() < 1e-12);
    assert!((e.total - 3.0 * hc_c6() * v).abs() < 1e-8 * v, "{e:?}");
    assert!(e.defect.abs() < 1e-8);
    unsafe {
        hc_measure_free(m);
        hc_domain_free(d);
    }
}

#[test]
fn mismatched_mass_count_is_rejected() {
    let name = CString::new("regular-hexagon").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hc_domain_named(name.as_ptr(), 1.0, &mut d) }, HcStatus::Ok);
    let xy = [0.0, 0.0, 0.1, 0.0];
    let masses = [-1.0, 1.0];
    let mut m = ptr::null_mut();
    let s = unsafe { hc_measure_new(d, xy.as_ptr(), masses.as_ptr(), 2, &mut m) };
    assert_eq!(s, HcStatus::InvalidMeasure, "{}", last_error());
    unsafe { hc_domain_free(d) };
}

#[test]
fn minimize_and_read_back() {
    let name = CString::new("square").unwrap();
    let mut d = ptr::null_mut();
    assert_eq!(unsafe { hc_domain_named(name.as_ptr(), 0.2, &mut d) }, HcStatus::Ok);
    let v = unsafe { hc_domain_v_lambda(d) };
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { hc_minimize(d, 4, 7, 500, &mut r) }, HcStatus::Ok, "{}", last_error());
    let n = unsafe { hc_result_len(r) };
    assert!((1..=4).contains(&n));
    let mut small = [0.0; 1];
    assert_eq!(unsafe { hc_result_points(r, small.as_mut_ptr(), 1) }, HcStatus::BufferTooSmall);
    let mut xy = vec![0.0; 2 * n];
    let mut mass = vec![0.0; n];
    assert_eq!(unsafe { hc_result_points(r, xy.as_mut_ptr(), xy.len()) }, HcStatus::Ok);
    assert_eq!(unsafe { hc_result_masses(r, mass.as_mut_ptr(), n) }, HcStatus::Ok);
    assert!((mass.iter().sum::<f64>() - v).abs() < 1e-9 * v);
    let mut e = HcEnergy::default();
    assert_eq!(unsafe { hc_result_energy(r, &mut e) }, HcStatus::Ok);
    assert!(e.total >= 2.0 * hc_c6() * v.sqrt());
    unsafe {
        hc_result_free(r);
        hc_domain_free(d);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hexcryst.h")).unwrap();
    for f in [
        "hc_last_error",
        "hc_domain_named",
        "hc_domain_polygon",
        "hc_domain_commensurate_torus",
        "hc_domain_v_lambda",
        "hc_domain_free",
        "hc_measure_new",
        "hc_measure_free",
        "hc_energy",
        "hc_minimize",
        "hc_result_len",
        "hc_result_converged",
        "hc_result_points",
        "hc_result_masses",
        "hc_result_energy",
        "hc_result_free",
        "hc_certify",
        "hc_c6",
        "typedef struct HcDomain HcDomain",
    ] {
        assert!(header.contains(f), "{f} missing from header");
    }
}

#[test]
fn certificates_pass_through_the_abi() {
    let mut ok = -1;
    assert_eq!(unsafe { hc_certify(&mut ok) }, HcStatus::Ok);
    assert_eq!(ok, 1);
    assert_eq!(unsafe { hc_certify(ptr::null_mut()) }, HcStatus::NullPointer);
}
