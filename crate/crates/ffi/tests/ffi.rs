use std::ffi::{CStr, CString};
use std::ptr;

use trackgnn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tg_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn nominal() -> *mut TgGraph {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { tg_graph_generate(3, 0, &mut g) }, TgStatus::Ok);
    g
}

#[test]
fn generate_validate_and_count() {
    let g = nominal();
    unsafe {
        assert_eq!(tg_graph_num_nodes(g), 739);
        assert_eq!(tg_graph_num_edges(g), 1252);
        let mut n = 99;
        assert_eq!(tg_graph_validate(g, &mut n), TgStatus::Ok);
        assert_eq!(n, 0);
        assert_eq!(last_error(), "");
        tg_graph_free(g);
        tg_graph_free(ptr::null_mut());
        assert_eq!(tg_graph_num_nodes(ptr::null()), 0);
    }
}

#[test]
fn infer_matches_partitioned() {
    let g = nominal();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(tg_params_random(7, &mut p), TgStatus::Ok);
        let n = tg_graph_num_edges(g);
        let (mut a, mut b, mut r) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(
            tg_infer(g, p, TgMode::Fixed, 1, a.as_mut_ptr(), n),
            TgStatus::Ok
        );
        assert_eq!(
            tg_infer_partitioned(g, p, TgMode::Fixed, 1, b.as_mut_ptr(), n),
            TgStatus::Ok
        );
        assert_eq!(
            tg_infer(g, p, TgMode::Real, 1, r.as_mut_ptr(), n),
            TgStatus::Ok
        );
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|v| (v * 128.0).fract() == 0.0 && (0.0..=1.0).contains(v)));
        assert!(a.iter().zip(&r).all(|(x, y)| (x - y).abs() <= 0.05));
        assert_eq!(
            tg_infer(g, p, TgMode::Fixed, 1, a.as_mut_ptr(), n - 1),
            TgStatus::BufferTooSmall
        );
        assert!(last_error().contains("1252"));
        assert_eq!(
            tg_infer(g, p, TgMode::Fixed, 0, a.as_mut_ptr(), n),
            TgStatus::InvalidArgument
        );
        assert_eq!(
            tg_infer(ptr::null(), p, TgMode::Fixed, 1, a.as_mut_ptr(), n),
            TgStatus::NullPointer
        );
        tg_params_free(p);
        tg_graph_free(g);
    }
}

#[test]
fn file_round_trip_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let file = CString::new(dir.path().join("g.csv").to_str().unwrap()).unwrap();
    let g = nominal();
    unsafe {
        assert_eq!(tg_graph_save(g, file.as_ptr()), TgStatus::Ok);
        let mut h = ptr::null_mut();
        assert_eq!(tg_graph_load(file.as_ptr(), &mut h), TgStatus::Ok);
        assert_eq!(tg_graph_num_edges(h), 1252);
        tg_graph_free(h);

        let missing = CString::new(dir.path().join("none.csv").to_str().unwrap()).unwrap();
        assert_eq!(tg_graph_load(missing.as_ptr(), &mut h), TgStatus::IoError);
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "[nodes] dim=1\nid,layer,f0\n0,B1,1\n1,B3,2\n[edges] dim=1\nid,sender,receiver,f0\n0,0,7,0\n").unwrap();
        let bad = CString::new(bad.to_str().unwrap()).unwrap();
        assert_eq!(tg_graph_load(bad.as_ptr(), &mut h), TgStatus::ParseError);
        assert!(last_error().starts_with("line 7"), "{}", last_error());
        std::fs::write(dir.path().join("bad.csv"), "[nodes] dim=3\nid,layer,f0,f1,f2\n0,B1,1,0,0\n1,B3,2,0,0\n[edges] dim=4\nid,sender,receiver,f0,f1,f2,f3\n0,0,1,0,0,0,0\n").unwrap();
        assert_eq!(tg_graph_load(bad.as_ptr(), &mut h), TgStatus::Ok);
        let mut n = 0;
        assert_eq!(tg_graph_validate(h, &mut n), TgStatus::InvalidGraph);
        assert_eq!(n, 1);
        assert!(last_error().contains("B1->B3"));
        let mut p = ptr::null_mut();
        assert_eq!(tg_params_random(1, &mut p), TgStatus::Ok);
        let mut s = [0.0];
        assert_eq!(
            tg_infer(h, p, TgMode::Fixed, 1, s.as_mut_ptr(), 1),
            TgStatus::InvalidGraph
        );
        tg_params_free(p);
        tg_graph_free(h);
        assert_eq!(tg_graph_load(ptr::null(), &mut h), TgStatus::NullPointer);
        tg_graph_free(g);
    }
}

#[test]
fn simulate_and_allocate() {
    let mut s = TgSimSummary::default();
    unsafe {
        let mut rates = Vec::new();
        for v in [TgVariant::Mpa, TgVariant::Geo, TgVariant::GeoRsrc] {
            assert_eq!(
                tg_simulate(v, ptr::null(), 0, 200.0, 1, &mut s),
                TgStatus::Ok
            );
            rates.push((s.throughput_mgps, s.meets_requirement));
        }
        assert!(rates[0].0 < rates[1].0 && rates[1].0 < rates[2].0);
        assert_eq!(rates[0].1, 0);
        assert_eq!(rates[2].1, 1);
        assert_eq!(
            tg_simulate(TgVariant::Geo, ptr::null(), 1, -1.0, 1, &mut s),
            TgStatus::SimulationError
        );
        assert_eq!(
            tg_simulate(TgVariant::Geo, ptr::null(), 1, 200.0, 1, ptr::null_mut()),
            TgStatus::NullPointer
        );

        let (n, e) = ([138usize, 62], [277usize, 77, 87]);
        let mut out = [0u32; 5];
        assert_eq!(
            tg_allocate_data_aware(n.as_ptr(), e.as_ptr(), out.as_mut_ptr()),
            TgStatus::Ok
        );
        assert_eq!(out, [2, 1, 4, 1, 1]);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/trackgnn.h"))
        .unwrap();
    for f in [
        "tg_last_error_message",
        "tg_version",
        "tg_graph_load",
        "tg_graph_save",
        "tg_graph_generate",
        "tg_graph_free",
        "tg_graph_validate",
        "tg_params_random",
        "tg_params_load",
        "tg_params_free",
        "tg_infer",
        "tg_infer_partitioned",
        "tg_simulate",
        "tg_allocate_data_aware",
        "typedef struct TgGraph TgGraph",
        "TG_STATUS_INVALID_GRAPH = 4",
    ] {
        assert!(h.contains(f), "{f} missing from header");
    }
    assert_eq!(
        unsafe { CStr::from_ptr(tg_version()) }.to_str().unwrap(),
        env!("CARGO_PKG_VERSION")
    );
}
