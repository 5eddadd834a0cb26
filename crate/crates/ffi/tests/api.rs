use std::ffi::CStr;
use std::ptr;

use ovslink_ffi::*;

fn rect_mask(w: u32, h: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> *mut OvsMask {
    let mut px = vec![0u8; (w * h) as usize];
    for y in y0..y1 {
        for x in x0..x1 {
            px[(y * w + x) as usize] = 1;
        }
    }
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { ovs_mask_from_dense(w, h, px.as_ptr(), &mut m) }, OvsStatus::Ok);
    m
}

fn last_error() -> String {
    let p = ovs_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn mask_roundtrip_and_iou() {
    let a = rect_mask(10, 8, 0, 0, 4, 4);
    let b = rect_mask(10, 8, 2, 0, 6, 4);
    unsafe {
        let mut iou = 0.0;
        assert_eq!(ovs_mask_iou(a, b, &mut iou), OvsStatus::Ok);
        assert!((iou - 8.0 / 24.0).abs() < 1e-12);

        let mut n = 0usize;
        assert_eq!(ovs_mask_rle(a, ptr::null_mut(), 0, &mut n), OvsStatus::BufferTooSmall);
        let mut runs = vec![0u32; n];
        assert_eq!(ovs_mask_rle(a, runs.as_mut_ptr(), n, &mut n), OvsStatus::Ok);
        assert_eq!(runs, vec![0, 4, 4, 4, 4, 4, 4, 4, 52]);

        let mut c = ptr::null_mut();
        assert_eq!(ovs_mask_from_rle(10, 8, runs.as_ptr(), n, &mut c), OvsStatus::Ok);
        let mut area = 0u64;
        assert_eq!(ovs_mask_area(c, &mut area), OvsStatus::Ok);
        assert_eq!(area, 16);
        let mut dense = vec![9u8; 80];
        assert_eq!(ovs_mask_to_dense(c, dense.as_mut_ptr(), 80), OvsStatus::Ok);
        assert_eq!(dense.iter().filter(|&&v| v == 1).count(), 16);
        assert_eq!(dense[3 * 10 + 3], 1);
        assert_eq!(dense[3 * 10 + 4], 0);
        ovs_mask_free(c);
    }
    unsafe {
        ovs_mask_free(a);
        ovs_mask_free(b);
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut m = ptr::null_mut();
        let counts = [5u32, 5];
        assert_eq!(ovs_mask_from_rle(4, 4, counts.as_ptr(), 2, &mut m), OvsStatus::InvalidMask);
        assert!(m.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(ovs_mask_area(ptr::null(), &mut 0), OvsStatus::NullPointer);
        assert!(last_error().contains("mask"));

        let a = rect_mask(4, 4, 0, 0, 2, 2);
        let b = rect_mask(5, 4, 0, 0, 2, 2);
        let mut iou = 0.0;
        assert_eq!(ovs_mask_iou(a, b, &mut iou), OvsStatus::DimensionMismatch);
        ovs_mask_free(a);
        ovs_mask_free(b);

        let mut e = ptr::null_mut();
        assert_eq!(ovs_engine_new(ptr::null(), &mut e), OvsStatus::Ok);
        let mut f = ptr::null_mut();
        assert_eq!(ovs_frame_new(&mut f), OvsStatus::Ok);
        let mut r = ptr::null_mut();
        assert_eq!(ovs_engine_step(e, 1, f, &mut r), OvsStatus::NotInitialized);
        ovs_frame_free(f);
        ovs_engine_free(e);

        // freeing null is a no-op
        ovs_mask_free(ptr::null_mut());
        ovs_result_free(ptr::null_mut());
    }
}

#[test]
fn bad_config_is_rejected() {
    unsafe {
        let mut cfg = std::mem::zeroed::<OvsConfig>();
        assert_eq!(ovs_config_default(&mut cfg), OvsStatus::Ok);
        assert_eq!(cfg.rho_reid, 2.3);
        assert_eq!(cfg.rho_iou, 0.3);
        cfg.quorum = 1.5;
        let mut e = ptr::null_mut();
        assert_eq!(ovs_engine_new(&cfg, &mut e), OvsStatus::InvalidArgument);
        assert!(e.is_null());
    }
}

#[test]
fn flow_warp_translates() {
    let (w, h) = (12u32, 6u32);
    let dx = vec![-3.0f32; (w * h) as usize];
    let dy = vec![0.0f32; (w * h) as usize];
    unsafe {
        let mut flow = ptr::null_mut();
        assert_eq!(ovs_flow_new(w, h, dx.as_ptr(), dy.as_ptr(), &mut flow), OvsStatus::Ok);
        let m = rect_mask(w, h, 1, 1, 4, 3);
        let mut out = ptr::null_mut();
        assert_eq!(ovs_flow_warp(flow, m, &mut out), OvsStatus::Ok);
        let expected = rect_mask(w, h, 4, 1, 7, 3);
        let mut iou = 0.0;
        assert_eq!(ovs_mask_iou(out, expected, &mut iou), OvsStatus::Ok);
        assert_eq!(iou, 1.0);
        for p in [m, out, expected] {
            ovs_mask_free(p);
        }
        ovs_flow_free(flow);
    }
}

#[test]
fn engine_tracks_through_frames() {
    let dim = ovs_embedding_dim();
    let emb = |k: usize| {
        let mut v = vec![0.0f32; dim];
        v[k] = 3.0;
        v
    };
    unsafe {
        let mut e = ptr::null_mut();
        assert_eq!(ovs_engine_new(ptr::null(), &mut e), OvsStatus::Ok);
        let first = rect_mask(40, 30, 2, 2, 12, 12);
        assert_eq!(ovs_engine_add_instance(e, 7, first), OvsStatus::Ok);

        let mut frame = ptr::null_mut();
        assert_eq!(ovs_frame_new(&mut frame), OvsStatus::Ok);
        let e0 = emb(0);
        let bbox = [2.0, 2.0, 12.0, 12.0];
        assert_eq!(
            ovs_frame_add_candidate(frame, bbox.as_ptr(), 0.9, first, e0.as_ptr(), dim),
            OvsStatus::Ok
        );
        let mut r = ptr::null_mut();
        assert_eq!(ovs_engine_init(e, 0, frame, &mut r), OvsStatus::Ok);
        let mut n = 0;
        assert_eq!(ovs_result_len(r, &mut n), OvsStatus::Ok);
        assert_eq!(n, 1);
        let mut inst = std::mem::zeroed::<OvsInstance>();
        assert_eq!(ovs_result_instance(r, 0, &mut inst), OvsStatus::Ok);
        assert_eq!(inst.id, 7);
        assert_eq!(inst.path, OvsPath::Iou);
        assert_eq!(inst.area, 100);
        assert_eq!(ovs_result_instance(r, 1, &mut inst), OvsStatus::OutOfRange);
        ovs_result_free(r);

        // shifted by one pixel: IoU path
        assert_eq!(ovs_frame_clear(frame), OvsStatus::Ok);
        let moved = rect_mask(40, 30, 3, 2, 13, 12);
        let b1 = [3.0, 2.0, 13.0, 12.0];
        assert_eq!(
            ovs_frame_add_candidate(frame, b1.as_ptr(), 0.9, moved, e0.as_ptr(), dim),
            OvsStatus::Ok
        );
        assert_eq!(ovs_engine_step(e, 1, frame, &mut r), OvsStatus::Ok);
        assert_eq!(ovs_result_instance(r, 0, &mut inst), OvsStatus::Ok);
        assert_eq!(inst.path, OvsPath::Iou);
        assert_eq!(inst.matched_candidate, 0);
        ovs_result_free(r);

        // nothing detected: flow path keeps the last mask
        assert_eq!(ovs_frame_clear(frame), OvsStatus::Ok);
        assert_eq!(ovs_engine_step(e, 2, frame, &mut r), OvsStatus::Ok);
        assert_eq!(ovs_result_instance(r, 0, &mut inst), OvsStatus::Ok);
        assert_eq!(inst.path, OvsPath::Flow);
        assert_eq!(inst.matched_candidate, -1);
        assert!(inst.match_value.is_nan());
        let mut m = ptr::null_mut();
        assert_eq!(ovs_result_mask(r, 0, &mut m), OvsStatus::Ok);
        let mut iou = 0.0;
        assert_eq!(ovs_mask_iou(m, moved, &mut iou), OvsStatus::Ok);
        assert_eq!(iou, 1.0);
        ovs_mask_free(m);
        ovs_result_free(r);

        // far away, same embedding: recovered by Re-ID
        assert_eq!(ovs_frame_clear(frame), OvsStatus::Ok);
        let far = rect_mask(40, 30, 28, 18, 38, 28);
        let b2 = [28.0, 18.0, 38.0, 28.0];
        assert_eq!(
            ovs_frame_add_candidate(frame, b2.as_ptr(), 0.9, far, e0.as_ptr(), dim),
            OvsStatus::Ok
        );
        assert_eq!(ovs_engine_step(e, 3, frame, &mut r), OvsStatus::Ok);
        assert_eq!(ovs_result_instance(r, 0, &mut inst), OvsStatus::Ok);
        assert_eq!(inst.path, OvsPath::Reid);
        assert_eq!(inst.match_value, 0.0);
        ovs_result_free(r);

        // frame ids must increase
        assert_eq!(ovs_engine_step(e, 3, frame, &mut r), OvsStatus::InvalidArgument);

        for p in [first, moved, far] {
            ovs_mask_free(p);
        }
        ovs_frame_free(frame);
        ovs_engine_free(e);
    }
}

#[test]
fn wrong_embedding_length_is_rejected() {
    unsafe {
        let m = rect_mask(8, 8, 0, 0, 2, 2);
        let mut f = ptr::null_mut();
        assert_eq!(ovs_frame_new(&mut f), OvsStatus::Ok);
        let v = [0.0f32; 3];
        let b = [0.0, 0.0, 2.0, 2.0];
        assert_eq!(
            ovs_frame_add_candidate(f, b.as_ptr(), 0.9, m, v.as_ptr(), 3),
            OvsStatus::InvalidArgument
        );
        let mut n = 9;
        assert_eq!(ovs_frame_len(f, &mut n), OvsStatus::Ok);
        assert_eq!(n, 0);
        ovs_frame_free(f);
        ovs_mask_free(m);
    }
}
