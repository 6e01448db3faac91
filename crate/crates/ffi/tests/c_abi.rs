use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use catalytic_tree_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { ct_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn generate_solve_and_free() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(ct_instance_generate(2, 2, 2, 11, &mut inst), CtStatus::Ok);
        let mut brute = 0;
        assert_eq!(ct_eval_bruteforce(inst, &mut brute), CtStatus::Ok);
        let primes = [3u64, 5];
        for tape in [CtTape::Zeros, CtTape::Max, CtTape::Alternating, CtTape::Random] {
            let mut out = CtOutcome::default();
            assert_eq!(ct_eval_catalytic(inst, primes.as_ptr(), 2, tape, 4, &mut out), CtStatus::Ok);
            assert_eq!(out.value, brute);
            assert_eq!(out.restored, 1);
            assert_eq!(out.oracle_calls, 2 * (68 + 68 * 68));
            assert!(out.peak_free_bits > 0 && out.catalytic_bits > 0);
        }
        ct_instance_free(inst);
    }
}

#[test]
fn serialize_parse_round_trip() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(ct_instance_generate(1, 1, 3, 2, &mut inst), CtStatus::Ok);
        let mut len = 0;
        assert_eq!(ct_instance_serialize(inst, ptr::null_mut(), 0, &mut len), CtStatus::BufferTooSmall);
        let mut buf = vec![0 as c_char; len + 1];
        assert_eq!(ct_instance_serialize(inst, buf.as_mut_ptr(), buf.len(), &mut len), CtStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(ct_instance_parse(buf.as_ptr(), &mut back), CtStatus::Ok);
        let (mut a, mut b) = (0, 0);
        ct_eval_bruteforce(inst, &mut a);
        ct_eval_bruteforce(back, &mut b);
        assert_eq!(a, b);
        // fanin 3 goes through the reduction
        let mut out = CtOutcome::default();
        assert_eq!(ct_eval_catalytic(back, [3u64].as_ptr(), 1, CtTape::Random, 0, &mut out), CtStatus::Ok);
        assert_eq!(out.value, a);
        ct_instance_free(inst);
        ct_instance_free(back);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(ct_instance_generate(1, 1, 2, 0, ptr::null_mut()), CtStatus::NullPointer);
        let bad = CString::new("treeeval v1 h=1 ell=1 r=2\nleaf 0 zz\n").unwrap();
        assert_eq!(ct_instance_parse(bad.as_ptr(), &mut inst), CtStatus::Parse);
        assert!(last_error().contains("line 2"), "{}", last_error());
        assert!(inst.is_null());
        let mut fam = ptr::null_mut();
        assert_eq!(ct_family_new([4u64].as_ptr(), 1, 1, &mut fam), CtStatus::InvalidArgument);
        assert!(!last_error().is_empty());
        ct_instance_free(ptr::null_mut());
        ct_family_free(ptr::null_mut());
    }
}

#[test]
fn family_shape_and_verify() {
    unsafe {
        let mut fam = ptr::null_mut();
        assert_eq!(ct_family_new([3u64, 5].as_ptr(), 2, 2, &mut fam), CtStatus::Ok);
        let (mut n, mut d) = (0, 0);
        assert_eq!(ct_family_shape(fam, &mut n, &mut d), CtStatus::Ok);
        assert_eq!((n, d), (20, 65));
        let mut ok = 0;
        assert_eq!(ct_family_verify(fam, &mut ok), CtStatus::Ok);
        assert_eq!(ok, 1);
        ct_family_free(fam);
    }
}

#[test]
fn header_compiles_as_c() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = dir.join("include/catalytic_tree.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ct_instance_generate", "ct_eval_catalytic", "ct_last_error", "CT_STATUS_NOT_RESTORED", "CtOutcome"] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use_header.c");
    std::fs::write(
        &src,
        r#"#include "catalytic_tree.h"
int main(void) {
    CtInstance *inst = NULL;
    CtOutcome out;
    uint64_t primes[2] = {3, 5};
    if (ct_instance_generate(2, 2, 2, 7, &inst) != CT_STATUS_OK) return 1;
    CtStatus s = ct_eval_catalytic(inst, primes, 2, CT_TAPE_RANDOM, 1, &out);
    ct_instance_free(inst);
    return s == CT_STATUS_OK && out.restored ? 0 : 1;
}
"#,
    )
    .unwrap();
    let status = match Command::new("cc")
        .arg("-fsyntax-only")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("skipping C compile check: cc unavailable ({e})");
            return;
        }
    };
    assert!(status.success());
}
