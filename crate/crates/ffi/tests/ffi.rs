use std::ffi::c_char;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sojourn_ffi::*;

fn two_tier() -> *mut SojournNetwork {
    let tiers = [
        SojournTier {
            intensity: 0.002,
            power: 1.0,
            bias: 1.0,
        },
        SojournTier {
            intensity: 0.005,
            power: 2.0,
            bias: 1.0,
        },
    ];
    let mut net = ptr::null_mut();
    assert_eq!(
        unsafe { sojourn_network_new(tiers.as_ptr(), 2, 4.0, &mut net) },
        SojournStatus::Ok
    );
    net
}

const MOB: SojournMobility = SojournMobility {
    velocity: 5.0,
    ttt: 0.0,
    t_p: 0.0,
};

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    let n = unsafe { sojourn_last_error(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf.iter().take(n.min(255)).map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

#[test]
fn rates_match_the_library() {
    let net = two_tier();
    let mut h = [0.0; 2];
    for (k, slot) in h.iter_mut().enumerate() {
        assert_eq!(unsafe { sojourn_handoff_rate(net, &MOB, k, slot) }, SojournStatus::Ok);
    }
    assert!((h[0] - 0.126592).abs() < 1e-5 && (h[1] - 0.406934).abs() < 1e-5);
    let mut total = 0.0;
    assert_eq!(unsafe { sojourn_total_handoff_rate(net, &MOB, &mut total) }, SojournStatus::Ok);
    assert!((total - h[0] - h[1]).abs() < 1e-12);
    let mut p = 0.0;
    let mut s = 0.0;
    unsafe {
        sojourn_association_prob(net, 1, &mut p);
        sojourn_mean_sojourn(net, &MOB, 1, &mut s);
    }
    assert!((s * h[1] - p).abs() < 1e-9);
    unsafe { sojourn_network_free(net) };
}

#[test]
fn errors_are_reported_as_codes() {
    let mut net = ptr::null_mut();
    let tier = SojournTier {
        intensity: 0.01,
        power: 1.0,
        bias: 1.0,
    };
    let status = unsafe { sojourn_network_new(&tier, 1, 1.5, &mut net) };
    assert_eq!(status, SojournStatus::InvalidParameter);
    assert!(net.is_null());
    assert!(last_error().contains("alpha"));

    let status = unsafe { sojourn_network_new(ptr::null(), 1, 4.0, &mut net) };
    assert_eq!(status, SojournStatus::NullPointer);

    let net = two_tier();
    let mut x = 0.0;
    assert_eq!(unsafe { sojourn_handoff_rate(net, &MOB, 2, &mut x) }, SojournStatus::InvalidParameter);
    assert_eq!(unsafe { sojourn_handoff_rate(net, ptr::null(), 0, &mut x) }, SojournStatus::NullPointer);
    let slow = SojournMobility { velocity: -1.0, ..MOB };
    assert_eq!(unsafe { sojourn_handoff_rate(net, &slow, 0, &mut x) }, SojournStatus::InvalidParameter);
    let mut m = [SojournTierMetrics::default(); 1];
    assert_eq!(unsafe { sojourn_metrics(net, &MOB, m.as_mut_ptr(), 1) }, SojournStatus::BufferTooSmall);
    assert_eq!(unsafe { sojourn_swept_area(-1.0, 0.0, 1.0, 1.0, &mut x) }, SojournStatus::InvalidParameter);
    unsafe { sojourn_network_free(net) };
}

#[test]
fn curves_and_simulation() {
    let net = two_tier();
    let t = [0.0, 0.5, 2.0];
    let mut a = [0.0; 3];
    let mut s = [0.0; 3];
    unsafe {
        assert_eq!(sojourn_ccdf_initial(net, &MOB, 0, t.as_ptr(), 3, a.as_mut_ptr()), SojournStatus::Ok);
        assert_eq!(sojourn_ccdf_sojourn(net, &MOB, 0, t.as_ptr(), 3, s.as_mut_ptr()), SojournStatus::Ok);
    }
    assert_eq!(a[0], 1.0);
    assert_eq!(s[0], 1.0);
    assert!(a[2] < a[1] && s[2] < s[1]);

    let mut sim = ptr::null_mut();
    let grid = [0.5, 2.0];
    let status = unsafe { sojourn_simulate(net, &MOB, 3, 300, 0.0, grid.as_ptr(), 2, &mut sim) };
    assert_eq!(status, SojournStatus::Ok);
    let mut e = SojournEstimate::default();
    assert_eq!(unsafe { sojourn_simulation_mean_sojourn(sim, 0, &mut e) }, SojournStatus::Ok);
    assert!(e.value > 0.0 && e.stderr > 0.0);
    let mut v = [0.0; 2];
    let mut se = [0.0; 2];
    unsafe {
        assert_eq!(
            sojourn_simulation_curve(sim, SojournCurve::Initial, 1, v.as_mut_ptr(), se.as_mut_ptr(), 2),
            SojournStatus::Ok
        );
        assert_eq!(
            sojourn_simulation_curve(sim, SojournCurve::Initial, 1, v.as_mut_ptr(), ptr::null_mut(), 1),
            SojournStatus::BufferTooSmall
        );
        assert_eq!(
            sojourn_simulation_curve(sim, SojournCurve::Stay, 5, v.as_mut_ptr(), ptr::null_mut(), 2),
            SojournStatus::InvalidParameter
        );
        sojourn_simulation_free(sim);
        sojourn_network_free(net);
    }
    assert!(v[0] >= v[1]);
}

// Builds the C smoke test against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/this-test -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsojourn_ffi.a");
    if !lib.exists() {
        panic!("static library not found at {}", lib.display());
    }
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("ok"));
}
