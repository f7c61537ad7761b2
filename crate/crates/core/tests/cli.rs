use std::path::{Path, PathBuf};
use std::process::Command;

const TWO_GROUP_XS: &str = "\
[material 0]
sigma_t = 0.65 1.3
sigma_s = 0.5 0.1 0.0 1.1
nu_sigma_f = 0.01 0.2
chi = 1 0
";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn slab(solver: &str) -> String {
    format!(
        "[problem]\ngroups = 2\nquadrature = 8\nxs_file = slab.xs\nregion = 32 0.5 0\n\n[solver]\n{solver}\n"
    )
}

fn critkit(config: &Path, mode: &str, out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_critkit"))
        .args(["solve", "--config"])
        .arg(config)
        .args(["--mode", mode, "--out"])
        .arg(out)
        .env("CRITKIT_THREADS", "2")
        .output()
        .unwrap()
}

fn metrics(out: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(out.join("metrics.csv"))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

fn column(rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let j = rows[0].iter().position(|c| c == name).unwrap();
    rows[1..].iter().map(|r| r[j].parse().unwrap()).collect()
}

#[test]
fn infinite_medium_reports_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "inf.cfg",
        "[problem]\ngroups = 1\nquadrature = 4\nbc_left = reflective\nbc_right = reflective\nregion = 4 1.0 0\n\n\
         [solver]\nnewton_tol = 1e-10\nrtol_transport = 1e-12\nrtol_linear_diffusion = 1e-8\nnda_tol = 1e-10\n\n\
         [material 0]\nsigma_t = 1\nsigma_s = 0.6\nnu_sigma_f = 0.5\nchi = 1\n",
    );
    for mode in ["nda", "transport-eigen", "diffusion-eigen"] {
        let out = dir.path().join(mode);
        let o = critkit(&cfg, mode, &out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let k: f64 = std::fs::read_to_string(out.join("eigenvalue.csv")).unwrap().lines().nth(1).unwrap()
            .split(',').nth(1).unwrap().parse().unwrap();
        assert!((k - 1.25).abs() < 1e-9, "{mode}: {k}");
        let rows = metrics(&out);
        assert_eq!(
            rows[0].join(","),
            "np,delta,theta,agg,mem_bytes,its_newton,its_linear,its_sweep,comp,setup_nnz,time_setup,time_apply,time_total"
        );
        assert!(column(&rows, "comp")[0] >= 1.0);
        assert!(out.join("manifest.txt").exists());
        let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
        assert_eq!(sol.lines().next(), Some("cell,group,phi"));
        assert_eq!(sol.lines().count(), 5);
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "slab.xs", TWO_GROUP_XS);
    let bad = [
        slab("preconditioner = multigrid"),
        slab("theta = 1.5"),
        slab("frobnicate = 3"),
        "[problem]\ngroups = 2\nquadrature = 8\nxs_file = missing.xs\nregion = 4 1.0 0\n".into(),
    ];
    for (i, text) in bad.iter().enumerate() {
        let cfg = write(dir.path(), &format!("bad{i}.cfg"), text);
        let o = critkit(&cfg, "nda", &dir.path().join("out"));
        assert_eq!(o.status.code(), Some(2), "case {i}");
        assert!(!o.stderr.is_empty());
    }
    let stderr = String::from_utf8_lossy(&critkit(&dir.path().join("bad2.cfg"), "nda", &dir.path().join("o")).stderr)
        .into_owned();
    assert!(stderr.contains("frobnicate") && stderr.contains("line"), "{stderr}");
    let cfg = write(dir.path(), "ok.cfg", &slab(""));
    let o = Command::new(env!("CARGO_BIN_EXE_critkit"))
        .args(["solve", "--config"])
        .arg(&cfg)
        .env("CRITKIT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = critkit(&cfg, "sideways", &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solver_failure_exits_3_with_partial_metrics() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "slab.xs", TWO_GROUP_XS);
    let cfg = write(dir.path(), "fail.cfg", &slab("max_nda = 1\nnda_tol = 1e-14"));
    let out = dir.path().join("out");
    let o = critkit(&cfg, "nda", &out);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(metrics(&out).len(), 2);
}

#[test]
fn overlap_sweep_reduces_sweep_iterations() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "slab.xs", TWO_GROUP_XS);
    let cfg = write(dir.path(), "sweep.cfg", &slab("preconditioner = ras\nnp1 = 4\ndelta = 0, 1, 2"));
    let out = dir.path().join("out");
    let o = critkit(&cfg, "bench", &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = metrics(&out);
    assert_eq!(rows.len(), 4);
    assert_eq!(column(&rows, "delta"), vec![0.0, 1.0, 2.0]);
    let its = column(&rows, "its_sweep");
    assert!(its.windows(2).all(|w| w[1] <= w[0]), "{its:?}");
    for i in 0..3 {
        assert!(out.join(format!("solution_{i}.csv")).exists());
    }
}

#[test]
fn masm_and_sgmasm_agree_on_identical_groups() {
    let dir = tempfile::tempdir().unwrap();
    // both groups share every cross section and no group coupling
    write(
        dir.path(),
        "slab.xs",
        "[material 0]\nsigma_t = 1 1\nsigma_s = 0.5 0 0 0.5\nnu_sigma_f = 0.3 0.3\nchi = 0.5 0.5\n",
    );
    for mode in ["diffusion-eigen", "transport-eigen", "bench"] {
        let mut cols = Vec::new();
        for pc in ["masm", "sgmasm"] {
            let cfg = write(dir.path(), &format!("{pc}.cfg"), &slab(&format!("preconditioner = {pc}\nmin_coarse = 8")));
            let out = dir.path().join(format!("{mode}-{pc}"));
            let o = critkit(&cfg, mode, &out);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            let rows = metrics(&out);
            cols.push(["its_newton", "its_linear", "its_sweep"].map(|c| column(&rows, c)));
        }
        assert_eq!(cols[0], cols[1], "{mode}");
    }
}

#[test]
fn reruns_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "slab.xs", TWO_GROUP_XS);
    let cfg = write(dir.path(), "run.cfg", &slab("np1 = 2\nnp2 = 2\ndelta = 1"));
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(critkit(&cfg, "nda", &a).status.code(), Some(0));
    assert_eq!(critkit(&cfg, "nda", &b).status.code(), Some(0));
    for f in ["solution.csv", "eigenvalue.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}
