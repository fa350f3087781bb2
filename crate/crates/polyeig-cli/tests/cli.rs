use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyeig::dense::generalized_schur;
use polyeig::format::{read_mpoly, write_mpoly};
use polyeig::generate::wilkinson_polynomial;
use polyeig::metrics::matched_chordal_error;
use polyeig::pencil::build_companion;
use polyeig::{DenseMatrix, MatrixPolynomial, PencilSplit, C64};
use tempfile::TempDir;

fn polyeig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyeig")).args(args).output().expect("binary runs")
}

fn polyeig_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyeig")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV body as floats, skipping comments and the header.
fn rows(csv: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let body = lines.map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect()).collect();
    (header, body)
}

fn pairs(body: &[Vec<f64>]) -> Vec<(C64, C64)> {
    body.iter()
        .map(|r| if r[2] == 1.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (C64::new(r[0], r[1]), C64::new(1.0, 0.0)) })
        .collect()
}

fn monic_cubic() -> MatrixPolynomial {
    let block = |v: &[f64]| DenseMatrix::from_real(3, 3, v);
    MatrixPolynomial::new(vec![
        block(&[1.0, 0.0, 0.0, 2.0, 10.0, 0.0, 3.0, 11.0, 18.0]),
        block(&[4.0, 12.0, 19.0, 5.0, 13.0, 20.0, 6.0, 14.0, 21.0]),
        block(&[7.0, 15.0, 22.0, 8.0, 16.0, 23.0, 9.0, 17.0, 24.0]),
        DenseMatrix::identity(3),
    ])
    .unwrap()
}

#[test]
fn wilkinson_file_gives_roots_and_small_residuals() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "w.mpoly", &write_mpoly(&wilkinson_polynomial(8)));
    let (header, body) = rows(&stdout(&polyeig(&["solve", arg(&file), "--left"])));
    assert_eq!(&header[..5], ["re", "im", "is_infinite", "residual", "v0_re"]);
    assert_eq!(body.len(), 8);
    let mut roots: Vec<f64> = body.iter().map(|r| r[0]).collect();
    roots.sort_by(f64::total_cmp);
    for (i, r) in roots.iter().enumerate() {
        assert!((r - (i + 1) as f64).abs() < 1e-8 * (i + 1) as f64, "{roots:?}");
    }
    assert!(body.iter().all(|r| r[3] <= 1e-10));
}

#[test]
fn monic_cubic_matches_dense_oracle() {
    let p = monic_cubic();
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "cubic.mpoly", &write_mpoly(&p));
    let (s, t) = build_companion(&PencilSplit::standard(&p));
    let reference = generalized_schur(&s, &t).unwrap().eigenvalues();
    for flavor in ["gaussian", "frobenius"] {
        let (header, body) = rows(&stdout(&polyeig(&["solve", arg(&file), "--flavor", flavor])));
        assert_eq!(header, ["re", "im", "is_infinite"]);
        assert_eq!(body.len(), 9);
        let err = matched_chordal_error(&pairs(&body), &reference);
        assert!(err <= 1e-10, "{flavor}: {err}");
    }
}

#[test]
fn right_vectors_and_output_file() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.mpoly", &stdout(&polyeig(&["gen", "--d", "3", "--k", "2", "--seed", "4"])));
    let out = dir.path().join("out.csv");
    let status = polyeig(&["solve", arg(&problem), "--right", "--scale", "pencil", "-o", arg(&out)]);
    assert!(stdout(&status).is_empty());
    let (header, body) = rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(header.len(), 4 + 2 * 2);
    assert_eq!(body.len(), 6);
    let p = read_mpoly(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    for r in &body {
        let lambda = C64::new(r[0], r[1]);
        let v = [C64::new(r[4], r[5]), C64::new(r[6], r[7])];
        let pv = p.eval(lambda).mul_vec(&v);
        let scale: f64 = (0..=3).map(|i| lambda.norm().powi(i)).sum();
        let res = pv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() / scale;
        assert!(res <= 1e-11 * p.norm(), "{res}");
    }
}

#[test]
fn infinite_eigenvalues_are_flagged() {
    let dir = TempDir::new().unwrap();
    // P_1 = diag(1, 0): one infinite eigenvalue, one finite at λ = −2.
    let file = write(&dir, "inf.mpoly", "mpoly 1\n1 2\n2 0 0 0\n0 0 1 0\n\n1 0 0 0\n0 0 0 0\n");
    let (_, body) = rows(&stdout(&polyeig(&["solve", arg(&file)])));
    let infinite: Vec<&Vec<f64>> = body.iter().filter(|r| r[2] == 1.0).collect();
    assert_eq!(infinite.len(), 1);
    assert!(infinite[0][0].is_infinite());
    let finite: Vec<&Vec<f64>> = body.iter().filter(|r| r[2] == 0.0).collect();
    assert!((finite[0][0] + 2.0).abs() < 1e-12 && finite[0][1].abs() < 1e-12);
}

#[test]
fn split_file_is_accepted() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.mpoly", &stdout(&polyeig(&["gen", "--d", "3", "--k", "2", "--seed", "9"])));
    let p = read_mpoly(&std::fs::read_to_string(&problem).unwrap()).unwrap();
    let half = |i: usize| p.coeff(i).scaled(C64::new(0.5, 0.0));
    let split_text = write_mpoly(&MatrixPolynomial::new(vec![half(1), half(2)]).unwrap()).replacen("1 2", "2 2", 1);
    let split = write(&dir, "split.mpoly", &split_text);
    let (_, plain) = rows(&stdout(&polyeig(&["solve", arg(&problem)])));
    let (_, with) = rows(&stdout(&polyeig(&["solve", arg(&problem), "--split", arg(&split)])));
    assert!(matched_chordal_error(&pairs(&plain), &pairs(&with)) < 1e-9);

    let short = write(&dir, "short.mpoly", "mpoly 1\n1 2\n1 0 0 0\n0 0 1 0\n");
    let out = polyeig(&["solve", arg(&problem), "--split", arg(&short)]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn check_reports_small_backward_error() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.mpoly", &stdout(&polyeig(&["gen", "--d", "4", "--k", "3", "--seed", "2"])));
    let (header, body) = rows(&stdout(&polyeig(&["check", arg(&problem)])));
    assert_eq!(header, ["s_error", "t_error", "s_norm", "t_norm", "alpha"]);
    assert_eq!(body.len(), 1);
    let r = &body[0];
    assert!(r[0].max(r[1]) <= 1e-12 * r[4], "{r:?}");

    let (_, body) = rows(&stdout(&polyeig(&["check", arg(&problem), "--scale", "none", "--flavor", "frobenius"])));
    assert!(body[0][0] <= 1e-13 * body[0][2] * body[0][2].max(1.0), "{:?}", body[0]);
}

#[test]
fn check_refuses_large_problems() {
    let dir = TempDir::new().unwrap();
    let problem = write(&dir, "p.mpoly", &stdout(&polyeig(&["gen", "--d", "9", "--k", "8"])));
    let out = polyeig(&["check", arg(&problem)]);
    assert_eq!(out.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&out.stderr).contains("POLYEIG_DENSE_LIMIT"));
    let out = polyeig_env(&["check", arg(&problem)], "POLYEIG_DENSE_LIMIT", "80");
    assert!(out.status.success());
    let out = polyeig_env(&["check", arg(&problem)], "POLYEIG_DENSE_LIMIT", "big");
    assert_eq!(out.status.code(), Some(8));
}

#[test]
fn bench_single_point_gives_one_row() {
    let text = stdout(&polyeig(&["bench", "--d", "3", "--k", "2", "--reps", "3"]));
    assert!(text.starts_with("# "));
    let (header, body) = rows(&text);
    assert_eq!(header, ["d", "k", "seconds", "sweeps", "turnovers"]);
    assert_eq!(body.len(), 1);
    assert_eq!(&body[0][..2], [3.0, 2.0]);
    assert!(body[0][2] > 0.0 && body[0][3] > 0.0 && body[0][4] > 0.0);

    let (_, body) = rows(&stdout(&polyeig(&["bench", "--d", "2,4", "--k", "1,2", "--reps", "1"])));
    assert_eq!(body.len(), 4);
}

#[test]
fn gen_is_deterministic_and_profiles_differ() {
    let a = stdout(&polyeig(&["gen", "--d", "4", "--k", "8", "--seed", "5", "--profile", "unbalanced"]));
    let b = stdout(&polyeig(&["gen", "--d", "4", "--k", "8", "--seed", "5", "--profile", "unbalanced"]));
    assert_eq!(a, b);
    let norms = |text: &str| -> Vec<f64> { read_mpoly(text).unwrap().coeffs().iter().map(DenseMatrix::norm_fro).collect() };
    let spread = |v: &[f64]| v.iter().cloned().fold(0.0, f64::max) / v.iter().cloned().fold(f64::INFINITY, f64::min);
    let widest = (0..20)
        .map(|seed| {
            let s = seed.to_string();
            spread(&norms(&stdout(&polyeig(&["gen", "--d", "4", "--k", "8", "--seed", &s, "--profile", "unbalanced"]))))
        })
        .fold(0.0, f64::max);
    assert!(widest >= 1e6, "{widest}");
    let uniform = norms(&stdout(&polyeig(&["gen", "--d", "4", "--k", "8", "--seed", "5"])));
    assert!(spread(&uniform) <= 4.0);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = TempDir::new().unwrap();
    let code = |text: &str| {
        let f = write(&dir, "x.mpoly", text);
        polyeig(&["solve", arg(&f)]).status.code()
    };
    assert_eq!(code("not a header\n"), Some(3));
    assert_eq!(code("mpoly 1\n1 1\n1 x\n\n1 0\n"), Some(3));
    assert_eq!(code("mpoly 1\n2 1\n1 0\n\n1 0\n"), Some(4));
    assert_eq!(code("mpoly 1\n0 1\n1 0\n"), Some(8));
    assert_eq!(polyeig(&["solve", "/nonexistent/file.mpoly"]).status.code(), Some(7));
    assert_eq!(polyeig(&["solve"]).status.code(), Some(2));
    assert_eq!(polyeig(&["gen", "--d", "0", "--k", "1"]).status.code(), Some(8));
}
