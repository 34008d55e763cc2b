use super::*;
use crate::exact::rational::rvec;
use crate::instances::{box_qp, onedim, quad3};

#[test]
fn linear_quadratic_terminates_in_one_step() {
    let cp = box_qp(&[1, -2]);
    let target = Target::new(&cp, &rvec(&[0, 2])).unwrap();
    let t = newton_kkt_run(&cp, &[0.3, 0.1], &[0.2, 0.4], 10, 1e-12, Some(&target)).unwrap();
    assert!(t.iterates.len() <= 3, "{t:?}");
    assert!(*t.residuals.last().unwrap() <= 1e-12);
    assert!(*t.distances.last().unwrap() <= 1e-12);
}

#[test]
fn onedim_is_superlinear() {
    let cp = onedim();
    let target = Target::new(&cp, &rvec(&[0])).unwrap();
    let t = newton_kkt_run(&cp, &[0.1], &[0.9], 20, 1e-14, Some(&target)).unwrap();
    assert!(t.iterates.len() <= 6);
    assert_eq!(rate_classify(&t.distances), Ok(Rate::Superlinear));
}

#[test]
fn quad3_runs_are_attracted_linearly() {
    let b = run_batch(&quad3(), &rvec(&[0, 0, 0]), &rvec(&[3, 0, 2]), &BatchConfig::default()).unwrap();
    assert_eq!(b.runs.len(), 20);
    assert!(b.fraction_linear() >= 0.6, "{b:?}");
    assert!(b.median_linear_ratio.unwrap() >= 0.2);
    let slow = b.runs.iter().filter(|r| r.dual_tail_min_ratio.is_some_and(|q| q >= 0.2)).count();
    assert!(slow * 10 >= 6 * b.runs.len());
}

#[test]
fn onedim_batch_is_superlinear() {
    let cfg = BatchConfig { ball: 0.05, ..BatchConfig::default() };
    let b = run_batch(&onedim(), &rvec(&[0]), &rvec(&[1]), &cfg).unwrap();
    assert_eq!(b.superlinear, b.runs.len(), "{b:?}");
}

#[test]
fn geometric_half_is_linear() {
    let d: Vec<f64> = (0..10).map(|k| 0.5f64.powi(k)).collect();
    let Ok(Rate::Linear(q)) = rate_classify(&d) else { panic!() };
    assert!((q - 0.5).abs() < 1e-12);
}

#[test]
fn quadratic_is_superlinear() {
    let mut d = vec![0.5f64];
    for _ in 0..6 {
        let last = *d.last().unwrap();
        d.push(last * last);
    }
    assert_eq!(rate_classify(&d), Ok(Rate::Superlinear));
}

#[test]
fn stalled_and_short() {
    assert_eq!(rate_classify(&[1.0, 1.0, 1.1, 1.0, 1.2, 1.3, 1.3]), Ok(Rate::Stalled));
    assert_eq!(rate_classify(&[1.0, 0.5, 0.25]), Err(RateError::TooShort(3)));
    assert_eq!(rate_classify(&[1.0, 0.5, 0.0]), Ok(Rate::Superlinear));
}

#[test]
fn classification_is_scale_invariant() {
    let d: Vec<f64> = (0..10).map(|k| 0.3f64.powi(k) * (1.0 + 0.1 * (k % 2) as f64)).collect();
    let base = rate_classify(&d).unwrap();
    for s in [1e-6, 3.0, 1e5] {
        let scaled: Vec<f64> = d.iter().map(|x| x * s).collect();
        match (base, rate_classify(&scaled).unwrap()) {
            (Rate::Linear(a), Rate::Linear(b)) => assert!((a - b).abs() < 1e-9),
            (a, b) => assert_eq!(a, b),
        }
    }
}
