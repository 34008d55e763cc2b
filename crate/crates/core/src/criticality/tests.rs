use super::*;
use crate::exact::rational::{rat, rvec};
use crate::instances::{box_qp, onedim, quad2_active, quad3};

fn zero3() -> Vec<Rational> {
    rvec(&[0, 0, 0])
}

#[test]
fn quad3_critical_vertex() {
    let s = quad3().system().unwrap();
    let v = rvec(&[3, 0, 2]);
    let c = classify_multiplier(&s, &zero3(), &v).unwrap();
    assert_eq!(c.status, Status::Critical);
    let w = c.witness.unwrap();
    assert!(verify_witness(&s, &zero3(), &v, &w).unwrap());
    let known = Witness { xi: rvec(&[0, 1, 1]), eta: zero3() };
    assert!(verify_witness(&s, &zero3(), &v, &known).unwrap());
    let d = classify_multiplier_coderivative(&s, &zero3(), &v).unwrap();
    assert_eq!(d.status, Status::Critical);
    assert!(verify_witness(&s, &zero3(), &v, &d.witness.unwrap()).unwrap());
}

#[test]
fn quad3_noncritical_vertex() {
    let s = quad3().system().unwrap();
    let v = rvec(&[1, 0, 0]);
    let c = classify_multiplier(&s, &zero3(), &v).unwrap();
    assert_eq!(c.status, Status::Noncritical);
    assert!(!c.certified_faces.is_empty());
    assert_eq!(classify_multiplier_coderivative(&s, &zero3(), &v).unwrap().status, Status::Noncritical);
    assert!(sosc_check(&s, &zero3(), &v).unwrap().holds);
}

#[test]
fn quad2_critical_along_third_axis() {
    let s = quad2_active().system().unwrap();
    let v = rvec(&[0, 1]);
    let c = classify_multiplier(&s, &zero3(), &v).unwrap();
    assert_eq!(c.status, Status::Critical);
    let w = c.witness.unwrap();
    assert_eq!(w.xi, rvec(&[0, 0, 1]));
    assert!(verify_witness(&s, &zero3(), &v, &w).unwrap());
    assert_eq!(classify_multiplier_coderivative(&s, &zero3(), &v).unwrap().status, Status::Critical);
    let sosc = sosc_check(&s, &zero3(), &v).unwrap();
    assert!(!sosc.holds);
    assert_eq!(sosc.violating_direction, Some(rvec(&[0, 0, 1])));
}

#[test]
fn nonsingular_jacobian_is_noncritical() {
    let s = box_qp(&[1, 2]).system().unwrap();
    let x = rvec(&[0, 0]);
    let v = rvec(&[1, 2]);
    assert_eq!(classify_multiplier(&s, &x, &v).unwrap().status, Status::Noncritical);
    assert!(sosc_check(&s, &x, &v).unwrap().holds);
    let s = onedim().system().unwrap();
    assert_eq!(classify_multiplier(&s, &rvec(&[0]), &rvec(&[1])).unwrap().status, Status::Noncritical);
    assert!(sosc_check(&s, &rvec(&[0]), &rvec(&[1])).unwrap().holds);
}

#[test]
fn membership_is_required() {
    let s = quad3().system().unwrap();
    assert!(matches!(classify_multiplier(&s, &zero3(), &rvec(&[1, 1, 0])), Err(CriticalityError::Membership(_))));
    assert!(sosc_check(&s, &zero3(), &rvec(&[0, 0, 0])).is_err());
}

#[test]
fn rejects_bad_witnesses() {
    let s = quad3().system().unwrap();
    let v = rvec(&[3, 0, 2]);
    assert!(!verify_witness(&s, &zero3(), &v, &Witness { xi: zero3(), eta: zero3() }).unwrap());
    assert!(!verify_witness(&s, &zero3(), &v, &Witness { xi: rvec(&[1, 0, 0]), eta: zero3() }).unwrap());
}

#[test]
fn strict_positivity_cases() {
    let id: Matrix = vec![rvec(&[1, 0]), rvec(&[0, 1])];
    assert!(strict_positivity(&id, &[rvec(&[1, 0]), rvec(&[0, 1])], &[]).holds);
    // indefinite on the cone spanned by e1, e2 only through cross terms
    let s: Matrix = vec![rvec(&[1, -2]), rvec(&[-2, 1])];
    let v = strict_positivity(&s, &[], &[rvec(&[1, 0]), rvec(&[0, 1])]);
    assert!(!v.holds);
    assert_eq!(v.violating_direction, Some(rvec(&[1, 1])));
    // copositive but not PSD
    let s: Matrix = vec![rvec(&[1, 2]), rvec(&[2, 1])];
    assert!(strict_positivity(&s, &[], &[rvec(&[1, 0]), rvec(&[0, 1])]).holds);
    // line plus ray, with the cross term pulling the value down
    let s: Matrix = vec![rvec(&[1, 1]), rvec(&[1, 1])];
    let v = strict_positivity(&s, &[rvec(&[1, 0])], &[rvec(&[0, 1])]);
    assert!(!v.holds);
    let u = v.violating_direction.unwrap();
    assert!(quad(&s, &u, &u) <= rat(0));
}

#[test]
fn copositive_minimum() {
    let m: Matrix = vec![rvec(&[2, 0]), rvec(&[0, 2])];
    let (min, beta) = copositive_min(&m);
    assert_eq!(min, rat(1));
    assert_eq!(beta, vec![crate::exact::rational::ratio(1, 2); 2]);
}
