use super::*;

#[test]
fn placeholder() { let _ = default_perturbation_basis(); }
