use super::*;

#[test]
fn placeholder() { let _ = INPUT_CONSTRAINT_TOL; }
