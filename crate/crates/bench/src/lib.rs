//! Shared fixtures for the benchmarks: representative models and words.

use dirac_loc_core::model::ModelSpec;
use nalgebra::DMatrix;

pub fn case2_strip(n: usize) -> ModelSpec {
    ModelSpec::case_with_delta(2, n, 0.1).expect("valid case-2 model")
}

pub fn case5_strip(n: usize) -> ModelSpec {
    ModelSpec::case_with_delta(5, n, 0.1).expect("valid case-5 model")
}

pub fn single_line() -> ModelSpec {
    ModelSpec::from_case(2, 1, 0.1, DMatrix::zeros(1, 1)).expect("valid single-line model")
}
