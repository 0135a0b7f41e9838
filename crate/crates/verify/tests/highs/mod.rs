//! Thin wrapper over the HiGHS C API: solve an LP-format file and read back
//! the optimal objective and named column values.

use std::ffi::{c_char, CStr, CString};
use std::path::Path;

use highs_sys::*;

const MODEL_STATUS_OPTIMAL: HighsInt = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution {
    pub optimal: bool,
    pub objective: f64,
    /// `(column name, value)` in the solver's column order.
    pub columns: Vec<(String, f64)>,
}

pub fn solve_lp_file(path: &Path, time_limit: f64) -> MipSolution {
    let file = CString::new(path.to_str().expect("UTF-8 path")).unwrap();
    unsafe {
        let h = Highs_create();
        Highs_setBoolOptionValue(h, c"output_flag".as_ptr(), 0);
        Highs_setDoubleOptionValue(h, c"mip_rel_gap".as_ptr(), 0.0);
        Highs_setDoubleOptionValue(h, c"mip_abs_gap".as_ptr(), 1e-12);
        Highs_setDoubleOptionValue(h, c"time_limit".as_ptr(), time_limit);
        assert_ne!(
            Highs_readModel(h, file.as_ptr()),
            -1,
            "HiGHS rejected {}",
            path.display()
        );
        Highs_run(h);
        let optimal = Highs_getModelStatus(h) == MODEL_STATUS_OPTIMAL;
        let objective = Highs_getObjectiveValue(h);
        let n = Highs_getNumCol(h) as usize;
        let mut values = vec![0.0; n];
        let mut duals = vec![0.0; n];
        let n_rows = Highs_getNumRow(h) as usize;
        let mut row_values = vec![0.0; n_rows];
        let mut row_duals = vec![0.0; n_rows];
        Highs_getSolution(
            h,
            values.as_mut_ptr(),
            duals.as_mut_ptr(),
            row_values.as_mut_ptr(),
            row_duals.as_mut_ptr(),
        );
        let mut columns = Vec::with_capacity(n);
        let mut buf = vec![0 as c_char; 1024];
        for (i, v) in values.into_iter().enumerate() {
            Highs_getColName(h, i as HighsInt, buf.as_mut_ptr());
            let name = CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned();
            columns.push((name, v));
        }
        Highs_destroy(h);
        MipSolution {
            optimal,
            objective,
            columns,
        }
    }
}
