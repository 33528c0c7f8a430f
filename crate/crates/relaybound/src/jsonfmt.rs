//! Shared JSON encoding of complex matrices: column-major entry list of
//! [re, im] pairs with explicit dimensions. Used by every type that dumps
//! to or restores from disk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

#[derive(Clone, Serialize, Deserialize)]
pub struct MatJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

pub fn mat_to_json(m: &CMat) -> MatJson {
    MatJson {
        rows: m.nrows(),
        cols: m.ncols(),
        entries: m.iter().map(|z| [z.re, z.im]).collect(),
    }
}

pub fn json_to_mat(j: &MatJson) -> Result<CMat> {
    if j.entries.len() != j.rows * j.cols {
        return Err(Error::Dimension(format!(
            "matrix dump claims {}×{} but carries {} entries",
            j.rows,
            j.cols,
            j.entries.len()
        )));
    }
    Ok(CMat::from_vec(
        j.rows,
        j.cols,
        j.entries.iter().map(|&[re, im]| C64::new(re, im)).collect(),
    ))
}

pub fn cvec_to_json(v: &CVec) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn json_to_cvec(entries: &[[f64; 2]]) -> CVec {
    CVec::from_vec(entries.iter().map(|&[re, im]| C64::new(re, im)).collect())
}
