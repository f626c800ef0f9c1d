//! JSON wire encoding: complex scalars are `[re, im]`, matrices are row-major
//! nested arrays of complex scalars.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::numerics::{ComplexMatrix, C64};

pub type WireComplex = [f64; 2];
pub type WireMatrix = Vec<Vec<WireComplex>>;

pub fn encode_matrix(m: &ComplexMatrix) -> WireMatrix {
    m.row_iter()
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

pub fn decode_matrix(rows: &WireMatrix) -> Result<ComplexMatrix, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(ComplexMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().map(|&[re, im]| C64::new(re, im)),
    ))
}

/// `#[serde(with = "wire::complex")]`
pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

/// `#[serde(with = "wire::matrix")]`
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &ComplexMatrix, s: S) -> Result<S::Ok, S::Error> {
        encode_matrix(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<ComplexMatrix, D::Error> {
        let rows = WireMatrix::deserialize(d)?;
        decode_matrix(&rows).map_err(D::Error::custom)
    }
}

/// `#[serde(with = "wire::opt_matrix")]`
pub mod opt_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<ComplexMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(encode_matrix).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<ComplexMatrix>, D::Error> {
        Option::<WireMatrix>::deserialize(d)?
            .map(|rows| decode_matrix(&rows).map_err(D::Error::custom))
            .transpose()
    }
}
