//! Serde adapters rendering nalgebra vectors as plain JSON arrays.

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub mod dvector {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &DVector<f64>,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<DVector<f64>, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(DVector::from_vec(v))
    }
}

pub mod dvector_list {
    use super::*;

    pub fn serialize<S: Serializer>(
        v: &[DVector<f64>],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|x| x.as_slice()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<DVector<f64>>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(rows.into_iter().map(DVector::from_vec).collect())
    }
}
