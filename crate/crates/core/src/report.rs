//! Serde helpers shared by the report types.
//!
//! Complex numbers serialize as `{"re": .., "im": ..}`. Non-finite reals
//! become the strings `"inf"`, `"-inf"` or `"nan"` so that reports never
//! silently contain `null`.

use serde::ser::{SerializeSeq, SerializeStruct};
use serde::Serializer;

use num_complex::Complex64;

fn real<S: Serializer>(s: S, v: f64) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

struct Real(f64);

impl serde::Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        real(s, self.0)
    }
}

/// A complex number wrapper with the report encoding.
#[derive(Debug, Clone, Copy)]
pub struct C(pub Complex64);

impl serde::Serialize for C {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Complex", 2)?;
        st.serialize_field("re", &Real(self.0.re))?;
        st.serialize_field("im", &Real(self.0.im))?;
        st.end()
    }
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&C(*v), s)
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for z in v {
            seq.serialize_element(&C(*z))?;
        }
        seq.end()
    }
}

pub mod complex_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(z) => s.serialize_some(&C(*z)),
            None => s.serialize_none(),
        }
    }
}

pub mod finite {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        real(s, *v)
    }
}

pub mod finite_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&Real(*x))?;
        }
        seq.end()
    }
}

pub mod finite_opt {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&Real(*x)),
            None => s.serialize_none(),
        }
    }
}

/// `None` stands for the point at infinity and is written as `"inf"`.
pub mod complex_or_inf {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(z) => serde::Serialize::serialize(&C(*z), s),
            None => s.serialize_str("inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize)]
    struct Probe {
        #[serde(with = "finite")]
        x: f64,
        #[serde(with = "complex_or_inf")]
        w: Option<Complex64>,
    }

    #[test]
    fn sentinels_replace_non_finite() {
        let s = serde_json::to_string(&Probe { x: f64::NAN, w: None }).unwrap();
        assert_eq!(s, r#"{"x":"nan","w":"inf"}"#);
        let s = serde_json::to_string(&Probe { x: f64::NEG_INFINITY, w: Some(Complex64::new(1.0, 0.0)) }).unwrap();
        assert_eq!(s, r#"{"x":"-inf","w":{"re":1.0,"im":0.0}}"#);
    }
}
