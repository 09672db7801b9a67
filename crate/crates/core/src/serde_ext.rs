//! Serialization helpers for reals that may legitimately be infinite.

use serde::Serializer;

pub fn extended_real<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn extended_real_vec<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Extended(*x))?;
    }
    seq.end()
}

struct Extended(f64);

impl serde::Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        extended_real(&self.0, s)
    }
}
