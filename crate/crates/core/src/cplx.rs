//! Serde adapters writing complex numbers as `{"re": …, "im": …}` objects, and
//! small numeric helpers shared by several modules.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::C64;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ReIm {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for ReIm {
    fn from(z: C64) -> Self {
        ReIm { re: z.re, im: z.im }
    }
}

impl From<ReIm> for C64 {
    fn from(z: ReIm) -> Self {
        C64::new(z.re, z.im)
    }
}

pub mod one {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        ReIm::from(*z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        ReIm::deserialize(d).map(C64::from)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let tmp: Vec<ReIm> = v.iter().map(|z| ReIm::from(*z)).collect();
        tmp.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let tmp = Vec::<ReIm>::deserialize(d)?;
        Ok(tmp.into_iter().map(C64::from).collect())
    }
}

pub mod vec2 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Vec<C64>], s: S) -> Result<S::Ok, S::Error> {
        let tmp: Vec<Vec<ReIm>> = v
            .iter()
            .map(|row| row.iter().map(|z| ReIm::from(*z)).collect())
            .collect();
        tmp.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        let tmp = Vec::<Vec<ReIm>>::deserialize(d)?;
        Ok(tmp
            .into_iter()
            .map(|row| row.into_iter().map(C64::from).collect())
            .collect())
    }
}

/// `e^{iθ}` with `θ = 2π j / k`, computed directly rather than by repeated
/// multiplication.
pub fn root_of_unity(j: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (j % k) as f64 / k as f64)
}

/// Neumaier compensated summation of reals.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut acc = KahanSum::default();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

/// Integer power by repeated multiplication, `0^0 = 1`.
pub fn powi(z: C64, e: u32) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for _ in 0..e {
        acc *= z;
    }
    acc
}
