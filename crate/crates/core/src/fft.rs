//! Radix-2 Cooley–Tukey FFT for power-of-two lengths.
//!
//! Forward transform uses the `e^{-2πi kn/N}` kernel; the inverse carries the
//! `1/N` factor so that `inverse(forward(f)) == f`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::linalg::C64;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    twiddles: Vec<C64>,
    bitrev: Vec<usize>,
}

impl Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(invalid("FFT length must be a power of two"));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n).map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) }).collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * k as f64 / n as f64;
                C64::new(Float::cos(angle), Float::sin(angle))
            })
            .collect();
        Ok(Self { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, false);
    }

    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, true);
        let scale = 1.0 / self.n as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        assert_eq!(data.len(), self.n, "FFT length mismatch");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= self.n {
            let stride = self.n / len;
            for start in (0..self.n).step_by(len) {
                for k in 0..len / 2 {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + len / 2] * w;
                    data[start + k] = a + b;
                    data[start + k + len / 2] = a - b;
                }
            }
            len <<= 1;
        }
    }
}
