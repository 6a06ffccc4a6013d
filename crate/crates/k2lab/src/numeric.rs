// SPDX-License-Identifier: Apache-2.0
//! Compensated floating summation.

use num_complex::Complex64;

/// Neumaier summation of f64 values.
#[derive(Debug, Default, Clone, Copy)]
pub struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Neumaier summation applied to real and imaginary parts separately.
#[derive(Debug, Default, Clone, Copy)]
pub struct ComplexSum {
    re: Sum,
    im: Sum,
}

impl ComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn sum_complex<I: IntoIterator<Item = Complex64>>(it: I) -> Complex64 {
    let mut acc = ComplexSum::default();
    for z in it {
        acc.add(z);
    }
    acc.value()
}
