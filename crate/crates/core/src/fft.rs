//! Complex discrete Fourier transform of arbitrary length. Powers of two use
//! an iterative radix-2 transform, other lengths a direct sum.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

// Unused when std is linked, since std provides the same methods inherently.
#[allow(unused_imports)]
use num_traits::Float as _;

#[derive(Clone, Debug)]
pub struct Fft {
    n: usize,
    // cos/sin of 2 pi k / n
    table: Vec<(f64, f64)>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        let table = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                (a.cos(), a.sin())
            })
            .collect();
        Self { n, table }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X_k = sum_j x_j exp(-2 pi i jk/n)`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        self.run(re, im, -1.0);
    }

    /// Inverse of [`Fft::forward`], including the `1/n` factor.
    pub fn inverse(&self, re: &mut [f64], im: &mut [f64]) {
        self.run(re, im, 1.0);
        let s = 1.0 / self.n as f64;
        for (a, b) in re.iter_mut().zip(im.iter_mut()) {
            *a *= s;
            *b *= s;
        }
    }

    fn run(&self, re: &mut [f64], im: &mut [f64], sign: f64) {
        let n = self.n;
        assert!(re.len() == n && im.len() == n, "fft length mismatch");
        if n <= 1 {
            return;
        }
        if n.is_power_of_two() {
            self.radix2(re, im, sign);
        } else {
            self.direct(re, im, sign);
        }
    }

    fn radix2(&self, re: &mut [f64], im: &mut [f64], sign: f64) {
        let n = self.n;
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let (c, s) = self.table[k * stride];
                    let (wr, wi) = (c, sign * s);
                    let a = start + k;
                    let b = a + len / 2;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }

    fn direct(&self, re: &mut [f64], im: &mut [f64], sign: f64) {
        let n = self.n;
        let mut or = vec![0.0; n];
        let mut oi = vec![0.0; n];
        for k in 0..n {
            let (mut sr, mut si) = (0.0, 0.0);
            for j in 0..n {
                let (c, s) = self.table[(j * k) % n];
                let s = sign * s;
                sr += re[j] * c - im[j] * s;
                si += re[j] * s + im[j] * c;
            }
            or[k] = sr;
            oi[k] = si;
        }
        re.copy_from_slice(&or);
        im.copy_from_slice(&oi);
    }
}
