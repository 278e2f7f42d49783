//! Pair kernels for the repulsion, split into a banded near field (neighbours
//! within `band` indices) and the explicit far field.

/// Riesz pair kernel for a fixed exponent α.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairKernel {
    alpha: f64,
    kind: Kind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Log,
    Square,
    ThreeHalves,
    General,
}

impl PairKernel {
    pub(crate) fn new(alpha: f64) -> Self {
        let kind = if alpha == 1.0 {
            Kind::Log
        } else if alpha == 2.0 {
            Kind::Square
        } else if alpha == 1.5 {
            Kind::ThreeHalves
        } else {
            Kind::General
        };
        Self { alpha, kind }
    }

    /// d^{−α}
    #[inline(always)]
    pub(crate) fn phi(&self, d: f64) -> f64 {
        let inv = 1.0 / d;
        match self.kind {
            Kind::Log => inv,
            Kind::Square => inv * inv,
            Kind::ThreeHalves => inv * inv.sqrt(),
            Kind::General => d.powf(-self.alpha),
        }
    }

    /// V(d)
    #[inline]
    pub(crate) fn potential(&self, d: f64) -> f64 {
        match self.kind {
            Kind::Log => -d.ln(),
            _ => d * self.phi(d) / (self.alpha - 1.0),
        }
    }

    pub(crate) fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Far-field force (1/N)Σ_{|i−j|>band} sign(x_i − x_j)/|x_i − x_j|^α and a
/// Gershgorin bound on the far-field Hessian spectral radius.
///
/// `force` and `stiffness` are overwritten; returns the spectral bound.
pub(crate) fn far_field(x: &[f64], kernel: &PairKernel, band: usize, force: &mut [f64], stiffness: &mut [f64]) -> f64 {
    match kernel.kind {
        Kind::Log => far_field_impl(x, band, force, stiffness, 1.0, |inv| inv),
        Kind::Square => far_field_impl(x, band, force, stiffness, 2.0, |inv| inv * inv),
        Kind::ThreeHalves => far_field_impl(x, band, force, stiffness, 1.5, |inv| inv * inv.sqrt()),
        Kind::General => {
            let a = kernel.alpha;
            far_field_impl(x, band, force, stiffness, a, move |inv| inv.powf(a))
        }
    }
}

#[inline(always)]
fn far_field_impl<F: Fn(f64) -> f64>(x: &[f64], band: usize, force: &mut [f64], stiffness: &mut [f64], alpha: f64, phi_of_inv: F) -> f64 {
    let n = x.len();
    force.iter_mut().for_each(|f| *f = 0.0);
    stiffness.iter_mut().for_each(|s| *s = 0.0);
    for i in 0..n {
        let start = i + band + 1;
        if start >= n {
            break;
        }
        let xi = x[i];
        // four independent accumulators fix the reduction order while letting
        // the loop vectorize
        let mut acc_f = [0.0f64; 4];
        let mut acc_s = [0.0f64; 4];
        let xs = x[start..].chunks_exact(4);
        let fs = force[start..].chunks_exact_mut(4);
        let ss = stiffness[start..].chunks_exact_mut(4);
        let tail = xs.remainder().len();
        for ((xc, fc), sc) in xs.zip(fs).zip(ss) {
            for l in 0..4 {
                let inv = 1.0 / (xc[l] - xi);
                let p = phi_of_inv(inv);
                let s = p * inv;
                fc[l] += p;
                sc[l] += s;
                acc_f[l] += p;
                acc_s[l] += s;
            }
        }
        for k in (n - tail)..n {
            let inv = 1.0 / (x[k] - xi);
            let p = phi_of_inv(inv);
            let s = p * inv;
            force[k] += p;
            stiffness[k] += s;
            acc_f[0] += p;
            acc_s[0] += s;
        }
        force[i] -= (acc_f[0] + acc_f[1]) + (acc_f[2] + acc_f[3]);
        stiffness[i] += (acc_s[0] + acc_s[1]) + (acc_s[2] + acc_s[3]);
    }
    let scale = 1.0 / n as f64;
    let mut max_row = 0.0f64;
    for (f, s) in force.iter_mut().zip(stiffness.iter_mut()) {
        *f *= scale;
        *s *= alpha * scale;
        max_row = max_row.max(*s);
    }
    2.0 * max_row
}
