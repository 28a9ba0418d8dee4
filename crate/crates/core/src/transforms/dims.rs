use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problem dimensions: `n_xi` OPD samples and an `n_p_bar × n_p_bar` pixel grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDims", into = "RawDims")]
pub struct Dims {
    n_xi: usize,
    n_p_bar: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDims {
    n_xi: usize,
    n_p_bar: usize,
}

impl TryFrom<RawDims> for Dims {
    type Error = Error;

    fn try_from(raw: RawDims) -> Result<Self> {
        Dims::new(raw.n_xi, raw.n_p_bar)
    }
}

impl From<Dims> for RawDims {
    fn from(d: Dims) -> Self {
        RawDims {
            n_xi: d.n_xi,
            n_p_bar: d.n_p_bar,
        }
    }
}

pub(crate) fn check_pow2(what: &str, n: usize) -> Result<()> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::dim(format!("{what} must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

impl Dims {
    pub fn new(n_xi: usize, n_p_bar: usize) -> Result<Self> {
        check_pow2("n_xi", n_xi)?;
        check_pow2("n_p_bar", n_p_bar)?;
        Ok(Dims { n_xi, n_p_bar })
    }

    pub fn n_xi(&self) -> usize {
        self.n_xi
    }

    pub fn n_p_bar(&self) -> usize {
        self.n_p_bar
    }

    pub fn n_p(&self) -> usize {
        self.n_p_bar * self.n_p_bar
    }

    pub fn n_hs(&self) -> usize {
        self.n_xi * self.n_p()
    }

    /// Flat 1-based index `l = n_p (l_xi - 1) + n_p_bar (l_y - 1) + l_x`.
    pub fn flat_index(&self, idx: Index3D) -> Result<usize> {
        self.check(idx)?;
        Ok(self.n_p() * (idx.l_xi - 1) + self.n_p_bar * (idx.l_y - 1) + idx.l_x)
    }

    /// Inverse of [`Dims::flat_index`].
    pub fn unflatten(&self, l: usize) -> Result<Index3D> {
        if l == 0 || l > self.n_hs() {
            return Err(Error::range("l", l, 1, self.n_hs()));
        }
        let z = l - 1;
        let l_xi = z / self.n_p() + 1;
        let lp = z % self.n_p();
        Ok(Index3D {
            l_xi,
            l_x: lp % self.n_p_bar + 1,
            l_y: lp / self.n_p_bar + 1,
        })
    }

    fn check(&self, idx: Index3D) -> Result<()> {
        if idx.l_xi == 0 || idx.l_xi > self.n_xi {
            return Err(Error::range("l_xi", idx.l_xi, 1, self.n_xi));
        }
        if idx.l_x == 0 || idx.l_x > self.n_p_bar {
            return Err(Error::range("l_x", idx.l_x, 1, self.n_p_bar));
        }
        if idx.l_y == 0 || idx.l_y > self.n_p_bar {
            return Err(Error::range("l_y", idx.l_y, 1, self.n_p_bar));
        }
        Ok(())
    }

    /// Position (0-based) of flat index `l` inside a vector laid out by the
    /// Kronecker operators, where the OPD index runs fastest.
    pub fn storage_of_flat(&self, l: usize) -> usize {
        let z = l - 1;
        let xi = z / self.n_p();
        let p = z % self.n_p();
        self.n_xi * p + xi
    }

    /// Flat 1-based index of a Kronecker storage position.
    pub fn flat_of_storage(&self, q: usize) -> usize {
        let xi = q % self.n_xi;
        let p = q / self.n_xi;
        self.n_p() * xi + p + 1
    }
}

/// 1-based 3D sensing index: OPD sample and the two spatial Hadamard frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Index3D {
    pub l_xi: usize,
    pub l_x: usize,
    pub l_y: usize,
}

impl Index3D {
    pub fn new(l_xi: usize, l_x: usize, l_y: usize) -> Self {
        Index3D { l_xi, l_x, l_y }
    }
}

/// Discrete hyperspectral cube `x = vec(X)`, `X` being `n_xi × n_p`.
///
/// Storage is wavenumber-fastest: voxel `(nu, p)` lives at `n_xi * p + nu`
/// (0-based), pixel `p = n_p_bar * py + px`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSVolume {
    dims: Dims,
    data: Vec<f64>,
}

impl HSVolume {
    pub fn new(dims: Dims, data: Vec<f64>) -> Result<Self> {
        if data.len() != dims.n_hs() {
            return Err(Error::dim(format!(
                "volume payload has {} entries, dims need {}",
                data.len(),
                dims.n_hs()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite voxel at position {i}")));
        }
        Ok(HSVolume { dims, data })
    }

    pub fn zeros(dims: Dims) -> Self {
        HSVolume {
            dims,
            data: vec![0.0; dims.n_hs()],
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Voxel at 0-based wavenumber `nu` and pixel `(px, py)`.
    pub fn voxel(&self, nu: usize, px: usize, py: usize) -> f64 {
        self.data[self.dims.n_xi * (self.dims.n_p_bar * py + px) + nu]
    }

    /// Spectrum of one pixel.
    pub fn spectrum(&self, px: usize, py: usize) -> &[f64] {
        let n = self.dims.n_xi;
        let p = self.dims.n_p_bar * py + px;
        &self.data[n * p..n * (p + 1)]
    }

    /// Spatial map at 0-based wavenumber `nu`, row-major `n_p_bar × n_p_bar`.
    pub fn band(&self, nu: usize) -> Vec<f64> {
        (0..self.dims.n_p())
            .map(|p| self.data[self.dims.n_xi * p + nu])
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_index_examples() {
        let d = Dims::new(8, 4).unwrap();
        assert_eq!(d.flat_index(Index3D::new(1, 1, 1)).unwrap(), 1);
        assert_eq!(d.flat_index(Index3D::new(2, 1, 1)).unwrap(), 17);
        assert_eq!(d.flat_index(Index3D::new(3, 2, 4)).unwrap(), 46);
    }

    #[test]
    fn flat_index_rejects_out_of_range() {
        let d = Dims::new(8, 4).unwrap();
        assert!(matches!(
            d.flat_index(Index3D::new(9, 1, 1)),
            Err(Error::Range { what: "l_xi", .. })
        ));
        assert!(d.flat_index(Index3D::new(1, 0, 1)).is_err());
        assert!(d.flat_index(Index3D::new(1, 1, 5)).is_err());
        assert!(d.unflatten(0).is_err());
        assert!(d.unflatten(129).is_err());
    }

    #[test]
    fn bad_dims_rejected() {
        assert!(Dims::new(6, 4).is_err());
        assert!(Dims::new(8, 1).is_err());
        assert!(Dims::new(0, 2).is_err());
    }

    #[test]
    fn storage_permutation_is_bijective() {
        let d = Dims::new(4, 4).unwrap();
        let mut seen = vec![false; d.n_hs()];
        for l in 1..=d.n_hs() {
            let q = d.storage_of_flat(l);
            assert!(!seen[q]);
            seen[q] = true;
            assert_eq!(d.flat_of_storage(q), l);
        }
    }

    #[test]
    fn volume_validation() {
        let d = Dims::new(2, 2).unwrap();
        assert!(HSVolume::new(d, vec![0.0; 7]).is_err());
        assert!(HSVolume::new(d, vec![f64::NAN; 8]).is_err());
        let v = HSVolume::new(d, (0..8).map(f64::from).collect()).unwrap();
        assert_eq!(v.voxel(1, 1, 0), 3.0);
        assert_eq!(v.spectrum(0, 1), &[4.0, 5.0]);
        assert_eq!(v.band(0), vec![0.0, 2.0, 4.0, 6.0]);
    }

    #[test]
    fn dims_serde_validates() {
        let ok: Dims = serde_json::from_str(r#"{"n_xi":8,"n_p_bar":4}"#).unwrap();
        assert_eq!(ok.n_hs(), 128);
        assert!(serde_json::from_str::<Dims>(r#"{"n_xi":7,"n_p_bar":4}"#).is_err());
    }
}
