//! On-disk state format: JSON with subsystem dims, labels, and the density
//! matrix split into row-major real and imaginary parts.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::state::MultipartiteState;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub labels: Vec<String>,
    pub rho_real: Vec<Vec<f64>>,
    pub rho_imag: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_state(s: &MultipartiteState) -> Self {
        let n = s.dim();
        let row = |part: fn(&Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| part(&s.rho()[(i, j)])).collect())
                .collect()
        };
        Self {
            dims: s.dims().to_vec(),
            labels: s.labels().to_vec(),
            rho_real: row(|z| z.re),
            rho_imag: row(|z| z.im),
        }
    }

    pub fn to_state(&self) -> Result<MultipartiteState> {
        let n: usize = self.dims.iter().product();
        let check_shape = |m: &Vec<Vec<f64>>, what: &str| -> Result<()> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                return Err(Error::DimMismatch(format!(
                    "{what} must be {n}x{n} for dims {:?}",
                    self.dims
                )));
            }
            Ok(())
        };
        check_shape(&self.rho_real, "rho_real")?;
        check_shape(&self.rho_imag, "rho_imag")?;
        let rho = CMatrix::from_fn(n, n, |i, j| {
            Complex64::new(self.rho_real[i][j], self.rho_imag[i][j])
        });
        MultipartiteState::new(rho, self.dims.clone(), self.labels.clone())
    }
}

pub fn read_state_file(path: &Path) -> Result<MultipartiteState> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("reading {}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text)
        .map_err(|e| Error::Io(format!("parsing {}: {e}", path.display())))?;
    file.to_state()
}

pub fn write_state_file(path: &Path, s: &MultipartiteState) -> Result<()> {
    let file = StateFile::from_state(s);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Io(format!("serializing state: {e}")))?;
    std::fs::write(path, text).map_err(|e| Error::Io(format!("writing {}: {e}", path.display())))
}
