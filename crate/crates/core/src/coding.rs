//! Binary sparse coding: image patches, dictionaries, and the mapping from
//! the L0-penalized reconstruction objective
//!
//! ```text
//! E(a) = ½‖x − D a‖² + λ‖a‖₀
//! ```
//!
//! onto a [`QuboProblem`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{BinaryState, QuboProblem};

/// Grayscale image, row-major, intensities nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    rows: usize,
    cols: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                found: pixels.len(),
            });
        }
        Ok(Self { rows, cols, pixels })
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            pixels: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.cols + col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImagePatch {
    pub values: Vec<f64>,
    /// Top-left pixel `(row, col)` in the source image.
    pub origin: (usize, usize),
    /// Edge length of the square patch; zero for free-standing vectors.
    #[serde(default)]
    pub edge: usize,
}

impl ImagePatch {
    /// A free-standing signal vector with no image placement.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("patch has no values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("patch values must be finite".into()));
        }
        Ok(Self {
            values,
            origin: (0, 0),
            edge: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn squared_norm(&self) -> f64 {
        dot(&self.values, &self.values)
    }
}

/// Split an image into non-overlapping `edge × edge` patches, row-major in
/// patch order and row-major within each patch.
pub fn patch_image(image: &Image, edge: usize) -> Result<Vec<ImagePatch>> {
    if edge == 0 || image.rows % edge != 0 || image.cols % edge != 0 {
        return Err(Error::InvalidConfig(format!(
            "{}x{} image is not divisible into {edge}x{edge} patches",
            image.rows, image.cols
        )));
    }
    let mut patches = Vec::with_capacity((image.rows / edge) * (image.cols / edge));
    for pr in (0..image.rows).step_by(edge) {
        for pc in (0..image.cols).step_by(edge) {
            let mut values = Vec::with_capacity(edge * edge);
            for r in pr..pr + edge {
                values.extend_from_slice(&image.pixels[r * image.cols + pc..r * image.cols + pc + edge]);
            }
            patches.push(ImagePatch {
                values,
                origin: (pr, pc),
                edge,
            });
        }
    }
    Ok(patches)
}

/// Reassemble patches produced by [`patch_image`] (or reconstructions that
/// kept their origins) into an image.
pub fn unpatch(patches: &[ImagePatch]) -> Result<Image> {
    let first = patches.first().ok_or(Error::Empty("no patches to reassemble"))?;
    let edge = first.edge;
    if edge == 0 {
        return Err(Error::InvalidConfig("patches carry no image placement".into()));
    }
    let rows = patches.iter().map(|p| p.origin.0 + edge).max().unwrap_or(0);
    let cols = patches.iter().map(|p| p.origin.1 + edge).max().unwrap_or(0);
    let mut pixels = vec![0.0; rows * cols];
    let mut covered = vec![false; rows * cols];
    for p in patches {
        if p.edge != edge || p.values.len() != edge * edge {
            return Err(Error::Dimension {
                expected: edge * edge,
                found: p.values.len(),
            });
        }
        for r in 0..edge {
            for c in 0..edge {
                let k = (p.origin.0 + r) * cols + p.origin.1 + c;
                if covered[k] {
                    return Err(Error::InvalidConfig(format!("patches overlap at pixel {k}")));
                }
                covered[k] = true;
                pixels[k] = p.values[r * edge + c];
            }
        }
    }
    if covered.iter().any(|&c| !c) {
        return Err(Error::InvalidConfig("patches do not tile the image".into()));
    }
    Image::new(rows, cols, pixels)
}

/// A set of `p` atoms, each of dimension `m`. Atom norms are unconstrained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DictionaryJson", into = "DictionaryJson")]
pub struct Dictionary {
    m: usize,
    atoms: Vec<Vec<f64>>,
}

/// On-disk form: `values` holds the `p × m` atom matrix row-major, one atom
/// per row.
#[derive(Serialize, Deserialize)]
struct DictionaryJson {
    m: usize,
    p: usize,
    values: Vec<f64>,
}

impl TryFrom<DictionaryJson> for Dictionary {
    type Error = Error;

    fn try_from(doc: DictionaryJson) -> Result<Self> {
        if doc.m == 0 || doc.values.len() != doc.m * doc.p {
            return Err(Error::Dimension {
                expected: doc.m * doc.p,
                found: doc.values.len(),
            });
        }
        Dictionary::new(doc.values.chunks(doc.m).map(<[f64]>::to_vec).collect())
    }
}

impl From<Dictionary> for DictionaryJson {
    fn from(d: Dictionary) -> Self {
        DictionaryJson {
            m: d.m,
            p: d.atoms.len(),
            values: d.atoms.concat(),
        }
    }
}

impl Dictionary {
    pub fn new(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let m = atoms.first().ok_or(Error::Empty("dictionary has no atoms"))?.len();
        if m == 0 {
            return Err(Error::Empty("dictionary atoms have zero length"));
        }
        for atom in &atoms {
            if atom.len() != m {
                return Err(Error::Dimension {
                    expected: m,
                    found: atom.len(),
                });
            }
            if atom.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidProblem("dictionary entries must be finite".into()));
            }
        }
        Ok(Self { m, atoms })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i]
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub(crate) fn atom_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.atoms[i]
    }

    pub fn norms(&self) -> Vec<f64> {
        self.atoms.iter().map(|a| dot(a, a).sqrt()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dictionaries are always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path.as_ref(), self.to_json().as_bytes())
    }

    fn check_patch(&self, x: &ImagePatch) -> Result<()> {
        if x.len() != self.m {
            return Err(Error::Dimension {
                expected: self.m,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_code(&self, a: &BinaryState) -> Result<()> {
        if a.len() != self.p() {
            return Err(Error::Dimension {
                expected: self.p(),
                found: a.len(),
            });
        }
        Ok(())
    }
}

/// How the quadratic self-interaction `a_iᵀ D_iᵀ D_i a_i` is folded into the
/// linear term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuboMode {
    /// `h_i = −xᵀD_i + D_iᵀD_i + λ`, `Q_ij = D_iᵀD_j`, no offset: the full
    /// self-interaction on the diagonal. The archived instances use this form.
    #[default]
    Full,
    /// `h_i = −xᵀD_i + ½D_iᵀD_i + λ`, `Q_ij = D_iᵀD_j`, offset `½‖x‖²`, so the
    /// QUBO energy equals the sparse coding objective for every `a`.
    Exact,
}

impl std::str::FromStr for QuboMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(QuboMode::Full),
            "exact" => Ok(QuboMode::Exact),
            other => Err(Error::InvalidConfig(format!("unknown qubo mode `{other}`"))),
        }
    }
}

pub fn build_qubo(x: &ImagePatch, dict: &Dictionary, lambda: f64, mode: QuboMode) -> Result<QuboProblem> {
    dict.check_patch(x)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be a finite non-negative number, got {lambda}"
        )));
    }
    let p = dict.p();
    let self_weight = match mode {
        QuboMode::Full => 1.0,
        QuboMode::Exact => 0.5,
    };
    let linear = (0..p)
        .map(|i| {
            let atom = dict.atom(i);
            -dot(&x.values, atom) + self_weight * dot(atom, atom) + lambda
        })
        .collect();
    let mut pairs = Vec::with_capacity(p * (p - 1) / 2);
    for i in 0..p {
        for j in (i + 1)..p {
            pairs.push(((i, j), dot(dict.atom(i), dict.atom(j))));
        }
    }
    let offset = match mode {
        QuboMode::Full => 0.0,
        QuboMode::Exact => 0.5 * x.squared_norm(),
    };
    QuboProblem::new(linear, pairs, offset)
}

/// `D a`: the sum of the atoms selected by `a`.
pub fn reconstruct(dict: &Dictionary, a: &BinaryState) -> Result<ImagePatch> {
    dict.check_code(a)?;
    let mut values = vec![0.0; dict.m()];
    for i in a.active() {
        for (v, d) in values.iter_mut().zip(dict.atom(i)) {
            *v += d;
        }
    }
    Ok(ImagePatch {
        values,
        origin: (0, 0),
        edge: 0,
    })
}

/// Reconstruction placed at the source patch's position, ready for [`unpatch`].
pub fn reconstruct_patch(source: &ImagePatch, dict: &Dictionary, a: &BinaryState) -> Result<ImagePatch> {
    dict.check_patch(source)?;
    let mut out = reconstruct(dict, a)?;
    out.origin = source.origin;
    out.edge = source.edge;
    Ok(out)
}

/// `½‖x − D a‖²`.
pub fn reconstruction_error(x: &ImagePatch, dict: &Dictionary, a: &BinaryState) -> Result<f64> {
    dict.check_patch(x)?;
    let recon = reconstruct(dict, a)?;
    Ok(0.5
        * x.values
            .iter()
            .zip(&recon.values)
            .map(|(u, v)| (u - v) * (u - v))
            .sum::<f64>())
}

/// `½‖x − D a‖² + λ‖a‖₀`.
pub fn objective(x: &ImagePatch, dict: &Dictionary, a: &BinaryState, lambda: f64) -> Result<f64> {
    Ok(reconstruction_error(x, dict, a)? + lambda * a.popcount() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeMetrics {
    pub recon_error: f64,
    pub sparsity: usize,
    pub objective: f64,
}

pub fn metrics(x: &ImagePatch, dict: &Dictionary, a: &BinaryState, lambda: f64) -> Result<CodeMetrics> {
    let recon_error = reconstruction_error(x, dict, a)?;
    let sparsity = a.popcount();
    Ok(CodeMetrics {
        recon_error,
        sparsity,
        objective: recon_error + lambda * sparsity as f64,
    })
}

/// `"k / n"`, the sparsity notation of the result tables.
pub fn sparsity_label(state: &BinaryState) -> String {
    format!("{} / {}", state.popcount(), state.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCode {
    pub activation: BinaryState,
    pub objective_value: f64,
    pub sparsity: usize,
}

impl SparseCode {
    pub fn new(x: &ImagePatch, dict: &Dictionary, activation: BinaryState, lambda: f64) -> Result<Self> {
        let objective_value = objective(x, dict, &activation, lambda)?;
        Ok(Self {
            sparsity: activation.popcount(),
            activation,
            objective_value,
        })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}
