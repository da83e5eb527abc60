//! MLF1 feature files: `"MLF1"`, u32 T, u32 D, f32 step seconds, then T*D
//! f32 values in step-major order. Everything little-endian.

use std::path::Path;

use ndarray::{Array2, ArrayView1};

use super::IngestError;
use crate::domain::ClipMeta;

pub const FEATURE_MAGIC: &[u8; 4] = b"MLF1";
const HEADER_LEN: usize = 16;

/// Precomputed per-step clip features, `num_steps x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    clip_id: String,
    step_seconds: f32,
    values: Array2<f32>,
}

impl FeatureMatrix {
    pub fn new(clip_id: impl Into<String>, step_seconds: f32, values: Array2<f32>) -> Result<Self, IngestError> {
        let (num_steps, dim) = values.dim();
        if num_steps == 0 || dim == 0 || !(step_seconds.is_finite() && step_seconds > 0.0) {
            return Err(IngestError::BadShape { num_steps, dim, step_seconds });
        }
        if let Some(((step, dim), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(IngestError::NonFinite { step, dim });
        }
        Ok(Self { clip_id: clip_id.into(), step_seconds, values })
    }

    pub fn clip_id(&self) -> &str {
        &self.clip_id
    }

    pub fn num_steps(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn step_seconds(&self) -> f64 {
        f64::from(self.step_seconds)
    }

    pub fn values(&self) -> &Array2<f32> {
        &self.values
    }

    pub fn row(&self, step: usize) -> ArrayView1<'_, f32> {
        self.values.row(step)
    }

    /// Center time of feature step `step`, in seconds.
    pub fn step_center(&self, step: usize) -> f64 {
        (step as f64 + 0.5) * self.step_seconds()
    }

    /// Checks the matrix belongs to `clip` and spans its duration to within
    /// one feature step.
    pub fn check_clip(&self, clip: &ClipMeta) -> Result<(), IngestError> {
        if self.clip_id != clip.clip_id() {
            return Err(IngestError::validation(
                format!("features {}", self.clip_id),
                format!("expected clip {}", clip.clip_id()),
            ));
        }
        let covered = self.num_steps() as f64 * self.step_seconds();
        if (covered - clip.duration()).abs() > self.step_seconds() + 1e-6 {
            return Err(IngestError::validation(
                format!("features {}", self.clip_id),
                format!(
                    "{} steps x {}s = {covered}s does not match clip duration {}s",
                    self.num_steps(),
                    self.step_seconds,
                    clip.duration()
                ),
            ));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.values.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&(self.num_steps() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.step_seconds.to_le_bytes());
        for v in self.values.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes an MLF1 buffer. `path` is only used in error messages.
    pub fn from_bytes(clip_id: impl Into<String>, bytes: &[u8], path: &Path) -> Result<Self, IngestError> {
        if bytes.len() < 4 || &bytes[..4] != FEATURE_MAGIC {
            return Err(IngestError::BadMagic { path: path.into() });
        }
        if bytes.len() < HEADER_LEN {
            return Err(IngestError::Truncated { path: path.into(), expected: HEADER_LEN, found: bytes.len() });
        }
        let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
        let num_steps = u32::from_le_bytes(word(4)) as usize;
        let dim = u32::from_le_bytes(word(8)) as usize;
        let step_seconds = f32::from_le_bytes(word(12));

        let payload = &bytes[HEADER_LEN..];
        let expected = num_steps.checked_mul(dim).and_then(|n| n.checked_mul(4)).ok_or(IngestError::BadShape {
            num_steps,
            dim,
            step_seconds,
        })?;
        if payload.len() < expected {
            return Err(IngestError::Truncated { path: path.into(), expected, found: payload.len() });
        }
        if payload.len() > expected {
            return Err(IngestError::TrailingBytes { path: path.into(), extra: payload.len() - expected });
        }
        let values: Vec<f32> = payload.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        let values = Array2::from_shape_vec((num_steps, dim), values).map_err(|_| IngestError::BadShape {
            num_steps,
            dim,
            step_seconds,
        })?;
        FeatureMatrix::new(clip_id, step_seconds, values)
    }
}

/// Loads `<clip_id>.mlf`; the clip id is taken from the file stem.
pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMatrix, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io { path: path.into(), source })?;
    let clip_id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    FeatureMatrix::from_bytes(clip_id, &bytes, path)
}

pub fn save_features(fm: &FeatureMatrix, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    std::fs::write(path, fm.to_bytes()).map_err(|source| IngestError::Io { path: path.into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FeatureMatrix {
        let values = Array2::from_shape_fn((4, 3), |(t, d)| (t * 3 + d) as f32 * 0.5);
        FeatureMatrix::new("clip_a", 2.0, values).unwrap()
    }

    #[test]
    fn header_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("clip_a.mlf");
        save_features(&sample(), &p).unwrap();
        let fm = load_features(&p).unwrap();
        assert_eq!(fm.num_steps(), 4);
        assert_eq!(fm.dim(), 3);
        assert_eq!(fm.values().len(), 12);
        assert_eq!(fm, sample());
    }

    #[test]
    fn layout_is_step_major_little_endian() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"MLF1");
        assert_eq!(&bytes[4..8], &4u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &2.0f32.to_le_bytes());
        // value at (step 1, dim 0) = 1.5 is the fourth float
        assert_eq!(&bytes[16 + 12..16 + 16], &1.5f32.to_le_bytes());
        assert_eq!(bytes.len(), 16 + 48);
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = sample().to_bytes();
        bytes.truncate(bytes.len() - 4);
        let err = FeatureMatrix::from_bytes("c", &bytes, Path::new("c.mlf")).unwrap_err();
        assert!(matches!(err, IngestError::Truncated { expected: 48, found: 44, .. }), "{err}");
    }

    #[test]
    fn bad_magic() {
        let mut bytes = sample().to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            FeatureMatrix::from_bytes("c", &bytes, Path::new("c.mlf")),
            Err(IngestError::BadMagic { .. })
        ));
        assert!(matches!(FeatureMatrix::from_bytes("c", b"ML", Path::new("c.mlf")), Err(IngestError::BadMagic { .. })));
    }

    #[test]
    fn nan_entry_is_named() {
        let mut bytes = sample().to_bytes();
        // step 2, dim 1 -> flat index 7
        let off = 16 + 7 * 4;
        bytes[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        let err = FeatureMatrix::from_bytes("c", &bytes, Path::new("c.mlf")).unwrap_err();
        assert!(matches!(err, IngestError::NonFinite { step: 2, dim: 1 }), "{err}");
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = sample().to_bytes();
        bytes.push(0);
        assert!(matches!(
            FeatureMatrix::from_bytes("c", &bytes, Path::new("c.mlf")),
            Err(IngestError::TrailingBytes { extra: 1, .. })
        ));
    }

    #[test]
    fn clip_duration_check() {
        let fm = sample(); // 4 steps x 2s = 8s
        assert!(fm.check_clip(&ClipMeta::new("clip_a", 8.0).unwrap()).is_ok());
        assert!(fm.check_clip(&ClipMeta::new("clip_a", 9.5).unwrap()).is_ok());
        assert!(fm.check_clip(&ClipMeta::new("clip_a", 11.0).unwrap()).is_err());
        assert!(fm.check_clip(&ClipMeta::new("other", 8.0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn bytes_round_trip(t in 1usize..12, d in 1usize..9, step in 0.01f32..5.0, seed in any::<u32>()) {
            let values = Array2::from_shape_fn((t, d), |(i, j)| {
                ((seed as usize ^ (i * 31 + j * 7)) % 1000) as f32 / 37.0 - 10.0
            });
            let fm = FeatureMatrix::new("x", step, values).unwrap();
            let back = FeatureMatrix::from_bytes("x", &fm.to_bytes(), Path::new("x.mlf")).unwrap();
            prop_assert_eq!(back, fm);
        }
    }
}
