//! Data chunks: the unit of data distribution.
//!
//! A [`DataChunk`] is one contiguous typed array. Chunks are immutable after
//! construction and cheap to hand between execution contexts (the element
//! storage is shared, not copied). [`FunctionData`] is an ordered list of
//! chunks — the argument and result container of every user function.
//!
//! The wire/file encoding of a chunk is fixed: a 1-byte element-type tag
//! (0=U8, 1=I32, 2=I64, 3=F32, 4=F64), a 4-byte little-endian element count,
//! then the elements, little-endian.

use std::fmt;
use std::sync::Arc;

use crate::error::ModelError;

/// Element type of a chunk, with a fixed width in bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementType {
    U8,
    I32,
    I64,
    F32,
    F64,
}

impl ElementType {
    /// Element width in bytes.
    pub fn width(self) -> usize {
        match self {
            ElementType::U8 => 1,
            ElementType::I32 | ElementType::F32 => 4,
            ElementType::I64 | ElementType::F64 => 8,
        }
    }

    /// Wire tag for the chunk encoding.
    pub fn tag(self) -> u8 {
        match self {
            ElementType::U8 => 0,
            ElementType::I32 => 1,
            ElementType::I64 => 2,
            ElementType::F32 => 3,
            ElementType::F64 => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => ElementType::U8,
            1 => ElementType::I32,
            2 => ElementType::I64,
            3 => ElementType::F32,
            4 => ElementType::F64,
            _ => return None,
        })
    }
}

impl fmt::Display for ElementType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElementType::U8 => "u8",
            ElementType::I32 => "i32",
            ElementType::I64 => "i64",
            ElementType::F32 => "f32",
            ElementType::F64 => "f64",
        };
        f.write_str(s)
    }
}

/// Typed storage behind a chunk. Shared on clone.
#[derive(Debug, Clone)]
enum Elements {
    U8(Arc<[u8]>),
    I32(Arc<[i32]>),
    I64(Arc<[i64]>),
    F32(Arc<[f32]>),
    F64(Arc<[f64]>),
}

/// One contiguous typed array; immutable after construction.
#[derive(Debug, Clone)]
pub struct DataChunk {
    elements: Elements,
}

impl DataChunk {
    /// Builds a chunk from raw little-endian bytes.
    ///
    /// The buffer is consumed; its length must equal `count * width(dtype)`,
    /// otherwise `SizeMismatch` is returned.
    pub fn from_bytes(
        dtype: ElementType,
        count: usize,
        payload: Vec<u8>,
    ) -> Result<Self, ModelError> {
        let expected = count * dtype.width();
        if payload.len() != expected {
            return Err(ModelError::SizeMismatch {
                count,
                width: dtype.width(),
                expected,
                actual: payload.len(),
            });
        }
        let elements = match dtype {
            ElementType::U8 => Elements::U8(payload.into()),
            ElementType::I32 => Elements::I32(
                payload
                    .chunks_exact(4)
                    .map(|b| i32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            ElementType::I64 => Elements::I64(
                payload
                    .chunks_exact(8)
                    .map(|b| i64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            ElementType::F32 => Elements::F32(
                payload
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
            ElementType::F64 => Elements::F64(
                payload
                    .chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
        };
        Ok(DataChunk { elements })
    }

    pub fn from_u8(values: Vec<u8>) -> Self {
        DataChunk {
            elements: Elements::U8(values.into()),
        }
    }

    pub fn from_i32(values: Vec<i32>) -> Self {
        DataChunk {
            elements: Elements::I32(values.into()),
        }
    }

    pub fn from_i64(values: Vec<i64>) -> Self {
        DataChunk {
            elements: Elements::I64(values.into()),
        }
    }

    pub fn from_f32(values: Vec<f32>) -> Self {
        DataChunk {
            elements: Elements::F32(values.into()),
        }
    }

    pub fn from_f64(values: Vec<f64>) -> Self {
        DataChunk {
            elements: Elements::F64(values.into()),
        }
    }

    pub fn dtype(&self) -> ElementType {
        match &self.elements {
            Elements::U8(_) => ElementType::U8,
            Elements::I32(_) => ElementType::I32,
            Elements::I64(_) => ElementType::I64,
            Elements::F32(_) => ElementType::F32,
            Elements::F64(_) => ElementType::F64,
        }
    }

    /// Number of elements.
    pub fn len(&self) -> usize {
        match &self.elements {
            Elements::U8(v) => v.len(),
            Elements::I32(v) => v.len(),
            Elements::I64(v) => v.len(),
            Elements::F32(v) => v.len(),
            Elements::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Payload size in bytes.
    pub fn byte_len(&self) -> usize {
        self.len() * self.dtype().width()
    }

    pub fn as_u8(&self) -> Option<&[u8]> {
        match &self.elements {
            Elements::U8(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i32(&self) -> Option<&[i32]> {
        match &self.elements {
            Elements::I32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<&[i64]> {
        match &self.elements {
            Elements::I64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.elements {
            Elements::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match &self.elements {
            Elements::F64(v) => Some(v),
            _ => None,
        }
    }

    /// Little-endian payload bytes, as written to the wire.
    pub fn payload_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        match &self.elements {
            Elements::U8(v) => out.extend_from_slice(v),
            Elements::I32(v) => {
                for x in v.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Elements::I64(v) => {
                for x in v.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Elements::F32(v) => {
                for x in v.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Elements::F64(v) => {
                for x in v.iter() {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    /// Appends the full chunk encoding (tag, count, payload) to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.push(self.dtype().tag());
        out.extend_from_slice(&(self.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload_bytes());
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(5 + self.byte_len());
        self.encode_into(&mut out);
        out
    }

    /// Decodes one chunk starting at `bytes[*pos]`, advancing `pos`.
    ///
    /// On failure returns the absolute offset that could not be read.
    pub fn decode_from(bytes: &[u8], pos: &mut usize) -> Result<Self, usize> {
        let start = *pos;
        let tag = *bytes.get(start).ok_or(start)?;
        let dtype = ElementType::from_tag(tag).ok_or(start)?;
        let count_end = start + 5;
        let count_bytes = bytes.get(start + 1..count_end).ok_or(bytes.len())?;
        let count = u32::from_le_bytes(count_bytes.try_into().unwrap()) as usize;
        let payload_end = count_end + count * dtype.width();
        let payload = bytes.get(count_end..payload_end).ok_or(bytes.len())?;
        *pos = payload_end;
        DataChunk::from_bytes(dtype, count, payload.to_vec()).map_err(|_| start)
    }
}

/// Bit-exact equality: two chunks are equal iff their encodings are equal.
/// Floats compare by bit pattern, so NaN == NaN and -0.0 != 0.0.
impl PartialEq for DataChunk {
    fn eq(&self, other: &Self) -> bool {
        match (&self.elements, &other.elements) {
            (Elements::U8(a), Elements::U8(b)) => a == b,
            (Elements::I32(a), Elements::I32(b)) => a == b,
            (Elements::I64(a), Elements::I64(b)) => a == b,
            (Elements::F32(a), Elements::F32(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (Elements::F64(a), Elements::F64(b)) => {
                a.len() == b.len()
                    && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

impl Eq for DataChunk {}

/// Ordered list of chunks; the unit a user function consumes and produces.
/// Chunk order is significant and preserved through transport and assembly.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FunctionData {
    chunks: Vec<DataChunk>,
}

impl FunctionData {
    pub fn new(chunks: Vec<DataChunk>) -> Self {
        FunctionData { chunks }
    }

    pub fn empty() -> Self {
        FunctionData { chunks: Vec::new() }
    }

    pub fn chunks(&self) -> &[DataChunk] {
        &self.chunks
    }

    pub fn chunk(&self, index: usize) -> Option<&DataChunk> {
        self.chunks.get(index)
    }

    pub fn n_chunks(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn push(&mut self, chunk: DataChunk) {
        self.chunks.push(chunk);
    }

    pub fn extend(&mut self, other: FunctionData) {
        self.chunks.extend(other.chunks);
    }

    pub fn into_chunks(self) -> Vec<DataChunk> {
        self.chunks
    }

    /// Total payload bytes across all chunks.
    pub fn byte_len(&self) -> usize {
        self.chunks.iter().map(|c| c.byte_len()).sum()
    }

    /// Concatenates all elements as f64 (every chunk must be F64).
    pub fn concat_f64(&self) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for c in &self.chunks {
            out.extend_from_slice(c.as_f64()?);
        }
        Some(out)
    }
}

impl FromIterator<DataChunk> for FunctionData {
    fn from_iter<T: IntoIterator<Item = DataChunk>>(iter: T) -> Self {
        FunctionData {
            chunks: iter.into_iter().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_f64_chunk_from_le_bytes() {
        let payload = vec![0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F];
        let c = DataChunk::from_bytes(ElementType::F64, 1, payload).unwrap();
        assert_eq!(c.as_f64().unwrap(), &[1.0]);
    }

    #[test]
    fn zero_element_chunk_is_valid() {
        let c = DataChunk::from_bytes(ElementType::I32, 0, Vec::new()).unwrap();
        assert_eq!(c.len(), 0);
        assert!(c.is_empty());
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let err = DataChunk::from_bytes(ElementType::I32, 2, vec![0; 7]).unwrap_err();
        assert_eq!(
            err,
            ModelError::SizeMismatch {
                count: 2,
                width: 4,
                expected: 8,
                actual: 7
            }
        );
    }

    #[test]
    fn encoding_layout_is_fixed() {
        let c = DataChunk::from_f64(vec![1.0]);
        let bytes = c.encode();
        assert_eq!(&bytes[..5], &[4, 1, 0, 0, 0]);
        assert_eq!(&bytes[5..], &[0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0xF0, 0x3F]);
    }

    #[test]
    fn decode_reports_failure_offset() {
        let mut pos = 0;
        // tag says f64 with count 2 but only one element present
        let mut bytes = vec![4u8, 2, 0, 0, 0];
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        let err = DataChunk::decode_from(&bytes, &mut pos).unwrap_err();
        assert_eq!(err, bytes.len());
    }

    #[test]
    fn float_equality_is_bitwise() {
        let a = DataChunk::from_f64(vec![f64::NAN]);
        let b = DataChunk::from_f64(vec![f64::NAN]);
        assert_eq!(a, b);
        let pos = DataChunk::from_f64(vec![0.0]);
        let neg = DataChunk::from_f64(vec![-0.0]);
        assert_ne!(pos, neg);
    }

    #[test]
    fn chunk_roundtrips_through_encoding() {
        let chunks = vec![
            DataChunk::from_u8(vec![1, 2, 3]),
            DataChunk::from_i32(vec![-5, 7]),
            DataChunk::from_i64(vec![i64::MIN, i64::MAX]),
            DataChunk::from_f32(vec![1.5, -2.25]),
            DataChunk::from_f64(vec![3.141592653589793]),
        ];
        let mut bytes = Vec::new();
        for c in &chunks {
            c.encode_into(&mut bytes);
        }
        let mut pos = 0;
        for c in &chunks {
            let d = DataChunk::decode_from(&bytes, &mut pos).unwrap();
            assert_eq!(&d, c);
        }
        assert_eq!(pos, bytes.len());
    }
}
