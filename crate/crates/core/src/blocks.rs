//! Block decomposition of the coordinate space.
//!
//! A [`BlockPartition`] splits `{0, .., n-1}` into `b` disjoint index sets. The
//! injection `U_i` places a block vector into a zero `n`-vector and the
//! extraction `U_iᵀ` reads it back, so that `Σ U_i U_iᵀ = I` and
//! `‖x‖² = Σ ‖U_iᵀ x‖²`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionSpec {
    /// `blocks` contiguous runs; sizes differ by at most one, larger first.
    Contiguous { blocks: usize },
    /// Row-major rectangular tiles of a `height × width` image.
    Tiles {
        height: usize,
        width: usize,
        tile_height: usize,
        tile_width: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionKind {
    Contiguous,
    Tiles {
        height: usize,
        width: usize,
        tile_height: usize,
        tile_width: usize,
    },
}

/// Geometry of one tile: top-left corner and extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileRect {
    pub row: usize,
    pub col: usize,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
    kind: PartitionKind,
}

impl BlockPartition {
    pub fn new(n: usize, spec: PartitionSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
        }
        match spec {
            PartitionSpec::Contiguous { blocks } => Self::contiguous(n, blocks),
            PartitionSpec::Tiles {
                height,
                width,
                tile_height,
                tile_width,
            } => Self::tiles(n, height, width, tile_height, tile_width),
        }
    }

    /// The trivial partition with a single block covering every coordinate.
    pub fn single(n: usize) -> Result<Self> {
        Self::new(n, PartitionSpec::Contiguous { blocks: 1 })
    }

    fn contiguous(n: usize, b: usize) -> Result<Self> {
        if b == 0 || b > n {
            return Err(Error::InvalidBlockCount { blocks: b, n });
        }
        let base = n / b;
        let extra = n % b;
        let mut start = 0;
        let blocks = (0..b)
            .map(|i| {
                let len = base + usize::from(i < extra);
                let block: Vec<usize> = (start..start + len).collect();
                start += len;
                block
            })
            .collect();
        Ok(Self {
            n,
            blocks,
            kind: PartitionKind::Contiguous,
        })
    }

    fn tiles(n: usize, height: usize, width: usize, th: usize, tw: usize) -> Result<Self> {
        if height * width != n {
            return Err(Error::DimensionMismatch(format!(
                "image {height}x{width} does not have {n} pixels"
            )));
        }
        if th == 0 || th > height || tw == 0 || tw > width {
            return Err(Error::InvalidParameter(format!(
                "tile {th}x{tw} does not fit image {height}x{width}"
            )));
        }
        let mut blocks = Vec::new();
        for r0 in (0..height).step_by(th) {
            for c0 in (0..width).step_by(tw) {
                let r1 = (r0 + th).min(height);
                let c1 = (c0 + tw).min(width);
                let mut block = Vec::with_capacity((r1 - r0) * (c1 - c0));
                for r in r0..r1 {
                    block.extend((c0..c1).map(|c| r * width + c));
                }
                blocks.push(block);
            }
        }
        Ok(Self {
            n,
            blocks,
            kind: PartitionKind::Tiles {
                height,
                width,
                tile_height: th,
                tile_width: tw,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn kind(&self) -> PartitionKind {
        self.kind
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> Result<&[usize]> {
        self.blocks
            .get(i)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                blocks: self.blocks.len(),
            })
    }

    pub fn block_len(&self, i: usize) -> Result<usize> {
        self.block(i).map(<[usize]>::len)
    }

    /// Geometry of tile `i`; `None` for contiguous partitions.
    pub fn tile_rect(&self, i: usize) -> Option<TileRect> {
        let PartitionKind::Tiles {
            height,
            width,
            tile_height,
            tile_width,
        } = self.kind
        else {
            return None;
        };
        let tiles_per_row = width.div_ceil(tile_width);
        if i >= self.blocks.len() {
            return None;
        }
        let row = (i / tiles_per_row) * tile_height;
        let col = (i % tiles_per_row) * tile_width;
        Some(TileRect {
            row,
            col,
            rows: tile_height.min(height - row),
            cols: tile_width.min(width - col),
        })
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: len,
            });
        }
        Ok(())
    }

    /// `U_iᵀ x`: coordinates of `x` in block `i`, ascending index order.
    pub fn extract(&self, x: &[f64], i: usize) -> Result<Vec<f64>> {
        self.check_dim(x.len())?;
        let idx = self.block(i)?;
        Ok(idx.iter().map(|&j| x[j]).collect())
    }

    /// `U_i h`: an `n`-vector holding `h` on block `i` and zeros elsewhere.
    pub fn inject(&self, h: &[f64], i: usize) -> Result<Vec<f64>> {
        let idx = self.block(i)?;
        if h.len() != idx.len() {
            return Err(Error::LengthMismatch {
                expected: idx.len(),
                got: h.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        for (&j, &v) in idx.iter().zip(h) {
            out[j] = v;
        }
        Ok(out)
    }

    /// Overwrite block `i` of `x` with `h`.
    pub fn scatter(&self, x: &mut [f64], h: &[f64], i: usize) -> Result<()> {
        self.check_dim(x.len())?;
        let idx = self.block(i)?;
        if h.len() != idx.len() {
            return Err(Error::LengthMismatch {
                expected: idx.len(),
                got: h.len(),
            });
        }
        for (&j, &v) in idx.iter().zip(h) {
            x[j] = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn contiguous(n: usize, b: usize) -> BlockPartition {
        BlockPartition::new(n, PartitionSpec::Contiguous { blocks: b }).unwrap()
    }

    #[test]
    fn sixteen_tiles_of_forty() {
        let p = BlockPartition::new(
            25600,
            PartitionSpec::Tiles {
                height: 160,
                width: 160,
                tile_height: 40,
                tile_width: 40,
            },
        )
        .unwrap();
        assert_eq!(p.num_blocks(), 16);
        assert!(p.blocks().iter().all(|b| b.len() == 1600));
    }

    #[test]
    fn contiguous_splits() {
        assert_eq!(contiguous(6, 3).blocks(), &[vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(contiguous(5, 3).blocks(), &[vec![0, 1], vec![2, 3], vec![4]]);
        assert_eq!(contiguous(4, 1).blocks(), &[vec![0, 1, 2, 3]]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            BlockPartition::new(3, PartitionSpec::Contiguous { blocks: 4 }),
            Err(Error::InvalidBlockCount { .. })
        ));
        assert!(matches!(
            BlockPartition::new(3, PartitionSpec::Contiguous { blocks: 0 }),
            Err(Error::InvalidBlockCount { .. })
        ));
        assert!(matches!(
            BlockPartition::new(
                10,
                PartitionSpec::Tiles {
                    height: 3,
                    width: 3,
                    tile_height: 1,
                    tile_width: 1
                }
            ),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ragged_edge_tiles() {
        let p = BlockPartition::new(
            35,
            PartitionSpec::Tiles {
                height: 5,
                width: 7,
                tile_height: 2,
                tile_width: 3,
            },
        )
        .unwrap();
        assert_eq!(p.num_blocks(), 9);
        assert_eq!(p.block(0).unwrap(), &[0, 1, 2, 7, 8, 9]);
        assert_eq!(p.block(2).unwrap(), &[6, 13]);
        assert_eq!(p.block(8).unwrap(), &[34]);
        assert_eq!(
            p.tile_rect(8),
            Some(TileRect {
                row: 4,
                col: 6,
                rows: 1,
                cols: 1
            })
        );
    }

    #[test]
    fn extract_and_inject() {
        let p = contiguous(4, 2);
        assert_eq!(p.extract(&[1.0, 2.0, 3.0, 4.0], 1).unwrap(), vec![3.0, 4.0]);
        let p3 = contiguous(3, 3);
        assert_eq!(p3.inject(&[7.0], 1).unwrap(), vec![0.0, 7.0, 0.0]);
        assert!(matches!(p3.inject(&[7.0, 1.0], 1), Err(Error::LengthMismatch { .. })));
        assert!(matches!(p3.extract(&[0.0; 3], 3), Err(Error::IndexOutOfRange { .. })));

        let one = contiguous(5, 1);
        let x = [1.0, -2.0, 3.5, 0.0, 9.0];
        assert_eq!(one.extract(&x, 0).unwrap(), x.to_vec());
        assert_eq!(one.inject(&x, 0).unwrap(), x.to_vec());
    }

    #[test]
    fn norm_preservation_on_random_vector() {
        let mut rng = SplitMix64::new(5);
        let x = rng.normal_vec(101);
        let p = contiguous(101, 7);
        let total: f64 = (0..7)
            .map(|i| crate::linalg::norm_sq(&p.extract(&x, i).unwrap()))
            .sum();
        let expect = crate::linalg::norm_sq(&x);
        assert!((total - expect).abs() <= 1e-12 * expect);
    }
}
