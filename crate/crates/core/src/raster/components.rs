use super::BinaryMask;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjacency {
    Four,
    Eight,
}

/// Connected-component labeling of a mask.
///
/// `labels[i] == 0` marks background; components are numbered `1..=count()` in
/// order of their first pixel in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    /// `sizes[id - 1]` is the pixel count of component `id`.
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn mask_of(&self, id: u32) -> BinaryMask {
        BinaryMask::new(
            self.width,
            self.height,
            self.labels.iter().map(|&l| l == id).collect(),
        )
        .expect("labels sized to the mask")
    }
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // keep the smaller (earlier) label as root
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }
}

/// Two-pass union-find labeling.
pub fn connected_components(mask: &BinaryMask, adjacency: Adjacency) -> Components {
    let (w, h) = mask.dims();
    let mut provisional = vec![0u32; w * h];
    let mut sets = DisjointSet { parent: vec![0] };

    let back: &[(isize, isize)] = match adjacency {
        Adjacency::Four => &[(-1, 0), (0, -1)],
        Adjacency::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
    };

    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let mut current = 0u32;
            for &(dr, dc) in back {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nc as usize >= w {
                    continue;
                }
                let l = provisional[nr as usize * w + nc as usize];
                if l == 0 {
                    continue;
                }
                if current == 0 {
                    current = l;
                } else if current != l {
                    sets.union(current, l);
                }
            }
            if current == 0 {
                current = sets.make();
            }
            provisional[r * w + c] = current;
        }
    }

    // Roots are the minimum provisional label of each set, so visiting
    // provisional labels in increasing order yields first-occurrence numbering.
    let mut remap = vec![0u32; sets.parent.len()];
    let mut next = 0u32;
    for l in 1..sets.parent.len() as u32 {
        let root = sets.find(l);
        if remap[root as usize] == 0 {
            next += 1;
            remap[root as usize] = next;
        }
        remap[l as usize] = remap[root as usize];
    }

    let mut sizes = vec![0usize; next as usize];
    let labels: Vec<u32> = provisional
        .into_iter()
        .map(|l| {
            let id = remap[l as usize];
            if id > 0 {
                sizes[id as usize - 1] += 1;
            }
            id
        })
        .collect();

    Components {
        width: w,
        height: h,
        labels,
        sizes,
    }
}

/// The 8-connected component with the most pixels. Ties go to the component
/// containing the smallest row-major pixel index.
pub fn largest_component(mask: &BinaryMask) -> Result<BinaryMask> {
    let comps = connected_components(mask, Adjacency::Eight);
    let mut best: Option<(usize, usize)> = None;
    for (i, &size) in comps.sizes.iter().enumerate() {
        if best.is_none_or(|(_, s)| size > s) {
            best = Some((i, size));
        }
    }
    let (idx, _) = best.ok_or(Error::EmptyMask)?;
    Ok(comps.mask_of(idx as u32 + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    use proptest::prelude::*;

    fn bfs_partition(mask: &BinaryMask, adjacency: Adjacency) -> Vec<u32> {
        let (w, h) = mask.dims();
        let mut out = vec![0u32; w * h];
        let mut next = 0;
        for start in 0..w * h {
            if !mask.data()[start] || out[start] != 0 {
                continue;
            }
            next += 1;
            out[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(p) = queue.pop_front() {
                let (r, c) = ((p / w) as isize, (p % w) as isize);
                for dr in -1..=1isize {
                    for dc in -1..=1isize {
                        if (dr == 0 && dc == 0)
                            || (adjacency == Adjacency::Four && dr != 0 && dc != 0)
                        {
                            continue;
                        }
                        if mask.get_or_false(r + dr, c + dc) {
                            let q = (r + dr) as usize * w + (c + dc) as usize;
                            if out[q] == 0 {
                                out[q] = next;
                                queue.push_back(q);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn empty_mask_has_no_components() {
        let c = connected_components(&BinaryMask::empty(5, 5), Adjacency::Eight);
        assert_eq!(c.count(), 0);
        assert!(matches!(
            largest_component(&BinaryMask::empty(5, 5)),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn diagonal_pair_depends_on_adjacency() {
        let m = BinaryMask::from_pixels(4, 4, &[(1, 1), (2, 2)]).unwrap();
        assert_eq!(connected_components(&m, Adjacency::Eight).count(), 1);
        assert_eq!(connected_components(&m, Adjacency::Four).count(), 2);
    }

    #[test]
    fn longest_line_wins() {
        let mut px: Vec<_> = (0..5).map(|c| (1, c)).collect();
        px.extend((0..3).map(|c| (5, c + 2)));
        let m = BinaryMask::from_pixels(8, 8, &px).unwrap();
        let big = largest_component(&m).unwrap();
        assert_eq!(big.pixels(), (0..5).map(|c| (1, c)).collect::<Vec<_>>());

        let single = BinaryMask::from_pixels(8, 8, &[(6, 6)]).unwrap();
        assert_eq!(largest_component(&single).unwrap(), single);
    }

    #[test]
    fn ties_go_to_smallest_row_major_index() {
        // Two 3-pixel components; the vertical one starts at (0, 6), which
        // precedes the horizontal one's first pixel (2, 0).
        let m = BinaryMask::from_pixels(8, 8, &[(2, 0), (2, 1), (2, 2), (0, 6), (1, 6), (2, 6)])
            .unwrap();
        let comps = connected_components(&m, Adjacency::Eight);
        assert_eq!(comps.sizes, vec![3, 3]);
        let big = largest_component(&m).unwrap();
        assert_eq!(big.pixels(), vec![(0, 6), (1, 6), (2, 6)]);
    }

    #[test]
    fn u_shape_merges_late() {
        // Arms meet only at the bottom row: exercises union of provisional labels.
        let m = BinaryMask::from_fn(5, 4, |(r, c)| c == 0 || c == 4 || r == 3);
        let comps = connected_components(&m, Adjacency::Four);
        assert_eq!(comps.count(), 1);
        assert_eq!(comps.sizes, vec![m.count()]);
    }

    proptest! {
        #[test]
        fn matches_bfs_oracle(
            w in 1usize..33, h in 1usize..33, bits in proptest::collection::vec(any::<bool>(), 1024),
            eight in any::<bool>(),
        ) {
            let m = BinaryMask::from_fn(w, h, |(r, c)| bits[r * 32 + c]);
            let adj = if eight { Adjacency::Eight } else { Adjacency::Four };
            let got = connected_components(&m, adj);
            // first-occurrence numbering makes the partitions identical, not just equivalent
            prop_assert_eq!(&got.labels, &bfs_partition(&m, adj));
            let big = largest_component(&m);
            if m.is_empty() {
                prop_assert!(big.is_err());
            } else {
                let big = big.unwrap();
                prop_assert!(big.is_subset_of(&m));
                let eight = connected_components(&m, Adjacency::Eight);
                prop_assert_eq!(big.count(), *eight.sizes.iter().max().unwrap());
                prop_assert_eq!(connected_components(&big, Adjacency::Eight).count(), 1);
            }
        }
    }
}
