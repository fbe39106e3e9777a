/// Occupation bitmasks grouped by excitation number. Bit `i` is site `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    sectors: Vec<Vec<u32>>,
    ordinal: Vec<u32>,
}

impl SectorBasis {
    pub fn new(sites: usize) -> Self {
        assert!(sites <= 24, "bitmask basis limited to 24 sites");
        let mut sectors = vec![Vec::new(); sites + 1];
        let mut ordinal = vec![0u32; 1 << sites];
        for mask in 0u32..(1u32 << sites) {
            let k = mask.count_ones() as usize;
            ordinal[mask as usize] = sectors[k].len() as u32;
            sectors[k].push(mask);
        }
        Self {
            sites,
            sectors,
            ordinal,
        }
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    /// Masks with `k` excitations, ascending.
    pub fn sector(&self, k: usize) -> &[u32] {
        &self.sectors[k]
    }

    pub fn dim(&self, k: usize) -> usize {
        self.sectors.get(k).map_or(0, Vec::len)
    }

    /// Position of `mask` inside its own sector.
    pub fn ordinal(&self, mask: u32) -> usize {
        self.ordinal[mask as usize] as usize
    }
}
