use sha2::{Digest, Sha256};

use super::DsmError;

pub const MERKLE_LEAVES: usize = 16;
pub const MERKLE_DEPTH: usize = 4;

pub type Node = [u8; 32];

/// A public key registered in the tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleLeaf {
    pub npkt: u8,
    pub npk: Vec<u8>,
}

/// `SHA-256(npkt << 4 | npkid || npk)`.
pub fn leaf_hash(npkt: u8, npkid: u8, npk: &[u8]) -> Node {
    Sha256::new()
        .chain_update([(npkt << 4) | (npkid & 0xF)])
        .chain_update(npk)
        .finalize()
        .into()
}

fn node(left: &Node, right: &Node) -> Node {
    Sha256::new()
        .chain_update(left)
        .chain_update(right)
        .finalize()
        .into()
}

/// Hashes a leaf up its authentication path, bottom sibling first.
pub fn fold_path(leaf: Node, position: u8, path: &[Node; MERKLE_DEPTH]) -> Node {
    let mut acc = leaf;
    for (level, sibling) in path.iter().enumerate() {
        acc = if (position >> level) & 1 == 0 {
            node(&acc, sibling)
        } else {
            node(sibling, &acc)
        };
    }
    acc
}

/// 16-leaf SHA-256 tree. `levels[0]` are the leaf hashes, `levels[4]` the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    leaves: Vec<MerkleLeaf>,
    levels: Vec<Vec<Node>>,
}

impl MerkleTree {
    pub fn new(leaves: Vec<MerkleLeaf>) -> Result<MerkleTree, DsmError> {
        if leaves.len() != MERKLE_LEAVES {
            return Err(DsmError::LeafCount(leaves.len()));
        }
        let mut levels = vec![leaves
            .iter()
            .enumerate()
            .map(|(i, l)| leaf_hash(l.npkt, i as u8, &l.npk))
            .collect::<Vec<_>>()];
        while levels.last().expect("non-empty").len() > 1 {
            let next = levels
                .last()
                .expect("non-empty")
                .chunks(2)
                .map(|p| node(&p[0], &p[1]))
                .collect();
            levels.push(next);
        }
        Ok(MerkleTree { leaves, levels })
    }

    pub fn root(&self) -> Node {
        self.levels[MERKLE_DEPTH][0]
    }

    pub fn leaf(&self, npkid: u8) -> Option<&MerkleLeaf> {
        self.leaves.get(usize::from(npkid))
    }

    pub fn leaves(&self) -> &[MerkleLeaf] {
        &self.leaves
    }

    /// All 31 hashes, leaves first.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.levels.iter().flatten()
    }

    pub fn path(&self, npkid: u8) -> Option<[Node; MERKLE_DEPTH]> {
        if usize::from(npkid) >= MERKLE_LEAVES {
            return None;
        }
        let mut out = [[0u8; 32]; MERKLE_DEPTH];
        for (level, slot) in out.iter_mut().enumerate() {
            *slot = self.levels[level][(usize::from(npkid) >> level) ^ 1];
        }
        Some(out)
    }

    /// Exchange file: `root=<hex>` then `leaf <id> npkt=<n> npk=<hex>` per leaf.
    pub fn to_file(&self) -> String {
        let mut out = format!("root={}\n", hex::encode(self.root()));
        for (i, l) in self.leaves.iter().enumerate() {
            out.push_str(&format!("leaf {i} npkt={} npk={}\n", l.npkt, hex::encode(&l.npk)));
        }
        out
    }

    /// Parses an exchange file and checks the stated root.
    pub fn from_file(text: &str) -> Result<MerkleTree, DsmError> {
        let mut root = None;
        let mut leaves: Vec<Option<MerkleLeaf>> = vec![None; MERKLE_LEAVES];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |reason: &str| DsmError::TreeFile {
                line: i + 1,
                reason: reason.to_string(),
            };
            if let Some(hex_root) = line.strip_prefix("root=") {
                let bytes = hex::decode(hex_root).map_err(|_| bad("root is not hex"))?;
                let node: Node = bytes.try_into().map_err(|_| bad("root is not 32 bytes"))?;
                root = Some(node);
                continue;
            }
            let mut parts = line.split_whitespace();
            if parts.next() != Some("leaf") {
                return Err(bad("expected `root=` or `leaf`"));
            }
            let id: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .filter(|&id| id < MERKLE_LEAVES)
                .ok_or_else(|| bad("leaf id must be 0..15"))?;
            let npkt: u8 = parts
                .next()
                .and_then(|s| s.strip_prefix("npkt="))
                .and_then(|s| s.parse().ok())
                .filter(|&n| n < 16)
                .ok_or_else(|| bad("bad npkt"))?;
            let npk = parts
                .next()
                .and_then(|s| s.strip_prefix("npk="))
                .and_then(|s| hex::decode(s).ok())
                .ok_or_else(|| bad("bad npk"))?;
            if leaves[id].replace(MerkleLeaf { npkt, npk }).is_some() {
                return Err(bad("duplicate leaf id"));
            }
        }
        let leaves: Vec<MerkleLeaf> = leaves.into_iter().flatten().collect();
        let tree = MerkleTree::new(leaves)?;
        match root {
            Some(r) if r == tree.root() => Ok(tree),
            Some(_) => Err(DsmError::TreeFile {
                line: 1,
                reason: "stated root does not match the leaves".into(),
            }),
            None => Err(DsmError::TreeFile {
                line: 1,
                reason: "missing root".into(),
            }),
        }
    }
}
