//! Arena-backed treap with subtree sizes.
//!
//! Used for every ordered list in the engine: per-vertex neighbor lists
//! ordered by similarity, and the Δ-Table / μ-Table vertex lists. Besides
//! ordered insertion and removal it answers "k-th smallest key" in
//! expected `O(log n)` time.

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node<K> {
    key: K,
    priority: u64,
    left: u32,
    right: u32,
    size: u32,
}

/// Ordered set of unique keys supporting rank access.
#[derive(Clone, Debug)]
pub struct OrderedSet<K> {
    nodes: Vec<Node<K>>,
    free: Vec<u32>,
    root: u32,
    seed: u64,
}

impl<K: Ord + Copy> Default for OrderedSet<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Copy> OrderedSet<K> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            seed: 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.root == NIL
    }

    pub fn clear(&mut self) {
        self.nodes.clear();
        self.free.clear();
        self.root = NIL;
    }

    pub fn contains(&self, key: &K) -> bool {
        let mut t = self.root;
        while t != NIL {
            let node = &self.nodes[t as usize];
            match key.cmp(&node.key) {
                std::cmp::Ordering::Less => t = node.left,
                std::cmp::Ordering::Greater => t = node.right,
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }

    /// Inserts `key`; returns false if it was already present.
    pub fn insert(&mut self, key: K) -> bool {
        if self.contains(&key) {
            return false;
        }
        let priority = self.next_priority();
        let id = self.alloc(key, priority);
        let (l, r) = self.split(self.root, &key);
        let lm = self.merge(l, id);
        self.root = self.merge(lm, r);
        true
    }

    /// Removes `key`; returns false if it was absent.
    pub fn remove(&mut self, key: &K) -> bool {
        let (root, removed) = self.remove_rec(self.root, key);
        self.root = root;
        removed
    }

    /// The `k`-th smallest key, 0-based.
    pub fn kth(&self, mut k: usize) -> Option<K> {
        if k >= self.len() {
            return None;
        }
        let mut t = self.root;
        loop {
            let node = &self.nodes[t as usize];
            let left = self.size(node.left) as usize;
            if k < left {
                t = node.left;
            } else if k == left {
                return Some(node.key);
            } else {
                k -= left + 1;
                t = node.right;
            }
        }
    }

    /// Number of keys strictly smaller than `key`.
    pub fn rank(&self, key: &K) -> usize {
        let mut t = self.root;
        let mut acc = 0usize;
        while t != NIL {
            let node = &self.nodes[t as usize];
            if *key <= node.key {
                t = node.left;
            } else {
                acc += self.size(node.left) as usize + 1;
                t = node.right;
            }
        }
        acc
    }

    pub fn first(&self) -> Option<K> {
        self.kth(0)
    }

    /// In-order iterator from the smallest key.
    pub fn iter(&self) -> Iter<'_, K> {
        let mut iter = Iter {
            set: self,
            stack: Vec::new(),
        };
        iter.push_left(self.root);
        iter
    }

    /// Approximate heap footprint in bytes.
    pub fn heap_bytes(&self) -> usize {
        self.nodes.capacity() * std::mem::size_of::<Node<K>>()
            + self.free.capacity() * std::mem::size_of::<u32>()
    }

    fn size(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].size
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = {
            let node = &self.nodes[t as usize];
            (node.left, node.right)
        };
        self.nodes[t as usize].size = 1 + self.size(l) + self.size(r);
    }

    fn next_priority(&mut self) -> u64 {
        // splitmix64
        self.seed = self.seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.seed;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn alloc(&mut self, key: K, priority: u64) -> u32 {
        let node = Node {
            key,
            priority,
            left: NIL,
            right: NIL,
            size: 1,
        };
        if let Some(id) = self.free.pop() {
            self.nodes[id as usize] = node;
            id
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    /// Splits into (keys < key, keys >= key).
    fn split(&mut self, t: u32, key: &K) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.nodes[t as usize].key < *key {
            let right = self.nodes[t as usize].right;
            let (l, r) = self.split(right, key);
            self.nodes[t as usize].right = l;
            self.pull(t);
            (t, r)
        } else {
            let left = self.nodes[t as usize].left;
            let (l, r) = self.split(left, key);
            self.nodes[t as usize].left = r;
            self.pull(t);
            (l, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].priority > self.nodes[b as usize].priority {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    fn remove_rec(&mut self, t: u32, key: &K) -> (u32, bool) {
        if t == NIL {
            return (NIL, false);
        }
        let (left, right) = {
            let node = &self.nodes[t as usize];
            (node.left, node.right)
        };
        match key.cmp(&self.nodes[t as usize].key) {
            std::cmp::Ordering::Equal => {
                self.free.push(t);
                (self.merge(left, right), true)
            }
            std::cmp::Ordering::Less => {
                let (l, removed) = self.remove_rec(left, key);
                self.nodes[t as usize].left = l;
                if removed {
                    self.pull(t);
                }
                (t, removed)
            }
            std::cmp::Ordering::Greater => {
                let (r, removed) = self.remove_rec(right, key);
                self.nodes[t as usize].right = r;
                if removed {
                    self.pull(t);
                }
                (t, removed)
            }
        }
    }
}

pub struct Iter<'a, K> {
    set: &'a OrderedSet<K>,
    stack: Vec<u32>,
}

impl<K: Ord + Copy> Iter<'_, K> {
    fn push_left(&mut self, mut t: u32) {
        while t != NIL {
            self.stack.push(t);
            t = self.set.nodes[t as usize].left;
        }
    }
}

impl<K: Ord + Copy> Iterator for Iter<'_, K> {
    type Item = K;

    fn next(&mut self) -> Option<K> {
        let t = self.stack.pop()?;
        let node = &self.set.nodes[t as usize];
        let key = node.key;
        let right = node.right;
        self.push_left(right);
        Some(key)
    }
}
