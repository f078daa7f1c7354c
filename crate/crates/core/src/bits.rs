//! Small helpers for point sets packed into `u64` masks.

/// Iterates the indices of the set bits of `mask`, lowest first.
pub fn ones(mask: u64) -> impl Iterator<Item = usize> {
    let mut rest = mask;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

/// Iterates every submask of `mask`, starting with the empty set and ending
/// with `mask` itself. Order is increasing as integers.
pub fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask {
            None
        } else {
            Some(((cur | !mask).wrapping_add(1)) & mask)
        };
        Some(cur)
    })
}

/// Non-empty submasks of `mask`, in increasing order.
pub fn nonempty_submasks(mask: u64) -> impl Iterator<Item = u64> {
    submasks(mask).skip(1)
}

/// Mask with the lowest `n` bits set. `n` may be 64.
pub fn full(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

#[inline]
pub fn contains(mask: u64, i: usize) -> bool {
    mask >> i & 1 == 1
}

#[inline]
pub fn is_subset(a: u64, b: u64) -> bool {
    a & !b == 0
}

/// Renders a mask as `{a,b,...}` using the supplied point labels.
pub fn render(mask: u64, labels: &[String]) -> String {
    let inner: Vec<String> = ones(mask)
        .map(|i| labels.get(i).cloned().unwrap_or_else(|| format!("#{i}")))
        .collect();
    format!("{{{}}}", inner.join(","))
}
