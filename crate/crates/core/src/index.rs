//! Mixed-radix indexing, most significant digit first.

pub fn size(radices: &[usize]) -> usize {
    radices.iter().product()
}

pub fn encode(digits: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), radices.len());
    digits
        .iter()
        .zip(radices)
        .fold(0, |acc, (&d, &r)| acc * r + d)
}

pub fn decode(mut index: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, &r) in digits.iter_mut().zip(radices).rev() {
        *d = index % r;
        index /= r;
    }
    digits
}

/// All digit tuples in increasing encoded order. Zero radices yield one
/// empty tuple.
pub fn tuples(radices: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    (0..size(radices)).map(move |i| decode(i, radices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let r = [2, 3, 2];
        for (i, t) in tuples(&r).enumerate() {
            assert_eq!(encode(&t, &r), i);
        }
        assert_eq!(tuples(&r).count(), 12);
        assert_eq!(decode(5, &r), vec![0, 2, 1]);
        assert_eq!(tuples(&[]).collect::<Vec<_>>(), vec![Vec::<usize>::new()]);
    }
}
