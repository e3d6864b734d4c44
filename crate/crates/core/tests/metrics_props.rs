use ecs_eval::metrics::{lcs_len, rouge_l, rouge_n, ScoreTriple};
use proptest::prelude::*;

const ALPHABET: [char; 4] = ['甲', '乙', '丙', '丁'];

fn text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(0..ALPHABET.len(), 0..=max).prop_map(|v| v.into_iter().map(|i| ALPHABET[i]).collect())
}

// Every subsequence of the shorter side, checked against the longer one.
fn brute_lcs(a: &[char], b: &[char]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let is_subseq = |sub: &[char]| {
        let mut it = long.iter();
        sub.iter().all(|c| it.any(|x| x == c))
    };
    let mut best = 0;
    for mask in 0u32..(1 << short.len()) {
        let sub: Vec<char> = (0..short.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| short[i])
            .collect();
        if sub.len() > best && is_subseq(&sub) {
            best = sub.len();
        }
    }
    best
}

fn brute_rouge_n(c: &[char], r: &[char], n: usize) -> (usize, usize, usize) {
    let grams = |s: &[char]| -> Vec<Vec<char>> {
        if s.len() < n {
            return Vec::new();
        }
        (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
    };
    let cg = grams(c);
    let mut rg = grams(r);
    let total_r = rg.len();
    let mut overlap = 0;
    for g in &cg {
        if let Some(pos) = rg.iter().position(|x| x == g) {
            rg.remove(pos);
            overlap += 1;
        }
    }
    (overlap, cg.len(), total_r)
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

fn in_unit(t: &ScoreTriple) -> bool {
    [t.precision, t.recall, t.f1].iter().all(|v| (0.0..=1.0).contains(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lcs_matches_exhaustive_search(a in text(8), b in text(8)) {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(lcs_len(&ac, &bc), brute_lcs(&ac, &bc));
    }

    #[test]
    fn rouge_n_matches_counting_oracle(a in text(8), b in text(8), n in 1usize..=3) {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let t = rouge_n(&a, &b, n).unwrap();
        let (o, tc, tr) = brute_rouge_n(&ac, &bc, n);
        let (p, r) = if tc == 0 || tr == 0 { (0.0, 0.0) } else { (o as f64 / tc as f64, o as f64 / tr as f64) };
        prop_assert!(close(t.precision, p) && close(t.recall, r) && close(t.f1, f1(p, r)), "{t:?} vs {p} {r}");
    }

    #[test]
    fn rouge_l_matches_lcs_oracle(a in text(8), b in text(8)) {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let t = rouge_l(&a, &b);
        let l = brute_lcs(&ac, &bc) as f64;
        let (p, r) = if ac.is_empty() || bc.is_empty() { (0.0, 0.0) } else { (l / ac.len() as f64, l / bc.len() as f64) };
        prop_assert!(close(t.precision, p) && close(t.recall, r) && close(t.f1, f1(p, r)));
    }

    #[test]
    fn triples_are_bounded_and_consistent(a in text(12), b in text(12), n in 1usize..=2) {
        for t in [rouge_n(&a, &b, n).unwrap(), rouge_l(&a, &b)] {
            prop_assert!(in_unit(&t));
            prop_assert!(close(t.f1, f1(t.precision, t.recall)));
        }
    }

    #[test]
    fn self_overlap_is_perfect(a in text(12), n in 1usize..=3) {
        prop_assume!(a.chars().count() >= n);
        let t = rouge_n(&a, &a, n).unwrap();
        prop_assert_eq!((t.precision, t.recall, t.f1), (1.0, 1.0, 1.0));
        prop_assert_eq!(rouge_l(&a, &a).f1, 1.0);
    }

    #[test]
    fn lcs_bounded_and_suffix_monotone(a in text(10), b in text(10), s in text(4)) {
        let (ac, bc): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let l = lcs_len(&ac, &bc);
        prop_assert!(l <= ac.len().min(bc.len()));
        prop_assert_eq!(l, lcs_len(&bc, &ac));
        let sc: Vec<char> = s.chars().collect();
        let (mut a2, mut b2) = (ac.clone(), bc.clone());
        a2.extend(&sc);
        b2.extend(&sc);
        prop_assert!(lcs_len(&a2, &b2) >= l + sc.len());
    }
}

#[test]
fn order_zero_is_rejected() {
    assert!(rouge_n("甲乙", "甲乙", 0).is_err());
}
