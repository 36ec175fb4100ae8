use nilspec_core::catalog::{self, ExampleName};
use nilspec_core::spectra::{multiplicity_at, Length, MultiplicityOptions, SpectralContext, SpectrumEntry};

fn entries(name: ExampleName, lambda: &str) -> [SpectrumEntry; 2] {
    let ex = catalog::example(name);
    let ctx = SpectralContext::new(ex.algebra.clone(), ex.metric.clone()).unwrap();
    let opts = MultiplicityOptions { deep_radius: ex.deep_radius };
    let l = Length::parse(lambda).unwrap();
    [0, 1].map(|i| multiplicity_at(&ctx, &ex.lattices[i], &l, &opts).unwrap())
}

/// Partition by first-layer exponents `(n1, n2, m1, m2)`.
fn case_of(rep: &[i64]) -> usize {
    let (n1, n2, m1, m2) = (rep[0], rep[1], rep[2], rep[3]);
    if n1 != 0 || m2 != 0 {
        1
    } else if n2 != 0 || m1 != 0 {
        2
    } else {
        3
    }
}

#[test]
fn seven_z_length_has_multiplicities_28_and_14() {
    let [a, b] = entries(ExampleName::IV, "sqrt(4*pi*(7-pi))");
    assert!(a.is_complete() && b.is_complete());
    assert_eq!((a.m_prime, a.m_dprime), (28, 0));
    assert_eq!((b.m_prime, b.m_dprime), (14, 0));
    for w in a.noncentral.iter().chain(&b.noncentral) {
        assert_eq!(&w.representative[..3], &[0, 0, 0]);
        assert_eq!(w.representative[3].abs(), 7);
    }
}

#[test]
fn length_one_in_example_iii() {
    let [a, b] = entries(ExampleName::III, "1");
    assert!(a.is_complete() && b.is_complete());
    let split = |e: &SpectrumEntry| {
        let mut c = [0usize; 3];
        for w in &e.noncentral {
            c[case_of(&w.representative) - 1] += 1;
        }
        c
    };
    assert_eq!(split(&a), [8, 4, 8]);
    assert_eq!(split(&b), [8, 4, 4]);
    assert_eq!((a.m_prime, b.m_prime), (20, 16));
    assert_eq!((a.m_dprime, b.m_dprime), (2, 2));
}
