//! Bessel K and Matérn kernel values against a 50-digit mpmath table
//! (`data/bessel_k_reference.csv`, regenerated by `data/gen_bessel_reference.py`).

use gpucb::kernels::bessel::bessel_k;
use gpucb::KernelSpec;

fn reference() -> Vec<(f64, f64, f64)> {
    let text = include_str!("data/bessel_k_reference.csv");
    text.lines()
        .skip(1)
        .map(|l| {
            let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap(), it.next().unwrap())
        })
        .collect()
}

#[test]
fn bessel_k_relative_error_below_1e10() {
    let table = reference();
    assert_eq!(table.len(), 500);
    let mut worst = (0.0, 0.0, 0.0);
    for &(nu, z, k) in &table {
        let got = bessel_k(nu, z).unwrap();
        let rel = ((got - k) / k).abs();
        if rel > worst.0 {
            worst = (rel, nu, z);
        }
    }
    println!("worst relative error {:e} at nu={} z={}", worst.0, worst.1, worst.2);
    assert!(worst.0 <= 1e-10);
}

#[test]
fn nu_03_z_07() {
    let k = bessel_k(0.3, 0.7).unwrap();
    assert!(((k - 0.689_562_489_756_975_1) / k).abs() < 1e-13);
}

#[test]
fn matern_kernel_matches_reference() {
    // Psi(r) = z^nu K_nu(z) / (Gamma(nu) 2^(nu-1)) evaluated in 50-digit arithmetic.
    let cases = [
        (0.3, 0.7, 1.0, 0.310_542_786_269_838_43),
        (1.5, 0.5, 1.0, 0.653_702_694_212_112_4),
        (2.2, 0.25, 0.8, 0.853_400_962_544_752_6),
        (4.7, 1.3, 2.0, 0.608_785_310_128_155_3),
    ];
    for &(nu, r, l, expect) in &cases {
        let spec = KernelSpec::matern(nu, l).unwrap();
        let got = spec.psi(r);
        assert!(((got - expect) / expect).abs() < 1e-10, "nu={nu} r={r}: {got} vs {expect}");
    }
}
