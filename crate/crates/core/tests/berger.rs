use specflow::models::{build_berger_family, su2_character, BergerModel};

fn top(n: f64, l: f64) -> f64 {
    l / 2.0 + n / l
}

fn branch(n: f64, p: f64, sign: f64, l: f64) -> f64 {
    l / 2.0 + sign * (4.0 * p * (n - p) + ((2.0 * p - n) / l).powi(2)).sqrt()
}

#[test]
fn curve_table_matches_eigenvalue_formulas_at_both_ends() {
    let model = BergerModel::new(12);
    let fam = build_berger_family(&model, 0.7).unwrap();
    let mut seen = 0;
    for c in fam.curves() {
        let parts: Vec<&str> = c.label.split('/').collect();
        let n: f64 = parts[0].trim_start_matches("n=").parse().unwrap();
        for (t, l) in [(0.0, 1.0), (1.0, 5.0)] {
            let expected = match parts.as_slice() {
                [_, "top"] => top(n, l),
                [_, p, s] => {
                    let p: f64 = p.trim_start_matches("p=").parse().unwrap();
                    branch(n, p, if *s == "+" { 1.0 } else { -1.0 }, l)
                }
                _ => panic!("unexpected label {}", c.label),
            };
            assert!(
                (c.eval(t) - expected).abs() < 1e-12,
                "{} at λ = {l}",
                c.label
            );
        }
        seen += 1;
    }
    // one top curve per n, two branches per 0 < p < n
    assert_eq!(seen, (1..=12).map(|n| 1 + 2 * (n - 1)).sum::<usize>());
}

#[test]
fn multiplicities_and_characters_follow_peter_weyl() {
    let theta = 1.1;
    let fam = build_berger_family(&BergerModel::new(6), theta).unwrap();
    for c in fam.curves() {
        let n: u32 = c
            .label
            .split('/')
            .next()
            .unwrap()
            .trim_start_matches("n=")
            .parse()
            .unwrap();
        let factor = if c.label.ends_with("top") { 2 } else { 1 };
        assert_eq!(c.multiplicity(), factor * n as usize, "{}", c.label);
        let chi = (n as f64 * theta).sin() / theta.sin();
        assert!(
            (c.character_sum().re - factor as f64 * chi).abs() < 1e-12,
            "{}",
            c.label
        );
        assert!(c.character_sum().im.abs() < 1e-12);
        assert!((su2_character(n, theta) - chi).abs() < 1e-12);
    }
}

#[test]
fn squashing_range_must_stay_below_the_positivity_bound() {
    let mut m = BergerModel::new(4);
    m.lambda_hi = 6.0;
    assert!(build_berger_family(&m, 0.0).is_err());
}
