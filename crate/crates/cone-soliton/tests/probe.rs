use cone_soliton::expand::{expand, residual_constraint, AssemblyFlavor, SolitonMode};
use cone_soliton::link::{build_grid, GridSpec};

fn solve_at(np: usize) -> cone_soliton::expand::ExpansionCoefficients {
    let spec = GridSpec {
        dim: 2,
        grid: vec![np, np],
        metric: vec![
            vec!["1 + 0.1*sin(x1 + x2)".to_string(), "0".to_string()],
            vec!["0".to_string(), "1".to_string()],
        ],
    };
    let link = build_grid(&spec).unwrap();
    expand(&link, 4, SolitonMode::Expander, None).unwrap()
}

#[test]
fn probe() {
    let cases: Vec<(&str, Vec<usize>, [[&str; 2]; 2])> = vec![
        ("diag 24^2", vec![24, 24], [["1 + 0.1*sin(x1 + x2)", "0"], ["0", "1"]]),
        ("1var 8x32", vec![8, 32], [["1 + 0.1*sin(x2)", "0"], ["0", "1"]]),
        ("1var 16x32", vec![16, 32], [["1 + 0.1*sin(x2)", "0"], ["0", "1"]]),
        ("1var 16x24", vec![16, 24], [["1 + 0.1*sin(x2)", "0"], ["0", "1"]]),
        ("1var 32x32", vec![32, 32], [["1 + 0.1*sin(x2)", "0"], ["0", "1"]]),
    ];
    for (name, shape, m) in cases {
        let spec = GridSpec {
            dim: 2,
            grid: shape,
            metric: m
                .iter()
                .map(|row| row.iter().map(|s| s.to_string()).collect())
                .collect(),
        };
        let link = build_grid(&spec).unwrap();
        let coeffs = expand(&link, 4, SolitonMode::Expander, None).unwrap();
        let a = residual_constraint(&coeffs, AssemblyFlavor::Tracked).unwrap();
        println!("{name}: scale {:.3e} floor {:?}", a.scale, a.series.floor());
        for (e, c) in a.series.iter() {
            println!(
                "  exp {e:>4}: sup {:.3e} rel {:.3e}",
                c.sup_norm(),
                c.sup_norm() / a.scale
            );
        }
    }
}
