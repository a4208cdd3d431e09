use veblen_validation::{evaluate, CRITERIA};

fn main() {
    let mut failed = 0;
    for (k, c) in CRITERIA.iter().enumerate() {
        let out = evaluate(c);
        failed += usize::from(!out.pass);
        println!("{} criterion {:>2} ({}): {}", if out.pass { "PASS" } else { "FAIL" }, k + 1, c.name, out.detail);
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
