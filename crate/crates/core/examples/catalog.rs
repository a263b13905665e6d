//! Every catalog operator with its expected criterion behaviour.

use lienuc::catalog::{catalog_listing, instantiate, OperatorParams};
use lienuc::group::GroupId;

fn main() -> lienuc::Result<()> {
    for entry in catalog_listing() {
        println!("{:<18} on {:<14} params {:?}: {}", entry.name, entry.groups.join("/"), entry.parameters, entry.summary);
    }
    let params = OperatorParams { alpha: Some(5.0), ..Default::default() };
    let bessel = instantiate("bessel", GroupId::SO3, &params, 10.0)?;
    for e in &bessel.expected {
        println!("bessel on SO3, α = 5, r = 1: {} ({:?}) expects {:?}", e.criterion, e.logic, e.expected(5.0, 1.0));
    }
    Ok(())
}
