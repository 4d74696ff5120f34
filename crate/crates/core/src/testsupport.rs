//! Shared fixtures for the crate's test suites: a deterministic generator,
//! a small reference model and randomized stores, queries and workloads.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::cube::{self, DocumentInput};
use crate::mcm::Mcm;
use crate::query::{AggFunc, AggSpec, AnalyticalQuery, AttrRef, Cmp, Predicate};
use crate::store::{import_cube, XCubeStore};
use crate::xml;

/// Tiny deterministic xorshift generator so fixtures need no external
/// randomness.
pub struct XorShift(pub u64);

impl XorShift {
    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

pub fn sales_mcm() -> Mcm {
    Mcm::from_xml(
        &xml::parse(
            r#"<mcm fact="Sales">
                 <measure name="amount" type="decimal"/>
                 <measure name="qty" type="integer" mandatory="false"/>
                 <dimension name="Time">
                   <attribute name="year" type="integer"/>
                   <attribute name="season" mandatory="false"/>
                 </dimension>
                 <dimension name="Product" mandatory="false">
                   <attribute name="sku" mandatory="false"/>
                 </dimension>
               </mcm>"#,
        )
        .unwrap(),
    )
    .unwrap()
}

/// Store over the reference model from literal fact rows.
pub fn sales_store(
    rows: &[(&str, u32, Option<&str>, Option<&str>, Option<i64>)],
) -> XCubeStore {
    let docs: Vec<DocumentInput> = rows
        .iter()
        .enumerate()
        .map(|(i, (amount, year, season, sku, qty))| {
            let mut time = format!(r#"<Time year="{year}""#);
            if let Some(s) = season {
                time.push_str(&format!(r#" season="{s}""#));
            }
            time.push_str("/>");
            let product = sku.map_or(String::new(), |s| format!(r#"<Product sku="{s}"/>"#));
            let qty = qty.map_or(String::new(), |q| format!(r#" qty="{q}""#));
            (
                format!("d{i}"),
                Ok(xml::parse(&format!(
                    r#"<Sales amount="{amount}"{qty}>{time}{product}</Sales>"#
                ))
                .unwrap()),
            )
        })
        .collect();
    let built = cube::build_cube(&sales_mcm(), docs).unwrap();
    assert!(built.rejected.is_empty() && built.malformed.is_empty());
    import_cube(&built).unwrap()
}

/// Randomized store over the reference model: optional season, product and
/// quantity exercise the absent-value paths.
pub fn random_store(rng: &mut XorShift, cells: usize) -> XCubeStore {
    let rows: Vec<(String, u32, Option<String>, Option<String>, Option<i64>)> = (0..cells)
        .map(|_| {
            let amount = format!("{}.{:02}", rng.below(50), rng.below(100));
            let year = 1995 + rng.below(6) as u32;
            let season = (rng.below(4) != 0)
                .then(|| ["dry", "wet", "mild"][rng.below(3) as usize].to_string());
            let sku = (rng.below(5) != 0).then(|| format!("p{}", rng.below(7)));
            let qty = (rng.below(3) != 0).then(|| rng.below(40) as i64 - 10);
            (amount, year, season, sku, qty)
        })
        .collect();
    let borrowed: Vec<(&str, u32, Option<&str>, Option<&str>, Option<i64>)> = rows
        .iter()
        .map(|(a, y, s, p, q)| (a.as_str(), *y, s.as_deref(), p.as_deref(), *q))
        .collect();
    sales_store(&borrowed)
}

/// Random query against the reference model's catalog.
pub fn random_query(rng: &mut XorShift) -> AnalyticalQuery {
    let attrs = ["Time.year", "Time.season", "Product.sku"];
    let measures = ["amount", "qty"];
    let mut q = AnalyticalQuery {
        selections: Vec::new(),
        group_by: Vec::new(),
        aggregates: Vec::new(),
    };
    for _ in 0..rng.below(3) {
        let attr = attrs[rng.below(3) as usize];
        let (cmp, literal) = if attr == "Time.year" {
            let cmp = [Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge][rng.below(6) as usize];
            (cmp, format!("{}", 1995 + rng.below(7)))
        } else {
            let cmp = [Cmp::Eq, Cmp::Ne][rng.below(2) as usize];
            let literal = if attr == "Time.season" {
                ["dry", "wet", "mild"][rng.below(3) as usize].to_string()
            } else {
                format!("p{}", rng.below(8))
            };
            (cmp, literal)
        };
        q.selections.push(Predicate {
            attr: AttrRef::parse(attr).unwrap(),
            cmp,
            literal,
        });
    }
    for _ in 0..rng.below(3) {
        let attr = AttrRef::parse(attrs[rng.below(3) as usize]).unwrap();
        if !q.group_by.contains(&attr) {
            q.group_by.push(attr);
        }
    }
    for _ in 0..=rng.below(3) {
        let func = [AggFunc::Sum, AggFunc::Avg, AggFunc::Count, AggFunc::Min, AggFunc::Max]
            [rng.below(5) as usize];
        let measure = if func == AggFunc::Count && rng.below(2) == 0 {
            "*".to_string()
        } else {
            measures[rng.below(2) as usize].to_string()
        };
        q.aggregates.push(AggSpec { func, measure });
    }
    q
}

/// Store with a Day/Month/Year hierarchy and consistent level coordinates.
pub fn hierarchy_store(seed: u64, cells: usize) -> XCubeStore {
    let m = Mcm::from_xml(
        &xml::parse(
            r#"<mcm fact="Sales">
                 <measure name="amount" type="integer"/>
                 <hierarchy>
                   <level name="Day"><attribute name="date"/></level>
                   <level name="Month"><attribute name="month"/></level>
                   <level name="Year"><attribute name="year"/></level>
                 </hierarchy>
               </mcm>"#,
        )
        .unwrap(),
    )
    .unwrap();
    let mut rng = XorShift(seed);
    let mut docs = Vec::new();
    for i in 0..cells {
        let year = 2000 + rng.below(2);
        let month = 1 + rng.below(3);
        let day = 1 + rng.below(5);
        docs.push((
            format!("d{i}"),
            Ok(xml::parse(&format!(
                r#"<Sales amount="{}">
                     <Day date="{year}-{month:02}-{day:02}">
                       <Month month="{year}-{month:02}"><Year year="{year}"/></Month>
                     </Day>
                   </Sales>"#,
                rng.below(100)
            ))
            .unwrap()),
        ));
    }
    import_cube(&cube::build_cube(&m, docs).unwrap()).unwrap()
}
