//! Seeded synthetic data: warehouses, query workloads and document corpora.
//!
//! Everything here is driven by a ChaCha stream cipher RNG seeded from a
//! `u64`, so a given seed reproduces the same bytes on every platform. The
//! generators exist because no public corpus ships with the repo; they feed
//! the demo pipeline, the benchmarks and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xmlcube_core::mcm::{AttrType, Mcm, MeasureType};
use xmlcube_core::query::{AggFunc, AggSpec, AnalyticalQuery, AttrRef, Cmp, Predicate};
use xmlcube_core::store::{
    DimensionDef, DimensionMember, FactCell, HierarchyDef, MeasureDef, MeasureValue, MemberId,
    XCubeStore,
};
use xmlcube_core::xml::Element;
use xmlcube_core::{hash, Decimal};

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Shape of a generated warehouse.
#[derive(Clone, Debug)]
pub struct WarehouseSpec {
    pub dimensions: usize,
    pub attributes_per_dimension: usize,
    pub members_per_dimension: usize,
    pub cells: usize,
    /// Adds Day/Month/Year level dimensions with consistent coordinates.
    pub with_time_hierarchy: bool,
    pub seed: u64,
}

impl Default for WarehouseSpec {
    fn default() -> Self {
        WarehouseSpec {
            dimensions: 3,
            attributes_per_dimension: 4,
            members_per_dimension: 30,
            cells: 1000,
            with_time_hierarchy: false,
            seed: 42,
        }
    }
}

fn member_id(dimension: &str, attributes: &[(String, String)]) -> MemberId {
    let mut fields = vec![dimension];
    for (n, v) in attributes {
        fields.push(n.as_str());
        fields.push(v.as_str());
    }
    MemberId(hash::hex16(hash::fnv1a_64_fields(fields)))
}

/// Generates a populated store.
///
/// Dimensions are `d1..dN` with one integer attribute `a1` and string
/// attributes `a2..aM`; string attributes are occasionally absent so the
/// optional-value paths get exercised. Measures are a mandatory integer
/// `qty` and a mostly present decimal `amount`. Cells always reference `d1`
/// and reference the other dimensions with probability 0.9.
pub fn warehouse(spec: &WarehouseSpec) -> XCubeStore {
    let mut rng = rng_for(spec.seed);
    let mut store = XCubeStore {
        measures: vec![
            MeasureDef {
                name: "qty".to_string(),
                ty: MeasureType::Integer,
            },
            MeasureDef {
                name: "amount".to_string(),
                ty: MeasureType::Decimal,
            },
        ],
        ..XCubeStore::default()
    };

    for d in 1..=spec.dimensions {
        let name = format!("d{d}");
        let attributes = (1..=spec.attributes_per_dimension)
            .map(|a| {
                let ty = if a == 1 { AttrType::Integer } else { AttrType::String };
                (format!("a{a}"), ty)
            })
            .collect();
        store.dimensions.push(DimensionDef { name, attributes });
    }
    if spec.with_time_hierarchy {
        for (name, attr) in [("Day", "date"), ("Month", "month"), ("Year", "year")] {
            store.dimensions.push(DimensionDef {
                name: name.to_string(),
                attributes: vec![(attr.to_string(), AttrType::String)],
            });
        }
        store.hierarchies.push(HierarchyDef {
            levels: vec!["Day".to_string(), "Month".to_string(), "Year".to_string()],
        });
    }

    // Members per plain dimension.
    let mut members: Vec<Vec<DimensionMember>> = Vec::new();
    for d in 0..spec.dimensions {
        let def = &store.dimensions[d];
        let mut dim_members = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut attempts = 0usize;
        while dim_members.len() < spec.members_per_dimension && attempts < spec.members_per_dimension * 50
        {
            attempts += 1;
            let mut attributes = Vec::new();
            for (a, (attr, ty)) in def.attributes.iter().enumerate() {
                // The first attribute is always present; later ones drop out
                // now and then.
                if a > 0 && rng.random_range(0..10) == 0 {
                    continue;
                }
                let value = match ty {
                    AttrType::Integer => rng.random_range(0..500).to_string(),
                    _ => format!("v{}", rng.random_range(0..9)),
                };
                attributes.push((attr.clone(), value));
            }
            let node = member_id(&def.name, &attributes);
            if seen.insert(node.clone()) {
                dim_members.push(DimensionMember {
                    dimension: def.name.clone(),
                    node,
                    attributes,
                });
            }
        }
        members.push(dim_members);
    }

    // Day/Month/Year members appear on demand with consistent chains.
    let mut time_members: std::collections::BTreeMap<(usize, String), MemberId> =
        std::collections::BTreeMap::new();

    for _ in 0..spec.cells {
        let mut cell = FactCell {
            coordinates: Vec::new(),
            measures: Vec::new(),
        };
        cell.measures
            .push(("qty".to_string(), MeasureValue::Int(rng.random_range(0..1000))));
        if rng.random_range(0..100) < 85 {
            let euros: i64 = rng.random_range(0..5000);
            let cents: i64 = rng.random_range(0..100);
            let amount = Decimal::parse(&format!("{euros}.{cents:02}")).expect("two decimals");
            cell.measures.push(("amount".to_string(), MeasureValue::Dec(amount)));
        }
        for (d, dim_members) in members.iter().enumerate() {
            if d > 0 && rng.random_range(0..10) == 0 {
                continue;
            }
            let member = &dim_members[rng.random_range(0..dim_members.len())];
            cell.coordinates.push((member.dimension.clone(), member.node.clone()));
        }
        if spec.with_time_hierarchy {
            let year = 2000 + rng.random_range(0..3i32);
            let month = 1 + rng.random_range(0..12i32);
            let day = 1 + rng.random_range(0..28i32);
            let chain = [
                (spec.dimensions, "Day", "date", format!("{year}-{month:02}-{day:02}")),
                (spec.dimensions + 1, "Month", "month", format!("{year}-{month:02}")),
                (spec.dimensions + 2, "Year", "year", format!("{year}")),
            ];
            for (slot, dim, attr, value) in chain {
                let node = time_members
                    .entry((slot, value.clone()))
                    .or_insert_with(|| member_id(dim, &[(attr.to_string(), value.clone())]))
                    .clone();
                cell.coordinates.push((dim.to_string(), node));
            }
        }
        store.cells.push(cell);
    }

    // Flatten members grouped by dimension, catalog order.
    for dim_members in members {
        store.members.extend(dim_members);
    }
    if spec.with_time_hierarchy {
        for (slot, dim, attr) in [
            (spec.dimensions, "Day", "date"),
            (spec.dimensions + 1, "Month", "month"),
            (spec.dimensions + 2, "Year", "year"),
        ] {
            for ((_, value), node) in time_members.range((slot, String::new())..(slot + 1, String::new())) {
                store.members.push(DimensionMember {
                    dimension: dim.to_string(),
                    node: node.clone(),
                    attributes: vec![(attr.to_string(), value.clone())],
                });
            }
        }
    }
    store
}

/// Generates `n` random analytical queries against the store's catalog.
///
/// Selections draw their literals from values that actually occur, so the
/// workload is not trivially empty; comparators respect attribute types.
pub fn workload(store: &XCubeStore, n: usize, seed: u64) -> Vec<(String, AnalyticalQuery)> {
    let mut rng = rng_for(seed ^ 0x77_6f_72_6b);
    let attrs: Vec<(AttrRef, AttrType)> = store
        .dimensions
        .iter()
        .flat_map(|d| {
            d.attributes
                .iter()
                .map(|(a, ty)| (AttrRef::new(d.name.clone(), a.clone()), *ty))
        })
        .collect();
    let measures: Vec<&MeasureDef> = store.measures.iter().collect();
    assert!(!attrs.is_empty() && !measures.is_empty(), "catalog too small");

    let sample_value = |rng: &mut ChaCha8Rng, attr: &AttrRef| -> String {
        let members: Vec<&DimensionMember> = store.members_of(&attr.dimension).collect();
        for _ in 0..8 {
            if members.is_empty() {
                break;
            }
            let m = members[rng.random_range(0..members.len())];
            if let Some(v) = m.attribute(&attr.attribute) {
                return v.to_string();
            }
        }
        "0".to_string()
    };

    (0..n)
        .map(|i| {
            let mut q = AnalyticalQuery {
                selections: Vec::new(),
                group_by: Vec::new(),
                aggregates: Vec::new(),
            };
            // Analytical queries are dimensional: at least one selection.
            for _ in 0..rng.random_range(1..=3) {
                let (attr, ty) = attrs[rng.random_range(0..attrs.len())].clone();
                let cmp = match ty {
                    AttrType::String => [Cmp::Eq, Cmp::Ne][rng.random_range(0..2)],
                    _ => [Cmp::Eq, Cmp::Ne, Cmp::Lt, Cmp::Le, Cmp::Gt, Cmp::Ge]
                        [rng.random_range(0..6)],
                };
                let literal = sample_value(&mut rng, &attr);
                q.selections.push(Predicate { attr, cmp, literal });
            }
            for _ in 0..rng.random_range(0..=2) {
                let (attr, _) = attrs[rng.random_range(0..attrs.len())].clone();
                if !q.group_by.contains(&attr) {
                    q.group_by.push(attr);
                }
            }
            for _ in 0..rng.random_range(1..=3) {
                let func = [AggFunc::Sum, AggFunc::Avg, AggFunc::Count, AggFunc::Min, AggFunc::Max]
                    [rng.random_range(0..5)];
                let measure = if func == AggFunc::Count && rng.random_range(0..2) == 0 {
                    "*".to_string()
                } else {
                    measures[rng.random_range(0..measures.len())].name.clone()
                };
                q.aggregates.push(AggSpec { func, measure });
            }
            (format!("q{:03}", i + 1), q)
        })
        .collect()
}

/// Generates documents against a model with controlled mandatory coverage.
///
/// Each mandatory leaf value is present with probability
/// `mandatory_presence`, each optional leaf with probability 0.5, so a batch
/// contains both admissible documents and documents the gate must reject.
pub fn mcm_corpus(
    mcm: &Mcm,
    n: usize,
    mandatory_presence: f64,
    seed: u64,
) -> Vec<(String, Element)> {
    let mut rng = rng_for(seed ^ 0x63_6f_72_70);
    (0..n)
        .map(|i| {
            let mut root = Element::new(mcm.fact_name.clone());
            for measure in &mcm.measures {
                let p = if measure.mandatory { mandatory_presence } else { 0.5 };
                if rng.random_bool(p) {
                    let value = match measure.ty {
                        MeasureType::Integer => rng.random_range(0..1000i64).to_string(),
                        MeasureType::Decimal => {
                            format!("{}.{:02}", rng.random_range(0..100), rng.random_range(0..100i32))
                        }
                    };
                    root.attrs.push((measure.name.clone(), value));
                }
            }
            for dim in &mcm.dimensions {
                if let Some(element) = gen_dimension_element(
                    &mut rng,
                    &dim.name,
                    &dim.attributes,
                    None,
                    mandatory_presence,
                ) {
                    root.children.push(element);
                }
            }
            for h in &mcm.hierarchies {
                if let Some(element) = gen_chain_element(&mut rng, &h.levels, 0, mandatory_presence)
                {
                    root.children.push(element);
                }
            }
            (format!("doc{:04}.xml", i + 1), root)
        })
        .collect()
}

fn gen_attr_value(rng: &mut ChaCha8Rng, ty: AttrType) -> String {
    match ty {
        AttrType::Integer => rng.random_range(0..200).to_string(),
        AttrType::Decimal => format!("{}.{}", rng.random_range(0..50), rng.random_range(0..10)),
        AttrType::String => format!("t{}", rng.random_range(0..12)),
    }
}

fn gen_dimension_element(
    rng: &mut ChaCha8Rng,
    name: &str,
    attributes: &[xmlcube_core::mcm::DimAttribute],
    nested: Option<Element>,
    mandatory_presence: f64,
) -> Option<Element> {
    let mut element = Element::new(name);
    for attr in attributes {
        let p = if attr.mandatory { mandatory_presence } else { 0.5 };
        if rng.random_bool(p) {
            element.attrs.push((attr.name.clone(), gen_attr_value(rng, attr.ty)));
        }
    }
    if let Some(nested) = nested {
        element.children.push(nested);
    }
    // An empty element only appears when something below forced it.
    if element.attrs.is_empty() && element.children.is_empty() {
        None
    } else {
        Some(element)
    }
}

fn gen_chain_element(
    rng: &mut ChaCha8Rng,
    levels: &[xmlcube_core::mcm::Dimension],
    index: usize,
    mandatory_presence: f64,
) -> Option<Element> {
    let nested = levels
        .get(index + 1)
        .and_then(|_| gen_chain_element(rng, levels, index + 1, mandatory_presence));
    let level = &levels[index];
    gen_dimension_element(rng, &level.name, &level.attributes, nested, mandatory_presence)
}

/// Generates a small-corpus of documents over a fixed seven-path tag
/// hierarchy, for structure mining.
pub fn tag_corpus(n: usize, seed: u64) -> Vec<(String, Element)> {
    let mut rng = rng_for(seed ^ 0x74_61_67_73);
    (0..n)
        .map(|i| {
            let mut root = Element::new("r");
            if rng.random_range(0..3) != 0 {
                let mut a = Element::new("a");
                if rng.random_range(0..3) != 0 {
                    a.children.push(Element::new("d"));
                }
                if rng.random_range(0..2) == 0 {
                    a.children.push(Element::new("e"));
                }
                root.children.push(a);
            }
            if rng.random_range(0..2) == 0 {
                let mut b = Element::new("b");
                if rng.random_range(0..2) == 0 {
                    b.children.push(Element::new("f"));
                }
                root.children.push(b);
            }
            if rng.random_range(0..4) == 0 {
                root.children.push(Element::new("c"));
            }
            (format!("doc{:04}.xml", i + 1), root)
        })
        .collect()
}
