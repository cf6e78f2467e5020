//! Synthetic household knowledge graphs with triple-count distributions.
//!
//! The default spec describes 4 room types (30 environments each), 20
//! receptacles, 58 household objects in 10 semantic kinds, 7 materials and 17
//! affordances: 106 entities over `atLocation`, `madeOf` and `hasAffordance`.
//! Each environment samples which receptacles and objects are present and
//! emits one observation per placed object instance, so frequently co-located
//! pairs accumulate large counts.
//!
//! Word vectors for entity names are generated alongside: every name gets its
//! own unit vector built from its kind prototype plus noise. Vectors depend
//! only on the name, its group and the seed, so two specs that share names
//! produce identical vectors for them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::wordvec::WordVectorTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationNames {
    pub at_location: String,
    pub made_of: String,
    pub has_affordance: String,
}

impl Default for RelationNames {
    fn default() -> Self {
        RelationNames {
            at_location: "atLocation".into(),
            made_of: "madeOf".into(),
            has_affordance: "hasAffordance".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub name: String,
    pub environments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceptacleSpec {
    pub name: String,
    /// Room → probability the receptacle is present in an environment.
    pub rooms: Vec<(String, f64)>,
    pub materials: Vec<(String, f64)>,
    pub affordances: Vec<String>,
}

/// A semantic kind of object. Objects share the kind's locations, materials
/// and affordances, with per-object weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSpec {
    pub name: String,
    /// Room → probability scale for an object of this kind being present.
    pub rooms: Vec<(String, f64)>,
    /// Receptacle or room names with relative weights.
    pub locations: Vec<(String, f64)>,
    pub materials: Vec<(String, f64)>,
    pub affordances: Vec<String>,
    pub objects: Vec<String>,
}

/// Which relations objects emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectRelations {
    pub location: bool,
    pub material: bool,
    pub affordance: bool,
}

impl Default for ObjectRelations {
    fn default() -> Self {
        ObjectRelations {
            location: true,
            material: true,
            affordance: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WordVectorSpec {
    pub dim: usize,
    /// Weight of the shared category direction (object, receptacle, ...).
    pub category_weight: f64,
    /// Norm of the per-name noise relative to the kind prototype.
    pub noise: f64,
}

impl Default for WordVectorSpec {
    fn default() -> Self {
        WordVectorSpec {
            dim: 50,
            category_weight: 0.6,
            noise: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticKgSpec {
    pub relations: RelationNames,
    pub rooms: Vec<RoomSpec>,
    pub receptacles: Vec<ReceptacleSpec>,
    pub kinds: Vec<KindSpec>,
    pub object_relations: ObjectRelations,
    /// Range of per-object presence multipliers.
    pub popularity: (f64, f64),
    /// Range of instances per present object.
    pub instances: (usize, usize),
    /// Each object scales its kind's location and material weights by a
    /// factor drawn from `1 ± support_jitter`.
    pub support_jitter: f64,
    /// Probability that an object keeps each of its kind's affordances.
    pub affordance_keep: f64,
    /// Emit `(receptacle, atLocation, room)` and receptacle properties.
    pub receptacle_triples: bool,
    pub word_vectors: WordVectorSpec,
    /// Targets used by [`KgStats::within_tolerance`].
    pub target_unique: usize,
    pub target_total: u64,
    pub tolerance: f64,
}

fn pairs(items: &[(&str, f64)]) -> Vec<(String, f64)> {
    items.iter().map(|(n, w)| ((*n).to_owned(), *w)).collect()
}

fn names(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| (*s).to_owned()).collect()
}

const KITCHEN: &str = "kitchen";
const BATHROOM: &str = "bathroom";
const BEDROOM: &str = "bedroom";
const LIVINGROOM: &str = "livingroom";

fn household_receptacles() -> Vec<ReceptacleSpec> {
    let r = |name: &str, rooms: &[(&str, f64)], materials: &[(&str, f64)], aff: &[&str]| ReceptacleSpec {
        name: name.into(),
        rooms: pairs(rooms),
        materials: pairs(materials),
        affordances: names(aff),
    };
    vec![
        r("cabinet", &[(KITCHEN, 0.95), (BATHROOM, 0.8)], &[("wood", 0.8), ("metal", 0.2)], &["open", "close", "put"]),
        r("countertop", &[(KITCHEN, 0.95), (BATHROOM, 0.6)], &[("ceramic", 0.6), ("wood", 0.4)], &["put"]),
        r("fridge", &[(KITCHEN, 0.95)], &[("metal", 1.0)], &["open", "close", "put"]),
        r("microwave", &[(KITCHEN, 0.8)], &[("metal", 1.0)], &["open", "close", "turnon", "turnoff"]),
        r("sink", &[(KITCHEN, 0.9), (BATHROOM, 0.95)], &[("ceramic", 0.6), ("metal", 0.4)], &["put", "turnon", "turnoff"]),
        r("stoveburner", &[(KITCHEN, 0.9)], &[("metal", 1.0)], &["turnon", "turnoff", "put"]),
        r("diningtable", &[(KITCHEN, 0.5), (LIVINGROOM, 0.4)], &[("wood", 0.7), ("glass", 0.3)], &["put"]),
        r("coffeetable", &[(LIVINGROOM, 0.85)], &[("wood", 0.6), ("glass", 0.4)], &["put"]),
        r("sidetable", &[(LIVINGROOM, 0.6), (BEDROOM, 0.5)], &[("wood", 1.0)], &["put"]),
        r("shelf", &[(KITCHEN, 0.5), (LIVINGROOM, 0.6), (BEDROOM, 0.5), (BATHROOM, 0.4)], &[("wood", 0.7), ("metal", 0.3)], &["put"]),
        r("drawer", &[(KITCHEN, 0.8), (BEDROOM, 0.6), (BATHROOM, 0.5)], &[("wood", 1.0)], &["open", "close", "put"]),
        r("dresser", &[(BEDROOM, 0.85)], &[("wood", 1.0)], &["open", "close", "put"]),
        r("nightstand", &[(BEDROOM, 0.9)], &[("wood", 1.0)], &["open", "put"]),
        r("desk", &[(BEDROOM, 0.6), (LIVINGROOM, 0.2)], &[("wood", 0.8), ("metal", 0.2)], &["put"]),
        r("bed", &[(BEDROOM, 0.98)], &[("fabric", 0.7), ("wood", 0.3)], &["sit", "lie", "put"]),
        r("sofa", &[(LIVINGROOM, 0.95)], &[("fabric", 1.0)], &["sit", "lie", "put"]),
        r("armchair", &[(LIVINGROOM, 0.7), (BEDROOM, 0.3)], &[("fabric", 1.0)], &["sit", "put"]),
        r("toilet", &[(BATHROOM, 0.98)], &[("ceramic", 1.0)], &["open", "close", "put"]),
        r("bathtub", &[(BATHROOM, 0.8)], &[("ceramic", 1.0)], &["fill", "empty", "put"]),
        r("tvstand", &[(LIVINGROOM, 0.8), (BEDROOM, 0.3)], &[("wood", 1.0)], &["put"]),
    ]
}

struct KindDef {
    name: &'static str,
    rooms: &'static [(&'static str, f64)],
    locations: &'static [(&'static str, f64)],
    materials: &'static [(&'static str, f64)],
    affordances: &'static [&'static str],
}

const KIND_DEFS: [KindDef; 10] = [
    KindDef {
        name: "tableware",
        rooms: &[(KITCHEN, 0.9), (LIVINGROOM, 0.1)],
        locations: &[("cabinet", 0.5), ("countertop", 0.3), ("sink", 0.2)],
        materials: &[("ceramic", 0.7), ("glass", 0.3)],
        affordances: &["pickup", "fill", "pour", "break"],
    },
    KindDef {
        name: "cookware",
        rooms: &[(KITCHEN, 0.85)],
        locations: &[("stoveburner", 0.5), ("cabinet", 0.3), ("sink", 0.2)],
        materials: &[("metal", 1.0)],
        affordances: &["pickup", "fill", "cook"],
    },
    KindDef {
        name: "utensil",
        rooms: &[(KITCHEN, 0.9)],
        locations: &[("drawer", 0.6), ("countertop", 0.4)],
        materials: &[("metal", 0.8), ("wood", 0.2)],
        affordances: &["pickup", "clean"],
    },
    KindDef {
        name: "food",
        rooms: &[(KITCHEN, 0.9), (LIVINGROOM, 0.05)],
        locations: &[("fridge", 0.5), ("countertop", 0.35), ("diningtable", 0.15)],
        materials: &[],
        affordances: &["pickup", "slice", "cook"],
    },
    KindDef {
        name: "toiletry",
        rooms: &[(BATHROOM, 0.9)],
        locations: &[("countertop", 0.4), ("cabinet", 0.35), ("bathtub", 0.25)],
        materials: &[("plastic", 0.8), ("paper", 0.2)],
        affordances: &["pickup", "empty"],
    },
    KindDef {
        name: "electronics",
        rooms: &[(LIVINGROOM, 0.6), (BEDROOM, 0.6), (KITCHEN, 0.1)],
        locations: &[("desk", 0.35), ("tvstand", 0.35), ("sidetable", 0.3)],
        materials: &[("plastic", 0.7), ("metal", 0.3)],
        affordances: &["pickup", "turnon", "turnoff"],
    },
    KindDef {
        name: "decor",
        rooms: &[(LIVINGROOM, 0.7), (BEDROOM, 0.3), (BATHROOM, 0.15)],
        locations: &[("shelf", 0.5), ("coffeetable", 0.3), ("dresser", 0.2)],
        materials: &[("ceramic", 0.5), ("glass", 0.5)],
        affordances: &["pickup", "break"],
    },
    KindDef {
        name: "reading",
        rooms: &[(BEDROOM, 0.5), (LIVINGROOM, 0.6)],
        locations: &[("desk", 0.4), ("shelf", 0.3), ("nightstand", 0.3)],
        materials: &[("paper", 1.0)],
        affordances: &["pickup", "read", "open", "close"],
    },
    KindDef {
        name: "softgoods",
        rooms: &[(BEDROOM, 0.8), (LIVINGROOM, 0.5)],
        locations: &[("bed", 0.5), ("sofa", 0.35), ("armchair", 0.15)],
        materials: &[("fabric", 1.0)],
        affordances: &["pickup", "throw"],
    },
    KindDef {
        name: "sports",
        rooms: &[(BEDROOM, 0.6), (LIVINGROOM, 0.2)],
        locations: &[("dresser", 0.4), ("bed", 0.3), ("shelf", 0.3)],
        materials: &[("wood", 0.5), ("plastic", 0.5)],
        affordances: &["pickup", "throw"],
    },
];

const DEFAULT_OBJECTS: [&[&str]; 10] = [
    &["bowl", "plate", "mug", "cup", "saucer", "teapot"],
    &["pot", "pan", "kettle", "wok", "colander"],
    &["fork", "knife", "spoon", "spatula", "ladle", "whisk"],
    &["apple", "bread", "tomato", "lettuce", "potato", "egg", "banana"],
    &["soapbar", "soapbottle", "toiletpaper", "towel", "sponge", "toothbrush", "spraybottle"],
    &["laptop", "television", "remotecontrol", "cellphone", "alarmclock", "desklamp", "speaker"],
    &["vase", "statue", "painting", "houseplant", "candle", "mirror"],
    &["book", "newspaper", "pencil", "pen", "notebook", "magazine"],
    &["pillow", "blanket", "teddybear", "cloth"],
    &["baseballbat", "basketball", "tennisracket", "dumbbell"],
];

const DEPLOYMENT_OBJECTS: [&[&str]; 10] = [
    &["bottle", "jar"],
    &["skillet", "saucepan"],
    &["chopsticks", "tongs"],
    &["orange", "onion"],
    &["shampoo", "razor"],
    &["fan", "radio"],
    &["clock", "sculpture"],
    &["folder", "envelope"],
    &["quilt", "cushion"],
    &["football", "skateboard"],
];

fn kinds_with(objects: &[&[&str]; 10]) -> Vec<KindSpec> {
    KIND_DEFS
        .iter()
        .zip(objects)
        .map(|(k, objs)| KindSpec {
            name: k.name.into(),
            rooms: pairs(k.rooms),
            locations: pairs(k.locations),
            materials: pairs(k.materials),
            affordances: names(k.affordances),
            objects: names(objs),
        })
        .collect()
}

impl Default for SyntheticKgSpec {
    fn default() -> Self {
        SyntheticKgSpec {
            relations: RelationNames::default(),
            rooms: [KITCHEN, BATHROOM, BEDROOM, LIVINGROOM]
                .iter()
                .map(|n| RoomSpec {
                    name: (*n).into(),
                    environments: 30,
                })
                .collect(),
            receptacles: household_receptacles(),
            kinds: kinds_with(&DEFAULT_OBJECTS),
            object_relations: ObjectRelations::default(),
            popularity: (0.35, 0.95),
            instances: (1, 3),
            support_jitter: 0.6,
            affordance_keep: 0.9,
            receptacle_triples: true,
            word_vectors: WordVectorSpec::default(),
            target_unique: 352,
            target_total: 15_000,
            tolerance: 0.45,
        }
    }
}

impl SyntheticKgSpec {
    /// A second household graph whose 20 objects are all absent from the
    /// default spec. Objects only carry `atLocation` triples, against the
    /// same receptacles and rooms.
    pub fn deployment() -> Self {
        SyntheticKgSpec {
            kinds: kinds_with(&DEPLOYMENT_OBJECTS),
            object_relations: ObjectRelations {
                location: true,
                material: false,
                affordance: false,
            },
            receptacle_triples: false,
            target_unique: 35,
            target_total: 2_000,
            tolerance: 0.6,
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn object_names(&self) -> impl Iterator<Item = &str> + '_ {
        self.kinds.iter().flat_map(|k| k.objects.iter().map(String::as_str))
    }

    fn materials(&self) -> BTreeSet<&str> {
        self.receptacles
            .iter()
            .flat_map(|r| r.materials.iter())
            .chain(self.kinds.iter().flat_map(|k| k.materials.iter()))
            .map(|(m, _)| m.as_str())
            .collect()
    }

    fn affordances(&self) -> BTreeSet<&str> {
        self.receptacles
            .iter()
            .flat_map(|r| r.affordances.iter())
            .chain(self.kinds.iter().flat_map(|k| k.affordances.iter()))
            .map(String::as_str)
            .collect()
    }

    /// Every entity name with its word-vector group.
    pub fn entity_groups(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for k in &self.kinds {
            for o in &k.objects {
                out.push((o.clone(), format!("kind:{}", k.name)));
            }
        }
        for r in &self.receptacles {
            out.push((r.name.clone(), "receptacle".into()));
        }
        for r in &self.rooms {
            out.push((r.name.clone(), "room".into()));
        }
        for m in self.materials() {
            out.push((m.to_owned(), "material".into()));
        }
        for a in self.affordances() {
            out.push((a.to_owned(), "affordance".into()));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.rooms.is_empty() || self.rooms.iter().all(|r| r.environments == 0) {
            return bad("spec needs at least one room with one environment".into());
        }
        if self.kinds.iter().all(|k| k.objects.is_empty()) {
            return bad("spec has no objects".into());
        }
        let rooms: BTreeSet<&str> = self.rooms.iter().map(|r| r.name.as_str()).collect();
        let receptacles: BTreeSet<&str> = self.receptacles.iter().map(|r| r.name.as_str()).collect();
        for r in &self.receptacles {
            for (room, p) in &r.rooms {
                if !rooms.contains(room.as_str()) {
                    return bad(format!("receptacle `{}` refers to unknown room `{room}`", r.name));
                }
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("receptacle `{}` has presence {p} outside [0, 1]", r.name));
                }
            }
        }
        for k in &self.kinds {
            if k.objects.is_empty() {
                return bad(format!("kind `{}` has no objects", k.name));
            }
            for (room, p) in &k.rooms {
                if !rooms.contains(room.as_str()) {
                    return bad(format!("kind `{}` refers to unknown room `{room}`", k.name));
                }
                if !(0.0..=1.0).contains(p) {
                    return bad(format!("kind `{}` has presence {p} outside [0, 1]", k.name));
                }
            }
            if self.object_relations.location {
                if k.locations.is_empty() {
                    return bad(format!("kind `{}` has no locations", k.name));
                }
                for (loc, _) in &k.locations {
                    if !receptacles.contains(loc.as_str()) && !rooms.contains(loc.as_str()) {
                        return bad(format!("kind `{}` refers to unknown location `{loc}`", k.name));
                    }
                }
            }
            for (_, w) in k.locations.iter().chain(&k.materials) {
                if !(*w > 0.0) {
                    return bad(format!("kind `{}` has a non-positive weight", k.name));
                }
            }
        }
        let (ilo, ihi) = self.instances;
        if ilo == 0 || ilo > ihi {
            return bad(format!("invalid instance range ({ilo}, {ihi})"));
        }
        if !(0.0..1.0).contains(&self.support_jitter) {
            return bad(format!("support_jitter {} outside [0, 1)", self.support_jitter));
        }
        if !(0.0..=1.0).contains(&self.affordance_keep) {
            return bad(format!("affordance_keep {} outside [0, 1]", self.affordance_keep));
        }
        let (plo, phi) = self.popularity;
        if !(0.0 <= plo && plo <= phi && phi <= 1.0) {
            return bad(format!("invalid popularity range ({plo}, {phi})"));
        }
        if self.word_vectors.dim == 0 {
            return bad("word vector dimension must be positive".into());
        }
        Ok(())
    }
}

/// Per-object support drawn once per graph.
struct ObjectProfile {
    name: String,
    popularity: f64,
    room_presence: HashMap<String, f64>,
    locations: Vec<(String, f64)>,
    materials: Vec<(String, f64)>,
    affordances: Vec<String>,
}

fn jittered<R: Rng>(items: &[(String, f64)], jitter: f64, rng: &mut R) -> Vec<(String, f64)> {
    items
        .iter()
        .map(|(n, w)| (n.clone(), w * (1.0 + jitter * rng.gen_range(-1.0..=1.0))))
        .collect()
}

fn profiles<R: Rng>(spec: &SyntheticKgSpec, rng: &mut R) -> Vec<ObjectProfile> {
    let mut out = Vec::new();
    for k in &spec.kinds {
        for o in &k.objects {
            let popularity = rng.gen_range(spec.popularity.0..=spec.popularity.1);
            let locations = jittered(&k.locations, spec.support_jitter, rng);
            let materials = jittered(&k.materials, spec.support_jitter, rng);
            let mut affordances: Vec<String> = k
                .affordances
                .iter()
                .filter(|_| rng.gen_bool(spec.affordance_keep))
                .cloned()
                .collect();
            if affordances.is_empty() {
                if let Some(a) = k.affordances.choose(rng) {
                    affordances.push(a.clone());
                }
            }
            out.push(ObjectProfile {
                name: o.clone(),
                popularity,
                room_presence: k.rooms.iter().cloned().collect(),
                locations,
                materials,
                affordances,
            });
        }
    }
    out
}

fn pick<'a, R: Rng>(items: &'a [(String, f64)], rng: &mut R) -> Option<&'a str> {
    let dist = WeightedIndex::new(items.iter().map(|i| i.1)).ok()?;
    Some(items[dist.sample(rng)].0.as_str())
}

/// Samples every environment of `spec` and aggregates observation counts.
pub fn generate_synthetic_kg(spec: &SyntheticKgSpec, seed: u64) -> Result<KnowledgeGraph> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = profiles(spec, &mut rng);
    let rel = &spec.relations;
    let mut kg = KnowledgeGraph::new();

    for room in &spec.rooms {
        for _ in 0..room.environments {
            let present: Vec<&ReceptacleSpec> = spec
                .receptacles
                .iter()
                .filter(|r| {
                    let p = r.rooms.iter().find(|(n, _)| *n == room.name).map_or(0.0, |x| x.1);
                    p > 0.0 && rng.gen_bool(p)
                })
                .collect();
            let here: BTreeSet<&str> = present
                .iter()
                .map(|r| r.name.as_str())
                .chain(std::iter::once(room.name.as_str()))
                .collect();

            if spec.receptacle_triples {
                for r in &present {
                    kg.add_named(&r.name, &rel.at_location, &room.name, 1);
                    if let Some(m) = pick(&r.materials, &mut rng) {
                        kg.add_named(&r.name, &rel.made_of, m, 1);
                    }
                    for a in &r.affordances {
                        kg.add_named(&r.name, &rel.has_affordance, a, 1);
                    }
                }
            }

            for o in &objects {
                let p = o.room_presence.get(&room.name).copied().unwrap_or(0.0) * o.popularity;
                if p <= 0.0 || !rng.gen_bool(p.min(1.0)) {
                    continue;
                }
                let locs: Vec<(String, f64)> = o
                    .locations
                    .iter()
                    .filter(|(n, _)| here.contains(n.as_str()))
                    .cloned()
                    .collect();
                if spec.object_relations.location && locs.is_empty() {
                    continue;
                }
                let n = rng.gen_range(spec.instances.0..=spec.instances.1);
                for _ in 0..n {
                    if spec.object_relations.location {
                        if let Some(l) = pick(&locs, &mut rng) {
                            kg.add_named(&o.name, &rel.at_location, l, 1);
                        }
                    }
                    if spec.object_relations.material {
                        if let Some(m) = pick(&o.materials, &mut rng) {
                            kg.add_named(&o.name, &rel.made_of, m, 1);
                        }
                    }
                    if spec.object_relations.affordance {
                        for a in &o.affordances {
                            kg.add_named(&o.name, &rel.has_affordance, a, 1);
                        }
                    }
                }
            }
        }
    }
    Ok(kg)
}

fn name_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a over the name, mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn gaussian(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (dim as f64).sqrt();
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Word vectors for every entity of `spec`.
///
/// An object's vector is its kind prototype plus `category_weight` times the
/// shared object direction plus `noise`-scaled Gaussian noise; other entities
/// use their category prototype plus noise.
pub fn generate_word_vectors(spec: &SyntheticKgSpec, seed: u64) -> Result<WordVectorTable> {
    let wv = spec.word_vectors;
    let mut table = WordVectorTable::new(wv.dim);
    let mut protos: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut proto = |group: &str| -> Vec<f64> {
        protos
            .entry(group.to_owned())
            .or_insert_with(|| gaussian(wv.dim, name_seed(seed, &format!("group:{group}"))))
            .clone()
    };
    for (name, group) in spec.entity_groups() {
        let noise = gaussian(wv.dim, name_seed(seed, &format!("entity:{name}")));
        let mut v = proto(&group);
        if group.starts_with("kind:") {
            let cat = proto("object");
            for (x, c) in v.iter_mut().zip(&cat) {
                *x += wv.category_weight * c;
            }
        }
        for (x, n) in v.iter_mut().zip(&noise) {
            *x += wv.noise * n;
        }
        table.insert(&name, &v)?;
    }
    Ok(table)
}

/// Word vectors covering the entities of several specs.
pub fn generate_word_vectors_for(specs: &[&SyntheticKgSpec], seed: u64) -> Result<WordVectorTable> {
    let mut table = WordVectorTable::new(specs.first().map_or(0, |s| s.word_vectors.dim));
    for s in specs {
        let t = generate_word_vectors(s, seed)?;
        for tok in t.tokens() {
            if let Some(v) = t.get(tok) {
                table.insert(tok, v)?;
            }
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgStats {
    pub entities: usize,
    pub relations: usize,
    pub unique_triples: usize,
    pub total_observations: u64,
}

impl KgStats {
    pub fn of(kg: &KnowledgeGraph) -> Self {
        KgStats {
            entities: kg.entities.len(),
            relations: kg.relations.len(),
            unique_triples: kg.triples.len(),
            total_observations: kg.triples.total(),
        }
    }

    /// Unique-triple and total-observation counts within `spec.tolerance`
    /// (relative) of the spec's targets.
    pub fn within_tolerance(&self, spec: &SyntheticKgSpec) -> bool {
        let rel = |x: f64, target: f64| ((x - target) / target).abs() <= spec.tolerance;
        rel(self.unique_triples as f64, spec.target_unique as f64)
            && rel(self.total_observations as f64, spec.target_total as f64)
    }
}
