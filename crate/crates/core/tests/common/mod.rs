//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tirettes_core::{
    AgreementChain, Catalog, Category, Exercise, Feature, FeatureBundle, Gender, GoldSet, Number, Pack, Person, Slider,
    SliderLabel, StateVector, WordForm,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn fixtures_catalog() -> Catalog {
    Catalog::new(Pack::load(data_path("fixtures_pack.json")).unwrap()).unwrap()
}

pub fn full_catalog() -> Catalog {
    Catalog::new(Pack::load(data_path("tirettes_pack.json")).unwrap()).unwrap()
}

/// Specified value of one feature as text, `None` for the wildcard.
fn spec_value(form: &WordForm, feature: Feature) -> Option<String> {
    let f = &form.features;
    let text = match feature {
        Feature::Gender => format!("{:?}", f.gender),
        Feature::Number => format!("{:?}", f.number),
        Feature::Person => format!("{:?}", f.person),
    };
    (text != "Unspecified").then_some(text)
}

/// Agreement straight from the definition: within each chain, every enforced
/// feature has at most one specified value among the chosen forms.
pub fn oracle_grammatical(ex: &Exercise, v: &StateVector) -> bool {
    ex.chains().iter().all(|chain| {
        chain.enforced.iter().all(|&feature| {
            let mut seen: Option<String> = None;
            chain.members.iter().all(|&m| {
                let form = &ex.sliders()[m].forms[v.positions()[m] - 1];
                match (spec_value(form, feature), &seen) {
                    (None, _) => true,
                    (Some(x), None) => {
                        seen = Some(x);
                        true
                    }
                    (Some(x), Some(y)) => &x == y,
                }
            })
        })
    })
}

/// Every vector of the raw space, in lexicographic order.
pub fn all_vectors(ex: &Exercise) -> Vec<StateVector> {
    let sizes: Vec<usize> = ex.sliders().iter().map(|s| s.forms.len()).collect();
    let mut out = Vec::new();
    let mut cur = vec![1; sizes.len()];
    loop {
        out.push(StateVector::new(cur.clone()));
        let mut i = sizes.len();
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < sizes[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
        }
    }
}

pub fn brute_force_golds(ex: &Exercise) -> Vec<StateVector> {
    all_vectors(ex)
        .into_iter()
        .filter(|v| oracle_grammatical(ex, v))
        .collect()
}

pub fn hamming_scan(a: &StateVector, b: &StateVector) -> usize {
    a.positions().iter().zip(b.positions()).filter(|(x, y)| x != y).count()
}

/// (distance, every gold at that distance in lexicographic order).
pub fn nearest_scan(v: &StateVector, golds: &GoldSet) -> (usize, Vec<StateVector>) {
    let d = golds.vectors().iter().map(|g| hamming_scan(v, g)).min().unwrap();
    let mut ties: Vec<StateVector> = golds
        .vectors()
        .iter()
        .filter(|g| hamming_scan(v, g) == d)
        .cloned()
        .collect();
    ties.sort();
    (d, ties)
}

fn random_form(rng: &mut ChaCha8Rng, category: Category, k: usize) -> WordForm {
    let gender = [Gender::Masc, Gender::Fem, Gender::Unspecified][rng.gen_range(0..3)];
    let number = [Number::Sing, Number::Plur, Number::Unspecified][rng.gen_range(0..3)];
    let mut person = [Person::P1, Person::P2, Person::P3, Person::Unspecified][rng.gen_range(0..4)];
    if category == Category::Ver && number == Number::Unspecified {
        person = Person::Unspecified;
    }
    let surface = format!("w{k}");
    WordForm::new(&surface, &surface, category, FeatureBundle::new(gender, number, person))
}

/// A valid random exercise with 2 to 6 sliders of 1 to 4 forms each.
pub fn random_exercise(seed: u64) -> Exercise {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = [
        Category::Det,
        Category::Nom,
        Category::Adj,
        Category::Ver,
        Category::Other,
    ];
    loop {
        let n = rng.gen_range(2..=6);
        let mut sliders = Vec::new();
        for i in 0..n {
            let category = cats[rng.gen_range(0..cats.len())];
            let n_forms = rng.gen_range(1..=4);
            let forms = (0..n_forms)
                .map(|k| random_form(&mut rng, category, 10 * i + k))
                .collect();
            sliders.push(Slider {
                index: i,
                label: SliderLabel::Category(category),
                forms,
            });
        }
        let n_chains = rng.gen_range(1..=3);
        let mut chains = Vec::new();
        for _ in 0..n_chains {
            let members: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
            let enforced: Vec<Feature> = Feature::ALL.into_iter().filter(|_| rng.gen_bool(0.5)).collect();
            if members.len() >= 2 && !enforced.is_empty() {
                chains.push(AgreementChain::new(members, enforced));
            }
        }
        if let Ok(ex) = Exercise::new(format!("R{seed}"), sliders, chains) {
            return ex;
        }
    }
}
