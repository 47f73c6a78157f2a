use super::reach::{lookup_or_search, reach_bounded};
use super::{AnnotationStore, BouquetError, FlowerMark, ReachOutcome};
use crate::dtmc::{Chain, Dtmc};
use crate::formula::{FormulaFingerprint, UntilQuery};
use crate::nmc::{solve_until, NmcError, NmcOptions};

/// The sub-chain induced by `reach*(root)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flower {
    /// Chain over the flower's states with the root as initial state.
    pub sub_model: Dtmc,
    /// Parent index of every sub-model state, ascending.
    pub to_parent: Vec<usize>,
}

impl Flower {
    pub fn root(&self) -> usize {
        self.to_parent[self.sub_model.initial()]
    }

    pub fn len(&self) -> usize {
        self.to_parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.to_parent.is_empty()
    }
}

/// Extracts the flower rooted at `s_f`. The extraction happens in memory
/// and is booked as `k` fetches on `chain`.
pub fn get_flower<C: Chain + ?Sized>(
    chain: &C,
    store: &mut AnnotationStore,
    s_f: usize,
) -> Result<Flower, BouquetError> {
    let model = chain.model();
    if s_f >= model.n() {
        return Err(BouquetError::StateOutOfRange {
            state: s_f,
            n: model.n(),
        });
    }
    if !lookup_or_search(chain, store, s_f) {
        return Err(BouquetError::NotAFlower(s_f));
    }
    let ReachOutcome::Small(members) = reach_bounded(model, s_f, store.k()) else {
        return Err(BouquetError::NotAFlower(s_f));
    };
    chain.charge(store.k() as u64);
    store.counters.flowers_built += 1;

    let local = |parent: usize| members.binary_search(&parent).expect("flower is closed");
    let rows = members
        .iter()
        .map(|&s| model.row(s).iter().map(|(t, p)| (local(t), p)).collect())
        .collect();
    let labels = members.iter().map(|&s| model.labels(s).collect()).collect();
    let sub_model = Dtmc::new(local(s_f), rows, model.ap_names().to_vec(), labels)
        .expect("induced sub-chain of a valid chain is valid");
    Ok(Flower {
        sub_model,
        to_parent: members,
    })
}

/// Exact value of `q` at flower root `s_f`, from cache or from one solve on
/// the extracted flower. A solve caches the value of every flower member.
pub fn flower_nmc<C: Chain + ?Sized>(
    chain: &C,
    store: &mut AnnotationStore,
    q: &UntilQuery,
    s_f: usize,
    opts: NmcOptions,
) -> Result<f64, BouquetError> {
    flower_value(chain, store, q, &q.fingerprint(), s_f, opts)
}

pub(crate) fn flower_value<C: Chain + ?Sized>(
    chain: &C,
    store: &mut AnnotationStore,
    q: &UntilQuery,
    fingerprint: &FormulaFingerprint,
    s_f: usize,
    opts: NmcOptions,
) -> Result<f64, BouquetError> {
    if let Some(value) = store.cached(fingerprint, s_f) {
        store.counters.cache_hits += 1;
        return Ok(value);
    }
    let flower = get_flower(chain, store, s_f)?;
    let solved = solve_until(&flower.sub_model, q, opts)?;
    store.counters.nmc_solves += 1;
    store.counters.solver_iterations += solved.iterations as u64;
    if !solved.converged {
        return Err(NmcError::NotConverged {
            iterations: solved.iterations,
            residual: solved.residual,
        }
        .into());
    }
    for (local, &parent) in flower.to_parent.iter().enumerate() {
        store.annotate(parent, FlowerMark::Flower);
        store.insert_value(*fingerprint, parent, solved.values[local]);
    }
    Ok(solved.values[flower.sub_model.initial()])
}
