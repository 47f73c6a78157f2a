use super::{AnnotationStore, FlowerMark};
use crate::dtmc::Dtmc;

const UNVISITED: usize = usize::MAX;

/// Strongly connected components in reverse topological order: every
/// component comes after all components it can reach.
pub(crate) fn tarjan(model: &Dtmc) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = model.n();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<(usize, usize)> = Vec::new();
    let mut component = vec![UNVISITED; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;

    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        frames.push((root, 0));

        while let Some(frame) = frames.last_mut() {
            let v = frame.0;
            let row = model.row(v);
            if frame.1 < row.len() {
                let w = row.target(frame.1);
                frame.1 += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let id = components.len();
                let mut members = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    component[w] = id;
                    members.push(w);
                    if w == v {
                        break;
                    }
                }
                members.sort_unstable();
                components.push(members);
            }
        }
    }
    (components, component)
}

/// Annotates every state of `model` for threshold `k`.
///
/// Components are processed sinks first. A component's reach set is its own
/// members plus the reach sets of its successor components; it is abandoned
/// as soon as it would exceed `k` states, and any component that can reach
/// an abandoned one is abandoned too.
pub fn pre_annotate(model: &Dtmc, k: usize) -> AnnotationStore {
    let n = model.n();
    let mut store = AnnotationStore::new(n, k);
    let (components, component_of) = tarjan(model);
    let mut reach: Vec<Option<Vec<u32>>> = vec![None; components.len()];
    // stamp[s] == id marks s as already collected for component id
    let mut stamp = vec![UNVISITED; n];

    for (id, members) in components.iter().enumerate() {
        if members.len() > k {
            continue;
        }
        let mut set: Vec<u32> = Vec::with_capacity(k);
        for &s in members {
            stamp[s] = id;
            set.push(s as u32);
        }
        let mut big = false;
        'members: for &s in members {
            for t in model.row(s).targets() {
                let other = component_of[t];
                if other == id {
                    continue;
                }
                let Some(other_set) = &reach[other] else {
                    big = true;
                    break 'members;
                };
                for &u in other_set {
                    let u = u as usize;
                    if stamp[u] != id {
                        stamp[u] = id;
                        set.push(u as u32);
                        if set.len() > k {
                            big = true;
                            break 'members;
                        }
                    }
                }
            }
        }
        if !big {
            reach[id] = Some(set);
        }
    }

    for (id, members) in components.iter().enumerate() {
        match &reach[id] {
            Some(set) => {
                for &s in members {
                    store.annotate_counted(s, FlowerMark::Flower, Some(set.len()));
                }
            }
            None => {
                for &s in members {
                    store.annotate(s, FlowerMark::NotFlower);
                }
            }
        }
    }
    store
}
