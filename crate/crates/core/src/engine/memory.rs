use std::collections::{BTreeSet, HashMap};
use std::ops::Range;

use indexmap::IndexSet;

use crate::rule::Fact;
use crate::term::{Constant, Name};

pub(crate) type Tuple = Box<[Constant]>;

/// One predicate's facts in insertion order, with a per-position index.
/// Tuple ids are insertion positions, so "facts added since round k" is a
/// contiguous id range.
#[derive(Debug, Clone)]
pub(crate) struct Relation {
    pub name: Name,
    pub tuples: IndexSet<Tuple>,
    index: [HashMap<Constant, Vec<u32>>; 2],
}

impl Relation {
    fn new(name: Name) -> Self {
        Relation {
            name,
            tuples: IndexSet::new(),
            index: [HashMap::new(), HashMap::new()],
        }
    }

    pub fn len(&self) -> u32 {
        self.tuples.len() as u32
    }

    fn insert(&mut self, tuple: Tuple) -> bool {
        let (id, added) = self.tuples.insert_full(tuple);
        if added {
            let tuple = &self.tuples[id];
            for (pos, value) in tuple.iter().enumerate().take(2) {
                self.index[pos].entry(value.clone()).or_default().push(id as u32);
            }
        }
        added
    }

    pub fn tuple(&self, id: u32) -> &Tuple {
        &self.tuples[id as usize]
    }

    /// Id of an exact tuple, if present.
    pub fn find(&self, tuple: &[Constant]) -> Option<u32> {
        self.tuples.get_index_of(tuple).map(|i| i as u32)
    }

    /// Ids within `range` whose value at `pos` equals `value`.
    pub fn lookup(&self, pos: usize, value: &Constant, range: Range<u32>) -> &[u32] {
        match self.index[pos].get(value) {
            Some(ids) => {
                let lo = ids.partition_point(|&i| i < range.start);
                let hi = ids.partition_point(|&i| i < range.end);
                &ids[lo..hi.max(lo)]
            }
            None => &[],
        }
    }
}

/// The indexed fact set evaluation runs over. Facts are only ever added.
#[derive(Debug, Clone, Default)]
pub struct WorkingMemory {
    ids: HashMap<Name, usize>,
    relations: Vec<Relation>,
    len: usize,
}

impl WorkingMemory {
    pub fn new() -> Self {
        WorkingMemory::default()
    }

    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Self {
        let mut wm = WorkingMemory::new();
        for f in facts {
            wm.insert(f);
        }
        wm
    }

    pub(crate) fn relation_id(&mut self, predicate: &Name) -> usize {
        if let Some(&id) = self.ids.get(predicate) {
            return id;
        }
        let id = self.relations.len();
        self.relations.push(Relation::new(predicate.clone()));
        self.ids.insert(predicate.clone(), id);
        id
    }

    pub(crate) fn find_relation(&self, predicate: &str) -> Option<usize> {
        self.ids.get(predicate).copied()
    }

    pub(crate) fn relation(&self, id: usize) -> &Relation {
        &self.relations[id]
    }

    pub(crate) fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub(crate) fn insert_tuple(&mut self, rel: usize, tuple: Tuple) -> bool {
        let added = self.relations[rel].insert(tuple);
        if added {
            self.len += 1;
        }
        added
    }

    /// Adds a fact; returns false if it was already present.
    pub fn insert(&mut self, fact: Fact) -> bool {
        let rel = self.relation_id(&fact.predicate);
        self.insert_tuple(rel, fact.args.into_boxed_slice())
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.find_relation(&fact.predicate)
            .is_some_and(|r| self.relations[r].find(&fact.args).is_some())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of facts for one predicate.
    pub fn count(&self, predicate: &str) -> usize {
        self.find_relation(predicate)
            .map_or(0, |r| self.relations[r].tuples.len())
    }

    /// Facts of one predicate in insertion order.
    pub fn facts_of<'a>(&'a self, predicate: &str) -> impl Iterator<Item = Fact> + 'a {
        self.find_relation(predicate).into_iter().flat_map(move |r| {
            let rel = &self.relations[r];
            rel.tuples
                .iter()
                .map(move |t| Fact::new(rel.name.clone(), t.to_vec()))
        })
    }

    /// Every fact, sorted.
    pub fn facts(&self) -> BTreeSet<Fact> {
        self.relations
            .iter()
            .flat_map(|rel| {
                rel.tuples
                    .iter()
                    .map(move |t| Fact::new(rel.name.clone(), t.to_vec()))
            })
            .collect()
    }

    /// Tab-separated `subject predicate object` lines, sorted. Internal
    /// predicates (names containing `$`) are left out unless requested.
    pub fn triple_dump(&self, include_internal: bool) -> String {
        let mut lines: Vec<String> = self
            .facts()
            .into_iter()
            .filter(|f| include_internal || !f.predicate.contains('$'))
            .map(|f| {
                let (s, p, o) = f.to_triple();
                format!("{s}\t{p}\t{o}")
            })
            .collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}
