use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Category pairs that form a group when connected by a relation edge.
pub const DEFAULT_PAIRS: [(&str, &str); 26] = [
    ("Bed", "Nightstand"),
    ("Wardrobe", "Dresser"),
    ("Bookshelf", "Chair"),
    ("Counter", "Stove"),
    ("Table", "Chair"),
    ("Bathroom Sink", "Mirror"),
    ("Shower", "Bathtub"),
    ("Refrigerator", "Freezer"),
    ("Oven", "Microwave"),
    ("Washing Machine", "Dryer"),
    ("Sofa", "Table"),
    ("Desk", "Office Chair"),
    ("Computer", "Monitor"),
    ("Piano", "Bench"),
    ("Fireplace", "Mantel"),
    ("Table", "Mirror"),
    ("Window", "Curtains"),
    ("Closet", "Hangers"),
    ("Bathroom Cabinet", "Toiletries"),
    ("Living Room Rug", "Coffee Table"),
    ("Kitchen Cabinet", "Dishes"),
    ("Dining Room Chandelier", "Dining Table"),
    ("Clock", "Wall"),
    ("Floor Lamp", "Reading Chair"),
    ("Couch", "Throw Pillows"),
    ("Bookcase", "Books"),
];

/// Symmetric set of related category pairs, compared case-insensitively.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelatedCategoryLexicon {
    pairs: BTreeSet<(String, String)>,
}

fn key(a: &str, b: &str) -> (String, String) {
    let (a, b) = (a.trim().to_lowercase(), b.trim().to_lowercase());
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Default for RelatedCategoryLexicon {
    fn default() -> Self {
        Self::from_pairs(DEFAULT_PAIRS)
    }
}

impl RelatedCategoryLexicon {
    pub fn from_pairs<A: AsRef<str>, B: AsRef<str>>(pairs: impl IntoIterator<Item = (A, B)>) -> Self {
        Self { pairs: pairs.into_iter().map(|(a, b)| key(a.as_ref(), b.as_ref())).collect() }
    }

    pub fn related(&self, a: &str, b: &str) -> bool {
        self.pairs.contains(&key(a, b))
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Categories related to `category`.
    pub fn partners(&self, category: &str) -> Vec<&str> {
        let c = category.trim().to_lowercase();
        self.pairs
            .iter()
            .filter_map(|(a, b)| if *a == c { Some(b.as_str()) } else if *b == c { Some(a.as_str()) } else { None })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_holds_every_listed_pair() {
        let lex = RelatedCategoryLexicon::default();
        assert_eq!(lex.len(), 26);
        assert!(lex.related("table", "chair"));
        assert!(lex.related("Chair", "Table"));
        assert!(!lex.related("chair", "chair"));
    }

    #[test]
    fn partners_of_table() {
        let lex = RelatedCategoryLexicon::default();
        assert_eq!(lex.partners("Table"), vec!["chair", "mirror", "sofa"]);
    }

    proptest! {
        #[test]
        fn lookup_is_symmetric(i in 0usize..26, j in 0usize..26) {
            let lex = RelatedCategoryLexicon::default();
            let a = DEFAULT_PAIRS[i].0;
            let b = DEFAULT_PAIRS[j].1;
            prop_assert_eq!(lex.related(a, b), lex.related(b, a));
        }
    }
}
