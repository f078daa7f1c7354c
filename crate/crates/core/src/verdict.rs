use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Outcome of a law check: either the law holds on every instance, or the
/// first violating instance in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Fails(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails(w) => Some(w),
        }
    }

    pub fn into_witness(self) -> Option<W> {
        match self {
            Verdict::Holds => None,
            Verdict::Fails(w) => Some(w),
        }
    }

    pub fn map<V>(self, f: impl FnOnce(W) -> V) -> Verdict<V> {
        match self {
            Verdict::Holds => Verdict::Holds,
            Verdict::Fails(w) => Verdict::Fails(f(w)),
        }
    }

    /// First failure of an ordered sequence of instances.
    pub fn first_failure(items: impl IntoIterator<Item = Option<W>>) -> Self {
        items
            .into_iter()
            .flatten()
            .next()
            .map_or(Verdict::Holds, Verdict::Fails)
    }
}

impl<W> From<Option<W>> for Verdict<W> {
    fn from(o: Option<W>) -> Self {
        o.map_or(Verdict::Holds, Verdict::Fails)
    }
}

impl<W: Serialize> Serialize for Verdict<W> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Verdict", 2)?;
        st.serialize_field("holds", &self.holds())?;
        st.serialize_field("witness", &self.witness())?;
        st.end()
    }
}
