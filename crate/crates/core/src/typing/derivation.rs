use serde::Serialize;

use crate::syntax::{ExcContext, Name, Type};

/// Ordered typed variables. Extension shadows earlier entries of the same name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct VarContext {
    pub vars: Vec<(Name, Type)>,
}

impl VarContext {
    pub fn new() -> Self {
        VarContext::default()
    }

    pub fn lookup(&self, name: &str) -> Option<&Type> {
        self.vars
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn extend(&self, name: &str, ty: Type) -> VarContext {
        let mut vars = self.vars.clone();
        vars.push((name.to_string(), ty));
        VarContext { vars }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }
}

impl Serialize for VarContext {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.vars.len()))?;
        for (n, t) in &self.vars {
            seq.serialize_element(&format!("{n}:{t}"))?;
        }
        seq.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueRule {
    Var,
    Sig,
    Unit,
    Inl,
    Inr,
    Prod,
    Lambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompRule {
    Ret,
    Do,
    GuardedCase,
    Case,
    PairCase,
    Init,
    Raise,
    Handle,
    HandleIt,
    App,
}

/// One node of a value typing derivation. Premises follow the order of the
/// term's immediate subterms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueDerivation {
    pub rule: ValueRule,
    pub gamma: VarContext,
    #[serde(serialize_with = "display")]
    pub ty: Type,
    pub values: Vec<ValueDerivation>,
    /// Only the lambda rule has a computation premise.
    pub body: Option<Box<CompDerivation>>,
}

/// One node of a computation typing derivation: the judgement
/// `delta | gamma |- p : ty` and its premises in subterm order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompDerivation {
    pub rule: CompRule,
    #[serde(serialize_with = "display")]
    pub delta: ExcContext,
    pub gamma: VarContext,
    #[serde(serialize_with = "display")]
    pub ty: Type,
    pub values: Vec<ValueDerivation>,
    pub premises: Vec<CompDerivation>,
    /// Set while the type is still unconstrained (raise, init and friends).
    #[serde(skip)]
    pub(crate) open: bool,
}

impl CompDerivation {
    /// Number of computation judgements in the tree.
    pub fn size(&self) -> usize {
        1 + self
            .premises
            .iter()
            .map(CompDerivation::size)
            .sum::<usize>()
            + self
                .values
                .iter()
                .map(ValueDerivation::comp_size)
                .sum::<usize>()
    }

    /// Fixes the type of a still-open judgement and of its open premises.
    pub(crate) fn close(&mut self, ty: &Type) {
        if !self.open {
            return;
        }
        self.open = false;
        self.ty = ty.clone();
        for p in &mut self.premises {
            p.close(ty);
        }
    }
}

impl ValueDerivation {
    fn comp_size(&self) -> usize {
        self.values
            .iter()
            .map(ValueDerivation::comp_size)
            .sum::<usize>()
            + self.body.as_ref().map_or(0, |b| b.size())
    }
}

fn display<T: std::fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
