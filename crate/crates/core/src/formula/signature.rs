use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignatureKind {
    Relational,
    UnaryFunctional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Function,
    Predicate,
    Constant,
    Relation(usize),
}

/// Declared symbols, kept in declaration order within each category.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    kind: SignatureKind,
    symbols: BTreeMap<String, SymbolKind>,
    functions: Vec<String>,
    predicates: Vec<String>,
    constants: Vec<String>,
    relations: Vec<(String, usize)>,
}

impl Signature {
    pub fn new(kind: SignatureKind) -> Self {
        Signature {
            kind,
            symbols: BTreeMap::new(),
            functions: Vec::new(),
            predicates: Vec::new(),
            constants: Vec::new(),
            relations: Vec::new(),
        }
    }

    pub fn unary_functional() -> Self {
        Self::new(SignatureKind::UnaryFunctional)
    }

    pub fn relational() -> Self {
        Self::new(SignatureKind::Relational)
    }

    /// Build a unary-functional signature from symbol name lists.
    pub fn bijective(functions: &[&str], predicates: &[&str], constants: &[&str]) -> Result<Self> {
        let mut sig = Self::unary_functional();
        for f in functions {
            sig.add_function(f)?;
        }
        for p in predicates {
            sig.add_predicate(p)?;
        }
        for c in constants {
            sig.add_constant(c)?;
        }
        Ok(sig)
    }

    pub fn kind(&self) -> SignatureKind {
        self.kind
    }

    fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<()> {
        if self.symbols.contains_key(name) {
            return Err(Error::DuplicateSymbol(name.to_string()));
        }
        let ok = match (self.kind, kind) {
            (SignatureKind::Relational, SymbolKind::Relation(a)) => a >= 1,
            (SignatureKind::Relational, _) => false,
            (SignatureKind::UnaryFunctional, SymbolKind::Relation(_)) => false,
            (SignatureKind::UnaryFunctional, _) => true,
        };
        if !ok {
            return Err(Error::Unsupported(format!(
                "symbol `{name}` of kind {kind:?} in a {:?} signature",
                self.kind
            )));
        }
        self.symbols.insert(name.to_string(), kind);
        Ok(())
    }

    pub fn add_function(&mut self, name: &str) -> Result<()> {
        self.declare(name, SymbolKind::Function)?;
        self.functions.push(name.to_string());
        Ok(())
    }

    pub fn add_predicate(&mut self, name: &str) -> Result<()> {
        self.declare(name, SymbolKind::Predicate)?;
        self.predicates.push(name.to_string());
        Ok(())
    }

    pub fn add_constant(&mut self, name: &str) -> Result<()> {
        self.declare(name, SymbolKind::Constant)?;
        self.constants.push(name.to_string());
        Ok(())
    }

    pub fn add_relation(&mut self, name: &str, arity: usize) -> Result<()> {
        if arity == 0 {
            return Err(Error::Unsupported(format!("relation `{name}` has arity 0")));
        }
        self.declare(name, SymbolKind::Relation(arity))?;
        self.relations.push((name.to_string(), arity));
        Ok(())
    }

    pub fn lookup(&self, name: &str) -> Option<SymbolKind> {
        self.symbols.get(name).copied()
    }

    pub fn is_function(&self, name: &str) -> bool {
        self.lookup(name) == Some(SymbolKind::Function)
    }

    pub fn is_predicate(&self, name: &str) -> bool {
        self.lookup(name) == Some(SymbolKind::Predicate)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.lookup(name) == Some(SymbolKind::Constant)
    }

    pub fn relation_arity(&self, name: &str) -> Option<usize> {
        match self.lookup(name) {
            Some(SymbolKind::Relation(a)) => Some(a),
            _ => None,
        }
    }

    pub fn functions(&self) -> &[String] {
        &self.functions
    }

    pub fn predicates(&self) -> &[String] {
        &self.predicates
    }

    pub fn constants(&self) -> &[String] {
        &self.constants
    }

    pub fn relations(&self) -> &[(String, usize)] {
        &self.relations
    }

    /// Maximal relation arity (0 without relations).
    pub fn max_arity(&self) -> usize {
        self.relations.iter().map(|(_, a)| *a).max().unwrap_or(0)
    }
}
