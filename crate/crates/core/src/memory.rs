//! Object store shared by the concrete, interval and symbolic interpreters.
//! `V` is the value domain of a scalar cell.

use serde::{Deserialize, Serialize};

use crate::frontend::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjRef {
    Global(usize),
    Slot { frame: usize, slot: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Obj<V> {
    Scalar(ScalarType, V),
    Array(ScalarType, Vec<V>),
    Record(Vec<Obj<V>>),
    /// A by-reference parameter.
    Ref(ObjRef),
}

impl<V: Clone> Obj<V> {
    pub fn new(p: &Program, ty: Type, init: &mut dyn FnMut(ScalarType) -> V) -> Obj<V> {
        match ty {
            Type::Scalar(t) => Obj::Scalar(t, init(t)),
            Type::Array(t, n) => Obj::Array(t, (0..n).map(|_| init(t)).collect()),
            Type::Record(r) => Obj::Record(
                p.records[r]
                    .fields
                    .iter()
                    .map(|f| match f.ty {
                        FieldType::Scalar(t) => Obj::Scalar(t, init(t)),
                        FieldType::Array(t, n) => Obj::Array(t, (0..n).map(|_| init(t)).collect()),
                    })
                    .collect(),
            ),
        }
    }

    pub fn map<W>(&self, f: &mut dyn FnMut(ScalarType, &V) -> W) -> Obj<W> {
        match self {
            Obj::Scalar(t, v) => Obj::Scalar(*t, f(*t, v)),
            Obj::Array(t, vs) => Obj::Array(*t, vs.iter().map(|v| f(*t, v)).collect()),
            Obj::Record(fs) => Obj::Record(fs.iter().map(|o| o.map(f)).collect()),
            Obj::Ref(r) => Obj::Ref(*r),
        }
    }

    /// Visit every scalar cell.
    pub fn for_each(&self, f: &mut dyn FnMut(ScalarType, &V)) {
        match self {
            Obj::Scalar(t, v) => f(*t, v),
            Obj::Array(t, vs) => vs.iter().for_each(|v| f(*t, v)),
            Obj::Record(fs) => fs.iter().for_each(|o| o.for_each(f)),
            Obj::Ref(_) => {}
        }
    }

    pub fn for_each_mut(&mut self, f: &mut dyn FnMut(ScalarType, &mut V)) {
        match self {
            Obj::Scalar(t, v) => f(*t, v),
            Obj::Array(t, vs) => vs.iter_mut().for_each(|v| f(*t, v)),
            Obj::Record(fs) => fs.iter_mut().for_each(|o| o.for_each_mut(f)),
            Obj::Ref(_) => {}
        }
    }

    /// Combine two objects of identical shape cell by cell.
    pub fn zip_with(&self, other: &Obj<V>, f: &mut dyn FnMut(ScalarType, &V, &V) -> V) -> Obj<V> {
        match (self, other) {
            (Obj::Scalar(t, a), Obj::Scalar(_, b)) => Obj::Scalar(*t, f(*t, a, b)),
            (Obj::Array(t, a), Obj::Array(_, b)) => {
                Obj::Array(*t, a.iter().zip(b).map(|(x, y)| f(*t, x, y)).collect())
            }
            (Obj::Record(a), Obj::Record(b)) => {
                Obj::Record(a.iter().zip(b).map(|(x, y)| x.zip_with(y, f)).collect())
            }
            (Obj::Ref(r), Obj::Ref(_)) => Obj::Ref(*r),
            _ => panic!("object shapes differ"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Frame<V> {
    /// `None` for the frame holding the entry function's by-reference arguments.
    pub func: Option<usize>,
    pub slots: Vec<Obj<V>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Store<V> {
    pub globals: Vec<Obj<V>>,
    pub frames: Vec<Frame<V>>,
}

impl<V: Clone> Store<V> {
    /// Globals initialized from their declarations, plus an entry frame for
    /// function `entry`. Parameters of the entry function are program inputs:
    /// `input` receives the input name of each scalar parameter and of each
    /// scalar field of a by-reference record (the field name), and `None` for
    /// array cells.
    pub fn initial(
        p: &Program,
        entry: usize,
        global_init: &mut dyn FnMut(&Global, ScalarType) -> V,
        input: &mut dyn FnMut(Option<&str>, ScalarType) -> V,
        zero: &mut dyn FnMut(ScalarType) -> V,
    ) -> Store<V> {
        let globals = p
            .globals
            .iter()
            .map(|g| Obj::new(p, g.ty, &mut |t| global_init(g, t)))
            .collect();
        let f = &p.functions[entry];
        let mut hidden = Vec::new();
        let mut slots = Vec::new();
        for pa in &f.params {
            let obj = match pa.ty {
                ParamType::Scalar(t) => {
                    slots.push(Obj::Scalar(t, input(Some(&pa.name), t)));
                    continue;
                }
                ParamType::RecordPtr(r) => Obj::Record(
                    p.records[r]
                        .fields
                        .iter()
                        .map(|fd| match fd.ty {
                            FieldType::Scalar(t) => Obj::Scalar(t, input(Some(&fd.name), t)),
                            FieldType::Array(t, n) => Obj::Array(t, (0..n).map(|_| input(None, t)).collect()),
                        })
                        .collect(),
                ),
                ParamType::ArrayRef(t, n) => Obj::Array(t, (0..n).map(|_| input(None, t)).collect()),
            };
            hidden.push(obj);
            slots.push(Obj::Ref(ObjRef::Slot { frame: 0, slot: hidden.len() - 1 }));
        }
        for l in &f.locals {
            slots.push(Obj::new(p, l.ty, zero));
        }
        Store {
            globals,
            frames: vec![Frame { func: None, slots: hidden }, Frame { func: Some(entry), slots }],
        }
    }

    pub fn current(&self) -> usize {
        self.frames.len() - 1
    }

    /// The object a variable designates in the current frame, following references.
    pub fn target(&self, v: VarRef) -> ObjRef {
        match v {
            VarRef::Global(g) => ObjRef::Global(g),
            VarRef::Slot(s) => {
                let frame = self.current();
                match &self.frames[frame].slots[s] {
                    Obj::Ref(r) => *r,
                    _ => ObjRef::Slot { frame, slot: s },
                }
            }
        }
    }

    pub fn get(&self, r: ObjRef) -> &Obj<V> {
        match r {
            ObjRef::Global(g) => &self.globals[g],
            ObjRef::Slot { frame, slot } => &self.frames[frame].slots[slot],
        }
    }

    pub fn get_mut(&mut self, r: ObjRef) -> &mut Obj<V> {
        match r {
            ObjRef::Global(g) => &mut self.globals[g],
            ObjRef::Slot { frame, slot } => &mut self.frames[frame].slots[slot],
        }
    }

    /// The scalar or array object addressed by a place, before indexing.
    pub fn container(&self, pl: &Place) -> &Obj<V> {
        let o = self.get(self.target(pl.var));
        match (o, pl.field) {
            (Obj::Record(fs), Some(f)) => &fs[f],
            (o, _) => o,
        }
    }

    pub fn container_mut(&mut self, pl: &Place) -> &mut Obj<V> {
        let r = self.target(pl.var);
        let o = self.get_mut(r);
        match o {
            Obj::Record(fs) => &mut fs[pl.field.expect("record place without field")],
            o => o,
        }
    }

    /// Objects visible from the current frame with references replaced by
    /// their targets: globals followed by the frame's slots.
    pub fn view(&self) -> (Vec<Obj<V>>, Vec<Obj<V>>) {
        let slots = self.frames[self.current()]
            .slots
            .iter()
            .map(|o| match o {
                Obj::Ref(r) => self.get(*r).clone(),
                o => o.clone(),
            })
            .collect();
        (self.globals.clone(), slots)
    }
}

/// Length of an array container, or `None` for scalars.
pub fn array_len<V>(o: &Obj<V>) -> Option<usize> {
    match o {
        Obj::Array(_, vs) => Some(vs.len()),
        _ => None,
    }
}
