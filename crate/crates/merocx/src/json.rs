//! JSON forms of the core types. Every reader reports failures with the path
//! of the offending field, e.g. `rows[3].value.terms[0].num`.

use std::fmt;

use merocx_core::algebra::mono_name;
use merocx_core::cech::{CechForm, FoliationAtlas, Holonomy, Section, UPoly};
use merocx_core::scalar::{fmt_q, parse_q};
use merocx_core::{Cochain, GCochain, LaurentElem, Model, ModelParams, PoleCochain, Q};
use num_traits::{One, Zero};
use serde_json::{json, Map, Value};

/// A validation error located at a field path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldError {
    pub path: String,
    pub msg: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "field `{p}`: {}", self.msg)
    }
}

impl std::error::Error for FieldError {}

pub type FResult<T> = Result<T, FieldError>;

/// Cursor into a JSON document that remembers its path.
pub struct Node<'a> {
    pub v: &'a Value,
    pub path: String,
}

impl<'a> Node<'a> {
    pub fn root(v: &'a Value) -> Self {
        Node { v, path: String::new() }
    }

    pub fn err<T>(&self, msg: impl Into<String>) -> FResult<T> {
        Err(FieldError { path: self.path.clone(), msg: msg.into() })
    }

    fn child_path(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    pub fn object(&self) -> FResult<&'a Map<String, Value>> {
        match self.v.as_object() {
            Some(m) => Ok(m),
            None => self.err("expected an object"),
        }
    }

    /// Rejects keys outside `allowed`.
    pub fn only_keys(&self, allowed: &[&str]) -> FResult<()> {
        for k in self.object()?.keys() {
            if !allowed.contains(&k.as_str()) {
                return Err(FieldError { path: self.child_path(k), msg: format!("unknown field (expected one of {})", allowed.join(", ")) });
            }
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> FResult<Node<'a>> {
        match self.object()?.get(key) {
            Some(v) => Ok(Node { v, path: self.child_path(key) }),
            None => Err(FieldError { path: self.child_path(key), msg: "missing field".into() }),
        }
    }

    pub fn opt(&self, key: &str) -> FResult<Option<Node<'a>>> {
        Ok(self.object()?.get(key).filter(|v| !v.is_null()).map(|v| Node { v, path: self.child_path(key) }))
    }

    pub fn items(&self) -> FResult<Vec<Node<'a>>> {
        match self.v.as_array() {
            Some(a) => Ok(a.iter().enumerate().map(|(i, v)| Node { v, path: format!("{}[{i}]", self.path) }).collect()),
            None => self.err("expected an array"),
        }
    }

    pub fn u64(&self) -> FResult<u64> {
        match self.v.as_u64() {
            Some(x) => Ok(x),
            None => self.err("expected a non-negative integer"),
        }
    }

    pub fn u32(&self) -> FResult<u32> {
        let x = self.u64()?;
        u32::try_from(x).or_else(|_| self.err("integer out of range"))
    }

    pub fn i64(&self) -> FResult<i64> {
        match self.v.as_i64() {
            Some(x) => Ok(x),
            None => self.err("expected an integer"),
        }
    }

    pub fn str(&self) -> FResult<&'a str> {
        match self.v.as_str() {
            Some(s) => Ok(s),
            None => self.err("expected a string"),
        }
    }

    pub fn bool(&self) -> FResult<bool> {
        match self.v.as_bool() {
            Some(b) => Ok(b),
            None => self.err("expected a boolean"),
        }
    }

    /// A rational: an integer or a string such as `"-3/4"`.
    pub fn q(&self) -> FResult<Q> {
        if let Some(i) = self.v.as_i64() {
            return Ok(Q::from_integer(i.into()));
        }
        if let Some(s) = self.v.as_str() {
            if let Some(x) = parse_q(s) {
                return Ok(x);
            }
        }
        self.err("expected a rational (integer or \"p/q\" string)")
    }
}

pub fn q_json(x: &Q) -> Value {
    Value::String(fmt_q(x))
}

fn big_str(x: &num_bigint::BigInt) -> String {
    x.to_string()
}

pub fn model_to_json(p: &ModelParams) -> Value {
    json!({"N": p.n, "M": p.m, "B0": p.b0, "Lmax": p.lmax})
}

pub fn model_from_json(n: &Node) -> FResult<ModelParams> {
    n.only_keys(&["N", "M", "B0", "Lmax"])?;
    let p = ModelParams { n: n.get("N")?.u32()?, m: n.get("M")?.u32()?, b0: n.get("B0")?.u32()?, lmax: n.get("Lmax")?.u32()? };
    if let Err(e) = p.validate() {
        return n.err(e.to_string());
    }
    Ok(p)
}

pub fn laurent_to_json(x: &LaurentElem) -> Value {
    let terms: Vec<Value> = x
        .terms()
        .map(|(e, c)| json!({"exp": e, "num": big_str(c.numer()), "den": big_str(c.denom())}))
        .collect();
    let poles: Vec<Value> = x.poles().map(|(i, j, o)| json!({"i": i, "j": j, "ord": o})).collect();
    json!({"vars": x.vars(), "terms": terms, "poles": poles})
}

pub fn laurent_from_json(n: &Node) -> FResult<LaurentElem> {
    n.only_keys(&["vars", "terms", "poles"])?;
    let vars: Vec<u32> = n.get("vars")?.items()?.iter().map(|v| v.u32()).collect::<FResult<_>>()?;
    let mut terms = Vec::new();
    for t in n.get("terms")?.items()? {
        t.only_keys(&["exp", "num", "den"])?;
        let en = t.get("exp")?;
        let exp: Vec<i32> = en
            .items()?
            .iter()
            .map(|e| e.i64().and_then(|x| i32::try_from(x).or_else(|_| e.err("exponent out of range"))))
            .collect::<FResult<_>>()?;
        if exp.len() != vars.len() {
            return en.err(format!("expected {} exponents (one per variable)", vars.len()));
        }
        let num = big_of(&t.get("num")?)?;
        let den = match t.opt("den")? {
            Some(d) => big_of(&d)?,
            None => num_bigint::BigInt::one(),
        };
        if den.is_zero() {
            return t.get("den")?.err("zero denominator");
        }
        terms.push((exp, Q::new(num, den)));
    }
    let mut poles = Vec::new();
    if let Some(ps) = n.opt("poles")? {
        for p in ps.items()? {
            p.only_keys(&["i", "j", "ord"])?;
            poles.push((p.get("i")?.u32()?, p.get("j")?.u32()?, p.get("ord")?.u32()?));
        }
    }
    LaurentElem::from_parts(&vars, terms, &poles).or_else(|e| n.err(e.to_string()))
}

fn big_of(n: &Node) -> FResult<num_bigint::BigInt> {
    if let Some(i) = n.v.as_i64() {
        return Ok(i.into());
    }
    match n.v.as_str().and_then(|s| s.trim().parse().ok()) {
        Some(b) => Ok(b),
        None => n.err("expected an integer or integer string"),
    }
}

fn mono_json(model: &Model, i: u16) -> Value {
    json!(model.mono(i))
}

fn mono_from_json(model: &Model, n: &Node) -> FResult<u16> {
    let gens: Vec<u8> = n
        .items()?
        .iter()
        .map(|g| g.u64().and_then(|x| u8::try_from(x).or_else(|_| g.err("generator index out of range"))))
        .collect::<FResult<_>>()?;
    match model.index_of(&gens) {
        Some(i) => Ok(i),
        None => n.err(format!("{} is not a PBW basis monomial of the model (generators non-decreasing, weight <= M)", mono_name(&gens))),
    }
}

/// `{"model", "l", "k", "rows": [{"tuple", "out_monomial", "value"}]}`;
/// monomials are non-decreasing generator index lists (`[]` is the unit).
pub fn cochain_to_json(model: &Model, f: &Cochain) -> Value {
    let rows: Vec<Value> = f
        .entries()
        .map(|(t, o, v)| {
            json!({
                "tuple": t.iter().map(|x| mono_json(model, *x)).collect::<Vec<_>>(),
                "out_monomial": mono_json(model, o),
                "value": laurent_to_json(v),
            })
        })
        .collect();
    json!({"model": model_to_json(&f.params), "l": f.l, "k": f.k, "rows": rows})
}

pub fn pole_cochain_to_json(model: &Model, f: &PoleCochain) -> Value {
    cochain_to_json(model, &f.to_laurent())
}

/// Reads a cochain; the embedded model block, if any, must match `model`.
pub fn cochain_from_json(model: &Model, n: &Node) -> FResult<Cochain> {
    n.only_keys(&["model", "l", "k", "rows"])?;
    if let Some(mn) = n.opt("model")? {
        if model_from_json(&mn)? != model.params {
            return mn.err("cochain model differs from the run's model");
        }
    }
    let ln = n.get("l")?;
    let l = ln.u32()? as usize;
    if l > model.params.lmax as usize {
        return ln.err(format!("arity exceeds Lmax = {}", model.params.lmax));
    }
    let k = n.get("k")?.u32()?;
    let mut f: Cochain = GCochain::zero(model.params, l, k);
    for r in n.get("rows")?.items()? {
        r.only_keys(&["tuple", "out_monomial", "value"])?;
        let tn = r.get("tuple")?;
        let tuple: Vec<u16> = tn.items()?.iter().map(|m| mono_from_json(model, m)).collect::<FResult<_>>()?;
        if tuple.len() != l {
            return tn.err(format!("expected {l} arguments"));
        }
        let out = mono_from_json(model, &r.get("out_monomial")?)?;
        let vn = r.get("value")?;
        let v = laurent_from_json(&vn)?;
        if let Some(&bad) = v.vars().iter().find(|&&x| x == 0 || x as usize > l) {
            return vn.get("vars")?.err(format!("variable z{bad} outside z1..z{l}"));
        }
        f.add_entry(&tuple, out, &v, &Q::one());
    }
    Ok(f)
}

pub fn atlas_to_json(a: &FoliationAtlas) -> Value {
    let sections: Vec<Value> = a.sections.iter().map(|s| json!({"id": s.id, "interval": [q_json(&s.a), q_json(&s.b)]})).collect();
    let hol: Vec<Value> = a.arrows[a.sections.len()..]
        .iter()
        .map(|h| json!({"from": a.sections[h.from].id, "to": a.sections[h.to].id, "poly": h.poly.coeffs().iter().map(q_json).collect::<Vec<_>>()}))
        .collect();
    json!({"sections": sections, "holonomies": hol})
}

pub fn atlas_from_json(n: &Node) -> FResult<FoliationAtlas> {
    n.only_keys(&["sections", "holonomies"])?;
    let mut sections = Vec::new();
    for s in n.get("sections")?.items()? {
        s.only_keys(&["id", "interval"])?;
        let idn = s.get("id")?;
        let id = match (idn.v.as_str(), idn.v.as_u64()) {
            (Some(x), _) => x.to_string(),
            (_, Some(x)) => x.to_string(),
            _ => return idn.err("expected a string or integer id"),
        };
        let iv = s.get("interval")?;
        let ends = iv.items()?;
        if ends.len() != 2 {
            return iv.err("expected [a, b]");
        }
        sections.push(Section { id, a: ends[0].q()?, b: ends[1].q()? });
    }
    let find = |node: &Node, sections: &[Section]| -> FResult<usize> {
        let key = match (node.v.as_str(), node.v.as_u64()) {
            (Some(x), _) => x.to_string(),
            (_, Some(x)) => x.to_string(),
            _ => return node.err("expected a section id"),
        };
        match sections.iter().position(|s| s.id == key) {
            Some(i) => Ok(i),
            None => node.err(format!("unknown section '{key}'")),
        }
    };
    let mut hol = Vec::new();
    if let Some(hs) = n.opt("holonomies")? {
        for h in hs.items()? {
            h.only_keys(&["from", "to", "poly"])?;
            let from = find(&h.get("from")?, &sections)?;
            let to = find(&h.get("to")?, &sections)?;
            let coeffs: Vec<Q> = h.get("poly")?.items()?.iter().map(|c| c.q()).collect::<FResult<_>>()?;
            hol.push(Holonomy { from, to, poly: UPoly::new(coeffs) });
        }
    }
    // missing composites are filled in, as the Čech differential needs them
    FoliationAtlas::new(sections, hol).and_then(|a| a.close_under_composition(64)).or_else(|e| n.err(e.to_string()))
}

pub fn cech_form_to_json(a: &FoliationAtlas, w: &CechForm) -> Value {
    let comps: Vec<Value> = w
        .comps
        .iter()
        .map(|(c, p)| json!({"chain": a.chain_name(c), "coeffs": p.coeffs().iter().map(q_json).collect::<Vec<_>>()}))
        .collect();
    json!({"k": w.k, "l": w.l, "components": comps})
}
