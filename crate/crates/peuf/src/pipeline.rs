// SPDX-License-Identifier: Apache-2.0

//! Correctness formulas for small single-issue pipelines.
//!
//! The pipeline and its instruction-set reference are both modeled as
//! functions on symbolic states. Starting from an arbitrary pipeline state,
//! the implementation runs `n` steps and is then flushed (fetch disabled until
//! every latch has drained); the reference flushes first and then executes
//! the instructions the implementation fetched. The formula equates the
//! program counters, one arbitrary register (`r_obs`) and the data memory.
//!
//! Register identifiers come from g-functions of the instruction address
//! (`src1`, `src2`, `dest`); the immediate (`imm`), the ALU (`alu`, with a
//! boolean opcode argument), address arithmetic (`addr`), branch and jump
//! targets, the PC increment (`inc`), the initial register file (`f_I`) and
//! the memory (`f_r` reads, `f_u` updates) are all uninterpreted. Opcode bits
//! are predicates of the instruction address.
//!
//! The three-stage pipeline is fetch/decode, execute (ALU and memory) and
//! write-back. Write-back happens before decode reads; the execute result is
//! forwarded to decode. Branches and jumps resolve in decode, so nothing is
//! fetched down a wrong path.
//!
//! The five-stage pipeline is fetch, decode, execute, memory and write-back.
//! Decode reads operands through forwarding from execute and memory; a load
//! in execute whose destination decode needs stalls decode for one cycle.
//! Branches and jumps resolve in decode, and fetch is held while decode holds
//! one.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Node, NodeId, Sort, Store, SymbolKind};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Alu,
    Load,
    Store,
    Jump,
    Branch,
}

impl FromStr for Class {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "alu" => Ok(Class::Alu),
            "load" => Ok(Class::Load),
            "store" => Ok(Class::Store),
            "jump" => Ok(Class::Jump),
            "branch" => Ok(Class::Branch),
            other => Err(format!("unknown instruction class `{other}`")),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bug {
    /// Decode never forwards; it reads the register file only.
    NoBypass,
    /// The youngest forwarding multiplexer has its inputs swapped.
    WrongMuxPolarity,
    /// A taken branch jumps relative to the address of the instruction one
    /// stage ahead instead of its own.
    StalePcOnBranch,
}

impl Bug {
    pub const ALL: [Bug; 3] = [Bug::NoBypass, Bug::WrongMuxPolarity, Bug::StalePcOnBranch];
}

impl fmt::Display for Bug {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bug::NoBypass => "no-bypass",
            Bug::WrongMuxPolarity => "wrong-mux-polarity",
            Bug::StalePcOnBranch => "stale-pc-on-branch",
        })
    }
}

impl FromStr for Bug {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "no-bypass" => Ok(Bug::NoBypass),
            "wrong-mux-polarity" => Ok(Bug::WrongMuxPolarity),
            "stale-pc-on-branch" => Ok(Bug::StalePcOnBranch),
            other => Err(format!("unknown bug `{other}`")),
        }
    }
}

/// How data memory is modeled.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemoryModel {
    /// A state term updated by `f_u` and read by `f_r`; compared as a term.
    Abstract,
    /// A write history read through nested `ite`s, like the register file;
    /// compared by a read at `m_obs`.
    NestedIte,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub stages: usize,
    pub classes: Vec<Class>,
    pub bypass: bool,
    /// Load-use interlock (five stages only).
    pub interlock: bool,
    pub bug: Option<Bug>,
    pub memory: MemoryModel,
}

impl PipelineSpec {
    pub fn new(stages: usize, classes: &[Class]) -> Self {
        let mut classes = classes.to_vec();
        classes.sort();
        classes.dedup();
        PipelineSpec {
            stages,
            classes,
            bypass: true,
            interlock: true,
            bug: None,
            memory: MemoryModel::Abstract,
        }
    }

    pub fn with_bug(mut self, bug: Bug) -> Self {
        self.bug = Some(bug);
        self
    }

    pub fn has(&self, c: Class) -> bool {
        self.classes.contains(&c)
    }

    fn uses_memory(&self) -> bool {
        self.has(Class::Load) || self.has(Class::Store)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages != 3 && self.stages != 5 {
            return Err(Error::UnsupportedSpec(format!(
                "{} stages; only 3 and 5 are modeled",
                self.stages
            )));
        }
        if self.classes.is_empty() {
            return Err(Error::UnsupportedSpec("no instruction class enabled".into()));
        }
        if self.bug == Some(Bug::StalePcOnBranch) && !self.has(Class::Branch) {
            return Err(Error::UnsupportedSpec(
                "stale-pc-on-branch needs the branch class".into(),
            ));
        }
        Ok(())
    }

    fn forwarding(&self) -> bool {
        self.bypass && self.bug != Some(Bug::NoBypass)
    }

    fn flush_steps(&self) -> usize {
        if self.stages == 3 {
            2
        } else {
            5
        }
    }
}

// Constructors that fold constants; the store's own constructors keep every
// node as written.
fn is_true(s: &Store, n: NodeId) -> bool {
    matches!(s.node(n), Node::True)
}

fn is_false(s: &Store, n: NodeId) -> bool {
    matches!(s.node(n), Node::False)
}

fn and(s: &mut Store, a: NodeId, b: NodeId) -> NodeId {
    if is_false(s, a) || is_true(s, b) {
        a
    } else if is_false(s, b) || is_true(s, a) || a == b {
        b
    } else {
        s.and(a, b)
    }
}

fn or(s: &mut Store, a: NodeId, b: NodeId) -> NodeId {
    if is_true(s, a) || is_false(s, b) {
        a
    } else if is_true(s, b) || is_false(s, a) || a == b {
        b
    } else {
        s.or(a, b)
    }
}

fn not(s: &mut Store, a: NodeId) -> NodeId {
    match *s.node(a) {
        Node::True => s.ff(),
        Node::False => s.tt(),
        Node::Not(x) => x,
        _ => s.not(a),
    }
}

fn ite(s: &mut Store, c: NodeId, t: NodeId, e: NodeId) -> NodeId {
    if is_true(s, c) || t == e {
        t
    } else if is_false(s, c) {
        e
    } else {
        s.ite(c, t, e)
    }
}

/// Write history over an initial state function.
#[derive(Clone, Debug)]
pub struct RegisterFile {
    pub init: String,
    /// Oldest first: address, data, enable (absent means always).
    pub writes: Vec<(NodeId, NodeId, Option<NodeId>)>,
}

impl RegisterFile {
    pub fn new(init: &str) -> Self {
        RegisterFile {
            init: init.to_string(),
            writes: Vec::new(),
        }
    }

    pub fn write(&mut self, store: &Store, addr: NodeId, data: NodeId, enable: NodeId) {
        if is_false(store, enable) {
            return;
        }
        let en = (!is_true(store, enable)).then_some(enable);
        self.writes.push((addr, data, en));
    }

    /// Nested `ite` from the newest write down to the initial function.
    /// An unconditional write to the very same address node answers the
    /// read directly.
    pub fn read(&self, store: &mut Store, addr: NodeId) -> NodeId {
        let start = self.writes.iter().rposition(|(a, _, en)| *a == addr && en.is_none());
        let mut acc = match start {
            Some(k) => self.writes[k].1,
            None => store.app(&self.init, &[addr]),
        };
        let from = start.map_or(0, |k| k + 1);
        for &(a, d, en) in &self.writes[from..] {
            let mut c = if a == addr { store.tt() } else { store.eq(addr, a) };
            if let Some(en) = en {
                c = and(store, en, c);
            }
            acc = ite(store, c, d, acc);
        }
        acc
    }
}

#[derive(Clone, Debug)]
enum Memory {
    Abstract(NodeId),
    History(RegisterFile),
}

impl Memory {
    fn initial(store: &mut Store, model: MemoryModel) -> Self {
        match model {
            MemoryModel::Abstract => Memory::Abstract(store.var("s0")),
            MemoryModel::NestedIte => Memory::History(RegisterFile::new("m_init")),
        }
    }

    fn read(&self, store: &mut Store, addr: NodeId) -> NodeId {
        match self {
            Memory::Abstract(m) => store.app("f_r", &[*m, addr]),
            Memory::History(h) => h.read(store, addr),
        }
    }

    fn write(&mut self, store: &mut Store, enable: NodeId, addr: NodeId, data: NodeId) {
        match self {
            Memory::Abstract(m) => {
                if is_false(store, enable) {
                    return;
                }
                let updated = store.app("f_u", &[*m, addr, data]);
                *m = ite(store, enable, updated, *m);
            }
            Memory::History(h) => h.write(store, addr, data, enable),
        }
    }
}

/// Fields of the instruction at one address. Class flags are exclusive:
/// jump, then branch, store, load, with ALU as the fallback; disabled classes
/// are constantly false.
#[derive(Copy, Clone, Debug)]
struct Decoded {
    src1: NodeId,
    src2: NodeId,
    dest: NodeId,
    imm: NodeId,
    op: NodeId,
    is_load: NodeId,
    is_store: NodeId,
    is_branch: NodeId,
    is_jump: NodeId,
    writes: NodeId,
}

struct Builder<'a> {
    store: &'a mut Store,
    spec: &'a PipelineSpec,
}

impl Builder<'_> {
    fn declare(&mut self) -> Result<()> {
        let s = &mut *self.store;
        for f in [
            "src1",
            "src2",
            "dest",
            "imm",
            "inc",
            "br_target",
            "jmp_target",
            "f_I",
            "m_init",
        ] {
            s.declare(f, SymbolKind::Function, &[Sort::Term])?;
        }
        for p in ["aluop", "is_load", "is_store", "is_branch", "is_jump"] {
            s.declare(p, SymbolKind::Predicate, &[Sort::Term])?;
        }
        s.declare("alu", SymbolKind::Function, &[Sort::Formula, Sort::Term, Sort::Term])?;
        s.declare("addr", SymbolKind::Function, &[Sort::Term, Sort::Term])?;
        s.declare("taken", SymbolKind::Predicate, &[Sort::Term, Sort::Term])?;
        s.declare("f_r", SymbolKind::Function, &[Sort::Term, Sort::Term])?;
        s.declare("f_u", SymbolKind::Function, &[Sort::Term, Sort::Term, Sort::Term])?;
        Ok(())
    }

    fn pred(&mut self, name: &str, arg: NodeId) -> NodeId {
        let p = self.store.symbol_id(name).expect("declared");
        self.store.apply(p, &[arg])
    }

    fn decode(&mut self, pc: NodeId) -> Decoded {
        let spec = self.spec;
        let src1 = self.store.app("src1", &[pc]);
        let src2 = self.store.app("src2", &[pc]);
        let dest = self.store.app("dest", &[pc]);
        let imm = if spec.uses_memory() {
            self.store.app("imm", &[pc])
        } else {
            pc
        };
        let op = if spec.has(Class::Alu) {
            self.pred("aluop", pc)
        } else {
            self.store.ff()
        };
        let order = [
            (Class::Jump, "is_jump"),
            (Class::Branch, "is_branch"),
            (Class::Store, "is_store"),
            (Class::Load, "is_load"),
        ];
        let enabled: Vec<(Class, &str)> = order.iter().copied().filter(|(c, _)| spec.has(*c)).collect();
        let fallback_alu = spec.has(Class::Alu);
        let mut none_before = self.store.tt();
        let flag = |b: &mut Self, c: Class| -> NodeId {
            let Some(pos) = enabled.iter().position(|(k, _)| *k == c) else {
                return b.store.ff();
            };
            let last = pos + 1 == enabled.len() && !fallback_alu;
            let mut before = b.store.tt();
            for (_, name) in &enabled[..pos] {
                let p = b.pred(name, pc);
                let np = not(b.store, p);
                before = and(b.store, before, np);
            }
            if last {
                return before;
            }
            let own = b.pred(enabled[pos].1, pc);
            and(b.store, before, own)
        };
        let is_jump = flag(self, Class::Jump);
        let is_branch = flag(self, Class::Branch);
        let is_store = flag(self, Class::Store);
        let is_load = flag(self, Class::Load);
        for (_, name) in &enabled {
            let p = self.pred(name, pc);
            let np = not(self.store, p);
            none_before = and(self.store, none_before, np);
        }
        let is_alu = if fallback_alu { none_before } else { self.store.ff() };
        let writes = or(self.store, is_alu, is_load);
        Decoded {
            src1,
            src2,
            dest,
            imm,
            op,
            is_load,
            is_store,
            is_branch,
            is_jump,
            writes,
        }
    }

    fn alu(&mut self, op: NodeId, a: NodeId, b: NodeId) -> NodeId {
        let f = self.store.symbol_id("alu").expect("declared");
        self.store.apply(f, &[op, a, b])
    }

    /// Register write value: memory read for loads, ALU result otherwise.
    fn value(&mut self, is_load: NodeId, load: Option<NodeId>, alu: NodeId) -> NodeId {
        match load {
            Some(l) if self.spec.has(Class::Alu) => ite(self.store, is_load, l, alu),
            Some(l) => l,
            None => alu,
        }
    }

    fn address(&mut self, a: NodeId, imm: NodeId) -> NodeId {
        self.store.app("addr", &[a, imm])
    }

    /// Next instruction address after the instruction at `pc`; `branch_base`
    /// is the address a taken branch is relative to.
    fn next_pc(&mut self, pc: NodeId, branch_base: NodeId, d: &Decoded, a: NodeId, b: NodeId) -> NodeId {
        let mut next = self.store.app("inc", &[pc]);
        if self.spec.has(Class::Branch) {
            let t = self.store.symbol_id("taken").expect("declared");
            let taken = self.store.apply(t, &[a, b]);
            let c = and(self.store, d.is_branch, taken);
            let target = self.store.app("br_target", &[branch_base]);
            next = ite(self.store, c, target, next);
        }
        if self.spec.has(Class::Jump) {
            let target = self.store.app("jmp_target", &[pc]);
            next = ite(self.store, d.is_jump, target, next);
        }
        next
    }

    /// One reference step, applied when `enable` holds.
    fn isa_step(&mut self, st: &mut Arch, enable: NodeId) {
        let d = self.decode(st.pc);
        let a = st.rf.read(self.store, d.src1);
        let b = st.rf.read(self.store, d.src2);
        let alu_v = self.alu(d.op, a, b);
        let addr = self.spec.uses_memory().then(|| self.address(a, d.imm));
        let load = match addr {
            Some(ad) if self.spec.has(Class::Load) => Some(st.mem.read(self.store, ad)),
            _ => None,
        };
        let v = self.value(d.is_load, load, alu_v);
        let we = and(self.store, enable, d.writes);
        st.rf.write(self.store, d.dest, v, we);
        if let Some(ad) = addr {
            let se = and(self.store, enable, d.is_store);
            st.mem.write(self.store, se, ad, b);
        }
        let next = self.next_pc(st.pc, st.pc, &d, a, b);
        st.pc = ite(self.store, enable, next, st.pc);
    }

    /// Operand through the forwarding sources, youngest first.
    fn forward(&mut self, sources: &[(NodeId, NodeId, NodeId)], reg: NodeId, from_file: NodeId) -> NodeId {
        if !self.spec.forwarding() {
            return from_file;
        }
        let mut acc = from_file;
        for (k, &(valid, dest, value)) in sources.iter().enumerate().rev() {
            let hit = self.store.eq(dest, reg);
            let c = and(self.store, valid, hit);
            acc = if k == 0 && self.spec.bug == Some(Bug::WrongMuxPolarity) {
                ite(self.store, c, acc, value)
            } else {
                ite(self.store, c, value, acc)
            };
        }
        acc
    }
}

/// Architectural state.
#[derive(Clone, Debug)]
struct Arch {
    pc: NodeId,
    rf: RegisterFile,
    mem: Memory,
}

/// Latch between fetch/decode and execute, or decode and execute.
#[derive(Clone, Copy, Debug)]
struct DecodedLatch {
    valid: NodeId,
    writes: NodeId,
    is_load: NodeId,
    is_store: NodeId,
    op: NodeId,
    pc: NodeId,
    dest: NodeId,
    a: NodeId,
    b: NodeId,
    imm: NodeId,
}

impl DecodedLatch {
    fn symbolic(b: &mut Builder, tag: &str) -> Self {
        let spec = b.spec;
        let s = &mut *b.store;
        let flag = |s: &mut Store, on: bool, name: &str| if on { s.prop(&format!("{tag}_{name}")) } else { s.ff() };
        DecodedLatch {
            valid: s.prop(&format!("{tag}_valid")),
            writes: flag(s, spec.has(Class::Alu) || spec.has(Class::Load), "writes"),
            is_load: flag(s, spec.has(Class::Load), "load"),
            is_store: flag(s, spec.has(Class::Store), "store"),
            op: flag(s, spec.has(Class::Alu), "op"),
            pc: s.var(&format!("{tag}_pc")),
            dest: s.var(&format!("{tag}_dest")),
            a: s.var(&format!("{tag}_a")),
            b: s.var(&format!("{tag}_b")),
            imm: if spec.uses_memory() {
                s.var(&format!("{tag}_imm"))
            } else {
                s.var(&format!("{tag}_pc"))
            },
        }
    }
}

/// Result latch: a register write in flight.
#[derive(Clone, Copy, Debug)]
struct WriteLatch {
    valid: NodeId,
    dest: NodeId,
    value: NodeId,
}

impl WriteLatch {
    fn symbolic(s: &mut Store, tag: &str) -> Self {
        WriteLatch {
            valid: s.prop(&format!("{tag}_valid")),
            dest: s.var(&format!("{tag}_dest")),
            value: s.var(&format!("{tag}_value")),
        }
    }
}

#[derive(Clone, Debug)]
struct Three {
    arch: Arch,
    fe: DecodedLatch,
    ew: WriteLatch,
}

/// Latch between execute and memory.
#[derive(Clone, Copy, Debug)]
struct MemLatch {
    writes: NodeId,
    store_en: NodeId,
    is_load: NodeId,
    dest: NodeId,
    alu: NodeId,
    addr: NodeId,
    data: NodeId,
}

#[derive(Clone, Debug)]
struct Five {
    arch: Arch,
    fd_valid: NodeId,
    fd_pc: NodeId,
    de: DecodedLatch,
    em: MemLatch,
    mw: WriteLatch,
}

impl Builder<'_> {
    fn three_initial(&mut self) -> Three {
        let mem = Memory::initial(self.store, self.spec.memory);
        let pc = self.store.var("pc");
        let fe = DecodedLatch::symbolic(self, "fe");
        let ew = WriteLatch::symbolic(self.store, "ew");
        Three {
            arch: Arch {
                pc,
                rf: RegisterFile::new("f_I"),
                mem,
            },
            fe,
            ew,
        }
    }

    /// Returns the next state and whether an instruction was fetched.
    fn three_step(&mut self, st: &Three, fetch: bool) -> (Three, NodeId) {
        let mut arch = st.arch.clone();
        let fe = st.fe;
        // write-back
        arch.rf.write(self.store, st.ew.dest, st.ew.value, st.ew.valid);
        // execute
        let alu_v = self.alu(fe.op, fe.a, fe.b);
        let addr = self.spec.uses_memory().then(|| self.address(fe.a, fe.imm));
        let load = match addr {
            Some(ad) if self.spec.has(Class::Load) => Some(st.arch.mem.read(self.store, ad)),
            _ => None,
        };
        let value = self.value(fe.is_load, load, alu_v);
        if let Some(ad) = addr {
            let se = and(self.store, fe.valid, fe.is_store);
            arch.mem.write(self.store, se, ad, fe.b);
        }
        let ew_valid = and(self.store, fe.valid, fe.writes);
        let ew = WriteLatch {
            valid: ew_valid,
            dest: fe.dest,
            value,
        };
        // fetch and decode
        if !fetch {
            let mut next = st.clone();
            next.arch = arch;
            next.ew = ew;
            next.fe.valid = self.store.ff();
            return (next, self.store.ff());
        }
        let pc = st.arch.pc;
        let d = self.decode(pc);
        let sources = [(ew_valid, fe.dest, value)];
        let file1 = arch.rf.read(self.store, d.src1);
        let a = self.forward(&sources, d.src1, file1);
        let file2 = arch.rf.read(self.store, d.src2);
        let b = self.forward(&sources, d.src2, file2);
        let base = if self.spec.bug == Some(Bug::StalePcOnBranch) {
            fe.pc
        } else {
            pc
        };
        arch.pc = self.next_pc(pc, base, &d, a, b);
        let fe_next = DecodedLatch {
            valid: self.store.tt(),
            writes: d.writes,
            is_load: d.is_load,
            is_store: d.is_store,
            op: d.op,
            pc,
            dest: d.dest,
            a,
            b,
            imm: d.imm,
        };
        (Three { arch, fe: fe_next, ew }, self.store.tt())
    }

    fn five_initial(&mut self) -> Five {
        let mem = Memory::initial(self.store, self.spec.memory);
        let pc = self.store.var("pc");
        let fd_valid = self.store.prop("fd_valid");
        let fd_pc = self.store.var("fd_pc");
        let de = DecodedLatch::symbolic(self, "de");
        let s = &mut *self.store;
        let flag = |s: &mut Store, on: bool, name: &str| if on { s.prop(name) } else { s.ff() };
        let em = MemLatch {
            writes: flag(s, self.spec.has(Class::Alu) || self.spec.has(Class::Load), "em_writes"),
            store_en: flag(s, self.spec.has(Class::Store), "em_store"),
            is_load: flag(s, self.spec.has(Class::Load), "em_load"),
            dest: s.var("em_dest"),
            alu: s.var("em_alu"),
            addr: s.var("em_addr"),
            data: s.var("em_data"),
        };
        let mw = WriteLatch::symbolic(self.store, "mw");
        Five {
            arch: Arch {
                pc,
                rf: RegisterFile::new("f_I"),
                mem,
            },
            fd_valid,
            fd_pc,
            de,
            em,
            mw,
        }
    }

    fn five_step(&mut self, st: &Five, fetch: bool) -> (Five, NodeId) {
        let mut arch = st.arch.clone();
        let (de, em) = (st.de, st.em);
        // write-back
        arch.rf.write(self.store, st.mw.dest, st.mw.value, st.mw.valid);
        // memory
        let load = self
            .spec
            .has(Class::Load)
            .then(|| st.arch.mem.read(self.store, em.addr));
        let mem_value = match load {
            Some(l) => ite(self.store, em.is_load, l, em.alu),
            None => em.alu,
        };
        if self.spec.uses_memory() {
            arch.mem.write(self.store, em.store_en, em.addr, em.data);
        }
        let mw = WriteLatch {
            valid: em.writes,
            dest: em.dest,
            value: mem_value,
        };
        // execute
        let alu_v = self.alu(de.op, de.a, de.b);
        let ex_writes = and(self.store, de.valid, de.writes);
        let em_next = MemLatch {
            writes: ex_writes,
            store_en: and(self.store, de.valid, de.is_store),
            is_load: de.is_load,
            dest: de.dest,
            alu: alu_v,
            addr: if self.spec.uses_memory() {
                self.address(de.a, de.imm)
            } else {
                em.addr
            },
            data: de.b,
        };
        // decode
        let d = self.decode(st.fd_pc);
        let id_valid = st.fd_valid;
        let stall = if self.spec.interlock && self.spec.has(Class::Load) {
            let ld = and(self.store, ex_writes, de.is_load);
            let h1 = self.store.eq(de.dest, d.src1);
            let h2 = self.store.eq(de.dest, d.src2);
            let hit = or(self.store, h1, h2);
            let c = and(self.store, ld, hit);
            and(self.store, id_valid, c)
        } else {
            self.store.ff()
        };
        // Forwarding from execute is never needed for a load: the interlock
        // keeps decode waiting. Without the interlock the ALU result is
        // forwarded even for loads, which is wrong.
        let ex_fwd = match self.spec.interlock && self.spec.has(Class::Load) {
            true => {
                let nl = not(self.store, de.is_load);
                and(self.store, ex_writes, nl)
            }
            false => ex_writes,
        };
        let sources = [(ex_fwd, de.dest, alu_v), (em.writes, em.dest, mem_value)];
        let file1 = arch.rf.read(self.store, d.src1);
        let a = self.forward(&sources, d.src1, file1);
        let file2 = arch.rf.read(self.store, d.src2);
        let b = self.forward(&sources, d.src2, file2);
        let control_kind = or(self.store, d.is_branch, d.is_jump);
        let control = and(self.store, id_valid, control_kind);
        let base = if self.spec.bug == Some(Bug::StalePcOnBranch) {
            de.pc
        } else {
            st.fd_pc
        };
        let resolved = self.next_pc(st.fd_pc, base, &d, a, b);
        let go = not(self.store, stall);
        let de_valid = and(self.store, id_valid, go);
        let de_next = DecodedLatch {
            valid: de_valid,
            writes: d.writes,
            is_load: d.is_load,
            is_store: d.is_store,
            op: d.op,
            pc: st.fd_pc,
            dest: d.dest,
            a,
            b,
            imm: d.imm,
        };
        // fetch
        let hold = or(self.store, stall, control);
        let fetched = if fetch { not(self.store, hold) } else { self.store.ff() };
        let kept = and(self.store, stall, id_valid);
        let fd_valid = or(self.store, kept, fetched);
        let fd_pc = ite(self.store, stall, st.fd_pc, st.arch.pc);
        let inc = self.store.app("inc", &[st.arch.pc]);
        let sequential = ite(self.store, fetched, inc, st.arch.pc);
        let redirect = and(self.store, control, go);
        arch.pc = ite(self.store, redirect, resolved, sequential);
        (
            Five {
                arch,
                fd_valid,
                fd_pc,
                de: de_next,
                em: em_next,
                mw,
            },
            fetched,
        )
    }
}

/// Builds the correctness formula for `n` implementation steps.
pub fn correctness_formula(store: &mut Store, spec: &PipelineSpec, n: usize) -> Result<NodeId> {
    spec.validate()?;
    let mut b = Builder { store, spec };
    b.declare()?;
    let (impl_arch, flushed, fetched) = if spec.stages == 3 {
        let init = b.three_initial();
        let mut st = init.clone();
        let mut fetched = Vec::new();
        for _ in 0..n {
            let (next, f) = b.three_step(&st, true);
            st = next;
            fetched.push(f);
        }
        for _ in 0..spec.flush_steps() {
            st = b.three_step(&st, false).0;
        }
        let mut fl = init;
        for _ in 0..spec.flush_steps() {
            fl = b.three_step(&fl, false).0;
        }
        (st.arch, fl.arch, fetched)
    } else {
        let init = b.five_initial();
        let mut st = init.clone();
        let mut fetched = Vec::new();
        for _ in 0..n {
            let (next, f) = b.five_step(&st, true);
            st = next;
            fetched.push(f);
        }
        for _ in 0..spec.flush_steps() {
            st = b.five_step(&st, false).0;
        }
        let mut fl = init;
        for _ in 0..spec.flush_steps() {
            fl = b.five_step(&fl, false).0;
        }
        (st.arch, fl.arch, fetched)
    };
    let mut reference = flushed;
    for f in fetched {
        b.isa_step(&mut reference, f);
    }
    let pc_ok = b.store.eq(impl_arch.pc, reference.pc);
    let r = b.store.var("r_obs");
    let ra = impl_arch.rf.read(b.store, r);
    let rb = reference.rf.read(b.store, r);
    let rf_ok = b.store.eq(ra, rb);
    let mut goal = b.store.and(pc_ok, rf_ok);
    if spec.uses_memory() {
        let mem_ok = match (&impl_arch.mem, &reference.mem) {
            (Memory::Abstract(x), Memory::Abstract(y)) => b.store.eq(*x, *y),
            _ => {
                let m = b.store.var("m_obs");
                let x = impl_arch.mem.read(b.store, m);
                let y = reference.mem.read(b.store, m);
                b.store.eq(x, y)
            }
        };
        goal = b.store.and(goal, mem_ok);
    }
    Ok(goal)
}

/// Symbols standing for data values or instruction addresses. None of them is
/// ever compared negatively, so all of them must classify as p-functions.
pub fn data_symbols(spec: &PipelineSpec) -> Vec<&'static str> {
    let mut out = vec!["pc", "inc"];
    if spec.has(Class::Alu) {
        out.push("alu");
    }
    if spec.has(Class::Alu) || spec.has(Class::Load) {
        out.push("f_I");
    }
    if spec.has(Class::Branch) {
        out.push("br_target");
    }
    if spec.has(Class::Jump) {
        out.push("jmp_target");
    }
    if spec.uses_memory() && spec.memory == MemoryModel::Abstract {
        out.extend(["imm", "addr", "f_u", "s0"]);
    }
    out
}

/// Builds the formula in a fresh store and returns it with its source text.
pub fn generate(spec: &PipelineSpec, n: usize) -> Result<(Store, NodeId, String)> {
    let mut store = Store::new();
    let root = correctness_formula(&mut store, spec, n)?;
    let text = store.to_source(root);
    Ok((store, root, text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decide::{decide_text, DecideOptions, Decision, Method};
    use crate::oracle::Verdict;
    use crate::parse::parse;

    /// Decisions by every method; the oracle is skipped when the formula is
    /// beyond its size guard.
    fn decide_all(spec: &PipelineSpec, n: usize) -> Vec<Decision> {
        let (_, _, text) = generate(spec, n).unwrap();
        let mut out = Vec::new();
        for m in Method::ALL {
            match decide_text(&text, m, DecideOptions::default()) {
                Ok((_, _, d)) => out.push(d),
                Err(Error::SizeGuard { .. }) if m == Method::Oracle => {}
                Err(e) => panic!("{m}: {e}"),
            }
        }
        out
    }

    #[test]
    fn three_stage_alu_single_step_is_correct() {
        let all = decide_all(&PipelineSpec::new(3, &[Class::Alu]), 1);
        assert_eq!(all.len(), 3);
        for d in all {
            assert_eq!(d.verdict, Verdict::Valid, "{}", d.method);
        }
    }

    #[test]
    fn injected_bugs_are_caught_with_confirmed_countermodels() {
        for bug in Bug::ALL {
            let spec = PipelineSpec::new(3, &[Class::Alu, Class::Branch]).with_bug(bug);
            for d in decide_all(&spec, 2) {
                assert_eq!(d.verdict, Verdict::Invalid, "{bug} {}", d.method);
                if d.method != Method::Oracle {
                    assert!(d.countermodel.as_ref().unwrap().confirmed, "{bug} {}", d.method);
                }
            }
        }
    }

    #[test]
    fn missing_bypass_shows_a_read_after_write_hazard() {
        let spec = PipelineSpec::new(3, &[Class::Alu]).with_bug(Bug::NoBypass);
        let (mut s, root, _) = generate(&spec, 1).unwrap();
        let d = crate::decide::decide(&mut s, root, Method::Pairwise, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Invalid);
        let cm = d.countermodel.unwrap();
        assert!(cm.confirmed);
        let interp = &cm.interpretation;
        let val = |s: &mut Store, text: &str| {
            let n = parse(s, &format!("(= {text} {text})")).unwrap();
            let Node::Eq([t, _]) = *s.node(n) else { unreachable!() };
            crate::interp::evaluate(s, t, interp).unwrap()
        };
        let dest = val(&mut s, "fe_dest");
        let sources = [val(&mut s, "(src1 pc)"), val(&mut s, "(src2 pc)")];
        assert!(sources.contains(&dest), "{dest:?} vs {sources:?}");
        // The falsifying partition, checked by the enumerator on its own.
        let blocks = crate::interp::term_partition(&s, root, interp).unwrap();
        let check = crate::oracle::check_partition(&s, root, &blocks).unwrap();
        assert!(check.consistent > 0 && check.falsified > 0, "{check:?}");
    }

    #[test]
    fn five_stage_full_isa_is_correct() {
        let all = [Class::Alu, Class::Load, Class::Store, Class::Branch, Class::Jump];
        let (mut s, root, _) = generate(&PipelineSpec::new(5, &all), 1).unwrap();
        let d = crate::decide::decide(&mut s, root, Method::Bitvec, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Valid);
        for bug in Bug::ALL {
            let spec = PipelineSpec::new(5, &[Class::Alu, Class::Branch]).with_bug(bug);
            let (mut s, root, _) = generate(&spec, 1).unwrap();
            let d = crate::decide::decide(&mut s, root, Method::Bitvec, DecideOptions::default()).unwrap();
            assert_eq!(d.verdict, Verdict::Invalid, "{bug}");
            assert!(d.countermodel.unwrap().confirmed, "{bug}");
        }
    }

    #[test]
    fn load_use_needs_the_interlock() {
        let mut spec = PipelineSpec::new(5, &[Class::Alu, Class::Load]);
        let (mut s, root, _) = generate(&spec, 1).unwrap();
        let d = crate::decide::decide(&mut s, root, Method::Bitvec, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Valid);
        spec.interlock = false;
        let (mut s, root, _) = generate(&spec, 1).unwrap();
        let d = crate::decide::decide(&mut s, root, Method::Bitvec, DecideOptions::default()).unwrap();
        assert_eq!(d.verdict, Verdict::Invalid);
    }

    #[test]
    fn nested_ite_memory_keeps_validity() {
        let mut spec = PipelineSpec::new(3, &[Class::Load, Class::Store]);
        for memory in [MemoryModel::Abstract, MemoryModel::NestedIte] {
            spec.memory = memory;
            for d in decide_all(&spec, 1) {
                assert_eq!(d.verdict, Verdict::Valid, "{memory:?} {}", d.method);
            }
        }
    }

    #[test]
    fn register_ids_are_general() {
        let (mut s, root, _) = generate(&PipelineSpec::new(3, &[Class::Alu]), 1).unwrap();
        let nnf = crate::polarity::to_nnf(&mut s, root);
        let report = crate::polarity::classify(&s, nnf).unwrap();
        for name in ["src1", "src2", "dest", "fe_dest", "r_obs"] {
            assert!(report.is_g(s.symbol_id(name).unwrap()), "{name}");
        }
    }

    #[test]
    fn data_symbols_stay_positive() {
        let mut spec = PipelineSpec::new(3, &[Class::Alu, Class::Load, Class::Store, Class::Branch]);
        for memory in [MemoryModel::Abstract, MemoryModel::NestedIte] {
            spec.memory = memory;
            let (mut s, root, _) = generate(&spec, 1).unwrap();
            let nnf = crate::polarity::to_nnf(&mut s, root);
            let report = crate::polarity::classify(&s, nnf).unwrap();
            for name in data_symbols(&spec) {
                let id = s.symbol_id(name).unwrap();
                assert!(!report.is_g(id), "{name} in F_g");
            }
        }
    }

    #[test]
    fn empty_history_reads_initial_function() {
        let mut s = Store::new();
        let a = s.var("a");
        let rf = RegisterFile::new("f_I");
        let r = rf.read(&mut s, a);
        assert_eq!(s.display(r), "(f_I a)");
    }

    #[test]
    fn read_after_write_to_same_address_folds() {
        let mut s = Store::new();
        let a = s.var("a");
        let d = s.var("d");
        let t = s.tt();
        let mut rf = RegisterFile::new("f_I");
        rf.write(&s, a, d, t);
        assert_eq!(rf.read(&mut s, a), d);
    }

    #[test]
    fn two_writes_nest() {
        let mut s = Store::new();
        let (a1, d1, a2, d2, r) = (s.var("a1"), s.var("d1"), s.var("a2"), s.var("d2"), s.var("r"));
        let t = s.tt();
        let mut rf = RegisterFile::new("f_I");
        rf.write(&s, a1, d1, t);
        rf.write(&s, a2, d2, t);
        let got = rf.read(&mut s, r);
        let want = parse(&mut s, "(= r (ite (= r a2) d2 (ite (= r a1) d1 (f_I r))))").unwrap();
        assert_eq!(*s.node(want), Node::Eq([r, got]));
    }

    #[test]
    fn abstract_memory_reads() {
        let mut s = Store::new();
        s.declare("f_r", SymbolKind::Function, &[Sort::Term, Sort::Term])
            .unwrap();
        s.declare("f_u", SymbolKind::Function, &[Sort::Term, Sort::Term, Sort::Term])
            .unwrap();
        let mut m = Memory::initial(&mut s, MemoryModel::Abstract);
        let (a, b, d) = (s.var("a"), s.var("b"), s.var("d"));
        let r1 = m.read(&mut s, a);
        let r2 = m.read(&mut s, a);
        assert_eq!(r1, r2);
        let t = s.tt();
        m.write(&mut s, t, b, d);
        let r3 = m.read(&mut s, a);
        assert_ne!(r1, r3);
        let m2 = {
            let mut m = Memory::initial(&mut s, MemoryModel::Abstract);
            m.write(&mut s, t, a, d);
            m
        };
        let r4 = m2.read(&mut s, a);
        assert_eq!(s.display(r4), "(f_r (f_u s0 a d) a)");
    }

    #[test]
    fn zero_steps_compare_identical_terms() {
        let (s, root, _) = generate(&PipelineSpec::new(3, &[Class::Alu]), 0).unwrap();
        let Node::And([pc, rf]) = *s.node(root) else {
            panic!("expected a conjunction")
        };
        for eq in [pc, rf] {
            let Node::Eq([l, r]) = *s.node(eq) else {
                panic!("expected an equation")
            };
            assert_eq!(l, r);
        }
    }

    #[test]
    fn stale_pc_needs_branches() {
        let spec = PipelineSpec::new(3, &[Class::Alu]).with_bug(Bug::StalePcOnBranch);
        assert!(matches!(generate(&spec, 1), Err(Error::UnsupportedSpec(_))));
        assert!(matches!(
            generate(&PipelineSpec::new(4, &[Class::Alu]), 1),
            Err(Error::UnsupportedSpec(_))
        ));
    }
}
