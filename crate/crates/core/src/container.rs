//! Binary snapshot container. The byte layout is specified in
//! `docs/container.md`; every number is little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{GrfError, Result};
use crate::field::{MetricField, PolyformField, ScalarField, SymTensorField};
use crate::flow::{FlowTrajectory, GeomState};
use crate::forms::{n_components, Convention};
use crate::linalg::Mat3;
use crate::mesh::MeshSpec;

pub const MAGIC: &[u8; 8] = b"GRFSNAP1";
pub const VERSION: u32 = 1;

const KIND_STATE: u32 = 1;
const KIND_DENSITY: u32 = 2;
const KIND_SCALAR: u32 = 3;

/// One field block of a container.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    /// Full geometric state `(g, H, f)`.
    State(GeomState),
    /// Density against `e^{-f}dV` at time `t`.
    Density { t: f64, rho: ScalarField },
    /// Named scalar field, e.g. a potential.
    Scalar { t: f64, name: String, values: ScalarField },
}

impl Block {
    pub fn t(&self) -> f64 {
        match self {
            Block::State(s) => s.t,
            Block::Density { t, .. } | Block::Scalar { t, .. } => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub mesh: MeshSpec,
    pub convention: Convention,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub blocks: Vec<Block>,
}

impl Container {
    pub fn new(mesh: MeshSpec, convention: Convention, dt: f64, t_start: f64, t_end: f64) -> Self {
        Container { mesh, convention, dt, t_start, t_end, blocks: vec![] }
    }

    pub fn from_trajectory(traj: &FlowTrajectory) -> Self {
        let mesh = *traj.snapshot(0).mesh();
        let mut c = Container::new(mesh, traj.convention(), traj.dt(), traj.t_start(), traj.t_end());
        c.blocks = traj.snapshots().iter().cloned().map(Block::State).collect();
        c
    }

    /// State blocks in file order as a trajectory.
    pub fn trajectory(&self) -> Result<FlowTrajectory> {
        let snaps: Vec<GeomState> = self
            .blocks
            .iter()
            .filter_map(|b| match b {
                Block::State(s) => Some(s.clone()),
                _ => None,
            })
            .collect();
        FlowTrajectory::from_snapshots(self.convention, self.dt, snaps)
    }

    pub fn push(&mut self, block: Block) -> Result<()> {
        let mesh = match &block {
            Block::State(s) => s.mesh(),
            Block::Density { rho, .. } => rho.mesh(),
            Block::Scalar { values, .. } => values.mesh(),
        };
        self.mesh.check_same(mesh)?;
        self.blocks.push(block);
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let d = self.mesh.dim();
        w.write_all(MAGIC)?;
        put_u32(w, VERSION)?;
        put_u32(w, d as u32)?;
        put_u32(w, self.mesh.n() as u32)?;
        for a in 0..d {
            put_f64(w, self.mesh.lengths()[a])?;
        }
        put_str(w, self.convention.tag())?;
        put_f64(w, self.dt)?;
        put_f64(w, self.t_start)?;
        put_f64(w, self.t_end)?;
        put_u32(w, self.blocks.len() as u32)?;
        for b in &self.blocks {
            match b {
                Block::State(s) => {
                    put_u32(w, KIND_STATE)?;
                    put_f64(w, s.t)?;
                    for m in s.g.tensor().nodes() {
                        for a in 0..d {
                            for c in a..d {
                                put_f64(w, m[a][c])?;
                            }
                        }
                    }
                    put_f64s(w, s.f.values())?;
                    let degs = s.h.degrees();
                    put_u32(w, degs.len() as u32)?;
                    for k in degs {
                        let nc = n_components(d, k);
                        put_u32(w, k as u32)?;
                        put_u32(w, nc as u32)?;
                        for comp in s.h.degree(k).expect("present degree") {
                            for v in comp.iter().take(nc) {
                                put_f64(w, *v)?;
                            }
                        }
                    }
                }
                Block::Density { t, rho } => {
                    put_u32(w, KIND_DENSITY)?;
                    put_f64(w, *t)?;
                    put_f64s(w, rho.values())?;
                }
                Block::Scalar { t, name, values } => {
                    put_u32(w, KIND_SCALAR)?;
                    put_f64(w, *t)?;
                    put_str(w, name)?;
                    put_f64s(w, values.values())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(GrfError::Format("bad magic".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION {
            return Err(GrfError::Format(format!("unsupported version {version}")));
        }
        let d = get_u32(r)? as usize;
        let n = get_u32(r)? as usize;
        if !(1..=3).contains(&d) {
            return Err(GrfError::Format(format!("dimension {d}")));
        }
        let lengths: Vec<f64> = (0..d).map(|_| get_f64(r)).collect::<Result<_>>()?;
        let mesh = MeshSpec::new(d, n, &lengths)?;
        let tag = get_str(r)?;
        let convention =
            Convention::from_tag(&tag).ok_or_else(|| GrfError::Format(format!("unknown convention '{tag}'")))?;
        let dt = get_f64(r)?;
        let t_start = get_f64(r)?;
        let t_end = get_f64(r)?;
        let count = get_u32(r)? as usize;
        let nodes = mesh.len();
        let mut out = Container::new(mesh, convention, dt, t_start, t_end);
        for _ in 0..count {
            let kind = get_u32(r)?;
            let t = get_f64(r)?;
            let block = match kind {
                KIND_STATE => {
                    let mut ms: Vec<Mat3> = vec![[[0.0; 3]; 3]; nodes];
                    for m in ms.iter_mut() {
                        for a in 0..d {
                            for c in a..d {
                                let v = get_f64(r)?;
                                m[a][c] = v;
                                m[c][a] = v;
                            }
                        }
                    }
                    let g = MetricField::new(SymTensorField::from_nodes(mesh, ms)?)?;
                    let f = ScalarField::from_vec(mesh, get_f64s(r, nodes)?)?;
                    let mut h = PolyformField::zeros(mesh);
                    for _ in 0..get_u32(r)? {
                        let k = get_u32(r)? as usize;
                        let nc = get_u32(r)? as usize;
                        if nc != n_components(d, k) {
                            return Err(GrfError::Format(format!("degree {k} with {nc} components")));
                        }
                        let mut data = vec![[0.0; 3]; nodes];
                        for comp in data.iter_mut() {
                            for v in comp.iter_mut().take(nc) {
                                *v = get_f64(r)?;
                            }
                        }
                        h.set_degree(k, data)?;
                    }
                    Block::State(GeomState::new(t, g, h, f)?)
                }
                KIND_DENSITY => Block::Density { t, rho: ScalarField::from_vec(mesh, get_f64s(r, nodes)?)? },
                KIND_SCALAR => {
                    let name = get_str(r)?;
                    Block::Scalar { t, name, values: ScalarField::from_vec(mesh, get_f64s(r, nodes)?)? }
                }
                other => return Err(GrfError::Format(format!("unknown block kind {other}"))),
            };
            out.blocks.push(block);
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Container::read_from(&mut BufReader::new(File::open(path)?))
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn put_f64s<W: Write>(w: &mut W, vs: &[f64]) -> Result<()> {
    for v in vs {
        put_f64(w, *v)?;
    }
    Ok(())
}

fn put_str<W: Write>(w: &mut W, s: &str) -> Result<()> {
    put_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let len = get_u32(r)? as usize;
    if len > 1 << 16 {
        return Err(GrfError::Format(format!("string length {len}")));
    }
    let mut b = vec![0u8; len];
    r.read_exact(&mut b)?;
    String::from_utf8(b).map_err(|_| GrfError::Format("string is not UTF-8".into()))
}
