//! Mesh data model and its plain-text format.
//!
//! One record per line, `#` starts a comment:
//!
//! ```text
//! node <id> <x> <y> <z>
//! hex  <id> <n1> ... <n8>
//! fix  <node> <dof> <value>      # u = value for all t
//! move <node> <dof> <rate>       # u = rate · t
//! load <node> <dof> <force>      # constant nodal force
//! ```
//!
//! `dof` is `x`, `y`, `z` or `1`, `2`, `3`. Ids are arbitrary integers; nodes
//! must be declared before the records that reference them. A node carrying
//! both `fix` and `move` on the same DOF gets `value + rate · t`.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{DVector, Matrix3, Vector3};

use super::hex8::{EasModes, Hex8EAS, NodalMatrix};
use crate::constitutive::MaterialState;
use crate::{Error, Result};

/// Prescribed displacement `u = value + rate · t` on one DOF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constraint {
    pub node: usize,
    pub dof: usize,
    pub value: f64,
    pub rate: f64,
}

impl Constraint {
    pub fn at(&self, t: f64) -> f64 {
        self.value + self.rate * t
    }

    pub fn global_dof(&self) -> usize {
        3 * self.node + self.dof
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodalLoad {
    pub node: usize,
    pub dof: usize,
    pub force: f64,
}

/// Connectivity and coordinates as read from a file, before elements are built.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MeshSpec {
    pub nodes: Vec<Vector3<f64>>,
    pub node_labels: Vec<i64>,
    pub connectivity: Vec<[usize; 8]>,
    pub element_labels: Vec<i64>,
    pub constraints: Vec<Constraint>,
    pub loads: Vec<NodalLoad>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Vector3<f64>>,
    pub node_labels: Vec<i64>,
    pub element_labels: Vec<i64>,
    pub elements: Vec<Hex8EAS>,
    pub constraints: Vec<Constraint>,
    pub loads: Vec<NodalLoad>,
    /// Committed displacement, `3·node + dof`.
    pub displacement: DVector<f64>,
    pub time: f64,
}

impl Mesh {
    pub fn build(spec: MeshSpec, modes: EasModes, initial: &MaterialState) -> Result<Self> {
        let n = spec.nodes.len();
        for c in &spec.constraints {
            if c.node >= n || c.dof > 2 {
                return Err(Error::Mesh(format!("constraint on missing DOF {}/{}", c.node, c.dof)));
            }
        }
        for l in &spec.loads {
            if l.node >= n || l.dof > 2 {
                return Err(Error::Mesh(format!("load on missing DOF {}/{}", l.node, l.dof)));
            }
        }
        let elements = spec
            .connectivity
            .iter()
            .enumerate()
            .map(|(e, ids)| {
                if let Some(bad) = ids.iter().find(|&&i| i >= n) {
                    return Err(Error::Mesh(format!("element {e} references missing node {bad}")));
                }
                let coords = NodalMatrix::from_fn(|i, a| spec.nodes[ids[a]][i]);
                Hex8EAS::new(e, *ids, coords, modes, initial)
            })
            .collect::<Result<Vec<_>>>()?;
        let node_labels = if spec.node_labels.len() == n {
            spec.node_labels
        } else {
            (0..n as i64).collect()
        };
        let element_labels = if spec.element_labels.len() == elements.len() {
            spec.element_labels
        } else {
            (0..elements.len() as i64).collect()
        };
        Ok(Self {
            nodes: spec.nodes,
            node_labels,
            element_labels,
            elements,
            constraints: spec.constraints,
            loads: spec.loads,
            displacement: DVector::zeros(3 * n),
            time: 0.0,
        })
    }

    pub fn num_dofs(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn element_displacement(&self, e: usize, u: &DVector<f64>) -> NodalMatrix {
        let ids = self.elements[e].node_ids;
        NodalMatrix::from_fn(|i, a| u[3 * ids[a] + i])
    }

    pub fn volume(&self) -> f64 {
        self.elements.iter().map(Hex8EAS::volume).sum()
    }

    /// Sum of internal forces over the constrained DOFs matching `dof` and
    /// carrying a nonzero rate, i.e. the loaded face's reaction.
    pub fn driven_reaction(&self, f_int: &DVector<f64>, dof: usize) -> f64 {
        self.constraints
            .iter()
            .filter(|c| c.dof == dof && c.rate != 0.0)
            .map(|c| f_int[c.global_dof()])
            .sum()
    }
}

fn parse_dof(token: &str, line: usize) -> Result<usize> {
    match token {
        "x" | "X" | "1" => Ok(0),
        "y" | "Y" | "2" => Ok(1),
        "z" | "Z" | "3" => Ok(2),
        other => Err(Error::Mesh(format!("line {line}: bad dof '{other}'"))),
    }
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token
        .parse::<f64>()
        .map_err(|_| Error::Mesh(format!("line {line}: bad number '{token}'")))
}

fn parse_i64(token: &str, line: usize) -> Result<i64> {
    token
        .parse::<i64>()
        .map_err(|_| Error::Mesh(format!("line {line}: bad id '{token}'")))
}

pub fn parse_mesh(text: &str) -> Result<MeshSpec> {
    let mut spec = MeshSpec::default();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        let expect = |n: usize| {
            if tok.len() == n {
                Ok(())
            } else {
                Err(Error::Mesh(format!("line {line}: '{}' expects {} fields", tok[0], n - 1)))
            }
        };
        let node = |t: &str| -> Result<usize> {
            let id = parse_i64(t, line)?;
            node_index
                .get(&id)
                .copied()
                .ok_or_else(|| Error::Mesh(format!("line {line}: unknown node {id}")))
        };
        match tok[0] {
            "node" => {
                expect(5)?;
                let id = parse_i64(tok[1], line)?;
                if node_index.insert(id, spec.nodes.len()).is_some() {
                    return Err(Error::Mesh(format!("line {line}: duplicate node {id}")));
                }
                spec.node_labels.push(id);
                spec.nodes.push(Vector3::new(
                    parse_f64(tok[2], line)?,
                    parse_f64(tok[3], line)?,
                    parse_f64(tok[4], line)?,
                ));
            }
            "hex" => {
                expect(10)?;
                spec.element_labels.push(parse_i64(tok[1], line)?);
                let mut ids = [0usize; 8];
                for (a, t) in tok[2..].iter().enumerate() {
                    ids[a] = node(t)?;
                }
                spec.connectivity.push(ids);
            }
            "fix" | "move" => {
                expect(4)?;
                let n = node(tok[1])?;
                let dof = parse_dof(tok[2], line)?;
                let v = parse_f64(tok[3], line)?;
                let c = match spec.constraints.iter_mut().find(|c| c.node == n && c.dof == dof) {
                    Some(c) => c,
                    None => {
                        spec.constraints.push(Constraint {
                            node: n,
                            dof,
                            value: 0.0,
                            rate: 0.0,
                        });
                        spec.constraints.last_mut().expect("just pushed")
                    }
                };
                if tok[0] == "fix" {
                    c.value = v;
                } else {
                    c.rate = v;
                }
            }
            "load" => {
                expect(4)?;
                spec.loads.push(NodalLoad {
                    node: node(tok[1])?,
                    dof: parse_dof(tok[2], line)?,
                    force: parse_f64(tok[3], line)?,
                });
            }
            other => return Err(Error::Mesh(format!("line {line}: unknown record '{other}'"))),
        }
    }
    Ok(spec)
}

pub fn write_mesh(spec: &MeshSpec) -> String {
    let mut out = String::new();
    let label = |i: usize| spec.node_labels.get(i).copied().unwrap_or(i as i64);
    for (i, x) in spec.nodes.iter().enumerate() {
        let _ = writeln!(out, "node {} {:.17e} {:.17e} {:.17e}", label(i), x[0], x[1], x[2]);
    }
    for (e, ids) in spec.connectivity.iter().enumerate() {
        let id = spec.element_labels.get(e).copied().unwrap_or(e as i64);
        let nodes: Vec<String> = ids.iter().map(|&i| label(i).to_string()).collect();
        let _ = writeln!(out, "hex {} {}", id, nodes.join(" "));
    }
    const DOF: [&str; 3] = ["x", "y", "z"];
    for c in &spec.constraints {
        let _ = writeln!(out, "fix {} {} {:.17e}", label(c.node), DOF[c.dof], c.value);
        if c.rate != 0.0 {
            let _ = writeln!(out, "move {} {} {:.17e}", label(c.node), DOF[c.dof], c.rate);
        }
    }
    for l in &spec.loads {
        let _ = writeln!(out, "load {} {} {:.17e}", label(l.node), DOF[l.dof], l.force);
    }
    out
}

/// Structured block of `nx × ny × nz` hexahedra on `[0, lx] × [0, ly] × [0, lz]`.
pub fn block(nx: usize, ny: usize, nz: usize, size: Vector3<f64>) -> MeshSpec {
    let id = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut spec = MeshSpec::default();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                spec.nodes.push(Vector3::new(
                    size[0] * i as f64 / nx as f64,
                    size[1] * j as f64 / ny as f64,
                    size[2] * k as f64 / nz as f64,
                ));
            }
        }
    }
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                spec.connectivity.push([
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ]);
            }
        }
    }
    spec.node_labels = (0..spec.nodes.len() as i64).collect();
    spec.element_labels = (0..spec.connectivity.len() as i64).collect();
    spec
}

/// Indices of nodes on the bounding box of `spec`.
pub fn boundary_nodes(spec: &MeshSpec) -> Vec<usize> {
    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for x in &spec.nodes {
        lo = lo.inf(x);
        hi = hi.sup(x);
    }
    let tol = 1e-12 * (hi - lo).norm();
    (0..spec.nodes.len())
        .filter(|&i| (0..3).any(|d| (spec.nodes[i][d] - lo[d]).abs() <= tol || (spec.nodes[i][d] - hi[d]).abs() <= tol))
        .collect()
}

/// Prescribes `u = A·X` on `nodes`, all three DOFs, constant in time.
pub fn prescribe_linear(spec: &mut MeshSpec, nodes: &[usize], grad: &Matrix3<f64>) {
    for &n in nodes {
        let u = grad * spec.nodes[n];
        for dof in 0..3 {
            spec.constraints.push(Constraint {
                node: n,
                dof,
                value: u[dof],
                rate: 0.0,
            });
        }
    }
}

/// Unit-cube element with lateral DOFs held and the top face pulled at
/// `rate` along z: the FEM analog of the constrained uniaxial point path.
pub fn constrained_uniaxial_cube(length: f64, rate: f64) -> MeshSpec {
    let mut spec = block(1, 1, 1, Vector3::repeat(length));
    for n in 0..8 {
        let top = spec.nodes[n][2] > 0.5 * length;
        for dof in 0..3 {
            spec.constraints.push(Constraint {
                node: n,
                dof,
                value: 0.0,
                rate: if dof == 2 && top { rate } else { 0.0 },
            });
        }
    }
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_text_format() {
        let mut spec = constrained_uniaxial_cube(2.0, 1e-3);
        spec.loads.push(NodalLoad {
            node: 3,
            dof: 1,
            force: 5.0,
        });
        let text = write_mesh(&spec);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse_mesh("node 1 0 0 0\nhex 1 1 2 3 4 5 6 7 8\n").unwrap_err();
        assert!(err.to_string().contains("line 2"));
        assert!(parse_mesh("node 1 0 0\n").is_err());
        assert!(parse_mesh("fix 1 x 0\n").is_err());
        assert!(parse_mesh("node 1 0 0 0\nfix 1 w 0\n").is_err());
        assert!(parse_mesh("bogus\n").is_err());
    }

    #[test]
    fn fix_and_move_merge() {
        let spec = parse_mesh("node 7 0 0 0 # origin\nfix 7 z 0.5\nmove 7 3 2.0\n").unwrap();
        assert_eq!(spec.constraints.len(), 1);
        assert_eq!(spec.constraints[0].at(0.25), 1.0);
    }

    #[test]
    fn block_counts_and_boundary() {
        let spec = block(2, 2, 2, Vector3::repeat(1.0));
        assert_eq!(spec.nodes.len(), 27);
        assert_eq!(spec.connectivity.len(), 8);
        assert_eq!(boundary_nodes(&spec).len(), 26);
    }
}
