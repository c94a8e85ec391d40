use serde::Serialize;

use crate::error::{Error, Result};

/// One residue, represented by its alpha carbon.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Residue {
    pub chain: char,
    pub seq: i32,
    pub insertion: char,
    pub name: String,
    pub position: [f64; 3],
    /// Temperature factor in square angstroms, when the record has one.
    pub b_factor: Option<f64>,
}

impl Residue {
    /// Sequence number with insertion code, e.g. `52` or `52A`.
    pub fn label(&self) -> String {
        if self.insertion == ' ' {
            self.seq.to_string()
        } else {
            format!("{}{}", self.seq, self.insertion)
        }
    }

    fn key(&self) -> (char, i32, char) {
        (self.chain, self.seq, self.insertion)
    }
}

/// Residues of one model, in file order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProteinModel {
    /// Serial from the MODEL record, or 1 for single-model files.
    pub index: usize,
    pub residues: Vec<Residue>,
}

impl ProteinModel {
    pub fn positions(&self) -> Vec<[f64; 3]> {
        self.residues.iter().map(|r| r.position).collect()
    }

    /// Chain ids in order of first appearance.
    pub fn chains(&self) -> Vec<char> {
        let mut out = Vec::new();
        for r in &self.residues {
            if !out.contains(&r.chain) {
                out.push(r.chain);
            }
        }
        out
    }

    pub fn chain(&self, id: char) -> ProteinModel {
        ProteinModel {
            index: self.index,
            residues: self.residues.iter().filter(|r| r.chain == id).cloned().collect(),
        }
    }
}

fn column(line: &str, from: usize, to: usize) -> &str {
    // PDB columns are 1-based and inclusive.
    let end = to.min(line.len());
    if from > end {
        ""
    } else {
        line.get(from - 1..end).unwrap_or("")
    }
}

fn number(line: &str, lineno: usize, from: usize, to: usize, what: &str) -> Result<f64> {
    let field = column(line, from, to).trim();
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Pdb {
            line: lineno,
            message: format!("malformed {what} {field:?} in columns {from}-{to}"),
        }),
    }
}

fn optional_number(line: &str, lineno: usize, from: usize, to: usize, what: &str) -> Result<Option<f64>> {
    if column(line, from, to).trim().is_empty() {
        Ok(None)
    } else {
        number(line, lineno, from, to, what).map(Some)
    }
}

struct Pending {
    residue: Residue,
    occupancy: f64,
}

/// Alpha-carbon residues from PDB text, one entry per MODEL block.
///
/// Alternate locations keep the highest-occupancy atom (the first on ties).
/// HETATM records are ignored.
pub fn parse_pdb(text: &str) -> Result<Vec<ProteinModel>> {
    let mut models = Vec::new();
    let mut current: Vec<Pending> = Vec::new();
    let mut index = 1;

    let finish = |index: usize, current: &mut Vec<Pending>, models: &mut Vec<ProteinModel>| {
        if !current.is_empty() {
            models.push(ProteinModel {
                index,
                residues: current.drain(..).map(|p| p.residue).collect(),
            });
        }
    };

    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let record = column(line, 1, 6);
        match record.trim_end() {
            "MODEL" => {
                finish(index, &mut current, &mut models);
                let serial = column(line, 11, 14).trim();
                index = if serial.is_empty() {
                    models.len() + 1
                } else {
                    serial.parse().map_err(|_| Error::Pdb {
                        line: lineno,
                        message: format!("malformed MODEL serial {serial:?}"),
                    })?
                };
            }
            "ENDMDL" => {
                finish(index, &mut current, &mut models);
                index = models.len() + 1;
            }
            "END" => break,
            "ATOM" => {
                if column(line, 13, 16).trim() != "CA" {
                    continue;
                }
                let position = [
                    number(line, lineno, 31, 38, "x coordinate")?,
                    number(line, lineno, 39, 46, "y coordinate")?,
                    number(line, lineno, 47, 54, "z coordinate")?,
                ];
                let occupancy = optional_number(line, lineno, 55, 60, "occupancy")?.unwrap_or(1.0);
                let b_factor = optional_number(line, lineno, 61, 66, "temperature factor")?;
                let seq_field = column(line, 23, 26).trim();
                let seq = seq_field.parse::<i32>().map_err(|_| Error::Pdb {
                    line: lineno,
                    message: format!("malformed residue number {seq_field:?}"),
                })?;
                let char_at = |c: usize| column(line, c, c).chars().next().unwrap_or(' ');
                let residue = Residue {
                    chain: char_at(22),
                    seq,
                    insertion: char_at(27),
                    name: column(line, 18, 20).trim().to_string(),
                    position,
                    b_factor,
                };
                match current.iter_mut().find(|p| p.residue.key() == residue.key()) {
                    Some(existing) => {
                        if occupancy > existing.occupancy {
                            *existing = Pending { residue, occupancy };
                        }
                    }
                    None => current.push(Pending { residue, occupancy }),
                }
            }
            _ => {}
        }
    }
    finish(index, &mut current, &mut models);
    if models.is_empty() {
        return Err(Error::NoCalpha);
    }
    Ok(models)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CA: &str = "ATOM      2  CA  THR A   1      16.967  12.784   4.338  1.00 12.13           C";

    #[test]
    fn single_atom() {
        let m = parse_pdb(CA).unwrap();
        assert_eq!(m.len(), 1);
        let r = &m[0].residues[0];
        assert_eq!(r.b_factor, Some(12.13));
        assert_eq!(r.position, [16.967, 12.784, 4.338]);
        assert_eq!((r.chain, r.seq, r.name.as_str()), ('A', 1, "THR"));
    }

    #[test]
    fn models_and_hetatm() {
        let het = "HETATM    3  CA  HOH A   2      1.000   2.000   3.000  1.00 10.00";
        let text = format!("MODEL        1\n{CA}\n{het}\nENDMDL\nMODEL        2\n{CA}\nENDMDL\nEND\n");
        let m = parse_pdb(&text).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[1].index, 2);
        assert!(m.iter().all(|x| x.residues.len() == 1));
    }

    #[test]
    fn alt_loc_highest_occupancy() {
        let a = "ATOM      2  CA AVAL A   5       1.000   1.000   1.000  0.40 10.00";
        let b = "ATOM      3  CA BVAL A   5       2.000   2.000   2.000  0.60 11.00";
        let c = "ATOM      4  CA CVAL A   5       3.000   3.000   3.000  0.60 12.00";
        let m = parse_pdb(&format!("{a}\n{b}\n{c}\n")).unwrap();
        assert_eq!(m[0].residues.len(), 1);
        assert_eq!(m[0].residues[0].position, [2.0, 2.0, 2.0]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = "ATOM      2  CA  THR A   1      16.9x7  12.784   4.338  1.00 12.13";
        match parse_pdb(&format!("REMARK\n{bad}\n")) {
            Err(Error::Pdb { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("x coordinate"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_pdb("HEADER\n"), Err(Error::NoCalpha)));
    }

    #[test]
    fn missing_b_factor() {
        let short = "ATOM      2  CA  THR A   1      16.967  12.784   4.338";
        assert_eq!(parse_pdb(short).unwrap()[0].residues[0].b_factor, None);
    }
}
