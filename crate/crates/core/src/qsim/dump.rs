//! State dumps: one JSON header line with the register layout, then the
//! amplitudes as little-endian `(re, im)` f64 pairs.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::layout::{Layout, Register};
use super::state::StateVector;
use super::C64;
use crate::error::{Error, Result};
use crate::space::FiniteSpace;

#[derive(Serialize, Deserialize)]
struct Header {
    register_layout: Vec<RegisterHeader>,
}

#[derive(Serialize, Deserialize)]
struct RegisterHeader {
    name: String,
    labels: Vec<String>,
}

pub fn write_state_dump<W: Write>(psi: &StateVector, mut w: W) -> Result<()> {
    let header = Header {
        register_layout: psi
            .layout()
            .registers()
            .iter()
            .map(|r| RegisterHeader {
                name: r.name.clone(),
                labels: r.space.labels().iter().map(|l| l.to_string()).collect(),
            })
            .collect(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for a in psi.amps() {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_state_dump<R: BufRead>(mut r: R) -> Result<StateVector> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())?;
    let regs = header
        .register_layout
        .into_iter()
        .map(|h| {
            let has_empty = h.labels.first().is_some_and(|l| l == crate::space::EMPTY);
            let labels = h.labels.into_iter().skip(usize::from(has_empty));
            Ok(Register::new(
                &h.name,
                FiniteSpace::new(&h.name, labels, has_empty)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = Layout::new(regs)?;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != layout.total() * 16 {
        return Err(Error::InvalidState(format!(
            "{} payload bytes for {} amplitudes",
            bytes.len(),
            layout.total()
        )));
    }
    let amps = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            C64::new(re, im)
        })
        .collect();
    StateVector::new(layout, amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let l = Layout::new(vec![Register::indexed("a", 3), Register::indexed("b", 2)]).unwrap();
        let amps: Vec<C64> = (0..6).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let psi = StateVector::normalized(l, amps).unwrap();
        let mut buf = Vec::new();
        write_state_dump(&psi, &mut buf).unwrap();
        let back = read_state_dump(&buf[..]).unwrap();
        assert_eq!(back, psi);
    }
}
