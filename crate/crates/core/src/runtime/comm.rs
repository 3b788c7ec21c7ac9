//! Point-to-point links between ranks.
//!
//! Every (rank, face) pair has its own ordered channel, so a message is
//! identified by where it arrives; the step number and sender face it
//! carries are checked on receipt.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::time::{Duration, Instant};

use super::decompose::TileAssignment;
use super::halo::Face;
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct HaloMessage {
    pub step: u64,
    /// Face of the sender the data left through.
    pub from_face: Face,
    pub data: Vec<f64>,
}

const POLL: Duration = Duration::from_millis(20);

/// One rank's endpoints.
#[derive(Debug)]
pub struct Links {
    rank: usize,
    outbox: [Option<(usize, Sender<HaloMessage>)>; 4],
    inbox: [Option<(usize, Receiver<HaloMessage>)>; 4],
    abort: Arc<AtomicBool>,
    timeout: Duration,
}

impl Links {
    pub fn has_neighbor(&self, face: Face) -> bool {
        self.outbox[face.index()].is_some()
    }

    pub fn send(&self, face: Face, step: u64, data: Vec<f64>) -> Result<()> {
        let (peer, tx) = self.outbox[face.index()].as_ref().ok_or_else(|| Error::Protocol {
            rank: self.rank,
            detail: format!("no neighbor across {face:?}"),
        })?;
        tx.send(HaloMessage { step, from_face: face, data })
            .map_err(|_| Error::Aborted { rank: self.rank, reason: format!("rank {peer} hung up") })
    }

    /// Blocks until the message for `step` arrives on `face`. Gives up when
    /// another rank aborts or after the heartbeat timeout.
    pub fn recv(&self, face: Face, step: u64) -> Result<Vec<f64>> {
        let (peer, rx) = self.inbox[face.index()].as_ref().ok_or_else(|| Error::Protocol {
            rank: self.rank,
            detail: format!("no neighbor across {face:?}"),
        })?;
        let deadline = Instant::now() + self.timeout;
        loop {
            if self.abort.load(Ordering::Relaxed) {
                return Err(Error::Aborted { rank: self.rank, reason: "another rank failed".into() });
            }
            match rx.recv_timeout(POLL) {
                Ok(msg) => {
                    if msg.step != step || msg.from_face != face.opposite() {
                        return Err(Error::Protocol {
                            rank: self.rank,
                            detail: format!(
                                "expected step {step} from {:?} on {face:?}, got step {} from {:?}",
                                face.opposite(),
                                msg.step,
                                msg.from_face
                            ),
                        });
                    }
                    return Ok(msg.data);
                }
                Err(RecvTimeoutError::Timeout) => {
                    if Instant::now() >= deadline {
                        return Err(Error::Stalled {
                            rank: self.rank,
                            step,
                            waiting_on: format!("{face:?} halo from rank {peer}"),
                        });
                    }
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::Aborted { rank: self.rank, reason: format!("rank {peer} hung up") })
                }
            }
        }
    }

    pub fn abort_all(&self) {
        self.abort.store(true, Ordering::Relaxed);
    }
}

fn neighbor(t: &TileAssignment, face: Face) -> Option<usize> {
    match face {
        Face::Left => Some(t.neighbors.left),
        Face::Right => Some(t.neighbors.right),
        Face::Down => t.neighbors.down,
        Face::Up => t.neighbors.up,
    }
}

/// Wires every tile to its neighbors. Returned in rank order.
pub fn build_mesh(tiles: &[TileAssignment], abort: Arc<AtomicBool>, timeout: Duration) -> Vec<Links> {
    let mut links: Vec<Links> = tiles
        .iter()
        .map(|t| Links {
            rank: t.rank,
            outbox: [None, None, None, None],
            inbox: [None, None, None, None],
            abort: abort.clone(),
            timeout,
        })
        .collect();
    for t in tiles {
        for face in Face::ALL {
            if let Some(peer) = neighbor(t, face) {
                // peer sends through its opposite face into t's inbox on `face`
                let (tx, rx) = channel();
                links[t.rank].inbox[face.index()] = Some((peer, rx));
                links[peer].outbox[face.opposite().index()] = Some((t.rank, tx));
            }
        }
    }
    links
}
