//! Estimate delivery between the receiver side and the TX controller.

use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{Ipv4Addr, SocketAddr, UdpSocket};
use std::time::{Duration, Instant};

use super::feedback::{decode_feedback, encode_feedback, FeedbackMessage, FEEDBACK_LEN};
use crate::Error;

/// A one-way estimate channel into a calibrator.
pub trait FeedbackLink {
    fn send(&mut self, msg: &FeedbackMessage) -> Result<(), Error>;

    /// Collects up to `expected` messages. Fewer may arrive; missing ones
    /// are treated as lost.
    fn receive(&mut self, expected: usize) -> Result<Vec<FeedbackMessage>, Error>;
}

/// In-process queue; messages are passed as values.
#[derive(Debug, Default)]
pub struct InProcLink {
    queue: VecDeque<FeedbackMessage>,
}

impl InProcLink {
    pub fn new() -> Self {
        Self::default()
    }
}

impl FeedbackLink for InProcLink {
    fn send(&mut self, msg: &FeedbackMessage) -> Result<(), Error> {
        self.queue.push_back(*msg);
        Ok(())
    }

    fn receive(&mut self, expected: usize) -> Result<Vec<FeedbackMessage>, Error> {
        let n = expected.min(self.queue.len());
        Ok(self.queue.drain(..n).collect())
    }
}

/// Loopback UDP pair: the controller socket is bound to the configured local
/// port (0 picks an ephemeral one), the estimator sends from its own socket.
#[derive(Debug)]
pub struct UdpLink {
    sender: UdpSocket,
    controller: UdpSocket,
    timeout: Duration,
    rejected: usize,
}

impl UdpLink {
    pub fn bind(port: u16, timeout: Duration) -> Result<Self, Error> {
        let controller_addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
        let controller = UdpSocket::bind(controller_addr)
            .map_err(|e| Error::io(controller_addr.to_string(), e))?;
        let sender =
            UdpSocket::bind((Ipv4Addr::LOCALHOST, 0)).map_err(|e| Error::io("127.0.0.1:0", e))?;
        let target = controller
            .local_addr()
            .map_err(|e| Error::io("controller socket", e))?;
        sender
            .connect(target)
            .map_err(|e| Error::io(target.to_string(), e))?;
        Ok(Self {
            sender,
            controller,
            timeout,
            rejected: 0,
        })
    }

    pub fn local_port(&self) -> u16 {
        self.controller.local_addr().map(|a| a.port()).unwrap_or(0)
    }

    /// Datagrams dropped because they failed to decode.
    pub fn rejected(&self) -> usize {
        self.rejected
    }
}

impl FeedbackLink for UdpLink {
    fn send(&mut self, msg: &FeedbackMessage) -> Result<(), Error> {
        self.sender
            .send(&encode_feedback(msg))
            .map_err(|e| Error::io("feedback send", e))?;
        Ok(())
    }

    fn receive(&mut self, expected: usize) -> Result<Vec<FeedbackMessage>, Error> {
        let mut out = Vec::with_capacity(expected);
        let mut buf = [0u8; 2 * FEEDBACK_LEN];
        let deadline = Instant::now() + self.timeout;
        while out.len() < expected {
            let left = deadline.saturating_duration_since(Instant::now());
            if left.is_zero() {
                break;
            }
            self.controller
                .set_read_timeout(Some(left))
                .map_err(|e| Error::io("feedback socket", e))?;
            match self.controller.recv(&mut buf) {
                Ok(n) => match decode_feedback(&buf[..n]) {
                    Ok(msg) => out.push(msg),
                    Err(_) => self.rejected += 1,
                },
                Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => break,
                Err(e) => return Err(Error::io("feedback recv", e)),
            }
        }
        Ok(out)
    }
}
