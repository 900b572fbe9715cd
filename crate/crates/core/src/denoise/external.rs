//! Client side of the denoiser wire protocol: a child process that stays alive
//! across many denoising calls.

use std::io::{BufReader, BufWriter, Read, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use super::protocol::{read_response, write_request, HANDSHAKE};
use crate::error::{Error, Result};
use crate::tensor::Tensor3;

/// A running external denoiser. Requests are strictly sequential; the child is
/// killed when the session is dropped.
#[derive(Debug)]
pub struct DenoiserSession {
    command: String,
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
}

impl DenoiserSession {
    /// Starts `command[0]` with the remaining arguments and performs the
    /// handshake.
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("empty external denoiser command".into()))?;
        let display = command.join(" ");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| Error::SpawnFailure {
                command: display.clone(),
                source,
            })?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut session = Self {
            command: display,
            child,
            stdin: Some(BufWriter::new(stdin)),
            stdout: BufReader::new(stdout),
        };
        session.handshake()?;
        Ok(session)
    }

    fn handshake(&mut self) -> Result<()> {
        let fail = |e: std::io::Error| Error::HandshakeFailure(e.to_string());
        let w = self.stdin.as_mut().expect("session is open");
        w.write_all(HANDSHAKE).map_err(fail)?;
        w.flush().map_err(fail)?;
        let mut reply = [0u8; 8];
        self.stdout.read_exact(&mut reply).map_err(fail)?;
        if &reply != HANDSHAKE {
            return Err(Error::HandshakeFailure(format!(
                "`{}` replied {:?}",
                self.command,
                String::from_utf8_lossy(&reply)
            )));
        }
        Ok(())
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Sends one request and waits for the reply. Values cross the wire as
    /// `f32`.
    pub fn denoise(&mut self, noisy: &Tensor3, sigma: f64) -> Result<Tensor3> {
        let dims = noisy.dims();
        let w = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::ExternalDenoiserFailure("session is closed".into()))?;
        let fail = |e: std::io::Error| Error::ExternalDenoiserFailure(e.to_string());
        write_request(w, dims, sigma, noisy.as_slice()).map_err(fail)?;
        let values = read_response(&mut self.stdout, dims).map_err(|e| {
            let status = self
                .child
                .try_wait()
                .ok()
                .flatten()
                .map(|s| format!(" (child exited: {s})"))
                .unwrap_or_default();
            Error::ExternalDenoiserFailure(format!("{e}{status}"))
        })?;
        let data: Vec<f64> = values.into_iter().map(f64::from).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput("external denoiser"));
        }
        let (n1, n2, n3) = dims.as_tuple();
        Tensor3::from_vec(n1, n2, n3, data)
    }

    /// Closes the child's stdin and waits for it to exit.
    pub fn close(mut self) -> Result<()> {
        drop(self.stdin.take());
        let status = self.child.wait()?;
        if !status.success() {
            return Err(Error::ExternalDenoiserFailure(format!(
                "`{}` exited with {status}",
                self.command
            )));
        }
        Ok(())
    }
}

impl Drop for DenoiserSession {
    fn drop(&mut self) {
        if self.stdin.take().is_some() {
            let _ = self.child.kill();
        }
        let _ = self.child.wait();
    }
}
