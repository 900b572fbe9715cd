//! Reference denoiser adapter that answers every request with its own input.
//!
//! Used to check the external denoiser path end to end. `--fault <kind>`
//! makes it misbehave on purpose: `bad-magic`, `wrong-dims`, `truncate`, or
//! `exit`.

use std::io::{self, Read, Write};
use std::process::ExitCode;

use tubal::denoise::protocol::{read_request, serve, write_response, HANDSHAKE};
use tubal::Dims;

fn faulty(kind: &str) -> io::Result<()> {
    let mut input = io::stdin().lock();
    let mut output = io::stdout().lock();
    let mut hello = [0u8; 8];
    input.read_exact(&mut hello)?;
    output.write_all(HANDSHAKE)?;
    output.flush()?;
    let Some(req) = read_request(&mut input)? else {
        return Ok(());
    };
    match kind {
        "bad-magic" => {
            let mut buf = Vec::new();
            write_response(&mut buf, req.dims, &req.values)?;
            buf[..4].copy_from_slice(b"XXXX");
            output.write_all(&buf)?;
        }
        "wrong-dims" => {
            let d = Dims::new(req.dims.len(), 1, 1).expect("nonzero dims");
            write_response(&mut output, d, &req.values)?;
        }
        "truncate" => {
            let mut buf = Vec::new();
            write_response(&mut buf, req.dims, &req.values)?;
            output.write_all(&buf[..buf.len() - 2])?;
        }
        "exit" => std::process::exit(3),
        other => {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("unknown fault `{other}`"),
            ))
        }
    }
    output.flush()
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match args.as_slice() {
        [] => serve(io::stdin().lock(), io::stdout().lock(), |req| req.values.clone()),
        [flag, kind] if flag == "--fault" => faulty(kind),
        _ => {
            eprintln!("usage: tubal-echo-denoiser [--fault bad-magic|wrong-dims|truncate|exit]");
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tubal-echo-denoiser: {e}");
            ExitCode::from(2)
        }
    }
}
