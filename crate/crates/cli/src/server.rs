//! TCP front-end for the wire protocol. One connection is served at a time
//! and the session outlives connections.
//!
//! Each connection gets a reader thread feeding inbound lines over a channel
//! and a writer thread draining a bounded outbound queue, so a slow client
//! never stalls the pipeline.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::sync::{mpsc, Arc, Condvar, Mutex};
use std::thread;

use afeis_core::wire::{Outbound, OutboundQueue, Service};

pub const QUEUE_CAPACITY: usize = 1024;

struct Outbox {
    state: Mutex<(Option<OutboundQueue>, bool)>,
    ready: Condvar,
}

impl Outbox {
    fn new(capacity: usize) -> Self {
        Outbox {
            state: Mutex::new((Some(OutboundQueue::new(capacity)), false)),
            ready: Condvar::new(),
        }
    }

    fn send(&self, msgs: Vec<Outbound>) {
        if msgs.is_empty() {
            return;
        }
        let mut st = self.state.lock().unwrap();
        if let Some(q) = st.0.as_mut() {
            q.extend(msgs);
        }
        self.ready.notify_one();
    }

    fn close(&self) {
        self.state.lock().unwrap().1 = true;
        self.ready.notify_one();
    }

    /// Writes records until closed and drained, or the peer goes away.
    fn drain(&self, stream: TcpStream) -> io::Result<()> {
        let mut w = BufWriter::new(stream);
        loop {
            let next = {
                let mut st = self.state.lock().unwrap();
                loop {
                    let q = st.0.as_mut().expect("queue present");
                    if let Some(env) = q.pop() {
                        break Some((env, q.is_empty()));
                    }
                    if st.1 {
                        break None;
                    }
                    st = self.ready.wait(st).unwrap();
                }
            };
            let Some((env, idle)) = next else {
                return w.flush();
            };
            let res = writeln!(w, "{}", env.to_line()).and_then(|_| if idle { w.flush() } else { Ok(()) });
            if let Err(e) = res {
                // stop queueing for a peer that is gone
                self.state.lock().unwrap().0 = None;
                return Err(e);
            }
        }
    }
}

pub struct Server {
    service: Service,
    capacity: usize,
}

impl Server {
    pub fn new(service: Service) -> Self {
        Server {
            service,
            capacity: QUEUE_CAPACITY,
        }
    }

    pub fn with_capacity(mut self, capacity: usize) -> Self {
        self.capacity = capacity;
        self
    }

    pub fn service(&self) -> &Service {
        &self.service
    }

    /// Serves connections one after another; `limit` stops after that many.
    pub fn serve(&mut self, listener: &TcpListener, limit: Option<usize>) -> io::Result<()> {
        for (served, stream) in (1..).zip(listener.incoming()) {
            let stream = stream?;
            let peer = stream.peer_addr().map(|a| a.to_string()).unwrap_or_default();
            eprintln!("connected {peer}");
            if let Err(e) = self.connection(stream) {
                eprintln!("connection {peer}: {e}");
            }
            eprintln!("disconnected {peer}");
            if limit.is_some_and(|n| served >= n) {
                break;
            }
        }
        Ok(())
    }

    /// Runs one connection to completion. Inbound lines are handled in
    /// arrival order; the connection ends when the peer closes its side.
    pub fn connection(&mut self, stream: TcpStream) -> io::Result<()> {
        let outbox = Arc::new(Outbox::new(self.capacity));
        let writer = {
            let outbox = Arc::clone(&outbox);
            let stream = stream.try_clone()?;
            thread::spawn(move || outbox.drain(stream))
        };
        let (tx, rx) = mpsc::channel();
        let reader = {
            let stream = stream.try_clone()?;
            thread::spawn(move || {
                for line in BufReader::new(stream).lines() {
                    let Ok(line) = line else { break };
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            })
        };
        outbox.send(self.service.on_connect());
        for line in rx {
            outbox.send(self.service.handle_line(&line));
        }
        outbox.close();
        let written = writer.join().expect("writer thread");
        let _ = stream.shutdown(Shutdown::Both);
        let _ = reader.join();
        written
    }
}
