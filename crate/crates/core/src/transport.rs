//! Socket-like message interface for simulated applications.
//!
//! Applications bind listeners to `(host, port)` pairs and send whole
//! messages; each message becomes one flow in the active network model and
//! is handed to the destination listener once it has fully arrived. Sending
//! never blocks or advances the sender's clock.
//!
//! ```
//! use std::sync::Arc;
//! use flowsim::flowmodel::{ModelKind, Network};
//! use flowsim::topology::{Latency, NodeId};
//! use flowsim::transport::{Message, Transport};
//!
//! let net = Arc::new(Network::uniform(&[1e6, 10e6], Latency::from_millis(50)).unwrap());
//! let mut transport = Transport::new(net, ModelKind::BandwidthShare);
//! transport.listen(NodeId(1), 80, |_, record| {
//!     assert!((record.duration() - 1.05).abs() < 1e-9);
//!     Ok(())
//! }).unwrap();
//! transport.send(Message { size: 125_000, tag: 0, src: NodeId(0), dst: NodeId(1), dst_port: 80 }).unwrap();
//! transport.run().unwrap();
//! assert_eq!(transport.deliveries(), 1);
//! ```

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use thiserror::Error;

use crate::engine::{self, EngineError, Event, EventQueue, Handler, RunSummary};
use crate::flowmodel::{build_model, FlowId, FlowModel, FlowSpec, ModelError, ModelKind, ModelStats, Network, Payload};
use crate::time::SimTime;
use crate::topology::NodeId;

pub use crate::flowmodel::DeliveryRecord;

pub type Port = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Message {
    pub size: u64,
    /// Opaque application token, returned in the delivery record.
    pub tag: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub dst_port: Port,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("port {port} on host {host} is already bound")]
    PortInUse { host: NodeId, port: Port },
    #[error("nothing listens on port {port} of host {host}")]
    UnboundPort { host: NodeId, port: Port },
    #[error("unknown end host {0}")]
    UnknownHost(NodeId),
    #[error("messages must carry at least one byte")]
    ZeroSize,
    #[error("setup delay must be finite and non-negative, got {0}")]
    InvalidSetupDelay(f64),
    #[error("application error: {0}")]
    Application(String),
    #[error(transparent)]
    Model(ModelError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl From<ModelError> for TransportError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownHost(h) => TransportError::UnknownHost(h),
            ModelError::ZeroSize => TransportError::ZeroSize,
            other => TransportError::Model(other),
        }
    }
}

/// Handle of a bound listener.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Listener {
    pub host: NodeId,
    pub port: Port,
}

type Callback = Box<dyn FnMut(&mut Socket<'_>, &DeliveryRecord) -> Result<(), TransportError>>;

struct Core {
    model: Box<dyn FlowModel>,
    bound: HashSet<(NodeId, Port)>,
    ports: HashMap<FlowId, Port>,
    arrived: HashMap<FlowId, DeliveryRecord>,
    setup_delay: f64,
    sends: u64,
    deliveries: u64,
}

impl Core {
    fn send_at(
        &mut self,
        queue: &mut EventQueue<Payload>,
        at: SimTime,
        msg: Message,
    ) -> Result<FlowId, TransportError> {
        if msg.size == 0 {
            return Err(TransportError::ZeroSize);
        }
        let network = self.model.network();
        network.host_index(msg.src)?;
        network.host_index(msg.dst)?;
        if !self.bound.contains(&(msg.dst, msg.dst_port)) {
            return Err(TransportError::UnboundPort { host: msg.dst, port: msg.dst_port });
        }
        if at < queue.now() {
            return Err(EngineError::SchedulingInPast { at, now: queue.now() }.into());
        }
        let begin = at.after(self.setup_delay).map_err(ModelError::from)?;
        let spec = FlowSpec { src: msg.src, dst: msg.dst, size: msg.size, tag: msg.tag };
        let id = self.model.open_flow(spec, at)?;
        queue.schedule(begin, Payload::FlowStart(id))?;
        self.ports.insert(id, msg.dst_port);
        self.sends += 1;
        Ok(id)
    }
}

/// What a delivery callback sees: the clock and the ability to send more.
pub struct Socket<'a> {
    core: &'a mut Core,
    queue: &'a mut EventQueue<Payload>,
}

impl Socket<'_> {
    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn send(&mut self, msg: Message) -> Result<FlowId, TransportError> {
        let now = self.queue.now();
        self.core.send_at(self.queue, now, msg)
    }
}

struct Dispatch<'a> {
    core: &'a mut Core,
    listeners: &'a mut HashMap<(NodeId, Port), Callback>,
}

impl Handler<Payload> for Dispatch<'_> {
    type Error = TransportError;

    fn handle(&mut self, event: Event<Payload>, queue: &mut EventQueue<Payload>) -> Result<(), TransportError> {
        match event.payload {
            Payload::FlowStart(id) => self.core.model.start_flow(id, queue)?,
            Payload::FlowCompletion { flow, version } => {
                if let Some(record) = self.core.model.on_completion(flow, version, queue)? {
                    queue.schedule(record.delivered, Payload::Delivery(flow))?;
                    self.core.arrived.insert(flow, record);
                }
            }
            Payload::Delivery(flow) => {
                let record = self.core.arrived.remove(&flow).expect("delivery follows completion");
                let port = self.core.ports.remove(&flow).expect("every flow has a port");
                let callback = self
                    .listeners
                    .get_mut(&(record.dst, port))
                    .ok_or(TransportError::UnboundPort { host: record.dst, port })?;
                self.core.deliveries += 1;
                callback(&mut Socket { core: self.core, queue }, &record)?;
            }
        }
        Ok(())
    }
}

/// A network model plus the listeners of the simulated applications.
pub struct Transport {
    queue: EventQueue<Payload>,
    core: Core,
    listeners: HashMap<(NodeId, Port), Callback>,
}

impl Transport {
    pub fn new(network: Arc<Network>, kind: ModelKind) -> Self {
        Transport {
            queue: EventQueue::new(),
            core: Core {
                model: build_model(kind, network),
                bound: HashSet::new(),
                ports: HashMap::new(),
                arrived: HashMap::new(),
                setup_delay: 0.0,
                sends: 0,
                deliveries: 0,
            },
            listeners: HashMap::new(),
        }
    }

    /// Constant delay between a send and the start of its transmission,
    /// counted in the flow's completion time.
    pub fn with_setup_delay(mut self, secs: f64) -> Result<Self, TransportError> {
        if !(secs.is_finite() && secs >= 0.0) {
            return Err(TransportError::InvalidSetupDelay(secs));
        }
        self.core.setup_delay = secs;
        Ok(self)
    }

    pub fn listen<F>(&mut self, host: NodeId, port: Port, handler: F) -> Result<Listener, TransportError>
    where
        F: FnMut(&mut Socket<'_>, &DeliveryRecord) -> Result<(), TransportError> + 'static,
    {
        self.core.model.network().host_index(host)?;
        if !self.core.bound.insert((host, port)) {
            return Err(TransportError::PortInUse { host, port });
        }
        self.listeners.insert((host, port), Box::new(handler));
        Ok(Listener { host, port })
    }

    /// Unbinds a listener. Flows already in flight to it fail on arrival.
    pub fn close(&mut self, listener: Listener) {
        self.core.bound.remove(&(listener.host, listener.port));
        self.listeners.remove(&(listener.host, listener.port));
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    /// Sends `msg` at the current simulation time.
    pub fn send(&mut self, msg: Message) -> Result<FlowId, TransportError> {
        let now = self.queue.now();
        self.core.send_at(&mut self.queue, now, msg)
    }

    /// Sends `msg` at a future simulation time.
    pub fn send_at(&mut self, at: SimTime, msg: Message) -> Result<FlowId, TransportError> {
        self.core.send_at(&mut self.queue, at, msg)
    }

    /// Runs until no events are left.
    pub fn run(&mut self) -> Result<RunSummary, TransportError> {
        let mut dispatch = Dispatch { core: &mut self.core, listeners: &mut self.listeners };
        engine::run(&mut self.queue, &mut dispatch).map_err(|e| e.source)
    }

    pub fn summary(&self) -> RunSummary {
        self.queue.summary()
    }

    pub fn model(&self) -> &dyn FlowModel {
        self.core.model.as_ref()
    }

    pub fn model_stats(&self) -> ModelStats {
        self.core.model.stats()
    }

    pub fn sends(&self) -> u64 {
        self.core.sends
    }

    pub fn deliveries(&self) -> u64 {
        self.core.deliveries
    }
}

#[cfg(test)]
mod tests {
    use std::cell::RefCell;
    use std::rc::Rc;

    use super::*;
    use crate::topology::Latency;

    fn msg(src: u32, dst: u32, size: u64, port: Port) -> Message {
        Message { size, tag: 0, src: NodeId(src), dst: NodeId(dst), dst_port: port }
    }

    fn recorder(t: &mut Transport, host: u32, port: Port) -> Rc<RefCell<Vec<DeliveryRecord>>> {
        let log = Rc::new(RefCell::new(Vec::new()));
        let sink = log.clone();
        t.listen(NodeId(host), port, move |_, r| {
            sink.borrow_mut().push(*r);
            Ok(())
        })
        .unwrap();
        log
    }

    fn net(bws: &[f64], lat_ms: u64) -> Arc<Network> {
        Arc::new(Network::uniform(bws, Latency::from_millis(lat_ms)).unwrap())
    }

    #[test]
    fn listen_and_deliver_once() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        let log = recorder(&mut t, 1, 80);
        t.send(msg(0, 1, 1000, 80)).unwrap();
        t.run().unwrap();
        assert_eq!(log.borrow().len(), 1);
    }

    #[test]
    fn double_bind_is_rejected() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        t.listen(NodeId(1), 80, |_, _| Ok(())).unwrap();
        let err = t.listen(NodeId(1), 80, |_, _| Ok(())).unwrap_err();
        assert_eq!(err, TransportError::PortInUse { host: NodeId(1), port: 80 });
        assert_eq!(t.listen(NodeId(7), 80, |_, _| Ok(())).unwrap_err(), TransportError::UnknownHost(NodeId(7)));
    }

    #[test]
    fn send_errors() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        t.listen(NodeId(1), 80, |_, _| Ok(())).unwrap();
        assert_eq!(t.send(msg(0, 1, 10, 81)).unwrap_err(), TransportError::UnboundPort { host: NodeId(1), port: 81 });
        assert_eq!(t.send(msg(0, 1, 0, 80)).unwrap_err(), TransportError::ZeroSize);
        assert_eq!(t.send(msg(0, 4, 10, 80)).unwrap_err(), TransportError::UnknownHost(NodeId(4)));
        assert_eq!(t.sends(), 0);
    }

    #[test]
    fn delivery_to_closed_port_fails_the_run() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        let listener = t.listen(NodeId(1), 81, |_, _| Ok(())).unwrap();
        t.send(msg(0, 1, 10, 81)).unwrap();
        t.close(listener);
        assert_eq!(t.run().unwrap_err(), TransportError::UnboundPort { host: NodeId(1), port: 81 });
    }

    #[test]
    fn single_flow_timing() {
        let mut t = Transport::new(net(&[1e6, 10e6], 50), ModelKind::BandwidthShare);
        let log = recorder(&mut t, 1, 80);
        let id = t.send(Message { tag: 42, ..msg(0, 1, 125_000, 80) }).unwrap();
        t.run().unwrap();
        let r = log.borrow()[0];
        assert_eq!((r.flow, r.tag, r.size), (id, 42, 125_000));
        assert_eq!(r.start, SimTime::ZERO);
        assert!((r.delivered.as_secs() - 1.05).abs() < 1e-12);
        assert!((r.transmitted.as_secs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn naive_ignores_cross_traffic() {
        let network = net(&[1e6, 10e6, 1e6, 1e6], 50);
        let mut idle = Transport::new(network.clone(), ModelKind::Naive);
        let idle_log = recorder(&mut idle, 1, 80);
        idle.send(msg(0, 1, 125_000, 80)).unwrap();
        idle.run().unwrap();

        let mut busy = Transport::new(network, ModelKind::Naive);
        let busy_log = recorder(&mut busy, 1, 80);
        busy.send(msg(0, 1, 125_000, 80)).unwrap();
        for _ in 0..200 {
            busy.send(Message { tag: 1, ..msg(2, 1, 125_000, 80) }).unwrap();
            busy.send(Message { tag: 1, ..msg(0, 1, 125_000, 80) }).unwrap();
        }
        busy.run().unwrap();
        let ours = busy_log.borrow().iter().find(|r| r.tag == 0).copied().unwrap();
        assert_eq!(ours.delivered, idle_log.borrow()[0].delivered);
    }

    #[test]
    fn staggered_handler_order() {
        let mut t = Transport::new(net(&[10e6, 10e6, 1e6], 0), ModelKind::BandwidthShare);
        let log = recorder(&mut t, 2, 80);
        t.send(Message { tag: 1, ..msg(0, 2, 125_000, 80) }).unwrap();
        t.send_at(SimTime::from_secs(0.5), Message { tag: 2, ..msg(1, 2, 125_000, 80) }).unwrap();
        t.run().unwrap();
        let got: Vec<_> = log.borrow().iter().map(|r| (r.tag, r.delivered.as_secs())).collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, 1);
        assert!((got[0].1 - 1.5).abs() < 1e-12);
        assert_eq!(got[1].0, 2);
        assert!((got[1].1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn echo_application() {
        // host 0 at 1 Mbps, host 1 at 10 Mbps, 50 ms apart
        let mut t = Transport::new(net(&[1e6, 10e6], 50), ModelKind::BandwidthShare);
        t.listen(NodeId(1), 7, |sock, r| {
            sock.send(Message { size: r.size, tag: 2, src: r.dst, dst: r.src, dst_port: 9 }).map(|_| ())
        })
        .unwrap();
        let log = recorder(&mut t, 0, 9);
        t.send(Message { tag: 1, ..msg(0, 1, 125_000, 7) }).unwrap();
        t.run().unwrap();
        let r = log.borrow()[0];
        // the echo starts when the request arrives, at 1.05 s
        assert_eq!(r.tag, 2);
        assert!((r.start.as_secs() - 1.05).abs() < 1e-12);
        assert!((r.duration() - 1.05).abs() < 1e-9);
        assert!((r.delivered.as_secs() - 2.10).abs() < 1e-9);
        assert_eq!(t.deliveries(), 2);
    }

    #[test]
    fn zero_byte_send_reaches_the_application() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        let seen = Rc::new(RefCell::new(None));
        let slot = seen.clone();
        t.listen(NodeId(1), 1, move |sock, r| {
            *slot.borrow_mut() = Some(sock.send(Message { size: 0, tag: 0, src: r.dst, dst: r.src, dst_port: 1 }));
            Ok(())
        })
        .unwrap();
        t.listen(NodeId(0), 1, |_, _| Ok(())).unwrap();
        t.send(msg(0, 1, 10, 1)).unwrap();
        t.run().unwrap();
        assert_eq!(*seen.borrow(), Some(Err(TransportError::ZeroSize)));
    }

    #[test]
    fn setup_delay_counts_in_duration() {
        let mut t = Transport::new(net(&[1e6, 1e6], 10), ModelKind::BandwidthShare).with_setup_delay(0.25).unwrap();
        let log = recorder(&mut t, 1, 1);
        t.send(msg(0, 1, 125_000, 1)).unwrap();
        t.run().unwrap();
        assert!((log.borrow()[0].duration() - 1.26).abs() < 1e-12);
        assert!(Transport::new(net(&[1e6], 0), ModelKind::Naive).with_setup_delay(-1.0).is_err());
    }

    #[test]
    fn handler_errors_abort_the_run() {
        let mut t = Transport::new(net(&[1e6, 1e6], 0), ModelKind::BandwidthShare);
        t.listen(NodeId(1), 1, |_, _| Err(TransportError::Application("nope".into()))).unwrap();
        t.send(msg(0, 1, 10, 1)).unwrap();
        assert_eq!(t.run().unwrap_err(), TransportError::Application("nope".into()));
    }

    #[test]
    fn many_sends_many_deliveries() {
        let bws: Vec<f64> = (0..20).map(|i| 1e6 * (1 + i % 4) as f64).collect();
        let mut t = Transport::new(net(&bws, 5), ModelKind::BandwidthShare);
        let count = Rc::new(RefCell::new(0u64));
        for h in 0..20 {
            let c = count.clone();
            t.listen(NodeId(h), 0, move |_, _| {
                *c.borrow_mut() += 1;
                Ok(())
            })
            .unwrap();
        }
        for i in 0..10_000u64 {
            let src = (i % 20) as u32;
            let dst = ((i * 7 + 3) % 20) as u32;
            let dst = if dst == src { (dst + 1) % 20 } else { dst };
            t.send_at(SimTime::from_secs(i as f64 * 1e-3), msg(src, dst, 1000 + i % 500, 0)).unwrap();
        }
        let summary = t.run().unwrap();
        assert_eq!(*count.borrow(), 10_000);
        assert_eq!(t.deliveries(), t.sends());
        assert_eq!(summary.events, t.summary().events);
    }
}
