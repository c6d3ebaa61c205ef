//! Unified-graph hand-off between the ground and aerial agents: message
//! types, a canonical little-endian wire codec, transports, and the
//! deployment action state machines.

use std::collections::BTreeSet;
use std::io::{Read, Write as IoWrite};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, RecvTimeoutError, Sender};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::confidence::DeploymentDecision;
use crate::error::{Error, Result};
use crate::frontier::FrontierRegistry;
use crate::geometry::{RigidTransform, RobotState};
use crate::graph::{ExplorationGraph, GraphLevel, GraphNode, Path};

pub const WIRE_VERSION: u16 = 1;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// FNV-1a 64-bit hash, used as the scan metadata checksum.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The deployment request payload: the unified graph, the selected path,
/// which nodes are hand-off frontiers, and scan provenance metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnifiedGraphMessage {
    pub mission_id: u64,
    /// Transform from the sender's map frame to the shared frame.
    pub static_transform: RigidTransform,
    pub graph: ExplorationGraph,
    pub path: Path,
    /// Unified-graph node ids the receiver should treat as frontiers.
    pub frontier_ids: Vec<u32>,
    pub scan_point_count: u64,
    pub scan_checksum: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeedbackPhase {
    Deployed,
    Exploring,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RejectReason {
    Busy,
    InvalidRequest,
    UnsupportedGraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionResult {
    pub mission_id: u64,
    pub success: bool,
    /// Unified-graph frontier ids the aerial agent reached.
    pub reached_frontiers: Vec<u32>,
    pub newly_free_voxels: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    Request(UnifiedGraphMessage),
    Accepted { mission_id: u64 },
    Feedback { mission_id: u64, phase: FeedbackPhase },
    Result(MissionResult),
    Reject { mission_id: u64, reason: RejectReason },
}

impl Message {
    pub fn mission_id(&self) -> u64 {
        match self {
            Message::Request(m) => m.mission_id,
            Message::Accepted { mission_id }
            | Message::Feedback { mission_id, .. }
            | Message::Reject { mission_id, .. } => *mission_id,
            Message::Result(r) => r.mission_id,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Message::Request(_) => 0,
            Message::Accepted { .. } => 1,
            Message::Feedback { .. } => 2,
            Message::Result(_) => 3,
            Message::Reject { .. } => 4,
        }
    }
}

/// The everything-shared artifact: candidate graph reindexed to contiguous
/// ids plus the registry's open frontiers as isolated frontier nodes.
#[derive(Debug, Clone)]
pub struct UnifiedGraph {
    pub graph: ExplorationGraph,
    /// Selected path, rewritten in unified ids.
    pub path: Path,
    /// Unified ids of the isolated registry frontier nodes.
    pub frontier_ids: Vec<u32>,
    /// Registry ids to mark shared after a successful hand-off.
    pub shared_registry_ids: Vec<u32>,
}

/// Builds the hand-off graph from the planner's decision. With a candidate
/// path, its terminal must be a frontier node; the registry fallback emits
/// only isolated frontier nodes with a single-node path to the target.
pub fn build_unified_graph(
    candidate: &ExplorationGraph,
    decision: &DeploymentDecision,
    registry: &FrontierRegistry,
) -> Result<UnifiedGraph> {
    let mut graph = ExplorationGraph::new(GraphLevel::Unified);
    let mut next_id: u32 = 0;
    let mut path = None;

    if let Some(src_path) = &decision.target_path {
        let terminal = candidate
            .node(src_path.terminal())
            .ok_or_else(|| Error::Contract("path terminal missing from graph".into()))?;
        if !terminal.is_frontier {
            return Err(Error::Contract(format!(
                "path terminal {} is not a frontier",
                terminal.id
            )));
        }
        let mut remap = std::collections::BTreeMap::new();
        for node in candidate.nodes() {
            remap.insert(node.id, next_id);
            graph.add_node(GraphNode { id: next_id, ..*node })?;
            next_id += 1;
        }
        for &(a, b, _) in candidate.edges() {
            graph.add_edge(remap[&a], remap[&b])?;
        }
        path = Some(Path {
            node_ids: src_path.node_ids.iter().map(|id| remap[id]).collect(),
            length: src_path.length,
            confidence: src_path.confidence,
        });
    }

    let mut frontier_ids = Vec::new();
    let mut shared_registry_ids = Vec::new();
    let mut fallback_node = None;
    for entry in registry.open_frontiers() {
        let pose = RobotState::new(entry.position.x, entry.position.y, entry.position.z, 0.0)?;
        graph.add_node(GraphNode {
            id: next_id,
            pose,
            gain: entry.gain,
            is_frontier: true,
            confidence: None,
        })?;
        frontier_ids.push(next_id);
        shared_registry_ids.push(entry.id);
        if decision.fallback_frontier == Some(entry.id) {
            fallback_node = Some(next_id);
        }
        next_id += 1;
    }

    let path = match (path, fallback_node) {
        (Some(p), _) => p,
        (None, Some(node)) => Path { node_ids: vec![node], length: 0.0, confidence: None },
        (None, None) => {
            return Err(Error::Contract("decision carries neither path nor fallback".into()))
        }
    };
    Ok(UnifiedGraph { graph, path, frontier_ids, shared_registry_ids })
}

// ---------------------------------------------------------------------------
// Wire codec
// ---------------------------------------------------------------------------

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u16(&mut self, v: u16) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Malformed("payload truncated".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Malformed("trailing bytes after message".into()));
        }
        Ok(())
    }
}

fn write_opt_f64(w: &mut Writer, v: Option<f64>) {
    match v {
        Some(x) => {
            w.u8(1);
            w.f64(x);
        }
        None => w.u8(0),
    }
}

fn read_opt_f64(r: &mut Reader) -> Result<Option<f64>> {
    match r.u8()? {
        0 => Ok(None),
        1 => Ok(Some(r.f64()?)),
        other => Err(Error::Malformed(format!("bad option tag {other}"))),
    }
}

fn write_path(w: &mut Writer, p: &Path) {
    w.u32(p.node_ids.len() as u32);
    for id in &p.node_ids {
        w.u32(*id);
    }
    w.f64(p.length);
    write_opt_f64(w, p.confidence);
}

fn read_path(r: &mut Reader) -> Result<Path> {
    let n = r.u32()? as usize;
    if n > 1_000_000 {
        return Err(Error::Malformed("implausible path length".into()));
    }
    let mut node_ids = Vec::with_capacity(n);
    for _ in 0..n {
        node_ids.push(r.u32()?);
    }
    let length = r.f64()?;
    let confidence = read_opt_f64(r)?;
    Ok(Path { node_ids, length, confidence })
}

fn write_request(w: &mut Writer, m: &UnifiedGraphMessage) {
    w.u64(m.mission_id);
    for row in &m.static_transform.rotation {
        for v in row {
            w.f64(*v);
        }
    }
    for v in &m.static_transform.translation {
        w.f64(*v);
    }
    w.u32(m.graph.node_count() as u32);
    for node in m.graph.nodes() {
        w.u32(node.id);
        w.f64(node.pose.x);
        w.f64(node.pose.y);
        w.f64(node.pose.z);
        w.f64(node.pose.psi);
        w.f64(node.gain);
        w.u8(node.is_frontier as u8);
        write_opt_f64(w, node.confidence);
    }
    w.u32(m.graph.edges().len() as u32);
    for &(a, b, len) in m.graph.edges() {
        w.u32(a);
        w.u32(b);
        w.f64(len);
    }
    write_path(w, &m.path);
    w.u32(m.frontier_ids.len() as u32);
    for id in &m.frontier_ids {
        w.u32(*id);
    }
    w.u64(m.scan_point_count);
    w.u64(m.scan_checksum);
}

fn read_request(r: &mut Reader) -> Result<UnifiedGraphMessage> {
    let mission_id = r.u64()?;
    let mut rotation = [[0.0; 3]; 3];
    for row in &mut rotation {
        for v in row.iter_mut() {
            *v = r.f64()?;
        }
    }
    let mut translation = [0.0; 3];
    for v in &mut translation {
        *v = r.f64()?;
    }
    let static_transform = RigidTransform { rotation, translation };
    static_transform
        .validate(1e-6)
        .map_err(|e| Error::InvalidMessage(format!("bad transform: {e}")))?;

    let node_count = r.u32()? as usize;
    if node_count > 10_000_000 {
        return Err(Error::Malformed("implausible node count".into()));
    }
    let mut graph = ExplorationGraph::new(GraphLevel::Unified);
    for _ in 0..node_count {
        let id = r.u32()?;
        let x = r.f64()?;
        let y = r.f64()?;
        let z = r.f64()?;
        let psi = r.f64()?;
        let gain = r.f64()?;
        let is_frontier = match r.u8()? {
            0 => false,
            1 => true,
            other => return Err(Error::Malformed(format!("bad bool {other}"))),
        };
        let confidence = read_opt_f64(r)?;
        let pose = RobotState::new(x, y, z, psi)
            .map_err(|e| Error::InvalidMessage(format!("bad node pose: {e}")))?;
        graph
            .add_node(GraphNode { id, pose, gain, is_frontier, confidence })
            .map_err(|e| Error::InvalidMessage(format!("bad node: {e}")))?;
    }
    let edge_count = r.u32()? as usize;
    if edge_count > 10_000_000 {
        return Err(Error::Malformed("implausible edge count".into()));
    }
    for _ in 0..edge_count {
        let a = r.u32()?;
        let b = r.u32()?;
        let len = r.f64()?;
        graph.add_edge(a, b).map_err(|e| Error::InvalidMessage(format!("bad edge: {e}")))?;
        let stored = graph.edges().iter().find(|e| e.0 == a.min(b) && e.1 == a.max(b)).unwrap().2;
        if (stored - len).abs() > 1e-9 {
            return Err(Error::InvalidMessage(format!(
                "edge ({a},{b}) length {len} disagrees with node geometry {stored}"
            )));
        }
    }
    let path = read_path(r)?;
    path.validate(&graph).map_err(|e| Error::InvalidMessage(format!("bad path: {e}")))?;
    let frontier_count = r.u32()? as usize;
    if frontier_count > 10_000_000 {
        return Err(Error::Malformed("implausible frontier count".into()));
    }
    let mut frontier_ids = Vec::with_capacity(frontier_count);
    for _ in 0..frontier_count {
        let id = r.u32()?;
        match graph.node(id) {
            Some(n) if n.is_frontier => frontier_ids.push(id),
            Some(_) => {
                return Err(Error::InvalidMessage(format!("node {id} is not a frontier")))
            }
            None => return Err(Error::InvalidMessage(format!("frontier id {id} unknown"))),
        }
    }
    let scan_point_count = r.u64()?;
    let scan_checksum = r.u64()?;
    Ok(UnifiedGraphMessage {
        mission_id,
        static_transform,
        graph,
        path,
        frontier_ids,
        scan_point_count,
        scan_checksum,
    })
}

/// Encodes a message payload: u16 wire version, u8 kind, kind-specific body.
pub fn encode_message(msg: &Message) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.u16(WIRE_VERSION);
    w.u8(msg.kind());
    match msg {
        Message::Request(m) => write_request(&mut w, m),
        Message::Accepted { mission_id } => w.u64(*mission_id),
        Message::Feedback { mission_id, phase } => {
            w.u64(*mission_id);
            w.u8(match phase {
                FeedbackPhase::Deployed => 0,
                FeedbackPhase::Exploring => 1,
            });
        }
        Message::Result(res) => {
            w.u64(res.mission_id);
            w.u8(res.success as u8);
            w.u32(res.reached_frontiers.len() as u32);
            for id in &res.reached_frontiers {
                w.u32(*id);
            }
            w.u64(res.newly_free_voxels);
        }
        Message::Reject { mission_id, reason } => {
            w.u64(*mission_id);
            w.u8(match reason {
                RejectReason::Busy => 0,
                RejectReason::InvalidRequest => 1,
                RejectReason::UnsupportedGraph => 2,
            });
        }
    }
    w.0
}

/// Decodes and validates a message payload.
pub fn decode_message(payload: &[u8]) -> Result<Message> {
    let mut r = Reader::new(payload);
    let version = r.u16()?;
    if version != WIRE_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let kind = r.u8()?;
    let msg = match kind {
        0 => Message::Request(read_request(&mut r)?),
        1 => Message::Accepted { mission_id: r.u64()? },
        2 => {
            let mission_id = r.u64()?;
            let phase = match r.u8()? {
                0 => FeedbackPhase::Deployed,
                1 => FeedbackPhase::Exploring,
                other => return Err(Error::Malformed(format!("bad feedback phase {other}"))),
            };
            Message::Feedback { mission_id, phase }
        }
        3 => {
            let mission_id = r.u64()?;
            let success = match r.u8()? {
                0 => false,
                1 => true,
                other => return Err(Error::Malformed(format!("bad bool {other}"))),
            };
            let n = r.u32()? as usize;
            if n > 10_000_000 {
                return Err(Error::Malformed("implausible frontier count".into()));
            }
            let mut reached_frontiers = Vec::with_capacity(n);
            for _ in 0..n {
                reached_frontiers.push(r.u32()?);
            }
            let dupes: BTreeSet<u32> = reached_frontiers.iter().copied().collect();
            if dupes.len() != reached_frontiers.len() {
                return Err(Error::InvalidMessage("duplicate reached frontier".into()));
            }
            let newly_free_voxels = r.u64()?;
            Message::Result(MissionResult {
                mission_id,
                success,
                reached_frontiers,
                newly_free_voxels,
            })
        }
        4 => {
            let mission_id = r.u64()?;
            let reason = match r.u8()? {
                0 => RejectReason::Busy,
                1 => RejectReason::InvalidRequest,
                2 => RejectReason::UnsupportedGraph,
                other => return Err(Error::Malformed(format!("bad reject reason {other}"))),
            };
            Message::Reject { mission_id, reason }
        }
        other => return Err(Error::Malformed(format!("unknown message kind {other}"))),
    };
    r.finish()?;
    Ok(msg)
}

/// Frames a payload for a byte stream: u32 LE length prefix.
pub fn encode_frame(msg: &Message) -> Vec<u8> {
    let payload = encode_message(msg);
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

// ---------------------------------------------------------------------------
// Transports
// ---------------------------------------------------------------------------

pub trait Transport {
    fn send(&mut self, msg: &Message) -> Result<()>;
    fn recv(&mut self, timeout: Duration) -> Result<Message>;
}

/// In-process transport over a pair of byte-buffer channels; every message
/// round-trips through the codec.
pub struct QueueTransport {
    tx: Sender<Vec<u8>>,
    rx: Receiver<Vec<u8>>,
}

/// Two connected in-process endpoints.
pub fn queue_pair() -> (QueueTransport, QueueTransport) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    (QueueTransport { tx: tx_a, rx: rx_a }, QueueTransport { tx: tx_b, rx: rx_b })
}

impl Transport for QueueTransport {
    fn send(&mut self, msg: &Message) -> Result<()> {
        self.tx.send(encode_message(msg)).map_err(|_| Error::TransportClosed)
    }

    fn recv(&mut self, timeout: Duration) -> Result<Message> {
        match self.rx.recv_timeout(timeout) {
            Ok(payload) => decode_message(&payload),
            Err(RecvTimeoutError::Timeout) => Err(Error::Timeout("queue message".into())),
            Err(RecvTimeoutError::Disconnected) => Err(Error::TransportClosed),
        }
    }
}

/// Length-framed TCP transport.
pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self> {
        Ok(Self { stream: TcpStream::connect(addr)? })
    }

    pub fn from_stream(stream: TcpStream) -> Self {
        Self { stream }
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, msg: &Message) -> Result<()> {
        self.stream.write_all(&encode_frame(msg))?;
        Ok(())
    }

    fn recv(&mut self, timeout: Duration) -> Result<Message> {
        self.stream.set_read_timeout(Some(timeout))?;
        let mut header = [0u8; 4];
        read_exact_mapped(&mut self.stream, &mut header)?;
        let len = u32::from_le_bytes(header) as usize;
        if len > 64 << 20 {
            return Err(Error::Malformed("frame too large".into()));
        }
        let mut payload = vec![0u8; len];
        read_exact_mapped(&mut self.stream, &mut payload)?;
        decode_message(&payload)
    }
}

fn read_exact_mapped(stream: &mut TcpStream, buf: &mut [u8]) -> Result<()> {
    stream.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut => {
            Error::Timeout("tcp frame".into())
        }
        std::io::ErrorKind::UnexpectedEof => Error::TransportClosed,
        _ => Error::Io(e),
    })
}

// ---------------------------------------------------------------------------
// Action state machines
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClientState {
    Idle,
    RequestSent,
    Accepted,
    Deployed,
    Done,
    Rejected,
}

/// Pure requester state machine: feed it every received message; illegal
/// transitions are errors, terminal states are `Done` and `Rejected`.
#[derive(Debug)]
pub struct ClientMachine {
    pub state: ClientState,
    mission_id: u64,
    pub result: Option<MissionResult>,
    pub reject_reason: Option<RejectReason>,
}

impl ClientMachine {
    pub fn new(mission_id: u64) -> Self {
        Self { state: ClientState::Idle, mission_id, result: None, reject_reason: None }
    }

    pub fn on_request_sent(&mut self) -> Result<()> {
        if self.state != ClientState::Idle {
            return Err(Error::Contract("request already sent".into()));
        }
        self.state = ClientState::RequestSent;
        Ok(())
    }

    pub fn on_message(&mut self, msg: &Message) -> Result<()> {
        if msg.mission_id() != self.mission_id {
            return Err(Error::InvalidMessage(format!(
                "mission id {} does not match {}",
                msg.mission_id(),
                self.mission_id
            )));
        }
        let bad = |state: ClientState, msg: &Message| {
            Err(Error::InvalidMessage(format!("unexpected {msg:?} in state {state:?}")))
        };
        match (self.state, msg) {
            (ClientState::RequestSent, Message::Accepted { .. }) => {
                self.state = ClientState::Accepted;
                Ok(())
            }
            (ClientState::RequestSent, Message::Reject { reason, .. }) => {
                self.state = ClientState::Rejected;
                self.reject_reason = Some(*reason);
                Ok(())
            }
            (ClientState::Accepted, Message::Feedback { phase: FeedbackPhase::Deployed, .. }) => {
                self.state = ClientState::Deployed;
                Ok(())
            }
            (ClientState::Deployed, Message::Feedback { phase: FeedbackPhase::Exploring, .. }) => {
                Ok(())
            }
            (ClientState::Deployed, Message::Result(res)) => {
                self.state = ClientState::Done;
                self.result = Some(res.clone());
                Ok(())
            }
            (state, msg) => bad(state, msg),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.state, ClientState::Done | ClientState::Rejected)
    }
}

/// Drives a deployment request to completion over a transport. Returns the
/// mission result, or `Error::Mission` on rejection.
pub fn run_action_client<T: Transport>(
    transport: &mut T,
    request: UnifiedGraphMessage,
    timeout: Duration,
) -> Result<MissionResult> {
    let mut machine = ClientMachine::new(request.mission_id);
    transport.send(&Message::Request(request))?;
    machine.on_request_sent()?;
    while !machine.is_terminal() {
        let msg = match transport.recv(timeout) {
            Ok(m) => m,
            Err(e @ Error::Timeout(_)) => {
                machine.state = ClientState::Rejected;
                return Err(e);
            }
            Err(e) => return Err(e),
        };
        machine.on_message(&msg)?;
    }
    match machine.state {
        ClientState::Done => Ok(machine.result.unwrap()),
        _ => Err(Error::Mission(format!(
            "deployment rejected: {:?}",
            machine.reject_reason.unwrap_or(RejectReason::InvalidRequest)
        ))),
    }
}

/// Server-side mission logic: vet the request, then execute it, reporting
/// progress pulses and a final result.
pub trait MissionHandler {
    fn on_request(&mut self, req: &UnifiedGraphMessage) -> std::result::Result<(), RejectReason>;
    /// Runs the mission; returns per-pulse exploring feedback count and the
    /// final result.
    fn execute(&mut self, req: &UnifiedGraphMessage) -> (usize, MissionResult);
}

/// Serves exactly one deployment request.
pub fn run_action_server<T: Transport>(
    transport: &mut T,
    handler: &mut dyn MissionHandler,
    timeout: Duration,
) -> Result<()> {
    let msg = transport.recv(timeout)?;
    let Message::Request(req) = msg else {
        return Err(Error::InvalidMessage(format!("expected request, got {msg:?}")));
    };
    let mission_id = req.mission_id;
    if let Err(reason) = handler.on_request(&req) {
        transport.send(&Message::Reject { mission_id, reason })?;
        return Ok(());
    }
    transport.send(&Message::Accepted { mission_id })?;
    transport.send(&Message::Feedback { mission_id, phase: FeedbackPhase::Deployed })?;
    let (pulses, result) = handler.execute(&req);
    for _ in 0..pulses {
        transport.send(&Message::Feedback { mission_id, phase: FeedbackPhase::Exploring })?;
    }
    if result.mission_id != mission_id {
        return Err(Error::Contract("handler result carries wrong mission id".into()));
    }
    transport.send(&Message::Result(result))?;
    Ok(())
}
