use crate::exchange::{DepthSnapshot, ExecutionReport, LastTrade, Order, OrderId};

use super::{AgentId, SimTime};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    SubmitLimit(Order),
    SubmitMarket(Order),
    Cancel(OrderId),
    /// Ask the exchange for an L2 snapshot with at most `levels` levels per side.
    QueryDepth { levels: usize },
    QueryLastTrade,
    /// Self-addressed timer; the tag lets an agent tell its timers apart.
    Wakeup(u64),
    DepthReply(Box<DepthSnapshot>),
    LastTradeReply(Option<LastTrade>),
    ExecutionReport(ExecutionReport),
    CancelAck { order_id: OrderId, cancelled: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PayloadKind {
    SubmitLimit,
    SubmitMarket,
    Cancel,
    QueryDepth,
    QueryLastTrade,
    Wakeup,
    DepthReply,
    LastTradeReply,
    ExecutionReport,
    CancelAck,
}

impl PayloadKind {
    pub const COUNT: usize = 10;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::SubmitLimit => "SubmitLimit",
            PayloadKind::SubmitMarket => "SubmitMarket",
            PayloadKind::Cancel => "Cancel",
            PayloadKind::QueryDepth => "QueryDepth",
            PayloadKind::QueryLastTrade => "QueryLastTrade",
            PayloadKind::Wakeup => "Wakeup",
            PayloadKind::DepthReply => "DepthReply",
            PayloadKind::LastTradeReply => "LastTradeReply",
            PayloadKind::ExecutionReport => "ExecutionReport",
            PayloadKind::CancelAck => "CancelAck",
        }
    }
}

impl Payload {
    pub fn kind(&self) -> PayloadKind {
        match self {
            Payload::SubmitLimit(_) => PayloadKind::SubmitLimit,
            Payload::SubmitMarket(_) => PayloadKind::SubmitMarket,
            Payload::Cancel(_) => PayloadKind::Cancel,
            Payload::QueryDepth { .. } => PayloadKind::QueryDepth,
            Payload::QueryLastTrade => PayloadKind::QueryLastTrade,
            Payload::Wakeup(_) => PayloadKind::Wakeup,
            Payload::DepthReply(_) => PayloadKind::DepthReply,
            Payload::LastTradeReply(_) => PayloadKind::LastTradeReply,
            Payload::ExecutionReport(_) => PayloadKind::ExecutionReport,
            Payload::CancelAck { .. } => PayloadKind::CancelAck,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: AgentId,
    pub recipient: AgentId,
    pub payload: Payload,
    pub deliver_at: SimTime,
    /// Kernel-wide insertion counter; breaks ties between equal delivery times.
    pub sequence: u64,
}
