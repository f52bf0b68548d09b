/// Protocol timing knobs. The route-reply lifetime defaults to a value that
/// survives desk-scale runs; shorter lifetimes are available as a scenario
/// override for stress fixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AodvConfig {
    pub active_route_ms: u64,
    pub seen_rreq_ms: u64,
    pub discovery_timeout_ms: u64,
    pub discovery_retries: u32,
    pub hello_interval_ms: u64,
    pub allowed_hello_loss: u32,
    pub rrep_lifetime_ms: u64,
    /// When set, generated RREPs carry the A flag and receivers answer with
    /// RREP-ACK.
    pub request_ack: bool,
}

impl Default for AodvConfig {
    fn default() -> Self {
        AodvConfig {
            active_route_ms: 3000,
            seen_rreq_ms: 3000,
            discovery_timeout_ms: 1000,
            discovery_retries: 2,
            hello_interval_ms: 1000,
            allowed_hello_loss: 2,
            rrep_lifetime_ms: 3000,
            request_ack: false,
        }
    }
}
