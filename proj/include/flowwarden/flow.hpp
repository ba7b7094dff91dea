#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fw {

// 48-bit device identity. Devices are keyed by MAC throughout; IPs are
// routing detail, never identity.
struct MacAddr {
    std::uint64_t bits = 0;  // low 48 bits used

    friend bool operator==(const MacAddr&, const MacAddr&) = default;
    friend auto operator<=>(const MacAddr&, const MacAddr&) = default;
};

std::string to_string(MacAddr mac);
MacAddr parse_mac(const std::string& text);

enum class Protocol : std::uint8_t {
    Arp, Llc, IPv4, IPv6, Icmp, IcmpV6, Eapol,
    Tcp, Udp, Http, Ftp, Https, Dhcp, Dns, Mdns, Ntp, Other,
};
inline constexpr int kProtocolCount = 17;

const char* to_string(Protocol p);
Protocol parse_protocol(const std::string& text);

// True for protocols carried over TCP/UDP, i.e. those where a port number
// is meaningful. Other is unconstrained.
bool protocol_has_ports(Protocol p);

namespace tcpflag {
inline constexpr std::uint8_t kSyn = 1 << 0;
inline constexpr std::uint8_t kAck = 1 << 1;
inline constexpr std::uint8_t kFin = 1 << 2;
inline constexpr std::uint8_t kRst = 1 << 3;
inline constexpr std::uint8_t kUrg = 1 << 4;
inline constexpr std::uint8_t kPsh = 1 << 5;
}  // namespace tcpflag

std::string tcp_flags_to_string(std::uint8_t flags);
std::uint8_t parse_tcp_flags(const std::string& text);

namespace conn_error {
inline constexpr std::uint8_t kSyn = 1 << 0;  // SYN sent, never answered
inline constexpr std::uint8_t kRej = 1 << 1;  // connection rejected (RST)
}  // namespace conn_error

std::string errors_to_string(std::uint8_t errors);
std::uint8_t parse_errors(const std::string& text);

// One observed connection (or connectionless exchange) between two
// endpoints, as produced by an upstream flow exporter. Immutable value.
struct FlowRecord {
    double timestamp = 0.0;  // seconds since epoch, microsecond resolution
    MacAddr src_mac;
    MacAddr dst_mac;
    std::string src_ip;
    std::string dst_ip;
    std::uint16_t src_port = 0;  // 0 = no port concept (ARP, ICMP, ...)
    std::uint16_t dst_port = 0;
    Protocol protocol = Protocol::Other;
    std::uint8_t tcp_flags = 0;
    std::uint64_t bytes_src2dst = 0;
    std::uint64_t bytes_dst2src = 0;
    std::uint64_t packets = 1;
    double duration = 0.0;  // seconds
    std::uint8_t errors = 0;
    bool router_alert = false;
    bool padding = false;
    bool urgent = false;

    friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

enum class LogEventKind : std::uint8_t { SshLogin, ServiceLogin, DeviceLogin };

const char* to_string(LogEventKind k);
LogEventKind parse_log_event_kind(const std::string& text);

// One authentication event from a device log, time-aligned with the flow
// stream upstream of ingestion.
struct DeviceLogEvent {
    double timestamp = 0.0;
    MacAddr device_mac;
    LogEventKind kind = LogEventKind::SshLogin;
    bool success = false;

    friend bool operator==(const DeviceLogEvent&, const DeviceLogEvent&) = default;
};

// Traffic classes. Codes are the consequent variable of the rule base:
// stable small integers, BENIGN = 0, attacks 1..10.
enum class TrafficLabel : std::uint8_t {
    Benign = 0,
    PortScan = 1,
    PortSweep = 2,
    AddressSweep = 3,
    Botnet = 4,
    Mitm = 5,
    Fuzzing = 6,
    DataTheft = 7,
    MalwareInjection = 8,
    SynFlood = 9,
    SslReneg = 10,
};
inline constexpr int kLabelCount = 11;

inline int label_code(TrafficLabel l) { return static_cast<int>(l); }
TrafficLabel label_from_code(int code);
const char* to_string(TrafficLabel l);
TrafficLabel parse_label(const std::string& text);
inline bool is_malicious(TrafficLabel l) { return l != TrafficLabel::Benign; }

// Diagnostic validation: collects violated invariants, never throws.
struct ValidationResult {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationResult validate_flow(const FlowRecord& record);

}  // namespace fw
