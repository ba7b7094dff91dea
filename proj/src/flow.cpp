#include "flowwarden/flow.hpp"

#include <array>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace fw {

std::string to_string(MacAddr mac) {
    char buf[18];
    std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x",
                  static_cast<unsigned>((mac.bits >> 40) & 0xff),
                  static_cast<unsigned>((mac.bits >> 32) & 0xff),
                  static_cast<unsigned>((mac.bits >> 24) & 0xff),
                  static_cast<unsigned>((mac.bits >> 16) & 0xff),
                  static_cast<unsigned>((mac.bits >> 8) & 0xff),
                  static_cast<unsigned>(mac.bits & 0xff));
    return buf;
}

MacAddr parse_mac(const std::string& text) {
    unsigned b[6];
    if (std::sscanf(text.c_str(), "%x:%x:%x:%x:%x:%x",
                    &b[0], &b[1], &b[2], &b[3], &b[4], &b[5]) != 6) {
        throw std::runtime_error("bad MAC address: " + text);
    }
    std::uint64_t bits = 0;
    for (unsigned v : b) {
        if (v > 0xff) throw std::runtime_error("bad MAC address: " + text);
        bits = (bits << 8) | v;
    }
    return MacAddr{bits};
}

namespace {

constexpr std::array<const char*, kProtocolCount> kProtocolNames = {
    "ARP", "LLC", "IPv4", "IPv6", "ICMP", "ICMPv6", "EAPOL",
    "TCP", "UDP", "HTTP", "FTP", "HTTPS", "DHCP", "DNS", "MDNS", "NTP", "OTHER",
};

}  // namespace

const char* to_string(Protocol p) { return kProtocolNames[static_cast<int>(p)]; }

Protocol parse_protocol(const std::string& text) {
    for (int i = 0; i < kProtocolCount; ++i) {
        if (text == kProtocolNames[i]) return static_cast<Protocol>(i);
    }
    throw std::runtime_error("unknown protocol: " + text);
}

bool protocol_has_ports(Protocol p) {
    switch (p) {
        case Protocol::Tcp:
        case Protocol::Udp:
        case Protocol::Http:
        case Protocol::Ftp:
        case Protocol::Https:
        case Protocol::Dhcp:
        case Protocol::Dns:
        case Protocol::Mdns:
        case Protocol::Ntp:
        case Protocol::Other:
            return true;
        default:
            return false;
    }
}

namespace {

struct BitName {
    std::uint8_t bit;
    const char* name;
};

constexpr BitName kTcpFlagNames[] = {
    {tcpflag::kSyn, "SYN"}, {tcpflag::kAck, "ACK"}, {tcpflag::kFin, "FIN"},
    {tcpflag::kRst, "RST"}, {tcpflag::kUrg, "URG"}, {tcpflag::kPsh, "PSH"},
};

constexpr BitName kErrorNames[] = {
    {conn_error::kSyn, "SYN_ERROR"},
    {conn_error::kRej, "REJ_ERROR"},
};

template <std::size_t N>
std::string bits_to_string(std::uint8_t bits, const BitName (&names)[N]) {
    if (bits == 0) return "-";
    std::string out;
    for (const auto& bn : names) {
        if (bits & bn.bit) {
            if (!out.empty()) out += '|';
            out += bn.name;
        }
    }
    return out;
}

template <std::size_t N>
std::uint8_t bits_from_string(const std::string& text, const BitName (&names)[N],
                              const char* what) {
    if (text == "-" || text == "NONE") return 0;
    std::uint8_t bits = 0;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, '|')) {
        bool found = false;
        for (const auto& bn : names) {
            if (tok == bn.name) {
                bits |= bn.bit;
                found = true;
                break;
            }
        }
        if (!found) throw std::runtime_error(std::string("unknown ") + what + ": " + tok);
    }
    return bits;
}

}  // namespace

std::string tcp_flags_to_string(std::uint8_t flags) {
    return bits_to_string(flags, kTcpFlagNames);
}

std::uint8_t parse_tcp_flags(const std::string& text) {
    return bits_from_string(text, kTcpFlagNames, "tcp flag");
}

std::string errors_to_string(std::uint8_t errors) {
    return bits_to_string(errors, kErrorNames);
}

std::uint8_t parse_errors(const std::string& text) {
    return bits_from_string(text, kErrorNames, "error flag");
}

const char* to_string(LogEventKind k) {
    switch (k) {
        case LogEventKind::SshLogin: return "SSH_LOGIN";
        case LogEventKind::ServiceLogin: return "SERVICE_LOGIN";
        case LogEventKind::DeviceLogin: return "DEVICE_LOGIN";
    }
    return "?";
}

LogEventKind parse_log_event_kind(const std::string& text) {
    if (text == "SSH_LOGIN") return LogEventKind::SshLogin;
    if (text == "SERVICE_LOGIN") return LogEventKind::ServiceLogin;
    if (text == "DEVICE_LOGIN") return LogEventKind::DeviceLogin;
    throw std::runtime_error("unknown log event kind: " + text);
}

namespace {

constexpr std::array<const char*, kLabelCount> kLabelNames = {
    "BENIGN", "PORT_SCAN", "PORT_SWEEP", "ADDRESS_SWEEP", "BOTNET", "MITM",
    "FUZZING", "DATA_THEFT", "MALWARE_INJECTION", "SYN_FLOOD", "SSL_RENEG",
};

}  // namespace

TrafficLabel label_from_code(int code) {
    if (code < 0 || code >= kLabelCount) {
        throw std::runtime_error("traffic label code out of range: " + std::to_string(code));
    }
    return static_cast<TrafficLabel>(code);
}

const char* to_string(TrafficLabel l) { return kLabelNames[static_cast<int>(l)]; }

TrafficLabel parse_label(const std::string& text) {
    for (int i = 0; i < kLabelCount; ++i) {
        if (text == kLabelNames[i]) return static_cast<TrafficLabel>(i);
    }
    throw std::runtime_error("unknown traffic label: " + text);
}

ValidationResult validate_flow(const FlowRecord& r) {
    ValidationResult res;
    if (!protocol_has_ports(r.protocol) && (r.src_port != 0 || r.dst_port != 0)) {
        res.violations.push_back("port set on portless protocol");
    }
    if (r.duration < 0.0) res.violations.push_back("negative duration");
    if (r.packets < 1) res.violations.push_back("packet count below 1");
    if (r.src_ip.empty() || r.dst_ip.empty()) res.violations.push_back("missing endpoint address");
    return res;
}

}  // namespace fw
