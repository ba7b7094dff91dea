#include "flowwarden/synth.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <stdexcept>

#include "flowwarden/textio.hpp"

namespace fw {

namespace {

constexpr double kEpochBase = 1700000000.0;

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    return x ^ (x >> 31);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    return lo + u * (hi - lo);
}

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

// Jittered periodic schedule over [0, duration).
std::vector<double> schedule(std::mt19937_64& rng, double period, double duration) {
    std::vector<double> times;
    double t = uniform(rng, 0.0, period);
    while (t < duration) {
        times.push_back(t);
        t += period * uniform(rng, 0.7, 1.3);
    }
    return times;
}

// Poisson-ish event times at a fixed mean rate.
std::vector<double> rate_schedule(std::mt19937_64& rng, double rate, double duration) {
    std::vector<double> times;
    if (rate <= 0.0) return times;
    double t = uniform(rng, 0.0, 1.0 / rate);
    while (t < duration) {
        times.push_back(t);
        t += uniform(rng, 0.3, 1.7) / rate;
    }
    return times;
}

MacAddr device_mac(TrafficLabel scenario, std::uint64_t seed, int index) {
    const std::uint64_t bits = (0x02ULL << 40) |
                               (static_cast<std::uint64_t>(label_code(scenario)) << 32) |
                               ((seed & 0xffULL) << 24) |
                               static_cast<std::uint64_t>(index & 0xffffff);
    return MacAddr{bits};
}

std::string device_ip(TrafficLabel scenario, int index) {
    return "10.77." + std::to_string(label_code(scenario)) + "." + std::to_string(index + 10);
}

std::string gateway_ip(TrafficLabel scenario) {
    return "10.77." + std::to_string(label_code(scenario)) + ".1";
}

std::string cloud_ip(int k) { return "52.10.0." + std::to_string(k + 1); }

MacAddr external_mac() { return MacAddr{0x02ffeeddccbbULL}; }
MacAddr gateway_mac(TrafficLabel scenario) {
    return MacAddr{(0x02aaULL << 32) | static_cast<std::uint64_t>(label_code(scenario))};
}

constexpr std::array<std::uint16_t, 20> kCommonPorts = {
    21, 22, 23, 25, 53, 80, 110, 139, 143, 443, 445, 993, 995, 1723, 3306,
    3389, 5900, 8080, 8443, 8883,
};

struct Generator {
    TrafficLabel scenario;
    int device_count;
    double duration;
    std::uint64_t seed;
    const ScenarioConfig& cfg;

    std::vector<FlowRecord> flows;
    std::vector<DeviceLogEvent> logs;

    std::mt19937_64 stream_rng(int device, std::uint32_t tag) const {
        return std::mt19937_64(
            mix(mix(seed, static_cast<std::uint64_t>(label_code(scenario))),
                (static_cast<std::uint64_t>(device) << 8) | tag));
    }

    FlowRecord base_flow(double t, int device) const {
        FlowRecord f;
        f.timestamp = kEpochBase + t;
        f.src_mac = device_mac(scenario, seed, device);
        f.src_ip = device_ip(scenario, device);
        return f;
    }

    void benign_background(int device) {
        // Cloud endpoints: a weighted pick over a small per-device subset of
        // the shared pool, concentrating traffic on few destinations.
        auto ep_rng = stream_rng(device, 'E');
        std::vector<int> endpoints;
        for (int k = 0; k < cfg.cloud_endpoints_per_device; ++k) {
            endpoints.push_back(static_cast<int>(pick(ep_rng, cfg.cloud_pool_size)));
        }

        auto hb = stream_rng(device, 'H');
        for (double t : schedule(hb, cfg.heartbeat_period, duration)) {
            FlowRecord f = base_flow(t, device);
            f.dst_mac = gateway_mac(scenario);
            f.dst_ip = cloud_ip(cfg.cloud_pool_size);  // shared time server
            f.src_port = static_cast<std::uint16_t>(40000 + pick(hb, 20000));
            f.dst_port = 123;
            f.protocol = Protocol::Ntp;
            f.packets = 2;
            f.bytes_src2dst = 90;
            f.bytes_dst2src = 90;
            f.duration = uniform(hb, 0.01, 0.08);
            flows.push_back(std::move(f));
        }

        auto cl = stream_rng(device, 'C');
        for (double t : schedule(cl, cfg.cloud_period, duration)) {
            FlowRecord f = base_flow(t, device);
            f.dst_mac = gateway_mac(scenario);
            // first endpoint dominates, mirroring single-service devices
            const double roll = uniform(cl, 0.0, 1.0);
            const int which = roll < 0.6 ? 0 : (roll < 0.85 ? 1 : 2);
            f.dst_ip = cloud_ip(endpoints[static_cast<std::size_t>(
                std::min(which, cfg.cloud_endpoints_per_device - 1))]);
            f.src_port = static_cast<std::uint16_t>(40000 + pick(cl, 20000));
            f.dst_port = 443;
            f.protocol = Protocol::Https;
            f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kFin;
            f.packets = 10 + pick(cl, 50);
            f.bytes_src2dst = 300 + pick(cl, 2700);
            f.bytes_dst2src = 2000 + pick(cl, 58000);
            f.duration = uniform(cl, 0.1, 3.0);
            flows.push_back(std::move(f));
        }

        auto dns = stream_rng(device, 'D');
        for (double t : schedule(dns, cfg.dns_period, duration)) {
            FlowRecord f = base_flow(t, device);
            f.dst_mac = gateway_mac(scenario);
            f.dst_ip = gateway_ip(scenario);
            f.src_port = static_cast<std::uint16_t>(40000 + pick(dns, 20000));
            f.dst_port = 53;
            f.protocol = Protocol::Dns;
            f.packets = 2;
            f.bytes_src2dst = 70;
            f.bytes_dst2src = 150;
            f.duration = uniform(dns, 0.001, 0.05);
            flows.push_back(std::move(f));
        }

        auto chat = stream_rng(device, 'L');
        bool arp_turn = false;
        for (double t : schedule(chat, cfg.local_chatter_period, duration)) {
            FlowRecord f = base_flow(t, device);
            if (arp_turn) {
                f.dst_mac = gateway_mac(scenario);
                f.dst_ip = gateway_ip(scenario);
                f.protocol = Protocol::Arp;
                f.packets = 2;
                f.bytes_src2dst = 56;
                f.bytes_dst2src = 56;
                f.duration = 0.0;
            } else {
                f.dst_mac = external_mac();
                f.dst_ip = "224.0.0.251";
                f.src_port = 5353;
                f.dst_port = 5353;
                f.protocol = Protocol::Mdns;
                f.packets = 1;
                f.bytes_src2dst = 120;
                f.bytes_dst2src = 0;
                f.duration = 0.0;
            }
            arp_turn = !arp_turn;
            flows.push_back(std::move(f));
        }

        // Occasional legitimate logins keep auth baselines nonzero.
        auto auth = stream_rng(device, 'A');
        for (double t : schedule(auth, 130.0, duration)) {
            DeviceLogEvent ev;
            ev.timestamp = kEpochBase + t;
            ev.device_mac = device_mac(scenario, seed, device);
            ev.kind = LogEventKind::DeviceLogin;
            ev.success = true;
            logs.push_back(ev);
        }
    }

    int target_device() const { return device_count > 1 ? 1 : 0; }

    std::string target_ip(std::mt19937_64& rng, bool spread) const {
        if (device_count > 1) {
            const int victim =
                spread ? 1 + static_cast<int>(pick(rng, device_count - 1)) : target_device();
            return device_ip(scenario, victim);
        }
        return "192.0.2." + std::to_string(2 + pick(rng, 200));
    }

    MacAddr target_mac_for(const std::string& ip) const {
        for (int d = 0; d < device_count; ++d) {
            if (ip == device_ip(scenario, d)) return device_mac(scenario, seed, d);
        }
        return external_mac();
    }

    void attack_overlay() {
        const int attacker = 0;
        auto rng = stream_rng(attacker, 'X');
        switch (scenario) {
            case TrafficLabel::Benign:
                return;
            case TrafficLabel::PortScan: {
                // open-port hunt across hosts: common ports, many targets
                for (double t : rate_schedule(rng, cfg.scan_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, true);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = pick(rng, 10) < 6
                                     ? kCommonPorts[pick(rng, kCommonPorts.size())]
                                     : static_cast<std::uint16_t>(1 + pick(rng, 1024));
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn;
                    f.packets = 1 + pick(rng, 2);
                    f.bytes_src2dst = 60;
                    f.bytes_dst2src = pick(rng, 10) < 3 ? 60 : 0;
                    f.duration = uniform(rng, 0.0, 0.02);
                    f.errors = pick(rng, 10) < 7 ? conn_error::kSyn : conn_error::kRej;
                    flows.push_back(std::move(f));
                }
                break;
            }
            case TrafficLabel::PortSweep: {
                // every port on one target, in order
                std::uint16_t port = 1;
                for (double t : rate_schedule(rng, cfg.sweep_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, false);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = port++;
                    if (port == 0) port = 1;
                    f.protocol = pick(rng, 4) == 0 ? Protocol::Udp : Protocol::Tcp;
                    if (f.protocol == Protocol::Tcp) f.tcp_flags = tcpflag::kSyn;
                    f.packets = 1;
                    f.bytes_src2dst = 60;
                    f.bytes_dst2src = 0;
                    f.duration = uniform(rng, 0.0, 0.01);
                    f.errors = pick(rng, 10) < 8 ? conn_error::kSyn : conn_error::kRej;
                    flows.push_back(std::move(f));
                }
                break;
            }
            case TrafficLabel::AddressSweep: {
                // host discovery across the subnet
                int host = 2;
                for (double t : rate_schedule(rng, cfg.address_sweep_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = "10.77." + std::to_string(label_code(scenario)) + "." +
                               std::to_string(host);
                    host = host >= 250 ? 2 : host + 1;
                    f.dst_mac = target_mac_for(f.dst_ip);
                    const int kind = static_cast<int>(pick(rng, 3));
                    if (kind == 0) {
                        f.protocol = Protocol::Arp;
                        f.packets = 1;
                        f.bytes_src2dst = 56;
                    } else if (kind == 1) {
                        f.protocol = Protocol::Icmp;
                        f.packets = 2;
                        f.bytes_src2dst = 128;
                        f.bytes_dst2src = pick(rng, 4) == 0 ? 128 : 0;
                    } else {
                        f.protocol = Protocol::Tcp;
                        f.tcp_flags = tcpflag::kSyn;
                        f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                        f.dst_port = 80;
                        f.packets = 1;
                        f.bytes_src2dst = 60;
                        f.errors = conn_error::kSyn;
                    }
                    f.duration = uniform(rng, 0.0, 0.02);
                    flows.push_back(std::move(f));
                }
                break;
            }
            case TrafficLabel::Botnet: {
                // telnet fan-out probes plus a steady C2 keepalive
                for (double t : rate_schedule(rng, cfg.botnet_probe_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    if (pick(rng, 3) == 0) {
                        f.dst_ip = target_ip(rng, true);
                    } else {
                        f.dst_ip = "203.0.113." + std::to_string(2 + pick(rng, 250));
                    }
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = 23;
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn;
                    f.packets = 1 + pick(rng, 3);
                    f.bytes_src2dst = 60 + pick(rng, 60);
                    f.bytes_dst2src = 0;
                    f.duration = uniform(rng, 0.0, 0.05);
                    f.errors = pick(rng, 10) < 6 ? conn_error::kRej : conn_error::kSyn;
                    flows.push_back(std::move(f));
                }
                auto c2 = stream_rng(attacker, 'Y');
                for (double t : schedule(c2, 20.0, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_mac = external_mac();
                    f.dst_ip = "198.51.100.66";
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(c2, 20000));
                    f.dst_port = 6667;
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kPsh;
                    f.packets = 4 + pick(c2, 8);
                    f.bytes_src2dst = 200 + pick(c2, 400);
                    f.bytes_dst2src = 100 + pick(c2, 300);
                    f.duration = uniform(c2, 0.2, 2.0);
                    flows.push_back(std::move(f));
                }
                break;
            }
            case TrafficLabel::Mitm: {
                // periodic gratuitous-ARP storms over the whole subnet
                auto burst_rng = stream_rng(attacker, 'B');
                for (double t0 : schedule(burst_rng, cfg.mitm_burst_period, duration)) {
                    const int storm = 3 * std::max(2, device_count);
                    for (int s = 0; s < storm; ++s) {
                        const double t = t0 + 0.05 * s;
                        if (t >= duration) break;
                        FlowRecord f = base_flow(t, attacker);
                        const int victim = static_cast<int>(pick(burst_rng, std::max(1, device_count)));
                        f.dst_ip = device_ip(scenario, victim);
                        f.dst_mac = device_mac(scenario, seed, victim);
                        f.protocol = Protocol::Arp;
                        f.packets = 8 + pick(burst_rng, 30);
                        f.bytes_src2dst = 56 * f.packets;
                        f.duration = 0.0;
                        flows.push_back(std::move(f));
                    }
                }
                break;
            }
            case TrafficLabel::Fuzzing: {
                // hammer one service with malformed requests; the gateway
                // correlates the victim's failed service logins to the
                // initiating device, so the events carry the attacker's MAC
                for (double t : rate_schedule(rng, cfg.fuzz_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, false);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = 80;
                    f.protocol = Protocol::Http;
                    f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kPsh;
                    f.packets = 3 + pick(rng, 10);
                    f.bytes_src2dst = 200 + pick(rng, 1800);
                    f.bytes_dst2src = 150 + pick(rng, 350);
                    f.duration = uniform(rng, 0.01, 0.4);
                    if (pick(rng, 10) < 3) f.errors = conn_error::kRej;
                    if (pick(rng, 10) == 0) f.urgent = true;
                    if (pick(rng, 20) == 0) f.padding = true;
                    flows.push_back(std::move(f));

                    if (pick(rng, 2) == 0) {
                        DeviceLogEvent ev;
                        ev.timestamp = f.timestamp + 0.001;
                        ev.device_mac = device_mac(scenario, seed, attacker);
                        ev.kind = LogEventKind::ServiceLogin;
                        ev.success = pick(rng, 20) == 0;
                        logs.push_back(ev);
                    }
                }
                break;
            }
            case TrafficLabel::DataTheft: {
                // few long sessions pulling large volumes from the victim
                for (double t : schedule(rng, cfg.theft_period, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, false);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = 22;
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kPsh;
                    f.packets = 8000 + pick(rng, 22000);
                    f.bytes_src2dst = 2000 + pick(rng, 6000);
                    f.bytes_dst2src = 10000000 + pick(rng, 30000000);
                    f.duration = uniform(rng, 8.0, 25.0);
                    flows.push_back(std::move(f));

                    if (pick(rng, 3) == 0) {
                        DeviceLogEvent ev;
                        ev.timestamp = f.timestamp + 0.002;
                        ev.device_mac = device_mac(scenario, seed, attacker);
                        ev.kind = LogEventKind::SshLogin;
                        ev.success = true;
                        logs.push_back(ev);
                    }
                }
                break;
            }
            case TrafficLabel::MalwareInjection: {
                // repeated large uploads to local targets
                int cycle = 0;
                for (double t : schedule(rng, cfg.malware_period, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    const int victim = device_count > 1 ? 1 + (cycle++ % (device_count - 1)) : 0;
                    f.dst_ip = device_ip(scenario, victim);
                    f.dst_mac = device_mac(scenario, seed, victim);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = 445;
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kPsh;
                    f.packets = 800 + pick(rng, 3000);
                    f.bytes_src2dst = 1000000 + pick(rng, 4000000);
                    f.bytes_dst2src = 4000 + pick(rng, 8000);
                    f.duration = uniform(rng, 4.0, 18.0);
                    flows.push_back(std::move(f));

                    if (pick(rng, 4) == 0) {
                        DeviceLogEvent ev;
                        ev.timestamp = f.timestamp + 0.002;
                        ev.device_mac = device_mac(scenario, seed, attacker);
                        ev.kind = LogEventKind::SshLogin;
                        ev.success = pick(rng, 3) != 0;
                        logs.push_back(ev);
                    }
                }
                break;
            }
            case TrafficLabel::SynFlood: {
                for (double t : rate_schedule(rng, cfg.syn_flood_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, false);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(1024 + pick(rng, 60000));
                    f.dst_port = 80;
                    f.protocol = Protocol::Tcp;
                    f.tcp_flags = tcpflag::kSyn;
                    f.packets = 1;
                    f.bytes_src2dst = 60;
                    f.bytes_dst2src = 0;
                    f.duration = 0.0;
                    if (pick(rng, 100) < 85) f.errors = conn_error::kSyn;
                    flows.push_back(std::move(f));
                }
                break;
            }
            case TrafficLabel::SslReneg: {
                for (double t : rate_schedule(rng, cfg.reneg_rate, duration)) {
                    FlowRecord f = base_flow(t, attacker);
                    f.dst_ip = target_ip(rng, false);
                    f.dst_mac = target_mac_for(f.dst_ip);
                    f.src_port = static_cast<std::uint16_t>(40000 + pick(rng, 20000));
                    f.dst_port = 443;
                    f.protocol = Protocol::Https;
                    f.tcp_flags = tcpflag::kSyn | tcpflag::kAck | tcpflag::kPsh;
                    f.packets = 80 + pick(rng, 170);
                    f.bytes_src2dst = 4000 + pick(rng, 4000);
                    f.bytes_dst2src = 6000 + pick(rng, 6000);
                    f.duration = uniform(rng, 0.5, 2.0);
                    flows.push_back(std::move(f));
                }
                break;
            }
        }
    }
};

}  // namespace

ScenarioConfig ScenarioConfig::from_kv_text(const std::string& text) {
    ScenarioConfig cfg;
    for (const auto& [key, value] : parse_kv_lines(text)) {
        if (key == "heartbeat_period") cfg.heartbeat_period = parse_double(value, key.c_str());
        else if (key == "cloud_period") cfg.cloud_period = parse_double(value, key.c_str());
        else if (key == "dns_period") cfg.dns_period = parse_double(value, key.c_str());
        else if (key == "local_chatter_period")
            cfg.local_chatter_period = parse_double(value, key.c_str());
        else if (key == "cloud_endpoints_per_device")
            cfg.cloud_endpoints_per_device = parse_int(value, key.c_str());
        else if (key == "cloud_pool_size") cfg.cloud_pool_size = parse_int(value, key.c_str());
        else if (key == "scan_rate") cfg.scan_rate = parse_double(value, key.c_str());
        else if (key == "sweep_rate") cfg.sweep_rate = parse_double(value, key.c_str());
        else if (key == "address_sweep_rate")
            cfg.address_sweep_rate = parse_double(value, key.c_str());
        else if (key == "botnet_probe_rate")
            cfg.botnet_probe_rate = parse_double(value, key.c_str());
        else if (key == "mitm_burst_period")
            cfg.mitm_burst_period = parse_double(value, key.c_str());
        else if (key == "fuzz_rate") cfg.fuzz_rate = parse_double(value, key.c_str());
        else if (key == "theft_period") cfg.theft_period = parse_double(value, key.c_str());
        else if (key == "malware_period") cfg.malware_period = parse_double(value, key.c_str());
        else if (key == "syn_flood_rate") cfg.syn_flood_rate = parse_double(value, key.c_str());
        else if (key == "reneg_rate") cfg.reneg_rate = parse_double(value, key.c_str());
        else throw std::runtime_error("unknown scenario config key: " + key);
    }
    return cfg;
}

TraceDataset generate_synthetic(TrafficLabel scenario, int device_count, double duration,
                                std::uint64_t seed, const ScenarioConfig& config,
                                const AggregationConfig& agg) {
    if (device_count < 1) throw std::invalid_argument("device_count must be >= 1");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");

    Generator gen{scenario, device_count, duration, seed, config, {}, {}};
    for (int d = 0; d < device_count; ++d) gen.benign_background(d);
    gen.attack_overlay();

    TraceDataset ds;
    ds.flows = std::move(gen.flows);
    ds.logs = std::move(gen.logs);
    ds.sort_by_time();

    const MacAddr attacker = device_mac(scenario, seed, 0);
    for (const auto& w : window_flows(ds.flows, ds.logs, agg)) {
        ds.labels[w.id] = (scenario != TrafficLabel::Benign && w.id.device == attacker)
                              ? scenario
                              : TrafficLabel::Benign;
    }
    return ds;
}

TraceDataset generate_mixed(int devices_per_scenario, double duration, std::uint64_t seed,
                            const ScenarioConfig& config, const AggregationConfig& agg) {
    std::vector<TraceDataset> parts;
    for (int code = 0; code < kLabelCount; ++code) {
        parts.push_back(generate_synthetic(label_from_code(code), devices_per_scenario,
                                           duration, seed + static_cast<std::uint64_t>(code),
                                           config, agg));
    }
    return merge(parts);
}

}  // namespace fw
