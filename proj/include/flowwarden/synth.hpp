#pragma once

#include <cstdint>
#include <string>

#include "flowwarden/trace.hpp"

namespace fw {

// Generator rates, overridable from a key=value config file. Defaults are
// sized so every attack is unambiguous inside 50-connection windows at
// desk-scale durations (minutes, not hours).
struct ScenarioConfig {
    double heartbeat_period = 12.0;       // NTP keepalive per device
    double cloud_period = 4.0;            // HTTPS exchange with a cloud endpoint
    double dns_period = 25.0;
    double local_chatter_period = 45.0;   // mDNS/ARP background noise
    int cloud_endpoints_per_device = 3;
    int cloud_pool_size = 8;

    double scan_rate = 4.0;           // port-scan probes per second
    double sweep_rate = 4.0;          // port-sweep probes per second
    double address_sweep_rate = 3.0;  // host probes per second
    double botnet_probe_rate = 2.0;   // telnet fan-out probes per second
    double mitm_burst_period = 15.0;  // seconds between ARP storms
    double fuzz_rate = 3.0;           // fuzz requests per second
    double theft_period = 12.0;       // seconds between exfil sessions
    double malware_period = 6.0;      // seconds between upload sessions
    double syn_flood_rate = 15.0;     // SYNs per second
    double reneg_rate = 8.0;          // renegotiation storms per second

    static ScenarioConfig from_kv_text(const std::string& text);
};

// Deterministic synthetic trace: benign background on every device
// (heartbeats plus HTTPS to a small shared pool of cloud endpoints), and for
// malicious scenarios an attacker (device 0) overlaying the attack's flow
// signature. Ground-truth labels cover every window the aggregation config
// will produce: attacker windows carry the scenario, all others BENIGN.
TraceDataset generate_synthetic(TrafficLabel scenario, int device_count, double duration,
                                std::uint64_t seed, const ScenarioConfig& config = {},
                                const AggregationConfig& agg = {});

// Convenience corpus: one sub-dataset per Table-style attack scenario plus a
// benign-only population, merged with disjoint device sets.
TraceDataset generate_mixed(int devices_per_scenario, double duration, std::uint64_t seed,
                            const ScenarioConfig& config = {},
                            const AggregationConfig& agg = {});

}  // namespace fw
