#include "flowwarden/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include "flowwarden/textio.hpp"

namespace fw {

namespace {

constexpr const char* kRecordsHeader = "#flowwarden-records v1";
constexpr const char* kRecordsFields =
    "#timestamp\tsrc_mac\tdst_mac\tsrc_ip\tdst_ip\tsrc_port\tdst_port\tprotocol"
    "\ttcp_flags\tbytes_src2dst\tbytes_dst2src\tpackets\tduration\terrors"
    "\tip_opts\turgent";
constexpr const char* kLogsHeader = "#flowwarden-logs v1";
constexpr const char* kLogsFields = "#timestamp\tdevice_mac\tkind\tsuccess";
constexpr const char* kLabelsHeader = "#flowwarden-labels v1";

std::string ip_opts_to_string(bool router_alert, bool padding) {
    if (router_alert && padding) return "RA|PAD";
    if (router_alert) return "RA";
    if (padding) return "PAD";
    return "-";
}

void parse_ip_opts(const std::string& text, FlowRecord& f) {
    f.router_alert = false;
    f.padding = false;
    if (text == "-") return;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t pos = text.find('|', start);
        std::string tok = text.substr(start, pos == std::string::npos ? pos : pos - start);
        if (tok == "RA") f.router_alert = true;
        else if (tok == "PAD") f.padding = true;
        else throw std::runtime_error("unknown ip option: " + tok);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
}

[[noreturn]] void line_error(std::size_t line_no, const std::string& line, const std::string& why) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + why + " in '" + line + "'");
}

}  // namespace

void TraceDataset::sort_by_time() {
    std::stable_sort(flows.begin(), flows.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(logs.begin(), logs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
}

std::string flow_record_line(const FlowRecord& f) {
    std::string out;
    out.reserve(160);
    out += dec6(f.timestamp);
    out += '\t';
    out += to_string(f.src_mac);
    out += '\t';
    out += to_string(f.dst_mac);
    out += '\t';
    out += f.src_ip;
    out += '\t';
    out += f.dst_ip;
    out += '\t';
    out += std::to_string(f.src_port);
    out += '\t';
    out += std::to_string(f.dst_port);
    out += '\t';
    out += to_string(f.protocol);
    out += '\t';
    out += tcp_flags_to_string(f.tcp_flags);
    out += '\t';
    out += std::to_string(f.bytes_src2dst);
    out += '\t';
    out += std::to_string(f.bytes_dst2src);
    out += '\t';
    out += std::to_string(f.packets);
    out += '\t';
    out += dec6(f.duration);
    out += '\t';
    out += errors_to_string(f.errors);
    out += '\t';
    out += ip_opts_to_string(f.router_alert, f.padding);
    out += '\t';
    out += f.urgent ? '1' : '0';
    return out;
}

std::string format_flow_records(const std::vector<FlowRecord>& flows) {
    std::string out;
    out += kRecordsHeader;
    out += '\n';
    out += kRecordsFields;
    out += '\n';
    for (const auto& f : flows) {
        out += flow_record_line(f);
        out += '\n';
    }
    return out;
}

std::vector<FlowRecord> parse_flow_records(const std::string& text) {
    std::vector<FlowRecord> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = text.substr(start, end == std::string::npos ? end : end - start);
        start = end == std::string::npos ? text.size() : end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.size() != 16) {
            line_error(line_no, line,
                       "expected 16 fields, got " + std::to_string(fields.size()));
        }
        FlowRecord f;
        try {
            f.timestamp = parse_double(fields[0], "timestamp");
            f.src_mac = parse_mac(fields[1]);
            f.dst_mac = parse_mac(fields[2]);
            f.src_ip = fields[3];
            f.dst_ip = fields[4];
            f.src_port = static_cast<std::uint16_t>(parse_u64(fields[5], "src_port"));
            f.dst_port = static_cast<std::uint16_t>(parse_u64(fields[6], "dst_port"));
            f.protocol = parse_protocol(fields[7]);
            f.tcp_flags = parse_tcp_flags(fields[8]);
            f.bytes_src2dst = parse_u64(fields[9], "bytes_src2dst");
            f.bytes_dst2src = parse_u64(fields[10], "bytes_dst2src");
            f.packets = parse_u64(fields[11], "packets");
            f.duration = parse_double(fields[12], "duration");
            f.errors = parse_errors(fields[13]);
            parse_ip_opts(fields[14], f);
            f.urgent = parse_int(fields[15], "urgent") != 0;
        } catch (const std::exception& e) {
            line_error(line_no, line, e.what());
        }
        out.push_back(std::move(f));
    }
    return out;
}

std::string format_device_logs(const std::vector<DeviceLogEvent>& logs) {
    std::string out;
    out += kLogsHeader;
    out += '\n';
    out += kLogsFields;
    out += '\n';
    for (const auto& ev : logs) {
        out += dec6(ev.timestamp);
        out += '\t';
        out += to_string(ev.device_mac);
        out += '\t';
        out += to_string(ev.kind);
        out += '\t';
        out += ev.success ? '1' : '0';
        out += '\n';
    }
    return out;
}

std::vector<DeviceLogEvent> parse_device_logs(const std::string& text) {
    std::vector<DeviceLogEvent> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = text.substr(start, end == std::string::npos ? end : end - start);
        start = end == std::string::npos ? text.size() : end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.size() != 4) {
            line_error(line_no, line, "expected 4 fields, got " + std::to_string(fields.size()));
        }
        DeviceLogEvent ev;
        try {
            ev.timestamp = parse_double(fields[0], "timestamp");
            ev.device_mac = parse_mac(fields[1]);
            ev.kind = parse_log_event_kind(fields[2]);
            ev.success = parse_int(fields[3], "success") != 0;
        } catch (const std::exception& e) {
            line_error(line_no, line, e.what());
        }
        out.push_back(ev);
    }
    return out;
}

std::string format_labels(const std::map<WindowId, TrafficLabel>& labels) {
    std::string out;
    out += kLabelsHeader;
    out += '\n';
    for (const auto& [id, label] : labels) {
        out += to_string(id);
        out += '\t';
        out += to_string(label);
        out += '\n';
    }
    return out;
}

std::map<WindowId, TrafficLabel> parse_labels(const std::string& text) {
    std::map<WindowId, TrafficLabel> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        std::string line = text.substr(start, end == std::string::npos ? end : end - start);
        start = end == std::string::npos ? text.size() : end + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_fields(line);
        if (fields.size() != 2) {
            line_error(line_no, line, "expected 2 fields, got " + std::to_string(fields.size()));
        }
        try {
            out[parse_window_id(fields[0])] = parse_label(fields[1]);
        } catch (const std::exception& e) {
            line_error(line_no, line, e.what());
        }
    }
    return out;
}

TraceDataset load_trace(const std::string& path, TraceFormat format) {
    TraceDataset ds;
    const std::string text = read_file(path);
    if (format == TraceFormat::Records) {
        ds.flows = parse_flow_records(text);
    } else {
        ds.logs = parse_device_logs(text);
    }
    ds.sort_by_time();
    return ds;
}

TraceDataset load_dataset(const std::string& flows_path, const std::string& logs_path,
                          const std::string& labels_path) {
    TraceDataset ds;
    ds.flows = parse_flow_records(read_file(flows_path));
    if (!logs_path.empty()) ds.logs = parse_device_logs(read_file(logs_path));
    if (!labels_path.empty()) ds.labels = parse_labels(read_file(labels_path));
    ds.sort_by_time();
    return ds;
}

void save_dataset(const TraceDataset& ds, const std::string& flows_path,
                  const std::string& logs_path, const std::string& labels_path) {
    write_file(flows_path, format_flow_records(ds.flows));
    if (!logs_path.empty()) write_file(logs_path, format_device_logs(ds.logs));
    if (!labels_path.empty()) write_file(labels_path, format_labels(ds.labels));
}

TraceDataset merge(const std::vector<TraceDataset>& parts) {
    TraceDataset out;
    for (const auto& p : parts) {
        out.flows.insert(out.flows.end(), p.flows.begin(), p.flows.end());
        out.logs.insert(out.logs.end(), p.logs.begin(), p.logs.end());
        for (const auto& [id, label] : p.labels) out.labels[id] = label;
    }
    out.sort_by_time();
    return out;
}

std::pair<TraceDataset, TraceDataset> split(const TraceDataset& dataset,
                                            double train_fraction, std::uint64_t seed,
                                            const AggregationConfig& config) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train_fraction must be in (0, 1)");
    }

    // Window assignment mirrors the tumbling rule: per device, the i-th
    // connection (0-based) belongs to window i / n_conn.
    std::map<MacAddr, int> conn_seen;
    std::vector<WindowId> flow_window(dataset.flows.size());
    std::set<WindowId> all_windows;
    for (std::size_t i = 0; i < dataset.flows.size(); ++i) {
        const MacAddr dev = dataset.flows[i].src_mac;
        const int idx = conn_seen[dev]++ / config.n_conn;
        flow_window[i] = WindowId{dev, idx};
        all_windows.insert(flow_window[i]);
    }
    if (all_windows.size() < 2) {
        throw std::runtime_error("insufficient data to split: fewer than 2 windows");
    }

    std::vector<WindowId> pool(all_windows.begin(), all_windows.end());
    std::mt19937_64 rng(seed);
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
        std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(pool[i], pool[j]);
    }
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(pool.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, pool.size() - 1);
    std::set<WindowId> train_set(pool.begin(), pool.begin() + static_cast<long>(n_train));

    TraceDataset train, eval;
    // Original window indices re-map to consecutive indices per side, in
    // time order, matching what re-windowing the subset will produce.
    std::map<MacAddr, std::map<int, int>> train_remap, eval_remap;
    std::map<MacAddr, double> last_flow_ts;
    std::size_t log_pos = 0;
    std::map<MacAddr, std::vector<DeviceLogEvent>> pending_logs;

    auto logs_sorted = dataset.logs;  // already time-sorted by contract

    for (std::size_t i = 0; i < dataset.flows.size(); ++i) {
        const FlowRecord& f = dataset.flows[i];
        const WindowId& owner = flow_window[i];
        const bool to_train = train_set.count(owner) > 0;
        TraceDataset& side = to_train ? train : eval;
        auto& remap = to_train ? train_remap : eval_remap;
        auto& dev_map = remap[owner.device];
        if (!dev_map.count(owner.index)) {
            const int next = static_cast<int>(dev_map.size());
            dev_map[owner.index] = next;
        }
        // Log events up to this flow's timestamp follow the flow's side for
        // the event's own device (auth differencing attaches them there).
        while (log_pos < logs_sorted.size() && logs_sorted[log_pos].timestamp <= f.timestamp) {
            pending_logs[logs_sorted[log_pos].device_mac].push_back(logs_sorted[log_pos]);
            ++log_pos;
        }
        auto pend = pending_logs.find(f.src_mac);
        if (pend != pending_logs.end()) {
            side.logs.insert(side.logs.end(), pend->second.begin(), pend->second.end());
            pend->second.clear();
        }
        side.flows.push_back(f);
        last_flow_ts[f.src_mac] = f.timestamp;
    }
    // Events after a device's last flow are never consumed by a window; they
    // ride along with the eval side to keep load->save->load idempotent.
    while (log_pos < logs_sorted.size()) {
        pending_logs[logs_sorted[log_pos].device_mac].push_back(logs_sorted[log_pos]);
        ++log_pos;
    }
    for (auto& [mac, evs] : pending_logs) {
        eval.logs.insert(eval.logs.end(), evs.begin(), evs.end());
    }

    for (const auto& [id, label] : dataset.labels) {
        const bool to_train = train_set.count(id) > 0;
        auto& remap = to_train ? train_remap : eval_remap;
        auto dev_it = remap.find(id.device);
        if (dev_it == remap.end()) continue;
        auto idx_it = dev_it->second.find(id.index);
        if (idx_it == dev_it->second.end()) continue;
        (to_train ? train : eval).labels[WindowId{id.device, idx_it->second}] = label;
    }

    train.sort_by_time();
    eval.sort_by_time();
    return {std::move(train), std::move(eval)};
}

}  // namespace fw
