#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowwarden/features.hpp"
#include "flowwarden/flow.hpp"

namespace fw {

// A replayable corpus: time-sorted flows and device-log events, plus
// optional ground-truth labels keyed by window id (evaluation only).
struct TraceDataset {
    std::vector<FlowRecord> flows;
    std::vector<DeviceLogEvent> logs;
    std::map<WindowId, TrafficLabel> labels;

    void sort_by_time();
};

// Flow-record file (.fw): 16 tab-separated fields per line, '#' header.
std::vector<FlowRecord> parse_flow_records(const std::string& text);
std::string format_flow_records(const std::vector<FlowRecord>& flows);
std::string flow_record_line(const FlowRecord& f);

// Device-log file (.fwl): 4 tab-separated fields per line.
std::vector<DeviceLogEvent> parse_device_logs(const std::string& text);
std::string format_device_logs(const std::vector<DeviceLogEvent>& logs);

// Labels sidecar (.fwy): window_id <TAB> label.
std::map<WindowId, TrafficLabel> parse_labels(const std::string& text);
std::string format_labels(const std::map<WindowId, TrafficLabel>& labels);

enum class TraceFormat { Records, Logs };

// Loads one part of a dataset; output is time-sorted. Malformed lines abort
// with the first offending line number; an empty file is an empty sequence.
TraceDataset load_trace(const std::string& path, TraceFormat format);

TraceDataset load_dataset(const std::string& flows_path,
                          const std::string& logs_path = "",
                          const std::string& labels_path = "");

void save_dataset(const TraceDataset& ds, const std::string& flows_path,
                  const std::string& logs_path = "",
                  const std::string& labels_path = "");

// Concatenates datasets (device sets should be disjoint), re-sorting by time.
TraceDataset merge(const std::vector<TraceDataset>& parts);

// Splits by device-window so no window straddles the boundary; deterministic
// for a fixed seed. Throws if fewer than 2 windows exist.
std::pair<TraceDataset, TraceDataset> split(const TraceDataset& dataset,
                                            double train_fraction, std::uint64_t seed,
                                            const AggregationConfig& config = {});

}  // namespace fw
