#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ordlab {

// One per-epoch row. K_current / t only move for the sum-augmentation runs.
struct MetricsRow {
  int run_id = 0;
  int64_t epoch = 0;
  int64_t step = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_loss = 0.0;
  double test_acc = 0.0;
  double l2_norm = 0.0;
  int k_current = 1;
  double t = 0.0;
  double wall_seconds = 0.0;
};

struct EventRow {
  int64_t epoch = 0;
  int64_t step = 0;
  std::string name;
  std::string detail;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;
  std::vector<EventRow> events;

  void add(MetricsRow row) { rows.push_back(std::move(row)); }
  void event(int64_t epoch, int64_t step, std::string name, std::string detail) {
    events.push_back(EventRow{epoch, step, std::move(name), std::move(detail)});
  }
  bool has_event(const std::string& name) const {
    for (const auto& e : events)
      if (e.name == name) return true;
    return false;
  }
};

std::string format_double(double v);

std::string metrics_csv(const MetricsLog& log);
std::string events_csv(const MetricsLog& log);
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// Drops the trailing wall_seconds field of every row; the determinism
// comparisons work on this view.
std::string strip_wall_seconds(const std::string& csv);

// Epoch indices whose |delta norm| exceeds 5x the median |delta norm|.
std::vector<size_t> norm_spike_epochs(const std::vector<double>& norms);

}  // namespace ordlab
