#include "ordlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ordlab/errors.hpp"

namespace ordlab {

std::string format_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string metrics_csv(const MetricsLog& log) {
  std::string out = "run_id,epoch,step,train_loss,train_acc,test_loss,test_acc,l2_norm,K_current,t,wall_seconds\n";
  for (const auto& r : log.rows) {
    out += std::to_string(r.run_id) + ',' + std::to_string(r.epoch) + ',' + std::to_string(r.step) + ',' +
           format_double(r.train_loss) + ',' + format_double(r.train_acc) + ',' + format_double(r.test_loss) +
           ',' + format_double(r.test_acc) + ',' + format_double(r.l2_norm) + ',' +
           std::to_string(r.k_current) + ',' + format_double(r.t) + ',' + format_double(r.wall_seconds) + '\n';
  }
  return out;
}

std::string events_csv(const MetricsLog& log) {
  std::string out = "epoch,step,event,detail\n";
  for (const auto& e : log.events)
    out += std::to_string(e.epoch) + ',' + std::to_string(e.step) + ',' + e.name + ',' + e.detail + '\n';
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::runtime, "cannot open for writing: " + path);
  f << content;
  if (!f) fail(ErrorKind::runtime, "short write: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::runtime, "cannot open: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string strip_wall_seconds(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    const size_t cut = line.rfind(',');
    out += (cut == std::string::npos ? line : line.substr(0, cut)) + '\n';
  }
  return out;
}

std::vector<size_t> norm_spike_epochs(const std::vector<double>& norms) {
  std::vector<size_t> spikes;
  if (norms.size() < 3) return spikes;
  std::vector<double> deltas;
  for (size_t i = 1; i < norms.size(); ++i) deltas.push_back(std::abs(norms[i] - norms[i - 1]));
  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.size() % 2 == 1
                            ? sorted[sorted.size() / 2]
                            : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  for (size_t i = 0; i < deltas.size(); ++i)
    if (deltas[i] > 5.0 * median) spikes.push_back(i + 1);
  return spikes;
}

}  // namespace ordlab
