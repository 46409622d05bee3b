#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ordlab {

// Flat `key = value` experiment configuration, `#` comments. Unknown keys are
// rejected; defaults fill the gaps; the fully-resolved form is echoed into the
// output directory.
class ExperimentConfig {
 public:
  static ExperimentConfig defaults();
  static ExperimentConfig parse_text(const std::string& text, const std::string& origin);
  static ExperimentConfig parse_file(const std::string& path);

  void set(const std::string& key, const std::string& value);

  const std::string& get_str(const std::string& key) const;
  int64_t get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;  // comma separated
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  bool has_value(const std::string& key) const;  // non-empty
  std::string echo() const;                      // sorted key = value lines

  // referenced-file existence; called before a run dispatches
  void validate_files(const std::string& subcommand) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// parse + validate + echo to <run.output_dir>/config_resolved.txt
ExperimentConfig parse_config(const std::string& path);

void ensure_directory(const std::string& path);

}  // namespace ordlab
