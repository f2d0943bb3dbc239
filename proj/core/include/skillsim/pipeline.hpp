#pragma once

#include <functional>
#include <map>
#include <string>

#include "skillsim/evalkit.hpp"

namespace skillsim {

/// Line-oriented "key = value" pipeline configuration.
struct PipelineConfig {
  std::map<std::string, std::string> values;

  static PipelineConfig read(const std::string& path);

  const std::string& require(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool has(const std::string& key) const { return values.count(key) > 0; }
};

struct PipelineResult {
  MetricsReport metrics;
  std::map<std::string, bool> cached;  // stage name -> skipped via cache
  std::string metrics_path;
  std::string run_path;
  std::string encoder_path;
};

/// extract -> merge -> train-aux -> train-encoder -> index -> rank ->
/// evaluate, short-circuiting on failure. Stage outputs are cached under
/// out_dir/.stamps and skipped when the content hash of their inputs and
/// parameters is unchanged. `progress` receives one line per stage.
PipelineResult run_pipeline(
    const std::string& config_path,
    const std::function<void(const std::string&)>& progress = {});

}  // namespace skillsim
