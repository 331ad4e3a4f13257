#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stablelad/experiments.hpp"

namespace stablelad::cli {

/// Flat view of an INI-style config file: "[section]" headers, "key = value"
/// lines, '#' comments. Keys are exposed dotted as "section.key". Unknown
/// keys are rejected with the nearest known key suggested.
class ConfigMap {
 public:
  static ConfigMap from_file(const std::string& path);
  static ConfigMap from_string(const std::string& text);

  /// Applies a dotted-key override "section.key=value".
  void set_override(const std::string& assignment);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, std::optional<std::string> fallback = {}) const;
  double get_double(const std::string& key, std::optional<double> fallback = {}) const;
  std::size_t get_size(const std::string& key, std::optional<std::size_t> fallback = {}) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<std::string> get_tokens(const std::string& key) const;

  /// Throws ValidationError naming the first unknown key and its nearest
  /// known neighbour.
  void reject_unknown_keys() const;

  const std::map<std::string, std::string>& raw() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Object builders over the dotted-key grammar (documented in docs/formats.md).
LevyConfig build_levy(const ConfigMap& cfg);
ModelSpec build_model(const ConfigMap& cfg);
ModelLite build_model_lite(const ConfigMap& cfg);
SamplingDesign build_design(const ConfigMap& cfg, std::optional<std::size_t> n_override = {});
PowerVariationConfig build_pv(const ConfigMap& cfg);
RegressorKind build_regressor(const ConfigMap& cfg);
int config_fine_factor(const ConfigMap& cfg);
CampaignConfig build_campaign(const ConfigMap& cfg, const std::string& out_dir,
                              std::uint64_t base_seed);

}  // namespace stablelad::cli
