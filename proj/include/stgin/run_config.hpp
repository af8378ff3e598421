#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stgin/data.hpp"
#include "stgin/stgin.hpp"
#include "stgin/train.hpp"

namespace stgin {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every recognised key with its default, in echo order.
const std::vector<ConfigKey>& config_keys();

/// Flat key = value settings. Files hold one pair per line; '#' starts a
/// comment. Unknown keys and malformed values raise ConfigError.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  std::string text(const std::string& key) const;
  std::filesystem::path path(const std::string& key) const;  // empty when unset
  std::size_t size(const std::string& key) const;
  double real(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::vector<std::size_t> size_list(const std::string& key) const;

  /// Every key in table order, in the file format load_file reads.
  std::string echo() const;

 private:
  std::map<std::string, std::string> values_;
};

StginDims dims_from(const RunConfig& config, std::size_t nodes);
TrainConfig train_from(const RunConfig& config);
SynthConfig synth_from(const RunConfig& config);

}  // namespace stgin
