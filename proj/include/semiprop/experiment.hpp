#pragma once

#include <map>
#include <string>
#include <vector>

#include "semiprop/types.hpp"

namespace semiprop {

// Flat key-value config with [section] headers; keys become "section.key".
// Unknown keys are errors at run time (each runner declares what it reads).
class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::string> get_words(const std::string& key) const;

  void set(const std::string& key, const std::string& value);
  // Throws if any stored key was never requested through a getter.
  void check_all_consumed() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::map<std::string, bool> consumed_;
};

struct RateFit {
  double slope = 0;
  double intercept = 0;
  double stderr_slope = 0;
  int points_used = 0;
};

// Least squares of log|err| against log hbar; points within 10x the floor are
// dropped (oracle noise).
RateFit fit_rate(const std::vector<double>& hbars, const std::vector<double>& errors,
                 double floor);

// Dispatch for the CLI subcommands: propagate, hk-kernel, vanvleck,
// statphase-check, sweep, flow-check.  Writes CSV/JSON/log files into out_dir.
// Returns 0 on success.
int run_command(const std::string& command, const std::string& config_path,
                const std::string& out_dir, int threads, unsigned long seed);

}  // namespace semiprop
