#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magwell/fieldlab.hpp"

namespace magwell {

/// Reproducible 64-bit linear congruential generator (Knuth multiplier),
/// documented in the README so runs can be replayed in any language.
class Lcg64 {
 public:
  explicit Lcg64(uint64_t seed) : s_(seed) {}
  uint64_t next() {
    s_ = s_ * 6364136223846793005ull + 1442695040888963407ull;
    return s_;
  }
  /// Uniform in [0,1) with 53 random bits.
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  uint64_t s_;
};

/// Flat key=value configuration (# comments, blank lines ignored).
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);
  static Config defaults_for(const std::string& experiment);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& dflt) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double dflt) const;
  int get_int(const std::string& key) const;
  int get_int_or(const std::string& key, int dflt) const;
  uint64_t get_seed(uint64_t dflt) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<double> get_list_or(const std::string& key, const std::vector<double>& dflt) const;
  std::vector<int> get_int_list_or(const std::string& key, const std::vector<int>& dflt) const;
  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& items() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

/// Error with a dedicated process exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_g17(double v);
/// Least-squares slope of log|y| against log x (order fits).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);
/// Plain least-squares slope and intercept.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Atomic text file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& content);

/// Minimal polyline SVG plot writer used by the experiment harness.
struct SvgPlot {
  double width = 640, height = 640;
  double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
  std::string body;
  void polyline(const std::vector<Vec2>& pts, const std::string& color, double stroke = 1.0);
  void circle(const Vec2& c, double r_px, const std::string& color);
  std::string render(const std::string& title) const;
};

/// One acceptance criterion outcome.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double runtime_seconds = 0.0;
  std::vector<std::string> lines;  // measured quantities with tolerances
};

struct ExperimentOutput {
  std::vector<std::string> files_written;
  int exit_code = 0;
  std::string summary;
};

MagneticField field_from_config(const Config& cfg);

ExperimentOutput run_trajectory(const Config& cfg, const std::string& out_dir);
ExperimentOutput run_compare_flows(const Config& cfg, const std::string& out_dir);
ExperimentOutput run_birkhoff(const Config& cfg, const std::string& out_dir);
ExperimentOutput run_spectrum(const Config& cfg, const std::string& out_dir);
ExperimentOutput run_counting(const Config& cfg, const std::string& out_dir);
ExperimentOutput run_report(const Config& cfg, const std::string& out_dir);

/// Runs the acceptance criteria (all of them by default, or a subset by id).
std::vector<CriterionResult> run_acceptance(const Config& cfg, const std::string& out_dir,
                                            const std::vector<int>& only_ids = {});

Box box_from_config(const Config& cfg, Box dflt);

}  // namespace magwell
