#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gmclab {

// Flat `key = value` configuration with `#` comments plus one optional
// per-scale table, inline after a header row starting with "i," or external
// via `table = <path>` (resolved against the config file's directory).
struct Config {
  std::map<std::string, std::string> kv;
  std::vector<std::array<double, 4>> table;  // rows (i, K_i, S_i, c_i)

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  double get_real(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
};

Config parse_config_text(const std::string& text, const std::string& base_dir = ".");
Config load_config(const std::string& path);

// FNV-1a over the canonicalized `key=value` lines plus table rows, so that
// reordering and whitespace do not change the hash.
std::uint64_t config_hash(const Config& cfg);

// First line of every output: version, config hash, master seed.
void write_run_header(std::ostream& os, std::uint64_t cfg_hash, std::uint64_t seed);

// RFC-4180 field escaping: quote when a comma, quote, or newline appears.
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}
  void header(std::span<const std::string> names);
  void row(std::span<const std::string> fields);
  void row(std::span<const double> values);

 private:
  void emit(std::span<const std::string> fields);
  std::ostream& os_;
  bool header_written_ = false;
  std::size_t width_ = 0;
};

std::string format_real(double value);

}  // namespace gmclab
