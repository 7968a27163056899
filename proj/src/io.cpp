#include "gmclab/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "gmclab/version.hpp"

namespace gmclab {
namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

void parse_table_row(const std::string& line, std::vector<std::array<double, 4>>& table) {
  const auto fields = split_csv_line(line);
  if (fields.size() != 4)
    throw std::invalid_argument("config table row needs 4 columns (i, K, S, c): " + line);
  std::array<double, 4> row{};
  for (std::size_t c = 0; c < 4; ++c) {
    try {
      row[c] = std::stod(trim(fields[c]));
    } catch (const std::exception&) {
      throw std::invalid_argument("config table cell is not numeric: " + fields[c]);
    }
  }
  table.push_back(row);
}

}  // namespace

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double Config::get_real(const std::string& key, double fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not a real number: " + it->second);
  }
}

long long Config::get_int(const std::string& key, long long fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoll(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not an integer: " + it->second);
  }
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  const auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key " + key + " is not an unsigned integer: " +
                                it->second);
  }
}

Config parse_config_text(const std::string& text, const std::string& base_dir) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  bool in_table = false;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    const auto hash_pos = t.find('#');
    if (hash_pos != std::string::npos) t = trim(t.substr(0, hash_pos));
    if (t.empty()) continue;
    if (in_table) {
      parse_table_row(t, cfg.table);
      continue;
    }
    if (t.rfind("i,", 0) == 0) {  // inline table header row
      in_table = true;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line is neither key=value nor table row: " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line with empty key: " + t);
    cfg.kv[key] = value;
  }
  if (cfg.has("table") && cfg.table.empty()) {
    const std::filesystem::path p =
        std::filesystem::path(base_dir) / cfg.get("table");
    std::ifstream tf(p);
    if (!tf) throw std::runtime_error("cannot open table file " + p.string());
    bool first = true;
    while (std::getline(tf, line)) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      if (first) {  // header row mandatory
        first = false;
        continue;
      }
      parse_table_row(t, cfg.table);
    }
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(),
                           std::filesystem::path(path).parent_path().string());
}

std::uint64_t config_hash(const Config& cfg) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [key, value] : cfg.kv) {
    feed(key);
    feed("=");
    feed(value);
    feed("\n");
  }
  for (const auto& row : cfg.table) {
    for (double v : row) {
      feed(format_real(v));
      feed(",");
    }
    feed("\n");
  }
  return h;
}

void write_run_header(std::ostream& os, std::uint64_t cfg_hash, std::uint64_t seed) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "# gmclab %s config=%016llx seed=%llu", kVersion,
                static_cast<unsigned long long>(cfg_hash),
                static_cast<unsigned long long>(seed));
  os << buf << '\n';
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

void CsvWriter::header(std::span<const std::string> names) {
  if (header_written_) throw std::logic_error("csv header already written");
  header_written_ = true;
  width_ = names.size();
  emit(names);
}

void CsvWriter::row(std::span<const std::string> fields) {
  if (!header_written_) throw std::logic_error("csv row before header");
  if (fields.size() != width_) throw std::invalid_argument("csv row width mismatch");
  emit(fields);
}

void CsvWriter::row(std::span<const double> values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_real(v));
  row(std::span<const std::string>(fields));
}

void CsvWriter::emit(std::span<const std::string> fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    os_ << csv_escape(fields[i]);
  }
  os_ << "\r\n";
}

std::string format_real(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

}  // namespace gmclab
