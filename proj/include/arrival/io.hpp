#pragma once

// File formats: the transaction CSV, the flat key=value config, and the
// binary checkpoint.
//
// Transaction CSV: UTF-8, header `subject_id,process_id,t,value,quantity`,
// integer grid time t >= 1, decimal value >= 0, integer quantity >= 1.
//
// Checkpoint: an ASCII header followed by raw little-endian doubles.
//
//   ARRIVAL-CHECKPOINT 1
//   meta <key> <value> [<value> ...]      one line per metadata entry
//   tensor <name> <rows> <cols>           shape table, column-major blocks
//   data <count>                          then a single '\n'
//   <count x 8 bytes IEEE-754 binary64, little-endian>
//
// The tensors are the network weight blocks in layout order followed by
// the Adam moments `adam.m` and `adam.v` (one column each).

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "arrival/features.hpp"
#include "arrival/model.hpp"
#include "arrival/neural.hpp"

namespace arrival::io {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr std::string_view kTransactionHeader = "subject_id,process_id,t,value,quantity";

inline TransactionLog read_transactions(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<Transaction> rows;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!header_seen) {
      if (text != kTransactionHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kTransactionHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto f = detail::split(text, ',');
    auto fail = [&](const std::string& why) {
      return ParseError("row " + std::to_string(line_no) + ": " + why);
    };
    if (f.size() != 5) throw fail("expected 5 fields, got " + std::to_string(f.size()));
    Transaction r;
    r.subject_id = std::string(detail::trim(f[0]));
    r.process_id = std::string(detail::trim(f[1]));
    if (r.subject_id.empty() || r.process_id.empty()) throw fail("empty id");
    if (!detail::parse_number(f[2], r.t) || r.t < 1) throw fail("t must be an integer >= 1");
    if (!detail::parse_number(f[3], r.value) || !(r.value >= 0.0) || !std::isfinite(r.value)) {
      throw fail("value must be a decimal >= 0");
    }
    if (!detail::parse_number(f[4], r.quantity) || r.quantity < 1) {
      throw fail("quantity must be an integer >= 1");
    }
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw ParseError("missing header row");
  return TransactionLog(std::move(rows));
}

inline TransactionLog read_transactions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_transactions(in);
}

inline void write_transactions(std::ostream& out, const TransactionLog& log) {
  out << kTransactionHeader << '\n';
  char value[64];
  for (const auto& r : log.records()) {
    std::snprintf(value, sizeof value, "%.2f", r.value);
    out << r.subject_id << ',' << r.process_id << ',' << r.t << ',' << value << ',' << r.quantity
        << '\n';
  }
}

/// Flat `key = value` file; '#' starts a comment.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::string_view text = line;
      if (const auto hash = text.find('#'); hash != std::string_view::npos) {
        text = text.substr(0, hash);
      }
      text = detail::trim(text);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string_view::npos) {
        throw ParseError("config line " + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = std::string(detail::trim(text.substr(0, eq)));
      if (key.empty()) throw ParseError("config line " + std::to_string(line_no) + ": empty key");
      cfg.values_[key] = std::string(detail::trim(text.substr(eq + 1)));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config " + path);
    return parse(in);
  }

  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.contains(key); }

  std::string get(const std::string& key, const std::string& fallback = "") const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end() || it->second.empty()) {
      throw ParseError("config key '" + key + "' is required");
    }
    return it->second;
  }

  template <class T>
  T get_number(const std::string& key, T fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    T v{};
    if (!detail::parse_number(it->second, v)) {
      throw ParseError("config key '" + key + "': cannot parse '" + it->second + "'");
    }
    return v;
  }

  template <class T>
  std::vector<T> get_numbers(const std::string& key) const {
    std::vector<T> out;
    for (const auto& item : get_list(key)) {
      T v{};
      if (!detail::parse_number(item, v)) {
        throw ParseError("config key '" + key + "': cannot parse '" + item + "'");
      }
      out.push_back(v);
    }
    return out;
  }

  /// Comma-separated list; empty when the key is absent.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    const auto raw = get(key);
    if (detail::trim(raw).empty()) return out;
    for (auto part : detail::split(raw, ',')) out.emplace_back(detail::trim(part));
    return out;
  }

  void ensure_known(const std::set<std::string>& known) const {
    for (const auto& [k, _] : values_) {
      if (!known.contains(k)) throw ParseError("unknown config key '" + k + "'");
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

/// Everything needed to rebuild a trained model and its input pipeline.
struct Checkpoint {
  TrainedModel model;
  std::vector<std::string> process_ids;
  FeatureStats feature_stats;
  GridTime train_end = 0;
};

inline constexpr std::string_view kCheckpointMagic = "ARRIVAL-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void put_le(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  unsigned char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(bytes), 8);
}

inline double get_le(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw ParseError("checkpoint truncated");
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[i];
  return std::bit_cast<double>(bits);
}

template <class Seq>
std::string join_doubles(const Seq& v) {
  std::string s;
  for (double x : v) s += ' ' + format_double(x);
  return s;
}

}  // namespace detail

inline void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
  const auto& cfg = ck.model.config;
  const auto& st = ck.model.state;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "meta mode " << to_string(cfg.mode) << '\n';
  out << "meta tte_bin " << to_string(cfg.tte_bin) << '\n';
  out << "meta inputs " << st.shape.inputs << '\n';
  out << "meta hidden " << st.shape.hidden << '\n';
  out << "meta outputs " << st.shape.outputs << '\n';
  out << "meta processes " << cfg.processes << '\n';
  out << "meta max_shape " << detail::format_double(cfg.max_shape) << '\n';
  out << "meta scale_anchor" << detail::join_doubles(cfg.scale_anchor) << '\n';
  out << "meta adam_step " << st.step << '\n';
  out << "meta train_end " << ck.train_end << '\n';
  out << "meta process_ids";
  for (const auto& id : ck.process_ids) out << ' ' << id;
  out << '\n';
  out << "meta feature_mean" << detail::join_doubles(ck.feature_stats.mean) << '\n';
  out << "meta feature_stddev" << detail::join_doubles(ck.feature_stats.stddev) << '\n';
  const auto blocks = nn::parameter_layout(st.shape);
  for (const auto& b : blocks) out << "tensor " << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
  out << "tensor adam.m " << st.adam_m.size() << " 1\n";
  out << "tensor adam.v " << st.adam_v.size() << " 1\n";
  out << "data " << (st.weights.size() + st.adam_m.size() + st.adam_v.size()) << '\n';
  for (double v : st.weights) detail::put_le(out, v);
  for (double v : st.adam_m) detail::put_le(out, v);
  for (double v : st.adam_v) detail::put_le(out, v);
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  write_checkpoint(out, ck);
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty checkpoint");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    head >> magic >> version;
    if (magic != kCheckpointMagic) throw ParseError("not a checkpoint file");
    if (version != kCheckpointVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version));
    }
  }
  std::map<std::string, std::vector<std::string>> meta;
  std::vector<std::tuple<std::string, long long, long long>> tensors;
  long long count = -1;
  while (count < 0 && std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key, item;
      ls >> key;
      auto& vals = meta[key];
      while (ls >> item) vals.push_back(item);
    } else if (kind == "tensor") {
      std::string name;
      long long r = 0, c = 0;
      if (!(ls >> name >> r >> c)) throw ParseError("bad tensor line: " + line);
      tensors.emplace_back(name, r, c);
    } else if (kind == "data") {
      if (!(ls >> count) || count < 0) throw ParseError("bad data line");
    } else {
      throw ParseError("unexpected checkpoint line: " + line);
    }
  }
  if (count < 0) throw ParseError("checkpoint has no data section");

  auto one = [&](const std::string& key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end() || it->second.size() != 1) throw ParseError("checkpoint meta '" + key + "'");
    return it->second.front();
  };
  auto number = [&](const std::string& key) {
    double v = 0;
    if (!detail::parse_number(one(key), v)) throw ParseError("checkpoint meta '" + key + "'");
    return v;
  };
  auto doubles = [&](const std::string& key) {
    std::vector<double> out;
    for (const auto& s : meta[key]) {
      double v = 0;
      if (!detail::parse_number(s, v)) throw ParseError("checkpoint meta '" + key + "'");
      out.push_back(v);
    }
    return out;
  };

  Checkpoint ck;
  auto& cfg = ck.model.config;
  cfg.mode = parse_loss_mode(one("mode"));
  cfg.tte_bin = parse_tte_bin(one("tte_bin"));
  cfg.hidden = static_cast<std::size_t>(number("hidden"));
  cfg.processes = static_cast<std::size_t>(number("processes"));
  cfg.max_shape = number("max_shape");
  cfg.scale_anchor = doubles("scale_anchor");
  ck.train_end = static_cast<GridTime>(number("train_end"));
  ck.process_ids = meta["process_ids"];
  ck.feature_stats.mean = doubles("feature_mean");
  ck.feature_stats.stddev = doubles("feature_stddev");

  auto& st = ck.model.state;
  st.shape = {static_cast<std::size_t>(number("inputs")), cfg.hidden,
              static_cast<std::size_t>(number("outputs"))};
  st.step = static_cast<std::int64_t>(number("adam_step"));
  if (st.shape.outputs != cfg.outputs() || ck.process_ids.size() != cfg.processes ||
      cfg.scale_anchor.size() != cfg.processes ||
      ck.feature_stats.mean.size() != st.shape.inputs ||
      ck.feature_stats.stddev.size() != st.shape.inputs) {
    throw ParseError("checkpoint metadata is inconsistent");
  }
  const auto blocks = nn::parameter_layout(st.shape);
  const auto n = nn::parameter_count(st.shape);
  if (tensors.size() != blocks.size() + 2) throw ParseError("checkpoint shape table mismatch");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& [name, r, c] = tensors[i];
    if (name != blocks[i].name || r != blocks[i].rows || c != blocks[i].cols) {
      throw ParseError("checkpoint tensor '" + name + "' does not match network shape");
    }
  }
  if (count != 3 * n) throw ParseError("checkpoint data length mismatch");
  st.weights.resize(n);
  st.adam_m.resize(n);
  st.adam_v.resize(n);
  for (nn::Index i = 0; i < n; ++i) st.weights[i] = detail::get_le(in);
  for (nn::Index i = 0; i < n; ++i) st.adam_m[i] = detail::get_le(in);
  for (nn::Index i = 0; i < n; ++i) st.adam_v[i] = detail::get_le(in);
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint " + path);
  return read_checkpoint(in);
}

}  // namespace arrival::io
