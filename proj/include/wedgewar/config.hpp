#pragma once

// Sectioned key = value run files for sweeps.
//
//   # comment
//   [sweep]
//   domain = wedge            # wedge | half_plane
//   eps = 0.1, 0.05, 0.025
//   eta = 0.7853981633974483  # wedge only
//   p = 2
//   n_traj = 1000
//   seed = 12345
//   start_offset = 1          # optional
//   enlargement = 0.05        # optional
//   threads = 0               # optional
//   [horizon]                 # optional section
//   base_steps = 1e7
//   ref_eps = 0.1
//   exponent = 2
//   [strategies]
//   pair = pos_grad_u neg_grad_u   # repeatable: player I, player II
//   [output]
//   csv = sweep.csv                # optional; relative to the config file
//   format = csv                   # csv | json

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "wedgewar/errors.hpp"
#include "wedgewar/montecarlo.hpp"

namespace wedgewar {

class KeyValueFile {
 public:
  struct Entry {
    std::string value;
    int line;
  };

  static KeyValueFile parse(std::istream& in, const std::string& source) {
    KeyValueFile f;
    f.source_ = source;
    std::string raw;
    std::string section;
    int line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = strip(raw.substr(0, raw.find('#')));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw f.error(line_no, "unterminated section header");
        section = strip(line.substr(1, line.size() - 2));
        if (section.empty()) throw f.error(line_no, "empty section name");
        f.sections_[section];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw f.error(line_no, "expected key = value");
      if (section.empty()) throw f.error(line_no, "key outside of any [section]");
      const std::string key = strip(line.substr(0, eq));
      const std::string value = strip(line.substr(eq + 1));
      if (key.empty()) throw f.error(line_no, "empty key");
      if (value.empty()) throw f.error(line_no, "empty value for '" + key + "'");
      f.sections_[section][key].push_back({value, line_no});
    }
    return f;
  }

  static KeyValueFile load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    return parse(in, path);
  }

  const std::string& source() const { return source_; }
  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
  bool has(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(k) != 0;
  }

  const Entry& required(const std::string& s, const std::string& k) const {
    if (!has(s, k)) throw ConfigError(source_ + ": missing required field '" + s + "." + k + "'");
    const auto& list = sections_.at(s).at(k);
    if (list.size() > 1) throw error(list[1].line, "field '" + s + "." + k + "' given more than once");
    return list.front();
  }

  std::vector<Entry> all(const std::string& s, const std::string& k) const {
    if (!has(s, k)) return {};
    return sections_.at(s).at(k);
  }

  // Every key must be in `allowed` for its section; unknown sections are rejected too.
  void check_known(const std::map<std::string, std::set<std::string>>& allowed) const {
    for (const auto& [sec, keys] : sections_) {
      auto it = allowed.find(sec);
      if (it == allowed.end()) {
        const int line = keys.empty() ? 0 : keys.begin()->second.front().line;
        throw ConfigError(source_ + ": unknown section [" + sec + "]" +
                          (line ? " (line " + std::to_string(line) + ")" : ""));
      }
      for (const auto& [key, entries] : keys)
        if (!it->second.count(key)) throw error(entries.front().line, "unknown field '" + sec + "." + key + "'");
    }
  }

  double number(const std::string& s, const std::string& k) const { return to_number(required(s, k), s + "." + k); }
  double number_or(const std::string& s, const std::string& k, double fallback) const {
    return has(s, k) ? number(s, k) : fallback;
  }
  std::uint64_t integer(const std::string& s, const std::string& k) const {
    const Entry& e = required(s, k);
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(e.value, &pos, 0);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw error(e.line, "field '" + s + "." + k + "' must be a nonnegative integer");
    }
  }
  std::uint64_t integer_or(const std::string& s, const std::string& k, std::uint64_t fallback) const {
    return has(s, k) ? integer(s, k) : fallback;
  }
  std::vector<double> numbers(const std::string& s, const std::string& k) const {
    const Entry& e = required(s, k);
    std::vector<double> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number({strip(item), e.line}, s + "." + k));
    if (out.empty()) throw error(e.line, "field '" + s + "." + k + "' is empty");
    return out;
  }
  std::string text(const std::string& s, const std::string& k) const { return required(s, k).value; }
  std::string text_or(const std::string& s, const std::string& k, const std::string& fallback) const {
    return has(s, k) ? text(s, k) : fallback;
  }

  ConfigError error(int line, const std::string& what) const {
    return ConfigError(source_ + ":" + std::to_string(line) + ": " + what);
  }

 private:
  static std::string strip(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    const auto last = s.find_last_not_of(" \t\r");
    s.erase(last == std::string::npos ? 0 : last + 1);
    return s;
  }

  double to_number(const Entry& e, const std::string& field) const {
    try {
      std::size_t pos = 0;
      const double v = std::stod(e.value, &pos);
      if (pos != e.value.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw error(e.line, "field '" + field + "' must be a number, got '" + e.value + "'");
    }
  }

  std::string source_;
  std::map<std::string, std::map<std::string, std::vector<Entry>>> sections_;
};

struct RunConfig {
  SweepGrid grid;
  std::string csv_path;  // empty: stdout only
  std::string format = "csv";
};

inline RunConfig run_config_from(const KeyValueFile& f) {
  f.check_known({
      {"sweep", {"domain", "eps", "eta", "p", "n_traj", "seed", "start_offset", "enlargement", "threads"}},
      {"horizon", {"base_steps", "ref_eps", "exponent"}},
      {"strategies", {"pair"}},
      {"output", {"csv", "format"}},
  });
  RunConfig rc;
  SweepGrid& g = rc.grid;
  const std::string domain = f.text("sweep", "domain");
  if (domain == "wedge") {
    g.domain = DomainKind::wedge;
    g.eta = f.numbers("sweep", "eta");
  } else if (domain == "half_plane") {
    g.domain = DomainKind::half_plane;
    if (f.has("sweep", "eta")) throw f.error(f.required("sweep", "eta").line, "field 'sweep.eta' is not used by half_plane");
  } else {
    throw f.error(f.required("sweep", "domain").line, "field 'sweep.domain' must be wedge or half_plane");
  }
  g.eps = f.numbers("sweep", "eps");
  g.p = f.numbers("sweep", "p");
  g.n_traj = f.integer("sweep", "n_traj");
  g.seed = f.integer("sweep", "seed");
  g.start_offset = f.number_or("sweep", "start_offset", g.start_offset);
  g.enlargement = f.number_or("sweep", "enlargement", g.enlargement);
  g.threads = static_cast<unsigned>(f.integer_or("sweep", "threads", 0));
  g.horizon.base_steps = f.number_or("horizon", "base_steps", g.horizon.base_steps);
  g.horizon.ref_eps = f.number_or("horizon", "ref_eps", g.horizon.ref_eps);
  g.horizon.exponent = f.number_or("horizon", "exponent", g.horizon.exponent);

  for (double e : g.eps)
    if (!(e > 0.0)) throw f.error(f.required("sweep", "eps").line, "field 'sweep.eps' must be positive");
  for (double p : g.p)
    if (!(p > 1.0)) throw f.error(f.required("sweep", "p").line, "field 'sweep.p' must be > 1");
  if (g.n_traj < 1) throw f.error(f.required("sweep", "n_traj").line, "field 'sweep.n_traj' must be >= 1");

  const auto pairs = f.all("strategies", "pair");
  if (pairs.empty()) throw ConfigError(f.source() + ": missing required field 'strategies.pair'");
  for (const auto& e : pairs) {
    std::istringstream ss(e.value);
    StrategyPair sp;
    std::string extra;
    if (!(ss >> sp.one >> sp.two) || (ss >> extra)) throw f.error(e.line, "pair needs exactly two strategy names");
    for (const auto* n : {&sp.one, &sp.two}) {
      const auto& names = strategy_names();
      if (std::find(names.begin(), names.end(), *n) == names.end()) throw f.error(e.line, "unknown strategy '" + *n + "'");
      if (g.domain == DomainKind::half_plane && (*n == "pos_grad_u" || *n == "neg_grad_u"))
        throw f.error(e.line, "strategy '" + *n + "' needs a wedge domain");
    }
    g.pairs.push_back(sp);
  }

  if (f.has("output", "csv")) {
    std::filesystem::path p = f.text("output", "csv");
    if (p.is_relative()) p = std::filesystem::path(f.source()).parent_path() / p;
    rc.csv_path = p.string();
  }
  rc.format = f.text_or("output", "format", "csv");
  if (rc.format != "csv" && rc.format != "json")
    throw f.error(f.required("output", "format").line, "field 'output.format' must be csv or json");
  return rc;
}

inline RunConfig load_run_config(const std::string& path) { return run_config_from(KeyValueFile::load(path)); }

}  // namespace wedgewar
