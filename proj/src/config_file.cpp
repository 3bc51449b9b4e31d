#include "irsse/config_file.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace irsse {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    out.push_back(trim(s.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* begin = t.data();
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(begin, end, value);
  if (t.empty() || res.ec != std::errc{} || res.ptr != end)
    throw ConfigError("config key '" + key + "': not a number: '" + t + "'");
  return value;
}

long long parse_integer(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  long long value = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size())
    throw ConfigError("config key '" + key + "': not an integer: '" + t + "'");
  return value;
}

bool parse_bool(const std::string& key, std::string_view text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + t + "'");
}

Point2 parse_point(const std::string& key, std::string_view text) {
  const auto parts = split_list(text);
  if (parts.size() != 2) throw ConfigError("config key '" + key + "': expected 'x, y'");
  return {parse_double(key, parts[0]), parse_double(key, parts[1])};
}

using Setter = std::function<void(ScenarioConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto real = [&t](const char* name, double ScenarioConfig::*field) {
      t[name] = [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_double(k, v);
      };
    };
    auto power = [&t, &real](const char* name, double ScenarioConfig::*field) {
      real(name, field);
      t[std::string(name) + "_dbm"] = [field](ScenarioConfig& c, const std::string& k,
                                              const std::string& v) {
        c.*field = dbm_to_watts(parse_double(k, v));
      };
    };
    auto flag = [&t](const char* name, bool ScenarioConfig::*field) {
      t[name] = [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_bool(k, v);
      };
    };
    auto point = [&t](const char* name, Point2 ScenarioConfig::*field) {
      t[name] = [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
        c.*field = parse_point(k, v);
      };
    };
    auto integer = [&t](const char* name, int ScenarioConfig::*field) {
      t[name] = [field](ScenarioConfig& c, const std::string& k, const std::string& v) {
        c.*field = static_cast<int>(parse_integer(k, v));
      };
    };

    integer("K", &ScenarioConfig::K);
    integer("N", &ScenarioConfig::N);
    real("region", &ScenarioConfig::region);
    point("irs_pos", &ScenarioConfig::irs_pos);
    point("fc_pos", &ScenarioConfig::fc_pos);
    point("ed_pos", &ScenarioConfig::ed_pos);
    real("mu_db", &ScenarioConfig::mu_db);
    real("d0", &ScenarioConfig::d0);
    real("nu_irs_links", &ScenarioConfig::nu_irs_links);
    real("nu_direct_links", &ScenarioConfig::nu_direct_links);
    power("sigma2_o", &ScenarioConfig::sigma2_o);
    power("sigma2_f", &ScenarioConfig::sigma2_f);
    power("sigma2_e", &ScenarioConfig::sigma2_e);
    power("p_t", &ScenarioConfig::p_t);
    real("eta", &ScenarioConfig::eta);
    real("epsilon", &ScenarioConfig::epsilon);
    integer("n_iter", &ScenarioConfig::n_iter);
    t["seed"] = [](ScenarioConfig& c, const std::string& k, const std::string& v) {
      const long long s = parse_integer(k, v);
      if (s < 0) throw ConfigError("config key 'seed': must be non-negative");
      c.seed = static_cast<std::uint64_t>(s);
    };
    t["alpha_spec"] = [](ScenarioConfig& c, const std::string&, const std::string& v) {
      c.alpha_spec.clear();
      if (trim(v) == "ones") return;
      for (const auto& item : split_list(v)) c.alpha_spec.push_back(parse_complex(item));
    };
    flag("random_initial_phase", &ScenarioConfig::random_initial_phase);
    flag("warm_start", &ScenarioConfig::warm_start);
    flag("ed_constraint", &ScenarioConfig::ed_constraint);
    flag("verify_iterates", &ScenarioConfig::verify_iterates);
    integer("randomization_count", &ScenarioConfig::randomization_count);
    real("delta", &ScenarioConfig::delta);
    real("sdp_tol", &ScenarioConfig::sdp_tol);
    return t;
  }();
  return table;
}

}  // namespace

cplx parse_complex(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) throw ConfigError("empty complex number");
  if (t.back() != 'j' && t.back() != 'i') return {parse_double("complex", t), 0.0};
  t.pop_back();
  // Split at the last sign that is not an exponent sign or the leading sign.
  std::size_t split = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;) {
    if ((t[i] == '+' || t[i] == '-') && t[i - 1] != 'e' && t[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) {
    if (t.empty() || t == "+") return {0.0, 1.0};
    if (t == "-") return {0.0, -1.0};
    return {0.0, parse_double("complex", t)};
  }
  const std::string re = t.substr(0, split);
  std::string im = t.substr(split);
  if (im == "+") im = "1";
  if (im == "-") im = "-1";
  if (im.front() == '+') im.erase(0, 1);
  return {parse_double("complex", re), parse_double("complex", im)};
}

void set_config_value(ScenarioConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

ScenarioConfig parse_config(std::string_view text, ScenarioConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    set_config_value(base, key, value);
  }
  validate(base);
  return base;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_config(buf.str());
}

}  // namespace irsse
