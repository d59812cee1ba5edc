#include "ctrl/systemfile.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "ctrl/sampling.hpp"

namespace ctrl {

namespace {

struct Assignment {
  std::string key;
  std::string value;
  int line;
};

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<Assignment> tokenize(const std::string& text) {
  std::vector<Assignment> out;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    // strip comments outside quotes
    std::string line;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (c == '#' && !quoted) break;
      line.push_back(c);
    }
    // split into ';'-separated assignments (outside quotes)
    std::vector<std::string> parts;
    std::string cur;
    quoted = false;
    for (char c : line) {
      if (c == '"') quoted = !quoted;
      if (c == ';' && !quoted) {
        parts.push_back(cur);
        cur.clear();
        continue;
      }
      cur.push_back(c);
    }
    parts.push_back(cur);
    for (auto& p : parts) {
      std::string s = trim(p);
      if (s.empty()) continue;
      size_t eq = s.find('=');
      if (eq == std::string::npos) throw SystemFileError("expected key = value", line_no);
      Assignment a;
      a.key = trim(s.substr(0, eq));
      a.value = trim(s.substr(eq + 1));
      a.line = line_no;
      if (a.key.empty() || a.value.empty())
        throw SystemFileError("expected key = value", line_no);
      out.push_back(std::move(a));
    }
  }
  return out;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

double parse_number(const std::string& s, int line) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (...) {
  }
  throw SystemFileError("expected a number, got '" + s + "'", line);
}

std::vector<double> parse_tuple(const std::string& s, int line) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != '(' || t.back() != ')')
    throw SystemFileError("expected a parenthesised tuple, got '" + s + "'", line);
  std::vector<double> out;
  std::string body = t.substr(1, t.size() - 2);
  std::string cur;
  for (char c : body) {
    if (c == ',') {
      out.push_back(parse_number(cur, line));
      cur.clear();
      continue;
    }
    cur.push_back(c);
  }
  if (!trim(cur).empty()) out.push_back(parse_number(cur, line));
  return out;
}

int parse_index(const std::string& key, const std::string& prefix) {
  if (key.size() <= prefix.size()) return -1;
  if (key.compare(0, prefix.size(), prefix) != 0) return -1;
  std::string digits = key.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return -1;
  return std::stoi(digits);
}

}  // namespace

LoadedSystem load_system_text(const std::string& text) {
  auto assignments = tokenize(text);
  LoadedSystem out;
  ControlSystem& sys = out.system;

  // pass 1: header and parameters
  for (const auto& a : assignments) {
    if (a.key == "name") sys.name = unquote(a.value);
    else if (a.key == "n") sys.n = static_cast<int>(parse_number(a.value, a.line));
    else if (a.key == "m") sys.m = static_cast<int>(parse_number(a.value, a.line));
    else if (a.key.rfind("param.", 0) == 0)
      sys.params[a.key.substr(6)] = parse_number(a.value, a.line);
    else if (a.key == "note") out.note = unquote(a.value);
  }
  if (sys.n < 1 || sys.m < 1)
    throw SystemFileError("system needs n >= 1 and m >= 1 declared before use", 1);
  Chart chart = sys.chart();
  std::set<std::string> param_names;
  for (const auto& [k, v] : sys.params) param_names.insert(k);

  // pass 2: equations, control region, domain, probes
  sys.f.assign(sys.n, Expr());
  out.f_text.assign(sys.n, "");
  std::vector<bool> have_f(sys.n, false);
  sys.K.assign(sys.m, Interval{});
  std::vector<bool> have_k(sys.m, false);
  sys.domain.chart = chart;
  sys.domain.box.assign(chart.dim(), {-0.75, 0.75});
  sys.domain.box[0] = {0.0, 1.0};
  std::vector<bool> have_wbox(sys.m, false);

  for (const auto& a : assignments) {
    int idx;
    if ((idx = parse_index(a.key, "f")) > 0) {
      if (idx > sys.n) throw SystemFileError("f index out of range in '" + a.key + "'", a.line);
      std::string expr_text = unquote(a.value);
      try {
        sys.f[idx - 1] = parse_expr(expr_text, chart, param_names);
      } catch (const ParseError& e) {
        throw SystemFileError("in expression '" + expr_text + "': " + e.what(), a.line);
      }
      out.f_text[idx - 1] = expr_text;
      have_f[idx - 1] = true;
    } else if ((idx = parse_index(a.key, "K")) > 0) {
      if (idx > sys.m) throw SystemFileError("K index out of range in '" + a.key + "'", a.line);
      auto pair = parse_tuple(a.value, a.line);
      if (pair.size() != 2) throw SystemFileError("K entries are pairs (lo, hi)", a.line);
      sys.K[idx - 1] = {pair[0], pair[1]};
      have_k[idx - 1] = true;
    } else if (a.key == "domain.t") {
      auto pair = parse_tuple(a.value, a.line);
      if (pair.size() != 2) throw SystemFileError("domain entries are pairs (lo, hi)", a.line);
      sys.domain.box[0] = {pair[0], pair[1]};
    } else if ((idx = parse_index(a.key, "domain.q")) > 0) {
      if (idx > sys.n) throw SystemFileError("domain.q index out of range", a.line);
      auto pair = parse_tuple(a.value, a.line);
      if (pair.size() != 2) throw SystemFileError("domain entries are pairs (lo, hi)", a.line);
      sys.domain.box[chart.q_index(idx)] = {pair[0], pair[1]};
    } else if ((idx = parse_index(a.key, "domain.w")) > 0) {
      if (idx > sys.m) throw SystemFileError("domain.w index out of range", a.line);
      auto pair = parse_tuple(a.value, a.line);
      if (pair.size() != 2) throw SystemFileError("domain entries are pairs (lo, hi)", a.line);
      sys.domain.box[chart.w_index(idx)] = {pair[0], pair[1]};
      have_wbox[idx - 1] = true;
    } else if (a.key == "probe") {
      auto tuple = parse_tuple(a.value, a.line);
      if (static_cast<int>(tuple.size()) != chart.dim())
        throw SystemFileError("probe needs " + std::to_string(chart.dim()) +
                                  " coordinates (t, q..., w...)",
                              a.line);
      sys.probes.push_back(tuple);
    }
  }

  for (int i = 0; i < sys.n; ++i)
    if (!have_f[i])
      throw SystemFileError("missing equation f" + std::to_string(i + 1), 1);
  for (int a = 0; a < sys.m; ++a)
    if (!have_k[a]) throw SystemFileError("missing control interval K" + std::to_string(a + 1), 1);

  // default w sampling box: K shrunk by a 10% margin on each side
  for (int a = 1; a <= sys.m; ++a) {
    if (have_wbox[a - 1]) continue;
    double margin = 0.1 * (sys.K[a - 1].hi - sys.K[a - 1].lo);
    sys.domain.box[chart.w_index(a)] = {sys.K[a - 1].lo + margin, sys.K[a - 1].hi - margin};
  }
  sys.domain.params = sys.params;
  sys.validate();
  return out;
}

LoadedSystem load_system_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open system file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_system_text(ss.str());
}

namespace {

const std::map<std::string, std::string>& fixtures() {
  static const std::map<std::string, std::string> fx = {
      {"exampleA",
       "name = exampleA ; n = 1 ; m = 1\n"
       "f1 = \"w1^2\"\n"
       "K1 = (-1, 1)\n"
       "domain.t = (0, 1) ; domain.q1 = (-0.75, 0.75)\n"
       "probe = (0.5, 0.2, 0)\n"},
      {"exampleB",
       "name = exampleB ; n = 1 ; m = 2\n"
       "f1 = \"w1*w2\"\n"
       "K1 = (-1, 1) ; K2 = (-1, 1)\n"
       "domain.t = (0, 1) ; domain.q1 = (-0.75, 0.75)\n"
       "probe = (0.5, 0, 0, 0)\n"},
      {"exampleC",
       "name = exampleC ; n = 1 ; m = 1\n"
       "f1 = \"exp(w1)\"\n"
       "K1 = (-1, 1)\n"
       "domain.t = (0, 1) ; domain.q1 = (-0.75, 0.75)\n"
       "probe = (0.5, 0.2, 0)\n"},
      {"marta",
       "name = marta ; n = 3 ; m = 2\n"
       "f1 = \"cos(q3)*sin(w1)\" ; f2 = \"sin(q3)*sin(w1)\" ; f3 = \"w2\"\n"
       "K1 = (-1.4707963267948966, 1.4707963267948966) ; K2 = (-1, 1)\n"
       "domain.t = (0, 1)\n"
       "domain.q1 = (-0.75, 0.75) ; domain.q2 = (-0.75, 0.75) ; domain.q3 = (-0.75, 0.75)\n"
       "probe = (0.5, 0.1, -0.2, 0.3, 0, 0)\n"
       "note = \"projection rank onto Q computes to 3 = dim Q; the source table prints 5\"\n"},
      {"sleigh",
       "name = sleigh ; n = 5 ; m = 2\n"
       "f1 = \"q4*cos(q3)\" ; f2 = \"q4*sin(q3)\" ; f3 = \"q5\"\n"
       "f4 = \"w1 + A*q4*q5\" ; f5 = \"w2\"\n"
       "K1 = (-1, 1) ; K2 = (-1, 1)\n"
       "param.A = 0\n"
       "domain.t = (0, 1)\n"
       "domain.q1 = (-0.75, 0.75) ; domain.q2 = (-0.75, 0.75) ; domain.q3 = (-0.75, 0.75)\n"
       "domain.q4 = (-0.75, 0.75) ; domain.q5 = (-0.75, 0.75)\n"
       "probe = (0.5, 0, 0, 0, 0, 0, 0, 0)\n"
       "note = \"sub-distribution beta=1 ranks compute to 4 generic / 3 on {q5=w2=0}; "
       "the source prints 5/4\"\n"},
  };
  return fx;
}

LoadedSystem kalman_random(uint64_t seed) {
  Rng rng = Rng::stream(seed, 0x4a1);
  int n = 2 + static_cast<int>(rng.below(4));  // 2..5
  int m = 1 + static_cast<int>(rng.below(3));  // 1..3
  std::vector<std::vector<double>> A(n, std::vector<double>(n));
  std::vector<std::vector<double>> B(n, std::vector<double>(m));
  for (auto& row : A)
    for (auto& x : row) x = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
  for (auto& row : B)
    for (auto& x : row) x = static_cast<double>(static_cast<long long>(rng.below(7)) - 3);
  LoadedSystem out;
  out.system = linear_control_system(A, B);
  out.system.name = "kalman-random-" + std::to_string(seed);
  Chart c = out.system.chart();
  for (int i = 0; i < n; ++i) out.f_text.push_back(to_string(out.system.f[i], c));
  out.note = "random linear system generated from seed " + std::to_string(seed);
  return out;
}

}  // namespace

std::vector<std::string> fixture_names() {
  std::vector<std::string> names;
  for (const auto& [k, v] : fixtures()) names.push_back(k);
  names.push_back("kalman-random");
  return names;
}

bool is_fixture(const std::string& name) {
  return name == "kalman-random" || fixtures().count(name) > 0;
}

std::string fixture_text(const std::string& name) {
  auto it = fixtures().find(name);
  if (it == fixtures().end()) throw std::invalid_argument("unknown fixture '" + name + "'");
  return it->second;
}

LoadedSystem load(const std::string& name_or_path, uint64_t seed, const ParamMap& overrides) {
  LoadedSystem out;
  if (name_or_path == "kalman-random") {
    out = kalman_random(seed);
  } else if (fixtures().count(name_or_path)) {
    out = load_system_text(fixture_text(name_or_path));
  } else {
    out = load_system_file(name_or_path);
  }
  if (!overrides.empty()) {
    for (const auto& [k, v] : overrides) {
      if (!out.system.params.count(k))
        throw std::invalid_argument("system has no parameter '" + k + "'");
      out.system.params[k] = v;
    }
    out.system.domain.params = out.system.params;
    out.system.validate();
  }
  return out;
}

}  // namespace ctrl
