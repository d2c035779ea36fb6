#include "carnot/io.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace carnot {

namespace {

struct Entry {
  int R, I, J;
  double value;
  bool both;
};

CarnotGroup<double> assemble(const std::string& name, const std::vector<int>& growth,
                             const std::vector<Entry>& entries) {
  if (growth.empty()) throw Error(Code::ParseError, "missing growth vector");
  StructureTensor<double> t{GrowthVector(growth)};
  const int n = t.growth.n();
  for (const auto& e : entries) {
    for (int idx : {e.R, e.I, e.J})
      if (idx < 1 || idx > n)
        throw Error(Code::ParseError, "index " + std::to_string(idx) + " outside 1.." + std::to_string(n));
    if (e.both) t.set_bracket(e.R, e.I, e.J, e.value);
    else t.C[e.R - 1](e.I - 1, e.J - 1) = e.value;
  }
  return build_group(std::move(t), name);
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

CarnotGroup<double> parse_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Code::ParseError, e.what());
  }
  try {
    const std::string name = j.value("name", std::string("custom"));
    const auto growth = j.at("growth").get<std::vector<int>>();
    std::vector<Entry> entries;
    for (const char* key : {"brackets", "constants"}) {
      if (!j.contains(key)) continue;
      for (const auto& row : j.at(key)) {
        if (row.size() != 4) throw Error(Code::ParseError, "entries must be [R, I, J, value]");
        entries.push_back({row[0].get<int>(), row[1].get<int>(), row[2].get<int>(), row[3].get<double>(),
                           std::string(key) == "brackets"});
      }
    }
    return assemble(name, growth, entries);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Code::ParseError, e.what());
  }
}

}  // namespace

CarnotGroup<double> parse_group_spec(const std::string& text) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') return parse_json(body);

  std::string name = "custom";
  std::vector<int> growth;
  std::vector<Entry> entries;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto p = line.find('#'); p != std::string::npos) line.erase(p);
    line = trim(line);
    if (line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw Error(Code::ParseError, "line " + std::to_string(lineno) + ": " + why);
    };
    if (line.rfind("name:", 0) == 0) {
      name = trim(line.substr(5));
    } else if (line.rfind("growth:", 0) == 0) {
      std::istringstream ls(line.substr(7));
      int d;
      while (ls >> d) growth.push_back(d);
      if (!ls.eof()) fail("growth expects integers");
    } else {
      std::istringstream ls(line);
      std::string kind;
      Entry e{};
      ls >> kind >> e.R >> e.I >> e.J >> e.value;
      if (ls.fail() || (kind != "bracket" && kind != "c")) fail("expected 'bracket R I J value' or 'c R I J value'");
      e.both = kind == "bracket";
      entries.push_back(e);
    }
  }
  return assemble(name, growth, entries);
}

CarnotGroup<double> load_group_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Code::InvalidArgument, "cannot open group file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_group_spec(ss.str());
}

std::string builtin_group_names() { return "h1, hn(N), engel"; }

CarnotGroup<double> lookup_group(const std::string& ref) {
  if (ref == "h1") return heisenberg<double>(1);
  if (ref == "engel") return engel<double>();
  static const std::regex hn(R"(hn\((\d+)\))");
  std::smatch m;
  if (std::regex_match(ref, m, hn)) return heisenberg<double>(std::stoi(m[1]));
  std::ifstream probe(ref);
  if (probe) return load_group_file(ref);
  throw Error(Code::InvalidArgument,
              "unknown group '" + ref + "'; available built-ins: " + builtin_group_names());
}

void write_trace_text(std::ostream& os, const GeodesicTrace<double>& tr) {
  const int n = tr.states.empty() ? 0 : static_cast<int>(tr.states.front().x.size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << " x" << i;
  for (int i = 1; i <= n; ++i) os << " P" << i;
  os << "\n" << std::setprecision(17);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    os << tr.times[k];
    for (int i = 0; i < n; ++i) os << " " << tr.states[k].x(i);
    for (int i = 0; i < n; ++i) os << " " << tr.states[k].P(i);
    os << "\n";
  }
}

void write_trace_json(std::ostream& os, const GeodesicTrace<double>& tr) {
  nlohmann::json j;
  j["group"] = tr.group;
  j["integrator"] = tr.integrator;
  j["step"] = tr.step;
  j["diagnostics"] = {{"speed0", tr.diag.speed0},
                      {"max_speed_drift", tr.diag.max_speed_drift},
                      {"max_energy_drift", tr.diag.max_energy_drift},
                      {"max_top_layer_drift", tr.diag.max_top_drift},
                      {"richardson", tr.diag.richardson}};
  j["times"] = tr.times;
  auto rows = [&](bool pos) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& st : tr.states) {
      const auto& v = pos ? st.x : st.P;
      a.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    }
    return a;
  };
  j["x"] = rows(true);
  j["P"] = rows(false);
  os << j.dump(1) << "\n";
}

void write_point_cloud(std::ostream& os, const CarnotGroup<double>& g, const SphereSample<double>& s) {
  const int n = g.n(), h = g.h(), v = g.v();
  for (int i = 1; i <= n; ++i) os << (i > 1 ? " " : "") << "x" << i;
  for (int i = 1; i <= h; ++i) os << " nuH" << i;
  for (int i = 1; i <= v; ++i) os << " varpi" << i;
  os << " regular\n" << std::setprecision(17);
  for (std::size_t k = 0; k < s.points.size(); ++k) {
    for (int i = 0; i < n; ++i) os << (i ? " " : "") << s.points[k](i);
    for (int i = 0; i < h; ++i) os << " " << s.nuH[k](i);
    for (int i = 0; i < v; ++i) os << " " << s.varpi[k](i);
    os << " " << (s.regular[k] ? 1 : 0) << "\n";
  }
}

double Polynomial::operator()(const Vec<double>& x) const {
  double sum = 0;
  for (const auto& t : terms) {
    double m = t.coeff;
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < t.powers[i]; ++k) m *= x(i);
    sum += m;
  }
  return sum;
}

Vec<double> Polynomial::gradient(const Vec<double>& x) const {
  Vec<double> g = Vec<double>::Zero(n);
  for (const auto& t : terms) {
    for (int j = 0; j < n; ++j) {
      if (t.powers[j] == 0) continue;
      double m = t.coeff * t.powers[j];
      for (int i = 0; i < n; ++i) {
        const int p = i == j ? t.powers[i] - 1 : t.powers[i];
        for (int k = 0; k < p; ++k) m *= x(i);
      }
      g(j) += m;
    }
  }
  return g;
}

HypersurfaceField<double> Polynomial::field() const {
  const Polynomial self = *this;
  return {[self](const Vec<double>& x) { return self(x); },
          [self](const Vec<double>& x) { return self.gradient(x); }};
}

Polynomial parse_polynomial(const std::string& text, int n) {
  Polynomial poly;
  poly.n = n;
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw Error(Code::ParseError, "empty polynomial");

  std::size_t pos = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Code::ParseError, "polynomial '" + text + "' at " + std::to_string(pos) + ": " + why);
  };
  auto read_int = [&]() {
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) fail("expected integer");
    return std::stoi(s.substr(start, pos - start));
  };

  while (pos < s.size()) {
    double sign = 1;
    if (s[pos] == '+' || s[pos] == '-') {
      sign = s[pos] == '-' ? -1 : 1;
      ++pos;
    } else if (!poly.terms.empty()) {
      fail("expected '+' or '-'");
    }
    Polynomial::Term term{sign, std::vector<int>(n, 0)};
    while (true) {
      if (pos >= s.size()) fail("unexpected end");
      if (s[pos] == 'x') {
        ++pos;
        const int idx = read_int();
        if (idx < 1 || idx > n) fail("variable x" + std::to_string(idx) + " outside x1..x" + std::to_string(n));
        int power = 1;
        if (pos < s.size() && s[pos] == '^') {
          ++pos;
          power = read_int();
        }
        term.powers[idx - 1] += power;
      } else if (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.') {
        std::size_t used = 0;
        term.coeff *= std::stod(s.substr(pos), &used);
        pos += used;
      } else {
        fail("unexpected character");
      }
      if (pos < s.size() && s[pos] == '*') {
        ++pos;
        continue;
      }
      break;
    }
    int degree = 0;
    for (int p : term.powers) degree += p;
    if (degree > 3) fail("degree above 3");
    poly.terms.push_back(std::move(term));
  }
  return poly;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) throw Error(Code::ParseError, "empty entry in list '" + text + "'");
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw Error(Code::ParseError, "not a number: '" + item + "'");
    }
    if (used != item.size()) throw Error(Code::ParseError, "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace carnot
