#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "carnot/geodesic.hpp"
#include "carnot/group.hpp"
#include "carnot/hypersurface.hpp"
#include "carnot/metric.hpp"

namespace carnot {

// Text format, one directive per line, '#' starts a comment:
//   name: my-group
//   growth: 2 1
//   bracket 3 1 2 1.0     sets C^3_12 = 1 and C^3_21 = -1
//   c 3 1 2 1.0           sets the single entry C^3_12 = 1
// JSON format: {"name": ..., "growth": [2, 1], "brackets": [[3,1,2,1.0]], "constants": [...]}
CarnotGroup<double> parse_group_spec(const std::string& text);
CarnotGroup<double> load_group_file(const std::string& path);

// "h1", "hn(N)", "engel", or a path to a spec file
CarnotGroup<double> lookup_group(const std::string& ref);
std::string builtin_group_names();

void write_trace_text(std::ostream& os, const GeodesicTrace<double>& tr);
void write_trace_json(std::ostream& os, const GeodesicTrace<double>& tr);
void write_point_cloud(std::ostream& os, const CarnotGroup<double>& g, const SphereSample<double>& s);

// Polynomial in the coordinates x1..xn with monomials of degree <= 3, e.g. "x3 - 0.5*x1*x2 + 2*x1^2".
struct Polynomial {
  struct Term {
    double coeff = 0;
    std::vector<int> powers;
  };
  int n = 0;
  std::vector<Term> terms;

  double operator()(const Vec<double>& x) const;
  Vec<double> gradient(const Vec<double>& x) const;
  HypersurfaceField<double> field() const;
};

Polynomial parse_polynomial(const std::string& text, int n);

std::vector<double> parse_list(const std::string& text);

}  // namespace carnot
