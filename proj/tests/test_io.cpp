#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "carnot/io.hpp"

using namespace carnot;

namespace {

Code code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Code::InvalidArgument;
}

}  // namespace

TEST_CASE("text group spec") {
  const auto g = parse_group_spec(
      "# engel algebra\n"
      "name: my-engel\n"
      "growth: 2 1 1\n"
      "bracket 3 1 2 1.0\n"
      "bracket 4 1 3 1.0   # [X1, X3] = X4\n");
  CHECK(g.name == "my-engel");
  CHECK(g.step() == 3);
  const auto e = engel();
  for (int R = 0; R < 4; ++R) CHECK(g.C(R) == e.C(R));
}

TEST_CASE("single entries must be skew") {
  CHECK(code_of([] { parse_group_spec("growth: 2 1\nc 3 1 2 1\n"); }) == Code::SkewViolation);
  CHECK_NOTHROW(parse_group_spec("growth: 2 1\nc 3 1 2 1\nc 3 2 1 -1\n"));
}

TEST_CASE("json group spec") {
  const auto g = parse_group_spec(R"({"name": "h2", "growth": [4, 1], "brackets": [[5,1,2,1], [5,3,4,1]]})");
  CHECK(g.n() == 5);
  const auto h = heisenberg(2);
  CHECK(g.C(4) == h.C(4));
  CHECK(code_of([] { parse_group_spec(R"({"growth": [2, 1], "brackets": [[3,1,2]]})"); }) == Code::ParseError);
  CHECK(code_of([] { parse_group_spec(R"({"growth": [2, 1)"); }) == Code::ParseError);
}

TEST_CASE("group file errors") {
  CHECK(code_of([] { parse_group_spec("bracket 3 1 2 1\n"); }) == Code::ParseError);
  CHECK(code_of([] { parse_group_spec("growth: 2 1\nbracket 4 1 2 1\n"); }) == Code::ParseError);
  CHECK(code_of([] { parse_group_spec("growth: 2 1\nbrack 3 1 2 1\n"); }) == Code::ParseError);
  CHECK(code_of([] { parse_group_spec("growth: 2 x\n"); }) == Code::ParseError);
  CHECK(code_of([] { parse_group_spec("growth: 2 1\n"); }) == Code::NotGenerating);
}

TEST_CASE("group lookup") {
  CHECK(lookup_group("h1").n() == 3);
  CHECK(lookup_group("hn(3)").n() == 7);
  CHECK(lookup_group("engel").step() == 3);
  try {
    lookup_group("nosuchgroup");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("engel") != std::string::npos);
  }
  const std::string path = (std::filesystem::temp_directory_path() / "carnot_test_group.txt").string();
  std::ofstream(path) << "growth: 2 1\nbracket 3 1 2 2.0\n";
  CHECK(lookup_group(path).C(2)(0, 1) == 2.0);
}

TEST_CASE("polynomials") {
  const auto p = parse_polynomial("x3 - 0.5*x1*x2 + 2*x1^2 - 1.5", 3);
  Vec<double> x(3);
  x << 1, 2, 3;
  CHECK(p(x) == doctest::Approx(3 - 1 + 2 - 1.5));
  const Vec<double> g = p.gradient(x);
  CHECK(g(0) == doctest::Approx(-1 + 4));
  CHECK(g(1) == doctest::Approx(-0.5));
  CHECK(g(2) == doctest::Approx(1));
  const auto f = p.field();
  CHECK(f.f(x) == doctest::Approx(p(x)));
  CHECK(parse_polynomial("-x1", 2)(x.head(2)) == -1);
  CHECK(parse_polynomial("x1^3", 1).terms.front().powers.front() == 3);
  CHECK(code_of([] { parse_polynomial("x1^2*x2^2", 2); }) == Code::ParseError);
  CHECK(code_of([] { parse_polynomial("x4", 3); }) == Code::ParseError);
  CHECK(code_of([] { parse_polynomial("x1 x2", 3); }) == Code::ParseError);
  CHECK(code_of([] { parse_polynomial("", 3); }) == Code::ParseError);
}

TEST_CASE("lists") {
  const auto v = parse_list("1, -2.5,3e-1");
  REQUIRE(v.size() == 3);
  CHECK(v[2] == 0.3);
  CHECK(code_of([] { parse_list("1,,2"); }) == Code::ParseError);
  CHECK(code_of([] { parse_list("1,a"); }) == Code::ParseError);
}

TEST_CASE("trace output") {
  GeodesicTrace<double> tr;
  tr.group = "h1";
  tr.integrator = "rk4";
  Vec<double> x(3), P(3);
  x << 0, 0, 0;
  P << 1, 0, 0.5;
  tr.times = {0.0};
  tr.states = {{x, P}};
  std::ostringstream os;
  write_trace_text(os, tr);
  CHECK(os.str().rfind("t x1 x2 x3 P1 P2 P3\n0 0 0 0 1 0 0.5\n", 0) == 0);
  std::ostringstream js;
  write_trace_json(js, tr);
  CHECK(js.str().find("\"integrator\": \"rk4\"") != std::string::npos);
}
