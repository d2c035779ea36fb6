#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "carnot/io.hpp"
#include "carnot/jacobi.hpp"

using namespace carnot;

namespace {

struct Common {
  std::string group = "h1";
  std::string output;
  std::string format = "text";
  unsigned seed = 7;
};

Vec<double> vector_arg(const std::string& text, int n, const std::string& name) {
  const auto v = parse_list(text);
  if (static_cast<int>(v.size()) != n)
    throw Error(Code::DimensionMismatch,
                "--" + name + " needs " + std::to_string(n) + " components, got " + std::to_string(v.size()));
  return Eigen::Map<const Vec<double>>(v.data(), n);
}

std::string fmt(const Vec<double>& v) {
  std::ostringstream os;
  os << std::setprecision(12);
  for (int i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

// Runs `write` against the output file, or stdout when no file is given.
template <typename F>
void emit(const std::string& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(Code::InvalidArgument, "cannot write '" + path + "'");
  write(out);
}

void print_diagnostics(const GeodesicTrace<double>& tr) {
  const auto& d = tr.diag;
  std::cout << std::setprecision(6) << std::scientific;
  std::cout << "integrator " << tr.integrator << ", " << tr.size() - 1 << " steps of " << tr.step << "\n";
  std::cout << "|P_H(0)|              " << d.speed0 << "\n";
  std::cout << "max |P_H| drift       " << d.max_speed_drift << "\n";
  std::cout << "max energy drift      " << d.max_energy_drift << "\n";
  std::cout << "max top-layer drift   " << d.max_top_drift << "\n";
  if (d.richardson >= 0) std::cout << "richardson endpoint   " << d.richardson << "\n";
  std::cout << std::defaultfloat;
}

void write_trace(const Common& c, const GeodesicTrace<double>& tr) {
  if (c.output.empty()) return;
  emit(c.output, [&](std::ostream& os) {
    if (c.format == "json") write_trace_json(os, tr);
    else write_trace_text(os, tr);
  });
  std::cout << "trace written to " << c.output << "\n";
}

GeodesicTrace<double> closed_form_trace(const CarnotGroup<double>& g, const Vec<double>& x0,
                                        const Vec<double>& P0, double T, int steps) {
  const auto cf = skew_canonical(c_horizontal(g, Vec<double>(P0.tail(g.v()))));
  GeodesicTrace<double> tr;
  tr.group = g.name;
  tr.integrator = "closed-form";
  tr.step = T / steps;
  for (int i = 0; i <= steps; ++i) {
    const double t = T * i / steps;
    const auto st = exp_state_2step(g, x0, P0, t, &cf);
    tr.times.push_back(t);
    tr.states.push_back({st.x, st.P});
  }
  detail::fill_diagnostics(g, tr);
  return tr;
}

Vec<double> foot_guess(const Polynomial& f, Vec<double> x) {
  for (int it = 0; it < 50; ++it) {
    const double val = f(x);
    if (std::abs(val) < 1e-13) break;
    const Vec<double> gr = f.gradient(x);
    const double g2 = gr.squaredNorm();
    if (!(g2 > 0)) throw Error(Code::ZeroGradient, "gradient of f vanishes near --at; pass --base");
    x -= val / g2 * gr;
  }
  if (std::abs(f(x)) > 1e-10) throw Error(Code::NotOnSurface, "could not locate a base point; pass --base");
  return x;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sub-Riemannian geometry of Carnot groups"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--group", c.group, "h1, hn(N), engel, or a group spec file")->capture_default_str();
  app.add_option("-o,--output", c.output, "output file");
  app.add_option("--format", c.format, "trace format")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app.add_option("--seed", c.seed, "seed for randomized sweeps")->capture_default_str();

  std::string x0s, p0s, integrator = "rk4";
  double T = 1.0;
  int steps = 1000;
  bool richardson = false;
  auto* geo = app.add_subcommand("geodesic", "integrate a normal geodesic");
  geo->add_option("--x0", x0s, "initial point")->required();
  geo->add_option("--p0", p0s, "initial covector")->required();
  geo->add_option("--T", T, "final time")->required()->check(CLI::Range(0.0, 1e12));
  geo->add_option("--steps", steps, "number of steps")->check(CLI::PositiveNumber)->capture_default_str();
  geo->add_option("--integrator", integrator)
      ->check(CLI::IsMember({"rk4", "closed", "stepwise"}))
      ->capture_default_str();
  geo->add_flag("--richardson", richardson, "compare against the halved step");

  double t_exp = 1.0, t_max = 0.0;
  auto* ex = app.add_subcommand("exp", "closed-form exponential of a 2-step group");
  ex->add_option("--x0", x0s)->required();
  ex->add_option("--p0", p0s)->required();
  ex->add_option("--t", t_exp)->required();
  ex->add_option("--conjugate", t_max, "also list conjugate times in (0, t]")->check(CLI::PositiveNumber);

  std::string from, to;
  int starts = 16;
  auto* dist = app.add_subcommand("distance", "Carnot-Caratheodory distance between two points");
  dist->add_option("--from", from)->required();
  dist->add_option("--to", to)->required();
  dist->add_option("--starts", starts, "multistart count")->check(CLI::NonNegativeNumber)->capture_default_str();

  std::string center;
  double radius = 1.0;
  int n_dir = 24, n_cov = 5;
  auto* sph = app.add_subcommand("sphere", "sample the sphere of radius r");
  sph->add_option("--center", center, "default: origin");
  sph->add_option("--r", radius)->required()->check(CLI::PositiveNumber);
  sph->add_option("--dirs", n_dir, "horizontal directions")->check(CLI::PositiveNumber)->capture_default_str();
  sph->add_option("--cov", n_cov, "vertical covector samples per axis")->check(CLI::PositiveNumber)->capture_default_str();

  std::string j0s, dj0s, mode_name = "transported";
  auto* jac = app.add_subcommand("jacobi", "integrate a Jacobi field along a geodesic");
  jac->add_option("--x0", x0s)->required();
  jac->add_option("--p0", p0s, "initial covector, |P_H| = 1")->required();
  jac->add_option("--T", T)->required()->check(CLI::PositiveNumber);
  jac->add_option("--steps", steps)->check(CLI::PositiveNumber)->capture_default_str();
  jac->add_option("--j0", j0s, "J(0), frame components")->required();
  jac->add_option("--dj0", dj0s, "covariant derivative of J at 0")->required();
  jac->add_option("--mode", mode_name)
      ->check(CLI::IsMember({"constant", "transported", "full"}))
      ->capture_default_str();

  std::string poly, at, base;
  double t0 = 0.0, t1 = 0.5, rho = 0.5, eps = 0.5;
  auto* surf = app.add_subcommand("surface", "hypersurface {f = 0} given by a polynomial");
  surf->require_subcommand(1);
  surf->fallthrough();
  surf->add_option("--f", poly, "polynomial, e.g. \"x3 - 0.5*x1*x2\"")->required();
  surf->add_option("--at", at, "point")->required();
  auto* s_norm = surf->add_subcommand("normals", "frame normal, nu_H and varpi at a point");
  auto* s_metric = surf->add_subcommand("metric-normal", "metric normal geodesic from a surface point");
  s_metric->add_option("--t0", t0)->capture_default_str();
  s_metric->add_option("--t1", t1)->capture_default_str();
  s_metric->add_option("--steps", steps)->check(CLI::PositiveNumber)->capture_default_str();
  auto* s_proj = surf->add_subcommand("project", "nearest surface point through the tubular chart");
  auto* s_delta = surf->add_subcommand("delta", "distance to the surface");
  for (auto* sc : {s_proj, s_delta}) {
    sc->add_option("--base", base, "chart base point on the surface");
    sc->add_option("--rho", rho, "surface coordinate half-width")->check(CLI::PositiveNumber)->capture_default_str();
    sc->add_option("--eps", eps, "normal half-width bound")->check(CLI::PositiveNumber)->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const auto g = lookup_group(c.group);
    const int n = g.n(), h = g.h();

    if (*geo) {
      const auto x0 = vector_arg(x0s, n, "x0");
      const auto P0 = vector_arg(p0s, n, "p0");
      if (P0.head(h).norm() == 0) std::cerr << "warning: zero horizontal momentum: constant curve\n";
      GeodesicTrace<double> tr;
      if (integrator == "closed") tr = closed_form_trace(g, x0, P0, T, steps);
      else if (integrator == "stepwise") tr = integrate_stepwise(g, x0, P0, T, steps);
      else tr = integrate_normal(g, x0, P0, T, steps, richardson);
      std::cout << "group " << g.name << "\n";
      print_diagnostics(tr);
      std::cout << std::setprecision(12) << "x(T) " << fmt(tr.states.back().x) << "\n";
      write_trace(c, tr);
    } else if (*ex) {
      const auto x0 = vector_arg(x0s, n, "x0");
      const auto P0 = vector_arg(p0s, n, "p0");
      const auto st = exp_state_2step(g, x0, P0, t_exp);
      std::cout << "x(t) " << fmt(st.x) << "\n";
      std::cout << "P(t) " << fmt(st.P) << "\n";
      if (t_max > 0) {
        const auto ts = conjugate_detect(g, x0, P0, t_max);
        std::cout << "conjugate times";
        for (double t : ts) std::cout << " " << std::setprecision(10) << t;
        std::cout << (ts.empty() ? " none" : "") << "\n";
      }
    } else if (*dist) {
      const auto x = vector_arg(from, n, "from");
      const auto y = vector_arg(to, n, "to");
      DistanceOptions<double> opts;
      opts.starts = starts;
      const auto sol = distance_point(g, x, y, opts);
      std::cout << std::setprecision(12);
      std::cout << "distance " << sol.T << "\n";
      std::cout << "P0 " << fmt(sol.P0) << "\n";
      std::cout << std::setprecision(3) << std::scientific << "residual " << sol.residual << std::defaultfloat
                << "\n";
      std::cout << "multiplicity " << (sol.multiplicity ? "yes" : "no") << "\n";
      std::cout << "converged starts " << sol.roots << "\n";
    } else if (*sph) {
      const Vec<double> x0 = center.empty() ? Vec<double>(Vec<double>::Zero(n)) : vector_arg(center, n, "center");
      const auto s = sphere_sample(g, x0, radius, n_dir, n_cov, c.seed);
      emit(c.output, [&](std::ostream& os) { write_point_cloud(os, g, s); });
      int reg = 0;
      for (bool r : s.regular) reg += r;
      (c.output.empty() ? std::cerr : std::cout)
          << "points " << s.points.size() << ", regular " << reg << ", candidates " << s.candidates
          << ", rejected " << s.rejected << "\n";
    } else if (*jac) {
      const auto x0 = vector_arg(x0s, n, "x0");
      const auto P0 = vector_arg(p0s, n, "p0");
      const auto J0 = vector_arg(j0s, n, "j0");
      const auto D0 = vector_arg(dj0s, n, "dj0");
      const JacobiMode mode = mode_name == "constant"      ? JacobiMode::ConstantMultiplier
                              : mode_name == "transported" ? JacobiMode::TransportedMultiplier
                                                           : JacobiMode::Full;
      const auto cd = connection_data(g);
      const auto tr = integrate_normal(g, x0, P0, T, steps);
      const auto sol = integrate_jacobi(cd, tr, J0, D0, mode);
      emit(c.output, [&](std::ostream& os) {
        os << "t";
        for (int i = 1; i <= n; ++i) os << " J" << i;
        for (int i = 1; i <= n; ++i) os << " DJ" << i;
        os << "\n" << std::setprecision(17);
        for (std::size_t k = 0; k < sol.times.size(); ++k) {
          os << sol.times[k];
          for (int i = 0; i < n; ++i) os << " " << sol.J.xi[k](i);
          for (int i = 0; i < n; ++i) os << " " << sol.DJ.xi[k](i);
          os << "\n";
        }
      });
      if (mode == JacobiMode::Full) {
        double m = 0;
        for (double v : sol.constraint) m = std::max(m, v);
        (c.output.empty() ? std::cerr : std::cout)
            << "max vertical constraint " << std::setprecision(6) << std::scientific << m << "\n";
      }
    } else if (*surf) {
      const auto f = parse_polynomial(poly, n);
      const auto field = f.field();
      const auto x = vector_arg(at, n, "at");
      std::cout << std::setprecision(12);
      if (*s_norm) {
        const auto nd = surface_normals(g, field, x);
        if (nd.characteristic) throw Error(Code::Characteristic, "characteristic point");
        std::cout << "frame gradient " << fmt(nd.frame_grad) << "\n";
        std::cout << "nu " << fmt(nd.nu) << "\n";
        std::cout << "nu_H " << fmt(nd.nuH) << "\n";
        std::cout << "varpi " << fmt(nd.varpi) << "\n";
      } else if (*s_metric) {
        const auto tr = metric_normal(g, field, x, t0, t1, steps);
        print_diagnostics(tr);
        std::cout << std::setprecision(12) << "endpoint " << fmt(tr.states.back().x) << "\n";
        write_trace(c, tr);
      } else {
        const Vec<double> y0 = base.empty() ? foot_guess(f, x) : vector_arg(base, n, "base");
        ChartOptions<double> co;
        co.rho = rho;
        co.eps = eps;
        const auto ch = build_chart(g, field, y0, co);
        if (*s_delta) {
          std::cout << "delta " << delta_H(ch, x) << "\n";
          std::cout << "gradient " << fmt(grad_delta_H(ch, x)) << "\n";
        } else {
          const auto p = project_to_surface(ch, x);
          const Vec<double> back = phi_map(ch, p.y, p.t);
          std::cout << "foot " << fmt(p.y) << "\n";
          std::cout << "u " << fmt(p.u) << "\n";
          std::cout << "t " << p.t << "\n";
          std::cout << std::setprecision(3) << std::scientific;
          std::cout << "f(foot) " << f(p.y) << "\n";
          std::cout << "round trip residual " << (back - x).norm() << "\n";
          std::cout << std::defaultfloat << "newton iterations " << p.iterations << "\n";
        }
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.code() == Code::WrongStep && *dist)
      std::cerr << "distance needs the closed-form exponential, available for 2-step groups only\n";
    switch (category(e.code())) {
      case Category::Config: return 2;
      case Category::Math: return 3;
      case Category::Convergence: return 4;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
