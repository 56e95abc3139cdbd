// wedgewar: critical angles, wedge profiles, PDE checks, exit-time sweeps.
//
// Exit codes: 0 success, 1 usage, 2 numeric tolerance, 3 I/O.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wedgewar/wedgewar.hpp"

namespace ww = wedgewar;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kTolerance = 2;
constexpr int kIo = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int digits = 17) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ww::IoError("cannot write " + path);
  return out;
}

// ---- critical-angle ----

struct CriticalArgs {
  double p = 2.0;
  double tol = 1e-10;
  double k_tol = 1e-4;
  std::string theta_table;
  bool as_json = false;
};

int cmd_critical_angle(const CriticalArgs& a) {
  if (!(a.p > 1.0) || !std::isfinite(a.p)) throw UsageError("--p must be a finite number > 1");
  if (!(a.tol > 0.0)) throw UsageError("--tol must be > 0");
  const ww::CriticalAngleResult r = ww::critical_angle(a.p, a.tol);
  const double k = ww::k_route_half_angle(a.p);
  const double k_disc = std::abs(k - r.half_angle_closed);
  const bool ok = r.within_tolerance() && k_disc <= a.k_tol;

  if (a.as_json) {
    json j{{"p", a.p},
           {"half_angle_closed", r.half_angle_closed},
           {"half_angle_quadrature", r.half_angle_quadrature},
           {"half_angle_k_route", k},
           {"quadrature_discrepancy", r.discrepancy},
           {"quadrature_tolerance", r.tolerance},
           {"k_route_discrepancy", k_disc},
           {"k_route_tolerance", a.k_tol},
           {"full_angle", r.full_angle()},
           {"ok", ok}};
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "p                      " << fmt(a.p) << '\n'
              << "half-angle (closed)    " << fmt(r.half_angle_closed) << '\n'
              << "half-angle (quadrature)" << ' ' << fmt(r.half_angle_quadrature) << "  |diff| " << fmt(r.discrepancy, 3)
              << " (tol " << fmt(r.tolerance, 3) << ")\n"
              << "half-angle (K route)   " << fmt(k) << "  |diff| " << fmt(k_disc, 3) << " (tol " << fmt(a.k_tol, 3)
              << ")\n"
              << "full angle             " << fmt(r.full_angle()) << '\n'
              << "lower bound on the critical full angle: " << fmt(r.full_angle()) << ", trivial upper bound: pi\n"
              << (ok ? "all routes agree\n" : "routes DISAGREE beyond tolerance\n");
  }

  if (!a.theta_table.empty()) {
    auto out = open_out(a.theta_table);
    out << "a,theta_a\n" << std::setprecision(17);
    for (int i = 0; i <= 48; ++i) {
      const double av = std::pow(10.0, -3.0 + 6.0 * i / 48.0);
      out << av << ',' << ww::theta_a(av, a.p) << '\n';
    }
    out << "inf," << k << '\n';
    if (!out) throw ww::IoError("failed writing " + a.theta_table);
  }
  return ok ? kOk : kTolerance;
}

// ---- solve ----

struct SolveArgs {
  double p = 2.0;
  double eta = 0.0;
  std::size_t nodes = 1024;
  double tol = 1e-11;
  std::string out;
};

int cmd_solve(const SolveArgs& a) {
  if (!(a.p > 1.0) || !std::isfinite(a.p)) throw UsageError("--p must be a finite number > 1");
  if (!(a.eta > 0.0)) throw UsageError("--eta must be > 0");
  if (a.nodes < 16) throw UsageError("--nodes must be >= 16");
  ww::AngularProfile prof;
  try {
    prof = ww::profile_for_half_angle(0.5 * a.eta, a.p, a.nodes, a.tol);
  } catch (const ww::OutOfRangeError& e) {
    std::ostringstream os;
    os << "eta=" << a.eta << " is not below the critical full angle " << fmt(2.0 * e.critical(), 12) << " for p=" << a.p;
    if (a.p == 2.0) os << " (pi/2)";
    throw UsageError(os.str());
  }
  prof.save(a.out);
  const double res = prof.max_residual();
  const double res_tol = 1e-6 * std::pow(1.0 + prof.a(), 3);
  std::cout << "a            " << fmt(prof.a()) << '\n'
            << "theta_a      " << fmt(prof.theta_a()) << '\n'
            << "max residual " << fmt(res, 3) << " (tol " << fmt(res_tol, 3) << ")\n"
            << "wrote        " << a.out << " and " << ww::AngularProfile::metadata_path(a.out) << '\n';
  return res <= res_tol ? kOk : kTolerance;
}

// ---- verify ----

struct VerifyArgs {
  std::string profile;
  int points = 50;
  double h_rel = 1e-4;
  double tol = 1e-4;
  std::uint64_t seed = 1;
};

int cmd_verify(const VerifyArgs& a) {
  if (a.points < 1) throw UsageError("--points must be >= 1");
  if (!(a.h_rel > 0.0)) throw UsageError("--h-rel must be > 0");
  const ww::AngularProfile prof = ww::AngularProfile::load(a.profile);
  const ww::PSolution sol(prof, prof.theta_a(), ww::Vec2::Zero());
  const double p = prof.p();
  ww::CounterRng rng = ww::stream_for(a.seed, 0);

  double worst = 0.0;
  for (int i = 0; i < a.points; ++i) {
    const double r = 0.5 + 4.5 * rng.uniform();
    const double th = (2.0 * rng.uniform() - 1.0) * 0.9 * prof.theta_a();
    const ww::Vec2 x = r * ww::Vec2(std::cos(th), std::sin(th));
    const double lp = ww::game_p_laplacian_fd([&](const ww::Vec2& y) { return sol.u(y); }, x, a.h_rel * r, p);
    worst = std::max(worst, std::abs(lp + 1.0));
  }

  // the same FD operator on fields with known answers
  const ww::Vec2 x0(1.3, 0.4);
  const double h0 = a.h_rel * x0.norm();
  const double lin = ww::game_p_laplacian_fd([](const ww::Vec2& y) { return y.x(); }, x0, h0, p);
  const double q = p / (p - 1.0);
  const double quad_exact = 2.0 / p + (1.0 / q - 1.0 / p);
  const double quad = ww::game_p_laplacian_fd([](const ww::Vec2& y) { return 0.5 * y.squaredNorm(); }, x0, h0, p);

  const bool ok = worst <= a.tol && std::abs(lin) <= 1e-6 && std::abs(quad - quad_exact) <= 1e-6;
  json j{{"max_abs_residual", worst},
         {"points", a.points},
         {"h_policy", "h = " + fmt(a.h_rel, 3) + " * r, central differences"},
         {"tolerance", a.tol},
         {"a", prof.a()},
         {"p", p},
         {"theta_a", prof.theta_a()},
         {"checks",
          {{"linear_field", {{"value", lin}, {"expected", 0.0}}},
           {"quadratic_field", {{"value", quad}, {"expected", quad_exact}}},
           {"u_field", {{"max_abs_residual", worst}, {"expected", -1.0}}}}},
         {"ok", ok}};
  std::cout << j.dump(2) << '\n';
  return ok ? kOk : kTolerance;
}

// ---- simulate ----

struct SimulateArgs {
  std::string config;
  std::string out;
  int threads = -1;
};

json sweep_json(const std::vector<ww::SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    arr.push_back({{"eps", r.eps},
                   {"eta", r.eta},
                   {"p", r.p},
                   {"strategy_I", r.strategy_one},
                   {"strategy_II", r.strategy_two},
                   {"n_traj", e.n_traj},
                   {"mean_tau", e.mean_tau},
                   {"scaled", e.scaled},
                   {"ci95", e.ci95},
                   {"censored_fraction", e.censored_fraction},
                   {"seed", r.seed}});
  }
  return arr;
}

int cmd_simulate(const SimulateArgs& a) {
  ww::RunConfig rc = ww::load_run_config(a.config);
  if (a.threads >= 0) rc.grid.threads = static_cast<unsigned>(a.threads);
  const std::string out_path = a.out.empty() ? rc.csv_path : a.out;
  const auto rows = ww::sweep(rc.grid);

  if (!out_path.empty()) {
    auto out = open_out(out_path);
    if (rc.format == "json")
      out << sweep_json(rows).dump(2) << '\n';
    else
      ww::write_sweep_csv(rows, out);
    if (!out) throw ww::IoError("failed writing " + out_path);
  } else {
    ww::write_sweep_csv(rows, std::cout);
  }

  std::cout << std::left << std::setw(8) << "eps" << std::setw(9) << "eta" << std::setw(6) << "p" << std::setw(12)
            << "I" << std::setw(12) << "II" << std::setw(12) << "eps^2 E[t]" << std::setw(11) << "+-ci95"
            << "censored\n";
  int all_censored = 0;
  for (const auto& r : rows) {
    const auto& e = r.estimate;
    std::cout << std::setw(8) << fmt(r.eps, 4) << std::setw(9) << fmt(r.eta, 5) << std::setw(6) << fmt(r.p, 4)
              << std::setw(12) << r.strategy_one << std::setw(12) << r.strategy_two << std::setw(12)
              << fmt(e.scaled, 5) << std::setw(11) << fmt(e.scaled_ci95(), 3) << fmt(e.censored_fraction, 3)
              << (e.all_censored() ? "  (all censored: lower bound only)" : "") << '\n';
    all_censored += e.all_censored() ? 1 : 0;
  }
  if (all_censored) std::cerr << "warning: " << all_censored << " cell(s) fully censored\n";
  if (!out_path.empty()) std::cout << "wrote " << out_path << '\n';
  return kOk;
}

// ---- plotdata ----

struct PlotArgs {
  std::string in;
  std::string kind;
  std::string out;
};

std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ww::IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ww::IoError(path + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) header.push_back(c);
  }
  std::vector<std::map<std::string, std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string c;
    std::map<std::string, std::string> row;
    std::size_t i = 0;
    while (std::getline(ss, c, ',')) {
      if (i >= header.size()) throw ww::IoError(path + ":" + std::to_string(line_no) + ": too many columns");
      row[header[i++]] = c;
    }
    if (i != header.size()) throw ww::IoError(path + ":" + std::to_string(line_no) + ": too few columns");
    rows.push_back(std::move(row));
  }
  return rows;
}

double cell(const std::map<std::string, std::string>& row, const std::string& key, const std::string& path) {
  auto it = row.find(key);
  if (it == row.end()) throw ww::IoError(path + ": missing column '" + key + "'");
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ww::IoError(path + ": column '" + key + "' holds a non-number '" + it->second + "'");
  }
}

struct Series {
  std::string label;
  std::vector<double> x = {}, y = {};
};

int cmd_plotdata(const PlotArgs& a) {
  static const std::vector<std::string> kinds{"theta_vs_a", "profile", "sweep"};
  if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end())
    throw UsageError("unknown --kind '" + a.kind + "' (expected theta_vs_a, profile or sweep)");
  const auto rows = read_csv(a.in);
  std::vector<Series> series;
  std::string xl, yl;

  if (a.kind == "theta_vs_a") {
    xl = "a";
    yl = "theta_a";
    Series s{"theta_a"};
    for (const auto& r : rows) {
      if (r.at("a") == "inf") continue;
      s.x.push_back(cell(r, "a", a.in));
      s.y.push_back(cell(r, "theta_a", a.in));
    }
    series.push_back(std::move(s));
  } else if (a.kind == "profile") {
    xl = "theta";
    yl = "value";
    Series f{"f"}, fp{"f'"}, fpp{"f''"};
    for (const auto& r : rows) {
      const double th = cell(r, "theta", a.in);
      f.x.push_back(th);
      f.y.push_back(cell(r, "y", a.in));
      fp.x.push_back(th);
      fp.y.push_back(cell(r, "yp", a.in));
      fpp.x.push_back(th);
      fpp.y.push_back(cell(r, "ypp", a.in));
    }
    series = {f, fp, fpp};
  } else {
    xl = "eps";
    yl = "eps^2 E[tau]";
    std::map<std::string, Series> by;
    std::vector<std::string> order;
    for (const auto& r : rows) {
      std::ostringstream key;
      key << r.at("strategy_I") << " vs " << r.at("strategy_II") << " eta=" << r.at("eta") << " p=" << r.at("p");
      if (!by.count(key.str())) {
        order.push_back(key.str());
        by[key.str()].label = key.str();
      }
      by[key.str()].x.push_back(cell(r, "eps", a.in));
      by[key.str()].y.push_back(cell(r, "scaled", a.in));
    }
    for (const auto& k : order) series.push_back(by[k]);
  }

  auto out = open_out(a.out);
  const bool as_json = a.out.size() >= 5 && a.out.substr(a.out.size() - 5) == ".json";
  if (as_json) {
    json j{{"kind", a.kind}, {"x_label", xl}, {"y_label", yl}, {"series", json::array()}};
    for (const auto& s : series) j["series"].push_back({{"label", s.label}, {"x", s.x}, {"y", s.y}});
    out << j.dump(2) << '\n';
  } else {
    out << "series,x,y\n" << std::setprecision(17);
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) out << '"' << s.label << "\"," << s.x[i] << ',' << s.y[i] << '\n';
  }
  if (!out) throw ww::IoError("failed writing " + a.out);
  std::cout << "wrote " << a.out << " (" << series.size() << " series)\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical wedge angles, p-Laplacian wedge solutions and tug-of-war exit-time experiments"};
  app.require_subcommand(1);

  CriticalArgs ca;
  auto* crit = app.add_subcommand("critical-angle", "Critical half-angle by closed form, quadrature and the K route");
  crit->add_option("--p", ca.p, "Exponent p > 1")->required();
  crit->add_option("--tol", ca.tol, "Tolerance for closed form vs quadrature")->capture_default_str();
  crit->add_option("--k-tol", ca.k_tol, "Tolerance for the K route")->capture_default_str();
  crit->add_option("--theta-table", ca.theta_table, "Also write a,theta_a over a in [1e-3, 1e3] to this CSV");
  crit->add_flag("--json", ca.as_json, "Print JSON");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "Calibrate a to a wedge and write the angular profile");
  solve->add_option("--p", sa.p, "Exponent p > 1")->required();
  solve->add_option("--eta", sa.eta, "Full wedge aperture (radians)")->required();
  solve->add_option("--nodes", sa.nodes, "Grid nodes")->capture_default_str();
  solve->add_option("--tol", sa.tol, "Calibration tolerance on theta_a")->capture_default_str();
  solve->add_option("--out", sa.out, "Profile CSV path (metadata goes to <path>.meta)")->required();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Finite-difference check of the game p-Laplacian of u");
  verify->add_option("--profile", va.profile, "Profile CSV written by solve")->required();
  verify->add_option("--points", va.points, "Random interior points")->capture_default_str();
  verify->add_option("--h-rel", va.h_rel, "FD step relative to |x|")->capture_default_str();
  verify->add_option("--tol", va.tol, "Residual tolerance")->capture_default_str();
  verify->add_option("--seed", va.seed, "Seed for the sample points")->capture_default_str();

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Run an exit-time sweep from a config file");
  sim->add_option("--config", ma.config, "Config file")->required();
  sim->add_option("--out", ma.out, "Output path (overrides [output] csv)");
  sim->add_option("--threads", ma.threads, "Worker threads (default: WEDGEWAR_THREADS or all cores)");

  PlotArgs pa;
  auto* plot = app.add_subcommand("plotdata", "Reshape CSV output into labelled x/y series");
  plot->add_option("--in", pa.in, "Input CSV")->required();
  plot->add_option("--kind", pa.kind, "theta_vs_a | profile | sweep")->required();
  plot->add_option("--out", pa.out, "Output path (.json for JSON, otherwise CSV)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*crit) return cmd_critical_angle(ca);
    if (*solve) return cmd_solve(sa);
    if (*verify) return cmd_verify(va);
    if (*sim) return cmd_simulate(ma);
    if (*plot) return cmd_plotdata(pa);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ww::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const ww::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ww::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ww::Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kTolerance;
  }
  return kUsage;
}
