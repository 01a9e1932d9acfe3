// gclosure: scenario driver for the homogenization laboratory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "gclosure/cell_solver.hpp"
#include "gclosure/counterexamples.hpp"
#include "gclosure/io.hpp"
#include "gclosure/linear_cell.hpp"
#include "gclosure/microstructure.hpp"
#include "gclosure/twoscale.hpp"
#include "gclosure/young.hpp"

namespace fs = std::filesystem;
using namespace gclosure;

namespace {

constexpr const char* kVersion = "0.1.0";

enum ExitCode { kPass = 0, kAssertion = 2, kConfig = 3, kSolver = 4 };

struct ConfigError : std::runtime_error {
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error("config key '" + key + "': " + what), key(key) {}
  std::string key;
};

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Typed access to the INI tree; every failure names the offending key.
class Config {
 public:
  Config(std::string text, const fs::path& origin) : text_(std::move(text)), origin_(origin) {
    std::istringstream is(text_);
    try {
      boost::property_tree::read_ini(is, tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw ConfigError("<file>", e.message() + " at line " + std::to_string(e.line()));
    }
  }

  const std::string& text() const { return text_; }
  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return tree_.get<std::string>(key, fallback);
  }

  template <typename T>
  T get(const std::string& key, T fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    return parse<T>(key, *raw);
  }

  template <typename T>
  std::vector<T> list(const std::string& key, std::vector<T> fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::vector<T> out;
    std::stringstream ss(*raw);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse<T>(key, trim(item)));
    if (out.empty()) throw ConfigError(key, "empty list");
    return out;
  }

  /// Semicolon-separated 2x2 matrices, entries a11,a12,a21,a22.
  std::vector<Matrix> matrices(const std::string& key, std::vector<Matrix> fallback) const {
    const auto raw = tree_.get_optional<std::string>(key);
    if (!raw) return fallback;
    std::vector<Matrix> out;
    std::stringstream ss(*raw);
    std::string item;
    while (std::getline(ss, item, ';')) {
      std::stringstream is(item);
      std::string e;
      std::vector<double> v;
      while (std::getline(is, e, ',')) v.push_back(parse<double>(key, trim(e)));
      if (v.size() != 4) throw ConfigError(key, "a matrix needs four entries a11,a12,a21,a22");
      out.push_back(Matrix::from_rows(2, 2, {v[0], v[1], v[2], v[3]}));
    }
    if (out.empty()) throw ConfigError(key, "empty matrix list");
    return out;
  }

  fs::path path(const std::string& key) const {
    fs::path p = str(key, "");
    if (p.is_relative()) p = origin_.parent_path() / p;
    if (!fs::exists(p)) throw ConfigError(key, "file " + p.string() + " does not exist");
    return p;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

  template <typename T>
  static T parse(const std::string& key, const std::string& raw) {
    std::istringstream is(raw);
    T v{};
    if constexpr (std::is_same_v<T, bool>) {
      std::string s;
      is >> s;
      if (s == "true" || s == "1" || s == "yes") return true;
      if (s == "false" || s == "0" || s == "no") return false;
      throw ConfigError(key, "expected a boolean, got '" + raw + "'");
    } else {
      is >> v;
      std::string rest;
      if (is.fail() || (is >> rest)) throw ConfigError(key, "cannot parse '" + raw + "'");
      return v;
    }
  }

  std::string text_;
  fs::path origin_;
  boost::property_tree::ptree tree_;
};

struct Options {
  std::string scenario;
  fs::path config;
  fs::path out = "results";
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool dump_field = false;
  std::optional<int> depth;
};

/// Output directory, artifact list and assertion ledger of one run.
class Run {
 public:
  Run(const Options& opt, const Config& cfg) : opt_(opt), cfg_(cfg) {
    std::ostringstream key;
    key << cfg.text() << "\n#scenario=" << opt.scenario << "\n#seed=" << seed()
        << "\n#depth=" << (opt.depth ? std::to_string(*opt.depth) : "-");
    hash_ = io::hex64(io::fnv1a(key.str()));

    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
    fs::path base = opt.out / opt.scenario / stamp;
    dir_ = base;
    for (int n = 1; fs::exists(dir_); ++n) dir_ = base.string() + "-" + std::to_string(n);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "config.ini") << cfg.text();
    files_.push_back("config.ini");
  }

  std::uint64_t seed() const { return opt_.seed.value_or(cfg_.get<std::uint64_t>("run.seed", 0)); }
  int threads() const { return opt_.threads; }
  const std::string& hash() const { return hash_; }
  const fs::path& dir() const { return dir_; }
  const Options& options() const { return opt_; }

  io::CsvTable table(std::vector<std::string> header) const { return io::CsvTable(std::move(header), hash_); }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(dir_ / name);
    body(os);
    files_.push_back(name);
  }
  void write(const std::string& name, const io::CsvTable& t) {
    write(name, [&](std::ostream& os) { t.write(os); });
  }

  void check(const std::string& name, bool ok, const std::string& detail) {
    checks_.push_back({name, ok, detail});
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
  }
  void note(const std::string& line) {
    notes_.push_back(line);
    std::cout << line << '\n';
  }

  bool passed() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const auto& c) { return c.ok; });
  }

  void finish(const std::string& status) {
    write("summary.txt", [&](std::ostream& os) {
      for (const auto& n : notes_) os << n << '\n';
      for (const auto& c : checks_) os << (c.ok ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
      os << "status: " << status << '\n';
    });
    std::ofstream os(dir_ / "MANIFEST");
    os << "gclosure " << kVersion << '\n'
       << "compiler " << __VERSION__ << '\n'
       << "scenario " << opt_.scenario << '\n'
       << "config " << fs::absolute(opt_.config).string() << '\n'
       << "config_hash " << hash_ << '\n'
       << "seed " << seed() << '\n'
       << "threads " << opt_.threads << '\n'
       << "status " << status << '\n';
    for (const auto& f : files_) os << "file " << f << '\n';
  }

 private:
  struct Check {
    std::string name;
    bool ok;
    std::string detail;
  };
  Options opt_;
  const Config& cfg_;
  std::string hash_;
  fs::path dir_;
  std::vector<std::string> files_;
  std::vector<Check> checks_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

SolverOptions solver_options(const Config& cfg, const Run& run) {
  SolverOptions o;
  o.max_iters = cfg.get("solver.max_iters", o.max_iters);
  o.grad_tol = cfg.get("solver.grad_tol", o.grad_tol);
  o.restarts = cfg.get("solver.restarts", o.restarts);
  o.memory = cfg.get("solver.memory", o.memory);
  o.seed = run.seed();
  o.threads = run.threads();
  if (cfg.has("solver.eps")) o.eps_override = cfg.get("solver.eps", 1e-3);
  try {
    o.validate();
  } catch (const Error& e) {
    throw ConfigError("solver", e.what());
  }
  return o;
}

FractionVector fraction_key(const Config& cfg, const std::string& key, std::vector<double> fallback) {
  try {
    return FractionVector(cfg.list<double>(key, std::move(fallback)));
  } catch (const InvalidFraction& e) {
    throw ConfigError(key, e.what());
  }
}

PhaseMap geometry(const Config& cfg, int N, std::uint64_t seed) {
  const std::string type = cfg.str("geometry.type", "stripe");
  const PeriodicGrid grid(N, 1);
  try {
    if (type == "stripe") {
      const auto theta = fraction_key(cfg, "geometry.theta", {0.5, 0.5});
      return stripe(grid, cfg.get("geometry.axis", 1), theta[0]);
    }
    if (type == "checkerboard") return checkerboard(grid, cfg.get("geometry.cells", 2));
    if (type == "random")
      return random_with_fraction(grid, fraction_key(cfg, "geometry.theta", {0.5, 0.5}), seed);
    if (type == "file") {
      std::ifstream is(cfg.path("geometry.file"));
      PhaseMap chi = read_phasemap(is);
      if (chi.grid().N() != N || chi.grid().j() != 1)
        throw ConfigError("geometry.file", "geometry resolution differs from grid.N");
      return chi;
    }
  } catch (const NonIntegralFraction& e) {
    throw ConfigError("geometry.theta", e.what());
  } catch (const FormatError& e) {
    throw ConfigError("geometry.file", e.what());
  }
  throw ConfigError("geometry.type", "unknown geometry '" + type + "'");
}

UnicoVariant unico_variant(const Config& cfg) {
  const std::string v = cfg.str("mixture.variant", "polymax");
  if (v == "polymax") return UnicoVariant::PolyMax;
  if (v == "distpower") return UnicoVariant::DistPower;
  if (v == "distpower_hull") return UnicoVariant::DistPowerHull;
  throw ConfigError("mixture.variant", "unknown variant '" + v + "'");
}

/// Mixture from the [mixture] and [geometry] sections.
MixtureDensity mixture(const Config& cfg, int N, std::uint64_t seed) {
  const std::string kind = cfg.str("mixture.kind", "unico");
  if (kind == "unico")
    return unico_mixture(N, unico_variant(cfg), cfg.get("mixture.p", 4.0), cfg.get("mixture.eps", 1e-3));
  if (kind == "convex_control")
    return unico_convex_control(N, cfg.get("mixture.a1", 1.0), cfg.get("mixture.a2", 2.0));
  if (kind == "isotropic") {
    const auto a = cfg.list<double>("mixture.a", {1.0, 2.0});
    const int m = cfg.get("mixture.m", 1);
    PhaseMap chi = geometry(cfg, N, seed);
    if (static_cast<int>(a.size()) != chi.phases())
      throw ConfigError("mixture.a", "one coefficient per phase is required");
    std::vector<EnergyDensity> phases;
    try {
      for (double v : a) phases.push_back(EnergyDensity::isotropic(v, m));
    } catch (const Error& e) {
      throw ConfigError("mixture.a", e.what());
    }
    return MixtureDensity(std::move(phases), std::move(chi));
  }
  throw ConfigError("mixture.kind", "unknown mixture '" + kind + "'");
}

std::optional<LaminateHint> laminate_hint(const Config& cfg) {
  if (!cfg.has("laminate.lower")) return std::nullopt;
  LaminateHint h;
  h.lower = cfg.matrices("laminate.lower", {}).front();
  h.upper = cfg.matrices("laminate.upper", {}).front();
  h.normal_axis = cfg.get("laminate.axis", 2);
  h.lambda = cfg.get("laminate.lambda", 0.5);
  return h;
}

void require_converged(const Config& cfg, const CellResult& r, const std::string& what) {
  if (!r.converged && cfg.get("solver.require_convergence", true))
    throw SolverFailure(what + " did not reach the gradient tolerance (residual " + fmt(r.residual) + ")");
}

void add_cell_row(io::CsvTable& t, const Matrix& xi, int j, const CellResult& r) {
  t.row() << xi(0, 0) << xi(0, 1) << xi(1, 0) << xi(1, 1) << j << r.value << r.residual
          << r.iterations << r.converged << r.restarts_used;
}

const std::vector<std::string> kCellHeader{"xi11", "xi12", "xi21", "xi22", "j", "value",
                                           "residual", "iterations", "converged", "restarts"};

void dump_field(Run& run, const std::string& name, const VectorField& f) {
  if (run.options().dump_field) run.write(name, [&](std::ostream& os) { write_field_csv(os, f); });
}

// ---------------------------------------------------------------------------

void scenario_cell(Run& run, const Config& cfg) {
  const int N = cfg.get("grid.N", 64);
  const MixtureDensity M = mixture(cfg, N, run.seed());
  SolverOptions opts = solver_options(cfg, run);
  opts.laminate = laminate_hint(cfg);
  const auto xis = cfg.matrices("sweep.xi", {named::B(), named::C()});
  auto t = run.table(kCellHeader);
  for (std::size_t i = 0; i < xis.size(); ++i) {
    const CellResult r = cell_integrand(M, xis[i], opts);
    require_converged(cfg, r, "cell solve " + std::to_string(i));
    add_cell_row(t, xis[i], 1, r);
    run.note("xi " + std::to_string(i) + ": value " + fmt(r.value, 10) + " residual " + fmt(r.residual));
    dump_field(run, "field_xi" + std::to_string(i) + ".csv", r.minimizer);
  }
  run.write("cell.csv", t);
}

void scenario_hom(Run& run, const Config& cfg) {
  const int N = cfg.get("grid.N", 32);
  const MixtureDensity M = mixture(cfg, N, run.seed());
  SolverOptions opts = solver_options(cfg, run);
  opts.laminate = laminate_hint(cfg);
  const auto js = cfg.list<int>("grid.j_list", {1, 2, 4});
  const Matrix xi = cfg.matrices("sweep.xi", {named::C()}).front();
  std::vector<HomEntry> entries;
  try {
    entries = hom_integrand(M, xi, js, opts);
  } catch (const DimensionMismatch& e) {
    throw ConfigError("grid.j_list", e.what());
  }
  auto t = run.table(kCellHeader);
  io::Series s{"multi-cell value", {}, {}};
  for (const auto& e : entries) {
    require_converged(cfg, e.result, "j = " + std::to_string(e.j));
    add_cell_row(t, xi, e.j, e.result);
    s.x.push_back(e.j);
    s.y.push_back(e.result.value);
    dump_field(run, "field_j" + std::to_string(e.j) + ".csv", e.result.minimizer);
  }
  run.write("hom.csv", t);
  run.write("hom.svg", [&](std::ostream& os) { io::write_svg_lines(os, "multi-cell values", "j", "value", {s}); });
  const double tol = cfg.get("thresholds.monotone_tol", 1e-9);
  bool mono = true;
  for (std::size_t a = 0; a < entries.size(); ++a)
    for (std::size_t b = 0; b < entries.size(); ++b)
      if (entries[b].j % entries[a].j == 0 && entries[b].result.value > entries[a].result.value + tol)
        mono = false;
  run.check("divisor-monotone", mono, "values non-increasing along divisor chains (tol " + fmt(tol) + ")");
  run.note("hom estimate " + fmt(hom_estimate(entries), 10));
}

void scenario_linear(Run& run, const Config& cfg) {
  const int N = cfg.get("grid.N", 128);
  const auto stripe_a = cfg.list<double>("linear.stripe_a", {1.0, 2.0});
  const auto cb_a = cfg.list<double>("linear.checker_a", {1.0, 4.0});
  const int cb_N = cfg.get("linear.checker_N", 256);
  const double theta = cfg.get("linear.theta", 0.5);
  const int count = cfg.get("linear.count", 50);
  const int sample_N = cfg.get("linear.sample_N", 32);
  const double lam_tol = cfg.get("thresholds.laminate_tol", 1e-8);
  const double duality_tol = cfg.get("thresholds.duality_tol", 1e-3);
  const double bound_tol = cfg.get("thresholds.bound_tol", 1e-8);
  if (stripe_a.size() != 2 || cb_a.size() != 2) throw ConfigError("linear", "two phase coefficients expected");

  auto iso = [](double a) { return Matrix::diag(a, a); };
  auto t = run.table({"case", "a11", "a12", "a21", "a22", "res1", "res2"});
  auto row = [&](const std::string& name, const EffectiveTensor& T) {
    t.row() << name << T.A(0, 0) << T.A(0, 1) << T.A(1, 0) << T.A(1, 1) << T.residuals[0] << T.residuals[1];
  };
  try {
    const PeriodicGrid g(N, 1);
    const EffectiveTensor S = a_cell(ConductivityMixture({iso(stripe_a[0]), iso(stripe_a[1])}, stripe(g, 1, 0.5)));
    row("stripe", S);
    const double h = 2.0 / (1.0 / stripe_a[0] + 1.0 / stripe_a[1]), ar = 0.5 * (stripe_a[0] + stripe_a[1]);
    const double err = norm(S.A - Matrix::diag(h, ar));
    run.check("laminate", err <= lam_tol, "|A_cell - diag(harmonic, arithmetic)| = " + fmt(err, 3));

    const PeriodicGrid gc(cb_N, 1);
    const PhaseMap cb = checkerboard(gc, 2);
    const EffectiveTensor C12 = a_cell_symmetrized(ConductivityMixture({iso(cb_a[0]), iso(cb_a[1])}, cb));
    const EffectiveTensor C21 = a_cell_symmetrized(ConductivityMixture({iso(cb_a[1]), iso(cb_a[0])}, cb));
    const EffectiveTensor F12 = a_cell(ConductivityMixture({iso(cb_a[0]), iso(cb_a[1])}, cb));
    row("checkerboard", C12);
    row("checkerboard-swapped", C21);
    row("checkerboard-forward", F12);
    const double s = std::sqrt(cb_a[0] * cb_a[1]);
    const double e1 = 0.0 + std::max({std::fabs(C12.A(0, 0) - s), std::fabs(C12.A(1, 1) - s),
                                      std::fabs(C12.A(0, 1)), std::fabs(C12.A(1, 0))});
    const Matrix prod = matmul(C12.A, C21.A) - Matrix::diag(cb_a[0] * cb_a[1], cb_a[0] * cb_a[1]);
    const double e2 = std::max({std::fabs(prod[0]), std::fabs(prod[1]), std::fabs(prod[2]), std::fabs(prod[3])});
    run.check("checkerboard", e1 <= duality_tol, "max |A_cell - sqrt(a1 a2) Id| = " + fmt(e1, 3));
    run.check("swap-duality", e2 <= duality_tol, "max |A(a1,a2) A(a2,a1) - a1 a2 Id| = " + fmt(e2, 3));
    run.note("forward-stencil checkerboard: det " + fmt(det(F12.A), 12) + ", off-diagonal " + fmt(F12.A(0, 1), 3));

    const auto set = p_theta_sample(iso(stripe_a[0]), iso(stripe_a[1]), theta, count, run.seed(), sample_N);
    run.write("p_theta.csv", [&](std::ostream& os) { write_theta_csv(os, set); });
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& smp : set.samples) {
      const auto b = check_bounds(smp.tensor, ConductivityMixture({iso(stripe_a[0]), iso(stripe_a[1])}, smp.chi));
      worst = std::min({worst, b.reuss_slack, b.voigt_slack});
    }
    for (const auto& w : set.warnings) run.note("warning: " + w);
    run.check("voigt-reuss", worst >= -bound_tol,
              std::to_string(set.samples.size()) + " geometries, worst slack " + fmt(worst, 3));
  } catch (const CGStalled& e) {
    throw SolverFailure(e.what());
  }
  run.write("linear.csv", t);
}

void scenario_tartar(Run& run, const Config& cfg) {
  const int depth = run.options().depth.value_or(cfg.get("tartar.depth", 6));
  if (depth < 1) throw ConfigError("tartar.depth", "depth must be at least 1");
  const auto sq = tartar_square();
  run.write("square.csv", [&](std::ostream& os) { write_measure_csv(os, sq); });
  run.check("barycenter", barycenter(sq) == RationalMatrix::diag(-1, -1), "square barycenter is exactly -I");
  bool none = true;
  for (int a = 1; a <= 4; ++a)
    for (int b = a + 1; b <= 4; ++b) none = none && !rank_one_connected(tartar::A(a), tartar::A(b));
  run.check("no-rank-one", none, "all six atom pairs have nonzero det of the difference");

  auto t = run.table({"depth", "atom", "mass", "limit", "error", "bound"});
  bool within = true, exact_bary = true;
  for (int d = 1; d <= depth; ++d) {
    const auto lam = tartar_staircase(d);
    lam.validate();
    const auto mu = lam.leaf_measure();
    exact_bary = exact_bary && barycenter(mu) == RationalMatrix::diag(-1, -1);
    const Rational bound = Rational(1) / boost::multiprecision::pow(boost::multiprecision::cpp_int(16), d);
    for (int i = 1; i <= 4; ++i) {
      const Rational mass = mu.mass(tartar::A(i));
      const Rational limit(1 << (4 - i), 15);
      const Rational err = boost::multiprecision::abs(mass - limit);
      within = within && err <= bound;
      t.row() << d << ("A" + std::to_string(i)) << detail::to_double(mass) << detail::to_double(limit)
              << detail::to_double(err) << detail::to_double(bound);
    }
    if (d == depth) {
      run.write("staircase.txt", [&](std::ostream& os) { lam.write(os); });
      run.write("staircase_measure.csv", [&](std::ostream& os) { write_measure_csv(os, mu); });
    }
  }
  run.write("masses.csv", t);
  run.check("staircase-barycenter", exact_bary, "leaf barycenter is exactly -I at every depth");
  run.check("staircase-masses", within, "masses within 16^-d of (8,4,2,1)/15 for d <= " + std::to_string(depth));
}

void scenario_unico(Run& run, const Config& cfg) {
  const int N = cfg.get("grid.N", 64);
  const MixtureDensity M = unico_mixture(N, unico_variant(cfg), cfg.get("mixture.p", 4.0), cfg.get("mixture.eps", 1e-3));
  SolverOptions opts = solver_options(cfg, run);
  const double zero_tol = cfg.get("thresholds.zero_tol", 1e-5);
  const double positive = cfg.get("thresholds.positive", 1e-3);
  const double decay = cfg.get("thresholds.decay_factor", 3.0);
  const double excess_factor = cfg.get("thresholds.excess_factor", 10.0);

  auto t = run.table(kCellHeader);
  const CellResult rB = cell_integrand(M, named::B(), opts);
  require_converged(cfg, rB, "cell solve at B");
  add_cell_row(t, named::B(), 1, rB);
  run.check("cell-B", rB.value <= zero_tol, "W_cell(B) = " + fmt(rB.value, 3));

  SolverOptions hopts = opts;
  hopts.laminate = laminate_hint(cfg);
  const auto js = cfg.list<int>("grid.j_list", {1, 2, 4, 8});
  const auto entries = hom_integrand(M, named::C(), js, hopts);
  const CellResult& rC = entries.front().result;
  double min_start = std::numeric_limits<double>::infinity();
  for (double v : rC.start_values) min_start = std::min(min_start, v);
  run.check("cell-C", entries.front().j == 1 && rC.value >= positive && rC.restarts_used >= opts.restarts,
            "W_cell(C) = " + fmt(rC.value) + " over " + std::to_string(rC.restarts_used) + " starts (min " + fmt(min_start) + ")");
  io::Series s{"W_hom^(j)(C)", {}, {}};
  bool strict = true;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    require_converged(cfg, entries[i].result, "j = " + std::to_string(entries[i].j));
    add_cell_row(t, named::C(), entries[i].j, entries[i].result);
    s.x.push_back(entries[i].j);
    s.y.push_back(entries[i].result.value);
    if (i > 0) strict = strict && entries[i].result.value < entries[i - 1].result.value;
    dump_field(run, "field_C_j" + std::to_string(entries[i].j) + ".csv", entries[i].result.minimizer);
  }
  const double last = entries.back().result.value;
  run.check("hom-decay", strict && last <= rC.value / decay,
            "strictly decreasing, value(" + std::to_string(entries.back().j) + ") = " + fmt(last) +
                " vs value(1)/" + fmt(decay) + " = " + fmt(rC.value / decay));
  run.write("unico.csv", t);
  run.write("hom_decay.svg", [&](std::ostream& os) { io::write_svg_lines(os, "multi-cell values at C", "j", "value", {s}); });

  const auto lambdas = cfg.list<double>("probe.lambdas", {0.0, 0.25, 0.5, 0.75, 1.0});
  const ProbeResult pr = rank_one_probe(M, named::O(), named::B(), lambdas, opts);
  auto pt = run.table({"lambda", "value", "residual", "converged"});
  io::Series ps{"W_cell(lambda B)", {}, {}};
  for (std::size_t i = 0; i < pr.lambdas.size(); ++i) {
    pt.row() << pr.lambdas[i] << pr.values[i] << pr.results[i].residual << pr.results[i].converged;
    ps.x.push_back(pr.lambdas[i]);
    ps.y.push_back(pr.values[i]);
  }
  run.write("probe.csv", pt);
  run.write("probe.svg", [&](std::ostream& os) { io::write_svg_lines(os, "cell values on [O, B]", "lambda", "value", {ps}); });
  const double need = excess_factor * opts.grad_tol;
  run.check("rank-one-violation", pr.max_excess >= need,
            "midpoint excess over chord " + fmt(pr.max_excess) + " at lambda " + fmt(pr.lambdas[pr.worst_index]) +
                " (need " + fmt(need, 3) + ")");
}

void scenario_no_unico(Run& run, const Config& cfg) {
  const int N = cfg.get("grid.N", 32);
  const int j = cfg.get("grid.j", 8);
  const int k = cfg.get("grid.k", 2);
  const int ambient = cfg.get("grid.ambient_N", 512);
  const int blocks = cfg.get("grid.blocks", 4);
  if (static_cast<long long>(k) * j * N != ambient)
    throw ConfigError("grid.ambient_N", "must equal k * j * N");
  if (ambient % blocks != 0) throw ConfigError("grid.blocks", "must divide grid.ambient_N");
  SolverOptions opts = solver_options(cfg, run);
  opts.laminate = laminate_hint(cfg);
  const double positive = cfg.get("thresholds.positive", 1e-3);
  const double factor = cfg.get("thresholds.gap_factor", 3.0);
  const double control_tol = cfg.get("thresholds.control_tol", 1e-5);
  const Matrix xi = cfg.matrices("sweep.xi", {named::C()}).front();

  const MixtureDensity M = unico_mixture(N, unico_variant(cfg), cfg.get("mixture.p", 4.0), cfg.get("mixture.eps", 1e-3));
  const MixtureDensity Mc = unico_convex_control(N, cfg.get("control.a1", 1.0), cfg.get("control.a2", 2.0));
  const auto r = determinant_gap(M, xi, j, k, ambient, blocks, opts);
  const auto rc = determinant_gap(Mc, xi, j, k, ambient, blocks, opts);

  auto t = run.table({"mixture", "j", "k", "ambient_N", "E_k", "lower_bound", "det_cell_avg",
                      "det_of_limit", "gap", "limit_gap", "weak_deviation"});
  for (const auto* rep : {&r, &rc})
    t.row() << (rep == &r ? "unico" : "convex") << rep->j << rep->k << rep->ambient_N << rep->E_k
            << rep->lower_bound << rep->det_cell_avg << rep->det_of_limit_avg << rep->gap << rep->limit_gap
            << rep->weak_deviation;
  run.write("dashboard.csv", t);
  auto bt = run.table({"block_row", "block_col", "det_weak_avg"});
  for (int b = 0; b < blocks * blocks; ++b) bt.row() << b / blocks << b % blocks << r.det_weak_avg[b];
  run.write("blocks.csv", bt);
  run.write("blocks.svg", [&](std::ostream& os) { io::write_svg_heatmap(os, "block-averaged det", blocks, blocks, r.det_weak_avg); });

  run.check("lower-bound", r.lower_bound > positive, "W_cell = " + fmt(r.lower_bound) + " > " + fmt(positive, 3));
  run.check("energy-gap", r.E_k <= r.lower_bound / factor,
            "E_k = " + fmt(r.E_k) + " <= W_cell/" + fmt(factor) + " = " + fmt(r.lower_bound / factor));
  run.check("convex-control", std::fabs(rc.E_k - rc.lower_bound) <= control_tol,
            "convex |E_k - W_cell| = " + fmt(std::fabs(rc.E_k - rc.lower_bound), 3));
}

void scenario_fractions(Run& run, const Config& cfg) {
  const int cases = cfg.get("fractions.cases", 20);
  const int N = cfg.get("grid.N", 64);
  const int phases = cfg.get("fractions.phases", 3);
  if (cases < 1 || phases < 2) throw ConfigError("fractions", "need at least one case and two phases");
  std::mt19937_64 rng(run.seed());
  const PeriodicGrid g(N, 1);
  auto t = run.table({"case", "start_counts", "target_counts", "moved", "closed_form", "exact"});
  bool ok = true;
  auto draw = [&]() {
    std::vector<double> w(phases);
    double s = 0.0;
    for (double& v : w) s += (v = 1.0 + static_cast<double>(rng() % 1000));
    for (double& v : w) v /= s;
    double rest = 1.0;
    for (int i = 0; i + 1 < phases; ++i) rest -= w[i];
    w.back() = rest;
    return FractionVector(w);
  };
  auto join = [](const std::vector<std::size_t>& c) {
    std::string s;
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? " " : "") + std::to_string(c[i]);
    return s;
  };
  for (int c = 0; c < cases; ++c) {
    const PhaseMap chi = random_with_fraction(g, draw(), rng());
    const FractionVector target = draw();
    const auto want = largest_remainder_counts(target, g.size());
    const AdjustResult res = adjust_fraction(chi, target);
    const std::size_t closed = adjustment_distance(chi, target);
    const bool exact = res.map.counts() == want && res.moved == closed && symmetric_difference(chi, res.map) == closed;
    ok = ok && exact;
    t.row() << c << join(chi.counts()) << join(want) << res.moved << closed << exact;
  }
  run.write("fractions.csv", t);
  run.check("adjust-fraction", ok, std::to_string(cases) + " cases with exact counts and closed-form moves");
}

const std::map<std::string, void (*)(Run&, const Config&)> kScenarios{
    {"cell", scenario_cell},       {"hom", scenario_hom},         {"linear", scenario_linear},
    {"tartar", scenario_tartar},   {"unico", scenario_unico},     {"no-unico", scenario_no_unico},
    {"fractions", scenario_fractions}};

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"gclosure: periodic homogenization scenarios"};
  std::vector<std::string> names;
  for (const auto& [k, v] : kScenarios) names.push_back(k);
  app.add_option("scenario", opt.scenario, "Scenario to run")->required()->check(CLI::IsMember(names));
  app.add_option("--config", opt.config, "INI configuration file")->required();
  app.add_option("--out", opt.out, "Root of the results tree");
  app.add_option("--seed", opt.seed, "Seed overriding run.seed");
  app.add_option("--threads", opt.threads, "Worker threads for restarts")->check(CLI::PositiveNumber);
  app.add_flag("--dump-field", opt.dump_field, "Write minimizer fields as CSV");
  app.add_option("--depth", opt.depth, "Staircase depth for the tartar scenario");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    std::ifstream is(opt.config);
    if (!is) throw ConfigError("--config", "cannot read " + opt.config.string());
    std::stringstream text;
    text << is.rdbuf();
    const Config cfg(text.str(), opt.config);
    Run run(opt, cfg);
    std::cout << "scenario " << opt.scenario << " -> " << run.dir().string() << '\n';
    try {
      kScenarios.at(opt.scenario)(run, cfg);
    } catch (const ConfigError&) {
      run.finish("config-error");
      throw;
    } catch (const std::exception& e) {
      run.note(std::string("solver failure: ") + e.what());
      run.finish("solver-failure");
      return kSolver;
    }
    const bool ok = run.passed();
    run.finish(ok ? "pass" : "assertion-failure");
    return ok ? kPass : kAssertion;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
}
