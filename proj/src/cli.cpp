#include "secfield/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "secfield/datasets.hpp"
#include "secfield/dynamics.hpp"
#include "secfield/experiments.hpp"
#include "secfield/field.hpp"
#include "secfield/io.hpp"
#include "secfield/parallel.hpp"
#include "secfield/pipeline.hpp"
#include "secfield/serialization.hpp"

namespace secfield {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void usage(const std::string& what) { throw Error(ErrorKind::InvalidArgument, what); }

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) config_error("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; }))
      config_error("config: unknown key '" + where + (where.empty() ? "" : ".") + item.key() + "'");
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if constexpr (std::is_same_v<T, std::string>) {
    if (!it->is_string()) config_error("config: '" + where + key + "' must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!it->is_number_integer()) config_error("config: '" + where + key + "' must be an integer");
  } else {
    if (!it->is_number()) config_error("config: '" + where + key + "' must be a number");
  }
  return it->get<T>();
}

std::vector<double> parse_doubles(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    std::string item = text.substr(start, end - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size() || !std::isfinite(v))
      usage("bad number '" + item + "' in " + what);
    values.push_back(v);
    start = end + 1;
  }
  return values;
}

std::vector<int> parse_ints(const std::string& text, const std::string& what) {
  std::vector<int> out;
  for (double v : parse_doubles(text, what)) {
    if (v != std::floor(v) || std::abs(v) > 1e9) usage("expected integers in " + what);
    out.push_back(static_cast<int>(v));
  }
  return out;
}

// Plain CSV of coordinates; lines starting with '#' and a non-numeric header
// line are skipped.
Eigen::MatrixXd read_points_csv(const fs::path& path, int d) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<double> values;
  std::size_t line_no = 0;
  Eigen::Index rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (rows == 0 && values.empty() && !(std::isdigit(static_cast<unsigned char>(line[0])) ||
                                         line[0] == '-' || line[0] == '+' || line[0] == '.'))
      continue;
    std::vector<double> row;
    try {
      row = parse_doubles(line, "points file");
    } catch (const Error&) {
      throw ParseError(line_no, "bad numeric value in points file");
    }
    if (static_cast<int>(row.size()) < d)
      throw ParseError(line_no, "points row has " + std::to_string(row.size()) +
                                    " columns, model dimension is " + std::to_string(d));
    values.insert(values.end(), row.begin(), row.begin() + d);
    ++rows;
  }
  Eigen::MatrixXd points(rows, d);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (int k = 0; k < d; ++k) points(r, k) = values[static_cast<std::size_t>(r * d + k)];
  return points;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// Options shared by commands that need a training set.
struct DataOptions {
  std::string path, system;
  int n = 0, n1 = 0, n2 = 0;
  CLI::Option *path_opt = nullptr, *system_opt = nullptr, *n_opt = nullptr, *n1_opt = nullptr,
              *n2_opt = nullptr;

  void add(CLI::App* cmd) {
    path_opt = cmd->add_option("--data", path, "training-set CSV");
    system_opt = cmd->add_option("--system", system,
                                 "builtin system: circle:uniform|arc|variable, "
                                 "torus:rational|irrational|stepanoff");
    n_opt = cmd->add_option("--n", n, "circle sample count");
    n1_opt = cmd->add_option("--n1", n1, "torus grid size along theta1");
    n2_opt = cmd->add_option("--n2", n2, "torus grid size along theta2");
  }
};

struct ResolutionOptions {
  double epsilon = 0.0, eta = 0.0;
  int J = 0, L = 0, L1 = 0, L2 = 0, L_D = 0;
  CLI::Option *eps_opt, *eta_opt, *J_opt, *L_opt, *L1_opt, *L2_opt, *LD_opt;

  void add(CLI::App* cmd) {
    eps_opt = cmd->add_option("--epsilon", epsilon, "kernel bandwidth");
    J_opt = cmd->add_option("--J", J, "gradient-field count");
    L_opt = cmd->add_option("--L", L, "frame function-index count");
    L1_opt = cmd->add_option("--L1", L1, "embedding truncation");
    L2_opt = cmd->add_option("--L2", L2, "output truncation");
    LD_opt = cmd->add_option("--LD,--L_D", L_D, "contraction truncation");
    eta_opt = cmd->add_option("--eta", eta, "Gram spectral floor");
  }
};

struct SweepOptions {
  std::string epsilon, J, L, L1, L2, L_D, eta;
  void add(CLI::App* cmd) {
    cmd->add_option("--epsilon", epsilon, "comma-separated bandwidths");
    cmd->add_option("--J", J, "comma-separated values");
    cmd->add_option("--L", L, "comma-separated values");
    cmd->add_option("--L1", L1, "comma-separated values");
    cmd->add_option("--L2", L2, "comma-separated values");
    cmd->add_option("--LD,--L_D", L_D, "comma-separated values");
    cmd->add_option("--eta", eta, "comma-separated values");
  }
};

struct LoadedData {
  TrainingSet training;
  std::optional<SystemSpec> system;
  std::string description;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args);

 private:
  std::ostream& out_;
  std::ostream& err_;
  ExperimentConfig config_;
  fs::path out_dir_ = ".";
  bool verbose_ = false;

  void log(const std::string& msg) const {
    if (verbose_) err_ << msg << '\n';
  }

  fs::path output_path(const std::string& given, const std::string& fallback) const {
    return given.empty() ? out_dir_ / fallback : fs::path(given);
  }

  void prepare_out_dir() const {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create output directory " + out_dir_.string());
  }

  LoadedData load_data(const DataOptions& o) const;
  KernelConfig kernel_for(const LoadedData& data, const ResolutionOptions& r) const;
  ResolutionParams params_for(const LoadedData& data, const ResolutionOptions& r) const;

  void cmd_gen(const DataOptions& o, const std::string& output);
  void cmd_fit(const DataOptions& o, const ResolutionOptions& r, const std::string& model_path,
               const std::string& metrics_path, bool no_tensors);
  void cmd_eval(const std::string& model_path, const std::string& data_path,
                const std::string& points_path, const std::string& lower,
                const std::string& upper, const std::string& res, const std::string& output);
  void cmd_orbit(const std::string& model_path, const std::string& true_system,
                 const std::string& theta0, const std::string& y0, double dt, double t_end,
                 bool has_t, const std::string& output);
  void cmd_compare(const std::string& a, const std::string& b, const std::string& manifold,
                   const std::string& output);
  void cmd_fixedpoint(const std::string& model_path, const std::string& init_angle,
                      const std::string& init, double tol, int max_iter,
                      const std::string& output);
  void cmd_sweep(const DataOptions& o, const SweepOptions& s, const std::string& output);
  void cmd_reproduce(const std::string& id, const std::string& scale);
};

LoadedData Runner::load_data(const DataOptions& o) const {
  std::string path = o.path_opt->count() ? o.path : config_.dataset.path.value_or("");
  std::string system = o.system_opt->count() ? o.system : config_.dataset.system.value_or("");
  if (o.path_opt->count() && !o.system_opt->count()) system.clear();
  if (o.system_opt->count() && !o.path_opt->count()) path.clear();
  if (!path.empty() && !system.empty()) usage("give either --data or --system, not both");
  if (path.empty() && system.empty()) usage("a training set is required (--data or --system)");

  LoadedData data;
  if (!path.empty()) {
    data.training = read_training_set(path);
    data.description = path;
    return data;
  }
  data.system = parse_system(system);
  const int n = o.n_opt->count() ? o.n : config_.dataset.n.value_or(800);
  const int n1 = o.n1_opt->count() ? o.n1 : config_.dataset.n1.value_or(kDeskTorusGrid);
  const int n2 = o.n2_opt->count() ? o.n2 : config_.dataset.n2.value_or(n1);
  if (data.system->circle) {
    if (n < 3) usage("--n must be >= 3");
  } else if (n1 < 3 || n2 < 3) {
    usage("--n1 and --n2 must be >= 3");
  }
  data.training = generate_system(*data.system, n, n1, n2);
  data.description = system;
  return data;
}

KernelConfig Runner::kernel_for(const LoadedData& data, const ResolutionOptions& r) const {
  KernelConfig k = default_kernel(data.training.dim_manifold);
  // Builtin torus grids default to the benchmark bandwidth scaled with the
  // grid spacing.
  if (data.system && data.system->torus) {
    const auto n1 = static_cast<double>(std::sqrt(static_cast<double>(data.training.size())));
    k.epsilon = kFullTorusEpsilon * kFullTorusGrid / n1;
  }
  if (config_.kernel.epsilon) k.epsilon = *config_.kernel.epsilon;
  if (r.eps_opt->count()) k.epsilon = r.epsilon;
  k.validate();
  return k;
}

ResolutionParams Runner::params_for(const LoadedData& data, const ResolutionOptions& r) const {
  ResolutionParams p = default_resolution(data.training.dim_manifold);
  const auto& c = config_.resolution;
  if (c.J) p.J = *c.J;
  if (c.L) p.L = *c.L;
  if (c.L1) p.L1 = *c.L1;
  if (c.L2) p.L2 = *c.L2;
  if (c.L_D) p.L_D = *c.L_D;
  if (c.eta) p.eta = *c.eta;
  if (r.J_opt->count()) p.J = r.J;
  if (r.L_opt->count()) p.L = r.L;
  if (r.L1_opt->count()) p.L1 = r.L1;
  if (r.L2_opt->count()) p.L2 = r.L2;
  if (r.LD_opt->count()) p.L_D = r.L_D;
  if (r.eta_opt->count()) p.eta = r.eta;
  p.validate();
  if (p.required_eigs() > data.training.size())
    config_error("resolution needs " + std::to_string(p.required_eigs()) +
                 " eigenpairs but the training set has only " +
                 std::to_string(data.training.size()) + " samples");
  return p;
}

void Runner::cmd_gen(const DataOptions& o, const std::string& output) {
  LoadedData data = load_data(o);
  if (!data.system) usage("gen needs --system");
  std::string name = data.system->name;
  std::replace(name.begin(), name.end(), ':', '_');
  const fs::path path = output_path(output, name + ".csv");
  if (output.empty()) prepare_out_dir();
  write_training_set(data.training, path);
  out_ << "wrote " << data.training.size() << " samples to " << path.string() << '\n';
}

void Runner::cmd_fit(const DataOptions& o, const ResolutionOptions& r,
                     const std::string& model_path, const std::string& metrics_path,
                     bool no_tensors) {
  LoadedData data = load_data(o);
  const KernelConfig kernel = kernel_for(data, r);
  const ResolutionParams params = params_for(data, r);
  data.training.validate();

  auto staged = [](const char* stage, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(stage) + ": " + e.what());
    }
  };

  const auto t0 = std::chrono::steady_clock::now();
  auto basis = staged("stage 1a (eigendecomposition)",
                      [&] { return fit_basis(data.training, kernel, params); });
  const double t_laplacian =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& w : basis->warnings) err_ << "warning: " << w << '\n';
  FitResult fit = staged("stage 1b/1c (coefficients and regression)",
                         [&] { return fit_with_basis(basis, data.training, params); });
  fit.timings.laplacian = t_laplacian;

  std::optional<Eigen::MatrixXd> normals;
  if (data.system) normals = manifold_normals(*data.system, data.training.points);
  const FieldMetrics metrics = compute_metrics(fit.field, data.training, normals);

  json m{{"dataset", data.description},
         {"n_samples", data.training.size()},
         {"epsilon", kernel.epsilon},
         {"params",
          {{"J", params.J},
           {"L", params.L},
           {"L1", params.L1},
           {"L2", params.L2},
           {"L_D", params.L_D},
           {"eta", params.eta}}},
         {"r_squared", metrics.r_squared},
         {"max_pointwise_error", metrics.max_pointwise_error},
         {"gram_rank", fit.solution.gram_rank},
         {"gram_asymmetry", fit.tensors.gram_asymmetry},
         {"volume", fit.basis->volume},
         {"eigenvalues_laplace", to_json(fit.basis->laplace_eigenvalues)},
         {"eigenvalues_markov", to_json(fit.basis->markov_eigenvalues)},
         {"timings_seconds",
          {{"1a_eigendecomposition", fit.timings.laplacian},
           {"1b_coefficients", fit.timings.coefficients},
           {"1c_regression", fit.timings.regression}}},
         {"warnings", fit.basis->warnings}};
  if (metrics.mean_tangency_defect) m["mean_tangency_defect"] = *metrics.mean_tangency_defect;

  if (model_path.empty() || metrics_path.empty()) prepare_out_dir();
  const fs::path model_file = output_path(model_path, "model.json");
  const fs::path metrics_file = output_path(metrics_path, "metrics.json");
  write_model(make_model_document(fit, !no_tensors), model_file);
  write_file_atomic(metrics_file, m.dump(2) + "\n");
  log("timings (s): 1a " + num(fit.timings.laplacian) + ", 1b " + num(fit.timings.coefficients) +
      ", 1c " + num(fit.timings.regression));
  out_ << "r_squared " << num(metrics.r_squared) << '\n'
       << "gram_rank " << fit.solution.gram_rank << '\n'
       << "volume " << num(fit.basis->volume) << '\n'
       << "model " << model_file.string() << '\n'
       << "metrics " << metrics_file.string() << '\n';
}

void Runner::cmd_eval(const std::string& model_path, const std::string& data_path,
                      const std::string& points_path, const std::string& lower,
                      const std::string& upper, const std::string& res,
                      const std::string& output) {
  const int sources = !data_path.empty() + !points_path.empty() + !lower.empty();
  if (sources != 1) usage("give exactly one of --data, --points or --grid-lower/--grid-upper");
  if (!lower.empty() && (upper.empty() || res.empty()))
    usage("a grid needs --grid-lower, --grid-upper and --grid-res");
  const ModelDocument doc = read_model(model_path);
  const ReconstructedField field = doc.field();
  const int d = field.dim();

  Eigen::MatrixXd points;
  std::optional<TrainingSet> training;
  if (!data_path.empty()) {
    training = read_training_set(data_path);
    if (training->dim_ambient() != d) usage("training set dimension does not match the model");
    points = training->points;
  } else if (!points_path.empty()) {
    points = read_points_csv(points_path, d);
  } else {
    const std::vector<double> lo = parse_doubles(lower, "--grid-lower");
    const std::vector<double> hi = parse_doubles(upper, "--grid-upper");
    const std::vector<int> rs = parse_ints(res, "--grid-res");
    if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d ||
        static_cast<int>(rs.size()) != d)
      usage("grid bounds and resolution need " + std::to_string(d) + " entries each");
    points = box_grid(Eigen::Map<const Eigen::VectorXd>(lo.data(), d),
                      Eigen::Map<const Eigen::VectorXd>(hi.data(), d),
                      Eigen::Map<const Eigen::VectorXi>(rs.data(), d));
  }
  if (points.rows() == 0) usage("no evaluation points");

  const Eigen::MatrixXd predicted = field.evaluate_many(points);
  if (output.empty()) prepare_out_dir();
  const fs::path path = output_path(output, "quiver.csv");
  write_quiver_csv(path, points, predicted,
                   training ? std::optional<Eigen::MatrixXd>(training->arrows) : std::nullopt);
  out_ << "evaluated " << points.rows() << " points to " << path.string() << '\n';
  if (training) {
    const FieldMetrics m = compute_metrics(predicted, *training);
    out_ << "r_squared " << num(m.r_squared) << '\n'
         << "max_pointwise_error " << num(m.max_pointwise_error) << '\n';
  }
}

void Runner::cmd_orbit(const std::string& model_path, const std::string& true_system,
                       const std::string& theta0, const std::string& y0, double dt, double t_end,
                       bool has_t, const std::string& output) {
  if (model_path.empty() == true_system.empty()) usage("give exactly one of --model or --true");
  if (theta0.empty() == y0.empty()) usage("give exactly one of --theta0 or --y0");

  Orbit orbit;
  if (!true_system.empty()) {
    const SystemSpec spec = parse_system(true_system);
    if (theta0.empty()) usage("true orbits start from angle coordinates (--theta0)");
    const std::vector<double> a = parse_doubles(theta0, "--theta0");
    if (!has_t) t_end = spec.circle ? 20.0 : 10.0;
    orbit = true_system_orbit(spec, Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()), dt,
                              t_end);
  } else {
    const ModelDocument doc = read_model(model_path);
    const ReconstructedField field = doc.field();
    Eigen::VectorXd start;
    if (!theta0.empty()) {
      const std::vector<double> a = parse_doubles(theta0, "--theta0");
      start = embed_angles(embedding_for_dimension(field.dim()),
                           Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()));
    } else {
      const std::vector<double> y = parse_doubles(y0, "--y0");
      if (static_cast<int>(y.size()) != field.dim())
        usage("--y0 needs " + std::to_string(field.dim()) + " coordinates");
      start = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
    }
    if (!has_t) t_end = field.dim() == 2 ? 20.0 : 10.0;
    orbit = integrate([&](const Eigen::VectorXd& y) { return field.evaluate(y); }, start, dt,
                      t_end);
  }
  if (output.empty()) prepare_out_dir();
  const fs::path path = output_path(output, "orbit.csv");
  write_orbit_csv(path, orbit);
  out_ << "wrote " << orbit.times.size() << " states to " << path.string() << '\n';
}

void Runner::cmd_compare(const std::string& a, const std::string& b, const std::string& manifold,
                         const std::string& output) {
  const Orbit oa = read_orbit_csv(a);
  const Orbit ob = read_orbit_csv(b);
  ManifoldDistanceFn distance;
  const int d = static_cast<int>(ob.states.cols());
  if (manifold == "circle") {
    if (d != 2) usage("circle comparisons need 2-d orbits");
    distance = manifold_distance(embedding_for_dimension(2));
  } else if (manifold == "torus") {
    if (d != 3) usage("torus comparisons need 3-d orbits");
    distance = manifold_distance(embedding_for_dimension(3));
  } else if (manifold == "auto") {
    if (d == 2 || d == 3) distance = manifold_distance(embedding_for_dimension(d));
  } else if (manifold != "none") {
    usage("--manifold must be circle, torus, auto or none");
  }
  const OrbitComparison c = compare_orbits(oa, ob, distance);
  if (output.empty()) prepare_out_dir();
  const fs::path path = output_path(output, "comparison.csv");
  write_comparison_csv(path, ob, c);
  out_ << "max_error " << num(c.max_error) << '\n';
  if (c.manifold_defect.size())
    out_ << "max_manifold_defect " << num(c.manifold_defect.maxCoeff()) << '\n';
  out_ << "comparison " << path.string() << '\n';
}

void Runner::cmd_fixedpoint(const std::string& model_path, const std::string& init_angle,
                            const std::string& init, double tol, int max_iter,
                            const std::string& output) {
  if (init_angle.empty() == init.empty()) usage("give exactly one of --init-angle or --init");
  const ModelDocument doc = read_model(model_path);
  const ReconstructedField field = doc.field();
  Eigen::VectorXd start;
  if (!init_angle.empty()) {
    const std::vector<double> a = parse_doubles(init_angle, "--init-angle");
    start = embed_angles(embedding_for_dimension(field.dim()),
                         Eigen::Map<const Eigen::VectorXd>(a.data(), a.size()));
  } else {
    const std::vector<double> y = parse_doubles(init, "--init");
    if (static_cast<int>(y.size()) != field.dim())
      usage("--init needs " + std::to_string(field.dim()) + " coordinates");
    start = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
  }
  const NewtonResult r = newton_fixed_point(field, start, tol, max_iter);
  json report{{"point", to_json(r.point)}, {"residual", r.residual}, {"iterations", r.iterations}};
  if (field.dim() == 2) {
    double angle = std::atan2(r.point[1], r.point[0]);
    if (angle < 0.0) angle += 2.0 * std::numbers::pi;
    report["angle"] = angle;
  }
  if (output.empty()) prepare_out_dir();
  const fs::path path = output_path(output, "fixedpoint.json");
  write_file_atomic(path, report.dump(2) + "\n");
  out_ << report.dump() << '\n';
}

void Runner::cmd_sweep(const DataOptions& o, const SweepOptions& s, const std::string& output) {
  LoadedData data = load_data(o);
  ResolutionOptions none;
  CLI::App dummy;
  none.add(&dummy);
  const KernelConfig base_kernel = kernel_for(data, none);
  const ResolutionParams base = default_resolution(data.training.dim_manifold);
  const auto& c = config_.resolution;

  auto ints = [](const std::string& text, int fallback, const char* what) {
    return text.empty() ? std::vector<int>{fallback} : parse_ints(text, what);
  };
  auto doubles = [](const std::string& text, double fallback, const char* what) {
    return text.empty() ? std::vector<double>{fallback} : parse_doubles(text, what);
  };
  const auto eps = doubles(s.epsilon, base_kernel.epsilon, "--epsilon");
  const auto Js = ints(s.J, c.J.value_or(base.J), "--J");
  const auto Ls = ints(s.L, c.L.value_or(base.L), "--L");
  const auto L1s = ints(s.L1, c.L1.value_or(base.L1), "--L1");
  const auto L2s = ints(s.L2, c.L2.value_or(base.L2), "--L2");
  const auto LDs = ints(s.L_D, c.L_D.value_or(base.L_D), "--LD");
  const auto etas = doubles(s.eta, c.eta.value_or(base.eta), "--eta");
  for (double e : eps) KernelConfig{e}.validate();

  std::vector<ResolutionParams> cells;
  for (int J : Js)
    for (int L : Ls)
      for (int L1 : L1s)
        for (int L2 : L2s)
          for (int LD : LDs)
            for (double eta : etas) cells.push_back({J, L, L1, L2, LD, eta});

  std::string csv = "epsilon,J,L,L1,L2,L_D,eta,r_squared,gram_rank,status\n";
  for (double e : eps) {
    Eigen::Index needed = 1;
    for (const auto& p : cells)
      if (p.required_eigs() <= data.training.size()) needed = std::max(needed, p.required_eigs());
    ResolutionParams widest{1, 1, 2, 1, 1, 1.0};
    widest.L2 = static_cast<int>(needed);
    std::shared_ptr<const DiffusionBasis> basis;
    std::string basis_error;
    try {
      basis = fit_basis(data.training, KernelConfig{e}, widest);
    } catch (const Error& err) {
      basis_error = err.what();
    }
    for (const auto& p : cells) {
      std::string status = "ok";
      double r2 = std::nan("");
      Eigen::Index rank = 0;
      try {
        if (!basis) throw Error(ErrorKind::Numeric, basis_error);
        p.validate(basis->n_eigs());
        const FitResult fit = fit_with_basis(basis, data.training, p);
        r2 = fit.metrics.r_squared;
        rank = fit.solution.gram_rank;
      } catch (const Error& err) {
        status = std::string(to_string(err.kind())) + ": " + err.what();
        std::replace(status.begin(), status.end(), ',', ';');
      }
      csv += num(e) + "," + std::to_string(p.J) + "," + std::to_string(p.L) + "," +
             std::to_string(p.L1) + "," + std::to_string(p.L2) + "," + std::to_string(p.L_D) +
             "," + num(p.eta) + "," + (std::isnan(r2) ? std::string("nan") : num(r2)) + "," +
             std::to_string(rank) + "," + status + "\n";
      log("epsilon " + num(e) + " J " + std::to_string(p.J) + " L " + std::to_string(p.L) +
          ": " + status);
    }
  }
  if (output.empty()) prepare_out_dir();
  const fs::path path = output_path(output, "sweep.csv");
  write_file_atomic(path, csv);
  out_ << "swept " << cells.size() * eps.size() << " cells to " << path.string() << '\n';
}

void Runner::cmd_reproduce(const std::string& id, const std::string& scale_name) {
  const Preset& preset = find_preset(id);
  Scale scale;
  if (scale_name == "desk")
    scale = Scale::Desk;
  else if (scale_name == "full")
    scale = Scale::Full;
  else
    usage("--scale must be desk or full");
  const fs::path dir = out_dir_ / preset.id;
  const PresetOutcome outcome = run_preset(preset, scale, dir);
  const std::string report = format_report(outcome, timestamp_utc());
  write_file_atomic(dir / "report.md", report);
  out_ << preset.id << ": r_squared " << num(outcome.r_squared) << " (reference "
       << num(preset.reference_r_squared) << ", threshold " << num(outcome.setup.threshold)
       << ") " << (outcome.passed() ? "pass" : "FAIL") << '\n'
       << "report " << (dir / "report.md").string() << '\n';
}

int Runner::run(const std::vector<std::string>& args) {
  CLI::App app{"Learn vector fields on manifolds from embedded samples (spectral exterior calculus)",
               "secfield"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_dir;
  unsigned threads = 1;
  app.add_option("--config", config_path, "JSON experiment configuration");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_flag("--verbose", verbose_, "log progress to stderr");

  DataOptions gen_data, fit_data, sweep_data;
  ResolutionOptions fit_res;
  SweepOptions sweep_opts;
  std::string output, model, metrics, data, points, lower, upper, res, true_system, theta0, y0,
      manifold = "auto", init_angle, init, id, scale = "desk", file_a, file_b;
  bool no_tensors = false;
  double dt = 1e-3, t_end = 0.0, tol = 1e-8;
  int max_iter = 50;

  auto* gen = app.add_subcommand("gen", "generate a builtin training set");
  gen_data.add(gen);
  gen->add_option("-o,--output", output, "output CSV (default <out>/<system>.csv)");

  auto* fit = app.add_subcommand("fit", "fit a model to a training set");
  fit_data.add(fit);
  fit_res.add(fit);
  fit->add_option("--model", model, "model JSON (default <out>/model.json)");
  fit->add_option("--metrics", metrics, "metrics JSON (default <out>/metrics.json)");
  fit->add_flag("--no-tensors", no_tensors, "leave coefficient tensors out of the model file");

  auto* eval = app.add_subcommand("eval", "evaluate a model on points or a grid");
  eval->add_option("--model", model, "model JSON")->required();
  eval->add_option("--data", data, "training-set CSV (truth columns and R^2 are reported)");
  eval->add_option("--points", points, "CSV of query points");
  eval->add_option("--grid-lower", lower, "comma-separated lower corner");
  eval->add_option("--grid-upper", upper, "comma-separated upper corner");
  eval->add_option("--grid-res", res, "comma-separated points per axis");
  eval->add_option("-o,--output", output, "quiver CSV (default <out>/quiver.csv)");

  auto* orbit = app.add_subcommand("orbit", "integrate an orbit of a model or a builtin system");
  orbit->add_option("--model", model, "model JSON");
  orbit->add_option("--true", true_system, "builtin system");
  orbit->add_option("--theta0", theta0, "initial angle(s), comma-separated");
  orbit->add_option("--y0", y0, "initial ambient coordinates, comma-separated");
  orbit->add_option("--dt", dt, "RK4 step");
  auto* t_opt = orbit->add_option("--t", t_end, "final time (default 20 circle, 10 torus)");
  orbit->add_option("-o,--output", output, "orbit CSV (default <out>/orbit.csv)");

  auto* compare = app.add_subcommand("compare", "compare two orbits on one time grid");
  compare->add_option("a", file_a, "reference orbit CSV")->required();
  compare->add_option("b", file_b, "orbit CSV to compare")->required();
  compare->add_option("--manifold", manifold, "circle, torus, auto or none");
  compare->add_option("-o,--output", output, "comparison CSV (default <out>/comparison.csv)");

  auto* fixedpoint = app.add_subcommand("fixedpoint", "Newton search for a zero of a model");
  fixedpoint->add_option("--model", model, "model JSON")->required();
  fixedpoint->add_option("--init-angle", init_angle, "initial angle(s) on the builtin embedding");
  fixedpoint->add_option("--init", init, "initial ambient coordinates");
  fixedpoint->add_option("--tol", tol, "residual tolerance");
  fixedpoint->add_option("--max-iter", max_iter, "iteration cap");
  fixedpoint->add_option("-o,--output", output, "report JSON (default <out>/fixedpoint.json)");

  auto* sweep = app.add_subcommand("sweep", "R^2 over a grid of bandwidths and resolutions");
  sweep_data.add(sweep);
  sweep_opts.add(sweep);
  sweep->add_option("-o,--output", output, "CSV (default <out>/sweep.csv)");

  auto* reproduce = app.add_subcommand("reproduce", "run a benchmark preset");
  reproduce->add_option("id", id, "circle-v1|circle-v2|circle-v3|torus-v1|torus-v2|torus-v3")
      ->required();
  reproduce->add_option("--scale", scale, "desk (60 x 60 torus) or full (150 x 150)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out_, err_);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (!config_path.empty()) config_ = parse_experiment_config(read_file(config_path));
    if (out_opt->count())
      out_dir_ = out_dir;
    else if (config_.outputs)
      out_dir_ = *config_.outputs;
    set_thread_limit(threads);

    if (gen->parsed()) {
      cmd_gen(gen_data, output);
    } else if (fit->parsed()) {
      cmd_fit(fit_data, fit_res, model, metrics, no_tensors);
    } else if (eval->parsed()) {
      cmd_eval(model, data, points, lower, upper, res, output);
    } else if (orbit->parsed()) {
      cmd_orbit(model, true_system, theta0, y0, dt, t_end, t_opt->count() > 0, output);
    } else if (compare->parsed()) {
      cmd_compare(file_a, file_b, manifold, output);
    } else if (fixedpoint->parsed()) {
      cmd_fixedpoint(model, init_angle, init, tol, max_iter, output);
    } else if (sweep->parsed()) {
      cmd_sweep(sweep_data, sweep_opts, output);
    } else if (reproduce->parsed()) {
      cmd_reproduce(id, scale);
    }
  } catch (const Error& e) {
    err_ << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err_ << "error (io): " << e.what() << '\n';
    return kExitIo;
  } catch (const std::bad_alloc&) {
    err_ << "error (numeric): out of memory\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "", {"dataset", "kernel", "resolution", "seed", "outputs"});
  ExperimentConfig c;
  if (auto it = j.find("dataset"); it != j.end()) {
    check_keys(*it, "dataset", {"path", "system", "n", "n1", "n2"});
    c.dataset.path = get_opt<std::string>(*it, "path", "dataset.");
    c.dataset.system = get_opt<std::string>(*it, "system", "dataset.");
    c.dataset.n = get_opt<int>(*it, "n", "dataset.");
    c.dataset.n1 = get_opt<int>(*it, "n1", "dataset.");
    c.dataset.n2 = get_opt<int>(*it, "n2", "dataset.");
  }
  if (auto it = j.find("kernel"); it != j.end()) {
    check_keys(*it, "kernel", {"epsilon"});
    c.kernel.epsilon = get_opt<double>(*it, "epsilon", "kernel.");
  }
  if (auto it = j.find("resolution"); it != j.end()) {
    check_keys(*it, "resolution", {"J", "L", "L1", "L2", "L_D", "eta"});
    c.resolution.J = get_opt<int>(*it, "J", "resolution.");
    c.resolution.L = get_opt<int>(*it, "L", "resolution.");
    c.resolution.L1 = get_opt<int>(*it, "L1", "resolution.");
    c.resolution.L2 = get_opt<int>(*it, "L2", "resolution.");
    c.resolution.L_D = get_opt<int>(*it, "L_D", "resolution.");
    c.resolution.eta = get_opt<double>(*it, "eta", "resolution.");
  }
  c.seed = get_opt<int>(j, "seed", "").value_or(0);
  c.outputs = get_opt<std::string>(j, "outputs", "");
  return c;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Config:
      return kExitUsage;
    case ErrorKind::Io:
    case ErrorKind::Parse:
    case ErrorKind::FormatVersion:
      return kExitIo;
    default:
      return kExitNumeric;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Runner runner(out, err);
  return runner.run(args);
}

}  // namespace secfield
