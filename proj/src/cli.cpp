#include "shadow/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "shadow/errors.hpp"
#include "shadow/linalg.hpp"

namespace shadow::cli {

using nlohmann::json;

namespace {

/// Reads the keys of one object, rejecting any key not consumed.
class Reader {
public:
  Reader(const json &tree, std::string where) : tree_(tree), where_(std::move(where)) {
    if (!tree_.is_object())
      throw ConfigError(where_ + " must be an object");
  }
  ~Reader() = default;

  bool has(const std::string &key) {
    seen_.push_back(key);
    return tree_.contains(key) && !tree_.at(key).is_null();
  }

  Index integer(const std::string &key, Index fallback, Index min) {
    if (!has(key))
      return fallback;
    const json &v = tree_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(path(key) + " must be an integer");
    const Index x = v.get<Index>();
    if (x < min)
      throw ConfigError(path(key) + " must be at least " + std::to_string(min));
    return x;
  }

  std::optional<Index> optional_integer(const std::string &key, Index min) {
    if (!has(key))
      return std::nullopt;
    return integer(key, 0, min);
  }

  double number(const std::string &key, double fallback) {
    if (!has(key))
      return fallback;
    const json &v = tree_.at(key);
    if (!v.is_number())
      throw ConfigError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
      throw ConfigError(path(key) + " must be finite");
    return x;
  }

  bool boolean(const std::string &key, bool fallback) {
    if (!has(key))
      return fallback;
    if (!tree_.at(key).is_boolean())
      throw ConfigError(path(key) + " must be true or false");
    return tree_.at(key).get<bool>();
  }

  std::optional<std::string> string(const std::string &key) {
    if (!has(key))
      return std::nullopt;
    if (!tree_.at(key).is_string())
      throw ConfigError(path(key) + " must be a string");
    return tree_.at(key).get<std::string>();
  }

  Vec vector(const std::string &key) {
    if (!has(key))
      return Vec();
    const json &v = tree_.at(key);
    if (!v.is_array())
      throw ConfigError(path(key) + " must be an array of numbers");
    Vec out(static_cast<Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number())
        throw ConfigError(path(key) + " must be an array of numbers");
      out[static_cast<Index>(i)] = v[i].get<double>();
    }
    return out;
  }

  const json &child(const std::string &key) {
    static const json empty = json::object();
    return has(key) ? tree_.at(key) : empty;
  }

  void finish() const {
    for (auto it = tree_.begin(); it != tree_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        throw ConfigError("unknown key " + path(it.key()));
  }

  std::string path(const std::string &key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

private:
  const json &tree_;
  std::string where_;
  std::vector<std::string> seen_;
};

json vec_json(const Vec &v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i)
    out.push_back(v[i]);
  return out;
}

Objective parse_objective(const json &tree, const std::string &where) {
  Reader r(tree, where);
  const std::string kind = r.string("kind").value_or("cosine");
  const Index coordinate = r.integer("coordinate", 0, 0);
  const Vec weights = r.vector("weights");
  r.finish();
  if (kind == "cosine")
    return Objective::cosine(coordinate);
  if (kind == "sine")
    return Objective::sine(coordinate);
  if (kind == "linear")
    return Objective::linear(weights);
  throw ConfigError(where + ".kind must be cosine, sine or linear");
}

json objective_json(const Objective &o) {
  switch (o.kind) {
  case Objective::Kind::Linear:
    return {{"kind", "linear"}, {"weights", vec_json(o.weights)}};
  case Objective::Kind::Sine:
    return {{"kind", "sine"}, {"coordinate", o.coordinate}};
  case Objective::Kind::Cosine:
    break;
  }
  return {{"kind", "cosine"}, {"coordinate", o.coordinate}};
}

SystemSpec parse_system(const json &tree) {
  Reader r(tree, "system");
  SystemSpec spec;
  spec.name = r.string("name").value_or(spec.name);
  const json &params = r.child("params");
  r.finish();
  Reader p(params, "system.params");
  if (spec.name == "solenoid") {
    spec.solenoid.contraction = p.number("contraction", spec.solenoid.contraction);
    spec.solenoid.radius = p.number("radius", spec.solenoid.radius);
  } else if (spec.name == "block_hyperbolic_linear") {
    BlockHyperbolicParams &b = spec.block;
    b.dim = p.integer("dim", b.dim, 1);
    b.unstable = p.integer("unstable", b.unstable, 0);
    b.expansion = p.number("expansion", b.expansion);
    b.contraction = p.number("contraction", b.contraction);
    b.shear = p.number("shear", b.shear);
    b.forcing = p.vector("forcing");
    if (p.has("objective"))
      b.objective = parse_objective(params.at("objective"), "system.params.objective");
  } else if (spec.name != "expanding_circle" && spec.name != "perturbed_cat_map") {
    throw ConfigError("unknown system '" + spec.name + "'");
  }
  p.finish();
  return spec;
}

json system_json(const SystemSpec &spec) {
  json params = json::object();
  if (spec.name == "solenoid") {
    params = {{"contraction", spec.solenoid.contraction}, {"radius", spec.solenoid.radius}};
  } else if (spec.name == "block_hyperbolic_linear") {
    const BlockHyperbolicParams &b = spec.block;
    params = {{"dim", b.dim},
              {"unstable", b.unstable},
              {"expansion", b.expansion},
              {"contraction", b.contraction},
              {"shear", b.shear},
              {"forcing", vec_json(b.forcing)},
              {"objective", objective_json(b.objective)}};
  }
  return {{"name", spec.name}, {"params", params}};
}

template <class T> json optional_json(const std::optional<T> &v) {
  return v ? json(*v) : json(nullptr);
}

void write_file(const std::string &path, const std::string &text) {
  std::ofstream f(path);
  if (!f)
    throw ConfigError("cannot open output file " + path);
  f << text;
  if (!f)
    throw ConfigError("failed writing output file " + path);
}

std::string check_line(bool pass, const std::string &name, const std::string &detail) {
  return std::string(pass ? "PASS " : "FAIL ") + name + "  " + detail;
}

std::string sci(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << x;
  return os.str();
}

/// Resizes a constant vector to `dim` entries; throws for non-constant ones.
Vec resize_constant(const Vec &v, Index dim, const char *what) {
  if (v.size() == 0)
    return v;
  if ((v.array() != v[0]).any())
    throw ConfigError(std::string("sweeping M needs a constant ") + what);
  return Vec::Constant(dim, v[0]);
}

} // namespace

ExperimentConfig parse_config(const json &tree) {
  Reader r(tree, "");
  ExperimentConfig c;
  c.system = parse_system(r.child("system"));
  c.s = r.number("s", c.s);
  c.K = r.integer("K", c.K, 1);
  c.spinup = r.integer("spinup", c.spinup, 0);
  c.tangent_spinup = r.integer("tangent_spinup", c.tangent_spinup, 0);
  c.adjoint_spinup = r.integer("adjoint_spinup", c.adjoint_spinup, 0);
  c.m = r.optional_integer("m", 0);
  c.segment_len = r.integer("segment_len", c.segment_len, 0);
  c.renorm_every = r.integer("renorm_every", c.renorm_every, 1);
  c.seed = static_cast<std::uint64_t>(r.integer("seed", static_cast<Index>(c.seed), 0));

  Reader corr(r.child("correction"), "correction");
  c.N_back = corr.integer("N_back", c.N_back, 1);
  c.N = corr.integer("N", c.N, 0);
  corr.finish();

  Reader o(r.child("oracle"), "oracle");
  c.oracle = o.boolean("enabled", c.oracle);
  c.N_f = o.integer("N_f", c.N_f, 0);
  c.N_b = o.integer("N_b", c.N_b, 0);
  c.delta_s = o.number("delta_s", c.delta_s);
  if (!(c.delta_s > 0.0))
    throw ConfigError("oracle.delta_s must be positive");
  c.fd_seeds = o.integer("seeds", c.fd_seeds, 0);
  if (c.fd_seeds == 1)
    throw ConfigError("oracle.seeds must be 0 (disabled) or at least 2");
  c.fd_K = o.integer("fd_K", c.fd_K, 0);
  c.N_r = o.optional_integer("N_r", 0);
  o.finish();

  Reader out(r.child("output"), "output");
  c.json_path = out.string("json");
  c.csv_path = out.string("csv");
  out.finish();
  r.finish();
  return c;
}

ExperimentConfig load_config(const std::string &path) {
  std::ifstream f(path);
  if (!f)
    throw ConfigError("cannot open config file " + path);
  json tree;
  try {
    tree = json::parse(f, nullptr, true, true);
  } catch (const json::parse_error &e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(tree);
}

json config_to_json(const ExperimentConfig &c) {
  return {{"system", system_json(c.system)},
          {"s", c.s},
          {"K", c.K},
          {"spinup", c.spinup},
          {"tangent_spinup", c.tangent_spinup},
          {"adjoint_spinup", c.adjoint_spinup},
          {"m", optional_json(c.m)},
          {"segment_len", c.segment_len},
          {"renorm_every", c.renorm_every},
          {"correction", {{"N_back", c.N_back}, {"N", c.N}}},
          {"oracle",
           {{"enabled", c.oracle},
            {"N_f", c.N_f},
            {"N_b", c.N_b},
            {"delta_s", c.delta_s},
            {"seeds", c.fd_seeds},
            {"fd_K", c.fd_K},
            {"N_r", optional_json(c.N_r)}}},
          {"output", {{"json", optional_json(c.json_path)}, {"csv", optional_json(c.csv_path)}}},
          {"seed", c.seed}};
}

void apply_override(json &tree, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error &) {
    value = text;
  }
  json *node = &tree;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty())
      throw ConfigError("override key '" + key + "' has an empty component");
    if (!node->is_object())
      *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

Index system_dim(const SystemSpec &spec) {
  if (spec.name == "expanding_circle")
    return 1;
  if (spec.name == "perturbed_cat_map")
    return 2;
  if (spec.name == "solenoid")
    return 3;
  if (spec.name == "block_hyperbolic_linear")
    return spec.block.dim;
  throw ConfigError("unknown system '" + spec.name + "'");
}

std::unique_ptr<SystemModel> make_system(const ExperimentConfig &c) {
  const Index M = system_dim(c.system);
  if (c.m && *c.m > M)
    throw ConfigError("declared m = " + std::to_string(*c.m) +
                      " exceeds the phase-space dimension M = " + std::to_string(M));
  try {
    const std::string &name = c.system.name;
    if (name == "expanding_circle")
      return std::make_unique<ExpandingCircle>(c.m);
    if (name == "perturbed_cat_map")
      return std::make_unique<PerturbedCatMap>(c.m);
    if (name == "solenoid")
      return std::make_unique<Solenoid>(c.system.solenoid, c.m);
    return std::make_unique<BlockHyperbolicLinear>(c.system.block, c.m);
  } catch (const std::invalid_argument &e) {
    throw ConfigError(std::string("invalid system parameters: ") + e.what());
  }
}

PipelineConfig pipeline_config(const ExperimentConfig &c) {
  PipelineConfig p;
  p.s = c.s;
  p.K = c.K;
  p.spinup = c.spinup;
  p.tangent_spinup = c.tangent_spinup;
  p.adjoint_spinup = c.adjoint_spinup;
  p.segment_len = c.segment_len;
  p.renorm_every = c.renorm_every;
  p.N_back = c.N_back;
  p.N = c.N;
  p.oracle = c.oracle;
  p.N_f = c.N_f;
  p.N_b = c.N_b;
  p.delta_s = c.delta_s;
  p.fd_seeds = c.fd_seeds;
  p.fd_K = c.fd_K;
  p.N_r = c.N_r;
  p.seed = c.seed;
  return p;
}

int report_failure(std::ostream &err) {
  try {
    throw;
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const SplittingDegenerateError &e) {
    err << "numerical failure at step " << e.step() << ": " << e.what()
        << " (condition " << e.condition() << ")\n";
    return kExitNumericalFailure;
  } catch (const StepError &e) {
    err << "numerical failure at step " << e.step() << ": " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const std::invalid_argument &e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const Error &e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  } catch (const std::exception &e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalFailure;
  }
}

int run(const ExperimentConfig &config, std::ostream &out, std::ostream &err) {
  try {
    const auto model = make_system(config);
    const PipelineResult result = run_pipeline(*model, pipeline_config(config));
    const std::string report = report_to_json(result.report) + "\n";
    if (config.json_path)
      write_file(*config.json_path, report);
    else
      out << report;
    if (config.csv_path)
      write_file(*config.csv_path,
                 report_csv_header() + "\n" + report_csv_row(result.report) + "\n");
    if (result.report.rank_deficient)
      err << "warning: NILSS least squares was rank deficient (condition "
          << result.report.nilss_condition << "); minimum-norm solution returned\n";
    if (result.report.ruelle_direct && result.report.ruelle_direct->budget_exceeded)
      err << "warning: direct Ruelle sum exceeded its variance budget\n";
    return kExitOk;
  } catch (...) {
    return report_failure(err);
  }
}

bool is_sweep_axis(const std::string &axis) {
  return axis == "K" || axis == "m" || axis == "M" || axis == "segment_len" || axis == "N";
}

int sweep(const ExperimentConfig &config, const std::string &axis,
          const std::vector<double> &values, std::ostream &out, std::ostream &err) {
  try {
    if (!is_sweep_axis(axis))
      throw ConfigError("sweep axis must be one of K, m, M, segment_len, N; got '" + axis + "'");
    std::ostringstream table;
    table << "axis,value," << report_csv_header() << '\n';
    for (double value : values) {
      if (value != std::floor(value))
        throw ConfigError("sweep values for " + axis + " must be integers");
      const auto v = static_cast<Index>(value);
      ExperimentConfig c = config;
      if (axis == "K") {
        c.K = v;
      } else if (axis == "segment_len") {
        c.segment_len = v;
      } else if (axis == "N") {
        c.N = v;
      } else if (axis == "m") {
        if (c.system.name == "block_hyperbolic_linear") {
          c.system.block.unstable = v;
          c.m.reset();
        } else {
          c.m = v;
        }
      } else {
        if (c.system.name != "block_hyperbolic_linear")
          throw ConfigError("sweeping M needs system block_hyperbolic_linear");
        c.system.block.dim = v;
        c.system.block.forcing = resize_constant(c.system.block.forcing, v, "forcing");
        if (c.system.block.objective.kind == Objective::Kind::Linear)
          c.system.block.objective.weights =
              resize_constant(c.system.block.objective.weights, v, "objective weight");
      }
      if (c.K < 1 || c.segment_len < 0 || c.N < 0 || v < 0)
        throw ConfigError("sweep value " + std::to_string(v) + " is out of range for " + axis);
      const auto model = make_system(c);
      const PipelineResult result = run_pipeline(*model, pipeline_config(c));
      table << axis << ',' << v << ',' << report_csv_row(result.report) << '\n';
    }
    if (config.csv_path)
      write_file(*config.csv_path, table.str());
    else
      out << table.str();
    return kExitOk;
  } catch (...) {
    return report_failure(err);
  }
}

int validate(const ExperimentConfig &config, std::ostream &out, std::ostream &err) {
  bool ok = true;
  auto line = [&](bool pass, const std::string &name, const std::string &detail) {
    ok = ok && pass;
    out << check_line(pass, name, detail) << '\n';
  };
  try {
    const Index M = system_dim(config.system);
    const Index declared =
        config.m ? *config.m
                 : (config.system.name == "block_hyperbolic_linear" ? config.system.block.unstable : 1);
    line(declared <= M, "declared_m_le_M",
         "m = " + std::to_string(declared) + ", M = " + std::to_string(M));
    if (!ok) {
      out << "SKIP remaining checks: the system cannot be built with this m\n";
      return kExitValidationFailed;
    }
    const auto model = make_system(config);
    const Index m = model->num_unstable();

    // Transpose identity on random triples.
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const Vec u = model->wrap(model->sample_initial(rng));
      Vec w(M), a(M);
      for (Index i = 0; i < M; ++i) {
        w[i] = normal(rng);
        a[i] = normal(rng);
      }
      const double d = std::abs(a.dot(model->jvp(u, w, config.s)) -
                                model->vjp(u, a, config.s).dot(w));
      worst = std::max(worst, d / (a.norm() * w.norm()));
    }
    line(worst <= 1e-10, "transpose_identity", "max relative defect " + sci(worst));

    // Full spectrum from a rank-M basis.
    const Index length = config.tangent_spinup + 200 * config.renorm_every;
    const Orbit orbit = generate_orbit(*model, config.s, length, config.spinup, config.seed);
    const BasisSeq full = propagate_homogeneous(*model, orbit, gaussian_matrix(M, M, config.seed + 7),
                                                config.renorm_every);
    const std::vector<double> spectrum = lyapunov_exponents(full, config.tangent_spinup);
    Index positive = 0;
    std::ostringstream exps;
    for (double l : spectrum) {
      positive += l > 1e-6 ? 1 : 0;
      exps << ' ' << std::setprecision(6) << l;
    }
    line(positive == m, "lyapunov_count",
         std::to_string(positive) + " positive exponents, declared m = " + std::to_string(m) +
             "; spectrum" + exps.str());

    // Pipeline run for the frame and NILSS checks.
    PipelineConfig pc = pipeline_config(config);
    pc.fd_seeds = 0;
    pc.N_r.reset();
    pc.oracle = false;
    std::optional<PipelineResult> run;
    try {
      run = run_pipeline(*model, pc);
    } catch (const Error &e) {
      line(false, "nilss_pipeline", e.what());
      return kExitValidationFailed;
    }

    double idem = 0.0;
    for (const SplittingFrame &f : run->frames.frames()) {
      Vec x(M);
      for (Index i = 0; i < M; ++i)
        x[i] = normal(rng);
      const Vec p = project_unstable(f, x);
      idem = std::max(idem, (project_unstable(f, p) - p).norm() / std::max(1.0, x.norm()));
    }
    line(idem <= 1e-10, "projector_idempotence", "max |P(Px) - Px| " + sci(idem));

    line(run->report.optimality_residual <= 1e-6, "nilss_optimality",
         "first-order residual " + sci(run->report.optimality_residual));
    line(run->report.recurrence_residual <= 1e-8, "nilss_recurrence",
         "tangent recurrence residual " + sci(run->report.recurrence_residual));
    return ok ? kExitOk : kExitValidationFailed;
  } catch (...) {
    return report_failure(err);
  }
}

} // namespace shadow::cli
