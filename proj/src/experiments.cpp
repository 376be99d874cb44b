#include "sopbound/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "sopbound/channel.hpp"
#include "sopbound/error.hpp"
#include "sopbound/matrix_io.hpp"
#include "sopbound/pencil.hpp"
#include "sopbound/possibilistic.hpp"
#include "sopbound/projection.hpp"
#include "sopbound/random.hpp"

namespace sopbound::experiments {

namespace fs = std::filesystem;
using config::ResolvedConfig;

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  std::string out;
  for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

namespace {

// Comma-separated rows, LF endings.
class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) {
    bool first = true;
    for (auto h : header) {
      if (!first) text_ += ',';
      text_ += h;
      first = false;
    }
    text_ += '\n';
  }
  Csv& cell(std::string_view v) {
    if (!line_start_) text_ += ',';
    text_ += v;
    line_start_ = false;
    return *this;
  }
  Csv& cell(double v) { return cell(format_number(v)); }
  Csv& cell(long v) { return cell(fmt::format("{}", v)); }
  Csv& cell(int v) { return cell(fmt::format("{}", v)); }
  Csv& cell(std::size_t v) { return cell(fmt::format("{}", v)); }
  void end() {
    text_ += '\n';
    line_start_ = true;
  }
  OutputFile file(std::string name) const { return {std::move(name), text_}; }

 private:
  std::string text_;
  bool line_start_ = true;
};

std::size_t positive_count(const ResolvedConfig& cfg, const std::string& section, const std::string& key) {
  const long v = cfg.integer(section, key);
  if (v < 1) throw ConfigError(fmt::format("{}.{} must be at least 1", section, key));
  return static_cast<std::size_t>(v);
}

// Seed for a sub-experiment, derived from the run seed.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
  Rng rng = derive_stream(seed, stream);
  return rng();
}

channel::NetworkGeometry geometry_of(const ResolvedConfig& cfg) {
  channel::NetworkGeometry g;
  g.eve_offset_d = cfg.number("channel", "eve_offset_d");
  g.path_loss_exponent = cfg.number("channel", "path_loss_exponent");
  return g;
}

channel::LinkBudget budget_of(const ResolvedConfig& cfg) {
  return {cfg.number("channel", "transmit_power"), cfg.number("channel", "noise_var_bob"),
          cfg.number("channel", "noise_var_eve")};
}

channel::SecrecySampleOptions sample_options_of(const ResolvedConfig& cfg) {
  channel::SecrecySampleOptions o;
  o.size = static_cast<int>(positive_count(cfg, "channel", "size"));
  const std::string& rule = cfg.text("channel", "gain_rule");
  if (rule == "first-entry") {
    o.gain_rule = channel::GainRule::kFirstEntry;
  } else if (rule == "largest-singular") {
    o.gain_rule = channel::GainRule::kLargestSingular;
  } else {
    throw ConfigError(fmt::format("channel.gain_rule must be first-entry or largest-singular, not '{}'", rule));
  }
  return o;
}

projection::ProjectionBounds bounds_of(const ResolvedConfig& cfg) {
  projection::ProjectionBounds b{cfg.number("bounds", "theta_min"), cfg.number("bounds", "theta_max"),
                                 cfg.number("bounds", "eta")};
  try {
    b.validate();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("[bounds]: {}", e.what()));
  }
  return b;
}

Eigen::MatrixXd real_matrix(const ResolvedConfig& cfg, const std::string& section, const std::string& key) {
  const Eigen::MatrixXcd m = io::parse_inline_matrix(cfg.text(section, key));
  if (m.imag().cwiseAbs().maxCoeff() != 0.0) {
    throw ConfigError(fmt::format("{}.{} must be real", section, key));
  }
  return m.real();
}

// Channel samples, the rate distribution and the SNR pairs behind it.
struct ChannelSamples {
  channel::SnrSamples snr;
  volume::EmpiricalDistribution rates;
};

ChannelSamples channel_samples(const ResolvedConfig& cfg) {
  channel::SnrSamples snr = channel::sample_snr(geometry_of(cfg), budget_of(cfg),
                                                positive_count(cfg, "channel", "samples"), cfg.seed(),
                                                sample_options_of(cfg));
  std::vector<double> rates(snr.snr_b.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rates[k] = channel::secrecy_rate(snr.snr_b[k], snr.snr_e[k]);
  }
  return {std::move(snr), volume::EmpiricalDistribution(std::move(rates))};
}

std::vector<OutputFile> sop_table(const ResolvedConfig& cfg) {
  const auto bounds = bounds_of(cfg);
  const ChannelSamples s = channel_samples(cfg);
  Csv table({"row", "mutual_info", "rho", "tail_prob", "value"});
  const auto infos = cfg.numbers("table", "mutual_info");
  const auto rhos = cfg.numbers("table", "rho");
  for (const char* row : {"traditional", "our", "proj"}) {
    for (double info : infos) {
      const double p = volume::empirical_sop(s.rates, info);
      for (double rho : rhos) {
        double value;
        if (row == std::string_view("traditional")) {
          value = volume::traditional_sop(s.snr.snr_b, s.snr.snr_e, info);
        } else {
          if (p <= 0.0) throw NumericalError(fmt::format("Pr(L >= {}) is zero in the sample", info));
          value = volume::sop_convex_bound(rho, p);
          // proj acts on parameters inside the hard box; vacuous cells are
          // clamped onto it first.
          if (row == std::string_view("proj")) {
            value = projection::proj(std::clamp(value, bounds.theta_min, bounds.theta_max), value, bounds);
          }
        }
        table.cell(row).cell(info).cell(rho).cell(p).cell(value).end();
      }
    }
  }
  return {table.file("sop_table.csv")};
}

std::vector<OutputFile> count_eigs(const ResolvedConfig& cfg) {
  const std::string& file = cfg.text("pencil", "file");
  const pencil::MatrixPencil p = file.empty()
                                     ? pencil::MatrixPencil(io::parse_inline_matrix(cfg.text("pencil", "b")),
                                                            io::parse_inline_matrix(cfg.text("pencil", "a")))
                                     : io::read_pencil_file(file);
  const pencil::Complex center{cfg.number("contour", "center_re"), cfg.number("contour", "center_im")};
  const double radius = cfg.number("contour", "radius");
  const int nodes = static_cast<int>(positive_count(cfg, "contour", "nodes"));
  const std::string& shape = cfg.text("contour", "shape");
  pencil::Contour contour;
  if (shape == "circle") {
    contour = pencil::Contour::circle(center, radius, nodes);
  } else if (shape == "keyhole") {
    pencil::Keyhole k{center, radius, cfg.number("contour", "inner_radius"),
                      cfg.number("contour", "slit_angle"), cfg.number("contour", "slit_half_width")};
    contour = pencil::Contour::keyhole(k, nodes);
  } else {
    throw ConfigError(fmt::format("contour.shape must be circle or keyhole, not '{}'", shape));
  }
  const auto result = pencil::count_eigs_contour(p, contour);
  int oracle = 0;
  for (const auto& z : pencil::direct_eig_oracle(p)) oracle += pencil::encloses(contour, z) ? 1 : 0;

  Csv out({"shape", "count", "oracle_count", "residual", "nodes_used", "integral_re", "integral_im"});
  out.cell(shape).cell(result.count).cell(oracle).cell(result.residual).cell(result.nodes_used);
  out.cell(result.raw_integral.real()).cell(result.raw_integral.imag()).end();
  return {out.file("count.csv")};
}

Eigen::MatrixXd point_set(const ResolvedConfig& cfg, int r1) {
  const std::string& kind = cfg.text("diameter", "point_set");
  if (kind == "antipodal") {
    Eigen::MatrixXd pts(r1, 2 * r1);
    pts << Eigen::MatrixXd::Identity(r1, r1), -Eigen::MatrixXd::Identity(r1, r1);
    return pts;
  }
  if (kind == "sphere") {
    const auto n = static_cast<Eigen::Index>(positive_count(cfg, "diameter", "points"));
    Rng rng = derive_stream(cfg.seed(), 3);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd pts(r1, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < r1; ++i) pts(i, j) = normal(rng);
      pts.col(j).normalize();
    }
    return pts;
  }
  throw ConfigError(fmt::format("diameter.point_set must be antipodal or sphere, not '{}'", kind));
}

std::vector<OutputFile> project(const ResolvedConfig& cfg) {
  const auto bounds = bounds_of(cfg);
  const std::size_t grid = positive_count(cfg, "experiment", "grid_points");
  Csv curve({"theta", "f", "proj_outward", "proj_inward"});
  for (std::size_t i = 0; i < grid; ++i) {
    const double theta = grid == 1 ? bounds.theta_min
                                   : bounds.theta_min + (bounds.theta_max - bounds.theta_min) *
                                                            static_cast<double>(i) / static_cast<double>(grid - 1);
    // Outward pushes towards the nearer hard bound.
    const double outward = theta >= 0.5 * (bounds.theta_min + bounds.theta_max) ? 1.0 : -1.0;
    curve.cell(theta).cell(projection::f_margin(theta, bounds));
    curve.cell(projection::proj(theta, outward, bounds)).cell(projection::proj(theta, -outward, bounds)).end();
  }

  const std::size_t trials = positive_count(cfg, "experiment", "trials");
  const auto rows = static_cast<Eigen::Index>(positive_count(cfg, "experiment", "rows"));
  const auto cols = static_cast<Eigen::Index>(positive_count(cfg, "experiment", "cols"));
  Rng rng = derive_stream(cfg.seed(), 0);
  std::uniform_real_distribution<double> hard(bounds.theta_min, bounds.theta_max);
  std::uniform_real_distribution<double> soft(bounds.theta_min + bounds.eta, bounds.theta_max - bounds.eta);
  std::normal_distribution<double> normal;
  double worst = -std::numeric_limits<double>::infinity();
  std::size_t non_positive = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::MatrixXd theta(rows, cols), star(rows, cols), big(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) {
        theta(i, j) = hard(rng);
        star(i, j) = soft(rng);
        big(i, j) = normal(rng);
      }
    }
    const double v = projection::trace_inequality(theta, star, big, bounds);
    worst = std::max(worst, v);
    if (v <= 0.0) ++non_positive;
  }

  const int r1 = static_cast<int>(positive_count(cfg, "diameter", "r1"));
  const int r2 = static_cast<int>(positive_count(cfg, "diameter", "r2"));
  projection::DiameterOptions dopts{positive_count(cfg, "diameter", "trials"),
                                    positive_count(cfg, "diameter", "width_draws"), sub_seed(cfg.seed(), 4)};
  const auto d = projection::projected_diameter_check(point_set(cfg, r1), r2, cfg.number("diameter", "c0"), dopts);

  Csv summary({"quantity", "value"});
  summary.cell("trace_trials").cell(trials).end();
  summary.cell("trace_non_positive").cell(non_positive).end();
  summary.cell("trace_max").cell(worst).end();
  summary.cell("gaussian_width").cell(d.gaussian_width).end();
  summary.cell("diameter").cell(d.diameter).end();
  summary.cell("diameter_bound").cell(d.bound).end();
  summary.cell("max_projected_diameter").cell(d.max_projected_diameter).end();
  summary.cell("holds_frequency").cell(d.holds_frequency).end();
  summary.cell("required_frequency").cell(d.required_frequency).end();
  return {curve.file("proj_curve.csv"), summary.file("project_summary.csv")};
}

std::vector<OutputFile> jl_tail(const ResolvedConfig& cfg) {
  const int n = static_cast<int>(positive_count(cfg, "jl", "n"));
  if (n < 2) throw ConfigError("jl.n must be at least 2");
  const std::size_t trials = positive_count(cfg, "jl", "trials");
  const auto tau2 = cfg.numbers("jl", "tau2");
  // The experiment is rotation invariant, so two basis vectors suffice.
  const Eigen::VectorXd vi = Eigen::VectorXd::Unit(n, 0);
  const Eigen::VectorXd vj = Eigen::VectorXd::Unit(n, 1);
  Csv out({"k", "tau2", "tau1", "empirical_freq", "standard_error", "analytic_bound", "holds"});
  for (double kd : cfg.numbers("jl", "k")) {
    const int k = static_cast<int>(kd);
    if (k != kd || k < 1 || k >= n) throw ConfigError(fmt::format("jl.k entry {} must be an integer in [1, n)", kd));
    const auto reports = projection::jl_tail_experiment(
        vi, vj, k, tau2, projection::JlOptions{trials, sub_seed(cfg.seed(), static_cast<std::uint64_t>(k))});
    for (const auto& r : reports) {
      out.cell(r.k).cell(r.tau2).cell(r.tau1).cell(r.empirical_freq).cell(r.standard_error);
      out.cell(r.analytic_bound).cell(r.holds ? "true" : "false").end();
    }
  }
  return {out.file("jl_tail.csv")};
}

std::vector<OutputFile> train(const ResolvedConfig& cfg) {
  policy::EigenEnsemble ensemble;
  ensemble.u0 = static_cast<int>(positive_count(cfg, "ensemble", "u0"));
  ensemble.v0 = static_cast<int>(positive_count(cfg, "ensemble", "v0"));
  ensemble.beta = cfg.number("ensemble", "beta");
  policy::MarkovEigenstateEnv env(ensemble);

  policy::TrainOptions opts;
  opts.iterations = cfg.integer("train", "iterations");
  if (opts.iterations < 0) throw ConfigError("train.iterations must be non-negative");
  opts.discount = cfg.number("train", "discount");
  opts.seed = cfg.seed();
  opts.reward_window = positive_count(cfg, "train", "reward_window");
  opts.initial_q = cfg.number("train", "initial_q");

  const std::string& kind = cfg.text("schedule", "kind");
  policy::Schedules schedules;
  if (kind == "diminishing") {
    schedules = policy::Schedules::diminishing();
  } else if (kind == "constant") {
    schedules = policy::Schedules::constant(cfg.number("schedule", "alpha"), cfg.number("schedule", "beta"),
                                            cfg.number("schedule", "epsilon"));
  } else {
    throw ConfigError(fmt::format("schedule.kind must be diminishing or constant, not '{}'", kind));
  }

  const auto model = env.estimated_model(opts.discount, positive_count(cfg, "train", "model_steps"),
                                         sub_seed(cfg.seed(), 2));
  const policy::Table q_star = policy::value_iteration_oracle(model);
  const auto result = policy::train(env, schedules, opts, q_star);

  Csv pol({"state", "action", "probability"});
  for (Eigen::Index s = 0; s < result.output_policy.rows(); ++s) {
    for (Eigen::Index a = 0; a < result.output_policy.cols(); ++a) {
      pol.cell(static_cast<long>(s)).cell(static_cast<long>(a)).cell(result.output_policy(s, a)).end();
    }
  }
  const auto& last = result.trace.rows.back();
  Csv summary({"quantity", "value"});
  summary.cell("iterations").cell(opts.iterations).end();
  summary.cell("sampled_index").cell(result.trace.sampled_index).end();
  summary.cell("final_avg_reward").cell(last.avg_reward).end();
  summary.cell("final_q_error").cell(last.q_error).end();
  summary.cell("final_avg_policy").cell(last.avg_policy).end();
  return {{"trace.csv", emit_training_trace(result.trace)}, pol.file("policy.csv"), summary.file("train_summary.csv")};
}

possibilistic::HoldingTime holding_of(const ResolvedConfig& cfg, const std::string& prefix) {
  possibilistic::HoldingTime h;
  const std::string& kind = cfg.text("semi_markov", prefix + "_holding");
  if (kind == "exponential") {
    h.kind = possibilistic::HoldingTime::Kind::kExponential;
  } else if (kind == "deterministic") {
    h.kind = possibilistic::HoldingTime::Kind::kDeterministic;
  } else {
    throw ConfigError(fmt::format("semi_markov.{}_holding must be exponential or deterministic", prefix));
  }
  h.mean = cfg.number("semi_markov", prefix + "_mean");
  return h;
}

std::vector<OutputFile> possim(const ResolvedConfig& cfg) {
  using namespace possibilistic;
  const auto scalar_mode = [&](const std::string& name, double a, const std::string& prefix) {
    Mode m;
    m.name = name;
    m.dynamics.a1 = Eigen::MatrixXd::Constant(1, 1, a);
    m.dynamics.a2 = Eigen::RowVectorXd::Ones(1);
    m.dynamics.a3 = Eigen::RowVectorXd::Ones(1);
    m.dynamics.w0 = cfg.number("semi_markov", "process_noise");
    m.dynamics.w1 = cfg.number("semi_markov", "obs_noise_bob");
    m.dynamics.w2 = cfg.number("semi_markov", "obs_noise_eve");
    m.holding = holding_of(cfg, prefix);
    m.unstable = channel::spectral_radius(m.dynamics).unstable;
    return m;
  };
  SemiMarkovSpec spec;
  spec.modes = {scalar_mode("stable", cfg.number("semi_markov", "stable_a"), "stable"),
                scalar_mode("unstable", cfg.number("semi_markov", "unstable_a"), "unstable")};
  spec.transitions = PossibilisticKernel(real_matrix(cfg, "semi_markov", "kernel"));
  spec.initial_mode = static_cast<int>(cfg.integer("semi_markov", "initial_mode"));
  spec.initial_state = Eigen::VectorXd::Constant(1, cfg.number("semi_markov", "initial_state"));
  try {
    spec.validate();
  } catch (const DomainError& e) {
    throw ConfigError(fmt::format("[semi_markov]: {}", e.what()));
  }

  SimulateOptions sopts;
  sopts.record_dynamics = cfg.flag("semi_markov", "record_dynamics");
  const Trajectory traj = simulate_semi_markov(spec, cfg.number("semi_markov", "horizon"), cfg.seed(), sopts);

  std::vector<OutputFile> files;
  Csv segs({"mode", "start", "holding"});
  for (const auto& s : traj.segments) segs.cell(s.mode).cell(s.start).cell(s.holding).end();
  files.push_back(segs.file("segments.csv"));
  if (sopts.record_dynamics) {
    Csv dyn({"time", "mode", "state", "obs_bob", "obs_eve"});
    for (const auto& d : traj.dynamics) {
      dyn.cell(d.time).cell(d.mode).cell(d.state(0)).cell(d.observation_bob).cell(d.observation_eve).end();
    }
    files.push_back(dyn.file("dynamics.csv"));
  }
  const auto report = jump_independence_test(traj, static_cast<int>(spec.modes.size()));
  Csv ind({"test", "statistic", "dof", "critical_value"});
  for (std::size_t i = 0; i < report.statistics.size(); ++i) {
    ind.cell(i).cell(report.statistics[i]).cell(report.degrees_of_freedom[i]).cell(report.critical_values[i]).end();
  }
  ind.cell("all").cell(report.independent ? "independent" : "dependent").cell("").cell("").end();
  files.push_back(ind.file("independence.csv"));

  const std::string& graph_file = cfg.text("graph", "file");
  if (!graph_file.empty()) {
    const PossibilisticGraph g = read_graph_file(graph_file);
    std::string header;
    for (std::size_t i = 0; i < g.size(); ++i) header += g.name(static_cast<int>(i)) + ",";
    header += "possibility\n";
    std::string body;
    std::vector<int> assignment(g.size(), 0);
    for (;;) {
      for (int v : assignment) body += fmt::format("{},", v);
      body += format_number(chain_joint(g, assignment)) + "\n";
      bool advanced = false;
      for (std::size_t axis = g.size(); axis-- > 0 && !advanced;) {
        if (++assignment[axis] < g.cardinality(static_cast<int>(axis))) {
          advanced = true;
        } else {
          assignment[axis] = 0;
        }
      }
      if (!advanced) break;
    }
    files.push_back({"graph_joint.csv", header + body});
  }

  const auto age = age_example_check();
  Csv a({"quantity", "value"});
  a.cell("adult_aged_or_middle").cell(age.adult_aged_or_middle).end();
  a.cell("adult_middle_or_young").cell(age.adult_middle_or_young).end();
  a.cell("aged_and_middle").cell(age.aged_and_middle).end();
  files.push_back(a.file("age_example.csv"));
  return files;
}

std::vector<OutputFile> complexity_table(const ResolvedConfig& cfg) {
  const ChannelSamples s = channel_samples(cfg);
  volume::GreedyOptions opts;
  opts.grid_points = positive_count(cfg, "greedy", "grid_points");
  opts.max_iters = static_cast<std::size_t>(std::max(0L, cfg.integer("greedy", "max_iters")));
  opts.t = cfg.number("greedy", "t");
  const std::size_t n = positive_count(cfg, "greedy", "thresholds");
  const auto expected = volume::greedy_threshold_search(s.rates, n, volume::GreedyObjective::kExpectedVolume, opts);
  const auto proxy = volume::greedy_threshold_search(s.rates, n, volume::GreedyObjective::kSopVolumeProxy, opts);
  std::vector<long> iterations;
  for (double it : cfg.numbers("table", "iterations")) {
    if (it < 0 || it != std::floor(it)) throw ConfigError("table.iterations must be non-negative integers");
    iterations.push_back(static_cast<long>(it));
  }
  return emit_complexity_accuracy(expected, proxy, iterations);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DomainError(fmt::format("'{}' is not a number", text));
  }
  return v;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<OutputFile> run_experiment(const ResolvedConfig& cfg) {
  const std::string& kind = cfg.kind();
  if (kind == "sop-table") return sop_table(cfg);
  if (kind == "count-eigs") return count_eigs(cfg);
  if (kind == "project") return project(cfg);
  if (kind == "jl-tail") return jl_tail(cfg);
  if (kind == "train") return train(cfg);
  if (kind == "possim") return possim(cfg);
  if (kind == "complexity-table") return complexity_table(cfg);
  throw ConfigError(fmt::format("unknown experiment kind '{}'", kind));
}

std::string manifest_json(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["kind"] = m.kind;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["config_sha256"] = m.config_sha256;
  j["outputs"] = nlohmann::ordered_json::array();
  for (const auto& o : m.outputs) j["outputs"].push_back({{"name", o.name}, {"sha256", o.sha256}});
  return j.dump(2) + "\n";
}

RunManifest run(const ResolvedConfig& cfg) {
  const std::vector<OutputFile> files = run_experiment(cfg);
  const fs::path dir(cfg.out());
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError(fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));

  RunManifest m;
  m.kind = cfg.kind();
  m.seed = cfg.seed();
  m.version = kToolVersion;
  const std::string resolved = cfg.to_text();
  m.config_sha256 = sha256_hex(resolved);
  write_file(dir / "config.resolved.ini", resolved);
  for (const auto& f : files) {
    write_file(dir / f.name, f.content);
    m.outputs.push_back({f.name, sha256_hex(f.content)});
  }
  write_file(dir / "manifest.json", manifest_json(m));
  return m;
}

RunManifest read_manifest(const std::string& dir) {
  const std::string text = read_file(fs::path(dir) / "manifest.json");
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.kind = j.at("kind").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    for (const auto& o : j.at("outputs")) {
      m.outputs.push_back({o.at("name").get<std::string>(), o.at("sha256").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("malformed manifest in '{}': {}", dir, e.what()));
  }
  return m;
}

std::vector<std::string> verify_manifest(const std::string& dir) {
  const RunManifest m = read_manifest(dir);
  std::vector<std::string> bad;
  const auto check = [&](const std::string& name, const std::string& expected) {
    const fs::path p = fs::path(dir) / name;
    if (!fs::exists(p) || sha256_hex(read_file(p)) != expected) bad.push_back(name);
  };
  check("config.resolved.ini", m.config_sha256);
  for (const auto& o : m.outputs) check(o.name, o.sha256);
  return bad;
}

std::string emit_training_trace(const policy::TrainingTrace& trace) {
  Csv out({"iteration", "avg_reward", "q_error", "avg_policy"});
  for (const auto& r : trace.rows) out.cell(r.iteration).cell(r.avg_reward).cell(r.q_error).cell(r.avg_policy).end();
  return out.file("").content;
}

policy::TrainingTrace parse_training_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "iteration,avg_reward,q_error,avg_policy") {
    throw DomainError("training trace header is missing");
  }
  policy::TrainingTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    for (auto comma = rest.find(','); comma != std::string_view::npos; comma = rest.find(',')) {
      cells.push_back(rest.substr(0, comma));
      rest.remove_prefix(comma + 1);
    }
    cells.push_back(rest);
    if (cells.size() != 4) throw DomainError(fmt::format("trace row '{}' needs 4 columns", line));
    long it = 0;
    const auto [ptr, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), it);
    if (ec != std::errc() || ptr != cells[0].data() + cells[0].size()) {
      throw DomainError(fmt::format("bad iteration '{}'", cells[0]));
    }
    trace.rows.push_back({it, parse_double(cells[1]), parse_double(cells[2]), parse_double(cells[3])});
  }
  return trace;
}

std::vector<OutputFile> emit_complexity_accuracy(const volume::GreedyResult& expected_volume,
                                                 const volume::GreedyResult& sop_proxy,
                                                 const std::vector<long>& iterations) {
  if (expected_volume.history.empty() || sop_proxy.history.empty()) {
    throw DomainError("greedy runs need at least their initial step");
  }
  const auto step_at = [](const volume::GreedyResult& r, long i) -> const volume::GreedyStep& {
    const auto idx = std::min(static_cast<std::size_t>(i), r.history.size() - 1);
    return r.history[idx];
  };
  const auto ratio = [](double num, double den, const char* what) {
    if (den == 0.0) throw NumericalError(fmt::format("{} metric is zero", what));
    return num / den;
  };
  const double e0 = expected_volume.history.front().objective;
  const double s0 = sop_proxy.history.front().objective;
  Csv complexity({"iteration", "expected_volume", "sop_volume_proxy", "ratio"});
  Csv accuracy({"iteration", "expected_volume", "sop_volume_proxy", "ratio"});
  for (long it : iterations) {
    if (it < 0) throw DomainError("iterations must be non-negative");
    const auto& e = step_at(expected_volume, it);
    const auto& s = step_at(sop_proxy, it);
    const auto ce = static_cast<double>(e.evaluations);
    const auto cs = static_cast<double>(s.evaluations);
    complexity.cell(it).cell(ce).cell(cs).cell(ratio(cs, ce, "expected-volume complexity")).end();
    const double ae = ratio(e.objective, e0, "initial expected-volume");
    const double as = ratio(s.objective, s0, "initial sop-proxy");
    accuracy.cell(it).cell(ae).cell(as).cell(ratio(as, ae, "expected-volume accuracy")).end();
  }
  return {complexity.file("complexity.csv"), accuracy.file("accuracy.csv")};
}

}  // namespace sopbound::experiments
