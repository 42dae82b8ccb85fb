#include "o2nc/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace o2nc {

using nlohmann::json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_num(const json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

json vec(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

Vector get_vec(const json& j, const char* key) {
  const auto& a = j.at(key);
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) =
        a[i].is_null() ? std::numeric_limits<double>::quiet_NaN() : a[i].get<double>();
  }
  return v;
}

json iteration_json(const IterationRecord& r) {
  return {{"n", r.n},         {"x_prev", vec(r.x_prev)}, {"delta", vec(r.delta)},
          {"x", vec(r.x)},    {"w", vec(r.w)},           {"z", vec(r.z)},
          {"g", vec(r.g)},    {"h", vec(r.h)},           {"eta", num(r.eta)}};
}

IterationRecord iteration_from(const json& j) {
  IterationRecord r;
  r.n = j.at("n").get<long long>();
  r.x_prev = get_vec(j, "x_prev");
  r.delta = get_vec(j, "delta");
  r.x = get_vec(j, "x");
  r.w = get_vec(j, "w");
  r.z = get_vec(j, "z");
  r.g = get_vec(j, "g");
  r.h = get_vec(j, "h");
  r.eta = get_num(j, "eta");
  return r;
}

json episode_json(const EpisodeRecord& e) {
  return {{"k", e.k},
          {"grad_sum", vec(e.grad_sum)},
          {"comparator", vec(e.comparator)},
          {"w_bar", vec(e.w_bar)},
          {"regret", num(e.regret)},
          {"grad_norm_at_wbar", num(e.grad_norm_at_wbar)},
          {"linear_loss", num(e.linear_loss)},
          {"sq_error_sum", num(e.sq_error_sum)},
          {"sq_step_change_sum", num(e.sq_step_change_sum)},
          {"mean_exact_grad_norm", num(e.mean_exact_grad_norm)},
          {"conversion_gap_min", num(e.conversion_gap_min)},
          {"geometry_error_max", num(e.geometry_error_max)},
          {"local_l1_max", num(e.local_l1_max)},
          {"local_l1_argmax", e.local_l1_argmax},
          {"local_l1_exact_max", num(e.local_l1_exact_max)},
          {"max_delta_norm", num(e.max_delta_norm)},
          {"eta_start", num(e.eta_start)},
          {"eta_min", num(e.eta_min)},
          {"eta_max", num(e.eta_max)},
          {"eta_mean", num(e.eta_mean)},
          {"eta_nonincreasing", e.eta_nonincreasing},
          {"f_end", num(e.f_end)}};
}

EpisodeRecord episode_from(const json& j) {
  EpisodeRecord e;
  e.k = j.at("k").get<long long>();
  e.grad_sum = get_vec(j, "grad_sum");
  e.comparator = get_vec(j, "comparator");
  e.w_bar = get_vec(j, "w_bar");
  e.regret = get_num(j, "regret");
  e.grad_norm_at_wbar = get_num(j, "grad_norm_at_wbar");
  e.linear_loss = get_num(j, "linear_loss");
  e.sq_error_sum = get_num(j, "sq_error_sum");
  e.sq_step_change_sum = get_num(j, "sq_step_change_sum");
  e.mean_exact_grad_norm = get_num(j, "mean_exact_grad_norm");
  e.conversion_gap_min = get_num(j, "conversion_gap_min");
  e.geometry_error_max = get_num(j, "geometry_error_max");
  e.local_l1_max = get_num(j, "local_l1_max");
  e.local_l1_argmax = j.at("local_l1_argmax").get<long long>();
  e.local_l1_exact_max = get_num(j, "local_l1_exact_max");
  e.max_delta_norm = get_num(j, "max_delta_norm");
  e.eta_start = get_num(j, "eta_start");
  e.eta_min = get_num(j, "eta_min");
  e.eta_max = get_num(j, "eta_max");
  e.eta_mean = get_num(j, "eta_mean");
  e.eta_nonincreasing = j.at("eta_nonincreasing").get<bool>();
  e.f_end = get_num(j, "f_end");
  return e;
}

}  // namespace

json to_json(const RunResult& run) {
  json iterations = json::array();
  for (const auto& r : run.iterations) iterations.push_back(iteration_json(r));
  json episodes = json::array();
  for (const auto& e : run.episodes) episodes.push_back(episode_json(e));
  return {
      {"problem", run.problem},
      {"learner",
       {{"kind", run.learner.kind},
        {"eta", num(run.learner.eta)},
        {"gamma", num(run.learner.gamma)},
        {"alpha", num(run.learner.alpha)}}},
      {"config",
       {{"M", run.config.M},
        {"K", run.config.K},
        {"T", run.config.T},
        {"D", run.config.D},
        {"mode", to_string(run.config.mode)},
        {"trace_limit", run.config.trace_limit}}},
      {"noise",
       {{"sigma", run.noise.sigma},
        {"mode", to_string(run.noise.mode)},
        {"rng_seed", run.noise.rng_seed}}},
      {"ball_constrained", run.ball_constrained},
      {"x0", vec(run.x0)},
      {"f_x0", num(run.f_x0)},
      {"f_star", num(run.f_star)},
      {"L1", run.L1},
      {"L2", run.L2},
      {"trace_stride", run.trace_stride},
      {"iterations", std::move(iterations)},
      {"episodes", std::move(episodes)},
      {"output_episode", run.output_episode},
      {"output", vec(run.output)},
      {"output_grad_norm", num(run.output_grad_norm)},
      {"total_regret", num(run.total_regret)},
      {"mean_grad_norm_wbar", num(run.mean_grad_norm_wbar)},
      {"max_delta_norm", num(run.max_delta_norm)},
      {"final_delta_norm", num(run.final_delta_norm)},
      {"f_final", num(run.f_final)},
      {"wall_time_seconds", run.wall_time_seconds},
  };
}

RunResult run_result_from_json(const json& j) {
  RunResult run;
  run.problem = j.at("problem").get<std::string>();
  const auto& l = j.at("learner");
  run.learner.kind = l.at("kind").get<std::string>();
  run.learner.eta = get_num(l, "eta");
  run.learner.gamma = get_num(l, "gamma");
  run.learner.alpha = get_num(l, "alpha");
  const auto& c = j.at("config");
  run.config.M = c.at("M").get<long long>();
  run.config.K = c.at("K").get<long long>();
  run.config.T = c.at("T").get<long long>();
  run.config.D = c.at("D").get<double>();
  run.config.mode = c.at("mode").get<std::string>() == "stochastic" ? OracleMode::kStochastic
                                                                     : OracleMode::kDeterministic;
  run.config.trace_limit = c.at("trace_limit").get<long long>();
  const auto& nz = j.at("noise");
  run.noise.sigma = nz.at("sigma").get<double>();
  run.noise.mode = noise_mode_from_string(nz.at("mode").get<std::string>());
  run.noise.rng_seed = nz.at("rng_seed").get<std::uint64_t>();
  run.ball_constrained = j.at("ball_constrained").get<bool>();
  run.x0 = get_vec(j, "x0");
  run.f_x0 = get_num(j, "f_x0");
  run.f_star = get_num(j, "f_star");
  run.L1 = j.at("L1").get<double>();
  run.L2 = j.at("L2").get<double>();
  run.trace_stride = j.at("trace_stride").get<long long>();
  for (const auto& r : j.at("iterations")) run.iterations.push_back(iteration_from(r));
  for (const auto& e : j.at("episodes")) run.episodes.push_back(episode_from(e));
  run.output_episode = j.at("output_episode").get<long long>();
  run.output = get_vec(j, "output");
  run.output_grad_norm = get_num(j, "output_grad_norm");
  run.total_regret = get_num(j, "total_regret");
  run.mean_grad_norm_wbar = get_num(j, "mean_grad_norm_wbar");
  run.max_delta_norm = get_num(j, "max_delta_norm");
  run.final_delta_norm = get_num(j, "final_delta_norm");
  run.f_final = get_num(j, "f_final");
  run.wall_time_seconds = j.at("wall_time_seconds").get<double>();
  return run;
}

std::string episode_csv(const RunResult& run) {
  std::ostringstream out;
  out << "k,regret,comparator_norm,grad_norm_at_wbar,f_end,eta_start,eta_min,eta_max,eta_mean,"
         "sq_error_sum,local_l1_max,max_delta_norm\n";
  for (const auto& e : run.episodes) {
    out << e.k << ',' << format_double(e.regret) << ',' << format_double(e.comparator.norm())
        << ',' << format_double(e.grad_norm_at_wbar) << ',' << format_double(e.f_end) << ','
        << format_double(e.eta_start) << ',' << format_double(e.eta_min) << ','
        << format_double(e.eta_max) << ',' << format_double(e.eta_mean) << ','
        << format_double(e.sq_error_sum) << ',' << format_double(e.local_l1_max) << ','
        << format_double(e.max_delta_norm) << '\n';
  }
  return out.str();
}

const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols = {
      "problem", "optimizer", "M", "sigma", "seed", "D", "T", "K", "eta_or_gamma",
      "mean_grad_norm_wbar", "grad_norm_output", "total_regret"};
  return cols;
}

std::string summary_header() {
  std::string out;
  for (const auto& c : summary_columns()) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string summary_row(const RunResult& run) {
  const double step =
      run.learner.kind == "odog-adaptive" ? run.learner.gamma : run.learner.eta;
  std::ostringstream out;
  out << run.problem << ',' << run.learner.kind << ',' << run.config.M << ','
      << format_double(run.noise.sigma) << ',' << run.noise.rng_seed << ','
      << format_double(run.config.D) << ',' << run.config.T << ',' << run.config.K << ','
      << format_double(step) << ',' << format_double(run.mean_grad_norm_wbar) << ','
      << format_double(run.output_grad_norm) << ',' << format_double(run.total_regret);
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace o2nc
