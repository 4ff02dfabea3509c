#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "json_writer.hpp"
#include "mitk/mitk.hpp"

namespace mitk::cli {

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

unsigned default_threads() {
  if (const char* env = std::getenv("MITK_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("not a number: '" + item + "'");
    }
    if (used != item.size()) throw InvalidArgument("not a number: '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("empty number list");
  return out;
}

// "a,b;c,d" -> 2x2, rows separated by ';'.
GaussianChannelSpec parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string row;
  while (std::getline(ss, row, ';')) rows.push_back(parse_list(row));
  if (rows.empty()) throw InvalidArgument("empty matrix");
  Eigen::MatrixXd f(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows[0].size()) throw InvalidArgument("ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return GaussianChannelSpec(std::move(f));
}

GaussianChannelSpec parse_spec(const std::string& text) {
  if (text.find(';') != std::string::npos) return parse_matrix(text);
  return GaussianChannelSpec::scalar(parse_list(text));
}

SignalDist<> parse_signal(const std::string& text, std::size_t symbols) {
  if (text.empty()) return SignalDist<>::uniform(symbols);
  return SignalDist<>(parse_list(text));
}

Json gap_json(const GapReport& r) {
  return Json::object()
      .set("i_x1x2", r.i_x1x2)
      .set("i_x1x1p", r.i_x1x1p)
      .set("i_x2x2p", r.i_x2x2p)
      .set("delta_q2", r.delta_q2)
      .set("delta_q1", r.delta_q1)
      .set("identity_residual", r.identity_residual);
}

void emit(std::ostream& out, const Json& j) { out << j << '\n'; }

// Writes through `writer` to path, or to `out` for "" or "-".
template <class Fn>
void write_output(const std::string& path, std::ostream& out, Fn writer) {
  if (path.empty() || path == "-") {
    writer(out);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open '" + path + "' for writing");
  writer(file);
  file.flush();
  if (!file) throw IoError("write to '" + path + "' failed");
}

struct GapOptions {
  double p0 = 0.0, p1 = 0.0, q0 = 0.0, q1 = 0.0, epsilon = 1.0;
};

struct SweepOptions {
  double min = 0.0, max = 1.0, epsilon = 1.0;
  std::size_t points = 101;
  std::string output, format = "csv";
  unsigned threads = 0;
};

struct VerifyCliOptions {
  std::vector<std::string> only;
  std::string fault;
};

struct ConvergenceOptions {
  double p0 = 3.0, p1 = 1.0;
  std::string eps = "0.1,0.01,0.001";
  std::string sizes = "100,1000,10000";
  std::string output;
};

struct SbmOptions {
  double p0 = 3.0, p1 = 1.0, t1 = 0.1, t2 = 0.1, tail_cap = 1e-12;
  std::int64_t n = 100, hard_cap = 500;
};

struct PhiOptions {
  double p0 = 3.0, p1 = 1.0, t1 = 0.0, t2 = 0.0, step = kPhiFdStep;
};

struct GaussianOptions {
  std::string spec, signal, method = "quadrature";
  double t = 1.0, tolerance = 1e-12;
  std::size_t samples = 0;
  std::optional<std::uint64_t> seed;
};

struct PsdOptions {
  std::vector<std::string> specs;
  std::string signal, t = "0.1,0.05,0.025";
};

int cmd_gap(const GapOptions& o, std::ostream& out) {
  const BernoulliPairParams params{o.p0, o.p1, o.q0, o.q1, o.epsilon};
  params.validate();
  emit(out, gap_json(bernoulli_gap(params)));
  return kOk;
}

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  if (o.points == 0) throw InvalidArgument("sweep: --points must be >= 1");
  if (!(o.min >= 0.0 && o.min <= o.max))
    throw InvalidArgument("sweep: need 0 <= --min <= --max");
  if (o.format != "csv" && o.format != "json") throw InvalidArgument("sweep: --format is csv or json");
  BernoulliPairParams::symmetric(o.max, o.max, o.epsilon).validate();
  const auto grid = uniform_grid(o.min, o.max, o.points);
  const auto rows = sweep_heatmap(grid, grid, o.epsilon, o.threads ? o.threads : default_threads());
  write_output(o.output, out, [&](std::ostream& s) {
    if (o.format == "csv") {
      write_sweep_csv(s, rows);
      return;
    }
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push(Json::object()
                   .set("p0", r.p0)
                   .set("p1", r.p1)
                   .set("epsilon", r.epsilon)
                   .set("delta_q2", r.delta_q2)
                   .set("contour", r.contour));
    }
    emit(s, arr);
  });
  return kOk;
}

int cmd_verify(const VerifyCliOptions& o, std::ostream& out) {
  VerifyOptions opt;
  opt.only = o.only;
  if (!o.fault.empty()) {
    if (o.fault != "j-sign") throw InvalidArgument("verify: unknown fault '" + o.fault + "'");
    opt.flip_j_sign = true;
  }
  const auto results = run_checks(opt);
  Json arr = Json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    arr.push(Json::object()
                 .set("name", r.name)
                 .set("passed", r.passed)
                 .set("margin", r.margin)
                 .set("tolerance", r.tolerance));
  }
  emit(out, arr);
  return all ? kOk : kVerificationFailed;
}

int cmd_convergence(const ConvergenceOptions& o, std::ostream& out) {
  const auto eps = parse_list(o.eps);
  std::vector<std::int64_t> sizes;
  for (double n : parse_list(o.sizes)) {
    if (!(n >= 1.0) || n != std::floor(n)) throw InvalidArgument("convergence: sizes must be positive integers");
    sizes.push_back(static_cast<std::int64_t>(n));
  }
  for (double e : eps) BernoulliPairParams::symmetric(o.p0, o.p1, e).validate();
  const double limit = limit_hessian_combination(o.p0, o.p1);
  const ConvergenceTable table = taylor_convergence_check(o.p0, o.p1, eps);
  Json eps_series = Json::array();
  for (const auto& r : table.rows) {
    eps_series.push(Json::object()
                        .set("epsilon", r.epsilon)
                        .set("scaled_gap", r.scaled_gap)
                        .set("relative_error", r.relative_error));
  }
  Json n_series = Json::array();
  for (std::int64_t n : sizes) {
    const double q = quadratic_form_at_zero({o.p0, o.p1, n, 0.0, 0.0});
    n_series.push(Json::object()
                      .set("n", n)
                      .set("quadratic_form", q)
                      .set("relative_error", std::abs(q - limit) / limit));
  }
  const Json doc = Json::object()
                       .set("p0", o.p0)
                       .set("p1", o.p1)
                       .set("limit", limit)
                       .set("sextic_bound", sextic_bound(o.p0, o.p1))
                       .set("converging", table.converging)
                       .set("epsilon_series", eps_series)
                       .set("n_series", n_series);
  write_output(o.output, out, [&](std::ostream& s) { emit(s, doc); });
  return kOk;
}

int cmd_sbm(const SbmOptions& o, std::ostream& out) {
  const SbmParams p{o.p0, o.p1, o.n, o.t1, o.t2};
  const TruncationPolicy trunc{o.tail_cap, o.hard_cap};
  p.validate();
  trunc.validate();
  const SeriesValue v = poissonized_mi(p, trunc);
  const HessianEntries h = hessian_entries(p, trunc);
  Json doc = Json::object()
                 .set("value", v.value)
                 .set("truncation_bound", v.truncation_bound)
                 .set("h11", h.h11)
                 .set("h12", h.h12)
                 .set("h22", h.h22)
                 .set("hessian_slack", h.slack)
                 .set("quadratic_form_at_zero", quadratic_form_at_zero(p));
  if (o.p0 + o.p1 > 0.0) doc.set("limit_hessian_combination", limit_hessian_combination(o.p0, o.p1));
  emit(out, doc);
  return kOk;
}

int cmd_phi(const PhiOptions& o, std::ostream& out) {
  const SeriesValue phi = phi_function(o.t1, o.t2, o.p0, o.p1);
  const SeriesValue psi = psi_function(o.t1, o.t2, o.p0, o.p1);
  const FdCombination fd = phi_hessian_combination_fd(o.p0, o.p1, o.step);
  emit(out, Json::object()
                .set("phi", phi.value)
                .set("psi", psi.value)
                .set("truncation_bound", phi.truncation_bound)
                .set("fd_coarse", fd.coarse)
                .set("fd_fine", fd.fine)
                .set("fd_extrapolated", fd.extrapolated)
                .set("limit_hessian_combination", limit_hessian_combination(o.p0, o.p1))
                .set("from_j_terms", limit_hessian_from_j_terms(o.p0, o.p1)));
  return kOk;
}

Method parse_method(const std::string& m) {
  if (m == "quadrature") return Method::quadrature;
  if (m == "montecarlo") return Method::montecarlo;
  throw InvalidArgument("unknown method '" + m + "'");
}

int cmd_gaussian(const GaussianOptions& o, std::ostream& out) {
  const GaussianChannelSpec spec = parse_spec(o.spec);
  const SignalDist<> signal = parse_signal(o.signal, spec.alphabet());
  const Method method = parse_method(o.method);
  Budget budget;
  budget.tolerance = o.tolerance;
  budget.samples = o.samples;
  budget.seed = o.seed;
  if (method == Method::montecarlo && (!o.seed || o.samples < 2))
    throw InvalidArgument("gaussian-mi: montecarlo needs --seed and --samples >= 2");
  const Estimate e = gaussian_mi(signal, spec, o.t, method, budget);
  emit(out, Json::object().set("value", e.value).set("error", e.error));
  return kOk;
}

int cmd_psd(const PsdOptions& o, std::ostream& out) {
  if (o.specs.empty()) throw InvalidArgument("psd-limit: give at least one --spec");
  std::vector<GaussianChannelSpec> specs;
  for (const auto& s : o.specs) specs.push_back(parse_spec(s));
  const SignalDist<> signal = parse_signal(o.signal, specs[0].alphabet());
  const PsdLimitReport rep = psd_limit_check(signal, specs, parse_list(o.t), Method::quadrature, Budget{});
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    rows.push(Json::object()
                  .set("i", r.i)
                  .set("j", r.j)
                  .set("t", r.t)
                  .set("scaled_mi", r.scaled_mi)
                  .set("gram", r.gram));
  }
  Json pairs = Json::array();
  for (const auto& p : rep.pairs) {
    pairs.push(Json::object()
                   .set("i", p.i)
                   .set("j", p.j)
                   .set("gram", p.gram)
                   .set("limit", p.limit)
                   .set("c_star", p.c_star)
                   .set("uncertainty", p.uncertainty));
  }
  emit(out, Json::object()
                .set("min_eigenvalue", rep.gram.min_eigenvalue)
                .set("trace", rep.gram.trace)
                .set("rows", rows)
                .set("pairs", pairs));
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact mutual-information toolkit"};
  app.require_subcommand(1);

  GapOptions gap;
  auto* c_gap = app.add_subcommand("gap", "Information gap for a pair of Bernoulli channels");
  c_gap->add_option("--p0", gap.p0, "Rate of channel 1 given S=0")->required();
  c_gap->add_option("--p1", gap.p1, "Rate of channel 1 given S=1")->required();
  c_gap->add_option("--q0", gap.q0, "Rate of channel 2 given S=0")->required();
  c_gap->add_option("--q1", gap.q1, "Rate of channel 2 given S=1")->required();
  c_gap->add_option("--epsilon", gap.epsilon, "Rate scale")->capture_default_str();

  SweepOptions sweep;
  auto* c_sweep = app.add_subcommand("sweep", "delta_q2 over a square grid of (p0, p1)");
  c_sweep->add_option("--min", sweep.min)->capture_default_str();
  c_sweep->add_option("--max", sweep.max)->capture_default_str();
  c_sweep->add_option("--points", sweep.points, "Points per axis")->capture_default_str();
  c_sweep->add_option("--epsilon", sweep.epsilon)->capture_default_str();
  c_sweep->add_option("--output", sweep.output, "Output file (stdout if omitted)");
  c_sweep->add_option("--format", sweep.format, "csv or json")->capture_default_str();
  c_sweep->add_option("--threads", sweep.threads, "Worker threads (default: MITK_THREADS or all cores)");

  VerifyCliOptions verify;
  auto* c_verify = app.add_subcommand("verify", "Run the named self-checks");
  c_verify->add_option("--only", verify.only, "Run only these checks")->delimiter(',');
  c_verify->add_option("--inject-fault", verify.fault)->group("");

  ConvergenceOptions conv;
  auto* c_conv = app.add_subcommand("convergence", "Small-rate convergence of the gap");
  c_conv->add_option("--p0", conv.p0)->capture_default_str();
  c_conv->add_option("--p1", conv.p1)->capture_default_str();
  c_conv->add_option("--eps", conv.eps, "Comma-separated epsilons")->capture_default_str();
  c_conv->add_option("--sizes", conv.sizes, "Comma-separated N values")->capture_default_str();
  c_conv->add_option("--output", conv.output);

  SbmOptions sbm;
  auto* c_sbm = app.add_subcommand("sbm", "Poissonized MI and its Hessian");
  c_sbm->add_option("--p0", sbm.p0)->capture_default_str();
  c_sbm->add_option("--p1", sbm.p1)->capture_default_str();
  c_sbm->add_option("--n", sbm.n)->capture_default_str();
  c_sbm->add_option("--t1", sbm.t1)->capture_default_str();
  c_sbm->add_option("--t2", sbm.t2)->capture_default_str();
  c_sbm->add_option("--tail-cap", sbm.tail_cap)->capture_default_str();
  c_sbm->add_option("--hard-cap", sbm.hard_cap)->capture_default_str();

  PhiOptions phi;
  auto* c_phi = app.add_subcommand("phi", "Limit functions phi and psi");
  c_phi->add_option("--p0", phi.p0)->capture_default_str();
  c_phi->add_option("--p1", phi.p1)->capture_default_str();
  c_phi->add_option("--t1", phi.t1)->capture_default_str();
  c_phi->add_option("--t2", phi.t2)->capture_default_str();
  c_phi->add_option("--step", phi.step, "Finite-difference step")->capture_default_str();

  GaussianOptions gauss;
  auto* c_gauss = app.add_subcommand("gaussian-mi", "I(S; sqrt(t) f(S) + W)");
  c_gauss->add_option("--spec", gauss.spec, "f values 'a,b,c' or matrix rows 'a,b;c,d'")->required();
  c_gauss->add_option("--signal", gauss.signal, "Signal probabilities (default uniform)");
  c_gauss->add_option("--t", gauss.t)->capture_default_str();
  c_gauss->add_option("--method", gauss.method, "quadrature or montecarlo")->capture_default_str();
  c_gauss->add_option("--tolerance", gauss.tolerance)->capture_default_str();
  c_gauss->add_option("--samples", gauss.samples);
  c_gauss->add_option("--seed", gauss.seed);

  PsdOptions psd;
  auto* c_psd = app.add_subcommand("psd-limit", "Centered Gram matrix and the t^-2 limit constant");
  c_psd->add_option("--spec", psd.specs, "One spec per channel")->required();
  c_psd->add_option("--signal", psd.signal);
  c_psd->add_option("--t", psd.t, "Decreasing t grid")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadParameters;
  }

  try {
    if (c_gap->parsed()) return cmd_gap(gap, out);
    if (c_sweep->parsed()) return cmd_sweep(sweep, out);
    if (c_verify->parsed()) return cmd_verify(verify, out);
    if (c_conv->parsed()) return cmd_convergence(conv, out);
    if (c_sbm->parsed()) return cmd_sbm(sbm, out);
    if (c_phi->parsed()) return cmd_phi(phi, out);
    if (c_gauss->parsed()) return cmd_gaussian(gauss, out);
    if (c_psd->parsed()) return cmd_psd(psd, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIoFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kBadParameters;
  }
  return kBadParameters;
}

}  // namespace mitk::cli
