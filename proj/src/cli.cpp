#include "autoten/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "autoten/autoten.hpp"
#include "autoten/bench.hpp"
#include "autoten/corcondia.hpp"
#include "autoten/cp_apr.hpp"
#include "autoten/cp_nmu.hpp"
#include "autoten/errors.hpp"
#include "autoten/log.hpp"
#include "autoten/synth.hpp"

namespace autoten::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct SolveOptions {
  int rank = 0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_iters;
  std::optional<double> tol;
  std::size_t restarts = 1;
};

void add_solve_options(CLI::App* app, SolveOptions& o) {
  app->add_option("--seed", o.seed, "Random seed");
  app->add_option("--max-iters", o.max_iters, "Maximum outer iterations");
  app->add_option("--tol", o.tol, "Stopping tolerance");
  app->add_option("--restarts", o.restarts, "Random restarts; the best objective is kept");
}

Loss parse_loss(const std::string& s) {
  if (s == "fro") return Loss::Fro;
  if (s == "kl") return Loss::Kl;
  throw UsageError("--loss must be fro or kl");
}

void check_rank(int rank) {
  if (rank < 1) throw UsageError("rank must be ≥ 1");
}

void check_restarts(std::size_t restarts) {
  if (restarts < 1) throw UsageError("restarts must be ≥ 1");
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

json invocation(const std::vector<std::string>& args) {
  return {{"program", "autoten"}, {"args", args}};
}

// KL fits need counts; negative entries from noisy data are dropped.
SparseTensor3 for_loss(const SparseTensor3& t, Loss loss) {
  if (loss == Loss::Fro || t.is_nonnegative()) return t;
  SparseTensor3 c = clamp_nonnegative(t);
  log::warn("dropped " + std::to_string(t.nnz() - c.nnz()) + " non-positive entries for the KL loss");
  return c;
}

CpResult fit(const SparseTensor3& t, Loss loss, const SolveOptions& o) {
  SolverConfig cfg = SolverConfig::defaults(loss, static_cast<std::size_t>(o.rank), o.seed);
  if (o.max_iters) cfg.max_outer_iters = *o.max_iters;
  if (o.tol) cfg.tol = *o.tol;
  validate(cfg);
  return loss == Loss::Fro ? cp_nmu_fit_best(t, cfg, o.restarts) : cp_apr_fit_best(t, cfg, o.restarts);
}

DenseMatrix weights_column(const FactorSet& f) {
  return DenseMatrix(f.weights.size(), 1, f.weights);
}

void write_factors(const fs::path& dir, const FactorSet& f) {
  save_matrix_csv_file((dir / "A.csv").string(), f.a);
  save_matrix_csv_file((dir / "B.csv").string(), f.b);
  save_matrix_csv_file((dir / "C.csv").string(), f.c);
  save_matrix_csv_file((dir / "weights.csv").string(), weights_column(f));
}

FactorSet read_factors(const std::string& dir) {
  DenseMatrix m[3];
  const char* names[3] = {"A.csv", "B.csv", "C.csv"};
  for (int n = 0; n < 3; ++n) {
    const fs::path p = fs::path(dir) / names[n];
    if (!fs::exists(p)) throw IoError("factor file '" + p.string() + "' not found");
    m[n] = load_matrix_csv_file(p.string());
  }
  const fs::path wp = fs::path(dir) / "weights.csv";
  if (!fs::exists(wp)) return FactorSet(std::move(m[0]), std::move(m[1]), std::move(m[2]));
  const DenseMatrix w = load_matrix_csv_file(wp.string());
  if (w.rows() != 1 && w.cols() != 1) throw DimensionError("weights.csv must be a single row or column");
  const auto v = w.values();
  return FactorSet(std::move(m[0]), std::move(m[1]), std::move(m[2]), std::vector<double>(v.begin(), v.end()));
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

SparseTensor3::Dims parse_dims(const std::string& s) {
  SparseTensor3::Dims d{};
  std::stringstream ss(s);
  std::string tok;
  std::size_t n = 0;
  while (std::getline(ss, tok, ',')) {
    if (n == 3) throw UsageError("--dims takes three comma-separated sizes");
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size() || v == 0) throw UsageError("invalid size '" + tok + "' in --dims");
    d[n++] = v;
  }
  if (n != 3) throw UsageError("--dims takes three comma-separated sizes");
  return d;
}

// ----------------------------------------------------------------- commands

struct DecomposeArgs {
  std::string input;
  std::string loss;
  std::string output = ".";
  SolveOptions solve;
};

int cmd_decompose(const DecomposeArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  check_rank(a.solve.rank);
  check_restarts(a.solve.restarts);
  const Loss loss = parse_loss(a.loss);
  const SparseTensor3 t = for_loss(load_coo_file(a.input), loss);
  const CpResult r = fit(t, loss, a.solve);

  const fs::path dir = prepare_dir(a.output);
  write_factors(dir, r.factors);
  json j = {{"loss", loss_name(loss)},
            {"rank", a.solve.rank},
            {"fit", r.fit},
            {"objective", r.objective},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"seed", a.solve.seed},
            {"restarts", a.solve.restarts},
            {"invocation", invocation(args)}};
  write_text(dir / "result.json", j.dump(2) + "\n");
  out << "loss=" << loss_name(loss) << " rank=" << a.solve.rank << " fit=" << fixed6(r.fit)
      << " iterations=" << r.iterations << '\n';
  return kOk;
}

struct CorcondiaArgs {
  std::string input;
  std::string loss;
  std::string factors;
  std::string output = ".";
  SolveOptions solve;
  std::size_t kl_iters = KlRegressionConfig{}.max_iters;
};

int cmd_corcondia(const CorcondiaArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  const Loss loss = parse_loss(a.loss);
  if (a.factors.empty() == (a.solve.rank == 0))
    throw UsageError("give exactly one of --rank and --factors");
  if (a.factors.empty()) check_rank(a.solve.rank);
  check_restarts(a.solve.restarts);
  if (a.kl_iters == 0) throw UsageError("--kl-iters must be ≥ 1");
  const SparseTensor3 t = for_loss(load_coo_file(a.input), loss);
  const FactorSet f = a.factors.empty() ? fit(t, loss, a.solve).factors : read_factors(a.factors);

  KlRegressionConfig kl;
  kl.max_iters = a.kl_iters;
  const DiagnosticResult d = corcondia(loss, t, f, kl);

  const std::size_t r = d.core.f();
  DenseMatrix core(r * r, r, std::vector<double>(d.core.values().begin(), d.core.values().end()));
  const fs::path dir = prepare_dir(a.output);
  save_matrix_csv_file((dir / "core.csv").string(), core);
  json j = {{"loss", loss_name(loss)},
            {"rank", r},
            {"c", d.c},
            {"iterations", d.iterations},
            {"trivial", d.trivial},
            {"invocation", invocation(args)}};
  write_text(dir / "diagnostic.json", j.dump(2) + "\n");
  out << fixed6(d.c) << '\n';
  return kOk;
}

struct AutotenArgs {
  std::string input;
  int fmax = 0;
  std::string strategy = "maxf";
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  std::size_t restarts = 1;
  std::string output = ".";
};

int cmd_autoten(const AutotenArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  if (a.fmax < 2) throw UsageError("fmax must be ≥ 2");
  if (a.jobs < 1) throw UsageError("jobs must be ≥ 1");
  check_restarts(a.restarts);
  const auto strategy = parse_strategy(a.strategy);
  if (!strategy) throw UsageError("--strategy must be one of sum, maxc, maxf, area");
  const SparseTensor3 t = load_coo_file(a.input);

  AutoTenConfig cfg;
  cfg.strategy = *strategy;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.restarts = a.restarts;
  const SelectionResult s = autoten_run(t, a.fmax, cfg);

  const fs::path dir = prepare_dir(a.output);
  std::ostringstream curves;
  curves.precision(17);
  curves << "rank,c_fro,c_kl\n";
  for (std::size_t n = 0; n < s.fro.ranks.size(); ++n)
    curves << s.fro.ranks[n] << ',' << s.fro.c[n] << ',' << s.kl.c[n] << '\n';
  write_text(dir / "curves.csv", curves.str());
  if (!s.no_structure) write_factors(dir, s.factors);

  json j = {{"loss", loss_name(s.loss)},
            {"f_star", s.f_star},
            {"c_star", s.c_star},
            {"strategy", strategy_name(s.strategy)},
            {"no_structure", s.no_structure},
            {"warnings", s.warnings},
            {"seed", a.seed},
            {"fmax", a.fmax},
            {"invocation", invocation(args)}};
  write_text(dir / "selection.json", j.dump(2) + "\n");
  out << "loss=" << loss_name(s.loss) << " F*=" << s.f_star << " c*=" << fixed6(s.c_star) << '\n';
  return kOk;
}

struct SynthArgs {
  std::string dims = "50,50,50";
  int rank = 3;
  std::string mode = "sparse";
  std::string noise = "none";
  std::uint64_t seed = 1;
  std::size_t nnz = 500;
  std::string output;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  check_rank(a.rank);
  SynthSpec spec;
  spec.dims = parse_dims(a.dims);
  spec.true_rank = a.rank;
  const auto mode = parse_factor_mode(a.mode);
  if (!mode) throw UsageError("--mode must be sparse or dense");
  const auto noise = parse_noise(a.noise);
  if (!noise) throw UsageError("--noise must be gauss or none");
  spec.factor_mode = *mode;
  spec.noise = *noise;
  spec.seed = a.seed;
  spec.target_nnz = a.nnz;
  const SynthResult g = generate(spec);

  const fs::path path(a.output);
  if (path.has_parent_path()) prepare_dir(path.parent_path().string());
  save_coo_file(path.string(), g.tensor);
  fs::path truth = path;
  truth.replace_filename(path.stem().string() + "_truth");
  write_factors(prepare_dir(truth.string()), g.truth);
  out << "nnz=" << g.tensor.nnz() << " truth=" << truth.string() << '\n';
  return kOk;
}

struct BenchArgs {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::string output = ".";
  std::string cells = "all";
  std::size_t jobs = 1;
  std::string external;
  double eps = 1e-6;
  bool absolute = false;
};

int cmd_bench(const BenchArgs& a, const std::vector<std::string>& args, std::ostream& out) {
  if (a.trials < 1) throw UsageError("trials must be ≥ 1");
  if (a.jobs < 1) throw UsageError("jobs must be ≥ 1");
  BenchConfig cfg;
  cfg.cells = parse_cells(a.cells);
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.jobs = a.jobs;
  cfg.eps = a.eps;
  cfg.improvement = a.absolute ? Improvement::Absolute : Improvement::Relative;
  if (!a.external.empty()) {
    std::ifstream in(a.external);
    if (!in) throw IoError("cannot open '" + a.external + "'");
    cfg.external = load_external_estimates(in);
  }
  const BenchReport report = run_benchmark(cfg);

  const fs::path dir = prepare_dir(a.output);
  json j = json::parse(report_json(report));
  j["invocation"] = invocation(args);
  write_text(dir / "report.json", j.dump(2) + "\n");
  std::ostringstream csv;
  write_report_csv(csv, report);
  write_text(dir / "report.csv", csv.str());

  for (const auto& cr : report.cells) {
    out << factor_mode_name(cr.cell.factor_mode) << ':' << noise_name(cr.cell.noise) << ':' << cr.cell.f_o;
    for (const auto& [m, st] : cr.per_method) out << ' ' << method_name(m) << '=' << fixed6(st.mean_error);
    out << '\n';
  }
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const ParseError*>(&e) || dynamic_cast<const BoundsError*>(&e) ||
      dynamic_cast<const InputError*>(&e) || dynamic_cast<const DimensionError*>(&e))
    return kUsage;
  return kNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Automatic rank and loss selection for nonnegative CP decompositions", "autoten"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "Fit one CP model");
  c_dec->add_option("--input", dec.input, "COO tensor file")->required();
  c_dec->add_option("--loss", dec.loss, "fro or kl")->required();
  c_dec->add_option("--rank", dec.solve.rank, "Number of components")->required();
  c_dec->add_option("--output", dec.output, "Output directory");
  add_solve_options(c_dec, dec.solve);

  CorcondiaArgs cc;
  auto* c_cc = app.add_subcommand("corcondia", "Core consistency of a CP model");
  c_cc->add_option("--input", cc.input, "COO tensor file")->required();
  c_cc->add_option("--loss", cc.loss, "fro or kl")->required();
  c_cc->add_option("--rank", cc.solve.rank, "Fit a model of this rank first");
  c_cc->add_option("--factors", cc.factors, "Directory with A.csv, B.csv, C.csv [weights.csv]");
  c_cc->add_option("--output", cc.output, "Output directory");
  c_cc->add_option("--kl-iters", cc.kl_iters, "Iteration cap of the KL core regression");
  add_solve_options(c_cc, cc.solve);

  AutotenArgs at;
  auto* c_at = app.add_subcommand("autoten", "Select loss and rank automatically");
  c_at->add_option("--input", at.input, "COO tensor file")->required();
  c_at->add_option("--fmax", at.fmax, "Largest rank to try")->required();
  c_at->add_option("--strategy", at.strategy, "sum, maxc, maxf or area");
  c_at->add_option("--seed", at.seed, "Random seed");
  c_at->add_option("--jobs", at.jobs, "Worker threads");
  c_at->add_option("--restarts", at.restarts, "Restarts per grid cell");
  c_at->add_option("--output", at.output, "Output directory");

  SynthArgs sy;
  auto* c_sy = app.add_subcommand("synth", "Generate a synthetic tensor");
  c_sy->add_option("--dims", sy.dims, "I,J,K");
  c_sy->add_option("--rank", sy.rank, "True rank");
  c_sy->add_option("--mode", sy.mode, "sparse or dense factors");
  c_sy->add_option("--noise", sy.noise, "gauss or none");
  c_sy->add_option("--seed", sy.seed, "Random seed");
  c_sy->add_option("--nnz", sy.nnz, "Target nonzeros in sparse mode");
  c_sy->add_option("--output", sy.output, "COO output path; truth factors go to <stem>_truth/")->required();

  BenchArgs be;
  auto* c_be = app.add_subcommand("bench", "Rank recovery benchmark against the greedy baselines");
  c_be->add_option("--trials", be.trials, "Trials per cell");
  c_be->add_option("--seed", be.seed, "Base seed");
  c_be->add_option("--output", be.output, "Output directory");
  c_be->add_option("--cells", be.cells, "all, noisy, noiseless or mode:noise:F_o,...");
  c_be->add_option("--jobs", be.jobs, "Worker threads");
  c_be->add_option("--external", be.external, "CSV of external estimates: factor_mode,noise,f_o,trial,f_est");
  c_be->add_option("--eps", be.eps, "Baseline improvement threshold");
  c_be->add_flag("--absolute", be.absolute, "Baselines use absolute instead of relative improvement");

  std::vector<const char*> argv{"autoten"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (c_dec->parsed()) return cmd_decompose(dec, args, out);
    if (c_cc->parsed()) return cmd_corcondia(cc, args, out);
    if (c_at->parsed()) return cmd_autoten(at, args, out);
    if (c_sy->parsed()) return cmd_synth(sy, out);
    if (c_be->parsed()) return cmd_bench(be, args, out);
  } catch (const std::exception& e) {
    err << "autoten: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace autoten::cli
