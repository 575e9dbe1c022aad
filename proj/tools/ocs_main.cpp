// ocs: fit / score / evaluate orthogonal-complement OOD detectors.
//
// Exit codes: 0 success, 1 runtime or data error, 2 usage error.
// Option precedence: command-line flag > --config file > OCS_* environment > default.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ocs/app.hpp"
#include "ocs/error.hpp"

namespace {

std::string env_name(const std::string& flag) {
  std::string name = "OCS_";
  for (char c : flag) name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

template <class T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& value, const std::string& help) {
  return app->add_option("--" + name, value, help)
      ->envname(env_name(name))
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
      ->capture_default_str();
}

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& help) {
  auto* sub = app.add_subcommand(name, help);
  // Consumed by expand_config() before parsing; registered so that it shows in --help.
  sub->add_option("--config", "file of `key = value` lines mirroring flag names");
  return sub;
}

std::string strip(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::FileError::Missing(path);
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    line = strip(line.substr(0, line.find('#')));
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CLI::ConversionError("config line '" + line + "' is not `key = value`");
    std::string value = strip(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    args.push_back("--" + strip(line.substr(0, eq)) + "=" + value);
  }
  return args;
}

// Places config-file entries right after the subcommand name so that any
// flag given on the command line comes later and wins (TakeLast). Options
// still unset after this fall back to their OCS_* environment variable.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < args.size();) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      from_file = read_config(args[i + 1]);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      from_file = read_config(args[i].substr(9));
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  if (!from_file.empty() && !args.empty()) args.insert(args.begin() + 1, from_file.begin(), from_file.end());
  std::reverse(args.begin(), args.end());  // CLI11 consumes a reversed vector
  return args;
}

struct PerturbationFlags {
  double epsilon = 0.1;
  double delta = 0.1;
  int t = 1;
  std::uint64_t seed = 0;
  std::string sharing = "shared";

  void add(CLI::App* app, bool with_t) {
    flag(app, "epsilon", epsilon, "rotation weight in A = ((1-eps) I + eps Q) D")->check(CLI::Range(0.0, 1.0));
    flag(app, "delta", delta, "spread of the diagonal scales D ~ U[1-delta, 1+delta]")->check(CLI::NonNegativeNumber);
    if (with_t) flag(app, "t", t, "number of perturbation steps T (0 = complement-norm fallback)")->check(CLI::NonNegativeNumber);
    flag(app, "seed", seed, "seed for every random draw");
    flag(app, "sharing", sharing, "operator sharing across samples")->check(CLI::IsMember({"shared", "per-sample"}));
  }

  ocs::PerturbationConfig resolve() const {
    ocs::PerturbationConfig cfg;
    cfg.epsilon = epsilon;
    cfg.delta = delta;
    cfg.t_steps = t;
    cfg.seed = seed;
    cfg.sharing = ocs::sharing_from_string(sharing);
    return cfg;
  }
};

std::vector<int> parse_t_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = strip(item);
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (item.empty() || used != item.size()) throw std::invalid_argument("'" + item + "' is not an integer");
    if (v < 0) throw std::invalid_argument("T values must be >= 0, got " + item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("T list is empty");
  return out;
}

std::string percent(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * v;
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ocs::app;

  CLI::App app{"Orthogonal-complement perturbation OOD detection", "ocs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  const unsigned hw_threads = std::max(1u, std::thread::hardware_concurrency());

  // synth
  SynthOptions synth;
  std::string synth_out;
  auto* synth_cmd = subcommand(app, "synth", "generate synthetic ID / OOD dataset directories");
  flag(synth_cmd, "d", synth.spec.d, "ambient dimension")->check(CLI::Range(2, 1 << 20));
  flag(synth_cmd, "k-true", synth.spec.k_true, "intrinsic ID subspace dimension")->check(CLI::PositiveNumber);
  flag(synth_cmd, "n-id", synth.spec.n_id, "ID sample count")->check(CLI::PositiveNumber);
  flag(synth_cmd, "n-ood", synth.spec.n_ood, "OOD sample count")->check(CLI::PositiveNumber);
  flag(synth_cmd, "noise", synth.spec.noise_sigma, "ID off-subspace noise scale")->check(CLI::NonNegativeNumber);
  flag(synth_cmd, "ood-scale", synth.spec.ood_scale, "OOD isotropic scale")->check(CLI::PositiveNumber);
  flag(synth_cmd, "classes", synth.spec.n_classes, "number of ID classes")->check(CLI::Range(2, 1 << 20));
  flag(synth_cmd, "seed", synth.spec.seed, "generator seed");
  flag(synth_cmd, "out", synth_out, "output directory (receives id/ and ood/)")->required();

  // fit
  FitOptions fit;
  std::string fit_data, fit_out;
  int fit_k = 0;
  double fit_tau = 0.95;
  auto* fit_cmd = subcommand(app, "fit", "fit the ID subspace model and baseline statistics");
  flag(fit_cmd, "data", fit_data, "ID dataset directory")->required();
  auto* k_opt = flag(fit_cmd, "k", fit_k, "fixed principal dimension")->check(CLI::PositiveNumber);
  auto* tau_opt = flag(fit_cmd, "variance", fit_tau, "cumulative explained-variance threshold")
                      ->check(CLI::Range(0.0, 1.0));
  k_opt->excludes(tau_opt);
  flag(fit_cmd, "seed", fit.seed, "seed for basis completion");
  flag(fit_cmd, "percentile", fit.percentile, "ReAct clamp percentile of pooled ID activations")
      ->check(CLI::Range(0.0, 100.0));
  flag(fit_cmd, "out", fit_out, "model bundle directory")->required();

  // score
  ScoreOptions score;
  std::string score_model, score_data, score_out, scorer_name = "pocs";
  PerturbationFlags score_pert;
  auto* score_cmd = subcommand(app, "score", "score a dataset directory");
  flag(score_cmd, "model", score_model, "model bundle directory")->required();
  flag(score_cmd, "data", score_data, "dataset directory")->required();
  flag(score_cmd, "scorer", scorer_name, "scorer")
      ->check(CLI::IsMember({"pocs", "msp", "energy", "mahalanobis", "react_msp", "react_energy", "react_mahalanobis",
                             "complement_norm"}));
  score_pert.add(score_cmd, true);
  flag(score_cmd, "percentile", score.scorer.percentile, "ReAct percentile (must match the bundle)")
      ->check(CLI::Range(0.0, 100.0));
  flag(score_cmd, "temperature", score.scorer.temperature, "energy temperature")->check(CLI::PositiveNumber);
  score.threads = hw_threads;
  flag(score_cmd, "threads", score.threads, "worker threads (output is independent of this)")->check(CLI::PositiveNumber);
  flag(score_cmd, "out", score_out, "output directory")->required();

  // eval
  EvalOptions eval;
  std::string eval_id, eval_ood, eval_out;
  auto* eval_cmd = subcommand(app, "eval", "compute AUROC / AUPR / FPR@95 from two score files");
  flag(eval_cmd, "id", eval_id, "ID scores.csv")->required();
  flag(eval_cmd, "ood", eval_ood, "OOD scores.csv")->required();
  flag(eval_cmd, "bins", eval.bins, "histogram bins")->check(CLI::PositiveNumber);
  flag(eval_cmd, "tpr", eval.tpr_target, "TPR target for the FPR metric")->check(CLI::Range(0.0, 1.0));
  flag(eval_cmd, "out", eval_out, "report directory")->required();

  // ablate-t
  AblateOptions ablate;
  std::string ablate_model, ablate_id, ablate_ood, ablate_out;
  PerturbationFlags ablate_pert;
  auto* ablate_cmd = subcommand(app, "ablate-t", "P-OCS metrics as a function of the step count T");
  flag(ablate_cmd, "model", ablate_model, "model bundle directory")->required();
  flag(ablate_cmd, "id", ablate_id, "ID dataset directory")->required();
  flag(ablate_cmd, "ood", ablate_ood, "OOD dataset directory")->required();
  std::string t_list = "0,1,2,3";
  flag(ablate_cmd, "t-list", t_list, "comma-separated T values")->check([](const std::string& text) {
    try {
      parse_t_list(text);
    } catch (const std::exception& e) {
      return std::string(e.what());
    }
    return std::string{};
  });
  ablate_pert.add(ablate_cmd, false);
  ablate.threads = hw_threads;
  flag(ablate_cmd, "threads", ablate.threads, "worker threads")->check(CLI::PositiveNumber);
  flag(ablate_cmd, "out", ablate_out, "output directory")->required();

  // diagnose
  DiagnoseOptions diag;
  std::string diag_model, diag_id, diag_ood, diag_out;
  auto* diag_cmd = subcommand(app, "diagnose", "explained-variance ratios on the ID basis and in the complement");
  flag(diag_cmd, "model", diag_model, "model bundle directory")->required();
  flag(diag_cmd, "id", diag_id, "ID dataset directory")->required();
  flag(diag_cmd, "ood", diag_ood, "OOD dataset directory")->required();
  flag(diag_cmd, "components", diag.n_components, "number of leading components")->check(CLI::PositiveNumber);
  flag(diag_cmd, "out", diag_out, "output directory")->required();

  try {
    app.parse(expand_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth_cmd) {
      synth.out_dir = synth_out;
      run_synth(synth);
      std::cout << "wrote " << synth.out_dir / "id" << " and " << synth.out_dir / "ood" << "\n";
    } else if (*fit_cmd) {
      fit.data_dir = fit_data;
      fit.out_dir = fit_out;
      fit.policy = k_opt->count() ? ocs::RankPolicy::fixed(fit_k) : ocs::RankPolicy::variance(fit_tau);
      if (fit.policy.mode == ocs::RankPolicy::Mode::variance_threshold && !(fit_tau > 0.0 && fit_tau < 1.0)) {
        std::cerr << "--variance must lie strictly between 0 and 1\n";
        return 2;
      }
      const auto bundle = run_fit(fit);
      std::cout << "k = " << bundle.model.k << " of d = " << bundle.model.dim()
                << ", explained variance at k = " << bundle.model.explained_variance(bundle.model.k) << "\n";
    } else if (*score_cmd) {
      score.bundle_dir = score_model;
      score.data_dir = score_data;
      score.out_dir = score_out;
      score.scorer.scorer = ocs::scorer_from_string(scorer_name);
      score.scorer.perturbation = score_pert.resolve();
      const auto records = run_score(score);
      std::cout << "scored " << records.size() << " samples with " << scorer_name << " -> " << score.out_dir << "\n";
    } else if (*eval_cmd) {
      eval.id_scores = eval_id;
      eval.ood_scores = eval_ood;
      eval.out_dir = eval_out;
      const auto r = run_eval(eval);
      std::cout << r.scorer << ": AUROC " << percent(r.auroc) << "  AUPR " << percent(r.aupr) << "  FPR@95 "
                << percent(r.fpr_at_95) << "\n";
    } else if (*ablate_cmd) {
      ablate.bundle_dir = ablate_model;
      ablate.id_dir = ablate_id;
      ablate.ood_dir = ablate_ood;
      ablate.out_dir = ablate_out;
      ablate.perturbation = ablate_pert.resolve();
      ablate.t_list = parse_t_list(t_list);
      const auto rows = run_ablate_t(ablate);
      std::cout << std::left << std::setw(6) << "T" << std::setw(10) << "AUROC" << std::setw(10) << "AUPR" << "FPR@95\n";
      for (const auto& r : rows)
        std::cout << std::left << std::setw(6) << r.t_steps << std::setw(10) << percent(r.auroc) << std::setw(10)
                  << percent(r.aupr) << percent(r.fpr_at_95) << "\n";
    } else if (*diag_cmd) {
      diag.bundle_dir = diag_model;
      diag.id_dir = diag_id;
      diag.ood_dir = diag_ood;
      diag.out_dir = diag_out;
      run_diagnose(diag);
      std::cout << "wrote variance diagnostics to " << diag.out_dir << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
