#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "liwuda/checkpoint.hpp"
#include "liwuda/error.hpp"
#include "liwuda/eval.hpp"
#include "liwuda/io.hpp"
#include "liwuda/ot.hpp"
#include "liwuda/synth.hpp"
#include "liwuda/training.hpp"

#ifndef LIWUDA_VERSION
#define LIWUDA_VERSION "unknown"
#endif

namespace liwuda::cli {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

Json config_json(const ExperimentConfig& c) {
  Json j = Json::object();
  const auto ini = IniFile::parse(to_ini(c));
  for (const auto& [section, keys] : ini.sections()) {
    Json s = Json::object();
    for (const auto& [k, v] : keys) s[k] = v;
    j[section] = s;
  }
  return j;
}

// Written once, before any work starts.
void write_manifest(const ExperimentConfig& c, std::string_view command,
                    const std::vector<std::string>& outputs, Json inputs = Json::object()) {
  prepare_out_dir(c.out_dir);
  Json m;
  m["command"] = command;
  m["version"] = LIWUDA_VERSION;
  m["started_at"] = utc_now();
  m["seed"] = c.seed;
  m["setting"] = std::string(to_string(c.setting));
  m["overrides"] = c.plan().overrides;
  m["inputs"] = std::move(inputs);
  m["outputs"] = outputs;
  m["config"] = config_json(c);
  const fs::path path = c.out_dir / (std::string(command) + "_manifest.json");
  io::write_file_atomic(path, m.dump(2) + "\n");
}

void log_overrides(const SettingPlan& plan, std::ostream& log) {
  for (const auto& o : plan.overrides) log << "note: " << o << '\n';
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

double permutation_oracle(const Matrix& cost) {
  const std::size_t n = cost.rows();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = INFINITY;
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost(i, perm[i]);
    best = std::min(best, s / static_cast<double>(n));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Shortest text that reads back to v; for console output.
std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string csv_text(const Matrix& m) {
  std::ostringstream o;
  ot::write_csv(o, m);
  return o.str();
}

}  // namespace

int cmd_generate(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  write_manifest(c, "generate", {kSourceFile, kTargetFile});
  const auto& d = c.data;
  const auto pair = data::generate_pair(d.split, d.shift, d.n_source, d.n_target, d.dim, c.seed);
  data::save_dataset(c.out_dir / kSourceFile, pair.source);
  data::save_dataset(c.out_dir / kTargetFile, pair.target);
  log << "wrote " << pair.source.size() << " source and " << pair.target.size()
      << " target samples to " << c.out_dir.string() << '\n';
  return kOk;
}

int cmd_train(const ExperimentConfig& c, const std::optional<fs::path>& data_dir, std::ostream& log) {
  c.validate();
  const fs::path dir = data_dir.value_or(c.out_dir);
  const fs::path source_path = dir / kSourceFile;
  const fs::path target_path = dir / kTargetFile;
  const auto source = data::load_dataset(source_path);
  const auto target = data::load_dataset(target_path);
  if (source.role != data::DomainRole::kSource) throw InputError(source_path.string() + ": not a source dataset");
  if (target.role != data::DomainRole::kTarget) throw InputError(target_path.string() + ": not a target dataset");
  if (source.dim() != target.dim()) throw InputError("source and target datasets differ in dim");
  try {
    data::check_split(c.setting, source.split);
  } catch (const ConfigError& e) {
    throw ConfigError(source_path.string() + ": " + e.what());
  }

  const auto plan = c.plan();
  Json inputs;
  inputs["source"] = source_path.string();
  inputs["target"] = target_path.string();
  write_manifest(c, "train", {kCheckpointFile, kHistoryFile}, inputs);
  log_overrides(plan, log);

  const data::UnlabeledView unlabeled(target);
  std::size_t unconverged = 0;
  const std::size_t steps_per_epoch =
      (std::max(source.size(), target.size()) + c.train.batch_size - 1) / c.train.batch_size;
  double epoch_total = 0.0;
  auto observer = [&](const train::StepRecord& r) {
    unconverged += r.converged ? 0 : 1;
    epoch_total += r.total;
    if ((r.step + 1) % steps_per_epoch == 0) {
      log << "epoch " << (r.step + 1) / steps_per_epoch << '/' << c.train.epochs << "  mean total "
          << fixed(epoch_total / static_cast<double>(steps_per_epoch)) << '\n';
      epoch_total = 0.0;
    }
  };
  const auto result = train::train(source, unlabeled, plan, c.train, observer);
  if (unconverged > 0)
    log << "warning: sinkhorn did not converge on " << unconverged << " of "
        << result.history.steps.size() << " steps\n";

  std::ostringstream history;
  result.history.write_csv(history);
  io::write_file_atomic(c.out_dir / kHistoryFile, history.str());
  nn::save_checkpoint(c.out_dir / kCheckpointFile, result.model);
  log << "wrote " << (c.out_dir / kCheckpointFile).string() << '\n';
  return kOk;
}

int cmd_eval(const ExperimentConfig& c, const EvalPaths& paths, std::ostream& log) {
  c.validate();
  const fs::path checkpoint_path = paths.checkpoint.value_or(c.out_dir / kCheckpointFile);
  const fs::path target_path = paths.dataset.value_or(c.out_dir / kTargetFile);
  const auto model = nn::load_checkpoint(checkpoint_path);
  const auto target = data::load_dataset(target_path);
  if (target.role != data::DomainRole::kTarget) throw InputError(target_path.string() + ": not a target dataset");
  if (model.input_dim() != target.dim())
    throw InputError("checkpoint expects inputs of dim " + std::to_string(model.input_dim()) +
                     " but " + target_path.string() + " has dim " + std::to_string(target.dim()));
  if (model.num_classes() != target.split.source_classes())
    throw InputError("checkpoint predicts " + std::to_string(model.num_classes()) +
                     " classes but the dataset split has " +
                     std::to_string(target.split.source_classes()) + " source classes");
  try {
    data::check_split(c.setting, target.split);
  } catch (const ConfigError& e) {
    throw ConfigError(target_path.string() + ": " + e.what());
  }

  std::optional<fs::path> source_path = paths.source;
  if (!source_path && c.eval_wasserstein && fs::exists(c.out_dir / kSourceFile))
    source_path = c.out_dir / kSourceFile;

  Json inputs;
  inputs["checkpoint"] = checkpoint_path.string();
  inputs["dataset"] = target_path.string();
  if (source_path) inputs["source"] = source_path->string();
  write_manifest(c, "eval", {kReportJson, kReportCsv}, inputs);

  const auto plan = c.plan();
  log_overrides(plan, log);
  auto report = eval::evaluate(model, target, plan);
  if (c.eval_wasserstein && source_path) {
    const auto source = data::load_dataset(*source_path);
    if (source.dim() != target.dim()) throw InputError("source and target datasets differ in dim");
    const auto gap = eval::model_wasserstein_gap(model, source.features, target.features, plan);
    report.wasserstein_uniform = gap.uniform;
    report.wasserstein_learned = gap.learned;
  }
  for (const auto& w : report.warnings) log << "warning: " << w << '\n';

  io::write_file_atomic(c.out_dir / kReportJson, eval::to_json(report, plan) + "\n");
  std::ostringstream csv;
  eval::write_csv(csv, report, plan);
  io::write_file_atomic(c.out_dir / kReportCsv, csv.str());

  log << "common_acc " << fixed(report.common_acc);
  if (report.has_unknown)
    log << "  unk_acc " << fixed(report.unk_acc) << "  h_score " << fixed(report.h_score) << "  os "
        << fixed(report.os);
  log << "  os_star " << fixed(report.os_star) << '\n';
  return kOk;
}

int cmd_ot_check(const ExperimentConfig& c, std::ostream& log) {
  c.validate();
  const auto& oc = c.ot_check;
  write_manifest(c, "ot-check", {kCostCsv, kExactCouplingCsv, kSinkhornCouplingCsv});

  Matrix cost(oc.n, oc.n);
  if (!oc.zero_cost) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> u(0.0, 2.0);
    for (double& v : cost.values()) v = u(rng);
  }
  const auto uniform = ot::ProbVector::uniform(oc.n);
  const auto exact = ot::solve_exact(cost, uniform, uniform);
  const auto sinkhorn = ot::solve_sinkhorn(cost, uniform, uniform, {oc.reg, 1e-9, oc.max_iter});
  const double oracle = permutation_oracle(cost);

  io::write_file_atomic(c.out_dir / kCostCsv, csv_text(cost));
  io::write_file_atomic(c.out_dir / kExactCouplingCsv, csv_text(exact.coupling));
  io::write_file_atomic(c.out_dir / kSinkhornCouplingCsv, csv_text(sinkhorn.coupling));

  const double exact_gap = std::abs(exact.objective - oracle);
  const double sinkhorn_gap = std::abs(sinkhorn.objective - exact.objective);
  const double exact_marg = ot::validate_coupling(exact.coupling, uniform, uniform).max_deviation();
  const double sinkhorn_marg = ot::validate_coupling(sinkhorn.coupling, uniform, uniform).max_deviation();

  struct Check {
    std::string name;
    double value;
    double tol;
  };
  const std::vector<Check> checks{
      {"exact vs permutation oracle", exact_gap, oc.exact_tol},
      {"sinkhorn vs exact", sinkhorn_gap, oc.sinkhorn_tol},
      {"exact marginal deviation", exact_marg, 1e-8},
      {"sinkhorn marginal deviation", sinkhorn_marg, 1e-6},
  };
  log << "n " << oc.n << "  seed " << c.seed << (oc.zero_cost ? "  (zero cost)" : "") << '\n'
      << "oracle   " << io::format_double(oracle) << '\n'
      << "exact    " << io::format_double(exact.objective) << '\n'
      << "sinkhorn " << io::format_double(sinkhorn.objective) << "  reg " << shortest(oc.reg)
      << "  iterations " << sinkhorn.iterations << (sinkhorn.converged ? "" : "  (not converged)")
      << '\n';
  bool ok = sinkhorn.converged;
  for (const auto& ch : checks) {
    const bool pass = ch.value <= ch.tol;
    ok = ok && pass;
    log << (pass ? "PASS " : "FAIL ") << ch.name << "  " << shortest(ch.value) << " <= "
        << shortest(ch.tol) << '\n';
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace liwuda::cli
