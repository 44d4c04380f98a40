#include "cli.hpp"

#include <CLI11.hpp>

#include <optional>
#include <string>

#include "commands.hpp"
#include "config.hpp"
#include "liwuda/error.hpp"

namespace liwuda::cli {
namespace {

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Experiment config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Seed (overrides the config)");
  cmd->add_option("--out", o.out, "Output directory (overrides the config)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.train.seed = *o.seed;
  }
  if (!o.out.empty()) c.out_dir = o.out;
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned instance weighting for domain adaptation with optimal transport"};
  app.require_subcommand(1);
  app.set_version_flag("--version", LIWUDA_VERSION);

  CommonOptions gen_opts, train_opts, eval_opts, check_opts;
  auto* gen = app.add_subcommand("generate", "Generate a synthetic source/target dataset pair");
  add_common(gen, gen_opts);

  auto* trn = app.add_subcommand("train", "Train on the datasets in the output directory");
  add_common(trn, train_opts);
  std::string data_dir;
  trn->add_option("--data", data_dir, "Directory holding source.txt and target.txt (default: --out)");

  auto* evl = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled target dataset");
  add_common(evl, eval_opts);
  std::string checkpoint, dataset, source;
  evl->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <out>/checkpoint.txt)");
  evl->add_option("--dataset", dataset, "Target dataset (default: <out>/target.txt)");
  evl->add_option("--source", source, "Source dataset for the Wasserstein diagnostic");

  auto* chk = app.add_subcommand("ot-check", "Compare the exact, entropic and brute-force OT solvers");
  add_common(chk, check_opts);
  std::optional<std::size_t> n;
  bool zero_cost = false;
  chk->add_option("--n", n, "Problem size (1 to 8)");
  chk->add_flag("--zero-cost", zero_cost, "Use an all-zero cost matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*gen) return cmd_generate(resolve(gen_opts), out);
    if (*trn) {
      std::optional<std::filesystem::path> dir;
      if (!data_dir.empty()) dir = data_dir;
      return cmd_train(resolve(train_opts), dir, out);
    }
    if (*evl) {
      EvalPaths paths;
      if (!checkpoint.empty()) paths.checkpoint = checkpoint;
      if (!dataset.empty()) paths.dataset = dataset;
      if (!source.empty()) paths.source = source;
      return cmd_eval(resolve(eval_opts), paths, out);
    }
    ExperimentConfig c = resolve(check_opts);
    if (n) c.ot_check.n = *n;
    if (zero_cost) c.ot_check.zero_cost = true;
    return cmd_ot_check(c, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const ParseError& e) {
    err << "malformed input: " << e.what() << '\n';
    return kIo;
  } catch (const DegenerateInputError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kIo;
  } catch (const ShapeError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kIo;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const StateError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace liwuda::cli
