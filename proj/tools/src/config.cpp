#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "liwuda/error.hpp"
#include "liwuda/io.hpp"

namespace liwuda::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Reads typed values out of an IniFile, remembering which keys were consumed.
class Reader {
 public:
  explicit Reader(const IniFile& ini) : ini_(ini) {}

  template <typename F>
  void with(std::string_view section, std::string_view key, F&& apply) {
    const std::string* v = ini_.find(section, key);
    used_[std::string(section)].push_back(std::string(key));
    if (!v) return;
    const std::string field = std::string(section) + "." + std::string(key);
    try {
      apply(std::string_view(*v), field);
    } catch (const ParseError& e) {
      throw ConfigError(field + ": " + e.what());
    }
  }

  void real(std::string_view section, std::string_view key, double& out) {
    with(section, key, [&](std::string_view v, const std::string& f) { out = io::parse_double(v, f); });
  }

  void count(std::string_view section, std::string_view key, std::size_t& out) {
    with(section, key, [&](std::string_view v, const std::string& f) {
      const auto n = io::parse_int(v, f);
      if (n < 0) throw ConfigError(f + ": must be non-negative, got " + std::string(v));
      out = static_cast<std::size_t>(n);
    });
  }

  void flag(std::string_view section, std::string_view key, bool& out) {
    with(section, key, [&](std::string_view v, const std::string& f) {
      const auto s = lower(v);
      if (s == "true" || s == "1" || s == "yes")
        out = true;
      else if (s == "false" || s == "0" || s == "no")
        out = false;
      else
        throw ConfigError(f + ": expected true or false, got '" + std::string(v) + "'");
    });
  }

  void reject_unknown() const {
    for (const auto& [section, keys] : ini_.sections()) {
      const auto it = used_.find(section);
      if (it == used_.end()) throw ConfigError("unknown config section [" + section + "]");
      for (const auto& [key, value] : keys)
        if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
          throw ConfigError("unknown config key " + section + "." + key);
    }
  }

 private:
  const IniFile& ini_;
  std::map<std::string, std::vector<std::string>> used_;
};

}  // namespace

IniFile IniFile::parse(std::string_view text, std::string_view origin) {
  IniFile ini;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string where = std::string(origin) + " line " + std::to_string(line_no);
    std::string_view line = raw;
    if (const auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      ini.data_[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    if (section.empty()) throw ConfigError(where + ": key outside of any [section]");
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!ini.data_[section].emplace(key, std::string(value)).second)
      throw ConfigError(where + ": duplicate key " + section + "." + key);
  }
  return ini;
}

const std::string* IniFile::find(std::string_view section, std::string_view key) const {
  const auto s = data_.find(std::string(section));
  if (s == data_.end()) return nullptr;
  const auto k = s->second.find(std::string(key));
  return k == s->second.end() ? nullptr : &k->second;
}

bool IniFile::has(std::string_view section, std::string_view key) const {
  return find(section, key) != nullptr;
}

SettingPlan ExperimentConfig::plan() const { return plan_for_setting(setting, weights); }

void ExperimentConfig::validate() const {
  try {
    train.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("training: ") + e.what());
  }
  try {
    data::check_split(setting, data.split);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("synth_data: ") + e.what() + " (setting " +
                      std::string(to_string(setting)) + ")");
  }
  try {
    check_plan(plan());
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("liwuda_losses: ") + e.what());
  }
  if (data.dim < 2) throw ConfigError("synth_data.dim: must be at least 2");
  if (data.shift.translation.size() > data.dim)
    throw ConfigError("synth_data.translation: more components than synth_data.dim");
  if (data.shift.noise_std < 0.0) throw ConfigError("synth_data.noise_std: must be >= 0");
  if (!(data.shift.spread > 0.0)) throw ConfigError("synth_data.spread: must be positive");
  if (data.n_source < train.batch_size || data.n_target < train.batch_size)
    throw ConfigError("synth_data.n_source/n_target: fewer samples than training.batch_size");
  if (ot_check.n < 1 || ot_check.n > 8) throw ConfigError("ot_check.n: must lie in [1, 8]");
  if (!(ot_check.reg > 0.0)) throw ConfigError("ot_check.reg: must be positive");
  if (ot_check.max_iter == 0) throw ConfigError("ot_check.max_iter: must be positive");
}

ExperimentConfig from_ini(const IniFile& ini) {
  ExperimentConfig c;
  Reader r(ini);

  r.with("experiment", "setting", [&](std::string_view v, const std::string& f) {
    try {
      c.setting = parse_setting(v);
    } catch (const ConfigError& e) {
      throw ConfigError(f + ": " + e.what());
    }
  });
  r.with("experiment", "seed", [&](std::string_view v, const std::string& f) {
    const auto n = io::parse_int(v, f);
    if (n < 0) throw ConfigError(f + ": must be non-negative");
    c.seed = static_cast<std::uint64_t>(n);
  });
  r.with("experiment", "out", [&](std::string_view v, const std::string&) { c.out_dir = std::string(v); });

  auto& d = c.data;
  r.count("synth_data", "n_common", d.split.n_common);
  r.count("synth_data", "n_source_private", d.split.n_source_private);
  r.count("synth_data", "n_target_private", d.split.n_target_private);
  r.count("synth_data", "n_source", d.n_source);
  r.count("synth_data", "n_target", d.n_target);
  r.count("synth_data", "dim", d.dim);
  r.real("synth_data", "rotation", d.shift.rotation);
  r.with("synth_data", "translation", [&](std::string_view v, const std::string& f) {
    d.shift.translation.clear();
    std::istringstream in{std::string(v)};
    std::string tok;
    while (in >> tok) d.shift.translation.push_back(io::parse_double(tok, f));
  });
  r.real("synth_data", "noise_std", d.shift.noise_std);
  r.real("synth_data", "spread", d.shift.spread);

  r.real("liwuda_losses", "beta", c.weights.beta);
  r.real("liwuda_losses", "eta", c.weights.eta);
  r.real("liwuda_losses", "epsilon", c.weights.epsilon);

  auto& t = c.train;
  r.with("ot_solvers", "solver", [&](std::string_view v, const std::string& f) {
    const auto s = lower(v);
    if (s == "exact")
      t.solver.kind = ot::SolverKind::kExact;
    else if (s == "sinkhorn")
      t.solver.kind = ot::SolverKind::kSinkhorn;
    else
      throw ConfigError(f + ": expected 'exact' or 'sinkhorn', got '" + std::string(v) + "'");
  });
  r.real("ot_solvers", "reg", t.solver.sinkhorn.reg);
  r.real("ot_solvers", "tol", t.solver.sinkhorn.tol);
  r.count("ot_solvers", "max_iter", t.solver.sinkhorn.max_iter);

  r.count("training", "epochs", t.epochs);
  r.count("training", "batch_size", t.batch_size);
  r.real("training", "learning_rate", t.learning_rate);
  r.real("training", "momentum", t.momentum);
  r.real("training", "weight_decay", t.weight_decay);
  r.count("training", "hidden_width", t.hidden_width);
  r.count("training", "feature_dim", t.feature_dim);

  r.flag("eval", "wasserstein", c.eval_wasserstein);

  r.count("ot_check", "n", c.ot_check.n);
  r.real("ot_check", "reg", c.ot_check.reg);
  r.count("ot_check", "max_iter", c.ot_check.max_iter);
  r.real("ot_check", "exact_tol", c.ot_check.exact_tol);
  r.real("ot_check", "sinkhorn_tol", c.ot_check.sinkhorn_tol);
  r.flag("ot_check", "zero_cost", c.ot_check.zero_cost);

  r.reject_unknown();
  c.train.seed = c.seed;
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return from_ini(IniFile::parse(io::read_file(path), path.string()));
}

std::string to_ini(const ExperimentConfig& c) {
  auto f = [](double v) { return io::format_double(v); };
  std::ostringstream o;
  o << "[experiment]\n"
    << "setting = " << to_string(c.setting) << '\n'
    << "seed = " << c.seed << '\n'
    << "out = " << c.out_dir.string() << "\n\n";
  o << "[synth_data]\n"
    << "n_common = " << c.data.split.n_common << '\n'
    << "n_source_private = " << c.data.split.n_source_private << '\n'
    << "n_target_private = " << c.data.split.n_target_private << '\n'
    << "n_source = " << c.data.n_source << '\n'
    << "n_target = " << c.data.n_target << '\n'
    << "dim = " << c.data.dim << '\n'
    << "rotation = " << f(c.data.shift.rotation) << '\n'
    << "translation =";
  for (double v : c.data.shift.translation) o << ' ' << f(v);
  o << '\n'
    << "noise_std = " << f(c.data.shift.noise_std) << '\n'
    << "spread = " << f(c.data.shift.spread) << "\n\n";
  o << "[liwuda_losses]\n"
    << "beta = " << f(c.weights.beta) << '\n'
    << "eta = " << f(c.weights.eta) << '\n'
    << "epsilon = " << f(c.weights.epsilon) << "\n\n";
  o << "[ot_solvers]\n"
    << "solver = " << (c.train.solver.kind == ot::SolverKind::kExact ? "exact" : "sinkhorn") << '\n'
    << "reg = " << f(c.train.solver.sinkhorn.reg) << '\n'
    << "tol = " << f(c.train.solver.sinkhorn.tol) << '\n'
    << "max_iter = " << c.train.solver.sinkhorn.max_iter << "\n\n";
  o << "[training]\n"
    << "epochs = " << c.train.epochs << '\n'
    << "batch_size = " << c.train.batch_size << '\n'
    << "learning_rate = " << f(c.train.learning_rate) << '\n'
    << "momentum = " << f(c.train.momentum) << '\n'
    << "weight_decay = " << f(c.train.weight_decay) << '\n'
    << "hidden_width = " << c.train.hidden_width << '\n'
    << "feature_dim = " << c.train.feature_dim << "\n\n";
  o << "[eval]\n"
    << "wasserstein = " << (c.eval_wasserstein ? "true" : "false") << "\n\n";
  o << "[ot_check]\n"
    << "n = " << c.ot_check.n << '\n'
    << "reg = " << f(c.ot_check.reg) << '\n'
    << "max_iter = " << c.ot_check.max_iter << '\n'
    << "exact_tol = " << f(c.ot_check.exact_tol) << '\n'
    << "sinkhorn_tol = " << f(c.ot_check.sinkhorn_tol) << '\n'
    << "zero_cost = " << (c.ot_check.zero_cost ? "true" : "false") << '\n';
  return o.str();
}

}  // namespace liwuda::cli
