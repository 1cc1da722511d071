#include "rewardlab/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "rewardlab/csv.hpp"
#include "rewardlab/parallel.hpp"

namespace rewardlab {

int exit_code_for(SuiteErrorCode code) {
  switch (code) {
    case SuiteErrorCode::MalformedConfig:
    case SuiteErrorCode::UnknownPreset:
    case SuiteErrorCode::UndefinedScore: return kExitConfig;
    case SuiteErrorCode::WriteFailure: return kExitIo;
  }
  return kExitConfig;
}

double normalized_improvement(double ours, double best, double random_policy) {
  const double denom = std::abs(best - random_policy);
  if (denom == 0.0)
    throw SuiteError(SuiteErrorCode::UndefinedScore, "normalized improvement undefined: baseline equals random policy");
  return 100.0 * (ours - best) / denom;
}

double random_policy_baseline(std::string_view env_id, const EnvOptions& options, int episodes,
                              std::uint64_t seed) {
  if (episodes < 1) throw std::invalid_argument("episodes must be positive");
  auto env = make_environment(env_id, options);
  Rng env_rng = make_rng(seed, 0);
  Rng action_rng = make_rng(seed, 1);
  const ActionSpace space = env->action_space();
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    env->reset(env_rng);
    while (!env->done()) total += env->step(space.sample_uniform(action_rng), env_rng).reward_true;
  }
  return total / episodes;
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw SuiteError(SuiteErrorCode::MalformedConfig, what);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (true) {
    const auto comma = s.find(',');
    const auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    malformed("bad numeric value for " + key + ": '" + std::string(text) + "'");
  return value;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "suite.id", "suite.kind", "suite.seeds", "suite.workers", "suite.baseline", "suite.random_episodes",
      "env.id", "env.action_cost", "env.grid_max_steps", "env.chain.reward", "env.chain.prob", "env.gamma",
      "noise.kind", "noise.sigma", "noise.epsilon", "noise.low", "noise.high",
      "train.algo", "train.sources", "train.updates", "train.num_envs", "train.rollout", "train.gamma",
      "train.lambda", "train.clip", "train.policy_lr", "train.critic_lr", "train.reward_lr", "train.reward_buffer", "train.reward_steps", "train.reward_batch", "train.epochs",
      "train.minibatches", "train.entropy", "train.warmup_fraction", "train.window",
      "train.checkpoint_every", "train.normalize_advantages",
      "tabular.alphas", "tabular.episodes", "tabular.key_mode",
      "output.results", "output.summary"};
  return keys;
}

class Entries {
 public:
  explicit Entries(const std::map<std::string, std::string>& m) : m_(m) {}
  bool has(const std::string& k) const { return m_.count(k) != 0; }
  std::string str(const std::string& k, const std::string& def) const {
    auto it = m_.find(k);
    return it == m_.end() ? def : it->second;
  }
  template <typename T>
  T num(const std::string& k, T def) const {
    auto it = m_.find(k);
    return it == m_.end() ? def : parse_number<T>(k, it->second);
  }
  template <typename T>
  std::vector<T> list(const std::string& k, std::vector<T> def) const {
    auto it = m_.find(k);
    if (it == m_.end()) return def;
    std::vector<T> out;
    for (const auto& item : split_list(it->second)) out.push_back(parse_number<T>(k, item));
    if (out.empty()) malformed("empty list for " + k);
    return out;
  }

 private:
  const std::map<std::string, std::string>& m_;
};

}  // namespace

std::string SuiteConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : entries) out += k + '=' + v + '\n';
  return out;
}

std::string SuiteConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SuiteConfig parse_suite_config(std::string_view text) {
  SuiteConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) malformed("line " + std::to_string(line_no) + ": expected key=value");
    const std::string key(trim(body.substr(0, eq)));
    const std::string value(trim(body.substr(eq + 1)));
    if (!known_keys().count(key)) malformed("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (cfg.entries.count(key)) malformed("duplicate key '" + key + "'");
    cfg.entries[key] = value;
  }
  const Entries e(cfg.entries);

  cfg.id = e.str("suite.id", cfg.id);
  const auto kind = e.str("suite.kind", "train");
  if (kind == "train")
    cfg.kind = SuiteKind::Train;
  else if (kind == "tabular")
    cfg.kind = SuiteKind::Tabular;
  else
    malformed("suite.kind must be train or tabular");

  cfg.env = e.str("env.id", cfg.kind == SuiteKind::Tabular ? "chain5" : "pointmass");
  if (!is_known_preset(cfg.env)) throw SuiteError(SuiteErrorCode::UnknownPreset, "unknown environment preset: " + cfg.env);
  if (cfg.kind == SuiteKind::Tabular && cfg.env.rfind("chain", 0) != 0)
    throw SuiteError(SuiteErrorCode::UnknownPreset, "tabular suites need a chain preset, got " + cfg.env);
  cfg.env_options.action_cost = e.num("env.action_cost", cfg.env_options.action_cost);
  cfg.env_options.grid_max_steps = e.num("env.grid_max_steps", cfg.env_options.grid_max_steps);
  cfg.env_options.chain_reward = e.num("env.chain.reward", cfg.env_options.chain_reward);
  cfg.env_options.chain_prob = e.num("env.chain.prob", cfg.env_options.chain_prob);
  cfg.env_options.chain_gamma = e.num("env.gamma", cfg.env_options.chain_gamma);

  const auto seeds = e.list<std::uint64_t>("suite.seeds", {0});
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) malformed("suite.seeds must be distinct");
  cfg.seeds = seeds;
  cfg.workers = e.num("suite.workers", 1);
  cfg.random_episodes = e.num("suite.random_episodes", 100);
  if (cfg.workers < 1 || cfg.random_episodes < 1) malformed("suite.workers and suite.random_episodes must be positive");

  try {
    const auto noise_kind = e.str("noise.kind", "none");
    if (noise_kind == "none") {
      cfg.noise_template = NoiseModel::identity();
      cfg.noise_levels = {0.0};
    } else {
      cfg.noise_template.kind = parse_noise_kind(noise_kind);
      const std::string level_key = cfg.noise_template.kind == NoiseKind::Gaussian ? "noise.sigma" : "noise.epsilon";
      cfg.noise_levels = e.list<double>(level_key, {0.0});
    }
    cfg.noise_template.low = e.num("noise.low", -1.0);
    cfg.noise_template.high = e.num("noise.high", 1.0);
    for (double level : cfg.noise_levels) with_level(cfg.noise_template, level);

    const auto algo = parse_algorithm(e.str("train.algo", "clipped"));
    TrainConfig t = default_train_config(cfg.env, algo);
    t.env_options = cfg.env_options;
    t.updates = e.num("train.updates", t.updates);
    t.num_envs = e.num("train.num_envs", t.num_envs);
    t.rollout_length = e.num("train.rollout", t.rollout_length);
    t.advantage.gamma = e.num("train.gamma", t.advantage.gamma);
    t.advantage.lambda = e.num("train.lambda", t.advantage.lambda);
    t.advantage.clip_epsilon = e.num("train.clip", t.advantage.clip_epsilon);
    t.policy_lr = e.num("train.policy_lr", t.policy_lr);
    t.critic_lr = e.num("train.critic_lr", t.critic_lr);
    t.reward_lr = e.num("train.reward_lr", t.reward_lr);
    t.reward_buffer = e.num("train.reward_buffer", t.reward_buffer);
    t.reward_steps = e.num("train.reward_steps", t.reward_steps);
    t.reward_batch = e.num("train.reward_batch", t.reward_batch);
    t.epochs = e.num("train.epochs", t.epochs);
    t.minibatches = e.num("train.minibatches", t.minibatches);
    t.entropy_coef = e.num("train.entropy", t.entropy_coef);
    t.warmup_fraction = e.num("train.warmup_fraction", t.warmup_fraction);
    t.trailing_window = e.num("train.window", t.trailing_window);
    t.checkpoint_every = e.num("train.checkpoint_every", t.checkpoint_every);
    t.normalize_advantages = e.num("train.normalize_advantages", t.normalize_advantages ? 1 : 0) != 0;
    t.validate();
    cfg.train = t;

    if (e.has("train.sources")) {
      cfg.sources.clear();
      for (const auto& s : split_list(e.str("train.sources", ""))) cfg.sources.push_back(parse_reward_source(s));
      if (cfg.sources.empty()) malformed("train.sources is empty");
    }
    cfg.baseline = e.str("suite.baseline", "sampled");
    parse_reward_source(cfg.baseline);

    cfg.alphas = e.list<double>("tabular.alphas", cfg.alphas);
    for (double a : cfg.alphas)
      if (!(a > 0.0 && a <= 1.0)) malformed("tabular.alphas must lie in (0, 1]");
    cfg.episodes = e.num("tabular.episodes", cfg.episodes);
    if (cfg.episodes < 1) malformed("tabular.episodes must be positive");
    const auto km = e.str("tabular.key_mode", "s");
    cfg.key_mode = km == "s" ? KeyMode::S : km == "sa" ? KeyMode::SA : km == "sas" ? KeyMode::SAS
                                                                                   : (malformed("bad tabular.key_mode"), KeyMode::S);
    if (cfg.kind == SuiteKind::Tabular)
      build_chain(5, cfg.env_options.chain_reward, cfg.env_options.chain_prob, cfg.env_options.chain_gamma);
  } catch (const std::invalid_argument& ex) {
    malformed(ex.what());
  }

  cfg.results_path = e.str("output.results", "results.csv");
  cfg.summary_path = e.str("output.summary", "summary.csv");
  return cfg;
}

SuiteConfig load_suite_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw SuiteError(SuiteErrorCode::MalformedConfig, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_suite_config(ss.str());
}

std::string run_record_csv_header() {
  return "suite,config_hash,env,algo,noise,source,seed,update,episodes,mean_return,window_full,"
         "mean_abs_advantage,mean_sq_advantage,reward_loss,warmup_weight,diverged";
}

std::string to_csv_row(const RunRecord& r) {
  const auto& c = r.checkpoint;
  std::string row = r.suite + ',' + r.config_hash + ',' + r.env + ',' + r.algo + ',' + r.noise + ',' + r.source + ',' +
                    std::to_string(r.seed) + ',' + std::to_string(c.update) + ',' + std::to_string(c.episodes) + ',' +
                    format_double(c.mean_return) + ',' + (c.window_full ? "1" : "0") + ',' +
                    format_double(c.mean_abs_advantage) + ',' + format_double(c.mean_sq_advantage) + ',' +
                    format_double(c.reward_loss) + ',' + format_double(c.warmup_weight) + ',' +
                    (c.diverged ? "1" : "0");
  return row;
}

std::string summary_csv_header() {
  return "noise,level,source,seeds,diverged_seeds,seed_mean_return,baseline_return,random_return,"
         "normalized_improvement";
}

std::string to_csv_row(const SummaryRow& r) {
  return r.noise + ',' + format_double(r.level) + ',' + r.source + ',' + std::to_string(r.seeds) + ',' +
         std::to_string(r.diverged_seeds) + ',' + format_double(r.seed_mean_return) + ',' +
         format_double(r.baseline_return) + ',' + format_double(r.random_return) + ',' +
         (std::isnan(r.improvement) ? std::string("undefined") : format_double(r.improvement));
}

std::string tabular_summary_csv_header() { return "noise,alpha,source,seeds,mean_rmse,estimator_wins"; }

std::string to_csv_row(const TabularSummaryRow& r) {
  return r.noise + ',' + format_double(r.alpha) + ',' + r.source + ',' + std::to_string(r.seeds) + ',' +
         format_double(r.mean_rmse) + ',' + std::to_string(r.estimator_wins);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw SuiteError(SuiteErrorCode::WriteFailure, "cannot open " + path.string() + " for writing");
  f << text;
  f.flush();
  if (!f) throw SuiteError(SuiteErrorCode::WriteFailure, "write failed: " + path.string());
}

namespace {

SuiteOutcome run_train_suite(const SuiteConfig& cfg) {
  SuiteOutcome out;
  const std::string hash = cfg.hash();
  const std::size_t n_levels = cfg.noise_levels.size();
  const std::size_t n_sources = cfg.sources.size();
  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<TrainResult> results(n_levels * n_sources * n_seeds);

  parallel_for(results.size(), cfg.workers, [&](std::size_t cell) {
    const std::size_t li = cell / (n_sources * n_seeds);
    const std::size_t si = (cell / n_seeds) % n_sources;
    const std::size_t ki = cell % n_seeds;
    TrainConfig t = cfg.train;
    t.env = cfg.env;
    t.noise = with_level(cfg.noise_template, cfg.noise_levels[li]);
    t.source = cfg.sources[si];
    t.seed = cfg.seeds[ki];
    // Sources share the level's cell index so their environment streams pair up.
    t.cell_index = li;
    results[cell] = train_agent(t);
  });

  const double random_return = random_policy_baseline(cfg.env, cfg.env_options, cfg.random_episodes, cfg.seeds.front());
  std::size_t baseline_index = 0;
  for (std::size_t s = 0; s < n_sources; ++s)
    if (cfg.sources[s].label() == cfg.baseline) {
      baseline_index = s;
      break;
    }

  for (std::size_t li = 0; li < n_levels; ++li) {
    const std::string noise = with_level(cfg.noise_template, cfg.noise_levels[li]).label();
    std::vector<double> seed_means(n_sources, 0.0);
    std::vector<int> diverged(n_sources, 0);
    for (std::size_t si = 0; si < n_sources; ++si) {
      for (std::size_t ki = 0; ki < n_seeds; ++ki) {
        const TrainResult& r = results[(li * n_sources + si) * n_seeds + ki];
        for (const auto& c : r.curve)
          out.records.push_back({cfg.id, hash, cfg.env, algorithm_name(cfg.train.algo), noise,
                                 cfg.sources[si].label(), cfg.seeds[ki], c});
        seed_means[si] += r.final_return() / static_cast<double>(n_seeds);
        if (r.diverged) ++diverged[si];
      }
      if (diverged[si] == static_cast<int>(n_seeds)) out.exit_code = kExitDivergence;
    }
    for (std::size_t si = 0; si < n_sources; ++si) {
      SummaryRow row;
      row.noise = noise;
      row.level = cfg.noise_levels[li];
      row.source = cfg.sources[si].label();
      row.seeds = static_cast<int>(n_seeds);
      row.diverged_seeds = diverged[si];
      row.seed_mean_return = seed_means[si];
      row.baseline_return = seed_means[baseline_index];
      row.random_return = random_return;
      try {
        row.improvement = normalized_improvement(row.seed_mean_return, row.baseline_return, random_return);
      } catch (const SuiteError&) {
        row.improvement = std::numeric_limits<double>::quiet_NaN();
      }
      out.summary.push_back(row);
    }
  }

  std::string csv = run_record_csv_header() + '\n';
  for (const auto& r : out.records) csv += to_csv_row(r) + '\n';
  std::string summary = summary_csv_header() + '\n';
  for (const auto& r : out.summary) summary += to_csv_row(r) + '\n';
  write_text_file(cfg.results_path, csv);
  write_text_file(cfg.summary_path, summary);
  return out;
}

SuiteOutcome run_tabular_suite(const SuiteConfig& cfg) {
  SuiteOutcome out;
  for (double level : cfg.noise_levels) {
    TabularConfig t;
    t.preset = cfg.env;
    t.reward_value = cfg.env_options.chain_reward;
    t.reward_prob = cfg.env_options.chain_prob;
    t.gamma = cfg.env_options.chain_gamma;
    t.noise = with_level(cfg.noise_template, level);
    t.alphas = cfg.alphas;
    t.episodes = cfg.episodes;
    t.seeds = cfg.seeds;
    t.key_mode = cfg.key_mode;
    t.workers = cfg.workers;
    const auto label = t.noise.label();
    const auto records = run_tabular_experiment(t);
    // Records come in (alpha, seed, source) order with sampled first.
    for (std::size_t ai = 0; ai < t.alphas.size(); ++ai) {
      TabularSummaryRow sampled{label, t.alphas[ai], "sampled", 0, 0.0, 0};
      TabularSummaryRow estimator{label, t.alphas[ai], "estimator", 0, 0.0, 0};
      for (std::size_t si = 0; si < t.seeds.size(); ++si) {
        const auto& rs = records[(ai * t.seeds.size() + si) * 2];
        const auto& re = records[(ai * t.seeds.size() + si) * 2 + 1];
        sampled.mean_rmse += rs.mean_rmse / static_cast<double>(t.seeds.size());
        estimator.mean_rmse += re.mean_rmse / static_cast<double>(t.seeds.size());
        if (re.mean_rmse < rs.mean_rmse) ++estimator.estimator_wins;
      }
      sampled.seeds = estimator.seeds = static_cast<int>(t.seeds.size());
      sampled.estimator_wins = estimator.estimator_wins;
      out.tabular_summary.push_back(sampled);
      out.tabular_summary.push_back(estimator);
    }
    for (const auto& r : records) {
      out.tabular_records.push_back(r);
      out.tabular_noise.push_back(label);
    }
  }
  std::string csv = tabular_csv_header() + ",noise\n";
  for (std::size_t i = 0; i < out.tabular_records.size(); ++i)
    csv += to_csv_row(out.tabular_records[i]) + ',' + out.tabular_noise[i] + '\n';
  std::string summary = tabular_summary_csv_header() + '\n';
  for (const auto& r : out.tabular_summary) summary += to_csv_row(r) + '\n';
  write_text_file(cfg.results_path, csv);
  write_text_file(cfg.summary_path, summary);
  return out;
}

}  // namespace

SuiteOutcome run_suite(const SuiteConfig& cfg) {
  return cfg.kind == SuiteKind::Tabular ? run_tabular_suite(cfg) : run_train_suite(cfg);
}

SuiteOutcome run_suite(const std::filesystem::path& config_path) {
  return run_suite(load_suite_config(config_path));
}

}  // namespace rewardlab
