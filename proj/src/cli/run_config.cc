// Copyright 2026 The slmrec Authors
// SPDX-License-Identifier: Apache-2.0

#include "slmrec/cli/run_config.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "slmrec/common/errors.h"
#include "slmrec/common/random.h"
#include "slmrec/distill/block_map.h"

namespace slmrec::cli {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ConfigError(fmt::format("bad value '{}' for {}", text, key));
  }
  return value;
}

void parse_into(const std::string& key, const std::string& text, std::int64_t& out) {
  out = parse_number<std::int64_t>(key, text);
}
void parse_into(const std::string& key, const std::string& text, std::uint64_t& out) {
  out = parse_number<std::uint64_t>(key, text);
}
void parse_into(const std::string& key, const std::string& text, double& out) {
  out = parse_number<double>(key, text);
}
void parse_into(const std::string&, const std::string& text, std::string& out) {
  out = text;
}
void parse_into(const std::string& key, const std::string& text, bool& out) {
  if (text == "true" || text == "1") {
    out = true;
  } else if (text == "false" || text == "0") {
    out = false;
  } else {
    throw ConfigError(fmt::format("bad value '{}' for {} (want true/false)", text, key));
  }
}
void parse_into(const std::string& key, const std::string& text,
                std::vector<std::int64_t>& out) {
  std::vector<std::int64_t> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    values.push_back(parse_number<std::int64_t>(key, trim(item)));
  }
  out = std::move(values);
}

std::string show(std::int64_t v) { return std::to_string(v); }
std::string show(std::uint64_t v) { return std::to_string(v); }
std::string show(double v) { return fmt::format("{}", v); }
std::string show(const std::string& v) { return v; }
std::string show(bool v) { return v ? "true" : "false"; }
std::string show(const std::vector<std::int64_t>& v) { return fmt::format("{}", fmt::join(v, ",")); }

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename M>
Field field(std::string key, M RunConfig::*member) {
  return Field{key,
               [key, member](RunConfig& c, const std::string& v) {
                 parse_into(key, v, c.*member);
               },
               [member](const RunConfig& c) { return show(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> all = {
      field("profile", &RunConfig::profile),
      field("seed", &RunConfig::seed),
      field("work_dir", &RunConfig::work_dir),
      field("data.input", &RunConfig::data_input),
      field("data.synthetic", &RunConfig::data_synthetic),
      field("data.positive_threshold", &RunConfig::positive_threshold),
      field("data.min_actions", &RunConfig::min_actions),
      field("embed.dim", &RunConfig::embed_dim),
      field("embed.layers", &RunConfig::embed_layers),
      field("embed.heads", &RunConfig::embed_heads),
      field("embed.steps", &RunConfig::embed_steps),
      field("embed.batch_size", &RunConfig::embed_batch),
      field("embed.learning_rate", &RunConfig::embed_lr),
      field("model.hidden", &RunConfig::hidden),
      field("model.heads", &RunConfig::heads),
      field("model.prefix_len", &RunConfig::prefix_len),
      field("model.seq_len", &RunConfig::seq_len),
      field("model.ffn_dim", &RunConfig::ffn_dim),
      field("teacher.layers", &RunConfig::teacher_layers),
      field("student.layers", &RunConfig::student_layers),
      field("train.learning_rate", &RunConfig::learning_rate),
      field("train.adam_beta1", &RunConfig::beta1),
      field("train.adam_beta2", &RunConfig::beta2),
      field("train.adam_epsilon", &RunConfig::epsilon),
      field("train.weight_decay", &RunConfig::weight_decay),
      field("train.max_grad_norm", &RunConfig::max_grad_norm),
      field("train.lr_scheduler_type", &RunConfig::schedule),
      field("train.warmup_steps", &RunConfig::warmup_steps),
      field("train.max_steps", &RunConfig::max_steps),
      field("train.student_max_steps", &RunConfig::student_max_steps),
      field("train.epochs", &RunConfig::epochs),
      field("train.batch_size", &RunConfig::batch_size),
      field("train.eval_steps", &RunConfig::eval_every),
      field("train.logging_steps", &RunConfig::log_every),
      field("distill.lambda1", &RunConfig::lambda1),
      field("distill.lambda2", &RunConfig::lambda2),
      field("distill.lambda3", &RunConfig::lambda3),
      field("distill.blocks", &RunConfig::blocks),
      field("distill.mode", &RunConfig::kd_mode),
      field("distill.detach_teacher", &RunConfig::detach_teacher),
      field("distill.name", &RunConfig::distill_name),
      field("eval.negatives", &RunConfig::negatives),
      field("eval.batch_size", &RunConfig::eval_batch),
      field("sweep.layers", &RunConfig::sweep_layers),
      field("sweep.mode", &RunConfig::sweep_mode),
      field("theory.trials", &RunConfig::theory_trials),
      field("theory.prop1_tolerance", &RunConfig::prop1_tolerance),
      field("theory.prop2_tolerance", &RunConfig::prop2_tolerance),
  };
  return all;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      return f;
    }
  }
  throw ConfigError(fmt::format("unknown config key '{}'", key));
}

// Per-dataset optimisation settings, plus the small single-core profile.
const std::vector<std::pair<std::string, KeyValues>>& profile_table() {
  static const std::vector<std::pair<std::string, KeyValues>> table = {
      {"default", {}},
      {"cloth",
       {{"train.learning_rate", "0.003"}, {"train.max_steps", "1500"},
        {"train.eval_steps", "50"}, {"train.warmup_steps", "50"},
        {"distill.lambda3", "1.0"}}},
      {"movie",
       {{"train.learning_rate", "0.001"}, {"train.max_steps", "-1"},
        {"train.epochs", "3"}, {"train.eval_steps", "100"},
        {"train.warmup_steps", "50"}, {"distill.lambda3", "1.0"}}},
      {"music",
       {{"train.learning_rate", "0.002"}, {"train.max_steps", "800"},
        {"train.eval_steps", "100"}, {"train.warmup_steps", "100"},
        {"distill.lambda3", "0.01"}}},
      {"sport",
       {{"train.learning_rate", "0.002"}, {"train.max_steps", "2000"},
        {"train.eval_steps", "100"}, {"train.warmup_steps", "50"},
        {"distill.lambda3", "0.1"}}},
      {"desk",
       {{"model.hidden", "64"}, {"train.learning_rate", "0.001"},
        {"train.max_steps", "800"}, {"train.student_max_steps", "400"},
        {"train.eval_steps", "100"}, {"train.logging_steps", "50"},
        {"eval.negatives", "99"}, {"embed.steps", "300"}}},
  };
  return table;
}

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw ConfigError(message);
  }
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) {
      out.push_back(f.key);
    }
    return out;
  }();
  return names;
}

const std::vector<std::string>& RunConfig::profiles() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, pairs] : profile_table()) {
      out.push_back(name);
    }
    return out;
  }();
  return names;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  find_field(key).set(*this, value);
}

std::string RunConfig::get(const std::string& key) const {
  return find_field(key).get(*this);
}

KeyValues RunConfig::to_pairs() const {
  KeyValues out;
  for (const Field& f : fields()) {
    out.emplace_back(f.key, f.get(*this));
  }
  return out;
}

RunConfig RunConfig::from_profile(const std::string& name) {
  for (const auto& [profile, pairs] : profile_table()) {
    if (profile == name) {
      RunConfig c;
      c.profile = name;
      for (const auto& [k, v] : pairs) {
        c.set(k, v);
      }
      return c;
    }
  }
  throw ConfigError(fmt::format("unknown profile '{}' (known: {})", name,
                                fmt::join(profiles(), ", ")));
}

std::string RunConfig::hash() const {
  std::string text;
  for (const auto& [k, v] : to_pairs()) {
    if (k != "work_dir" && k != "distill.name") {
      text += k + "=" + v + "\n";
    }
  }
  return fmt::format("{:016x}", fnv1a64(text));
}

void RunConfig::validate() const {
  require(schedule == "cosine" || schedule == "constant",
          "train.lr_scheduler_type must be cosine or constant");
  require(kd_mode == "offline" || kd_mode == "online", "distill.mode must be offline or online");
  require(sweep_mode == "direct" || sweep_mode == "truncated",
          "sweep.mode must be direct or truncated");
  require(lambda1 >= 0 && lambda2 >= 0 && lambda3 >= 0, "distill lambdas must be >= 0");
  require(blocks >= 1, "distill.blocks must be >= 1");
  require(batch_size >= 1 && eval_batch >= 1 && embed_batch >= 1, "batch sizes must be >= 1");
  require(negatives >= 1, "eval.negatives must be >= 1");
  require(epochs >= 1, "train.epochs must be >= 1");
  require(warmup_steps >= 0, "train.warmup_steps must be >= 0");
  require(learning_rate > 0 && embed_lr > 0, "learning rates must be positive");
  require(min_actions >= 3, "data.min_actions must be >= 3");
  require(!sweep_layers.empty(), "sweep.layers must not be empty");
  for (std::int64_t l : sweep_layers) {
    require(l >= 1, "sweep.layers entries must be >= 1");
  }
  require(theory_trials >= 1, "theory.trials must be >= 1");
  require(distill_name.find_first_of("/\\") == std::string::npos && !distill_name.empty(),
          "distill.name must be a plain directory name");
  teacher_config(1).validate();
  student_config(1).validate();
  distill::make_block_map(teacher_layers, student_layers, blocks);
  model::pretrain_config(pretrain_options(), 1);
  if (data_input.empty()) {
    synthetic_spec();
  }
}

data::SyntheticSpec RunConfig::synthetic_spec() const {
  data::SyntheticSpec spec = data::SyntheticSpec::parse(data_synthetic);
  if (data_synthetic.find("seed=") == std::string::npos) {
    spec.seed = seed;
  }
  return spec;
}

model::PretrainOptions RunConfig::pretrain_options() const {
  model::PretrainOptions o;
  o.id_dim = embed_dim;
  o.layers = embed_layers;
  o.heads = embed_heads;
  o.seq_len = seq_len;
  o.steps = embed_steps;
  o.batch_size = embed_batch;
  o.learning_rate = embed_lr;
  o.seed = seed;
  return o;
}

model::ModelConfig RunConfig::teacher_config(std::int64_t num_items) const {
  model::ModelConfig c;
  c.layers = teacher_layers;
  c.hidden = hidden;
  c.heads = heads;
  c.id_dim = embed_dim;
  c.prefix_len = prefix_len;
  c.seq_len = seq_len;
  c.num_items = num_items;
  c.ffn_dim = ffn_dim;
  c.freeze_embedding = true;
  return c;
}

model::ModelConfig RunConfig::student_config(std::int64_t num_items) const {
  model::ModelConfig c = teacher_config(num_items);
  c.layers = student_layers;
  return c;
}

model::TrainOptions RunConfig::train_options(bool student) const {
  model::TrainOptions o;
  o.optim.learning_rate = learning_rate;
  o.optim.beta1 = beta1;
  o.optim.beta2 = beta2;
  o.optim.epsilon = epsilon;
  o.optim.weight_decay = weight_decay;
  o.optim.max_grad_norm = max_grad_norm;
  o.schedule = schedule == "constant" ? LrSchedule::Kind::kConstant : LrSchedule::Kind::kCosine;
  o.warmup_steps = warmup_steps;
  o.max_steps = student && student_max_steps > 0 ? student_max_steps : max_steps;
  o.epochs = epochs;
  o.batch_size = batch_size;
  o.eval_every = eval_every;
  o.seed = seed;
  return o;
}

distill::DistillConfig RunConfig::distill_config() const {
  distill::DistillConfig c;
  c.weights = {lambda1, lambda2, lambda3};
  c.blocks = blocks;
  c.mode = kd_mode == "online" ? distill::Mode::kOnline : distill::Mode::kOffline;
  c.detach_teacher = detach_teacher;
  return c;
}

eval::EvalOptions RunConfig::eval_options(data::Stage stage) const {
  eval::EvalOptions o;
  o.stage = stage;
  o.negatives = static_cast<int>(negatives);
  o.seed = seed;
  o.batch_size = eval_batch;
  o.config_hash = hash();
  return o;
}

prune::SweepMode RunConfig::sweep_kind() const {
  return sweep_mode == "direct" ? prune::SweepMode::kDirectInference
                                : prune::SweepMode::kTruncatedTraining;
}

KeyValues parse_key_values(const std::string& text, const std::string& source) {
  KeyValues out;
  std::stringstream ss(text);
  std::int64_t line_no = 0;
  for (std::string line; std::getline(ss, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(fmt::format("{}:{}: expected key=value, got '{}'", source, line_no, t));
    }
    out.emplace_back(trim(std::string_view(t).substr(0, eq)),
                     trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

RunConfig resolve_config(const KeyValues& pairs) {
  std::string profile = "default";
  for (const auto& [k, v] : pairs) {
    if (k == "profile") {
      profile = v;
    }
  }
  RunConfig config = RunConfig::from_profile(profile);
  for (const auto& [k, v] : pairs) {
    config.set(k, v);
  }
  config.validate();
  return config;
}

RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::string>& overrides) {
  KeyValues pairs;
  if (file) {
    std::ifstream in(*file);
    if (!in) {
      throw IoError("cannot read config " + file->string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    pairs = parse_key_values(buf.str(), file->string());
  }
  for (const std::string& o : overrides) {
    const KeyValues one = parse_key_values(o, "--set");
    if (one.size() != 1) {
      throw ConfigError(fmt::format("--set expects key=value, got '{}'", o));
    }
    pairs.push_back(one.front());
  }
  return resolve_config(pairs);
}

std::string write_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& [k, v] : config.to_pairs()) {
    out += k + "=" + v + "\n";
  }
  return out;
}

}  // namespace slmrec::cli
