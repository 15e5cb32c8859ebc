#include "invgcllm/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "invgcllm/hash.hpp"

namespace invgcllm {

namespace {

std::string trim(std::string s) {
  const auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && issp(s.front())) s.erase(s.begin());
  while (!s.empty() && issp(s.back())) s.pop_back();
  return s;
}

struct Field {
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
void parse_into(const std::string& raw, T& out, const std::string& where) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = raw;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (raw == "true" || raw == "1")
      out = true;
    else if (raw == "false" || raw == "0")
      out = false;
    else
      throw ConfigError(where + ": expected true/false, got '" + raw + "'");
  } else if constexpr (std::is_floating_point_v<T>) {
    char* end = nullptr;
    out = std::strtod(raw.c_str(), &end);
    if (end != raw.c_str() + raw.size() || raw.empty())
      throw ConfigError(where + ": bad number '" + raw + "'");
  } else {
    const auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), out);
    if (ec != std::errc() || p != raw.data() + raw.size())
      throw ConfigError(where + ": bad integer '" + raw + "'");
  }
}

template <typename T>
std::string render(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  } else {
    return std::to_string(v);
  }
}

const std::map<std::string, Field>& field_table() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    const auto add = [&t](const std::string& key, auto member) {
      t[key] = Field{
          [key, member](PipelineConfig& c, const std::string& raw) {
            parse_into(raw, c.*member, key);
          },
          [member](const PipelineConfig& c) { return render(c.*member); }};
    };
    add("data.path", &PipelineConfig::data_path);
    add("data.test_path", &PipelineConfig::test_path);
    add("data.format", &PipelineConfig::format);
    add("data.tsv_header", &PipelineConfig::tsv_header);
    add("data.min_rating", &PipelineConfig::min_rating);
    add("data.catalog", &PipelineConfig::catalog_path);
    add("split.kind", &PipelineConfig::split_kind);
    add("split.train_frac", &PipelineConfig::train_frac);
    add("split.test_frac", &PipelineConfig::test_frac);
    add("model.dim", &PipelineConfig::dim);
    add("model.layers", &PipelineConfig::layers);
    add("model.mask_layers", &PipelineConfig::mask_layers);
    add("model.mlp_hidden", &PipelineConfig::mlp_hidden);
    add("stage1.alpha", &PipelineConfig::alpha);
    add("stage1.beta", &PipelineConfig::beta);
    add("stage1.tau", &PipelineConfig::tau);
    add("stage1.environments", &PipelineConfig::environments);
    add("stage1.epochs", &PipelineConfig::stage1_epochs);
    add("stage1.lr", &PipelineConfig::stage1_lr);
    add("stage1.refresh_every", &PipelineConfig::refresh_every);
    add("edit.k_edit", &PipelineConfig::k_edit);
    add("edit.backend", &PipelineConfig::backend);
    add("edit.base_url", &PipelineConfig::base_url);
    add("edit.model_name", &PipelineConfig::model_name);
    add("edit.labels", &PipelineConfig::labels_path);
    add("edit.add_pairs", &PipelineConfig::add_pairs_path);
    add("edit.propose_additions", &PipelineConfig::propose_additions);
    add("edit.max_additions_per_user", &PipelineConfig::max_additions_per_user);
    add("edit.cache", &PipelineConfig::cache_path);
    add("edit.concurrency", &PipelineConfig::concurrency);
    add("train.lambda", &PipelineConfig::lambda);
    add("train.temperature", &PipelineConfig::temperature);
    add("train.batch", &PipelineConfig::batch_size);
    add("train.epochs", &PipelineConfig::train_epochs);
    add("train.lr", &PipelineConfig::learning_rate);
    add("train.bpr_only", &PipelineConfig::bpr_only);
    add("eval.k", &PipelineConfig::k_metric);
    add("eval.projection", &PipelineConfig::projection);
    add("run.seed", &PipelineConfig::seed);
    add("run.out", &PipelineConfig::out_dir);
    add("run.deterministic", &PipelineConfig::deterministic);
    return t;
  }();
  return table;
}

}  // namespace

PipelineConfig parse_config_text(const std::string& text, const std::string& origin) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ParseError(origin, line_no, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(origin, line_no, "expected 'key = value'");
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (section.empty())
      throw ParseError(origin, line_no, "key '" + key + "' outside any [section]");
    const std::string full = section + "." + key;
    const auto it = field_table().find(full);
    if (it == field_table().end())
      throw ConfigError("unknown key '" + key + "' in section [" + section + "] (" +
                        origin + ":" + std::to_string(line_no) + ")");
    it->second.set(cfg, value);
  }
  return cfg;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

std::string PipelineConfig::canonical() const {
  std::ostringstream out;
  for (const auto& [key, field] : field_table())
    out << key << "=" << field.get(*this) << "\n";
  return out.str();
}

std::string PipelineConfig::hash() const { return fnv1a_hex(canonical()); }

void PipelineConfig::validate() const {
  const auto need = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config validation failed: " + what);
  };
  need(!data_path.empty(), "data.path is required");
  format_from_name(format);  // throws on unknown tag
  const SplitKind kind = split_kind_from_name(split_kind);
  if (kind == SplitKind::Exposure)
    need(!test_path.empty(), "data.test_path is required for the exposure split");
  need(train_frac > 0 && train_frac < 1, "split.train_frac must be in (0,1)");
  need(test_frac > 0 && test_frac < 1, "split.test_frac must be in (0,1)");
  need(train_frac + test_frac <= 1.0, "split fractions must sum to at most 1");
  need(dim >= 2, "model.dim must be >= 2");
  need(layers >= 0, "model.layers must be >= 0");
  need(mask_layers >= 0, "model.mask_layers must be >= 0");
  need(alpha >= 0 && std::isfinite(alpha), "stage1.alpha must be finite and >= 0");
  need(beta >= 0 && std::isfinite(beta), "stage1.beta must be finite and >= 0");
  need(tau > 0 && tau <= 1, "stage1.tau must be in (0,1]");
  need(environments >= 1, "stage1.environments must be >= 1");
  need(stage1_epochs >= 1, "stage1.epochs must be >= 1");
  need(stage1_lr > 0, "stage1.lr must be > 0");
  need(refresh_every >= 0, "stage1.refresh_every must be >= 0");
  need(backend == "mock" || backend == "http",
       "edit.backend must be 'mock' or 'http'");
  if (backend == "http") need(!base_url.empty(), "edit.base_url is required");
  if (backend == "mock") need(!labels_path.empty(), "edit.labels is required");
  need(concurrency >= 1, "edit.concurrency must be >= 1");
  need(lambda >= 0, "train.lambda must be >= 0");
  need(temperature > 0, "train.temperature must be > 0");
  need(batch_size >= 1, "train.batch must be >= 1");
  need(train_epochs >= 1, "train.epochs must be >= 1");
  need(learning_rate > 0, "train.lr must be > 0");
  need(k_metric >= 1, "eval.k must be >= 1");
  need(!out_dir.empty(), "run.out is required");
}

}  // namespace invgcllm
