#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "error.hpp"

namespace negscope {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorCode::kInvalidArgument,
              "config key '" + key + "': expected " + want + ", got '" + value + "'");
}

std::size_t as_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

std::uint64_t as_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

double as_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::string b(bool v) { return v ? "true" : "false"; }
std::string d(double v) { return fmt::format("{}", v); }

std::string init_name(InitMode m) { return m == InitMode::kZero ? "zero" : "uniform"; }

InitMode parse_init(const std::string& key, const std::string& v) {
  if (v == "uniform") return InitMode::kUniform;
  if (v == "zero") return InitMode::kZero;
  bad_value(key, v, "uniform or zero");
}

// Applies one entry; returns false for keys outside the model subset.
bool apply_model_key(ModelConfig& m, const std::string& k, const std::string& v) {
  if (k == "seed") m.seed = as_u64(k, v);
  else if (k == "hidden") m.hidden = as_size(k, v);
  else if (k == "layers") m.gcn_layers = as_size(k, v);
  else if (k == "word_dim") m.dims.word = as_size(k, v);
  else if (k == "cue_dim") m.dims.cue = as_size(k, v);
  else if (k == "pos_dim") m.dims.pos = as_size(k, v);
  else if (k == "label_dim") m.dims.label = as_size(k, v);
  else if (k == "dropout") m.output_dropout = as_double(k, v);
  else if (k == "neighbor_dropout") m.neighbor_dropout = as_double(k, v);
  else if (k == "pre_encoder") m.pre_encoder = parse_pre_encoder(v);
  else if (k == "gcn_label_mode") m.gcn_label_mode = parse_gcn_label_mode(v);
  else if (k == "coupling") m.dlstm_coupling = as_bool(k, v);
  else if (k == "use_words") m.mask.word = as_bool(k, v);
  else if (k == "use_pos") m.mask.pos = as_bool(k, v);
  else if (k == "init") m.init = parse_init(k, v);
  else if (k == "init_range") m.init_range = as_double(k, v);
  else if (k == "forget_bias") m.forget_bias = as_double(k, v);
  else return false;
  return true;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "model",      "seed",       "hidden",       "layers",         "word_dim",
      "cue_dim",    "pos_dim",    "label_dim",    "dropout",        "neighbor_dropout",
      "pre_encoder", "gcn_label_mode", "coupling", "use_words",     "use_pos",
      "init",       "init_range", "forget_bias",  "lr",             "beta1",
      "beta2",      "epsilon",    "epochs",       "patience",       "select",
      "shuffle",    "clip",       "word_vectors", "freeze_words",   "threads"};
  return k;
}

RunConfig RunConfig::parse(std::string_view text, const std::string& name) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(name, lineno, "expected key = value");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const Error& e) {
      throw ParseError(name, lineno, e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& k = keys();
  if (std::find(k.begin(), k.end(), key) == k.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + key + "'");
  }
  values_[key] = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kInvalidArgument, "config key '" + key + "' unset");
  return it->second;
}

void RunConfig::merge(const RunConfig& other) {
  for (const auto& [k, v] : other.values_) values_[k] = v;
}

Settings RunConfig::resolve() const {
  Settings s;
  for (const auto& [k, v] : values_) {
    if (k == "model") s.kind = parse_model_kind(v);
    else if (apply_model_key(s.model, k, v)) {
      if (k == "seed") s.train.seed = s.model.seed;
    }
    else if (k == "lr") s.train.learning_rate = as_double(k, v);
    else if (k == "beta1") s.train.beta1 = as_double(k, v);
    else if (k == "beta2") s.train.beta2 = as_double(k, v);
    else if (k == "epsilon") s.train.epsilon = as_double(k, v);
    else if (k == "epochs") s.train.max_epochs = as_size(k, v);
    else if (k == "patience") s.train.patience = as_size(k, v);
    else if (k == "select") s.train.select = parse_select_metric(v);
    else if (k == "shuffle") s.train.shuffle = as_bool(k, v);
    else if (k == "clip") s.train.clip_norm = as_double(k, v);
    else if (k == "word_vectors") s.word_vectors = v;
    else if (k == "freeze_words") s.freeze_words = as_bool(k, v);
    else if (k == "threads") s.threads = std::max<std::size_t>(1, as_size(k, v));
  }
  s.model.validate();
  s.train.validate();
  return s;
}

RunConfig RunConfig::from_settings(const Settings& s) {
  RunConfig cfg;
  cfg.values_["model"] = to_string(s.kind);
  for (auto& [k, v] : model_config_entries(s.model)) cfg.values_[k] = v;
  const auto& t = s.train;
  cfg.values_["lr"] = d(t.learning_rate);
  cfg.values_["beta1"] = d(t.beta1);
  cfg.values_["beta2"] = d(t.beta2);
  cfg.values_["epsilon"] = d(t.epsilon);
  cfg.values_["epochs"] = std::to_string(t.max_epochs);
  cfg.values_["patience"] = std::to_string(t.patience);
  cfg.values_["select"] = to_string(t.select);
  cfg.values_["shuffle"] = b(t.shuffle);
  cfg.values_["clip"] = d(t.clip_norm);
  cfg.values_["word_vectors"] = s.word_vectors;
  cfg.values_["freeze_words"] = b(s.freeze_words);
  cfg.values_["threads"] = std::to_string(s.threads);
  return cfg;
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& k : keys()) {
    auto it = values_.find(k);
    if (it != values_.end()) out += k + " = " + it->second + "\n";
  }
  return out;
}

std::map<std::string, std::string> model_config_entries(const ModelConfig& m) {
  return {{"seed", std::to_string(m.seed)},
          {"hidden", std::to_string(m.hidden)},
          {"layers", std::to_string(m.gcn_layers)},
          {"word_dim", std::to_string(m.dims.word)},
          {"cue_dim", std::to_string(m.dims.cue)},
          {"pos_dim", std::to_string(m.dims.pos)},
          {"label_dim", std::to_string(m.dims.label)},
          {"dropout", d(m.output_dropout)},
          {"neighbor_dropout", d(m.neighbor_dropout)},
          {"pre_encoder", to_string(m.pre_encoder)},
          {"gcn_label_mode", to_string(m.gcn_label_mode)},
          {"coupling", b(m.dlstm_coupling)},
          {"use_words", b(m.mask.word)},
          {"use_pos", b(m.mask.pos)},
          {"init", init_name(m.init)},
          {"init_range", d(m.init_range)},
          {"forget_bias", d(m.forget_bias)}};
}

ModelConfig model_config_from_entries(const std::map<std::string, std::string>& entries) {
  ModelConfig m;
  for (const auto& [k, v] : entries) {
    if (!apply_model_key(m, k, v)) {
      throw Error(ErrorCode::kParse, "unknown model config key '" + k + "'");
    }
  }
  m.validate();
  return m;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error(ErrorCode::kIo, "SHA-256 unavailable");
  }
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

void RunManifest::checksum_inputs() {
  for (const auto& [role, path] : inputs) {
    if (path.empty()) continue;
    std::ifstream probe(path);
    if (probe) checksums[path] = sha256_file(path);
  }
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = "negscope";
  j["version"] = version;
  j["command"] = command;
  j["seed"] = seed;
  j["config"] = config;
  auto pairs = [](const std::vector<std::pair<std::string, std::string>>& xs) {
    nlohmann::ordered_json o = nlohmann::ordered_json::object();
    for (const auto& [k, v] : xs) o[k] = v;
    return o;
  };
  j["inputs"] = pairs(inputs);
  j["outputs"] = pairs(outputs);
  j["checksums"] = checksums;
  return j.dump(2) + "\n";
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << manifest.to_json();
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

}  // namespace negscope
