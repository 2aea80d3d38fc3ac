#include "checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "config.hpp"
#include "error.hpp"

namespace negscope {

namespace {

constexpr const char* kFormat = "negscope-checkpoint";
constexpr int kFormatVersion = 1;

using json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& name, const std::string& what) {
  throw Error(ErrorCode::kParse, name + ": malformed checkpoint: " + what);
}

}  // namespace

template <typename Real>
std::string checkpoint_json(const ScopeModel<Real>& model) {
  json j;
  j["format"] = kFormat;
  j["version"] = kFormatVersion;
  j["kind"] = to_string(model.kind());
  j["config"] = model_config_entries(model.config());
  const auto& enc = model.encoder();
  j["vocab"] = {{"words", enc.words().words()},
                {"tags", enc.tags().words()},
                {"labels", enc.labels().words()}};
  json tensors = json::array();
  for (const auto& e : model.params()) {
    const auto& t = *e.tensor;
    std::vector<double> values(t.values().begin(), t.values().end());
    tensors.push_back({{"name", e.name},
                       {"shape", t.shape()},
                       {"trainable", t.requires_grad()},
                       {"values", values}});
  }
  j["tensors"] = std::move(tensors);
  return j.dump() + "\n";
}

template <typename Real>
void save_checkpoint(const ScopeModel<Real>& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << checkpoint_json(model);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path);
}

template <typename Real>
std::unique_ptr<ScopeModel<Real>> checkpoint_from_json(const std::string& text,
                                                       const std::string& name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    malformed(name, e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) malformed(name, "unexpected format tag");
    if (j.at("version").get<int>() != kFormatVersion) {
      malformed(name, "unsupported version " + j.at("version").dump());
    }
    ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    auto entries = j.at("config").get<std::map<std::string, std::string>>();
    ModelConfig config = model_config_from_entries(entries);
    Vocabularies vocab;
    vocab.words = Vocabulary(j.at("vocab").at("words").get<std::vector<std::string>>());
    vocab.tags = Vocabulary(j.at("vocab").at("tags").get<std::vector<std::string>>());
    vocab.labels = Vocabulary(j.at("vocab").at("labels").get<std::vector<std::string>>());
    auto model = make_model<Real>(kind, config, std::move(vocab));

    std::size_t loaded = 0;
    for (const auto& t : j.at("tensors")) {
      auto tname = t.at("name").get<std::string>();
      if (!model->params().contains(tname)) malformed(name, "unknown tensor " + tname);
      auto& dst = model->params().at(tname);
      auto shape = t.at("shape").get<ad::Shape>();
      if (shape != dst.shape()) throw ad::ShapeError("checkpoint " + tname, shape, dst.shape());
      auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != dst.size()) malformed(name, "value count of " + tname);
      auto v = dst.values();
      for (std::size_t i = 0; i < values.size(); ++i) v[i] = static_cast<Real>(values[i]);
      dst.set_requires_grad(t.at("trainable").get<bool>());
      ++loaded;
    }
    if (loaded != model->params().size()) {
      malformed(name, std::to_string(model->params().size() - loaded) + " tensors missing");
    }
    return model;
  } catch (const json::exception& e) {
    malformed(name, e.what());
  }
}

template <typename Real>
std::unique_ptr<ScopeModel<Real>> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open checkpoint " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json<Real>(ss.str(), path);
}

template std::string checkpoint_json(const ScopeModel<float>&);
template std::string checkpoint_json(const ScopeModel<double>&);
template void save_checkpoint(const ScopeModel<float>&, const std::string&);
template void save_checkpoint(const ScopeModel<double>&, const std::string&);
template std::unique_ptr<ScopeModel<float>> checkpoint_from_json(const std::string&,
                                                                 const std::string&);
template std::unique_ptr<ScopeModel<double>> checkpoint_from_json(const std::string&,
                                                                  const std::string&);
template std::unique_ptr<ScopeModel<float>> load_checkpoint(const std::string&);
template std::unique_ptr<ScopeModel<double>> load_checkpoint(const std::string&);

}  // namespace negscope
